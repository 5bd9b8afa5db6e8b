//! Per-category error tables for the adversary.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorRule {
    /// `e_l = e_inf * l / k`, signs alternating; distinct magnitudes with
    /// max exactly `e_inf`.
    #[default]
    FixedMagnitude,
    /// i.i.d. uniform on `[-e_inf, e_inf]`, resampled until every pair (and
    /// the distance to zero) clears `10 * group_tol`.
    UniformScaled,
}

/// One error row, shared by all problem rows.
pub fn error_model(rule: ErrorRule, e_inf: f64, k: usize, group_tol: f64, seed: u64) -> Result<Vec<f64>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if !(e_inf > 0.0) {
        return Err(Error::Config(
            "e_inf must be positive: zero errors collide every category with the reliable class".into(),
        ));
    }
    match rule {
        ErrorRule::FixedMagnitude => Ok((1..=k)
            .map(|l| {
                let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
                sign * e_inf * l as f64 / k as f64
            })
            .collect()),
        ErrorRule::UniformScaled => {
            let mut rng = rng_from_seed(seed);
            let min_gap = 10.0 * group_tol;
            for _ in 0..10_000 {
                let draw: Vec<f64> = (0..k).map(|_| rng.gen_range(-e_inf..=e_inf)).collect();
                let mut vals = draw.clone();
                vals.push(0.0);
                vals.sort_by(f64::total_cmp);
                if vals.windows(2).all(|w| w[1] - w[0] > min_gap) {
                    return Ok(draw);
                }
            }
            Err(Error::Config(format!(
                "could not separate {k} uniform errors by {min_gap:.1e} within |e| <= {e_inf:.1e}"
            )))
        }
    }
}
