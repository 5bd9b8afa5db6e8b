//! Exact-arithmetic analysis of the mode distribution.
//!
//! For one row held by `N` workers split into categories of sizes
//! `m_0, ..., m_k` (`m_0` reliable), a query samples `n` workers without
//! replacement. The *mode* of the sample is the category with the strictly
//! largest multiplicity, provided that multiplicity reaches the qualifying
//! size `g0`. All probabilities here are exact `BigRational`s built from
//! generating-function coefficients:
//!
//! - `a_{g,l}` = coefficient of `x^(n-g)` in the product over all categories
//!   except `l` of `sum_{j=0}^{g-1} C(m, j) x^j` — the number of ways the
//!   other categories fill the sample while all staying below `g`;
//! - `b_g` = coefficient of `x^n` over *all* categories — the number of
//!   samples in which every category stays below `g`.

mod constants;
pub mod rational;

pub use constants::{
    bound_curve, rho_factor, scan_d0, single_row_bound, theorem_constants, BoundCurve, D0Scan,
    D0ScanRow, TheoremConstants,
};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use rational::{bin_poly, binomial, coeff, poly_mul, rat_to_f64, rat_u, Rat};

/// Which mode sizes count toward the distribution sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupSizeRule {
    /// `g` from `g0 = max(ceil(n/(k+1)), ceil(n*p0))` to `n`.
    #[default]
    Qualified,
    /// `g` from `ceil(n/(k+1))` to `n - 1`: a strict plurality that is not
    /// the whole sample. Reference tables for the single-row variant follow
    /// this accounting; see `harness::reference`.
    PluralityNonUnanimous,
}

/// Category layout of one row's worker pool plus the sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryCounts {
    /// Workers sampled per use.
    n: u64,
    /// Category sizes `m_0..m_k`; rational to allow formula evaluation on
    /// fractional layouts, integral in every simulated configuration.
    sizes: Vec<Rat>,
    /// Total pool size.
    total: u64,
}

impl CategoryCounts {
    /// Integer category sizes; `sizes[0]` is the reliable category.
    pub fn new(n: u64, sizes: &[u64]) -> Result<Self> {
        if sizes.is_empty() || sizes[0] == 0 {
            return Err(Error::BadAdversary("reliable category must be non-empty".into()));
        }
        for (l, &m) in sizes.iter().enumerate().skip(1) {
            if m >= sizes[0] {
                return Err(Error::BadAdversary(format!(
                    "category {l} has {m} workers, not smaller than the {} reliable",
                    sizes[0]
                )));
            }
        }
        let total: u64 = sizes.iter().sum();
        if n == 0 || n > total {
            return Err(Error::BadAdversary(format!("sample size {n} not in 1..={total}")));
        }
        Ok(Self { n, sizes: sizes.iter().map(|&m| rat_u(m)).collect(), total })
    }

    /// Fractional sizes for raw formula evaluation (reference tables use
    /// layouts like 20/3 workers per category). Total must still be integral.
    pub fn fractional(n: u64, sizes: Vec<Rat>) -> Result<Self> {
        let total: Rat = sizes.iter().sum();
        if !total.is_integer() || !total.is_positive() {
            return Err(Error::BadAdversary(format!("total pool size {total} is not a positive integer")));
        }
        let total = u64::try_from(total.to_integer())
            .map_err(|_| Error::BadAdversary("pool size out of range".into()))?;
        if n == 0 || n > total {
            return Err(Error::BadAdversary(format!("sample size {n} not in 1..={total}")));
        }
        Ok(Self { n, sizes, total })
    }

    /// Homogeneous layout: `N` workers, `k` categories of `N*p/k` each.
    pub fn homogeneous(big_n: u64, n: u64, k: u64, p_num: u64, p_den: u64) -> Result<Self> {
        let mut sizes = Vec::with_capacity(k as usize + 1);
        let adv_total = Rat::new((big_n * p_num).into(), p_den.into());
        if k == 0 {
            if !adv_total.is_zero() {
                return Err(Error::BadAdversary("k = 0 requires p = 0".into()));
            }
            sizes.push(rat_u(big_n));
        } else {
            let per = adv_total.clone() / rat_u(k);
            sizes.push(rat_u(big_n) - adv_total);
            for _ in 0..k {
                sizes.push(per.clone());
            }
        }
        Self::fractional(n, sizes)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of adversarial categories `k`.
    pub fn k(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn sizes(&self) -> &[Rat] {
        &self.sizes
    }

    /// Integer sizes, if the layout is integral.
    pub fn integer_sizes(&self) -> Option<Vec<u64>> {
        self.sizes
            .iter()
            .map(|m| {
                if m.is_integer() {
                    u64::try_from(m.to_integer()).ok()
                } else {
                    None
                }
            })
            .collect()
    }

    /// `C(N, n)`: total number of samples.
    pub fn total_choose_n(&self) -> Rat {
        binomial(&rat_u(self.total), self.n)
    }

    /// Qualifying size `g0 = max(ceil(n / (k+1)), ceil(n * m0 / N))`.
    pub fn g0(&self) -> u64 {
        let k1 = self.sizes.len() as u64;
        let by_categories = self.n.div_ceil(k1);
        // ceil(n * m0 / N) in exact arithmetic
        let frac = rat_u(self.n) * &self.sizes[0] / rat_u(self.total);
        let by_reliable = frac.ceil().to_integer();
        let by_reliable = u64::try_from(by_reliable).unwrap_or(0);
        by_categories.max(by_reliable)
    }

    /// Inclusive `g` range for a distribution rule.
    fn g_range(&self, rule: GroupSizeRule) -> (u64, u64) {
        match rule {
            GroupSizeRule::Qualified => (self.g0(), self.n),
            GroupSizeRule::PluralityNonUnanimous => {
                (self.n.div_ceil(self.sizes.len() as u64), self.n.saturating_sub(1))
            }
        }
    }
}

/// `a_{g,l}`: ways to fill the remaining `n - g` slots from every category
/// except `l`, each contributing fewer than `g` workers.
pub fn gen_coeff_a(counts: &CategoryCounts, g: u64, excluded: usize) -> Rat {
    let n = counts.n;
    if g > n {
        return Rat::zero();
    }
    let target = (n - g) as usize;
    let mut poly = vec![Rat::one()];
    for (l, m) in counts.sizes.iter().enumerate() {
        if l == excluded {
            continue;
        }
        poly = poly_mul(&poly, &bin_poly(m, g), target);
    }
    coeff(&poly, target)
}

/// `b_g`: number of samples in which every category appears fewer than `g`
/// times.
pub fn gen_coeff_b(counts: &CategoryCounts, g: u64) -> Rat {
    let target = counts.n as usize;
    let mut poly = vec![Rat::one()];
    for m in &counts.sizes {
        poly = poly_mul(&poly, &bin_poly(m, g), target);
    }
    coeff(&poly, target)
}

/// Probability that category `l` is the strict mode with multiplicity `g`:
/// `C(m_l, g) a_{g,l} / C(N, n)`.
pub fn mode_prob(counts: &CategoryCounts, g: u64, l: usize) -> Rat {
    binomial(&counts.sizes[l], g) * gen_coeff_a(counts, g, l) / counts.total_choose_n()
}

/// Exact single-row mode distribution.
#[derive(Debug, Clone)]
pub struct ModeDistribution {
    /// `qhat[l]`: probability the mode exists and is category `l`.
    pub qhat: Vec<Rat>,
    /// `(g, q_g)`: probability a mode of size exactly `g` exists.
    pub q_g: Vec<(u64, Rat)>,
    /// Probability a mode exists: `q = sum_l qhat[l] = sum_g q_g`.
    pub q: Rat,
    /// Size range the sums ran over.
    pub g_lo: u64,
    pub g_hi: u64,
}

impl ModeDistribution {
    /// Conditional category weights `q_l = qhat[l] / q` as floats.
    pub fn conditional(&self) -> Vec<f64> {
        self.qhat
            .iter()
            .map(|h| if self.q.is_zero() { 0.0 } else { rat_to_f64(&(h / &self.q)) })
            .collect()
    }

    /// `q_0 = qhat[0] / q`: probability the chosen mode is reliable, given a
    /// mode exists.
    pub fn q0(&self) -> f64 {
        self.conditional()[0]
    }
}

/// Fill the single-row distribution under `rule`.
pub fn mode_distribution(counts: &CategoryCounts, rule: GroupSizeRule) -> ModeDistribution {
    let (lo, hi) = counts.g_range(rule);
    let k1 = counts.sizes.len();
    let mut qhat = vec![Rat::zero(); k1];
    let mut q_g = Vec::new();
    for g in lo..=hi {
        let mut row = Rat::zero();
        for l in 0..k1 {
            let p = mode_prob(counts, g, l);
            qhat[l] += &p;
            row += p;
        }
        q_g.push((g, row));
    }
    let q = qhat.iter().sum();
    ModeDistribution { qhat, q_g, q, g_lo: lo, g_hi: hi }
}

/// Joint probability that row `t` carries the strict largest qualifying mode
/// among `rows`, in category `l` with multiplicity `g`:
/// `P(t, l, g) = mode_prob(t, g, l) * prod_{s != t} b^s_g / C(N_s, n_s)`.
pub fn joint_mode_prob(rows: &[&CategoryCounts], t: usize, l: usize, g: u64) -> Rat {
    let mut p = mode_prob(rows[t], g, l);
    if p.is_zero() {
        return p;
    }
    for (s, counts) in rows.iter().enumerate() {
        if s == t {
            continue;
        }
        p *= gen_coeff_b(counts, g) / counts.total_choose_n();
    }
    p
}

/// `P(t, g) = sum_l P(t, l, g)`.
pub fn joint_row_prob(rows: &[&CategoryCounts], t: usize, g: u64) -> Rat {
    (0..rows[t].sizes.len()).map(|l| joint_mode_prob(rows, t, l, g)).sum()
}

/// Classify one sample by the strict-mode rule the analysis uses: the
/// category with strictly largest multiplicity, if that multiplicity is at
/// least `g0`. Returns `(category, multiplicity)` or `None`.
pub fn classify_strict_mode(sample_counts: &[u64], g0: u64) -> Option<(usize, u64)> {
    let mut best = 0usize;
    let mut best_count = 0u64;
    let mut tied = false;
    for (l, &c) in sample_counts.iter().enumerate() {
        if c > best_count {
            best = l;
            best_count = c;
            tied = false;
        } else if c == best_count && c > 0 {
            tied = true;
        }
    }
    if tied || best_count < g0 {
        None
    } else {
        Some((best, best_count))
    }
}
