//! Convergence constants and error bounds for the multi-row method.
//!
//! With `d0` rows per iteration, the iterate contracts in expectation by
//! `alpha = 1 - Q_min (d0/d1) sigma_min^2(A~)` and accumulates adversarial
//! error weighted by per-row `beta_t`. Both constants are built from the
//! single-row mode distribution and the cross-row competition factors
//! `b_g / C(N, n)`, evaluated in exact rational arithmetic; floats appear
//! only at the reporting boundary.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::rational::{binomial_int, rat_to_f64, Rat};
use super::{gen_coeff_b, mode_prob, CategoryCounts};
use crate::error::{Error, Result};

/// Exact convergence constants for one `(d1, d0)` setting.
#[derive(Debug, Clone)]
pub struct TheoremConstants {
    pub d1: usize,
    pub d0: usize,
    pub sigma_min_tilde: f64,
    /// Worst-case qualifying-mode mass over row choices and companion sets.
    pub q_min: Rat,
    /// Per-row error weights (worst-category form).
    pub beta: Vec<Rat>,
    /// Per row class: the largest value of `sum_g Q_max(t, g, tau)` over
    /// companion compositions. Inequality checks use this.
    pub q_max_sum: Vec<Rat>,
    /// Contraction factor; meaningful only when `0 < alpha < 1`.
    pub alpha: f64,
    /// Simplified homogeneous forms (single row class): `Q` and
    /// `beta = (d0/d1) Q`.
    pub homogeneous_q: Option<Rat>,
    pub homogeneous_beta: Option<Rat>,
}

impl TheoremConstants {
    pub fn alpha_in_range(&self) -> bool {
        self.alpha > 0.0 && self.alpha < 1.0
    }

    pub fn beta_f64(&self) -> Vec<f64> {
        self.beta.iter().map(rat_to_f64).collect()
    }
}

/// Per-class quantities reused across compositions.
struct ClassTables {
    /// Multiplicity of this class among the d1 rows.
    mult: usize,
    /// `q_g` for g in `g0..=n` (sum over categories).
    q_g: Vec<(u64, Rat)>,
    /// Worst-category numerator `max_l C(m_l, g) a_{g,l} / C(N, n)` per g.
    q_max_g: Vec<(u64, Rat)>,
    /// Competition factor `b_g / C(N, n)` for g in `0..=n_max`.
    rho: Vec<Rat>,
}

fn class_tables(counts: &CategoryCounts, mult: usize, g_max: u64) -> ClassTables {
    let g0 = counts.g0();
    let n = counts.n();
    let cn = counts.total_choose_n();
    let single_category = counts.k() == 0;
    let mut q_g = Vec::new();
    let mut q_max_g = Vec::new();
    for g in g0..=n {
        let mut sum = Rat::zero();
        let mut max = Rat::zero();
        for l in 0..counts.sizes().len() {
            let p = mode_prob(counts, g, l);
            if p > max {
                max = p.clone();
            }
            sum += p;
        }
        q_g.push((g, sum));
        q_max_g.push((g, max));
    }
    let mut rho = Vec::with_capacity(g_max as usize + 1);
    for g in 0..=g_max {
        // A single-category pool always returns a unanimous sample of size
        // n; competing against it is a tie among certainties, which the
        // classical reduction resolves as a free projection. Treat its
        // factor as 1 at g = n so k = 0 collapses to plain Kaczmarz.
        if single_category && g == n {
            rho.push(Rat::one());
        } else if g > n {
            rho.push(Rat::one());
        } else {
            rho.push(gen_coeff_b(counts, g) / cn.clone());
        }
    }
    ClassTables { mult, q_g, q_max_g, rho }
}

/// Enumerate compositions of `d0 - 1` companions over the row classes,
/// with class `t_class` having one row reserved for the target.
fn compositions(avail: &[usize], want: usize) -> Vec<Vec<usize>> {
    fn rec(avail: &[usize], idx: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if idx == avail.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let top = avail[idx].min(left);
        for take in 0..=top {
            cur.push(take);
            rec(avail, idx + 1, left - take, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(avail, 0, want, &mut Vec::new(), &mut out);
    out
}

/// Number of row subsets realizing a composition: `prod C(avail_i, c_i)`.
fn composition_count(avail: &[usize], comp: &[usize]) -> BigInt {
    let mut acc = BigInt::one();
    for (&a, &c) in avail.iter().zip(comp) {
        acc *= binomial_int(a as u64, c as u64);
    }
    acc
}

/// Exact convergence constants from per-class worker layouts.
///
/// `row_classes` lists `(layout, multiplicity)` with multiplicities summing
/// to `d1`. Enumeration over companion sets is by class composition, so it
/// is exact for any class structure and cheap when classes are few (the
/// homogeneous experiments have one).
pub fn theorem_constants(
    d1: usize,
    d0: usize,
    row_classes: &[(CategoryCounts, usize)],
    sigma_min_tilde: f64,
) -> Result<TheoremConstants> {
    if d0 < 1 || d0 > d1 {
        return Err(Error::Config(format!("d0 = {d0} not in 1..={d1}")));
    }
    let total_rows: usize = row_classes.iter().map(|(_, m)| m).sum();
    if total_rows != d1 {
        return Err(Error::Config(format!(
            "row class multiplicities sum to {total_rows}, expected d1 = {d1}"
        )));
    }
    let g_max = row_classes.iter().map(|(c, _)| c.n()).max().unwrap_or(0);
    let tables: Vec<ClassTables> =
        row_classes.iter().map(|(c, m)| class_tables(c, *m, g_max)).collect();

    let choose_d1_d0 = Rat::from_integer(binomial_int(d1 as u64, d0 as u64));
    let mut q_min: Option<Rat> = None;
    let mut beta_per_class = vec![Rat::zero(); tables.len()];
    let mut q_max_sum_per_class = vec![Rat::zero(); tables.len()];

    for (tc, target) in tables.iter().enumerate() {
        if target.mult == 0 {
            continue;
        }
        let mut avail: Vec<usize> = tables.iter().map(|t| t.mult).collect();
        avail[tc] -= 1;
        let mut beta_acc = Rat::zero();
        for comp in compositions(&avail, d0 - 1) {
            let count = composition_count(&avail, &comp);
            if count.is_zero() {
                continue;
            }
            // prod over companions of rho_s(g), shared by all g via closure
            let prod_rho = |g: u64| -> Rat {
                let mut acc = Rat::one();
                for (ci, &c) in comp.iter().enumerate() {
                    for _ in 0..c {
                        acc *= tables[ci].rho[g as usize].clone();
                    }
                }
                acc
            };
            let mut q_sum = Rat::zero();
            let mut qmax_sum = Rat::zero();
            for (g, qg) in &target.q_g {
                let pr = prod_rho(*g);
                q_sum += qg * &pr;
                let qmax = target.q_max_g.iter().find(|(gg, _)| gg == g).map(|(_, v)| v.clone());
                qmax_sum += qmax.unwrap_or_else(Rat::zero) * pr;
            }
            if q_min.as_ref().map(|m| q_sum < *m).unwrap_or(true) {
                q_min = Some(q_sum);
            }
            if qmax_sum > q_max_sum_per_class[tc] {
                q_max_sum_per_class[tc] = qmax_sum.clone();
            }
            beta_acc += Rat::from_integer(count) * qmax_sum;
        }
        beta_per_class[tc] = beta_acc / choose_d1_d0.clone();
    }

    let q_min = q_min.unwrap_or_else(Rat::zero);
    let alpha =
        1.0 - rat_to_f64(&q_min) * (d0 as f64 / d1 as f64) * sigma_min_tilde * sigma_min_tilde;

    // expand per-row beta in row order (class blocks)
    let mut beta = Vec::with_capacity(d1);
    for (tc, t) in tables.iter().enumerate() {
        for _ in 0..t.mult {
            beta.push(beta_per_class[tc].clone());
        }
    }

    let (homogeneous_q, homogeneous_beta) = if row_classes.len() == 1 {
        let q = q_min.clone();
        let b = &q * Rat::new(BigInt::from(d0), BigInt::from(d1));
        (Some(q), Some(b))
    } else {
        (None, None)
    };

    Ok(TheoremConstants {
        d1,
        d0,
        sigma_min_tilde,
        q_min,
        beta,
        q_max_sum: q_max_sum_per_class,
        alpha,
        homogeneous_q,
        homogeneous_beta,
    })
}

/// Evaluated error bound at requested iterations.
#[derive(Debug, Clone)]
pub struct BoundCurve {
    pub iters: Vec<u64>,
    pub values: Vec<f64>,
    /// Geometric-series limit of the error term.
    pub asymptote: f64,
}

/// Multi-row bound: `alpha^i x0 + (1 - alpha^(i+1)) / (1 - alpha) * sum_t
/// beta_t e~_t^2`.
pub fn bound_curve(
    constants: &TheoremConstants,
    x0_err_sq: f64,
    err_norms_sq: &[f64],
    iters: &[u64],
) -> Result<BoundCurve> {
    let alpha = constants.alpha;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    if err_norms_sq.len() != constants.d1 {
        return Err(Error::Config(format!(
            "need one error norm per row: got {}, d1 = {}",
            err_norms_sq.len(),
            constants.d1
        )));
    }
    let err_mass: f64 = constants
        .beta
        .iter()
        .zip(err_norms_sq)
        .map(|(b, e)| rat_to_f64(b) * e)
        .sum();
    let values = iters
        .iter()
        .map(|&i| {
            let ai = alpha.powi(i as i32);
            ai * x0_err_sq + (1.0 - ai * alpha) / (1.0 - alpha) * err_mass
        })
        .collect();
    Ok(BoundCurve { iters: iters.to_vec(), values, asymptote: err_mass / (1.0 - alpha) })
}

/// Single-row norm-weighted bound: `alpha^(i+1) x0 +
/// (1 - alpha^(i+1)) / (1 - alpha) * (1/frob_sq) sum_l q_l |e_l|^2`, with
/// `alpha = 1 - sigma_min^2(A) / frob_sq` and `q_l` the conditional mode
/// weights of the adversarial categories.
pub fn single_row_bound(
    sigma_min_sq: f64,
    frob_sq: f64,
    q_cond: &[f64],
    e_col_norms_sq: &[f64],
    x0_err_sq: f64,
    iters: &[u64],
) -> Result<BoundCurve> {
    let alpha = 1.0 - sigma_min_sq / frob_sq;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    if e_col_norms_sq.len() + 1 != q_cond.len() {
        return Err(Error::Config(format!(
            "expected {} adversarial column norms, got {}",
            q_cond.len() - 1,
            e_col_norms_sq.len()
        )));
    }
    let err_mass: f64 = q_cond
        .iter()
        .skip(1)
        .zip(e_col_norms_sq)
        .map(|(q, e)| q * e / frob_sq)
        .sum();
    let values = iters
        .iter()
        .map(|&i| {
            let a1 = alpha.powi(i as i32 + 1);
            a1 * x0_err_sq + (1.0 - a1) / (1.0 - alpha) * err_mass
        })
        .collect();
    Ok(BoundCurve { iters: iters.to_vec(), values, asymptote: err_mass / (1.0 - alpha) })
}

/// One row of the `d0` scan.
#[derive(Debug, Clone)]
pub struct D0ScanRow {
    pub d0: usize,
    pub q: Rat,
    pub alpha: f64,
    /// Sign of the expression the derivative of `alpha(d0)` is proportional
    /// to (negative means increasing d0 still helps).
    pub deriv_sign: i8,
}

#[derive(Debug, Clone)]
pub struct D0Scan {
    pub rows: Vec<D0ScanRow>,
    /// Best integer d0 in the scanned range (smallest alpha).
    pub best_d0: usize,
    /// Closed-form continuous minimizer, available when g0 = n.
    pub continuous_minimizer: Option<f64>,
}

/// Scan `alpha(d0)` over a homogeneous configuration.
pub fn scan_d0(
    counts: &CategoryCounts,
    d1: usize,
    sigma_min_tilde: f64,
    d0_range: std::ops::RangeInclusive<usize>,
) -> Result<D0Scan> {
    let g0 = counts.g0();
    let n = counts.n();
    let cn = counts.total_choose_n();
    let qg: Vec<(u64, Rat)> = (g0..=n)
        .map(|g| {
            let s: Rat = (0..counts.sizes().len()).map(|l| mode_prob(counts, g, l)).sum();
            (g, s)
        })
        .collect();
    let rho: Vec<(u64, Rat)> = (g0..=n)
        .map(|g| {
            if counts.k() == 0 && g == n {
                (g, Rat::one())
            } else {
                (g, gen_coeff_b(counts, g) / cn.clone())
            }
        })
        .collect();

    let mut rows = Vec::new();
    for d0 in d0_range {
        if d0 < 1 || d0 > d1 {
            return Err(Error::Config(format!("d0 = {d0} not in 1..={d1}")));
        }
        let mut q = Rat::zero();
        let mut deriv = 0.0f64;
        for ((g, qv), (_, rv)) in qg.iter().zip(&rho) {
            let mut pw = Rat::one();
            for _ in 1..d0 {
                pw *= rv.clone();
            }
            q += qv * &pw;
            let rf = rat_to_f64(rv);
            if rf > 0.0 {
                deriv -= rat_to_f64(qv) * (1.0 + d0 as f64 * rf.ln()) * rf.powi(d0 as i32 - 1);
            }
            let _ = g;
        }
        let alpha = 1.0 - rat_to_f64(&q) * (d0 as f64 / d1 as f64) * sigma_min_tilde * sigma_min_tilde;
        rows.push(D0ScanRow { d0, q, alpha, deriv_sign: sign_of(deriv) });
    }
    let best_d0 = rows
        .iter()
        .min_by(|a, b| a.alpha.partial_cmp(&b.alpha).unwrap())
        .map(|r| r.d0)
        .unwrap_or(1);
    let continuous_minimizer = if g0 == n {
        let rho_n = rat_to_f64(&rho.last().unwrap().1);
        (rho_n > 0.0 && rho_n < 1.0).then(|| -1.0 / rho_n.ln())
    } else {
        None
    };
    Ok(D0Scan { rows, best_d0, continuous_minimizer })
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// `b_g / C(N, n)` as a float, exposed for the scan's closed-form check.
pub fn rho_factor(counts: &CategoryCounts, g: u64) -> f64 {
    rat_to_f64(&(gen_coeff_b(counts, g) / counts.total_choose_n()))
}
