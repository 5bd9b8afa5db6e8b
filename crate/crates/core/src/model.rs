//! Problem instances, adversary configuration, and worker populations.

use nalgebra::DMatrix;
use rand::seq::index::sample as index_sample;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Relative tolerance for the consistency invariant `A x* = b`.
pub const CONSISTENCY_TOL: f64 = 1e-10;

/// A dense consistent linear system with cached row geometry.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    d1: usize,
    d2: usize,
    /// Row-major `d1 x d2`.
    a: Vec<f64>,
    b: Vec<f64>,
    x_star: Option<Vec<f64>>,
    row_norms_sq: Vec<f64>,
    sigma_min_tilde: f64,
    frob_sq: f64,
}

impl LinearProblem {
    /// Validate and finish a problem from raw parts. Computes row norms,
    /// the Frobenius norm, and the smallest singular value of the
    /// row-normalized matrix.
    pub fn new(d1: usize, d2: usize, a: Vec<f64>, b: Vec<f64>, x_star: Option<Vec<f64>>) -> Result<Self> {
        if d2 == 0 || d1 < d2 {
            return Err(Error::InvalidDimensions { d1, d2 });
        }
        assert_eq!(a.len(), d1 * d2);
        assert_eq!(b.len(), d1);
        let mut row_norms_sq = Vec::with_capacity(d1);
        let mut frob_sq = 0.0;
        for r in 0..d1 {
            let nrm: f64 = a[r * d2..(r + 1) * d2].iter().map(|v| v * v).sum();
            if !(nrm.is_finite() && nrm > 0.0) {
                return Err(Error::ZeroRow { row: r });
            }
            frob_sq += nrm;
            row_norms_sq.push(nrm);
        }
        if let Some(x) = &x_star {
            assert_eq!(x.len(), d2);
            let mut worst = 0.0f64;
            let mut b_inf = 1.0f64;
            for r in 0..d1 {
                let dot: f64 = a[r * d2..(r + 1) * d2].iter().zip(x).map(|(c, v)| c * v).sum();
                worst = worst.max((dot - b[r]).abs());
                b_inf = b_inf.max(b[r].abs());
            }
            if worst > CONSISTENCY_TOL * b_inf {
                return Err(Error::InconsistentSystem { residual: worst });
            }
        }
        // smallest singular value of the row-normalized matrix
        let mut tilde = DMatrix::<f64>::zeros(d1, d2);
        for r in 0..d1 {
            let inv = row_norms_sq[r].sqrt().recip();
            for c in 0..d2 {
                tilde[(r, c)] = a[r * d2 + c] * inv;
            }
        }
        let svals = tilde.singular_values();
        let sigma_min_tilde = svals.iter().cloned().fold(f64::INFINITY, f64::min);
        debug_assert!(
            sigma_min_tilde * sigma_min_tilde <= d1 as f64 / d2 as f64 + 1e-6,
            "sigma_min^2 exceeds d1/d2"
        );
        Ok(Self { d1, d2, a, b, x_star, row_norms_sq, sigma_min_tilde, frob_sq })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.a[r * self.d2..(r + 1) * self.d2]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn x_star(&self) -> Option<&[f64]> {
        self.x_star.as_deref()
    }

    pub fn row_norm_sq(&self, r: usize) -> f64 {
        self.row_norms_sq[r]
    }

    pub fn row_norms_sq(&self) -> &[f64] {
        &self.row_norms_sq
    }

    pub fn sigma_min_tilde(&self) -> f64 {
        self.sigma_min_tilde
    }

    /// Smallest singular value of `A` itself (not row-normalized).
    pub fn sigma_min(&self) -> f64 {
        let m = DMatrix::from_row_slice(self.d1, self.d2, &self.a);
        m.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn frob_sq(&self) -> f64 {
        self.frob_sq
    }

    pub fn dot_row(&self, r: usize, x: &[f64]) -> f64 {
        self.row(r).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `|A x - b|_2`.
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        (0..self.d1)
            .map(|r| {
                let d = self.dot_row(r, x) - self.b[r];
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Provenance snapshot (no matrix payload).
    pub fn snapshot(&self, source: &str, seed: Option<u64>) -> ProblemSnapshot {
        ProblemSnapshot {
            source: source.to_string(),
            d1: self.d1,
            d2: self.d2,
            seed,
            frob_sq: self.frob_sq,
            sigma_min_tilde: self.sigma_min_tilde,
            consistent: self.x_star.is_some(),
        }
    }
}

/// Self-describing problem provenance, serialized into run manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSnapshot {
    pub source: String,
    pub d1: usize,
    pub d2: usize,
    pub seed: Option<u64>,
    pub frob_sq: f64,
    pub sigma_min_tilde: f64,
    pub consistent: bool,
}

/// Gaussian problem with unit-norm rows and `b = A x*`.
pub fn make_synthetic_problem(d1: usize, d2: usize, seed: u64) -> Result<LinearProblem> {
    if d2 == 0 || d1 < d2 {
        return Err(Error::InvalidDimensions { d1, d2 });
    }
    let mut rng = crate::rng::rng_from_seed(seed);
    let mut a = vec![0.0f64; d1 * d2];
    for r in 0..d1 {
        loop {
            let row = &mut a[r * d2..(r + 1) * d2];
            for v in row.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let nrm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nrm > 1e-12 {
                row.iter_mut().for_each(|v| *v /= nrm);
                break;
            }
        }
    }
    let x_star: Vec<f64> = (0..d2).map(|_| rng.sample(StandardNormal)).collect();
    let b: Vec<f64> = (0..d1)
        .map(|r| a[r * d2..(r + 1) * d2].iter().zip(&x_star).map(|(c, v)| c * v).sum())
        .collect();
    LinearProblem::new(d1, d2, a, b, Some(x_star))
}

/// Load a numeric CSV as the coefficient matrix and synthesize a consistent
/// right-hand side from a Gaussian `x*`. A non-numeric first row is treated
/// as a header. `normalize` rescales every row to unit Euclidean norm.
pub fn load_csv_problem(path: &std::path::Path, normalize: bool, seed: u64) -> Result<LinearProblem> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ridx, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(record.len());
        let mut failed_col = None;
        for (cidx, field) in record.iter().enumerate() {
            match field.trim().parse::<f64>() {
                Ok(v) => row.push(v),
                Err(_) => {
                    failed_col = Some(cidx);
                    break;
                }
            }
        }
        match failed_col {
            None => rows.push(row),
            Some(col) => {
                // auto-detected header: the first row may be non-numeric
                if ridx == 0 && rows.is_empty() {
                    continue;
                }
                return Err(Error::CsvParse {
                    row: ridx,
                    col,
                    msg: format!("`{}` is not numeric", record.get(col).unwrap_or("")),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::CsvParse { row: 0, col: 0, msg: "no numeric rows".into() });
    }
    let d2 = rows[0].len();
    for (ridx, row) in rows.iter().enumerate() {
        if row.len() != d2 {
            return Err(Error::CsvParse {
                row: ridx,
                col: row.len().min(d2),
                msg: format!("expected {d2} columns, found {}", row.len()),
            });
        }
    }
    let d1 = rows.len();
    let mut a = Vec::with_capacity(d1 * d2);
    for (ridx, row) in rows.iter().enumerate() {
        if normalize {
            let nrm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(nrm.is_finite() && nrm > 0.0) {
                return Err(Error::ZeroRow { row: ridx });
            }
            a.extend(row.iter().map(|v| v / nrm));
        } else {
            a.extend_from_slice(row);
        }
    }
    let mut rng = crate::rng::rng_from_seed(seed);
    let x_star: Vec<f64> = (0..d2).map(|_| rng.sample(StandardNormal)).collect();
    let b: Vec<f64> = (0..d1)
        .map(|r| a[r * d2..(r + 1) * d2].iter().zip(&x_star).map(|(c, v)| c * v).sum())
        .collect();
    LinearProblem::new(d1, d2, a, b, Some(x_star))
}

/// Uniform `d0`-subset of row indices.
pub fn sample_rows(d1: usize, d0: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if d0 == 0 || d0 > d1 {
        return Err(Error::NotEnoughRows { requested: d0, available: d1 });
    }
    Ok(index_sample(rng, d1, d0).into_vec())
}

/// Adversary layout shared by all rows, or varying per row.
///
/// Category sizes are stored as integer worker counts; fractions are
/// derived, which keeps `N_r * p_{r,l}` integral by construction.
#[derive(Debug, Clone)]
pub struct AdversaryConfig {
    /// `counts[r][l]`: number of row-`r` workers in category `l`
    /// (`l = 0` reliable). One entry per row.
    counts: Vec<Vec<u64>>,
    /// Workers sampled per row per use.
    n_r: Vec<u64>,
    /// `e_table[r][l-1]`: error offset of category `l` on row `r`.
    e_table: Vec<Vec<f64>>,
}

impl AdversaryConfig {
    /// Same layout and error row for every row of the problem.
    pub fn uniform(d1: usize, counts: &[u64], n_r: u64, e_row: &[f64]) -> Result<Self> {
        Self::validate_counts(counts, n_r)?;
        if e_row.len() + 1 != counts.len() {
            return Err(Error::BadAdversary(format!(
                "{} error entries for {} adversarial categories",
                e_row.len(),
                counts.len() - 1
            )));
        }
        Ok(Self {
            counts: vec![counts.to_vec(); d1],
            n_r: vec![n_r; d1],
            e_table: vec![e_row.to_vec(); d1],
        })
    }

    /// Per-row layouts.
    pub fn per_row(counts: Vec<Vec<u64>>, n_r: Vec<u64>, e_table: Vec<Vec<f64>>) -> Result<Self> {
        if counts.len() != n_r.len() || counts.len() != e_table.len() || counts.is_empty() {
            return Err(Error::BadAdversary("per-row arrays must have equal non-zero length".into()));
        }
        for ((c, &n), e) in counts.iter().zip(&n_r).zip(&e_table) {
            Self::validate_counts(c, n)?;
            if e.len() + 1 != c.len() {
                return Err(Error::BadAdversary("error row length mismatch".into()));
            }
        }
        Ok(Self { counts, n_r, e_table })
    }

    /// Build from exact fractions `p_{r,l} = num/den`; rejects layouts where
    /// `N_r * p_{r,l}` is not an integer.
    pub fn from_fractions(d1: usize, big_n: u64, n_r: u64, fractions: &[(u64, u64)], e_row: &[f64]) -> Result<Self> {
        let mut counts = Vec::with_capacity(fractions.len() + 1);
        let mut adv_total = 0u64;
        for &(num, den) in fractions {
            if den == 0 || (big_n * num) % den != 0 {
                return Err(Error::NonIntegralCategory { num, den, n_r: big_n });
            }
            let c = big_n * num / den;
            adv_total += c;
            counts.push(c);
        }
        if adv_total >= big_n {
            return Err(Error::BadAdversary("adversarial fractions sum to >= 1".into()));
        }
        let mut all = vec![big_n - adv_total];
        all.extend(counts);
        Self::uniform(d1, &all, n_r, e_row)
    }

    fn validate_counts(counts: &[u64], n_r: u64) -> Result<()> {
        if counts.is_empty() || counts[0] == 0 {
            return Err(Error::BadAdversary("reliable category must be non-empty".into()));
        }
        let total: u64 = counts.iter().sum();
        for (l, &c) in counts.iter().enumerate().skip(1) {
            if c >= counts[0] {
                return Err(Error::BadAdversary(format!(
                    "category {l} ({c} workers) must be smaller than reliable ({})",
                    counts[0]
                )));
            }
        }
        if n_r == 0 || n_r > total {
            return Err(Error::BadAdversary(format!("n_r = {n_r} not in 1..={total}")));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self, row: usize) -> &[u64] {
        &self.counts[row]
    }

    pub fn n_r(&self, row: usize) -> u64 {
        self.n_r[row]
    }

    pub fn pool_size(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    /// Error offset of category `l` (0 for the reliable class).
    pub fn error(&self, row: usize, category: u16) -> f64 {
        if category == 0 {
            0.0
        } else {
            self.e_table[row][category as usize - 1]
        }
    }

    pub fn e_table_row(&self, row: usize) -> &[f64] {
        &self.e_table[row]
    }

    /// Reliable count over total as an exact pair.
    pub fn reliable_fraction(&self, row: usize) -> (u64, u64) {
        (self.counts[row][0], self.pool_size(row))
    }

    /// Mode qualifying threshold `ceil(n_r * p_{r,0})` for a row.
    pub fn mode_threshold(&self, row: usize) -> u64 {
        let (m0, total) = self.reliable_fraction(row);
        let n = self.n_r[row];
        (n * m0).div_ceil(total)
    }

    /// `|e~_t|^2 = sum_l e_{t,l}^2 / |A_t|^2` for every row.
    pub fn scaled_error_norms_sq(&self, row_norms_sq: &[f64]) -> Vec<f64> {
        self.e_table
            .iter()
            .zip(row_norms_sq)
            .map(|(e, nrm)| e.iter().map(|v| v * v).sum::<f64>() / nrm)
            .collect()
    }
}

/// One row's worker pool: per-worker category labels, non-mode counters,
/// and the blocked set.
#[derive(Debug, Clone)]
pub struct Pool {
    category: Vec<u16>,
    counter: Vec<u32>,
    blocked: Vec<bool>,
    unblocked: Vec<u32>,
}

impl Pool {
    fn from_counts(counts: &[u64]) -> Self {
        let mut category = Vec::new();
        for (l, &c) in counts.iter().enumerate() {
            category.extend(std::iter::repeat(l as u16).take(c as usize));
        }
        let n = category.len();
        Self {
            category,
            counter: vec![0; n],
            blocked: vec![false; n],
            unblocked: (0..n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.category.len()
    }

    pub fn is_empty(&self) -> bool {
        self.category.is_empty()
    }

    pub fn unblocked_len(&self) -> usize {
        self.unblocked.len()
    }

    pub fn category(&self, worker: u32) -> u16 {
        self.category[worker as usize]
    }

    pub fn counter(&self, worker: u32) -> u32 {
        self.counter[worker as usize]
    }

    pub fn is_blocked(&self, worker: u32) -> bool {
        self.blocked[worker as usize]
    }

    pub fn bump(&mut self, worker: u32) {
        self.counter[worker as usize] += 1;
    }

    /// Distinct unblocked workers, uniform over size-`n` subsets.
    pub fn sample(&self, n: u64, row: usize, rng: &mut Rng) -> Result<Vec<u32>> {
        let avail = self.unblocked.len();
        if (n as usize) > avail {
            return Err(Error::PoolExhausted { row, unblocked: avail, requested: n as usize });
        }
        Ok(index_sample(rng, avail, n as usize).iter().map(|i| self.unblocked[i]).collect())
    }

    /// Block the unblocked worker with the largest counter, provided the
    /// counter is positive; ties break uniformly at random. Returns the
    /// blocked worker.
    pub fn block_argmax(&mut self, rng: &mut Rng) -> Option<u32> {
        let mut best = 0u32;
        let mut ties: Vec<u32> = Vec::new();
        for &w in &self.unblocked {
            let c = self.counter[w as usize];
            if c > best {
                best = c;
                ties.clear();
                ties.push(w);
            } else if c == best && c > 0 {
                ties.push(w);
            }
        }
        if best == 0 || ties.is_empty() {
            return None;
        }
        let w = ties[rng.gen_range(0..ties.len())];
        self.block(w);
        Some(w)
    }

    pub fn block(&mut self, worker: u32) {
        if !self.blocked[worker as usize] {
            self.blocked[worker as usize] = true;
            self.unblocked.retain(|&u| u != worker);
        }
    }

    pub fn blocked_workers(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len() as u32).filter(|&w| self.blocked[w as usize])
    }
}

/// Worker state for one trial: either one pool per row (multi-row method)
/// or a single pool shared by every row (single-row method).
#[derive(Debug, Clone)]
pub struct WorkerPopulation {
    pools: Vec<Pool>,
    shared: bool,
}

impl WorkerPopulation {
    /// Independent pool per row, laid out from the adversary config.
    pub fn per_row(adv: &AdversaryConfig) -> Self {
        Self { pools: (0..adv.rows()).map(|r| Pool::from_counts(adv.counts(r))).collect(), shared: false }
    }

    /// One global pool (`N_r == N` with shared worker identities).
    pub fn shared(counts: &[u64]) -> Self {
        Self { pools: vec![Pool::from_counts(counts)], shared: true }
    }

    pub fn is_shared(&self) -> bool {
        self.shared
    }

    pub fn pool(&self, row: usize) -> &Pool {
        if self.shared {
            &self.pools[0]
        } else {
            &self.pools[row]
        }
    }

    pub fn pool_mut(&mut self, row: usize) -> &mut Pool {
        if self.shared {
            &mut self.pools[0]
        } else {
            &mut self.pools[row]
        }
    }

    pub fn total_blocked(&self) -> usize {
        self.pools.iter().map(|p| p.blocked_workers().count()).sum()
    }

    /// `(row, worker, category)` for every blocked worker. For a shared
    /// pool the row is reported as 0.
    pub fn blocked_audit(&self) -> Vec<(usize, u32, u16)> {
        let mut out = Vec::new();
        for (r, p) in self.pools.iter().enumerate() {
            for w in p.blocked_workers() {
                out.push((r, w, p.category(w)));
            }
        }
        out
    }

    /// Fraction of blocked workers that are truly adversarial; `None` when
    /// nothing is blocked.
    pub fn blocklist_accuracy(&self) -> Option<f64> {
        let audit = self.blocked_audit();
        if audit.is_empty() {
            return None;
        }
        let bad = audit.iter().filter(|(_, _, c)| *c != 0).count();
        Some(bad as f64 / audit.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn synthetic_rows_are_unit_norm_and_consistent() {
        let p = make_synthetic_problem(20, 5, 7).unwrap();
        for r in 0..20 {
            assert!((p.row_norm_sq(r) - 1.0).abs() < 1e-12);
        }
        assert!((p.frob_sq() - 20.0).abs() < 1e-9);
        let x = p.x_star().unwrap().to_vec();
        for r in 0..20 {
            assert!((p.dot_row(r, &x) - p.b()[r]).abs() <= 1e-10);
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let p1 = make_synthetic_problem(6, 3, 99).unwrap();
        let p2 = make_synthetic_problem(6, 3, 99).unwrap();
        assert_eq!(p1.row(2), p2.row(2));
        assert_eq!(p1.b(), p2.b());
    }

    #[test]
    fn scalar_system_solved_exactly() {
        let p = make_synthetic_problem(1, 1, 3).unwrap();
        let a = p.row(0)[0];
        let x = p.x_star().unwrap()[0];
        assert!((a * x - p.b()[0]).abs() < 1e-14);
    }

    #[test]
    fn invalid_dims_rejected() {
        assert!(make_synthetic_problem(3, 5, 1).is_err());
        assert!(make_synthetic_problem(0, 0, 1).is_err());
    }

    #[test]
    fn sample_rows_full_set() {
        let mut rng = rng_from_seed(1);
        let mut got = sample_rows(5, 5, &mut rng).unwrap();
        got.sort_unstable();
        assert_eq!(got, vec![0, 1, 2, 3, 4]);
        assert!(sample_rows(5, 6, &mut rng).is_err());
    }

    #[test]
    fn sample_rows_uniform_frequency() {
        let mut rng = rng_from_seed(11);
        let mut hits = [0u32; 10];
        for _ in 0..100_000 {
            hits[sample_rows(10, 1, &mut rng).unwrap()[0]] += 1;
        }
        for h in hits {
            assert!((h as f64 / 100_000.0 - 0.1).abs() < 0.01);
        }
    }

    #[test]
    fn adversary_fraction_construction() {
        // 20 workers, p = 0.6 over k = 3 -> 4 each, reliable 8
        let adv = AdversaryConfig::from_fractions(5, 20, 4, &[(1, 5), (1, 5), (1, 5)], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(adv.counts(0), &[8, 4, 4, 4]);
        assert_eq!(adv.mode_threshold(0), 2); // ceil(4 * 0.4)
        // non-integral: 20 * 1/3
        assert!(AdversaryConfig::from_fractions(5, 20, 4, &[(1, 3)], &[1.0]).is_err());
    }

    #[test]
    fn blocked_workers_never_sampled() {
        let adv = AdversaryConfig::uniform(1, &[10, 5, 5], 4, &[1.0, 2.0]).unwrap();
        let mut pop = WorkerPopulation::per_row(&adv);
        let mut rng = rng_from_seed(5);
        for w in [0u32, 3, 7, 12, 19] {
            pop.pool_mut(0).block(w);
        }
        for _ in 0..100_000 {
            for w in pop.pool(0).sample(4, 0, &mut rng).unwrap() {
                assert!(!pop.pool(0).is_blocked(w));
            }
        }
    }

    #[test]
    fn pool_exhaustion_reported() {
        let adv = AdversaryConfig::uniform(1, &[3, 1], 4, &[9.0]).unwrap();
        let mut pop = WorkerPopulation::per_row(&adv);
        pop.pool_mut(0).block(0);
        let mut rng = rng_from_seed(2);
        assert!(matches!(
            pop.pool(0).sample(4, 0, &mut rng),
            Err(Error::PoolExhausted { row: 0, unblocked: 3, requested: 4 })
        ));
    }

    #[test]
    fn sampling_uniform_over_subsets() {
        // N = 6, n = 3: all C(6,3) = 20 subsets equally likely
        let adv = AdversaryConfig::uniform(1, &[4, 2], 3, &[1.0]).unwrap();
        let pop = WorkerPopulation::per_row(&adv);
        let mut rng = rng_from_seed(17);
        let mut freq = std::collections::HashMap::<Vec<u32>, u32>::new();
        let draws = 100_000;
        for _ in 0..draws {
            let mut s = pop.pool(0).sample(3, 0, &mut rng).unwrap();
            s.sort_unstable();
            *freq.entry(s).or_default() += 1;
        }
        assert_eq!(freq.len(), 20);
        let p = 1.0 / 20.0;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for (_, &count) in freq.iter() {
            let hat = count as f64 / draws as f64;
            assert!((hat - p).abs() < 4.0 * sigma, "subset frequency {hat} too far from {p}");
        }
    }

    #[test]
    fn block_argmax_requires_positive_count() {
        let adv = AdversaryConfig::uniform(1, &[4, 2], 3, &[1.0]).unwrap();
        let mut pop = WorkerPopulation::per_row(&adv);
        let mut rng = rng_from_seed(3);
        assert_eq!(pop.pool_mut(0).block_argmax(&mut rng), None);
        pop.pool_mut(0).bump(5);
        assert_eq!(pop.pool_mut(0).block_argmax(&mut rng), Some(5));
        assert!(pop.pool(0).is_blocked(5));
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let dir = std::env::temp_dir().join("rkmode-model-test");
        std::fs::create_dir_all(&dir).unwrap();
        let good = dir.join("good.csv");
        std::fs::write(&good, "a,b\n3,4\n1,0\n0,2\n5,12\n8,15\n").unwrap();
        let p = load_csv_problem(&good, true, 5).unwrap();
        assert_eq!(p.d1(), 5);
        assert_eq!(p.d2(), 2);
        for r in 0..5 {
            assert!((p.row_norm_sq(r) - 1.0).abs() < 1e-12);
        }
        // independent mat-vec check of b
        let x = p.x_star().unwrap().to_vec();
        for r in 0..p.d1() {
            let dot: f64 = p.row(r).iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((dot - p.b()[r]).abs() < 1e-12);
        }

        let bad = dir.join("bad.csv");
        std::fs::write(&bad, "1,2\n3,oops\n").unwrap();
        match load_csv_problem(&bad, false, 5) {
            Err(Error::CsvParse { row: 1, col: 1, .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }

        let zero = dir.join("zero.csv");
        std::fs::write(&zero, "1,1\n0,0\n").unwrap();
        assert!(matches!(load_csv_problem(&zero, true, 5), Err(Error::ZeroRow { row: 1 })));
    }

    #[test]
    fn single_row_csv_normalized() {
        // a single-row system must still satisfy d1 >= d2, so one column
        let dir = std::env::temp_dir().join("rkmode-model-test");
        std::fs::create_dir_all(&dir).unwrap();
        let f = dir.join("single.csv");
        std::fs::write(&f, "7\n").unwrap();
        let p = load_csv_problem(&f, true, 1).unwrap();
        assert_eq!((p.d1(), p.d2()), (1, 1));
        assert!((p.row_norm_sq(0) - 1.0).abs() < 1e-15);
        // under-determined input is rejected with the dimension error
        let wide = dir.join("wide.csv");
        std::fs::write(&wide, "1,0\n").unwrap();
        assert!(matches!(load_csv_problem(&wide, true, 1), Err(Error::InvalidDimensions { d1: 1, d2: 2 })));
    }
}
