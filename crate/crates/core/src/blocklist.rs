//! Monte-Carlo estimation of block-list membership probabilities.
//!
//! The counter process alone decides who gets blocked: each round samples
//! `n` of the `N` workers, the largest category group meeting the threshold
//! is the mode, and everyone sampled outside it gets a counter bump. After
//! `S` rounds the unblocked worker with the largest positive counter is
//! blocked (ties uniform). This mirrors the solver's semantics through the
//! same `select_mode_index` / `block_argmax` code path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::select_mode_index;
use crate::error::{Error, Result};
use crate::model::{AdversaryConfig, LinearProblem, WorkerPopulation};
use crate::rng::{trial_rng, Rng};
use crate::solver::{solve_mode_kaczmarz, SolveOptions};

/// Counter-process experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlocklistExperiment {
    /// Category sizes `(m_0, m_1, ..., m_k)`.
    pub counts: Vec<u64>,
    /// Workers sampled per round.
    pub n: u64,
    /// Rounds per trial (one block decision at the end).
    pub s: u64,
    pub trials: u64,
    pub seed: u64,
}

/// Estimated per-worker block probability for one category.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryEstimate {
    pub category: u16,
    pub workers: u64,
    /// Frequency with which a single worker of this category was blocked.
    pub p_bl: Option<f64>,
    pub std_err: Option<f64>,
    /// Conditional probability that the blocked worker is from this
    /// category, given someone was blocked.
    pub conditional: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlocklistEstimate {
    pub s: u64,
    pub trials: u64,
    pub per_category: Vec<CategoryEstimate>,
    /// Trials in which no counter ever became positive.
    pub no_block_trials: u64,
    /// Per-worker block frequencies, for exchangeability checks.
    pub per_worker: Vec<f64>,
}

/// Run the counter process `trials` times and estimate block probabilities.
pub fn estimate_blocklist_probs(exp: &BlocklistExperiment) -> Result<BlocklistEstimate> {
    let total: u64 = exp.counts.iter().sum();
    if exp.counts.is_empty() || exp.counts[0] == 0 {
        return Err(Error::BadAdversary("reliable category must be non-empty".into()));
    }
    if exp.n == 0 || exp.n > total {
        return Err(Error::BadAdversary(format!("n = {} not in 1..={total}", exp.n)));
    }
    // threshold per the single-row method: ceil(n * (1 - p))
    let threshold = (exp.n * exp.counts[0]).div_ceil(total);
    let k1 = exp.counts.len();

    let category: Vec<u16> = exp
        .counts
        .iter()
        .enumerate()
        .flat_map(|(l, &c)| std::iter::repeat(l as u16).take(c as usize))
        .collect();

    let blocks: Vec<Option<u32>> = (0..exp.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(exp.seed, t);
            run_counter_trial(&category, k1, exp.n, exp.s, threshold, &mut rng)
        })
        .collect();

    let mut per_worker_hits = vec![0u64; category.len()];
    let mut no_block_trials = 0u64;
    for b in &blocks {
        match b {
            Some(w) => per_worker_hits[*w as usize] += 1,
            None => no_block_trials += 1,
        }
    }
    let per_worker: Vec<f64> =
        per_worker_hits.iter().map(|&h| h as f64 / exp.trials as f64).collect();

    let blocked_total: u64 = per_worker_hits.iter().sum();
    let mut per_category = Vec::with_capacity(k1);
    for l in 0..k1 {
        let members: Vec<usize> =
            (0..category.len()).filter(|&w| category[w] as usize == l).collect();
        let workers = members.len() as u64;
        // degenerate adversary (k = 0): counters never move, estimates are
        // undefined for the absent adversarial categories
        let hits: u64 = members.iter().map(|&w| per_worker_hits[w]).sum();
        let p = hits as f64 / (workers as f64 * exp.trials as f64);
        let se = (p * (1.0 - p) / (workers as f64 * exp.trials as f64)).sqrt();
        let defined = k1 > 1;
        per_category.push(CategoryEstimate {
            category: l as u16,
            workers,
            p_bl: defined.then_some(p),
            std_err: defined.then_some(se),
            conditional: (blocked_total > 0).then(|| hits as f64 / blocked_total as f64),
        });
    }
    Ok(BlocklistEstimate {
        s: exp.s,
        trials: exp.trials,
        per_category,
        no_block_trials,
        per_worker,
    })
}

/// One S-round counter trial; returns the blocked worker, if any.
fn run_counter_trial(
    category: &[u16],
    k1: usize,
    n: u64,
    s: u64,
    threshold: u64,
    rng: &mut Rng,
) -> Option<u32> {
    let mut pop = WorkerPopulation::shared(&counts_of(category, k1));
    let mut sizes = vec![0u64; k1];
    let mut sampled: Vec<u32> = Vec::with_capacity(n as usize);
    for _ in 0..s {
        sampled.clear();
        sampled.extend(pop.pool(0).sample(n, 0, rng).expect("pool never shrinks here"));
        sizes.iter_mut().for_each(|v| *v = 0);
        for &w in &sampled {
            sizes[category[w as usize] as usize] += 1;
        }
        if let Some(mode_cat) = select_mode_index(&sizes, threshold, rng) {
            for &w in &sampled {
                if category[w as usize] as usize != mode_cat {
                    pop.pool_mut(0).bump(w);
                }
            }
        }
    }
    pop.pool_mut(0).block_argmax(rng)
}

fn counts_of(category: &[u16], k1: usize) -> Vec<u64> {
    let mut c = vec![0u64; k1];
    for &l in category {
        c[l as usize] += 1;
    }
    c
}

/// One row of the accuracy-vs-S table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracyPoint {
    pub s: u64,
    /// Mean block-list accuracy over trials with a non-empty block-list.
    pub accuracy: Option<f64>,
    pub std_err: Option<f64>,
    pub trials_with_blocks: u64,
    pub trials: u64,
}

/// Full-solver accuracy of block-list identification for each cycle `S`.
pub fn blocklist_accuracy_vs_s(
    problem: &LinearProblem,
    adversary: &AdversaryConfig,
    opts: &SolveOptions,
    s_values: &[u64],
    trials: u64,
    seed: u64,
) -> Result<Vec<AccuracyPoint>> {
    let mut out = Vec::with_capacity(s_values.len());
    for (si, &s) in s_values.iter().enumerate() {
        let mut o = opts.clone();
        o.blocklist_enabled = true;
        o.update_cycle = s;
        let accs: Vec<Option<f64>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let child = crate::rng::derive_seed(seed, (si as u64) << 32 | t);
                solve_mode_kaczmarz(problem, adversary, &o, child).map(|r| r.blocklist_accuracy)
            })
            .collect::<Result<Vec<_>>>()?;
        let vals: Vec<f64> = accs.iter().flatten().copied().collect();
        let trials_with_blocks = vals.len() as u64;
        let (accuracy, std_err) = if vals.is_empty() {
            (None, None)
        } else {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (vals.len().max(2) - 1) as f64;
            (Some(mean), Some((var / vals.len() as f64).sqrt()))
        };
        out.push(AccuracyPoint { s, accuracy, std_err, trials_with_blocks, trials });
    }
    Ok(out)
}

/// CSV emission: one row per (S, category).
pub fn estimates_to_csv(estimates: &[BlocklistEstimate]) -> String {
    let mut s = String::from("s,category,workers,p_bl,std_err,conditional,trials\n");
    for e in estimates {
        for c in &e.per_category {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.s,
                c.category,
                c.workers,
                c.p_bl.map(|v| v.to_string()).unwrap_or_default(),
                c.std_err.map(|v| v.to_string()).unwrap_or_default(),
                c.conditional.map(|v| v.to_string()).unwrap_or_default(),
                e.trials,
            ));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_exp(s: u64, trials: u64) -> BlocklistExperiment {
        // 3 reliable, 2 adversarial in one category, n = 3
        BlocklistExperiment { counts: vec![3, 2], n: 3, s, trials, seed: 1234 }
    }

    #[test]
    fn counter_conservation_per_round() {
        // with n = 3 and threshold 2 exactly one worker is non-mode unless
        // the round is unanimous; counters plus mode members account for n
        let category = [0u16, 0, 0, 1, 1];
        let mut rng = crate::rng::rng_from_seed(9);
        let mut pop = WorkerPopulation::shared(&[3, 2]);
        for _ in 0..200 {
            let sampled = pop.pool(0).sample(3, 0, &mut rng).unwrap();
            let mut sizes = [0u64; 2];
            for &w in &sampled {
                sizes[category[w as usize] as usize] += 1;
            }
            let before: u32 = (0..5).map(|w| pop.pool(0).counter(w)).sum();
            if let Some(m) = select_mode_index(&sizes, 2, &mut rng) {
                let mut losers = 0;
                for &w in &sampled {
                    if category[w as usize] as usize != m {
                        pop.pool_mut(0).bump(w);
                        losers += 1;
                    }
                }
                let after: u32 = (0..5).map(|w| pop.pool(0).counter(w)).sum();
                assert_eq!(after - before, losers);
                assert_eq!(sizes[m] + losers as u64, 3);
            }
        }
    }

    #[test]
    fn adversaries_identified_at_large_s() {
        let est = estimate_blocklist_probs(&example_exp(50, 4000)).unwrap();
        let p1 = est.per_category[1].p_bl.unwrap();
        let p0 = est.per_category[0].p_bl.unwrap();
        assert!((p1 - 0.5).abs() < 0.03, "adversarial p_bl = {p1}");
        assert!(p0 < 0.01, "reliable p_bl = {p0}");
    }

    #[test]
    fn workers_within_category_exchangeable() {
        // layout [3, 2]: workers 0..3 reliable, 3..5 adversarial
        let est = estimate_blocklist_probs(&example_exp(10, 8000)).unwrap();
        for pair in [(0usize, 1usize), (1, 2), (3, 4)] {
            let a = est.per_worker[pair.0];
            let b = est.per_worker[pair.1];
            let p = (a + b) / 2.0;
            let se = (2.0 * p * (1.0 - p) / 8000.0).sqrt();
            assert!((a - b).abs() <= 4.0 * se.max(1e-4), "workers {pair:?}: {a} vs {b}");
        }
    }

    #[test]
    fn zero_adversary_never_blocks() {
        let exp = BlocklistExperiment { counts: vec![5], n: 3, s: 50, trials: 500, seed: 7 };
        let est = estimate_blocklist_probs(&exp).unwrap();
        assert_eq!(est.no_block_trials, 500);
        assert_eq!(est.per_category[0].p_bl, None);
        assert_eq!(est.per_worker.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn more_trials_shrink_std_err() {
        let a = estimate_blocklist_probs(&example_exp(5, 2000)).unwrap();
        let b = estimate_blocklist_probs(&example_exp(5, 8000)).unwrap();
        let sa = a.per_category[1].std_err.unwrap();
        let sb = b.per_category[1].std_err.unwrap();
        // quadrupling trials halves the standard error (within noise)
        assert!(sb < sa * 0.7, "std err {sa} -> {sb}");
    }
}
