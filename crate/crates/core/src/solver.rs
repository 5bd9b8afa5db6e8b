//! Iterative engines: classical randomized Kaczmarz, the multi-row
//! mode-aggregated method with optional block-list, its single-row
//! norm-weighted variant, and an l1-regularized extension.

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::aggregate::{group_residuals, select_mode, select_row, ModeOutcome, ReturnedResidual, RowStrategy, DEFAULT_GROUP_TOL};
use crate::error::Result;
use crate::model::{sample_rows, AdversaryConfig, LinearProblem, WorkerPopulation};
use crate::rng::rng_from_seed;

/// Row-sampling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Variant {
    /// `d0` rows uniform without replacement, per-row worker pools.
    #[default]
    MultiRowUniform,
    /// One row per iteration with probability `|A_r|^2 / |A|_F^2`, a single
    /// worker pool shared across rows.
    SingleRowNormWeighted,
}

/// Which rows get a block-list update at each cycle boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlocklistScope {
    /// Only the rows sampled in the current iteration.
    #[default]
    SampledRows,
    /// Every row. With many rows and few per iteration, sampled-row updates
    /// touch too small a fraction of the worker pools to ever clear them;
    /// this scope actually retires the adversaries.
    AllRows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Rows used per iteration (ignored by the single-row variant).
    pub d0: usize,
    pub max_iter: u64,
    /// Stop once an applied step value has |c| <= tol; non-positive
    /// disables the test.
    pub tol: f64,
    pub blocklist_enabled: bool,
    /// Block-list updating cycle `S`.
    pub update_cycle: u64,
    #[serde(default)]
    pub blocklist_scope: BlocklistScope,
    pub strategy: RowStrategy,
    pub group_tol: f64,
    pub variant: Variant,
    /// l1 regularization weight; `None` runs the plain method.
    pub l1_gamma: Option<f64>,
    /// Step scale of the shrinkage threshold `eta * gamma / d1`.
    pub l1_step_scale: f64,
    /// Starting iterate; zeros when absent.
    pub x0: Option<Vec<f64>>,
    /// Iteration counts at which a checkpoint row is recorded.
    pub checkpoints: Vec<u64>,
    /// Reference solution for distance reporting (l1 runs).
    pub reference_solution: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            d0: 1,
            max_iter: 30_000,
            tol: 1e-12,
            blocklist_enabled: false,
            update_cycle: 200,
            blocklist_scope: BlocklistScope::default(),
            strategy: RowStrategy::MaxResidual,
            group_tol: DEFAULT_GROUP_TOL,
            variant: Variant::MultiRowUniform,
            l1_gamma: None,
            l1_step_scale: 1.0,
            x0: None,
            checkpoints: default_checkpoints(30_000),
            reference_solution: None,
        }
    }
}

impl SolveOptions {
    pub fn with_max_iter(mut self, max_iter: u64) -> Self {
        self.max_iter = max_iter;
        self.checkpoints = default_checkpoints(max_iter);
        self
    }
}

/// Every iteration up to 100, then sparsified by a factor 1.2 per step.
pub fn default_checkpoints(max_iter: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 1u64;
    while i <= max_iter {
        out.push(i);
        i = if i < 100 { i + 1 } else { ((i as f64) * 1.2).ceil() as u64 };
    }
    if out.last() != Some(&max_iter) {
        out.push(max_iter);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxIter,
    /// Iterate left the finite range; the record is kept, flagged failed.
    Diverged,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub iter: u64,
    /// `|x_i - x*|^2` when the ground truth is known.
    pub err_sq: Option<f64>,
    pub residual_norm: f64,
    pub no_mode_count: u64,
    pub blocked_count: u64,
    pub objective: Option<f64>,
    pub ref_dist_sq: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockedWorker {
    pub row: usize,
    pub worker: u32,
    pub true_category: u16,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub rows: Vec<CheckpointRow>,
    pub iters_run: u64,
    pub stop: StopReason,
    pub no_mode_total: u64,
    pub blocked: Vec<BlockedWorker>,
    /// Fraction of blocked workers that are truly adversarial.
    pub blocklist_accuracy: Option<f64>,
    pub final_x: Vec<f64>,
    pub final_err_sq: Option<f64>,
}

impl TrialRecord {
    /// Squared error at the last checkpoint at or before `iter`.
    pub fn err_sq_at(&self, iter: u64) -> Option<f64> {
        self.rows.iter().rev().find(|r| r.iter <= iter).and_then(|r| r.err_sq)
    }

    /// CSV with one checkpoint per line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,err_sq,residual_norm,no_mode,blocked,objective,ref_dist_sq,wall_ms\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.iter,
                opt(r.err_sq),
                r.residual_norm,
                r.no_mode_count,
                r.blocked_count,
                opt(r.objective),
                opt(r.ref_dist_sq),
                r.wall_ms,
            ));
        }
        s
    }

    /// JSON summary plus block-list audit.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "seed": self.seed,
            "iters_run": self.iters_run,
            "stop": format!("{:?}", self.stop),
            "no_mode_total": self.no_mode_total,
            "final_err_sq": self.final_err_sq,
            "blocked": self.blocked,
            "blocklist_accuracy": self.blocklist_accuracy,
        })
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// What one iteration did; consumed by instrumentation hooks.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo<'a> {
    pub iter: u64,
    /// Absent on no-mode iterations.
    pub selected: Option<SelectedStep>,
    /// Iterate after this iteration's update (and shrinkage, if any).
    pub x_after: &'a [f64],
}

#[derive(Debug, Clone, Copy)]
pub struct SelectedStep {
    pub row: usize,
    /// Applied step value `c`.
    pub c: f64,
    /// Category of the representative return of the chosen group.
    pub rep_category: u16,
    pub mode_size: u64,
    /// Whether every member of the chosen group shares one category.
    pub pure_group: bool,
}

/// Classical randomized Kaczmarz with norm-squared row sampling.
pub fn rk_baseline(problem: &LinearProblem, seed: u64, max_iter: u64) -> TrialRecord {
    let mut rng = rng_from_seed(seed);
    let weights = WeightedIndex::new(problem.row_norms_sq()).expect("positive row norms");
    let mut x = vec![0.0f64; problem.d2()];
    let checkpoints = default_checkpoints(max_iter);
    let mut recorder = Recorder::new(problem, &checkpoints, None, None);
    let start = Instant::now();
    for j in 0..max_iter {
        let r = weights.sample(&mut rng);
        let c = (problem.b()[r] - problem.dot_row(r, &x)) / problem.row_norm_sq(r);
        axpy(&mut x, c, problem.row(r));
        recorder.visit(j + 1, &x, 0, 0, start);
    }
    recorder.finish(seed, x, max_iter, StopReason::MaxIter, 0, Vec::new(), None, problem)
}

/// Multi-row mode-aggregated Kaczmarz (with or without block-list).
pub fn solve_mode_kaczmarz(
    problem: &LinearProblem,
    adversary: &AdversaryConfig,
    opts: &SolveOptions,
    seed: u64,
) -> Result<TrialRecord> {
    run_engine(problem, adversary, opts, seed, &mut |_| {})
}

/// Single-row norm-weighted variant with a shared worker pool.
pub fn solve_single_row(
    problem: &LinearProblem,
    adversary: &AdversaryConfig,
    opts: &SolveOptions,
    seed: u64,
) -> Result<TrialRecord> {
    let mut o = opts.clone();
    o.variant = Variant::SingleRowNormWeighted;
    run_engine(problem, adversary, &o, seed, &mut |_| {})
}

/// l1-regularized run: mode step followed by soft thresholding.
pub fn solve_l1(
    problem: &LinearProblem,
    adversary: &AdversaryConfig,
    opts: &SolveOptions,
    seed: u64,
) -> Result<TrialRecord> {
    assert!(opts.l1_gamma.is_some(), "solve_l1 requires l1_gamma");
    run_engine(problem, adversary, opts, seed, &mut |_| {})
}

/// Engine with a per-iteration observer; instrumentation entry point.
pub fn solve_with_observer(
    problem: &LinearProblem,
    adversary: &AdversaryConfig,
    opts: &SolveOptions,
    seed: u64,
    observer: &mut dyn FnMut(&StepInfo<'_>),
) -> Result<TrialRecord> {
    run_engine(problem, adversary, opts, seed, observer)
}

fn run_engine(
    problem: &LinearProblem,
    adversary: &AdversaryConfig,
    opts: &SolveOptions,
    seed: u64,
    observer: &mut dyn FnMut(&StepInfo<'_>),
) -> Result<TrialRecord> {
    let d1 = problem.d1();
    let d2 = problem.d2();
    assert_eq!(adversary.rows(), d1, "adversary config must cover every row");
    let mut rng = rng_from_seed(seed);
    let mut x = opts.x0.clone().unwrap_or_else(|| vec![0.0; d2]);
    assert_eq!(x.len(), d2);

    let single_row = opts.variant == Variant::SingleRowNormWeighted;
    let mut pop = if single_row {
        WorkerPopulation::shared(adversary.counts(0))
    } else {
        WorkerPopulation::per_row(adversary)
    };
    let row_weights = single_row
        .then(|| WeightedIndex::new(problem.row_norms_sq()).expect("positive row norms"));

    let shrink = opts.l1_gamma.map(|g| opts.l1_step_scale * g / d1 as f64);
    let mut recorder = Recorder::new(problem, &opts.checkpoints, opts.l1_gamma, opts.reference_solution.clone());
    let mut no_mode_total = 0u64;
    let mut stop = StopReason::MaxIter;
    let mut iters_run = 0u64;
    let start = Instant::now();
    let mut outcomes: Vec<ModeOutcome> = Vec::with_capacity(opts.d0);
    // true category of each outcome's representative, evaluation-only
    let mut rep_meta: Vec<(u16, bool)> = Vec::with_capacity(opts.d0);
    let mut returns: Vec<ReturnedResidual> = Vec::new();

    for j in 0..opts.max_iter {
        iters_run = j + 1;
        let tau: Vec<usize> = if single_row {
            vec![row_weights.as_ref().unwrap().sample(&mut rng)]
        } else {
            sample_rows(d1, opts.d0, &mut rng)?
        };

        outcomes.clear();
        rep_meta.clear();
        for &r in &tau {
            let workers = pop.pool(r).sample(adversary.n_r(r), r, &mut rng)?;
            returns.clear();
            let dot = problem.dot_row(r, &x);
            for w in workers {
                let cat = pop.pool(r).category(w);
                let value = (problem.b()[r] + adversary.error(r, cat) - dot) / problem.row_norm_sq(r);
                returns.push(ReturnedResidual { worker: w, row: r, value, true_category: cat });
            }
            let groups = group_residuals(&returns, opts.group_tol);
            let outcome = select_mode(r, groups, adversary.mode_threshold(r), &mut rng);
            if let Some(chosen) = outcome.chosen_group() {
                for (idx, ret) in returns.iter().enumerate() {
                    if !chosen.members.contains(&idx) {
                        pop.pool_mut(r).bump(ret.worker);
                    }
                }
                let cats: Vec<u16> = chosen.members.iter().map(|&i| returns[i].true_category).collect();
                let rep = cats[(cats.len() - 1) / 2];
                rep_meta.push((rep, cats.iter().all(|&c| c == rep)));
            } else {
                rep_meta.push((0, true));
            }
            outcomes.push(outcome);
        }

        let winner = select_row(&outcomes, opts.strategy, &mut rng);
        let mut selected = None;
        let mut applied_c = None;
        if let Some(wi) = winner {
            let o = &outcomes[wi];
            let c = o.chosen_value().unwrap();
            axpy(&mut x, c, problem.row(o.row));
            if let Some(lambda) = shrink {
                soft_threshold(&mut x, lambda);
            }
            applied_c = Some(c);
            let (rep_category, pure_group) = rep_meta[wi];
            selected = Some(SelectedStep {
                row: o.row,
                c,
                rep_category,
                mode_size: o.mode_size().unwrap(),
                pure_group,
            });
        } else {
            no_mode_total += 1;
        }
        observer(&StepInfo { iter: j + 1, selected, x_after: &x });

        if !x.iter().all(|v| v.is_finite()) {
            stop = StopReason::Diverged;
            recorder.visit(j + 1, &x, no_mode_total, pop.total_blocked() as u64, start);
            break;
        }

        if opts.blocklist_enabled && (j + 1) % opts.update_cycle == 0 {
            if single_row {
                pop.pool_mut(0).block_argmax(&mut rng);
            } else {
                match opts.blocklist_scope {
                    BlocklistScope::SampledRows => {
                        for &r in &tau {
                            pop.pool_mut(r).block_argmax(&mut rng);
                        }
                    }
                    BlocklistScope::AllRows => {
                        for r in 0..d1 {
                            pop.pool_mut(r).block_argmax(&mut rng);
                        }
                    }
                }
            }
        }

        recorder.visit(j + 1, &x, no_mode_total, pop.total_blocked() as u64, start);

        if opts.tol > 0.0 {
            if let Some(c) = applied_c {
                if c.abs() <= opts.tol {
                    stop = StopReason::Converged;
                    break;
                }
            }
        }
    }

    let blocked = pop
        .blocked_audit()
        .into_iter()
        .map(|(row, worker, true_category)| BlockedWorker { row, worker, true_category })
        .collect();
    let accuracy = pop.blocklist_accuracy();
    Ok(recorder.finish(seed, x, iters_run, stop, no_mode_total, blocked, accuracy, problem))
}

fn axpy(x: &mut [f64], c: f64, row: &[f64]) {
    for (xi, ai) in x.iter_mut().zip(row) {
        *xi += c * ai;
    }
}

fn soft_threshold(x: &mut [f64], lambda: f64) {
    for v in x.iter_mut() {
        *v = if *v > lambda {
            *v - lambda
        } else if *v < -lambda {
            *v + lambda
        } else {
            0.0
        };
    }
}

/// Checkpoint bookkeeping shared by all engines.
struct Recorder<'p> {
    problem: &'p LinearProblem,
    checkpoints: Vec<u64>,
    next: usize,
    rows: Vec<CheckpointRow>,
    gamma: Option<f64>,
    reference: Option<Vec<f64>>,
    started: Instant,
}

impl<'p> Recorder<'p> {
    fn new(
        problem: &'p LinearProblem,
        checkpoints: &[u64],
        gamma: Option<f64>,
        reference: Option<Vec<f64>>,
    ) -> Self {
        let mut cp = checkpoints.to_vec();
        cp.sort_unstable();
        cp.dedup();
        Self {
            problem,
            checkpoints: cp,
            next: 0,
            rows: Vec::new(),
            gamma,
            reference,
            started: Instant::now(),
        }
    }

    fn visit(&mut self, iter: u64, x: &[f64], no_mode: u64, blocked: u64, start: Instant) {
        // checkpoints skipped by an early stop are dropped, not backfilled
        while self.next < self.checkpoints.len() && self.checkpoints[self.next] < iter {
            self.next += 1;
        }
        if self.next >= self.checkpoints.len() || self.checkpoints[self.next] != iter {
            return;
        }
        self.next += 1;
        self.rows.push(self.make_row(iter, x, no_mode, blocked, start));
    }

    fn make_row(&self, iter: u64, x: &[f64], no_mode: u64, blocked: u64, start: Instant) -> CheckpointRow {
        let err_sq = self.problem.x_star().map(|xs| dist_sq(x, xs));
        let objective = self.gamma.map(|g| {
            let res = self.problem.residual_norm(x);
            0.5 * res * res + g * x.iter().map(|v| v.abs()).sum::<f64>()
        });
        let ref_dist_sq = self.reference.as_ref().map(|r| dist_sq(x, r));
        CheckpointRow {
            iter,
            err_sq,
            residual_norm: self.problem.residual_norm(x),
            no_mode_count: no_mode,
            blocked_count: blocked,
            objective,
            ref_dist_sq,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        mut self,
        seed: u64,
        x: Vec<f64>,
        iters_run: u64,
        stop: StopReason,
        no_mode_total: u64,
        blocked: Vec<BlockedWorker>,
        blocklist_accuracy: Option<f64>,
        problem: &LinearProblem,
    ) -> TrialRecord {
        // always close with a final checkpoint row
        if self.rows.last().map(|r| r.iter) != Some(iters_run) {
            let row = self.make_row(iters_run, &x, no_mode_total, blocked.len() as u64, self.started);
            self.rows.push(row);
        }
        let final_err_sq = problem.x_star().map(|xs| dist_sq(&x, xs));
        TrialRecord {
            seed,
            rows: self.rows,
            iters_run,
            stop,
            no_mode_total,
            blocked,
            blocklist_accuracy,
            final_x: x,
            final_err_sq,
        }
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
