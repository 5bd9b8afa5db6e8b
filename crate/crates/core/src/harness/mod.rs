//! Declarative experiment runner: TOML config in, CSV/JSON/SVG artifacts
//! out, deterministically reproducible from the manifest.

pub mod error_model;
pub mod reference;
pub mod svg;

pub use error_model::{error_model, ErrorRule};
pub use reference::{compare_to_reference, lookup_table, ComparisonReport, ResultRow};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::aggregate::RowStrategy;
use crate::error::{Error, Result};
use crate::model::{load_csv_problem, make_synthetic_problem, AdversaryConfig, LinearProblem};
use crate::rng::derive_seed;
use crate::solver::{
    default_checkpoints, solve_mode_kaczmarz, SolveOptions, TrialRecord, Variant,
};

/// Scalar-or-list field; lists become sweep axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Sweep<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Sweep::One(v) => vec![v.clone()],
            Sweep::Many(v) => v.clone(),
        }
    }
}

impl<T> Default for Sweep<T>
where
    T: Default,
{
    fn default() -> Self {
        Sweep::One(T::default())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSource {
    Synthetic { d1: usize, d2: usize, seed: u64 },
    Csv { path: PathBuf, normalize: bool, seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    pub k: Sweep<usize>,
    /// Total adversarial rate; categories are split as evenly as integer
    /// counts allow.
    pub p: Sweep<f64>,
    /// Workers holding each row.
    pub cap_n_r: u64,
    /// Workers queried per row per iteration.
    pub n_r: Sweep<u64>,
    pub e_inf: f64,
    #[serde(default)]
    pub error_rule: ErrorRule,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub d0: Sweep<usize>,
    pub max_iter: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub blocklist: bool,
    #[serde(default)]
    pub blocklist_scope: crate::solver::BlocklistScope,
    #[serde(default = "default_cycle")]
    pub update_cycle: Sweep<u64>,
    #[serde(default)]
    pub strategy: RowStrategy,
    #[serde(default = "default_group_tol")]
    pub group_tol: f64,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub l1_gamma: Option<f64>,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_cycle() -> Sweep<u64> {
    Sweep::One(200)
}

fn default_group_tol() -> f64 {
    crate::aggregate::DEFAULT_GROUP_TOL
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: u64,
    pub output_dir: PathBuf,
    pub problem: ProblemSource,
    pub adversary: AdversarySection,
    pub solver: SolverSection,
    /// Explicit checkpoint list; geometric spacing when absent.
    #[serde(default)]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default)]
    pub emit_svg: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Toml(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        for field in ["d0", "p", "k", "n_r", "update_cycle"] {
            let empty = match field {
                "d0" => self.solver.d0.values().is_empty(),
                "p" => self.adversary.p.values().is_empty(),
                "k" => self.adversary.k.values().is_empty(),
                "n_r" => self.adversary.n_r.values().is_empty(),
                _ => self.solver.update_cycle.values().is_empty(),
            };
            if empty {
                return Err(Error::Config(format!("sweep list `{field}` is empty")));
            }
        }
        Ok(())
    }
}

/// Integer category sizes for total rate `p` over `k` categories: the
/// adversarial total is `round(N * p)` split as evenly as possible, largest
/// categories first.
pub fn split_categories(cap_n: u64, p: f64, k: usize) -> Result<Vec<u64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Config(format!("adversarial rate p = {p} must be in [0, 1)")));
    }
    let adv_total = (cap_n as f64 * p).round() as u64;
    if k == 0 {
        if adv_total > 0 {
            return Err(Error::Config("k = 0 but p > 0".into()));
        }
        return Ok(vec![cap_n]);
    }
    let base = adv_total / k as u64;
    let extra = (adv_total % k as u64) as usize;
    let mut counts = vec![cap_n - adv_total];
    for l in 0..k {
        counts.push(base + u64::from(l < extra));
    }
    Ok(counts)
}

/// One fully-resolved sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub k: usize,
    pub p: f64,
    pub n_r: u64,
    pub d0: usize,
    pub update_cycle: u64,
    pub counts: Vec<u64>,
    pub e_row: Vec<f64>,
}

/// Mean plus 5th/95th percentile band of squared error per checkpoint.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateSeries {
    pub point: usize,
    pub rows: Vec<AggregateRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub iter: u64,
    pub mean_err_sq: f64,
    pub p5_err_sq: f64,
    pub p95_err_sq: f64,
    pub trials: usize,
}

/// Nearest-rank percentile of a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

pub fn aggregate_trials(point: usize, trials: &[TrialRecord]) -> AggregateSeries {
    let mut by_iter: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for t in trials {
        for row in &t.rows {
            if let Some(e) = row.err_sq {
                by_iter.entry(row.iter).or_default().push(e);
            }
        }
    }
    let rows = by_iter
        .into_iter()
        .map(|(iter, mut vals)| {
            vals.sort_by(f64::total_cmp);
            AggregateRow {
                iter,
                mean_err_sq: vals.iter().sum::<f64>() / vals.len() as f64,
                p5_err_sq: percentile(&vals, 0.05),
                p95_err_sq: percentile(&vals, 0.95),
                trials: vals.len(),
            }
        })
        .collect();
    AggregateSeries { point, rows }
}

impl AggregateSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,mean_err_sq,p5_err_sq,p95_err_sq,trials\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iter, r.mean_err_sq, r.p5_err_sq, r.p95_err_sq, r.trials
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub points: Vec<SweepPoint>,
    /// Per point: trials that finished, trials that failed (with reasons).
    pub completed: Vec<usize>,
    pub failed: Vec<Vec<String>>,
}

/// Run every sweep point of `config`, writing artifacts under its output
/// directory. Failed trials are recorded per point, not fatal.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    let out_dir = &config.output_dir;
    std::fs::create_dir_all(out_dir)?;

    let (problem, problem_desc) = build_problem(&config.problem)?;
    let checkpoints = config
        .checkpoints
        .clone()
        .unwrap_or_else(|| default_checkpoints(config.solver.max_iter));

    // resolve sweep grid
    let mut points = Vec::new();
    for &k in &config.adversary.k.values() {
        for &p in &config.adversary.p.values() {
            for &n_r in &config.adversary.n_r.values() {
                for &d0 in &config.solver.d0.values() {
                    for &s in &config.solver.update_cycle.values() {
                        let counts = split_categories(config.adversary.cap_n_r, p, k)?;
                        let e_seed = derive_seed(config.seed, points.len() as u64 ^ 0xe);
                        let e_row = error_model(
                            config.adversary.error_rule,
                            config.adversary.e_inf,
                            k,
                            config.solver.group_tol,
                            e_seed,
                        )?;
                        points.push(SweepPoint {
                            index: points.len(),
                            k,
                            p,
                            n_r,
                            d0,
                            update_cycle: s,
                            counts,
                            e_row,
                        });
                    }
                }
            }
        }
    }

    let mut completed = Vec::new();
    let mut failed = Vec::new();
    let mut all_seeds = Vec::new();
    for point in &points {
        let adv = AdversaryConfig::uniform(problem.d1(), &point.counts, point.n_r, &point.e_row)?;
        let opts = SolveOptions {
            d0: point.d0,
            max_iter: config.solver.max_iter,
            tol: config.solver.tol,
            blocklist_enabled: config.solver.blocklist,
            update_cycle: point.update_cycle,
            blocklist_scope: config.solver.blocklist_scope,
            strategy: config.solver.strategy,
            group_tol: config.solver.group_tol,
            variant: config.solver.variant,
            l1_gamma: config.solver.l1_gamma,
            l1_step_scale: 1.0,
            x0: None,
            checkpoints: checkpoints.clone(),
            reference_solution: None,
        };
        let seeds: Vec<u64> = (0..config.trials)
            .map(|t| derive_seed(config.seed, ((point.index as u64) << 32) | t))
            .collect();
        all_seeds.push(seeds.clone());
        let results: Vec<std::result::Result<TrialRecord, String>> = seeds
            .par_iter()
            .map(|&s| solve_mode_kaczmarz(&problem, &adv, &opts, s).map_err(|e| e.to_string()))
            .collect();

        let point_dir = out_dir.join(format!("point_{:03}", point.index));
        std::fs::create_dir_all(&point_dir)?;
        let mut ok_records = Vec::new();
        let mut errors = Vec::new();
        for (t, res) in results.into_iter().enumerate() {
            match res {
                Ok(rec) => {
                    std::fs::write(point_dir.join(format!("trial_{t:03}.csv")), rec.to_csv())?;
                    ok_records.push(rec);
                }
                Err(e) => errors.push(format!("trial {t}: {e}")),
            }
        }
        let agg = aggregate_trials(point.index, &ok_records);
        std::fs::write(point_dir.join("aggregate.csv"), agg.to_csv())?;
        if config.emit_svg {
            let series = svg::Series {
                label: "mean err^2",
                points: agg.rows.iter().map(|r| (r.iter as f64, r.mean_err_sq)).collect(),
            };
            let title = format!(
                "p={} k={} d0={} n={} S={}",
                point.p, point.k, point.d0, point.n_r, point.update_cycle
            );
            std::fs::write(point_dir.join("error.svg"), svg::log_line_chart(&title, &[series]))?;
        }
        completed.push(ok_records.len());
        failed.push(errors);
    }

    let manifest = serde_json::json!({
        "package_version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "config_hash": format!("{:016x}", hash_config(config)),
        "problem": problem.snapshot(&problem_desc, problem_seed(&config.problem)),
        "points": points,
        "seeds": all_seeds,
    });
    std::fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;

    Ok(RunSummary { out_dir: out_dir.clone(), points, completed, failed })
}

fn build_problem(src: &ProblemSource) -> Result<(LinearProblem, String)> {
    match src {
        ProblemSource::Synthetic { d1, d2, seed } => {
            Ok((make_synthetic_problem(*d1, *d2, *seed)?, format!("synthetic:{d1}x{d2}")))
        }
        ProblemSource::Csv { path, normalize, seed } => {
            Ok((load_csv_problem(path, *normalize, *seed)?, format!("csv:{}", path.display())))
        }
    }
}

fn problem_seed(src: &ProblemSource) -> Option<u64> {
    match src {
        ProblemSource::Synthetic { seed, .. } | ProblemSource::Csv { seed, .. } => Some(*seed),
    }
}

fn hash_config(config: &ExperimentConfig) -> u64 {
    // FNV-1a over the canonical JSON encoding
    let bytes = serde_json::to_vec(config).unwrap_or_default();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}
