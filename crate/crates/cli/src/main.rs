//! Command-line front end: experiment runs, exact analysis tables,
//! block-list Monte Carlo, reference comparison, and the d0 scan.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use rkmode::analysis::rational::{rat_to_f64, to_decimal_string};
use rkmode::analysis::{
    mode_distribution, scan_d0, theorem_constants, CategoryCounts, GroupSizeRule,
};
use rkmode::blocklist::{estimate_blocklist_probs, estimates_to_csv, BlocklistExperiment};
use rkmode::harness::reference::{lookup_table, ResultRow};
use rkmode::harness::{compare_to_reference, run_experiment, ExperimentConfig};
use rkmode::{Error, Result};

#[derive(Parser)]
#[command(name = "rkmode", about = "Adversary-tolerant distributed Kaczmarz toolkit", version)]
struct Cli {
    /// Worker threads for trial-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config (TOML) and write CSV/JSON artifacts.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit an exact analysis table as CSV.
    Analyze {
        /// One of: mode-by-k, mode-by-n, d0-effect.
        #[arg(long)]
        table: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fractional digits for exact-rational columns.
        #[arg(long, default_value_t = 6)]
        digits: u32,
    },
    /// Monte-Carlo estimate of block-list probabilities.
    BlocklistMc {
        /// Category sizes, reliable first, e.g. 3,2.
        #[arg(long, value_delimiter = ',')]
        counts: Vec<u64>,
        #[arg(long)]
        n: u64,
        /// Cycle lengths to estimate, e.g. 5,10,50,100.
        #[arg(long, value_delimiter = ',')]
        s: Vec<u64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a results CSV against a stored reference table.
    Compare {
        #[arg(long)]
        table: String,
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan the contraction factor alpha over d0.
    ScanD0 {
        /// Workers per row.
        #[arg(long)]
        cap_n: u64,
        /// Workers sampled per row.
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        /// Total adversarial rate as a fraction NUM/DEN, e.g. 6/10.
        #[arg(long)]
        p: String,
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        sigma_min_tilde: f64,
        #[arg(long, default_value_t = 1)]
        d0_from: usize,
        #[arg(long)]
        d0_to: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Solve { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let summary = run_experiment(&cfg)?;
            println!("wrote {} sweep points under {}", summary.points.len(), summary.out_dir.display());
            for (i, errs) in summary.failed.iter().enumerate() {
                for e in errs {
                    eprintln!("point {i}: {e}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze { table, out, digits } => {
            let csv = analyze_table(&table, digits)?;
            write_or_print(out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::BlocklistMc { counts, n, s, trials, seed, out } => {
            let mut estimates = Vec::new();
            for &cycle in &s {
                let exp = BlocklistExperiment { counts: counts.clone(), n, s: cycle, trials, seed };
                estimates.push(estimate_blocklist_probs(&exp)?);
            }
            write_or_print(out, &estimates_to_csv(&estimates))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { table, results, out } => {
            let table = lookup_table(&table)?;
            let rows = read_results_csv(&results, table.key_cols, table.value_cols)?;
            let report = compare_to_reference(&table, &rows);
            let csv = report.to_csv();
            write_or_print(out, &csv)?;
            eprintln!("{}: {} passed, {} failed", report.table_id, report.passed, report.failed);
            Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::ScanD0 { cap_n, n, k, p, d1, sigma_min_tilde, d0_from, d0_to, out } => {
            let (num, den) = parse_fraction(&p)?;
            let counts = CategoryCounts::homogeneous(cap_n, n, k, num, den)?;
            let scan = scan_d0(&counts, d1, sigma_min_tilde, d0_from..=d0_to)?;
            let mut csv = String::from("d0,q,alpha,deriv_sign\n");
            for r in &scan.rows {
                csv.push_str(&format!("{},{},{},{}\n", r.d0, rat_to_f64(&r.q), r.alpha, r.deriv_sign));
            }
            csv.push_str(&format!("# best_d0 = {}\n", scan.best_d0));
            if let Some(c) = scan.continuous_minimizer {
                csv.push_str(&format!("# continuous_minimizer = {c}\n"));
            }
            write_or_print(out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn analyze_table(id: &str, digits: u32) -> Result<String> {
    match id {
        "mode-by-k" => {
            let mut csv = String::from("p,k,q_hat_l,q_hat_0,q,q_0\n");
            for (p_num, ks) in [(8u64, vec![5u64, 10, 15]), (2, vec![3, 5, 10, 15])] {
                for k in ks {
                    csv.push_str(&mode_row(100, 5, k, p_num, 10, digits)?);
                }
            }
            Ok(csv)
        }
        "mode-by-n" => {
            let mut csv = String::from("p,n,q_hat_l,q_hat_0,q,q_0\n");
            for p_num in [8u64, 2] {
                for n in [10u64, 15, 20] {
                    csv.push_str(&mode_row_by_n(100, n, 5, p_num, 10, digits)?);
                }
            }
            Ok(csv)
        }
        "d0-effect" => {
            let counts = CategoryCounts::homogeneous(10, 5, 3, 6, 10)?;
            let mut csv = String::from("d0,q,beta\n");
            for d0 in [2usize, 3, 5] {
                let tc = theorem_constants(10, d0, &[(counts.clone(), 10)], 1.0)?;
                let q = tc.homogeneous_q.clone().unwrap();
                let beta = tc.homogeneous_beta.clone().unwrap();
                csv.push_str(&format!(
                    "{},{},{}\n",
                    d0,
                    to_decimal_string(&q, digits.max(8)),
                    to_decimal_string(&beta, digits.max(8))
                ));
            }
            Ok(csv)
        }
        other => Err(Error::UnknownTable(other.to_string())),
    }
}

fn mode_row(cap_n: u64, n: u64, k: u64, p_num: u64, p_den: u64, digits: u32) -> Result<String> {
    let counts = CategoryCounts::homogeneous(cap_n, n, k, p_num, p_den)?;
    let d = mode_distribution(&counts, GroupSizeRule::PluralityNonUnanimous);
    let q0 = d.q0();
    Ok(format!(
        "{},{},{},{},{},{:.*}\n",
        p_num as f64 / p_den as f64,
        k,
        to_decimal_string(&d.qhat[1], digits),
        to_decimal_string(&d.qhat[0], digits),
        to_decimal_string(&d.q, digits),
        digits as usize,
        q0,
    ))
}

fn mode_row_by_n(cap_n: u64, n: u64, k: u64, p_num: u64, p_den: u64, digits: u32) -> Result<String> {
    let counts = CategoryCounts::homogeneous(cap_n, n, k, p_num, p_den)?;
    let d = mode_distribution(&counts, GroupSizeRule::PluralityNonUnanimous);
    Ok(format!(
        "{},{},{},{},{},{:.*}\n",
        p_num as f64 / p_den as f64,
        n,
        to_decimal_string(&d.qhat[1], digits),
        to_decimal_string(&d.qhat[0], digits),
        to_decimal_string(&d.q, digits),
        digits as usize,
        d.q0(),
    ))
}

fn parse_fraction(s: &str) -> Result<(u64, u64)> {
    let parts: Vec<&str> = s.split('/').collect();
    match parts.as_slice() {
        [num, den] => Ok((
            num.trim().parse().map_err(|_| Error::Config(format!("bad fraction `{s}`")))?,
            den.trim().parse().map_err(|_| Error::Config(format!("bad fraction `{s}`")))?,
        )),
        _ => Err(Error::Config(format!("expected NUM/DEN, got `{s}`"))),
    }
}

fn write_or_print(out: Option<PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, body)?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

/// Read a results CSV, picking key and value columns by header name.
fn read_results_csv(
    path: &std::path::Path,
    key_cols: &[&str],
    value_cols: &[&str],
) -> Result<Vec<ResultRow>> {
    let body = std::fs::read_to_string(path)?;
    let mut lines = body.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Config("results csv is empty".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let col_index = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::Config(format!("results csv lacks column `{name}`")))
    };
    let key_idx: Vec<usize> = key_cols.iter().map(|c| col_index(c)).collect::<Result<_>>()?;
    let val_idx: Vec<usize> = value_cols.iter().map(|c| col_index(c)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for line in lines {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let keys = key_idx.iter().map(|&i| normalize_key(cols[i])).collect();
        let values = val_idx
            .iter()
            .map(|&i| cols.get(i).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN))
            .collect();
        rows.push(ResultRow { keys, values });
    }
    Ok(rows)
}

/// Keys compare as canonical decimal strings ("0.80" == "0.8").
fn normalize_key(s: &str) -> String {
    match s.parse::<f64>() {
        Ok(v) => format!("{v}"),
        Err(_) => s.to_string(),
    }
}
