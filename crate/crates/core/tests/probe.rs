//! Scratch probes for acceptance calibration (deleted before finalizing).

use rayon::prelude::*;
use rkmode::aggregate::RowStrategy;
use rkmode::analysis::{bound_curve, theorem_constants, CategoryCounts};
use rkmode::harness::{error_model, ErrorRule};
use rkmode::model::{make_synthetic_problem, AdversaryConfig};
use rkmode::rng::derive_seed;
use rkmode::solver::{solve_mode_kaczmarz, SolveOptions};

#[test]
#[ignore]
fn probe_bound() {
    let problem = make_synthetic_problem(50, 10, 2024).unwrap();
    println!("sigma_min_tilde = {}", problem.sigma_min_tilde());
    let e_row = error_model(ErrorRule::FixedMagnitude, 1e-3, 3, 1e-9, 1).unwrap();
    println!("e_row = {e_row:?}");
    let adv = AdversaryConfig::uniform(50, &[4, 2, 2, 2], 5, &e_row).unwrap();
    let counts = CategoryCounts::new(5, &[4, 2, 2, 2]).unwrap();
    let d0 = 2;
    let tc = theorem_constants(50, d0, &[(counts, 50)], problem.sigma_min_tilde()).unwrap();
    println!("alpha = {}, q_min = {}", tc.alpha, rkmode::analysis::rational::rat_to_f64(&tc.q_min));
    let x_star = problem.x_star().unwrap().to_vec();
    let x0_err = x_star.iter().map(|v| v * v).sum::<f64>();
    let err_norms = adv.scaled_error_norms_sq(problem.row_norms_sq());
    let iters = vec![10u64, 100, 1000, 10_000];
    let curve = bound_curve(&tc, x0_err, &err_norms, &iters).unwrap();
    println!("bound = {:?}, asymptote = {}", curve.values, curve.asymptote);

    let opts = SolveOptions {
        d0,
        tol: 0.0,
        strategy: RowStrategy::MaxModeSize,
        checkpoints: iters.clone(),
        ..SolveOptions::default()
    }
    .with_max_iter(10_000);
    let mut opts = opts;
    opts.checkpoints = iters.clone();
    let t0 = std::time::Instant::now();
    let sums: Vec<Vec<f64>> = (0..500u64)
        .into_par_iter()
        .map(|t| {
            let rec = solve_mode_kaczmarz(&problem, &adv, &opts, derive_seed(7, t)).unwrap();
            iters.iter().map(|&i| rec.err_sq_at(i).unwrap()).collect()
        })
        .collect();
    let mean: Vec<f64> = (0..iters.len())
        .map(|j| sums.iter().map(|s| s[j]).sum::<f64>() / sums.len() as f64)
        .collect();
    println!("mc mean = {mean:?} ({} ms)", t0.elapsed().as_millis());
}

#[test]
#[ignore]
fn probe_fullscale() {
    let problem = make_synthetic_problem(2400, 100, 42).unwrap();
    let t0 = std::time::Instant::now();
    println!("problem built in {} ms", t0.elapsed().as_millis());
    // criterion 6a: p=0.2, blocklist on, e=500, d0=6
    let e_row = error_model(ErrorRule::FixedMagnitude, 500.0, 3, 1e-9, 1).unwrap();
    let counts = rkmode::harness::split_categories(20, 0.2, 3).unwrap();
    println!("counts = {counts:?}");
    let adv = AdversaryConfig::uniform(2400, &counts, 4, &e_row).unwrap();
    let mut opts = SolveOptions { d0: 6, tol: 0.0, ..SolveOptions::default() }.with_max_iter(20_000);
    opts.blocklist_enabled = true;
    opts.update_cycle = 200;
    let t0 = std::time::Instant::now();
    let finals: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|t| {
            solve_mode_kaczmarz(&problem, &adv, &opts, derive_seed(100, t))
                .unwrap()
                .final_err_sq
                .unwrap()
        })
        .collect();
    let mut sorted = finals.clone();
    sorted.sort_by(f64::total_cmp);
    println!("6a finals: {sorted:?}");
    println!("median = {}, elapsed {} ms", sorted[5], t0.elapsed().as_millis());

    // criterion 6b: p=0.6, blocklist off, e=500
    let counts_b = rkmode::harness::split_categories(20, 0.6, 3).unwrap();
    let adv_b = AdversaryConfig::uniform(2400, &counts_b, 4, &e_row).unwrap();
    let opts_b = SolveOptions { d0: 6, tol: 0.0, ..SolveOptions::default() }.with_max_iter(20_000);
    let t0 = std::time::Instant::now();
    let finals_b: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|t| {
            solve_mode_kaczmarz(&problem, &adv_b, &opts_b, derive_seed(200, t))
                .unwrap()
                .final_err_sq
                .unwrap()
        })
        .collect();
    let mut sb = finals_b.clone();
    sb.sort_by(f64::total_cmp);
    println!("6b finals: {sb:?} ({} ms)", t0.elapsed().as_millis());

    // criterion 6c: p=0.6, blocklist on, e=1e-3, d0 in {2,8} at iter 1e4
    let e_small = error_model(ErrorRule::FixedMagnitude, 1e-3, 3, 1e-9, 1).unwrap();
    let adv_c = AdversaryConfig::uniform(2400, &counts_b, 4, &e_small).unwrap();
    for d0 in [2usize, 8] {
        let mut o = SolveOptions { d0, tol: 0.0, ..SolveOptions::default() }.with_max_iter(10_000);
        o.blocklist_enabled = true;
        o.update_cycle = 200;
        let t0 = std::time::Instant::now();
        let finals: Vec<f64> = (0..10u64)
            .into_par_iter()
            .map(|t| {
                solve_mode_kaczmarz(&problem, &adv_c, &o, derive_seed(300 + d0 as u64, t))
                    .unwrap()
                    .final_err_sq
                    .unwrap()
            })
            .collect();
        let mut s = finals.clone();
        s.sort_by(f64::total_cmp);
        println!("6c d0={d0}: median {} ({} ms)", s[5], t0.elapsed().as_millis());
    }
}

#[test]
#[ignore]
fn probe_table6() {
    let problem = make_synthetic_problem(2400, 100, 42).unwrap();
    let e_row = error_model(ErrorRule::FixedMagnitude, 1e-3, 3, 1e-9, 1).unwrap();
    for (p, d0) in [(0.6, 8usize), (0.4, 6)] {
        let counts = rkmode::harness::split_categories(20, p, 3).unwrap();
        let adv = AdversaryConfig::uniform(2400, &counts, 4, &e_row).unwrap();
        let opts = SolveOptions { d0, tol: 0.0, ..SolveOptions::default() }.with_max_iter(30_000);
        let t0 = std::time::Instant::now();
        let pts = rkmode::blocklist::blocklist_accuracy_vs_s(
            &problem,
            &adv,
            &opts,
            &[200, 500, 1000, 2000],
            20,
            999,
        )
        .unwrap();
        for pt in &pts {
            println!(
                "p={p} d0={d0} S={}: acc={:?} se={:?} ({} trials)",
                pt.s, pt.accuracy, pt.std_err, pt.trials_with_blocks
            );
        }
        println!("elapsed {} ms", t0.elapsed().as_millis());
    }
}

#[test]
#[ignore]
fn probe_6c_allrows() {
    use rkmode::solver::BlocklistScope;
    let problem = make_synthetic_problem(2400, 100, 42).unwrap();
    let counts_b = rkmode::harness::split_categories(20, 0.6, 3).unwrap();
    let e_small = error_model(ErrorRule::FixedMagnitude, 1e-3, 3, 1e-9, 1).unwrap();
    let adv_c = AdversaryConfig::uniform(2400, &counts_b, 4, &e_small).unwrap();
    for d0 in [2usize, 8] {
        let mut o = SolveOptions { d0, tol: 0.0, ..SolveOptions::default() }.with_max_iter(10_000);
        o.blocklist_enabled = true;
        o.update_cycle = 200;
        o.blocklist_scope = BlocklistScope::AllRows;
        let t0 = std::time::Instant::now();
        let finals: Vec<f64> = (0..10u64)
            .into_par_iter()
            .map(|t| {
                solve_mode_kaczmarz(&problem, &adv_c, &o, derive_seed(300 + d0 as u64, t))
                    .unwrap()
                    .final_err_sq
                    .unwrap()
            })
            .collect();
        let mut s = finals.clone();
        s.sort_by(f64::total_cmp);
        println!("6c-allrows d0={d0}: finals {s:?} median {} ({} ms)", s[5], t0.elapsed().as_millis());
    }
}

#[test]
#[ignore]
fn probe_6c_modesize() {
    let problem = make_synthetic_problem(2400, 100, 42).unwrap();
    let counts_b = rkmode::harness::split_categories(20, 0.6, 3).unwrap();
    let e_small = error_model(ErrorRule::FixedMagnitude, 1e-3, 3, 1e-9, 1).unwrap();
    let adv_c = AdversaryConfig::uniform(2400, &counts_b, 4, &e_small).unwrap();
    for d0 in [2usize, 8] {
        let mut o = SolveOptions {
            d0,
            tol: 0.0,
            strategy: RowStrategy::MaxModeSize,
            ..SolveOptions::default()
        }
        .with_max_iter(10_000);
        o.blocklist_enabled = true;
        o.update_cycle = 200;
        let t0 = std::time::Instant::now();
        let mut finals: Vec<f64> = (0..10u64)
            .into_par_iter()
            .map(|t| {
                solve_mode_kaczmarz(&problem, &adv_c, &o, derive_seed(300 + d0 as u64, t))
                    .unwrap()
                    .final_err_sq
                    .unwrap()
            })
            .collect();
        finals.sort_by(f64::total_cmp);
        println!("6c-modesize d0={d0}: finals {finals:?} median {} ({} ms)", finals[5], t0.elapsed().as_millis());
    }
}
