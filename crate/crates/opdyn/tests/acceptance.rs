//! Acceptance gate. Runs every criterion at its stated tolerance and prints one
//! `PASS`/`FAIL` line per criterion; exits nonzero if any fails.
//!
//! Run alone with `cargo test -p opdyn --test acceptance`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use opdyn::config::{HybridConfig, ModelKind, Reference};
use opdyn::core::exact::{exact_evolve_record, DenseState};
use opdyn::core::regressor::train_sgd;
use opdyn::core::tebd::{build_trotter_schedule, evolve_record, evolve_with};
use opdyn::core::tensor_core::{c, gate_from_bond_term, unitarity_deviation};
use opdyn::core::{build_bond_terms, ComplexMatrix, LocalOperator, Mlp, ModelSpec, MpsState, TrainConfig, Truncation, WindowSet};
use opdyn::{bench_scaling, hybrid_run, io};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn out_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name)
}

fn hybrid_criterion(name: &str, cfg: HybridConfig, full_bound: f64, pred_bound: Option<f64>) -> Outcome {
    let report = hybrid_run(&cfg).expect("valid config");
    let _ = io::write_run(&out_dir(name), &report);
    let (Some(full), Some(pred)) = (report.mean_epsilon, report.mean_epsilon_prediction) else {
        return outcome(false, format!("run failed: {:?}", report.failure));
    };
    let pass = full <= full_bound && pred_bound.is_none_or(|b| pred <= b);
    let train = report.training.as_ref().unwrap();
    outcome(
        pass,
        format!(
            "mean eps full {full:.3e} (<= {full_bound:e}), prediction-only {pred:.3e}{}; train mae {:.2e} after {} epochs; prefix consistent {:?}",
            pred_bound.map(|b| format!(" (<= {b:e})")).unwrap_or_default(),
            train.final_mae,
            train.epochs,
            report.prefix_consistent,
        ),
    )
}

fn criterion_1() -> Outcome {
    let cfg = HybridConfig { reference: Reference::Tebd, ..HybridConfig::defaults(ModelKind::Ising) };
    assert_eq!((cfg.n_sites, cfg.total_steps, cfg.max_bond, cfg.window, cfg.hidden, cfg.train_pairs), (12, 500, 200, 4, 32, 110));
    hybrid_criterion("ising", cfg, 1e-2, Some(2e-2))
}

fn criterion_2() -> Outcome {
    let cfg = HybridConfig { reference: Reference::Tebd, ..HybridConfig::defaults(ModelKind::Xxz) };
    assert_eq!((cfg.n_sites, cfg.total_steps, cfg.window, cfg.hidden, cfg.train_pairs), (12, 2000, 4, 64, 100));
    // bond dimension 2^6 = 64 is the largest a 12-site chain can need
    assert!(cfg.max_bond >= 64);
    hybrid_criterion("xxz", cfg, 2e-2, None)
}

fn max_trotter_error(spec: &ModelSpec, delta: f64, tau: f64) -> f64 {
    let steps = (tau / delta).round() as usize;
    let sched = build_trotter_schedule(&build_bond_terms(spec).unwrap(), delta).unwrap();
    let mut mps = MpsState::all_up(spec.n_sites).unwrap();
    let (tebd, _) = evolve_record(&mut mps, &sched, steps, &LocalOperator::sz(), &Truncation::unbounded()).unwrap();
    let exact = exact_evolve_record(spec, &DenseState::all_up(spec.n_sites).unwrap(), delta, steps, &LocalOperator::sz()).unwrap();
    tebd.values.iter().zip(&exact.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn criterion_3() -> Outcome {
    let spec = ModelSpec::ising(8, 1.0, 1.0);
    let coarse = max_trotter_error(&spec, 0.05, 5.0);
    let fine = max_trotter_error(&spec, 0.025, 5.0);
    let ratio = coarse / fine;
    outcome((3.0..=5.0).contains(&ratio), format!("max error {coarse:.3e} at delta 0.05, {fine:.3e} at 0.025, ratio {ratio:.3} in [3, 5]"))
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    for spec in [ModelSpec::ising(10, 1.0, 1.0), ModelSpec::xxz(10, 1.0, 0.5, 0.5)] {
        let sched = build_trotter_schedule(&build_bond_terms(&spec).unwrap(), 0.05).unwrap();
        let mut mps = MpsState::all_up(10).unwrap();
        let mut dense = DenseState::all_up(10).unwrap();
        let op = LocalOperator::sz();
        evolve_with(&mut mps, &sched, 40, &Truncation::unbounded(), |_, s| {
            dense.apply_trotter_step(&sched)?;
            worst = worst.max((s.averaged_expectation(&op)? - dense.averaged_expectation(&op)?).abs());
            Ok(())
        })
        .unwrap();
    }
    outcome(worst <= 1e-8, format!("max deviation {worst:.3e} over 40 steps of Ising and XXZ at N=10 (<= 1e-8)"))
}

fn criterion_5() -> Outcome {
    let base = HybridConfig { target_mae: 1e-3, ..HybridConfig::defaults(ModelKind::Ising) };
    let sizes = [8, 10, 12];
    let rows = bench_scaling(&sizes, &base, &[base.train_pairs; 3]).unwrap();
    let _ = io::ensure_dir(&out_dir("bench")).and_then(|_| io::write_bench_csv(&out_dir("bench").join(io::BENCH), &rows));
    if let Some(r) = rows.iter().find(|r| r.failure.is_some()) {
        return outcome(false, format!("size {} failed: {:?}", r.n_sites, r.failure));
    }
    let (small, large) = (&rows[0], &rows[2]);
    let hybrid_ratio = large.train_predict_s / small.train_predict_s;
    let tebd_ratio = large.full_tebd_s / small.full_tebd_s;
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("N={} train+predict {:.3}s ({} epochs) full {:.3}s", r.n_sites, r.train_predict_s, r.train_epochs.unwrap_or(0), r.full_tebd_s))
        .collect();
    outcome(hybrid_ratio < tebd_ratio, format!("train+predict ratio {hybrid_ratio:.2} < full-TEBD ratio {tebd_ratio:.2}; {}", table.join(", ")))
}

fn random_hermitian(rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(4, 4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()).scale(0.5)
}

fn least_squares_affine(data: &WindowSet) -> Vec<f64> {
    let p = data.window_size;
    let a = ComplexMatrix::from_fn(data.len(), p + 1, |r, k| c(if k < p { data.inputs[r][k] } else { 1.0 }, 0.0));
    let b = ComplexMatrix::from_fn(data.len(), 1, |r, _| c(data.labels[r], 0.0));
    let sol = (a.adjoint() * &a).lu().solve(&(a.adjoint() * b)).unwrap();
    sol.iter().map(|z| z.re).collect()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut notes = Vec::new();
    let mut pass = true;
    let mut check = |ok: bool, note: String| {
        pass &= ok;
        notes.push(format!("{note} {}", if ok { "ok" } else { "FAILED" }));
    };

    let mut collapse = 0.0f64;
    let mut fd_worst = 0.0f64;
    for trial in 0..200 {
        let (p, m) = (rng.random_range(1..7), rng.random_range(1..10));
        let mut net = Mlp::init(p, m, trial).unwrap();
        let params: Vec<f64> = (0..net.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        net.set_params(&params).unwrap();
        let x: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (w, b) = net.collapse_to_affine();
        let affine = b + w.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>();
        collapse = collapse.max((net.forward(&x).unwrap() - affine).abs());

        let n_ex = rng.random_range(1..8);
        let data = WindowSet {
            window_size: p,
            inputs: (0..n_ex).map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
            labels: (0..n_ex).map(|_| rng.random_range(-2.0..2.0)).collect(),
            source_delta: 1.0,
        };
        if data.inputs.iter().zip(&data.labels).any(|(x, y)| (net.forward(x).unwrap() - y).abs() <= 1e-3) {
            continue;
        }
        let grad = net.mae_gradient(&data).unwrap();
        for k in 0..params.len() {
            let mut probe = net.clone();
            let mut q = params.clone();
            let eps = 1e-6;
            q[k] += eps;
            probe.set_params(&q).unwrap();
            let up = probe.mae(&data).unwrap();
            q[k] -= 2.0 * eps;
            probe.set_params(&q).unwrap();
            let down = probe.mae(&data).unwrap();
            let fd = (up - down) / (2.0 * eps);
            fd_worst = fd_worst.max((fd - grad[k]).abs() / grad[k].abs().max(fd.abs()).max(1e-3));
        }
    }
    check(collapse <= 1e-12, format!("affine collapse {collapse:.1e}"));
    check(fd_worst <= 1e-4, format!("subgradient rel {fd_worst:.1e}"));

    let mut unitarity = 0.0f64;
    for _ in 0..200 {
        let h = random_hermitian(&mut rng);
        let delta = rng.random_range(0.001..1.0);
        for half in [false, true] {
            unitarity = unitarity.max(unitarity_deviation(&gate_from_bond_term(&h, delta, half).unwrap()));
        }
    }
    check(unitarity <= 1e-12, format!("gate unitarity {unitarity:.1e}"));

    let spec = ModelSpec::xxz(8, 1.0, 0.5, 0.5);
    let sched = build_trotter_schedule(&build_bond_terms(&spec).unwrap(), 0.05).unwrap();
    let mut mps = MpsState::all_up(8).unwrap();
    let stats = evolve_with(&mut mps, &sched, 100, &Truncation::unbounded(), |_, _| Ok(())).unwrap();
    let drift = (mps.norm() - 1.0).abs();
    check(drift <= 1e-8 && stats.cumulative_truncation_weight == 0.0, format!("norm drift {drift:.1e}"));

    let values: Vec<f64> = (0..60).map(|k| (0.3 * k as f64).cos()).collect();
    let data = WindowSet::from_values(&values, 4, None, 0.05).unwrap();
    let cfg = TrainConfig { max_epochs: 500, seed: 9, ..TrainConfig::default() };
    let train = || {
        let mut net = Mlp::init(4, 16, 3).unwrap();
        train_sgd(&mut net, &data, &cfg).unwrap();
        net.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    };
    check(train() == train(), "seeded training bit-identical".into());

    let mut series = vec![2.0, -1.0];
    while series.len() < 40 {
        let n = series.len();
        series.push(0.3 * series[n - 2] + 0.5 * series[n - 1] + 0.1);
    }
    let data = WindowSet::from_values(&series, 2, None, 1.0).unwrap();
    let oracle = least_squares_affine(&data);
    let mut net = Mlp::init(2, 8, 7).unwrap();
    train_sgd(&mut net, &data, &TrainConfig { target_mae: 1e-5, seed: 11, ..TrainConfig::default() }).unwrap();
    let (w, b) = net.collapse_to_affine();
    let off = w.iter().chain([&b]).zip(&oracle).map(|(g, o)| (g - o).abs()).fold(0.0, f64::max);
    let truth = [0.3, 0.5, 0.1].iter().zip(&oracle).map(|(t, o)| (t - o).abs()).fold(0.0, f64::max);
    check(off <= 0.01 && truth <= 1e-9, format!("recurrence coefficients off by {off:.1e}"));

    outcome(pass, notes.join(", "))
}

fn criterion_7() -> Outcome {
    let mut worst_tebd = 0.0f64;
    let mut worst_pred = 0.0f64;
    let mut failures = Vec::new();
    for model in [ModelKind::Ising, ModelKind::Xxz] {
        let cfg = HybridConfig {
            h: 0.0,
            reference: Reference::Tebd,
            target_mae: 1e-12,
            ..HybridConfig::defaults(model)
        };
        let r = hybrid_run(&cfg).unwrap();
        if let Some(f) = &r.failure {
            failures.push(format!("{model:?}: {}", f.message));
            continue;
        }
        let dev = |v: &[f64]| v.iter().map(|y| (y - 1.0).abs()).fold(0.0, f64::max);
        worst_tebd = worst_tebd.max(dev(&r.reference.unwrap().values));
        worst_pred = worst_pred.max(dev(&r.predicted.unwrap().values));
    }
    let pass = failures.is_empty() && worst_tebd <= 1e-9 && worst_pred <= 1e-9;
    outcome(pass, format!("max |<sz> - 1|: TEBD {worst_tebd:.1e}, predictor {worst_pred:.1e} (<= 1e-9) {}", failures.join("; ")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 ising hybrid reproduction", criterion_1),
        ("2 xxz hybrid reproduction", criterion_2),
        ("3 trotter order", criterion_3),
        ("4 mps vs dense gate sequence", criterion_4),
        ("5 scaling separation", criterion_5),
        ("6 property suites", criterion_6),
        ("7 trivial physics", criterion_7),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {name}: {} [{secs:.1}s] {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
