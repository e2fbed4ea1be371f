//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use liouville_dmd::eigen_dmd::{build_finite_rank_rep, fit_eigen, EigenOptions};
use liouville_dmd::gram::{EigenRepMatrices, GramBundle, GramHealth, DEFAULT_JITTER_REL};
use liouville_dmd::kernels::rescale_center;
use liouville_dmd::linalg::max_abs;
use liouville_dmd::model_io::{data_ref, load_model, save_document, EigenDocument, Model, ModelDocument};
use liouville_dmd::singular_dmd::{fit_singular, reconstruct_singular, SingularOptions};
use liouville_dmd::spectrum_lab::{liouville_eigenvalues_1d, liouville_matrix_1d, oracle_svd, tail_norm};
use liouville_dmd::trajdata::{load_snapshots, load_trajectories, window_snapshots, write_trajectories};
use liouville_dmd::{
    c64, sample_trajectory_bundle, EigenDmdModel, KernelSpace, QuadratureRule, SpacePair, SystemSpec, Trajectory,
    TrajectorySet,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel_l2(a: &Trajectory, b: impl Fn(usize) -> Vec<f64>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for s in 0..a.len() {
        let exact = b(s);
        for (x, e) in a.sample(s).iter().zip(&exact) {
            num += (x - e) * (x - e);
            den += e * e;
        }
    }
    (num / den).sqrt()
}

fn growth_bundle() -> TrajectorySet {
    let spec = SystemSpec::polynomial(vec![0.0, 1.0]).unwrap();
    sample_trajectory_bundle(&spec, &[(0.5, 1.5)], 20, 0.1, 0.005, 0).unwrap()
}

fn growth_pair() -> SpacePair {
    SpacePair::exp_dot(0.1, 0.3).unwrap()
}

fn decay_bundle() -> TrajectorySet {
    let spec = SystemSpec::polynomial(vec![0.0, -1.0]).unwrap();
    sample_trajectory_bundle(&spec, &[(-1.5, 1.5)], 30, 1.0, 0.05, 1).unwrap()
}

fn decay_pair() -> SpacePair {
    SpacePair::exp_dot(0.3, 1.0).unwrap()
}

fn rotation_bundle() -> TrajectorySet {
    let spec = SystemSpec::linear(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
    sample_trajectory_bundle(&spec, &[(-1.0, 1.0), (-1.0, 1.0)], 20, 1.0, 0.01, 2).unwrap()
}

fn zero_bundle() -> TrajectorySet {
    let spec = SystemSpec::linear(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
    sample_trajectory_bundle(&spec, &[(-1.0, 1.0), (-1.0, 1.0)], 8, 1.0, 0.05, 3).unwrap()
}

/// 151 snapshots of a 64-dimensional traveling-wave field sampled at h = 0.02.
fn synthetic_snapshot_csv(path: &std::path::Path) {
    let n = 64;
    let mut text = (0..n).map(|i| format!("u{i}")).collect::<Vec<_>>().join(",") + "\n";
    for s in 0..151 {
        let t = 0.02 * s as f64;
        let row: Vec<String> = (0..n)
            .map(|i| {
                let x = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                let v = (x - 1.3 * t).sin() + 0.4 * (2.0 * x + 0.7 * t).cos() + 0.1 * (3.0 * x - 2.1 * t).sin();
                format!("{v:.16e}")
            })
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    let mut previous = f64::INFINITY;
    for m in [0usize, 1, 2, 5, 10, 20, 50] {
        let t = tail_norm(m, 4 * m.max(50)).unwrap();
        let bound = 1.0 / (m as f64 + 1.0);
        ok &= t.squared <= bound && t.operator_norm <= bound.sqrt() && t.squared < previous;
        previous = t.squared;
        lines.push(format!("M={m}: {:.6} (norm {:.6})", t.squared, t.operator_norm));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    outcome(ok, format!("{} in {elapsed:.2?}", lines.join(", ")))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for &(mu1, mu2) in &[(1.0 / 1000.0, 1.0 / 999.0), (0.5, 2.0), (0.1, 0.3), (1.0, 1.5)] {
        let pair = SpacePair::exp_dot(mu1, mu2).unwrap();
        let (k1, k2) = (KernelSpace::exp_dot(mu1).unwrap(), KernelSpace::exp_dot(mu2).unwrap());
        let samples: Vec<Vec<f64>> =
            (0..=100).map(|s| vec![(0.05 * s as f64).cos(), (0.03 * s as f64).sin(), 0.2]).collect();
        let traj = Trajectory::from_samples(0, 0.0, 0.01, &samples).unwrap();
        let scaled = rescale_center(&pair, &traj).unwrap();
        for _ in 0..100 {
            let s = rng.gen_range(0..traj.len());
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let diff = (k1.eval(&x, traj.sample(s)).unwrap() - k2.eval(&x, scaled.sample(s)).unwrap()).abs();
            worst = worst.max(diff);
        }
    }
    let elapsed = start.elapsed();
    outcome(worst < 1e-13 && elapsed < Duration::from_secs(1), format!("max deviation {worst:.3e} in {elapsed:.2?}"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    // γ(t) = exp(At) x0 for A = [[-0.2, 1], [-1, -0.2]], g(x) = exp(μ xᵀc)
    let (mu, c, x0) = (0.7, [0.4, -0.9], [1.0, 0.5]);
    let gamma = |t: f64| {
        let (e, (s, co)) = ((-0.2 * t).exp(), t.sin_cos());
        [e * (co * x0[0] + s * x0[1]), e * (-s * x0[0] + co * x0[1])]
    };
    let field = |x: [f64; 2]| [-0.2 * x[0] + x[1], -x[0] - 0.2 * x[1]];
    let g = |x: [f64; 2]| (mu * (x[0] * c[0] + x[1] * c[1])).exp();
    let grad_dot_f = |x: [f64; 2]| {
        let f = field(x);
        mu * g(x) * (c[0] * f[0] + c[1] * f[1])
    };
    let horizon = 2.0;
    let exact = g(gamma(horizon)) - g(gamma(0.0));
    let mut errors = Vec::new();
    for k in 3..8 {
        let samples = (1usize << k) + 1;
        let dt = horizon / (samples - 1) as f64;
        let values: Vec<f64> = (0..samples).map(|s| grad_dot_f(gamma(s as f64 * dt))).collect();
        let integral = QuadratureRule::Simpson.integrate_samples(&values, dt).unwrap();
        errors.push((integral - exact).abs());
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    outcome(
        worst >= 3.5 && elapsed < Duration::from_secs(5),
        format!("orders {:.2?} in {elapsed:.2?}", orders),
    )
}

fn nearest_eigenvalues(model: &EigenDmdModel, targets: &[f64]) -> Vec<c64> {
    targets
        .iter()
        .map(|&k| {
            *model
                .lambda()
                .iter()
                .min_by(|a, b| (**a - c64::new(k, 0.0)).norm().total_cmp(&(**b - c64::new(k, 0.0)).norm()))
                .unwrap()
        })
        .collect()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let oracle = liouville_eigenvalues_1d(&[0.0, 1.0], 10).unwrap();
    let targets: Vec<f64> = oracle.iter().filter(|z| z.norm() > 0.5).take(3).map(|z| z.re).collect();
    let model = fit_eigen(&growth_pair(), &growth_bundle(), &EigenOptions::default()).unwrap();
    let found = nearest_eigenvalues(&model, &targets);
    let errs: Vec<f64> = found.iter().zip(&targets).map(|(z, k)| (*z - c64::new(*k, 0.0)).norm() / k).collect();
    let elapsed = start.elapsed();
    let ok = targets == [1.0, 2.0, 3.0] && errs.iter().all(|&e| e < 0.1) && elapsed < Duration::from_secs(10);
    let shown: Vec<String> = found.iter().map(|z| format!("{:.4}{:+.4}i", z.re, z.im)).collect();
    outcome(ok, format!("targets {targets:?}, found {shown:?}, rel errors {errs:.3?} in {elapsed:.2?}"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let pair = decay_pair();
    let model = fit_singular(&pair, &decay_bundle(), &SingularOptions::default()).unwrap();
    let oracle = oracle_svd(&liouville_matrix_1d(&[0.0, -1.0], 0.3, 1.0, 100).unwrap(), 3).unwrap();
    let got = &model.sigma()[..3];
    let errs: Vec<f64> = got.iter().zip(&oracle).map(|(a, b)| (a - b).abs() / b).collect();
    let elapsed = start.elapsed();
    outcome(
        errs.iter().all(|&e| e < 0.05) && elapsed < Duration::from_secs(30),
        format!("σ̂ {got:.6?} vs oracle {oracle:.6?}, rel errors {errs:.2?} in {elapsed:.2?}"),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let set = rotation_bundle();
    let model = fit_eigen(&SpacePair::exp_dot(0.5, 1.0).unwrap(), &set, &EigenOptions::default()).unwrap();
    let mut train = 0.0f64;
    let mut full_turn = 0.0f64;
    for traj in set.iter() {
        let p = model.predict(traj.start(), traj.dt(), traj.len() - 1).unwrap();
        train = train.max(rel_l2(&p.trajectory, |s| traj.sample(s).to_vec()));
        let x0 = traj.start().to_vec();
        let turn = model.predict(&x0, 2.0 * std::f64::consts::PI / 400.0, 400).unwrap();
        full_turn = full_turn.max(rel_l2(&turn.trajectory, |s| {
            let (sn, cs) = (s as f64 * turn.trajectory.dt()).sin_cos();
            vec![cs * x0[0] + sn * x0[1], -sn * x0[0] + cs * x0[1]]
        }));
    }
    let eigen_time = start.elapsed();

    let start = Instant::now();
    let set = decay_bundle();
    let model = fit_singular(&decay_pair(), &set, &SingularOptions::default()).unwrap();
    let mut decay = 0.0f64;
    for traj in set.iter() {
        let rec = reconstruct_singular(&model, traj.start(), traj.duration(), traj.dt(), None, None).unwrap();
        decay = decay.max(rel_l2(&rec.trajectory, |s| traj.sample(s).to_vec()));
    }
    let singular_time = start.elapsed();
    let ok = train < 0.05
        && full_turn < 0.05
        && decay < 0.1
        && eigen_time < Duration::from_secs(30)
        && singular_time < Duration::from_secs(30);
    outcome(
        ok,
        format!(
            "(a) rotation rel L2 {train:.2e} on training horizon, {full_turn:.2e} over 2π in {eigen_time:.2?}; (b) decay rel L2 {decay:.2e} in {singular_time:.2?}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let set = zero_bundle();
    let pair = SpacePair::exp_dot(0.5, 1.0).unwrap();
    let singular = fit_singular(&pair, &set, &SingularOptions::default()).unwrap();
    let rep = build_finite_rank_rep(&pair, &set, QuadratureRule::Simpson, DEFAULT_JITTER_REL).unwrap();
    let eigen = fit_eigen(&pair, &set, &EigenOptions::default()).unwrap();
    let mut drift = 0.0f64;
    for traj in set.iter() {
        let x0 = traj.start();
        let rec = reconstruct_singular(&singular, x0, 1.0, 0.05, None, None).unwrap();
        let p = eigen.predict(x0, 0.05, 20).unwrap();
        for s in 0..=20 {
            for i in 0..2 {
                drift = drift.max((rec.trajectory.sample(s)[i] - x0[i]).abs());
                drift = drift.max((p.trajectory.sample(s)[i] - p.trajectory.sample(0)[i]).abs());
            }
        }
    }
    let ok = singular.is_zero_operator()
        && singular.sigma().iter().all(|&s| s == 0.0)
        && max_abs(rep.as_ref()) == 0.0
        && eigen.lambda().iter().all(|z| z.norm() == 0.0)
        && drift <= 1e-12;
    outcome(
        ok,
        format!(
            "singular rank {}, max |R| {:.1e}, max |λ| {:.1e}, prediction drift {drift:.1e}",
            singular.rank(),
            max_abs(rep.as_ref()),
            eigen.lambda().iter().map(|z| z.norm()).fold(0.0, f64::max)
        ),
    )
}

fn criterion_8() -> Outcome {
    let datasets: Vec<(&str, TrajectorySet, SpacePair)> = vec![
        ("growth", growth_bundle(), growth_pair()),
        ("decay", decay_bundle(), decay_pair()),
        ("rotation", rotation_bundle(), SpacePair::exp_dot(0.5, 1.0).unwrap()),
        ("zero", zero_bundle(), SpacePair::exp_dot(0.5, 1.0).unwrap()),
    ];
    let mut worst_asym = 0.0f64;
    let mut worst_neg = 0.0f64;
    let mut ok = true;
    for (_, set, pair) in &datasets {
        let bundle = GramBundle::assemble(pair, set, QuadratureRule::Simpson).unwrap();
        let eig = EigenRepMatrices::assemble(pair, set, QuadratureRule::Simpson).unwrap();
        for g in [&bundle.domain_differences, &bundle.range_occupation, &eig.alpha_range, &eig.beta_range, &eig.alpha_domain] {
            let h = GramHealth::of(g.as_ref()).unwrap();
            ok &= h.is_healthy();
            worst_asym = worst_asym.max(h.relative_asymmetry);
            if h.max_eigenvalue > 0.0 {
                worst_neg = worst_neg.max(-h.min_eigenvalue / h.max_eigenvalue);
            }
        }
    }
    outcome(
        ok,
        format!("{} datasets, max relative asymmetry {worst_asym:.1e}, max -λ_min/λ_max {worst_neg:.1e}", datasets.len()),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let snapshots = dir.path().join("snapshots.csv");
    synthetic_snapshot_csv(&snapshots);
    let matrix = load_snapshots(&snapshots).unwrap();
    let windows = window_snapshots(matrix.as_ref(), 0.0, 0.02, 5, 1).unwrap();
    let traj_path = dir.path().join("trajectories.csv");
    write_trajectories(&traj_path, &windows, &[("dt".into(), "0.02".into())]).unwrap();
    let set = load_trajectories(&traj_path).unwrap();
    let pair = SpacePair::exp_dot(1.0 / 1000.0, 1.0 / 999.0).unwrap();
    let fitted = fit_eigen(&pair, &set, &EigenOptions::default());
    let mut detail = format!("{} trajectories of {} samples", set.len(), set[0].len());
    let mut ok = set.len() == 147 && set.iter().all(|t| t.len() == 5);
    match fitted {
        Ok(model) => {
            let doc = ModelDocument::Eigen(EigenDocument::from_model(&model, data_ref(&traj_path).unwrap(), serde_json::Value::Null));
            let model_path = dir.path().join("model.json");
            save_document(&doc, &model_path).unwrap();
            let reloaded = matches!(load_model(&model_path), Ok(Model::Eigen(m)) if m.lambda().len() == model.lambda().len());
            ok &= reloaded;
            detail.push_str(&format!(", {} eigenpairs, reload {}", model.lambda().len(), if reloaded { "ok" } else { "failed" }));
        }
        Err(e) => {
            ok = false;
            detail.push_str(&format!(", fit failed: {e}"));
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(60);
    outcome(ok, format!("{detail} in {elapsed:.2?}"))
}

fn criterion_10() -> Outcome {
    let set = growth_bundle();
    let model = fit_eigen(&growth_pair(), &set, &EigenOptions::default()).unwrap();
    let mut worst = 0.0f64;
    for traj in set.iter() {
        let phi0 = model.eval_eigenfunction(traj.start()).unwrap();
        for j in 0..5.min(model.lambda().len()) {
            let (mut dev, mut peak) = (0.0f64, 0.0f64);
            for s in 0..traj.len() {
                let t = s as f64 * traj.dt();
                let phi = model.eval_eigenfunction(traj.sample(s)).unwrap()[j];
                dev = dev.max((phi - (model.lambda()[j] * t).exp() * phi0[j]).norm());
                peak = peak.max(phi.norm());
            }
            worst = worst.max(dev / peak);
        }
    }
    let top: Vec<String> = model.lambda().iter().take(5).map(|z| format!("{:.3}{:+.3}i", z.re, z.im)).collect();
    outcome(worst < 0.1, format!("top-5 λ {top:?}, max relative deviation {worst:.3e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("compactness tail bound", criterion_1),
        ("center scaling identity", criterion_2),
        ("adjoint identity convergence order", criterion_3),
        ("eigenvalue recovery for x' = x", criterion_4),
        ("oracle SVD agreement for x' = -x", criterion_5),
        ("reconstruction accuracy", criterion_6),
        ("degenerate dynamics", criterion_7),
        ("Gram health", criterion_8),
        ("snapshot pipeline shape", criterion_9),
        ("eigenfunction semigroup property", criterion_10),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<38} {}  {}",
            k + 1,
            name,
            if result.passed { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
