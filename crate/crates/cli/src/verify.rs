//! Self-contained numerical checks behind `liouville verify`.

use liouville_dmd::gram::{occupation_gram, GramHealth};
use liouville_dmd::kernels::rescale_center;
use liouville_dmd::spectrum_lab::{verification_suite, Check, Hardy3Weights};
use liouville_dmd::{KernelSpace, QuadratureRule, SpacePair, Trajectory, TrajectorySet};

fn check(name: &str, computed: f64, relation: &'static str, bound: f64) -> Check {
    let passed = match relation {
        "≤" => computed <= bound,
        "<" => computed < bound,
        ">" => computed > bound,
        _ => computed >= bound,
    };
    Check { name: name.into(), computed, bound, relation, passed }
}

fn quadrature_checks() -> Vec<Check> {
    let cubic = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
    let dt = 0.25;
    let values: Vec<f64> = (0..9).map(|s| cubic(s as f64 * dt)).collect();
    let simpson = QuadratureRule::Simpson.integrate_samples(&values, dt).unwrap_or(f64::NAN);
    let exact = 2.0 - 4.0 + 0.5 * 16.0 / 4.0;
    let even = QuadratureRule::Simpson.weights(4, 0.1).is_err();
    vec![
        check("simpson cubic exactness error", (simpson - exact).abs(), "≤", 1e-13),
        check("simpson rejects even sample count", if even { 1.0 } else { 0.0 }, ">", 0.0),
    ]
}

fn kernel_checks() -> Vec<Check> {
    let samples: Vec<Vec<f64>> = (0..=40).map(|s| vec![(0.1 * s as f64).cos(), 0.3 * (0.1 * s as f64).sin()]).collect();
    let traj = Trajectory::from_samples(0, 0.0, 0.05, &samples).expect("valid trajectory");
    let mut worst = 0.0f64;
    for &(mu1, mu2) in &[(1.0 / 1000.0, 1.0 / 999.0), (0.5, 2.0)] {
        let pair = SpacePair::exp_dot(mu1, mu2).expect("valid pair");
        let scaled = rescale_center(&pair, &traj).expect("exp_dot pair");
        for s in 0..traj.len() {
            let x = [0.7 - 0.03 * s as f64, -0.4 + 0.02 * s as f64];
            let a = pair.domain().eval(&x, traj.sample(s)).unwrap_or(f64::NAN);
            let b = pair.range().eval(&x, scaled.sample(s)).unwrap_or(f64::NAN);
            worst = worst.max((a - b).abs());
        }
    }
    let set = TrajectorySet::new(vec![traj.clone(), traj.with_id(1)]).expect("valid set");
    let set = TrajectorySet::new(
        set.iter()
            .enumerate()
            .map(|(k, t)| {
                let shifted: Vec<Vec<f64>> = (0..t.len()).map(|s| vec![t.sample(s)[0] + 0.1 * k as f64, t.sample(s)[1]]).collect();
                Trajectory::from_samples(k as u64, 0.0, 0.05, &shifted).expect("valid trajectory")
            })
            .collect(),
    )
    .expect("valid set");
    let mut asym = 0.0f64;
    let mut neg = 0.0f64;
    for space in [KernelSpace::exp_dot(0.5).expect("mu > 0"), KernelSpace::gauss_rbf(0.5).expect("mu > 0")] {
        if let Ok(h) = occupation_gram(&space, &set, QuadratureRule::Simpson).and_then(|g| GramHealth::of(g.as_ref())) {
            asym = asym.max(h.relative_asymmetry);
            neg = neg.max(-h.min_eigenvalue / h.max_eigenvalue);
        }
    }
    vec![
        check("center scaling identity deviation", worst, "<", 1e-13),
        check("occupation Gram relative asymmetry", asym, "≤", 1e-12),
        check("occupation Gram -min/max eigenvalue", neg, "≤", 1e-10),
    ]
}

/// All checks in report order.
pub fn run(weights: Hardy3Weights) -> Vec<Check> {
    let mut checks = verification_suite(weights);
    checks.extend(quadrature_checks());
    checks.extend(kernel_checks());
    checks
}
