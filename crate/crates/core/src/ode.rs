//! Classic fixed-step fourth-order Runge-Kutta.

use crate::Error;

/// Default bound on `‖x‖` past which integration aborts.
pub const DEFAULT_BLOWUP_BOUND: f64 = 1e6;

/// One RK4 step of `ẋ = f(x)`.
pub fn rk4_step<F>(f: &mut F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, k)| x + s * k).collect() };
    let k1 = f(x);
    let k2 = f(&axpy(x, &k1, 0.5 * h));
    let k3 = f(&axpy(x, &k2, 0.5 * h));
    let k4 = f(&axpy(x, &k3, h));
    x.iter()
        .enumerate()
        .map(|(i, xi)| xi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Outcome of a guarded integration.
#[derive(Debug)]
pub struct Integration {
    /// Accepted states, starting with `x0`.
    pub states: Vec<Vec<f64>>,
    /// Set when the blow-up guard stopped integration early.
    pub blow_up: Option<Error>,
}

/// Integrates `ẋ = f(x)` over `steps` steps of size `h` from `t0`, stopping
/// before any state whose norm exceeds `bound` (or is not finite).
pub fn integrate<F>(mut f: F, x0: &[f64], t0: f64, h: f64, steps: usize, bound: f64) -> Integration
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    for k in 0..steps {
        let next = rk4_step(&mut f, &states[k], h);
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm <= bound) {
            return Integration {
                states,
                blow_up: Some(Error::BlowUp { time: t0 + (k + 1) as f64 * h, norm, bound }),
            };
        }
        states.push(next);
    }
    Integration { states, blow_up: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let out = integrate(|x| vec![-x[0]], &[1.0], 0.0, 1e-3, 1000, DEFAULT_BLOWUP_BOUND);
        assert!(out.blow_up.is_none());
        assert!((out.states[1000][0] - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn guard_trips() {
        let out = integrate(|x| vec![x[0] * x[0]], &[1.0], 0.0, 1e-3, 2000, 1e6);
        assert!(matches!(out.blow_up, Some(Error::BlowUp { .. })));
        assert!(out.states.len() < 1100);
    }
}
