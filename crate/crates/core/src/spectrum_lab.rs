//! Coefficient-space operators on weighted spaces of power series.
//!
//! A weighted space carries the norm `‖g‖² = Σ ω_m |a_m|²` for
//! `g = Σ a_m z^m`, so `{ z^m / √ω_m }` is an orthonormal basis. Operators
//! are represented as matrices between these orthonormal bases, which makes
//! their singular values the operator's singular values (up to truncation).
//!
//! The exact operators here serve as ground truth for the data-driven
//! decompositions: differentiation between weighted Hardy spaces, polynomial
//! multiplication between Fock-type spaces `F²_η → F²_μ`, and the 1-D
//! Liouville operator `g ↦ g′ f` from `F²_{μ₁}` to `F²_{μ₂}`.
//!
//! Weights are handled in log space so truncations past `m = 170` (where
//! `m!` overflows) stay finite.

use crate::{c64, Error, Matrix, Result};

/// Log-weight generator `m ↦ ln ω_m`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightedSpace {
    /// `ω_m = 1`.
    Hardy,
    /// `ω_m = (m + 1)³`.
    Hardy3,
    /// `ω_m = m!/μ^m`, the 1-D native space of `exp(μ x y)`.
    Fock { mu: f64 },
    /// Explicit weights.
    Custom(Vec<f64>),
}

fn ln_factorial(m: usize) -> f64 {
    (1..=m).map(|k| (k as f64).ln()).sum()
}

impl WeightedSpace {
    pub fn fock(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter(format!("Fock parameter must be positive, got {mu}")));
        }
        Ok(Self::Fock { mu })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Hardy => "H2".into(),
            Self::Hardy3 => "H2_3".into(),
            Self::Fock { mu } => format!("F2_{mu}"),
            Self::Custom(_) => "custom".into(),
        }
    }

    /// `ln ω_m`. Non-positive custom weights give `NaN`.
    pub fn ln_weight(&self, m: usize) -> f64 {
        match self {
            Self::Hardy => 0.0,
            Self::Hardy3 => 3.0 * ((m + 1) as f64).ln(),
            Self::Fock { mu } => ln_factorial(m) - m as f64 * mu.ln(),
            Self::Custom(w) => match w.get(m) {
                Some(&v) if v > 0.0 => v.ln(),
                _ => f64::NAN,
            },
        }
    }

    pub fn weight(&self, m: usize) -> f64 {
        self.ln_weight(m).exp()
    }

    /// Checks `ω_m > 0` for `m ≤ n`.
    pub fn check(&self, n: usize) -> Result<()> {
        for m in 0..=n {
            if !self.ln_weight(m).is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "weight ω_{m} of {} is not positive",
                    self.name()
                )));
            }
        }
        Ok(())
    }
}

/// Matrix of an operator between orthonormal monomial bases; entry `(k, m)`
/// is the coefficient of range basis element `k` in the image of domain basis
/// element `m`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub domain: WeightedSpace,
    pub range: WeightedSpace,
    pub entries: Matrix,
}

impl OperatorMatrix {
    /// Singular values, descending.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        self.entries
            .singular_values()
            .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))
    }
}

/// `d/dz` truncated to degrees `0..=n`:
/// `z^m/√ω_m ↦ m √(ω'_{m-1}/ω_m) · z^{m-1}/√ω'_{m-1}`.
pub fn diff_matrix(domain: &WeightedSpace, range: &WeightedSpace, n: usize) -> Result<OperatorMatrix> {
    if n < 1 {
        return Err(Error::InvalidParameter("truncation must be at least 1".into()));
    }
    domain.check(n)?;
    range.check(n)?;
    let mut entries = Matrix::zeros(n + 1, n + 1);
    for m in 1..=n {
        let ln = (m as f64).ln() + 0.5 * (range.ln_weight(m - 1) - domain.ln_weight(m));
        entries[(m - 1, m)] = ln.exp();
    }
    Ok(OperatorMatrix { domain: domain.clone(), range: range.clone(), entries })
}

/// The tail `P_M d/dz - d/dz` from `H²₃` to `H²`, where `P_M` projects onto
/// polynomials of degree at most `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailNorm {
    /// Largest singular value of the tail operator.
    pub operator_norm: f64,
    /// Its square: the ratio `‖(P_M d/dz - d/dz) g‖² / ‖g‖²` maximized over `g`,
    /// which the classical estimate bounds by `1/(M + 1)`.
    pub squared: f64,
}

/// Tail norm of differentiation `H²₃ → H²` truncated at degree `n ≥ 4M`.
pub fn tail_norm(m_cut: usize, n: usize) -> Result<TailNorm> {
    tail_norm_between(&WeightedSpace::Hardy3, &WeightedSpace::Hardy, m_cut, n)
}

/// [`tail_norm`] for arbitrary weighted spaces.
pub fn tail_norm_between(domain: &WeightedSpace, range: &WeightedSpace, m_cut: usize, n: usize) -> Result<TailNorm> {
    if n < 4 * m_cut || n < 1 {
        return Err(Error::InvalidParameter(format!("tail norm needs N ≥ 4M (M = {m_cut}, N = {n})")));
    }
    let mut op = diff_matrix(domain, range, n)?;
    for k in 0..=m_cut.min(n) {
        for m in 0..=n {
            op.entries[(k, m)] = 0.0;
        }
    }
    let operator_norm = op.singular_values()?.first().copied().unwrap_or(0.0);
    Ok(TailNorm { operator_norm, squared: operator_norm * operator_norm })
}

/// Norm of multiplication by `x^k` from `F²_η` to `F²_μ` over degrees `0..=n`:
/// `√(max_m ((m+k)!/(m! μ^k)) (η/μ)^m)`.
pub fn mult_norm(k: usize, eta: f64, mu: f64, n: usize) -> Result<f64> {
    if !(eta > 0.0 && mu > 0.0 && eta < mu) {
        return Err(Error::InvalidParameter(format!("multiplication norm needs 0 < η < μ (η = {eta}, μ = {mu})")));
    }
    let ln_c = |m: usize| {
        ln_factorial(m + k) - ln_factorial(m) - k as f64 * mu.ln() + m as f64 * (eta / mu).ln()
    };
    let best = (0..=n).map(ln_c).fold(f64::NEG_INFINITY, f64::max);
    Ok((0.5 * best).exp())
}

/// Matrix of `M_{x^k} : F²_η → F²_μ` over degrees `0..=n` in the domain.
/// Rows run over range degrees `0..=n+k`.
pub fn mult_matrix(k: usize, eta: f64, mu: f64, n: usize) -> Result<OperatorMatrix> {
    let domain = WeightedSpace::fock(eta)?;
    let range = WeightedSpace::fock(mu)?;
    let mut entries = Matrix::zeros(n + k + 1, n + 1);
    for m in 0..=n {
        entries[(m + k, m)] = (0.5 * (range.ln_weight(m + k) - domain.ln_weight(m))).exp();
    }
    Ok(OperatorMatrix { domain, range, entries })
}

/// `A_f g = g′ f` from `F²_{μ₁}(ℝ)` to `F²_{μ₂}(ℝ)` for a polynomial
/// `f = Σ_j c_j x^j`, truncated to degrees `0..=n` on both sides.
pub fn liouville_matrix_1d(f_coeffs: &[f64], mu1: f64, mu2: f64, n: usize) -> Result<OperatorMatrix> {
    if !(mu1 > 0.0 && mu2 > 0.0 && mu1 < mu2) {
        return Err(Error::InvalidParameter(format!("Liouville matrix needs 0 < μ₁ < μ₂ (μ₁ = {mu1}, μ₂ = {mu2})")));
    }
    let domain = WeightedSpace::fock(mu1)?;
    let range = WeightedSpace::fock(mu2)?;
    let mut entries = Matrix::zeros(n + 1, n + 1);
    for m in 1..=n {
        for (j, &c) in f_coeffs.iter().enumerate() {
            let k = m - 1 + j;
            if c == 0.0 || k > n {
                continue;
            }
            let scale = (0.5 * (range.ln_weight(k) - domain.ln_weight(m))).exp();
            entries[(k, m)] += m as f64 * c * scale;
        }
    }
    Ok(OperatorMatrix { domain, range, entries })
}

/// `A_f` in the plain monomial basis `{x^m}` (degrees `0..=n`); its
/// eigenvalues are those of the truncated operator viewed inside the larger
/// space, e.g. `{0, 1, …, n}` for `f(x) = x`.
pub fn liouville_monomial_matrix_1d(f_coeffs: &[f64], n: usize) -> Matrix {
    let mut a = Matrix::zeros(n + 1, n + 1);
    for m in 1..=n {
        for (j, &c) in f_coeffs.iter().enumerate() {
            let k = m - 1 + j;
            if k <= n {
                a[(k, m)] += m as f64 * c;
            }
        }
    }
    a
}

/// Eigenvalues of [`liouville_monomial_matrix_1d`], sorted by real part.
pub fn liouville_eigenvalues_1d(f_coeffs: &[f64], n: usize) -> Result<Vec<c64>> {
    let mut vals = liouville_monomial_matrix_1d(f_coeffs, n)
        .eigenvalues()
        .map_err(|e| Error::LinearAlgebra(format!("eigenvalues failed: {e:?}")))?;
    vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(vals)
}

/// The `top_k` largest singular values of `op`, padded with zeros.
pub fn oracle_svd(op: &OperatorMatrix, top_k: usize) -> Result<Vec<f64>> {
    let mut sv = op.singular_values()?;
    sv.resize(sv.len().max(top_k), 0.0);
    sv.truncate(top_k);
    Ok(sv)
}

/// One row of the verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub computed: f64,
    pub bound: f64,
    pub relation: &'static str,
    pub passed: bool,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let head = if self.bound != 0.0 && self.bound.abs() < 1e-3 {
            format!("{} {} {:.0e}", self.name, self.relation, self.bound)
        } else {
            format!("{} {} {:.6}", self.name, self.relation, self.bound)
        };
        write!(
            f,
            "{head:<58} computed {:>13.6e}  {}",
            self.computed,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

fn le_check(name: String, computed: f64, bound: f64) -> Check {
    Check { passed: computed <= bound, name, computed, bound, relation: "≤" }
}

/// Weight sequence of `H²₃` used by [`verification_suite`]; swapping it for
/// the `m³` sequence (zero at `m = 0`) trips the positivity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Hardy3Weights {
    #[default]
    ShiftedCubes,
    Cubes,
}

/// Runs the coefficient-space bound checks.
pub fn verification_suite(weights: Hardy3Weights) -> Vec<Check> {
    let h3 = match weights {
        Hardy3Weights::ShiftedCubes => WeightedSpace::Hardy3,
        Hardy3Weights::Cubes => WeightedSpace::Custom((0..=400).map(|m| (m as f64).powi(3)).collect()),
    };
    let hardy = WeightedSpace::Hardy;
    let mut checks = Vec::new();

    match h3.check(1) {
        Ok(()) => checks.push(Check {
            name: "H2_3 weights positive".into(),
            computed: h3.weight(0),
            bound: 0.0,
            relation: ">",
            passed: true,
        }),
        Err(_) => {
            checks.push(Check {
                name: "H2_3 weights positive".into(),
                computed: 0.0,
                bound: 0.0,
                relation: ">",
                passed: false,
            });
            return checks;
        }
    }

    let ms = [0usize, 1, 2, 5, 10, 20, 50];
    let mut previous = f64::INFINITY;
    for &m in &ms {
        let n = 4 * m.max(50);
        match tail_norm_between(&h3, &hardy, m, n) {
            Ok(t) => {
                checks.push(le_check(format!("tail_norm({m})"), t.squared, 1.0 / (m as f64 + 1.0)));
                checks.push(le_check(
                    format!("tail operator norm({m})"),
                    t.operator_norm,
                    1.0 / (m as f64 + 1.0).sqrt(),
                ));
                checks.push(Check {
                    name: format!("tail_norm({m}) decreasing"),
                    computed: t.squared,
                    bound: previous,
                    relation: "<",
                    passed: t.squared < previous,
                });
                previous = t.squared;
            }
            Err(e) => checks.push(Check {
                name: format!("tail_norm({m}): {e}"),
                computed: f64::NAN,
                bound: 0.0,
                relation: "≤",
                passed: false,
            }),
        }
    }

    if let Ok(d) = diff_matrix(&h3, &hardy, 200) {
        let s1 = d.singular_values().ok().and_then(|s| s.first().copied()).unwrap_or(f64::NAN);
        checks.push(le_check("d/dz H2_3 -> H2 norm".into(), s1, 1.0));
    }

    // k = 0 is the inclusion with norm 1, which exceeds the k = 1 value when
    // μ > 1, so monotonicity is checked from k = 1
    let mut last = 0.0;
    for k in 1..=6usize {
        let v = mult_norm(k, 1.0, 2.0, 400).unwrap_or(f64::NAN);
        let passed = v.is_finite() && v > last;
        checks.push(Check {
            name: format!("mult_norm(k={k}, eta=1, mu=2) finite, increasing"),
            computed: v,
            bound: last,
            relation: ">",
            passed,
        });
        last = v;
    }

    if let (Ok(a), Ok(b)) = (liouville_matrix_1d(&[0.0, 1.0], 1.0, 2.0, 50), liouville_matrix_1d(&[0.0, 1.0], 1.0, 2.0, 100)) {
        let (sa, sb) = (oracle_svd(&a, 5).unwrap_or_default(), oracle_svd(&b, 5).unwrap_or_default());
        let drift = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / sa[0];
        checks.push(le_check("liouville f=x SVD drift N=50 -> 100".into(), drift, 1e-6));
    }
    checks
}
