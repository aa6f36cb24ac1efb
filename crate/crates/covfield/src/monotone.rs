//! Operator monotone functions `F: [0,∞) → (0,∞)`: the standard catalog
//! (Bures, harmonic, geometric, Kubo–Mori, Wigner–Yanase), scalar and
//! Hermitian functional calculus, numerical operator-monotonicity
//! certification through Löwner (divided-difference) matrices, and the
//! Petz symmetry test `F(t) = t·F(1/t)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CovError, Result};
use crate::linalg::{cr, hermitian_eigen, operator_norm, CMat};

/// Spectrum entries of functional-calculus arguments may dip this far below
/// zero before being clamped; anything lower is a domain error.
pub const SPECTRUM_CLAMP: f64 = 1e-10;
/// Relative PSD tolerance of the Löwner test.
pub const LOEWNER_TOL_REL: f64 = 1e-8;
/// Relative tolerance of the Petz symmetry test.
pub const PETZ_TOL_REL: f64 = 1e-12;
/// Width of the series window around the removable singularity of Kubo–Mori.
const KUBO_MORI_WINDOW: f64 = 1e-6;

#[derive(Clone, Debug)]
enum Rule {
    /// `(1+t)/2`
    Bures,
    /// `2t/(1+t)`
    Harmonic,
    /// `√t`
    Geometric,
    /// `(t−1)/log t`, removable singularity at `t = 1`
    KuboMori,
    /// `((1+√t)/2)²`
    WignerYanase,
    /// User-supplied scalar expression in the variable `t`.
    Expr(String),
}

/// A scalar function `F` positive on `(0,∞)`, tracked together with its
/// right limit at zero, its value at one, and a Petz symmetry flag.
#[derive(Clone, Debug)]
pub struct MonotoneFunction {
    name: String,
    rule: Rule,
    f_zero: f64,
    f_one: f64,
    petz_symmetric: bool,
}

fn kubo_mori(t: f64) -> f64 {
    if (t - 1.0).abs() < KUBO_MORI_WINDOW {
        // (t−1)/log t = 1 / Σ_{k≥0} (1−t)^k/(k+1), truncated at six terms
        let u = 1.0 - t;
        let mut denom = 0.0;
        let mut pow = 1.0;
        for k in 0..6 {
            denom += pow / (k as f64 + 1.0);
            pow *= u;
        }
        1.0 / denom
    } else {
        (t - 1.0) / t.ln()
    }
}

impl MonotoneFunction {
    fn builtin(name: &str, rule: Rule, f_zero: f64) -> Self {
        let mut f = MonotoneFunction {
            name: name.to_string(),
            rule,
            f_zero,
            f_one: 1.0,
            petz_symmetric: true,
        };
        f.f_one = f.eval_raw(1.0);
        f
    }

    /// Parse a user-supplied expression in the variable `t`. The right limit
    /// at zero and the Petz flag are probed numerically.
    pub fn from_expr(name: &str, expr: &str) -> Result<Self> {
        let parsed: meval::Expr = expr
            .parse()
            .map_err(|e| CovError::InvalidInput(format!("cannot parse expression: {e}")))?;
        let bound = parsed
            .bind("t")
            .map_err(|e| CovError::InvalidInput(format!("expression must use 't': {e}")))?;
        let probe = bound(1.0);
        if !probe.is_finite() {
            return Err(CovError::InvalidInput("expression is not finite at t = 1".into()));
        }
        let mut f = MonotoneFunction {
            name: name.to_string(),
            rule: Rule::Expr(expr.to_string()),
            f_zero: 0.0,
            f_one: probe,
            petz_symmetric: false,
        };
        f.f_zero = f.eval_raw(1e-12);
        f.petz_symmetric = f.petz_symmetry_test(&log_grid(1e-3, 1e3, 31));
        Ok(f)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The right limit `γ = F(0⁺)`.
    pub fn f_zero(&self) -> f64 {
        self.f_zero
    }

    /// `β = F(1)`.
    pub fn f_one(&self) -> f64 {
        self.f_one
    }

    pub fn is_petz_symmetric(&self) -> bool {
        self.petz_symmetric
    }

    fn eval_raw(&self, t: f64) -> f64 {
        match &self.rule {
            Rule::Bures => 0.5 * (1.0 + t),
            Rule::Harmonic => 2.0 * t / (1.0 + t),
            Rule::Geometric => t.sqrt(),
            Rule::KuboMori => kubo_mori(t),
            Rule::WignerYanase => {
                let s = 0.5 * (1.0 + t.sqrt());
                s * s
            }
            Rule::Expr(src) => {
                let parsed: meval::Expr = src.parse().expect("validated at construction");
                let bound = parsed.bind("t").expect("validated at construction");
                bound(t)
            }
        }
    }

    /// Evaluate at a nonnegative scalar; `F(0)` returns the stored right limit.
    pub fn eval_scalar(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(CovError::Domain(format!(
                "monotone functions are defined on [0,∞), got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(self.f_zero);
        }
        Ok(self.eval_raw(t))
    }

    /// Spectral calculus on a Hermitian matrix with spectrum in
    /// `[-1e-10, ∞)`; small negative eigenvalues are clamped to zero.
    pub fn eval_hermitian(&self, h: &CMat) -> Result<CMat> {
        let eig = hermitian_eigen(h);
        if eig.min_value() < -SPECTRUM_CLAMP {
            return Err(CovError::Domain(format!(
                "spectrum reaches {} below the clamping window",
                eig.min_value()
            )));
        }
        let mut out = CMat::zeros(h.nrows(), h.ncols());
        for (i, &l) in eig.values.iter().enumerate() {
            let v = eig.vectors.column(i);
            out += v * v.adjoint() * cr(self.eval_scalar(l.max(0.0))?);
        }
        Ok(out)
    }

    /// Central-difference derivative with step `1e-6·t`.
    fn derivative(&self, t: f64) -> f64 {
        let h = 1e-6 * t;
        (self.eval_raw(t + h) - self.eval_raw(t - h)) / (2.0 * h)
    }

    /// Löwner divided-difference test on a set of distinct positive points.
    /// Returns the PSD verdict and the smallest eigenvalue found.
    pub fn loewner_test(&self, points: &[f64]) -> Result<(bool, f64)> {
        if points.len() < 2 {
            return Err(CovError::InvalidInput("need at least two points".into()));
        }
        if points.iter().any(|&t| t <= 0.0) {
            return Err(CovError::InvalidInput("points must be positive".into()));
        }
        for (i, &a) in points.iter().enumerate() {
            for &b in &points[i + 1..] {
                if a == b {
                    return Err(CovError::InvalidInput(format!("duplicate point {a}")));
                }
            }
        }
        let n = points.len();
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = if i == j {
                    self.derivative(points[i])
                } else {
                    (self.eval_raw(points[i]) - self.eval_raw(points[j]))
                        / (points[i] - points[j])
                };
                m[(i, j)] = cr(v);
            }
        }
        let min = hermitian_eigen(&m).min_value();
        let scale = operator_norm(&m).max(f64::MIN_POSITIVE);
        Ok((min >= -LOEWNER_TOL_REL * scale, min))
    }

    /// Check `F(t) = t·F(1/t)` on a grid of positive points.
    pub fn petz_symmetry_test(&self, grid: &[f64]) -> bool {
        grid.iter().all(|&t| {
            let f = self.eval_raw(t);
            (f - t * self.eval_raw(1.0 / t)).abs() < PETZ_TOL_REL * f.abs().max(1.0)
        })
    }
}

/// The default catalog.
pub fn catalog() -> Vec<MonotoneFunction> {
    vec![
        MonotoneFunction::builtin("bures", Rule::Bures, 0.5),
        MonotoneFunction::builtin("harmonic", Rule::Harmonic, 0.0),
        MonotoneFunction::builtin("geometric", Rule::Geometric, 0.0),
        MonotoneFunction::builtin("kubo-mori", Rule::KuboMori, 0.0),
        MonotoneFunction::builtin("wigner-yanase", Rule::WignerYanase, 0.25),
    ]
}

pub fn by_name(name: &str) -> Result<MonotoneFunction> {
    catalog()
        .into_iter()
        .find(|f| f.name() == name)
        .ok_or_else(|| {
            CovError::InvalidInput(format!(
                "unknown function '{name}'; catalog: bures, harmonic, geometric, kubo-mori, wigner-yanase"
            ))
        })
}

/// Logarithmically spaced grid on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Seeded random grid of distinct points, log-uniform on `[1e-2, 1e2]`.
pub fn random_log_grid(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let e: f64 = rng.random_range(-2.0..2.0);
        let t = 10f64.powf(e);
        if pts.iter().all(|&p: &f64| (p - t).abs() > 1e-12 * t) {
            pts.push(t);
        }
    }
    pts
}
