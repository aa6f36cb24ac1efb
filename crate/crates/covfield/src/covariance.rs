//! The classified covariance fields: the covariance operator
//! `T_ρ = F(Δ_ρ) + (α−β)|ξ_𝟙⟩⟨ξ_𝟙|` on the GNS space, the sesquilinear
//! covariance form it induces, and the monotone Riemannian metric on
//! faithful states obtained by inverting the superoperator
//! `F(L_ϱ R_ϱ⁻¹) R_ϱ` blockwise on the embedded matrix space.

use crate::algebra::AlgebraElement;
use crate::error::{CovError, Result};
use crate::gns::{gns_inner, GnsOperator, GnsSpace, GnsVector};
use crate::linalg::{
    cr, hermitian_eigen, unvec_col, vec_col, CMat, C64,
};
use crate::monotone::{random_log_grid, MonotoneFunction};
use crate::states::State;

/// The parameters of a covariance field: an operator monotone `F` together
/// with `α > 0`; `β = F(1)` is fixed by construction.
#[derive(Clone, Debug)]
pub struct CovarianceSpec {
    f: MonotoneFunction,
    alpha: f64,
    beta: f64,
}

impl CovarianceSpec {
    /// Certify `F` through the Löwner test and fix `β = F(1)`.
    pub fn new(f: MonotoneFunction, alpha: f64) -> Result<Self> {
        if alpha <= 0.0 {
            return Err(CovError::InvalidInput(format!("α must be positive, got {alpha}")));
        }
        for seed in 0..4u64 {
            let grid = random_log_grid(0xC0FFEE ^ seed, 12);
            let (ok, min) = f.loewner_test(&grid)?;
            if !ok {
                return Err(CovError::Certification(format!(
                    "'{}' failed the Löwner test (smallest eigenvalue {min})",
                    f.name()
                )));
            }
        }
        let beta = f.f_one();
        Ok(CovarianceSpec { f, alpha, beta })
    }

    /// The default parameterization `α = β = F(1)`.
    pub fn reduced(f: MonotoneFunction) -> Result<Self> {
        let alpha = f.f_one();
        CovarianceSpec::new(f, alpha)
    }

    pub fn function(&self) -> &MonotoneFunction {
        &self.f
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// The covariance operator of a spec at a state, as a matrix on the GNS space.
pub struct CovarianceOperator {
    pub space: GnsSpace,
    pub operator: GnsOperator,
    spec: CovarianceSpec,
}

/// Build `T_ρ = F(Δ_ρ) + (α−β)|ξ_𝟙⟩⟨ξ_𝟙|` on the given GNS space.
/// Non-faithful states are allowed; on the off-support directions the
/// modular operator vanishes and `T_ρ` acts by `F(0)`.
pub fn covariance_operator(space: &GnsSpace, spec: &CovarianceSpec) -> Result<CovarianceOperator> {
    let delta = crate::linalg::hermitian_part(&space.modular_form_matrix()?);
    let f_delta = spec.f.eval_hermitian(&delta)?;
    let psi = space.cyclic_vector();
    let rank_one = &psi.coords * psi.coords.adjoint();
    let matrix = f_delta + rank_one * cr(spec.alpha - spec.beta);
    Ok(CovarianceOperator {
        space: space.clone(),
        operator: GnsOperator { space: space.clone(), matrix },
        spec: spec.clone(),
    })
}

impl CovarianceOperator {
    pub fn matrix(&self) -> &CMat {
        &self.operator.matrix
    }

    pub fn spec(&self) -> &CovarianceSpec {
        &self.spec
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(self.matrix()).min_value()
    }

    /// The covariance form `𝔠_ρ(ξ, η) = ⟨ξ, T_ρ η⟩_ρ`.
    pub fn form(&self, xi: &GnsVector, eta: &GnsVector) -> Result<C64> {
        let t_eta = self.operator.apply(eta)?;
        gns_inner(xi, &t_eta)
    }
}

/// Covariance form evaluated directly from a space, spec, and two vectors.
pub fn covariance_form(
    space: &GnsSpace,
    spec: &CovarianceSpec,
    xi: &GnsVector,
    eta: &GnsVector,
) -> Result<C64> {
    covariance_operator(space, spec)?.form(xi, eta)
}

/// A tangent vector at a faithful state: a Hermitian element with zero
/// normalized trace, stored in the trace-representative normalization.
#[derive(Clone, Debug)]
pub struct TangentVector {
    element: AlgebraElement,
}

impl TangentVector {
    /// From the trace representative `ζ̃` with `τ(ζ̃) = 0`.
    pub fn from_trace_representative(state: &State, element: AlgebraElement) -> Result<Self> {
        if element.shape() != state.shape() {
            return Err(CovError::ShapeMismatch("tangent vector on a different algebra".into()));
        }
        if !state.is_faithful() {
            return Err(CovError::Domain("tangent vectors live at faithful states".into()));
        }
        if !element.is_hermitian(1e-12) {
            return Err(CovError::InvalidInput("tangent vector must be Hermitian".into()));
        }
        let tr = element.trace();
        if tr.norm() > 1e-12 * (1.0 + element.frobenius_norm()) {
            return Err(CovError::InvalidInput(format!(
                "tangent vector must be traceless, τ(ζ) = {tr}"
            )));
        }
        Ok(TangentVector { element: element.hermitian_part() })
    }

    /// From ordinary-trace coordinates: `ζ̃ = K · ζ_ord`.
    pub fn from_ordinary(state: &State, ordinary: AlgebraElement) -> Result<Self> {
        let k = state.shape().total_dim() as f64;
        TangentVector::from_trace_representative(state, ordinary.scale(cr(k)))
    }

    pub fn trace_representative(&self) -> &AlgebraElement {
        &self.element
    }

    pub fn ordinary(&self) -> AlgebraElement {
        let k = self.element.shape().total_dim() as f64;
        self.element.scale(cr(1.0 / k))
    }
}

/// The modular superoperator `X ↦ ϱ X ϱ⁻¹` of one block, column-stacked:
/// `(ϱ⁻¹)ᵀ ⊗ ϱ`. Hermitian and positive for invertible Hermitian `ϱ`.
fn modular_superoperator_block(rho_block: &CMat) -> Result<CMat> {
    let inv = crate::linalg::try_inverse(rho_block)?;
    Ok(inv.transpose().kronecker(rho_block))
}

/// Per-block covariance superoperators `F(L R⁻¹) R` on the embedded space.
pub fn covariance_superoperator(state: &State, f: &MonotoneFunction) -> Result<Vec<CMat>> {
    ensure_faithful(state)?;
    state
        .density()
        .blocks()
        .iter()
        .map(|b| {
            let s = modular_superoperator_block(b)?;
            let f_s = f.eval_hermitian(&s)?;
            let r = b.transpose().kronecker(&CMat::identity(b.nrows(), b.nrows()));
            Ok(f_s * r)
        })
        .collect()
}

/// Per-block metric superoperators `F(L R⁻¹)⁻¹ R⁻¹`, the inverses of the
/// covariance superoperators.
pub fn metric_superoperator(state: &State, f: &MonotoneFunction) -> Result<Vec<CMat>> {
    ensure_faithful(state)?;
    state
        .density()
        .blocks()
        .iter()
        .map(|b| {
            let s = modular_superoperator_block(b)?;
            let eig = hermitian_eigen(&s);
            if eig.min_value() <= 0.0 {
                return Err(CovError::Domain(
                    "modular superoperator must be positive definite".into(),
                ));
            }
            let mut f_s_inv = CMat::zeros(s.nrows(), s.ncols());
            for (i, &l) in eig.values.iter().enumerate() {
                let v = eig.vectors.column(i);
                f_s_inv += v * v.adjoint() * cr(1.0 / f.eval_scalar(l)?);
            }
            let r_inv = crate::linalg::try_inverse(b)?
                .transpose()
                .kronecker(&CMat::identity(b.nrows(), b.nrows()));
            Ok(f_s_inv * r_inv)
        })
        .collect()
}

fn ensure_faithful(state: &State) -> Result<()> {
    if !state.is_faithful() {
        return Err(CovError::Domain(
            "the metric construction requires a faithful state".into(),
        ));
    }
    Ok(())
}

/// The monotone Riemannian metric
/// `G_ρ(ζ, η) = τ(ζ̃ · F(L R⁻¹)⁻¹ R⁻¹(η̃))`, assembled by a dense
/// superoperator solve per block. Requires a faithful state and `α = β`.
pub fn metric_inner(
    state: &State,
    spec: &CovarianceSpec,
    zeta: &TangentVector,
    eta: &TangentVector,
) -> Result<f64> {
    ensure_faithful(state)?;
    if (spec.alpha() - spec.beta()).abs() > 0.0 {
        return Err(CovError::Unsupported(
            "the metric reduction is defined for α = β".into(),
        ));
    }
    if zeta.element.shape() != state.shape() || eta.element.shape() != state.shape() {
        return Err(CovError::ShapeMismatch("tangent vectors on a different algebra".into()));
    }
    let supers = metric_superoperator(state, spec.function())?;
    let k = state.shape().total_dim() as f64;
    let mut total = C64::new(0.0, 0.0);
    for (j, sup) in supers.iter().enumerate() {
        let n = state.shape().block_dims()[j];
        let w = sup * vec_col(eta.element.block(j));
        let w_mat = unvec_col(n, n, &w);
        // τ(ζ̃ w) = (1/K) Tr(ζ̃_j w_j)
        total += (state_block_product_trace(zeta.element.block(j), &w_mat)) / cr(k);
    }
    if total.im.abs() > 1e-8 * (1.0 + total.re.abs()) {
        return Err(CovError::InternalConsistency(format!(
            "metric value has imaginary part {}",
            total.im
        )));
    }
    Ok(total.re)
}

fn state_block_product_trace(a: &CMat, b: &CMat) -> C64 {
    (a * b).diagonal().iter().sum()
}

/// Independent spectral oracle for single-block algebras:
/// `G = Σ_{jk} |ζ_jk|² / (p_k F(p_j/p_k))` in ordinary-trace coordinates,
/// with `ζ` expressed in the eigenbasis of the density.
pub fn metric_spectral_oracle(
    state: &State,
    f: &MonotoneFunction,
    zeta: &TangentVector,
) -> Result<f64> {
    ensure_faithful(state)?;
    if state.shape().num_blocks() != 1 {
        return Err(CovError::Unsupported(
            "the spectral oracle handles single-block algebras only".into(),
        ));
    }
    let spec = &state.block_spectra()[0];
    let k = state.shape().total_dim() as f64;
    let p: Vec<f64> = spec.values.iter().map(|q| q / k).collect();
    let z_ord = zeta.ordinary();
    let z_eig = spec.vectors.adjoint() * z_ord.block(0) * &spec.vectors;
    let n = p.len();
    let mut total = 0.0;
    for j in 0..n {
        for kk in 0..n {
            let w = z_eig[(j, kk)].norm_sqr();
            total += w / (p[kk] * f.eval_scalar(p[j] / p[kk])?);
        }
    }
    Ok(total)
}

/// Closed-form Fisher–Rao metric on the simplex: `Σ ζ_i² / p_i` in
/// ordinary coordinates.
pub fn fisher_rao_commutative(p: &[f64], zeta_ordinary: &[f64]) -> f64 {
    p.iter()
        .zip(zeta_ordinary)
        .map(|(&pi, &zi)| zi * zi / pi)
        .sum()
}

/// Residual `‖ M_j C_j − I ‖` of the metric/covariance superoperator pair.
pub fn superoperator_duality_residual(state: &State, f: &MonotoneFunction) -> Result<f64> {
    let cov = covariance_superoperator(state, f)?;
    let met = metric_superoperator(state, f)?;
    let mut worst: f64 = 0.0;
    for (c, m) in cov.iter().zip(&met) {
        let prod = m * c;
        let id = CMat::identity(prod.nrows(), prod.ncols());
        worst = worst.max(crate::linalg::operator_norm(&(prod - id)));
    }
    Ok(worst)
}
