//! The modular operator of a state: its trace-picture factorization
//! `Δ̃ = L·W` on the GNS space of the canonical trace, the restriction to
//! the support subspace `A·p`, the positive operator `Δ` on the state's own
//! GNS space, its spectrum of eigenvalue ratios, and the modular flow
//! `a ↦ ϱ^{it} a ϱ^{-it}` of faithful states.

use crate::algebra::AlgebraElement;
use crate::error::{CovError, Result};
use crate::gns::{gns_space, tau_space, GnsOperator, GnsSpace};
use crate::linalg::{hermitian_eigen, hermitian_part, CMat};
use crate::states::{support_projection, State};

/// Matrix of a linear map `A → A` in the orthonormal basis of a GNS space.
fn operator_from_map(
    space: &GnsSpace,
    f: impl Fn(&AlgebraElement) -> Result<AlgebraElement>,
) -> Result<GnsOperator> {
    let n = space.dim();
    let mut m = CMat::zeros(n, n);
    for (beta, u) in space.basis().iter().enumerate() {
        let col = space.coords(&f(u)?)?;
        m.set_column(beta, &col);
    }
    Ok(GnsOperator { space: space.clone(), matrix: m })
}

/// Left multiplication `L_ρ ξ_a = ξ_{ϱ a}` on the trace GNS space.
pub fn left_mult(tau: &GnsSpace, rho: &State) -> Result<GnsOperator> {
    check_same_shape(tau, rho)?;
    operator_from_map(tau, |a| rho.density().try_mul(a))
}

/// Right multiplication `R_ρ ξ_a = ξ_{a ϱ}` on the trace GNS space.
pub fn right_mult(tau: &GnsSpace, rho: &State) -> Result<GnsOperator> {
    check_same_shape(tau, rho)?;
    operator_from_map(tau, |a| a.try_mul(rho.density()))
}

/// The partial inverse `W_ρ` of `R_ρ`: right multiplication by the
/// pseudo-inverse density, vanishing on the kernel of `R_ρ`.
pub fn partial_inverse_w(tau: &GnsSpace, rho: &State) -> Result<GnsOperator> {
    check_same_shape(tau, rho)?;
    let pinv = rho.density_pseudo_inverse();
    operator_from_map(tau, |a| a.try_mul(&pinv))
}

fn check_same_shape(tau: &GnsSpace, rho: &State) -> Result<()> {
    if tau.state().shape() != rho.shape() {
        return Err(CovError::ShapeMismatch(
            "reference trace space and state live on different algebras".into(),
        ));
    }
    Ok(())
}

/// The modular data of a state.
pub struct ModularData {
    state: State,
    pub tau_space: GnsSpace,
    pub rho_space: GnsSpace,
    /// `L_ρ` on the trace space.
    pub left: GnsOperator,
    /// `R_ρ` on the trace space.
    pub right: GnsOperator,
    /// `W_ρ` on the trace space.
    pub partial_inverse: GnsOperator,
    /// `Δ̃_ρ = L_ρ W_ρ` on the trace space.
    pub delta_tilde: GnsOperator,
    /// `Δ_ρ` on the state's GNS space, symmetrized.
    pub delta: GnsOperator,
    /// Eigenvalues of `Δ_ρ`, descending.
    pub spectrum: Vec<f64>,
}

/// Assemble the modular operator of a state in both pictures.
pub fn modular_operator(rho: &State) -> Result<ModularData> {
    let tau = tau_space(rho.shape());
    let rho_space = gns_space(rho);
    let left = left_mult(&tau, rho)?;
    let right = right_mult(&tau, rho)?;
    let partial_inverse = partial_inverse_w(&tau, rho)?;
    let delta_tilde = left.compose(&partial_inverse)?;
    let raw = rho_space.modular_form_matrix()?;
    let delta = GnsOperator { space: rho_space.clone(), matrix: hermitian_part(&raw) };
    let spectrum = hermitian_eigen(&delta.matrix).values;
    Ok(ModularData {
        state: rho.clone(),
        tau_space: tau,
        rho_space,
        left,
        right,
        partial_inverse,
        delta_tilde,
        delta,
        spectrum,
    })
}

impl ModularData {
    pub fn state(&self) -> &State {
        &self.state
    }

    /// Isometry (in trace-space coordinates) onto the subspace `A·p`,
    /// orthonormal under the trace product.
    pub fn support_isometry(&self) -> Result<CMat> {
        support_isometry(&self.tau_space, &self.state)
    }

    /// `Δ̃_ρ` compressed to `A·p`, in the trace-orthonormal basis of that subspace.
    pub fn delta_tilde_restricted(&self) -> Result<CMat> {
        let p = self.support_isometry()?;
        Ok(p.adjoint() * &self.delta_tilde.matrix * p)
    }

    /// Residual of the defining relation
    /// `⟨ξ_b, Δ̃ R(ξ_a)⟩_τ = ρ(p a p · p b† p)` over all basis pairs.
    pub fn trace_picture_residual(&self) -> Result<f64> {
        let support = support_projection(&self.state);
        let basis = self.tau_space.basis();
        let dr = &self.delta_tilde.matrix * &self.right.matrix;
        let mut worst: f64 = 0.0;
        for (alpha, a) in basis.iter().enumerate() {
            let pap = support.p.try_mul(a)?.try_mul(&support.p)?;
            for (beta, b) in basis.iter().enumerate() {
                let pbdagp = support.p.try_mul(&b.adjoint())?.try_mul(&support.p)?;
                let want = self.state.expectation(&pap.try_mul(&pbdagp)?)?;
                let got = dr[(beta, alpha)];
                worst = worst.max((want - got).norm());
            }
        }
        Ok(worst)
    }
}

/// Trace-orthonormal basis of `A·p` inside a trace GNS space, as an isometry.
pub fn support_isometry(tau: &GnsSpace, rho: &State) -> Result<CMat> {
    check_same_shape(tau, rho)?;
    let support = support_projection(rho);
    let shape = rho.shape().clone();
    let mut columns = Vec::new();
    for (j, &n) in shape.block_dims().iter().enumerate() {
        // MGS over the candidates e_rs · p under the trace product
        let mut block_basis: Vec<AlgebraElement> = Vec::new();
        for r in 0..n {
            for s in 0..n {
                let unit = AlgebraElement::matrix_unit(&shape, j, r, s)?;
                let mut v = unit.try_mul(&support.p)?;
                for _ in 0..2 {
                    for u in &block_basis {
                        let c = tau.state().inner(u, &v)?;
                        v = v.try_sub(&u.scale(c))?;
                    }
                }
                let norm = tau.state().inner(&v, &v)?.re.max(0.0).sqrt();
                if norm < crate::gns::ZERO_CLASS_TOL {
                    continue;
                }
                block_basis.push(v.scale(crate::linalg::cr(1.0 / norm)));
            }
        }
        for v in block_basis {
            columns.push(tau.coords(&v)?);
        }
    }
    let mut m = CMat::zeros(tau.dim(), columns.len());
    for (i, c) in columns.iter().enumerate() {
        m.set_column(i, c);
    }
    Ok(m)
}

/// The modular flow `Φ_t(a) = ϱ^{it} a ϱ^{-it}` of a faithful state.
pub fn modular_flow(rho: &State, t: f64, a: &AlgebraElement) -> Result<AlgebraElement> {
    if !rho.is_faithful() {
        return Err(CovError::Domain("modular flow requires a faithful state".into()));
    }
    let u = rho.density_imaginary_power(t)?;
    let u_inv = rho.density_imaginary_power(-t)?;
    u.try_mul(a)?.try_mul(&u_inv)
}
