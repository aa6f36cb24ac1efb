//! The explicit GNS construction for a state on a finite-dimensional
//! C*-algebra: the Gelfand ideal, the Hilbert space `A·p` carried by the
//! state's inner product `⟨a, b⟩_ρ = ρ(a† b)`, vectors `ξ_a`, the left
//! regular representation, and the cyclic vector `ξ_𝟙`.
//!
//! Bases are produced deterministically: matrix units of each block are
//! right-multiplied by the support projection and orthonormalized by
//! modified Gram–Schmidt with one re-orthogonalization pass. Candidates
//! whose projected norm falls below 1e-10 belong to the zero class.

use std::sync::Arc;

use crate::algebra::{AlgebraElement, AlgebraShape};
use crate::error::{CovError, Result};
use crate::linalg::{hermitian_eigen, operator_norm, CMat, CVec, C64, ZERO};
use crate::states::{support_projection, tracial_state, State};

/// Norm below which a projected candidate is treated as the zero class.
pub const ZERO_CLASS_TOL: f64 = 1e-10;

struct GnsInner {
    state: State,
    /// Orthonormal basis under `⟨·,·⟩_ρ`; every element lives in `A·p`.
    basis: Vec<AlgebraElement>,
    gram_error: f64,
    ideal_dim: usize,
}

/// The GNS Hilbert space of a state, with an orthonormal basis of algebra
/// representatives. Cheap to clone; clones share the same space identity.
#[derive(Clone)]
pub struct GnsSpace {
    inner: Arc<GnsInner>,
}

/// A vector in a GNS space, stored by coordinates in the orthonormal basis.
#[derive(Clone)]
pub struct GnsVector {
    pub space: GnsSpace,
    pub coords: CVec,
}

/// A linear operator on a GNS space, stored densely in the orthonormal basis.
#[derive(Clone)]
pub struct GnsOperator {
    pub space: GnsSpace,
    pub matrix: CMat,
}

fn block_inner(state: &State, block: usize, a: &CMat, b: &CMat) -> C64 {
    // ⟨a,b⟩_ρ = (1/K) Tr(ϱ a† b) = (1/K) HS(a, b ϱ)
    let k = state.shape().total_dim() as f64;
    let brho = b * state.density().block(block);
    a.dotc(&brho) / C64::new(k, 0.0)
}

/// Orthonormalize single-block candidates under the state inner product.
/// Returns the surviving orthonormal blocks together with the worst Gram
/// deviation observed after the build.
fn orthonormalize_block(
    state: &State,
    block: usize,
    candidates: Vec<CMat>,
) -> (Vec<CMat>, f64) {
    let mut basis: Vec<CMat> = Vec::new();
    for cand in candidates {
        let mut v = cand;
        for _pass in 0..2 {
            for u in &basis {
                let c = block_inner(state, block, u, &v);
                v -= u * c;
            }
        }
        let norm = block_inner(state, block, &v, &v).re.max(0.0).sqrt();
        if norm < ZERO_CLASS_TOL {
            continue;
        }
        basis.push(v / C64::new(norm, 0.0));
    }
    let mut gram_error: f64 = 0.0;
    for (i, u) in basis.iter().enumerate() {
        for (j, w) in basis.iter().enumerate() {
            let g = block_inner(state, block, u, w);
            let target = if i == j { 1.0 } else { 0.0 };
            gram_error = gram_error.max((g - C64::new(target, 0.0)).norm());
        }
    }
    (basis, gram_error)
}

/// Build the GNS space of a state.
pub fn gns_space(state: &State) -> GnsSpace {
    let shape = state.shape().clone();
    let support = support_projection(state);
    let mut basis = Vec::new();
    let mut gram_error: f64 = 0.0;
    for (j, &n) in shape.block_dims().iter().enumerate() {
        let pj = support.p.block(j);
        let mut candidates = Vec::with_capacity(n * n);
        for r in 0..n {
            for s in 0..n {
                let mut unit = CMat::zeros(n, n);
                unit[(r, s)] = C64::new(1.0, 0.0);
                candidates.push(unit * pj);
            }
        }
        let (blocks, err) = orthonormalize_block(state, j, candidates);
        gram_error = gram_error.max(err);
        for b in blocks {
            let mut el = AlgebraElement::zero(&shape);
            el.block_mut(j).copy_from(&b);
            basis.push(el);
        }
    }
    let ideal_dim = shape.algebra_dim() - basis.len();
    GnsSpace {
        inner: Arc::new(GnsInner { state: state.clone(), basis, gram_error, ideal_dim }),
    }
}

/// GNS space of the canonical tracial state; its basis is the family of
/// matrix units scaled by `√K`.
pub fn tau_space(shape: &AlgebraShape) -> GnsSpace {
    gns_space(&tracial_state(shape))
}

impl GnsSpace {
    pub fn state(&self) -> &State {
        &self.inner.state
    }

    pub fn dim(&self) -> usize {
        self.inner.basis.len()
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.inner.basis
    }

    pub fn gram_error(&self) -> f64 {
        self.inner.gram_error
    }

    /// Complex dimension of the Gelfand ideal.
    pub fn ideal_dim(&self) -> usize {
        self.inner.ideal_dim
    }

    pub fn same_space(&self, other: &GnsSpace) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    /// Coordinates of the class `ξ_a` in the orthonormal basis.
    pub fn coords(&self, a: &AlgebraElement) -> Result<CVec> {
        if a.shape() != self.state().shape() {
            return Err(CovError::ShapeMismatch(
                "element does not belong to this algebra".into(),
            ));
        }
        let n = self.dim();
        let mut c = CVec::zeros(n);
        for (alpha, u) in self.basis().iter().enumerate() {
            c[alpha] = self.state().inner(u, a)?;
        }
        Ok(c)
    }

    /// The vector `ξ_a`.
    pub fn vector(&self, a: &AlgebraElement) -> Result<GnsVector> {
        Ok(GnsVector { space: self.clone(), coords: self.coords(a)? })
    }

    /// The cyclic vector `ξ_𝟙`.
    pub fn cyclic_vector(&self) -> GnsVector {
        let id = AlgebraElement::identity(self.state().shape());
        self.vector(&id).expect("identity always has coordinates")
    }

    /// An algebra representative of a coordinate vector (lives in `A·p`).
    pub fn representative(&self, v: &GnsVector) -> Result<AlgebraElement> {
        if !self.same_space(&v.space) {
            return Err(CovError::SpaceMismatch("vector from a different GNS space".into()));
        }
        let mut acc = AlgebraElement::zero(self.state().shape());
        for (alpha, u) in self.basis().iter().enumerate() {
            acc = acc.try_add(&u.scale(v.coords[alpha]))?;
        }
        Ok(acc)
    }

    /// Matrix of the GNS representation `π_ρ(a) ξ_b = ξ_{ab}`.
    pub fn representation(&self, a: &AlgebraElement) -> Result<GnsOperator> {
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        for (beta, u) in self.basis().iter().enumerate() {
            let col = self.coords(&a.try_mul(u)?)?;
            m.set_column(beta, &col);
        }
        Ok(GnsOperator { space: self.clone(), matrix: m })
    }

    /// Matrix of the sesquilinear form `(ξ_b, ξ_a) ↦ ρ(p a p · p b† p)`,
    /// i.e. the modular operator on this space, before symmetrization.
    pub(crate) fn modular_form_matrix(&self) -> Result<CMat> {
        let support = support_projection(self.state());
        let n = self.dim();
        let compressed: Vec<AlgebraElement> = self
            .basis()
            .iter()
            .map(|u| support.p.try_mul(u)?.try_mul(&support.p))
            .collect::<Result<_>>()?;
        let mut m = CMat::zeros(n, n);
        for alpha in 0..n {
            for beta in 0..n {
                // M_{αβ} = ⟨ξ_{u_α}, Δ ξ_{u_β}⟩ = ρ(v_β v_α†)
                let prod = compressed[beta].try_mul(&compressed[alpha].adjoint())?;
                m[(alpha, beta)] = self.state().expectation(&prod)?;
            }
        }
        Ok(m)
    }
}

impl GnsVector {
    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn scale(&self, z: C64) -> GnsVector {
        GnsVector { space: self.space.clone(), coords: &self.coords * z }
    }

    pub fn sub(&self, other: &GnsVector) -> Result<GnsVector> {
        if !self.space.same_space(&other.space) {
            return Err(CovError::SpaceMismatch("vectors from different GNS spaces".into()));
        }
        Ok(GnsVector { space: self.space.clone(), coords: &self.coords - &other.coords })
    }
}

/// The GNS inner product `⟨ξ, η⟩_ρ`; errors when the vectors belong to
/// different spaces.
pub fn gns_inner(a: &GnsVector, b: &GnsVector) -> Result<C64> {
    if !a.space.same_space(&b.space) {
        return Err(CovError::SpaceMismatch("vectors from different GNS spaces".into()));
    }
    Ok(a.coords.dotc(&b.coords))
}

impl GnsOperator {
    pub fn identity(space: &GnsSpace) -> GnsOperator {
        let n = space.dim();
        GnsOperator { space: space.clone(), matrix: CMat::identity(n, n) }
    }

    pub fn apply(&self, v: &GnsVector) -> Result<GnsVector> {
        if !self.space.same_space(&v.space) {
            return Err(CovError::SpaceMismatch("vector from a different GNS space".into()));
        }
        Ok(GnsVector { space: self.space.clone(), coords: &self.matrix * &v.coords })
    }

    pub fn compose(&self, other: &GnsOperator) -> Result<GnsOperator> {
        if !self.space.same_space(&other.space) {
            return Err(CovError::SpaceMismatch("operators on different GNS spaces".into()));
        }
        Ok(GnsOperator { space: self.space.clone(), matrix: &self.matrix * &other.matrix })
    }

    pub fn adjoint(&self) -> GnsOperator {
        GnsOperator { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn operator_norm(&self) -> f64 {
        operator_norm(&self.matrix)
    }

    /// Eigenvalues, descending, assuming the operator is (nearly) Hermitian.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).values
    }
}

/// A deterministic basis of the Gelfand ideal `{a : ρ(a† a) = 0} = A·q`,
/// orthonormal under the trace inner product. Empty iff the state is faithful.
pub fn gelfand_ideal_basis(state: &State) -> Vec<AlgebraElement> {
    let shape = state.shape().clone();
    let support = support_projection(state);
    let tau = tracial_state(&shape);
    let mut out = Vec::new();
    for (j, &n) in shape.block_dims().iter().enumerate() {
        let qj = support.q.block(j);
        let mut candidates = Vec::with_capacity(n * n);
        for r in 0..n {
            for s in 0..n {
                let mut unit = CMat::zeros(n, n);
                unit[(r, s)] = C64::new(1.0, 0.0);
                candidates.push(unit * qj);
            }
        }
        let (blocks, _) = orthonormalize_block(&tau, j, candidates);
        for b in blocks {
            let mut el = AlgebraElement::zero(&shape);
            el.block_mut(j).copy_from(&b);
            out.push(el);
        }
    }
    out
}

/// Worst deviation `|⟨u_i, u_j⟩_ρ − δ_ij|` of a family under a state product.
pub fn gram_deviation(state: &State, family: &[AlgebraElement]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (i, a) in family.iter().enumerate() {
        for (j, b) in family.iter().enumerate() {
            let g = state.inner(a, b)?;
            let target = if i == j { C64::new(1.0, 0.0) } else { ZERO };
            worst = worst.max((g - target).norm());
        }
    }
    Ok(worst)
}
