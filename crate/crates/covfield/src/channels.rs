//! Completely positive unital maps between block-sum algebras, stored as
//! dense superoperators on the embedded matrix spaces with the block masks
//! applied to domain and codomain. Provides Choi-matrix certification,
//! Kadison checks, dual action on states, the induced GNS contractions,
//! pinching conditional expectations, seeded Stinespring-style random maps,
//! and the explicit split-monomorphism constructions for rational traces.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, AlgebraShape};
use crate::error::{CovError, Result};
use crate::gns::{gelfand_ideal_basis, gns_space, GnsSpace};
use crate::linalg::{
    cr, hermitian_eigen, hermitian_part, operator_norm, unvec_col, vec_col, CMat, CVec, C64,
    ONE,
};
use crate::states::{state_from_density, State};

/// Unitality / self-adjointness residual accepted by certification.
pub const UNITAL_TOL: f64 = 1e-10;
/// Relative PSD tolerance on the Choi matrix (times its trace).
pub const CHOI_TOL_REL: f64 = 1e-9;
/// PSD tolerance of the Kadison check.
pub const KADISON_TOL: f64 = 1e-9;
/// Slack allowed on the GNS contraction norm.
pub const CONTRACTION_TOL: f64 = 1e-10;
/// Norm bound on images of Gelfand-ideal elements.
pub const IDEAL_COMPAT_TOL: f64 = 1e-5;

/// Stinespring presentation of a map: `Φ(b) = E(V†(b ⊗ I_r)V)` with an
/// isometry `V` and the block pinching `E`.
#[derive(Clone, Debug)]
pub struct StinespringData {
    /// `K_source·r × K_target` isometry.
    pub isometry: CMat,
    /// The dilation factor `r`.
    pub dilation: usize,
}

/// A linear map `Φ: source → target` between two algebras, stored as the
/// superoperator on column-stacked embedded matrices.
#[derive(Clone, Debug)]
pub struct CpuMap {
    source: AlgebraShape,
    target: AlgebraShape,
    /// `K_target² × K_source²`.
    superop: CMat,
    /// Present when the map was built from an explicit dilation.
    stinespring: Option<StinespringData>,
}

/// Diagonal 0/1 projector keeping the in-block coordinates of the embedding.
fn block_mask(shape: &AlgebraShape) -> CMat {
    let k = shape.total_dim();
    let mut owner = vec![usize::MAX; k];
    for j in 0..shape.num_blocks() {
        let off = shape.block_offset(j);
        for i in 0..shape.block_dims()[j] {
            owner[off + i] = j;
        }
    }
    let mut m = CMat::zeros(k * k, k * k);
    for c in 0..k {
        for r in 0..k {
            if owner[r] == owner[c] {
                let idx = c * k + r;
                m[(idx, idx)] = ONE;
            }
        }
    }
    m
}

/// Enumerate the embedded coordinates `(row, col)` lying inside blocks,
/// paired with their vec index `col·K + row`.
fn in_block_coords(shape: &AlgebraShape) -> Vec<(usize, usize, usize)> {
    let k = shape.total_dim();
    let mut out = Vec::new();
    for j in 0..shape.num_blocks() {
        let off = shape.block_offset(j);
        let n = shape.block_dims()[j];
        for c in off..off + n {
            for r in off..off + n {
                out.push((r, c, c * k + r));
            }
        }
    }
    out
}

impl CpuMap {
    /// Wrap a raw superoperator, applying the block masks on both sides.
    pub fn from_superop(
        source: AlgebraShape,
        target: AlgebraShape,
        superop: CMat,
    ) -> Result<CpuMap> {
        let (ka, kb) = (target.total_dim(), source.total_dim());
        if superop.nrows() != ka * ka || superop.ncols() != kb * kb {
            return Err(CovError::ShapeMismatch(format!(
                "superoperator is {}x{}, expected {}x{}",
                superop.nrows(),
                superop.ncols(),
                ka * ka,
                kb * kb
            )));
        }
        let masked = block_mask(&target) * superop * block_mask(&source);
        Ok(CpuMap { source, target, superop: masked, stinespring: None })
    }

    /// Build from the action on in-block matrix units of the source.
    pub fn from_action(
        source: AlgebraShape,
        target: AlgebraShape,
        action: impl Fn(&AlgebraElement) -> Result<AlgebraElement>,
    ) -> Result<CpuMap> {
        let (ka, kb) = (target.total_dim(), source.total_dim());
        let mut superop = CMat::zeros(ka * ka, kb * kb);
        for j in 0..source.num_blocks() {
            let n = source.block_dims()[j];
            for r in 0..n {
                for s in 0..n {
                    let unit = AlgebraElement::matrix_unit(&source, j, r, s)?;
                    let image = action(&unit)?;
                    if image.shape() != &target {
                        return Err(CovError::ShapeMismatch(
                            "action image has the wrong shape".into(),
                        ));
                    }
                    let col = vec_col(&image.embed());
                    let off = source.block_offset(j);
                    let idx = (off + s) * kb + (off + r);
                    superop.set_column(idx, &col);
                }
            }
        }
        Ok(CpuMap { source, target, superop, stinespring: None })
    }

    pub fn identity(shape: &AlgebraShape) -> CpuMap {
        CpuMap::from_action(shape.clone(), shape.clone(), |a| Ok(a.clone()))
            .expect("identity action is well formed")
    }

    /// The transpose map; positive but famously not completely positive.
    pub fn transpose_map(shape: &AlgebraShape) -> CpuMap {
        CpuMap::from_action(shape.clone(), shape.clone(), |a| {
            let blocks = a.blocks().iter().map(|b| b.transpose()).collect();
            AlgebraElement::from_blocks(shape.clone(), blocks)
        })
        .expect("transpose action is well formed")
    }

    /// The automorphism `a ↦ u† a u` of a unitary element.
    pub fn automorphism_from_unitary(u: &AlgebraElement) -> Result<CpuMap> {
        let id = AlgebraElement::identity(u.shape());
        let dev = u.adjoint().try_mul(u)?.try_sub(&id)?.frobenius_norm();
        if dev > 1e-10 * (1.0 + u.frobenius_norm()) {
            return Err(CovError::InvalidInput(format!(
                "element is not unitary (‖u†u − 1‖ = {dev})"
            )));
        }
        let u = u.clone();
        CpuMap::from_action(u.shape().clone(), u.shape().clone(), move |a| {
            u.adjoint().try_mul(a)?.try_mul(&u)
        })
    }

    pub fn source(&self) -> &AlgebraShape {
        &self.source
    }

    pub fn target(&self) -> &AlgebraShape {
        &self.target
    }

    pub fn superop(&self) -> &CMat {
        &self.superop
    }

    /// Dilation data when the map was built through one.
    pub fn stinespring(&self) -> Option<&StinespringData> {
        self.stinespring.as_ref()
    }

    /// Apply the map to a source-algebra element.
    pub fn apply(&self, b: &AlgebraElement) -> Result<AlgebraElement> {
        if b.shape() != &self.source {
            return Err(CovError::ShapeMismatch("element not in the source algebra".into()));
        }
        let y = &self.superop * vec_col(&b.embed());
        let k = self.target.total_dim();
        AlgebraElement::from_embedded(&self.target, &unvec_col(k, k, &y))
    }

    /// Choi matrix `(1/K_src) Σ_{rs} E_rs ⊗ Φ(E_rs)` over source matrix
    /// units (off-block units map to zero under the mask).
    pub fn choi_matrix(&self) -> Result<CMat> {
        let kb = self.source.total_dim();
        let ka = self.target.total_dim();
        let dim = kb * ka;
        let mut choi = CMat::zeros(dim, dim);
        for (r, s, idx) in in_block_coords(&self.source) {
            let col = self.superop.column(idx).into_owned();
            let image = unvec_col(ka, ka, &col);
            let mut unit = CMat::zeros(kb, kb);
            unit[(r, s)] = ONE;
            choi += unit.kronecker(&image);
        }
        Ok(choi / cr(kb as f64))
    }

    /// Hilbert–Schmidt adjoint as a map on embedded matrices.
    fn hs_adjoint_apply(&self, a: &CMat) -> CMat {
        let y = self.superop.adjoint() * vec_col(a);
        let k = self.source.total_dim();
        unvec_col(k, k, &y)
    }
}

/// Certification report of a candidate CPU map.
#[derive(Clone, Debug, Serialize)]
pub struct CpuReport {
    pub unital_residual: f64,
    pub self_adjoint_residual: f64,
    pub choi_min_eigenvalue: f64,
    pub choi_trace: f64,
    pub kadison_min_eigenvalue: f64,
    pub is_unital: bool,
    pub is_self_adjoint: bool,
    pub is_completely_positive: bool,
    pub kadison_holds: bool,
    pub passes: bool,
}

/// Certify unitality, self-adjointness, Choi positivity, and the Kadison
/// inequality (50 seeded random contractions).
pub fn verify_cpu(map: &CpuMap) -> Result<CpuReport> {
    let id_src = AlgebraElement::identity(map.source());
    let id_tgt = AlgebraElement::identity(map.target());
    let unital_residual = map.apply(&id_src)?.try_sub(&id_tgt)?.frobenius_norm();

    let mut self_adjoint_residual: f64 = 0.0;
    for j in 0..map.source().num_blocks() {
        let n = map.source().block_dims()[j];
        for r in 0..n {
            for s in 0..n {
                let unit = AlgebraElement::matrix_unit(map.source(), j, r, s)?;
                let lhs = map.apply(&unit.adjoint())?;
                let rhs = map.apply(&unit)?.adjoint();
                self_adjoint_residual =
                    self_adjoint_residual.max(lhs.try_sub(&rhs)?.frobenius_norm());
            }
        }
    }

    let choi = map.choi_matrix()?;
    let eig = hermitian_eigen(&choi);
    let choi_min_eigenvalue = eig.min_value();
    let choi_trace: f64 = eig.values.iter().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut kadison_min_eigenvalue = f64::INFINITY;
    for _ in 0..50 {
        let b = random_element(map.source(), &mut rng);
        let lhs = map.apply(&b.adjoint().try_mul(&b)?)?;
        let rhs = map.apply(&b)?;
        let gap = lhs.try_sub(&rhs.adjoint().try_mul(&rhs)?)?;
        let min = hermitian_eigen(&gap.embed()).min_value();
        kadison_min_eigenvalue = kadison_min_eigenvalue.min(min);
    }

    let is_unital = unital_residual < UNITAL_TOL;
    let is_self_adjoint = self_adjoint_residual < UNITAL_TOL;
    let is_completely_positive =
        choi_min_eigenvalue >= -CHOI_TOL_REL * choi_trace.abs().max(f64::MIN_POSITIVE);
    let kadison_holds = kadison_min_eigenvalue >= -KADISON_TOL;
    Ok(CpuReport {
        unital_residual,
        self_adjoint_residual,
        choi_min_eigenvalue,
        choi_trace,
        kadison_min_eigenvalue,
        is_unital,
        is_self_adjoint,
        is_completely_positive,
        kadison_holds,
        passes: is_unital && is_self_adjoint && is_completely_positive && kadison_holds,
    })
}

/// Random element with unit operator norm, complex Gaussian per block.
fn random_element(shape: &AlgebraShape, rng: &mut ChaCha8Rng) -> AlgebraElement {
    let blocks: Vec<CMat> = shape
        .block_dims()
        .iter()
        .map(|&n| {
            CMat::from_fn(n, n, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
        })
        .collect();
    let e = AlgebraElement::from_blocks(shape.clone(), blocks).expect("blocks match");
    let norm = e.operator_norm().max(f64::MIN_POSITIVE);
    e.scale(cr(1.0 / norm))
}

/// The dual state `σ = Φ*ρ`, i.e. `σ(b) = ρ(Φ(b))`, for `ρ` on the target.
pub fn dual_state(map: &CpuMap, rho: &State) -> Result<State> {
    if rho.shape() != map.target() {
        return Err(CovError::ShapeMismatch(
            "dual action expects a state on the target algebra".into(),
        ));
    }
    let ka = map.target().total_dim() as f64;
    let kb = map.source().total_dim() as f64;
    let pulled = map.hs_adjoint_apply(&rho.density().embed());
    let sym = hermitian_part(&pulled);
    let density = AlgebraElement::from_embedded(map.source(), &sym)?.scale(cr(kb / ka));
    state_from_density(density)
}

/// The GNS contraction `Φ̃: H_σ → H_ρ`, `Φ̃ ξ_b = ξ_{Φ(b)}`, together with
/// both spaces and the dual state.
pub struct InducedContraction {
    pub map: CpuMap,
    pub sigma: State,
    /// GNS space of `σ = Φ*ρ` on the source algebra.
    pub source_space: GnsSpace,
    /// GNS space of `ρ` on the target algebra.
    pub target_space: GnsSpace,
    /// `dim H_ρ × dim H_σ`.
    pub matrix: CMat,
}

pub fn induced_contraction(map: &CpuMap, rho: &State) -> Result<InducedContraction> {
    let sigma = dual_state(map, rho)?;
    let source_space = gns_space(&sigma);
    let target_space = gns_space(rho);
    let mut matrix = CMat::zeros(target_space.dim(), source_space.dim());
    for (beta, u) in source_space.basis().iter().enumerate() {
        let image = map.apply(u)?;
        matrix.set_column(beta, &target_space.coords(&image)?);
    }

    let norm = operator_norm(&matrix);
    if norm > 1.0 + CONTRACTION_TOL {
        return Err(CovError::InternalConsistency(format!(
            "induced map has norm {norm}, not a contraction"
        )));
    }
    // unitality: Φ̃ ξ_𝟙 = ξ_𝟙
    let psi_sigma = source_space.cyclic_vector();
    let psi_rho = target_space.cyclic_vector();
    let dev = (&matrix * &psi_sigma.coords - &psi_rho.coords).norm();
    if dev > 1e-8 {
        return Err(CovError::InternalConsistency(format!(
            "induced map moves the cyclic vector by {dev}"
        )));
    }
    // Gelfand-ideal compatibility: Φ(N_σ) ⊆ N_ρ
    for n in gelfand_ideal_basis(&sigma) {
        let image = map.apply(&n)?;
        let len = target_space.coords(&image)?.norm();
        if len > IDEAL_COMPAT_TOL {
            return Err(CovError::InternalConsistency(format!(
                "ideal element maps to a vector of length {len}; CPU certification is broken"
            )));
        }
    }
    Ok(InducedContraction {
        map: map.clone(),
        sigma,
        source_space,
        target_space,
        matrix,
    })
}

impl InducedContraction {
    /// Smallest eigenvalue of `Δ_σ − Φ̃† Δ_ρ Φ̃` (nonnegative for CPU maps).
    pub fn modular_monotonicity_slack(&self) -> Result<f64> {
        let delta_rho = hermitian_part(&self.target_space.modular_form_matrix()?);
        let delta_sigma = hermitian_part(&self.source_space.modular_form_matrix()?);
        let pushed = self.matrix.adjoint() * delta_rho * &self.matrix;
        Ok(hermitian_eigen(&(delta_sigma - pushed)).min_value())
    }

    /// Smallest eigenvalue of `T_σ − Φ̃† T_ρ Φ̃` for a covariance spec.
    pub fn covariance_monotonicity_slack(
        &self,
        spec: &crate::covariance::CovarianceSpec,
    ) -> Result<f64> {
        let t_rho = crate::covariance::covariance_operator(&self.target_space, spec)?;
        let t_sigma = crate::covariance::covariance_operator(&self.source_space, spec)?;
        let pushed = self.matrix.adjoint() * t_rho.matrix() * &self.matrix;
        Ok(hermitian_eigen(&(t_sigma.matrix() - pushed)).min_value())
    }

    /// `‖Φ̃† T_ρ Φ̃ − T_σ‖`, the invariance defect (zero for split monos).
    pub fn covariance_invariance_defect(
        &self,
        spec: &crate::covariance::CovarianceSpec,
    ) -> Result<f64> {
        let t_rho = crate::covariance::covariance_operator(&self.target_space, spec)?;
        let t_sigma = crate::covariance::covariance_operator(&self.source_space, spec)?;
        let pushed = self.matrix.adjoint() * t_rho.matrix() * &self.matrix;
        Ok(operator_norm(&(pushed - t_sigma.matrix())))
    }
}

/// The pinching conditional expectation `a ↦ Σ_j P_j a P_j` of a family of
/// orthogonal projections summing to the identity.
pub fn pinching_expectation(projections: &[AlgebraElement]) -> Result<CpuMap> {
    let first = projections
        .first()
        .ok_or_else(|| CovError::InvalidInput("need at least one projection".into()))?;
    let shape = first.shape().clone();
    let mut sum = AlgebraElement::zero(&shape);
    for (i, p) in projections.iter().enumerate() {
        if p.shape() != &shape {
            return Err(CovError::ShapeMismatch("projections on different algebras".into()));
        }
        if !p.is_hermitian(1e-10) {
            return Err(CovError::InvalidInput(format!("projection {i} is not Hermitian")));
        }
        let idem = p.try_mul(p)?.try_sub(p)?.frobenius_norm();
        if idem > 1e-10 * (1.0 + p.frobenius_norm()) {
            return Err(CovError::InvalidInput(format!("projection {i} is not idempotent")));
        }
        for (j, q) in projections.iter().enumerate() {
            if i != j && p.try_mul(q)?.frobenius_norm() > 1e-10 {
                return Err(CovError::InvalidInput(format!(
                    "projections {i} and {j} are not orthogonal"
                )));
            }
        }
        sum = sum.try_add(p)?;
    }
    let id = AlgebraElement::identity(&shape);
    if sum.try_sub(&id)?.frobenius_norm() > 1e-10 * shape.total_dim() as f64 {
        return Err(CovError::InvalidInput(
            "projections do not resolve the identity".into(),
        ));
    }
    let projections = projections.to_vec();
    CpuMap::from_action(shape.clone(), shape, move |a| {
        let mut acc = AlgebraElement::zero(a.shape());
        for p in &projections {
            acc = acc.try_add(&p.try_mul(a)?.try_mul(p)?)?;
        }
        Ok(acc)
    })
}

/// Seeded random CPU map `Φ(b) = E(V†(b ⊗ I_r)V)` with a Haar-ish isometry
/// `V` and the block pinching `E` onto the target algebra.
pub fn random_cpu(
    source: &AlgebraShape,
    target: &AlgebraShape,
    dilation: usize,
    seed: u64,
) -> Result<CpuMap> {
    if dilation == 0 {
        return Err(CovError::InvalidInput("dilation must be at least 1".into()));
    }
    let kb = source.total_dim();
    let ka = target.total_dim();
    if kb * dilation < ka {
        return Err(CovError::InvalidInput(format!(
            "dilation {dilation} too small: need K_source·r ≥ K_target ({kb}·{dilation} < {ka})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMat::from_fn(kb * dilation, ka, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let qr = g.qr();
    let v = qr.q().columns(0, ka).into_owned();
    let source_cl = source.clone();
    let target_cl = target.clone();
    let isometry = v.clone();
    let action = move |b: &AlgebraElement| -> Result<AlgebraElement> {
        let big = b.embed().kronecker(&CMat::identity(dilation, dilation));
        let compressed = v.adjoint() * big * &v;
        // pinching onto the block structure = discarding off-block entries
        AlgebraElement::from_embedded(&target_cl, &compressed)
    };
    let mut map = CpuMap::from_action(source_cl, target.clone(), action)?;
    map.stinespring = Some(StinespringData { isometry, dilation });
    Ok(map)
}

/// The unital embedding of `M_2 ⊕ C` into `M_n` along basis indices `r, s`:
/// the 2×2 part lands on `span{|r⟩, |s⟩}` and the scalar part on the rest.
pub fn embedding_2x2(n: usize, r: usize, s: usize) -> Result<CpuMap> {
    if r == s || r >= n || s >= n {
        return Err(CovError::InvalidInput(format!(
            "need distinct indices below {n}, got ({r},{s})"
        )));
    }
    let source = AlgebraShape::new(vec![2, 1])?;
    let target = AlgebraShape::new(vec![n])?;
    let target_cl = target.clone();
    CpuMap::from_action(source, target, move |a| {
        let m2 = a.block(0);
        let z = a.block(1)[(0, 0)];
        let mut out = CMat::zeros(n, n);
        out[(r, r)] = m2[(0, 0)];
        out[(r, s)] = m2[(0, 1)];
        out[(s, r)] = m2[(1, 0)];
        out[(s, s)] = m2[(1, 1)];
        for j in 0..n {
            if j != r && j != s {
                out[(j, j)] = z;
            }
        }
        AlgebraElement::from_embedded(&target_cl, &out)
    })
}

/// The split-monomorphism pair of a faithful rational tracial state:
/// the unital *-homomorphism `φ` into one big matrix algebra, the
/// conditional expectation `E` back, and the state itself.
pub struct RationalTraceSplitMono {
    /// `φ: A → B(K)`, a unital *-homomorphism with `φ*τ = σ`.
    pub phi: CpuMap,
    /// `E: B(K) → A` with `E∘φ = id` and `E*σ = τ`.
    pub expectation: CpuMap,
    /// The rational tracial state `σ = Σ_j (L_j/M) τ_j`.
    pub sigma: State,
    pub big_shape: AlgebraShape,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Build the split mono for positive rational weights summing to one
/// (one weight per block of `shape`).
pub fn rational_trace_split_mono(
    shape: &AlgebraShape,
    weights: &[(u64, u64)],
) -> Result<RationalTraceSplitMono> {
    let n_blocks = shape.num_blocks();
    if weights.len() != n_blocks {
        return Err(CovError::InvalidInput(format!(
            "need one weight per block: {} blocks, {} weights",
            n_blocks,
            weights.len()
        )));
    }
    if weights.iter().any(|&(n, d)| n == 0 || d == 0) {
        return Err(CovError::InvalidInput("weights must be positive rationals".into()));
    }
    // common denominator M and integer numerators L_j
    let mut m: u64 = 1;
    for &(_, d) in weights {
        m = m / gcd(m, d) * d;
    }
    let ls: Vec<u64> = weights.iter().map(|&(n, d)| n * (m / d)).collect();
    if ls.iter().sum::<u64>() != m {
        return Err(CovError::InvalidInput("weights must sum to exactly one".into()));
    }

    let dims = shape.block_dims().to_vec();
    let d_total: usize = dims.iter().product();
    let big_k = m as usize * d_total;
    let big_shape = AlgebraShape::new(vec![big_k])?;

    // block offsets inside K = ⊕_j (C^{L_j} ⊗ H_j ⊗ C^{D/n_j})
    let mut offsets = Vec::with_capacity(n_blocks);
    let mut acc = 0usize;
    for (j, &n) in dims.iter().enumerate() {
        offsets.push(acc);
        acc += ls[j] as usize * n * (d_total / n);
    }
    debug_assert_eq!(acc, big_k);

    let shape_cl = shape.clone();
    let big_cl = big_shape.clone();
    let dims_phi = dims.clone();
    let ls_phi = ls.clone();
    let offsets_phi = offsets.clone();
    let phi = CpuMap::from_action(shape.clone(), big_shape.clone(), move |a| {
        let mut out = CMat::zeros(big_k, big_k);
        for (j, &n) in dims_phi.iter().enumerate() {
            let mult = ls_phi[j] as usize;
            let tail = d_total / n;
            let block = CMat::identity(mult, mult)
                .kronecker(a.block(j))
                .kronecker(&CMat::identity(tail, tail));
            let off = offsets_phi[j];
            out.view_mut((off, off), (mult * n * tail, mult * n * tail)).copy_from(&block);
        }
        AlgebraElement::from_embedded(&big_cl, &out)
    })?;

    let dims_e = dims.clone();
    let ls_e = ls.clone();
    let offsets_e = offsets.clone();
    let small_cl = shape_cl.clone();
    let expectation = CpuMap::from_action(big_shape.clone(), shape.clone(), move |a| {
        let big = a.block(0);
        let mut out = AlgebraElement::zero(&small_cl);
        for (j, &n) in dims_e.iter().enumerate() {
            let mult = ls_e[j] as usize;
            let tail = d_total / n;
            let off = offsets_e[j];
            let mut acc = CMat::zeros(n, n);
            for l in 0..mult {
                for t in 0..tail {
                    for row in 0..n {
                        for col in 0..n {
                            let rr = off + (l * n + row) * tail + t;
                            let cc = off + (l * n + col) * tail + t;
                            acc[(row, col)] += big[(rr, cc)];
                        }
                    }
                }
            }
            out.block_mut(j).copy_from(&(acc / cr((mult * tail) as f64)));
        }
        Ok(out)
    })?;

    // σ = φ*τ, the rational tracial state with block weights L_j/M
    let k = shape.total_dim() as f64;
    let blocks = dims
        .iter()
        .zip(&ls)
        .map(|(&n, &l)| CMat::identity(n, n) * cr(k * l as f64 / (m as f64 * n as f64)))
        .collect();
    let sigma = state_from_density(AlgebraElement::from_blocks(shape.clone(), blocks)?)?;

    Ok(RationalTraceSplitMono { phi, expectation, sigma, big_shape })
}

#[derive(Serialize, Deserialize)]
struct CpuMapJson {
    source_shape: Vec<usize>,
    target_shape: Vec<usize>,
    /// Row-major `[re, im]` entries of the superoperator on column-stacked
    /// embedded matrices, blocks in shape order.
    superop: Vec<Vec<[f64; 2]>>,
}

pub fn cpu_map_to_json(map: &CpuMap) -> Result<String> {
    let s = map.superop();
    let rows = (0..s.nrows())
        .map(|r| (0..s.ncols()).map(|c| [s[(r, c)].re, s[(r, c)].im]).collect())
        .collect();
    let json = CpuMapJson {
        source_shape: map.source().block_dims().to_vec(),
        target_shape: map.target().block_dims().to_vec(),
        superop: rows,
    };
    Ok(serde_json::to_string(&json)?)
}

pub fn cpu_map_from_json(text: &str) -> Result<CpuMap> {
    let raw: CpuMapJson = serde_json::from_str(text)?;
    let source = AlgebraShape::new(raw.source_shape)?;
    let target = AlgebraShape::new(raw.target_shape)?;
    let (ka, kb) = (target.total_dim(), source.total_dim());
    if raw.superop.len() != ka * ka {
        return Err(CovError::ShapeMismatch(format!(
            "superop has {} rows, expected {}",
            raw.superop.len(),
            ka * ka
        )));
    }
    let mut m = CMat::zeros(ka * ka, kb * kb);
    for (r, row) in raw.superop.iter().enumerate() {
        if row.len() != kb * kb {
            return Err(CovError::ShapeMismatch(format!(
                "superop row {r} has {} entries, expected {}",
                row.len(),
                kb * kb
            )));
        }
        for (c, &[re, im]) in row.iter().enumerate() {
            m[(r, c)] = C64::new(re, im);
        }
    }
    CpuMap::from_superop(source, target, m)
}

/// Unitary commuting with the density of a state (diagonal phases in the
/// eigenbasis), so that conjugation by it preserves the state.
pub fn random_state_preserving_unitary(state: &State, seed: u64) -> AlgebraElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = state
        .block_spectra()
        .iter()
        .map(|s| {
            let n = s.values.len();
            let phases = CVec::from_fn(n, |_, _| {
                C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
            });
            &s.vectors * CMat::from_diagonal(&phases) * s.vectors.adjoint()
        })
        .collect();
    AlgebraElement::from_blocks(state.shape().clone(), blocks).expect("blocks match shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::CovarianceSpec;
    use crate::linalg::ZERO;
    use crate::monotone::by_name;
    use crate::states::{pure_state, random_faithful_state, tracial_state};

    fn shape(dims: &[usize]) -> AlgebraShape {
        AlgebraShape::new(dims.to_vec()).unwrap()
    }

    #[test]
    fn identity_map_certifies() {
        let id = CpuMap::identity(&shape(&[2]));
        let report = verify_cpu(&id).unwrap();
        assert!(report.passes, "{report:?}");
        // Choi of the identity is the maximally entangled projector: one
        // eigenvalue 1, the rest 0
        let eig = hermitian_eigen(&id.choi_matrix().unwrap());
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        assert!(eig.values[1].abs() < 1e-12);
    }

    #[test]
    fn transpose_map_fails_choi() {
        let t = CpuMap::transpose_map(&shape(&[2]));
        let report = verify_cpu(&t).unwrap();
        assert!(!report.passes);
        assert!(!report.is_completely_positive);
        assert!((report.choi_min_eigenvalue + 0.5).abs() < 1e-12);
        // unital and self-adjoint nonetheless
        assert!(report.is_unital && report.is_self_adjoint);
    }

    #[test]
    fn pinching_certifies_and_projects() {
        let sh = shape(&[2]);
        let p0 = AlgebraElement::matrix_unit(&sh, 0, 0, 0).unwrap();
        let p1 = AlgebraElement::matrix_unit(&sh, 0, 1, 1).unwrap();
        let pinch = pinching_expectation(&[p0, p1]).unwrap();
        assert!(verify_cpu(&pinch).unwrap().passes);
        let mut x = AlgebraElement::zero(&sh);
        x.block_mut(0)[(0, 1)] = cr(3.0);
        x.block_mut(0)[(0, 0)] = cr(1.0);
        let y = pinch.apply(&x).unwrap();
        assert!((y.block(0)[(0, 0)] - cr(1.0)).norm() < 1e-14);
        assert!(y.block(0)[(0, 1)].norm() < 1e-14);
        // idempotent on its range
        let yy = pinch.apply(&y).unwrap();
        assert!(yy.try_sub(&y).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn pinching_bimodularity_over_the_range() {
        let sh = shape(&[3]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p0 = AlgebraElement::matrix_unit(&sh, 0, 0, 0).unwrap();
        let p12 = AlgebraElement::matrix_unit(&sh, 0, 1, 1)
            .unwrap()
            .try_add(&AlgebraElement::matrix_unit(&sh, 0, 2, 2).unwrap())
            .unwrap();
        let pinch = pinching_expectation(&[p0.clone(), p12.clone()]).unwrap();
        for _ in 0..20 {
            let a = random_element(&sh, &mut rng);
            // m, m' range elements: block-diagonal w.r.t. the pinching
            let m = pinch.apply(&random_element(&sh, &mut rng)).unwrap();
            let m2 = pinch.apply(&random_element(&sh, &mut rng)).unwrap();
            let lhs = pinch.apply(&m.try_mul(&a).unwrap().try_mul(&m2).unwrap()).unwrap();
            let rhs = m.try_mul(&pinch.apply(&a).unwrap()).unwrap().try_mul(&m2).unwrap();
            assert!(lhs.try_sub(&rhs).unwrap().frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn pinching_rejects_bad_families() {
        let sh = shape(&[2]);
        let p0 = AlgebraElement::matrix_unit(&sh, 0, 0, 0).unwrap();
        // not a resolution of identity
        assert!(pinching_expectation(std::slice::from_ref(&p0)).is_err());
        // not idempotent
        let half = AlgebraElement::identity(&sh).scale(cr(0.5));
        assert!(pinching_expectation(&[half.clone(), half]).is_err());
    }

    #[test]
    fn pinching_with_full_projection_is_identity() {
        let sh = shape(&[2, 1]);
        let pinch = pinching_expectation(&[AlgebraElement::identity(&sh)]).unwrap();
        let id = CpuMap::identity(&sh);
        assert!(operator_norm(&(pinch.superop() - id.superop())) < 1e-14);
    }

    #[test]
    fn dual_of_identity_and_pinching() {
        let sh = shape(&[2]);
        let rho = random_faithful_state(&sh, 3);
        let id = CpuMap::identity(&sh);
        let sigma = dual_state(&id, &rho).unwrap();
        assert!(sigma.density().try_sub(rho.density()).unwrap().frobenius_norm() < 1e-12);

        let p0 = AlgebraElement::matrix_unit(&sh, 0, 0, 0).unwrap();
        let p1 = AlgebraElement::matrix_unit(&sh, 0, 1, 1).unwrap();
        let pinch = pinching_expectation(&[p0, p1]).unwrap();
        let sigma = dual_state(&pinch, &rho).unwrap();
        // density of the dual is the diagonal part
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { rho.density().block(0)[(r, c)] } else { ZERO };
                assert!((sigma.density().block(0)[(r, c)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn embedding_2x2_dual_compresses() {
        let map = embedding_2x2(3, 0, 2).unwrap();
        assert!(verify_cpu(&map).unwrap().passes);
        let mut d = AlgebraElement::zero(&shape(&[3]));
        // ordinary probabilities (0.5, 0.3, 0.2), density = 3·diag(p)
        d.block_mut(0)[(0, 0)] = cr(1.5);
        d.block_mut(0)[(1, 1)] = cr(0.9);
        d.block_mut(0)[(2, 2)] = cr(0.6);
        let rho = state_from_density(d).unwrap();
        let sigma = dual_state(&map, &rho).unwrap();
        // σ(e_00 ⊕ 0) = ρ(|0⟩⟨0|) = 0.5, σ(e_11 ⊕ 0) = 0.2, σ(0 ⊕ 1) = 0.3
        let e00 = AlgebraElement::matrix_unit(sigma.shape(), 0, 0, 0).unwrap();
        let e11 = AlgebraElement::matrix_unit(sigma.shape(), 0, 1, 1).unwrap();
        let z = AlgebraElement::matrix_unit(sigma.shape(), 1, 0, 0).unwrap();
        assert!((sigma.expectation(&e00).unwrap().re - 0.5).abs() < 1e-12);
        assert!((sigma.expectation(&e11).unwrap().re - 0.2).abs() < 1e-12);
        assert!((sigma.expectation(&z).unwrap().re - 0.3).abs() < 1e-12);
    }

    #[test]
    fn square_dilation_one_is_an_automorphism() {
        // single block, r = 1: V is unitary, the pinching is trivial, and
        // the map is multiplicative
        let sh = shape(&[3]);
        let map = random_cpu(&sh, &sh, 1, 77).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        for _ in 0..10 {
            let a = random_element(&sh, &mut rng);
            let b = random_element(&sh, &mut rng);
            let lhs = map.apply(&a.try_mul(&b).unwrap()).unwrap();
            let rhs = map.apply(&a).unwrap().try_mul(&map.apply(&b).unwrap()).unwrap();
            assert!(lhs.try_sub(&rhs).unwrap().frobenius_norm() < 1e-12);
        }
        assert!(verify_cpu(&map).unwrap().passes);
    }

    #[test]
    fn random_cpu_certifies_across_shape_pairs() {
        let pairs = [
            (shape(&[2]), shape(&[2]), 1),
            (shape(&[2]), shape(&[3]), 2),
            (shape(&[1, 2]), shape(&[2]), 1),
            (shape(&[3]), shape(&[2, 2]), 2),
        ];
        for (i, (src, tgt, r)) in pairs.iter().enumerate() {
            let map = random_cpu(src, tgt, *r, 100 + i as u64).unwrap();
            let report = verify_cpu(&map).unwrap();
            assert!(report.passes, "pair {i}: {report:?}");
            assert!(report.unital_residual < 1e-12);
        }
        assert!(random_cpu(&shape(&[2]), &shape(&[3]), 1, 0).is_err());
    }

    #[test]
    fn unitary_conjugation_gives_unitary_contraction() {
        let sh = shape(&[2]);
        let rho = random_faithful_state(&sh, 8);
        let u = random_state_preserving_unitary(&rho, 9);
        let auto = CpuMap::automorphism_from_unitary(&u).unwrap();
        let sigma = dual_state(&auto, &rho).unwrap();
        assert!(sigma.density().try_sub(rho.density()).unwrap().frobenius_norm() < 1e-10);
        let ind = induced_contraction(&auto, &rho).unwrap();
        let gram = ind.matrix.adjoint() * &ind.matrix;
        let id = CMat::identity(gram.nrows(), gram.ncols());
        assert!(operator_norm(&(gram - id)) < 1e-10);
    }

    #[test]
    fn identity_contraction_is_identity() {
        let sh = shape(&[2, 1]);
        let rho = random_faithful_state(&sh, 11);
        let ind = induced_contraction(&CpuMap::identity(&sh), &rho).unwrap();
        let id = CMat::identity(ind.matrix.nrows(), ind.matrix.ncols());
        assert!(operator_norm(&(&ind.matrix - &id)) < 1e-10);
        assert!(ind.modular_monotonicity_slack().unwrap() > -1e-12);
    }

    #[test]
    fn modular_monotonicity_over_random_trials() {
        let src = shape(&[3]);
        let tgt = shape(&[2]);
        for trial in 0..100 {
            let map = random_cpu(&src, &tgt, 2, 500 + trial).unwrap();
            let rho = random_faithful_state(&tgt, 900 + trial);
            let ind = induced_contraction(&map, &rho).unwrap();
            let slack = ind.modular_monotonicity_slack().unwrap();
            assert!(slack >= -1e-9, "trial {trial}: slack {slack}");
        }
    }

    #[test]
    fn split_mono_two_point_third() {
        let sh = shape(&[1, 1]);
        let sm = rational_trace_split_mono(&sh, &[(1, 3), (2, 3)]).unwrap();
        assert_eq!(sm.big_shape.total_dim(), 3);
        // φ(a1, a2) = diag(a1, a2, a2)
        let mut a = AlgebraElement::zero(&sh);
        a.block_mut(0)[(0, 0)] = cr(5.0);
        a.block_mut(1)[(0, 0)] = cr(7.0);
        let img = sm.phi.apply(&a).unwrap();
        let d = img.block(0);
        assert!((d[(0, 0)] - cr(5.0)).norm() < 1e-14);
        assert!((d[(1, 1)] - cr(7.0)).norm() < 1e-14);
        assert!((d[(2, 2)] - cr(7.0)).norm() < 1e-14);
        // φ*τ = σ = (1/3, 2/3)
        let tau_big = tracial_state(&sm.big_shape);
        let pulled = dual_state(&sm.phi, &tau_big).unwrap();
        assert!(pulled.density().try_sub(sm.sigma.density()).unwrap().frobenius_norm() < 1e-12);
        let p = sm.sigma.ordinary_probabilities();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-12 && (p[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn split_mono_identities_hold() {
        for (dims, weights) in [
            (vec![1usize, 1], vec![(1u64, 3u64), (2, 3)]),
            (vec![1, 1], vec![(1, 2), (1, 2)]),
            (vec![1, 1, 1], vec![(1, 2), (1, 4), (1, 4)]),
            (vec![2, 1], vec![(1, 3), (2, 3)]),
        ] {
            let sh = AlgebraShape::new(dims).unwrap();
            let sm = rational_trace_split_mono(&sh, &weights).unwrap();
            assert!(verify_cpu(&sm.phi).unwrap().passes);
            assert!(verify_cpu(&sm.expectation).unwrap().passes);
            // E ∘ φ = id on a basis
            for j in 0..sh.num_blocks() {
                let n = sh.block_dims()[j];
                for r in 0..n {
                    for s in 0..n {
                        let u = AlgebraElement::matrix_unit(&sh, j, r, s).unwrap();
                        let back = sm.expectation.apply(&sm.phi.apply(&u).unwrap()).unwrap();
                        assert!(back.try_sub(&u).unwrap().frobenius_norm() < 1e-10);
                    }
                }
            }
            // E*σ = τ on the big algebra
            let tau_big = tracial_state(&sm.big_shape);
            let pushed = dual_state(&sm.expectation, &sm.sigma).unwrap();
            assert!(
                pushed.density().try_sub(tau_big.density()).unwrap().frobenius_norm() < 1e-10
            );
            // multiplicativity of φ on random pairs
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..5 {
                let a = random_element(&sh, &mut rng);
                let b = random_element(&sh, &mut rng);
                let lhs = sm.phi.apply(&a.try_mul(&b).unwrap()).unwrap();
                let rhs = sm.phi.apply(&a).unwrap().try_mul(&sm.phi.apply(&b).unwrap()).unwrap();
                assert!(lhs.try_sub(&rhs).unwrap().frobenius_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn split_mono_rejects_bad_weights() {
        let sh = shape(&[1, 1]);
        assert!(rational_trace_split_mono(&sh, &[(1, 3), (1, 3)]).is_err());
        assert!(rational_trace_split_mono(&sh, &[(1, 2)]).is_err());
        assert!(rational_trace_split_mono(&sh, &[(0, 2), (1, 2)]).is_err());
    }

    #[test]
    fn split_mono_invariance_of_covariance() {
        let sh = shape(&[1, 1]);
        let sm = rational_trace_split_mono(&sh, &[(1, 3), (2, 3)]).unwrap();
        let tau_big = tracial_state(&sm.big_shape);
        let ind = induced_contraction(&sm.phi, &tau_big).unwrap();
        for name in ["bures", "kubo-mori"] {
            let spec = CovarianceSpec::new(by_name(name).unwrap(), 1.5).unwrap();
            let defect = ind.covariance_invariance_defect(&spec).unwrap();
            assert!(defect < 1e-9, "{name}: defect {defect}");
        }
    }

    #[test]
    fn kadison_gap_on_certified_maps() {
        let map = random_cpu(&shape(&[2]), &shape(&[2]), 2, 42).unwrap();
        let report = verify_cpu(&map).unwrap();
        assert!(report.kadison_holds);
        assert!(report.kadison_min_eigenvalue >= -1e-9);
    }

    #[test]
    fn stinespring_data_reproduces_the_action() {
        let src = shape(&[2]);
        let tgt = shape(&[3]);
        let map = random_cpu(&src, &tgt, 2, 5).unwrap();
        let st = map.stinespring().expect("random maps carry dilation data");
        assert_eq!(st.dilation, 2);
        // isometry columns are orthonormal
        let gram = st.isometry.adjoint() * &st.isometry;
        assert!(operator_norm(&(gram - CMat::identity(3, 3))) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let b = random_element(&src, &mut rng);
        let big = b.embed().kronecker(&CMat::identity(2, 2));
        let compressed = st.isometry.adjoint() * big * &st.isometry;
        let direct = AlgebraElement::from_embedded(&tgt, &compressed).unwrap();
        let through_superop = map.apply(&b).unwrap();
        assert!(direct.try_sub(&through_superop).unwrap().frobenius_norm() < 1e-12);
        // loaded maps carry none
        let loaded = cpu_map_from_json(&cpu_map_to_json(&map).unwrap()).unwrap();
        assert!(loaded.stinespring().is_none());
    }

    #[test]
    fn json_round_trip_preserves_action() {
        let map = random_cpu(&shape(&[1, 2]), &shape(&[2]), 2, 7).unwrap();
        let text = cpu_map_to_json(&map).unwrap();
        let back = cpu_map_from_json(&text).unwrap();
        assert_eq!(back.source().block_dims(), map.source().block_dims());
        assert!(operator_norm(&(back.superop() - map.superop())) == 0.0);
    }

    #[test]
    fn contraction_on_nonfaithful_dual() {
        // pinching a pure state's dual exercises the ideal-compatibility path
        let sh = shape(&[2]);
        let rho = pure_state(&sh, 0).unwrap();
        let p0 = AlgebraElement::matrix_unit(&sh, 0, 0, 0).unwrap();
        let p1 = AlgebraElement::matrix_unit(&sh, 0, 1, 1).unwrap();
        let pinch = pinching_expectation(&[p0, p1]).unwrap();
        let ind = induced_contraction(&pinch, &rho).unwrap();
        assert!(!ind.sigma.is_faithful());
        assert!(ind.modular_monotonicity_slack().unwrap() >= -1e-9);
    }
}
