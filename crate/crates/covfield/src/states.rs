//! States as density operators relative to the canonical normalized trace,
//! with cached spectral data, support projections, traciality and
//! faithfulness predicates, and generators for random states, mixtures,
//! direct sums, and commuting sequences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, AlgebraShape};
use crate::error::{CovError, Result};
use crate::linalg::{cr, hermitian_eigen, CMat, CVec, C64};

/// Density eigenvalues are declared zero below `RANK_CUTOFF_REL * λ_max`.
pub const RANK_CUTOFF_REL: f64 = 1e-9;
/// Hermiticity tolerance accepted by `state_from_density`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues in `[-EIG_CLAMP, 0)` are clamped to zero; below is an error.
pub const EIG_CLAMP: f64 = 1e-12;
/// Allowed deviation of the normalized trace from one.
pub const TRACE_TOL: f64 = 1e-12;
/// Spectral floor guaranteed by `random_faithful_state`.
pub const FAITHFUL_FLOOR: f64 = 1e-3;

/// Spectral data of one block of a density operator, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct BlockSpectrum {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: CMat,
}

/// A state `ρ(a) = τ(ϱ a)` given by its density operator `ϱ` (Hermitian,
/// positive semidefinite, `τ(ϱ) = 1`), with cached eigendecomposition.
#[derive(Clone, Debug)]
pub struct State {
    density: AlgebraElement,
    spectra: Vec<BlockSpectrum>,
    rank_cutoff: f64,
    support_rank: usize,
}

impl State {
    pub fn shape(&self) -> &AlgebraShape {
        self.density.shape()
    }

    pub fn density(&self) -> &AlgebraElement {
        &self.density
    }

    /// Evaluate `ρ(a) = τ(ϱ a)`.
    pub fn expectation(&self, a: &AlgebraElement) -> Result<C64> {
        Ok(self.density.try_mul(a)?.trace())
    }

    /// The GNS inner product `⟨a, b⟩_ρ = ρ(a† b)`.
    pub fn inner(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<C64> {
        self.expectation(&a.adjoint().try_mul(b)?)
    }

    /// All density eigenvalues, block by block, descending within each block.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectra.iter().flat_map(|s| s.values.iter().cloned()).collect()
    }

    pub fn block_spectra(&self) -> &[BlockSpectrum] {
        &self.spectra
    }

    /// Probabilities with respect to the ordinary trace: `p_i = q_i / K`.
    pub fn ordinary_probabilities(&self) -> Vec<f64> {
        let k = self.shape().total_dim() as f64;
        self.eigenvalues().iter().map(|q| q / k).collect()
    }

    pub fn rank_cutoff(&self) -> f64 {
        self.rank_cutoff
    }

    pub fn support_rank(&self) -> usize {
        self.support_rank
    }

    pub fn is_faithful(&self) -> bool {
        self.support_rank == self.shape().total_dim()
    }

    /// A state is tracial iff its density is central: every block a scalar
    /// multiple of that block's identity.
    pub fn is_tracial(&self) -> bool {
        self.density.blocks().iter().all(|b| {
            let n = b.nrows() as f64;
            let mean = (0..b.nrows()).map(|i| b[(i, i)]).sum::<C64>() / cr(n);
            let dev = b - CMat::identity(b.nrows(), b.ncols()) * mean;
            dev.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
                <= 1e-10 * (1.0 + b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        })
    }

    /// Moore–Penrose pseudo-inverse `ϱ⁺` of the density, using the rank cutoff.
    pub fn density_pseudo_inverse(&self) -> AlgebraElement {
        let blocks = self
            .spectra
            .iter()
            .map(|s| {
                let n = s.values.len();
                let diag = CVec::from_iterator(
                    n,
                    s.values
                        .iter()
                        .map(|&q| if q > self.rank_cutoff { cr(1.0 / q) } else { cr(0.0) }),
                );
                &s.vectors * CMat::from_diagonal(&diag) * s.vectors.adjoint()
            })
            .collect();
        AlgebraElement::from_blocks(self.shape().clone(), blocks).expect("blocks match shape")
    }

    /// `ϱ^{it}` for faithful states, computed spectrally.
    pub fn density_imaginary_power(&self, t: f64) -> Result<AlgebraElement> {
        if !self.is_faithful() {
            return Err(CovError::Domain(
                "imaginary powers of the density require a faithful state".into(),
            ));
        }
        let blocks = self
            .spectra
            .iter()
            .map(|s| {
                let n = s.values.len();
                let diag = CVec::from_iterator(
                    n,
                    s.values.iter().map(|&q| C64::from_polar(1.0, t * q.ln())),
                );
                &s.vectors * CMat::from_diagonal(&diag) * s.vectors.adjoint()
            })
            .collect();
        AlgebraElement::from_blocks(self.shape().clone(), blocks)
    }
}

/// Validate a density operator and cache its spectral data.
pub fn state_from_density(density: AlgebraElement) -> Result<State> {
    if !density.is_hermitian(HERMITIAN_TOL) {
        return Err(CovError::InvalidState("density operator is not Hermitian".into()));
    }
    let density = density.hermitian_part();
    let tr = density.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(CovError::InvalidState(format!(
            "normalized trace of the density is {} + {}i, expected 1",
            tr.re, tr.im
        )));
    }
    let mut spectra = Vec::with_capacity(density.shape().num_blocks());
    let mut max_eig = f64::NEG_INFINITY;
    for b in density.blocks() {
        let eig = hermitian_eigen(b);
        max_eig = max_eig.max(eig.max_value());
        spectra.push(BlockSpectrum { values: eig.values, vectors: eig.vectors });
    }
    for s in &mut spectra {
        for v in &mut s.values {
            if *v < -EIG_CLAMP {
                return Err(CovError::InvalidState(format!(
                    "density has negative eigenvalue {v}"
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    let rank_cutoff = RANK_CUTOFF_REL * max_eig.max(0.0);
    let support_rank = spectra
        .iter()
        .flat_map(|s| s.values.iter())
        .filter(|&&q| q > rank_cutoff)
        .count();
    Ok(State { density, spectra, rank_cutoff, support_rank })
}

/// The canonical tracial state: density `𝟙`.
pub fn tracial_state(shape: &AlgebraShape) -> State {
    state_from_density(AlgebraElement::identity(shape)).expect("identity density is valid")
}

/// Pure state concentrated on global basis vector `index`: density `K·e_{ii}`.
pub fn pure_state(shape: &AlgebraShape, index: usize) -> Result<State> {
    let k = shape.total_dim();
    if index >= k {
        return Err(CovError::InvalidInput(format!(
            "pure state index {index} outside dimension {k}"
        )));
    }
    let mut off = 0;
    let mut density = AlgebraElement::zero(shape);
    for (j, &n) in shape.block_dims().iter().enumerate() {
        if index < off + n {
            density.block_mut(j)[(index - off, index - off)] = cr(k as f64);
            break;
        }
        off += n;
    }
    state_from_density(density)
}

/// Seeded faithful state: `G†G` with complex Gaussian `G` per block,
/// normalized and floored so every eigenvalue stays at or above 1e-3.
pub fn random_faithful_state(shape: &AlgebraShape, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let blocks: Vec<CMat> = shape
        .block_dims()
        .iter()
        .map(|&n| {
            let g = CMat::from_fn(n, n, |_, _| {
                let re: f64 = normal.sample(&mut rng);
                let im: f64 = normal.sample(&mut rng);
                C64::new(re, im) * cr(std::f64::consts::FRAC_1_SQRT_2)
            });
            g.adjoint() * g
        })
        .collect();
    let raw = AlgebraElement::from_blocks(shape.clone(), blocks).expect("blocks match shape");
    let normalized = raw.scale(cr(1.0 / raw.trace().re));
    // floor 2e-3 keeps every eigenvalue strictly above the documented 1e-3
    let floor = 2.0 * FAITHFUL_FLOOR;
    let floored = normalized
        .scale(cr(1.0 - floor))
        .try_add(&AlgebraElement::identity(shape).scale(cr(floor)))
        .expect("same shape");
    state_from_density(floored).expect("construction yields a valid density")
}

/// Seeded tracial state: a random central density with block weights
/// bounded away from zero.
pub fn random_tracial_state(shape: &AlgebraShape, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uni = Uniform::new(0.05f64, 1.0).expect("valid range");
    let mut weights: Vec<f64> = (0..shape.num_blocks()).map(|_| uni.sample(&mut rng)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let k = shape.total_dim() as f64;
    let blocks = shape
        .block_dims()
        .iter()
        .zip(&weights)
        .map(|(&n, &w)| CMat::identity(n, n) * cr(k * w / n as f64))
        .collect();
    let density = AlgebraElement::from_blocks(shape.clone(), blocks).expect("blocks match shape");
    state_from_density(density).expect("central density is valid")
}

/// The support projection `p` of a state together with its complement `q = 𝟙 − p`.
#[derive(Clone, Debug)]
pub struct SupportProjection {
    pub p: AlgebraElement,
    pub q: AlgebraElement,
}

pub fn support_projection(state: &State) -> SupportProjection {
    let shape = state.shape().clone();
    let blocks: Vec<CMat> = state
        .block_spectra()
        .iter()
        .map(|s| {
            let n = s.values.len();
            let mut p = CMat::zeros(n, n);
            for (i, &q) in s.values.iter().enumerate() {
                if q > state.rank_cutoff() {
                    let v = s.vectors.column(i);
                    p += v * v.adjoint();
                }
            }
            p
        })
        .collect();
    let p = AlgebraElement::from_blocks(shape.clone(), blocks).expect("blocks match shape");
    let q = AlgebraElement::identity(&shape).try_sub(&p).expect("same shape");
    SupportProjection { p, q }
}

/// Compress a state to its support: the reduced state on `pAp`, which is
/// faithful on the smaller shape (zero-rank blocks are dropped).
pub fn compressed_state(state: &State) -> Result<State> {
    let mut dims = Vec::new();
    let mut blocks = Vec::new();
    for (j, s) in state.block_spectra().iter().enumerate() {
        let rank = s.values.iter().filter(|&&q| q > state.rank_cutoff()).count();
        if rank == 0 {
            continue;
        }
        let v = s.vectors.columns(0, rank).into_owned();
        let compressed = v.adjoint() * state.density().block(j) * v;
        dims.push(rank);
        blocks.push(compressed);
    }
    if dims.is_empty() {
        return Err(CovError::InvalidState("state has empty support".into()));
    }
    let new_shape = AlgebraShape::new(dims)?;
    let r = new_shape.total_dim() as f64;
    let k = state.shape().total_dim() as f64;
    let density = AlgebraElement::from_blocks(new_shape, blocks)?.scale(cr(r / k));
    state_from_density(density)
}

/// True iff the embedded densities commute:
/// `‖[ϱ, ς]‖_F < 1e-10 ‖ϱ‖ ‖ς‖`.
pub fn commutes(a: &State, b: &State) -> Result<bool> {
    if a.shape() != b.shape() {
        return Err(CovError::ShapeMismatch("states live on different algebras".into()));
    }
    let norm = a.density().frobenius_norm() * b.density().frobenius_norm();
    Ok(a.density().commutator_norm(b.density())? < 1e-10 * norm.max(f64::MIN_POSITIVE))
}

/// Convex mixture `λϱ + (1−λ)ς`, renormalized against rounding.
pub fn mix(lambda: f64, a: &State, b: &State) -> Result<State> {
    if !(0.0..=1.0).contains(&lambda) || lambda == 0.0 || lambda == 1.0 {
        return Err(CovError::InvalidInput(format!(
            "mixture weight must lie in (0,1), got {lambda}"
        )));
    }
    if a.shape() != b.shape() {
        return Err(CovError::ShapeMismatch("states live on different algebras".into()));
    }
    let d = a
        .density()
        .scale(cr(lambda))
        .try_add(&b.density().scale(cr(1.0 - lambda)))?;
    let tr = d.trace().re;
    state_from_density(d.scale(cr(1.0 / tr)))
}

/// The state `ω_λ(a₁ ⊕ a₂) = λρ(a₁) + (1−λ)σ(a₂)` on the direct sum algebra.
/// Its density is `2λϱ ⊕ 2(1−λ)ς` when both summands share one shape.
pub fn direct_sum_state(lambda: f64, a: &State, b: &State) -> Result<State> {
    if !(0.0..=1.0).contains(&lambda) || lambda == 0.0 || lambda == 1.0 {
        return Err(CovError::InvalidInput(format!(
            "mixture weight must lie in (0,1), got {lambda}"
        )));
    }
    let ka = a.shape().total_dim() as f64;
    let kb = b.shape().total_dim() as f64;
    let k = ka + kb;
    let left = a.density().scale(cr(lambda * k / ka));
    let right = b.density().scale(cr((1.0 - lambda) * k / kb));
    state_from_density(left.direct_sum(&right))
}

/// A sequence of faithful states sharing the eigenbasis of its limit,
/// with geometric interpolation weights `ε_n = rate^n`.
#[derive(Clone, Debug)]
pub struct CommutingSequence {
    pub limit: State,
    pub terms: Vec<State>,
    pub rate: f64,
}

/// Interpolates the density toward the tracial one along the shared
/// eigenbasis: `ϱ_n = (1−ε_n)ϱ + ε_n 𝟙` with `ε_n = rate^n`.
pub fn commuting_sequence(state: &State, count: usize, rate: f64) -> Result<CommutingSequence> {
    if count == 0 {
        return Err(CovError::InvalidInput("sequence length must be at least 1".into()));
    }
    if !(rate > 0.0 && rate < 1.0) {
        return Err(CovError::InvalidInput(format!("rate must lie in (0,1), got {rate}")));
    }
    let id = AlgebraElement::identity(state.shape());
    let mut terms = Vec::with_capacity(count);
    for n in 1..=count {
        let eps = rate.powi(n as i32);
        let d = state
            .density()
            .scale(cr(1.0 - eps))
            .try_add(&id.scale(cr(eps)))?;
        terms.push(state_from_density(d)?);
    }
    Ok(CommutingSequence { limit: state.clone(), terms, rate })
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    shape: Vec<usize>,
    density: AlgebraElement,
}

pub fn state_to_json(state: &State) -> Result<String> {
    let json = StateJson {
        shape: state.shape().block_dims().to_vec(),
        density: state.density().clone(),
    };
    Ok(serde_json::to_string_pretty(&json)?)
}

pub fn state_from_json(text: &str) -> Result<State> {
    let raw: StateJson = serde_json::from_str(text)?;
    let shape = AlgebraShape::new(raw.shape)?;
    if raw.density.shape() != &shape {
        return Err(CovError::ShapeMismatch(
            "state shape does not match density shape".into(),
        ));
    }
    state_from_density(raw.density)
}

/// Resolve a CLI state argument: a file path, or one of the literals
/// `tracial`, `random:SEED`, `pure:INDEX` (literals need an explicit shape).
pub fn state_from_cli_arg(arg: &str, shape: Option<&AlgebraShape>) -> Result<State> {
    let literal = |name: &str| -> Result<AlgebraShape> {
        shape.cloned().ok_or_else(|| {
            CovError::InvalidInput(format!("state literal '{name}' requires --shape"))
        })
    };
    if arg == "tracial" {
        return Ok(tracial_state(&literal("tracial")?));
    }
    if let Some(seed) = arg.strip_prefix("random:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| CovError::InvalidInput(format!("bad seed in '{arg}'")))?;
        return Ok(random_faithful_state(&literal(arg)?, seed));
    }
    if let Some(index) = arg.strip_prefix("pure:") {
        let index: usize = index
            .parse()
            .map_err(|_| CovError::InvalidInput(format!("bad index in '{arg}'")))?;
        return pure_state(&literal(arg)?, index);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| CovError::InvalidInput(format!("cannot read state file '{arg}': {e}")))?;
    state_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(dims: &[usize]) -> AlgebraShape {
        AlgebraShape::new(dims.to_vec()).unwrap()
    }

    fn diag_state(values: &[f64]) -> State {
        let sh = shape(&[values.len()]);
        let mut d = AlgebraElement::zero(&sh);
        for (i, &v) in values.iter().enumerate() {
            d.block_mut(0)[(i, i)] = cr(v);
        }
        state_from_density(d).unwrap()
    }

    #[test]
    fn tracial_density_is_identity() {
        let t = tracial_state(&shape(&[2]));
        let evs = t.eigenvalues();
        assert_eq!(evs, vec![1.0, 1.0]);
        assert!(t.is_tracial());
        assert!(t.is_faithful());
    }

    #[test]
    fn ordinary_probabilities_divide_by_k() {
        let s = diag_state(&[1.5, 0.5]);
        let p = s.ordinary_probabilities();
        assert!((p[0] - 0.75).abs() < 1e-14);
        assert!((p[1] - 0.25).abs() < 1e-14);
        assert!(!s.is_tracial());
    }

    #[test]
    fn pure_state_has_rank_one() {
        let s = pure_state(&shape(&[2]), 0).unwrap();
        assert_eq!(s.support_rank(), 1);
        assert!(!s.is_faithful());
        assert_eq!(s.eigenvalues(), vec![2.0, 0.0]);
    }

    #[test]
    fn invalid_densities_are_rejected() {
        let sh = shape(&[2]);
        // non-Hermitian
        let mut d = AlgebraElement::zero(&sh);
        d.block_mut(0)[(0, 1)] = cr(1.0);
        d.block_mut(0)[(0, 0)] = cr(2.0);
        assert!(matches!(state_from_density(d), Err(CovError::InvalidState(_))));
        // wrong trace
        let d = AlgebraElement::identity(&sh).scale(cr(2.0));
        assert!(matches!(state_from_density(d), Err(CovError::InvalidState(_))));
        // genuinely negative eigenvalue
        let mut d = AlgebraElement::zero(&sh);
        d.block_mut(0)[(0, 0)] = cr(3.0);
        d.block_mut(0)[(1, 1)] = cr(-1.0);
        assert!(matches!(state_from_density(d), Err(CovError::InvalidState(_))));
    }

    #[test]
    fn support_projection_reproduces_expectations() {
        let s = pure_state(&shape(&[2]), 0).unwrap();
        let sp = support_projection(&s);
        let e11 = AlgebraElement::matrix_unit(s.shape(), 0, 0, 0).unwrap();
        assert!((sp.p.try_sub(&e11).unwrap()).frobenius_norm() < 1e-12);
        // ρ(p a p) = ρ(a) on all matrix units
        for r in 0..2 {
            for c in 0..2 {
                let a = AlgebraElement::matrix_unit(s.shape(), 0, r, c).unwrap();
                let pap = sp.p.try_mul(&a).unwrap().try_mul(&sp.p).unwrap();
                let lhs = s.expectation(&pap).unwrap();
                let rhs = s.expectation(&a).unwrap();
                assert!((lhs - rhs).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn faithful_state_has_full_support() {
        let s = random_faithful_state(&shape(&[2, 1]), 7);
        let sp = support_projection(&s);
        let id = AlgebraElement::identity(s.shape());
        assert!(sp.p.try_sub(&id).unwrap().frobenius_norm() < 1e-12);
        assert_eq!(s.eigenvalues().len(), 3);
        assert!(s.eigenvalues().iter().all(|&q| q >= FAITHFUL_FLOOR));
    }

    #[test]
    fn random_states_are_deterministic_in_seed() {
        let sh = shape(&[2, 1]);
        let a = random_faithful_state(&sh, 99);
        let b = random_faithful_state(&sh, 99);
        assert_eq!(a.density(), b.density());
        let c = random_faithful_state(&sh, 100);
        assert!(a.density() != c.density());
    }

    #[test]
    fn many_random_states_stay_faithful() {
        let sh = shape(&[2]);
        for seed in 0..1000 {
            let s = random_faithful_state(&sh, seed);
            assert!(s.is_faithful(), "seed {seed} lost faithfulness");
            assert!(s.eigenvalues().iter().all(|&q| q >= FAITHFUL_FLOOR));
        }
    }

    #[test]
    fn commutation_predicate() {
        let s = diag_state(&[1.5, 0.5]);
        let t = tracial_state(s.shape());
        assert!(commutes(&s, &s).unwrap());
        assert!(commutes(&s, &t).unwrap());

        // density (1/2)(𝟙 + flip) does not commute with a non-degenerate diagonal
        let sh = shape(&[2]);
        let mut d = AlgebraElement::identity(&sh);
        d.block_mut(0)[(0, 1)] = cr(1.0);
        d.block_mut(0)[(1, 0)] = cr(1.0);
        let flip = state_from_density(d).unwrap();
        assert!(!commutes(&s, &flip).unwrap());
    }

    #[test]
    fn tracial_predicate_on_commutative_algebras() {
        let sh = shape(&[1, 1]);
        let mut d = AlgebraElement::zero(&sh);
        d.block_mut(0)[(0, 0)] = cr(1.2);
        d.block_mut(1)[(0, 0)] = cr(0.8);
        let s = state_from_density(d).unwrap();
        assert!(s.is_tracial());
    }

    #[test]
    fn mixing_preserves_shape_and_trace() {
        let sh = shape(&[2]);
        let a = random_faithful_state(&sh, 1);
        let b = random_faithful_state(&sh, 2);
        let m = mix(0.5, &a, &a).unwrap();
        assert!(m.density().try_sub(a.density()).unwrap().frobenius_norm() < 1e-12);
        let m = mix(0.3, &a, &b).unwrap();
        assert!(m.is_faithful());
        assert!(mix(1.5, &a, &b).is_err());
    }

    #[test]
    fn direct_sum_state_evaluates_as_convex_split() {
        let sh = shape(&[2]);
        let a = random_faithful_state(&sh, 3);
        let b = random_faithful_state(&sh, 4);
        let lambda = 0.25;
        let w = direct_sum_state(lambda, &a, &b).unwrap();
        // ω(𝟙 ⊕ 0) = λ
        let probe = AlgebraElement::identity(&sh).direct_sum(&AlgebraElement::zero(&sh));
        let got = w.expectation(&probe).unwrap();
        assert!((got.re - lambda).abs() < 1e-12 && got.im.abs() < 1e-14);
        // ω(a₁ ⊕ a₂) = λρ(a₁) + (1−λ)σ(a₂) on a random pair
        let x = random_faithful_state(&sh, 5).density().clone();
        let y = random_faithful_state(&sh, 6).density().clone();
        let got = w.expectation(&x.direct_sum(&y)).unwrap();
        let want = a.expectation(&x).unwrap() * cr(lambda)
            + b.expectation(&y).unwrap() * cr(1.0 - lambda);
        assert!((got - want).norm() < 1e-12);
        assert!(direct_sum_state(1.5, &a, &b).is_err());
        assert!(direct_sum_state(0.0, &a, &b).is_err());
    }

    #[test]
    fn direct_sum_state_with_mixed_shapes() {
        let a = random_faithful_state(&shape(&[2]), 41);
        let b = random_faithful_state(&shape(&[1, 1]), 42);
        let w = direct_sum_state(0.6, &a, &b).unwrap();
        assert_eq!(w.shape().block_dims(), &[2, 1, 1]);
        let probe = AlgebraElement::identity(a.shape()).direct_sum(&AlgebraElement::zero(b.shape()));
        assert!((w.expectation(&probe).unwrap().re - 0.6).abs() < 1e-12);
    }

    #[test]
    fn commuting_sequence_shares_eigenbasis_and_converges() {
        let s = pure_state(&shape(&[2]), 0).unwrap();
        let seq = commuting_sequence(&s, 8, 0.5).unwrap();
        assert_eq!(seq.terms.len(), 8);
        let mut last = f64::INFINITY;
        for (n, term) in seq.terms.iter().enumerate() {
            assert!(term.is_faithful(), "term {n} is not faithful");
            let eps = 0.5f64.powi(n as i32 + 1);
            let evs = term.eigenvalues();
            assert!((evs[0] - (2.0 - eps)).abs() < 1e-14);
            assert!((evs[1] - eps).abs() < 1e-14);
            let dist = term.density().try_sub(s.density()).unwrap().frobenius_norm();
            assert!(dist < last);
            last = dist;
        }
        for a in &seq.terms {
            assert!(commutes(a, &seq.limit).unwrap());
            for b in &seq.terms {
                assert!(commutes(a, b).unwrap());
            }
        }
    }

    #[test]
    fn compressed_state_is_faithful() {
        let s = pure_state(&shape(&[2]), 0).unwrap();
        let c = compressed_state(&s).unwrap();
        assert_eq!(c.shape().block_dims(), &[1]);
        assert!(c.is_faithful());
        assert!(c.eigenvalues().iter().all(|&q| q > 0.0));
    }

    #[test]
    fn state_json_and_cli_literals() {
        let sh = shape(&[2]);
        let s = random_faithful_state(&sh, 11);
        let text = state_to_json(&s).unwrap();
        let back = state_from_json(&text).unwrap();
        assert!(s.density().try_sub(back.density()).unwrap().frobenius_norm() == 0.0);

        let t = state_from_cli_arg("tracial", Some(&sh)).unwrap();
        assert!(t.is_tracial());
        let p = state_from_cli_arg("pure:0", Some(&sh)).unwrap();
        assert_eq!(p.support_rank(), 1);
        let r = state_from_cli_arg("random:11", Some(&sh)).unwrap();
        assert_eq!(r.density(), s.density());
        assert!(state_from_cli_arg("tracial", None).is_err());
    }
}
