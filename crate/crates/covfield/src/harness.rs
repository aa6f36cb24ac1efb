//! Seeded property-suite runner and report emitter. Each record covers one
//! module-level invariant, carries a stable anchor string naming the
//! mathematical fact it checks, and reports the worst violation observed
//! over its trials. Reports are byte-deterministic for a fixed config when
//! timestamps are suppressed.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, AlgebraShape};
use crate::channels::{
    induced_contraction, random_cpu, random_state_preserving_unitary, rational_trace_split_mono,
    verify_cpu, CpuMap,
};
use crate::covariance::{
    covariance_form, covariance_operator, superoperator_duality_residual, CovarianceSpec,
};
use crate::error::{CovError, Result};
use crate::gns::{gelfand_ideal_basis, gns_space, gns_inner, tau_space};
use crate::linalg::{cr, hermitian_eigen, hermitian_part, operator_norm, CMat, C64};
use crate::modular::{modular_operator, partial_inverse_w, support_isometry};
use crate::monotone::{by_name, catalog, MonotoneFunction};
use crate::states::{
    commuting_sequence, compressed_state, mix, pure_state, random_faithful_state,
    random_tracial_state, state_from_density, tracial_state, State,
};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Configuration of a suite run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    #[serde(default = "default_shapes")]
    pub shapes: Vec<String>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tolerance_overrides: BTreeMap<String, f64>,
    #[serde(default = "default_catalog")]
    pub catalog: Vec<String>,
    /// Append a deliberately failing transpose-map record.
    #[serde(default)]
    pub inject_noncp_fixture: bool,
    /// Suppress wall-clock fields so reports are byte-identical across runs.
    #[serde(default)]
    pub no_timestamp: bool,
    /// Report destination; stdout when absent.
    #[serde(default)]
    pub out: Option<std::path::PathBuf>,
}

fn default_shapes() -> Vec<String> {
    vec!["2".into(), "3".into(), "1,2".into(), "2,2".into()]
}

fn default_trials() -> usize {
    500
}

fn default_seed() -> u64 {
    42
}

fn default_catalog() -> Vec<String> {
    catalog().iter().map(|f| f.name().to_string()).collect()
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            shapes: default_shapes(),
            trials: default_trials(),
            seed: default_seed(),
            tolerance_overrides: BTreeMap::new(),
            catalog: default_catalog(),
            inject_noncp_fixture: false,
            no_timestamp: false,
            out: None,
        }
    }
}

/// One verified property.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub name: String,
    pub anchor: String,
    pub trials: usize,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// The full suite report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub trials: usize,
    pub shapes: Vec<String>,
    pub catalog: Vec<String>,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
    pub properties: Vec<PropertyRecord>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

/// Stable per-trial seed: FNV-1a over master seed, property name, and index.
pub fn derive_seed(master: u64, property: &str, trial: u64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h = (h ^ b as u64).wrapping_mul(0x100000001b3);
        }
    };
    eat(&master.to_le_bytes());
    eat(property.as_bytes());
    eat(&trial.to_le_bytes());
    h
}

struct Ctx {
    shapes: Vec<AlgebraShape>,
    trials: usize,
    seed: u64,
    catalog: Vec<MonotoneFunction>,
    overrides: BTreeMap<String, f64>,
}

impl Ctx {
    fn shape(&self, trial: usize) -> &AlgebraShape {
        &self.shapes[trial % self.shapes.len()]
    }

    fn function(&self, trial: usize) -> &MonotoneFunction {
        &self.catalog[trial % self.catalog.len()]
    }

    fn tol(&self, name: &str, default: f64) -> f64 {
        self.overrides.get(name).copied().unwrap_or(default)
    }

    fn record(
        &self,
        name: &str,
        anchor: &str,
        trials: usize,
        worst: f64,
        default_tol: f64,
    ) -> PropertyRecord {
        let tolerance = self.tol(name, default_tol);
        PropertyRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            trials,
            worst_violation: worst,
            tolerance,
            pass: worst <= tolerance,
        }
    }
}

fn random_hermitian(shape: &AlgebraShape, seed: u64, traceless: bool) -> AlgebraElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<CMat> = shape
        .block_dims()
        .iter()
        .map(|&n| {
            let g = CMat::from_fn(n, n, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            hermitian_part(&g)
        })
        .collect();
    let mut e = AlgebraElement::from_blocks(shape.clone(), blocks).expect("blocks match");
    if traceless {
        let t = e.trace();
        e = e
            .try_sub(&AlgebraElement::identity(shape).scale(t))
            .expect("same shape");
    }
    let norm = e.frobenius_norm().max(f64::MIN_POSITIVE);
    e.scale(cr(1.0 / norm))
}

/// Random state with exactly one zero eigenvalue, sharing no structure with
/// the faithful generator beyond the seed.
fn random_singular_state(shape: &AlgebraShape, seed: u64) -> State {
    let s = random_faithful_state(shape, seed);
    let mut density = AlgebraElement::zero(shape);
    let mut smallest: Option<(usize, f64)> = None;
    for (j, spec) in s.block_spectra().iter().enumerate() {
        for &v in &spec.values {
            if smallest.map(|(_, w)| v < w).unwrap_or(true) {
                smallest = Some((j, v));
            }
        }
    }
    let (block_of_min, min_val) = smallest.expect("nonempty spectrum");
    for (j, spec) in s.block_spectra().iter().enumerate() {
        let n = spec.values.len();
        let mut d = CMat::zeros(n, n);
        for (i, &v) in spec.values.iter().enumerate() {
            let keep = if j == block_of_min && (v - min_val).abs() < 1e-15 { 0.0 } else { v };
            let col = spec.vectors.column(i);
            d += col * col.adjoint() * cr(keep);
        }
        density.block_mut(j).copy_from(&d);
    }
    let tr = density.trace().re;
    state_from_density(density.scale(cr(1.0 / tr))).expect("valid singular density")
}

type PropertyFn = fn(&Ctx) -> Result<PropertyRecord>;

fn prop_support_restriction(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "states.support_restriction_faithful";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let shape = ctx.shape(t);
        let seed = derive_seed(ctx.seed, name, t as u64);
        let s = if t % 2 == 0 {
            random_singular_state(shape, seed)
        } else {
            pure_state(shape, t % shape.total_dim())?
        };
        let reduced = compressed_state(&s)?;
        let min = reduced.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if !reduced.is_faithful() {
            worst = worst.max(1.0);
        }
        worst = worst.max((-min).max(0.0));
    }
    Ok(ctx.record(name, "compression to the support projection is faithful", ctx.trials, worst, 1e-12))
}

fn prop_commuting_sequence(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "states.commuting_sequence_wellformed";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let shape = ctx.shape(t);
        let seed = derive_seed(ctx.seed, name, t as u64);
        let s = if t % 2 == 0 {
            pure_state(shape, t % shape.total_dim())?
        } else {
            random_faithful_state(shape, seed)
        };
        let seq = commuting_sequence(&s, 10, 0.5)?;
        let mut last = f64::INFINITY;
        for term in &seq.terms {
            if !term.is_faithful() {
                worst = worst.max(1.0);
            }
            let d = term.density().try_sub(s.density())?.frobenius_norm();
            if d > 1e-14 {
                worst = worst.max((d - last).max(0.0));
            }
            last = d;
        }
        for (i, a) in seq.terms.iter().enumerate() {
            let ca = a.density().commutator_norm(s.density())?;
            worst = worst.max(ca);
            for b in &seq.terms[i + 1..] {
                worst = worst.max(a.density().commutator_norm(b.density())?);
            }
        }
    }
    Ok(ctx.record(name, "commuting sequences of faithful states", ctx.trials, worst, 1e-12))
}

fn prop_direct_sum_modular(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "states.direct_sum_modular";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let shape = ctx.shape(t);
        let seed = derive_seed(ctx.seed, name, t as u64);
        let a = random_faithful_state(shape, seed);
        let b = random_faithful_state(shape, seed ^ 0xABCD);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x77);
        let lambda = rng.random_range(0.05..0.95);
        let w = crate::states::direct_sum_state(lambda, &a, &b)?;
        let md_w = modular_operator(&w)?;
        let md_a = modular_operator(&a)?;
        let md_b = modular_operator(&b)?;
        let (na, nb) = (md_a.rho_space.dim(), md_b.rho_space.dim());
        let mut block = CMat::zeros(na + nb, na + nb);
        block.view_mut((0, 0), (na, na)).copy_from(&md_a.delta.matrix);
        block.view_mut((na, na), (nb, nb)).copy_from(&md_b.delta.matrix);
        let scale = operator_norm(&block).max(1.0);
        worst = worst.max(operator_norm(&(&md_w.delta.matrix - &block)) / scale);
    }
    Ok(ctx.record(name, "modular operator of a direct sum splits", ctx.trials, worst, 1e-10))
}

fn prop_dimension_law(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "gns.dimension_law";
    let mut worst: f64 = 0.0;
    let mut trials = 0;
    for shape in &ctx.shapes {
        let mut states = vec![
            tracial_state(shape),
            random_faithful_state(shape, derive_seed(ctx.seed, name, trials as u64)),
        ];
        for idx in 0..shape.total_dim() {
            states.push(pure_state(shape, idx)?);
        }
        for s in states {
            let g = gns_space(&s);
            let ideal = gelfand_ideal_basis(&s);
            let lhs = g.dim() + ideal.len();
            worst = worst.max((lhs as f64 - shape.algebra_dim() as f64).abs());
            trials += 1;
        }
    }
    Ok(ctx.record(name, "gns dimension plus gelfand ideal dimension is the algebra dimension", trials, worst, 0.5))
}

fn prop_tracial_hilbert_schmidt(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "gns.tracial_hilbert_schmidt";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let shape = ctx.shape(t);
        let seed = derive_seed(ctx.seed, name, t as u64);
        let tau = tau_space(shape);
        let a = random_hermitian(shape, seed, false);
        let b = random_hermitian(shape, seed ^ 0x1111, false);
        let ip = gns_inner(&tau.vector(&a)?, &tau.vector(&b)?)?;
        let hs = (a.embed().adjoint() * b.embed()).trace() / cr(shape.total_dim() as f64);
        worst = worst.max((ip - hs).norm());
    }
    Ok(ctx.record(name, "tracial gns product equals the normalized hilbert-schmidt product", ctx.trials, worst, 1e-12))
}

fn prop_quotient_well_defined(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "gns.quotient_well_defined";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let shape = ctx.shape(t);
        let seed = derive_seed(ctx.seed, name, t as u64);
        let s = if t % 2 == 0 {
            pure_state(shape, t % shape.total_dim())?
        } else {
            random_singular_state(shape, seed)
        };
        let g = gns_space(&s);
        let ideal = gelfand_ideal_basis(&s);
        if ideal.is_empty() {
            continue;
        }
        let a = random_hermitian(shape, seed ^ 0x2222, false);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3333);
        let mut n = AlgebraElement::zero(shape);
        for base in &ideal {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            n = n.try_add(&base.scale(z))?;
        }
        let shifted = a.try_add(&n)?;
        let d = g.vector(&a)?.sub(&g.vector(&shifted)?)?;
        worst = worst.max(d.norm());
    }
    Ok(ctx.record(name, "gelfand ideal shifts leave the gns class unchanged", ctx.trials, worst, 1e-10))
}

fn prop_restricted_convergence(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "modular.restricted_convergence";
    let mut worst: f64 = 0.0;
    let mut trials = 0;
    for shape in &ctx.shapes {
        let s = pure_state(shape, 0)?;
        let tau = tau_space(shape);
        let iso = support_isometry(&tau, &s)?;
        let md_lim = modular_operator(&s)?;
        let restricted_lim = iso.adjoint() * &md_lim.delta_tilde.matrix * &iso;
        let seq = commuting_sequence(&s, 21, 0.5)?;
        let term = seq.terms.last().expect("nonempty sequence");
        let md_n = modular_operator(term)?;
        let restricted_n = iso.adjoint() * &md_n.delta_tilde.matrix * &iso;
        let diff = operator_norm(&(restricted_n - restricted_lim));
        worst = worst.max(diff);
        let w_norm = partial_inverse_w(&tau, term)?.operator_norm();
        if w_norm <= 1e6 {
            worst = worst.max(1.0);
        }
        trials += 1;
    }
    Ok(ctx.record(name, "restricted modular convergence while the partial inverse diverges", trials, worst, 1e-6))
}

fn prop_delta_positivity(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "modular.delta_positivity";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let shape = ctx.shape(t);
        let seed = derive_seed(ctx.seed, name, t as u64);
        let faithful = t % 2 == 1;
        let s = if faithful {
            random_faithful_state(shape, seed)
        } else {
            pure_state(shape, t % shape.total_dim())?
        };
        let md = modular_operator(&s)?;
        let min = md.spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max((-min).max(0.0));
        if faithful && min <= 0.0 {
            worst = worst.max(1.0);
        }
    }
    Ok(ctx.record(name, "positivity of the modular operator", ctx.trials, worst, 1e-12))
}

fn prop_faithful_factorization(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "modular.faithful_factorization";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let shape = ctx.shape(t);
        let seed = derive_seed(ctx.seed, name, t as u64);
        let s = random_faithful_state(shape, seed);
        let md = modular_operator(&s)?;
        let r_inv = crate::linalg::try_inverse(&md.right.matrix)?;
        let lr = &md.left.matrix * r_inv;
        // deviation relative to the operand scale (the operators carry
        // norm 1/q_min at states near the spectral floor)
        let scale = md.delta_tilde.operator_norm().max(1.0);
        worst = worst.max(operator_norm(&(lr - &md.delta_tilde.matrix)) / scale);
    }
    Ok(ctx.record(name, "left-right factorization of the modular operator at faithful states", ctx.trials, worst, 1e-10))
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, top: f64) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let m = &g * g.adjoint();
    let max = hermitian_eigen(&m).max_value().max(1e-12);
    m * cr(top / max)
}

fn prop_matrix_monotonicity(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "monotone.matrix_monotonicity";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let f = ctx.function(t);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.seed, name, t as u64));
        let n = 3 + t % 2;
        let a = random_psd(&mut rng, n, 4.0) + CMat::identity(n, n) * cr(0.02);
        let b = &a + random_psd(&mut rng, n, 5.0);
        let gap = f.eval_hermitian(&b)? - f.eval_hermitian(&a)?;
        worst = worst.max((-hermitian_eigen(&gap).min_value()).max(0.0));
    }
    Ok(ctx.record(name, "operator monotonicity on ordered positive pairs", ctx.trials, worst, 1e-8))
}

fn prop_operator_concavity(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "monotone.operator_concavity";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let f = ctx.function(t);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.seed, name, t as u64));
        let n = 3;
        let a = random_psd(&mut rng, n, 5.0) + CMat::identity(n, n) * cr(0.02);
        let b = random_psd(&mut rng, n, 5.0) + CMat::identity(n, n) * cr(0.02);
        let lam = rng.random_range(0.1..0.9);
        let mixed = &a * cr(lam) + &b * cr(1.0 - lam);
        let gap = f.eval_hermitian(&mixed)?
            - (f.eval_hermitian(&a)? * cr(lam) + f.eval_hermitian(&b)? * cr(1.0 - lam));
        worst = worst.max((-hermitian_eigen(&gap).min_value()).max(0.0));
    }
    Ok(ctx.record(name, "operator concavity of monotone functions", ctx.trials, worst, 1e-8))
}

fn prop_radial_values(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "monotone.radial_values";
    let mut worst: f64 = 0.0;
    let mut trials = 0;
    for f in &ctx.catalog {
        // limits at zero are nonnegative; strictly positive where the
        // function extends to all states (bures, wigner-yanase)
        worst = worst.max((-f.f_zero()).max(0.0));
        if matches!(f.name(), "bures" | "wigner-yanase") && f.f_zero() <= 0.0 {
            worst = worst.max(1.0);
        }
        let probes: Vec<f64> = [1e-6, 1e-8, 1e-10, 1e-12]
            .iter()
            .map(|&t| Ok((f.eval_scalar(t)? - f.f_zero()).abs()))
            .collect::<Result<_>>()?;
        for w in probes.windows(2) {
            worst = worst.max(w[1] - w[0] - 1e-15);
        }
        trials += 1;
    }
    Ok(ctx.record(name, "right limits at zero exist and are nonnegative", trials, worst, 1e-12))
}

fn prop_tracial_collapse(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "covariance.tracial_collapse";
    let alpha = 1.3;
    let mut worst: f64 = 0.0;
    let mut trials = 0;
    for (i, shape) in ctx.shapes.iter().enumerate() {
        for k in 0..5usize {
            let seed = derive_seed(ctx.seed, name, (i * 5 + k) as u64);
            let s = random_tracial_state(shape, seed);
            let g = gns_space(&s);
            let mut first: Option<CMat> = None;
            for f in &ctx.catalog {
                let spec = CovarianceSpec::new(f.clone(), alpha)?;
                let t = covariance_operator(&g, &spec)?;
                match &first {
                    None => first = Some(t.matrix().clone()),
                    Some(m) => {
                        let dev = (t.matrix() - m)
                            .iter()
                            .map(|z| z.norm())
                            .fold(0.0f64, f64::max);
                        worst = worst.max(dev);
                    }
                }
            }
            trials += 1;
        }
    }
    Ok(ctx.record(name, "all covariance fields agree at tracial states", trials, worst, 1e-12))
}

fn prop_modular_commutation(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "covariance.modular_commutation";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials.max(20) {
        let shape = ctx.shape(t);
        let seed = derive_seed(ctx.seed, name, t as u64);
        let s = random_faithful_state(shape, seed);
        let g = gns_space(&s);
        let delta = hermitian_part(&g.modular_form_matrix()?);
        let spec = CovarianceSpec::new(ctx.function(t).clone(), 1.7)?;
        let t_op = covariance_operator(&g, &spec)?;
        let scale = (operator_norm(t_op.matrix()) * operator_norm(&delta)).max(1.0);
        worst = worst
            .max(operator_norm(&(t_op.matrix() * &delta - &delta * t_op.matrix())) / scale);

        // conjugation by a state-preserving unitary commutes with T
        let u = random_state_preserving_unitary(&s, seed ^ 0x51);
        let auto = CpuMap::automorphism_from_unitary(&u)?;
        let ind = induced_contraction(&auto, &s)?;
        // same state, deterministic basis: compare through coordinates
        let t_src = covariance_operator(&ind.source_space, &spec)?;
        let comm = t_src.matrix() * &ind.matrix.adjoint() - ind.matrix.adjoint() * t_op.matrix();
        worst = worst.max(operator_norm(&comm) / operator_norm(t_op.matrix()).max(1.0));
    }
    Ok(ctx.record(name, "covariance operator commutes with the modular operator and state symmetries", ctx.trials.max(20), worst, 1e-10))
}

fn prop_concavity(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "covariance.concavity";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let shape = ctx.shape(t);
        let seed = derive_seed(ctx.seed, name, t as u64);
        let f = ctx.function(t);
        let spec = CovarianceSpec::reduced(f.clone())?;
        let rho = random_faithful_state(shape, seed);
        let sigma = random_faithful_state(shape, seed ^ 0x9999);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1212);
        let lam = rng.random_range(0.1..0.9);
        let a = random_hermitian(shape, seed ^ 0x4343, false);
        let mixed = mix(lam, &rho, &sigma)?;
        let value = |state: &State| -> Result<f64> {
            let g = gns_space(state);
            let xi = g.vector(&a)?;
            Ok(covariance_form(&g, &spec, &xi, &xi)?.re)
        };
        let lhs = lam * value(&rho)? + (1.0 - lam) * value(&sigma)?;
        let rhs = value(&mixed)?;
        worst = worst.max((lhs - rhs).max(0.0));
    }
    Ok(ctx.record(name, "concavity of the covariance in the state", ctx.trials, worst, 1e-8))
}

fn prop_continuity(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "covariance.continuity";
    let bures = by_name("bures")?;
    let spec = CovarianceSpec::reduced(bures.clone())?;
    let mut worst: f64 = 0.0;
    let mut trials = 0;

    // non-faithful limit: pure state on each shape, both the projected class
    // and the raw off-support direction
    for shape in &ctx.shapes {
        let s = pure_state(shape, 0)?;
        let support = crate::states::support_projection(&s);
        let seq = commuting_sequence(&s, 21, 0.5)?;
        let term = seq.terms.last().expect("nonempty");
        let g_lim = gns_space(&s);
        let g_n = gns_space(term);

        let a = random_hermitian(shape, derive_seed(ctx.seed, name, trials as u64), false);
        let ap = a.try_mul(&support.p)?;
        let lim = covariance_form(&g_lim, &spec, &g_lim.vector(&a)?, &g_lim.vector(&a)?)?.re;
        let at_n = covariance_form(&g_n, &spec, &g_n.vector(&ap)?, &g_n.vector(&ap)?)?.re;
        worst = worst.max((at_n - lim).abs() - 1e-6);

        // raw direction from the support into the kernel, when the first
        // block has one: the unprojected values approach p_max · F(0) for
        // Petz-symmetric F, while the projected class sits at zero
        let spectra = s.block_spectra();
        let (bmax, imax) = (0, 0); // pure:0 concentrates on the first basis vector
        if let Some(izero) = spectra[bmax].values.iter().position(|&v| v <= s.rank_cutoff()) {
            let e = AlgebraElement::matrix_unit(shape, bmax, imax, izero)?;
            let raw_n = covariance_form(&g_n, &spec, &g_n.vector(&e)?, &g_n.vector(&e)?)?.re;
            let p_max = s.ordinary_probabilities()[imax];
            let target = p_max * bures.f_zero();
            worst = worst.max((raw_n - target).abs() - 1e-3);
            let lim_class =
                covariance_form(&g_lim, &spec, &g_lim.vector(&e)?, &g_lim.vector(&e)?)?.re;
            worst = worst.max(lim_class.abs() - 1e-12);
        }
        trials += 1;
    }

    // faithful limits: plain convergence of the covariance values
    for t in 0..ctx.shapes.len() {
        let shape = ctx.shape(t);
        let seed = derive_seed(ctx.seed, name, (100 + t) as u64);
        let s = random_faithful_state(shape, seed);
        let seq = commuting_sequence(&s, 21, 0.5)?;
        let term = seq.terms.last().expect("nonempty");
        let a = random_hermitian(shape, seed ^ 0x8811, false);
        let g_lim = gns_space(&s);
        let g_n = gns_space(term);
        let lim = covariance_form(&g_lim, &spec, &g_lim.vector(&a)?, &g_lim.vector(&a)?)?.re;
        let at_n = covariance_form(&g_n, &spec, &g_n.vector(&a)?, &g_n.vector(&a)?)?.re;
        worst = worst.max((at_n - lim).abs() - 1e-6);
        trials += 1;
    }
    Ok(ctx.record(name, "continuity along commuting sequences with the radial value on off-support directions", trials, worst.max(0.0), 1e-12))
}

fn prop_metric_duality(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "covariance.metric_duality";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let shape = ctx.shape(t);
        let seed = derive_seed(ctx.seed, name, t as u64);
        let s = random_faithful_state(shape, seed);
        worst = worst.max(superoperator_duality_residual(&s, ctx.function(t))?);
    }
    Ok(ctx.record(name, "metric and covariance superoperators invert each other", ctx.trials, worst, 1e-9))
}

fn shape_pair(ctx: &Ctx, t: usize) -> (&AlgebraShape, &AlgebraShape) {
    let target = ctx.shape(t);
    let source = ctx.shape(t + 1);
    (source, target)
}

fn prop_functoriality(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "channels.functoriality_inequality";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let (source, target) = shape_pair(ctx, t);
        let seed = derive_seed(ctx.seed, name, t as u64);
        let r = target.total_dim().div_ceil(source.total_dim()) + 1;
        let map = random_cpu(source, target, r, seed)?;
        let rho = random_faithful_state(target, seed ^ 0xF00D);
        let ind = induced_contraction(&map, &rho)?;
        let spec = CovarianceSpec::reduced(ctx.function(t).clone())?;
        let slack = ind.covariance_monotonicity_slack(&spec)?;
        worst = worst.max((-slack).max(0.0));
        // the modular inequality underlying it
        let mslack = ind.modular_monotonicity_slack()?;
        worst = worst.max(((-mslack) - 1e-9).max(0.0));
    }
    Ok(ctx.record(name, "monotonicity of the covariance under completely positive unital maps", ctx.trials, worst, 1e-8))
}

fn prop_split_mono_invariance(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "channels.split_mono_invariance";
    let cases: Vec<(AlgebraShape, Vec<(u64, u64)>)> = vec![
        (AlgebraShape::new(vec![1, 1])?, vec![(1, 3), (2, 3)]),
        (AlgebraShape::new(vec![1, 1, 1])?, vec![(1, 2), (1, 4), (1, 4)]),
        (AlgebraShape::new(vec![2, 1])?, vec![(1, 3), (2, 3)]),
    ];
    let mut worst: f64 = 0.0;
    let mut trials = 0;
    for (shape, weights) in &cases {
        let sm = rational_trace_split_mono(shape, weights)?;
        let tau_big = tracial_state(&sm.big_shape);
        let ind = induced_contraction(&sm.phi, &tau_big)?;
        for f in &ctx.catalog {
            let spec = CovarianceSpec::new(f.clone(), 1.4)?;
            worst = worst.max(ind.covariance_invariance_defect(&spec)?);
            // scalar form of the same identity on a random vector
            let seed = derive_seed(ctx.seed, name, trials as u64);
            let a = random_hermitian(shape, seed, false);
            let xi = ind.source_space.vector(&a)?;
            let lhs = covariance_form(&ind.source_space, &spec, &xi, &xi)?.re;
            let pushed_coords = &ind.matrix * &xi.coords;
            let t_big = covariance_operator(&ind.target_space, &spec)?;
            let rhs = (pushed_coords.adjoint() * t_big.matrix() * &pushed_coords)[(0, 0)].re;
            worst = worst.max((lhs - rhs).abs());
            trials += 1;
        }
    }
    Ok(ctx.record(name, "invariance of the covariance under split monomorphisms", trials, worst, 1e-9))
}

fn prop_jensen(ctx: &Ctx) -> Result<PropertyRecord> {
    let name = "channels.jensen_contraction";
    let mut worst: f64 = 0.0;
    for t in 0..ctx.trials {
        let f = ctx.function(t);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.seed, name, t as u64));
        let n = 4;
        let g = CMat::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let v = &g * cr(1.0 / operator_norm(&g).max(1e-12) / (1.0 + rng.random_range(0.0..1.0)));
        let h = random_psd(&mut rng, n, 8.0);
        let lhs = v.adjoint() * f.eval_hermitian(&h)? * &v;
        let rhs = f.eval_hermitian(&(v.adjoint() * &h * &v))?;
        let gap = rhs - lhs;
        worst = worst.max((-hermitian_eigen(&gap).min_value()).max(0.0));
    }
    Ok(ctx.record(name, "jensen operator inequality for contractions", ctx.trials, worst, 1e-8))
}

/// The registered properties, in report order.
fn properties() -> Vec<PropertyFn> {
    vec![
        prop_support_restriction,
        prop_commuting_sequence,
        prop_direct_sum_modular,
        prop_dimension_law,
        prop_tracial_hilbert_schmidt,
        prop_quotient_well_defined,
        prop_restricted_convergence,
        prop_delta_positivity,
        prop_faithful_factorization,
        prop_matrix_monotonicity,
        prop_operator_concavity,
        prop_radial_values,
        prop_tracial_collapse,
        prop_modular_commutation,
        prop_concavity,
        prop_continuity,
        prop_metric_duality,
        prop_functoriality,
        prop_split_mono_invariance,
        prop_jensen,
    ]
}

/// Names of the registered properties, for completeness checks.
pub fn property_names() -> Vec<String> {
    vec![
        "states.support_restriction_faithful".into(),
        "states.commuting_sequence_wellformed".into(),
        "states.direct_sum_modular".into(),
        "gns.dimension_law".into(),
        "gns.tracial_hilbert_schmidt".into(),
        "gns.quotient_well_defined".into(),
        "modular.restricted_convergence".into(),
        "modular.delta_positivity".into(),
        "modular.faithful_factorization".into(),
        "monotone.matrix_monotonicity".into(),
        "monotone.operator_concavity".into(),
        "monotone.radial_values".into(),
        "covariance.tracial_collapse".into(),
        "covariance.modular_commutation".into(),
        "covariance.concavity".into(),
        "covariance.continuity".into(),
        "covariance.metric_duality".into(),
        "channels.functoriality_inequality".into(),
        "channels.split_mono_invariance".into(),
        "channels.jensen_contraction".into(),
    ]
}

/// Run the full suite.
pub fn run_suite(config: &SuiteConfig) -> Result<PropertyReport> {
    if config.shapes.is_empty() {
        return Err(CovError::InvalidInput("config has an empty shape list".into()));
    }
    if config.trials == 0 {
        return Err(CovError::InvalidInput("trials must be at least 1".into()));
    }
    if config.tolerance_overrides.values().any(|&t| t <= 0.0) {
        return Err(CovError::InvalidInput("tolerance overrides must be positive".into()));
    }
    let shapes = config
        .shapes
        .iter()
        .map(|s| AlgebraShape::parse(s))
        .collect::<Result<Vec<_>>>()?;
    let functions = config
        .catalog
        .iter()
        .map(|n| by_name(n))
        .collect::<Result<Vec<_>>>()?;
    if functions.is_empty() {
        return Err(CovError::InvalidInput("config has an empty catalog".into()));
    }
    let ctx = Ctx {
        shapes,
        trials: config.trials,
        seed: config.seed,
        catalog: functions,
        overrides: config.tolerance_overrides.clone(),
    };
    let start = Instant::now();
    let mut records = Vec::new();
    for prop in properties() {
        records.push(prop(&ctx)?);
    }
    if config.inject_noncp_fixture {
        let t = CpuMap::transpose_map(&AlgebraShape::new(vec![2])?);
        let report = verify_cpu(&t)?;
        let worst = (-report.choi_min_eigenvalue).max(0.0);
        records.push(PropertyRecord {
            name: "fixture.transpose_not_cp".into(),
            anchor: "choi positivity witness".into(),
            trials: 1,
            worst_violation: worst,
            tolerance: 1e-9,
            pass: worst <= 1e-9,
        });
    }
    let verdict = if records.iter().all(|r| r.pass) { "pass" } else { "fail" };
    Ok(PropertyReport {
        seed: config.seed,
        trials: config.trials,
        shapes: config.shapes.clone(),
        catalog: config.catalog.clone(),
        verdict: verdict.into(),
        runtime_ms: if config.no_timestamp {
            None
        } else {
            Some(start.elapsed().as_millis() as u64)
        },
        properties: records,
    })
}

/// One row of the continuity probe.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeRow {
    pub n: u64,
    pub epsilon: f64,
    /// Covariance of the class projected by the limit's support.
    pub projected: f64,
    /// Covariance of the raw, unprojected direction.
    pub unprojected: f64,
    pub w_norm: f64,
    pub restricted_delta_diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub function: String,
    pub direction: String,
    pub limit_projected: f64,
    pub rows: Vec<ProbeRow>,
}

/// Walk a state toward its tracial interpolation along `ε_n = 1/n`,
/// tabulating projected/unprojected covariance values, the partial-inverse
/// norm, and the restricted modular difference.
pub fn continuity_probe(
    state: &State,
    f: &MonotoneFunction,
    steps: usize,
    max_n: u64,
) -> Result<ProbeReport> {
    if steps < 2 {
        return Err(CovError::InvalidInput("need at least two steps".into()));
    }
    let shape = state.shape().clone();
    let spec = CovarianceSpec::reduced(f.clone())?;
    let support = crate::states::support_projection(state);
    let tau = tau_space(&shape);
    let iso = support_isometry(&tau, state)?;
    let md_lim = modular_operator(state)?;
    let restricted_lim = iso.adjoint() * &md_lim.delta_tilde.matrix * &iso;
    let g_lim = gns_space(state);

    // probe direction: |max⟩⟨min| within the block carrying the smallest
    // eigenvalue, built in the density's eigenbasis
    let (block, i_max, i_min) = {
        let mut bmin = 0;
        let mut imin = 0;
        let mut vmin = f64::INFINITY;
        for (b, spec_b) in state.block_spectra().iter().enumerate() {
            for (i, &v) in spec_b.values.iter().enumerate() {
                if v < vmin {
                    vmin = v;
                    bmin = b;
                    imin = i;
                }
            }
        }
        let spec_b = &state.block_spectra()[bmin];
        let imax = spec_b
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (bmin, imax, imin)
    };
    let spec_b = &state.block_spectra()[block];
    let vmax = spec_b.vectors.column(i_max);
    let vmin = spec_b.vectors.column(i_min);
    let mut a = AlgebraElement::zero(&shape);
    a.block_mut(block).copy_from(&(vmax * vmin.adjoint()));
    let ap = a.try_mul(&support.p)?;

    let limit_projected =
        covariance_form(&g_lim, &spec, &g_lim.vector(&a)?, &g_lim.vector(&a)?)?.re;

    // log-spaced n with the endpoints pinned
    let mut ns: Vec<u64> = (0..steps)
        .map(|i| {
            let x = (max_n as f64).ln() * i as f64 / (steps - 1) as f64;
            x.exp().round().max(1.0) as u64
        })
        .collect();
    ns.dedup();
    if *ns.last().expect("nonempty") != max_n {
        ns.push(max_n);
    }

    let id = AlgebraElement::identity(&shape);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let eps = 1.0 / n as f64;
        let density = state
            .density()
            .scale(cr(1.0 - eps))
            .try_add(&id.scale(cr(eps)))?;
        let term = state_from_density(density)?;
        let g_n = gns_space(&term);
        let projected =
            covariance_form(&g_n, &spec, &g_n.vector(&ap)?, &g_n.vector(&ap)?)?.re;
        let unprojected =
            covariance_form(&g_n, &spec, &g_n.vector(&a)?, &g_n.vector(&a)?)?.re;
        let w_norm = partial_inverse_w(&tau, &term)?.operator_norm();
        let md_n = modular_operator(&term)?;
        let restricted_n = iso.adjoint() * &md_n.delta_tilde.matrix * &iso;
        let restricted_delta_diff = operator_norm(&(restricted_n - &restricted_lim));
        rows.push(ProbeRow { n, epsilon: eps, projected, unprojected, w_norm, restricted_delta_diff });
    }
    Ok(ProbeReport {
        function: f.name().to_string(),
        direction: format!("block {block}: |{i_max}⟩⟨{i_min}|"),
        limit_projected,
        rows,
    })
}

/// Tabulate metric values over a simplex grid of diagonal faithful states.
/// Columns: state (ordinary probabilities), direction label, function name,
/// metric value, and the closed-form Fisher–Rao value on commutative shapes.
pub fn metric_table(shape: &AlgebraShape, f_names: &[String], grid: usize) -> Result<String> {
    let k = shape.total_dim();
    if grid + 1 < k {
        return Err(CovError::InvalidInput(format!(
            "grid {grid} too coarse for {k} strictly positive probabilities"
        )));
    }
    let functions: Vec<MonotoneFunction> =
        f_names.iter().map(|n| by_name(n)).collect::<Result<_>>()?;
    let commutative = shape.block_dims().iter().all(|&n| n == 1);

    // interior grid points m/(grid+1) with integer m ≥ 1 summing to grid+1
    let mut points: Vec<Vec<f64>> = Vec::new();
    let denom = grid + 1;
    let mut stack = vec![(Vec::<usize>::new(), denom)];
    while let Some((prefix, rest)) = stack.pop() {
        if prefix.len() == k - 1 {
            if rest >= 1 {
                let mut m = prefix.clone();
                m.push(rest);
                points.push(m.iter().map(|&x| x as f64 / denom as f64).collect());
            }
            continue;
        }
        let remaining_slots = k - prefix.len() - 1;
        for take in 1..=rest.saturating_sub(remaining_slots) {
            let mut next = prefix.clone();
            next.push(take);
            stack.push((next, rest - take));
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    // direction basis in ordinary coordinates: adjacent diagonal differences
    // plus real/imaginary off-diagonal units within each block
    let mut directions: Vec<(String, AlgebraElement)> = Vec::new();
    for i in 0..k - 1 {
        let mut d = AlgebraElement::zero(shape);
        let (b1, r1) = global_to_block(shape, i);
        let (b2, r2) = global_to_block(shape, i + 1);
        d.block_mut(b1)[(r1, r1)] = cr(1.0);
        d.block_mut(b2)[(r2, r2)] += cr(-1.0);
        directions.push((format!("d{i}"), d));
    }
    for (j, &n) in shape.block_dims().iter().enumerate() {
        for r in 0..n {
            for s in r + 1..n {
                let mut x = AlgebraElement::zero(shape);
                x.block_mut(j)[(r, s)] = cr(1.0);
                x.block_mut(j)[(s, r)] = cr(1.0);
                directions.push((format!("x{j}_{r}{s}"), x));
                let mut y = AlgebraElement::zero(shape);
                y.block_mut(j)[(r, s)] = C64::new(0.0, 1.0);
                y.block_mut(j)[(s, r)] = C64::new(0.0, -1.0);
                directions.push((format!("y{j}_{r}{s}"), y));
            }
        }
    }

    let mut out = String::from("state,direction,f,g,fisher_rao\n");
    for p in &points {
        let mut density = AlgebraElement::zero(shape);
        for (i, &pi) in p.iter().enumerate() {
            let (b, r) = global_to_block(shape, i);
            density.block_mut(b)[(r, r)] = cr(pi * k as f64);
        }
        let state = state_from_density(density)?;
        let state_label: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
        for (label, dir) in &directions {
            let zeta = crate::covariance::TangentVector::from_ordinary(&state, dir.clone())?;
            for f in &functions {
                let spec = CovarianceSpec::reduced(f.clone())?;
                let g = crate::covariance::metric_inner(&state, &spec, &zeta, &zeta)?;
                let fr = if commutative {
                    let zeta_diag: Vec<f64> =
                        (0..k).map(|i| dir.block(i).map(|z| z.re)[(0, 0)]).collect();
                    format!("{}", crate::covariance::fisher_rao_commutative(p, &zeta_diag))
                } else {
                    String::new()
                };
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    state_label.join(";"),
                    label,
                    f.name(),
                    g,
                    fr
                ));
            }
        }
    }
    Ok(out)
}

fn global_to_block(shape: &AlgebraShape, global: usize) -> (usize, usize) {
    let mut off = 0;
    for (j, &n) in shape.block_dims().iter().enumerate() {
        if global < off + n {
            return (j, global - off);
        }
        off += n;
    }
    panic!("index out of range");
}
