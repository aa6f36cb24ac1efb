//! Acceptance suite: every criterion runs at its stated trial count and
//! tolerance and prints one PASS line. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use covfield::algebra::{AlgebraElement, AlgebraShape};
use covfield::channels::{induced_contraction, random_cpu, rational_trace_split_mono};
use covfield::covariance::{
    covariance_operator, fisher_rao_commutative, metric_inner, metric_spectral_oracle,
    CovarianceSpec, TangentVector,
};
use covfield::gns::gns_space;
use covfield::harness::{continuity_probe, derive_seed, run_suite, SuiteConfig};
use covfield::linalg::{cr, hermitian_eigen, hermitian_part, CMat, C64};
use covfield::modular::modular_operator;
use covfield::monotone::{by_name, catalog, random_log_grid, MonotoneFunction};
use covfield::states::{
    direct_sum_state, mix, pure_state, random_faithful_state, random_tracial_state,
    state_from_density, State,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape(dims: &[usize]) -> AlgebraShape {
    AlgebraShape::new(dims.to_vec()).unwrap()
}

fn qubit_ordinary(p1: f64, p2: f64) -> State {
    let sh = shape(&[2]);
    let mut d = AlgebraElement::zero(&sh);
    d.block_mut(0)[(0, 0)] = cr(2.0 * p1);
    d.block_mut(0)[(1, 1)] = cr(2.0 * p2);
    state_from_density(d).unwrap()
}

fn random_traceless_hermitian(shape: &AlgebraShape, rng: &mut ChaCha8Rng) -> AlgebraElement {
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
    let e = AlgebraElement::from_blocks(shape.clone(), blocks).unwrap();
    let t = e.trace();
    e.try_sub(&AlgebraElement::identity(shape).scale(t)).unwrap()
}

fn random_hermitian(shape: &AlgebraShape, rng: &mut ChaCha8Rng) -> AlgebraElement {
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
    let e = AlgebraElement::from_blocks(shape.clone(), blocks).unwrap();
    let norm = e.operator_norm().max(f64::MIN_POSITIVE);
    e.scale(cr(1.0 / norm))
}

/// One (source, target, dilation) triple per configured shape pair.
fn shape_pairs() -> Vec<(AlgebraShape, AlgebraShape, usize)> {
    vec![
        (shape(&[2]), shape(&[2]), 2),
        (shape(&[2]), shape(&[3]), 3),
        (shape(&[1, 2]), shape(&[2]), 2),
        (shape(&[3]), shape(&[2, 2]), 3),
    ]
}

#[test]
fn criterion_01_tracial_uniqueness() {
    let alpha = 1.3;
    let shapes = [shape(&[2]), shape(&[3]), shape(&[1, 2]), shape(&[2, 2])];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (i, sh) in shapes.iter().enumerate() {
        for k in 0..5 {
            let s = random_tracial_state(sh, derive_seed(1, "acc1", (i * 5 + k) as u64));
            assert!(s.is_tracial());
            let g = gns_space(&s);
            let mut first: Option<CMat> = None;
            for f in catalog() {
                let spec = CovarianceSpec::new(f, alpha).unwrap();
                let t = covariance_operator(&g, &spec).unwrap();
                match &first {
                    None => first = Some(t.matrix().clone()),
                    Some(m) => {
                        let dev = (t.matrix() - m).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
                        worst = worst.max(dev);
                    }
                }
            }
            count += 1;
        }
    }
    assert_eq!(count, 20);
    assert!(worst < 1e-12, "worst entrywise deviation {worst}");
    println!("ACCEPTANCE 01 tracial uniqueness: PASS (20 states, worst deviation {worst:.2e})");
}

#[test]
fn criterion_02_modular_spectrum() {
    let s = qubit_ordinary(0.75, 0.25);
    let md = modular_operator(&s).unwrap();
    let mut spec = md.spectrum.clone();
    spec.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let want = [1.0 / 3.0, 1.0, 1.0, 3.0];
    let mut worst: f64 = 0.0;
    for (got, want) in spec.iter().zip(want) {
        worst = worst.max((got - want).abs());
    }
    assert!(worst < 1e-12, "spectrum {spec:?}, worst {worst}");
    println!("ACCEPTANCE 02 modular spectrum {{1,1,3,1/3}}: PASS (worst deviation {worst:.2e})");
}

#[test]
fn criterion_03_modular_monotonicity() {
    let mut worst = f64::INFINITY;
    for (pair_idx, (src, tgt, r)) in shape_pairs().iter().enumerate() {
        for trial in 0..500u64 {
            let seed = derive_seed(3, "acc3", (pair_idx as u64) << 32 | trial);
            let map = random_cpu(src, tgt, *r, seed).unwrap();
            let rho = random_faithful_state(tgt, seed ^ 0xF00D);
            let ind = induced_contraction(&map, &rho).unwrap();
            let slack = ind.modular_monotonicity_slack().unwrap();
            assert!(
                slack >= -1e-9,
                "pair {pair_idx} trial {trial}: slack {slack}"
            );
            worst = worst.min(slack);
        }
    }
    println!("ACCEPTANCE 03 modular monotonicity: PASS (500 trials x 4 shape pairs, smallest slack {worst:.2e})");
}

#[test]
fn criterion_04_covariance_monotonicity() {
    let pairs = shape_pairs();
    let cat = catalog();
    let mut worst = f64::INFINITY;
    for trial in 0..500u64 {
        let (src, tgt, r) = &pairs[trial as usize % pairs.len()];
        let f = cat[trial as usize % cat.len()].clone();
        let seed = derive_seed(4, "acc4", trial);
        let map = random_cpu(src, tgt, *r, seed).unwrap();
        let rho = random_faithful_state(tgt, seed ^ 0xBEEF);
        let ind = induced_contraction(&map, &rho).unwrap();
        // the rank-one part transforms exactly, so monotonicity holds for
        // any α; alternate between α = β and α ≠ β
        let spec = if trial % 2 == 0 {
            CovarianceSpec::reduced(f.clone()).unwrap()
        } else {
            CovarianceSpec::new(f.clone(), 1.5).unwrap()
        };
        let slack = ind.covariance_monotonicity_slack(&spec).unwrap();
        assert!(slack >= -1e-8, "trial {trial} ({}): slack {slack}", f.name());
        worst = worst.min(slack);
    }
    println!("ACCEPTANCE 04 covariance monotonicity: PASS (500 trials, smallest slack {worst:.2e})");
}

#[test]
fn criterion_05_split_mono_invariance() {
    let cases: Vec<(AlgebraShape, Vec<(u64, u64)>)> = vec![
        (shape(&[1, 1]), vec![(1, 3), (2, 3)]),
        (shape(&[1, 1, 1]), vec![(1, 2), (1, 4), (1, 4)]),
    ];
    let mut worst: f64 = 0.0;
    for (sh, weights) in &cases {
        let sm = rational_trace_split_mono(sh, weights).unwrap();
        let tau_big = covfield::states::tracial_state(&sm.big_shape);
        let ind = induced_contraction(&sm.phi, &tau_big).unwrap();
        for f in catalog() {
            for alpha in [f.f_one(), 1.9] {
                let spec = CovarianceSpec::new(f.clone(), alpha).unwrap();
                let defect = ind.covariance_invariance_defect(&spec).unwrap();
                assert!(defect < 1e-9, "{}: defect {defect}", f.name());
                worst = worst.max(defect);
            }
        }
    }
    println!("ACCEPTANCE 05 split-mono invariance: PASS (weights 1/3,2/3 and 1/2,1/4,1/4; worst defect {worst:.2e})");
}

#[test]
fn criterion_06_kadison_inequality() {
    let pairs = shape_pairs();
    let mut worst = f64::INFINITY;
    for (pair_idx, (src, tgt, r)) in pairs.iter().enumerate() {
        let map_seed = derive_seed(6, "acc6-map", pair_idx as u64);
        let map = random_cpu(src, tgt, *r, map_seed).unwrap();
        assert!(covfield::channels::verify_cpu(&map).unwrap().passes);
        let mut rng = ChaCha8Rng::seed_from_u64(map_seed ^ 0xAA);
        for trial in 0..500 {
            let b = random_hermitian_general(src, &mut rng);
            let lhs = map.apply(&b.adjoint().try_mul(&b).unwrap()).unwrap();
            let rhs = map.apply(&b).unwrap();
            let gap = lhs.try_sub(&rhs.adjoint().try_mul(&rhs).unwrap()).unwrap();
            let min = hermitian_eigen(&gap.embed()).min_value();
            assert!(min >= -1e-9, "pair {pair_idx} trial {trial}: {min}");
            worst = worst.min(min);
        }
    }
    println!("ACCEPTANCE 06 Kadison inequality: PASS (500 trials x 4 maps, smallest gap {worst:.2e})");
}

// not self-adjoint in general: Kadison needs arbitrary elements
fn random_hermitian_general(shape: &AlgebraShape, rng: &mut ChaCha8Rng) -> AlgebraElement {
    let blocks: Vec<CMat> = shape
        .block_dims()
        .iter()
        .map(|&n| {
            CMat::from_fn(n, n, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
        })
        .collect();
    let e = AlgebraElement::from_blocks(shape.clone(), blocks).unwrap();
    let norm = e.operator_norm().max(f64::MIN_POSITIVE);
    e.scale(cr(1.0 / norm))
}

#[test]
fn criterion_07_loewner_certification() {
    for f in catalog() {
        for seed in 0..50u64 {
            let grid = random_log_grid(derive_seed(7, "acc7", seed), 12);
            let (ok, min) = f.loewner_test(&grid).unwrap();
            assert!(ok, "{} failed on grid seed {seed}: min {min}", f.name());
        }
    }
    let square = MonotoneFunction::from_expr("square", "t^2").unwrap();
    let mut worst = f64::INFINITY;
    for seed in 0..50u64 {
        let grid = random_log_grid(derive_seed(7, "acc7", seed), 12);
        let (ok, min) = square.loewner_test(&grid).unwrap();
        assert!(!ok, "t^2 passed on grid seed {seed}");
        worst = worst.min(min);
    }
    assert!(worst < -1e-3, "t^2 min eigenvalue {worst}");
    println!("ACCEPTANCE 07 Löwner certification: PASS (catalog x 50 grids pass; t² fails with min {worst:.2e})");
}

#[test]
fn criterion_08_fisher_rao_reduction() {
    let shapes = [shape(&[1, 1]), shape(&[1, 1, 1]), shape(&[1, 1, 1, 1])];
    let f = by_name("bures").unwrap();
    let spec = CovarianceSpec::reduced(f).unwrap();
    let mut worst: f64 = 0.0;
    for trial in 0..200u64 {
        let sh = &shapes[trial as usize % shapes.len()];
        let k = sh.total_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(8, "acc8", trial));
        // random interior probability vector, bounded away from the boundary
        let mut p: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = p.iter().sum();
        for x in &mut p {
            *x /= total;
        }
        let mut density = AlgebraElement::zero(sh);
        for (i, &pi) in p.iter().enumerate() {
            density.block_mut(i)[(0, 0)] = cr(pi * k as f64);
        }
        let state = state_from_density(density).unwrap();
        let mut z: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = z.iter().sum::<f64>() / k as f64;
        for x in &mut z {
            *x -= mean;
        }
        let mut dir = AlgebraElement::zero(sh);
        for (i, &zi) in z.iter().enumerate() {
            dir.block_mut(i)[(0, 0)] = cr(zi);
        }
        let zeta = TangentVector::from_ordinary(&state, dir).unwrap();
        let got = metric_inner(&state, &spec, &zeta, &zeta).unwrap();
        let want = fisher_rao_commutative(&p, &z);
        let rel = (got - want).abs() / want.abs().max(1e-12);
        assert!(rel < 1e-9, "trial {trial}: {got} vs {want}");
        worst = worst.max(rel);
    }
    println!("ACCEPTANCE 08 Fisher–Rao reduction: PASS (200 commutative cases, worst rel {worst:.2e})");
}

#[test]
fn criterion_09_mcp_reduction() {
    let mut worst: f64 = 0.0;
    for trial in 0..200u64 {
        let sh = if trial % 2 == 0 { shape(&[2]) } else { shape(&[3]) };
        let seed = derive_seed(9, "acc9", trial);
        let state = random_faithful_state(&sh, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x99);
        let dir = random_traceless_hermitian(&sh, &mut rng).scale(cr(
            1.0 / (sh.total_dim() as f64),
        ));
        let zeta = TangentVector::from_trace_representative(&state, dir.scale(cr(sh.total_dim() as f64))).unwrap();
        for f in catalog() {
            let spec = CovarianceSpec::reduced(f.clone()).unwrap();
            let got = metric_inner(&state, &spec, &zeta, &zeta).unwrap();
            let want = metric_spectral_oracle(&state, &f, &zeta).unwrap();
            let rel = (got - want).abs() / want.abs().max(1e-12);
            assert!(rel < 1e-9, "trial {trial} {}: {got} vs {want}", f.name());
            worst = worst.max(rel);
        }
    }
    // pinned reference point: bures, ordinary (3/4, 1/4), direction e12+e21
    let s = qubit_ordinary(0.75, 0.25);
    let mut dir = AlgebraElement::zero(s.shape());
    dir.block_mut(0)[(0, 1)] = cr(1.0);
    dir.block_mut(0)[(1, 0)] = cr(1.0);
    let zeta = TangentVector::from_ordinary(&s, dir).unwrap();
    let spec = CovarianceSpec::reduced(by_name("bures").unwrap()).unwrap();
    let got = metric_inner(&s, &spec, &zeta, &zeta).unwrap();
    assert!((got - 4.0).abs() < 1e-9, "bures qubit value {got}");
    println!("ACCEPTANCE 09 monotone-metric reduction: PASS (200 cases x 5 functions, worst rel {worst:.2e}; bures reference = {got})");
}

#[test]
fn criterion_10_concavity() {
    let shapes = [shape(&[2]), shape(&[3]), shape(&[1, 2])];
    let cat = catalog();
    let mut worst: f64 = 0.0;
    for trial in 0..300u64 {
        let sh = &shapes[trial as usize % shapes.len()];
        let f = cat[trial as usize % cat.len()].clone();
        let spec = CovarianceSpec::reduced(f).unwrap();
        let seed = derive_seed(10, "acc10", trial);
        let rho = random_faithful_state(sh, seed);
        let sigma = random_faithful_state(sh, seed ^ 0x1357);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2468);
        let lam = rng.random_range(0.1..0.9);
        let a = random_hermitian(sh, &mut rng);
        let mixed = mix(lam, &rho, &sigma).unwrap();
        let value = |state: &State| {
            let g = gns_space(state);
            let xi = g.vector(&a).unwrap();
            covfield::covariance::covariance_form(&g, &spec, &xi, &xi).unwrap().re
        };
        let violation = lam * value(&rho) + (1.0 - lam) * value(&sigma) - value(&mixed);
        assert!(violation <= 1e-8, "trial {trial}: violation {violation}");
        worst = worst.max(violation);
    }
    println!("ACCEPTANCE 10 concavity: PASS (300 trials, worst violation {worst:.2e})");
}

#[test]
fn criterion_11_continuity_and_radial() {
    let s = pure_state(&shape(&[2]), 0).unwrap();
    let f = by_name("bures").unwrap();
    let probe = continuity_probe(&s, &f, 40, 1_000_000).unwrap();
    let mut worst_unproj: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    for row in &probe.rows {
        worst_unproj = worst_unproj.max((row.unprojected - 0.5).abs());
        worst_w = worst_w.max((row.w_norm - row.n as f64).abs() / (1e-6 * row.n as f64));
        assert!(
            (row.unprojected - 0.5).abs() <= 1e-9,
            "n = {}: unprojected column {}",
            row.n,
            row.unprojected
        );
        assert!(
            (row.w_norm - row.n as f64).abs() <= 1e-6 * row.n as f64,
            "n = {}: |W| = {}",
            row.n,
            row.w_norm
        );
    }
    let last = probe.rows.last().unwrap();
    assert_eq!(last.n, 1_000_000);
    assert!(last.projected.abs() < 1e-6, "projected final {}", last.projected);
    assert!(
        last.restricted_delta_diff < 1e-6,
        "restricted difference {}",
        last.restricted_delta_diff
    );
    println!(
        "ACCEPTANCE 11 continuity/radial behavior: PASS (unprojected ≤ {worst_unproj:.2e} from 1/2; projected final {:.2e}; restricted gap {:.2e})",
        last.projected, last.restricted_delta_diff
    );
}

#[test]
fn criterion_12_direct_sum_modular_law() {
    let shapes = [shape(&[2]), shape(&[1, 2])];
    let mut worst: f64 = 0.0;
    for trial in 0..50u64 {
        let sh = &shapes[trial as usize % shapes.len()];
        let seed = derive_seed(12, "acc12", trial);
        let a = random_faithful_state(sh, seed);
        let b = random_faithful_state(sh, seed ^ 0x7777);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x8888);
        let lam = rng.random_range(0.05..0.95);
        let w = direct_sum_state(lam, &a, &b).unwrap();
        let md_w = modular_operator(&w).unwrap();
        let md_a = modular_operator(&a).unwrap();
        let md_b = modular_operator(&b).unwrap();
        let (na, nb) = (md_a.rho_space.dim(), md_b.rho_space.dim());
        let mut block = CMat::zeros(na + nb, na + nb);
        block.view_mut((0, 0), (na, na)).copy_from(&md_a.delta.matrix);
        block.view_mut((na, na), (nb, nb)).copy_from(&md_b.delta.matrix);
        let dev = covfield::linalg::operator_norm(&(&md_w.delta.matrix - &block));
        assert!(dev < 1e-10, "trial {trial}: deviation {dev}");
        worst = worst.max(dev);
    }
    println!("ACCEPTANCE 12 direct-sum modular law: PASS (50 trials, worst deviation {worst:.2e})");
}

#[test]
fn criterion_13_determinism() {
    // the genuine default configuration, timestamps suppressed
    let config = SuiteConfig { seed: 42, no_timestamp: true, ..SuiteConfig::default() };
    let r1 = run_suite(&config).unwrap();
    let r2 = run_suite(&config).unwrap();
    let b1 = r1.to_json_bytes().unwrap();
    let b2 = r2.to_json_bytes().unwrap();
    assert_eq!(b1, b2, "reports differ between runs");
    assert!(r1.passed(), "suite failed: {:#?}", r1.properties.iter().filter(|p| !p.pass).collect::<Vec<_>>());
    println!("ACCEPTANCE 13 determinism: PASS (seed 42 twice, byte-identical {}-byte reports)", b1.len());
}
