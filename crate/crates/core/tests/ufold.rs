use esm_core::duality::{apply_duality, covariance_check, DualityTransformation, TargetMap};
use esm_core::exact::{int, rat, QMatrix};
use esm_core::local_system::is_trivializable;
use esm_core::quantization::{quantization_check, QuantizationVerdict, TwistedCellComplex};
use esm_core::symplectic::EsmParameters;
use esm_core::ufold::UFold;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rippled(shape: [usize; 4]) -> UFold {
    UFold { ripple: 0.1, ..UFold::with_shape(shape) }
}

/// Translations composed with `+-[[1, t], [0, 1]]`, which commute with the
/// parabolic monodromy.
fn random_dualities(seed: u64, count: usize) -> Vec<DualityTransformation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let shift = rng.gen_range(-1.5..1.5);
            let t = rat(rng.gen_range(-6..=6), rng.gen_range(1..=4));
            let mut lift = QMatrix::from_rows(vec![vec![int(1), t], vec![int(0), int(1)]]);
            if rng.gen_bool(0.5) {
                lift = lift.neg();
            }
            DualityTransformation::new(TargetMap::Translation(vec![shift]), lift, &UFold::space()).unwrap()
        })
        .collect()
}

#[test]
fn residual_norms_are_duality_covariant() {
    for shape in [[8; 4], [12, 8, 8, 8]] {
        let cfg = rippled(shape).configuration(EsmParameters::default()).unwrap();
        for f in random_dualities(7, 5) {
            let report = covariance_check(&f, &cfg, 1e-9).unwrap();
            assert!(report.passed, "{shape:?} {:?}: discrepancy {:e}", f.lift(), report.discrepancy);
            assert!(report.original.scalar.max > 1e-3 && report.original.em.max > 1e-3);
            assert!(report.einstein_discrepancy <= 1e-9);
        }
    }
}

#[test]
fn transformed_configuration_stays_polarized() {
    let cfg = rippled([8; 4]).configuration(EsmParameters::default()).unwrap();
    for f in random_dualities(11, 3) {
        let moved = apply_duality(&f, &cfg).unwrap();
        assert!(moved.polarization_violation().unwrap() <= 1e-10);
    }
}

#[test]
fn duality_action_composes() {
    let cfg = rippled([8; 4]).configuration(EsmParameters::default()).unwrap();
    let fs = random_dualities(3, 2);
    let two_steps = apply_duality(&fs[1], &apply_duality(&fs[0], &cfg).unwrap()).unwrap();
    let composite = apply_duality(&fs[1].compose(&fs[0], 1), &cfg).unwrap();
    let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap(two_steps.phi.values(), composite.phi.values()) <= 1e-14);
    assert!(gap(two_steps.v.data(), composite.v.data()) <= 1e-13);
    for y in [0.0, 0.3, 2.7] {
        assert!((two_steps.taming.eval(&[y]) - composite.taming.eval(&[y])).amax() <= 1e-12);
    }
}

#[test]
fn deck_transformation_returns_the_same_configuration() {
    let cfg = UFold::default().configuration(EsmParameters::default()).unwrap();
    let rho = UFold::monodromy_image();
    let deck = DualityTransformation::new(TargetMap::Translation(vec![1.0]), rho.clone(), &UFold::space()).unwrap();
    let moved = apply_duality(&deck, &cfg).unwrap();
    let rho_inv = rho.inverse().unwrap().to_f64();
    for node in 0..cfg.grid.len() {
        assert!((moved.phi.at(node)[0] - 1.0 - cfg.phi.at(node)[0]).abs() <= 1e-14);
        let back = moved.v.map_fiber(|_| rho_inv.clone());
        let gap = back.at(node).iter().zip(cfg.v.at(node)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap <= 1e-14);
    }
    for y in [0.1, 0.5, 0.9] {
        assert!((moved.taming.eval(&[y]) - cfg.taming.eval(&[y])).amax() <= 1e-12);
    }
    assert!(covariance_check(&deck, &cfg, 1e-9).unwrap().passed);
}

#[test]
fn unit_charge_is_quantized_and_half_charge_is_not() {
    let u = UFold::default();
    let target = u.target().unwrap();
    let grid = u.grid(&target).unwrap();
    let complex = TwistedCellComplex::for_grid(&grid, &target).unwrap();
    assert_eq!(complex.counts(), &[1, 2, 1]);
    let v = u.field_strength(&grid).unwrap();
    match quantization_check(&v, &grid, &complex, 1e-6).unwrap() {
        QuantizationVerdict::Integral { coefficients, residual } => {
            assert_eq!(coefficients.iter().map(|c| c.abs()).collect::<Vec<_>>(), vec![1]);
            assert!(residual <= 1e-12);
        }
        other => panic!("{other:?}"),
    }
    match quantization_check(&v.scale(0.5), &grid, &complex, 1e-6).unwrap() {
        QuantizationVerdict::NonIntegral { residual, .. } => assert!((residual - 0.5).abs() <= 1e-6),
        other => panic!("{other:?}"),
    }
}

#[test]
fn removing_the_monodromy_trivializes_the_structure() {
    let u = UFold::default();
    assert!(!is_trivializable(u.target().unwrap().monodromy()).is_trivial());
    let trivial = UFold::representation(QMatrix::identity(2)).unwrap();
    assert!(is_trivializable(&trivial).is_trivial());
}
