use esm_core::duality::{is_integral_duality, DualityTransformation, TargetMap};
use esm_core::exact::{QMatrix, Rational, ZMatrix};
use esm_core::local_system::{
    commutant_basis, holonomy_sample, preserves_lattice, reps_equivalent, Equivalence, GroupPresentation,
    MonodromyRep,
};
use esm_core::quantization::{
    classify_cochain, cohomological_euler_characteristic, twisted_cohomology, Ring, TwistedCellComplex,
    TwistedCochain,
};
use esm_core::random;
use esm_core::symplectic::{is_symplectic, lattice_type, IntegralLattice, SymplecticSpace};
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn free_rep(images: Vec<QMatrix>, n: usize, lattice: Option<IntegralLattice>) -> MonodromyRep {
    let names = (0..images.len()).map(|i| format!("g{i}")).collect();
    MonodromyRep::new(GroupPresentation::free(names), SymplecticSpace::standard(n), images, lattice).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lattice_type_is_a_basis_invariant(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = SymplecticSpace::standard(n);
        let d = random::divisor_chain(&mut rng, n);
        let basis = random::normal_form_basis(&d);
        let expected: Vec<BigInt> = d.iter().map(|&x| BigInt::from(x)).collect();
        prop_assert_eq!(lattice_type(&basis, &sp).unwrap(), expected.clone());
        let u = random::unimodular(&mut rng, 2 * n, 12);
        prop_assert_eq!(lattice_type(&(&basis * &u), &sp).unwrap(), expected);
    }

    #[test]
    fn symplectic_matrices_form_a_group(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = SymplecticSpace::standard(n);
        let a = random::integer_symplectic(&mut rng, n, 6);
        let b = random::integer_symplectic(&mut rng, n, 6);
        prop_assert!(is_symplectic(&a, &sp).unwrap() && is_symplectic(&b, &sp).unwrap());
        prop_assert!(is_symplectic(&(&a * &b), &sp).unwrap());
        let fa = DualityTransformation::new(TargetMap::Identity, a, &sp).unwrap();
        let fb = DualityTransformation::new(TargetMap::Identity, b, &sp).unwrap();
        let lat = IntegralLattice::standard(&sp).unwrap();
        prop_assert!(is_integral_duality(&fa, &lat, &sp).unwrap());
        prop_assert!(is_integral_duality(&fa.compose(&fb, 1), &lat, &sp).unwrap());
    }

    #[test]
    fn two_by_two_symplectic_means_unit_determinant(entries in proptest::array::uniform4(-4i64..=4)) {
        let m = QMatrix::from_i64(&[&entries[..2], &entries[2..]]);
        let sp = SymplecticSpace::standard(1);
        prop_assert_eq!(is_symplectic(&m, &sp).unwrap(), m.det() == Rational::from_integer(BigInt::from(1)));
    }

    #[test]
    fn smith_divisors_survive_unimodular_changes(seed in any::<u64>(), rows in 1usize..5, cols in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = ZMatrix::from_fn(rows, cols, |_, _| BigInt::from(rng.gen_range(-6i64..=6)));
        let u = random::unimodular(&mut rng, rows, 10);
        let v = random::unimodular(&mut rng, cols, 10);
        prop_assert_eq!(a.smith().divisors, (&(&u * &a) * &v).smith().divisors);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transport_is_a_homomorphism_preserving_lattice_type(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = SymplecticSpace::standard(n);
        let d = random::divisor_chain(&mut rng, n);
        let b = random::normal_form_basis(&d).to_rational();
        let b_inv = b.inverse().unwrap();
        let images: Vec<QMatrix> =
            (0..2).map(|_| &(&b * &random::gram_preserving(&mut rng, &d, 4)) * &b_inv).collect();
        let lattice = IntegralLattice::new(random::normal_form_basis(&d), &sp).unwrap();
        let rep = free_rep(images, n, Some(lattice.clone()));
        prop_assert!(preserves_lattice(&rep, &lattice).unwrap());
        let expected = lattice.type_divisors().to_vec();
        for _ in 0..50 {
            let w1 = random::word(&mut rng, 2, 5);
            let w2 = random::word(&mut rng, 2, 5);
            let joined = rep.transport(&w1.concat(&w2)).unwrap();
            prop_assert_eq!(&joined, &(&rep.transport(&w1).unwrap() * &rep.transport(&w2).unwrap()));
            let moved = (&joined * &b).to_integer().unwrap();
            prop_assert_eq!(lattice_type(&moved, &sp).unwrap(), expected.clone());
        }
    }

    #[test]
    fn commutant_commutes_with_holonomy(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random::integer_symplectic(&mut rng, 1, 3);
        let images = vec![base.clone(), base.pow(2).unwrap()];
        let rep = free_rep(images, 1, None);
        let basis = commutant_basis(&rep);
        prop_assert!(!basis.is_empty());
        for h in holonomy_sample(&rep, 3, 10_000).unwrap() {
            for c in &basis {
                prop_assert_eq!(&(c * &h), &(&h * c));
            }
        }
    }

    #[test]
    fn conjugate_representations_are_equivalent(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let images = (0..2).map(|_| random::integer_symplectic(&mut rng, n, 3)).collect();
        let rep = free_rep(images, n, None);
        let s = random::integer_symplectic(&mut rng, n, 2);
        let other = rep.conjugated(&s).unwrap();
        let verdict = reps_equivalent(&rep, &other, 4, 1e-9).unwrap();
        prop_assert!(matches!(verdict, Equivalence::Equivalent(_)), "{:?}", verdict);
    }
}

fn unipotent_power(k: i64, negate: bool) -> QMatrix {
    let m = QMatrix::from_i64(&[&[1, k], &[0, 1]]);
    if negate { m.neg() } else { m }
}

fn binomial(p: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (p - i) / (i + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn euler_characteristic_is_weighted_by_fiber_dimension(
        powers in proptest::collection::vec((-2i64..=2, any::<bool>()), 1..=3),
        cubical in any::<bool>(),
    ) {
        let rhos: Vec<QMatrix> = powers.iter().map(|&(k, neg)| unipotent_power(k, neg)).collect();
        let complex = if cubical && rhos.len() <= 2 {
            TwistedCellComplex::cubical_torus(&vec![2; rhos.len()], &rhos).unwrap()
        } else {
            TwistedCellComplex::torus(&rhos).unwrap()
        };
        prop_assert_eq!(cohomological_euler_characteristic(&complex).unwrap(), 2 * complex.euler_characteristic());
    }

    #[test]
    fn trivial_coefficients_reproduce_betti_numbers(p in 1usize..=3, fiber in 1usize..=2) {
        let complex = TwistedCellComplex::torus(&vec![QMatrix::identity(fiber); p]).unwrap();
        for k in 0..=p {
            for ring in [Ring::Real, Ring::Integer] {
                let h = twisted_cohomology(&complex, k, ring).unwrap();
                prop_assert_eq!(h.rank, fiber * binomial(p, k));
                prop_assert!(h.torsion.is_empty());
            }
        }
    }

    #[test]
    fn verdict_ignores_coboundaries(seed in any::<u64>(), k in -2i64..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let complex = TwistedCellComplex::torus(&[unipotent_power(1, false), unipotent_power(k, false)]).unwrap();
        let z: Vec<f64> = (0..2).map(|_| f64::from(rng.gen_range(-3i32..=3)) + rng.gen_range(-0.4..0.4)).collect();
        let base = classify_cochain(&complex, &TwistedCochain { degree: 2, values: z.clone() }, 1e-6).unwrap();
        let delta = complex.coboundary(1).to_f64();
        let u: Vec<f64> = (0..delta.ncols()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let shifted: Vec<f64> =
            (0..2).map(|r| z[r] + (0..delta.ncols()).map(|c| delta[(r, c)] * u[c]).sum::<f64>()).collect();
        let moved = classify_cochain(&complex, &TwistedCochain { degree: 2, values: shifted }, 1e-6).unwrap();
        prop_assert_eq!(base.is_integral(), moved.is_integral());
    }
}
