use etaflow_core::clifford::CliffordRep;
use etaflow_core::dirac::{family_spectrum_character, FamilyHandle, SpectralData};
use etaflow_core::eta::{smoothed_eta, spectral_flow, FlowControl, HermitianFamily, SyntheticFamily};
use etaflow_core::linalg::{self, CMat, C64};
use etaflow_core::toeplitz::{fredholm_index, ToeplitzProblem};
use etaflow_core::torus::{TorusSpec, UnitaryMap};
use proptest::prelude::*;

fn random_unitary(entries: &[f64]) -> CMat {
    let n = (entries.len() / 2).isqrt();
    let a = CMat::from_fn(n, n, |i, j| C64::new(entries[2 * (i * n + j)], entries[2 * (i * n + j) + 1]));
    let (_, vecs) = linalg::eigh(&(&a + a.adjoint())).unwrap();
    vecs
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

fn flow(family: &dyn HermitianFamily, a: f64, b: f64) -> i64 {
    spectral_flow(family, &grid(a, b, 24), &FlowControl::default()).unwrap().value
}

fn twist() -> impl Strategy<Value = f64> {
    (0usize..20).prop_map(|i| i as f64 / 20.0)
}

fn spin() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.5)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn clifford_multiplication_squares_to_minus_norm(dim in 1usize..=3, v in prop::collection::vec(-3.0f64..3.0, 3)) {
        let rep = CliffordRep::build(dim).unwrap();
        let v = &v[..dim];
        let c = rep.mult_real(v).unwrap();
        let n = rep.size();
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        prop_assert!((&c * &c + CMat::identity(n, n) * C64::new(norm2, 0.0)).norm() < 1e-13);
        prop_assert!((&c + c.adjoint()).norm() < 1e-15);
        if let Some(g) = rep.chirality() {
            prop_assert!((g * &c + &c * g).norm() < 1e-15);
        }
    }

    #[test]
    fn smoothed_eta_is_odd(values in prop::collection::vec(-40.0f64..40.0, 1..60), tau in 1e-4f64..1e-1) {
        let sd = SpectralData::new(values, 0, "test", 1e-9);
        let a = smoothed_eta(&sd, tau);
        let b = smoothed_eta(&sd.negated(), tau);
        prop_assert!((a + b).abs() < 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn symmetric_spectra_have_zero_smoothed_eta(values in prop::collection::vec(0.01f64..40.0, 1..60), tau in 1e-4f64..1e-1) {
        let mut all = values.clone();
        all.extend(values.iter().map(|v| -v));
        let sd = SpectralData::new(all, 0, "test", 1e-9);
        prop_assert_eq!(smoothed_eta(&sd, tau), 0.0);
    }

    #[test]
    fn spectral_flow_is_additive_and_antisymmetric(seed in 0u64..10_000, size in 2usize..6, split in 0.2f64..0.8) {
        let fam = SyntheticFamily::random(seed, size, size / 2 + 1);
        // keep the split away from the prescribed crossings
        prop_assume!(fam.crossings.iter().all(|(_, x)| (x - split).abs() > 0.02));
        let whole = flow(&fam, 0.0, 1.0);
        prop_assert_eq!(whole, fam.expected_flow());
        prop_assert_eq!(flow(&fam, 0.0, split) + flow(&fam, split, 1.0), whole);
        let reversed = |s: f64| Ok(fam.at(1.0 - s));
        prop_assert_eq!(flow(&reversed, 0.0, 1.0), -whole);
    }

    #[test]
    fn winding_adds_under_products(a in prop::collection::vec(-3i64..=3, 2), b in prop::collection::vec(-3i64..=3, 2), phase in 0.0f64..std::f64::consts::TAU) {
        let g = UnitaryMap::diagonal(2, &[(a.clone(), C64::from_polar(1.0, phase))]).unwrap();
        let h = UnitaryMap::character(b.clone());
        let w = g.product(&h).unwrap().winding(16).unwrap();
        prop_assert_eq!(w.degrees, vec![a[0] + b[0], a[1] + b[1]]);
    }

    #[test]
    fn maurer_cartan_ignores_constant_left_factors(
        m1 in prop::collection::vec(-2i64..=2, 2),
        m2 in prop::collection::vec(-2i64..=2, 2),
        entries in prop::collection::vec(-1.0f64..1.0, 8),
        x in prop::collection::vec(0.0f64..1.0, 2),
    ) {
        let g = UnitaryMap::diagonal(2, &[(m1, C64::new(1.0, 0.0)), (m2, C64::new(0.0, 1.0))]).unwrap();
        let u = UnitaryMap::constant(2, random_unitary(&entries));
        let ug = u.product(&g).unwrap();
        let a = g.maurer_cartan(12, 1e-10).unwrap();
        let b = ug.maurer_cartan(12, 1e-10).unwrap();
        for j in 0..2 {
            prop_assert!((a.eval(j, &x) - b.eval(j, &x)).norm() < 1e-12);
        }
    }

    #[test]
    fn symmetric_character_spectra(
        e in prop::collection::vec(spin(), 2),
        th in prop::collection::vec(twist(), 2),
        m in prop::collection::vec(-2i64..=2, 2),
        s in 0.0f64..1.0,
    ) {
        let h = FamilyHandle::exact(TorusSpec::new(e, th).unwrap(), UnitaryMap::character(m)).unwrap();
        let sd = family_spectrum_character(&h, s, 4).unwrap();
        prop_assert!(sd.asymmetry() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn toeplitz_index_is_additive_and_conjugation_invariant(
        k1 in -3i64..=3,
        k2 in -3i64..=3,
        entries in prop::collection::vec(-1.0f64..1.0, 8),
        theta in twist(),
    ) {
        let g = UnitaryMap::diagonal(1, &[(vec![k1], C64::new(1.0, 0.0)), (vec![k2], C64::new(1.0, 0.0))]).unwrap();
        let u = random_unitary(&entries);
        let conj = g.conjugated(&u);
        let index = |map: UnitaryMap| fredholm_index(&ToeplitzProblem::new(theta, map, 20).unwrap()).unwrap().index;
        prop_assert_eq!(index(conj.clone()), -(k1 + k2));
        prop_assert_eq!(index(conj.product(&conj).unwrap()), -2 * (k1 + k2));
    }
}
