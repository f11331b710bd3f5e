use noflip::dynamics::{order_swap_residual, StateMap, Step, TimeOrderedExperiment};
use noflip::qcore::{partial_trace, random, tensor, trace_distance};
use noflip::taxonomy::{classify, Settings};
use noflip::unot::{flip_fidelity, ChoiMatrix};
use noflip::{Ket, Party, ProjectiveMeasurement};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariant_optimum_is_state_independent(theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU) {
        let ch = ChoiMatrix::bloch_scaling(-1.0 / 3.0).unwrap();
        let f = flip_fidelity(&ch, &Ket::from_angles(theta, phi)).unwrap();
        prop_assert!((f - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unitary_and_measurement_commute_across_parties(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random::density(&mut rng, 4, 2);
        let u = StateMap::unitary(random::unitary(&mut rng, 2)).unwrap();
        let m = ProjectiveMeasurement::along(random::direction(&mut rng)).unwrap();
        let a = TimeOrderedExperiment::new(rho.clone(), "a")
            .then(Step::new(Party::Alice, m.clone()))
            .then(Step::new(Party::Bob, u.clone()));
        let b = a.reversed("b");
        prop_assert!(order_swap_residual(&a, &b).unwrap() <= 1e-10);
    }

    #[test]
    fn partial_trace_inverts_tensor(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::density(&mut rng, 2, 1);
        let b = random::density(&mut rng, 2, 2);
        let ab = tensor(&a, &b).unwrap();
        prop_assert!(trace_distance(&partial_trace(&ab, Party::Alice).unwrap(), &a).unwrap() < 1e-12);
        prop_assert!(trace_distance(&partial_trace(&ab, Party::Bob).unwrap(), &b).unwrap() < 1e-12);
    }

    #[test]
    fn classification_level_is_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::density(&mut rng, 4, 1);
        let b = random::density(&mut rng, 4, 3);
        let s = Settings::pauli();
        prop_assert_eq!(classify(&a, &b, &s).unwrap().level, classify(&b, &a, &s).unwrap().level);
    }
}
