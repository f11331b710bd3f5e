//! Closed-form results against independent oracles at full sample sizes.

use noflip::acceptance::{negative_instance, positive_instance};
use noflip::oracle::family_membership_lp;
use noflip::qcore::{random, Axis};
use noflip::theorem::{membership, PhaseFamily};
use noflip::unot::{optimize_universal_not, score, IntegrationRule, OptimizerConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn membership_agrees_with_lp_on_1000_each_way_per_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for axis in Axis::ALL {
        let family = PhaseFamily::for_axis(axis);
        for k in 0..2000 {
            let positive = k < 1000;
            let chi = if positive {
                positive_instance(&mut rng, &family).unwrap()
            } else {
                negative_instance(&mut rng, &family).unwrap()
            };
            let report = membership(&chi, &family);
            assert_eq!(report.member, positive, "{axis:?} instance {k}");
            assert!(report.verify(&chi, &family), "{axis:?} instance {k}");
            let lp = family_membership_lp(&chi, &family).unwrap();
            assert_eq!(lp.feasible, positive, "{axis:?} instance {k}: LP residual {}", lp.residual);
        }
    }
}

#[test]
fn optimum_beats_10k_random_channels_and_is_covariant() {
    let opt = optimize_universal_not(&OptimizerConfig::default()).unwrap();
    let rule = IntegrationRule::fibonacci(2000);
    let best = score(&opt.channel, &rule).worst;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..10_000 {
        let kraus = 1 + k % 4;
        let ch = random::channel(&mut rng, kraus);
        assert!(score(&ch, &rule).worst <= best + 1e-12, "channel {k}");
    }
    let values: Vec<f64> = (0..1000)
        .map(|_| noflip::unot::flip_fidelity(&opt.channel, &random::ket(&mut rng, 2)).unwrap())
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    assert!(var < 1e-6, "variance {var}");
    assert!(1.0 - opt.score.worst >= 0.3);
    assert!(opt.trace.iter().all(|r| r.min_eigenvalue >= -1e-10 && r.tp_residual <= 1e-10));
}
