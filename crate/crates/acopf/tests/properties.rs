use gridrisk_acopf::{acopf_violations, gen_augmented, gen_realistic, Physics, FACTOR_RANGE};
use gridrisk_core::grid::bundled_case;
use gridrisk_core::synth::ScalingMode;
use gridrisk_core::SimRng;
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = ScalingMode> {
    prop_oneof![Just(ScalingMode::Naive), Just(ScalingMode::Grouped), Just(ScalingMode::BruteForce)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn augmented_factors_in_range_and_shared(seed in any::<u64>(), mode in mode(), n in 1usize..40) {
        let case = bundled_case("case30").unwrap();
        let base = (case.loads.iter().map(|l| l.pd).collect::<Vec<_>>(), case.loads.iter().map(|l| l.qd).collect::<Vec<_>>());
        let samples = gen_augmented(&case, &base, mode, n, seed).unwrap();
        prop_assert_eq!(samples.len(), n);
        for s in &samples {
            let f: Vec<f64> = s.pd.iter().zip(&base.0).map(|(v, b)| v / b).collect();
            for (j, c) in f.iter().enumerate() {
                prop_assert!(*c >= FACTOR_RANGE.0 - 1e-12 && *c <= FACTOR_RANGE.1 + 1e-12);
                if base.1[j] > 0.0 {
                    prop_assert!((s.qd[j] / base.1[j] - c).abs() < 1e-12);
                }
                for k in 0..j {
                    let tied = match mode {
                        ScalingMode::Naive => true,
                        ScalingMode::Grouped => case.loads[j].group == case.loads[k].group,
                        ScalingMode::BruteForce => false,
                    };
                    if tied {
                        prop_assert!((f[k] - c).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn realistic_groups_move_together(seed in any::<u64>()) {
        let case = bundled_case("case30").unwrap();
        for s in gen_realistic(&case, 12, seed).unwrap() {
            for g in case.load_groups() {
                let ratios: Vec<f64> = case.loads.iter().zip(&s.pd).filter(|(l, _)| l.group == g).map(|(l, v)| v / l.pd).collect();
                prop_assert!(ratios.iter().all(|r| (r - ratios[0]).abs() <= 1e-12 * ratios[0]));
            }
        }
    }

    #[test]
    fn overall_violation_between_parts(seed in any::<u64>(), scale in 0.0f64..0.3) {
        let case = bundled_case("case14").unwrap();
        let physics = Physics::new(&case).unwrap();
        let mut d = physics.reference_decision(&case).unwrap();
        let mut rng = SimRng::new(seed);
        for v in d.vm.iter_mut().chain(&mut d.va).chain(&mut d.pg).chain(&mut d.qg) {
            *v += scale * rng.normal();
        }
        let r = acopf_violations(&case, &d).unwrap();
        prop_assert!(r.equality_mean >= 0.0 && r.inequality_mean >= 0.0);
        let (lo, hi) = (r.equality_mean.min(r.inequality_mean), r.equality_mean.max(r.inequality_mean));
        prop_assert!(r.overall_mean >= lo - 1e-15 && r.overall_mean <= hi + 1e-15);
    }
}
