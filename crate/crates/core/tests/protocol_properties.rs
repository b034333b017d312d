use proptest::prelude::*;
use qrt_core::distillation::{theta_at_target, Mode};
use qrt_core::free_sets::FreeSetSpec;
use qrt_core::monotones::projective_robustness;
use qrt_core::operator::pure_target_fidelity;
use qrt_core::protocols::{apply_map, build_conversion_map, build_distillation_map, verify_free, ConversionOutcome};
use qrt_core::random;
use qrt_core::states::{maximally_coherent, maximally_entangled};
use qrt_core::HermitianOperator;

fn setups() -> Vec<(FreeSetSpec, HermitianOperator, Mode)> {
    vec![
        (FreeSetSpec::ppt(&[2, 2]).unwrap(), maximally_entangled(2).into_op(), Mode::General),
        (FreeSetSpec::incoherent(3), maximally_coherent(3).into_op(), Mode::Affine),
    ]
}

fn omega(rho: &HermitianOperator, f: &FreeSetSpec) -> f64 {
    projective_robustness(rho, f).unwrap().value.to_f64()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn distillation_maps_are_free_and_reproduce_program_values(seed in any::<u64>(), p in 0.1f64..=1.0) {
        let mut rng = random::rng(seed);
        for (f, phi, mode) in setups() {
            let rho = random::noisy_state(&mut rng, f.dim(), 0.2).into_op();
            let sol = theta_at_target(&rho, &f, &phi, &f, p, mode).unwrap();
            let map = build_distillation_map(&sol.w, &sol.z, &phi, &f, &f, mode).unwrap();
            let cert = verify_free(&map, &f, &f).unwrap();
            prop_assert!(cert.passed && cert.max_violation <= 1e-7, "{cert:?}");
            prop_assert!(map.choi().min_eigenvalue() >= -1e-8);
            let (prob, out) = apply_map(&map, &rho).unwrap();
            let fid = pure_target_fidelity(out.unwrap().op(), &phi).unwrap();
            prop_assert!((prob - p).abs() <= 1e-6 && (fid - sol.value).abs() <= 1e-6, "{prob} {fid} vs {p} {}", sol.value);
        }
    }

    #[test]
    fn built_maps_never_increase_omega(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        for (f, phi, mode) in setups() {
            let rho = random::noisy_state(&mut rng, f.dim(), 0.3).into_op();
            let target = random::noisy_state(&mut rng, f.dim(), 0.6).into_op();
            let probe = random::noisy_state(&mut rng, f.dim(), 0.2).into_op();
            let sol = theta_at_target(&rho, &f, &phi, &f, 0.5, mode).unwrap();
            let mut maps = vec![build_distillation_map(&sol.w, &sol.z, &phi, &f, &f, mode).unwrap()];
            // the general construction needs Ω^F(target) ≤ Ω(ρ) and reports NoGo otherwise
            if let Ok(ConversionOutcome::Map { map, .. }) = build_conversion_map(&rho, &f, &target, &f, Mode::General) {
                maps.push(map);
            }
            for map in maps {
                prop_assert!(verify_free(&map, &f, &f).unwrap().passed);
                for x in [&rho, &probe] {
                    let (prob, out) = apply_map(&map, x).unwrap();
                    if let Some(out) = out.filter(|_| prob > 1e-6) {
                        let (wi, wo) = (omega(x, &f), omega(out.op(), &f));
                        prop_assert!(wo <= wi * (1.0 + 1e-6), "{}: {wo} > {wi}", f.name());
                    }
                }
            }
        }
    }
}
