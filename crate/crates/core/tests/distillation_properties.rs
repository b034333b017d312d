use proptest::prelude::*;
use qrt_core::distillation::{
    error_at_probability, error_lower_bound, fidelity_sandwich, probability_at_error_sandwich, solve_hp_eps,
    target_robustness, Mode,
};
use qrt_core::free_sets::{FreeSetSpec, Threshold};
use qrt_core::monotones::ExtReal;
use qrt_core::random;
use qrt_core::states::{isotropic, maximally_coherent, maximally_entangled};
use qrt_core::HermitianOperator;

/// Golden target with its theory and the construction mode used for it.
fn setups(seed: u64) -> Vec<(FreeSetSpec, HermitianOperator, Mode)> {
    let d = 2 + (seed % 2) as usize;
    vec![
        (FreeSetSpec::ppt(&[2, 2]).unwrap(), maximally_entangled(2).into_op(), Mode::General),
        (FreeSetSpec::incoherent(d), maximally_coherent(d).into_op(), Mode::Affine),
    ]
}

fn threshold(x: ExtReal) -> Threshold {
    match x {
        ExtReal::Finite(v) => Threshold::Finite(v),
        ExtReal::Infinite => Threshold::Infinite,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn probability_grows_with_allowed_error(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        for (f, phi, mode) in setups(seed) {
            let rho = random::noisy_state(&mut rng, f.dim(), 0.2).into_op();
            let t = threshold(target_robustness(&phi, &f, mode).unwrap());
            let mut last = 0.0;
            for eps in [0.02, 0.05, 0.1, 0.2, 0.35] {
                let v = solve_hp_eps(&rho, &f, eps, t, mode).unwrap().value;
                prop_assert!(v >= last - 1e-7, "{}: {v} after {last} at eps {eps}", f.name());
                last = v;
            }
        }
    }

    #[test]
    fn error_grows_with_required_probability(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        for (f, phi, mode) in setups(seed) {
            let rho = random::noisy_state(&mut rng, f.dim(), 0.2).into_op();
            let mut last = 0.0;
            for p in [0.05, 0.2, 0.4, 0.7, 1.0] {
                let e = error_at_probability(&rho, &f, &phi, &f, p, mode).unwrap();
                prop_assert!(e >= last - 1e-7, "{}: {e} after {last} at p {p}", f.name());
                last = e;
            }
        }
    }

    #[test]
    fn sandwiches_are_ordered(seed in any::<u64>(), p in 0.1f64..=1.0, eps in 0.02f64..0.4) {
        let mut rng = random::rng(seed);
        for (f, phi, mode) in setups(seed) {
            let rho = random::noisy_state(&mut rng, f.dim(), 0.2).into_op();
            let s = fidelity_sandwich(&rho, &f, &phi, &f, p, mode).unwrap();
            prop_assert!(s.is_ordered(1e-7), "{}: fidelity {} < {}", f.name(), s.upper, s.lower);
            let s = probability_at_error_sandwich(&rho, &f, &phi, &f, eps, mode).unwrap();
            prop_assert!(s.is_ordered(1e-7), "{}: probability {} < {}", f.name(), s.upper, s.lower);
        }
    }
}

#[test]
fn vanishing_probability_reaches_the_projective_bound() {
    let f = FreeSetSpec::ppt(&[2, 2]).unwrap();
    let phi = maximally_entangled(2).into_op();
    let mut rng = random::rng(11);
    let mut inputs: Vec<HermitianOperator> = (0..3).map(|_| random::noisy_state(&mut rng, 4, 0.2).into_op()).collect();
    inputs.push(isotropic(0.3, 2).unwrap().into_op());
    for rho in inputs {
        let bound = error_lower_bound(&rho, &f, &phi, &f).unwrap();
        let errs: Vec<f64> = [0.2, 0.1, 0.05, 0.01]
            .iter()
            .map(|&p| error_at_probability(&rho, &f, &phi, &f, p, Mode::General).unwrap())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-7, "{errs:?}");
        }
        assert!(errs.iter().all(|&e| e >= bound - 1e-6), "{errs:?} below {bound}");
        assert!(errs[3] - bound <= 5e-3, "{errs:?} vs {bound}");
    }
}
