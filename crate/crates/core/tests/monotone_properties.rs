use proptest::prelude::*;
use qrt_core::distillation::eigenvalue_bound;
use qrt_core::free_sets::FreeSetSpec;
use qrt_core::monotones::{projective_robustness, rmax, sandwich_bounds, ExtReal};
use qrt_core::random::{self, SeededRng};
use qrt_core::HermitianOperator;

const CASES: u32 = 20;

/// One free set per theory; dimensions vary with the seed.
fn theories(rng: &mut SeededRng, seed: u64) -> Vec<FreeSetSpec> {
    let d = 2 + (seed % 3) as usize;
    let sigma0 = random::noisy_state(rng, 3, 0.2);
    vec![
        FreeSetSpec::incoherent(d),
        FreeSetSpec::ppt(&[2, 2]).unwrap(),
        FreeSetSpec::real(d),
        FreeSetSpec::single_state(&sigma0),
        FreeSetSpec::qubit_cube(),
    ]
}

/// Full-rank state at cone distance > 1e-3 from F, drawn by rejection.
fn resourceful(rng: &mut SeededRng, f: &FreeSetSpec) -> HermitianOperator {
    let d = f.dim();
    loop {
        let pure = random::pure_state(rng, d).into_op();
        let noise = random::mixed_state(rng, d).into_op();
        let rho = &pure.scale(0.75) + &noise.scale(0.25);
        if f.cone_violation(&rho).unwrap() > 1e-3 {
            return rho;
        }
    }
}

fn omega(rho: &HermitianOperator, f: &FreeSetSpec) -> ExtReal {
    projective_robustness(rho, f).unwrap().value
}

fn finite(x: ExtReal) -> f64 {
    x.finite().expect("finite value")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn faithful_on_free_and_resourceful_states(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        for f in theories(&mut rng, seed) {
            let sigma = random::free_state(&mut rng, &f).unwrap().into_op();
            let w = finite(omega(&sigma, &f));
            prop_assert!((1.0 - 1e-9..=1.0 + 1e-6).contains(&w), "{}: free state has {w}", f.name());
            let rho = resourceful(&mut rng, &f);
            let w = omega(&rho, &f);
            prop_assert!(w.to_f64() > 1.0 + 1e-6, "{}: resourceful state has {w}", f.name());
        }
    }

    #[test]
    fn scaling_invariance(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        for f in theories(&mut rng, seed) {
            let rho = resourceful(&mut rng, &f);
            let w = finite(omega(&rho, &f));
            for l in [0.5, 3.0] {
                let ws = finite(omega(&rho.scale(l), &f));
                prop_assert!((ws - w).abs() <= 1e-8 * w, "{}: {w} vs {ws} at scale {l}", f.name());
            }
        }
    }

    #[test]
    fn quasiconvexity(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        for f in theories(&mut rng, seed) {
            let rho = resourceful(&mut rng, &f);
            let om = resourceful(&mut rng, &f);
            let cap = finite(omega(&rho, &f)).max(finite(omega(&om, &f)));
            for t in [0.25, 0.5, 0.75] {
                let mix = &rho.scale(t) + &om.scale(1.0 - t);
                let w = finite(omega(&mix, &f));
                prop_assert!(w <= cap * (1.0 + 1e-6), "{}: mixture {w} above {cap}", f.name());
            }
        }
    }

    #[test]
    fn sandwich_chain_is_ordered(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        for f in theories(&mut rng, seed) {
            for rho in [resourceful(&mut rng, &f), random::free_state(&mut rng, &f).unwrap().into_op()] {
                let r = sandwich_bounds(&rho, &f).unwrap();
                prop_assert!(r.is_ordered(1e-6), "{}: {r:?}", f.name());
            }
        }
    }

    #[test]
    fn largest_rmax_into_a_state_is_its_inverse_min_eigenvalue(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let d = 2 + (seed % 3) as usize;
        let rho = random::noisy_state(&mut rng, d, 0.1).into_op();
        let eig = rho.eigh();
        let lmin = eig.values[0];
        let v: Vec<_> = eig.vectors.column(0).iter().copied().collect();
        let at_min = finite(rmax(&HermitianOperator::outer(&v), &rho).unwrap());
        prop_assert!((at_min * lmin - 1.0).abs() <= 1e-9, "{at_min} vs {}", 1.0 / lmin);
        let mut best = 0.0f64;
        for _ in 0..500 {
            let w = random::pure_state(&mut rng, d).into_op();
            best = best.max(finite(rmax(&w, &rho).unwrap()));
        }
        prop_assert!(best <= (1.0 + 1e-9) / lmin && best > 0.0);
    }

    #[test]
    fn omega_bound_dominates_eigenvalue_bound(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        for f in theories(&mut rng, seed) {
            let rho = resourceful(&mut rng, &f);
            let phi = random::pure_state(&mut rng, f.dim()).into_op();
            let c = eigenvalue_bound(&rho, &f, &phi, &f).unwrap();
            prop_assert!(c.omega_bound >= c.intermediate - 1e-7 && c.intermediate >= c.eigenvalue_bound - 1e-7, "{c:?}");
            if c.eigenvalue_bound > 1e-9 {
                prop_assert!(c.omega_bound > c.eigenvalue_bound, "{}: not strict {c:?}", f.name());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn submultiplicative_on_tensor_products(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        for f in [FreeSetSpec::ppt(&[2, 2]).unwrap(), FreeSetSpec::incoherent(2)] {
            let ff = if f.name() == "ppt" {
                FreeSetSpec::ppt_copies(2, 2, 2).unwrap()
            } else {
                f.tensor(&f).unwrap()
            };
            let rho = resourceful(&mut rng, &f);
            let om = resourceful(&mut rng, &f);
            let joint = finite(omega(&rho.tensor(&om), &ff));
            let product = finite(omega(&rho, &f)) * finite(omega(&om, &f));
            prop_assert!(joint <= product * (1.0 + 1e-6), "{}: {joint} > {product}", f.name());
        }
    }
}
