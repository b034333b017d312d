//! Seeded sampling of states, free states, effects and unitaries.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::free_sets::{FreeSetSpec, Theory};
use crate::operator::{c, CMat, HermitianOperator, QuantumState};

/// Deterministic generator used across the crate.
pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ginibre(rng: &mut SeededRng, rows: usize, cols: usize, real: bool) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if real { 0.0 } else { rng.sample(StandardNormal) };
        c(re, im)
    })
}

fn normalized(g: CMat) -> QuantumState {
    let m = &g * g.adjoint();
    let op = HermitianOperator::new(m).expect("square");
    let t = op.trace();
    QuantumState::new(op.scale(1.0 / t)).expect("Gram matrix is a state")
}

/// Haar-random unitary: Q from the QR decomposition of a Ginibre matrix, with the
/// phases of diag(R) folded into the columns.
pub fn unitary(rng: &mut SeededRng, d: usize) -> CMat {
    let qr = ginibre(rng, d, d, false).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let z = r[(j, j)];
        if z.norm() > 0.0 {
            let ph = z / z.norm();
            q.column_mut(j).iter_mut().for_each(|x| *x *= ph);
        }
    }
    q
}

/// Haar-random pure state.
pub fn pure_state(rng: &mut SeededRng, d: usize) -> QuantumState {
    normalized(ginibre(rng, d, 1, false))
}

/// Random mixed state of full rank (Hilbert–Schmidt measure).
pub fn mixed_state(rng: &mut SeededRng, d: usize) -> QuantumState {
    normalized(ginibre(rng, d, d, false))
}

/// Random full-rank state with a real density matrix.
pub fn real_state(rng: &mut SeededRng, d: usize) -> QuantumState {
    normalized(ginibre(rng, d, d, true))
}

/// Random product of local random pure states, one per factor of `dims`.
pub fn product_state(rng: &mut SeededRng, dims: &[usize]) -> HermitianOperator {
    let mut op = pure_state(rng, dims[0]).into_op();
    for &d in &dims[1..] {
        op = op.tensor(&pure_state(rng, d).into_op());
    }
    op
}

fn probability_vector(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| -libm::log(1.0 - rng.random::<f64>())).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Random free state of the given theory. PPT samples are separable mixtures of products.
pub fn free_state(rng: &mut SeededRng, f: &FreeSetSpec) -> Result<QuantumState> {
    let d = f.dim();
    let op = match f.theory() {
        Theory::Incoherent => HermitianOperator::diagonal(&probability_vector(rng, d)),
        Theory::Real => real_state(rng, d).into_op(),
        Theory::Ppt { bipartition, .. } => {
            let k = d + 1;
            let w = probability_vector(rng, k);
            let mut acc = HermitianOperator::zeros(d);
            for wi in w {
                acc = &acc + &product_state(rng, bipartition).scale(wi);
            }
            acc
        }
        Theory::SingleState(s) => s.clone(),
        Theory::Polytope(vs) => {
            let w = probability_vector(rng, vs.len());
            let mut acc = HermitianOperator::zeros(d);
            for (wi, v) in w.iter().zip(vs) {
                acc = &acc + &v.scale(*wi);
            }
            acc
        }
    };
    QuantumState::normalized(op)
}

/// Random two-outcome effect 0 ⪯ A ⪯ I with uniformly drawn eigenvalues.
pub fn effect(rng: &mut SeededRng, d: usize) -> HermitianOperator {
    let u = unitary(rng, d);
    let vals: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    HermitianOperator::diagonal(&vals).congruence(&u)
}

/// Random state mixed with white noise so that its smallest eigenvalue is at least `floor`/d.
pub fn noisy_state(rng: &mut SeededRng, d: usize, floor: f64) -> QuantumState {
    let s = mixed_state(rng, d).into_op();
    let id = HermitianOperator::identity(d).scale(1.0 / d as f64);
    QuantumState::normalized(&s.scale(1.0 - floor) + &id.scale(floor)).expect("mixture of states")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_valid_and_reproducible() {
        let mut a = rng(7);
        let mut b = rng(7);
        let u = unitary(&mut a, 3);
        let uu = &u * u.adjoint();
        assert!((uu - CMat::identity(3, 3)).norm() < 1e-10);
        assert_eq!(unitary(&mut b, 3), u);
        let s = mixed_state(&mut a, 4);
        assert!((s.trace() - 1.0).abs() < 1e-12 && s.op().min_eigenvalue() > 0.0);
        let e = effect(&mut a, 3);
        assert!(e.min_eigenvalue() >= -1e-12 && e.max_eigenvalue() <= 1.0 + 1e-12);
    }

    #[test]
    fn free_samples_are_free() {
        let mut r = rng(3);
        for f in [
            FreeSetSpec::incoherent(3),
            FreeSetSpec::real(3),
            FreeSetSpec::ppt(&[2, 2]).unwrap(),
            FreeSetSpec::qubit_cube(),
        ] {
            for _ in 0..5 {
                let s = free_state(&mut r, &f).unwrap();
                assert!(f.contains(s.op(), 1e-7).unwrap(), "{}", f.name());
            }
        }
    }
}
