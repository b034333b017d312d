//! Simultaneous channel discrimination and exclusion: the instance built from the dual
//! optimizers of Ω_F and the Charnes–Cooper evaluation of the best free ratio.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::conic::{solve, ConicProblem, MatExpr, SolveOptions, Status};
use crate::error::{Error, Result};
use crate::free_sets::FreeSetSpec;
use crate::monotones::{projective_robustness, ExtReal};
use crate::operator::{CMat, HermitianOperator};
use crate::protocols::MeasurePrepareMap;
use crate::random::{self, SeededRng};

/// Shift added to both dual operators so that no overlap vanishes.
pub const DELTA: f64 = 1e-9;
/// Relative slack of the lower side of the advantage identity.
pub const RATIO_TOL: f64 = 1e-3;
/// Relative slack of the upper side.
pub const UPPER_TOL: f64 = 1e-6;

/// A channel in the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    Identity,
    Unitary(CMat),
    MeasurePrepare(MeasurePrepareMap),
}

impl Channel {
    /// Heisenberg-picture action N†(A).
    pub fn adjoint_apply(&self, a: &HermitianOperator) -> HermitianOperator {
        match self {
            Channel::Identity => a.clone(),
            Channel::Unitary(u) => a.congruence(&u.adjoint()),
            Channel::MeasurePrepare(m) => {
                let mut acc = HermitianOperator::zeros(m.input_dim());
                for (e, p) in m.terms() {
                    acc = &acc + &e.scale(p.inner(a));
                }
                acc
            }
        }
    }
}

/// Which POVM scores the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Discriminate,
    Exclude,
}

/// Channel ensemble {pᵢ, Nᵢ} with a discrimination POVM {Aᵢ} and an exclusion POVM {Bᵢ}.
#[derive(Debug, Clone)]
pub struct DiscriminationInstance {
    pub ensemble: Vec<(f64, Channel)>,
    pub discriminate: Vec<HermitianOperator>,
    pub exclude: Vec<HermitianOperator>,
}

fn povm_violation(ops: &[HermitianOperator], d: usize) -> f64 {
    let mut sum = HermitianOperator::zeros(d);
    let mut v = 0.0f64;
    for a in ops {
        v = v.max(-a.min_eigenvalue());
        sum = &sum + a;
    }
    v.max((&sum - &HermitianOperator::identity(d)).max_abs())
}

impl DiscriminationInstance {
    pub fn new(
        ensemble: Vec<(f64, Channel)>,
        discriminate: Vec<HermitianOperator>,
        exclude: Vec<HermitianOperator>,
    ) -> Result<Self> {
        let n = ensemble.len();
        if n == 0 || discriminate.len() != n || exclude.len() != n {
            return Err(Error::Config(format!(
                "{n} channels need POVMs with {n} outcomes, got {} and {}",
                discriminate.len(),
                exclude.len()
            )));
        }
        let total: f64 = ensemble.iter().map(|(p, _)| *p).sum();
        if ensemble.iter().any(|(p, _)| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("ensemble probabilities must be nonnegative and sum to one".into()));
        }
        let d = discriminate[0].dim();
        for povm in [&discriminate, &exclude] {
            let v = povm_violation(povm, d);
            if v > 1e-9 {
                return Err(Error::Domain(format!("POVM violates positivity or completeness by {v:e}")));
            }
        }
        Ok(Self {
            ensemble,
            discriminate,
            exclude,
        })
    }

    pub fn dim(&self) -> usize {
        self.discriminate[0].dim()
    }

    /// Σᵢ pᵢ Nᵢ†(Aᵢ), so that p_succ(ρ) = ⟨·, ρ⟩.
    pub fn effective(&self, task: Task) -> HermitianOperator {
        let povm = match task {
            Task::Discriminate => &self.discriminate,
            Task::Exclude => &self.exclude,
        };
        let mut acc = HermitianOperator::zeros(self.dim());
        for ((p, ch), a) in self.ensemble.iter().zip(povm) {
            acc = &acc + &ch.adjoint_apply(a).scale(*p);
        }
        acc
    }

    /// The binary identity-channel task with POVMs {A, I − A} and {B, I − B}.
    pub fn binary(a: &HermitianOperator, b: &HermitianOperator) -> Result<Self> {
        let id = HermitianOperator::identity(a.dim());
        Self::new(
            vec![(1.0, Channel::Identity), (0.0, Channel::Identity)],
            vec![a.clone(), &id - a],
            vec![b.clone(), &id - b],
        )
    }

    /// Two random unitary channels with random two-outcome POVMs.
    pub fn random(rng: &mut SeededRng, d: usize) -> Result<Self> {
        use rand::Rng;
        let p: f64 = rng.random();
        let u1 = random::unitary(rng, d);
        let u2 = random::unitary(rng, d);
        let id = HermitianOperator::identity(d);
        let a = random::effect(rng, d);
        let b = random::effect(rng, d);
        Self::new(
            vec![(p, Channel::Unitary(u1)), (1.0 - p, Channel::Unitary(u2))],
            vec![a.clone(), &id - &a],
            vec![b.clone(), &id - &b],
        )
    }
}

/// Σᵢ pᵢ Tr[Nᵢ(ρ) Aᵢ] with the chosen POVM.
pub fn success_probability(instance: &DiscriminationInstance, rho: &HermitianOperator, task: Task) -> f64 {
    instance.effective(task).inner(rho)
}

/// max over σ ∈ F of ⟨A, σ⟩/⟨B, σ⟩. The Charnes–Cooper form max ⟨A, X⟩ s.t. ⟨B, X⟩ = 1,
/// X ∈ cone(F) is solved through its dual min r s.t. rB − A ∈ cone(F)*, which stays bounded
/// when ⟨B, ·⟩ nearly vanishes on part of F.
pub fn max_free_ratio(a: &HermitianOperator, b: &HermitianOperator, f: &FreeSetSpec) -> Result<ExtReal> {
    let mut p = ConicProblem::new();
    let r = p.scalar();
    let e = MatExpr::scalar_times(&p.lin(r), b).sub_op(a);
    f.add_dual_membership(&mut p, &e, "ratio")?;
    p.minimize(p.lin(r));
    let out = solve(&p, &SolveOptions::configured());
    match out.status {
        Status::Optimal => Ok(ExtReal::Finite(out.value.expect("optimal"))),
        Status::PrimalInfeasible => Ok(ExtReal::Infinite),
        st => Err(Error::Solver(format!("free ratio solve ended with {}", st.as_str()))),
    }
}

/// The double ratio [p_A(ρ)/p_B(ρ)] / max over σ ∈ F of [p_A(σ)/p_B(σ)].
pub fn advantage_ratio(instance: &DiscriminationInstance, rho: &HermitianOperator, f: &FreeSetSpec) -> Result<f64> {
    let a = instance.effective(Task::Discriminate);
    let b = instance.effective(Task::Exclude);
    let den = b.inner(rho);
    if den <= 0.0 {
        return Err(Error::Domain("exclusion probability of rho vanishes".into()));
    }
    Ok(match max_free_ratio(&a, &b, f)? {
        ExtReal::Infinite => 0.0,
        ExtReal::Finite(m) => a.inner(rho) / den / m,
    })
}

/// Binary instance with A₁ = A/‖A‖∞, B₁ = B/‖B‖∞ from the dual optimizers of Ω_F(ρ).
pub fn advantage_instance_from_duals(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<DiscriminationInstance> {
    let mv = projective_robustness(rho, f)?;
    if mv.is_infinite() {
        return Err(Error::Domain("Omega is infinite: the advantage is unbounded".into()));
    }
    let duals = mv
        .duals
        .ok_or_else(|| Error::Domain("dual optimizers are only extracted for full-rank states".into()))?;
    let id = HermitianOperator::identity(rho.dim()).scale(DELTA);
    let a = &duals.a + &id;
    let b = &duals.b + &id;
    DiscriminationInstance::binary(&a.scale(1.0 / a.op_norm()), &b.scale(1.0 / b.op_norm()))
}

/// Ω, the constructed double ratio and the largest ratio over random instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvantageReport {
    pub omega: f64,
    pub constructed: f64,
    pub random_max: f64,
    pub n_random: usize,
}

/// Checks constructed ∈ [Ω(1 − 1e-3), Ω(1 + 1e-6)] and that no random instance exceeds Ω.
pub fn verify_advantage_theorem(rho: &HermitianOperator, f: &FreeSetSpec, n_random: usize, seed: u64) -> Result<AdvantageReport> {
    let omega = projective_robustness(rho, f)?
        .value
        .finite()
        .ok_or_else(|| Error::Domain("Omega is infinite".into()))?;
    let constructed = advantage_ratio(&advantage_instance_from_duals(rho, f)?, rho, f)?;
    let mut rng = random::rng(seed);
    let mut random_max = 0.0f64;
    for _ in 0..n_random {
        let inst = DiscriminationInstance::random(&mut rng, rho.dim())?;
        random_max = random_max.max(advantage_ratio(&inst, rho, f)?);
    }
    let upper = omega * (1.0 + UPPER_TOL);
    if constructed < omega * (1.0 - RATIO_TOL) || constructed > upper {
        return Err(Error::TheoremViolation(format!(
            "constructed ratio {constructed} is not within 1e-3 of Omega = {omega}"
        )));
    }
    if random_max > upper {
        return Err(Error::TheoremViolation(format!("random instance ratio {random_max} exceeds Omega = {omega}")));
    }
    Ok(AdvantageReport {
        omega,
        constructed,
        random_max,
        n_random,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::QuantumState;
    use crate::states::{isotropic, maximally_coherent, maximally_mixed};

    #[test]
    fn trivial_probabilities() {
        let id = HermitianOperator::identity(2);
        let inst = DiscriminationInstance::binary(&id, &id.scale(0.5)).unwrap();
        let rho = maximally_coherent(2).into_op();
        assert!((success_probability(&inst, &rho, Task::Discriminate) - 1.0).abs() < 1e-12);
        assert!((success_probability(&inst, &rho, Task::Exclude) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn isotropic_advantage_matches_omega() {
        let f = FreeSetSpec::ppt(&[2, 2]).unwrap();
        let rho = isotropic(0.4, 2).unwrap().into_op();
        let r = verify_advantage_theorem(&rho, &f, 10, 1).unwrap();
        assert!((r.omega - 7.0 / 3.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn coherent_advantage_and_free_state() {
        let f = FreeSetSpec::incoherent(2);
        let mixed = maximally_mixed(2).into_op();
        let rho = QuantumState::normalized(&maximally_coherent(2).into_op().scale(0.7) + &mixed.scale(0.3))
            .unwrap()
            .into_op();
        verify_advantage_theorem(&rho, &f, 10, 2).unwrap();
        let r = verify_advantage_theorem(&mixed, &f, 5, 3).unwrap();
        assert!((r.omega - 1.0).abs() < 1e-7);
    }
}
