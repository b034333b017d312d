//! Distillation error bounds from Ω_F, the isotropic-like family τ_ε, and the H_P, H_ε and
//! Θ_p programs over effect pairs 0 ⪯ W ⪯ Z ⪯ I.

use alloc::format;

use crate::conic::{solve, ConicProblem, MatExpr, SolveOptions, Status};
use crate::error::{Error, Result};
use crate::free_sets::{FreeSetSpec, Threshold};
use crate::monotones::{
    affine_support_overlap, free_overlap, generalized_robustness, projective_robustness, standard_robustness,
    support_overlap, ExtReal,
};
use crate::operator::{HermitianOperator, QuantumState};

/// Relative slack used when re-verifying golden-state identities.
pub const GOLDEN_TOL: f64 = 1e-6;

/// Which robustness supplies λ for achievability: R_F^F (any convex theory) or R_F (affine).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    General,
    Affine,
}

/// ε ≥ (F/(1−F)·Ω + 1)^{-1}, with 0·∞ := ∞.
pub fn error_bound_formula(overlap: f64, omega: ExtReal) -> Result<f64> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Domain(format!("target overlap {overlap} with the free set is not below 1")));
    }
    Ok(match omega {
        ExtReal::Infinite => 0.0,
        ExtReal::Finite(w) => 1.0 / (overlap / (1.0 - overlap) * w + 1.0),
    })
}

/// ε = (Ω/(λ−1) + 1)^{-1}, the error reached by distilling through τ_ε.
pub fn achievable_formula(lambda: f64, omega: ExtReal) -> f64 {
    match omega {
        ExtReal::Infinite => 0.0,
        ExtReal::Finite(w) => 1.0 / (w / (lambda - 1.0) + 1.0),
    }
}

fn target_overlap(phi: &HermitianOperator, f: &FreeSetSpec) -> Result<f64> {
    let ff = free_overlap(phi, f)?;
    if ff >= 1.0 - 1e-9 {
        return Err(Error::Domain("target state is free".into()));
    }
    Ok(ff)
}

/// Lower bound on the error of any probabilistic free protocol ρ → φ.
pub fn error_lower_bound(rho: &HermitianOperator, f_in: &FreeSetSpec, phi: &HermitianOperator, f_out: &FreeSetSpec) -> Result<f64> {
    let ff = target_overlap(phi, f_out)?;
    error_bound_formula(ff, projective_robustness(rho, f_in)?.value)
}

/// The robustness λ that drives achievability in the given mode.
pub fn target_robustness(phi: &HermitianOperator, f: &FreeSetSpec, mode: Mode) -> Result<ExtReal> {
    Ok(match mode {
        Mode::General => standard_robustness(phi, f)?.value,
        Mode::Affine => {
            if !f.is_affine() {
                return Err(Error::Domain(format!("the {} theory is not affine", f.name())));
            }
            generalized_robustness(phi, f)?.value
        }
    })
}

/// Smallest error guaranteed achievable through τ_ε.
pub fn achievable_error(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    phi: &HermitianOperator,
    f_out: &FreeSetSpec,
    mode: Mode,
) -> Result<f64> {
    let omega = projective_robustness(rho, f_in)?.value;
    if !omega.is_finite() {
        return Ok(0.0);
    }
    match target_robustness(phi, f_out, mode)? {
        ExtReal::Finite(l) => Ok(achievable_formula(l, omega)),
        ExtReal::Infinite => Err(Error::Domain(
            "standard robustness of the target is infinite; use the affine mode".into(),
        )),
    }
}

/// Checks R_F(φ) = 1/F_F(φ) and, outside affine theories, R_F(φ) = R_F^F(φ).
pub fn check_golden(phi: &HermitianOperator, f: &FreeSetSpec) -> Result<f64> {
    let ff = target_overlap(phi, f)?;
    let r = generalized_robustness(phi, f)?.value.to_f64();
    let standard = if f.is_affine() {
        r
    } else {
        standard_robustness(phi, f)?.value.to_f64()
    };
    let close = |a: f64, b: f64| a.is_finite() && b.is_finite() && (a - b).abs() <= GOLDEN_TOL * b.abs().max(1.0);
    if !close(r, 1.0 / ff) || !close(r, standard) {
        return Err(Error::NotGolden {
            robustness: r,
            inverse_overlap: 1.0 / ff,
            standard,
        });
    }
    Ok(ff)
}

/// Exact minimal error for a verified golden target.
pub fn exact_error_golden(rho: &HermitianOperator, f_in: &FreeSetSpec, phi: &HermitianOperator, f_out: &FreeSetSpec) -> Result<f64> {
    let ff = check_golden(phi, f_out)?;
    error_bound_formula(ff, projective_robustness(rho, f_in)?.value)
}

/// Real-valued lower bound on the number of copies n needed for error ε.
pub fn overhead_formula(overlap: f64, omega: ExtReal, eps: f64) -> Result<ExtReal> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("error {eps} outside (0,1)")));
    }
    let w = match omega {
        ExtReal::Infinite => return Ok(ExtReal::Finite(0.0)),
        ExtReal::Finite(w) => w,
    };
    if w <= 1.0 + 1e-12 {
        return Ok(ExtReal::Infinite);
    }
    let arg = (1.0 - eps) * (1.0 - overlap) / (eps * overlap);
    Ok(ExtReal::Finite((libm::log(arg) / libm::log(w)).max(0.0)))
}

/// Copy-number bound for distilling φ from copies of ρ with error ε.
pub fn overhead_bound(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    phi: &HermitianOperator,
    f_out: &FreeSetSpec,
    eps: f64,
) -> Result<ExtReal> {
    let ff = target_overlap(phi, f_out)?;
    overhead_formula(ff, projective_robustness(rho, f_in)?.value, eps)
}

/// The eigenvalue bound, its strengthening (1−F)/Ω and the Ω bound itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenvalueComparison {
    pub eigenvalue_bound: f64,
    pub intermediate: f64,
    pub omega_bound: f64,
}

pub fn eigenvalue_bound(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    phi: &HermitianOperator,
    f_out: &FreeSetSpec,
) -> Result<EigenvalueComparison> {
    let ff = target_overlap(phi, f_out)?;
    let omega = projective_robustness(rho, f_in)?.value;
    let r = generalized_robustness(rho, f_in)?.value;
    let lmin = rho.min_eigenvalue().max(0.0);
    let eigenvalue_bound = match r {
        ExtReal::Finite(r) => lmin * (1.0 - ff) / r,
        ExtReal::Infinite => 0.0,
    };
    let intermediate = match omega {
        ExtReal::Finite(w) => (1.0 - ff) / w,
        ExtReal::Infinite => 0.0,
    };
    let omega_bound = error_bound_formula(ff, omega)?;
    let slack = 1e-7;
    if intermediate < eigenvalue_bound - slack || omega_bound < intermediate - slack {
        return Err(Error::TheoremViolation(format!(
            "bound ordering failed: eigenvalue {eigenvalue_bound}, intermediate {intermediate}, omega {omega_bound}"
        )));
    }
    Ok(EigenvalueComparison {
        eigenvalue_bound,
        intermediate,
        omega_bound,
    })
}

/// Full bound report for distilling φ from ρ.
#[derive(Debug, Clone)]
pub struct DistillationBoundReport {
    pub overlap: f64,
    pub omega: ExtReal,
    pub lower_error: f64,
    pub achievable_error: Option<f64>,
    pub exact: bool,
    pub eigenvalue: EigenvalueComparison,
}

pub fn bound_report(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    phi: &HermitianOperator,
    f_out: &FreeSetSpec,
) -> Result<DistillationBoundReport> {
    let ff = target_overlap(phi, f_out)?;
    let omega = projective_robustness(rho, f_in)?.value;
    let lower_error = error_bound_formula(ff, omega)?;
    let mode = if f_out.is_affine() { Mode::Affine } else { Mode::General };
    let achievable = achievable_error(rho, f_in, phi, f_out, mode).ok();
    let exact = check_golden(phi, f_out).is_ok();
    Ok(DistillationBoundReport {
        overlap: ff,
        omega,
        lower_error,
        achievable_error: achievable,
        exact,
        eigenvalue: eigenvalue_bound(rho, f_in, phi, f_out)?,
    })
}

/// τ_ε with the data (λ, σ) it was built from.
#[derive(Debug, Clone)]
pub struct TauEps {
    pub state: QuantumState,
    pub lambda: f64,
    pub sigma: HermitianOperator,
    /// Set when ε > (λ−1)/λ and the returned state is free.
    pub free_branch: bool,
}

/// τ_ε = (1−ε)φ + ε(λσ−φ)/(λ−1) for the optimal σ of R_F^F(φ) (general) or R_F(φ) (affine).
pub fn tau_eps(phi: &HermitianOperator, f: &FreeSetSpec, eps: f64, mode: Mode) -> Result<TauEps> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain(format!("error {eps} outside [0,1]")));
    }
    let mv = match mode {
        Mode::General => standard_robustness(phi, f)?,
        Mode::Affine => {
            if !f.is_affine() {
                return Err(Error::Domain(format!("the {} theory is not affine", f.name())));
            }
            generalized_robustness(phi, f)?
        }
    };
    let lambda = match mv.value {
        ExtReal::Finite(l) if l > 1.0 + 1e-9 => l,
        ExtReal::Finite(_) => return Err(Error::Domain("target state is free".into())),
        ExtReal::Infinite => {
            return Err(Error::Domain(
                "standard robustness of the target is infinite; use the affine mode".into(),
            ))
        }
    };
    let sigma = mv.optimal_state().expect("finite robustness has an optimizer");
    let free_branch = eps > (lambda - 1.0) / lambda;
    let op = if free_branch && mode == Mode::Affine {
        sigma.clone()
    } else {
        let comp = (&sigma.scale(lambda) - phi).scale(1.0 / (lambda - 1.0));
        &phi.scale(1.0 - eps) + &comp.scale(eps)
    };
    Ok(TauEps {
        state: QuantumState::normalized(op)?,
        lambda,
        sigma,
        free_branch,
    })
}

/// Ω(τ_ε) against the Ω required to reach error ε′ < ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoGoVerdict {
    pub omega_tau: f64,
    pub ceiling: f64,
    pub required: f64,
    pub impossible: bool,
}

/// τ_ε cannot be purified to error ε′ < ε by any free operation for a golden target.
pub fn isotropic_nogo_check(phi: &HermitianOperator, f: &FreeSetSpec, eps: f64, eps_prime: f64) -> Result<NoGoVerdict> {
    if !(0.0 < eps_prime && eps_prime <= eps && eps < 1.0) {
        return Err(Error::Domain(format!("need 0 < ε′ ≤ ε < 1, got ε = {eps}, ε′ = {eps_prime}")));
    }
    let ff = check_golden(phi, f)?;
    let mode = if f.is_affine() { Mode::Affine } else { Mode::General };
    let tau = tau_eps(phi, f, eps, mode)?;
    let omega_tau = projective_robustness(tau.state.op(), f)?.value.to_f64();
    let lambda = tau.lambda;
    let ceiling = (1.0 - eps) / eps * (lambda - 1.0);
    // Ω needed for error ε′: (F/(1−F)·Ω + 1)^{-1} ≤ ε′
    let required = (1.0 / eps_prime - 1.0) * (1.0 - ff) / ff;
    Ok(NoGoVerdict {
        omega_tau,
        ceiling,
        required,
        impossible: eps_prime < eps && omega_tau <= ceiling * (1.0 + 1e-6) && ceiling < required,
    })
}

/// The trade-off program family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Program {
    Hp,
    HpAff,
    HpEps(f64),
    HpEpsAff(f64),
    ThetaP(f64),
    ThetaPAff(f64),
}

impl Program {
    pub fn name(&self) -> &'static str {
        match self {
            Program::Hp => "H_P",
            Program::HpAff => "H_P^aff",
            Program::HpEps(_) => "H_eps",
            Program::HpEpsAff(_) => "H_eps^aff",
            Program::ThetaP(_) => "Theta_p",
            Program::ThetaPAff(_) => "Theta_p^aff",
        }
    }

    fn affine(&self) -> bool {
        matches!(self, Program::HpAff | Program::HpEpsAff(_) | Program::ThetaPAff(_))
    }
}

/// Optimal value and effects of one trade-off program.
#[derive(Debug, Clone)]
pub struct TradeoffSolveResult {
    pub program: Program,
    pub t: Threshold,
    pub value: f64,
    pub w: HermitianOperator,
    pub z: HermitianOperator,
    pub iterations: usize,
}

impl TradeoffSolveResult {
    /// Largest violation of 0 ⪯ W ⪯ Z ⪯ I.
    pub fn ordering_violation(&self) -> f64 {
        let d = self.w.dim();
        let zw = &self.z - &self.w;
        let iz = &HermitianOperator::identity(d) - &self.z;
        [self.w.min_eigenvalue(), zw.min_eigenvalue(), iz.min_eigenvalue()]
            .into_iter()
            .fold(0.0f64, |a, e| a.max(-e))
    }
}

fn check_threshold(t: Threshold) -> Result<()> {
    match t {
        Threshold::Finite(x) if !(x > 0.0 && x.is_finite()) => {
            Err(Error::Domain(format!("threshold t = {x} must be positive")))
        }
        _ => Ok(()),
    }
}

/// Solves one member of the H_P / H_ε / Θ_p family.
pub fn solve_tradeoff(rho: &HermitianOperator, f: &FreeSetSpec, t: Threshold, program: Program) -> Result<TradeoffSolveResult> {
    check_threshold(t)?;
    if rho.dim() != f.dim() {
        return Err(Error::Dimension(format!(
            "state has dimension {}, free set has dimension {}",
            rho.dim(),
            f.dim()
        )));
    }
    let d = f.dim();
    let mut p = ConicProblem::new();
    let wv = p.hermitian(d);
    let zv = p.hermitian(d);
    let (w, z) = (p.mat(wv), p.mat(zv));
    p.add_psd(w.clone(), "W ⪰ 0");
    p.add_psd(z.clone().sub(&w), "Z ⪰ W");
    p.add_psd(MatExpr::constant(&HermitianOperator::identity(d)).sub(&z), "Z ⪯ I");
    let (wr, zr) = (w.inner(rho), z.inner(rho));
    match program {
        Program::Hp | Program::HpAff => {
            p.add_eq(wr.clone().sub(&zr), "⟨W,ρ⟩ = ⟨Z,ρ⟩");
            p.maximize(wr);
        }
        Program::HpEps(e) | Program::HpEpsAff(e) => {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::Domain(format!("error {e} outside [0,1]")));
            }
            p.add_eq(wr.sub(&zr.scale(1.0 - e)), "⟨W,ρ⟩ = (1−ε)⟨Z,ρ⟩");
            p.maximize(zr);
        }
        Program::ThetaP(q) | Program::ThetaPAff(q) => {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::Domain(format!("probability {q} outside (0,1]")));
            }
            p.add_eq(zr.plus_constant(-q), "⟨Z,ρ⟩ = p");
            p.maximize(wr.scale(1.0 / q));
        }
    }
    if program.affine() {
        f.affine_hull_constraints(&mut p, &w, &z, t, "free overlap equality")?;
    } else {
        f.add_dual_inequality(&mut p, &w, &z, t, "free overlap inequality")?;
    }
    let out = solve(&p, &SolveOptions::configured());
    if out.status != Status::Optimal {
        return Err(Error::Solver(format!("{}: solve ended with {}", program.name(), out.status.as_str())));
    }
    Ok(TradeoffSolveResult {
        program,
        t,
        value: out.value.expect("optimal").clamp(0.0, 1.0),
        w: out.matrix(&p, wv),
        z: out.matrix(&p, zv),
        iterations: out.iterations,
    })
}

pub fn solve_hp(rho: &HermitianOperator, f: &FreeSetSpec, t: Threshold) -> Result<TradeoffSolveResult> {
    solve_tradeoff(rho, f, t, Program::Hp)
}

pub fn solve_hp_aff(rho: &HermitianOperator, f: &FreeSetSpec, t: Threshold) -> Result<TradeoffSolveResult> {
    solve_tradeoff(rho, f, t, Program::HpAff)
}

pub fn solve_hp_eps(rho: &HermitianOperator, f: &FreeSetSpec, eps: f64, t: Threshold, mode: Mode) -> Result<TradeoffSolveResult> {
    let prog = match mode {
        Mode::General => Program::HpEps(eps),
        Mode::Affine => Program::HpEpsAff(eps),
    };
    solve_tradeoff(rho, f, t, prog)
}

pub fn solve_theta_p(rho: &HermitianOperator, f: &FreeSetSpec, p: f64, t: Threshold, mode: Mode) -> Result<TradeoffSolveResult> {
    let prog = match mode {
        Mode::General => Program::ThetaP(p),
        Mode::Affine => Program::ThetaPAff(p),
    };
    solve_tradeoff(rho, f, t, prog)
}

fn threshold_of(x: ExtReal) -> Threshold {
    match x {
        ExtReal::Finite(v) => Threshold::Finite(v),
        ExtReal::Infinite => Threshold::Infinite,
    }
}

/// Thresholds of the two sides of the sandwich for target ρ′: (V^{-1}, R) with V = V_F and
/// R = R_F^F in the general mode, V = V_aff and R = R_F in the affine mode. `None` for the
/// upper side means the upper bound is trivially 1 (V_aff = ∞).
pub fn sandwich_thresholds(target: &HermitianOperator, f: &FreeSetSpec, mode: Mode) -> Result<(Option<Threshold>, Threshold)> {
    let v = match mode {
        Mode::General => ExtReal::Finite(support_overlap(target, f)?),
        Mode::Affine => affine_support_overlap(target, f)?,
    };
    let upper = match v {
        ExtReal::Infinite => None,
        ExtReal::Finite(v) if v <= 1e-12 => Some(Threshold::Infinite),
        ExtReal::Finite(v) => Some(Threshold::Finite(1.0 / v)),
    };
    Ok((upper, threshold_of(target_robustness(target, f, mode)?)))
}

/// Upper and lower bounds of one program evaluated at the two sandwich thresholds.
#[derive(Debug, Clone)]
pub struct Sandwich {
    pub upper: f64,
    pub lower: f64,
    pub upper_solve: Option<TradeoffSolveResult>,
    pub lower_solve: TradeoffSolveResult,
}

impl Sandwich {
    pub fn is_ordered(&self, tol: f64) -> bool {
        self.upper >= self.lower - tol
    }
}

fn sandwich_for(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    target: &HermitianOperator,
    f_out: &FreeSetSpec,
    mode: Mode,
    prog: Program,
) -> Result<Sandwich> {
    let (up_t, low_t) = sandwich_thresholds(target, f_out, mode)?;
    let lower_solve = solve_tradeoff(rho, f_in, low_t, prog)?;
    let upper_solve = match up_t {
        Some(t) => Some(solve_tradeoff(rho, f_in, t, prog)?),
        None => None,
    };
    Ok(Sandwich {
        upper: upper_solve.as_ref().map_or(1.0, |s| s.value),
        lower: lower_solve.value,
        upper_solve,
        lower_solve,
    })
}

/// H_P(ρ|V(ρ′)^{-1}) ≥ P(ρ → ρ′) ≥ H_P(ρ|R(ρ′)).
pub fn probability_sandwich(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    target: &HermitianOperator,
    f_out: &FreeSetSpec,
    mode: Mode,
) -> Result<Sandwich> {
    let prog = match mode {
        Mode::General => Program::Hp,
        Mode::Affine => Program::HpAff,
    };
    sandwich_for(rho, f_in, target, f_out, mode, prog)
}

/// H_ε(ρ|V(φ)^{-1}) ≥ P(ρ → φ, ε) ≥ H_ε(ρ|R(φ)).
pub fn probability_at_error_sandwich(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    phi: &HermitianOperator,
    f_out: &FreeSetSpec,
    eps: f64,
    mode: Mode,
) -> Result<Sandwich> {
    let prog = match mode {
        Mode::General => Program::HpEps(eps),
        Mode::Affine => Program::HpEpsAff(eps),
    };
    sandwich_for(rho, f_in, phi, f_out, mode, prog)
}

/// Θ_p(ρ|V(φ)^{-1}) ≥ 1 − E(ρ → φ, p) ≥ Θ_p(ρ|R(φ)).
pub fn fidelity_sandwich(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    phi: &HermitianOperator,
    f_out: &FreeSetSpec,
    p: f64,
    mode: Mode,
) -> Result<Sandwich> {
    let prog = match mode {
        Mode::General => Program::ThetaP(p),
        Mode::Affine => Program::ThetaPAff(p),
    };
    sandwich_for(rho, f_in, phi, f_out, mode, prog)
}

/// The Θ_p solve at t = R(φ) behind [`error_at_probability`].
pub fn theta_at_target(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    phi: &HermitianOperator,
    f_out: &FreeSetSpec,
    p: f64,
    mode: Mode,
) -> Result<TradeoffSolveResult> {
    let t = threshold_of(target_robustness(phi, f_out, mode)?);
    solve_theta_p(rho, f_in, p, t, mode)
}

/// Best error E(ρ → φ, p) from Θ_p at t = R(φ); exact for golden targets.
pub fn error_at_probability(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    phi: &HermitianOperator,
    f_out: &FreeSetSpec,
    p: f64,
    mode: Mode,
) -> Result<f64> {
    Ok(1.0 - theta_at_target(rho, f_in, phi, f_out, p, mode)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{isotropic, maximally_entangled};

    fn ppt() -> FreeSetSpec {
        FreeSetSpec::ppt(&[2, 2]).unwrap()
    }

    #[test]
    fn bound_formulas() {
        assert_eq!(error_bound_formula(0.5, ExtReal::Infinite).unwrap(), 0.0);
        assert!((error_bound_formula(0.5, ExtReal::Finite(3.0)).unwrap() - 0.25).abs() < 1e-15);
        assert!((achievable_formula(2.0, ExtReal::Finite(3.0)) - 0.25).abs() < 1e-15);
        let n = overhead_formula(0.5, ExtReal::Finite(10.0), 1e-3).unwrap().to_f64();
        assert!((n - libm::log10(999.0)).abs() < 1e-12);
        assert_eq!(overhead_formula(0.5, ExtReal::Finite(3.0), 0.5).unwrap(), ExtReal::Finite(0.0));
        assert!(error_bound_formula(1.0, ExtReal::Finite(2.0)).is_err());
    }

    #[test]
    fn isotropic_exact_error() {
        let phi = maximally_entangled(2).into_op();
        let rho = isotropic(0.4, 2).unwrap().into_op();
        let e = exact_error_golden(&rho, &ppt(), &phi, &ppt()).unwrap();
        assert!((e - 0.3).abs() < 1e-6, "{e}");
        let a = achievable_error(&rho, &ppt(), &phi, &ppt(), Mode::General).unwrap();
        assert!((a - e).abs() < 1e-6);
    }

    #[test]
    fn tau_eps_is_isotropic() {
        let phi = maximally_entangled(2).into_op();
        let eps = 0.3;
        let tau = tau_eps(&phi, &ppt(), eps, Mode::General).unwrap();
        let iso = isotropic(4.0 * eps / 3.0, 2).unwrap().into_op();
        assert!((tau.state.op() - &iso).max_abs() < 1e-6);
        assert!(!tau.free_branch);
    }

    #[test]
    fn theta_p_matches_closed_form() {
        let phi = maximally_entangled(2).into_op();
        let rho = isotropic(0.4, 2).unwrap().into_op();
        for p in [0.5, 1.0] {
            let e = error_at_probability(&rho, &ppt(), &phi, &ppt(), p, Mode::General).unwrap();
            assert!((e - 0.3).abs() < 1e-6, "p={p}: {e}");
        }
    }

    #[test]
    fn hp_eps_at_full_error_is_one() {
        let rho = isotropic(0.4, 2).unwrap().into_op();
        let r = solve_hp_eps(&rho, &ppt(), 1.0, Threshold::Finite(2.0), Mode::General).unwrap();
        assert!((r.value - 1.0).abs() < 1e-7);
        assert!(r.ordering_violation() < 1e-8);
    }
}
