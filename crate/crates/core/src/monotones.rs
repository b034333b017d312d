//! Resource monotones as solved conic programs with extended-real values: R_max, R_max^F,
//! R_F, W_F, R_F^F, Ω_F, Ω_F^F, F_F, V_F and V_aff.
//!
//! Programs over operators sandwiched by ρ are restricted to the support of ρ, so that
//! rank-deficient inputs keep a strictly feasible region whenever the value is finite.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::conic::{
    solve, verify_farkas, CertificateCheck, ConicProblem, FarkasWitness, MatExpr, SolveOptions, SolveOutcome,
    Status,
};
use crate::error::{Error, Result};
use crate::free_sets::FreeSetSpec;
use crate::operator::{CMat, HermitianOperator, RANK_TOL};

/// A value in [0, ∞].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinite => None,
        }
    }

    /// The value as a float, with ∞ mapped to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn from_f64(x: f64) -> Self {
        if x.is_finite() {
            ExtReal::Finite(x)
        } else {
            ExtReal::Infinite
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Infinite => f.write_str("inf"),
        }
    }
}

/// Dual witnesses A, B ⪰ 0 with ⟨B, ρ⟩ = 1 and B − A ∈ cone(F)*.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPair {
    pub a: HermitianOperator,
    pub b: HermitianOperator,
}

/// Infeasibility certificate behind an infinite value, with the program it refers to.
#[derive(Debug, Clone)]
pub struct InfinityCertificate {
    problem: ConicProblem,
    witness: FarkasWitness,
    pub check: CertificateCheck,
}

impl InfinityCertificate {
    pub fn problem(&self) -> &ConicProblem {
        &self.problem
    }

    pub fn witness(&self) -> &FarkasWitness {
        &self.witness
    }

    /// Re-checks the witness against the program data.
    pub fn verify(&self, tol_feas: f64) -> CertificateCheck {
        verify_farkas(&self.problem, &self.witness, tol_feas)
    }
}

/// A monotone value with optimizers and, for ∞, the certificate.
#[derive(Debug, Clone)]
pub struct MonotoneValue {
    pub value: ExtReal,
    /// The optimal σ̃ ∈ cone(F), when the program has one.
    pub sigma_tilde: Option<HermitianOperator>,
    pub duals: Option<DualPair>,
    /// Dual objective at termination, for finite values.
    pub dual_value: Option<f64>,
    pub certificate: Option<InfinityCertificate>,
    pub iterations: usize,
}

impl MonotoneValue {
    fn exact(value: ExtReal) -> Self {
        Self {
            value,
            sigma_tilde: None,
            duals: None,
            dual_value: None,
            certificate: None,
            iterations: 0,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        self.value.finite()
    }

    pub fn is_infinite(&self) -> bool {
        !self.value.is_finite()
    }

    /// σ̃ / Tr σ̃.
    pub fn optimal_state(&self) -> Option<HermitianOperator> {
        let s = self.sigma_tilde.as_ref()?;
        let t = s.trace();
        (t > 0.0).then(|| s.scale(1.0 / t))
    }

    /// (σ, λ, μ) with ρ ⪯ λσ and σ ⪯ μρ, from an Ω optimizer: λ = Tr σ̃, μ = γ/Tr σ̃.
    pub fn lambda_mu(&self) -> Option<(HermitianOperator, f64, f64)> {
        let g = self.finite()?;
        let s = self.sigma_tilde.as_ref()?;
        let t = s.trace();
        (t > 0.0).then(|| (s.scale(1.0 / t), t, g / t))
    }
}

fn opts() -> SolveOptions {
    SolveOptions::configured()
}

/// Orthonormal frame of supp ρ; `None` when ρ has full rank.
struct Frame {
    v: CMat,
    rho_r: HermitianOperator,
}

fn rank_tol(rho: &HermitianOperator) -> f64 {
    RANK_TOL * rho.op_norm().max(1.0)
}

fn support_frame(rho: &HermitianOperator) -> Result<Option<Frame>> {
    let tol = rank_tol(rho);
    if rho.min_eigenvalue() < -tol.max(1e-9) {
        return Err(Error::Domain(format!(
            "operator is not PSD (min eigenvalue {:e})",
            rho.min_eigenvalue()
        )));
    }
    if rho.rank(tol) == rho.dim() {
        return Ok(None);
    }
    let v = rho.support_basis(tol);
    let rho_r = rho.congruence(&v.adjoint());
    Ok(Some(Frame { v, rho_r }))
}

/// Interprets a solve whose infeasibility means value ∞.
fn finish(
    p: ConicProblem,
    out: SolveOutcome,
    what: &str,
    value_map: impl Fn(f64) -> f64,
) -> Result<(MonotoneValue, Option<SolveOutcome>, ConicProblem)> {
    match out.status {
        Status::Optimal => {
            let mut mv = MonotoneValue::exact(ExtReal::Finite(value_map(out.value.expect("optimal"))));
            mv.dual_value = out.dual_value.map(&value_map);
            mv.iterations = out.iterations;
            Ok((mv, Some(out), p))
        }
        Status::PrimalInfeasible => {
            let w = out.farkas().expect("infeasible outcome carries a witness").clone();
            let check = verify_farkas(&p, &w, opts().tol_feas);
            if !check.valid {
                return Err(Error::Certificate(format!("{what}: infeasibility witness rejected ({check:?})")));
            }
            let mut mv = MonotoneValue::exact(ExtReal::Infinite);
            mv.iterations = out.iterations;
            mv.certificate = Some(InfinityCertificate {
                problem: p.clone(),
                witness: w,
                check,
            });
            Ok((mv, None, p))
        }
        st => Err(Error::Solver(format!("{what}: solve ended with {}", st.as_str()))),
    }
}

/// Operator-valued variable S of size r, embedded as V S V† (or S itself without a frame).
fn framed_variable(p: &mut ConicProblem, frame: &Option<Frame>, d: usize) -> (MatExpr, MatExpr) {
    match frame {
        None => {
            let s = p.hermitian(d);
            let e = p.mat(s);
            (e.clone(), e)
        }
        Some(f) => {
            let s = p.hermitian(f.v.ncols());
            let e = p.mat(s);
            let full = e.congruence(&f.v);
            (e, full)
        }
    }
}

fn check_dims(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<()> {
    if rho.dim() != f.dim() {
        return Err(Error::Dimension(format!(
            "state has dimension {}, free set has dimension {}",
            rho.dim(),
            f.dim()
        )));
    }
    Ok(())
}

/// R_max(ρ‖σ) = min{λ : ρ ⪯ λσ}, computed spectrally on supp σ.
pub fn rmax(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<ExtReal> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension("R_max of operators with different dimensions".into()));
    }
    let tol = rank_tol(sigma);
    let k = sigma.kernel_basis(tol);
    if k.ncols() > 0 {
        let off = rho.congruence(&k.adjoint());
        if off.op_norm() > RANK_TOL * rho.op_norm().max(1.0) {
            return Ok(ExtReal::Infinite);
        }
    }
    let v = sigma.support_basis(tol);
    if v.ncols() == 0 {
        return Ok(if rho.op_norm() > RANK_TOL { ExtReal::Infinite } else { ExtReal::Finite(0.0) });
    }
    let s_r = sigma.congruence(&v.adjoint());
    let isqrt = s_r.apply_spectral(|x| 1.0 / libm::sqrt(x));
    let r_r = rho.congruence(&v.adjoint());
    let m = r_r.congruence(isqrt.matrix());
    Ok(ExtReal::Finite(m.max_eigenvalue().max(0.0)))
}

/// R_max(ρ‖σ) through the conic program, for cross-validation.
pub fn rmax_sdp(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<MonotoneValue> {
    let mut p = ConicProblem::new();
    let l = p.scalar();
    p.add_psd(MatExpr::scalar_times(&p.lin(l), sigma).sub_op(rho), "dominance");
    p.minimize(p.lin(l));
    let out = solve(&p, &opts());
    Ok(finish(p, out, "R_max", |v| v)?.0)
}

/// R_max^F(ρ‖σ) = min{λ : λσ − ρ ∈ cone(F)}.
pub fn rmax_free(rho: &HermitianOperator, sigma: &HermitianOperator, f: &FreeSetSpec) -> Result<MonotoneValue> {
    check_dims(rho, f)?;
    check_dims(sigma, f)?;
    let mut p = ConicProblem::new();
    let l = p.scalar();
    p.add_nonneg(p.lin(l), "lambda");
    let e = MatExpr::scalar_times(&p.lin(l), sigma).sub_op(rho);
    f.add_cone_membership(&mut p, &e, "free dominance")?;
    p.minimize(p.lin(l));
    let out = solve(&p, &opts());
    Ok(finish(p, out, "R_max^F", |v| v)?.0)
}

/// R_F(ρ) = min{Tr σ̃ : σ̃ ⪰ ρ, σ̃ ∈ cone(F)}.
pub fn generalized_robustness(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<MonotoneValue> {
    check_dims(rho, f)?;
    let d = f.dim();
    let mut p = ConicProblem::new();
    let s = p.hermitian(d);
    let sm = p.mat(s);
    p.add_psd(sm.clone().sub_op(rho), "dominance");
    f.add_cone_membership_of_psd(&mut p, &sm, "free")?;
    p.minimize(sm.trace());
    let out = solve(&p, &opts());
    let (mut mv, out, p) = finish(p, out, "R_F", |v| v)?;
    if let Some(out) = out {
        mv.sigma_tilde = Some(out.matrix(&p, s));
    }
    Ok(mv)
}

/// W_F(ρ) = max{Tr σ̃ : σ̃ ⪯ ρ, σ̃ ∈ cone(F)}.
pub fn weight(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<MonotoneValue> {
    check_dims(rho, f)?;
    let frame = support_frame(rho)?;
    let mut p = ConicProblem::new();
    let (s, full) = framed_variable(&mut p, &frame, f.dim());
    let rho_r = frame.as_ref().map_or(rho, |fr| &fr.rho_r);
    p.add_psd(s.clone(), "positivity");
    p.add_psd(MatExpr::constant(rho_r).sub(&s), "dominated");
    f.add_cone_membership_of_psd(&mut p, &full, "free")?;
    p.maximize(s.trace());
    let out = solve(&p, &opts());
    let (mut mv, out, _) = finish(p, out, "W_F", |v| v.max(0.0))?;
    if let Some(out) = out {
        mv.sigma_tilde = Some(out.eval_mat(&full));
    }
    Ok(mv)
}

/// R_F^F(ρ) = min{Tr σ̃ : σ̃ − ρ ∈ cone(F), σ̃ ∈ cone(F)}.
pub fn standard_robustness(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<MonotoneValue> {
    check_dims(rho, f)?;
    let mut p = ConicProblem::new();
    let (x, _) = f.cone_variable(&mut p, "excess");
    let st = x.clone().add_op(rho);
    f.add_cone_membership(&mut p, &st, "free")?;
    p.minimize(st.trace());
    let out = solve(&p, &opts());
    let (mut mv, out, _) = finish(p, out, "R_F^F", |v| v)?;
    if let Some(out) = out {
        mv.sigma_tilde = Some(out.eval_mat(&st));
    }
    Ok(mv)
}

/// Ω_F(ρ) = min{γ : ρ ⪯ σ̃ ⪯ γρ, σ̃ ∈ cone(F)}, with the dual pair (A, B) for full-rank ρ.
pub fn projective_robustness(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<MonotoneValue> {
    omega_program(rho, f, OmegaKind::Standard)
}

/// Ω_F^F(ρ) = min{γ : σ̃ − ρ ∈ cone(F), σ̃ ⪯ γρ, σ̃ ∈ cone(F)}.
pub fn free_projective_robustness(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<MonotoneValue> {
    omega_program(rho, f, OmegaKind::Free)
}

/// Ω_F(ρ) for an affine theory in its affine-hull form: min{γ : ρ ⪯ X ⪯ γρ, X ∈ span(F)}.
/// For full-rank ρ the duals satisfy ⟨B − A, σ⟩ = 0 for all σ ∈ F.
pub fn projective_robustness_affine(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<MonotoneValue> {
    if !f.is_affine() {
        return Err(Error::Domain(format!("the {} theory is not affine", f.name())));
    }
    omega_program(rho, f, OmegaKind::Affine)
}

#[derive(Clone, Copy, PartialEq)]
enum OmegaKind {
    Standard,
    Free,
    Affine,
}

fn omega_program(rho: &HermitianOperator, f: &FreeSetSpec, kind: OmegaKind) -> Result<MonotoneValue> {
    check_dims(rho, f)?;
    let frame = support_frame(rho)?;
    let rho_r = frame.as_ref().map_or(rho, |fr| &fr.rho_r).clone();
    let mut p = ConicProblem::new();
    let g = p.scalar();
    let (s, full) = framed_variable(&mut p, &frame, f.dim());
    let lower = s.clone().sub_op(&rho_r);
    let ca = p.add_psd(lower.clone(), "lower");
    let cb = p.add_psd(MatExpr::scalar_times(&p.lin(g), &rho_r).sub(&s), "upper");
    match kind {
        OmegaKind::Standard => {
            f.add_cone_membership_of_psd(&mut p, &full, "free")?;
        }
        OmegaKind::Affine => {
            f.add_span_membership(&mut p, &full, "span")?;
        }
        OmegaKind::Free => {
            let excess = match &frame {
                None => lower.clone(),
                Some(fr) => lower.congruence(&fr.v),
            };
            f.add_cone_membership_of_psd(&mut p, &excess, "free excess")?;
            f.add_cone_membership_of_psd(&mut p, &full, "free")?;
        }
    }
    p.minimize(p.lin(g));
    let out = solve(&p, &opts());
    let name = match kind {
        OmegaKind::Standard => "Omega_F",
        OmegaKind::Free => "Omega_F^F",
        OmegaKind::Affine => "Omega_aff",
    };
    let (mut mv, out, _) = finish(p, out, name, |v| v.max(1.0))?;
    if let Some(out) = out {
        mv.sigma_tilde = Some(out.eval_mat(&full));
        if frame.is_none() {
            if let (Some(a), Some(b)) = (out.psd_dual(ca), out.psd_dual(cb)) {
                mv.duals = Some(DualPair { a: a.clone(), b: b.clone() });
            }
        }
    }
    Ok(mv)
}

/// F_F(φ) = max over σ ∈ F of ⟨φ, σ⟩ for a pure φ.
pub fn free_overlap(phi: &HermitianOperator, f: &FreeSetSpec) -> Result<f64> {
    check_dims(phi, f)?;
    if phi.rank(RANK_TOL) != 1 {
        return Err(Error::Domain("target state is not rank one".into()));
    }
    f.max_overlap_with_projector(&phi.scale(1.0 / phi.trace()))
}

/// V_F(ρ) = max over σ ∈ F of ⟨Π_ρ, σ⟩.
pub fn support_overlap(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<f64> {
    check_dims(rho, f)?;
    f.max_overlap_with_projector(&rho.support_projector(rank_tol(rho))?)
}

/// V_aff(ρ): the constant ⟨Π_ρ, σ⟩ on F, or ∞ when it is not constant.
pub fn affine_support_overlap(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<ExtReal> {
    check_dims(rho, f)?;
    let c = f.affine_overlap_constant(&rho.support_projector(rank_tol(rho))?)?;
    Ok(c.map_or(ExtReal::Infinite, ExtReal::Finite))
}

/// The bound chain R_F/W_F ≤ Ω_F ≤ R_F·R_max(σ_R‖ρ) ≤ R_F/λ_min and Ω_F ≤ R_max(ρ‖σ_W)/W_F.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub robustness: ExtReal,
    pub weight: f64,
    pub omega: ExtReal,
    pub lower: ExtReal,
    pub upper_robustness: ExtReal,
    pub upper_eigenvalue: ExtReal,
    pub upper_weight: ExtReal,
}

fn mul(a: ExtReal, b: ExtReal) -> ExtReal {
    match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => ExtReal::Finite(x * y),
        (ExtReal::Finite(x), ExtReal::Infinite) | (ExtReal::Infinite, ExtReal::Finite(x)) if x == 0.0 => {
            ExtReal::Finite(0.0)
        }
        _ => ExtReal::Infinite,
    }
}

fn recip(x: f64) -> ExtReal {
    if x > 0.0 {
        ExtReal::Finite(1.0 / x)
    } else {
        ExtReal::Infinite
    }
}

impl SandwichReport {
    /// Checks the ordering of the chain with relative slack `tol`.
    pub fn is_ordered(&self, tol: f64) -> bool {
        let le = |a: ExtReal, b: ExtReal| match (a, b) {
            (_, ExtReal::Infinite) => true,
            (ExtReal::Infinite, ExtReal::Finite(_)) => false,
            (ExtReal::Finite(x), ExtReal::Finite(y)) => x <= y + tol * y.abs().max(1.0),
        };
        le(self.lower, self.omega)
            && le(self.omega, self.upper_robustness)
            && le(self.upper_robustness, self.upper_eigenvalue)
            && le(self.omega, self.upper_weight)
    }
}

/// Evaluates every member of the bound chain around Ω_F(ρ).
pub fn sandwich_bounds(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<SandwichReport> {
    let r = generalized_robustness(rho, f)?;
    let w = weight(rho, f)?;
    let omega = projective_robustness(rho, f)?.value;
    let wv = w.finite().unwrap_or(0.0);
    let lower = mul(r.value, recip(wv));
    let lmin = rho.min_eigenvalue().max(0.0);
    let upper_eigenvalue = mul(r.value, recip(if lmin > rank_tol(rho) { lmin } else { 0.0 }));
    let upper_robustness = match r.optimal_state() {
        Some(s) => mul(r.value, rmax(&s, rho)?),
        None => ExtReal::Infinite,
    };
    let upper_weight = match w.optimal_state() {
        Some(s) if wv > 0.0 => mul(recip(wv), rmax(rho, &s)?),
        _ => ExtReal::Infinite,
    };
    Ok(SandwichReport {
        robustness: r.value,
        weight: wv,
        omega,
        lower,
        upper_robustness,
        upper_eigenvalue,
        upper_weight,
    })
}

/// Values of several monotones side by side, as printed by the CLI.
pub fn all_values(rho: &HermitianOperator, f: &FreeSetSpec) -> Result<Vec<(&'static str, ExtReal)>> {
    Ok(alloc::vec![
        ("robustness", generalized_robustness(rho, f)?.value),
        ("standard_robustness", standard_robustness(rho, f)?.value),
        ("weight", ExtReal::Finite(weight(rho, f)?.finite().unwrap_or(0.0))),
        ("omega", projective_robustness(rho, f)?.value),
        ("omega_free", free_projective_robustness(rho, f)?.value),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{isotropic, maximally_entangled, maximally_mixed};

    fn ppt() -> FreeSetSpec {
        FreeSetSpec::ppt(&[2, 2]).unwrap()
    }

    #[test]
    fn rmax_examples() {
        let phi = maximally_entangled(2).into_op();
        let mixed = maximally_mixed(4).into_op();
        assert!((rmax(&phi, &phi).unwrap().to_f64() - 1.0).abs() < 1e-9);
        assert!((rmax(&phi, &mixed).unwrap().to_f64() - 4.0).abs() < 1e-9);
        assert_eq!(rmax(&mixed, &phi).unwrap(), ExtReal::Infinite);
        let sdp = rmax_sdp(&phi, &mixed).unwrap();
        assert!((sdp.finite().unwrap() - 4.0).abs() < 1e-7);
    }

    #[test]
    fn isotropic_omega_closed_form() {
        for g in [0.1, 0.3, 0.5] {
            let rho = isotropic(g, 2).unwrap().into_op();
            let om = projective_robustness(&rho, &ppt()).unwrap();
            let want = (4.0 - 3.0 * g) / (3.0 * g);
            assert!((om.finite().unwrap() / want - 1.0).abs() < 1e-6, "γ={g}: {:?}", om.value);
            let d = om.duals.as_ref().unwrap();
            assert!((d.b.inner(&rho) - 1.0).abs() < 1e-6);
            assert!((d.a.inner(&rho) - want).abs() < 1e-5);
        }
    }

    #[test]
    fn pure_entangled_state_has_certified_infinite_omega() {
        let om = projective_robustness(&maximally_entangled(2).into_op(), &ppt()).unwrap();
        assert!(om.is_infinite());
        assert!(om.certificate.as_ref().unwrap().verify(1e-8).valid);
    }

    #[test]
    fn robustness_family_on_bell_state() {
        let phi = maximally_entangled(2).into_op();
        assert!((generalized_robustness(&phi, &ppt()).unwrap().finite().unwrap() - 2.0).abs() < 1e-6);
        assert!((standard_robustness(&phi, &ppt()).unwrap().finite().unwrap() - 2.0).abs() < 1e-6);
        assert!(weight(&phi, &ppt()).unwrap().finite().unwrap() < 1e-6);
    }

    #[test]
    fn coherence_monotones() {
        let f = FreeSetSpec::incoherent(2);
        let plus = crate::states::maximally_coherent(2).into_op();
        assert!(standard_robustness(&plus, &f).unwrap().is_infinite());
        assert!((generalized_robustness(&plus, &f).unwrap().finite().unwrap() - 2.0).abs() < 1e-6);
        assert!(projective_robustness(&plus, &f).unwrap().is_infinite());
        let zero = crate::states::basis_state(2, 0).unwrap().into_op();
        assert!((projective_robustness(&zero, &f).unwrap().finite().unwrap() - 1.0).abs() < 1e-6);
        assert!((weight(&zero, &f).unwrap().finite().unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(rmax_free(&plus, &maximally_mixed(2).into_op(), &f).unwrap().value, ExtReal::Infinite);
    }

    #[test]
    fn rmax_free_under_ppt() {
        let phi = maximally_entangled(2).into_op();
        let sigma = (&HermitianOperator::identity(4) + &phi.scale(2.0)).scale(1.0 / 6.0);
        let v = rmax_free(&phi, &sigma, &ppt()).unwrap();
        assert!((v.finite().unwrap() - 2.0).abs() < 1e-6, "{:?}", v.value);
    }

    #[test]
    fn omega_is_scale_invariant_and_below_free_variant() {
        let rho = isotropic(0.4, 2).unwrap().into_op();
        let a = projective_robustness(&rho, &ppt()).unwrap().finite().unwrap();
        let b = projective_robustness(&rho.scale(7.0), &ppt()).unwrap().finite().unwrap();
        let c = free_projective_robustness(&rho, &ppt()).unwrap().finite().unwrap();
        assert!((a / b - 1.0).abs() < 1e-6);
        assert!(c >= a * (1.0 - 1e-6));
    }

    #[test]
    fn sandwich_chain_is_ordered() {
        let rho = isotropic(0.35, 2).unwrap().into_op();
        let s = sandwich_bounds(&rho, &ppt()).unwrap();
        assert!(s.is_ordered(1e-5), "{s:?}");
    }
}

