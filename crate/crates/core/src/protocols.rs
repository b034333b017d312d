//! Measure-and-prepare maps E(X) = Σᵢ ⟨Mᵢ, X⟩ Pᵢ: construction from dual optimizers,
//! freeness verification, application and the convertibility decision.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::conic::{solve, ConicProblem, MatExpr, SolveOptions, Status};
use crate::distillation::Mode;
use crate::error::{Error, Result};
use crate::free_sets::{FreeSetSpec, Theory};
use crate::monotones::{
    free_projective_robustness, generalized_robustness, projective_robustness, projective_robustness_affine,
    standard_robustness, support_overlap, affine_support_overlap, ExtReal, MonotoneValue,
};
use crate::operator::{c, CMat, HermitianOperator, QuantumState, RANK_TOL};
use crate::random;

/// Violation accepted by freeness and feasibility checks.
pub const FREENESS_TOL: f64 = 1e-7;
/// Relative slack when comparing monotone values.
const ORDER_TOL: f64 = 1e-6;
/// Largest Choi dimension for which the decomposable-positivity solve is attempted.
const MAX_DECOMPOSITION_DIM: usize = 32;
/// Free states drawn by the sampling refutation.
const SAMPLES: usize = 200;

/// How a term of a freeness witness is certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    /// N ∈ cone(F_in)* and Q ∈ cone(F_out).
    Dual,
    /// ⟨N, σ⟩ = 0 on F_in; Q arbitrary.
    Annihilating,
}

/// One term ⟨N, ·⟩ Q of a witness decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessTerm {
    pub kind: TermKind,
    pub effect: HermitianOperator,
    pub output: HermitianOperator,
}

/// A completely positive measure-and-prepare map with PSD effects and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurePrepareMap {
    terms: Vec<(HermitianOperator, HermitianOperator)>,
    din: usize,
    dout: usize,
    witness: Option<Vec<WitnessTerm>>,
}

impl MeasurePrepareMap {
    pub fn new(terms: Vec<(HermitianOperator, HermitianOperator)>, din: usize, dout: usize) -> Result<Self> {
        for (m, p) in &terms {
            if m.dim() != din || p.dim() != dout {
                return Err(Error::Dimension(format!(
                    "term of shape {}→{} in a {din}→{dout} map",
                    m.dim(),
                    p.dim()
                )));
            }
        }
        Ok(Self {
            terms,
            din,
            dout,
            witness: None,
        })
    }

    pub fn zero(din: usize, dout: usize) -> Self {
        Self {
            terms: Vec::new(),
            din,
            dout,
            witness: Some(Vec::new()),
        }
    }

    /// The identity channel as Σₖ ⟨Gₖ, X⟩ Gₖ over an orthonormal Hermitian basis.
    pub fn identity(d: usize) -> Self {
        let basis = hermitian_basis(d);
        Self {
            terms: basis.iter().map(|g| (g.clone(), g.clone())).collect(),
            din: d,
            dout: d,
            witness: None,
        }
    }

    /// Attaches a structural witness; verified against the map by [`verify_free`].
    pub fn with_witness(mut self, witness: Vec<WitnessTerm>) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn terms(&self) -> &[(HermitianOperator, HermitianOperator)] {
        &self.terms
    }

    pub fn witness(&self) -> Option<&[WitnessTerm]> {
        self.witness.as_deref()
    }

    pub fn input_dim(&self) -> usize {
        self.din
    }

    pub fn output_dim(&self) -> usize {
        self.dout
    }

    pub fn apply(&self, x: &HermitianOperator) -> HermitianOperator {
        let mut acc = HermitianOperator::zeros(self.dout);
        for (m, p) in &self.terms {
            acc = &acc + &p.scale(m.inner(x));
        }
        acc
    }

    /// J = Σᵢ Mᵢᵀ ⊗ Pᵢ, input factor first.
    pub fn choi(&self) -> HermitianOperator {
        choi_of(self.terms.iter().map(|(m, p)| (m, p)), self.din, self.dout)
    }

    /// Σᵢ Tr(Pᵢ) Mᵢ; the map is trace non-increasing iff this is ⪯ I.
    pub fn trace_effect(&self) -> HermitianOperator {
        let mut acc = HermitianOperator::zeros(self.din);
        for (m, p) in &self.terms {
            acc = &acc + &m.scale(p.trace());
        }
        acc
    }

    /// max over states ω of Tr E(ω).
    pub fn max_trace(&self) -> f64 {
        self.trace_effect().max_eigenvalue()
    }

    /// Divides every output by `s`; the witness is rescaled alongside.
    pub fn scaled(mut self, s: f64) -> Self {
        for (_, p) in &mut self.terms {
            *p = p.scale(s);
        }
        if let Some(w) = &mut self.witness {
            for t in w {
                t.output = t.output.scale(s);
            }
        }
        self
    }

    /// E / max_ω Tr E(ω), so that the largest success probability is one.
    pub fn normalized(self) -> Self {
        let m = self.max_trace();
        if m > 0.0 {
            self.scaled(1.0 / m)
        } else {
            self
        }
    }
}

fn choi_of<'a>(
    terms: impl Iterator<Item = (&'a HermitianOperator, &'a HermitianOperator)>,
    din: usize,
    dout: usize,
) -> HermitianOperator {
    let mut acc = HermitianOperator::zeros(din * dout);
    for (m, p) in terms {
        acc = &acc + &m.transpose().tensor(p);
    }
    acc
}

fn hermitian_basis(d: usize) -> Vec<HermitianOperator> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(HermitianOperator::basis_projector(d, i));
        for j in i + 1..d {
            let mut re = CMat::zeros(d, d);
            re[(i, j)] = c(s, 0.0);
            re[(j, i)] = c(s, 0.0);
            out.push(HermitianOperator::new(re).expect("square"));
            let mut im = CMat::zeros(d, d);
            im[(i, j)] = c(0.0, -s);
            im[(j, i)] = c(0.0, s);
            out.push(HermitianOperator::new(im).expect("square"));
        }
    }
    out
}

/// Hermitian basis of span(F) for the theories with a simple description.
fn span_basis(f: &FreeSetSpec) -> Vec<HermitianOperator> {
    let d = f.dim();
    match f.theory() {
        Theory::Incoherent => (0..d).map(|i| HermitianOperator::basis_projector(d, i)).collect(),
        Theory::Real => hermitian_basis(d).into_iter().filter(|g| g.is_real(0.0)).collect(),
        Theory::Ppt { .. } => hermitian_basis(d),
        Theory::SingleState(s) => vec![s.clone()],
        Theory::Polytope(v) => v.clone(),
    }
}

/// Extreme rays of cone(F) when there are finitely many.
fn extreme_rays(f: &FreeSetSpec) -> Option<Vec<HermitianOperator>> {
    match f.theory() {
        Theory::Incoherent => Some((0..f.dim()).map(|i| HermitianOperator::basis_projector(f.dim(), i)).collect()),
        _ => f.generators().map(<[HermitianOperator]>::to_vec),
    }
}

/// Method that produced a freeness verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreenessMethod {
    /// Structural decomposition into dual-cone effects and free outputs.
    DualConeWitness,
    /// Direct check of E on every extreme ray of cone(F_in).
    GeneratorCheck,
    /// J = J₁ + Γ(J₂) with J₁, J₂ ⪰ 0 for the PSD and partial-transpose outputs.
    DecomposablePositivity,
    /// Refutation only: E applied to sampled and extremal free states.
    Sampling,
}

/// Outcome of [`verify_free`].
#[derive(Debug, Clone)]
pub struct FreenessCertificate {
    pub method: FreenessMethod,
    pub passed: bool,
    pub max_violation: f64,
    /// A free input whose image leaves cone(F_out), when one was found.
    pub offending: Option<HermitianOperator>,
    pub detail: String,
}

fn rel(x: f64, scale: f64) -> f64 {
    x / scale.max(1.0)
}

fn check_witness(
    map: &MeasurePrepareMap,
    witness: &[WitnessTerm],
    f_in: &FreeSetSpec,
    f_out: &FreeSetSpec,
) -> Result<(f64, String)> {
    let j = map.choi();
    let jw = choi_of(witness.iter().map(|t| (&t.effect, &t.output)), map.din, map.dout);
    let mut worst = rel((&j - &jw).frobenius_norm(), j.frobenius_norm());
    let mut what = String::from("witness reproduces the map");
    for (k, t) in witness.iter().enumerate() {
        let (v, label) = match t.kind {
            TermKind::Dual => {
                let a = rel(f_in.dual_violation(&t.effect)?, t.effect.op_norm());
                let b = rel(f_out.cone_violation(&t.output)?, t.output.op_norm());
                if a >= b {
                    (a, "effect outside the dual cone")
                } else {
                    (b, "output outside cone(F)")
                }
            }
            TermKind::Annihilating => (
                rel(f_in.span_residual(&t.effect)?, t.effect.op_norm()),
                "effect not orthogonal to F",
            ),
        };
        if v > worst {
            worst = v;
            what = format!("term {k}: {label}");
        }
    }
    Ok((worst, what))
}

/// Input-side transposition masks under which cone(F_in) is PSD, plus the output-side masks
/// whose images must be PSD; `None` when the pair has no decomposable description.
fn decomposition_masks(f_in: &FreeSetSpec, f_out: &FreeSetSpec) -> Option<(Vec<usize>, Vec<bool>, Vec<Vec<bool>>)> {
    let (din_dims, in_mask) = match f_in.theory() {
        Theory::Ppt { bipartition, transposed } => (bipartition.clone(), transposed.clone()),
        Theory::Real => (vec![f_in.dim()], vec![true]),
        _ => return None,
    };
    let (dout_dims, out_mask) = match f_out.theory() {
        Theory::Ppt { bipartition, transposed } => (bipartition.clone(), Some(transposed.clone())),
        Theory::Real => (vec![f_out.dim()], None),
        _ => return None,
    };
    let dims: Vec<usize> = din_dims.iter().chain(&dout_dims).copied().collect();
    let input: Vec<bool> = in_mask.iter().copied().chain(dout_dims.iter().map(|_| false)).collect();
    let mut outputs = vec![vec![false; dims.len()]];
    if let Some(m) = out_mask {
        outputs.push(din_dims.iter().map(|_| false).chain(m).collect());
    }
    Some((dims, input, outputs))
}

/// Smallest s with J' = J₁ + Γ_in(J₂), J₁ + sI ⪰ 0, J₂ + sI ⪰ 0 for every output twist J'.
fn decomposable_violation(map: &MeasurePrepareMap, dims: &[usize], input: &[bool], outputs: &[Vec<bool>]) -> Result<f64> {
    let j = map.choi();
    let n = j.dim();
    let mut worst = 0.0f64;
    for mask in outputs {
        let jt = crate::operator::partial_transpose_mask(&j, dims, mask)?;
        let mut p = ConicProblem::new();
        let s = p.scalar();
        let v1 = p.hermitian(n);
        let v2 = p.hermitian(n);
        let si = MatExpr::scalar_times(&p.lin(s), &HermitianOperator::identity(n));
        let (m1, m2) = (p.mat(v1), p.mat(v2));
        p.add_psd(m1.clone().add(&si), "J1");
        p.add_psd(m2.clone().add(&si), "J2");
        let sum = m1.add(&m2.partial_transpose(dims, input)?).sub_op(&jt);
        p.add_eq_matrix(&sum, "decomposition");
        p.minimize(p.lin(s));
        let out = solve(&p, &SolveOptions::configured());
        if out.status != Status::Optimal {
            return Err(Error::Solver(format!("decomposition solve ended with {}", out.status.as_str())));
        }
        worst = worst.max(rel(out.value.expect("optimal").max(0.0), j.op_norm()));
    }
    Ok(worst)
}

/// Imaginary part of E on a real spanning set of the input; zero iff outputs stay real.
fn realness_violation(map: &MeasurePrepareMap, f_in: &FreeSetSpec) -> f64 {
    span_basis(f_in)
        .iter()
        .map(|g| map.apply(g).max_imag())
        .fold(0.0, f64::max)
}

fn sample_refutation(map: &MeasurePrepareMap, f_in: &FreeSetSpec, f_out: &FreeSetSpec) -> Result<(f64, Option<HermitianOperator>)> {
    let mut rng = random::rng(0x5eed);
    let mut candidates = vec![f_in.reference_state()];
    if let Some(r) = extreme_rays(f_in) {
        candidates.extend(r);
    }
    for _ in 0..SAMPLES {
        candidates.push(random::free_state(&mut rng, f_in)?.into_op());
    }
    let mut worst = (0.0f64, None);
    for s in candidates {
        let v = f_out.cone_violation(&map.apply(&s))?;
        if v > worst.0 {
            worst = (v, Some(s));
        }
    }
    Ok(worst)
}

/// Certifies E(cone(F_in)) ⊆ cone(F_out), or refutes it with an offending free input.
pub fn verify_free(map: &MeasurePrepareMap, f_in: &FreeSetSpec, f_out: &FreeSetSpec) -> Result<FreenessCertificate> {
    if map.din != f_in.dim() || map.dout != f_out.dim() {
        return Err(Error::Dimension(format!(
            "{}→{} map checked against free sets of dimensions {} and {}",
            map.din,
            map.dout,
            f_in.dim(),
            f_out.dim()
        )));
    }
    let pass = |method, v: f64, detail: String| FreenessCertificate {
        method,
        passed: v <= FREENESS_TOL,
        max_violation: v,
        offending: None,
        detail,
    };
    if let Some(w) = map.witness() {
        let (v, detail) = check_witness(map, w, f_in, f_out)?;
        if v <= FREENESS_TOL {
            return Ok(pass(FreenessMethod::DualConeWitness, v, detail));
        }
    }
    if let Some(rays) = extreme_rays(f_in) {
        let mut worst = (0.0f64, None);
        for g in rays {
            let g = g.scale(1.0 / g.trace());
            let v = f_out.cone_violation(&map.apply(&g))?;
            if v > worst.0 {
                worst = (v, Some(g));
            }
        }
        let mut cert = pass(FreenessMethod::GeneratorCheck, worst.0, "image of every extreme ray".into());
        cert.offending = if cert.passed { None } else { worst.1 };
        return Ok(cert);
    }
    let own: Vec<WitnessTerm> = map
        .terms
        .iter()
        .map(|(m, p)| WitnessTerm {
            kind: TermKind::Dual,
            effect: m.clone(),
            output: p.clone(),
        })
        .collect();
    let (v, detail) = check_witness(map, &own, f_in, f_out)?;
    if v <= FREENESS_TOL {
        return Ok(pass(FreenessMethod::DualConeWitness, v, detail));
    }
    let (sv, offending) = sample_refutation(map, f_in, f_out)?;
    if sv > FREENESS_TOL {
        return Ok(FreenessCertificate {
            method: FreenessMethod::Sampling,
            passed: false,
            max_violation: sv,
            offending,
            detail: "free input mapped outside cone(F)".into(),
        });
    }
    if let Some((dims, input, outputs)) = decomposition_masks(f_in, f_out) {
        if map.din * map.dout <= MAX_DECOMPOSITION_DIM {
            let mut v = decomposable_violation(map, &dims, &input, &outputs)?;
            if matches!(f_out.theory(), Theory::Real) {
                v = v.max(realness_violation(map, f_in));
            }
            return Ok(pass(FreenessMethod::DecomposablePositivity, v, "decomposable positivity".into()));
        }
    }
    Ok(FreenessCertificate {
        method: FreenessMethod::Sampling,
        passed: false,
        max_violation: sv,
        offending: None,
        detail: "no structural certificate found; sampling found no violation".into(),
    })
}

/// Tr E(ρ) and the normalized output, which is `None` below 1e-12.
pub fn apply_map(map: &MeasurePrepareMap, rho: &HermitianOperator) -> Result<(f64, Option<QuantumState>)> {
    if rho.dim() != map.din {
        return Err(Error::Dimension(format!("state of dimension {} fed to a {}-dim map", rho.dim(), map.din)));
    }
    let out = map.apply(rho);
    let p = out.trace();
    if p <= 1e-12 {
        return Ok((p.max(0.0), None));
    }
    Ok((p, Some(QuantumState::with_tol(out.scale(1.0 / p), 1e-7)?)))
}

/// Largest violation of 0 ⪯ W ⪯ Z ⪯ I.
fn effect_violation(w: &HermitianOperator, z: &HermitianOperator) -> f64 {
    let d = w.dim();
    let zw = z - w;
    let iz = &HermitianOperator::identity(d) - z;
    [w.min_eigenvalue(), zw.min_eigenvalue(), iz.min_eigenvalue()]
        .into_iter()
        .fold(0.0f64, |a, e| a.max(-e))
}

/// E(X) = ⟨W,X⟩φ + ⟨Z−W,X⟩(λσ−φ)/(λ−1), λ = R_F^F(φ) (general) or R_F(φ) (affine), from a
/// feasible effect pair at t = λ. For λ = ∞ the map is E(X) = ⟨W,X⟩φ.
pub fn build_distillation_map(
    w: &HermitianOperator,
    z: &HermitianOperator,
    phi: &HermitianOperator,
    f_in: &FreeSetSpec,
    f_out: &FreeSetSpec,
    mode: Mode,
) -> Result<MeasurePrepareMap> {
    let (din, dout) = (f_in.dim(), f_out.dim());
    if w.dim() != din || z.dim() != din || phi.dim() != dout {
        return Err(Error::Dimension("effects or target do not match the free sets".into()));
    }
    let ev = effect_violation(w, z);
    if ev > FREENESS_TOL {
        return Err(Error::Certificate(format!("effects violate 0 ⪯ W ⪯ Z ⪯ I by {ev:e}")));
    }
    let mv = match mode {
        Mode::General => standard_robustness(phi, f_out)?,
        Mode::Affine => generalized_robustness(phi, f_out)?,
    };
    let lambda = match mv.value {
        ExtReal::Infinite => {
            let v = rel(f_in.max_overlap(w)?.max(0.0), w.op_norm());
            if v > FREENESS_TOL {
                return Err(Error::Certificate(format!("⟨W,σ⟩ reaches {v:e} on F at t = ∞")));
            }
            let term = WitnessTerm {
                kind: TermKind::Annihilating,
                effect: w.clone(),
                output: phi.clone(),
            };
            return Ok(MeasurePrepareMap::new(vec![(w.clone(), phi.clone())], din, dout)?.with_witness(vec![term]));
        }
        ExtReal::Finite(l) if l > 1.0 + 1e-9 => l,
        ExtReal::Finite(_) => return Err(Error::Domain("target state is free".into())),
    };
    let sigma = mv.optimal_state().expect("finite robustness has an optimizer");
    let comp = &sigma.scale(lambda) - phi;
    // Z/λ − W ∈ cone(F)* (general) or ⊥ span F (affine)
    let slack = &z.scale(1.0 / lambda) - w;
    let v = match mode {
        Mode::General => f_in.dual_violation(&slack)?,
        Mode::Affine => f_in.span_residual(&slack)?,
    };
    if rel(v, slack.op_norm()) > FREENESS_TOL {
        return Err(Error::Certificate(format!("effects violate the free-set constraint at t = {lambda} by {v:e}")));
    }
    let terms = vec![(w.clone(), phi.clone()), (z - w, comp.scale(1.0 / (lambda - 1.0)))];
    let kind = match mode {
        Mode::General => TermKind::Dual,
        Mode::Affine => TermKind::Annihilating,
    };
    let witness = vec![
        WitnessTerm {
            kind: TermKind::Dual,
            effect: w.scale(lambda),
            output: sigma,
        },
        WitnessTerm {
            kind,
            effect: slack.scale(lambda / (lambda - 1.0)),
            output: comp,
        },
    ];
    Ok(MeasurePrepareMap::new(terms, din, dout)?.with_witness(witness))
}

/// Which constructive branch produced a conversion map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConversionBranch {
    /// ∞ > Ω(ρ) ≥ Ω(ρ′) (affine) or Ω^F(ρ′) (general), duals attained.
    FiniteOmega,
    /// Ω(ρ) = ∞ with R(ρ′) < ∞, duals from the support projector.
    InfiniteOmega,
    /// R_F(ρ) = ∞: measure the complement of the free support.
    OutsideFreeSupport,
}

/// A conversion that exists only with vanishing probability, or whose duals are not attained.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFlag {
    pub reason: String,
}

/// Result of [`build_conversion_map`].
#[derive(Debug, Clone)]
pub enum ConversionOutcome {
    Map {
        map: MeasurePrepareMap,
        branch: ConversionBranch,
        probability: f64,
    },
    Asymptotic(AsymptoticFlag),
}

fn ge(a: ExtReal, b: ExtReal) -> bool {
    match (a, b) {
        (ExtReal::Infinite, _) => true,
        (ExtReal::Finite(_), ExtReal::Infinite) => false,
        (ExtReal::Finite(x), ExtReal::Finite(y)) => x >= y * (1.0 - ORDER_TOL),
    }
}

/// The factor k with kρ′ ⪯ λσ′ and σ′ ⪯ μkρ′ given λ′μ′ ≤ λμ.
fn rescale_factor(lambda: f64, mu: f64, lp: f64, mp: f64) -> f64 {
    if lambda >= lp && mu >= mp {
        1.0
    } else if mu < mp {
        lambda / lp
    } else {
        mp / mu
    }
}

fn no_go(a: ExtReal, b: ExtReal) -> Error {
    Error::NoGo {
        omega_rho: a.to_f64(),
        omega_target: b.to_f64(),
    }
}

/// Projector onto the orthogonal complement of the joint support of F.
fn free_support_complement(f: &FreeSetSpec) -> Result<HermitianOperator> {
    let s = f.reference_state().support_projector(RANK_TOL)?;
    Ok(&HermitianOperator::identity(f.dim()) - &s)
}

fn finish_map(map: MeasurePrepareMap, branch: ConversionBranch, rho: &HermitianOperator) -> ConversionOutcome {
    let map = map.normalized();
    let probability = map.apply(rho).trace();
    ConversionOutcome::Map { map, branch, probability }
}

/// Free map with E(ρ) ∝ ρ′ following the constructive conversion theorems, rescaled to
/// max_ω Tr E(ω) = 1; an [`AsymptoticFlag`] when the dual optimizers are not attained.
pub fn build_conversion_map(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    target: &HermitianOperator,
    f_out: &FreeSetSpec,
    mode: Mode,
) -> Result<ConversionOutcome> {
    if mode == Mode::Affine && !(f_in.is_affine() && f_out.is_affine()) {
        return Err(Error::Domain("affine construction requested for a non-affine theory".into()));
    }
    let (din, dout) = (f_in.dim(), f_out.dim());
    let r_in = generalized_robustness(rho, f_in)?;
    // (iii) some part of ρ lies outside every free support
    if r_in.is_infinite() {
        let pi = free_support_complement(f_in)?;
        let map = MeasurePrepareMap::new(vec![(pi.clone(), target.clone())], din, dout)?.with_witness(vec![WitnessTerm {
            kind: TermKind::Annihilating,
            effect: pi,
            output: target.clone(),
        }]);
        return Ok(finish_map(map, ConversionBranch::OutsideFreeSupport, rho));
    }
    let om = match mode {
        Mode::General => projective_robustness(rho, f_in)?,
        Mode::Affine => projective_robustness_affine(rho, f_in)?,
    };
    let target_mv = match mode {
        Mode::General => free_projective_robustness(target, f_out)?,
        Mode::Affine => projective_robustness(target, f_out)?,
    };
    if !ge(om.value, target_mv.value) {
        return Err(no_go(om.value, target_mv.value));
    }
    let dual_kind = match mode {
        Mode::General => TermKind::Dual,
        Mode::Affine => TermKind::Annihilating,
    };
    match om.value {
        ExtReal::Finite(_) => finite_branch(rho, &om, target, &target_mv, din, dout, dual_kind),
        ExtReal::Infinite => infinite_branch(rho, f_in, target, f_out, mode, din, dout),
    }
}

fn finite_branch(
    rho: &HermitianOperator,
    om: &MonotoneValue,
    target: &HermitianOperator,
    target_mv: &MonotoneValue,
    din: usize,
    dout: usize,
    dual_kind: TermKind,
) -> Result<ConversionOutcome> {
    let Some(duals) = &om.duals else {
        return Ok(ConversionOutcome::Asymptotic(AsymptoticFlag {
            reason: "dual optimizers of Omega(rho) are not attained (rank-deficient input)".into(),
        }));
    };
    let (_, lambda, mu) = om.lambda_mu().expect("finite value has an optimizer");
    let (sp, lp, mp) = target_mv.lambda_mu().expect("finite target value has an optimizer");
    let norm = duals.a.op_norm().max(duals.b.op_norm());
    if norm > 1e6 {
        return Ok(ConversionOutcome::Asymptotic(AsymptoticFlag {
            reason: format!("dual optimizer norm {norm:e} diverges"),
        }));
    }
    if lambda * mu <= 1.0 + 1e-9 {
        // free input: only a free (or equally free) target is reachable, prepare σ′ directly
        let map = MeasurePrepareMap::new(vec![(HermitianOperator::identity(din), sp.clone())], din, dout)?;
        return Ok(finish_map(map, ConversionBranch::FiniteOmega, rho));
    }
    let k = rescale_factor(lambda, mu, lp, mp);
    let rpp = target.scale(k);
    let p1 = &sp.scale(lambda) - &rpp;
    let p2 = &rpp - &sp.scale(1.0 / mu);
    let (a, b) = (&duals.a, &duals.b);
    let terms = vec![(b.clone(), p1.clone()), (a.clone(), p2)];
    let witness = vec![
        WitnessTerm {
            kind: dual_kind,
            effect: b - a,
            output: p1,
        },
        WitnessTerm {
            kind: TermKind::Dual,
            effect: a.clone(),
            output: sp.scale(lambda - 1.0 / mu),
        },
    ];
    let map = MeasurePrepareMap::new(terms, din, dout)?.with_witness(witness);
    Ok(finish_map(map, ConversionBranch::FiniteOmega, rho))
}

fn infinite_branch(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    target: &HermitianOperator,
    f_out: &FreeSetSpec,
    mode: Mode,
    din: usize,
    dout: usize,
) -> Result<ConversionOutcome> {
    let zeta = support_overlap(rho, f_in)?;
    if zeta >= 1.0 - 1e-9 {
        return Ok(ConversionOutcome::Asymptotic(AsymptoticFlag {
            reason: "a free state is supported inside supp rho; dual optimizers of 1/Omega need not be attained".into(),
        }));
    }
    // Effects A = ζ/(1−ζ)(I − Π_ρ), B = Π_ρ; affine mode needs ⟨Π_ρ, σ⟩ constant on F.
    let (zeta, kind) = match (mode, affine_support_overlap(rho, f_in)?) {
        (Mode::Affine, ExtReal::Finite(c)) => (c, TermKind::Annihilating),
        _ => (zeta, TermKind::Dual),
    };
    let lp_mv = match kind {
        TermKind::Annihilating => generalized_robustness(target, f_out)?,
        TermKind::Dual => standard_robustness(target, f_out)?,
    };
    let ExtReal::Finite(lp) = lp_mv.value else {
        return Ok(ConversionOutcome::Asymptotic(AsymptoticFlag {
            reason: "the target robustness is infinite".into(),
        }));
    };
    let sp = lp_mv.optimal_state().expect("finite robustness has an optimizer");
    let pi = rho.support_projector(RANK_TOL * rho.op_norm().max(1.0))?;
    let a = (&HermitianOperator::identity(din) - &pi).scale(zeta / (1.0 - zeta));
    let p1 = &sp.scale(lp) - target;
    let terms = vec![(a.clone(), p1.clone()), (pi.clone(), target.clone())];
    let witness = vec![
        WitnessTerm {
            kind,
            effect: &a - &pi,
            output: p1,
        },
        WitnessTerm {
            kind: TermKind::Dual,
            effect: pi,
            output: sp.scale(lp),
        },
    ];
    let map = MeasurePrepareMap::new(terms, din, dout)?.with_witness(witness);
    Ok(finish_map(map, ConversionBranch::InfiniteOmega, rho))
}

/// Verdict of [`convertibility_decision`].
#[derive(Debug, Clone)]
pub enum Verdict {
    YesWithMap(MeasurePrepareMap),
    YesAsymptotic(AsymptoticFlag),
    No,
    Undecided,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::YesWithMap(_) => "yes (explicit map)",
            Verdict::YesAsymptotic(_) => "yes (asymptotic)",
            Verdict::No => "no",
            Verdict::Undecided => "undecided",
        }
    }
}

/// Verdict with the monotone values behind it.
#[derive(Debug, Clone)]
pub struct Decision {
    pub verdict: Verdict,
    pub omega_rho: ExtReal,
    pub omega_target: ExtReal,
    pub free_omega_rho: Option<ExtReal>,
    pub free_omega_target: Option<ExtReal>,
    pub reason: String,
}

/// Decides ρ → ρ′ under probabilistic free operations.
pub fn convertibility_decision(
    rho: &HermitianOperator,
    f_in: &FreeSetSpec,
    target: &HermitianOperator,
    f_out: &FreeSetSpec,
    class: Mode,
) -> Result<Decision> {
    let class = if f_in.is_affine() && f_out.is_affine() { class } else { Mode::General };
    let o_rho = projective_robustness(rho, f_in)?.value;
    let o_tgt = projective_robustness(target, f_out)?.value;
    let mut d = Decision {
        verdict: Verdict::Undecided,
        omega_rho: o_rho,
        omega_target: o_tgt,
        free_omega_rho: None,
        free_omega_target: None,
        reason: String::new(),
    };
    if !ge(o_rho, o_tgt) {
        d.verdict = Verdict::No;
        d.reason = "Omega decreases under free operations".into();
        return Ok(d);
    }
    if class == Mode::General {
        let fr = free_projective_robustness(rho, f_in)?.value;
        let ft = free_projective_robustness(target, f_out)?.value;
        d.free_omega_rho = Some(fr);
        d.free_omega_target = Some(ft);
        if !ge(fr, ft) {
            d.verdict = Verdict::No;
            d.reason = "Omega^F decreases under free operations".into();
            return Ok(d);
        }
    }
    let r_rho = generalized_robustness(rho, f_in)?.value;
    let r_tgt = match class {
        Mode::Affine => generalized_robustness(target, f_out)?.value,
        Mode::General => standard_robustness(target, f_out)?.value,
    };
    let sufficient = if !r_rho.is_finite() {
        Some("R_F(rho) is infinite")
    } else if !o_rho.is_finite() && r_tgt.is_finite() {
        Some("Omega(rho) is infinite and the target robustness is finite")
    } else if o_rho.is_finite() {
        let needed = match class {
            Mode::Affine => o_tgt,
            Mode::General => d.free_omega_target.expect("computed above"),
        };
        ge(o_rho, needed).then_some("Omega(rho) dominates the target")
    } else {
        None
    };
    let Some(why) = sufficient else {
        d.reason = "Omega(rho') <= Omega(rho) < Omega^F(rho')".into();
        return Ok(d);
    };
    d.reason = why.into();
    d.verdict = match build_conversion_map(rho, f_in, target, f_out, class)? {
        ConversionOutcome::Map { map, .. } => Verdict::YesWithMap(map),
        ConversionOutcome::Asymptotic(flag) => Verdict::YesAsymptotic(flag),
    };
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distillation::{solve_theta_p, target_robustness};
    use crate::free_sets::Threshold;
    use crate::operator::pure_target_fidelity;
    use crate::states::{isotropic, maximally_entangled, schmidt_state};

    fn ppt() -> FreeSetSpec {
        FreeSetSpec::ppt(&[2, 2]).unwrap()
    }

    #[test]
    fn identity_and_projection_maps() {
        let f = ppt();
        let id = MeasurePrepareMap::identity(4);
        let rho = isotropic(0.3, 2).unwrap().into_op();
        assert!((&id.apply(&rho) - &rho).max_abs() < 1e-12);
        let cert = verify_free(&id, &f, &f).unwrap();
        assert!(cert.passed, "{cert:?}");
        let phi = maximally_entangled(2).into_op();
        let bad = MeasurePrepareMap::new(vec![(phi.clone(), phi)], 4, 4).unwrap();
        let cert = verify_free(&bad, &f, &f).unwrap();
        assert!(!cert.passed && cert.max_violation > 1e-3);
        let (p, out) = apply_map(&MeasurePrepareMap::zero(4, 4), &rho).unwrap();
        assert!(p == 0.0 && out.is_none());
    }

    #[test]
    fn distillation_map_round_trip() {
        let f = ppt();
        let phi = maximally_entangled(2).into_op();
        let rho = isotropic(0.4, 2).unwrap().into_op();
        let t = match target_robustness(&phi, &f, Mode::General).unwrap() {
            ExtReal::Finite(x) => Threshold::Finite(x),
            ExtReal::Infinite => Threshold::Infinite,
        };
        let sol = solve_theta_p(&rho, &f, 1.0, t, Mode::General).unwrap();
        let map = build_distillation_map(&sol.w, &sol.z, &phi, &f, &f, Mode::General).unwrap();
        let cert = verify_free(&map, &f, &f).unwrap();
        assert!(cert.passed && cert.method == FreenessMethod::DualConeWitness, "{cert:?}");
        let (p, out) = apply_map(&map, &rho).unwrap();
        let fid = pure_target_fidelity(out.unwrap().op(), &phi).unwrap();
        assert!((p - 1.0).abs() < 1e-6 && (fid - 0.7).abs() < 1e-6, "{p} {fid}");
    }

    #[test]
    fn pure_states_interconvert() {
        let f = ppt();
        let psi = schmidt_state(&[0.9f64.sqrt(), 0.1f64.sqrt()]).unwrap().into_op();
        let phi = maximally_entangled(2).into_op();
        let ConversionOutcome::Map { map, branch, probability } =
            build_conversion_map(&psi, &f, &phi, &f, Mode::General).unwrap()
        else {
            panic!("expected a map");
        };
        assert_eq!(branch, ConversionBranch::InfiniteOmega);
        assert!(probability > 1e-3);
        assert!(verify_free(&map, &f, &f).unwrap().passed);
        let (_, out) = apply_map(&map, &psi).unwrap();
        assert!((out.unwrap().op() - &phi).max_abs() < 1e-6);
    }

    #[test]
    fn decisions() {
        let f = ppt();
        let a = isotropic(0.4, 2).unwrap().into_op();
        let b = isotropic(0.2, 2).unwrap().into_op();
        let no = convertibility_decision(&a, &f, &b, &f, Mode::General).unwrap();
        assert!(matches!(no.verdict, Verdict::No));
        let yes = convertibility_decision(&b, &f, &a, &f, Mode::General).unwrap();
        let Verdict::YesWithMap(map) = yes.verdict else {
            panic!("{:?}", yes.verdict)
        };
        assert!(verify_free(&map, &f, &f).unwrap().passed);
        let (_, out) = apply_map(&map, &b).unwrap();
        assert!((out.unwrap().op() - &a).max_abs() < 1e-6);
        let free = isotropic(0.9, 2).unwrap().into_op();
        let d = convertibility_decision(&free, &f, &a, &f, Mode::General).unwrap();
        assert!(matches!(d.verdict, Verdict::No));
    }
}
