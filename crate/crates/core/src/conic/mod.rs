//! A dense conic solver for linear objectives over scalar, real-symmetric and Hermitian
//! variables with equality, nonnegativity and PSD constraints.
//!
//! Problems are built with [`ConicProblem`] and solved by [`solve`]. Infeasible and
//! unbounded problems return certificates which [`verify_farkas`] and [`verify_ray`]
//! check without re-running the solver.

mod cone;
mod ipm;
mod model;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DVector;

pub use model::{ConicProblem, ConstraintId, LinExpr, MatExpr, Sense, VarId, VarKind};

use crate::error::{Error, Result};
use crate::operator::HermitianOperator;
use model::{block_to_hermitian, ConstraintKind, Located, StandardForm};

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iter: usize,
    /// Allow the undoubled real-symmetric path when the problem is conjugation invariant.
    pub real_fast_path: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_gap: 1e-8,
            tol_feas: 1e-8,
            max_iter: 200,
            real_fast_path: true,
        }
    }
}

static TOL_GAP: AtomicU64 = AtomicU64::new(0);
static TOL_FEAS: AtomicU64 = AtomicU64::new(0);
static MAX_ITER: AtomicU64 = AtomicU64::new(0);

impl SolveOptions {
    /// Options used by the library's own solves: the defaults unless [`SolveOptions::configure`]
    /// has replaced them.
    pub fn configured() -> Self {
        let mut o = Self::default();
        let g = TOL_GAP.load(Ordering::Relaxed);
        let f = TOL_FEAS.load(Ordering::Relaxed);
        let m = MAX_ITER.load(Ordering::Relaxed);
        if g != 0 {
            o.tol_gap = f64::from_bits(g);
        }
        if f != 0 {
            o.tol_feas = f64::from_bits(f);
        }
        if m != 0 {
            o.max_iter = m as usize;
        }
        o
    }

    /// Replaces the process-wide options returned by [`SolveOptions::configured`].
    pub fn configure(self) {
        TOL_GAP.store(self.tol_gap.to_bits(), Ordering::Relaxed);
        TOL_FEAS.store(self.tol_feas.to_bits(), Ordering::Relaxed);
        MAX_ITER.store(self.max_iter as u64, Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    /// The primal is unbounded (its dual is infeasible).
    DualInfeasible,
    NumericalTrouble,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::PrimalInfeasible => "primal_infeasible",
            Status::DualInfeasible => "dual_infeasible",
            Status::NumericalTrouble => "numerical_trouble",
        }
    }
}

/// Multiplier attached to one constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintDual {
    /// One multiplier per equality row.
    Eq(Vec<f64>),
    NonNeg(f64),
    /// Hermitian multiplier Z ⪰ 0 pairing with the constrained matrix via ⟨Z, M⟩.
    Psd(HermitianOperator),
}

/// Farkas witness (y, z) for `Ax = b, Gx + s = h, s ∈ K`, normalized to b'y + h'z = −1,
/// with z ∈ K and A'y + G'z ≈ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasWitness {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub real: bool,
}

/// Improving ray x with c'x = −1, Ax ≈ 0, Gx ∈ −K.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovingRay {
    pub x: Vec<f64>,
    pub real: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Farkas(FarkasWitness),
    Ray(ImprovingRay),
}

/// Outcome of a solve.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: Status,
    /// Objective value in the problem's own sense; `None` unless optimal.
    pub value: Option<f64>,
    /// Dual objective value in the problem's own sense; `None` unless optimal.
    pub dual_value: Option<f64>,
    pub iterations: usize,
    /// Relative duality gap at termination.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub certificate: Option<Certificate>,
    params: Vec<f64>,
    duals: Vec<Option<ConstraintDual>>,
}

impl SolveOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Value of a scalar variable.
    pub fn scalar(&self, p: &ConicProblem, v: VarId) -> f64 {
        p.lin(v).eval(&self.params)
    }

    /// Value of a matrix variable.
    pub fn matrix(&self, p: &ConicProblem, v: VarId) -> HermitianOperator {
        p.mat(v).eval(&self.params)
    }

    /// Evaluates an arbitrary expression at the primal point.
    pub fn eval_mat(&self, e: &MatExpr) -> HermitianOperator {
        e.eval(&self.params)
    }

    pub fn eval_lin(&self, e: &LinExpr) -> f64 {
        e.eval(&self.params)
    }

    pub fn dual(&self, id: ConstraintId) -> Option<&ConstraintDual> {
        self.duals.get(id.0).and_then(|d| d.as_ref())
    }

    /// Hermitian multiplier of a PSD constraint.
    pub fn psd_dual(&self, id: ConstraintId) -> Option<&HermitianOperator> {
        match self.dual(id) {
            Some(ConstraintDual::Psd(z)) => Some(z),
            _ => None,
        }
    }

    pub fn nonneg_dual(&self, id: ConstraintId) -> Option<f64> {
        match self.dual(id) {
            Some(ConstraintDual::NonNeg(z)) => Some(*z),
            _ => None,
        }
    }

    pub fn eq_dual(&self, id: ConstraintId) -> Option<&[f64]> {
        match self.dual(id) {
            Some(ConstraintDual::Eq(y)) => Some(y),
            _ => None,
        }
    }

    pub fn farkas(&self) -> Option<&FarkasWitness> {
        match &self.certificate {
            Some(Certificate::Farkas(w)) => Some(w),
            _ => None,
        }
    }
}

fn extract_duals(sf: &StandardForm, y: &DVector<f64>, z: &DVector<f64>) -> Vec<Option<ConstraintDual>> {
    let offsets = sf.offsets();
    sf.locate
        .iter()
        .map(|loc| match *loc {
            Located::None => None,
            Located::Eq(i) => Some(ConstraintDual::Eq(
                sf.eq_map[i].iter().map(|r| r.map_or(0.0, |r| y[r])).collect(),
            )),
            Located::NonNeg(r) => Some(ConstraintDual::NonNeg(z[offsets[0] + r])),
            Located::Psd(k) => {
                let kd = match sf.cones[k] {
                    cone::Cone::Psd(kd) => kd,
                    cone::Cone::NonNeg(_) => unreachable!(),
                };
                let zs = &z.as_slice()[offsets[k]..offsets[k + 1]];
                Some(ConstraintDual::Psd(block_to_hermitian(zs, kd, sf.real)))
            }
        })
        .collect()
}

fn compile_for(p: &ConicProblem, opts: &SolveOptions) -> StandardForm {
    p.compile(opts.real_fast_path && p.is_real())
}

/// Solves a conic problem.
pub fn solve(p: &ConicProblem, opts: &SolveOptions) -> SolveOutcome {
    let sf = compile_for(p, opts);
    let raw = ipm::solve_standard(&sf, opts);
    let mut out = SolveOutcome {
        status: raw.status,
        value: None,
        dual_value: None,
        iterations: raw.iterations,
        gap: raw.gap,
        primal_residual: raw.pres,
        dual_residual: raw.dres,
        certificate: None,
        params: sf.params(&raw.x),
        duals: Vec::new(),
    };
    match raw.status {
        Status::Optimal => {
            out.value = Some(sf.sign * raw.pcost + sf.objective_constant);
            out.dual_value = Some(sf.sign * raw.dcost + sf.objective_constant);
            out.duals = extract_duals(&sf, &raw.y, &raw.z);
        }
        Status::PrimalInfeasible => {
            out.certificate = Some(Certificate::Farkas(FarkasWitness {
                y: raw.y.iter().copied().collect(),
                z: raw.z.iter().copied().collect(),
                real: sf.real,
            }));
            out.duals = extract_duals(&sf, &raw.y, &raw.z);
        }
        Status::DualInfeasible => {
            out.certificate = Some(Certificate::Ray(ImprovingRay {
                x: raw.x.iter().copied().collect(),
                real: sf.real,
            }));
        }
        Status::NumericalTrouble => {}
    }
    out
}

/// Solves and re-checks the primal point and the dual multipliers against the original
/// constraints; fails with `DualDegenerate` when complementary slackness is violated.
pub fn solve_with_dual_extraction(p: &ConicProblem, opts: &SolveOptions) -> Result<SolveOutcome> {
    let out = solve(p, opts);
    if out.status != Status::Optimal {
        return Ok(out);
    }
    let mut slack = 0.0f64;
    for (k, ci) in p.constraints.iter().enumerate() {
        match (&ci.kind, out.duals.get(k).and_then(|d| d.as_ref())) {
            (ConstraintKind::Psd(m), Some(ConstraintDual::Psd(z))) => {
                let val = out.eval_mat(m);
                slack = slack.max(val.inner(z).abs());
                if z.min_eigenvalue() < -1e-7 * z.op_norm().max(1.0) {
                    return Err(Error::DualDegenerate(-z.min_eigenvalue()));
                }
            }
            (ConstraintKind::NonNeg(l), Some(ConstraintDual::NonNeg(z))) => {
                slack = slack.max((l.eval(&out.params) * z).abs());
            }
            _ => {}
        }
    }
    let scale = out.value.map_or(1.0, |v| v.abs().max(1.0));
    if slack > 1e-6 * scale {
        return Err(Error::DualDegenerate(slack));
    }
    Ok(out)
}

/// Result of an independent certificate check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    /// Separation normalized by the certificate size; must be ≥ 10·tol_feas.
    pub violation: f64,
    /// Residual of the homogeneous equation, relative to the separation.
    pub residual: f64,
    /// Distance of the cone part from the cone, relative to the separation.
    pub cone_violation: f64,
    pub valid: bool,
}

/// Checks a Farkas witness against the problem data, without solving.
pub fn verify_farkas(p: &ConicProblem, w: &FarkasWitness, tol_feas: f64) -> CertificateCheck {
    let sf = p.compile(w.real);
    let invalid = CertificateCheck {
        violation: 0.0,
        residual: f64::INFINITY,
        cone_violation: f64::INFINITY,
        valid: false,
    };
    if w.y.len() != sf.a.nrows() || w.z.len() != sf.h.len() {
        return invalid;
    }
    let y = DVector::from_column_slice(&w.y);
    let z = DVector::from_column_slice(&w.z);
    let d = -(sf.b.dot(&y) + sf.h.dot(&z));
    if !(d > 0.0) {
        return invalid;
    }
    let res = (sf.a.transpose() * &y + sf.gt_mul(&z)).norm() / d;
    let offsets = sf.offsets();
    let mut cv = 0.0f64;
    for (k, &c) in sf.cones.iter().enumerate() {
        let m = cone::cone_min(c, &w.z[offsets[k]..offsets[k + 1]]);
        cv = cv.max(-m / d);
    }
    let size = y.norm().max(z.norm()).max(1.0);
    let violation = d / size;
    CertificateCheck {
        violation,
        residual: res,
        cone_violation: cv,
        valid: violation >= 10.0 * tol_feas && res <= tol_feas * sf.c.norm().max(1.0) && cv <= tol_feas,
    }
}

/// Checks an improving ray against the problem data, without solving.
pub fn verify_ray(p: &ConicProblem, r: &ImprovingRay, tol_feas: f64) -> CertificateCheck {
    let sf = p.compile(r.real);
    let x = DVector::from_column_slice(&r.x);
    let d = -sf.c.dot(&x);
    if !(d > 0.0) || x.len() != sf.n {
        return CertificateCheck {
            violation: 0.0,
            residual: f64::INFINITY,
            cone_violation: f64::INFINITY,
            valid: false,
        };
    }
    let res = (&sf.a * &x).norm() / d;
    let gx = -sf.g_mul(&x);
    let offsets = sf.offsets();
    let mut cv = 0.0f64;
    for (k, &c) in sf.cones.iter().enumerate() {
        cv = cv.max(-cone::cone_min(c, &gx.as_slice()[offsets[k]..offsets[k + 1]]) / d);
    }
    let violation = d / x.norm().max(1.0);
    CertificateCheck {
        violation,
        residual: res,
        cone_violation: cv,
        valid: violation >= 10.0 * tol_feas && res <= tol_feas * sf.b.norm().max(1.0) && cv <= tol_feas,
    }
}

/// Smallest γ in [lo, hi] for which `build(γ)` is feasible, by bisection on feasibility
/// solves. Feasibility must be monotone in γ. Returns `None` when `build(hi)` is infeasible.
pub fn bisect_feasibility(
    build: impl Fn(f64) -> ConicProblem,
    lo: f64,
    hi: f64,
    tol: f64,
    opts: &SolveOptions,
) -> Result<Option<f64>> {
    let feasible = |g: f64| -> Result<bool> {
        let out = solve(&build(g), opts);
        match out.status {
            Status::Optimal => Ok(true),
            Status::PrimalInfeasible => Ok(false),
            s => Err(Error::Solver(format!("feasibility solve at {g} ended with {}", s.as_str()))),
        }
    };
    if !feasible(hi)? {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    if feasible(a)? {
        return Ok(Some(a));
    }
    while b - a > tol * b.abs().max(1.0) {
        let mid = 0.5 * (a + b);
        if feasible(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Some(b))
}

/// One-line description of an outcome, for logs and CLI output.
pub fn describe(out: &SolveOutcome) -> String {
    format!(
        "{} after {} iterations (gap {:.2e}, pres {:.2e}, dres {:.2e})",
        out.status.as_str(),
        out.iterations,
        out.gap,
        out.primal_residual,
        out.dual_residual
    )
}
