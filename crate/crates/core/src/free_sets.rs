//! Convex free-state families and their machine representations: membership in cone(F),
//! in the dual cone cone(F)*, and orthogonality to span(F).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::conic::{solve, ConicProblem, ConstraintId, MatExpr, SolveOptions, Status};
use crate::error::{Error, Result};
// resolves to inherent methods when a dependency links std
#[allow(unused_imports)]
use crate::float::FloatExt;
use crate::operator::{c, partial_transpose_mask, CMat, HermitianOperator, QuantumState, STATE_TOL};

/// Largest vertex list accepted for polytope theories.
pub const MAX_VERTICES: usize = 4096;

/// The free-state family.
#[derive(Debug, Clone, PartialEq)]
pub enum Theory {
    /// Diagonal states in the computational basis.
    Incoherent,
    /// States whose partial transpose on the flagged factors is PSD.
    Ppt { bipartition: Vec<usize>, transposed: Vec<bool> },
    /// Real symmetric states.
    Real,
    /// The single state σ₀.
    SingleState(HermitianOperator),
    /// Convex hull of a finite list of states.
    Polytope(Vec<HermitianOperator>),
}

/// A free set in a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeSetSpec {
    theory: Theory,
    dim: usize,
}

/// Parameter t of the dual-cone and affine-hull constraints; `Infinite` drops the Z/t term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Finite(f64),
    Infinite,
}

impl Threshold {
    pub fn inverse(self) -> f64 {
        match self {
            Threshold::Finite(t) => 1.0 / t,
            Threshold::Infinite => 0.0,
        }
    }
}

fn dim_error(what: &str, got: usize, want: usize) -> Error {
    Error::Dimension(format!("{what} has dimension {got}, free set has dimension {want}"))
}

impl FreeSetSpec {
    pub fn incoherent(dim: usize) -> Self {
        Self { theory: Theory::Incoherent, dim }
    }

    pub fn real(dim: usize) -> Self {
        Self { theory: Theory::Real, dim }
    }

    /// PPT across a bipartition `[d_A, d_B]`, transposing B.
    pub fn ppt(bipartition: &[usize]) -> Result<Self> {
        let mut mask = vec![false; bipartition.len()];
        if let Some(last) = mask.last_mut() {
            *last = true;
        }
        Self::ppt_with_mask(bipartition, &mask)
    }

    /// PPT with an explicit list of transposed factors.
    pub fn ppt_with_mask(bipartition: &[usize], transposed: &[bool]) -> Result<Self> {
        if bipartition.len() < 2 || bipartition.len() != transposed.len() || bipartition.contains(&0) {
            return Err(Error::Config(format!(
                "PPT needs at least two nonzero factors and one flag per factor, got {bipartition:?} / {transposed:?}"
            )));
        }
        if transposed.iter().all(|&t| t) || transposed.iter().all(|&t| !t) {
            return Err(Error::Config("PPT needs a proper nonempty set of transposed factors".into()));
        }
        Ok(Self {
            dim: bipartition.iter().product(),
            theory: Theory::Ppt {
                bipartition: bipartition.to_vec(),
                transposed: transposed.to_vec(),
            },
        })
    }

    /// PPT for n copies of a `[d_A, d_B]` system, with factors ordered A₁B₁A₂B₂...
    pub fn ppt_copies(da: usize, db: usize, n: usize) -> Result<Self> {
        let dims: Vec<usize> = (0..n).flat_map(|_| [da, db]).collect();
        let mask: Vec<bool> = (0..n).flat_map(|_| [false, true]).collect();
        Self::ppt_with_mask(&dims, &mask)
    }

    pub fn single_state(sigma0: &QuantumState) -> Self {
        Self {
            dim: sigma0.dim(),
            theory: Theory::SingleState(sigma0.op().clone()),
        }
    }

    pub fn polytope(vertices: &[QuantumState]) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::Config("polytope needs at least one vertex".into()))?;
        if vertices.len() > MAX_VERTICES {
            return Err(Error::Config(format!(
                "polytope has {} vertices, at most {MAX_VERTICES} are supported",
                vertices.len()
            )));
        }
        let dim = first.dim();
        if let Some(v) = vertices.iter().find(|v| v.dim() != dim) {
            return Err(dim_error("polytope vertex", v.dim(), dim));
        }
        Ok(Self {
            dim,
            theory: Theory::Polytope(vertices.iter().map(|v| v.op().clone()).collect()),
        })
    }

    /// The qubit states with Bloch vectors (±1, ±1, ±1)/√3.
    pub fn qubit_cube() -> Self {
        let s = 1.0 / 3f64.sqrt();
        let mut verts = Vec::with_capacity(8);
        for k in 0..8 {
            let sx = if k & 1 == 0 { s } else { -s };
            let sy = if k & 2 == 0 { s } else { -s };
            let sz = if k & 4 == 0 { s } else { -s };
            let m = CMat::from_row_slice(
                2,
                2,
                &[c(0.5 * (1.0 + sz), 0.0), c(0.5 * sx, -0.5 * sy), c(0.5 * sx, 0.5 * sy), c(0.5 * (1.0 - sz), 0.0)],
            );
            verts.push(HermitianOperator::new(m).expect("square"));
        }
        Self {
            dim: 2,
            theory: Theory::Polytope(verts),
        }
    }

    pub fn theory(&self) -> &Theory {
        &self.theory
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &'static str {
        match self.theory {
            Theory::Incoherent => "incoherent",
            Theory::Ppt { .. } => "ppt",
            Theory::Real => "real",
            Theory::SingleState(_) => "single",
            Theory::Polytope(_) => "polytope",
        }
    }

    /// F = aff(F) ∩ D.
    pub fn is_affine(&self) -> bool {
        matches!(self.theory, Theory::Incoherent | Theory::Real | Theory::SingleState(_))
    }

    /// span(F) is the whole operator space.
    pub fn is_full_dimensional(&self) -> bool {
        match &self.theory {
            Theory::Ppt { .. } => true,
            Theory::Polytope(v) => span_rank(v) == self.dim * self.dim,
            _ => self.dim == 1,
        }
    }

    /// Free set on the tensor product space, for theories closed under tensor products.
    pub fn tensor(&self, other: &FreeSetSpec) -> Result<FreeSetSpec> {
        let dim = self.dim * other.dim;
        let theory = match (&self.theory, &other.theory) {
            (Theory::Incoherent, Theory::Incoherent) => Theory::Incoherent,
            (Theory::Real, Theory::Real) => Theory::Real,
            (
                Theory::Ppt { bipartition: d1, transposed: m1 },
                Theory::Ppt { bipartition: d2, transposed: m2 },
            ) => Theory::Ppt {
                bipartition: d1.iter().chain(d2).copied().collect(),
                transposed: m1.iter().chain(m2).copied().collect(),
            },
            (Theory::SingleState(a), Theory::SingleState(b)) => Theory::SingleState(a.tensor(b)),
            (Theory::Polytope(a), Theory::Polytope(b)) => {
                if a.len() * b.len() > MAX_VERTICES {
                    return Err(Error::Config("tensor product polytope exceeds the vertex limit".into()));
                }
                Theory::Polytope(a.iter().flat_map(|x| b.iter().map(move |y| x.tensor(y))).collect())
            }
            _ => return Err(Error::Config("tensor product of different theories".into())),
        };
        Ok(FreeSetSpec { theory, dim })
    }

    fn check_dim(&self, what: &str, d: usize) -> Result<()> {
        if d == self.dim {
            Ok(())
        } else {
            Err(dim_error(what, d, self.dim))
        }
    }

    /// A free state, full rank whenever the theory has one.
    pub fn reference_state(&self) -> HermitianOperator {
        match &self.theory {
            Theory::SingleState(s) => s.clone(),
            Theory::Polytope(v) => {
                let mut acc = HermitianOperator::zeros(self.dim);
                for x in v {
                    acc = &acc + x;
                }
                acc.scale(1.0 / v.len() as f64)
            }
            _ => HermitianOperator::identity(self.dim).scale(1.0 / self.dim as f64),
        }
    }

    /// Generators whose conic hull is cone(F), when the theory has finitely many.
    pub fn generators(&self) -> Option<&[HermitianOperator]> {
        match &self.theory {
            Theory::SingleState(s) => Some(core::slice::from_ref(s)),
            Theory::Polytope(v) => Some(v),
            _ => None,
        }
    }

    // ---- conic builders ----

    /// A fresh matrix expression ranging over cone(F).
    pub fn cone_variable(&self, p: &mut ConicProblem, label: &str) -> (MatExpr, Vec<ConstraintId>) {
        let d = self.dim;
        match &self.theory {
            Theory::Incoherent => {
                let mut e = MatExpr::zero(d);
                let mut ids = Vec::with_capacity(d);
                for i in 0..d {
                    let x = p.scalar();
                    ids.push(p.add_nonneg(p.lin(x), label));
                    e = e.add(&MatExpr::scalar_times(&p.lin(x), &HermitianOperator::basis_projector(d, i)));
                }
                (e, ids)
            }
            Theory::Real => {
                let v = p.symmetric(d);
                let e = p.mat(v);
                let id = p.add_psd(e.clone(), label);
                (e, vec![id])
            }
            Theory::Ppt { bipartition, transposed } => {
                let v = p.hermitian(d);
                let e = p.mat(v);
                let a = p.add_psd(e.clone(), label);
                let b = p.add_psd(e.partial_transpose(bipartition, transposed).expect("validated"), label);
                (e, vec![a, b])
            }
            Theory::SingleState(s) => {
                let l = p.scalar();
                let id = p.add_nonneg(p.lin(l), label);
                (MatExpr::scalar_times(&p.lin(l), s), vec![id])
            }
            Theory::Polytope(vs) => {
                let mut e = MatExpr::zero(d);
                let mut ids = Vec::with_capacity(vs.len());
                for s in vs {
                    let x = p.scalar();
                    ids.push(p.add_nonneg(p.lin(x), label));
                    e = e.add(&MatExpr::scalar_times(&p.lin(x), s));
                }
                (e, ids)
            }
        }
    }

    /// A fresh matrix expression ranging over span(F).
    pub fn span_variable(&self, p: &mut ConicProblem) -> MatExpr {
        let d = self.dim;
        match &self.theory {
            Theory::Incoherent => {
                let mut e = MatExpr::zero(d);
                for i in 0..d {
                    let x = p.scalar();
                    e = e.add(&MatExpr::scalar_times(&p.lin(x), &HermitianOperator::basis_projector(d, i)));
                }
                e
            }
            Theory::Real => {
                let v = p.symmetric(d);
                p.mat(v)
            }
            Theory::Ppt { .. } => {
                let v = p.hermitian(d);
                p.mat(v)
            }
            Theory::SingleState(s) => {
                let l = p.scalar();
                MatExpr::scalar_times(&p.lin(l), s)
            }
            Theory::Polytope(vs) => {
                let mut e = MatExpr::zero(d);
                for s in vs {
                    let x = p.scalar();
                    e = e.add(&MatExpr::scalar_times(&p.lin(x), s));
                }
                e
            }
        }
    }

    /// Constrains `expr` to lie in cone(F).
    pub fn add_cone_membership(&self, p: &mut ConicProblem, expr: &MatExpr, label: &str) -> Result<Vec<ConstraintId>> {
        self.check_dim("constrained expression", expr.dim())?;
        Ok(match &self.theory {
            Theory::Incoherent => {
                let mut ids: Vec<ConstraintId> = expr.diagonal().into_iter().map(|l| p.add_nonneg(l, label)).collect();
                if self.dim > 1 {
                    ids.push(p.add_eq_matrix(&expr.off_diagonal(), label));
                }
                ids
            }
            Theory::Real => vec![
                p.add_psd(expr.real_part(), label),
                p.add_eq_matrix(&expr.imaginary_part(), label),
            ],
            Theory::Ppt { bipartition, transposed } => {
                let mut ids = vec![p.add_psd(expr.clone(), label)];
                ids.extend(add_psd_reduced(p, expr.partial_transpose(bipartition, transposed)?, label));
                ids
            }
            Theory::SingleState(_) | Theory::Polytope(_) => {
                let (g, mut ids) = self.cone_variable(p, label);
                ids.push(p.add_eq_matrix(&expr.clone().sub(&g), label));
                ids
            }
        })
    }

    /// Constrains an expression already known to be PSD to lie in cone(F); only the
    /// constraints beyond positivity are added.
    pub fn add_cone_membership_of_psd(
        &self,
        p: &mut ConicProblem,
        expr: &MatExpr,
        label: &str,
    ) -> Result<Vec<ConstraintId>> {
        self.check_dim("constrained expression", expr.dim())?;
        Ok(match &self.theory {
            Theory::Incoherent if self.dim == 1 => Vec::new(),
            Theory::Incoherent => vec![p.add_eq_matrix(&expr.off_diagonal(), label)],
            Theory::Real => vec![p.add_eq_matrix(&expr.imaginary_part(), label)],
            Theory::Ppt { bipartition, transposed } => {
                add_psd_reduced(p, expr.partial_transpose(bipartition, transposed)?, label)
            }
            Theory::SingleState(_) | Theory::Polytope(_) => self.add_cone_membership(p, expr, label)?,
        })
    }

    /// Constrains `expr` to lie in span(F).
    pub fn add_span_membership(&self, p: &mut ConicProblem, expr: &MatExpr, label: &str) -> Result<Vec<ConstraintId>> {
        self.check_dim("constrained expression", expr.dim())?;
        Ok(match &self.theory {
            Theory::Incoherent if self.dim == 1 => Vec::new(),
            Theory::Incoherent => vec![p.add_eq_matrix(&expr.off_diagonal(), label)],
            Theory::Real => vec![p.add_eq_matrix(&expr.imaginary_part(), label)],
            Theory::Ppt { .. } => Vec::new(),
            Theory::SingleState(_) | Theory::Polytope(_) => {
                let g = self.span_variable(p);
                vec![p.add_eq_matrix(&expr.clone().sub(&g), label)]
            }
        })
    }

    /// Constrains `expr` to lie in cone(F)*.
    pub fn add_dual_membership(&self, p: &mut ConicProblem, expr: &MatExpr, label: &str) -> Result<Vec<ConstraintId>> {
        self.check_dim("constrained expression", expr.dim())?;
        Ok(match &self.theory {
            Theory::Incoherent => expr.diagonal().into_iter().map(|l| p.add_nonneg(l, label)).collect(),
            Theory::Real => vec![p.add_psd(expr.real_part(), label)],
            Theory::Ppt { bipartition, transposed } => {
                // X = P + Q^Γ with P, Q ⪰ 0, i.e. X − Q^Γ ⪰ 0
                let q = p.hermitian(self.dim);
                let qm = p.mat(q);
                let a = p.add_psd(qm.clone(), label);
                let b = p.add_psd(expr.clone().sub(&qm.partial_transpose(bipartition, transposed)?), label);
                vec![a, b]
            }
            Theory::SingleState(s) => vec![p.add_nonneg(expr.inner(s), label)],
            Theory::Polytope(vs) => vs.iter().map(|s| p.add_nonneg(expr.inner(s), label)).collect(),
        })
    }

    /// Constrains ⟨expr, σ⟩ = 0 for every σ ∈ F.
    pub fn add_span_orthogonality(&self, p: &mut ConicProblem, expr: &MatExpr, label: &str) -> Result<Vec<ConstraintId>> {
        self.check_dim("constrained expression", expr.dim())?;
        Ok(match &self.theory {
            Theory::Incoherent => expr.diagonal().into_iter().map(|l| p.add_eq(l, label)).collect(),
            Theory::Real => vec![p.add_eq_matrix(&expr.real_part(), label)],
            Theory::Ppt { .. } => vec![p.add_eq_matrix(expr, label)],
            Theory::SingleState(s) => vec![p.add_eq(expr.inner(s), label)],
            Theory::Polytope(vs) => vs.iter().map(|s| p.add_eq(expr.inner(s), label)).collect(),
        })
    }

    /// ⟨W, σ⟩ ≤ ⟨Z, σ⟩/t for all σ ∈ F, i.e. Z/t − W ∈ cone(F)*.
    pub fn add_dual_inequality(
        &self,
        p: &mut ConicProblem,
        w: &MatExpr,
        z: &MatExpr,
        t: Threshold,
        label: &str,
    ) -> Result<Vec<ConstraintId>> {
        let e = z.scale(t.inverse()).sub(w);
        self.add_dual_membership(p, &e, label)
    }

    /// ⟨W, σ⟩ = ⟨Z, σ⟩/t for all σ ∈ F.
    pub fn affine_hull_constraints(
        &self,
        p: &mut ConicProblem,
        w: &MatExpr,
        z: &MatExpr,
        t: Threshold,
        label: &str,
    ) -> Result<Vec<ConstraintId>> {
        let e = w.clone().sub(&z.scale(t.inverse()));
        self.add_span_orthogonality(p, &e, label)
    }

    // ---- numeric checks ----

    /// Distance of x from cone(F): 0 for members.
    pub fn cone_violation(&self, x: &HermitianOperator) -> Result<f64> {
        self.check_dim("operator", x.dim())?;
        let m = x.matrix();
        Ok(match &self.theory {
            Theory::Incoherent => {
                let mut v = 0.0f64;
                for i in 0..self.dim {
                    v = v.max(-m[(i, i)].re);
                    for j in 0..self.dim {
                        if i != j {
                            v = v.max(m[(i, j)].norm());
                        }
                    }
                }
                v
            }
            Theory::Real => x.max_imag().max(-x.min_eigenvalue()).max(0.0),
            Theory::Ppt { bipartition, transposed } => {
                let pt = partial_transpose_mask(x, bipartition, transposed)?;
                (-x.min_eigenvalue()).max(-pt.min_eigenvalue()).max(0.0)
            }
            Theory::SingleState(s) => {
                let l = (x.inner(s) / s.inner(s)).max(0.0);
                (x - &s.scale(l)).frobenius_norm()
            }
            Theory::Polytope(vs) => polytope_distance(x, vs)?,
        })
    }

    /// True when the state lies in F up to `tol`.
    pub fn contains(&self, state: &HermitianOperator, tol: f64) -> Result<bool> {
        Ok((state.trace() - 1.0).abs() <= tol.max(STATE_TOL) && self.cone_violation(state)? <= tol)
    }

    /// min over σ ∈ F of ⟨x, σ⟩.
    pub fn min_overlap(&self, x: &HermitianOperator) -> Result<f64> {
        self.check_dim("operator", x.dim())?;
        Ok(match &self.theory {
            Theory::Incoherent => (0..self.dim)
                .map(|i| x.matrix()[(i, i)].re)
                .fold(f64::INFINITY, f64::min),
            Theory::Real => HermitianOperator::from_real(x.real_part())?.min_eigenvalue(),
            Theory::SingleState(s) => x.inner(s),
            Theory::Polytope(vs) => vs.iter().map(|s| x.inner(s)).fold(f64::INFINITY, f64::min),
            Theory::Ppt { .. } => {
                let mut p = ConicProblem::new();
                let (s, _) = self.cone_variable(&mut p, "free");
                p.add_eq(s.trace().plus_constant(-1.0), "normalization");
                p.minimize(s.inner(x));
                let out = solve(&p, &SolveOptions::configured());
                match out.status {
                    Status::Optimal => out.value.expect("optimal"),
                    st => return Err(Error::Solver(format!("free-set overlap solve ended with {}", st.as_str()))),
                }
            }
        })
    }

    /// max over σ ∈ F of ⟨x, σ⟩.
    pub fn max_overlap(&self, x: &HermitianOperator) -> Result<f64> {
        Ok(-self.min_overlap(&x.scale(-1.0))?)
    }

    /// Distance of x from cone(F)*: max(0, −min over σ ∈ F of ⟨x, σ⟩).
    pub fn dual_violation(&self, x: &HermitianOperator) -> Result<f64> {
        Ok((-self.min_overlap(x)?).max(0.0))
    }

    /// max over σ ∈ F of ⟨P, σ⟩ for a projector P; F_F(φ) when P = φ is rank one.
    pub fn max_overlap_with_projector(&self, proj: &HermitianOperator) -> Result<f64> {
        let sq = HermitianOperator::new(proj.matrix() * proj.matrix())?;
        if (&sq - proj).max_abs() > 1e-8 {
            return Err(Error::Domain("operator is not a projector".into()));
        }
        Ok(self.max_overlap(proj)?.clamp(0.0, 1.0))
    }

    /// max_i |⟨x, σ_i⟩| over a spanning set of F; zero iff x ⊥ span(F).
    pub fn span_residual(&self, x: &HermitianOperator) -> Result<f64> {
        self.check_dim("operator", x.dim())?;
        let m = x.matrix();
        Ok(match &self.theory {
            Theory::Incoherent => (0..self.dim).map(|i| m[(i, i)].re.abs()).fold(0.0, f64::max),
            Theory::Real => m.iter().map(|z| z.re.abs()).fold(0.0, f64::max),
            Theory::Ppt { .. } => x.max_abs(),
            Theory::SingleState(s) => x.inner(s).abs(),
            Theory::Polytope(vs) => vs.iter().map(|s| x.inner(s).abs()).fold(0.0, f64::max),
        })
    }

    /// The constant c with ⟨P, σ⟩ = c for all σ ∈ F, or `None` (infinite) when ⟨P, ·⟩ varies on F.
    pub fn affine_overlap_constant(&self, proj: &HermitianOperator) -> Result<Option<f64>> {
        let cst = proj.inner(&self.reference_state());
        let shifted = proj - &HermitianOperator::identity(self.dim).scale(cst);
        Ok(if self.span_residual(&shifted)? <= 1e-9 { Some(cst) } else { None })
    }
}

/// X ⪰ 0 together with the zero rows it implies. A partial transpose of a support-restricted
/// expression can have identically zero diagonal entries; stating the implied zero rows keeps
/// infeasibility strong, so that certificates stay bounded.
fn add_psd_reduced(p: &mut ConicProblem, x: MatExpr, label: &str) -> Vec<ConstraintId> {
    let forced = x.forced_zero_entries();
    let mut ids = vec![p.add_psd(x, label)];
    ids.extend(forced.into_iter().map(|l| p.add_eq(l, label)));
    ids
}

/// Operator-norm distance from x to cone(conv(vs)).
fn polytope_distance(x: &HermitianOperator, vs: &[HermitianOperator]) -> Result<f64> {
    let d = x.dim();
    let mut p = ConicProblem::new();
    let t = p.scalar();
    let mut g = MatExpr::zero(d);
    for s in vs {
        let y = p.scalar();
        p.add_nonneg(p.lin(y), "weight");
        g = g.add(&MatExpr::scalar_times(&p.lin(y), s));
    }
    let ti = MatExpr::scalar_times(&p.lin(t), &HermitianOperator::identity(d));
    let diff = g.sub_op(x);
    p.add_psd(ti.clone().add(&diff), "upper");
    p.add_psd(ti.sub(&diff), "lower");
    p.minimize(p.lin(t));
    let out = solve(&p, &SolveOptions::configured());
    match out.status {
        Status::Optimal => Ok(out.value.expect("optimal").max(0.0)),
        st => Err(Error::Solver(format!("polytope distance solve ended with {}", st.as_str()))),
    }
}

/// Real dimension of the span of a list of Hermitian operators.
fn span_rank(vs: &[HermitianOperator]) -> usize {
    let Some(first) = vs.first() else { return 0 };
    let d = first.dim();
    let mut rows = nalgebra::DMatrix::<f64>::zeros(vs.len(), 2 * d * d);
    for (k, v) in vs.iter().enumerate() {
        for (j, z) in v.matrix().iter().enumerate() {
            rows[(k, 2 * j)] = z.re;
            rows[(k, 2 * j + 1)] = z.im;
        }
    }
    let sv = rows.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-9 * smax.max(1.0)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{maximally_coherent, maximally_entangled};

    fn sx() -> HermitianOperator {
        HermitianOperator::new(CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])).unwrap()
    }

    #[test]
    fn primal_membership_examples() {
        let inc = FreeSetSpec::incoherent(2);
        assert_eq!(inc.cone_violation(&HermitianOperator::diagonal(&[0.3, 2.0])).unwrap(), 0.0);
        assert!(inc.cone_violation(&sx()).unwrap() > 0.5);
        let ppt = FreeSetSpec::ppt(&[2, 2]).unwrap();
        let phi = maximally_entangled(2).into_op();
        assert!((ppt.cone_violation(&phi).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(ppt.cone_violation(&HermitianOperator::identity(4).scale(0.25)).unwrap(), 0.0);
        let s0 = QuantumState::new(HermitianOperator::diagonal(&[0.7, 0.3])).unwrap();
        let single = FreeSetSpec::single_state(&s0);
        assert!(single.cone_violation(&s0.op().scale(2.0)).unwrap() < 1e-15);
        assert!(single.cone_violation(&(s0.op() + &sx().scale(1e-3))).unwrap() > 1e-4);
    }

    #[test]
    fn dual_membership_examples() {
        let inc = FreeSetSpec::incoherent(2);
        assert_eq!(inc.dual_violation(&sx().scale(-1.0)).unwrap(), 0.0);
        let ppt = FreeSetSpec::ppt(&[2, 2]).unwrap();
        let phi_g = partial_transpose_mask(&maximally_entangled(2).into_op(), &[2, 2], &[false, true]).unwrap();
        assert!(ppt.dual_violation(&phi_g.scale(2.0)).unwrap() < 1e-7);
        let verts = [
            QuantumState::new(HermitianOperator::basis_projector(2, 0)).unwrap(),
            QuantumState::new(HermitianOperator::basis_projector(2, 1)).unwrap(),
        ];
        let poly = FreeSetSpec::polytope(&verts).unwrap();
        assert!((poly.dual_violation(&HermitianOperator::diagonal(&[1.0, -1.0])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlaps_with_projectors() {
        let ppt = FreeSetSpec::ppt(&[2, 2]).unwrap();
        let f = ppt.max_overlap_with_projector(&maximally_entangled(2).into_op()).unwrap();
        assert!((f - 0.5).abs() < 1e-7);
        let inc = FreeSetSpec::incoherent(3);
        let f = inc.max_overlap_with_projector(maximally_coherent(3).op()).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-12);
        for spec in [inc, ppt, FreeSetSpec::qubit_cube()] {
            let id = HermitianOperator::identity(spec.dim());
            assert!((spec.max_overlap_with_projector(&id).unwrap() - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn affine_overlap_constants() {
        let inc = FreeSetSpec::incoherent(2);
        let p = HermitianOperator::basis_projector(2, 1);
        assert_eq!(inc.affine_overlap_constant(&p).unwrap(), None);
        assert_eq!(inc.affine_overlap_constant(&HermitianOperator::identity(2)).unwrap(), Some(1.0));
        let s0 = QuantumState::new(HermitianOperator::diagonal(&[0.7, 0.3])).unwrap();
        let single = FreeSetSpec::single_state(&s0);
        assert!((single.affine_overlap_constant(&p).unwrap().unwrap() - 0.3).abs() < 1e-15);
        let ppt = FreeSetSpec::ppt(&[2, 2]).unwrap();
        assert_eq!(ppt.affine_overlap_constant(&HermitianOperator::basis_projector(4, 0)).unwrap(), None);
    }

    #[test]
    fn affine_hull_constraint_examples() {
        // Incoherent d=2, t=2: W = I, Z = 2I satisfies; Z = diag(2,3) does not
        let inc = FreeSetSpec::incoherent(2);
        let w = HermitianOperator::identity(2);
        let ok = &w - &HermitianOperator::identity(2).scale(2.0).scale(0.5);
        assert_eq!(inc.span_residual(&ok).unwrap(), 0.0);
        let bad = &w - &HermitianOperator::diagonal(&[2.0, 3.0]).scale(0.5);
        assert!(inc.span_residual(&bad).unwrap() > 0.1);
        // SingleState(I/2), t=4: Tr W = 1, Tr Z = 4
        let single = FreeSetSpec::single_state(&crate::states::maximally_mixed(2));
        let z = HermitianOperator::diagonal(&[3.0, 1.0]);
        let w = HermitianOperator::diagonal(&[0.2, 0.8]);
        assert!(single.span_residual(&(&w - &z.scale(0.25))).unwrap() < 1e-15);
    }

    #[test]
    fn theory_classes() {
        assert!(FreeSetSpec::incoherent(3).is_affine());
        assert!(FreeSetSpec::ppt(&[2, 2]).unwrap().is_full_dimensional());
        assert!(FreeSetSpec::qubit_cube().is_full_dimensional());
        assert!(!FreeSetSpec::real(2).is_full_dimensional());
        assert!(FreeSetSpec::ppt(&[4]).is_err());
        let two = FreeSetSpec::ppt(&[2, 2]).unwrap().tensor(&FreeSetSpec::ppt(&[2, 2]).unwrap()).unwrap();
        assert_eq!(two, FreeSetSpec::ppt_copies(2, 2, 2).unwrap());
    }
}
