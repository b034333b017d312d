//! Modeling layer: scalar and matrix variables, affine expressions, and compilation to
//! the standard form `min c'x  s.t.  Ax = b,  Gx + s = h,  s ∈ K`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{c, CMat, HermitianOperator, PtPermutation};

use super::cone::{svec_index, svec_len, Cone};

/// Handle to a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub(crate) usize);

/// Handle to a declared constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Scalar,
    /// Real symmetric d×d matrix.
    Symmetric(usize),
    /// Complex Hermitian d×d matrix.
    Hermitian(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
struct VarInfo {
    kind: VarKind,
    offset: usize,
}

/// A sparse real linear functional of the parameters plus a constant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub(crate) terms: BTreeMap<usize, f64>,
    pub(crate) constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(v: f64) -> Self {
        Self {
            terms: BTreeMap::new(),
            constant: v,
        }
    }

    pub(crate) fn param(j: usize, coef: f64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(j, coef);
        Self { terms, constant: 0.0 }
    }

    pub fn add(mut self, other: &LinExpr) -> Self {
        for (&j, &v) in &other.terms {
            *self.terms.entry(j).or_insert(0.0) += v;
        }
        self.constant += other.constant;
        self
    }

    pub fn sub(self, other: &LinExpr) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(&j, &v)| (j, v * a)).collect(),
            constant: self.constant * a,
        }
    }

    pub fn plus_constant(mut self, v: f64) -> Self {
        self.constant += v;
        self
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(&j, &v)| v * x[j]).sum::<f64>()
    }
}

type Entry = (u32, u32, Complex64);

/// An affine Hermitian-matrix-valued expression C + Σⱼ xⱼ Mⱼ.
#[derive(Debug, Clone, PartialEq)]
pub struct MatExpr {
    dim: usize,
    constant: CMat,
    terms: BTreeMap<usize, Vec<Entry>>,
}

impl MatExpr {
    pub fn constant(op: &HermitianOperator) -> Self {
        Self {
            dim: op.dim(),
            constant: op.matrix().clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            constant: CMat::zeros(dim, dim),
            terms: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// λ·op for a scalar expression λ.
    pub fn scalar_times(lambda: &LinExpr, op: &HermitianOperator) -> Self {
        let d = op.dim();
        let nz: Vec<Entry> = nonzero_entries(op.matrix());
        let mut terms = BTreeMap::new();
        for (&j, &v) in &lambda.terms {
            terms.insert(j, nz.iter().map(|&(r, cc, z)| (r, cc, z * v)).collect());
        }
        Self {
            dim: d,
            constant: op.matrix() * c(lambda.constant, 0.0),
            terms,
        }
    }

    pub fn add(mut self, other: &MatExpr) -> Self {
        assert_eq!(self.dim, other.dim, "adding matrix expressions of different sizes");
        self.constant += &other.constant;
        for (&j, e) in &other.terms {
            self.terms.entry(j).or_default().extend_from_slice(e);
        }
        self
    }

    pub fn sub(self, other: &MatExpr) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn add_op(mut self, op: &HermitianOperator) -> Self {
        self.constant += op.matrix();
        self
    }

    pub fn sub_op(mut self, op: &HermitianOperator) -> Self {
        self.constant -= op.matrix();
        self
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            dim: self.dim,
            constant: &self.constant * c(a, 0.0),
            terms: self
                .terms
                .iter()
                .map(|(&j, e)| (j, e.iter().map(|&(r, cc, z)| (r, cc, z * a)).collect()))
                .collect(),
        }
    }

    /// Partial transpose of the factors flagged in `mask`.
    pub fn partial_transpose(&self, dims: &[usize], mask: &[bool]) -> Result<Self> {
        if dims.iter().product::<usize>() != self.dim || dims.len() != mask.len() {
            return Err(Error::Dimension(format!(
                "bipartition {dims:?} incompatible with expression of size {}",
                self.dim
            )));
        }
        let p = PtPermutation::new(dims, mask);
        let d = self.dim;
        let mut constant = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let (r, cc) = p.map(i, j);
                constant[(r, cc)] = self.constant[(i, j)];
            }
        }
        let terms = self
            .terms
            .iter()
            .map(|(&j, e)| {
                (
                    j,
                    e.iter()
                        .map(|&(r, cc, z)| {
                            let (a, b) = p.map(r as usize, cc as usize);
                            (a as u32, b as u32, z)
                        })
                        .collect(),
                )
            })
            .collect();
        Ok(Self { dim: d, constant, terms })
    }

    /// V X V† for a (d_out × dim) matrix V.
    pub fn congruence(&self, v: &CMat) -> Self {
        assert_eq!(v.ncols(), self.dim, "congruence with a matrix of the wrong width");
        let vh = v.adjoint();
        let mut terms = BTreeMap::new();
        for (&j, e) in &self.terms {
            let mut m = CMat::zeros(self.dim, self.dim);
            for &(r, cc, z) in e {
                m[(r as usize, cc as usize)] += z;
            }
            let out = v * m * &vh;
            let nz = nonzero_entries(&out.map(|z| if z.norm() < 1e-15 { c(0.0, 0.0) } else { z }));
            if !nz.is_empty() {
                terms.insert(j, nz);
            }
        }
        Self {
            dim: v.nrows(),
            constant: v * &self.constant * vh,
            terms,
        }
    }

    /// Entrywise real part Re(X) = (X + X̄)/2.
    pub fn real_part(&self) -> Self {
        Self {
            dim: self.dim,
            constant: self.constant.map(|z| c(z.re, 0.0)),
            terms: self
                .terms
                .iter()
                .map(|(&j, e)| {
                    (
                        j,
                        e.iter()
                            .filter(|e| e.2.re != 0.0)
                            .map(|&(r, cc, z)| (r, cc, c(z.re, 0.0)))
                            .collect(),
                    )
                })
                .collect(),
        }
    }

    /// One real functional per degree of freedom: Re X_ij for i ≤ j, then Im X_ij for i < j
    /// (flagged true).
    fn entry_functionals(&self) -> Vec<(LinExpr, bool)> {
        let d = self.dim;
        let mut out = Vec::new();
        let mut re: BTreeMap<(u32, u32), LinExpr> = BTreeMap::new();
        let mut im: BTreeMap<(u32, u32), LinExpr> = BTreeMap::new();
        for i in 0..d {
            for j in i..d {
                let z = self.constant[(i, j)];
                re.insert((i as u32, j as u32), LinExpr::constant(z.re));
                if i < j {
                    im.insert((i as u32, j as u32), LinExpr::constant(z.im));
                }
            }
        }
        for (&p, e) in &self.terms {
            for &(r, cc, z) in e {
                if r > cc {
                    continue;
                }
                if let Some(l) = re.get_mut(&(r, cc)) {
                    *l.terms.entry(p).or_insert(0.0) += z.re;
                }
                if r < cc {
                    if let Some(l) = im.get_mut(&(r, cc)) {
                        *l.terms.entry(p).or_insert(0.0) += z.im;
                    }
                }
            }
        }
        for (_, l) in re {
            out.push((l, false));
        }
        for (_, l) in im {
            out.push((l, true));
        }
        out
    }

    /// Diagonal entries as scalar expressions.
    pub fn diagonal(&self) -> Vec<LinExpr> {
        let mut out: Vec<LinExpr> = (0..self.dim)
            .map(|i| LinExpr::constant(self.constant[(i, i)].re))
            .collect();
        for (&p, e) in &self.terms {
            for &(r, cc, z) in e {
                if r == cc {
                    *out[r as usize].terms.entry(p).or_insert(0.0) += z.re;
                }
            }
        }
        out
    }

    /// Entries that must vanish whenever the expression is PSD: every entry in a row whose
    /// diagonal is identically zero. Returned as real and imaginary parts.
    pub fn forced_zero_entries(&self) -> Vec<LinExpr> {
        const ZERO: f64 = 1e-13;
        let mut live = vec![false; self.dim];
        for (k, l) in live.iter_mut().enumerate() {
            *l = self.constant[(k, k)].norm() > ZERO;
        }
        for e in self.terms.values() {
            for &(r, cc, z) in e {
                if r == cc && z.norm() > ZERO {
                    live[r as usize] = true;
                }
            }
        }
        let mut out = Vec::new();
        for k in (0..self.dim).filter(|&k| !live[k]) {
            for j in (0..self.dim).filter(|&j| j != k) {
                let z0 = self.constant[(k, j)];
                let mut re = LinExpr::constant(z0.re);
                let mut im = LinExpr::constant(z0.im);
                for (&p, e) in &self.terms {
                    for &(r, cc, z) in e {
                        if r as usize == k && cc as usize == j {
                            *re.terms.entry(p).or_insert(0.0) += z.re;
                            *im.terms.entry(p).or_insert(0.0) += z.im;
                        }
                    }
                }
                for l in [re, im] {
                    let trivial = l.constant.abs() <= ZERO && l.terms.values().all(|v| v.abs() <= ZERO);
                    if !trivial {
                        out.push(l);
                    }
                }
            }
        }
        out
    }

    /// The off-diagonal part X − diag(X).
    pub fn off_diagonal(&self) -> Self {
        let mut constant = self.constant.clone();
        for i in 0..self.dim {
            constant[(i, i)] = c(0.0, 0.0);
        }
        Self {
            dim: self.dim,
            constant,
            terms: self
                .terms
                .iter()
                .map(|(&j, e)| (j, e.iter().filter(|e| e.0 != e.1).copied().collect()))
                .collect(),
        }
    }

    /// Entrywise imaginary part i·Im(X) (so that X = Re X + i Im X stays Hermitian).
    pub fn imaginary_part(&self) -> Self {
        Self {
            dim: self.dim,
            constant: self.constant.map(|z| c(0.0, z.im)),
            terms: self
                .terms
                .iter()
                .map(|(&j, e)| {
                    (
                        j,
                        e.iter()
                            .filter(|e| e.2.im != 0.0)
                            .map(|&(r, cc, z)| (r, cc, c(0.0, z.im)))
                            .collect(),
                    )
                })
                .collect(),
        }
    }

    /// ⟨C, X⟩ = Re Tr(C† X) as a scalar expression.
    pub fn inner(&self, op: &HermitianOperator) -> LinExpr {
        let cm = op.matrix();
        let constant = cm
            .iter()
            .zip(self.constant.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        let mut terms = BTreeMap::new();
        for (&j, e) in &self.terms {
            let v: f64 = e
                .iter()
                .map(|&(r, cc, z)| (cm[(r as usize, cc as usize)].conj() * z).re)
                .sum();
            if v != 0.0 {
                terms.insert(j, v);
            }
        }
        LinExpr { terms, constant }
    }

    pub fn trace(&self) -> LinExpr {
        self.inner(&HermitianOperator::identity(self.dim))
    }

    /// Evaluates the expression at a parameter vector.
    pub(crate) fn eval(&self, x: &[f64]) -> HermitianOperator {
        let mut m = self.constant.clone();
        for (&j, e) in &self.terms {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for &(r, cc, z) in e {
                m[(r as usize, cc as usize)] += z * xj;
            }
        }
        HermitianOperator::new(m).expect("square by construction")
    }
}

fn nonzero_entries(m: &CMat) -> Vec<Entry> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                out.push((i as u32, j as u32, z));
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub(crate) enum ConstraintKind {
    /// Linear rows (expr = 0); the flag marks imaginary-part rows.
    Eq(Vec<(LinExpr, bool)>),
    NonNeg(LinExpr),
    Psd(MatExpr),
}

#[derive(Debug, Clone)]
pub(crate) struct ConstraintInfo {
    pub(crate) kind: ConstraintKind,
    pub(crate) label: String,
}

/// A linear objective over scalar/matrix variables with equality, nonnegativity and
/// PSD constraints.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    vars: Vec<VarInfo>,
    /// For every parameter: true when it is the imaginary part of a Hermitian entry.
    odd: Vec<bool>,
    objective: LinExpr,
    sense: Sense,
    pub(crate) constraints: Vec<ConstraintInfo>,
}

impl Default for ConicProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl ConicProblem {
    pub fn new() -> Self {
        Self {
            vars: Vec::new(),
            odd: Vec::new(),
            objective: LinExpr::zero(),
            sense: Sense::Minimize,
            constraints: Vec::new(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.odd.len()
    }

    fn declare(&mut self, kind: VarKind) -> VarId {
        let offset = self.odd.len();
        match kind {
            VarKind::Scalar => self.odd.push(false),
            VarKind::Symmetric(d) => self.odd.extend(core::iter::repeat_n(false, svec_len(d))),
            VarKind::Hermitian(d) => {
                let off = d * (d - 1) / 2;
                self.odd.extend(core::iter::repeat_n(false, d + off));
                self.odd.extend(core::iter::repeat_n(true, off));
            }
        }
        self.vars.push(VarInfo { kind, offset });
        VarId(self.vars.len() - 1)
    }

    pub fn scalar(&mut self) -> VarId {
        self.declare(VarKind::Scalar)
    }

    pub fn symmetric(&mut self, d: usize) -> VarId {
        self.declare(VarKind::Symmetric(d))
    }

    pub fn hermitian(&mut self, d: usize) -> VarId {
        self.declare(VarKind::Hermitian(d))
    }

    /// A d×d matrix variable, real symmetric when `real` holds and Hermitian otherwise.
    pub fn matrix(&mut self, d: usize, real: bool) -> VarId {
        if real {
            self.symmetric(d)
        } else {
            self.hermitian(d)
        }
    }

    pub fn kind(&self, v: VarId) -> VarKind {
        self.vars[v.0].kind
    }

    /// The scalar variable as an expression.
    pub fn lin(&self, v: VarId) -> LinExpr {
        let info = &self.vars[v.0];
        assert_eq!(info.kind, VarKind::Scalar, "variable is not a scalar");
        LinExpr::param(info.offset, 1.0)
    }

    /// The matrix variable as an expression.
    pub fn mat(&self, v: VarId) -> MatExpr {
        let info = &self.vars[v.0];
        let one = c(1.0, 0.0);
        let mut terms = BTreeMap::new();
        let (d, herm) = match info.kind {
            VarKind::Scalar => panic!("variable is a scalar"),
            VarKind::Symmetric(d) => (d, false),
            VarKind::Hermitian(d) => (d, true),
        };
        let mut p = info.offset;
        if herm {
            for i in 0..d {
                terms.insert(p, vec![(i as u32, i as u32, one)]);
                p += 1;
            }
            for j in 0..d {
                for i in 0..j {
                    terms.insert(p, vec![(i as u32, j as u32, one), (j as u32, i as u32, one)]);
                    p += 1;
                }
            }
            for j in 0..d {
                for i in 0..j {
                    terms.insert(
                        p,
                        vec![(i as u32, j as u32, c(0.0, 1.0)), (j as u32, i as u32, c(0.0, -1.0))],
                    );
                    p += 1;
                }
            }
        } else {
            for j in 0..d {
                for i in 0..=j {
                    if i == j {
                        terms.insert(p, vec![(i as u32, i as u32, one)]);
                    } else {
                        terms.insert(p, vec![(i as u32, j as u32, one), (j as u32, i as u32, one)]);
                    }
                    p += 1;
                }
            }
        }
        MatExpr {
            dim: d,
            constant: CMat::zeros(d, d),
            terms,
        }
    }

    pub fn minimize(&mut self, obj: LinExpr) {
        self.objective = obj;
        self.sense = Sense::Minimize;
    }

    pub fn maximize(&mut self, obj: LinExpr) {
        self.objective = obj;
        self.sense = Sense::Maximize;
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    fn push(&mut self, kind: ConstraintKind, label: &str) -> ConstraintId {
        self.constraints.push(ConstraintInfo {
            kind,
            label: label.into(),
        });
        ConstraintId(self.constraints.len() - 1)
    }

    /// expr = 0.
    pub fn add_eq(&mut self, expr: LinExpr, label: &str) -> ConstraintId {
        self.push(ConstraintKind::Eq(vec![(expr, false)]), label)
    }

    /// Matrix equality expr = 0 (one row per real degree of freedom).
    pub fn add_eq_matrix(&mut self, expr: &MatExpr, label: &str) -> ConstraintId {
        self.push(ConstraintKind::Eq(expr.entry_functionals()), label)
    }

    /// expr ≥ 0.
    pub fn add_nonneg(&mut self, expr: LinExpr, label: &str) -> ConstraintId {
        self.push(ConstraintKind::NonNeg(expr), label)
    }

    /// expr ⪰ 0.
    pub fn add_psd(&mut self, expr: MatExpr, label: &str) -> ConstraintId {
        self.push(ConstraintKind::Psd(expr), label)
    }

    pub fn constraint_label(&self, id: ConstraintId) -> &str {
        &self.constraints[id.0].label
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// True when the problem is invariant under entrywise conjugation, so real-symmetric
    /// variables lose no generality.
    pub fn is_real(&self) -> bool {
        let lin_even = |l: &LinExpr| l.terms.iter().all(|(&j, &v)| v == 0.0 || !self.odd[j]);
        let lin_odd = |l: &LinExpr| l.constant == 0.0 && l.terms.iter().all(|(&j, &v)| v == 0.0 || self.odd[j]);
        if !lin_even(&self.objective) {
            return false;
        }
        let mat_ok = |m: &MatExpr| {
            m.constant.iter().all(|z| z.im == 0.0)
                && m.terms.iter().all(|(&j, e)| {
                    if self.odd[j] {
                        e.iter().all(|z| z.2.re == 0.0)
                    } else {
                        e.iter().all(|z| z.2.im == 0.0)
                    }
                })
        };
        self.constraints.iter().all(|ci| match &ci.kind {
            ConstraintKind::Eq(rows) => rows.iter().all(|(l, im)| if *im { lin_odd(l) } else { lin_even(l) }),
            ConstraintKind::NonNeg(l) => lin_even(l),
            ConstraintKind::Psd(m) => mat_ok(m),
        })
    }

    /// Compiles to standard form. `real` selects the undoubled real-symmetric path and
    /// must only be used when [`ConicProblem::is_real`] holds.
    pub(crate) fn compile(&self, real: bool) -> StandardForm {
        // parameter -> column
        let mut col_of = vec![usize::MAX; self.odd.len()];
        let mut n = 0;
        for (j, &o) in self.odd.iter().enumerate() {
            if !(real && o) {
                col_of[j] = n;
                n += 1;
            }
        }
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cvec = DVector::zeros(n);
        for (&j, &v) in &self.objective.terms {
            if col_of[j] != usize::MAX {
                cvec[col_of[j]] += sign * v;
            }
        }
        let mut eq_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        let mut eq_map: Vec<Vec<Option<usize>>> = Vec::new();
        let mut nonneg: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        let mut cones: Vec<Cone> = Vec::new();
        let mut psd_cols: Vec<Vec<(usize, Vec<(usize, f64)>)>> = Vec::new();
        let mut psd_h: Vec<Vec<f64>> = Vec::new();
        let mut locate = vec![Located::None; self.constraints.len()];
        let to_row = |l: &LinExpr| -> Vec<(usize, f64)> {
            l.terms
                .iter()
                .filter(|(&j, &v)| v != 0.0 && col_of[j] != usize::MAX)
                .map(|(&j, &v)| (col_of[j], v))
                .collect()
        };
        for (k, ci) in self.constraints.iter().enumerate() {
            match &ci.kind {
                ConstraintKind::Eq(rows) => {
                    let mut map = Vec::new();
                    for (l, im) in rows {
                        if real && *im {
                            map.push(None);
                            continue;
                        }
                        map.push(Some(eq_rows.len()));
                        eq_rows.push((to_row(l), -l.constant));
                    }
                    locate[k] = Located::Eq(eq_map.len());
                    eq_map.push(map);
                }
                ConstraintKind::NonNeg(l) => {
                    locate[k] = Located::NonNeg(nonneg.len());
                    nonneg.push((to_row(l), l.constant));
                }
                ConstraintKind::Psd(m) => {
                    let kdim = if real { m.dim } else { 2 * m.dim };
                    let (cols, h) = compile_psd(m, real, &col_of);
                    locate[k] = Located::Psd(cones.len());
                    psd_cols.push(cols);
                    psd_h.push(h);
                    cones.push(Cone::Psd(kdim));
                }
            }
        }
        // assemble: nonneg block first, then PSD blocks
        let mut all_cones = Vec::new();
        let mut g_blocks = Vec::new();
        let mut h = Vec::new();
        if !nonneg.is_empty() {
            all_cones.push(Cone::NonNeg(nonneg.len()));
            let mut cols: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
            for (r, (row, cst)) in nonneg.iter().enumerate() {
                for &(j, v) in row {
                    cols.entry(j).or_default().push((r, -v));
                }
                h.push(*cst);
            }
            g_blocks.push(cols.into_iter().collect::<Vec<_>>());
        }
        let nn_shift = usize::from(!nonneg.is_empty());
        for (cone, (cols, hb)) in cones.iter().zip(psd_cols.into_iter().zip(psd_h)) {
            all_cones.push(*cone);
            g_blocks.push(cols);
            h.extend(hb);
        }
        for l in locate.iter_mut() {
            if let Located::Psd(i) = l {
                *i += nn_shift;
            }
        }
        let m = eq_rows.len();
        let mut a = DMatrix::zeros(m, n);
        let mut b = DVector::zeros(m);
        for (r, (row, rhs)) in eq_rows.iter().enumerate() {
            for &(j, v) in row {
                a[(r, j)] += v;
            }
            b[r] = *rhs;
        }
        StandardForm {
            n,
            c: cvec,
            a,
            b,
            cones: all_cones,
            g: g_blocks,
            h: DVector::from_vec(h),
            real,
            col_of,
            locate,
            eq_map,
            objective_constant: self.objective.constant,
            sign,
        }
    }
}

fn compile_psd(
    m: &MatExpr,
    real: bool,
    col_of: &[usize],
) -> (Vec<(usize, Vec<(usize, f64)>)>, Vec<f64>) {
    let d = m.dim;
    let k = if real { d } else { 2 * d };
    let sq2 = core::f64::consts::SQRT_2;
    // lower-triangle svec entries of the (doubled) symmetric embedding of an entry list
    let embed = |entries: &mut dyn Iterator<Item = (usize, usize, Complex64)>| -> BTreeMap<usize, f64> {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        let mut put = |i: usize, j: usize, v: f64| {
            if i >= j && v != 0.0 {
                let s = if i == j { 1.0 } else { sq2 };
                *acc.entry(svec_index(i, j, k)).or_insert(0.0) += s * v;
            }
        };
        for (r, cc, z) in entries {
            if real {
                put(r, cc, z.re);
            } else {
                put(r, cc, z.re);
                put(r + d, cc + d, z.re);
                put(r + d, cc, z.im);
                put(r, cc + d, -z.im);
            }
        }
        acc
    };
    let mut hmap = {
        let mut it = (0..d).flat_map(|j| (0..d).map(move |i| (i, j))).map(|(i, j)| (i, j, m.constant[(i, j)]));
        embed(&mut it)
    };
    let mut h = vec![0.0; svec_len(k)];
    for (idx, v) in core::mem::take(&mut hmap) {
        h[idx] = v;
    }
    let mut cols: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for (&p, e) in &m.terms {
        let col = col_of[p];
        if col == usize::MAX {
            continue;
        }
        let mut it = e.iter().map(|&(r, cc, z)| (r as usize, cc as usize, z));
        let sv = embed(&mut it);
        let target = cols.entry(col).or_default();
        for (idx, v) in sv {
            *target.entry(idx).or_insert(0.0) += v;
        }
    }
    let cols = cols
        .into_iter()
        .map(|(j, e)| (j, e.into_iter().filter(|(_, v)| *v != 0.0).map(|(i, v)| (i, -v)).collect::<Vec<_>>()))
        .filter(|(_, e): &(usize, Vec<(usize, f64)>)| !e.is_empty())
        .collect();
    (cols, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Located {
    None,
    Eq(usize),
    NonNeg(usize),
    Psd(usize),
}

/// Compiled problem data. `g[k]` lists the nonzero columns of block k of G with
/// block-local row indices.
#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub(crate) n: usize,
    pub(crate) c: DVector<f64>,
    pub(crate) a: DMatrix<f64>,
    pub(crate) b: DVector<f64>,
    pub(crate) cones: Vec<Cone>,
    pub(crate) g: Vec<Vec<(usize, Vec<(usize, f64)>)>>,
    pub(crate) h: DVector<f64>,
    pub(crate) real: bool,
    pub(crate) col_of: Vec<usize>,
    pub(crate) locate: Vec<Located>,
    pub(crate) eq_map: Vec<Vec<Option<usize>>>,
    pub(crate) objective_constant: f64,
    pub(crate) sign: f64,
}

impl StandardForm {
    pub(crate) fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.cones.len() + 1);
        let mut o = 0;
        for cone in &self.cones {
            off.push(o);
            o += cone.len();
        }
        off.push(o);
        off
    }

    pub(crate) fn g_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let off = self.offsets();
        let mut out = DVector::zeros(off[self.cones.len()]);
        for (k, cols) in self.g.iter().enumerate() {
            for (j, e) in cols {
                let xj = x[*j];
                if xj == 0.0 {
                    continue;
                }
                for &(r, v) in e {
                    out[off[k] + r] += v * xj;
                }
            }
        }
        out
    }

    pub(crate) fn gt_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        let off = self.offsets();
        let mut out = DVector::zeros(self.n);
        for (k, cols) in self.g.iter().enumerate() {
            for (j, e) in cols {
                out[*j] += e.iter().map(|&(r, v)| v * z[off[k] + r]).sum::<f64>();
            }
        }
        out
    }

    /// Expands a column vector to the full parameter vector (dropped parameters are 0).
    pub(crate) fn params(&self, x: &DVector<f64>) -> Vec<f64> {
        self.col_of
            .iter()
            .map(|&cidx| if cidx == usize::MAX { 0.0 } else { x[cidx] })
            .collect()
    }
}

/// Converts a PSD block of the dual vector back to a Hermitian multiplier.
pub(crate) fn block_to_hermitian(z: &[f64], k: usize, real: bool) -> HermitianOperator {
    let zm = super::cone::smat(z, k);
    if real {
        HermitianOperator::from_real(zm).expect("square")
    } else {
        let d = k / 2;
        let m = CMat::from_fn(d, d, |i, j| {
            c(
                zm[(i, j)] + zm[(i + d, j + d)],
                zm[(i + d, j)] - zm[(i, j + d)],
            )
        });
        HermitianOperator::new(m).expect("square")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_variable_roundtrip() {
        let mut p = ConicProblem::new();
        let v = p.hermitian(3);
        let e = p.mat(v);
        let x: Vec<f64> = (0..9).map(|i| i as f64 + 1.0).collect();
        let m = e.eval(&x);
        assert_eq!(m.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(m.matrix()[(0, 1)], c(4.0, 7.0));
        assert_eq!(m.matrix()[(1, 0)], c(4.0, -7.0));
        assert_eq!(m.matrix()[(1, 2)], c(6.0, 9.0));
    }

    #[test]
    fn inner_and_trace() {
        let mut p = ConicProblem::new();
        let v = p.hermitian(2);
        let e = p.mat(v);
        let x = [1.0, 2.0, 0.5, -0.25];
        let op = HermitianOperator::new(CMat::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.3, 0.2), c(0.3, -0.2), c(-1.0, 0.0)],
        ))
        .unwrap();
        let direct = e.eval(&x).inner(&op);
        assert!((e.inner(&op).eval(&x) - direct).abs() < 1e-14);
        assert!((e.trace().eval(&x) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn real_detection() {
        let mut p = ConicProblem::new();
        let v = p.hermitian(2);
        let e = p.mat(v);
        p.add_psd(e.clone(), "psd");
        p.add_eq_matrix(&e.clone().sub_op(&HermitianOperator::identity(2)), "eq");
        p.minimize(e.trace());
        assert!(p.is_real());
        let y = HermitianOperator::new(CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)])).unwrap();
        p.add_psd(e.sub(&MatExpr::constant(&y)), "complex data");
        assert!(!p.is_real());
    }
}
