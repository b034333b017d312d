//! Dense Hermitian operators, quantum states and the spectral helpers built on them.

// resolves to inherent methods when a dependency links std
#[allow(unused_imports)]
use crate::float::FloatExt;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

/// Tolerance on asymmetry below which symmetrization is silent.
pub const HERMITICITY_WARN: f64 = 1e-8;
/// Default tolerance for PSD and trace checks on states.
pub const STATE_TOL: f64 = 1e-9;
/// Default rank tolerance for support computations.
pub const RANK_TOL: f64 = 1e-9;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A dense complex Hermitian matrix, optionally tagged with subsystem dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: CMat,
    dims: Option<Vec<usize>>,
}

/// Eigendecomposition with eigenvalues in ascending order; columns of `vectors` match.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianOperator {
    /// Builds an operator from a square matrix, replacing it by (m + m†)/2.
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "operator must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let adj = m.adjoint();
        let asym = (&m - &adj).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if asym > HERMITICITY_WARN {
            log::warn!("symmetrizing operator with asymmetry {asym:e}");
        }
        Ok(Self::from_hermitian_unchecked((m + adj) * c(0.5, 0.0)))
    }

    pub(crate) fn from_hermitian_unchecked(m: CMat) -> Self {
        Self { m, dims: None }
    }

    pub fn from_real(m: RMat) -> Result<Self> {
        Self::new(m.map(|x| c(x, 0.0)))
    }

    /// Builds from separate real and imaginary parts.
    pub fn from_parts(re: &RMat, im: &RMat) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::Dimension("real and imaginary parts differ in shape".into()));
        }
        Self::new(CMat::from_fn(re.nrows(), re.ncols(), |i, j| c(re[(i, j)], im[(i, j)])))
    }

    pub fn zeros(d: usize) -> Self {
        Self::from_hermitian_unchecked(CMat::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        Self::from_hermitian_unchecked(CMat::identity(d, d))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_hermitian_unchecked(CMat::from_fn(n, n, |i, j| {
            if i == j {
                c(values[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        }))
    }

    /// |v⟩⟨v| for an arbitrary (not necessarily normalized) vector.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        Self::from_hermitian_unchecked(CMat::from_fn(n, n, |i, j| v[i] * v[j].conj()))
    }

    /// |i⟩⟨i| in dimension d.
    pub fn basis_projector(d: usize, i: usize) -> Self {
        let mut m = CMat::zeros(d, d);
        m[(i, i)] = c(1.0, 0.0);
        Self::from_hermitian_unchecked(m)
    }

    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        if dims.iter().product::<usize>() != self.dim() {
            return Err(Error::Dimension(format!(
                "subsystem dims {:?} do not multiply to {}",
                dims,
                self.dim()
            )));
        }
        self.dims = Some(dims);
        Ok(self)
    }

    pub fn dims(&self) -> Option<&[usize]> {
        self.dims.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn real_part(&self) -> RMat {
        self.m.map(|z| z.re)
    }

    pub fn imag_part(&self) -> RMat {
        self.m.map(|z| z.im)
    }

    /// Largest absolute imaginary entry.
    pub fn max_imag(&self) -> f64 {
        self.m.iter().fold(0.0f64, |a, z| a.max(z.im.abs()))
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    /// Hilbert-Schmidt inner product Tr(A B), real for Hermitian arguments.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            m: &self.m * c(a, 0.0),
            dims: self.dims.clone(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.transpose(),
            dims: self.dims.clone(),
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            m: self.m.map(|z| z.conj()),
            dims: self.dims.clone(),
        }
    }

    /// Conjugation V X V† by an arbitrary (possibly rectangular) matrix.
    pub fn congruence(&self, v: &CMat) -> Self {
        Self::from_hermitian_unchecked(hermitize(v * &self.m * v.adjoint()))
    }

    pub fn eigh(&self) -> Eigh {
        eigh(&self.m)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    /// Operator norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        let e = self.eigenvalues();
        e[0].abs().max(e[e.len() - 1].abs())
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Applies a real function to the spectrum.
    pub fn apply_spectral(&self, f: impl Fn(f64) -> f64) -> Self {
        let e = self.eigh();
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for k in 0..d {
            let fk = f(e.values[k]);
            if fk == 0.0 {
                continue;
            }
            let v = e.vectors.column(k);
            m += (&v * v.adjoint()) * c(fk, 0.0);
        }
        Self::from_hermitian_unchecked(hermitize(m))
    }

    /// Orthonormal basis of the eigenvectors with eigenvalue above `rank_tol`, as columns.
    pub fn support_basis(&self, rank_tol: f64) -> CMat {
        let e = self.eigh();
        let cols: Vec<usize> = (0..self.dim()).filter(|&k| e.values[k] > rank_tol).collect();
        CMat::from_fn(self.dim(), cols.len(), |i, j| e.vectors[(i, cols[j])])
    }

    /// Orthonormal basis of the complement of the support, as columns.
    pub fn kernel_basis(&self, rank_tol: f64) -> CMat {
        let e = self.eigh();
        let cols: Vec<usize> = (0..self.dim()).filter(|&k| e.values[k] <= rank_tol).collect();
        CMat::from_fn(self.dim(), cols.len(), |i, j| e.vectors[(i, cols[j])])
    }

    pub fn rank(&self, rank_tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&v| v > rank_tol).count()
    }

    /// Projector onto the span of eigenvectors with eigenvalue above `rank_tol`.
    pub fn support_projector(&self, rank_tol: f64) -> Result<Self> {
        let lmin = self.min_eigenvalue();
        if lmin < -rank_tol.max(STATE_TOL) {
            return Err(Error::Domain(format!(
                "support projector needs a PSD operator, min eigenvalue {lmin:e}"
            )));
        }
        let mut p = self.apply_spectral(|x| if x > rank_tol { 1.0 } else { 0.0 });
        p.dims = self.dims.clone();
        Ok(p)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        tensor_product(self, other)
    }

    /// Partial transpose on the single factor `subsystem` of `dims`.
    pub fn partial_transpose(&self, dims: &[usize], subsystem: usize) -> Result<Self> {
        partial_transpose(self, dims, subsystem)
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: Self) -> HermitianOperator {
        HermitianOperator {
            m: &self.m + &rhs.m,
            dims: self.dims.clone().or_else(|| rhs.dims.clone()),
        }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: Self) -> HermitianOperator {
        HermitianOperator {
            m: &self.m - &rhs.m,
            dims: self.dims.clone().or_else(|| rhs.dims.clone()),
        }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scale(rhs)
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        self.scale(-1.0)
    }
}

/// Makes a numerically Hermitian matrix exactly Hermitian.
pub(crate) fn hermitize(m: CMat) -> CMat {
    let adj = m.adjoint();
    (m + adj) * c(0.5, 0.0)
}

/// Ascending eigendecomposition of a Hermitian matrix.
pub fn eigh(m: &CMat) -> Eigh {
    let n = m.nrows();
    let real = m.iter().all(|z| z.im == 0.0);
    let (vals, vecs): (Vec<f64>, CMat) = if real {
        let e = m.map(|z| z.re).symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|x| c(x, 0.0)))
    } else {
        let e = m.clone().symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(core::cmp::Ordering::Equal));
    Eigh {
        values: idx.iter().map(|&k| vals[k]).collect(),
        vectors: CMat::from_fn(n, n, |i, j| vecs[(i, idx[j])]),
    }
}

/// Ascending eigendecomposition of a real symmetric matrix.
pub fn eigh_real(m: &RMat) -> (Vec<f64>, RMat) {
    let n = m.nrows();
    let e = m.clone().symmetric_eigen();
    let vals: Vec<f64> = e.eigenvalues.iter().copied().collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(core::cmp::Ordering::Equal));
    (
        idx.iter().map(|&k| vals[k]).collect(),
        RMat::from_fn(n, n, |i, j| e.eigenvectors[(i, idx[j])]),
    )
}

/// Kronecker product; subsystem metadata is concatenated.
pub fn tensor_product(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    let dims = {
        let mut d = a.dims.clone().unwrap_or_else(|| vec![a.dim()]);
        d.extend(b.dims.clone().unwrap_or_else(|| vec![b.dim()]));
        d
    };
    HermitianOperator {
        m: a.m.kronecker(&b.m),
        dims: Some(dims),
    }
}

/// Transposes tensor factor `subsystem` of `dims` in the computational basis.
pub fn partial_transpose(
    x: &HermitianOperator,
    dims: &[usize],
    subsystem: usize,
) -> Result<HermitianOperator> {
    if subsystem >= dims.len() {
        return Err(Error::Dimension(format!(
            "subsystem {subsystem} out of range for {} factors",
            dims.len()
        )));
    }
    let mut mask = vec![false; dims.len()];
    mask[subsystem] = true;
    partial_transpose_mask(x, dims, &mask)
}

/// Transposes every factor flagged in `mask`.
pub fn partial_transpose_mask(
    x: &HermitianOperator,
    dims: &[usize],
    mask: &[bool],
) -> Result<HermitianOperator> {
    if dims.iter().product::<usize>() != x.dim() || mask.len() != dims.len() {
        return Err(Error::Dimension(format!(
            "bipartition {:?} incompatible with dimension {}",
            dims,
            x.dim()
        )));
    }
    let perm = PtPermutation::new(dims, mask);
    let d = x.dim();
    let mut m = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let (r, cidx) = perm.map(i, j);
            m[(r, cidx)] = x.m[(i, j)];
        }
    }
    Ok(HermitianOperator {
        m,
        dims: x.dims.clone(),
    })
}

/// Index map (row, col) -> (row', col') of a partial transpose.
#[derive(Debug, Clone)]
pub(crate) struct PtPermutation {
    dims: Vec<usize>,
    mask: Vec<bool>,
    strides: Vec<usize>,
}

impl PtPermutation {
    pub(crate) fn new(dims: &[usize], mask: &[bool]) -> Self {
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Self {
            dims: dims.to_vec(),
            mask: mask.to_vec(),
            strides,
        }
    }

    pub(crate) fn map(&self, i: usize, j: usize) -> (usize, usize) {
        let (mut r, mut c) = (0, 0);
        for k in 0..self.dims.len() {
            let ik = (i / self.strides[k]) % self.dims[k];
            let jk = (j / self.strides[k]) % self.dims[k];
            let (a, b) = if self.mask[k] { (jk, ik) } else { (ik, jk) };
            r += a * self.strides[k];
            c += b * self.strides[k];
        }
        (r, c)
    }
}

/// A density operator: PSD with unit trace, optionally carrying subsystem dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    op: HermitianOperator,
}

impl QuantumState {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        Self::with_tol(op, STATE_TOL)
    }

    pub fn with_tol(op: HermitianOperator, tol: f64) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::Domain(format!("state trace {tr} differs from 1")));
        }
        let lmin = op.min_eigenvalue();
        if lmin < -tol {
            return Err(Error::Domain(format!("state has negative eigenvalue {lmin:e}")));
        }
        Ok(Self { op })
    }

    /// Normalizes a nonzero PSD operator to unit trace.
    pub fn normalized(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if tr <= 0.0 {
            return Err(Error::Domain("cannot normalize an operator with non-positive trace".into()));
        }
        Self::new(op.scale(1.0 / tr))
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> f64 {
        self.op.trace()
    }

    pub fn bipartition(&self) -> Option<&[usize]> {
        self.op.dims()
    }

    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Ok(Self {
            op: self.op.with_dims(dims)?,
        })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            op: tensor_product(&self.op, &other.op),
        }
    }

    /// Mixture Σ wᵢ ρᵢ; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &QuantumState)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Domain("empty mixture".into()))?;
        let mut acc = HermitianOperator::zeros(first.1.dim());
        for (w, s) in parts {
            if *w < 0.0 {
                return Err(Error::Domain("negative mixture weight".into()));
            }
            if s.dim() != acc.dim() {
                return Err(Error::Dimension("mixture of states with different dimensions".into()));
            }
            acc = &acc + &s.op.scale(*w);
        }
        if let Some(d) = first.1.bipartition() {
            acc = acc.with_dims(d.to_vec())?;
        }
        Self::new(acc)
    }
}

impl AsRef<HermitianOperator> for QuantumState {
    fn as_ref(&self) -> &HermitianOperator {
        &self.op
    }
}

/// Smallest eigenvalue of a Hermitian operator.
pub fn min_eigenvalue(x: &HermitianOperator) -> f64 {
    x.min_eigenvalue()
}

/// Orthogonal projector onto the support of a PSD operator.
pub fn support_projector(x: &HermitianOperator, rank_tol: f64) -> Result<HermitianOperator> {
    x.support_projector(rank_tol)
}

/// Fidelity ⟨φ|τ|φ⟩ with a pure target.
pub fn pure_target_fidelity(tau: &HermitianOperator, phi: &HermitianOperator) -> Result<f64> {
    if phi.rank(1e-9) != 1 {
        return Err(Error::Domain("target state is not rank one".into()));
    }
    if tau.dim() != phi.dim() {
        return Err(Error::Dimension("fidelity of operators with different dimensions".into()));
    }
    Ok(tau.inner(phi) / phi.trace())
}

/// Trace norm of a Hermitian operator.
pub fn trace_norm(x: &HermitianOperator) -> f64 {
    x.eigenvalues().iter().map(|v| v.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn symmetrizes_on_construction() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 1.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let h = HermitianOperator::new(m).unwrap();
        assert_eq!(h.matrix()[(0, 1)], c(0.5, 0.5));
        assert_eq!(h.matrix()[(1, 0)], c(0.5, -0.5));
    }

    #[test]
    fn identity_tensor() {
        let i4 = HermitianOperator::identity(2).tensor(&HermitianOperator::identity(2));
        assert_eq!(i4.matrix(), &CMat::identity(4, 4));
        assert_eq!(i4.dims(), Some(&[2usize, 2][..]));
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let phi = states::maximally_entangled(2);
        let pt = phi.op().partial_transpose(&[2, 2], 1).unwrap();
        let ev = pt.eigenvalues();
        let expect = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in ev.iter().zip(expect.iter()) {
            assert!(approx(*a, *b, 1e-12), "{ev:?}");
        }
    }

    #[test]
    fn transposing_both_factors_is_full_transpose() {
        let x = HermitianOperator::new(CMat::from_fn(6, 6, |i, j| {
            c((i * 7 + j * 3) as f64 % 5.0, (i as f64) - (j as f64))
        }))
        .unwrap();
        let a = partial_transpose(&x, &[2, 3], 0).unwrap();
        let b = partial_transpose(&a, &[2, 3], 1).unwrap();
        assert_eq!(b.matrix(), x.transpose().matrix());
    }

    #[test]
    fn min_eig_examples() {
        assert!(approx(HermitianOperator::identity(4).scale(0.25).min_eigenvalue(), 0.25, 1e-12));
        assert!(approx(HermitianOperator::diagonal(&[1.0, -2.0]).min_eigenvalue(), -2.0, 1e-12));
        for g in [0.1, 0.35, 0.9] {
            let iso = states::isotropic(g, 2).unwrap();
            assert!(approx(iso.op().min_eigenvalue(), g / 4.0, 1e-12));
        }
    }

    #[test]
    fn support_projectors() {
        let phi = states::maximally_entangled(2);
        let p = phi.op().support_projector(RANK_TOL).unwrap();
        assert!((&p - phi.op()).max_abs() < 1e-12);
        let id = HermitianOperator::identity(3).scale(1.0 / 3.0);
        assert!((&id.support_projector(RANK_TOL).unwrap() - &HermitianOperator::identity(3)).max_abs() < 1e-12);
        let a = states::figure3a();
        let pa = a.op().support_projector(RANK_TOL).unwrap();
        assert_eq!(pa.rank(1e-9), 2);
        assert!((&pa.congruence(pa.matrix()) - &pa).max_abs() < 1e-12);
        assert!(HermitianOperator::diagonal(&[1.0, -1.0]).support_projector(RANK_TOL).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let phi = states::maximally_entangled(2);
        assert!(approx(pure_target_fidelity(phi.op(), phi.op()).unwrap(), 1.0, 1e-12));
        let iso = states::isotropic(0.4, 2).unwrap();
        assert!(approx(pure_target_fidelity(iso.op(), phi.op()).unwrap(), 1.0 - 0.3, 1e-12));
        let orth = HermitianOperator::basis_projector(4, 1);
        assert!(approx(pure_target_fidelity(&orth, phi.op()).unwrap(), 0.0, 1e-15));
        assert!(pure_target_fidelity(phi.op(), iso.op()).is_err());
    }
}
