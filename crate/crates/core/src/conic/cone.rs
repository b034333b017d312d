//! Cone primitives: svec packing, Nesterov-Todd scalings, Jordan products and step
//! lengths for the nonnegative orthant and the real PSD cone.

// resolves to inherent methods when a dependency links std
#[allow(unused_imports)]
use crate::float::FloatExt;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix};

use crate::operator::{eigh_real, RMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cone {
    NonNeg(usize),
    /// Real symmetric k×k PSD cone in svec coordinates.
    Psd(usize),
}

impl Cone {
    pub(crate) fn len(&self) -> usize {
        match *self {
            Cone::NonNeg(n) => n,
            Cone::Psd(k) => svec_len(k),
        }
    }

    pub(crate) fn degree(&self) -> usize {
        match *self {
            Cone::NonNeg(n) => n,
            Cone::Psd(k) => k,
        }
    }
}

pub(crate) fn svec_len(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Position of entry (i, j), i ≥ j, in the column-major lower-triangle packing.
pub(crate) fn svec_index(i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i >= j);
    j * k - j * j.saturating_sub(1) / 2 + (i - j)
}

pub(crate) fn smat(v: &[f64], k: usize) -> RMat {
    let mut m = RMat::zeros(k, k);
    let r = core::f64::consts::FRAC_1_SQRT_2;
    let mut p = 0;
    for j in 0..k {
        for i in j..k {
            if i == j {
                m[(i, i)] = v[p];
            } else {
                m[(i, j)] = v[p] * r;
                m[(j, i)] = v[p] * r;
            }
            p += 1;
        }
    }
    m
}

pub(crate) fn svec_into(m: &RMat, out: &mut [f64]) {
    let k = m.nrows();
    let s = core::f64::consts::SQRT_2;
    let mut p = 0;
    for j in 0..k {
        for i in j..k {
            out[p] = if i == j { m[(i, i)] } else { s * 0.5 * (m[(i, j)] + m[(j, i)]) };
            p += 1;
        }
    }
}

/// Identity element of a cone in its packed coordinates.
pub(crate) fn unit(cone: Cone, out: &mut [f64]) {
    match cone {
        Cone::NonNeg(_) => out.iter_mut().for_each(|x| *x = 1.0),
        Cone::Psd(k) => {
            out.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..k {
                out[svec_index(i, i, k)] = 1.0;
            }
        }
    }
}

/// Largest t with u + t·e on the boundary, i.e. −λ_min(u).
pub(crate) fn max_boundary_shift(cone: Cone, u: &[f64]) -> f64 {
    match cone {
        Cone::NonNeg(_) => u.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(-x)),
        Cone::Psd(k) => -eigh_real(&smat(u, k)).0[0],
    }
}

/// Nesterov-Todd scaling of one cone. For the PSD cone W(z) = Rᵀ z R, Wᵀ(u) = R u Rᵀ,
/// and λ = W z = W⁻ᵀ s is diagonal.
#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    NonNeg { w: Vec<f64>, lam: Vec<f64> },
    Psd { r: RMat, rinv: RMat, lam: Vec<f64> },
}

/// Square-root factor L with m = L Lᵀ; falls back to an eigen square root when Cholesky
/// fails on a numerically borderline matrix.
fn sqrt_factor(m: &RMat) -> Option<RMat> {
    let sym = (m + m.transpose()) * 0.5;
    if let Some(ch) = Cholesky::new(sym.clone()) {
        return Some(ch.l());
    }
    let (vals, vecs) = eigh_real(&sym);
    if vals[0] <= 0.0 {
        return None;
    }
    let k = vals.len();
    Some(DMatrix::from_fn(k, k, |i, j| vecs[(i, j)] * vals[j].sqrt()))
}

/// Scaled-point pair (s̃, z̃) -> relative scaling R̃, R̃⁻¹ and new λ.
fn nt_from_pair(s: &RMat, z: &RMat) -> Option<(RMat, RMat, Vec<f64>)> {
    let l1 = sqrt_factor(s)?;
    let l2 = sqrt_factor(z)?;
    let prod = l2.transpose() * &l1;
    let svd = prod.svd(true, true);
    let u = svd.u?;
    let vt = svd.v_t?;
    let sig: Vec<f64> = svd.singular_values.iter().copied().collect();
    if sig.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return None;
    }
    let k = sig.len();
    let isq: Vec<f64> = sig.iter().map(|x| 1.0 / x.sqrt()).collect();
    // R̃ = L1 V Σ^{-1/2},  R̃⁻¹ = Σ^{-1/2} Uᵀ L2ᵀ
    let v = vt.transpose();
    let mut rt = &l1 * v;
    for j in 0..k {
        let f = isq[j];
        rt.column_mut(j).scale_mut(f);
    }
    let mut rti = u.transpose() * l2.transpose();
    for i in 0..k {
        let f = isq[i];
        rti.row_mut(i).scale_mut(f);
    }
    Some((rt, rti, sig))
}

impl Scaling {
    /// Initial scaling from strictly interior (s, z).
    pub(crate) fn new(cone: Cone, s: &[f64], z: &[f64]) -> Option<Self> {
        match cone {
            Cone::NonNeg(_) => {
                if s.iter().chain(z.iter()).any(|&x| !(x > 0.0)) {
                    return None;
                }
                Some(Scaling::NonNeg {
                    w: s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect(),
                    lam: s.iter().zip(z).map(|(a, b)| (a * b).sqrt()).collect(),
                })
            }
            Cone::Psd(k) => {
                let (r, rinv, lam) = nt_from_pair(&smat(s, k), &smat(z, k))?;
                Some(Scaling::Psd { r, rinv, lam })
            }
        }
    }

    pub(crate) fn lambda_packed(&self) -> Vec<f64> {
        match self {
            Scaling::NonNeg { lam, .. } => lam.clone(),
            Scaling::Psd { lam, .. } => {
                let k = lam.len();
                let mut v = vec![0.0; svec_len(k)];
                for i in 0..k {
                    v[svec_index(i, i, k)] = lam[i];
                }
                v
            }
        }
    }

    /// ⟨λ, λ⟩.
    pub(crate) fn lambda_sq(&self) -> f64 {
        match self {
            Scaling::NonNeg { lam, .. } | Scaling::Psd { lam, .. } => lam.iter().map(|x| x * x).sum(),
        }
    }

    /// W u.
    pub(crate) fn w(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w, .. } => {
                for i in 0..u.len() {
                    out[i] = u[i] * w[i];
                }
            }
            Scaling::Psd { r, .. } => {
                let k = r.nrows();
                let m = r.transpose() * smat(u, k) * r;
                svec_into(&m, out);
            }
        }
    }

    /// Wᵀ u.
    pub(crate) fn wt(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w, .. } => {
                for i in 0..u.len() {
                    out[i] = u[i] * w[i];
                }
            }
            Scaling::Psd { r, .. } => {
                let k = r.nrows();
                let m = r * smat(u, k) * r.transpose();
                svec_into(&m, out);
            }
        }
    }

    /// W⁻ᵀ u.
    pub(crate) fn winvt(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w, .. } => {
                for i in 0..u.len() {
                    out[i] = u[i] / w[i];
                }
            }
            Scaling::Psd { rinv, .. } => {
                let k = rinv.nrows();
                let m = rinv * smat(u, k) * rinv.transpose();
                svec_into(&m, out);
            }
        }
    }

    /// W⁻¹ u.
    pub(crate) fn winv(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w, .. } => {
                for i in 0..u.len() {
                    out[i] = u[i] / w[i];
                }
            }
            Scaling::Psd { rinv, .. } => {
                let k = rinv.nrows();
                let m = rinv.transpose() * smat(u, k) * rinv;
                svec_into(&m, out);
            }
        }
    }

    /// Columns W⁻ᵀ gⱼ for a block of sparse G columns, as a dense (rows × cols) matrix.
    pub(crate) fn winvt_columns(&self, cols: &[(usize, Vec<(usize, f64)>)], rows: usize) -> RMat {
        let mut out = RMat::zeros(rows, cols.len());
        match self {
            Scaling::NonNeg { w, .. } => {
                for (c, (_, e)) in cols.iter().enumerate() {
                    for &(r, v) in e {
                        out[(r, c)] = v / w[r];
                    }
                }
            }
            Scaling::Psd { rinv, .. } => {
                let k = rinv.nrows();
                let pos = unpack_positions(k);
                let s2 = core::f64::consts::FRAC_1_SQRT_2;
                let mut buf = vec![0.0; rows];
                for (c, (_, e)) in cols.iter().enumerate() {
                    let m = if e.len() * 2 < k {
                        // sparse path: Σ v·(rᵢ rⱼᵀ + rⱼ rᵢᵀ)/√2 off-diagonal, v·rᵢ rᵢᵀ diagonal
                        let mut m = RMat::zeros(k, k);
                        for &(p, v) in e {
                            let (i, j) = pos[p];
                            let ci = rinv.column(i);
                            if i == j {
                                m.ger(v, &ci, &ci, 1.0);
                            } else {
                                let cj = rinv.column(j);
                                m.ger(v * s2, &ci, &cj, 1.0);
                                m.ger(v * s2, &cj, &ci, 1.0);
                            }
                        }
                        m
                    } else {
                        let mut sv = vec![0.0; rows];
                        for &(p, v) in e {
                            sv[p] = v;
                        }
                        rinv * smat(&sv, k) * rinv.transpose()
                    };
                    svec_into(&m, &mut buf);
                    out.column_mut(c).copy_from_slice(&buf);
                }
            }
        }
        out
    }

    /// λ ∘ u.
    pub(crate) fn lam_prod(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { lam, .. } => {
                for i in 0..u.len() {
                    out[i] = lam[i] * u[i];
                }
            }
            Scaling::Psd { lam, .. } => {
                let k = lam.len();
                let mut p = 0;
                for j in 0..k {
                    for i in j..k {
                        out[p] = 0.5 * (lam[i] + lam[j]) * u[p];
                        p += 1;
                    }
                }
            }
        }
    }

    /// λ \ u, the inverse of u ↦ λ ∘ u.
    pub(crate) fn lam_div(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { lam, .. } => {
                for i in 0..u.len() {
                    out[i] = u[i] / lam[i];
                }
            }
            Scaling::Psd { lam, .. } => {
                let k = lam.len();
                let mut p = 0;
                for j in 0..k {
                    for i in j..k {
                        out[p] = 2.0 * u[p] / (lam[i] + lam[j]);
                        p += 1;
                    }
                }
            }
        }
    }

    /// Largest α with λ + α·d in the cone (∞ if unbounded).
    pub(crate) fn max_step(&self, d: &[f64]) -> f64 {
        match self {
            Scaling::NonNeg { lam, .. } => {
                let mut a = f64::INFINITY;
                for i in 0..d.len() {
                    if d[i] < 0.0 {
                        a = a.min(-lam[i] / d[i]);
                    }
                }
                a
            }
            Scaling::Psd { lam, .. } => {
                let k = lam.len();
                let mut m = smat(d, k);
                for i in 0..k {
                    for j in 0..k {
                        m[(i, j)] /= (lam[i] * lam[j]).sqrt();
                    }
                }
                let e = eigh_real(&m).0[0];
                if e >= 0.0 {
                    f64::INFINITY
                } else {
                    -1.0 / e
                }
            }
        }
    }

    /// Moves to the new scaled iterates λ + α·ds̃ and λ + α·dz̃ and rescales.
    pub(crate) fn update(&mut self, ds: &[f64], dz: &[f64], alpha: f64) -> bool {
        match self {
            Scaling::NonNeg { w, lam } => {
                for i in 0..lam.len() {
                    let s = lam[i] + alpha * ds[i];
                    let z = lam[i] + alpha * dz[i];
                    if !(s > 0.0 && z > 0.0) {
                        return false;
                    }
                    w[i] *= (s / z).sqrt();
                    lam[i] = (s * z).sqrt();
                }
                true
            }
            Scaling::Psd { r, rinv, lam } => {
                let k = lam.len();
                let mut s = smat(ds, k) * alpha;
                let mut z = smat(dz, k) * alpha;
                for i in 0..k {
                    s[(i, i)] += lam[i];
                    z[(i, i)] += lam[i];
                }
                match nt_from_pair(&s, &z) {
                    Some((rt, _, sig)) => {
                        *r = &*r * rt;
                        // invert the accumulated factor directly so W and W⁻¹ stay consistent
                        match r.clone().try_inverse() {
                            Some(inv) => *rinv = inv,
                            None => return false,
                        }
                        *lam = sig;
                        true
                    }
                    None => false,
                }
            }
        }
    }

    /// Unscaled s = Wᵀλ and z = W⁻¹λ.
    pub(crate) fn primal_dual(&self, s: &mut [f64], z: &mut [f64]) {
        let l = self.lambda_packed();
        self.wt(&l, s);
        self.winv(&l, z);
    }
}

/// Jordan product u ∘ v of packed vectors.
pub(crate) fn jordan(cone: Cone, u: &[f64], v: &[f64], out: &mut [f64]) {
    match cone {
        Cone::NonNeg(_) => {
            for i in 0..u.len() {
                out[i] = u[i] * v[i];
            }
        }
        Cone::Psd(k) => {
            let a = smat(u, k);
            let b = smat(v, k);
            let m = (&a * &b + &b * &a) * 0.5;
            svec_into(&m, out);
        }
    }
}

fn unpack_positions(k: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(svec_len(k));
    for j in 0..k {
        for i in j..k {
            v.push((i, j));
        }
    }
    v
}

/// Minimum eigenvalue (or entry) of a packed cone vector: negative means outside.
pub(crate) fn cone_min(cone: Cone, u: &[f64]) -> f64 {
    -max_boundary_shift(cone, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn svec(m: &RMat) -> Vec<f64> {
        let mut out = vec![0.0; svec_len(m.nrows())];
        svec_into(m, &mut out);
        out
    }

    #[test]
    fn svec_roundtrip_and_inner_product() {
        let k = 4;
        let a = RMat::from_fn(k, k, |i, j| (i + 2 * j) as f64 + if i == j { 3.0 } else { 0.0 });
        let a = (&a + a.transpose()) * 0.5;
        let b = RMat::from_fn(k, k, |i, j| ((i * j) as f64).sin());
        let b = (&b + b.transpose()) * 0.5;
        let sa = svec(&a);
        let sb = svec(&b);
        let ip: f64 = sa.iter().zip(&sb).map(|(x, y)| x * y).sum();
        assert!((ip - a.dot(&b)).abs() < 1e-12);
        assert!((smat(&sa, k) - a).norm() < 1e-12);
        for j in 0..k {
            for i in j..k {
                let mut e = RMat::zeros(k, k);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                let v = svec(&e);
                assert!(v[svec_index(i, j, k)] > 0.0);
            }
        }
    }

    #[test]
    fn nt_scaling_identities() {
        let k = 3;
        let s = RMat::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0]);
        let z = RMat::from_row_slice(3, 3, &[1.0, -0.1, 0.0, -0.1, 0.7, 0.2, 0.0, 0.2, 3.0]);
        let sc = Scaling::new(Cone::Psd(k), &svec(&s), &svec(&z)).unwrap();
        let lam = sc.lambda_packed();
        let mut out = vec![0.0; svec_len(k)];
        sc.w(&svec(&z), &mut out);
        for (a, b) in out.iter().zip(&lam) {
            assert!((a - b).abs() < 1e-10);
        }
        sc.winvt(&svec(&s), &mut out);
        for (a, b) in out.iter().zip(&lam) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
