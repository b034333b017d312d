//! Primal-dual interior-point method on the homogeneous self-dual embedding with
//! Nesterov-Todd scaling and Mehrotra predictor-corrector steps.

// resolves to inherent methods when a dependency links std
#[allow(unused_imports)]
use crate::float::FloatExt;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, LU};

use super::cone::{jordan, max_boundary_shift, unit, Scaling};
use super::model::StandardForm;
use super::{SolveOptions, Status};

/// Result in standard-form coordinates. `y` refers to the original equality rows.
#[derive(Debug, Clone)]
pub(crate) struct RawSolution {
    pub(crate) status: Status,
    pub(crate) x: DVector<f64>,
    pub(crate) y: DVector<f64>,
    pub(crate) z: DVector<f64>,
    pub(crate) iterations: usize,
    pub(crate) pcost: f64,
    pub(crate) dcost: f64,
    pub(crate) gap: f64,
    pub(crate) pres: f64,
    pub(crate) dres: f64,
}

/// Residual slack, relative to `tol_feas`, accepted from a stalled run.
const INACCURATE: f64 = 100.0;

struct Presolved {
    a: DMatrix<f64>,
    b: DVector<f64>,
    /// y_original = u · y_reduced
    u: DMatrix<f64>,
}

enum PresolveResult {
    Ok(Presolved),
    Inconsistent(DVector<f64>),
}

fn presolve(a: &DMatrix<f64>, b: &DVector<f64>) -> PresolveResult {
    let (m, n) = a.shape();
    if m == 0 {
        return PresolveResult::Ok(Presolved {
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            u: DMatrix::zeros(0, 0),
        });
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(0.0f64, |x, &y| x.max(y));
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > 1e-10 * smax.max(1e-300) && smax > 0.0).collect();
    let ur = DMatrix::from_fn(m, keep.len(), |i, j| u[(i, keep[j])]);
    let br = ur.transpose() * b;
    let res = b - &ur * &br;
    let rn = res.norm();
    if rn > 1e-9 * b.norm().max(1.0) {
        return PresolveResult::Inconsistent(-res / (rn * rn));
    }
    let ar = DMatrix::from_fn(keep.len(), n, |i, j| sv[keep[i]] * vt[(keep[i], j)]);
    PresolveResult::Ok(Presolved { a: ar, b: br, u: ur })
}

struct Kkt<'a> {
    sf: &'a StandardForm,
    a: &'a DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Symmetric diagonal equilibration applied before factorization.
    eq: DVector<f64>,
    offsets: &'a [usize],
    scal: &'a [Scaling],
}

impl<'a> Kkt<'a> {
    fn new(
        sf: &'a StandardForm,
        a: &'a DMatrix<f64>,
        offsets: &'a [usize],
        scal: &'a [Scaling],
    ) -> Option<Self> {
        let n = sf.n;
        let m = a.nrows();
        let mut big = DMatrix::zeros(n + m, n + m);
        for (k, cols) in sf.g.iter().enumerate() {
            if cols.is_empty() {
                continue;
            }
            let v = scal[k].winvt_columns(cols, sf.cones[k].len());
            let vtv = v.transpose() * &v;
            for (p, (jp, _)) in cols.iter().enumerate() {
                for (q, (jq, _)) in cols.iter().enumerate() {
                    big[(*jp, *jq)] += vtv[(p, q)];
                }
            }
        }
        for i in 0..m {
            for j in 0..n {
                big[(n + i, j)] = a[(i, j)];
                big[(j, n + i)] = a[(i, j)];
            }
        }
        if big.iter().any(|v| !v.is_finite()) {
            return None;
        }
        // equilibrate so that every row of the scaled matrix has unit max-norm
        let mut eq = DVector::from_element(n + m, 1.0);
        for _ in 0..3 {
            for i in 0..n + m {
                let r = (0..n + m).fold(0.0f64, |acc, j| acc.max((big[(i, j)] * eq[i] * eq[j]).abs()));
                if r > 0.0 {
                    eq[i] /= r.sqrt();
                }
            }
        }
        for i in 0..n + m {
            for j in 0..n + m {
                big[(i, j)] *= eq[i] * eq[j];
            }
        }
        let delta = 1e-13;
        for i in 0..n {
            big[(i, i)] += delta;
        }
        for i in 0..m {
            big[(n + i, n + i)] -= delta;
        }
        let lu = big.lu();
        Some(Self {
            sf,
            a,
            lu,
            eq,
            offsets,
            scal,
        })
    }

    fn hinv(&self, r: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(r.len());
        let mut tmp = vec![0.0; r.len()];
        for (k, sc) in self.scal.iter().enumerate() {
            let (lo, hi) = (self.offsets[k], self.offsets[k + 1]);
            sc.winvt(&r.as_slice()[lo..hi], &mut tmp[lo..hi]);
            sc.winv(&tmp[lo..hi], &mut out.as_mut_slice()[lo..hi]);
        }
        out
    }

    fn h(&self, r: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(r.len());
        let mut tmp = vec![0.0; r.len()];
        for (k, sc) in self.scal.iter().enumerate() {
            let (lo, hi) = (self.offsets[k], self.offsets[k + 1]);
            sc.w(&r.as_slice()[lo..hi], &mut tmp[lo..hi]);
            sc.wt(&tmp[lo..hi], &mut out.as_mut_slice()[lo..hi]);
        }
        out
    }

    fn solve_once(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let n = self.sf.n;
        let m = self.a.nrows();
        let t = self.hinv(r3);
        let rx = r1 + self.sf.gt_mul(&t);
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&rx);
        rhs.rows_mut(n, m).copy_from(r2);
        rhs.component_mul_assign(&self.eq);
        let mut sol = self.lu.solve(&rhs)?;
        sol.component_mul_assign(&self.eq);
        let dx = sol.rows(0, n).into_owned();
        let dy = sol.rows(n, m).into_owned();
        let dz = self.hinv(&(self.sf.g_mul(&dx) - r3));
        Some((dx, dy, dz))
    }

    fn solve(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (mut dx, mut dy, mut dz) = self.solve_once(r1, r2, r3)?;
        let scale = (r1.norm() + r2.norm() + r3.norm()).max(1e-300);
        let residual = |dx: &DVector<f64>, dy: &DVector<f64>, dz: &DVector<f64>| {
            let e1 = r1 - (self.a.transpose() * dy + self.sf.gt_mul(dz));
            let e2 = r2 - self.a * dx;
            let e3 = r3 - (self.sf.g_mul(dx) - self.h(dz));
            let en = e1.norm() + e2.norm() + e3.norm();
            (e1, e2, e3, en)
        };
        let (mut e1, mut e2, mut e3, mut en) = residual(&dx, &dy, &dz);
        for _ in 0..10 {
            if !(en > 1e-14 * scale) {
                break;
            }
            let (cx, cy, cz) = self.solve_once(&e1, &e2, &e3)?;
            let (nx, ny, nz) = (&dx + cx, &dy + cy, &dz + cz);
            let next = residual(&nx, &ny, &nz);
            if !(next.3 < 0.5 * en) {
                break;
            }
            (dx, dy, dz) = (nx, ny, nz);
            (e1, e2, e3, en) = next;
        }
        log::trace!("kkt relative residual {:e}", en / scale);
        if dx.iter().chain(dy.iter()).chain(dz.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        Some((dx, dy, dz))
    }
}

struct Step {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dz: DVector<f64>,
    ds: DVector<f64>,
    dtau: f64,
    dkappa: f64,
    ds_t: Vec<f64>,
    dz_t: Vec<f64>,
}

/// Solves a compiled problem. Deterministic: no randomness, fixed pivoting.
pub(crate) fn solve_standard(sf: &StandardForm, opts: &SolveOptions) -> RawSolution {
    let n = sf.n;
    let m_orig = sf.a.nrows();
    let offsets = sf.offsets();
    let total = offsets[sf.cones.len()];
    let pre = match presolve(&sf.a, &sf.b) {
        PresolveResult::Ok(p) => p,
        PresolveResult::Inconsistent(y) => {
            return RawSolution {
                status: Status::PrimalInfeasible,
                x: DVector::zeros(n),
                y,
                z: DVector::zeros(total),
                iterations: 0,
                pcost: f64::NAN,
                dcost: f64::NAN,
                gap: f64::NAN,
                pres: f64::NAN,
                dres: f64::NAN,
            }
        }
    };
    let a = &pre.a;
    let b = &pre.b;
    let c = &sf.c;
    let h = &sf.h;
    let m = a.nrows();
    let lift_y = |y: &DVector<f64>| -> DVector<f64> {
        if m_orig == 0 {
            DVector::zeros(0)
        } else {
            &pre.u * y
        }
    };
    let nu: usize = sf.cones.iter().map(|k| k.degree()).sum();
    let resx0 = c.norm().max(1.0);
    let resy0 = b.norm().max(1.0);
    let resz0 = h.norm().max(1.0);

    let fail = |status: Status, iters: usize| RawSolution {
        status,
        x: DVector::zeros(n),
        y: DVector::zeros(m_orig),
        z: DVector::zeros(total),
        iterations: iters,
        pcost: f64::NAN,
        dcost: f64::NAN,
        gap: f64::NAN,
        pres: f64::NAN,
        dres: f64::NAN,
    };

    // initial point from two least-squares KKT solves with W = I
    let ident: Vec<Scaling> = sf
        .cones
        .iter()
        .map(|&cone| {
            let mut e = vec![0.0; cone.len()];
            unit(cone, &mut e);
            Scaling::new(cone, &e, &e).expect("identity scaling")
        })
        .collect();
    let (x0, s0, y0, z0) = {
        let kkt = match Kkt::new(sf, a, &offsets, &ident) {
            Some(k) => k,
            None => return fail(Status::NumericalTrouble, 0),
        };
        let p = kkt.solve(&DVector::zeros(n), b, h);
        let d = kkt.solve(&(-c), &DVector::zeros(m), &DVector::zeros(total));
        match (p, d) {
            (Some((x, _, zz)), Some((_, y, z))) => (x, -zz, y, z),
            _ => return fail(Status::NumericalTrouble, 0),
        }
    };
    let mut x = x0;
    let mut y = y0;
    let mut s = s0;
    let mut z = z0;
    for (k, &cone) in sf.cones.iter().enumerate() {
        let (lo, hi) = (offsets[k], offsets[k + 1]);
        for v in [&mut s, &mut z] {
            let sl = &mut v.as_mut_slice()[lo..hi];
            let shift = max_boundary_shift(cone, sl);
            let nrm = sl.iter().map(|t| t * t).sum::<f64>().sqrt();
            if shift >= -1e-8 * nrm.max(1.0) {
                let mut e = vec![0.0; hi - lo];
                unit(cone, &mut e);
                for (t, ei) in sl.iter_mut().zip(e) {
                    *t += (1.0 + shift) * ei;
                }
            }
        }
    }
    let mut scal: Vec<Scaling> = Vec::with_capacity(sf.cones.len());
    for (k, &cone) in sf.cones.iter().enumerate() {
        let (lo, hi) = (offsets[k], offsets[k + 1]);
        match Scaling::new(cone, &s.as_slice()[lo..hi], &z.as_slice()[lo..hi]) {
            Some(sc) => scal.push(sc),
            None => return fail(Status::NumericalTrouble, 0),
        }
    }
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;

    let mut last_iter = 0;
    // best iterate within the reduced tolerances, returned if the method stalls
    let mut best: Option<(f64, RawSolution)> = None;
    let snapshot = |x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>, tau: f64| {
        (x / tau, lift_y(&(y / tau)), z / tau)
    };
    for iter in 0..=opts.max_iter {
        last_iter = iter;
        let hrx = a.transpose() * &y + sf.gt_mul(&z);
        let hry = a * &x;
        let hrz = sf.g_mul(&x) + &s;
        let rx = &hrx + c * tau;
        let ry = &hry - b * tau;
        let rz = &hrz - h * tau;
        let cx = c.dot(&x);
        let by = b.dot(&y);
        let hz = h.dot(&z);
        let rt = kappa + cx + by + hz;

        let pcost = cx / tau;
        let dcost = -(by + hz) / tau;
        let sz = s.dot(&z);
        let gap = sz / (tau * tau);
        let relgap = if pcost < 0.0 {
            Some(gap / -pcost)
        } else if dcost > 0.0 {
            Some(gap / dcost)
        } else {
            None
        };
        let pres = (ry.norm() / resy0).max(rz.norm() / resz0) / tau;
        let dres = rx.norm() / resx0 / tau;
        let pinfres = if hz + by < 0.0 {
            Some(hrx.norm() / resx0 / -(hz + by))
        } else {
            None
        };
        let dinfres = if cx < 0.0 {
            Some((hry.norm() / resy0).max(hrz.norm() / resz0) / -cx)
        } else {
            None
        };
        log::trace!("iter {iter}: pres {pres:e} dres {dres:e} gap {gap:e} pcost {pcost} dcost {dcost} tau {tau:e} kappa {kappa:e}");
        let gap_ok = gap <= opts.tol_gap * pcost.abs().min(dcost.abs()).max(1.0)
            || relgap.is_some_and(|r| r <= opts.tol_gap);
        if pres <= opts.tol_feas && dres <= opts.tol_feas && gap_ok && gap >= 0.0 {
            return RawSolution {
                status: Status::Optimal,
                x: &x / tau,
                y: lift_y(&(&y / tau)),
                z: &z / tau,
                iterations: iter,
                pcost,
                dcost,
                gap: (pcost - dcost).abs().max(gap) / pcost.abs().max(1.0),
                pres,
                dres,
            };
        }
        let worst = pres.max(dres);
        if worst <= INACCURATE * opts.tol_feas && gap_ok && gap >= 0.0 && best.as_ref().is_none_or(|b| worst < b.0) {
            let (xs, ys, zs) = snapshot(&x, &y, &z, tau);
            let raw = RawSolution {
                status: Status::Optimal,
                x: xs,
                y: ys,
                z: zs,
                iterations: iter,
                pcost,
                dcost,
                gap: (pcost - dcost).abs().max(gap) / pcost.abs().max(1.0),
                pres,
                dres,
            };
            best = Some((worst, raw));
        }
        if let Some(p) = pinfres {
            if p <= opts.tol_feas {
                let d = -(hz + by);
                return RawSolution {
                    status: Status::PrimalInfeasible,
                    x: DVector::zeros(n),
                    y: lift_y(&(&y / d)),
                    z: &z / d,
                    iterations: iter,
                    pcost: f64::NAN,
                    dcost: f64::NAN,
                    gap: f64::NAN,
                    pres,
                    dres,
                };
            }
        }
        if let Some(p) = dinfres {
            if p <= opts.tol_feas {
                return RawSolution {
                    status: Status::DualInfeasible,
                    x: &x / -cx,
                    y: DVector::zeros(m_orig),
                    z: DVector::zeros(total),
                    iterations: iter,
                    pcost: f64::NAN,
                    dcost: f64::NAN,
                    gap: f64::NAN,
                    pres,
                    dres,
                };
            }
        }
        if iter == opts.max_iter {
            log::debug!("iteration limit: pres {pres:e} dres {dres:e} gap {gap:e}");
            break;
        }

        let kkt = match Kkt::new(sf, a, &offsets, &scal) {
            Some(k) => k,
            None => break,
        };
        let (x1, y1, z1) = match kkt.solve(&(-c), b, h) {
            Some(u) => u,
            None => break,
        };
        let denom1 = c.dot(&x1) + b.dot(&y1) + h.dot(&z1);
        let mu = (scal.iter().map(|sc| sc.lambda_sq()).sum::<f64>() + tau * kappa) / (nu as f64 + 1.0);

        let newton = |eta: f64, ds: &[f64], dk: f64| -> Option<Step> {
            // W^T (λ \ d_s)
            let mut ld = vec![0.0; total];
            let mut wl = DVector::zeros(total);
            for (k, sc) in scal.iter().enumerate() {
                let (lo, hi) = (offsets[k], offsets[k + 1]);
                sc.lam_div(&ds[lo..hi], &mut ld[lo..hi]);
                sc.wt(&ld[lo..hi], &mut wl.as_mut_slice()[lo..hi]);
            }
            let r1 = &rx * -eta;
            let r2 = &ry * -eta;
            let r3 = &rz * -eta - &wl;
            let (x0, y0, z0) = kkt.solve(&r1, &r2, &r3)?;
            let dtau = (-eta * rt - dk / tau - (c.dot(&x0) + b.dot(&y0) + h.dot(&z0)))
                / (denom1 - kappa / tau);
            let dx = x0 + &x1 * dtau;
            let dy = y0 + &y1 * dtau;
            let dz = z0 + &z1 * dtau;
            // ds from the linearized primal residual, so that rz contracts by exactly
            // (1 − αη) however inaccurate W⁻¹W is near the boundary
            let ds = &rz * -eta + h * dtau - sf.g_mul(&dx);
            let mut dz_t = vec![0.0; total];
            let mut ds_t = vec![0.0; total];
            for (k, sc) in scal.iter().enumerate() {
                let (lo, hi) = (offsets[k], offsets[k + 1]);
                sc.w(&dz.as_slice()[lo..hi], &mut dz_t[lo..hi]);
                sc.winvt(&ds.as_slice()[lo..hi], &mut ds_t[lo..hi]);
            }
            let dkappa = (dk - kappa * dtau) / tau;
            if !dtau.is_finite() || !dkappa.is_finite() {
                return None;
            }
            Some(Step {
                dx,
                dy,
                dz,
                ds,
                dtau,
                dkappa,
                ds_t,
                dz_t,
            })
        };
        let max_step = |st: &Step| -> f64 {
            let mut amax = f64::INFINITY;
            if st.dtau < 0.0 {
                amax = amax.min(-tau / st.dtau);
            }
            if st.dkappa < 0.0 {
                amax = amax.min(-kappa / st.dkappa);
            }
            for (k, sc) in scal.iter().enumerate() {
                let (lo, hi) = (offsets[k], offsets[k + 1]);
                amax = amax.min(sc.max_step(&st.ds_t[lo..hi]));
                amax = amax.min(sc.max_step(&st.dz_t[lo..hi]));
            }
            amax
        };

        // predictor
        let mut ds_aff = vec![0.0; total];
        for (k, sc) in scal.iter().enumerate() {
            let (lo, hi) = (offsets[k], offsets[k + 1]);
            let l = sc.lambda_packed();
            sc.lam_prod(&l, &mut ds_aff[lo..hi]);
        }
        ds_aff.iter_mut().for_each(|v| *v = -*v);
        let aff = match newton(1.0, &ds_aff, -tau * kappa) {
            Some(st) => st,
            None => break,
        };
        let alpha_aff = max_step(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        // corrector
        let mut ds_c = vec![0.0; total];
        let mut corr = vec![0.0; total];
        let mut e = vec![0.0; total];
        for (k, &cone) in sf.cones.iter().enumerate() {
            let (lo, hi) = (offsets[k], offsets[k + 1]);
            jordan(cone, &aff.ds_t[lo..hi], &aff.dz_t[lo..hi], &mut corr[lo..hi]);
            unit(cone, &mut e[lo..hi]);
        }
        for i in 0..total {
            ds_c[i] = ds_aff[i] - corr[i] + sigma * mu * e[i];
        }
        let dk_c = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
        let st = match newton(1.0 - sigma, &ds_c, dk_c) {
            Some(st) => st,
            None => break,
        };
        let alpha = (0.99 * max_step(&st)).min(1.0);
        if !(alpha > 1e-12) {
            log::debug!("step length collapsed at iteration {iter}");
            break;
        }
        x += &st.dx * alpha;
        y += &st.dy * alpha;
        tau += alpha * st.dtau;
        kappa += alpha * st.dkappa;
        if !(tau > 0.0 && kappa > 0.0) {
            break;
        }
        // s and z move linearly so residuals stay consistent; the scaling is then
        // recomputed from the new pair, with the scaled update as a fallback
        let mut ok = true;
        for (k, sc) in scal.iter_mut().enumerate() {
            let (lo, hi) = (offsets[k], offsets[k + 1]);
            for i in lo..hi {
                s[i] += alpha * st.ds[i];
                z[i] += alpha * st.dz[i];
            }
            match Scaling::new(sf.cones[k], &s.as_slice()[lo..hi], &z.as_slice()[lo..hi]) {
                Some(fresh) => *sc = fresh,
                None => {
                    ok &= sc.update(&st.ds_t[lo..hi], &st.dz_t[lo..hi], alpha);
                    let (sl, zl) = (&mut s.as_mut_slice()[lo..hi], &mut z.as_mut_slice()[lo..hi]);
                    sc.primal_dual(sl, zl);
                }
            }
        }
        if !ok {
            break;
        }
    }
    if let Some((worst, raw)) = best {
        log::debug!("stalled; returning iterate {} with residual {worst:e}", raw.iterations);
        return raw;
    }
    fail(Status::NumericalTrouble, last_iter)
}
