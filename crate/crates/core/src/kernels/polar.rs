//! Polarizable-model pair kernels: Halgren buffered 14-7 van der Waals, the
//! Thole-damped dipole field matrix-vector product, the permanent field of
//! the point charges, and a Jacobi solver for the induced dipoles.
//!
//! Displacements point from `j` to `i` (`r = r_i - r_j`) everywhere. The
//! field at `i` due to a dipole at `j` is `rr5 (mu_j . r) r - rr3 mu_j` with
//! `rr3 = l3 / r^3`, `rr5 = 3 l5 / r^5`; the field at `i` due to a charge at
//! `j` is `l3 q_j r / r^3`.

use super::{
    check_finite, check_inputs, find_singularity, lane_sum, scatter_add, KernelPath, LaneSum,
    PairScratch,
};
use crate::error::{contract, Error, Result};
use crate::layout::{LaneConfig, PaddedRealArray};
use crate::neighbors::NeighborTable;
use crate::pbc::wrap;
use crate::system::{ForceAccumulator, ParticleSystem, VectorField};
use crate::vmath;

/// Buffered 14-7 cutoff and buffering constants. Per-site `r0` and `epsilon`
/// live on the [`ParticleSystem`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalgrenParams {
    pub cutoff: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl HalgrenParams {
    pub fn new(cutoff: f64) -> Self {
        Self {
            cutoff,
            delta: 0.07,
            gamma: 0.12,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.gamma >= 0.0) {
            return Err(Error::InvalidInput("buffering constants must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Cutoff and Thole damping factor for the polarization kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarParams {
    pub cutoff: f64,
    pub thole_a: f64,
    /// With damping off both Thole factors are 1.
    pub damping: bool,
}

impl PolarParams {
    pub fn new(cutoff: f64) -> Self {
        Self {
            cutoff,
            thole_a: 0.39,
            damping: true,
        }
    }

    pub fn undamped(cutoff: f64) -> Self {
        Self {
            damping: false,
            ..Self::new(cutoff)
        }
    }
}

/// Converged induced dipoles.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationState {
    pub mu: VectorField,
    pub polarizability: PaddedRealArray,
    pub thole_a: f64,
    /// Matrix-vector products performed.
    pub iterations: usize,
    /// Max-norm change of the last update.
    pub residual: f64,
}

/// Cubic-mean combining rule for the minimum-energy distance.
#[inline(always)]
fn mix_r0(ri: f64, rj: f64) -> f64 {
    (ri * ri * ri + rj * rj * rj) / (ri * ri + rj * rj)
}

/// HHG combining rule for the well depth; zero when both depths are zero.
#[inline(always)]
fn mix_epsilon(ei: f64, ej: f64) -> f64 {
    let s = ei.sqrt() + ej.sqrt();
    4.0 * ei * ej / (s * s).max(f64::MIN_POSITIVE)
}

/// `U = eps ((1+d)/(rho+d))^7 ((1+g)/(rho^7+g) - 2)` and `dU/drho` at
/// `rho = r / r0`.
pub fn halgren_pair(rho: f64, epsilon: f64, delta: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput(format!("rho must be positive, got {rho}")));
    }
    Ok(halgren_terms(rho, epsilon, delta, gamma))
}

#[inline(always)]
fn halgren_terms(rho: f64, epsilon: f64, delta: f64, gamma: f64) -> (f64, f64) {
    let rho2 = rho * rho;
    let rho6 = rho2 * rho2 * rho2;
    let rho7 = rho6 * rho;
    let a = (1.0 + delta) / (rho + delta);
    let b = (1.0 + gamma) / (rho7 + gamma);
    let a2 = a * a;
    let a7 = a2 * a2 * a2 * a;
    let u = epsilon * a7 * (b - 2.0);
    let du = -7.0 * epsilon * a7 * ((b - 2.0) * a / (1.0 + delta) + b * rho6 * b / (1.0 + gamma));
    (u, du)
}

/// `(l3, l5)` Thole damping factors for sites at distance `r` with
/// polarizabilities `alpha_i`, `alpha_j`.
pub fn thole_factors(r: f64, alpha_i: f64, alpha_j: f64, a: f64) -> Result<(f64, f64)> {
    if !(alpha_i > 0.0 && alpha_j > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Thole damping needs positive polarizabilities, got {alpha_i} and {alpha_j}"
        )));
    }
    if !(r >= 0.0) {
        return Err(Error::InvalidInput(format!("distance must be nonnegative, got {r}")));
    }
    let x = a * r * r * r / (alpha_i * alpha_j).sqrt();
    let e = (-x).exp();
    Ok((1.0 - e, 1.0 - (1.0 + x) * e))
}

fn check_polarizable(system: &ParticleSystem) -> Result<()> {
    if let Some(i) = system.polarizabilities().iter().position(|&a| !(a > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "site {i} has nonpositive polarizability"
        )));
    }
    Ok(())
}

pub fn halgren_forces_scalar(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &HalgrenParams,
) -> Result<ForceAccumulator> {
    check_inputs(system, table, params.cutoff)?;
    params.validate()?;
    let r0 = system.hal_r0.logical();
    let eps = system.hal_epsilon.logical();
    let mut out = ForceAccumulator::for_system(system)?;
    let cut2 = params.cutoff * params.cutoff;
    let [lx, ly, lz] = system.sim_box().lengths();
    let (ilx, ily, ilz) = (1.0 / lx, 1.0 / ly, 1.0 / lz);
    let [x, y, z] = system.positions();
    let mut energy = 0.0;
    let (fx, fy, fz) = (out.fx.logical_mut(), out.fy.logical_mut(), out.fz.logical_mut());
    for i in 0..system.len() {
        for &j in table.site(i).logical() {
            let j = j as usize;
            let dx = wrap(x[i] - x[j], lx, ilx);
            let dy = wrap(y[i] - y[j], ly, ily);
            let dz = wrap(z[i] - z[j], lz, ilz);
            let r2 = dx * dx + dy * dy + dz * dz;
            if r2 <= cut2 {
                if r2 == 0.0 {
                    return Err(Error::Singularity { i, j });
                }
                let r = r2.sqrt();
                let rv = mix_r0(r0[i], r0[j]);
                let (u, du) = halgren_pair(r / rv, mix_epsilon(eps[i], eps[j]), params.delta, params.gamma)?;
                let fs = -du / (rv * r);
                energy += u;
                fx[i] += fs * dx;
                fy[i] += fs * dy;
                fz[i] += fs * dz;
                fx[j] -= fs * dx;
                fy[j] -= fs * dy;
                fz[j] -= fs * dz;
            }
        }
    }
    out.energy = energy;
    Ok(out)
}

/// Vectorized buffered 14-7: the powers of `rho` and the two buffered ratios
/// are built in separate short loops over the packed pairs.
pub fn halgren_forces_vectorized(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &HalgrenParams,
    lanes: LaneConfig,
) -> Result<ForceAccumulator> {
    check_inputs(system, table, params.cutoff)?;
    params.validate()?;
    let r0 = system.hal_r0.as_slice();
    let eps = system.hal_epsilon.as_slice();
    let (d1, g1) = (1.0 + params.delta, 1.0 + params.gamma);
    let (delta, gamma) = (params.delta, params.gamma);
    let (inv_d1, inv_g1) = (1.0 / d1, 1.0 / g1);

    let mut out = ForceAccumulator::for_system(system)?;
    let mut s = PairScratch::new(lanes);
    let cut2 = params.cutoff * params.cutoff;
    let mut energy = LaneSum::default();
    for i in 0..system.len() {
        let nb = table.site(i);
        let sel = s.select(system, i, &nb, cut2);
        if sel.kept == 0 {
            continue;
        }
        let n = sel.count;
        let (ri, ei) = (r0[i], eps[i]);
        let sei = ei.sqrt();
        let [t0, t1, t2, t3, t4, t5, t6, t7, t8, t9, t10, t11] = &mut s.tmp[..] else {
            unreachable!()
        };
        let (rv, ev, r, rho, rho6, rho7) = (
            &mut t0.0[..n],
            &mut t1.0[..n],
            &mut t2.0[..n],
            &mut t3.0[..n],
            &mut t4.0[..n],
            &mut t5.0[..n],
        );
        let (a, b, a7, e, fs, g) = (
            &mut t6.0[..n],
            &mut t7.0[..n],
            &mut t8.0[..n],
            &mut t9.0[..n],
            &mut t10.0[..n],
            &mut t11.0[..n],
        );
        let pj = &s.j.0[..n];
        let r2 = &s.pr2.0[..n];
        let scale = &s.scale.0[..n];
        for k in 0..n {
            let j = pj[k] as usize;
            rv[k] = r0[j];
            ev[k] = eps[j];
        }
        for k in 0..n {
            let rj = rv[k];
            rv[k] = (ri * ri * ri + rj * rj * rj) / (ri * ri + rj * rj);
            let sm = sei + ev[k].sqrt();
            ev[k] = 4.0 * ei * ev[k] / (sm * sm).max(f64::MIN_POSITIVE);
        }
        for k in 0..n {
            r[k] = r2[k].sqrt();
            rho[k] = r[k] / rv[k];
        }
        for k in 0..n {
            let p2 = rho[k] * rho[k];
            rho6[k] = p2 * p2 * p2;
            rho7[k] = rho6[k] * rho[k];
        }
        for k in 0..n {
            a[k] = d1 / (rho[k] + delta);
            b[k] = g1 / (rho7[k] + gamma);
        }
        for k in 0..n {
            let a2 = a[k] * a[k];
            a7[k] = a2 * a2 * a2 * a[k];
            e[k] = ev[k] * a7[k] * (b[k] - 2.0) * scale[k];
        }
        for k in 0..n {
            let du = -7.0
                * ev[k]
                * a7[k]
                * ((b[k] - 2.0) * a[k] * inv_d1 + b[k] * rho6[k] * b[k] * inv_g1);
            fs[k] = -du * scale[k] / (rv[k] * r[k]);
        }
        energy.add(e);
        let (gx, gy, gz) = (g, &mut t6.0[..n], &mut t7.0[..n]);
        let (dx, dy, dz) = (&s.pdx.0[..n], &s.pdy.0[..n], &s.pdz.0[..n]);
        for k in 0..n {
            gx[k] = fs[k] * dx[k];
            gy[k] = fs[k] * dy[k];
            gz[k] = fs[k] * dz[k];
        }
        let (fx, fy, fz) = (out.fx.padded_mut(), out.fy.padded_mut(), out.fz.padded_mut());
        fx[i] += lane_sum(gx);
        fy[i] += lane_sum(gy);
        fz[i] += lane_sum(gz);
        scatter_add([fx, fy, fz], pj, [gx, gy, gz], sel.kept, true);
    }
    out.energy = energy.total();
    check_finite(&out, system, table)?;
    Ok(out)
}

fn check_field_inputs(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &PolarParams,
) -> Result<()> {
    check_inputs(system, table, params.cutoff)?;
    check_polarizable(system)?;
    if !(params.thole_a.is_finite() && params.thole_a >= 0.0) {
        return Err(Error::InvalidInput("Thole factor must be nonnegative".into()));
    }
    Ok(())
}

/// Scalar pair walk for the field kernels. `pair(i, j, d, r)` returns the
/// field added at `i` and the field added at `j`.
fn scalar_field_loop<F>(
    system: &ParticleSystem,
    table: &NeighborTable,
    cutoff: f64,
    mut pair: F,
) -> Result<VectorField>
where
    F: FnMut(usize, usize, [f64; 3], f64) -> ([f64; 3], [f64; 3]),
{
    let mut out = VectorField::for_system(system)?;
    let cut2 = cutoff * cutoff;
    let [lx, ly, lz] = system.sim_box().lengths();
    let (ilx, ily, ilz) = (1.0 / lx, 1.0 / ly, 1.0 / lz);
    let [x, y, z] = system.positions();
    let (ex, ey, ez) = (out.x.logical_mut(), out.y.logical_mut(), out.z.logical_mut());
    for i in 0..system.len() {
        for &j in table.site(i).logical() {
            let j = j as usize;
            let d = [
                wrap(x[i] - x[j], lx, ilx),
                wrap(y[i] - y[j], ly, ily),
                wrap(z[i] - z[j], lz, ilz),
            ];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if r2 <= cut2 {
                if r2 == 0.0 {
                    return Err(Error::Singularity { i, j });
                }
                let (ei, ej) = pair(i, j, d, r2.sqrt());
                ex[i] += ei[0];
                ey[i] += ei[1];
                ez[i] += ei[2];
                ex[j] += ej[0];
                ey[j] += ej[1];
                ez[j] += ej[2];
            }
        }
    }
    Ok(out)
}

fn check_dipoles(system: &ParticleSystem, mu: &VectorField) -> Result<()> {
    if mu.len() != system.len() {
        return Err(contract(format!(
            "dipole field has {} sites, system has {}",
            mu.len(),
            system.len()
        )));
    }
    if mu.x.padded_len() < system.padded_len() {
        return Err(contract("dipole arrays are padded shorter than the system"));
    }
    Ok(())
}

/// Field at every site due to the dipoles `mu` at all other sites within the
/// cutoff (the dipole interaction tensor applied to `mu`).
pub fn dipole_field_matvec_scalar(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &PolarParams,
    mu: &VectorField,
) -> Result<VectorField> {
    check_field_inputs(system, table, params)?;
    check_dipoles(system, mu)?;
    let alpha = system.polarizabilities();
    let [mx, my, mz] = mu.columns();
    let a = params.thole_a;
    let damping = params.damping;
    scalar_field_loop(system, table, params.cutoff, |i, j, d, r| {
        let (l3, l5) = if damping {
            let x = a * r * r * r / (alpha[i] * alpha[j]).sqrt();
            let e = (-x).exp();
            (1.0 - e, 1.0 - (1.0 + x) * e)
        } else {
            (1.0, 1.0)
        };
        let r3 = r * r * r;
        let rr3 = l3 / r3;
        let rr5 = 3.0 * l5 / (r3 * r * r);
        let dj = mx[j] * d[0] + my[j] * d[1] + mz[j] * d[2];
        let di = mx[i] * d[0] + my[i] * d[1] + mz[i] * d[2];
        (
            [
                rr5 * dj * d[0] - rr3 * mx[j],
                rr5 * dj * d[1] - rr3 * my[j],
                rr5 * dj * d[2] - rr3 * mz[j],
            ],
            [
                rr5 * di * d[0] - rr3 * mx[i],
                rr5 * di * d[1] - rr3 * my[i],
                rr5 * di * d[2] - rr3 * mz[i],
            ],
        )
    })
}

/// Field at every site due to the permanent charges, Thole damped.
pub fn permanent_field_scalar(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &PolarParams,
) -> Result<VectorField> {
    check_field_inputs(system, table, params)?;
    let alpha = system.polarizabilities();
    let q = system.charges();
    let a = params.thole_a;
    let damping = params.damping;
    scalar_field_loop(system, table, params.cutoff, |i, j, d, r| {
        let l3 = if damping {
            1.0 - (-(a * r * r * r / (alpha[i] * alpha[j]).sqrt())).exp()
        } else {
            1.0
        };
        let c = l3 / (r * r * r);
        (
            [c * q[j] * d[0], c * q[j] * d[1], c * q[j] * d[2]],
            [-c * q[i] * d[0], -c * q[i] * d[1], -c * q[i] * d[2]],
        )
    })
}

/// Vectorized driver for the field kernels. `compute(i, scratch, n)` leaves
/// the scaled per-lane field at `i` in `tmp[6..9]` and the field at each
/// neighbor in `tmp[9..12]`.
fn vector_field_loop<F>(
    system: &ParticleSystem,
    table: &NeighborTable,
    cutoff: f64,
    lanes: LaneConfig,
    mut compute: F,
) -> Result<VectorField>
where
    F: FnMut(usize, &mut PairScratch, usize),
{
    let mut out = VectorField::for_system(system)?;
    let mut s = PairScratch::new(lanes);
    let cut2 = cutoff * cutoff;
    for i in 0..system.len() {
        let nb = table.site(i);
        let sel = s.select(system, i, &nb, cut2);
        if sel.kept == 0 {
            continue;
        }
        let n = sel.count;
        compute(i, &mut s, n);
        let t = &s.tmp;
        let (ex, ey, ez) = (out.x.padded_mut(), out.y.padded_mut(), out.z.padded_mut());
        ex[i] += lane_sum(&t[6].0[..n]);
        ey[i] += lane_sum(&t[7].0[..n]);
        ez[i] += lane_sum(&t[8].0[..n]);
        let (gx, gy, gz) = (&t[9].0[..n], &t[10].0[..n], &t[11].0[..n]);
        scatter_add([ex, ey, ez], &s.j.0[..n], [gx, gy, gz], sel.kept, false);
    }
    let finite = [&out.x, &out.y, &out.z]
        .iter()
        .all(|a| a.logical().iter().all(|v| v.is_finite()));
    if !finite {
        return Err(find_singularity(system, table));
    }
    Ok(out)
}

/// Damping loops shared by both field kernels. On return `t3` holds `-x`
/// (the negated Thole exponent), `t4` holds `1/r^3`, `t5` holds
/// `exp(-x)` and `t11` holds `1/r^2`. Without damping `x` and `exp(-x)` are
/// both zero, which makes both factors 1.
#[inline(always)]
fn damping_loops(s: &mut PairScratch, n: usize, alpha_i: f64, a: f64, damping: bool) {
    let [_, _, _, t3, t4, t5, _, _, _, _, _, t11] = &mut s.tmp[..] else {
        unreachable!()
    };
    let (aj, r3inv, ex, r2inv) = (&mut t3.0[..n], &mut t4.0[..n], &mut t5.0[..n], &mut t11.0[..n]);
    let r2 = &s.pr2.0[..n];
    for k in 0..n {
        let r = r2[k].sqrt();
        let rinv = 1.0 / r;
        r2inv[k] = rinv * rinv;
        r3inv[k] = r2inv[k] * rinv;
        aj[k] = -a * r2[k] * r / (alpha_i * aj[k]).sqrt();
    }
    if damping {
        vmath::exp_batch(&*aj, ex);
    } else {
        aj.fill(0.0);
        ex.fill(0.0);
    }
}

pub fn dipole_field_matvec_vectorized(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &PolarParams,
    mu: &VectorField,
    lanes: LaneConfig,
) -> Result<VectorField> {
    check_field_inputs(system, table, params)?;
    check_dipoles(system, mu)?;
    let alpha = system.polarizability.as_slice();
    let (mx, my, mz) = (mu.x.as_slice(), mu.y.as_slice(), mu.z.as_slice());
    let a = params.thole_a;
    let damping = params.damping;
    vector_field_loop(system, table, params.cutoff, lanes, |i, s, n| {
        {
            let [t0, t1, t2, t3, ..] = &mut s.tmp[..] else {
                unreachable!()
            };
            let pj = &s.j.0[..n];
            let (gx, gy, gz, aj) = (&mut t0.0[..n], &mut t1.0[..n], &mut t2.0[..n], &mut t3.0[..n]);
            for k in 0..n {
                let j = pj[k] as usize;
                gx[k] = mx[j];
                gy[k] = my[j];
                gz[k] = mz[j];
                aj[k] = alpha[j];
            }
        }
        damping_loops(s, n, alpha[i], a, damping);
        let [t0, t1, t2, t3, t4, t5, t6, t7, t8, t9, t10, t11] = &mut s.tmp[..] else {
            unreachable!()
        };
        let scale = &s.scale.0[..n];
        {
            // t4 becomes rr3, t5 becomes rr5.
            let (negx, rr3, rr5, r2inv) = (&t3.0[..n], &mut t4.0[..n], &mut t5.0[..n], &t11.0[..n]);
            for k in 0..n {
                let e = rr5[k];
                let l3 = 1.0 - e;
                let l5 = 1.0 - (1.0 - negx[k]) * e;
                let c = rr3[k] * scale[k];
                rr3[k] = l3 * c;
                rr5[k] = 3.0 * l5 * c * r2inv[k];
            }
        }
        let (rr3, rr5) = (&t4.0[..n], &t5.0[..n]);
        let (dx, dy, dz) = (&s.pdx.0[..n], &s.pdy.0[..n], &s.pdz.0[..n]);
        let (mjx, mjy, mjz) = (&t0.0[..n], &t1.0[..n], &t2.0[..n]);
        let (eix, eiy, eiz) = (&mut t6.0[..n], &mut t7.0[..n], &mut t8.0[..n]);
        for k in 0..n {
            let dj = mjx[k] * dx[k] + mjy[k] * dy[k] + mjz[k] * dz[k];
            eix[k] = rr5[k] * dj * dx[k] - rr3[k] * mjx[k];
            eiy[k] = rr5[k] * dj * dy[k] - rr3[k] * mjy[k];
            eiz[k] = rr5[k] * dj * dz[k] - rr3[k] * mjz[k];
        }
        let (mix, miy, miz) = (mx[i], my[i], mz[i]);
        let (ejx, ejy, ejz) = (&mut t9.0[..n], &mut t10.0[..n], &mut t11.0[..n]);
        for k in 0..n {
            let di = mix * dx[k] + miy * dy[k] + miz * dz[k];
            ejx[k] = rr5[k] * di * dx[k] - rr3[k] * mix;
            ejy[k] = rr5[k] * di * dy[k] - rr3[k] * miy;
            ejz[k] = rr5[k] * di * dz[k] - rr3[k] * miz;
        }
    })
}

pub fn permanent_field_vectorized(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &PolarParams,
    lanes: LaneConfig,
) -> Result<VectorField> {
    check_field_inputs(system, table, params)?;
    let alpha = system.polarizability.as_slice();
    let q = system.charge.as_slice();
    let a = params.thole_a;
    let damping = params.damping;
    vector_field_loop(system, table, params.cutoff, lanes, |i, s, n| {
        {
            let [t0, _, _, t3, ..] = &mut s.tmp[..] else {
                unreachable!()
            };
            let pj = &s.j.0[..n];
            let (qj, aj) = (&mut t0.0[..n], &mut t3.0[..n]);
            for k in 0..n {
                let j = pj[k] as usize;
                qj[k] = q[j];
                aj[k] = alpha[j];
            }
        }
        damping_loops(s, n, alpha[i], a, damping);
        let [t0, _, _, _, t4, t5, t6, t7, t8, t9, t10, t11] = &mut s.tmp[..] else {
            unreachable!()
        };
        let scale = &s.scale.0[..n];
        let c = &mut t4.0[..n];
        let e = &t5.0[..n];
        for k in 0..n {
            c[k] = (1.0 - e[k]) * c[k] * scale[k];
        }
        let qj = &t0.0[..n];
        let (dx, dy, dz) = (&s.pdx.0[..n], &s.pdy.0[..n], &s.pdz.0[..n]);
        let (eix, eiy, eiz) = (&mut t6.0[..n], &mut t7.0[..n], &mut t8.0[..n]);
        for k in 0..n {
            let cq = c[k] * qj[k];
            eix[k] = cq * dx[k];
            eiy[k] = cq * dy[k];
            eiz[k] = cq * dz[k];
        }
        let qi = q[i];
        let (ejx, ejy, ejz) = (&mut t9.0[..n], &mut t10.0[..n], &mut t11.0[..n]);
        for k in 0..n {
            let cq = -c[k] * qi;
            ejx[k] = cq * dx[k];
            ejy[k] = cq * dy[k];
            ejz[k] = cq * dz[k];
        }
    })
}

pub fn halgren_forces(
    path: KernelPath,
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &HalgrenParams,
    lanes: LaneConfig,
) -> Result<ForceAccumulator> {
    match path {
        KernelPath::Scalar => halgren_forces_scalar(system, table, params),
        KernelPath::Vectorized => halgren_forces_vectorized(system, table, params, lanes),
    }
}

pub fn dipole_field_matvec(
    path: KernelPath,
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &PolarParams,
    mu: &VectorField,
    lanes: LaneConfig,
) -> Result<VectorField> {
    match path {
        KernelPath::Scalar => dipole_field_matvec_scalar(system, table, params, mu),
        KernelPath::Vectorized => dipole_field_matvec_vectorized(system, table, params, mu, lanes),
    }
}

pub fn permanent_field(
    path: KernelPath,
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &PolarParams,
    lanes: LaneConfig,
) -> Result<VectorField> {
    match path {
        KernelPath::Scalar => permanent_field_scalar(system, table, params),
        KernelPath::Vectorized => permanent_field_vectorized(system, table, params, lanes),
    }
}

/// Jacobi fixed-point iteration `mu <- alpha (E_perm + T mu)` on the
/// vectorized kernels with default lanes.
pub fn jacobi_polarization_solve(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &PolarParams,
    tol: f64,
    max_iter: usize,
) -> Result<PolarizationState> {
    jacobi_polarization_solve_with(
        system,
        table,
        params,
        tol,
        max_iter,
        KernelPath::Vectorized,
        LaneConfig::default(),
    )
}

/// Jacobi iteration starting from `mu = alpha E_perm`. Stops once the
/// max-norm change of an update is at most `tol`.
pub fn jacobi_polarization_solve_with(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &PolarParams,
    tol: f64,
    max_iter: usize,
    path: KernelPath,
    lanes: LaneConfig,
) -> Result<PolarizationState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }
    let perm = permanent_field(path, system, table, params, lanes)?;
    let alpha = system.polarizabilities();
    let n = system.len();
    let pad = system.padded_len();
    let mut mu = VectorField::for_system(system)?;
    for (m, e) in [(&mut mu.x, &perm.x), (&mut mu.y, &perm.y), (&mut mu.z, &perm.z)] {
        for ((mv, &ev), &a) in m.logical_mut().iter_mut().zip(e.logical()).zip(alpha) {
            *mv = a * ev;
        }
    }
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let induced = dipole_field_matvec(path, system, table, params, &mu, lanes)?;
        let mut next = VectorField::zeros(n, pad)?;
        residual = 0.0;
        for ((nx, old), (ep, ei)) in [(&mut next.x, &mu.x), (&mut next.y, &mu.y), (&mut next.z, &mu.z)]
            .into_iter()
            .zip([(&perm.x, &induced.x), (&perm.y, &induced.y), (&perm.z, &induced.z)])
        {
            let nv = nx.logical_mut();
            for k in 0..n {
                nv[k] = alpha[k] * (ep.logical()[k] + ei.logical()[k]);
                residual = f64::max(residual, (nv[k] - old.logical()[k]).abs());
            }
        }
        mu = next;
        if !residual.is_finite() {
            break;
        }
        if residual <= tol {
            return Ok(PolarizationState {
                mu,
                polarizability: system.polarizability.clone(),
                thole_a: params.thole_a,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}
