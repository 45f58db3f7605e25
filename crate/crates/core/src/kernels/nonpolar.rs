//! Lennard-Jones 6-12 and real-space Ewald charge-charge kernels.
//!
//! Force scalars follow one convention throughout: `fs = -(dU/dr) / r`, so
//! the force on site `i` is `fs * (r_i - r_j)` and site `j` receives the
//! opposite.

use std::f64::consts::FRAC_2_SQRT_PI;

use super::{check_finite, check_inputs, lane_sum, scatter_add, KernelPath, LaneSum, PairScratch};
use crate::error::{Error, Result};
use crate::layout::LaneConfig;
use crate::neighbors::NeighborTable;
use crate::pbc::wrap;
use crate::system::{ForceAccumulator, ParticleSystem};
use crate::vmath;

/// Lennard-Jones cutoff treatment. Per-site sigma and epsilon live on the
/// [`ParticleSystem`] and are combined with Lorentz-Berthelot rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LjParams {
    pub cutoff: f64,
    /// Subtract `U(rc)` from every pair energy.
    pub shift: bool,
}

impl LjParams {
    pub fn new(cutoff: f64) -> Self {
        Self { cutoff, shift: false }
    }
}

/// Real-space Ewald parameters; charges live on the [`ParticleSystem`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwaldRealParams {
    /// Splitting parameter, inverse distance.
    pub alpha: f64,
    pub cutoff: f64,
}

impl EwaldRealParams {
    fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "Ewald alpha must be nonnegative, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[inline(always)]
fn lb_sigma(si: f64, sj: f64) -> f64 {
    0.5 * (si + sj)
}

#[inline(always)]
fn lb_epsilon(ei: f64, ej: f64) -> f64 {
    (ei * ej).sqrt()
}

/// Pair energy and force scalar `-(dU/dr)/r` of `4 eps [(s/r)^12 - (s/r)^6]`.
pub fn lj_pair(r2: f64, sigma: f64, epsilon: f64) -> Result<(f64, f64)> {
    if !(r2 > 0.0) {
        return Err(Error::InvalidInput(format!("squared distance must be positive, got {r2}")));
    }
    let inv = 1.0 / r2;
    let s2 = sigma * sigma * inv;
    let s6 = s2 * s2 * s2;
    let s12 = s6 * s6;
    Ok((4.0 * epsilon * (s12 - s6), 24.0 * epsilon * (2.0 * s12 - s6) * inv))
}

fn lj_shift(params: &LjParams, sigma: f64, epsilon: f64) -> f64 {
    if !params.shift {
        return 0.0;
    }
    let s2 = sigma * sigma / (params.cutoff * params.cutoff);
    let s6 = s2 * s2 * s2;
    4.0 * epsilon * (s6 * s6 - s6)
}

/// Walks each half list, computes every pair on the fly, applies Newton's
/// third law.
pub fn lj_forces_scalar(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &LjParams,
) -> Result<ForceAccumulator> {
    check_inputs(system, table, params.cutoff)?;
    scalar_pair_loop(system, table, params.cutoff, |i, j, r2| {
        let sig = lb_sigma(system.lj_sigma.as_slice()[i], system.lj_sigma.as_slice()[j]);
        let eps = lb_epsilon(system.lj_epsilon.as_slice()[i], system.lj_epsilon.as_slice()[j]);
        let (u, fs) = lj_pair(r2, sig, eps)?;
        Ok((u - lj_shift(params, sig, eps), fs))
    })
}

/// Shared driver for the scalar reference kernels. `pair(i, j, r2)` returns
/// the pair energy and force scalar.
fn scalar_pair_loop<F>(
    system: &ParticleSystem,
    table: &NeighborTable,
    cutoff: f64,
    mut pair: F,
) -> Result<ForceAccumulator>
where
    F: FnMut(usize, usize, f64) -> Result<(f64, f64)>,
{
    let mut out = ForceAccumulator::for_system(system)?;
    let cut2 = cutoff * cutoff;
    let [lx, ly, lz] = system.sim_box().lengths();
    let (ilx, ily, ilz) = (1.0 / lx, 1.0 / ly, 1.0 / lz);
    let [x, y, z] = system.positions();
    let mut energy = 0.0;
    let (gx, gy, gz) = (
        out.fx.logical_mut(),
        out.fy.logical_mut(),
        out.fz.logical_mut(),
    );
    let n = system.len();
    for i in 0..n {
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
                let (u, fs) = pair(i, j, r2)?;
                energy += u;
                gx[i] += fs * dx;
                gy[i] += fs * dy;
                gz[i] += fs * dz;
                gx[j] -= fs * dx;
                gy[j] -= fs * dy;
                gz[j] -= fs * dz;
            }
        }
    }
    out.energy = energy;
    Ok(out)
}

/// Vectorized Lennard-Jones: selection loops, then short compute loops over
/// the packed pairs.
pub fn lj_forces_vectorized(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &LjParams,
    lanes: LaneConfig,
) -> Result<ForceAccumulator> {
    check_inputs(system, table, params.cutoff)?;
    let rc2_inv = 1.0 / (params.cutoff * params.cutoff);
    let shift = if params.shift { 1.0 } else { 0.0 };
    let sigma = system.lj_sigma.as_slice();
    let epsilon = system.lj_epsilon.as_slice();
    vector_pair_loop(system, table, params.cutoff, lanes, |i, s, n| {
        let (si, ei) = (sigma[i], epsilon[i]);
        let [t0, t1, t2, t3, t4, t5, ..] = &mut s.tmp[..] else {
            unreachable!()
        };
        let (sj, ej, s6, s12, e, fs) = (
            &mut t0.0[..n],
            &mut t1.0[..n],
            &mut t2.0[..n],
            &mut t3.0[..n],
            &mut t4.0[..n],
            &mut t5.0[..n],
        );
        let pj = &s.j.0[..n];
        let r2 = &s.pr2.0[..n];
        let scale = &s.scale.0[..n];
        for k in 0..n {
            let j = pj[k] as usize;
            sj[k] = sigma[j];
            ej[k] = epsilon[j];
        }
        for k in 0..n {
            sj[k] = 0.5 * (si + sj[k]);
            ej[k] = (ei * ej[k]).sqrt();
        }
        // fs holds 1/r^2 until the last loop.
        for k in 0..n {
            fs[k] = 1.0 / r2[k];
            let s2 = sj[k] * sj[k] * fs[k];
            s6[k] = s2 * s2 * s2;
            s12[k] = s6[k] * s6[k];
        }
        for k in 0..n {
            let c2 = sj[k] * sj[k] * rc2_inv;
            let c6 = c2 * c2 * c2;
            e[k] = 4.0 * ej[k] * ((s12[k] - s6[k]) - shift * (c6 * c6 - c6)) * scale[k];
        }
        for k in 0..n {
            fs[k] = 24.0 * ej[k] * (2.0 * s12[k] - s6[k]) * fs[k] * scale[k];
        }
    })
}

/// Shared driver for the vectorized kernels. `compute(i, scratch, count)`
/// fills `tmp[4]` with scaled pair energies and `tmp[5]` with scaled force
/// scalars over `count` packed lanes.
fn vector_pair_loop<F>(
    system: &ParticleSystem,
    table: &NeighborTable,
    cutoff: f64,
    lanes: LaneConfig,
    mut compute: F,
) -> Result<ForceAccumulator>
where
    F: FnMut(usize, &mut PairScratch, usize),
{
    let mut out = ForceAccumulator::for_system(system)?;
    let mut s = PairScratch::new(lanes);
    let cut2 = cutoff * cutoff;
    let mut energy = LaneSum::default();
    let n = system.len();
    for i in 0..n {
        let nb = table.site(i);
        let sel = s.select(system, i, &nb, cut2);
        if sel.kept == 0 {
            continue;
        }
        let c = sel.count;
        compute(i, &mut s, c);
        energy.add(&s.tmp[4].0[..c]);
        let [_, _, _, _, _, t5, t6, t7, t8, ..] = &mut s.tmp[..] else {
            unreachable!()
        };
        let fs = &t5.0[..c];
        let (gx, gy, gz) = (&mut t6.0[..c], &mut t7.0[..c], &mut t8.0[..c]);
        let (dx, dy, dz) = (&s.pdx.0[..c], &s.pdy.0[..c], &s.pdz.0[..c]);
        for k in 0..c {
            gx[k] = fs[k] * dx[k];
            gy[k] = fs[k] * dy[k];
            gz[k] = fs[k] * dz[k];
        }
        let (fx, fy, fz) = (
            out.fx.padded_mut(),
            out.fy.padded_mut(),
            out.fz.padded_mut(),
        );
        fx[i] += lane_sum(gx);
        fy[i] += lane_sum(gy);
        fz[i] += lane_sum(gz);
        scatter_add([fx, fy, fz], &s.j.0[..c], [gx, gy, gz], sel.kept, true);
    }
    out.energy = energy.total();
    check_finite(&out, system, table)?;
    Ok(out)
}

/// Pair energy `qi qj erfc(alpha r) / r` and its force scalar.
pub fn ewald_real_pair(r: f64, qi: f64, qj: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("distance must be positive, got {r}")));
    }
    let qq = qi * qj;
    let ec = libm::erfc(alpha * r);
    let inv = 1.0 / r;
    let u = qq * ec * inv;
    let fs = qq * (ec * inv + FRAC_2_SQRT_PI * alpha * (-alpha * alpha * r * r).exp()) * inv * inv;
    Ok((u, fs))
}

pub fn ewald_real_forces_scalar(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &EwaldRealParams,
) -> Result<ForceAccumulator> {
    check_inputs(system, table, params.cutoff)?;
    params.validate()?;
    let q = system.charges();
    scalar_pair_loop(system, table, params.cutoff, |i, j, r2| {
        ewald_real_pair(r2.sqrt(), q[i], q[j], params.alpha)
    })
}

/// Vectorized real-space Ewald; erfc and exp are evaluated as batches over
/// the packed lanes.
pub fn ewald_real_forces_vectorized(
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &EwaldRealParams,
    lanes: LaneConfig,
) -> Result<ForceAccumulator> {
    check_inputs(system, table, params.cutoff)?;
    params.validate()?;
    let q = system.charge.as_slice();
    let alpha = params.alpha;
    let c_exp = FRAC_2_SQRT_PI * alpha;
    vector_pair_loop(system, table, params.cutoff, lanes, |i, s, n| {
        let qi = q[i];
        let [t0, t1, t2, t3, t4, t5, t6, ..] = &mut s.tmp[..] else {
            unreachable!()
        };
        let (qq, rinv, ar, ec, e, fs, ex) = (
            &mut t0.0[..n],
            &mut t1.0[..n],
            &mut t2.0[..n],
            &mut t3.0[..n],
            &mut t4.0[..n],
            &mut t5.0[..n],
            &mut t6.0[..n],
        );
        let pj = &s.j.0[..n];
        let r2 = &s.pr2.0[..n];
        let scale = &s.scale.0[..n];
        for k in 0..n {
            qq[k] = qi * q[pj[k] as usize];
        }
        for k in 0..n {
            let r = r2[k].sqrt();
            rinv[k] = 1.0 / r;
            ar[k] = alpha * r;
            ex[k] = -alpha * alpha * r2[k];
        }
        vmath::erfc_batch(ar, ec);
        vmath::exp_batch(&*ex, fs);
        for k in 0..n {
            let qs = qq[k] * scale[k];
            e[k] = qs * ec[k] * rinv[k];
            fs[k] = qs * (ec[k] * rinv[k] + c_exp * fs[k]) * rinv[k] * rinv[k];
        }
    })
}

/// Dispatches on `path`; the scalar path ignores `lanes`.
pub fn lj_forces(
    path: KernelPath,
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &LjParams,
    lanes: LaneConfig,
) -> Result<ForceAccumulator> {
    match path {
        KernelPath::Scalar => lj_forces_scalar(system, table, params),
        KernelPath::Vectorized => lj_forces_vectorized(system, table, params, lanes),
    }
}

pub fn ewald_real_forces(
    path: KernelPath,
    system: &ParticleSystem,
    table: &NeighborTable,
    params: &EwaldRealParams,
    lanes: LaneConfig,
) -> Result<ForceAccumulator> {
    match path {
        KernelPath::Scalar => ewald_real_forces_scalar(system, table, params),
        KernelPath::Vectorized => ewald_real_forces_vectorized(system, table, params, lanes),
    }
}
