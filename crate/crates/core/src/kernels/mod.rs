//! Pair kernels, each with a scalar reference path and a vectorized path.
//!
//! The scalar path walks every site's neighbor list and computes each pair
//! on the fly behind a cutoff branch. The vectorized path handles one site at
//! a time with a fixed sequence of short loops over preallocated, aligned
//! scratch:
//!
//! 1. gather neighbor displacements over `nvloop8` lanes,
//! 2. minimum image and squared distance,
//! 3. cutoff mask over `nvloop16` lanes and a fused compress of index,
//!    displacement, distance and scale columns,
//! 4. pad the packed columns to the real lane with the last kept pair and a
//!    zero scale,
//! 5. kernel-specific compute loops, per-lane partial sums and a scatter of
//!    the reaction terms onto the neighbors.

pub mod nonpolar;
pub mod polar;

use crate::error::{contract, Error, Result};
use crate::layout::{fill_sentinel, mask_loop, pad_to, LaneConfig, MAXVLST};
use crate::neighbors::{NeighborTable, SiteNeighbors};
use crate::pbc::wrap_slices;
use crate::system::{ForceAccumulator, ParticleSystem};

/// Which implementation of a kernel to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelPath {
    Scalar,
    Vectorized,
}

/// Scratch capacity: the neighbor capacity plus one integer lane of slack.
const SCRATCH: usize = MAXVLST + 16;

/// 64-byte aligned scratch column.
#[derive(Clone)]
#[repr(C, align(64))]
pub(crate) struct Col<T: Copy>(pub(crate) [T; SCRATCH]);

impl Col<f64> {
    fn new() -> Box<Self> {
        Box::new(Col([0.0; SCRATCH]))
    }
}

impl Col<u32> {
    fn new() -> Box<Self> {
        Box::new(Col([0; SCRATCH]))
    }
}

/// Number of general-purpose temporaries available to compute loops.
pub(crate) const N_TMP: usize = 12;

/// Per-call scratch shared by the vectorized kernels. Allocated once per
/// kernel call, reused for every site.
pub(crate) struct PairScratch {
    lanes: LaneConfig,
    dx: Box<Col<f64>>,
    dy: Box<Col<f64>>,
    dz: Box<Col<f64>>,
    r2: Box<Col<f64>>,
    mask: Box<[u8; SCRATCH]>,
    pub(crate) j: Box<Col<u32>>,
    pub(crate) pdx: Box<Col<f64>>,
    pub(crate) pdy: Box<Col<f64>>,
    pub(crate) pdz: Box<Col<f64>>,
    pub(crate) pr2: Box<Col<f64>>,
    pub(crate) scale: Box<Col<f64>>,
    pub(crate) tmp: Vec<Box<Col<f64>>>,
}

/// The packed pairs of one site after selection.
pub(crate) struct Selection {
    /// Pairs inside the cutoff.
    pub kept: usize,
    /// `kept` rounded up to the real lane.
    pub count: usize,
}

impl PairScratch {
    pub(crate) fn new(lanes: LaneConfig) -> Self {
        Self {
            lanes,
            dx: Col::<f64>::new(),
            dy: Col::<f64>::new(),
            dz: Col::<f64>::new(),
            r2: Col::<f64>::new(),
            mask: Box::new([0; SCRATCH]),
            j: Col::<u32>::new(),
            pdx: Col::<f64>::new(),
            pdy: Col::<f64>::new(),
            pdz: Col::<f64>::new(),
            pr2: Col::<f64>::new(),
            scale: Col::<f64>::new(),
            tmp: (0..N_TMP).map(|_| Col::<f64>::new()).collect(),
        }
    }

    /// Selection loops for site `i`: gather, image, distance, mask, compress,
    /// pad. Packed columns hold `count` lanes on return.
    pub(crate) fn select(
        &mut self,
        system: &ParticleSystem,
        i: usize,
        nb: &SiteNeighbors<'_>,
        cut2: f64,
    ) -> Selection {
        let n8 = nb.nvloop8;
        if nb.nnvlst == 0 {
            return Selection { kept: 0, count: 0 };
        }
        let [x, y, z] = [system.x.as_slice(), system.y.as_slice(), system.z.as_slice()];
        let (xi, yi, zi) = (x[i], y[i], z[i]);
        let idx = &nb.indices[..n8];
        {
            let (dx, dy, dz) = (&mut self.dx.0[..n8], &mut self.dy.0[..n8], &mut self.dz.0[..n8]);
            for k in 0..n8 {
                let j = idx[k] as usize;
                dx[k] = xi - x[j];
                dy[k] = yi - y[j];
                dz[k] = zi - z[j];
            }
            wrap_slices(dx, dy, dz, system.sim_box());
            let r2 = &mut self.r2.0[..n8];
            for k in 0..n8 {
                r2[k] = dx[k] * dx[k] + dy[k] * dy[k] + dz[k] * dz[k];
            }
        }
        let kept = self.compress(nb, cut2);
        if kept == 0 {
            return Selection { kept: 0, count: 0 };
        }
        let count = pad_to(kept, self.lanes.real_lane());
        fill_sentinel(&mut self.j.0[..count], kept);
        fill_sentinel(&mut self.pdx.0[..count], kept);
        fill_sentinel(&mut self.pdy.0[..count], kept);
        fill_sentinel(&mut self.pdz.0[..count], kept);
        fill_sentinel(&mut self.pr2.0[..count], kept);
        self.scale.0[kept..count].fill(0.0);
        Selection { kept, count }
    }
}

impl PairScratch {
    /// Cutoff mask and fused compress of index, displacement, distance and
    /// scale columns. Returns the number of kept pairs.
    fn compress(&mut self, nb: &SiteNeighbors<'_>, cut2: f64) -> usize {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: avx512f is available, and every column holds at least
            // `nvloop16` lanes.
            return unsafe { self.compress_avx512(nb, cut2) };
        }
        self.compress_portable(nb, cut2)
    }

    fn compress_portable(&mut self, nb: &SiteNeighbors<'_>, cut2: f64) -> usize {
        let n16 = nb.nvloop16;
        // Lanes in [n8, n16) read stale but finite scratch and are masked off.
        mask_loop(&self.r2.0[..n16], nb.nnvlst, cut2, &mut self.mask[..n16]);
        let mut kk = 0usize;
        let m = &self.mask[..n16];
        let (sj, ss) = (&nb.indices[..n16], &nb.scale[..n16]);
        let (dx, dy, dz, r2) = (&self.dx.0, &self.dy.0, &self.dz.0, &self.r2.0);
        let (pj, pdx, pdy, pdz, pr2, psc) = (
            &mut self.j.0,
            &mut self.pdx.0,
            &mut self.pdy.0,
            &mut self.pdz.0,
            &mut self.pr2.0,
            &mut self.scale.0,
        );
        for k in 0..n16 {
            pj[kk] = sj[k];
            pdx[kk] = dx[k];
            pdy[kk] = dy[k];
            pdz[kk] = dz[k];
            pr2[kk] = r2[k];
            psc[kk] = ss[k];
            kk += m[k] as usize;
        }
        kk
    }

    /// Same as the portable loop, 16 lanes at a time with compress stores.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f")]
    unsafe fn compress_avx512(&mut self, nb: &SiteNeighbors<'_>, cut2: f64) -> usize {
        use std::arch::x86_64::*;
        let n16 = nb.nvloop16;
        let nn = nb.nnvlst;
        let (sj, ss) = (&nb.indices[..n16], &nb.scale[..n16]);
        let cut = _mm512_set1_pd(cut2);
        let src = [self.dx.0.as_ptr(), self.dy.0.as_ptr(), self.dz.0.as_ptr(), self.r2.0.as_ptr()];
        let dst = [
            self.pdx.0.as_mut_ptr(),
            self.pdy.0.as_mut_ptr(),
            self.pdz.0.as_mut_ptr(),
            self.pr2.0.as_mut_ptr(),
        ];
        let psc = self.scale.0.as_mut_ptr();
        let pj = self.j.0.as_mut_ptr();
        let lane_mask = |b: usize| -> u8 {
            if b + 8 <= nn {
                0xff
            } else if b >= nn {
                0
            } else {
                ((1u16 << (nn - b)) - 1) as u8
            }
        };
        let mut kk = 0usize;
        let mut b = 0usize;
        while b < n16 {
            let lo = _mm512_cmp_pd_mask::<_CMP_LE_OQ>(_mm512_loadu_pd(src[3].add(b)), cut) & lane_mask(b);
            let hi = _mm512_cmp_pd_mask::<_CMP_LE_OQ>(_mm512_loadu_pd(src[3].add(b + 8)), cut) & lane_mask(b + 8);
            let m16 = lo as u16 | (hi as u16) << 8;
            _mm512_mask_compressstoreu_epi32(pj.add(kk) as *mut _, m16, _mm512_loadu_si512(sj.as_ptr().add(b) as *const _));
            let k2 = kk + lo.count_ones() as usize;
            for c in 0..4 {
                _mm512_mask_compressstoreu_pd(dst[c].add(kk) as *mut _, lo, _mm512_loadu_pd(src[c].add(b)));
                _mm512_mask_compressstoreu_pd(dst[c].add(k2) as *mut _, hi, _mm512_loadu_pd(src[c].add(b + 8)));
            }
            _mm512_mask_compressstoreu_pd(psc.add(kk) as *mut _, lo, _mm512_loadu_pd(ss.as_ptr().add(b)));
            _mm512_mask_compressstoreu_pd(psc.add(k2) as *mut _, hi, _mm512_loadu_pd(ss.as_ptr().add(b + 8)));
            kk = k2 + hi.count_ones() as usize;
            b += 16;
        }
        kk
    }
}

/// `f[j] += g` (or `-=` with `sub`) over the first `kept` packed lanes.
/// Indices are distinct within one site's list, so lanes never collide.
#[inline]
pub(crate) fn scatter_add(f: [&mut [f64]; 3], pj: &[u32], g: [&[f64]; 3], kept: usize, sub: bool) {
    let [fx, fy, fz] = f;
    let s = if sub { -1.0 } else { 1.0 };
    for k in 0..kept {
        let j = pj[k] as usize;
        fx[j] += s * g[0][k];
        fy[j] += s * g[1][k];
        fz[j] += s * g[2][k];
    }
}

/// Per-lane partial sums, reduced once at the end.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct LaneSum([f64; 8]);

impl LaneSum {
    #[inline]
    pub(crate) fn add(&mut self, v: &[f64]) {
        let mut chunks = v.chunks_exact(8);
        for c in &mut chunks {
            for l in 0..8 {
                self.0[l] += c[l];
            }
        }
        for (l, &r) in chunks.remainder().iter().enumerate() {
            self.0[l] += r;
        }
    }

    pub(crate) fn total(&self) -> f64 {
        let a = &self.0;
        ((a[0] + a[4]) + (a[1] + a[5])) + ((a[2] + a[6]) + (a[3] + a[7]))
    }
}

/// Sum of `v` with eight partial accumulators.
#[inline]
pub(crate) fn lane_sum(v: &[f64]) -> f64 {
    let mut s = LaneSum::default();
    s.add(v);
    s.total()
}

pub(crate) fn check_inputs(system: &ParticleSystem, table: &NeighborTable, cutoff: f64) -> Result<()> {
    if table.n_sites() != system.len() {
        return Err(contract(format!(
            "neighbor table has {} sites, system has {}",
            table.n_sites(),
            system.len()
        )));
    }
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(Error::InvalidInput(format!("cutoff must be positive, got {cutoff}")));
    }
    if table.list_cutoff() < cutoff {
        return Err(contract(format!(
            "neighbor list cutoff {} below interaction cutoff {cutoff}",
            table.list_cutoff()
        )));
    }
    if table.max_segment() > SCRATCH {
        return Err(contract(format!(
            "neighbor segment of {} slots exceeds scratch capacity {SCRATCH}",
            table.max_segment()
        )));
    }
    Ok(())
}

/// Vectorized kernels skip the per-pair zero test; a coincident pair shows up
/// as a non-finite energy or force afterwards.
pub(crate) fn check_finite(
    out: &ForceAccumulator,
    system: &ParticleSystem,
    table: &NeighborTable,
) -> Result<()> {
    let finite = out.energy.is_finite()
        && [&out.fx, &out.fy, &out.fz]
            .iter()
            .all(|a| a.logical().iter().all(|v| v.is_finite()));
    if finite {
        Ok(())
    } else {
        Err(find_singularity(system, table))
    }
}

/// After a vectorized kernel produced a non-finite result, finds the
/// coincident pair responsible.
pub(crate) fn find_singularity(system: &ParticleSystem, table: &NeighborTable) -> Error {
    for i in 0..table.n_sites() {
        let pi = system.position(i);
        for &j in table.site(i).logical() {
            let pj = system.position(j as usize);
            if let Ok(d) = crate::pbc::minimum_image_scalar(
                [pi[0] - pj[0], pi[1] - pj[1], pi[2] - pj[2]],
                system.sim_box(),
            ) {
                if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] == 0.0 {
                    return Error::Singularity { i, j: j as usize };
                }
            }
        }
    }
    Error::InvalidInput("kernel produced a non-finite result".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lane_sum_padding_is_exact() {
        let v: Vec<f64> = (0..13).map(|k| 0.1 * k as f64 + 1e-3).collect();
        let mut padded = v.clone();
        padded.resize(16, 0.0);
        let mut more = padded.clone();
        more.resize(64, 0.0);
        assert_eq!(lane_sum(&padded), lane_sum(&more));
        let direct: f64 = v.iter().sum();
        assert!((lane_sum(&v) - direct).abs() < 1e-12);
    }

    #[test]
    fn compress_paths_agree() {
        use crate::neighbors::{build_cell_grid, build_neighbor_table};
        use crate::pbc::OrthorhombicBox;
        use crate::system::Site;
        let b = OrthorhombicBox::cubic(9.0).unwrap();
        let sites: Vec<Site> = (0..150)
            .map(|k| {
                let f = k as f64;
                Site::at((f * 0.618).fract() * 9.0, (f * 0.414).fract() * 9.0, (f * 0.732).fract() * 9.0)
            })
            .collect();
        let sys = ParticleSystem::from_sites(b, &sites).unwrap();
        let t = build_neighbor_table(&sys, &build_cell_grid(&sys, 4.0).unwrap(), 4.0).unwrap();
        let mut s = PairScratch::new(LaneConfig::default());
        for i in 0..sys.len() {
            let nb = t.site(i);
            let sel = s.select(&sys, i, &nb, 3.5 * 3.5);
            let k = sel.kept;
            let fast = (s.j.0[..k].to_vec(), s.pdx.0[..k].to_vec(), s.pr2.0[..k].to_vec(), s.scale.0[..k].to_vec());
            if nb.nnvlst == 0 {
                continue;
            }
            assert_eq!(s.compress_portable(&nb, 3.5 * 3.5), k);
            let slow = (s.j.0[..k].to_vec(), s.pdx.0[..k].to_vec(), s.pr2.0[..k].to_vec(), s.scale.0[..k].to_vec());
            assert_eq!(fast, slow, "site {i}");
            assert!(s.pr2.0[..k].iter().all(|&r2| r2 <= 3.5 * 3.5));
        }
    }

    #[test]
    fn scratch_columns_are_aligned() {
        let s = PairScratch::new(LaneConfig::default());
        assert_eq!(s.dx.0.as_ptr() as usize % 64, 0);
        assert_eq!(s.j.0.as_ptr() as usize % 64, 0);
        assert_eq!(s.tmp[3].0.as_ptr() as usize % 64, 0);
    }
}
