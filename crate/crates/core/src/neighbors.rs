//! Cell lists and padded half neighbor tables.
//!
//! Each unordered pair within the list cutoff is stored once, on the lower
//! index site. Both table builders sweep the same 27-cell stencil in the same
//! order, so they produce identical tables; the vectorized one selects
//! neighbors with mask-then-compress loops instead of a branch per candidate.

use crate::error::{contract, Error, Result};
use crate::layout::{
    compress_loop, mask_loop, pad_to, PaddedIndexArray, PaddedRealArray, MAXVLST,
};
use crate::pbc::{wrap, wrap_slices};
use crate::system::ParticleSystem;

/// Spatial hash of sites into cells at least one list cutoff wide.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    dims: [usize; 3],
    cell_size: [f64; 3],
    cell_of_site: Vec<u32>,
    cell_start: Vec<usize>,
    cell_sites: Vec<u32>,
}

impl CellGrid {
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn n_cells(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn cell_size(&self) -> [f64; 3] {
        self.cell_size
    }

    pub fn n_sites(&self) -> usize {
        self.cell_of_site.len()
    }

    pub fn cell_of(&self, site: usize) -> usize {
        self.cell_of_site[site] as usize
    }

    /// Sites of cell `c`, ascending.
    pub fn sites_in_cell(&self, c: usize) -> &[u32] {
        &self.cell_sites[self.cell_start[c]..self.cell_start[c + 1]]
    }

    fn coords(&self, c: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [c % nx, (c / nx) % ny, c / (nx * ny)]
    }

    fn index(&self, [cx, cy, cz]: [usize; 3]) -> usize {
        let [nx, ny, _] = self.dims;
        cx + nx * (cy + ny * cz)
    }

    /// The distinct cells of the periodic 27-cell stencil around `c`, in a
    /// fixed order. Fewer than 27 when an axis has under three cells.
    pub fn stencil(&self, c: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(27);
        self.stencil_into(c, &mut out);
        out
    }

    fn stencil_into(&self, c: usize, out: &mut Vec<usize>) {
        out.clear();
        let base = self.coords(c);
        for dz in [-1i64, 0, 1] {
            for dy in [-1i64, 0, 1] {
                for dx in [-1i64, 0, 1] {
                    let mut p = [0usize; 3];
                    for (axis, d) in [dx, dy, dz].into_iter().enumerate() {
                        let n = self.dims[axis] as i64;
                        p[axis] = (base[axis] as i64 + d).rem_euclid(n) as usize;
                    }
                    let k = self.index(p);
                    if !out.contains(&k) {
                        out.push(k);
                    }
                }
            }
        }
    }

    fn max_stencil_population(&self) -> usize {
        let mut st = Vec::with_capacity(27);
        (0..self.n_cells())
            .map(|c| {
                self.stencil_into(c, &mut st);
                st.iter().map(|&k| self.sites_in_cell(k).len()).sum::<usize>()
            })
            .max()
            .unwrap_or(0)
    }
}

/// Buckets every site into a cell whose edge is at least `list_cutoff`.
/// Positions must already lie in `[0, L)`.
pub fn build_cell_grid(system: &ParticleSystem, list_cutoff: f64) -> Result<CellGrid> {
    let b = system.sim_box();
    b.check_cutoff(list_cutoff)?;
    let lengths = b.lengths();
    let mut dims = [1usize; 3];
    let mut cell_size = [0.0; 3];
    for a in 0..3 {
        dims[a] = ((lengths[a] / list_cutoff).floor() as usize).max(1);
        cell_size[a] = lengths[a] / dims[a] as f64;
    }
    let pos = system.positions();
    let n = system.len();
    let mut cell_of_site = Vec::with_capacity(n);
    for i in 0..n {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let v = pos[a][i];
            if !(v >= 0.0 && v < lengths[a]) {
                return Err(Error::Unwrapped { site: i });
            }
            c[a] = ((v / cell_size[a]) as usize).min(dims[a] - 1);
        }
        cell_of_site.push((c[0] + dims[0] * (c[1] + dims[1] * c[2])) as u32);
    }
    let n_cells = dims.iter().product::<usize>();
    let mut cell_start = vec![0usize; n_cells + 1];
    for &c in &cell_of_site {
        cell_start[c as usize + 1] += 1;
    }
    for c in 0..n_cells {
        cell_start[c + 1] += cell_start[c];
    }
    let mut fill = cell_start.clone();
    let mut cell_sites = vec![0u32; n];
    for (i, &c) in cell_of_site.iter().enumerate() {
        cell_sites[fill[c as usize]] = i as u32;
        fill[c as usize] += 1;
    }
    Ok(CellGrid {
        dims,
        cell_size,
        cell_of_site,
        cell_start,
        cell_sites,
    })
}

/// Half neighbor table with per-site padded segments.
///
/// Segment `i` starts on a 64-byte boundary and holds `nvloop16(i)` index
/// slots; slots past `nnvlst(i)` repeat the last neighbor and carry scale 0.0.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    indices: PaddedIndexArray,
    scale: PaddedRealArray,
    offsets: Vec<usize>,
    nnvlst: Vec<u32>,
    nvloop8: Vec<u32>,
    nvloop16: Vec<u32>,
    list_cutoff: f64,
}

/// One site's view into a [`NeighborTable`].
#[derive(Debug, Clone, Copy)]
pub struct SiteNeighbors<'a> {
    /// Real neighbor count.
    pub nnvlst: usize,
    /// Real-lane loop count.
    pub nvloop8: usize,
    /// Integer-lane loop count; the slice lengths.
    pub nvloop16: usize,
    pub indices: &'a [u32],
    pub scale: &'a [f64],
}

impl SiteNeighbors<'_> {
    pub fn logical(&self) -> &[u32] {
        &self.indices[..self.nnvlst]
    }
}

impl NeighborTable {
    fn from_lists(lists: &[Vec<u32>], list_cutoff: f64, extra: usize) -> Result<Self> {
        let extra = pad_to(extra, 16);
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut nnvlst = Vec::with_capacity(lists.len());
        let mut nvloop8 = Vec::with_capacity(lists.len());
        let mut nvloop16 = Vec::with_capacity(lists.len());
        let mut total = 0usize;
        for l in lists {
            offsets.push(total);
            let n = l.len();
            let l16 = if n == 0 { 0 } else { pad_to(n, 16) + extra };
            nnvlst.push(n as u32);
            nvloop8.push(if n == 0 { 0 } else { (pad_to(n, 8) + extra) as u32 });
            nvloop16.push(l16 as u32);
            total += l16;
        }
        offsets.push(total);
        let mut flat = vec![0u32; total];
        let mut scale = vec![0.0f64; total];
        for (i, l) in lists.iter().enumerate() {
            let seg = &mut flat[offsets[i]..offsets[i + 1]];
            seg[..l.len()].copy_from_slice(l);
            crate::layout::fill_sentinel(seg, l.len());
            scale[offsets[i]..offsets[i] + l.len()].fill(1.0);
        }
        Ok(Self {
            indices: PaddedIndexArray::from_slice(&flat, 16)?,
            scale: PaddedRealArray::from_slice(&scale, 16)?,
            offsets,
            nnvlst,
            nvloop8,
            nvloop16,
            list_cutoff,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.nnvlst.len()
    }

    pub fn list_cutoff(&self) -> f64 {
        self.list_cutoff
    }

    pub fn site(&self, i: usize) -> SiteNeighbors<'_> {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        SiteNeighbors {
            nnvlst: self.nnvlst[i] as usize,
            nvloop8: self.nvloop8[i] as usize,
            nvloop16: self.nvloop16[i] as usize,
            indices: &self.indices.as_slice()[a..b],
            scale: &self.scale.as_slice()[a..b],
        }
    }

    pub fn total_pairs(&self) -> usize {
        self.nnvlst.iter().map(|&n| n as usize).sum()
    }

    /// Longest padded segment.
    pub fn max_segment(&self) -> usize {
        self.nvloop16.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn max_neighbors(&self) -> usize {
        self.nnvlst.iter().copied().max().unwrap_or(0) as usize
    }

    /// All stored pairs as `(i, j)` with `i < j`, sorted.
    pub fn pairs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.total_pairs());
        for i in 0..self.n_sites() {
            for &j in self.site(i).logical() {
                out.push((i as u32, j));
            }
        }
        out.sort_unstable();
        out
    }

    /// Same neighbors with `extra` more padded slots per non-empty site
    /// (rounded up to 16).
    pub fn with_extra_padding(&self, extra: usize) -> Result<Self> {
        let lists: Vec<Vec<u32>> = (0..self.n_sites())
            .map(|i| self.site(i).logical().to_vec())
            .collect();
        Self::from_lists(&lists, self.list_cutoff, extra)
    }

    /// Address of the flat index storage, for alignment checks.
    pub fn indices_ptr(&self) -> *const u32 {
        self.indices.as_ptr()
    }
}

fn check_grid(system: &ParticleSystem, grid: &CellGrid, list_cutoff: f64) -> Result<()> {
    system.sim_box().check_cutoff(list_cutoff)?;
    if grid.n_sites() != system.len() {
        return Err(contract(format!(
            "grid holds {} sites, system has {}",
            grid.n_sites(),
            system.len()
        )));
    }
    for a in 0..3 {
        if grid.dims[a] > 1 && grid.cell_size[a] < list_cutoff {
            return Err(contract(format!(
                "cell edge {} narrower than list cutoff {list_cutoff}",
                grid.cell_size[a]
            )));
        }
    }
    Ok(())
}

/// Reference builder: one branch per candidate, neighbors pushed on the fly.
pub fn build_neighbor_table_scalar(
    system: &ParticleSystem,
    grid: &CellGrid,
    list_cutoff: f64,
) -> Result<NeighborTable> {
    check_grid(system, grid, list_cutoff)?;
    let b = system.sim_box();
    let [lx, ly, lz] = b.lengths();
    let (ilx, ily, ilz) = (1.0 / lx, 1.0 / ly, 1.0 / lz);
    let cut2 = list_cutoff * list_cutoff;
    let [x, y, z] = system.positions();
    let mut lists = Vec::with_capacity(system.len());
    let mut stencil = Vec::with_capacity(27);
    for i in 0..system.len() {
        grid.stencil_into(grid.cell_of(i), &mut stencil);
        let mut list = Vec::new();
        for &c in &stencil {
            for &j in grid.sites_in_cell(c) {
                let ju = j as usize;
                if ju <= i {
                    continue;
                }
                let dx = wrap(x[i] - x[ju], lx, ilx);
                let dy = wrap(y[i] - y[ju], ly, ily);
                let dz = wrap(z[i] - z[ju], lz, ilz);
                let r2 = dx * dx + dy * dy + dz * dz;
                if r2 <= cut2 {
                    list.push(j);
                }
            }
        }
        if list.len() > MAXVLST {
            return Err(Error::Capacity {
                site: i,
                count: list.len(),
                capacity: MAXVLST,
            });
        }
        lists.push(list);
    }
    NeighborTable::from_lists(&lists, list_cutoff, 0)
}

/// Vectorized builder: gathers the stencil candidates, then runs short
/// select loops (index mask, compress, distance, mask, compress).
pub fn build_neighbor_table(
    system: &ParticleSystem,
    grid: &CellGrid,
    list_cutoff: f64,
) -> Result<NeighborTable> {
    check_grid(system, grid, list_cutoff)?;
    let b = system.sim_box();
    let cut2 = list_cutoff * list_cutoff;
    let [x, y, z] = system.positions();

    let cap = pad_to(grid.max_stencil_population(), 16);
    let mut cand = vec![0u32; cap];
    let mut sel = vec![0u32; cap];
    let mut packed = vec![0u32; cap];
    let mut mask = vec![0u8; cap];
    let mut dx = vec![0.0f64; cap];
    let mut dy = vec![0.0f64; cap];
    let mut dz = vec![0.0f64; cap];
    let mut r2 = vec![0.0f64; cap];

    let mut lists = Vec::with_capacity(system.len());
    let mut stencil = Vec::with_capacity(27);
    for i in 0..system.len() {
        grid.stencil_into(grid.cell_of(i), &mut stencil);
        let mut ncand = 0;
        for &c in &stencil {
            let s = grid.sites_in_cell(c);
            cand[ncand..ncand + s.len()].copy_from_slice(s);
            ncand += s.len();
        }
        let n16 = pad_to(ncand, 16);
        crate::layout::fill_sentinel(&mut cand[..n16], ncand);

        // Keep only higher-index candidates.
        let iu = i as u32;
        for k in 0..n16 {
            mask[k] = ((cand[k] > iu) & (k < ncand)) as u8;
        }
        let nsel = compress_loop(&cand[..n16], &mask[..n16], &mut sel);
        if nsel == 0 {
            lists.push(Vec::new());
            continue;
        }
        let s16 = pad_to(nsel, 16);
        crate::layout::fill_sentinel(&mut sel[..s16], nsel);

        let (xi, yi, zi) = (x[i], y[i], z[i]);
        for k in 0..s16 {
            let j = sel[k] as usize;
            dx[k] = xi - x[j];
            dy[k] = yi - y[j];
            dz[k] = zi - z[j];
        }
        wrap_slices(&mut dx[..s16], &mut dy[..s16], &mut dz[..s16], b);
        for k in 0..s16 {
            r2[k] = dx[k] * dx[k] + dy[k] * dy[k] + dz[k] * dz[k];
        }
        mask_loop(&r2[..s16], nsel, cut2, &mut mask[..s16]);
        let kept = compress_loop(&sel[..s16], &mask[..s16], &mut packed);
        if kept > MAXVLST {
            return Err(Error::Capacity {
                site: i,
                count: kept,
                capacity: MAXVLST,
            });
        }
        lists.push(packed[..kept].to_vec());
    }
    NeighborTable::from_lists(&lists, list_cutoff, 0)
}

/// All pairs `(i, j)`, `i < j`, with minimum-image distance at most `cutoff`,
/// by exhaustive scan. Sorted.
pub fn brute_force_pairs(system: &ParticleSystem, cutoff: f64) -> Result<Vec<(u32, u32)>> {
    let b = system.sim_box();
    b.check_cutoff(cutoff)?;
    let cut2 = cutoff * cutoff;
    let n = system.len();
    let mut out = Vec::new();
    for i in 0..n {
        let pi = system.position(i);
        for j in i + 1..n {
            let pj = system.position(j);
            let d = crate::pbc::minimum_image_scalar(
                [pi[0] - pj[0], pi[1] - pj[1], pi[2] - pj[2]],
                b,
            )?;
            if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= cut2 {
                out.push((i as u32, j as u32));
            }
        }
    }
    Ok(out)
}
