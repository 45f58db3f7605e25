#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vecmd::{
    build_cell_grid, build_neighbor_table, ForceAccumulator, NeighborTable, OrthorhombicBox,
    ParticleSystem, Site, VectorField,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn image_dist2(a: [f64; 3], b: [f64; 3], l: [f64; 3]) -> f64 {
    let mut r2 = 0.0;
    for k in 0..3 {
        let mut d = a[k] - b[k];
        d -= l[k] * (d / l[k]).round();
        r2 += d * d;
    }
    r2
}

/// Random positions in `b` keeping every pair at least `min_sep` apart and
/// at least `gap` away from `avoid` (so finite-difference moves never cross
/// a cutoff). Physical parameters are drawn from modest ranges; charges are
/// shifted to sum to zero.
pub fn random_sites(seed: u64, n: usize, b: &OrthorhombicBox, min_sep: f64, avoid: Option<(f64, f64)>) -> Vec<Site> {
    let mut r = rng(seed);
    let l = b.lengths();
    let mut pos: Vec<[f64; 3]> = Vec::with_capacity(n);
    let mut tries = 0;
    while pos.len() < n {
        tries += 1;
        assert!(tries < 1_000_000, "could not place {n} sites");
        let p = [r.gen::<f64>() * l[0], r.gen::<f64>() * l[1], r.gen::<f64>() * l[2]];
        let ok = pos.iter().all(|q| {
            let d2 = image_dist2(p, *q, l);
            let far = d2 >= min_sep * min_sep;
            let clear = match avoid {
                Some((c, g)) => (d2.sqrt() - c).abs() > g,
                None => true,
            };
            far && clear
        });
        if ok {
            pos.push(p);
        }
    }
    let mut sites: Vec<Site> = pos
        .into_iter()
        .map(|p| Site {
            pos: p,
            charge: r.gen_range(-1.0..1.0),
            dipole: [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)],
            polarizability: r.gen_range(0.5..1.5),
            lj_sigma: r.gen_range(0.8..1.2),
            lj_epsilon: r.gen_range(0.1..1.0),
            hal_r0: r.gen_range(0.8..1.2),
            hal_epsilon: r.gen_range(0.05..0.5),
        })
        .collect();
    if n > 0 {
        let mean = sites.iter().map(|s| s.charge).sum::<f64>() / n as f64;
        for s in &mut sites {
            s.charge -= mean;
        }
    }
    sites
}

pub fn random_system(seed: u64, n: usize, edge: f64, min_sep: f64) -> ParticleSystem {
    let b = OrthorhombicBox::cubic(edge).unwrap();
    ParticleSystem::from_sites(b, &random_sites(seed, n, &b, min_sep, None)).unwrap()
}

pub fn table(system: &ParticleSystem, list_cutoff: f64) -> NeighborTable {
    let grid = build_cell_grid(system, list_cutoff).unwrap();
    build_neighbor_table(system, &grid, list_cutoff).unwrap()
}

/// Largest absolute component of three columns.
pub fn max_abs(cols: [&[f64]; 3]) -> f64 {
    cols.iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `max |a - b| / max |b|` over all components.
pub fn rel_diff(a: [&[f64]; 3], b: [&[f64]; 3]) -> f64 {
    let mut d = 0.0f64;
    for k in 0..3 {
        for (x, y) in a[k].iter().zip(b[k]) {
            d = d.max((x - y).abs());
        }
    }
    let s = max_abs(b);
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

pub fn force_cols(f: &ForceAccumulator) -> [&[f64]; 3] {
    [f.fx.logical(), f.fy.logical(), f.fz.logical()]
}

pub fn field_cols(f: &VectorField) -> [&[f64]; 3] {
    [f.x.logical(), f.y.logical(), f.z.logical()]
}

pub fn energy_rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}
