//! Deterministic synthetic systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vecmd::{OrthorhombicBox, ParticleSystem, Site};

use crate::config::{BenchConfig, SystemKind};
use crate::error::{BenchError, Result};

/// No two generated sites are closer than this.
pub const MIN_SEPARATION: f64 = 0.8;

/// Lattice jitter as a fraction of the spacing, per axis, either direction.
const JITTER: f64 = 0.2;

pub fn generate_system(config: &BenchConfig) -> Result<ParticleSystem> {
    generate_with_seed(config, config.seed)
}

/// Same as [`generate_system`] with the seed overridden (used for shards).
pub fn generate_with_seed(config: &BenchConfig, seed: u64) -> Result<ParticleSystem> {
    let b = config.sim_box()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = match config.system_kind {
        SystemKind::LatticeWater => lattice_positions(config.n_sites, &b, &mut rng)?,
        SystemKind::UniformRandom => random_positions(config.n_sites, &b, &mut rng)?,
    };
    let mut sites: Vec<Site> = pos
        .into_iter()
        .map(|p| Site {
            pos: p,
            charge: rng.gen_range(-0.8..0.8),
            dipole: [
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ],
            polarizability: rng.gen_range(0.5..1.5),
            lj_sigma: rng.gen_range(0.9..1.1),
            lj_epsilon: rng.gen_range(0.05..0.3),
            hal_r0: rng.gen_range(0.9..1.1),
            hal_epsilon: rng.gen_range(0.05..0.3),
        })
        .collect();
    let mean = sites.iter().map(|s| s.charge).sum::<f64>() / sites.len().max(1) as f64;
    for s in &mut sites {
        s.charge -= mean;
    }
    Ok(ParticleSystem::from_sites(b, &sites)?)
}

fn lattice_positions(n: usize, b: &OrthorhombicBox, rng: &mut ChaCha8Rng) -> Result<Vec<[f64; 3]>> {
    let m = (n as f64).cbrt().ceil() as usize;
    let m = if m * m * m < n { m + 1 } else { m };
    let l = b.lengths();
    let a = [l[0] / m as f64, l[1] / m as f64, l[2] / m as f64];
    let spacing = a[0].min(a[1]).min(a[2]);
    if spacing * (1.0 - 2.0 * JITTER) < MIN_SEPARATION {
        return Err(BenchError::Generation(format!(
            "lattice spacing {spacing:.3} too small for minimum separation {MIN_SEPARATION}"
        )));
    }
    let mut out = Vec::with_capacity(n);
    'fill: for ix in 0..m {
        for iy in 0..m {
            for iz in 0..m {
                if out.len() == n {
                    break 'fill;
                }
                let idx = [ix, iy, iz];
                let mut p = [0.0; 3];
                for k in 0..3 {
                    let v = (idx[k] as f64 + 0.5 + rng.gen_range(-JITTER..JITTER)) * a[k];
                    p[k] = if v >= l[k] { v - l[k] } else { v };
                }
                out.push(p);
            }
        }
    }
    Ok(out)
}

fn random_positions(n: usize, b: &OrthorhombicBox, rng: &mut ChaCha8Rng) -> Result<Vec<[f64; 3]>> {
    let l = b.lengths();
    // Random sequential addition jams near a packing fraction of 0.38.
    let fraction = n as f64 * std::f64::consts::PI / 6.0 * MIN_SEPARATION.powi(3) / b.volume();
    if fraction > 0.3 {
        return Err(BenchError::Generation(format!(
            "packing fraction {fraction:.3} too high for minimum separation {MIN_SEPARATION}"
        )));
    }
    let dims = l.map(|v| ((v / MIN_SEPARATION).floor() as usize).max(1));
    let mut cells: Vec<Vec<u32>> = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
    let cell_of = |p: &[f64; 3]| -> [usize; 3] {
        let mut c = [0; 3];
        for k in 0..3 {
            c[k] = ((p[k] / l[k] * dims[k] as f64) as usize).min(dims[k] - 1);
        }
        c
    };
    let mut out: Vec<[f64; 3]> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    let limit = 1000 * n + 10_000;
    while out.len() < n {
        attempts += 1;
        if attempts > limit {
            return Err(BenchError::Generation(format!(
                "placed only {} of {n} sites with minimum separation {MIN_SEPARATION}",
                out.len()
            )));
        }
        let p = [rng.gen::<f64>() * l[0], rng.gen::<f64>() * l[1], rng.gen::<f64>() * l[2]];
        if p.iter().zip(&l).any(|(v, e)| v >= e) {
            continue;
        }
        let c = cell_of(&p);
        let mut clear = true;
        'scan: for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                for dz in -1i64..=1 {
                    let w = |c: usize, d: i64, m: usize| ((c as i64 + d).rem_euclid(m as i64)) as usize;
                    let cc = (w(c[0], dx, dims[0]) * dims[1] + w(c[1], dy, dims[1])) * dims[2] + w(c[2], dz, dims[2]);
                    for &j in &cells[cc] {
                        let q = out[j as usize];
                        let mut r2 = 0.0;
                        for k in 0..3 {
                            let mut d = p[k] - q[k];
                            d -= l[k] * (d / l[k]).round();
                            r2 += d * d;
                        }
                        if r2 < MIN_SEPARATION * MIN_SEPARATION {
                            clear = false;
                            break 'scan;
                        }
                    }
                }
            }
        }
        if clear {
            cells[(c[0] * dims[1] + c[1]) * dims[2] + c[2]].push(out.len() as u32);
            out.push(p);
        }
    }
    Ok(out)
}

pub const SYSTEM_FORMAT: &str = "vecmd-system";
pub const SYSTEM_VERSION: u32 = 1;

/// Serialized form of a generated system, written by `bench gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDocument {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub system_kind: SystemKind,
    pub box_lengths: [f64; 3],
    pub positions: Vec<[f64; 3]>,
    pub charges: Vec<f64>,
    pub dipoles: Vec<[f64; 3]>,
    pub polarizabilities: Vec<f64>,
    pub lj_sigma: Vec<f64>,
    pub lj_epsilon: Vec<f64>,
    pub hal_r0: Vec<f64>,
    pub hal_epsilon: Vec<f64>,
}

impl SystemDocument {
    pub fn new(config: &BenchConfig, system: &ParticleSystem) -> Self {
        let sites = system.sites();
        Self {
            format: SYSTEM_FORMAT.into(),
            version: SYSTEM_VERSION,
            seed: config.seed,
            system_kind: config.system_kind,
            box_lengths: system.sim_box().lengths(),
            positions: sites.iter().map(|s| s.pos).collect(),
            charges: sites.iter().map(|s| s.charge).collect(),
            dipoles: sites.iter().map(|s| s.dipole).collect(),
            polarizabilities: sites.iter().map(|s| s.polarizability).collect(),
            lj_sigma: sites.iter().map(|s| s.lj_sigma).collect(),
            lj_epsilon: sites.iter().map(|s| s.lj_epsilon).collect(),
            hal_r0: sites.iter().map(|s| s.hal_r0).collect(),
            hal_epsilon: sites.iter().map(|s| s.hal_epsilon).collect(),
        }
    }

    pub fn to_system(&self) -> Result<ParticleSystem> {
        if self.format != SYSTEM_FORMAT || self.version != SYSTEM_VERSION {
            return Err(BenchError::Config(format!(
                "unsupported system document {} v{}",
                self.format, self.version
            )));
        }
        let n = self.positions.len();
        let lens = [
            self.charges.len(),
            self.dipoles.len(),
            self.polarizabilities.len(),
            self.lj_sigma.len(),
            self.lj_epsilon.len(),
            self.hal_r0.len(),
            self.hal_epsilon.len(),
        ];
        if lens.iter().any(|&k| k != n) {
            return Err(BenchError::Config("system document arrays differ in length".into()));
        }
        let [lx, ly, lz] = self.box_lengths;
        let sites: Vec<Site> = (0..n)
            .map(|i| Site {
                pos: self.positions[i],
                charge: self.charges[i],
                dipole: self.dipoles[i],
                polarizability: self.polarizabilities[i],
                lj_sigma: self.lj_sigma[i],
                lj_epsilon: self.lj_epsilon[i],
                hal_r0: self.hal_r0[i],
                hal_epsilon: self.hal_epsilon[i],
            })
            .collect();
        Ok(ParticleSystem::from_sites(OrthorhombicBox::new(lx, ly, lz)?, &sites)?)
    }
}
