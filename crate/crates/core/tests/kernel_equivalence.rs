mod common;

use common::*;
use rand::Rng;
use vecmd::*;

struct Case {
    system: ParticleSystem,
    table: NeighborTable,
    cutoff: f64,
}

fn case(seed: u64) -> Case {
    let n = [32, 100, 500][(seed % 3) as usize];
    let edge = (n as f64 / 0.08).cbrt().max(6.0);
    let cutoff = (0.45 * edge).min(4.5);
    let system = random_system(seed, n, edge, 0.8);
    let list = (cutoff + 0.4).min(0.499 * edge);
    let table = table(&system, list);
    Case { system, table, cutoff }
}

const SEEDS: std::ops::Range<u64> = 100..160;

#[test]
fn padded_tails_are_exercised() {
    let mut tails = 0;
    for seed in SEEDS {
        let c = case(seed);
        tails += (0..c.system.len())
            .filter(|&i| c.table.site(i).nnvlst % 8 != 0)
            .count();
    }
    assert!(tails > 100);
}

#[test]
fn lj_paths_agree() {
    let lanes = LaneConfig::default();
    for seed in SEEDS {
        let c = case(seed);
        for shift in [false, true] {
            let p = LjParams { cutoff: c.cutoff, shift };
            let a = lj_forces_scalar(&c.system, &c.table, &p).unwrap();
            let b = lj_forces_vectorized(&c.system, &c.table, &p, lanes).unwrap();
            assert!(energy_rel(b.energy, a.energy) <= 1e-10, "seed {seed}: {} vs {}", b.energy, a.energy);
            assert!(rel_diff(force_cols(&b), force_cols(&a)) <= 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn ewald_paths_agree() {
    let lanes = LaneConfig::default();
    for seed in SEEDS {
        let c = case(seed);
        let p = EwaldRealParams { alpha: 3.2 / c.cutoff, cutoff: c.cutoff };
        let a = ewald_real_forces_scalar(&c.system, &c.table, &p).unwrap();
        let b = ewald_real_forces_vectorized(&c.system, &c.table, &p, lanes).unwrap();
        assert!(energy_rel(b.energy, a.energy) <= 1e-10, "seed {seed}: {} vs {}", b.energy, a.energy);
        assert!(rel_diff(force_cols(&b), force_cols(&a)) <= 1e-9, "seed {seed}");
    }
}

#[test]
fn halgren_paths_agree() {
    let lanes = LaneConfig::default();
    for seed in SEEDS {
        let c = case(seed);
        let p = HalgrenParams::new(c.cutoff);
        let a = halgren_forces_scalar(&c.system, &c.table, &p).unwrap();
        let b = halgren_forces_vectorized(&c.system, &c.table, &p, lanes).unwrap();
        assert!(energy_rel(b.energy, a.energy) <= 1e-10, "seed {seed}: {} vs {}", b.energy, a.energy);
        assert!(rel_diff(force_cols(&b), force_cols(&a)) <= 1e-9, "seed {seed}");
    }
}

#[test]
fn field_paths_agree() {
    let lanes = LaneConfig::default();
    for seed in SEEDS {
        let c = case(seed);
        for p in [PolarParams::new(c.cutoff), PolarParams::undamped(c.cutoff)] {
            let mu = VectorField::dipoles_of(&c.system).unwrap();
            let a = dipole_field_matvec_scalar(&c.system, &c.table, &p, &mu).unwrap();
            let b = dipole_field_matvec_vectorized(&c.system, &c.table, &p, &mu, lanes).unwrap();
            assert!(rel_diff(field_cols(&b), field_cols(&a)) <= 1e-10, "seed {seed}");
            let a = permanent_field_scalar(&c.system, &c.table, &p).unwrap();
            let b = permanent_field_vectorized(&c.system, &c.table, &p, lanes).unwrap();
            assert!(rel_diff(field_cols(&b), field_cols(&a)) <= 1e-10, "seed {seed}");
        }
    }
}

#[test]
fn narrower_lanes_agree() {
    for real in [1usize, 2, 4] {
        let lanes = LaneConfig::new(real).unwrap();
        for seed in 200..210 {
            let c = case(seed);
            let p = LjParams::new(c.cutoff);
            let a = lj_forces_scalar(&c.system, &c.table, &p).unwrap();
            let b = lj_forces_vectorized(&c.system, &c.table, &p, lanes).unwrap();
            assert!(energy_rel(b.energy, a.energy) <= 1e-10);
            assert!(rel_diff(force_cols(&b), force_cols(&a)) <= 1e-9);
        }
    }
}

#[test]
fn image_paths_agree() {
    for seed in SEEDS {
        let mut r = rng(seed);
        let b = OrthorhombicBox::new(r.gen_range(3.0..30.0), r.gen_range(3.0..30.0), r.gen_range(3.0..30.0)).unwrap();
        let n = r.gen_range(1..500);
        let d: Vec<[f64; 3]> = (0..n)
            .map(|_| [r.gen_range(-60.0..60.0), r.gen_range(-60.0..60.0), r.gen_range(-60.0..60.0)])
            .collect();
        let col = |k: usize| PaddedRealArray::from_slice(&d.iter().map(|v| v[k]).collect::<Vec<_>>(), 8).unwrap();
        let (mut x, mut y, mut z) = (col(0), col(1), col(2));
        minimum_image_batch(&mut x, &mut y, &mut z, &b).unwrap();
        for (k, v) in d.iter().enumerate() {
            assert_eq!(minimum_image_scalar(*v, &b).unwrap(), [x.logical()[k], y.logical()[k], z.logical()[k]]);
        }
    }
}
