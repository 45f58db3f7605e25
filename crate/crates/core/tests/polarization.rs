mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use vecmd::*;

fn pair_system(d: [f64; 3], mu_j: [f64; 3]) -> ParticleSystem {
    let b = OrthorhombicBox::cubic(20.0).unwrap();
    let i = Site::at(10.0, 10.0, 10.0);
    let j = Site {
        dipole: mu_j,
        ..Site::at(10.0 - d[0], 10.0 - d[1], 10.0 - d[2])
    };
    ParticleSystem::from_sites(b, &[i, j]).unwrap()
}

fn both_fields(sys: &ParticleSystem, p: &PolarParams) -> Vec<VectorField> {
    let t = table(sys, p.cutoff);
    let mu = VectorField::dipoles_of(sys).unwrap();
    [KernelPath::Scalar, KernelPath::Vectorized]
        .iter()
        .map(|&path| dipole_field_matvec(path, sys, &t, p, &mu, LaneConfig::default()).unwrap())
        .collect()
}

#[test]
fn dipole_field_examples() {
    let p = PolarParams::undamped(5.0);
    // Dipole along the axis joining the sites.
    for e in both_fields(&pair_system([0.0, 0.0, 2.0], [0.0, 0.0, 1.0]), &p) {
        let f = e.at(0);
        assert!(f[0].abs() < 1e-16 && f[1].abs() < 1e-16 && (f[2] - 0.25).abs() < 1e-15, "{f:?}");
    }
    // Dipole perpendicular to the axis.
    for e in both_fields(&pair_system([2.0, 0.0, 0.0], [0.0, 0.0, 1.0]), &p) {
        let f = e.at(0);
        assert!(f[0].abs() < 1e-16 && f[1].abs() < 1e-16 && (f[2] + 0.125).abs() < 1e-15, "{f:?}");
    }
    for e in both_fields(&pair_system([1.0, 2.0, 0.5], [0.0; 3]), &PolarParams::new(5.0)) {
        assert_eq!(e.at(0), [0.0; 3]);
        assert_eq!(e.at(1), [0.0; 3]);
    }
}

/// Dense 3x3 dipole tensor oracle `(3 r r^T / r^5 - I / r^3)`.
#[test]
fn dipole_field_matches_tensor_oracle() {
    let d = [1.3, -0.4, 2.1];
    let mu = [0.3, -0.7, 0.2];
    let r2: f64 = d.iter().map(|v| v * v).sum();
    let r = r2.sqrt();
    let t = DMatrix::from_fn(3, 3, |a, b| 3.0 * d[a] * d[b] / r.powi(5) - if a == b { 1.0 / r.powi(3) } else { 0.0 });
    let want = &t * DVector::from_row_slice(&mu);
    for e in both_fields(&pair_system(d, mu), &PolarParams::undamped(5.0)) {
        let f = e.at(0);
        for k in 0..3 {
            assert!((f[k] - want[k]).abs() < 1e-15, "{f:?} vs {want}");
        }
    }
}

#[test]
fn permanent_field_examples() {
    let b = OrthorhombicBox::cubic(20.0).unwrap();
    let sys = ParticleSystem::from_sites(b, &[Site::at(5.0, 5.0, 5.0), Site { charge: 1.0, ..Site::at(7.0, 5.0, 5.0) }]).unwrap();
    let t = table(&sys, 5.0);
    let p = PolarParams::undamped(5.0);
    for path in [KernelPath::Scalar, KernelPath::Vectorized] {
        let e = permanent_field(path, &sys, &t, &p, LaneConfig::default()).unwrap();
        // Displacement from the charge to site 0 is -2 x, so the field points along -x.
        assert_eq!(e.at(0), [-0.25, 0.0, 0.0]);
        assert_eq!(e.at(1), [0.0; 3]);
    }
    let sys = random_system(11, 60, 9.0, 0.8);
    let t = table(&sys, 4.0);
    let mut doubled = sys.clone();
    for q in doubled.charges_mut() {
        *q *= 2.0;
    }
    let mut zero = sys.clone();
    zero.charges_mut().fill(0.0);
    let p = PolarParams::new(4.0);
    for path in [KernelPath::Scalar, KernelPath::Vectorized] {
        let lanes = LaneConfig::default();
        let a = permanent_field(path, &sys, &t, &p, lanes).unwrap();
        let b = permanent_field(path, &doubled, &t, &p, lanes).unwrap();
        for k in 0..3 {
            for (x, y) in field_cols(&a)[k].iter().zip(field_cols(&b)[k]) {
                assert_eq!(2.0 * x, *y);
            }
        }
        let z = permanent_field(path, &zero, &t, &p, lanes).unwrap();
        assert!(field_cols(&z).iter().all(|c| c.iter().all(|&v| v == 0.0)));
    }
}

#[test]
fn fields_reject_nonpositive_polarizability() {
    let b = OrthorhombicBox::cubic(10.0).unwrap();
    let sys = ParticleSystem::from_sites(b, &[Site::at(1.0, 1.0, 1.0), Site { polarizability: 0.0, ..Site::at(2.0, 1.0, 1.0) }]).unwrap();
    let t = table(&sys, 3.0);
    let p = PolarParams::new(3.0);
    let mu = VectorField::dipoles_of(&sys).unwrap();
    for path in [KernelPath::Scalar, KernelPath::Vectorized] {
        assert!(dipole_field_matvec(path, &sys, &t, &p, &mu, LaneConfig::default()).is_err());
        assert!(permanent_field(path, &sys, &t, &p, LaneConfig::default()).is_err());
    }
}

fn random_mu(seed: u64, n: usize, padded: usize) -> VectorField {
    let mut r = rng(seed);
    let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    VectorField::from_columns([&cols[0], &cols[1], &cols[2]], padded).unwrap()
}

#[test]
fn matvec_is_linear() {
    let lanes = LaneConfig::default();
    for seed in 0..10 {
        let sys = random_system(seed + 70, 150, 11.0, 0.8);
        let t = table(&sys, 4.5);
        let p = PolarParams::new(4.5);
        let (m1, m2) = (random_mu(seed, sys.len(), sys.padded_len()), random_mu(seed + 1000, sys.len(), sys.padded_len()));
        let (a, b) = (0.75, -2.5);
        let comb: Vec<Vec<f64>> = (0..3)
            .map(|k| field_cols(&m1)[k].iter().zip(field_cols(&m2)[k]).map(|(x, y)| a * x + b * y).collect())
            .collect();
        let mc = VectorField::from_columns([&comb[0], &comb[1], &comb[2]], sys.padded_len()).unwrap();
        for path in [KernelPath::Scalar, KernelPath::Vectorized] {
            let t1 = dipole_field_matvec(path, &sys, &t, &p, &m1, lanes).unwrap();
            let t2 = dipole_field_matvec(path, &sys, &t, &p, &m2, lanes).unwrap();
            let tc = dipole_field_matvec(path, &sys, &t, &p, &mc, lanes).unwrap();
            let want: Vec<Vec<f64>> = (0..3)
                .map(|k| field_cols(&t1)[k].iter().zip(field_cols(&t2)[k]).map(|(x, y)| a * x + b * y).collect())
                .collect();
            let d = rel_diff(field_cols(&tc), [&want[0], &want[1], &want[2]]);
            assert!(d <= 1e-12, "seed {seed} {path:?}: {d:e}");
        }
    }
}

/// Dense `3N x 3N` interaction matrix, column by column through the kernel.
fn assemble(sys: &ParticleSystem, t: &NeighborTable, p: &PolarParams, path: KernelPath) -> DMatrix<f64> {
    let n = sys.len();
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    for j in 0..n {
        for c in 0..3 {
            let mut cols = vec![vec![0.0; n]; 3];
            cols[c][j] = 1.0;
            let mu = VectorField::from_columns([&cols[0], &cols[1], &cols[2]], sys.padded_len()).unwrap();
            let e = dipole_field_matvec(path, sys, t, p, &mu, LaneConfig::default()).unwrap();
            for i in 0..n {
                let f = e.at(i);
                for a in 0..3 {
                    m[(3 * i + a, 3 * j + c)] = f[a];
                }
            }
        }
    }
    m
}

#[test]
fn dense_matrix_is_symmetric() {
    for seed in 0..10u64 {
        let n = 2 + (seed as usize * 2) % 19;
        let sys = random_system(seed + 500, n, 6.0, 0.8);
        let t = table(&sys, 2.9);
        let p = PolarParams::new(2.9);
        for path in [KernelPath::Scalar, KernelPath::Vectorized] {
            let m = assemble(&sys, &t, &p, path);
            let scale = m.amax();
            let asym = (&m - m.transpose()).amax();
            assert!(asym <= 1e-14 * scale, "seed {seed} n {n} {path:?}: {asym:e} vs {scale:e}");
        }
    }
}

fn weak_system(seed: u64, n: usize) -> ParticleSystem {
    let b = OrthorhombicBox::cubic(8.0).unwrap();
    let mut sites = random_sites(seed, n, &b, 1.8, None);
    for s in &mut sites {
        s.polarizability = 0.4;
    }
    ParticleSystem::from_sites(b, &sites).unwrap()
}

/// Direct solve of `(I - A T) mu = A E_perm`.
fn dense_solution(sys: &ParticleSystem, t: &NeighborTable, p: &PolarParams) -> DVector<f64> {
    let n = sys.len();
    let tm = assemble(sys, t, p, KernelPath::Scalar);
    let alpha = sys.polarizabilities();
    let e = permanent_field_scalar(sys, t, p).unwrap();
    let a = DMatrix::from_fn(3 * n, 3 * n, |r, c| if r == c { alpha[r / 3] } else { 0.0 });
    let rhs = &a * DVector::from_fn(3 * n, |r, _| e.at(r / 3)[r % 3]);
    let lhs = DMatrix::identity(3 * n, 3 * n) - &a * tm;
    lhs.lu().solve(&rhs).unwrap()
}

#[test]
fn jacobi_matches_dense_solve() {
    for (seed, n) in [(1u64, 2usize), (2, 2), (3, 5), (4, 5), (5, 5)] {
        let sys = weak_system(seed, n);
        let t = table(&sys, 3.9);
        let p = PolarParams::new(3.9);
        let want = dense_solution(&sys, &t, &p);
        let scale = want.amax().max(1.0);
        for path in [KernelPath::Scalar, KernelPath::Vectorized] {
            let st = jacobi_polarization_solve_with(&sys, &t, &p, 1e-13, 500, path, LaneConfig::default()).unwrap();
            for i in 0..n {
                let m = st.mu.at(i);
                for a in 0..3 {
                    assert!((m[a] - want[3 * i + a]).abs() <= 1e-8 * scale, "seed {seed} {path:?}");
                }
            }
        }
    }
}

#[test]
fn jacobi_fixed_point_holds() {
    let tol = 1e-9;
    for seed in 0..5 {
        let sys = weak_system(seed + 20, 12);
        let t = table(&sys, 3.9);
        let p = PolarParams::new(3.9);
        let st = jacobi_polarization_solve(&sys, &t, &p, tol, 1000).unwrap();
        assert!(st.residual <= tol && st.iterations >= 1);
        let lanes = LaneConfig::default();
        let e = permanent_field(KernelPath::Vectorized, &sys, &t, &p, lanes).unwrap();
        let tm = dipole_field_matvec(KernelPath::Vectorized, &sys, &t, &p, &st.mu, lanes).unwrap();
        let alpha = sys.polarizabilities();
        for i in 0..sys.len() {
            let (ep, ei, m) = (e.at(i), tm.at(i), st.mu.at(i));
            for a in 0..3 {
                assert!((alpha[i] * (ep[a] + ei[a]) - m[a]).abs() <= tol);
            }
        }
    }
}

#[test]
fn jacobi_trivial_cases() {
    let b = OrthorhombicBox::cubic(20.0).unwrap();
    let p = PolarParams::new(4.0);
    // No charges: zero field, zero dipoles after one update.
    let sys = random_system(3, 10, 8.0, 1.5);
    let mut neutral = sys.clone();
    neutral.charges_mut().fill(0.0);
    let t = table(&neutral, 3.9);
    let st = jacobi_polarization_solve(&neutral, &t, &PolarParams::new(3.9), 1e-12, 10).unwrap();
    assert_eq!(st.iterations, 1);
    assert!(field_cols(&st.mu).iter().all(|c| c.iter().all(|&v| v == 0.0)));
    // Uncoupled sites: mu = alpha E_perm exactly.
    let sites = [
        Site { charge: 1.0, polarizability: 0.7, ..Site::at(1.0, 1.0, 1.0) },
        Site { charge: -1.0, polarizability: 1.3, ..Site::at(11.0, 11.0, 11.0) },
    ];
    let sys = ParticleSystem::from_sites(b, &sites).unwrap();
    let t = table(&sys, 4.0);
    let e = permanent_field_scalar(&sys, &t, &p).unwrap();
    let st = jacobi_polarization_solve(&sys, &t, &p, 1e-12, 10).unwrap();
    for i in 0..2 {
        let want = e.at(i).map(|v| sys.polarizabilities()[i] * v);
        assert_eq!(st.mu.at(i), want);
    }
}

#[test]
fn jacobi_reports_divergence() {
    let b = OrthorhombicBox::cubic(10.0).unwrap();
    let sites = [
        Site { charge: 1.0, polarizability: 8.0, ..Site::at(1.0, 1.0, 1.0) },
        Site { charge: -1.0, polarizability: 8.0, ..Site::at(2.2, 1.0, 1.0) },
        Site { charge: 0.5, polarizability: 8.0, ..Site::at(1.0, 2.2, 1.0) },
    ];
    let sys = ParticleSystem::from_sites(b, &sites).unwrap();
    let t = table(&sys, 3.0);
    match jacobi_polarization_solve(&sys, &t, &PolarParams::undamped(3.0), 1e-10, 25) {
        Err(Error::NotConverged { iterations, residual }) => {
            assert_eq!(iterations, 25);
            assert!(residual > 1e-10);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
    assert!(jacobi_polarization_solve(&sys, &t, &PolarParams::new(3.0), 0.0, 5).is_err());
    assert!(jacobi_polarization_solve(&sys, &t, &PolarParams::new(3.0), 1e-6, 0).is_err());
}

proptest::proptest! {
    #[test]
    fn thole_factors_are_ordered(r in 0.0f64..50.0, ai in 0.01f64..5.0, aj in 0.01f64..5.0, a in 0.0f64..2.0) {
        let (l3, l5) = thole_factors(r, ai, aj, a).unwrap();
        proptest::prop_assert!((0.0..=1.0).contains(&l3));
        proptest::prop_assert!((0.0..=1.0).contains(&l5));
        proptest::prop_assert!(l5 <= l3);
    }
}
