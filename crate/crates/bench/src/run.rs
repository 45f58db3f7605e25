//! Runs each requested kernel through both paths, checks that they agree,
//! and times them.

use std::hint::black_box;

use serde::{Deserialize, Serialize};
use vecmd::{
    build_cell_grid, build_neighbor_table, build_neighbor_table_scalar, dipole_field_matvec,
    ewald_real_forces, halgren_forces, lj_forces, minimum_image_batch, minimum_image_scalar,
    permanent_field, EwaldRealParams, ForceAccumulator, HalgrenParams, KernelPath, LaneConfig,
    LjParams, NeighborTable, PaddedRealArray, ParticleSystem, PolarParams, VectorField,
};

use crate::config::{BenchConfig, KernelKind, SystemKind};
use crate::error::{BenchError, Result};
use crate::generate::generate_with_seed;
use crate::timing::{measure, Timer, WallClock};

/// Relative energy tolerance between paths.
pub const ENERGY_TOL: f64 = 1e-10;
/// Normwise relative tolerance on forces.
pub const FORCE_TOL: f64 = 1e-9;
/// Normwise relative tolerance on fields and displacements.
pub const FIELD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "FAILED")]
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Failed => "FAILED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub kernel: KernelKind,
    pub shard: usize,
    pub n_sites: usize,
    pub t_scalar_s: Option<f64>,
    pub t_vec_s: Option<f64>,
    /// `t_scalar_s / t_vec_s`.
    pub boost: Option<f64>,
    pub max_energy_rel: Option<f64>,
    /// Forces for the pair kernels, fields for `tmatxb` and `perm_field`,
    /// displacements for `image`, the mismatched pair fraction for
    /// `neighbor_build`.
    pub max_force_rel: Option<f64>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub environment: String,
    pub system_kind: SystemKind,
    pub n_sites: usize,
    pub seed: u64,
    pub repeats: usize,
    pub warmup: usize,
    pub real_lane: usize,
    pub rows: Vec<KernelRow>,
    pub notes: Vec<String>,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status == Status::Ok)
    }
}

/// Knobs that are not part of the benchmark configuration itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Verification only.
    pub skip_timing: bool,
    /// Test hook: perturb the vectorized output of this kernel before it is
    /// compared.
    pub inject_mismatch: Option<KernelKind>,
}

/// Describes the vector hardware the process runs on.
pub fn environment(lanes: LaneConfig) -> String {
    let mut features: Vec<&str> = Vec::new();
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            features.push("avx512f");
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            features.push("avx2");
        }
        if std::arch::is_x86_feature_detected!("fma") {
            features.push("fma");
        }
        if std::arch::is_x86_feature_detected!("sse2") {
            features.push("sse2");
        }
    }
    #[cfg(target_arch = "aarch64")]
    features.push("neon");
    format!(
        "{} {}; f64 lanes {}, u32 lanes {}; vector features: {}",
        std::env::consts::ARCH,
        std::env::consts::OS,
        lanes.real_lane(),
        lanes.int_lane(),
        if features.is_empty() { "none".into() } else { features.join(",") }
    )
}

/// Widest vector register in f64 lanes detected at run time.
pub fn hardware_f64_lanes() -> usize {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            return 8;
        }
        if std::arch::is_x86_feature_detected!("avx") {
            return 4;
        }
        if std::arch::is_x86_feature_detected!("sse2") {
            return 2;
        }
    }
    #[cfg(target_arch = "aarch64")]
    {
        return 2;
    }
    #[allow(unreachable_code)]
    1
}

/// Everything a kernel call needs, built once per system.
pub struct Workload {
    pub system: ParticleSystem,
    pub table: NeighborTable,
    pub lanes: LaneConfig,
    lj: LjParams,
    ewald: EwaldRealParams,
    halgren: HalgrenParams,
    polar: PolarParams,
    mu: VectorField,
    list_cutoff: f64,
    raw: [Vec<f64>; 3],
}

enum Output {
    Forces(ForceAccumulator),
    Field(VectorField),
    Image([PaddedRealArray; 3]),
    Table(NeighborTable),
}

impl Workload {
    pub fn new(config: &BenchConfig, system: ParticleSystem, with_image: bool) -> Result<Self> {
        let list_cutoff = config.list_cutoff();
        let grid = build_cell_grid(&system, list_cutoff)?;
        let table = build_neighbor_table(&system, &grid, list_cutoff)?;
        let mut raw = [Vec::new(), Vec::new(), Vec::new()];
        if with_image {
            let [x, y, z] = system.positions();
            for i in 0..system.len() {
                for &j in table.site(i).logical() {
                    let j = j as usize;
                    raw[0].push(x[i] - x[j]);
                    raw[1].push(y[i] - y[j]);
                    raw[2].push(z[i] - z[j]);
                }
            }
        }
        let cutoff = config.cutoff;
        let mu = VectorField::dipoles_of(&system)?;
        Ok(Self {
            lanes: config.lane_config()?,
            lj: LjParams { cutoff, shift: config.lj_shift },
            ewald: EwaldRealParams { alpha: config.ewald_alpha, cutoff },
            halgren: HalgrenParams {
                cutoff,
                delta: config.halgren_delta,
                gamma: config.halgren_gamma,
            },
            polar: PolarParams {
                cutoff,
                thole_a: config.thole_a,
                damping: true,
            },
            mu,
            list_cutoff,
            raw,
            system,
            table,
        })
    }

    fn eval(&self, kind: KernelKind, path: KernelPath) -> Result<Output> {
        let (s, t, l) = (&self.system, &self.table, self.lanes);
        Ok(match kind {
            KernelKind::Lj => Output::Forces(lj_forces(path, s, t, &self.lj, l)?),
            KernelKind::EwaldReal => Output::Forces(ewald_real_forces(path, s, t, &self.ewald, l)?),
            KernelKind::Halgren => Output::Forces(halgren_forces(path, s, t, &self.halgren, l)?),
            KernelKind::Tmatxb => Output::Field(dipole_field_matvec(path, s, t, &self.polar, &self.mu, l)?),
            KernelKind::PermField => Output::Field(permanent_field(path, s, t, &self.polar, l)?),
            KernelKind::Image => Output::Image(self.image(path)?),
            KernelKind::NeighborBuild => {
                let grid = build_cell_grid(s, self.list_cutoff)?;
                Output::Table(match path {
                    KernelPath::Scalar => build_neighbor_table_scalar(s, &grid, self.list_cutoff)?,
                    KernelPath::Vectorized => build_neighbor_table(s, &grid, self.list_cutoff)?,
                })
            }
        })
    }

    /// Minimum image over the flat pair displacement arrays. Both paths
    /// allocate their output and read the same input.
    fn image(&self, path: KernelPath) -> Result<[PaddedRealArray; 3]> {
        let b = self.system.sim_box();
        let lane = self.lanes.real_lane();
        let n = self.raw[0].len();
        let mut out = [
            PaddedRealArray::zeros(n, lane)?,
            PaddedRealArray::zeros(n, lane)?,
            PaddedRealArray::zeros(n, lane)?,
        ];
        let [rx, ry, rz] = &self.raw;
        let [ox, oy, oz] = &mut out;
        match path {
            KernelPath::Scalar => {
                let (ox, oy, oz) = (ox.logical_mut(), oy.logical_mut(), oz.logical_mut());
                for k in 0..n {
                    let d = minimum_image_scalar([rx[k], ry[k], rz[k]], b)?;
                    ox[k] = d[0];
                    oy[k] = d[1];
                    oz[k] = d[2];
                }
            }
            KernelPath::Vectorized => {
                ox.logical_mut().copy_from_slice(rx);
                oy.logical_mut().copy_from_slice(ry);
                oz.logical_mut().copy_from_slice(rz);
                minimum_image_batch(ox, oy, oz, b)?;
            }
        }
        Ok(out)
    }
}

fn normwise(a: [&[f64]; 3], b: [&[f64]; 3]) -> f64 {
    let mut d = 0.0f64;
    let mut s = 0.0f64;
    for k in 0..3 {
        for (x, y) in a[k].iter().zip(b[k]) {
            d = d.max((x - y).abs());
            s = s.max(y.abs());
        }
    }
    if d == 0.0 {
        0.0
    } else {
        d / s
    }
}

fn perturb(out: &mut Output) {
    match out {
        Output::Forces(f) => {
            f.energy = f.energy * 1.01 + 1.0;
            if let Some(v) = f.fx.logical_mut().first_mut() {
                *v += 1.0;
            }
        }
        Output::Field(e) => {
            if let Some(v) = e.x.logical_mut().first_mut() {
                *v += 1.0;
            }
        }
        Output::Image(d) => {
            if let Some(v) = d[0].logical_mut().first_mut() {
                *v += 0.5;
            }
        }
        Output::Table(_) => {}
    }
}

/// `(max_energy_rel, max_force_rel, ok)` between the two outputs.
fn compare(reference: &Output, candidate: &Output, drop_pair: bool) -> (Option<f64>, f64, bool) {
    match (reference, candidate) {
        (Output::Forces(a), Output::Forces(b)) => {
            let de = (b.energy - a.energy).abs();
            let e_rel = if de == 0.0 { 0.0 } else { de / a.energy.abs() };
            let e_ok = de <= ENERGY_TOL * a.energy.abs() + 1e-14;
            let f_rel = normwise(
                [b.fx.logical(), b.fy.logical(), b.fz.logical()],
                [a.fx.logical(), a.fy.logical(), a.fz.logical()],
            );
            (Some(e_rel), f_rel, e_ok && f_rel <= FORCE_TOL)
        }
        (Output::Field(a), Output::Field(b)) => {
            let r = normwise(
                [b.x.logical(), b.y.logical(), b.z.logical()],
                [a.x.logical(), a.y.logical(), a.z.logical()],
            );
            (None, r, r <= FIELD_TOL)
        }
        (Output::Image(a), Output::Image(b)) => {
            let r = normwise(
                [b[0].logical(), b[1].logical(), b[2].logical()],
                [a[0].logical(), a[1].logical(), a[2].logical()],
            );
            (None, r, r <= FIELD_TOL)
        }
        (Output::Table(a), Output::Table(b)) => {
            let pa = a.pairs();
            let mut pb = b.pairs();
            if drop_pair {
                pb.pop();
            }
            let (mut i, mut j, mut common) = (0, 0, 0usize);
            while i < pa.len() && j < pb.len() {
                match pa[i].cmp(&pb[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        common += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
            let mismatched = pa.len() + pb.len() - 2 * common;
            let r = mismatched as f64 / pa.len().max(1) as f64;
            (None, r, mismatched == 0)
        }
        _ => unreachable!("kernel outputs of different kinds"),
    }
}

/// Verifies and times one kernel on a prepared workload.
pub fn run_kernel(
    config: &BenchConfig,
    work: &Workload,
    kind: KernelKind,
    shard: usize,
    timer: &mut dyn Timer,
    options: RunOptions,
) -> Result<KernelRow> {
    let mut row = KernelRow {
        kernel: kind,
        shard,
        n_sites: work.system.len(),
        t_scalar_s: None,
        t_vec_s: None,
        boost: None,
        max_energy_rel: None,
        max_force_rel: None,
        status: Status::Ok,
    };
    if !config.scalar_only {
        let reference = work.eval(kind, KernelPath::Scalar)?;
        let mut candidate = work.eval(kind, KernelPath::Vectorized)?;
        let inject = options.inject_mismatch == Some(kind);
        if inject {
            perturb(&mut candidate);
        }
        let (e, f, ok) = compare(&reference, &candidate, inject);
        row.max_energy_rel = e;
        row.max_force_rel = Some(f);
        if !ok {
            row.status = Status::Failed;
        }
    }
    if !options.skip_timing {
        let mut failure = None;
        let mut call = |path: KernelPath| {
            let mut f = || match work.eval(kind, path) {
                Ok(out) => {
                    black_box(out);
                }
                Err(e) => failure = Some(e),
            };
            measure(timer, config.warmup, config.repeats, &mut f)
        };
        let ts = call(KernelPath::Scalar)?;
        row.t_scalar_s = Some(ts.trimmed_mean);
        if !config.scalar_only {
            let tv = call(KernelPath::Vectorized)?;
            row.t_vec_s = Some(tv.trimmed_mean);
            row.boost = Some(ts.trimmed_mean / tv.trimmed_mean);
        }
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(row)
}

fn run_shard<T: Timer>(
    config: &BenchConfig,
    shard: usize,
    timer: &mut T,
    options: RunOptions,
) -> Result<Vec<KernelRow>> {
    let system = generate_with_seed(config, config.seed.wrapping_add(shard as u64))?;
    let work = Workload::new(config, system, config.kernels.contains(&KernelKind::Image))?;
    config
        .kernels
        .iter()
        .map(|&k| run_kernel(config, &work, k, shard, timer, options))
        .collect()
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    run_bench_with(config, WallClock, RunOptions::default())
}

/// Runs every shard (each on its own thread when there is more than one)
/// with a clone of `timer`.
pub fn run_bench_with<T: Timer + Clone + Send>(
    config: &BenchConfig,
    timer: T,
    options: RunOptions,
) -> Result<BenchReport> {
    config.validate()?;
    let lanes = config.lane_config()?;
    let rows = if config.shards == 1 {
        run_shard(config, 0, &mut timer.clone(), options)?
    } else {
        let results: Vec<Result<Vec<KernelRow>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..config.shards)
                .map(|s| {
                    let mut t = timer.clone();
                    scope.spawn(move || run_shard(config, s, &mut t, options))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(BenchError::Config("shard thread panicked".into()))))
                .collect()
        });
        let mut rows = Vec::new();
        for r in results {
            rows.extend(r?);
        }
        rows
    };
    Ok(BenchReport {
        environment: environment(lanes),
        system_kind: config.system_kind,
        n_sites: config.n_sites,
        seed: config.seed,
        repeats: config.repeats,
        warmup: config.warmup,
        real_lane: lanes.real_lane(),
        rows,
        notes: vec![
            "times are wall-clock seconds per call, trimmed mean over repeats (fastest and slowest dropped)".into(),
            "boost = t_scalar_s / t_vec_s".into(),
            "no integrator is run, so ns/day is not reported".into(),
        ],
    })
}
