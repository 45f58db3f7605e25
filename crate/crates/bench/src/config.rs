//! Benchmark configuration, read from a JSON document.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use vecmd::{LaneConfig, OrthorhombicBox};

use crate::error::{BenchError, Result};

/// Sites per unit volume when the box is derived from `n_sites`.
pub const DEFAULT_DENSITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    /// Jittered cubic lattice at liquid-like density.
    LatticeWater,
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Lj,
    EwaldReal,
    Halgren,
    Tmatxb,
    PermField,
    Image,
    NeighborBuild,
}

impl KernelKind {
    pub const ALL: [KernelKind; 7] = [
        KernelKind::Lj,
        KernelKind::EwaldReal,
        KernelKind::Halgren,
        KernelKind::Tmatxb,
        KernelKind::PermField,
        KernelKind::Image,
        KernelKind::NeighborBuild,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Lj => "lj",
            KernelKind::EwaldReal => "ewald_real",
            KernelKind::Halgren => "halgren",
            KernelKind::Tmatxb => "tmatxb",
            KernelKind::PermField => "perm_field",
            KernelKind::Image => "image",
            KernelKind::NeighborBuild => "neighbor_build",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown kernel '{s}'")))
    }
}

/// Parses a comma-separated kernel list such as `lj,halgren`.
pub fn parse_kernel_list(s: &str) -> Result<Vec<KernelKind>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(KernelKind::from_str)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub system_kind: SystemKind,
    pub n_sites: usize,
    /// Box edges; derived from `n_sites` at [`DEFAULT_DENSITY`] when absent.
    pub box_lengths: Option<[f64; 3]>,
    pub seed: u64,
    pub kernels: Vec<KernelKind>,
    pub repeats: usize,
    pub warmup: usize,
    /// Interaction cutoff shared by all pair kernels.
    pub cutoff: f64,
    /// Neighbor list cutoff is `cutoff + skin`.
    pub skin: f64,
    pub lj_shift: bool,
    pub ewald_alpha: f64,
    pub halgren_delta: f64,
    pub halgren_gamma: f64,
    pub thole_a: f64,
    /// Real lane override; the default is 8.
    pub lanes: Option<usize>,
    pub shards: usize,
    pub scalar_only: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            system_kind: SystemKind::LatticeWater,
            n_sites: 4096,
            box_lengths: None,
            seed: 2024,
            kernels: KernelKind::ALL.to_vec(),
            repeats: 10,
            warmup: 1,
            cutoff: 9.0,
            skin: 0.7,
            lj_shift: false,
            ewald_alpha: 0.35,
            halgren_delta: 0.07,
            halgren_gamma: 0.12,
            thole_a: 0.39,
            lanes: None,
            shards: 1,
            scalar_only: false,
        }
    }
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn sim_box(&self) -> Result<OrthorhombicBox> {
        let [lx, ly, lz] = match self.box_lengths {
            Some(l) => l,
            None => {
                let l = (self.n_sites as f64 / DEFAULT_DENSITY).cbrt();
                [l; 3]
            }
        };
        Ok(OrthorhombicBox::new(lx, ly, lz)?)
    }

    pub fn list_cutoff(&self) -> f64 {
        self.cutoff + self.skin
    }

    pub fn lane_config(&self) -> Result<LaneConfig> {
        Ok(match self.lanes {
            Some(w) => LaneConfig::new(w)?,
            None => LaneConfig::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.repeats < 3 {
            return bad(format!("repeats must be at least 3, got {}", self.repeats));
        }
        if self.n_sites < 2 {
            return bad(format!("n_sites must be at least 2, got {}", self.n_sites));
        }
        if self.kernels.is_empty() {
            return bad("no kernels selected".into());
        }
        if self.shards == 0 {
            return bad("shards must be at least 1".into());
        }
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return bad(format!("cutoff must be positive, got {}", self.cutoff));
        }
        if !(self.skin.is_finite() && self.skin >= 0.0) {
            return bad(format!("skin must be nonnegative, got {}", self.skin));
        }
        if !(self.ewald_alpha.is_finite() && self.ewald_alpha >= 0.0) {
            return bad(format!("ewald_alpha must be nonnegative, got {}", self.ewald_alpha));
        }
        if !(self.halgren_delta >= 0.0 && self.halgren_gamma >= 0.0) {
            return bad("halgren_delta and halgren_gamma must be nonnegative".into());
        }
        if !(self.thole_a.is_finite() && self.thole_a >= 0.0) {
            return bad(format!("thole_a must be nonnegative, got {}", self.thole_a));
        }
        self.lane_config()?;
        self.sim_box()?.check_cutoff(self.list_cutoff())?;
        Ok(())
    }
}
