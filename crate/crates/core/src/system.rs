//! Particle data in padded structure-of-arrays form.

use crate::error::{Error, Result};
use crate::layout::{pad_to, PaddedRealArray};
use crate::pbc::OrthorhombicBox;

/// Everything known about one site, used to build a [`ParticleSystem`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub pos: [f64; 3],
    pub charge: f64,
    /// Dipole used as the input vector of the field matrix-vector product.
    pub dipole: [f64; 3],
    pub polarizability: f64,
    pub lj_sigma: f64,
    pub lj_epsilon: f64,
    pub hal_r0: f64,
    pub hal_epsilon: f64,
}

impl Default for Site {
    fn default() -> Self {
        Self {
            pos: [0.0; 3],
            charge: 0.0,
            dipole: [0.0; 3],
            polarizability: 1.0,
            lj_sigma: 1.0,
            lj_epsilon: 1.0,
            hal_r0: 1.0,
            hal_epsilon: 1.0,
        }
    }
}

impl Site {
    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Self {
            pos: [x, y, z],
            ..Self::default()
        }
    }
}

/// Per-site arrays, each padded to the real lane and 64-byte aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    pub(crate) sim_box: OrthorhombicBox,
    pub(crate) x: PaddedRealArray,
    pub(crate) y: PaddedRealArray,
    pub(crate) z: PaddedRealArray,
    pub(crate) charge: PaddedRealArray,
    pub(crate) mux: PaddedRealArray,
    pub(crate) muy: PaddedRealArray,
    pub(crate) muz: PaddedRealArray,
    pub(crate) polarizability: PaddedRealArray,
    pub(crate) lj_sigma: PaddedRealArray,
    pub(crate) lj_epsilon: PaddedRealArray,
    pub(crate) hal_r0: PaddedRealArray,
    pub(crate) hal_epsilon: PaddedRealArray,
}

impl ParticleSystem {
    pub fn from_sites(sim_box: OrthorhombicBox, sites: &[Site]) -> Result<Self> {
        Self::from_sites_padded(sim_box, sites, 0)
    }

    /// Like [`ParticleSystem::from_sites`] with `extra` additional padded slots
    /// (rounded up to a multiple of 8) beyond the minimum.
    pub fn from_sites_padded(sim_box: OrthorhombicBox, sites: &[Site], extra: usize) -> Result<Self> {
        for (i, s) in sites.iter().enumerate() {
            let vals = [
                s.pos[0],
                s.pos[1],
                s.pos[2],
                s.charge,
                s.dipole[0],
                s.dipole[1],
                s.dipole[2],
                s.polarizability,
                s.lj_sigma,
                s.lj_epsilon,
                s.hal_r0,
                s.hal_epsilon,
            ];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("site {i} has a non-finite field")));
            }
            if s.polarizability < 0.0 || s.lj_epsilon < 0.0 || s.hal_epsilon < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "site {i}: polarizability and well depths must be nonnegative"
                )));
            }
            if s.lj_sigma <= 0.0 || s.hal_r0 <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "site {i}: sigma and r0 must be positive"
                )));
            }
        }
        let padded = pad_to(sites.len(), 8) + pad_to(extra, 8);
        let col = |f: &dyn Fn(&Site) -> f64| -> Result<PaddedRealArray> {
            let v: Vec<f64> = sites.iter().map(f).collect();
            PaddedRealArray::from_slice_padded(&v, padded)
        };
        Ok(Self {
            sim_box,
            x: col(&|s| s.pos[0])?,
            y: col(&|s| s.pos[1])?,
            z: col(&|s| s.pos[2])?,
            charge: col(&|s| s.charge)?,
            mux: col(&|s| s.dipole[0])?,
            muy: col(&|s| s.dipole[1])?,
            muz: col(&|s| s.dipole[2])?,
            polarizability: col(&|s| s.polarizability)?,
            lj_sigma: col(&|s| s.lj_sigma)?,
            lj_epsilon: col(&|s| s.lj_epsilon)?,
            hal_r0: col(&|s| s.hal_r0)?,
            hal_epsilon: col(&|s| s.hal_epsilon)?,
        })
    }

    pub fn len(&self) -> usize {
        self.x.logical_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn padded_len(&self) -> usize {
        self.x.padded_len()
    }

    pub fn sim_box(&self) -> &OrthorhombicBox {
        &self.sim_box
    }

    pub fn site(&self, i: usize) -> Site {
        Site {
            pos: [self.x.logical()[i], self.y.logical()[i], self.z.logical()[i]],
            charge: self.charge.logical()[i],
            dipole: [
                self.mux.logical()[i],
                self.muy.logical()[i],
                self.muz.logical()[i],
            ],
            polarizability: self.polarizability.logical()[i],
            lj_sigma: self.lj_sigma.logical()[i],
            lj_epsilon: self.lj_epsilon.logical()[i],
            hal_r0: self.hal_r0.logical()[i],
            hal_epsilon: self.hal_epsilon.logical()[i],
        }
    }

    pub fn sites(&self) -> Vec<Site> {
        (0..self.len()).map(|i| self.site(i)).collect()
    }

    pub fn positions(&self) -> [&[f64]; 3] {
        [self.x.logical(), self.y.logical(), self.z.logical()]
    }

    pub fn position(&self, i: usize) -> [f64; 3] {
        [self.x.logical()[i], self.y.logical()[i], self.z.logical()[i]]
    }

    /// Moves site `i`. Positions must stay finite.
    pub fn set_position(&mut self, i: usize, p: [f64; 3]) -> Result<()> {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite position {p:?}")));
        }
        self.x.logical_mut()[i] = p[0];
        self.y.logical_mut()[i] = p[1];
        self.z.logical_mut()[i] = p[2];
        Ok(())
    }

    pub fn charges(&self) -> &[f64] {
        self.charge.logical()
    }

    pub fn charges_mut(&mut self) -> &mut [f64] {
        self.charge.logical_mut()
    }

    pub fn dipoles(&self) -> [&[f64]; 3] {
        [self.mux.logical(), self.muy.logical(), self.muz.logical()]
    }

    pub fn polarizabilities(&self) -> &[f64] {
        self.polarizability.logical()
    }

    /// Folds every position into `[0, L)` along each axis.
    pub fn wrap_positions(&mut self) {
        let [lx, ly, lz] = self.sim_box.lengths();
        for (arr, l) in [(&mut self.x, lx), (&mut self.y, ly), (&mut self.z, lz)] {
            for v in arr.logical_mut() {
                let mut w = *v - l * (*v / l).floor();
                if w >= l {
                    w -= l;
                }
                *v = w;
            }
        }
    }

    /// Replaces the dipole columns (logical region only).
    pub fn set_dipoles(&mut self, mu: [&[f64]; 3]) -> Result<()> {
        let n = self.len();
        if mu.iter().any(|c| c.len() != n) {
            return Err(crate::error::contract("dipole columns must match the site count"));
        }
        if mu.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput("non-finite dipole".into()));
        }
        self.mux.logical_mut().copy_from_slice(mu[0]);
        self.muy.logical_mut().copy_from_slice(mu[1]);
        self.muz.logical_mut().copy_from_slice(mu[2]);
        Ok(())
    }
}

/// Forces (SoA, padded) and the total energy of one kernel evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceAccumulator {
    pub fx: PaddedRealArray,
    pub fy: PaddedRealArray,
    pub fz: PaddedRealArray,
    pub energy: f64,
}

impl ForceAccumulator {
    pub fn zeros(n: usize, padded_len: usize) -> Result<Self> {
        Ok(Self {
            fx: PaddedRealArray::with_padded_len(n, padded_len)?,
            fy: PaddedRealArray::with_padded_len(n, padded_len)?,
            fz: PaddedRealArray::with_padded_len(n, padded_len)?,
            energy: 0.0,
        })
    }

    pub fn for_system(system: &ParticleSystem) -> Result<Self> {
        Self::zeros(system.len(), system.padded_len())
    }

    pub fn len(&self) -> usize {
        self.fx.logical_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn force(&self, i: usize) -> [f64; 3] {
        [self.fx.logical()[i], self.fy.logical()[i], self.fz.logical()[i]]
    }
}

/// A per-site vector field (SoA, padded).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: PaddedRealArray,
    pub y: PaddedRealArray,
    pub z: PaddedRealArray,
}

impl VectorField {
    pub fn zeros(n: usize, padded_len: usize) -> Result<Self> {
        Ok(Self {
            x: PaddedRealArray::with_padded_len(n, padded_len)?,
            y: PaddedRealArray::with_padded_len(n, padded_len)?,
            z: PaddedRealArray::with_padded_len(n, padded_len)?,
        })
    }

    pub fn for_system(system: &ParticleSystem) -> Result<Self> {
        Self::zeros(system.len(), system.padded_len())
    }

    pub fn from_columns(cols: [&[f64]; 3], padded_len: usize) -> Result<Self> {
        Ok(Self {
            x: PaddedRealArray::from_slice_padded(cols[0], padded_len)?,
            y: PaddedRealArray::from_slice_padded(cols[1], padded_len)?,
            z: PaddedRealArray::from_slice_padded(cols[2], padded_len)?,
        })
    }

    /// The system's own dipole columns.
    pub fn dipoles_of(system: &ParticleSystem) -> Result<Self> {
        Self::from_columns(system.dipoles(), system.padded_len())
    }

    pub fn columns(&self) -> [&[f64]; 3] {
        [self.x.logical(), self.y.logical(), self.z.logical()]
    }

    pub fn len(&self) -> usize {
        self.x.logical_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, i: usize) -> [f64; 3] {
        [self.x.logical()[i], self.y.logical()[i], self.z.logical()[i]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_and_alignment() {
        let b = OrthorhombicBox::cubic(10.0).unwrap();
        let sys = ParticleSystem::from_sites(b, &[Site::at(1.0, 2.0, 3.0); 3]).unwrap();
        assert_eq!(sys.len(), 3);
        assert_eq!(sys.padded_len(), 8);
        assert_eq!(sys.x.as_ptr() as usize % 64, 0);
        let sys = ParticleSystem::from_sites_padded(b, &[Site::at(1.0, 2.0, 3.0); 3], 5).unwrap();
        assert_eq!(sys.padded_len(), 16);
    }

    #[test]
    fn rejects_bad_sites() {
        let b = OrthorhombicBox::cubic(10.0).unwrap();
        let mut s = Site::at(f64::NAN, 0.0, 0.0);
        assert!(ParticleSystem::from_sites(b, &[s]).is_err());
        s = Site::at(0.0, 0.0, 0.0);
        s.lj_sigma = 0.0;
        assert!(ParticleSystem::from_sites(b, &[s]).is_err());
        s.lj_sigma = 1.0;
        s.polarizability = -1.0;
        assert!(ParticleSystem::from_sites(b, &[s]).is_err());
    }

    #[test]
    fn wrap_positions_into_box() {
        let b = OrthorhombicBox::cubic(10.0).unwrap();
        let mut sys =
            ParticleSystem::from_sites(b, &[Site::at(-1.0, 10.0, 25.5), Site::at(-1e-17, 0.0, 0.0)])
                .unwrap();
        sys.wrap_positions();
        assert_eq!(sys.position(0), [9.0, 0.0, 5.5]);
        let p = sys.position(1);
        assert!(p[0] >= 0.0 && p[0] < 10.0);
    }
}
