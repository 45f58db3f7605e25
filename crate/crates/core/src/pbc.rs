//! Orthorhombic periodic boundaries and the minimum-image convention.
//!
//! Components are mapped into the half-open interval `[-L/2, L/2)`.

use crate::error::{contract, Error, Result};
use crate::layout::PaddedRealArray;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthorhombicBox {
    lx: f64,
    ly: f64,
    lz: f64,
}

impl OrthorhombicBox {
    pub fn new(lx: f64, ly: f64, lz: f64) -> Result<Self> {
        for (name, l) in [("lx", lx), ("ly", ly), ("lz", lz)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "box edge {name} must be finite and positive, got {l}"
                )));
            }
        }
        Ok(Self { lx, ly, lz })
    }

    pub fn cubic(l: f64) -> Result<Self> {
        Self::new(l, l, l)
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.lx, self.ly, self.lz]
    }

    pub fn min_edge(&self) -> f64 {
        self.lx.min(self.ly).min(self.lz)
    }

    pub fn volume(&self) -> f64 {
        self.lx * self.ly * self.lz
    }

    /// Fails unless `cutoff` is positive and at most half the shortest edge.
    pub fn check_cutoff(&self, cutoff: f64) -> Result<()> {
        let half_edge = 0.5 * self.min_edge();
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::InvalidInput(format!("cutoff must be positive, got {cutoff}")));
        }
        if cutoff > half_edge {
            return Err(Error::CutoffTooLarge { cutoff, half_edge });
        }
        Ok(())
    }
}

/// Maps one displacement component into `[-l/2, l/2)`.
///
/// Round-to-nearest-even keeps this a multiply, a round and two selects, so
/// the batched loop vectorizes; the two corrections pin the half-edge ties
/// and the rare rounding overshoot to the lower bound.
#[inline(always)]
pub(crate) fn wrap(d: f64, l: f64, inv_l: f64) -> f64 {
    let half = 0.5 * l;
    let mut r = d - l * (d * inv_l).round_ties_even();
    r += if r < -half { l } else { 0.0 };
    r -= if r >= half { l } else { 0.0 };
    r
}

/// Minimum-image displacement. Rejects non-finite components.
pub fn minimum_image_scalar(d: [f64; 3], b: &OrthorhombicBox) -> Result<[f64; 3]> {
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite displacement {d:?}")));
    }
    let [lx, ly, lz] = b.lengths();
    Ok([
        wrap(d[0], lx, 1.0 / lx),
        wrap(d[1], ly, 1.0 / ly),
        wrap(d[2], lz, 1.0 / lz),
    ])
}

/// In-place batched minimum image over equal-length slices.
pub(crate) fn wrap_slices(dx: &mut [f64], dy: &mut [f64], dz: &mut [f64], b: &OrthorhombicBox) {
    let [lx, ly, lz] = b.lengths();
    wrap_slice(dx, lx);
    wrap_slice(dy, ly);
    wrap_slice(dz, lz);
}

#[inline]
fn wrap_slice(d: &mut [f64], l: f64) {
    let inv = 1.0 / l;
    for v in d.iter_mut() {
        *v = wrap(*v, l, inv);
    }
}

/// Minimum image over three parallel padded arrays, in place. Padded slots
/// are processed too and stay finite.
pub fn minimum_image_batch(
    dxs: &mut PaddedRealArray,
    dys: &mut PaddedRealArray,
    dzs: &mut PaddedRealArray,
    b: &OrthorhombicBox,
) -> Result<()> {
    let n = dxs.logical_len();
    let p = dxs.padded_len();
    if dys.logical_len() != n
        || dzs.logical_len() != n
        || dys.padded_len() != p
        || dzs.padded_len() != p
    {
        return Err(contract("displacement arrays have different lengths"));
    }
    wrap_slices(dxs.padded_mut(), dys.padded_mut(), dzs.padded_mut(), b);
    Ok(())
}
