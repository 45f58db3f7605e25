//! Padded, cache-line aligned structure-of-arrays storage and the
//! mask/compress primitives the vectorized kernels are built from.
//!
//! Every buffer starts on a 64-byte boundary and its allocation length is a
//! multiple of the lane width, so kernel loops never need a peeled head or a
//! remainder tail. Padded slots hold finite values (reals) or a valid site
//! index (indices), which lets padded lanes run through the same arithmetic
//! as real lanes; their results are discarded by multiplying with a zero
//! scale factor.

use std::fmt;

use crate::error::{contract, Result};

/// Alignment of every padded buffer, in bytes.
pub const ALIGN: usize = 64;

/// Per-site neighbor capacity. Exceeding it is an error, never a reallocation.
pub const MAXVLST: usize = 2560;

/// Real and integer lane counts. The defaults fill a 512-bit register with
/// eight `f64` or sixteen `u32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaneConfig {
    real_lane: usize,
    int_lane: usize,
}

impl LaneConfig {
    pub fn new(real_lane: usize) -> Result<Self> {
        if real_lane == 0 || !real_lane.is_power_of_two() {
            return Err(contract(format!(
                "real lane width must be a positive power of two, got {real_lane}"
            )));
        }
        if real_lane > 8 {
            return Err(contract(format!(
                "real lane width {real_lane} exceeds the 64-byte line (8 reals)"
            )));
        }
        Ok(Self {
            real_lane,
            int_lane: 2 * real_lane,
        })
    }

    pub fn real_lane(&self) -> usize {
        self.real_lane
    }

    pub fn int_lane(&self) -> usize {
        self.int_lane
    }
}

impl Default for LaneConfig {
    fn default() -> Self {
        Self {
            real_lane: 8,
            int_lane: 16,
        }
    }
}

/// Working loop count: `n` rounded up to the next multiple of `m`.
///
/// `pad_count(0, m)` is 0; callers skip empty loops themselves.
pub fn pad_count(n: usize, m: usize) -> Result<usize> {
    if m == 0 || !m.is_power_of_two() {
        return Err(contract(format!(
            "lane multiple must be a positive power of two, got {m}"
        )));
    }
    Ok(pad_to(n, m))
}

#[inline]
pub(crate) fn pad_to(n: usize, m: usize) -> usize {
    let rem = n % m;
    n + if rem == 0 { 0 } else { m - rem }
}

#[derive(Clone, Copy)]
#[repr(C, align(64))]
struct RealLine([f64; 8]);

#[derive(Clone, Copy)]
#[repr(C, align(64))]
struct IndexLine([u32; 16]);

const _: () = assert!(std::mem::size_of::<RealLine>() == ALIGN);
const _: () = assert!(std::mem::size_of::<IndexLine>() == ALIGN);

fn lines_for(len: usize, per_line: usize) -> usize {
    len.div_ceil(per_line)
}

/// Aligned `f64` buffer with a logical length and a padded length.
#[derive(Clone)]
pub struct PaddedRealArray {
    lines: Vec<RealLine>,
    logical_len: usize,
    padded_len: usize,
}

impl PaddedRealArray {
    /// Zero-filled array padded to `pad_count(logical_len, lane)`.
    pub fn zeros(logical_len: usize, lane: usize) -> Result<Self> {
        let padded = pad_count(logical_len, lane)?;
        Self::with_padded_len(logical_len, padded)
    }

    /// Zero-filled array with an explicit padded length (at least `logical_len`).
    pub fn with_padded_len(logical_len: usize, padded_len: usize) -> Result<Self> {
        if padded_len < logical_len {
            return Err(contract(format!(
                "padded length {padded_len} shorter than logical length {logical_len}"
            )));
        }
        Ok(Self {
            lines: vec![RealLine([0.0; 8]); lines_for(padded_len, 8)],
            logical_len,
            padded_len,
        })
    }

    /// Copies `values` into a new array padded to a multiple of `lane`; padded
    /// slots are 0.0. Non-finite values are rejected.
    pub fn from_slice(values: &[f64], lane: usize) -> Result<Self> {
        let mut out = Self::zeros(values.len(), lane)?;
        out.set_logical(values)?;
        Ok(out)
    }

    pub fn from_slice_padded(values: &[f64], padded_len: usize) -> Result<Self> {
        let mut out = Self::with_padded_len(values.len(), padded_len)?;
        out.set_logical(values)?;
        Ok(out)
    }

    fn set_logical(&mut self, values: &[f64]) -> Result<()> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(contract(format!("non-finite value at index {k}")));
        }
        self.padded_mut()[..values.len()].copy_from_slice(values);
        Ok(())
    }

    pub fn logical_len(&self) -> usize {
        self.logical_len
    }

    pub fn padded_len(&self) -> usize {
        self.padded_len
    }

    /// The full padded view, `padded_len` elements.
    pub fn as_slice(&self) -> &[f64] {
        // SAFETY: `RealLine` is `repr(C)` over `[f64; 8]` with no padding, the
        // vector holds at least `padded_len` elements.
        unsafe { std::slice::from_raw_parts(self.lines.as_ptr().cast::<f64>(), self.padded_len) }
    }

    pub fn logical(&self) -> &[f64] {
        &self.as_slice()[..self.logical_len]
    }

    /// Mutable logical region. Callers must keep values finite.
    pub fn logical_mut(&mut self) -> &mut [f64] {
        let n = self.logical_len;
        &mut self.padded_mut()[..n]
    }

    /// Mutable padded view. Crate code keeps padded slots finite.
    pub(crate) fn padded_mut(&mut self) -> &mut [f64] {
        // SAFETY: as in `as_slice`; exclusive borrow of `self`.
        unsafe {
            std::slice::from_raw_parts_mut(self.lines.as_mut_ptr().cast::<f64>(), self.padded_len)
        }
    }

    pub fn as_ptr(&self) -> *const f64 {
        self.lines.as_ptr().cast()
    }
}

impl fmt::Debug for PaddedRealArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PaddedRealArray")
            .field("logical", &self.logical())
            .field("padded_len", &self.padded_len)
            .finish()
    }
}

impl PartialEq for PaddedRealArray {
    fn eq(&self, other: &Self) -> bool {
        self.logical() == other.logical()
    }
}

/// Aligned `u32` index buffer. Padded slots repeat the last logical element
/// (or hold 0 when the logical region is empty), so they always name a valid
/// site.
#[derive(Clone)]
pub struct PaddedIndexArray {
    lines: Vec<IndexLine>,
    logical_len: usize,
    padded_len: usize,
}

impl PaddedIndexArray {
    pub fn from_slice(values: &[u32], lane: usize) -> Result<Self> {
        let padded = pad_count(values.len(), lane)?;
        Self::from_slice_padded(values, padded)
    }

    pub fn from_slice_padded(values: &[u32], padded_len: usize) -> Result<Self> {
        if padded_len < values.len() {
            return Err(contract(format!(
                "padded length {padded_len} shorter than logical length {}",
                values.len()
            )));
        }
        let mut out = Self {
            lines: vec![IndexLine([0; 16]); lines_for(padded_len, 16)],
            logical_len: values.len(),
            padded_len,
        };
        let buf = out.padded_mut();
        buf[..values.len()].copy_from_slice(values);
        fill_sentinel(buf, values.len());
        Ok(out)
    }

    pub fn logical_len(&self) -> usize {
        self.logical_len
    }

    pub fn padded_len(&self) -> usize {
        self.padded_len
    }

    pub fn as_slice(&self) -> &[u32] {
        // SAFETY: `IndexLine` is `repr(C)` over `[u32; 16]` with no padding.
        unsafe { std::slice::from_raw_parts(self.lines.as_ptr().cast::<u32>(), self.padded_len) }
    }

    pub fn logical(&self) -> &[u32] {
        &self.as_slice()[..self.logical_len]
    }

    pub(crate) fn padded_mut(&mut self) -> &mut [u32] {
        // SAFETY: as in `as_slice`; exclusive borrow of `self`.
        unsafe {
            std::slice::from_raw_parts_mut(self.lines.as_mut_ptr().cast::<u32>(), self.padded_len)
        }
    }

    pub fn as_ptr(&self) -> *const u32 {
        self.lines.as_ptr().cast()
    }
}

impl fmt::Debug for PaddedIndexArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PaddedIndexArray")
            .field("logical", &self.logical())
            .field("padded_len", &self.padded_len)
            .finish()
    }
}

impl PartialEq for PaddedIndexArray {
    fn eq(&self, other: &Self) -> bool {
        self.logical() == other.logical()
    }
}

/// Repeats element `len - 1` over `buf[len..]`, or writes the default when
/// `len` is zero.
pub(crate) fn fill_sentinel<T: Copy + Default>(buf: &mut [T], len: usize) {
    let s = if len == 0 { T::default() } else { buf[len - 1] };
    buf[len..].fill(s);
}

/// One byte per lane; 1 keeps the element, 0 drops it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneMask {
    bytes: Vec<u8>,
}

impl LaneMask {
    pub fn from_bools(bits: &[bool]) -> Self {
        Self {
            bytes: bits.iter().map(|&b| b as u8).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, k: usize) -> bool {
        self.bytes[k] != 0
    }

    pub fn count(&self) -> usize {
        self.bytes.iter().map(|&b| b as usize).sum()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.bytes.iter().map(|&b| b != 0).collect()
    }
}

/// Writes `mask[k] = values[k] <= threshold` for `k < logical_len` and 0 for
/// the remaining slots of `mask`. `mask.len()` must be a multiple of
/// `int_lane` and `values` must cover it.
pub fn build_mask_into(
    values: &[f64],
    logical_len: usize,
    threshold: f64,
    int_lane: usize,
    mask: &mut [u8],
) -> Result<()> {
    let count = mask.len();
    if int_lane == 0 || count % int_lane != 0 {
        return Err(contract(format!(
            "mask length {count} is not a multiple of the integer lane {int_lane}"
        )));
    }
    if values.len() < count || logical_len > count {
        return Err(contract(format!(
            "mask length {count} incompatible with {} values (logical {logical_len})",
            values.len()
        )));
    }
    mask_loop(&values[..count], logical_len, threshold, mask);
    Ok(())
}

#[inline]
pub(crate) fn mask_loop(values: &[f64], logical_len: usize, threshold: f64, mask: &mut [u8]) {
    for (k, (m, &v)) in mask.iter_mut().zip(values).enumerate() {
        *m = ((v <= threshold) & (k < logical_len)) as u8;
    }
}

/// Mask over the padded array using `count` lanes, where `count` must equal
/// `pad_count(values.logical_len(), int_lane)`.
pub fn build_mask(
    values: &PaddedRealArray,
    threshold: f64,
    count: usize,
    lanes: LaneConfig,
) -> Result<LaneMask> {
    let expected = pad_count(values.logical_len(), lanes.int_lane())?;
    if count != expected {
        return Err(contract(format!(
            "mask count {count} differs from integer loop count {expected}"
        )));
    }
    if values.padded_len() < count {
        return Err(contract(format!(
            "array padded to {} cannot cover {count} integer lanes",
            values.padded_len()
        )));
    }
    let mut bytes = vec![0u8; count];
    build_mask_into(
        values.as_slice(),
        values.logical_len(),
        threshold,
        lanes.int_lane(),
        &mut bytes,
    )?;
    Ok(LaneMask { bytes })
}

/// Order-preserving, branch-free compress of `src` under `mask` into `dst`.
/// Returns the number of kept elements. `dst` must be at least as long as
/// `src`; entries past the returned count are scratch.
pub fn compress_into<T: Copy>(src: &[T], mask: &[u8], dst: &mut [T]) -> Result<usize> {
    if src.len() != mask.len() {
        return Err(contract(format!(
            "mask length {} differs from source length {}",
            mask.len(),
            src.len()
        )));
    }
    if dst.len() < src.len() {
        return Err(contract(format!(
            "destination length {} shorter than source length {}",
            dst.len(),
            src.len()
        )));
    }
    Ok(compress_loop(src, mask, dst))
}

#[inline]
pub(crate) fn compress_loop<T: Copy>(src: &[T], mask: &[u8], dst: &mut [T]) -> usize {
    let mut kk = 0usize;
    for (&s, &m) in src.iter().zip(mask) {
        dst[kk] = s;
        kk += m as usize;
    }
    kk
}

/// Keeps the elements of `src` whose mask lane is set, in order.
pub fn compress_select(
    src: &PaddedIndexArray,
    mask: &LaneMask,
) -> Result<(PaddedIndexArray, usize)> {
    if mask.len() != src.padded_len() {
        return Err(contract(format!(
            "mask length {} differs from padded length {}",
            mask.len(),
            src.padded_len()
        )));
    }
    let int_lane = 16;
    let mut tmp = vec![0u32; src.padded_len()];
    let kept = compress_loop(src.as_slice(), mask.as_bytes(), &mut tmp);
    let packed = PaddedIndexArray::from_slice(&tmp[..kept], int_lane)?;
    Ok((packed, kept))
}

/// A borrowed column for [`compress_select_multi`].
#[derive(Debug, Clone, Copy)]
pub enum Column<'a> {
    Index(&'a PaddedIndexArray),
    Real(&'a PaddedRealArray),
}

impl Column<'_> {
    fn padded_len(&self) -> usize {
        match self {
            Column::Index(a) => a.padded_len(),
            Column::Real(a) => a.padded_len(),
        }
    }
}

/// A packed output column.
#[derive(Debug, Clone, PartialEq)]
pub enum PackedColumn {
    Index(PaddedIndexArray),
    Real(PaddedRealArray),
}

impl PackedColumn {
    pub fn as_index(&self) -> Option<&PaddedIndexArray> {
        match self {
            PackedColumn::Index(a) => Some(a),
            PackedColumn::Real(_) => None,
        }
    }

    pub fn as_real(&self) -> Option<&PaddedRealArray> {
        match self {
            PackedColumn::Real(a) => Some(a),
            PackedColumn::Index(_) => None,
        }
    }
}

/// Compresses several parallel columns under one mask in a single pass.
/// Outputs share the kept count and are padded to a multiple of 16; padded
/// slots repeat the last kept element.
pub fn compress_select_multi(
    srcs: &[Column<'_>],
    mask: &LaneMask,
) -> Result<(Vec<PackedColumn>, usize)> {
    let n = mask.len();
    if let Some(bad) = srcs.iter().find(|c| c.padded_len() != n) {
        return Err(contract(format!(
            "ragged inputs: column padded to {} but mask has {n} lanes",
            bad.padded_len()
        )));
    }
    let m = mask.as_bytes();
    let mut idx_tmp: Vec<Vec<u32>> = Vec::new();
    let mut real_tmp: Vec<Vec<f64>> = Vec::new();
    for c in srcs {
        match c {
            Column::Index(_) => idx_tmp.push(vec![0; n]),
            Column::Real(_) => real_tmp.push(vec![0.0; n]),
        }
    }
    // One loop over the lanes writing every column, as a fused pack.
    let mut kk = 0usize;
    for k in 0..n {
        let (mut ii, mut ri) = (0, 0);
        for c in srcs {
            match c {
                Column::Index(a) => {
                    idx_tmp[ii][kk] = a.as_slice()[k];
                    ii += 1;
                }
                Column::Real(a) => {
                    real_tmp[ri][kk] = a.as_slice()[k];
                    ri += 1;
                }
            }
        }
        kk += m[k] as usize;
    }
    let padded = pad_to(kk, 16);
    let (mut ii, mut ri) = (0, 0);
    let mut out = Vec::with_capacity(srcs.len());
    for c in srcs {
        match c {
            Column::Index(_) => {
                out.push(PackedColumn::Index(PaddedIndexArray::from_slice_padded(
                    &idx_tmp[ii][..kk],
                    padded,
                )?));
                ii += 1;
            }
            Column::Real(_) => {
                let mut a = PaddedRealArray::from_slice_padded(&real_tmp[ri][..kk], padded)?;
                let buf = a.padded_mut();
                fill_sentinel(buf, kk);
                out.push(PackedColumn::Real(a));
                ri += 1;
            }
        }
    }
    Ok((out, kk))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pad_count_examples() {
        assert_eq!(pad_count(16, 8).unwrap(), 16);
        assert_eq!(pad_count(17, 8).unwrap(), 24);
        assert_eq!(pad_count(0, 16).unwrap(), 0);
        assert_eq!(pad_count(2559, 16).unwrap(), MAXVLST);
    }

    #[test]
    fn pad_count_rejects_bad_multiples() {
        assert!(pad_count(5, 0).is_err());
        assert!(pad_count(5, 6).is_err());
    }

    #[test]
    fn lane_config() {
        let l = LaneConfig::default();
        assert_eq!((l.real_lane(), l.int_lane()), (8, 16));
        assert_eq!(LaneConfig::new(4).unwrap().int_lane(), 8);
        assert!(LaneConfig::new(3).is_err());
        assert!(LaneConfig::new(0).is_err());
    }

    #[test]
    fn arrays_are_aligned_and_zero_padded() {
        for n in [0, 1, 7, 8, 9, 100] {
            let a = PaddedRealArray::from_slice(&vec![1.5; n], 8).unwrap();
            assert_eq!(a.as_ptr() as usize % ALIGN, 0);
            assert_eq!(a.padded_len(), pad_count(n, 8).unwrap());
            assert!(a.as_slice()[n..].iter().all(|&v| v == 0.0));
            let b = PaddedIndexArray::from_slice(&vec![3; n], 16).unwrap();
            assert_eq!(b.as_ptr() as usize % ALIGN, 0);
            assert_eq!(b.padded_len(), pad_count(n, 16).unwrap());
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(PaddedRealArray::from_slice(&[1.0, f64::NAN], 8).is_err());
    }

    #[test]
    fn index_sentinel() {
        let a = PaddedIndexArray::from_slice(&[4, 7, 9], 16).unwrap();
        assert!(a.as_slice()[3..].iter().all(|&v| v == 9));
        let e = PaddedIndexArray::from_slice(&[], 16).unwrap();
        assert_eq!(e.padded_len(), 0);
        let e = PaddedIndexArray::from_slice_padded(&[], 16).unwrap();
        assert!(e.as_slice().iter().all(|&v| v == 0));
    }

    #[test]
    fn build_mask_examples() {
        let lanes = LaneConfig::default();
        let v = PaddedRealArray::from_slice_padded(&[1.0, 5.0, 2.0], 16).unwrap();
        let m = build_mask(&v, 2.5, 16, lanes).unwrap();
        let mut expected = vec![false; 16];
        expected[0] = true;
        expected[2] = true;
        assert_eq!(m.to_bools(), expected);

        let m = build_mask(&v, f64::MAX, 16, lanes).unwrap();
        assert_eq!(m.count(), 3);

        let empty = PaddedRealArray::from_slice_padded(&[], 16).unwrap();
        let m = build_mask(&empty, 1.0, 0, lanes).unwrap();
        assert!(m.is_empty());
        let mut bytes = [1u8; 16];
        build_mask_into(empty.as_slice(), 0, 1.0, 16, &mut bytes).unwrap();
        assert!(bytes.iter().all(|&b| b == 0));
    }

    #[test]
    fn build_mask_rejects_unpadded_count() {
        let lanes = LaneConfig::default();
        let v = PaddedRealArray::from_slice_padded(&[1.0, 5.0, 2.0], 16).unwrap();
        assert!(build_mask(&v, 2.5, 3, lanes).is_err());
        let mut bytes = [0u8; 12];
        assert!(build_mask_into(v.as_slice(), 3, 2.5, 16, &mut bytes).is_err());
    }

    #[test]
    fn compress_select_examples() {
        let src = PaddedIndexArray::from_slice(&[5, 9, 12, 20], 16).unwrap();
        let mut bits = vec![false; 16];
        bits[0] = true;
        bits[2] = true;
        bits[3] = true;
        let (packed, kept) = compress_select(&src, &LaneMask::from_bools(&bits)).unwrap();
        assert_eq!(kept, 3);
        assert_eq!(packed.logical(), &[5, 12, 20]);
        assert!(packed.as_slice()[3..].iter().all(|&v| v == 20));

        let (packed, kept) = compress_select(&src, &LaneMask::from_bools(&[false; 16])).unwrap();
        assert_eq!(kept, 0);
        assert!(packed.logical().is_empty());
    }

    #[test]
    fn compress_select_length_mismatch() {
        let src = PaddedIndexArray::from_slice(&[1, 2], 16).unwrap();
        assert!(compress_select(&src, &LaneMask::from_bools(&[true; 8])).is_err());
        let mut dst = [0u32; 1];
        assert!(compress_into(&[1u32, 2], &[1, 1], &mut dst).is_err());
    }

    #[test]
    fn compress_multi_parallel_columns() {
        let a = PaddedIndexArray::from_slice(&[1, 2, 3, 4], 16).unwrap();
        let b = PaddedRealArray::from_slice_padded(&[0.5, 1.5, 2.5, 3.5], 16).unwrap();
        let mut bits = vec![false; 16];
        bits[1] = true;
        bits[3] = true;
        let mask = LaneMask::from_bools(&bits);
        let (out, kept) =
            compress_select_multi(&[Column::Index(&a), Column::Real(&b)], &mask).unwrap();
        assert_eq!(kept, 2);
        assert_eq!(out[0].as_index().unwrap().logical(), &[2, 4]);
        assert_eq!(out[1].as_real().unwrap().logical(), &[1.5, 3.5]);

        let (single, k1) = compress_select_multi(&[Column::Index(&a)], &mask).unwrap();
        let (direct, k2) = compress_select(&a, &mask).unwrap();
        assert_eq!(k1, k2);
        assert_eq!(single[0].as_index().unwrap(), &direct);
    }

    #[test]
    fn compress_multi_rejects_ragged() {
        let a = PaddedIndexArray::from_slice(&[1, 2, 3], 16).unwrap();
        let b = PaddedRealArray::from_slice(&[1.0, 2.0, 3.0], 8).unwrap();
        let mask = LaneMask::from_bools(&[true; 16]);
        assert!(compress_select_multi(&[Column::Index(&a), Column::Real(&b)], &mask).is_err());
    }
}
