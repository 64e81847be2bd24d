//! Freeze masks, freezing-fraction schedules, and mask refresh policies.
//!
//! A [`Mask`] holds one bit per tensor entry (or per per-sample activation
//! entry): 1 means frozen (binarized, gradient-blocked), 0 means live. During
//! a unit's transition window the mask is stochastically resampled each step
//! by [`soft_refresh`] toward a target frozen fraction p given by
//! [`schedule_p`]; [`finalize`] closes the window by freezing everything.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::Rng;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    shape: Vec<usize>,
    bits: Vec<u8>,
    frozen: usize,
}

impl Mask {
    pub fn zeros(shape: Vec<usize>) -> Mask {
        let n: usize = shape.iter().product();
        Mask {
            shape,
            bits: vec![0; n],
            frozen: 0,
        }
    }

    pub fn ones(shape: Vec<usize>) -> Mask {
        let n: usize = shape.iter().product();
        Mask {
            shape,
            bits: vec![1; n],
            frozen: n,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i] == 1
    }

    pub fn set(&mut self, i: usize, frozen: bool) {
        let new = frozen as u8;
        if self.bits[i] != new {
            self.frozen = if frozen { self.frozen + 1 } else { self.frozen - 1 };
            self.bits[i] = new;
        }
    }

    pub fn set_all(&mut self, frozen: bool) {
        let v = frozen as u8;
        self.bits.fill(v);
        self.frozen = if frozen { self.bits.len() } else { 0 };
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen
    }

    pub fn frozen_fraction(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.frozen as f64 / self.bits.len() as f64
        }
    }

    pub fn all_frozen(&self) -> bool {
        self.frozen == self.bits.len()
    }

    /// Serialized run-length encoding. Byte layout, all integers little-endian:
    ///
    /// ```text
    /// [ndim: u8] [dim: u32] * ndim [start_bit: u8] [run_count: u32] [run_len: u32] * run_count
    /// ```
    ///
    /// Runs alternate in value starting from `start_bit` and their lengths sum
    /// to the element count.
    pub fn to_rle_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.push(self.shape.len() as u8);
        for &d in &self.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        let start = self.bits.first().copied().unwrap_or(0);
        out.push(start);
        let mut runs: Vec<u32> = Vec::new();
        let mut cur = start;
        let mut len = 0u32;
        for &b in &self.bits {
            if b == cur {
                len += 1;
            } else {
                runs.push(len);
                cur = b;
                len = 1;
            }
        }
        if !self.bits.is_empty() {
            runs.push(len);
        }
        out.extend_from_slice(&(runs.len() as u32).to_le_bytes());
        for r in runs {
            out.extend_from_slice(&r.to_le_bytes());
        }
        out
    }

    /// Parses the layout documented on [`Mask::to_rle_bytes`]. Returns the mask
    /// and the number of bytes consumed.
    pub fn from_rle_bytes(buf: &[u8]) -> Result<(Mask, usize)> {
        let fail = |off: usize, what: &str| {
            Error::Format(format!("mask RLE: {} at byte {}", what, off))
        };
        let mut off = 0usize;
        let ndim = *buf.get(off).ok_or_else(|| fail(off, "missing ndim"))? as usize;
        off += 1;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            let b = buf
                .get(off..off + 4)
                .ok_or_else(|| fail(off, "truncated dim"))?;
            shape.push(u32::from_le_bytes(b.try_into().unwrap()) as usize);
            off += 4;
        }
        let start = *buf.get(off).ok_or_else(|| fail(off, "missing start bit"))?;
        if start > 1 {
            return Err(fail(off, "start bit not 0/1"));
        }
        off += 1;
        let b = buf
            .get(off..off + 4)
            .ok_or_else(|| fail(off, "truncated run count"))?;
        let run_count = u32::from_le_bytes(b.try_into().unwrap()) as usize;
        off += 4;
        let n: usize = shape.iter().product();
        let mut bits = Vec::with_capacity(n);
        let mut cur = start;
        for _ in 0..run_count {
            let b = buf
                .get(off..off + 4)
                .ok_or_else(|| fail(off, "truncated run length"))?;
            let len = u32::from_le_bytes(b.try_into().unwrap()) as usize;
            off += 4;
            bits.extend(std::iter::repeat_n(cur, len));
            cur ^= 1;
        }
        if bits.len() != n {
            return Err(Error::Format(format!(
                "mask RLE: runs sum to {} but shape {:?} implies {}",
                bits.len(),
                shape,
                n
            )));
        }
        let frozen = bits.iter().filter(|&&b| b == 1).count();
        Ok((
            Mask {
                shape,
                bits,
                frozen,
            },
            off,
        ))
    }
}

/// Freezing-fraction schedule family over a transition window of T steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Linear,
    Quadratic,
    Cubic,
    FlippedQuadratic,
    Cosine,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 5] = [
        ScheduleKind::Linear,
        ScheduleKind::Quadratic,
        ScheduleKind::Cubic,
        ScheduleKind::FlippedQuadratic,
        ScheduleKind::Cosine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Linear => "linear",
            ScheduleKind::Quadratic => "quadratic",
            ScheduleKind::Cubic => "cubic",
            ScheduleKind::FlippedQuadratic => "flipped_quadratic",
            ScheduleKind::Cosine => "cosine",
        }
    }

    pub fn parse(s: &str) -> Result<ScheduleKind> {
        ScheduleKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown schedule '{}' (expected one of linear, quadratic, cubic, flipped_quadratic, cosine)",
                    s
                ))
            })
    }
}

/// Target frozen fraction p(t) for step t of a window of `total` steps.
/// p(0) = 0 and p(total) = 1 exactly; p is nondecreasing in t.
pub fn schedule_p(kind: ScheduleKind, t: u64, total: u64) -> Result<f64> {
    if total == 0 {
        return Err(Error::Contract("schedule window must have total >= 1".into()));
    }
    if t > total {
        return Err(Error::Contract(format!(
            "schedule step {} outside window 0..={}",
            t, total
        )));
    }
    let x = t as f64 / total as f64;
    Ok(match kind {
        ScheduleKind::Linear => x,
        ScheduleKind::Quadratic => x * x,
        ScheduleKind::Cubic => x * x * x,
        ScheduleKind::FlippedQuadratic => 2.0 * x - x * x,
        ScheduleKind::Cosine => 0.5 - 0.5 * (std::f64::consts::PI * x).cos(),
    })
}

/// One stochastic refresh step toward frozen fraction p: draws
/// k = max(1, n / r) distinct entry indices uniformly (partial Fisher-Yates
/// without replacement) and redraws each selected bit as Bernoulli(p).
/// At most k bits change per call. Returns k.
pub fn soft_refresh(mask: &mut Mask, p: f64, r: usize, rng: &mut impl Rng) -> Result<usize> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Contract(format!("refresh target p={} outside [0,1]", p)));
    }
    if r == 0 {
        return Err(Error::Contract("refresh rate r must be >= 1".into()));
    }
    let n = mask.len();
    if n == 0 {
        return Ok(0);
    }
    let k = (n / r).max(1);
    // Sparse partial Fisher-Yates: `moved` records displaced slots so the k
    // draws are distinct without materializing a 0..n index array.
    let mut moved: HashMap<usize, usize> = HashMap::new();
    let slot = |moved: &HashMap<usize, usize>, i: usize| *moved.get(&i).unwrap_or(&i);
    for j in 0..k {
        let d = rng.gen_range(j..n);
        let idx = slot(&moved, d);
        let jv = slot(&moved, j);
        moved.insert(d, jv);
        let frozen = rng.gen::<f64>() < p;
        mask.set(idx, frozen);
    }
    Ok(k)
}

/// Deterministic variant used by the magnitude-proximity baseline policy:
/// freezes the ceil(p*n) entries of `latent` closest to +-1 (distance
/// ||w|-1|), ties broken toward the lower flat index, and re-ranks from
/// scratch on every call.
pub fn deterministic_refresh(latent: &Tensor, p: f64) -> Result<Mask> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Contract(format!("freeze target p={} outside [0,1]", p)));
    }
    let n = latent.len();
    let m = ((p * n as f64).ceil() as usize).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    let d = |i: usize| (latent.data()[i].abs() - 1.0).abs();
    idx.sort_by(|&a, &b| d(a).partial_cmp(&d(b)).unwrap().then(a.cmp(&b)));
    let mut mask = Mask::zeros(latent.shape().to_vec());
    for &i in idx.iter().take(m) {
        mask.set(i, true);
    }
    Ok(mask)
}

/// Closes a transition window: freezes every entry unconditionally. Stochastic
/// refresh at p = 1 only guarantees convergence in expectation, so the window
/// end applies this regardless of the current mask state.
pub fn finalize(mask: &mut Mask) {
    mask.set_all(true);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamRole};

    #[test]
    fn schedule_endpoints_exact_and_monotone() {
        for kind in ScheduleKind::ALL {
            for total in [1u64, 10, 1000] {
                assert_eq!(schedule_p(kind, 0, total).unwrap(), 0.0, "{:?}", kind);
                assert_eq!(schedule_p(kind, total, total).unwrap(), 1.0, "{:?}", kind);
                let mut prev = -1.0;
                for t in 0..=total {
                    let p = schedule_p(kind, t, total).unwrap();
                    assert!(p >= prev, "{:?} not monotone at t={}", kind, t);
                    assert!((0.0..=1.0).contains(&p));
                    prev = p;
                }
            }
        }
    }

    #[test]
    fn schedule_known_values() {
        assert_eq!(schedule_p(ScheduleKind::Cubic, 50, 100).unwrap(), 0.125);
        assert_eq!(schedule_p(ScheduleKind::Linear, 25, 100).unwrap(), 0.25);
        assert_eq!(schedule_p(ScheduleKind::Quadratic, 50, 100).unwrap(), 0.25);
        assert_eq!(schedule_p(ScheduleKind::FlippedQuadratic, 50, 100).unwrap(), 0.75);
        let c = schedule_p(ScheduleKind::Cosine, 50, 100).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn schedule_rejects_out_of_window() {
        assert!(schedule_p(ScheduleKind::Cubic, 11, 10).is_err());
        assert!(schedule_p(ScheduleKind::Cubic, 0, 0).is_err());
    }

    #[test]
    fn soft_refresh_touches_at_most_k_bits() {
        let mut rng = stream(42, StreamRole::WeightMask, 0);
        let mut mask = Mask::zeros(vec![1000]);
        for step in 0..50 {
            let before = mask.bits().to_vec();
            let k = soft_refresh(&mut mask, 0.5, 100, &mut rng).unwrap();
            assert_eq!(k, 10);
            let changed = before
                .iter()
                .zip(mask.bits())
                .filter(|(a, b)| a != b)
                .count();
            assert!(changed <= k, "step {}: churn {} > k {}", step, changed, k);
        }
    }

    #[test]
    fn soft_refresh_small_tensor_still_progresses() {
        // n < r would give k = 0 under plain n/r; the max(1, .) floor keeps
        // one entry refreshing per step so tiny tensors reach p = 1.
        let mut rng = stream(7, StreamRole::WeightMask, 1);
        let mut mask = Mask::zeros(vec![8]);
        let k = soft_refresh(&mut mask, 1.0, 100, &mut rng).unwrap();
        assert_eq!(k, 1);
        for _ in 0..200 {
            soft_refresh(&mut mask, 1.0, 100, &mut rng).unwrap();
        }
        assert!(mask.all_frozen());
    }

    #[test]
    fn soft_refresh_at_p_zero_and_one_moves_bits_one_way() {
        let mut rng = stream(3, StreamRole::WeightMask, 2);
        let mut mask = Mask::ones(vec![500]);
        for _ in 0..300 {
            soft_refresh(&mut mask, 0.0, 10, &mut rng).unwrap();
        }
        assert_eq!(mask.frozen_count(), 0);
        for _ in 0..300 {
            soft_refresh(&mut mask, 1.0, 10, &mut rng).unwrap();
        }
        assert!(mask.all_frozen());
    }

    #[test]
    fn soft_refresh_tracks_target_fraction() {
        // Hold p = 0.7 for 10*r steps on n = 10000: the empirical frozen
        // fraction settles near p (binomial-scale tolerance).
        let mut rng = stream(9, StreamRole::WeightMask, 3);
        let mut mask = Mask::zeros(vec![10_000]);
        for _ in 0..1000 {
            soft_refresh(&mut mask, 0.7, 100, &mut rng).unwrap();
        }
        let f = mask.frozen_fraction();
        assert!((f - 0.7).abs() < 3.0 * (0.7f64 * 0.3 / 10_000.0).sqrt() + 0.01, "f={}", f);
    }

    #[test]
    fn deterministic_refresh_ranks_by_distance_to_unit_magnitude() {
        let w = Tensor::new(vec![5], vec![0.1, -0.95, 1.6, 0.99, -0.2]).unwrap();
        // distances: 0.9, 0.05, 0.6, 0.01, 0.8 -> order [3, 1, 2, 4, 0]
        let m = deterministic_refresh(&w, 0.4).unwrap(); // ceil(2.0) = 2 frozen
        assert_eq!(m.bits(), &[0, 1, 0, 1, 0]);
        let m3 = deterministic_refresh(&w, 0.41).unwrap(); // ceil(2.05) = 3
        assert_eq!(m3.bits(), &[0, 1, 1, 1, 0]);
        assert_eq!(deterministic_refresh(&w, 0.0).unwrap().frozen_count(), 0);
        assert_eq!(deterministic_refresh(&w, 1.0).unwrap().frozen_count(), 5);
    }

    #[test]
    fn deterministic_refresh_breaks_ties_by_lower_index() {
        let w = Tensor::new(vec![4], vec![0.5, -0.5, 0.5, 1.5]).unwrap();
        let m = deterministic_refresh(&w, 0.5).unwrap(); // distances all 0.5: pick idx 0,1
        assert_eq!(m.bits(), &[1, 1, 0, 0]);
    }

    #[test]
    fn finalize_freezes_everything() {
        let mut m = Mask::zeros(vec![10]);
        m.set(3, true);
        finalize(&mut m);
        assert!(m.all_frozen());
        assert_eq!(m.frozen_count(), 10);
    }

    #[test]
    fn rle_roundtrip_and_layout() {
        let mut m = Mask::zeros(vec![2, 5]);
        for i in [0usize, 1, 2, 6, 9] {
            m.set(i, true);
        }
        let bytes = m.to_rle_bytes();
        // layout: ndim=2, dims 2,5; start=1; runs [3,3,1,2,1]
        assert_eq!(bytes[0], 2);
        assert_eq!(u32::from_le_bytes(bytes[1..5].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 5);
        assert_eq!(bytes[9], 1);
        assert_eq!(u32::from_le_bytes(bytes[10..14].try_into().unwrap()), 5);
        let (back, used) = Mask::from_rle_bytes(&bytes).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(back, m);
    }

    #[test]
    fn rle_rejects_corrupt_streams() {
        let m = Mask::ones(vec![4]);
        let mut bytes = m.to_rle_bytes();
        bytes.truncate(bytes.len() - 2);
        assert!(Mask::from_rle_bytes(&bytes).is_err());
        let bad = [9u8]; // ndim 9 then nothing
        assert!(Mask::from_rle_bytes(&bad).is_err());
    }
}
