//! Encrypted argmax over packed logit windows.
//!
//! A ciphertext holds `copies` independent windows. Each window spans
//! `2 * n_padded` slots: the logits (padded with zeros up to `n_padded`)
//! followed by an empty region that the argmax fills with a duplicate so
//! that left rotations fold over the whole window without wrapping into a
//! neighbour.
//!
//! [`secpe_argmax`] finds each window's maximum with `log2(n_padded)`
//! rotate-and-max folds, then marks every slot equal to it through
//! `sign(y - y_max) + 1`. [`phoenix_argmax`] compares every slot with each of
//! its `n_padded - 1` rotations and thresholds the tally.

use serde::{Deserialize, Serialize};

use crate::backend::{HomBackend, SlotVector};
use crate::error::{Error, Result};
use crate::sign::CompositeSign;

/// Normalized values may stray this far outside `[0, 1]`.
pub const NORM_TOLERANCE: f64 = 1e-3;

/// Public bounds on raw logits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub d_min: f64,
    pub d_max: f64,
}

impl NormBounds {
    pub fn new(d_min: f64, d_max: f64) -> Result<Self> {
        if !(d_min.is_finite() && d_max.is_finite() && d_max > d_min) {
            return Err(Error::InvalidBounds { d_min, d_max });
        }
        Ok(Self { d_min, d_max })
    }

    pub fn scale(&self) -> f64 {
        1.0 / (self.d_max - self.d_min)
    }

    /// Plaintext `(x - d_min) / (d_max - d_min)`.
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.d_min) * self.scale()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.d_min && x <= self.d_max
    }
}

/// Placement of argmax windows inside a slot vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PackingLayout {
    pub n: usize,
    pub n_padded: usize,
    pub copies: usize,
    pub slot_count: usize,
}

impl PackingLayout {
    pub fn new(n: usize, slot_count: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidLayout("window size must be positive".into()));
        }
        let n_padded = n.next_power_of_two();
        let copies = slot_count / (2 * n_padded);
        if copies == 0 {
            return Err(Error::InvalidLayout(format!(
                "{slot_count} slots cannot hold a window of {n} (needs {})",
                2 * n_padded
            )));
        }
        Ok(Self {
            n,
            n_padded,
            copies,
            slot_count,
        })
    }

    /// First slot of copy `k`.
    pub fn offset(&self, copy: usize) -> usize {
        copy * 2 * self.n_padded
    }

    pub fn offsets(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.copies).map(|k| self.offset(k))
    }

    /// Number of QuickMax folds.
    pub fn log_n(&self) -> u32 {
        self.n_padded.trailing_zeros()
    }

    /// Lays out `rows` (one per copy) in plaintext slots. Window padding
    /// slots `[n, n_padded)` get `fill`; everything else is zero.
    pub fn place(&self, rows: &[&[f64]], fill: f64) -> Result<Vec<f64>> {
        if rows.len() > self.copies {
            return Err(Error::InvalidLayout(format!(
                "{} windows requested but only {} fit",
                rows.len(),
                self.copies
            )));
        }
        let mut slots = vec![0.0; self.slot_count];
        for (k, row) in rows.iter().enumerate() {
            if row.len() != self.n {
                return Err(Error::LengthMismatch {
                    expected: self.n,
                    found: row.len(),
                });
            }
            let o = self.offset(k);
            slots[o..o + self.n].copy_from_slice(row);
            slots[o + self.n..o + self.n_padded].fill(fill);
        }
        Ok(slots)
    }

    /// Plaintext with `value` on every window slot `[offset, offset + n_padded)`
    /// of every copy and zero elsewhere.
    pub fn window_mask(&self, value: f64, width: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.slot_count];
        for o in self.offsets() {
            m[o..o + width].fill(value);
        }
        m
    }

    /// Reads the first `n` slots of each of the first `count` windows.
    pub fn extract(&self, slots: &[f64], count: usize) -> Vec<Vec<f64>> {
        self.offsets()
            .take(count)
            .map(|o| slots[o..o + self.n].to_vec())
            .collect()
    }
}

/// Maps every slot through `(x - d_min) / (d_max - d_min)` and checks the
/// result stays within `[0, 1]` up to [`NORM_TOLERANCE`]. One plaintext
/// multiplication.
pub fn normalize<B: HomBackend + ?Sized>(
    backend: &B,
    ct: &SlotVector,
    bounds: &NormBounds,
) -> Result<SlotVector> {
    let scaled = backend.mul_plain(ct, bounds.scale().into())?;
    let out = backend.add_plain(&scaled, (-bounds.d_min * bounds.scale()).into())?;
    backend.ensure_range(&out, -NORM_TOLERANCE, 1.0 + NORM_TOLERANCE)?;
    Ok(out)
}

/// Normalizes only window slots `[offset, offset + n_padded)` and zeroes
/// the rest, so the duplicate regions are empty as the argmax expects.
pub fn normalize_windows<B: HomBackend + ?Sized>(
    backend: &B,
    ct: &SlotVector,
    bounds: &NormBounds,
    layout: &PackingLayout,
) -> Result<SlotVector> {
    let scale = layout.window_mask(bounds.scale(), layout.n_padded);
    let shift = layout.window_mask(-bounds.d_min * bounds.scale(), layout.n_padded);
    let scaled = backend.mul_plain(ct, (&scale).into())?;
    let out = backend.add_plain(&scaled, (&shift).into())?;
    backend.ensure_range(&out, -NORM_TOLERANCE, 1.0 + NORM_TOLERANCE)?;
    Ok(out)
}

/// `max(a, b) = (a + b) / 2 + (a - b) / 2 * sign(a - b)`, with the halving
/// done by plaintext multiplications so only one ciphertext product is spent
/// beyond the sign evaluation.
pub fn hom_max<B: HomBackend + ?Sized>(
    backend: &B,
    a: &SlotVector,
    b: &SlotVector,
    sign: &CompositeSign,
) -> Result<SlotVector> {
    let diff = backend.sub(a, b)?;
    let s = sign.eval(backend, &diff)?;
    let half_diff = backend.mul_plain(&diff, 0.5.into())?;
    let correction = backend.mul(&half_diff, &s)?;
    let sum = backend.add(a, b)?;
    let mid = backend.mul_plain(&sum, 0.5.into())?;
    backend.add(&mid, &correction)
}

/// Normalizes `logits` (one row per copy) and encrypts them in `layout`.
pub fn pack<B: HomBackend + ?Sized>(
    backend: &B,
    logits: &[Vec<f64>],
    layout: &PackingLayout,
    bounds: &NormBounds,
) -> Result<SlotVector> {
    let normalized: Vec<Vec<f64>> = logits
        .iter()
        .map(|row| row.iter().map(|x| bounds.apply(*x)).collect())
        .collect();
    if let Some(v) = normalized
        .iter()
        .flatten()
        .find(|v| !(-NORM_TOLERANCE..=1.0 + NORM_TOLERANCE).contains(*v))
    {
        return Err(Error::DomainViolation {
            index: 0,
            value: *v,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let rows: Vec<&[f64]> = normalized.iter().map(Vec::as_slice).collect();
    backend.encrypt(&layout.place(&rows, 0.0)?)
}

fn duplicate<B: HomBackend + ?Sized>(
    backend: &B,
    ct: &SlotVector,
    layout: &PackingLayout,
) -> Result<SlotVector> {
    let shifted = backend.rotate(ct, -(layout.n_padded as i64))?;
    backend.add(ct, &shifted)
}

/// Window maximum broadcast to every window slot, by `log2(n_padded)`
/// rotate-and-max folds over the duplicated window.
pub fn quick_max<B: HomBackend + ?Sized>(
    backend: &B,
    y: &SlotVector,
    layout: &PackingLayout,
    sign: &CompositeSign,
) -> Result<SlotVector> {
    let mut acc = y.clone();
    for i in 0..layout.log_n() {
        let r = backend.rotate(&acc, 1i64 << i)?;
        acc = hom_max(backend, &r, &acc, sign)?;
    }
    Ok(acc)
}

/// Logarithmic-fold argmax.
///
/// Input: packed, normalized windows with empty duplicate regions. Output:
/// slots `[offset, offset + n)` of each copy are ≈1 where the window maximum
/// is attained and ≈0 elsewhere, provided the runner-up is at least
/// `2^-(alpha-1)` below the maximum. Duplicate-region slots are unspecified.
/// Costs `log2(n_padded) + 1` sign evaluations and as many rotations.
pub fn secpe_argmax<B: HomBackend + ?Sized>(
    backend: &B,
    ct: &SlotVector,
    layout: &PackingLayout,
    sign: &CompositeSign,
) -> Result<SlotVector> {
    let y = duplicate(backend, ct, layout)?;
    let y_max = quick_max(backend, &y, layout, sign)?;
    let diff = backend.sub(&y, &y_max)?;
    let z = sign.eval(backend, &diff)?;
    backend.add_plain(&z, 1.0.into())
}

/// Linear pairwise-comparison argmax baseline.
///
/// Each slot is compared with its `n_padded - 1` successors in the
/// duplicated window; the tally `s` equals `n_padded - 1` only at a strict
/// maximum and is at most `n_padded - 3` elsewhere, so
/// `sign((s - (n_padded - 2)) / (2 n_padded - 3))` separates the two. Same
/// output contract as [`secpe_argmax`]; costs `n_padded` sign evaluations and
/// `n_padded` rotations.
pub fn phoenix_argmax<B: HomBackend + ?Sized>(
    backend: &B,
    ct: &SlotVector,
    layout: &PackingLayout,
    sign: &CompositeSign,
) -> Result<SlotVector> {
    let y = duplicate(backend, ct, layout)?;
    let np = layout.n_padded;
    if np == 1 {
        let zero = backend.sub(&y, &y)?;
        let z = sign.eval(backend, &zero)?;
        return backend.add_plain(&z, 1.0.into());
    }
    let mut tally: Option<SlotVector> = None;
    for j in 1..np {
        let r = backend.rotate(&y, j as i64)?;
        let d = backend.sub(&y, &r)?;
        let s = sign.eval(backend, &d)?;
        tally = Some(match tally {
            None => s,
            Some(t) => backend.add(&t, &s)?,
        });
    }
    let tally = tally.expect("np >= 2");
    let shifted = backend.add_plain(&tally, (-((np - 2) as f64)).into())?;
    let t = backend.mul_plain(&shifted, (1.0 / (2 * np - 3) as f64).into())?;
    let s = sign.eval(backend, &t)?;
    let lifted = backend.add_plain(&s, 1.0.into())?;
    backend.mul_plain(&lifted, 0.5.into())
}

/// Zeroes every slot outside `[offset, offset + n)`. One plaintext
/// multiplication.
pub fn mask_outputs<B: HomBackend + ?Sized>(
    backend: &B,
    ct: &SlotVector,
    layout: &PackingLayout,
) -> Result<SlotVector> {
    backend.mul_plain(ct, (&layout.window_mask(1.0, layout.n)).into())
}

/// Rounds each slot to 0 or 1.
pub fn round_one_hot(values: &[f64]) -> Vec<u8> {
    values.iter().map(|v| u8::from(*v >= 0.5)).collect()
}
