//! Argmax helpers shared by agents and evaluation.

use rand::Rng;

/// Relative tolerance under which two scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[inline]
fn tie_floor(max: f64) -> f64 {
    max - TIE_TOLERANCE * max.abs().max(1.0)
}

/// Largest value in `row`.
#[inline]
pub fn max_value(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// First index attaining the maximum.
#[inline]
pub fn argmax_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Indices whose value is within [`TIE_TOLERANCE`] of the maximum.
pub fn maximizers(row: &[f64]) -> Vec<usize> {
    let floor = tie_floor(max_value(row));
    (0..row.len()).filter(|&i| row[i] >= floor).collect()
}

/// First index within tolerance of the maximum.
#[inline]
pub fn argmax_first_tol(row: &[f64]) -> usize {
    let floor = tie_floor(max_value(row));
    row.iter().position(|v| *v >= floor).unwrap_or(0)
}

/// Uniformly random index among the (tolerance) maximizers.
pub fn argmax_random<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let floor = tie_floor(max_value(row));
    let count = row.iter().filter(|v| **v >= floor).count();
    let mut pick = if count > 1 { rng.gen_range(0..count) } else { 0 };
    for (i, v) in row.iter().enumerate() {
        if *v >= floor {
            if pick == 0 {
                return i;
            }
            pick -= 1;
        }
    }
    0
}
