//! Square Gray-coded QAM.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Unit-average-power constellation of a square M-QAM, indexed so that
/// adjacent points differ in one bit of the index.
pub fn constellation(m: usize) -> Result<Vec<Complex64>> {
    let side = (m as f64).sqrt().round() as usize;
    if m < 4 || side * side != m || !side.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("{m}-QAM is not a square power of two")));
    }
    let bits = side.trailing_zeros();
    // Gray index g at level position k: k = inverse Gray of g.
    let level = |g: usize| {
        let mut k = g;
        let mut s = g >> 1;
        while s > 0 {
            k ^= s;
            s >>= 1;
        }
        2.0 * k as f64 - (side as f64 - 1.0)
    };
    let norm = (2.0 * (m as f64 - 1.0) / 3.0).sqrt();
    Ok((0..m)
        .map(|i| Complex64::new(level(i >> bits), level(i & (side - 1))) / norm)
        .collect())
}

/// A frame of `n` symbol indices. Every constellation point appears
/// ⌊n/M⌋ or ⌈n/M⌉ times, in random order.
pub fn balanced_indices<R: Rng>(m: usize, n: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).map(|k| k % m).collect();
    if !n.is_multiple_of(m) {
        // Pick which points receive the extra occurrence at random.
        let mut pts: Vec<usize> = (0..m).collect();
        pts.shuffle(rng);
        let full = n - n % m;
        for (k, p) in pts.into_iter().take(n % m).enumerate() {
            idx[full + k] = p;
        }
    }
    idx.shuffle(rng);
    idx
}

/// Random frame of unit mean power: balanced symbol draws, rescaled by the
/// empirical RMS (a no-op when `n` is a multiple of M).
pub fn unit_power_frame<R: Rng>(m: usize, n: usize, rng: &mut R) -> Result<Vec<Complex64>> {
    let pts = constellation(m)?;
    let mut x: Vec<Complex64> = balanced_indices(m, n, rng).into_iter().map(|i| pts[i]).collect();
    let p = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
    let s = 1.0 / p.sqrt();
    x.iter_mut().for_each(|z| *z *= s);
    Ok(x)
}

/// Mean power of a frame.
pub fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_neighbours() {
        let c = constellation(16).unwrap();
        for i in 0..16usize {
            for j in 0..16usize {
                let d = (c[i] - c[j]).norm();
                let min = 2.0 / (10f64).sqrt();
                if (d - min).abs() < 1e-12 {
                    assert_eq!((i ^ j).count_ones(), 1, "{i} {j}");
                }
            }
        }
        assert!((mean_power(&c) - 1.0).abs() < 1e-14);
    }
}
