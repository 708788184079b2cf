//! Adaptive Gauss–Kronrod and Gauss–Hermite quadrature.

use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CVec;

/// Values that can be accumulated by the quadrature rules.
pub trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, other: &Self, w: f64);
    fn norm(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += w * other;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += other * w;
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

impl QuadValue for CVec {
    fn zero_like(&self) -> Self {
        CVec::zeros(self.len())
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        self.axpy(Complex64::new(w, 0.0), other, Complex64::new(1.0, 0.0));
    }
    fn norm(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule
// (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc.zero_like();
    kron.add_scaled(&fc, WGK[7]);
    let mut gauss = fc.zero_like();
    gauss.add_scaled(&fc, WG[3]);
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron.add_scaled(&f1, WGK[j]);
        kron.add_scaled(&f2, WGK[j]);
        if j % 2 == 1 {
            gauss.add_scaled(&f1, WG[j / 2]);
            gauss.add_scaled(&f2, WG[j / 2]);
        }
    }
    let mut result = kron.zero_like();
    result.add_scaled(&kron, h);
    let mut diff = kron.clone();
    diff.add_scaled(&gauss, -1.0);
    let err = (diff.norm() * h.abs()).max(f64::MIN_POSITIVE);
    (result, err)
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Tolerances and limits for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_segments: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-10,
            max_segments: 4000,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Debug)]
pub struct Integral<T> {
    pub value: T,
    pub error: f64,
    pub segments: usize,
}

/// Globally adaptive 15-point Gauss–Kronrod integration over the union of
/// the consecutive intervals defined by `breaks` (at least two points).
pub fn integrate<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Integral<T>> {
    if breaks.len() < 2 {
        return Err(Error::InvalidArgument("integration needs at least two break points".into()));
    }
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        let (value, err) = gk15(&f, w[0], w[1]);
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            err,
        });
    }
    loop {
        let (total, err) = sum_heap(&heap);
        let target = tol.abs.max(tol.rel * total.norm());
        if err <= target {
            return Ok(Integral {
                value: total,
                error: err,
                segments: heap.len(),
            });
        }
        if heap.len() >= tol.max_segments {
            return Err(Error::NonConvergent(format!(
                "adaptive quadrature: error estimate {err:.3e} above target {target:.3e} after {} segments",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            let (total, err) = sum_heap_with(&heap, &worst);
            return Ok(Integral {
                value: total,
                error: err,
                segments: heap.len() + 1,
            });
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, err) = gk15(&f, a, b);
            heap.push(Segment { a, b, value, err });
        }
    }
}

fn sum_heap<T: QuadValue>(heap: &BinaryHeap<Segment<T>>) -> (T, f64) {
    let mut it = heap.iter();
    let first = it.next().expect("heap is nonempty");
    let mut total = first.value.clone();
    let mut err = first.err;
    for s in it {
        total.add_scaled(&s.value, 1.0);
        err += s.err;
    }
    (total, err)
}

fn sum_heap_with<T: QuadValue>(heap: &BinaryHeap<Segment<T>>, extra: &Segment<T>) -> (T, f64) {
    let mut total = extra.value.clone();
    let mut err = extra.err;
    for s in heap.iter() {
        total.add_scaled(&s.value, 1.0);
        err += s.err;
    }
    (total, err)
}

/// Gauss–Hermite rule for a standard normal weight: Σ w_i f(x_i) ≈ E[f(X)],
/// X ~ N(0, 1). Weights sum to one.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch on the probabilists' Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            let b = (i as f64).sqrt();
            jac[(i, i - 1)] = b;
            jac[(i - 1, i)] = b;
        }
        let eig = jac.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let sum: f64 = pairs.iter().map(|p| p.1).sum();
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / sum).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_smooth_functions() {
        let r = integrate(|x: f64| x.sin(), &[0.0, std::f64::consts::PI], Tolerance::default())
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        let r = integrate(|x: f64| 1.0 / (1.0 + 1e6 * x * x), &[-1.0, 1.0], Tolerance::default())
            .unwrap();
        let exact = 2.0 * (1e3f64).atan() / 1e3;
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn gauss_hermite_moments() {
        let gh = GaussHermite::new(20);
        let m = |k: i32| -> f64 { gh.nodes.iter().zip(&gh.weights).map(|(x, w)| w * x.powi(k)).sum() };
        assert!((m(0) - 1.0).abs() < 1e-14);
        assert!(m(1).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(6) - 15.0).abs() < 1e-10);
    }
}
