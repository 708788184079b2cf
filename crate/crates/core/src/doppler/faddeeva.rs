//! Faddeeva function w(z) = exp(−z²)·erfc(−iz), the Gaussian-convolved
//! simple pole J(z), and the Gaussian expectation of products of two poles.
//!
//! w(z) follows the Gautschi / Poppe–Wijers scheme: a power series inside a
//! small ellipse around the origin and a truncated Laplace continued fraction
//! (with Taylor-series correction near the real axis) elsewhere.

use num_complex::Complex64;

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const SQRT_PI_OVER_2: f64 = 1.253_314_137_315_500_3;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Faddeeva function w(z) for any complex z.
pub fn faddeeva(z: Complex64) -> Complex64 {
    let (xi, yi) = (z.re, z.im);
    let xabs = xi.abs();
    let yabs = yi.abs();
    let x = xabs / 6.3;
    let y = yabs / 4.4;
    let mut qrho = x * x + y * y;
    let xquad = xabs * xabs - yabs * yabs;
    let yquad = 2.0 * xabs * yabs;
    let inner = qrho < 0.085264;

    let (mut u, mut v);
    let (mut u2, mut v2) = (0.0, 0.0);
    if inner {
        // Power series of erfc around the origin.
        qrho = (1.0 - 0.85 * y) * qrho.sqrt();
        let n = (6.0 + 72.0 * qrho).round() as usize;
        let mut j = 2 * n + 1;
        let mut xsum = 1.0 / j as f64;
        let mut ysum = 0.0;
        for i in (1..=n).rev() {
            j -= 2;
            let xaux = (xsum * xquad - ysum * yquad) / i as f64;
            ysum = (xsum * yquad + ysum * xquad) / i as f64;
            xsum = xaux + 1.0 / j as f64;
        }
        let u1 = -TWO_OVER_SQRT_PI * (xsum * yabs + ysum * xabs) + 1.0;
        let v1 = TWO_OVER_SQRT_PI * (xsum * xabs - ysum * yabs);
        let daux = (-xquad).exp();
        u2 = daux * yquad.cos();
        v2 = -daux * yquad.sin();
        u = u1 * u2 - v1 * v2;
        v = u1 * v2 + v1 * u2;
    } else {
        let (h, kapn, nu);
        if qrho > 1.0 {
            h = 0.0;
            kapn = 0usize;
            qrho = qrho.sqrt();
            nu = (3.0 + 1442.0 / (26.0 * qrho + 77.0)) as usize;
        } else {
            qrho = (1.0 - y) * (1.0 - qrho).sqrt();
            h = 1.88 * qrho;
            kapn = (7.0 + 34.0 * qrho).round() as usize;
            nu = (16.0 + 26.0 * qrho).round() as usize;
        }
        let h2 = 2.0 * h;
        let use_taylor = h > 0.0;
        let mut qlambda = if use_taylor { h2.powi(kapn as i32) } else { 0.0 };
        let (mut rx, mut ry, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
        for n in (0..=nu).rev() {
            let np1 = (n + 1) as f64;
            let tx = yabs + h + np1 * rx;
            let ty = xabs - np1 * ry;
            let c = 0.5 / (tx * tx + ty * ty);
            rx = c * tx;
            ry = c * ty;
            if use_taylor && n <= kapn {
                let tx = qlambda + sx;
                let nsx = rx * tx - ry * sy;
                sy = ry * tx + rx * sy;
                sx = nsx;
                qlambda /= h2;
            }
        }
        if h == 0.0 {
            u = TWO_OVER_SQRT_PI * rx;
            v = TWO_OVER_SQRT_PI * ry;
        } else {
            u = TWO_OVER_SQRT_PI * sx;
            v = TWO_OVER_SQRT_PI * sy;
        }
        if yabs == 0.0 {
            u = (-xabs * xabs).exp();
        }
    }

    if yi < 0.0 {
        // w(z) = 2·exp(−z²) − w(−z) in the lower half plane.
        if inner {
            u2 *= 2.0;
            v2 *= 2.0;
        } else {
            let w1 = 2.0 * (-xquad).exp();
            u2 = w1 * yquad.cos();
            v2 = -w1 * yquad.sin();
        }
        u = u2 - u;
        v = v2 - v;
        if xi > 0.0 {
            v = -v;
        }
    } else if xi < 0.0 {
        v = -v;
    }
    Complex64::new(u, v)
}

/// J(z) = ∫ N(ξ|0,1)/(z − ξ) dξ, with the Cauchy principal value on the
/// real axis.
pub fn special_j(z: Complex64) -> Complex64 {
    let zeta = z * FRAC_1_SQRT_2;
    if z.im > 0.0 {
        Complex64::new(0.0, -SQRT_PI_OVER_2) * faddeeva(zeta)
    } else if z.im < 0.0 {
        (Complex64::new(0.0, -SQRT_PI_OVER_2) * faddeeva(zeta.conj())).conj()
    } else {
        // Real axis: √(π/2)·Im w(x/√2) = √2·Dawson(x/√2).
        Complex64::new(SQRT_PI_OVER_2 * faddeeva(zeta).im, 0.0)
    }
}

/// Magnitudes below this fraction of the larger one are treated as zero.
const ZERO_EIGEN_REL: f64 = 1e-10;
/// Switch radius of the confluent branch, relative to max(|a|, |b|).
const CONFLUENT_REL: f64 = 1e-6;

/// E_X[1/((1 − aX)(1 − bX))] for X ~ N(0, 1).
pub fn gaussian_pole_expectation(a: Complex64, b: Complex64) -> Complex64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let a_zero = a.norm() <= ZERO_EIGEN_REL * scale;
    let b_zero = b.norm() <= ZERO_EIGEN_REL * scale;
    match (a_zero, b_zero) {
        (true, true) => Complex64::new(1.0, 0.0),
        (false, true) => single_pole(a),
        (true, false) => single_pole(b),
        (false, false) => {
            if (a - b).norm() < CONFLUENT_REL * scale {
                let m = (a + b) * 0.5;
                let inv = m.inv();
                (special_j(inv) * inv - 1.0) * inv * inv
            } else {
                (special_j(a.inv()) - special_j(b.inv())) / (a - b)
            }
        }
    }
}

/// E_X[1/(1 − aX)] = a⁻¹·J(a⁻¹).
pub fn single_pole(a: Complex64) -> Complex64 {
    let inv = a.inv();
    inv * special_j(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
        (a - b).norm() <= rel * b.norm().max(1e-300)
    }

    #[test]
    fn known_values() {
        assert!(close(faddeeva(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0), 1e-15));
        // w(i) = e·erfc(1)
        assert!(close(
            faddeeva(Complex64::new(0.0, 1.0)),
            Complex64::new(0.427_583_576_155_807, 0.0),
            1e-14
        ));
        // w(1) = e^{-1} + (2i/√π)·Dawson(1)
        assert!(close(
            faddeeva(Complex64::new(1.0, 0.0)),
            Complex64::new(0.367_879_441_171_442_3, 0.607_157_705_841_393_7),
            1e-14
        ));
    }

    #[test]
    fn reflection_identity() {
        for &(x, y) in &[(0.3, -0.2), (2.0, -1.5), (-4.0, -0.5), (7.0, -3.0)] {
            let z = Complex64::new(x, y);
            let lhs = faddeeva(z);
            let rhs = (-(z * z)).exp() * 2.0 - faddeeva(-z);
            assert!(close(lhs, rhs, 1e-12), "{z}");
        }
    }

    #[test]
    fn j_is_odd_and_zero_at_origin() {
        assert_eq!(special_j(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
        let z = Complex64::new(0.7, 1.3);
        assert!(close(special_j(-z), -special_j(z), 1e-14));
    }

    #[test]
    fn expectation_special_cases() {
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(gaussian_pole_expectation(zero, zero), Complex64::new(1.0, 0.0));
        let a = Complex64::new(0.5, 0.2);
        assert_eq!(gaussian_pole_expectation(a, zero), single_pole(a));
        assert_eq!(gaussian_pole_expectation(zero, a), single_pole(a));
        // Confluent branch is continuous with the generic one.
        let b = a * (1.0 + 1e-4);
        let near = gaussian_pole_expectation(a, b);
        let conf = gaussian_pole_expectation(a, a);
        assert!(close(near, conf, 1e-3));
    }
}
