//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for q in 0..bc {
                for p in 0..br {
                    out[(i * br + p, j * bc + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Column-stacking vectorization; nalgebra stores column-major so this is a copy.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`] for an n×n matrix.
pub fn unvec(v: &CVec, n: usize) -> CMat {
    assert_eq!(v.len(), n * n, "unvec length mismatch");
    CMat::from_column_slice(n, n, v.as_slice())
}

/// Matrix unit E_kl (0-based) of size n×n.
pub fn unit(n: usize, k: usize, l: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(k, l)] = cr(1.0);
    m
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(cr)
}

/// Largest absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Solves a·x = b by LU, mapping failure to [`Error::SingularSystem`].
pub fn solve(a: &CMat, b: &CVec, context: &'static str) -> Result<CVec> {
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularSystem { context })?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularSystem { context });
    }
    Ok(x)
}

pub fn inverse(a: &CMat, context: &'static str) -> Result<CMat> {
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularSystem { context })?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularSystem { context });
    }
    Ok(inv)
}

const SCHUR_MAX_ITER: usize = 20_000;

/// Fixed unitary used to restart a stalled QR iteration.
fn restart_unitary(n: usize, attempt: usize) -> CMat {
    let m = CMat::from_fn(n, n, |i, j| {
        let k = (i * 31 + j * 17 + attempt * 7 + 1) as f64;
        Complex64::new((k * 0.618_033_988_7).sin(), (k * std::f64::consts::SQRT_2).cos())
    });
    m.qr().q()
}

/// Complex Schur form a = Z T Zᴴ. The shifted QR iteration occasionally
/// stalls on highly structured inputs; a unitary similarity restarts it.
pub fn schur(a: &CMat) -> Result<(CMat, CMat)> {
    let eps = f64::EPSILON;
    if let Some(s) = a.clone().try_schur(eps, SCHUR_MAX_ITER) {
        return Ok(s.unpack());
    }
    let n = a.nrows();
    for attempt in 0..4 {
        let u = restart_unitary(n, attempt);
        let b = u.adjoint() * a * &u;
        if let Some(s) = b.try_schur(eps, SCHUR_MAX_ITER) {
            let (z, t) = s.unpack();
            return Ok((u * z, t));
        }
    }
    Err(Error::NonConvergent("Schur decomposition did not converge".into()))
}

/// Eigenvalues of a general complex matrix (diagonal of its Schur form).
pub fn eigenvalues(a: &CMat) -> Result<Vec<Complex64>> {
    let (_, t) = schur(a)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Eigen-decomposition a = V diag(λ) V⁻¹ of a general complex matrix.
pub struct Eigen {
    pub values: Vec<Complex64>,
    /// Right eigenvectors as columns, unit 2-norm.
    pub right: CMat,
    /// Left eigenvectors as rows, scaled so `left * right = I`.
    pub left: CMat,
}

impl Eigen {
    /// Computes eigenvectors by back-substitution on the complex Schur form.
    pub fn new(a: &CMat) -> Result<Self> {
        let n = a.nrows();
        let scale = max_abs(a).max(f64::MIN_POSITIVE);
        let (z, t) = schur(a)?;
        let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
        let tiny = 1e-14 * scale;
        let mut y = CMat::zeros(n, n);
        for k in 0..n {
            let lam = values[k];
            y[(k, k)] = cr(1.0);
            for i in (0..k).rev() {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in (i + 1)..=k {
                    acc += t[(i, j)] * y[(j, k)];
                }
                let mut d = t[(i, i)] - lam;
                if d.norm() < tiny {
                    d = cr(tiny);
                }
                y[(i, k)] = -acc / d;
            }
        }
        let mut right = &z * y;
        for k in 0..n {
            let nrm = right.column(k).norm();
            if nrm > 0.0 {
                right.column_mut(k).unscale_mut(nrm);
            }
        }
        let left = inverse(&right, "eigenvector matrix")?;
        Ok(Self {
            values,
            right,
            left,
        })
    }

    /// 2-norm condition number of the right eigenvector matrix.
    pub fn condition(&self) -> f64 {
        condition_number(&self.right)
    }
}

pub fn condition_number(m: &CMat) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Orthonormal basis of the null space of `m` (columns), by SVD.
pub fn null_space(m: &CMat, rel_tol: f64) -> CMat {
    let n = m.ncols();
    if m.nrows() == 0 {
        return CMat::identity(n, n);
    }
    // Pad to square so the full right singular basis is available.
    let rows = m.nrows().max(n);
    let mut padded = CMat::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| svd.singular_values[i] <= rel_tol * smax.max(f64::MIN_POSITIVE))
        .collect();
    let mut out = CMat::zeros(n, keep.len());
    for (c_idx, &i) in keep.iter().enumerate() {
        for r in 0..n {
            out[(r, c_idx)] = v_t[(i, r)].conj();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_matches_definition() {
        let a = CMat::from_row_slice(2, 2, &[cr(1.0), c(0.0, 2.0), cr(3.0), cr(4.0)]);
        let b = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        let k = kron(&a, &b);
        assert_eq!(k[(0, 3)], c(0.0, 2.0));
        assert_eq!(k[(3, 2)], cr(4.0));
        assert_eq!(k[(2, 1)], cr(3.0));
        assert_eq!(k[(0, 0)], cr(0.0));
    }

    #[test]
    fn vec_identity_kron() {
        // vec(A X B) = (Bᵀ ⊗ A) vec(X)
        let a = CMat::from_fn(3, 3, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let x = CMat::from_fn(3, 3, |i, j| c((i * j) as f64, 1.0 + i as f64));
        let b = CMat::from_fn(3, 3, |i, j| c(j as f64, -(i as f64)));
        let lhs = vec_of(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec_of(&x);
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn eigen_reconstructs() {
        let a = CMat::from_fn(6, 6, |i, j| {
            c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 * 0.3)
        });
        let e = Eigen::new(&a).unwrap();
        let d = CMat::from_diagonal(&CVec::from_vec(e.values.clone()));
        let rec = &e.right * d * &e.left;
        assert!((rec - &a).norm() < 1e-9 * a.norm());
        let id = &e.left * &e.right;
        assert!((id - CMat::identity(6, 6)).norm() < 1e-10);
    }

    #[test]
    fn null_space_of_rank_deficient() {
        let m = CMat::from_row_slice(1, 3, &[cr(1.0), cr(1.0), cr(0.0)]);
        let n = null_space(&m, 1e-12);
        assert_eq!(n.ncols(), 2);
        assert!((&m * &n).norm() < 1e-12);
    }
}
