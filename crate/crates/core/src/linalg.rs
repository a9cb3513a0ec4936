//! Small dense symmetric matrix functions.
//!
//! Everything here goes through a symmetric eigendecomposition `M = Q diag(λ) Qᵀ`,
//! which is accurate and cheap for the matrix sizes used by the SPD manifold.
//!
//! The decomposition is cyclic Jacobi rather than nalgebra's `SymmetricEigen`:
//! the latter builds 2×2 eigenvectors from `λ − a`, which cancels badly for
//! nearly diagonal input and makes `log(A^{-1/2} Y A^{-1/2})` noisy at the
//! 1e-7 relative level. Jacobi keeps eigenvectors accurate to roundoff.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoError, Result};

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry of `M - Mᵀ`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

const JACOBI_SWEEPS: usize = 64;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub struct Eigen {
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors as columns.
    pub eigenvectors: DMatrix<f64>,
}

impl Eigen {
    pub fn new(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut a = m;
        let mut v = DMatrix::identity(n, n);
        for _ in 0..JACOBI_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off == 0.0 || !off.is_finite() {
                break;
            }
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    // relative-accuracy threshold: the entry no longer moves the diagonal
                    if apq.abs() <= f64::EPSILON * 0.5 * (a[(p, p)] * a[(q, q)]).abs().sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = if zeta == 0.0 {
                        1.0
                    } else if zeta.abs() > 1e150 {
                        0.5 / zeta
                    } else {
                        zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[(k, p)], a[(k, q)]);
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        Eigen { eigenvalues: a.diagonal(), eigenvectors: v }
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let eig = Eigen::new(symmetrize(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    DVector::from_vec(vals)
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).iter().copied().fold(f64::INFINITY, f64::min)
}

/// Applies a scalar function to the spectrum of a symmetric matrix.
pub fn sym_apply(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = Eigen::new(symmetrize(m));
    let q = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    symmetrize(&(q * d * q.transpose()))
}

/// Like [`sym_apply`] but fails when any eigenvalue is not strictly positive.
pub fn spd_apply(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let eig = Eigen::new(symmetrize(m));
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(GeoError::Numerical(format!(
            "matrix is not positive definite (eigenvalues {:?})",
            eig.eigenvalues.as_slice()
        )));
    }
    let q = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    Ok(symmetrize(&(q * d * q.transpose())))
}

pub fn expm_sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    sym_apply(m, f64::exp)
}

pub fn logm_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_apply(m, f64::ln)
}

/// `(A^{1/2}, A^{-1/2})` from a single decomposition.
pub fn sqrt_pair(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = Eigen::new(symmetrize(a));
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(GeoError::Numerical(
            "square root of a matrix that is not positive definite".into(),
        ));
    }
    let q = &eig.eigenvectors;
    let s = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let si = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok((
        symmetrize(&(q * s * q.transpose())),
        symmetrize(&(q * si * q.transpose())),
    ))
}

pub fn inverse_spd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_apply(a, |l| 1.0 / l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0]));
        let e = expm_sym(&m);
        assert!((e[(0, 0)] - 1.0_f64.exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - (-2.0_f64).exp()).abs() < 1e-14);
        assert!(e[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn log_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(logm_spd(&m).is_err());
    }

    #[test]
    fn sqrt_pair_inverts() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]);
        let (s, si) = sqrt_pair(&a).unwrap();
        assert!((&s * &s - &a).norm() < 1e-13);
        assert!((&s * &si - DMatrix::identity(2, 2)).norm() < 1e-13);
    }

    #[test]
    fn nearly_diagonal_functions_keep_relative_accuracy() {
        // f(A)₀₁ = sin θ cos θ (f(λ₁) − f(λ₂)) with tan 2θ = 2b / (a − d)
        for b in [2.58e-4, 2.58e-4 + 1e-13, 1e-9f64] {
            let (a, d) = (7.389f64, 0.1353f64);
            let m = DMatrix::from_row_slice(2, 2, &[a, b, b, d]);
            let theta = 0.5 * (2.0 * b).atan2(a - d);
            let disc = ((a - d) * (a - d) / 4.0 + b * b).sqrt();
            let (l1, l2) = ((a + d) / 2.0 + disc, (a + d) / 2.0 - disc);
            let want = theta.sin() * theta.cos() * (l1.ln() - l2.ln());
            let got = logm_spd(&m).unwrap()[(0, 1)];
            assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn eigen_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, -0.5, 1.0, 3.0, 0.2, -0.5, 0.2, 1.0]);
        let e = Eigen::new(m.clone());
        let q = &e.eigenvectors;
        let rec = q * DMatrix::from_diagonal(&e.eigenvalues) * q.transpose();
        assert!((rec - &m).amax() < 1e-14);
        assert!((q.transpose() * q - DMatrix::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn asymmetry_detects_skew() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]);
        assert!((asymmetry(&m) - 0.2).abs() < 1e-15);
        assert_eq!(asymmetry(&symmetrize(&m)), 0.0);
    }
}
