//! Small dense symmetric linear algebra.
//!
//! Problem dimensions here are tiny (a handful of states and controls, per
//! step), so everything is plain row-major storage with O(n^3) kernels:
//! Cholesky factorization, cyclic Jacobi eigendecomposition, and an
//! implicit-shift QL eigensolver for symmetric tridiagonal matrices that
//! tracks only the first eigenvector components (all that Gaussian
//! quadrature construction needs).

use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;

/// Symmetric matrix in full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMat<T> {
    /// Builds from row-major entries; rejects asymmetric input.
    pub fn from_rows(n: usize, data: Vec<T>) -> CoreResult<Self> {
        if data.len() != n * n {
            return Err(CoreError::DimensionMismatch {
                context: "symmetric matrix storage",
                expected: n * n,
                got: data.len(),
            });
        }
        let tol = T::epsilon().sqrt();
        for i in 0..n {
            for j in (i + 1)..n {
                let a = data[i * n + j];
                let b = data[j * n + i];
                let scale = T::one() + a.abs() + b.abs();
                if !((a - b).abs() <= tol * scale) {
                    return Err(CoreError::CovarianceInvalid("matrix is not symmetric"));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        Self { n, data }
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = diag[i];
        }
        Self { n, data }
    }

    pub fn scaled(&self, factor: T) -> Self {
        let data = self.data.iter().map(|&v| v * factor).collect();
        Self { n: self.n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> &[T] {
        &self.data
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = T::zero();
            for j in 0..self.n {
                acc += self.data[i * self.n + j] * x[j];
            }
            y[i] = acc;
        }
    }

    /// x^T A x.
    pub fn quad_form(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                acc += x[i] * self.data[i * self.n + j] * x[j];
            }
        }
        acc
    }

    /// Lower-triangular Cholesky factor; fails unless positive definite.
    pub fn cholesky(&self) -> CoreResult<Cholesky<T>> {
        let n = self.n;
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.data[i * n + j];
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(sum > T::zero()) {
                        return Err(CoreError::CovarianceInvalid(
                            "matrix is not positive definite",
                        ));
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, l })
    }

    /// Eigendecomposition by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues (ascending) and eigenvectors as columns of a
    /// row-major matrix, so column `c` is `(v[c], v[n + c], ...)`.
    pub fn jacobi_eigen(&self) -> CoreResult<(Vec<T>, Vec<T>)> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut v = SymMat::<T>::identity(n).data;
        let tol = T::epsilon() * T::epsilon();
        for _sweep in 0..100 {
            let mut off = T::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
            let mut norm = T::zero();
            for i in 0..n {
                norm += a[i * n + i] * a[i * n + i];
            }
            if off <= tol * (norm + T::one()) {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&p, &q| {
                    a[p * n + p]
                        .partial_cmp(&a[q * n + q])
                        .expect("eigenvalues are finite")
                });
                let eigenvalues: Vec<T> = order.iter().map(|&p| a[p * n + p]).collect();
                let mut vectors = vec![T::zero(); n * n];
                for (c, &p) in order.iter().enumerate() {
                    for r in 0..n {
                        vectors[r * n + c] = v[r * n + p];
                    }
                }
                return Ok((eigenvalues, vectors));
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (T::c(2.0) * apq);
                    let t = {
                        let denom = theta.abs() + (theta * theta + T::one()).sqrt();
                        if theta >= T::zero() {
                            T::one() / denom
                        } else {
                            -T::one() / denom
                        }
                    };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        Err(CoreError::CovarianceInvalid(
            "Jacobi eigendecomposition did not converge",
        ))
    }

    /// Applies `f` to each eigenvalue and reassembles V f(D) V^T.
    fn eigen_map(&self, f: impl Fn(T) -> CoreResult<T>) -> CoreResult<Self> {
        let n = self.n;
        let (values, vectors) = self.jacobi_eigen()?;
        let mapped: CoreResult<Vec<T>> = values.into_iter().map(f).collect();
        let mapped = mapped?;
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = T::zero();
                for k in 0..n {
                    acc += vectors[i * n + k] * mapped[k] * vectors[j * n + k];
                }
                data[i * n + j] = acc;
            }
        }
        // Symmetrize away rounding drift so downstream factorizations see an
        // exactly symmetric matrix.
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = (data[i * n + j] + data[j * n + i]) * T::c(0.5);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Ok(Self { n, data })
    }

    /// Symmetric positive-definite square root.
    pub fn sqrt_sym(&self) -> CoreResult<Self> {
        self.eigen_map(|v| {
            if v > T::zero() {
                Ok(v.sqrt())
            } else {
                Err(CoreError::CovarianceInvalid(
                    "square root requires positive eigenvalues",
                ))
            }
        })
    }

    /// Symmetric inverse square root.
    pub fn inv_sqrt_sym(&self) -> CoreResult<Self> {
        self.eigen_map(|v| {
            if v > T::zero() {
                Ok(T::one() / v.sqrt())
            } else {
                Err(CoreError::CovarianceInvalid(
                    "inverse square root requires positive eigenvalues",
                ))
            }
        })
    }

    /// Symmetric inverse.
    pub fn inverse(&self) -> CoreResult<Self> {
        self.eigen_map(|v| {
            if v != T::zero() {
                Ok(T::one() / v)
            } else {
                Err(CoreError::CovarianceInvalid("matrix is singular"))
            }
        })
    }
}

/// Lower-triangular Cholesky factor of a positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// y = L x.
    pub fn mul_l_vec(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = T::zero();
            for j in 0..=i {
                acc += self.l[i * self.n + j] * x[j];
            }
            y[i] = acc;
        }
    }

    /// Solves A x = b in place (forward then backward substitution).
    pub fn solve_in_place(&self, b: &mut [T]) {
        debug_assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.l[i * self.n + j] * b[j];
            }
            b[i] = acc / self.l[i * self.n + i];
        }
        for i in (0..self.n).rev() {
            let mut acc = b[i];
            for j in (i + 1)..self.n {
                acc -= self.l[j * self.n + i] * b[j];
            }
            b[i] = acc / self.l[i * self.n + i];
        }
    }

    /// x^T A^{-1} x.
    pub fn inv_quad_form(&self, x: &[T]) -> T {
        // Forward substitution gives z = L^{-1} x, and x^T A^{-1} x = |z|^2.
        let mut acc = T::zero();
        let mut z = vec![T::zero(); self.n];
        for i in 0..self.n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.l[i * self.n + j] * z[j];
            }
            z[i] = s / self.l[i * self.n + i];
            acc += z[i] * z[i];
        }
        acc
    }

    /// ln det A.
    pub fn log_det(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            acc += self.l[i * self.n + i].ln();
        }
        acc + acc
    }
}

/// Eigenvalues and first eigenvector components of a symmetric tridiagonal
/// matrix, by implicit-shift QL iteration.
///
/// `diag` holds the n diagonal entries; `offdiag` holds the n-1 subdiagonal
/// entries. Returns `(eigenvalues, first_components)` sorted by ascending
/// eigenvalue; `first_components[i]` is the first entry of the unit
/// eigenvector for `eigenvalues[i]`.
pub fn symm_tridiag_eigen<T: Scalar>(diag: &[T], offdiag: &[T]) -> CoreResult<(Vec<T>, Vec<T>)> {
    let n = diag.len();
    if n == 0 {
        return Err(CoreError::ContractViolation(
            "tridiagonal eigensolver needs at least one row",
        ));
    }
    if offdiag.len() + 1 != n {
        return Err(CoreError::DimensionMismatch {
            context: "tridiagonal off-diagonal",
            expected: n - 1,
            got: offdiag.len(),
        });
    }
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    e[..n - 1].copy_from_slice(offdiag);
    let mut z = vec![T::zero(); n];
    z[0] = T::one();

    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(CoreError::IntegrationBudget(
                    "tridiagonal QL iteration did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (T::c(2.0) * e[l]);
            let mut r = g.hypot(T::one());
            let sign_r = if g >= T::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + T::c(2.0) * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("eigenvalues are finite"));
    let eigenvalues: Vec<T> = order.iter().map(|&i| d[i]).collect();
    let first: Vec<T> = order.iter().map(|&i| z[i]).collect();
    Ok((eigenvalues, first))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_solves_linear_system() {
        let a = SymMat::from_rows(2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let chol = a.cholesky().unwrap();
        let mut b = vec![10.0, 8.0];
        chol.solve_in_place(&mut b);
        // A [1.75, 1.5]^T = [10, 8]^T
        assert_relative_eq!(b[0], 1.75, max_relative = 1e-12);
        assert_relative_eq!(b[1], 1.5, max_relative = 1e-12);
        assert_relative_eq!(chol.log_det(), (8.0f64).ln(), max_relative = 1e-12);
        assert_relative_eq!(
            chol.inv_quad_form(&[10.0, 8.0]),
            10.0 * 1.75 + 8.0 * 1.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SymMat::from_rows(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            a.cholesky(),
            Err(CoreError::CovarianceInvalid(_))
        ));
    }

    #[test]
    fn symmetry_is_enforced() {
        assert!(SymMat::from_rows(2, vec![1.0, 0.5, 0.1, 1.0]).is_err());
    }

    #[test]
    fn tridiag_eigen_matches_known_spectrum() {
        // [[0, 1], [1, 0]] has eigenvalues -1, 1 with first components
        // 1/sqrt(2) up to sign.
        let (values, first) = symm_tridiag_eigen::<f64>(&[0.0, 0.0], &[1.0]).unwrap();
        assert_relative_eq!(values[0], -1.0, max_relative = 1e-12);
        assert_relative_eq!(values[1], 1.0, max_relative = 1e-12);
        let inv_sqrt2 = 0.5f64.sqrt();
        assert_relative_eq!(first[0].abs(), inv_sqrt2, max_relative = 1e-12);
        assert_relative_eq!(first[1].abs(), inv_sqrt2, max_relative = 1e-12);
    }

    #[test]
    fn jacobi_eigen_diagonalizes() {
        let a = SymMat::from_rows(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let (values, vectors) = a.jacobi_eigen().unwrap();
        assert_relative_eq!(values[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(values[1], 3.0, max_relative = 1e-12);
        // Columns are unit eigenvectors.
        for c in 0..2 {
            let norm = vectors[c] * vectors[c] + vectors[2 + c] * vectors[2 + c];
            assert_relative_eq!(norm, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn sqrt_and_inverse_round_trip() {
        let a = SymMat::from_rows(2, vec![4.0, 1.0, 1.0, 9.0]).unwrap();
        let root = a.sqrt_sym().unwrap();
        let mut x = [0.3, -0.7];
        let mut y = [0.0, 0.0];
        let mut z = [0.0, 0.0];
        root.mul_vec(&x, &mut y);
        root.mul_vec(&y, &mut z);
        a.mul_vec(&x, &mut y);
        assert_relative_eq!(z[0], y[0], max_relative = 1e-10);
        assert_relative_eq!(z[1], y[1], max_relative = 1e-10);

        let inv = a.inverse().unwrap();
        inv.mul_vec(&y, &mut z);
        x = [0.3, -0.7];
        assert_relative_eq!(z[0], x[0], max_relative = 1e-10);
        assert_relative_eq!(z[1], x[1], max_relative = 1e-10);

        let inv_root = a.inv_sqrt_sym().unwrap();
        let prod_should_be_inv = |v: &[f64; 2]| {
            let mut t1 = [0.0, 0.0];
            let mut t2 = [0.0, 0.0];
            inv_root.mul_vec(v, &mut t1);
            inv_root.mul_vec(&t1, &mut t2);
            t2
        };
        let got = prod_should_be_inv(&[1.0, 0.0]);
        assert_relative_eq!(got[0], inv.get(0, 0), max_relative = 1e-10);
        assert_relative_eq!(got[1], inv.get(1, 0), max_relative = 1e-10);
    }
}
