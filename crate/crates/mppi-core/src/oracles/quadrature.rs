//! Gaussian quadrature rules built from the Jacobi-matrix eigenproblem.

use crate::error::{CoreError, CoreResult};
use crate::linalg::symm_tridiag_eigen;
use crate::scalar::Scalar;

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ weight · f(node).
    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(self.weights.iter()) {
            acc += w * f(x);
        }
        acc
    }
}

/// Gauss rule for expectations under the standard normal: Σ weights = 1 and
/// polynomials up to degree 2Q−1 are integrated exactly.
pub fn gauss_hermite<T: Scalar>(q: usize) -> CoreResult<QuadratureRule<T>> {
    if q == 0 {
        return Err(CoreError::ContractViolation(
            "quadrature order must be at least 1",
        ));
    }
    let diag = vec![T::zero(); q];
    let offdiag: Vec<T> = (1..q).map(|k| T::from_usize(k).unwrap().sqrt()).collect();
    let (nodes, first) = symm_tridiag_eigen(&diag, &offdiag)?;
    let weights = first.iter().map(|&z| z * z).collect();
    Ok(QuadratureRule { nodes, weights })
}

/// Gauss rule on [−1, 1] with unit weight function: Σ weights = 2.
pub fn gauss_legendre<T: Scalar>(q: usize) -> CoreResult<QuadratureRule<T>> {
    if q == 0 {
        return Err(CoreError::ContractViolation(
            "quadrature order must be at least 1",
        ));
    }
    let diag = vec![T::zero(); q];
    let offdiag: Vec<T> = (1..q)
        .map(|k| {
            let k = T::from_usize(k).unwrap();
            k / (T::c(4.0) * k * k - T::one()).sqrt()
        })
        .collect();
    let (nodes, first) = symm_tridiag_eigen(&diag, &offdiag)?;
    let weights = first.iter().map(|&z| T::c(2.0) * z * z).collect();
    Ok(QuadratureRule { nodes, weights })
}

/// Full tensor product of the same rule over `dims` dimensions, materialized
/// as (node vector, weight) pairs in lexicographic node order.
pub fn tensor_product<T: Scalar>(rule: &QuadratureRule<T>, dims: usize) -> Vec<(Vec<T>, T)> {
    let q = rule.len();
    let total = q.pow(dims as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims];
    for _ in 0..total {
        let mut node = Vec::with_capacity(dims);
        let mut weight = T::one();
        for &i in &idx {
            node.push(rule.nodes[i]);
            weight *= rule.weights[i];
        }
        out.push((node, weight));
        for d in (0..dims).rev() {
            idx[d] += 1;
            if idx[d] < q {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}
