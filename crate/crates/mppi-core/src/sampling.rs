//! Block-diagonal Gaussian trajectory noise: reproducible seeded batches,
//! exact densities, and the importance-sampling cost correction.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{CoreError, CoreResult};
use crate::linalg::{Cholesky, SymMat};
use crate::scalar::Scalar;

/// Per-step noise covariance lifted block-diagonally over the horizon.
///
/// The lifted matrix diag(Σ, ..., Σ) scaled by `scale` is never materialized;
/// every operation works blockwise through the cached Cholesky factor of the
/// per-step Σ. `scale` plays the role of the squared shrink factor applied by
/// the iterative solver, so it must stay strictly positive.
#[derive(Debug, Clone)]
pub struct CovarianceSpec<T> {
    per_step: SymMat<T>,
    horizon: usize,
    scale: T,
    chol: Cholesky<T>,
}

impl<T: Scalar> CovarianceSpec<T> {
    pub fn new(per_step: SymMat<T>, horizon: usize, scale: T) -> CoreResult<Self> {
        if horizon == 0 {
            return Err(CoreError::ContractViolation("horizon must be at least 1"));
        }
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(CoreError::CovarianceInvalid(
                "covariance scale must be finite and strictly positive",
            ));
        }
        let chol = per_step.cholesky()?;
        Ok(Self {
            per_step,
            horizon,
            scale,
            chol,
        })
    }

    /// Identity per-step covariance.
    pub fn identity(n_w: usize, horizon: usize) -> CoreResult<Self> {
        Self::new(SymMat::identity(n_w), horizon, T::one())
    }

    /// Same per-step covariance with a different scale; reuses the factor.
    pub fn with_scale(&self, scale: T) -> CoreResult<Self> {
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(CoreError::CovarianceInvalid(
                "covariance scale must be finite and strictly positive",
            ));
        }
        Ok(Self {
            per_step: self.per_step.clone(),
            horizon: self.horizon,
            scale,
            chol: self.chol.clone(),
        })
    }

    pub fn per_step(&self) -> &SymMat<T> {
        &self.per_step
    }

    pub fn n_w(&self) -> usize {
        self.per_step.dim()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    /// Length of one lifted noise trajectory.
    pub fn total_dim(&self) -> usize {
        self.horizon * self.per_step.dim()
    }

    /// Maps i.i.d. standard normals to one N(0, scale · Σ̄) trajectory.
    pub fn transform_standard(&self, z: &[T], out: &mut [T]) {
        let n_w = self.per_step.dim();
        debug_assert_eq!(z.len(), self.total_dim());
        debug_assert_eq!(out.len(), self.total_dim());
        let root_scale = self.scale.sqrt();
        for k in 0..self.horizon {
            let block = k * n_w;
            self.chol
                .mul_l_vec(&z[block..block + n_w], &mut out[block..block + n_w]);
            for v in &mut out[block..block + n_w] {
                *v *= root_scale;
            }
        }
    }

    fn check_trajectory_len(&self, len: usize, context: &'static str) -> CoreResult<()> {
        if len != self.total_dim() {
            return Err(CoreError::DimensionMismatch {
                context,
                expected: self.total_dim(),
                got: len,
            });
        }
        Ok(())
    }
}

/// Batch of M noise trajectories with recorded seed lineage.
///
/// Sample m is generated from (master seed, stream m) alone, so the batch is
/// identical no matter how many workers filled it.
#[derive(Debug, Clone)]
pub struct SampleBatch<T> {
    dim: usize,
    noises: Vec<T>,
    master_seed: u64,
}

impl<T: Scalar> SampleBatch<T> {
    /// Wraps externally supplied rows (length must be a multiple of `dim`);
    /// used for audits and constructed test batches.
    pub fn from_raw(dim: usize, noises: Vec<T>, master_seed: u64) -> Self {
        assert!(dim > 0 && noises.len() % dim == 0);
        Self {
            dim,
            noises,
            master_seed,
        }
    }

    pub fn count(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.noises.len() / self.dim
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn noise(&self, m: usize) -> &[T] {
        &self.noises[m * self.dim..(m + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.noises.chunks_exact(self.dim)
    }

    pub fn par_iter(&self) -> impl IndexedParallelIterator<Item = &[T]> + '_ {
        self.noises.par_chunks_exact(self.dim)
    }

    /// Audit dump, one row per noise entry: m, k, component, value.
    pub fn write_csv<W: io::Write>(&self, n_w: usize, mut out: W) -> io::Result<()> {
        writeln!(out, "m,k,component,value")?;
        for m in 0..self.count() {
            let row = self.noise(m);
            for (i, v) in row.iter().enumerate() {
                writeln!(out, "{},{},{},{}", m, i / n_w, i % n_w, v)?;
            }
        }
        Ok(())
    }
}

/// Draws M trajectories distributed N(0, scale · Σ̄).
///
/// Each sample uses its own counter-based stream of the seeded generator, so
/// the batch content depends only on (seed, M, cov) and samples can be filled
/// concurrently in any order.
pub fn draw_batch<T: Scalar>(
    cov: &CovarianceSpec<T>,
    samples: usize,
    seed: u64,
) -> CoreResult<SampleBatch<T>>
where
    StandardNormal: Distribution<T>,
{
    if samples == 0 {
        return Err(CoreError::ContractViolation(
            "batch needs at least one sample",
        ));
    }
    let dim = cov.total_dim();
    let mut noises = vec![T::zero(); samples * dim];
    noises
        .par_chunks_exact_mut(dim)
        .enumerate()
        .for_each(|(m, row)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(m as u64);
            let mut z = vec![T::zero(); dim];
            for v in &mut z {
                *v = rng.sample(StandardNormal);
            }
            cov.transform_standard(&z, row);
        });
    Ok(SampleBatch {
        dim,
        noises,
        master_seed: seed,
    })
}

/// Exact log-density of W under N(mean, scale · Σ̄), computed blockwise.
pub fn log_density<T: Scalar>(
    cov: &CovarianceSpec<T>,
    mean: &[T],
    w: &[T],
) -> CoreResult<T> {
    cov.check_trajectory_len(mean.len(), "log-density mean")?;
    cov.check_trajectory_len(w.len(), "log-density sample")?;
    let n_w = cov.n_w();
    let half = T::c(0.5);
    let log_two_pi = T::c(std::f64::consts::TAU.ln());
    // ln det(scale · Σ) = n_w ln scale + ln det Σ per block.
    let block_log_det = T::from_usize(n_w).unwrap() * cov.scale.ln() + cov.chol.log_det();
    let mut acc = T::zero();
    let mut diff = vec![T::zero(); n_w];
    for k in 0..cov.horizon {
        let block = k * n_w;
        for i in 0..n_w {
            diff[i] = w[block + i] - mean[block + i];
        }
        let quad = cov.chol.inv_quad_form(&diff) / cov.scale;
        acc -= half * (T::from_usize(n_w).unwrap() * log_two_pi + block_log_det + quad);
    }
    Ok(acc)
}

/// Cost correction λ · Wᵀ (scale·Σ̄)⁻¹ Û for sampling around a nonzero mean.
///
/// With λ and the covariance both carrying the same squared shrink factor the
/// scale cancels, so along the solver's schedule this stays the unshrunk
/// λ₀ · Wᵀ Σ̄₀⁻¹ Û.
pub fn importance_correction<T: Scalar>(
    cov: &CovarianceSpec<T>,
    lambda: T,
    u_hat: &[T],
    w: &[T],
) -> CoreResult<T> {
    let vec = correction_functional(cov, lambda, u_hat)?;
    cov.check_trajectory_len(w.len(), "correction noise")?;
    let mut acc = T::zero();
    for (a, b) in w.iter().zip(vec.iter()) {
        acc += *a * *b;
    }
    Ok(acc)
}

/// Precomputed linear functional g = (λ/scale) · Σ̄⁻¹ Û, so the correction
/// for a sample is just ⟨W, g⟩. Shared by the solver's inner loop.
pub fn correction_functional<T: Scalar>(
    cov: &CovarianceSpec<T>,
    lambda: T,
    u_hat: &[T],
) -> CoreResult<Vec<T>> {
    if !(lambda > T::zero()) {
        return Err(CoreError::ContractViolation(
            "temperature must be strictly positive",
        ));
    }
    cov.check_trajectory_len(u_hat.len(), "correction mean")?;
    let n_w = cov.n_w();
    let factor = lambda / cov.scale;
    let mut out = u_hat.to_vec();
    for k in 0..cov.horizon {
        let block = k * n_w;
        cov.chol.solve_in_place(&mut out[block..block + n_w]);
        for v in &mut out[block..block + n_w] {
            *v *= factor;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_cov(sigma2: f64, horizon: usize, scale: f64) -> CovarianceSpec<f64> {
        CovarianceSpec::new(SymMat::from_diag(&[sigma2]), horizon, scale).unwrap()
    }

    #[test]
    fn zero_scale_is_rejected() {
        let err = CovarianceSpec::new(SymMat::from_diag(&[1.0]), 1, 0.0).unwrap_err();
        assert!(matches!(err, CoreError::CovarianceInvalid(_)));
    }

    #[test]
    fn standard_normal_log_density_at_origin() {
        let cov = scalar_cov(1.0, 1, 1.0);
        let val = log_density(&cov, &[0.0], &[0.0]).unwrap();
        assert_relative_eq!(val, -0.5 * std::f64::consts::TAU.ln(), epsilon = 1e-12);
        assert_relative_eq!(val, -0.9189385332046727, epsilon = 1e-9);
    }

    #[test]
    fn log_density_translation_invariance() {
        let cov = scalar_cov(1.0, 2, 1.0);
        let a = log_density(&cov, &[0.7, -0.2], &[0.7, -0.2]).unwrap();
        let b = log_density(&cov, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn wide_scalar_log_density() {
        let cov = scalar_cov(4.0, 1, 1.0);
        let val = log_density(&cov, &[0.0], &[2.0]).unwrap();
        let expected = -0.5 * (8.0 * std::f64::consts::PI).ln() - 0.5;
        assert_relative_eq!(val, expected, epsilon = 1e-12);
        assert_relative_eq!(val, -2.112086, epsilon = 1e-6);
    }

    #[test]
    fn correction_matches_hand_value() {
        let cov = scalar_cov(1.0, 1, 1.0);
        let val = importance_correction(&cov, 2.0, &[3.0], &[0.5]).unwrap();
        assert_relative_eq!(val, 3.0, epsilon = 1e-12);
        assert_eq!(
            importance_correction(&cov, 2.0, &[0.0], &[0.5]).unwrap(),
            0.0
        );
        assert_eq!(
            importance_correction(&cov, 2.0, &[3.0], &[0.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn correction_scale_cancels() {
        // λ = β²λ₀ against scale β² must equal λ₀ against scale 1.
        let beta2 = 0.25;
        let base = scalar_cov(1.5, 2, 1.0);
        let shrunk = base.with_scale(beta2).unwrap();
        let u = [0.4, -0.9];
        let w = [1.1, 0.3];
        let a = importance_correction(&shrunk, beta2 * 2.0, &u, &w).unwrap();
        let b = importance_correction(&base, 2.0, &u, &w).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn draw_batch_is_deterministic() {
        let cov = scalar_cov(1.0, 3, 1.0);
        let a = draw_batch(&cov, 4, 7).unwrap();
        let b = draw_batch(&cov, 4, 7).unwrap();
        for m in 0..4 {
            assert_eq!(a.noise(m), b.noise(m));
        }
        let c = draw_batch(&cov, 4, 8).unwrap();
        assert_ne!(a.noise(0), c.noise(0));
    }

    #[test]
    fn batch_prefix_is_stable_under_growth() {
        let cov = scalar_cov(1.0, 2, 1.0);
        let small = draw_batch(&cov, 3, 11).unwrap();
        let large = draw_batch(&cov, 64, 11).unwrap();
        for m in 0..3 {
            assert_eq!(small.noise(m), large.noise(m));
        }
    }

    #[test]
    fn csv_dump_has_expected_shape() {
        let cov = scalar_cov(1.0, 2, 1.0);
        let batch = draw_batch(&cov, 2, 5).unwrap();
        let mut buf = Vec::new();
        batch.write_csv(1, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("m,k,component,value"));
        assert_eq!(lines.count(), 4);
        assert!(text.contains("1,1,0,"));
    }
}
