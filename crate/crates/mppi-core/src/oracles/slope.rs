//! Log-log convergence-order estimation.

use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;

/// Least-squares line through (ln β, ln error) inside the fit window.
#[derive(Debug, Clone)]
pub struct SlopeFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Root-mean-square residual of the fit in log space.
    pub residual: T,
    pub used: usize,
    /// Points dropped for nonpositive or non-finite errors inside the
    /// window; callers should surface these as warnings.
    pub excluded: usize,
}

/// Fits the convergence order of `points = (β, error)` over
/// `window = [β_lo, β_hi]` (inclusive). Points with nonpositive or
/// non-finite error are excluded and counted; fewer than four usable points
/// is an error.
pub fn slope_fit<T: Scalar>(points: &[(T, T)], window: (T, T)) -> CoreResult<SlopeFit<T>> {
    let (w_lo, w_hi) = window;
    if !(w_lo > T::zero() && w_hi >= w_lo) {
        return Err(CoreError::ContractViolation(
            "fit window must satisfy 0 < lo <= hi",
        ));
    }
    let mut logs: Vec<(T, T)> = Vec::new();
    let mut excluded = 0usize;
    for &(beta, err) in points {
        if beta < w_lo || beta > w_hi {
            continue;
        }
        if err > T::zero() && err.is_finite() {
            logs.push((beta.ln(), err.ln()));
        } else {
            excluded += 1;
        }
    }
    let used = logs.len();
    if used < 4 {
        return Err(CoreError::InsufficientData(format!(
            "slope fit needs at least 4 usable points, found {used} ({excluded} excluded)"
        )));
    }
    let n = T::from_usize(used).unwrap();
    let mut sx = T::zero();
    let mut sy = T::zero();
    for &(x, y) in &logs {
        sx += x;
        sy += y;
    }
    let mx = sx / n;
    let my = sy / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for &(x, y) in &logs {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > T::zero()) {
        return Err(CoreError::InsufficientData(
            "all usable points share one abscissa".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = T::zero();
    for &(x, y) in &logs {
        let r = y - (intercept + slope * x);
        ss += r * r;
    }
    let residual = (ss / n).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
        used,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sweep(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..8)
            .map(|i| {
                let beta = 0.02 * 10f64.powf(i as f64 / 7.0);
                (beta, f(beta))
            })
            .collect()
    }

    #[test]
    fn exact_quadratic_power_law() {
        let fit = slope_fit(&sweep(|b| 3.0 * b * b), (0.02, 0.2)).unwrap();
        assert_relative_eq!(fit.slope, 2.0, epsilon = 1e-9);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.used, 8);
    }

    #[test]
    fn exact_quartic_power_law() {
        let fit = slope_fit(&sweep(|b| 0.5 * b.powi(4)), (0.02, 0.2)).unwrap();
        assert_relative_eq!(fit.slope, 4.0, epsilon = 1e-9);
        assert_relative_eq!(fit.intercept, 0.5f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn nonpositive_errors_are_excluded() {
        let mut pts = sweep(|b| b * b);
        pts[3].1 = 0.0;
        pts[5].1 = -1.0;
        let fit = slope_fit(&pts, (0.02, 0.2)).unwrap();
        assert_eq!(fit.used, 6);
        assert_eq!(fit.excluded, 2);
        assert_relative_eq!(fit.slope, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let pts = vec![(0.05, 1e-3), (0.1, 4e-3), (0.2, 1.6e-2)];
        assert!(matches!(
            slope_fit(&pts, (0.02, 0.2)),
            Err(CoreError::InsufficientData(_))
        ));
        // Window filtering can also starve the fit.
        let fit = slope_fit(&sweep(|b| b * b), (0.15, 0.2));
        assert!(matches!(fit, Err(CoreError::InsufficientData(_))));
    }
}
