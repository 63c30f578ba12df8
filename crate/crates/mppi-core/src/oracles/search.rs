//! Reference minimizers: exhaustive grid scan plus stencil refinement for
//! the noise-free and expectation objectives, and robust scalar line search
//! used by the dynamic-programming oracle.

use rayon::prelude::*;

use crate::error::{CoreError, CoreResult};
use crate::oracles::quadrature::{gauss_hermite, tensor_product};
use crate::problem::OcpInstance;
use crate::scalar::Scalar;

/// Axis-aligned search region.
#[derive(Debug, Clone)]
pub struct SearchBox<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Scalar> SearchBox<T> {
    pub fn cube(dim: usize, lo: T, hi: T) -> Self {
        Self {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    fn validate(&self, dim: usize) -> CoreResult<()> {
        if self.lo.len() != dim || self.hi.len() != dim {
            return Err(CoreError::DimensionMismatch {
                context: "search box",
                expected: dim,
                got: self.lo.len(),
            });
        }
        for (l, h) in self.lo.iter().zip(self.hi.iter()) {
            if !(l < h) {
                return Err(CoreError::ContractViolation(
                    "search box must have positive extent",
                ));
            }
        }
        Ok(())
    }
}

/// Certified reference solution of one of the reference problems.
#[derive(Debug, Clone)]
pub struct OracleSolution<T> {
    pub minimizer: Vec<T>,
    pub value: T,
    /// Refining further moves the minimizer by less than this.
    pub certified_tol: T,
    /// First-stage policy samples (x₁, u₁*(x₁)) when the method produces a
    /// policy (dynamic programming); empty otherwise.
    pub policy: Vec<(T, T)>,
    pub meta: OracleMeta,
}

/// How the solution was computed.
#[derive(Debug, Clone)]
pub struct OracleMeta {
    pub grid_points_per_axis: usize,
    pub refinement_rounds: usize,
    pub quadrature_order: Option<usize>,
}

/// Dense grid scan over the box followed by shrinking-stencil refinement.
///
/// The initial scan guards against the secondary basins these objectives are
/// built to exhibit; refinement halves the stencil spacing each round and is
/// free to leave the box. An argmin on the scan boundary aborts instead of
/// certifying a fake interior optimum. The certified tolerance is the final
/// spacing floored at the sqrt-epsilon position noise of a quadratic basin.
pub fn grid_refine_min<T: Scalar, F>(
    f: F,
    search: &SearchBox<T>,
    points_per_axis: usize,
    refine_rounds: usize,
) -> CoreResult<(Vec<T>, T, T)>
where
    F: Fn(&[T]) -> CoreResult<T> + Sync,
{
    let dim = search.lo.len();
    if points_per_axis < 3 {
        return Err(CoreError::ContractViolation(
            "grid scan needs at least three points per axis",
        ));
    }
    // Exhaustive scan.
    let total = points_per_axis.pow(dim as u32);
    let spacing: Vec<T> = (0..dim)
        .map(|d| {
            (search.hi[d] - search.lo[d]) / T::from_usize(points_per_axis - 1).unwrap()
        })
        .collect();
    let decode = |flat: usize| -> (Vec<usize>, Vec<T>) {
        let mut rest = flat;
        let mut idx = vec![0usize; dim];
        for d in (0..dim).rev() {
            idx[d] = rest % points_per_axis;
            rest /= points_per_axis;
        }
        let point: Vec<T> = (0..dim)
            .map(|d| search.lo[d] + spacing[d] * T::from_usize(idx[d]).unwrap())
            .collect();
        (idx, point)
    };
    let scanned: CoreResult<Vec<(usize, T)>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let (_, point) = decode(flat);
            f(&point).map(|v| (flat, v))
        })
        .collect();
    let scanned = scanned?;
    let (best_flat, mut best_val) = scanned
        .iter()
        .filter(|(_, v)| v.is_finite())
        .fold((usize::MAX, T::infinity()), |acc, &(i, v)| {
            if v < acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    if best_flat == usize::MAX {
        return Err(CoreError::NoValidSamples);
    }
    let (best_idx, mut best) = decode(best_flat);
    for (d, &i) in best_idx.iter().enumerate() {
        if i == 0 || i + 1 == points_per_axis {
            return Err(CoreError::BoundaryHit(format!(
                "scan argmin on axis {d} edge at {}; enlarge the box [{}, {}]",
                best[d], search.lo[d], search.hi[d]
            )));
        }
    }

    // Shrinking full-stencil refinement around the incumbent.
    let mut h = spacing.clone();
    let offsets = 3usize.pow(dim as u32);
    let mut candidate = vec![T::zero(); dim];
    for _round in 0..refine_rounds {
        let mut improved = true;
        while improved {
            improved = false;
            for code in 0..offsets {
                if code == offsets / 2 {
                    continue;
                }
                let mut rest = code;
                for d in (0..dim).rev() {
                    let o = rest % 3;
                    rest /= 3;
                    let shift = match o {
                        0 => -h[d],
                        1 => T::zero(),
                        _ => h[d],
                    };
                    candidate[d] = best[d] + shift;
                }
                let val = f(&candidate)?;
                if val < best_val {
                    best_val = val;
                    best.copy_from_slice(&candidate);
                    improved = true;
                }
            }
        }
        for v in &mut h {
            *v = *v * T::c(0.5);
        }
    }

    let final_h = h.iter().fold(T::zero(), |a, &b| if b > a { b } else { a });
    let mut norm = T::one();
    for &b in &best {
        norm += b.abs();
    }
    // Value-only minimization resolves the argmin of a basin with value V no
    // better than ~sqrt(eps·V), whatever the final stencil spacing.
    let floor = (T::epsilon().sqrt() * norm)
        .max((T::epsilon() * best_val.abs()).sqrt() * T::c(2.0));
    let certified = if final_h > floor { final_h } else { floor };
    Ok((best, best_val, certified))
}

/// Reference solution of the noise-free problem: exhaustive grid scan of
/// J(·, 0) plus refinement.
pub fn det_ocp_oracle<T: Scalar>(
    inst: &OcpInstance<T>,
    search: &SearchBox<T>,
    points_per_axis: usize,
    refine_rounds: usize,
) -> CoreResult<OracleSolution<T>> {
    let dim = inst.control_dim();
    if dim > 4 {
        return Err(CoreError::ContractViolation(
            "exhaustive search supports at most four control dimensions",
        ));
    }
    search.validate(dim)?;
    let zeros = vec![T::zero(); inst.noise_dim()];
    let objective = |u: &[T]| inst.overall_cost(u, &zeros);
    let (minimizer, value, certified_tol) =
        grid_refine_min(objective, search, points_per_axis, refine_rounds)?;
    Ok(OracleSolution {
        minimizer,
        value,
        certified_tol,
        policy: Vec::new(),
        meta: OracleMeta {
            grid_points_per_axis: points_per_axis,
            refinement_rounds: refine_rounds,
            quadrature_order: None,
        },
    })
}

/// Reference solution of the noise-averaged open-loop problem: minimizes the
/// tensor-quadrature expectation of J(U, W) over the instance's noise law.
///
/// The search runs twice, at half order and at the requested order; the
/// minimizer drift between the two runs enters the certified tolerance, so
/// doubling the order again moves the result by less than that bound.
pub fn ols_ocp_oracle<T: Scalar>(
    inst: &OcpInstance<T>,
    quadrature_order: usize,
    search: &SearchBox<T>,
    points_per_axis: usize,
    refine_rounds: usize,
) -> CoreResult<OracleSolution<T>> {
    let dim = inst.control_dim();
    let noise_dim = inst.noise_dim();
    if noise_dim > 3 {
        return Err(CoreError::ContractViolation(
            "tensor quadrature supports at most three noise dimensions",
        ));
    }
    search.validate(dim)?;
    let minimize_at = |order: usize| -> CoreResult<(Vec<T>, T, T)> {
        let rule = gauss_hermite::<T>(order)?;
        // Transform the standard-normal tensor nodes through the instance's
        // noise covariance once, up front.
        let nodes: Vec<(Vec<T>, T)> = tensor_product(&rule, noise_dim)
            .into_iter()
            .map(|(z, w)| {
                let mut noise = vec![T::zero(); noise_dim];
                inst.sigma.transform_standard(&z, &mut noise);
                (noise, w)
            })
            .collect();
        let objective = |u: &[T]| -> CoreResult<T> {
            // One scratch per grid point, amortized over the whole node loop.
            let mut scratch = crate::problem::RolloutScratch::new(inst);
            let mut acc = T::zero();
            for (noise, weight) in &nodes {
                acc += *weight * inst.overall_cost_with(u, noise, &mut scratch)?;
            }
            Ok(acc)
        };
        grid_refine_min(objective, search, points_per_axis, refine_rounds)
    };
    let (coarse, _, _) = minimize_at((quadrature_order / 2).max(2))?;
    let (minimizer, value, refine_tol) = minimize_at(quadrature_order)?;
    let drift = minimizer
        .iter()
        .zip(coarse.iter())
        .map(|(&a, &b)| (a - b).abs())
        .fold(T::zero(), |acc, d| acc.max(d));
    Ok(OracleSolution {
        minimizer,
        value,
        certified_tol: refine_tol.max(drift),
        policy: Vec::new(),
        meta: OracleMeta {
            grid_points_per_axis: points_per_axis,
            refinement_rounds: refine_rounds,
            quadrature_order: Some(quadrature_order),
        },
    })
}

/// Golden-section minimum of a unimodal function on [lo, hi].
pub fn golden_min<T: Scalar>(
    mut f: impl FnMut(T) -> T,
    lo: T,
    hi: T,
    tol: T,
) -> (T, T) {
    let inv_phi = (T::c(5.0).sqrt() - T::one()) * T::c(0.5);
    let mut a = lo;
    let mut b = hi;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = (a + b) * T::c(0.5);
    let fm = f(mid);
    if fc < fd && fc < fm {
        (c, fc)
    } else if fd < fm {
        (d, fd)
    } else {
        (mid, fm)
    }
}

/// Scalar minimization robust to multiple basins: coarse scan over the
/// interval, golden-section polish around the best cell, and automatic
/// doubling of the interval whenever the minimizer lands within 5% of an
/// edge. Gives up with a boundary error when the cap is reached.
pub fn expanding_scalar_min<T: Scalar>(
    mut f: impl FnMut(T) -> T,
    init_lo: T,
    init_hi: T,
    scan_points: usize,
    tol: T,
    max_expansions: usize,
) -> CoreResult<(T, T)> {
    let mut lo = init_lo;
    let mut hi = init_hi;
    for _ in 0..=max_expansions {
        let n = scan_points.max(8);
        let h = (hi - lo) / T::from_usize(n - 1).unwrap();
        let mut best_i = 0usize;
        let mut best_v = T::infinity();
        for i in 0..n {
            let x = lo + h * T::from_usize(i).unwrap();
            let v = f(x);
            if v < best_v {
                best_v = v;
                best_i = i;
            }
        }
        let edge_margin = ((hi - lo) * T::c(0.05)).max(h);
        let best_x = lo + h * T::from_usize(best_i).unwrap();
        if best_x - lo < edge_margin {
            let width = hi - lo;
            lo = lo - width;
            continue;
        }
        if hi - best_x < edge_margin {
            let width = hi - lo;
            hi = hi + width;
            continue;
        }
        let a = best_x - h;
        let b = best_x + h;
        return Ok(golden_min(f, a, b, tol));
    }
    Err(CoreError::BoundaryHit(format!(
        "scalar minimizer still edge-bound after {max_expansions} interval doublings; \
         final interval [{lo}, {hi}]"
    )))
}
