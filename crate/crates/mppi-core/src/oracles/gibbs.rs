//! Exact (quadrature) evaluation of the softmin-weighted noise mean and the
//! normalized weight density, free of Monte Carlo error.

use crate::error::{CoreError, CoreResult};
use crate::oracles::quadrature::gauss_legendre;
use crate::oracles::search::SearchBox;
use crate::problem::{ControlWeight, OcpInstance, RolloutScratch};
use crate::scalar::Scalar;

/// Integration controls for the exact weighted-mean evaluation.
#[derive(Debug, Clone)]
pub struct GibbsParams<T> {
    /// Region scanned for weight mass; must contain it all.
    pub search_box: SearchBox<T>,
    /// Certified absolute tolerance on each mean component.
    pub abs_tol: T,
    /// Scan resolution per axis used to localize the mass.
    pub scan_points: usize,
    /// Cap on composite panels per axis before giving up.
    pub max_panels: usize,
}

impl<T: Scalar> GibbsParams<T> {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            search_box: SearchBox::cube(dim, T::c(-3.0), T::c(3.0)),
            abs_tol: T::c(1e-10),
            scan_points: if dim == 1 { 4001 } else { 301 },
            max_panels: if dim == 1 { 4096 } else { 256 },
        }
    }
}

/// J(W, 0) as a reusable closure; constant control weights use the
/// allocation-free path-cost route.
fn value_closure<'a, T: Scalar>(
    inst: &'a OcpInstance<T>,
) -> impl FnMut(&[T]) -> CoreResult<T> + 'a {
    let constant_r = match inst.cost.control_weight() {
        ControlWeight::Constant(r) => Some(r.clone()),
        ControlWeight::StateDependent(_) => None,
    };
    let mut scratch = RolloutScratch::new(inst);
    let zeros = vec![T::zero(); inst.noise_dim()];
    let n_u = inst.dynamics.n_u;
    move |w: &[T]| -> CoreResult<T> {
        match &constant_r {
            Some(r) => {
                let path = inst.path_cost_with(w, &mut scratch)?;
                let mut quad = T::zero();
                for k in 0..inst.horizon {
                    quad += r.quad_form(&w[k * n_u..(k + 1) * n_u]);
                }
                Ok(path + T::c(0.5) * quad)
            }
            None => inst.overall_cost(w, &zeros),
        }
    }
}

/// Exact weighted mean E[W] under weights ∝ exp(−J(W,0)/(β²λ₀)).
///
/// The mass is first localized by a dense scan: only the region where
/// J − J_min stays below 95% of the exponent underflow budget contributes
/// (everything outside carries weight < 1e−290 of the peak). Composite
/// Gauss-Legendre panels on that region are then doubled until successive
/// mean estimates agree to the absolute tolerance.
pub fn gibbs_mean<T: Scalar>(
    inst: &OcpInstance<T>,
    beta: T,
    lambda0: T,
    params: &GibbsParams<T>,
) -> CoreResult<Vec<T>> {
    let dim = inst.control_dim();
    if dim == 0 || dim > 2 {
        return Err(CoreError::ContractViolation(
            "exact weighted mean supports one or two control dimensions",
        ));
    }
    if !(beta > T::zero()) || !(lambda0 > T::zero()) {
        return Err(CoreError::ContractViolation(
            "shrink factor and base temperature must be strictly positive",
        ));
    }
    if params.search_box.lo.len() != dim {
        return Err(CoreError::DimensionMismatch {
            context: "integration box",
            expected: dim,
            got: params.search_box.lo.len(),
        });
    }
    let lambda_eff = beta * beta * lambda0;
    let budget = -T::min_positive_value().ln() * T::c(0.95);
    let threshold = budget * lambda_eff;
    let mut value = value_closure(inst);

    // Localize the region carrying weight.
    let n = params.scan_points.max(16);
    let mut lo = vec![T::infinity(); dim];
    let mut hi = vec![T::neg_infinity(); dim];
    let mut spacing = vec![T::zero(); dim];
    let mut phi_min = T::infinity();
    {
        let mut grids: Vec<Vec<T>> = Vec::with_capacity(dim);
        for d in 0..dim {
            let h = (params.search_box.hi[d] - params.search_box.lo[d])
                / T::from_usize(n - 1).unwrap();
            spacing[d] = h;
            grids.push(
                (0..n)
                    .map(|i| params.search_box.lo[d] + h * T::from_usize(i).unwrap())
                    .collect(),
            );
        }
        let total = n.pow(dim as u32);
        let mut phis = vec![T::infinity(); total];
        let mut point = vec![T::zero(); dim];
        for flat in 0..total {
            let mut rest = flat;
            for d in (0..dim).rev() {
                point[d] = grids[d][rest % n];
                rest /= n;
            }
            if let Ok(phi) = value(&point) {
                if phi.is_finite() {
                    phis[flat] = phi;
                    if phi < phi_min {
                        phi_min = phi;
                    }
                }
            }
        }
        if !phi_min.is_finite() {
            return Err(CoreError::NoValidSamples);
        }
        for (flat, &phi) in phis.iter().enumerate() {
            if phi - phi_min <= threshold {
                let mut rest = flat;
                for d in (0..dim).rev() {
                    let x = grids[d][rest % n];
                    rest /= n;
                    lo[d] = lo[d].min(x);
                    hi[d] = hi[d].max(x);
                }
            }
        }
        for d in 0..dim {
            lo[d] = (lo[d] - spacing[d]).max(params.search_box.lo[d]);
            hi[d] = (hi[d] + spacing[d]).min(params.search_box.hi[d]);
        }
    }

    // Composite Gauss-Legendre panels, doubled until the mean settles.
    let rule = gauss_legendre::<T>(15)?;
    let mut previous: Option<Vec<T>> = None;
    let mut panels = 8usize;
    let mut achieved = T::infinity();
    while panels <= params.max_panels {
        let mut mass = T::zero();
        let mut first = vec![T::zero(); dim];
        let mut point = vec![T::zero(); dim];
        let mut axis_nodes: Vec<Vec<(T, T)>> = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut nodes = Vec::with_capacity(panels * rule.len());
            let width = (hi[d] - lo[d]) / T::from_usize(panels).unwrap();
            let half = width * T::c(0.5);
            for p in 0..panels {
                let center = lo[d] + width * (T::from_usize(p).unwrap() + T::c(0.5));
                for (&x, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
                    nodes.push((center + half * x, w * half));
                }
            }
            axis_nodes.push(nodes);
        }
        let per_axis = axis_nodes[0].len();
        let total = per_axis.pow(dim as u32);
        for flat in 0..total {
            let mut rest = flat;
            let mut quad_w = T::one();
            for d in (0..dim).rev() {
                let (x, w) = axis_nodes[d][rest % per_axis];
                rest /= per_axis;
                point[d] = x;
                quad_w *= w;
            }
            let phi = match value(&point) {
                Ok(v) => v,
                Err(_) => continue,
            };
            if !phi.is_finite() {
                continue;
            }
            let weight = (-(phi - phi_min) / lambda_eff).exp() * quad_w;
            mass += weight;
            for d in 0..dim {
                first[d] += weight * point[d];
            }
        }
        if mass > T::zero() {
            let mean: Vec<T> = first.iter().map(|&f| f / mass).collect();
            if let Some(prev) = &previous {
                achieved = prev
                    .iter()
                    .zip(mean.iter())
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(T::zero(), |acc, d| acc.max(d));
                if achieved <= params.abs_tol {
                    return Ok(mean);
                }
            }
            previous = Some(mean);
        }
        panels *= 2;
    }
    Err(CoreError::IntegrationBudget(format!(
        "weighted mean still moving by {achieved:e} after {} panels per axis (tolerance {:e})",
        params.max_panels, params.abs_tol
    )))
}

/// Normalized weight density q(W) ∝ exp(−J(W,0)/(β²λ₀)) on a caller grid,
/// trapezoid-normalized over that grid. Scalar problems only.
pub fn optimal_density_curve<T: Scalar>(
    inst: &OcpInstance<T>,
    beta: T,
    lambda0: T,
    grid: &[T],
) -> CoreResult<Vec<(T, T)>> {
    if inst.control_dim() != 1 {
        return Err(CoreError::ContractViolation(
            "density curve requires a scalar control trajectory",
        ));
    }
    if grid.len() < 2 || grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(CoreError::ContractViolation(
            "density grid must be strictly increasing with at least two points",
        ));
    }
    if !(beta > T::zero()) || !(lambda0 > T::zero()) {
        return Err(CoreError::ContractViolation(
            "shrink factor and base temperature must be strictly positive",
        ));
    }
    let lambda_eff = beta * beta * lambda0;
    let mut value = value_closure(inst);
    let phis: CoreResult<Vec<T>> = grid.iter().map(|&x| value(&[x])).collect();
    let phis = phis?;
    let phi_min = phis
        .iter()
        .copied()
        .fold(T::infinity(), |a, b| if b < a { b } else { a });
    let unnorm: Vec<T> = phis
        .iter()
        .map(|&p| (-(p - phi_min) / lambda_eff).exp())
        .collect();
    let peak = unnorm
        .iter()
        .copied()
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let edge_cap = peak * T::c(1e-8);
    if unnorm[0] > edge_cap || unnorm[unnorm.len() - 1] > edge_cap {
        return Err(CoreError::GridExtent(format!(
            "density at a grid edge exceeds 1e-8 of the peak; widen beyond [{}, {}]",
            grid[0],
            grid[grid.len() - 1]
        )));
    }
    let mut z = T::zero();
    for i in 0..grid.len() - 1 {
        z += (unnorm[i] + unnorm[i + 1]) * T::c(0.5) * (grid[i + 1] - grid[i]);
    }
    if !(z > T::zero()) {
        return Err(CoreError::NoValidSamples);
    }
    Ok(grid
        .iter()
        .zip(unnorm.iter())
        .map(|(&x, &u)| (x, u / z))
        .collect())
}
