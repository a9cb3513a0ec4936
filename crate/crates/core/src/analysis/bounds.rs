//! Flow contraction checks and local/global error bounds.

use crate::error::{invalid, Result};
use crate::fields::VectorField;
use crate::geometry::{distance, Point};
use crate::integrators::{integrate, reference_flow, step, MethodId, SolverConfig};

/// One time point of [`flow_contraction_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    pub d: f64,
    /// `d0 e^{νt}`.
    pub bound: f64,
    /// `d` exceeds `bound` by more than `10 fine_tol`.
    pub violated: bool,
}

fn check_times(grid: &[f64]) -> Result<()> {
    if grid.is_empty()
        || !(grid[0] >= 0.0)
        || grid.iter().any(|v| !v.is_finite())
        || grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(invalid("time grid must be finite, non-negative and strictly ascending"));
    }
    Ok(())
}

/// Distance of the two exact trajectories from `x0`, `y0` at each `t`,
/// against `d0 e^{νt}`. Flows are advanced incrementally between grid times.
pub fn flow_contraction_check(
    field: &VectorField,
    x0: &Point,
    y0: &Point,
    nu: f64,
    t_grid: &[f64],
    fine_tol: f64,
) -> Result<Vec<FlowSample>> {
    check_times(t_grid)?;
    if !nu.is_finite() {
        return Err(invalid("ν must be finite"));
    }
    let d0 = distance(x0, y0)?;
    let (mut x, mut y) = (x0.clone(), y0.clone());
    let mut t_prev = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let dt = t - t_prev;
        x = reference_flow(field, &x, dt, fine_tol)?;
        y = reference_flow(field, &y, dt, fine_tol)?;
        t_prev = t;
        let d = distance(&x, &y)?;
        let bound = d0 * (nu * t).exp();
        out.push(FlowSample { t, d, bound, violated: d > bound + 10.0 * fine_tol });
    }
    Ok(out)
}

/// `max d(exp(hX)y, φ_h(y)) / h^{p+1}` over the samples and the grid.
pub fn estimate_local_constant(
    method: MethodId,
    field: &VectorField,
    samples: &[Point],
    h_grid: &[f64],
    p: u32,
    cfg: &SolverConfig,
    fine_tol: f64,
) -> Result<f64> {
    if h_grid.is_empty() || h_grid.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(invalid("step sizes must be positive"));
    }
    if samples.is_empty() {
        return Err(invalid("need at least one sample point"));
    }
    if p == 0 {
        return Err(invalid("order p must be at least 1"));
    }
    let mut c: f64 = 0.0;
    for y in samples {
        for &h in h_grid {
            let exact = reference_flow(field, y, h, fine_tol)?;
            let approx = step(method, field, y, h, cfg)?.into_principal()?;
            c = c.max(distance(&exact, &approx)? / h.powi(p as i32 + 1));
        }
    }
    Ok(c)
}

/// Upper bound on the global error after `t_star / h` steps:
///
/// * `ν > 0`: `(C/ν)(e^{t*ν} − 1) hᵖ`
/// * `ν = 0`: `C t* hᵖ`
/// * `ν < 0`: `(C e^{−νh}/ν)(e^{t*ν} − 1) hᵖ`
pub fn global_error_bound(nu: f64, c: f64, p: u32, t_star: f64, h: f64) -> f64 {
    let hp = h.powi(p as i32);
    if nu > 0.0 {
        c / nu * (t_star * nu).exp_m1() * hp
    } else if nu == 0.0 {
        c * t_star * hp
    } else {
        c * (-nu * h).exp() / nu * (t_star * nu).exp_m1() * hp
    }
}

/// Least-squares slope of `ln e` against `ln h`. Pairs with a non-positive
/// error are skipped; `NaN` if fewer than two remain.
pub fn fit_order(h: &[f64], e: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(e)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBoundReport {
    pub method: MethodId,
    pub nu: f64,
    /// Local error constant.
    pub c: f64,
    pub p: u32,
    pub t_star: f64,
    pub h_grid: Vec<f64>,
    pub steps: Vec<usize>,
    pub measured_errors: Vec<f64>,
    pub bound_values: Vec<f64>,
    pub order_estimate: f64,
}

impl ErrorBoundReport {
    /// Every measured error is at most its bound.
    pub fn bound_holds(&self) -> bool {
        self.measured_errors.iter().zip(&self.bound_values).all(|(e, b)| e <= b)
    }
}

/// Global error at `t_star` for each `h`, against [`global_error_bound`].
/// Each `h` must divide `t_star` into a whole number of steps.
#[allow(clippy::too_many_arguments)]
pub fn global_error_study(
    method: MethodId,
    field: &VectorField,
    y0: &Point,
    t_star: f64,
    h_grid: &[f64],
    nu: f64,
    c: f64,
    p: u32,
    cfg: &SolverConfig,
    fine_tol: f64,
) -> Result<ErrorBoundReport> {
    if !(t_star > 0.0) || !t_star.is_finite() {
        return Err(invalid("t* must be positive"));
    }
    if p == 0 || !(c >= 0.0) || !nu.is_finite() {
        return Err(invalid("need p ≥ 1, C ≥ 0 and finite ν"));
    }
    if h_grid.is_empty() || h_grid.iter().any(|h| !(*h > 0.0)) {
        return Err(invalid("step sizes must be positive"));
    }
    let mut steps = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let k = (t_star / h).round();
        if k < 1.0 || (k * h - t_star).abs() > 1e-9 * t_star {
            return Err(invalid(format!("h = {h} does not divide t* = {t_star}")));
        }
        steps.push(k as usize);
    }
    let exact = reference_flow(field, y0, t_star, fine_tol)?;
    let mut measured_errors = Vec::with_capacity(h_grid.len());
    for (&h, &k) in h_grid.iter().zip(&steps) {
        let traj = integrate(method, field, y0, h, k, cfg)?;
        measured_errors.push(distance(&exact, traj.last().expect("trajectory is never empty"))?);
    }
    let bound_values = h_grid
        .iter()
        .map(|&h| global_error_bound(nu, c, p, t_star, h))
        .collect();
    let order_estimate = fit_order(h_grid, &measured_errors);
    Ok(ErrorBoundReport {
        method,
        nu,
        c,
        p,
        t_star,
        h_grid: h_grid.to_vec(),
        steps,
        measured_errors,
        bound_values,
        order_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_cases_are_continuous_in_nu() {
        let b0 = global_error_bound(0.0, 2.0, 1, 1.5, 0.1);
        assert!((b0 - 0.3).abs() < 1e-15);
        assert!((global_error_bound(1e-9, 2.0, 1, 1.5, 0.1) - b0).abs() < 1e-8);
        assert!((global_error_bound(-1e-9, 2.0, 1, 1.5, 0.1) - b0).abs() < 1e-8);
        // ν < 0: (C e^{−νh}/ν)(e^{t ν} − 1) hᵖ with ν = −1
        let want = 2.0 * 0.1f64.exp() / -1.0 * ((-1.5f64).exp() - 1.0) * 0.01;
        assert!((global_error_bound(-1.0, 2.0, 2, 1.5, 0.1) - want).abs() < 1e-15);
    }

    #[test]
    fn fit_order_recovers_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        assert!((fit_order(&h, &e) - 2.0).abs() < 1e-12);
        assert!(fit_order(&h, &[0.0; 3]).is_nan());
    }
}
