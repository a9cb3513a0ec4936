use crate::error::{invalid, Result};
use crate::fields::VectorField;
use crate::geometry::{distance, Manifold, Point};
use crate::integrators::{step, MethodId, SolverConfig};

/// Distance between two numerical solutions after one step of size `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub h: f64,
    pub d0: f64,
    /// Present only when both steps converged.
    pub d_after: Option<f64>,
    pub converged_x: bool,
    pub converged_y: bool,
    pub iters_x: usize,
    pub iters_y: usize,
}

impl SweepRecord {
    pub fn converged(&self) -> bool {
        self.converged_x && self.converged_y
    }
}

/// `count` points from `min` to `max`, evenly spaced.
pub fn linear_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..count)
            .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// `count` points from `min` to `max`, evenly spaced in `ln h`.
pub fn log_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    linear_grid(min.ln(), max.ln(), count)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// One step of `method` from both `x0` and `y0` for every `h` in the grid,
/// using principal roots.
pub fn contractivity_sweep(
    method: MethodId,
    field: &VectorField,
    x0: &Point,
    y0: &Point,
    h_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    if method.is_sphere_only() && field.manifold() != Manifold::Sphere2 {
        return Err(invalid(format!("{method} is only defined on S²")));
    }
    if h_grid.is_empty() {
        return Err(invalid("empty step-size grid"));
    }
    if h_grid.iter().any(|h| !(*h > 0.0) || !h.is_finite())
        || h_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(invalid("step sizes must be positive and strictly ascending"));
    }
    let d0 = distance(x0, y0)?;
    if !(d0 > 0.0) {
        return Err(invalid("sweep needs two distinct initial points"));
    }
    let mut out = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let sx = step(method, field, x0, h, cfg);
        let sy = step(method, field, y0, h, cfg);
        let (cx, ix, px) = unpack(sx);
        let (cy, iy, py) = unpack(sy);
        // a distance that cannot be evaluated (numerically singular iterate) is left blank
        let d_after = match (px, py) {
            (Some(a), Some(b)) => distance(&a, &b).ok(),
            _ => None,
        };
        out.push(SweepRecord {
            h,
            d0,
            d_after,
            converged_x: cx,
            converged_y: cy,
            iters_x: ix,
            iters_y: iy,
        });
    }
    Ok(out)
}

fn unpack(r: Result<crate::integrators::StepOutcome>) -> (bool, usize, Option<Point>) {
    match r {
        Ok(o) if o.converged => {
            let it = o.principal_iterations();
            (true, it, o.solutions.into_iter().next())
        }
        Ok(o) => (false, o.principal_iterations(), None),
        Err(_) => (false, 0, None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(linear_grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        let g = log_grid(0.01, 1.0, 3);
        assert!((g[1] - 0.1).abs() < 1e-15 && (g[2] - 1.0).abs() < 1e-15);
        assert!(linear_grid(0.0, 1.0, 0).is_empty());
    }
}
