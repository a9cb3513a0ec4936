use super::{gimp_step, SolverConfig, Strategy};
use crate::error::{invalid, GeoError, Result};
use crate::fields::VectorField;
use crate::geometry::{distance, Point};

/// Residual floor for the substep solves; roundoff dominates below this.
const SUBSTEP_TOL_FLOOR: f64 = 5e-15;

/// Largest number of substeps tried before giving up.
const MAX_SUBSTEPS: usize = 1 << 20;
/// Initial substep length.
const INITIAL_DT: f64 = 0.05;

fn substep_config(tol: f64, strategy: Strategy) -> SolverConfig {
    SolverConfig {
        tolerance: tol,
        max_iterations: 60,
        strategy,
        ..SolverConfig::default()
    }
}

fn compose(field: &VectorField, y0: &Point, t_end: f64, n: usize, fine_tol: f64) -> Result<Point> {
    let dt = t_end / n as f64;
    // solver errors add up over n substeps
    let tol = (0.01 * fine_tol / n as f64).max(SUBSTEP_TOL_FLOOR);
    let fast = substep_config(tol, Strategy::FixedPoint);
    let robust = substep_config(tol, Strategy::NewtonWithFallback);
    let mut y = y0.clone();
    for _ in 0..n {
        let out = gimp_step(field, &y, dt, &fast)?;
        let out = if out.converged { out } else { gimp_step(field, &y, dt, &robust)? };
        y = out.into_principal()?;
    }
    Ok(y)
}

/// Richardson step for a symmetric second-order composition: with `fine`
/// using half the substep of `coarse`, moving from `fine` by `−⅓ log(coarse)`
/// cancels the `dt²` error term.
fn extrapolate(fine: &Point, coarse: &Point) -> Result<Point> {
    let m = fine.manifold();
    if fine == coarse {
        return Ok(fine.clone());
    }
    let v = m.log_raw(fine.coords(), coarse.coords())? * (-1.0 / 3.0);
    m.project(m.exp_raw(fine.coords(), &v)?)
}

/// High-accuracy flow `exp(t X) y0`.
///
/// Implicit-midpoint substeps are halved repeatedly; each pair of successive
/// compositions is Richardson-extrapolated, and the result is returned once
/// two successive extrapolated refinements agree to `fine_tol` in distance.
pub fn reference_flow(field: &VectorField, y0: &Point, t_end: f64, fine_tol: f64) -> Result<Point> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(invalid("reference flow needs a finite t_end ≥ 0"));
    }
    if !(fine_tol > 0.0) {
        return Err(invalid("reference flow tolerance must be positive"));
    }
    if field.manifold() != y0.manifold() {
        return Err(invalid("field and start point live on different manifolds"));
    }
    if t_end == 0.0 {
        return Ok(y0.clone());
    }
    let mut n = ((t_end / INITIAL_DT).ceil() as usize).max(1);
    let mut coarse = compose(field, y0, t_end, n, fine_tol)?;
    let mut previous: Option<Point> = None;
    let (mut prior_diff, mut last_diff) = (f64::INFINITY, f64::INFINITY);
    loop {
        n *= 2;
        if n > MAX_SUBSTEPS {
            return Err(GeoError::AccuracyNotAttained {
                tolerance: fine_tol,
                difference: f64::NAN,
            });
        }
        let fine = compose(field, y0, t_end, n, fine_tol)?;
        let refined = extrapolate(&fine, &coarse)?;
        let diff = match &previous {
            Some(p) => distance(p, &refined)?,
            None => f64::INFINITY,
        };
        if diff < fine_tol {
            return Ok(refined);
        }
        if n * 2 > MAX_SUBSTEPS {
            return Err(GeoError::AccuracyNotAttained { tolerance: fine_tol, difference: diff });
        }
        // refinements that keep drifting apart mean roundoff has taken over
        if diff > last_diff && last_diff > prior_diff {
            return Err(GeoError::AccuracyNotAttained { tolerance: fine_tol, difference: diff });
        }
        prior_diff = last_diff;
        last_diff = diff;
        coarse = fine;
        previous = Some(refined);
    }
}
