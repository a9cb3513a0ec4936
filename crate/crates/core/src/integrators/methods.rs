use std::f64::consts::TAU;

use nalgebra::{DMatrix, Vector3};

use super::solver::{solve, Solve};
use super::{Predictor, SolverConfig, StepOutcome, ROOT_SEPARATION};
use crate::error::{invalid, GeoError, Result};
use crate::fields::VectorField;
use crate::geometry::{Manifold, Point};
use crate::linalg;

/// Homotopy substeps used when Newton from the predictor leaves the basin.
const HOMOTOPY_STEPS: usize = 8;

type Residual<'a> = dyn Fn(f64, &DMatrix<f64>) -> Result<DMatrix<f64>> + 'a;
type Seed<'a> = dyn Fn(f64) -> Result<DMatrix<f64>> + 'a;

fn check_inputs(field: &VectorField, y: &Point, h: f64, positive: bool) -> Result<()> {
    if field.manifold() != y.manifold() {
        return Err(invalid(format!(
            "field on {:?} applied to a point of {:?}",
            field.manifold(),
            y.manifold()
        )));
    }
    if !h.is_finite() || (positive && !(h > 0.0)) {
        return Err(invalid(format!("step size must be positive, got {h}")));
    }
    Ok(())
}

/// Rescales SPD residuals by `y^{-1/2} · y^{-1/2}` so the ambient norm tracks
/// the affine-invariant distance.
struct Whitener(Option<DMatrix<f64>>);

impl Whitener {
    fn at(m: Manifold, y: &DMatrix<f64>) -> Result<Self> {
        Ok(match m {
            Manifold::Spd(_) => Whitener(Some(linalg::sqrt_pair(y)?.1)),
            _ => Whitener(None),
        })
    }

    fn apply(&self, r: DMatrix<f64>) -> DMatrix<f64> {
        match &self.0 {
            Some(w) => w * r * w,
            None => r,
        }
    }
}

/// Principal root by continuation from the predictor, plus any extra roots
/// reachable from the multistart seeds. `Err` carries the failed attempt.
fn implicit_roots(
    m: Manifold,
    residual: &Residual<'_>,
    predictor: &Seed<'_>,
    y: &DMatrix<f64>,
    h: f64,
    cfg: &SolverConfig,
) -> std::result::Result<Vec<Solve>, Solve> {
    let at_h = |z: &DMatrix<f64>| residual(h, z);
    let first_seed = match cfg.predictor {
        Predictor::ExplicitEuler => predictor(h).unwrap_or_else(|_| y.clone()),
        Predictor::PreviousPoint => y.clone(),
    };
    let mut total = 0;
    let mut principal = solve(m, &at_h, first_seed, cfg);
    total += principal.iterations;
    if !principal.converged {
        // continuation in h from the start point
        let mut z = y.clone();
        let mut last = None;
        for j in 1..=HOMOTOPY_STEPS {
            let hj = h * j as f64 / HOMOTOPY_STEPS as f64;
            let seed = if j == 1 {
                predictor(hj).unwrap_or_else(|_| y.clone())
            } else {
                z.clone()
            };
            let s = solve(m, &|x: &DMatrix<f64>| residual(hj, x), seed, cfg);
            total += s.iterations;
            if !s.converged {
                last = Some(s);
                break;
            }
            z = s.z.clone();
            last = Some(s);
        }
        let s = last.expect("at least one homotopy substep");
        if !s.converged {
            return Err(Solve { iterations: total, ..principal });
        }
        principal = s;
    }
    principal.iterations = total;

    let mut roots = vec![principal];
    if let Some(seeds) = &cfg.multistart_grid {
        for seed in seeds {
            if seed.coords().shape() != y.shape() {
                continue;
            }
            let s = solve(m, &at_h, seed.coords().clone(), cfg);
            if !s.converged {
                continue;
            }
            let distinct = roots.iter().all(|r| {
                m.dist_raw(&r.z, &s.z).map(|d| d >= ROOT_SEPARATION).unwrap_or(false)
            });
            if distinct {
                roots.push(s);
            }
        }
    }
    Ok(roots)
}

/// Geodesic explicit Euler, `exp_y(h X|_y)`.
pub fn gee_step(field: &VectorField, y: &Point, h: f64) -> Result<StepOutcome> {
    check_inputs(field, y, h, true)?;
    let m = y.manifold();
    let v = field.eval_raw(y.coords())? * h;
    Ok(StepOutcome::explicit(Point::new_unchecked(m, m.exp_raw(y.coords(), &v)?)))
}

/// Geodesic implicit Euler: solves `exp_z(−h X|_z) = y` for `z`.
pub fn gie_step(field: &VectorField, y: &Point, h: f64, cfg: &SolverConfig) -> Result<StepOutcome> {
    check_inputs(field, y, h, true)?;
    cfg.validate()?;
    let m = y.manifold();
    let yc = y.coords();
    let w = Whitener::at(m, yc)?;
    let residual = |h: f64, z: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let back = m.exp_raw(z, &(field.eval_raw(z)? * -h))?;
        Ok(w.apply(back - yc))
    };
    let predictor = |h: f64| m.exp_raw(yc, &(field.eval_raw(yc)? * h));
    let roots = match implicit_roots(m, &residual, &predictor, yc, h, cfg) {
        Ok(r) => r,
        Err(s) => return Ok(StepOutcome::failed(s.iterations, s.residual)),
    };
    let mut out = StepOutcome::failed(0, 0.0);
    out.residuals.clear();
    out.iterations.clear();
    for s in roots {
        let back = m.exp_raw(&s.z, &(field.eval_raw(&s.z)? * -h))?;
        out.residuals.push(m.dist_raw(&back, yc)?);
        out.iterations.push(s.iterations);
        out.solutions.push(Point::new_unchecked(m, s.z));
    }
    out.converged = true;
    Ok(out)
}

/// Geodesic implicit midpoint: solves `exp_ȳ(−½h X|_ȳ) = y` for the midpoint
/// and returns `exp_ȳ(½h X|_ȳ)`. Accepts negative `h`, which inverts the step.
pub fn gimp_step(field: &VectorField, y: &Point, h: f64, cfg: &SolverConfig) -> Result<StepOutcome> {
    check_inputs(field, y, h, false)?;
    cfg.validate()?;
    let m = y.manifold();
    let yc = y.coords();
    let w = Whitener::at(m, yc)?;
    let residual = |h: f64, z: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let back = m.exp_raw(z, &(field.eval_raw(z)? * (-0.5 * h)))?;
        Ok(w.apply(back - yc))
    };
    let predictor = |h: f64| m.exp_raw(yc, &(field.eval_raw(yc)? * (0.5 * h)));
    let roots = match implicit_roots(m, &residual, &predictor, yc, h, cfg) {
        Ok(r) => r,
        Err(s) => return Ok(StepOutcome::failed(s.iterations, s.residual)),
    };
    let mut out = StepOutcome::failed(0, 0.0);
    out.residuals.clear();
    out.iterations.clear();
    for s in roots {
        let x = field.eval_raw(&s.z)?;
        let back = m.exp_raw(&s.z, &(&x * (-0.5 * h)))?;
        let fwd = m.exp_raw(&s.z, &(&x * (0.5 * h)))?;
        out.residuals.push(m.dist_raw(&back, yc)?);
        out.iterations.push(s.iterations);
        out.solutions.push(Point::new_unchecked(m, fwd));
        out.midpoints.push(Point::new_unchecked(m, s.z));
    }
    out.converged = true;
    Ok(out)
}

fn require_sphere(y: &Point, what: &str) -> Result<()> {
    if y.manifold() != Manifold::Sphere2 {
        return Err(invalid(format!("{what} is only defined on S²")));
    }
    Ok(())
}

fn normalized_midpoint(y: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = y + z;
    let n = s.norm();
    if !(n > 1e-8) {
        return Err(GeoError::Degenerate("midpoint of nearly antipodal points".into()));
    }
    Ok(s / n)
}

/// Spherical midpoint rule, solved in ambient ℝ³ and then checked to lie on S².
pub fn sphmp_step(field: &VectorField, y: &Point, h: f64, cfg: &SolverConfig) -> Result<StepOutcome> {
    require_sphere(y, "the spherical midpoint method")?;
    check_inputs(field, y, h, true)?;
    cfg.validate()?;
    let ambient = Manifold::Euclidean(3);
    let yc = y.coords();
    let residual = |h: f64, z: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let mid = normalized_midpoint(yc, z)?;
        Ok(z - yc - field.eval_raw(&mid)? * h)
    };
    let predictor =
        |h: f64| Manifold::Sphere2.exp_raw(yc, &(field.eval_raw(yc)? * h));
    let roots = match implicit_roots(ambient, &residual, &predictor, yc, h, cfg) {
        Ok(r) => r,
        Err(s) => return Ok(StepOutcome::failed(s.iterations, s.residual)),
    };
    let mut out = StepOutcome::failed(0, 0.0);
    out.residuals.clear();
    out.iterations.clear();
    for s in roots {
        normalized_midpoint(yc, &s.z)?;
        let n = s.z.norm();
        if (n - 1.0).abs() > 1e-10 {
            return Err(GeoError::Numerical(format!(
                "spherical midpoint solution left the sphere (|z| = {n})"
            )));
        }
        out.residuals.push(s.residual);
        out.iterations.push(s.iterations);
        out.solutions.push(Point::new_unchecked(Manifold::Sphere2, &s.z / n));
    }
    out.converged = true;
    Ok(out)
}

/// Action of the SO(3) exponential of `a ∈ so(3) ≅ ℝ³` on `p`:
/// `p + (sin α/α) a×p + ((1 − cos α)/α²) a×(a×p)`, `α = ‖a‖`.
pub fn rodrigues(a: &Vector3<f64>, p: &Vector3<f64>) -> Vector3<f64> {
    let alpha = a.norm();
    let (s, c) = if alpha < 1e-6 {
        let a2 = alpha * alpha;
        (1.0 - a2 / 6.0, 0.5 - a2 / 24.0)
    } else {
        (alpha.sin() / alpha, (1.0 - alpha.cos()) / (alpha * alpha))
    };
    let ap = a.cross(p);
    p + ap * s + a.cross(&ap) * c
}

fn v3(m: &DMatrix<f64>) -> Vector3<f64> {
    Vector3::new(m[0], m[1], m[2])
}

fn lie_euler_impl(
    y: &Point,
    h: f64,
    cfg: &SolverConfig,
    a: &dyn Fn(&Vector3<f64>) -> Vector3<f64>,
) -> Result<StepOutcome> {
    let m = Manifold::Sphere2;
    let yc = y.coords();
    let yv = v3(yc);
    let residual = |h: f64, z: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let target = rodrigues(&(a(&v3(z)) * h), &yv);
        Ok(DMatrix::from_column_slice(3, 1, (v3(z) - target).as_slice()))
    };
    let predictor = |h: f64| -> Result<DMatrix<f64>> {
        let q = rodrigues(&(a(&yv) * h), &yv);
        Ok(DMatrix::from_column_slice(3, 1, q.normalize().as_slice()))
    };
    let roots = match implicit_roots(m, &residual, &predictor, yc, h, cfg) {
        Ok(r) => r,
        Err(s) => return Ok(StepOutcome::failed(s.iterations, s.residual)),
    };
    let mut out = StepOutcome::failed(0, 0.0);
    out.residuals.clear();
    out.iterations.clear();
    for s in roots {
        out.residuals.push(s.residual);
        out.iterations.push(s.iterations);
        out.solutions.push(Point::new_unchecked(m, s.z));
    }
    out.converged = true;
    Ok(out)
}

/// Implicit Lie–Euler `z = exp(h a(z)) y` using the field's isotropy map.
pub fn lie_euler_implicit_step(
    field: &VectorField,
    y: &Point,
    h: f64,
    cfg: &SolverConfig,
) -> Result<StepOutcome> {
    require_sphere(y, "implicit Lie–Euler")?;
    check_inputs(field, y, h, true)?;
    cfg.validate()?;
    if !field.has_isotropy() {
        return Err(invalid("implicit Lie–Euler needs a field with an isotropy map"));
    }
    let a = |p: &Vector3<f64>| field.isotropy_at(p).expect("checked above");
    lie_euler_impl(y, h, cfg, &a)
}

pub(super) fn lie_euler_with_shift(
    field: &VectorField,
    y: &Point,
    h: f64,
    cfg: &SolverConfig,
    c: f64,
) -> Result<StepOutcome> {
    require_sphere(y, "implicit Lie–Euler")?;
    check_inputs(field, y, h, true)?;
    cfg.validate()?;
    if !field.has_isotropy() {
        return Err(invalid("implicit Lie–Euler needs a field with an isotropy map"));
    }
    let a = |p: &Vector3<f64>| {
        let base = field.isotropy_at(p).expect("checked above");
        base + p * ((c - 1.0) * base.dot(p))
    };
    lie_euler_impl(y, h, cfg, &a)
}

/// Initial guesses on S² whose third component runs over a uniform grid of
/// `levels` values in `[−1, 1]`, each at 8 azimuths starting from `y`'s.
pub fn sphere_multistart_seeds(y: &Point, levels: usize) -> Vec<Point> {
    let c = y.coords();
    let psi0 = c[1].atan2(c[0]);
    let mut seeds = Vec::new();
    let levels = levels.max(2);
    for i in 0..levels {
        let s = -1.0 + 2.0 * i as f64 / (levels - 1) as f64;
        let rho = (1.0 - s * s).max(0.0).sqrt();
        let azimuths = if rho == 0.0 { 1 } else { 8 };
        for k in 0..azimuths {
            let psi = psi0 + TAU * k as f64 / 8.0;
            let v = DMatrix::from_column_slice(3, 1, &[rho * psi.cos(), rho * psi.sin(), s]);
            let n = v.norm();
            seeds.push(Point::new_unchecked(Manifold::Sphere2, v / n));
        }
    }
    seeds
}
