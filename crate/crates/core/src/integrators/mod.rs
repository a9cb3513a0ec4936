//! One-step maps on manifolds and the machinery to solve their implicit
//! relations.
//!
//! | method | relation |
//! |--------|----------|
//! | GEE    | `y₁ = exp_{y₀}(h X|_{y₀})` |
//! | GIE    | `y₀ = exp_{y₁}(−h X|_{y₁})` |
//! | GIMP   | `y₀ = exp_ȳ(−½h X|_ȳ)`, `y₁ = exp_ȳ(½h X|_ȳ)` |
//! | SPHMP  | `y₁ = y₀ + h X|_ȳ`, `ȳ = (y₀ + y₁)/‖y₀ + y₁‖` (S² only) |
//! | Lie–Euler | `y₁ = exp(h a(y₁)) y₀` with the SO(3) action (S² only) |

mod methods;
mod reference;
mod solver;

pub use methods::{
    gee_step, gie_step, gimp_step, lie_euler_implicit_step, rodrigues, sphere_multistart_seeds,
    sphmp_step,
};
pub use reference::reference_flow;

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, GeoError, Result};
use crate::fields::VectorField;
use crate::geometry::Point;

/// Minimum separation between distinct roots of one step.
pub const ROOT_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Newton,
    FixedPoint,
    NewtonWithFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    /// The method's explicit counterpart (GEE, or explicit Lie–Euler).
    ExplicitEuler,
    PreviousPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Residual tolerance in the ambient norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub strategy: Strategy,
    pub predictor: Predictor,
    /// Extra initial guesses; every converged, distinct root is reported.
    pub multistart_grid: Option<Vec<Point>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-12,
            max_iterations: 50,
            strategy: Strategy::NewtonWithFallback,
            predictor: Predictor::ExplicitEuler,
            multistart_grid: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(invalid("solver tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("solver needs at least one iteration"));
        }
        Ok(())
    }

    pub fn with_multistart(mut self, seeds: Vec<Point>) -> Self {
        self.multistart_grid = Some(seeds);
        self
    }
}

/// Result of one integrator step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Converged, pairwise distinct solutions; the principal root comes first.
    pub solutions: Vec<Point>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: bool,
    /// GIMP midpoints `ȳ`, parallel to `solutions`.
    pub midpoints: Vec<Point>,
}

impl StepOutcome {
    pub(crate) fn explicit(p: Point) -> Self {
        StepOutcome {
            solutions: vec![p],
            residuals: vec![0.0],
            iterations: vec![0],
            converged: true,
            midpoints: Vec::new(),
        }
    }

    pub(crate) fn failed(iterations: usize, residual: f64) -> Self {
        StepOutcome {
            solutions: Vec::new(),
            residuals: vec![residual],
            iterations: vec![iterations],
            converged: false,
            midpoints: Vec::new(),
        }
    }

    pub fn principal(&self) -> Option<&Point> {
        self.solutions.first()
    }

    /// Principal solution, or a `NotConverged` error.
    pub fn into_principal(self) -> Result<Point> {
        if !self.converged {
            return Err(GeoError::NotConverged {
                iterations: self.iterations.first().copied().unwrap_or(0),
                residual: self.residuals.first().copied().unwrap_or(f64::INFINITY),
            });
        }
        Ok(self.solutions.into_iter().next().expect("converged outcome has a solution"))
    }

    pub fn principal_iterations(&self) -> usize {
        self.iterations.first().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodId {
    Gee,
    Gie,
    Gimp,
    Sphmp,
    /// Implicit Lie–Euler with isotropy `a(y) + (c − 1)(a(y)·y) y`, where `a`
    /// is the field's own isotropy map. For `a = e₃` this is `e₃ + (c − 1) y₃ y`.
    LieEulerImplicit(f64),
}

impl MethodId {
    /// Classical order `p` of the local error `O(h^{p+1})`.
    pub fn order(&self) -> u32 {
        match self {
            MethodId::Gee | MethodId::Gie | MethodId::LieEulerImplicit(_) => 1,
            MethodId::Gimp | MethodId::Sphmp => 2,
        }
    }

    pub fn is_sphere_only(&self) -> bool {
        matches!(self, MethodId::Sphmp | MethodId::LieEulerImplicit(_))
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodId::Gee => write!(f, "GEE"),
            MethodId::Gie => write!(f, "GIE"),
            MethodId::Gimp => write!(f, "GIMP"),
            MethodId::Sphmp => write!(f, "SPHMP"),
            MethodId::LieEulerImplicit(c) => write!(f, "LIE_EULER_IMPLICIT({c})"),
        }
    }
}

impl FromStr for MethodId {
    type Err = GeoError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        match t.as_str() {
            "GEE" => return Ok(MethodId::Gee),
            "GIE" => return Ok(MethodId::Gie),
            "GIMP" => return Ok(MethodId::Gimp),
            "SPHMP" => return Ok(MethodId::Sphmp),
            _ => {}
        }
        let inner = t
            .strip_prefix("LIE_EULER_IMPLICIT(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| invalid(format!("unknown method '{s}'")))?;
        let c: f64 = inner
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad isotropy parameter in '{s}'")))?;
        Ok(MethodId::LieEulerImplicit(c))
    }
}

/// Single step of `method` from `y` with step size `h`.
pub fn step(
    method: MethodId,
    field: &VectorField,
    y: &Point,
    h: f64,
    cfg: &SolverConfig,
) -> Result<StepOutcome> {
    match method {
        MethodId::Gee => gee_step(field, y, h),
        MethodId::Gie => gie_step(field, y, h, cfg),
        MethodId::Gimp => gimp_step(field, y, h, cfg),
        MethodId::Sphmp => sphmp_step(field, y, h, cfg),
        MethodId::LieEulerImplicit(c) => {
            methods::lie_euler_with_shift(field, y, h, cfg, c)
        }
    }
}

/// `n_steps` steps of size `h`; returns `n_steps + 1` points.
///
/// Fails with [`GeoError::StepFailed`] carrying the partial trajectory when a
/// step does not converge.
pub fn integrate(
    method: MethodId,
    field: &VectorField,
    y0: &Point,
    h: f64,
    n_steps: usize,
    cfg: &SolverConfig,
) -> Result<Vec<Point>> {
    if n_steps == 0 {
        return Err(invalid("integrate needs at least one step"));
    }
    let mut traj = Vec::with_capacity(n_steps + 1);
    traj.push(y0.clone());
    for k in 0..n_steps {
        let current = traj.last().expect("trajectory is never empty");
        let next = step(method, field, current, h, cfg).and_then(StepOutcome::into_principal);
        match next {
            Ok(p) => traj.push(p),
            Err(e) => {
                return Err(GeoError::StepFailed {
                    step: k,
                    partial: traj,
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(traj)
}
