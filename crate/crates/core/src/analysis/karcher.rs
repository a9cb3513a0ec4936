use crate::error::{GeoError, Result};
use crate::fields::{karcher_gradient_field, KarcherFieldSpec};
use crate::geometry::Point;
use crate::integrators::{gie_step, SolverConfig};
use crate::linalg;

/// Restarts of the implicit gradient flow before giving up.
const MAX_RESTARTS: usize = 500;

/// `exp(Σ w_j log Y_j / Σ w_j)`; exact for commuting targets.
pub fn log_euclidean_mean(spec: &KarcherFieldSpec) -> Result<Point> {
    let (n, _) = spec.manifold().shape();
    let total: f64 = spec.weights().iter().sum();
    let mut acc = nalgebra::DMatrix::zeros(n, n);
    for (y, w) in spec.targets().iter().zip(spec.weights()) {
        acc += linalg::logm_spd(y.coords())? * (*w / total);
    }
    spec.manifold().point(linalg::expm_sym(&linalg::symmetrize(&acc)))
}

/// Minimizer of `½ Σ w_j d²(·, Y_j)`, found by implicit Euler steps of size 1
/// on the negative gradient flow, started at the log-Euclidean mean, until
/// `‖X‖_g ≤ tol`.
pub fn karcher_mean(spec: &KarcherFieldSpec, tol: f64) -> Result<Point> {
    if !(tol > 0.0) {
        return Err(crate::error::invalid("tolerance must be positive"));
    }
    let field = karcher_gradient_field(spec);
    let cfg = SolverConfig { tolerance: (tol * 1e-3).max(1e-14), ..SolverConfig::default() };
    let mut x = log_euclidean_mean(spec)?;
    let mut norm = f64::INFINITY;
    for _ in 0..MAX_RESTARTS {
        norm = field.eval(&x)?.norm()?;
        if norm <= tol {
            return Ok(x);
        }
        x = gie_step(&field, &x, 1.0, &cfg)?.into_principal()?;
    }
    Err(GeoError::NotConverged { iterations: MAX_RESTARTS, residual: norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::distance;

    #[test]
    fn single_target_is_its_own_mean() {
        let y = Point::spd(2, &[2.0, 0.3, 0.3, 1.0]).unwrap();
        let spec = KarcherFieldSpec::new(vec![y.clone()]).unwrap();
        assert!(distance(&karcher_mean(&spec, 1e-10).unwrap(), &y).unwrap() < 1e-9);
    }

    #[test]
    fn non_commuting_pair_zeroes_the_field() {
        let a = Point::spd(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let b = Point::spd(2, &[1.0, -0.4, -0.4, 3.0]).unwrap();
        let spec = KarcherFieldSpec::new(vec![a, b]).unwrap();
        let m = karcher_mean(&spec, 1e-10).unwrap();
        let f = karcher_gradient_field(&spec);
        assert!(f.eval(&m).unwrap().norm().unwrap() <= 1e-10);
    }
}
