//! Root finding for the implicit step relations.
//!
//! Unknowns live on a manifold and are updated through the exponential map,
//! so iterates never leave it. Residuals are ambient matrices that vanish at
//! a solution and behave like `z − (something)` for small steps.

use nalgebra::{DMatrix, DVector};

use super::{SolverConfig, Strategy};
use crate::error::Result;
use crate::geometry::Manifold;

/// Central-difference step for the Newton Jacobian.
const FD_STEP: f64 = 1e-7;
const LINE_SEARCH_HALVINGS: usize = 30;

#[derive(Debug, Clone)]
pub(crate) struct Solve {
    pub z: DMatrix<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn norm_of(r: &Result<DMatrix<f64>>) -> f64 {
    match r {
        Ok(m) => {
            let n = m.norm();
            if n.is_finite() {
                n
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

pub(crate) fn solve<F>(m: Manifold, residual: &F, seed: DMatrix<f64>, cfg: &SolverConfig) -> Solve
where
    F: Fn(&DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    match cfg.strategy {
        Strategy::Newton => newton(m, residual, seed, cfg),
        Strategy::FixedPoint => fixed_point(m, residual, seed, cfg),
        Strategy::NewtonWithFallback => {
            let first = newton(m, residual, seed.clone(), cfg);
            if first.converged {
                return first;
            }
            let second = fixed_point(m, residual, seed, cfg);
            let iterations = first.iterations + second.iterations;
            if second.converged || second.residual < first.residual {
                Solve { iterations, ..second }
            } else {
                Solve { iterations, ..first }
            }
        }
    }
}

fn newton<F>(m: Manifold, residual: &F, seed: DMatrix<f64>, cfg: &SolverConfig) -> Solve
where
    F: Fn(&DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    let mut z = seed;
    let mut r = residual(&z);
    let mut rn = norm_of(&r);
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        if rn <= cfg.tolerance {
            break;
        }
        let Ok(rv) = r.as_ref() else { break };
        let Ok(basis) = m.tangent_basis_raw(&z) else { break };
        let mut jac = DMatrix::zeros(rv.len(), basis.len());
        let mut ok = true;
        for (i, b) in basis.iter().enumerate() {
            let plus = m.exp_raw(&z, &(b * FD_STEP)).and_then(|p| residual(&p));
            let minus = m.exp_raw(&z, &(b * -FD_STEP)).and_then(|p| residual(&p));
            match (plus, minus) {
                (Ok(p), Ok(q)) => {
                    let col = (p - q) / (2.0 * FD_STEP);
                    jac.set_column(i, &DVector::from_iterator(col.len(), col.iter().copied()));
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        let rhs = -DVector::from_iterator(rv.len(), rv.iter().copied());
        let Ok(delta) = jac.svd(true, true).solve(&rhs, 1e-14) else { break };
        if delta.iter().any(|d| !d.is_finite()) {
            break;
        }
        let mut step = DMatrix::zeros(z.nrows(), z.ncols());
        for (b, d) in basis.iter().zip(delta.iter()) {
            step += b * *d;
        }
        iterations += 1;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..LINE_SEARCH_HALVINGS {
            if let Ok(zt) = m.exp_raw(&z, &(&step * t)) {
                let rt = residual(&zt);
                let nt = norm_of(&rt);
                if nt < rn {
                    z = zt;
                    r = rt;
                    rn = nt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Solve { z, residual: rn, iterations, converged: rn <= cfg.tolerance }
}

fn fixed_point<F>(m: Manifold, residual: &F, seed: DMatrix<f64>, cfg: &SolverConfig) -> Solve
where
    F: Fn(&DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    let mut z = seed;
    let mut r = residual(&z);
    let mut rn = norm_of(&r);
    let mut iterations = 0;
    while iterations < cfg.max_iterations && rn > cfg.tolerance {
        let Ok(rv) = r.as_ref() else { break };
        let step = -m.to_tangent_raw(&z, rv);
        let Ok(zn) = m.exp_raw(&z, &step) else { break };
        let rnext = residual(&zn);
        let nn = norm_of(&rnext);
        iterations += 1;
        if !nn.is_finite() || nn > 1e3 * rn.max(cfg.tolerance) {
            break;
        }
        z = zn;
        r = rnext;
        rn = nn;
    }
    Solve { z, residual: rn, iterations, converged: rn <= cfg.tolerance }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(strategy: Strategy) -> SolverConfig {
        SolverConfig { strategy, ..SolverConfig::default() }
    }

    #[test]
    fn newton_solves_scalar_cubic() {
        // z³ − 2 = 0 on ℝ
        let res = |z: &DMatrix<f64>| Ok(DMatrix::from_element(1, 1, z[0].powi(3) - 2.0));
        let s = solve(Manifold::Euclidean(1), &res, DMatrix::from_element(1, 1, 1.0), &cfg(Strategy::Newton));
        assert!(s.converged);
        assert!((s.z[0] - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_contraction() {
        // z = 0.5 cos z  ⇔  r(z) = z − 0.5 cos z
        let res = |z: &DMatrix<f64>| Ok(DMatrix::from_element(1, 1, z[0] - 0.5 * z[0].cos()));
        let s = solve(Manifold::Euclidean(1), &res, DMatrix::zeros(1, 1), &cfg(Strategy::FixedPoint));
        assert!(s.converged);
        assert!((s.z[0] - 0.5 * s.z[0].cos()).abs() <= 1e-12);
    }

    #[test]
    fn unsolvable_reports_nonconvergence() {
        let res = |z: &DMatrix<f64>| Ok(DMatrix::from_element(1, 1, z[0] * z[0] + 1.0));
        let s = solve(
            Manifold::Euclidean(1),
            &res,
            DMatrix::from_element(1, 1, 3.0),
            &cfg(Strategy::NewtonWithFallback),
        );
        assert!(!s.converged);
        assert!(s.residual >= 1.0);
    }
}
