//! Roots of the third-component equation of the GIE step for the rotation
//! field on S²: `z₀ = cos(h √(1 − z²)) z`.

use crate::error::{invalid, Result};

/// Cells of the sign-change scan on `[−1, 1]`.
pub const SCAN_CELLS: usize = 4096;

/// `q(z, h) = cos(h √(1 − z²)) z`.
pub fn q_residual(z: f64, h: f64) -> f64 {
    (h * (1.0 - z * z).max(0.0).sqrt()).cos() * z
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    // to full precision; every zero here is simple
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// All `z ∈ [−1, 1]` with `q(z, h) = z₀`, ascending. Found by a sign-change
/// scan over [`SCAN_CELLS`] cells followed by bisection; tangential zeros
/// are not detected.
pub fn enumerate_roots(z0: f64, h: f64) -> Result<Vec<f64>> {
    if !(z0.abs() <= 1.0) {
        return Err(invalid(format!("|z0| must be at most 1, got {z0}")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid(format!("step size must be positive, got {h}")));
    }
    let f = |z: f64| q_residual(z, h) - z0;
    let nodes: Vec<f64> = (0..=SCAN_CELLS)
        .map(|i| -1.0 + 2.0 * i as f64 / SCAN_CELLS as f64)
        .collect();
    let vals: Vec<f64> = nodes.iter().map(|&z| f(z)).collect();
    let mut roots: Vec<f64> = nodes
        .iter()
        .zip(&vals)
        .filter(|(_, v)| **v == 0.0)
        .map(|(z, _)| *z)
        .collect();
    for i in 0..SCAN_CELLS {
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa != 0.0 && fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
            roots.push(bisect(f, nodes[i], nodes[i + 1], fa));
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(roots)
}

/// Root sets of [`enumerate_roots`] over a grid of step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationDiagram {
    pub z0: f64,
    pub h_grid: Vec<f64>,
    pub roots: Vec<Vec<f64>>,
}

impl BifurcationDiagram {
    pub fn counts(&self) -> Vec<usize> {
        self.roots.iter().map(Vec::len).collect()
    }
}

pub fn bifurcation_diagram(z0: f64, h_grid: &[f64]) -> Result<BifurcationDiagram> {
    let roots = h_grid
        .iter()
        .map(|&h| enumerate_roots(z0, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(BifurcationDiagram { z0, h_grid: h_grid.to_vec(), roots })
}
