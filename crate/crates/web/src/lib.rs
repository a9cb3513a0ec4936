//! Browser bindings for three interactive views: the GIE solution branches
//! of the rotation field, a one-step distance sweep on S², and the arrival
//! curve of implicit Lie–Euler as the isotropy parameter varies.
//!
//! Every export has a plain Rust counterpart that returns `Result<_, String>`,
//! so the logic is testable without a JavaScript host.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use geostab::analysis::{bifurcation_diagram, contractivity_sweep, linear_grid};
use geostab::fields::killing_rotation_field;
use geostab::integrators::{step, MethodId, SolverConfig};
use geostab::Point;
use wasm_bindgen::prelude::*;

fn sph(theta: f64, phi: f64) -> Result<Point, String> {
    Point::sphere(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()).map_err(|e| e.to_string())
}

/// Roots for `count` step sizes evenly spaced in `(0, h_max]`, flattened as
/// `(h, z)` pairs.
pub fn bifurcation_points(z0: f64, h_max: f64, count: usize) -> Result<Vec<f64>, String> {
    if count < 2 || !(h_max > 0.0) {
        return Err("need count ≥ 2 and h_max > 0".into());
    }
    let grid = linear_grid(h_max / count as f64, h_max, count);
    let diagram = bifurcation_diagram(z0, &grid).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (h, roots) in diagram.h_grid.iter().zip(&diagram.roots) {
        for z in roots {
            out.push(*h);
            out.push(*z);
        }
    }
    Ok(out)
}

/// Distance after one step of `method` on the rotation field, for `count`
/// step sizes in `[h_min, h_max]`, flattened as `(h, d0, d_after)` triples.
/// `d_after` is NaN where a step did not converge.
#[allow(clippy::too_many_arguments)]
pub fn sphere_sweep(
    method: &str,
    theta_x: f64,
    phi_x: f64,
    theta_y: f64,
    phi_y: f64,
    h_min: f64,
    h_max: f64,
    count: usize,
) -> Result<Vec<f64>, String> {
    let m: MethodId = method.parse().map_err(|e: geostab::GeoError| e.to_string())?;
    if count < 2 || !(h_min > 0.0) || !(h_max > h_min) {
        return Err("need count ≥ 2 and 0 < h_min < h_max".into());
    }
    let (x, y) = (sph(theta_x, phi_x)?, sph(theta_y, phi_y)?);
    let grid = linear_grid(h_min, h_max, count);
    let recs = contractivity_sweep(m, &killing_rotation_field(), &x, &y, &grid, &SolverConfig::default())
        .map_err(|e| e.to_string())?;
    Ok(recs
        .iter()
        .flat_map(|r| [r.h, r.d0, r.d_after.unwrap_or(f64::NAN)])
        .collect())
}

/// Arrival points of one implicit Lie–Euler step from `(θ, φ)` for `count`
/// values of `c` in `[c_min, c_max]`, flattened as `(c, x, y, z)`.
pub fn isotropy_arrival(
    theta: f64,
    phi: f64,
    h: f64,
    c_min: f64,
    c_max: f64,
    count: usize,
) -> Result<Vec<f64>, String> {
    if count < 2 || !(c_max > c_min) {
        return Err("need count ≥ 2 and c_min < c_max".into());
    }
    let y = sph(theta, phi)?;
    let field = killing_rotation_field();
    let cfg = SolverConfig::default();
    let mut out = Vec::with_capacity(4 * count);
    for c in linear_grid(c_min, c_max, count) {
        out.push(c);
        match step(MethodId::LieEulerImplicit(c), &field, &y, h, &cfg).and_then(|o| o.into_principal()) {
            Ok(p) => out.extend(p.coords().iter()),
            Err(_) => out.extend([f64::NAN; 3]),
        }
    }
    Ok(out)
}

#[wasm_bindgen(js_name = bifurcationPoints)]
pub fn bifurcation_points_js(z0: f64, h_max: f64, count: usize) -> Result<Vec<f64>, JsValue> {
    bifurcation_points(z0, h_max, count).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = sphereSweep)]
#[allow(clippy::too_many_arguments)]
pub fn sphere_sweep_js(
    method: &str,
    theta_x: f64,
    phi_x: f64,
    theta_y: f64,
    phi_y: f64,
    h_min: f64,
    h_max: f64,
    count: usize,
) -> Result<Vec<f64>, JsValue> {
    sphere_sweep(method, theta_x, phi_x, theta_y, phi_y, h_min, h_max, count).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = isotropyArrival)]
pub fn isotropy_arrival_js(
    theta: f64,
    phi: f64,
    h: f64,
    c_min: f64,
    c_max: f64,
    count: usize,
) -> Result<Vec<f64>, JsValue> {
    isotropy_arrival(theta, phi, h, c_min, c_max, count).map_err(|e| JsValue::from_str(&e))
}
