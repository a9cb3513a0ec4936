//! Geodesic one-step integrators on S² and the SPD cone, with tools to study
//! their contractivity.
//!
//! - [`geometry`]: manifolds, exponential/logarithm maps, distances, charts.
//! - [`fields`]: vector fields, logarithmic g-norm and monotonicity constant.
//! - [`integrators`]: GEE, GIE, GIMP, SPHMP, implicit Lie–Euler, reference flow.
//! - [`analysis`]: contractivity sweeps, root enumeration for the GIE step on
//!   S², flow contraction, global error bounds, Karcher means.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod integrators;
pub mod linalg;

pub use error::{GeoError, Result};
pub use geometry::{Manifold, Point, Tangent};
