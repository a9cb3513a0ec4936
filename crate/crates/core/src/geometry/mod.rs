//! Manifolds, points, tangent vectors and the Riemannian primitives on them.
//!
//! Three manifolds are supported:
//!
//! - the unit sphere S² embedded in ℝ³ (points are unit 3-vectors, tangents are
//!   ambient 3-vectors orthogonal to the base point),
//! - the cone of symmetric positive definite `n×n` matrices with the
//!   affine-invariant metric `⟨U, V⟩_A = tr(A⁻¹ U A⁻¹ V)`,
//! - Euclidean ℝⁿ, mostly as a calibration case.
//!
//! All coordinates are stored as `DMatrix<f64>`: column vectors for S² and ℝⁿ,
//! square matrices for SPD.

mod chart;

pub use chart::{chart_bundle, ChartBundle, ChartKind, Christoffel};

use std::f64::consts::PI;

use nalgebra::{DMatrix, Vector3};

use crate::error::{invalid, GeoError, Result};
use crate::linalg;

/// Tolerance for point and tangent membership checks.
pub const POINT_TOL: f64 = 1e-12;
/// Tolerance for the sphere tangency check `p·v = 0`.
pub const TANGENT_TOL: f64 = 1e-10;
/// Eigenvalue floor used when projecting onto the SPD cone.
pub const SPD_EIGEN_FLOOR: f64 = 1e-12;

/// Sign of the sectional curvature, carried as metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureSign {
    NonPositive,
    Positive,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Manifold {
    Sphere2,
    Spd(usize),
    Euclidean(usize),
}

impl Manifold {
    /// Intrinsic dimension.
    pub fn dimension(&self) -> usize {
        match *self {
            Manifold::Sphere2 => 2,
            Manifold::Spd(n) => n * (n + 1) / 2,
            Manifold::Euclidean(n) => n,
        }
    }

    pub fn curvature_sign(&self) -> CurvatureSign {
        match self {
            Manifold::Sphere2 => CurvatureSign::Positive,
            Manifold::Spd(1) | Manifold::Euclidean(_) => CurvatureSign::Zero,
            Manifold::Spd(_) => CurvatureSign::NonPositive,
        }
    }

    /// Shape `(rows, cols)` of the coordinate storage.
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Manifold::Sphere2 => (3, 1),
            Manifold::Spd(n) => (n, n),
            Manifold::Euclidean(n) => (n, 1),
        }
    }

    fn check_descriptor(&self) -> Result<()> {
        match *self {
            Manifold::Spd(0) | Manifold::Euclidean(0) => {
                Err(invalid("manifold dimension must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    fn check_shape(&self, m: &DMatrix<f64>) -> Result<()> {
        self.check_descriptor()?;
        if m.shape() != self.shape() {
            return Err(invalid(format!(
                "expected coordinates of shape {:?} for {:?}, got {:?}",
                self.shape(),
                self,
                m.shape()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(invalid("non-finite coordinates"));
        }
        Ok(())
    }

    /// Validates raw coordinates as a point of this manifold.
    pub fn point(&self, coords: DMatrix<f64>) -> Result<Point> {
        self.check_shape(&coords)?;
        match *self {
            Manifold::Sphere2 => {
                let n = coords.norm();
                if (n - 1.0).abs() > POINT_TOL {
                    return Err(invalid(format!("sphere point has norm {n}")));
                }
            }
            Manifold::Spd(_) => {
                if linalg::asymmetry(&coords) > POINT_TOL {
                    return Err(invalid("SPD point is not symmetric"));
                }
                if !(linalg::min_eigenvalue(&coords) > 0.0) {
                    return Err(invalid("SPD point is not positive definite"));
                }
            }
            Manifold::Euclidean(_) => {}
        }
        Ok(Point { manifold: *self, coords })
    }

    /// Validates `vec` as a tangent vector at `base`.
    pub fn tangent(&self, base: &Point, vec: DMatrix<f64>) -> Result<Tangent> {
        if base.manifold != *self {
            return Err(invalid("tangent base lives on a different manifold"));
        }
        self.check_shape(&vec)?;
        match *self {
            Manifold::Sphere2 => {
                let d = base.coords.dot(&vec);
                if d.abs() > TANGENT_TOL * (1.0 + vec.norm()) {
                    return Err(invalid(format!(
                        "vector is not tangent to the sphere (p·v = {d:e})"
                    )));
                }
            }
            Manifold::Spd(_) => {
                if linalg::asymmetry(&vec) > POINT_TOL * (1.0 + vec.norm()) {
                    return Err(invalid("SPD tangent is not symmetric"));
                }
            }
            Manifold::Euclidean(_) => {}
        }
        Ok(Tangent { base: base.clone(), vec })
    }

    pub fn zero_tangent(&self, base: &Point) -> Tangent {
        let (r, c) = self.shape();
        Tangent { base: base.clone(), vec: DMatrix::zeros(r, c) }
    }

    // ---- raw kernels -------------------------------------------------------
    //
    // These operate on unchecked coordinates and are used by the solvers where
    // finite-difference perturbations would otherwise pay for validation.

    pub(crate) fn exp_raw(&self, p: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if v.iter().all(|x| *x == 0.0) {
            return Ok(p.clone());
        }
        match self {
            Manifold::Sphere2 => {
                let alpha = v.norm();
                let sinc = if alpha < 1e-8 {
                    1.0 - alpha * alpha / 6.0
                } else {
                    alpha.sin() / alpha
                };
                let q = p * alpha.cos() + v * sinc;
                let n = q.norm();
                Ok(q / n)
            }
            Manifold::Spd(_) => {
                let (s, si) = linalg::sqrt_pair(p)?;
                let inner = linalg::symmetrize(&(&si * v * &si));
                let e = linalg::expm_sym(&inner);
                let out = linalg::symmetrize(&(&s * e * &s));
                // beyond this condition number the result is singular in double precision
                let lam = linalg::sym_eigenvalues(&out);
                let (lo, hi) = (lam[0], lam[lam.len() - 1]);
                if out.iter().any(|x| !x.is_finite()) || !(lo > 0.0) || hi / lo > 1e14 {
                    return Err(GeoError::Numerical("SPD exponential left the cone".into()));
                }
                Ok(out)
            }
            Manifold::Euclidean(_) => Ok(p + v),
        }
    }

    pub(crate) fn log_raw(&self, p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Manifold::Sphere2 => {
                let (angle, dir) = sphere_angle_dir(p, q)?;
                Ok(dir * angle)
            }
            Manifold::Spd(_) => {
                let (s, si) = linalg::sqrt_pair(p)?;
                let inner = linalg::symmetrize(&(&si * q * &si));
                let l = linalg::logm_spd(&inner)?;
                Ok(linalg::symmetrize(&(&s * l * &s)))
            }
            Manifold::Euclidean(_) => Ok(q - p),
        }
    }

    pub(crate) fn dist_raw(&self, p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
        if p == q {
            return Ok(0.0);
        }
        match self {
            Manifold::Sphere2 => {
                let a = Vector3::new(p[0], p[1], p[2]);
                let b = Vector3::new(q[0], q[1], q[2]);
                // atan2 form stays accurate near 0 and π where arccos does not.
                Ok(a.cross(&b).norm().atan2(a.dot(&b)))
            }
            Manifold::Spd(_) => {
                let (_, si) = linalg::sqrt_pair(p)?;
                let inner = linalg::symmetrize(&(&si * q * &si));
                let lam = linalg::sym_eigenvalues(&inner);
                if lam.iter().any(|&l| !(l > 0.0)) {
                    return Err(GeoError::Numerical("distance to a non-SPD matrix".into()));
                }
                Ok(lam.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
            }
            Manifold::Euclidean(_) => Ok((q - p).norm()),
        }
    }

    pub(crate) fn inner_raw(
        &self,
        p: &DMatrix<f64>,
        u: &DMatrix<f64>,
        v: &DMatrix<f64>,
    ) -> Result<f64> {
        match self {
            Manifold::Sphere2 | Manifold::Euclidean(_) => Ok(u.dot(v)),
            Manifold::Spd(_) => {
                let ai = linalg::inverse_spd(p)?;
                Ok((&ai * u * &ai * v).trace())
            }
        }
    }

    /// Orthogonal projection of an ambient vector onto the tangent space at `p`.
    pub(crate) fn to_tangent_raw(self, p: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Manifold::Sphere2 => v - p * p.dot(v),
            Manifold::Spd(_) => linalg::symmetrize(v),
            Manifold::Euclidean(_) => v.clone(),
        }
    }

    /// A g-orthonormal basis of the tangent space at `p`.
    pub(crate) fn tangent_basis_raw(&self, p: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
        match *self {
            Manifold::Sphere2 => {
                let a = Vector3::new(p[0], p[1], p[2]);
                let axis = if a.x.abs() <= a.y.abs() && a.x.abs() <= a.z.abs() {
                    Vector3::x()
                } else if a.y.abs() <= a.z.abs() {
                    Vector3::y()
                } else {
                    Vector3::z()
                };
                let b1 = a.cross(&axis).normalize();
                let b2 = a.cross(&b1);
                Ok(vec![
                    DMatrix::from_column_slice(3, 1, b1.as_slice()),
                    DMatrix::from_column_slice(3, 1, b2.as_slice()),
                ])
            }
            Manifold::Spd(n) => {
                let (s, _) = linalg::sqrt_pair(p)?;
                Ok(sym_frobenius_basis(n)
                    .into_iter()
                    .map(|e| linalg::symmetrize(&(&s * e * &s)))
                    .collect())
            }
            Manifold::Euclidean(n) => Ok((0..n)
                .map(|i| {
                    let mut e = DMatrix::zeros(n, 1);
                    e[i] = 1.0;
                    e
                })
                .collect()),
        }
    }

    /// Maps arbitrary ambient coordinates onto the manifold.
    pub fn project(&self, raw: DMatrix<f64>) -> Result<Point> {
        self.check_shape(&raw)?;
        let coords = match *self {
            Manifold::Sphere2 => {
                let n = raw.norm();
                if n < 1e-300 {
                    return Err(GeoError::Degenerate(
                        "cannot project the zero vector onto the sphere".into(),
                    ));
                }
                raw / n
            }
            Manifold::Spd(_) => {
                let s = linalg::symmetrize(&raw);
                if linalg::min_eigenvalue(&s) > 0.0 {
                    s
                } else {
                    linalg::sym_apply(&s, |l| l.max(SPD_EIGEN_FLOOR))
                }
            }
            Manifold::Euclidean(_) => raw,
        };
        Ok(Point { manifold: *self, coords })
    }
}

/// Orthonormal basis of symmetric matrices for the Frobenius inner product.
fn sym_frobenius_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(n, n);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = r;
                e[(j, i)] = r;
            }
            out.push(e);
        }
    }
    out
}

fn sphere_angle_dir(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    let a = Vector3::new(p[0], p[1], p[2]);
    let b = Vector3::new(q[0], q[1], q[2]);
    let c = a.dot(&b);
    let perp = b - a * c;
    let s = perp.norm();
    if s < 1e-12 {
        if c < 0.0 {
            return Err(GeoError::NoUniqueGeodesic);
        }
        return Ok((0.0, DMatrix::zeros(3, 1)));
    }
    let angle = s.atan2(c);
    Ok((angle, DMatrix::from_column_slice(3, 1, (perp / s).as_slice())))
}

/// A point on a manifold, tagged with the manifold it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    manifold: Manifold,
    coords: DMatrix<f64>,
}

impl Point {
    /// Unit 3-vector on S². Fails if `|(x, y, z)| ≠ 1` beyond [`POINT_TOL`].
    pub fn sphere(x: f64, y: f64, z: f64) -> Result<Point> {
        Manifold::Sphere2.point(DMatrix::from_column_slice(3, 1, &[x, y, z]))
    }

    /// SPD matrix from row-major entries.
    pub fn spd(n: usize, rows: &[f64]) -> Result<Point> {
        if rows.len() != n * n {
            return Err(invalid("wrong number of SPD entries"));
        }
        Manifold::Spd(n).point(DMatrix::from_row_slice(n, n, rows))
    }

    pub fn euclidean(xs: &[f64]) -> Result<Point> {
        Manifold::Euclidean(xs.len()).point(DMatrix::from_column_slice(xs.len(), 1, xs))
    }

    pub(crate) fn new_unchecked(manifold: Manifold, coords: DMatrix<f64>) -> Point {
        Point { manifold, coords }
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DMatrix<f64> {
        self.coords
    }

    /// The coordinates of an S² or ℝ³ point as a fixed-size vector.
    pub fn as_vector3(&self) -> Option<Vector3<f64>> {
        (self.coords.shape() == (3, 1))
            .then(|| Vector3::new(self.coords[0], self.coords[1], self.coords[2]))
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    base: Point,
    vec: DMatrix<f64>,
}

impl Tangent {
    pub(crate) fn new_unchecked(base: Point, vec: DMatrix<f64>) -> Tangent {
        Tangent { base, vec }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn vec(&self) -> &DMatrix<f64> {
        &self.vec
    }

    pub fn scaled(&self, s: f64) -> Tangent {
        Tangent { base: self.base.clone(), vec: &self.vec * s }
    }

    /// `‖v‖_g`.
    pub fn norm(&self) -> Result<f64> {
        Ok(metric_inner(self, self)?.max(0.0).sqrt())
    }
}

fn same_point(p: &Point, q: &Point) -> bool {
    p.manifold == q.manifold
        && p.coords.shape() == q.coords.shape()
        && (&p.coords - &q.coords).amax() <= POINT_TOL
}

fn same_manifold(p: &Point, q: &Point) -> Result<()> {
    if p.manifold != q.manifold {
        return Err(invalid(format!(
            "points live on different manifolds ({:?} vs {:?})",
            p.manifold, q.manifold
        )));
    }
    Ok(())
}

/// Riemannian exponential `exp_p(v)`.
pub fn exp_point(p: &Point, v: &Tangent) -> Result<Point> {
    if !same_point(p, &v.base) {
        return Err(invalid("tangent vector is not based at the given point"));
    }
    let m = p.manifold;
    Ok(Point::new_unchecked(m, m.exp_raw(&p.coords, &v.vec)?))
}

/// Riemannian logarithm `log_p(q)`, the inverse of [`exp_point`].
pub fn log_point(p: &Point, q: &Point) -> Result<Tangent> {
    same_manifold(p, q)?;
    let v = p.manifold.log_raw(&p.coords, &q.coords)?;
    Ok(Tangent::new_unchecked(p.clone(), v))
}

/// Geodesic distance.
pub fn distance(p: &Point, q: &Point) -> Result<f64> {
    same_manifold(p, q)?;
    p.manifold.dist_raw(&p.coords, &q.coords)
}

/// Metric `g_p(u, v)`.
pub fn metric_inner(u: &Tangent, v: &Tangent) -> Result<f64> {
    if !same_point(&u.base, &v.base) {
        return Err(invalid("tangent vectors have different base points"));
    }
    u.base.manifold.inner_raw(&u.base.coords, &u.vec, &v.vec)
}

/// Nearest point of the manifold to raw ambient coordinates.
///
/// S²: `raw / |raw|`. SPD: symmetrize, then raise eigenvalues below
/// [`SPD_EIGEN_FLOOR`] to the floor.
pub fn project_to_manifold(m: Manifold, raw: DMatrix<f64>) -> Result<Point> {
    m.project(raw)
}

/// Injectivity radius used for the geodesic-length property.
pub fn injectivity_radius(m: Manifold) -> f64 {
    match m {
        Manifold::Sphere2 => PI,
        _ => f64::INFINITY,
    }
}
