//! Local coordinate charts carrying the metric matrix and Christoffel symbols.

use nalgebra::{DMatrix, DVector};

use super::{Manifold, Point};
use crate::error::{invalid, GeoError, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    /// ℝⁿ with the identity chart.
    Identity(usize),
    /// S² in polar/azimuthal angles `(θ, φ)`, `y = (sinθ cosφ, sinθ sinφ, cosθ)`.
    Spherical,
    /// S² by stereographic projection from the north pole, `u = (y₁, y₂)/(1 − y₃)`.
    Stereographic,
    /// SPD(n) in its upper-triangular entries `A_ij, i ≤ j`, row-major.
    SpdEntries(usize),
}

/// Christoffel symbols `Γ^k_{ij}` of a chart at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    fn zeros(dim: usize) -> Self {
        Christoffel { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ^k_{ij}`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let d = self.dim;
        self.data[(k * d + i) * d + j] = v;
    }
}

/// Coordinate chart with its metric and connection data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChartBundle {
    kind: ChartKind,
}

/// Default chart for a manifold: identity on ℝⁿ, spherical angles on S²,
/// upper-triangular entries on SPD(n).
pub fn chart_bundle(m: Manifold) -> ChartBundle {
    let kind = match m {
        Manifold::Euclidean(n) => ChartKind::Identity(n),
        Manifold::Sphere2 => ChartKind::Spherical,
        Manifold::Spd(n) => ChartKind::SpdEntries(n),
    };
    ChartBundle { kind }
}

const POLE_MARGIN: f64 = 1e-8;

fn spd_index_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            v.push((i, j));
        }
    }
    v
}

/// Coordinate basis element `∂/∂A_ij` of the entry chart.
fn spd_unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(n, n);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

impl ChartBundle {
    pub fn new(kind: ChartKind) -> Self {
        ChartBundle { kind }
    }

    pub fn stereographic() -> Self {
        ChartBundle { kind: ChartKind::Stereographic }
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn manifold(&self) -> Manifold {
        match self.kind {
            ChartKind::Identity(n) => Manifold::Euclidean(n),
            ChartKind::Spherical | ChartKind::Stereographic => Manifold::Sphere2,
            ChartKind::SpdEntries(n) => Manifold::Spd(n),
        }
    }

    pub fn dimension(&self) -> usize {
        self.manifold().dimension()
    }

    /// Domain predicate on local coordinates.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dimension() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self.kind {
            ChartKind::Identity(_) | ChartKind::Stereographic => true,
            ChartKind::Spherical => x[0].sin() > POLE_MARGIN,
            ChartKind::SpdEntries(n) => {
                linalg::min_eigenvalue(&self.spd_matrix(n, x)) > 0.0
            }
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if !self.contains(x) {
            return Err(GeoError::Domain(format!("{x:?} not in {:?} chart", self.kind)));
        }
        Ok(())
    }

    fn spd_matrix(&self, n: usize, x: &[f64]) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(n, n);
        for (k, (i, j)) in spd_index_pairs(n).into_iter().enumerate() {
            a[(i, j)] = x[k];
            a[(j, i)] = x[k];
        }
        a
    }

    pub fn to_chart(&self, p: &Point) -> Result<Vec<f64>> {
        if p.manifold() != self.manifold() {
            return Err(invalid("point lives on a different manifold than the chart"));
        }
        let c = p.coords();
        match self.kind {
            ChartKind::Identity(_) => Ok(c.iter().copied().collect()),
            ChartKind::Spherical => {
                let rho = c[0].hypot(c[1]);
                if rho < POLE_MARGIN {
                    return Err(GeoError::Domain("spherical chart excludes the poles".into()));
                }
                Ok(vec![rho.atan2(c[2]), c[1].atan2(c[0])])
            }
            ChartKind::Stereographic => {
                let d = 1.0 - c[2];
                if d < 1e-12 {
                    return Err(GeoError::Domain(
                        "stereographic chart excludes the north pole".into(),
                    ));
                }
                Ok(vec![c[0] / d, c[1] / d])
            }
            ChartKind::SpdEntries(n) => Ok(spd_index_pairs(n)
                .into_iter()
                .map(|(i, j)| c[(i, j)])
                .collect()),
        }
    }

    pub fn from_chart(&self, x: &[f64]) -> Result<Point> {
        self.check(x)?;
        let m = self.manifold();
        let coords = match self.kind {
            ChartKind::Identity(n) => DMatrix::from_column_slice(n, 1, x),
            ChartKind::Spherical => {
                let (st, ct) = x[0].sin_cos();
                let (sp, cp) = x[1].sin_cos();
                DMatrix::from_column_slice(3, 1, &[st * cp, st * sp, ct])
            }
            ChartKind::Stereographic => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let s = 1.0 + r2;
                DMatrix::from_column_slice(3, 1, &[2.0 * x[0] / s, 2.0 * x[1] / s, (r2 - 1.0) / s])
            }
            ChartKind::SpdEntries(n) => self.spd_matrix(n, x),
        };
        Ok(Point::new_unchecked(m, coords))
    }

    /// Ambient images of the coordinate vectors `∂_i` at `x`.
    pub fn coordinate_basis(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.check(x)?;
        Ok(match self.kind {
            ChartKind::Identity(n) => (0..n)
                .map(|i| {
                    let mut e = DMatrix::zeros(n, 1);
                    e[i] = 1.0;
                    e
                })
                .collect(),
            ChartKind::Spherical => {
                let (st, ct) = x[0].sin_cos();
                let (sp, cp) = x[1].sin_cos();
                vec![
                    DMatrix::from_column_slice(3, 1, &[ct * cp, ct * sp, -st]),
                    DMatrix::from_column_slice(3, 1, &[-st * sp, st * cp, 0.0]),
                ]
            }
            ChartKind::Stereographic => {
                let (u, v) = (x[0], x[1]);
                let s = 1.0 + u * u + v * v;
                let s2 = s * s;
                vec![
                    DMatrix::from_column_slice(
                        3,
                        1,
                        &[2.0 * (s - 2.0 * u * u) / s2, -4.0 * u * v / s2, 4.0 * u / s2],
                    ),
                    DMatrix::from_column_slice(
                        3,
                        1,
                        &[-4.0 * u * v / s2, 2.0 * (s - 2.0 * v * v) / s2, 4.0 * v / s2],
                    ),
                ]
            }
            ChartKind::SpdEntries(n) => spd_index_pairs(n)
                .into_iter()
                .map(|(i, j)| spd_unit(n, i, j))
                .collect(),
        })
    }

    /// Chart components `ξ` of an ambient tangent vector `v = Σ ξ_i ∂_i`.
    pub fn tangent_components(&self, x: &[f64], v: &DMatrix<f64>) -> Result<DVector<f64>> {
        let basis = self.coordinate_basis(x)?;
        let m = basis.len();
        let jac = DMatrix::from_fn(v.len(), m, |r, c| basis[c][r]);
        let rhs = DVector::from_iterator(v.len(), v.iter().copied());
        let normal = jac.transpose() * &jac;
        normal
            .lu()
            .solve(&(jac.transpose() * rhs))
            .ok_or_else(|| GeoError::Numerical("degenerate coordinate basis".into()))
    }

    /// Metric matrix `g_ij(x) = g(∂_i, ∂_j)`.
    pub fn metric_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(match self.kind {
            ChartKind::Identity(n) => DMatrix::identity(n, n),
            ChartKind::Spherical => {
                let st = x[0].sin();
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, st * st])
            }
            ChartKind::Stereographic => {
                let s = 1.0 + x[0] * x[0] + x[1] * x[1];
                DMatrix::identity(2, 2) * (4.0 / (s * s))
            }
            ChartKind::SpdEntries(n) => {
                let ai = linalg::inverse_spd(&self.spd_matrix(n, x))?;
                let units: Vec<_> = spd_index_pairs(n)
                    .into_iter()
                    .map(|(i, j)| spd_unit(n, i, j))
                    .collect();
                let m = units.len();
                DMatrix::from_fn(m, m, |a, b| (&ai * &units[a] * &ai * &units[b]).trace())
            }
        })
    }

    /// Christoffel symbols of the Levi-Civita connection at `x`.
    pub fn christoffel(&self, x: &[f64]) -> Result<Christoffel> {
        self.check(x)?;
        let dim = self.dimension();
        let mut g = Christoffel::zeros(dim);
        match self.kind {
            ChartKind::Identity(_) => {}
            ChartKind::Spherical => {
                let (st, ct) = x[0].sin_cos();
                g.set(0, 1, 1, -st * ct);
                g.set(1, 0, 1, ct / st);
                g.set(1, 1, 0, ct / st);
            }
            ChartKind::Stereographic => {
                // conformal metric e^{2f} δ with f = ln 2 − ln(1 + |u|²)
                let s = 1.0 + x[0] * x[0] + x[1] * x[1];
                let df = [-2.0 * x[0] / s, -2.0 * x[1] / s];
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            let mut v = 0.0;
                            if k == i {
                                v += df[j];
                            }
                            if k == j {
                                v += df[i];
                            }
                            if i == j {
                                v -= df[k];
                            }
                            g.set(k, i, j, v);
                        }
                    }
                }
            }
            ChartKind::SpdEntries(n) => {
                // ∇_U V = DV[U] − ½(U A⁻¹ V + V A⁻¹ U)
                let ai = linalg::inverse_spd(&self.spd_matrix(n, x))?;
                let pairs = spd_index_pairs(n);
                let units: Vec<_> = pairs.iter().map(|&(i, j)| spd_unit(n, i, j)).collect();
                for a in 0..dim {
                    for b in a..dim {
                        let m = (&units[a] * &ai * &units[b] + &units[b] * &ai * &units[a]) * -0.5;
                        for (k, &(i, j)) in pairs.iter().enumerate() {
                            g.set(k, a, b, m[(i, j)]);
                            g.set(k, b, a, m[(i, j)]);
                        }
                    }
                }
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{metric_inner, Tangent};

    #[test]
    fn euclidean_chart_is_flat() {
        let c = chart_bundle(Manifold::Euclidean(3));
        let x = [0.3, -1.0, 2.0];
        assert_eq!(c.metric_matrix(&x).unwrap(), DMatrix::identity(3, 3));
        let g = c.christoffel(&x).unwrap();
        assert!(g.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spherical_metric_is_diag_one_sin2() {
        let c = chart_bundle(Manifold::Sphere2);
        let x = [0.7, 2.0];
        let g = c.metric_matrix(&x).unwrap();
        assert!((g[(1, 1)] - 0.7_f64.sin().powi(2)).abs() < 1e-15);
        // pull back through the parametrization: g_ij = ∂_i·∂_j
        let b = c.coordinate_basis(&x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((b[i].dot(&b[j]) - g[(i, j)]).abs() < 1e-14);
            }
        }
        assert!(c.from_chart(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn spd1_metric_is_inverse_square() {
        let c = chart_bundle(Manifold::Spd(1));
        let g = c.metric_matrix(&[3.0]).unwrap();
        assert!((g[(0, 0)] - 1.0 / 9.0).abs() < 1e-15);
        assert!((c.christoffel(&[3.0]).unwrap().get(0, 0, 0) + 1.0 / 3.0).abs() < 1e-15);
        assert!(c.from_chart(&[-1.0]).is_err());
    }

    #[test]
    fn christoffel_symmetric_in_lower_indices() {
        for c in [
            chart_bundle(Manifold::Sphere2),
            ChartBundle::stereographic(),
            chart_bundle(Manifold::Spd(2)),
        ] {
            let x: Vec<f64> = match c.kind() {
                ChartKind::SpdEntries(_) => vec![2.0, 0.3, 1.1],
                _ => vec![0.8, 0.4],
            };
            let g = c.christoffel(&x).unwrap();
            let d = g.dim();
            for k in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        assert_eq!(g.get(k, i, j), g.get(k, j, i));
                    }
                }
            }
        }
    }

    /// Christoffel symbols from finite differences of the metric matrix,
    /// `Γ^k_ij = ½ g^{kl}(∂_i g_lj + ∂_j g_li − ∂_l g_ij)`.
    fn christoffel_from_metric(c: &ChartBundle, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let h = 1e-5;
        let dg: Vec<DMatrix<f64>> = (0..d)
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (c.metric_matrix(&xp).unwrap() - c.metric_matrix(&xm).unwrap()) / (2.0 * h)
            })
            .collect();
        let ginv = c.metric_matrix(x).unwrap().try_inverse().unwrap();
        let mut out = vec![0.0; d * d * d];
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += 0.5 * ginv[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                    }
                    out[(k * d + i) * d + j] = s;
                }
            }
        }
        out
    }

    #[test]
    fn christoffel_matches_metric_derivatives() {
        for (c, x) in [
            (chart_bundle(Manifold::Sphere2), vec![0.9, -0.3]),
            (ChartBundle::stereographic(), vec![0.4, -1.2]),
            (chart_bundle(Manifold::Spd(2)), vec![1.7, -0.4, 0.9]),
        ] {
            let want = christoffel_from_metric(&c, &x);
            let got = c.christoffel(&x).unwrap();
            for (a, b) in got.data.iter().zip(&want) {
                assert!((a - b).abs() < 1e-8, "{:?}: {a} vs {b}", c.kind());
            }
        }
    }

    #[test]
    fn round_trip_and_components() {
        let c = ChartBundle::stereographic();
        let x = [0.3, -0.8];
        let p = c.from_chart(&x).unwrap();
        let back = c.to_chart(&p).unwrap();
        assert!((back[0] - x[0]).abs() < 1e-12 && (back[1] - x[1]).abs() < 1e-12);

        let b = c.coordinate_basis(&x).unwrap();
        let v = &b[0] * 0.5 - &b[1] * 2.0;
        let xi = c.tangent_components(&x, &v).unwrap();
        assert!((xi[0] - 0.5).abs() < 1e-12 && (xi[1] + 2.0).abs() < 1e-12);

        // metric matrix agrees with the intrinsic metric on pushed-forward vectors
        let g = c.metric_matrix(&x).unwrap();
        let t = Tangent::new_unchecked(p.clone(), v.clone());
        let direct = metric_inner(&t, &t).unwrap();
        let via = (xi.transpose() * &g * &xi)[0];
        assert!((direct - via).abs() < 1e-12);
    }
}
