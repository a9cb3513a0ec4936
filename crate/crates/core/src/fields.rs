//! Vector fields, the logarithmic g-norm of their covariant derivative, and
//! sampling estimates of the monotonicity constant ν.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, GeoError, Result};
use crate::geometry::{ChartBundle, ChartKind, Manifold, Point, Tangent};
use crate::linalg;

type EvalFn = dyn Fn(&DMatrix<f64>) -> Result<DMatrix<f64>> + Send + Sync;
type IsotropyFn = dyn Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync;
/// Analytic chart components and their Jacobian `∂_i X^k` (row k, column i).
/// Returns `None` for charts it does not know about.
type ChartJetFn = dyn Fn(&ChartBundle, &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> + Send + Sync;

/// A smooth vector field on one of the supported manifolds.
#[derive(Clone)]
pub struct VectorField {
    manifold: Manifold,
    name: String,
    eval: Arc<EvalFn>,
    isotropy: Option<Arc<IsotropyFn>>,
    chart_jet: Option<Arc<ChartJetFn>>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("manifold", &self.manifold)
            .field("name", &self.name)
            .field("isotropy", &self.isotropy.is_some())
            .finish()
    }
}

impl VectorField {
    /// Wraps a closure mapping point coordinates to ambient tangent coordinates.
    pub fn new<F>(manifold: Manifold, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&DMatrix<f64>) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        VectorField {
            manifold,
            name: name.into(),
            eval: Arc::new(f),
            isotropy: None,
            chart_jet: None,
        }
    }

    /// Attaches an isotropy map `a(y)` with `a(y) × y = X(y)` (S² only).
    pub fn with_isotropy<F>(mut self, a: F) -> Self
    where
        F: Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync + 'static,
    {
        self.isotropy = Some(Arc::new(a));
        self
    }

    /// Supplies analytic chart components and partial derivatives.
    pub fn with_chart_jet<F>(mut self, jet: F) -> Self
    where
        F: Fn(&ChartBundle, &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> + Send + Sync + 'static,
    {
        self.chart_jet = Some(Arc::new(jet));
        self
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_isotropy(&self) -> bool {
        self.isotropy.is_some()
    }

    pub(crate) fn eval_raw(&self, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        (self.eval)(p)
    }

    /// `X|_p`.
    pub fn eval(&self, p: &Point) -> Result<Tangent> {
        if p.manifold() != self.manifold {
            return Err(invalid(format!(
                "field on {:?} evaluated at a point of {:?}",
                self.manifold,
                p.manifold()
            )));
        }
        let v = self.eval_raw(p.coords())?;
        Ok(Tangent::new_unchecked(p.clone(), v))
    }

    /// Isotropy map `a(y)`, if the field carries one.
    pub fn isotropy_at(&self, y: &Vector3<f64>) -> Option<Vector3<f64>> {
        self.isotropy.as_ref().map(|a| a(y))
    }

    /// Chart components `X^k(x)`.
    pub fn chart_components(&self, chart: &ChartBundle, x: &[f64]) -> Result<DVector<f64>> {
        if let Some(jet) = &self.chart_jet {
            if let Some((c, _)) = jet(chart, x) {
                return Ok(c);
            }
        }
        let p = chart.from_chart(x)?;
        let v = self.eval_raw(p.coords())?;
        chart.tangent_components(x, &v)
    }

    /// Components and Jacobian `∂_i X^k` (row k, column i); central differences
    /// with step `max(1e-6, 1e-6·|x_i|)` unless analytic partials were supplied.
    pub fn chart_jet(&self, chart: &ChartBundle, x: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if let Some(jet) = &self.chart_jet {
            if let Some(out) = jet(chart, x) {
                return Ok(out);
            }
        }
        let base = self.chart_components(chart, x)?;
        let m = x.len();
        let mut jac = DMatrix::zeros(m, m);
        for i in 0..m {
            let step = 1e-6_f64.max(1e-6 * x[i].abs());
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += step;
            xm[i] -= step;
            let fp = self.chart_components(chart, &xp)?;
            let fm = self.chart_components(chart, &xm)?;
            jac.set_column(i, &((fp - fm) / (2.0 * step)));
        }
        Ok((base, jac))
    }
}

/// The identically zero field.
pub fn zero_field(m: Manifold) -> VectorField {
    let (r, c) = m.shape();
    let f = VectorField::new(m, "zero", move |_| Ok(DMatrix::zeros(r, c)));
    if m == Manifold::Sphere2 {
        f.with_isotropy(|_| Vector3::zeros())
    } else {
        f
    }
}

fn e3_cross(p: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(3, 1, &[-p[1], p[0], 0.0])
}

/// Rotation about the `e₃` axis on S², `X(y) = e₃ × y`. Its isotropy map is
/// the constant `a(y) = e₃`.
pub fn killing_rotation_field() -> VectorField {
    VectorField::new(Manifold::Sphere2, "killing", |p| Ok(e3_cross(p)))
        .with_isotropy(|_| Vector3::z())
}

/// The same rotation field with isotropy map `a(y) = e₃ + (c − 1) y₃ y`.
pub fn isotropy_field(c: f64) -> VectorField {
    VectorField::new(Manifold::Sphere2, format!("isotropy(c={c})"), |p| Ok(e3_cross(p)))
        .with_isotropy(move |y| Vector3::z() + y * ((c - 1.0) * y.z))
}

/// Linear field `ẏ = A y` on ℝⁿ.
pub fn linear_field(a: DMatrix<f64>) -> Result<VectorField> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(invalid("linear field needs a non-empty square matrix"));
    }
    let n = a.nrows();
    let ae = a.clone();
    let aj = a;
    Ok(VectorField::new(Manifold::Euclidean(n), "linear", move |p| Ok(&ae * p))
        .with_chart_jet(move |chart, x| match chart.kind() {
            ChartKind::Identity(k) if k == n => {
                let xv = DVector::from_column_slice(x);
                Some((&aj * xv, aj.clone()))
            }
            _ => None,
        }))
}

/// Targets and weights of the Karcher-mean gradient flow on SPD(n).
#[derive(Debug, Clone, PartialEq)]
pub struct KarcherFieldSpec {
    targets: Vec<Point>,
    weights: Vec<f64>,
}

impl KarcherFieldSpec {
    /// Unit weights, i.e. the negative gradient of `½ Σ d²(·, Y_j)`.
    pub fn new(targets: Vec<Point>) -> Result<Self> {
        let w = vec![1.0; targets.len()];
        Self::with_weights(targets, w)
    }

    pub fn with_weights(targets: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let first = targets
            .first()
            .ok_or_else(|| invalid("Karcher field needs at least one target"))?;
        let m = first.manifold();
        if !matches!(m, Manifold::Spd(_)) {
            return Err(invalid("Karcher targets must be SPD matrices"));
        }
        if targets.iter().any(|t| t.manifold() != m) {
            return Err(invalid("Karcher targets have mixed sizes"));
        }
        if weights.len() != targets.len() || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("need one positive weight per target"));
        }
        Ok(KarcherFieldSpec { targets, weights })
    }

    pub fn manifold(&self) -> Manifold {
        self.targets[0].manifold()
    }

    pub fn targets(&self) -> &[Point] {
        &self.targets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Negative Riemannian gradient of `½ Σ w_j d²(A, Y_j)`:
/// `X(A) = Σ w_j A^{1/2} log(A^{-1/2} Y_j A^{-1/2}) A^{1/2}`.
pub fn karcher_gradient_field(spec: &KarcherFieldSpec) -> VectorField {
    let targets: Vec<DMatrix<f64>> = spec.targets.iter().map(|t| t.coords().clone()).collect();
    let weights = spec.weights.clone();
    VectorField::new(spec.manifold(), "karcher", move |a| {
        let (s, si) = linalg::sqrt_pair(a).map_err(|_| {
            invalid("Karcher field evaluated at a matrix that is not positive definite")
        })?;
        let mut inner = DMatrix::zeros(a.nrows(), a.ncols());
        for (y, w) in targets.iter().zip(&weights) {
            let l = linalg::logm_spd(&linalg::symmetrize(&(&si * y * &si)))?;
            inner += l * *w;
        }
        Ok(linalg::symmetrize(&(&s * inner * &s)))
    })
}

/// Matrix `𝒜^k_i = ∂_i X^k + Γ^k_{ij} X^j` of `∇X` in the chart.
pub fn covariant_derivative_matrix(
    field: &VectorField,
    chart: &ChartBundle,
    x: &[f64],
) -> Result<DMatrix<f64>> {
    if chart.manifold() != field.manifold() {
        return Err(invalid("chart and field live on different manifolds"));
    }
    let (comp, mut a) = field.chart_jet(chart, x)?;
    let gamma = chart.christoffel(x)?;
    let m = x.len();
    for k in 0..m {
        for i in 0..m {
            let mut s = 0.0;
            for j in 0..m {
                s += gamma.get(k, i, j) * comp[j];
            }
            a[(k, i)] += s;
        }
    }
    Ok(a)
}

/// Logarithmic g-norm `μ_g(∇X)` at `x`: the largest eigenvalue of the
/// symmetric part of `g^{1/2} 𝒜 g^{-1/2}`, which equals `sup g(𝒜v, v)/g(v, v)`.
pub fn log_norm_at(field: &VectorField, chart: &ChartBundle, x: &[f64]) -> Result<f64> {
    let a = covariant_derivative_matrix(field, chart, x)?;
    let g = chart.metric_matrix(x)?;
    let (gs, gsi) = linalg::sqrt_pair(&g)
        .map_err(|_| GeoError::Numerical("singular metric matrix".into()))?;
    let b = gs * a * gsi;
    Ok(linalg::max_eigenvalue(&linalg::symmetrize(&b)))
}

/// `max |⟨𝒜Y, Z⟩_g + ⟨𝒜Z, Y⟩_g|` over the trial pairs; vanishes for Killing fields.
pub fn killing_defect(
    field: &VectorField,
    chart: &ChartBundle,
    x: &[f64],
    pairs: &[(DVector<f64>, DVector<f64>)],
) -> Result<f64> {
    let a = covariant_derivative_matrix(field, chart, x)?;
    let g = chart.metric_matrix(x)?;
    let m = x.len();
    let mut worst = 0.0_f64;
    for (y, z) in pairs {
        if y.len() != m || z.len() != m {
            return Err(invalid("trial vector has the wrong dimension"));
        }
        let ay = &a * y;
        let az = &a * z;
        let s = (ay.transpose() * &g * z)[0] + (az.transpose() * &g * y)[0];
        worst = worst.max(s.abs());
    }
    Ok(worst)
}

/// All pairs of g-unit coordinate directions `(∂_i/‖∂_i‖, ∂_j/‖∂_j‖)`, `i ≤ j`.
pub fn coordinate_trial_pairs(chart: &ChartBundle, x: &[f64]) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    let g = chart.metric_matrix(x)?;
    let m = x.len();
    let unit = |i: usize| {
        let mut v = DVector::zeros(m);
        v[i] = 1.0 / g[(i, i)].sqrt();
        v
    };
    let mut out = Vec::new();
    for i in 0..m {
        for j in i..m {
            out.push((unit(i), unit(j)));
        }
    }
    Ok(out)
}

/// Region over which the supremum defining ν is sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Axis-aligned box in chart coordinates.
    ChartBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Closed geodesic ball.
    GeodesicBall { center: Point, radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityEstimate {
    pub nu: f64,
    pub samples: Vec<(Vec<f64>, f64)>,
    pub region: Region,
}

fn sample_region(
    region: &Region,
    chart: &ChartBundle,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Vec<f64>>> {
    match region {
        Region::ChartBox { lo, hi } => {
            let x: Vec<f64> = lo
                .iter()
                .zip(hi)
                .map(|(a, b)| if a == b { *a } else { rng.gen_range(*a..=*b) })
                .collect();
            Ok(chart.contains(&x).then_some(x))
        }
        Region::GeodesicBall { center, radius } => {
            let m = center.manifold();
            let basis = m.tangent_basis_raw(center.coords())?;
            let mut dir = DMatrix::zeros(m.shape().0, m.shape().1);
            let mut norm2 = 0.0;
            for b in &basis {
                let c: f64 = rng.sample(StandardNormal);
                norm2 += c * c;
                dir += b * c;
            }
            if norm2 == 0.0 {
                return Ok(None);
            }
            let r = radius * rng.gen::<f64>().powf(1.0 / basis.len() as f64);
            let v = dir * (r / norm2.sqrt());
            let q = Point::new_unchecked(m, m.exp_raw(center.coords(), &v)?);
            match chart.to_chart(&q) {
                Ok(x) if chart.contains(&x) => Ok(Some(x)),
                _ => Ok(None),
            }
        }
    }
}

/// Seeded sampling estimate of `ν = sup_U μ_g(∇X)`.
///
/// Samples are drawn sequentially from one ChaCha stream, so the first `n`
/// samples of a larger run coincide with a run of size `n`.
pub fn estimate_nu(
    field: &VectorField,
    chart: &ChartBundle,
    region: &Region,
    n_samples: usize,
    seed: u64,
) -> Result<MonotonicityEstimate> {
    if n_samples == 0 {
        return Err(invalid("estimate_nu needs at least one sample"));
    }
    match region {
        Region::ChartBox { lo, hi } => {
            if lo.len() != chart.dimension() || hi.len() != chart.dimension() {
                return Err(invalid("chart box has the wrong dimension"));
            }
            if lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
                return Err(invalid("chart box bounds are inverted"));
            }
        }
        Region::GeodesicBall { center, radius } => {
            if center.manifold() != chart.manifold() || !(*radius >= 0.0) {
                return Err(invalid("bad geodesic ball"));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n_samples);
    let mut misses = 0usize;
    while samples.len() < n_samples {
        match sample_region(region, chart, &mut rng)? {
            Some(x) => {
                let mu = log_norm_at(field, chart, &x)?;
                samples.push((x, mu));
            }
            None => {
                misses += 1;
                if misses > 100 * n_samples {
                    return Err(GeoError::Domain(
                        "region barely intersects the chart domain".into(),
                    ));
                }
            }
        }
    }
    let nu = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(MonotonicityEstimate { nu, samples, region: region.clone() })
}
