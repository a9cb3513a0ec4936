//! Experiment configuration: a TOML tree with dotted-key overrides.

use std::fmt;
use std::str::FromStr;

use geostab::fields::{
    isotropy_field, karcher_gradient_field, killing_rotation_field, linear_field, zero_field,
    KarcherFieldSpec, VectorField,
};
use geostab::geometry::project_to_manifold;
use geostab::integrators::{MethodId, Predictor, SolverConfig, Strategy};
use geostab::{Manifold, Point};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Sweep,
    Bifurcation,
    GlobalError,
    Lognorm,
    Isotropy,
    Karcher,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Sweep,
        Kind::Bifurcation,
        Kind::GlobalError,
        Kind::Lognorm,
        Kind::Isotropy,
        Kind::Karcher,
    ];
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Sweep => "sweep",
            Kind::Bifurcation => "bifurcation",
            Kind::GlobalError => "global-error",
            Kind::Lognorm => "lognorm",
            Kind::Isotropy => "isotropy",
            Kind::Karcher => "karcher",
        };
        f.pad(s)
    }
}

/// A point literal: a vector, a matrix as nested rows, or sphere angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointLit {
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
    Angles { theta: f64, phi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub name: String,
    /// Isotropy parameter for the `isotropy` field.
    pub c: Option<f64>,
    /// Karcher targets.
    pub targets: Option<Vec<PointLit>>,
    pub weights: Option<Vec<f64>>,
    /// System matrix of the `linear` field.
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsConfig {
    pub x0: Option<PointLit>,
    pub y0: Option<PointLit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HConfig {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

impl HConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0) || !self.min.is_finite() {
            return Err(invalid(format!("h.min must be positive, got {}", self.min)));
        }
        if self.count < 2 {
            return Err(invalid(format!("h.count must be at least 2, got {}", self.count)));
        }
        if !(self.max > self.min) || !self.max.is_finite() {
            return Err(invalid(format!("h.max must exceed h.min, got {}", self.max)));
        }
        Ok(match self.spacing {
            Spacing::Linear => geostab::analysis::linear_grid(self.min, self.max, self.count),
            Spacing::Log => geostab::analysis::log_grid(self.min, self.max, self.count),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// `newton`, `fixed-point` or `newton-with-fallback`.
    pub strategy: String,
    /// `explicit-euler` or `previous-point`.
    pub predictor: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            tolerance: 1e-12,
            max_iterations: 50,
            strategy: "newton-with-fallback".into(),
            predictor: "explicit-euler".into(),
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let strategy = match self.strategy.as_str() {
            "newton" => Strategy::Newton,
            "fixed-point" => Strategy::FixedPoint,
            "newton-with-fallback" => Strategy::NewtonWithFallback,
            s => return Err(invalid(format!("unknown solver.strategy '{s}'"))),
        };
        let predictor = match self.predictor.as_str() {
            "explicit-euler" => Predictor::ExplicitEuler,
            "previous-point" => Predictor::PreviousPoint,
            s => return Err(invalid(format!("unknown solver.predictor '{s}'"))),
        };
        let cfg = SolverConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            strategy,
            predictor,
            multistart_grid: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcationSection {
    #[serde(default)]
    pub z0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalSection {
    pub t_star: f64,
    /// Step counts; each run uses `h = t_star / k`.
    pub steps: Vec<usize>,
    #[serde(default = "default_fine_tol")]
    pub fine_tol: f64,
    #[serde(default = "default_nu_samples")]
    pub nu_samples: usize,
    /// Extra radius of the ν ball beyond `d(center, y0)`.
    #[serde(default = "default_margin")]
    pub nu_margin: f64,
    /// Ball center; defaults to `y0`.
    pub nu_center: Option<PointLit>,
    /// Step sizes used to probe the local error constant.
    #[serde(default = "default_probe_h")]
    pub probe_h: Vec<f64>,
    /// Reference trajectory points used as probe bases.
    #[serde(default = "default_probe_points")]
    pub probe_points: usize,
}

fn default_fine_tol() -> f64 {
    1e-11
}
fn default_nu_samples() -> usize {
    300
}
fn default_margin() -> f64 {
    0.5
}
fn default_probe_h() -> Vec<f64> {
    vec![0.0625, 0.03125, 0.015625, 0.0078125]
}
fn default_probe_points() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LognormSection {
    /// `default`, `spherical`, `stereographic`, `identity` or `spd-entries`.
    #[serde(default = "default_chart")]
    pub chart: String,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub center: Option<PointLit>,
    pub radius: Option<f64>,
    #[serde(default = "default_lognorm_samples")]
    pub samples: usize,
}

fn default_chart() -> String {
    "default".into()
}
fn default_lognorm_samples() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotropySection {
    #[serde(default = "default_c_values")]
    pub c_values: Vec<f64>,
    /// Step size of the arrival curve; omitted means no arrival file.
    pub arrival_h: Option<f64>,
    #[serde(default = "default_arrival_c")]
    pub arrival_c: [f64; 2],
    #[serde(default = "default_arrival_count")]
    pub arrival_count: usize,
}

impl Default for IsotropySection {
    fn default() -> Self {
        IsotropySection {
            c_values: default_c_values(),
            arrival_h: None,
            arrival_c: default_arrival_c(),
            arrival_count: default_arrival_count(),
        }
    }
}

fn default_c_values() -> Vec<f64> {
    vec![0.0, 1.0, 2.0]
}
fn default_arrival_c() -> [f64; 2] {
    [-2.0, 2.0]
}
fn default_arrival_count() -> usize {
    81
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KarcherSection {
    #[serde(default = "default_karcher_tol")]
    pub tol: f64,
}

fn default_karcher_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<String>,
    /// `sphere`, `spd(n)` or `euclidean(n)`.
    pub manifold: Option<String>,
    pub field: Option<FieldConfig>,
    #[serde(default)]
    pub methods: Vec<String>,
    pub points: Option<PointsConfig>,
    pub h: Option<HConfig>,
    #[serde(default)]
    pub solver: SolverSection,
    pub bifurcation: Option<BifurcationSection>,
    pub global: Option<GlobalSection>,
    pub lognorm: Option<LognormSection>,
    pub isotropy: Option<IsotropySection>,
    pub karcher: Option<KarcherSection>,
}

pub fn parse_manifold(s: &str) -> Result<Manifold> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    if t == "sphere" || t == "s2" || t == "sphere2" {
        return Ok(Manifold::Sphere2);
    }
    let dim = |prefix: &str| -> Option<usize> {
        t.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?.parse().ok()
    };
    match (dim("spd"), dim("euclidean")) {
        (Some(n), _) if n >= 1 => Ok(Manifold::Spd(n)),
        (_, Some(n)) if n >= 1 => Ok(Manifold::Euclidean(n)),
        _ => Err(invalid(format!("unknown manifold '{s}'"))),
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(invalid(format!("{what}: matrix rows must be non-empty and equally long")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Builds a point on `m` from a literal, projecting onto the manifold.
pub fn point_from_lit(m: Manifold, lit: &PointLit, what: &str) -> Result<Point> {
    let raw = match (m, lit) {
        (Manifold::Sphere2, PointLit::Angles { theta, phi }) => DMatrix::from_column_slice(
            3,
            1,
            &[theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()],
        ),
        (Manifold::Spd(_), PointLit::Matrix(rows)) => matrix_from_rows(rows, what)?,
        (Manifold::Spd(1), PointLit::Vector(v)) => DMatrix::from_column_slice(v.len(), 1, v),
        (Manifold::Sphere2 | Manifold::Euclidean(_), PointLit::Vector(v)) => {
            DMatrix::from_column_slice(v.len(), 1, v)
        }
        _ => return Err(invalid(format!("{what}: literal does not fit manifold {m:?}"))),
    };
    if raw.shape() != m.shape() {
        return Err(invalid(format!(
            "{what}: expected shape {:?}, got {:?}",
            m.shape(),
            raw.shape()
        )));
    }
    project_to_manifold(m, raw).map_err(|e| invalid(format!("{what}: {e}")))
}

impl ExperimentConfig {
    pub fn manifold(&self) -> Result<Manifold> {
        let s = self.manifold.as_deref().ok_or_else(|| invalid("missing key 'manifold'"))?;
        parse_manifold(s)
    }

    pub fn methods(&self) -> Result<Vec<MethodId>> {
        if self.methods.is_empty() {
            return Err(invalid("missing key 'methods'"));
        }
        self.methods
            .iter()
            .map(|s| MethodId::from_str(s).map_err(|e| invalid(e.to_string())))
            .collect()
    }

    pub fn h_grid(&self) -> Result<Vec<f64>> {
        self.h.as_ref().ok_or_else(|| invalid("missing section [h]"))?.grid()
    }

    pub fn point(&self, which: &str) -> Result<Point> {
        let m = self.manifold()?;
        let pts = self.points.as_ref().ok_or_else(|| invalid("missing section [points]"))?;
        let lit = match which {
            "x0" => pts.x0.as_ref(),
            _ => pts.y0.as_ref(),
        };
        let lit = lit.ok_or_else(|| invalid(format!("missing key 'points.{which}'")))?;
        point_from_lit(m, lit, &format!("points.{which}"))
    }

    pub fn field(&self) -> Result<VectorField> {
        let m = self.manifold()?;
        let f = self.field.as_ref().ok_or_else(|| invalid("missing section [field]"))?;
        let need_sphere = |name: &str| {
            if m == Manifold::Sphere2 {
                Ok(())
            } else {
                Err(invalid(format!("field '{name}' lives on the sphere")))
            }
        };
        match f.name.as_str() {
            "zero" => Ok(zero_field(m)),
            "killing" => {
                need_sphere("killing")?;
                Ok(killing_rotation_field())
            }
            "isotropy" => {
                need_sphere("isotropy")?;
                let c = f.c.ok_or_else(|| invalid("missing key 'field.c'"))?;
                Ok(isotropy_field(c))
            }
            "karcher" => Ok(karcher_gradient_field(&self.karcher_spec()?)),
            "linear" => {
                let rows = f.matrix.as_ref().ok_or_else(|| invalid("missing key 'field.matrix'"))?;
                let a = matrix_from_rows(rows, "field.matrix")?;
                if Manifold::Euclidean(a.nrows()) != m {
                    return Err(invalid("field 'linear' needs euclidean(n) with an n×n matrix"));
                }
                linear_field(a).map_err(|e| invalid(e.to_string()))
            }
            s => Err(invalid(format!("unknown field '{s}'"))),
        }
    }

    pub fn karcher_spec(&self) -> Result<KarcherFieldSpec> {
        let m = self.manifold()?;
        if !matches!(m, Manifold::Spd(_)) {
            return Err(invalid("field 'karcher' needs manifold spd(n)"));
        }
        let f = self.field.as_ref().ok_or_else(|| invalid("missing section [field]"))?;
        let lits = f.targets.as_ref().ok_or_else(|| invalid("missing key 'field.targets'"))?;
        let targets = lits
            .iter()
            .enumerate()
            .map(|(i, l)| point_from_lit(m, l, &format!("field.targets[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let spec = match &f.weights {
            Some(w) => KarcherFieldSpec::with_weights(targets, w.clone()),
            None => KarcherFieldSpec::new(targets),
        };
        spec.map_err(|e| invalid(e.to_string()))
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `key.path=value` overrides; values are TOML literals, or bare strings.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| invalid(format!("override '{o}' is not key=value")))?;
        let parts: Vec<&str> = key.trim().split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(invalid(format!("bad override key '{key}'")));
        }
        let mut cur = &mut *table;
        for p in &parts[..parts.len() - 1] {
            let entry = cur
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cur = entry
                .as_table_mut()
                .ok_or_else(|| invalid(format!("override '{key}': '{p}' is not a section")))?;
        }
        cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    }
    Ok(())
}

/// Parses TOML text, applies overrides and checks the schema.
pub fn load_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
    apply_overrides(&mut table, overrides)?;
    let cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| invalid(e.to_string()))?;
    Ok(cfg)
}
