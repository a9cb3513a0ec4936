//! Experiment runners. Each returns its CSV files as in-memory artifacts;
//! nothing touches the file system here.

use geostab::analysis::{
    bifurcation_diagram, contractivity_sweep, estimate_local_constant, global_error_study,
    karcher_mean, linear_grid,
};
use geostab::fields::{estimate_nu, killing_rotation_field, Region, VectorField};
use geostab::geometry::{chart_bundle, distance, ChartBundle, ChartKind};
use geostab::integrators::{reference_flow, step, MethodId};
use geostab::{Manifold, Point};

use crate::config::{parse_manifold, point_from_lit, ExperimentConfig, IsotropySection, Kind, PointLit};
use crate::error::CliError;

pub struct Artifact {
    pub name: String,
    pub content: String,
}

/// Results of a run. `unconverged` counts flagged rows; a nonzero count makes
/// the run a solver failure even though every file is written.
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub notes: Vec<String>,
    pub unconverged: usize,
}

/// A run that stopped early; `partial` holds whatever rows were complete.
pub struct Failure {
    pub error: CliError,
    pub partial: Vec<Artifact>,
}

impl From<CliError> for Failure {
    fn from(error: CliError) -> Self {
        Failure { error, partial: Vec::new() }
    }
}

type Run = std::result::Result<Outcome, Failure>;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    name: String,
    text: String,
}

impl Csv {
    pub fn new(name: &str, header: &str) -> Self {
        Csv { name: name.into(), text: format!("{header}\n") }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> Artifact {
        Artifact { name: self.name, content: self.text }
    }
}

pub const SWEEP_HEADER: &str = "method,h,d0,d_after,converged,iters_x,iters_y";
pub const BIFURCATION_HEADER: &str = "h,root_index,z";
pub const GLOBAL_HEADER: &str = "method,h,k,error,bound,nu,C,p";
pub const ISOTROPY_HEADER: &str = "c,h,d0,d_after";
pub const ARRIVAL_HEADER: &str = "c,x,y,z,converged";
pub const KARCHER_HEADER: &str = "row,col,value";

pub fn lognorm_header(dim: usize) -> String {
    let mut cols: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    cols.push("mu".into());
    cols.join(",")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Run {
    match cfg.kind {
        Kind::Sweep => sweep(cfg),
        Kind::Bifurcation => bifurcation(cfg),
        Kind::GlobalError => global_error(cfg),
        Kind::Lognorm => lognorm(cfg),
        Kind::Isotropy => isotropy(cfg),
        Kind::Karcher => karcher(cfg),
    }
}

fn sweep(cfg: &ExperimentConfig) -> Run {
    let field = cfg.field()?;
    let methods = cfg.methods()?;
    let (x0, y0) = (cfg.point("x0")?, cfg.point("y0")?);
    let grid = cfg.h_grid()?;
    let solver = cfg.solver.solver_config()?;
    let mut csv = Csv::new("sweep.csv", SWEEP_HEADER);
    let mut unconverged = 0;
    for m in methods {
        let recs = match contractivity_sweep(m, &field, &x0, &y0, &grid, &solver) {
            Ok(r) => r,
            Err(e) => return Err(Failure { error: e.into(), partial: vec![csv.finish()] }),
        };
        for r in recs {
            unconverged += usize::from(!r.converged());
            csv.row(&[
                m.to_string(),
                fmt_f64(r.h),
                fmt_f64(r.d0),
                opt(r.d_after),
                r.converged().to_string(),
                r.iters_x.to_string(),
                r.iters_y.to_string(),
            ]);
        }
    }
    let notes = vec![format!("d0 = {}", fmt_f64(distance(&x0, &y0).map_err(CliError::from)?))];
    Ok(Outcome { artifacts: vec![csv.finish()], notes, unconverged })
}

fn bifurcation(cfg: &ExperimentConfig) -> Run {
    let z0 = cfg.bifurcation.as_ref().map_or(0.0, |b| b.z0);
    let grid = cfg.h_grid()?;
    let diagram = bifurcation_diagram(z0, &grid).map_err(CliError::from)?;
    let mut csv = Csv::new("bifurcation.csv", BIFURCATION_HEADER);
    for (h, roots) in diagram.h_grid.iter().zip(&diagram.roots) {
        for (i, z) in roots.iter().enumerate() {
            csv.row(&[fmt_f64(*h), i.to_string(), fmt_f64(*z)]);
        }
    }
    let max = diagram.counts().into_iter().max().unwrap_or(0);
    Ok(Outcome {
        artifacts: vec![csv.finish()],
        notes: vec![format!("at most {max} roots per step size")],
        unconverged: 0,
    })
}

/// Points of the reference trajectory at `t = j t*/n` for `j < n`.
fn trajectory_samples(field: &VectorField, y0: &Point, t_star: f64, n: usize, tol: f64) -> geostab::Result<Vec<Point>> {
    let mut out = vec![y0.clone()];
    let dt = t_star / n.max(1) as f64;
    for _ in 1..n {
        let next = reference_flow(field, out.last().expect("non-empty"), dt, tol)?;
        out.push(next);
    }
    Ok(out)
}

fn global_error(cfg: &ExperimentConfig) -> Run {
    let g = cfg.global.as_ref().ok_or_else(|| CliError::Validation("missing section [global]".into()))?;
    let m = cfg.manifold()?;
    let field = cfg.field()?;
    let methods = cfg.methods()?;
    let y0 = cfg.point("y0")?;
    let solver = cfg.solver.solver_config()?;
    if !(g.t_star > 0.0) || g.steps.is_empty() || g.steps.contains(&0) {
        return Err(CliError::Validation("global needs t_star > 0 and positive step counts".into()).into());
    }
    let h_grid: Vec<f64> = g.steps.iter().map(|&k| g.t_star / k as f64).collect();
    let center = match &g.nu_center {
        Some(l) => point_from_lit(m, l, "global.nu_center")?,
        None => y0.clone(),
    };
    let radius = distance(&center, &y0).map_err(CliError::from)? + g.nu_margin;
    let region = Region::GeodesicBall { center, radius };
    let nu = estimate_nu(&field, &chart_bundle(m), &region, g.nu_samples, cfg.seed)
        .map_err(CliError::from)?
        .nu;
    let samples = trajectory_samples(&field, &y0, g.t_star, g.probe_points, g.fine_tol).map_err(CliError::from)?;
    let mut csv = Csv::new("global_error.csv", GLOBAL_HEADER);
    let mut notes = vec![format!("nu = {}", fmt_f64(nu))];
    for method in methods {
        let p = method.order();
        let res = estimate_local_constant(method, &field, &samples, &g.probe_h, p, &solver, g.fine_tol)
            .and_then(|c| global_error_study(method, &field, &y0, g.t_star, &h_grid, nu, c, p, &solver, g.fine_tol));
        let report = match res {
            Ok(r) => r,
            Err(e) => return Err(Failure { error: e.into(), partial: vec![csv.finish()] }),
        };
        for i in 0..report.h_grid.len() {
            csv.row(&[
                method.to_string(),
                fmt_f64(report.h_grid[i]),
                report.steps[i].to_string(),
                fmt_f64(report.measured_errors[i]),
                fmt_f64(report.bound_values[i]),
                fmt_f64(report.nu),
                fmt_f64(report.c),
                report.p.to_string(),
            ]);
        }
        notes.push(format!(
            "{method}: order {:.3}, bound {}",
            report.order_estimate,
            if report.bound_holds() { "holds" } else { "violated" }
        ));
    }
    Ok(Outcome { artifacts: vec![csv.finish()], notes, unconverged: 0 })
}

fn chart_for(m: Manifold, name: &str) -> Result<ChartBundle, CliError> {
    let kind = match (name, m) {
        ("default", _) => return Ok(chart_bundle(m)),
        ("spherical", Manifold::Sphere2) => ChartKind::Spherical,
        ("stereographic", Manifold::Sphere2) => ChartKind::Stereographic,
        ("identity", Manifold::Euclidean(n)) => ChartKind::Identity(n),
        ("spd-entries", Manifold::Spd(n)) => ChartKind::SpdEntries(n),
        _ => return Err(CliError::Validation(format!("chart '{name}' does not fit {m:?}"))),
    };
    Ok(ChartBundle::new(kind))
}

fn lognorm(cfg: &ExperimentConfig) -> Run {
    let section = cfg.lognorm.as_ref().ok_or_else(|| CliError::Validation("missing section [lognorm]".into()))?;
    let m = cfg.manifold()?;
    let field = cfg.field()?;
    let chart = chart_for(m, &section.chart)?;
    let region = match (&section.lo, &section.hi, &section.center, section.radius) {
        (Some(lo), Some(hi), None, None) => Region::ChartBox { lo: lo.clone(), hi: hi.clone() },
        (None, None, Some(c), Some(r)) => Region::GeodesicBall {
            center: point_from_lit(m, c, "lognorm.center")?,
            radius: r,
        },
        _ => {
            return Err(CliError::Validation(
                "lognorm needs either lo and hi, or center and radius".into(),
            )
            .into())
        }
    };
    let est = estimate_nu(&field, &chart, &region, section.samples, cfg.seed).map_err(CliError::from)?;
    let mut csv = Csv::new("lognorm.csv", &lognorm_header(chart.dimension()));
    for (x, mu) in &est.samples {
        let mut cells: Vec<String> = x.iter().copied().map(fmt_f64).collect();
        cells.push(fmt_f64(*mu));
        csv.row(&cells);
    }
    Ok(Outcome {
        artifacts: vec![csv.finish()],
        notes: vec![format!("nu = {}", fmt_f64(est.nu))],
        unconverged: 0,
    })
}

fn isotropy(cfg: &ExperimentConfig) -> Run {
    let m = match &cfg.manifold {
        Some(s) => parse_manifold(s)?,
        None => Manifold::Sphere2,
    };
    if m != Manifold::Sphere2 {
        return Err(CliError::Validation("the isotropy experiment runs on the sphere".into()).into());
    }
    let field = match &cfg.field {
        Some(_) => cfg.field()?,
        None => killing_rotation_field(),
    };
    if !field.has_isotropy() {
        return Err(CliError::Validation(format!("field '{}' has no isotropy map", field.name())).into());
    }
    let defaults = IsotropySection::default();
    let section = cfg.isotropy.as_ref().unwrap_or(&defaults);
    let pts = cfg.points.as_ref().ok_or_else(|| CliError::Validation("missing section [points]".into()))?;
    let lit = |l: &Option<PointLit>, w: &str| {
        l.as_ref()
            .ok_or_else(|| CliError::Validation(format!("missing key 'points.{w}'")))
            .and_then(|l| point_from_lit(m, l, &format!("points.{w}")))
    };
    let (x0, y0) = (lit(&pts.x0, "x0")?, lit(&pts.y0, "y0")?);
    let grid = cfg.h_grid()?;
    let solver = cfg.solver.solver_config()?;
    if section.c_values.is_empty() {
        return Err(CliError::Validation("isotropy.c_values is empty".into()).into());
    }
    let mut csv = Csv::new("isotropy.csv", ISOTROPY_HEADER);
    let mut unconverged = 0;
    for &c in &section.c_values {
        let recs = match contractivity_sweep(MethodId::LieEulerImplicit(c), &field, &x0, &y0, &grid, &solver) {
            Ok(r) => r,
            Err(e) => return Err(Failure { error: e.into(), partial: vec![csv.finish()] }),
        };
        for r in recs {
            unconverged += usize::from(!r.converged());
            csv.row(&[fmt_f64(c), fmt_f64(r.h), fmt_f64(r.d0), opt(r.d_after)]);
        }
    }
    let mut artifacts = vec![csv.finish()];
    if let Some(h) = section.arrival_h {
        let (a, b) = (section.arrival_c[0], section.arrival_c[1]);
        if section.arrival_count < 2 || !(b > a) {
            return Err(Failure {
                error: CliError::Validation("arrival curve needs count ≥ 2 and c_max > c_min".into()),
                partial: artifacts,
            });
        }
        let mut arr = Csv::new("isotropy_arrival.csv", ARRIVAL_HEADER);
        for c in linear_grid(a, b, section.arrival_count) {
            let out = step(MethodId::LieEulerImplicit(c), &field, &x0, h, &solver);
            match out.as_ref().ok().and_then(|o| o.converged.then(|| o.principal()).flatten()) {
                Some(p) => {
                    let v = p.coords();
                    arr.row(&[fmt_f64(c), fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2]), "true".into()]);
                }
                None => {
                    unconverged += 1;
                    arr.row(&[fmt_f64(c), String::new(), String::new(), String::new(), "false".into()]);
                }
            }
        }
        artifacts.push(arr.finish());
    }
    Ok(Outcome { artifacts, notes: Vec::new(), unconverged })
}

fn karcher(cfg: &ExperimentConfig) -> Run {
    let spec = cfg.karcher_spec()?;
    let tol = cfg.karcher.as_ref().map_or(1e-12, |k| k.tol);
    let mean = karcher_mean(&spec, tol).map_err(CliError::from)?;
    let mut csv = Csv::new("karcher.csv", KARCHER_HEADER);
    let a = mean.coords();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            csv.row(&[i.to_string(), j.to_string(), fmt_f64(a[(i, j)])]);
        }
    }
    Ok(Outcome { artifacts: vec![csv.finish()], notes: Vec::new(), unconverged: 0 })
}
