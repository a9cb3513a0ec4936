//! Config-driven experiment runner: one TOML file in, CSVs, a plot script and
//! a checksummed manifest out.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{load_config, ExperimentConfig, Kind};
pub use error::CliError;
use experiments::{run_experiment, Artifact};

/// Environment variable that overrides the output directory of the config.
pub const OUT_ENV: &str = "GEOSTAB_OUT";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Bundled figure fixtures, `(name, TOML text)`.
pub const FIXTURES: [(&str, &str); 5] = [
    ("fig2_spd", include_str!("../fixtures/fig2_spd.toml")),
    ("fig3_gie_sphere", include_str!("../fixtures/fig3_gie_sphere.toml")),
    ("fig4_midpoints", include_str!("../fixtures/fig4_midpoints.toml")),
    ("fig5_bifurcation", include_str!("../fixtures/fig5_bifurcation.toml")),
    ("fig6_isotropy", include_str!("../fixtures/fig6_isotropy.toml")),
];

pub fn fixture(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[derive(Debug, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub compute_seconds: f64,
    pub write_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub source: String,
    pub status: String,
    pub config: ExperimentConfig,
    pub artifacts: Vec<ArtifactEntry>,
    pub notes: Vec<String>,
    pub timings: Timings,
}

/// What a finished run produced. `error` is set when the run failed after
/// files were written.
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub error: Option<CliError>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a config from a path, or from the bundled fixture of that name.
pub fn read_config_source(arg: &str) -> Result<(String, String), CliError> {
    let path = Path::new(arg);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{arg}: {e}")))?;
        return Ok((arg.to_string(), text));
    }
    let stem = arg.strip_suffix(".toml").unwrap_or(arg);
    match fixture(stem) {
        Some(t) => Ok((format!("fixture:{stem}"), t.to_string())),
        None => Err(CliError::Io(format!("{arg}: no such file or bundled fixture"))),
    }
}

fn default_out_dir(source: &str) -> PathBuf {
    let stem = source.strip_prefix("fixture:").unwrap_or(source);
    let stem = Path::new(stem).file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    PathBuf::from("geostab-out").join(stem)
}

/// `--out`, then the environment variable, then `output_dir`, then a default.
pub fn resolve_out_dir(cli: Option<&Path>, env: Option<&str>, cfg: &ExperimentConfig, source: &str) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if let Some(e) = env.filter(|e| !e.is_empty()) {
        return PathBuf::from(e);
    }
    match &cfg.output_dir {
        Some(d) => PathBuf::from(d),
        None => default_out_dir(source),
    }
}

fn write_all(dir: &Path, files: &[Artifact]) -> Result<Vec<ArtifactEntry>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::with_capacity(files.len());
    for a in files {
        let path = dir.join(&a.name);
        fs::write(&path, &a.content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        out.push(ArtifactEntry {
            file: a.name.clone(),
            sha256: sha256_hex(a.content.as_bytes()),
            bytes: a.content.len(),
        });
    }
    Ok(out)
}

/// Runs a parsed config and writes its files to `out_dir`.
///
/// Validation errors return before anything is written. Solver failures still
/// write the rows computed so far, and come back inside the report.
pub fn execute(cfg: ExperimentConfig, source: &str, out_dir: &Path) -> Result<RunReport, CliError> {
    let t0 = Instant::now();
    let result = run_experiment(&cfg);
    let compute_seconds = t0.elapsed().as_secs_f64();
    let (mut files, notes, error) = match result {
        Ok(o) if o.unconverged > 0 => {
            let msg = format!("{} step(s) did not converge; rows are flagged", o.unconverged);
            (o.artifacts, o.notes, Some(CliError::Solver(msg)))
        }
        Ok(o) => (o.artifacts, o.notes, None),
        Err(f) => match f.error {
            e @ CliError::Solver(_) => (f.partial, Vec::new(), Some(e)),
            e => return Err(e),
        },
    };
    files.push(Artifact { name: "plot.py".into(), content: plot::plot_script(cfg.kind) });
    let t1 = Instant::now();
    let artifacts = write_all(out_dir, &files)?;
    let manifest = RunManifest {
        tool: "geostab".into(),
        version: VERSION.into(),
        source: source.into(),
        status: match &error {
            None => "ok".into(),
            Some(e) => e.to_string(),
        },
        config: cfg,
        artifacts,
        notes,
        timings: Timings { compute_seconds, write_seconds: t1.elapsed().as_secs_f64() },
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    let path = out_dir.join("manifest.json");
    fs::write(&path, json + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(RunReport { out_dir: out_dir.to_path_buf(), manifest, error })
}

/// The `run` subcommand: read, override, validate, execute.
pub fn run(config_arg: &str, overrides: &[String], out: Option<&Path>) -> Result<RunReport, CliError> {
    let (source, text) = read_config_source(config_arg)?;
    let cfg = load_config(&text, overrides)?;
    let env = std::env::var(OUT_ENV).ok();
    let dir = resolve_out_dir(out, env.as_deref(), &cfg, &source);
    execute(cfg, &source, &dir)
}

const KIND_HELP: [(Kind, &str, &str); 6] = [
    (
        Kind::Sweep,
        "manifold, field.name, methods, points.x0, points.y0, h.{min,max,count}",
        "sweep.csv",
    ),
    (Kind::Bifurcation, "h.{min,max,count}; bifurcation.z0 = 0", "bifurcation.csv"),
    (
        Kind::GlobalError,
        "manifold, field.name, methods, points.y0, global.t_star, global.steps",
        "global_error.csv",
    ),
    (
        Kind::Lognorm,
        "manifold, field.name, lognorm.lo + lognorm.hi or lognorm.center + lognorm.radius",
        "lognorm.csv",
    ),
    (
        Kind::Isotropy,
        "points.x0, points.y0, h.{min,max,count}; manifold = \"sphere\", field.name = \"killing\"",
        "isotropy.csv (+ isotropy_arrival.csv)",
    ),
    (Kind::Karcher, "manifold, field.name = \"karcher\", field.targets", "karcher.csv"),
];

/// Text printed by `list`.
pub fn list_text() -> String {
    let mut s = String::from("experiment kinds:\n");
    for (kind, keys, out) in KIND_HELP {
        s.push_str(&format!("  {kind:<13} required: {keys}\n  {:<13} writes: {out}\n", ""));
    }
    s.push_str(
        "\ndefaults:\n\
         \x20 seed = 0\n\
         \x20 h.spacing = \"linear\"  (or \"log\")\n\
         \x20 solver.tolerance = 1e-12\n\
         \x20 solver.max_iterations = 50\n\
         \x20 solver.strategy = \"newton-with-fallback\"  (or \"newton\", \"fixed-point\")\n\
         \x20 solver.predictor = \"explicit-euler\"  (or \"previous-point\")\n\
         \x20 global.fine_tol = 1e-11\n\
         \x20 global.nu_samples = 300\n\
         \x20 global.nu_margin = 0.5\n\
         \x20 global.nu_center = points.y0\n\
         \x20 global.probe_h = [0.0625, 0.03125, 0.015625, 0.0078125]\n\
         \x20 global.probe_points = 3\n\
         \x20 lognorm.chart = \"default\"  (or \"spherical\", \"stereographic\", \"identity\", \"spd-entries\")\n\
         \x20 lognorm.samples = 500\n\
         \x20 isotropy.c_values = [0.0, 1.0, 2.0]\n\
         \x20 isotropy.arrival_h = none\n\
         \x20 isotropy.arrival_c = [-2.0, 2.0]\n\
         \x20 isotropy.arrival_count = 81\n\
         \x20 karcher.tol = 1e-12\n\
         \x20 output_dir = geostab-out/<config name>  (overridden by $GEOSTAB_OUT, then by --out)\n\
         \n\
         fields: zero, killing, isotropy (field.c), karcher (field.targets, field.weights), linear (field.matrix)\n\
         manifolds: sphere, spd(n), euclidean(n)\n\
         methods: GEE, GIE, GIMP, SPHMP, LIE_EULER_IMPLICIT(c)\n\
         \n\
         bundled fixtures (run by name):\n",
    );
    for (name, _) in FIXTURES {
        s.push_str(&format!("  {name}\n"));
    }
    s
}
