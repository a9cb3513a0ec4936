use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;

use geostab_cli::experiments::{
    BIFURCATION_HEADER, GLOBAL_HEADER, ISOTROPY_HEADER, KARCHER_HEADER, SWEEP_HEADER,
};
use geostab_cli::{execute, fixture, list_text, load_config, sha256_hex, CliError, FIXTURES};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geostab"))
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn run_fixture(name: &str, overrides: &[&str], dir: &Path) -> geostab_cli::RunReport {
    let ov: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    let cfg = load_config(fixture(name).unwrap(), &ov).unwrap();
    execute(cfg, name, dir).unwrap()
}

#[test]
fn list_names_six_kinds_and_the_shipped_fixtures() {
    let text = list_text();
    for kind in ["sweep", "bifurcation", "global-error", "lognorm", "isotropy", "karcher"] {
        assert!(text.lines().any(|l| l.trim_start().starts_with(kind)), "{kind}");
    }
    let mut shipped: Vec<String> = fs::read_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures"))
        .unwrap()
        .map(|e| e.unwrap().path().file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    shipped.sort();
    let mut bundled: Vec<String> = FIXTURES.iter().map(|(n, _)| n.to_string()).collect();
    bundled.sort();
    assert_eq!(shipped, bundled);
    assert_eq!(
        bundled,
        ["fig2_spd", "fig3_gie_sphere", "fig4_midpoints", "fig5_bifurcation", "fig6_isotropy"]
    );
    for name in &bundled {
        assert!(text.contains(name.as_str()));
    }
}

#[test]
fn fig2_sweep_has_150_flagged_rows() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_fixture("fig2_spd", &[], dir.path());
    assert!(report.error.is_none());
    let (header, rows) = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(header, SWEEP_HEADER);
    assert_eq!(rows.len(), 150);
    assert!(rows.iter().all(|r| r.len() == 7 && (r[4] == "true" || r[4] == "false")));
    for m in ["GEE", "GIE", "GIMP"] {
        assert_eq!(rows.iter().filter(|r| r[0] == m).count(), 50);
    }
}

#[test]
fn fig5_root_counts_step_at_odd_multiples_of_half_pi() {
    let dir = tempfile::tempdir().unwrap();
    run_fixture("fig5_bifurcation", &[], dir.path());
    let (header, rows) = csv_rows(&dir.path().join("bifurcation.csv"));
    assert_eq!(header, BIFURCATION_HEADER);
    let mut counts: Vec<(f64, usize)> = Vec::new();
    for r in &rows {
        let h: f64 = r[0].parse().unwrap();
        match counts.last_mut() {
            Some((last, n)) if *last == h => *n += 1,
            _ => counts.push((h, 1)),
        }
    }
    assert_eq!(counts.len(), 600);
    for (h, n) in counts {
        let s = h / (PI / 2.0);
        if (s - s.round()).abs() < 1e-9 && s.round() as i64 % 2 == 1 {
            continue;
        }
        let m = ((h + PI / 2.0) / PI).floor() as usize;
        if m <= 3 {
            assert_eq!(n, 2 * m + 1, "h = {h}");
        }
    }
}

#[test]
fn fig6_writes_three_curves_and_an_arrival_curve() {
    let dir = tempfile::tempdir().unwrap();
    run_fixture("fig6_isotropy", &[], dir.path());
    let (header, rows) = csv_rows(&dir.path().join("isotropy.csv"));
    assert_eq!(header, ISOTROPY_HEADER);
    assert_eq!(rows.len(), 3 * 40);
    let (_, arrival) = csv_rows(&dir.path().join("isotropy_arrival.csv"));
    assert_eq!(arrival.len(), 81);
    // c = 1 reproduces the rotation, which keeps distances
    for r in rows.iter().filter(|r| r[0].parse::<f64>().unwrap() == 1.0) {
        let (d0, d): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!((d - d0).abs() < 1e-10);
    }
}

#[test]
fn manifest_checksums_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_fixture("fig4_midpoints", &[], dir.path());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let listed = json["artifacts"].as_array().unwrap();
    assert_eq!(listed.len(), report.manifest.artifacts.len());
    let mut names: Vec<String> = Vec::new();
    for a in listed {
        let name = a["file"].as_str().unwrap();
        let bytes = fs::read(dir.path().join(name)).unwrap();
        assert_eq!(a["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        names.push(name.to_string());
    }
    let mut on_disk: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    names.sort();
    assert_eq!(names, on_disk);
    assert_eq!(json["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(json["config"]["kind"], "sweep");
    assert!(json["timings"]["compute_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_fixture("fig3_gie_sphere", &[], a.path());
    run_fixture("fig3_gie_sphere", &[], b.path());
    for f in ["sweep.csv", "plot.py"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn validation_errors_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    for ov in [["h.count=0"], ["h.min=0.0"], ["methods=[\"RK4\"]"]] {
        let ov: Vec<String> = ov.iter().map(|s| s.to_string()).collect();
        let err = load_config(fixture("fig2_spd").unwrap(), &ov)
            .and_then(|cfg| execute(cfg, "t", &out).map(|_| ()))
            .unwrap_err();
        assert!(matches!(err, CliError::Validation(_)), "{err}");
        assert_eq!(err.exit_code(), 2);
    }
    assert!(!out.exists());
    let err = load_config(fixture("fig2_spd").unwrap(), &["solver.colour=1".into()]).unwrap_err();
    assert!(err.to_string().contains("colour"));
}

#[test]
fn other_kinds_run() {
    let dir = tempfile::tempdir().unwrap();
    let lognorm = r#"
kind = "lognorm"
seed = 7
manifold = "euclidean(2)"
[field]
name = "linear"
matrix = [[-1.0, 4.0], [0.0, -3.0]]
[lognorm]
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
samples = 20
"#;
    let r = execute(load_config(lognorm, &[]).unwrap(), "t", &dir.path().join("ln")).unwrap();
    assert!(r.error.is_none());
    let (header, rows) = csv_rows(&dir.path().join("ln/lognorm.csv"));
    assert_eq!(header, "x0,x1,mu");
    assert_eq!(rows.len(), 20);
    // λ_max of [[-1, 2], [2, -3]] is -2 + √5
    let mu: f64 = rows[0][2].parse().unwrap();
    assert!((mu - (5f64.sqrt() - 2.0)).abs() < 1e-10);

    let karcher = r#"
kind = "karcher"
manifold = "spd(2)"
[field]
name = "karcher"
targets = [[[4.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 9.0]]]
"#;
    execute(load_config(karcher, &[]).unwrap(), "t", &dir.path().join("k")).unwrap();
    let (header, rows) = csv_rows(&dir.path().join("k/karcher.csv"));
    assert_eq!(header, KARCHER_HEADER);
    let v: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    // commuting targets: the mean is the entrywise geometric mean
    assert!((v[0] - 2.0).abs() < 1e-10 && (v[3] - 3.0).abs() < 1e-10);
    assert!(v[1].abs() < 1e-12 && v[2].abs() < 1e-12);

    let global = r#"
kind = "global-error"
manifold = "spd(2)"
methods = ["GIE"]
[field]
name = "karcher"
targets = [[[4.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 4.0]]]
[points]
y0 = [[1.5, 0.2], [0.2, 1.0]]
[global]
t_star = 0.5
steps = [5, 10]
nu_samples = 50
probe_points = 1
"#;
    execute(load_config(global, &[]).unwrap(), "t", &dir.path().join("g")).unwrap();
    let (header, rows) = csv_rows(&dir.path().join("g/global_error.csv"));
    assert_eq!(header, GLOBAL_HEADER);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][2], "10");
    for r in rows {
        let (e, b): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!(e <= b);
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = bin().args(["run", "fig4_midpoints", "--out"]).arg(dir.path().join("ok")).status().unwrap();
    assert_eq!(ok.code(), Some(0));

    let bad = bin().args(["run", "fig4_midpoints", "--set", "h.count=1", "--out"]).arg(dir.path().join("bad")).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("h.count"));

    let missing = bin().args(["run", "no_such_config.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(4));

    // one Newton iteration cannot reach 1e-12, so rows come back flagged
    let fail_dir = dir.path().join("fail");
    let fail = bin()
        .args(["run", "fig3_gie_sphere", "--set", "solver.max_iterations=1", "--set", "solver.strategy=newton", "--out"])
        .arg(&fail_dir)
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(3));
    let (_, rows) = csv_rows(&fail_dir.join("sweep.csv"));
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().any(|r| r[4] == "false"));
    assert!(fail_dir.join("manifest.json").exists());

    let env_dir = dir.path().join("env");
    let via_env = bin().args(["run", "fig5_bifurcation"]).env("GEOSTAB_OUT", &env_dir).status().unwrap();
    assert_eq!(via_env.code(), Some(0));
    assert!(env_dir.join("bifurcation.csv").exists());

    let list = bin().arg("list").output().unwrap();
    assert!(String::from_utf8_lossy(&list.stdout).contains("fig6_isotropy"));
    let version = bin().arg("version").output().unwrap();
    assert!(String::from_utf8_lossy(&version.stdout).contains(env!("CARGO_PKG_VERSION")));
}
