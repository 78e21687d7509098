//! End-to-end behavior of the subcommands: artifacts, determinism, exit
//! paths.

use std::fs;
use std::process::Command;

use turandet_cli::commands::{cmd_asymptotics, cmd_density, cmd_diagnose};
use turandet_cli::config::RunConfig;

fn free_density_config(n_points: usize) -> String {
    format!(
        "family.kind = constant\n\
         family.alpha = 1.0\n\
         family.beta = 0.0\n\
         shift.block = 1\n\
         shift.residue = 0\n\
         diag.depth = 1\n\
         grid.x_lo = -1.5\n\
         grid.x_hi = 1.5\n\
         grid.count = {n_points}\n\
         run.n_max = 400\n\
         ladder.lo_pow = 4\n\
         ladder.hi_pow = 6\n\
         output.formats = csv,json\n"
    )
}

#[test]
fn density_artifacts_and_determinism() {
    let cfg = RunConfig::parse(&free_density_config(31)).unwrap();
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    cmd_density(&cfg, dir1.path()).unwrap();
    cmd_density(&cfg, dir2.path()).unwrap();
    let csv1 = fs::read(dir1.path().join("density.csv")).unwrap();
    let csv2 = fs::read(dir2.path().join("density.csv")).unwrap();
    assert!(!csv1.is_empty());
    // Identical configs give byte-identical CSV bodies.
    assert_eq!(csv1, csv2);
    assert!(dir1.path().join("density.json").exists());

    // The CSV has the ladder columns and full-precision values.
    let text = String::from_utf8(csv1).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("x,g,h,nu_prime,converged,mu_L_"));
    let mid = text.lines().nth(16).unwrap(); // x = 0 row of the 31-point grid
    let nu: f64 = mid.split(',').nth(3).unwrap().parse().unwrap();
    assert!((nu - 1.0 / std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn json_config_echo_round_trips() {
    let cfg = RunConfig::parse(&free_density_config(11)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    cmd_density(&cfg, dir.path()).unwrap();
    let blob: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("density.json")).unwrap())
            .unwrap();
    let echo = blob["config"].as_object().unwrap();
    let text: String = echo
        .iter()
        .map(|(k, v)| format!("{k} = {}\n", v.as_str().unwrap()))
        .collect();
    let again = RunConfig::parse(&text).unwrap();
    assert_eq!(cfg, again);
}

#[test]
fn density_outside_bands_reports_majority_failure() {
    let text = free_density_config(11)
        .replace("grid.x_lo = -1.5", "grid.x_lo = 3.0")
        .replace("grid.x_hi = 1.5", "grid.x_hi = 4.0");
    let cfg = RunConfig::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_density(&cfg, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    // Artifacts are still written for inspection.
    assert!(dir.path().join("density.csv").exists());
}

#[test]
fn asymptotics_free_family_all_ok() {
    let text = free_density_config(9).replace("run.n_max = 400", "run.n_max = 600");
    let cfg = RunConfig::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let rows = cmd_asymptotics(&cfg, dir.path()).unwrap();
    assert!(rows.iter().all(|(_, ok)| *ok));
    let csv = fs::read_to_string(dir.path().join("sinefit.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let rms: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(rms < 1e-9, "{line}");
    }
}

#[test]
fn diagnose_flags_alternating_diagonal() {
    // b_n = (-1)^n has a non-decaying first difference.
    let text = "family.kind = custom\n\
                family.a = 1,1\n\
                family.b = 1,-1\n\
                family.period = 2\n\
                shift.block = 1\n\
                shift.residue = 0\n\
                diag.depth = 2\n\
                grid.x_lo = -0.5\n\
                grid.x_hi = 0.5\n\
                grid.count = 3\n\
                run.n_max = 2000\n";
    let cfg = RunConfig::parse(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let rep = cmd_diagnose(&cfg, dir.path()).unwrap();
    assert_eq!(rep.overall, turandet::stolz::StolzVerdict::Inconsistent);
    assert!(dir.path().join("stolz.json").exists());
    assert!(dir.path().join("carleman.json").exists());
    assert!(dir.path().join("reconstruction.json").exists());
}

#[test]
fn diagnose_free_family_is_clean() {
    let cfg = RunConfig::parse(&free_density_config(5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let rep = cmd_diagnose(&cfg, dir.path()).unwrap();
    assert_eq!(rep.overall, turandet::stolz::StolzVerdict::Consistent);
    assert!(rep.carleman_divergent);
    assert!(rep.worst_reconstruction < 1e-12);
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_turandet")
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.conf");
    fs::write(&cfg_path, free_density_config(7)).unwrap();

    // Happy path.
    let out = Command::new(binary())
        .args(["density", "--config"])
        .arg(&cfg_path)
        .args(["--out"])
        .arg(dir.path().join("out"))
        .args(["--threads", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    assert!(dir.path().join("out/density.csv").exists());

    // Thread count must not affect CSV bytes.
    let out1 = dir.path().join("t1");
    let out4 = dir.path().join("t4");
    for (threads, out) in [("1", &out1), ("4", &out4)] {
        let status = Command::new(binary())
            .args(["density", "--config"])
            .arg(&cfg_path)
            .args(["--out"])
            .arg(out)
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        fs::read(out1.join("density.csv")).unwrap(),
        fs::read(out4.join("density.csv")).unwrap()
    );

    // Malformed config: validation fails before any compute.
    let bad_path = dir.path().join("bad.conf");
    fs::write(
        &bad_path,
        free_density_config(7).replace("grid.x_hi = 1.5", "grid.x_hi = -9.0"),
    )
    .unwrap();
    let out = Command::new(binary())
        .args(["density", "--config"])
        .arg(&bad_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Off-band grid: majority failure.
    let off_path = dir.path().join("off.conf");
    fs::write(
        &off_path,
        free_density_config(7)
            .replace("grid.x_lo = -1.5", "grid.x_lo = 3.0")
            .replace("grid.x_hi = 1.5", "grid.x_hi = 4.0"),
    )
    .unwrap();
    let out = Command::new(binary())
        .args(["density", "--config"])
        .arg(&off_path)
        .args(["--out"])
        .arg(dir.path().join("out3"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("majority-failure"), "{stderr}");

    // Missing config file is a config error.
    let out = Command::new(binary())
        .args(["density", "--config"])
        .arg(dir.path().join("nope.conf"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("conf") {
            let text = fs::read_to_string(&path).unwrap();
            RunConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn csv_only_format_skips_json() {
    let text = free_density_config(5).replace("output.formats = csv,json", "output.formats = csv");
    let cfg = RunConfig::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    cmd_density(&cfg, dir.path()).unwrap();
    assert!(dir.path().join("density.csv").exists());
    assert!(!dir.path().join("density.json").exists());
}

