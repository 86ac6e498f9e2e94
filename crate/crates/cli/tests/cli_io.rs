//! End-to-end checks of the command-line surface: exit codes, bundled
//! data, and the smaller subcommands. Heavy solves live in the acceptance
//! suite.

use std::path::{Path, PathBuf};
use std::process::Command;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("morphshell_cli_io").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn morphshell() -> Command {
    Command::new(env!("CARGO_BIN_EXE_morphshell"))
}

#[test]
fn bundled_configs_reproduce_reference_mesh_statistics_on_load() {
    let expected = [
        ("pattern_a.toml", (970, 2800, 1831), 3.2),
        ("pattern_b.toml", (1215, 3505, 2291), 4.0),
        ("pattern_c.toml", (388, 1087, 700), 5.8),
    ];
    for (name, (nodes, edges, triangles), l0) in expected {
        let config = morphshell_cli::config::RunConfig::load(&data_dir().join(name)).unwrap();
        let prepared = morphshell_cli::commands::run::prepare(&config).unwrap();
        assert_eq!(prepared.mesh.node_count(), nodes, "{name}");
        assert_eq!(prepared.mesh.edge_count(), edges, "{name}");
        assert_eq!(prepared.mesh.triangle_count(), triangles, "{name}");
        let mean = prepared.mesh.mean_edge_length();
        assert!(
            (mean - l0).abs() <= 0.05 * l0,
            "{name}: mean edge {mean} vs nominal {l0}"
        );
    }
}

#[test]
fn missing_subcommand_and_unknown_flags_exit_with_input_error() {
    let status = morphshell().status().unwrap();
    assert_eq!(status.code(), Some(2));

    let status = morphshell().args(["run", "--bogus"]).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let status = morphshell().arg("--help").status().unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn missing_mesh_is_an_input_error_with_no_partial_outputs() {
    let dir = scratch("missing_mesh");
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        r#"
[mesh]
path = "does_not_exist.mesh"

[material]
substrate_modulus = 1.0
substrate_thickness = 0.3
pattern_modulus = 3.0
pattern_thickness = 0.7

[schedule]
target_strain = -0.1

[output]
directory = "out"
"#,
    )
    .unwrap();
    let out_dir = dir.join("outputs");
    let output = morphshell()
        .args([
            "run",
            config.to_str().unwrap(),
            "--output",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("does_not_exist.mesh"), "{stderr}");
    assert!(!out_dir.exists(), "no partial outputs on input errors");
}

#[test]
fn strict_config_parsing_rejects_unknown_keys_via_cli() {
    let dir = scratch("unknown_key");
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        r#"
[mesh]
path = "m.mesh"
mystery = 1

[material]
substrate_modulus = 1.0
substrate_thickness = 0.3
pattern_modulus = 3.0
pattern_thickness = 0.7

[schedule]
target_strain = -0.1

[output]
directory = "out"
"#,
    )
    .unwrap();
    let output = morphshell()
        .args(["run", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("mystery"));
}

#[test]
fn compare_subcommand_reports_mean_ssim() {
    let dir = scratch("compare");
    // two copies of a small pyramid-ish surface, one rigidly moved
    let base = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0.5 0.5 0.6\nf 1 2 5\nf 2 3 5\nf 3 4 5\nf 4 1 5\n";
    let sim = dir.join("sim.obj");
    let reference = dir.join("ref.obj");
    std::fs::write(&sim, base).unwrap();
    std::fs::write(&reference, base).unwrap();
    let report = dir.join("report.txt");
    let output = morphshell()
        .args([
            "compare",
            "--sim",
            sim.to_str().unwrap(),
            "--reference",
            reference.to_str().unwrap(),
            "--grid",
            "8",
            "--output",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{:?}", output);
    let text = std::fs::read_to_string(&report).unwrap();
    let mean_line = text.lines().next().unwrap();
    assert!(mean_line.starts_with("# mean_ssim"));
    let mean: f64 = mean_line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(mean > 0.999, "identical shapes score ~1, got {mean}");
}

#[test]
fn sweep_runs_independent_targets_into_separate_directories() {
    // a light sweep on the smallest bundled pattern at shallow targets
    let dir = scratch("sweep");
    let output = morphshell()
        .args([
            "sweep",
            data_dir().join("pattern_c.toml").to_str().unwrap(),
            "--targets",
            "-0.02,-0.04",
            "--output",
            dir.to_str().unwrap(),
            "--jobs",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{:?}", output);
    assert!(dir.join("target_m0_0200/runlog.txt").exists());
    assert!(dir.join("target_m0_0400/runlog.txt").exists());
    assert!(dir.join("target_m0_0200/step_final.obj").exists());
}

#[test]
fn verify_subcommand_passes_its_gates() {
    let output = morphshell().args(["verify", "--samples", "1"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(output.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"), "{stdout}");
    assert!(stdout.contains("cantilever"));
    assert!(stdout.contains("uniaxial"));
}

#[test]
fn verify_accepts_a_user_mesh() {
    let output = morphshell()
        .args([
            "verify",
            "--samples",
            "1",
            "--mesh",
            data_dir().join("pattern_c.mesh").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(output.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("user mesh gradient"), "{stdout}");
}

#[test]
fn dynamic_mode_runs_through_the_cli() {
    let dir = scratch("dynamic_run");
    let patch = morphshell_core::lattice::staggered_grid(4, 4, 5, 6.0, 4.0);
    let mut flags = vec![false; patch.triangles.len()];
    for f in flags.iter_mut().take(patch.triangles.len() / 2) {
        *f = true;
    }
    morphshell_cli::meshio::write_native(
        &dir.join("strip.mesh"),
        &patch.nodes,
        &patch.triangles,
        &flags,
    )
    .unwrap();
    std::fs::write(
        dir.join("run.toml"),
        r#"
[mesh]
path = "strip.mesh"

[material]
substrate_modulus = 1.0
substrate_thickness = 0.3
pattern_modulus = 3.0
pattern_thickness = 0.7

[schedule]
target_strain = -0.06
initial_step = 0.03
min_step = 1e-4
max_step = 0.05

[solver]
mode = "dynamic"
time_step = 0.1
density = 1e-6

[output]
directory = "out"
snapshot_every = 0
"#,
    )
    .unwrap();
    let out_dir = dir.join("outputs");
    let output = morphshell()
        .args([
            "run",
            dir.join("run.toml").to_str().unwrap(),
            "--output",
            out_dir.to_str().unwrap(),
            "--quiet",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{:?}", output);
    let log = std::fs::read_to_string(out_dir.join("runlog.txt")).unwrap();
    assert!(log.contains("# converged true"), "{log}");
}

#[test]
fn run_on_temperature_ratio_resolves_through_the_curve() {
    // tiny strip mesh via obj + region sidecar; drive with T/Tg instead of
    // a direct strain target
    let dir = scratch("curve_run");
    let mesh_path = dir.join("strip.obj");
    let patch = morphshell_core::lattice::staggered_grid(4, 4, 5, 6.0, 4.0);
    let mut obj = String::new();
    for p in &patch.nodes {
        obj.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z));
    }
    for t in &patch.triangles {
        obj.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    std::fs::write(&mesh_path, obj).unwrap();
    let regions: Vec<String> = (0..patch.triangles.len() / 2).map(|t| t.to_string()).collect();
    std::fs::write(dir.join("strip.regions"), regions.join("\n")).unwrap();
    std::fs::copy(data_dir().join("shrink_curve.txt"), dir.join("curve.txt")).unwrap();

    std::fs::write(
        dir.join("run.toml"),
        r#"
[mesh]
path = "strip.obj"
regions = "strip.regions"

[material]
substrate_modulus = 1.0
substrate_thickness = 0.3
pattern_modulus = 3.0
pattern_thickness = 0.7

[schedule]
temperature_ratio = 1.06
curve = "curve.txt"

[output]
directory = "out"
"#,
    )
    .unwrap();
    let out_dir = dir.join("outputs");
    let output = morphshell()
        .args([
            "run",
            dir.join("run.toml").to_str().unwrap(),
            "--output",
            out_dir.to_str().unwrap(),
            "--quiet",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{:?}", output);
    let log = std::fs::read_to_string(out_dir.join("runlog.txt")).unwrap();
    assert!(log.contains("# converged true"));
    // curve value at 1.06 is L/L0 = 0.89 -> strain -0.11; the last step
    // must land exactly there
    let last = log
        .lines()
        .filter(|l| !l.starts_with('#'))
        .last()
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse::<f64>()
        .unwrap();
    assert!((last - (-0.11)).abs() < 1e-12, "final strain {last}");
}
