//! End-to-end tests of the installed binary: exit codes, file outputs,
//! stdout/stderr separation, and determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pipesurf"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pipesurf-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const TORUS: &str = "
[geometry]
centerline = \"circle\"
section = \"circular\"
";

#[test]
fn explain_config_prints_a_parseable_template_that_runs() {
    let dir = temp_dir("explain");
    let out = run_in(&dir, &["explain-config"]);
    assert!(out.status.success());
    let text = stdout_text(&out);
    assert!(text.contains("[geometry]"));
    assert!(text.contains("[solver]"));
    let parsed: toml::Value = toml::from_str(&text).expect("template is valid TOML");
    assert!(parsed.get("output").is_some());

    // The template itself must drive a run.
    let config = write_config(&dir, &text);
    let out = run_in(
        &dir,
        &["geometry", "--config", config.to_str().unwrap(), "--out", "mesh"],
    );
    assert!(out.status.success(), "{}", stderr_text(&out));
}

#[test]
fn geometry_welds_the_doubly_periodic_mesh() {
    let dir = temp_dir("geometry");
    let config = write_config(&dir, &format!("{TORUS}\n[grid]\nm = 64\nn = 64\n"));
    let out = run_in(
        &dir,
        &[
            "geometry",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "mesh",
            "--format",
            "obj",
        ],
    );
    assert!(out.status.success(), "{}", stderr_text(&out));
    assert!(stderr_text(&out).contains("[pass]"));
    let obj = fs::read_to_string(dir.join("mesh/pipe.obj")).unwrap();
    let vertices = obj.lines().filter(|l| l.starts_with("v ")).count();
    assert_eq!(vertices, 4096);
}

#[test]
fn oversized_section_fails_validity_with_exit_2() {
    let dir = temp_dir("invalid");
    let config = write_config(
        &dir,
        "
[geometry]
centerline = \"circle\"
section = \"circular\"
section_params = [2.5]
",
    );
    let out = run_in(&dir, &["geometry", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_text(&out);
    assert!(err.contains("cross_section_bound"), "{err}");
    assert!(err.contains("1.25"), "{err}");
    assert!(!dir.join("out/pipe.obj").exists());
}

#[test]
fn helical_pipe_reports_its_pitch_margin() {
    let dir = temp_dir("pitch");
    let config = write_config(
        &dir,
        "
[geometry]
centerline = \"helix\"
centerline_params = [8.0, 1.0]
section = \"star\"
",
    );
    let out = run_in(
        &dir,
        &["geometry", "--config", config.to_str().unwrap(), "--out", "m"],
    );
    assert!(out.status.success(), "{}", stderr_text(&out));
    let err = stderr_text(&out);
    assert!(err.contains("helix_pitch"), "{err}");
    assert!(err.contains("[pass] helix_pitch"), "{err}");
}

#[test]
fn zero_source_solve_returns_the_zero_field() {
    let dir = temp_dir("zero");
    let config = write_config(
        &dir,
        "
[geometry]
centerline = \"helix\"
section = \"circular\"

[problem]
lambda = \"0.5\"
source = \"0\"

[grid]
m = 16
",
    );
    let out = run_in(
        &dir,
        &["solve", "--config", config.to_str().unwrap(), "--out", "sol"],
    );
    assert!(out.status.success(), "{}", stderr_text(&out));
    let csv = fs::read_to_string(dir.join("sol/solution.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let value: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(value.abs() <= 1e-10, "{line}");
    }
}

#[test]
fn manufactured_solve_reports_error_and_repeats_byte_identically() {
    let dir = temp_dir("determinism");
    let config = write_config(
        &dir,
        &format!(
            "{TORUS}
[problem]
case = \"torus\"

[grid]
m = 24

[output]
formats = [\"csv\", \"json\", \"vtk\"]
"
        ),
    );
    let out1 = run_in(
        &dir,
        &["solve", "--config", config.to_str().unwrap(), "--out", "a"],
    );
    assert!(out1.status.success(), "{}", stderr_text(&out1));
    assert!(stderr_text(&out1).contains("discrete H1 error E = "));
    let out2 = run_in(
        &dir,
        &["solve", "--config", config.to_str().unwrap(), "--out", "b"],
    );
    assert!(out2.status.success());
    for name in ["solution.csv", "solve.json", "solution.vtk"] {
        let a = fs::read(dir.join("a").join(name)).unwrap();
        let b = fs::read(dir.join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("a/solve.json")).unwrap()).unwrap();
    let error = json["error"].as_f64().unwrap();
    assert!(error > 0.0 && error < 0.1, "E = {error}");
    let vtk = fs::read_to_string(dir.join("a/solution.vtk")).unwrap();
    assert!(vtk.contains("SCALARS u double 1"));
}

#[test]
fn convergence_emits_tables_and_rates() {
    let dir = temp_dir("convergence");
    let config = write_config(
        &dir,
        &format!(
            "{TORUS}
[problem]
case = \"torus\"

[grid]
h_list = [0.3926990816987241, 0.2617993877991494]

[output]
formats = [\"csv\", \"json\"]
"
        ),
    );
    let out = run_in(
        &dir,
        &[
            "convergence",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "table",
        ],
    );
    assert!(out.status.success(), "{}", stderr_text(&out));
    let csv = fs::read_to_string(dir.join("table/convergence.csv")).unwrap();
    assert!(csv.starts_with("h,m,n,error,rate"));
    assert_eq!(csv.lines().count(), 3);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("table/convergence.json")).unwrap())
            .unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    assert!(json["rows"][1]["rate"].as_f64().unwrap() > 3.0);
}

#[test]
fn convergence_without_an_exact_solution_is_a_config_error() {
    let dir = temp_dir("noexact");
    let config = write_config(&dir, &format!("{TORUS}\n[grid]\nh_list = [0.4]\n"));
    let out = run_in(&dir, &["convergence", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_text(&out).contains("problem.case or problem.exact"));
}

#[test]
fn unreachable_tolerance_surfaces_as_solver_breakdown() {
    let dir = temp_dir("breakdown");
    let config = write_config(
        &dir,
        &format!(
            "{TORUS}
[problem]
case = \"torus\"

[grid]
m = 16

[solver]
method = \"gmres\"
tol = 1e-30
max_iterations = 200
"
        ),
    );
    let out = run_in(
        &dir,
        &["solve", "--config", config.to_str().unwrap(), "--out", "x"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr_text(&out));
    assert!(stderr_text(&out).contains("solver error"));
}

#[test]
fn config_and_usage_mistakes_exit_1() {
    let dir = temp_dir("usage");
    let out = run_in(&dir, &["solve"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_text(&out).contains("--config"));

    let out = run_in(&dir, &["solve", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(1));

    let config = write_config(
        &dir,
        "
[geometry]
centerline = \"klein_bottle\"
section = \"circular\"
",
    );
    let out = run_in(&dir, &["geometry", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_text(&out).contains("klein_bottle"));
}

#[test]
fn stdout_mode_prints_data_and_writes_no_files() {
    let dir = temp_dir("stdout");
    let config = write_config(
        &dir,
        &format!("{TORUS}\n[problem]\ncase = \"torus\"\n\n[grid]\nm = 12\n"),
    );
    let out = run_in(
        &dir,
        &[
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "nothing",
            "--stdout",
        ],
    );
    assert!(out.status.success(), "{}", stderr_text(&out));
    let data = stdout_text(&out);
    assert!(data.starts_with("i,j,theta,omega,value"));
    assert!(data.lines().count() > 100);
    assert!(!dir.join("nothing").exists());
}

#[test]
fn seed_flag_redraws_the_random_section() {
    let dir = temp_dir("seed");
    let config = write_config(
        &dir,
        "
[geometry]
centerline = \"circle\"
section = \"random\"

[grid]
m = 16
n = 16
",
    );
    let base = ["geometry", "--config"];
    let out1 = run_in(
        &dir,
        &[&base[..], &[config.to_str().unwrap(), "--out", "s1", "--seed", "1"]].concat(),
    );
    let out2 = run_in(
        &dir,
        &[&base[..], &[config.to_str().unwrap(), "--out", "s2", "--seed", "2"]].concat(),
    );
    assert!(out1.status.success() && out2.status.success());
    let m1 = fs::read(dir.join("s1/pipe.obj")).unwrap();
    let m2 = fs::read(dir.join("s2/pipe.obj")).unwrap();
    assert_ne!(m1, m2, "different seeds must move the random profile");
}
