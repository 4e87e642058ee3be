use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn depsub(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depsub"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios/bundled.json")
}

/// Writes a generated instance into `dir` and returns its path.
fn generate(dir: &TempDir, name: &str, args: &[&str]) -> String {
    let path = dir.path().join(name);
    let path = path.to_str().unwrap().to_string();
    let mut full = vec!["generate"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["-o", &path]);
    let out = depsub(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn value<'a>(text: &'a str, label: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(label).and_then(|r| r.strip_prefix('\t')))
        .unwrap_or_else(|| panic!("no {label} line in {text}"))
}

#[test]
fn validate_accepts_a_well_formed_instance() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "p.json", &["product", "--m", "3", "--seed", "4"]);
    let out = depsub(&["validate", &path]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(value(&stdout(&out), "items"), "3");
    assert_eq!(value(&stdout(&out), "submodular"), "true");
}

#[test]
fn malformed_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"items\": [\"a\"]}").unwrap();
    assert_eq!(depsub(&["validate", path.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(depsub(&["validate", "/no/such/file.json"]).status.code(), Some(1));
}

#[test]
fn unknown_flag_prints_usage_and_exits_with_one() {
    let out = depsub(&["kappa", "--frobnicate", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(depsub(&["--help"]).status.code(), Some(0));
}

#[test]
fn capacity_error_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "p.json", &["product", "--m", "3"]);
    assert_eq!(depsub(&["kappa", &path, "--cap", "2"]).status.code(), Some(2));
}

#[test]
fn kappa_of_a_product_is_one() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "p.json", &["product", "--m", "3", "--states", "3", "--seed", "9"]);
    let out = depsub(&["kappa", &path]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(value(&stdout(&out), "kappa"), "1");
    let out = depsub(&["gamma", &path]);
    assert_eq!(value(&stdout(&out), "gamma"), "1");
}

#[test]
fn correlated_instance_reports_both_kappa_variants() {
    let dir = TempDir::new().unwrap();
    let path = generate(
        &dir,
        "cc.json",
        &["common-cause", "--m", "3", "--worlds", "3", "--seed", "2", "--noise", "1/2"],
    );
    let literal = stdout(&depsub(&["kappa", &path]));
    let conditioned = stdout(&depsub(&["kappa", &path, "--variant", "conditioned"]));
    let parse = |s: &str| s.parse::<f64>().unwrap_or(f64::NAN);
    for text in [&literal, &conditioned] {
        let clamped = value(text, "clamped");
        let (p, q) = clamped.split_once('/').unwrap_or((clamped, "1"));
        let v = parse(p) / parse(q);
        assert!((0.0..=1.0).contains(&v), "{text}");
    }
}

#[test]
fn greedy_and_oracles_agree_on_a_modular_instance() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "p.json", &["product", "--m", "3", "--states", "1", "--seed", "3"]);
    let greedy = stdout(&depsub(&["greedy", &path, "--constraint", "uniform:1", "--delta", "0.1"]));
    let adaptive = stdout(&depsub(&["oracle", "adaptive", &path, "--constraint", "uniform:1"]));
    let fixed = stdout(&depsub(&["oracle", "nonadaptive", &path, "--constraint", "{\"kind\": \"uniform\", \"k\": 1}"]));
    let f: f64 = value(&greedy, "F").parse().unwrap();
    let opt: f64 = value(&adaptive, "value").parse().unwrap();
    let best: f64 = value(&fixed, "value").parse().unwrap();
    assert!((f - opt).abs() < 1e-9 && (opt - best).abs() < 1e-9);
    let table = stdout(&depsub(&["greedy", &path, "--constraint", "uniform:1", "--delta", "0.25", "--trajectory"]));
    assert_eq!(table.lines().count(), 1 + 4 + 1);
    assert!(table.starts_with("t\ty_x1"));
}

#[test]
fn sampled_greedy_is_seeded() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "cc.json", &["common-cause", "--m", "3", "--worlds", "4", "--seed", "1"]);
    let run = |seed: &str| {
        stdout(&depsub(&[
            "greedy", &path, "--constraint", "uniform:2", "--delta", "0.2", "--mode", "sampled", "--samples", "40",
            "--seed", seed,
        ]))
    };
    assert_eq!(run("5"), run("5"));
}

#[test]
fn gap_reports_bound_and_virtual_value() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "p.json", &["product", "--m", "3", "--seed", "8", "--constraint", "uniform:2"]);
    let out = stdout(&depsub(&["gap", &path]));
    assert_eq!(value(&out, "gap_bound"), "2");
    let opt: f64 = value(&out, "adaptive").parse().unwrap();
    let virt: f64 = value(&out, "virtual").parse().unwrap();
    assert!(virt >= 0.5 * opt - 1e-9);
}

#[test]
fn strict_experiment_on_the_bundled_suite_passes() {
    let out = depsub(&["experiment", bundled().to_str().unwrap(), "--strict"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let tsv = stdout(&out);
    assert_eq!(tsv.lines().count(), 1 + 22);
    assert!(!tsv.contains("\tfail\t"));
}

#[test]
fn strict_experiment_flags_violations() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(
        &path,
        r#"[{"name": "missing", "kind": "ratio-check", "instance": {"source": "file", "path": "nope.json"},
             "constraint": {"kind": "uniform", "k": 1}}]"#,
    )
    .unwrap();
    let path = path.to_str().unwrap();
    assert_eq!(depsub(&["experiment", path, "--strict"]).status.code(), Some(3));
    assert_eq!(depsub(&["experiment", path]).status.code(), Some(0));
}

#[test]
fn experiment_reports_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str| {
        let tsv = dir.path().join(format!("{tag}.tsv"));
        let json = dir.path().join(format!("{tag}.json"));
        let out = depsub(&[
            "experiment",
            bundled().to_str().unwrap(),
            "--tsv",
            tsv.to_str().unwrap(),
            "--json",
            json.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        (std::fs::read(tsv).unwrap(), std::fs::read(json).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn suite_command_prints_the_bundled_file() {
    let out = depsub(&["suite"]);
    assert_eq!(stdout(&out), std::fs::read_to_string(bundled()).unwrap());
}

#[test]
fn generated_instances_are_reproducible() {
    let a = stdout(&depsub(&["generate", "common-cause", "--m", "3", "--worlds", "4", "--seed", "7"]));
    let b = stdout(&depsub(&["generate", "common-cause", "--m", "3", "--worlds", "4", "--seed", "7"]));
    assert_eq!(a, b);
    assert!(a.contains("\"distribution\""));
}
