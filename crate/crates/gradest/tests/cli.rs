use std::path::Path;
use std::process::{Command, Output};

use gradest::output::read_columnar;
use gradest::{ExperimentSpec, Task};
use gradest_core::catalog::CatalogEntry;
use serde_json::Value;

fn gradest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradest"))
        .args(args)
        .env_remove(gradest::WORKERS_ENV)
        .output()
        .expect("gradest runs")
}

fn run_spec(cmd: &str, spec: &str, dir: &Path, out: &str, extra: &[&str]) -> Output {
    let path = dir.join(format!("{out}.toml"));
    std::fs::write(&path, spec).unwrap();
    let out = dir.join(out);
    let mut args = vec![cmd, "--spec", path.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    gradest(&args)
}

fn summary(dir: &Path, out: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(out).join("summary.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const OU_SHORT: &str = r#"
seed = 3
observable = { kind = "sign" }

[model]
name = "ou"

[grid]
t = [1e-3, 2e-3, 5e-3, 1e-2]
x = [0.0]

[estimator]
paths = 20000
step = 1e-4
"#;

#[test]
fn ou_short_time_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_spec("verify-short", OU_SHORT, dir.path(), "ou", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path(), "ou");
    assert_eq!(s["pass"], true);
    assert_eq!(s["task"], "verify-short");
    assert!(s["constant_convention"].as_str().is_some_and(|c| !c.is_empty()));
    assert_eq!(s["config"]["seed"], 3);
    assert_eq!(s["config"]["estimator"]["paths"], 20000);
    let rep = &s["results"]["verify-short"]["result"]["reports"][0];
    let slope = rep["scaling_fit"]["slope"].as_f64().unwrap();
    // |d/dx T_t sign(0)| ~ (pi t)^{-1/2} for small t
    assert!((slope + 0.5).abs() <= 0.05, "slope {slope}");
    let csv = std::fs::read_to_string(dir.path().join("ou").join("verify_short.csv")).unwrap();
    assert!(csv.starts_with("kind,t,x,measured,std_error,rhs,ratio"));
    assert_eq!(csv.lines().count(), 5);
    let meta: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ou").join("metadata.json")).unwrap()).unwrap();
    assert!(meta["created_unix"].is_u64());
    assert!(s.get("created_unix").is_none());

    let r = gradest(&["report", "--out", dir.path().join("ou").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stdout).contains("overall: pass"));
}

#[test]
fn malformed_specs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax", "seed = = 1"),
        (
            "unknown_model",
            "observable = { kind = \"sin\" }\n[model]\nname = \"nope\"\n[grid]\nt = [1.0]\nx = [0.0]\n",
        ),
        (
            "empty_grid",
            "observable = { kind = \"sin\" }\n[model]\nname = \"ou\"\n[grid]\nt = []\nx = [0.0]\n",
        ),
        (
            "unknown_field",
            "colour = 1\nobservable = { kind = \"sin\" }\n[model]\nname = \"ou\"\n[grid]\nt = [1.0]\nx = [0.0]\n",
        ),
        (
            "wrong_dim",
            "observable = { kind = \"sin\" }\n[model]\nname = \"ou\"\ndim = 2\n[grid]\nt = [1.0]\nx = [0.0]\n",
        ),
    ];
    for (name, text) in cases {
        let o = run_spec("bounds", text, dir.path(), name, &[]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
        assert!(
            stderr(&o).contains(name) || stderr(&o).contains("parse error"),
            "{name}: {}",
            stderr(&o)
        );
    }
    let missing = gradest(&["bounds", "--spec", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn heat_has_no_invariant_measure() {
    let dir = tempfile::tempdir().unwrap();
    let spec = "observable = { kind = \"tanh\" }\n[model]\nname = \"heat\"\n[grid]\nt = [1.0]\nx = [0.0]\n[estimator]\npaths = 100\n[ergodic]\ninvariant_paths = 100\n";
    for cmd in ["poisson", "verify-long"] {
        let o = run_spec(cmd, spec, dir.path(), cmd, &[]);
        assert_eq!(o.status.code(), Some(3), "{cmd}: {}", stderr(&o));
        assert!(stderr(&o).contains("assumption not available"), "{}", stderr(&o));
    }
}

#[test]
fn catalog_json_round_trips() {
    let o = gradest(&["catalog", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let entries: Vec<CatalogEntry> = serde_json::from_slice(&o.stdout).unwrap();
    let raw: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(serde_json::to_value(&entries).unwrap(), raw);
    let names: Vec<&str> = entries.iter().map(|e| e.name.as_str()).collect();
    assert!(names.contains(&"ou") && names.contains(&"singular_v"), "{names:?}");
    let sv = entries.iter().find(|e| e.name == "singular_v").unwrap();
    assert_eq!(sv.alpha_b, Some(-0.5));

    let text = gradest(&["catalog"]);
    let text = String::from_utf8_lossy(&text.stdout);
    assert!(text.lines().any(|l| l.starts_with("ou ")));
    assert!(text
        .lines()
        .any(|l| l.starts_with("singular_v") && l.contains("alpha_b")));
}

#[test]
fn trajectory_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let spec = "seed = 5\nobservable = { kind = \"sin\" }\n[model]\nname = \"ou\"\n[grid]\nt = [0.1, 0.5]\nx = [1.0, -1.0]\n[estimator]\npaths = 64\nstep = 0.01\n[simulate]\ndump = true\n";
    let o = run_spec("simulate", spec, dir.path(), "sim", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("sim");
    for i in 0..2 {
        let (side, data) = read_columnar(&out, &format!("trajectories_{i}")).unwrap();
        let shape: Vec<usize> = side["shape"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap() as usize)
            .collect();
        assert_eq!(shape, vec![64, 2, 1]);
        assert_eq!(data.len(), 128);
        assert_eq!(side["meta"]["record_times"], serde_json::json!([0.1, 0.5]));
        assert!(data.iter().all(|v| v.is_finite()));
    }
    // the dumped terminal values average to the reported terminal mean
    let (_, data) = read_columnar(&out, "trajectories_0").unwrap();
    let mean = data.chunks(2).map(|c| c[1]).sum::<f64>() / 64.0;
    let s = summary(dir.path(), "sim");
    let reported = s["results"]["simulate"]["result"]["starts"][0]["terminal_mean"][0]
        .as_f64()
        .unwrap();
    assert!((mean - reported).abs() < 1e-12, "{mean} vs {reported}");
}

#[test]
fn summaries_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = "seed = 9\nobservable = { kind = \"tanh\" }\n[model]\nname = \"cubic\"\n[grid]\nt = [0.1, 0.4]\nx = [0.5]\n[estimator]\npaths = 2000\nstep = 0.01\n";
    let a = run_spec("estimate", spec, dir.path(), "a", &["--workers", "1"]);
    let b = run_spec("estimate", spec, dir.path(), "b", &[]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(b.status.code(), Some(0), "{}", stderr(&b));
    let read = |n: &str| std::fs::read(dir.path().join(n).join("summary.json")).unwrap();
    assert_eq!(read("a"), read("b"));
    let c = run_spec("estimate", spec, dir.path(), "c", &["--seed", "10"]);
    assert_eq!(c.status.code(), Some(0));
    assert_ne!(read("a"), read("c"));
    assert_eq!(summary(dir.path(), "c")["config"]["seed"], 10);
    let json_only = run_spec("estimate", spec, dir.path(), "d", &["--format", "json"]);
    assert_eq!(json_only.status.code(), Some(0));
    assert_eq!(read("a"), read("d"));
    assert!(!std::fs::read_dir(dir.path().join("d")).unwrap().any(|e| e
        .unwrap()
        .path()
        .extension()
        .is_some_and(|x| x == "csv")));
}

#[test]
fn spec_parsing() {
    let spec = ExperimentSpec::parse(OU_SHORT).unwrap();
    assert_eq!(spec.task, None);
    assert_eq!(spec.grid.t.len(), 4);
    assert_eq!(spec.points(), vec![vec![0.0]]);
    assert_eq!(spec.weights(), gradest_core::catalog::weights("ou", 1));
    let both = OU_SHORT.replace(
        "name = \"ou\"",
        "name = \"ou\"\ninline = { name = \"p\", drift = [0.0, -1.0] }",
    );
    assert_eq!(ExperimentSpec::parse(&both).unwrap_err().exit_code(), 2);
    let inline = OU_SHORT.replace("name = \"ou\"", "inline = { name = \"lin\", drift = [0.0, -1.0] }");
    let spec = ExperimentSpec::parse(&inline).unwrap();
    assert_eq!(spec.model_name(), "lin");
    assert!(spec.build_model().is_ok());
    let tasked = format!("task = \"verify-long\"\n{OU_SHORT}");
    assert_eq!(ExperimentSpec::parse(&tasked).unwrap().task, Some(Task::VerifyLong));
}
