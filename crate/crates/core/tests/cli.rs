use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hsfwi(cmd: &str, config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsfwi"))
        .args([cmd, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn hsfwi")
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = r#"
seed = 2
[partition]
radii = [0.5]
[model]
truth = [1.2]
initial = [1.25]
[data]
lambda0 = 1.0
l_max = 3
l_shift = 4
"#;

#[test]
fn weights_square_well() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/square_well.toml");
    let out = tmp.path().join("out");
    let o = hsfwi("weights", &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("weight_profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# hsfwi "));
    assert_eq!(lines.next().unwrap(), "r,V,psi,u,w");
    let report = json(&out.join("weights.json"));
    let runs = report["runs"].as_array().unwrap();
    assert!(runs.iter().any(|r| r["control"] == true && r["violations"].as_u64().unwrap() > 0));
    assert!(runs.iter().filter(|r| r["control"] == false).all(|r| r["passed"] == true));
    assert_eq!(report["meta"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn forward_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(hsfwi("forward", &cfg, &a).status.success());
    assert!(hsfwi("forward", &cfg, &b).status.success());
    for f in ["data.csv", "traces.csv", "misfit.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(json(&a.join("misfit.json"))["misfit_freq"].as_f64().unwrap() > 0.0);
}

#[test]
fn homogeneous_truth_has_no_scattered_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("truth = [1.2]", "truth = [1.0]"));
    let out = tmp.path().join("out");
    assert!(hsfwi("forward", &cfg, &out).status.success());
    let csv = fs::read_to_string(out.join("traces.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(!rows.is_empty());
    for row in rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[3].abs() < 1e-14 && cols[4].abs() < 1e-14, "{row}");
    }
}

#[test]
fn invert_from_truth_stops_at_once() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &(SMALL.replace("initial = [1.25]", "initial = [1.2]") + "[ball]\ncenter = [1.2]\nradius = 0.05\n"),
    );
    let out = tmp.path().join("out");
    let o = hsfwi("invert", &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("iterations.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "m,misfit,grad_norm,err_to_truth,bound_R_rho_k2");
    assert_eq!(rows.len(), 2);
    let inv = json(&out.join("inversion.json"));
    assert_eq!(inv["final_misfit"].as_f64().unwrap(), 0.0);
    assert!(json(&out.join("constants.json"))["mu_max"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_config_exits_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[data]\nlambda0 = 0.25\n");
    let out = tmp.path().join("out");
    let o = hsfwi("forward", &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    let report = json(&out.join("error.json"));
    assert_eq!(report["exit_code"], 2);
    let missing = hsfwi("forward", &tmp.path().join("nope.toml"), &out);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn oversized_step_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.to_string()
        + "[ball]\ncenter = [1.2]\nradius = 5.0\n[landweber]\nstep = 1e6\niterations = 20\nsamples = 2\n";
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let o = hsfwi("invert", &cfg, &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("error.json"));
    assert_eq!(report["error"], "StepSizeTooLarge", "{report}");
}
