use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn oseledets(cache_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oseledets"))
        .arg("run")
        .args(args)
        .env("OSELEDETS_CACHE_DIR", cache_dir)
        .output()
        .expect("binary runs")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn constant_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let r = oseledets(tmp.path(), &["--system", "constant", "--A", "2,0;0,0.5", "--command", "spectrum", "--horizon", "100", "--output-dir", &out_arg(&out)]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let s = read_json(&out.join("spectrum.json"));
    let e: Vec<f64> = s["exponents"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((e[0] + 2f64.ln()).abs() < 1e-9 && (e[1] - 2f64.ln()).abs() < 1e-9);
    let m = read_json(&out.join("manifest.json"));
    for f in m["files"].as_array().unwrap() {
        let p = out.join(f.as_str().unwrap());
        assert!(p.exists());
        if p.extension().is_some_and(|e| e == "json") {
            read_json(&p);
        }
    }
}

#[test]
fn verify_from_config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"system": {"name": "rotation_triangular", "seed": 1}, "command": "spectrum", "samples": 8, "horizon": 400}"#).unwrap();
    let r = oseledets(tmp.path(), &["--config", cfg.to_str().unwrap(), "--command", "verify", "--output-dir", &out_arg(&out)]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let v = read_json(&out.join("verify.json"));
    assert!(v["max_equivariance_residual"].as_f64().unwrap() <= 1e-6);
    assert!(v["max_duality_residual"].as_f64().unwrap() <= 1e-2);
    assert_eq!(v["points"], 8);
    assert_eq!(read_json(&out.join("manifest.json"))["config"]["command"], "verify");
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = tmp.path().join("cfg.json");
    for body in [r#"{"system": {"name": "constant"}, "command": "spectrum""#, r#"{"system": {"name": "nope"}, "command": "spectrum"}"#, r#"{"system": {"name": "rotation_triangular"}, "command": "spectrum", "horizon": 3}"#, r#"{"system": {"name": "rotation_triangular"}, "command": "spectrum", "bogus": 1}"#] {
        fs::write(&cfg, body).unwrap();
        let r = oseledets(tmp.path(), &["--config", cfg.to_str().unwrap(), "--output-dir", &out_arg(&out)]);
        assert_eq!(r.status.code(), Some(2), "{body}");
        assert!(!out.exists());
    }
}

#[test]
fn ambiguous_clusters_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    // exponents log 1.0725 ~ 0.07 and 0: a gap between tol and 2 tol
    let r = oseledets(tmp.path(), &["--system", "constant", "--A", "1.0725,0;0,1", "--command", "spectrum", "--output-dir", &out_arg(&tmp.path().join("o"))]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("increase horizon"));
}

#[test]
fn unreachable_level_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    // with a tiny epsilon the constants of a chaotic base grow like e^{c sqrt(n)},
    // and delta = 0.01 asks for every one of 20 samples
    let args = ["--system", "cat_generic", "--command", "holder", "--epsilon", "1e-6", "--delta", "0.01", "--horizon", "20000", "--samples", "20"];
    let r = oseledets(tmp.path(), &[&args[..], &["--output-dir", &out_arg(&tmp.path().join("o"))]].concat());
    assert_eq!(r.status.code(), Some(4), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn non_hyperbolic_dichotomy_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let r = oseledets(tmp.path(), &["--system", "rotation_stochastic", "--command", "dichotomy", "--samples", "4", "--output-dir", &out_arg(&tmp.path().join("o"))]);
    assert_eq!(r.status.code(), Some(1));
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let m = read_json(&dir.join("manifest.json"));
    m["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap().to_string()).map(|f| (f.clone(), fs::read(dir.join(&f)).unwrap())).collect()
}

#[test]
fn cache_preserves_outputs_and_saves_time() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &Path, cache: &'static str| -> Vec<String> {
        ["--system", "cat_generic", "--command", "holder", "--samples", "300", "--horizon", "300", cache, "--output-dir", &out_arg(out)].iter().map(|s| s.to_string()).collect()
    };
    let run = |out: &Path, cache| {
        let a = args(out, cache);
        let t = Instant::now();
        let r = oseledets(&tmp.path().join("cache"), &a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
        t.elapsed().as_secs_f64()
    };
    let plain = tmp.path().join("plain");
    run(&plain, "--no-cache");
    let cold_dir = tmp.path().join("cold");
    let cold = run(&cold_dir, "--cache");
    let warm_dir = tmp.path().join("warm");
    let warm = run(&warm_dir, "--cache");
    assert_eq!(outputs(&plain), outputs(&cold_dir));
    assert_eq!(outputs(&plain), outputs(&warm_dir));
    assert!(cold >= 2.0 * warm, "cold {cold:.2}s, warm {warm:.2}s");

    // a corrupt entry is dropped and recomputed
    let entry = fs::read_dir(tmp.path().join("cache")).unwrap().next().unwrap().unwrap().path();
    fs::write(&entry, b"not json").unwrap();
    let again = tmp.path().join("again");
    run(&again, "--cache");
    assert_eq!(outputs(&plain), outputs(&again));
}

#[test]
fn rerun_replaces_previous_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let base = ["--system", "rotation_triangular", "--samples", "3", "--output-dir"];
    let mut a: Vec<&str> = base.to_vec();
    let o = out_arg(&out);
    a.extend([o.as_str(), "--command", "splitting"]);
    assert_eq!(oseledets(tmp.path(), &a).status.code(), Some(0));
    assert!(out.join("splitting.json").exists());
    a.truncate(a.len() - 1);
    a.push("spectrum");
    assert_eq!(oseledets(tmp.path(), &a).status.code(), Some(0));
    assert!(!out.join("splitting.json").exists());
    assert!(out.join("spectrum.json").exists());
}
