//! End-to-end tests of the `mquiver` binary and its in-process entry point.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mquiver::cxmat::{c, cr, CMatrix};
use mquiver::io::{save_matrix, save_quiver, MatrixDocument};
use mquiver::quiver::{gen_random, gen_toric, DimensionVector, ScalarChain, ToricSplit};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mquiver"));
    cmd.env_remove("MQUIVER_TOL");
    cmd
}

fn reports(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("bad report line {l:?}: {e}")))
        .collect()
}

fn single(out: &Output) -> Value {
    let mut r = reports(out);
    assert_eq!(r.len(), 1, "{:?}", String::from_utf8_lossy(&out.stdout));
    r.pop().unwrap()
}

fn toric3_file(dir: &Path) -> PathBuf {
    let s = ScalarChain::from_reals(&[2.0, 3.0]).unwrap();
    let q = gen_toric(3, &s, &ToricSplit::Principal).unwrap();
    let path = dir.join("toric3.json");
    save_quiver(&q, Some(&s), &path).unwrap();
    path
}

fn random_file(dir: &Path, seed: u64) -> PathBuf {
    let (q, s) = gen_random(&DimensionVector::full_flag(4), seed).unwrap();
    let path = dir.join(format!("random{seed}.json"));
    save_quiver(&q, Some(&s), &path).unwrap();
    path
}

fn matrix_file(dir: &Path, name: &str, m: &CMatrix, variant: Option<&str>) -> PathBuf {
    let path = dir.join(name);
    save_matrix(&MatrixDocument::from_matrix(m, variant), &path).unwrap();
    path
}

#[test]
fn verify_toric_passes() {
    let dir = TempDir::new().unwrap();
    let path = toric3_file(dir.path());
    let out = bin().arg("verify").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = single(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["operation"], "verify");
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["inputs_digest"].as_str().unwrap().len(), 64);
    for (name, v) in r["residuals"].as_object().unwrap() {
        assert!(v.as_f64().unwrap() <= 1e-12, "{name} = {v}");
    }
    let q: Vec<f64> = r["data"]["q"].as_array().unwrap().iter().map(|z| z[0].as_f64().unwrap()).collect();
    assert_eq!(q, vec![2.0, 3.0]);
}

#[test]
fn verify_reports_in_argument_order() {
    let dir = TempDir::new().unwrap();
    let files = [toric3_file(dir.path()), random_file(dir.path(), 1), random_file(dir.path(), 2)];
    let out = bin().arg("verify").args(&files).output().unwrap();
    let rs = reports(&out);
    assert_eq!(rs.len(), 3);
    for (r, f) in rs.iter().zip(&files) {
        assert_eq!(r["data"]["files"][0], f.display().to_string());
    }
}

#[test]
fn wrong_scalars_fail() {
    let dir = TempDir::new().unwrap();
    let s = ScalarChain::from_reals(&[2.0, 3.0]).unwrap();
    let q = gen_toric(3, &s, &ToricSplit::Principal).unwrap();
    let path = dir.path().join("wrong.json");
    save_quiver(&q, Some(&ScalarChain::from_reals(&[5.0, 7.0]).unwrap()), &path).unwrap();
    let out = bin().arg("verify").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(single(&out)["verdict"], "fail");
}

#[test]
fn steinberg_unipotent_block() {
    let dir = TempDir::new().unwrap();
    let m = CMatrix::from_fn(2, 2, |i, j| if i == j || j == i + 1 { cr(1.0) } else { cr(0.0) });
    let path = matrix_file(dir.path(), "unip2.json", &m, None);
    let out = bin().args(["steinberg", "--matrix"]).arg(&path).args(["--lambda", "1,1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = single(&out);
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["data"]["centralizer_dim"], 1);
    assert_eq!(r["data"]["regular"], true);
}

#[test]
fn reconstruct_identity_has_zero_alphas() {
    let dir = TempDir::new().unwrap();
    let path = matrix_file(dir.path(), "id3.json", &CMatrix::identity(3), Some("B1"));
    let out = bin().args(["reconstruct", "--borel"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = single(&out);
    for z in r["data"]["q"].as_array().unwrap() {
        assert_eq!((z[0].as_f64().unwrap(), z[1].as_f64().unwrap()), (1.0, 0.0));
    }
    let doc = &r["data"]["quiver"];
    for m in doc["alpha"].as_array().unwrap() {
        for entry in m.as_array().unwrap().iter().flat_map(|row| row.as_array().unwrap()) {
            assert_eq!(entry[0].as_f64().unwrap().abs() + entry[1].as_f64().unwrap().abs(), 0.0);
        }
    }
    // the beta maps stay in standard form: the projection dropping the first coordinate
    for (k, m) in doc["beta"].as_array().unwrap().iter().enumerate() {
        for (i, row) in m.as_array().unwrap().iter().enumerate() {
            for (j, entry) in row.as_array().unwrap().iter().enumerate() {
                let expected = if j == i + 1 { 1.0 } else { 0.0 };
                assert_eq!((entry[0].as_f64().unwrap(), entry[1].as_f64().unwrap()), (expected, 0.0), "beta {k}");
            }
        }
    }
}

#[test]
fn random_is_deterministic() {
    let run = || bin().args(["random", "--n", "4", "--seed", "9"]).output().unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let other = bin().args(["random", "--n", "4", "--seed", "10"]).output().unwrap();
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn missing_file_is_invalid() {
    let dir = TempDir::new().unwrap();
    let out = bin().arg("verify").arg(dir.path().join("absent.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let r = single(&out);
    assert_eq!(r["verdict"], "invalid");
    assert!(r["error"].as_str().unwrap().contains("absent.json"));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_document_is_invalid() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"dims\": [1, 2], \"alpha\": 3}").unwrap();
    let out = bin().arg("verify").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(single(&out)["verdict"], "invalid");
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("verify"));
    assert_eq!(bin().args(["--tol", "-1", "random", "--n", "2", "--seed", "0"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn tolerance_from_environment_and_flag() {
    let dir = TempDir::new().unwrap();
    let path = random_file(dir.path(), 5);
    let strict = bin().env("MQUIVER_TOL", "1e-30").arg("verify").arg(&path).output().unwrap();
    assert_eq!(strict.status.code(), Some(1));
    let r = single(&strict);
    assert_eq!(r["verdict"], "fail");
    assert_eq!(r["tolerances"]["equations"], 1e-30);
    let relaxed = bin().env("MQUIVER_TOL", "1e-30").args(["--tol", "1e-6", "verify"]).arg(&path).output().unwrap();
    assert_eq!(relaxed.status.code(), Some(0));
    assert_eq!(single(&relaxed)["tolerances"]["equations"], 1e-6);
    let garbage = bin().env("MQUIVER_TOL", "tight").arg("verify").arg(&path).output().unwrap();
    assert_eq!(garbage.status.code(), Some(2));
}

#[test]
fn cover_lifts_and_hjs() {
    let dir = TempDir::new().unwrap();
    let y = CMatrix::from_fn(3, 3, |i, j| match (i, j) {
        (0, 0) => cr(1.0),
        (1, 1) => c(0.0, 2.0),
        (2, 2) => c(0.5, 0.5),
        _ if j > i => cr(1.0),
        _ => cr(0.0),
    });
    let path = matrix_file(dir.path(), "b1.json", &y, Some("B1"));
    let out = bin().args(["cover", "--lifts", "--borel"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(single(&out)["data"]["lifts"].as_array().unwrap().len(), 3);

    let out = bin().args(["hjs", "--thetas", "0.4,0.4,-0.8"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = single(&out);
    assert_eq!(r["data"]["collapsed_dims"], serde_json::json!([1, 3]));
    assert_eq!(r["data"]["predicted_dim"], r["data"]["measured_dim"]);
}

#[test]
fn in_process_entry_point_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = mquiver::cli::run(["mquiver", "--tol", "1e-9", "random", "--n", "3", "--seed", "4"], &mut out, &mut err);
    assert_eq!(code, 0);
    let bin_out = bin().args(["--tol", "1e-9", "random", "--n", "3", "--seed", "4"]).output().unwrap();
    assert_eq!(out, bin_out.stdout);
    assert!(err.is_empty());
}
