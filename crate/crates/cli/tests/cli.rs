use std::path::PathBuf;
use std::process::{Command, Output};

use orthotile::ampl::{vandermonde_lambda, write_matrix_csv};
use orthotile::bcfw::{cell_matrix, enumerate_bcfw, random_angles};
use orthotile::verify::trial_rng;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_orthotile"));
    c.env_remove("ORTHOTILE_TOL");
    c
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("orthotile-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn enumerate_counts() {
    for (k, n) in [(3, 1), (4, 2), (5, 5)] {
        let o = bin().args(["enumerate", "--k", &k.to_string()]).output().unwrap();
        assert!(o.status.success());
        assert_eq!(json_of(&o)["count"], n);
    }
}

#[test]
fn invert_round_trip_and_rejection() {
    let dir = scratch("invert");
    let lam_path = dir.join("lambda.csv");
    let o = bin().args(["gen-lambda", "--k", "4", "--kind", "vandermonde", "--out"]).arg(&lam_path).output().unwrap();
    assert!(o.status.success());

    let cells = enumerate_bcfw(4);
    let lam = vandermonde_lambda(4, None).unwrap().entries;
    let c = cell_matrix::<f64>(&cells[0], &random_angles(&mut trial_rng(7, 0), cells[0].angle_count())).unwrap();
    let y_path = dir.join("y.csv");
    write_matrix_csv(&c.mul(&lam).unwrap(), std::fs::File::create(&y_path).unwrap()).unwrap();

    let run = |seq: String, extra: &[&str]| {
        bin().args(["invert", "--seq", &seq, "--lambda"]).arg(&lam_path).arg("--y").arg(&y_path).args(extra).output().unwrap()
    };
    let o = run(cells[0].to_string(), &["--show-solution"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    assert!(v["point"].is_array());
    assert_eq!(v["solution"].as_array().unwrap().len(), 4);

    let o = run(cells[1].to_string(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let v = json_of(&o);
    assert!(v["point"].is_null());
    assert!(v["reason"].is_string());
}

#[test]
fn tiling_report_to_file() {
    let out = scratch("tiling").join("r.json");
    let o = bin().args(["tiling", "--k", "4", "--trials", "50", "--seed", "5", "--out"]).arg(&out).output().unwrap();
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["seed"], 5);
}

#[test]
fn mandelstam_with_lambda_file() {
    let dir = scratch("mandelstam");
    let lam = dir.join("strong.csv");
    assert!(bin().args(["gen-lambda", "--k", "3", "--out"]).arg(&lam).status().unwrap().success());
    let o = bin()
        .args(["mandelstam", "--k", "3", "--trials", "50", "--lambda", "file", "--lambda-file"])
        .arg(&lam)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(json_of(&o)["lambda"], format!("file:{}", lam.display()));
}

#[test]
fn immanant_csv() {
    let o = bin().args(["immanant", "--k", "3"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i,j,pairing,c,trivial"));
    assert!(lines.count() > 0);
}

#[test]
fn fixtures_pass() {
    let o = bin().arg("fixtures").output().unwrap();
    assert!(o.status.success());
    assert_eq!(json_of(&o)["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_input_exits_two() {
    let o = bin().args(["fixtures"]).env("ORTHOTILE_TOL", "width=3").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["tiling", "--k", "4", "--lambda", "file"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tolerance_override_is_applied() {
    let lam = scratch("tol").join("generic.csv");
    std::fs::write(&lam, "1,0,2,-1,3\n0,1,-1,2,1\n2,1,0,1,-2\n-1,3,1,0,1\n1,1,1,1,1\n3,-2,1,0,2\n").unwrap();
    let run = |tol: Option<&str>| {
        let mut c = bin();
        c.args(["immanant", "--k", "3", "--lambda", "file", "--lambda-file"]).arg(&lam);
        if let Some(t) = tol {
            c.env("ORTHOTILE_TOL", t);
        }
        c.output().unwrap().status.code()
    };
    assert_eq!(run(None), Some(1));
    assert_eq!(run(Some("zero=10")), Some(0));
}
