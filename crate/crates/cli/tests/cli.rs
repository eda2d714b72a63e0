use std::path::Path;
use std::process::{Command, Output};

use povmrand::linalg::{C64, ComplexMatrix};
use povmrand::povm::{Povm, read_povm, write_povm};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_povmrand"))
        .args(args)
        .env("RUST_BACKTRACE", "0")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn sample_into(dir: &Path, seed: &str) -> Vec<u8> {
    let out = run(&[
        "sample", "--model", "haar", "-d", "4", "-k", "2", "-n", "3", "--seed", seed, "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(dir.join("povm_0000.json")).unwrap()
}

#[test]
fn sample_is_valid_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let first = sample_into(&tmp.path().join("a"), "7");
    let second = sample_into(&tmp.path().join("b"), "7");
    assert_eq!(first, second);
    let other = sample_into(&tmp.path().join("c"), "8");
    assert_ne!(first, other);
    let p = read_povm(&tmp.path().join("a/povm_0000.json")).unwrap();
    assert_eq!((p.dim(), p.outcomes()), (4, 2));
}

#[test]
fn sample_rejects_dimension_above_kn() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["sample", "-d", "10", "-k", "2", "-n", "3", "--out", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("d <= kn"));
}

#[test]
fn every_subcommand_prints_a_header() {
    let cases: [&[&str]; 4] = [
        &["limit", "-k", "3", "--s-list", "0.2,0.4", "--seed", "5"],
        &["moments", "-d", "3", "-k", "2", "-n", "2", "--trials", "20", "--seed", "5"],
        &["probrange", "--model", "diagonal", "--trials", "5", "--seed", "5"],
        &["experiment", "fig6", "-k", "3", "--grid", "10", "--seed", "5"],
    ];
    for args in cases {
        let out = run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let text = stdout(&out);
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("# povmrand 0.1.0 "), "{first}");
        assert!(first.ends_with("seed=5"), "{first}");
    }
}

#[test]
fn experiment_output_is_byte_stable() {
    let args = ["experiment", "moments", "-d", "4", "-k", "2", "-n", "3", "--trials", "50", "--seed", "3"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("fig5.csv");
    let out = run(&[
        "experiment", "fig5", "-d", "40", "-k", "2", "-n", "40", "--seed", "1", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("kind,bin_center,empirical_density,x,limit_density\n"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("bin,")).count(), 50);
    assert_eq!(csv.lines().filter(|l| l.starts_with("atom,")).count(), 2);
}

#[test]
fn fig7_json_has_dominance() {
    let out = run(&["experiment", "fig7", "--mode", "st", "--grid", "25", "--format", "json"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let rows: serde_json::Value = serde_json::from_str(&body).unwrap();
    for r in rows.as_array().unwrap() {
        if let (Some(n), Some(j)) = (r["noise_bound"].as_f64(), r["jordan_bound"].as_f64()) {
            assert!(j >= n);
        }
    }
}

fn criteria_summary(a: &Povm, b: &Povm) -> serde_json::Value {
    let tmp = tempfile::tempdir().unwrap();
    let (pa, pb) = (tmp.path().join("a.json"), tmp.path().join("b.json"));
    write_povm(a, &pa).unwrap();
    write_povm(b, &pb).unwrap();
    let wdir = tmp.path().join("witness");
    let out = run(&[
        "criteria",
        pa.to_str().unwrap(),
        pb.to_str().unwrap(),
        "--witness-dir",
        wdir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let body: String = text.lines().skip(1).collect::<Vec<_>>().join("\n");
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    for r in v["reports"].as_array().unwrap() {
        if let Some(p) = r["witness_path"].as_str() {
            let joint = read_povm(Path::new(p)).unwrap();
            assert_eq!(joint.outcomes(), a.outcomes() * b.outcomes());
        }
    }
    v
}

#[test]
fn criteria_bundle_summaries() {
    let basis = Povm::computational_basis(2);
    let commuting = Povm::trivial(2, &[0.3, 0.7]).unwrap();
    let v = criteria_summary(&basis, &commuting);
    assert_eq!(v["summary"], "compatible");
    let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    let hadamard = Povm::from_basis(&ComplexMatrix::new(2, 2, vec![h, h, h, -h]).unwrap()).unwrap();
    let v = criteria_summary(&basis, &hadamard);
    assert_eq!(v["summary"], "incompatible");
    assert_eq!(v["reports"].as_array().unwrap().len(), 6);
}
