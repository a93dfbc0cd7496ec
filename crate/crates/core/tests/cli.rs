mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use metamax::data::{read_activations, write_activations};
use metamax::ActivationSet;

fn metamax(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metamax"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run metamax")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const PATHS: [&str; 4] = [
    "--train",
    "data/train-{seed}.osav",
    "--test",
    "data/test-{seed}.osav",
];

fn synth(dir: &Path, seeds: &str) {
    let out = metamax(
        dir,
        &["synth", "--out", "data", "--seed", seeds, "--samples", "60"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn with_paths<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(PATHS).collect()
}

#[test]
fn fit_then_eval_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "0,1");
    for method in ["metamax", "openmax", "softmax"] {
        let fit = metamax(
            dir.path(),
            &with_paths(&["fit", "--method", method, "--seed", "0,1"]),
        );
        assert!(fit.status.success());
        let eval = metamax(
            dir.path(),
            &with_paths(&["eval", "--method", method, "--seed", "0,1"]),
        );
        assert!(eval.status.success());
        assert!(stdout(&eval).contains("macro-f1"));
        let base = dir.path().join("out").join(method);
        for f in [
            "metrics.json",
            "index.json",
            "seed-0/roc_unknown.csv",
            "seed-1/confusion.csv",
        ] {
            assert!(base.join(f).is_file(), "{method}: missing {f}");
        }
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(base.join("metrics.json")).unwrap()).unwrap();
        assert_eq!(summary["per_seed"].as_array().unwrap().len(), 2);
        assert!(summary["macro_f1"]["std"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "0");
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"train_path": "data/train-{seed}.osav", "test_path": "data/test-{seed}.osav",
            "method": "openmax", "output_dir": "from-config"}"#,
    )
    .unwrap();
    let out = metamax(
        dir.path(),
        &[
            "fit",
            "--config",
            "cfg.json",
            "--seed",
            "0",
            "--out",
            "from-flag",
        ],
    );
    assert!(out.status.success());
    assert!(dir
        .path()
        .join("from-flag/openmax/calibrator-seed0.json")
        .is_file());
    assert!(!dir.path().join("from-config").exists());
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "0");

    let missing = metamax(dir.path(), &["fit", "--train", "nope-{seed}.osav"]);
    assert_eq!(missing.status.code(), Some(1));

    fs::write(dir.path().join("bad.osav"), b"XXXXjunk").unwrap();
    let corrupt = metamax(dir.path(), &["fit", "--train", "bad.osav"]);
    assert_eq!(corrupt.status.code(), Some(1));

    let wrong_k = metamax(
        dir.path(),
        &with_paths(&["fit", "--seed", "0", "--num-known", "5"]),
    );
    assert_eq!(wrong_k.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&wrong_k.stderr).contains("dimension mismatch"));

    let bad_beta = metamax(
        dir.path(),
        &with_paths(&["fit", "--seed", "0", "--beta", "7"]),
    );
    assert_eq!(bad_beta.status.code(), Some(2));

    let huge_q = metamax(
        dir.path(),
        &with_paths(&["fit", "--seed", "0", "--q", "1000000"]),
    );
    assert_eq!(huge_q.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&huge_q.stderr).contains("class 0"));

    let no_calibrator = metamax(dir.path(), &with_paths(&["eval", "--seed", "0"]));
    assert_eq!(no_calibrator.status.code(), Some(1));
}

#[test]
fn eval_rejects_test_set_of_other_width() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "0");
    assert!(metamax(dir.path(), &with_paths(&["fit", "--seed", "0"]))
        .status
        .success());
    let test = read_activations(dir.path().join("data/test-0.osav")).unwrap();
    let narrow: Vec<f32> = test.rows().flat_map(|r| r[..5].to_vec()).collect();
    let narrow = ActivationSet::new(narrow, test.labels().to_vec(), 5).unwrap();
    write_activations(&narrow, dir.path().join("narrow.osav")).unwrap();
    let out = metamax(
        dir.path(),
        &["eval", "--seed", "0", "--test", "narrow.osav"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_marks_infeasible_q_and_keeps_going() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "0");
    let out = metamax(
        dir.path(),
        &with_paths(&["sweep-q", "--seed", "0", "--values", "5,100000,20"]),
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("out/sweep_q.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "q,f1,auroc,status");
    assert!(lines[1].starts_with("5,") && lines[1].ends_with(",ok"));
    assert!(lines[2].starts_with("100000,,,\"failed: insufficient data"));
    assert!(lines[3].starts_with("20,") && lines[3].ends_with(",ok"));
}

#[test]
fn scatter_and_split_outputs() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "0");
    let out = metamax(
        dir.path(),
        &with_paths(&["scatter", "--seed", "0", "--class", "2"]),
    );
    assert!(out.status.success());
    assert!(stdout(&out).contains("pearson r"));
    let csv = fs::read_to_string(dir.path().join("out/scatter_class2_probe0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 61);

    let out = metamax(
        dir.path(),
        &[
            "split",
            "--seed",
            "0",
            "--input",
            "data/test-0.osav",
            "--output",
            "relabelled-{seed}.osav",
        ],
    );
    assert!(out.status.success());
    let split: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/split-seed0.json")).unwrap())
            .unwrap();
    assert_eq!(split["known_classes"].as_array().unwrap().len(), 6);
    let relabelled = read_activations(dir.path().join("relabelled-0.osav")).unwrap();
    assert!(relabelled.labels().iter().all(|&l| (-1..6).contains(&l)));
    assert_eq!(
        relabelled.labels().iter().filter(|&&l| l == -1).count(),
        4 * 60
    );
}

#[test]
fn synth_is_deterministic_across_invocations() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth(a.path(), "3");
    synth(b.path(), "3");
    for f in ["train-3.osav", "test-3.osav", "train-3.osav.meta.json"] {
        assert_eq!(
            fs::read(a.path().join("data").join(f)).unwrap(),
            fs::read(b.path().join("data").join(f)).unwrap()
        );
    }
}
