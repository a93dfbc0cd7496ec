mod common;

use common::{bench_config, write_benchmark};
use metamax::activation::argmax;
use metamax::data::{apply_split, read_activations};
use metamax::experiment::{
    cmd_eval, cmd_fit, cmd_sweep_q, run_seed, CalibratorFile, Method, CALIBRATOR_FORMAT,
};
use metamax::Error;

#[test]
fn synthetic_benchmark_is_well_posed() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_benchmark(dir.path(), &[0]);
    let cfg = bench_config(&data, dir.path(), Method::Softmax, &[0]);
    let split = cfg.split(0).unwrap();
    let test = apply_split(&read_activations(cfg.test_path(0)).unwrap(), &split).unwrap();
    let (mut known, mut correct) = (0, 0);
    for (row, &l) in test.rows().zip(test.labels()) {
        if l >= 0 {
            known += 1;
            correct += usize::from(argmax(row) == l as usize);
        }
    }
    assert!(correct as f64 / known as f64 > 0.99);
    let auroc = run_seed(&cfg, 0).unwrap().auroc_unknown.unwrap();
    assert!(auroc > 0.5 && auroc < 1.0, "{auroc}");
}

#[test]
fn calibrator_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_benchmark(dir.path(), &[2]);
    for method in [Method::Metamax, Method::Openmax, Method::Softmax] {
        let cfg = bench_config(&data, dir.path(), method, &[2]);
        let paths = cmd_fit(&cfg).unwrap();
        let file = CalibratorFile::load(&paths[0]).unwrap();
        assert_eq!(file.format, CALIBRATOR_FORMAT);
        assert_eq!(file.num_classes, 6);
        assert_eq!(file.split, cfg.split(2).unwrap());
        assert_eq!(file.calibrator.method_name(), method.name());
    }
}

#[test]
fn eval_matches_in_memory_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_benchmark(dir.path(), &[0, 1]);
    let cfg = bench_config(&data, &dir.path().join("out"), Method::Metamax, &[0, 1]);
    cmd_fit(&cfg).unwrap();
    let summary = cmd_eval(&cfg).unwrap();
    for s in &summary.per_seed {
        let direct = run_seed(&cfg, s.seed).unwrap();
        assert_eq!(Some(s.macro_f1), Some(direct.macro_f1));
        assert_eq!(s.auroc_unknown, direct.auroc_unknown);
    }
    let f1s: Vec<f64> = summary.per_seed.iter().map(|s| s.macro_f1).collect();
    let mean = (f1s[0] + f1s[1]) / 2.0;
    assert!((summary.macro_f1.mean - mean).abs() < 1e-15);
    assert!((summary.macro_f1.std - (f1s[0] - f1s[1]).abs() / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn single_q_sweep_matches_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_benchmark(dir.path(), &[0, 1]);
    let mut cfg = bench_config(&data, &dir.path().join("out"), Method::Metamax, &[0, 1]);
    cfg.q = 10;
    cmd_fit(&cfg).unwrap();
    let summary = cmd_eval(&cfg).unwrap();
    let rows = cmd_sweep_q(&cfg, &[10]).unwrap();
    assert_eq!(rows[0].f1, Some(summary.macro_f1.mean));
    assert_eq!(rows[0].auroc, summary.auroc_unknown.map(|a| a.mean));
}

#[test]
fn sweep_needs_metamax() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bench_config(dir.path(), dir.path(), Method::Openmax, &[0]);
    assert!(matches!(
        cmd_sweep_q(&cfg, &[5]),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn mixed_methods_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_benchmark(dir.path(), &[0, 1]);
    let out = dir.path().join("out");
    let mut cfg = bench_config(&data, &out, Method::Metamax, &[0]);
    cfg.calibrator_path = Some(out.join("cal-{seed}.json").display().to_string());
    cmd_fit(&cfg).unwrap();
    cfg.method = Method::Openmax;
    cfg.seeds = vec![1];
    cmd_fit(&cfg).unwrap();
    cfg.seeds = vec![0, 1];
    assert!(matches!(cmd_eval(&cfg), Err(Error::InvalidArgument(_))));
}
