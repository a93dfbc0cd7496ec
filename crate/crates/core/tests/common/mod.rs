#![allow(dead_code)]

use std::path::{Path, PathBuf};

use metamax::data::SyntheticSpec;
use metamax::experiment::{cmd_synth, ExperimentConfig, Method};
use metamax::rng::SplitMix64;

pub const BENCH_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Inverse-CDF draws from a two-parameter Weibull.
pub fn weibull_draws(kappa: f64, lambda: f64, n: usize, rng: &mut SplitMix64) -> Vec<f64> {
    (0..n)
        .map(|_| lambda * (-rng.unit_open0().ln()).powf(1.0 / kappa))
        .collect()
}

/// Coarse-to-fine log-space grid search of the two-parameter Weibull
/// log-likelihood. Returns `(ll, kappa, lambda)` at the best grid point.
pub fn grid_oracle(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let sum_log: f64 = logs.iter().sum();
    let ll = |k: f64, l: f64| {
        let ln_l = l.ln();
        n * k.ln() - n * k * ln_l + (k - 1.0) * sum_log
            - logs.iter().map(|lx| (k * (lx - ln_l)).exp()).sum::<f64>()
    };
    let (mut ck, mut cl) = (0.0f64, sum_log / n);
    let (mut wk, mut wl) = (5.0f64, 5.0f64);
    let mut best = (f64::NEG_INFINITY, 1.0, 1.0);
    for _ in 0..14 {
        for i in 0..=20 {
            for j in 0..=20 {
                let k = (ck + wk * (i as f64 / 10.0 - 1.0)).exp();
                let l = (cl + wl * (j as f64 / 10.0 - 1.0)).exp();
                let v = ll(k, l);
                if v > best.0 {
                    best = (v, k, l);
                }
            }
        }
        ck = best.1.ln();
        cl = best.2.ln();
        wk *= 0.3;
        wl *= 0.3;
    }
    best
}

/// Counts `P(score_pos > score_neg) + 0.5 * P(tie)` over all pairs.
pub fn pair_count_auroc(scores: &[f64], positives: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !positives[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positives[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// The default synthetic benchmark (6 known classes, 4 unknown clusters)
/// written for `seeds` under `dir`.
pub fn write_benchmark(dir: &Path, seeds: &[u64]) -> PathBuf {
    let data = dir.join("data");
    cmd_synth(&SyntheticSpec::default(), seeds, &data).expect("synthetic benchmark");
    data
}

pub fn bench_config(data: &Path, out: &Path, method: Method, seeds: &[u64]) -> ExperimentConfig {
    ExperimentConfig {
        train_path: data.join("train-{seed}.osav").display().to_string(),
        test_path: data.join("test-{seed}.osav").display().to_string(),
        num_total_classes: 10,
        num_known: 6,
        seeds: seeds.to_vec(),
        method,
        output_dir: out.display().to_string(),
        ..Default::default()
    }
}
