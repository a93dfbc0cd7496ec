//! Experiment driver behind the `metamax` binary.
//!
//! Every command is a plain function of an [`ExperimentConfig`] so the same
//! code paths are exercised by the tests. Paths may contain a `{seed}`
//! placeholder; each seed in `seeds` is one run of the protocol (split,
//! fit, evaluate), and summaries report the mean and sample standard
//! deviation across runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::activation::ActivationSet;
use crate::calibrators::{
    Calibrator, DistanceKind, MetaMaxCalibrator, OpenMaxCalibrator, OpenSetCalibrator,
    SoftMaxCalibrator, DEFAULT_ETA, DEFAULT_Q,
};
use crate::data::{
    apply_split, generate_synthetic_split, make_open_split, read_activations, write_activations,
    OpenSplit, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::eval::{
    activation_distance_correlation, evaluate_with, ActivationDistance, EvaluationReport, RocCurve,
    RocTarget, UnknownScore,
};

pub const CALIBRATOR_FORMAT: &str = "metamax-calibrator";
pub const CALIBRATOR_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Softmax,
    Openmax,
    #[default]
    Metamax,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Softmax => "softmax",
            Method::Openmax => "openmax",
            Method::Metamax => "metamax",
        }
    }

    /// Unknown-detection score used when evaluating this head. The softmax
    /// head never puts mass on the unknown slot, so it is ranked by
    /// `1 - max probability` instead.
    pub fn unknown_score(self) -> UnknownScore {
        match self {
            Method::Softmax => UnknownScore::OneMinusMaxKnown,
            _ => UnknownScore::UnknownProbability,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(Method::Softmax),
            "openmax" => Ok(Method::Openmax),
            "metamax" => Ok(Method::Metamax),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train_path: String,
    pub test_path: String,
    /// Defaults to `{output_dir}/{method}/calibrator-seed{seed}.json`.
    pub calibrator_path: Option<String>,
    pub num_total_classes: usize,
    pub num_known: usize,
    pub seeds: Vec<u64>,
    pub method: Method,
    pub q: usize,
    /// Defaults to K.
    pub beta: Option<usize>,
    /// Defaults to K.
    pub alpha: Option<usize>,
    pub eta: usize,
    pub threshold: f64,
    pub distance: DistanceKind,
    pub apply_translation: bool,
    pub output_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train_path: "data/train-{seed}.osav".into(),
            test_path: "data/test-{seed}.osav".into(),
            calibrator_path: None,
            num_total_classes: 10,
            num_known: 6,
            seeds: vec![0],
            method: Method::Metamax,
            q: DEFAULT_Q,
            beta: None,
            alpha: None,
            eta: DEFAULT_ETA,
            threshold: 0.0,
            distance: DistanceKind::Euclidean,
            apply_translation: true,
            output_dir: "out".into(),
        }
    }
}

fn seeded(template: &str, seed: u64) -> PathBuf {
    PathBuf::from(template.replace("{seed}", &seed.to_string()))
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("no seeds given".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidArgument(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if self.num_known < 2 || self.num_known >= self.num_total_classes {
            return Err(Error::InvalidSplit(format!(
                "need 2 <= num_known < num_total_classes, got {} and {}",
                self.num_known, self.num_total_classes
            )));
        }
        Ok(())
    }

    pub fn train_path(&self, seed: u64) -> PathBuf {
        seeded(&self.train_path, seed)
    }

    pub fn test_path(&self, seed: u64) -> PathBuf {
        seeded(&self.test_path, seed)
    }

    pub fn method_dir(&self, method: Method) -> PathBuf {
        Path::new(&self.output_dir).join(method.name())
    }

    pub fn calibrator_path(&self, seed: u64) -> PathBuf {
        match &self.calibrator_path {
            Some(t) => seeded(t, seed),
            None => self
                .method_dir(self.method)
                .join(format!("calibrator-seed{seed}.json")),
        }
    }

    pub fn split(&self, seed: u64) -> Result<OpenSplit> {
        make_open_split(self.num_total_classes, self.num_known, seed)
    }
}

/// Read a file with original labels and relabel it by `split`.
fn load_split_set(path: &Path, split: &OpenSplit) -> Result<ActivationSet> {
    let set = read_activations(path)?;
    if set.num_classes() != split.num_known() {
        return Err(Error::DimensionMismatch {
            expected: split.num_known(),
            actual: set.num_classes(),
        });
    }
    apply_split(&set, split)
}

/// Fit the configured head on an already relabelled training set.
pub fn build_calibrator(config: &ExperimentConfig, train: &ActivationSet) -> Result<Calibrator> {
    let k = train.num_classes();
    Ok(match config.method {
        Method::Softmax => Calibrator::Softmax(SoftMaxCalibrator::new(k, config.threshold)?),
        Method::Openmax => Calibrator::Openmax(
            OpenMaxCalibrator::build(train, config.eta, config.distance)?
                .with_alpha(config.alpha.unwrap_or(k))?,
        ),
        Method::Metamax => Calibrator::Metamax(
            MetaMaxCalibrator::build(train, config.q)?
                .with_beta(config.beta.unwrap_or(k))?
                .with_translation(config.apply_translation),
        ),
    })
}

/// Contents of a calibrator JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratorFile {
    pub format: String,
    pub version: u32,
    /// Seconds since the Unix epoch; the only field that varies between
    /// otherwise identical runs.
    pub created_unix: u64,
    pub seed: u64,
    pub num_classes: usize,
    pub split: OpenSplit,
    pub config: ExperimentConfig,
    pub calibrator: Calibrator,
}

impl CalibratorFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        if file.format != CALIBRATOR_FORMAT || file.version != CALIBRATOR_VERSION {
            return Err(Error::InvalidArgument(format!(
                "{}: not a {CALIBRATOR_FORMAT} v{CALIBRATOR_VERSION} file",
                path.display()
            )));
        }
        if file.calibrator.num_classes() != file.num_classes {
            return Err(Error::DimensionMismatch {
                expected: file.num_classes,
                actual: file.calibrator.num_classes(),
            });
        }
        Ok(file)
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    text.push('\n');
    write_text(path, &text)
}

/// Fit one calibrator per seed and write it to its calibrator path.
pub fn cmd_fit(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let mut written = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let split = config.split(seed)?;
        let train = load_split_set(&config.train_path(seed), &split)?;
        let calibrator = build_calibrator(config, &train)?;
        let file = CalibratorFile {
            format: CALIBRATOR_FORMAT.into(),
            version: CALIBRATOR_VERSION,
            created_unix: now_unix(),
            seed,
            num_classes: train.num_classes(),
            split,
            config: config.clone(),
            calibrator,
        };
        let path = config.calibrator_path(seed);
        write_json(&path, &file)?;
        written.push(path);
    }
    Ok(written)
}

/// Score a relabelled test set.
pub fn score_test_set(calibrator: &Calibrator, test: &ActivationSet) -> Result<EvaluationReport> {
    let outputs = calibrator.predict_set(test)?;
    let method: Method = calibrator.method_name().parse()?;
    evaluate_with(&outputs, test.labels(), method.unknown_score())
}

/// Split, fit and evaluate one seed entirely in memory.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<EvaluationReport> {
    let split = config.split(seed)?;
    let train = load_split_set(&config.train_path(seed), &split)?;
    let test = load_split_set(&config.test_path(seed), &split)?;
    let calibrator = build_calibrator(config, &train)?;
    score_test_set(&calibrator, &test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub auroc_unknown: Option<f64>,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    pub undefined_f1: Vec<usize>,
    pub n_known: usize,
    pub n_unknown: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub method: Method,
    pub per_seed: Vec<SeedMetrics>,
    /// Over the seeds that had unknown test rows.
    pub auroc_unknown: Option<MeanStd>,
    pub macro_f1: MeanStd,
}

impl EvalSummary {
    pub fn from_reports(method: Method, reports: &[(u64, EvaluationReport)]) -> Result<Self> {
        let per_seed: Vec<SeedMetrics> = reports
            .iter()
            .map(|(seed, r)| SeedMetrics {
                seed: *seed,
                auroc_unknown: r.auroc_unknown,
                macro_f1: r.macro_f1,
                per_class_f1: r.per_class_f1.clone(),
                undefined_f1: r.undefined_f1.clone(),
                n_known: r.n_known,
                n_unknown: r.n_unknown,
            })
            .collect();
        let aurocs: Vec<f64> = per_seed.iter().filter_map(|s| s.auroc_unknown).collect();
        let f1s: Vec<f64> = per_seed.iter().map(|s| s.macro_f1).collect();
        Ok(Self {
            method,
            auroc_unknown: MeanStd::of(&aurocs),
            macro_f1: MeanStd::of(&f1s)
                .ok_or_else(|| Error::InvalidArgument("no runs to summarize".into()))?,
            per_seed,
        })
    }
}

fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for ((t, f), p) in curve.thresholds.iter().zip(&curve.fpr).zip(&curve.tpr) {
        let _ = writeln!(out, "{t},{f},{p}");
    }
    out
}

fn confusion_csv(confusion: &[Vec<usize>]) -> String {
    let k = confusion.len() - 1;
    let name = |i: usize| {
        if i == k {
            "unknown".to_string()
        } else {
            i.to_string()
        }
    };
    let mut out = String::from("true\\predicted");
    for c in 0..=k {
        let _ = write!(out, ",{}", name(c));
    }
    out.push('\n');
    for (r, row) in confusion.iter().enumerate() {
        out.push_str(&name(r));
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Evaluate each seed's calibrator file on its test set and write
/// per-seed metrics, ROC curves and confusion matrices, then the summary,
/// then `index.json` listing everything written.
pub fn cmd_eval(config: &ExperimentConfig) -> Result<EvalSummary> {
    config.validate()?;
    let mut reports = Vec::with_capacity(config.seeds.len());
    let mut written = Vec::new();
    let mut method = None;
    for &seed in &config.seeds {
        let file = CalibratorFile::load(config.calibrator_path(seed))?;
        let this_method: Method = file.calibrator.method_name().parse()?;
        if *method.get_or_insert(this_method) != this_method {
            return Err(Error::InvalidArgument(
                "calibrator files mix different methods".into(),
            ));
        }
        let test = read_activations(config.test_path(seed))?;
        if test.num_classes() != file.num_classes {
            return Err(Error::DimensionMismatch {
                expected: file.num_classes,
                actual: test.num_classes(),
            });
        }
        let test = apply_split(&test, &file.split)?;
        let report = score_test_set(&file.calibrator, &test)?;

        let dir = config.method_dir(this_method).join(format!("seed-{seed}"));
        for curve in &report.roc_curves {
            let name = match curve.target {
                RocTarget::Class(c) => format!("roc_class{c}.csv"),
                RocTarget::Unknown => "roc_unknown.csv".into(),
            };
            let path = dir.join(name);
            write_text(&path, &roc_csv(curve))?;
            written.push(path);
        }
        let path = dir.join("confusion.csv");
        write_text(&path, &confusion_csv(&report.confusion))?;
        written.push(path);
        reports.push((seed, report));
        let summary = EvalSummary::from_reports(this_method, &reports[reports.len() - 1..])?;
        let path = dir.join("metrics.json");
        write_json(&path, &summary.per_seed[0])?;
        written.push(path);
    }
    let method = method.expect("at least one seed");
    let summary = EvalSummary::from_reports(method, &reports)?;
    let dir = config.method_dir(method);
    let path = dir.join("metrics.json");
    write_json(&path, &summary)?;
    written.push(path);
    let index: Vec<String> = written
        .iter()
        .map(|p| p.strip_prefix(&dir).unwrap_or(p).display().to_string())
        .collect();
    write_json(&dir.join("index.json"), &index)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: usize,
    pub f1: Option<f64>,
    pub auroc: Option<f64>,
    /// `None` when every seed succeeded, otherwise the first error.
    pub failure: Option<String>,
}

/// Refit and re-evaluate MetaMax for each `q`, averaging over seeds, and
/// write `sweep_q.csv`. Rows whose fit fails are marked failed; the others
/// still complete.
pub fn cmd_sweep_q(config: &ExperimentConfig, q_values: &[usize]) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if config.method != Method::Metamax {
        return Err(Error::InvalidArgument(
            "sweep-q requires method = metamax".into(),
        ));
    }
    let mut rows = Vec::with_capacity(q_values.len());
    for &q in q_values {
        let cfg = ExperimentConfig {
            q,
            ..config.clone()
        };
        let reports: Result<Vec<(u64, EvaluationReport)>> = cfg
            .seeds
            .iter()
            .map(|&seed| run_seed(&cfg, seed).map(|r| (seed, r)))
            .collect();
        rows.push(match reports {
            Ok(reports) => {
                let summary = EvalSummary::from_reports(Method::Metamax, &reports)?;
                SweepRow {
                    q,
                    f1: Some(summary.macro_f1.mean),
                    auroc: summary.auroc_unknown.map(|a| a.mean),
                    failure: None,
                }
            }
            // A missing or unreadable file fails every q alike.
            Err(e) if e.exit_code() == 1 => return Err(e),
            Err(e) => SweepRow {
                q,
                f1: None,
                auroc: None,
                failure: Some(e.to_string()),
            },
        });
    }
    let mut csv = String::from("q,f1,auroc,status\n");
    for row in &rows {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let status = match &row.failure {
            None => "ok".to_string(),
            Some(msg) => format!("\"failed: {}\"", msg.replace('"', "'")),
        };
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            row.q,
            opt(row.f1),
            opt(row.auroc),
            status
        );
    }
    write_text(&Path::new(&config.output_dir).join("sweep_q.csv"), &csv)?;
    Ok(rows)
}

/// Activation-versus-distance pairs for one class of the first seed's
/// training set, written as `scatter_class{target}_probe{probe}.csv`.
pub fn cmd_scatter(
    config: &ExperimentConfig,
    target: usize,
    probe: usize,
) -> Result<(ActivationDistance, PathBuf)> {
    config.validate()?;
    let seed = config.seeds[0];
    let split = config.split(seed)?;
    let train = load_split_set(&config.train_path(seed), &split)?;
    let result = activation_distance_correlation(&train, target, probe)?;
    let mut csv = String::from("activation,distance\n");
    for (a, d) in result.activation.iter().zip(&result.distance) {
        let _ = writeln!(csv, "{a},{d}");
    }
    let path =
        Path::new(&config.output_dir).join(format!("scatter_class{target}_probe{probe}.csv"));
    write_text(&path, &csv)?;
    Ok((result, path))
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    class_names: Vec<String>,
    provenance: &'a str,
    spec: &'a SyntheticSpec,
    split: &'a OpenSplit,
}

/// Generate synthetic train/test files for each seed. Labels are original
/// class ids under the seed's split of `num_known + unknown_count` classes,
/// so `fit`/`eval` with the same seed recover the intended relabelling.
pub fn cmd_synth(
    spec: &SyntheticSpec,
    seeds: &[u64],
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds given".into()));
    }
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let total = spec.num_known + spec.unknown_count;
    let mut written = Vec::new();
    for &seed in seeds {
        let spec = SyntheticSpec {
            seed,
            ..spec.clone()
        };
        let split = make_open_split(total, spec.num_known, seed)?;
        let (train, test) = generate_synthetic_split(&spec, &split)?;
        for (name, set) in [("train", &train), ("test", &test)] {
            let path = out_dir.join(format!("{name}-{seed}.osav"));
            write_activations(set, &path)?;
            let sidecar = Sidecar {
                class_names: (0..total).map(|c| format!("synthetic-{c}")).collect(),
                provenance: "metamax synth",
                spec: &spec,
                split: &split,
            };
            write_json(
                &PathBuf::from(format!("{}.meta.json", path.display())),
                &sidecar,
            )?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Write the split for each seed; optionally relabel an OSAV file with it.
pub fn cmd_split(
    config: &ExperimentConfig,
    relabel: Option<(&Path, &Path)>,
) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let mut written = Vec::new();
    for &seed in &config.seeds {
        let split = config.split(seed)?;
        let path = Path::new(&config.output_dir).join(format!("split-seed{seed}.json"));
        write_json(&path, &split)?;
        written.push(path);
        if let Some((input, output)) = relabel {
            let set = apply_split(&read_activations(input)?, &split)?;
            let output = seeded(&output.display().to_string(), seed);
            create_parent(&output)?;
            write_activations(&set, &output)?;
            written.push(output);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_placeholder() {
        let cfg = ExperimentConfig {
            train_path: "d/train-{seed}.osav".into(),
            output_dir: "o".into(),
            ..Default::default()
        };
        assert_eq!(cfg.train_path(3), PathBuf::from("d/train-3.osav"));
        assert_eq!(
            cfg.calibrator_path(2),
            PathBuf::from("o/metamax/calibrator-seed2.json")
        );
    }

    #[test]
    fn config_json_defaults_and_unknown_fields() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"q": 7, "method": "openmax"}"#).unwrap();
        assert_eq!(cfg.q, 7);
        assert_eq!(cfg.method, Method::Openmax);
        assert_eq!(cfg.eta, DEFAULT_ETA);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"qq": 7}"#).is_err());
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.std, 1.0);
        assert_eq!(MeanStd::of(&[4.0]).unwrap().std, 0.0);
        assert!(MeanStd::of(&[]).is_none());
    }

    #[test]
    fn confusion_csv_layout() {
        let csv = confusion_csv(&[vec![1, 2], vec![0, 3]]);
        assert_eq!(csv, "true\\predicted,0,unknown\n0,1,2\nunknown,0,3\n");
    }
}
