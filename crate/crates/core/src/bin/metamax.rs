use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use metamax::data::SyntheticSpec;
use metamax::experiment::{self, ExperimentConfig, Method};
use metamax::{DistanceKind, Result};

#[derive(Parser)]
#[command(
    name = "metamax",
    version,
    about = "Open-set recalibration of classifier activations"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags override the config file, which overrides built-in defaults.
#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated seeds, e.g. 0,1,2,3,4.
    #[arg(long, global = true, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    method: Option<Method>,
    #[arg(long, global = true)]
    q: Option<usize>,
    #[arg(long, global = true)]
    beta: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<usize>,
    #[arg(long, global = true)]
    eta: Option<usize>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// euclidean, cosine or euclidean_cosine_blend.
    #[arg(long, global = true)]
    distance: Option<DistanceKind>,
    /// Fit MetaMax tails without translation.
    #[arg(long, global = true)]
    no_translation: bool,
    /// Training OSAV file; `{seed}` is replaced per seed.
    #[arg(long, global = true)]
    train: Option<String>,
    /// Test OSAV file; `{seed}` is replaced per seed.
    #[arg(long, global = true)]
    test: Option<String>,
    #[arg(long, global = true)]
    num_total: Option<usize>,
    #[arg(long, global = true)]
    num_known: Option<usize>,
    /// Calibrator JSON path; `{seed}` is replaced per seed.
    #[arg(long, global = true)]
    calibrator: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic train/test activation files.
    Synth {
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        unknown_count: usize,
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 15.0)]
        unknown_offset: f64,
    },
    /// Write the known/unknown class split for each seed.
    Split {
        /// Relabel this OSAV file with the split.
        #[arg(long, requires = "output")]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit a calibrator per seed.
    Fit,
    /// Evaluate fitted calibrators and write metrics.
    Eval,
    /// Refit and evaluate MetaMax over a range of tail sizes.
    SweepQ {
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30,40,50")]
        values: Vec<usize>,
    },
    /// Activation-versus-distance pairs for one class.
    Scatter {
        #[arg(long)]
        class: usize,
        /// Activation index to read; defaults to the first other class.
        #[arg(long)]
        probe: Option<usize>,
    },
}

fn config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &common.seed {
        cfg.seeds = v.clone();
    }
    if let Some(v) = &common.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = common.method {
        cfg.method = v;
    }
    if let Some(v) = common.q {
        cfg.q = v;
    }
    if common.beta.is_some() {
        cfg.beta = common.beta;
    }
    if common.alpha.is_some() {
        cfg.alpha = common.alpha;
    }
    if let Some(v) = common.eta {
        cfg.eta = v;
    }
    if let Some(v) = common.threshold {
        cfg.threshold = v;
    }
    if let Some(v) = common.distance {
        cfg.distance = v;
    }
    if common.no_translation {
        cfg.apply_translation = false;
    }
    if let Some(v) = &common.train {
        cfg.train_path = v.clone();
    }
    if let Some(v) = &common.test {
        cfg.test_path = v.clone();
    }
    if let Some(v) = common.num_total {
        cfg.num_total_classes = v;
    }
    if let Some(v) = common.num_known {
        cfg.num_known = v;
    }
    if common.calibrator.is_some() {
        cfg.calibrator_path = common.calibrator.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config(&cli.common)?;
    match cli.command {
        Command::Synth {
            samples,
            unknown_count,
            separation,
            sigma,
            unknown_offset,
        } => {
            let spec = SyntheticSpec {
                num_known: cfg.num_known,
                samples_per_class: samples,
                class_separation: separation,
                noise_sigma: sigma,
                unknown_count,
                unknown_offset,
                seed: 0,
            };
            for path in experiment::cmd_synth(&spec, &cfg.seeds, &cfg.output_dir)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Split { input, output } => {
            let relabel = input.as_deref().zip(output.as_deref());
            for path in experiment::cmd_split(&cfg, relabel)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Fit => {
            for path in experiment::cmd_fit(&cfg)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Eval => {
            let summary = experiment::cmd_eval(&cfg)?;
            for s in &summary.per_seed {
                let auroc = s.auroc_unknown.map_or("n/a".into(), |a| format!("{a:.4}"));
                println!("seed {}: auroc {auroc}  macro-f1 {:.4}", s.seed, s.macro_f1);
            }
            if let Some(a) = summary.auroc_unknown {
                println!("auroc    {:.4} +- {:.4}", a.mean, a.std);
            }
            println!(
                "macro-f1 {:.4} +- {:.4}",
                summary.macro_f1.mean, summary.macro_f1.std
            );
        }
        Command::SweepQ { values } => {
            for row in experiment::cmd_sweep_q(&cfg, &values)? {
                match (&row.failure, row.f1) {
                    (Some(msg), _) => println!("q {:>4}: failed: {msg}", row.q),
                    (None, f1) => {
                        let fmt = |v: Option<f64>| v.map_or("n/a".into(), |a| format!("{a:.4}"));
                        println!(
                            "q {:>4}: auroc {}  macro-f1 {}",
                            row.q,
                            fmt(row.auroc),
                            fmt(f1)
                        );
                    }
                }
            }
        }
        Command::Scatter { class, probe } => {
            let probe = probe.unwrap_or(if class == 0 { 1 } else { 0 });
            let (result, path) = experiment::cmd_scatter(&cfg, class, probe)?;
            println!(
                "pearson r = {:.4} ({} rows)",
                result.correlation,
                result.activation.len()
            );
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
