use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lcdr_cli::config::{read_settings, Settings};
use lcdr_cli::{run_degrade, run_enhance, run_eval, run_synth, ExperimentConfig, Result, SynthConfig};
use log::{error, info};

#[derive(Parser)]
#[command(name = "lcdr", version, about = "Label enhancement from logical labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover label distributions. Distribution input is degraded first and
    /// the recovery is scored against it.
    Enhance(Box<EnhanceArgs>),
    /// Threshold a distribution dataset into logical labels.
    Degrade {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to 1/q.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score predicted distributions against the truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also print the intersection similarity.
        #[arg(long)]
        intersection: bool,
    },
    /// Generate a synthetic distribution dataset.
    Synth {
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        d: usize,
        #[arg(long, default_value_t = 5)]
        q: usize,
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

/// Every flag is a config key; values given here override `--config`.
#[derive(Args)]
struct EnhanceArgs {
    /// Flat `key = value` file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    /// Degradation threshold for distribution input (default 1/q).
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Gaussian bandwidth, or `auto` for the mean k-th neighbor distance.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    d_prime: Option<String>,
    #[arg(long)]
    qp_tol: Option<String>,
    #[arg(long)]
    qp_max_iter: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    momentum: Option<String>,
    #[arg(long)]
    weight_decay: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    converge_tol: Option<String>,
    #[arg(long)]
    init_scale: Option<String>,
    /// `raw` or `reduced`.
    #[arg(long)]
    features: Option<String>,
    /// `logical` or `confidence`.
    #[arg(long)]
    targets: Option<String>,
    #[arg(long)]
    out_dist: Option<String>,
    #[arg(long)]
    out_metrics: Option<String>,
    /// CSV of the reduced features and the training targets.
    #[arg(long)]
    out_augmented: Option<String>,
    #[arg(long)]
    out_model: Option<String>,
    #[arg(long)]
    intersection: bool,
}

impl EnhanceArgs {
    fn settings(self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(path) => read_settings(path)?,
            None => Settings::new(),
        };
        let flags = [
            ("input", self.input),
            ("threshold", self.threshold),
            ("k", self.k),
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("d-prime", self.d_prime),
            ("qp-tol", self.qp_tol),
            ("qp-max-iter", self.qp_max_iter),
            ("beta", self.beta),
            ("seed", self.seed),
            ("learning-rate", self.learning_rate),
            ("momentum", self.momentum),
            ("weight-decay", self.weight_decay),
            ("batch-size", self.batch_size),
            ("epochs", self.epochs),
            ("converge-tol", self.converge_tol),
            ("init-scale", self.init_scale),
            ("features", self.features),
            ("targets", self.targets),
            ("out-dist", self.out_dist),
            ("out-metrics", self.out_metrics),
            ("out-augmented", self.out_augmented),
            ("out-model", self.out_model),
            ("intersection", self.intersection.then(|| "true".to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.insert(key.to_string(), v);
            }
        }
        Ok(s)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Enhance(args) => {
            let cfg = ExperimentConfig::from_settings(&args.settings()?)?;
            run_enhance(&cfg)?;
            info!("wrote {}", cfg.out_dist.display());
        }
        Command::Degrade {
            input,
            threshold,
            output,
        } => run_degrade(&input, threshold, &output)?,
        Command::Eval {
            pred,
            truth,
            output,
            intersection,
        } => {
            let r = run_eval(&pred, &truth, output.as_deref())?;
            println!("{}", r.table_line(intersection));
        }
        Command::Synth {
            n,
            d,
            q,
            noise,
            seed,
            output,
        } => {
            run_synth(&SynthConfig { n, d, q, noise, seed }, &output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
