//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input or usage, 2 on I/O failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::harness::{self, DataSpec, ExperimentKind, ExperimentSpec};
use crate::rfn::{HiddenWeights, RandomFeatureNet, WeightDistributionSpec};
use crate::training::{fit, Method, SgdConfig, StepSize, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "kolmo-rfn", version, about = "Random feature networks for exponential Lévy pricing problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw hidden weights and write them as a model with zero output weights.
    SampleWeights(SampleArgs),
    /// Simulate a labelled dataset from a JSON data config.
    GenData(GenArgs),
    /// Fit output weights on a dataset.
    Train(TrainArgs),
    /// Report the prediction error of a model on a dataset.
    Evaluate(EvalArgs),
    /// Run an experiment: rate-curve, basket-put, oracle-convergence or sgd-vs-ols.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct WeightFlags {
    /// Degrees of freedom of the direction law.
    #[arg(long)]
    nu: Option<f64>,
    /// Degrees of freedom of the bias law.
    #[arg(long)]
    b_dof: Option<f64>,
}

impl WeightFlags {
    fn resolve(&self, base: WeightDistributionSpec) -> Result<WeightDistributionSpec> {
        let spec = WeightDistributionSpec {
            nu: self.nu.unwrap_or(base.nu),
            b_dof: self.b_dof.unwrap_or(base.b_dof),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// JSON weight distribution, e.g. {"nu": 5, "b_dof": 2}.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "n-features", short = 'N')]
    n_features: usize,
    #[arg(long = "dim", short = 'd')]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    weights: WeightFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the sample size.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// JSON train config, e.g. {"method": "constrained", "lambda": 2.0}.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "n-features", short = 'N')]
    n_features: usize,
    #[arg(long, value_parser = ["ols", "constrained", "sgd"])]
    method: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Base step size; `relative:c` means `c / lambda_max(X^T X / n)`.
    #[arg(long)]
    eta0: Option<String>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// Truncate predictions to [-cap, cap].
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    weights: WeightFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    kind: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Report directory; overrides `output_path` in the config.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes") + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_eta0(s: &str) -> Result<StepSize> {
    let bad = || Error::invalid("--eta0", format!("expected a number or relative:<number>, got {s:?}"));
    match s.strip_prefix("relative:") {
        Some(r) => Ok(StepSize::Relative {
            relative: r.trim().parse().map_err(|_| bad())?,
        }),
        None => Ok(StepSize::Fixed(s.trim().parse().map_err(|_| bad())?)),
    }
}

fn train_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = match &args.config {
        Some(p) => read_json::<TrainConfig>(p)?,
        None => TrainConfig::default(),
    };
    if let Some(m) = &args.method {
        cfg.method = match m.as_str() {
            "ols" => Method::Ols,
            "constrained" => Method::Constrained {
                lambda: args.lambda.ok_or_else(|| {
                    Error::invalid("train", "--method constrained needs --lambda <radius>, e.g. --lambda 10")
                })?,
            },
            _ => {
                let lambda = args.lambda.ok_or_else(|| {
                    Error::invalid("train", "--method sgd needs --lambda <radius>, e.g. --lambda 1000")
                })?;
                let steps = args
                    .steps
                    .ok_or_else(|| Error::invalid("train", "--method sgd needs --steps <count>, e.g. --steps 100000"))?;
                Method::Sgd(SgdConfig {
                    lambda,
                    eta0: match &args.eta0 {
                        Some(s) => parse_eta0(s)?,
                        None => StepSize::Relative { relative: 0.5 },
                    },
                    batch: args.batch,
                    steps,
                    seed: args.seed,
                    average: false,
                })
            }
        };
    } else if let Some(l) = args.lambda {
        match &mut cfg.method {
            Method::Constrained { lambda } => *lambda = l,
            Method::Sgd(s) => s.lambda = l,
            Method::Ols => return Err(Error::invalid("train", "--lambda needs --method constrained or sgd")),
        }
    }
    if let Method::Sgd(s) = &mut cfg.method {
        if let Some(e) = &args.eta0 {
            s.eta0 = parse_eta0(e)?;
        }
        if args.batch.is_some() {
            s.batch = args.batch;
        }
        if let Some(t) = args.steps {
            s.steps = t;
        }
    }
    if args.cap.is_some() {
        cfg.cap = args.cap;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    harness::configure_threads()?;
    match cli.command {
        Command::SampleWeights(a) => {
            let base = match &a.config {
                Some(p) => read_json(p)?,
                None => WeightDistributionSpec::default(),
            };
            let spec = a.weights.resolve(base)?;
            let hidden = HiddenWeights::sample(spec, a.n_features, a.dim, a.seed)?;
            write_json(&a.out, &RandomFeatureNet::zeros(hidden).to_document())?;
            println!("{}", json!({"N": a.n_features, "d": a.dim, "seed": a.seed, "out": a.out}));
        }
        Command::GenData(a) => {
            let mut spec: DataSpec = read_json(&a.config)?;
            if let Some(s) = a.seed {
                spec.seed = s;
            }
            if let Some(n) = a.n {
                spec.n = n;
            }
            let ds = spec.generate()?;
            ds.write(&a.out)?;
            println!("{}", serde_json::to_string(&ds.sidecar()).expect("sidecar serializes"));
        }
        Command::Train(a) => {
            let cfg = train_config(&a)?;
            let data = Dataset::read(&a.data)?;
            if data.is_empty() {
                return Err(Error::Empty("training data"));
            }
            let spec = a.weights.resolve(WeightDistributionSpec::default())?;
            let hidden = HiddenWeights::sample(spec, a.n_features, data.dim(), a.seed)?;
            let design = hidden.design_matrix(data.x())?;
            let (w, diag) = fit(&design, data.y(), &cfg)?;
            let net = RandomFeatureNet::new(hidden, w, cfg.cap)?;
            write_json(&a.out, &net.to_document())?;
            println!("{}", json!({"method": cfg.name(), "diagnostics": diag, "out": a.out}));
        }
        Command::Evaluate(a) => {
            let doc = read_json(&a.model)?;
            let net = RandomFeatureNet::from_document(&doc)?;
            let data = Dataset::read(&a.data)?;
            let e = harness::evaluate_model(&net, &data)?;
            println!("{}", json!({"e_hat": e, "n": data.len()}));
        }
        Command::Experiment(a) => {
            let kind = ExperimentKind::parse(&a.kind)?;
            let mut spec = ExperimentSpec::load(&a.config)?;
            if spec.kind != kind {
                return Err(Error::invalid(
                    "experiment",
                    format!("config describes {} but {} was requested", spec.kind.as_str(), kind.as_str()),
                ));
            }
            if let Some(s) = a.seed {
                spec.master_seed = s;
            }
            if let Some(o) = a.output {
                spec.output_path = Some(o);
            }
            if spec.output_path.is_none() {
                spec.output_path = Some(PathBuf::from(format!("{}-report", kind.as_str())));
            }
            let report = harness::run_and_write(&spec)?;
            println!("{}", serde_json::to_string_pretty(&report.summary_json()).expect("summary serializes"));
        }
    }
    Ok(())
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_io() {
        2
    } else {
        1
    }
}

/// Parse `argv`, run the command, and return the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta0_forms() {
        assert_eq!(parse_eta0("0.01").unwrap(), StepSize::Fixed(0.01));
        assert_eq!(parse_eta0("relative:0.5").unwrap(), StepSize::Relative { relative: 0.5 });
        assert!(parse_eta0("fast").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(cli_main(["kolmo-rfn", "--bogus"]), 1);
        assert_eq!(cli_main(["kolmo-rfn", "train", "--data", "x.csv", "-N", "5", "--out", "m.json", "--method", "constrained"]), 1);
        assert_eq!(cli_main(["kolmo-rfn", "--help"]), 0);
    }

    #[test]
    fn missing_config_exits_two() {
        assert_eq!(
            cli_main(["kolmo-rfn", "experiment", "rate-curve", "--config", "/nonexistent/c.json"]),
            2
        );
    }
}
