//! `incomplete-infer`: specification tests, confidence regions, censored-mean
//! bounds and transport diagnostics for incomplete structural models.

mod data;
mod error;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use incomplete_core::correspondence::{FiniteCorrespondence, IntervalCorrespondence};
use incomplete_core::inference::{
    censored_mean_bounds, confidence_region, entry_game_model, specification_test, ParamGrid, TestOptions,
};
use incomplete_core::measure::{DiscreteMeasure, LatentLaw, Sample};
use incomplete_core::model::{FiniteModel, IntervalModel, StructuralModel};
use incomplete_core::setclass::{BandwidthRule, SetFamily};
use incomplete_core::statistic::QuantileMethod;
use incomplete_core::transport::{dual_statistic_bruteforce, feasible_coupling, MAX_BRUTEFORCE_CARRIER};

use data::{ingest_sample, Format};
use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "incomplete-infer", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Test the model at one parameter value.
    Test {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        inference: InferenceArgs,
    },
    /// Invert the test over a parameter grid.
    Region {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        inference: InferenceArgs,
        /// Axes as name=start:stop:step, comma separated.
        #[arg(long)]
        grid: String,
    },
    /// Bounds on the mean of bracketed data.
    Bounds {
        /// One bracket center per row.
        #[arg(long)]
        data: PathBuf,
        /// Bracket width.
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.95)]
        alpha: f64,
    },
    /// Zero-one transport between P and ν on a finite model.
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        /// Weights of P, comma separated (alternative to --data).
        #[arg(long, conflicts_with = "data")]
        p: Option<String>,
        /// Sample whose empirical law is P.
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Serialize)]
struct ModelArgs {
    /// entry-game, finite:PATH or interval:PATH.
    #[arg(long)]
    model: String,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    /// Latent law: comma-separated weights for finite models,
    /// uniform:LO:HI or power:PHI for interval models.
    #[arg(long)]
    nu: Option<String>,
}

#[derive(Args, Clone)]
struct InferenceArgs {
    /// CSV sample, one observation per row.
    #[arg(long)]
    data: PathBuf,
    /// powerset, cells, rectangles or unions:K.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    /// bridge or subsample.
    #[arg(long, default_value = "bridge")]
    quantile: String,
    /// Bridge replications.
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long)]
    subsample_size: Option<usize>,
    #[arg(long, default_value_t = 500)]
    subsample_count: usize,
    #[arg(long, default_value_t = 0.5)]
    bandwidth_c: f64,
    #[arg(long, default_value_t = 0.25)]
    bandwidth_gamma: f64,
    /// Fixed bandwidth, overriding c·n^(−γ).
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, env = "INCOMPLETE_INFER_SEED", default_value_t = 0)]
    seed: u64,
}

/// A model source named on the command line, with its files loaded.
enum ModelSource {
    EntryGame,
    Finite(FiniteCorrespondence),
    Interval(IntervalCorrespondence),
}

impl ModelSource {
    fn load(spec: &str) -> Result<Self> {
        let read = |path: &str| {
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read model file {path}: {e}")))
        };
        match spec.split_once(':') {
            None if spec == "entry-game" => Ok(ModelSource::EntryGame),
            Some(("finite", path)) => Ok(ModelSource::Finite(FiniteCorrespondence::from_json(&read(path)?)?)),
            Some(("interval", path)) => Ok(ModelSource::Interval(IntervalCorrespondence::from_json(&read(path)?)?)),
            _ => Err(CliError::Config(format!(
                "unknown model '{spec}'; expected entry-game, finite:PATH or interval:PATH"
            ))),
        }
    }

    fn default_family(&self) -> SetFamily {
        match self {
            ModelSource::EntryGame => SetFamily::PowerSet,
            ModelSource::Finite(c) if c.y_len() <= MAX_BRUTEFORCE_CARRIER => SetFamily::PowerSet,
            ModelSource::Finite(_) | ModelSource::Interval(_) => SetFamily::Cells,
        }
    }

    fn data_format(&self) -> Format<'_> {
        match self {
            ModelSource::EntryGame => Format::Binary,
            ModelSource::Finite(c) => Format::Atoms(c.y_labels()),
            ModelSource::Interval(_) => Format::Real,
        }
    }
}

fn required(value: Option<f64>, flag: &str) -> Result<f64> {
    value.ok_or_else(|| CliError::Config(format!("--{flag} is required for this model")))
}

fn parse_weights(text: &str, flag: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|w| w.trim().parse::<f64>().map_err(|_| CliError::Config(format!("--{flag}: '{w}' is not a number"))))
        .collect()
}

fn parse_law(text: &str) -> Result<LatentLaw> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| CliError::Config(format!("--nu: '{s}' is not a number")));
    Ok(match parts[..] {
        ["uniform", lo, hi] => LatentLaw::uniform(num(lo)?, num(hi)?)?,
        ["power", phi] => LatentLaw::power(num(phi)?)?,
        _ => return Err(CliError::Config(format!("--nu '{text}' is not uniform:LO:HI or power:PHI"))),
    })
}

fn finite_nu(corr: &FiniteCorrespondence, args: &ModelArgs) -> Result<DiscreteMeasure> {
    let text = args.nu.as_deref().ok_or_else(|| CliError::Config("--nu is required for finite models".into()))?;
    DiscreteMeasure::with_labels(corr.u_labels().to_vec(), parse_weights(text, "nu")?)
        .map_err(|e| CliError::Config(e.to_string()))
}

/// The model at `(λ, φ)` (entry game) or the fixed model from a file.
fn build_model(
    source: &ModelSource,
    args: &ModelArgs,
    lambda: Option<f64>,
    phi: Option<f64>,
) -> Result<Box<dyn StructuralModel>> {
    Ok(match source {
        ModelSource::EntryGame => Box::new(entry_game_model(required(lambda, "lambda")?, required(phi, "phi")?)?),
        ModelSource::Finite(corr) => Box::new(FiniteModel::new(corr.clone(), finite_nu(corr, args)?)?),
        ModelSource::Interval(corr) => {
            let text =
                args.nu.as_deref().ok_or_else(|| CliError::Config("--nu is required for interval models".into()))?;
            Box::new(IntervalModel::new(corr.clone(), parse_law(text)?))
        }
    })
}

fn test_options(source: &ModelSource, args: &InferenceArgs) -> Result<TestOptions> {
    let family = match &args.family {
        Some(f) => f.parse()?,
        None => source.default_family(),
    };
    Ok(TestOptions {
        family,
        alpha: args.alpha,
        method: args.quantile.parse::<QuantileMethod>()?,
        reps: args.reps,
        bandwidth: BandwidthRule { c: args.bandwidth_c, gamma: args.bandwidth_gamma },
        bandwidth_override: args.bandwidth,
        subsample_size: args.subsample_size,
        subsample_count: args.subsample_count,
        seed: args.seed,
    })
}

fn run(cli: &Cli) -> Result<serde_json::Value> {
    Ok(match &cli.command {
        Command::Test { model, inference } => {
            let source = ModelSource::load(&model.model)?;
            let options = test_options(&source, inference)?;
            let m = build_model(&source, model, model.lambda, model.phi)?;
            let sample = ingest_sample(&inference.data, source.data_format())?;
            let report = specification_test(&sample, m.as_ref(), &options)?;
            json!({
                "config": { "command": "test", "model": model, "data": inference.data, "options": options, "threads": cli.threads },
                "report": report,
            })
        }
        Command::Region { model, inference, grid } => {
            let source = ModelSource::load(&model.model)?;
            let options = test_options(&source, inference)?;
            let grid = ParamGrid::parse(grid)?;
            let lambda_axis = grid.index_of("lambda").ok();
            let phi_axis = grid.index_of("phi").ok();
            if let Some(other) = grid.names().iter().find(|n| !matches!(n.as_str(), "lambda" | "phi")) {
                return Err(CliError::Config(format!("grid axis '{other}' is not a model parameter (lambda, phi)")));
            }
            if !matches!(source, ModelSource::EntryGame) {
                return Err(CliError::Config("region needs a parametric model (entry-game)".into()));
            }
            // check fixed parameters before reading data
            let pick = |axis: Option<usize>, fixed: Option<f64>, theta: &[f64]| axis.map(|i| theta[i]).or(fixed);
            build_model(
                &source,
                model,
                pick(lambda_axis, model.lambda, &grid.point(0)),
                pick(phi_axis, model.phi, &grid.point(0)),
            )?;
            let sample = ingest_sample(&inference.data, source.data_format())?;
            let report = confidence_region(
                &sample,
                |theta| {
                    build_model(
                        &source,
                        model,
                        pick(lambda_axis, model.lambda, theta),
                        pick(phi_axis, model.phi, theta),
                    )
                    .map_err(|e| match e {
                        CliError::Core(c) => c,
                        other => incomplete_core::Error::Config(other.to_string()),
                    })
                },
                &grid,
                &options,
            )?;
            json!({
                "config": { "command": "region", "model": model, "data": inference.data, "grid": grid, "options": options, "threads": cli.threads },
                "report": report,
            })
        }
        Command::Bounds { data, delta, alpha } => {
            if delta.is_nan() || *delta <= 0.0 {
                return Err(CliError::Config(format!("--delta {delta} must be positive")));
            }
            let sample = ingest_sample(data, Format::Real)?;
            let report = censored_mean_bounds(&sample, *delta, *alpha)?;
            json!({
                "config": { "command": "bounds", "data": data, "delta": delta, "alpha": alpha, "threads": cli.threads },
                "report": report,
            })
        }
        Command::Oracle { model, p, data } => {
            let ModelSource::Finite(corr) = ModelSource::load(&model.model)? else {
                return Err(CliError::Config("oracle needs a finite model (finite:PATH)".into()));
            };
            let nu = finite_nu(&corr, model)?;
            let p_measure = match (p, data) {
                (Some(text), _) => DiscreteMeasure::with_labels(corr.y_labels().to_vec(), parse_weights(text, "p")?)
                    .map_err(|e| CliError::Config(e.to_string()))?,
                (None, Some(path)) => {
                    let sample: Sample = ingest_sample(path, Format::Atoms(corr.y_labels()))?;
                    sample.empirical(corr.y_len())?
                }
                (None, None) => return Err(CliError::Config("oracle needs --p or --data".into())),
            };
            let coupling = feasible_coupling(&p_measure, &nu, &corr)?;
            let dual = if corr.y_len() <= MAX_BRUTEFORCE_CARRIER {
                let (value, witness) = dual_statistic_bruteforce(&p_measure, &nu, &corr)?;
                Some(json!({ "value": value, "witness": witness }))
            } else {
                None
            };
            json!({
                "config": { "command": "oracle", "model": model, "p": p, "data": data, "threads": cli.threads },
                "report": { "coupling": coupling, "feasible": coupling.is_feasible(), "dual": dual },
            })
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("configuration error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    }
    let value = match run(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let text = serde_json::to_string_pretty(&value).expect("reports serialize") + "\n";
    let written = match &cli.output {
        Some(path) => fs::write(path, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(3)
        }
    }
}
