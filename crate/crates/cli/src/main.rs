//! `repmix` — replication analysis with mixture priors from the command
//! line: posterior summaries, Bayes factor tables, tipping points, and
//! plot-ready density grids.

mod commands;
mod config;
mod dataset;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{render, GridOptions, GridTarget};
use config::{
    default_tau2, pooling_from_flags, AnalysisConfig, OutputFormat, WeightMode,
};
use error::CliError;
use repmix_core::study::DatasetFormat;

#[derive(Parser)]
#[command(
    name = "repmix",
    version,
    about = "Replication analysis with mixture priors",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior summaries per replication: mixture components, median, HPDI
    Analyze(AnalyzeArgs),
    /// Bayes factor tables for the mixture weight and the effect size
    Bf(BfArgs),
    /// Reverse-Bayes tipping point of the mixture weight, with the HPDI trace
    Tipping(TippingArgs),
    /// Density grids for plotting (effect, weight, or joint posterior)
    Grid(GridArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Dataset path (CSV or JSON); `-` reads standard input
    dataset: String,
    /// Dataset format; inferred from the file extension when omitted
    #[arg(long, value_enum)]
    input_format: Option<InputFormat>,
    /// Vague-component mean
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Vague-component variance (default 2; REPMIX_DEFAULT_TAU2 overrides)
    #[arg(long)]
    tau2: Option<f64>,
    /// Credibility level for HPDIs
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Analyze only the pooled replication
    #[arg(long, conflicts_with_all = ["per_rep", "both"])]
    pooled: bool,
    /// Analyze each replication separately, no pooled row
    #[arg(long = "per-rep", conflicts_with = "both")]
    per_rep: bool,
    /// Each replication plus the pooled row (the default)
    #[arg(long)]
    both: bool,
    /// Round the pooled summary to two decimals before analysis
    #[arg(long = "round-pooled")]
    round_pooled: bool,
    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Write output to this path instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum InputFormat {
    Csv,
    Json,
}

impl CommonArgs {
    fn config(&self, weight_mode: Option<WeightMode>) -> Result<AnalysisConfig, CliError> {
        let tau2 = match self.tau2 {
            Some(flag) => flag,
            None => default_tau2()?,
        };
        let config = AnalysisConfig {
            mu: self.mu,
            tau2,
            level: self.level,
            pooling: pooling_from_flags(self.pooled, self.per_rep, self.both),
            round_pooled: self.round_pooled,
            weight_mode,
        };
        config.validate()?;
        Ok(config)
    }

    fn load_dataset(&self) -> Result<repmix_core::ReplicationSet, CliError> {
        let format = self.input_format.map(|f| match f {
            InputFormat::Csv => DatasetFormat::Csv,
            InputFormat::Json => DatasetFormat::Json,
        });
        Ok(dataset::load(&self.dataset, format)?)
    }

    fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write {
                path: path.display().to_string(),
                source,
            }),
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                // broken pipes (e.g. `| head`) are not an error
                let _ = lock.write_all(text.as_bytes());
                let _ = lock.flush();
                Ok(())
            }
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Fixed mixture weight on the original-study component (default 0.5)
    #[arg(long, conflicts_with_all = ["beta_weight", "empirical_bayes"])]
    weight: Option<f64>,
    /// Put a Beta(eta, nu) prior on the weight instead of fixing it
    #[arg(long = "beta-weight", conflicts_with = "empirical_bayes")]
    beta_weight: bool,
    /// Use the empirical Bayes weight per replication
    #[arg(long = "empirical-bayes")]
    empirical_bayes: bool,
    /// Beta shape eta for --beta-weight
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Beta shape nu for --beta-weight
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Collapse a disjoint HPDI to its convex hull (warns when it happens)
    #[arg(long = "force-interval")]
    force_interval: bool,
}

#[derive(Args)]
struct BfArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Beta shape nu of the Beta(1, nu) discounting hypothesis in the weight test
    #[arg(long = "nu-dc", default_value_t = 2.0)]
    nu_dc: f64,
    /// Beta shape eta of the weight prior in the effect-size test
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Beta shape nu of the weight prior in the effect-size test
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
}

#[derive(Args)]
struct TippingArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Effect-size threshold whose HPDI exclusion defines the tipping point
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    /// Collapse a disjoint HPDI to its convex hull (warns when it happens)
    #[arg(long = "force-interval")]
    force_interval: bool,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which density grid to emit
    #[arg(long, value_enum, default_value_t = GridTarget::EffectPosterior)]
    target: GridTarget,
    /// Fixed weight for effect-posterior curves; repeatable
    /// (default: 0, 0.25, 0.5, 0.75, 1)
    #[arg(long = "weight")]
    weights: Vec<f64>,
    /// Beta shape eta of the weight prior (weight/joint targets)
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Beta shape nu of the weight prior (weight/joint targets)
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Lower bound of the effect axis (derived from the data when omitted)
    #[arg(long = "theta-min")]
    theta_min: Option<f64>,
    /// Upper bound of the effect axis
    #[arg(long = "theta-max")]
    theta_max: Option<f64>,
    /// Number of effect-axis points
    #[arg(long = "theta-points", default_value_t = 201)]
    theta_points: usize,
    /// Number of weight-axis points
    #[arg(long = "omega-points", default_value_t = 101)]
    omega_points: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => {
            let weight_mode = if args.empirical_bayes {
                WeightMode::EmpiricalBayes
            } else if args.beta_weight {
                WeightMode::Beta {
                    eta: args.eta,
                    nu: args.nu,
                }
            } else {
                WeightMode::Fixed(args.weight.unwrap_or(0.5))
            };
            let config = args.common.config(Some(weight_mode))?;
            let set = args.common.load_dataset()?;
            let report = commands::run_analyze(&config, &set, args.force_interval)?;
            let text = render(
                &report,
                args.common.format,
                commands::AnalyzeReport::to_table,
                commands::AnalyzeReport::to_csv,
            )?;
            args.common.emit(&text)
        }
        Command::Bf(args) => {
            if !(args.nu_dc > 0.0 && args.eta > 0.0 && args.nu > 0.0) {
                return Err(CliError::Config(config::ConfigError::Invalid {
                    field: "--nu-dc/--eta/--nu".into(),
                    message: "Beta shape parameters must be positive".into(),
                }));
            }
            let config = args.common.config(None)?;
            let set = args.common.load_dataset()?;
            let report = commands::run_bf(&config, &set, args.nu_dc, args.eta, args.nu)?;
            let text = render(
                &report,
                args.common.format,
                commands::BfReport::to_table,
                commands::BfReport::to_csv,
            )?;
            args.common.emit(&text)
        }
        Command::Tipping(args) => {
            let config = args.common.config(None)?;
            let set = args.common.load_dataset()?;
            let report = commands::run_tipping(&config, &set, args.threshold, args.force_interval)?;
            let text = render(
                &report,
                args.common.format,
                commands::TippingReport::to_table,
                commands::TippingReport::to_csv,
            )?;
            args.common.emit(&text)
        }
        Command::Grid(args) => {
            let config = args.common.config(None)?;
            let set = args.common.load_dataset()?;
            let options = GridOptions {
                target: args.target,
                weights: args.weights.clone(),
                eta: args.eta,
                nu: args.nu,
                theta_min: args.theta_min,
                theta_max: args.theta_max,
                theta_points: args.theta_points,
                omega_points: args.omega_points,
            };
            let report = commands::run_grid(&config, &set, &options)?;
            let text = render(
                &report,
                args.common.format,
                commands::GridReport::to_table,
                commands::GridReport::to_csv,
            )?;
            args.common.emit(&text)
        }
    }
}
