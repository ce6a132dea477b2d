use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use irb_core::data_io::Grade;
use irb_core::{Error, Granularity, KHatMethod, RhoMode};

mod commands;
mod report;

use commands::{Context, MomentOverrides};

#[derive(Debug, Parser)]
#[command(name = "irb-risk", version, about = "Capital add-on for PD/LGD estimation risk in the IRB formula")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse::<T>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Annual rate panel (CSV: year,lgd_rate,pd_all_ratings,pd_speculative).
    /// Without it, capital commands use the reference moments and the
    /// statistical commands a synthetic panel matching them.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Rating universe: ar (all ratings) or sg (speculative grade).
    #[arg(long, global = true, value_parser = parse_with::<Grade>)]
    grade: Option<Grade>,
    /// Confidence level of the capital quantile [default: 0.999].
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Monte Carlo paths per scenario.
    #[arg(long, global = true)]
    nsim: Option<usize>,
    /// Random seed [default: 42].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of obligors, or "asymptotic".
    #[arg(long, global = true, value_parser = parse_with::<Granularity>)]
    obligors: Option<Granularity>,
    /// Asset correlation from the drawn PD (realized) or the mean PD (mean).
    #[arg(long, global = true, value_parser = parse_with::<RhoMode>)]
    rho_mode: Option<RhoMode>,
    /// Redraw simulated LGDs outside [0, 1].
    #[arg(long, global = true)]
    clamp_lgd: bool,
    /// Comma-separated subset of lgd_only,k_only,independent,correlated.
    #[arg(long, global = true)]
    scenarios: Option<String>,
    /// Default-point inversion: quadrature or taylor3.
    #[arg(long, global = true, value_parser = parse_with::<KHatMethod>)]
    k_hat_method: Option<KHatMethod>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Write the report (or Q-Q CSV) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key = value file with run settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for the simulation (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Descriptive statistics of LGD, PD and the default point.
    Describe,
    /// Shapiro-Wilk tests on LGD and k, plus the bivariate composite test.
    Normality,
    /// Pearson correlation of LGD and k with its confidence interval and the OLS fit.
    Correlate,
    /// Normal Q-Q plot data as CSV.
    Qq {
        /// z-score both coordinates so normal data falls on the identity line.
        #[arg(long)]
        standardized: bool,
    },
    /// Capital requirement with parameters taken at their point estimates.
    Naive {
        #[command(flatten)]
        moments: MomentOverrides,
    },
    /// Naive and simulated capital, the scenario add-on table and the excess expected loss.
    Capital {
        #[command(flatten)]
        moments: MomentOverrides,
        /// Also run the other rho mode.
        #[arg(long)]
        both_rho_modes: bool,
        /// Write a histogram of the full-model losses to this CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        bins: usize,
    },
    /// Scenario add-on table.
    Addon {
        #[command(flatten)]
        moments: MomentOverrides,
    },
    /// Every section in one report.
    Report {
        #[command(flatten)]
        moments: MomentOverrides,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Validation(_) | Error::Parse { .. } | Error::Config(_) | Error::SampleSize { .. } => 2,
        Error::Domain { .. }
        | Error::Bracketing(_)
        | Error::Degenerate(_)
        | Error::Infeasible(_)
        | Error::Resource(_) => 3,
        Error::Io(_) => 4,
    }
}

fn run(cli: Cli) -> irb_core::Result<()> {
    let ctx = Context::from_args(&cli.global)?;
    for warning in &ctx.config.warnings {
        eprintln!("warning: {warning}");
    }
    match cli.command {
        Command::Describe => ctx.emit(ctx.describe_report()?),
        Command::Normality => ctx.emit(ctx.normality_report()?),
        Command::Correlate => ctx.emit(ctx.correlation_report()?),
        Command::Qq { standardized } => ctx.write_qq(standardized),
        Command::Naive { moments } => ctx.emit(ctx.naive_report(&moments)?),
        Command::Capital { moments, both_rho_modes, histogram, bins } => {
            let report = ctx.capital_report(&moments, both_rho_modes)?;
            if let Some(path) = histogram {
                ctx.write_histogram(&moments, &path, bins)?;
            }
            ctx.emit(report)
        }
        Command::Addon { moments } => ctx.emit(ctx.addon_report(&moments)?),
        Command::Report { moments } => ctx.emit(ctx.full_report(&moments)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
