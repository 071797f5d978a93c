use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use farezone_cli::config::{Setting, TABLE2};
use farezone_cli::emit::Report;
use farezone_cli::ridership::load_ridership;
use farezone_cli::run::{self, Session};
use farezone_cli::CliError;
use farezone_core::corridor::Stage;
use farezone_core::policy::Regime;

#[derive(Parser)]
#[command(
    name = "farezone",
    version,
    about = "Fare-free transit zone design and switching analysis"
)]
struct Cli {
    /// Scenario file; the bundled baseline when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Suppress the printed summary.
    #[arg(long, global = true)]
    quiet: bool,
    /// Overrides simulation.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Welfare,
    Equity,
}

#[derive(Subcommand)]
enum Command {
    /// Welfare-optimal frequency and zone length, with the searched surface.
    StaticOpt {
        /// 0 for fare-based, 1 for fare-free; both when omitted.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        stage: Option<u8>,
    },
    /// Gini, Lorenz and benefit-index outputs.
    Equity {
        #[arg(long, value_delimiter = ',')]
        fares: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        mu: Option<Vec<f64>>,
    },
    /// Estimate drift and volatility from a monthly ridership CSV.
    Calibrate {
        #[arg(long)]
        ridership: PathBuf,
    },
    /// Simulate demand paths.
    Simulate {
        #[arg(long)]
        months: Option<u64>,
        #[arg(long)]
        paths: Option<u64>,
    },
    /// Entry and exit thresholds with a value-iteration cross-check.
    Thresholds {
        /// Both regimes when omitted.
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        /// Set both switching costs to zero.
        #[arg(long)]
        no_switching_cost: bool,
        /// Skip the value-iteration cross-check.
        #[arg(long)]
        no_dp_check: bool,
    },
    /// Compare switching policies on simulated paths.
    PolicyEval {
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        #[arg(long)]
        months: Option<u64>,
        #[arg(long)]
        paths: Option<u64>,
    },
}

fn regimes(arg: Option<RegimeArg>) -> Vec<Regime> {
    match arg {
        Some(RegimeArg::Welfare) => vec![Regime::Welfare],
        Some(RegimeArg::Equity) => vec![Regime::Equity],
        None => vec![Regime::Welfare, Regime::Equity],
    }
}

fn execute(cli: Cli) -> Result<Report, CliError> {
    let mut session = match &cli.config {
        Some(path) => Session::from_file(path)?,
        None => Session::from_text(TABLE2)?,
    };
    let mut set = |key: &str, v: Option<u64>| match v {
        Some(v) => session.config.set("simulation", key, Setting::Count(v)),
        None => Ok(()),
    };
    set("seed", cli.seed)?;
    if let Command::Simulate { months, paths } | Command::PolicyEval { months, paths, .. } =
        &cli.command
    {
        set("months", *months)?;
        set("paths", *paths)?;
    }
    let report = match cli.command {
        Command::StaticOpt { stage } => {
            let stage = stage.map(|s| {
                if s == 0 {
                    Stage::FareBased
                } else {
                    Stage::FareFree
                }
            });
            run::static_opt(&session, stage)?
        }
        Command::Equity { fares, mu } => run::equity(&session, fares, mu)?,
        Command::Calibrate { ridership } => {
            run::calibrate_series(&session, &load_ridership(&ridership)?)?
        }
        Command::Simulate { .. } => run::simulate(&session)?,
        Command::Thresholds {
            regime,
            no_switching_cost,
            no_dp_check,
        } => run::thresholds(&session, &regimes(regime), no_switching_cost, !no_dp_check)?,
        Command::PolicyEval { regime, .. } => run::policy_eval(&session, &regimes(regime))?,
    };
    report.write(&cli.out)?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    let out = cli.out.clone();
    match execute(cli) {
        Ok(report) => {
            if !quiet {
                print!("{}", report.summary_json());
                eprintln!(
                    "wrote {} files to {}",
                    report.tables.len() + 1,
                    out.display()
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
