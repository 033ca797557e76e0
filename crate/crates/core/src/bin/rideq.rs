use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rideq::config::MarketConfig;
use rideq::oracle::{check_residuals, ResidualReport, Solution};
use rideq::sweep::{self, Format, SweepTable};
use rideq::{fragmented, integrated, mixed, Error, MarketMetrics};
use serde_json::json;

#[derive(Parser)]
#[command(name = "rideq", version, about = "Ride-sourcing market equilibria with and without platform integration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one market structure and print the solution as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        regime: RegimeArg,
        /// Commission per integrated trip; overrides the config value.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment sweep and write its table.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fleet-scaling steps, or commission grid points.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Common fixed fare of the commission scenarios.
        #[arg(long, default_value_t = 70.0)]
        fare: f64,
    },
    /// Solve every structure and check all defining equations.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    FragmentedNe,
    FragmentedSo,
    IntegratedNe,
    IntegratedSo,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Platforms,
    Fleet,
    Commission,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Plotdata,
}

enum Failure {
    Input(Error),
    Solver(Error),
    Invariant(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Invariant(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Validation { .. } | Error::Io(_) => Failure::Input(e),
            _ => Failure::Solver(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(e) | Failure::Solver(e) => eprintln!("rideq: {e}"),
                Failure::Invariant(m) => eprintln!("rideq: invariant check failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve { config, regime, tau, out } => {
            let config = MarketConfig::load(config)?;
            let tau = tau.unwrap_or(config.tau);
            let (value, report) = solve(&config, regime, tau)?;
            let mut text = serde_json::to_string_pretty(&value).expect("solution serializes");
            text.push('\n');
            match out {
                Some(path) => std::fs::write(path, text).map_err(Error::from)?,
                None => print!("{text}"),
            }
            if !report.pass {
                let worst = report.worst().map_or(String::new(), |r| format!("{} = {:e}", r.name, r.value));
                return Err(Failure::Invariant(worst));
            }
            Ok(())
        }
        Command::Sweep { kind, config, out, steps, format, fare } => {
            let config = MarketConfig::load(config)?;
            std::fs::create_dir_all(&out).map_err(Error::from)?;
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Plotdata => Format::Plotdata,
            };
            let tables: Vec<(&str, SweepTable)> = match kind {
                SweepKind::Platforms => vec![("platforms", sweep::sweep_platform_count(&config, 1..=15))],
                SweepKind::Fleet => vec![("fleet", sweep::sweep_fleet_scaling(&config, steps.unwrap_or(30)))],
                SweepKind::Commission => {
                    let scenarios: Vec<Vec<f64>> = sweep::COMMISSION_SCENARIOS.iter().map(|s| s.to_vec()).collect();
                    let s = sweep::sweep_commission_cli(&config, &scenarios, fare, steps.unwrap_or(200));
                    vec![("commission", s.table), ("commission_thresholds", s.thresholds)]
                }
            };
            let mut failed = Vec::new();
            for (name, table) in &tables {
                write_table(&out, name, table, format)?;
                failed.extend(table.failed_rows().into_iter().map(|r| format!("{name} row {r}")));
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Invariant(failed.join(", ")))
            }
        }
        Command::Verify { config } => {
            let config = MarketConfig::load(config)?;
            let fleets = config.fleets();
            let mut bad = Vec::new();
            let mut solved = 0;
            let mut results = sweep::verify_market(&config.market, &fleets, config.tau);
            if let Some(fares) = config.fares() {
                results.push((
                    "mixed".into(),
                    mixed::solve_mixed(&config.market, &fleets, &fares, config.tau)
                        .map(|eq| check_residuals(Solution::Mixed(&eq), &config.market)),
                ));
            }
            for (name, result) in results {
                match result {
                    Ok(report) => {
                        solved += 1;
                        let status = if report.pass { "ok" } else { "FAIL" };
                        println!("{name:<14} {status:<4} max |residual| = {:.3e}", report.max_abs);
                        if !report.pass {
                            let w = report.worst().expect("failing report has a residual");
                            bad.push(format!("{name}: {} = {:e}", w.name, w.value));
                        }
                    }
                    Err(e) => println!("{name:<14} skip {e}"),
                }
            }
            if solved == 0 {
                return Err(Failure::Solver(Error::NoEquilibrium("no market structure could be solved".into())));
            }
            if bad.is_empty() {
                Ok(())
            } else {
                Err(Failure::Invariant(bad.join("; ")))
            }
        }
    }
}

fn write_table(dir: &Path, name: &str, table: &SweepTable, format: Format) -> Result<(), Failure> {
    let ext = match format {
        Format::Csv => "csv",
        Format::Plotdata => "dat",
    };
    sweep::emit(table, format, dir.join(format!("{name}.{ext}")))?;
    std::fs::write(dir.join(format!("{name}.meta.json")), table.metadata_json()).map_err(Error::from)?;
    Ok(())
}

fn with_metrics<T: serde::Serialize>(eq: &T, m: &MarketMetrics) -> serde_json::Value {
    json!({ "equilibrium": eq, "metrics": m })
}

fn solve(config: &MarketConfig, regime: RegimeArg, tau: f64) -> Result<(serde_json::Value, ResidualReport), Failure> {
    let market = &config.market;
    let fleets = config.fleets();
    Ok(match regime {
        RegimeArg::FragmentedNe => {
            let (eq, m) = fragmented::solve_nash(market, &fleets)?;
            (with_metrics(&eq, &m), check_residuals(Solution::Fragmented(&eq), market))
        }
        RegimeArg::FragmentedSo => {
            let (eq, m) = fragmented::solve_social_optimum(market, &fleets)?;
            (with_metrics(&eq, &m), check_residuals(Solution::Fragmented(&eq), market))
        }
        RegimeArg::IntegratedNe => {
            let (eq, m) = integrated::solve_nash(market, &fleets, tau)?;
            (with_metrics(&eq, &m), check_residuals(Solution::Integrated(&eq), market))
        }
        RegimeArg::IntegratedSo => {
            let (eq, m) = integrated::solve_social_optimum(market, &fleets)?;
            (with_metrics(&eq, &m), check_residuals(Solution::Integrated(&eq), market))
        }
        RegimeArg::Mixed => {
            let fares = config.fares().ok_or_else(|| {
                Failure::Input(Error::Validation {
                    path: "platforms".into(),
                    message: "the mixed regime needs a fare for every platform".into(),
                })
            })?;
            let eq = mixed::solve_mixed(market, &fleets, &fares, tau)?;
            (json!({ "equilibrium": eq }), check_residuals(Solution::Mixed(&eq), market))
        }
    })
}
