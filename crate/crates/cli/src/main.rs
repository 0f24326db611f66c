//! `etaflow`: runs the eta-invariant routes of an experiment configuration and
//! writes a JSON report with CSV side tables.

mod config;
mod output;
mod run;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{ConfigError, Experiment, RouteName};
use sweep::Parameter;

#[derive(Parser)]
#[command(name = "etaflow", version, about = "Eta invariants, holonomy and Toeplitz indices on flat model manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "etaflow-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured routes and compare the holonomy they produce.
    Run {
        #[command(flatten)]
        common: Common,
        /// Comma-separated routes overriding the configuration.
        #[arg(long, value_delimiter = ',')]
        routes: Option<Vec<String>>,
        /// Also check spectral flow on ten seeded synthetic families.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-run the eta routes while varying one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        parameter: Parameter,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        routes: Option<Vec<String>>,
    },
    /// Toeplitz index against the odd Chern pairing.
    Toeplitz {
        #[command(flatten)]
        common: Common,
    },
    /// Smoothing sweep comparing the invariant with the conjugated-boundary operator.
    Conjecture {
        #[command(flatten)]
        common: Common,
    },
}

const CONFIG_ERROR: u8 = 1;
const ROUTE_ERROR: u8 = 2;

fn parse_routes(names: &[String]) -> Result<Vec<RouteName>, ConfigError> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            RouteName::parse(n).ok_or_else(|| ConfigError {
                field: format!("--routes[{i}]"),
                message: format!(
                    "unknown route `{n}`; expected thm34, cylinder, mapping-torus, toeplitz or conjecture"
                ),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct SweepReport<'a> {
    schema: &'static str,
    command: String,
    config: &'a config::ExperimentConfig,
    parameter: Parameter,
    values: &'a [f64],
    rows: &'a [sweep::SweepRow],
}

fn execute(cli: Cli, command_line: String) -> Result<bool, ExitCode> {
    let config_error = |e: ConfigError| {
        eprintln!("configuration error: {e}");
        ExitCode::from(CONFIG_ERROR)
    };
    let io_error = |e: anyhow::Error| {
        eprintln!("error: {e:#}");
        ExitCode::from(ROUTE_ERROR)
    };
    let (common, routes, seed) = match cli.command {
        Command::Run { common, routes, seed } => {
            let routes = routes.map(|r| parse_routes(&r)).transpose().map_err(config_error)?;
            (common, routes, seed)
        }
        Command::Toeplitz { common } => (common, Some(vec![RouteName::Toeplitz]), None),
        Command::Conjecture { common } => (common, Some(vec![RouteName::Conjecture]), None),
        Command::Sweep { common, parameter, values, routes } => {
            let routes = routes.map(|r| parse_routes(&r)).transpose().map_err(config_error)?;
            let e = Experiment::load(&common.config, routes).map_err(config_error)?;
            let rows = sweep::sweep(&e, parameter, &values).map_err(config_error)?;
            std::fs::create_dir_all(&common.out).map_err(|e| io_error(e.into()))?;
            output::write_rows(&common.out.join("sweep.csv"), &rows).map_err(io_error)?;
            let report = SweepReport {
                schema: run::SCHEMA_VERSION,
                command: command_line,
                config: &e.config,
                parameter,
                values: &values,
                rows: &rows,
            };
            output::write_json(&common.out.join("sweep.json"), &report).map_err(io_error)?;
            for r in &rows {
                match (r.eta_bar, &r.failure) {
                    (Some(v), _) => {
                        println!("{:>8} {:<14} η̄ = {v:.6}  ±{:.1e}", r.value, r.route, r.error_estimate.unwrap_or(0.0))
                    }
                    (None, Some(f)) => println!("{:>8} {:<14} failed: {f}", r.value, r.route),
                    _ => {}
                }
            }
            return Ok(rows.iter().all(|r| r.failure.is_none()));
        }
    };
    let e = Experiment::load(&common.config, routes).map_err(config_error)?;
    let report = run::run(&e, &command_line, seed);
    output::write_run(&common.out, &report).map_err(io_error)?;
    summarize(&report);
    Ok(report.succeeded())
}

fn summarize(report: &run::RunReport) {
    for (name, route) in &report.routes {
        match route {
            run::RouteReport::ProductFormula { value, .. }
            | run::RouteReport::Cylinder { value, .. }
            | run::RouteReport::MappingTorus { value, .. } => println!(
                "{name:<14} η̄ = {:.6}  ±{:.1e}  τ = {:.6}{:+.6}i",
                value.eta_bar, value.error_estimate, value.tau.re, value.tau.im
            ),
            run::RouteReport::Toeplitz { report } => println!(
                "{name:<14} index {}  pairing {:.6}  (kernel {}, cokernel {})",
                report.spectral_index, report.pairing_value, report.kernel, report.cokernel
            ),
            run::RouteReport::Conjecture { report } => println!(
                "{name:<14} invariant {:.6}  drift {:.2e}  difference mod 1 {}",
                report.invariant,
                report.drift,
                report.difference_mod_one.map(|d| format!("{d:.6}")).unwrap_or_else(|| "n/a".into())
            ),
        }
    }
    if let Some(h) = &report.holonomy {
        println!(
            "holonomy       τ = {:.6}{:+.6}i  {}",
            h.tau.re,
            h.tau.im,
            if h.agreed { "routes agree" } else { "ROUTES DISAGREE" }
        );
    }
    for f in &report.failures {
        eprintln!("route {} failed: {}", f.route, f.message);
    }
}

fn main() -> ExitCode {
    let command_line = std::env::args().collect::<Vec<_>>().join(" ");
    match execute(Cli::parse(), command_line) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(ROUTE_ERROR),
        Err(code) => code,
    }
}
