//! Command line front end for the conformal biharmonicity toolkit.
//!
//! Every subcommand reads one optional TOML config, evaluates a fixed
//! experiment, and prints a flat key/value report to stdout. Reports are
//! byte-identical across runs of the same config; timing goes to stderr.
//! Exit codes: 0 all checks passed, 1 a check failed, 2 configuration
//! error, 3 runtime error.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{CliError, Settings};
use report::RunReport;

#[derive(Parser)]
#[command(name = "bitension", version, about = "Biharmonicity experiments for conformal metric changes")]
struct Cli {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for report (and CSV) files, created if missing.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write CSV tables into --out.
    #[arg(long, global = true)]
    csv: bool,
    /// Echoed into the report; reserved for future randomized sweeps.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Sweep the biharmonicity obstructions over a grid.
    Residual,
    /// Solve the slope quadratics of the closed solution families.
    Ansatz,
    /// Integrate the reduced profile equation.
    Ode,
    /// Run the isoparametric checkers on a named function.
    Isoparam,
    /// Verify the one-directional biharmonicity of the log exponent.
    #[command(name = "counterexample-41a")]
    Counterexample41a,
    /// Compare a lifted product projection with the base identity.
    Submersion,
    /// Run every experiment in a fixed order.
    All,
}

type CmdFn = fn(&Settings, &mut RunReport) -> Result<(), CliError>;

fn command_table(cmd: Cmd) -> Vec<(&'static str, CmdFn)> {
    match cmd {
        Cmd::Residual => vec![("residual", run::residual::run as CmdFn)],
        Cmd::Ansatz => vec![("ansatz", run::ansatz::run as CmdFn)],
        Cmd::Ode => vec![("ode", run::ode::run as CmdFn)],
        Cmd::Isoparam => vec![("isoparam", run::isoparam::run as CmdFn)],
        Cmd::Counterexample41a => {
            vec![("counterexample-41a", run::counterexample::run as CmdFn)]
        }
        Cmd::Submersion => vec![("submersion", run::submersion::run as CmdFn)],
        Cmd::All => vec![
            ("residual", run::residual::run as CmdFn),
            ("ansatz", run::ansatz::run as CmdFn),
            ("ode", run::ode::run as CmdFn),
            ("isoparam", run::isoparam::run as CmdFn),
            ("counterexample-41a", run::counterexample::run as CmdFn),
            ("submersion", run::submersion::run as CmdFn),
        ],
    }
}

fn execute(cli: &Cli) -> Result<Vec<RunReport>, CliError> {
    if cli.csv && cli.out.is_none() {
        return Err(CliError::config("--csv needs --out to name a directory"));
    }
    let settings = config::load(cli.config.as_deref())?;
    let table = command_table(cli.command);
    if let Some(pinned) = &settings.experiment {
        let matches_single = table.len() == 1 && table[0].0 == pinned.as_str();
        if !matches_single {
            return Err(CliError::Config(format!(
                "config pins experiment '{pinned}' but this invocation runs {}",
                table
                    .iter()
                    .map(|(n, _)| *n)
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
    }
    let mut reports = Vec::new();
    for (name, f) in table {
        let mut r = RunReport::new(name, cli.seed);
        f(&settings, &mut r)?;
        reports.push(r);
    }
    Ok(reports)
}

fn write_outputs(dir: &PathBuf, reports: &[RunReport], csv: bool) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for r in reports {
        std::fs::write(dir.join(format!("{}.report", r.experiment())), r.render())?;
        if csv {
            if let Some(table) = r.csv() {
                std::fs::write(dir.join(format!("{}.csv", r.experiment())), table.render())?;
            }
        }
    }
    Ok(())
}

fn main() {
    let started = Instant::now();
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(reports) => {
            let mut text = String::new();
            for r in &reports {
                text.push_str(&r.render());
            }
            print!("{text}");
            let io = match &cli.out {
                Some(dir) => write_outputs(dir, &reports, cli.csv),
                None => Ok(()),
            };
            match io {
                Ok(()) => {
                    if reports.iter().any(RunReport::failed) {
                        1
                    } else {
                        0
                    }
                }
                Err(e) => {
                    eprintln!("runtime error: cannot write outputs: {e}");
                    3
                }
            }
        }
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            2
        }
        Err(e @ CliError::Runtime(_)) => {
            eprintln!("{e}");
            3
        }
    };
    eprintln!("elapsed_ms = {}", started.elapsed().as_millis());
    std::process::exit(code);
}
