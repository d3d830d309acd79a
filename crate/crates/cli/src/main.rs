// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! `hybridq`: run transfer scenarios, print derived parameters, run the property suite.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybridq_core::experiments::{self, validation, Scenario, ScenarioConfig, THERMAL_N_BAR};
use hybridq_core::params::derive;
use hybridq_core::Error;

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INTEGRATION: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "hybridq",
    version,
    about = "Qubit to atomic-ensemble state transfer simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines, dotted keys).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set model.n_bar=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write CSV, summary and gnuplot files.
    Simulate {
        /// fig3_zero_temp, fig3_thermal, fig4_sweep, direct_magnetic,
        /// dispersive_swap, roundtrip or q_degradation.
        scenario: String,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory. Defaults to `output.dir`, then $HYBRIDQ_OUTPUT_DIR.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Print the derived parameter table.
    Params {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also write the table as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Run the invariant and convergence suite.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Occupation of the thermal invariant run.
        #[arg(long, default_value_t = THERMAL_N_BAR)]
        thermal_n_bar: f64,
    },
}

fn load(args: &ConfigArgs) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::ConfigSyntax {
                line: 0,
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            experiments::parse_config(&text)?
        }
        None => ScenarioConfig::default(),
    };
    for assignment in &args.overrides {
        cfg.apply_override(assignment)?;
    }
    Ok(cfg)
}

fn simulate(scenario: &str, args: &ConfigArgs, out: Option<PathBuf>) -> Result<(), Error> {
    let scenario: Scenario = scenario.parse()?;
    let cfg = load(args)?;
    let dir = out.unwrap_or_else(|| experiments::default_output_dir(&cfg));
    let summary = experiments::run_scenario(&cfg, scenario, &dir)?;
    for (k, v) in &summary.metrics {
        println!("{k:<28} {v:.6e}");
    }
    println!("{:<28} {:.2} s", "wall_clock", summary.wall_clock);
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn params(args: &ConfigArgs, csv: Option<PathBuf>) -> Result<(), Error> {
    let cfg = load(args)?;
    let rows = derive(&cfg.chain_inputs())?.table();
    println!(
        "{:<24} {:>14} {:<8} {:<24} reference",
        "name", "value", "unit", "display"
    );
    for r in &rows {
        println!(
            "{:<24} {:>14.6e} {:<8} {:<24} {}",
            r.name, r.value, r.unit, r.display, r.reference
        );
    }
    if let Some(path) = csv {
        let mut text = format!(
            "# hybridq {}\nname,value,unit,display,reference\n",
            experiments::VERSION
        );
        for r in &rows {
            let _ = writeln!(
                text,
                "{},{:e},{},\"{}\",\"{}\"",
                r.name, r.value, r.unit, r.display, r.reference
            );
        }
        fs::write(&path, text)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn validate(args: &ConfigArgs, thermal_n_bar: f64) -> Result<bool, Error> {
    let cfg = load(args)?;
    let checks = validation::run_suite(&cfg, thermal_n_bar)?;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<52} {:.3e} ({})", c.name, c.value, c.bound);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_INTEGRATION
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate {
            scenario,
            config,
            out,
        } => simulate(&scenario, &config, out).map(|_| true),
        Command::Params { config, csv } => params(&config, csv).map(|_| true),
        Command::Validate {
            config,
            thermal_n_bar,
        } => validate(&config, thermal_n_bar),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECKS_FAILED),
        Err(e) => exit_for(&e),
    }
}
