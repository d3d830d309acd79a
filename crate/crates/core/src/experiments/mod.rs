// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario runner: configuration, sweeps and persistent outputs.

pub mod config;
pub mod output;
pub mod scenarios;
pub mod validation;

use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

pub use config::{parse_config, Scenario, ScenarioConfig};
pub use output::VERSION;
pub use scenarios::{
    DispersiveResult, MagneticResult, QRow, RoundtripResult, SweepResult, SweepRow, TransferResult,
    THERMAL_N_BAR,
};

use crate::error::Result;
use crate::fidelity::{CardinalState, FidelityReport};
use crate::integrator::Trajectory;
use crate::model::SystemParams;
use crate::pulses::PulseSchedule;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "HYBRIDQ_OUTPUT_DIR";

const DEFAULT_OUTPUT_DIR: &str = "hybridq-output";

/// Serializes appends to the run registry.
static REGISTRY: Mutex<()> = Mutex::new(());

/// The config's own directory, else the environment variable, else `hybridq-output`.
pub fn default_output_dir(cfg: &ScenarioConfig) -> PathBuf {
    cfg.output
        .dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

/// What a scenario run produced.
#[derive(Clone, Debug)]
pub struct ScenarioSummary {
    pub scenario: Scenario,
    pub metrics: Vec<(String, f64)>,
    pub files: Vec<PathBuf>,
    pub wall_clock: f64,
}

impl ScenarioSummary {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|(k, _)| k == name)
            .map(|&(_, v)| v)
    }
}

struct Writer<'a> {
    dir: &'a Path,
    scenario: Scenario,
    head: String,
    csv: Vec<PathBuf>,
    other: Vec<PathBuf>,
}

impl Writer<'_> {
    fn trajectory(&mut self, tag: &str, traj: &Trajectory) -> Result<()> {
        let name = format!("{}_trajectory_{tag}.csv", self.scenario);
        self.csv.push(output::write(
            self.dir,
            &name,
            &output::trajectory_csv(&self.head, traj),
        )?);
        Ok(())
    }

    fn table(&mut self, columns: &[String], rows: &[Vec<f64>]) -> Result<()> {
        let name = format!("{}.csv", self.scenario);
        self.csv.push(output::write(
            self.dir,
            &name,
            &output::table_csv(&self.head, columns, rows),
        )?);
        Ok(())
    }

    fn schedule(&mut self, schedule: &PulseSchedule) -> Result<()> {
        let name = format!("{}_schedule.txt", self.scenario);
        let text = format!("{}{}", self.head, schedule.to_text());
        self.other.push(output::write(self.dir, &name, &text)?);
        Ok(())
    }
}

fn report_metrics(prefix: &str, report: &FidelityReport, metrics: &mut Vec<(String, f64)>) {
    for &(c, f) in &report.per_state {
        metrics.push((format!("{prefix}F_{}", c.column()), f));
    }
    metrics.push((format!("{prefix}F_mean"), report.mean));
    metrics.push((format!("{prefix}P_err"), report.error_probability()));
    if let Some(r) = report.linearity_residual {
        metrics.push((format!("{prefix}linearity_residual"), r));
    }
}

fn transfer_runs(w: &mut Writer, report: &FidelityReport) -> Result<()> {
    for c in CardinalState::ALL {
        if let Some(t) = report.run(c) {
            w.trajectory(c.column(), t)?;
        }
    }
    Ok(())
}

/// Runs one scenario and writes its files into `dir`.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    scenario: Scenario,
    dir: &Path,
) -> Result<ScenarioSummary> {
    scenarios::in_scenario(scenario.name(), run_inner(cfg, scenario, dir))
}

fn run_inner(cfg: &ScenarioConfig, scenario: Scenario, dir: &Path) -> Result<ScenarioSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let mut metrics: Vec<(String, f64)> = Vec::new();
    let mut w = Writer {
        dir,
        scenario,
        head: String::new(),
        csv: Vec::new(),
        other: Vec::new(),
    };
    let head = |effective: &SystemParams| output::header(cfg, scenario, effective);
    match scenario {
        Scenario::Fig3ZeroTemp | Scenario::Fig3Thermal => {
            let default = if scenario == Scenario::Fig3Thermal {
                THERMAL_N_BAR
            } else {
                0.0
            };
            let n_bar = cfg.model.n_bar.unwrap_or(default);
            let r = scenarios::run_transfer(cfg, n_bar, scenarios::calibrate(cfg)?)?;
            w.head = head(&r.setup.params);
            transfer_runs(&mut w, &r.report)?;
            w.schedule(&r.setup.schedule)?;
            metrics.push(("n_bar".into(), n_bar));
            metrics.push(("theta_cal".into(), r.report.calibration.theta_cal));
            metrics.push((
                "noiseless_fidelity".into(),
                r.report.calibration.noiseless_fidelity,
            ));
            report_metrics("", &r.report, &mut metrics);
            for col in ["nc", "ni", "nr", "ns"] {
                metrics.push((format!("peak_{col}"), r.peak(col)));
            }
        }
        Scenario::Fig4Sweep => {
            let s = &cfg.sweep;
            let ratios = scenarios::log_grid(s.points, s.ratio_min, s.ratio_max);
            let sweep = scenarios::fidelity_sweep(cfg, &ratios, scenarios::calibrate(cfg)?)?;
            w.head = head(&cfg.transfer_params(0.0));
            let mut columns: Vec<String> = ["T", "kT_over_hbar_omega_c", "n_bar"]
                .map(String::from)
                .to_vec();
            columns.extend(output::fidelity_columns());
            let rows: Vec<Vec<f64>> = sweep.rows.iter().map(|r| r.values()).collect();
            w.table(&columns, &rows)?;
            metrics.push(("points".into(), rows.len() as f64));
            metrics.push((
                "F_mean_coldest".into(),
                sweep.rows.first().map_or(f64::NAN, |r| r.mean),
            ));
            metrics.push((
                "F_mean_hottest".into(),
                sweep.rows.last().map_or(f64::NAN, |r| r.mean),
            ));
            metrics.push(("max_rise".into(), sweep.max_rise()));
        }
        Scenario::QDegradation => {
            let rows = scenarios::q_degradation_study(cfg, scenarios::calibrate(cfg)?)?;
            w.head = head(&cfg.transfer_params(0.0));
            let mut columns: Vec<String> = ["Q", "kappa"].map(String::from).to_vec();
            columns.extend(output::fidelity_columns());
            columns.push("P_err".into());
            w.table(
                &columns,
                &rows.iter().map(|r| r.values()).collect::<Vec<_>>(),
            )?;
            for r in &rows {
                metrics.push((format!("F_mean_Q_{:.3e}", r.quality_factor), r.mean));
            }
        }
        Scenario::DirectMagnetic => {
            let r = scenarios::direct_magnetic(cfg)?;
            w.head = head(&r.params);
            w.trajectory("photon", &r.trajectory)?;
            metrics.push(("tau_sg".into(), r.tau_sg));
            metrics.push(("kappa".into(), r.params.kappa));
            metrics.push(("survival".into(), r.survival));
            metrics.push(("loss_estimate".into(), r.loss_estimate));
        }
        Scenario::DispersiveSwap => {
            let r = scenarios::dispersive_swap(cfg)?;
            w.head = head(&r.params);
            w.trajectory("qubit", &r.trajectory)?;
            let d = &r.derived.dispersive_rates;
            metrics.push(("kappa_eff_estimate".into(), d.kappa_eff));
            metrics.push(("swap_rate_estimate".into(), d.collective_swap_rate));
            metrics.push(("loss_estimate".into(), r.derived.loss_dispersive));
            metrics.push(("delta_s".into(), r.delta_s));
            metrics.push(("swap_rate".into(), r.swap_rate));
            metrics.push(("tau".into(), r.tau));
            metrics.push(("survival".into(), r.survival));
            metrics.push(("loss".into(), 1.0 - r.survival));
        }
        Scenario::Roundtrip => {
            let r = scenarios::roundtrip(cfg)?;
            w.head = head(&cfg.transfer_params(0.0));
            transfer_runs(&mut w, &r.dissipative)?;
            w.schedule(&r.schedule)?;
            metrics.push(("theta_cal".into(), r.calibration.theta_cal));
            report_metrics("noiseless_", &r.noiseless, &mut metrics);
            report_metrics("", &r.dissipative, &mut metrics);
        }
    }
    let wall_clock = start.elapsed().as_secs_f64();
    let summary = output::summary_text(&w.head, &metrics, wall_clock);
    w.other.push(output::write(
        dir,
        &format!("{scenario}_summary.txt"),
        &summary,
    )?);
    let gp = output::gnuplot_script(scenario, &w.csv);
    w.other
        .push(output::write(dir, &format!("{scenario}.gp"), &gp)?);
    append_registry(dir, scenario, &metrics, wall_clock)?;
    let mut files = w.csv;
    files.extend(w.other);
    Ok(ScenarioSummary {
        scenario,
        metrics,
        files,
        wall_clock,
    })
}

fn append_registry(
    dir: &Path,
    scenario: Scenario,
    metrics: &[(String, f64)],
    wall_clock: f64,
) -> Result<()> {
    let _guard = REGISTRY.lock().unwrap_or_else(|e| e.into_inner());
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(dir.join("runs.log"))?;
    let fields: Vec<String> = metrics.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
    writeln!(
        f,
        "hybridq {VERSION} {scenario} wall_clock_s={wall_clock:.3} {}",
        fields.join(" ")
    )?;
    Ok(())
}
