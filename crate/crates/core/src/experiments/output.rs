// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Plain-text outputs: commented headers, CSV tables and a gnuplot script.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::fidelity::CardinalState;
use crate::integrator::Trajectory;
use crate::model::SystemParams;

use super::config::{Scenario, ScenarioConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TRAJECTORY_COLUMNS: [&str; 8] = ["t", "pq", "nc", "ni", "nr", "ns", "trace", "purity"];

/// Comment block with version, scenario, resolved config and effective parameters.
pub fn header(cfg: &ScenarioConfig, scenario: Scenario, effective: &SystemParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# hybridq {VERSION}");
    let _ = writeln!(out, "# scenario = {scenario}");
    let _ = writeln!(out, "# --- resolved configuration ---");
    for line in cfg.to_text().lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "# --- effective model parameters (rad/s) ---");
    let p = effective;
    for (k, v) in [
        ("eta_qc", p.eta_qc),
        ("eta_ac", p.eta_ac),
        ("omega_gi", p.omega_gi),
        ("omega_rs", p.omega_rs),
        ("delta_qc", p.delta_qc),
        ("delta_ig", p.delta_ig),
        ("delta_ri", p.delta_ri),
        ("delta_ac", p.delta_ac),
        ("delta_s", p.delta_s),
        ("n_atoms", p.n_atoms),
        ("kappa", p.kappa),
        ("n_bar", p.n_bar),
        ("gamma_1", p.gamma_1),
        ("gamma_phi", p.gamma_phi),
        ("gamma_r", p.gamma_r),
        ("gamma_s", p.gamma_s),
    ] {
        let _ = writeln!(out, "# effective.{k} = {v:e}");
    }
    out
}

pub fn trajectory_csv(head: &str, traj: &Trajectory) -> String {
    let mut out = String::from(head);
    out.push_str(&TRAJECTORY_COLUMNS.join(","));
    out.push('\n');
    for k in 0..traj.len() {
        let row = [
            traj.times[k],
            traj.pq[k],
            traj.nc[k],
            traj.ni[k],
            traj.nr[k],
            traj.ns[k],
            traj.trace[k],
            traj.purity[k],
        ];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Fidelity columns in cardinal order: F_0, F_1, F_plus, F_minus, F_plus_i, F_minus_i, F_mean.
pub fn fidelity_columns() -> Vec<String> {
    CardinalState::ALL
        .iter()
        .map(|c| format!("F_{}", c.column()))
        .chain(["F_mean".to_string()])
        .collect()
}

/// Generic numeric table.
pub fn table_csv(head: &str, columns: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = String::from(head);
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn summary_text(head: &str, metrics: &[(String, f64)], wall_clock: f64) -> String {
    let mut out = String::from(head);
    for (k, v) in metrics {
        let _ = writeln!(out, "{k} = {v:e}");
    }
    let _ = writeln!(out, "wall_clock_s = {wall_clock:.3}");
    out
}

/// Plot commands for every CSV written by one scenario.
pub fn gnuplot_script(scenario: Scenario, csv_files: &[PathBuf]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# hybridq {VERSION}: gnuplot -p {scenario}.gp");
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set datafile commentschars '#'");
    let _ = writeln!(out, "set key autotitle columnhead");
    for f in csv_files {
        let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let _ = writeln!(out, "set title '{name}'");
        if name.contains("trajectory") {
            let _ = writeln!(out, "set xlabel 't (s)'");
            let _ = writeln!(out, "plot for [col=2:6] '{name}' using 1:col with lines");
        } else if name.starts_with("fig4") {
            let _ = writeln!(out, "set xlabel 'k_BT / hbar omega_c'");
            let _ = writeln!(
                out,
                "plot for [col=4:10] '{name}' using 2:col with linespoints"
            );
        } else if name.starts_with("q_degradation") {
            let _ = writeln!(out, "set xlabel 'Q'");
            let _ = writeln!(out, "set logscale x");
            let _ = writeln!(
                out,
                "plot for [col=3:9] '{name}' using 1:col with linespoints"
            );
            let _ = writeln!(out, "unset logscale x");
        }
        let _ = writeln!(out, "pause -1");
    }
    out
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}
