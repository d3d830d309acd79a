// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance bands. Each criterion prints one PASS/FAIL line
//! straight to stderr so the verdicts survive output capture.

use std::f64::consts::PI;
use std::io::Write as _;
use std::sync::OnceLock;

use hybridq_core::experiments::scenarios::{calibrate, fidelity_sweep, q_point};
use hybridq_core::experiments::{
    run_scenario, validation, Scenario, ScenarioConfig, ScenarioSummary, THERMAL_N_BAR,
};
use hybridq_core::params::{derive, temperature_for_ratio, thermal_occupation};

const TWO_PI: f64 = 2.0 * PI;
const LIGHT_SPEED: f64 = 299_792_458.0;

/// Sweep ratios for the temperature criterion; the n̄ = 0.5 point comes from the thermal run.
const SWEEP_RATIOS: [f64; 6] = [0.05, 0.1, 0.2, 0.4, 0.6, 1.0];

fn verdict(criterion: u32, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {criterion} {tag}: {detail}");
}

fn run(scenario: Scenario) -> ScenarioSummary {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&ScenarioConfig::default(), scenario, dir.path()).unwrap()
}

fn thermal() -> &'static ScenarioSummary {
    static CELL: OnceLock<ScenarioSummary> = OnceLock::new();
    CELL.get_or_init(|| run(Scenario::Fig3Thermal))
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn criterion_1_zero_temperature_transfer() {
    let s = run(Scenario::Fig3ZeroTemp);
    let p_err = s.metric("P_err").unwrap();
    let passed = p_err <= 0.05 && s.wall_clock < 120.0;
    verdict(
        1,
        passed,
        &format!(
            "P_err = {p_err:.4} (<= 0.05), runtime {:.1} s (< 120 s)",
            s.wall_clock
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_2_thermal_transfer() {
    let s = thermal();
    let p_err = s.metric("P_err").unwrap();
    let (nc, nr) = (s.metric("peak_nc").unwrap(), s.metric("peak_nr").unwrap());
    let passed = (0.25..=0.35).contains(&p_err) && nc > 1.0 && nr > 1.0;
    verdict(
        2,
        passed,
        &format!("n_bar = {THERMAL_N_BAR}: P_err = {p_err:.4} (in [0.25, 0.35]), peak nc = {nc:.3}, peak nr = {nr:.3} (> 1)"),
    );
    assert!(passed);
}

#[test]
fn criterion_3_fidelity_against_temperature() {
    let cfg = ScenarioConfig::default();
    let sweep = fidelity_sweep(&cfg, &SWEEP_RATIOS, calibrate(&cfg).unwrap()).unwrap();
    let hot_mean = thermal().metric("F_mean").unwrap();
    let omega_c = derive(&cfg.chain_inputs()).unwrap().omega_c.value;
    let hot_ratio = 1.0 / (1.0 + 1.0 / THERMAL_N_BAR).ln();
    assert!(
        (thermal_occupation(omega_c, temperature_for_ratio(omega_c, hot_ratio)) - THERMAL_N_BAR)
            .abs()
            < 1e-12
    );
    let mut curve: Vec<(f64, f64)> = sweep.rows.iter().map(|r| (r.ratio, r.mean)).collect();
    curve.push((hot_ratio, hot_mean));
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cold_min = curve
        .iter()
        .filter(|(r, _)| *r <= 0.2)
        .map(|&(_, f)| f)
        .fold(1.0, f64::min);
    let max_rise = curve
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    let hot_err = 1.0 - hot_mean;
    let passed = cold_min >= 0.97 && max_rise <= 0.0 && (0.25..=0.35).contains(&hot_err);
    let points: Vec<String> = curve
        .iter()
        .map(|(r, f)| format!("{r:.3}:{f:.4}"))
        .collect();
    verdict(
        3,
        passed,
        &format!(
            "min F_mean at kT/hw <= 0.2 = {cold_min:.4} (>= 0.97), largest rise {max_rise:.2e} (<= 0), \
             1 - F_mean(n_bar = 0.5) = {hot_err:.4} (in [0.25, 0.35]); curve {}",
            points.join(" ")
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_4_parameter_chain() {
    let cfg = ScenarioConfig::default();
    let d = derive(&cfg.chain_inputs()).unwrap();
    let g = &cfg.cavity;
    let omega_c_closed = PI * g.mode_index as f64 * LIGHT_SPEED / (g.length * g.epsilon_r.sqrt());
    let ratio_0p2 =
        thermal_occupation(d.omega_c.value, temperature_for_ratio(d.omega_c.value, 0.2));
    let checks = [
        ("omega_ri", rel(d.omega_ri.value, TWO_PI * 12.2e9) <= 0.02),
        ("omega_c", rel(d.omega_c.value, omega_c_closed) <= 0.01),
        ("vacuum_field", rel(d.vacuum_field.value, 0.54) <= 0.10),
        ("eta_ac", rel(d.eta_ac.value, TWO_PI * 3.85e6) <= 0.03),
        ("n_bar(0.2)", (0.006..=0.008).contains(&ratio_0p2)),
        ("tau_gr", rel(d.tau_gr, 0.65e-6) <= 0.02),
        ("tau_rs", rel(d.tau_rs, 1.0e-6) <= 1e-12),
    ];
    let passed = checks.iter().all(|&(_, ok)| ok);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    verdict(
        4,
        passed,
        &format!(
            "omega_ri = 2pi x {:.4} GHz, omega_c = 2pi x {:.4} GHz (closed form {:.4}), field = {:.4} V/m, \
             eta_ac = 2pi x {:.4} MHz, n_bar(0.2) = {ratio_0p2:.5}, tau_gr = {:.4} us, tau_rs = {:.6} us; failed {failed:?}",
            d.omega_ri.value / TWO_PI / 1e9,
            d.omega_c.value / TWO_PI / 1e9,
            omega_c_closed / TWO_PI / 1e9,
            d.vacuum_field.value,
            d.eta_ac.value / TWO_PI / 1e6,
            d.tau_gr * 1e6,
            d.tau_rs * 1e6,
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_5_direct_magnetic_swap() {
    let s = run(Scenario::DirectMagnetic);
    let (tau, survival, kappa) = (
        s.metric("tau_sg").unwrap(),
        s.metric("survival").unwrap(),
        s.metric("kappa").unwrap(),
    );
    let tau_closed = PI / (2.0 * TWO_PI * 20e3);
    let passed = rel(tau, tau_closed) <= 1e-12
        && rel(kappa, 1.0 / 20e-6) <= 1e-12
        && (0.45..=0.60).contains(&survival);
    verdict(
        5,
        passed,
        &format!(
            "tau_sg = {:.4} us (12.5), survival = {survival:.4} (in [0.45, 0.60])",
            tau * 1e6
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_6_dispersive_estimate() {
    let d = derive(&ScenarioConfig::default().chain_inputs()).unwrap();
    let r = &d.dispersive_rates;
    let passed = rel(r.kappa_eff, TWO_PI * 100.0) <= 0.30
        && rel(r.collective_swap_rate, TWO_PI * 2e3) <= 0.20
        && (d.loss_dispersive - 0.08).abs() <= 0.02;
    let sim = run(Scenario::DispersiveSwap);
    verdict(
        6,
        passed,
        &format!(
            "kappa_eff = 2pi x {:.1} Hz (100 +- 30%), swap rate = 2pi x {:.1} Hz (2000 +- 20%), P_loss = {:.4} (0.08 +- 0.02); \
             simulated loss {:.4}",
            r.kappa_eff / TWO_PI,
            r.collective_swap_rate / TWO_PI,
            d.loss_dispersive,
            sim.metric("loss").unwrap()
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_7_quality_factor_reduction() {
    let cfg = ScenarioConfig::default();
    let q = cfg.cavity.quality_factor / 10.0;
    let row = q_point(&cfg, q, calibrate(&cfg).unwrap()).unwrap();
    let passed = (0.65..=0.85).contains(&row.mean);
    verdict(
        7,
        passed,
        &format!("Q = {q:.1e}: F_mean = {:.4} (in [0.65, 0.85])", row.mean),
    );
    assert!(passed);
}

#[test]
fn criterion_8_property_suite() {
    let cfg = ScenarioConfig::default();
    let checks = validation::run_suite(&cfg, THERMAL_N_BAR).unwrap();
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} = {:.3e}", c.name, c.value))
        .collect();
    let passed = failed.is_empty();
    let worst = checks
        .iter()
        .map(|c| format!("{} = {:.3e} ({})", c.name, c.value, c.bound))
        .collect::<Vec<_>>();
    let _ = writeln!(std::io::stderr(), "  {}", worst.join("\n  "));
    verdict(
        8,
        passed,
        &format!("{} checks, failed {failed:?}", checks.len()),
    );
    assert!(passed);
}

#[test]
fn scenario_outputs_are_byte_identical() {
    let mut cfg = ScenarioConfig::default();
    cfg.integrator.samples = 20;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_scenario(&cfg, Scenario::Fig3ZeroTemp, a.path()).unwrap();
    run_scenario(&cfg, Scenario::Fig3ZeroTemp, b.path()).unwrap();
    let mut n = 0;
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().unwrap();
            assert_eq!(
                std::fs::read(&path).unwrap(),
                std::fs::read(b.path().join(name)).unwrap(),
                "{name:?}"
            );
            n += 1;
        }
    }
    assert_eq!(n, 3, "three transfer runs");
}
