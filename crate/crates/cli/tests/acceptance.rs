//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::time::Instant;

use holonome::experiments::{
    angle_grid, run_entanglement, run_gate, run_state_transfer, run_sweep, ObservableSeries, Scenario, SweepGrid,
    SweepSpec,
};
use holonome::holonomy::{
    catalog, compose, gate_unitary, holonomy_connection, holonomy_exponential, verify_parallel_transport, GateName,
    GateSpec,
};
use holonome::lindblad::{closed_propagator, IntegratorConfig, InvariantReport, NoiseParams};
use holonome::model::{eigensystem, RateConvention};
use holonome::C64;
use holonome_cli::config::{Experiment, Format};
use holonome_cli::{dispatch, RunConfig};
use nalgebra::Matrix2;

const EXACT_TOL: f64 = 1e-12;
const HOLONOMY_TOL: f64 = 1e-10;
const TRANSPORT_TOL: f64 = 1e-9;
const ORACLE_TOL: f64 = 1e-8;
const PULSE_TARGET: f64 = 0.999;
const TRACE_TOL: f64 = 1e-8;
const HERMITIAN_TOL: f64 = 1e-9;
const PSD_TOL: f64 = -1e-8;
const ORDER_RATIO: (f64, f64) = (16.0, 4.0);
const CORNER_TOL: f64 = 0.05;
/// Largest rise of F between grid neighbours tolerated as integration noise.
const MONOTONE_TOL: f64 = 1e-9;
const SWEEP_POINTS: usize = 21;

/// Target corner fidelities (lowest damping, highest damping).
const NOT_CORNERS: (f64, f64) = (0.96, 0.56);
const HADAMARD_CORNERS: (f64, f64) = (0.97, 0.65);

struct Outcome {
    passed: bool,
    detail: String,
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn max2(m: &Matrix2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Closed single-excitation populations from `|g₁⟩` at pulse area `α`.
fn closed_oracle(theta: f64, alpha: f64) -> (f64, f64, f64) {
    let (s, co) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let g1 = co * co + s * s * alpha.cos();
    let g2 = co * s * (1.0 - alpha.cos());
    let e = s * alpha.sin();
    (g1 * g1, g2 * g2, e * e)
}

fn oracle_error(series: &ObservableSeries, theta: f64, g0: f64) -> f64 {
    (0..series.len())
        .map(|k| {
            let (p1, p2, p3) = closed_oracle(theta, g0 * series.times[k]);
            (series.p1[k] - p1).abs().max((series.p2[k] - p2).abs()).max((series.p3[k] - p3).abs())
        })
        .fold(0.0, f64::max)
}

fn fine_scenario() -> Scenario {
    let base = Scenario::default();
    let tau = PI / base.g0;
    Scenario { integrator: IntegratorConfig::new(tau / 2000.0).unwrap().with_samples(200), ..base }
}

fn gate_algebra() -> Outcome {
    let h = FRAC_1_SQRT_2;
    let cases = [
        ("NOT", GateName::Not, Matrix2::new(c(0.0), c(1.0), c(1.0), c(0.0))),
        ("phase flip", GateName::PhaseFlip, Matrix2::new(c(1.0), c(0.0), c(0.0), c(-1.0))),
        ("Hadamard", GateName::Hadamard, Matrix2::new(c(h), c(h), c(h), c(-h))),
        (
            "pi/4 phase",
            GateName::PhasePi4,
            Matrix2::new(C64::from_polar(1.0, -PI / 4.0), c(0.0), c(0.0), C64::from_polar(1.0, PI / 4.0)),
        ),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (label, name, expected) in cases {
        let err = max2(&(compose(&catalog(name)).unwrap() - expected));
        worst = worst.max(err);
        parts.push(format!("{label} {err:.1e}"));
    }
    Outcome { passed: worst <= EXACT_TOL, detail: format!("max entry error {worst:.2e} ({})", parts.join(", ")) }
}

fn holonomy_consistency() -> Outcome {
    let grid = angle_grid(8);
    let worst = grid
        .iter()
        .map(|&(theta, phi)| {
            let spec = GateSpec::from_angles(theta, phi).unwrap();
            max2(&(holonomy_exponential(&holonomy_connection(&spec)).unwrap() - gate_unitary(&spec)))
        })
        .fold(0.0, f64::max);
    Outcome {
        passed: worst <= HOLONOMY_TOL && grid.len() == 64,
        detail: format!("max |exp(i pi M) - U| = {worst:.2e} over {} points", grid.len()),
    }
}

fn parallel_transport() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for name in [GateName::Not, GateName::Hadamard] {
        let spec = catalog(name).remove(0);
        let r = verify_parallel_transport(&spec, 100).unwrap();
        passed &= r.passed && r.max_violation <= TRANSPORT_TOL && r.samples == 100;
        parts.push(format!("{name}: max <psi_i|H|psi_j> {:.1e}, cyclicity {:.1e}", r.max_violation, r.cyclicity_error));

        let g0 = Scenario::default().g0;
        let u = closed_propagator(&spec.angles, g0, PI / g0).unwrap();
        let es = eigensystem(&spec.angles, g0).unwrap();
        let dark = es.dark.dotc(&(u * es.dark));
        let bright = es.bright.dotc(&(u * es.bright));
        let dark_ok = (dark - c(1.0)).norm() <= TRANSPORT_TOL;
        let bright_ok = (bright - c(-1.0)).norm() <= TRANSPORT_TOL;
        passed &= dark_ok && bright_ok;
        parts.push(format!("phases {:.6}/{:.6}", dark.arg().rem_euclid(TAU), bright.arg().rem_euclid(TAU)));
    }
    Outcome { passed, detail: parts.join("; ") }
}

fn state_transfer(reports: &mut Vec<InvariantReport>) -> Outcome {
    let scenario = fine_scenario();
    let series = run_state_transfer(&NoiseParams::zero(), &scenario).unwrap();
    reports.push(series.report);
    let last = series.len() - 1;
    let tau = series.times[last];
    let g1 = series.plan.couplings.g1 / TAU;
    let g2 = series.plan.couplings.g2 / TAU;
    let couplings_ok = (g1 - c(2.0)).norm() < 1e-12 && (g2 - c(-2.0)).norm() < 1e-12;
    let err = oracle_error(&series, PI / 2.0, scenario.g0);
    let (p2, f) = (series.p2[last], series.fidelity[last]);
    Outcome {
        passed: couplings_ok
            && p2 >= PULSE_TARGET
            && f >= PULSE_TARGET
            && (tau - 0.1768).abs() < 1e-4
            && err <= ORACLE_TOL,
        detail: format!(
            "G1/2pi = {:.4}, G2/2pi = {:.4} MHz, tau = {tau:.6} us, P2 = {p2:.9}, F = {f:.9}, oracle error {err:.1e}",
            g1.re, g2.re
        ),
    }
}

fn entanglement(reports: &mut Vec<InvariantReport>) -> Outcome {
    let scenario = fine_scenario();
    let series = run_entanglement(&NoiseParams::zero(), &scenario).unwrap();
    reports.push(series.report);
    let last = series.len() - 1;
    let g1 = series.plan.couplings.g1.re / TAU;
    let g2 = series.plan.couplings.g2.re / TAU;
    let couplings_ok = (g1 - 1.0824).abs() < 5e-5 && (g2 + 2.6131).abs() < 5e-5;
    let f = series.fidelity[last];
    let (p1, p2) = (series.p1[last], series.p2[last]);
    Outcome {
        passed: couplings_ok && f >= PULSE_TARGET,
        detail: format!("G1/2pi = {g1:.4}, G2/2pi = {g2:.4} MHz, F = {f:.9}, P1 = {p1:.6}, P2 = {p2:.6}"),
    }
}

fn cptp_and_order(reports: &mut Vec<InvariantReport>) -> Outcome {
    let base = Scenario::default();
    for (noise, gate) in [
        (NoiseParams::symmetric(0.628, 35.81e-3, 100.0), GateName::Not),
        (NoiseParams::symmetric(2.0, 0.1, 100.0), GateName::Hadamard),
    ] {
        let scenario = Scenario { integrator: IntegratorConfig::new(1e-4).unwrap().with_samples(50), ..base };
        let series = run_gate(&catalog(gate).remove(0), &noise, &scenario).unwrap();
        reports.push(series.report);
    }
    let mut merged = InvariantReport::default();
    for r in reports.iter() {
        merged.merge(r);
    }
    let cptp = merged.max_trace_deviation <= TRACE_TOL
        && merged.max_hermiticity_deviation <= HERMITIAN_TOL
        && merged.min_eigenvalue >= PSD_TOL;

    let theta = 1.1;
    let gate = GateSpec::from_angles(theta, 0.4).unwrap();
    let tau = PI / base.g0;
    let err = |steps: usize| {
        let s = Scenario {
            truncation: holonome::experiments::Truncation { cavity: 2, mechanical: 3 },
            integrator: IntegratorConfig::new(tau / steps as f64).unwrap().with_samples(8),
            ..base
        };
        oracle_error(&run_gate(&gate, &NoiseParams::zero(), &s).unwrap(), theta, base.g0)
    };
    let ratio = err(256) / err(512);
    let order_ok = (ratio - ORDER_RATIO.0).abs() <= ORDER_RATIO.1;
    Outcome {
        passed: cptp && order_ok,
        detail: format!(
            "{} runs: max |tr-1| {:.1e}, hermiticity {:.1e}, min eigenvalue {:.1e}; dt-halving error ratio {ratio:.2}",
            reports.len(),
            merged.max_trace_deviation,
            merged.max_hermiticity_deviation,
            merged.min_eigenvalue
        ),
    }
}

fn corner_distance(conv: RateConvention) -> f64 {
    let mut total = 0.0;
    for (gate, (lo, hi)) in [(GateName::Not, NOT_CORNERS), (GateName::Hadamard, HADAMARD_CORNERS)] {
        let spec = SweepSpec {
            kappa: vec![0.031, 0.628],
            gamma_m: vec![1.88e-3, 35.81e-3],
            ..SweepSpec::standard(gate, 2, conv)
        };
        let mut sc = Scenario::default();
        sc.integrator.dt = holonome::experiments::SWEEP_DT;
        let g = run_sweep(&spec, &sc).unwrap();
        total += (g.low_damping_corner() - lo).abs() + (g.high_damping_corner() - hi).abs();
    }
    total
}

fn sweep_via_cli(gate: GateName, conv: RateConvention, dir: &std::path::Path) -> (SweepGrid, serde_json::Value) {
    let mut config = RunConfig::defaults(Experiment::Sweep);
    config.gate.name = Some(gate);
    config.units.kappa = conv;
    config.units.gamma_m = conv;
    config.sweep.points = SWEEP_POINTS;
    config.output.dir = dir.to_path_buf();
    config.output.formats = vec![Format::Csv, Format::Json, Format::Svg];
    dispatch(&config, &Default::default()).unwrap();
    let grid_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("sweep.json")).unwrap()).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let fidelities: Vec<Vec<f64>> = serde_json::from_value(grid_json["fidelities"].clone()).unwrap();
    let grid = SweepGrid {
        gate,
        kappa_values: serde_json::from_value(grid_json["kappa_values"].clone()).unwrap(),
        gamma_values: serde_json::from_value(grid_json["gamma_values"].clone()).unwrap(),
        fidelities,
        convention: conv,
        n_th: grid_json["n_th"].as_f64().unwrap(),
        report: InvariantReport::default(),
    };
    (grid, manifest)
}

fn dissipation_sweeps() -> Outcome {
    let angular = corner_distance(RateConvention::Angular);
    let linear = corner_distance(RateConvention::Linear);
    let conv = if angular <= linear { RateConvention::Angular } else { RateConvention::Linear };
    let root = tempfile::tempdir().unwrap();
    let mut passed = true;
    let mut parts =
        vec![format!("corner distance angular {angular:.3} vs linear {linear:.3}, using {}", conv.as_str())];
    for (gate, (lo, hi)) in [(GateName::Not, NOT_CORNERS), (GateName::Hadamard, HADAMARD_CORNERS)] {
        let dir = root.path().join(gate.as_str());
        let (grid, manifest) = sweep_via_cli(gate, conv, &dir);
        let rise = grid.max_monotonicity_violation();
        let (f_lo, f_hi) = (grid.low_damping_corner(), grid.high_damping_corner());
        let recorded = manifest["config"]["units"]["kappa"] == conv.as_str()
            && manifest["config"]["units"]["gamma_m"] == conv.as_str();
        let shape = grid.kappa_values.len() == SWEEP_POINTS
            && grid.gamma_values.len() == SWEEP_POINTS
            && manifest["config"]["truncation"]["mechanical"] == 15
            && grid.n_th == 100.0;
        passed &= rise <= MONOTONE_TOL
            && (f_lo - lo).abs() <= CORNER_TOL
            && (f_hi - hi).abs() <= CORNER_TOL
            && recorded
            && shape;
        parts.push(format!("{gate}: corners {f_lo:.4}/{f_hi:.4} (target {lo}/{hi}), max rise {rise:.1e}"));
    }
    Outcome { passed, detail: parts.join("; ") }
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let run = |experiment: Experiment, tag: &str| {
        let mut config = RunConfig::defaults(experiment);
        config.noise.kappa = 0.3;
        config.noise.gamma_m = 0.01;
        config.sweep.points = 3;
        config.output.dir = root.path().join(tag);
        config.output.formats = vec![Format::Csv];
        dispatch(&config, &Default::default()).unwrap();
        config.output.dir
    };
    let mut passed = true;
    for (experiment, file) in [
        (Experiment::Transfer, "transfer.csv"),
        (Experiment::Entangle, "entangle.csv"),
        (Experiment::Sweep, "sweep.csv"),
    ] {
        let a = std::fs::read(run(experiment, &format!("{file}-a")).join(file)).unwrap();
        let b = std::fs::read(run(experiment, &format!("{file}-b")).join(file)).unwrap();
        passed &= a == b && !a.is_empty();
    }
    Outcome { passed, detail: "transfer, entangle and 3x3 sweep CSVs byte-identical across repeated runs".into() }
}

fn main() {
    let mut reports = Vec::new();
    let mut all = true;
    let report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("[{status}] {n}. {name} ({:.2}s): {}", start.elapsed().as_secs_f64(), o.detail);
        o.passed
    };
    all &= report(1, "gate algebra", &mut gate_algebra);
    all &= report(2, "holonomy consistency", &mut holonomy_consistency);
    all &= report(3, "parallel transport and cyclicity", &mut parallel_transport);
    all &= report(4, "state transfer, zero noise", &mut || state_transfer(&mut reports));
    all &= report(5, "entanglement generation, zero noise", &mut || entanglement(&mut reports));
    all &= report(6, "open-system CPTP invariants and RK4 order", &mut || cptp_and_order(&mut reports));
    all &= report(7, "dissipation sweeps", &mut dissipation_sweeps);
    all &= report(8, "determinism", &mut determinism);
    if !all {
        std::process::exit(1);
    }
}
