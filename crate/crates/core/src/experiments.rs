//! Reproducible scenarios: state transfer, entanglement generation and
//! dissipation sweeps, with population and fidelity observables.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{basis_state, mode_number, partial_trace, CompositeSpace, ModeId, QState, C64};
use crate::holonomy::{
    catalog, compose, gate_unitary, holonomy_connection, holonomy_exponential, plan_pulse, verify_parallel_transport,
    GateName, GateSpec, ParallelTransportReport, PulsePlan,
};
use crate::lindblad::{closed_propagator, integrate, max_stable_dt, IntegratorConfig, InvariantReport, NoiseParams};
use crate::model::{mhz_over_2pi, BlochAngles, RateConvention};

/// `G₀/2π` in MHz used for both single-pulse experiments.
pub const DEFAULT_G0_MHZ: f64 = 2.0 * SQRT_2;
pub const DEFAULT_N_TH: f64 = 100.0;
/// Sweep range of κ as quoted, "MHz".
pub const KAPPA_RANGE: (f64, f64) = (0.031, 0.628);
/// Sweep range of γ_m as quoted, "MHz".
pub const GAMMA_RANGE: (f64, f64) = (1.88e-3, 35.81e-3);
pub const DEFAULT_SWEEP_POINTS: usize = 21;
/// Step bound used for sweep points, where only the final state is needed.
pub const SWEEP_DT: f64 = 4e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truncation {
    pub cavity: usize,
    pub mechanical: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { cavity: 2, mechanical: 15 }
    }
}

impl Truncation {
    pub fn space(&self) -> Result<CompositeSpace> {
        CompositeSpace::optomechanical(self.cavity, self.mechanical)
    }
}

/// Everything besides the noise that a single run needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// rad/μs
    pub g0: f64,
    pub truncation: Truncation,
    pub integrator: IntegratorConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            g0: mhz_over_2pi(DEFAULT_G0_MHZ),
            truncation: Truncation::default(),
            integrator: IntegratorConfig::default(),
        }
    }
}

impl Scenario {
    pub fn space(&self) -> Result<CompositeSpace> {
        self.truncation.space()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p3: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub plan: PulsePlan,
    pub steps: usize,
    pub dt: f64,
    pub report: InvariantReport,
    pub warnings: Vec<String>,
}

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_fidelity(&self) -> Option<f64> {
        self.fidelity.last().copied()
    }
}

/// Mean occupations `(cavity 1, cavity 2, phonons)`.
pub fn populations(rho: &QState) -> Result<(f64, f64, f64)> {
    let space = rho.space();
    let mut out = [0.0; 3];
    for (slot, mode) in out.iter_mut().zip([ModeId::cavity1(), ModeId::cavity2(), ModeId::mechanical()]) {
        *slot = rho.expectation(&mode_number(&mode, space)?)?.re;
    }
    Ok((out[0], out[1], out[2]))
}

/// `⟨ψ|tr_m ρ|ψ⟩` for a pure two-cavity target `psi_ideal`.
pub fn fidelity(rho: &QState, psi_ideal: &QState) -> Result<f64> {
    let reduced = partial_trace(rho, &[ModeId::cavity1(), ModeId::cavity2()])?;
    if psi_ideal.space() != reduced.space() {
        return Err(Error::DimensionMismatch { expected: reduced.space().dim(), found: psi_ideal.space().dim() });
    }
    match psi_ideal.repr() {
        crate::fock::StateRepr::Pure(psi) => reduced.overlap_with_pure(psi),
        crate::fock::StateRepr::Mixed(_) => Err(Error::InvalidState("fidelity target must be a pure state".into())),
    }
}

/// Two-cavity state `α|10⟩ + β|01⟩` on the cavity subspace of `space`.
pub fn cavity_qubit_state(space: &CompositeSpace, amplitudes: [C64; 2]) -> Result<QState> {
    let cavities = space.restrict(&[ModeId::cavity1(), ModeId::cavity2()])?;
    let mut psi = DVector::zeros(cavities.dim());
    psi[cavities.flat_index(&[1, 0])?] = amplitudes[0];
    psi[cavities.flat_index(&[0, 1])?] = amplitudes[1];
    QState::pure(cavities, psi)
}

/// Ideal outcome `U|g₁⟩` of a gate acting on cavity 1's photon.
pub fn ideal_target(unitary: &Matrix2<C64>, space: &CompositeSpace) -> Result<QState> {
    cavity_qubit_state(space, [unitary[(0, 0)], unitary[(1, 0)]])
}

fn single_pulse(name: GateName) -> Result<GateSpec> {
    let mut seq = catalog(name);
    if seq.len() != 1 {
        return Err(Error::SequenceNotDrivable(name.to_string()));
    }
    Ok(seq.remove(0))
}

/// Drive one holonomic pulse from `|g₁⟩ ⊗ |0⟩_m` and record the observables.
pub fn run_gate(gate: &GateSpec, noise: &NoiseParams, scenario: &Scenario) -> Result<ObservableSeries> {
    let space = scenario.space()?;
    let plan = plan_pulse(gate, scenario.g0)?;
    let target = ideal_target(&gate_unitary(gate), &space)?;
    let rho0 = basis_state(&space, &[1, 0, 0])?;
    let traj = integrate(&rho0, &plan, noise, &scenario.integrator, &space)?;

    let n = traj.states.len();
    let mut series = ObservableSeries {
        times: traj.times.clone(),
        p1: Vec::with_capacity(n),
        p2: Vec::with_capacity(n),
        p3: Vec::with_capacity(n),
        fidelity: Vec::with_capacity(n),
        plan,
        steps: traj.steps,
        dt: traj.dt,
        report: traj.report,
        warnings: traj.warnings.clone(),
    };
    for state in &traj.states {
        let (p1, p2, p3) = populations(state)?;
        series.p1.push(p1);
        series.p2.push(p2);
        series.p3.push(p3);
        series.fidelity.push(fidelity(state, &target)?);
    }
    Ok(series)
}

/// NOT pulse moving the photon from cavity 1 to cavity 2.
pub fn run_state_transfer(noise: &NoiseParams, scenario: &Scenario) -> Result<ObservableSeries> {
    run_gate(&single_pulse(GateName::Not)?, noise, scenario)
}

/// Hadamard pulse preparing `(|10⟩ + |01⟩)/√2`.
pub fn run_entanglement(noise: &NoiseParams, scenario: &Scenario) -> Result<ObservableSeries> {
    run_gate(&single_pulse(GateName::Hadamard)?, noise, scenario)
}

/// Populations predicted by the closed single-excitation propagator at `times`.
pub fn closed_populations(angles: &BlochAngles, g0: f64, times: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    times
        .iter()
        .map(|&t| {
            let u = closed_propagator(angles, g0, t)?;
            let col = u.column(0);
            Ok((col[0].norm_sqr(), col[2].norm_sqr(), col[1].norm_sqr()))
        })
        .collect()
}

pub fn log_space(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let (lo, hi) = (min.ln(), max.ln());
            (0..points)
                .map(|k| match k {
                    0 => min,
                    k if k == points - 1 => max,
                    k => (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub gate: GateName,
    /// κ = κ₁ = κ₂ as quoted, interpreted through `convention`.
    pub kappa: Vec<f64>,
    /// γ_m as quoted, interpreted through `convention`.
    pub gamma_m: Vec<f64>,
    pub n_th: f64,
    pub convention: RateConvention,
}

impl SweepSpec {
    /// Log-spaced grid over the quoted κ and γ_m ranges with `n_th = 100`.
    pub fn standard(gate: GateName, points: usize, convention: RateConvention) -> Self {
        Self {
            gate,
            kappa: log_space(KAPPA_RANGE.0, KAPPA_RANGE.1, points),
            gamma_m: log_space(GAMMA_RANGE.0, GAMMA_RANGE.1, points),
            n_th: DEFAULT_N_TH,
            convention,
        }
    }

    pub fn noise_at(&self, kappa: f64, gamma_m: f64) -> NoiseParams {
        NoiseParams::symmetric(self.convention.to_angular(kappa), self.convention.to_angular(gamma_m), self.n_th)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub gate: GateName,
    pub kappa_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    /// `fidelities[i][j]` at `(kappa_values[i], gamma_values[j])`.
    pub fidelities: Vec<Vec<f64>>,
    pub convention: RateConvention,
    pub n_th: f64,
    pub report: InvariantReport,
}

impl SweepGrid {
    /// Fidelity at the smallest κ and γ_m.
    pub fn low_damping_corner(&self) -> f64 {
        self.fidelities[0][0]
    }

    /// Fidelity at the largest κ and γ_m.
    pub fn high_damping_corner(&self) -> f64 {
        *self.fidelities.last().and_then(|row| row.last()).expect("sweep grids are nonempty")
    }

    /// Largest increase of F between neighbours along either damping axis;
    /// zero or negative for a grid that is non-increasing everywhere.
    pub fn max_monotonicity_violation(&self) -> f64 {
        let f = &self.fidelities;
        let mut worst = f64::NEG_INFINITY;
        for (i, row) in f.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i + 1 < f.len() {
                    worst = worst.max(f[i + 1][j] - v);
                }
                if j + 1 < row.len() {
                    worst = worst.max(row[j + 1] - v);
                }
            }
        }
        worst
    }
}

/// Final fidelity of `gate` at every `(κ, γ_m)` grid point.
///
/// Points are independent and evaluated in parallel on the current rayon
/// pool; results are gathered by index. The step at each point is the smaller
/// of the scenario's `dt` and the stability bound for that point's rates.
pub fn run_sweep(spec: &SweepSpec, scenario: &Scenario) -> Result<SweepGrid> {
    if spec.kappa.is_empty() || spec.gamma_m.is_empty() {
        return Err(Error::InvalidConfig("sweep grids must be nonempty".into()));
    }
    let gate = single_pulse(spec.gate)?;
    let space = scenario.space()?;
    let plan = plan_pulse(&gate, scenario.g0)?;
    let target = ideal_target(&gate_unitary(&gate), &space)?;
    let rho0 = basis_state(&space, &[1, 0, 0])?;
    let ng = spec.gamma_m.len();

    let points: Vec<(f64, InvariantReport)> = (0..spec.kappa.len() * ng)
        .into_par_iter()
        .map(|idx| {
            let noise = spec.noise_at(spec.kappa[idx / ng], spec.gamma_m[idx % ng]);
            let dt = scenario.integrator.dt.min(max_stable_dt(&plan, &noise, &space)?);
            let config = IntegratorConfig { dt, ..scenario.integrator }.with_samples(1);
            let traj = integrate(&rho0, &plan, &noise, &config, &space)?;
            Ok((fidelity(traj.final_state(), &target)?, traj.report))
        })
        .collect::<Result<_>>()?;

    let mut report = InvariantReport::default();
    for (_, r) in &points {
        report.merge(r);
    }
    let fidelities = points.chunks(ng).map(|row| row.iter().map(|(f, _)| *f).collect()).collect();
    Ok(SweepGrid {
        gate: spec.gate,
        kappa_values: spec.kappa.clone(),
        gamma_values: spec.gamma_m.clone(),
        fidelities,
        convention: spec.convention,
        n_th: spec.n_th,
        report,
    })
}

/// Results of the closed-form identity checks behind the gate construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// Named gates against their literal matrices.
    pub gate_algebra_error: f64,
    /// `exp(iπM) − U(θ, φ)` over the angle grid.
    pub holonomy_consistency_error: f64,
    /// Hermiticity, unitarity, `det = −1` and `U² = I` over the angle grid.
    pub unitary_property_error: f64,
    pub grid_points: usize,
    pub not_transport: ParallelTransportReport,
    pub hadamard_transport: ParallelTransportReport,
    /// `arg ⟨d|U₁|d⟩` and `arg ⟨b|U₁|b⟩` from the 3×3 propagator at `α = π`.
    pub propagator_dark_phase: f64,
    pub propagator_bright_phase: f64,
    pub passed: bool,
}

fn max_entry(m: &Matrix2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Evaluate the holonomy identities on an `n × n` grid of `(θ, φ)`.
pub fn verify_identities(n: usize, transport_samples: usize) -> Result<IdentityReport> {
    let r = |v: f64| C64::new(v, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let literal = [
        (GateName::Not, Matrix2::new(r(0.0), r(1.0), r(1.0), r(0.0))),
        (GateName::PhaseFlip, Matrix2::new(r(1.0), r(0.0), r(0.0), r(-1.0))),
        (GateName::Hadamard, Matrix2::new(r(h), r(h), r(h), r(-h))),
        (
            GateName::PhasePi4,
            Matrix2::new(C64::from_polar(1.0, -PI / 4.0), r(0.0), r(0.0), C64::from_polar(1.0, PI / 4.0)),
        ),
    ];
    let mut gate_algebra_error = 0.0f64;
    for (name, expected) in &literal {
        gate_algebra_error = gate_algebra_error.max(max_entry(&(compose(&catalog(*name))? - expected)));
    }

    let mut holonomy_consistency_error = 0.0f64;
    let mut unitary_property_error = 0.0f64;
    for (theta, phi) in angle_grid(n) {
        let spec = GateSpec::from_angles(theta, phi)?;
        let u = gate_unitary(&spec);
        let e = holonomy_exponential(&holonomy_connection(&spec))?;
        holonomy_consistency_error = holonomy_consistency_error.max(max_entry(&(e - u)));
        let id = Matrix2::identity();
        unitary_property_error = unitary_property_error
            .max(max_entry(&(u - u.adjoint())))
            .max(max_entry(&(u.adjoint() * u - id)))
            .max(max_entry(&(u * u - id)))
            .max((u.determinant() + r(1.0)).norm());
    }

    let not_transport = verify_parallel_transport(&single_pulse(GateName::Not)?, transport_samples)?;
    let hadamard_transport = verify_parallel_transport(&single_pulse(GateName::Hadamard)?, transport_samples)?;

    let angles = single_pulse(GateName::Not)?.angles;
    let g0 = mhz_over_2pi(DEFAULT_G0_MHZ);
    let u = closed_propagator(&angles, g0, PI / g0)?;
    let es = crate::model::eigensystem(&angles, g0)?;
    let propagator_dark_phase = es.dark.dotc(&(u * es.dark)).arg().rem_euclid(2.0 * PI);
    let propagator_bright_phase = es.bright.dotc(&(u * es.bright)).arg().rem_euclid(2.0 * PI);

    let passed = gate_algebra_error < 1e-12
        && holonomy_consistency_error < 1e-10
        && unitary_property_error < 1e-12
        && not_transport.passed
        && hadamard_transport.passed
        && propagator_dark_phase.min(2.0 * PI - propagator_dark_phase) < 1e-9
        && (propagator_bright_phase - PI).abs() < 1e-9;
    Ok(IdentityReport {
        gate_algebra_error,
        holonomy_consistency_error,
        unitary_property_error,
        grid_points: n * n,
        not_transport,
        hadamard_transport,
        propagator_dark_phase,
        propagator_bright_phase,
        passed,
    })
}

/// `n × n` grid with θ covering `[0, π]` and φ covering `[0, 2π)`.
pub fn angle_grid(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let theta = if n > 1 { PI * i as f64 / (n - 1) as f64 } else { 0.0 };
        for j in 0..n {
            out.push((theta, 2.0 * PI * j as f64 / n as f64));
        }
    }
    out
}

/// Density matrix of `state` embedded in the single-excitation triple of `space`.
pub fn embed_single_excitation(space: &CompositeSpace, amplitudes: &nalgebra::Vector3<C64>) -> Result<DMatrix<C64>> {
    let mut psi = DVector::zeros(space.dim());
    for (k, occ) in crate::model::SINGLE_EXCITATION_OCCUPATIONS.iter().enumerate() {
        psi[space.flat_index(occ)?] = amplitudes[k];
    }
    Ok(&psi * psi.adjoint())
}
