//! Open-system dynamics under the optomechanical master equation
//!
//! `dρ/dt = i[ρ, H] + κ₁ L[a₁]ρ + κ₂ L[a₂]ρ + γ_m D[b]ρ`
//!
//! with `L[o]ρ = (2oρo† − o†oρ − ρo†o)/2` and the thermal dissipator
//! `D[o]ρ = (n_th + 1) L[o]ρ + n_th L[o†]ρ`.
//!
//! [`master_rhs`] evaluates the right-hand side straight from these formulas on
//! dense matrices. [`Liouvillian`] is the compiled form used by [`integrate`]:
//! it folds the anti-commutator terms into an effective non-Hermitian
//! Hamiltonian and exploits the sparsity of ladder operators, which matters
//! for sweeps running hundreds of integrations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::fock::{mode_annihilation, CompositeSpace, DensityCheck, ModeId, Operator, QState, C64};
use crate::holonomy::PulsePlan;
use crate::model::{build_full_hamiltonian, eigensystem, BlochAngles};

/// Bound on `dt · max(G₀, |δ|, decay width)` for the fixed-step scheme.
pub const STEP_LIMIT: f64 = 0.05;

/// Trace drift tolerated on stored states.
pub const TRAJECTORY_TRACE_TOL: f64 = 1e-8;
/// Hermiticity drift tolerated on stored states.
pub const TRAJECTORY_HERMITIAN_TOL: f64 = 1e-9;

/// Dissipation rates in rad/μs and the mechanical bath occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma_m: f64,
    pub n_th: f64,
}

impl NoiseParams {
    pub fn zero() -> Self {
        Self { kappa1: 0.0, kappa2: 0.0, gamma_m: 0.0, n_th: 0.0 }
    }

    /// Equal cavity decay `κ₁ = κ₂ = κ`.
    pub fn symmetric(kappa: f64, gamma_m: f64, n_th: f64) -> Self {
        Self { kappa1: kappa, kappa2: kappa, gamma_m, n_th }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in
            [("kappa1", self.kappa1), ("kappa2", self.kappa2), ("gamma_m", self.gamma_m), ("n_th", self.n_th)]
        {
            ensure_finite(name, value)?;
            if value < 0.0 {
                return Err(Error::NegativeRate { name, value });
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.kappa1 == 0.0 && self.kappa2 == 0.0 && self.gamma_m == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Classical fixed-step fourth-order Runge-Kutta.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Upper bound on the step (μs); the actual step divides the pulse evenly.
    pub dt: f64,
    pub method: Method,
    /// Symmetrize `ρ ← (ρ + ρ†)/2` after this many steps.
    pub hermitize_every: usize,
    /// Number of equal intervals at whose ends the state is stored.
    pub samples: usize,
    /// Top mechanical Fock level population that triggers a warning.
    pub truncation_check_threshold: f64,
    /// Top mechanical Fock level population that aborts the run.
    pub truncation_abort_threshold: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 5e-5,
            method: Method::Rk4,
            hermitize_every: 50,
            samples: 200,
            truncation_check_threshold: 1e-3,
            truncation_abort_threshold: 5e-2,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64) -> Result<Self> {
        let config = Self { dt, ..Self::default() };
        config.validate()?;
        Ok(config)
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("dt", self.dt)?;
        if self.dt <= 0.0 {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.hermitize_every == 0 {
            return Err(Error::InvalidConfig("hermitize_every must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        let (warn, abort) = (self.truncation_check_threshold, self.truncation_abort_threshold);
        if !(warn > 0.0 && warn <= abort && abort <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "truncation thresholds must satisfy 0 < check ({warn}) <= abort ({abort}) <= 1"
            )));
        }
        Ok(())
    }

    /// `(steps, dt)` actually used for a pulse of length `duration`.
    pub fn step_grid(&self, duration: f64) -> (usize, f64) {
        let raw = (duration / self.dt).ceil().max(1.0) as usize;
        let steps = raw.div_ceil(self.samples) * self.samples;
        (steps, duration / steps as f64)
    }
}

/// Collapse channels `a₁`, `a₂`, `b` on the optomechanical space.
#[derive(Debug, Clone)]
pub struct CollapseOps {
    pub a1: Operator,
    pub a2: Operator,
    pub bm: Operator,
}

impl CollapseOps {
    pub fn for_space(space: &CompositeSpace) -> Result<Self> {
        Ok(Self {
            a1: mode_annihilation(&ModeId::cavity1(), space)?,
            a2: mode_annihilation(&ModeId::cavity2(), space)?,
            bm: mode_annihilation(&ModeId::mechanical(), space)?,
        })
    }
}

fn check_dims(op: &Operator, rho: &DMatrix<C64>) -> Result<()> {
    if !rho.is_square() || rho.nrows() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: rho.nrows() });
    }
    Ok(())
}

/// `L[o]ρ = (2oρo† − o†oρ − ρo†o)/2`
pub fn lindblad_term(o: &Operator, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    check_dims(o, rho)?;
    let o = o.matrix();
    let od = o.adjoint();
    let n = &od * o;
    Ok(o * rho * &od - (&n * rho + rho * &n) * C64::new(0.5, 0.0))
}

/// `(n_th + 1) L[o]ρ + n_th L[o†]ρ`
pub fn thermal_term(o: &Operator, rho: &DMatrix<C64>, n_th: f64) -> Result<DMatrix<C64>> {
    ensure_finite("n_th", n_th)?;
    if n_th < 0.0 {
        return Err(Error::NegativeRate { name: "n_th", value: n_th });
    }
    let emission = lindblad_term(o, rho)? * C64::new(n_th + 1.0, 0.0);
    if n_th == 0.0 {
        return Ok(emission);
    }
    Ok(emission + lindblad_term(&o.adjoint(), rho)? * C64::new(n_th, 0.0))
}

/// Right-hand side of the master equation, evaluated directly on dense matrices.
pub fn master_rhs(rho: &DMatrix<C64>, h: &Operator, noise: &NoiseParams, ops: &CollapseOps) -> Result<DMatrix<C64>> {
    noise.validate()?;
    check_dims(h, rho)?;
    let hm = h.matrix();
    let mut out = (rho * hm - hm * rho) * C64::new(0.0, 1.0);
    if noise.kappa1 != 0.0 {
        out += lindblad_term(&ops.a1, rho)? * C64::new(noise.kappa1, 0.0);
    }
    if noise.kappa2 != 0.0 {
        out += lindblad_term(&ops.a2, rho)? * C64::new(noise.kappa2, 0.0);
    }
    if noise.gamma_m != 0.0 {
        out += thermal_term(&ops.bm, rho, noise.n_th)? * C64::new(noise.gamma_m, 0.0);
    }
    Ok(out)
}

/// Nonzero entries of a dense operator, `(row, col, value)`.
#[derive(Debug, Clone)]
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// `out += coef · A·x` on column-major `d × d` buffers.
    fn left_mul_acc(&self, x: &[C64], out: &mut [C64], d: usize, coef: C64) {
        for j in 0..d {
            let (xc, oc) = (&x[j * d..(j + 1) * d], &mut out[j * d..(j + 1) * d]);
            for &(i, k, v) in &self.entries {
                oc[i] += coef * v * xc[k];
            }
        }
    }

    /// `out += coef · x·A` on column-major `d × d` buffers.
    fn right_mul_acc(&self, x: &[C64], out: &mut [C64], d: usize, coef: C64) {
        for &(k, j, v) in &self.entries {
            let w = coef * v;
            let (xc, oc) = (&x[k * d..(k + 1) * d], &mut out[j * d..(j + 1) * d]);
            for (o, xv) in oc.iter_mut().zip(xc) {
                *o += w * xv;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Jump {
    rate: f64,
    op: SparseOp,
    adjoint: SparseOp,
}

/// Compiled master-equation generator:
/// `ρ̇ = −i(H_eff ρ − ρ H_eff†) + Σ_c r_c c ρ c†` with `H_eff = H − (i/2) Σ_c r_c c†c`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    h_eff: SparseOp,
    h_eff_adjoint: SparseOp,
    jumps: Vec<Jump>,
    decay_width: f64,
}

impl Liouvillian {
    pub fn new(h: &Operator, noise: &NoiseParams, ops: &CollapseOps) -> Result<Self> {
        noise.validate()?;
        let dim = h.dim();
        for c in [&ops.a1, &ops.a2, &ops.bm] {
            if c.space() != h.space() {
                return Err(Error::SpaceMismatch);
            }
        }
        let mut channels: Vec<(f64, DMatrix<C64>)> = Vec::new();
        let mut push = |rate: f64, op: DMatrix<C64>| {
            if rate > 0.0 {
                channels.push((rate, op));
            }
        };
        push(noise.kappa1, ops.a1.matrix().clone());
        push(noise.kappa2, ops.a2.matrix().clone());
        push(noise.gamma_m * (noise.n_th + 1.0), ops.bm.matrix().clone());
        push(noise.gamma_m * noise.n_th, ops.bm.matrix().adjoint());

        let mut h_eff = h.matrix().clone();
        for (rate, c) in &channels {
            h_eff -= (c.adjoint() * c) * C64::new(0.0, 0.5 * rate);
        }
        let decay_width = (0..dim).map(|k| -2.0 * h_eff[(k, k)].im).fold(0.0, f64::max);
        let jumps = channels
            .iter()
            .map(|(rate, c)| Jump {
                rate: *rate,
                op: SparseOp::from_dense(c),
                adjoint: SparseOp::from_dense(&c.adjoint()),
            })
            .collect();
        Ok(Self {
            dim,
            h_eff: SparseOp::from_dense(&h_eff),
            h_eff_adjoint: SparseOp::from_dense(&h_eff.adjoint()),
            jumps,
            decay_width,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest total decay rate out of any basis state, `max_k Σ_c r_c ⟨k|c†c|k⟩`.
    pub fn decay_width(&self) -> f64 {
        self.decay_width
    }

    /// `out ← ρ̇`; `scratch` must have the same shape as `rho`.
    pub fn apply_into(&self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>, scratch: &mut DMatrix<C64>) {
        let d = self.dim;
        debug_assert_eq!(rho.shape(), (d, d));
        let x = rho.as_slice();
        let o = out.as_mut_slice();
        o.fill(C64::new(0.0, 0.0));
        self.h_eff.left_mul_acc(x, o, d, C64::new(0.0, -1.0));
        self.h_eff_adjoint.right_mul_acc(x, o, d, C64::new(0.0, 1.0));
        let s = scratch.as_mut_slice();
        for jump in &self.jumps {
            s.fill(C64::new(0.0, 0.0));
            jump.op.left_mul_acc(x, s, d, C64::new(1.0, 0.0));
            jump.adjoint.right_mul_acc(s, o, d, C64::new(jump.rate, 0.0));
        }
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        let mut scratch = DMatrix::zeros(self.dim, self.dim);
        self.apply_into(rho, &mut out, &mut scratch);
        out
    }
}

/// Worst-case deviations over the stored states of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub max_trace_deviation: f64,
    pub max_hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
    pub max_top_mech_population: f64,
}

impl Default for InvariantReport {
    fn default() -> Self {
        Self {
            max_trace_deviation: 0.0,
            max_hermiticity_deviation: 0.0,
            min_eigenvalue: f64::INFINITY,
            max_top_mech_population: 0.0,
        }
    }
}

impl InvariantReport {
    fn absorb(&mut self, check: &DensityCheck, top_population: f64) {
        self.max_trace_deviation = self.max_trace_deviation.max(check.trace_deviation);
        self.max_hermiticity_deviation = self.max_hermiticity_deviation.max(check.hermiticity);
        self.min_eigenvalue = self.min_eigenvalue.min(check.min_eigenvalue);
        self.max_top_mech_population = self.max_top_mech_population.max(top_population);
    }

    pub fn merge(&mut self, other: &InvariantReport) {
        self.max_trace_deviation = self.max_trace_deviation.max(other.max_trace_deviation);
        self.max_hermiticity_deviation = self.max_hermiticity_deviation.max(other.max_hermiticity_deviation);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.max_top_mech_population = self.max_top_mech_population.max(other.max_top_mech_population);
    }

    /// Trace, Hermiticity and positivity all within the trajectory tolerances.
    pub fn is_cptp_clean(&self) -> bool {
        self.max_trace_deviation <= TRAJECTORY_TRACE_TOL
            && self.max_hermiticity_deviation <= TRAJECTORY_HERMITIAN_TOL
            && self.min_eigenvalue >= crate::fock::PSD_TOL
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QState>,
    pub plan: PulsePlan,
    pub noise: NoiseParams,
    pub config: IntegratorConfig,
    pub steps: usize,
    pub dt: f64,
    pub report: InvariantReport,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn final_state(&self) -> &QState {
        self.states.last().expect("trajectory always stores the initial state")
    }
}

fn hermitize(rho: &mut DMatrix<C64>) {
    let sym = (&*rho + rho.adjoint()) * C64::new(0.5, 0.0);
    *rho = sym;
}

/// Flat indices whose mechanical occupation is the top truncated level.
fn top_mech_indices(space: &CompositeSpace) -> Result<Vec<usize>> {
    let pos = space.position(&ModeId::mechanical())?;
    let top = space.modes()[pos].1 - 1;
    Ok((0..space.dim()).filter(|&k| space.occupations(k)[pos] == top).collect())
}

fn step_scale(plan: &PulsePlan, generator: &Liouvillian) -> f64 {
    [plan.g0(), plan.couplings.delta1.abs(), plan.couplings.delta2.abs(), generator.decay_width()]
        .into_iter()
        .fold(0.0, f64::max)
}

/// Largest `dt` accepted by [`integrate`] for this pulse and noise.
pub fn max_stable_dt(plan: &PulsePlan, noise: &NoiseParams, space: &CompositeSpace) -> Result<f64> {
    noise.validate()?;
    let h = build_full_hamiltonian(&plan.couplings, space)?;
    let generator = Liouvillian::new(&h, noise, &CollapseOps::for_space(space)?)?;
    Ok(STEP_LIMIT / step_scale(plan, &generator) * (1.0 - 1e-12))
}

/// Integrate the master equation over one pulse, `t ∈ [0, τ]`.
pub fn integrate(
    rho0: &QState,
    plan: &PulsePlan,
    noise: &NoiseParams,
    config: &IntegratorConfig,
    space: &CompositeSpace,
) -> Result<Trajectory> {
    if rho0.space() != space {
        return Err(Error::SpaceMismatch);
    }
    config.validate()?;
    noise.validate()?;
    plan.couplings.validate()?;
    let tau = plan.duration_tau;
    ensure_finite("duration_tau", tau)?;
    if tau <= 0.0 {
        return Err(Error::InvalidConfig(format!("pulse duration must be positive, got {tau}")));
    }

    let h = build_full_hamiltonian(&plan.couplings, space)?;
    let ops = CollapseOps::for_space(space)?;
    let generator = Liouvillian::new(&h, noise, &ops)?;

    let (steps, dt) = config.step_grid(tau);
    let scale = step_scale(plan, &generator);
    if dt * scale > STEP_LIMIT {
        return Err(Error::StepTooLarge { dt, scale, product: dt * scale, limit: STEP_LIMIT });
    }

    let top = top_mech_indices(space)?;
    let stride = steps / config.samples;
    let d = space.dim();

    let mut traj = Trajectory {
        times: Vec::with_capacity(config.samples + 1),
        states: Vec::with_capacity(config.samples + 1),
        plan: *plan,
        noise: *noise,
        config: *config,
        steps,
        dt,
        report: InvariantReport::default(),
        warnings: Vec::new(),
    };

    let mut rho = rho0.density_matrix();
    record(&mut traj, &rho, 0.0, space, &top)?;

    let mut k1 = DMatrix::zeros(d, d);
    let mut k2 = DMatrix::zeros(d, d);
    let mut k3 = DMatrix::zeros(d, d);
    let mut k4 = DMatrix::zeros(d, d);
    let mut stage = DMatrix::zeros(d, d);
    let mut scratch = DMatrix::zeros(d, d);
    let half = 0.5 * dt;

    for step in 1..=steps {
        generator.apply_into(&rho, &mut k1, &mut scratch);
        axpy_into(&mut stage, &rho, half, &k1);
        generator.apply_into(&stage, &mut k2, &mut scratch);
        axpy_into(&mut stage, &rho, half, &k2);
        generator.apply_into(&stage, &mut k3, &mut scratch);
        axpy_into(&mut stage, &rho, dt, &k3);
        generator.apply_into(&stage, &mut k4, &mut scratch);
        let w = dt / 6.0;
        for (((r, a), (b, c)), e) in rho
            .as_mut_slice()
            .iter_mut()
            .zip(k1.as_slice())
            .zip(k2.as_slice().iter().zip(k3.as_slice()))
            .zip(k4.as_slice())
        {
            *r += (a + (b + c) * 2.0 + e) * w;
        }

        if step % stride == 0 {
            let t = if step == steps { tau } else { step as f64 * dt };
            record(&mut traj, &rho, t, space, &top)?;
        }
        if step % config.hermitize_every == 0 {
            hermitize(&mut rho);
        }
    }
    Ok(traj)
}

/// `out ← x + h·k`
fn axpy_into(out: &mut DMatrix<C64>, x: &DMatrix<C64>, h: f64, k: &DMatrix<C64>) {
    for ((o, a), b) in out.as_mut_slice().iter_mut().zip(x.as_slice()).zip(k.as_slice()) {
        *o = a + b * h;
    }
}

fn record(traj: &mut Trajectory, rho: &DMatrix<C64>, t: f64, space: &CompositeSpace, top: &[usize]) -> Result<()> {
    let check = DensityCheck::of(rho);
    let top_population: f64 = top.iter().map(|&k| rho[(k, k)].re).sum();
    traj.report.absorb(&check, top_population);

    if top_population > traj.config.truncation_abort_threshold {
        return Err(Error::TruncationOverflow {
            time: t,
            population: top_population,
            limit: traj.config.truncation_abort_threshold,
        });
    }
    if top_population > traj.config.truncation_check_threshold && traj.warnings.is_empty() {
        let msg = format!(
            "top mechanical Fock level population {top_population:.3e} exceeds {:.1e} at t = {t} μs; consider a larger cutoff",
            traj.config.truncation_check_threshold
        );
        log::warn!("{msg}");
        traj.warnings.push(msg);
    }
    if check.trace_deviation > TRAJECTORY_TRACE_TOL
        || check.hermiticity > TRAJECTORY_HERMITIAN_TOL
        || check.min_eigenvalue < crate::fock::PSD_TOL
    {
        return Err(Error::InvariantViolation {
            time: t,
            detail: format!(
                "trace deviation {:.3e}, hermiticity {:.3e}, min eigenvalue {:.3e}",
                check.trace_deviation, check.hermiticity, check.min_eigenvalue
            ),
        });
    }
    traj.times.push(t);
    traj.states.push(QState::density_unchecked(space.clone(), rho.clone()));
    Ok(())
}

/// Exact propagator `e^{−iH₃t}` on `(|g₁⟩, |e⟩, |g₂⟩)`:
/// `|d⟩⟨d| + cos α (|b⟩⟨b| + |e⟩⟨e|) − i sin α (|b⟩⟨e| + |e⟩⟨b|)` with `α = G₀t`.
pub fn closed_propagator(angles: &BlochAngles, g0: f64, t: f64) -> Result<Matrix3<C64>> {
    let es = eigensystem(angles, g0)?;
    let alpha = g0 * t;
    let excited = Vector3::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let (d, b) = (es.dark, es.bright);
    let cos = C64::new(alpha.cos(), 0.0);
    let isin = C64::new(0.0, alpha.sin());
    Ok(d * d.adjoint() + (b * b.adjoint() + excited * excited.adjoint()) * cos
        - (b * excited.adjoint() + excited * b.adjoint()) * isin)
}

/// Pulse area at which [`closed_propagator`] completes a cyclic evolution.
pub const CYCLIC_AREA: f64 = PI;
