//! Non-adiabatic holonomic gate synthesis.
//!
//! With a constant-ratio pulse of area `α(τ) = G₀τ = π`, the dark state is left
//! untouched while the bright state completes a loop through `|e⟩` and returns
//! with a sign flip. On the qubit pair `(|g₁⟩, |g₂⟩)` this yields
//! `U(θ, φ) = |d⟩⟨d| − |b⟩⟨b|`, a reflection with determinant −1.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::C64;
use crate::model::{couplings_from_angles, eigensystem, subspace_hamiltonian, BlochAngles, CouplingParams};

/// Largest Hermiticity defect accepted for a connection matrix.
const CONNECTION_HERMITIAN_TOL: f64 = 1e-12;

/// Parallel-transport matrix elements must vanish to this level (units of G₀).
pub const PARALLEL_TRANSPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub angles: BlochAngles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl GateSpec {
    pub fn new(angles: BlochAngles) -> Self {
        Self { angles, name: None }
    }

    pub fn from_angles(theta: f64, phi: f64) -> Result<Self> {
        Ok(Self::new(BlochAngles::new(theta, phi)?))
    }

    pub fn named(angles: BlochAngles, name: impl Into<String>) -> Self {
        Self { angles, name: Some(name.into()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateName {
    Not,
    /// `(π/2, π/8)`; despite the name this is a reflection like every `U(θ, φ)`.
    Rotation,
    Hadamard,
    PhaseFlip,
    /// `diag(e^{−iπ/4}, e^{iπ/4})`, realized as two pulses.
    PhasePi4,
}

impl GateName {
    pub const ALL: [GateName; 5] =
        [GateName::Not, GateName::Rotation, GateName::Hadamard, GateName::PhaseFlip, GateName::PhasePi4];

    pub fn as_str(&self) -> &'static str {
        match self {
            GateName::Not => "not",
            GateName::Rotation => "rotation",
            GateName::Hadamard => "hadamard",
            GateName::PhaseFlip => "phase_flip",
            GateName::PhasePi4 => "phase_pi4",
        }
    }
}

impl fmt::Display for GateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        GateName::ALL.into_iter().find(|g| g.as_str() == key).ok_or_else(|| Error::UnknownGate(s.to_string()))
    }
}

/// Catalogued gate as a pulse sequence in execution order.
pub fn catalog(name: GateName) -> Vec<GateSpec> {
    let spec = |theta: f64, phi: f64, label: &str| {
        GateSpec::named(BlochAngles::new(theta, phi).expect("catalog angles are in range"), label)
    };
    match name {
        GateName::Not => vec![spec(FRAC_PI_2, 0.0, "not")],
        GateName::Rotation => vec![spec(FRAC_PI_2, FRAC_PI_8, "rotation")],
        GateName::Hadamard => vec![spec(FRAC_PI_4, 0.0, "hadamard")],
        GateName::PhaseFlip => vec![spec(0.0, 0.0, "phase_flip")],
        GateName::PhasePi4 => vec![spec(FRAC_PI_2, 0.0, "not"), spec(FRAC_PI_2, FRAC_PI_4, "reflect_pi4")],
    }
}

/// `[[cos θ, sin θ e^{−iφ}], [sin θ e^{iφ}, −cos θ]]` on `(|g₁⟩, |g₂⟩)`.
pub fn gate_unitary(spec: &GateSpec) -> Matrix2<C64> {
    let (s, c) = spec.angles.theta().sin_cos();
    let ephi = C64::from_polar(1.0, spec.angles.phi());
    Matrix2::new(C64::new(c, 0.0), ephi.conj() * s, ephi * s, C64::new(-c, 0.0))
}

/// Product of a gate sequence; `gates` is in execution order, so the first
/// element ends up rightmost.
pub fn compose(gates: &[GateSpec]) -> Result<Matrix2<C64>> {
    if gates.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(gates.iter().fold(Matrix2::identity(), |acc, g| gate_unitary(g) * acc))
}

/// The connection `𝒜(t) = α̇(t)·M` with `M = −|b⟩⟨b|` on the qubit pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolonomyConnection {
    pub matrix_m: Matrix2<C64>,
}

pub fn holonomy_connection(spec: &GateSpec) -> HolonomyConnection {
    let (s, c, ephi) = spec.angles.half_angle_parts();
    let sc = s * c;
    HolonomyConnection {
        matrix_m: Matrix2::new(C64::new(-s * s, 0.0), ephi.conj() * sc, ephi * sc, C64::new(-c * c, 0.0)),
    }
}

/// `exp(iπM)`. The connection is constant in time along the pulse, so the
/// time-ordered exponential of `∫𝒜 dt` reduces to this with `∫α̇ dt = π`.
pub fn holonomy_exponential(conn: &HolonomyConnection) -> Result<Matrix2<C64>> {
    let m = conn.matrix_m;
    let defect = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > CONNECTION_HERMITIAN_TOL || m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidConnection(format!("M is not Hermitian (defect {defect:.3e})")));
    }
    Ok((m * C64::new(0.0, PI)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsePlan {
    pub couplings: CouplingParams,
    /// μs
    pub duration_tau: f64,
    /// `G₀·τ`, radians
    pub pulse_area_alpha: f64,
}

impl PulsePlan {
    pub fn g0(&self) -> f64 {
        self.couplings.g0()
    }
}

/// Constant-amplitude pulse realizing `spec`: `τ = π/G₀`.
pub fn plan_pulse(spec: &GateSpec, g0: f64) -> Result<PulsePlan> {
    let couplings = couplings_from_angles(&spec.angles, g0)?;
    let duration_tau = PI / g0;
    Ok(PulsePlan { couplings, duration_tau, pulse_area_alpha: g0 * duration_tau })
}

/// Outcome of [`verify_parallel_transport`].
///
/// `|ψ₂(t)⟩` carries the gauge factor `e^{iα(t)}`, so it is a representative
/// of the ray rather than the literal Schrödinger state; every matrix element
/// checked here is insensitive to that choice. The phases are read off the
/// ungauged evolution `U₁(τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelTransportReport {
    pub samples: usize,
    /// `max |⟨ψᵢ(t)|H₂|ψⱼ(t)⟩| / G₀` over all samples and index pairs.
    pub max_violation: f64,
    /// `max |⟨ψ₁|H₂|ψ₁⟩| / G₀`
    pub dark_expectation_max: f64,
    /// `‖ψ₂(τ) − ψ₂(0)‖`
    pub cyclicity_error: f64,
    /// `arg ⟨d|U₁(τ)|d⟩` in `[0, 2π)`
    pub dark_phase: f64,
    /// `arg ⟨b|U₁(τ)|b⟩` in `[0, 2π)`
    pub bright_phase: f64,
    pub passed: bool,
}

/// Check the parallel-transport and cyclic conditions along the analytic
/// evolution of the dark and bright states over one pulse.
pub fn verify_parallel_transport(spec: &GateSpec, samples: usize) -> Result<ParallelTransportReport> {
    if samples < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 samples, got {samples}")));
    }
    let h = subspace_hamiltonian(&spec.angles, 1.0)?;
    let es = eigensystem(&spec.angles, 1.0)?;
    let excited = Vector3::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let i = C64::new(0.0, 1.0);

    let psi2 = |alpha: f64| -> Vector3<C64> {
        (es.bright * C64::new(alpha.cos(), 0.0) - excited * (i * alpha.sin())) * C64::from_polar(1.0, alpha)
    };

    let mut max_violation = 0.0f64;
    let mut dark_expectation_max = 0.0f64;
    for k in 0..samples {
        let alpha = PI * k as f64 / (samples - 1) as f64;
        let states = [es.dark, psi2(alpha)];
        for (a, sa) in states.iter().enumerate() {
            for (b, sb) in states.iter().enumerate() {
                let element = sa.dotc(&(h * sb)).norm();
                max_violation = max_violation.max(element);
                if a == 0 && b == 0 {
                    dark_expectation_max = dark_expectation_max.max(element);
                }
            }
        }
    }

    let cyclicity_error = (psi2(PI) - psi2(0.0)).norm();
    // ungauged U₁(τ) acting on the dark and bright states
    let bright_final = es.bright * C64::new(PI.cos(), 0.0) - excited * (i * PI.sin());
    let dark_phase = es.dark.dotc(&es.dark).arg().rem_euclid(TAU);
    let bright_phase = es.bright.dotc(&bright_final).arg().rem_euclid(TAU);

    let passed = max_violation < PARALLEL_TRANSPORT_TOL && cyclicity_error < PARALLEL_TRANSPORT_TOL;
    Ok(ParallelTransportReport {
        samples,
        max_violation,
        dark_expectation_max,
        cyclicity_error,
        dark_phase,
        bright_phase,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &Matrix2<C64>, b: &Matrix2<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn r(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn named(name: GateName) -> GateSpec {
        catalog(name).remove(0)
    }

    #[test]
    fn named_gate_matrices() {
        let x = Matrix2::new(r(0.0), r(1.0), r(1.0), r(0.0));
        assert!(max_diff(&gate_unitary(&named(GateName::Not)), &x) < 1e-15);

        let z = Matrix2::new(r(1.0), r(0.0), r(0.0), r(-1.0));
        assert!(max_diff(&gate_unitary(&named(GateName::PhaseFlip)), &z) < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = Matrix2::new(r(h), r(h), r(h), r(-h));
        assert!(max_diff(&gate_unitary(&named(GateName::Hadamard)), &had) < 1e-15);
    }

    #[test]
    fn phase_gate_composition() {
        let u = compose(&catalog(GateName::PhasePi4)).unwrap();
        let expected = Matrix2::new(C64::from_polar(1.0, -FRAC_PI_4), r(0.0), r(0.0), C64::from_polar(1.0, FRAC_PI_4));
        assert!(max_diff(&u, &expected) < 1e-15);
    }

    #[test]
    fn self_inverse_compositions() {
        for name in [GateName::Not, GateName::PhaseFlip, GateName::Hadamard] {
            let g = named(name);
            let u = compose(&[g.clone(), g]).unwrap();
            assert!(max_diff(&u, &Matrix2::identity()) < 1e-15, "{name}");
        }
        assert_eq!(compose(&[]).unwrap_err(), Error::EmptySequence);
    }

    #[test]
    fn hadamard_prepares_superposition() {
        let out = gate_unitary(&named(GateName::Hadamard)) * nalgebra::Vector2::new(r(1.0), r(0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out[0] - r(h)).norm() < 1e-15 && (out[1] - r(h)).norm() < 1e-15);
    }

    #[test]
    fn connection_values() {
        let m = holonomy_connection(&named(GateName::Not)).matrix_m;
        let expected = Matrix2::new(r(-0.5), r(0.5), r(0.5), r(-0.5));
        assert!(max_diff(&m, &expected) < 1e-15);

        let m0 = holonomy_connection(&named(GateName::PhaseFlip)).matrix_m;
        assert!(max_diff(&m0, &Matrix2::new(r(0.0), r(0.0), r(0.0), r(-1.0))) < 1e-15);

        let generic = holonomy_connection(&GateSpec::from_angles(1.1, 4.0).unwrap()).matrix_m;
        assert!((generic.trace() - r(-1.0)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_connection_exponential() {
        let conn = HolonomyConnection { matrix_m: Matrix2::new(r(0.0), r(0.0), r(0.0), r(-1.0)) };
        let e = holonomy_exponential(&conn).unwrap();
        assert!(max_diff(&e, &Matrix2::new(r(1.0), r(0.0), r(0.0), r(-1.0))) < 1e-14);
    }

    #[test]
    fn non_hermitian_connection_rejected() {
        let conn = HolonomyConnection { matrix_m: Matrix2::new(r(0.0), r(1.0), r(0.0), r(-1.0)) };
        assert!(matches!(holonomy_exponential(&conn), Err(Error::InvalidConnection(_))));
    }

    #[test]
    fn pulse_planning() {
        let g0 = TAU * 2.0 * 2f64.sqrt();
        let plan = plan_pulse(&named(GateName::Not), g0).unwrap();
        assert!((plan.duration_tau - 0.176_776_695).abs() < 1e-8);
        assert!((plan.pulse_area_alpha - PI).abs() < 1e-12);
        let doubled = plan_pulse(&named(GateName::Not), 2.0 * g0).unwrap();
        assert!((doubled.duration_tau - plan.duration_tau / 2.0).abs() < 1e-15);
        assert_eq!(plan_pulse(&named(GateName::Not), 0.0).unwrap_err(), Error::NonPositiveCoupling(0.0));
    }

    #[test]
    fn gate_names_parse() {
        assert_eq!("NOT".parse::<GateName>().unwrap(), GateName::Not);
        assert_eq!("phase-flip".parse::<GateName>().unwrap(), GateName::PhaseFlip);
        assert_eq!("Phase_Pi4".parse::<GateName>().unwrap(), GateName::PhasePi4);
        assert!(matches!("toffoli".parse::<GateName>(), Err(Error::UnknownGate(_))));
    }

    #[test]
    fn parallel_transport_not_gate() {
        let report = verify_parallel_transport(&named(GateName::Not), 100).unwrap();
        assert!(report.passed);
        assert!(report.max_violation < 1e-9);
        assert!(report.dark_expectation_max < 1e-15);
        assert!(report.dark_phase.abs() < 1e-12);
        assert!((report.bright_phase - PI).abs() < 1e-12);
        assert!(verify_parallel_transport(&named(GateName::Not), 1).is_err());
    }
}
