//! Optomechanical Hamiltonians and the dark/bright eigenstructure of the
//! single-excitation subspace.
//!
//! Units: time in μs, every frequency an angular rate in rad/μs.
//! 3×3 matrices and 3-vectors use the basis order `(|g₁⟩, |e⟩, |g₂⟩)`, i.e.
//! `(|100⟩, |010⟩, |001⟩)` on the full space.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::fock::{mode_annihilation, mode_number, CompositeSpace, ModeId, Operator, C64};

/// Basis positions inside the single-excitation triple.
pub const G1: usize = 0;
pub const E: usize = 1;
pub const G2: usize = 2;

/// Occupation strings of `|g₁⟩`, `|e⟩`, `|g₂⟩` in `(cavity 1, mechanical, cavity 2)` order.
pub const SINGLE_EXCITATION_OCCUPATIONS: [[usize; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

/// Tolerance used to decide that θ sits on a pole of the Bloch sphere.
const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub g1: C64,
    pub g2: C64,
    pub delta1: f64,
    pub delta2: f64,
}

impl CouplingParams {
    /// Resonant couplings (`δ₁ = δ₂ = 0`).
    pub fn resonant(g1: C64, g2: C64) -> Self {
        Self { g1, g2, delta1: 0.0, delta2: 0.0 }
    }

    pub fn zero() -> Self {
        Self::resonant(C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    }

    /// `G₀ = √(|G₁|² + |G₂|²)`
    pub fn g0(&self) -> f64 {
        self.g1.norm().hypot(self.g2.norm())
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("g1.re", self.g1.re)?;
        ensure_finite("g1.im", self.g1.im)?;
        ensure_finite("g2.re", self.g2.re)?;
        ensure_finite("g2.im", self.g2.im)?;
        ensure_finite("delta1", self.delta1)?;
        ensure_finite("delta2", self.delta2)
    }
}

/// Polar angle `θ ∈ [0, π]` and azimuth `φ ∈ [0, 2π)`.
///
/// At the poles `φ` has no physical meaning and is stored as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAngles")]
pub struct BlochAngles {
    theta: f64,
    phi: f64,
}

#[derive(Deserialize)]
struct RawAngles {
    theta: f64,
    phi: f64,
}

impl TryFrom<RawAngles> for BlochAngles {
    type Error = Error;

    fn try_from(raw: RawAngles) -> Result<Self> {
        Self::new(raw.theta, raw.phi)
    }
}

impl BlochAngles {
    /// `phi` is wrapped into `[0, 2π)`; `theta` outside `[0, π]` is rejected.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        ensure_finite("theta", theta)?;
        ensure_finite("phi", phi)?;
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidAngles(format!("theta = {theta} outside [0, π]")));
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        if theta < POLE_TOL || PI - theta < POLE_TOL {
            phi = 0.0;
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `(sin θ/2, cos θ/2, e^{iφ})`
    pub(crate) fn half_angle_parts(&self) -> (f64, f64, C64) {
        let (s, c) = (self.theta / 2.0).sin_cos();
        (s, c, C64::from_polar(1.0, self.phi))
    }

    /// Dark state `cos θ/2 |g₁⟩ + sin θ/2 e^{iφ}|g₂⟩` on the qubit pair `(|g₁⟩, |g₂⟩)`.
    pub fn dark_qubit(&self) -> nalgebra::Vector2<C64> {
        let (s, c, ephi) = self.half_angle_parts();
        nalgebra::Vector2::new(C64::new(c, 0.0), ephi * s)
    }

    /// Bright state `sin θ/2 e^{−iφ}|g₁⟩ − cos θ/2 |g₂⟩` on the qubit pair.
    pub fn bright_qubit(&self) -> nalgebra::Vector2<C64> {
        let (s, c, ephi) = self.half_angle_parts();
        nalgebra::Vector2::new(ephi.conj() * s, C64::new(-c, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    /// `(E₀, E₊, E₋) = (0, G₀, −G₀)`
    pub energies: [f64; 3],
    /// Normalized `(|E₀⟩, |E₊⟩, |E₋⟩)`.
    pub vectors: [Vector3<C64>; 3],
    pub dark: Vector3<C64>,
    pub bright: Vector3<C64>,
}

fn ensure_positive_g0(g0: f64) -> Result<()> {
    ensure_finite("g0", g0)?;
    if g0 > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveCoupling(g0))
    }
}

/// `Σᵢ δᵢ aᵢ†aᵢ + (Gᵢ aᵢ b† + Gᵢ* aᵢ† b)` on the optomechanical space.
pub fn build_full_hamiltonian(params: &CouplingParams, space: &CompositeSpace) -> Result<Operator> {
    params.validate()?;
    let a1 = mode_annihilation(&ModeId::cavity1(), space)?;
    let a2 = mode_annihilation(&ModeId::cavity2(), space)?;
    let b = mode_annihilation(&ModeId::mechanical(), space)?;
    let bdag = b.adjoint();

    let mut h = Operator::zeros(space);
    for (a, g, delta, mode) in
        [(&a1, params.g1, params.delta1, ModeId::cavity1()), (&a2, params.g2, params.delta2, ModeId::cavity2())]
    {
        if delta != 0.0 {
            h = h.add(&mode_number(&mode, space)?.scale(C64::new(delta, 0.0)))?;
        }
        let forward = a.matmul(&bdag)?.scale(g);
        h = h.add(&forward)?.add(&forward.adjoint())?;
    }
    Ok(h)
}

/// Restriction of a full-space operator to `span{|g₁⟩, |e⟩, |g₂⟩}`.
pub fn project_single_excitation(op: &Operator) -> Result<Matrix3<C64>> {
    let space = op.space();
    let idx: Vec<usize> =
        SINGLE_EXCITATION_OCCUPATIONS.iter().map(|occ| space.flat_index(occ)).collect::<Result<_>>()?;
    Ok(Matrix3::from_fn(|i, j| op.matrix()[(idx[i], idx[j])]))
}

/// Single-excitation Hamiltonian
/// `G₀ [[0, s e^{−iφ}, 0], [s e^{iφ}, 0, −c], [0, −c, 0]]` with `s = sin θ/2`, `c = cos θ/2`.
pub fn subspace_hamiltonian(angles: &BlochAngles, g0: f64) -> Result<Matrix3<C64>> {
    ensure_positive_g0(g0)?;
    let (s, c, ephi) = angles.half_angle_parts();
    let zero = C64::new(0.0, 0.0);
    let up = ephi.conj() * s * g0;
    let down = C64::new(-c * g0, 0.0);
    Ok(Matrix3::new(zero, up, zero, up.conj(), zero, down, zero, down, zero))
}

/// `G₁ = G₀ sin(θ/2) e^{iφ}`, `G₂ = −G₀ cos(θ/2)`, zero detunings.
pub fn couplings_from_angles(angles: &BlochAngles, g0: f64) -> Result<CouplingParams> {
    ensure_positive_g0(g0)?;
    let (s, c, ephi) = angles.half_angle_parts();
    Ok(CouplingParams::resonant(ephi * (g0 * s), C64::new(-g0 * c, 0.0)))
}

/// Recover `(θ, φ)` and `G₀` from a coupling pair. Only the relative phase
/// between `G₁` and `−G₂` is physical; it becomes `φ`.
pub fn angles_from_couplings(params: &CouplingParams) -> Result<(BlochAngles, f64)> {
    params.validate()?;
    let g0 = params.g0();
    ensure_positive_g0(g0)?;
    let theta = (2.0 * params.g1.norm().atan2(params.g2.norm())).min(PI);
    let reference = if params.g2.norm() > 0.0 { (-params.g2).arg() } else { 0.0 };
    let phi = if params.g1.norm() > 0.0 { params.g1.arg() - reference } else { 0.0 };
    Ok((BlochAngles::new(theta, phi)?, g0))
}

pub fn eigensystem(angles: &BlochAngles, g0: f64) -> Result<Eigensystem> {
    ensure_positive_g0(g0)?;
    let (s, c, ephi) = angles.half_angle_parts();
    let zero = C64::new(0.0, 0.0);
    let dark = Vector3::new(C64::new(c, 0.0), zero, ephi * s);
    let bright = Vector3::new(ephi.conj() * s, zero, C64::new(-c, 0.0));
    let excited = Vector3::new(zero, C64::new(1.0, 0.0), zero);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = (bright + excited) * C64::new(h, 0.0);
    let minus = (bright - excited) * C64::new(h, 0.0);
    Ok(Eigensystem { energies: [0.0, g0, -g0], vectors: [dark, plus, minus], dark, bright })
}

/// Ingest a frequency quoted as `X/2π = v MHz` as an angular rate in rad/μs.
pub fn mhz_over_2pi(v: f64) -> f64 {
    TAU * v
}

/// How a rate quoted in "MHz" is turned into an internal angular rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateConvention {
    /// The number already is an angular rate in rad/μs.
    Angular,
    /// The number is a linear frequency in MHz and gets multiplied by 2π.
    Linear,
}

impl RateConvention {
    pub fn to_angular(self, value: f64) -> f64 {
        match self {
            RateConvention::Angular => value,
            RateConvention::Linear => mhz_over_2pi(value),
        }
    }

    pub fn from_angular(self, rate: f64) -> f64 {
        match self {
            RateConvention::Angular => rate,
            RateConvention::Linear => rate / TAU,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RateConvention::Angular => "angular",
            RateConvention::Linear => "linear",
        }
    }
}

impl std::str::FromStr for RateConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "angular" => Ok(RateConvention::Angular),
            "linear" => Ok(RateConvention::Linear),
            other => Err(Error::InvalidConfig(format!("unknown rate convention `{other}`"))),
        }
    }
}
