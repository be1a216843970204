//! Parametrized qubit map families.
//!
//! Every family shares the snapshot interface: at a time `t ≥ 0` it yields the
//! map eigenvalues `λ_i(t)` (and, for non-unital members, the translation
//! `t3(t)`) together with their analytic time derivatives.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::AffineRep;
use crate::error::{invalid, Result};

/// Weight-sum tolerance for mixtures.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(format!("time must be finite and non-negative, got {t}")));
    }
    Ok(())
}

/// Exponential decoherence function `p(t) = (1 − e^{−ct})/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceProfile {
    c: f64,
}

/// `p`, `ṗ` and the coherence `1 − 2p` at one instant. The coherence is
/// evaluated directly so it keeps full relative precision as `p → ½`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub p: f64,
    pub p_dot: f64,
    pub coherence: f64,
}

impl DecoherenceProfile {
    pub fn rate(&self) -> f64 {
        self.c
    }

    pub fn p(&self, t: f64) -> f64 {
        -0.5 * (-self.c * t).exp_m1()
    }

    pub fn p_dot(&self, t: f64) -> f64 {
        0.5 * self.c * (-self.c * t).exp()
    }

    /// `1 − 2p(t) = e^{−ct}`.
    pub fn coherence(&self, t: f64) -> f64 {
        (-self.c * t).exp()
    }

    pub fn sample(&self, t: f64) -> ProfileSample {
        ProfileSample { p: self.p(t), p_dot: self.p_dot(t), coherence: self.coherence(t) }
    }
}

pub fn exp_profile(c: f64) -> Result<DecoherenceProfile> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("decay parameter c must be positive, got {c}")));
    }
    Ok(DecoherenceProfile { c })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub fn index(self) -> usize {
        match self {
            PauliAxis::X => 0,
            PauliAxis::Y => 1,
            PauliAxis::Z => 2,
        }
    }

    /// Axis from its Pauli label 1, 2 or 3.
    pub fn from_label(label: u8) -> Result<Self> {
        match label {
            1 => Ok(PauliAxis::X),
            2 => Ok(PauliAxis::Y),
            3 => Ok(PauliAxis::Z),
            _ => Err(invalid(format!("Pauli axis must be 1, 2 or 3, got {label}"))),
        }
    }
}

/// Mixing weights of three Pauli dephasing semigroups.
///
/// Convex mixtures need non-negative weights; affine mixtures may carry
/// negative ones. Either way the weights sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    weights: [f64; 3],
    convex: bool,
}

impl MixtureSpec {
    pub fn convex(weights: [f64; 3]) -> Result<Self> {
        Self::check_sum(weights)?;
        if let Some(w) = weights.iter().find(|w| **w < 0.0) {
            return Err(invalid(format!("convex mixture weight {w} is negative")));
        }
        Ok(Self { weights, convex: true })
    }

    pub fn affine(weights: [f64; 3]) -> Result<Self> {
        Self::check_sum(weights)?;
        let convex = weights.iter().all(|w| *w >= 0.0);
        Ok(Self { weights, convex })
    }

    fn check_sum(weights: [f64; 3]) -> Result<()> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("mixture weights must be finite"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(invalid(format!("mixture weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn weights(&self) -> [f64; 3] {
        self.weights
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }
}

/// Eigenvalues of a Pauli-diagonal unital map at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliDiagonalSnapshot {
    pub t: f64,
    pub lambda: [f64; 3],
}

/// Eigenvalues `λ_i` and translation `t3` of a non-unital map at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonUnitalSnapshot {
    pub t: f64,
    pub lambda: [f64; 3],
    pub t3: f64,
}

/// Snapshot plus analytic derivatives, the input to the log-derivative routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDerivatives {
    pub lambda: [f64; 3],
    pub lambda_dot: [f64; 3],
    pub t3: f64,
    pub t3_dot: f64,
}

pub fn pauli_semigroup_snapshot(
    axis: PauliAxis,
    profile: &DecoherenceProfile,
    t: f64,
) -> Result<PauliDiagonalSnapshot> {
    check_time(t)?;
    let q = profile.coherence(t);
    let mut lambda = [q; 3];
    lambda[axis.index()] = 1.0;
    Ok(PauliDiagonalSnapshot { t, lambda })
}

/// `λ_j = w_j + (1 − w_j)(1 − 2p)`.
pub fn mixture_snapshot(
    spec: &MixtureSpec,
    profile: &DecoherenceProfile,
    t: f64,
) -> Result<PauliDiagonalSnapshot> {
    check_time(t)?;
    let q = profile.coherence(t);
    let lambda = spec.weights.map(|w| w + (1.0 - w) * q);
    Ok(PauliDiagonalSnapshot { t, lambda })
}

/// `Φ[ρ] = (1 − 3p/4) ρ + (p/4) Σ σ_i ρ σ_i`, so every `λ_i = 1 − p`.
pub fn depolarizing_snapshot(profile: &DecoherenceProfile, t: f64) -> Result<PauliDiagonalSnapshot> {
    check_time(t)?;
    let lambda = 1.0 - profile.p(t);
    Ok(PauliDiagonalSnapshot { t, lambda: [lambda; 3] })
}

/// A differentiable scalar function of time, `t ↦ (f(t), f'(t))`.
pub type Evaluator = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// User-supplied phase-covariant family. Derivatives are analytic, never
/// obtained by differencing inside the family.
#[derive(Clone)]
pub struct CustomPhaseCovariant {
    /// Natural inverse-time scale, used to size grids and horizons.
    pub scale: f64,
    /// Transverse eigenvalue `λ1 = λ2 = λ` and its derivative.
    pub transverse: Evaluator,
    /// Longitudinal eigenvalue `λ3` and its derivative.
    pub longitudinal: Evaluator,
    /// Translation `t3` and its derivative.
    pub shift: Evaluator,
}

impl fmt::Debug for CustomPhaseCovariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPhaseCovariant").field("scale", &self.scale).finish_non_exhaustive()
    }
}

/// Non-unital phase-covariant families. Amplitude damping relaxes toward the
/// `r3 = +1` pole.
#[derive(Debug, Clone)]
pub enum NonUnitalFamilySpec {
    AmplitudeDamping { gamma: f64 },
    GeneralizedAmplitudeDamping { gamma: f64, r_inf: f64 },
    PhaseCovariant(CustomPhaseCovariant),
}

impl NonUnitalFamilySpec {
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self::AmplitudeDamping { gamma })
    }

    pub fn generalized_amplitude_damping(gamma: f64, r_inf: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(r_inf.abs() <= 1.0) {
            return Err(invalid(format!("stationary r_inf must lie in [-1, 1], got {r_inf}")));
        }
        Ok(Self::GeneralizedAmplitudeDamping { gamma, r_inf })
    }

    pub fn custom(custom: CustomPhaseCovariant) -> Result<Self> {
        check_gamma(custom.scale)?;
        Ok(Self::PhaseCovariant(custom))
    }

    /// Relaxation rate or, for custom families, the declared scale.
    pub fn scale(&self) -> f64 {
        match self {
            Self::AmplitudeDamping { gamma } | Self::GeneralizedAmplitudeDamping { gamma, .. } => *gamma,
            Self::PhaseCovariant(c) => c.scale,
        }
    }

    /// Stationary `r3` for the damping families.
    pub fn stationary_r3(&self) -> Option<f64> {
        match self {
            Self::AmplitudeDamping { .. } => Some(1.0),
            Self::GeneralizedAmplitudeDamping { r_inf, .. } => Some(*r_inf),
            Self::PhaseCovariant(_) => None,
        }
    }

    pub fn derivatives(&self, t: f64) -> Result<MapDerivatives> {
        check_time(t)?;
        Ok(match self {
            Self::AmplitudeDamping { gamma } => damping_derivatives(*gamma, 1.0, t),
            Self::GeneralizedAmplitudeDamping { gamma, r_inf } => damping_derivatives(*gamma, *r_inf, t),
            Self::PhaseCovariant(c) => {
                let (l, ld) = (c.transverse)(t);
                let (l3, l3d) = (c.longitudinal)(t);
                let (t3, t3d) = (c.shift)(t);
                MapDerivatives { lambda: [l, l, l3], lambda_dot: [ld, ld, l3d], t3, t3_dot: t3d }
            }
        })
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid(format!("relaxation rate gamma must be positive, got {gamma}")));
    }
    Ok(())
}

fn damping_derivatives(gamma: f64, r_inf: f64, t: f64) -> MapDerivatives {
    let half = (-0.5 * gamma * t).exp();
    let full = (-gamma * t).exp();
    MapDerivatives {
        lambda: [half, half, full],
        lambda_dot: [-0.5 * gamma * half, -0.5 * gamma * half, -gamma * full],
        t3: -r_inf * (-gamma * t).exp_m1(),
        t3_dot: r_inf * gamma * full,
    }
}

pub fn nonunital_snapshot(spec: &NonUnitalFamilySpec, t: f64) -> Result<NonUnitalSnapshot> {
    let d = spec.derivatives(t)?;
    Ok(NonUnitalSnapshot { t, lambda: d.lambda, t3: d.t3 })
}

/// Either kind of snapshot, for [`affine_rep_of`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snapshot {
    Unital(PauliDiagonalSnapshot),
    NonUnital(NonUnitalSnapshot),
}

impl From<PauliDiagonalSnapshot> for Snapshot {
    fn from(s: PauliDiagonalSnapshot) -> Self {
        Snapshot::Unital(s)
    }
}

impl From<NonUnitalSnapshot> for Snapshot {
    fn from(s: NonUnitalSnapshot) -> Self {
        Snapshot::NonUnital(s)
    }
}

pub fn affine_rep_of(snapshot: impl Into<Snapshot>) -> AffineRep {
    match snapshot.into() {
        Snapshot::Unital(s) => AffineRep::diagonal(s.lambda, [0.0; 3]),
        Snapshot::NonUnital(s) => AffineRep::diagonal(s.lambda, [0.0, 0.0, s.t3]),
    }
}

/// Any of the built-in map families.
#[derive(Debug, Clone)]
pub enum Family {
    /// The identity channel at every time.
    Identity,
    /// Mixture of the three Pauli dephasing semigroups sharing one profile.
    Mixture { spec: MixtureSpec, profile: DecoherenceProfile },
    Depolarizing { profile: DecoherenceProfile },
    NonUnital(NonUnitalFamilySpec),
}

impl Family {
    pub fn mixture(weights: [f64; 3], c: f64) -> Result<Self> {
        Ok(Family::Mixture { spec: MixtureSpec::affine(weights)?, profile: exp_profile(c)? })
    }

    /// A single dephasing semigroup, the mixture with unit weight on `axis`.
    pub fn semigroup(axis: PauliAxis, c: f64) -> Result<Self> {
        let mut w = [0.0; 3];
        w[axis.index()] = 1.0;
        Self::mixture(w, c)
    }

    pub fn depolarizing(c: f64) -> Result<Self> {
        Ok(Family::Depolarizing { profile: exp_profile(c)? })
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        NonUnitalFamilySpec::amplitude_damping(gamma).map(Family::NonUnital)
    }

    pub fn generalized_amplitude_damping(gamma: f64, r_inf: f64) -> Result<Self> {
        NonUnitalFamilySpec::generalized_amplitude_damping(gamma, r_inf).map(Family::NonUnital)
    }

    pub fn is_unital(&self) -> bool {
        !matches!(self, Family::NonUnital(_))
    }

    /// Convex Pauli mixtures can have at most one negative rate at a time.
    pub fn is_convex_mixture(&self) -> bool {
        matches!(self, Family::Mixture { spec, .. } if spec.is_convex())
    }

    /// Natural inverse-time scale (`c` or `Γ`).
    pub fn time_scale(&self) -> f64 {
        match self {
            Family::Identity => 1.0,
            Family::Mixture { profile, .. } | Family::Depolarizing { profile } => profile.rate(),
            Family::NonUnital(spec) => spec.scale(),
        }
    }

    /// `λ1 = λ2` at all times.
    pub fn is_phase_covariant(&self) -> bool {
        match self {
            Family::Mixture { spec, .. } => spec.weights[0] == spec.weights[1],
            _ => true,
        }
    }

    pub fn derivatives(&self, t: f64) -> Result<MapDerivatives> {
        check_time(t)?;
        Ok(match self {
            Family::Identity => MapDerivatives { lambda: [1.0; 3], lambda_dot: [0.0; 3], t3: 0.0, t3_dot: 0.0 },
            Family::Mixture { spec, profile } => {
                let s = profile.sample(t);
                MapDerivatives {
                    lambda: spec.weights.map(|w| w + (1.0 - w) * s.coherence),
                    lambda_dot: spec.weights.map(|w| -2.0 * (1.0 - w) * s.p_dot),
                    t3: 0.0,
                    t3_dot: 0.0,
                }
            }
            Family::Depolarizing { profile } => {
                let s = profile.sample(t);
                MapDerivatives { lambda: [1.0 - s.p; 3], lambda_dot: [-s.p_dot; 3], t3: 0.0, t3_dot: 0.0 }
            }
            Family::NonUnital(spec) => spec.derivatives(t)?,
        })
    }

    pub fn snapshot(&self, t: f64) -> Result<Snapshot> {
        Ok(match self {
            Family::Identity => {
                check_time(t)?;
                Snapshot::Unital(PauliDiagonalSnapshot { t, lambda: [1.0; 3] })
            }
            Family::Mixture { spec, profile } => mixture_snapshot(spec, profile, t)?.into(),
            Family::Depolarizing { profile } => depolarizing_snapshot(profile, t)?.into(),
            Family::NonUnital(spec) => nonunital_snapshot(spec, t)?.into(),
        })
    }

    pub fn affine_at(&self, t: f64) -> Result<AffineRep> {
        self.snapshot(t).map(affine_rep_of)
    }
}
