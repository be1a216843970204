//! Canonical decay rates of the time-local master equation.
//!
//! Unital Pauli maps have `L[ρ] = Σ γ_i (σ_i ρ σ_i − ρ)`. Three independent
//! routes produce the `γ_i`: the mixing-weight formula built from
//! [`f_term`], eigenvalue log-derivatives, and a finite-difference generator
//! `Ḟ F⁻¹` that never sees analytic derivatives.
//!
//! Phase-covariant non-unital maps additionally carry `α`, `β` and
//! `γ± = α ± β`. Here `β` is signed so that the Bloch equation reads
//! `ṙ3 = −2α r3 − 2β`; with amplitude damping toward `r3 = +1` this makes
//! `γ−` the relaxation rate and `γ+` vanish. Swapping the `σ±` labels
//! exchanges `γ+` and `γ−`.

use serde::{Deserialize, Serialize};

use crate::algebra::{invert_affine, matmul3, matvec3, AffineRep};
use crate::error::{invalid, Error, Result};
use crate::families::{DecoherenceProfile, Family, MapDerivatives, MixtureSpec, NonUnitalFamilySpec, ProfileSample};

/// Absolute floor on the `f`-term denominator when only `p` is known.
pub const DENOMINATOR_THRESHOLD: f64 = 1e-14;

/// Eigenvalues at or below this magnitude have no usable log-derivative.
pub const EIGENVALUE_THRESHOLD: f64 = 1e-12;

/// Decay rate of a single dephasing map, `ṗ / (1 − 2p)`.
pub fn dephasing_rate(p: f64, p_dot: f64) -> Result<f64> {
    if !(p < 0.5) {
        return Err(Error::Singular { what: "dephasing rate denominator 1 - 2p", value: 1.0 - 2.0 * p });
    }
    if p < 0.0 {
        return Err(invalid(format!("decoherence function must be non-negative, got {p}")));
    }
    Ok(p_dot / (1.0 - 2.0 * p))
}

/// `f(x, p) = (1 − x) / (1 − 2(1 − x)p) · ṗ/2`.
///
/// Non-negative and strictly increasing in `p` for `x ∈ [0, 1)`.
pub fn f_term(x: f64, p: f64, p_dot: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&p) {
        return Err(invalid(format!("decoherence function must lie in [0, 1/2), got {p}")));
    }
    let denom = 1.0 - 2.0 * (1.0 - x) * p;
    if denom.abs() <= DENOMINATOR_THRESHOLD {
        return Err(Error::Singular { what: "f-term denominator", value: denom });
    }
    Ok((1.0 - x) / denom * p_dot / 2.0)
}

/// [`f_term`] evaluated from a profile sample. The denominator is formed as
/// `x + (1 − x)(1 − 2p)` from the exact coherence and is singular only
/// relative to it, so exponential tails stay evaluable.
pub fn f_term_sample(x: f64, s: &ProfileSample) -> Result<f64> {
    let denom = x + (1.0 - x) * s.coherence;
    if denom.abs() <= DENOMINATOR_THRESHOLD * s.coherence {
        return Err(Error::Singular { what: "f-term denominator", value: denom });
    }
    Ok((1.0 - x) / denom * s.p_dot / 2.0)
}

/// Rates `γ1, γ2, γ3` of a unital Pauli-diagonal map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitalRates {
    pub gamma: [f64; 3],
}

impl UnitalRates {
    fn from_signed_sum(terms: [f64; 3]) -> Self {
        let total: f64 = terms.iter().sum();
        // γ_i = Σ_{j≠i} f_j − f_i
        UnitalRates { gamma: terms.map(|f| total - 2.0 * f) }
    }

    /// `γ_i = ¼(l_i − l_j − l_k)` from log-derivatives `l = λ̇/λ`.
    fn from_log_derivatives(l: [f64; 3]) -> Self {
        let total: f64 = l.iter().sum();
        UnitalRates { gamma: l.map(|li| 0.25 * (2.0 * li - total)) }
    }
}

/// Weight formula: `γ1 = −f1 + f2 + f3` and cyclic.
pub fn pauli_rates_from_weights(spec: &MixtureSpec, profile: &DecoherenceProfile, t: f64) -> Result<UnitalRates> {
    if !(t >= 0.0) {
        return Err(invalid(format!("time must be non-negative, got {t}")));
    }
    let s = profile.sample(t);
    let w = spec.weights();
    let f = [f_term_sample(w[0], &s)?, f_term_sample(w[1], &s)?, f_term_sample(w[2], &s)?];
    Ok(UnitalRates::from_signed_sum(f))
}

fn log_derivatives(lambda: [f64; 3], lambda_dot: [f64; 3]) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for k in 0..3 {
        if !(lambda[k].abs() > EIGENVALUE_THRESHOLD) {
            return Err(Error::Singular { what: "map eigenvalue", value: lambda[k] });
        }
        out[k] = lambda_dot[k] / lambda[k];
    }
    Ok(out)
}

/// Eigenvalue route: `γ1 = ¼(λ̇1/λ1 − λ̇2/λ2 − λ̇3/λ3)` and cyclic.
pub fn pauli_rates_from_eigenvalues(lambda: [f64; 3], lambda_dot: [f64; 3]) -> Result<UnitalRates> {
    log_derivatives(lambda, lambda_dot).map(UnitalRates::from_log_derivatives)
}

/// Rates of a phase-covariant (possibly non-unital) map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonUnitalRates {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma3: f64,
}

impl NonUnitalRates {
    pub fn new(alpha: f64, beta: f64, gamma3: f64) -> Self {
        NonUnitalRates { alpha, beta, gamma_plus: alpha + beta, gamma_minus: alpha - beta, gamma3 }
    }

    /// `[γ+, γ−, γ3]`, the canonical decay rates.
    pub fn canonical(&self) -> [f64; 3] {
        [self.gamma_plus, self.gamma_minus, self.gamma3]
    }
}

/// `α = −λ̇3/(2λ3)`, `β = t3 λ̇3/(2λ3) − ṫ3/2`,
/// `γ3 = ¼(−λ̇1/λ1 − λ̇2/λ2 + λ̇3/λ3)`.
pub fn phase_covariant_rates(d: &MapDerivatives) -> Result<NonUnitalRates> {
    let l = log_derivatives(d.lambda, d.lambda_dot)?;
    let alpha = -0.5 * l[2];
    let beta = 0.5 * d.t3 * l[2] - 0.5 * d.t3_dot;
    let gamma3 = 0.25 * (-l[0] - l[1] + l[2]);
    Ok(NonUnitalRates::new(alpha, beta, gamma3))
}

pub fn nonunital_rates(spec: &NonUnitalFamilySpec, t: f64) -> Result<NonUnitalRates> {
    phase_covariant_rates(&spec.derivatives(t)?)
}

/// Bloch-form generator `ṙ = G r + g` obtained as `Ḟ F⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMatrix {
    pub linear: [[f64; 3]; 3],
    pub shift: [f64; 3],
    /// Step used for the finite differences.
    pub step: f64,
    /// Set when `t − h < 0` forced forward differences.
    pub one_sided: bool,
}

impl GeneratorMatrix {
    /// Unital Pauli rates read off the diagonal of `G`.
    pub fn pauli_rates(&self) -> UnitalRates {
        UnitalRates::from_log_derivatives([self.linear[0][0], self.linear[1][1], self.linear[2][2]])
    }

    /// `α = −G33/2`, `β = −g3/2`, `γ3 = ¼(−G11 − G22 + G33)`.
    pub fn phase_covariant_rates(&self) -> NonUnitalRates {
        let g = &self.linear;
        NonUnitalRates::new(-0.5 * g[2][2], -0.5 * self.shift[2], 0.25 * (-g[0][0] - g[1][1] + g[2][2]))
    }
}

/// Default finite-difference step `max(1e-5, 1e-4 t)`.
pub fn default_step(t: f64) -> f64 {
    (1e-4 * t).max(1e-5)
}

fn affine_lincomb(terms: &[(f64, &AffineRep)]) -> AffineRep {
    let mut out = AffineRep { linear: [[0.0; 3]; 3], shift: [0.0; 3] };
    for (w, f) in terms {
        for i in 0..3 {
            for j in 0..3 {
                out.linear[i][j] += w * f.linear[i][j];
            }
            out.shift[i] += w * f.shift[i];
        }
    }
    out
}

/// Generator of a trajectory of affine maps at time `t`.
///
/// Central differences with one Richardson step; falls back to second-order
/// forward differences (also Richardson-extrapolated) when `t − h < 0`.
pub fn generator_from_trajectory<F>(traj: F, t: f64, step: Option<f64>) -> Result<GeneratorMatrix>
where
    F: Fn(f64) -> Result<AffineRep>,
{
    let h = step.unwrap_or_else(|| default_step(t));
    if !(h > 0.0) {
        return Err(invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let here = traj(t)?;
    let inverse = invert_affine(&here)?;
    let one_sided = t - h < 0.0;

    let derivative = |h: f64| -> Result<AffineRep> {
        if one_sided {
            let f1 = traj(t + h)?;
            let f2 = traj(t + 2.0 * h)?;
            let k = 1.0 / (2.0 * h);
            Ok(affine_lincomb(&[(-3.0 * k, &here), (4.0 * k, &f1), (-k, &f2)]))
        } else {
            let fp = traj(t + h)?;
            let fm = traj(t - h)?;
            let k = 1.0 / (2.0 * h);
            Ok(affine_lincomb(&[(k, &fp), (-k, &fm)]))
        }
    };
    let coarse = derivative(h)?;
    let fine = derivative(0.5 * h)?;
    let d = affine_lincomb(&[(4.0 / 3.0, &fine), (-1.0 / 3.0, &coarse)]);

    // [[Λ̇, τ̇], [0, 0]] · [[Λ⁻¹, −Λ⁻¹τ], [0, 1]]
    let linear = matmul3(&d.linear, &inverse.linear);
    let moved = matvec3(&d.linear, &inverse.shift);
    let shift = std::array::from_fn(|k| moved[k] + d.shift[k]);
    Ok(GeneratorMatrix { linear, shift, step: h, one_sided })
}

/// Something that yields canonical decay rates on demand.
pub trait RateSource: Sync {
    fn rate_names(&self) -> Vec<&'static str>;

    fn rates_at(&self, t: f64) -> Result<Vec<f64>>;

    /// Natural inverse-time scale used to size grids.
    fn time_scale(&self) -> f64;

    /// Closed-form `t → ∞` limit of rate `index`, where one exists.
    fn exact_asymptote(&self, _index: usize) -> Option<f64> {
        None
    }

    /// The map itself, when the source knows it.
    fn affine_at(&self, _t: f64) -> Option<Result<AffineRep>> {
        None
    }

    /// At most one rate may be negative at any instant.
    fn single_negative_expected(&self) -> bool {
        false
    }
}

pub const UNITAL_RATE_NAMES: [&str; 3] = ["gamma1", "gamma2", "gamma3"];
pub const NONUNITAL_RATE_NAMES: [&str; 3] = ["gamma_plus", "gamma_minus", "gamma3"];

/// Weights treated as exactly zero when taking asymptotes.
const ZERO_WEIGHT: f64 = 1e-12;

impl RateSource for Family {
    fn rate_names(&self) -> Vec<&'static str> {
        if self.is_unital() {
            UNITAL_RATE_NAMES.to_vec()
        } else {
            NONUNITAL_RATE_NAMES.to_vec()
        }
    }

    fn rates_at(&self, t: f64) -> Result<Vec<f64>> {
        Ok(match self {
            Family::Identity => vec![0.0; 3],
            Family::Mixture { spec, profile } => pauli_rates_from_weights(spec, profile, t)?.gamma.to_vec(),
            Family::Depolarizing { .. } => {
                let d = self.derivatives(t)?;
                pauli_rates_from_eigenvalues(d.lambda, d.lambda_dot)?.gamma.to_vec()
            }
            Family::NonUnital(spec) => nonunital_rates(spec, t)?.canonical().to_vec(),
        })
    }

    fn time_scale(&self) -> f64 {
        Family::time_scale(self)
    }

    fn exact_asymptote(&self, index: usize) -> Option<f64> {
        if index >= 3 {
            return None;
        }
        match self {
            Family::Identity | Family::Depolarizing { .. } => Some(0.0),
            Family::Mixture { spec, profile } => {
                // f(x) → c/4 when x = 0 and → 0 otherwise.
                let z = spec.weights().map(|w| if w.abs() <= ZERO_WEIGHT { 1.0 } else { 0.0 });
                let total: f64 = z.iter().sum();
                Some(0.25 * profile.rate() * (total - 2.0 * z[index]))
            }
            Family::NonUnital(NonUnitalFamilySpec::AmplitudeDamping { gamma }) => {
                Some(NonUnitalRates::new(0.5 * gamma, -0.5 * gamma, 0.0).canonical()[index])
            }
            Family::NonUnital(NonUnitalFamilySpec::GeneralizedAmplitudeDamping { gamma, r_inf }) => {
                Some(NonUnitalRates::new(0.5 * gamma, -0.5 * gamma * r_inf, 0.0).canonical()[index])
            }
            Family::NonUnital(NonUnitalFamilySpec::PhaseCovariant(_)) => None,
        }
    }

    fn affine_at(&self, t: f64) -> Option<Result<AffineRep>> {
        Some(Family::affine_at(self, t))
    }

    fn single_negative_expected(&self) -> bool {
        self.is_convex_mixture()
    }
}

/// `t → ∞` behaviour of one rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Asymptote {
    Exact { value: f64 },
    Estimated { value: f64, uncertainty: f64 },
    Unbounded,
    Indeterminate,
}

impl Asymptote {
    pub fn value(&self) -> Option<f64> {
        match self {
            Asymptote::Exact { value } | Asymptote::Estimated { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn uncertainty(&self) -> Option<f64> {
        match self {
            Asymptote::Exact { .. } => Some(0.0),
            Asymptote::Estimated { uncertainty, .. } => Some(*uncertainty),
            _ => None,
        }
    }
}

/// Asymptotic horizon `T = 50 / scale`.
pub fn default_horizon(scale: f64) -> f64 {
    50.0 / scale
}

pub const TAIL_GRID_POINTS: usize = 400;

/// Limit of rate `index` as `t → ∞`: exact where the source knows it,
/// otherwise estimated from the last decade of a 400-point log grid on
/// `[T·1e-4, T]`.
pub fn asymptotic_rate<S: RateSource + ?Sized>(source: &S, index: usize) -> Asymptote {
    if let Some(value) = source.exact_asymptote(index) {
        return Asymptote::Exact { value };
    }
    tail_estimate(source, index, default_horizon(source.time_scale()))
}

pub fn tail_estimate<S: RateSource + ?Sized>(source: &S, index: usize, horizon: f64) -> Asymptote {
    let start = horizon * 1e-4;
    let ratio = (horizon / start).ln() / (TAIL_GRID_POINTS - 1) as f64;
    let tail: Vec<(f64, f64)> = (0..TAIL_GRID_POINTS)
        .map(|k| start * (ratio * k as f64).exp())
        .filter(|t| *t >= horizon / 10.0 * (1.0 - 1e-12))
        .filter_map(|t| source.rates_at(t).ok().and_then(|r| r.get(index).copied()).map(|v| (t, v)))
        .collect();
    let Some(&(_, last)) = tail.last() else {
        return Asymptote::Indeterminate;
    };
    if !last.is_finite() || last.abs() > 1e6 * source.time_scale() {
        return Asymptote::Unbounded;
    }
    let value_near = |t: f64| {
        tail.iter().min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs())).map(|p| p.1).unwrap_or(last)
    };
    let mid = value_near(horizon / 10f64.sqrt());
    let first = tail[0].1;
    let late_change = (last - mid).abs();
    let early_change = (mid - first).abs();
    let converged = late_change <= early_change.max(1e-15) && late_change <= 1e-3 * source.time_scale();
    if converged {
        Asymptote::Estimated { value: last, uncertainty: late_change }
    } else {
        Asymptote::Indeterminate
    }
}
