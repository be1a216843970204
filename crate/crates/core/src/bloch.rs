//! Bloch-equation integration for phase-covariant rates.
//!
//! The state obeys `ṙ1,2 = −(α + 2γ3) r1,2` and `ṙ3 = −2α r3 − 2β`, with
//! `α`, `β`, `γ3` as in [`crate::rates::NonUnitalRates`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::BlochVector;
use crate::error::{invalid, Error, Result};
use crate::families::Family;
use crate::rates::phase_covariant_rates;

/// Excess of `|r|` over 1 reported as leaving the Bloch ball.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;

/// Samples used to check the escape precondition.
const PRECONDITION_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma3: f64,
}

impl BlochCoefficients {
    pub fn gamma_minus(&self) -> f64 {
        self.alpha - self.beta
    }

    pub fn derivative(&self, r: [f64; 3]) -> [f64; 3] {
        let transverse = -(self.alpha + 2.0 * self.gamma3);
        [transverse * r[0], transverse * r[1], -2.0 * self.alpha * r[2] - 2.0 * self.beta]
    }
}

type CoefficientFn = Arc<dyn Fn(f64) -> Result<BlochCoefficients> + Send + Sync>;

/// Time-dependent `α`, `β`, `γ3`.
#[derive(Clone)]
pub struct RateFunctions {
    eval: CoefficientFn,
}

impl std::fmt::Debug for RateFunctions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RateFunctions").finish_non_exhaustive()
    }
}

impl RateFunctions {
    pub fn constant(alpha: f64, beta: f64, gamma3: f64) -> Self {
        let c = BlochCoefficients { alpha, beta, gamma3 };
        RateFunctions { eval: Arc::new(move |_| Ok(c)) }
    }

    pub fn from_fns<A, B, G>(alpha: A, beta: B, gamma3: G) -> Self
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        RateFunctions { eval: Arc::new(move |t| Ok(BlochCoefficients { alpha: alpha(t), beta: beta(t), gamma3: gamma3(t) })) }
    }

    pub fn from_evaluator<F>(f: F) -> Self
    where
        F: Fn(f64) -> Result<BlochCoefficients> + Send + Sync + 'static,
    {
        RateFunctions { eval: Arc::new(f) }
    }

    /// Rates of a phase-covariant family, read off its analytic derivatives.
    pub fn from_family(family: &Family) -> Result<Self> {
        if !family.is_phase_covariant() {
            return Err(invalid("Bloch equations need a phase-covariant family (w1 = w2)"));
        }
        let family = family.clone();
        Ok(Self::from_evaluator(move |t| {
            let r = phase_covariant_rates(&family.derivatives(t)?)?;
            Ok(BlochCoefficients { alpha: r.alpha, beta: r.beta, gamma3: r.gamma3 })
        }))
    }

    pub fn at(&self, t: f64) -> Result<BlochCoefficients> {
        (self.eval)(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlochComponent {
    R1,
    R2,
    R3,
}

impl BlochComponent {
    fn dominant(r: BlochVector) -> Self {
        let a = r.to_array().map(f64::abs);
        if a[2] >= a[0] && a[2] >= a[1] {
            BlochComponent::R3
        } else if a[1] >= a[0] {
            BlochComponent::R2
        } else {
            BlochComponent::R1
        }
    }
}

/// First node at which `|r| > 1 + tol`; `component` is the largest coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub component: BlochComponent,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochVector>,
    pub step: f64,
    pub first_violation: Option<Violation>,
    /// Set when a rate evaluation failed; the trajectory stops before it.
    pub error: Option<String>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }

    pub fn last(&self) -> BlochVector {
        *self.states.last().expect("trajectory holds the initial state")
    }
}

fn axpy(a: f64, x: [f64; 3], y: [f64; 3]) -> [f64; 3] {
    [y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2]]
}

fn rk4_step(rates: &RateFunctions, t: f64, h: f64, r: [f64; 3]) -> Result<[f64; 3]> {
    let k1 = rates.at(t)?.derivative(r);
    let mid = rates.at(t + 0.5 * h)?;
    let k2 = mid.derivative(axpy(0.5 * h, k1, r));
    let k3 = mid.derivative(axpy(0.5 * h, k2, r));
    let k4 = rates.at(t + h)?.derivative(axpy(h, k3, r));
    Ok(std::array::from_fn(|i| r[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

/// Fixed-step RK4 on `[0, T]`. The step is shrunk to `T/n` so the grid ends
/// exactly at `T`.
pub fn integrate(rates: &RateFunctions, r0: BlochVector, horizon: f64, step: f64) -> Result<Trajectory> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid(format!("integration horizon must be positive, got {horizon}")));
    }
    if !(step > 0.0) || step > horizon / 10.0 {
        return Err(invalid(format!("step must lie in (0, T/10], got {step} for T = {horizon}")));
    }
    if !r0.to_array().iter().all(|v| v.is_finite()) {
        return Err(invalid("initial Bloch vector must be finite"));
    }
    let n = (horizon / step - 1e-9).ceil() as usize;
    let h = horizon / n as f64;
    let mut traj = Trajectory { times: vec![0.0], states: vec![r0], step: h, first_violation: None, error: None };
    let check = |traj: &mut Trajectory, t: f64, r: BlochVector| {
        let norm = r.norm();
        if traj.first_violation.is_none() && norm > 1.0 + VIOLATION_TOLERANCE {
            traj.first_violation = Some(Violation { t, component: BlochComponent::dominant(r), norm });
        }
    };
    check(&mut traj, 0.0, r0);
    let mut r = r0.to_array();
    for k in 0..n {
        let t = k as f64 * h;
        match rk4_step(rates, t, h, r) {
            Ok(next) => r = next,
            Err(e) => {
                traj.error = Some(format!("rate evaluation failed near t={t}: {e}"));
                break;
            }
        }
        let t_next = (k + 1) as f64 * h;
        let state = BlochVector::from_array(r);
        traj.times.push(t_next);
        traj.states.push(state);
        check(&mut traj, t_next, state);
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub delta: f64,
    /// First time with `r3 < −1 − tol`, interpolated between nodes.
    pub escape_time: f64,
    /// `(1 + r3(0)) / (2δ)`.
    pub bound: f64,
    /// `1/(2δ)`, checked only when `r3(0) ≤ 0`.
    pub origin_bound: Option<f64>,
    pub step: f64,
}

/// Integrates rates with `α − β ≤ −δ` until `r3` leaves the ball.
pub fn positivity_escape(delta: f64, rates: &RateFunctions, r0: BlochVector, step: f64) -> Result<EscapeReport> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid(format!("step must be positive, got {step}")));
    }
    let bound = (1.0 + r0.r3).max(0.0) / (2.0 * delta);
    let horizon = (2.0 * bound).max(10.0 * step);
    for k in 0..=PRECONDITION_SAMPLES {
        let t = horizon * k as f64 / PRECONDITION_SAMPLES as f64;
        let g = rates.at(t)?.gamma_minus();
        if g > -delta + 1e-12 {
            return Err(invalid(format!("alpha - beta = {g} exceeds -delta = {} at t={t}", -delta)));
        }
    }

    let traj = integrate(rates, r0, horizon, step)?;
    let threshold = -1.0 - VIOLATION_TOLERANCE;
    let k = traj.states.iter().position(|s| s.r3 < threshold).ok_or_else(|| {
        Error::ContractViolation(match &traj.error {
            Some(e) => format!("no escape before the integration stopped: {e}"),
            None => format!("r3 stayed inside the ball up to t={horizon}"),
        })
    })?;
    let escape_time = if k == 0 {
        0.0
    } else {
        let (t0, t1) = (traj.times[k - 1], traj.times[k]);
        let (a, b) = (traj.states[k - 1].r3, traj.states[k].r3);
        t0 + (t1 - t0) * (a - threshold) / (a - b)
    };
    if escape_time > bound + traj.step {
        return Err(Error::ContractViolation(format!("escape at t={escape_time} exceeds the bound {bound} by more than one step")));
    }
    let origin_bound = (r0.r3 <= 0.0).then(|| 1.0 / (2.0 * delta));
    if let Some(b) = origin_bound {
        if escape_time > b + traj.step {
            return Err(Error::ContractViolation(format!("escape at t={escape_time} exceeds 1/(2 delta) = {b}")));
        }
    }
    Ok(EscapeReport { delta, escape_time, bound, origin_bound, step: traj.step })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub max_deviation: f64,
    pub at_time: f64,
    pub nodes: usize,
}

/// Largest Euclidean gap between the integrated state and the closed-form
/// map applied to `r0`.
pub fn consistency_check(family: &Family, r0: BlochVector, horizon: f64, step: f64) -> Result<ConsistencyReport> {
    let traj = integrate(&RateFunctions::from_family(family)?, r0, horizon, step)?;
    if let Some(e) = traj.error {
        return Err(Error::Numeric(e));
    }
    let mut report = ConsistencyReport { max_deviation: 0.0, at_time: 0.0, nodes: traj.times.len() };
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        let exact = family.affine_at(t)?.apply(r0).to_array();
        let d = s.to_array().iter().zip(exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if d > report.max_deviation {
            report = ConsistencyReport { max_deviation: d, at_time: t, ..report };
        }
    }
    Ok(report)
}
