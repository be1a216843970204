use serde::{Deserialize, Serialize};

use super::timeline::{CrossingKind, RateTimeline};
use crate::rates::Asymptote;

/// Min Choi eigenvalue below this counts as a positivity witness.
pub const WITNESS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Markovian,
    #[serde(rename = "ENM_strong")]
    EnmStrong,
    #[serde(rename = "ENM_weak")]
    EnmWeak,
    #[serde(rename = "QENM_strong")]
    QenmStrong,
    #[serde(rename = "QENM_weak")]
    QenmWeak,
    NonCP,
    Indeterminate,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Markovian => "Markovian",
            Verdict::EnmStrong => "ENM_strong",
            Verdict::EnmWeak => "ENM_weak",
            Verdict::QenmStrong => "QENM_strong",
            Verdict::QenmWeak => "QENM_weak",
            Verdict::NonCP => "NonCP",
            Verdict::Indeterminate => "Indeterminate",
        }
    }

    pub fn is_enm(self) -> bool {
        matches!(self, Verdict::EnmStrong | Verdict::EnmWeak)
    }

    pub fn is_qenm(self) -> bool {
        matches!(self, Verdict::QenmStrong | Verdict::QenmWeak)
    }

    /// Lower is more severe; used to pick the reported rate.
    fn severity(self) -> u8 {
        match self {
            Verdict::EnmStrong => 0,
            Verdict::EnmWeak => 1,
            Verdict::QenmStrong => 2,
            Verdict::QenmWeak => 3,
            _ => 4,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub zero_tol: f64,
    pub delta_min: f64,
    pub witness_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiSummary {
    pub min: f64,
    pub t_at_min: f64,
    /// First sampled time with a negative witness.
    pub first_negative_t: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub samples: usize,
    pub horizon: f64,
    pub right_limit_time: f64,
    pub gaps: usize,
    pub crossings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub offending_index: Option<usize>,
    pub offending_rate: Option<String>,
    /// Onset of eternal negativity; `0` for ENM verdicts.
    pub t_star: Option<f64>,
    pub asymptote: Option<f64>,
    pub asymptote_uncertainty: Option<f64>,
    pub asymptote_kind: Option<String>,
    /// Bound on the limiting magnitude for strong verdicts.
    pub delta: Option<f64>,
    pub rate_names: Vec<String>,
    /// Right-limit values at `t = 0`.
    pub rates_at_zero: Option<Vec<f64>>,
    pub min_choi: Option<ChoiSummary>,
    pub tolerances: Tolerances,
    pub grid: GridSummary,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Strength {
    Strong,
    Weak,
    Unknown,
}

enum RateBehaviour {
    Nonnegative,
    Transient,
    Eternal { onset: f64, enm: bool },
}

fn asymptote_kind(a: &Asymptote) -> &'static str {
    match a {
        Asymptote::Exact { .. } => "exact",
        Asymptote::Estimated { .. } => "estimated",
        Asymptote::Unbounded => "unbounded",
        Asymptote::Indeterminate => "indeterminate",
    }
}

pub fn classify(timeline: &RateTimeline, delta_min: f64, zero_tol: f64) -> ClassificationReport {
    let n_rates = timeline.rate_names.len();
    let mut diagnostics = Vec::new();
    let min_choi = choi_summary(timeline);
    let rates_at_zero = timeline.samples.first().and_then(|s| s.rates.clone());

    let mut report = ClassificationReport {
        verdict: Verdict::Markovian,
        offending_index: None,
        offending_rate: None,
        t_star: None,
        asymptote: None,
        asymptote_uncertainty: None,
        asymptote_kind: None,
        delta: None,
        rate_names: timeline.rate_names.clone(),
        rates_at_zero: rates_at_zero.clone(),
        min_choi,
        tolerances: Tolerances { zero_tol, delta_min, witness_tol: WITNESS_TOLERANCE },
        grid: GridSummary {
            samples: timeline.samples.len(),
            horizon: timeline.horizon,
            right_limit_time: timeline.right_limit_time,
            gaps: timeline.gaps(),
            crossings: timeline.crossings.len(),
        },
        diagnostics: Vec::new(),
    };
    if report.grid.gaps > 0 {
        diagnostics.push(format!("{} grid points could not be evaluated", report.grid.gaps));
    }

    let Some(at_zero) = rates_at_zero else {
        diagnostics.push("rates at t=0 could not be evaluated".into());
        report.verdict = Verdict::Indeterminate;
        report.diagnostics = diagnostics;
        return report;
    };

    // Negative at the origin: the map cannot be completely positive.
    if let Some(i) = (0..n_rates).find(|&i| at_zero[i] < -zero_tol) {
        report.offending_index = Some(i);
        report.offending_rate = Some(timeline.rate_names[i].clone());
        let witnessed = min_choi.is_some_and(|c| c.first_negative_t.is_some());
        if witnessed {
            report.verdict = Verdict::NonCP;
        } else {
            report.verdict = Verdict::Indeterminate;
            diagnostics.push(format!(
                "{} is negative at t=0 but no negative Choi eigenvalue was found",
                timeline.rate_names[i]
            ));
        }
        report.diagnostics = diagnostics;
        return report;
    }

    if timeline.single_negative_expected {
        let clash = timeline.samples.iter().skip(1).find(|s| {
            s.rates.as_ref().is_some_and(|r| r.iter().filter(|&&v| v < -zero_tol).count() >= 2)
        });
        if let Some(s) = clash {
            report.verdict = Verdict::Indeterminate;
            diagnostics.push(format!("two rates are negative simultaneously at t={}", s.t));
            report.diagnostics = diagnostics;
            return report;
        }
    }

    let mut best: Option<(Verdict, usize, f64)> = None;
    let mut transient = Vec::new();
    let mut unknown_strength = Vec::new();
    for i in 0..n_rates {
        let values = timeline.rate_values(i);
        match behaviour(timeline, &values, i, zero_tol) {
            RateBehaviour::Nonnegative => {}
            RateBehaviour::Transient => transient.push(i),
            RateBehaviour::Eternal { onset, enm } => {
                let strength = strength(&timeline.asymptotes[i], &values, delta_min, zero_tol);
                let verdict = match (enm, strength) {
                    (_, Strength::Unknown) => {
                        unknown_strength.push(i);
                        continue;
                    }
                    (true, Strength::Strong) => Verdict::EnmStrong,
                    (true, Strength::Weak) => Verdict::EnmWeak,
                    (false, Strength::Strong) => Verdict::QenmStrong,
                    (false, Strength::Weak) => Verdict::QenmWeak,
                };
                if best.is_none_or(|(b, _, _)| verdict.severity() < b.severity()) {
                    best = Some((verdict, i, onset));
                }
            }
        }
    }

    for &i in &transient {
        diagnostics.push(format!("{} is negative only on a finite interval", timeline.rate_names[i]));
    }
    for &i in &unknown_strength {
        diagnostics.push(format!("asymptote of {} could not be resolved", timeline.rate_names[i]));
    }

    if let Some((verdict, i, onset)) = best {
        let asym = &timeline.asymptotes[i];
        report.verdict = if transient.is_empty() && unknown_strength.is_empty() { verdict } else { Verdict::Indeterminate };
        report.offending_index = Some(i);
        report.offending_rate = Some(timeline.rate_names[i].clone());
        report.t_star = Some(onset);
        report.asymptote = asym.value();
        report.asymptote_uncertainty = asym.uncertainty();
        report.asymptote_kind = Some(asymptote_kind(asym).into());
        if matches!(verdict, Verdict::EnmStrong | Verdict::QenmStrong) {
            report.delta = asym.value().map(|v| -v);
            let tail_start = timeline.horizon / 10.0;
            let lagging = timeline
                .samples
                .iter()
                .filter(|s| s.t >= tail_start)
                .any(|s| s.rates.as_ref().is_some_and(|r| r[i] > -delta_min));
            if lagging {
                diagnostics.push(format!("{} has not settled below -delta_min on the tail window", timeline.rate_names[i]));
            }
        }
    } else if !transient.is_empty() || !unknown_strength.is_empty() {
        report.verdict = Verdict::Indeterminate;
    }
    report.diagnostics = diagnostics;
    report
}

fn behaviour(timeline: &RateTimeline, values: &[Option<f64>], index: usize, zero_tol: f64) -> RateBehaviour {
    let Some(first_neg) = values.iter().skip(1).position(|v| v.is_some_and(|v| v < -zero_tol)).map(|k| k + 1) else {
        return RateBehaviour::Nonnegative;
    };
    if values[first_neg..].iter().any(|v| v.is_some_and(|v| v > zero_tol)) {
        return RateBehaviour::Transient;
    }
    let positive_before = values[1..first_neg].iter().any(|v| v.is_some_and(|v| v > zero_tol));
    let at_origin_zero = values[0].is_some_and(|v| v.abs() <= zero_tol);
    if !positive_before && at_origin_zero {
        return RateBehaviour::Eternal { onset: 0.0, enm: true };
    }
    let t_neg = timeline.samples[first_neg].t;
    let onset = timeline
        .crossings_of(index)
        .filter(|c| c.to_negative && c.kind == CrossingKind::Zero && c.t <= t_neg)
        .last()
        .map_or(t_neg, |c| c.t);
    RateBehaviour::Eternal { onset, enm: false }
}

fn strength(asymptote: &Asymptote, values: &[Option<f64>], delta_min: f64, zero_tol: f64) -> Strength {
    match *asymptote {
        Asymptote::Exact { value } => {
            if value <= -delta_min {
                Strength::Strong
            } else if value <= zero_tol {
                Strength::Weak
            } else {
                Strength::Unknown
            }
        }
        Asymptote::Estimated { value, uncertainty } => {
            if value + uncertainty <= -delta_min {
                Strength::Strong
            } else if value - uncertainty <= zero_tol {
                Strength::Weak
            } else {
                Strength::Unknown
            }
        }
        Asymptote::Unbounded => match values.iter().rev().flatten().next() {
            Some(&v) if v < -zero_tol => Strength::Strong,
            _ => Strength::Unknown,
        },
        Asymptote::Indeterminate => Strength::Unknown,
    }
}

fn choi_summary(timeline: &RateTimeline) -> Option<ChoiSummary> {
    let points: Vec<(f64, f64)> = timeline.samples.iter().filter_map(|s| s.min_choi.map(|m| (s.t, m))).collect();
    let &(t_at_min, min) = points.iter().min_by(|a, b| a.1.total_cmp(&b.1))?;
    Some(ChoiSummary {
        min,
        t_at_min,
        first_negative_t: points.iter().find(|p| p.1 < -WITNESS_TOLERANCE).map(|p| p.0),
        samples: points.len(),
    })
}
