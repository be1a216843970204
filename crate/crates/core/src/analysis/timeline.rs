use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::choi_from_affine;
use crate::error::{invalid, Result};
use crate::rates::{asymptotic_rate, default_horizon, Asymptote, RateSource};

/// Rates at `t = 0` are taken at `t = RIGHT_LIMIT / scale`.
pub const RIGHT_LIMIT: f64 = 1e-12;

const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineOptions {
    pub horizon: Option<f64>,
    pub samples: usize,
    /// Band around zero in which samples count as neither sign.
    pub zero_tol: f64,
}

impl Default for TimelineOptions {
    fn default() -> Self {
        TimelineOptions { horizon: None, samples: super::DEFAULT_SAMPLES, zero_tol: super::DEFAULT_ZERO_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    pub t: f64,
    /// `None` records an evaluation failure (a gap).
    pub rates: Option<Vec<f64>>,
    pub error: Option<String>,
    pub min_choi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    /// The rate passes through zero.
    Zero,
    /// The sign flips across a pole of the rate.
    Pole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub rate: usize,
    pub t: f64,
    /// True when the rate goes from positive to negative.
    pub to_negative: bool,
    pub kind: CrossingKind,
    /// Width of the final bisection bracket.
    pub bracket: f64,
}

/// Sampled canonical rates on a deterministic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTimeline {
    pub rate_names: Vec<String>,
    pub samples: Vec<RateSample>,
    /// Time actually used for the `t = 0` sample.
    pub right_limit_time: f64,
    pub horizon: f64,
    pub time_scale: f64,
    pub zero_tol: f64,
    /// Sorted by time.
    pub crossings: Vec<Crossing>,
    pub asymptotes: Vec<Asymptote>,
    pub single_negative_expected: bool,
}

impl RateTimeline {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Values of one rate, `None` at gaps.
    pub fn rate_values(&self, index: usize) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.rates.as_ref().map(|r| r[index])).collect()
    }

    pub fn crossings_of(&self, index: usize) -> impl Iterator<Item = &Crossing> {
        self.crossings.iter().filter(move |c| c.rate == index)
    }

    pub fn gaps(&self) -> usize {
        self.samples.iter().filter(|s| s.rates.is_none()).count()
    }
}

/// Linear on `[0, 10/scale]` (half of the points), then logarithmic up to
/// the horizon. Purely linear when the horizon is shorter than `10/scale`.
pub fn time_grid(scale: f64, horizon: f64, n: usize) -> Vec<f64> {
    let lin_end = 10.0 / scale;
    if horizon <= lin_end {
        return (0..n).map(|k| horizon * k as f64 / (n - 1) as f64).collect();
    }
    let n_lin = n / 2;
    let n_log = n - n_lin;
    let mut grid: Vec<f64> = (0..n_lin).map(|k| lin_end * k as f64 / n_lin as f64).collect();
    let ratio = (horizon / lin_end).ln() / (n_log - 1) as f64;
    grid.extend((0..n_log).map(|k| if k + 1 == n_log { horizon } else { lin_end * (ratio * k as f64).exp() }));
    grid
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sign {
    Pos,
    Neg,
    Zero,
}

fn sign_of(v: f64, tol: f64) -> Sign {
    if v > tol {
        Sign::Pos
    } else if v < -tol {
        Sign::Neg
    } else {
        Sign::Zero
    }
}

pub fn build_timeline<S: RateSource + ?Sized>(source: &S, opts: &TimelineOptions) -> Result<RateTimeline> {
    let scale = source.time_scale();
    let horizon = opts.horizon.unwrap_or_else(|| default_horizon(scale));
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid(format!("timeline horizon must be positive, got {horizon}")));
    }
    if opts.samples < 16 {
        return Err(invalid(format!("timeline needs at least 16 samples, got {}", opts.samples)));
    }
    let right_limit_time = RIGHT_LIMIT / scale;
    let eval_time = |t: f64| if t == 0.0 { right_limit_time } else { t };

    let grid = time_grid(scale, horizon, opts.samples);
    let samples: Vec<RateSample> = grid
        .par_iter()
        .map(|&t| {
            let (rates, error) = match source.rates_at(eval_time(t)) {
                Ok(r) if r.iter().all(|v| v.is_finite()) => (Some(r), None),
                Ok(_) => (None, Some("non-finite rate".to_string())),
                Err(e) => (None, Some(e.to_string())),
            };
            let min_choi = source
                .affine_at(t)
                .and_then(|f| f.ok())
                .and_then(|f| choi_from_affine(&f).min_eigenvalue().ok());
            RateSample { t, rates, error, min_choi }
        })
        .collect();

    let names = source.rate_names();
    let mut crossings = Vec::new();
    for index in 0..names.len() {
        let mut last: Option<(f64, Sign)> = None;
        for (k, s) in samples.iter().enumerate() {
            let Some(v) = s.rates.as_ref().map(|r| r[index]) else { continue };
            let sign = sign_of(v, opts.zero_tol);
            if sign == Sign::Zero {
                continue;
            }
            let t = if k == 0 { right_limit_time } else { s.t };
            if let Some((t_prev, prev)) = last {
                if prev != sign {
                    crossings.push(bisect(source, index, t_prev, t, sign == Sign::Neg, scale));
                }
            }
            last = Some((t, sign));
        }
    }
    crossings.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.rate.cmp(&b.rate)));

    let asymptotes = (0..names.len()).map(|i| asymptotic_rate(source, i)).collect();

    Ok(RateTimeline {
        rate_names: names.into_iter().map(String::from).collect(),
        samples,
        right_limit_time,
        horizon,
        time_scale: scale,
        zero_tol: opts.zero_tol,
        crossings,
        asymptotes,
        single_negative_expected: source.single_negative_expected(),
    })
}

/// Refines a sign change of rate `index` inside `[lo, hi]` down to
/// floating-point resolution.
fn bisect<S: RateSource + ?Sized>(source: &S, index: usize, lo: f64, hi: f64, to_negative: bool, scale: f64) -> Crossing {
    let value = |t: f64| source.rates_at(t).ok().map(|r| r[index]).filter(|v| v.is_finite());
    let (mut a, mut b) = (lo, hi);
    let mut va = value(a);
    let mut vb = value(b);
    let mut singular = false;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let Some(vm) = value(mid) else {
            singular = true;
            break;
        };
        let left_positive = to_negative;
        if (vm > 0.0) == left_positive {
            a = mid;
            va = Some(vm);
        } else {
            b = mid;
            vb = Some(vm);
        }
    }
    // A true zero leaves small values at the bracket ends; a pole leaves huge ones.
    let magnitude = va.unwrap_or(f64::INFINITY).abs().min(vb.unwrap_or(f64::INFINITY).abs());
    let kind = if !singular && magnitude <= 1e3 * scale { CrossingKind::Zero } else { CrossingKind::Pole };
    Crossing { rate: index, t: 0.5 * (a + b), to_negative, kind, bracket: b - a }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Family, PauliAxis};

    fn timeline(f: &Family, n: usize) -> RateTimeline {
        build_timeline(f, &TimelineOptions { samples: n, ..Default::default() }).unwrap()
    }

    #[test]
    fn grid_is_increasing_and_starts_at_zero() {
        for (scale, horizon, n) in [(1.0, 50.0, 400), (2.0, 25.0, 17), (1.0, 5.0, 16), (0.3, 200.0, 801)] {
            let g = time_grid(scale, horizon, n);
            assert_eq!(g.len(), n);
            assert_eq!(g[0], 0.0);
            assert_eq!(*g.last().unwrap(), horizon);
            assert!(g.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn hall_map_has_no_crossing() {
        let hall = Family::mixture([0.5, 0.5, 0.0], 2.0).unwrap();
        let tl = timeline(&hall, 400);
        assert_eq!(tl.crossings_of(2).count(), 0);
        assert!(tl.rate_values(2).iter().skip(1).all(|v| v.unwrap() < 0.0));
    }

    #[test]
    fn example_two_crosses_once_at_ln6() {
        let fam = Family::mixture([0.2, 0.4, 0.4], 1.0).unwrap();
        let tl = timeline(&fam, 400);
        let crossings: Vec<_> = tl.crossings_of(0).collect();
        assert_eq!(crossings.len(), 1);
        assert!(crossings[0].to_negative);
        assert_eq!(crossings[0].kind, CrossingKind::Zero);
        assert!((crossings[0].t - 6f64.ln()).abs() < 1e-12);
        assert!(crossings[0].bracket <= 1e-8 * tl.horizon);
    }

    #[test]
    fn semigroup_has_no_crossings() {
        let tl = timeline(&Family::semigroup(PauliAxis::Y, 1.0).unwrap(), 64);
        assert!(tl.crossings.is_empty());
    }

    #[test]
    fn singularities_become_gaps() {
        // λ3 of the affine mixture vanishes at t = ln 6.
        let fam = Family::mixture([0.6, 0.6, -0.2], 1.0).unwrap();
        let tl = build_timeline(&fam, &TimelineOptions { horizon: Some(6f64.ln() * 2.0), samples: 3, ..Default::default() });
        assert!(tl.is_err());
        let tl = build_timeline(&fam, &TimelineOptions { horizon: Some(6f64.ln() * 2.0), samples: 17, ..Default::default() }).unwrap();
        assert_eq!(tl.gaps(), 1);
        let pole = tl.crossings_of(2).find(|c| c.kind == CrossingKind::Pole).expect("pole crossing");
        assert!((pole.t - 6f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_options() {
        let f = Family::Identity;
        assert!(build_timeline(&f, &TimelineOptions { samples: 8, ..Default::default() }).is_err());
        assert!(build_timeline(&f, &TimelineOptions { horizon: Some(-1.0), ..Default::default() }).is_err());
    }
}
