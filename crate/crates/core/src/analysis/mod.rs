//! Markovianity analysis: rate timelines, verdicts and positivity witnesses.

mod classify;
mod timeline;
mod witness;

pub use classify::{classify, ChoiSummary, ClassificationReport, GridSummary, Tolerances, Verdict};
pub use timeline::{build_timeline, time_grid, RIGHT_LIMIT, Crossing, CrossingKind, RateSample, RateTimeline, TimelineOptions};
pub use witness::{
    blp_scan, cp_screen, divisibility_scan, linear_grid, BlpReport, CpPoint, CpScreen, DivisibilityReport,
    IncreaseInterval, PropagatorPair, CP_TOLERANCE, INCREASE_TOLERANCE,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rates::RateSource;

/// Default zero tolerance on rates.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
/// Default minimum asymptotic magnitude for a strong verdict.
pub const DEFAULT_DELTA_MIN: f64 = 1e-4;
/// Default timeline size.
pub const DEFAULT_SAMPLES: usize = 400;
/// Default divisibility grid size per axis.
pub const DEFAULT_DIVISIBILITY_GRID: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Horizon `T`; `None` means `50 / scale`.
    pub horizon: Option<f64>,
    pub samples: usize,
    pub delta_min: f64,
    pub zero_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { horizon: None, samples: DEFAULT_SAMPLES, delta_min: DEFAULT_DELTA_MIN, zero_tol: DEFAULT_ZERO_TOL }
    }
}

/// Timeline plus verdict in one call.
pub fn analyze<S: RateSource + ?Sized>(source: &S, opts: &AnalysisOptions) -> Result<ClassificationReport> {
    let timeline = build_timeline(
        source,
        &TimelineOptions { horizon: opts.horizon, samples: opts.samples, zero_tol: opts.zero_tol },
    )?;
    Ok(classify(&timeline, opts.delta_min, opts.zero_tol))
}
