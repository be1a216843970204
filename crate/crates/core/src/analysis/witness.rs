use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    apply_affine, bloch_from_density, bloch_trace_distance, choi_from_affine, compose_affine, invert_affine, AffineRep,
    BlochVector, DensityMatrix,
};
use crate::error::{invalid, Result};

/// Min Choi eigenvalue tolerated before a map counts as not CP.
pub const CP_TOLERANCE: f64 = 1e-10;
/// Smallest rise in trace distance reported as an increase.
pub const INCREASE_TOLERANCE: f64 = 1e-10;

/// `n` evenly spaced points on `[0, t_max]`.
pub fn linear_grid(t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(invalid(format!("grid end must be positive, got {t_max}")));
    }
    if n < 2 {
        return Err(invalid(format!("grid needs at least 2 points, got {n}")));
    }
    Ok((0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect())
}

fn min_choi(f: &AffineRep) -> Result<f64> {
    choi_from_affine(f).min_eigenvalue()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpPoint {
    pub t: f64,
    pub min_eigenvalue: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpScreen {
    pub points: Vec<CpPoint>,
    pub tolerance: f64,
    pub first_violation: Option<f64>,
}

impl CpScreen {
    pub fn is_cp(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Min Choi eigenvalue along a trajectory.
pub fn cp_screen<F>(traj: F, times: &[f64], tolerance: f64) -> CpScreen
where
    F: Fn(f64) -> Result<AffineRep> + Sync,
{
    let points: Vec<CpPoint> = times
        .par_iter()
        .map(|&t| match traj(t).and_then(|f| min_choi(&f)) {
            Ok(m) => CpPoint { t, min_eigenvalue: Some(m), error: None },
            Err(e) => CpPoint { t, min_eigenvalue: None, error: Some(e.to_string()) },
        })
        .collect();
    let first_violation = points.iter().find(|p| p.min_eigenvalue.is_some_and(|m| m < -tolerance)).map(|p| p.t);
    CpScreen { points, tolerance, first_violation }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorPair {
    pub t1: f64,
    pub t2: f64,
    /// `None` when the pair was skipped.
    pub min_eigenvalue: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisibilityReport {
    /// Pairs with `t2 ≥ t1`, ordered by `t1` then `t2`.
    pub pairs: Vec<PropagatorPair>,
    pub tolerance: f64,
    pub skipped: usize,
    pub cp_divisible: bool,
}

impl DivisibilityReport {
    pub fn violations(&self) -> impl Iterator<Item = &PropagatorPair> {
        let tol = self.tolerance;
        self.pairs.iter().filter(move |p| p.min_eigenvalue.is_some_and(|m| m < -tol))
    }
}

/// Intermediate propagators `K(t2, t1) = F(t2) F(t1)⁻¹` for every
/// `t1 ≤ t2` drawn from `times`.
pub fn divisibility_scan<F>(traj: F, times: &[f64], tolerance: f64) -> Result<DivisibilityReport>
where
    F: Fn(f64) -> Result<AffineRep> + Sync,
{
    let maps: Vec<AffineRep> = times.par_iter().map(|&t| traj(t)).collect::<Result<_>>()?;
    let inverses: Vec<Result<AffineRep>> = maps.par_iter().map(invert_affine).collect();
    let index_pairs: Vec<(usize, usize)> =
        (0..times.len()).flat_map(|i| (0..times.len()).filter(move |&j| times[j] >= times[i]).map(move |j| (i, j))).collect();
    let pairs: Vec<PropagatorPair> = index_pairs
        .par_iter()
        .map(|&(i, j)| {
            let (t1, t2) = (times[i], times[j]);
            let result = inverses[i].as_ref().map_err(|e| e.to_string()).and_then(|inv| {
                min_choi(&compose_affine(&maps[j], inv)).map_err(|e| e.to_string())
            });
            match result {
                Ok(m) => PropagatorPair { t1, t2, min_eigenvalue: Some(m), skipped: None },
                Err(e) => PropagatorPair { t1, t2, min_eigenvalue: None, skipped: Some(e) },
            }
        })
        .collect();
    let skipped = pairs.iter().filter(|p| p.skipped.is_some()).count();
    let cp_divisible = pairs.iter().all(|p| p.min_eigenvalue.is_none_or(|m| m >= -tolerance));
    Ok(DivisibilityReport { pairs, tolerance, skipped, cp_divisible })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncreaseInterval {
    pub start: f64,
    pub end: f64,
    pub rise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlpReport {
    pub states: [BlochVector; 2],
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub increases: Vec<IncreaseInterval>,
    pub monotone: bool,
}

/// Trace distance between the evolved pair along a trajectory.
pub fn blp_scan<F>(traj: F, rho1: &DensityMatrix, rho2: &DensityMatrix, times: &[f64]) -> Result<BlpReport>
where
    F: Fn(f64) -> Result<AffineRep> + Sync,
{
    rho1.validate_state()?;
    rho2.validate_state()?;
    let (a, b) = (bloch_from_density(rho1)?, bloch_from_density(rho2)?);
    let distances: Vec<f64> = times
        .par_iter()
        .map(|&t| traj(t).map(|f| bloch_trace_distance(apply_affine(&f, a), apply_affine(&f, b)).clamp(0.0, 1.0)))
        .collect::<Result<_>>()?;

    let mut increases: Vec<IncreaseInterval> = Vec::new();
    let mut open: Option<(usize, usize)> = None;
    for k in 1..distances.len() {
        let rising = distances[k] - distances[k - 1] > INCREASE_TOLERANCE;
        open = match (open, rising) {
            (Some((s, _)), true) => Some((s, k)),
            (None, true) => Some((k - 1, k)),
            (Some((s, e)), false) => {
                increases.push(IncreaseInterval { start: times[s], end: times[e], rise: distances[e] - distances[s] });
                None
            }
            (None, false) => None,
        };
    }
    if let Some((s, e)) = open {
        increases.push(IncreaseInterval { start: times[s], end: times[e], rise: distances[e] - distances[s] });
    }
    Ok(BlpReport { states: [a, b], times: times.to_vec(), monotone: increases.is_empty(), distances, increases })
}
