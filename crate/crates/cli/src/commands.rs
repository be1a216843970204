use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use qmap_enm::algebra::{density_from_bloch, BlochVector};
use qmap_enm::analysis::{
    analyze, blp_scan, divisibility_scan, linear_grid, AnalysisOptions, ClassificationReport, CP_TOLERANCE,
    DEFAULT_SAMPLES, RIGHT_LIMIT,
};
use qmap_enm::bloch::{integrate, RateFunctions};
use qmap_enm::families::{Family, PauliAxis};
use qmap_enm::rates::{default_horizon, nonunital_rates, RateSource};

use crate::config::{Axis, CommandName, FamilyConfig, Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::format::Csv;

pub const SCHEMA: u32 = 1;
/// Rows of `rates` when `samples` is not given.
const DEFAULT_RATE_ROWS: usize = 101;
const DEFAULT_PAIR_GRID: usize = 20;
const DEFAULT_SIMPLEX_GRID: usize = 10;
/// State pairs drawn for the trace-distance evidence of `classify`.
const BLP_PAIRS: usize = 8;
const BLP_GRID: usize = 200;

pub struct Output {
    pub body: String,
    pub warnings: Vec<String>,
}

pub fn run(cfg: &RunConfig) -> CliResult<Output> {
    match cfg.command {
        CommandName::Rates => rates(cfg),
        CommandName::Classify => classify(cfg),
        CommandName::Divisibility => divisibility(cfg),
        CommandName::Bloch => bloch(cfg),
        CommandName::Sweep => sweep(cfg),
    }
}

fn family_config(cfg: &RunConfig) -> CliResult<&FamilyConfig> {
    cfg.family.as_ref().ok_or_else(|| CliError::config("family", "no family given"))
}

fn to_family(fc: &FamilyConfig) -> CliResult<Option<Family>> {
    Ok(Some(match *fc {
        FamilyConfig::Mixture { weights, c } => Family::mixture(weights, c),
        FamilyConfig::Semigroup { axis, c } => Family::semigroup(
            match axis {
                Axis::X => PauliAxis::X,
                Axis::Y => PauliAxis::Y,
                Axis::Z => PauliAxis::Z,
            },
            c,
        ),
        FamilyConfig::Depolarizing { c } => Family::depolarizing(c),
        FamilyConfig::AmplitudeDamping { gamma } => Family::amplitude_damping(gamma),
        FamilyConfig::GeneralizedAmplitudeDamping { gamma, r_inf } => Family::generalized_amplitude_damping(gamma, r_inf),
        FamilyConfig::Identity => Ok(Family::Identity),
        FamilyConfig::Constant { .. } => return Ok(None),
    }
    .map_err(|e| CliError::config("family", e.to_string()))?))
}

/// The family as a dynamical map; constant rates do not define one.
fn dynamical_family(cfg: &RunConfig) -> CliResult<Family> {
    to_family(family_config(cfg)?)?
        .ok_or_else(|| CliError::config("family", format!("`{}` needs a dynamical map, not constant rates", cfg.command.label())))
}

fn constant_scale(alpha: f64, beta: f64, gamma3: f64) -> f64 {
    let s = alpha.abs().max(beta.abs()).max(gamma3.abs());
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn time_scale(fc: &FamilyConfig, family: Option<&Family>) -> f64 {
    match (fc, family) {
        (FamilyConfig::Constant { alpha, beta, gamma3 }, _) => constant_scale(*alpha, *beta, *gamma3),
        (_, Some(f)) => f.time_scale(),
        _ => 1.0,
    }
}

fn header_json(cfg: &RunConfig) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(cfg.command.label()));
    m.insert("family".into(), serde_json::to_value(&cfg.family).expect("family serializes"));
    m
}

fn to_json(m: serde_json::Map<String, Value>) -> String {
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("report serializes");
    s.push('\n');
    s
}

fn rates(cfg: &RunConfig) -> CliResult<Output> {
    let fc = family_config(cfg)?;
    let family = to_family(fc)?;
    let scale = time_scale(fc, family.as_ref());
    let t_max = cfg.t_max.unwrap_or(10.0 / scale);
    let times = linear_grid(t_max, cfg.samples.unwrap_or(DEFAULT_RATE_ROWS)).map_err(|e| CliError::config("t_max", e.to_string()))?;
    let right_limit = RIGHT_LIMIT / scale;

    let unital = family.as_ref().is_some_and(Family::is_unital);
    let columns: Vec<&str> = if unital {
        vec!["t", "gamma1", "gamma2", "gamma3"]
    } else {
        vec!["t", "alpha", "beta", "gamma_plus", "gamma_minus", "gamma3"]
    };
    let eval = |t: f64| -> qmap_enm::Result<Vec<f64>> {
        match (&family, fc) {
            (_, FamilyConfig::Constant { alpha, beta, gamma3 }) => {
                Ok(vec![*alpha, *beta, alpha + beta, alpha - beta, *gamma3])
            }
            (Some(f), _) if unital => f.rates_at(t),
            (Some(Family::NonUnital(spec)), _) => {
                let r = nonunital_rates(spec, t)?;
                Ok(vec![r.alpha, r.beta, r.gamma_plus, r.gamma_minus, r.gamma3])
            }
            _ => unreachable!("non-unital families are NonUnital"),
        }
    };

    let mut warnings = Vec::new();
    let rows: Vec<(f64, Option<Vec<f64>>)> = times
        .iter()
        .map(|&t| match eval(if t == 0.0 { right_limit } else { t }) {
            Ok(v) => (t, Some(v)),
            Err(e) => {
                warnings.push(format!("rates unavailable at t={t}: {e}"));
                (t, None)
            }
        })
        .collect();

    let body = match cfg.format {
        Format::Csv => {
            let mut csv = Csv::new(&columns, cfg.precision);
            for (t, v) in &rows {
                let mut fields = vec![csv.num(*t)];
                match v {
                    Some(v) => fields.extend(v.iter().map(|x| csv.num(*x))),
                    None => fields.extend(std::iter::repeat_n(String::new(), columns.len() - 1)),
                }
                csv.row(&fields);
            }
            csv.finish()
        }
        Format::Json => {
            let mut m = header_json(cfg);
            m.insert("right_limit_time".into(), json!(right_limit));
            m.insert("columns".into(), json!(columns));
            let data: Vec<Value> = rows
                .iter()
                .map(|(t, v)| match v {
                    Some(v) => json!(std::iter::once(*t).chain(v.iter().copied()).collect::<Vec<f64>>()),
                    None => json!([t]),
                })
                .collect();
            m.insert("rows".into(), Value::Array(data));
            to_json(m)
        }
    };
    Ok(Output { body, warnings })
}

#[derive(Serialize)]
struct BlpEvidence {
    seed: u64,
    pairs: usize,
    grid_points: usize,
    monotone: bool,
    max_rise: f64,
}

fn random_state(rng: &mut ChaCha8Rng) -> BlochVector {
    loop {
        let r = BlochVector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if r.norm() <= 1.0 {
            return r;
        }
    }
}

fn blp_evidence(family: &Family, horizon: f64, seed: u64) -> CliResult<BlpEvidence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = linear_grid(horizon, BLP_GRID)?;
    let (mut monotone, mut max_rise) = (true, 0.0f64);
    for _ in 0..BLP_PAIRS {
        let a = density_from_bloch(random_state(&mut rng));
        let b = density_from_bloch(random_state(&mut rng));
        let report = blp_scan(|t| family.affine_at(t), &a, &b, &grid)?;
        monotone &= report.monotone;
        max_rise = report.increases.iter().map(|i| i.rise).fold(max_rise, f64::max);
    }
    Ok(BlpEvidence { seed, pairs: BLP_PAIRS, grid_points: BLP_GRID, monotone, max_rise })
}

fn analysis_options(cfg: &RunConfig) -> AnalysisOptions {
    AnalysisOptions {
        horizon: cfg.t_max,
        samples: cfg.samples.unwrap_or(DEFAULT_SAMPLES),
        delta_min: cfg.delta_min,
        zero_tol: cfg.zero_tol,
    }
}

fn classify(cfg: &RunConfig) -> CliResult<Output> {
    let family = dynamical_family(cfg)?;
    let report: ClassificationReport = analyze(&family, &analysis_options(cfg))?;
    let horizon = cfg.t_max.unwrap_or_else(|| default_horizon(family.time_scale()));
    let mut warnings = Vec::new();
    let blp = match blp_evidence(&family, horizon, cfg.seed) {
        Ok(b) => Some(b),
        Err(e) => {
            warnings.push(format!("trace-distance evidence unavailable: {e}"));
            None
        }
    };
    let body = match cfg.format {
        Format::Json => {
            let mut m = header_json(cfg);
            let serde_json::Value::Object(fields) = serde_json::to_value(&report).expect("report serializes") else {
                unreachable!("reports serialize to objects")
            };
            m.extend(fields);
            m.insert("evidence".into(), json!({ "blp": blp }));
            to_json(m)
        }
        Format::Csv => {
            let mut csv = Csv::new(&["verdict", "offending_rate", "t_star", "asymptote", "delta"], cfg.precision);
            let fields = vec![
                report.verdict.label().to_string(),
                report.offending_rate.clone().unwrap_or_default(),
                csv.opt(report.t_star),
                csv.opt(report.asymptote),
                csv.opt(report.delta),
            ];
            csv.row(&fields);
            csv.finish()
        }
    };
    Ok(Output { body, warnings })
}

fn divisibility(cfg: &RunConfig) -> CliResult<Output> {
    let family = dynamical_family(cfg)?;
    let t_max = cfg.t_max.unwrap_or(10.0 / family.time_scale());
    let times = linear_grid(t_max, cfg.grid.unwrap_or(DEFAULT_PAIR_GRID)).map_err(|e| CliError::config("grid", e.to_string()))?;
    let report = divisibility_scan(|t| family.affine_at(t), &times, CP_TOLERANCE)?;
    let warnings = report
        .pairs
        .iter()
        .filter_map(|p| p.skipped.as_ref().map(|e| format!("pair ({}, {}) skipped: {e}", p.t1, p.t2)))
        .collect();
    let body = match cfg.format {
        Format::Csv => {
            let mut csv = Csv::new(&["t1", "t2", "min_choi_eig"], cfg.precision);
            for p in &report.pairs {
                let fields = vec![csv.num(p.t1), csv.num(p.t2), csv.opt(p.min_eigenvalue)];
                csv.row(&fields);
            }
            csv.finish()
        }
        Format::Json => {
            let mut m = header_json(cfg);
            let serde_json::Value::Object(fields) = serde_json::to_value(&report).expect("report serializes") else {
                unreachable!("reports serialize to objects")
            };
            m.extend(fields);
            to_json(m)
        }
    };
    Ok(Output { body, warnings })
}

fn bloch(cfg: &RunConfig) -> CliResult<Output> {
    let fc = family_config(cfg)?;
    let family = to_family(fc)?;
    let scale = time_scale(fc, family.as_ref());
    let rates = match (fc, &family) {
        (FamilyConfig::Constant { alpha, beta, gamma3 }, _) => RateFunctions::constant(*alpha, *beta, *gamma3),
        (_, Some(f)) => RateFunctions::from_family(f).map_err(|e| CliError::config("family", e.to_string()))?,
        _ => unreachable!("non-constant configs map to families"),
    };
    let r0 = cfg.r0.ok_or_else(|| CliError::config("r0", "bloch needs an initial Bloch vector"))?;
    let t_max = cfg.t_max.unwrap_or(10.0 / scale);
    let step = cfg.step.unwrap_or(1e-3 / scale);
    if step > t_max / 10.0 {
        return Err(CliError::config("step", format!("must not exceed t_max/10 = {}", t_max / 10.0)));
    }
    let traj = integrate(&rates, BlochVector::from_array(r0), t_max, step).map_err(|e| CliError::config("step", e.to_string()))?;

    let mut warnings = Vec::new();
    if let Some(e) = &traj.error {
        warnings.push(format!("integration stopped early: {e}"));
    }
    if cfg.format == Format::Csv {
        if let Some(v) = &traj.first_violation {
            warnings.push(format!("Bloch vector left the ball at t={} (|r| = {})", v.t, v.norm));
        }
    }
    let mut csv = Csv::new(&["t", "r1", "r2", "r3", "norm"], cfg.precision);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let fields = vec![csv.num(*t), csv.num(s.r1), csv.num(s.r2), csv.num(s.r3), csv.num(s.norm())];
        csv.row(&fields);
    }
    let mut body = csv.finish();
    if cfg.format == Format::Json {
        let footer = json!({
            "schema": SCHEMA,
            "command": "bloch",
            "step": traj.step,
            "nodes": traj.times.len(),
            "complete": traj.is_complete(),
            "first_violation": traj.first_violation,
            "error": traj.error,
        });
        body.push_str(&serde_json::to_string(&footer).expect("footer serializes"));
        body.push('\n');
    }
    Ok(Output { body, warnings })
}

struct SweepRow {
    weights: [f64; 3],
    result: Result<ClassificationReport, String>,
}

fn sweep(cfg: &RunConfig) -> CliResult<Output> {
    let n = cfg.grid.unwrap_or(DEFAULT_SIMPLEX_GRID);
    let c = cfg.c.unwrap_or(1.0);
    let opts = analysis_options(cfg);
    let mut rows = Vec::new();
    for i in 0..=n {
        for j in 0..=(n - i) {
            let weights = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
            let result = Family::mixture(weights, c)
                .and_then(|f| analyze(&f, &opts))
                .map_err(|e| e.to_string());
            rows.push(SweepRow { weights, result });
        }
    }
    let warnings = rows
        .iter()
        .filter_map(|r| r.result.as_ref().err().map(|e| format!("weights {:?} failed: {e}", r.weights)))
        .collect();
    let body = match cfg.format {
        Format::Csv => {
            let mut csv = Csv::new(&["w1", "w2", "w3", "verdict", "t_star", "asymptote"], cfg.precision);
            for r in &rows {
                let mut fields: Vec<String> = r.weights.iter().map(|w| csv.num(*w)).collect();
                match &r.result {
                    Ok(rep) => fields.extend([rep.verdict.label().to_string(), csv.opt(rep.t_star), csv.opt(rep.asymptote)]),
                    Err(_) => fields.extend(["error".to_string(), String::new(), String::new()]),
                }
                csv.row(&fields);
            }
            csv.finish()
        }
        Format::Json => {
            let mut m = header_json(cfg);
            m.insert("c".into(), json!(c));
            m.insert("grid".into(), json!(n));
            let data: Vec<Value> = rows
                .iter()
                .map(|r| match &r.result {
                    Ok(rep) => json!({
                        "weights": r.weights,
                        "verdict": rep.verdict,
                        "t_star": rep.t_star,
                        "asymptote": rep.asymptote,
                    }),
                    Err(e) => json!({ "weights": r.weights, "verdict": "error", "error": e }),
                })
                .collect();
            m.insert("rows".into(), Value::Array(data));
            to_json(m)
        }
    };
    Ok(Output { body, warnings })
}
