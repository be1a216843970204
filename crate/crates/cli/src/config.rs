//! Run configuration: a flat `key = value` file overlaid by flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "QMAP_ENM_SEED";
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Rates,
    Classify,
    Divisibility,
    Bloch,
    Sweep,
}

impl CommandName {
    pub fn label(self) -> &'static str {
        match self {
            CommandName::Rates => "rates",
            CommandName::Classify => "classify",
            CommandName::Divisibility => "divisibility",
            CommandName::Bloch => "bloch",
            CommandName::Sweep => "sweep",
        }
    }

    fn default_format(self) -> Format {
        match self {
            CommandName::Classify => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Flags shared by every subcommand. All optional so a config file can
/// supply them.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// mix, semigroup, depolarizing, ad, gad, identity or constant.
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// Mixing weights w1 w2 w3 (summing to 1).
    #[arg(long, num_args = 3, value_names = ["W1", "W2", "W3"], allow_negative_numbers = true, global = true)]
    pub weights: Option<Vec<f64>>,
    /// Decoherence rate c of the Pauli families.
    #[arg(long, allow_negative_numbers = true, global = true)]
    pub c: Option<f64>,
    /// Relaxation rate of the damping families.
    #[arg(long, allow_negative_numbers = true, global = true)]
    pub gamma: Option<f64>,
    /// Stationary r3 of generalized amplitude damping.
    #[arg(long = "r-inf", allow_negative_numbers = true, global = true)]
    pub r_inf: Option<f64>,
    /// Dephasing axis of a single semigroup: x, y or z.
    #[arg(long, global = true)]
    pub axis: Option<String>,
    /// Constant alpha for the `constant` family.
    #[arg(long, allow_negative_numbers = true, global = true)]
    pub alpha: Option<f64>,
    /// Constant beta for the `constant` family.
    #[arg(long, allow_negative_numbers = true, global = true)]
    pub beta: Option<f64>,
    /// Constant gamma3 for the `constant` family.
    #[arg(long, allow_negative_numbers = true, global = true)]
    pub gamma3: Option<f64>,
    #[arg(long = "t-max", allow_negative_numbers = true, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long = "delta-min", allow_negative_numbers = true, global = true)]
    pub delta_min: Option<f64>,
    #[arg(long = "zero-tol", allow_negative_numbers = true, global = true)]
    pub zero_tol: Option<f64>,
    /// Integration step of the Bloch equations.
    #[arg(long, allow_negative_numbers = true, global = true)]
    pub step: Option<f64>,
    /// Initial Bloch vector.
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true, global = true)]
    pub r0: Option<Vec<f64>>,
    /// Time points per axis (divisibility) or simplex resolution (sweep).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Significant digits in CSV output.
    #[arg(long, global = true)]
    pub precision: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FamilyConfig {
    Mixture { weights: [f64; 3], c: f64 },
    Semigroup { axis: Axis, c: f64 },
    Depolarizing { c: f64 },
    AmplitudeDamping { gamma: f64 },
    GeneralizedAmplitudeDamping { gamma: f64, r_inf: f64 },
    Identity,
    Constant { alpha: f64, beta: f64, gamma3: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandName,
    pub family: Option<FamilyConfig>,
    /// Decoherence rate as given, used by `sweep`.
    pub c: Option<f64>,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    pub delta_min: f64,
    pub zero_tol: f64,
    pub step: Option<f64>,
    pub r0: Option<[f64; 3]>,
    pub grid: Option<usize>,
    pub format: Format,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub precision: usize,
}

const KEYS: &[&str] = &[
    "command", "family", "weights", "c", "gamma", "r_inf", "axis", "alpha", "beta", "gamma3", "t_max", "samples",
    "delta_min", "zero_tol", "step", "r0", "grid", "format", "output", "seed", "precision",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim().parse().map_err(|_| CliError::config(key, format!("cannot parse `{}`", v.trim())))
}

fn parse_triple(key: &str, v: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = v.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
    if parts.len() != 3 {
        return Err(CliError::config(key, format!("expected three numbers, got `{}`", v.trim())));
    }
    parts.iter().map(|p| parse_num(key, p)).collect()
}

/// Parses a config file into flag form. Keys may use `-` or `_`.
pub fn parse_config_text(text: &str) -> CliResult<(Flags, Option<String>)> {
    let mut flags = Flags::default();
    let mut command = None;
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(line, "expected `key = value`"));
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::config(&key, "unknown configuration key"));
        }
        let k = key.as_str();
        match k {
            "command" => command = Some(value.to_string()),
            "family" => flags.family = Some(value.to_string()),
            "axis" => flags.axis = Some(value.to_string()),
            "weights" => flags.weights = Some(parse_triple(k, value)?),
            "r0" => flags.r0 = Some(parse_triple(k, value)?),
            "c" => flags.c = Some(parse_num(k, value)?),
            "gamma" => flags.gamma = Some(parse_num(k, value)?),
            "r_inf" => flags.r_inf = Some(parse_num(k, value)?),
            "alpha" => flags.alpha = Some(parse_num(k, value)?),
            "beta" => flags.beta = Some(parse_num(k, value)?),
            "gamma3" => flags.gamma3 = Some(parse_num(k, value)?),
            "t_max" => flags.t_max = Some(parse_num(k, value)?),
            "samples" => flags.samples = Some(parse_num(k, value)?),
            "delta_min" => flags.delta_min = Some(parse_num(k, value)?),
            "zero_tol" => flags.zero_tol = Some(parse_num(k, value)?),
            "step" => flags.step = Some(parse_num(k, value)?),
            "grid" => flags.grid = Some(parse_num(k, value)?),
            "seed" => flags.seed = Some(parse_num(k, value)?),
            "precision" => flags.precision = Some(parse_num(k, value)?),
            "output" => flags.output = Some(PathBuf::from(value)),
            "format" => {
                flags.format = Some(match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(CliError::config(k, format!("expected csv or json, got `{value}`"))),
                })
            }
            _ => unreachable!("key list and match arms agree"),
        }
    }
    Ok((flags, command))
}

fn overlay(flags: Flags, file: Flags) -> Flags {
    Flags {
        family: flags.family.or(file.family),
        weights: flags.weights.or(file.weights),
        c: flags.c.or(file.c),
        gamma: flags.gamma.or(file.gamma),
        r_inf: flags.r_inf.or(file.r_inf),
        axis: flags.axis.or(file.axis),
        alpha: flags.alpha.or(file.alpha),
        beta: flags.beta.or(file.beta),
        gamma3: flags.gamma3.or(file.gamma3),
        t_max: flags.t_max.or(file.t_max),
        samples: flags.samples.or(file.samples),
        delta_min: flags.delta_min.or(file.delta_min),
        zero_tol: flags.zero_tol.or(file.zero_tol),
        step: flags.step.or(file.step),
        r0: flags.r0.or(file.r0),
        grid: flags.grid.or(file.grid),
        format: flags.format.or(file.format),
        output: flags.output.or(file.output),
        config: flags.config,
        seed: flags.seed.or(file.seed),
        precision: flags.precision.or(file.precision),
    }
}

fn require<T>(key: &str, v: Option<T>, family: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::config(key, format!("required by family `{family}`")))
}

fn positive(key: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(key, format!("must be positive, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(key, "must be finite"))
    }
}

fn resolve_family(f: &Flags) -> CliResult<Option<FamilyConfig>> {
    let Some(name) = f.family.as_deref() else { return Ok(None) };
    let c = || require("c", f.c, name).and_then(|c| positive("c", c));
    let gamma = || require("gamma", f.gamma, name).and_then(|g| positive("gamma", g));
    Ok(Some(match name.to_ascii_lowercase().as_str() {
        "mix" | "mixture" => {
            let w = require("weights", f.weights.clone(), name)?;
            let weights = [w[0], w[1], w[2]];
            for &x in &weights {
                finite("weights", x)?;
            }
            let sum: f64 = weights.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(CliError::config("weights", format!("must sum to 1, got {sum}")));
            }
            FamilyConfig::Mixture { weights, c: c()? }
        }
        "semigroup" => {
            let axis = match require("axis", f.axis.as_deref(), name)?.to_ascii_lowercase().as_str() {
                "x" | "1" => Axis::X,
                "y" | "2" => Axis::Y,
                "z" | "3" => Axis::Z,
                other => return Err(CliError::config("axis", format!("expected x, y or z, got `{other}`"))),
            };
            FamilyConfig::Semigroup { axis, c: c()? }
        }
        "depolarizing" => FamilyConfig::Depolarizing { c: c()? },
        "ad" | "amplitude-damping" => FamilyConfig::AmplitudeDamping { gamma: gamma()? },
        "gad" | "generalized-amplitude-damping" => {
            let r_inf = require("r_inf", f.r_inf, name)?;
            if r_inf.is_nan() || r_inf.abs() > 1.0 {
                return Err(CliError::config("r_inf", format!("must lie in [-1, 1], got {r_inf}")));
            }
            FamilyConfig::GeneralizedAmplitudeDamping { gamma: gamma()?, r_inf }
        }
        "identity" => FamilyConfig::Identity,
        "constant" => FamilyConfig::Constant {
            alpha: finite("alpha", require("alpha", f.alpha, name)?)?,
            beta: finite("beta", require("beta", f.beta, name)?)?,
            gamma3: finite("gamma3", f.gamma3.unwrap_or(0.0))?,
        },
        other => return Err(CliError::config("family", format!("unknown family `{other}`"))),
    }))
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::config(SEED_ENV, format!("cannot parse `{v}`"))),
        Err(_) => Ok(None),
    }
}

impl RunConfig {
    pub fn resolve(command: CommandName, flags: Flags) -> CliResult<RunConfig> {
        let flags = match flags.config.clone() {
            Some(path) => {
                let (file, file_command) = read_config(&path)?;
                if let Some(c) = file_command {
                    if c != command.label() {
                        return Err(CliError::config("command", format!("file names `{c}` but `{}` was invoked", command.label())));
                    }
                }
                overlay(flags, file)
            }
            None => flags,
        };
        let family = if command == CommandName::Sweep {
            match flags.family.as_deref() {
                None | Some("mix") | Some("mixture") => None,
                Some(other) => return Err(CliError::config("family", format!("sweep scans mixtures only, got `{other}`"))),
            }
        } else {
            resolve_family(&flags)?
        };
        let c = flags.c.map(|c| positive("c", c)).transpose()?;
        let t_max = flags.t_max.map(|t| positive("t_max", t)).transpose()?;
        let step = flags.step.map(|h| positive("step", h)).transpose()?;
        let delta_min = positive("delta_min", flags.delta_min.unwrap_or(qmap_enm::analysis::DEFAULT_DELTA_MIN))?;
        let zero_tol = positive("zero_tol", flags.zero_tol.unwrap_or(qmap_enm::analysis::DEFAULT_ZERO_TOL))?;
        if let Some(n) = flags.samples {
            let min = if command == CommandName::Classify { 16 } else { 2 };
            if n < min {
                return Err(CliError::config("samples", format!("must be at least {min}, got {n}")));
            }
        }
        if let Some(g) = flags.grid {
            if g < 2 {
                return Err(CliError::config("grid", format!("must be at least 2, got {g}")));
            }
        }
        let precision = flags.precision.unwrap_or(9);
        if !(1..=17).contains(&precision) {
            return Err(CliError::config("precision", format!("must lie in 1..=17, got {precision}")));
        }
        let r0 = match flags.r0 {
            Some(r) => {
                for &x in &r {
                    finite("r0", x)?;
                }
                Some([r[0], r[1], r[2]])
            }
            None => None,
        };
        let seed = match flags.seed {
            Some(s) => s,
            None => env_seed()?.unwrap_or(DEFAULT_SEED),
        };
        Ok(RunConfig {
            command,
            family,
            c,
            t_max,
            samples: flags.samples,
            delta_min,
            zero_tol,
            step,
            r0,
            grid: flags.grid,
            format: flags.format.unwrap_or(command.default_format()),
            output: flags.output,
            seed,
            precision,
        })
    }
}

fn read_config(path: &Path) -> CliResult<(Flags, Option<String>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_are_overridden_by_flags() {
        let (file, cmd) = parse_config_text("# hall map\nfamily = mix\nweights = 0.5, 0.5, 0\nc = 1\nt-max = 3\ncommand = rates\n").unwrap();
        assert_eq!(cmd.as_deref(), Some("rates"));
        let flags = Flags { c: Some(2.0), ..Default::default() };
        let merged = overlay(flags, file);
        assert_eq!(merged.c, Some(2.0));
        assert_eq!(merged.t_max, Some(3.0));
        assert_eq!(merged.weights, Some(vec![0.5, 0.5, 0.0]));
    }

    #[test]
    fn unknown_and_malformed_keys_name_the_key() {
        match parse_config_text("colour = red") {
            Err(CliError::Config { key, .. }) => assert_eq!(key, "colour"),
            other => panic!("{other:?}"),
        }
        match parse_config_text("samples = many") {
            Err(CliError::Config { key, .. }) => assert_eq!(key, "samples"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weights_must_sum_to_one() {
        let flags = Flags { family: Some("mix".into()), weights: Some(vec![0.5, 0.5, 0.5]), c: Some(1.0), ..Default::default() };
        match RunConfig::resolve(CommandName::Rates, flags) {
            Err(CliError::Config { key, .. }) => assert_eq!(key, "weights"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_parameters_are_reported() {
        let flags = Flags { family: Some("gad".into()), gamma: Some(1.0), ..Default::default() };
        match RunConfig::resolve(CommandName::Rates, flags) {
            Err(CliError::Config { key, .. }) => assert_eq!(key, "r_inf"),
            other => panic!("{other:?}"),
        }
    }
}
