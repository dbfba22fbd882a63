//! `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, keys are case-sensitive.
//! Every economic parameter is required; strategy, simulation and sweep
//! settings fall back to defaults. Unknown or repeated keys are rejected.

use std::fmt::{self, Write as _};
use std::path::Path;

use crate::design_tuning::SweepSpec;
use crate::economics::{EconomicParams, StrategyProfile, ThreatModel};
use crate::equilibrium::DEFAULT_RESOLUTION;
use crate::protocol_engine::RewardSplit;
use crate::state_commitment::HashAlgorithm;

/// Parameters of the `c_m = $600/month` calibration.
pub const PAPER_600: &str = include_str!("../presets/paper_600.cfg");
/// Parameters of the `c_m = $200/month` calibration.
pub const PAPER_200: &str = include_str!("../presets/paper_200.cfg");

pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "paper_600" => Some(PAPER_600),
        "paper_200" => Some(PAPER_200),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub c_off_min: f64,
    pub c_off_max: f64,
    pub points: usize,
    pub log_scale: bool,
    pub n_values: Vec<u32>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        let spec = SweepSpec::<f64>::with_defaults(0.0);
        SweepSettings {
            c_off_min: spec.c_off_min,
            c_off_max: spec.c_off_max,
            points: spec.points,
            log_scale: spec.log_scale,
            n_values: spec.n_values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: EconomicParams<f64>,
    pub profile: StrategyProfile<f64>,
    pub model: ThreatModel,
    pub reward_split: RewardSplit,
    pub epochs: u64,
    pub seed: u64,
    pub resolution: usize,
    pub hash: HashAlgorithm,
    pub sweep: SweepSettings,
}

const PARAM_KEYS: [&str; 11] = [
    "f_v", "c_m", "r_v", "c_off", "c_fail", "f_p", "c_fraud", "r_fraud", "n", "pi_a", "d_v",
];

const OPTIONAL_KEYS: [&str; 13] = [
    "pi_p",
    "pi_v",
    "model",
    "reward_split",
    "epochs",
    "seed",
    "resolution",
    "c_off_min",
    "c_off_max",
    "points",
    "log_scale",
    "n_values",
    "hash",
];

fn number(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = value.parse().map_err(|_| {
        ConfigError::at(
            line,
            format!("`{key}` expects a decimal number, got `{value}`"),
        )
    })?;
    if !x.is_finite() {
        return Err(ConfigError::at(line, format!("`{key}` must be finite")));
    }
    Ok(x)
}

fn integer<I: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<I, ConfigError> {
    value.parse().map_err(|_| {
        ConfigError::at(
            line,
            format!("`{key}` expects a non-negative integer, got `{value}`"),
        )
    })
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::global(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut seen: Vec<(&str, usize)> = Vec::new();
        let mut params = EconomicParams {
            f_v: 0.0,
            c_m: 0.0,
            r_v: 0.0,
            c_off: 0.0,
            c_fail: 0.0,
            f_p: 0.0,
            c_fraud: 0.0,
            r_fraud: 0.0,
            n: 1,
            pi_a: 0.0,
            d_v: 0.0,
        };
        let mut config = Config {
            params,
            profile: StrategyProfile::ideal(),
            model: ThreatModel::Baseline,
            reward_split: RewardSplit::PaperExpected,
            epochs: 200_000,
            seed: 0,
            resolution: DEFAULT_RESOLUTION,
            hash: HashAlgorithm::Sha256,
            sweep: SweepSettings::default(),
        };

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::at(
                    line,
                    format!("expected `key = value`, got `{content}`"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if !PARAM_KEYS.contains(&key) && !OPTIONAL_KEYS.contains(&key) {
                return Err(ConfigError::at(line, format!("unknown key `{key}`")));
            }
            if let Some((_, first)) = seen.iter().find(|(k, _)| *k == key) {
                return Err(ConfigError::at(
                    line,
                    format!("`{key}` already set on line {first}"),
                ));
            }
            seen.push((key, line));

            match key {
                "f_v" => params.f_v = number(line, key, value)?,
                "c_m" => params.c_m = number(line, key, value)?,
                "r_v" => params.r_v = number(line, key, value)?,
                "c_off" => params.c_off = number(line, key, value)?,
                "c_fail" => params.c_fail = number(line, key, value)?,
                "f_p" => params.f_p = number(line, key, value)?,
                "c_fraud" => params.c_fraud = number(line, key, value)?,
                "r_fraud" => params.r_fraud = number(line, key, value)?,
                "n" => params.n = integer(line, key, value)?,
                "pi_a" => params.pi_a = number(line, key, value)?,
                "d_v" => params.d_v = number(line, key, value)?,
                "pi_p" => config.profile.pi_p = number(line, key, value)?,
                "pi_v" => config.profile.pi_v = number(line, key, value)?,
                "model" => {
                    config.model = value
                        .parse()
                        .map_err(|e| ConfigError::at(line, format!("{e}")))?
                }
                "reward_split" => {
                    config.reward_split = value
                        .parse()
                        .map_err(|e| ConfigError::at(line, format!("{e}")))?
                }
                "epochs" => config.epochs = integer(line, key, value)?,
                "seed" => config.seed = integer(line, key, value)?,
                "resolution" => config.resolution = integer(line, key, value)?,
                "c_off_min" => config.sweep.c_off_min = number(line, key, value)?,
                "c_off_max" => config.sweep.c_off_max = number(line, key, value)?,
                "points" => config.sweep.points = integer(line, key, value)?,
                "log_scale" => {
                    config.sweep.log_scale = match value {
                        "true" => true,
                        "false" => false,
                        _ => {
                            return Err(ConfigError::at(line, "`log_scale` expects true or false"))
                        }
                    }
                }
                "n_values" => {
                    config.sweep.n_values = value
                        .split(',')
                        .map(|v| integer(line, key, v.trim()))
                        .collect::<Result<_, _>>()?
                }
                "hash" => {
                    config.hash = value
                        .parse()
                        .map_err(|e| ConfigError::at(line, format!("{e}")))?
                }
                _ => unreachable!("key list checked above"),
            }
        }

        for key in PARAM_KEYS {
            if !seen.iter().any(|(k, _)| *k == key) {
                return Err(ConfigError::global(format!("missing required key `{key}`")));
            }
        }
        params
            .validate()
            .map_err(|e| ConfigError::global(e.to_string()))?;
        config
            .profile
            .validate()
            .map_err(|e| ConfigError::global(e.to_string()))?;
        if config.epochs == 0 {
            return Err(ConfigError::global("`epochs` must be at least 1"));
        }
        if config.resolution < 10 {
            return Err(ConfigError::global("`resolution` must be at least 10"));
        }
        config.params = params;
        Ok(config)
    }

    /// Canonical text form: every key, fixed order.
    pub fn to_cfg_string(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let mut put = |key: &str, value: String| writeln!(out, "{key} = {value}").unwrap();
        put("f_v", p.f_v.to_string());
        put("c_m", p.c_m.to_string());
        put("r_v", p.r_v.to_string());
        put("c_off", p.c_off.to_string());
        put("c_fail", p.c_fail.to_string());
        put("f_p", p.f_p.to_string());
        put("c_fraud", p.c_fraud.to_string());
        put("r_fraud", p.r_fraud.to_string());
        put("n", p.n.to_string());
        put("pi_a", p.pi_a.to_string());
        put("d_v", p.d_v.to_string());
        put("pi_p", self.profile.pi_p.to_string());
        put("pi_v", self.profile.pi_v.to_string());
        put("model", self.model.to_string());
        put("reward_split", self.reward_split.to_string());
        put("epochs", self.epochs.to_string());
        put("seed", self.seed.to_string());
        put("resolution", self.resolution.to_string());
        put("hash", self.hash.to_string());
        put("c_off_min", self.sweep.c_off_min.to_string());
        put("c_off_max", self.sweep.c_off_max.to_string());
        put("points", self.sweep.points.to_string());
        put("log_scale", self.sweep.log_scale.to_string());
        let n_values: Vec<String> = self.sweep.n_values.iter().map(u32::to_string).collect();
        put("n_values", n_values.join(","));
        out
    }
}
