//! Flat TOML run configuration.
//!
//! Every key is optional; missing keys take the lossy reference values
//! (`A = 350`, `T = 3`, `tau = 1`, cavity decays 0.4, membrane dampings 1e-4,
//! window `[-15, 15]`, one phonon in the first membrane).

use phonon_stirap::meanfield::MeanFieldMode;
use phonon_stirap::pipeline::Scenario;
use phonon_stirap::spectral::ShiftConvention;
use phonon_stirap::sweep::DEFAULT_CELL_CAP;
use std::path::PathBuf;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("malformed configuration{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Parse { .. } => "PARSE_ERROR",
            ConfigError::UnknownKey(_) => "UNKNOWN_KEY",
            ConfigError::InvalidValue { .. } => "INVALID_VALUE",
        }
    }

    fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::InvalidValue { key: key.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    pub strict: bool,
    pub max_cells: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: Scenario::default(),
            out_dir: PathBuf::from("."),
            strict: false,
            max_cells: DEFAULT_CELL_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Bound {
    Any,
    NonZero,
    NonNegative,
    Positive,
    /// Strictly between 0 and 1.
    Fraction,
}

impl Bound {
    fn check(self, key: &str, v: f64) -> Result<f64, ConfigError> {
        if !v.is_finite() {
            return Err(ConfigError::invalid(key, format!("must be finite, got {v}")));
        }
        let ok = match self {
            Bound::Any => true,
            Bound::NonZero => v != 0.0,
            Bound::NonNegative => v >= 0.0,
            Bound::Positive => v > 0.0,
            Bound::Fraction => v > 0.0 && v < 1.0,
        };
        if ok {
            Ok(v)
        } else {
            let rule = match self {
                Bound::Any => unreachable!(),
                Bound::NonZero => "must be non-zero",
                Bound::NonNegative => "must be non-negative",
                Bound::Positive => "must be positive",
                Bound::Fraction => "must lie strictly between 0 and 1",
            };
            Err(ConfigError::invalid(key, format!("{rule}, got {v}")))
        }
    }
}

/// Real-valued keys, in serialization order.
pub const FLOAT_KEYS: [&str; 27] = [
    "delta_L", "delta_M", "delta_R", "omega_m1", "omega_m2", "g1", "g2", "J1", "J2", "gamma_L", "gamma_M",
    "gamma_R", "gamma_m1", "gamma_m2", "nbar1", "nbar2", "A", "T", "tau", "t_start", "t_end", "rtol", "n0_aL",
    "n0_aM", "n0_aR", "n0_b1", "n0_b2",
];

fn float_slot<'a>(cfg: &'a mut RunConfig, key: &str) -> Option<(&'a mut f64, Bound)> {
    let s = &mut cfg.scenario;
    Some(match key {
        "delta_L" => (&mut s.params.delta_l, Bound::NonZero),
        "delta_M" => (&mut s.params.delta_m, Bound::Any),
        "delta_R" => (&mut s.params.delta_r, Bound::NonZero),
        "omega_m1" => (&mut s.params.omega_m1, Bound::Positive),
        "omega_m2" => (&mut s.params.omega_m2, Bound::Positive),
        "g1" => (&mut s.params.g1, Bound::Any),
        "g2" => (&mut s.params.g2, Bound::Any),
        "J1" => (&mut s.params.j1, Bound::Any),
        "J2" => (&mut s.params.j2, Bound::Any),
        "gamma_L" => (&mut s.params.gamma_l, Bound::NonNegative),
        "gamma_M" => (&mut s.params.gamma_m, Bound::NonNegative),
        "gamma_R" => (&mut s.params.gamma_r, Bound::NonNegative),
        "gamma_m1" => (&mut s.params.gamma_m1, Bound::NonNegative),
        "gamma_m2" => (&mut s.params.gamma_m2, Bound::NonNegative),
        "nbar1" => (&mut s.params.nbar1, Bound::NonNegative),
        "nbar2" => (&mut s.params.nbar2, Bound::NonNegative),
        "A" => (&mut s.schedule.amplitude, Bound::NonNegative),
        "T" => (&mut s.schedule.width, Bound::Positive),
        "tau" => (&mut s.schedule.half_delay, Bound::Any),
        "t_start" => (&mut s.schedule.t_start, Bound::Any),
        "t_end" => (&mut s.schedule.t_end, Bound::Any),
        "rtol" => (&mut s.rtol, Bound::Fraction),
        "n0_aL" => (&mut s.initial[0], Bound::NonNegative),
        "n0_aM" => (&mut s.initial[1], Bound::NonNegative),
        "n0_aR" => (&mut s.initial[2], Bound::NonNegative),
        "n0_b1" => (&mut s.initial[3], Bound::NonNegative),
        "n0_b2" => (&mut s.initial[4], Bound::NonNegative),
        _ => return None,
    })
}

fn as_float(key: &str, value: &Value) -> Result<f64, ConfigError> {
    match value {
        Value::Float(v) => Ok(*v),
        Value::Integer(v) => Ok(*v as f64),
        other => Err(ConfigError::invalid(key, format!("expected a number, got {}", other.type_str()))),
    }
}

fn as_count(key: &str, value: &Value, min: i64) -> Result<usize, ConfigError> {
    match value {
        Value::Integer(v) if *v >= min => Ok(*v as usize),
        Value::Integer(v) => Err(ConfigError::invalid(key, format!("must be at least {min}, got {v}"))),
        other => Err(ConfigError::invalid(key, format!("expected an integer, got {}", other.type_str()))),
    }
}

fn as_str<'a>(key: &str, value: &'a Value) -> Result<&'a str, ConfigError> {
    value
        .as_str()
        .ok_or_else(|| ConfigError::invalid(key, format!("expected a string, got {}", value.type_str())))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse a configuration document, applying defaults for absent keys.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: Table = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map(|span| line_of(text, span.start)),
        message: e.message().to_string(),
    })?;

    let mut cfg = RunConfig::default();
    for (key, value) in &table {
        if let Some((slot, bound)) = float_slot(&mut cfg, key) {
            *slot = bound.check(key, as_float(key, value)?)?;
            continue;
        }
        match key.as_str() {
            "n_points" => cfg.scenario.n_points = as_count(key, value, 2)?,
            "max_cells" => cfg.max_cells = as_count(key, value, 1)?,
            "strict" => {
                cfg.strict = value
                    .as_bool()
                    .ok_or_else(|| ConfigError::invalid(key, format!("expected a boolean, got {}", value.type_str())))?
            }
            "out_dir" => {
                let dir = as_str(key, value)?;
                if dir.is_empty() {
                    return Err(ConfigError::invalid(key, "must not be empty"));
                }
                cfg.out_dir = PathBuf::from(dir);
            }
            "meanfield" => {
                cfg.scenario.mean_field =
                    as_str(key, value)?.parse::<MeanFieldMode>().map_err(|e| ConfigError::invalid(key, e.to_string()))?
            }
            "decay_shift" => {
                cfg.scenario.shift =
                    as_str(key, value)?.parse::<ShiftConvention>().map_err(|e| ConfigError::invalid(key, e.to_string()))?
            }
            _ => return Err(ConfigError::UnknownKey(key.clone())),
        }
    }

    let schedule = &cfg.scenario.schedule;
    if schedule.t_start >= schedule.t_end {
        return Err(ConfigError::invalid(
            "t_end",
            format!("must exceed t_start ({}), got {}", schedule.t_start, schedule.t_end),
        ));
    }
    Ok(cfg)
}

/// Render a configuration that [`parse_config`] reads back unchanged.
pub fn serialize(cfg: &RunConfig) -> String {
    let mut scratch = cfg.clone();
    let mut table = Table::new();
    for key in FLOAT_KEYS {
        let (slot, _) = float_slot(&mut scratch, key).expect("listed key");
        table.insert(key.to_string(), Value::Float(*slot));
    }
    table.insert("n_points".into(), Value::Integer(cfg.scenario.n_points as i64));
    table.insert("max_cells".into(), Value::Integer(cfg.max_cells as i64));
    table.insert("strict".into(), Value::Boolean(cfg.strict));
    table.insert("out_dir".into(), Value::String(cfg.out_dir.to_string_lossy().into_owned()));
    table.insert("meanfield".into(), Value::String(cfg.scenario.mean_field.as_str().into()));
    table.insert("decay_shift".into(), Value::String(cfg.scenario.shift.as_str().into()));
    toml::to_string(&table).expect("a flat table always serializes")
}
