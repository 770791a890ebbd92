//! Line-oriented `key = value` run configuration.
//!
//! Blank lines and everything after `#` are ignored. Keys may appear at most
//! once; unknown keys are rejected. Model parameters left out take the 1D
//! test-case values.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use kssav_core::{CSolverKind, ModelParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` already set on line {first}")]
    DuplicateKey { line: usize, key: String, first: usize },
    #[error("line {line}: bad value for `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("missing required key `{field}`")]
    Missing { field: &'static str },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ConfigError {
    /// The offending key, when the error concerns one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. }
            | ConfigError::DuplicateKey { key, .. }
            | ConfigError::BadValue { key, .. } => Some(key),
            ConfigError::Missing { field } | ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }

    /// The 1-based source line, for errors tied to one.
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Syntax { line, .. }
            | ConfigError::UnknownKey { line, .. }
            | ConfigError::DuplicateKey { line, .. }
            | ConfigError::BadValue { line, .. } => Some(*line),
            _ => None,
        }
    }
}

const KEYS: &[&str] = &[
    "dim",
    "lx",
    "ly",
    "nx",
    "ny",
    "dt",
    "t_final",
    "d_u",
    "chi_c",
    "alpha",
    "delta",
    "tau",
    "c_shift",
    "eps_reg",
    "u0_mean",
    "perturb_amp",
    "rng_seed",
    "c0_value",
    "snapshot_every",
    "output_dir",
    "c_solver",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// 1 for `[0, lx]`, 2 for `[0, lx] x [0, ly]`.
    pub dim: usize,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_final: f64,
    pub params: ModelParams,
    pub u0_mean: f64,
    pub perturb_amp: f64,
    pub rng_seed: u64,
    pub c0_value: f64,
    pub snapshot_every: u64,
    pub output_dir: PathBuf,
    pub c_solver: CSolverKind,
}

impl SimConfig {
    /// `ceil(t_final / dt)`, except that a ratio within rounding of an
    /// integer counts as that integer.
    pub fn n_steps(&self) -> u64 {
        let q = self.t_final / self.dt;
        let nearest = q.round();
        if (q - nearest).abs() <= 1e-9 * q.max(1.0) {
            nearest as u64
        } else {
            q.ceil() as u64
        }
    }

    /// Checks every invariant, naming the first field that violates one.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
            ConfigError::Invalid { field, reason: reason.into() }
        }
        if self.dim != 1 && self.dim != 2 {
            return Err(invalid("dim", format!("must be 1 or 2, got {}", self.dim)));
        }
        if !(self.lx.is_finite() && self.lx > 0.0) {
            return Err(invalid("lx", "must be positive"));
        }
        if self.nx == 0 {
            return Err(invalid("nx", "must be at least 1"));
        }
        if self.dim == 2 {
            if !(self.ly.is_finite() && self.ly > 0.0) {
                return Err(invalid("ly", "must be positive"));
            }
            if self.ny == 0 {
                return Err(invalid("ny", "must be at least 1"));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(invalid("t_final", "must be at least dt"));
        }
        let p = &self.params;
        if !(p.d_u.is_finite() && p.d_u > 0.0) {
            return Err(invalid("d_u", "must be positive"));
        }
        if !(p.chi_c.is_finite() && p.chi_c > 0.0) {
            return Err(invalid("chi_c", "must be positive"));
        }
        if !(p.alpha.is_finite() && p.alpha >= 0.0) {
            return Err(invalid("alpha", "must be nonnegative"));
        }
        if !(p.delta.is_finite() && p.delta >= 0.0) {
            return Err(invalid("delta", "must be nonnegative"));
        }
        if !(p.tau.is_finite() && p.tau > 0.0) {
            return Err(invalid("tau", "must be positive"));
        }
        if !(p.c_shift.is_finite() && p.c_shift > std::f64::consts::LN_2) {
            return Err(invalid("c_shift", "must exceed ln 2 so that E1 stays positive"));
        }
        if !(p.eps_reg > 0.0 && p.eps_reg < 0.5) {
            return Err(invalid("eps_reg", "must lie in (0, 0.5)"));
        }
        if !(0.0..=1.0).contains(&self.u0_mean) {
            return Err(invalid("u0_mean", "must lie in [0, 1]"));
        }
        if !(self.perturb_amp.is_finite() && self.perturb_amp >= 0.0) {
            return Err(invalid("perturb_amp", "must be nonnegative"));
        }
        if self.u0_mean - self.perturb_amp < 0.0 || self.u0_mean + self.perturb_amp > 1.0 {
            return Err(invalid(
                "perturb_amp",
                format!(
                    "u0_mean +- perturb_amp = [{}, {}] leaves [0, 1]",
                    self.u0_mean - self.perturb_amp,
                    self.u0_mean + self.perturb_amp
                ),
            ));
        }
        if !(self.c0_value.is_finite() && self.c0_value >= 0.0) {
            return Err(invalid("c0_value", "must be nonnegative"));
        }
        if self.snapshot_every == 0 {
            return Err(invalid("snapshot_every", "must be at least 1"));
        }
        Ok(())
    }
}

struct Entry {
    line: usize,
    value: String,
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<SimConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut entries: HashMap<&'static str, Entry> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, message: format!("expected `key = value`, got `{content}`") });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line, message: "empty key".into() });
        }
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        };
        if value.is_empty() {
            return Err(ConfigError::BadValue { line, key: key.to_string(), message: "empty value".into() });
        }
        if let Some(first) = entries.get(known) {
            return Err(ConfigError::DuplicateKey { line, key: key.to_string(), first: first.line });
        }
        entries.insert(known, Entry { line, value: value.to_string() });
    }

    let defaults = ModelParams::default();
    let dim = required_int::<usize>(&entries, "dim")?;
    let (ly, ny) = if dim == 2 {
        (required_float(&entries, "ly")?, required_int::<usize>(&entries, "ny")?)
    } else {
        for key in ["ly", "ny"] {
            if let Some(e) = entries.get(key) {
                return Err(ConfigError::BadValue {
                    line: e.line,
                    key: key.to_string(),
                    message: "only used when dim = 2".into(),
                });
            }
        }
        (0.0, 0)
    };
    let params = ModelParams {
        d_u: float_or(&entries, "d_u", defaults.d_u)?,
        chi_c: float_or(&entries, "chi_c", defaults.chi_c)?,
        alpha: float_or(&entries, "alpha", defaults.alpha)?,
        delta: float_or(&entries, "delta", defaults.delta)?,
        tau: float_or(&entries, "tau", defaults.tau)?,
        c_shift: float_or(&entries, "c_shift", defaults.c_shift)?,
        eps_reg: float_or(&entries, "eps_reg", defaults.eps_reg)?,
    };
    let u0_mean = float_or(&entries, "u0_mean", 0.5)?;
    // The uniform steady state of the chemoattractant equation.
    let c0_default = if params.alpha > 0.0 { u0_mean * params.delta / params.alpha } else { 0.0 };
    let c_solver = match entries.get("c_solver") {
        None => CSolverKind::default(),
        Some(e) => match e.value.as_str() {
            "cholesky" => CSolverKind::Cholesky,
            "cg" => CSolverKind::ConjugateGradient,
            other => {
                return Err(ConfigError::BadValue {
                    line: e.line,
                    key: "c_solver".into(),
                    message: format!("expected `cholesky` or `cg`, got `{other}`"),
                })
            }
        },
    };

    let config = SimConfig {
        dim,
        lx: required_float(&entries, "lx")?,
        ly,
        nx: required_int(&entries, "nx")?,
        ny,
        dt: required_float(&entries, "dt")?,
        t_final: required_float(&entries, "t_final")?,
        params,
        u0_mean,
        perturb_amp: float_or(&entries, "perturb_amp", 0.01)?,
        rng_seed: int_or(&entries, "rng_seed", 0)?,
        c0_value: float_or(&entries, "c0_value", c0_default)?,
        snapshot_every: int_or(&entries, "snapshot_every", 1000)?,
        output_dir: entries.get("output_dir").map_or_else(|| PathBuf::from("output"), |e| PathBuf::from(&e.value)),
        c_solver,
    };
    config.validate()?;
    Ok(config)
}

fn parse_float(entries: &HashMap<&'static str, Entry>, key: &'static str) -> Result<Option<f64>, ConfigError> {
    let Some(e) = entries.get(key) else { return Ok(None) };
    e.value.parse::<f64>().map(Some).map_err(|err| ConfigError::BadValue {
        line: e.line,
        key: key.to_string(),
        message: format!("`{}` is not a number ({err})", e.value),
    })
}

fn parse_int<T: std::str::FromStr>(entries: &HashMap<&'static str, Entry>, key: &'static str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    let Some(e) = entries.get(key) else { return Ok(None) };
    e.value.parse::<T>().map(Some).map_err(|err| ConfigError::BadValue {
        line: e.line,
        key: key.to_string(),
        message: format!("`{}` is not a nonnegative integer ({err})", e.value),
    })
}

fn required_float(entries: &HashMap<&'static str, Entry>, key: &'static str) -> Result<f64, ConfigError> {
    parse_float(entries, key)?.ok_or(ConfigError::Missing { field: key })
}

fn float_or(entries: &HashMap<&'static str, Entry>, key: &'static str, default: f64) -> Result<f64, ConfigError> {
    Ok(parse_float(entries, key)?.unwrap_or(default))
}

fn required_int<T: std::str::FromStr>(entries: &HashMap<&'static str, Entry>, key: &'static str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    parse_int(entries, key)?.ok_or(ConfigError::Missing { field: key })
}

fn int_or<T: std::str::FromStr>(entries: &HashMap<&'static str, Entry>, key: &'static str, default: T) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    Ok(parse_int(entries, key)?.unwrap_or(default))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "dim = 1\nlx = 10\nnx = 100\ndt = 0.001\nt_final = 1\n";

    #[test]
    fn defaults_fill_the_model_parameters() {
        let c = parse_config(BASE).unwrap();
        assert_eq!(c.params, ModelParams::default());
        assert_eq!(c.c0_value, 1.0);
        assert_eq!(c.n_steps(), 1000);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = format!("# header\n\n{BASE}rng_seed = 7   # trailing\n");
        assert_eq!(parse_config(&text).unwrap().rng_seed, 7);
    }

    #[test]
    fn step_count_tolerates_rounding() {
        let mut c = parse_config(BASE).unwrap();
        c.t_final = 0.3;
        c.dt = 0.1;
        assert_eq!(c.n_steps(), 3);
        c.t_final = 0.35;
        assert_eq!(c.n_steps(), 4);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config(&format!("{BASE}colour = red\n")).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 6, .. }), "{err}");
    }

    #[test]
    fn missing_equals_is_a_syntax_error() {
        let err = parse_config("dim = 1\nlx 10\n").unwrap_err();
        assert_eq!(err.line(), Some(2));
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = parse_config(&format!("{BASE}dt = 0.01\n")).unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 6, first: 4, .. }), "{err}");
    }

    #[test]
    fn bad_number_names_key_and_line() {
        let err = parse_config("dim = 1\nlx = ten\n").unwrap_err();
        assert_eq!(err.field(), Some("lx"));
        assert_eq!(err.line(), Some(2));
    }

    #[test]
    fn two_dimensional_keys_are_required_in_2d() {
        let err = parse_config(&BASE.replace("dim = 1", "dim = 2")).unwrap_err();
        assert_eq!(err.field(), Some("ly"));
        let err = parse_config(&format!("{BASE}ny = 3\n")).unwrap_err();
        assert_eq!(err.field(), Some("ny"));
    }

    #[test]
    fn solver_choice() {
        let c = parse_config(&format!("{BASE}c_solver = cg\n")).unwrap();
        assert_eq!(c.c_solver, CSolverKind::ConjugateGradient);
        assert!(parse_config(&format!("{BASE}c_solver = lu\n")).is_err());
    }
}
