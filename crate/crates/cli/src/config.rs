//! Flag/file configuration merging: every run option can come from a flat
//! `key=value` config file, with command-line flags taking precedence and
//! built-in defaults filling the rest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Values read from an optional config file plus a record of every resolved
/// setting, for the reproducibility header.
pub struct Resolver {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut file = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    ConfigError(format!("{}:{}: expected key=value", p.display(), lineno + 1))
                })?;
                file.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Resolver { file, resolved: BTreeMap::new() })
    }

    /// Single scalar: flag beats file beats default.
    pub fn scalar<T: FromStr + ToString>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, ConfigError> {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => raw
                    .parse::<T>()
                    .map_err(|_| ConfigError(format!("bad value for {key}: {raw}")))?,
                None => default,
            },
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// Comma-separated list of floats.
    pub fn list(
        &mut self,
        key: &str,
        flag: Option<String>,
        default: &[f64],
    ) -> Result<Vec<f64>, ConfigError> {
        let raw = match flag {
            Some(v) => Some(v),
            None => self.file.get(key).cloned(),
        };
        let values = match raw {
            Some(raw) => raw
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| ConfigError(format!("bad list entry for {key}: {s}")))
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => default.to_vec(),
        };
        if values.is_empty() {
            return Err(ConfigError(format!("{key} must be non-empty")));
        }
        self.resolved.insert(
            key.to_string(),
            values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
        );
        Ok(values)
    }

    /// One `key=value` line describing the fully resolved configuration.
    pub fn header(&self, subcommand: &str) -> String {
        let mut line = format!(
            "# tcspin v{} subcommand={subcommand}",
            env!("CARGO_PKG_VERSION")
        );
        for (k, v) in &self.resolved {
            let _ = write!(line, " {k}={v}");
        }
        line
    }
}

/// Uniform time grid; `steps` points from `start` to `stop` inclusive.
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.start < 0.0 {
            return Err(ConfigError(format!("t_start must be ≥ 0, got {}", self.start)));
        }
        if self.steps < 2 {
            return Err(ConfigError(format!("t_steps must be ≥ 2, got {}", self.steps)));
        }
        if self.stop < self.start {
            return Err(ConfigError("t_stop must be ≥ t_start".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// 17 significant digits, the bit-exact CSV float format.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
