//! Flat `key = value` experiment files.
//!
//! One entry per line; a repeated key appends to that key's list. Blank
//! lines and lines starting with `#` are ignored. Values are kept as the
//! exact text given, so decimals reach their consumer unrounded.

use std::fmt;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExperimentConfig {
    /// Subcommand path, e.g. `eigen solve`.
    pub experiment: Option<String>,
    /// Keys in first-appearance order, each with its values.
    pub entries: Vec<(String, Vec<String>)>,
}

pub const EXPERIMENT_KEY: &str = "experiment";

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
        && k.as_bytes()[0].is_ascii_lowercase()
}

fn valid_value(v: &str) -> bool {
    !v.is_empty() && v.trim() == v && !v.contains(['\n', '\r'])
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| CliError::Usage(format!("config line {}: {msg}: {raw:?}", lineno + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value"))?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(err("bad key"));
            }
            if v.is_empty() {
                return Err(err("empty value"));
            }
            if k == EXPERIMENT_KEY {
                if cfg.experiment.is_some() {
                    return Err(err("experiment given twice"));
                }
                cfg.experiment = Some(v.split_whitespace().collect::<Vec<_>>().join(" "));
            } else {
                cfg.push(k, v);
            }
        }
        Ok(cfg)
    }

    pub fn push(&mut self, key: &str, value: &str) {
        match self.entries.iter_mut().find(|e| e.0 == key) {
            Some(e) => e.1.push(value.to_string()),
            None => self.entries.push((key.to_string(), vec![value.to_string()])),
        }
    }

    pub fn get(&self, key: &str) -> Option<&[String]> {
        self.entries.iter().find(|e| e.0 == key).map(|e| e.1.as_slice())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.0.as_str())
    }

    /// Whether [`fmt::Display`] output parses back to `self`.
    pub fn is_canonical(&self) -> bool {
        let exp_ok = self
            .experiment
            .as_deref()
            .is_none_or(|e| valid_value(e) && e.split_whitespace().collect::<Vec<_>>().join(" ") == e);
        let mut seen = std::collections::HashSet::new();
        exp_ok
            && self.entries.iter().all(|(k, vs)| {
                valid_key(k)
                    && k != EXPERIMENT_KEY
                    && seen.insert(k)
                    && !vs.is_empty()
                    && vs.iter().all(|v| valid_value(v))
            })
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(e) = &self.experiment {
            writeln!(f, "{EXPERIMENT_KEY} = {e}")?;
        }
        for (k, vs) in &self.entries {
            for v in vs {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}
