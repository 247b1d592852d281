//! Table-driven parameters: each experiment declares its flags once and
//! gets both its clap arguments and its config keys from that list.

use std::collections::BTreeMap;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::RunOutput;

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub help: &'static str,
    /// Comma separated for list parameters.
    pub default: Option<&'static str>,
    pub list: bool,
}

pub const fn scalar(name: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        help,
        default: Some(default),
        list: false,
    }
}

pub const fn optional(name: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        help,
        default: None,
        list: false,
    }
}

pub const fn list(name: &'static str, default: Option<&'static str>, help: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        help,
        default,
        list: true,
    }
}

impl ParamSpec {
    pub fn arg(&self) -> Arg {
        let mut a = Arg::new(self.name)
            .long(self.name)
            .help(self.help)
            .allow_negative_numbers(true);
        if self.list {
            a = a.action(ArgAction::Append).value_delimiter(',');
            if let Some(d) = self.default {
                a = a.default_values(d.split(','));
            }
        } else {
            a = a.action(ArgAction::Set);
            if let Some(d) = self.default {
                a = a.default_value(d);
            }
        }
        a
    }
}

pub type Runner = fn(&Params) -> Result<RunOutput, CliError>;

pub struct Experiment {
    pub group: &'static str,
    pub name: &'static str,
    pub about: &'static str,
    pub long_about: &'static str,
    pub params: Vec<ParamSpec>,
    pub run: Runner,
}

impl Experiment {
    pub fn id(&self) -> String {
        format!("{} {}", self.group, self.name)
    }
}

/// Resolved parameter values: command line, then config file, then default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    pub values: BTreeMap<String, Vec<String>>,
}

/// Config keys accepted by every experiment besides its parameters.
pub const GLOBAL_KEYS: [&str; 3] = ["format", "output", "timestamp"];

impl Params {
    pub fn resolve(exp: &Experiment, matches: &ArgMatches, cfg: Option<&ExperimentConfig>) -> Result<Self, CliError> {
        if let Some(cfg) = cfg {
            if let Some(e) = &cfg.experiment {
                if *e != exp.id() {
                    return Err(CliError::Usage(format!(
                        "config is for experiment {e:?}, not {:?}",
                        exp.id()
                    )));
                }
            }
            for k in cfg.keys() {
                if !GLOBAL_KEYS.contains(&k) && !exp.params.iter().any(|p| p.name == k) {
                    return Err(CliError::Usage(format!("unknown config key {k:?} for {}", exp.id())));
                }
            }
        }
        let mut values = BTreeMap::new();
        for p in &exp.params {
            let from_cli = matches.value_source(p.name) == Some(ValueSource::CommandLine);
            let given: Option<Vec<String>> = match (from_cli, cfg.and_then(|c| c.get(p.name))) {
                (false, Some(v)) if p.list => Some(
                    v.iter()
                        .flat_map(|s| s.split(','))
                        .map(|s| s.trim().to_string())
                        .collect(),
                ),
                (false, Some(v)) => Some(v.to_vec()),
                _ => matches.get_many::<String>(p.name).map(|vs| vs.cloned().collect()),
            };
            if let Some(v) = given {
                if !p.list && v.len() > 1 {
                    return Err(CliError::Usage(format!("{} takes a single value", p.name)));
                }
                values.insert(p.name.to_string(), v);
            }
        }
        Ok(Params { values })
    }

    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (k, v) in pairs {
            values.entry(k.to_string()).or_default().push(v.to_string());
        }
        Params { values }
    }

    pub fn has(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn str(&self, name: &str) -> Result<&str, CliError> {
        self.values
            .get(name)
            .and_then(|v| v.first())
            .map(String::as_str)
            .ok_or_else(|| CliError::Usage(format!("missing --{name}")))
    }

    pub fn get<T: FromStr>(&self, name: &str) -> Result<T, CliError> {
        let s = self.str(name)?;
        s.parse()
            .map_err(|_| CliError::Usage(format!("--{name}: cannot parse {s:?}")))
    }

    pub fn opt<T: FromStr>(&self, name: &str) -> Result<Option<T>, CliError> {
        if self.has(name) {
            self.get(name).map(Some)
        } else {
            Ok(None)
        }
    }

    /// `None` when absent or given as `auto`.
    pub fn auto<T: FromStr>(&self, name: &str) -> Result<Option<T>, CliError> {
        match self.values.get(name).and_then(|v| v.first()) {
            None => Ok(None),
            Some(s) if s == "auto" => Ok(None),
            Some(_) => self.get(name).map(Some),
        }
    }

    pub fn strings(&self, name: &str) -> &[String] {
        self.values.get(name).map_or(&[], Vec::as_slice)
    }

    pub fn list<T: FromStr>(&self, name: &str) -> Result<Vec<T>, CliError> {
        self.strings(name)
            .iter()
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("--{name}: cannot parse {s:?}")))
            })
            .collect()
    }
}
