//! Flat `key = value` configuration for `simulate`.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may appear at
//! most once and unknown keys are rejected, so a typo never silently falls
//! back to a default.

use std::str::FromStr;

use escalation::extension::RuleKind;
use escalation::order::SafetyParams;
use escalation::sim::Scenario;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Usage(format!("unknown format {other:?}; expected csv or json"))),
        }
    }
}

/// Every setting is optional so that files and flags can be layered.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub doses: Option<usize>,
    pub r: Option<u32>,
    pub rule: Option<RuleKind>,
    pub mtd_mean: Option<f64>,
    pub mtd_sd: Option<f64>,
    pub arrival_rate: Option<f64>,
    pub participants: Option<usize>,
    pub titration_wait: Option<f64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub output: Option<String>,
    pub events: Option<String>,
}

pub const KEYS: [&str; 13] = [
    "doses",
    "r",
    "rule",
    "mtd_mean",
    "mtd_sd",
    "arrival_rate",
    "participants",
    "titration_wait",
    "reps",
    "seed",
    "format",
    "output",
    "events",
];

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| CliError::Config { line, msg: format!("invalid value {raw:?} for {key}") })
}

/// Reals additionally accept `inf` (for `titration_wait`).
fn real(line: usize, key: &str, raw: &str) -> Result<f64> {
    let x: f64 = value(line, key, raw)?;
    if x.is_nan() {
        return Err(CliError::Config { line, msg: format!("{key} must be a number") });
    }
    Ok(x)
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, val) = trimmed
                .split_once('=')
                .ok_or_else(|| CliError::Config { line, msg: format!("expected key = value, got {trimmed:?}") })?;
            let (key, val) = (key.trim(), val.trim());
            if val.is_empty() {
                return Err(CliError::Config { line, msg: format!("missing value for {key}") });
            }
            if seen.contains(&key) {
                return Err(CliError::Config { line, msg: format!("duplicate key {key}") });
            }
            match key {
                "doses" => cfg.doses = Some(value(line, key, val)?),
                "r" => cfg.r = Some(value(line, key, val)?),
                "rule" => {
                    cfg.rule = Some(val.parse().map_err(|_| CliError::Config {
                        line,
                        msg: format!("invalid rule {val:?}; expected kan or galois"),
                    })?)
                }
                "mtd_mean" => cfg.mtd_mean = Some(real(line, key, val)?),
                "mtd_sd" => cfg.mtd_sd = Some(real(line, key, val)?),
                "arrival_rate" => cfg.arrival_rate = Some(real(line, key, val)?),
                "participants" => cfg.participants = Some(value(line, key, val)?),
                "titration_wait" => cfg.titration_wait = Some(real(line, key, val)?),
                "reps" => cfg.reps = Some(value(line, key, val)?),
                "seed" => cfg.seed = Some(value(line, key, val)?),
                "format" => {
                    cfg.format = Some(val.parse().map_err(|_| CliError::Config {
                        line,
                        msg: format!("invalid format {val:?}; expected csv or json"),
                    })?)
                }
                "output" => cfg.output = Some(val.to_string()),
                "events" => cfg.events = Some(val.to_string()),
                other => {
                    return Err(CliError::Config {
                        line,
                        msg: format!("unknown key {other:?}; known keys: {}", KEYS.join(", ")),
                    })
                }
            }
            seen.push(key);
        }
        Ok(cfg)
    }

    /// Values set in `over` win.
    pub fn overlay(self, over: Config) -> Config {
        Config {
            doses: over.doses.or(self.doses),
            r: over.r.or(self.r),
            rule: over.rule.or(self.rule),
            mtd_mean: over.mtd_mean.or(self.mtd_mean),
            mtd_sd: over.mtd_sd.or(self.mtd_sd),
            arrival_rate: over.arrival_rate.or(self.arrival_rate),
            participants: over.participants.or(self.participants),
            titration_wait: over.titration_wait.or(self.titration_wait),
            reps: over.reps.or(self.reps),
            seed: over.seed.or(self.seed),
            format: over.format.or(self.format),
            output: over.output.or(self.output),
            events: over.events.or(self.events),
        }
    }

    /// Builds the simulation scenario, filling gaps with the reference
    /// scenario: three doses, MTD ~ Normal(3, ln 1.5 / ln 1.4), 2.5 arrivals
    /// per period, 40 participants, titration wait 1, 1000 replicates.
    pub fn scenario(&self) -> Result<Scenario> {
        let doses = self.doses.unwrap_or(3);
        let params = SafetyParams::new(doses, self.r.unwrap_or(SafetyParams::DEFAULT_R))?;
        let rule = escalation::extension::DoseRule::for_three_plus_three(self.rule.unwrap_or(RuleKind::Kan), params)?;
        let scenario = Scenario {
            doses,
            mtd_mean: self.mtd_mean.unwrap_or(doses as f64),
            mtd_sd: self.mtd_sd.unwrap_or_else(Scenario::default_mtd_sd),
            arrival_rate: self.arrival_rate.unwrap_or(2.5),
            participants: self.participants.unwrap_or(40),
            titration_wait: self.titration_wait.unwrap_or(1.0),
            rule,
            reps: self.reps.unwrap_or(1000),
            seed: self.seed.unwrap_or(1),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
