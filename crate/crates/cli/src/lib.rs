//! Command-line front end: argument definitions, config files and command
//! bodies. `main.rs` only maps the result onto stdout and an exit code.

pub mod commands;
pub mod config;
pub mod error;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use escalation::extension::{DoseRule, RuleKind};
use escalation::order::SafetyParams;
use escalation::sim::Scenario;
use escalation::tally::Tally;

use crate::commands::ToxModel;
use crate::config::{Config, Format};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "escalation", version, about = "Safety-ordered dose-escalation design tools")]
pub struct Cli {
    /// Write the primary output to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Every path through the 3+3 protocol.
    Paths {
        doses: usize,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Accessible 3+3 tallies with their recommendations.
    Tallies {
        doses: usize,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Hasse diagram of the accessible tallies in DOT.
    Hasse {
        doses: usize,
        #[arg(long, default_value_t = SafetyParams::DEFAULT_R)]
        r: u32,
        /// Colour nodes by the rectified (monotone) recommendation.
        #[arg(long)]
        rectified: bool,
    },
    /// Maximal elements of each recommendation fiber, as a Kan rule in JSON.
    Fibers {
        doses: usize,
        #[arg(long, default_value_t = SafetyParams::DEFAULT_R)]
        r: u32,
    },
    /// Fiber joins g_0 ≼ ... ≼ g_{D-1}, as a Galois rule in JSON.
    Galois {
        doses: usize,
        #[arg(long, default_value_t = SafetyParams::DEFAULT_R)]
        r: u32,
    },
    /// Dose recommendation for a tally, optionally pessimized by pending
    /// assessments.
    Recommend {
        /// kan or galois, derived from the 3+3 protocol.
        #[arg(default_value = "kan", conflicts_with = "rule_file")]
        rule: RuleKind,
        #[arg(long, default_value_t = SafetyParams::DEFAULT_R)]
        r: u32,
        /// Space-separated t/n entries, lowest dose first.
        #[arg(long)]
        tally: Tally,
        /// Pending assessments per dose, e.g. "0 1 0".
        #[arg(long)]
        pending: Option<String>,
        /// Rule JSON as produced by `fibers` or `galois`.
        #[arg(long)]
        rule_file: Option<PathBuf>,
    },
    /// Exact 3+3 final-recommendation probabilities.
    Exact33 {
        doses: usize,
        /// Per-dose toxicity probabilities, e.g. "0.05,0.2,0.5".
        #[arg(long, conflicts_with_all = ["mean", "sd"])]
        probs: Option<String>,
        /// Mean MTD on the dose-level scale (defaults to the top dose).
        #[arg(long)]
        mean: Option<f64>,
        /// MTD standard deviation on the dose-level scale.
        #[arg(long)]
        sd: Option<f64>,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Monte-Carlo rolling-enrollment trials.
    Simulate {
        /// Flat key = value config file; flags override its values.
        config: Option<PathBuf>,
        #[arg(long)]
        doses: Option<usize>,
        #[arg(long)]
        r: Option<u32>,
        #[arg(long)]
        rule: Option<RuleKind>,
        #[arg(long)]
        mtd_mean: Option<f64>,
        #[arg(long)]
        mtd_sd: Option<f64>,
        #[arg(long)]
        arrival_rate: Option<f64>,
        #[arg(long)]
        participants: Option<usize>,
        /// Delay before each up-titration; `inf` disables titration.
        #[arg(long)]
        titration_wait: Option<f64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        format: Option<Format>,
        /// Write every replicate's event log here as JSON lines.
        #[arg(long)]
        events: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn load_rule(kind: RuleKind, r: u32, dims: usize, file: Option<&Path>) -> Result<DoseRule> {
    let rule = match file {
        Some(path) => serde_json::from_str(&read(path)?)?,
        None => DoseRule::for_three_plus_three(kind, SafetyParams::new(dims, r)?)?,
    };
    Ok(rule)
}

/// Runs a parsed command. Returns what belongs on standard output, which is
/// empty when `--output` redirected it.
pub fn run(cli: Cli) -> Result<String> {
    let mut output = cli.output;
    let text = match cli.command {
        Command::Paths { doses, format } => commands::paths(doses, format)?,
        Command::Tallies { doses, format } => commands::tallies(doses, format)?,
        Command::Hasse { doses, r, rectified } => commands::hasse(doses, r, rectified)?,
        Command::Fibers { doses, r } => commands::fibers(doses, r)?,
        Command::Galois { doses, r } => commands::galois(doses, r)?,
        Command::Recommend { rule, r, tally, pending, rule_file } => {
            let rule = load_rule(rule, r, tally.dims(), rule_file.as_deref())?;
            let pending = pending.as_deref().map(commands::parse_counts).transpose()?;
            format!("{}\n", commands::recommend(&rule, &tally, pending)?)
        }
        Command::Exact33 { doses, probs, mean, sd, format } => {
            let model = match probs {
                Some(p) => ToxModel::Probabilities(commands::parse_probs(&p)?),
                None => ToxModel::Normal {
                    mean: mean.unwrap_or(doses as f64),
                    sd: sd.unwrap_or_else(Scenario::default_mtd_sd),
                },
            };
            commands::exact33(doses, model, format)?
        }
        Command::Simulate {
            config,
            doses,
            r,
            rule,
            mtd_mean,
            mtd_sd,
            arrival_rate,
            participants,
            titration_wait,
            reps,
            seed,
            format,
            events,
        } => {
            let base = match &config {
                Some(path) => Config::parse(&read(path)?)?,
                None => Config::default(),
            };
            let flags = Config {
                doses,
                r,
                rule,
                mtd_mean,
                mtd_sd,
                arrival_rate,
                participants,
                titration_wait,
                reps,
                seed,
                format,
                output: output.as_ref().map(|p| p.display().to_string()),
                events: events.map(|p| p.display().to_string()),
            };
            let cfg = base.overlay(flags);
            output = cfg.output.as_ref().map(PathBuf::from);
            let scenario = cfg.scenario()?;
            let out = commands::simulate(&scenario, cfg.format.unwrap_or(Format::Csv), cfg.events.is_some())?;
            if let (Some(path), Some(log)) = (&cfg.events, &out.events) {
                write(Path::new(path), log)?;
            }
            out.summary
        }
    };
    match output {
        Some(path) => {
            write(&path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}
