//! Command bodies. Each returns the full text of its output so it can be
//! written to stdout or a file, and compared byte-for-byte in tests.

use std::collections::HashMap;
use std::io::Write;

use escalation::extension::{DoseRule, GaloisRule, KanRule};
use escalation::hasse::{hasse_dot, transitive_reduction};
use escalation::normal::tox_probabilities;
use escalation::order::SafetyParams;
use escalation::protocol::{enumerate, outcome_probabilities};
use escalation::sim::{replicate_results, summarize, LogRecord, Scenario};
use escalation::tally::{EnrolledState, PendingCounts, Tally};
use serde::Serialize;

use crate::config::Format;
use crate::error::{CliError, Result};

fn csv_text<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_text<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn emit<R: Serialize>(rows: &[R], format: Format) -> Result<String> {
    match format {
        Format::Csv => csv_text(rows),
        Format::Json => json_text(rows),
    }
}

#[derive(Serialize)]
struct PathRow {
    path: usize,
    outcomes: String,
    final_tally: String,
    recommendation: u32,
}

pub fn paths(doses: usize, format: Format) -> Result<String> {
    let table = enumerate(doses)?;
    let rows: Vec<PathRow> = table
        .paths()
        .iter()
        .enumerate()
        .map(|(i, p)| PathRow {
            path: i + 1,
            outcomes: p.outcome_string(),
            final_tally: p.final_tally.to_string(),
            recommendation: p.recommendation,
        })
        .collect();
    emit(&rows, format)
}

#[derive(Serialize)]
struct TallyRow {
    tally: String,
    recommendation: u32,
    terminal: bool,
}

pub fn tallies(doses: usize, format: Format) -> Result<String> {
    let table = enumerate(doses)?;
    let rows: Vec<TallyRow> = table
        .entries()
        .iter()
        .map(|(q, e)| TallyRow { tally: q.to_string(), recommendation: e.recommendation, terminal: e.terminal })
        .collect();
    emit(&rows, format)
}

/// Hasse diagram of the accessible tallies, coloured by the protocol's
/// recommendation or by its rectification.
pub fn hasse(doses: usize, r: u32, rectified: bool) -> Result<String> {
    let params = SafetyParams::new(doses, r)?;
    let table = enumerate(doses)?;
    let set: Vec<Tally> = table.tallies().cloned().collect();
    let labels: HashMap<Tally, u32> = if rectified {
        table.rectify(params)?.into_iter().collect()
    } else {
        table.entries().iter().map(|(q, e)| (q.clone(), e.recommendation)).collect()
    };
    Ok(hasse_dot(&transitive_reduction(&set, params)?, &labels)?)
}

pub fn fibers(doses: usize, r: u32) -> Result<String> {
    let params = SafetyParams::new(doses, r)?;
    json_text(&DoseRule::Kan(KanRule::build(&enumerate(doses)?, params)?))
}

pub fn galois(doses: usize, r: u32) -> Result<String> {
    let params = SafetyParams::new(doses, r)?;
    json_text(&DoseRule::Galois(GaloisRule::build(&enumerate(doses)?, params)?))
}

/// Recommendation for a resolved tally, pessimized by pending counts.
pub fn recommend(rule: &DoseRule, tally: &Tally, pending: Option<Vec<u32>>) -> Result<u32> {
    let pending = match pending {
        Some(counts) => PendingCounts::from_counts(counts)?,
        None => PendingCounts::zero(tally.dims()),
    };
    let state = EnrolledState::new(tally.clone(), pending)?;
    Ok(rule.recommend(&state.pessimize())?)
}

/// Parses pending counts written as space- or comma-separated integers.
pub fn parse_counts(text: &str) -> Result<Vec<u32>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Usage(format!("invalid count {s:?}"))))
        .collect()
}

/// Parses probabilities written as space- or comma-separated reals.
pub fn parse_probs(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Usage(format!("invalid probability {s:?}"))))
        .collect()
}

pub enum ToxModel {
    Probabilities(Vec<f64>),
    Normal { mean: f64, sd: f64 },
}

fn rec_header(doses: usize) -> Vec<String> {
    (0..=doses).map(|d| format!("rec{d}")).collect()
}

fn row_csv(header: &[String], values: &[String]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    w.write_record(values)?;
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct Exact {
    tox_probabilities: Vec<f64>,
    rec_probabilities: Vec<f64>,
}

/// Exact 3+3 final-recommendation distribution.
pub fn exact33(doses: usize, model: ToxModel, format: Format) -> Result<String> {
    let p = match model {
        ToxModel::Probabilities(p) => p,
        ToxModel::Normal { mean, sd } => tox_probabilities(doses, mean, sd)?,
    };
    let rec = outcome_probabilities(doses, &p)?;
    match format {
        Format::Csv => row_csv(&rec_header(doses), &rec.iter().map(f64::to_string).collect::<Vec<_>>()),
        Format::Json => json_text(&Exact { tox_probabilities: p, rec_probabilities: rec }),
    }
}

#[derive(Serialize)]
struct EventLine<'a> {
    rep: usize,
    #[serde(flatten)]
    record: &'a LogRecord,
}

pub struct SimOutput {
    pub summary: String,
    /// One JSON object per line, replicate by replicate.
    pub events: Option<String>,
}

pub fn simulate(scenario: &Scenario, format: Format, with_events: bool) -> Result<SimOutput> {
    let results = replicate_results(scenario)?;
    let summary = summarize(scenario, &results);
    let text = match format {
        Format::Csv => {
            let mut header = rec_header(scenario.doses);
            header.extend(["mean_tox", "mean_titrations", "reps", "seed"].map(String::from));
            let mut values: Vec<String> = summary.rec_freq.iter().map(f64::to_string).collect();
            values.extend([
                summary.mean_tox.to_string(),
                summary.mean_titrations.to_string(),
                summary.reps.to_string(),
                summary.seed.to_string(),
            ]);
            row_csv(&header, &values)?
        }
        Format::Json => json_text(&summary)?,
    };
    let events = if with_events {
        let mut buf = Vec::new();
        for (rep, r) in results.iter().enumerate() {
            for record in &r.events {
                serde_json::to_writer(&mut buf, &EventLine { rep, record })?;
                buf.write_all(b"\n").expect("writing to a Vec cannot fail");
            }
        }
        Some(String::from_utf8(buf).expect("json output is utf-8"))
    } else {
        None
    };
    Ok(SimOutput { summary: text, events })
}
