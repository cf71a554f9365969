//! Continuous-time rolling-enrollment trial simulation with titration.
//!
//! Time is measured in toxicity-assessment periods. Participants arrive as a
//! Poisson process and each carries a latent MTD on the dose-level scale:
//! dose `d` is tolerated iff `d <= mtd`. A tolerated assessment resolves one
//! period after administration; a toxicity resolves after `mtd / d` periods
//! (clamped at 0).
//!
//! Enrollment is gated by the dose rule applied to the pessimized state,
//! where every pending enrollment assessment counts as a toxicity. Pending
//! titrations are not pessimized. Arrivals finding the recommendation at 0
//! (or others already waiting) join a FIFO queue, which drains whenever a
//! tolerated assessment raises the recommendation. Every tolerated dose below
//! the top schedules a one-level up-titration for the same participant after
//! `titration_wait`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dims, Error, Result};
use crate::extension::DoseRule;
use crate::tally::{EnrolledState, PendingCounts, Tally};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub doses: usize,
    pub mtd_mean: f64,
    pub mtd_sd: f64,
    /// Arrivals per assessment period.
    pub arrival_rate: f64,
    pub participants: usize,
    /// Delay between a tolerated assessment and the next titrated dose. A
    /// non-finite value disables titration.
    pub titration_wait: f64,
    pub rule: DoseRule,
    pub reps: usize,
    pub seed: u64,
}

impl Scenario {
    /// MTD standard deviation on the dose-level scale for a lognormal MTD
    /// with log-sd `ln 1.5` and doses spaced by a factor of 1.4.
    pub fn default_mtd_sd() -> f64 {
        1.5f64.ln() / 1.4f64.ln()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        check_dims(self.rule.params().doses(), self.doses)?;
        if !self.mtd_mean.is_finite() {
            return bad(format!("MTD mean must be finite, got {}", self.mtd_mean));
        }
        if !(self.mtd_sd > 0.0 && self.mtd_sd.is_finite()) {
            return bad(format!("MTD sd must be positive, got {}", self.mtd_sd));
        }
        if !(self.arrival_rate > 0.0 && self.arrival_rate.is_finite()) {
            return bad(format!("arrival rate must be positive, got {}", self.arrival_rate));
        }
        if self.titration_wait.is_nan() || self.titration_wait < 0.0 {
            return bad(format!("titration wait must be non-negative, got {}", self.titration_wait));
        }
        if self.reps == 0 {
            return bad("at least one replicate is required".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Tolerated,
    Toxicity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Administration {
    pub dose: usize,
    pub start: f64,
    pub resolve: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Participant {
    pub id: usize,
    pub mtd: f64,
    pub arrival: f64,
    pub doses: Vec<Administration>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival { participant: usize },
    EnrollAssessment { participant: usize, dose: usize },
    TitrationAssessment { participant: usize, dose: usize },
}

/// A scheduled event, ordered by `(time, seq)`.
#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so that `BinaryHeap` pops the earliest event first.
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LogKind {
    Enroll,
    Enqueue,
    Dequeue,
    #[serde(rename = "o")]
    Tolerated,
    #[serde(rename = "x")]
    Toxicity,
    Updose,
    Next,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRecord {
    pub time: f64,
    pub kind: LogKind,
    pub participant: Option<usize>,
    pub dose: Option<usize>,
    pub outcome: Option<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub final_tally: Tally,
    pub final_rec: u32,
    pub events: Vec<LogRecord>,
    pub queue_leftover: usize,
    pub participants: Vec<Participant>,
}

impl TrialResult {
    pub fn enrolled(&self) -> usize {
        self.participants.iter().filter(|p| !p.doses.is_empty()).count()
    }

    pub fn titrations(&self) -> usize {
        self.participants.iter().map(|p| p.doses.len().saturating_sub(1)).sum()
    }

    /// Re-derives the final tally from the event log alone.
    pub fn replay_tally(&self) -> Result<Tally> {
        let mut tally = Tally::zero(self.final_tally.dims())?;
        let mut last_tolerated: Vec<Option<usize>> = vec![None; self.participants.len()];
        for rec in &self.events {
            let (Some(p), Some(d)) = (rec.participant, rec.dose) else { continue };
            match rec.kind {
                LogKind::Tolerated => {
                    if let Some(prev) = last_tolerated[p] {
                        tally.retract(prev, 0, 1)?;
                    }
                    tally.record(d, 0, 1)?;
                    last_tolerated[p] = Some(d);
                }
                LogKind::Toxicity => tally.record(d, 1, 1)?,
                _ => {}
            }
        }
        Ok(tally)
    }
}

/// `n` arrival times: the first at 0, then cumulative `Exponential(rate)`
/// gaps.
pub fn sample_arrivals<R: Rng + ?Sized>(rate: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!("arrival rate must be positive, got {rate}")));
    }
    let gaps = Exp::new(rate).map_err(|e| Error::InvalidParameter(format!("arrival rate {rate}: {e}")))?;
    let mut t = 0.0;
    Ok((0..n)
        .map(|i| {
            if i > 0 {
                t += gaps.sample(rng);
            }
            t
        })
        .collect())
}

/// Time from administration of `dose` to resolution of its assessment.
fn latency(mtd: f64, dose: usize) -> f64 {
    let dose = dose as f64;
    if dose <= mtd {
        1.0
    } else {
        mtd.clamp(0.0, dose) / dose
    }
}

struct Trial<'a> {
    scenario: &'a Scenario,
    state: EnrolledState,
    queue: VecDeque<usize>,
    events: BinaryHeap<Event>,
    seq: u64,
    participants: Vec<Participant>,
    log: Vec<LogRecord>,
}

impl Trial<'_> {
    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.events.push(Event { time, seq: self.seq, kind });
    }

    fn note(&mut self, time: f64, kind: LogKind, participant: Option<usize>, dose: Option<usize>, outcome: Option<Outcome>) {
        self.log.push(LogRecord { time, kind, participant, dose, outcome });
    }

    fn current_rec(&self) -> Result<u32> {
        self.scenario.rule.recommend(&self.state.pessimize())
    }

    fn administer(&mut self, participant: usize, dose: usize, start: f64, titration: bool) {
        let mtd = self.participants[participant].mtd;
        let resolve = start + latency(mtd, dose);
        let outcome = if dose as f64 > mtd { Outcome::Toxicity } else { Outcome::Tolerated };
        self.participants[participant].doses.push(Administration { dose, start, resolve, outcome });
        let kind = if titration {
            EventKind::TitrationAssessment { participant, dose }
        } else {
            EventKind::EnrollAssessment { participant, dose }
        };
        self.push(resolve, kind);
    }

    fn arrival(&mut self, now: f64, participant: usize) -> Result<()> {
        let rec = self.current_rec()?;
        if rec > 0 && self.queue.is_empty() {
            self.state.pending.add(rec as usize);
            self.administer(participant, rec as usize, now, false);
            self.note(now, LogKind::Enroll, Some(participant), Some(rec as usize), None);
        } else {
            self.queue.push_back(participant);
            self.note(now, LogKind::Enqueue, Some(participant), None, None);
        }
        Ok(())
    }

    fn resolve(&mut self, now: f64, participant: usize, dose: usize, titration: bool) -> Result<()> {
        if !titration {
            self.state.pending.remove(dose);
        }
        let mtd = self.participants[participant].mtd;
        if dose as f64 > mtd {
            self.state.tally.record(dose, 1, 1)?;
            self.note(now, LogKind::Toxicity, Some(participant), Some(dose), Some(Outcome::Toxicity));
            return Ok(());
        }
        if titration {
            self.state.tally.retract(dose - 1, 0, 1)?;
        }
        self.state.tally.record(dose, 0, 1)?;
        self.note(now, LogKind::Tolerated, Some(participant), Some(dose), Some(Outcome::Tolerated));

        let start = now + self.scenario.titration_wait;
        if dose < self.scenario.doses && start.is_finite() {
            let next = dose + 1;
            self.administer(participant, next, start, true);
            self.note(now, LogKind::Updose, Some(participant), Some(next), None);
        }

        // freeze-frame: drain the queue while the recommendation is positive
        while let Some(&head) = self.queue.front() {
            let rec = self.current_rec()?;
            if rec == 0 {
                break;
            }
            self.queue.pop_front();
            self.state.pending.add(rec as usize);
            self.administer(head, rec as usize, now, false);
            self.note(now, LogKind::Dequeue, Some(head), Some(rec as usize), None);
        }
        Ok(())
    }
}

/// Runs one trial to completion.
pub fn run_trial<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<TrialResult> {
    scenario.validate()?;
    let arrivals = sample_arrivals(scenario.arrival_rate, scenario.participants, rng)?;
    let mtd_dist = Normal::new(scenario.mtd_mean, scenario.mtd_sd)
        .map_err(|e| Error::InvalidParameter(format!("MTD distribution: {e}")))?;
    let participants = arrivals
        .iter()
        .enumerate()
        .map(|(id, &arrival)| Participant { id, mtd: mtd_dist.sample(rng), arrival, doses: Vec::new() })
        .collect();
    run_trial_with(scenario, participants)
}

/// Runs one trial over a fixed participant list (ids must be `0..len`).
pub fn run_trial_with(scenario: &Scenario, participants: Vec<Participant>) -> Result<TrialResult> {
    scenario.validate()?;
    if participants.iter().enumerate().any(|(i, p)| p.id != i || !p.doses.is_empty()) {
        return Err(Error::InvalidParameter("participants must be numbered 0.. and not yet dosed".into()));
    }
    let mut trial = Trial {
        scenario,
        state: EnrolledState::new(Tally::zero(scenario.doses)?, PendingCounts::zero(scenario.doses))?,
        queue: VecDeque::new(),
        events: BinaryHeap::new(),
        seq: 0,
        participants,
        log: Vec::new(),
    };
    for i in 0..trial.participants.len() {
        let t = trial.participants[i].arrival;
        trial.push(t, EventKind::Arrival { participant: i });
    }

    while let Some(ev) = trial.events.pop() {
        match ev.kind {
            EventKind::Arrival { participant } => trial.arrival(ev.time, participant)?,
            EventKind::EnrollAssessment { participant, dose } => trial.resolve(ev.time, participant, dose, false)?,
            EventKind::TitrationAssessment { participant, dose } => trial.resolve(ev.time, participant, dose, true)?,
        }
    }

    let final_rec = if trial.queue.is_empty() { scenario.rule.recommend(&trial.state.tally)? } else { 0 };
    let end = trial.log.last().map_or(0.0, |r| r.time);
    trial.note(end, LogKind::Next, None, Some(final_rec as usize), None);
    Ok(TrialResult {
        final_tally: trial.state.tally,
        final_rec,
        events: trial.log,
        queue_leftover: trial.queue.len(),
        participants: trial.participants,
    })
}

/// Random stream for replicate `index`: ChaCha8 seeded by the master seed,
/// one stream per replicate.
pub fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs replicate `index` of `scenario`.
pub fn run_replicate(scenario: &Scenario, index: usize) -> Result<TrialResult> {
    run_trial(scenario, &mut replicate_rng(scenario.seed, index))
}

/// All replicates, in index order. Runs in parallel.
pub fn replicate_results(scenario: &Scenario) -> Result<Vec<TrialResult>> {
    scenario.validate()?;
    (0..scenario.reps).into_par_iter().map(|i| run_replicate(scenario, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    /// Frequency of each final recommendation `0..=D`.
    pub rec_freq: Vec<f64>,
    pub mean_tox: f64,
    pub mean_titrations: f64,
    pub reps: usize,
    pub seed: u64,
}

pub fn summarize(scenario: &Scenario, results: &[TrialResult]) -> Summary {
    let reps = results.len();
    let mut counts = vec![0usize; scenario.doses + 1];
    for r in results {
        counts[r.final_rec as usize] += 1;
    }
    let mean = |f: &dyn Fn(&TrialResult) -> f64| results.iter().map(f).sum::<f64>() / reps.max(1) as f64;
    Summary {
        rec_freq: counts.iter().map(|&c| c as f64 / reps.max(1) as f64).collect(),
        mean_tox: mean(&|r| r.final_tally.total_tox() as f64),
        mean_titrations: mean(&|r| r.titrations() as f64),
        reps,
        seed: scenario.seed,
    }
}

/// Runs every replicate and summarizes the operating characteristics.
pub fn replicate(scenario: &Scenario) -> Result<Summary> {
    Ok(summarize(scenario, &replicate_results(scenario)?))
}
