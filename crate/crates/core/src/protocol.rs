//! The executable 3+3 dose-escalation protocol.
//!
//! Cohorts of three are enrolled at the current dose, at most six per dose.
//! After each cohort the cumulative tally `t/n` at that dose decides the
//! next step:
//!
//! * `0/3`: escalate (a confirmatory second cohort at the top dose);
//! * `1/3`: second cohort at the same dose;
//! * `t/6` with `t <= 1`: escalate, or stop at this dose if the next dose has
//!   already failed or this is the top dose;
//! * two or more toxicities: de-escalate. A fallback dose with three treated
//!   gets a second cohort; one with six treated and at most one toxicity is
//!   recommended. Failing dose 1 recommends 0.
//!
//! [`enumerate`] expands every cohort-outcome sequence into a
//! [`ProtocolTable`] of accessible tallies.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{check_dims, Error, Result};
use crate::order::{leq, SafetyParams};
use crate::tally::Tally;

pub const COHORT_SIZE: u32 = 3;
pub const MAX_PER_DOSE: u32 = 6;
pub const MAX_DOSES: usize = 8;

/// Toxicities observed in one cohort of three at a dose level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CohortOutcome {
    pub dose: usize,
    pub tox: u32,
}

impl fmt::Display for CohortOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}:{}", self.dose, self.tox)
    }
}

/// One complete run of the protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathRecord {
    pub outcomes: Vec<CohortOutcome>,
    pub final_tally: Tally,
    pub recommendation: u32,
}

impl PathRecord {
    /// Outcomes as `d1:0 d2:1 d2:1`.
    pub fn outcome_string(&self) -> String {
        self.outcomes.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
    }
}

/// `F(a)` for an accessible tally: the next enrolling dose, or the final
/// recommendation when `terminal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableEntry {
    pub recommendation: u32,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct ProtocolTable {
    doses: usize,
    entries: BTreeMap<Tally, TableEntry>,
    paths: Vec<PathRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Enroll(usize),
    Stop(u32),
}

fn de_escalate(tally: &Tally, from: usize) -> Step {
    let mut d = from;
    loop {
        if d == 1 {
            return Step::Stop(0);
        }
        let below = tally.doses()[d - 2];
        if below.n < MAX_PER_DOSE {
            return Step::Enroll(d - 1);
        }
        if below.tox <= 1 {
            return Step::Stop(d as u32 - 1);
        }
        d -= 1;
    }
}

fn next_step(tally: &Tally, dose: usize) -> Step {
    let dims = tally.dims();
    let here = tally.doses()[dose - 1];
    let above_untried = dose < dims && tally.doses()[dose].n == 0;
    match (here.n, here.tox) {
        (n, 0) if n == COHORT_SIZE => Step::Enroll(if above_untried { dose + 1 } else { dose }),
        (n, 1) if n == COHORT_SIZE => Step::Enroll(dose),
        (n, t) if n == MAX_PER_DOSE && t <= 1 => {
            if above_untried {
                Step::Enroll(dose + 1)
            } else {
                Step::Stop(dose as u32)
            }
        }
        _ => de_escalate(tally, dose),
    }
}

struct Builder {
    entries: BTreeMap<Tally, TableEntry>,
    paths: Vec<PathRecord>,
}

impl Builder {
    fn label(&mut self, tally: &Tally, entry: TableEntry) -> Result<()> {
        match self.entries.get(tally) {
            Some(prev) if *prev != entry => Err(Error::InvalidTally(format!(
                "tally {tally} reached with conflicting labels {prev:?} and {entry:?}"
            ))),
            Some(_) => Ok(()),
            None => {
                self.entries.insert(tally.clone(), entry);
                Ok(())
            }
        }
    }

    fn expand(&mut self, tally: &Tally, dose: usize, outcomes: &mut Vec<CohortOutcome>) -> Result<()> {
        for tox in 0..=COHORT_SIZE {
            let mut next = tally.clone();
            next.record(dose, tox, COHORT_SIZE)?;
            outcomes.push(CohortOutcome { dose, tox });
            match next_step(&next, dose) {
                Step::Enroll(d) => {
                    debug_assert!(next.doses()[d - 1].n < MAX_PER_DOSE);
                    self.label(&next, TableEntry { recommendation: d as u32, terminal: false })?;
                    self.expand(&next, d, outcomes)?;
                }
                Step::Stop(rec) => {
                    self.label(&next, TableEntry { recommendation: rec, terminal: true })?;
                    self.paths.push(PathRecord {
                        outcomes: outcomes.clone(),
                        final_tally: next,
                        recommendation: rec,
                    });
                }
            }
            outcomes.pop();
        }
        Ok(())
    }
}

/// Enumerates every path of the 3+3 protocol over `doses` levels.
pub fn enumerate(doses: usize) -> Result<ProtocolTable> {
    if !(1..=MAX_DOSES).contains(&doses) {
        return Err(Error::InvalidParameter(format!("3+3 enumeration supports 1..={MAX_DOSES} doses, got {doses}")));
    }
    let start = Tally::zero(doses)?;
    let mut b = Builder { entries: BTreeMap::new(), paths: Vec::new() };
    b.label(&start, TableEntry { recommendation: 1, terminal: false })?;
    b.expand(&start, 1, &mut Vec::new())?;
    Ok(ProtocolTable { doses, entries: b.entries, paths: b.paths })
}

impl ProtocolTable {
    pub fn doses(&self) -> usize {
        self.doses
    }

    /// Accessible tallies in ascending lexicographic order.
    pub fn entries(&self) -> &BTreeMap<Tally, TableEntry> {
        &self.entries
    }

    pub fn paths(&self) -> &[PathRecord] {
        &self.paths
    }

    pub fn tallies(&self) -> impl Iterator<Item = &Tally> {
        self.entries.keys()
    }

    pub fn recommendation(&self, q: &Tally) -> Option<u32> {
        self.entries.get(q).map(|e| e.recommendation)
    }

    /// The fiber `F^-1(level)`.
    pub fn fiber(&self, level: u32) -> Vec<Tally> {
        self.entries
            .iter()
            .filter(|(_, e)| e.recommendation == level)
            .map(|(q, _)| q.clone())
            .collect()
    }

    /// Greatest monotone map below `F` on the accessible tallies:
    /// `min { F(a) : a' ≼ a }`.
    pub fn rectify(&self, params: SafetyParams) -> Result<BTreeMap<Tally, u32>> {
        check_dims(params.doses(), self.doses)?;
        let mut out = BTreeMap::new();
        for lower in self.entries.keys() {
            let mut best = u32::MAX;
            for (upper, e) in &self.entries {
                if e.recommendation < best && leq(lower, upper, params)? {
                    best = e.recommendation;
                }
            }
            out.insert(lower.clone(), best);
        }
        Ok(out)
    }

    /// Every pair `(a, a')` with `a ≺ a'` but `F(a) > F(a')`.
    pub fn monotonicity_violations(&self, params: SafetyParams) -> Result<Vec<(Tally, Tally)>> {
        check_dims(params.doses(), self.doses)?;
        let mut out = Vec::new();
        for (a, ea) in &self.entries {
            for (b, eb) in &self.entries {
                if a != b && ea.recommendation > eb.recommendation && leq(a, b, params)? {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        Ok(out)
    }

    /// Probability of each final recommendation `0..=D` under per-dose
    /// toxicity probabilities `p`.
    pub fn outcome_probabilities(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.doses + 1];
        for path in &self.paths {
            out[path.recommendation as usize] += path_probability(path, p)?;
        }
        Ok(out)
    }
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidParameter(format!("toxicity probability {bad} outside [0, 1]")));
    }
    Ok(())
}

/// Product over cohorts of `C(3,k) p^k (1-p)^(3-k)`.
pub fn path_probability(path: &PathRecord, p: &[f64]) -> Result<f64> {
    check_dims(p.len(), path.final_tally.dims())?;
    check_probabilities(p)?;
    const CHOOSE3: [f64; 4] = [1.0, 3.0, 3.0, 1.0];
    Ok(path
        .outcomes
        .iter()
        .map(|c| {
            let pd = p[c.dose - 1];
            let k = c.tox as i32;
            CHOOSE3[c.tox as usize] * pd.powi(k) * (1.0 - pd).powi(COHORT_SIZE as i32 - k)
        })
        .product())
}

/// Enumerates the protocol and sums path probabilities by recommendation.
pub fn outcome_probabilities(doses: usize, p: &[f64]) -> Result<Vec<f64>> {
    check_dims(p.len(), doses)?;
    enumerate(doses)?.outcome_probabilities(p)
}

/// Highest assessed dose with fewer than two toxicities, else 0.
pub fn final_rec_masked(tox: &[u32], assessed: &[bool]) -> Result<u32> {
    check_dims(tox.len(), assessed.len())?;
    Ok((1..=tox.len())
        .rev()
        .find(|&d| assessed[d - 1] && tox[d - 1] < 2)
        .map_or(0, |d| d as u32))
}

/// [`final_rec_masked`] with "assessed" meaning `n_d > 0`.
pub fn final_rec(q: &Tally) -> u32 {
    let tox: Vec<u32> = q.doses().iter().map(|x| x.tox).collect();
    let assessed: Vec<bool> = q.doses().iter().map(|x| x.n > 0).collect();
    final_rec_masked(&tox, &assessed).unwrap_or(0)
}
