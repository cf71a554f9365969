//! Dose-wise toxicity tallies and the enrolled trial state.
//!
//! A [`Tally`] records, for each of `D` dose levels, the number of toxicities
//! `t` observed among `n` evaluable participants. Tallies form a commutative
//! monoid under componentwise addition with the all-`0/0` tally as unit.
//!
//! Dose levels are numbered `1..=D` wherever a method takes a `level`
//! argument. Level `0` ("do not enroll") never indexes a tally.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dims, Error, Result};

/// Toxicities among evaluable participants at a single dose, written `t/n`.
///
/// Ordered lexicographically on `(tox, n)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DoseTally {
    pub tox: u32,
    pub n: u32,
}

impl DoseTally {
    pub const EMPTY: DoseTally = DoseTally { tox: 0, n: 0 };

    pub fn new(tox: u32, n: u32) -> Result<Self> {
        if tox > n {
            return Err(Error::InvalidTally(format!("{tox}/{n} has more toxicities than participants")));
        }
        Ok(DoseTally { tox, n })
    }

    /// Participants who tolerated the dose, `n - t`.
    pub fn tolerated(&self) -> u32 {
        self.n - self.tox
    }
}

impl fmt::Display for DoseTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.tox, self.n)
    }
}

/// A cumulative tally over `D >= 1` dose levels, lowest dose first.
///
/// The derived ordering is lexicographic on `(t1, n1, ..., tD, nD)` and is
/// used only to make set-valued outputs deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tally {
    doses: Vec<DoseTally>,
}

impl Tally {
    pub fn new(doses: Vec<DoseTally>) -> Result<Self> {
        if doses.is_empty() {
            return Err(Error::InvalidTally("a tally needs at least one dose level".into()));
        }
        if let Some(bad) = doses.iter().find(|q| q.tox > q.n) {
            return Err(Error::InvalidTally(format!("{bad} has more toxicities than participants")));
        }
        Ok(Tally { doses })
    }

    /// Builds a tally from `(t, n)` pairs.
    pub fn from_pairs(pairs: &[(u32, u32)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(tox, n)| DoseTally { tox, n }).collect())
    }

    /// The all-`0/0` tally, unit of [`Tally::plus`].
    pub fn zero(dims: usize) -> Result<Self> {
        Self::new(vec![DoseTally::EMPTY; dims])
    }

    /// The tally that is `t/n` at `level` and `0/0` elsewhere.
    pub fn single(dims: usize, level: usize, tox: u32, n: u32) -> Result<Self> {
        let mut tally = Self::zero(dims)?;
        tally.slot(level)?;
        tally.doses[level - 1] = DoseTally::new(tox, n)?;
        Ok(tally)
    }

    pub fn dims(&self) -> usize {
        self.doses.len()
    }

    pub fn doses(&self) -> &[DoseTally] {
        &self.doses
    }

    /// The entry at 1-based `level`.
    pub fn get(&self, level: usize) -> Option<DoseTally> {
        level.checked_sub(1).and_then(|i| self.doses.get(i)).copied()
    }

    fn slot(&self, level: usize) -> Result<usize> {
        if level == 0 || level > self.dims() {
            return Err(Error::InvalidParameter(format!(
                "dose level {level} outside 1..={}",
                self.dims()
            )));
        }
        Ok(level - 1)
    }

    pub fn total_tox(&self) -> u32 {
        self.doses.iter().map(|q| q.tox).sum()
    }

    pub fn total_n(&self) -> u32 {
        self.doses.iter().map(|q| q.n).sum()
    }

    /// Componentwise sum `(t + t') / (n + n')`.
    pub fn plus(&self, other: &Tally) -> Result<Tally> {
        check_dims(self.dims(), other.dims())?;
        Ok(Tally {
            doses: self
                .doses
                .iter()
                .zip(&other.doses)
                .map(|(a, b)| DoseTally { tox: a.tox + b.tox, n: a.n + b.n })
                .collect(),
        })
    }

    /// Adds `tox/n` at `level`.
    pub fn record(&mut self, level: usize, tox: u32, n: u32) -> Result<()> {
        let i = self.slot(level)?;
        DoseTally::new(tox, n)?;
        self.doses[i].tox += tox;
        self.doses[i].n += n;
        Ok(())
    }

    /// Removes `tox/n` at `level`, failing if the result would not be a tally.
    pub fn retract(&mut self, level: usize, tox: u32, n: u32) -> Result<()> {
        let i = self.slot(level)?;
        let cur = self.doses[i];
        let next = cur
            .tox
            .checked_sub(tox)
            .zip(cur.n.checked_sub(n))
            .filter(|&(t, n)| t <= n)
            .ok_or_else(|| Error::InvalidTally(format!("cannot remove {tox}/{n} from {cur} at dose {level}")))?;
        self.doses[i] = DoseTally { tox: next.0, n: next.1 };
        Ok(())
    }

    /// Toxicity profile `T_d = sum_{j<=d} t_j`.
    pub fn toxicity_profile(&self) -> DoseCountVector {
        let values = self
            .doses
            .iter()
            .scan(0u32, |acc, q| {
                *acc += q.tox;
                Some(*acc)
            })
            .collect();
        DoseCountVector { kind: ProfileKind::Toxicity, values }
    }

    /// Tolerated dose intensity `U_d = sum_{j>=d} u_j` and net dose intensity
    /// `N_d = sum_{j>=d} n_j`.
    pub fn dose_intensities(&self) -> (DoseCountVector, DoseCountVector) {
        let upper_tails = |f: fn(&DoseTally) -> u32| {
            let mut out: Vec<u32> = self
                .doses
                .iter()
                .rev()
                .scan(0u32, |acc, q| {
                    *acc += f(q);
                    Some(*acc)
                })
                .collect();
            out.reverse();
            out
        };
        (
            DoseCountVector { kind: ProfileKind::Tolerated, values: upper_tails(DoseTally::tolerated) },
            DoseCountVector { kind: ProfileKind::Net, values: upper_tails(|q| q.n) },
        )
    }

    /// The embedding `(t:u) -> (T, U)`.
    pub fn sigma(&self) -> (DoseCountVector, DoseCountVector) {
        (self.toxicity_profile(), self.dose_intensities().0)
    }

    /// Inverts [`Tally::sigma`] by successive differencing.
    pub fn from_sigma(tox_profile: &[u32], tolerated: &[u32]) -> Result<Tally> {
        check_dims(tox_profile.len(), tolerated.len())?;
        let dims = tox_profile.len();
        let mut doses = Vec::with_capacity(dims);
        for d in 0..dims {
            let prev_t = if d == 0 { 0 } else { tox_profile[d - 1] };
            let next_u = tolerated.get(d + 1).copied().unwrap_or(0);
            let tox = tox_profile[d]
                .checked_sub(prev_t)
                .ok_or_else(|| Error::InvalidTally("toxicity profile must be non-decreasing".into()))?;
            let tol = tolerated[d]
                .checked_sub(next_u)
                .ok_or_else(|| Error::InvalidTally("tolerated intensity must be non-increasing".into()))?;
            doses.push(DoseTally { tox, n: tox + tol });
        }
        Tally::new(doses)
    }
}

impl fmt::Display for Tally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.doses.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{q}")?;
        }
        Ok(())
    }
}

fn parse_count(tok: &str, whole: &str) -> Result<u32> {
    if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse(format!("expected a count in {whole:?}, found {tok:?}")));
    }
    tok.parse().map_err(|_| Error::Parse(format!("count {tok:?} out of range")))
}

impl FromStr for DoseTally {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (t, n) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("expected t/n, found {s:?}")))?;
        let q = DoseTally { tox: parse_count(t, s)?, n: parse_count(n, s)? };
        DoseTally::new(q.tox, q.n)
    }
}

/// Parses whitespace-separated `t/n` tokens, lowest dose first.
impl FromStr for Tally {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let doses = s.split_whitespace().map(str::parse).collect::<Result<Vec<DoseTally>>>()?;
        if doses.is_empty() {
            return Err(Error::Parse("empty tally".into()));
        }
        Tally::new(doses)
    }
}

impl Serialize for Tally {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tally {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// `T`, lower tails of toxicity counts; non-decreasing.
    Toxicity,
    /// `U`, upper tails of tolerated counts; non-increasing.
    Tolerated,
    /// `N`, upper tails of evaluable counts; non-increasing.
    Net,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoseCountVector {
    pub kind: ProfileKind,
    pub values: Vec<u32>,
}

impl DoseCountVector {
    /// Whether the values have the monotonicity their kind requires.
    pub fn is_well_shaped(&self) -> bool {
        self.values.windows(2).all(|w| match self.kind {
            ProfileKind::Toxicity => w[0] <= w[1],
            ProfileKind::Tolerated | ProfileKind::Net => w[0] >= w[1],
        })
    }
}

/// Per-dose counts of administered doses whose assessment has not resolved.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PendingCounts(Vec<u32>);

impl PendingCounts {
    pub fn zero(dims: usize) -> Self {
        PendingCounts(vec![0; dims])
    }

    pub fn from_counts(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParameter("pending counts need at least one dose level".into()));
        }
        Ok(PendingCounts(counts))
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&mut self, level: usize) {
        self.0[level - 1] += 1;
    }

    pub fn remove(&mut self, level: usize) {
        self.0[level - 1] -= 1;
    }
}

/// Resolved tally plus pending assessments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnrolledState {
    pub tally: Tally,
    pub pending: PendingCounts,
}

impl EnrolledState {
    pub fn new(tally: Tally, pending: PendingCounts) -> Result<Self> {
        check_dims(tally.dims(), pending.dims())?;
        Ok(EnrolledState { tally, pending })
    }

    /// Worst-case tally: every pending assessment counted as a toxicity at
    /// its dose, resolved assessments unchanged.
    pub fn pessimize(&self) -> Tally {
        let mut out = self.tally.clone();
        for (q, &p) in out.doses.iter_mut().zip(self.pending.counts()) {
            q.tox += p;
            q.n += p;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Tally {
        s.parse().unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(t("0/0 0/0").plus(&t("1/3 0/0")).unwrap(), t("1/3 0/0"));
        assert_eq!(t("1/1 0/1").plus(&t("0/5 1/5")).unwrap(), t("1/6 1/6"));
        assert_eq!(t("1/2 0/1").plus(&t("1/2 0/1")).unwrap(), t("2/4 0/2"));
        assert_eq!(
            t("0/0").plus(&t("0/0 0/0")),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn profiles() {
        assert_eq!(t("0/0 0/0 0/0").toxicity_profile().values, vec![0, 0, 0]);
        assert_eq!(t("1/6 1/6").toxicity_profile().values, vec![1, 2]);
        assert_eq!(t("0/3 0/6 2/6").toxicity_profile().values, vec![0, 0, 2]);

        let (u, n) = t("0/0 0/0").dose_intensities();
        assert_eq!((u.values, n.values), (vec![0, 0], vec![0, 0]));
        let (u, n) = t("0/6 2/6 0/0").dose_intensities();
        assert_eq!((u.values, n.values), (vec![10, 4, 0], vec![12, 6, 0]));
        let (u, n) = t("2/6 0/0 0/0").dose_intensities();
        assert_eq!((u.values, n.values), (vec![4, 0, 0], vec![6, 0, 0]));
    }

    #[test]
    fn sigma_examples() {
        let (tp, u) = t("0/0").sigma();
        assert_eq!((tp.values, u.values), (vec![0], vec![0]));
        let (tp, u) = t("1/3 0/0").sigma();
        assert_eq!((tp.values.clone(), u.values.clone()), (vec![1, 1], vec![2, 0]));
        assert_eq!(Tally::from_sigma(&tp.values, &u.values).unwrap(), t("1/3 0/0"));
        assert!(Tally::from_sigma(&[2, 1], &[0, 0]).is_err());
        assert!(Tally::from_sigma(&[0, 0], &[0, 1]).is_err());
    }

    #[test]
    fn pessimize_examples() {
        let state = |q: &str, p: Vec<u32>| {
            EnrolledState::new(t(q), PendingCounts::from_counts(p).unwrap()).unwrap()
        };
        assert_eq!(state("0/0 0/0", vec![1, 0]).pessimize(), t("1/1 0/0"));
        assert_eq!(state("0/3 0/0", vec![0, 0]).pessimize(), t("0/3 0/0"));
        assert_eq!(state("0/1 0/0", vec![0, 2]).pessimize(), t("0/1 2/2"));
        assert!(EnrolledState::new(t("0/0"), PendingCounts::zero(2)).is_err());
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(t("  0/3\t0/6 0/0 ").to_string(), "0/3 0/6 0/0");
        assert_eq!(t("12/40").doses(), &[DoseTally { tox: 12, n: 40 }]);
        for bad in ["", "   ", "1/", "/2", "3/2", "a/b", "1/2/3", "-1/2", "+1/2", "1 /2", "99999999999/99999999999"] {
            assert!(bad.parse::<Tally>().is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn single_and_retract() {
        assert_eq!(Tally::single(3, 2, 1, 1).unwrap(), t("0/0 1/1 0/0"));
        assert!(Tally::single(3, 0, 1, 1).is_err());
        assert!(Tally::single(3, 4, 1, 1).is_err());
        let mut q = t("1/2 0/1");
        q.retract(2, 0, 1).unwrap();
        assert_eq!(q, t("1/2 0/0"));
        assert!(q.retract(1, 0, 2).is_err());
        assert!(q.retract(2, 0, 1).is_err());
    }

    #[test]
    fn serde_uses_text_form() {
        let q = t("0/3 0/6 2/6");
        let json = serde_json::to_string(&q).unwrap();
        assert_eq!(json, "\"0/3 0/6 2/6\"");
        assert_eq!(serde_json::from_str::<Tally>(&json).unwrap(), q);
    }
}
