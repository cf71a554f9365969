//! Dose-assignment rules defined on every tally, derived from a protocol
//! table's recommendations `F`.
//!
//! [`KanRule`] is the right Kan extension of `F` along the inclusion of the
//! accessible tallies: the minimum of `F` over a tally's up-set, evaluated as
//! a cascade over the maximal elements of each fiber `F^-1(d)`.
//!
//! [`GaloisRule`] replaces each fiber by the single tally `g_d`, its join,
//! giving `E(q) <= d  <=>  q ≼ g_d`. It is never less safe than the Kan rule.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::order::{join, leq, maximal_elements, Bound, SafetyParams};
use crate::protocol::ProtocolTable;
use crate::tally::Tally;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "KanRuleRepr")]
pub struct KanRule {
    #[serde(flatten)]
    params: SafetyParams,
    fiber_maxima: BTreeMap<u32, Vec<Tally>>,
}

#[derive(Deserialize)]
struct KanRuleRepr {
    doses: usize,
    r: u32,
    fiber_maxima: BTreeMap<String, Vec<Tally>>,
}

impl TryFrom<KanRuleRepr> for KanRule {
    type Error = Error;

    fn try_from(repr: KanRuleRepr) -> Result<Self> {
        let fiber_maxima = repr
            .fiber_maxima
            .into_iter()
            .map(|(k, v)| {
                k.parse::<u32>()
                    .map(|level| (level, v))
                    .map_err(|_| Error::InvalidParameter(format!("fiber key {k:?} is not a dose level")))
            })
            .collect::<Result<_>>()?;
        KanRule::from_parts(SafetyParams::new(repr.doses, repr.r)?, fiber_maxima)
    }
}

impl KanRule {
    /// Builds a rule from explicit fiber maxima. Levels must lie in
    /// `0..D` and each list must be an antichain.
    pub fn from_parts(params: SafetyParams, fiber_maxima: BTreeMap<u32, Vec<Tally>>) -> Result<Self> {
        for (&level, maxima) in &fiber_maxima {
            if level as usize >= params.doses() {
                return Err(Error::InvalidParameter(format!(
                    "fiber level {level} outside 0..{}",
                    params.doses()
                )));
            }
            for m in maxima {
                check_dims(m.dims(), params.doses())?;
            }
            if maximal_elements(maxima, params)?.len() != maxima.len() {
                return Err(Error::InvalidParameter(format!(
                    "fiber {level} maxima are not pairwise incomparable"
                )));
            }
        }
        Ok(KanRule { params, fiber_maxima })
    }

    /// Maximal elements of each fiber `F^-1(d)`, `d < D`.
    pub fn build(table: &ProtocolTable, params: SafetyParams) -> Result<Self> {
        check_dims(params.doses(), table.doses())?;
        let mut fiber_maxima = BTreeMap::new();
        for level in 0..table.doses() as u32 {
            fiber_maxima.insert(level, maximal_elements(&table.fiber(level), params)?);
        }
        Ok(KanRule { params, fiber_maxima })
    }

    pub fn params(&self) -> SafetyParams {
        self.params
    }

    pub fn fiber_maxima(&self) -> &BTreeMap<u32, Vec<Tally>> {
        &self.fiber_maxima
    }

    /// Smallest `d < D` whose fiber maxima include a tally at least as safe
    /// as `q`; `D` if there is none.
    pub fn recommend(&self, q: &Tally) -> Result<u32> {
        check_dims(q.dims(), self.params.doses())?;
        for (&level, maxima) in &self.fiber_maxima {
            for m in maxima {
                if leq(q, m, self.params)? {
                    return Ok(level);
                }
            }
        }
        Ok(self.params.doses() as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GaloisRuleRepr")]
pub struct GaloisRule {
    #[serde(flatten)]
    params: SafetyParams,
    thresholds: Vec<Tally>,
}

#[derive(Deserialize)]
struct GaloisRuleRepr {
    doses: usize,
    r: u32,
    thresholds: Vec<Tally>,
}

impl TryFrom<GaloisRuleRepr> for GaloisRule {
    type Error = Error;

    fn try_from(repr: GaloisRuleRepr) -> Result<Self> {
        GaloisRule::from_thresholds(SafetyParams::new(repr.doses, repr.r)?, repr.thresholds)
    }
}

impl GaloisRule {
    /// Builds a rule from `g_0 ≼ ... ≼ g_{D-1}`; the chain is checked.
    pub fn from_thresholds(params: SafetyParams, thresholds: Vec<Tally>) -> Result<Self> {
        check_dims(thresholds.len(), params.doses())?;
        for g in &thresholds {
            check_dims(g.dims(), params.doses())?;
        }
        for pair in thresholds.windows(2) {
            if !leq(&pair[0], &pair[1], params)? {
                return Err(Error::InvalidParameter(format!(
                    "thresholds {} and {} do not form a chain",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(GaloisRule { params, thresholds })
    }

    /// `g_d` is the join of `F^-1(d)`, then joined with `g_{d-1}` so the
    /// thresholds form a chain. An empty fiber above 0 inherits `g_{d-1}`.
    pub fn build(table: &ProtocolTable, params: SafetyParams) -> Result<Self> {
        check_dims(params.doses(), table.doses())?;
        let mut thresholds: Vec<Tally> = Vec::with_capacity(table.doses());
        for level in 0..table.doses() as u32 {
            let mut acc: Option<Tally> = thresholds.last().cloned();
            for q in table.fiber(level) {
                acc = Some(match acc {
                    None => q,
                    Some(a) => match join(&a, &q, params)? {
                        Bound::Valid(j) => j,
                        Bound::NoValidBound => return Err(Error::NoValidJoin { fiber: level }),
                    },
                });
            }
            thresholds.push(acc.ok_or_else(|| {
                Error::InvalidParameter("fiber 0 is empty; no lowest threshold".into())
            })?);
        }
        GaloisRule::from_thresholds(params, thresholds)
    }

    pub fn params(&self) -> SafetyParams {
        self.params
    }

    /// `g_0, ..., g_{D-1}`.
    pub fn thresholds(&self) -> &[Tally] {
        &self.thresholds
    }

    /// Smallest `d` with `q ≼ g_d`; `D` if there is none.
    pub fn recommend(&self, q: &Tally) -> Result<u32> {
        check_dims(q.dims(), self.params.doses())?;
        for (level, g) in self.thresholds.iter().enumerate() {
            if leq(q, g, self.params)? {
                return Ok(level as u32);
            }
        }
        Ok(self.params.doses() as u32)
    }
}

/// Either extension rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DoseRule {
    Kan(KanRule),
    Galois(GaloisRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Kan,
    Galois,
}

impl std::str::FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kan" => Ok(RuleKind::Kan),
            "galois" => Ok(RuleKind::Galois),
            other => Err(Error::InvalidParameter(format!("unknown rule {other:?}; expected kan or galois"))),
        }
    }
}

impl DoseRule {
    pub fn build(kind: RuleKind, table: &ProtocolTable, params: SafetyParams) -> Result<Self> {
        Ok(match kind {
            RuleKind::Kan => DoseRule::Kan(KanRule::build(table, params)?),
            RuleKind::Galois => DoseRule::Galois(GaloisRule::build(table, params)?),
        })
    }

    /// Rule derived from the 3+3 protocol over `params.doses()` levels.
    pub fn for_three_plus_three(kind: RuleKind, params: SafetyParams) -> Result<Self> {
        Self::build(kind, &crate::protocol::enumerate(params.doses())?, params)
    }

    pub fn params(&self) -> SafetyParams {
        match self {
            DoseRule::Kan(k) => k.params(),
            DoseRule::Galois(g) => g.params(),
        }
    }

    pub fn recommend(&self, q: &Tally) -> Result<u32> {
        match self {
            DoseRule::Kan(k) => k.recommend(q),
            DoseRule::Galois(g) => g.recommend(q),
        }
    }
}
