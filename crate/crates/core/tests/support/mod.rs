//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the coordinate test of `escalation::order`; the
//! closure search works directly on `(t, n)` pairs so that agreement with
//! `leq` is evidence, not tautology.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use escalation::order::SafetyParams;
use escalation::protocol::ProtocolTable;
use escalation::tally::Tally;

type State = Vec<(u32, u32)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reach {
    Reachable,
    Unreachable,
    BoundExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrows {
    /// tol_1, titro_j, titrx_j, det_D.
    DoseMonotone,
    /// The above plus exch_{j,k}, bal and bal_r.
    Therapeutic { r: u32 },
}

fn state(q: &Tally) -> State {
    q.doses().iter().map(|d| (d.tox, d.n)).collect()
}

fn successors(s: &State, arrows: Arrows) -> Vec<State> {
    let dims = s.len();
    let top = dims - 1;
    let mut out = Vec::new();
    let tol = |d: &(u32, u32)| d.1 - d.0;

    let mut next = s.clone();
    next[0].1 += 1;
    out.push(next);

    for j in 1..dims {
        if tol(&s[j - 1]) >= 1 {
            let mut next = s.clone();
            next[j - 1].1 -= 1;
            next[j].1 += 1;
            out.push(next);
        }
    }
    for j in 0..top {
        if s[j].0 >= 1 {
            let mut next = s.clone();
            next[j].0 -= 1;
            next[j].1 -= 1;
            next[j + 1].0 += 1;
            next[j + 1].1 += 1;
            out.push(next);
        }
    }
    if s[top].0 >= 1 {
        let mut next = s.clone();
        next[top].0 -= 1;
        next[top].1 -= 1;
        out.push(next);
    }

    if let Arrows::Therapeutic { r } = arrows {
        for j in 0..dims {
            for k in j + 1..dims {
                if s[j].0 >= 1 && tol(&s[k]) >= 1 {
                    let mut next = s.clone();
                    next[j].0 -= 1;
                    next[k].0 += 1;
                    out.push(next);
                }
            }
        }
        for size in [2, 1 + r] {
            if s[top].0 >= 1 && tol(&s[top]) >= size - 1 {
                let mut next = s.clone();
                next[top].0 -= 1;
                next[top].1 -= size;
                out.push(next);
            }
        }
    }
    out
}

/// Breadth-first closure of `from` under monoidal applications of `arrows`.
///
/// Total toxicities never increase, so `K = Σt - Σt'` removal steps (det or
/// bal) are needed, each dropping at most `1 + r` participants. Only `tol_1`
/// adds participants, so no path to `to` ever passes through a tally with
/// more than `Σn' + (1 + r) K` participants. The search space under that cap
/// is finite and the answer exact; `max_states` only guards runaway inputs.
pub fn closure(from: &Tally, to: &Tally, arrows: Arrows, max_states: usize) -> Reach {
    let start = state(from);
    let goal = state(to);
    let tox_goal: u32 = goal.iter().map(|d| d.0).sum();
    let tox_start: u32 = start.iter().map(|d| d.0).sum();
    if tox_goal > tox_start {
        return Reach::Unreachable;
    }
    let largest_removal = match arrows {
        Arrows::DoseMonotone => 1,
        Arrows::Therapeutic { r } => 2.max(1 + r),
    };
    let n_cap = goal.iter().map(|d| d.1).sum::<u32>() + largest_removal * (tox_start - tox_goal);

    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        if s == goal {
            return Reach::Reachable;
        }
        for next in successors(&s, arrows) {
            let tox: u32 = next.iter().map(|d| d.0).sum();
            let n: u32 = next.iter().map(|d| d.1).sum();
            if tox < tox_goal || n > n_cap || seen.contains(&next) {
                continue;
            }
            if seen.len() >= max_states {
                return Reach::BoundExhausted;
            }
            seen.insert(next.clone());
            queue.push_back(next);
        }
    }
    Reach::Unreachable
}

/// Every tally with `dims` doses and at most `max_n` participants per dose.
pub fn grid(dims: usize, max_n: u32) -> Vec<Tally> {
    let per_dose: Vec<(u32, u32)> = (0..=max_n).flat_map(|n| (0..=n).map(move |t| (t, n))).collect();
    let mut out: Vec<Vec<(u32, u32)>> = vec![Vec::new()];
    for _ in 0..dims {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                per_dose.iter().map(move |&d| {
                    let mut v = prefix.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
    }
    out.iter().map(|pairs| Tally::from_pairs(pairs).unwrap()).collect()
}

pub fn tally(s: &str) -> Tally {
    s.parse().unwrap()
}

/// Right Kan extension by brute force: the least protocol recommendation
/// over accessible tallies lying above `q`, or `D` when there are none.
pub fn kan_by_search(table: &ProtocolTable, q: &Tally, params: SafetyParams) -> u32 {
    table
        .entries()
        .iter()
        .filter(|(a, _)| above(q, a, params))
        .map(|(_, e)| e.recommendation)
        .min()
        .unwrap_or(table.doses() as u32)
}

/// `q ≼_r a` by the recurrences written out longhand with signed sums.
pub fn above(q: &Tally, a: &Tally, params: SafetyParams) -> bool {
    let r = params.r() as i64;
    let dims = q.dims();
    let dt: Vec<i64> = (0..dims).map(|d| a.doses()[d].tox as i64 - q.doses()[d].tox as i64).collect();
    let dn: Vec<i64> = (0..dims).map(|d| a.doses()[d].n as i64 - q.doses()[d].n as i64).collect();
    let gamma: Vec<i64> = (0..dims).map(|d| -dt[..=d].iter().sum::<i64>()).collect();
    let mut eta = dn.iter().sum::<i64>() + (1 + r) * gamma[dims - 1];
    if eta < 0 || gamma.iter().any(|&g| g < 0) {
        return false;
    }
    for &step in &dn[..dims - 1] {
        eta -= step;
        if eta < 0 {
            return false;
        }
    }
    true
}

