//! Evident-safety partial orders on tallies.
//!
//! `q ≼ q'` reads "`q'` is evidently at least as safe as `q`". Two orders are
//! provided:
//!
//! * [`leq0`], the dose-monotone order, decided by comparing tolerated dose
//!   intensity and toxicity profile;
//! * [`leq`], the therapeutic order with balance strength `r`, decided by the
//!   sign of the integer coordinates of the formal difference `q' - q` over
//!   the basis `tol_1, titro_2..D, exch_{d,d+1}, bal_r`.
//!
//! Each comparison costs `O(D)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::tally::{DoseTally, Tally};

/// Dose count and balance strength of the therapeutic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SafetyParams {
    doses: usize,
    r: u32,
}

impl SafetyParams {
    pub const DEFAULT_R: u32 = 2;

    pub fn new(doses: usize, r: u32) -> Result<Self> {
        if doses == 0 {
            return Err(Error::InvalidParameter("dose count must be at least 1".into()));
        }
        if r == 0 {
            return Err(Error::InvalidParameter("balance strength r must be at least 1".into()));
        }
        Ok(SafetyParams { doses, r })
    }

    pub fn doses(&self) -> usize {
        self.doses
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    fn check(&self, q: &Tally) -> Result<()> {
        check_dims(q.dims(), self.doses)
    }
}

/// Coordinates `(eta, gamma)` of a formal tally difference.
///
/// `eta_1` counts `tol_1`, `eta_d` (d >= 2) counts `titro_d`, `gamma_d`
/// (d < D) counts `exch_{d,d+1}` and `gamma_D` counts `bal_r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeltaCoords {
    pub eta: Vec<i64>,
    pub gamma: Vec<i64>,
}

impl DeltaCoords {
    pub fn is_nonnegative(&self) -> bool {
        self.eta.iter().chain(&self.gamma).all(|&c| c >= 0)
    }

    fn zip_with(&self, other: &DeltaCoords, f: fn(i64, i64) -> i64) -> DeltaCoords {
        DeltaCoords {
            eta: self.eta.iter().zip(&other.eta).map(|(&a, &b)| f(a, b)).collect(),
            gamma: self.gamma.iter().zip(&other.gamma).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

/// Coordinates of `[to - from]`.
pub fn delta_coords(from: &Tally, to: &Tally, params: SafetyParams) -> Result<DeltaCoords> {
    params.check(from)?;
    params.check(to)?;
    let dt: Vec<i64> = from
        .doses()
        .iter()
        .zip(to.doses())
        .map(|(a, b)| b.tox as i64 - a.tox as i64)
        .collect();
    let dn: Vec<i64> = from
        .doses()
        .iter()
        .zip(to.doses())
        .map(|(a, b)| b.n as i64 - a.n as i64)
        .collect();
    Ok(coords_from_differences(&dt, &dn, params.r))
}

fn coords_from_differences(dt: &[i64], dn: &[i64], r: u32) -> DeltaCoords {
    let dims = dt.len();
    let mut gamma = Vec::with_capacity(dims);
    let mut g = 0i64;
    for &t in dt {
        g -= t;
        gamma.push(g);
    }
    let mut eta = Vec::with_capacity(dims);
    let mut e = dn.iter().sum::<i64>() + (1 + r as i64) * gamma[dims - 1];
    for &n in dn {
        eta.push(e);
        e -= n;
    }
    DeltaCoords { eta, gamma }
}

/// Absolute coordinates `[q] = [q - 0]`.
pub fn coords(q: &Tally, params: SafetyParams) -> Result<DeltaCoords> {
    delta_coords(&Tally::zero(params.doses)?, q, params)
}

/// Inverts [`coords`]; `None` when the coordinates name no valid tally.
pub fn tally_from_coords(c: &DeltaCoords, params: SafetyParams) -> Option<Tally> {
    let dims = params.doses;
    if c.eta.len() != dims || c.gamma.len() != dims {
        return None;
    }
    let tox_profile: Vec<i64> = c.gamma.iter().map(|g| -g).collect();
    let total_tox = tox_profile[dims - 1];
    let net: Vec<i64> = c.eta.iter().map(|e| e + (1 + params.r as i64) * total_tox).collect();
    let mut doses = Vec::with_capacity(dims);
    for d in 0..dims {
        let tox = tox_profile[d] - if d == 0 { 0 } else { tox_profile[d - 1] };
        let n = net[d] - net.get(d + 1).copied().unwrap_or(0);
        if tox < 0 || n < tox || n > u32::MAX as i64 {
            return None;
        }
        doses.push(DoseTally { tox: tox as u32, n: n as u32 });
    }
    Tally::new(doses).ok()
}

/// `q ≼_r q'`: every coordinate of `[q' - q]` is non-negative.
pub fn leq(q: &Tally, q2: &Tally, params: SafetyParams) -> Result<bool> {
    Ok(delta_coords(q, q2, params)?.is_nonnegative())
}

/// `q ≼_0 q'`: `U <= U'` and `T >= T'` componentwise.
pub fn leq0(q: &Tally, q2: &Tally) -> Result<bool> {
    check_dims(q.dims(), q2.dims())?;
    let (u, _) = q.dose_intensities();
    let (u2, _) = q2.dose_intensities();
    let t = q.toxicity_profile();
    let t2 = q2.toxicity_profile();
    Ok(u.values.iter().zip(&u2.values).all(|(a, b)| a <= b)
        && t.values.iter().zip(&t2.values).all(|(a, b)| a >= b))
}

/// Result of a meet or join, which exists only when the componentwise bound
/// of the coordinates is itself a tally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bound {
    Valid(Tally),
    NoValidBound,
}

impl Bound {
    pub fn valid(self) -> Option<Tally> {
        match self {
            Bound::Valid(q) => Some(q),
            Bound::NoValidBound => None,
        }
    }
}

fn bound(q: &Tally, q2: &Tally, params: SafetyParams, f: fn(i64, i64) -> i64) -> Result<Bound> {
    let c = coords(q, params)?.zip_with(&coords(q2, params)?, f);
    Ok(tally_from_coords(&c, params).map_or(Bound::NoValidBound, Bound::Valid))
}

pub fn meet(q: &Tally, q2: &Tally, params: SafetyParams) -> Result<Bound> {
    bound(q, q2, params, i64::min)
}

pub fn join(q: &Tally, q2: &Tally, params: SafetyParams) -> Result<Bound> {
    bound(q, q2, params, i64::max)
}

/// Elements of `set` with no strictly safer element in `set`, in ascending
/// lexicographic order. Duplicates collapse.
pub fn maximal_elements(set: &[Tally], params: SafetyParams) -> Result<Vec<Tally>> {
    let mut out = Vec::new();
    for m in set {
        let mut dominated = false;
        for e in set {
            if e != m && leq(m, e, params)? {
                dominated = true;
                break;
            }
        }
        if !dominated {
            out.push(m.clone());
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Tally {
        s.parse().unwrap()
    }

    fn p(d: usize, r: u32) -> SafetyParams {
        SafetyParams::new(d, r).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SafetyParams::new(0, 1).is_err());
        assert!(SafetyParams::new(1, 0).is_err());
    }

    #[test]
    fn coords_examples() {
        let q = t("0/1 1/2 0/0");
        let c = delta_coords(&q, &q, p(3, 2)).unwrap();
        assert_eq!(c, DeltaCoords { eta: vec![0; 3], gamma: vec![0; 3] });

        // det_D at r = 2: [0 - <1/1>_3]
        let c = delta_coords(&t("0/0 0/0 1/1"), &t("0/0 0/0 0/0"), p(3, 2)).unwrap();
        assert_eq!(c, DeltaCoords { eta: vec![2, 2, 2], gamma: vec![0, 0, 1] });

        // exch_12
        for r in 1..4 {
            let c = delta_coords(&t("1/1 0/1"), &t("0/1 1/1"), p(2, r)).unwrap();
            assert_eq!(c, DeltaCoords { eta: vec![0, 0], gamma: vec![1, 0] });
        }

        assert_eq!(
            delta_coords(&t("0/0"), &t("0/0 0/0"), p(2, 1)),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn leq_examples() {
        assert!(leq(&t("1/6 1/6"), &t("0/6 2/6"), p(2, 1)).unwrap());
        for d in 1..=3 {
            assert!(leq(&Tally::single(3, d, 1, 1).unwrap(), &t("0/0 0/0 0/0"), p(3, 2)).unwrap());
        }
        assert!(leq(&t("0/0 0/0"), &t("0/1 0/0"), p(2, 1)).unwrap());
        assert!(!leq(&t("0/1 0/0"), &t("0/0 0/0"), p(2, 1)).unwrap());
    }

    #[test]
    fn leq0_examples() {
        let q = t("1/2 0/3");
        assert!(leq0(&q, &q).unwrap());
        assert!(!leq0(&t("1/1 0/1"), &t("0/1 1/1")).unwrap());
        assert!(leq0(&t("0/1 0/0"), &t("0/0 0/1")).unwrap());
        assert!(leq0(&t("0/1"), &t("0/1 0/0")).is_err());
    }

    #[test]
    fn meet_join_examples() {
        assert_eq!(
            join(&t("0/0 0/0 0/0"), &t("0/6 2/6 0/0"), p(3, 2)).unwrap(),
            Bound::Valid(t("0/6 0/0 0/0"))
        );
        assert_eq!(
            join(&t("0/3 0/0 0/0"), &t("0/3 0/6 2/6"), p(3, 2)).unwrap(),
            Bound::Valid(t("0/3 0/6 0/0"))
        );
        assert_eq!(meet(&t("1/1 0/1"), &t("0/0 1/1"), p(2, 1)).unwrap(), Bound::NoValidBound);
        let q = t("1/3 2/6");
        assert_eq!(meet(&q, &q, p(2, 2)).unwrap(), Bound::Valid(q));
    }

    #[test]
    fn join_fails_after_cancellation() {
        // (1/1,0/1) and (0/0,2/3) join to (0/1,1/1) in Q_1; cancelling the
        // shared 0/1 at dose 2 leaves a pair whose coordinate join is 0/1,1/0.
        assert_eq!(
            join(&t("1/1 0/1"), &t("0/0 2/3"), p(2, 1)).unwrap(),
            Bound::Valid(t("0/1 1/1"))
        );
        assert_eq!(join(&t("1/1 0/0"), &t("0/0 2/2"), p(2, 1)).unwrap(), Bound::NoValidBound);
        assert!(leq(&t("1/1 0/0"), &t("0/0 1/1"), p(2, 1)).unwrap());
        assert!(leq(&t("0/0 2/2"), &t("0/0 1/1"), p(2, 1)).unwrap());
    }

    #[test]
    fn coords_roundtrip() {
        let q = t("2/5 1/1 0/4");
        let c = coords(&q, p(3, 3)).unwrap();
        assert_eq!(tally_from_coords(&c, p(3, 3)), Some(q));
    }

    #[test]
    fn maximal_examples() {
        let q = t("1/3 0/0");
        assert_eq!(maximal_elements(&[q.clone()], p(2, 1)).unwrap(), vec![q]);
        let set = [t("0/0"), t("0/1"), t("0/2")];
        assert_eq!(maximal_elements(&set, p(1, 1)).unwrap(), vec![t("0/2")]);
        assert!(maximal_elements(&[], p(1, 1)).unwrap().is_empty());
    }
}
