//! Probability that an independent event sequence has no L-gap.
//!
//! The sequence is `U_1, ..., U_{m+1}` together with `V_i^(1..ell)` for
//! `i <= m`, where `U_i` and every `V_i^(j)` occur with probability `u_i`.
//! An L-gap at `i` is the event that `U_i`, `U_{i+1}` and all `V_i^(j)` fail.

use serde::{Deserialize, Serialize};

use crate::analytic::beta_unchecked;
use crate::error::{invalid, Error, Result};

pub const MAX_ENUMERATED_EVENTS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeqSpec", into = "RawSeqSpec")]
pub struct EventSeqSpec {
    m: i64,
    ell: u32,
    u: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeqSpec {
    m: i64,
    ell: u32,
    u: Vec<f64>,
}

impl TryFrom<RawSeqSpec> for EventSeqSpec {
    type Error = Error;
    fn try_from(raw: RawSeqSpec) -> Result<Self> {
        EventSeqSpec::new(raw.m, raw.ell, raw.u)
    }
}

impl From<EventSeqSpec> for RawSeqSpec {
    fn from(s: EventSeqSpec) -> Self {
        RawSeqSpec {
            m: s.m,
            ell: s.ell,
            u: s.u,
        }
    }
}

impl EventSeqSpec {
    pub fn new(m: i64, ell: u32, u: Vec<f64>) -> Result<Self> {
        if m < -1 {
            return invalid(format!("m must be at least -1, got {m}"));
        }
        if u.len() as i64 != m + 1 {
            return invalid(format!(
                "expected {} probabilities for m = {m}, got {}",
                m + 1,
                u.len()
            ));
        }
        if let Some((i, x)) = u
            .iter()
            .enumerate()
            .find(|(_, x)| !(**x > 0.0 && **x < 1.0))
        {
            return invalid(format!("u_{} = {x} is outside (0, 1)", i + 1));
        }
        Ok(EventSeqSpec { m, ell, u })
    }

    /// Sequence with `m + 1` probabilities given directly.
    pub fn from_probs(ell: u32, u: Vec<f64>) -> Result<Self> {
        let m = u.len() as i64 - 1;
        Self::new(m, ell, u)
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn probs(&self) -> &[f64] {
        &self.u
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.u.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn event_count(&self) -> usize {
        let m = self.m.max(0) as usize;
        self.u.len() + m * self.ell as usize
    }
}

/// Literal gap test. `u_hits[i]` is whether `U_{i+1}` occurred and
/// `v_hits[i][j]` whether `V_{i+1}^(j+1)` occurred.
pub fn has_lgap(u_hits: &[bool], v_hits: &[Vec<bool>]) -> bool {
    (0..u_hits.len().saturating_sub(1)).any(|i| {
        !u_hits[i] && !u_hits[i + 1] && !v_hits.get(i).is_some_and(|v| v.iter().any(|&x| x))
    })
}

/// Exact `P(no L-gap)` by a two-state recursion on whether the current `U_i`
/// occurred.
pub fn lgap_exact(spec: &EventSeqSpec) -> f64 {
    let u = &spec.u;
    if u.len() <= 1 {
        return 1.0;
    }
    let ell = spec.ell as i32;
    let (mut hit, mut miss) = (u[0], 1.0 - u[0]);
    for i in 0..u.len() - 1 {
        let some_v = 1.0 - (1.0 - u[i]).powi(ell);
        let next = u[i + 1];
        let new_hit = (hit + miss) * next;
        let new_miss = (hit + miss * some_v) * (1.0 - next);
        hit = new_hit;
        miss = new_miss;
    }
    (hit + miss).clamp(0.0, 1.0)
}

/// Sum over all outcome vectors of the independent events.
pub fn lgap_enumerate(spec: &EventSeqSpec) -> Result<f64> {
    let events = spec.event_count();
    if events > MAX_ENUMERATED_EVENTS {
        return Err(Error::TooLarge(format!(
            "{events} events exceed the enumeration limit of {MAX_ENUMERATED_EVENTS}"
        )));
    }
    let n_u = spec.u.len();
    let m = spec.m.max(0) as usize;
    let ell = spec.ell as usize;
    let mut probs = spec.u.clone();
    for i in 0..m {
        probs.extend(std::iter::repeat_n(spec.u[i], ell));
    }

    let mut total = 0.0;
    let mut u_hits = vec![false; n_u];
    let mut v_hits = vec![vec![false; ell]; m];
    for mask in 0u32..(1u32 << events) {
        let mut weight = 1.0;
        for (bit, p) in probs.iter().enumerate() {
            let on = mask >> bit & 1 == 1;
            weight *= if on { *p } else { 1.0 - p };
            if bit < n_u {
                u_hits[bit] = on;
            } else {
                let k = bit - n_u;
                v_hits[k / ell][k % ell] = on;
            }
        }
        if !has_lgap(&u_hits, &v_hits) {
            total += weight;
        }
    }
    Ok(total)
}

/// `prod_i beta_{ell+1}(u_i)`, valid as a lower bound when `u` is
/// nondecreasing.
pub fn lgap_lower_bound(spec: &EventSeqSpec) -> Result<f64> {
    if !spec.is_nondecreasing() {
        return invalid("lower bound requires nondecreasing probabilities");
    }
    Ok(spec
        .u
        .iter()
        .map(|&x| beta_unchecked(spec.ell + 1, x))
        .product())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapSequenceCount {
    /// Weighted number of admissible sequences `(a_i, bvec_i)`.
    pub count: u128,
    /// `(1 / (4 c p))^m`.
    pub bound: f64,
    /// Smallest admissible `a_1`.
    pub lo: u64,
    /// Largest admissible `b_m`.
    pub hi: u64,
    /// Largest admissible `b_i - a_i`.
    pub max_growth: u64,
}

pub const DEFAULT_COUNT_BUDGET: u64 = 200_000_000;

/// Rounds `x` to the nearest integer when it is within relative `1e-9`, so
/// that `0.04^{-1}` counts as exactly 25.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// Range and step limits for the gap-sequence constraints.
pub fn gap_sequence_limits(p: f64, d: u32) -> Result<(u64, u64, u64)> {
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("p must be in (0, 1), got {p}"));
    }
    if d < 2 {
        return invalid(format!("d must be at least 2, got {d}"));
    }
    let base = snap(p.powf(-1.0 / (d as f64 - 1.0)));
    let lo = base.ceil();
    let hi = snap(2.0 * base).floor();
    let growth = snap(p.powf(-1.0 / (2.0 * d as f64 - 2.0))).floor();
    if lo > hi || hi > u64::MAX as f64 / 4.0 {
        return invalid(format!(
            "empty or unrepresentable range [{lo}, {hi}] at p = {p}"
        ));
    }
    Ok((lo as u64, hi as u64, growth as u64))
}

/// Exhaustive count of sequences `(a_i, bvec_i)_{i=1}^m` with
/// `lo <= a_1 < b_1 <= a_2 < ... < b_m <= hi` and `3 <= b_i - a_i <= growth`.
/// A vector `bvec_i` has one coordinate equal to `b_i` and `d - 2` free
/// coordinates in `[b_i]`, so each pair carries weight `b_i^{d-2}`.
pub fn count_gap_sequences(p: f64, d: u32, c: f64, m: u32) -> Result<GapSequenceCount> {
    count_gap_sequences_with_budget(p, d, c, m, DEFAULT_COUNT_BUDGET)
}

pub fn count_gap_sequences_with_budget(
    p: f64,
    d: u32,
    c: f64,
    m: u32,
    budget: u64,
) -> Result<GapSequenceCount> {
    if !(c > 0.0) || !c.is_finite() {
        return invalid(format!("c must be positive, got {c}"));
    }
    if m == 0 {
        return invalid("m must be positive");
    }
    let (lo, hi, growth) = gap_sequence_limits(p, d)?;

    struct Walk {
        hi: u64,
        growth: u64,
        free: u32,
        visited: u64,
        budget: u64,
    }
    impl Walk {
        fn go(&mut self, start: u64, left: u32) -> Result<u128> {
            if left == 0 {
                return Ok(1);
            }
            let mut total: u128 = 0;
            for a in start..self.hi.saturating_sub(2) {
                for b in a + 3..=(a + self.growth).min(self.hi) {
                    self.visited += 1;
                    if self.visited > self.budget {
                        return Err(Error::BudgetExceeded(format!(
                            "more than {} partial sequences",
                            self.budget
                        )));
                    }
                    let weight = (b as u128)
                        .checked_pow(self.free)
                        .ok_or_else(|| Error::Overflow(format!("{b}^{} overflows", self.free)))?;
                    let rest = self.go(b, left - 1)?;
                    total = weight
                        .checked_mul(rest)
                        .and_then(|x| total.checked_add(x))
                        .ok_or_else(|| Error::Overflow("sequence count overflows u128".into()))?;
                }
            }
            Ok(total)
        }
    }

    let mut walk = Walk {
        hi,
        growth,
        free: d - 2,
        visited: 0,
        budget,
    };
    let count = walk.go(lo, m)?;
    Ok(GapSequenceCount {
        count,
        bound: (1.0 / (4.0 * c * p)).powi(m as i32),
        lo,
        hi,
        max_growth: growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::beta;
    use proptest::prelude::*;

    fn spec(ell: u32, u: &[f64]) -> EventSeqSpec {
        EventSeqSpec::from_probs(ell, u.to_vec()).unwrap()
    }

    #[test]
    fn trivial_lengths() {
        assert_eq!(lgap_exact(&EventSeqSpec::new(-1, 2, vec![]).unwrap()), 1.0);
        assert_eq!(lgap_exact(&spec(3, &[0.2])), 1.0);
        assert_eq!(lgap_enumerate(&spec(3, &[0.2])).unwrap(), 1.0);
        assert_eq!(
            lgap_enumerate(&EventSeqSpec::new(-1, 0, vec![]).unwrap()).unwrap(),
            1.0
        );
    }

    #[test]
    fn small_cases() {
        assert!((lgap_exact(&spec(0, &[0.5, 0.5])) - 0.75).abs() < 1e-15);
        assert!((lgap_exact(&spec(1, &[0.5, 0.5])) - 0.875).abs() < 1e-15);
        assert!((lgap_enumerate(&spec(0, &[0.3, 0.9])).unwrap() - 0.93).abs() < 1e-15);
        assert!((lgap_enumerate(&spec(1, &[0.5, 0.5])).unwrap() - 0.875).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(EventSeqSpec::new(2, 0, vec![0.5, 0.5]).is_err());
        assert!(EventSeqSpec::new(-2, 0, vec![]).is_err());
        assert!(EventSeqSpec::new(1, 0, vec![0.0, 0.5]).is_err());
        assert!(EventSeqSpec::new(1, 0, vec![0.5, 1.0]).is_err());
        let s: std::result::Result<EventSeqSpec, _> =
            serde_json::from_str(r#"{"m": 1, "ell": 0, "u": [0.5]}"#);
        assert!(s.is_err());
        let s: EventSeqSpec =
            serde_json::from_str(r#"{"m": 1, "ell": 2, "u": [0.2, 0.7]}"#).unwrap();
        assert_eq!(s.event_count(), 4);
    }

    #[test]
    fn enumeration_limit() {
        let s = spec(2, &[0.5; 9]);
        assert_eq!(s.event_count(), 25);
        assert!(matches!(lgap_enumerate(&s), Err(Error::TooLarge(_))));
    }

    #[test]
    fn gap_predicate() {
        assert!(has_lgap(&[false, false], &[vec![]]));
        assert!(!has_lgap(&[false, false], &[vec![true]]));
        assert!(!has_lgap(&[true, false, true], &[vec![], vec![]]));
        assert!(has_lgap(&[true, false, false], &[vec![false], vec![false]]));
    }

    #[test]
    fn lower_bound_examples() {
        let b = lgap_lower_bound(&spec(0, &[0.5, 0.5])).unwrap();
        let beta1 = beta(1, 0.5).unwrap();
        assert!((b - beta1 * beta1).abs() < 1e-15);
        assert!((b - 0.6545).abs() < 1e-4);
        assert!(0.75 >= b);
        let near_one = lgap_lower_bound(&spec(1, &[1.0 - 1e-12; 5])).unwrap();
        assert!(near_one > 1.0 - 1e-9);
        let single = lgap_lower_bound(&spec(2, &[0.4])).unwrap();
        assert!((single - beta(3, 0.4).unwrap()).abs() < 1e-15 && single <= 1.0);
        assert!(lgap_lower_bound(&spec(0, &[0.6, 0.5])).is_err());
    }

    /// Weighted count by dynamic programming over the last right endpoint.
    fn count_by_dp(lo: u64, hi: u64, growth: u64, free: u32, m: u32) -> u128 {
        // ways[x] = weighted number of chains so far whose last b equals x.
        let size = hi as usize + 1;
        let mut ways = vec![0u128; size];
        let mut start = vec![0u128; size];
        start[lo as usize] = 1;
        for _ in 0..m {
            let mut avail = vec![0u128; size];
            let mut acc = 0u128;
            for x in 0..size {
                acc += start[x];
                avail[x] = acc;
            }
            ways = vec![0u128; size];
            for a in lo as usize..size {
                if avail[a] == 0 {
                    continue;
                }
                for b in a + 3..=(a + growth as usize).min(hi as usize) {
                    ways[b] += avail[a] * (b as u128).pow(free);
                }
            }
            start = ways.clone();
        }
        ways.iter().sum()
    }

    #[test]
    fn count_two_dimensional_single_gap() {
        let r = count_gap_sequences(0.04, 2, 0.2, 1).unwrap();
        assert_eq!((r.lo, r.hi, r.max_growth), (25, 50, 5));
        let literal: u128 = (25..=47u64)
            .map(|a| (3..=5u64).filter(|g| a + g <= 50).count() as u128)
            .sum();
        assert_eq!(literal, 66);
        assert_eq!(r.count, 66);
        assert!((r.bound - 31.25).abs() < 1e-12);
        assert!(r.count as f64 >= r.bound);
    }

    #[test]
    fn count_two_gaps() {
        let r = count_gap_sequences(0.02, 2, 0.2, 2).unwrap();
        assert!((r.bound - 3906.25).abs() < 1e-9);
        assert!(r.count as f64 >= r.bound, "{} < {}", r.count, r.bound);
        assert_eq!(r.count, count_by_dp(r.lo, r.hi, r.max_growth, 0, 2));
    }

    #[test]
    fn count_matches_dp_in_three_dimensions() {
        for (p, m) in [(0.01, 1), (0.01, 2), (0.002, 2)] {
            let r = count_gap_sequences(p, 3, 0.2, m).unwrap();
            assert_eq!(
                r.count,
                count_by_dp(r.lo, r.hi, r.max_growth, 1, m),
                "p = {p}, m = {m}"
            );
        }
    }

    #[test]
    fn count_errors() {
        assert!(count_gap_sequences(0.9, 2, 0.2, 1).is_ok());
        // p^{-1} = 1.25: lo = 2, hi = 2, but no pair fits; count is zero, not an error.
        assert_eq!(count_gap_sequences(0.8, 2, 0.2, 1).unwrap().count, 0);
        assert!(count_gap_sequences(1.0, 2, 0.2, 1).is_err());
        assert!(count_gap_sequences(0.04, 1, 0.2, 1).is_err());
        assert!(count_gap_sequences(0.04, 2, 0.0, 1).is_err());
        assert!(matches!(
            count_gap_sequences_with_budget(0.0001, 2, 0.2, 3, 1000),
            Err(Error::BudgetExceeded(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn exact_matches_enumeration(
            m in 0i64..=4,
            ell in 0u32..=2,
            seed in proptest::collection::vec(0.01f64..0.99, 5),
        ) {
            let s = EventSeqSpec::new(m, ell, seed[..(m + 1) as usize].to_vec()).unwrap();
            let e = lgap_enumerate(&s).unwrap();
            prop_assert!((lgap_exact(&s) - e).abs() < 1e-12);
        }

        #[test]
        fn exact_dominates_product_bound(
            ell in 0u32..=3,
            mut u in proptest::collection::vec(0.001f64..0.999, 1..=51),
        ) {
            u.sort_by(f64::total_cmp);
            let s = EventSeqSpec::from_probs(ell, u).unwrap();
            prop_assert!(lgap_exact(&s) >= lgap_lower_bound(&s).unwrap() - 1e-12);
        }

        #[test]
        fn exact_is_monotone(
            ell in 0u32..=3,
            u in proptest::collection::vec(0.01f64..0.9, 2..=20),
            pick in 0usize..20,
            bump in 0.001f64..0.09,
        ) {
            let i = pick % u.len();
            let base = EventSeqSpec::from_probs(ell, u.clone()).unwrap();
            let mut v = u;
            v[i] += bump;
            let raised = EventSeqSpec::from_probs(ell, v).unwrap();
            prop_assert!(lgap_exact(&raised) >= lgap_exact(&base) - 1e-14);
        }
    }
}
