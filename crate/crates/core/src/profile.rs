//! One period of E(x) = Σ ν(k)⌊x/k⌋ and the constants read off from it.

use std::collections::BTreeMap;

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::scheme::Scheme;

/// Default cap on the period of E.
pub const DEFAULT_PERIOD_CAP: u64 = 1_000_000;

/// A jump E(n) − E(n−1) ≠ 0 inside one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Jump {
    pub position: u64,
    pub delta: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileMetrics {
    /// First x ≥ 2 with E(x) < 1.
    pub n: u64,
    /// First x ≥ 2 with E(x) > 1; `None` when E ≤ 1 everywhere.
    pub m: Option<u64>,
    pub e_min: i64,
    pub e_max: i64,
    /// Level → first x ≥ 1 attaining it.
    pub first_occurrence: BTreeMap<i64, u64>,
}

/// E over one period, with its jumps and metrics.
#[derive(Debug, Clone, Serialize)]
pub struct EProfile {
    period: u64,
    /// `values[x]` = E(x) for `0 <= x <= period`.
    #[serde(skip)]
    values: Vec<i64>,
    jumps: Vec<Jump>,
    metrics: ProfileMetrics,
}

impl EProfile {
    pub fn period(&self) -> u64 {
        self.period
    }

    /// E(1), …, E(P).
    pub fn values(&self) -> &[i64] {
        &self.values[1..]
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn metrics(&self) -> &ProfileMetrics {
        &self.metrics
    }

    /// E(x) for any integer x ≥ 0, by periodic extension.
    #[inline]
    pub fn e(&self, x: u64) -> i64 {
        self.values[(x % self.period) as usize]
    }

    /// E(n) − E(n−1) for n ≥ 1.
    #[inline]
    pub fn delta(&self, n: u64) -> i64 {
        let r = ((n - 1) % self.period + 1) as usize;
        self.values[r] - self.values[r - 1]
    }

    /// Writes `x,E` rows for one period.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "E"])?;
        for (i, v) in self.values().iter().enumerate() {
            w.write_record([(i + 1).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn period_of(s: &Scheme, cap: u64) -> Result<u64> {
    let mut p: u64 = 1;
    for &(k, _) in s.terms() {
        let g = p.gcd(&k);
        p = (p / g).checked_mul(k).filter(|&v| v <= cap).ok_or(Error::Capacity {
            what: "period of E",
            requested: (p / g).saturating_mul(k),
            cap,
        })?;
    }
    Ok(p)
}

pub fn e_profile(s: &Scheme) -> Result<EProfile> {
    e_profile_with_cap(s, DEFAULT_PERIOD_CAP)
}

/// Computes E over one period; the scheme must satisfy the cancellation condition.
pub fn e_profile_with_cap(s: &Scheme, period_cap: u64) -> Result<EProfile> {
    let sum = s.cancellation_sum();
    if !num_traits::Zero::is_zero(&sum) {
        return Err(Error::NotPeriodic { sum: rational::render(&sum) });
    }
    let period = period_of(s, period_cap)?;
    let values: Vec<i64> = (0..=period).map(|x| s.e_direct(x)).collect();
    debug_assert_eq!(values[period as usize], 0);

    let jumps = (1..=period)
        .filter_map(|n| {
            let delta = values[n as usize] - values[n as usize - 1];
            (delta != 0).then_some(Jump { position: n, delta })
        })
        .collect();

    let one_period = &values[1..];
    let first_below = (2..=period).find(|&x| values[x as usize] < 1);
    let n = first_below.ok_or_else(|| Error::InvalidScheme("E never drops below 1".into()))?;
    let m = (2..=period).find(|&x| values[x as usize] > 1);
    let e_min = *one_period.iter().min().expect("period >= 1");
    let e_max = *one_period.iter().max().expect("period >= 1");
    let mut first_occurrence = BTreeMap::new();
    for (i, &v) in one_period.iter().enumerate() {
        first_occurrence.entry(v).or_insert(i as u64 + 1);
    }

    Ok(EProfile {
        period,
        values,
        jumps,
        metrics: ProfileMetrics { n, m, e_min, e_max, first_occurrence },
    })
}

/// The base constants A, A′ and B of a scheme.
#[derive(Debug, Clone, Serialize)]
pub struct BaseBounds {
    pub a: f64,
    /// A′ when E ≤ 2, else `None`.
    pub a_prime: Option<f64>,
    /// A′/A exactly.
    #[serde(serialize_with = "rational::serialize_opt")]
    pub a_prime_factor: Option<Rational>,
    /// B = N/(N−1)·A.
    pub b: f64,
    #[serde(serialize_with = "rational::serialize")]
    pub b_factor: Rational,
    /// B is a valid upper constant (needs E ≥ 0).
    pub b_valid: bool,
    /// A′ is a valid lower constant (needs E ≤ 2 and a valid B).
    pub a_prime_valid: bool,
}

pub fn base_bounds(s: &Scheme, profile: &EProfile) -> Result<BaseBounds> {
    let metrics = profile.metrics();
    let n = metrics.n;
    if n < 2 {
        return Err(Error::InvalidScheme(format!("N = {n} < 2")));
    }
    let a = s.constant_a();
    let b_factor = rational::frac(n as i64, n as i64 - 1);
    let a_prime_factor = match (metrics.e_max, metrics.m) {
        (e, _) if e <= 1 => Some(rational::int(1)),
        (2, Some(m)) => Some(rational::int(1) - rational::frac(n as i64, m as i64 * (n as i64 - 1))),
        _ => None,
    };
    let b_valid = metrics.e_min >= 0;
    Ok(BaseBounds {
        a,
        a_prime: a_prime_factor.as_ref().map(|f| rational::to_f64(f) * a),
        a_prime_valid: b_valid && a_prime_factor.is_some(),
        a_prime_factor,
        b: rational::to_f64(&b_factor) * a,
        b_factor,
        b_valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::parse_scheme;

    #[test]
    fn chebyshev_profile() {
        let p = e_profile(&parse_scheme("[1,30;2,3,5]").unwrap()).unwrap();
        assert_eq!(p.period(), 30);
        let m = p.metrics();
        assert_eq!((m.e_min, m.e_max, m.n, m.m), (0, 1, 6, None));
        assert_eq!(p.e(30), 0);
        assert_eq!(p.jumps().iter().map(|j| j.delta).sum::<i64>(), 0);
    }

    #[test]
    fn non_cancelling_is_rejected() {
        let s = parse_scheme("1:1").unwrap();
        assert!(matches!(e_profile(&s), Err(Error::NotPeriodic { .. })));
    }

    #[test]
    fn period_cap() {
        let s = parse_scheme("[1,6,10,14,105;2,3,5,7,11,13,385,1001]").unwrap();
        assert!(matches!(e_profile_with_cap(&s, 30029), Err(Error::Capacity { .. })));
        assert_eq!(e_profile_with_cap(&s, 30030).unwrap().period(), 30030);
    }

    #[test]
    fn nu4_base_bounds() {
        let s = parse_scheme("1:1,2:-1,3:-1,6:-1").unwrap();
        let p = e_profile(&s).unwrap();
        let bb = base_bounds(&s, &p).unwrap();
        assert_eq!(bb.a_prime_factor, Some(rational::frac(19, 25)));
        assert_eq!(bb.b_factor, rational::frac(6, 5));
        assert!((bb.a_prime.unwrap() - 0.7686).abs() < 1e-4);
        assert!((bb.b - 1.2136).abs() < 1e-4);
        assert!(bb.a_prime_valid && bb.b_valid);
    }

    #[test]
    fn nu6_and_chebyshev_base_bounds() {
        let s = parse_scheme("[1,6,70;2,3,5,7,210]").unwrap();
        let bb = base_bounds(&s, &e_profile(&s).unwrap()).unwrap();
        assert_eq!(bb.a_prime_factor, Some(rational::frac(107, 117)));
        assert_eq!(bb.b_factor, rational::frac(10, 9));
        assert!((bb.a_prime.unwrap() - 0.8951).abs() < 1e-4);
        assert!((bb.b - 1.0875).abs() < 1e-4);

        let s = parse_scheme("[1,30;2,3,5]").unwrap();
        let bb = base_bounds(&s, &e_profile(&s).unwrap()).unwrap();
        assert_eq!(bb.a_prime, Some(bb.a));
        assert!((bb.b - 1.1055).abs() < 1e-4);
    }

    #[test]
    fn large_e_has_no_a_prime() {
        let s = parse_scheme("[1,6,10,14,105;2,3,5,7,11,13,385,1001]").unwrap();
        let bb = base_bounds(&s, &e_profile(&s).unwrap()).unwrap();
        assert!(bb.a_prime.is_none());
        assert!(!bb.b_valid);
    }

    #[test]
    fn csv_export() {
        let p = e_profile(&parse_scheme("1:1,2:-2").unwrap()).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,E\n1,1\n2,0\n");
    }
}
