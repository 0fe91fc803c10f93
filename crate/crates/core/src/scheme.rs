//! Finitely supported Möbius surrogates ν and their text forms.
//!
//! Two text forms are accepted:
//!
//! * bracket form `[1,30;2,3,5]`: every index on the left contributes weight
//!   +1, every index on the right contributes −1, repetitions accumulate;
//! * explicit form `1:1,2:-1,3:-1,5:-1,30:1`.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// A finitely supported integer-weighted function on the positive integers.
///
/// Terms are sorted by index, weights are nonzero and ν(1) = 1.
#[derive(Debug, Clone, Serialize)]
pub struct Scheme {
    terms: Vec<(u64, i64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

impl PartialEq for Scheme {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for Scheme {}

impl Scheme {
    /// Builds a scheme from `(index, weight)` contributions, accumulating repeats.
    pub fn new(contributions: impl IntoIterator<Item = (u64, i64)>) -> Result<Self> {
        let mut terms: Vec<(u64, i64)> = Vec::new();
        for (k, w) in contributions {
            if k == 0 {
                return Err(Error::InvalidScheme("index 0 is not a positive integer".into()));
            }
            match terms.binary_search_by_key(&k, |&(i, _)| i) {
                Ok(pos) => {
                    terms[pos].1 = terms[pos].1.checked_add(w).ok_or_else(|| {
                        Error::InvalidScheme(format!("weight overflow at index {k}"))
                    })?
                }
                Err(pos) => terms.insert(pos, (k, w)),
            }
        }
        terms.retain(|&(_, w)| w != 0);
        match terms.first() {
            Some(&(1, 1)) => {}
            Some(&(1, w)) => {
                return Err(Error::InvalidScheme(format!("weight at index 1 must be +1, got {w}")))
            }
            _ => return Err(Error::InvalidScheme("index 1 is missing".into())),
        }
        Ok(Self { terms, name: None })
    }

    /// Sylvester's bracket notation: `plus` indices get +1, `minus` indices −1.
    pub fn from_bracket(plus: &[u64], minus: &[u64]) -> Result<Self> {
        Self::new(plus.iter().map(|&k| (k, 1)).chain(minus.iter().map(|&k| (k, -1))))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// The registry name if any, else the explicit form.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.render_explicit())
    }

    pub fn terms(&self) -> &[(u64, i64)] {
        &self.terms
    }

    pub fn weight(&self, index: u64) -> i64 {
        self.terms
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.terms[pos].1)
            .unwrap_or(0)
    }

    pub fn max_index(&self) -> u64 {
        self.terms.last().map(|&(k, _)| k).unwrap_or(1)
    }

    /// Σ ν(k)/k, exactly.
    pub fn cancellation_sum(&self) -> Rational {
        self.terms
            .iter()
            .fold(Rational::zero(), |acc, &(k, w)| acc + rational::frac(w, k as i64))
    }

    pub fn cancels(&self) -> bool {
        self.cancellation_sum().is_zero()
    }

    /// A(ν) = −Σ ν(n) ln n / n.
    pub fn constant_a(&self) -> f64 {
        -self
            .terms
            .iter()
            .map(|&(k, w)| w as f64 * (k as f64).ln() / k as f64)
            .sum::<f64>()
    }

    /// E(x) = Σ ν(k)⌊x/k⌋ by direct summation.
    pub fn e_direct(&self, x: u64) -> i64 {
        self.terms.iter().map(|&(k, w)| w * (x / k) as i64).sum()
    }

    pub fn render_explicit(&self) -> String {
        self.terms
            .iter()
            .map(|&(k, w)| format!("{k}:{w}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn render_bracket(&self) -> String {
        let side = |positive: bool| {
            self.terms
                .iter()
                .filter(|&&(_, w)| (w > 0) == positive)
                .flat_map(|&(k, w)| std::iter::repeat(k).take(w.unsigned_abs() as usize))
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("[{};{}]", side(true), side(false))
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_bracket())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_scheme(s)
    }
}

fn parse_err(text: &str, reason: impl Into<String>) -> Error {
    Error::Parse { text: text.to_string(), reason: reason.into() }
}

fn parse_index_list(text: &str, list: &str) -> Result<Vec<u64>> {
    let list = list.trim();
    if list.is_empty() {
        return Ok(Vec::new());
    }
    list.split(',')
        .map(|item| {
            item.trim()
                .parse::<u64>()
                .map_err(|_| parse_err(text, format!("bad index {:?}", item.trim())))
        })
        .collect()
}

/// Parses either the bracket form or the explicit `index:weight` form.
pub fn parse_scheme(text: &str) -> Result<Scheme> {
    let trimmed = text.trim();
    if let Some(body) = trimmed.strip_prefix('[') {
        let body = body
            .strip_suffix(']')
            .ok_or_else(|| parse_err(text, "missing closing bracket"))?;
        let (plus, minus) = body
            .split_once(';')
            .ok_or_else(|| parse_err(text, "bracket form needs a ';' separator"))?;
        let plus = parse_index_list(text, plus)?;
        let minus = parse_index_list(text, minus)?;
        return Scheme::from_bracket(&plus, &minus);
    }
    if trimmed.is_empty() {
        return Err(parse_err(text, "empty scheme"));
    }
    let mut contributions = Vec::new();
    for item in trimmed.split(',') {
        let (k, w) = item
            .split_once(':')
            .ok_or_else(|| parse_err(text, format!("expected index:weight, got {:?}", item.trim())))?;
        let k = k
            .trim()
            .parse::<u64>()
            .map_err(|_| parse_err(text, format!("bad index {:?}", k.trim())))?;
        let w = w
            .trim()
            .trim_start_matches('+')
            .parse::<i64>()
            .map_err(|_| parse_err(text, format!("bad weight {:?}", w.trim())))?;
        contributions.push((k, w));
    }
    Scheme::new(contributions)
}

/// The exact value of Σ ν(k)/k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalReport {
    #[serde(serialize_with = "rational::serialize")]
    pub value: Rational,
}

impl RationalReport {
    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }
}

pub fn cancellation_check(s: &Scheme) -> RationalReport {
    RationalReport { value: s.cancellation_sum() }
}

pub fn constant_a(s: &Scheme) -> f64 {
    s.constant_a()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_form() {
        let s = parse_scheme("[1,30;2,3,5]").unwrap();
        assert_eq!(s.terms(), &[(1, 1), (2, -1), (3, -1), (5, -1), (30, 1)]);
        let s = parse_scheme("[1,6;2,3,3]").unwrap();
        assert_eq!(s.terms(), &[(1, 1), (2, -1), (3, -2), (6, 1)]);
        let s = parse_scheme(" [ 1 ; 2 , 2 ] ").unwrap();
        assert_eq!(s.terms(), &[(1, 1), (2, -2)]);
    }

    #[test]
    fn explicit_form() {
        assert_eq!(parse_scheme("1:1").unwrap().terms(), &[(1, 1)]);
        let s = parse_scheme("1:+1, 2:-1, 3:-1, 6:-1").unwrap();
        assert_eq!(s.terms(), &[(1, 1), (2, -1), (3, -1), (6, -1)]);
    }

    #[test]
    fn zero_weights_are_dropped() {
        let s = parse_scheme("[1,4;2,4]").unwrap();
        assert_eq!(s.terms(), &[(1, 1), (2, -1)]);
    }

    #[test]
    fn malformed_text() {
        for bad in ["", "[1,2", "[1,2,3]", "1:1,x:2", "1", "[1;a]", "1:1,2:b", "0:1"] {
            assert!(parse_scheme(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn index_one_is_required() {
        assert!(matches!(parse_scheme("[2;4]"), Err(Error::InvalidScheme(_))));
        assert!(matches!(parse_scheme("[1;1]"), Err(Error::InvalidScheme(_))));
        assert!(matches!(parse_scheme("1:2,2:-4"), Err(Error::InvalidScheme(_))));
    }

    #[test]
    fn cancellation() {
        let cheb = parse_scheme("[1,30;2,3,5]").unwrap();
        assert!(cancellation_check(&cheb).is_zero());
        let delta = parse_scheme("1:1").unwrap();
        assert_eq!(cancellation_check(&delta).value, rational::int(1));
        let nu8 = parse_scheme("[1,6,10,14,105;2,3,5,7,11,13,385,1001]").unwrap();
        assert!(cancellation_check(&nu8).is_zero());
        // The bracket string printed for ν4 does not cancel.
        let bracket_nu4 = parse_scheme("[1,6;2,3]").unwrap();
        assert_eq!(cancellation_check(&bracket_nu4).value, rational::frac(1, 3));
    }

    #[test]
    fn constant_a_values() {
        let cheb = parse_scheme("[1,30;2,3,5]").unwrap();
        assert!((constant_a(&cheb) - 0.92129).abs() < 1e-5);
        let nu1 = parse_scheme("1:1,2:-2").unwrap();
        assert!((constant_a(&nu1) - 2f64.ln()).abs() < 1e-15);
        let nu4 = parse_scheme("1:1,2:-1,3:-1,6:-1").unwrap();
        assert!((constant_a(&nu4) - 1.0114).abs() < 1e-4);
    }

    #[test]
    fn render_forms() {
        let s = parse_scheme("1:1,2:-1,3:-2,6:1").unwrap();
        assert_eq!(s.render_bracket(), "[1,6;2,3,3]");
        assert_eq!(s.render_explicit(), "1:1,2:-1,3:-2,6:1");
        assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
    }
}
