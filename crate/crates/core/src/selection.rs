//! Term selection: turning the jumps of E into bounds on V.
//!
//! V(x) = Σ_n (E(n) − E(n−1)) ψ(x/n), so every unit jump of E contributes
//! ±ψ(x/n). Opposite-sign unit jumps are matched level by level (the most
//! recent open jump is closed first), which pairs the two ends of each
//! horizontal run of the E-graph. On the lower side a pair is +ψ(x/m) − ψ(x/n)
//! with m < n, which is nonnegative; on the upper side it is −ψ(x/m) + ψ(x/n),
//! which is nonpositive. Either may therefore be dropped from the respective
//! bound. A pair is kept when n/m ≥ ρ. Unit jumps with no partner at the
//! moment they occur are standalone terms and are always kept.
//!
//! The matching itself does not depend on ρ, so [`Matching`] is computed once
//! and filtered for any number of thresholds.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::profile::EProfile;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Dominated from below: V ≥ ψ(x) − ψ(x/N) + …
    Lower,
    /// Dominated from above: V ≤ ψ(x) + …
    Upper,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        }
    }

    /// Sign of the unit jump that opens a pair on this side.
    fn opening_sign(self) -> i64 {
        match self {
            Side::Lower => 1,
            Side::Upper => -1,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Side::Lower),
            "upper" => Ok(Side::Upper),
            _ => Err(Error::Parameter(format!("side must be lower or upper, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UnitJump {
    pub position: u64,
    pub sign: i8,
}

/// Unit jumps at positions `1..=up_to`, a jump of size d expanded to |d| units.
pub fn jump_stream(profile: &EProfile, up_to: u64) -> Vec<UnitJump> {
    let mut out = Vec::new();
    for n in 1..=up_to {
        let d = profile.delta(n);
        let sign = d.signum() as i8;
        out.extend((0..d.unsigned_abs()).map(|_| UnitJump { position: n, sign }));
    }
    out
}

/// Indices (m, n) of a matched pair, m < n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    pub m: u64,
    pub n: u64,
}

impl Pair {
    pub fn new(m: u64, n: u64) -> Self {
        Self { m, n }
    }

    pub fn ratio(self) -> f64 {
        self.n as f64 / self.m as f64
    }

    /// n/m ≥ ρ. Exact ties are kept.
    pub fn passes(self, rho: f64) -> bool {
        self.ratio() >= rho
    }
}

impl Serialize for Pair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.m, self.n].serialize(s)
    }
}

impl From<(u64, u64)> for Pair {
    fn from((m, n): (u64, u64)) -> Self {
        Self { m, n }
    }
}

/// The ρ-independent outcome of matching the unit-jump stream on one side.
#[derive(Debug, Clone)]
pub struct Matching {
    side: Side,
    /// N for the lower side (the partner of the jump at 1).
    leading: Option<u64>,
    /// Matched pairs in closing order.
    pairs: Vec<Pair>,
    standalones: Vec<u64>,
    /// Opening jumps still unmatched when the scan stopped.
    open: Vec<u64>,
    scan_end: u64,
    /// Smallest ρ for which the scan is complete.
    rho_floor: f64,
    truncated_at: Option<u64>,
}

/// Upper bound on the scan: ⌈2Pρ/(ρ−1)⌉ + 2P.
pub fn scan_cap(period: u64, rho: f64) -> u64 {
    let p = period as f64;
    ((2.0 * p * rho / (rho - 1.0)).ceil() + 2.0 * p).min(u64::MAX as f64 / 4.0) as u64
}

impl Matching {
    /// Matches unit jumps until the pairing is periodic and no later pair can reach `rho_floor`.
    ///
    /// With `max_index`, jumps beyond it are ignored except those closing a
    /// pair opened at or before it; the scan ends once nothing is open.
    pub fn scan(profile: &EProfile, side: Side, rho_floor: f64, max_index: Option<u64>) -> Result<Self> {
        if rho_floor.is_nan() || rho_floor <= 1.0 {
            return Err(Error::Parameter(format!("rho must exceed 1, got {rho_floor}")));
        }
        let period = profile.period();
        let cap = scan_cap(period, rho_floor).saturating_add(max_index.unwrap_or(0));
        let open_sign = side.opening_sign();

        let mut stack: Vec<u64> = Vec::new();
        let mut boundary_stack: Vec<u64> = Vec::new();
        let mut pairs: Vec<Pair> = Vec::new();
        let mut standalones = Vec::new();
        let mut leading = None;
        let mut period_max_shifted = 0.0f64;
        let mut period_had_standalone = false;

        for n in 1..=cap {
            let d = profile.delta(n);
            let sign = d.signum();
            let truncating = max_index.is_some_and(|k| n > k);
            for unit in 0..d.unsigned_abs() {
                if truncating {
                    if sign != open_sign {
                        match stack.pop() {
                            Some(1) if side == Side::Lower && leading.is_none() => leading = Some(n),
                            Some(m) => pairs.push(Pair::new(m, n)),
                            None => {}
                        }
                    }
                    continue;
                }
                if n == 1 && unit == 0 && side == Side::Upper {
                    // ψ(x) itself: the leading term of the upper bound.
                    continue;
                }
                if sign == open_sign {
                    stack.push(n);
                    continue;
                }
                match stack.pop() {
                    Some(m) => {
                        if m == 1 && side == Side::Lower && leading.is_none() {
                            leading = Some(n);
                        } else {
                            pairs.push(Pair::new(m, n));
                        }
                        // One period later this pair recurs as (m + P, n + P).
                        let shifted = (n + period) as f64 / (m + period) as f64;
                        period_max_shifted = period_max_shifted.max(shifted);
                    }
                    None => {
                        standalones.push(n);
                        period_had_standalone = true;
                    }
                }
            }

            if truncating {
                if stack.is_empty() {
                    return Ok(Self {
                        side,
                        leading,
                        pairs,
                        standalones,
                        open: stack,
                        scan_end: n,
                        rho_floor,
                        truncated_at: max_index,
                    });
                }
                continue;
            }

            if n % period == 0 {
                let repeats = stack.len() == boundary_stack.len()
                    && stack.iter().zip(&boundary_stack).all(|(&s, &b)| s == b + period);
                let steady = n >= 2 * period
                    && repeats
                    && !period_had_standalone
                    && period_max_shifted < rho_floor
                    && (side == Side::Upper || leading.is_some());
                if steady && max_index.is_none() {
                    return Ok(Self {
                        side,
                        leading,
                        pairs,
                        standalones,
                        open: stack,
                        scan_end: n,
                        rho_floor,
                        truncated_at: None,
                    });
                }
                boundary_stack.clone_from(&stack);
                period_max_shifted = 0.0;
                period_had_standalone = false;
            }
        }
        Err(Error::SteadyState { side: side.as_str(), cap })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn standalones(&self) -> &[u64] {
        &self.standalones
    }

    pub fn leading(&self) -> Option<u64> {
        self.leading
    }

    pub fn scan_end(&self) -> u64 {
        self.scan_end
    }

    pub fn rho_floor(&self) -> f64 {
        self.rho_floor
    }

    /// Applies the threshold ρ and the exclusion list.
    pub fn select(&self, rho: f64, exclude: &[Pair]) -> Result<TermSelection> {
        if rho.is_nan() || rho <= 1.0 {
            return Err(Error::Parameter(format!("rho must exceed 1, got {rho}")));
        }
        if rho < self.rho_floor && self.truncated_at.is_none() {
            return Err(Error::Parameter(format!(
                "rho {rho} is below the threshold {} this matching was scanned for",
                self.rho_floor
            )));
        }
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        let mut excluded = Vec::new();
        for &p in &self.pairs {
            if !p.passes(rho) {
                dropped.push(p);
            } else if exclude.contains(&p) {
                excluded.push(p);
            } else {
                kept.push(p);
            }
        }
        kept.sort_unstable();
        Ok(TermSelection {
            side: self.side,
            rho,
            leading_n: self.leading,
            kept_pairs: kept,
            standalones: self.standalones.clone(),
            excluded_pairs: excluded,
            dropped_pairs: dropped,
            open: self.open.clone(),
            scan_end: self.scan_end,
            truncated_at: self.truncated_at,
        })
    }
}

/// Optional knobs of [`select_terms`].
#[derive(Debug, Clone, Default)]
pub struct SelectOptions {
    pub max_index: Option<u64>,
    pub exclude: Vec<Pair>,
}

/// The terms retained in one bound of V.
#[derive(Debug, Clone, Serialize)]
pub struct TermSelection {
    pub side: Side,
    pub rho: f64,
    /// Lower side: the N of ψ(x) − ψ(x/N).
    #[serde(rename = "leading")]
    pub leading_n: Option<u64>,
    #[serde(rename = "pairs")]
    pub kept_pairs: Vec<Pair>,
    pub standalones: Vec<u64>,
    #[serde(rename = "excluded")]
    pub excluded_pairs: Vec<Pair>,
    #[serde(skip)]
    pub dropped_pairs: Vec<Pair>,
    #[serde(skip)]
    pub open: Vec<u64>,
    pub scan_end: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated_at: Option<u64>,
}

pub fn select_terms(profile: &EProfile, side: Side, rho: f64, options: &SelectOptions) -> Result<TermSelection> {
    Matching::scan(profile, side, rho, options.max_index)?.select(rho, &options.exclude)
}

impl TermSelection {
    /// Number of ψ terms in the bound, counting the leading ones.
    pub fn term_count(&self) -> usize {
        let leading = match self.side {
            Side::Lower => 2,
            Side::Upper => 1,
        };
        leading + 2 * self.kept_pairs.len() + self.standalones.len()
    }

    /// Signed ψ(x/k) terms: (k, ±1).
    pub fn signed_terms(&self) -> Vec<(u64, i64)> {
        let mut terms = vec![(1, 1)];
        match self.side {
            Side::Lower => {
                if let Some(n) = self.leading_n {
                    terms.push((n, -1));
                }
                for p in &self.kept_pairs {
                    terms.push((p.m, 1));
                    terms.push((p.n, -1));
                }
                terms.extend(self.standalones.iter().map(|&u| (u, -1)));
            }
            Side::Upper => {
                terms.extend(self.standalones.iter().map(|&v| (v, 1)));
                for p in &self.kept_pairs {
                    terms.push((p.m, -1));
                    terms.push((p.n, 1));
                }
            }
        }
        terms
    }

    /// Unit jumps tagged `leading`, `kept`, `dropped` or `standalone`, by position.
    pub fn tagged_jumps(&self) -> Vec<(u64, i8, &'static str)> {
        let open = self.side.opening_sign() as i8;
        let close = -open;
        let mut rows = vec![(1, 1, "leading")];
        if let Some(n) = self.leading_n {
            rows.push((n, -1, "leading"));
        }
        for p in &self.kept_pairs {
            rows.push((p.m, open, "kept"));
            rows.push((p.n, close, "kept"));
        }
        for p in self.dropped_pairs.iter().chain(&self.excluded_pairs) {
            rows.push((p.m, open, "dropped"));
            rows.push((p.n, close, "dropped"));
        }
        rows.extend(self.standalones.iter().map(|&s| (s, close, "standalone")));
        rows.extend(self.open.iter().map(|&s| (s, open, "dropped")));
        rows.sort_by_key(|&(pos, _, _)| pos);
        rows
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["position", "sign", "status"])?;
        for (pos, sign, status) in self.tagged_jumps() {
            w.write_record([pos.to_string(), sign.to_string(), status.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The step function L (lower) or U (upper) induced by a selection, at x = 1..=up_to.
pub fn step_function(sel: &TermSelection, up_to: u64) -> Vec<i64> {
    let mut diff = vec![0i64; up_to as usize + 2];
    for (k, s) in sel.signed_terms() {
        if k <= up_to {
            diff[k as usize] += s;
        }
    }
    let mut acc = 0;
    diff[1..=up_to as usize]
        .iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct StepCheck {
    pub side: Side,
    pub window_end: u64,
    /// Value of the step function beyond its last term.
    pub tail: i64,
    pub e_bound: i64,
}

/// Checks L ≤ E (lower) or U ≥ E (upper) on `[1, 2·scan_end]` and the tail constant.
pub fn selection_step_function(sel: &TermSelection, profile: &EProfile) -> Result<StepCheck> {
    let window_end = 2 * sel.scan_end;
    let steps = step_function(sel, window_end);
    for (i, &step) in steps.iter().enumerate() {
        let x = i as u64 + 1;
        let e = profile.e(x);
        let ok = match sel.side {
            Side::Lower => step <= e,
            Side::Upper => step >= e,
        };
        if !ok {
            return Err(Error::Domination { side: sel.side.as_str(), x, step, e });
        }
    }
    let tail: i64 = sel.signed_terms().iter().map(|&(_, s)| s).sum();
    let metrics = profile.metrics();
    let (tail_ok, e_bound) = match sel.side {
        Side::Lower => (tail <= metrics.e_min, metrics.e_min),
        Side::Upper => (tail >= metrics.e_max, metrics.e_max),
    };
    if !tail_ok {
        return Err(Error::Domination { side: sel.side.as_str(), x: u64::MAX, step: tail, e: e_bound });
    }
    Ok(StepCheck { side: sel.side, window_end, tail, e_bound })
}

/// Σ 1/m over kept pairs and Σ 1/n over kept pairs plus standalones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionCoefficients {
    #[serde(serialize_with = "rational::serialize")]
    pub coef_a: Rational,
    #[serde(serialize_with = "rational::serialize")]
    pub coef_b: Rational,
}

pub fn selection_coefficients(sel: &TermSelection) -> SelectionCoefficients {
    let mut coef_a = Rational::zero();
    let mut coef_b = Rational::zero();
    for p in &sel.kept_pairs {
        coef_a += rational::recip(p.m);
        coef_b += rational::recip(p.n);
    }
    for &s in &sel.standalones {
        coef_b += rational::recip(s);
    }
    SelectionCoefficients { coef_a, coef_b }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::e_profile;
    use crate::scheme::parse_scheme;

    fn profile(text: &str) -> EProfile {
        e_profile(&parse_scheme(text).unwrap()).unwrap()
    }

    fn pairs(v: &[(u64, u64)]) -> Vec<Pair> {
        v.iter().map(|&p| p.into()).collect()
    }

    fn signed(stream: &[UnitJump]) -> Vec<i64> {
        stream.iter().map(|j| j.sign as i64 * j.position as i64).collect()
    }

    #[test]
    fn jump_streams() {
        let cheb = profile("[1,30;2,3,5]");
        assert_eq!(signed(&jump_stream(&cheb, 13)), vec![1, -6, 7, -10, 11, -12, 13]);
        let nu4 = profile("1:1,2:-1,3:-1,6:-1");
        assert_eq!(signed(&jump_stream(&nu4, 12)), vec![1, 5, -6, -6, 7, 11, -12, -12]);
    }

    #[test]
    fn nu4_selections() {
        let p = profile("1:1,2:-1,3:-1,6:-1");
        let o = SelectOptions::default();
        let lo = select_terms(&p, Side::Lower, 1.5, &o).unwrap();
        assert_eq!(lo.leading_n, Some(6));
        assert_eq!(lo.kept_pairs, pairs(&[(7, 12)]));
        assert!(lo.standalones.is_empty());
        let up = select_terms(&p, Side::Upper, 1.5, &o).unwrap();
        assert_eq!(up.kept_pairs, pairs(&[(6, 11)]));
        assert_eq!(up.standalones, vec![5]);
        assert_eq!((lo.term_count(), up.term_count()), (4, 4));

        let lo = select_terms(&p, Side::Lower, 1.3, &o).unwrap();
        assert_eq!(lo.kept_pairs, pairs(&[(7, 12), (13, 18)]));
        let up = select_terms(&p, Side::Upper, 1.3, &o).unwrap();
        assert_eq!(up.kept_pairs, pairs(&[(6, 11), (12, 17)]));
    }

    #[test]
    fn coefficients_nu4() {
        let p = profile("1:1,2:-1,3:-1,6:-1");
        let o = SelectOptions::default();
        let up = selection_coefficients(&select_terms(&p, Side::Upper, 1.5, &o).unwrap());
        assert_eq!(up.coef_a, rational::frac(1, 6));
        assert_eq!(up.coef_b, rational::frac(1, 11) + rational::frac(1, 5));
        let lo = selection_coefficients(&select_terms(&p, Side::Lower, 1.5, &o).unwrap());
        assert_eq!(lo.coef_a, rational::frac(1, 7));
        assert_eq!(lo.coef_b, rational::frac(1, 12));
    }

    #[test]
    fn huge_rho_degenerates() {
        let p = profile("[1,30;2,3,5]");
        let o = SelectOptions::default();
        let lo = select_terms(&p, Side::Lower, 1e6, &o).unwrap();
        assert_eq!(lo.leading_n, Some(6));
        assert!(lo.kept_pairs.is_empty() && lo.standalones.is_empty());
        let up = select_terms(&p, Side::Upper, 1e6, &o).unwrap();
        assert!(up.kept_pairs.is_empty() && up.standalones.is_empty());
        let c = selection_coefficients(&up);
        assert!(c.coef_a.is_zero() && c.coef_b.is_zero());
        let check = selection_step_function(&lo, &p).unwrap();
        assert_eq!(check.tail, 0);
    }

    #[test]
    fn upper_tail_counts_standalones() {
        let p = profile("1:1,2:-1,3:-1,6:-1");
        let up = select_terms(&p, Side::Upper, 1.5, &SelectOptions::default()).unwrap();
        let check = selection_step_function(&up, &p).unwrap();
        assert_eq!((check.tail, check.e_bound), (2, 2));
    }

    #[test]
    fn exclusions_move_pairs_out() {
        let p = profile("1:1,2:-1,3:-1,6:-1");
        let opts = SelectOptions { exclude: pairs(&[(13, 18)]), ..Default::default() };
        let lo = select_terms(&p, Side::Lower, 1.3, &opts).unwrap();
        assert_eq!(lo.kept_pairs, pairs(&[(7, 12)]));
        assert_eq!(lo.excluded_pairs, pairs(&[(13, 18)]));
        selection_step_function(&lo, &p).unwrap();
    }

    #[test]
    fn rho_must_exceed_one() {
        let p = profile("[1,30;2,3,5]");
        for rho in [1.0, 0.5, f64::NAN] {
            assert!(matches!(
                select_terms(&p, Side::Lower, rho, &SelectOptions::default()),
                Err(Error::Parameter(_))
            ));
        }
        let m = Matching::scan(&p, Side::Lower, 1.5, None).unwrap();
        assert!(m.select(1.2, &[]).is_err());
    }

    #[test]
    fn broken_selection_fails_domination() {
        let p = profile("1:1,2:-1,3:-1,6:-1");
        let mut up = select_terms(&p, Side::Upper, 1.5, &SelectOptions::default()).unwrap();
        up.standalones.clear();
        assert!(matches!(selection_step_function(&up, &p), Err(Error::Domination { .. })));
    }

    #[test]
    fn tagged_csv() {
        let p = profile("[1,30;2,3,5]");
        let lo = select_terms(&p, Side::Lower, 1.2, &SelectOptions::default()).unwrap();
        let mut buf = Vec::new();
        lo.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("position,sign,status"));
        assert_eq!(lines.next(), Some("1,1,leading"));
        assert_eq!(lines.next(), Some("6,-1,leading"));
        assert_eq!(lines.next(), Some("7,1,kept"));
        assert_eq!(lines.next(), Some("10,-1,kept"));
        assert_eq!(lines.next(), Some("11,1,dropped"));
    }
}
