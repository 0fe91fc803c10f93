//! Sieve-backed checks of the identities and inequalities behind the method.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{psi_pi_bracket, SieveTables};
use crate::profile::EProfile;
use crate::scheme::Scheme;
use crate::selection::{Side, TermSelection};

/// Tolerance for float summation in the identity and bound checks.
pub const SUMMATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub name: String,
    pub x_min: u64,
    pub x_max: u64,
    pub max_violation: f64,
    pub witness_x: Option<u64>,
    pub tolerance: f64,
    pub passed: bool,
    /// Check-specific constants, e.g. the fitted O(ln²x) coefficients.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<(String, f64)>,
}

impl VerificationReport {
    fn new(name: &str, x_min: u64, x_max: u64, max_violation: f64, witness_x: Option<u64>, tolerance: f64) -> Self {
        let passed = max_violation <= tolerance;
        Self {
            name: name.to_string(),
            x_min,
            x_max,
            max_violation,
            // Rounding residue below the tolerance is not a witness.
            witness_x: witness_x.filter(|_| !passed),
            tolerance,
            passed,
            constants: Vec::new(),
        }
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }
}

/// Tracks the largest violation and where it occurred.
#[derive(Default)]
struct Worst {
    value: f64,
    at: Option<u64>,
}

impl Worst {
    fn record(&mut self, x: u64, violation: f64) {
        if violation > self.value {
            self.value = violation;
            self.at = Some(x);
        }
    }
}

/// V(x) = Σ ν(k) T(x/k).
pub fn v_value(s: &Scheme, x: u64, tables: &SieveTables) -> f64 {
    s.terms()
        .iter()
        .take_while(|&&(k, _)| k <= x)
        .map(|&(k, w)| w as f64 * tables.t_int(x / k))
        .sum()
}

/// Σ_{n≤x} E(x/n) Λ(n), grouping n over runs of equal ⌊x/n⌋.
pub fn v_via_e(profile: &EProfile, x: u64, tables: &SieveTables) -> f64 {
    let mut sum = 0.0;
    let mut n = 1;
    while n <= x {
        let q = x / n;
        let n_end = x / q;
        let e = profile.e(q);
        if e != 0 {
            sum += e as f64 * (tables.psi_int(n_end) - tables.psi_int(n - 1));
        }
        n = n_end + 1;
    }
    sum
}

/// max |Σ ν(k)T(x/k) − Σ E(x/n)Λ(n)| over integer x ≤ x_max.
pub fn verify_v_identities(
    s: &Scheme,
    profile: &EProfile,
    x_max: u64,
    tables: &SieveTables,
) -> Result<VerificationReport> {
    tables.ensure_covers(x_max)?;
    let mut worst = Worst::default();
    for x in 1..=x_max {
        worst.record(x, (v_value(s, x, tables) - v_via_e(profile, x, tables)).abs());
    }
    Ok(VerificationReport::new("v_identities", 1, x_max, worst.value, worst.at, SUMMATION_TOLERANCE))
}

fn bound_value(terms: &[(u64, i64)], x: u64, tables: &SieveTables) -> f64 {
    terms
        .iter()
        .filter(|&&(k, _)| k <= x)
        .map(|&(k, s)| s as f64 * tables.psi_int(x / k))
        .sum()
}

/// Checks lower-bound ≤ V(x) ≤ upper-bound at every integer x ≤ x_max.
pub fn verify_selection_bounds(
    s: &Scheme,
    lower: &TermSelection,
    upper: &TermSelection,
    x_max: u64,
    tables: &SieveTables,
) -> Result<VerificationReport> {
    if lower.side != Side::Lower || upper.side != Side::Upper {
        return Err(Error::Parameter("expected a lower and an upper selection".into()));
    }
    tables.ensure_covers(x_max)?;
    let lower_terms = lower.signed_terms();
    let upper_terms = upper.signed_terms();
    let mut worst = Worst::default();
    for x in 1..=x_max {
        let v = v_value(s, x, tables);
        let below = bound_value(&lower_terms, x, tables) - v;
        let above = v - bound_value(&upper_terms, x, tables);
        worst.record(x, below.max(above));
    }
    Ok(VerificationReport::new("selection_bounds", 1, x_max, worst.value, worst.at, SUMMATION_TOLERANCE))
}

/// |V(x) − A x| / ln x along the ladder `xs`, maximized over every integer
/// between consecutive ladder points. Passes when the maximum over the upper
/// half of the ladder is at most twice the maximum over the lower half.
pub fn verify_asymptotic_a(s: &Scheme, xs: &[u64], tables: &SieveTables) -> Result<VerificationReport> {
    let mut xs: Vec<u64> = xs.iter().copied().filter(|&x| x >= 2).collect();
    xs.sort_unstable();
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::Parameter("need at least two ladder points x >= 2".into()));
    }
    let x_max = *xs.last().expect("nonempty");
    tables.ensure_covers(x_max)?;
    let a = s.constant_a();
    let ratio = |x: u64| (v_value(s, x, tables) - a * x as f64).abs() / (x as f64).ln();
    // Each ladder point carries the worst ratio since the previous one.
    let ratios: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let from = if i == 0 { x } else { xs[i - 1] + 1 };
            (from..=x).map(ratio).fold(0.0, f64::max)
        })
        .collect();
    let half = xs.len() / 2;
    let max_of = |r: &[f64]| r.iter().copied().fold(0.0, f64::max);
    let (early, late) = (max_of(&ratios[..half]), max_of(&ratios[half..]));
    let late_at = half + ratios[half..].iter().copied().enumerate().fold(0, |best, (i, r)| {
        if r > ratios[half + best] {
            i
        } else {
            best
        }
    });
    let excess = (late - 2.0 * early).max(0.0);
    let mut report = VerificationReport::new(
        "asymptotic_a",
        xs[0],
        x_max,
        excess,
        (excess > 0.0).then_some(xs[late_at]),
        0.0,
    );
    report.constants = vec![
        ("a".into(), a),
        ("ratio_early".into(), early),
        ("ratio_late".into(), late),
    ];
    Ok(report)
}

/// `x_min, 10·x_min, …` up to `x_max`, with `x_max` appended when missed.
pub fn geometric_ladder(x_min: u64, x_max: u64, points_per_decade: u32) -> Vec<u64> {
    let mut out = Vec::new();
    let factor = 10f64.powf(1.0 / points_per_decade.max(1) as f64);
    let mut x = x_min.max(2) as f64;
    while x.round() as u64 <= x_max {
        out.push(x.round() as u64);
        x *= factor;
    }
    if out.last() != Some(&x_max) {
        out.push(x_max);
    }
    out.dedup();
    out
}

/// Fits C_low = max (a x − ψ(x))/ln²x and C_high = max (ψ(x) − b x)/ln²x over
/// `[100, x_max]`. Each passes when its maximum over `[x_max/10, x_max]` does
/// not exceed the maximum over `[100, x_max/10)`.
pub fn verify_final_bounds(a: f64, b: f64, x_max: u64, tables: &SieveTables) -> Result<VerificationReport> {
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::Parameter(format!("need a < b, got a = {a}, b = {b}")));
    }
    const X_MIN: u64 = 100;
    let split = x_max / 10;
    if split <= X_MIN {
        return Err(Error::Parameter(format!("x_max = {x_max} must exceed {}", 10 * X_MIN)));
    }
    tables.ensure_covers(x_max)?;
    let mut low = [f64::NEG_INFINITY; 2];
    let mut high = [f64::NEG_INFINITY; 2];
    let mut low_at = 0;
    let mut high_at = 0;
    for x in X_MIN..=x_max {
        let psi = tables.psi_int(x);
        let xf = x as f64;
        let l2 = xf.ln().powi(2);
        let late = usize::from(x >= split);
        let cl = (a * xf - psi) / l2;
        let ch = (psi - b * xf) / l2;
        if cl > low[late] {
            low[late] = cl;
            if late == 1 {
                low_at = x;
            }
        }
        if ch > high[late] {
            high[late] = ch;
            if late == 1 {
                high_at = x;
            }
        }
    }
    let low_excess = low[1] - low[0];
    let high_excess = high[1] - high[0];
    let (excess, witness) = if low_excess >= high_excess { (low_excess, low_at) } else { (high_excess, high_at) };
    let mut report = VerificationReport::new(
        "final_bounds",
        X_MIN,
        x_max,
        excess.max(0.0),
        (excess > 0.0).then_some(witness),
        0.0,
    );
    report.constants = vec![
        ("a".into(), a),
        ("b".into(), b),
        ("c_low".into(), low[0].max(low[1])),
        ("c_high".into(), high[0].max(high[1])),
        ("c_low_late".into(), low[1]),
        ("c_high_late".into(), high[1]),
    ];
    Ok(report)
}

/// ψ(x) ≤ π(x) ln x ≤ ψ(x)/α + x^α ln x at every x in `xs`.
pub fn verify_psi_pi(alpha: f64, xs: &[u64], tables: &SieveTables) -> Result<VerificationReport> {
    let mut worst = Worst::default();
    let mut failed_at = None;
    for &x in xs {
        let br = psi_pi_bracket(x as f64, alpha, tables)?;
        let violation = (br.psi - br.pi_log).max(br.pi_log - br.upper);
        worst.record(x, violation);
        if !br.holds && failed_at.is_none() {
            failed_at = Some(x);
        }
    }
    let x_min = xs.iter().copied().min().unwrap_or(0);
    let x_max = xs.iter().copied().max().unwrap_or(0);
    let mut report = VerificationReport::new("psi_pi", x_min, x_max, worst.value, worst.at, 0.0);
    report.passed = failed_at.is_none();
    if let Some(x) = failed_at {
        report.witness_x = Some(x);
    }
    report.constants = vec![("alpha".into(), alpha)];
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_sieve;
    use crate::profile::e_profile;
    use crate::scheme::parse_scheme;
    use crate::selection::{select_terms, SelectOptions};

    #[test]
    fn v_identity_small() {
        let tables = build_sieve(3000).unwrap();
        for text in ["[1,30;2,3,5]", "1:1,2:-1,3:-1,6:-1", "1:1,2:-2"] {
            let s = parse_scheme(text).unwrap();
            let p = e_profile(&s).unwrap();
            assert_eq!(v_value(&s, 1, &tables), 0.0);
            assert_eq!(v_via_e(&p, 1, &tables), 0.0);
            let r = verify_v_identities(&s, &p, 3000, &tables).unwrap();
            assert!(r.passed, "{text}: {r:?}");
        }
    }

    #[test]
    fn v_of_nu1() {
        let tables = build_sieve(10).unwrap();
        let s = parse_scheme("1:1,2:-2").unwrap();
        let expected = tables.t_int(10) - 2.0 * tables.t_int(5);
        assert!((v_value(&s, 10, &tables) - expected).abs() < 1e-12);
    }

    #[test]
    fn selection_bounds_hold_and_break() {
        let tables = build_sieve(20_000).unwrap();
        let s = parse_scheme("1:1,2:-1,3:-1,6:-1").unwrap();
        let p = e_profile(&s).unwrap();
        let o = SelectOptions::default();
        let lo = select_terms(&p, Side::Lower, 1.5, &o).unwrap();
        let mut up = select_terms(&p, Side::Upper, 1.5, &o).unwrap();
        let r = verify_selection_bounds(&s, &lo, &up, 20_000, &tables).unwrap();
        assert!(r.passed && r.witness_x.is_none(), "{r:?}");

        up.standalones.clear();
        let r = verify_selection_bounds(&s, &lo, &up, 20_000, &tables).unwrap();
        assert!(!r.passed);
        assert_eq!(r.witness_x.map(|x| x >= 5), Some(true));
        assert!(verify_selection_bounds(&s, &up, &lo, 100, &tables).is_err());
    }

    #[test]
    fn asymptotic_constant() {
        let tables = build_sieve(100_000).unwrap();
        let ladder = geometric_ladder(1000, 100_000, 4);
        assert_eq!((ladder[0], *ladder.last().unwrap()), (1000, 100_000));
        for text in ["[1,30;2,3,5]", "1:1,2:-2"] {
            let r = verify_asymptotic_a(&parse_scheme(text).unwrap(), &ladder, &tables).unwrap();
            assert!(r.passed, "{text}: {r:?}");
        }
        // A scheme whose V grows like x·ln x relative to A x is caught.
        assert!(verify_asymptotic_a(&parse_scheme("1:1").unwrap(), &ladder, &tables)
            .map(|r| !r.passed)
            .unwrap());
    }

    #[test]
    fn final_bounds() {
        let tables = build_sieve(10_000).unwrap();
        let r = verify_final_bounds(0.0, 2.0, 10_000, &tables).unwrap();
        assert!(r.passed, "{r:?}");
        let r = verify_final_bounds(1.1, 1.2, 10_000, &tables).unwrap();
        assert!(!r.passed && r.witness_x.is_some());
        assert!(verify_final_bounds(1.2, 1.1, 10_000, &tables).is_err());
        assert!(verify_final_bounds(0.5, 1.5, 1000, &tables).is_err());
    }

    #[test]
    fn psi_pi() {
        let tables = build_sieve(100_000).unwrap();
        let r = verify_psi_pi(0.5, &[10, 100, 1000, 100_000], &tables).unwrap();
        assert!(r.passed);
        assert!(verify_psi_pi(1.5, &[10], &tables).is_err());
    }
}
