//! ρ sweeps: the iteration limits as a function of the selection threshold.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::iteration::eigen_from_trace_det;
use crate::profile::{base_bounds, e_profile};
use crate::scheme::Scheme;
use crate::selection::{Matching, Side};

pub const DEFAULT_RHO_MIN: f64 = 1.02;
pub const DEFAULT_RHO_MAX: f64 = 2.0;
pub const DEFAULT_STEP: f64 = 0.005;
pub const DEFAULT_REFINE_ROUNDS: u32 = 3;

/// Results at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    pub ratio: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub n_lower: usize,
    pub n_upper: usize,
    pub converges: bool,
}

impl SweepRow {
    /// Converges to a positive lower constant.
    pub fn usable(&self) -> bool {
        self.converges && self.a > 0.0 && self.b.is_finite()
    }
}

fn snap(rho: f64) -> f64 {
    (rho * 1e9).round() / 1e9
}

/// `rho_min, rho_min + step, …` up to `rho_max`, each snapped to 1e-9.
pub fn grid(rho_min: f64, rho_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(rho_min > 1.0 && rho_max > rho_min && step > 0.0 && step.is_finite()) {
        return Err(Error::Parameter(format!(
            "invalid grid: need 1 < rho_min < rho_max and step > 0 (got {rho_min}, {rho_max}, {step})"
        )));
    }
    let count = ((rho_max - rho_min) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| snap(rho_min + k as f64 * step)).collect())
}

/// Both matchings of one scheme, scanned once and evaluated at any ρ ≥ the floor.
#[derive(Debug, Clone)]
pub struct Sweeper {
    a: f64,
    telescoping: f64,
    lower: Matching,
    upper: Matching,
}

struct SideSums {
    coef_a: f64,
    coef_b: f64,
    terms: usize,
}

fn side_sums(m: &Matching, rho: f64) -> SideSums {
    let mut sums = SideSums {
        coef_a: 0.0,
        coef_b: m.standalones().iter().map(|&s| 1.0 / s as f64).sum(),
        terms: m.standalones().len(),
    };
    for p in m.pairs().iter().filter(|p| p.passes(rho)) {
        sums.coef_a += 1.0 / p.m as f64;
        sums.coef_b += 1.0 / p.n as f64;
        sums.terms += 2;
    }
    sums.terms += match m.side() {
        Side::Lower => 2,
        Side::Upper => 1,
    };
    sums
}

impl Sweeper {
    pub fn new(s: &Scheme, rho_floor: f64) -> Result<Self> {
        let profile = e_profile(s)?;
        let base = base_bounds(s, &profile)?;
        let n = profile.metrics().n as f64;
        let (lower, upper) = rayon::join(
            || Matching::scan(&profile, Side::Lower, rho_floor, None),
            || Matching::scan(&profile, Side::Upper, rho_floor, None),
        );
        Ok(Self { a: base.a, telescoping: n / (n - 1.0), lower: lower?, upper: upper? })
    }

    pub fn rho_floor(&self) -> f64 {
        self.lower.rho_floor()
    }

    pub fn row(&self, rho: f64) -> SweepRow {
        let up = side_sums(&self.upper, rho);
        let lo = side_sums(&self.lower, rho);
        let f = self.telescoping;
        let (m11, m12) = (up.coef_a, -up.coef_b);
        let (m21, m22) = (-f * lo.coef_a, f * lo.coef_b);
        let eig = eigen_from_trace_det(m11 + m22, m11 * m22 - m12 * m21);
        let det = (1.0 - m11) * (1.0 - m22) - m12 * m21;
        let (c1, c2) = (self.a, f * self.a);
        let (a, b) = if det != 0.0 {
            (((1.0 - m22) * c1 + m12 * c2) / det, (m21 * c1 + (1.0 - m11) * c2) / det)
        } else {
            (f64::NAN, f64::NAN)
        };
        SweepRow {
            rho,
            a,
            b,
            ratio: b / a,
            lambda1: eig.lambda1,
            lambda2: eig.lambda2,
            n_lower: lo.terms,
            n_upper: up.terms,
            converges: eig.converges && det != 0.0,
        }
    }
}

/// One row per grid point, ordered by ρ; non-convergent rows are flagged, not dropped.
pub fn sweep_rho(s: &Scheme, rho_min: f64, rho_max: f64, step: f64) -> Result<Vec<SweepRow>> {
    let rhos = grid(rho_min, rho_max, step)?;
    let sweeper = Sweeper::new(s, rho_min)?;
    Ok(rhos.par_iter().map(|&rho| sweeper.row(rho)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MaxA,
    MinB,
    MinRatio,
}

impl Objective {
    fn key(self, row: &SweepRow) -> f64 {
        match self {
            Objective::MaxA => -row.a,
            Objective::MinB => row.b,
            Objective::MinRatio => row.ratio,
        }
    }

    /// Strictly better, or equal with ρ closer to b/a.
    fn better(self, cand: &SweepRow, best: &SweepRow) -> bool {
        let (k, kb) = (self.key(cand), self.key(best));
        let tol = 1e-12 * kb.abs().max(1.0);
        if k < kb - tol {
            return true;
        }
        k <= kb + tol && (cand.rho - cand.ratio).abs() < (best.rho - best.ratio).abs()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoOptimum {
    pub max_a: SweepRow,
    pub min_b: SweepRow,
    /// The headline optimum.
    pub min_ratio: SweepRow,
    /// |ρ − b/a| at the b/a optimum.
    pub residual: f64,
}

fn refine(
    sweeper: &Sweeper,
    objective: Objective,
    start: SweepRow,
    (lo, hi): (f64, f64),
    step: f64,
    rounds: u32,
) -> SweepRow {
    let mut best = start;
    let mut h = step;
    for _ in 0..rounds {
        h /= 2.0;
        let center = best.rho;
        for rho in [center - h, center + h] {
            let rho = snap(rho);
            if rho < lo || rho > hi {
                continue;
            }
            let row = sweeper.row(rho);
            if row.usable() && objective.better(&row, &best) {
                best = row;
            }
        }
    }
    best
}

/// Best ρ for each objective: coarse grid, then `refine_rounds` rounds of local halving.
pub fn optimize_rho(
    s: &Scheme,
    rho_min: f64,
    rho_max: f64,
    step: f64,
    refine_rounds: u32,
) -> Result<RhoOptimum> {
    let rhos = grid(rho_min, rho_max, step)?;
    let sweeper = Sweeper::new(s, rho_min)?;
    let rows: Vec<SweepRow> = rhos.par_iter().map(|&rho| sweeper.row(rho)).collect();
    let usable: Vec<&SweepRow> = rows.iter().filter(|r| r.usable()).collect();
    if usable.is_empty() {
        return Err(Error::Parameter(format!(
            "no convergent grid point in [{rho_min}, {rho_max}]"
        )));
    }
    let best = |objective: Objective| {
        let mut best = *usable[0];
        for row in &usable[1..] {
            if objective.better(row, &best) {
                best = **row;
            }
        }
        refine(&sweeper, objective, best, (rho_min, rho_max), step, refine_rounds)
    };
    let max_a = best(Objective::MaxA);
    let min_b = best(Objective::MinB);
    let mut min_ratio = best(Objective::MinRatio);
    // The ratio is constant between consecutive pair ratios, so ρ = b/a itself often ties.
    let self_consistent = snap(min_ratio.ratio);
    if (rho_min..=rho_max).contains(&self_consistent) {
        let row = sweeper.row(self_consistent);
        if row.usable() && Objective::MinRatio.better(&row, &min_ratio) {
            min_ratio = row;
        }
    }
    Ok(RhoOptimum { max_a, min_b, residual: (min_ratio.rho - min_ratio.ratio).abs(), min_ratio })
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rho", "a", "b", "ratio", "lambda1", "lambda2", "n_lower", "n_upper", "converges"])?;
    for r in rows {
        w.write_record([
            r.rho.to_string(),
            r.a.to_string(),
            r.b.to_string(),
            r.ratio.to_string(),
            r.lambda1.to_string(),
            r.lambda2.to_string(),
            r.n_lower.to_string(),
            r.n_upper.to_string(),
            r.converges.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
