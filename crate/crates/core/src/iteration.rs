//! The affine recurrence on bound constants and its fixed point.
//!
//! With a lower selection (pairs (m, n), standalones u) and an upper selection
//! (pairs (m', n'), standalones v) the constants (aᵢ, bᵢ) of
//! aᵢx ≲ ψ(x) ≲ bᵢx improve as
//!
//! ```text
//! a_{i+1} = A_up + (Σ 1/m')·aᵢ − (Σ 1/n' + Σ 1/v)·bᵢ
//! b_{i+1} = N/(N−1)·[A_lo − (Σ 1/m)·aᵢ + (Σ 1/n + Σ 1/u)·bᵢ]
//! ```

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::selection::{selection_coefficients, Side, TermSelection};

/// (a, b) ↦ c + M·(a, b) with exact matrix entries.
#[derive(Debug, Clone, Serialize)]
pub struct AffineRecurrence {
    #[serde(serialize_with = "rational::serialize")]
    pub m11: Rational,
    #[serde(serialize_with = "rational::serialize")]
    pub m12: Rational,
    #[serde(serialize_with = "rational::serialize")]
    pub m21: Rational,
    #[serde(serialize_with = "rational::serialize")]
    pub m22: Rational,
    pub c1: f64,
    pub c2: f64,
    /// Telescoping index N of the lower scheme.
    pub n: u64,
    #[serde(serialize_with = "rational::serialize")]
    pub telescoping: Rational,
    /// A of the scheme behind each update.
    pub a_upper: f64,
    pub a_lower: f64,
    /// Both updates come from one scheme, so the fixed point is A times an exact rational.
    pub single_scheme: bool,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub upper_rho: f64,
    pub lower_rho: f64,
    pub upper_terms: usize,
    pub lower_terms: usize,
}

fn assemble(
    upper: &TermSelection,
    a_upper: f64,
    lower: &TermSelection,
    a_lower: f64,
    n: u64,
    single_scheme: bool,
) -> Result<AffineRecurrence> {
    if upper.side != Side::Upper || lower.side != Side::Lower {
        return Err(Error::Parameter(format!(
            "expected an upper and a lower selection, got {} and {}",
            upper.side, lower.side
        )));
    }
    if n < 2 {
        return Err(Error::Parameter(format!("telescoping index N = {n} must be at least 2")));
    }
    let up = selection_coefficients(upper);
    let lo = selection_coefficients(lower);
    let telescoping = rational::frac(n as i64, n as i64 - 1);
    Ok(AffineRecurrence {
        m11: up.coef_a,
        m12: -up.coef_b,
        m21: -(&telescoping * &lo.coef_a),
        m22: &telescoping * &lo.coef_b,
        c1: a_upper,
        c2: rational::to_f64(&telescoping) * a_lower,
        n,
        telescoping,
        a_upper,
        a_lower,
        single_scheme,
        provenance: Provenance {
            upper_rho: upper.rho,
            lower_rho: lower.rho,
            upper_terms: upper.term_count(),
            lower_terms: lower.term_count(),
        },
    })
}

/// Recurrence from both selections of one scheme with constant `a` and index `n`.
pub fn build_recurrence(lower: &TermSelection, upper: &TermSelection, a: f64, n: u64) -> Result<AffineRecurrence> {
    assemble(upper, a, lower, a, n, true)
}

/// a-update from scheme X's upper selection, b-update from scheme Y's lower selection.
pub fn hybrid_recurrence(
    upper: &TermSelection,
    a_upper: f64,
    lower: &TermSelection,
    a_lower: f64,
    n_lower: u64,
) -> Result<AffineRecurrence> {
    assemble(upper, a_upper, lower, a_lower, n_lower, false)
}

impl AffineRecurrence {
    pub fn matrix_f64(&self) -> [[f64; 2]; 2] {
        [
            [rational::to_f64(&self.m11), rational::to_f64(&self.m12)],
            [rational::to_f64(&self.m21), rational::to_f64(&self.m22)],
        ]
    }

    /// One step of the recurrence.
    pub fn step(&self, a: f64, b: f64) -> (f64, f64) {
        let m = self.matrix_f64();
        (self.c1 + m[0][0] * a + m[0][1] * b, self.c2 + m[1][0] * a + m[1][1] * b)
    }

    /// One step in units of A, exactly: (α, β) ↦ (1, N/(N−1)) + M(α, β).
    pub fn step_exact(&self, alpha: &Rational, beta: &Rational) -> (Rational, Rational) {
        (
            Rational::one() + &self.m11 * alpha + &self.m12 * beta,
            &self.telescoping + &self.m21 * alpha + &self.m22 * beta,
        )
    }
}

/// Eigenvalues of M for reporting, plus the exact stability verdict.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Convergence {
    /// Ascending for real eigenvalues; both equal to the modulus for a complex pair.
    pub lambda1: f64,
    pub lambda2: f64,
    pub complex: bool,
    pub spectral_radius: f64,
    pub converges: bool,
}

/// Spectral radius < 1 iff |det M| < 1 and |tr M| < 1 + det M, checked exactly.
pub fn convergence(rec: &AffineRecurrence) -> Convergence {
    let tr = &rec.m11 + &rec.m22;
    let det = &rec.m11 * &rec.m22 - &rec.m12 * &rec.m21;
    let one = Rational::one();
    let converges = det.abs() < one && tr.abs() < &one + &det;

    Convergence { converges, ..eigen_from_trace_det(rational::to_f64(&tr), rational::to_f64(&det)) }
}

/// Eigenvalues of a real 2×2 matrix from its trace and determinant; `converges` is the float verdict.
pub(crate) fn eigen_from_trace_det(t: f64, d: f64) -> Convergence {
    let disc = t * t - 4.0 * d;
    let (lambda1, lambda2, complex) = if disc >= 0.0 {
        let s = disc.sqrt();
        // Avoid cancellation in the smaller root.
        let big = if t >= 0.0 { (t + s) / 2.0 } else { (t - s) / 2.0 };
        let small = if big != 0.0 { d / big } else { 0.0 };
        (big.min(small), big.max(small), false)
    } else {
        let modulus = d.sqrt();
        (modulus, modulus, true)
    };
    let spectral_radius = lambda1.abs().max(lambda2.abs());
    Convergence { lambda1, lambda2, complex, spectral_radius, converges: spectral_radius < 1.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub i: usize,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationResult {
    #[serde(serialize_with = "rational::serialize_opt")]
    pub alpha: Option<Rational>,
    #[serde(serialize_with = "rational::serialize_opt")]
    pub beta: Option<Rational>,
    pub a: f64,
    pub b: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub complex: bool,
    pub converges: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceRow>>,
}

/// Solves (I − M)(a, b)ᵀ = c; exactly in units of A for single-scheme recurrences.
pub fn fixed_point(rec: &AffineRecurrence) -> Result<IterationResult> {
    let one = Rational::one();
    let i11 = &one - &rec.m11;
    let i22 = &one - &rec.m22;
    let det = &i11 * &i22 - &rec.m12 * &rec.m21;
    if det.is_zero() {
        return Err(Error::Singular);
    }
    let conv = convergence(rec);
    let (alpha, beta, a, b) = if rec.single_scheme {
        let alpha = (&i22 + &rec.m12 * &rec.telescoping) / &det;
        let beta = (&rec.m21 + &i11 * &rec.telescoping) / &det;
        let a = rational::to_f64(&alpha) * rec.a_upper;
        let b = rational::to_f64(&beta) * rec.a_upper;
        (Some(alpha), Some(beta), a, b)
    } else {
        let d = rational::to_f64(&det);
        let m = rec.matrix_f64();
        let (i11, i22) = (1.0 - m[0][0], 1.0 - m[1][1]);
        let a = (i22 * rec.c1 + m[0][1] * rec.c2) / d;
        let b = (m[1][0] * rec.c1 + i11 * rec.c2) / d;
        (None, None, a, b)
    };
    Ok(IterationResult {
        alpha,
        beta,
        a,
        b,
        lambda1: conv.lambda1,
        lambda2: conv.lambda2,
        complex: conv.complex,
        converges: conv.converges,
        trace: None,
    })
}

/// (i, aᵢ, bᵢ) for i = 0..=steps.
pub fn iterate(rec: &AffineRecurrence, a0: f64, b0: f64, steps: usize) -> Vec<TraceRow> {
    let mut out = Vec::with_capacity(steps + 1);
    let (mut a, mut b) = (a0, b0);
    out.push(TraceRow { i: 0, a, b });
    for i in 1..=steps {
        (a, b) = rec.step(a, b);
        out.push(TraceRow { i, a, b });
    }
    out
}

pub fn write_trace_csv<W: std::io::Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "a_i", "b_i"])?;
    for row in trace {
        w.write_record([row.i.to_string(), row.a.to_string(), row.b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
