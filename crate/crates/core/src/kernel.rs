//! Sieve-backed arithmetic functions: Λ, μ, ψ, T and π.
//!
//! [`SieveTables`] precomputes the von Mangoldt and Möbius functions up to a
//! fixed limit together with prefix tables for ψ, T and π, so that every
//! summatory query is a constant-time lookup. The tables are immutable after
//! construction and can be shared freely between threads.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default upper bound on the sieve limit.
pub const DEFAULT_SIEVE_CAP: u64 = 10_000_000;

/// Precomputed arithmetic-function tables for `1..=limit`.
///
/// Index 0 of every table is a placeholder so that `lambda[n]` is Λ(n).
#[derive(Debug, Clone)]
pub struct SieveTables {
    limit: u64,
    lambda: Vec<f64>,
    moebius: Vec<i8>,
    is_prime: Vec<bool>,
    psi_prefix: Vec<f64>,
    log_factorial: Vec<f64>,
    pi_prefix: Vec<u32>,
}

/// Builds the tables with the default capacity cap.
pub fn build_sieve(limit: u64) -> Result<SieveTables> {
    build_sieve_with_cap(limit, DEFAULT_SIEVE_CAP)
}

/// Builds the tables, refusing limits above `cap`.
pub fn build_sieve_with_cap(limit: u64, cap: u64) -> Result<SieveTables> {
    if limit == 0 || limit > cap || limit > u32::MAX as u64 {
        return Err(Error::Capacity {
            what: "sieve limit",
            requested: limit,
            cap: cap.min(u32::MAX as u64),
        });
    }
    let n = limit as usize;

    // Linear sieve: smallest prime factor and Möbius in one pass.
    let mut spf = vec![0u32; n + 1];
    let mut moebius = vec![0i8; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    moebius[1] = 1;
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            moebius[i] = -1;
            primes.push(i as u32);
        }
        let si = spf[i];
        for &p in &primes {
            let ip = i * p as usize;
            if p > si || ip > n {
                break;
            }
            spf[ip] = p;
            moebius[ip] = if p == si { 0 } else { -moebius[i] };
        }
    }

    let mut lambda = vec![0.0f64; n + 1];
    let mut is_prime = vec![false; n + 1];
    for &p in &primes {
        let p = p as usize;
        is_prime[p] = true;
        let lp = (p as f64).ln();
        let mut q = p;
        loop {
            lambda[q] = lp;
            match q.checked_mul(p) {
                Some(next) if next <= n => q = next,
                _ => break,
            }
        }
    }
    drop(spf);

    let mut psi_prefix = vec![0.0f64; n + 1];
    let mut log_factorial = vec![0.0f64; n + 1];
    let mut pi_prefix = vec![0u32; n + 1];
    for k in 1..=n {
        psi_prefix[k] = psi_prefix[k - 1] + lambda[k];
        log_factorial[k] = log_factorial[k - 1] + (k as f64).ln();
        pi_prefix[k] = pi_prefix[k - 1] + u32::from(is_prime[k]);
    }

    Ok(SieveTables {
        limit,
        lambda,
        moebius,
        is_prime,
        psi_prefix,
        log_factorial,
        pi_prefix,
    })
}

impl SieveTables {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Λ(n); zero outside `1..=limit`.
    pub fn lambda(&self, n: u64) -> f64 {
        self.lambda.get(n as usize).copied().unwrap_or(0.0)
    }

    /// μ(n) for `1 <= n <= limit`.
    pub fn moebius(&self, n: u64) -> i8 {
        if n == 0 {
            return 0;
        }
        self.moebius[n as usize]
    }

    pub fn is_prime(&self, n: u64) -> bool {
        self.is_prime.get(n as usize).copied().unwrap_or(false)
    }

    fn index(&self, x: f64) -> Result<usize> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::OutOfRange { x, limit: self.limit });
        }
        let n = x.floor();
        if n > self.limit as f64 {
            return Err(Error::OutOfRange { x, limit: self.limit });
        }
        Ok(n as usize)
    }

    /// ψ(x) = Σ_{n ≤ x} Λ(n).
    pub fn psi(&self, x: f64) -> Result<f64> {
        Ok(self.psi_prefix[self.index(x)?])
    }

    /// T(x) = ln(⌊x⌋!) from the prefix table.
    pub fn log_factorial(&self, x: f64) -> Result<f64> {
        Ok(self.log_factorial[self.index(x)?])
    }

    /// π(x), the number of primes not exceeding x.
    pub fn pi(&self, x: f64) -> Result<u64> {
        Ok(self.pi_prefix[self.index(x)?] as u64)
    }

    /// ψ(⌊n⌋) for an integer argument already known to be in range.
    #[inline]
    pub(crate) fn psi_int(&self, n: u64) -> f64 {
        self.psi_prefix[n as usize]
    }

    #[inline]
    pub(crate) fn t_int(&self, n: u64) -> f64 {
        self.log_factorial[n as usize]
    }

    pub(crate) fn ensure_covers(&self, x: u64) -> Result<()> {
        if x > self.limit {
            Err(Error::OutOfRange { x: x as f64, limit: self.limit })
        } else {
            Ok(())
        }
    }
}

/// ψ(x) evaluated from the tables.
pub fn psi(x: f64, tables: &SieveTables) -> Result<f64> {
    tables.psi(x)
}

/// π(x) evaluated from the tables.
pub fn pi_count(x: f64, tables: &SieveTables) -> Result<u64> {
    tables.pi(x)
}

/// T(x) = Σ_{n ≤ x} ln n, summed directly in increasing order.
pub fn chebyshev_t(x: f64) -> f64 {
    if x.is_nan() || x < 1.0 {
        return 0.0;
    }
    let n = x.floor() as u64;
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Maximum deviations of the two summatory convolution identities.
#[derive(Debug, Clone, Serialize)]
pub struct ConvolutionReport {
    pub limit: u64,
    /// max |T(x) − Σ_{k≤x} ψ(x/k)|
    pub t_identity_deviation: f64,
    /// max |ψ(x) − Σ_{k≤x} μ(k) T(x/k)|
    pub psi_identity_deviation: f64,
}

impl ConvolutionReport {
    pub fn within(&self, tol: f64) -> bool {
        self.t_identity_deviation <= tol && self.psi_identity_deviation <= tol
    }
}

/// Checks T = Σ ψ(x/k) and ψ = Σ μ(k) T(x/k) at every integer `x <= limit`.
pub fn check_convolution_identities(tables: &SieveTables, limit: u64) -> Result<ConvolutionReport> {
    tables.ensure_covers(limit)?;
    let mut t_dev = 0.0f64;
    let mut psi_dev = 0.0f64;
    for x in 1..=limit {
        // Σ_k ψ(⌊x/k⌋) grouped over runs of equal quotient.
        let mut sum_psi = 0.0;
        let mut k = 1;
        while k <= x {
            let q = x / k;
            let k_end = x / q;
            sum_psi += (k_end - k + 1) as f64 * tables.psi_int(q);
            k = k_end + 1;
        }
        t_dev = t_dev.max((tables.t_int(x) - sum_psi).abs());

        let mut sum_t = 0.0;
        for k in 1..=x {
            let mu = tables.moebius(k);
            if mu != 0 {
                sum_t += f64::from(mu) * tables.t_int(x / k);
            }
        }
        psi_dev = psi_dev.max((tables.psi_int(x) - sum_t).abs());
    }
    Ok(ConvolutionReport {
        limit,
        t_identity_deviation: t_dev,
        psi_identity_deviation: psi_dev,
    })
}

/// Compares ∏_{p^m ≤ x} p with lcm(1, …, x) exactly.
pub fn lcm_identity_check(x: u64) -> bool {
    let mut product = BigUint::from(1u32);
    for p in 2..=x {
        if !(2..p).take_while(|d| d * d <= p).all(|d| p % d != 0) {
            continue;
        }
        let mut q = p;
        while q <= x {
            product *= p;
            q *= p;
        }
    }
    let lcm = (1..=x).fold(BigUint::from(1u32), |acc, n| acc.lcm(&BigUint::from(n)));
    product == lcm
}

/// First x in `1..=limit` where the identity of [`lcm_identity_check`] fails,
/// maintaining both sides incrementally.
pub fn lcm_identity_first_failure(limit: u64) -> Option<u64> {
    let mut product = BigUint::from(1u32);
    let mut lcm = BigUint::from(1u32);
    for n in 2..=limit {
        // n = p^k contributes one more factor p.
        let p = (2..).take_while(|d| d * d <= n).find(|d| n % d == 0).unwrap_or(n);
        let mut q = n;
        while q % p == 0 {
            q /= p;
        }
        if q == 1 {
            product *= p;
        }
        let residue = (&lcm % n).to_u64().expect("residue below n");
        let g = residue.gcd(&n);
        lcm *= n / g;
        if product != lcm {
            return Some(n);
        }
    }
    None
}

/// The three quantities ψ(x) ≤ π(x) ln x ≤ ψ(x)/α + x^α ln x.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PsiPiBracket {
    pub x: f64,
    pub alpha: f64,
    pub psi: f64,
    pub pi_log: f64,
    pub upper: f64,
    pub holds: bool,
}

pub fn psi_pi_bracket(x: f64, alpha: f64, tables: &SieveTables) -> Result<PsiPiBracket> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if x.is_nan() || x <= 1.0 {
        return Err(Error::Parameter(format!("x must exceed 1, got {x}")));
    }
    let psi = tables.psi(x)?;
    let ln_x = x.ln();
    let pi_log = tables.pi(x)? as f64 * ln_x;
    let upper = psi / alpha + x.powf(alpha) * ln_x;
    // Equality ψ(x) = π(x) ln x is possible only in exact arithmetic; allow for rounding.
    let slack = 1e-9 * pi_log.max(1.0);
    Ok(PsiPiBracket {
        x,
        alpha,
        psi,
        pi_log,
        upper,
        holds: psi <= pi_log + slack && pi_log <= upper + slack,
    })
}
