//! Exact rational helpers shared by the scheme and iteration modules.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serializer;

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn recip(n: u64) -> Rational {
    Rational::new(BigInt::from(1), BigInt::from(n))
}

/// Nearest `f64`; falls back to a scaled division for huge numerators and denominators.
pub fn to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let (n, d) = (r.numer(), r.denom());
    let shift = n.bits().max(d.bits()).saturating_sub(1000);
    let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// "numerator/denominator" in lowest terms, "0" for zero and "n" for integers.
pub fn render(r: &Rational) -> String {
    if r.is_zero() {
        "0".to_string()
    } else if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Renders each value as "n/d" over the least common denominator of all of them.
pub fn render_common(values: &[&Rational]) -> Vec<String> {
    let den = values
        .iter()
        .fold(BigInt::from(1), |acc, r| num_integer::Integer::lcm(&acc, r.denom()));
    values
        .iter()
        .map(|r| {
            if den == BigInt::from(1) {
                render(r)
            } else {
                format!("{}/{}", r.numer() * (&den / r.denom()), den)
            }
        })
        .collect()
}

pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&render(r))
}

pub fn serialize_opt<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&render(r)),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering() {
        assert_eq!(render(&frac(4242, 5391)), "1414/1797");
        assert_eq!(render(&int(-3)), "-3");
        assert_eq!(render(&Rational::zero()), "0");
        assert_eq!(
            render_common(&[&frac(4242, 5391), &frac(6380, 5391)]),
            vec!["4242/5391", "6380/5391"]
        );
        assert_eq!(render_common(&[&int(1), &int(2)]), vec!["1", "2"]);
    }

    #[test]
    fn huge_values_convert() {
        let big = Rational::new(BigInt::from(3) << 2000u32, BigInt::from(2) << 2000u32);
        assert_eq!(to_f64(&big), 1.5);
    }
}
