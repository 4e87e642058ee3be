//! Exact rational probabilities and the bridge between exact and floating values.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Probabilities are exact rationals.
pub type Prob = BigRational;

/// Parses `"p/q"` or a bare integer `"p"`.
pub fn parse_prob(s: &str) -> Result<Prob> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((num, den)) => {
            let num: BigInt = num
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("bad rational numerator in {s:?}")))?;
            let den: BigInt = den
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("bad rational denominator in {s:?}")))?;
            if den.is_zero() {
                return Err(Error::input(format!("zero denominator in {s:?}")));
            }
            BigRational::new(num, den)
        }
        None => BigRational::from_integer(
            s.parse()
                .map_err(|_| Error::input(format!("bad rational {s:?}")))?,
        ),
    };
    Ok(parsed)
}

/// Always `p/q` in lowest terms, including `1/1` and `0/1`.
pub fn format_prob(p: &Prob) -> String {
    format!("{}/{}", p.numer(), p.denom())
}

/// Exact rational value of a finite double.
pub fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("utility values are finite")
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

pub fn one() -> Prob {
    Prob::one()
}

pub fn zero() -> Prob {
    Prob::zero()
}

/// Ratio of two nonnegative rationals with the `0/0 = 1` convention.
/// Returns `None` when the ratio is infinite (positive numerator, zero denominator).
pub(crate) fn ratio_or_one(num: &BigRational, den: &BigRational) -> Option<BigRational> {
    match (num.is_zero(), den.is_zero()) {
        (true, true) => Some(one()),
        (false, true) => None,
        _ => Some(num / den),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        let p = parse_prob("2/4").unwrap();
        assert_eq!(format_prob(&p), "1/2");
        assert_eq!(format_prob(&parse_prob("1").unwrap()), "1/1");
        assert!(parse_prob("1/0").is_err());
        assert!(parse_prob("x/2").is_err());
    }

    #[test]
    fn exact_float_conversion_round_trips() {
        for v in [0.0, 0.1, 1.0 / 3.0, 7.25, 1e-300] {
            assert_eq!(to_f64(&exact(v)), v);
        }
    }

    #[test]
    fn zero_over_zero_is_one() {
        assert_eq!(ratio_or_one(&zero(), &zero()), Some(one()));
        assert_eq!(ratio_or_one(&one(), &zero()), None);
        assert_eq!(ratio_or_one(&zero(), &one()), Some(zero()));
    }
}
