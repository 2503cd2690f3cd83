use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::LinalgError;

/// Arbitrary-precision rational number, always stored reduced (gcd of
/// numerator and denominator is 1, denominator positive, zero is 0/1).
pub type Rational = num_rational::BigRational;

/// Rational from a numerator/denominator pair of machine integers.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from a machine integer.
pub fn rat_int(num: i64) -> Rational {
    Rational::from_integer(BigInt::from(num))
}

/// Renders a rational as `"num"` for integers and `"num/den"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"num"` or `"num/den"` (optional leading sign on the numerator).
pub fn parse_rational(s: &str) -> Result<Rational, LinalgError> {
    let bad = || LinalgError::BadRational(s.to_string());
    let (num_str, den_str) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num: BigInt = num_str.trim().parse().map_err(|_| bad())?;
    let den: BigInt = den_str.trim().parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Least common multiple of two positive big integers.
pub(crate) fn lcm_big(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.lcm(b)
}

/// Exact big-integer division; the remainder is asserted to vanish, which is
/// guaranteed by the fraction-free invariant of the elimination.
pub(crate) fn exact_div(a: &BigInt, b: &BigInt) -> BigInt {
    debug_assert!(!b.is_zero());
    let (q, r) = num_integer::Integer::div_rem(a, b);
    debug_assert!(r.is_zero(), "non-exact division in fraction-free step");
    q
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_integer_and_fraction() {
        assert_eq!(format_rational(&rat_int(5)), "5");
        assert_eq!(format_rational(&rat(-3, 6)), "-1/2");
        assert_eq!(format_rational(&rat(0, 7)), "0");
    }

    #[test]
    fn parse_round_trips() {
        for s in ["0", "7", "-4", "2/3", "-22/7"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(format_rational(&r), s);
        }
        assert_eq!(parse_rational("4/6").unwrap(), rat(2, 3));
        assert_eq!(parse_rational(" 1 / 2 ").unwrap(), rat(1, 2));
    }

    #[test]
    fn parse_rejects_garbage() {
        for s in ["", "x", "1/0", "1/2/3", "1.5"] {
            assert!(parse_rational(s).is_err(), "accepted {s:?}");
        }
    }
}
