//! Exact arbitrary-precision integers and rationals, plus the few helpers the
//! certified pipelines need: decimal-string (de)serialization, outward dyadic
//! rounding, and exact powers.
//!
//! Backed by GMP through `rug`. `rug::Rational` keeps the invariants the rest
//! of the crate relies on: canonical form (gcd 1, positive denominator) after
//! every operation, and exact add/mul/compare.

use crate::error::{Error, Result};
use rug::ops::Pow;
pub use rug::{Integer as BigInt, Rational as BigRational};

/// Parse an integer from a decimal-digit string.
pub fn int_from_str(s: &str) -> Result<BigInt> {
    BigInt::from_str_radix(s, 10).map_err(|e| Error::Malformed(format!("integer {s:?}: {e}")))
}

/// Parse a rational from a `"num/den"` (or plain `"num"`) decimal string.
pub fn rat_from_str(s: &str) -> Result<BigRational> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num = int_from_str(n.trim())?;
    let den = int_from_str(d.trim())?;
    if den == 0 {
        return Err(Error::Malformed(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::from((num, den)))
}

/// Render a rational as the exact `"num/den"` decimal string used by every
/// machine-readable output in this crate.
pub fn rat_to_str(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rat_from_i64(n: i64) -> BigRational {
    BigRational::from((n, 1))
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::from((n, d))
}

/// Exact `base^exp` for a non-negative integer exponent.
pub fn int_pow(base: &BigInt, exp: u32) -> BigInt {
    BigInt::from(base.pow(exp))
}

/// Exact `r^exp` for a signed integer exponent (errors on `0^negative`).
pub fn rat_pow(r: &BigRational, exp: i32) -> Result<BigRational> {
    if exp < 0 && *r == 0 {
        return Err(Error::Domain("0 raised to a negative power".into()));
    }
    Ok(BigRational::from(r.pow(exp)))
}

/// `floor(log2(n))` for a positive integer.
pub fn floor_log2(n: &BigInt) -> Result<i64> {
    if *n <= 0 {
        return Err(Error::Domain("floor_log2 of non-positive integer".into()));
    }
    Ok(n.significant_bits() as i64 - 1)
}

/// `floor(log2(r))` for a positive rational.
pub fn rat_floor_log2(r: &BigRational) -> Result<i64> {
    if *r <= 0 {
        return Err(Error::Domain("floor_log2 of non-positive rational".into()));
    }
    let ln = floor_log2(r.numer())?;
    let ld = floor_log2(r.denom())?;
    // numer/denom in [2^(ln-ld-1), 2^(ln-ld+1)); pin the floor exactly.
    let mut e = ln - ld;
    if pow2(e) > *r {
        e -= 1;
    } else if pow2(e + 1) <= *r {
        e += 1;
    }
    debug_assert!(pow2(e) <= *r && *r < pow2(e + 1));
    Ok(e)
}

/// Exact `2^e` as a rational for a signed exponent.
pub fn pow2(e: i64) -> BigRational {
    let mag = BigInt::from(1) << e.unsigned_abs() as u32;
    if e >= 0 {
        BigRational::from((mag, BigInt::from(1)))
    } else {
        BigRational::from((BigInt::from(1), mag))
    }
}

/// Round down to a dyadic rational with denominator `2^bits`.
pub fn dyadic_floor(r: &BigRational, bits: u32) -> BigRational {
    let fl = BigRational::from(r << bits).floor();
    BigRational::from((fl.into_numer_denom().0, (BigInt::from(1) << bits)))
}

/// Round up to a dyadic rational with denominator `2^bits`.
pub fn dyadic_ceil(r: &BigRational, bits: u32) -> BigRational {
    let scaled = BigRational::from(r << bits);
    let cl = scaled.ceil();
    BigRational::from((cl.into_numer_denom().0, (BigInt::from(1) << bits)))
}

/// Render a rational in decimal with `digits` fractional digits, rounding
/// toward zero. Only for human-readable summaries; machine outputs stay exact.
pub fn decimal_string(r: &BigRational, digits: u32) -> String {
    let neg = *r < 0;
    let abs = BigRational::from(r.abs_ref());
    let scale = BigInt::from(10).pow(digits);
    let scaled = (abs * BigRational::from((scale.clone(), BigInt::from(1)))).floor();
    let scaled_int = scaled.into_numer_denom().0;
    let (ip, fp) = scaled_int.div_rem_floor(scale);
    let frac = format!("{:0>width$}", fp.to_string(), width = digits as usize);
    format!("{}{}.{}", if neg { "-" } else { "" }, ip, frac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        let r = rat_from_str("-22/7").unwrap();
        assert_eq!(rat_to_str(&r), "-22/7");
        assert_eq!(rat_from_str("5").unwrap(), rat_from_i64(5));
        assert!(rat_from_str("1/0").is_err());
    }

    #[test]
    fn dyadic_rounding_brackets_value() {
        let r = rat(1, 3);
        let lo = dyadic_floor(&r, 16);
        let hi = dyadic_ceil(&r, 16);
        assert!(lo <= r && r <= hi);
        assert!(hi.clone() - lo.clone() <= pow2(-16));
        // exact dyadics are fixed points
        let d = rat(3, 8);
        assert_eq!(dyadic_floor(&d, 16), d);
        assert_eq!(dyadic_ceil(&d, 16), d);
    }

    #[test]
    fn floor_log2_exact_boundaries() {
        assert_eq!(rat_floor_log2(&rat(1, 1)).unwrap(), 0);
        assert_eq!(rat_floor_log2(&rat(1, 2)).unwrap(), -1);
        assert_eq!(rat_floor_log2(&rat(3, 1)).unwrap(), 1);
        assert_eq!(rat_floor_log2(&rat(1, 3)).unwrap(), -2);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&rat(22, 7), 4), "3.1428");
        assert_eq!(decimal_string(&rat(-1, 2), 3), "-0.500");
    }
}
