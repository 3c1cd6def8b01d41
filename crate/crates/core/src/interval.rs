//! Certified real enclosures with exact rational endpoints.
//!
//! Every operation returns an interval guaranteed to contain the true value;
//! endpoints always round outward. Transcendental evaluations (`exp`, `ln`,
//! rational powers) take a precision budget in bits and return enclosures
//! whose own contribution to the width is at most `2^-budget`.
//!
//! No floating point anywhere: series are summed in exact rational
//! arithmetic with explicit remainder bounds, and working values are clamped
//! to dyadic rationals to keep operand sizes proportional to the budget.

use crate::error::{Error, Result};
use crate::rational::{
    dyadic_ceil, dyadic_floor, pow2, rat_floor_log2, rat_from_i64, rat_pow, BigInt, BigRational,
};
use rug::ops::DivRounding;
use std::cmp::Ordering;
use std::sync::Mutex;

/// Default precision budget, in bits, for certified evaluations.
pub const DEFAULT_BUDGET: u32 = 256;

/// Arguments to `exp` beyond this magnitude would materialize integers past
/// the exact-representation cap.
const MAX_EXP_ARG: i64 = 3_000_000;

/// A certified enclosure `[lo, hi]` of a real number.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalReal {
    lo: BigRational,
    hi: BigRational,
}

impl serde::Serialize for IntervalReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("IntervalReal", 2)?;
        st.serialize_field("lo", &crate::rational::rat_to_str(&self.lo))?;
        st.serialize_field("hi", &crate::rational::rat_to_str(&self.hi))?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for IntervalReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Dto {
            lo: String,
            hi: String,
        }
        let dto = Dto::deserialize(d)?;
        let lo = crate::rational::rat_from_str(&dto.lo).map_err(serde::de::Error::custom)?;
        let hi = crate::rational::rat_from_str(&dto.hi).map_err(serde::de::Error::custom)?;
        IntervalReal::new(lo, hi).map_err(serde::de::Error::custom)
    }
}

impl IntervalReal {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo > hi {
            return Err(Error::Domain("interval endpoints out of order".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(r: BigRational) -> Self {
        Self {
            lo: r.clone(),
            hi: r,
        }
    }

    pub fn from_i64(n: i64) -> Self {
        Self::point(rat_from_i64(n))
    }

    pub fn lower(&self) -> &BigRational {
        &self.lo
    }

    pub fn upper(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        BigRational::from(&self.hi - &self.lo)
    }

    pub fn midpoint(&self) -> BigRational {
        BigRational::from(&self.lo + &self.hi) / BigRational::from(2)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, r: &BigRational) -> bool {
        self.lo <= *r && *r <= self.hi
    }

    pub fn contains_interval(&self, other: &Self) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Total order against a rational, when the enclosure decides it.
    pub fn cmp_rational(&self, r: &BigRational) -> Option<Ordering> {
        if self.hi < *r {
            Some(Ordering::Less)
        } else if self.lo > *r {
            Some(Ordering::Greater)
        } else if self.lo == *r && self.hi == *r {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Order against another enclosure, when the two are disjoint.
    pub fn try_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.is_point() && other.is_point() && self.lo == other.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            lo: BigRational::from(&self.lo + &other.lo),
            hi: BigRational::from(&self.hi + &other.hi),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn add_rational(&self, r: &BigRational) -> Self {
        Self {
            lo: BigRational::from(&self.lo + r),
            hi: BigRational::from(&self.hi + r),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut candidates = [
            BigRational::from(&self.lo * &other.lo),
            BigRational::from(&self.lo * &other.hi),
            BigRational::from(&self.hi * &other.lo),
            BigRational::from(&self.hi * &other.hi),
        ];
        candidates.sort();
        let [lo, _, _, hi] = candidates;
        Self { lo, hi }
    }

    pub fn mul_rational(&self, r: &BigRational) -> Self {
        let a = BigRational::from(&self.lo * r);
        let b = BigRational::from(&self.hi * r);
        if *r >= 0 {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn abs(&self) -> Self {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            self.neg()
        } else {
            Self {
                lo: BigRational::new(),
                hi: std::cmp::max(
                    BigRational::from(self.hi.abs_ref()),
                    BigRational::from(self.lo.abs_ref()),
                ),
            }
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.lo <= 0 && self.hi >= 0 {
            return Err(Error::Domain(
                "reciprocal of interval containing zero".into(),
            ));
        }
        Ok(Self {
            lo: BigRational::from(self.hi.recip_ref()),
            hi: BigRational::from(self.lo.recip_ref()),
        })
    }

    /// Outward rounding to dyadic endpoints with `bits` fractional bits.
    pub fn round_out(&self, bits: u32) -> Self {
        Self {
            lo: dyadic_floor(&self.lo, bits),
            hi: dyadic_ceil(&self.hi, bits),
        }
    }

    /// Exact integer power for positive intervals (negative exponents allowed).
    pub fn pow_int(&self, exp: i32) -> Result<Self> {
        if exp == 0 {
            return Ok(Self::point(rat_from_i64(1)));
        }
        if self.lo <= 0 {
            return Err(Error::Domain("pow_int requires a positive interval".into()));
        }
        if exp > 0 {
            Ok(Self {
                lo: rat_pow(&self.lo, exp)?,
                hi: rat_pow(&self.hi, exp)?,
            })
        } else {
            Ok(Self {
                lo: rat_pow(&self.hi, exp)?,
                hi: rat_pow(&self.lo, exp)?,
            })
        }
    }

    /// Certified enclosure of `e^x`.
    ///
    /// For inputs contained in `(-inf, 0]` the result width is at most the
    /// input width plus `2^-budget` (the map is 1-Lipschitz there).
    pub fn exp(&self, budget: u32) -> Result<Self> {
        let (lo, _) = exp_point(&self.lo, budget + 2)?;
        let (_, hi) = exp_point(&self.hi, budget + 2)?;
        Ok(Self { lo, hi })
    }

    /// Certified enclosure of `ln(x)`; requires `lo > 0`.
    pub fn ln(&self, budget: u32) -> Result<Self> {
        if self.lo <= 0 {
            return Err(Error::Domain("log of non-positive enclosure".into()));
        }
        let (lo, _) = ln_point(&self.lo, budget + 2)?;
        let (_, hi) = ln_point(&self.hi, budget + 2)?;
        Ok(Self { lo, hi })
    }

    /// Certified enclosure of `x^alpha` for a positive interval and rational
    /// exponent. Exact when the exponent is an integer that fits `i32`.
    pub fn pow_rational(&self, alpha: &BigRational, budget: u32) -> Result<Self> {
        if alpha.is_integer() {
            if let Some(e) = alpha.numer().to_i32() {
                return self.pow_int(e);
            }
        }
        if self.lo <= 0 {
            return Err(Error::Domain(
                "rational power of non-positive interval".into(),
            ));
        }
        let ln = self.ln(budget + 8)?;
        ln.mul_rational(alpha).exp(budget)
    }

    /// Human-readable decimal rendering `[lo, hi]`; summaries only.
    pub fn decimal(&self, digits: u32) -> String {
        format!(
            "[{}, {}]",
            crate::rational::decimal_string(&self.lo, digits),
            crate::rational::decimal_string(&self.hi, digits)
        )
    }
}

/// Certified bounds `lo <= e^r <= hi` with `hi - lo <= 2^-budget` plus the
/// unavoidable magnitude scaling for large positive arguments.
pub fn exp_point(r: &BigRational, budget: u32) -> Result<(BigRational, BigRational)> {
    if *r == 0 {
        let one = rat_from_i64(1);
        return Ok((one.clone(), one));
    }
    let abs = BigRational::from(r.abs_ref());
    let mag = rat_floor_log2(&abs)?; // |r| in [2^mag, 2^(mag+1))
    if mag >= 0 && abs > rat_from_i64(MAX_EXP_ARG) {
        return Err(Error::Unmaterializable(format!(
            "exp argument magnitude 2^{mag} exceeds the materialization cap"
        )));
    }
    // Halve until |r| / 2^k <= 1/2.
    let k = (mag + 2).max(0) as u32;
    // Positive arguments inflate the integer part by ~1.5 bits per unit.
    let extra = if *r > 0 {
        let ceil_r = BigRational::from(r.ceil_ref())
            .into_numer_denom()
            .0
            .to_i64()
            .unwrap_or(MAX_EXP_ARG);
        ((3 * ceil_r) / 2 + 2) as u32
    } else {
        0
    };
    let p = budget + extra + 2 * k + 32;

    // Dyadic clamp of u = r / 2^k, then one exact Taylor sum with a tracked
    // remainder; the 2^-p clamp slack is absorbed multiplicatively.
    let u_exact = r / pow2(k as i64);
    let u = dyadic_floor(&u_exact, p);
    let (mut lo, mut hi) = exp_taylor_half(&u, p);
    // e^{u_exact} <= e^{u + 2^-p} <= e^u * (1 + 2^{1-p})
    hi *= rat_from_i64(1) + pow2(1 - p as i64);

    for _ in 0..k {
        lo = BigRational::from(&lo * &lo);
        hi = BigRational::from(&hi * &hi);
        lo = dyadic_floor(&lo, p);
        if lo < 0 {
            lo = BigRational::new();
        }
        hi = dyadic_ceil(&hi, p);
    }
    Ok((dyadic_floor(&lo, budget + 4), dyadic_ceil(&hi, budget + 4)))
}

/// Taylor enclosure of `e^u` for `|u| <= 1/2`, computed in fixed point at
/// `p + 24` fractional bits with explicit ulp error accounting.
///
/// Error model: each term is `T_j = trunc(T_{j-1} * U / (2^w * j))`, so
/// `|T_j - t_j 2^w| <= d_{j-1}/(2j) + 1 <= 2` once `d_0 = 1` (the clamp of
/// `u` itself); the sum accumulates at most `2` ulps per term and the
/// omitted tail is below `2 |t_{J+1}|`.
fn exp_taylor_half(u: &BigRational, p: u32) -> (BigRational, BigRational) {
    let w = p + 24;
    let scale = BigInt::from(1) << w;
    // u is already dyadic from the caller, but truncate defensively.
    let u_scaled = BigRational::from(u * &BigRational::from(scale.clone()));
    let u_int = BigRational::from(u_scaled.trunc_ref()).into_numer_denom().0;

    let mut sum = scale.clone();
    let mut term = scale.clone();
    let mut j: u32 = 0;
    let mut terms: u64 = 0;
    loop {
        j += 1;
        terms += 1;
        let prod = BigInt::from(&term * &u_int);
        let denom = BigInt::from(&scale * &BigInt::from(j));
        term = prod.div_trunc(denom);
        sum += &term;
        let mag = BigInt::from(term.abs_ref());
        if mag <= 4 {
            break;
        }
        if j > 4 * w {
            break; // unreachable for |u| <= 1/2; defensive cap
        }
    }
    // 2 ulps per computed term, tail below 2(|T_last|+2), plus slack.
    let err = BigInt::from(2 * terms + 16);
    let lo = BigRational::from((BigInt::from(&sum - &err), scale.clone()));
    let hi = BigRational::from((BigInt::from(&sum + &err), scale));
    (lo, hi)
}

/// Certified bounds `lo <= ln(r) <= hi` with `hi - lo <= 2^-budget`.
pub fn ln_point(r: &BigRational, budget: u32) -> Result<(BigRational, BigRational)> {
    if *r <= 0 {
        return Err(Error::Domain("log of non-positive value".into()));
    }
    let mut n = rat_floor_log2(r)?; // r in [2^n, 2^{n+1})
    let shift_bits = 64 - n.unsigned_abs().leading_zeros();
    let p = budget + shift_bits + 32;

    // Mantissa m = r / 2^n in [1, 2); shift into [3/4, 3/2).
    let mut m = r / pow2(n);
    if m >= (3, 2) {
        m /= rat_from_i64(2);
        n += 1;
    }
    let m_lo = dyadic_floor(&m, p);
    let m_hi = dyadic_ceil(&m, p);

    let (llo, _) = atanh_log(&m_lo, p);
    let (_, lhi) = atanh_log(&m_hi, p);
    let (ln2_lo, ln2_hi) = ln2_bounds(p);

    let (shift_lo, shift_hi) = if n >= 0 {
        (
            BigRational::from(&ln2_lo * &rat_from_i64(n)),
            BigRational::from(&ln2_hi * &rat_from_i64(n)),
        )
    } else {
        (
            BigRational::from(&ln2_hi * &rat_from_i64(n)),
            BigRational::from(&ln2_lo * &rat_from_i64(n)),
        )
    };
    Ok((
        dyadic_floor(&BigRational::from(&llo + &shift_lo), budget + 4),
        dyadic_ceil(&BigRational::from(&lhi + &shift_hi), budget + 4),
    ))
}

/// Fixed-point `atanh(z) = z + z^3/3 + z^5/5 + ...` for `|z| <= 2/5`,
/// taking `z` pre-scaled by `2^w` (with at most `z_ulp_err` ulps of input
/// error). Returns `(sum_scaled, err_ulps)` at the same scale.
///
/// Error model: odd powers obey `d_j <= d_{j-1} z^2 + |w_{j-1}| dZ2 / 2^w + 1`,
/// which stays below `z_ulp_err + 3` for `|z| <= 2/5`; each term division
/// adds one more ulp, and the omitted tail is below `|T_last| z^2 / (1-z^2)
/// <= |T_last|`.
fn atanh_fixed(z_scaled: &BigInt, z_ulp_err: u64, w: u32) -> (BigInt, BigInt) {
    let scale = BigInt::from(1) << w;
    let z2 = {
        let sq = BigInt::from(z_scaled * z_scaled);
        sq.div_trunc(scale.clone())
    };
    let mut sum = z_scaled.clone();
    let mut zpow = z_scaled.clone();
    let mut j: u32 = 0;
    let mut terms: u64 = 0;
    loop {
        j += 1;
        terms += 1;
        let prod = BigInt::from(&zpow * &z2);
        zpow = prod.div_trunc(scale.clone());
        let term = BigInt::from(&zpow).div_trunc(BigInt::from(2 * j + 1));
        sum += &term;
        if BigInt::from(term.abs_ref()) <= 4 {
            break;
        }
        if j > 4 * w {
            break; // unreachable for |z| <= 2/5; defensive cap
        }
    }
    let err = BigInt::from((z_ulp_err + 5) * terms + 16);
    (sum, err)
}

/// `ln(m)` for `m` in `[3/4, 3/2]` via `2 atanh((m-1)/(m+1))`; `|z| <= 1/5`.
fn atanh_log(m: &BigRational, p: u32) -> (BigRational, BigRational) {
    let w = p + 24;
    let scale = BigInt::from(1) << w;
    let num = BigRational::from(m - &rat_from_i64(1));
    let den = BigRational::from(m + &rat_from_i64(1));
    let z = num / den;
    let z_scaled = BigRational::from(&z * &BigRational::from(scale.clone()));
    let z_int = BigRational::from(z_scaled.trunc_ref()).into_numer_denom().0;
    let (sum, err) = atanh_fixed(&z_int, 1, w);
    let two = BigInt::from(2);
    let lo = BigRational::from((
        BigInt::from(&two * &BigInt::from(&sum - &err)),
        scale.clone(),
    ));
    let hi = BigRational::from((BigInt::from(&two * &BigInt::from(&sum + &err)), scale));
    (lo, hi)
}

// Keyed by the exact precision so the returned bounds depend only on `p`,
// never on which precisions earlier callers happened to request; certificate
// verification relies on bit-identical re-derivation.
static LN2_CACHE: Mutex<Option<std::collections::BTreeMap<u32, (BigRational, BigRational)>>> =
    Mutex::new(None);

/// Cached certified bounds on `ln 2 = 2 atanh(1/3)`.
pub fn ln2_bounds(p: u32) -> (BigRational, BigRational) {
    let mut guard = LN2_CACHE.lock().unwrap();
    let cache = guard.get_or_insert_with(std::collections::BTreeMap::new);
    if let Some((lo, hi)) = cache.get(&p) {
        return (lo.clone(), hi.clone());
    }
    // ln 2 = 2 atanh(1/3): run the fixed-point series with a 1-ulp clamp of
    // the irrational-scale input 1/3.
    let w = p + 24;
    let scale = BigInt::from(1) << w;
    let z_int = scale.clone().div_trunc(BigInt::from(3));
    let (sum, err) = atanh_fixed(&z_int, 1, w);
    let two = BigInt::from(2);
    let lo = BigRational::from((
        BigInt::from(&two * &BigInt::from(&sum - &err)),
        scale.clone(),
    ));
    let hi = BigRational::from((BigInt::from(&two * &BigInt::from(&sum + &err)), scale));
    let lo = dyadic_floor(&lo, p);
    let hi = dyadic_ceil(&hi, p);
    cache.insert(p, (lo.clone(), hi.clone()));
    if cache.len() > 64 {
        // distinct budgets are few in practice; guard against unbounded growth
        let first = *cache.keys().next().expect("nonempty");
        cache.remove(&first);
    }
    (lo, hi)
}

/// Smallest integer strictly greater than every point of the enclosure, when
/// decided (used for certified floors/thresholds).
pub fn strict_integer_above(x: &IntervalReal) -> Result<BigInt> {
    let f_lo = BigRational::from(x.lower().floor_ref());
    let f_hi = BigRational::from(x.upper().floor_ref());
    if f_lo != f_hi {
        return Err(Error::AmbiguousEnclosure(
            "enclosure straddles an integer boundary".into(),
        ));
    }
    Ok(f_hi.into_numer_denom().0 + 1u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_from_str};

    fn budget_width(b: u32) -> BigRational {
        pow2(-(b as i64))
    }

    #[test]
    fn exp_of_zero_is_tight_around_one() {
        let e = IntervalReal::point(BigRational::new()).exp(128).unwrap();
        assert!(e.contains(&rat_from_i64(1)));
        assert!(e.width() <= budget_width(128));
    }

    #[test]
    fn exp_known_value() {
        // e^1 = 2.718281828459045235360287...
        let e = IntervalReal::from_i64(1).exp(200).unwrap();
        let lo = rat_from_str("27182818284590452353/10000000000000000000").unwrap();
        let hi = rat_from_str("27182818284590452354/10000000000000000000").unwrap();
        assert!(e.lower() >= &lo && e.upper() <= &hi);
    }

    #[test]
    fn exp_large_positive() {
        // e^27 = 532048240601.7986166837473...
        let e = IntervalReal::from_i64(27).exp(128).unwrap();
        let lo = rat_from_str("5320482406017986166837/10000000000").unwrap();
        let hi = rat_from_str("5320482406017986166838/10000000000").unwrap();
        assert!(e.lower() >= &lo && e.upper() <= &hi);
    }

    #[test]
    fn ln_known_value() {
        // ln 2 = 0.693147180559945309417232...
        let l = IntervalReal::from_i64(2).ln(200).unwrap();
        let lo = rat_from_str("693147180559945309417/1000000000000000000000").unwrap();
        let hi = rat_from_str("693147180559945309418/1000000000000000000000").unwrap();
        assert!(l.lower() >= &lo && l.upper() <= &hi);
        assert!(l.width() <= budget_width(200));
    }

    #[test]
    fn ln_of_small_fraction() {
        // ln(2/27) = -2.6026896854443837647685...
        let l = IntervalReal::point(rat(2, 27)).ln(160).unwrap();
        let lo = rat_from_str("-26026896854443837648/10000000000000000000").unwrap();
        let hi = rat_from_str("-26026896854443837647/10000000000000000000").unwrap();
        assert!(l.lower() >= &lo && l.upper() <= &hi);
    }

    #[test]
    fn exp_lipschitz_on_nonpositive() {
        let x = IntervalReal::new(rat(-3, 2), rat(-1, 4)).unwrap();
        let e = x.exp(96).unwrap();
        assert!(e.width() <= x.width() + budget_width(96));
        // e^{-1/4} = 0.77880078307140486824..., e^{-3/2} = 0.22313016014842982893...
        assert!(e.upper() >= &rat_from_str("7788007830714048682/10000000000000000000").unwrap());
        assert!(e.upper() <= &rat_from_str("7788007830714048683/10000000000000000000").unwrap());
        assert!(e.lower() >= &rat_from_str("2231301601484298289/10000000000000000000").unwrap());
        assert!(e.lower() <= &rat_from_str("2231301601484298290/10000000000000000000").unwrap());
    }

    #[test]
    fn ln_exp_round_trip_encloses_input() {
        let r = rat(7, 5);
        let back = IntervalReal::point(r.clone())
            .ln(128)
            .unwrap()
            .exp(128)
            .unwrap();
        assert!(back.contains(&r));
        assert!(back.width() <= budget_width(120));
    }

    #[test]
    fn pow_rational_square_root() {
        // 2^(1/2) = 1.4142135623730950488016887...
        let s = IntervalReal::from_i64(2)
            .pow_rational(&rat(1, 2), 160)
            .unwrap();
        let lo = rat_from_str("14142135623730950488016/10000000000000000000000").unwrap();
        let hi = rat_from_str("14142135623730950488017/10000000000000000000000").unwrap();
        assert!(s.lower() >= &lo && s.upper() <= &hi);
    }

    #[test]
    fn pow_int_negative_exponent() {
        let x = IntervalReal::new(rat(2, 1), rat(3, 1)).unwrap();
        let p = x.pow_int(-2).unwrap();
        assert_eq!(p.lower(), &rat(1, 9));
        assert_eq!(p.upper(), &rat(1, 4));
    }

    #[test]
    fn interval_multiplication_signs() {
        let a = IntervalReal::new(rat(-2, 1), rat(3, 1)).unwrap();
        let b = IntervalReal::new(rat(-5, 1), rat(1, 1)).unwrap();
        let m = a.mul(&b);
        assert_eq!(m.lower(), &rat(-15, 1));
        assert_eq!(m.upper(), &rat(10, 1));
    }

    #[test]
    fn exp_of_huge_argument_is_refused() {
        let err = IntervalReal::from_i64(100_000_000).exp(64);
        assert!(matches!(err, Err(Error::Unmaterializable(_))));
    }
}
