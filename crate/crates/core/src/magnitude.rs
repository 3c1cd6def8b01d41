//! Iterated-exponent magnitudes: non-negative bounds like `3 * 3^-(3^7625597484987)`
//! that stay comparable without materializing the underlying integers.
//!
//! A magnitude is `mantissa * base^(sign * exponent)` where the exponent is
//! itself a magnitude one level down; level 0 is a plain exact rational.
//! Quantities small enough to materialize exactly (at most `cap` bits) are
//! folded to level 0 at construction, so level escalation happens only when
//! exact representation is impossible.
//!
//! Comparison is exact at level 0 and between structurally aligned towers;
//! everything else lowers one step to certified rational enclosures of
//! logarithms. Overlapping enclosures surface as an explicit error rather
//! than a guess.

use crate::error::{Error, Result};
use crate::interval::{ln_point, IntervalReal};
use crate::rational::{int_pow, rat_from_str, rat_to_str, BigInt, BigRational};
use rug::ops::Pow;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Default materialization cap: integers up to `2^22` bits stay exact.
pub const DEFAULT_CAP_BITS: u64 = 1 << 22;

/// Clamp for one-sided rational bounds on unmaterializable towers.
const CLAMP_BITS: u32 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpSign {
    Neg,
    Pos,
}

/// The base whose logarithm weights the exponent: `e` or an integer >= 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagBase {
    Natural,
    Int(u32),
}

#[derive(Debug, Clone, PartialEq)]
struct PowerPart {
    base: MagBase,
    sign: ExpSign,
    exponent: Box<Magnitude>,
}

/// A non-negative extended-precision bound in tower form.
#[derive(Debug, Clone, PartialEq)]
pub struct Magnitude {
    mantissa: BigRational,
    power: Option<PowerPart>,
}

impl Magnitude {
    pub fn zero() -> Self {
        Self {
            mantissa: BigRational::new(),
            power: None,
        }
    }

    pub fn one() -> Self {
        Self {
            mantissa: BigRational::from(1),
            power: None,
        }
    }

    pub fn from_rational(r: BigRational) -> Result<Self> {
        if r < 0 {
            return Err(Error::Domain("magnitudes are non-negative".into()));
        }
        Ok(Self {
            mantissa: r,
            power: None,
        })
    }

    pub fn from_int(n: u64) -> Self {
        Self {
            mantissa: BigRational::from(n),
            power: None,
        }
    }

    /// `base^exp` for an integer exponent; exact at level 0 whenever the
    /// materialized integer fits `cap_bits`.
    pub fn from_power_int(base: u32, exp: i64, cap_bits: u64) -> Result<Self> {
        let sign = if exp < 0 { ExpSign::Neg } else { ExpSign::Pos };
        let mag = Self::from_int(exp.unsigned_abs());
        Self::from_power(MagBase::Int(base), sign, mag, cap_bits)
    }

    /// `base^(sign * exponent)` for a magnitude-valued exponent.
    pub fn from_power(
        base: MagBase,
        sign: ExpSign,
        exponent: Magnitude,
        cap_bits: u64,
    ) -> Result<Self> {
        if let MagBase::Int(b) = base {
            if b < 2 {
                return Err(Error::Domain("power base must be >= 2".into()));
            }
        }
        if exponent.is_zero() {
            return Ok(Self::one());
        }
        // Fold to level 0 when the base is an integer and the exponent is a
        // small exact integer.
        if let (MagBase::Int(b), Some(e)) = (base, exponent.as_exact_rational()) {
            if e.is_integer() {
                if let Some(e_u) = e.numer().to_u64() {
                    if e_u.saturating_mul(base_bits(b)) <= cap_bits {
                        let p = int_pow(&BigInt::from(b), e_u as u32);
                        let r = match sign {
                            ExpSign::Pos => BigRational::from(p),
                            ExpSign::Neg => BigRational::from((BigInt::from(1), p)),
                        };
                        return Ok(Self {
                            mantissa: r,
                            power: None,
                        });
                    }
                }
            }
        }
        Ok(Self {
            mantissa: BigRational::from(1),
            power: Some(PowerPart {
                base,
                sign,
                exponent: Box::new(exponent),
            }),
        })
    }

    /// Fold integer powers of the base out of the mantissa into a level-0
    /// exponent, so equal values share one tower shape (`3 * 3^-e` becomes
    /// `3^-(e-1)`).
    fn canonicalize(self, cap_bits: u64) -> Self {
        let p = match &self.power {
            Some(p) => p,
            None => return self,
        };
        let b = match p.base {
            MagBase::Int(b) => b,
            MagBase::Natural => return self,
        };
        let e = match p.exponent.as_exact_rational() {
            Some(e) => e.clone(),
            None => return self,
        };
        let factor = BigInt::from(b);
        let mut num = self.mantissa.numer().clone();
        let mut den = self.mantissa.denom().clone();
        let k_num = num.remove_factor_mut(&factor);
        let k_den = den.remove_factor_mut(&factor);
        if k_num == 0 && k_den == 0 {
            return self;
        }
        let shift = BigRational::from(i64::from(k_num) - i64::from(k_den));
        let signed_e = match p.sign {
            ExpSign::Pos => BigRational::from(&e + &shift),
            ExpSign::Neg => BigRational::from(&shift - &e),
        };
        let mantissa = BigRational::from((num, den));
        let (sign, mag) = if signed_e >= 0 {
            (ExpSign::Pos, signed_e)
        } else {
            (ExpSign::Neg, BigRational::from(signed_e.abs_ref()))
        };
        let exponent = Magnitude {
            mantissa: mag,
            power: None,
        };
        match Self::from_power(MagBase::Int(b), sign, exponent, cap_bits) {
            Ok(pw) => match pw.mul_rational(&mantissa) {
                Ok(m) => m,
                Err(_) => self,
            },
            Err(_) => self,
        }
    }

    /// `e^(sign * exponent)`.
    pub fn exp_of(sign: ExpSign, exponent: Magnitude) -> Self {
        if exponent.is_zero() {
            return Self::one();
        }
        Self {
            mantissa: BigRational::from(1),
            power: Some(PowerPart {
                base: MagBase::Natural,
                sign,
                exponent: Box::new(exponent),
            }),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.power.is_none() && self.mantissa == 0
    }

    /// Tower depth: 0 for exact rationals.
    pub fn level(&self) -> u32 {
        match &self.power {
            None => 0,
            Some(p) => 1 + p.exponent.level(),
        }
    }

    /// The exact rational value, if this is a level-0 magnitude.
    pub fn as_exact_rational(&self) -> Option<&BigRational> {
        match self.power {
            None => Some(&self.mantissa),
            Some(_) => None,
        }
    }

    /// Exact scaling by a non-negative rational.
    pub fn mul_rational(&self, r: &BigRational) -> Result<Self> {
        if *r < 0 {
            return Err(Error::Domain("magnitudes are non-negative".into()));
        }
        if *r == 0 || self.is_zero() {
            return Ok(Self::zero());
        }
        let scaled = Self {
            mantissa: BigRational::from(&self.mantissa * r),
            power: self.power.clone(),
        };
        Ok(scaled.canonicalize(DEFAULT_CAP_BITS))
    }

    /// Exact product, when one exists in tower form: level-0 factors fold into
    /// the mantissa; same-base powers add exponents when that sum is exact.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        match (&self.power, &other.power) {
            (None, _) => other.mul_rational(&self.mantissa),
            (_, None) => self.mul_rational(&other.mantissa),
            (Some(a), Some(b)) => {
                if a.base != b.base {
                    return Err(Error::Domain(
                        "no exact product of powers with different bases".into(),
                    ));
                }
                let mantissa = BigRational::from(&self.mantissa * &other.mantissa);
                let (sign, exponent) = signed_exponent_sum(a, b)?;
                match exponent {
                    None => Ok(Self {
                        mantissa,
                        power: None,
                    }),
                    Some(e) => {
                        Self::from_power(a.base, sign, e, DEFAULT_CAP_BITS)?.mul_rational(&mantissa)
                    }
                }
            }
        }
    }

    /// Certified upper bound on the sum: exact where tower forms align,
    /// otherwise twice the larger term.
    pub fn add_upper(&self, other: &Self, budget: u32) -> Result<Self> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        match (&self.power, &other.power) {
            (None, None) => Ok(Self {
                mantissa: BigRational::from(&self.mantissa + &other.mantissa),
                power: None,
            }),
            (Some(a), Some(b))
                if a.base == b.base && a.sign == b.sign && a.exponent == b.exponent =>
            {
                Ok(Self {
                    mantissa: BigRational::from(&self.mantissa + &other.mantissa),
                    power: self.power.clone(),
                })
            }
            _ => {
                let bigger = match self.compare(other, budget)? {
                    Ordering::Less => other,
                    _ => self,
                };
                bigger.mul_rational(&BigRational::from(2))
            }
        }
    }

    /// Total order over magnitudes. Exact whenever both sides are level 0 or
    /// the towers align structurally; otherwise decided through certified
    /// log enclosures at `budget` bits, erring on overlap.
    pub fn compare(&self, other: &Self, budget: u32) -> Result<Ordering> {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ok(Ordering::Equal),
            (true, false) => return Ok(Ordering::Less),
            (false, true) => return Ok(Ordering::Greater),
            _ => {}
        }
        match (&self.power, &other.power) {
            (None, None) => Ok(self.mantissa.cmp(&other.mantissa)),
            (Some(a), Some(b)) if a.base == b.base && a.sign == b.sign => {
                // Structural fast paths before falling back to logs.
                if a.exponent == b.exponent {
                    return Ok(self.mantissa.cmp(&other.mantissa));
                }
                if let Ok(ec) = a.exponent.compare(&b.exponent, budget) {
                    let mc = self.mantissa.cmp(&other.mantissa);
                    let ec_value = match a.sign {
                        ExpSign::Pos => ec,
                        ExpSign::Neg => ec.reverse(),
                    };
                    match (ec_value, mc) {
                        (Ordering::Equal, m) => return Ok(m),
                        (Ordering::Greater, Ordering::Greater | Ordering::Equal) => {
                            return Ok(Ordering::Greater)
                        }
                        (Ordering::Less, Ordering::Less | Ordering::Equal) => {
                            return Ok(Ordering::Less)
                        }
                        _ => {} // crossed; decide via logs
                    }
                }
                self.compare_via_logs(other, budget)
            }
            _ => self.compare_via_logs(other, budget),
        }
    }

    fn compare_via_logs(&self, other: &Self, budget: u32) -> Result<Ordering> {
        for attempt in 0..3 {
            let bits = budget << attempt;
            let la = self.ln_bounds(bits)?;
            let lb = other.ln_bounds(bits)?;
            if let Some(o) = cmp_ln_bounds(&la, &lb) {
                return Ok(o);
            }
        }
        Err(Error::IncomparableEnclosure)
    }

    /// `true` iff `self <= q^(-n)`, decided in exponent space when the power
    /// cannot be materialized.
    pub fn leq_power(&self, q: &Self, n: u64, budget: u32) -> Result<bool> {
        if self.is_zero() {
            return Ok(true);
        }
        match q.compare(&Self::one(), budget)? {
            Ordering::Greater => {}
            _ => return Err(Error::Domain("leq_power requires q > 1".into())),
        }
        // Exact route: materialize q^n when small enough.
        if let (None, Some(qr)) = (&self.power, q.as_exact_rational()) {
            let bits = qr
                .numer()
                .significant_bits()
                .max(qr.denom().significant_bits()) as u64;
            if n.saturating_mul(bits + 1) <= DEFAULT_CAP_BITS {
                if let Ok(n32) = i32::try_from(n) {
                    let qn = BigRational::from(qr.pow(n32));
                    return Ok(BigRational::from(&self.mantissa * &qn) <= 1);
                }
            }
        }
        // Exponent space: ln(self) + n*ln(q) <= 0.
        let n_rat = BigRational::from(n);
        for attempt in 0..3 {
            let bits = budget << attempt;
            let lm = self.ln_bounds(bits)?;
            let lq = q.ln_bounds(bits)?;
            let total_hi = lm.1.add_scaled(&lq.1, &n_rat);
            let total_lo = lm.0.add_scaled(&lq.0, &n_rat);
            if let LnBound::Finite(hi) = &total_hi {
                if *hi <= 0 {
                    return Ok(true);
                }
            }
            if let LnBound::Finite(lo) = &total_lo {
                if *lo > 0 {
                    return Ok(false);
                }
            }
            match (&total_lo, &total_hi) {
                (_, LnBound::NegInf) => return Ok(true),
                (LnBound::PosInf, _) => return Ok(false),
                _ => continue,
            }
        }
        Err(Error::IncomparableEnclosure)
    }

    /// Certified enclosure of the natural log of the value; errors when the
    /// tower is too deep to bound both sides at this clamp.
    pub fn ln_enclosure(&self, budget: u32) -> Result<IntervalReal> {
        if self.is_zero() {
            return Err(Error::Domain("log of zero magnitude".into()));
        }
        let (lo, hi) = self.ln_bounds(budget)?;
        match (lo, hi) {
            (LnBound::Finite(l), LnBound::Finite(h)) => IntervalReal::new(l, h),
            _ => Err(Error::Unmaterializable(
                "magnitude too extreme for a finite log enclosure".into(),
            )),
        }
    }

    /// Exact rational value when the whole tower materializes within the cap.
    pub fn to_rational(&self, cap_bits: u64) -> Option<BigRational> {
        match &self.power {
            None => Some(self.mantissa.clone()),
            Some(p) => {
                let base = match p.base {
                    MagBase::Natural => return None,
                    MagBase::Int(b) => b,
                };
                let e = p.exponent.to_rational(cap_bits)?;
                if !e.is_integer() {
                    return None;
                }
                let e_u = e.numer().to_u64()?;
                if e_u.saturating_mul(base_bits(base)) > cap_bits {
                    return None;
                }
                let pw = int_pow(&BigInt::from(base), e_u as u32);
                let pw = match p.sign {
                    ExpSign::Pos => BigRational::from(pw),
                    ExpSign::Neg => BigRational::from((BigInt::from(1), pw)),
                };
                Some(BigRational::from(&self.mantissa * &pw))
            }
        }
    }

    /// Certified two-sided rational bounds `(lo, hi)` on `ln(value)`, where a
    /// side degenerates to +/- infinity when the tower exceeds the clamp.
    fn ln_bounds(&self, budget: u32) -> Result<(LnBound, LnBound)> {
        debug_assert!(!self.is_zero());
        let (ml, mh) = ln_point(&self.mantissa, budget)?;
        let p = match &self.power {
            None => return Ok((LnBound::Finite(ml), LnBound::Finite(mh))),
            Some(p) => p,
        };
        let (lb_lo, lb_hi) = match p.base {
            MagBase::Natural => (BigRational::from(1), BigRational::from(1)),
            MagBase::Int(b) => ln_point(&BigRational::from(b), budget)?,
        };
        let e_lo = p.exponent.rational_lower_bound();
        let e_hi = p.exponent.rational_upper_bound();
        // exponent >= 0 and ln(base) > 0, so the products are monotone.
        let term_lo = BigRational::from(&e_lo * &lb_lo);
        let term_hi = e_hi.map(|h| BigRational::from(&h * &lb_hi));
        match p.sign {
            ExpSign::Pos => {
                let lo = LnBound::Finite(BigRational::from(&ml + &term_lo));
                let hi = match term_hi {
                    Some(t) => LnBound::Finite(BigRational::from(&mh + &t)),
                    None => LnBound::PosInf,
                };
                Ok((lo, hi))
            }
            ExpSign::Neg => {
                let hi = LnBound::Finite(BigRational::from(&mh - &term_lo));
                let lo = match term_hi {
                    Some(t) => LnBound::Finite(BigRational::from(&ml - &t)),
                    None => LnBound::NegInf,
                };
                Ok((lo, hi))
            }
        }
    }

    /// Certified rational lower bound on the value (possibly clamped far
    /// below the true value for gigantic towers; never above it).
    pub fn rational_lower_bound(&self) -> BigRational {
        match &self.power {
            None => self.mantissa.clone(),
            Some(p) => match p.sign {
                ExpSign::Pos => {
                    // base^e >= 2^min(floor(e_lo), clamp) for base >= 2, e >= 0.
                    let e_lo = p.exponent.rational_lower_bound();
                    let e_floor = BigRational::from(e_lo.floor_ref())
                        .into_numer_denom()
                        .0
                        .to_u64()
                        .unwrap_or(u64::from(CLAMP_BITS))
                        .min(u64::from(CLAMP_BITS));
                    let pw = BigRational::from(BigInt::from(1) << e_floor as u32);
                    BigRational::from(&self.mantissa * &pw)
                }
                ExpSign::Neg => BigRational::new(), // 0 is always a valid lower bound
            },
        }
    }

    /// Certified rational upper bound, when one fits under the clamp.
    pub fn rational_upper_bound(&self) -> Option<BigRational> {
        match &self.power {
            None => Some(self.mantissa.clone()),
            Some(p) => match p.sign {
                ExpSign::Pos => {
                    let e_hi = p.exponent.rational_upper_bound()?;
                    let e_ceil = BigRational::from(e_hi.ceil_ref()).into_numer_denom().0;
                    let e_u = e_ceil.to_u64()?;
                    let base = match p.base {
                        MagBase::Natural => 3, // e < 3
                        MagBase::Int(b) => b,
                    };
                    if e_u.saturating_mul(base_bits(base)) > u64::from(CLAMP_BITS) {
                        return None;
                    }
                    let pw = int_pow(&BigInt::from(base), e_u as u32);
                    Some(BigRational::from(&self.mantissa * &BigRational::from(pw)))
                }
                ExpSign::Neg => {
                    // base^-e <= 2^-min(floor(e_lo), clamp) for base >= 2.
                    let e_lo = p.exponent.rational_lower_bound();
                    let e_floor = BigRational::from(e_lo.floor_ref())
                        .into_numer_denom()
                        .0
                        .to_u64()
                        .unwrap_or(u64::from(CLAMP_BITS))
                        .min(u64::from(CLAMP_BITS));
                    let pw =
                        BigRational::from((BigInt::from(1), BigInt::from(1) << e_floor as u32));
                    Some(BigRational::from(&self.mantissa * &pw))
                }
            },
        }
    }
}

fn base_bits(b: u32) -> u64 {
    u64::from(64 - u64::from(b).leading_zeros())
}

/// Signed exact sum of two power-part exponents (sign, |sum|); a `None`
/// magnitude means the exponents cancel exactly.
fn signed_exponent_sum(a: &PowerPart, b: &PowerPart) -> Result<(ExpSign, Option<Magnitude>)> {
    if a.sign == b.sign {
        let sum = try_add_exact(&a.exponent, &b.exponent)
            .ok_or_else(|| Error::Domain("no exact sum for these exponent towers".into()))?;
        return Ok((a.sign, Some(sum)));
    }
    let (pos, neg) = match a.sign {
        ExpSign::Pos => (&a.exponent, &b.exponent),
        ExpSign::Neg => (&b.exponent, &a.exponent),
    };
    match try_sub_exact(pos, neg) {
        Some((Ordering::Equal, _)) => Ok((ExpSign::Pos, None)),
        Some((Ordering::Greater, d)) => Ok((ExpSign::Pos, Some(d))),
        Some((Ordering::Less, d)) => Ok((ExpSign::Neg, Some(d))),
        None => Err(Error::Domain(
            "no exact difference for these exponent towers".into(),
        )),
    }
}

fn try_add_exact(a: &Magnitude, b: &Magnitude) -> Option<Magnitude> {
    match (&a.power, &b.power) {
        (None, None) => Some(Magnitude {
            mantissa: BigRational::from(&a.mantissa + &b.mantissa),
            power: None,
        }),
        (Some(pa), Some(pb))
            if pa.base == pb.base && pa.sign == pb.sign && pa.exponent == pb.exponent =>
        {
            Some(Magnitude {
                mantissa: BigRational::from(&a.mantissa + &b.mantissa),
                power: a.power.clone(),
            })
        }
        _ => None,
    }
}

fn try_sub_exact(a: &Magnitude, b: &Magnitude) -> Option<(Ordering, Magnitude)> {
    match (&a.power, &b.power) {
        (None, None) => {
            let d = BigRational::from(&a.mantissa - &b.mantissa);
            let ord = d.cmp0();
            Some((
                ord,
                Magnitude {
                    mantissa: BigRational::from(d.abs_ref()),
                    power: None,
                },
            ))
        }
        (Some(pa), Some(pb))
            if pa.base == pb.base && pa.sign == pb.sign && pa.exponent == pb.exponent =>
        {
            let d = BigRational::from(&a.mantissa - &b.mantissa);
            let ord = d.cmp0();
            Some((
                ord,
                Magnitude {
                    mantissa: BigRational::from(d.abs_ref()),
                    power: if ord == Ordering::Equal {
                        None
                    } else {
                        a.power.clone()
                    },
                },
            ))
        }
        _ => None,
    }
}

#[derive(Debug, Clone)]
enum LnBound {
    NegInf,
    Finite(BigRational),
    PosInf,
}

impl LnBound {
    /// `self + scale * other` with infinity absorption (`scale >= 0`).
    fn add_scaled(&self, other: &LnBound, scale: &BigRational) -> LnBound {
        match (self, other) {
            (LnBound::NegInf, LnBound::PosInf) | (LnBound::PosInf, LnBound::NegInf) => {
                LnBound::PosInf // indeterminate; conservative for upper bounds
            }
            (LnBound::NegInf, _) | (_, LnBound::NegInf) => LnBound::NegInf,
            (LnBound::PosInf, _) | (_, LnBound::PosInf) => LnBound::PosInf,
            (LnBound::Finite(a), LnBound::Finite(b)) => {
                LnBound::Finite(BigRational::from(a + &BigRational::from(b * scale)))
            }
        }
    }
}

fn cmp_ln_bounds(a: &(LnBound, LnBound), b: &(LnBound, LnBound)) -> Option<Ordering> {
    let a_below_b = match (&a.1, &b.0) {
        (LnBound::Finite(ah), LnBound::Finite(bl)) => ah < bl,
        (LnBound::NegInf, _) => true,
        (_, LnBound::PosInf) => true,
        _ => false,
    };
    if a_below_b {
        return Some(Ordering::Less);
    }
    let a_above_b = match (&a.0, &b.1) {
        (LnBound::Finite(al), LnBound::Finite(bh)) => al > bh,
        (LnBound::PosInf, _) => true,
        (_, LnBound::NegInf) => true,
        _ => false,
    };
    if a_above_b {
        return Some(Ordering::Greater);
    }
    None
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.power {
            None => write!(f, "{}", rat_to_str(&self.mantissa)),
            Some(p) => {
                let base = match p.base {
                    MagBase::Natural => "e".to_string(),
                    MagBase::Int(b) => b.to_string(),
                };
                let sign = match p.sign {
                    ExpSign::Pos => "+",
                    ExpSign::Neg => "-",
                };
                if self.mantissa == 1 {
                    write!(f, "{base}^{sign}({})", p.exponent)
                } else {
                    write!(
                        f,
                        "{} * {base}^{sign}({})",
                        rat_to_str(&self.mantissa),
                        p.exponent
                    )
                }
            }
        }
    }
}

// --- serialization ------------------------------------------------------
//
// {"level": 0, "body": "num/den"}
// {"level": k, "sign": ±1, "mantissa": "num/den", "base": "e"|"<int>", "body": {...}}

#[derive(Serialize, Deserialize)]
struct MagDto {
    level: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    sign: Option<i8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mantissa: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    base: Option<String>,
    body: serde_json::Value,
}

impl Magnitude {
    fn to_dto(&self) -> MagDto {
        match &self.power {
            None => MagDto {
                level: 0,
                sign: None,
                mantissa: None,
                base: None,
                body: serde_json::Value::String(rat_to_str(&self.mantissa)),
            },
            Some(p) => MagDto {
                level: self.level(),
                sign: Some(match p.sign {
                    ExpSign::Pos => 1,
                    ExpSign::Neg => -1,
                }),
                mantissa: Some(rat_to_str(&self.mantissa)),
                base: Some(match p.base {
                    MagBase::Natural => "e".to_string(),
                    MagBase::Int(b) => b.to_string(),
                }),
                body: serde_json::to_value(p.exponent.to_dto()).expect("magnitude dto"),
            },
        }
    }

    fn from_dto(dto: &MagDto) -> Result<Self> {
        if dto.level == 0 {
            let s = dto.body.as_str().ok_or_else(|| {
                Error::Malformed("level-0 magnitude body must be a string".into())
            })?;
            let r = rat_from_str(s)?;
            if r < 0 {
                return Err(Error::Malformed("negative magnitude".into()));
            }
            return Ok(Self {
                mantissa: r,
                power: None,
            });
        }
        let sign = match dto.sign {
            Some(1) => ExpSign::Pos,
            Some(-1) => ExpSign::Neg,
            _ => return Err(Error::Malformed("magnitude sign must be 1 or -1".into())),
        };
        let mantissa = rat_from_str(
            dto.mantissa
                .as_deref()
                .ok_or_else(|| Error::Malformed("missing magnitude mantissa".into()))?,
        )?;
        if mantissa <= 0 {
            return Err(Error::Malformed(
                "magnitude mantissa must be positive".into(),
            ));
        }
        let base = match dto.base.as_deref() {
            Some("e") => MagBase::Natural,
            Some(s) => {
                let b: u32 = s
                    .parse()
                    .map_err(|_| Error::Malformed(format!("bad magnitude base {s:?}")))?;
                if b < 2 {
                    return Err(Error::Malformed("magnitude base must be >= 2".into()));
                }
                MagBase::Int(b)
            }
            None => return Err(Error::Malformed("missing magnitude base".into())),
        };
        let inner_dto: MagDto = serde_json::from_value(dto.body.clone())
            .map_err(|e| Error::Malformed(format!("magnitude body: {e}")))?;
        let exponent = Self::from_dto(&inner_dto)?;
        if exponent.is_zero() {
            return Err(Error::Malformed("power exponent must be nonzero".into()));
        }
        if exponent.level() + 1 != dto.level {
            return Err(Error::Malformed(
                "magnitude level does not match body depth".into(),
            ));
        }
        Ok(Self {
            mantissa,
            power: Some(PowerPart {
                base,
                sign,
                exponent: Box::new(exponent),
            }),
        })
    }
}

impl Serialize for Magnitude {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.to_dto().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Magnitude {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let dto = MagDto::deserialize(deserializer)?;
        Magnitude::from_dto(&dto).map_err(serde::de::Error::custom)
    }
}
