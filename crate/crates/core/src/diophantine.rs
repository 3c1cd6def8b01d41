//! Continued fractions and the rational-approximation machinery built on
//! them: convergent tables, quotient extraction from certified enclosures,
//! best-approximation selection under a denominator cap, targets with forced
//! large partial quotients, exact Taylor rational approximants to `exp`, and
//! lcm accounting.

use crate::error::{Error, Result};
use crate::interval::{exp_point, IntervalReal};
use crate::rational::{int_pow, BigInt, BigRational};
use serde::{Deserialize, Serialize};

/// A finite simple continued fraction with its convergent table.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuedFraction {
    integer_part: BigInt,
    quotients: Vec<BigInt>,
    /// `(p_k, q_k)` for `k = 0..=quotients.len()`, starting at the integer part.
    convergents: Vec<(BigInt, BigInt)>,
}

impl ContinuedFraction {
    /// Build the convergent table `p_k = a_k p_{k-1} + p_{k-2}`,
    /// `q_k = a_k q_{k-1} + q_{k-2}` from an integer part and quotients >= 1.
    pub fn new(integer_part: BigInt, quotients: Vec<BigInt>) -> Result<Self> {
        if quotients.iter().any(|a| *a < 1) {
            return Err(Error::Domain("partial quotients must be >= 1".into()));
        }
        let mut convergents = Vec::with_capacity(quotients.len() + 1);
        let (mut p_prev, mut q_prev) = (BigInt::from(1), BigInt::new());
        let (mut p, mut q) = (integer_part.clone(), BigInt::from(1));
        convergents.push((p.clone(), q.clone()));
        for a in &quotients {
            let p_next = BigInt::from(a * &p) + &p_prev;
            let q_next = BigInt::from(a * &q) + &q_prev;
            p_prev = std::mem::replace(&mut p, p_next);
            q_prev = std::mem::replace(&mut q, q_next);
            convergents.push((p.clone(), q.clone()));
        }
        Ok(Self {
            integer_part,
            quotients,
            convergents,
        })
    }

    /// Canonical expansion of a rational (last quotient >= 2 when present).
    pub fn of_rational(r: &BigRational) -> Self {
        let mut quotients = Vec::new();
        let int = BigRational::from(r.floor_ref());
        let integer_part = int.numer().clone();
        let mut frac = BigRational::from(r - &int);
        while frac != 0 {
            let inv = BigRational::from(frac.recip_ref());
            let fl = BigRational::from(inv.floor_ref());
            quotients.push(fl.numer().clone());
            frac = inv - fl;
        }
        // Euclid already yields the canonical form for rationals, but guard
        // against a trailing 1 from callers' non-canonical data.
        if quotients.len() > 1 && quotients.last().map(|a| *a == 1) == Some(true) {
            quotients.pop();
            if let Some(last) = quotients.last_mut() {
                *last += 1u32;
            }
        }
        Self::new(integer_part, quotients).expect("euclid quotients are positive")
    }

    pub fn integer_part(&self) -> &BigInt {
        &self.integer_part
    }

    pub fn quotients(&self) -> &[BigInt] {
        &self.quotients
    }

    /// `(p_k, q_k)` with `k = 0` the integer-part convergent.
    pub fn convergents(&self) -> &[(BigInt, BigInt)] {
        &self.convergents
    }

    /// Exact value of the finite expansion.
    pub fn value(&self) -> BigRational {
        let (p, q) = self.convergents.last().expect("table is never empty");
        BigRational::from((p.clone(), q.clone()))
    }

    /// `p_k q_{k-1} - p_{k-1} q_k = (-1)^(k-1)` for all `k >= 1`.
    pub fn determinant_identity_holds(&self) -> bool {
        self.convergents.windows(2).enumerate().all(|(i, w)| {
            let k = i + 1;
            let det = BigInt::from(&w[1].0 * &w[0].1) - BigInt::from(&w[0].0 * &w[1].1);
            if k % 2 == 1 {
                det == 1
            } else {
                det == -1i32
            }
        })
    }
}

/// Extract the first `depth` partial quotients shared by every point of the
/// enclosure. Exact rational points use their canonical finite expansion
/// (possibly shorter than `depth`); proper intervals must pin each quotient
/// unambiguously.
pub fn cf_of_real(x: &IntervalReal, depth: usize) -> Result<ContinuedFraction> {
    if x.is_point() {
        let full = ContinuedFraction::of_rational(x.lower());
        if full.quotients().len() <= depth {
            return Ok(full);
        }
        return ContinuedFraction::new(
            full.integer_part().clone(),
            full.quotients()[..depth].to_vec(),
        );
    }
    let mut quotients = Vec::with_capacity(depth);
    let mut current = x.clone();
    let mut integer_part: Option<BigInt> = None;
    for step in 0..=depth {
        let f_lo = BigRational::from(current.lower().floor_ref());
        let f_hi = BigRational::from(current.upper().floor_ref());
        if f_lo != f_hi {
            return Err(Error::AmbiguousEnclosure(format!(
                "partial quotient {step} straddles an integer boundary"
            )));
        }
        let a = f_lo.numer().clone();
        match integer_part {
            None => integer_part = Some(a.clone()),
            Some(_) => quotients.push(a.clone()),
        }
        if quotients.len() == depth {
            break;
        }
        let frac = current.add_rational(&-BigRational::from(&a));
        if frac.lower() <= &BigRational::new() {
            return Err(Error::AmbiguousEnclosure(format!(
                "fractional part at quotient {step} may vanish; cannot invert"
            )));
        }
        current = frac.recip()?;
    }
    ContinuedFraction::new(integer_part.expect("first step always runs"), quotients)
}

/// Best rational approximation `r/s` with `s <= q_cap` and certified
/// `|alpha - r/s| <= 1/(s * q_cap)`, realized as the last continued-fraction
/// convergent whose denominator stays under the cap.
pub fn dirichlet_approx(alpha: &IntervalReal, q_cap: &BigInt) -> Result<(BigInt, BigInt)> {
    if *q_cap < 1 {
        return Err(Error::Domain("denominator cap must be >= 1".into()));
    }
    // Incremental convergents from quotient extraction.
    let (mut p_prev, mut q_prev) = (BigInt::from(1), BigInt::new());
    let f_lo = BigRational::from(alpha.lower().floor_ref());
    let f_hi = BigRational::from(alpha.upper().floor_ref());
    if f_lo != f_hi {
        return Err(Error::AmbiguousEnclosure("integer part undecided".into()));
    }
    let mut p = f_lo.numer().clone();
    let mut q = BigInt::from(1);
    let mut current = alpha.add_rational(&-f_lo);

    loop {
        // Try to extract the next quotient; stop on exact termination or
        // ambiguity and certify what we have.
        if current.is_point() && *current.lower() == 0 {
            break;
        }
        if current.lower() <= &BigRational::new() {
            break;
        }
        let inv = current.recip()?;
        let a_lo = BigRational::from(inv.lower().floor_ref());
        let a_hi = BigRational::from(inv.upper().floor_ref());
        if a_lo != a_hi {
            break;
        }
        let a = a_lo.numer().clone();
        let q_next = BigInt::from(&a * &q) + &q_prev;
        if q_next > *q_cap {
            break;
        }
        let p_next = BigInt::from(&a * &p) + &p_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        current = inv.add_rational(&-a_lo);
    }

    // Never trust the construction: certify the Dirichlet inequality.
    let approx = BigRational::from((p.clone(), q.clone()));
    let gap = alpha.add_rational(&-approx).abs();
    let bound = BigRational::from((BigInt::from(1), BigInt::from(&q * q_cap)));
    if gap.upper() <= &bound {
        Ok((p, q))
    } else if gap.lower() > &bound {
        Err(Error::Domain(format!(
            "no convergent under cap {q_cap} satisfies the Dirichlet bound (got to {p}/{q})"
        )))
    } else {
        Err(Error::AmbiguousEnclosure(
            "enclosure too wide to certify the Dirichlet bound".into(),
        ))
    }
}

/// Forced-quotient schedule for the sparse-large-quotient generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ForcedSchedule {
    /// `g(n) = base^(inner^n)`.
    DoubleExp { base: u32, inner: u32 },
    /// `g(n) = ceil(e^(n^3))`.
    CeilExpCubed,
    /// Explicit per-stage quotients (decimal strings).
    Explicit { quotients: Vec<String> },
}

impl ForcedSchedule {
    /// Parse the CLI-facing spec: `"B^(I^n)" | ceil-exp-n3 | list:Q1,Q2,...`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        if spec == "ceil-exp-n3" {
            return Ok(ForcedSchedule::CeilExpCubed);
        }
        if let Some(rest) = spec.strip_prefix("list:") {
            return Ok(ForcedSchedule::Explicit {
                quotients: rest.split(',').map(|s| s.trim().to_string()).collect(),
            });
        }
        if let Some((base, rest)) = spec.split_once("^(") {
            if let Some((inner, tail)) = rest.split_once("^n)") {
                if tail.is_empty() {
                    let base: u32 = base
                        .trim()
                        .parse()
                        .map_err(|_| Error::Malformed("bad forced base".into()))?;
                    let inner: u32 = inner
                        .trim()
                        .parse()
                        .map_err(|_| Error::Malformed("bad forced inner base".into()))?;
                    return Ok(ForcedSchedule::DoubleExp { base, inner });
                }
            }
        }
        Err(Error::Malformed(format!(
            "unknown forced schedule {spec:?}; use \"B^(I^n)\" | ceil-exp-n3 | list:Q1,Q2,..."
        )))
    }

    pub fn quotient(&self, n: usize, budget: u32) -> Result<BigInt> {
        match self {
            ForcedSchedule::DoubleExp { base, inner } => {
                if *base < 2 || *inner < 2 {
                    return Err(Error::Domain(
                        "double-exp schedule needs base, inner >= 2".into(),
                    ));
                }
                let exp = u64::from(*inner)
                    .checked_pow(n as u32)
                    .ok_or_else(|| Error::Unmaterializable("forced exponent overflows".into()))?;
                let exp32 = u32::try_from(exp)
                    .map_err(|_| Error::Unmaterializable("forced quotient too large".into()))?;
                Ok(int_pow(&BigInt::from(*base), exp32))
            }
            ForcedSchedule::CeilExpCubed => {
                let cube = (n as i64).pow(3);
                let (lo, hi) = exp_point(&BigRational::from(cube), budget)?;
                let ceil_lo = BigRational::from(lo.ceil_ref());
                let ceil_hi = BigRational::from(hi.ceil_ref());
                if ceil_lo != ceil_hi {
                    return Err(Error::AmbiguousEnclosure(format!(
                        "ceil(e^{cube}) undecided at budget {budget}"
                    )));
                }
                Ok(ceil_lo.numer().clone())
            }
            ForcedSchedule::Explicit { quotients } => match quotients.get(n - 1) {
                Some(s) => crate::rational::int_from_str(s),
                None => Err(Error::Domain(format!("explicit schedule has no stage {n}"))),
            },
        }
    }
}

/// One stage of a forced-quotient target: the convergent immediately
/// preceding the forced quotient, with its exact error sandwich.
#[derive(Debug, Clone)]
pub struct JarnikStage {
    pub stage: usize,
    /// 1-based position of the forced quotient in the quotient list.
    pub index: usize,
    pub forced_quotient: BigInt,
    /// `(A_n, B_n)`.
    pub approximant: (BigInt, BigInt),
    /// Exact `|u - A_n/B_n|`.
    pub error: BigRational,
    /// `1/(forced_quotient * B_n^2)`.
    pub error_upper: BigRational,
    /// Certified `ln B_n` (undefined for `B_n = 1`).
    pub log_denominator: Option<IntervalReal>,
    /// `-ln(error)/ln(B_n)` as a certified enclosure, when defined.
    pub achieved_exponent: Option<IntervalReal>,
}

/// A rational target whose continued fraction has one forced large quotient
/// per stage, fillers everywhere else.
#[derive(Debug, Clone)]
pub struct JarnikTarget {
    pub cf: ContinuedFraction,
    pub filler: u32,
    pub value: BigRational,
    pub stages: Vec<JarnikStage>,
}

/// Build `[0; f, G(1), f, G(2), ..., f, G(s), f]` and record per-stage
/// approximants with exact error sandwiches and achieved exponents.
pub fn jarnik_generate(
    forced: &ForcedSchedule,
    filler: u32,
    stages: usize,
    budget: u32,
) -> Result<JarnikTarget> {
    if filler < 1 {
        return Err(Error::Domain("filler quotient must be >= 1".into()));
    }
    let filler_int = BigInt::from(filler);
    let mut quotients = vec![filler_int.clone()];
    let mut forced_positions = Vec::with_capacity(stages);
    let mut prev_g: Option<BigInt> = None;
    for n in 1..=stages {
        let g = forced.quotient(n, budget)?;
        if g < 1 {
            return Err(Error::Domain("forced quotients must be >= 1".into()));
        }
        if let Some(prev) = &prev_g {
            if g < *prev {
                return Err(Error::Domain(
                    "forced schedule must be nondecreasing".into(),
                ));
            }
        }
        prev_g = Some(g.clone());
        quotients.push(g);
        forced_positions.push(quotients.len()); // 1-based index of G(n)
        quotients.push(filler_int.clone());
    }
    let cf = ContinuedFraction::new(BigInt::new(), quotients)?;
    let value = cf.value();

    let mut stage_records = Vec::with_capacity(stages);
    for (n, &pos) in forced_positions.iter().enumerate() {
        let stage = n + 1;
        let (a_n, b_n) = cf.convergents()[pos - 1].clone();
        let g = &cf.quotients()[pos - 1];
        let approx = BigRational::from((a_n.clone(), b_n.clone()));
        let error = BigRational::from(&value - &approx).abs();
        let error_upper = BigRational::from((
            BigInt::from(1),
            BigInt::from(g * &BigInt::from(&b_n * &b_n)),
        ));
        debug_assert!(error <= error_upper);
        let (log_denominator, achieved_exponent) = if b_n == 1 {
            (None, None)
        } else {
            let ln_b = IntervalReal::point(BigRational::from(&b_n)).ln(budget)?;
            let achieved = if error == 0 {
                None
            } else {
                let neg_ln_err = IntervalReal::point(error.clone()).ln(budget)?.neg();
                Some(neg_ln_err.mul(&ln_b.recip()?))
            };
            (Some(ln_b), achieved)
        };
        stage_records.push(JarnikStage {
            stage,
            index: pos,
            forced_quotient: g.clone(),
            approximant: (a_n, b_n),
            error,
            error_upper,
            log_denominator,
            achieved_exponent,
        });
    }
    Ok(JarnikTarget {
        cf,
        filler,
        value,
        stages: stage_records,
    })
}

/// Exact degree-`L` Taylor rational approximant to `e^U`.
#[derive(Debug, Clone)]
pub struct ExpApproximant {
    /// `U`, normally in `[-1, 0]`.
    pub input: BigRational,
    pub degree: u32,
    /// `T_L(U) = sum_{k<=L} U^k/k!`, exact and reduced.
    pub value: BigRational,
    /// `|U|^{L+1}/(L+1)!`, exact.
    pub remainder_bound: BigRational,
    pub denominator_certificate: DenominatorCertificate,
}

/// Factor record for the reduced denominator `Q` of the Taylor value.
#[derive(Debug, Clone)]
pub struct DenominatorCertificate {
    /// `B^L` with `B` the denominator of the input.
    pub b_pow_l: BigInt,
    /// `L!`.
    pub factorial: BigInt,
    /// `lcm(1..L)`.
    pub lcm: BigInt,
    /// `Q | B^L * L!`: the divisibility the construction guarantees.
    pub divides_factorial_form: bool,
    /// `Q | B^L * lcm(1..L)`: reported for comparison; fails in general
    /// because `k!` does not divide `lcm(1..L)` once `k >= 4`.
    pub divides_lcm_form: bool,
    /// Certified `ln Q`.
    pub log_denominator: IntervalReal,
    /// Measured `c2 = (ln Q - L ln B) / (L ln L)` with `c1 = 1`; `None` for
    /// `L = 1` where the normalization vanishes.
    pub c2_measured: Option<IntervalReal>,
}

/// Compute the exact Taylor approximant of `e^U` for `U` in `[-1, 0]`.
/// `allow_outside_domain` admits other inputs for diagnostics.
pub fn exp_taylor_rational(
    u: &BigRational,
    degree: u32,
    budget: u32,
    allow_outside_domain: bool,
) -> Result<ExpApproximant> {
    if degree < 1 {
        return Err(Error::Domain("Taylor degree must be >= 1".into()));
    }
    if !allow_outside_domain && (*u < -1 || *u > 0) {
        return Err(Error::Domain(format!(
            "input {} outside [-1, 0]; pass the override for diagnostics",
            crate::rational::rat_to_str(u)
        )));
    }
    let mut value = BigRational::from(1);
    let mut term = BigRational::from(1);
    for k in 1..=degree {
        term = BigRational::from(&term * u) / BigRational::from(k);
        value += term.clone();
    }
    let next = BigRational::from(&term * u) / BigRational::from(degree + 1);
    let remainder_bound = BigRational::from(next.abs_ref());

    let b = u.denom().clone();
    let q = value.denom().clone();
    let b_pow_l = int_pow(&b, degree);
    let factorial = BigInt::from(BigInt::factorial(degree));
    let lcm = lcm_value(degree);
    let divides_factorial_form = BigInt::from(&b_pow_l * &factorial).is_divisible(&q);
    let divides_lcm_form = BigInt::from(&b_pow_l * &lcm).is_divisible(&q);
    debug_assert!(
        divides_factorial_form,
        "T_L denominator must divide B^L * L!"
    );

    let log_denominator = IntervalReal::point(BigRational::from(&q)).ln(budget)?;
    let c2_measured = if degree >= 2 {
        let l_rat = BigRational::from(degree);
        let ln_b = if b == 1 {
            IntervalReal::point(BigRational::new())
        } else {
            IntervalReal::point(BigRational::from(&b)).ln(budget)?
        };
        let ln_l = IntervalReal::point(l_rat.clone()).ln(budget)?;
        let numer = log_denominator.sub(&ln_b.mul_rational(&l_rat));
        let denom = ln_l.mul_rational(&l_rat);
        Some(numer.mul(&denom.recip()?))
    } else {
        None
    };

    Ok(ExpApproximant {
        input: u.clone(),
        degree,
        value,
        remainder_bound,
        denominator_certificate: DenominatorCertificate {
            b_pow_l,
            factorial,
            lcm,
            divides_factorial_form,
            divides_lcm_form,
            log_denominator,
            c2_measured,
        },
    })
}

fn lcm_value(l: u32) -> BigInt {
    let mut acc = BigInt::from(1);
    for k in 2..=l.max(1) {
        acc = acc.lcm(&BigInt::from(k));
    }
    acc
}

/// Exact `lcm(1..L)` with a certified enclosure of its natural log.
pub fn lcm_upto(l: u32, budget: u32) -> Result<(BigInt, IntervalReal)> {
    if l < 1 {
        return Err(Error::Domain("L must be >= 1".into()));
    }
    let v = lcm_value(l);
    let ln = if v == 1 {
        IntervalReal::point(BigRational::new())
    } else {
        IntervalReal::point(BigRational::from(&v)).ln(budget)?
    };
    Ok((v, ln))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::DEFAULT_BUDGET;
    use crate::rational::{rat, rat_from_str};

    fn cf(int: i64, qs: &[i64]) -> ContinuedFraction {
        ContinuedFraction::new(
            BigInt::from(int),
            qs.iter().map(|&a| BigInt::from(a)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn golden_ratio_prefix_convergents() {
        let c = cf(0, &[1, 1, 1, 1, 1]);
        let expect = [(0, 1), (1, 1), (1, 2), (2, 3), (3, 5), (5, 8)];
        for (k, (p, q)) in expect.iter().enumerate() {
            assert_eq!(c.convergents()[k], (BigInt::from(*p), BigInt::from(*q)));
        }
        assert!(c.determinant_identity_holds());
    }

    #[test]
    fn sqrt2_tail_convergents() {
        let c = cf(0, &[2, 2, 2]);
        let expect = [(0, 1), (1, 2), (2, 5), (5, 12)];
        for (k, (p, q)) in expect.iter().enumerate() {
            assert_eq!(c.convergents()[k], (BigInt::from(*p), BigInt::from(*q)));
        }
        assert_eq!(c.value(), rat(5, 12));
    }

    #[test]
    fn pi_prefix_convergents() {
        let c = cf(3, &[7, 15, 1]);
        let expect = [(3, 1), (22, 7), (333, 106), (355, 113)];
        for (k, (p, q)) in expect.iter().enumerate() {
            assert_eq!(c.convergents()[k], (BigInt::from(*p), BigInt::from(*q)));
        }
        assert!(c.determinant_identity_holds());
    }

    #[test]
    fn rational_expansion_is_canonical() {
        let c = ContinuedFraction::of_rational(&rat(22, 7));
        assert_eq!(c.integer_part(), &BigInt::from(3));
        assert_eq!(c.quotients(), &[BigInt::from(7)]);
        assert_eq!(c.value(), rat(22, 7));
        // negative input
        let n = ContinuedFraction::of_rational(&rat(-22, 7));
        assert_eq!(n.value(), rat(-22, 7));
    }

    /// 75 digits of pi as a tight rational enclosure.
    fn pi_enclosure() -> IntervalReal {
        let lo = rat_from_str(
            "3141592653589793238462643383279502884197169399375105820974944592307816406286\
             /1000000000000000000000000000000000000000000000000000000000000000000000000000",
        )
        .unwrap();
        let hi = rat_from_str(
            "3141592653589793238462643383279502884197169399375105820974944592307816406287\
             /1000000000000000000000000000000000000000000000000000000000000000000000000000",
        )
        .unwrap();
        IntervalReal::new(lo, hi).unwrap()
    }

    #[test]
    fn quotients_from_enclosures() {
        // exact rational point
        let c = cf_of_real(&IntervalReal::point(rat(22, 7)), 2).unwrap();
        assert_eq!(c.integer_part(), &BigInt::from(3));
        assert_eq!(c.quotients(), &[BigInt::from(7)]);

        // high-precision pi enclosure pins [3; 7, 15, 1]
        let c = cf_of_real(&pi_enclosure(), 4).unwrap();
        assert_eq!(c.integer_part(), &BigInt::from(3));
        assert_eq!(
            c.quotients(),
            &[
                BigInt::from(7),
                BigInt::from(15),
                BigInt::from(1),
                BigInt::from(292)
            ][..4]
        );

        // width 0.5 around 0.5 cannot pin anything
        let wide = IntervalReal::new(rat(1, 4), rat(3, 4)).unwrap();
        assert!(matches!(
            cf_of_real(&wide, 1),
            Err(Error::AmbiguousEnclosure(_))
        ));
    }

    #[test]
    fn error_sandwich_on_interior_convergents() {
        // strict sandwich 1/(q_k(q_{k+1}+q_k)) < |u - p_k/q_k| < 1/(q_k q_{k+1})
        let c = cf(0, &[2, 7, 3, 1, 5, 2]);
        let u = c.value();
        let n = c.quotients().len();
        for k in 1..n.saturating_sub(1) {
            let (p_k, q_k) = &c.convergents()[k];
            let (_, q_next) = &c.convergents()[k + 1];
            let err = BigRational::from(&u - &BigRational::from((p_k.clone(), q_k.clone()))).abs();
            let upper = BigRational::from((BigInt::from(1), BigInt::from(q_k * q_next)));
            let lower = BigRational::from((
                BigInt::from(1),
                BigInt::from(q_k * &BigInt::from(q_next + q_k)),
            ));
            assert!(lower < err, "lower sandwich at k={k}");
            assert!(err < upper, "upper sandwich at k={k}");
        }
    }

    #[test]
    fn dirichlet_examples() {
        // pi under cap 100: the convergent before 333/106 is 22/7
        let (p, q) = dirichlet_approx(&pi_enclosure(), &BigInt::from(100)).unwrap();
        assert_eq!((p, q), (BigInt::from(22), BigInt::from(7)));

        // exact rationals come back exactly
        let (p, q) =
            dirichlet_approx(&IntervalReal::point(rat(1, 2)), &BigInt::from(1000)).unwrap();
        assert_eq!((p, q), (BigInt::from(1), BigInt::from(2)));

        // ln(2/27) at cap 10^6: certified against the actual enclosure
        let alpha = IntervalReal::point(rat(2, 27)).ln(320).unwrap();
        let cap = BigInt::from(1_000_000);
        let (p, q) = dirichlet_approx(&alpha, &cap).unwrap();
        assert!(q <= cap);
        let gap = alpha
            .add_rational(&-BigRational::from((p, q.clone())))
            .abs();
        let bound = BigRational::from((BigInt::from(1), BigInt::from(&q * &cap)));
        assert!(gap.upper() <= &bound);
    }

    #[test]
    fn jarnik_reference_structure() {
        let t = jarnik_generate(
            &ForcedSchedule::DoubleExp { base: 2, inner: 2 },
            2,
            4,
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert_eq!(t.stages.len(), 4);
        // forced quotients 4, 16, 256, 65536 at positions 2, 4, 6, 8
        let expected_g = [4u64, 16, 256, 65536];
        for (n, s) in t.stages.iter().enumerate() {
            assert_eq!(s.forced_quotient, BigInt::from(expected_g[n]));
            assert_eq!(s.index, 2 * (n + 1));
            // stage soundness: exact error under 1/(G B^2)
            assert!(s.error <= s.error_upper);
            assert!(s.error > 0);
            // approximant is the convergent immediately preceding the forced quotient
            let conv = &t.cf.convergents()[s.index - 1];
            assert_eq!(&s.approximant, conv);
        }
        // first approximant of [0; 2, 4, ...] is 1/2
        assert_eq!(t.stages[0].approximant, (BigInt::from(1), BigInt::from(2)));
    }

    #[test]
    fn jarnik_degenerate_and_exp_cubed() {
        let empty = jarnik_generate(
            &ForcedSchedule::DoubleExp { base: 2, inner: 2 },
            2,
            0,
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert!(empty.stages.is_empty());
        assert_eq!(empty.value, rat(1, 2));

        // ceil(e^(1^3)) = 3
        let t = jarnik_generate(&ForcedSchedule::CeilExpCubed, 2, 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(t.stages[0].forced_quotient, BigInt::from(3));
        let b = &t.stages[0].approximant.1;
        let bound = BigRational::from((BigInt::from(1), BigInt::from(3) * BigInt::from(b * b)));
        assert_eq!(t.stages[0].error_upper, bound);
        assert!(t.stages[0].error <= bound);
    }

    #[test]
    fn taylor_spot_values() {
        // U = 0: exact 1 with zero remainder
        let a = exp_taylor_rational(&BigRational::new(), 5, DEFAULT_BUDGET, false).unwrap();
        assert_eq!(a.value, rat(1, 1));
        assert_eq!(a.remainder_bound, BigRational::new());

        // U = -1/2, L = 3: 29/48 with remainder 1/384
        let a = exp_taylor_rational(&rat(-1, 2), 3, DEFAULT_BUDGET, false).unwrap();
        assert_eq!(a.value, rat(29, 48));
        assert_eq!(a.remainder_bound, rat(1, 384));

        // U = -1, L = 2: 1/2 with remainder 1/6
        let a = exp_taylor_rational(&rat(-1, 1), 2, DEFAULT_BUDGET, false).unwrap();
        assert_eq!(a.value, rat(1, 2));
        assert_eq!(a.remainder_bound, rat(1, 6));

        // outside the domain without the override
        assert!(exp_taylor_rational(&rat(1, 2), 3, DEFAULT_BUDGET, false).is_err());
        assert!(exp_taylor_rational(&rat(1, 2), 3, DEFAULT_BUDGET, true).is_ok());
    }

    #[test]
    fn taylor_remainder_is_sound_against_certified_exp() {
        // true |e^U - T_L(U)| <= |U|^{L+1}/(L+1)! at ~80-digit certification
        for (u, l) in [
            (rat(-1, 2), 3u32),
            (rat(-1, 1), 2),
            (rat(-2, 3), 5),
            (rat(-1, 7), 4),
        ] {
            let a = exp_taylor_rational(&u, l, 280, false).unwrap();
            let truth = IntervalReal::point(u.clone()).exp(280).unwrap();
            let gap = truth.add_rational(&-a.value.clone()).abs();
            assert!(
                gap.upper() <= &a.remainder_bound,
                "remainder bound violated at U={u:?}, L={l}"
            );
        }
    }

    #[test]
    fn taylor_denominator_certificates() {
        // factorial form always holds; lcm form fails once k! > lcm(1..L)
        let a = exp_taylor_rational(&rat(-1, 2), 3, DEFAULT_BUDGET, false).unwrap();
        assert!(a.denominator_certificate.divides_factorial_form);
        assert!(a.denominator_certificate.divides_lcm_form); // 48 | 8*6

        let a4 = exp_taylor_rational(&rat(-1, 2), 4, DEFAULT_BUDGET, false).unwrap();
        // T_4(-1/2) = 233/384; 384 | 16*24 but 384 does not divide 16*12
        assert_eq!(a4.value, rat(233, 384));
        assert!(a4.denominator_certificate.divides_factorial_form);
        assert!(!a4.denominator_certificate.divides_lcm_form);
    }

    #[test]
    fn lcm_growth_values() {
        let (v1, l1) = lcm_upto(1, DEFAULT_BUDGET).unwrap();
        assert_eq!(v1, BigInt::from(1));
        assert!(l1.is_point() && *l1.lower() == 0);

        let (v10, l10) = lcm_upto(10, DEFAULT_BUDGET).unwrap();
        assert_eq!(v10, BigInt::from(2520));
        // ln 2520 = 7.8320...
        assert!(l10.lower() > &rat(78320, 10001));
        assert!(l10.upper() < &rat(78321, 10000));

        let (v30, l30) = lcm_upto(30, DEFAULT_BUDGET).unwrap();
        assert_eq!(v30, BigInt::from(2329089562800u64));
        // ratio psi(30)/30 = 0.94921...
        let ratio = l30.mul_rational(&rat(1, 30));
        assert!(ratio.lower() > &rat(94, 100) && ratio.upper() < &rat(96, 100));
    }
}
