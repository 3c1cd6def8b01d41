//! Certified analysis of the self-power map `f(x) = x^x = exp(x ln x)` and
//! its companion `phi(t) = t ln t`: evaluation, derivative and Lipschitz
//! bounds, level-set inversion by certified bisection, exclusion scans
//! against rational targets, and the content-series partial sums.

use crate::error::{Error, Result};
use crate::interval::IntervalReal;
use crate::rational::{rat_pow, rat_to_str, BigInt, BigRational};
use serde::Serialize;
use std::cmp::Ordering;

/// Certified enclosure of `x^x` for a positive enclosure `x`.
pub fn self_power(x: &IntervalReal, budget: u32) -> Result<IntervalReal> {
    if x.lower() <= &BigRational::new() {
        return Err(Error::Domain(
            "self-power needs a positive enclosure".into(),
        ));
    }
    // Exact fast path keeps integer points like 2^2 = 4 decidable in
    // comparisons against rational targets.
    if x.is_point() {
        if let Some(v) = exact_self_power(x.lower()) {
            return Ok(IntervalReal::point(v));
        }
    }
    let phi = x.mul(&x.ln(budget + 8)?);
    phi.exp(budget)
}

/// `x^x` as an exact rational. For reduced `p/q` with `q >= 2` the value
/// `(p^p/q^p)^(1/q)` is never rational (`q` itself would have to be a perfect
/// `q`-th power), so only integer inputs qualify.
fn exact_self_power(x: &BigRational) -> Option<BigRational> {
    if *x <= 0 || !x.is_integer() {
        return None;
    }
    let p32 = x.numer().to_u32()?;
    if p32 > 4096 {
        return None; // materializes elsewhere; keep comparisons cheap
    }
    rat_pow(x, p32 as i32).ok()
}

/// `phi(x) = x ln x` as a certified enclosure.
pub fn phi(x: &IntervalReal, budget: u32) -> Result<IntervalReal> {
    if x.lower() <= &BigRational::new() {
        return Err(Error::Domain("phi needs a positive enclosure".into()));
    }
    Ok(x.mul(&x.ln(budget)?))
}

/// Enclosure of `e^-1`.
pub fn inv_e(budget: u32) -> IntervalReal {
    IntervalReal::point(BigRational::from(-1))
        .exp(budget)
        .expect("exp(-1) is always materializable")
}

/// Enclosure of the global minimum `f(e^-1) = e^(-1/e)`.
pub fn min_value(budget: u32) -> IntervalReal {
    inv_e(budget + 8)
        .neg()
        .exp(budget)
        .expect("exp(-1/e) is always materializable")
}

/// Derivative bounds `m <= f'(x) <= M` on `[delta, 1]`, valid because `f'`
/// is increasing there (`f'' = x^x((ln x + 1)^2 + 1/x) > 0`), so the
/// endpoints bound it.
#[derive(Debug, Clone)]
pub struct DerivativeBounds {
    pub delta: BigRational,
    /// Enclosure of `f'(delta)`.
    pub lower: IntervalReal,
    /// Enclosure of `f'(1) = 1` (exact).
    pub upper: IntervalReal,
    /// Set when `delta` sits close enough to `e^-1` that the lower bound is
    /// nearly useless.
    pub near_critical: bool,
}

pub fn derivative_bounds(delta: &BigRational, budget: u32) -> Result<DerivativeBounds> {
    if *delta > 1 {
        return Err(Error::Domain("delta must lie in (e^-1, 1]".into()));
    }
    let ei = inv_e(budget + 16);
    match IntervalReal::point(delta.clone()).try_cmp(&ei) {
        Some(Ordering::Greater) => {}
        Some(_) => {
            return Err(Error::Domain(
                "delta <= e^-1: the derivative vanishes at the critical point".into(),
            ))
        }
        None => return Err(Error::IncomparableEnclosure),
    }
    let point = IntervalReal::point(delta.clone());
    let slope = point.ln(budget)?.add_rational(&BigRational::from(1));
    let lower = self_power(&point, budget)?.mul(&slope);
    let near_critical = slope.upper() < &BigRational::from((1, 64));
    Ok(DerivativeBounds {
        delta: delta.clone(),
        lower,
        upper: IntervalReal::point(BigRational::from(1)),
        near_critical,
    })
}

/// Lipschitz constant of `phi` on `[delta, 1]`: `max(1, -ln delta - 1)` as a
/// certified enclosure (the sup of `|ln t + 1|` sits at an endpoint).
pub fn phi_lipschitz(delta: &BigRational, budget: u32) -> Result<IntervalReal> {
    if *delta <= 0 || *delta >= 1 {
        return Err(Error::Domain("delta must lie in (0, 1)".into()));
    }
    let one = BigRational::from(1);
    let at_delta = IntervalReal::point(delta.clone())
        .ln(budget)?
        .neg()
        .add_rational(&-one.clone());
    if at_delta.upper() <= &one {
        return Ok(IntervalReal::point(one));
    }
    if at_delta.lower() >= &one {
        return Ok(at_delta);
    }
    IntervalReal::new(one, at_delta.upper().clone())
}

/// Which monotone branch of `phi(x) = x ln x` to invert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiBranch {
    /// `(0, e^-1]`, strictly decreasing, range `[-1/e, 0)`.
    Lower,
    /// `[e^-1, inf)`, strictly increasing, range `[-1/e, inf)`.
    Upper,
}

/// Level-set inversion of `f(x) = x^x`: 0, 1, or 2 preimage enclosures,
/// resolved against the critical value `e^(-1/e)` and the level `1`.
///
/// When the input encloses the critical value entirely, the preimage set is
/// one connected component around `e^-1` and a single enclosure is returned.
pub fn invert_self_power(y: &IntervalReal, budget: u32) -> Result<Vec<IntervalReal>> {
    if y.lower() <= &BigRational::new() {
        return Err(Error::Domain("level must be positive".into()));
    }
    let one = BigRational::from(1);
    for attempt in 0..3 {
        let bits = budget << attempt;
        let min = min_value(bits + 16);
        let ei = inv_e(bits + 16);

        if y.upper() < min.lower() {
            return Ok(vec![]);
        }
        if y.lower() >= &one {
            // Increasing branch only; the decreasing branch never attains 1.
            let lo = bisect(y.lower(), true, bits)?;
            let hi = if y.is_point() {
                lo.clone()
            } else {
                bisect(y.upper(), true, bits)?
            };
            return Ok(vec![IntervalReal::new(
                lo.lower().clone(),
                hi.upper().clone(),
            )?]);
        }
        if y.lower() > min.upper() {
            if y.upper() < &one {
                // Two preimages, one per monotone branch.
                let dec_left = bisect(y.upper(), false, bits)?;
                let dec_right = if y.is_point() {
                    dec_left.clone()
                } else {
                    bisect(y.lower(), false, bits)?
                };
                let inc_left = bisect(y.lower(), true, bits)?;
                let inc_right = if y.is_point() {
                    inc_left.clone()
                } else {
                    bisect(y.upper(), true, bits)?
                };
                return Ok(vec![
                    IntervalReal::new(dec_left.lower().clone(), dec_right.upper().clone())?,
                    IntervalReal::new(inc_left.lower().clone(), inc_right.upper().clone())?,
                ]);
            }
            // Straddles 1: the decreasing branch's preimage runs off to 0.
            return Err(Error::TrichotomyAmbiguous(
                "level crosses 1: the preimage is unbounded toward 0".into(),
            ));
        }
        if y.lower() < min.lower() && y.upper() > min.upper() {
            if y.upper() >= &one {
                return Err(Error::TrichotomyAmbiguous(
                    "level covers both the minimum and 1".into(),
                ));
            }
            // One connected component around the critical point.
            let left = bisect(y.upper(), false, bits)?;
            let right = bisect(y.upper(), true, bits)?;
            let enc = IntervalReal::new(left.lower().clone(), right.upper().clone())?;
            debug_assert!(enc.intersects(&ei));
            return Ok(vec![enc]);
        }
        // The level overlaps the current enclosure of the minimum; retry
        // with a tighter minimum before giving up.
    }
    Err(Error::TrichotomyAmbiguous(
        "level indistinguishable from the critical value at this budget".into(),
    ))
}

/// Invert one monotone branch of `phi(x) = x ln x` by certified bisection.
pub fn invert_xlogx(u: &IntervalReal, branch: PhiBranch, budget: u32) -> Result<IntervalReal> {
    let neg_inv_e = inv_e(budget + 16).neg();
    if u.upper() < neg_inv_e.lower() {
        return Err(Error::Domain(
            "level below -1/e: phi never attains it".into(),
        ));
    }
    let zero = BigRational::new();
    match branch {
        PhiBranch::Lower => {
            if u.lower() >= &zero {
                return Err(Error::BranchEmpty("phi < 0 on the lower branch".into()));
            }
            if u.upper() >= &zero {
                return Err(Error::AmbiguousEnclosure(
                    "level straddles 0: lower-branch preimage is unbounded toward 0".into(),
                ));
            }
            if u.lower() <= neg_inv_e.upper() {
                // Touches the branch point: component ends at e^-1.
                let left = bisect_phi(u.upper(), false, budget)?;
                let right = inv_e(budget + 16);
                return IntervalReal::new(left.lower().clone(), right.upper().clone());
            }
            let left = bisect_phi(u.upper(), false, budget)?;
            let right = if u.is_point() {
                left.clone()
            } else {
                bisect_phi(u.lower(), false, budget)?
            };
            IntervalReal::new(left.lower().clone(), right.upper().clone())
        }
        PhiBranch::Upper => {
            if u.lower() <= neg_inv_e.upper() {
                let right = bisect_phi(u.upper(), true, budget)?;
                let left = inv_e(budget + 16);
                return IntervalReal::new(left.lower().clone(), right.upper().clone());
            }
            let left = bisect_phi(u.lower(), true, budget)?;
            let right = if u.is_point() {
                left.clone()
            } else {
                bisect_phi(u.upper(), true, budget)?
            };
            IntervalReal::new(left.lower().clone(), right.upper().clone())
        }
    }
}

/// Bisection for `x^x = target` on one monotone branch.
fn bisect(target: &BigRational, increasing: bool, budget: u32) -> Result<IntervalReal> {
    bisect_monotone(target, increasing, budget, &|m, bits| {
        self_power(&IntervalReal::point(m.clone()), bits)
    })
}

/// Bisection for `x ln x = target` on one monotone branch (increasing flag
/// selects the branch: false = `(0, e^-1)`, true = `(e^-1, inf)`).
fn bisect_phi(target: &BigRational, increasing: bool, budget: u32) -> Result<IntervalReal> {
    bisect_monotone(target, increasing, budget, &|m, bits| {
        phi(&IntervalReal::point(m.clone()), bits)
    })
}

fn bisect_monotone(
    target: &BigRational,
    increasing: bool,
    budget: u32,
    eval: &dyn Fn(&BigRational, u32) -> Result<IntervalReal>,
) -> Result<IntervalReal> {
    let ei = inv_e(budget + 16);
    // Initial bracket around the relevant branch.
    let (mut a, mut b) = if increasing {
        let mut hi = BigRational::from(2);
        loop {
            let v = eval(&hi, budget + 8)?;
            let ok = if increasing {
                v.lower() > target
            } else {
                v.upper() < target
            };
            if ok {
                break;
            }
            hi *= BigRational::from(2);
            if hi > 1u64 << 40 {
                return Err(Error::Domain("target out of reach on this branch".into()));
            }
        }
        (ei.upper().clone(), hi)
    } else {
        let mut lo = BigRational::from(ei.lower() / &BigRational::from(2));
        loop {
            let v = eval(&lo, budget + 8)?;
            // decreasing branch: move toward 0 until the value clears the target
            if v.lower() > target {
                break;
            }
            lo /= BigRational::from(2);
            if lo < BigRational::from((BigInt::from(1), BigInt::from(1) << 420)) {
                return Err(Error::Domain("target out of reach on this branch".into()));
            }
        }
        (lo, ei.lower().clone())
    };

    let tol = crate::rational::pow2(-(budget as i64));
    // Evaluation precision tracks the bracket width: coarse early, sharp late.
    let mut extra_bits = 0u32;
    let mut step = 0u32;
    let mut stall = 0u32;
    while BigRational::from(&b - &a) > tol {
        let mid = BigRational::from(&a + &b) / BigRational::from(2);
        let eval_bits = (48 + step + extra_bits).min(4 * budget.max(64));
        let v = eval(&mid, eval_bits)?;
        match v.cmp_rational(target) {
            Some(Ordering::Equal) => return IntervalReal::new(mid.clone(), mid),
            Some(ord) => {
                let go_right = if increasing {
                    ord == Ordering::Less
                } else {
                    ord == Ordering::Greater
                };
                if go_right {
                    a = mid;
                } else {
                    b = mid;
                }
                step += 1;
                stall = 0;
            }
            None => {
                // Enclosure still contains the target: sharpen the evaluation.
                extra_bits = (extra_bits.max(64)) * 2;
                stall += 1;
                if stall > 8 {
                    return Err(Error::IncomparableEnclosure);
                }
            }
        }
    }
    IntervalReal::new(a, b)
}

/// Verdict for one scanned rational against the self-power value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanVerdict {
    /// Certified `|xi^xi - a/b| < b^-tau` for the whole enclosure.
    Violation,
    /// Certified `|xi^xi - a/b| >= b^-tau` for the whole enclosure.
    Clear,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub a: String,
    pub b: u64,
    pub verdict: ScanVerdict,
    /// Exact rational bound backing the verdict: an upper bound on the gap
    /// for violations, a lower bound for clears.
    pub certified_gap: String,
}

/// A certified near-hit: `|xi^xi - a/b| < b^-tau` for the whole enclosure.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub a: String,
    pub b: u64,
    /// Certified upper bound on the gap (below `b^-tau`).
    pub certified_gap: String,
}

/// Exclusion-scan result: every rational `a/b` with `b <= b_max` near the
/// range of `xi^xi`, classified as violation or certified-clear.
#[derive(Debug, Clone, Serialize)]
pub struct ExclusionReport {
    pub xi_lower: String,
    pub xi_upper: String,
    pub tau: String,
    pub b_max: u64,
    pub rows: Vec<ScanRow>,
    pub violations: Vec<Violation>,
}

impl ExclusionReport {
    /// Fixed column order: `a,b,gap_sign,certified_gap`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b,gap_sign,certified_gap\n");
        for row in &self.rows {
            let sign = match row.verdict {
                ScanVerdict::Violation => -1,
                ScanVerdict::Clear => 1,
            };
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.a, row.b, sign, row.certified_gap
            ));
        }
        out
    }
}

/// Scan all `a/b`, `1 <= b <= b_max`, near the value range of `xi^xi` and
/// classify each pair. Pairs undecidable at this budget surface as an error
/// listing them.
pub fn non_liouville_scan(
    xi: &IntervalReal,
    tau: &BigRational,
    b_max: u64,
    budget: u32,
) -> Result<ExclusionReport> {
    scan_denominator_range(xi, tau, 1, b_max, budget)
}

/// Range-scoped scan over denominators `b_lo..=b_hi`; workers may partition
/// ranges and merge reports in `(b, a)` order.
pub fn scan_denominator_range(
    xi: &IntervalReal,
    tau: &BigRational,
    b_lo: u64,
    b_hi: u64,
    budget: u32,
) -> Result<ExclusionReport> {
    if *tau <= 2 {
        return Err(Error::Domain("the exclusion argument needs tau > 2".into()));
    }
    let ei = inv_e(budget + 16);
    if xi.lower() <= ei.upper() {
        return Err(Error::Domain(
            "xi must be certified inside (e^-1, 1]".into(),
        ));
    }
    if xi.upper() > &BigRational::from(1) {
        return Err(Error::Domain("xi must lie in (e^-1, 1]".into()));
    }
    let f = self_power(xi, budget + 16)?;
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut undecided = Vec::new();
    for b in b_lo.max(1)..=b_hi {
        let bound = IntervalReal::from_i64(b as i64).pow_rational(&-tau.clone(), budget + 16)?;
        // candidate numerators: reduced a/b inside the value range
        let lo = BigRational::from(f.lower() * &BigRational::from(b));
        let hi = BigRational::from(f.upper() * &BigRational::from(b));
        let a_lo = BigRational::from(lo.ceil_ref()).into_numer_denom().0;
        let a_hi = BigRational::from(hi.floor_ref()).into_numer_denom().0;
        let mut a = a_lo.clone();
        while a <= a_hi {
            if BigInt::from(a.gcd_ref(&BigInt::from(b))) != 1 {
                a += 1u32;
                continue;
            }
            let target = BigRational::from((a.clone(), BigInt::from(b)));
            let gap = f.add_rational(&-target).abs();
            if gap.upper() < bound.lower() {
                rows.push(ScanRow {
                    a: a.to_string(),
                    b,
                    verdict: ScanVerdict::Violation,
                    certified_gap: rat_to_str(gap.upper()),
                });
                violations.push(Violation {
                    a: a.to_string(),
                    b,
                    certified_gap: rat_to_str(gap.upper()),
                });
            } else if gap.lower() >= bound.upper() {
                rows.push(ScanRow {
                    a: a.to_string(),
                    b,
                    verdict: ScanVerdict::Clear,
                    certified_gap: rat_to_str(gap.lower()),
                });
            } else {
                undecided.push((a.to_string(), b));
            }
            a += 1u32;
        }
    }
    if !undecided.is_empty() {
        return Err(Error::PrecisionInsufficient { undecided });
    }
    Ok(ExclusionReport {
        xi_lower: rat_to_str(xi.lower()),
        xi_upper: rat_to_str(xi.upper()),
        tau: rat_to_str(tau),
        b_max: b_hi,
        rows,
        violations,
    })
}

/// Partial sum of the content series `sum b^(1-s*tau)` over a denominator
/// range, exact when the exponent is an integer.
#[derive(Debug, Clone)]
pub struct ContentSeriesPartial {
    pub exponent: BigRational,
    pub sum: SeriesSum,
    /// `true` iff `s*tau > 2`, the regime where the full series converges.
    pub convergent_regime: bool,
}

#[derive(Debug, Clone)]
pub enum SeriesSum {
    Exact(BigRational),
    Enclosure(IntervalReal),
}

pub fn content_series_partial(
    s: &BigRational,
    tau: &BigRational,
    b_range: (u64, u64),
    budget: u32,
) -> Result<ContentSeriesPartial> {
    let (b_lo, b_hi) = b_range;
    if b_lo < 1 || b_hi < b_lo {
        return Err(Error::Domain("empty or invalid denominator range".into()));
    }
    let st = BigRational::from(s * tau);
    let exponent = BigRational::from(1) - st.clone();
    let convergent_regime = st > 2;
    if exponent.is_integer() {
        let e32 = exponent
            .numer()
            .to_i32()
            .ok_or_else(|| Error::Unmaterializable("series exponent too large".into()))?;
        let mut sum = BigRational::new();
        for b in b_lo..=b_hi {
            sum += rat_pow(&BigRational::from(b), e32)?;
        }
        return Ok(ContentSeriesPartial {
            exponent,
            sum: SeriesSum::Exact(sum),
            convergent_regime,
        });
    }
    let mut sum = IntervalReal::point(BigRational::new());
    for b in b_lo..=b_hi {
        let term = IntervalReal::from_i64(b as i64).pow_rational(&exponent, budget + 8)?;
        sum = sum.add(&term);
    }
    Ok(ContentSeriesPartial {
        exponent,
        sum: SeriesSum::Enclosure(sum),
        convergent_regime,
    })
}
