//! Exponent schedules, ternary digit sequences, and the numbers they define:
//! `x = sum a_n 3^(-e_n)` with digits in {0, 2} on a strictly increasing
//! schedule. Provides exact truncations, certified tail bounds, and the
//! approximation-exponent diagnostics built on them.

use crate::error::{Error, Result};
use crate::interval::{exp_point, strict_integer_above, IntervalReal};
use crate::magnitude::{ExpSign, MagBase, Magnitude, DEFAULT_CAP_BITS};
use crate::rational::{int_pow, BigInt, BigRational};
use serde::{Deserialize, Serialize};
use std::sync::Mutex;

/// Base of the digit expansion; schedules vary, the radix does not.
const RADIX: u32 = 3;

/// Bits per unit exponent of the radix, rounded up: `ceil(log2 3)`.
const RADIX_BITS: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `e_1 = 3`, `e_{n+1} = 3^{e_n}`.
    PaperTower,
    /// `e_1 = e1`, `e_{n+1} = base^{e_n}`.
    GeneralTower { base: u32, e1: u64 },
    /// `e_n = (n + offset)!`.
    Factorial { offset: u32 },
    /// Explicit strictly increasing exponent list.
    Custom { exponents: Vec<u64> },
}

/// A schedule exponent: exact integer when it fits the materialization cap,
/// tower magnitude beyond that.
#[derive(Debug, Clone, PartialEq)]
pub enum ExponentValue {
    Int(BigInt),
    Deep(Magnitude),
}

impl ExponentValue {
    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            ExponentValue::Int(n) => Some(n),
            ExponentValue::Deep(_) => None,
        }
    }

    pub fn to_magnitude(&self) -> Magnitude {
        match self {
            ExponentValue::Int(n) => {
                Magnitude::from_rational(BigRational::from(n)).expect("exponents are positive")
            }
            ExponentValue::Deep(m) => m.clone(),
        }
    }

    /// Certified rational lower bound (clamped for deep towers).
    pub fn lower_bound(&self) -> BigRational {
        match self {
            ExponentValue::Int(n) => BigRational::from(n),
            ExponentValue::Deep(m) => m.rational_lower_bound(),
        }
    }
}

/// A strictly increasing exponent schedule with memoized terms.
#[derive(Debug)]
pub struct ExponentSchedule {
    kind: ScheduleKind,
    cap_bits: u64,
    memo: Mutex<Vec<ExponentValue>>,
}

impl Clone for ExponentSchedule {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind.clone(),
            cap_bits: self.cap_bits,
            memo: Mutex::new(self.memo.lock().unwrap().clone()),
        }
    }
}

impl PartialEq for ExponentSchedule {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.cap_bits == other.cap_bits
    }
}

impl ScheduleKind {
    /// Parse the CLI-facing spec: `paper | factorial:K | tower:B,E1 |
    /// custom:3,9,81`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        if spec == "paper" {
            return Ok(ScheduleKind::PaperTower);
        }
        if spec == "factorial" {
            return Ok(ScheduleKind::Factorial { offset: 1 });
        }
        if let Some(rest) = spec.strip_prefix("factorial:") {
            let offset: u32 = rest
                .parse()
                .map_err(|_| Error::Malformed(format!("bad factorial offset {rest:?}")))?;
            return Ok(ScheduleKind::Factorial { offset });
        }
        if let Some(rest) = spec.strip_prefix("tower:") {
            let (b, e1) = rest
                .split_once(',')
                .ok_or_else(|| Error::Malformed("tower spec is tower:BASE,E1".into()))?;
            return Ok(ScheduleKind::GeneralTower {
                base: b
                    .trim()
                    .parse()
                    .map_err(|_| Error::Malformed("bad tower base".into()))?,
                e1: e1
                    .trim()
                    .parse()
                    .map_err(|_| Error::Malformed("bad tower e1".into()))?,
            });
        }
        if let Some(rest) = spec.strip_prefix("custom:") {
            let exponents = rest
                .split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Malformed("bad custom exponent list".into()))?;
            return Ok(ScheduleKind::Custom { exponents });
        }
        Err(Error::Malformed(format!(
            "unknown schedule {spec:?}; use paper | factorial:K | tower:B,E1 | custom:LIST"
        )))
    }
}

impl DigitSequence {
    /// Parse the CLI-facing spec: `all2 | all0 | period:DIGITS |
    /// prefix:DIGITS,tail:(all2|all0|period:DIGITS)`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        fn digit_string(s: &str) -> Result<Vec<u8>> {
            s.chars()
                .map(|c| match c {
                    '0' => Ok(0u8),
                    '2' => Ok(2u8),
                    _ => Err(Error::Malformed(format!("digit {c:?} is not 0 or 2"))),
                })
                .collect()
        }
        fn tail(spec: &str) -> Result<TailRule> {
            match spec {
                "all2" => Ok(TailRule::Constant { digit: 2 }),
                "all0" => Ok(TailRule::Constant { digit: 0 }),
                _ => {
                    if let Some(rest) = spec.strip_prefix("period:") {
                        Ok(TailRule::Periodic {
                            pattern: digit_string(rest)?,
                        })
                    } else {
                        Err(Error::Malformed(format!("unknown tail rule {spec:?}")))
                    }
                }
            }
        }
        if let Some(rest) = spec.strip_prefix("prefix:") {
            let (prefix, t) = rest
                .split_once(",tail:")
                .ok_or_else(|| Error::Malformed("digit spec is prefix:DIGITS,tail:RULE".into()))?;
            return DigitSequence::new(digit_string(prefix)?, tail(t)?);
        }
        DigitSequence::new(Vec::new(), tail(spec)?)
    }
}

impl ExponentSchedule {
    pub fn new(kind: ScheduleKind) -> Result<Self> {
        Self::with_cap(kind, DEFAULT_CAP_BITS)
    }

    pub fn with_cap(kind: ScheduleKind, cap_bits: u64) -> Result<Self> {
        match &kind {
            ScheduleKind::PaperTower => {}
            ScheduleKind::GeneralTower { base, e1 } => {
                if *base < 2 || *e1 < 2 {
                    return Err(Error::Domain("tower needs base >= 2 and e1 >= 2".into()));
                }
            }
            ScheduleKind::Factorial { offset } => {
                if *offset < 1 {
                    return Err(Error::Domain("factorial schedule needs offset >= 1".into()));
                }
            }
            ScheduleKind::Custom { exponents } => {
                if exponents.is_empty() {
                    return Err(Error::Domain("custom schedule is empty".into()));
                }
                if exponents[0] < 1 {
                    return Err(Error::Domain("exponents must be >= 1".into()));
                }
                if exponents.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Domain(
                        "custom schedule must strictly increase".into(),
                    ));
                }
            }
        }
        Ok(Self {
            kind,
            cap_bits,
            memo: Mutex::new(Vec::new()),
        })
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn cap_bits(&self) -> u64 {
        self.cap_bits
    }

    /// The n-th exponent (1-based): exact integer under the cap, level-escalated
    /// magnitude beyond it.
    pub fn exponent(&self, n: usize) -> Result<ExponentValue> {
        if n == 0 {
            return Err(Error::Domain("schedule indices are 1-based".into()));
        }
        let mut memo = self.memo.lock().unwrap();
        while memo.len() < n {
            let next = self.compute(memo.len() + 1, &memo)?;
            memo.push(next);
        }
        Ok(memo[n - 1].clone())
    }

    fn compute(&self, n: usize, memo: &[ExponentValue]) -> Result<ExponentValue> {
        match &self.kind {
            ScheduleKind::PaperTower => self.tower_step(3, 3, n, memo),
            ScheduleKind::GeneralTower { base, e1 } => self.tower_step(*base, *e1, n, memo),
            ScheduleKind::Factorial { offset } => {
                let k = n as u64 + u64::from(*offset);
                let k32 = u32::try_from(k)
                    .map_err(|_| Error::Unmaterializable(format!("factorial index {k}")))?;
                Ok(ExponentValue::Int(BigInt::from(BigInt::factorial(k32))))
            }
            ScheduleKind::Custom { exponents } => match exponents.get(n - 1) {
                Some(e) => Ok(ExponentValue::Int(BigInt::from(*e))),
                None => Err(Error::Domain(format!(
                    "custom schedule has {} terms; index {n} requested",
                    exponents.len()
                ))),
            },
        }
    }

    fn tower_step(
        &self,
        base: u32,
        e1: u64,
        n: usize,
        memo: &[ExponentValue],
    ) -> Result<ExponentValue> {
        if n == 1 {
            return Ok(ExponentValue::Int(BigInt::from(e1)));
        }
        let prev = &memo[n - 2];
        match prev {
            ExponentValue::Int(e) => {
                let bits_needed = e
                    .to_u64()
                    .map(|e_u| e_u.saturating_mul(base_bits(base)))
                    .unwrap_or(u64::MAX);
                if bits_needed <= self.cap_bits {
                    let e32 = e.to_u32().expect("bounded by cap");
                    Ok(ExponentValue::Int(int_pow(&BigInt::from(base), e32)))
                } else {
                    let mag = Magnitude::from_power(
                        MagBase::Int(base),
                        ExpSign::Pos,
                        Magnitude::from_rational(BigRational::from(e))
                            .expect("exponents are positive"),
                        self.cap_bits,
                    )?;
                    Ok(ExponentValue::Deep(mag))
                }
            }
            ExponentValue::Deep(m) => {
                let mag = Magnitude::from_power(
                    MagBase::Int(base),
                    ExpSign::Pos,
                    m.clone(),
                    self.cap_bits,
                )?;
                Ok(ExponentValue::Deep(mag))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TailRule {
    Constant { digit: u8 },
    Periodic { pattern: Vec<u8> },
}

/// Digits in {0, 2}: an explicit finite prefix plus a tail rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitSequence {
    prefix: Vec<u8>,
    tail: TailRule,
}

impl DigitSequence {
    pub fn new(prefix: Vec<u8>, tail: TailRule) -> Result<Self> {
        let valid = |d: &u8| *d == 0 || *d == 2;
        if !prefix.iter().all(valid) {
            return Err(Error::Domain("digits must be 0 or 2".into()));
        }
        match &tail {
            TailRule::Constant { digit } => {
                if !valid(digit) {
                    return Err(Error::Domain("digits must be 0 or 2".into()));
                }
            }
            TailRule::Periodic { pattern } => {
                if pattern.is_empty() || !pattern.iter().all(valid) {
                    return Err(Error::Domain(
                        "periodic tail must be nonempty over {0,2}".into(),
                    ));
                }
            }
        }
        Ok(Self { prefix, tail })
    }

    pub fn all_two() -> Self {
        Self {
            prefix: Vec::new(),
            tail: TailRule::Constant { digit: 2 },
        }
    }

    pub fn all_zero() -> Self {
        Self {
            prefix: Vec::new(),
            tail: TailRule::Constant { digit: 0 },
        }
    }

    pub fn digit(&self, n: usize) -> u8 {
        assert!(n >= 1, "digit indices are 1-based");
        if n <= self.prefix.len() {
            return self.prefix[n - 1];
        }
        match &self.tail {
            TailRule::Constant { digit } => *digit,
            TailRule::Periodic { pattern } => pattern[(n - self.prefix.len() - 1) % pattern.len()],
        }
    }

    /// Structural check on the rule, not an enumeration.
    pub fn has_infinitely_many_twos(&self) -> bool {
        match &self.tail {
            TailRule::Constant { digit } => *digit == 2,
            TailRule::Periodic { pattern } => pattern.contains(&2),
        }
    }

    /// First index strictly after `m` carrying digit 2, if any exists.
    pub fn first_two_after(&self, m: usize) -> Option<usize> {
        for n in (m + 1)..=self.prefix.len() {
            if self.prefix[n - 1] == 2 {
                return Some(n);
            }
        }
        let start = (m + 1).max(self.prefix.len() + 1);
        match &self.tail {
            TailRule::Constant { digit: 2 } => Some(start),
            TailRule::Constant { .. } => None,
            TailRule::Periodic { pattern } => {
                if !pattern.contains(&2) {
                    return None;
                }
                (start..start + pattern.len()).find(|n| self.digit(*n) == 2)
            }
        }
    }
}

/// Generic plus digit-aware tail bounds on `x - r_m`.
#[derive(Debug, Clone)]
pub struct TailBound {
    /// `3 * 3^(-e_{m+1})`: valid for every digit choice.
    pub generic: Magnitude,
    /// `3 * 3^(-e_{n'})` with `n'` the first index past `m` carrying digit 2;
    /// zero when the tail has no 2 at all.
    pub refined: Magnitude,
}

/// Guaranteed-vs-achieved exponent data at one truncation level.
#[derive(Debug, Clone)]
pub struct ExponentReport {
    /// `(e_{m+1} - 1) / e_m`, exact when both exponents materialize.
    pub guaranteed: BoundValue,
    /// `-log|x - r_m| / log q_m` as a certified enclosure, when the deep
    /// truncation is materializable and the tail is provably nonzero.
    pub achieved: Option<IntervalReal>,
    /// False for degenerate schedules whose guaranteed exponent stays < 2.
    pub liouville_grade: bool,
}

#[derive(Debug, Clone)]
pub enum BoundValue {
    Exact(BigRational),
    /// Certified lower bound only (the exact value does not materialize).
    AtLeast(BigRational),
}

impl BoundValue {
    pub fn lower(&self) -> &BigRational {
        match self {
            BoundValue::Exact(r) | BoundValue::AtLeast(r) => r,
        }
    }
}

/// Outcome of the strengthened-rate check at one level.
#[derive(Debug, Clone)]
pub struct EpsilonStrongReport {
    pub holds: bool,
    /// Required base-`q_m` exponent `(ln q_m)^(1+eps)`.
    pub required_exponent: IntervalReal,
    /// Achieved base-`q_m` exponent `(e_{n'} - 1) / e_m`.
    pub achieved_exponent: BoundValue,
    /// Set when `eps = 0`: the definition requires `eps > 0`, report only.
    pub out_of_definition: bool,
}

/// A number `sum a_n 3^(-e_n)` given by digits on a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiffyNumber {
    schedule: ExponentSchedule,
    digits: DigitSequence,
}

impl SpiffyNumber {
    pub fn new(schedule: ExponentSchedule, digits: DigitSequence) -> Self {
        Self { schedule, digits }
    }

    pub fn schedule(&self) -> &ExponentSchedule {
        &self.schedule
    }

    pub fn digits(&self) -> &DigitSequence {
        &self.digits
    }

    /// The designation from the defining construction: tower schedule with
    /// infinitely many 2-digits.
    pub fn is_spiffy_constant(&self) -> bool {
        matches!(self.schedule.kind(), ScheduleKind::PaperTower)
            && self.digits.has_infinitely_many_twos()
    }

    /// Exact truncation `r_m = sum_{n<=m} a_n 3^(-e_n)` with denominator
    /// dividing `3^{e_m}`.
    pub fn truncate(&self, m: usize) -> Result<BigRational> {
        if m == 0 {
            return Err(Error::Domain("truncation level must be >= 1".into()));
        }
        let cap = self.schedule.cap_bits();
        let mut exps = Vec::with_capacity(m);
        for n in 1..=m {
            match self.schedule.exponent(n)? {
                ExponentValue::Int(e) => exps.push(e),
                ExponentValue::Deep(_) => {
                    return Err(Error::Unmaterializable(format!(
                        "exponent e_{n} exceeds the materialization cap"
                    )))
                }
            }
        }
        let e_m = &exps[m - 1];
        let denom_bits = e_m
            .to_u64()
            .map(|e| e.saturating_mul(RADIX_BITS))
            .unwrap_or(u64::MAX);
        if denom_bits > cap {
            return Err(Error::Unmaterializable(format!(
                "3^e_{m} needs about {denom_bits} bits, beyond the cap of {cap}"
            )));
        }
        // Horner over the gaps: N = ((a_1 * 3^{e_2-e_1} + a_2) * ...) + a_m.
        let mut num = BigInt::new();
        let mut prev = BigInt::new();
        for (n, e) in exps.iter().enumerate() {
            let gap = BigInt::from(e - &prev);
            let gap32 = gap
                .to_u32()
                .ok_or_else(|| Error::Unmaterializable("exponent gap exceeds u32".into()))?;
            num *= int_pow(&BigInt::from(RADIX), gap32);
            num += u32::from(self.digits.digit(n + 1));
            prev = e.clone();
        }
        let e32 = e_m.to_u32().expect("bounded by cap");
        Ok(BigRational::from((num, int_pow(&BigInt::from(RADIX), e32))))
    }

    /// Tail bounds `x - r_m <= 3*3^(-e_{m+1})` and the digit-aware refinement.
    pub fn tail_bound(&self, m: usize) -> Result<TailBound> {
        let cap = self.schedule.cap_bits();
        let three = BigRational::from(RADIX);
        let generic = {
            let e = self.schedule.exponent(m + 1)?;
            Magnitude::from_power(MagBase::Int(RADIX), ExpSign::Neg, e.to_magnitude(), cap)?
                .mul_rational(&three)?
        };
        let refined = match self.digits.first_two_after(m) {
            None => Magnitude::zero(),
            Some(np) => {
                let e = self.schedule.exponent(np)?;
                Magnitude::from_power(MagBase::Int(RADIX), ExpSign::Neg, e.to_magnitude(), cap)?
                    .mul_rational(&three)?
            }
        };
        Ok(TailBound { generic, refined })
    }

    /// `[r_m, r_m + tail]` as an enclosure of the value.
    pub fn evaluate_enclosure(&self, m: usize) -> Result<IntervalReal> {
        let r = self.truncate(m)?;
        let tail = self.tail_bound(m)?.refined;
        let up = match tail.to_rational(self.schedule.cap_bits()) {
            Some(t) => t,
            None => tail
                .rational_upper_bound()
                .unwrap_or_else(|| BigRational::from((1, u64::MAX))),
        };
        IntervalReal::new(r.clone(), r + up)
    }

    /// Guaranteed and (when computable) achieved approximation exponents of
    /// `r_m` in base `q_m`.
    pub fn liouville_exponent_lower(&self, m: usize, budget: u32) -> Result<ExponentReport> {
        let e_m = self.schedule.exponent(m)?;
        let e_m_int = e_m
            .as_int()
            .ok_or_else(|| Error::Unmaterializable(format!("exponent e_{m} is level-escalated")))?
            .clone();
        let e_next = self.schedule.exponent(m + 1)?;
        let guaranteed = match &e_next {
            ExponentValue::Int(e) => {
                BoundValue::Exact(BigRational::from((e.clone() - 1u32, e_m_int.clone())))
            }
            ExponentValue::Deep(mag) => {
                let lb = mag.rational_lower_bound() - BigRational::from(1);
                BoundValue::AtLeast(lb / BigRational::from(&e_m_int))
            }
        };
        let liouville_grade = guaranteed.lower() >= &BigRational::from(2);

        let achieved = self.achieved_exponent(m, &e_m_int, budget).ok().flatten();
        Ok(ExponentReport {
            guaranteed,
            achieved,
            liouville_grade,
        })
    }

    fn achieved_exponent(
        &self,
        m: usize,
        e_m: &BigInt,
        budget: u32,
    ) -> Result<Option<IntervalReal>> {
        // Deepest materializable level up to m+3.
        let mut deep = m;
        for j in (m + 1)..=(m + 3) {
            if self.truncate(j).is_ok() {
                deep = j;
            } else {
                break;
            }
        }
        if deep == m {
            return Ok(None);
        }
        let r_m = self.truncate(m)?;
        let r_deep = self.truncate(deep)?;
        let lo = BigRational::from(&r_deep - &r_m);
        if lo == 0 {
            return Ok(None); // tail indistinguishable from zero at this depth
        }
        let tail_up = match self.tail_bound(deep)?.refined.rational_upper_bound() {
            Some(t) => t,
            None => return Ok(None),
        };
        let dist = IntervalReal::new(lo.clone(), lo + tail_up)?;
        let neg_ln = dist.ln(budget)?.neg();
        let ln_q = IntervalReal::point(BigRational::from(e_m))
            .mul(&IntervalReal::point(BigRational::from(RADIX)).ln(budget)?);
        Ok(Some(neg_ln.mul(&ln_q.recip()?)))
    }

    /// Check the strengthened rate `tail <= q_m^(-(ln q_m)^(1+eps))`.
    pub fn epsilon_strong_check(
        &self,
        eps: &BigRational,
        m: usize,
        budget: u32,
    ) -> Result<EpsilonStrongReport> {
        if *eps < 0 {
            return Err(Error::Domain("epsilon must be non-negative".into()));
        }
        let e_m = self.schedule.exponent(m)?;
        let e_m_int = e_m
            .as_int()
            .ok_or_else(|| Error::Unmaterializable(format!("exponent e_{m} is level-escalated")))?
            .clone();
        let np = self
            .digits
            .first_two_after(m)
            .ok_or_else(|| Error::Domain("digit tail has no 2: nothing to certify".into()))?;
        let e_np = self.schedule.exponent(np)?;

        // required R = (e_m ln 3)^(1+eps); check e_{n'} - 1 >= e_m * R.
        let ln3 = IntervalReal::point(BigRational::from(RADIX)).ln(budget)?;
        let ln_q = ln3.mul_rational(&BigRational::from(&e_m_int));
        let one_plus = BigRational::from(&BigRational::from(1) + eps);
        let required = ln_q.pow_rational(&one_plus, budget)?;
        let rhs = required.mul_rational(&BigRational::from(&e_m_int));

        let achieved = match &e_np {
            ExponentValue::Int(e) => {
                BoundValue::Exact(BigRational::from((e.clone() - 1u32, e_m_int.clone())))
            }
            ExponentValue::Deep(mag) => {
                let lb = mag.rational_lower_bound() - BigRational::from(1);
                BoundValue::AtLeast(lb / BigRational::from(&e_m_int))
            }
        };

        let holds = match &e_np {
            ExponentValue::Int(e) => {
                let lhs = BigRational::from(e.clone() - 1u32);
                match IntervalReal::point(lhs).try_cmp(&rhs) {
                    Some(std::cmp::Ordering::Less) => false,
                    Some(_) => true,
                    None => return Err(Error::IncomparableEnclosure),
                }
            }
            ExponentValue::Deep(mag) => {
                let lhs = mag.rational_lower_bound() - BigRational::from(1);
                if &lhs > rhs.upper() {
                    true
                } else {
                    return Err(Error::IncomparableEnclosure);
                }
            }
        };

        Ok(EpsilonStrongReport {
            holds,
            required_exponent: required,
            achieved_exponent: achieved,
            out_of_definition: *eps == 0,
        })
    }
}

/// Smallest integer strictly greater than `3 N^{1/(1+eps)} + 2`.
pub fn prop11_threshold(n: u64, eps: &BigRational, budget: u32) -> Result<BigInt> {
    if n < 1 {
        return Err(Error::Domain("N must be >= 1".into()));
    }
    if *eps < 0 {
        return Err(Error::Domain("epsilon must be non-negative".into()));
    }
    // 1 + eps = p/q in lowest terms; t = (N^q)^(1/p).
    let one_plus = BigRational::from(&BigRational::from(1) + eps);
    let (p, q) = (one_plus.numer().clone(), one_plus.denom().clone());
    let q32 = q
        .to_u32()
        .ok_or_else(|| Error::Domain("epsilon denominator too large".into()))?;
    let p32 = p
        .to_u32()
        .ok_or_else(|| Error::Domain("epsilon numerator too large".into()))?;
    let n_pow_q = int_pow(&BigInt::from(n), q32);
    let root = BigInt::from(n_pow_q.root_ref(p32));
    if int_pow(&root, p32) == n_pow_q {
        // t is exactly an integer: the bound 3t + 2 is an integer too.
        return Ok(root * 3u32 + 3u32);
    }
    // Irrational t: certify floor(3t + 2) from an enclosure and tighten as needed.
    for attempt in 0..4 {
        let bits = budget << attempt;
        let ln_n = IntervalReal::from_i64(n as i64).ln(bits)?;
        let exponent = ln_n.mul_rational(&BigRational::from((q.clone(), p.clone())));
        let (lo, _) = exp_point(exponent.lower(), bits)?;
        let (_, hi) = exp_point(exponent.upper(), bits)?;
        let t = IntervalReal::new(lo, hi)?;
        let bound = t
            .mul_rational(&BigRational::from(3))
            .add_rational(&BigRational::from(2));
        match strict_integer_above(&bound) {
            Ok(k) => return Ok(k),
            Err(_) => continue,
        }
    }
    Err(Error::IncomparableEnclosure)
}

fn base_bits(b: u32) -> u64 {
    u64::from(64 - u64::from(b).leading_zeros())
}
