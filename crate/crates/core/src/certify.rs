//! Stage-wise approximation certificates and their verifier.
//!
//! Builders assemble certified rational-approximation data for tuned digit
//! constructions, self-powers over forced-quotient targets, integer
//! polynomial images, and pairwise powers over synchronized anchors. The
//! verifier re-derives every bound from the raw fields using only magnitude
//! and interval arithmetic; stored values are never trusted, so any
//! perturbation of a field is caught as a mismatch or a failed comparison.

use crate::diophantine::{exp_taylor_rational, jarnik_generate, ForcedSchedule, JarnikTarget};
use crate::error::{Error, Result};
use crate::interval::IntervalReal;
use crate::magnitude::Magnitude;
use crate::poly::IntPolynomial;
use crate::rational::{int_from_str, int_pow, rat_to_str, BigInt, BigRational};
use crate::schedule::{DigitSequence, ExponentSchedule, ExponentValue, ScheduleKind, SpiffyNumber};
use crate::selfpower;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

/// Execution parameters recorded in every certificate so the verifier can
/// re-derive bit-identical values, plus measured constants from the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConstants {
    pub budget_bits: u32,
    pub cap_bits: u64,
    #[serde(default)]
    pub measured: BTreeMap<String, String>,
}

/// Top-level certificate file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)] // built once, moved rarely
pub enum Certificate {
    Tuned(TunedCertificate),
    Selfpower(SelfPowerCertificate),
    PolyClosure(PolyCertificate),
    Pairwise(PairwiseCertificate),
}

impl CertificateFile {
    pub fn new(certificate: Certificate) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            certificate,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: CertificateFile =
            serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::Malformed(format!(
                "unsupported schema version {}",
                file.schema_version
            )));
        }
        Ok(file)
    }
}

// --- tuned stages -------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckVerdict {
    Pass,
    Fail,
    Undecidable,
}

/// One re-derivable inequality: certified gap enclosure against an exact
/// rational bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub bound: String,
    pub gap: IntervalReal,
    pub verdict: CheckVerdict,
}

fn check_against(gap: &IntervalReal, bound: &BigRational) -> CheckVerdict {
    if gap.upper() <= bound {
        CheckVerdict::Pass
    } else if gap.lower() > bound {
        CheckVerdict::Fail
    } else {
        CheckVerdict::Undecidable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedChecks {
    /// `|phi(r_mj) - U/V| <= V^(-j^2)`.
    pub cond_ii: CheckRecord,
    /// `|e^(U/V) - A/B| <= B^(-j^2)`.
    pub cond_iii: CheckRecord,
    /// `V >= floor(e^(j^3))`.
    pub v_floor_required: String,
    pub v_floor_pass: bool,
    /// `B <= V^j` (the exact form of `log B <= j log V`).
    pub size_coupling_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedStage {
    pub j: u32,
    pub m_j: usize,
    pub u: String,
    pub v: String,
    pub a: String,
    pub b: String,
    pub checks: TunedChecks,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TunedCertificate {
    pub schedule: ScheduleKind,
    pub digits: DigitSequence,
    pub stages: Vec<TunedStage>,
    pub constants: RunConstants,
    pub verdict: String,
}

/// `V_j = floor(e^(j^3))` by certified exponential, `B_j = V_j^j` exactly.
pub fn build_tuned_parameters(j: u32, budget: u32) -> Result<(BigInt, BigInt)> {
    if j < 1 {
        return Err(Error::Domain("stage index must be >= 1".into()));
    }
    let cube = BigRational::from(u64::from(j).pow(3));
    let v = certified_floor_of_exp(&cube, budget)?;
    let b = int_pow(&v, j);
    Ok((v, b))
}

/// Floor of `e^x` for rational `x >= 0`, tightening until the floor is
/// pinned.
fn certified_floor_of_exp(x: &BigRational, budget: u32) -> Result<BigInt> {
    for attempt in 0..4 {
        let bits = budget << attempt;
        let (lo, hi) = crate::interval::exp_point(x, bits)?;
        let f_lo = BigRational::from(lo.floor_ref());
        let f_hi = BigRational::from(hi.floor_ref());
        if f_lo == f_hi {
            return Ok(f_lo.into_numer_denom().0);
        }
    }
    Err(Error::IncomparableEnclosure)
}

/// First continued-fraction convergent of the enclosure whose denominator
/// reaches `min_den`.
fn first_convergent_with_denominator_at_least(
    alpha: &IntervalReal,
    min_den: &BigInt,
) -> Result<(BigInt, BigInt)> {
    let (mut p_prev, mut q_prev) = (BigInt::from(1), BigInt::new());
    let f_lo = BigRational::from(alpha.lower().floor_ref());
    let f_hi = BigRational::from(alpha.upper().floor_ref());
    if f_lo != f_hi {
        return Err(Error::AmbiguousEnclosure("integer part undecided".into()));
    }
    let mut p = f_lo.numer().clone();
    let mut q = BigInt::from(1);
    let mut current = alpha.add_rational(&-f_lo);
    while q < *min_den {
        if current.lower() <= &BigRational::new() {
            return Err(Error::AmbiguousEnclosure(
                "expansion exhausted before reaching the denominator target".into(),
            ));
        }
        let inv = current.recip()?;
        let a_lo = BigRational::from(inv.lower().floor_ref());
        let a_hi = BigRational::from(inv.upper().floor_ref());
        if a_lo != a_hi {
            return Err(Error::AmbiguousEnclosure(
                "partial quotient undecided".into(),
            ));
        }
        let a = a_lo.numer().clone();
        let p_next = BigInt::from(&a * &p) + &p_prev;
        let q_next = BigInt::from(&a * &q) + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        current = inv.add_rational(&-a_lo);
    }
    Ok((p, q))
}

/// Build one tuned stage: best-effort `U/V` and `A/B` from convergents, with
/// every condition checked honestly (conditions (ii)/(iii) generally pass
/// only at `j = 1`; the records say what was achieved).
pub fn build_tuned_stage(x: &SpiffyNumber, j: u32, m_j: usize, budget: u32) -> Result<TunedStage> {
    let r = x.truncate(m_j)?;
    if r <= 0 {
        return Err(Error::Domain(
            "tuned stages need a positive truncation".into(),
        ));
    }
    let phi = selfpower::phi(&IntervalReal::point(r), budget * 2)?;
    let (v_floor, _) = build_tuned_parameters(j, budget)?;
    let (u, v) = first_convergent_with_denominator_at_least(&phi, &v_floor)?;
    let uv = BigRational::from((u.clone(), v.clone()));

    let exp_uv = IntervalReal::point(uv.clone()).exp(budget * 2)?;
    let b_cap = int_pow(&v, j);
    let (a, b) = crate::diophantine::dirichlet_approx(&exp_uv, &b_cap)?;
    let ab = BigRational::from((a.clone(), b.clone()));

    let j_sq = j * j;
    let cond_ii_bound = BigRational::from(int_pow(&v, j_sq)).recip();
    let cond_ii_gap = phi.add_rational(&-uv.clone()).abs();
    let cond_iii_bound = BigRational::from(int_pow(&b, j_sq)).recip();
    let cond_iii_gap = exp_uv.add_rational(&-ab).abs();

    Ok(TunedStage {
        j,
        m_j,
        u: u.to_string(),
        v: v.to_string(),
        a: a.to_string(),
        b: b.to_string(),
        checks: TunedChecks {
            cond_ii: CheckRecord {
                bound: rat_to_str(&cond_ii_bound),
                verdict: check_against(&cond_ii_gap, &cond_ii_bound),
                gap: cond_ii_gap,
            },
            cond_iii: CheckRecord {
                bound: rat_to_str(&cond_iii_bound),
                verdict: check_against(&cond_iii_gap, &cond_iii_bound),
                gap: cond_iii_gap,
            },
            v_floor_required: v_floor.to_string(),
            v_floor_pass: v >= v_floor,
            size_coupling_pass: b <= int_pow(&v, j),
        },
    })
}

/// Per-stage verdicts for the three tuned conditions.
#[derive(Debug, Clone, Serialize)]
pub struct TunedStageVerdict {
    pub j: u32,
    pub cond_ii: CheckVerdict,
    pub cond_iii: CheckVerdict,
    pub v_floor: bool,
    pub size_coupling: bool,
}

/// Re-derive every tuned-stage inequality from raw fields.
pub fn verify_tuned_certificate(
    stages: &[TunedStage],
    x: &SpiffyNumber,
    budget: u32,
) -> Result<Vec<TunedStageVerdict>> {
    let mut out = Vec::with_capacity(stages.len());
    for st in stages {
        let u = int_from_str(&st.u)?;
        let v = int_from_str(&st.v)?;
        let a = int_from_str(&st.a)?;
        let b = int_from_str(&st.b)?;
        if v < 1 || b < 1 {
            return Err(Error::Malformed(
                "tuned stage denominators must be >= 1".into(),
            ));
        }
        let r = x.truncate(st.m_j)?;
        if r <= 0 {
            return Err(Error::Malformed("tuned stage truncation is zero".into()));
        }
        let uv = BigRational::from((u, v.clone()));
        let ab = BigRational::from((a, b.clone()));
        let j_sq = st.j * st.j;

        let phi = selfpower::phi(&IntervalReal::point(r), budget * 2)?;
        let gap_ii = phi.add_rational(&-uv.clone()).abs();
        let bound_ii = BigRational::from(int_pow(&v, j_sq)).recip();

        let exp_uv = IntervalReal::point(uv).exp(budget * 2)?;
        let gap_iii = exp_uv.add_rational(&-ab).abs();
        let bound_iii = BigRational::from(int_pow(&b, j_sq)).recip();

        let (v_floor, _) = build_tuned_parameters(st.j, budget)?;

        out.push(TunedStageVerdict {
            j: st.j,
            cond_ii: check_against(&gap_ii, &bound_ii),
            cond_iii: check_against(&gap_iii, &bound_iii),
            v_floor: v >= v_floor,
            size_coupling: b <= int_pow(&v, st.j),
        });
    }
    Ok(out)
}

/// Error decomposition for a tuned self-power stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorChain {
    /// `M_phi * (digit-aware tail)`: the tail pushed through `phi`.
    pub tail_through_phi: Magnitude,
    /// `V^(-j^2)`.
    pub target_gap: Magnitude,
    /// `B^(-j^2)`.
    pub exp_gap: Magnitude,
    /// Certified sum of the three terms.
    pub total: Magnitude,
    /// Index (0..3) of the dominant term.
    pub dominant: usize,
}

/// Upper bound on `|phi(x) - phi(r_m)|` via the digit-aware tail and the
/// Lipschitz bound of `phi` below the truncation point.
fn phi_tail_term(x: &SpiffyNumber, m: usize, budget: u32) -> Result<Magnitude> {
    let tail = x.tail_bound(m)?.refined;
    if tail.is_zero() {
        return Ok(Magnitude::zero());
    }
    let r = x.truncate(m)?;
    if r > 0 {
        // M_phi = max(1, -ln r - 1), rounded up to a rational.
        let m_phi = selfpower::phi_lipschitz(&r, budget)?;
        return tail.mul_rational(m_phi.upper());
    }
    // r_m = 0: x lies in [2*3^(-e'), 3*3^(-e')] with e' the first live
    // exponent, so |phi(x)| = x|ln x| <= tail * 2e'.
    let np = x
        .digits()
        .first_two_after(m)
        .expect("nonzero tail implies a live digit");
    match x.schedule().exponent(np)? {
        ExponentValue::Int(e) => {
            let factor = BigRational::from(2u32) * BigRational::from(&e);
            tail.mul_rational(&factor)
        }
        ExponentValue::Deep(e_mag) => {
            // 2e * 3^(-e) <= 3^(-e/2) for e >= 4: halve the exponent instead
            // of scaling the mantissa (exact in tower form).
            let half = e_mag.mul_rational(&BigRational::from((1u32, 2u32)))?;
            Magnitude::from_power(
                crate::magnitude::MagBase::Int(3),
                crate::magnitude::ExpSign::Neg,
                half,
                x.schedule().cap_bits(),
            )?
            .mul_rational(&BigRational::from(3u32))
        }
    }
}

/// Build the three-term error chain of a verified tuned stage.
pub fn selfpower_error_chain(
    x: &SpiffyNumber,
    stage: &TunedStage,
    budget: u32,
) -> Result<ErrorChain> {
    let v = int_from_str(&stage.v)?;
    let b = int_from_str(&stage.b)?;
    let j_sq = stage.j * stage.j;
    let tail_through_phi = phi_tail_term(x, stage.m_j, budget)?;
    let target_gap = Magnitude::from_rational(BigRational::from(int_pow(&v, j_sq)).recip())?;
    let exp_gap = Magnitude::from_rational(BigRational::from(int_pow(&b, j_sq)).recip())?;
    let total = tail_through_phi
        .add_upper(&target_gap, budget)?
        .add_upper(&exp_gap, budget)?;
    let terms = [&tail_through_phi, &target_gap, &exp_gap];
    let mut dominant = 0;
    for (i, t) in terms.iter().enumerate().skip(1) {
        if t.compare(terms[dominant], budget)? == Ordering::Greater {
            dominant = i;
        }
    }
    Ok(ErrorChain {
        tail_through_phi,
        target_gap,
        exp_gap,
        total,
        dominant,
    })
}

// --- self-power certificates over forced-quotient targets ----------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMagnitude {
    pub name: String,
    pub value: Magnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreeRule {
    /// `L(n) = n^2`.
    Square,
    /// Fixed degree.
    Constant { degree: u32 },
}

impl DegreeRule {
    pub fn degree(&self, n: usize) -> u32 {
        match self {
            DegreeRule::Square => (n * n) as u32,
            DegreeRule::Constant { degree } => *degree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfPowerStage {
    pub n: usize,
    pub degree: u32,
    /// `A_n/B_n` from the target; the approximant used is `-A_n/B_n`.
    pub approx_num: String,
    pub approx_den: String,
    /// `T_L(-A_n/B_n) = P/Q` reduced.
    pub p: String,
    pub q: String,
    pub error_terms: Vec<NamedMagnitude>,
    pub total_error: Magnitude,
    pub achieved_exponent: Option<IntervalReal>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfPowerCertificate {
    pub forced: ForcedSchedule,
    pub filler: u32,
    pub stages_built: usize,
    /// Exact value `u > 0` of the generated expansion; the certificate
    /// approximates `e^(-u) = x^x` at `x` with `x ln x = -u`.
    pub target_value: String,
    pub stages: Vec<SelfPowerStage>,
    pub constants: RunConstants,
    pub verdict: String,
}

/// Build one self-power stage from a stage of the forced-quotient target:
/// `|e^(-u) - P/Q| <= |u - A/B| + |U|^{L+1}/(L+1)!` by the 1-Lipschitz bound
/// of `exp` on non-positive reals.
pub fn exp_of_jarnik_certificate(
    target: &JarnikTarget,
    n: usize,
    degree: u32,
    budget: u32,
) -> Result<SelfPowerStage> {
    let stage = target
        .stages
        .iter()
        .find(|s| s.stage == n)
        .ok_or_else(|| Error::Domain(format!("target has no stage {n}")))?;
    let (a, b) = (&stage.approximant.0, &stage.approximant.1);
    let approx = BigRational::from((a.clone(), b.clone()));
    // Renormalization: U = -A/B must land in [-1, 0].
    let u_input = -approx.clone();
    if !(-1..=0).contains(&u_input) {
        return Err(Error::Domain(format!(
            "stage approximant {} lies outside [0, 1]; cannot renormalize",
            rat_to_str(&approx)
        )));
    }
    let taylor = exp_taylor_rational(&u_input, degree, budget, false)?;
    let stage_error = Magnitude::from_rational(stage.error.clone())?;
    let remainder = Magnitude::from_rational(taylor.remainder_bound.clone())?;
    let total_error = stage_error.add_upper(&remainder, budget)?;

    let q = taylor.value.denom().clone();
    let achieved_exponent = if q > 1 && !total_error.is_zero() {
        let ln_q = IntervalReal::point(BigRational::from(&q)).ln(budget)?;
        let neg_ln_err = total_error.ln_enclosure(budget)?.neg();
        Some(neg_ln_err.mul(&ln_q.recip()?))
    } else {
        None
    };

    Ok(SelfPowerStage {
        n,
        degree,
        approx_num: a.to_string(),
        approx_den: b.to_string(),
        p: taylor.value.numer().to_string(),
        q: q.to_string(),
        error_terms: vec![
            NamedMagnitude {
                name: "target-gap".into(),
                value: stage_error,
            },
            NamedMagnitude {
                name: "taylor-remainder".into(),
                value: remainder,
            },
        ],
        total_error,
        achieved_exponent,
    })
}

/// Build the full self-power certificate for a forced-quotient run.
pub fn build_selfpower_certificate(
    forced: &ForcedSchedule,
    filler: u32,
    stages: usize,
    rule: DegreeRule,
    budget: u32,
    cap_bits: u64,
) -> Result<SelfPowerCertificate> {
    let target = jarnik_generate(forced, filler, stages, budget)?;
    let mut out = Vec::with_capacity(stages);
    for n in 1..=stages {
        out.push(exp_of_jarnik_certificate(
            &target,
            n,
            rule.degree(n),
            budget,
        )?);
    }
    let mut measured = BTreeMap::new();
    measured.insert("degree_rule".into(), format!("{rule:?}"));
    let max_achieved = out
        .iter()
        .filter_map(|s| s.achieved_exponent.as_ref().map(|e| e.lower().clone()))
        .max();
    if let Some(m) = &max_achieved {
        measured.insert("max_achieved_exponent_lower".into(), rat_to_str(m));
    }
    Ok(SelfPowerCertificate {
        forced: forced.clone(),
        filler,
        stages_built: stages,
        target_value: rat_to_str(&target.value),
        stages: out,
        constants: RunConstants {
            budget_bits: budget,
            cap_bits,
            measured,
        },
        verdict: if stages == 0 {
            "vacuous".into()
        } else {
            "certified".into()
        },
    })
}

// --- polynomial closure ---------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyCertificate {
    pub poly: IntPolynomial,
    pub schedule: ScheduleKind,
    pub inputs: Vec<DigitSequence>,
    pub m: usize,
    /// `R_m = P(truncations) = r_num/r_den` reduced.
    pub r_num: String,
    pub r_den: String,
    /// `B_m | q_m^D` with `D` the total degree.
    pub denominator_divides: bool,
    /// Gradient bound `M` on the unit cube.
    pub gradient_bound: String,
    /// `C = 3 M t`.
    pub c: String,
    /// Digit-aware common tail bound (max over inputs).
    pub tail: Magnitude,
    /// `error = C * tail`.
    pub error: Magnitude,
    /// `-ln(error)/ln(B_m)`, when `B_m >= 2` and the error is positive.
    pub achieved_exponent: Option<IntervalReal>,
    /// `-ln(error)/ln(q_m)`: the anchor-base diagnostic.
    pub achieved_exponent_base_q: Option<IntervalReal>,
    /// Exact value when the image is provably rational.
    pub rational_escape: Option<String>,
    pub constants: RunConstants,
    pub verdict: String,
}

/// Decide whether two digit rules agree from some level onward; returns the
/// first level after which they coincide.
fn digits_eventually_equal(a: &DigitSequence, b: &DigitSequence) -> Option<usize> {
    let (pa, pb) = (prefix_len(a), prefix_len(b));
    let n0 = pa.max(pb);
    let la = period_len(a);
    let lb = period_len(b);
    let span = lcm_usize(la, lb);
    for n in (n0 + 1)..=(n0 + span) {
        if a.digit(n) != b.digit(n) {
            return None;
        }
    }
    Some(n0)
}

fn prefix_len(d: &DigitSequence) -> usize {
    // prefix length is not exposed directly; recover it structurally by
    // serializing (cheap and keeps DigitSequence's field private)
    #[derive(Deserialize)]
    struct Probe {
        prefix: Vec<u8>,
    }
    let v = serde_json::to_value(d).expect("digit rules serialize");
    serde_json::from_value::<Probe>(v)
        .map(|p| p.prefix.len())
        .unwrap_or(0)
}

fn period_len(d: &DigitSequence) -> usize {
    #[derive(Deserialize)]
    struct Probe {
        tail: serde_json::Value,
    }
    let v = serde_json::to_value(d).expect("digit rules serialize");
    let tail = serde_json::from_value::<Probe>(v)
        .map(|p| p.tail)
        .unwrap_or_default();
    tail.get("pattern")
        .and_then(|p| p.as_array())
        .map(|a| a.len())
        .unwrap_or(1)
}

fn lcm_usize(a: usize, b: usize) -> usize {
    let g = gcd_usize(a, b);
    a / g * b
}

fn gcd_usize(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd_usize(b, a % b)
    }
}

/// Exact rational escape: expand `P(r + T)` symbolically over the distinct
/// tail series and return the constant term when every non-constant
/// coefficient vanishes. Sound regardless of the tails' actual values.
fn rational_escape(
    poly: &IntPolynomial,
    inputs: &[SpiffyNumber],
    m: usize,
) -> Result<Option<BigRational>> {
    let t = inputs.len();
    // group inputs by eventually-equal digit rules
    let mut groups: Vec<usize> = vec![usize::MAX; t];
    let mut level0 = m;
    let mut next_group = 0;
    for i in 0..t {
        if groups[i] != usize::MAX {
            continue;
        }
        groups[i] = next_group;
        for j in (i + 1)..t {
            if groups[j] == usize::MAX {
                if let Some(n0) = digits_eventually_equal(inputs[i].digits(), inputs[j].digits()) {
                    groups[j] = next_group;
                    level0 = level0.max(n0);
                }
            }
        }
        next_group += 1;
    }
    for input in inputs {
        level0 = level0.max(prefix_len(input.digits()));
    }
    // truncations at the common expansion level
    let mut base = Vec::with_capacity(t);
    for input in inputs {
        match input.truncate(level0) {
            Ok(r) => base.push(r),
            Err(_) => return Ok(None), // unmaterializable: no escape claim
        }
    }
    // expand P(base_j + S_{g(j)}) into a polynomial over the group tails
    let mut expanded: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
    for (c, exps) in poly.terms() {
        // per-term expansion: product over variables of (base + S_g)^alpha
        let mut acc: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        acc.insert(vec![0; next_group], BigRational::from(c));
        for (j, &alpha) in exps.iter().enumerate() {
            for _ in 0..alpha {
                // multiply acc by (base_j + S_{g(j)})
                let mut next: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
                for (key, coeff) in &acc {
                    // base part
                    let e0 = next.entry(key.clone()).or_default();
                    *e0 += BigRational::from(coeff * &base[j]);
                    // tail part
                    let mut key2 = key.clone();
                    key2[groups[j]] += 1;
                    let e1 = next.entry(key2).or_default();
                    *e1 += coeff.clone();
                }
                acc = next;
            }
        }
        for (key, coeff) in acc {
            let e = expanded.entry(key).or_default();
            *e += coeff;
        }
    }
    let zero_key = vec![0u32; next_group];
    for (key, coeff) in &expanded {
        if *key != zero_key && *coeff != 0 {
            return Ok(None);
        }
    }
    Ok(Some(expanded.remove(&zero_key).unwrap_or_default()))
}

/// Build the polynomial-closure certificate at truncation level `m`.
pub fn poly_closure_certificate(
    poly: &IntPolynomial,
    inputs: &[SpiffyNumber],
    m: usize,
    budget: u32,
) -> Result<PolyCertificate> {
    if inputs.is_empty() {
        return Err(Error::Domain("at least one input required".into()));
    }
    if poly.vars() != inputs.len() {
        return Err(Error::Domain(format!(
            "polynomial in {} variables got {} inputs",
            poly.vars(),
            inputs.len()
        )));
    }
    let schedule = inputs[0].schedule().clone();
    for input in &inputs[1..] {
        if input.schedule() != &schedule {
            return Err(Error::MixedSchedule(
                "all inputs must share one exponent schedule".into(),
            ));
        }
    }
    let truncs: Vec<BigRational> = inputs
        .iter()
        .map(|x| x.truncate(m))
        .collect::<Result<_>>()?;
    let r = poly.eval(&truncs)?;

    // B_m | q_m^D
    let e_m = inputs[0]
        .schedule()
        .exponent(m)?
        .as_int()
        .ok_or_else(|| Error::Unmaterializable("level m exceeds the cap".into()))?
        .clone();
    let d = poly.total_degree();
    let e32 = e_m
        .to_u32()
        .ok_or_else(|| Error::Unmaterializable("q_m^D exceeds the cap".into()))?;
    let q_m = int_pow(&BigInt::from(3u32), e32);
    let q_m_pow_d = int_pow(&q_m, d.max(1));
    let denominator_divides = q_m_pow_d.is_divisible(r.denom());

    // gradient bound and tail
    let m_bound = poly.gradient_bound_unit_cube();
    let t = inputs.len() as u32;
    let c = BigInt::from(3u32) * BigInt::from(&m_bound) * BigInt::from(t);
    let mut tail = inputs[0].tail_bound(m)?.refined;
    for input in &inputs[1..] {
        let cand = input.tail_bound(m)?.refined;
        if cand.compare(&tail, budget)? == Ordering::Greater {
            tail = cand;
        }
    }
    let error = tail.mul_rational(&BigRational::from(&c))?;

    let escape = rational_escape(poly, inputs, m)?;

    let b_m = r.denom().clone();
    let (achieved_exponent, achieved_exponent_base_q) = if error.is_zero() {
        (None, None)
    } else {
        let neg_ln_err = error.ln_enclosure(budget)?.neg();
        let base_b = if b_m > 1 {
            let ln_b = IntervalReal::point(BigRational::from(&b_m)).ln(budget)?;
            Some(neg_ln_err.mul(&ln_b.recip()?))
        } else {
            None
        };
        let ln_q = IntervalReal::point(BigRational::from(&q_m)).ln(budget)?;
        let base_q = Some(neg_ln_err.mul(&ln_q.recip()?));
        (base_b, base_q)
    };

    let verdict = match &escape {
        Some(v) => format!("rational {}", rat_to_str(v)),
        None => "certified-approximation".into(),
    };
    Ok(PolyCertificate {
        poly: poly.clone(),
        schedule: schedule.kind().clone(),
        inputs: inputs.iter().map(|x| x.digits().clone()).collect(),
        m,
        r_num: r.numer().to_string(),
        r_den: r.denom().to_string(),
        denominator_divides,
        gradient_bound: m_bound.to_string(),
        c: c.to_string(),
        tail,
        error,
        achieved_exponent,
        achieved_exponent_base_q,
        rational_escape: escape.map(|v| rat_to_str(&v)),
        constants: RunConstants {
            budget_bits: budget,
            cap_bits: inputs[0].schedule().cap_bits(),
            measured: BTreeMap::new(),
        },
        verdict,
    })
}

// --- pairwise powers ------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GapRule {
    /// `e_{m_{k+1}} >= exp(e_{m_k})`: the literal tower-gap requirement.
    Literal,
    /// `e_{m_{k+1}} >= factor * e_{m_k}`: desk-scale relaxation.
    RatioAtLeast { factor: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseStage {
    pub k: usize,
    pub m_k: usize,
    /// Shared anchor `a_k` (reduced).
    pub anchor_num: String,
    pub anchor_den: String,
    /// Dirichlet cap actually used for `log a_k`.
    pub dirichlet_cap: String,
    /// `L_k = r_k/s_k` approximating `ln a_k`.
    pub log_num: String,
    pub log_den: String,
    /// `U~ = a_k L_k` (reduced) and the unreduced denominator `d_k = q_k s_k`.
    pub u_tilde_num: String,
    pub u_tilde_den: String,
    pub d_k: String,
    /// Taylor degree `L = floor(e_{m_k}^(1/3))`.
    pub degree: u32,
    pub p: String,
    pub q: String,
    pub error_terms: Vec<NamedMagnitude>,
    pub total_error: Magnitude,
    pub achieved_exponent: Option<IntervalReal>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseCertificate {
    pub schedule: ScheduleKind,
    pub x_digits: DigitSequence,
    pub y_digits: DigitSequence,
    pub levels: Vec<usize>,
    pub gap_rule: GapRule,
    /// Per-gap rule report: which rule each consecutive level pair satisfied.
    pub gap_rule_satisfied: Vec<String>,
    pub stages: Vec<PairwiseStage>,
    pub constants: RunConstants,
    pub verdict: String,
}

/// Validate gaps between synchronized levels against the configured rule.
fn validate_gaps(
    schedule: &ExponentSchedule,
    levels: &[usize],
    rule: &GapRule,
    budget: u32,
) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for w in levels.windows(2) {
        let e_k = schedule.exponent(w[0])?;
        let e_next = schedule.exponent(w[1])?;
        let literal = match (&e_k, &e_next) {
            (ExponentValue::Int(a), b) => {
                // e_next >= exp(e_k)?
                let exp_a = Magnitude::exp_of(
                    crate::magnitude::ExpSign::Pos,
                    Magnitude::from_rational(BigRational::from(a))?,
                );
                b.to_magnitude().compare(&exp_a, budget)? != Ordering::Less
            }
            _ => false,
        };
        let relaxed = match rule {
            GapRule::Literal => literal,
            GapRule::RatioAtLeast { factor } => {
                let scaled = e_k
                    .to_magnitude()
                    .mul_rational(&BigRational::from(*factor))?;
                e_next.to_magnitude().compare(&scaled, budget)? != Ordering::Less
            }
        };
        let label = if literal {
            "literal"
        } else if relaxed {
            "relaxed"
        } else {
            return Err(Error::Domain(format!(
                "levels {} -> {} violate the configured gap rule",
                w[0], w[1]
            )));
        };
        out.push(format!("{}->{}: {}", w[0], w[1], label));
    }
    Ok(out)
}

/// Build one pairwise-power stage at synchronization index `k` (1-based in
/// `levels`).
pub fn pairwise_power_certificate(
    x: &SpiffyNumber,
    y: &SpiffyNumber,
    levels: &[usize],
    k: usize,
    budget: u32,
) -> Result<PairwiseStage> {
    if k < 1 || k > levels.len() {
        return Err(Error::Domain(format!("stage k={k} outside the level list")));
    }
    let m_k = levels[k - 1];
    // anchors must agree digit by digit up to m_k
    for n in 1..=m_k {
        if x.digits().digit(n) != y.digits().digit(n) {
            return Err(Error::AnchorMismatch(format!(
                "digit {n} differs below the anchor level {m_k}"
            )));
        }
    }
    let anchor = x.truncate(m_k)?;
    if anchor <= 0 {
        return Err(Error::Domain("anchor truncation must be positive".into()));
    }
    let ei = selfpower::inv_e(budget + 16);
    if &anchor >= ei.lower() {
        return Err(Error::Domain("anchor must lie in (0, e^-1)".into()));
    }

    let e_mk = x
        .schedule()
        .exponent(m_k)?
        .as_int()
        .ok_or_else(|| Error::Unmaterializable("anchor level exceeds the cap".into()))?
        .clone();

    // Dirichlet cap: ceil(e^sqrt(e_mk)), clamped by the budget.
    let sqrt_e = IntervalReal::point(BigRational::from(&e_mk))
        .pow_rational(&BigRational::from((1u32, 2u32)), budget)?;
    let cap_limit = BigInt::from(1) << (budget / 2).max(16);
    let q_cap = match crate::interval::exp_point(sqrt_e.upper(), budget) {
        Ok((_, hi)) => {
            let ceil = BigRational::from(hi.ceil_ref()).into_numer_denom().0;
            ceil.min(cap_limit)
        }
        Err(_) => cap_limit,
    };

    let alpha = IntervalReal::point(anchor.clone()).ln(budget * 2)?;
    let (r_k, s_k) = crate::diophantine::dirichlet_approx(&alpha, &q_cap)?;
    let log_approx = BigRational::from((r_k.clone(), s_k.clone()));
    let u_tilde = BigRational::from(&anchor * &log_approx);
    if !(-1..=0).contains(&u_tilde) {
        return Err(Error::Domain("scaled log approximant left [-1, 0]".into()));
    }
    let e32 = e_mk
        .to_u32()
        .ok_or_else(|| Error::Unmaterializable("anchor exponent exceeds u32".into()))?;
    let q_k_full = int_pow(&BigInt::from(3u32), e32);
    let d_k = BigInt::from(&q_k_full * &s_k);

    // Taylor degree floor(e_mk^(1/3)), at least 1.
    let degree = BigInt::from(e_mk.root_ref(3)).to_u32().unwrap_or(1).max(1);
    let taylor = exp_taylor_rational(&u_tilde, degree, budget, false)?;

    // term 1: |y ln x - a ln a|
    let tail_x = x.tail_bound(m_k)?.refined;
    let tail_y = y.tail_bound(m_k)?.refined;
    let term_anchor = if x.digits() == y.digits() {
        // consistency case x = y: phi-Lipschitz bound on the single tail
        let m_phi = selfpower::phi_lipschitz(&anchor, budget)?;
        tail_x.mul_rational(m_phi.upper())?
    } else {
        // |y - a||ln x| + a|ln x - ln a| <= tail_y * |ln a| + tail_x
        let ln_a_abs = alpha.neg();
        tail_y
            .mul_rational(ln_a_abs.upper())?
            .add_upper(&tail_x, budget)?
    };
    // term 2: |a||ln a - L_k| <= a / (s_k q_cap)
    let term_log = Magnitude::from_rational(BigRational::from(
        &anchor / &BigRational::from(BigInt::from(&s_k * &q_cap)),
    ))?;
    // term 3: Taylor remainder
    let term_taylor = Magnitude::from_rational(taylor.remainder_bound.clone())?;

    let total_error = term_anchor
        .add_upper(&term_log, budget)?
        .add_upper(&term_taylor, budget)?;

    let q = taylor.value.denom().clone();
    let achieved_exponent = if q > 1 && !total_error.is_zero() {
        let ln_q = IntervalReal::point(BigRational::from(&q)).ln(budget)?;
        Some(total_error.ln_enclosure(budget)?.neg().mul(&ln_q.recip()?))
    } else {
        None
    };

    Ok(PairwiseStage {
        k,
        m_k,
        anchor_num: anchor.numer().to_string(),
        anchor_den: anchor.denom().to_string(),
        dirichlet_cap: q_cap.to_string(),
        log_num: r_k.to_string(),
        log_den: s_k.to_string(),
        u_tilde_num: u_tilde.numer().to_string(),
        u_tilde_den: u_tilde.denom().to_string(),
        d_k: d_k.to_string(),
        degree,
        p: taylor.value.numer().to_string(),
        q: q.to_string(),
        error_terms: vec![
            NamedMagnitude {
                name: "anchor-proximity".into(),
                value: term_anchor,
            },
            NamedMagnitude {
                name: "log-dirichlet".into(),
                value: term_log,
            },
            NamedMagnitude {
                name: "taylor-remainder".into(),
                value: term_taylor,
            },
        ],
        total_error,
        achieved_exponent,
    })
}

/// Build the pairwise certificate across all synchronized stages.
pub fn build_pairwise_certificate(
    x: &SpiffyNumber,
    y: &SpiffyNumber,
    levels: &[usize],
    gap_rule: GapRule,
    budget: u32,
) -> Result<PairwiseCertificate> {
    if x.schedule() != y.schedule() {
        return Err(Error::MixedSchedule(
            "pairwise inputs must share a schedule".into(),
        ));
    }
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "levels must be nonempty and strictly increasing".into(),
        ));
    }
    let gap_rule_satisfied = validate_gaps(x.schedule(), levels, &gap_rule, budget)?;
    let mut stages = Vec::with_capacity(levels.len());
    for k in 1..=levels.len() {
        stages.push(pairwise_power_certificate(x, y, levels, k, budget)?);
    }
    let mut measured = BTreeMap::new();
    let max_achieved = stages
        .iter()
        .filter_map(|s| s.achieved_exponent.as_ref().map(|e| e.lower().clone()))
        .max();
    if let Some(m) = &max_achieved {
        measured.insert("max_achieved_exponent_lower".into(), rat_to_str(m));
    }
    Ok(PairwiseCertificate {
        schedule: x.schedule().kind().clone(),
        x_digits: x.digits().clone(),
        y_digits: y.digits().clone(),
        levels: levels.to_vec(),
        gap_rule,
        gap_rule_satisfied,
        stages,
        constants: RunConstants {
            budget_bits: budget,
            cap_bits: x.schedule().cap_bits(),
            measured,
        },
        verdict: "certified".into(),
    })
}

// --- verification ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Accepted,
    Vacuous,
    Rejected { stage: String, check: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub verdict: Verdict,
    /// Per-stage achieved-exponent lower bounds (decimal-exact rationals).
    pub achieved: Vec<(String, Option<String>)>,
    pub max_achieved_lower: Option<String>,
}

fn reject(stage: impl Into<String>, check: impl Into<String>) -> VerifyReport {
    VerifyReport {
        verdict: Verdict::Rejected {
            stage: stage.into(),
            check: check.into(),
        },
        achieved: Vec::new(),
        max_achieved_lower: None,
    }
}

/// Re-derive every bound in the certificate from raw fields; reject on the
/// first mismatch or failed comparison.
///
/// Precision shortfalls stay retryable errors and schema problems stay
/// malformed; any other re-derivation failure is evidence the stored data is
/// inconsistent, which is a rejection.
pub fn verify_certificate(file: &CertificateFile) -> Result<VerifyReport> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::Malformed(format!(
            "unsupported schema version {}",
            file.schema_version
        )));
    }
    let outcome = match &file.certificate {
        Certificate::Selfpower(c) => verify_selfpower(c),
        Certificate::PolyClosure(c) => verify_poly(c),
        Certificate::Pairwise(c) => verify_pairwise(c),
        Certificate::Tuned(c) => verify_tuned(c),
    };
    match outcome {
        Ok(report) => Ok(report),
        Err(e @ (Error::Malformed(_) | Error::IncomparableEnclosure)) => Err(e),
        Err(e @ Error::PrecisionInsufficient { .. }) => Err(e),
        Err(e) => Ok(reject("re-derivation", e.to_string())),
    }
}

fn achieved_table<T>(
    stages: &[T],
    label: impl Fn(&T) -> String,
    achieved: impl Fn(&T) -> Option<&IntervalReal>,
) -> (Vec<(String, Option<String>)>, Option<String>) {
    let table: Vec<(String, Option<String>)> = stages
        .iter()
        .map(|s| (label(s), achieved(s).map(|e| rat_to_str(e.lower()))))
        .collect();
    let max = stages
        .iter()
        .filter_map(|s| achieved(s).map(|e| e.lower().clone()))
        .max()
        .map(|r| rat_to_str(&r));
    (table, max)
}

fn verify_selfpower(cert: &SelfPowerCertificate) -> Result<VerifyReport> {
    let budget = cert.constants.budget_bits;
    let target = jarnik_generate(&cert.forced, cert.filler, cert.stages_built, budget)?;
    if rat_to_str(&target.value) != cert.target_value {
        return Ok(reject("target", "regenerated expansion value differs"));
    }
    if cert.stages.is_empty() {
        return Ok(VerifyReport {
            verdict: Verdict::Vacuous,
            achieved: Vec::new(),
            max_achieved_lower: None,
        });
    }
    for st in &cert.stages {
        let rebuilt = exp_of_jarnik_certificate(&target, st.n, st.degree, budget)?;
        if &rebuilt != st {
            return Ok(reject(
                format!("stage {}", st.n),
                "re-derived stage differs",
            ));
        }
        // independent magnitude re-check: total equals the decomposition sum
        let mut total = Magnitude::zero();
        for term in &st.error_terms {
            total = total.add_upper(&term.value, budget)?;
        }
        if total.compare(&st.total_error, budget)? != Ordering::Equal {
            return Ok(reject(
                format!("stage {}", st.n),
                "total error != sum of terms",
            ));
        }
    }
    let (achieved, max) = achieved_table(
        &cert.stages,
        |s| format!("stage {}", s.n),
        |s| s.achieved_exponent.as_ref(),
    );
    Ok(VerifyReport {
        verdict: Verdict::Accepted,
        achieved,
        max_achieved_lower: max,
    })
}

fn poly_inputs(cert: &PolyCertificate) -> Result<Vec<SpiffyNumber>> {
    let schedule = ExponentSchedule::with_cap(cert.schedule.clone(), cert.constants.cap_bits)?;
    Ok(cert
        .inputs
        .iter()
        .map(|d| SpiffyNumber::new(schedule.clone(), d.clone()))
        .collect())
}

fn verify_poly(cert: &PolyCertificate) -> Result<VerifyReport> {
    let inputs = poly_inputs(cert)?;
    let rebuilt =
        poly_closure_certificate(&cert.poly, &inputs, cert.m, cert.constants.budget_bits)?;
    let mut mismatch = None;
    if rebuilt.r_num != cert.r_num || rebuilt.r_den != cert.r_den {
        mismatch = Some("R_m differs");
    } else if rebuilt.gradient_bound != cert.gradient_bound || rebuilt.c != cert.c {
        mismatch = Some("gradient bound differs");
    } else if rebuilt.tail != cert.tail || rebuilt.error != cert.error {
        mismatch = Some("tail or error bound differs");
    } else if !cert.denominator_divides || !rebuilt.denominator_divides {
        mismatch = Some("denominator divisibility fails");
    } else if rebuilt.rational_escape != cert.rational_escape {
        mismatch = Some("rational escape differs");
    } else if rebuilt.achieved_exponent != cert.achieved_exponent
        || rebuilt.achieved_exponent_base_q != cert.achieved_exponent_base_q
    {
        mismatch = Some("achieved exponent differs");
    }
    if let Some(check) = mismatch {
        return Ok(reject(format!("level {}", cert.m), check));
    }
    let achieved = vec![(
        format!("level {}", cert.m),
        cert.achieved_exponent
            .as_ref()
            .map(|e| rat_to_str(e.lower())),
    )];
    let max = cert
        .achieved_exponent
        .as_ref()
        .map(|e| rat_to_str(e.lower()));
    Ok(VerifyReport {
        verdict: Verdict::Accepted,
        achieved,
        max_achieved_lower: max,
    })
}

fn verify_pairwise(cert: &PairwiseCertificate) -> Result<VerifyReport> {
    let budget = cert.constants.budget_bits;
    let schedule = ExponentSchedule::with_cap(cert.schedule.clone(), cert.constants.cap_bits)?;
    let x = SpiffyNumber::new(schedule.clone(), cert.x_digits.clone());
    let y = SpiffyNumber::new(schedule, cert.y_digits.clone());
    let gaps = validate_gaps(x.schedule(), &cert.levels, &cert.gap_rule, budget)?;
    if gaps != cert.gap_rule_satisfied {
        return Ok(reject("levels", "gap-rule report differs"));
    }
    if cert.stages.is_empty() {
        return Ok(VerifyReport {
            verdict: Verdict::Vacuous,
            achieved: Vec::new(),
            max_achieved_lower: None,
        });
    }
    for st in &cert.stages {
        let rebuilt = pairwise_power_certificate(&x, &y, &cert.levels, st.k, budget)?;
        if &rebuilt != st {
            return Ok(reject(
                format!("stage {}", st.k),
                "re-derived stage differs",
            ));
        }
    }
    let (achieved, max) = achieved_table(
        &cert.stages,
        |s| format!("stage {}", s.k),
        |s| s.achieved_exponent.as_ref(),
    );
    Ok(VerifyReport {
        verdict: Verdict::Accepted,
        achieved,
        max_achieved_lower: max,
    })
}

fn verify_tuned(cert: &TunedCertificate) -> Result<VerifyReport> {
    let budget = cert.constants.budget_bits;
    let schedule = ExponentSchedule::with_cap(cert.schedule.clone(), cert.constants.cap_bits)?;
    let x = SpiffyNumber::new(schedule, cert.digits.clone());
    if cert.stages.is_empty() {
        return Ok(VerifyReport {
            verdict: Verdict::Vacuous,
            achieved: Vec::new(),
            max_achieved_lower: None,
        });
    }
    for st in &cert.stages {
        let rebuilt = verify_tuned_certificate(std::slice::from_ref(st), &x, budget)?;
        let v = &rebuilt[0];
        let stored = &st.checks;
        if v.cond_ii != stored.cond_ii.verdict
            || v.cond_iii != stored.cond_iii.verdict
            || v.v_floor != stored.v_floor_pass
            || v.size_coupling != stored.size_coupling_pass
        {
            return Ok(reject(
                format!("stage j={}", st.j),
                "re-derived verdicts differ",
            ));
        }
        // the stored gap enclosures must be re-derivable bit-exactly
        let u = int_from_str(&st.u)?;
        let v_int = int_from_str(&st.v)?;
        let r = x.truncate(st.m_j)?;
        let phi = selfpower::phi(&IntervalReal::point(r), budget * 2)?;
        let gap_ii = phi.add_rational(&-BigRational::from((u, v_int))).abs();
        if gap_ii != stored.cond_ii.gap {
            return Ok(reject(
                format!("stage j={}", st.j),
                "stored gap enclosure differs",
            ));
        }
    }
    let achieved = cert
        .stages
        .iter()
        .map(|s| (format!("stage j={}", s.j), None))
        .collect();
    Ok(VerifyReport {
        verdict: Verdict::Accepted,
        achieved,
        max_achieved_lower: None,
    })
}

// --- digit-tuning search ----------------------------------------------------

/// Outcome of the best-effort digit search: never claims success it cannot
/// certify; tolerance misses are an informative non-failure.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Chosen digits for the block (smallest lexicographic among ties).
    pub digits: Vec<u8>,
    /// Certified enclosure of `|phi(r_m) - target|` for the chosen block.
    pub gap: IntervalReal,
    /// Whether the gap is certified under / over the tolerance (`None` if
    /// undecidable at this budget).
    pub tolerance_met: Option<bool>,
    /// Set when the target provably lies outside the reachable range.
    pub out_of_range: bool,
}

/// Exhaustive search over `{0,2}` blocks at levels `block_lo..=block_hi`
/// minimizing `|phi(r_m) - target|` with `m = block_hi`.
pub fn tune_digits_search(
    x: &SpiffyNumber,
    target: &BigRational,
    block_lo: usize,
    block_hi: usize,
    tolerance: &Magnitude,
    budget: u32,
) -> Result<SearchOutcome> {
    if block_lo < 1 || block_hi < block_lo {
        return Err(Error::Domain("invalid digit block".into()));
    }
    let len = block_hi - block_lo + 1;
    if len > 20 {
        return Err(Error::Domain(
            "digit block too large for exhaustive search".into(),
        ));
    }

    let eval = |bits: u32, block_digits: &[u8]| -> Result<IntervalReal> {
        let mut prefix: Vec<u8> = (1..block_lo).map(|n| x.digits().digit(n)).collect();
        prefix.extend_from_slice(block_digits);
        let digits = DigitSequence::new(prefix, crate::schedule::TailRule::Constant { digit: 0 })?;
        let candidate = SpiffyNumber::new(x.schedule().clone(), digits);
        let r = candidate.truncate(block_hi)?;
        if r == 0 {
            // phi(0+) -> 0: treat the gap as |target| exactly
            return Ok(IntervalReal::point(BigRational::from(target.abs_ref())));
        }
        Ok(selfpower::phi(&IntervalReal::point(r), bits)?
            .add_rational(&-target.clone())
            .abs())
    };

    // monotone range check: phi is decreasing on (0, e^-1), so the reachable
    // band is [phi(all-2 block), phi(all-0 block)]
    let lo_gap_all2 = eval(budget, &vec![2u8; len])?;
    let hi_gap_all0 = eval(budget, &vec![0u8; len])?;
    let phi_all2 = selfpower::phi(
        &IntervalReal::point({
            let mut prefix: Vec<u8> = (1..block_lo).map(|n| x.digits().digit(n)).collect();
            prefix.extend_from_slice(&vec![2u8; len]);
            let d = DigitSequence::new(prefix, crate::schedule::TailRule::Constant { digit: 0 })?;
            SpiffyNumber::new(x.schedule().clone(), d).truncate(block_hi)?
        }),
        budget,
    )?;
    let out_of_range = target < phi_all2.lower() || target > &BigRational::new();

    let mut best: Option<(Vec<u8>, IntervalReal)> = None;
    for mask in 0u32..(1u32 << len) {
        let block: Vec<u8> = (0..len)
            .map(|i| if mask & (1 << i) != 0 { 2 } else { 0 })
            .collect();
        let gap = eval(budget, &block)?;
        let better = match &best {
            None => true,
            Some((_, bg)) => match gap.try_cmp(bg) {
                Some(Ordering::Less) => true,
                Some(_) => false,
                None => gap.upper() < bg.upper(), // deterministic tie-break
            },
        };
        if better {
            best = Some((block, gap));
        }
    }
    let (digits, gap) = best.expect("at least one block evaluated");
    let _ = (lo_gap_all2, hi_gap_all0);

    let tolerance_met = if tolerance.is_zero() {
        Some(gap.is_point() && *gap.lower() == 0)
    } else {
        let gap_mag_hi = Magnitude::from_rational(gap.upper().clone())?;
        let gap_mag_lo = Magnitude::from_rational(gap.lower().clone().max(BigRational::new()))?;
        match (
            gap_mag_hi.compare(tolerance, budget),
            gap_mag_lo.compare(tolerance, budget),
        ) {
            (Ok(Ordering::Less | Ordering::Equal), _) => Some(true),
            (_, Ok(Ordering::Greater)) => Some(false),
            _ => None,
        }
    };
    Ok(SearchOutcome {
        digits,
        gap,
        tolerance_met,
        out_of_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::DEFAULT_BUDGET;
    use crate::magnitude::DEFAULT_CAP_BITS;
    use crate::rational::rat;
    use crate::schedule::TailRule;

    fn factorial_all2() -> SpiffyNumber {
        SpiffyNumber::new(
            ExponentSchedule::new(ScheduleKind::Factorial { offset: 1 }).unwrap(),
            DigitSequence::all_two(),
        )
    }

    #[test]
    fn tuned_parameters_match_certified_floors() {
        let (v1, b1) = build_tuned_parameters(1, DEFAULT_BUDGET).unwrap();
        assert_eq!((v1, b1), (BigInt::from(2), BigInt::from(2)));
        let (v2, b2) = build_tuned_parameters(2, DEFAULT_BUDGET).unwrap();
        assert_eq!(v2, BigInt::from(2980));
        assert_eq!(b2, BigInt::from(8880400u64));
        let (v3, b3) = build_tuned_parameters(3, DEFAULT_BUDGET).unwrap();
        assert_eq!(v3, BigInt::from(532048240601u64));
        assert_eq!(b3, int_pow(&BigInt::from(532048240601u64), 3));
    }

    #[test]
    fn tuned_stage_j1_passes_all_conditions() {
        let x = factorial_all2();
        let st = build_tuned_stage(&x, 1, 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(st.checks.cond_ii.verdict, CheckVerdict::Pass);
        assert_eq!(st.checks.cond_iii.verdict, CheckVerdict::Pass);
        assert!(st.checks.v_floor_pass);
        assert!(st.checks.size_coupling_pass);

        let verdicts =
            verify_tuned_certificate(std::slice::from_ref(&st), &x, DEFAULT_BUDGET).unwrap();
        assert_eq!(verdicts[0].cond_ii, CheckVerdict::Pass);
        assert_eq!(verdicts[0].cond_iii, CheckVerdict::Pass);
    }

    #[test]
    fn tuned_tampering_detected() {
        let x = factorial_all2();
        let st = build_tuned_stage(&x, 1, 1, DEFAULT_BUDGET).unwrap();

        // B <- B * V breaks the size coupling
        let mut bad = st.clone();
        let v = int_from_str(&bad.v).unwrap();
        let b = int_from_str(&bad.b).unwrap();
        bad.b = BigInt::from(&b * &v).to_string();
        let verdicts = verify_tuned_certificate(&[bad], &x, DEFAULT_BUDGET).unwrap();
        assert!(!verdicts[0].size_coupling);

        // V = 1 fails the floor requirement
        let mut bad = st;
        bad.v = "1".into();
        let verdicts = verify_tuned_certificate(&[bad], &x, DEFAULT_BUDGET).unwrap();
        assert!(!verdicts[0].v_floor);
    }

    #[test]
    fn error_chain_decomposition() {
        let x = factorial_all2();
        let st = build_tuned_stage(&x, 1, 1, DEFAULT_BUDGET).unwrap();
        let chain = selfpower_error_chain(&x, &st, DEFAULT_BUDGET).unwrap();
        assert!(!chain.total.is_zero());
        // the total dominates each term
        for t in [&chain.tail_through_phi, &chain.target_gap, &chain.exp_gap] {
            assert_ne!(
                chain.total.compare(t, DEFAULT_BUDGET).unwrap(),
                Ordering::Less
            );
        }

        // all-zero tail beyond m_j collapses the tail term entirely
        let y = SpiffyNumber::new(
            ExponentSchedule::new(ScheduleKind::Factorial { offset: 1 }).unwrap(),
            DigitSequence::new(vec![2], TailRule::Constant { digit: 0 }).unwrap(),
        );
        let st_y = build_tuned_stage(&y, 1, 1, DEFAULT_BUDGET).unwrap();
        let chain_y = selfpower_error_chain(&y, &st_y, DEFAULT_BUDGET).unwrap();
        assert!(chain_y.tail_through_phi.is_zero());
    }

    #[test]
    fn error_chain_tail_vanishes_at_deep_levels() {
        // with m_j at a deep materializable level the tail term sits far
        // below the target and exp gaps
        let x = factorial_all2();
        let st = build_tuned_stage(&x, 1, 5, DEFAULT_BUDGET).unwrap();
        let chain = selfpower_error_chain(&x, &st, DEFAULT_BUDGET).unwrap();
        assert_eq!(
            chain.tail_through_phi.compare(&chain.target_gap, DEFAULT_BUDGET).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            chain.tail_through_phi.compare(&chain.exp_gap, DEFAULT_BUDGET).unwrap(),
            Ordering::Less
        );
        assert!(chain.dominant != 0);
    }

    #[test]
    fn zero_stage_error_collapses_to_taylor_remainder() {
        // a stage whose approximant equals the target exactly leaves only
        // the Taylor remainder in the decomposition
        let mut target = crate::diophantine::jarnik_generate(
            &ForcedSchedule::DoubleExp { base: 2, inner: 2 },
            2,
            2,
            DEFAULT_BUDGET,
        )
        .unwrap();
        target.stages[0].error = BigRational::new();
        let stage = exp_of_jarnik_certificate(&target, 1, 6, DEFAULT_BUDGET).unwrap();
        let remainder = &stage.error_terms[1].value;
        assert!(stage.error_terms[0].value.is_zero());
        assert_eq!(
            stage.total_error.compare(remainder, DEFAULT_BUDGET).unwrap(),
            Ordering::Equal
        );
    }

    #[test]
    fn selfpower_certificate_round_trip() {
        let cert = build_selfpower_certificate(
            &ForcedSchedule::DoubleExp { base: 2, inner: 2 },
            2,
            3,
            DegreeRule::Square,
            DEFAULT_BUDGET,
            DEFAULT_CAP_BITS,
        )
        .unwrap();
        let file = CertificateFile::new(Certificate::Selfpower(cert));
        let json = file.to_json();
        let back = CertificateFile::from_json(&json).unwrap();
        let report = verify_certificate(&back).unwrap();
        assert_eq!(report.verdict, Verdict::Accepted);
        assert_eq!(report.achieved.len(), 3);

        // determinism: rebuilding produces byte-identical JSON
        let cert2 = build_selfpower_certificate(
            &ForcedSchedule::DoubleExp { base: 2, inner: 2 },
            2,
            3,
            DegreeRule::Square,
            DEFAULT_BUDGET,
            DEFAULT_CAP_BITS,
        )
        .unwrap();
        let json2 = CertificateFile::new(Certificate::Selfpower(cert2)).to_json();
        assert_eq!(json, json2);
    }

    #[test]
    fn selfpower_tampering_rejected() {
        let cert = build_selfpower_certificate(
            &ForcedSchedule::DoubleExp { base: 2, inner: 2 },
            2,
            2,
            DegreeRule::Square,
            DEFAULT_BUDGET,
            DEFAULT_CAP_BITS,
        )
        .unwrap();
        // P <- P + 1
        let mut bad = cert.clone();
        let p = int_from_str(&bad.stages[0].p).unwrap();
        bad.stages[0].p = BigInt::from(&p + &BigInt::from(1)).to_string();
        let report =
            verify_certificate(&CertificateFile::new(Certificate::Selfpower(bad))).unwrap();
        assert!(matches!(report.verdict, Verdict::Rejected { .. }));
    }

    #[test]
    fn poly_closure_example_pair() {
        // digits differing only at n0 = 2: x - y = 2/3^27 exactly
        let schedule = ExponentSchedule::new(ScheduleKind::PaperTower).unwrap();
        let x = SpiffyNumber::new(schedule.clone(), DigitSequence::all_two());
        let y = SpiffyNumber::new(
            schedule.clone(),
            DigitSequence::new(vec![2, 0], TailRule::Constant { digit: 2 }).unwrap(),
        );
        let p = IntPolynomial::parse("X-Y", 2).unwrap();
        let cert =
            poly_closure_certificate(&p, &[x.clone(), y.clone()], 2, DEFAULT_BUDGET).unwrap();
        let expected = BigRational::from((BigInt::from(2), int_pow(&BigInt::from(3), 27)));
        assert_eq!(cert.rational_escape, Some(rat_to_str(&expected)));
        assert_eq!(
            BigRational::from((
                int_from_str(&cert.r_num).unwrap(),
                int_from_str(&cert.r_den).unwrap()
            )),
            expected
        );

        // q X - q Y - 2 with q = 3^27 vanishes exactly
        let q = IntPolynomial::parse("7625597484987*X - 7625597484987*Y - 2", 2).unwrap();
        let cert2 = poly_closure_certificate(&q, &[x, y], 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(cert2.rational_escape, Some("0/1".to_string()));

        // and the true difference of deep truncations equals the escape value
        // for every m >= 2 (difference of truncations is constant)
    }

    #[test]
    fn poly_closure_square_example() {
        // P = X^2, all-2 paper tower, m = 1: R = 4/729, M = 2, C = 6
        let x = SpiffyNumber::new(
            ExponentSchedule::new(ScheduleKind::PaperTower).unwrap(),
            DigitSequence::all_two(),
        );
        let p = IntPolynomial::parse("X^2", 1).unwrap();
        let cert = poly_closure_certificate(&p, &[x], 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(cert.r_num, "4");
        assert_eq!(cert.r_den, "729");
        assert_eq!(cert.gradient_bound, "2");
        assert_eq!(cert.c, "6");
        assert!(cert.denominator_divides);
        assert!(cert.rational_escape.is_none());
        // error = 6 * 3^-26
        let expected = Magnitude::from_power_int(3, -26, DEFAULT_CAP_BITS)
            .unwrap()
            .mul_rational(&rat(6, 1))
            .unwrap();
        assert_eq!(
            cert.error.compare(&expected, DEFAULT_BUDGET).unwrap(),
            Ordering::Equal
        );
    }

    #[test]
    fn poly_closure_verification_and_tampering() {
        let x = factorial_all2();
        let y = SpiffyNumber::new(
            ExponentSchedule::new(ScheduleKind::Factorial { offset: 1 }).unwrap(),
            DigitSequence::new(
                vec![0, 2],
                TailRule::Periodic {
                    pattern: vec![2, 0],
                },
            )
            .unwrap(),
        );
        let p = IntPolynomial::parse("X*Y - 3*X + 1", 2).unwrap();
        let cert = poly_closure_certificate(&p, &[x, y], 3, DEFAULT_BUDGET).unwrap();
        let file = CertificateFile::new(Certificate::PolyClosure(cert.clone()));
        let report = verify_certificate(&file).unwrap();
        assert_eq!(report.verdict, Verdict::Accepted);

        let mut bad = cert;
        bad.r_num = (int_from_str(&bad.r_num).unwrap() + BigInt::from(1)).to_string();
        let report =
            verify_certificate(&CertificateFile::new(Certificate::PolyClosure(bad))).unwrap();
        assert!(matches!(report.verdict, Verdict::Rejected { .. }));
    }

    #[test]
    fn pairwise_consistency_case() {
        // x = y: certifies x^x with the anchor-proximity term from one tail
        let x = factorial_all2();
        let levels = vec![2, 3, 4];
        let cert = build_pairwise_certificate(
            &x,
            &x.clone(),
            &levels,
            GapRule::RatioAtLeast { factor: 3 },
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert_eq!(cert.stages.len(), 3);
        for s in &cert.stages {
            assert_eq!(s.error_terms.len(), 3);
            assert!(!s.total_error.is_zero());
        }
        let file = CertificateFile::new(Certificate::Pairwise(cert));
        let report = verify_certificate(&file).unwrap();
        assert_eq!(report.verdict, Verdict::Accepted);
    }

    #[test]
    fn pairwise_anchor_mismatch() {
        let x = factorial_all2();
        let y = SpiffyNumber::new(
            ExponentSchedule::new(ScheduleKind::Factorial { offset: 1 }).unwrap(),
            DigitSequence::new(vec![0], TailRule::Constant { digit: 2 }).unwrap(),
        );
        let err = pairwise_power_certificate(&x, &y, &[2, 3], 1, DEFAULT_BUDGET);
        assert!(matches!(err, Err(Error::AnchorMismatch(_))));
    }

    #[test]
    fn pairwise_tampering_rejected() {
        let x = factorial_all2();
        let cert = build_pairwise_certificate(
            &x,
            &x.clone(),
            &[2, 3],
            GapRule::RatioAtLeast { factor: 3 },
            DEFAULT_BUDGET,
        )
        .unwrap();
        let mut bad = cert;
        bad.stages[0].log_num =
            (int_from_str(&bad.stages[0].log_num).unwrap() + BigInt::from(1)).to_string();
        let report = verify_certificate(&CertificateFile::new(Certificate::Pairwise(bad))).unwrap();
        assert!(matches!(report.verdict, Verdict::Rejected { .. }));
    }

    #[test]
    fn digit_search_hits_exact_target() {
        let x = factorial_all2();
        // target = phi at the all-2 block: the exhaustive search finds it with
        // a zero-width... the gap encloses zero but phi is irrational, so the
        // best achievable is a tiny enclosure around 0
        let r = x.truncate(3).unwrap();
        let phi_enc = selfpower::phi(&IntervalReal::point(r), 320).unwrap();
        let target = phi_enc.midpoint();
        let tol = Magnitude::from_rational(rat(1, 1000)).unwrap();
        let out = tune_digits_search(&x, &target, 2, 3, &tol, DEFAULT_BUDGET).unwrap();
        assert_eq!(out.digits, vec![2, 2]);
        assert_eq!(out.tolerance_met, Some(true));
        assert!(!out.out_of_range);
    }

    #[test]
    fn digit_search_reports_unreachable_target() {
        let x = factorial_all2();
        // a positive target is outside phi's range on (0, e^-1)
        let tol = Magnitude::from_rational(rat(1, 1_000_000)).unwrap();
        let out = tune_digits_search(&x, &rat(1, 2), 2, 3, &tol, DEFAULT_BUDGET).unwrap();
        assert!(out.out_of_range);
        assert_eq!(out.tolerance_met, Some(false));
    }

    #[test]
    fn vacuous_certificates_accepted() {
        let cert = build_selfpower_certificate(
            &ForcedSchedule::DoubleExp { base: 2, inner: 2 },
            2,
            0,
            DegreeRule::Square,
            DEFAULT_BUDGET,
            DEFAULT_CAP_BITS,
        )
        .unwrap();
        let report =
            verify_certificate(&CertificateFile::new(Certificate::Selfpower(cert))).unwrap();
        assert_eq!(report.verdict, Verdict::Vacuous);
    }

    #[test]
    fn malformed_json_is_explicit() {
        assert!(matches!(
            CertificateFile::from_json("{"),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(
            CertificateFile::from_json(r#"{"schema_version": 99, "type": "selfpower"}"#),
            Err(Error::Malformed(_))
        ));
    }
}
