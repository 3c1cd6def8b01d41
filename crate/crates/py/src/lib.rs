//! Python bindings over the core types and operations: digit-schedule
//! numbers with exact truncations and tail bounds, continued fractions and
//! forced-quotient targets, Taylor rational approximants, certified
//! self-power analysis, and the certificate builders and verifier.
//!
//! Exact values cross the boundary as decimal strings (`"num/den"`); richer
//! structures as JSON strings matching the CLI formats.

use liouville_core::certify::{
    build_pairwise_certificate, build_selfpower_certificate, build_tuned_parameters,
    poly_closure_certificate, verify_certificate, Certificate, CertificateFile, DegreeRule,
    GapRule, Verdict,
};
use liouville_core::diophantine::{
    dirichlet_approx, exp_taylor_rational, jarnik_generate, ContinuedFraction, ForcedSchedule,
};
use liouville_core::error::Error;
use liouville_core::magnitude::DEFAULT_CAP_BITS;
use liouville_core::poly::IntPolynomial;
use liouville_core::rational::{rat_from_str, rat_to_str, BigInt};
use liouville_core::schedule::{
    BoundValue, DigitSequence, ExponentSchedule, ScheduleKind, SpiffyNumber,
};
use liouville_core::selfpower::{self, PhiBranch};
use liouville_core::{IntervalReal, DEFAULT_BUDGET};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn interval_pair(i: &IntervalReal) -> (String, String) {
    (rat_to_str(i.lower()), rat_to_str(i.upper()))
}

/// A number `sum a_n 3^(-e_n)` from a digit rule on an exponent schedule.
#[pyclass]
struct Spiffy {
    inner: SpiffyNumber,
    budget: u32,
}

#[pymethods]
impl Spiffy {
    /// `schedule`: paper | factorial:K | tower:B,E1 | custom:3,9,81;
    /// `digits`: all2 | all0 | period:DIGITS | prefix:DIGITS,tail:RULE.
    #[new]
    #[pyo3(signature = (schedule, digits, budget=None, cap=None))]
    fn new(schedule: &str, digits: &str, budget: Option<u32>, cap: Option<u64>) -> PyResult<Self> {
        let kind = ScheduleKind::parse_spec(schedule).map_err(py_err)?;
        let digits = DigitSequence::parse_spec(digits).map_err(py_err)?;
        let sched =
            ExponentSchedule::with_cap(kind, cap.unwrap_or(DEFAULT_CAP_BITS)).map_err(py_err)?;
        Ok(Self {
            inner: SpiffyNumber::new(sched, digits),
            budget: budget.unwrap_or(DEFAULT_BUDGET),
        })
    }

    /// Exact truncation `r_m` as `"num/den"`.
    fn truncate(&self, m: usize) -> PyResult<String> {
        Ok(rat_to_str(&self.inner.truncate(m).map_err(py_err)?))
    }

    /// `(generic, refined)` tail bounds as magnitude JSON strings.
    fn tail_bound(&self, m: usize) -> PyResult<(String, String)> {
        let tb = self.inner.tail_bound(m).map_err(py_err)?;
        Ok((
            serde_json::to_string(&tb.generic).expect("magnitude json"),
            serde_json::to_string(&tb.refined).expect("magnitude json"),
        ))
    }

    /// `[r_m, r_m + tail]` as a pair of exact rational strings.
    fn enclosure(&self, m: usize) -> PyResult<(String, String)> {
        Ok(interval_pair(
            &self.inner.evaluate_enclosure(m).map_err(py_err)?,
        ))
    }

    /// Guaranteed approximation exponent at level `m` (exact value or a
    /// certified lower bound, flagged by the second element).
    fn guaranteed_exponent(&self, m: usize) -> PyResult<(String, bool)> {
        let rep = self
            .inner
            .liouville_exponent_lower(m, self.budget)
            .map_err(py_err)?;
        Ok(match rep.guaranteed {
            BoundValue::Exact(v) => (rat_to_str(&v), true),
            BoundValue::AtLeast(v) => (rat_to_str(&v), false),
        })
    }

    /// Strengthened-rate check: returns `(holds, out_of_definition)`.
    fn epsilon_strong(&self, eps: &str, m: usize) -> PyResult<(bool, bool)> {
        let eps = rat_from_str(eps).map_err(py_err)?;
        let rep = self
            .inner
            .epsilon_strong_check(&eps, m, self.budget)
            .map_err(py_err)?;
        Ok((rep.holds, rep.out_of_definition))
    }

    fn is_spiffy_constant(&self) -> bool {
        self.inner.is_spiffy_constant()
    }
}

/// Convergent table `[(p_k, q_k), ...]` of `[a0; a1, a2, ...]`.
#[pyfunction]
fn continued_fraction(integer_part: i64, quotients: Vec<u64>) -> PyResult<Vec<(String, String)>> {
    let cf = ContinuedFraction::new(
        BigInt::from(integer_part),
        quotients.into_iter().map(BigInt::from).collect(),
    )
    .map_err(py_err)?;
    Ok(cf
        .convergents()
        .iter()
        .map(|(p, q)| (p.to_string(), q.to_string()))
        .collect())
}

/// Best rational approximation of `[lo, hi]` with denominator at most `q_cap`,
/// certified against the Dirichlet bound.
#[pyfunction]
fn dirichlet(lo: &str, hi: &str, q_cap: u64) -> PyResult<(String, String)> {
    let alpha = IntervalReal::new(
        rat_from_str(lo).map_err(py_err)?,
        rat_from_str(hi).map_err(py_err)?,
    )
    .map_err(py_err)?;
    let (p, q) = dirichlet_approx(&alpha, &BigInt::from(q_cap)).map_err(py_err)?;
    Ok((p.to_string(), q.to_string()))
}

/// Forced-quotient target as a JSON document (same shape as the CLI output).
#[pyfunction]
#[pyo3(signature = (forced, filler=2, stages=4, budget=None))]
fn jarnik(forced: &str, filler: u32, stages: usize, budget: Option<u32>) -> PyResult<String> {
    let schedule = ForcedSchedule::parse_spec(forced).map_err(py_err)?;
    let target = jarnik_generate(&schedule, filler, stages, budget.unwrap_or(DEFAULT_BUDGET))
        .map_err(py_err)?;
    let records: Vec<serde_json::Value> = target
        .stages
        .iter()
        .map(|s| {
            serde_json::json!({
                "stage": s.stage,
                "index": s.index,
                "forced_quotient": s.forced_quotient.to_string(),
                "approximant": [s.approximant.0.to_string(), s.approximant.1.to_string()],
                "error": rat_to_str(&s.error),
                "error_upper": rat_to_str(&s.error_upper),
                "achieved_exponent": s.achieved_exponent,
            })
        })
        .collect();
    Ok(serde_json::json!({
        "forced": schedule,
        "filler": filler,
        "stages": stages,
        "value": rat_to_str(&target.value),
        "stage_records": records,
    })
    .to_string())
}

/// Exact Taylor approximant of `e^U`: value, remainder bound, and the
/// denominator certificate flags `(Q | B^L*L!, Q | B^L*lcm(1..L))`.
#[pyfunction]
#[pyo3(signature = (u, degree, budget=None))]
fn exp_taylor(u: &str, degree: u32, budget: Option<u32>) -> PyResult<(String, String, bool, bool)> {
    let u = rat_from_str(u).map_err(py_err)?;
    let a =
        exp_taylor_rational(&u, degree, budget.unwrap_or(DEFAULT_BUDGET), false).map_err(py_err)?;
    Ok((
        rat_to_str(&a.value),
        rat_to_str(&a.remainder_bound),
        a.denominator_certificate.divides_factorial_form,
        a.denominator_certificate.divides_lcm_form,
    ))
}

/// Certified enclosure of `x^x` for exact rational `x > 0`.
#[pyfunction]
#[pyo3(signature = (x, budget=None))]
fn self_power(x: &str, budget: Option<u32>) -> PyResult<(String, String)> {
    let x = rat_from_str(x).map_err(py_err)?;
    let v = selfpower::self_power(&IntervalReal::point(x), budget.unwrap_or(DEFAULT_BUDGET))
        .map_err(py_err)?;
    Ok(interval_pair(&v))
}

/// Preimage enclosures of `x^x = y`: zero, one, or two `(lo, hi)` pairs.
#[pyfunction]
#[pyo3(signature = (y, budget=None))]
fn invert_self_power(y: &str, budget: Option<u32>) -> PyResult<Vec<(String, String)>> {
    let y = rat_from_str(y).map_err(py_err)?;
    let pre =
        selfpower::invert_self_power(&IntervalReal::point(y), budget.unwrap_or(DEFAULT_BUDGET))
            .map_err(py_err)?;
    Ok(pre.iter().map(interval_pair).collect())
}

/// Branch inverse of `x ln x = u`; `branch` is `"lower"` or `"upper"`.
#[pyfunction]
#[pyo3(signature = (u, branch, budget=None))]
fn invert_xlogx(u: &str, branch: &str, budget: Option<u32>) -> PyResult<(String, String)> {
    let u = rat_from_str(u).map_err(py_err)?;
    let b = match branch {
        "lower" => PhiBranch::Lower,
        "upper" => PhiBranch::Upper,
        _ => return Err(PyValueError::new_err("branch must be 'lower' or 'upper'")),
    };
    let x = selfpower::invert_xlogx(&IntervalReal::point(u), b, budget.unwrap_or(DEFAULT_BUDGET))
        .map_err(py_err)?;
    Ok(interval_pair(&x))
}

/// Exclusion scan of `xi^xi` (exact rational `xi`) against reduced `a/b`,
/// `b <= b_max`; returns the CSV report.
#[pyfunction]
#[pyo3(signature = (xi, tau, b_max, budget=None))]
fn scan(xi: &str, tau: &str, b_max: u64, budget: Option<u32>) -> PyResult<String> {
    let xi = rat_from_str(xi).map_err(py_err)?;
    let tau = rat_from_str(tau).map_err(py_err)?;
    let report = selfpower::non_liouville_scan(
        &IntervalReal::point(xi),
        &tau,
        b_max,
        budget.unwrap_or(DEFAULT_BUDGET),
    )
    .map_err(py_err)?;
    Ok(report.to_csv())
}

/// Tuned denominators `(V_j, B_j)`.
#[pyfunction]
#[pyo3(signature = (j, budget=None))]
fn tuned_parameters(j: u32, budget: Option<u32>) -> PyResult<(String, String)> {
    let (v, b) = build_tuned_parameters(j, budget.unwrap_or(DEFAULT_BUDGET)).map_err(py_err)?;
    Ok((v.to_string(), b.to_string()))
}

/// Self-power certificate JSON for a forced-quotient run.
#[pyfunction]
#[pyo3(signature = (forced, filler=2, stages=4, budget=None))]
fn certify_selfpower(
    forced: &str,
    filler: u32,
    stages: usize,
    budget: Option<u32>,
) -> PyResult<String> {
    let schedule = ForcedSchedule::parse_spec(forced).map_err(py_err)?;
    let cert = build_selfpower_certificate(
        &schedule,
        filler,
        stages,
        DegreeRule::Square,
        budget.unwrap_or(DEFAULT_BUDGET),
        DEFAULT_CAP_BITS,
    )
    .map_err(py_err)?;
    Ok(CertificateFile::new(Certificate::Selfpower(cert)).to_json())
}

/// Polynomial-image certificate JSON. `inputs` is a JSON document
/// `{"schedule": ..., "inputs": [digit rules]}` as in the CLI.
#[pyfunction]
#[pyo3(signature = (poly, inputs, m, budget=None))]
fn certify_poly(poly: &str, inputs: &str, m: usize, budget: Option<u32>) -> PyResult<String> {
    #[derive(serde::Deserialize)]
    struct InputsDoc {
        schedule: ScheduleKind,
        inputs: Vec<DigitSequence>,
    }
    let doc: InputsDoc =
        serde_json::from_str(inputs).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let schedule = ExponentSchedule::new(doc.schedule).map_err(py_err)?;
    let xs: Vec<SpiffyNumber> = doc
        .inputs
        .into_iter()
        .map(|d| SpiffyNumber::new(schedule.clone(), d))
        .collect();
    let p = IntPolynomial::parse(poly, xs.len()).map_err(py_err)?;
    let cert =
        poly_closure_certificate(&p, &xs, m, budget.unwrap_or(DEFAULT_BUDGET)).map_err(py_err)?;
    Ok(CertificateFile::new(Certificate::PolyClosure(cert)).to_json())
}

/// Pairwise-power certificate JSON over synchronized anchor levels.
#[pyfunction]
#[pyo3(signature = (inputs, levels, gap_factor=3, budget=None))]
fn certify_pairwise(
    inputs: &str,
    levels: Vec<usize>,
    gap_factor: u64,
    budget: Option<u32>,
) -> PyResult<String> {
    #[derive(serde::Deserialize)]
    struct InputsDoc {
        schedule: ScheduleKind,
        inputs: Vec<DigitSequence>,
    }
    let doc: InputsDoc =
        serde_json::from_str(inputs).map_err(|e| PyValueError::new_err(e.to_string()))?;
    if doc.inputs.len() != 2 {
        return Err(PyValueError::new_err("pairwise needs exactly two inputs"));
    }
    let schedule = ExponentSchedule::new(doc.schedule).map_err(py_err)?;
    let mut it = doc.inputs.into_iter();
    let x = SpiffyNumber::new(schedule.clone(), it.next().unwrap());
    let y = SpiffyNumber::new(schedule, it.next().unwrap());
    let cert = build_pairwise_certificate(
        &x,
        &y,
        &levels,
        GapRule::RatioAtLeast { factor: gap_factor },
        budget.unwrap_or(DEFAULT_BUDGET),
    )
    .map_err(py_err)?;
    Ok(CertificateFile::new(Certificate::Pairwise(cert)).to_json())
}

/// Re-derive every bound in a certificate: `(accepted, detail)`.
#[pyfunction]
fn verify(certificate_json: &str) -> PyResult<(bool, String)> {
    let file = CertificateFile::from_json(certificate_json).map_err(py_err)?;
    let report = verify_certificate(&file).map_err(py_err)?;
    Ok(match report.verdict {
        Verdict::Accepted => (true, "accepted".into()),
        Verdict::Vacuous => (true, "vacuous".into()),
        Verdict::Rejected { stage, check } => (false, format!("{stage}: {check}")),
    })
}

#[pymodule]
fn liouville_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Spiffy>()?;
    m.add_function(wrap_pyfunction!(continued_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(dirichlet, m)?)?;
    m.add_function(wrap_pyfunction!(jarnik, m)?)?;
    m.add_function(wrap_pyfunction!(exp_taylor, m)?)?;
    m.add_function(wrap_pyfunction!(self_power, m)?)?;
    m.add_function(wrap_pyfunction!(invert_self_power, m)?)?;
    m.add_function(wrap_pyfunction!(invert_xlogx, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(tuned_parameters, m)?)?;
    m.add_function(wrap_pyfunction!(certify_selfpower, m)?)?;
    m.add_function(wrap_pyfunction!(certify_poly, m)?)?;
    m.add_function(wrap_pyfunction!(certify_pairwise, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
