//! Command-line front end: construct digit-schedule numbers and
//! forced-quotient targets, build and verify approximation certificates,
//! and run exclusion scans.
//!
//! Exit codes: 0 success, 1 semantic failure (rejected certificate or a
//! requested exponent not achieved), 2 invalid input, 3 resource or
//! precision limit.

use clap::{Args, Parser, Subcommand};
use liouville_core::certify::{
    build_pairwise_certificate, build_selfpower_certificate, build_tuned_parameters,
    poly_closure_certificate, verify_certificate, Certificate, CertificateFile, DegreeRule,
    GapRule, Verdict,
};
use liouville_core::diophantine::{jarnik_generate, ForcedSchedule};
use liouville_core::error::Error;
use liouville_core::poly::IntPolynomial;
use liouville_core::rational::{decimal_string, rat_from_str, rat_to_str, BigRational};
use liouville_core::schedule::{
    BoundValue, DigitSequence, ExponentSchedule, ExponentValue, ScheduleKind, SpiffyNumber,
};
use liouville_core::selfpower::{invert_self_power, non_liouville_scan, ExclusionReport};
use liouville_core::IntervalReal;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_SEMANTIC: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "liouville",
    version,
    about = "Exact-arithmetic approximation certificates for digit-schedule numbers, their self-powers, and polynomial images"
)]
struct Cli {
    /// Precision budget in bits (default from LIOUVILLE_BUDGET_BITS or 256).
    #[arg(long, global = true)]
    budget: Option<u32>,
    /// Materialization cap in bits for exact integers.
    #[arg(long, global = true)]
    cap: Option<u64>,
    /// Worker cap for parallelizable scans.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build objects: digit-schedule numbers, forced-quotient targets,
    /// tuned parameters.
    Construct {
        #[command(subcommand)]
        kind: ConstructKind,
    },
    /// Build approximation certificates.
    Certify {
        #[command(subcommand)]
        kind: CertifyKind,
    },
    /// Re-derive every bound in a certificate file.
    Verify { file: PathBuf },
    /// Print the achieved-exponent table of a certificate.
    Report { file: PathBuf },
    /// Scan rationals against a self-power value.
    Scan(ScanArgs),
}

#[derive(Subcommand)]
enum ConstructKind {
    /// A number from a digit sequence on an exponent schedule.
    Spiffy {
        /// paper | factorial:K | tower:B,E1 | custom:3,9,81
        #[arg(long)]
        schedule: String,
        /// all2 | all0 | period:DIGITS | prefix:DIGITS,tail:(all2|all0|period:DIGITS)
        #[arg(long)]
        digits: String,
        /// Number of truncation levels to materialize.
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A continued-fraction target with forced large partial quotients.
    Jarnik {
        /// "2^(2^n)" | ceil-exp-n3 | list:4,16,256
        #[arg(long)]
        forced: String,
        #[arg(long, default_value_t = 2)]
        filler: u32,
        #[arg(long)]
        stages: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tuned denominators V_j = floor(e^(j^3)), B_j = V_j^j.
    TunedParams {
        #[arg(long)]
        j: u32,
    },
}

#[derive(Subcommand)]
enum CertifyKind {
    /// Self-power certificate from a forced-quotient target config.
    Selfpower {
        /// Target JSON written by `construct jarnik`.
        #[arg(long)]
        from: PathBuf,
        /// Number of stages to certify (defaults to the target's stages).
        #[arg(long)]
        stages: Option<usize>,
        /// n2 | const:K
        #[arg(long, default_value = "n2")]
        l_rule: String,
        #[arg(long)]
        target_n: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integer-polynomial image certificate.
    Poly {
        /// Polynomial over X, Y, Z (or X1..Xn), e.g. "X-Y".
        #[arg(long)]
        poly: String,
        /// JSON file with {"schedule": ..., "inputs": [digit rules]}.
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        target_n: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise-power certificate over synchronized anchors.
    Pairwise {
        /// JSON file with {"schedule": ..., "inputs": [x digits, y digits]}.
        #[arg(long)]
        inputs: PathBuf,
        /// Synchronized truncation levels, e.g. 2,3,4.
        #[arg(long)]
        levels: String,
        /// literal | relaxed:FACTOR
        #[arg(long, default_value = "relaxed:3")]
        gap_rule: String,
        #[arg(long)]
        target_n: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScanArgs {
    /// rational:P/Q | invert:P/Q (increasing-branch preimage of P/Q).
    #[arg(long)]
    xi: String,
    #[arg(long)]
    tau: String,
    #[arg(long)]
    bmax: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let budget = cli.budget.unwrap_or_else(|| {
        std::env::var("LIOUVILLE_BUDGET_BITS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(liouville_core::DEFAULT_BUDGET)
    });
    let cap = cli
        .cap
        .unwrap_or(liouville_core::magnitude::DEFAULT_CAP_BITS);
    match run(cli.command, budget, cap, cli.jobs) {
        Ok(code) => code,
        Err(e) => {
            let (kind, code) = classify(&e);
            let mut diag = json!({ "error": e.to_string(), "kind": kind });
            if let Error::PrecisionInsufficient { undecided } = &e {
                diag["undecided_pairs"] = json!(undecided);
            }
            eprintln!("{diag}");
            ExitCode::from(code)
        }
    }
}

fn classify(e: &Error) -> (&'static str, u8) {
    match e {
        Error::Unmaterializable(_)
        | Error::PrecisionInsufficient { .. }
        | Error::IncomparableEnclosure => ("resource-or-precision", EXIT_RESOURCE),
        Error::Malformed(_)
        | Error::Domain(_)
        | Error::AmbiguousEnclosure(_)
        | Error::MixedSchedule(_)
        | Error::AnchorMismatch(_)
        | Error::BranchEmpty(_)
        | Error::TrichotomyAmbiguous(_) => ("invalid-input", EXIT_INVALID),
    }
}

fn run(cmd: Command, budget: u32, cap: u64, jobs: usize) -> Result<ExitCode, Error> {
    match cmd {
        Command::Construct { kind } => construct(kind, budget, cap),
        Command::Certify { kind } => certify(kind, budget, cap),
        Command::Verify { file } => verify(&file),
        Command::Report { file } => report(&file),
        Command::Scan(args) => scan(args, budget, jobs),
    }
}

// --- parsing the mini-languages ---------------------------------------

fn parse_schedule(spec: &str) -> Result<ScheduleKind, Error> {
    ScheduleKind::parse_spec(spec)
}

fn parse_digits(spec: &str) -> Result<DigitSequence, Error> {
    DigitSequence::parse_spec(spec)
}

fn parse_forced(spec: &str) -> Result<ForcedSchedule, Error> {
    ForcedSchedule::parse_spec(spec)
}

fn parse_gap_rule(spec: &str) -> Result<GapRule, Error> {
    if spec == "literal" {
        return Ok(GapRule::Literal);
    }
    if let Some(rest) = spec.strip_prefix("relaxed:") {
        let factor: u64 = rest
            .parse()
            .map_err(|_| Error::Malformed("bad relaxed gap factor".into()))?;
        return Ok(GapRule::RatioAtLeast { factor });
    }
    Err(Error::Malformed(format!("unknown gap rule {spec:?}")))
}

#[derive(serde::Deserialize)]
struct InputsFile {
    schedule: ScheduleKind,
    inputs: Vec<DigitSequence>,
}

fn load_inputs(path: &PathBuf, cap: u64) -> Result<Vec<SpiffyNumber>, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    let file: InputsFile =
        serde_json::from_str(&text).map_err(|e| Error::Malformed(e.to_string()))?;
    let schedule = ExponentSchedule::with_cap(file.schedule, cap)?;
    Ok(file
        .inputs
        .into_iter()
        .map(|d| SpiffyNumber::new(schedule.clone(), d))
        .collect())
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::Malformed(format!("{}: {e}", path.display()))),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

// --- construct ----------------------------------------------------------

fn construct(kind: ConstructKind, budget: u32, cap: u64) -> Result<ExitCode, Error> {
    match kind {
        ConstructKind::Spiffy {
            schedule,
            digits,
            levels,
            out,
        } => {
            let kind = parse_schedule(&schedule)?;
            let digits = parse_digits(&digits)?;
            let sched = ExponentSchedule::with_cap(kind.clone(), cap)?;
            let x = SpiffyNumber::new(sched, digits.clone());

            let mut truncations = Vec::with_capacity(levels);
            let mut tails = Vec::with_capacity(levels);
            let mut exponents = Vec::with_capacity(levels);
            eprintln!(
                "{:>5} {:>16} {:>24} {:>18}",
                "level", "exponent", "truncation", "guaranteed-exp"
            );
            for m in 1..=levels {
                let r = x.truncate(m)?;
                let tb = x.tail_bound(m)?;
                let rep = x.liouville_exponent_lower(m, budget)?;
                let e_desc = match x.schedule().exponent(m)? {
                    ExponentValue::Int(e) => e.to_string(),
                    ExponentValue::Deep(_) => "(escalated)".into(),
                };
                let g_desc = match &rep.guaranteed {
                    BoundValue::Exact(v) => decimal_string(v, 4),
                    BoundValue::AtLeast(v) => format!(">= {}", decimal_string(v, 4)),
                };
                eprintln!(
                    "{:>5} {:>16} {:>24} {:>18}{}",
                    m,
                    e_desc,
                    decimal_string(&r, 18),
                    g_desc,
                    if rep.liouville_grade {
                        ""
                    } else {
                        "  [non-Liouville-grade]"
                    }
                );
                truncations.push(rat_to_str(&r));
                tails.push(json!({
                    "generic": tb.generic,
                    "refined": tb.refined,
                }));
                exponents.push(g_desc);
            }
            let doc = serde_json::to_string_pretty(&json!({
                "schedule": kind,
                "digits": digits,
                "levels": levels,
                "cap_bits": cap,
                "spiffy_constant": x.is_spiffy_constant(),
                "truncations": truncations,
                "tail_bounds": tails,
                "guaranteed_exponents": exponents,
            }))
            .expect("json");
            write_output(&out, &doc)?;
            Ok(ExitCode::SUCCESS)
        }
        ConstructKind::Jarnik {
            forced,
            filler,
            stages,
            out,
        } => {
            let schedule = parse_forced(&forced)?;
            let target = jarnik_generate(&schedule, filler, stages, budget)?;
            eprintln!(
                "{:>5} {:>7} {:>20} {:>16} {:>14}",
                "stage", "index", "forced-quotient", "denominator", "achieved-exp"
            );
            let mut records = Vec::new();
            for s in &target.stages {
                let ach = s
                    .achieved_exponent
                    .as_ref()
                    .map(|e| decimal_string(e.lower(), 6))
                    .unwrap_or_else(|| "-".into());
                eprintln!(
                    "{:>5} {:>7} {:>20} {:>16} {:>14}",
                    s.stage,
                    s.index,
                    s.forced_quotient.to_string(),
                    s.approximant.1.to_string(),
                    ach
                );
                records.push(json!({
                    "stage": s.stage,
                    "index": s.index,
                    "forced_quotient": s.forced_quotient.to_string(),
                    "approximant": [s.approximant.0.to_string(), s.approximant.1.to_string()],
                    "error": rat_to_str(&s.error),
                    "error_upper": rat_to_str(&s.error_upper),
                    "log_denominator": s.log_denominator,
                    "achieved_exponent": s.achieved_exponent,
                }));
            }
            let doc = serde_json::to_string_pretty(&json!({
                "forced": schedule,
                "filler": filler,
                "stages": stages,
                "value": rat_to_str(&target.value),
                "quotients": target.cf.quotients().iter().map(|q| q.to_string()).collect::<Vec<_>>(),
                "stage_records": records,
            }))
            .expect("json");
            write_output(&out, &doc)?;
            Ok(ExitCode::SUCCESS)
        }
        ConstructKind::TunedParams { j } => {
            let (v, b) = build_tuned_parameters(j, budget)?;
            println!(
                "{}",
                json!({ "j": j, "V": v.to_string(), "B": b.to_string() })
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

// --- certify --------------------------------------------------------------

#[derive(serde::Deserialize)]
struct JarnikConfigFile {
    forced: ForcedSchedule,
    filler: u32,
    stages: usize,
}

fn certify(kind: CertifyKind, budget: u32, cap: u64) -> Result<ExitCode, Error> {
    match kind {
        CertifyKind::Selfpower {
            from,
            stages,
            l_rule,
            target_n,
            out,
        } => {
            let text = std::fs::read_to_string(&from)
                .map_err(|e| Error::Malformed(format!("{}: {e}", from.display())))?;
            let config: JarnikConfigFile =
                serde_json::from_str(&text).map_err(|e| Error::Malformed(e.to_string()))?;
            let rule = if l_rule == "n2" {
                DegreeRule::Square
            } else if let Some(rest) = l_rule.strip_prefix("const:") {
                DegreeRule::Constant {
                    degree: rest
                        .parse()
                        .map_err(|_| Error::Malformed("bad constant degree".into()))?,
                }
            } else {
                return Err(Error::Malformed(format!("unknown degree rule {l_rule:?}")));
            };
            let stages = stages.unwrap_or(config.stages);
            let cert = build_selfpower_certificate(
                &config.forced,
                config.filler,
                stages,
                rule,
                budget,
                cap,
            )?;
            let achieved: Vec<Option<BigRational>> = cert
                .stages
                .iter()
                .map(|s| s.achieved_exponent.as_ref().map(|e| e.lower().clone()))
                .collect();
            let file = CertificateFile::new(Certificate::Selfpower(cert));
            write_output(&out, &file.to_json())?;
            print_achieved_table(&achieved);
            Ok(exit_for_target(target_n, &achieved))
        }
        CertifyKind::Poly {
            poly,
            inputs,
            m,
            target_n,
            out,
        } => {
            let xs = load_inputs(&inputs, cap)?;
            let p = IntPolynomial::parse(&poly, xs.len())?;
            let cert = poly_closure_certificate(&p, &xs, m, budget)?;
            let achieved = vec![cert.achieved_exponent.as_ref().map(|e| e.lower().clone())];
            eprintln!("verdict: {}", cert.verdict);
            let rational = cert.rational_escape.is_some();
            let file = CertificateFile::new(Certificate::PolyClosure(cert));
            write_output(&out, &file.to_json())?;
            if rational {
                // rational escape: no approximation claim to meet
                return Ok(ExitCode::SUCCESS);
            }
            print_achieved_table(&achieved);
            Ok(exit_for_target(target_n, &achieved))
        }
        CertifyKind::Pairwise {
            inputs,
            levels,
            gap_rule,
            target_n,
            out,
        } => {
            let xs = load_inputs(&inputs, cap)?;
            if xs.len() != 2 {
                return Err(Error::Malformed("pairwise needs exactly two inputs".into()));
            }
            let levels: Vec<usize> = levels
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Error::Malformed("bad level list".into()))?;
            let rule = parse_gap_rule(&gap_rule)?;
            let cert = build_pairwise_certificate(&xs[0], &xs[1], &levels, rule, budget)?;
            let achieved: Vec<Option<BigRational>> = cert
                .stages
                .iter()
                .map(|s| s.achieved_exponent.as_ref().map(|e| e.lower().clone()))
                .collect();
            let file = CertificateFile::new(Certificate::Pairwise(cert));
            write_output(&out, &file.to_json())?;
            print_achieved_table(&achieved);
            Ok(exit_for_target(target_n, &achieved))
        }
    }
}

fn print_achieved_table(achieved: &[Option<BigRational>]) {
    eprintln!("{:>6} {:>16}", "stage", "achieved-N");
    for (i, a) in achieved.iter().enumerate() {
        let s = a
            .as_ref()
            .map(|v| decimal_string(v, 6))
            .unwrap_or_else(|| "-".into());
        eprintln!("{:>6} {:>16}", i + 1, s);
    }
}

fn exit_for_target(target_n: Option<u64>, achieved: &[Option<BigRational>]) -> ExitCode {
    match target_n {
        None => ExitCode::SUCCESS,
        Some(n) => {
            let target = BigRational::from(n);
            let hit = achieved.iter().flatten().any(|a| *a >= target);
            if hit {
                ExitCode::SUCCESS
            } else {
                eprintln!("requested N={n} was not achieved by any stage");
                ExitCode::from(EXIT_SEMANTIC)
            }
        }
    }
}

// --- verify / report -------------------------------------------------------

fn load_certificate(path: &PathBuf) -> Result<CertificateFile, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    CertificateFile::from_json(&text)
}

fn verify(path: &PathBuf) -> Result<ExitCode, Error> {
    let file = load_certificate(path)?;
    let report = verify_certificate(&file)?;
    match &report.verdict {
        Verdict::Accepted => {
            println!("accepted");
            Ok(ExitCode::SUCCESS)
        }
        Verdict::Vacuous => {
            println!("accepted (vacuous: no stages)");
            Ok(ExitCode::SUCCESS)
        }
        Verdict::Rejected { stage, check } => {
            println!("rejected: {stage}: {check}");
            Ok(ExitCode::from(EXIT_SEMANTIC))
        }
    }
}

fn report(path: &PathBuf) -> Result<ExitCode, Error> {
    let file = load_certificate(path)?;
    let rep = verify_certificate(&file)?;
    println!(
        "verdict: {}",
        match &rep.verdict {
            Verdict::Accepted => "accepted".to_string(),
            Verdict::Vacuous => "vacuous".to_string(),
            Verdict::Rejected { stage, check } => format!("rejected at {stage}: {check}"),
        }
    );
    println!("{:>16} {:>20}", "stage", "achieved-N (lower)");
    for (label, ach) in &rep.achieved {
        let d = ach
            .as_ref()
            .and_then(|s| rat_from_str(s).ok())
            .map(|r| decimal_string(&r, 6))
            .unwrap_or_else(|| "-".into());
        println!("{:>16} {:>20}", label, d);
    }
    if let Some(max) = &rep.max_achieved_lower {
        let r = rat_from_str(max)?;
        println!("max achieved N >= {}", decimal_string(&r, 6));
    }
    Ok(ExitCode::SUCCESS)
}

// --- scan --------------------------------------------------------------------

fn resolve_xi(spec: &str, budget: u32) -> Result<IntervalReal, Error> {
    if let Some(rest) = spec.strip_prefix("rational:") {
        return Ok(IntervalReal::point(rat_from_str(rest)?));
    }
    if let Some(rest) = spec.strip_prefix("invert:") {
        let y = rat_from_str(rest)?;
        let preimages = invert_self_power(&IntervalReal::point(y), budget + 64)?;
        // the scan wants the branch inside (e^-1, 1]
        return preimages
            .into_iter()
            .last()
            .ok_or_else(|| Error::Domain("value has no self-power preimage".into()));
    }
    Err(Error::Malformed(format!(
        "unknown xi spec {spec:?}; use rational:P/Q | invert:P/Q"
    )))
}

fn scan(args: ScanArgs, budget: u32, jobs: usize) -> Result<ExitCode, Error> {
    let xi = resolve_xi(&args.xi, budget)?;
    let tau = rat_from_str(&args.tau)?;
    let report = if jobs > 1 && args.bmax >= 2 {
        scan_parallel(&xi, &tau, args.bmax, budget, jobs)?
    } else {
        non_liouville_scan(&xi, &tau, args.bmax, budget)?
    };
    let csv = report.to_csv();
    write_output(&args.out, &csv)?;
    eprintln!(
        "scanned {} pair(s), {} violation(s)",
        report.rows.len(),
        report.violations.len()
    );
    Ok(ExitCode::SUCCESS)
}

/// Partition denominators across workers; results merge deterministically in
/// (b, a) order.
fn scan_parallel(
    xi: &IntervalReal,
    tau: &BigRational,
    b_max: u64,
    budget: u32,
    jobs: usize,
) -> Result<ExclusionReport, Error> {
    let jobs = jobs.min(b_max as usize).max(1);
    let chunk = b_max.div_ceil(jobs as u64);
    let mut handles = Vec::new();
    for w in 0..jobs as u64 {
        let lo = w * chunk + 1;
        let hi = ((w + 1) * chunk).min(b_max);
        if lo > hi {
            continue;
        }
        let xi = xi.clone();
        let tau = tau.clone();
        handles.push(std::thread::spawn(move || {
            liouville_core::selfpower::scan_denominator_range(&xi, &tau, lo, hi, budget)
        }));
    }
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut undecided = Vec::new();
    for h in handles {
        match h.join().expect("scan worker panicked") {
            Ok(part) => {
                rows.extend(part.rows);
                violations.extend(part.violations);
            }
            Err(Error::PrecisionInsufficient { undecided: u }) => undecided.extend(u),
            Err(e) => return Err(e),
        }
    }
    if !undecided.is_empty() {
        undecided.sort();
        return Err(Error::PrecisionInsufficient { undecided });
    }
    let num_key = |s: &str| s.parse::<i64>().unwrap_or(i64::MAX);
    rows.sort_by_key(|r| (r.b, num_key(&r.a)));
    violations.sort_by_key(|v| (v.b, num_key(&v.a)));
    Ok(ExclusionReport {
        xi_lower: rat_to_str(xi.lower()),
        xi_upper: rat_to_str(xi.upper()),
        tau: rat_to_str(tau),
        b_max,
        rows,
        violations,
    })
}
