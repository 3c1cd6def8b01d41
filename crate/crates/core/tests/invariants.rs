//! Property-based and randomized invariants for the exact kernels, mirroring
//! the contracts each module promises: oracle equivalence for magnitude
//! comparison, enclosure soundness for the transcendental kernels, the
//! classical continued-fraction identities, and the Lipschitz inequalities
//! behind the self-power pipelines.

use liouville_core::diophantine::{exp_taylor_rational, ContinuedFraction};
use liouville_core::interval::IntervalReal;
use liouville_core::magnitude::{Magnitude, DEFAULT_CAP_BITS};
use liouville_core::rational::{int_pow, pow2, rat_to_str, BigInt, BigRational};
use liouville_core::selfpower;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::cmp::Ordering;

const BUDGET: u32 = 128;

fn random_rational(rng: &mut ChaCha20Rng, max_num: u64, max_den: u64) -> BigRational {
    let n = rng.gen_range(0..=max_num);
    let d = rng.gen_range(1..=max_den);
    BigRational::from((BigInt::from(n), BigInt::from(d)))
}

#[test]
fn magnitude_compare_matches_exact_rational_order() {
    // oracle equivalence over 10,000 random level-0 pairs
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let a = random_rational(&mut rng, 1_000_000, 1_000_000);
        let b = random_rational(&mut rng, 1_000_000, 1_000_000);
        let ma = Magnitude::from_rational(a.clone()).unwrap();
        let mb = Magnitude::from_rational(b.clone()).unwrap();
        assert_eq!(ma.compare(&mb, BUDGET).unwrap(), a.cmp(&b));
    }
}

#[test]
fn power_magnitudes_are_monotone() {
    // strictly decreasing in negative exponents, strictly increasing in the
    // base for fixed positive exponent
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for _ in 0..500 {
        let base = rng.gen_range(2u32..30);
        let e1 = rng.gen_range(1i64..500);
        let e2 = e1 + rng.gen_range(1i64..500);
        let m1 = Magnitude::from_power_int(base, -e1, DEFAULT_CAP_BITS).unwrap();
        let m2 = Magnitude::from_power_int(base, -e2, DEFAULT_CAP_BITS).unwrap();
        assert_eq!(m2.compare(&m1, BUDGET).unwrap(), Ordering::Less);

        let b2 = base + rng.gen_range(1u32..10);
        let p1 = Magnitude::from_power_int(base, e1, DEFAULT_CAP_BITS).unwrap();
        let p2 = Magnitude::from_power_int(b2, e1, DEFAULT_CAP_BITS).unwrap();
        assert_eq!(p1.compare(&p2, BUDGET).unwrap(), Ordering::Less);
    }
}

#[test]
fn leq_power_agrees_with_direct_comparison() {
    // m <= Q^-N iff compare(m, Q^-N) <= 0 on level-0 samples
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for _ in 0..2_000 {
        let m = Magnitude::from_power_int(3, -rng.gen_range(1i64..200), DEFAULT_CAP_BITS).unwrap();
        let q_base = rng.gen_range(2u32..50);
        let n = rng.gen_range(1u64..40);
        let q = Magnitude::from_int(u64::from(q_base));
        let q_neg_n = Magnitude::from_power_int(q_base, -(n as i64), DEFAULT_CAP_BITS).unwrap();
        let lhs = m.leq_power(&q, n, BUDGET).unwrap();
        let rhs = m.compare(&q_neg_n, BUDGET).unwrap() != Ordering::Greater;
        assert_eq!(lhs, rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn log_exp_round_trip_encloses_input(n in 1u64..1_000_000, d in 1u64..1_000_000) {
        // enclosure soundness on rationals in (0, 1]
        let (n, d) = if n <= d { (n, d) } else { (d, n) };
        let r = BigRational::from((BigInt::from(n), BigInt::from(d)));
        let back = IntervalReal::point(r.clone()).ln(BUDGET).unwrap().exp(BUDGET).unwrap();
        prop_assert!(back.contains(&r), "round trip lost {}", rat_to_str(&r));
    }

    #[test]
    fn interval_mul_contains_products(a in -1000i64..1000, b in -1000i64..1000,
                                      c in -1000i64..1000, d in -1000i64..1000) {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let (c, d) = if c <= d { (c, d) } else { (d, c) };
        let x = IntervalReal::new(BigRational::from(a), BigRational::from(b)).unwrap();
        let y = IntervalReal::new(BigRational::from(c), BigRational::from(d)).unwrap();
        let m = x.mul(&y);
        for (p, q) in [(a, c), (a, d), (b, c), (b, d)] {
            prop_assert!(m.contains(&BigRational::from(p * q)));
        }
    }

    #[test]
    fn cf_determinant_identity(quotients in prop::collection::vec(1i64..50, 1..12)) {
        let cf = ContinuedFraction::new(
            BigInt::new(),
            quotients.iter().map(|&a| BigInt::from(a)).collect(),
        ).unwrap();
        prop_assert!(cf.determinant_identity_holds());
    }

    #[test]
    fn taylor_denominator_divides_factorial_form(
        num in 0i64..500, den in 1i64..500, degree in 1u32..14,
    ) {
        // Q | B^L * L! for random U in [-1, 0]
        let num = -(num.min(den));
        let u = BigRational::from((BigInt::from(num), BigInt::from(den)));
        let a = exp_taylor_rational(&u, degree, 96, false).unwrap();
        let q = a.value.denom().clone();
        let modulus = BigInt::from(
            &a.denominator_certificate.b_pow_l * &a.denominator_certificate.factorial,
        );
        prop_assert!(modulus.is_divisible(&q));
    }
}

#[test]
fn cf_error_sandwich_on_random_finite_expansions() {
    // 1/(q_k(q_{k+1}+q_k)) < |u - p_k/q_k| < 1/(q_k q_{k+1}) for interior k
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    for _ in 0..100 {
        let len = rng.gen_range(4usize..12);
        let mut quotients: Vec<BigInt> = (0..len)
            .map(|_| BigInt::from(rng.gen_range(1u64..30)))
            .collect();
        let last = quotients.last_mut().unwrap();
        if *last == 1 {
            *last = BigInt::from(2); // canonical form keeps the sandwich strict
        }
        let cf = ContinuedFraction::new(BigInt::new(), quotients).unwrap();
        assert!(cf.determinant_identity_holds());
        let u = cf.value();
        let n = cf.quotients().len();
        for k in 1..n - 1 {
            let (p_k, q_k) = &cf.convergents()[k];
            let (_, q_next) = &cf.convergents()[k + 1];
            let err = BigRational::from(&u - &BigRational::from((p_k.clone(), q_k.clone()))).abs();
            let upper = BigRational::from((BigInt::from(1), BigInt::from(q_k * q_next)));
            let lower = BigRational::from((
                BigInt::from(1),
                BigInt::from(q_k * &BigInt::from(q_next + q_k)),
            ));
            assert!(lower < err && err < upper, "sandwich failed at k={k}");
        }
    }
}

#[test]
fn taylor_remainders_hold_against_certified_exp() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for _ in 0..120 {
        let den = rng.gen_range(1u64..400);
        let num = rng.gen_range(0..=den);
        let u = -BigRational::from((BigInt::from(num), BigInt::from(den)));
        let degree = rng.gen_range(1u32..16);
        let a = exp_taylor_rational(&u, degree, 280, false).unwrap();
        let truth = IntervalReal::point(u).exp(280).unwrap();
        let gap = truth.add_rational(&-a.value.clone()).abs();
        assert!(gap.upper() <= &a.remainder_bound);
    }
}

#[test]
fn exp_is_one_lipschitz_on_nonpositive_reals() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let tol = pow2(-90);
    for _ in 0..300 {
        let u = -random_rational(&mut rng, 5_000, 1_000);
        let v = -random_rational(&mut rng, 5_000, 1_000);
        let eu = IntervalReal::point(u.clone()).exp(BUDGET).unwrap();
        let ev = IntervalReal::point(v.clone()).exp(BUDGET).unwrap();
        let gap = eu.sub(&ev).abs();
        let dist = BigRational::from(&u - &v).abs();
        assert!(gap.upper() <= &(dist + tol.clone()));
    }
}

#[test]
fn derivative_sandwich_and_bilipschitz() {
    // f' in [m, M] and m|x-y| <= |f(x)-f(y)| <= M|x-y| on [delta, 1]
    let delta = BigRational::from((45u32, 100u32));
    let bounds = selfpower::derivative_bounds(&delta, BUDGET).unwrap();
    let m_lo = bounds.lower.lower().clone();
    let m_hi = BigRational::from(1);
    let tol = pow2(-60);

    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let span = BigRational::from(&BigRational::from(1) - &delta);
    let sample = |rng: &mut ChaCha20Rng| -> BigRational {
        let t = BigRational::from((
            BigInt::from(rng.gen_range(0u64..=10_000)),
            BigInt::from(10_000u64),
        ));
        BigRational::from(&delta + &BigRational::from(&t * &span))
    };

    for _ in 0..200 {
        let x = sample(&mut rng);
        // certified f'(x) = x^x (ln x + 1) within [m - tol, M + tol]
        let point = IntervalReal::point(x.clone());
        let deriv = selfpower::self_power(&point, BUDGET).unwrap().mul(
            &point
                .ln(BUDGET)
                .unwrap()
                .add_rational(&BigRational::from(1)),
        );
        assert!(deriv.upper() >= &(m_lo.clone() - tol.clone()));
        assert!(deriv.lower() <= &(m_hi.clone() + tol.clone()));
        assert!(deriv.lower() >= &(m_lo.clone() - tol.clone()));
        assert!(deriv.upper() <= &(m_hi.clone() + tol.clone()));
    }

    for _ in 0..200 {
        let x = sample(&mut rng);
        let y = sample(&mut rng);
        if x == y {
            continue;
        }
        let fx = selfpower::self_power(&IntervalReal::point(x.clone()), BUDGET).unwrap();
        let fy = selfpower::self_power(&IntervalReal::point(y.clone()), BUDGET).unwrap();
        let gap = fx.sub(&fy).abs();
        let dist = BigRational::from(&x - &y).abs();
        let lo_bound = BigRational::from(&m_lo * &dist) - tol.clone();
        let hi_bound = BigRational::from(&m_hi * &dist) + tol.clone();
        assert!(gap.upper() >= &lo_bound && gap.lower() <= &hi_bound);
        assert!(gap.lower() >= &lo_bound, "bi-Lipschitz lower failed");
        assert!(gap.upper() <= &hi_bound, "bi-Lipschitz upper failed");
    }
}

#[test]
fn phi_lipschitz_bound_holds_on_samples() {
    let delta = BigRational::from((5u32, 100u32));
    let m_phi = selfpower::phi_lipschitz(&delta, BUDGET).unwrap();
    let tol = pow2(-60);
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let span = BigRational::from(&BigRational::from(1) - &delta);
    for _ in 0..200 {
        let t = BigRational::from((
            BigInt::from(rng.gen_range(0u64..=10_000)),
            BigInt::from(10_000u64),
        ));
        let s = BigRational::from((
            BigInt::from(rng.gen_range(0u64..=10_000)),
            BigInt::from(10_000u64),
        ));
        let a = BigRational::from(&delta + &BigRational::from(&t * &span));
        let b = BigRational::from(&delta + &BigRational::from(&s * &span));
        let pa = selfpower::phi(&IntervalReal::point(a.clone()), BUDGET).unwrap();
        let pb = selfpower::phi(&IntervalReal::point(b.clone()), BUDGET).unwrap();
        let gap = pa.sub(&pb).abs();
        let dist = BigRational::from(&a - &b).abs();
        let bound = BigRational::from(m_phi.upper() * &dist) + tol.clone();
        assert!(gap.upper() <= &bound);
    }
}

#[test]
fn inversion_preimage_counts_match_trichotomy() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let min_enc = selfpower::min_value(200);
    let one = BigRational::from(1);
    for _ in 0..60 {
        let y = BigRational::from((
            BigInt::from(rng.gen_range(1u64..30_000)),
            BigInt::from(20_000u64),
        ));
        let expected = if &y < min_enc.lower() {
            0
        } else if y >= one {
            1
        } else if &y > min_enc.upper() {
            2
        } else {
            continue; // astronomically unlikely: y inside the min enclosure
        };
        let pre = selfpower::invert_self_power(&IntervalReal::point(y.clone()), 96).unwrap();
        assert_eq!(
            pre.len(),
            expected,
            "count mismatch at y={}",
            rat_to_str(&y)
        );
        for x in pre {
            let back = selfpower::self_power(&x, 200).unwrap();
            assert!(back.contains(&y));
        }
    }
}

#[test]
fn lcm_growth_ratio_stays_in_band() {
    // log lcm(1..L)/L in [0.75, 1.05] at L = 10, 100, 1000
    for (l, lo, hi) in [
        (10u32, "7832/10000", "7833/10000"),
        (100, "94045/100000", "94046/100000"),
        (1000, "99668/100000", "99669/100000"),
    ] {
        let (_, ln) = liouville_core::diophantine::lcm_upto(l, 192).unwrap();
        let ratio = ln.mul_rational(&BigRational::from((BigInt::from(1), BigInt::from(l))));
        let lo = liouville_core::rational::rat_from_str(lo).unwrap();
        let hi = liouville_core::rational::rat_from_str(hi).unwrap();
        assert!(
            ratio.lower() >= &lo && ratio.upper() <= &hi,
            "ratio off at L={l}"
        );
        assert!(ratio.lower() > &BigRational::from((75u32, 100u32)));
        assert!(ratio.upper() < &BigRational::from((105u32, 100u32)));
    }
}

#[test]
fn steep_forced_schedule_drives_exponents_up() {
    // with a forced schedule that outgrows the accumulated denominators, the
    // per-stage approximation exponents climb as the construction promises
    let quotients: Vec<String> = (1..=4u32)
        .map(|n| int_pow(&BigInt::from(2u32), 8u32.pow(n).min(4096)).to_string())
        .collect();
    let target = liouville_core::diophantine::jarnik_generate(
        &liouville_core::diophantine::ForcedSchedule::Explicit { quotients },
        2,
        4,
        BUDGET,
    )
    .unwrap();
    let exponents: Vec<BigRational> = target
        .stages
        .iter()
        .map(|s| s.achieved_exponent.as_ref().unwrap().lower().clone())
        .collect();
    // strictly increasing from stage 2 on, and the last stage clears 8
    assert!(exponents[1] < exponents[2] && exponents[2] < exponents[3]);
    assert!(exponents[3] > 8);
}
