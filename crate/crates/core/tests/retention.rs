use gigastore::retention::*;
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Exp};

const HOUR: f64 = 3600.0;
const WEEK: f64 = 7.0 * 86400.0;

fn plan(storage_years: f64, test_time: f64, alpha: f64, alpha_t: f64, f0: f64) -> TestPlan {
    TestPlan {
        storage_time: years_to_seconds(storage_years),
        storage_temperature: 300.0,
        storage_error_fraction: alpha,
        test_time,
        test_error_fraction: alpha_t,
        attempt_frequency: f0,
    }
}

/// Oracle: solve ΔE/(k_B·T_t) = ln(t_t·f0/α_t) for T_t by bisection on the
/// decay probability instead of the closed form.
fn bisect_test_temperature(p: &TestPlan) -> f64 {
    let barrier = kelvin_to_joules(
        required_barrier(p.storage_time, p.storage_error_fraction, p.attempt_frequency).unwrap(),
        p.storage_temperature,
    );
    let (mut lo, mut hi) = (p.storage_temperature, 5000.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let lost = RetentionModel::new(p.attempt_frequency, barrier, mid)
            .unwrap()
            .rate()
            * p.test_time;
        if lost < p.test_error_fraction {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn table_of_test_temperatures() {
    let expected = [
        (1e6, HOUR, 461.0),
        (1e6, WEEK, 411.0),
        (1e6, SECONDS_PER_YEAR, 380.0),
        (1e9, HOUR, 509.0),
        (1e9, WEEK, 455.0),
        (1e9, SECONDS_PER_YEAR, 420.0),
    ];
    for (years, t, kelvin) in expected {
        let p = plan(years, t, 1e-6, 1e-6, 1e9);
        let got = test_temperature(&p).unwrap();
        assert!((got - kelvin).abs() <= 1.0, "{years} yr / {t} s: {got}");
        assert!((got - bisect_test_temperature(&p)).abs() < 1e-6);
    }
}

#[test]
fn barrier_requirements() {
    let b6 = required_barrier(years_to_seconds(1e6), 1e-5, 1e9).unwrap();
    let b9 = required_barrier(years_to_seconds(1e9), 1e-5, 1e9).unwrap();
    assert_eq!(format!("{b6:.1}"), "63.3");
    assert_eq!(format!("{b9:.1}"), "70.2");
    let ev = joules_to_ev(kelvin_to_joules(70.0, 300.0));
    assert!((ev - 1.81).abs() <= 0.02, "{ev}");
}

#[test]
fn oven_extrapolation_to_storage_years() {
    let years = seconds_to_years(
        equivalent_storage_time(848.0, HOUR, 1e-6, 300.0, 1e-6, 1e9).unwrap(),
    );
    assert!(years / 9e29 < 1.5 && 9e29 / years < 1.5, "{years:e}");
}

#[test]
fn tenfold_attempt_frequency_shift_is_small() {
    for years in [1e6, 1e9] {
        for t in [HOUR, WEEK, SECONDS_PER_YEAR] {
            let a = test_temperature(&plan(years, t, 1e-6, 1e-6, 1e9)).unwrap();
            let b = test_temperature(&plan(years, t, 1e-6, 1e-6, 1e10)).unwrap();
            assert!((a - b).abs() <= 11.0, "{years} {t}: {a} vs {b}");
        }
    }
}

#[test]
fn invalid_fractions_are_domain_errors() {
    assert!(required_barrier(years_to_seconds(1e9), 1.0, 1e9).is_err());
    assert!(required_barrier(1e-12, 0.5, 1.0).is_err());
    assert!(test_temperature(&plan(1e6, HOUR, 0.0, 1e-6, 1e9)).is_err());
}

/// Monte-Carlo oracle for the cascade: sum of exponential waiting times.
fn sampled_cdf(rates: &[f64], times: &[f64], samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists: Vec<Exp<f64>> = rates.iter().map(|&r| Exp::new(r).unwrap()).collect();
    let mut hits = vec![0usize; times.len()];
    for _ in 0..samples {
        let total: f64 = dists.iter().map(|d| d.sample(&mut rng)).sum();
        for (h, &t) in hits.iter_mut().zip(times) {
            if total <= t {
                *h += 1;
            }
        }
    }
    hits.into_iter().map(|h| h as f64 / samples as f64).collect()
}

#[test]
fn cascade_matches_monte_carlo() {
    let n = 1_000_000;
    let cases: [&[f64]; 4] = [
        &[1.0, 3.0],
        &[2.0, 2.0, 2.0],
        &[1.0, 1.0 + 1e-12, 4.0],
        &[0.5, 1.5, 1.5, 7.0],
    ];
    for (k, rates) in cases.iter().enumerate() {
        let mean: f64 = rates.iter().map(|r| 1.0 / r).sum();
        let times = [0.25 * mean, 0.5 * mean, mean, 2.0 * mean];
        let mc = sampled_cdf(rates, &times, n, k as u64);
        for (&t, &p_mc) in times.iter().zip(&mc) {
            let p = hypoexponential_cdf(rates, t);
            let sigma = (p * (1.0 - p) / n as f64).sqrt().max(1e-6);
            assert!(
                (p - p_mc).abs() < 4.0 * sigma,
                "rates {rates:?} t {t}: analytic {p} sampled {p_mc}"
            );
            assert!((p - p_mc).abs() < 5e-3, "3 significant digits at {t}");
        }
    }
}

#[test]
fn cascade_through_model_uses_arrhenius_rates() {
    let steps = vec![
        CascadeStep {
            barrier: kelvin_to_joules(30.0, 300.0),
            attempt_frequency: 1e9,
        },
        CascadeStep {
            barrier: kelvin_to_joules(32.0, 300.0),
            attempt_frequency: 1e9,
        },
    ];
    let model = CascadeModel::new(steps).unwrap();
    let rates = model.rates(300.0);
    assert!((rates[0] - 1e9 * (-30.0f64).exp()).abs() / rates[0] < 1e-12);
    let t = 1.0 / rates[1];
    assert_eq!(
        cascade_switch_probability(&model, 300.0, t),
        hypoexponential_cdf(&rates, t)
    );
}

proptest! {
    #[test]
    fn test_temperature_is_identity_for_identical_conditions(
        years in 1e-3f64..1e10,
        alpha in 1e-9f64..1e-2,
        temp in 200.0f64..400.0,
    ) {
        let t = years_to_seconds(years);
        let p = TestPlan {
            storage_time: t,
            storage_temperature: temp,
            storage_error_fraction: alpha,
            test_time: t,
            test_error_fraction: alpha,
            attempt_frequency: 1e9,
        };
        prop_assert!((test_temperature(&p).unwrap() - temp).abs() < 1e-9 * temp);
    }

    #[test]
    fn shorter_tests_need_hotter_ovens(
        years in 1e3f64..1e10,
        h1 in 0.1f64..1e3,
        factor in 1.01f64..100.0,
    ) {
        let a = test_temperature(&plan(years, h1 * HOUR, 1e-6, 1e-6, 1e9)).unwrap();
        let b = test_temperature(&plan(years, h1 * factor * HOUR, 1e-6, 1e-6, 1e9)).unwrap();
        prop_assert!(a > b);
    }

    #[test]
    fn equivalent_time_inverts_test_temperature(
        years in 1e2f64..1e12,
        hours in 0.1f64..1e4,
    ) {
        let p = plan(years, hours * HOUR, 1e-6, 1e-6, 1e9);
        let tt = test_temperature(&p).unwrap();
        let back = ln_equivalent_storage_time(tt, p.test_time, 1e-6, 300.0, 1e-6, 1e9).unwrap();
        prop_assert!((back - p.storage_time.ln()).abs() < 1e-9 * p.storage_time.ln().abs().max(1.0));
    }

    #[test]
    fn switching_probability_is_monotone_in_time_and_temperature(
        barrier_kt in 1.0f64..80.0,
        temp in 250.0f64..900.0,
        t in 1e-3f64..1e12,
    ) {
        let barrier = kelvin_to_joules(barrier_kt, 300.0);
        let m = RetentionModel::new(1e9, barrier, temp).unwrap();
        let hotter = RetentionModel::new(1e9, barrier, temp + 10.0).unwrap();
        let p = m.switching_probability(t);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(m.switching_probability(2.0 * t) >= p);
        prop_assert!(hotter.switching_probability(t) >= p);
    }

    #[test]
    fn hypoexponential_cdf_is_a_cdf(
        rates in proptest::collection::vec(0.01f64..100.0, 1..6),
        t in 0.0f64..50.0,
    ) {
        let p = hypoexponential_cdf(&rates, t);
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&p), "{p}");
        prop_assert!(hypoexponential_cdf(&rates, t + 1.0) >= p - 1e-9);
    }
}
