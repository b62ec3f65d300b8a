//! Sampled laws against closed forms. Each comparison allows 4 standard
//! errors plus 0.002.

use palmlab::estimate::{est_intensity, est_probability, BinGrid, Budget, Estimate};
use palmlab::models::pstar;
use palmlab::*;

const ATOL: f64 = 0.002;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 20_000;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn near(e: &Estimate, target: f64) {
    assert!(
        (e.value - target).abs() <= 4.0 * e.std_error + ATOL,
        "{} ± {} vs {target}",
        e.value,
        e.std_error
    );
}

fn agree(a: &[Estimate], b: &[Estimate], events: &[Event]) {
    for ((x, y), e) in a.iter().zip(b).zip(events) {
        assert!(
            (x.value - y.value).abs() <= 4.0 * x.combined_se(y) + ATOL,
            "{}: {} ± {} vs {} ± {}",
            e.label(),
            x.value,
            x.std_error,
            y.value,
            y.std_error
        );
    }
}

fn probabilities(model: &Model, events: &[Event], seed: u64) -> Vec<Estimate> {
    est_probability(model, events, &Budget::default(), SeedStream::new(seed)).unwrap()
}

fn gt(n: i64, c: f64) -> Event {
    ev_interval_gt(n, c, 40.0)
}

fn exp1() -> IntervalDistribution<f64> {
    IntervalDistribution::exponential(1.0).unwrap()
}

fn gamma21() -> IntervalDistribution<f64> {
    IntervalDistribution::gamma(2.0, 1.0).unwrap()
}

#[test]
fn poisson_counts_and_straddling_gap() {
    let m = poisson_ts(1.0).unwrap();
    let grid = BinGrid::new(vec![(0.0, 10.0)]).unwrap();
    let rate = est_intensity(&m, &grid, &Budget::default(), SeedStream::new(1)).unwrap();
    near(&rate.values[0], 1.0);
    // The straddling gap is length-biased: density x e^-x.
    let p = probabilities(&m, &[gt(0, 1.0), gt(1, 1.0), gt(-1, 1.0)], 2);
    near(&p[0], simpson(|x| x * (-x).exp(), 1.0, 60.0));
    near(&p[1], (-1.0f64).exp());
    near(&p[2], (-1.0f64).exp());
}

#[test]
fn gamma_renewal_in_time_stationary_form() {
    let m = renewal_ts_from_es(gamma21()).unwrap();
    assert_eq!(m.mean_gap(), 2.0);
    let xs = [0.5, 1.0, 3.0];
    let events: Vec<Event> = xs.iter().map(|&x| gt(0, x)).chain([gt(1, 1.0)]).collect();
    let p = probabilities(&m, &events, 3);
    for (e, &x) in p.iter().zip(&xs) {
        // Length-biased Gamma(2, 1): density x^2 e^-x / 2.
        near(e, simpson(|t| t * t * (-t).exp() / 2.0, x, 60.0));
    }
    near(&p[3], simpson(|t| t * (-t).exp(), 1.0, 60.0));
    let grid = BinGrid::new(vec![(0.0, 10.0)]).unwrap();
    let rate = est_intensity(&m, &grid, &Budget::default(), SeedStream::new(4)).unwrap();
    near(&rate.values[0], 0.5);
}

#[test]
fn uniform_renewal_length_bias() {
    let law = IntervalDistribution::uniform(0.5, 2.5).unwrap();
    let m = renewal_ts_from_es(law).unwrap();
    let p = probabilities(&m, &[gt(0, 1.0), gt(0, 2.0)], 5);
    // Length-biased U(0.5, 2.5): density x / (2 * 1.5) on [0.5, 2.5].
    near(&p[0], simpson(|x| x / 3.0, 1.0, 2.5));
    near(&p[1], simpson(|x| x / 3.0, 2.0, 2.5));
}

#[test]
fn exponential_inversion_is_poisson() {
    let events = battery(20.0);
    let a = probabilities(&renewal_ts_from_es(exp1()).unwrap(), &events, 6);
    let b = probabilities(&poisson_ts(1.0).unwrap(), &events, 7);
    agree(&a, &b, &events);
}

#[test]
fn unit_tilt_changes_nothing() {
    let events = battery(20.0);
    let base = renewal_ts_from_es(gamma21()).unwrap();
    let tilted = tilted_ts(base.clone(), Tilt::Unit).unwrap();
    let a = probabilities(&tilted, &events, 8);
    let b = probabilities(&base, &events, 9);
    agree(&a, &b, &events);
    assert!(a
        .iter()
        .all(|e| (e.ess - e.reps as f64).abs() < 1e-6 * e.reps as f64));
}

#[test]
fn example84_is_the_poisson_alpha0_tilt() {
    let events = battery(20.0);
    let exact = probabilities(&example84_exact(1.0).unwrap(), &events, 10);
    let tilted = tilted_ts(poisson_ts(1.0).unwrap(), Tilt::ScaledAlpha0 { c: 0.5 }).unwrap();
    let weighted = probabilities(&tilted, &events, 11);
    agree(&exact, &weighted, &events);
    near(&exact[1], 5.0 / 2.0 * (-1.0f64).exp());
}

#[test]
fn weight_scale_does_not_matter() {
    let events = battery(20.0);
    let base = poisson_ts(1.0).unwrap();
    let a = probabilities(
        &tilted_ts(base.clone(), Tilt::ScaledAlpha0 { c: 3.0 }).unwrap(),
        &events,
        12,
    );
    let b = probabilities(
        &tilted_ts(
            base,
            Tilt::Linear {
                gamma0: 1.0,
                gamma1: 0.0,
            },
        )
        .unwrap(),
        &events,
        12,
    );
    for (x, y) in a.iter().zip(&b) {
        assert!(
            (x.value - y.value).abs() < 1e-12,
            "{} vs {}",
            x.value,
            y.value
        );
    }
}

#[test]
fn tilting_by_the_next_gap_leaves_the_others_alone() {
    // sigma = alpha_1: under the Poisson law alpha_1 is independent of
    // alpha_0 and alpha_-1, so only alpha_1 becomes length-biased.
    let m = tilted_ts(
        poisson_ts(1.0).unwrap(),
        Tilt::Linear {
            gamma0: 0.0,
            gamma1: 1.0,
        },
    )
    .unwrap();
    let p = probabilities(&m, &[gt(1, 1.0), gt(0, 1.0), gt(-1, 1.0)], 13);
    let biased = simpson(|x| x * (-x).exp(), 1.0, 60.0);
    near(&p[0], biased);
    near(&p[1], biased);
    near(&p[2], (-1.0f64).exp());
}

#[test]
fn pstar_of_an_event_stationary_renewal() {
    // P* keeps the law of alpha_0 and puts the origin uniformly inside it.
    let m = pstar(renewal_es(exp1())).unwrap();
    assert_eq!(m.law_tag(), LawTag::TiltedTs);
    let p = probabilities(
        &m,
        &[gt(0, 1.0), gt(1, 1.0), ev_first_point_le(0.5, 40.0)],
        14,
    );
    near(&p[0], (-1.0f64).exp());
    near(&p[1], (-1.0f64).exp());
    // P(T_1 <= 1/2) = E min(1, 1 / (2 alpha_0)).
    near(
        &p[2],
        simpson(|x| (1.0f64).min(0.5 / x) * (-x).exp(), 0.0, 60.0),
    );
}

#[test]
fn time_stationary_laws_are_pstar_fixed_points() {
    let events = battery(20.0);
    for (i, m) in [
        poisson_ts(1.0).unwrap(),
        renewal_ts_from_es(gamma21()).unwrap(),
    ]
    .into_iter()
    .enumerate()
    {
        let a = probabilities(&m, &events, 20 + i as u64);
        let b = probabilities(&pstar(m).unwrap(), &events, 30 + i as u64);
        agree(&a, &b, &events);
    }
}

#[test]
fn pstar_is_idempotent() {
    let events = battery(20.0);
    let once = pstar(renewal_es(gamma21())).unwrap();
    let twice = pstar(once.clone()).unwrap();
    agree(
        &probabilities(&once, &events, 40),
        &probabilities(&twice, &events, 41),
        &events,
    );
}

#[test]
fn lattice_has_no_pstar() {
    assert!(matches!(
        pstar(example44::<f64>(100).unwrap()),
        Err(ModelError::NoPstar(_))
    ));
}

#[test]
fn config_round_trip_builds_the_same_model() {
    let m = tilted_ts(
        renewal_ts_from_es(gamma21()).unwrap(),
        Tilt::Linear {
            gamma0: 0.5,
            gamma1: 0.5,
        },
    )
    .unwrap();
    let cfg = ModelConfig {
        base: Some("renewal_ts_from_es".into()),
        interval: Some("gamma".into()),
        shape: Some(2.0),
        interval_rate: Some(1.0),
        tilt: Some("linear".into()),
        gamma0: Some(0.5),
        gamma1: Some(0.5),
        ..ModelConfig::named("tilted_ts")
    };
    let built: Model = cfg.build().unwrap();
    assert_eq!(built.to_string(), m.to_string());
    let window = Window::symmetric(30.0).unwrap();
    let s = SeedStream::new(5);
    assert_eq!(
        built.sample_seeded(&s, 3, &window).unwrap(),
        m.sample_seeded(&s, 3, &window).unwrap()
    );
}
