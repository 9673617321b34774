//! Second law, regime table and Otto limits of the slow-driving flows over random parameters,
//! plus numeric limit cycles against the closed forms.

use std::f64::consts::PI;

use dqho_core::analytic::{slow_flows_1osc, slow_flows_2osc, SlowSolution};
use dqho_core::thermo::classify_regime;
use dqho_core::{cycle_average, find_limit_cycle, initial_gibbs, BathSpec, LimitCycleOptions, NetworkSpec, OscillatorSpec, Regime};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy)]
struct Draw {
    omega0: f64,
    omega_c: f64,
    omega_h: f64,
    beta_c: f64,
    beta_h: f64,
    g_c: f64,
    g_h: f64,
}

fn draws() -> impl Strategy<Value = Draw> {
    (0.5f64..2.0, 0.05f64..3.0, 0.05f64..3.0, 1.0f64..20.0, 0.05f64..0.95, 0.1f64..1.0, 0.1f64..1.0).prop_map(
        |(omega0, omega_c, omega_h, beta_c, frac, g_c, g_h)| Draw {
            omega0,
            omega_c,
            omega_h,
            beta_c,
            beta_h: frac * beta_c,
            g_c,
            g_h,
        },
    )
}

fn single(d: &Draw, theta: f64, squeeze_hot: f64) -> NetworkSpec {
    NetworkSpec::single(
        OscillatorSpec::new(d.omega0, 0.3 * d.omega0, theta),
        vec![
            BathSpec::new(d.omega_c, d.beta_c, vec![d.g_c]),
            BathSpec::new(d.omega_h, d.beta_h, vec![d.g_h]).with_squeezing(squeeze_hot),
        ],
    )
    .unwrap()
}

fn pair(d: &Draw, lambda: f64) -> NetworkSpec {
    NetworkSpec::chain(
        vec![OscillatorSpec::new(d.omega0, 0.3 * d.omega0, 0.01); 2],
        lambda,
        vec![BathSpec::new(d.omega_c, d.beta_c, vec![d.g_c, 0.0]), BathSpec::new(d.omega_h, d.beta_h, vec![0.0, d.g_h])],
    )
    .unwrap()
}

/// Expected machine from the frequency and temperature ordering.
fn table(omega_c: f64, omega_h: f64, beta_c: f64, beta_h: f64) -> Regime {
    let hot_excited = beta_h * omega_h < beta_c * omega_c;
    match (hot_excited, omega_c < omega_h) {
        (true, true) => Regime::Engine,
        (true, false) => Regime::Accelerator,
        (false, true) => Regime::Refrigerator,
        (false, false) => Regime::Unclassified,
    }
}

/// Regime from the exact signs of the closed-form flows, which stay resolved even when the
/// flows are far below the deadband used for numeric cycles.
fn classify(s: &SlowSolution) -> Regime {
    classify_regime(s.q_dot_c, s.q_dot_h, s.w_dot_mean, 0.0)
}

/// Keeps draws away from the regime boundaries, where the flows vanish.
fn separated(d: &Draw, beta_h_eff: f64) -> bool {
    (d.omega_c / d.omega_h - 1.0).abs() > 1e-3 && (beta_h_eff * d.omega_h / (d.beta_c * d.omega_c) - 1.0).abs() > 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn single_oscillator_follows_the_regime_table(d in draws()) {
        prop_assume!(separated(&d, d.beta_h));
        let net = single(&d, 0.01, 0.0);
        let s = slow_flows_1osc(&net, 0.0).unwrap();
        prop_assert_eq!(classify(&s), table(d.omega_c, d.omega_h, d.beta_c, d.beta_h));
        prop_assert!(-d.beta_c * s.q_dot_c - d.beta_h * s.q_dot_h >= 0.0);
        if classify(&s) == Regime::Engine {
            prop_assert!((-s.w_dot_mean / s.q_dot_h - (1.0 - d.omega_c / d.omega_h)).abs() < 1e-3);
        }
        if classify(&s) == Regime::Refrigerator {
            prop_assert!((s.q_dot_c / s.w_dot_mean - d.omega_c / (d.omega_h - d.omega_c)).abs() < 1e-3 * (1.0 + d.omega_c / (d.omega_h - d.omega_c)));
        }
    }

    #[test]
    fn resonant_pair_follows_the_regime_table(d in draws(), lambda in 0.05f64..5.0) {
        prop_assume!(separated(&d, d.beta_h));
        let s = slow_flows_2osc(&pair(&d, lambda), 0.0).unwrap();
        prop_assert_eq!(classify(&s), table(d.omega_c, d.omega_h, d.beta_c, d.beta_h));
        prop_assert!(-d.beta_c * s.q_dot_c - d.beta_h * s.q_dot_h >= 0.0);
    }

    #[test]
    fn squeezing_never_makes_an_engine_beyond_the_effective_condition(d in draws(), r in 0.0f64..1.5) {
        let net = single(&d, 0.01, r);
        let hot = &net.baths()[1];
        let beta_h_eff = hot.effective_beta();
        prop_assume!(beta_h_eff < d.beta_c && separated(&d, beta_h_eff));
        let s = slow_flows_1osc(&net, 0.0).unwrap();
        let regime = classify(&s);
        if beta_h_eff * d.omega_h >= d.beta_c * d.omega_c {
            prop_assert_ne!(regime, Regime::Engine);
        }
        prop_assert_eq!(regime, table(d.omega_c, d.omega_h, d.beta_c, beta_h_eff));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn numeric_cycles_produce_entropy(d in draws(), theta in 0.3f64..3.0) {
        let net = single(&d, theta, 0.0);
        let init = initial_gibbs(&net, d.beta_c).unwrap();
        let lc = find_limit_cycle(&net, &init, &LimitCycleOptions::default()).unwrap();
        let s = cycle_average(&lc.trajectory).unwrap();
        let sigma = -d.beta_c * s.avg_q[0] - d.beta_h * s.avg_q[1];
        prop_assert!(sigma >= -1e-9 * (d.beta_c * s.avg_q[0].abs()).max(1e-12), "entropy production {sigma:e}");
    }
}

fn numeric_vs_closed_form(net: &NetworkSpec, closed: &SlowSolution) {
    let init = initial_gibbs(net, 10.0).unwrap();
    let lc = find_limit_cycle(net, &init, &LimitCycleOptions::default()).unwrap();
    let s = cycle_average(&lc.trajectory).unwrap();
    let pairs = [(s.avg_q[0], closed.q_dot_c), (s.avg_q[1], closed.q_dot_h), (s.avg_w, closed.w_dot_mean)];
    for (got, want) in pairs {
        assert!((got - want).abs() < 1e-2 * want.abs(), "{got} vs {want}");
    }
}

#[test]
fn slow_numeric_cycles_match_closed_forms() {
    let g = 0.5f64.sqrt();
    let theta = PI / 200.0;
    let one = NetworkSpec::single(
        OscillatorSpec::new(1.0, 0.5, theta),
        vec![BathSpec::new(0.2, 10.0, vec![g]), BathSpec::new(0.5, 5.0, vec![g])],
    )
    .unwrap();
    numeric_vs_closed_form(&one, &slow_flows_1osc(&one, 0.0).unwrap());
    let two = NetworkSpec::chain(
        vec![OscillatorSpec::new(1.0, 0.5, theta); 2],
        0.3,
        vec![BathSpec::new(0.2, 10.0, vec![g, 0.0]), BathSpec::new(0.5, 5.0, vec![0.0, g])],
    )
    .unwrap();
    numeric_vs_closed_form(&two, &slow_flows_2osc(&two, 0.0).unwrap());
}
