//! Step-size convergence, first law and physicality along whole trajectories, chain equivalence.

use std::f64::consts::PI;

use dqho_core::analytic::slow_record;
use dqho_core::dynamics::{dt_max, PHYSICALITY_TOL};
use dqho_core::thermo::heat_current;
use dqho_core::{
    cycle_average, evolve, find_limit_cycle, initial_gibbs, steady_state, BathSpec, LimitCycleOptions, NetworkSpec,
    OscillatorSpec,
};

fn fig2(theta: f64) -> NetworkSpec {
    let g = 0.5f64.sqrt();
    NetworkSpec::single(
        OscillatorSpec::new(1.0, 0.5, theta),
        vec![BathSpec::new(0.2, 10.0, vec![g]), BathSpec::new(0.5, 5.0, vec![g])],
    )
    .unwrap()
}

fn chain(n: usize, lambda: f64, theta: f64) -> NetworkSpec {
    let g = 0.5f64.sqrt();
    let end = |k: usize| (0..n).map(|i| if i == k { g } else { 0.0 }).collect::<Vec<_>>();
    NetworkSpec::chain(
        vec![OscillatorSpec::new(1.0, 0.5, theta); n],
        lambda,
        vec![BathSpec::new(0.2, 10.0, end(0)), BathSpec::new(0.5, 5.0, end(n - 1))],
    )
    .unwrap()
}

fn averages(net: &NetworkSpec, dt_factor: f64) -> [f64; 3] {
    let init = initial_gibbs(net, 10.0).unwrap();
    let opts = LimitCycleOptions { dt_factor, rel_tol: 1e-12, ..LimitCycleOptions::default() };
    let lc = find_limit_cycle(net, &init, &opts).unwrap();
    let s = cycle_average(&lc.trajectory).unwrap();
    [s.avg_q[0], s.avg_q[1], s.avg_w]
}

#[test]
fn halving_the_step_converges_at_fourth_order() {
    let net = fig2(PI);
    let a = averages(&net, 1.0);
    let b = averages(&net, 0.5);
    let c = averages(&net, 0.25);
    for k in 0..3 {
        let change = (a[k] - b[k]).abs() / b[k].abs();
        assert!(change < 1e-6, "flow {k}: relative change {change:e}");
        let ratio = (a[k] - b[k]) / (b[k] - c[k]);
        assert!((12.0..20.0).contains(&ratio), "flow {k}: error ratio {ratio}");
    }
}

#[test]
fn first_law_and_physicality_through_the_transient() {
    for theta in [PI / 200.0, PI / 4.0, PI, 3.0] {
        let net = fig2(theta);
        let init = initial_gibbs(&net, 10.0).unwrap();
        let t_end = 3.0 * 2.0 * PI / theta;
        let traj = evolve(&init, &net, t_end, dt_max(&net), 7).unwrap();
        for s in &traj.samples {
            let r = s.thermo.relative_first_law_residual();
            assert!(r < 1e-6, "theta {theta}: residual {r:e} at t = {}", s.state.t);
            assert!(s.state.min_symplectic_eigenvalue() >= 0.5 - PHYSICALITY_TOL);
        }
    }
}

#[test]
fn hot_start_relaxes_onto_the_same_cycle() {
    let net = fig2(PI);
    let opts = LimitCycleOptions { rel_tol: 1e-11, ..LimitCycleOptions::default() };
    let cold = find_limit_cycle(&net, &initial_gibbs(&net, 10.0).unwrap(), &opts).unwrap();
    let hot = find_limit_cycle(&net, &initial_gibbs(&net, 0.2).unwrap(), &opts).unwrap();
    assert!(hot.periods > cold.periods);
    let (a, b) = (&cold.trajectory.last().state.sigma, &hot.trajectory.last().state.sigma);
    assert!((a - b).amax() < 1e-9);
}

#[test]
fn resonant_chains_carry_the_two_oscillator_current() {
    let n2 = chain(2, 0.4, PI / 200.0);
    let period = 2.0 * PI / (PI / 200.0);
    let s2 = steady_state(&n2.undriven()).unwrap();
    for n in [3, 4] {
        let net = chain(n, 0.4, PI / 200.0);
        for k in 0..12 {
            let t = period * k as f64 / 12.0;
            let (a, b) = (slow_record(&net, t).unwrap(), slow_record(&n2, t).unwrap());
            for alpha in 0..2 {
                let rel = (a.q_dot[alpha] - b.q_dot[alpha]).abs() / b.q_dot[alpha].abs();
                assert!(rel < 1e-6, "N={n} t={t} bath {alpha}: {rel:e}");
            }
        }
        let undriven = net.undriven();
        let s = steady_state(&undriven).unwrap();
        for alpha in 0..2 {
            let (qa, qb) =
                (heat_current(&s, &undriven, alpha).unwrap(), heat_current(&s2, &n2.undriven(), alpha).unwrap());
            assert!((qa - qb).abs() < 1e-6 * qb.abs(), "static N={n}: {qa} vs {qb}");
        }
    }
}

#[test]
fn static_chain_limit_cycle_is_its_steady_state() {
    let net = chain(3, 0.7, 0.0);
    let lc = find_limit_cycle(&net, &initial_gibbs(&net, 3.0).unwrap(), &LimitCycleOptions::default()).unwrap();
    assert_eq!(lc.trajectory.samples.len(), 1);
    let s = cycle_average(&lc.trajectory).unwrap();
    let [qc, qh] = [s.avg_q[0], s.avg_q[1]];
    // Quanta flow through the chain unchanged; each bath trades them at its own frequency.
    assert!((qc / 0.2 + qh / 0.5).abs() < 1e-12 * qc.abs(), "{qc} {qh}");
    assert!((qc + qh + s.avg_w).abs() < 1e-14);
    assert!(s.avg_q[1] < 0.0);
}
