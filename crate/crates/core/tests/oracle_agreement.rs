//! Truncated Fock-space integration against the Gaussian covariance integrator.

use std::f64::consts::PI;

use dqho_core::fock_oracle::{compare_with_gaussian, DEFAULT_DIM};
use dqho_core::{BathSpec, NetworkSpec, OscillatorSpec};

fn fig2(theta: f64, squeeze_hot: f64) -> NetworkSpec {
    let g = 0.5f64.sqrt();
    NetworkSpec::single(
        OscillatorSpec::new(1.0, 0.5, theta),
        vec![BathSpec::new(0.2, 10.0, vec![g]), BathSpec::new(0.5, 5.0, vec![g]).with_squeezing(squeeze_hot)],
    )
    .unwrap()
}

#[test]
fn fast_drive_five_periods() {
    let net = fig2(PI, 0.0);
    let cmp = compare_with_gaussian(&net, 10.0, 5.0 * 2.0, DEFAULT_DIM, 1).unwrap();
    assert_eq!(cmp.truncation, DEFAULT_DIM);
    assert!(cmp.samples > 1000);
    assert!(cmp.max_dev_occupation < 1e-4, "{cmp:?}");
    assert!(cmp.max_dev_sxx < 1e-4 && cmp.max_dev_sxp < 1e-4 && cmp.max_dev_spp < 1e-4, "{cmp:?}");
    assert!(cmp.max_rel_dev_heat < 1e-4, "{cmp:?}");
    assert!(cmp.max_abs_cumulant < 1e-6, "{cmp:?}");
    assert!(cmp.max_trace_error < 1e-10, "{cmp:?}");
}

#[test]
fn squeezed_hot_bath_under_fast_drive() {
    let net = fig2(PI, 0.3);
    let cmp = compare_with_gaussian(&net, 10.0, 3.0 * 2.0, DEFAULT_DIM, 5).unwrap();
    assert!(cmp.max_dev_occupation < 1e-4, "{cmp:?}");
    assert!(cmp.max_dev_sxx < 1e-4 && cmp.max_dev_sxp < 1e-4 && cmp.max_dev_spp < 1e-4, "{cmp:?}");
    assert!(cmp.max_rel_dev_heat < 1e-4, "{cmp:?}");
    assert!(cmp.max_abs_cumulant < 1e-6, "{cmp:?}");
}

#[test]
fn hot_initial_state_is_resolved() {
    let net = fig2(PI / 4.0, 0.0);
    let cmp = compare_with_gaussian(&net, 0.5, 8.0, 80, 10).unwrap();
    assert!(cmp.truncation >= 80);
    assert!(cmp.max_dev_occupation < 1e-4, "{cmp:?}");
    assert!(cmp.max_abs_cumulant < 1e-6, "{cmp:?}");
}

#[test]
fn rejects_networks_with_two_oscillators() {
    let net = NetworkSpec::chain(
        vec![OscillatorSpec::fixed(1.0); 2],
        0.5,
        vec![BathSpec::new(1.0, 1.0, vec![0.5, 0.0]), BathSpec::new(1.0, 2.0, vec![0.0, 0.5])],
    )
    .unwrap();
    assert!(compare_with_gaussian(&net, 1.0, 1.0, 10, 1).is_err());
}
