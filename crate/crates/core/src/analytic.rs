//! Slow-driving limit: the state follows the instantaneous steady state (`d sigma/dt = 0`).
//!
//! Closed forms exist for one oscillator and for two oscillators each attached to one bath;
//! any network can be treated through [`slow_sigma`], a Lyapunov solve at frozen time.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dynamics::CovarianceState;
use crate::linalg::lyapunov_solve;
use crate::model::{build_matrices, drive_frequency, ModelError, NetworkSpec};
use crate::thermo::{self, bath_labels, BathLabels, ThermoError, ThermoRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error("closed form requires {0}")]
    Shape(&'static str),
    #[error("undefined at the Carnot point n_c = n_h")]
    CarnotPoint,
    #[error("frozen-time generator has no unique steady state at t = {0}")]
    Singular(f64),
}

/// Instantaneous steady-state covariance `(sigma_xx, sigma_xp, sigma_pp)` of one oscillator.
pub fn slow_state_1osc(omega: f64, nbar: f64) -> (f64, f64, f64) {
    let v = 2.0 * nbar + 1.0;
    (v / (2.0 * omega), 0.0, omega * v / 2.0)
}

/// Slow-driving flows at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowSolution {
    pub t: f64,
    pub q_dot_c: f64,
    pub q_dot_h: f64,
    pub w_dot: f64,
    /// Part of `w_dot` without the `omega'` terms; equal to the period average.
    pub w_dot_mean: f64,
    pub labels: BathLabels,
}

/// Bath parameters of a two-bath network in cold/hot order.
#[derive(Debug, Clone, Copy)]
struct Pair {
    labels: BathLabels,
    n_c: f64,
    n_h: f64,
    w_c: f64,
    w_h: f64,
}

fn pair(net: &NetworkSpec) -> Result<Pair, AnalyticError> {
    let labels = bath_labels(net)?;
    let (c, h) = (&net.baths()[labels.cold], &net.baths()[labels.hot]);
    Ok(Pair {
        labels,
        n_c: c.effective_occupation(),
        n_h: h.effective_occupation(),
        w_c: c.omega_bath,
        w_h: h.omega_bath,
    })
}

/// Damping rate and weighted occupation of a single oscillator, `(gamma, nbar)`.
pub fn effective_bath(net: &NetworkSpec, i: usize) -> (f64, f64) {
    let gamma = net.damping(i);
    let weighted: f64 = net
        .baths()
        .iter()
        .map(|b| b.couplings[i] * b.couplings[i] * b.effective_occupation())
        .sum();
    (gamma, if gamma > 0.0 { weighted / gamma } else { 0.0 })
}

/// One oscillator between a cold and a hot bath.
pub fn slow_flows_1osc(net: &NetworkSpec, t: f64) -> Result<SlowSolution, AnalyticError> {
    if net.n_oscillators() != 1 {
        return Err(AnalyticError::Shape("a single oscillator"));
    }
    let p = pair(net)?;
    let g2c = net.baths()[p.labels.cold].couplings[0].powi(2);
    let g2h = net.baths()[p.labels.hot].couplings[0].powi(2);
    let (gamma, nbar) = effective_bath(net, 0);
    let (_, omega_dot) = drive_frequency(&net.oscillators()[0], t);
    let (q_c, q_h, w_mean) = if gamma > 0.0 {
        let k = g2c * g2h / gamma;
        (
            p.w_c * k * (p.n_c - p.n_h),
            p.w_h * k * (p.n_h - p.n_c),
            k * (p.w_c - p.w_h) * (p.n_h - p.n_c),
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    Ok(SlowSolution {
        t,
        q_dot_c: q_c,
        q_dot_h: q_h,
        w_dot: w_mean + (2.0 * nbar + 1.0) * omega_dot / 2.0,
        w_dot_mean: w_mean,
        labels: p.labels,
    })
}

/// Two coupled oscillators, the first on one bath and the second on the other.
///
/// Valid for detuned frequencies; the resonant case is the `omega_1 = omega_2` specialisation.
pub fn slow_flows_2osc(net: &NetworkSpec, t: f64) -> Result<SlowSolution, AnalyticError> {
    if net.n_oscillators() != 2 || net.n_baths() != 2 {
        return Err(AnalyticError::Shape("two oscillators and two baths"));
    }
    let p = pair(net)?;
    let (cold, hot) = (&net.baths()[p.labels.cold], &net.baths()[p.labels.hot]);
    // Index of the oscillator attached to the cold bath.
    let ic = match (cold.couplings[0] != 0.0, cold.couplings[1] != 0.0) {
        (true, false) if hot.couplings[0] == 0.0 => 0,
        (false, true) if hot.couplings[1] == 0.0 => 1,
        _ => return Err(AnalyticError::Shape("each oscillator coupled to exactly one bath")),
    };
    let ih = 1 - ic;
    let g2c = cold.couplings[ic].powi(2);
    let g2h = hot.couplings[ih].powi(2);
    let lambda = net.lambda()[(0, 1)];
    let (w_1, wd_1) = drive_frequency(&net.oscillators()[ic], t);
    let (w_2, wd_2) = drive_frequency(&net.oscillators()[ih], t);

    let g = g2c + g2h;
    let l2 = lambda * lambda;
    let den = g * g * (4.0 * l2 + g2c * g2h) + 4.0 * g2c * g2h * (w_1 - w_2).powi(2);
    let k = 4.0 * l2 * g2c * g2h * g * (p.n_c - p.n_h) / den;
    let (q_c, q_h) = (p.w_c * k, -p.w_h * k);
    let w_mean = -q_c - q_h;
    let w_dot = ((2.0 * p.n_c + 1.0) * wd_1 + (2.0 * p.n_h + 1.0) * wd_2) / 2.0
        + 4.0 * l2 * g * (wd_1 * g2c - wd_2 * g2h) * (p.n_c - p.n_h) / den
        + w_mean;
    Ok(SlowSolution { t, q_dot_c: q_c, q_dot_h: q_h, w_dot, w_dot_mean: w_mean, labels: p.labels })
}

/// Resonant two-oscillator power in its simplified closed form.
pub fn slow_power_2osc_resonant(net: &NetworkSpec, t: f64) -> Result<f64, AnalyticError> {
    let sol = slow_flows_2osc(net, t)?;
    let p = pair(net)?;
    let (cold, hot) = (&net.baths()[p.labels.cold], &net.baths()[p.labels.hot]);
    let g2c = cold.couplings.iter().map(|g| g * g).sum::<f64>();
    let g2h = hot.couplings.iter().map(|g| g * g).sum::<f64>();
    let l2 = net.lambda()[(0, 1)].powi(2);
    let (_, wd) = drive_frequency(&net.oscillators()[0], sol.t);
    let g = g2c + g2h;
    let x = g2c * g2h / l2 * g * (1.0 + p.n_c + p.n_h)
        + 4.0 * (g2c * (1.0 + 2.0 * p.n_c) + g2h * (1.0 + 2.0 * p.n_h));
    Ok((x * wd - 4.0 * g2c * g2h * (p.n_c - p.n_h) * (p.w_c - p.w_h)) / (g * (4.0 + g2c * g2h / l2)))
}

/// Frozen-time steady-state covariance, solving `D(t) sigma + sigma D(t)^T + T(t) = 0`.
pub fn slow_sigma(net: &NetworkSpec, t: f64) -> Result<CovarianceState, AnalyticError> {
    let m = build_matrices(net, t)?;
    let sigma = lyapunov_solve(&m.drift, &m.noise).ok_or(AnalyticError::Singular(t))?;
    Ok(CovarianceState::new(t, DVector::zeros(net.dim()), sigma))
}

/// Thermodynamics of the frozen-time steady state of any network.
///
/// In this state `dU/dt` is only the explicit time dependence, so the energy balance
/// closes exactly and the record carries no residual.
pub fn slow_record(net: &NetworkSpec, t: f64) -> Result<ThermoRecord, AnalyticError> {
    let state = slow_sigma(net, t)?;
    let q: f64 = (0..net.n_baths()).map(|a| thermo::heat_current(&state, net, a)).sum::<Result<f64, _>>()?;
    let w = thermo::power(&state, net);
    Ok(thermo::record(&state, net, q + w))
}

fn carnot_guard(p: &Pair) -> Result<f64, AnalyticError> {
    let diff = p.n_c - p.n_h;
    if diff == 0.0 {
        return Err(AnalyticError::CarnotPoint);
    }
    Ok(diff)
}

/// Deviation of the instantaneous slow-driving efficiency from the Otto value.
///
/// `order = 1` is one oscillator,
/// `(2 nbar + 1) omega' (1/g_c^2 + 1/g_h^2) / (2 Omega_h (n_c - n_h))`;
/// `order = 2` is two resonant oscillators, adding `gamma (1 + n_c + n_h) omega' /
/// (4 lambda^2 Omega_h (n_c - n_h))` to twice the first-order term.
pub fn delta_eta(net: &NetworkSpec, t: f64, order: u8) -> Result<f64, AnalyticError> {
    let p = pair(net)?;
    let diff = carnot_guard(&p)?;
    let g2 = |label: usize| net.baths()[label].couplings.iter().map(|g| g * g).sum::<f64>();
    let (g2c, g2h) = (g2(p.labels.cold), g2(p.labels.hot));
    let gamma = g2c + g2h;
    let nbar = (g2c * p.n_c + g2h * p.n_h) / gamma;
    let (_, wd) = drive_frequency(&net.oscillators()[0], t);
    let first = (2.0 * nbar + 1.0) * wd * (1.0 / g2c + 1.0 / g2h) / (2.0 * p.w_h * diff);
    match order {
        1 => Ok(first),
        2 => {
            if net.n_oscillators() != 2 {
                return Err(AnalyticError::Shape("two oscillators for order 2"));
            }
            let l2 = net.lambda()[(0, 1)].powi(2);
            Ok(gamma * (1.0 + p.n_c + p.n_h) * wd / (4.0 * l2 * p.w_h * diff) + 2.0 * first)
        }
        _ => Err(AnalyticError::Shape("order 1 or 2")),
    }
}

/// COP correction, `1/COP = 1/COP_Otto + 1/delta_COP` with `1/delta_COP = (Omega_h/Omega_c) delta_eta`.
///
/// Infinite where `omega' = 0`.
pub fn delta_cop(net: &NetworkSpec, t: f64, order: u8) -> Result<f64, AnalyticError> {
    let p = pair(net)?;
    Ok(1.0 / (p.w_h / p.w_c * delta_eta(net, t, order)?))
}

/// Instantaneous slow-driving COP reconstructed from the Otto value and [`delta_cop`].
pub fn slow_cop(net: &NetworkSpec, t: f64, order: u8) -> Result<f64, AnalyticError> {
    let p = pair(net)?;
    let inv_otto = (p.w_h - p.w_c) / p.w_c;
    Ok(1.0 / (inv_otto + p.w_h / p.w_c * delta_eta(net, t, order)?))
}

/// Instantaneous slow-driving efficiency `eta_Otto + delta_eta`.
pub fn slow_efficiency(net: &NetworkSpec, t: f64, order: u8) -> Result<f64, AnalyticError> {
    let p = pair(net)?;
    Ok(1.0 - p.w_c / p.w_h + delta_eta(net, t, order)?)
}

/// Frozen-time covariance as a dense matrix; convenience for comparisons.
pub fn slow_sigma_matrix(net: &NetworkSpec, t: f64) -> Result<DMatrix<f64>, AnalyticError> {
    Ok(slow_sigma(net, t)?.sigma)
}
