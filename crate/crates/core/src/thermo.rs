//! Heat currents, power, internal energy, cycle averages and regime classification.

use thiserror::Error;

use crate::dynamics::{CovarianceState, Trajectory};
use crate::model::{drive_frequency, excitation_number, NetworkSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermoError {
    #[error("bath index {index} out of range for {n_baths} baths")]
    InvalidBath { index: usize, n_baths: usize },
    #[error("trajectory is not periodic: relative endpoint mismatch {0:e}")]
    NotPeriodic(f64),
    #[error("trajectory is empty")]
    Empty,
    #[error("reference metrics need exactly two baths, got {0}")]
    NeedTwoBaths(usize),
}

/// Lower bound of the first-law normalisation, in units of energy per time.
///
/// Finite differences of the energy resolve `dU/dt` only to about `1e-16 U / dt`, roughly
/// `1e-13` at the default step, so flows below this floor are compared on an absolute scale.
pub const FIRST_LAW_FLOOR: f64 = 1e-6;

/// Dead-band (relative to the squared reference frequency) below which flows count as zero.
pub const IDLE_DEADBAND: f64 = 1e-10;

/// Default relative tolerance on `sigma(T) - sigma(0)` accepted by [`cycle_average`].
pub const PERIODICITY_TOL: f64 = 1e-6;

/// Instantaneous thermodynamics of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoRecord {
    pub t: f64,
    /// Heat current from each bath into the system.
    pub q_dot: Vec<f64>,
    /// Power done on the system.
    pub w_dot: f64,
    pub u: f64,
    /// `|dU/dt - W - sum Q|` with `dU/dt` from finite differences.
    pub first_law_residual: f64,
}

impl ThermoRecord {
    /// First-law residual divided by `max(|W|, |Q_alpha|, FIRST_LAW_FLOOR)`.
    pub fn relative_first_law_residual(&self) -> f64 {
        let scale = self.q_dot.iter().fold(self.w_dot.abs(), |m, q| m.max(q.abs()));
        self.first_law_residual / scale.max(FIRST_LAW_FLOOR)
    }
}

/// Heat current `sum_i g_{i,alpha}^2 Omega_alpha (n_alpha^eff - <n_i>)` from bath `alpha`.
pub fn heat_current(state: &CovarianceState, net: &NetworkSpec, alpha: usize) -> Result<f64, ThermoError> {
    let bath = net
        .baths()
        .get(alpha)
        .ok_or(ThermoError::InvalidBath { index: alpha, n_baths: net.n_baths() })?;
    let n_eff = bath.effective_occupation();
    Ok((0..net.n_oscillators())
        .map(|i| {
            let g2 = bath.couplings[i] * bath.couplings[i];
            if g2 == 0.0 {
                0.0
            } else {
                g2 * bath.omega_bath * (n_eff - excitation_number(state, net, i))
            }
        })
        .sum())
}

fn dissipative_power(state: &CovarianceState, net: &NetworkSpec) -> f64 {
    let mut w = 0.0;
    for i in 0..net.n_oscillators() {
        let (omega, _) = drive_frequency(&net.oscillators()[i], state.t);
        let n_i = excitation_number(state, net, i);
        for b in net.baths() {
            let g2 = b.couplings[i] * b.couplings[i];
            w += g2 * (omega - b.omega_bath) * (b.effective_occupation() - n_i);
        }
    }
    w
}

/// Power done on the system, the rate of change of the local energy not supplied as heat.
///
/// Besides the bath term `sum g^2 (omega_i - Omega_alpha)(n^eff - <n_i>)` it contains the
/// parametric term `omega_i omega_i' <x_i^2>` and, for detuned coupled oscillators, the
/// energy exchanged through the coupling, `lambda (omega_i - omega_j)/sqrt(omega_i omega_j)
/// (omega_i <x_i p_j> - omega_j <x_j p_i>)`.
pub fn power(state: &CovarianceState, net: &NetworkSpec) -> f64 {
    let n = net.n_oscillators();
    let freqs = net.frequencies(state.t);
    let second = |k: usize, l: usize| state.sigma[(k, l)] + state.mean[k] * state.mean[l];
    let mut w = dissipative_power(state, net);
    for (i, &(omega, omega_dot)) in freqs.iter().enumerate() {
        w += omega * omega_dot * second(2 * i, 2 * i);
    }
    let lambda = net.lambda();
    for i in 0..n {
        for j in (i + 1)..n {
            let l = lambda[(i, j)];
            if l == 0.0 {
                continue;
            }
            let (wi, wj) = (freqs[i].0, freqs[j].0);
            w += l * (wi - wj) / (wi * wj).sqrt()
                * (wi * second(2 * i, 2 * j + 1) - wj * second(2 * j, 2 * i + 1));
        }
    }
    w
}

/// Power with the parametric contribution approximated by `omega_i' (2<n_i> + 1)/2`.
///
/// This equals [`power`] whenever each oscillator's `x`-`p` block is diagonal in its
/// instantaneous eigenbasis and the coupling carries no energy, as in slow driving.
pub fn power_adiabatic(state: &CovarianceState, net: &NetworkSpec) -> f64 {
    let mut w = dissipative_power(state, net);
    for (i, (_, omega_dot)) in net.frequencies(state.t).into_iter().enumerate() {
        w += omega_dot * (2.0 * excitation_number(state, net, i) + 1.0) / 2.0;
    }
    w
}

/// Sum of the local oscillator energies `sum_i <p_i^2 + omega_i^2 x_i^2>/2`.
pub fn internal_energy(state: &CovarianceState, net: &NetworkSpec) -> f64 {
    net.frequencies(state.t)
        .into_iter()
        .enumerate()
        .map(|(i, (w, _))| {
            let (x, p) = (2 * i, 2 * i + 1);
            0.5 * (state.sigma[(p, p)] + state.mean[p].powi(2) + w * w * (state.sigma[(x, x)] + state.mean[x].powi(2)))
        })
        .sum()
}

/// Builds the record of `state`, given an independent estimate `u_dot` of `dU/dt`.
pub fn record(state: &CovarianceState, net: &NetworkSpec, u_dot: f64) -> ThermoRecord {
    let q_dot: Vec<f64> = (0..net.n_baths())
        .map(|a| heat_current(state, net, a).expect("bath index in range"))
        .collect();
    let w_dot = power(state, net);
    let first_law_residual = (u_dot - w_dot - q_dot.iter().sum::<f64>()).abs();
    ThermoRecord { t: state.t, q_dot, w_dot, u: internal_energy(state, net), first_law_residual }
}

/// Operating regime of a two-bath machine from the signs of its average flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Engine,
    Refrigerator,
    Accelerator,
    Dissipator,
    Idle,
    /// Sign pattern outside the four machine types (e.g. exactly at a regime boundary).
    Unclassified,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Engine => "engine",
            Regime::Refrigerator => "refrigerator",
            Regime::Accelerator => "accelerator",
            Regime::Dissipator => "dissipator",
            Regime::Idle => "idle",
            Regime::Unclassified => "unclassified",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies a cycle; values within `eps` of zero count as zero.
pub fn classify_regime(q_c: f64, q_h: f64, w: f64, eps: f64) -> Regime {
    let sign = |v: f64| if v > eps { 1 } else if v < -eps { -1 } else { 0 };
    match (sign(q_c), sign(q_h), sign(w)) {
        (0, 0, 0) => Regime::Idle,
        (-1, 1, -1) => Regime::Engine,
        (1, -1, 1) => Regime::Refrigerator,
        (-1, 1, 1) => Regime::Accelerator,
        (-1, -1, 1) => Regime::Dissipator,
        _ => Regime::Unclassified,
    }
}

/// Which bath is cold and which is hot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BathLabels {
    pub cold: usize,
    pub hot: usize,
}

/// The cold bath is the one with the larger effective inverse temperature (ties: lower index).
///
/// Squeezing lowers the effective inverse temperature, so it can swap the labels.
pub fn bath_labels(net: &NetworkSpec) -> Result<BathLabels, ThermoError> {
    let baths = net.baths();
    if baths.len() != 2 {
        return Err(ThermoError::NeedTwoBaths(baths.len()));
    }
    if baths[1].effective_beta() > baths[0].effective_beta() {
        Ok(BathLabels { cold: 1, hot: 0 })
    } else {
        Ok(BathLabels { cold: 0, hot: 1 })
    }
}

/// Instantaneous engine efficiency `-W/Q_h`, defined only while `W < 0` and `Q_h > 0`.
pub fn efficiency_instant(rec: &ThermoRecord, labels: BathLabels) -> Option<f64> {
    let q_h = rec.q_dot[labels.hot];
    (rec.w_dot < 0.0 && q_h > 0.0).then(|| -rec.w_dot / q_h)
}

/// Instantaneous refrigerator COP `Q_c/W`, defined only while `Q_c > 0` and `W > 0`.
pub fn cop_instant(rec: &ThermoRecord, labels: BathLabels) -> Option<f64> {
    let q_c = rec.q_dot[labels.cold];
    (rec.w_dot > 0.0 && q_c > 0.0).then(|| q_c / rec.w_dot)
}

/// Benchmark efficiencies of a two-bath network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMetrics {
    pub eta_otto: f64,
    /// `None` when the bath frequencies coincide.
    pub cop_otto: Option<f64>,
    pub eta_carnot: f64,
    pub eta_carnot_eff: f64,
    pub eta_curzon_ahlborn: f64,
}

pub fn reference_metrics(net: &NetworkSpec) -> Result<ReferenceMetrics, ThermoError> {
    let labels = bath_labels(net)?;
    let (c, h) = (&net.baths()[labels.cold], &net.baths()[labels.hot]);
    let (wc, wh) = (c.omega_bath, h.omega_bath);
    Ok(ReferenceMetrics {
        eta_otto: 1.0 - wc / wh,
        cop_otto: (wh != wc).then(|| wc / (wh - wc)),
        eta_carnot: 1.0 - h.beta / c.beta,
        eta_carnot_eff: 1.0 - h.effective_beta() / c.effective_beta(),
        eta_curzon_ahlborn: 1.0 - (h.beta / c.beta).sqrt(),
    })
}

/// Period averages and derived metrics of one limit-cycle period.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSummary {
    /// Zero for a static steady state.
    pub period: f64,
    pub avg_q: Vec<f64>,
    pub avg_w: f64,
    pub labels: Option<BathLabels>,
    pub regime: Regime,
    /// `-<W>/<Q_h>` when the cycle is an engine.
    pub avg_efficiency: Option<f64>,
    /// `<Q_c>/<W>` when the cycle is a refrigerator.
    pub avg_cop: Option<f64>,
    pub instant_efficiency_max: Option<f64>,
    pub instant_efficiency_mean: Option<f64>,
    pub instant_cop_max: Option<f64>,
    pub instant_cop_mean: Option<f64>,
    /// Largest [`ThermoRecord::relative_first_law_residual`] among the samples.
    pub max_first_law_residual: f64,
    /// `max|sigma(T) - sigma(0)| / max|sigma(0)|`.
    pub periodicity_residual: f64,
}

fn trapezoid_mean(ts: &[f64], ys: &[f64]) -> f64 {
    let span = ts[ts.len() - 1] - ts[0];
    let integral: f64 = ts
        .windows(2)
        .zip(ys.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum();
    integral / span
}

/// Mean and maximum of the defined values over one period, skipping the duplicated endpoint.
fn mean_max(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>) {
    let defined: Vec<f64> = values.flatten().collect();
    if defined.is_empty() {
        return (None, None);
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    (Some(mean), Some(defined.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
}

/// [`cycle_average_with_tol`] at [`PERIODICITY_TOL`].
pub fn cycle_average(traj: &Trajectory) -> Result<CycleSummary, ThermoError> {
    cycle_average_with_tol(traj, PERIODICITY_TOL)
}

/// Trapezoidal period averages of one limit-cycle period (or a single steady-state sample).
pub fn cycle_average_with_tol(traj: &Trajectory, tol: f64) -> Result<CycleSummary, ThermoError> {
    let samples = &traj.samples;
    let (first, last) = match (samples.first(), samples.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(ThermoError::Empty),
    };
    let periodicity_residual = if samples.len() > 1 {
        (&last.state.sigma - &first.state.sigma).amax() / first.state.sigma.amax()
    } else {
        0.0
    };
    if periodicity_residual > tol {
        return Err(ThermoError::NotPeriodic(periodicity_residual));
    }
    let n_baths = traj.net.n_baths();
    let (period, avg_q, avg_w) = if samples.len() == 1 {
        (0.0, first.thermo.q_dot.clone(), first.thermo.w_dot)
    } else {
        let ts: Vec<f64> = samples.iter().map(|s| s.state.t).collect();
        let avg_q = (0..n_baths)
            .map(|a| {
                let ys: Vec<f64> = samples.iter().map(|s| s.thermo.q_dot[a]).collect();
                trapezoid_mean(&ts, &ys)
            })
            .collect();
        let ws: Vec<f64> = samples.iter().map(|s| s.thermo.w_dot).collect();
        (ts[ts.len() - 1] - ts[0], avg_q, trapezoid_mean(&ts, &ws))
    };
    let max_first_law_residual = samples
        .iter()
        .map(|s| s.thermo.relative_first_law_residual())
        .fold(0.0, f64::max);

    let mut summary = CycleSummary {
        period,
        avg_q,
        avg_w,
        labels: None,
        regime: Regime::Unclassified,
        avg_efficiency: None,
        avg_cop: None,
        instant_efficiency_max: None,
        instant_efficiency_mean: None,
        instant_cop_max: None,
        instant_cop_mean: None,
        max_first_law_residual,
        periodicity_residual,
    };
    let Ok(labels) = bath_labels(&traj.net) else {
        return Ok(summary);
    };
    let scale = traj.net.oscillators().iter().map(|o| o.omega0).fold(0.0, f64::max);
    let (q_c, q_h) = (summary.avg_q[labels.cold], summary.avg_q[labels.hot]);
    summary.labels = Some(labels);
    summary.regime = classify_regime(q_c, q_h, summary.avg_w, IDLE_DEADBAND * scale * scale);
    match summary.regime {
        Regime::Engine => summary.avg_efficiency = Some(-summary.avg_w / q_h),
        Regime::Refrigerator => summary.avg_cop = Some(q_c / summary.avg_w),
        _ => {}
    }
    // The final sample repeats the first one on a closed cycle.
    let body = if samples.len() > 1 { &samples[..samples.len() - 1] } else { &samples[..] };
    (summary.instant_efficiency_mean, summary.instant_efficiency_max) =
        mean_max(body.iter().map(|s| efficiency_instant(&s.thermo, labels)));
    (summary.instant_cop_mean, summary.instant_cop_max) =
        mean_max(body.iter().map(|s| cop_instant(&s.thermo, labels)));
    Ok(summary)
}
