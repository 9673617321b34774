//! Time evolution of first moments and covariance matrix.
//!
//! The coupled equations `d<R>/dt = D <R>` and `d sigma/dt = D sigma + sigma D^T + T` are
//! integrated with fixed-step classical RK4, re-evaluating `D` and `T` at the stage times.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{lyapunov_solve, symplectic_eigenvalues};
use crate::model::{build_matrices, drive_frequency, ModelError, NetworkSpec};
use crate::thermo::{self, ThermoRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("initial inverse temperature must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("time step {dt} outside (0, {dt_max}]")]
    InvalidStep { dt: f64, dt_max: f64 },
    #[error("end time {t_end} is not after start time {t_start}")]
    InvalidSpan { t_start: f64, t_end: f64 },
    #[error("state dimension {got} does not match network dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("integration produced non-finite values at t = {t}")]
    NonFinite { t: f64 },
    #[error("unphysical covariance at t = {t}: symplectic eigenvalue {nu_min} < 1/2")]
    Unphysical { t: f64, nu_min: f64 },
    #[error("modulation frequencies {0:?} are not commensurate")]
    Incommensurate(Vec<f64>),
    #[error("limit cycle not reached after {periods} periods (residual {residual:e})")]
    NotConverged { periods: usize, residual: f64 },
    #[error("static network has no unique steady state")]
    NoSteadyState,
}

/// Symplectic eigenvalues may undershoot 1/2 by this much before a state counts as unphysical.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Complete Gaussian state: time, first moments and covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub t: f64,
    pub mean: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl CovarianceState {
    pub fn new(t: f64, mean: DVector<f64>, sigma: DMatrix<f64>) -> Self {
        Self { t, mean, sigma }
    }

    /// Product of thermal states of the instantaneous oscillators with the given occupations.
    pub fn thermal(net: &NetworkSpec, t: f64, occupations: &[f64]) -> Self {
        let dim = net.dim();
        let mut sigma = DMatrix::zeros(dim, dim);
        for (i, (w, _)) in net.frequencies(t).into_iter().enumerate() {
            let v = 2.0 * occupations[i] + 1.0;
            sigma[(2 * i, 2 * i)] = v / (2.0 * w);
            sigma[(2 * i + 1, 2 * i + 1)] = w * v / 2.0;
        }
        Self::new(t, DVector::zeros(dim), sigma)
    }

    pub fn vacuum(net: &NetworkSpec, t: f64) -> Self {
        Self::thermal(net, t, &vec![0.0; net.n_oscillators()])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Smallest symplectic eigenvalue of `sigma`.
    pub fn min_symplectic_eigenvalue(&self) -> f64 {
        symplectic_eigenvalues(&self.sigma).into_iter().fold(f64::INFINITY, f64::min)
    }

    fn check_physical(&self) -> Result<(), DynamicsError> {
        let nu_min = self.min_symplectic_eigenvalue();
        if nu_min < 0.5 - PHYSICALITY_TOL {
            return Err(DynamicsError::Unphysical { t: self.t, nu_min });
        }
        Ok(())
    }
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: CovarianceState,
    pub thermo: ThermoRecord,
}

/// Samples at uniform spacing `dt * stride`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub net: NetworkSpec,
    pub dt: f64,
    pub stride: usize,
    /// Driving period spanned by the samples, when the trajectory is one limit-cycle period.
    pub period: Option<f64>,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.state.t)
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }
}

/// Largest admissible RK4 step: `min(2 pi / omega_max, 1 / gamma_max, 2 pi / theta_max) / 200`.
///
/// `omega_max` bounds the normal-mode frequencies, so it includes the inter-oscillator couplings.
pub fn dt_max(net: &NetworkSpec) -> f64 {
    let omega_max = net.max_mode_frequency();
    let gamma_max = (0..net.n_oscillators()).map(|i| net.damping(i)).fold(0.0, f64::max);
    let theta_max = net
        .oscillators()
        .iter()
        .filter(|o| !o.is_static())
        .map(|o| o.theta)
        .fold(0.0, f64::max);
    let mut scale = 2.0 * PI / omega_max;
    if gamma_max > 0.0 {
        scale = scale.min(1.0 / gamma_max);
    }
    if theta_max > 0.0 {
        scale = scale.min(2.0 * PI / theta_max);
    }
    scale / 200.0
}

/// Gibbs state of every oscillator at `omega_i(0)` and inverse temperature `beta_init`.
pub fn initial_gibbs(net: &NetworkSpec, beta_init: f64) -> Result<CovarianceState, DynamicsError> {
    if !(beta_init > 0.0) {
        return Err(DynamicsError::InvalidBeta(beta_init));
    }
    let occ: Vec<f64> = net
        .frequencies(0.0)
        .into_iter()
        .map(|(w, _)| 1.0 / (beta_init * w).exp_m1())
        .collect();
    Ok(CovarianceState::thermal(net, 0.0, &occ))
}

/// RK4 integrator with preallocated buffers. Matrices are stored row-major in flat slices.
pub(crate) struct Stepper<'a> {
    net: &'a NetworkSpec,
    n: usize,
    dim: usize,
    half_damping: Vec<f64>,
    noise_iso: Vec<f64>,
    noise_aniso: Vec<f64>,
    drift: [Vec<f64>; 3],
    noise: [Vec<f64>; 3],
    k_mean: [Vec<f64>; 4],
    k_sigma: [Vec<f64>; 4],
    y_mean: Vec<f64>,
    y_sigma: Vec<f64>,
    prod: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(net: &'a NetworkSpec) -> Self {
        let n = net.n_oscillators();
        let dim = 2 * n;
        let mat = || vec![0.0; dim * dim];
        let vec_ = || vec![0.0; dim];
        Self {
            net,
            n,
            dim,
            half_damping: (0..n).map(|i| 0.5 * net.damping(i)).collect(),
            noise_iso: (0..n).map(|i| net.noise_weight(i)).collect(),
            noise_aniso: (0..n).map(|i| net.noise_anisotropy(i)).collect(),
            drift: [mat(), mat(), mat()],
            noise: [vec_(), vec_(), vec_()],
            k_mean: [vec_(), vec_(), vec_(), vec_()],
            k_sigma: [mat(), mat(), mat(), mat()],
            y_mean: vec_(),
            y_sigma: mat(),
            prod: mat(),
        }
    }

    /// Fills `D(t)` (row-major) and the diagonal of `T(t)` into slot `slot`.
    fn generator(&mut self, t: f64, slot: usize) {
        let (n, dim) = (self.n, self.dim);
        let mut omegas = [0.0f64; 8];
        let mut heap;
        let omegas: &mut [f64] = if n <= 8 {
            &mut omegas[..n]
        } else {
            heap = vec![0.0; n];
            &mut heap
        };
        for (i, o) in self.net.oscillators().iter().enumerate() {
            omegas[i] = drive_frequency(o, t).0;
        }
        let d = &mut self.drift[slot];
        d.fill(0.0);
        let lambda = self.net.lambda();
        for i in 0..n {
            let (xr, pr) = (2 * i * dim, (2 * i + 1) * dim);
            // Row x_i of S A is row p_i of A; row p_i is minus row x_i of A.
            d[xr + 2 * i + 1] = 1.0;
            d[pr + 2 * i] = -omegas[i] * omegas[i];
            for j in 0..n {
                let l = lambda[(i, j)];
                if j != i && l != 0.0 {
                    let root = (omegas[i] * omegas[j]).sqrt();
                    d[xr + 2 * j + 1] = l / root;
                    d[pr + 2 * j] = -l * root;
                }
            }
            d[xr + 2 * i] -= self.half_damping[i];
            d[pr + 2 * i + 1] -= self.half_damping[i];
            let tn = &mut self.noise[slot];
            tn[2 * i] = (self.noise_iso[i] + self.noise_aniso[i]) / omegas[i];
            tn[2 * i + 1] = (self.noise_iso[i] - self.noise_aniso[i]) * omegas[i];
        }
    }

    /// Evaluates the right-hand side at (`y_mean`, `y_sigma`) with generator `slot` into stage `k`.
    fn rhs(&mut self, slot: usize, k: usize) {
        let dim = self.dim;
        let d = &self.drift[slot];
        let (mean, sigma) = (&self.y_mean, &self.y_sigma);
        let prod = &mut self.prod;
        for r in 0..dim {
            let drow = &d[r * dim..(r + 1) * dim];
            for c in 0..dim {
                let mut acc = 0.0;
                for (m, dv) in drow.iter().enumerate() {
                    acc += dv * sigma[m * dim + c];
                }
                prod[r * dim + c] = acc;
            }
        }
        let dmean = &mut self.k_mean[k];
        for r in 0..dim {
            let drow = &d[r * dim..(r + 1) * dim];
            dmean[r] = drow.iter().zip(mean.iter()).map(|(a, b)| a * b).sum();
        }
        let ks = &mut self.k_sigma[k];
        for r in 0..dim {
            for c in 0..dim {
                ks[r * dim + c] = prod[r * dim + c] + prod[c * dim + r];
            }
            ks[r * dim + r] += self.noise[slot][r];
        }
    }

    /// Advances `(mean, sigma)` from `t` to `t + dt` in place.
    pub(crate) fn advance(&mut self, t: f64, dt: f64, mean: &mut [f64], sigma: &mut [f64]) {
        self.generator(t, 0);
        self.generator(t + 0.5 * dt, 1);
        self.generator(t + dt, 2);

        self.y_mean.copy_from_slice(mean);
        self.y_sigma.copy_from_slice(sigma);
        self.rhs(0, 0);
        for (stage, (slot, coef)) in [(1usize, 0.5), (1, 0.5), (2, 1.0)].into_iter().enumerate() {
            let prev = stage;
            for (y, (m, k)) in self.y_mean.iter_mut().zip(mean.iter().zip(&self.k_mean[prev])) {
                *y = m + coef * dt * k;
            }
            for (y, (s, k)) in self.y_sigma.iter_mut().zip(sigma.iter().zip(&self.k_sigma[prev])) {
                *y = s + coef * dt * k;
            }
            self.rhs(slot, stage + 1);
        }
        let w = dt / 6.0;
        for (i, m) in mean.iter_mut().enumerate() {
            *m += w
                * (self.k_mean[0][i] + 2.0 * self.k_mean[1][i] + 2.0 * self.k_mean[2][i] + self.k_mean[3][i]);
        }
        let dim = self.dim;
        for (i, s) in sigma.iter_mut().enumerate() {
            *s += w
                * (self.k_sigma[0][i]
                    + 2.0 * self.k_sigma[1][i]
                    + 2.0 * self.k_sigma[2][i]
                    + self.k_sigma[3][i]);
        }
        for r in 0..dim {
            for c in (r + 1)..dim {
                let avg = 0.5 * (sigma[r * dim + c] + sigma[c * dim + r]);
                sigma[r * dim + c] = avg;
                sigma[c * dim + r] = avg;
            }
        }
    }
}

fn check_dims(state: &CovarianceState, net: &NetworkSpec) -> Result<(), DynamicsError> {
    let dim = net.dim();
    if state.mean.len() != dim || state.sigma.nrows() != dim || state.sigma.ncols() != dim {
        return Err(DynamicsError::DimensionMismatch { expected: dim, got: state.mean.len() });
    }
    Ok(())
}

fn check_step(net: &NetworkSpec, dt: f64) -> Result<(), DynamicsError> {
    let limit = dt_max(net);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-9) {
        return Err(DynamicsError::InvalidStep { dt, dt_max: limit });
    }
    Ok(())
}

fn to_flat(state: &CovarianceState) -> (Vec<f64>, Vec<f64>) {
    (state.mean.as_slice().to_vec(), state.sigma.transpose().as_slice().to_vec())
}

fn from_flat(t: f64, mean: &[f64], sigma: &[f64]) -> CovarianceState {
    let dim = mean.len();
    CovarianceState::new(t, DVector::from_column_slice(mean), DMatrix::from_row_slice(dim, dim, sigma))
}

fn local_energy_flat(net: &NetworkSpec, t: f64, mean: &[f64], sigma: &[f64]) -> f64 {
    let dim = mean.len();
    net.oscillators()
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let w = drive_frequency(o, t).0;
            let (x, p) = (2 * i, 2 * i + 1);
            0.5 * (sigma[p * dim + p] + mean[p] * mean[p] + w * w * (sigma[x * dim + x] + mean[x] * mean[x]))
        })
        .sum()
}

/// One RK4 step of the moment equations.
pub fn step(state: &CovarianceState, net: &NetworkSpec, dt: f64) -> Result<CovarianceState, DynamicsError> {
    check_dims(state, net)?;
    check_step(net, dt)?;
    let (mut mean, mut sigma) = to_flat(state);
    Stepper::new(net).advance(state.t, dt, &mut mean, &mut sigma);
    let t = state.t + dt;
    if mean.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFinite { t });
    }
    Ok(from_flat(t, &mean, &sigma))
}

/// Raw output of an integration segment: recorded states plus the local energy at every step.
struct Segment {
    recorded: Vec<(usize, CovarianceState)>,
    /// Local energy at every step, preceded by `history` energies from before the start.
    energies: Vec<f64>,
    history: usize,
    end: CovarianceState,
}

impl Segment {
    /// The last [`LOOKAHEAD`] energies before `end`, to continue the stencil into the next segment.
    fn tail(&self, n_steps: usize) -> Vec<f64> {
        let stop = self.history + n_steps;
        self.energies[stop - LOOKAHEAD..stop].to_vec()
    }
}

/// Integrates `n_steps` steps of size `dt`, recording every `stride`-th state (and the last one)
/// and the internal energy at every step, plus two look-ahead steps for finite differences.
fn run_segment(
    stepper: &mut Stepper,
    start: &CovarianceState,
    n_steps: usize,
    dt: f64,
    stride: usize,
    history: &[f64],
) -> Result<Segment, DynamicsError> {
    let net = stepper.net;
    let (mut mean, mut sigma) = to_flat(start);
    let t0 = start.t;
    let mut energies = Vec::with_capacity(history.len() + n_steps + LOOKAHEAD + 1);
    energies.extend_from_slice(history);
    let mut recorded = Vec::with_capacity(n_steps / stride + 2);
    energies.push(local_energy_flat(net, t0, &mean, &sigma));
    recorded.push((0, start.clone()));
    let mut end = start.clone();
    for k in 1..=n_steps + LOOKAHEAD {
        let t_prev = t0 + (k - 1) as f64 * dt;
        let t = t0 + k as f64 * dt;
        stepper.advance(t_prev, dt, &mut mean, &mut sigma);
        if mean.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite { t });
        }
        energies.push(local_energy_flat(net, t, &mean, &sigma));
        if k <= n_steps && (k % stride == 0 || k == n_steps) {
            let state = from_flat(t, &mean, &sigma);
            if k == n_steps {
                end = state.clone();
            }
            recorded.push((k, state));
        }
    }
    Ok(Segment { recorded, energies, history: history.len(), end })
}

/// Steps recorded past the end of a segment so the centred stencil covers the last sample.
const LOOKAHEAD: usize = 3;

/// Seven-point finite-difference derivative of the energy series at index `k` (sixth order).
/// Centred wherever three earlier values exist, one-sided before that.
fn energy_rate(energies: &[f64], k: usize, dt: f64) -> f64 {
    const STENCILS: [[f64; 7]; 4] = [
        [-147.0, 360.0, -450.0, 400.0, -225.0, 72.0, -10.0],
        [-10.0, -77.0, 150.0, -100.0, 50.0, -15.0, 2.0],
        [2.0, -24.0, -35.0, 80.0, -30.0, 8.0, -1.0],
        [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0],
    ];
    let (coeffs, first) = if k < LOOKAHEAD { (&STENCILS[k], 0) } else { (&STENCILS[3], k - LOOKAHEAD) };
    coeffs.iter().zip(&energies[first..first + 7]).map(|(c, u)| c * u).sum::<f64>() / (60.0 * dt)
}

fn into_samples(seg: Segment, net: &NetworkSpec, dt: f64) -> Result<(Vec<Sample>, CovarianceState), DynamicsError> {
    let mut samples = Vec::with_capacity(seg.recorded.len());
    for (k, state) in seg.recorded {
        state.check_physical()?;
        let u_dot = energy_rate(&seg.energies, seg.history + k, dt);
        let thermo = thermo::record(&state, net, u_dot);
        samples.push(Sample { state, thermo });
    }
    Ok((samples, seg.end))
}

/// Integrates from `init` to `t_end`, keeping every `stride`-th step with its thermodynamics.
///
/// The step is shrunk so that a whole number of strides lands exactly on `t_end`.
pub fn evolve(
    init: &CovarianceState,
    net: &NetworkSpec,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory, DynamicsError> {
    check_dims(init, net)?;
    if !(t_end > init.t) {
        return Err(DynamicsError::InvalidSpan { t_start: init.t, t_end });
    }
    check_step(net, dt)?;
    let span = t_end - init.t;
    let stride = stride.max(1);
    let n_steps = (((span / dt) - 1e-9).ceil().max(4.0) as usize).div_ceil(stride) * stride;
    let dt = span / n_steps as f64;
    let mut stepper = Stepper::new(net);
    let seg = run_segment(&mut stepper, init, n_steps, dt, stride, &[])?;
    let (samples, _) = into_samples(seg, net, dt)?;
    Ok(Trajectory { net: net.clone(), dt, stride, period: None, samples })
}

fn rational_approx(x: f64, max_den: u64, tol: f64) -> Option<(u64, u64)> {
    // Continued-fraction convergents of x > 0.
    let (mut h0, mut h1, mut k0, mut k1) = (0u64, 1u64, 1u64, 0u64);
    let mut v = x;
    for _ in 0..32 {
        let a = v.floor();
        let a_u = a as u64;
        let h2 = a_u.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a_u.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        if ((h2 as f64 / k2 as f64) - x).abs() <= tol * x.max(1.0) {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = v - a;
        if frac < 1e-15 {
            return None;
        }
        v = 1.0 / frac;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Common driving period of all modulated oscillators, or `None` when nothing is driven.
///
/// Modulation frequencies must be rational multiples of each other with denominators up to 64.
pub fn common_period(net: &NetworkSpec) -> Result<Option<f64>, DynamicsError> {
    let thetas: Vec<f64> = net
        .oscillators()
        .iter()
        .filter(|o| !o.is_static())
        .map(|o| o.theta)
        .collect();
    let Some(&base) = thetas.first() else {
        return Ok(None);
    };
    let mut ratios = Vec::with_capacity(thetas.len());
    for &th in &thetas {
        let (p, q) = rational_approx(th / base, 64, 1e-10)
            .ok_or_else(|| DynamicsError::Incommensurate(thetas.clone()))?;
        ratios.push((p, q));
    }
    // theta_i = base * p_i / q_i; fundamental = base / L * gcd(p_i * L / q_i).
    let l = ratios.iter().fold(1u64, |acc, &(_, q)| acc / gcd(acc, q) * q);
    let g = ratios.iter().fold(0u64, |acc, &(p, q)| gcd(acc, p * (l / q)));
    let fundamental = base * g as f64 / l as f64;
    Ok(Some(2.0 * PI / fundamental))
}

/// Stationary state of an undriven network, from the Lyapunov equation.
pub fn steady_state(net: &NetworkSpec) -> Result<CovarianceState, DynamicsError> {
    let m = build_matrices(net, 0.0)?;
    let sigma = lyapunov_solve(&m.drift, &m.noise).ok_or(DynamicsError::NoSteadyState)?;
    Ok(CovarianceState::new(0.0, DVector::zeros(net.dim()), sigma))
}

/// Controls for [`find_limit_cycle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCycleOptions {
    /// Fraction of [`dt_max`] used as the target step, in `(0, 1]`.
    pub dt_factor: f64,
    pub rel_tol: f64,
    pub max_periods: usize,
    /// Record every `stride`-th step; `None` picks roughly 1000 samples per period.
    pub stride: Option<usize>,
}

impl Default for LimitCycleOptions {
    fn default() -> Self {
        Self { dt_factor: 1.0, rel_tol: 1e-8, max_periods: 10_000, stride: None }
    }
}

/// A converged limit cycle: one period of samples plus convergence diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCycle {
    pub trajectory: Trajectory,
    /// Number of whole periods integrated, including the returned one.
    pub periods: usize,
    /// `max|sigma(t + T) - sigma(t)| / max|sigma(t)|` over the returned period.
    pub residual: f64,
}

fn relative_change(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (b - a).amax() / a.amax()
}

/// Evolves whole driving periods until the covariance repeats to `rel_tol`, then returns
/// the last period sampled densely. Undriven networks return their steady state as a
/// single-sample cycle with zero residual.
pub fn find_limit_cycle(
    net: &NetworkSpec,
    init: &CovarianceState,
    opts: &LimitCycleOptions,
) -> Result<LimitCycle, DynamicsError> {
    check_dims(init, net)?;
    let Some(period) = common_period(net)? else {
        let state = steady_state(net)?;
        state.check_physical()?;
        let thermo = thermo::record(&state, net, 0.0);
        let trajectory = Trajectory {
            net: net.clone(),
            dt: 0.0,
            stride: 1,
            period: None,
            samples: vec![Sample { state, thermo }],
        };
        return Ok(LimitCycle { trajectory, periods: 0, residual: 0.0 });
    };
    if !(opts.dt_factor > 0.0 && opts.dt_factor <= 1.0) {
        return Err(DynamicsError::InvalidStep { dt: opts.dt_factor * dt_max(net), dt_max: dt_max(net) });
    }
    let min_steps = (period / (opts.dt_factor * dt_max(net))).ceil().max(4.0) as usize;
    let stride = opts.stride.unwrap_or_else(|| (min_steps / 1000).max(1)).max(1);
    // Whole number of strides per period keeps the samples uniformly spaced.
    let n_steps = min_steps.div_ceil(stride) * stride;
    let dt = period / n_steps as f64;

    let mut stepper = Stepper::new(net);
    let mut start = init.clone();
    let mut residual = f64::INFINITY;
    let mut history = Vec::new();
    for k in 1..=opts.max_periods.max(1) {
        let seg = run_segment(&mut stepper, &start, n_steps, dt, stride, &history)?;
        residual = relative_change(&start.sigma, &seg.end.sigma);
        if residual < opts.rel_tol {
            let (samples, _) = into_samples(seg, net, dt)?;
            let trajectory = Trajectory { net: net.clone(), dt, stride, period: Some(period), samples };
            return Ok(LimitCycle { trajectory, periods: k, residual });
        }
        history = seg.tail(n_steps);
        start = seg.end;
        start.check_physical()?;
    }
    Err(DynamicsError::NotConverged { periods: opts.max_periods, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BathSpec, OscillatorSpec};
    use approx::assert_relative_eq;

    fn fig2(theta: f64) -> NetworkSpec {
        let g = 0.5f64.sqrt();
        NetworkSpec::single(
            OscillatorSpec::new(1.0, 0.5, theta),
            vec![BathSpec::new(0.2, 10.0, vec![g]), BathSpec::new(0.5, 5.0, vec![g])],
        )
        .unwrap()
    }

    #[test]
    fn gibbs_examples() {
        let net = fig2(PI / 200.0);
        let s = initial_gibbs(&net, 10.0).unwrap();
        let n0 = 1.0 / (10.0f64).exp_m1();
        assert_relative_eq!(n0, 4.540_199_100_968_776_5e-5, max_relative = 1e-12);
        assert_relative_eq!(s.sigma[(0, 0)], (2.0 * n0 + 1.0) / 2.0, max_relative = 1e-14);
        assert_relative_eq!(s.sigma[(1, 1)], (2.0 * n0 + 1.0) / 2.0, max_relative = 1e-14);
        let cold = initial_gibbs(&net, 1e6).unwrap();
        assert_eq!(cold.sigma, CovarianceState::vacuum(&net, 0.0).sigma);
        assert!(matches!(initial_gibbs(&net, 0.0), Err(DynamicsError::InvalidBeta(_))));
    }

    #[test]
    fn two_mode_gibbs_is_product() {
        let net = NetworkSpec::chain(
            vec![OscillatorSpec::new(1.0, 0.5, 0.1); 2],
            1.0,
            vec![BathSpec::new(0.2, 10.0, vec![0.5, 0.0]), BathSpec::new(0.5, 5.0, vec![0.0, 0.5])],
        )
        .unwrap();
        let s = initial_gibbs(&net, 10.0).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                if r != c {
                    assert_eq!(s.sigma[(r, c)], 0.0);
                }
            }
        }
    }

    #[test]
    fn steady_state_is_fixed_point() {
        let net = fig2(0.0);
        let ss = steady_state(&net).unwrap();
        let dt = dt_max(&net);
        let next = step(&ss, &net, dt).unwrap();
        assert!((&next.sigma - &ss.sigma).amax() < 1e-10);
    }

    #[test]
    fn free_undamped_zero_noise_is_identity() {
        // No baths and a vanishing frequency-independent drift is not possible, so check
        // instead that an undamped oscillator with no noise keeps the vacuum invariant.
        let net = NetworkSpec::single(OscillatorSpec::fixed(1.0), vec![]).unwrap();
        let vac = CovarianceState::vacuum(&net, 0.0);
        let next = step(&vac, &net, dt_max(&net)).unwrap();
        assert!((&next.sigma - &vac.sigma).amax() < 1e-14);
        assert_eq!(next.mean, vac.mean);
    }

    #[test]
    fn step_rejects_oversized_dt() {
        let net = fig2(PI);
        let s = initial_gibbs(&net, 10.0).unwrap();
        assert!(matches!(step(&s, &net, 10.0), Err(DynamicsError::InvalidStep { .. })));
        assert!(matches!(step(&s, &net, -1.0), Err(DynamicsError::InvalidStep { .. })));
    }

    #[test]
    fn step_matches_closed_form_covariance_equations() {
        // Compare one tiny step to an explicit Euler estimate of the scalar equations.
        let net = fig2(PI);
        let s = initial_gibbs(&net, 3.0).unwrap();
        let dt = 1e-6;
        let next = step(&s, &net, dt).unwrap();
        let (w, _) = drive_frequency(&net.oscillators()[0], 0.0);
        let gamma = 1.0;
        let nbar = 0.5 * (1.0 / 2.0f64.exp_m1() + 1.0 / 2.5f64.exp_m1());
        let (sxx, sxp, spp) = (s.sigma[(0, 0)], s.sigma[(0, 1)], s.sigma[(1, 1)]);
        let dxx = -gamma * sxx + gamma * (2.0 * nbar + 1.0) / (2.0 * w) + 2.0 * sxp;
        let dxp = -gamma * sxp + spp - sxx * w * w;
        let dpp = -gamma * spp + gamma * (2.0 * nbar + 1.0) * w / 2.0 - 2.0 * sxp * w * w;
        assert_relative_eq!((next.sigma[(0, 0)] - sxx) / dt, dxx, max_relative = 1e-5);
        assert_relative_eq!((next.sigma[(0, 1)] - sxp) / dt, dxp, epsilon = 1e-5);
        assert_relative_eq!((next.sigma[(1, 1)] - spp) / dt, dpp, max_relative = 1e-5);
    }

    #[test]
    fn evolve_records_uniform_samples() {
        let net = fig2(PI);
        let s = initial_gibbs(&net, 10.0).unwrap();
        let traj = evolve(&s, &net, 2.0, dt_max(&net), 7).unwrap();
        let times: Vec<f64> = traj.times().collect();
        for w in times.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - 7.0 * traj.dt).abs() < 1e-12);
        }
        assert!((times.last().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn commensurate_and_incommensurate_periods() {
        let mk = |thetas: &[f64]| {
            let oscs = thetas.iter().map(|&t| OscillatorSpec::new(1.0, 0.1, t)).collect::<Vec<_>>();
            let n = oscs.len();
            NetworkSpec::new(oscs, DMatrix::zeros(n, n), vec![]).unwrap()
        };
        let p = common_period(&mk(&[2.0, 3.0])).unwrap().unwrap();
        assert_relative_eq!(p, 2.0 * PI, max_relative = 1e-12);
        let p = common_period(&mk(&[PI, PI])).unwrap().unwrap();
        assert_relative_eq!(p, 2.0, max_relative = 1e-12);
        assert!(common_period(&mk(&[0.0, 0.0])).unwrap().is_none());
        assert!(matches!(common_period(&mk(&[1.0, 2f64.sqrt()])), Err(DynamicsError::Incommensurate(_))));
    }

    #[test]
    fn static_limit_cycle_is_degenerate() {
        let net = fig2(0.0);
        let init = initial_gibbs(&net, 10.0).unwrap();
        let lc = find_limit_cycle(&net, &init, &LimitCycleOptions::default()).unwrap();
        assert_eq!(lc.residual, 0.0);
        assert_eq!(lc.trajectory.samples.len(), 1);
    }

    #[test]
    fn long_static_evolution_reaches_lyapunov_state() {
        let net = fig2(0.0);
        let init = initial_gibbs(&net, 10.0).unwrap();
        let traj = evolve(&init, &net, 40.0, dt_max(&net), 1000).unwrap();
        let ss = steady_state(&net).unwrap();
        assert!((&traj.last().state.sigma - &ss.sigma).amax() < 1e-12);
    }

    #[test]
    fn two_baths_equal_effective_bath() {
        let (gc, gh) = (0.6f64, 0.9f64);
        let (bc, bh) = (BathSpec::new(0.2, 10.0, vec![gc]), BathSpec::new(0.5, 5.0, vec![gh]));
        let gamma = gc * gc + gh * gh;
        let nbar = (gc * gc * bc.thermal_occupation() + gh * gh * bh.thermal_occupation()) / gamma;
        let eff = BathSpec::new(1.0, (1.0 + 1.0 / nbar).ln(), vec![gamma.sqrt()]);
        let osc = OscillatorSpec::new(1.0, 0.5, PI / 4.0);
        let two = NetworkSpec::single(osc, vec![bc, bh]).unwrap();
        let one = NetworkSpec::single(osc, vec![eff]).unwrap();
        let init = initial_gibbs(&two, 10.0).unwrap();
        let dt = dt_max(&two).min(dt_max(&one));
        let a = evolve(&init, &two, 20.0, dt, 50).unwrap();
        let b = evolve(&init, &one, 20.0, dt, 50).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((&x.state.sigma - &y.state.sigma).amax() < 1e-10);
        }
    }
}
