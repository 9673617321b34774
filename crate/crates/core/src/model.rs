//! Network description and the quadratic-form matrices of the Gaussian dynamics.
//!
//! Quadratures are ordered `R = (x_1, p_1, x_2, p_2, ...)`, with `hbar = k_B = m = 1`.
//! Every frequency is expressed in units of a reference frequency chosen by the caller.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::dynamics::CovarianceState;
use crate::squeeze_entangle::effective_occupation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("network has no oscillators")]
    Empty,
    #[error("oscillator {index}: {reason}")]
    InvalidOscillator { index: usize, reason: String },
    #[error("bath {index}: {reason}")]
    InvalidBath { index: usize, reason: String },
    #[error("coupling matrix: {0}")]
    InvalidCoupling(String),
    #[error("non-finite entry in {matrix} at t = {t}")]
    NonFinite { matrix: &'static str, t: f64 },
}

/// A parametrically driven oscillator, `omega(t) = omega0 + delta_omega * sin(theta * t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorSpec {
    pub omega0: f64,
    pub delta_omega: f64,
    pub theta: f64,
}

impl OscillatorSpec {
    pub fn new(omega0: f64, delta_omega: f64, theta: f64) -> Self {
        Self { omega0, delta_omega, theta }
    }

    /// An undriven oscillator at fixed frequency.
    pub fn fixed(omega0: f64) -> Self {
        Self::new(omega0, 0.0, 0.0)
    }

    pub fn is_static(&self) -> bool {
        self.theta == 0.0 || self.delta_omega == 0.0
    }

    pub fn validate(&self) -> Result<(), String> {
        let Self { omega0, delta_omega, theta } = *self;
        if !(omega0.is_finite() && delta_omega.is_finite() && theta.is_finite()) {
            return Err("parameters must be finite".into());
        }
        if omega0 <= 0.0 {
            return Err(format!("omega0 must be positive, got {omega0}"));
        }
        if delta_omega < 0.0 || delta_omega >= omega0 {
            return Err(format!(
                "delta_omega must lie in [0, omega0), got {delta_omega} with omega0 = {omega0}"
            ));
        }
        if theta < 0.0 {
            return Err(format!("theta must be non-negative, got {theta}"));
        }
        Ok(())
    }

    /// Largest frequency reached during the drive.
    pub fn max_frequency(&self) -> f64 {
        self.omega0 + self.delta_omega
    }
}

/// Instantaneous frequency and its time derivative.
pub fn drive_frequency(osc: &OscillatorSpec, t: f64) -> (f64, f64) {
    let (s, c) = (osc.theta * t).sin_cos();
    (osc.omega0 + osc.delta_omega * s, osc.delta_omega * osc.theta * c)
}

/// A single-frequency bath of (possibly squeezed) thermal ancillas.
///
/// `couplings[i]` is the coupling `g_{i,alpha}` to system oscillator `i`; the
/// squeezing phase is fixed to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    pub omega_bath: f64,
    pub beta: f64,
    pub squeeze_r: f64,
    pub couplings: Vec<f64>,
}

impl BathSpec {
    pub fn new(omega_bath: f64, beta: f64, couplings: Vec<f64>) -> Self {
        Self { omega_bath, beta, squeeze_r: 0.0, couplings }
    }

    pub fn with_squeezing(mut self, r: f64) -> Self {
        self.squeeze_r = r;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.omega_bath.is_finite() && self.omega_bath > 0.0) {
            return Err(format!("omega_bath must be positive, got {}", self.omega_bath));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.squeeze_r.is_finite() && self.squeeze_r >= 0.0) {
            return Err(format!("squeeze_r must be non-negative, got {}", self.squeeze_r));
        }
        if let Some(g) = self.couplings.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(format!("couplings must be non-negative, got {g}"));
        }
        if self.thermal_occupation() <= 0.0 {
            return Err("thermal occupation underflows to zero; beta * omega_bath is too large".into());
        }
        Ok(())
    }

    /// Bose-Einstein occupation `1 / (exp(beta * Omega) - 1)`.
    pub fn thermal_occupation(&self) -> f64 {
        1.0 / (self.beta * self.omega_bath).exp_m1()
    }

    /// Occupation of the squeezed thermal ancillas.
    pub fn effective_occupation(&self) -> f64 {
        effective_occupation(self.thermal_occupation(), self.squeeze_r)
    }

    /// Inverse temperature of the thermal bath with the same occupation as the squeezed one.
    pub fn effective_beta(&self) -> f64 {
        crate::squeeze_entangle::effective_beta(self.beta, self.omega_bath, self.squeeze_r)
    }

    /// `(2n + 1) sinh(2r)`: the quadrature-anisotropic part of the squeezed noise.
    pub(crate) fn squeeze_anisotropy(&self) -> f64 {
        if self.squeeze_r == 0.0 {
            0.0
        } else {
            (2.0 * self.thermal_occupation() + 1.0) * (2.0 * self.squeeze_r).sinh()
        }
    }

    /// Total rate `sum_i g_{i,alpha}^2` with which this bath is coupled.
    pub fn total_rate(&self) -> f64 {
        self.couplings.iter().map(|g| g * g).sum()
    }
}

/// Full machine description: oscillators, symmetric beam-splitter couplings and baths.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    oscillators: Vec<OscillatorSpec>,
    lambda: DMatrix<f64>,
    baths: Vec<BathSpec>,
}

impl NetworkSpec {
    /// Builds a validated network. An asymmetric `lambda` is rejected rather than symmetrized.
    pub fn new(
        oscillators: Vec<OscillatorSpec>,
        lambda: DMatrix<f64>,
        baths: Vec<BathSpec>,
    ) -> Result<Self, ModelError> {
        let n = oscillators.len();
        if n == 0 {
            return Err(ModelError::Empty);
        }
        for (index, osc) in oscillators.iter().enumerate() {
            osc.validate()
                .map_err(|reason| ModelError::InvalidOscillator { index, reason })?;
        }
        if lambda.nrows() != n || lambda.ncols() != n {
            return Err(ModelError::InvalidCoupling(format!(
                "expected {n}x{n}, got {}x{}",
                lambda.nrows(),
                lambda.ncols()
            )));
        }
        for i in 0..n {
            if lambda[(i, i)] != 0.0 {
                return Err(ModelError::InvalidCoupling(format!(
                    "diagonal entry ({i},{i}) must be zero"
                )));
            }
            for j in 0..n {
                if !lambda[(i, j)].is_finite() {
                    return Err(ModelError::InvalidCoupling(format!("entry ({i},{j}) is not finite")));
                }
                if lambda[(i, j)] != lambda[(j, i)] {
                    return Err(ModelError::InvalidCoupling(format!(
                        "not symmetric: ({i},{j}) = {} but ({j},{i}) = {}",
                        lambda[(i, j)],
                        lambda[(j, i)]
                    )));
                }
            }
        }
        for (index, bath) in baths.iter().enumerate() {
            if bath.couplings.len() != n {
                return Err(ModelError::InvalidBath {
                    index,
                    reason: format!("expected {n} couplings, got {}", bath.couplings.len()),
                });
            }
            bath.validate().map_err(|reason| ModelError::InvalidBath { index, reason })?;
        }
        Ok(Self { oscillators, lambda, baths })
    }

    /// One oscillator coupled to the given baths.
    pub fn single(osc: OscillatorSpec, baths: Vec<BathSpec>) -> Result<Self, ModelError> {
        Self::new(vec![osc], DMatrix::zeros(1, 1), baths)
    }

    /// Open chain with equal nearest-neighbour coupling `lambda`.
    pub fn chain(
        oscillators: Vec<OscillatorSpec>,
        lambda: f64,
        baths: Vec<BathSpec>,
    ) -> Result<Self, ModelError> {
        let n = oscillators.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 1..n {
            m[(i - 1, i)] = lambda;
            m[(i, i - 1)] = lambda;
        }
        Self::new(oscillators, m, baths)
    }

    pub fn oscillators(&self) -> &[OscillatorSpec] {
        &self.oscillators
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn baths(&self) -> &[BathSpec] {
        &self.baths
    }

    pub fn n_oscillators(&self) -> usize {
        self.oscillators.len()
    }

    pub fn n_baths(&self) -> usize {
        self.baths.len()
    }

    /// Dimension `2N` of the quadrature vector.
    pub fn dim(&self) -> usize {
        2 * self.oscillators.len()
    }

    pub fn is_static(&self) -> bool {
        self.oscillators.iter().all(OscillatorSpec::is_static)
    }

    /// Damping rate `gamma_i = sum_alpha g_{i,alpha}^2` of oscillator `i`.
    pub fn damping(&self, i: usize) -> f64 {
        self.baths.iter().map(|b| b.couplings[i] * b.couplings[i]).sum()
    }

    /// `(1/2) sum_alpha g^2 (2 n_alpha^eff + 1)`, the isotropic noise weight of oscillator `i`.
    pub(crate) fn noise_weight(&self, i: usize) -> f64 {
        0.5 * self
            .baths
            .iter()
            .map(|b| b.couplings[i] * b.couplings[i] * (2.0 * b.effective_occupation() + 1.0))
            .sum::<f64>()
    }

    /// `(1/2) sum_alpha g^2 (2 n_alpha + 1) sinh(2 r_alpha)` for oscillator `i`.
    pub(crate) fn noise_anisotropy(&self, i: usize) -> f64 {
        0.5 * self
            .baths
            .iter()
            .map(|b| b.couplings[i] * b.couplings[i] * b.squeeze_anisotropy())
            .sum::<f64>()
    }

    /// Instantaneous frequencies and derivatives of every oscillator.
    pub fn frequencies(&self, t: f64) -> Vec<(f64, f64)> {
        self.oscillators.iter().map(|o| drive_frequency(o, t)).collect()
    }

    /// Upper bound on normal-mode frequencies: `max_i (omega0_i + delta_omega_i + sum_j |lambda_ij|)`.
    pub fn max_mode_frequency(&self) -> f64 {
        (0..self.n_oscillators())
            .map(|i| {
                self.oscillators[i].max_frequency()
                    + self.lambda.row(i).iter().map(|l| l.abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Returns a copy with every oscillator's driving removed (`theta = 0`, `delta_omega = 0`).
    pub fn undriven(&self) -> Self {
        let mut out = self.clone();
        for o in &mut out.oscillators {
            o.delta_omega = 0.0;
            o.theta = 0.0;
        }
        out
    }
}

/// Matrices defining the Gaussian dynamics at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSet {
    /// `A_S(t)` with `H_S = (1/2) R^T A_S R`.
    pub a_s: DMatrix<f64>,
    /// `D(t) = S_N A_S(t) - K`.
    pub drift: DMatrix<f64>,
    /// Noise matrix `T(t)`.
    pub noise: DMatrix<f64>,
    /// Diagonal dissipation matrix `K`.
    pub dissipation: DMatrix<f64>,
}

/// Writes `A_S(t)` into `a` (which must be `2N x 2N`).
pub(crate) fn fill_hamiltonian(net: &NetworkSpec, omegas: &[f64], a: &mut DMatrix<f64>) {
    let n = net.n_oscillators();
    a.fill(0.0);
    for i in 0..n {
        a[(2 * i, 2 * i)] = omegas[i] * omegas[i];
        a[(2 * i + 1, 2 * i + 1)] = 1.0;
        for j in 0..n {
            let l = net.lambda[(i, j)];
            if i != j && l != 0.0 {
                let root = (omegas[i] * omegas[j]).sqrt();
                a[(2 * i, 2 * j)] = l * root;
                a[(2 * i + 1, 2 * j + 1)] = l / root;
            }
        }
    }
}

/// Builds `A_S`, `D`, `T` and `K` at time `t`.
///
/// Squeezing of a bath enters the noise as `(1/2) g^2 (2n+1) diag(e^{2r}/omega, e^{-2r} omega)`,
/// whose trace-weighted part is the effective occupation `n^eff`.
pub fn build_matrices(net: &NetworkSpec, t: f64) -> Result<MatrixSet, ModelError> {
    let dim = net.dim();
    let omegas: Vec<f64> = net.frequencies(t).into_iter().map(|(w, _)| w).collect();
    let mut a_s = DMatrix::zeros(dim, dim);
    fill_hamiltonian(net, &omegas, &mut a_s);

    let mut dissipation = DMatrix::zeros(dim, dim);
    let mut noise = DMatrix::zeros(dim, dim);
    for (i, &w) in omegas.iter().enumerate() {
        let k = 0.5 * net.damping(i);
        dissipation[(2 * i, 2 * i)] = k;
        dissipation[(2 * i + 1, 2 * i + 1)] = k;
        let (iso, aniso) = (net.noise_weight(i), net.noise_anisotropy(i));
        noise[(2 * i, 2 * i)] = (iso + aniso) / w;
        noise[(2 * i + 1, 2 * i + 1)] = (iso - aniso) * w;
    }

    let mut drift = -&dissipation;
    for i in 0..net.n_oscillators() {
        for c in 0..dim {
            drift[(2 * i, c)] += a_s[(2 * i + 1, c)];
            drift[(2 * i + 1, c)] -= a_s[(2 * i, c)];
        }
    }

    for (name, m) in [("A_S", &a_s), ("D", &drift), ("T", &noise)] {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { matrix: name, t });
        }
    }
    Ok(MatrixSet { a_s, drift, noise, dissipation })
}

/// Mean excitation number `<a_i^dagger(t) a_i(t)>` of oscillator `i`.
pub fn excitation_number(state: &CovarianceState, net: &NetworkSpec, i: usize) -> f64 {
    let (w, _) = drive_frequency(&net.oscillators[i], state.t);
    let (x, p) = (state.mean[2 * i], state.mean[2 * i + 1]);
    let sxx = state.sigma[(2 * i, 2 * i)];
    let spp = state.sigma[(2 * i + 1, 2 * i + 1)];
    (spp + w * w * sxx + p * p + w * w * x * x) / (2.0 * w) - 0.5
}
