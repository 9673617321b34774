//! Brute-force check of the Gaussian machinery: one driven oscillator evolved as a density
//! matrix in a truncated number basis.
//!
//! The basis belongs to a fixed reference frequency `omega_r`. The instantaneous ladder
//! operator is `a(t) = mu b + nu b^dagger` with
//! `mu, nu = (sqrt(omega/omega_r) +- sqrt(omega_r/omega)) / 2`, so all operators are real
//! matrices and `rho` is stored as separate real and imaginary parts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::{dt_max, initial_gibbs, CovarianceState, DynamicsError, Stepper};
use crate::model::{drive_frequency, excitation_number, NetworkSpec, OscillatorSpec};
use crate::thermo::heat_current;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("top-level population {population:e} exceeds threshold at truncation {d}; try d = {suggested}")]
    Truncation { d: usize, population: f64, suggested: usize },
    #[error("Fock oracle handles a single oscillator, got {0}")]
    NotSingleOscillator(usize),
    #[error("density matrix became non-finite at t = {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Largest population allowed in the highest retained level.
pub const TOP_POPULATION_TOL: f64 = 1e-8;

/// Default truncation.
pub const DEFAULT_DIM: usize = 40;

/// Density matrix `rho = re + i im` in the reference number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub t: f64,
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl FockState {
    /// Thermal state with occupation `nbar` of the reference oscillator.
    pub fn thermal(d: usize, nbar: f64, t: f64) -> Self {
        let q = nbar / (1.0 + nbar);
        let mut p: Vec<f64> = (0..d).map(|k| q.powi(k as i32)).collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= z);
        Self { t, re: DMatrix::from_diagonal(&DVector::from_vec(p)), im: DMatrix::zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.re.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.re.trace()
    }

    pub fn top_population(&self) -> f64 {
        let d = self.dim();
        self.re[(d - 1, d - 1)]
    }

    pub fn rho(&self) -> DMatrix<Complex64> {
        self.re.zip_map(&self.im, Complex64::new)
    }

    /// Copy embedded in a larger basis (zero-padded).
    pub fn enlarged(&self, d: usize) -> Self {
        let mut re = DMatrix::zeros(d, d);
        let mut im = DMatrix::zeros(d, d);
        let n = self.dim().min(d);
        re.view_mut((0, 0), (n, n)).copy_from(&self.re.view((0, 0), (n, n)));
        im.view_mut((0, 0), (n, n)).copy_from(&self.im.view((0, 0), (n, n)));
        Self { t: self.t, re, im }
    }
}

/// Combined bath seen by the oscillator.
///
/// `squeeze_m` is the rate-weighted `-(2n + 1) sinh r cosh r`, the coefficient of the
/// `a^dagger rho a^dagger` and `a rho a` terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockBath {
    pub gamma: f64,
    pub nbar: f64,
    pub squeeze_m: f64,
}

impl FockBath {
    pub fn thermal(gamma: f64, nbar: f64) -> Self {
        Self { gamma, nbar, squeeze_m: 0.0 }
    }

    pub fn from_network(net: &NetworkSpec) -> Result<Self, FockError> {
        if net.n_oscillators() != 1 {
            return Err(FockError::NotSingleOscillator(net.n_oscillators()));
        }
        let gamma = net.damping(0);
        let (mut n, mut m) = (0.0, 0.0);
        for b in net.baths() {
            let g2 = b.couplings[0] * b.couplings[0];
            n += g2 * b.effective_occupation();
            let r = b.squeeze_r;
            m -= g2 * (2.0 * b.thermal_occupation() + 1.0) * r.sinh() * r.cosh();
        }
        if gamma > 0.0 {
            n /= gamma;
            m /= gamma;
        }
        Ok(Self { gamma, nbar: n, squeeze_m: m })
    }
}

/// Ladder-operator products in the truncated reference basis.
struct Ladder {
    b: DMatrix<f64>,
    btb: DMatrix<f64>,
    bbt: DMatrix<f64>,
    bb: DMatrix<f64>,
}

impl Ladder {
    fn new(d: usize) -> Self {
        let mut b = DMatrix::zeros(d, d);
        for k in 1..d {
            b[(k - 1, k)] = (k as f64).sqrt();
        }
        let bt = b.transpose();
        Self { btb: &bt * &b, bbt: &b * &bt, bb: &b * &b, b }
    }
}

/// Operators of the generator frozen at one instant.
struct Frozen {
    a: DMatrix<f64>,
    at: DMatrix<f64>,
    h: DMatrix<f64>,
    g: DMatrix<f64>,
    /// `rho -> a rho f1 + a^T rho f2` collects all jump terms.
    f1: DMatrix<f64>,
    f2: DMatrix<f64>,
}

/// Lindblad integrator for one oscillator.
pub struct FockOracle {
    osc: OscillatorSpec,
    bath: FockBath,
    omega_ref: f64,
    ops: Ladder,
}

impl FockOracle {
    pub fn new(osc: OscillatorSpec, bath: FockBath, omega_ref: f64, d: usize) -> Self {
        Self { osc, bath, omega_ref, ops: Ladder::new(d) }
    }

    pub fn dim(&self) -> usize {
        self.ops.b.nrows()
    }

    fn frozen(&self, t: f64) -> Frozen {
        let (w, _) = drive_frequency(&self.osc, t);
        let wr = self.omega_ref;
        let (s, si) = ((w / wr).sqrt(), (wr / w).sqrt());
        let (mu, nu) = (0.5 * (s + si), 0.5 * (s - si));
        let o = &self.ops;
        let bt = o.b.transpose();
        let btbt = o.bb.transpose();
        let a = &o.b * mu + &bt * nu;
        let at = a.transpose();
        // a^T a, a a^T, a a (a^T a^T is its transpose).
        let ata = &o.btb * (mu * mu) + (&btbt + &o.bb) * (mu * nu) + &o.bbt * (nu * nu);
        let aat = &o.bbt * (mu * mu) + (&o.bb + &btbt) * (mu * nu) + &o.btb * (nu * nu);
        let aa = &o.bb * (mu * mu) + (&o.bbt + &o.btb) * (mu * nu) + &btbt * (nu * nu);
        // H = (P^2 + omega^2 X^2) / 2 with X = (b + b^T)/sqrt(2 wr), P = i sqrt(wr/2)(b^T - b).
        let sum = &o.bb + &btbt;
        let num = &o.btb + &o.bbt;
        let x2 = (&sum + &num) / (2.0 * wr);
        let p2 = (&num - &sum) * (wr / 2.0);
        let h = (p2 + x2 * (w * w)) * 0.5;
        let FockBath { gamma, nbar, squeeze_m: m } = self.bath;
        let g = (&ata * (nbar + 1.0) + &aat * nbar + (&aa + aa.transpose()) * m) * gamma;
        let f1 = (&at * (nbar + 1.0) + &a * m) * gamma;
        let f2 = (&a * nbar + &at * m) * gamma;
        Frozen { a, at, h, g, f1, f2 }
    }

    /// `d rho/dt = -i[H, rho] + jumps - {G, rho}/2` applied to `(re, im)`.
    fn generator(fz: &Frozen, re: &DMatrix<f64>, im: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        // re is symmetric and im antisymmetric, so X H = (H X)^T up to sign.
        let hr = &fz.h * re;
        let hi = &fz.h * im;
        let gr = &fz.g * re;
        let gi = &fz.g * im;
        let jump = |x: &DMatrix<f64>| &fz.a * (x * &fz.f1) + &fz.at * (x * &fz.f2);
        // -i(H rho - rho H) for rho = re + i im.
        let mut d_re = &hi + hi.transpose();
        let mut d_im = -(&hr - hr.transpose());
        d_re += jump(re) - (&gr + gr.transpose()) * 0.5;
        d_im += jump(im) - (&gi - gi.transpose()) * 0.5;
        (d_re, d_im)
    }

    /// Single RK4 step, followed by Hermitian symmetrisation.
    pub fn step(&self, state: &FockState, dt: f64) -> Result<FockState, FockError> {
        let t = state.t;
        let f0 = self.frozen(t);
        let fm = self.frozen(t + 0.5 * dt);
        let f1 = self.frozen(t + dt);
        let (k1r, k1i) = Self::generator(&f0, &state.re, &state.im);
        let (k2r, k2i) = Self::generator(&fm, &(&state.re + &k1r * (0.5 * dt)), &(&state.im + &k1i * (0.5 * dt)));
        let (k3r, k3i) = Self::generator(&fm, &(&state.re + &k2r * (0.5 * dt)), &(&state.im + &k2i * (0.5 * dt)));
        let (k4r, k4i) = Self::generator(&f1, &(&state.re + &k3r * dt), &(&state.im + &k3i * dt));
        let w = dt / 6.0;
        let re = &state.re + (k1r + (k2r + k3r) * 2.0 + k4r) * w;
        let im = &state.im + (k1i + (k2i + k3i) * 2.0 + k4i) * w;
        let re = (&re + re.transpose()) * 0.5;
        let im = (&im - im.transpose()) * 0.5;
        if re.iter().chain(im.iter()).any(|v| !v.is_finite()) {
            return Err(FockError::NonFinite(t + dt));
        }
        let out = FockState { t: t + dt, re, im };
        let population = out.top_population();
        if population > TOP_POPULATION_TOL {
            let d = self.dim();
            return Err(FockError::Truncation { d, population, suggested: 2 * d });
        }
        Ok(out)
    }
}

/// One RK4 step of the Lindblad equation for `osc` coupled to `bath`.
pub fn lindblad_step(
    state: &FockState,
    osc: &OscillatorSpec,
    bath: FockBath,
    omega_ref: f64,
    dt: f64,
) -> Result<FockState, FockError> {
    FockOracle::new(*osc, bath, omega_ref, state.dim()).step(state, dt)
}

fn expect(state: &FockState, op: &DMatrix<f64>) -> Complex64 {
    // tr(rho O) for real O.
    let re = state.re.component_mul(&op.transpose()).sum();
    let im = state.im.component_mul(&op.transpose()).sum();
    Complex64::new(re, im)
}

/// First moments `(<x>, <p>)` and covariance of the state in the reference basis.
pub fn moments(state: &FockState, omega_ref: f64) -> (DVector<f64>, DMatrix<f64>) {
    let l = Ladder::new(state.dim());
    let b1 = expect(state, &l.b);
    let b2 = expect(state, &l.bb);
    let n = expect(state, &l.btb).re;
    let x = (2.0 / omega_ref).sqrt() * b1.re;
    let p = (2.0 * omega_ref).sqrt() * b1.im;
    let xx = (2.0 * b2.re + 2.0 * n + 1.0) / (2.0 * omega_ref);
    let pp = omega_ref / 2.0 * (2.0 * n + 1.0 - 2.0 * b2.re);
    let xp = b2.im;
    let sigma = DMatrix::from_row_slice(2, 2, &[xx - x * x, xp - x * p, xp - x * p, pp - p * p]);
    (DVector::from_vec(vec![x, p]), sigma)
}

/// Fourth cumulant of position, `<(x - <x>)^4> - 3 sigma_xx^2`; zero for Gaussian states.
pub fn x4_cumulant(state: &FockState, omega_ref: f64) -> f64 {
    let d = state.dim();
    let l = Ladder::new(d);
    let (mean, sigma) = moments(state, omega_ref);
    let x = (&l.b + l.b.transpose()) / (2.0 * omega_ref).sqrt() - DMatrix::identity(d, d) * mean[0];
    let x2 = &x * &x;
    expect(state, &(&x2 * &x2)).re - 3.0 * sigma[(0, 0)].powi(2)
}

/// Worst-case deviations between the oracle and the Gaussian integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub truncation: usize,
    pub samples: usize,
    pub max_dev_occupation: f64,
    pub max_dev_sxx: f64,
    pub max_dev_sxp: f64,
    pub max_dev_spp: f64,
    /// Largest heat-current deviation relative to the largest heat current magnitude.
    pub max_rel_dev_heat: f64,
    pub max_abs_cumulant: f64,
    pub max_trace_error: f64,
}

/// Integrates `net` (one oscillator) from the Gibbs state at `beta_init` to `t_end` with
/// both integrators on the same step, comparing every `stride`-th step. The truncation
/// starts at `d` and doubles (up to `16 d`) whenever the top level fills.
pub fn compare_with_gaussian(
    net: &NetworkSpec,
    beta_init: f64,
    t_end: f64,
    d: usize,
    stride: usize,
) -> Result<OracleComparison, FockError> {
    let mut d = d.max(4);
    loop {
        match compare_at(net, beta_init, t_end, d, stride.max(1)) {
            Err(FockError::Truncation { suggested, .. }) if suggested <= 16 * d => d = suggested,
            other => return other,
        }
    }
}

fn compare_at(
    net: &NetworkSpec,
    beta_init: f64,
    t_end: f64,
    d: usize,
    stride: usize,
) -> Result<OracleComparison, FockError> {
    let bath = FockBath::from_network(net)?;
    let osc = net.oscillators()[0];
    let omega_ref = drive_frequency(&osc, 0.0).0;
    let oracle = FockOracle::new(osc, bath, omega_ref, d);
    let gauss0 = initial_gibbs(net, beta_init)?;
    let n0 = 1.0 / (beta_init * omega_ref).exp_m1();
    let mut fock = FockState::thermal(d, n0, 0.0);

    let n_steps = (t_end / dt_max(net)).ceil() as usize;
    let dt = t_end / n_steps as f64;
    let mut stepper = Stepper::new(net);
    let mut mean = gauss0.mean.as_slice().to_vec();
    let mut sigma = gauss0.sigma.transpose().as_slice().to_vec();

    let mut cmp = OracleComparison {
        truncation: d,
        samples: 0,
        max_dev_occupation: 0.0,
        max_dev_sxx: 0.0,
        max_dev_sxp: 0.0,
        max_dev_spp: 0.0,
        max_rel_dev_heat: 0.0,
        max_abs_cumulant: 0.0,
        max_trace_error: 0.0,
    };
    let mut max_heat = 0.0f64;
    let mut max_heat_dev = 0.0f64;
    for k in 0..=n_steps {
        if k > 0 {
            stepper.advance((k - 1) as f64 * dt, dt, &mut mean, &mut sigma);
            fock = oracle.step(&fock, dt)?;
        }
        if k % stride != 0 && k != n_steps {
            continue;
        }
        let t = k as f64 * dt;
        let g = CovarianceState::new(t, DVector::from_column_slice(&mean), DMatrix::from_row_slice(2, 2, &sigma));
        let (fm, fs) = moments(&fock, omega_ref);
        let f = CovarianceState::new(t, fm, fs);
        cmp.samples += 1;
        cmp.max_dev_occupation = cmp
            .max_dev_occupation
            .max((excitation_number(&g, net, 0) - excitation_number(&f, net, 0)).abs());
        cmp.max_dev_sxx = cmp.max_dev_sxx.max((g.sigma[(0, 0)] - f.sigma[(0, 0)]).abs());
        cmp.max_dev_sxp = cmp.max_dev_sxp.max((g.sigma[(0, 1)] - f.sigma[(0, 1)]).abs());
        cmp.max_dev_spp = cmp.max_dev_spp.max((g.sigma[(1, 1)] - f.sigma[(1, 1)]).abs());
        for a in 0..net.n_baths() {
            let (qg, qf) = (heat_current(&g, net, a).unwrap_or(0.0), heat_current(&f, net, a).unwrap_or(0.0));
            max_heat = max_heat.max(qg.abs());
            max_heat_dev = max_heat_dev.max((qg - qf).abs());
        }
        cmp.max_abs_cumulant = cmp.max_abs_cumulant.max(x4_cumulant(&fock, omega_ref).abs());
        cmp.max_trace_error = cmp.max_trace_error.max((fock.trace() - 1.0).abs());
    }
    cmp.max_rel_dev_heat = if max_heat > 0.0 { max_heat_dev / max_heat } else { max_heat_dev };
    Ok(cmp)
}
