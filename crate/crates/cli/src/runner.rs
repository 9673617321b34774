//! Executes scenarios: single runs, sweeps over a worker pool, and oracle comparisons.

use dqho_core::dynamics::{dt_max, evolve, find_limit_cycle, initial_gibbs, DynamicsError, Trajectory};
use dqho_core::fock_oracle::{compare_with_gaussian, FockError, OracleComparison};
use dqho_core::squeeze_entangle::log_negativity;
use dqho_core::thermo::{cycle_average_with_tol, reference_metrics, CycleSummary, ReferenceMetrics, ThermoError};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, RunMode, ScenarioConfig};

/// Samples per evolve run when no stride is configured.
const EVOLVE_SAMPLES: usize = 2000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Physicality(String),
    #[error("{0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::NotConverged(_) => 3,
            RunError::Physicality(_) => 4,
            RunError::Io(_) => 1,
        }
    }
}

impl From<DynamicsError> for RunError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Unphysical { .. } | DynamicsError::NonFinite { .. } => RunError::Physicality(e.to_string()),
            DynamicsError::NotConverged { .. } | DynamicsError::NoSteadyState => RunError::NotConverged(e.to_string()),
            other => RunError::Config(ConfigError::Invalid(other.to_string())),
        }
    }
}

impl From<ThermoError> for RunError {
    fn from(e: ThermoError) -> Self {
        match e {
            ThermoError::NotPeriodic(_) => RunError::NotConverged(e.to_string()),
            other => RunError::Config(ConfigError::Invalid(other.to_string())),
        }
    }
}

impl From<FockError> for RunError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::Dynamics(d) => d.into(),
            FockError::NonFinite(_) => RunError::Physicality(e.to_string()),
            FockError::Truncation { .. } => RunError::NotConverged(e.to_string()),
            other => RunError::Config(ConfigError::Invalid(other.to_string())),
        }
    }
}

/// A simulated trajectory with its convergence diagnostics.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub trajectory: Trajectory,
    /// Periods integrated before the limit cycle was accepted (limit-cycle mode only).
    pub periods: Option<usize>,
    pub residual: Option<f64>,
}

impl RunResult {
    pub fn max_first_law_residual(&self) -> f64 {
        self.trajectory
            .samples
            .iter()
            .map(|s| s.thermo.relative_first_law_residual())
            .fold(0.0, f64::max)
    }

    pub fn min_symplectic_eigenvalue(&self) -> f64 {
        self.trajectory
            .samples
            .iter()
            .map(|s| s.state.min_symplectic_eigenvalue())
            .fold(f64::INFINITY, f64::min)
    }

    /// Logarithmic negativity of every sample, for two-oscillator networks.
    pub fn log_negativity(&self) -> Option<Vec<f64>> {
        if self.trajectory.net.n_oscillators() != 2 {
            return None;
        }
        self.trajectory.samples.iter().map(|s| log_negativity(&s.state).ok()).collect()
    }
}

/// Runs one scenario (its sweep axes are ignored).
pub fn run(cfg: &ScenarioConfig) -> Result<RunResult, RunError> {
    let net = cfg.network()?;
    let init = initial_gibbs(&net, cfg.beta_init())?;
    match cfg.run.mode {
        RunMode::LimitCycle => {
            let lc = find_limit_cycle(&net, &init, &cfg.limit_cycle_options())?;
            Ok(RunResult { trajectory: lc.trajectory, periods: Some(lc.periods), residual: Some(lc.residual) })
        }
        RunMode::Evolve => {
            let t_end = cfg.t_end().ok_or_else(|| ConfigError::Invalid("run.t_end is required".into()))?;
            let dt = cfg.run.dt_factor * dt_max(&net);
            let n_steps = (t_end / dt).ceil() as usize;
            let stride = cfg.run.stride.unwrap_or((n_steps / EVOLVE_SAMPLES).max(1));
            let trajectory = evolve(&init, &net, t_end, dt, stride)?;
            Ok(RunResult { trajectory, periods: None, residual: None })
        }
    }
}

/// Cycle summary of one grid point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub values: Vec<f64>,
    pub summary: CycleSummary,
    pub metrics: Option<ReferenceMetrics>,
    /// `(max, mean)` of the logarithmic negativity over the cycle, two-oscillator networks only.
    pub log_negativity: Option<(f64, f64)>,
    pub periods: usize,
    pub residual: f64,
    pub min_symplectic_eigenvalue: f64,
}

/// Converges the limit cycle at one scenario and summarises it.
pub fn summarise(cfg: &ScenarioConfig, values: Vec<f64>) -> Result<PointResult, RunError> {
    let mut cfg = cfg.clone();
    cfg.run.mode = RunMode::LimitCycle;
    let res = run(&cfg)?;
    let tol = (10.0 * cfg.run.rel_tol).max(dqho_core::thermo::PERIODICITY_TOL);
    let summary = cycle_average_with_tol(&res.trajectory, tol)?;
    let metrics = reference_metrics(&res.trajectory.net).ok();
    let log_negativity = res.log_negativity().map(|en| {
        let body = if en.len() > 1 { &en[..en.len() - 1] } else { &en[..] };
        let max = body.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (max, body.iter().sum::<f64>() / body.len() as f64)
    });
    Ok(PointResult {
        values,
        summary,
        metrics,
        log_negativity,
        periods: res.periods.unwrap_or(0),
        residual: res.residual.unwrap_or(0.0),
        min_symplectic_eigenvalue: res.min_symplectic_eigenvalue(),
    })
}

/// Outcome of every grid point, in grid order.
pub type SweepResult = Vec<(Vec<f64>, Result<PointResult, RunError>)>;

/// Evaluates every grid point on a pool of `workers` threads (0 = all cores).
///
/// Each point is independent and single-threaded; results come back in grid order.
pub fn sweep(cfg: &ScenarioConfig, workers: usize) -> Result<SweepResult, RunError> {
    let points = cfg.sweep_points()?;
    let scenarios: Vec<ScenarioConfig> = points.iter().map(|p| cfg.at_point(p)).collect::<Result<_, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Io(e.to_string()))?;
    let results: Vec<Result<PointResult, RunError>> = pool.install(|| {
        scenarios
            .par_iter()
            .zip(points.par_iter())
            .map(|(s, p)| summarise(s, p.clone()))
            .collect()
    });
    Ok(points.into_iter().zip(results).collect())
}

/// First failure in grid order, if any.
pub fn first_failure(results: &SweepResult) -> Option<&RunError> {
    results.iter().find_map(|(_, r)| r.as_ref().err())
}

/// Compares the Fock-space oracle with the Gaussian integrator over `periods` driving periods
/// (or `periods` time units for an undriven oscillator).
pub fn oracle(cfg: &ScenarioConfig, periods: f64, d: usize) -> Result<OracleComparison, RunError> {
    let net = cfg.network()?;
    let period = dqho_core::dynamics::common_period(&net)?.unwrap_or(1.0);
    let t_end = periods * period;
    let n_steps = (t_end / dt_max(&net)).ceil() as usize;
    Ok(compare_with_gaussian(&net, cfg.beta_init(), t_end, d, (n_steps / 1000).max(1))?)
}
