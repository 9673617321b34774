//! Scenario files: a TOML description of the network, run controls and sweep axes.
//!
//! Physical quantities are given in units of `reference_frequency` (`omega0`): frequencies and
//! `lambda` scale with `omega0`, inverse temperatures with `1/omega0` and couplings with
//! `sqrt(omega0)`. Dimensionless quantities (`squeeze_r`) are unscaled.

use std::path::Path;

use dqho_core::dynamics::LimitCycleOptions;
use dqho_core::{BathSpec, NetworkSpec, OscillatorSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown parameter path `{0}`")]
    UnknownPath(String),
}

fn default_reference() -> f64 {
    1.0
}

fn is_default_reference(v: &f64) -> bool {
    *v == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorConfig {
    pub omega0: f64,
    #[serde(default)]
    pub delta_omega: f64,
    #[serde(default)]
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub omega: f64,
    pub beta: f64,
    #[serde(default)]
    pub squeeze_r: f64,
    pub couplings: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Converge to the limit cycle and record one period.
    #[default]
    LimitCycle,
    /// Integrate from the initial Gibbs state up to `t_end`.
    Evolve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default = "RunConfig::default_dt_factor")]
    pub dt_factor: f64,
    #[serde(default = "RunConfig::default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "RunConfig::default_max_periods")]
    pub max_periods: usize,
    /// Sample every `stride`-th step; omitted means about 1000 samples per period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    /// End time for `mode = "evolve"`, in units of `1/omega0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Inverse temperature of the initial Gibbs state; defaults to the coldest bath.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_init: Option<f64>,
}

impl RunConfig {
    fn default_dt_factor() -> f64 {
        1.0
    }
    fn default_rel_tol() -> f64 {
        1e-8
    }
    fn default_max_periods() -> usize {
        10_000
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: RunMode::default(),
            dt_factor: Self::default_dt_factor(),
            rel_tol: Self::default_rel_tol(),
            max_periods: Self::default_max_periods(),
            stride: None,
            t_end: None,
            beta_init: None,
        }
    }
}

/// One sweep axis: either `points` values evenly spaced over `[min, max]`, or explicit `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl SweepAxis {
    pub fn linspace(path: &str, min: f64, max: f64, points: usize) -> Self {
        Self { path: path.into(), min: Some(min), max: Some(max), points: Some(points), values: None }
    }

    pub fn grid(&self) -> Result<Vec<f64>, ConfigError> {
        if let Some(v) = &self.values {
            if v.is_empty() {
                return Err(ConfigError::Invalid(format!("sweep `{}` has no values", self.path)));
            }
            return Ok(v.clone());
        }
        match (self.min, self.max, self.points) {
            (Some(lo), Some(hi), Some(n)) if n >= 1 => {
                if n == 1 {
                    return Ok(vec![lo]);
                }
                let step = (hi - lo) / (n - 1) as f64;
                Ok((0..n).map(|k| if k == n - 1 { hi } else { lo + step * k as f64 }).collect())
            }
            _ => Err(ConfigError::Invalid(format!(
                "sweep `{}` needs `values` or all of `min`, `max`, `points`",
                self.path
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_reference", skip_serializing_if = "is_default_reference")]
    pub reference_frequency: f64,
    pub oscillators: Vec<OscillatorConfig>,
    /// Full symmetric coupling matrix; mutually exclusive with `chain_lambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<Vec<f64>>>,
    /// Equal nearest-neighbour coupling along the oscillator list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_lambda: Option<f64>,
    pub baths: Vec<BathConfig>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// Checks the run controls and builds the network once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.reference_frequency > 0.0 && self.reference_frequency.is_finite()) {
            return bad(format!("reference_frequency must be positive, got {}", self.reference_frequency));
        }
        let r = &self.run;
        if !(r.dt_factor > 0.0 && r.dt_factor <= 1.0) {
            return bad(format!("run.dt_factor must lie in (0, 1], got {}", r.dt_factor));
        }
        if !(r.rel_tol > 0.0) {
            return bad(format!("run.rel_tol must be positive, got {}", r.rel_tol));
        }
        if r.max_periods == 0 {
            return bad("run.max_periods must be at least 1".into());
        }
        if r.stride == Some(0) {
            return bad("run.stride must be at least 1".into());
        }
        if let Some(b) = r.beta_init {
            if !(b > 0.0) {
                return bad(format!("run.beta_init must be positive, got {b}"));
            }
        }
        match (r.mode, r.t_end) {
            (RunMode::Evolve, None) => return bad("run.mode = \"evolve\" needs run.t_end".into()),
            (RunMode::Evolve, Some(t)) if !(t > 0.0) => return bad(format!("run.t_end must be positive, got {t}")),
            _ => {}
        }
        if self.lambda.is_some() && self.chain_lambda.is_some() {
            return bad("give either `lambda` or `chain_lambda`, not both".into());
        }
        for axis in &self.sweep {
            axis.grid()?;
            let mut probe = self.clone();
            probe.set_path(&axis.path, 1.0)?;
        }
        self.network()?;
        Ok(())
    }

    pub fn limit_cycle_options(&self) -> LimitCycleOptions {
        LimitCycleOptions {
            dt_factor: self.run.dt_factor,
            rel_tol: self.run.rel_tol,
            max_periods: self.run.max_periods,
            stride: self.run.stride,
        }
    }

    /// Inverse temperature of the initial state, in absolute units.
    pub fn beta_init(&self) -> f64 {
        let b = self
            .run
            .beta_init
            .unwrap_or_else(|| self.baths.iter().map(|b| b.beta).fold(0.0, f64::max));
        b / self.reference_frequency
    }

    /// End time for evolve mode, in absolute units.
    pub fn t_end(&self) -> Option<f64> {
        self.run.t_end.map(|t| t / self.reference_frequency)
    }

    /// Network in absolute units.
    pub fn network(&self) -> Result<NetworkSpec, ConfigError> {
        let w0 = self.reference_frequency;
        let n = self.oscillators.len();
        let oscillators: Vec<OscillatorSpec> = self
            .oscillators
            .iter()
            .map(|o| OscillatorSpec::new(o.omega0 * w0, o.delta_omega * w0, o.theta * w0))
            .collect();
        let baths: Vec<BathSpec> = self
            .baths
            .iter()
            .map(|b| {
                BathSpec::new(b.omega * w0, b.beta / w0, b.couplings.iter().map(|g| g * w0.sqrt()).collect())
                    .with_squeezing(b.squeeze_r)
            })
            .collect();
        let invalid = |e: dqho_core::ModelError| ConfigError::Invalid(e.to_string());
        if let Some(l) = self.chain_lambda {
            return NetworkSpec::chain(oscillators, l * w0, baths).map_err(invalid);
        }
        let mut lambda = nalgebra::DMatrix::zeros(n, n);
        if let Some(rows) = &self.lambda {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(ConfigError::Invalid(format!("lambda must be a {n}x{n} matrix")));
            }
            for (i, row) in rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    lambda[(i, j)] = v * w0;
                }
            }
        }
        NetworkSpec::new(oscillators, lambda, baths).map_err(invalid)
    }

    /// Sets the parameter at a dotted path such as `baths.1.omega`, `oscillators.*.theta`,
    /// `lambda.0.1` (sets both symmetric entries) or `baths.0.couplings.1`.
    pub fn set_path(&mut self, path: &str, value: f64) -> Result<(), ConfigError> {
        let unknown = || ConfigError::UnknownPath(path.to_string());
        let parts: Vec<&str> = path.split('.').collect();
        let index = |s: &str, len: usize| -> Result<Vec<usize>, ConfigError> {
            if s == "*" {
                return Ok((0..len).collect());
            }
            let i: usize = s.parse().map_err(|_| unknown())?;
            if i >= len {
                return Err(unknown());
            }
            Ok(vec![i])
        };
        match parts.as_slice() {
            ["reference_frequency"] => self.reference_frequency = value,
            ["chain_lambda"] => self.chain_lambda = Some(value),
            ["run", "beta_init"] => self.run.beta_init = Some(value),
            ["run", "t_end"] => self.run.t_end = Some(value),
            ["oscillators", i, field] => {
                for k in index(i, self.oscillators.len())? {
                    let o = &mut self.oscillators[k];
                    match *field {
                        "omega0" => o.omega0 = value,
                        "delta_omega" => o.delta_omega = value,
                        "theta" => o.theta = value,
                        _ => return Err(unknown()),
                    }
                }
            }
            ["baths", i, field] => {
                for k in index(i, self.baths.len())? {
                    let b = &mut self.baths[k];
                    match *field {
                        "omega" => b.omega = value,
                        "beta" => b.beta = value,
                        "squeeze_r" => b.squeeze_r = value,
                        _ => return Err(unknown()),
                    }
                }
            }
            ["baths", i, "couplings", j] => {
                for k in index(i, self.baths.len())? {
                    let n = self.baths[k].couplings.len();
                    for m in index(j, n)? {
                        self.baths[k].couplings[m] = value;
                    }
                }
            }
            ["lambda", i, j] => {
                let n = self.oscillators.len();
                let (is, js) = (index(i, n)?, index(j, n)?);
                if self.chain_lambda.is_some() {
                    return Err(ConfigError::Invalid("cannot set lambda entries of a chain_lambda scenario".into()));
                }
                let m = self.lambda.get_or_insert_with(|| vec![vec![0.0; n]; n]);
                for &a in &is {
                    for &b in &js {
                        if a != b {
                            m[a][b] = value;
                            m[b][a] = value;
                        }
                    }
                }
            }
            _ => return Err(unknown()),
        }
        Ok(())
    }

    /// All grid points of the sweep in row-major order (first axis slowest).
    pub fn sweep_points(&self) -> Result<Vec<Vec<f64>>, ConfigError> {
        let grids: Vec<Vec<f64>> = self.sweep.iter().map(SweepAxis::grid).collect::<Result<_, _>>()?;
        let mut points = vec![Vec::new()];
        for g in &grids {
            points = points
                .into_iter()
                .flat_map(|p| {
                    g.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }

    /// Copy with the sweep axes set to `values` and the sweep itself removed.
    pub fn at_point(&self, values: &[f64]) -> Result<Self, ConfigError> {
        let mut cfg = self.clone();
        for (axis, v) in self.sweep.iter().zip(values) {
            cfg.set_path(&axis.path, *v)?;
        }
        cfg.sweep.clear();
        Ok(cfg)
    }
}
