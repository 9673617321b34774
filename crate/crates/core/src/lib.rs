//! Gaussian simulator for thermal machines built from parametrically driven harmonic
//! oscillators coupled to thermal or squeezed baths.
//!
//! Units are natural (`hbar = k_B = 1`, unit mass). Quadratures are ordered
//! `R = (x_1, p_1, ..., x_N, p_N)`.

pub mod analytic;
pub mod dynamics;
pub mod fock_oracle;
pub mod linalg;
pub mod model;
pub mod squeeze_entangle;
pub mod thermo;

pub use dynamics::{
    dt_max, evolve, find_limit_cycle, initial_gibbs, step, steady_state, CovarianceState, DynamicsError,
    LimitCycle, LimitCycleOptions, Sample, Trajectory,
};
pub use model::{build_matrices, BathSpec, MatrixSet, ModelError, NetworkSpec, OscillatorSpec};
pub use thermo::{cycle_average, CycleSummary, Regime, ThermoRecord};
