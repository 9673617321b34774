//! CSV and sidecar metadata writers.
//!
//! Floats are written as `{:.16e}` (17 significant digits); undefined values are empty cells.

use std::fmt::Write as _;

use dqho_core::fock_oracle::OracleComparison;
use dqho_core::thermo::{bath_labels, cop_instant, efficiency_instant};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::runner::{RunResult, SweepResult};

pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

/// Quadrature label of covariance index `k`: `x1, p1, x2, p2, ...`.
fn quadrature(k: usize) -> String {
    format!("{}{}", if k.is_multiple_of(2) { "x" } else { "p" }, k / 2 + 1)
}

/// Time-series CSV. Covariance entries appear as the upper triangle in row-major order,
/// e.g. `sigma_x1x1, sigma_x1p1, sigma_p1p1` for one oscillator.
pub fn run_csv(res: &RunResult) -> String {
    let traj = &res.trajectory;
    let net = &traj.net;
    let dim = net.dim();
    let labels = bath_labels(net).ok();
    let en = res.log_negativity();

    let mut cols = vec!["t".to_string()];
    for r in 0..dim {
        for c in r..dim {
            cols.push(format!("sigma_{}{}", quadrature(r), quadrature(c)));
        }
    }
    cols.extend((0..net.n_baths()).map(|a| format!("q_dot_{a}")));
    cols.extend(["w_dot", "u", "first_law_residual"].map(String::from));
    if labels.is_some() {
        cols.extend(["eta_instant", "cop_instant"].map(String::from));
    }
    if en.is_some() {
        cols.push("log_negativity".into());
    }

    let mut out = cols.join(",");
    out.push('\n');
    for (k, s) in traj.samples.iter().enumerate() {
        let mut row = vec![fmt_f(s.state.t)];
        for r in 0..dim {
            for c in r..dim {
                row.push(fmt_f(s.state.sigma[(r, c)]));
            }
        }
        row.extend(s.thermo.q_dot.iter().map(|q| fmt_f(*q)));
        row.push(fmt_f(s.thermo.w_dot));
        row.push(fmt_f(s.thermo.u));
        row.push(fmt_f(s.thermo.first_law_residual));
        if let Some(l) = labels {
            row.push(fmt_opt(efficiency_instant(&s.thermo, l)));
            row.push(fmt_opt(cop_instant(&s.thermo, l)));
        }
        if let Some(en) = &en {
            row.push(fmt_f(en[k]));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Column name of a sweep axis: its path with dots replaced by underscores.
fn axis_column(path: &str) -> String {
    path.replace('.', "_").replace('*', "all")
}

/// Summary CSV with one row per grid point, in grid order.
pub fn sweep_csv(cfg: &ScenarioConfig, results: &SweepResult) -> String {
    let two_baths = cfg.baths.len() == 2;
    let two_osc = cfg.oscillators.len() == 2;
    let mut cols: Vec<String> = cfg.sweep.iter().map(|a| axis_column(&a.path)).collect();
    if two_baths {
        cols.extend(["avg_q_c", "avg_q_h"].map(String::from));
    } else {
        cols.extend((0..cfg.baths.len()).map(|a| format!("avg_q_{a}")));
    }
    cols.extend(["avg_w", "regime", "eta", "cop", "eta_instant_mean", "cop_instant_mean"].map(String::from));
    if two_baths {
        cols.extend(["eta_otto", "cop_otto", "eta_carnot", "eta_carnot_eff", "eta_curzon_ahlborn"].map(String::from));
    }
    if two_osc {
        cols.extend(["log_negativity_max", "log_negativity_mean"].map(String::from));
    }
    cols.extend(["periods", "residual", "max_first_law_residual", "status"].map(String::from));
    let width = cols.len();

    let mut out = cols.join(",");
    out.push('\n');
    for (values, res) in results {
        let mut row: Vec<String> = values.iter().map(|v| fmt_f(*v)).collect();
        match res {
            Ok(p) => {
                let s = &p.summary;
                match s.labels {
                    Some(l) if two_baths => {
                        row.push(fmt_f(s.avg_q[l.cold]));
                        row.push(fmt_f(s.avg_q[l.hot]));
                    }
                    _ => row.extend(s.avg_q.iter().map(|q| fmt_f(*q))),
                }
                row.push(fmt_f(s.avg_w));
                row.push(s.regime.to_string());
                row.push(fmt_opt(s.avg_efficiency));
                row.push(fmt_opt(s.avg_cop));
                row.push(fmt_opt(s.instant_efficiency_mean));
                row.push(fmt_opt(s.instant_cop_mean));
                if two_baths {
                    let m = p.metrics;
                    row.push(fmt_opt(m.map(|m| m.eta_otto)));
                    row.push(fmt_opt(m.and_then(|m| m.cop_otto)));
                    row.push(fmt_opt(m.map(|m| m.eta_carnot)));
                    row.push(fmt_opt(m.map(|m| m.eta_carnot_eff)));
                    row.push(fmt_opt(m.map(|m| m.eta_curzon_ahlborn)));
                }
                if two_osc {
                    row.push(fmt_opt(p.log_negativity.map(|e| e.0)));
                    row.push(fmt_opt(p.log_negativity.map(|e| e.1)));
                }
                row.push(p.periods.to_string());
                row.push(fmt_f(p.residual));
                row.push(fmt_f(s.max_first_law_residual));
                row.push("ok".into());
            }
            Err(e) => {
                row.resize(width - 1, String::new());
                row.push(format!("error{}", e.exit_code()));
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn oracle_csv(cmp: &OracleComparison) -> String {
    let mut out = String::from(
        "truncation,samples,max_dev_occupation,max_dev_sxx,max_dev_sxp,max_dev_spp,max_rel_dev_heat,max_abs_cumulant,max_trace_error\n",
    );
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{}",
        cmp.truncation,
        cmp.samples,
        fmt_f(cmp.max_dev_occupation),
        fmt_f(cmp.max_dev_sxx),
        fmt_f(cmp.max_dev_sxp),
        fmt_f(cmp.max_dev_spp),
        fmt_f(cmp.max_rel_dev_heat),
        fmt_f(cmp.max_abs_cumulant),
        fmt_f(cmp.max_trace_error),
    );
    out
}

/// SHA-256 of the normalised scenario text.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    Sha256::digest(cfg.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn base_meta(cfg: &ScenarioConfig, verb: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("verb".into(), json!(verb));
    m.insert("config_sha256".into(), json!(config_hash(cfg)));
    m
}

fn finite(v: f64) -> Value {
    if v.is_finite() { json!(v) } else { Value::Null }
}

pub fn run_meta(cfg: &ScenarioConfig, res: &RunResult) -> String {
    let mut m = base_meta(cfg, "run");
    let t = &res.trajectory;
    m.insert("samples".into(), json!(t.samples.len()));
    m.insert("dt".into(), json!(t.dt));
    m.insert("stride".into(), json!(t.stride));
    m.insert("period".into(), json!(t.period));
    m.insert("periods".into(), json!(res.periods));
    m.insert("residual".into(), json!(res.residual.map(finite)));
    m.insert("max_first_law_residual".into(), finite(res.max_first_law_residual()));
    m.insert("min_symplectic_eigenvalue".into(), finite(res.min_symplectic_eigenvalue()));
    serde_json::to_string_pretty(&Value::Object(m)).expect("json") + "\n"
}

pub fn sweep_meta(cfg: &ScenarioConfig, results: &SweepResult) -> String {
    let mut m = base_meta(cfg, "sweep");
    let points: Vec<Value> = results
        .iter()
        .map(|(values, r)| match r {
            Ok(p) => json!({
                "values": values,
                "status": "ok",
                "periods": p.periods,
                "residual": finite(p.residual),
                "periodicity_residual": finite(p.summary.periodicity_residual),
                "max_first_law_residual": finite(p.summary.max_first_law_residual),
                "min_symplectic_eigenvalue": finite(p.min_symplectic_eigenvalue),
            }),
            Err(e) => json!({ "values": values, "status": "error", "exit_code": e.exit_code(), "message": e.to_string() }),
        })
        .collect();
    m.insert("points".into(), Value::Array(points));
    serde_json::to_string_pretty(&Value::Object(m)).expect("json") + "\n"
}

pub fn oracle_meta(cfg: &ScenarioConfig, periods: f64) -> String {
    let mut m = base_meta(cfg, "oracle");
    m.insert("periods".into(), json!(periods));
    serde_json::to_string_pretty(&Value::Object(m)).expect("json") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::runner;

    #[test]
    fn run_csv_layout() {
        let mut cfg = presets::fig2(std::f64::consts::PI);
        cfg.run.mode = crate::config::RunMode::Evolve;
        cfg.run.t_end = Some(1.0);
        cfg.run.stride = Some(10);
        let res = runner::run(&cfg).unwrap();
        let csv = run_csv(&res);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,sigma_x1x1,sigma_x1p1,sigma_p1p1,q_dot_0,q_dot_1,w_dot,u,first_law_residual,eta_instant,cop_instant"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 11);
        assert_eq!(first[0], "0.0000000000000000e0");
        assert_eq!(csv.lines().count(), res.trajectory.samples.len() + 1);
    }

    #[test]
    fn hash_is_stable() {
        let cfg = presets::fig5();
        assert_eq!(config_hash(&cfg), config_hash(&cfg.clone()));
        assert_eq!(config_hash(&cfg).len(), 64);
        let mut other = cfg.clone();
        other.run.rel_tol = 1e-9;
        assert_ne!(config_hash(&cfg), config_hash(&other));
    }
}
