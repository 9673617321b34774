//! Built-in figure scenarios, all in units of `omega0 = 1`.

use std::f64::consts::{PI, SQRT_2};

use crate::config::{BathConfig, OscillatorConfig, RunConfig, RunMode, ScenarioConfig, SweepAxis};

pub const FIGURES: [&str; 10] =
    ["fig2", "fig4", "fig5", "fig6a", "fig6b", "fig6c", "fig7", "fig8", "fig9a", "fig9b"];

/// Slow modulation frequency used by the quasi-static figures.
pub const THETA_SLOW: f64 = PI / 200.0;

fn osc(omega0: f64, delta_omega: f64, theta: f64) -> OscillatorConfig {
    OscillatorConfig { omega0, delta_omega, theta }
}

fn bath(omega: f64, beta: f64, couplings: Vec<f64>) -> BathConfig {
    BathConfig { omega, beta, squeeze_r: 0.0, couplings }
}

/// Single modulated oscillator between a cold and a hot bath, both with coupling `g`.
pub fn single(theta: f64, g: f64, (beta_c, omega_c): (f64, f64), (beta_h, omega_h): (f64, f64)) -> ScenarioConfig {
    ScenarioConfig {
        reference_frequency: 1.0,
        oscillators: vec![osc(1.0, 0.5, theta)],
        lambda: None,
        chain_lambda: None,
        baths: vec![bath(omega_c, beta_c, vec![g]), bath(omega_h, beta_h, vec![g])],
        run: RunConfig::default(),
        sweep: Vec::new(),
        output: None,
    }
}

fn steps(path: &str, min: f64, max: f64, step: f64) -> SweepAxis {
    let points = ((max - min) / step).round() as usize + 1;
    SweepAxis::linspace(path, min, max, points)
}

pub fn fig2(theta: f64) -> ScenarioConfig {
    single(theta, 0.5f64.sqrt(), (10.0, 0.2), (5.0, 0.5))
}

pub fn fig4() -> ScenarioConfig {
    let mut cfg = single(THETA_SLOW, 0.5f64.sqrt(), (10.0, 0.1), (5.0, 0.1));
    cfg.sweep.push(steps("baths.1.omega", 0.1, 0.4, 0.005));
    cfg
}

pub fn fig5() -> ScenarioConfig {
    single(PI / 20.0, 0.5f64.sqrt(), (10.0, 0.1), (5.0, 2.0))
}

/// Fig. 6 family at modulation frequency `theta`, sweeping the hot-bath frequency.
pub fn fig6(theta: f64) -> ScenarioConfig {
    let mut cfg = single(theta, 0.5, (20.0, 0.05), (10.0, 0.05));
    cfg.sweep.push(steps("baths.1.omega", 0.005, 0.3, 0.005));
    cfg
}

pub fn fig7() -> ScenarioConfig {
    let mut cfg = single(1.0, 0.5, (20.0, 0.05), (10.0, 0.15));
    cfg.sweep.push(steps("oscillators.0.theta", 0.05, 4.0, 0.05));
    cfg
}

pub fn fig8() -> ScenarioConfig {
    let mut cfg = single(THETA_SLOW, 0.5f64.sqrt(), (10.0, 1.0), (5.0, 1.0));
    cfg.baths[1].squeeze_r = 0.3;
    cfg.sweep.push(steps("baths.1.omega", 0.5, 5.0, 0.05));
    cfg
}

/// Two coupled oscillators, each on its own bath, with a squeezed hot bath.
pub fn fig9(driven: bool, r: f64) -> ScenarioConfig {
    let (w1, w2) = (4.07, 0.244);
    let lambda = 1.0;
    let (dw1, dw2, theta) = if driven { (w1 / 10.0, w2 / 10.0, PI * lambda) } else { (0.0, 0.0, 0.0) };
    let mut hot = bath(w2, 40.7, vec![0.0, 0.612]);
    hot.squeeze_r = r;
    ScenarioConfig {
        reference_frequency: 1.0,
        oscillators: vec![osc(w1, dw1, theta), osc(w2, dw2, theta)],
        lambda: None,
        chain_lambda: Some(lambda),
        baths: vec![bath(w1, 81.5, vec![0.495, 0.0]), hot],
        run: RunConfig::default(),
        sweep: Vec::new(),
        output: None,
    }
}

pub fn fig9a() -> ScenarioConfig {
    let mut cfg = fig9(false, 0.0);
    cfg.sweep.push(steps("baths.1.squeeze_r", 0.0, 3.0, 0.05));
    cfg
}

/// Named outputs of a figure preset: `(file stem, scenario)`. Scenarios with sweep axes are
/// summarised per grid point; the others are written as time series.
pub fn preset(figure: &str) -> Option<Vec<(String, ScenarioConfig)>> {
    let one = |name: &str, cfg: ScenarioConfig| vec![(name.to_string(), cfg)];
    Some(match figure {
        "fig2" => {
            let mut slow = fig2(THETA_SLOW);
            slow.run = RunConfig { mode: RunMode::Evolve, t_end: Some(3.0 * 2.0 * PI / THETA_SLOW), ..RunConfig::default() };
            let mut fast = fig2(PI);
            fast.run = RunConfig { mode: RunMode::Evolve, t_end: Some(20.0), ..RunConfig::default() };
            vec![("fig2_slow".into(), slow), ("fig2_fast".into(), fast)]
        }
        "fig4" => one("fig4", fig4()),
        "fig5" => one("fig5", fig5()),
        "fig6a" => one("fig6a", fig6(THETA_SLOW)),
        "fig6b" => one("fig6b", fig6(PI / 4.0)),
        "fig6c" => one("fig6c", fig6(PI / 2.0)),
        "fig7" => one("fig7", fig7()),
        "fig8" => one("fig8", fig8()),
        "fig9a" => one("fig9a", fig9a()),
        "fig9b" => one("fig9b", fig9(true, 1.3)),
        _ => return None,
    })
}

/// Curzon-Ahlborn optimum of the Fig. 4 sweep, `sqrt(beta_c / beta_h) Omega_c`.
pub fn fig4_curzon_ahlborn_omega() -> f64 {
    SQRT_2 * 0.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for fig in FIGURES {
            for (name, cfg) in preset(fig).unwrap() {
                cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
                let again = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
                assert_eq!(cfg, again, "{name}");
            }
        }
        assert!(preset("fig3").is_none());
    }

    #[test]
    fn grids_hit_the_reference_points() {
        let g = fig6(THETA_SLOW).sweep[0].grid().unwrap();
        assert_eq!(g.len(), 60);
        assert!(g.iter().any(|w| (w - 0.1).abs() < 1e-12));
        assert!(g.iter().any(|w| (w - 0.05).abs() < 1e-12));
        let g = fig4().sweep[0].grid().unwrap();
        assert_eq!(g.len(), 61);
        let g = fig7().sweep[0].grid().unwrap();
        assert_eq!(g.len(), 80);
    }
}
