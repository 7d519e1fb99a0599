//! Error landscape `ε²(est₊, est₋)` over outcome-dependent estimates.

use anyhow::{bail, Result};
use serde::Serialize;

use pathpresence::analytic::{ozawa_error, weak_value, EstimateAssignment};
use pathpresence::{BeamConfig, Outcome, Path, Port};

use crate::config::{Grid, OzawaConfig};
use crate::output::OutputDir;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridPoint {
    pub est_plus: f64,
    pub est_minus: f64,
    pub eps2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakValueEntry {
    pub outcome: String,
    pub value: Option<f64>,
    pub status: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommonEstimate {
    pub grid_est: f64,
    pub grid_eps2: f64,
    /// Closed form: `est = p₁`, `ε² = p₁p₂`.
    pub theory_est: f64,
    pub theory_eps2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OzawaSummary {
    pub grid: Grid,
    pub grid_step: f64,
    pub minimum: GridPoint,
    pub weak_values: Vec<WeakValueEntry>,
    /// `ε²` at the weak values, when both exist.
    pub eps2_at_weak_values: Option<f64>,
    pub common_estimate: CommonEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn eps2(cfg: &BeamConfig, est_plus: f64, est_minus: f64) -> f64 {
    ozawa_error(&EstimateAssignment::new(est_plus, est_minus), cfg)
}

pub fn run(config: &OzawaConfig, out: &mut OutputDir) -> Result<OzawaSummary> {
    let cfg = config.beam.config();
    if cfg.chi().sin().abs() > 1e-12 {
        bail!("the error landscape needs real amplitudes (chi = 0 or pi), got chi = {}", cfg.chi());
    }
    let values = config.grid.values();
    let mut points = Vec::with_capacity(values.len() * values.len());
    for &ep in &values {
        for &em in &values {
            points.push(GridPoint { est_plus: ep, est_minus: em, eps2: eps2(cfg, ep, em) });
        }
    }
    // first minimum in grid order, so ties resolve the same way every time
    let minimum = *points.iter().fold(&points[0], |best, p| if p.eps2 < best.eps2 { p } else { best });
    let common = values
        .iter()
        .map(|&e| (e, eps2(cfg, e, e)))
        .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });

    let weak: Vec<_> = Port::BOTH
        .iter()
        .map(|&port| {
            let outcome = Outcome::Port(port).label();
            match weak_value(Path::One, port, cfg) {
                Ok(w) => WeakValueEntry { outcome, value: Some(w.value.re), status: "ok" },
                Err(_) => WeakValueEntry { outcome, value: None, status: "divergent (dark port)" },
            }
        })
        .collect();
    let at_weak = match (weak[0].value, weak[1].value) {
        (Some(p), Some(m)) => Some(eps2(cfg, p, m)),
        _ => None,
    };
    let p1 = cfg.path_probability(Path::One);
    let summary = OzawaSummary {
        grid: config.grid,
        grid_step: config.grid.step(),
        minimum,
        weak_values: weak,
        eps2_at_weak_values: at_weak,
        common_estimate: CommonEstimate {
            grid_est: common.0,
            grid_eps2: common.1,
            theory_est: p1,
            theory_eps2: p1 * (1.0 - p1),
        },
        note: at_weak
            .is_none()
            .then(|| "a dark port never fires; its estimate does not affect the error".to_string()),
    };
    out.csv("ozawa_grid.csv", &points)?;
    out.json("ozawa_summary.json", &summary)?;
    Ok(summary)
}
