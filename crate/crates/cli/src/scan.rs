//! Presence `β₀/α` versus coupling strength.

use anyhow::Result;
use serde::Serialize;

use pathpresence::estimator::{presence_scan, PresencePoint, ScanSettings};

use crate::config::{over_pi, ScanConfig};
use crate::output::OutputDir;

#[derive(Clone, Debug, Serialize)]
pub struct CsvRow<'a> {
    pub alpha_rad: f64,
    pub alpha_over_pi: f64,
    pub outcome: &'a str,
    pub presence: f64,
    pub presence_std: f64,
    pub theory_exact: f64,
    pub theory_weak: f64,
    pub beta0_rad: f64,
    pub beta0_std: f64,
    pub visibility: f64,
    pub visibility_std: f64,
}

impl<'a> From<&'a PresencePoint> for CsvRow<'a> {
    fn from(p: &'a PresencePoint) -> Self {
        Self {
            alpha_rad: p.alpha,
            alpha_over_pi: over_pi(p.alpha),
            outcome: &p.outcome,
            presence: p.presence,
            presence_std: p.presence_std,
            theory_exact: p.theory_exact,
            theory_weak: p.theory_weak,
            beta0_rad: p.beta0,
            beta0_std: p.beta0_std,
            visibility: p.visibility,
            visibility_std: p.visibility_std,
        }
    }
}

pub fn settings(cfg: &ScanConfig, seed: u64) -> ScanSettings {
    ScanSettings {
        shots_per_setting: cfg.shots_per_setting.get(),
        beta_schedule: cfg.beta_schedule.betas().to_vec(),
        poisson_totals: cfg.poisson_totals,
        seed,
    }
}

pub fn run(cfg: &ScanConfig, settings: &ScanSettings, out: &mut OutputDir) -> Result<Vec<PresencePoint>> {
    let alphas: Vec<f64> = cfg.alphas.iter().map(|a| a.radians()).collect();
    let rows = presence_scan(&alphas, cfg.beam.config(), cfg.context, settings)?;
    out.json("presence_scan.json", &rows)?;
    out.csv("presence_scan.csv", &rows.iter().map(CsvRow::from).collect::<Vec<_>>())?;
    Ok(rows)
}
