//! Simulated fringe runs: datasets, fits, and the analytic overlay.

use std::f64::consts::{FRAC_PI_2, PI};

use anyhow::{anyhow, Result};
use serde::Serialize;

use pathpresence::analytic::wrap_angle;
use pathpresence::estimator::fit_fringe;
use pathpresence::simkit::{derive_seed, outcome_distribution, sample_run, ExperimentConfig, ExperimentContext, Selection};

use crate::config::{over_pi, selection_label, FringeConfig};
use crate::output::OutputDir;

pub const OVERLAY_POINTS: usize = 361;

#[derive(Clone, Debug, Serialize)]
pub struct FitRow {
    pub label: String,
    pub context: ExperimentContext,
    pub selection: String,
    pub shots_per_setting: u64,
    pub seed: u64,
    pub beta0: f64,
    pub beta0_std: f64,
    pub beta0_over_pi: f64,
    pub beta0_std_over_pi: f64,
    pub visibility: f64,
    pub visibility_std: f64,
    pub chi2_per_dof: f64,
    pub theory_beta0: f64,
    pub theory_beta0_over_pi: f64,
    pub theory_visibility: f64,
    /// `(fit - theory) / σ`, phases compared modulo 2π.
    pub pull: f64,
}

fn analytic_sigma_x(config: &ExperimentConfig, selection: Selection, beta: f64) -> Result<f64> {
    outcome_distribution(config, beta)
        .sigma_x(selection)
        .ok_or_else(|| anyhow!("the selected channel ({}) is never detected", selection_label(selection)))
}

/// Exact fringe phase and visibility. The selected channel's rate does not
/// depend on β, so `⟨σx⟩(β) = V cos(β - β₀)` exactly.
pub fn exact_fringe(config: &ExperimentConfig, selection: Selection) -> Result<(f64, f64)> {
    let c = analytic_sigma_x(config, selection, 0.0)?;
    let s = analytic_sigma_x(config, selection, FRAC_PI_2)?;
    Ok((s.atan2(c), s.hypot(c)))
}

/// One experiment per run; run `k` draws from `derive_seed(seed, k)`.
pub fn experiments(cfg: &FringeConfig, seed: u64) -> Result<Vec<ExperimentConfig>> {
    cfg.runs
        .iter()
        .enumerate()
        .map(|(k, run)| {
            ExperimentConfig::new(
                *cfg.beam.config(),
                cfg.alpha.radians(),
                run.context,
                cfg.beta_schedule.betas().to_vec(),
                run.shots_per_setting.unwrap_or(cfg.shots_per_setting).get(),
                derive_seed(seed, k as u64),
                cfg.poisson_totals,
            )
            .map_err(Into::into)
        })
        .collect()
}

pub fn run(cfg: &FringeConfig, experiments: &[ExperimentConfig], out: &mut OutputDir) -> Result<Vec<FitRow>> {
    let mut fits = Vec::with_capacity(experiments.len());
    for (run, exp) in cfg.runs.iter().zip(experiments) {
        let selection = run.selection();
        let data = sample_run(exp)?;
        out.with_writer(&format!("{}.csv", run.label), |w| Ok(data.write_csv(w, selection)?))?;
        out.text(&format!("{}.json", run.label), &(data.to_json()? + "\n"))?;
        let fit = fit_fringe(&data, selection).map_err(|e| anyhow!("run '{}': {e}", run.label))?;
        let (theory_beta0, theory_visibility) = exact_fringe(exp, selection)?;
        fits.push(FitRow {
            label: run.label.clone(),
            context: run.context,
            selection: selection_label(selection),
            shots_per_setting: exp.shots_per_setting,
            seed: exp.seed,
            beta0: fit.beta0,
            beta0_std: fit.beta0_std,
            beta0_over_pi: over_pi(fit.beta0),
            beta0_std_over_pi: over_pi(fit.beta0_std),
            visibility: fit.visibility,
            visibility_std: fit.visibility_std,
            chi2_per_dof: fit.chi2_per_dof,
            theory_beta0,
            theory_beta0_over_pi: over_pi(theory_beta0),
            theory_visibility,
            pull: wrap_angle(fit.beta0 - theory_beta0) / fit.beta0_std,
        });
    }
    out.json("fit.json", &fits)?;

    out.with_writer("overlay.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["beta_rad".to_string()];
        header.extend(cfg.runs.iter().map(|r| r.label.clone()));
        csv.write_record(&header)?;
        for k in 0..OVERLAY_POINTS {
            let beta = -PI + 2.0 * PI * k as f64 / (OVERLAY_POINTS - 1) as f64;
            let mut record = vec![beta.to_string()];
            for (run, exp) in cfg.runs.iter().zip(experiments) {
                record.push(analytic_sigma_x(exp, run.selection(), beta)?.to_string());
            }
            csv.write_record(&record)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    Ok(fits)
}

/// `0.2533(61)` style: value and error in units of the last shown digit.
pub fn with_error(value: f64, err: f64, decimals: usize) -> String {
    let scale = 10f64.powi(decimals as i32);
    format!("{:.*}({})", decimals, value, (err * scale).round() as i64)
}
