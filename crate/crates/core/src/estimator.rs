//! Fringe fitting, compensation-angle optimization and presence scans.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{compensation_solution, weak_value, wrap_angle, AnalyticError, MeasurementContext, Outcome};
use crate::qcore::{BeamConfig, Path};
use crate::simkit::{
    derive_seed, estimate_sigma_x, sample_run, ChannelRecord, ExperimentConfig, ExperimentContext, FringeDataset,
    Selection, SimError, SpinCounts,
};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("fringe fit underdetermined: {0}")]
    Underdetermined(String),
    #[error("degenerate weight at setting {index} (beta = {beta}): no detected counts")]
    DegenerateWeights { index: usize, beta: f64 },
    #[error("bracket [{lo}, {hi}] does not contain an interior maximum")]
    NoInteriorMaximum { lo: f64, hi: f64 },
    #[error("coupling angle must be nonzero and finite, got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

/// One `⟨σx⟩` estimate with its 1σ error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub beta: f64,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Adds a constant term to the cosine model.
    pub with_offset: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// Fringe phase in `(-π, π]`.
    pub beta0: f64,
    pub visibility: f64,
    pub beta0_std: f64,
    pub visibility_std: f64,
    pub chi2_per_dof: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_std: Option<f64>,
}

/// Converts counts into `⟨σx⟩` points.
///
/// A setting with one empty analyzer bin has zero binomial error; its error
/// is taken with the empty bin counted as ½ instead.
pub fn points_from_counts(counts: &[(f64, SpinCounts)]) -> Result<Vec<FringePoint>, EstimatorError> {
    counts
        .iter()
        .enumerate()
        .map(|(index, &(beta, c))| {
            let (value, mut std_error) =
                estimate_sigma_x(c.x_plus, c.x_minus).map_err(|_| EstimatorError::DegenerateWeights { index, beta })?;
            if std_error == 0.0 {
                let n = c.total() as f64;
                std_error = 2.0 * ((n - 0.5) * 0.5 / (n * n * n)).sqrt();
            }
            Ok(FringePoint { beta, value, std_error })
        })
        .collect()
}

/// Weighted linear least squares of `ν cos(β - β₀)` in the basis
/// `{cos β, sin β}` (plus a constant with `with_offset`).
pub fn fit_points(points: &[FringePoint], options: FitOptions) -> Result<FringeFit, EstimatorError> {
    let k = if options.with_offset { 3 } else { 2 };
    let mut betas: Vec<f64> = points.iter().map(|p| p.beta).collect();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    if betas.len() < k + 1 {
        return Err(EstimatorError::Underdetermined(format!(
            "{} distinct settings, need at least {}",
            betas.len(),
            k + 1
        )));
    }
    let span = betas[betas.len() - 1] - betas[0];
    if span <= FRAC_PI_2 {
        return Err(EstimatorError::Underdetermined(format!("schedule spans {span} rad, need more than pi/2")));
    }
    for (index, p) in points.iter().enumerate() {
        if !(p.std_error > 0.0 && p.std_error.is_finite() && p.value.is_finite()) {
            return Err(EstimatorError::DegenerateWeights { index, beta: p.beta });
        }
    }

    let n = points.len();
    let design = DMatrix::from_fn(n, k, |i, j| match j {
        0 => points[i].beta.cos(),
        1 => points[i].beta.sin(),
        _ => 1.0,
    });
    let weights = DVector::from_iterator(n, points.iter().map(|p| p.std_error.powi(-2)));
    let y = DVector::from_iterator(n, points.iter().map(|p| p.value));

    let mut weighted = design.clone();
    for (i, mut row) in weighted.row_iter_mut().enumerate() {
        row *= weights[i];
    }
    let normal = design.transpose() * &weighted;
    let rhs = weighted.transpose() * &y;
    let cov = normal
        .try_inverse()
        .ok_or_else(|| EstimatorError::Underdetermined("singular normal matrix".into()))?;
    let params = &cov * rhs;

    let resid = &y - &design * &params;
    let chi2: f64 = resid.iter().zip(weights.iter()).map(|(r, w)| r * r * w).sum();
    let dof = (n - k).max(1) as f64;

    let (c, s) = (params[0], params[1]);
    let (vc, vs, cs) = (cov[(0, 0)], cov[(1, 1)], cov[(0, 1)]);
    let nu2 = c * c + s * s;
    let visibility = nu2.sqrt();
    let visibility_std = ((c * c * vc + s * s * vs + 2.0 * c * s * cs) / nu2).max(0.0).sqrt();
    let beta0_std = ((s * s * vc + c * c * vs - 2.0 * c * s * cs) / (nu2 * nu2)).max(0.0).sqrt();

    Ok(FringeFit {
        beta0: wrap_angle(s.atan2(c)),
        visibility,
        beta0_std,
        visibility_std,
        chi2_per_dof: chi2 / dof,
        offset: options.with_offset.then(|| params[2]),
        offset_std: options.with_offset.then(|| cov[(2, 2)].sqrt()),
    })
}

pub fn fit_fringe(dataset: &FringeDataset, selection: Selection) -> Result<FringeFit, EstimatorError> {
    fit_fringe_with(dataset, selection, FitOptions::default())
}

pub fn fit_fringe_with(dataset: &FringeDataset, selection: Selection, options: FitOptions) -> Result<FringeFit, EstimatorError> {
    let counts: Vec<_> = dataset.settings.iter().map(|s| (s.beta, s.channel(selection))).collect();
    fit_points(&points_from_counts(&counts)?, options)
}

/// Fits flat CSV records.
pub fn fit_records(records: &[ChannelRecord]) -> Result<FringeFit, EstimatorError> {
    let counts: Vec<_> = records
        .iter()
        .map(|r| (r.beta_rad, SpinCounts { x_plus: r.n_x_plus, x_minus: r.n_x_minus }))
        .collect();
    fit_points(&points_from_counts(&counts)?, FitOptions::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub beta: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal objective on `bracket`.
///
/// Golden-section search narrows the bracket, then a few symmetric
/// three-point parabola steps polish the location below the resolution
/// golden section can reach on a flat maximum.
pub fn optimize_compensation<F: Fn(f64) -> f64>(objective: F, bracket: (f64, f64)) -> Result<Optimum, EstimatorError> {
    let (lo, hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    let width = hi - lo;
    if !(width > 0.0 && width.is_finite()) {
        return Err(EstimatorError::NoInteriorMaximum { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > 1e-7 * width.max(1.0) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = objective(d);
        }
    }
    let mut x = 0.5 * (a + b);
    let edge = 4.0 * (b - a);
    if x - lo < edge || hi - x < edge {
        return Err(EstimatorError::NoInteriorMaximum { lo, hi });
    }

    let h = (1e-4 * width).min(0.5 * (x - lo)).min(0.5 * (hi - x));
    for _ in 0..4 {
        let (fm, f0, fp) = (objective(x - h), objective(x), objective(x + h));
        let curvature = fp - 2.0 * f0 + fm;
        if curvature >= 0.0 {
            break;
        }
        let step = -0.5 * h * (fp - fm) / curvature;
        if step.abs() > h {
            break;
        }
        x += step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    Ok(Optimum { beta: x, value: objective(x) })
}

/// Piecewise-linear interpolant through measured `⟨σx⟩` points.
#[derive(Clone, Debug)]
pub struct EmpiricalFringe {
    points: Vec<(f64, f64)>,
}

impl EmpiricalFringe {
    pub fn new(points: &[FringePoint]) -> Self {
        let mut pts: Vec<_> = points.iter().map(|p| (p.beta, p.value)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { points: pts }
    }

    pub fn value_at(&self, beta: f64) -> f64 {
        let pts = &self.points;
        match pts.iter().position(|&(b, _)| b >= beta) {
            None => pts.last().map_or(f64::NAN, |p| p.1),
            Some(0) => pts[0].1,
            Some(i) => {
                let (b0, v0) = pts[i - 1];
                let (b1, v1) = pts[i];
                v0 + (v1 - v0) * (beta - b0) / (b1 - b0)
            }
        }
    }

    /// Setting with the largest measured value.
    pub fn argmax(&self) -> Option<f64> {
        self.points.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|p| p.0)
    }
}

/// Sampling parameters shared by every point of a presence scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub shots_per_setting: u64,
    pub beta_schedule: Vec<f64>,
    pub poisson_totals: bool,
    pub seed: u64,
}

/// Measured presence `β₀/α` for one outcome at one coupling strength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresencePoint {
    pub alpha: f64,
    pub outcome: String,
    pub presence: f64,
    pub presence_std: f64,
    pub theory_exact: f64,
    pub theory_weak: f64,
    pub beta0: f64,
    pub beta0_std: f64,
    pub visibility: f64,
    pub visibility_std: f64,
}

/// Exact `β₀/α` and the weak-value asymptote for one outcome.
pub fn presence_theory(outcome: Outcome, alpha: f64, cfg: &BeamConfig) -> Result<(f64, f64), EstimatorError> {
    Ok(match outcome {
        Outcome::Port(port) => (
            compensation_solution(port, alpha, cfg)?.beta0.re / alpha,
            weak_value(Path::One, port, cfg)?.value.re,
        ),
        Outcome::Path(Path::One) => (1.0, 1.0),
        Outcome::Path(Path::Two) => (0.0, 0.0),
    })
}

/// Experiment that isolates an outcome: a selected port, or the other path blocked.
pub fn context_for(outcome: Outcome) -> ExperimentContext {
    match outcome {
        Outcome::Port(port) => ExperimentContext::Interference { selected_port: port },
        Outcome::Path(path) => ExperimentContext::WhichWay { blocked_path: path.other() },
    }
}

/// Shifts `beta0` by multiples of 2π to the branch nearest `hint`.
pub fn unwrap_near(beta0: f64, hint: f64) -> f64 {
    beta0 + 2.0 * PI * ((hint - beta0) / (2.0 * PI)).round()
}

/// Simulates, fits and reports `β₀/α` for every coupling and outcome.
///
/// Rows are ordered by coupling, then outcome.
pub fn presence_scan(
    alphas: &[f64],
    cfg: &BeamConfig,
    context: MeasurementContext,
    counts: &ScanSettings,
) -> Result<Vec<PresencePoint>, EstimatorError> {
    if let Some(&bad) = alphas.iter().find(|a| **a == 0.0 || !a.is_finite()) {
        return Err(EstimatorError::InvalidAlpha(bad));
    }
    let outcomes = Outcome::for_context(context);
    let tasks: Vec<(f64, Outcome)> = alphas
        .iter()
        .flat_map(|&a| outcomes.iter().map(move |&o| (a, o)))
        .collect();
    tasks
        .par_iter()
        .enumerate()
        .map(|(index, &(alpha, outcome))| {
            let (theory_exact, theory_weak) = presence_theory(outcome, alpha, cfg)?;
            let context = context_for(outcome);
            let exp = ExperimentConfig::new(
                *cfg,
                alpha,
                context,
                counts.beta_schedule.clone(),
                counts.shots_per_setting,
                derive_seed(counts.seed, index as u64),
                counts.poisson_totals,
            )?;
            let data = sample_run(&exp)?;
            let fit = fit_fringe(&data, context.default_selection())?;
            let beta0 = unwrap_near(fit.beta0, theory_weak * alpha);
            Ok(PresencePoint {
                alpha,
                outcome: outcome.label(),
                presence: beta0 / alpha,
                presence_std: fit.beta0_std / alpha.abs(),
                theory_exact,
                theory_weak,
                beta0,
                beta0_std: fit.beta0_std,
                visibility: fit.visibility,
                visibility_std: fit.visibility_std,
            })
        })
        .collect()
}
