//! Seeded Monte Carlo generation of detector counts.
//!
//! Every setting of the compensation schedule draws its shots from the exact
//! event probabilities of the state-vector pipeline. Both exit ports are
//! always simulated; selecting one port is left to the consumer. Neutrons
//! stopped by a beam block are counted as absorbed.
//!
//! Randomness: setting `k` of a run with seed `s` uses a ChaCha8 stream keyed
//! by `(s, k)`, so the output does not depend on how settings are spread over
//! threads.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::MeasurementContext;
use crate::qcore::{
    apply_compensation, apply_coupling, block_path, prepare_initial, project_exit, spin_projection_probability,
    BeamConfig, Path, Port, SpinAxis,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("sigma_x estimate needs at least one detected count")]
    NoCounts,
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which measurement follows the coupling, with its outcome choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExperimentContext {
    #[serde(rename = "whichway")]
    WhichWay { blocked_path: Path },
    Interference { selected_port: Port },
}

impl ExperimentContext {
    pub fn measurement(&self) -> MeasurementContext {
        match self {
            ExperimentContext::WhichWay { .. } => MeasurementContext::WhichWay,
            ExperimentContext::Interference { .. } => MeasurementContext::Interference,
        }
    }

    /// Channel analyzed by default: the selected port, or both ports when a
    /// path is blocked (both carry the surviving path's spin state).
    pub fn default_selection(&self) -> Selection {
        match self {
            ExperimentContext::WhichWay { .. } => Selection::AllPorts,
            ExperimentContext::Interference { selected_port } => Selection::Port(*selected_port),
        }
    }
}

/// Which detected counts enter an analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Port(Port),
    AllPorts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExperimentConfig")]
pub struct ExperimentConfig {
    pub beam: BeamConfig,
    pub alpha: f64,
    pub context: ExperimentContext,
    pub beta_schedule: Vec<f64>,
    pub shots_per_setting: u64,
    pub seed: u64,
    pub poisson_totals: bool,
}

#[derive(Deserialize)]
struct RawExperimentConfig {
    beam: BeamConfig,
    alpha: f64,
    context: ExperimentContext,
    beta_schedule: Vec<f64>,
    shots_per_setting: u64,
    seed: u64,
    poisson_totals: bool,
}

impl TryFrom<RawExperimentConfig> for ExperimentConfig {
    type Error = SimError;

    fn try_from(r: RawExperimentConfig) -> Result<Self, SimError> {
        ExperimentConfig::new(r.beam, r.alpha, r.context, r.beta_schedule, r.shots_per_setting, r.seed, r.poisson_totals)
    }
}

impl ExperimentConfig {
    pub fn new(
        beam: BeamConfig,
        alpha: f64,
        context: ExperimentContext,
        beta_schedule: Vec<f64>,
        shots_per_setting: u64,
        seed: u64,
        poisson_totals: bool,
    ) -> Result<Self, SimError> {
        let cfg = Self { beam, alpha, context, beta_schedule, shots_per_setting, seed, poisson_totals };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.shots_per_setting == 0 {
            return Err(SimError::InvalidConfig("shots_per_setting must be at least 1".into()));
        }
        if self.beta_schedule.is_empty() {
            return Err(SimError::InvalidConfig("beta_schedule must not be empty".into()));
        }
        if !self.alpha.is_finite() || self.beta_schedule.iter().any(|b| !b.is_finite()) {
            return Err(SimError::InvalidConfig("angles must be finite".into()));
        }
        Ok(())
    }
}

/// `points` evenly spaced angles on `[start, stop)`.
pub fn uniform_schedule(start: f64, stop: f64, points: usize) -> Vec<f64> {
    let step = (stop - start) / points as f64;
    (0..points).map(|k| start + step * k as f64).collect()
}

/// Exact probabilities of the five detection events at one setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub plus_x_plus: f64,
    pub plus_x_minus: f64,
    pub minus_x_plus: f64,
    pub minus_x_minus: f64,
    pub absorbed: f64,
}

impl OutcomeDistribution {
    pub fn as_array(&self) -> [f64; 5] {
        [self.plus_x_plus, self.plus_x_minus, self.minus_x_plus, self.minus_x_minus, self.absorbed]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// `(P(x+), P(x-))` for a port.
    pub fn port(&self, port: Port) -> (f64, f64) {
        match port {
            Port::Plus => (self.plus_x_plus, self.plus_x_minus),
            Port::Minus => (self.minus_x_plus, self.minus_x_minus),
        }
    }

    /// Analyzer expectation `⟨σx⟩` conditioned on the selection.
    pub fn sigma_x(&self, selection: Selection) -> Option<f64> {
        let (up, down) = match selection {
            Selection::Port(p) => self.port(p),
            Selection::AllPorts => (self.plus_x_plus + self.minus_x_plus, self.plus_x_minus + self.minus_x_minus),
        };
        let total = up + down;
        (total > 0.0).then(|| (up - down) / total)
    }
}

pub fn outcome_distribution(config: &ExperimentConfig, beta: f64) -> OutcomeDistribution {
    let coupled = apply_coupling(&prepare_initial(&config.beam), config.alpha);
    let survived = match config.context {
        ExperimentContext::WhichWay { blocked_path } => block_path(&coupled, blocked_path),
        ExperimentContext::Interference { .. } => coupled,
    };
    let absorbed = (1.0 - survived.norm_sqr()).max(0.0);
    let analyzed = |port| {
        let s = apply_compensation(&project_exit(&survived, port, &config.beam), beta);
        (
            spin_projection_probability(&s, SpinAxis::X, true),
            spin_projection_probability(&s, SpinAxis::X, false),
        )
    };
    let (pp, pm) = analyzed(Port::Plus);
    let (mp, mm) = analyzed(Port::Minus);
    OutcomeDistribution { plus_x_plus: pp, plus_x_minus: pm, minus_x_plus: mp, minus_x_minus: mm, absorbed }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinCounts {
    pub x_plus: u64,
    pub x_minus: u64,
}

impl SpinCounts {
    pub fn total(&self) -> u64 {
        self.x_plus + self.x_minus
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeSetting {
    pub beta: f64,
    pub port_plus: SpinCounts,
    pub port_minus: SpinCounts,
    pub absorbed: u64,
}

impl FringeSetting {
    pub fn total(&self) -> u64 {
        self.port_plus.total() + self.port_minus.total() + self.absorbed
    }

    pub fn channel(&self, selection: Selection) -> SpinCounts {
        match selection {
            Selection::Port(Port::Plus) => self.port_plus,
            Selection::Port(Port::Minus) => self.port_minus,
            Selection::AllPorts => SpinCounts {
                x_plus: self.port_plus.x_plus + self.port_minus.x_plus,
                x_minus: self.port_plus.x_minus + self.port_minus.x_minus,
            },
        }
    }
}

/// One row of the flat CSV form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub beta_rad: f64,
    pub n_x_plus: u64,
    pub n_x_minus: u64,
    pub n_absorbed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeDataset {
    pub config: ExperimentConfig,
    pub settings: Vec<FringeSetting>,
}

impl FringeDataset {
    pub fn default_selection(&self) -> Selection {
        self.config.context.default_selection()
    }

    pub fn records(&self, selection: Selection) -> Vec<ChannelRecord> {
        self.settings
            .iter()
            .map(|s| {
                let c = s.channel(selection);
                ChannelRecord { beta_rad: s.beta, n_x_plus: c.x_plus, n_x_minus: c.x_minus, n_absorbed: s.absorbed }
            })
            .collect()
    }

    /// Writes `beta_rad,n_x_plus,n_x_minus,n_absorbed` rows for `selection`.
    pub fn write_csv<W: Write>(&self, writer: W, selection: Selection) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(writer);
        for rec in self.records(selection) {
            w.serialize(rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, SimError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<ChannelRecord>, SimError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let expected = ["beta_rad", "n_x_plus", "n_x_minus", "n_absorbed"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(SimError::InvalidConfig(format!("unexpected CSV header {:?}", headers)));
    }
    r.deserialize().map(|row| row.map_err(SimError::from)).collect()
}

fn setting_rng(seed: u64, setting: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(setting as u64);
    rng
}

/// Deterministic sub-seed for the `index`-th derived run of a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    use rand::RngCore;
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index.wrapping_add(1) << 32);
    rng.next_u64()
}

fn multinomial<const K: usize>(rng: &mut ChaCha8Rng, n: u64, probs: [f64; K]) -> Result<[u64; K], SimError> {
    let mut counts = [0u64; K];
    let mut remaining = n;
    let mut mass: f64 = probs.iter().sum();
    for k in 0..K {
        if remaining == 0 {
            break;
        }
        if k == K - 1 {
            counts[k] = remaining;
            break;
        }
        let p = if mass > 0.0 { (probs[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, p).map_err(|e| SimError::Sampling(e.to_string()))?;
        counts[k] = draw.sample(rng);
        remaining -= counts[k];
        mass -= probs[k];
    }
    Ok(counts)
}

fn sample_setting(config: &ExperimentConfig, index: usize, beta: f64) -> Result<FringeSetting, SimError> {
    let mut rng = setting_rng(config.seed, index);
    let n = if config.poisson_totals {
        let dist = Poisson::new(config.shots_per_setting as f64).map_err(|e| SimError::Sampling(e.to_string()))?;
        dist.sample(&mut rng) as u64
    } else {
        config.shots_per_setting
    };
    let probs = outcome_distribution(config, beta).as_array().map(|p| p.max(0.0));
    let c = multinomial(&mut rng, n, probs)?;
    Ok(FringeSetting {
        beta,
        port_plus: SpinCounts { x_plus: c[0], x_minus: c[1] },
        port_minus: SpinCounts { x_plus: c[2], x_minus: c[3] },
        absorbed: c[4],
    })
}

/// Simulates every setting of the schedule.
pub fn sample_run(config: &ExperimentConfig) -> Result<FringeDataset, SimError> {
    config.validate()?;
    let settings = config
        .beta_schedule
        .par_iter()
        .enumerate()
        .map(|(k, &beta)| sample_setting(config, k, beta))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FringeDataset { config: config.clone(), settings })
}

/// Analyzer readout `(N₊ - N₋)/(N₊ + N₋)` with its binomial standard error
/// `2√(N₊N₋/(N₊+N₋)³)`.
pub fn estimate_sigma_x(counts_x_plus: u64, counts_x_minus: u64) -> Result<(f64, f64), SimError> {
    let total = counts_x_plus + counts_x_minus;
    if total == 0 {
        return Err(SimError::NoCounts);
    }
    let (up, down, n) = (counts_x_plus as f64, counts_x_minus as f64, total as f64);
    Ok(((up - down) / n, 2.0 * (up * down / (n * n * n)).sqrt()))
}
