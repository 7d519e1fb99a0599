//! JSON config schema. Leaf values validate while deserializing, so schema
//! errors carry the line and column of the offending value.

use std::f64::consts::PI;
use std::path::Path as FsPath;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pathpresence::simkit::{uniform_schedule, ExperimentContext, Selection};
use pathpresence::{BeamConfig, MeasurementContext, Port};

use crate::angle::Angle;

/// Amplitudes whose squares sum to 1 within this are renormalized silently.
const RENORMALIZE_WITHIN: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpecRaw {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<Angle>,
}

/// Beam splitter given either as an intensity ratio or as amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BeamSpecRaw", into = "BeamSpecRaw")]
pub struct BeamSpec {
    raw: BeamSpecRaw,
    config: BeamConfig,
}

impl BeamSpec {
    pub fn config(&self) -> &BeamConfig {
        &self.config
    }
}

impl Default for BeamSpec {
    fn default() -> Self {
        BeamSpecRaw { ratio: Some([4.0, 1.0]), chi: Some("0".parse().unwrap()), ..Default::default() }
            .try_into()
            .expect("default beam is valid")
    }
}

impl TryFrom<BeamSpecRaw> for BeamSpec {
    type Error = String;

    fn try_from(raw: BeamSpecRaw) -> Result<Self, String> {
        let chi = raw.chi.as_ref().map_or(0.0, Angle::radians);
        let config = match (raw.ratio, raw.a1, raw.a2) {
            (Some([r1, r2]), None, None) => BeamConfig::from_intensity_ratio(r1, r2, chi).map_err(|e| e.to_string())?,
            (None, Some(a1), Some(a2)) => {
                let norm = a1 * a1 + a2 * a2;
                if (norm - 1.0).abs() > RENORMALIZE_WITHIN {
                    return Err(format!("a1² + a2² = {norm} is not 1 (use \"ratio\" for unnormalized weights)"));
                }
                let n = norm.sqrt();
                BeamConfig::new(a1 / n, a2 / n, chi).map_err(|e| e.to_string())?
            }
            _ => return Err("beam needs either \"ratio\": [r1, r2] or both \"a1\" and \"a2\"".into()),
        };
        Ok(Self { raw, config })
    }
}

impl From<BeamSpec> for BeamSpecRaw {
    fn from(b: BeamSpec) -> Self {
        b.raw
    }
}

/// Shot count per setting, at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Shots(u64);

impl Shots {
    pub fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for Shots {
    type Error = String;

    fn try_from(n: u64) -> Result<Self, String> {
        if n == 0 {
            Err("shots_per_setting must be at least 1".into())
        } else {
            Ok(Self(n))
        }
    }
}

impl From<Shots> for u64 {
    fn from(s: Shots) -> u64 {
        s.0
    }
}

/// Compensation settings: an explicit list, or `points` evenly spaced
/// settings on `[start, stop)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleRaw {
    List(Vec<Angle>),
    Uniform { start: Angle, stop: Angle, points: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRaw", into = "ScheduleRaw")]
pub struct Schedule {
    raw: ScheduleRaw,
    betas: Vec<f64>,
}

impl Schedule {
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

impl Default for Schedule {
    fn default() -> Self {
        ScheduleRaw::Uniform { start: "-pi".parse().unwrap(), stop: "pi".parse().unwrap(), points: 16 }
            .try_into()
            .expect("default schedule is valid")
    }
}

impl TryFrom<ScheduleRaw> for Schedule {
    type Error = String;

    fn try_from(raw: ScheduleRaw) -> Result<Self, String> {
        let betas = match &raw {
            ScheduleRaw::List(list) => list.iter().map(Angle::radians).collect::<Vec<_>>(),
            ScheduleRaw::Uniform { start, stop, points } => {
                if *points == 0 {
                    return Err("beta_schedule needs at least one point".into());
                }
                if stop.radians() <= start.radians() {
                    return Err("beta_schedule stop must exceed start".into());
                }
                uniform_schedule(start.radians(), stop.radians(), *points)
            }
        };
        if betas.is_empty() {
            return Err("beta_schedule must not be empty".into());
        }
        Ok(Self { raw, betas })
    }
}

impl From<Schedule> for ScheduleRaw {
    fn from(s: Schedule) -> Self {
        s.raw
    }
}

/// Detected channel fitted for a run: `"port+"`, `"port-"` or `"all"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SelectionSpec(pub Selection);

impl TryFrom<String> for SelectionSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        Ok(Self(match s.as_str() {
            "port+" => Selection::Port(Port::Plus),
            "port-" => Selection::Port(Port::Minus),
            "all" => Selection::AllPorts,
            other => return Err(format!("unknown selection '{other}' (expected \"port+\", \"port-\" or \"all\")")),
        }))
    }
}

impl From<SelectionSpec> for String {
    fn from(s: SelectionSpec) -> String {
        selection_label(s.0)
    }
}

pub fn selection_label(s: Selection) -> String {
    match s {
        Selection::Port(p) => format!("port{p}"),
        Selection::AllPorts => "all".into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub label: String,
    pub context: ExperimentContext,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionSpec>,
    /// Overrides the top-level `shots_per_setting` for this run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_per_setting: Option<Shots>,
}

impl RunSpec {
    pub fn selection(&self) -> Selection {
        self.selection.map_or_else(|| self.context.default_selection(), |s| s.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeConfig {
    #[serde(default)]
    pub beam: BeamSpec,
    pub alpha: Angle,
    #[serde(default)]
    pub beta_schedule: Schedule,
    pub shots_per_setting: Shots,
    #[serde(default)]
    pub poisson_totals: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub runs: Vec<RunSpec>,
}

impl FringeConfig {
    /// Replaces every shot count, per-run ones included.
    pub fn override_shots(&mut self, shots: Shots) {
        self.shots_per_setting = shots;
        for run in &mut self.runs {
            run.shots_per_setting = None;
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.runs.is_empty() {
            bail!("schema error: \"runs\" must list at least one run");
        }
        for (k, run) in self.runs.iter().enumerate() {
            let ok = !run.label.is_empty()
                && run.label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
                && !run.label.starts_with('.');
            if !ok {
                bail!("schema error: run label '{}' must be non-empty and use only letters, digits, '-', '_' and '.'", run.label);
            }
            if self.runs[..k].iter().any(|r| r.label == run.label) {
                bail!("schema error: duplicate run label '{}'", run.label);
            }
            if run.label == "fit" || run.label == "overlay" || run.label == "manifest" {
                bail!("schema error: run label '{}' is reserved", run.label);
            }
        }
        Ok(())
    }
}

fn default_context() -> MeasurementContext {
    MeasurementContext::Interference
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default)]
    pub beam: BeamSpec,
    #[serde(default = "default_context")]
    pub context: MeasurementContext,
    pub alphas: Vec<Angle>,
    #[serde(default)]
    pub beta_schedule: Schedule,
    pub shots_per_setting: Shots,
    #[serde(default)]
    pub poisson_totals: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ScanConfig {
    pub fn check(&self) -> Result<()> {
        if self.alphas.is_empty() {
            bail!("schema error: \"alphas\" must list at least one coupling angle");
        }
        if let Some(a) = self.alphas.iter().find(|a| a.radians() == 0.0) {
            bail!("schema error: coupling angle {a} is zero; the presence β₀/α is undefined there");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { min: -1.0, max: 3.0, points: 201 }
    }
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points).map(|k| self.min + k as f64 * step).collect()
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OzawaConfig {
    #[serde(default)]
    pub beam: BeamSpec,
    #[serde(default)]
    pub grid: Grid,
}

impl OzawaConfig {
    pub fn check(&self) -> Result<()> {
        let g = self.grid;
        if g.points < 2 || !(g.min.is_finite() && g.max.is_finite() && g.max > g.min) {
            bail!("schema error: grid needs finite min < max and at least 2 points");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    #[serde(default)]
    pub beam: BeamSpec,
}

/// Config text plus the seed recorded in it, if it came from a manifest.
pub struct Loaded<T> {
    pub config: T,
    pub raw: serde_json::Value,
    pub manifest_seed: Option<u64>,
}

/// Reads a config file, or the `config` section of a run manifest written
/// by the same command.
pub fn load<T: DeserializeOwned>(path: &FsPath, command: &str) -> Result<Loaded<T>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))?;
    if value.get("manifest_version").is_some() {
        let recorded = value.get("command").and_then(|c| c.as_str()).unwrap_or("");
        if recorded != command {
            bail!("{} is a manifest for '{recorded}', not '{command}'", path.display());
        }
        let section = value.get("config").cloned().context("manifest has no \"config\" section")?;
        let config = serde_json::from_value(section.clone())
            .with_context(|| format!("{}: schema error in manifest config", path.display()))?;
        let seed = value.get("seed").and_then(|s| s.as_u64());
        // keep the original input so a rerun writes an identical manifest
        let raw = value.get("input").filter(|v| !v.is_null()).cloned().unwrap_or(section);
        return Ok(Loaded { config, raw, manifest_seed: seed });
    }
    // parse from text, not the Value, so errors keep their line numbers
    let config = serde_json::from_str(&text).with_context(|| format!("{}: schema error", path.display()))?;
    Ok(Loaded { config, raw: value, manifest_seed: None })
}

/// `θ/π`, for reporting.
pub fn over_pi(theta: f64) -> f64 {
    theta / PI
}
