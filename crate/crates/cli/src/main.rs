//! `pathpresence`: presence tables, simulated fringes, presence scans,
//! error landscapes and the acceptance report, driven by JSON configs.

mod angle;
mod config;
mod fringe;
mod output;
mod ozawa;
mod scan;
mod table;

use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use pathpresence::verify::{CriterionReport, Suite, Tolerances, CRITERIA, DEFAULT_SEED};

use angle::Angle;
use config::{load, BeamSpec, BeamSpecRaw, FringeConfig, OzawaConfig, ScanConfig, Shots, TableConfig};
use output::OutputDir;

#[derive(Parser)]
#[command(name = "pathpresence", version, about = "Path presences from feedback-compensated which-way measurements")]
struct Cli {
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// JSON config, or a manifest.json from an earlier run of the same command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Outcome probabilities and path presences in both contexts.
    Table {
        /// Path-1 amplitude (with --a2; renormalized if off by < 1e-6).
        #[arg(long, requires = "a2", conflicts_with = "ratio", allow_negative_numbers = true)]
        a1: Option<f64>,
        #[arg(long, requires = "a1", allow_negative_numbers = true)]
        a2: Option<f64>,
        /// Intensity ratio `r1:r2`, e.g. `4:1`.
        #[arg(long)]
        ratio: Option<String>,
        /// Phase between the paths, e.g. `0`, `pi`.
        #[arg(long, allow_hyphen_values = true)]
        chi: Option<Angle>,
        /// Print JSON instead of the text table.
        #[arg(long)]
        json: bool,
    },
    /// Simulate and fit the fringes listed in a config.
    Fringe {
        /// Overrides `shots_per_setting`.
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Fitted presence β₀/α against coupling strength.
    PresenceScan {
        /// Overrides `shots_per_setting`.
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Error landscape over outcome-dependent estimates.
    Ozawa,
    /// Run the acceptance criteria.
    Verify {
        /// Criteria to run, e.g. `1,2,9` (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Override a threshold, e.g. `presence_minus=1e-6`.
        #[arg(long = "tolerance", value_name = "KEY=VALUE")]
        tolerances: Vec<String>,
        /// Print the JSON report instead of one line per criterion.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let out_dir = |name: &str| cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(name));
    match &cli.command {
        Command::Table { a1, a2, ratio, chi, json } => {
            let loaded = match &cli.config {
                Some(p) => Some(load::<TableConfig>(p, "table")?),
                None => None,
            };
            let mut raw: BeamSpecRaw = loaded.as_ref().map(|l| l.config.beam.clone()).unwrap_or_default().into();
            if let (Some(a1), Some(a2)) = (a1, a2) {
                raw = BeamSpecRaw { a1: Some(*a1), a2: Some(*a2), chi: raw.chi, ratio: None };
            }
            if let Some(r) = ratio {
                raw = BeamSpecRaw { ratio: Some(parse_ratio(r)?), chi: raw.chi, a1: None, a2: None };
            }
            if let Some(chi) = chi {
                raw.chi = Some(chi.clone());
            }
            let beam = BeamSpec::try_from(raw).map_err(anyhow::Error::msg).context("invalid beam")?;
            let report = table::build(beam.config())?;
            let text = table::render(&report);
            if *json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{text}");
            }
            if let Some(dir) = &cli.out_dir {
                let mut out = OutputDir::create(dir)?;
                out.text("table.txt", &text)?;
                out.json("table.json", &report)?;
                let resolved = serde_json::to_value(beam.config())?;
                out.finish("table", None, serde_json::to_value(TableConfig { beam })?, resolved, loaded.map(|l| l.raw))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fringe { shots } => {
            let path = cli.config.as_deref().context("fringe needs --config (see configs/ for examples)")?;
            let loaded = load::<FringeConfig>(path, "fringe")?;
            let mut cfg = loaded.config.clone();
            if let Some(n) = shots {
                cfg.override_shots(shots_override(*n)?);
            }
            cfg.check()?;
            let seed = cli.seed.or(cfg.seed).or(loaded.manifest_seed).unwrap_or(DEFAULT_SEED);
            cfg.seed = Some(seed);
            let experiments = fringe::experiments(&cfg, seed)?;
            let dir = out_dir("fringe");
            let mut out = OutputDir::create(&dir)?;
            let fits = fringe::run(&cfg, &experiments, &mut out)?;
            for f in &fits {
                println!(
                    "{:<12} beta0 = {}π  exact {:.4}π  pull {:+.2}  visibility {}  (exact {:.4})",
                    f.label,
                    fringe::with_error(f.beta0_over_pi, f.beta0_std_over_pi, 4),
                    f.theory_beta0_over_pi,
                    f.pull,
                    fringe::with_error(f.visibility, f.visibility_std, 3),
                    f.theory_visibility,
                );
            }
            let root = out.finish("fringe", Some(seed), serde_json::to_value(&cfg)?, serde_json::to_value(&experiments)?, Some(loaded.raw))?;
            println!("wrote {}", root.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::PresenceScan { shots } => {
            let (mut cfg, raw, manifest_seed) = match &cli.config {
                Some(p) => {
                    let l = load::<ScanConfig>(p, "presence-scan")?;
                    (l.config, Some(l.raw), l.manifest_seed)
                }
                None => (default_scan(), None, None),
            };
            if let Some(n) = shots {
                cfg.shots_per_setting = shots_override(*n)?;
            }
            cfg.check()?;
            let seed = cli.seed.or(cfg.seed).or(manifest_seed).unwrap_or(DEFAULT_SEED);
            cfg.seed = Some(seed);
            let settings = scan::settings(&cfg, seed);
            let dir = out_dir("presence-scan");
            let mut out = OutputDir::create(&dir)?;
            let rows = scan::run(&cfg, &settings, &mut out)?;
            println!("{:<8} {:<8} {:>18} {:>10} {:>8}", "alpha/pi", "outcome", "presence", "exact", "weak");
            for r in &rows {
                println!(
                    "{:<8.5} {:<8} {:>18} {:>10.4} {:>8.4}",
                    config::over_pi(r.alpha),
                    r.outcome,
                    fringe::with_error(r.presence, r.presence_std, 4),
                    r.theory_exact,
                    r.theory_weak
                );
            }
            let resolved = serde_json::json!({ "beam": cfg.beam.config(), "alphas": cfg.alphas.iter().map(Angle::radians).collect::<Vec<_>>(), "settings": settings });
            let root = out.finish("presence-scan", Some(seed), serde_json::to_value(&cfg)?, resolved, raw)?;
            println!("wrote {}", root.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Ozawa => {
            let (cfg, raw) = match &cli.config {
                Some(p) => {
                    let l = load::<OzawaConfig>(p, "ozawa")?;
                    (l.config, Some(l.raw))
                }
                None => (OzawaConfig::default(), None),
            };
            cfg.check()?;
            let dir = out_dir("ozawa");
            let mut out = OutputDir::create(&dir)?;
            let s = ozawa::run(&cfg, &mut out)?;
            println!(
                "grid minimum: eps2 = {:.3e} at (est+, est-) = ({:.4}, {:.4}), grid step {}",
                s.minimum.eps2, s.minimum.est_plus, s.minimum.est_minus, s.grid_step
            );
            for w in &s.weak_values {
                match w.value {
                    Some(v) => println!("weak value {}: {v:.12}", w.outcome),
                    None => println!("weak value {}: {}", w.outcome, w.status),
                }
            }
            if let Some(e) = s.eps2_at_weak_values {
                println!("eps2 at the weak values: {e:.3e}");
            }
            let c = &s.common_estimate;
            println!(
                "common estimate: grid minimum eps2 = {:.6} at {:.4} (closed form {:.6} at {:.4})",
                c.grid_eps2, c.grid_est, c.theory_eps2, c.theory_est
            );
            if let Some(note) = &s.note {
                println!("note: {note}");
            }
            let resolved = serde_json::to_value(cfg.beam.config())?;
            let root = out.finish("ozawa", None, serde_json::to_value(&cfg)?, resolved, raw)?;
            println!("wrote {}", root.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { only, tolerances, json } => verify(&cli, only, tolerances, *json),
    }
}

fn parse_ratio(text: &str) -> Result<[f64; 2]> {
    let (a, b) = text.split_once(':').context("ratio must look like r1:r2")?;
    Ok([a.trim().parse().context("ratio r1")?, b.trim().parse().context("ratio r2")?])
}

fn shots_override(n: u64) -> Result<Shots> {
    Shots::try_from(n).map_err(|e| anyhow::anyhow!("schema error: --shots: {e}"))
}

fn default_scan() -> ScanConfig {
    serde_json::from_value(serde_json::json!({
        "alphas": ["pi/4", "pi/8", "pi/16"],
        "shots_per_setting": 20000,
    }))
    .expect("default scan config is valid")
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    seed: u64,
    tolerances: &'a Tolerances,
    passed: bool,
    criteria: &'a [CriterionReport],
}

fn verify(cli: &Cli, only: &[u8], overrides: &[String], json: bool) -> Result<ExitCode> {
    if cli.config.is_some() {
        bail!("verify takes no config; use --tolerance and --seed");
    }
    let mut tol = Tolerances::default();
    for item in overrides {
        let (key, value) = item.split_once('=').with_context(|| format!("--tolerance '{item}' is not KEY=VALUE"))?;
        let value: f64 = value.trim().parse().with_context(|| format!("--tolerance {key}: not a number"))?;
        tol.set(key.trim(), value).map_err(anyhow::Error::msg)?;
    }
    let ids: Vec<u8> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only.to_vec() };
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let suite = Suite::new(seed, tol.clone());
    let mut reports = Vec::with_capacity(ids.len());
    for id in ids {
        let report = suite.run(id).with_context(|| format!("no criterion {id} (known: 1-{})", CRITERIA.len()))?;
        if !json {
            println!("{}", report.summary_line());
        }
        reports.push(report);
    }
    let passed = reports.iter().all(|r| r.passed);
    let report = VerifyReport { seed, tolerances: &tol, passed, criteria: &reports };
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("{}", if passed { "all criteria passed" } else { "FAILED" });
    }
    if let Some(dir) = &cli.out_dir {
        write_verify(dir, &report, overrides)?;
    }
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn write_verify(dir: &FsPath, report: &VerifyReport, overrides: &[String]) -> Result<()> {
    let mut out = OutputDir::create(dir)?;
    out.json("verify.json", report)?;
    let ids: Vec<u8> = report.criteria.iter().map(|c| c.id).collect();
    let config = serde_json::json!({ "only": ids, "tolerance": overrides });
    out.finish("verify", Some(report.seed), config, serde_json::to_value(report.tolerances)?, None)?;
    Ok(())
}
