//! Presence tables in both measurement contexts, with exact rationals where
//! the numbers have them.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use serde::Serialize;

use pathpresence::analytic::{port_probability, presence_table, weak_value, AnalyticError, PresenceTable};
use pathpresence::{BeamConfig, MeasurementContext, Outcome, Path, Port};

const MAX_DENOMINATOR: i64 = 10_000;

/// `x ≈ p/q` with a small denominator, to within floating-point noise.
pub fn exact_rational(x: f64) -> Option<(i64, i64)> {
    if !x.is_finite() || x.abs() > 1e9 {
        return None;
    }
    let tol = 1e-12 * x.abs().max(1.0);
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    loop {
        let a = r.floor();
        let (h, k) = (a as i64 * h1 + h0, a as i64 * k1 + k0);
        if k > MAX_DENOMINATOR {
            return None;
        }
        if (x - h as f64 / k as f64).abs() <= tol {
            return Some((h, k));
        }
        (h0, h1, k0, k1) = (h1, h, k1, k);
        let frac = r - a;
        if frac.abs() < 1e-15 {
            return None;
        }
        r = 1.0 / frac;
    }
}

fn rational_text(x: f64) -> Option<String> {
    exact_rational(x).map(|(p, q)| if q == 1 { format!("{p}") } else { format!("{p}/{q}") })
}

/// Twelve decimals, with `-0` printed as `0`.
fn decimal(x: f64) -> String {
    format!("{:.12}", x + 0.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

impl Cell {
    fn number(x: f64) -> Self {
        Self { value: Some(x + 0.0), exact: rational_text(x) }
    }

    /// Amplitudes: also recognizes square roots of rationals.
    fn amplitude(a: f64) -> Self {
        let exact = rational_text(a).or_else(|| rational_text(a * a).map(|r| format!("sqrt({r})")));
        Self { value: Some(a + 0.0), exact }
    }

    fn missing() -> Self {
        Self { value: None, exact: None }
    }

    fn text(&self, missing: &str) -> String {
        match (self.value, &self.exact) {
            (None, _) => missing.to_string(),
            (Some(v), Some(e)) => format!("{e} ({})", decimal(v)),
            (Some(v), None) => decimal(v),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub outcome: String,
    pub status: &'static str,
    pub probability: Cell,
    pub presence: [Cell; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct ContextTable {
    pub context: MeasurementContext,
    pub rows: Vec<Row>,
    pub average: [Cell; 2],
    pub variance: [Cell; 2],
    pub uncertainty: [Cell; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableReport {
    pub chi: f64,
    pub amplitudes: [Cell; 2],
    pub probabilities: [Cell; 2],
    pub contexts: Vec<ContextTable>,
}

fn from_table(t: &PresenceTable) -> ContextTable {
    ContextTable {
        context: t.context,
        rows: t
            .rows
            .iter()
            .map(|r| Row {
                outcome: r.outcome.label(),
                status: if r.probability > 0.0 { "ok" } else { "never observed" },
                probability: Cell::number(r.probability),
                presence: r.presence.map(Cell::number),
            })
            .collect(),
        average: t.average.map(Cell::number),
        variance: t.variance.map(Cell::number),
        uncertainty: t.uncertainty.map(Cell::number),
        note: None,
    }
}

/// Interference table with a dark port: that row is labeled, and the
/// summary rows take their continuous limit `p₁, p₂` and `p₁p₂`.
fn dark_port_table(cfg: &BeamConfig) -> ContextTable {
    let p = [cfg.path_probability(Path::One), cfg.path_probability(Path::Two)];
    let rows = Port::BOTH
        .iter()
        .map(|&port| {
            let outcome = Outcome::Port(port).label();
            match weak_value(Path::One, port, cfg) {
                Ok(w) => Row {
                    outcome,
                    status: "ok",
                    probability: Cell::number(port_probability(port, cfg)),
                    presence: [Cell::number(w.value.re), Cell::number(1.0 - w.value.re)],
                },
                Err(_) => Row {
                    outcome,
                    status: "divergent (dark port)",
                    probability: Cell::number(port_probability(port, cfg)),
                    presence: [Cell::missing(), Cell::missing()],
                },
            }
        })
        .collect();
    let var = p[0] * p[1];
    ContextTable {
        context: MeasurementContext::Interference,
        rows,
        average: p.map(Cell::number),
        variance: [Cell::number(var), Cell::number(var)],
        uncertainty: [Cell::number(var.sqrt()), Cell::number(var.sqrt())],
        note: Some("dark port: weak values diverge; summary rows are the limit through it".into()),
    }
}

pub fn build(cfg: &BeamConfig) -> Result<TableReport> {
    if cfg.chi().sin().abs() > 1e-12 {
        bail!("the presence table needs real amplitudes (chi = 0 or pi), got chi = {}", cfg.chi());
    }
    let interference = match presence_table(cfg, MeasurementContext::Interference) {
        Ok(t) => from_table(&t),
        Err(AnalyticError::DivergentWeakValue { .. }) => dark_port_table(cfg),
        Err(e) => return Err(e.into()),
    };
    let which_way = from_table(&presence_table(cfg, MeasurementContext::WhichWay)?);
    Ok(TableReport {
        chi: cfg.chi(),
        amplitudes: [Cell::amplitude(cfg.a1()), Cell::amplitude(cfg.a2())],
        probabilities: [Cell::number(cfg.path_probability(Path::One)), Cell::number(cfg.path_probability(Path::Two))],
        contexts: vec![interference, which_way],
    })
}

const W: usize = 30;

pub fn render(report: &TableReport) -> String {
    let mut out = String::new();
    let chi = rational_text(report.chi / std::f64::consts::PI).map_or_else(
        || decimal(report.chi),
        |r| match r.as_str() {
            "0" => "0".into(),
            "1" => "pi".into(),
            r => format!("{r}*pi"),
        },
    );
    let _ = writeln!(out, "beam splitter (chi = {chi})");
    let _ = writeln!(out, "  {:<22}{:<W$}path 2", "", "path 1");
    let _ = writeln!(out, "  {:<22}{:<W$}{}", "initial amplitudes", report.amplitudes[0].text("-"), report.amplitudes[1].text("-"));
    let _ = writeln!(out, "  {:<22}{:<W$}{}", "initial probabilities", report.probabilities[0].text("-"), report.probabilities[1].text("-"));
    for t in &report.contexts {
        let title = match t.context {
            MeasurementContext::Interference => "interference context (exit ports)",
            MeasurementContext::WhichWay => "which-way context (path detection)",
        };
        let _ = writeln!(out);
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out, "  {:<8}{:<W$}{:<W$}presence in path 2", "outcome", "probability", "presence in path 1");
        for r in &t.rows {
            let missing = if r.status == "ok" { "-" } else { r.status };
            let mut line = format!(
                "  {:<8}{:<W$}{:<W$}{}",
                r.outcome,
                r.probability.text("-"),
                r.presence[0].text(missing),
                r.presence[1].text(missing)
            );
            if r.status == "never observed" {
                line.push_str("  [never observed]");
            }
            let _ = writeln!(out, "{line}");
        }
        for (name, cells) in [("average", &t.average), ("variance", &t.variance), ("Δ", &t.uncertainty)] {
            let _ = writeln!(out, "  {:<8}{:<W$}{:<W$}{}", name, "", cells[0].text("-"), cells[1].text("-"));
        }
        if let Some(note) = &t.note {
            let _ = writeln!(out, "  note: {note}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        assert_eq!(exact_rational(0.9), Some((9, 10)));
        assert_eq!(exact_rational(1.0 - 2.0 / 3.0), Some((1, 3)));
        assert_eq!(exact_rational(-1.0), Some((-1, 1)));
        assert_eq!(exact_rational(0.16000000000000003), Some((4, 25)));
        assert_eq!(exact_rational(0.0), Some((0, 1)));
        assert_eq!(exact_rational(2f64.sqrt()), None);
        assert_eq!(exact_rational(std::f64::consts::PI), None);
    }

    #[test]
    fn amplitude_cells() {
        assert_eq!(Cell::amplitude(0.8f64.sqrt()).exact.as_deref(), Some("sqrt(4/5)"));
        assert_eq!(Cell::amplitude(1.0).exact.as_deref(), Some("1"));
    }

    #[test]
    fn dark_port_is_labeled() {
        let report = build(&BeamConfig::symmetric(0.0)).unwrap();
        let rows = &report.contexts[0].rows;
        assert_eq!(rows[1].status, "divergent (dark port)");
        assert!(rows[1].presence[0].value.is_none());
        assert!(render(&report).contains("divergent (dark port)"));
    }

    #[test]
    fn complex_weak_values_rejected() {
        assert!(build(&BeamConfig::symmetric(0.3)).is_err());
    }
}
