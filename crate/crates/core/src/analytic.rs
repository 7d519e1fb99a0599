//! Closed-form weak values, optimal compensation angles and the spin
//! statistics that follow from them.
//!
//! Everything here is evaluated directly from the beam configuration; the
//! [`crate::qcore`] state-vector pipeline is the independent reference used
//! by the tests.
//!
//! Conventions: compensation is `U_z(-β)`, the optimal real setting is
//! `β = Re β₀`, and `β₀ ≈ ω₁ α` for small coupling, so every fringe reads
//! `cos(β - β₀)` and positive weak values give positive presences.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{BeamConfig, Path, Port, DEFAULT_TOLERANCE};

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Neutron magnetic moment in J/T.
pub const NEUTRON_MAGNETIC_MOMENT: f64 = -9.662_365_1e-27;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("weak values diverge in dark port {port} (p = {probability:e})")]
    DivergentWeakValue { port: Port, probability: f64 },
    #[error("port {port} amplitude vanishes after coupling; no compensation angle exists")]
    VanishingAmplitude { port: Port },
    #[error("weak values are complex (chi = {chi}); this quantity needs chi = 0 or pi")]
    ComplexWeakValues { chi: f64 },
    #[error("coupling angle must be nonzero")]
    ZeroCoupling,
}

/// Measurement performed after the coupling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementContext {
    /// Exit ports `|±⟩` of the recombined beams.
    Interference,
    /// Path eigenbasis, realized by blocking one path.
    #[serde(rename = "whichway")]
    WhichWay,
}

/// Final outcome of a measurement in either context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "port")]
    Port(Port),
    #[serde(rename = "path")]
    Path(Path),
}

impl Outcome {
    pub fn for_context(context: MeasurementContext) -> [Outcome; 2] {
        match context {
            MeasurementContext::Interference => [Outcome::Port(Port::Plus), Outcome::Port(Port::Minus)],
            MeasurementContext::WhichWay => [Outcome::Path(Path::One), Outcome::Path(Path::Two)],
        }
    }

    pub fn label(&self) -> String {
        match self {
            Outcome::Port(p) => format!("port{p}"),
            Outcome::Path(p) => format!("path{p}"),
        }
    }
}

/// Weak value of a path projector for post-selection in one exit port.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakValue {
    pub value: Complex64,
    pub path: Path,
    pub port: Port,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompensationSolution {
    /// Optimal compensation `β₀`; complex when the weak values are.
    pub beta0: Complex64,
    /// Oscillation amplitude `A` of the spin amplitudes versus `β`.
    pub amplitude: Complex64,
}

impl CompensationSolution {
    /// Best real compensation angle.
    pub fn optimal_beta(&self) -> f64 {
        self.beta0.re
    }

    /// Largest `⟨σx⟩` reachable with a real compensation.
    pub fn max_sigma_x(&self) -> f64 {
        1.0 / self.beta0.im.cosh()
    }
}

/// Outcome-dependent estimates `β±/α` of the path-1 presence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateAssignment {
    pub est_plus: f64,
    pub est_minus: f64,
}

impl EstimateAssignment {
    pub fn new(est_plus: f64, est_minus: f64) -> Self {
        Self { est_plus, est_minus }
    }

    /// Estimates implied by compensation angles `β±` at coupling `alpha`.
    pub fn from_compensation(beta_plus: f64, beta_minus: f64, alpha: f64) -> Result<Self, AnalyticError> {
        if alpha == 0.0 {
            return Err(AnalyticError::ZeroCoupling);
        }
        Ok(Self::new(beta_plus / alpha, beta_minus / alpha))
    }

    pub fn get(&self, port: Port) -> f64 {
        match port {
            Port::Plus => self.est_plus,
            Port::Minus => self.est_minus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpinVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresenceRow {
    pub outcome: Outcome,
    pub probability: f64,
    /// Presence in path 1 and path 2.
    pub presence: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresenceTable {
    pub context: MeasurementContext,
    pub rows: Vec<PresenceRow>,
    /// Probability-weighted presences; equal the path probabilities.
    pub average: [f64; 2],
    /// Spread of the presences, `Σ p (ω - ω̄)²`.
    pub variance: [f64; 2],
    /// Square root of `variance`.
    pub uncertainty: [f64; 2],
}

/// Port-unselected fringe `ν cos(β - β̄)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedFringe {
    pub value: f64,
    pub mean_phase: f64,
    pub visibility: f64,
}

/// `⟨±|ψ⟩`.
fn port_overlap(port: Port, cfg: &BeamConfig) -> Complex64 {
    let bra = cfg.exit_bra(port);
    bra[0] * cfg.a1() + bra[1] * cfg.a2()
}

/// `⟨±|Π_path|ψ⟩`.
fn projected_overlap(path: Path, port: Port, cfg: &BeamConfig) -> Complex64 {
    cfg.exit_bra(port)[path.index()] * cfg.amplitude(path)
}

fn require_real(cfg: &BeamConfig) -> Result<(), AnalyticError> {
    if cfg.chi().sin().abs() > DEFAULT_TOLERANCE {
        return Err(AnalyticError::ComplexWeakValues { chi: cfg.chi() });
    }
    Ok(())
}

/// `p± = ½ ± a₁a₂ cos χ`.
pub fn port_probability(port: Port, cfg: &BeamConfig) -> f64 {
    (0.5 + port.sign() * cfg.a1() * cfg.a2() * cfg.chi().cos()).clamp(0.0, 1.0)
}

/// `ω_{path,±} = ⟨±|Π_path|ψ⟩ / ⟨±|ψ⟩`.
///
/// For path 1 this is `1/(1 ± (a₂/a₁) e^{-iχ})` with the exit states
/// `(|1⟩ ± e^{iχ}|2⟩)/√2`; path 2 is the complement.
pub fn weak_value(path: Path, port: Port, cfg: &BeamConfig) -> Result<WeakValue, AnalyticError> {
    let probability = port_probability(port, cfg);
    if probability <= cfg.tolerance() {
        return Err(AnalyticError::DivergentWeakValue { port, probability });
    }
    let value = projected_overlap(path, port, cfg) / port_overlap(port, cfg);
    Ok(WeakValue { value, path, port })
}

fn weak_pair(port: Port, cfg: &BeamConfig) -> Result<(Complex64, Complex64), AnalyticError> {
    let w1 = weak_value(Path::One, port, cfg)?.value;
    Ok((w1, Complex64::new(1.0, 0.0) - w1))
}

/// Optimal compensation and oscillation amplitude for one exit port.
///
/// Solves `A sin(β₀/2) = ω₁ sin(α/2)`, `A cos(β₀/2) = ω₁ cos(α/2) + ω₂`. The
/// branch is the one continuous in `α` from `β₀ = 0` at `α = 0`.
pub fn compensation_solution(port: Port, alpha: f64, cfg: &BeamConfig) -> Result<CompensationSolution, AnalyticError> {
    let (w1, w2) = weak_pair(port, cfg)?;
    let (sin_h, cos_h) = (0.5 * alpha).sin_cos();
    let num = w1 * sin_h;
    let den = w1 * cos_h + w2;
    let i = Complex64::i();
    // den ± i·num = A e^{±iβ₀/2}
    let up = den + i * num;
    let down = den - i * num;
    if up.norm() < 1e-300 || down.norm() < 1e-300 {
        return Err(AnalyticError::VanishingAmplitude { port });
    }
    let beta0 = Complex64::new(up.arg() - down.arg(), down.norm().ln() - up.norm().ln());
    let amplitude = up * (-0.5 * i * beta0).exp();
    Ok(CompensationSolution { beta0, amplitude })
}

/// `A² = 1 - 4 ω₁ ω₂ sin²(α/4)`.
pub fn amplitude_squared(port: Port, alpha: f64, cfg: &BeamConfig) -> Result<Complex64, AnalyticError> {
    let (w1, w2) = weak_pair(port, cfg)?;
    Ok(1.0 - 4.0 * w1 * w2 * (0.25 * alpha).sin().powi(2))
}

/// First-order optimal compensation `Re(ω₁) α`.
pub fn series_beta0(port: Port, alpha: f64, cfg: &BeamConfig) -> Result<f64, AnalyticError> {
    Ok(weak_value(Path::One, port, cfg)?.value.re * alpha)
}

/// Second-order oscillation amplitude `1 - ½ ω₁ω₂ (α/2)²`.
pub fn series_amplitude(port: Port, alpha: f64, cfg: &BeamConfig) -> Result<Complex64, AnalyticError> {
    let (w1, w2) = weak_pair(port, cfg)?;
    Ok(1.0 - 0.5 * w1 * w2 * (0.5 * alpha).powi(2))
}

/// Detection probability in a port including the back-action of the coupling.
///
/// Equals `p± |A±|²` whenever the port is not dark; evaluated from the
/// amplitudes directly as `½ ± a₁a₂ cos χ cos(α/2)` so that it stays
/// defined for dark ports.
pub fn effective_port_probability(port: Port, alpha: f64, cfg: &BeamConfig) -> f64 {
    (0.5 + port.sign() * cfg.a1() * cfg.a2() * cfg.chi().cos() * (0.5 * alpha).cos()).clamp(0.0, 1.0)
}

/// Spin expectation values in a port after coupling `alpha` and compensation `beta`.
pub fn spin_expectations_analytic(port: Port, alpha: f64, beta: f64, cfg: &BeamConfig) -> Result<SpinVector, AnalyticError> {
    let sol = compensation_solution(port, alpha, cfg)?;
    Ok(spin_from_beta0(sol.beta0, beta))
}

pub(crate) fn spin_from_beta0(beta0: Complex64, beta: f64) -> SpinVector {
    let c = beta0.im.cosh();
    let d = beta0.re - beta;
    SpinVector { x: d.cos() / c, y: d.sin() / c, z: beta0.im.tanh() }
}

/// Variances of the ±1 spin outcomes, `p₊(1 - ⟨σ⟩)² + p₋(-1 - ⟨σ⟩)²`.
pub fn spin_variances_analytic(port: Port, alpha: f64, beta: f64, cfg: &BeamConfig) -> Result<SpinVector, AnalyticError> {
    let s = spin_expectations_analytic(port, alpha, beta, cfg)?;
    let var = |m: f64| {
        let p_up = 0.5 * (1.0 + m);
        let p_down = 0.5 * (1.0 - m);
        p_up * (1.0 - m).powi(2) + p_down * (-1.0 - m).powi(2)
    };
    Ok(SpinVector { x: var(s.x), y: var(s.y), z: var(s.z) })
}

/// Measurement error of the path-1 projector for the given estimates,
/// `ε² = Σ± p± |ω₁± - est±|²`.
///
/// A dark port contributes its limit `|⟨±|Π₁|ψ⟩|²`.
pub fn ozawa_error(est: &EstimateAssignment, cfg: &BeamConfig) -> f64 {
    Port::BOTH
        .iter()
        .map(|&port| match weak_value(Path::One, port, cfg) {
            Ok(w) => port_probability(port, cfg) * (w.value - est.get(port)).norm_sqr(),
            Err(_) => projected_overlap(Path::One, port, cfg).norm_sqr(),
        })
        .sum()
}

/// Second-order prediction of the compensated `⟨σx⟩` for a given error.
pub fn max_sigma_x_from_error(alpha: f64, eps2: f64) -> f64 {
    1.0 - 0.5 * alpha * alpha * eps2
}

/// Outcome probabilities and path presences in one measurement context.
pub fn presence_table(cfg: &BeamConfig, context: MeasurementContext) -> Result<PresenceTable, AnalyticError> {
    let mut rows = Vec::with_capacity(2);
    match context {
        MeasurementContext::Interference => {
            require_real(cfg)?;
            for port in Port::BOTH {
                let w1 = weak_value(Path::One, port, cfg)?.value.re;
                rows.push(PresenceRow {
                    outcome: Outcome::Port(port),
                    probability: port_probability(port, cfg),
                    presence: [w1, 1.0 - w1],
                });
            }
        }
        MeasurementContext::WhichWay => {
            for path in Path::BOTH {
                let mut presence = [0.0; 2];
                presence[path.index()] = 1.0;
                rows.push(PresenceRow {
                    outcome: Outcome::Path(path),
                    probability: cfg.path_probability(path),
                    presence,
                });
            }
        }
    }
    let average = [0, 1].map(|k| rows.iter().map(|r| r.probability * r.presence[k]).sum::<f64>());
    let variance = [0, 1].map(|k| {
        rows.iter()
            .map(|r| r.probability * (r.presence[k] - average[k]).powi(2))
            .sum::<f64>()
    });
    let uncertainty = variance.map(f64::sqrt);
    Ok(PresenceTable { context, rows, average, variance, uncertainty })
}

/// Outcome-averaged spin rotation `Σ p ω₁ α`.
pub fn mean_rotation(alpha: f64, cfg: &BeamConfig, context: MeasurementContext) -> Result<f64, AnalyticError> {
    let table = presence_table(cfg, context)?;
    Ok(table.rows.iter().map(|r| r.probability * r.presence[0] * alpha).sum())
}

/// `⟨σx⟩` averaged over both outcomes with a common compensation `beta`.
///
/// Interference context: `Σ p± cos(β - β₀±)` with the ideal port
/// probabilities as weights, folded into `ν± cos(β - β̄±)`. Which-way context:
/// `p₁ cos(α - β) + p₂ cos β = ν₁₂ cos(β - β̄₁₂)`.
pub fn averaged_sigma_x(alpha: f64, beta: f64, cfg: &BeamConfig, context: MeasurementContext) -> Result<AveragedFringe, AnalyticError> {
    let p1 = cfg.path_probability(Path::One);
    let p2 = cfg.path_probability(Path::Two);
    let (mean_phase, visibility) = match context {
        MeasurementContext::Interference => {
            require_real(cfg)?;
            let mut sin_sum = 0.0;
            let mut cos_sum = 0.0;
            let mut phases = [0.0; 2];
            for port in Port::BOTH {
                let p = port_probability(port, cfg);
                if p <= cfg.tolerance() {
                    continue;
                }
                let b0 = compensation_solution(port, alpha, cfg)?.beta0.re;
                phases[port.index()] = b0;
                sin_sum += p * b0.sin();
                cos_sum += p * b0.cos();
            }
            let spread = (p1 - p2).powi(2) / 2.0 * (1.0 - (phases[0] - phases[1]).cos());
            (sin_sum.atan2(cos_sum), (1.0 - spread).max(0.0).sqrt())
        }
        MeasurementContext::WhichWay => {
            let phase = (p1 * alpha.sin()).atan2(p2 + p1 * alpha.cos());
            let vis = (1.0 - 2.0 * p1 * p2 * (1.0 - alpha.cos())).max(0.0).sqrt();
            (phase, vis)
        }
    };
    Ok(AveragedFringe { value: visibility * (beta - mean_phase).cos(), mean_phase, visibility })
}

/// Conventional weak-measurement estimate of `ω₁` from uncompensated
/// spin components, `(⟨σy⟩ + i⟨σz⟩)/α`.
pub fn weak_measurement_estimate(sy: f64, sz: f64, alpha: f64) -> Result<Complex64, AnalyticError> {
    if alpha == 0.0 {
        return Err(AnalyticError::ZeroCoupling);
    }
    Ok(Complex64::new(sy, sz) / alpha)
}

/// Larmor precession angle `-2 μ B τ / ħ` in radians (SI units).
pub fn field_to_angle(field: f64, transit_time: f64, moment: f64) -> f64 {
    -2.0 * moment * field * transit_time / HBAR
}

/// Inverse of [`field_to_angle`] for the field strength.
pub fn angle_to_field(angle: f64, transit_time: f64, moment: f64) -> f64 {
    -angle * HBAR / (2.0 * moment * transit_time)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn four_to_one() -> BeamConfig {
        BeamConfig::from_intensity_ratio(4.0, 1.0, 0.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn weak_values_four_to_one() {
        let cfg = four_to_one();
        let w = |path, port| weak_value(path, port, &cfg).unwrap().value;
        assert!((w(Path::One, Port::Plus) - 2.0 / 3.0).norm() < 1e-12);
        assert!((w(Path::Two, Port::Plus) - 1.0 / 3.0).norm() < 1e-12);
        assert!((w(Path::One, Port::Minus) - 2.0).norm() < 1e-12);
        assert!((w(Path::Two, Port::Minus) + 1.0).norm() < 1e-12);
        let sym = BeamConfig::symmetric(0.0);
        assert!((weak_value(Path::One, Port::Plus, &sym).unwrap().value - 0.5).norm() < 1e-12);
    }

    #[test]
    fn dark_port_diverges() {
        let sym = BeamConfig::symmetric(0.0);
        for path in Path::BOTH {
            let err = weak_value(path, Port::Minus, &sym).unwrap_err();
            assert!(matches!(err, AnalyticError::DivergentWeakValue { port: Port::Minus, .. }));
        }
        assert!(compensation_solution(Port::Minus, 0.3, &sym).is_err());
    }

    #[test]
    fn port_probabilities() {
        let cfg = four_to_one();
        assert!(close(port_probability(Port::Plus, &cfg), 0.9, 1e-12));
        assert!(close(port_probability(Port::Minus, &cfg), 0.1, 1e-12));
        let quarter = cfg.with_chi(std::f64::consts::FRAC_PI_2);
        assert!(close(port_probability(Port::Plus, &quarter), 0.5, 1e-12));
        assert!(close(port_probability(Port::Minus, &BeamConfig::symmetric(0.0)), 0.0, 1e-12));
    }

    #[test]
    fn compensation_anchors() {
        let cfg = four_to_one();
        let plus = compensation_solution(Port::Plus, FRAC_PI_4, &cfg).unwrap();
        let minus = compensation_solution(Port::Minus, FRAC_PI_4, &cfg).unwrap();
        assert!(close(plus.beta0.re / FRAC_PI_4, 0.6686, 5e-4));
        assert!(close(minus.beta0.re / FRAC_PI_4, 1.8701, 1e-3));
        assert!(plus.beta0.im.abs() < 1e-12 && plus.amplitude.im.abs() < 1e-12);
        let zero = compensation_solution(Port::Plus, 0.0, &cfg).unwrap();
        assert!(zero.beta0.norm() < 1e-15);
        assert!((zero.amplitude - 1.0).norm() < 1e-15);
    }

    #[test]
    fn amplitude_matches_closed_square() {
        let cfg = four_to_one().with_chi(0.7);
        for port in Port::BOTH {
            let sol = compensation_solution(port, 1.1, &cfg).unwrap();
            let a2 = amplitude_squared(port, 1.1, &cfg).unwrap();
            assert!((sol.amplitude * sol.amplitude - a2).norm() < 1e-12);
        }
    }

    #[test]
    fn effective_probabilities() {
        let cfg = four_to_one();
        let plus = effective_port_probability(Port::Plus, FRAC_PI_4, &cfg);
        let minus = effective_port_probability(Port::Minus, FRAC_PI_4, &cfg);
        assert!(close(plus, 0.8696, 5e-5));
        assert!(close(minus, 0.1304, 5e-5));
        assert!(close(plus + minus, 1.0, 1e-15));
        for port in Port::BOTH {
            let a2 = amplitude_squared(port, FRAC_PI_4, &cfg).unwrap().re;
            assert!(close(effective_port_probability(port, FRAC_PI_4, &cfg), port_probability(port, &cfg) * a2, 1e-14));
            assert_eq!(effective_port_probability(port, 0.0, &cfg), port_probability(port, &cfg));
        }
    }

    #[test]
    fn perfect_compensation_spin() {
        let cfg = four_to_one();
        for port in Port::BOTH {
            let b0 = compensation_solution(port, FRAC_PI_4, &cfg).unwrap().beta0.re;
            let s = spin_expectations_analytic(port, FRAC_PI_4, b0, &cfg).unwrap();
            assert!(close(s.x, 1.0, 1e-12) && close(s.y, 0.0, 1e-12) && close(s.z, 0.0, 1e-12));
            let v = spin_variances_analytic(port, FRAC_PI_4, b0, &cfg).unwrap();
            assert!(close(v.x, 0.0, 1e-12) && close(v.y, 1.0, 1e-12) && close(v.z, 1.0, 1e-12));
        }
        let v0 = spin_variances_analytic(Port::Plus, 0.0, 0.0, &cfg).unwrap();
        assert_eq!(v0.as_array(), [0.0, 1.0, 1.0]);
    }

    #[test]
    fn single_path_fringe() {
        let cfg = BeamConfig::new(1.0, 0.0, 0.0).unwrap();
        let alpha = 0.6;
        for beta in [-1.0, 0.0, 0.4, 2.5] {
            let s = spin_expectations_analytic(Port::Plus, alpha, beta, &cfg).unwrap();
            assert!(close(s.x, (beta - alpha).cos(), 1e-14));
        }
    }

    #[test]
    fn variance_is_one_minus_square() {
        let cfg = four_to_one().with_chi(0.9);
        let s = spin_expectations_analytic(Port::Minus, 0.5, 0.2, &cfg).unwrap();
        let v = spin_variances_analytic(Port::Minus, 0.5, 0.2, &cfg).unwrap();
        for (m, var) in s.as_array().iter().zip(v.as_array()) {
            assert!(close(var, 1.0 - m * m, 1e-14));
        }
        // first-power cosh in the x variance disagrees once Im β₀ ≠ 0
        let b0 = compensation_solution(Port::Minus, 0.5, &cfg).unwrap().beta0;
        assert!(b0.im.abs() > 1e-3);
        let first_power = 1.0 - (b0.re - 0.2).cos().powi(2) / b0.im.cosh();
        assert!((first_power - v.x).abs() > 1e-6);
    }

    #[test]
    fn ozawa_values() {
        let cfg = four_to_one();
        assert!(ozawa_error(&EstimateAssignment::new(2.0 / 3.0, 2.0), &cfg) < 1e-15);
        assert!(close(ozawa_error(&EstimateAssignment::new(0.8, 0.8), &cfg), 0.16, 1e-12));
        assert!(close(ozawa_error(&EstimateAssignment::new(0.0, 0.0), &cfg), 0.8, 1e-12));
        let sym = BeamConfig::symmetric(0.0);
        // dark port contributes ½·a₁² = 1/4 regardless of its estimate
        assert!(close(ozawa_error(&EstimateAssignment::new(0.5, 7.0), &sym), 0.25, 1e-12));
    }

    #[test]
    fn sigma_x_from_error() {
        assert_eq!(max_sigma_x_from_error(0.3, 0.0), 1.0);
        assert!(close(max_sigma_x_from_error(FRAC_PI_4, 0.16), 0.95065, 1e-5));
        assert!(close(max_sigma_x_from_error(1e-9, 0.16), 1.0, 1e-15));
    }

    #[test]
    fn tables() {
        let cfg = four_to_one();
        let inter = presence_table(&cfg, MeasurementContext::Interference).unwrap();
        let expect = [(0.9, 2.0 / 3.0, 1.0 / 3.0), (0.1, 2.0, -1.0)];
        for (row, (p, w1, w2)) in inter.rows.iter().zip(expect) {
            assert!(close(row.probability, p, 1e-12));
            assert!(close(row.presence[0], w1, 1e-12));
            assert!(close(row.presence[1], w2, 1e-12));
        }
        let ww = presence_table(&cfg, MeasurementContext::WhichWay).unwrap();
        for t in [&inter, &ww] {
            assert!(close(t.average[0], 0.8, 1e-12) && close(t.average[1], 0.2, 1e-12));
            assert!(close(t.uncertainty[0], 0.4, 1e-12) && close(t.uncertainty[1], 0.4, 1e-12));
        }
        assert_eq!(ww.rows[0].presence, [1.0, 0.0]);
        assert_eq!(ww.rows[1].presence, [0.0, 1.0]);

        let sym = presence_table(&BeamConfig::symmetric(0.0), MeasurementContext::WhichWay).unwrap();
        assert!(close(sym.rows[0].probability, 0.5, 1e-15));
        assert!(close(sym.uncertainty[0], 0.5, 1e-15));
        assert!(presence_table(&BeamConfig::symmetric(0.0), MeasurementContext::Interference).is_err());
        assert!(presence_table(&cfg.with_chi(0.4), MeasurementContext::Interference).is_err());
    }

    #[test]
    fn mean_rotation_both_contexts() {
        let cfg = four_to_one();
        for ctx in [MeasurementContext::Interference, MeasurementContext::WhichWay] {
            assert!(close(mean_rotation(FRAC_PI_4, &cfg, ctx).unwrap(), std::f64::consts::PI / 5.0, 1e-12));
        }
        let single = BeamConfig::new(1.0, 0.0, 0.0).unwrap();
        assert!(close(mean_rotation(0.3, &single, MeasurementContext::WhichWay).unwrap(), 0.3, 1e-15));
    }

    #[test]
    fn averaged_fringe() {
        let cfg = four_to_one();
        let ww = averaged_sigma_x(FRAC_PI_4, 0.0, &cfg, MeasurementContext::WhichWay).unwrap();
        assert!(close(ww.visibility, (1.0 - 0.32 * (1.0 - FRAC_PI_4.cos())).sqrt(), 1e-15));
        assert!(close(ww.visibility, 0.9520, 1e-4));
        for ctx in [MeasurementContext::Interference, MeasurementContext::WhichWay] {
            let z = averaged_sigma_x(0.0, 0.0, &cfg, ctx).unwrap();
            assert!(close(z.visibility, 1.0, 1e-15) && close(z.mean_phase, 0.0, 1e-15));
        }
        // folded form equals the weighted sum of port fringes
        let beta = 0.4;
        let avg = averaged_sigma_x(FRAC_PI_8, beta, &cfg, MeasurementContext::Interference).unwrap();
        let direct: f64 = Port::BOTH
            .iter()
            .map(|&p| {
                let b0 = compensation_solution(p, FRAC_PI_8, &cfg).unwrap().beta0.re;
                port_probability(p, &cfg) * (beta - b0).cos()
            })
            .sum();
        assert!(close(avg.value, direct, 1e-14));
    }

    #[test]
    fn weak_measurement() {
        let cfg = four_to_one();
        let alpha = 1e-3;
        for (port, expect, tol) in [(Port::Plus, 2.0 / 3.0, 1e-4), (Port::Minus, 2.0, 1e-3)] {
            let s = spin_expectations_analytic(port, alpha, 0.0, &cfg).unwrap();
            let est = weak_measurement_estimate(s.y, s.z, alpha).unwrap();
            assert!((est - expect).norm() < tol, "{est}");
        }
        assert_eq!(weak_measurement_estimate(0.0, 0.0, 0.1).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(weak_measurement_estimate(0.1, 0.0, 0.0), Err(AnalyticError::ZeroCoupling));
    }

    #[test]
    fn field_conversion() {
        let mu = NEUTRON_MAGNETIC_MOMENT;
        assert_eq!(field_to_angle(0.0, 1e-4, mu), 0.0);
        let a = field_to_angle(1e-4, 2e-5, mu);
        assert!(close(field_to_angle(1e-4, 4e-5, mu), 2.0 * a, 1e-15 * a.abs()));
        let x = 0.731;
        let back = field_to_angle(angle_to_field(x, 3e-5, mu), 3e-5, mu);
        assert!(close(back, x, 1e-14));
    }

    #[test]
    fn wrapping() {
        assert!(close(wrap_angle(3.0 * PI), PI, 1e-12));
        assert!(close(wrap_angle(-PI), PI, 1e-12));
        assert!(close(wrap_angle(0.25), 0.25, 1e-15));
    }
}
