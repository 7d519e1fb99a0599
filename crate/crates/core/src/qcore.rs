//! Exact state-vector mechanics on the path ⊗ spin space.
//!
//! The space is fixed at two interferometer paths times a spin-1/2 probe,
//! i.e. four complex amplitudes. Spin amplitudes are stored in the z basis
//! with index 0 = ↑ and 1 = ↓.
//!
//! Rotation convention: `U_z(θ)|↑⟩ = e^{-iθ/2}|↑⟩`, `U_z(θ)|↓⟩ = e^{+iθ/2}|↓⟩`.
//! With the standard Pauli matrices this makes a positive rotation of
//! `|s_x+⟩` turn the Bloch vector from +x towards +y.
//!
//! States are allowed to be sub-normalized: projection and path blocking
//! return unnormalized states whose squared norm is the corresponding
//! probability, and expectation values normalize internally.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance for exact-algebra checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Squared norms below this are treated as the zero state.
pub const ZERO_NORM_SQR: f64 = 1e-24;

pub type ComplexAmp = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcoreError {
    #[error("invalid beam config: {0}")]
    InvalidConfig(String),
    #[error("spin expectation undefined for zero-norm state (norm² = {norm_sqr:e})")]
    UndefinedExpectation { norm_sqr: f64 },
}

/// Interferometer path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Path {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Path {
    pub const BOTH: [Path; 2] = [Path::One, Path::Two];

    pub fn index(self) -> usize {
        match self {
            Path::One => 0,
            Path::Two => 1,
        }
    }

    pub fn other(self) -> Path {
        match self {
            Path::One => Path::Two,
            Path::Two => Path::One,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Exit port of the recombining beam splitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Port {
    pub const BOTH: [Port; 2] = [Port::Plus, Port::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Port::Plus => 1.0,
            Port::Minus => -1.0,
        }
    }

    pub fn other(self) -> Port {
        match self {
            Port::Plus => Port::Minus,
            Port::Minus => Port::Plus,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Port::Plus => 0,
            Port::Minus => 1,
        }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Port::Plus => "+",
            Port::Minus => "-",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

impl SpinAxis {
    pub const ALL: [SpinAxis; 3] = [SpinAxis::X, SpinAxis::Y, SpinAxis::Z];
}

/// Beam-splitter amplitudes and the relative phase between the two paths.
///
/// `a1`, `a2` are real, non-negative and normalized. The exit states are
/// `|±⟩ = (|1⟩ ± e^{iχ}|2⟩)/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBeamConfig")]
pub struct BeamConfig {
    a1: f64,
    a2: f64,
    chi: f64,
    #[serde(skip)]
    tolerance: f64,
}

#[derive(Deserialize)]
struct RawBeamConfig {
    a1: f64,
    a2: f64,
    chi: f64,
}

impl TryFrom<RawBeamConfig> for BeamConfig {
    type Error = QcoreError;

    fn try_from(raw: RawBeamConfig) -> Result<Self, Self::Error> {
        BeamConfig::new(raw.a1, raw.a2, raw.chi)
    }
}

impl BeamConfig {
    pub fn new(a1: f64, a2: f64, chi: f64) -> Result<Self, QcoreError> {
        Self::with_tolerance(a1, a2, chi, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(a1: f64, a2: f64, chi: f64, tolerance: f64) -> Result<Self, QcoreError> {
        if !(a1.is_finite() && a2.is_finite() && chi.is_finite()) {
            return Err(QcoreError::InvalidConfig("non-finite parameter".into()));
        }
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(QcoreError::InvalidConfig(format!("bad tolerance {tolerance}")));
        }
        if a1 < 0.0 || a2 < 0.0 {
            return Err(QcoreError::InvalidConfig(format!(
                "amplitudes must be non-negative (a1 = {a1}, a2 = {a2})"
            )));
        }
        let norm = a1 * a1 + a2 * a2;
        if (norm - 1.0).abs() > tolerance {
            return Err(QcoreError::InvalidConfig(format!(
                "a1² + a2² = {norm} deviates from 1 by more than {tolerance:e}"
            )));
        }
        Ok(Self { a1, a2, chi, tolerance })
    }

    /// Splitter with intensity ratio `r1 : r2` between path 1 and path 2.
    pub fn from_intensity_ratio(r1: f64, r2: f64, chi: f64) -> Result<Self, QcoreError> {
        let total = r1 + r2;
        if !(r1 >= 0.0 && r2 >= 0.0 && total > 0.0 && total.is_finite()) {
            return Err(QcoreError::InvalidConfig(format!("bad intensity ratio {r1}:{r2}")));
        }
        Self::new((r1 / total).sqrt(), (r2 / total).sqrt(), chi)
    }

    pub fn symmetric(chi: f64) -> Self {
        Self { a1: FRAC_1_SQRT_2, a2: FRAC_1_SQRT_2, chi, tolerance: DEFAULT_TOLERANCE }
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn amplitude(&self, path: Path) -> f64 {
        match path {
            Path::One => self.a1,
            Path::Two => self.a2,
        }
    }

    /// Probability of finding the particle in `path` if it were measured there.
    pub fn path_probability(&self, path: Path) -> f64 {
        let a = self.amplitude(path);
        a * a
    }

    pub fn with_chi(&self, chi: f64) -> Self {
        Self { chi, ..*self }
    }

    /// Components of `⟨±|` in the path basis: `⟨±| = (⟨1| ± e^{-iχ}⟨2|)/√2`.
    pub fn exit_bra(&self, port: Port) -> [Complex64; 2] {
        let s = FRAC_1_SQRT_2;
        [
            Complex64::new(s, 0.0),
            Complex64::from_polar(port.sign() * s, -self.chi),
        ]
    }
}

/// Pure (possibly sub-normalized) state on path ⊗ spin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeState {
    /// `amp[path][spin]`, spin index 0 = ↑, 1 = ↓.
    amp: [[Complex64; 2]; 2],
}

impl CompositeState {
    pub fn zero() -> Self {
        Self { amp: [[Complex64::new(0.0, 0.0); 2]; 2] }
    }

    pub fn from_amplitudes(amp: [[Complex64; 2]; 2]) -> Self {
        Self { amp }
    }

    pub fn amplitudes(&self) -> &[[Complex64; 2]; 2] {
        &self.amp
    }

    pub fn amp(&self, path: Path, spin: usize) -> Complex64 {
        self.amp[path.index()][spin]
    }

    /// Spinor carried by one path component.
    pub fn path_component(&self, path: Path) -> [Complex64; 2] {
        self.amp[path.index()]
    }

    /// Flattened vector in `path * 2 + spin` order.
    pub fn to_vec4(&self) -> [Complex64; 4] {
        [self.amp[0][0], self.amp[0][1], self.amp[1][0], self.amp[1][1]]
    }

    pub fn from_vec4(v: [Complex64; 4]) -> Self {
        Self { amp: [[v[0], v[1]], [v[2], v[3]]] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    /// Largest componentwise distance to another state.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_vec4()
            .iter()
            .zip(other.to_vec4().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Reduced spin density matrix (unnormalized), `ρ_ij = Σ_path c_i c_j*`.
    pub fn spin_density(&self) -> [[Complex64; 2]; 2] {
        let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
        for spinor in &self.amp {
            for i in 0..2 {
                for j in 0..2 {
                    rho[i][j] += spinor[i] * spinor[j].conj();
                }
            }
        }
        rho
    }

    fn map_spinors(&self, f: impl Fn(usize, [Complex64; 2]) -> [Complex64; 2]) -> Self {
        Self { amp: [f(0, self.amp[0]), f(1, self.amp[1])] }
    }
}

/// `|s_x+⟩ = (|↑⟩ + |↓⟩)/√2`.
pub fn spin_x_plus() -> [Complex64; 2] {
    [Complex64::new(FRAC_1_SQRT_2, 0.0); 2]
}

/// Eigenvector of `σ_axis` with eigenvalue `sign` (±1) in the z basis.
pub fn spin_eigenstate(axis: SpinAxis, positive: bool) -> [Complex64; 2] {
    let s = FRAC_1_SQRT_2;
    let sign = if positive { 1.0 } else { -1.0 };
    match axis {
        SpinAxis::X => [Complex64::new(s, 0.0), Complex64::new(sign * s, 0.0)],
        SpinAxis::Y => [Complex64::new(s, 0.0), Complex64::new(0.0, sign * s)],
        SpinAxis::Z => {
            if positive {
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
            } else {
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
            }
        }
    }
}

/// Rotate a spinor by `theta` about z.
pub fn rotate_z(spinor: [Complex64; 2], theta: f64) -> [Complex64; 2] {
    [
        spinor[0] * Complex64::from_polar(1.0, -0.5 * theta),
        spinor[1] * Complex64::from_polar(1.0, 0.5 * theta),
    ]
}

/// `a₁|1⟩|s_x+⟩ + a₂|2⟩|s_x+⟩`.
pub fn prepare_initial(cfg: &BeamConfig) -> CompositeState {
    let sx = spin_x_plus();
    CompositeState {
        amp: [
            [sx[0] * cfg.a1, sx[1] * cfg.a1],
            [sx[0] * cfg.a2, sx[1] * cfg.a2],
        ],
    }
}

/// Path-conditional coupling: rotates the spin of the path-1 component by
/// `alpha` about z and leaves path 2 untouched.
pub fn apply_coupling(state: &CompositeState, alpha: f64) -> CompositeState {
    state.map_spinors(|p, s| if p == 0 { rotate_z(s, alpha) } else { s })
}

/// Compensation `U_z(-beta)` on the spin of both path components.
pub fn apply_compensation(state: &CompositeState, beta: f64) -> CompositeState {
    state.map_spinors(|_, s| rotate_z(s, -beta))
}

/// Applies `|±⟩⟨±| ⊗ 1_spin`.
pub fn project_exit(state: &CompositeState, port: Port, cfg: &BeamConfig) -> CompositeState {
    let bra = cfg.exit_bra(port);
    // |±⟩ components are the conjugates of the bra components
    let ket = [bra[0].conj(), bra[1].conj()];
    let overlap = [
        bra[0] * state.amp[0][0] + bra[1] * state.amp[1][0],
        bra[0] * state.amp[0][1] + bra[1] * state.amp[1][1],
    ];
    CompositeState {
        amp: [
            [ket[0] * overlap[0], ket[0] * overlap[1]],
            [ket[1] * overlap[0], ket[1] * overlap[1]],
        ],
    }
}

/// Zeroes the amplitudes of the blocked path.
pub fn block_path(state: &CompositeState, blocked: Path) -> CompositeState {
    let mut out = *state;
    out.amp[blocked.index()] = [Complex64::new(0.0, 0.0); 2];
    out
}

/// Unnormalized probability that a spin analysis along `axis` yields `±1`.
pub fn spin_projection_probability(state: &CompositeState, axis: SpinAxis, positive: bool) -> f64 {
    let e = spin_eigenstate(axis, positive);
    state
        .amp
        .iter()
        .map(|s| (e[0].conj() * s[0] + e[1].conj() * s[1]).norm_sqr())
        .sum()
}

/// `⟨σ_axis⟩` of the normalized reduced spin state.
pub fn spin_expectation(state: &CompositeState, axis: SpinAxis) -> Result<f64, QcoreError> {
    let norm_sqr = state.norm_sqr();
    if norm_sqr < ZERO_NORM_SQR {
        return Err(QcoreError::UndefinedExpectation { norm_sqr });
    }
    let rho = state.spin_density();
    let raw = match axis {
        SpinAxis::X => 2.0 * rho[1][0].re,
        SpinAxis::Y => 2.0 * rho[1][0].im,
        SpinAxis::Z => rho[0][0].re - rho[1][1].re,
    };
    Ok((raw / norm_sqr).clamp(-1.0, 1.0))
}

/// Bloch vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)`.
pub fn bloch_vector(state: &CompositeState) -> Result<[f64; 3], QcoreError> {
    Ok([
        spin_expectation(state, SpinAxis::X)?,
        spin_expectation(state, SpinAxis::Y)?,
        spin_expectation(state, SpinAxis::Z)?,
    ])
}

/// Full interference-context chain: prepare, couple, select `port`, compensate.
pub fn port_pipeline(cfg: &BeamConfig, alpha: f64, port: Port, beta: f64) -> CompositeState {
    let coupled = apply_coupling(&prepare_initial(cfg), alpha);
    apply_compensation(&project_exit(&coupled, port, cfg), beta)
}

/// Which-way chain: prepare, couple, block one path, compensate.
pub fn blocked_pipeline(cfg: &BeamConfig, alpha: f64, blocked: Path, beta: f64) -> CompositeState {
    let coupled = apply_coupling(&prepare_initial(cfg), alpha);
    apply_compensation(&block_path(&coupled, blocked), beta)
}

/// Common compensation without distinguishing outcomes.
pub fn unselected_pipeline(cfg: &BeamConfig, alpha: f64, beta: f64) -> CompositeState {
    apply_compensation(&apply_coupling(&prepare_initial(cfg), alpha), beta)
}
