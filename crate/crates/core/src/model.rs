//! Parameter records, pulse envelopes and bath thermodynamics.
//!
//! Every quantity is dimensionless: rates are multiples of the 1 MHz reference
//! and times are measured in the reciprocal unit.

use crate::{Error, Result, C64};

/// Physical rates of the two-membrane, three-sub-cavity system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Modified detunings of the left, middle and right cavity modes.
    pub delta_l: f64,
    pub delta_m: f64,
    pub delta_r: f64,
    /// Mechanical frequencies of the two membranes.
    pub omega_m1: f64,
    pub omega_m2: f64,
    /// Single-photon optomechanical couplings.
    pub g1: f64,
    pub g2: f64,
    /// Tunneling through membrane 1 (L-M) and membrane 2 (M-R).
    pub j1: f64,
    pub j2: f64,
    /// Cavity energy decay rates.
    pub gamma_l: f64,
    pub gamma_m: f64,
    pub gamma_r: f64,
    /// Mechanical damping rates.
    pub gamma_m1: f64,
    pub gamma_m2: f64,
    /// Thermal occupancy of each membrane's bath.
    pub nbar1: f64,
    pub nbar2: f64,
}

impl SystemParams {
    /// Lossless parameter set of the eigenvalue study: resonant red-sideband
    /// drives, `g = 0.001`, `J = 1/2`, no decay.
    pub fn lossless() -> Self {
        SystemParams {
            delta_l: 1.0,
            delta_m: 1.0,
            delta_r: 1.0,
            omega_m1: 1.0,
            omega_m2: 1.0,
            g1: 1e-3,
            g2: 1e-3,
            j1: 0.5,
            j2: 0.5,
            gamma_l: 0.0,
            gamma_m: 0.0,
            gamma_r: 0.0,
            gamma_m1: 0.0,
            gamma_m2: 0.0,
            nbar1: 0.0,
            nbar2: 0.0,
        }
    }

    /// The lossless set with cavity decay 0.4 on every sub-cavity and
    /// mechanical damping 1e-4, vacuum baths.
    pub fn lossy() -> Self {
        SystemParams {
            gamma_l: 0.4,
            gamma_m: 0.4,
            gamma_r: 0.4,
            gamma_m1: 1e-4,
            gamma_m2: 1e-4,
            ..Self::lossless()
        }
    }

    /// Decay rates in mode order `(a_L, a_M, a_R, b_1, b_2)`.
    pub fn decays(&self) -> [f64; 5] {
        [self.gamma_l, self.gamma_m, self.gamma_r, self.gamma_m1, self.gamma_m2]
    }

    /// Copy with every decay rate multiplied by `factor`.
    pub fn with_decays_scaled(&self, factor: f64) -> Self {
        SystemParams {
            gamma_l: self.gamma_l * factor,
            gamma_m: self.gamma_m * factor,
            gamma_r: self.gamma_r * factor,
            gamma_m1: self.gamma_m1 * factor,
            gamma_m2: self.gamma_m2 * factor,
            ..*self
        }
    }

    pub fn without_decay(&self) -> Self {
        self.with_decays_scaled(0.0)
    }

    pub fn is_decay_free(&self) -> bool {
        self.decays().iter().all(|&g| g == 0.0)
    }

    fn named_values(&self) -> [(&'static str, f64); 16] {
        [
            ("delta_L", self.delta_l),
            ("delta_M", self.delta_m),
            ("delta_R", self.delta_r),
            ("omega_m1", self.omega_m1),
            ("omega_m2", self.omega_m2),
            ("g1", self.g1),
            ("g2", self.g2),
            ("J1", self.j1),
            ("J2", self.j2),
            ("gamma_L", self.gamma_l),
            ("gamma_M", self.gamma_m),
            ("gamma_R", self.gamma_r),
            ("gamma_m1", self.gamma_m1),
            ("gamma_m2", self.gamma_m2),
            ("nbar1", self.nbar1),
            ("nbar2", self.nbar2),
        ]
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::lossy()
    }
}

/// Gaussian drive sequence and the integration window.
///
/// The right drive peaks at `-half_delay` and the left drive at `+half_delay`,
/// so for a positive delay the right pulse comes first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule {
    pub amplitude: f64,
    pub width: f64,
    pub half_delay: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl PulseSchedule {
    /// Schedule with the default window `[-5T, 5T]`.
    pub fn new(amplitude: f64, width: f64, half_delay: f64) -> Self {
        PulseSchedule {
            amplitude,
            width,
            half_delay,
            t_start: -5.0 * width,
            t_end: 5.0 * width,
        }
    }

    /// `A = 350`, `T = 3`, `tau = 1` on `[-15, 15]`.
    pub fn reference() -> Self {
        Self::new(350.0, 3.0, 1.0)
    }

    pub fn with_window(self, t_start: f64, t_end: f64) -> Self {
        PulseSchedule { t_start, t_end, ..self }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        PulseSchedule { amplitude, ..self }
    }

    /// `n` equally spaced times spanning the window, endpoints included.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        uniform_grid(self.t_start, self.t_end, n)
    }

    /// The three drive amplitudes `(Omega_L, Omega_M, Omega_R)` at time `t`,
    /// with the middle drive synthesised from the outer two.
    pub fn drives(&self, params: &SystemParams, t: f64) -> Result<Drives> {
        Ok(Drives {
            left: pulse_left(self, t).into(),
            middle: pulse_middle(params, self, t)?.into(),
            right: pulse_right(self, t).into(),
        })
    }
}

impl Default for PulseSchedule {
    fn default() -> Self {
        Self::reference()
    }
}

/// Drive amplitudes on the three sub-cavities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drives {
    pub left: C64,
    pub middle: C64,
    pub right: C64,
}

impl Drives {
    pub fn scaled(self, factor: f64) -> Self {
        Drives {
            left: self.left * factor,
            middle: self.middle * factor,
            right: self.right * factor,
        }
    }
}

pub fn uniform_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { end } else { start + step * k as f64 })
                .collect()
        }
    }
}

/// `A exp[-(t - tau)^2 / T^2]`.
pub fn pulse_left(schedule: &PulseSchedule, t: f64) -> f64 {
    gaussian(schedule, t - schedule.half_delay)
}

/// `A exp[-(t + tau)^2 / T^2]`.
pub fn pulse_right(schedule: &PulseSchedule, t: f64) -> f64 {
    gaussian(schedule, t + schedule.half_delay)
}

fn gaussian(schedule: &PulseSchedule, offset: f64) -> f64 {
    let x = offset / schedule.width;
    schedule.amplitude * (-x * x).exp()
}

/// Middle drive `J1 Omega_L / (-Delta_L) + J2 Omega_R / (-Delta_R)`, which
/// cancels the middle-mode amplitude in the decay-free steady state.
pub fn pulse_middle(params: &SystemParams, schedule: &PulseSchedule, t: f64) -> Result<f64> {
    if params.delta_l == 0.0 {
        return Err(Error::ZeroDetuning("left"));
    }
    if params.delta_r == 0.0 {
        return Err(Error::ZeroDetuning("right"));
    }
    Ok(params.j1 * pulse_left(schedule, t) / -params.delta_l
        + params.j2 * pulse_right(schedule, t) / -params.delta_r)
}

/// Bose-Einstein occupancy `1 / (exp(ratio) - 1)` for `ratio = hbar omega / (k_B T)`.
///
/// `ratio = +inf` is the zero-temperature limit and returns 0.
pub fn thermal_occupancy(ratio: f64) -> Result<f64> {
    if ratio.is_nan() || ratio <= 0.0 {
        return Err(Error::NonpositiveRatio(ratio));
    }
    Ok(1.0 / ratio.exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

/// Outcome of [`validate_params`]. An empty report means every check passed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    fn error(&mut self, code: &'static str, message: String) {
        self.findings.push(Finding { severity: Severity::Error, code, message });
    }

    fn warning(&mut self, code: &'static str, message: String) {
        self.findings.push(Finding { severity: Severity::Warning, code, message });
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn has_warnings(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Warning)
    }

    pub fn contains(&self, code: &str) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }

    /// Whether a run may proceed. In strict mode warnings count as errors.
    pub fn passes(&self, strict: bool) -> bool {
        !self.has_errors() && !(strict && self.has_warnings())
    }

    /// Copy of the report with every warning promoted to an error.
    pub fn strict(&self) -> Self {
        ValidationReport {
            findings: self
                .findings
                .iter()
                .cloned()
                .map(|f| Finding { severity: Severity::Error, ..f })
                .collect(),
        }
    }
}

const RESONANCE_TOL: f64 = 1e-9;

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= RESONANCE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Check parameter sanity and the approximations the model relies on.
///
/// Hard problems (non-finite or out-of-range values) are errors; broken
/// red-sideband resonance, broken `J = omega_m / 2`, and marginal weak
/// coupling are warnings. Nothing is raised: callers decide.
pub fn validate_params(params: &SystemParams, schedule: &PulseSchedule) -> ValidationReport {
    let mut report = ValidationReport::default();

    for (name, value) in params.named_values() {
        if !value.is_finite() {
            report.error("NON_FINITE", format!("{name} must be finite, got {value}"));
        }
    }
    for (name, value) in [
        ("A", schedule.amplitude),
        ("T", schedule.width),
        ("tau", schedule.half_delay),
        ("t_start", schedule.t_start),
        ("t_end", schedule.t_end),
    ] {
        if !value.is_finite() {
            report.error("NON_FINITE", format!("{name} must be finite, got {value}"));
        }
    }
    if report.has_errors() {
        return report;
    }

    for (name, value) in [("omega_m1", params.omega_m1), ("omega_m2", params.omega_m2)] {
        if value <= 0.0 {
            report.error("NONPOSITIVE_FREQUENCY", format!("{name} must be positive, got {value}"));
        }
    }
    for (name, value) in params.named_values().into_iter().skip(9) {
        if value < 0.0 {
            report.error("NEGATIVE_VALUE", format!("{name} must be non-negative, got {value}"));
        }
    }
    if schedule.amplitude < 0.0 {
        report.error("INVALID_SCHEDULE", format!("A must be non-negative, got {}", schedule.amplitude));
    }
    if schedule.width <= 0.0 {
        report.error("INVALID_SCHEDULE", format!("T must be positive, got {}", schedule.width));
    }
    if schedule.t_start >= schedule.t_end {
        report.error(
            "INVALID_SCHEDULE",
            format!("t_start ({}) must precede t_end ({})", schedule.t_start, schedule.t_end),
        );
    }
    if params.delta_l == 0.0 || params.delta_r == 0.0 {
        report.error("ZERO_DETUNING", "outer detunings must be non-zero".to_string());
    }
    if report.has_errors() {
        return report;
    }

    let detunings = [("delta_L", params.delta_l), ("delta_M", params.delta_m), ("delta_R", params.delta_r)];
    let mechanical = [("omega_m1", params.omega_m1), ("omega_m2", params.omega_m2)];
    for (dn, d) in detunings {
        for (wn, w) in mechanical {
            if !nearly_equal(d, w) {
                report.warning(
                    "RESONANCE",
                    format!("red-sideband resonance broken: {dn} = {d} but {wn} = {w}"),
                );
            }
        }
    }

    for (jn, j, wn, w) in [("J1", params.j1, "omega_m1", params.omega_m1), ("J2", params.j2, "omega_m2", params.omega_m2)] {
        if !nearly_equal(j, 0.5 * w) {
            report.warning(
                "LINEAR_COUPLING",
                format!("{jn} = {j} differs from {wn}/2 = {}", 0.5 * w),
            );
        }
    }

    let coupling_1 = params.g1.abs() * schedule.amplitude / params.delta_l.abs();
    let coupling_2 = params.g2.abs() * schedule.amplitude / params.delta_r.abs();
    let strongest = coupling_1.max(coupling_2);
    let limit = 0.5 * params.omega_m1.min(params.omega_m2);
    if strongest >= limit {
        report.warning(
            "WEAK_COUPLING",
            format!("peak effective coupling {strongest} is not small against omega_m (limit {limit})"),
        );
    }

    report
}
