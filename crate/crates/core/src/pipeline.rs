//! One full run: mean field, moment propagation and spectrum on a common grid,
//! reduced to the figures of merit used by sweeps and the command line.

use crate::dynamics::{propagate_moments, transfer_efficiency, MomentMatrix, MomentTrajectory, A_M};
use crate::meanfield::{dynamic_trajectory, quasistatic_trajectory, steady_state, MeanFieldMode, MeanFieldTrajectory};
use crate::model::{validate_params, PulseSchedule, SystemParams, ValidationReport};
use crate::spectral::{spectral_trajectory, ShiftConvention, SpectralTrajectory};
use crate::{Error, Result, MODES};

pub const DEFAULT_POINTS: usize = 601;
pub const DEFAULT_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: SystemParams,
    pub schedule: PulseSchedule,
    pub n_points: usize,
    pub rtol: f64,
    pub initial: [f64; MODES],
    pub mean_field: MeanFieldMode,
    pub shift: ShiftConvention,
}

impl Default for Scenario {
    /// Lossy reference run: one phonon in the first membrane on `[-15, 15]`.
    fn default() -> Self {
        Scenario {
            params: SystemParams::lossy(),
            schedule: PulseSchedule::reference(),
            n_points: DEFAULT_POINTS,
            rtol: DEFAULT_RTOL,
            initial: [0.0, 0.0, 0.0, 1.0, 0.0],
            mean_field: MeanFieldMode::QuasiStatic,
            shift: ShiftConvention::Normalized,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> ValidationReport {
        validate_params(&self.params, &self.schedule)
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        if self.n_points < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 grid points, got {}", self.n_points)));
        }
        Ok(self.schedule.grid(self.n_points))
    }

    /// Mean field on the grid; a dynamic run starts from the steady state at
    /// the first grid time.
    pub fn mean_field(&self) -> Result<MeanFieldTrajectory> {
        let grid = self.grid()?;
        match self.mean_field {
            MeanFieldMode::QuasiStatic => quasistatic_trajectory(&self.params, &self.schedule, &grid),
            MeanFieldMode::Dynamic => {
                let start = steady_state(&self.params, &self.schedule.drives(&self.params, grid[0])?)
                    .map_err(|e| e.with_time(grid[0]))?;
                dynamic_trajectory(&self.params, &self.schedule, &grid, &start, self.rtol)
            }
        }
    }

    pub fn moments(&self, mft: &MeanFieldTrajectory) -> Result<MomentTrajectory> {
        let n0 = MomentMatrix::from_occupancies(self.initial)?;
        propagate_moments(&self.params, &self.schedule, mft, &n0, self.rtol)
    }

    pub fn spectrum(&self, mft: &MeanFieldTrajectory) -> Result<SpectralTrajectory> {
        spectral_trajectory(&self.params, &self.schedule, mft, self.shift)
    }
}

/// Figures of merit of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Transfer efficiency `n_b2(end) / n_b1(start)`.
    pub eta: f64,
    /// Largest middle-cavity occupancy along the run.
    pub peak_n_am: f64,
    /// Smallest dark-branch gap inside the adiabatic window.
    pub min_gap: Option<f64>,
    /// Time integral of `|lambda'_1|`.
    pub integrated_shift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub mean_field: MeanFieldTrajectory,
    pub moments: MomentTrajectory,
    pub spectrum: SpectralTrajectory,
    pub metrics: Metrics,
}

/// Run the full pipeline. Validation errors abort the run; warnings do not.
pub fn simulate(scenario: &Scenario) -> Result<Simulation> {
    let report = scenario.validate();
    if report.has_errors() {
        let messages: Vec<&str> = report.findings.iter().map(|f| f.message.as_str()).collect();
        return Err(Error::InvalidInput(messages.join("; ")));
    }
    let mean_field = scenario.mean_field()?;
    let moments = scenario.moments(&mean_field)?;
    let spectrum = scenario.spectrum(&mean_field)?;
    let metrics = Metrics {
        eta: transfer_efficiency(&moments)?,
        peak_n_am: moments.peak(A_M),
        min_gap: spectrum.min_adiabatic_gap(),
        integrated_shift: spectrum.integrated_shift(),
    };
    Ok(Simulation { mean_field, moments, spectrum, metrics })
}
