//! Fluctuation dynamics: the coupling matrix `M` of `i dF/dt = M F + noise`
//! over `F = (da_L, da_M, da_R, db_1, db_2)` and propagation of the
//! normal-ordered second moments `N_ij = <dF_i^dag dF_j>`.
//!
//! For a linear Langevin system the moments close exactly:
//!
//! ```text
//! dN/dt = i (conj(M) N - N M^T) + D
//! ```
//!
//! with `D = diag(0, 0, 0, gamma_m1 nbar_1, gamma_m2 nbar_2)` (vacuum optical
//! inputs do not contribute to normal-ordered moments).

use crate::meanfield::{
    check_grid, dynamic_trajectory, mean_field_rhs, cavity_matrix, MeanField, MeanFieldMode,
    MeanFieldTrajectory, SteadyStateSolver,
};
use crate::model::{PulseSchedule, SystemParams};
use crate::ode::{DormandPrince, OdeState};
use crate::{Error, Mat5, Result, Vec5, C64, MODES};
use nalgebra::SMatrix;

const I: C64 = C64::new(0.0, 1.0);

/// Hermiticity / positivity slack accepted on input moment matrices.
pub const MOMENT_TOL: f64 = 1e-10;
/// Smallest eigenvalue below which a propagation is declared unstable.
pub const PSD_FAILURE: f64 = -1e-6;
/// Occupancies in `[-OCCUPANCY_CLAMP, 0)` are clamped to zero.
pub const OCCUPANCY_CLAMP: f64 = 1e-10;

/// Mode indices.
pub const A_L: usize = 0;
pub const A_M: usize = 1;
pub const A_R: usize = 2;
pub const B_1: usize = 3;
pub const B_2: usize = 4;

/// Instantaneous fluctuation coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMatrix(pub Mat5);

impl CouplingMatrix {
    pub fn matrix(&self) -> &Mat5 {
        &self.0
    }

    /// The decay-free part (diagonal removed).
    pub fn without_decay(&self) -> Mat5 {
        let mut m = self.0;
        m.fill_diagonal(C64::from(0.0));
        m
    }
}

/// Build `M` from the rates and the instantaneous mean field.
///
/// The upper triangle carries `g alpha` as written for the fluctuation
/// equations; the lower triangle carries the conjugate couplings that the
/// linearised beam-splitter Hamiltonian produces, so the decay-free part is
/// Hermitian for any phase of `alpha` and real symmetric for real `alpha`.
pub fn build_coupling_matrix(params: &SystemParams, mf: &MeanField) -> CouplingMatrix {
    let mut m = Mat5::zeros();
    for (i, gamma) in params.decays().into_iter().enumerate() {
        m[(i, i)] = C64::new(0.0, -0.5 * gamma);
    }
    let mut link = |i: usize, j: usize, value: C64| {
        m[(i, j)] = value;
        m[(j, i)] = value.conj();
    };
    link(A_L, A_M, C64::from(-params.j1));
    link(A_M, A_R, C64::from(-params.j2));
    link(A_L, B_1, -mf.alpha_l * params.g1);
    link(A_M, B_1, mf.alpha_m * params.g1);
    link(A_M, B_2, -mf.alpha_m * params.g2);
    link(A_R, B_2, mf.alpha_r * params.g2);
    CouplingMatrix(m)
}

/// Diagonal diffusion of the normal-ordered moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix(pub [f64; MODES]);

impl DiffusionMatrix {
    pub fn diagonal(&self) -> &[f64; MODES] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&d| d == 0.0)
    }

    pub fn to_matrix(&self) -> Mat5 {
        Mat5::from_diagonal(&Vec5::from_iterator(self.0.iter().map(|&d| C64::from(d))))
    }
}

pub fn build_diffusion(params: &SystemParams) -> DiffusionMatrix {
    DiffusionMatrix([
        0.0,
        0.0,
        0.0,
        params.gamma_m1 * params.nbar1,
        params.gamma_m2 * params.nbar2,
    ])
}

/// Normal-ordered second moments `N_ij = <dF_i^dag dF_j>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentMatrix(Mat5);

impl MomentMatrix {
    /// Validate Hermiticity and positivity (both to `MOMENT_TOL`).
    pub fn new(m: Mat5) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("moment matrix has non-finite entries".into()));
        }
        let asym = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > MOMENT_TOL {
            return Err(Error::InvalidInput(format!("moment matrix is not Hermitian (defect {asym:e})")));
        }
        let n = MomentMatrix(m).hermitized();
        let min = n.min_eigenvalue();
        if min < -MOMENT_TOL {
            return Err(Error::InvalidInput(format!(
                "moment matrix is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        Ok(n)
    }

    /// Uncorrelated fluctuations with the given occupancies.
    pub fn from_occupancies(occupancies: [f64; MODES]) -> Result<Self> {
        if let Some((i, &v)) = occupancies.iter().enumerate().find(|(_, &v)| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidInput(format!("initial occupancy of mode {i} must be a non-negative number, got {v}")));
        }
        Ok(MomentMatrix(Mat5::from_diagonal(&Vec5::from_iterator(
            occupancies.iter().map(|&v| C64::from(v)),
        ))))
    }

    pub fn zero() -> Self {
        MomentMatrix(Mat5::zeros())
    }

    pub fn matrix(&self) -> &Mat5 {
        &self.0
    }

    pub fn hermitized(&self) -> Self {
        MomentMatrix(hermitize(&self.0))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.symmetric_eigenvalues().min()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Largest elementwise Hermiticity defect `|N - N^dag|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn hermitize(m: &Mat5) -> Mat5 {
    (m + m.adjoint()) * C64::from(0.5)
}

/// Nearest positive semidefinite matrix (Frobenius norm) to a Hermitian `m`:
/// negative eigenvalues are set to zero. Returns `m` unchanged if it is
/// already semidefinite.
fn clip_negative(m: &Mat5) -> Mat5 {
    let eig = m.symmetric_eigen();
    if eig.eigenvalues.min() >= 0.0 {
        return *m;
    }
    let clipped = eig.eigenvalues.map(|v| C64::from(v.max(0.0)));
    hermitize(&(eig.eigenvectors * Mat5::from_diagonal(&clipped) * eig.eigenvectors.adjoint()))
}

/// Mean occupancies (real diagonal), clamping round-off negatives.
pub fn occupancies(n: &MomentMatrix) -> Result<[f64; MODES]> {
    let mut out = [0.0; MODES];
    for (i, slot) in out.iter_mut().enumerate() {
        let v = n.0[(i, i)].re;
        if v < -OCCUPANCY_CLAMP || v.is_nan() {
            return Err(Error::NegativeOccupancy { mode: i, value: v });
        }
        *slot = v.max(0.0);
    }
    Ok(out)
}

/// `i (conj(M) N - N M^T) + D`
pub fn moment_rhs(m: &CouplingMatrix, n: &Mat5, d: &DiffusionMatrix) -> Mat5 {
    let mut out = (m.0.conjugate() * n - n * m.0.transpose()) * I;
    for (i, &di) in d.0.iter().enumerate() {
        out[(i, i)] += di;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub moments: Vec<MomentMatrix>,
    pub occupancies: Vec<[f64; MODES]>,
}

impl MomentTrajectory {
    fn from_moments(times: Vec<f64>, moments: Vec<MomentMatrix>) -> Result<Self> {
        let occupancies = moments.iter().map(occupancies).collect::<Result<Vec<_>>>()?;
        Ok(MomentTrajectory { times, moments, occupancies })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Occupancy curve of one mode.
    pub fn curve(&self, mode: usize) -> Vec<f64> {
        self.occupancies.iter().map(|o| o[mode]).collect()
    }

    /// Largest occupancy a mode reaches over the trajectory.
    pub fn peak(&self, mode: usize) -> f64 {
        self.occupancies.iter().map(|o| o[mode]).fold(0.0, f64::max)
    }
}

/// State of the joint flow: mean-field amplitudes (integrated only in dynamic
/// mode) and the moment matrix.
#[derive(Debug, Clone, PartialEq)]
struct FlowState {
    field: Vec5,
    moments: Mat5,
}

impl OdeState for FlowState {
    fn axpy(&mut self, a: f64, x: &Self) {
        OdeState::axpy(&mut self.field, a, &x.field);
        OdeState::axpy(&mut self.moments, a, &x.moments);
    }

    fn error_sum(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> (f64, usize) {
        let (s1, n1) = Vec5::error_sum(&err.field, &y0.field, &y1.field, rtol, atol);
        let (s2, n2) = Mat5::error_sum(&err.moments, &y0.moments, &y1.moments, rtol, atol);
        (s1 + s2, n1 + n2)
    }

    fn zeros_like(&self) -> Self {
        FlowState { field: Vec5::zeros(), moments: Mat5::zeros() }
    }
}

/// Integrate the moment flow on the grid of `mft`, starting from `n0` at its
/// first time.
///
/// The coupling matrix is evaluated at every integrator stage: from the exact
/// instantaneous steady state for a quasi-static trajectory, or by integrating
/// the amplitude equations alongside the moments (from the trajectory's first
/// record) for a dynamic one. The moment matrix is re-Hermitised after every
/// accepted step; reported matrices with small negative eigenvalues (above
/// `PSD_FAILURE`) are replaced by their nearest semidefinite matrix.
pub fn propagate_moments(
    params: &SystemParams,
    schedule: &PulseSchedule,
    mft: &MeanFieldTrajectory,
    n0: &MomentMatrix,
    tol: f64,
) -> Result<MomentTrajectory> {
    check_grid(&mft.times)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let diffusion = build_diffusion(params);
    let solver = SteadyStateSolver::new(params).map_err(|e| e.with_time(mft.times[0]))?;
    let k = cavity_matrix(params);
    let mode = mft.mode;

    let rhs = |t: f64, y: &FlowState| -> Result<FlowState> {
        let (mf, field_rate) = match mode {
            MeanFieldMode::QuasiStatic => (solver.at(schedule, t)?, Vec5::zeros()),
            MeanFieldMode::Dynamic => {
                let drives = schedule.drives(params, t)?;
                (MeanField::from_vector(&y.field), mean_field_rhs(params, &k, &drives, &y.field))
            }
        };
        let m = build_coupling_matrix(params, &mf);
        Ok(FlowState { field: field_rate, moments: moment_rhs(&m, &y.moments, &diffusion) })
    };

    let y0 = FlowState {
        field: match mode {
            MeanFieldMode::QuasiStatic => Vec5::zeros(),
            MeanFieldMode::Dynamic => mft.fields[0].to_vector(),
        },
        moments: n0.0,
    };
    let states = DormandPrince::new(tol).integrate(
        rhs,
        y0,
        &mft.times,
        |_, y| {
            y.moments = hermitize(&y.moments);
            Ok(())
        },
        |t, y| {
            y.moments = hermitize(&y.moments);
            let min = MomentMatrix(y.moments).min_eigenvalue();
            if min < PSD_FAILURE || !min.is_finite() {
                return Err(Error::PsdViolation { time: t, min_eigenvalue: min });
            }
            if min < 0.0 {
                y.moments = clip_negative(&y.moments);
            }
            Ok(())
        },
    )?;
    MomentTrajectory::from_moments(
        mft.times.clone(),
        states.into_iter().map(|s| MomentMatrix(s.moments)).collect(),
    )
}

/// Mean field at arbitrary sorted times, following the provenance of `mft`.
fn sample_mean_field(
    params: &SystemParams,
    schedule: &PulseSchedule,
    mft: &MeanFieldTrajectory,
    times: &[f64],
) -> Result<Vec<MeanField>> {
    match mft.mode {
        MeanFieldMode::QuasiStatic => {
            let solver = SteadyStateSolver::new(params)?;
            times.iter().map(|&t| solver.at(schedule, t)).collect()
        }
        MeanFieldMode::Dynamic => {
            let mut grid = Vec::with_capacity(times.len() + 1);
            grid.push(mft.times[0]);
            grid.extend(times.iter().copied().filter(|&t| t > mft.times[0]));
            let lead = times.len() + 1 - grid.len();
            let traj = dynamic_trajectory(params, schedule, &grid, &mft.fields[0], 1e-12)?;
            let mut out = vec![mft.fields[0]; lead];
            out.extend_from_slice(&traj.fields[1..]);
            Ok(out)
        }
    }
}

/// One interval of the piecewise-constant propagator: `N -> Phi N Phi^dag + Q`.
struct IntervalMap {
    phi: Mat5,
    q: Option<Mat5>,
}

impl IntervalMap {
    /// Exact propagator of `dN/dt = A N + N A^dag + D` for constant `A = i conj(M)`.
    fn new(m: &Mat5, d: &DiffusionMatrix, h: f64) -> Self {
        let a = m.conjugate() * I;
        if d.is_zero() {
            return IntervalMap { phi: (a * C64::from(h)).exp(), q: None };
        }
        // Van Loan: exp([[-A, D], [0, A^dag]] h) = [[., F12], [0, F22]],
        // Phi = F22^dag, Q = Phi F12.
        let mut block = SMatrix::<C64, 10, 10>::zeros();
        block.fixed_view_mut::<5, 5>(0, 0).copy_from(&(-a));
        block.fixed_view_mut::<5, 5>(0, 5).copy_from(&d.to_matrix());
        block.fixed_view_mut::<5, 5>(5, 5).copy_from(&a.adjoint());
        let f = (block * C64::from(h)).exp();
        let phi = f.fixed_view::<5, 5>(5, 5).adjoint();
        let q = phi * f.fixed_view::<5, 5>(0, 5);
        IntervalMap { phi, q: Some(hermitize(&q)) }
    }

    fn apply(&self, n: &Mat5) -> Mat5 {
        let mut out = self.phi * n * self.phi.adjoint();
        if let Some(q) = &self.q {
            out += q;
        }
        hermitize(&out)
    }
}

/// Independent reference propagation: split `[t_start, t_end]` of `mft` into
/// `steps` equal intervals, freeze `M` at each interval midpoint and apply the
/// exact matrix-exponential propagator of the frozen flow.
///
/// Output times inside an interval are reached by a partial interval frozen at
/// its own midpoint. Second order in the interval length.
pub fn propagator_oracle(
    params: &SystemParams,
    schedule: &PulseSchedule,
    mft: &MeanFieldTrajectory,
    n0: &MomentMatrix,
    steps: usize,
) -> Result<MomentTrajectory> {
    check_grid(&mft.times)?;
    if steps == 0 {
        return Err(Error::InvalidInput("oracle needs at least one step".into()));
    }
    let t0 = mft.times[0];
    let t1 = *mft.times.last().unwrap();
    let h = (t1 - t0) / steps as f64;
    let node = |k: usize| if k == steps { t1 } else { t0 + h * k as f64 };

    // Every (start, end) interval the propagation needs, in time order.
    // The flag marks full intervals, whose result carries forward.
    let mut plan: Vec<(f64, f64, Option<usize>, bool)> = Vec::new();
    let mut out_idx = 0;
    while out_idx < mft.times.len() && mft.times[out_idx] <= t0 {
        plan.push((t0, t0, Some(out_idx), false));
        out_idx += 1;
    }
    for k in 0..steps {
        let (a, b) = (node(k), node(k + 1));
        while out_idx < mft.times.len() && mft.times[out_idx] < b {
            plan.push((a, mft.times[out_idx], Some(out_idx), false));
            out_idx += 1;
        }
        let hit = if out_idx < mft.times.len() && mft.times[out_idx] == b {
            out_idx += 1;
            Some(out_idx - 1)
        } else {
            None
        };
        plan.push((a, b, hit, true));
    }

    let midpoints: Vec<f64> = plan.iter().map(|&(a, b, _, _)| 0.5 * (a + b)).collect();
    let mut sorted = midpoints.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let fields = sample_mean_field(params, schedule, mft, &sorted)?;
    let field_at = |t: f64| -> MeanField {
        let idx = sorted.binary_search_by(|x| x.total_cmp(&t)).expect("midpoint sampled");
        fields[idx]
    };

    let diffusion = build_diffusion(params);
    let mut n = n0.0;
    let mut outputs = vec![Mat5::zeros(); mft.times.len()];
    for (&(a, b, hit, full), &mid) in plan.iter().zip(&midpoints) {
        let m = build_coupling_matrix(params, &field_at(mid));
        let advanced = if b > a { IntervalMap::new(&m.0, &diffusion, b - a).apply(&n) } else { n };
        if advanced.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Overflow(b));
        }
        if let Some(i) = hit {
            outputs[i] = advanced;
        }
        if full {
            n = advanced;
        }
    }
    MomentTrajectory::from_moments(mft.times.clone(), outputs.into_iter().map(MomentMatrix).collect())
}

/// `n_b2(t_end) / n_b1(t_start)`.
pub fn transfer_efficiency(trajectory: &MomentTrajectory) -> Result<f64> {
    let (Some(first), Some(last)) = (trajectory.occupancies.first(), trajectory.occupancies.last()) else {
        return Err(Error::InvalidInput("empty trajectory".into()));
    };
    if first[B_1] <= 0.0 {
        return Err(Error::ZeroInitial);
    }
    Ok(last[B_2] / first[B_1])
}
