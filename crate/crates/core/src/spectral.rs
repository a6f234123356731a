//! Eigenstructure of the coupling matrix: branch-tracked spectra, the dark
//! mode, closed-form eigenvalues, the first-order decay shift and the
//! three-level reference system.

use crate::dynamics::{build_coupling_matrix, CouplingMatrix, A_M, B_1, B_2};
use crate::meanfield::{check_grid, dynamic_trajectory, MeanField, MeanFieldMode, MeanFieldTrajectory, SteadyStateSolver};
use crate::model::{PulseSchedule, SystemParams};
use crate::{Error, Mat5, Result, Vec5, C64, MODES};
use nalgebra::{Matrix3, Schur, SymmetricEigen, Vector3};

/// Eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Number of substeps used when a tracking step moves too far.
pub const REFINE_SUBSTEPS: usize = 8;
/// Fraction of the peak coupling defining the adiabatic window.
pub const WINDOW_FRACTION: f64 = 0.01;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;
const PRECONDITION_TOL: f64 = 1e-9;

/// Eigenvalues with unit-norm eigenvectors stored as matching columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub values: [C64; MODES],
    pub vectors: Mat5,
}

impl Eigensystem {
    /// Largest `|M v - lambda v|` over the pairs.
    pub fn residual(&self, m: &Mat5) -> f64 {
        (0..MODES)
            .map(|k| {
                let v = self.vectors.column(k);
                (m * v - v * self.values[k]).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Full eigendecomposition of a coupling matrix.
///
/// Hermitian input goes through the symmetric solver, which keeps the spectrum
/// exactly real; anything else through a complex Schur form, with each
/// eigenvector taken as a right singular vector of `M - lambda I`. The output
/// is sorted by real part, then imaginary part.
pub fn eigensystem(m: &CouplingMatrix) -> Result<Eigensystem> {
    eigen_decompose(m.matrix())
}

fn eigen_decompose(m: &Mat5) -> Result<Eigensystem> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("coupling matrix has non-finite entries".into()));
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let defect = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);

    let (values, vectors): ([C64; MODES], Mat5) = if defect <= 1e-14 * scale {
        let eig = SymmetricEigen::try_new(*m, SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::NoConvergence)?;
        let mut values = [C64::from(0.0); MODES];
        for (k, v) in eig.eigenvalues.iter().enumerate() {
            values[k] = C64::from(*v);
        }
        (values, eig.eigenvectors)
    } else {
        let (_, t) = Schur::try_new(*m, SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::NoConvergence)?.unpack();
        let mut values = [C64::from(0.0); MODES];
        for (k, slot) in values.iter_mut().enumerate() {
            *slot = t[(k, k)];
        }
        let vectors = null_vectors(m, &values, scale)?;
        (values, vectors)
    };

    let mut order: Vec<usize> = (0..MODES).collect();
    order.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re).then(values[a].im.total_cmp(&values[b].im)));
    let mut sorted = Eigensystem { values: [C64::from(0.0); MODES], vectors: Mat5::zeros() };
    for (k, &src) in order.iter().enumerate() {
        sorted.values[k] = values[src];
        let v = vectors.column(src);
        sorted.vectors.set_column(k, &(v / C64::from(v.norm())));
    }
    Ok(sorted)
}

/// Eigenvectors for the given eigenvalues; a cluster of `k` (numerically)
/// equal eigenvalues receives the `k` smallest right singular vectors of the
/// shifted matrix so the columns stay independent.
fn null_vectors(m: &Mat5, values: &[C64; MODES], scale: f64) -> Result<Mat5> {
    let mut vectors = Mat5::zeros();
    let mut done = [false; MODES];
    for k in 0..MODES {
        if done[k] {
            continue;
        }
        let cluster: Vec<usize> =
            (k..MODES).filter(|&j| !done[j] && (values[j] - values[k]).norm() <= DEGENERACY_TOL * scale).collect();
        let centre = cluster.iter().map(|&j| values[j]).sum::<C64>() / C64::from(cluster.len() as f64);
        let shifted = m - Mat5::identity() * centre;
        let svd = shifted.try_svd(false, true, SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::NoConvergence)?;
        let v_t = svd.v_t.ok_or(Error::NoConvergence)?;
        let mut by_size: Vec<usize> = (0..MODES).collect();
        by_size.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        for (&slot, &row) in cluster.iter().zip(&by_size) {
            vectors.set_column(slot, &v_t.row(row).adjoint());
            done[slot] = true;
        }
    }
    Ok(vectors)
}

/// The regime where the closed-form dark mode and eigenvalues hold.
fn check_dark_regime(params: &SystemParams, mf: &MeanField, require_decay_free: bool) -> Result<()> {
    if (params.j1 - 0.5).abs() > PRECONDITION_TOL || (params.j2 - 0.5).abs() > PRECONDITION_TOL {
        return Err(Error::PreconditionViolated(format!(
            "closed forms need J1 = J2 = 1/2, got J1 = {}, J2 = {}",
            params.j1, params.j2
        )));
    }
    if require_decay_free && !params.is_decay_free() {
        return Err(Error::PreconditionViolated("closed forms need zero decay rates".into()));
    }
    let scale = mf.alpha_l.norm().max(mf.alpha_r.norm()).max(1.0);
    if mf.alpha_m.norm() > PRECONDITION_TOL * scale {
        return Err(Error::PreconditionViolated(format!("alpha_M must vanish, got {}", mf.alpha_m)));
    }
    for (name, a) in [("alpha_L", mf.alpha_l), ("alpha_R", mf.alpha_r)] {
        if a.im.abs() > PRECONDITION_TOL * a.norm().max(1.0) {
            return Err(Error::PreconditionViolated(format!("{name} must be real, got {a}")));
        }
    }
    Ok(())
}

/// `{lambda_2, lambda_3, lambda_4, lambda_5}` in closed form, with
/// `lambda_2 = -lambda_3` the inner and `lambda_4 = -lambda_5` the outer pair.
pub fn analytic_eigenvalues(params: &SystemParams, mf: &MeanField) -> Result<[C64; 4]> {
    check_dark_regime(params, mf, true)?;
    let l2 = (params.g1 * mf.alpha_l.re).powi(2);
    let r2 = (params.g2 * mf.alpha_r.re).powi(2);
    let alpha0 = 1.0 + 2.0 * l2 + 2.0 * r2;
    // 1 + 4 l^4 - 8 l^2 r^2 + 4 r^4, factored
    let beta0 = 1.0 + 4.0 * (l2 - r2).powi(2);
    let root = beta0.sqrt();
    // alpha0 - root = (alpha0^2 - beta0) / (alpha0 + root) avoids cancellation
    // when the couplings are small.
    let inner = 0.5 * (4.0 * (l2 + r2 + 4.0 * l2 * r2) / (alpha0 + root)).sqrt();
    let outer = 0.5 * (alpha0 + root).sqrt();
    Ok([C64::from(-inner), C64::from(inner), C64::from(-outer), C64::from(outer)])
}

/// Unnormalised dark-mode vector `(0, 2 g1 g2 aL aR, 0, -g2 aR, g1 aL)`,
/// without any regime check.
pub fn dark_mode_vector(params: &SystemParams, mf: &MeanField) -> Vec5 {
    let gl = mf.alpha_l * params.g1;
    let gr = mf.alpha_r * params.g2;
    let mut psi = Vec5::zeros();
    psi[A_M] = gl * gr * 2.0;
    psi[B_1] = -gr;
    psi[B_2] = gl;
    psi
}

/// Unit-norm dark mode of the decay-free coupling matrix.
pub fn dark_mode(params: &SystemParams, mf: &MeanField) -> Result<Vec5> {
    check_dark_regime(params, mf, true)?;
    let m = build_coupling_matrix(params, mf).without_decay();
    let svd = m.try_svd(false, false, SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::NoConvergence)?;
    let top = svd.singular_values.max().max(1.0);
    let nullity = svd.singular_values.iter().filter(|&&s| s <= 1e-12 * top).count();
    let psi = dark_mode_vector(params, mf);
    let norm = psi.norm();
    if nullity > 1 || norm == 0.0 {
        return Err(Error::DegenerateNullspace(nullity.max(1)));
    }
    Ok(psi / C64::from(norm))
}

/// Convention for the first-order decay shift of the dark eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftConvention {
    /// `psi^T M_decay psi / psi^T psi`
    #[default]
    Normalized,
    /// `psi^T M_decay psi` with the unnormalised dark vector.
    Unnormalized,
}

impl ShiftConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShiftConvention::Normalized => "normalized",
            ShiftConvention::Unnormalized => "unnormalized",
        }
    }
}

impl std::str::FromStr for ShiftConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(ShiftConvention::Normalized),
            "unnormalized" => Ok(ShiftConvention::Unnormalized),
            other => Err(Error::InvalidInput(format!(
                "decay-shift convention must be \"normalized\" or \"unnormalized\", got {other:?}"
            ))),
        }
    }
}

/// First-order shift of the dark eigenvalue caused by the decay rates in
/// `params`, with `mf` the (decay-free) mean field that defines the dark mode.
pub fn decay_shift(params: &SystemParams, mf: &MeanField, convention: ShiftConvention) -> Result<C64> {
    check_dark_regime(params, mf, false)?;
    let psi = dark_mode_vector(params, mf);
    let mut shift = C64::from(0.0);
    for (k, gamma) in params.decays().into_iter().enumerate() {
        shift += C64::new(0.0, -0.5 * gamma) * psi[k] * psi[k];
    }
    match convention {
        ShiftConvention::Unnormalized => Ok(shift),
        ShiftConvention::Normalized => {
            let norm2 = psi.iter().map(|z| z * z).sum::<C64>();
            if norm2.norm() == 0.0 {
                return Err(Error::DegenerateNullspace(MODES - 2));
            }
            Ok(shift / norm2)
        }
    }
}

/// Eigen-data at one grid point, with branches in tracked order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSnapshot {
    pub time: f64,
    pub eigenvalues: [C64; MODES],
    pub eigenvectors: Mat5,
    /// Branch index of the dark mode.
    pub dark_index: usize,
    /// Smallest `|Re lambda_dark - Re lambda_k|` over the other branches.
    pub gap: f64,
    pub decay_shift: Option<C64>,
    /// The branch assignment at this point was not unique.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTrajectory {
    pub snapshots: Vec<SpectralSnapshot>,
    /// `labels[k]` is the branch index shown as `l{k+1}`: dark first, then
    /// the inner pair (negative, positive) and the outer pair, ordered at the
    /// reference point.
    pub labels: [usize; MODES],
    /// Effective couplings `(g1 alpha_L, g2 alpha_R)` per point.
    pub couplings: Vec<(C64, C64)>,
    /// Grid index at which the labels were fixed.
    pub reference_index: usize,
    /// Grid steps that needed substep refinement.
    pub refinements: usize,
    pub shift_convention: ShiftConvention,
}

impl SpectralTrajectory {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// Eigenvalues at point `i` in label order.
    pub fn labelled(&self, i: usize) -> [C64; MODES] {
        self.labels.map(|b| self.snapshots[i].eigenvalues[b])
    }

    pub fn dark_curve(&self) -> Vec<C64> {
        self.snapshots.iter().map(|s| s.eigenvalues[s.dark_index]).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.gap).collect()
    }

    pub fn ambiguous_points(&self) -> usize {
        self.snapshots.iter().filter(|s| s.ambiguous).count()
    }

    /// Indices where both couplings exceed `WINDOW_FRACTION` of their peaks.
    pub fn adiabatic_window(&self) -> Vec<usize> {
        let peak_l = self.couplings.iter().map(|c| c.0.norm()).fold(0.0, f64::max);
        let peak_r = self.couplings.iter().map(|c| c.1.norm()).fold(0.0, f64::max);
        (0..self.couplings.len())
            .filter(|&i| {
                let (l, r) = self.couplings[i];
                l.norm() > WINDOW_FRACTION * peak_l && r.norm() > WINDOW_FRACTION * peak_r
            })
            .collect()
    }

    /// Smallest gap inside the adiabatic window; `None` if the window is empty.
    pub fn min_adiabatic_gap(&self) -> Option<f64> {
        self.adiabatic_window().into_iter().map(|i| self.snapshots[i].gap).reduce(f64::min)
    }

    /// Trapezoidal integral of `|lambda'_1|` over the grid.
    pub fn integrated_shift(&self) -> Option<f64> {
        let mut total = 0.0;
        for w in self.snapshots.windows(2) {
            let (a, b) = (w[0].decay_shift?, w[1].decay_shift?);
            total += 0.5 * (w[1].time - w[0].time) * (a.norm() + b.norm());
        }
        if self.snapshots.len() == 1 {
            self.snapshots[0].decay_shift?;
        }
        Some(total)
    }
}

fn permutations() -> Vec<[usize; MODES]> {
    fn extend(prefix: &mut Vec<usize>, out: &mut Vec<[usize; MODES]>) {
        if prefix.len() == MODES {
            let mut p = [0; MODES];
            p.copy_from_slice(prefix);
            out.push(p);
            return;
        }
        for k in 0..MODES {
            if !prefix.contains(&k) {
                prefix.push(k);
                extend(prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::with_capacity(120);
    extend(&mut Vec::with_capacity(MODES), &mut out);
    out
}

/// Continuity matching of eigenvalue branches across successive eigensystems.
#[derive(Debug, Clone)]
pub struct BranchTracker {
    perms: Vec<[usize; MODES]>,
    current: Option<Eigensystem>,
}

/// Outcome of matching one eigensystem onto the tracked branches.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackStep {
    /// The eigensystem permuted into branch order.
    pub ordered: Eigensystem,
    pub ambiguous: bool,
    /// Largest single-branch displacement.
    pub max_motion: f64,
    /// Smallest separation between distinct branches before the step.
    pub local_gap: f64,
}

impl Default for BranchTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl BranchTracker {
    pub fn new() -> Self {
        BranchTracker { perms: permutations(), current: None }
    }

    pub fn current(&self) -> Option<&Eigensystem> {
        self.current.as_ref()
    }

    /// Match `next` without committing it.
    pub fn peek(&self, next: &Eigensystem) -> TrackStep {
        let Some(prev) = &self.current else {
            return TrackStep { ordered: next.clone(), ambiguous: false, max_motion: 0.0, local_gap: f64::INFINITY };
        };
        let cost = |p: &[usize; MODES]| -> f64 { (0..MODES).map(|b| (next.values[p[b]] - prev.values[b]).norm()).sum() };
        let costs: Vec<f64> = self.perms.iter().map(cost).collect();
        let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let candidates: Vec<usize> = (0..self.perms.len()).filter(|&k| costs[k] <= best + DEGENERACY_TOL).collect();
        let chosen = if candidates.len() == 1 {
            candidates[0]
        } else {
            let overlap = |p: &[usize; MODES]| -> f64 {
                (0..MODES).map(|b| prev.vectors.column(b).dotc(&next.vectors.column(p[b])).norm()).sum()
            };
            let mut pick = candidates[0];
            let mut top = overlap(&self.perms[pick]);
            for &k in &candidates[1..] {
                let o = overlap(&self.perms[k]);
                if o > top {
                    top = o;
                    pick = k;
                }
            }
            pick
        };
        let p = self.perms[chosen];
        let mut ordered = Eigensystem { values: [C64::from(0.0); MODES], vectors: Mat5::zeros() };
        for (b, &k) in p.iter().enumerate() {
            ordered.values[b] = next.values[k];
            ordered.vectors.set_column(b, &next.vectors.column(k));
        }
        let max_motion = (0..MODES).map(|b| (ordered.values[b] - prev.values[b]).norm()).fold(0.0, f64::max);
        let mut local_gap = f64::INFINITY;
        for a in 0..MODES {
            for b in a + 1..MODES {
                let d = (prev.values[a] - prev.values[b]).norm();
                if d > DEGENERACY_TOL {
                    local_gap = local_gap.min(d);
                }
            }
        }
        TrackStep { ordered, ambiguous: candidates.len() > 1, max_motion, local_gap }
    }

    /// Match and commit.
    pub fn push(&mut self, next: &Eigensystem) -> TrackStep {
        let step = self.peek(next);
        self.current = Some(step.ordered.clone());
        step
    }
}

/// Mean fields at `times`, all strictly after `mft.times[i]` and no later
/// than `mft.times[i + 1]`, obtained the same way as the trajectory itself.
fn fields_between(
    params: &SystemParams,
    schedule: &PulseSchedule,
    mft: &MeanFieldTrajectory,
    solver: &SteadyStateSolver,
    i: usize,
    times: &[f64],
) -> Result<Vec<MeanField>> {
    match mft.mode {
        MeanFieldMode::QuasiStatic => times.iter().map(|&t| solver.at(schedule, t)).collect(),
        MeanFieldMode::Dynamic => {
            let mut grid = vec![mft.times[i]];
            grid.extend_from_slice(times);
            let traj = dynamic_trajectory(params, schedule, &grid, &mft.fields[i], 1e-12)?;
            Ok(traj.fields[1..].to_vec())
        }
    }
}

/// Branch-tracked spectrum of `M` along a mean-field trajectory.
///
/// The decay shift at each point is evaluated on the decay-free quasi-static
/// mean field (where the dark mode is defined) with the decay rates of
/// `params`; it is `None` where the closed-form regime does not apply.
pub fn spectral_trajectory(
    params: &SystemParams,
    schedule: &PulseSchedule,
    mft: &MeanFieldTrajectory,
    convention: ShiftConvention,
) -> Result<SpectralTrajectory> {
    check_grid(&mft.times)?;
    let solver = SteadyStateSolver::new(params)?;
    let ideal = SteadyStateSolver::new(&params.without_decay()).ok();
    let spectrum_at = |mf: &MeanField| eigensystem(&build_coupling_matrix(params, mf));

    let mut tracker = BranchTracker::new();
    let mut tracked: Vec<(Eigensystem, bool)> = Vec::with_capacity(mft.len());
    let mut refinements = 0;
    for (i, (&t, mf)) in mft.times.iter().zip(&mft.fields).enumerate() {
        let eig = spectrum_at(mf).map_err(|e| e.with_time(t))?;
        let step = tracker.peek(&eig);
        if i > 0 && step.max_motion > 0.5 * step.local_gap {
            refinements += 1;
            let t0 = mft.times[i - 1];
            let sub: Vec<f64> = (1..REFINE_SUBSTEPS).map(|k| t0 + (t - t0) * k as f64 / REFINE_SUBSTEPS as f64).collect();
            let mut ambiguous = false;
            for f in fields_between(params, schedule, mft, &solver, i - 1, &sub)? {
                ambiguous |= tracker.push(&spectrum_at(&f)?).ambiguous;
            }
            let last = tracker.push(&eig);
            tracked.push((last.ordered, ambiguous || last.ambiguous));
        } else {
            let step = tracker.push(&eig);
            tracked.push((step.ordered, step.ambiguous));
        }
    }

    let couplings: Vec<(C64, C64)> = mft.fields.iter().map(|f| f.couplings(params)).collect();
    let reference_index = (0..couplings.len())
        .max_by(|&a, &b| {
            let key = |i: usize| couplings[i].0.norm().min(couplings[i].1.norm());
            key(a).total_cmp(&key(b)).then(b.cmp(&a))
        })
        .unwrap_or(0);
    let reference = &tracked[reference_index].0.values;
    let dark = (0..MODES)
        .min_by(|&a, &b| reference[a].norm().total_cmp(&reference[b].norm()).then(a.cmp(&b)))
        .unwrap_or(0);
    let mut rest: Vec<usize> = (0..MODES).filter(|&b| b != dark).collect();
    rest.sort_by(|&a, &b| reference[a].re.total_cmp(&reference[b].re).then(a.cmp(&b)));
    let labels = [dark, rest[1], rest[2], rest[0], rest[3]];

    let mut snapshots = Vec::with_capacity(tracked.len());
    for ((eig, ambiguous), &t) in tracked.into_iter().zip(&mft.times) {
        let gap = (0..MODES)
            .filter(|&b| b != dark)
            .map(|b| (eig.values[dark].re - eig.values[b].re).abs())
            .fold(f64::INFINITY, f64::min);
        let decay_shift = match &ideal {
            Some(s) => s.at(schedule, t).and_then(|mf| decay_shift(params, &mf, convention)).ok(),
            None => None,
        };
        snapshots.push(SpectralSnapshot {
            time: t,
            eigenvalues: eig.values,
            eigenvectors: eig.vectors,
            dark_index: dark,
            gap,
            decay_shift,
            ambiguous,
        });
    }
    Ok(SpectralTrajectory { snapshots, labels, couplings, reference_index, refinements, shift_convention: convention })
}

/// Dark eigenpair of the three-level STIRAP Hamiltonian
/// `H = 1/2 [[0, W_P, 0], [W_P, 2 D_P, W_S], [0, W_S, 2 (D_P - D_S)]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelState {
    pub eigenvalue: f64,
    pub state: [f64; 3],
}

pub fn three_level_hamiltonian(omega_p: f64, omega_s: f64, delta_p: f64, delta_s: f64) -> Matrix3<f64> {
    Matrix3::new(
        0.0,
        0.5 * omega_p,
        0.0,
        0.5 * omega_p,
        delta_p,
        0.5 * omega_s,
        0.0,
        0.5 * omega_s,
        delta_p - delta_s,
    )
}

/// At two-photon resonance the exact dark state `(W_S, 0, -W_P) / norm` with
/// eigenvalue 0; otherwise the eigenvector of `H` with the largest overlap
/// with that state, signed to overlap positively.
pub fn three_level_dark_state(omega_p: f64, omega_s: f64, delta_p: f64, delta_s: f64) -> Result<ThreeLevelState> {
    for (name, v) in [("Omega_P", omega_p), ("Omega_S", omega_s), ("Delta_P", delta_p), ("Delta_S", delta_s)] {
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("{name} must be finite, got {v}")));
        }
    }
    if omega_p == 0.0 && omega_s == 0.0 {
        return Err(Error::ZeroFields);
    }
    let dark = Vector3::new(omega_s, 0.0, -omega_p).normalize();
    if delta_p == delta_s {
        return Ok(ThreeLevelState { eigenvalue: 0.0, state: [dark[0], dark[1], dark[2]] });
    }
    let eig = SymmetricEigen::try_new(three_level_hamiltonian(omega_p, omega_s, delta_p, delta_s), 1e-15, 10_000)
        .ok_or(Error::NoConvergence)?;
    let k = (0..3)
        .max_by(|&a, &b| eig.eigenvectors.column(a).dot(&dark).abs().total_cmp(&eig.eigenvectors.column(b).dot(&dark).abs()))
        .unwrap_or(0);
    let mut v: Vector3<f64> = eig.eigenvectors.column(k).into();
    if v.dot(&dark) < 0.0 {
        v = -v;
    }
    Ok(ThreeLevelState { eigenvalue: eig.eigenvalues[k], state: [v[0], v[1], v[2]] })
}
