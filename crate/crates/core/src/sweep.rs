//! Grid search over pulse and system parameters.

use crate::pipeline::{simulate, Metrics, Scenario};
use crate::{Error, Result};
use rayon::prelude::*;
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_CELL_CAP: usize = 100_000;

/// A parameter that a sweep axis can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Amplitude,
    Width,
    HalfDelay,
    /// Middle-cavity decay.
    GammaM,
    /// Both membrane dampings.
    GammaMech,
    /// Both optomechanical couplings.
    Coupling,
    /// Both bath occupancies.
    Nbar,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::Amplitude,
        SweepParam::Width,
        SweepParam::HalfDelay,
        SweepParam::GammaM,
        SweepParam::GammaMech,
        SweepParam::Coupling,
        SweepParam::Nbar,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Amplitude => "A",
            SweepParam::Width => "T",
            SweepParam::HalfDelay => "tau",
            SweepParam::GammaM => "gamma_M",
            SweepParam::GammaMech => "gamma_m",
            SweepParam::Coupling => "g",
            SweepParam::Nbar => "nbar",
        }
    }

    /// Set this parameter on a scenario.
    pub fn apply(&self, scenario: &mut Scenario, value: f64) {
        let p = &mut scenario.params;
        let s = &mut scenario.schedule;
        match self {
            SweepParam::Amplitude => s.amplitude = value,
            SweepParam::Width => s.width = value,
            SweepParam::HalfDelay => s.half_delay = value,
            SweepParam::GammaM => p.gamma_m = value,
            SweepParam::GammaMech => (p.gamma_m1, p.gamma_m2) = (value, value),
            SweepParam::Coupling => (p.g1, p.g2) = (value, value),
            SweepParam::Nbar => (p.nbar1, p.nbar2) = (value, value),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = SweepParam::ALL.iter().map(|p| p.name()).collect();
            Error::InvalidInput(format!("unknown sweep parameter {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(param: SweepParam, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput(format!("axis {param} has no values")));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("axis {param} has a non-finite value {v}")));
        }
        Ok(SweepAxis { param, values })
    }
}

/// Parse `name=v1,v2,...`.
impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, list) =
            s.split_once('=').ok_or_else(|| Error::InvalidInput(format!("axis {s:?} is not of the form name=v1,v2")))?;
        let param: SweepParam = name.trim().parse()?;
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("axis {param} has a malformed value {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        SweepAxis::new(param, values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    /// Position in the row-major grid (last axis fastest).
    pub index: usize,
    /// One value per axis.
    pub values: Vec<f64>,
    pub outcome: Result<Metrics>,
}

impl SweepCell {
    pub fn metrics(&self) -> Option<&Metrics> {
        self.outcome.as_ref().ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axes: Vec<SweepAxis>,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }
}

fn cell_values(axes: &[SweepAxis], mut index: usize) -> Vec<f64> {
    let mut values = vec![0.0; axes.len()];
    for (slot, axis) in values.iter_mut().zip(axes).rev() {
        *slot = axis.values[index % axis.values.len()];
        index /= axis.values.len();
    }
    values
}

/// Run the pipeline on every cell of the Cartesian product of `axes`.
///
/// Cells run in parallel; the result is ordered by grid index, and a failing
/// cell records its error without stopping the others.
pub fn run_sweep(base: &Scenario, axes: &[SweepAxis], cap: usize) -> Result<SweepResult> {
    if axes.is_empty() {
        return Err(Error::InvalidInput("a sweep needs at least one axis".into()));
    }
    let cells = axes
        .iter()
        .try_fold(1usize, |n, a| n.checked_mul(a.values.len()))
        .unwrap_or(usize::MAX);
    if cells > cap {
        return Err(Error::GridTooLarge { cells, cap });
    }
    let cells = (0..cells)
        .into_par_iter()
        .map(|index| {
            let values = cell_values(axes, index);
            let mut scenario = base.clone();
            for (axis, &v) in axes.iter().zip(&values) {
                axis.param.apply(&mut scenario, v);
            }
            let outcome = simulate(&scenario).map(|s| s.metrics);
            SweepCell { index, values, outcome }
        })
        .collect();
    Ok(SweepResult { axes: axes.to_vec(), cells })
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// The successful cell with the largest efficiency; ties go to the smaller
/// middle-cavity peak, then to the lexicographically smaller parameter tuple.
pub fn best_point(result: &SweepResult) -> Result<&SweepCell> {
    result
        .cells
        .iter()
        .filter_map(|c| c.metrics().map(|m| (c, m)))
        .min_by(|(ca, ma), (cb, mb)| {
            mb.eta
                .total_cmp(&ma.eta)
                .then(ma.peak_n_am.total_cmp(&mb.peak_n_am))
                .then_with(|| lexicographic(&ca.values, &cb.values))
        })
        .map(|(c, _)| c)
        .ok_or(Error::AllFailed)
}
