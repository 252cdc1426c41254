//! Protocol-level accounting, Trotter-step optimisation and the experiment
//! pipelines behind the command-line tool.

pub mod config;
pub mod run;

use std::fmt;
use std::str::FromStr;

use crate::evolution::{
    daqs_block_factors, heisenberg_reference, BlockErrorModel, BlockKind, DaqsPropagator,
};
use crate::ion_chain::CouplingMatrix;
use crate::spin_algebra::SpinState;
use crate::spin_phonon::{analog_block_fidelity, BlockParams, PhononSpace, PropagationSettings};
use crate::{Error, Result};

pub use config::ExperimentConfig;
pub use run::{run_experiment, RunArtifact, Subcommand};

/// Largest analog-block infidelity for which DAQS beats the digital protocol
/// at two-qubit gate infidelity `eps_t`: `N(N-1)ε_T/4`.
pub fn crossover_threshold(num_sites: usize, eps_t: f64) -> Result<f64> {
    if num_sites < 2 {
        return Err(Error::arg(format!(
            "crossover needs N ≥ 2, got {num_sites}"
        )));
    }
    if !(0.0..=1.0).contains(&eps_t) {
        return Err(Error::arg(format!("ε_T = {eps_t} outside [0, 1]")));
    }
    Ok((num_sites * (num_sites - 1)) as f64 * eps_t / 4.0)
}

/// Interaction graph assumed by the digital gate count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionRange {
    Nearest,
    Full,
}

impl FromStr for InteractionRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nearest" => Ok(Self::Nearest),
            "full" => Ok(Self::Full),
            other => Err(Error::arg(format!("unknown interaction range {other:?}"))),
        }
    }
}

/// Simulation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Digital,
    Daqs,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Digital => "digital",
            Scheme::Daqs => "daqs",
        })
    }
}

/// Resources of an `l`-step protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateCounts {
    pub two_qubit: usize,
    pub analog_blocks: usize,
    pub single_qubit: usize,
}

pub fn gate_count(
    num_sites: usize,
    range: InteractionRange,
    trotter_steps: usize,
    scheme: Scheme,
) -> Result<GateCounts> {
    if num_sites < 2 {
        return Err(Error::arg(format!(
            "gate counts need N ≥ 2, got {num_sites}"
        )));
    }
    let pairs = match range {
        InteractionRange::Nearest => num_sites - 1,
        InteractionRange::Full => num_sites * (num_sites - 1) / 2,
    };
    Ok(match scheme {
        Scheme::Digital => GateCounts {
            two_qubit: 3 * trotter_steps * pairs,
            analog_blocks: 0,
            single_qubit: 0,
        },
        Scheme::Daqs => GateCounts {
            two_qubit: 0,
            analog_blocks: 2 * trotter_steps,
            single_qubit: 2 * trotter_steps,
        },
    })
}

/// Block errors obtained by simulating each block at the spin⊗phonon level.
///
/// Durations are in units of `1/J` of the normalised coupling matrix and are
/// converted to seconds with `coupling_scale` (rad/s). The XY block realises
/// `½ H_XY`, so its physical duration is twice the ideal one.
#[derive(Debug, Clone)]
pub struct SimulatedBlockError {
    pub xx: BlockParams,
    pub xy: BlockParams,
    pub space: PhononSpace,
    /// Ideal couplings the blocks are scored against, rad/s.
    pub target: CouplingMatrix,
    pub initial: SpinState,
    pub coupling_scale: f64,
    pub settings: PropagationSettings,
}

impl SimulatedBlockError {
    /// Seconds of physical evolution per unit of ideal duration.
    pub fn seconds_per_unit(&self, kind: BlockKind) -> f64 {
        match kind {
            BlockKind::Xx => 1.0 / self.coupling_scale,
            BlockKind::Xy => 2.0 / self.coupling_scale,
        }
    }
}

impl BlockErrorModel for SimulatedBlockError {
    fn infidelities(&self, kind: BlockKind, durations: &[f64]) -> Result<Vec<f64>> {
        if durations.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::arg("block durations must be non-negative"));
        }
        let scale = self.seconds_per_unit(kind);
        let mut grid: Vec<f64> = durations.iter().map(|d| d * scale).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let params = match kind {
            BlockKind::Xx => &self.xx,
            BlockKind::Xy => &self.xy,
        };
        let curve = analog_block_fidelity(
            params,
            &self.space,
            &self.target,
            &self.initial,
            &grid,
            &self.settings,
        )?;
        Ok(durations
            .iter()
            .map(|d| {
                let k = grid.partition_point(|t| *t < d * scale);
                (1.0 - curve.fidelities[k]).max(0.0)
            })
            .collect())
    }
}

/// Block infidelities evaluated in one batch per kind, then looked up.
struct Prefetched<'a> {
    inner: &'a dyn BlockErrorModel,
    durations: Vec<f64>,
    xx: Vec<f64>,
    xy: Vec<f64>,
}

impl<'a> Prefetched<'a> {
    fn new(inner: &'a dyn BlockErrorModel, mut durations: Vec<f64>) -> Result<Self> {
        durations.sort_by(f64::total_cmp);
        durations.dedup();
        let (xx, xy) = rayon::join(
            || inner.infidelities(BlockKind::Xx, &durations),
            || inner.infidelities(BlockKind::Xy, &durations),
        );
        Ok(Self {
            inner,
            durations,
            xx: xx?,
            xy: xy?,
        })
    }
}

impl BlockErrorModel for Prefetched<'_> {
    fn infidelities(&self, kind: BlockKind, durations: &[f64]) -> Result<Vec<f64>> {
        let table = match kind {
            BlockKind::Xx => &self.xx,
            BlockKind::Xy => &self.xy,
        };
        let mut out = Vec::with_capacity(durations.len());
        for d in durations {
            match self.durations.binary_search_by(|x| x.total_cmp(d)) {
                Ok(k) => out.push(table[k]),
                Err(_) => out.push(self.inner.infidelities(kind, &[*d])?[0]),
            }
        }
        Ok(out)
    }
}

/// Outcome at one region boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionChoice {
    pub end_time: f64,
    pub trotter_steps: usize,
    pub fidelity: f64,
    /// Fidelity of every `l = 1..=l_max` at this boundary.
    pub candidates: Vec<f64>,
    pub trotter_fidelity: f64,
    pub error_factor: f64,
}

/// Per-region Trotter steps and the resulting fidelity trace.
#[derive(Debug, Clone)]
pub struct OptimizedProtocol {
    pub regions: Vec<RegionChoice>,
    pub times: Vec<f64>,
    /// Trotter steps used at each time.
    pub steps: Vec<usize>,
    pub fidelities: Vec<f64>,
    pub magnetizations: Vec<Vec<f64>>,
    pub exact_magnetizations: Vec<Vec<f64>>,
}

impl OptimizedProtocol {
    /// Checks that each region's choice is at least as good as every fixed `l`.
    pub fn dominates_fixed_steps(&self) -> bool {
        self.regions
            .iter()
            .all(|r| r.candidates.iter().all(|c| r.fidelity >= *c))
    }
}

/// Settings for [`optimize_trotter_steps`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub l_max: usize,
    pub regions: usize,
    /// Single-qubit gate infidelity, applied to the `2l` global rotations.
    pub single_qubit_error: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            l_max: 4,
            regions: 6,
            single_qubit_error: 0.0,
        }
    }
}

/// Gains below this do not justify a larger `l`.
const TIE_MARGIN: f64 = 1e-12;

fn error_factors(
    model: &dyn BlockErrorModel,
    times: &[f64],
    l: usize,
    single_qubit_error: f64,
) -> Result<Vec<f64>> {
    let rot = (1.0 - single_qubit_error).powi(2 * l as i32);
    Ok(daqs_block_factors(model, times, l)?
        .into_iter()
        .map(|f| f * rot)
        .collect())
}

/// Splits `[0, t_final]` into equal regions and, at each region end, runs the
/// DAQS protocol from `t = 0` for every `l ∈ 1..=l_max`, keeping the `l` with
/// the highest fidelity `F_Trotter · Π (1 - ε_block)`. Ties go to the smaller
/// `l`. Times on `grid` inside a region use that region's `l`.
pub fn optimize_trotter_steps(
    j: &CouplingMatrix,
    psi0: &SpinState,
    t_final: f64,
    grid: &[f64],
    model: &dyn BlockErrorModel,
    settings: &OptimizerSettings,
) -> Result<OptimizedProtocol> {
    if settings.l_max == 0 || settings.regions == 0 {
        return Err(Error::arg("l_max and the region count must be at least 1"));
    }
    if !(t_final > 0.0) {
        return Err(Error::arg("final time must be positive"));
    }
    if !(0.0..=1.0).contains(&settings.single_qubit_error) {
        return Err(Error::arg("single-qubit infidelity outside [0, 1]"));
    }
    let ends: Vec<f64> = (1..=settings.regions)
        .map(|r| t_final * r as f64 / settings.regions as f64)
        .collect();
    let wanted = (1..=settings.l_max)
        .flat_map(|l| ends.iter().chain(grid).map(move |t| t / l as f64))
        .collect();
    let model = Prefetched::new(model, wanted)?;
    let model = &model;
    let exact = heisenberg_reference(j, psi0, &ends)?;
    let prop = DaqsPropagator::new(j)?;
    let mut table = Vec::with_capacity(settings.l_max);
    for l in 1..=settings.l_max {
        let factors = error_factors(model, &ends, l, settings.single_qubit_error)?;
        let mut row = Vec::with_capacity(ends.len());
        for (k, &t) in ends.iter().enumerate() {
            let f = prop
                .evolve(psi0, t, l)?
                .overlap(&exact.states[k])?
                .norm_sqr();
            row.push((f * factors[k], f, factors[k]));
        }
        table.push(row);
    }
    let regions: Vec<RegionChoice> = ends
        .iter()
        .enumerate()
        .map(|(k, &end)| {
            let mut best = 0;
            for l in 1..settings.l_max {
                if table[l][k].0 > table[best][k].0 + TIE_MARGIN {
                    best = l;
                }
            }
            RegionChoice {
                end_time: end,
                trotter_steps: best + 1,
                fidelity: table[best][k].0,
                candidates: table.iter().map(|row| row[k].0).collect(),
                trotter_fidelity: table[best][k].1,
                error_factor: table[best][k].2,
            }
        })
        .collect();

    let steps: Vec<usize> = grid
        .iter()
        .map(|&t| {
            let k = ends
                .partition_point(|e| *e < t - 1e-12 * t_final)
                .min(ends.len() - 1);
            regions[k].trotter_steps
        })
        .collect();
    let exact_grid = heisenberg_reference(j, psi0, grid)?;
    let mut fidelities = vec![0.0; grid.len()];
    let mut magnetizations = vec![Vec::new(); grid.len()];
    for l in 1..=settings.l_max {
        let idx: Vec<usize> = (0..grid.len()).filter(|&i| steps[i] == l).collect();
        if idx.is_empty() {
            continue;
        }
        let times: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        let factors = error_factors(model, &times, l, settings.single_qubit_error)?;
        for (k, &i) in idx.iter().enumerate() {
            let state = prop.evolve(psi0, grid[i], l)?;
            fidelities[i] = state.overlap(&exact_grid.states[i])?.norm_sqr() * factors[k];
            magnetizations[i] = state.magnetizations();
        }
    }
    Ok(OptimizedProtocol {
        regions,
        times: grid.to_vec(),
        steps,
        fidelities,
        magnetizations,
        exact_magnetizations: exact_grid.magnetizations,
    })
}
