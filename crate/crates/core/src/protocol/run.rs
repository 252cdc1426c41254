//! Experiment pipelines and their CSV/metadata artifacts.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::evolution::{
    daqs_evolve, digital_evolve, exact_evolve, BlockErrorModel, BlockKind, FixedBlockError,
    TrajectoryRecord,
};
use crate::ion_chain::{
    equilibrium_positions, lamb_dicke_params, mode_detunings, transverse_modes, CouplingMatrix,
    ModeAxes,
};
use crate::protocol::config::{BlockErrorSource, ExperimentConfig, FrequencyUnit, ProtocolChoice};
use crate::protocol::{
    gate_count, optimize_trotter_steps, OptimizerSettings, Scheme, SimulatedBlockError,
};
use crate::spin_models::{build_model, ModelKind};
use crate::spin_phonon::{
    analog_block_fidelity, effective_com_params, xy_effective_terms, BlockParams, MotionModel,
    PhononSpace,
};
use crate::{Error, Result};

/// Pipelines offered by the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Couplings,
    Modes,
    BlockFidelity,
    Compare,
    Protocol,
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subcommand::Couplings => "couplings",
            Subcommand::Modes => "modes",
            Subcommand::BlockFidelity => "block-fidelity",
            Subcommand::Compare => "compare",
            Subcommand::Protocol => "protocol",
        })
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "couplings" => Ok(Subcommand::Couplings),
            "modes" => Ok(Subcommand::Modes),
            "block-fidelity" => Ok(Subcommand::BlockFidelity),
            "compare" => Ok(Subcommand::Compare),
            "protocol" => Ok(Subcommand::Protocol),
            other => Err(Error::arg(format!("unknown subcommand {other:?}"))),
        }
    }
}

/// One CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Values of one column.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Tables and metadata produced by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifact {
    pub subcommand: Subcommand,
    pub tables: Vec<Table>,
    /// Ordered `key = value` lines of `metadata.txt`.
    pub metadata: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl RunArtifact {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn metadata_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            s.push_str(&format!("{k} = {v}\n"));
        }
        for w in &self.warnings {
            s.push_str(&format!("warning = {w}\n"));
        }
        s
    }

    /// Writes `<name>.csv` per table and `metadata.txt` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in &self.tables {
            std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv()?)?;
        }
        std::fs::write(dir.join("metadata.txt"), self.metadata_text())?;
        Ok(())
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

struct Meta(Vec<(String, String)>);

impl Meta {
    fn put(&mut self, k: &str, v: impl ToString) {
        self.0.push((k.to_string(), v.to_string()));
    }
}

/// Chain geometry, modes and couplings shared by every pipeline.
struct Chain {
    reduced: Vec<f64>,
    meters: Vec<f64>,
    modes: crate::ion_chain::ModeData,
    coupling: CouplingMatrix,
    fit_j: f64,
    alpha: Option<f64>,
}

fn chain(config: &ExperimentConfig) -> Result<Chain> {
    let positions = equilibrium_positions(&config.chain)?;
    let modes = transverse_modes(&config.chain, &positions)?;
    let coupling = crate::ion_chain::coupling_from_modes(&config.chain, &modes)?;
    let (fit_j, alpha) = match coupling.fit() {
        Some(f) => (f.j, f.alpha_defined.then_some(f.alpha)),
        None => (f64::NAN, None),
    };
    Ok(Chain {
        meters: positions.meters(),
        reduced: positions.reduced,
        modes,
        coupling,
        fit_j,
        alpha,
    })
}

fn config_metadata(config: &ExperimentConfig, meta: &mut Meta) {
    let c = &config.chain;
    meta.put("version", concat!("daqs ", env!("CARGO_PKG_VERSION")));
    meta.put(
        "config.units.frequency",
        match config.frequency_unit {
            FrequencyUnit::Hz => "hz",
            FrequencyUnit::RadPerSecond => "rad_s",
        },
    );
    meta.put("chain.num_ions", c.num_ions);
    meta.put("chain.ion_mass_kg", num(c.ion_mass));
    meta.put(
        "chain.trap_frequencies_rad_s",
        c.trap_frequencies
            .iter()
            .map(|v| num(*v))
            .collect::<Vec<_>>()
            .join(" "),
    );
    meta.put("chain.laser_wavelength_m", num(c.laser_wavelength));
    meta.put(
        "chain.rabi_frequencies_rad_s",
        c.rabi_frequencies
            .iter()
            .map(|v| num(*v))
            .collect::<Vec<_>>()
            .join(" "),
    );
    meta.put("chain.detuning_rad_s", num(c.detuning));
    meta.put("chain.xy_asymmetry_rad_s", num(c.xy_asymmetry));
    meta.put("chain.laser_phase_rad", num(c.laser_phase));
    meta.put(
        "chain.mode_axes",
        match c.mode_axes {
            ModeAxes::Both => "both",
            ModeAxes::XOnly => "x",
        },
    );
    meta.put("experiment.model", config.model);
    meta.put("experiment.initial_state", config.initial_state.to_string());
    meta.put("experiment.time_start_jt", num(config.time_grid.start));
    meta.put("experiment.time_stop_jt", num(config.time_grid.stop));
    meta.put("experiment.time_points", config.time_grid.points);
    meta.put(
        "experiment.protocol",
        match config.protocol {
            ProtocolChoice::Exact => "exact",
            ProtocolChoice::Digital => "digital",
            ProtocolChoice::Daqs => "daqs",
        },
    );
    meta.put("experiment.trotter_steps", config.trotter_steps);
    meta.put("experiment.optimize", config.optimize);
    meta.put("experiment.l_max", config.l_max);
    meta.put("experiment.regions", config.regions);
    meta.put(
        "experiment.compare_steps",
        config
            .compare_steps
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    meta.put("errors.gate_infidelity", num(config.gate_infidelity));
    meta.put(
        "errors.single_qubit_infidelity",
        num(config.single_qubit_infidelity),
    );
    meta.put(
        "errors.block_error",
        match config.block_error {
            BlockErrorSource::None => "none".to_string(),
            BlockErrorSource::Fixed(e) => format!("fixed {e}"),
            BlockErrorSource::Simulated => "simulated".to_string(),
        },
    );
    meta.put(
        "phonon.model",
        match config.motion_model {
            MotionModel::EffectiveCom => "effective_com",
            MotionModel::Full => "full",
        },
    );
    meta.put("phonon.n_max", config.n_max);
    meta.put("phonon.rotating_wave", config.rotating_wave);
    meta.put(
        "phonon.steps_per_period",
        config.propagation.steps_per_period,
    );
    meta.put("phonon.tolerance", num(config.propagation.tolerance));
    meta.put(
        "phonon.step_rule",
        format!("{:?}", config.propagation.rule).to_lowercase(),
    );
    meta.put("phonon.dimension_cap", config.dimension_cap);
    meta.put("flags.csv_indices", "1-based");
    meta.put("flags.xy_duration_doubled", true);
    meta.put(
        "flags.single_qubit_gates",
        "global rotations, infidelity from errors.single_qubit_infidelity",
    );
}

fn chain_metadata(ch: &Chain, meta: &mut Meta) {
    meta.put("fit.J_rad_s", num(ch.fit_j));
    meta.put("fit.alpha", ch.alpha.map_or("undefined".to_string(), num));
    meta.put("modes.com_frequency_rad_s", num(ch.modes.com_frequency()));
}

/// Runs one pipeline.
pub fn run_experiment(config: &ExperimentConfig, subcommand: Subcommand) -> Result<RunArtifact> {
    let mut meta = Meta(Vec::new());
    meta.put("subcommand", subcommand);
    config_metadata(config, &mut meta);
    let mut warnings = Vec::new();
    let tables = match subcommand {
        Subcommand::Couplings => couplings(config, &mut meta)?,
        Subcommand::Modes => modes(config, &mut meta)?,
        Subcommand::BlockFidelity => block_fidelity(config, &mut meta, &mut warnings)?,
        Subcommand::Compare => compare(config, &mut meta)?,
        Subcommand::Protocol => protocol(config, &mut meta, &mut warnings)?,
    };
    Ok(RunArtifact {
        subcommand,
        tables,
        metadata: meta.0,
        warnings,
    })
}

fn positions_table(ch: &Chain) -> Table {
    let mut t = Table::new("positions", &["ion", "z_reduced", "z_m"]);
    for (k, (u, z)) in ch.reduced.iter().zip(&ch.meters).enumerate() {
        t.push(vec![(k + 1).to_string(), num(*u), num(*z)]);
    }
    t
}

fn couplings(config: &ExperimentConfig, meta: &mut Meta) -> Result<Vec<Table>> {
    let ch = chain(config)?;
    chain_metadata(&ch, meta);
    let n = ch.coupling.size();
    let mut c = Table::new("couplings", &["i", "j", "J_ij_rad_s"]);
    for i in 0..n {
        for j in 0..n {
            c.push(vec![
                (i + 1).to_string(),
                (j + 1).to_string(),
                num(ch.coupling.get(i, j)),
            ]);
        }
    }
    let mut f = Table::new("fit", &["J_rad_s", "alpha"]);
    f.push(vec![num(ch.fit_j), ch.alpha.map_or("nan".to_string(), num)]);
    Ok(vec![positions_table(&ch), c, f])
}

fn modes(config: &ExperimentConfig, meta: &mut Meta) -> Result<Vec<Table>> {
    let ch = chain(config)?;
    chain_metadata(&ch, meta);
    let detunings = mode_detunings(config.chain.detuning, &ch.modes)?;
    let eta = lamb_dicke_params(&config.chain, &ch.modes);
    let mut m = Table::new(
        "modes",
        &["mode", "axis", "frequency_rad_s", "detuning_rad_s"],
    );
    let mut p = Table::new("participation", &["mode", "ion", "b", "eta"]);
    for (k, (mode, d)) in ch.modes.modes.iter().zip(&detunings).enumerate() {
        m.push(vec![
            (k + 1).to_string(),
            mode.axis.label().to_string(),
            num(mode.frequency),
            num(*d),
        ]);
        for (ion, b) in mode.vector.iter().enumerate() {
            p.push(vec![
                (k + 1).to_string(),
                (ion + 1).to_string(),
                num(*b),
                num(eta[(ion, k)]),
            ]);
        }
    }
    Ok(vec![positions_table(&ch), m, p])
}

fn require_pairs(config: &ExperimentConfig) -> Result<()> {
    if config.chain.num_ions < 2 {
        return Err(Error::arg(format!(
            "spin models need at least two ions; the chain has {}",
            config.chain.num_ions
        )));
    }
    Ok(())
}

/// Block simulation matching the configured motional model.
fn simulated_blocks(
    config: &ExperimentConfig,
    ch: &Chain,
    rotating_wave: bool,
) -> Result<SimulatedBlockError> {
    let c = &config.chain;
    let n = c.num_ions;
    let (xx, xy, space, target) = match config.motion_model {
        MotionModel::EffectiveCom => {
            let rabi = c.rabi_frequencies.iter().sum::<f64>() / n as f64;
            let xx = BlockParams::effective_com(BlockKind::Xx, n, ch.fit_j, c.detuning, 0.0, rabi)?;
            let xy = BlockParams::effective_com(
                BlockKind::Xy,
                n,
                ch.fit_j,
                c.detuning,
                c.xy_asymmetry,
                rabi,
            )?;
            let space =
                PhononSpace::effective_com(ch.modes.com_frequency(), c.detuning, config.n_max)?;
            (xx, xy, space, CouplingMatrix::uniform(n, ch.fit_j)?)
        }
        MotionModel::Full => {
            let selected = ch.modes.select(c.mode_axes);
            let xx = BlockParams::full(BlockKind::Xx, c, &selected)?;
            let xy = BlockParams::full(BlockKind::Xy, c, &selected)?;
            let space = PhononSpace::from_modes(&selected, c.detuning, config.n_max)?;
            (xx, xy, space, ch.coupling.clone())
        }
    };
    Ok(SimulatedBlockError {
        xx: xx.with_rotating_wave(rotating_wave),
        xy: xy.with_rotating_wave(rotating_wave),
        space: space.with_dimension_cap(config.dimension_cap),
        target,
        initial: config.initial_state.clone(),
        coupling_scale: ch.fit_j,
        settings: config.propagation,
    })
}

fn eta_metadata(config: &ExperimentConfig, ch: &Chain, meta: &mut Meta) -> Result<()> {
    if config.motion_model == MotionModel::EffectiveCom {
        let c = &config.chain;
        let rabi = c.rabi_frequencies.iter().sum::<f64>() / c.num_ions as f64;
        meta.put(
            "phonon.eta_eff",
            num(effective_com_params(ch.fit_j, c.detuning, rabi)?),
        );
    }
    Ok(())
}

fn block_fidelity(
    config: &ExperimentConfig,
    meta: &mut Meta,
    warnings: &mut Vec<String>,
) -> Result<Vec<Table>> {
    require_pairs(config)?;
    let ch = chain(config)?;
    chain_metadata(&ch, meta);
    eta_metadata(config, &ch, meta)?;
    let mut flags = vec![config.rotating_wave];
    if config.compare_rwa {
        flags.push(!config.rotating_wave);
    }
    let jt: Vec<f64> = (0..config.block_points)
        .map(|k| config.block_jt_stop * k as f64 / (config.block_points - 1) as f64)
        .collect();
    let jobs: Vec<(BlockKind, bool)> = flags
        .iter()
        .flat_map(|&r| [BlockKind::Xx, BlockKind::Xy].map(|k| (k, r)))
        .collect();
    let curves = jobs
        .par_iter()
        .map(|&(kind, rwa)| {
            let sim = simulated_blocks(config, &ch, rwa)?;
            let scale = sim.seconds_per_unit(kind);
            let times: Vec<f64> = jt.iter().map(|t| t * scale).collect();
            let params = match kind {
                BlockKind::Xx => &sim.xx,
                BlockKind::Xy => &sim.xy,
            };
            let curve = analog_block_fidelity(
                params,
                &sim.space,
                &sim.target,
                &sim.initial,
                &times,
                &sim.settings,
            )?;
            let nbar = curve.mean_phonons.iter().copied().fold(0.0, f64::max);
            Ok((kind, rwa, curve, params.regime_warnings(nbar)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "blockfid",
        &["t_s", "Jt", "fidelity", "block_kind", "rwa_flag"],
    );
    for (kind, rwa, curve, warn) in &curves {
        for ((ts, jt), f) in curve.times.iter().zip(&jt).zip(&curve.fidelities) {
            t.push(vec![
                num(*ts),
                num(*jt),
                num(*f),
                kind.to_string(),
                rwa.to_string(),
            ]);
        }
        let tag = format!("{kind}.rwa_{rwa}");
        meta.put(
            &format!("block.{tag}.worst_infidelity"),
            num(curve.worst_infidelity()),
        );
        meta.put(&format!("block.{tag}.dt_s"), num(curve.dt));
        meta.put(
            &format!("block.{tag}.max_top_fock_population"),
            num(curve.top_population.iter().copied().fold(0.0, f64::max)),
        );
        warnings.extend(warn.iter().map(|w| format!("{tag}: {w}")));
    }
    let sim = simulated_blocks(config, &ch, config.rotating_wave)?;
    let terms = xy_effective_terms(&sim.xy, &sim.space)?;
    meta.put("block.xy.field_suppression", num(terms.suppression));
    meta.put(
        "block.xy.field_to_coupling_ratio",
        num(terms.magnitude_ratio),
    );
    Ok(vec![t])
}

fn heisenberg_only(config: &ExperimentConfig) -> Result<()> {
    if config.model != ModelKind::Heisenberg {
        return Err(Error::arg(format!(
            "digital and DAQS protocols simulate the Heisenberg model, not {}",
            config.model
        )));
    }
    Ok(())
}

fn push_trajectory(
    fid: &mut Table,
    mag: &mut Table,
    rec: &TrajectoryRecord,
    protocol: &str,
    steps: &[usize],
) {
    let label = match rec.trotter_steps {
        Some(l) if !steps.is_empty() && steps.iter().all(|s| *s == l) => format!("{protocol}_l{l}"),
        Some(_) => protocol.to_string(),
        None => "exact".to_string(),
    };
    for (k, t) in rec.times.iter().enumerate() {
        if rec.trotter_steps.is_some() {
            fid.push(vec![
                num(*t),
                num(rec.fidelities[k]),
                protocol.into(),
                steps[k].to_string(),
            ]);
        }
        for (site, m) in rec.magnetizations[k].iter().enumerate() {
            mag.push(vec![
                num(*t),
                (site + 1).to_string(),
                num(*m),
                label.clone(),
            ]);
        }
    }
}

fn trajectory_tables() -> (Table, Table) {
    (
        Table::new("fidelity", &["Jt", "fidelity", "protocol", "l"]),
        Table::new(
            "magnetization",
            &["Jt", "site", "sigma_z_expectation", "generator"],
        ),
    )
}

fn compare(config: &ExperimentConfig, meta: &mut Meta) -> Result<Vec<Table>> {
    require_pairs(config)?;
    heisenberg_only(config)?;
    let ch = chain(config)?;
    chain_metadata(&ch, meta);
    let j = ch.coupling.normalized()?;
    let grid = config.time_grid.values();
    let psi = &config.initial_state;
    let exact = exact_evolve(&build_model(ModelKind::Heisenberg, &j)?, psi, &grid, None)?;
    let (mut fid, mut mag) = trajectory_tables();
    push_trajectory(&mut fid, &mut mag, &exact, "exact", &[]);
    let n = config.chain.num_ions;
    for &l in &config.compare_steps {
        let steps = vec![l; grid.len()];
        let d = digital_evolve(&j, psi, &grid, l, None, None)?;
        push_trajectory(&mut fid, &mut mag, &d, "digital", &steps);
        let a = daqs_evolve(&j, psi, &grid, l, None)?;
        push_trajectory(&mut fid, &mut mag, &a, "daqs", &steps);
        let dc = gate_count(n, config.interaction_range, l, Scheme::Digital)?;
        let ac = gate_count(n, config.interaction_range, l, Scheme::Daqs)?;
        meta.put(&format!("gates.l{l}.digital_two_qubit"), dc.two_qubit);
        meta.put(&format!("gates.l{l}.daqs_analog_blocks"), ac.analog_blocks);
        meta.put(&format!("gates.l{l}.daqs_single_qubit"), ac.single_qubit);
    }
    meta.put("compare.errors_applied", false);
    Ok(vec![fid, mag])
}

fn protocol(
    config: &ExperimentConfig,
    meta: &mut Meta,
    warnings: &mut Vec<String>,
) -> Result<Vec<Table>> {
    require_pairs(config)?;
    let ch = chain(config)?;
    chain_metadata(&ch, meta);
    let j = ch.coupling.normalized()?;
    let grid = config.time_grid.values();
    let psi = &config.initial_state;
    let (mut fid, mut mag) = trajectory_tables();
    let t_final = config.time_grid.stop;
    meta.put(
        "flags.absolute_j_caveat",
        "real times scale with the computed J; fidelities are reported against Jt",
    );
    if config.protocol == ProtocolChoice::Exact {
        let exact = exact_evolve(&build_model(config.model, &j)?, psi, &grid, None)?;
        push_trajectory(&mut fid, &mut mag, &exact, "exact", &[]);
        return Ok(vec![fid, mag]);
    }
    heisenberg_only(config)?;
    let exact = exact_evolve(&build_model(ModelKind::Heisenberg, &j)?, psi, &grid, None)?;
    push_trajectory(&mut fid, &mut mag, &exact, "exact", &[]);
    let n = config.chain.num_ions;
    if config.protocol == ProtocolChoice::Digital {
        let l = config.trotter_steps;
        let eps = (config.gate_infidelity > 0.0).then_some(config.gate_infidelity);
        let rec = digital_evolve(&j, psi, &grid, l, None, eps)?;
        push_trajectory(&mut fid, &mut mag, &rec, "digital", &vec![l; grid.len()]);
        meta.put(
            "gates.digital_two_qubit",
            gate_count(n, config.interaction_range, l, Scheme::Digital)?.two_qubit,
        );
        return Ok(vec![fid, mag]);
    }

    eta_metadata(config, &ch, meta)?;
    let simulated;
    let fixed;
    let model: &dyn BlockErrorModel = match config.block_error {
        BlockErrorSource::None => {
            fixed = FixedBlockError(0.0);
            &fixed
        }
        BlockErrorSource::Fixed(e) => {
            fixed = FixedBlockError(e);
            &fixed
        }
        BlockErrorSource::Simulated => {
            simulated = simulated_blocks(config, &ch, config.rotating_wave)?;
            warnings.extend(simulated.xy.regime_warnings(0.0));
            &simulated
        }
    };
    let label = if config.optimize {
        "daqs_optimized"
    } else {
        "daqs"
    };
    let mut regions = Table::new(
        "regions",
        &[
            "region",
            "Jt_end",
            "l",
            "fidelity",
            "trotter_fidelity",
            "error_factor",
        ],
    );
    let (fidelities, magnetizations, steps, last, dominates) = if config.optimize {
        let settings = OptimizerSettings {
            l_max: config.l_max,
            regions: config.regions,
            single_qubit_error: config.single_qubit_infidelity,
        };
        let opt = optimize_trotter_steps(&j, psi, t_final, &grid, model, &settings)?;
        for (k, r) in opt.regions.iter().enumerate() {
            regions.push(vec![
                (k + 1).to_string(),
                num(r.end_time),
                r.trotter_steps.to_string(),
                num(r.fidelity),
                num(r.trotter_fidelity),
                num(r.error_factor),
            ]);
        }
        let last = opt.regions.last().map_or(1, |r| r.trotter_steps);
        let dominates = opt.dominates_fixed_steps();
        (
            opt.fidelities,
            opt.magnetizations,
            opt.steps,
            last,
            Some(dominates),
        )
    } else {
        let l = config.trotter_steps;
        let clean = daqs_evolve(&j, psi, &grid, l, None)?;
        let rec = daqs_evolve(&j, psi, &grid, l, Some(model))?;
        let rot = (1.0 - config.single_qubit_infidelity).powi(2 * l as i32);
        let fidelities: Vec<f64> = rec
            .fidelities
            .iter()
            .zip(&grid)
            .map(|(f, t)| if *t == 0.0 { *f } else { f * rot })
            .collect();
        let k = grid.len() - 1;
        regions.push(vec![
            "1".into(),
            num(grid[k]),
            l.to_string(),
            num(fidelities[k]),
            num(clean.fidelities[k]),
            num(fidelities[k] / clean.fidelities[k]),
        ]);
        (fidelities, rec.magnetizations, vec![l; grid.len()], l, None)
    };
    for (k, t) in grid.iter().enumerate() {
        fid.push(vec![
            num(*t),
            num(fidelities[k]),
            label.into(),
            steps[k].to_string(),
        ]);
        for (site, m) in magnetizations[k].iter().enumerate() {
            mag.push(vec![num(*t), (site + 1).to_string(), num(*m), label.into()]);
        }
    }
    // XX blocks run for Jt/J in total, XY blocks for twice that
    let total_block_time = 3.0 * t_final / ch.fit_j;
    meta.put(
        "protocol.final_fidelity",
        num(*fidelities.last().unwrap_or(&f64::NAN)),
    );
    meta.put("protocol.final_trotter_steps", last);
    meta.put("protocol.total_block_time_s", num(total_block_time));
    let counts = gate_count(n, config.interaction_range, last, Scheme::Daqs)?;
    meta.put("protocol.analog_blocks", counts.analog_blocks);
    meta.put("protocol.single_qubit_gates", counts.single_qubit);
    if let Some(d) = dominates {
        meta.put("protocol.dominates_fixed_steps", d);
    }
    Ok(vec![fid, mag, regions])
}
