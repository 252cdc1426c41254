//! Exact, fully digital and digital-analog evolution of the Heisenberg model.
//!
//! The digital-analog (DAQS) Trotter step is
//!
//! ```text
//! U(τ) = exp(-i H_XY τ) · R_y · exp(-i H_XX τ) · R_y†,   R_y = exp(-i π/4 Σ_j σ_j^y)
//! ```
//!
//! where the rotated XX block realises `exp(-i H_ZZ τ)`. The fully digital
//! step applies one two-qubit gate `exp(-i J_ij τ σ_i^a σ_j^a)` per pair and
//! axis.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::ion_chain::CouplingMatrix;
use crate::spin_algebra::{
    global_rotation, max_abs, pauli_string_action, spectral_norm, Axis, Spectrum, SpinOperator,
    SpinState,
};
use crate::spin_models::{build_model, sup_norm_bound, ModelKind};
use crate::{Error, Result, C64};

/// Kind of analog block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Xx,
    Xy,
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockKind::Xx => "xx",
            BlockKind::Xy => "xy",
        })
    }
}

/// One element of a protocol, in time order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    /// Global rotation `exp(-i angle Σ_j σ_j^axis)`.
    Digital { axis: Axis, angle: f64 },
    /// Evolution under `H_XX` or `H_XY` for `duration`.
    Analog { kind: BlockKind, duration: f64 },
}

/// Ordered digital steps and analog blocks for a Trotterized evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSchedule {
    steps: Vec<Step>,
    trotter_steps: usize,
    target_time: f64,
}

impl ProtocolSchedule {
    /// DAQS schedule reaching `target_time` in `trotter_steps` steps.
    pub fn daqs(target_time: f64, trotter_steps: usize) -> Result<Self> {
        check_time_steps(target_time, trotter_steps)?;
        let tau = target_time / trotter_steps as f64;
        let one = [
            Step::Digital {
                axis: Axis::Y,
                angle: -FRAC_PI_4,
            },
            Step::Analog {
                kind: BlockKind::Xx,
                duration: tau,
            },
            Step::Digital {
                axis: Axis::Y,
                angle: FRAC_PI_4,
            },
            Step::Analog {
                kind: BlockKind::Xy,
                duration: tau,
            },
        ];
        let steps = one
            .iter()
            .copied()
            .cycle()
            .take(4 * trotter_steps)
            .collect();
        Ok(Self {
            steps,
            trotter_steps,
            target_time,
        })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn trotter_steps(&self) -> usize {
        self.trotter_steps
    }

    pub fn target_time(&self) -> f64 {
        self.target_time
    }

    pub fn analog_blocks(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Analog { .. }))
            .count()
    }

    pub fn digital_steps(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Digital { .. }))
            .count()
    }

    /// Sum of analog block durations.
    pub fn total_analog_duration(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| match s {
                Step::Analog { duration, .. } => *duration,
                Step::Digital { .. } => 0.0,
            })
            .sum()
    }

    /// Unitary realised by the schedule with ideal blocks.
    pub fn unitary(&self, j: &CouplingMatrix) -> Result<SpinOperator> {
        let n = j.size();
        let xx = Spectrum::new(&build_model(ModelKind::Xx, j)?)?;
        let xy = Spectrum::new(&build_model(ModelKind::Xy, j)?)?;
        let mut u = SpinOperator::identity(n)?;
        for step in &self.steps {
            let next = match *step {
                Step::Digital { axis, angle } => global_rotation(axis, angle, n)?,
                Step::Analog {
                    kind: BlockKind::Xx,
                    duration,
                } => xx.propagator(duration),
                Step::Analog {
                    kind: BlockKind::Xy,
                    duration,
                } => xy.propagator(duration),
            };
            u = next.compose(&u)?;
        }
        Ok(u)
    }
}

fn check_time_steps(t: f64, l: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::arg("number of Trotter steps must be at least 1"));
    }
    if !t.is_finite() {
        return Err(Error::arg("evolution time must be finite"));
    }
    Ok(())
}

/// Which evolution produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    Exact,
    Digital,
    Daqs,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Exact => "exact",
            Generator::Digital => "digital",
            Generator::Daqs => "daqs",
        })
    }
}

/// Time-sampled states and observables of one evolution.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub generator: Generator,
    /// `None` for exact evolution.
    pub trotter_steps: Option<usize>,
    pub times: Vec<f64>,
    /// Fidelity against the reference, including any gate-error factor.
    pub fidelities: Vec<f64>,
    /// `⟨σ_j^z⟩` per time, per site.
    pub magnetizations: Vec<Vec<f64>>,
    pub states: Vec<SpinState>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Per-block infidelity of the physical analog blocks.
pub trait BlockErrorModel: Sync {
    /// Infidelity of a block of `kind` for each ideal-Hamiltonian duration
    /// (the time `τ` in `exp(-i H τ)`).
    fn infidelities(&self, kind: BlockKind, durations: &[f64]) -> Result<Vec<f64>>;
}

/// The same infidelity for every block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedBlockError(pub f64);

impl BlockErrorModel for FixedBlockError {
    fn infidelities(&self, _kind: BlockKind, durations: &[f64]) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&self.0) {
            return Err(Error::arg(format!(
                "block infidelity {} outside [0, 1]",
                self.0
            )));
        }
        Ok(vec![self.0; durations.len()])
    }
}

/// Multiplicative fidelity factor `Π (1 - ε_block)` of an `l`-step DAQS
/// protocol reaching each of `times`. Nothing runs at `t = 0`, so the factor
/// there is 1.
pub fn daqs_block_factors(
    model: &dyn BlockErrorModel,
    times: &[f64],
    l: usize,
) -> Result<Vec<f64>> {
    let durations: Vec<f64> = times.iter().map(|t| t / l as f64).collect();
    let xx = model.infidelities(BlockKind::Xx, &durations)?;
    let xy = model.infidelities(BlockKind::Xy, &durations)?;
    Ok(times
        .iter()
        .zip(xx.iter().zip(&xy))
        .map(|(t, (a, b))| {
            if *t == 0.0 {
                1.0
            } else {
                ((1.0 - a) * (1.0 - b)).powi(l as i32)
            }
        })
        .collect())
}

fn check_state(j: &CouplingMatrix, psi0: &SpinState) -> Result<()> {
    if psi0.num_sites() != j.size() {
        return Err(Error::arg(format!(
            "initial state has {} sites, couplings describe {}",
            psi0.num_sites(),
            j.size()
        )));
    }
    Ok(())
}

/// `ψ(t) = exp(-iHt) ψ₀` on a time grid. Fidelities are taken against
/// `reference` when given, else reported as 1.
pub fn exact_evolve(
    h: &SpinOperator,
    psi0: &SpinState,
    times: &[f64],
    reference: Option<&[SpinState]>,
) -> Result<TrajectoryRecord> {
    if let Some(r) = reference {
        if r.len() != times.len() {
            return Err(Error::arg(
                "reference trajectory length differs from the time grid",
            ));
        }
    }
    let spectrum = Spectrum::new(h)?;
    let states = times
        .par_iter()
        .map(|&t| spectrum.evolve(psi0, t))
        .collect::<Result<Vec<_>>>()?;
    let fidelities = match reference {
        Some(r) => states
            .iter()
            .zip(r)
            .map(|(s, r)| Ok(s.overlap(r)?.norm_sqr()))
            .collect::<Result<Vec<_>>>()?,
        None => vec![1.0; times.len()],
    };
    Ok(TrajectoryRecord {
        generator: Generator::Exact,
        trotter_steps: None,
        times: times.to_vec(),
        fidelities,
        magnetizations: states.iter().map(SpinState::magnetizations).collect(),
        states,
    })
}

/// Exact Heisenberg states on a time grid.
pub fn heisenberg_reference(
    j: &CouplingMatrix,
    psi0: &SpinState,
    times: &[f64],
) -> Result<TrajectoryRecord> {
    check_state(j, psi0)?;
    exact_evolve(&build_model(ModelKind::Heisenberg, j)?, psi0, times, None)
}

/// Cached spectra for repeated DAQS steps with one coupling matrix.
#[derive(Debug, Clone)]
pub struct DaqsPropagator {
    xx: Spectrum,
    xy: Spectrum,
    rotation: SpinOperator,
    num_sites: usize,
}

impl DaqsPropagator {
    /// Builds the block spectra and checks `R_y H_XX R_y† = H_ZZ`.
    pub fn new(j: &CouplingMatrix) -> Result<Self> {
        let n = j.size();
        let h_xx = build_model(ModelKind::Xx, j)?;
        let h_zz = build_model(ModelKind::Zz, j)?;
        let rotation = global_rotation(Axis::Y, FRAC_PI_4, n)?;
        let defect = max_abs(&(h_xx.conjugated_by(&rotation)?.into_matrix() - h_zz.matrix()));
        let scale = max_abs(h_zz.matrix()).max(1.0);
        if defect > 1e-10 * scale {
            return Err(Error::Contract(format!(
                "R_y(π/4) does not map H_XX onto H_ZZ (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            xx: Spectrum::new(&h_xx)?,
            xy: Spectrum::new(&build_model(ModelKind::Xy, j)?)?,
            rotation,
            num_sites: n,
        })
    }

    /// One Trotter step of duration `tau`.
    pub fn step(&self, tau: f64) -> Result<SpinOperator> {
        let zz = self.xx.propagator(tau).conjugated_by(&self.rotation)?;
        self.xy.propagator(tau).compose(&zz)
    }

    /// `[U(t/l)]^l`.
    pub fn unitary(&self, t: f64, l: usize) -> Result<SpinOperator> {
        check_time_steps(t, l)?;
        self.step(t / l as f64)?.pow(l)
    }

    /// `[U(t/l)]^l ψ₀`.
    pub fn evolve(&self, psi0: &SpinState, t: f64, l: usize) -> Result<SpinState> {
        check_time_steps(t, l)?;
        if psi0.num_sites() != self.num_sites {
            return Err(Error::arg(
                "state and couplings describe different registers",
            ));
        }
        let step = self.step(t / l as f64)?;
        let mut amps = psi0.amplitudes().clone();
        for _ in 0..l {
            amps = step.matrix() * amps;
        }
        Ok(SpinState::from_raw(amps, self.num_sites))
    }
}

/// The DAQS Trotter step `U(t/l)`.
pub fn daqs_step_unitary(j: &CouplingMatrix, t: f64, l: usize) -> Result<SpinOperator> {
    check_time_steps(t, l)?;
    DaqsPropagator::new(j)?.step(t / l as f64)
}

/// DAQS evolution with `l` Trotter steps to every time in `times`, scored
/// against exact Heisenberg evolution. With a block error model, each
/// fidelity is multiplied by `Π (1 - ε)` over the `2l` blocks.
pub fn daqs_evolve(
    j: &CouplingMatrix,
    psi0: &SpinState,
    times: &[f64],
    l: usize,
    block_error: Option<&dyn BlockErrorModel>,
) -> Result<TrajectoryRecord> {
    check_state(j, psi0)?;
    let reference = heisenberg_reference(j, psi0, times)?;
    let prop = DaqsPropagator::new(j)?;
    let states = times
        .par_iter()
        .map(|&t| prop.evolve(psi0, t, l))
        .collect::<Result<Vec<_>>>()?;
    let factors = match block_error {
        Some(model) => daqs_block_factors(model, times, l)?,
        None => vec![1.0; times.len()],
    };
    finish_record(
        Generator::Daqs,
        l,
        times,
        states,
        &reference.states,
        &factors,
    )
}

fn finish_record(
    generator: Generator,
    l: usize,
    times: &[f64],
    states: Vec<SpinState>,
    reference: &[SpinState],
    factors: &[f64],
) -> Result<TrajectoryRecord> {
    let fidelities = states
        .iter()
        .zip(reference)
        .zip(factors)
        .map(|((s, r), f)| Ok(s.overlap(r)?.norm_sqr() * f))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryRecord {
        generator,
        trotter_steps: Some(l),
        times: times.to_vec(),
        fidelities,
        magnetizations: states.iter().map(SpinState::magnetizations).collect(),
        states,
    })
}

/// One two-qubit gate `exp(-i J_ij τ σ_i^a σ_j^a)` of the digital protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairAxis {
    pub i: usize,
    pub j: usize,
    pub axis: Axis,
}

/// Lexicographic pairs with nonzero coupling, axes x, y, z within each pair.
pub fn default_ordering(j: &CouplingMatrix) -> Vec<PairAxis> {
    j.pairs()
        .filter(|(_, _, v)| *v != 0.0)
        .flat_map(|(a, b, _)| {
            Axis::ALL
                .into_iter()
                .map(move |axis| PairAxis { i: a, j: b, axis })
        })
        .collect()
}

/// Checks that `ordering` lists every coupled pair and axis exactly once.
pub fn validate_ordering(j: &CouplingMatrix, ordering: &[PairAxis]) -> Result<()> {
    let n = j.size();
    let mut seen = std::collections::HashSet::new();
    for g in ordering {
        if g.i >= g.j || g.j >= n {
            return Err(Error::arg(format!(
                "gate on ({}, {}) is not a pair i < j < {n}",
                g.i, g.j
            )));
        }
        if !seen.insert(*g) {
            return Err(Error::arg(format!(
                "gate ({}, {}, {}) appears twice in the ordering",
                g.i, g.j, g.axis
            )));
        }
    }
    for want in default_ordering(j) {
        if !seen.contains(&want) {
            return Err(Error::arg(format!(
                "ordering misses the {} term of pair ({}, {})",
                want.axis, want.i, want.j
            )));
        }
    }
    Ok(())
}

fn apply_gate_sequence(
    amps: &mut DVector<C64>,
    j: &CouplingMatrix,
    ordering: &[PairAxis],
    tau: f64,
    n: usize,
) {
    let mut scratch = DVector::<C64>::zeros(amps.len());
    for g in ordering {
        let theta = j.get(g.i, g.j) * tau;
        let (c, s) = (theta.cos(), theta.sin());
        let ops = [(g.i, g.axis), (g.j, g.axis)];
        scratch.fill(C64::new(0.0, 0.0));
        for (b, a) in amps.iter().enumerate() {
            let (nb, phase) = pauli_string_action(&ops, b, n);
            scratch[nb] += phase * a;
        }
        // exp(-iθP) = cos θ - i sin θ P, since P² = 1
        for (a, p) in amps.iter_mut().zip(scratch.iter()) {
            *a = *a * c + C64::new(0.0, -s) * p;
        }
    }
}

/// Digital evolution `[Π_gates exp(-i J_ij (t/l) σ_i^a σ_j^a)]^l ψ₀` with an
/// arbitrary, possibly partial, gate ordering.
pub fn digital_state(
    j: &CouplingMatrix,
    psi0: &SpinState,
    t: f64,
    l: usize,
    ordering: &[PairAxis],
) -> Result<SpinState> {
    check_time_steps(t, l)?;
    check_state(j, psi0)?;
    let n = j.size();
    if ordering.iter().any(|g| g.i >= n || g.j >= n || g.i == g.j) {
        return Err(Error::arg(
            "gate ordering refers to sites outside the register",
        ));
    }
    let tau = t / l as f64;
    let mut amps = psi0.amplitudes().clone();
    for _ in 0..l {
        apply_gate_sequence(&mut amps, j, ordering, tau, n);
    }
    Ok(SpinState::from_raw(amps, n))
}

/// Unitary of the digital protocol, column by column.
pub fn digital_unitary(
    j: &CouplingMatrix,
    t: f64,
    l: usize,
    ordering: &[PairAxis],
) -> Result<SpinOperator> {
    let n = j.size();
    let dim = 1 << n;
    let mut m = nalgebra::DMatrix::<C64>::identity(dim, dim);
    for col in 0..dim {
        let psi = SpinState::basis(n, col)?;
        let out = digital_state(j, &psi, t, l, ordering)?;
        m.set_column(col, out.amplitudes());
    }
    SpinOperator::unitary(m, n)
}

/// Fully digital evolution scored against exact Heisenberg evolution. With
/// `gate_error = ε_T`, fidelities carry the factor `(1 - ε_T)^(gate count)`.
pub fn digital_evolve(
    j: &CouplingMatrix,
    psi0: &SpinState,
    times: &[f64],
    l: usize,
    ordering: Option<&[PairAxis]>,
    gate_error: Option<f64>,
) -> Result<TrajectoryRecord> {
    check_state(j, psi0)?;
    if l == 0 {
        return Err(Error::arg("number of Trotter steps must be at least 1"));
    }
    let default;
    let ordering = match ordering {
        Some(o) => {
            validate_ordering(j, o)?;
            o
        }
        None => {
            default = default_ordering(j);
            &default[..]
        }
    };
    let factor = match gate_error {
        Some(e) if !(0.0..=1.0).contains(&e) => {
            return Err(Error::arg(format!("gate infidelity {e} outside [0, 1]")))
        }
        Some(e) => (1.0 - e).powi((ordering.len() * l) as i32),
        None => 1.0,
    };
    let reference = heisenberg_reference(j, psi0, times)?;
    let states = times
        .par_iter()
        .map(|&t| digital_state(j, psi0, t, l, ordering))
        .collect::<Result<Vec<_>>>()?;
    let factors: Vec<f64> = times
        .iter()
        .map(|t| if *t == 0.0 { 1.0 } else { factor })
        .collect();
    finish_record(
        Generator::Digital,
        l,
        times,
        states,
        &reference.states,
        &factors,
    )
}

/// `l·(e^x - 1 - x)` with `x = Σ_{i<j} J_ij · t / l`: the summed tail
/// `Σ_{k≥2} l‖Ht/l‖^k/k!` of the Trotter error.
pub fn trotter_error_bound(j: &CouplingMatrix, t: f64, l: usize) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::arg(format!("time must be non-negative, got {t}")));
    }
    check_time_steps(t, l)?;
    let x = sup_norm_bound(j)? * t / l as f64;
    Ok(l as f64 * (x.exp_m1() - x))
}

/// Spectral-norm distance `‖U_DAQS(t, l) - exp(-i H_H t)‖`.
pub fn daqs_operator_error(j: &CouplingMatrix, t: f64, l: usize) -> Result<f64> {
    let u = DaqsPropagator::new(j)?.unitary(t, l)?;
    let exact = Spectrum::new(&build_model(ModelKind::Heisenberg, j)?)?.propagator(t);
    Ok(spectral_norm(&(u.into_matrix() - exact.into_matrix())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_algebra::{propagator, state_fidelity};

    fn random_state(n: usize, seed: u64) -> SpinState {
        // xorshift keeps the test free of RNG dependencies
        let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let v = DVector::from_fn(1 << n, |_, _| C64::new(next(), next()));
        SpinState::normalized(v, n).unwrap()
    }

    #[test]
    fn schedule_structure() {
        let s = ProtocolSchedule::daqs(1.2, 3).unwrap();
        assert_eq!(s.analog_blocks(), 6);
        assert_eq!(s.digital_steps(), 6);
        assert!((s.total_analog_duration() - 2.4).abs() < 1e-15);
        assert!(ProtocolSchedule::daqs(1.0, 0).is_err());
    }

    #[test]
    fn schedule_unitary_matches_step_power() {
        let j = CouplingMatrix::power_law(3, 1.0, 0.8).unwrap();
        let s = ProtocolSchedule::daqs(0.9, 3).unwrap();
        let a = s.unitary(&j).unwrap();
        let b = DaqsPropagator::new(&j).unwrap().unitary(0.9, 3).unwrap();
        assert!(max_abs(&(a.into_matrix() - b.into_matrix())) < 1e-12);
    }

    #[test]
    fn exact_evolve_at_zero_and_diagonal() {
        let j = CouplingMatrix::power_law(4, 1.0, 0.6).unwrap();
        let psi: SpinState = "↓↑↑↓".parse().unwrap();
        let hzz = build_model(ModelKind::Zz, &j).unwrap();
        let rec = exact_evolve(&hzz, &psi, &[0.0, 0.3, 1.7], None).unwrap();
        assert_eq!(rec.states[0], psi);
        for m in &rec.magnetizations {
            for (a, b) in m.iter().zip([-1.0, 1.0, 1.0, -1.0]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(rec.fidelities, vec![1.0; 3]);
    }

    #[test]
    fn two_spin_heisenberg_magnetization_oracle() {
        let j0 = 0.7;
        let j = CouplingMatrix::uniform(2, j0).unwrap();
        let psi: SpinState = "↑↓".parse().unwrap();
        let times: Vec<f64> = (0..20).map(|k| 0.1 * k as f64).collect();
        let rec = heisenberg_reference(&j, &psi, &times).unwrap();
        for (t, m) in times.iter().zip(&rec.magnetizations) {
            assert!((m[0] - (4.0 * j0 * t).cos()).abs() < 1e-12);
            assert!((m[1] + (4.0 * j0 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn daqs_step_at_zero_is_identity() {
        let j = CouplingMatrix::power_law(3, 1.0, 0.5).unwrap();
        let u = daqs_step_unitary(&j, 0.0, 4).unwrap();
        assert!(max_abs(&(u.into_matrix() - nalgebra::DMatrix::identity(8, 8))) < 1e-12);
    }

    #[test]
    fn uniform_couplings_make_one_step_exact() {
        for n in 2..=5 {
            let j = CouplingMatrix::uniform(n, 1.0).unwrap();
            let u = daqs_step_unitary(&j, 1.0, 1).unwrap();
            let exact = propagator(&build_model(ModelKind::Heisenberg, &j).unwrap(), 1.0).unwrap();
            for seed in 0..3 {
                let psi = random_state(n, seed + 10 * n as u64);
                let f =
                    state_fidelity(&u.apply(&psi).unwrap(), &exact.apply(&psi).unwrap()).unwrap();
                assert!(f > 1.0 - 1e-8, "n = {n}: {f}");
            }
        }
    }

    #[test]
    fn trotter_error_shrinks_with_steps() {
        let j = CouplingMatrix::power_law(4, 1.0, 1.0).unwrap();
        let e: Vec<f64> = [1, 2, 4, 8]
            .iter()
            .map(|&l| daqs_operator_error(&j, 1.0, l).unwrap())
            .collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
    }

    #[test]
    fn daqs_evolve_uniform_has_unit_fidelity() {
        let j = CouplingMatrix::uniform(4, 1.0).unwrap();
        let psi: SpinState = "↓↑↓↓".parse().unwrap();
        let times: Vec<f64> = (1..8).map(|k| 0.3 * k as f64).collect();
        for l in [1, 3] {
            let rec = daqs_evolve(&j, &psi, &times, l, None).unwrap();
            assert!(rec.fidelities.iter().all(|f| (f - 1.0).abs() < 1e-8));
        }
    }

    #[test]
    fn daqs_block_error_factor() {
        let j = CouplingMatrix::uniform(3, 1.0).unwrap();
        let psi: SpinState = "↓↑↓".parse().unwrap();
        let rec = daqs_evolve(&j, &psi, &[0.5], 3, Some(&FixedBlockError(0.01))).unwrap();
        assert!((rec.fidelities[0] - 0.99f64.powi(6)).abs() < 1e-8);
        assert!(daqs_evolve(&j, &psi, &[0.5], 3, Some(&FixedBlockError(1.5))).is_err());
    }

    #[test]
    fn daqs_echo_returns_initial_state() {
        let j = CouplingMatrix::power_law(4, 1.0, 0.6).unwrap();
        let psi = random_state(4, 99);
        let prop = DaqsPropagator::new(&j).unwrap();
        let fwd = prop.step(0.4).unwrap();
        // U(-τ) differs from U(τ)† when the blocks do not commute
        let there = fwd.pow(3).unwrap().apply(&psi).unwrap();
        let again = fwd.adjoint().pow(3).unwrap().apply(&there).unwrap();
        assert!((state_fidelity(&again, &psi).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn many_steps_converge_for_both_protocols() {
        let j = CouplingMatrix::power_law(4, 1.0, 0.6).unwrap();
        let psi: SpinState = "↓↑↓↓".parse().unwrap();
        let d = digital_evolve(&j, &psi, &[1.0], 64, None, None).unwrap();
        let a = daqs_evolve(&j, &psi, &[1.0], 64, None).unwrap();
        assert!(d.fidelities[0] > 0.999 && a.fidelities[0] > 0.999);
    }

    #[test]
    fn digital_two_spin_matches_brute_force() {
        let j = CouplingMatrix::uniform(2, 0.9).unwrap();
        let t = 0.8;
        let ordering = default_ordering(&j);
        assert_eq!(ordering.len(), 3);
        let u = digital_unitary(&j, t, 1, &ordering).unwrap();
        // the three axis terms of one pair commute: one step is exact
        let exact = propagator(&build_model(ModelKind::Heisenberg, &j).unwrap(), t).unwrap();
        assert!(max_abs(&(u.into_matrix() - exact.into_matrix())) < 1e-12);
    }

    #[test]
    fn digital_gates_match_dense_product() {
        let j = CouplingMatrix::power_law(3, 1.0, 0.9).unwrap();
        let t = 0.7;
        let ordering = default_ordering(&j);
        let fast = digital_unitary(&j, t, 2, &ordering).unwrap();
        let mut dense = nalgebra::DMatrix::<C64>::identity(8, 8);
        for _ in 0..2 {
            for g in &ordering {
                let p =
                    crate::spin_algebra::pauli_string_matrix(&[(g.i, g.axis), (g.j, g.axis)], 3);
                let h = SpinOperator::hamiltonian(p * C64::new(j.get(g.i, g.j), 0.0), 3).unwrap();
                dense = propagator(&h, t / 2.0).unwrap().into_matrix() * dense;
            }
        }
        assert!(max_abs(&(fast.into_matrix() - dense)) < 1e-12);
    }

    #[test]
    fn zz_only_digital_is_exact() {
        let j = CouplingMatrix::power_law(4, 1.0, 0.6).unwrap();
        let zz_only: Vec<PairAxis> = default_ordering(&j)
            .into_iter()
            .filter(|g| g.axis == Axis::Z)
            .collect();
        let u = digital_unitary(&j, 1.3, 1, &zz_only).unwrap();
        let exact = propagator(&build_model(ModelKind::Zz, &j).unwrap(), 1.3).unwrap();
        assert!(max_abs(&(u.into_matrix() - exact.into_matrix())) < 1e-12);
        let psi: SpinState = "↓↓↑↓".parse().unwrap();
        assert!(digital_evolve(&j, &psi, &[1.0], 1, Some(&zz_only), None).is_err());
    }

    #[test]
    fn ordering_validation() {
        let j = CouplingMatrix::uniform(3, 1.0).unwrap();
        let mut o = default_ordering(&j);
        assert!(validate_ordering(&j, &o).is_ok());
        o.push(o[0]);
        assert!(validate_ordering(&j, &o).is_err());
        o.pop();
        o.remove(4);
        assert!(validate_ordering(&j, &o).is_err());
        let bad = vec![PairAxis {
            i: 2,
            j: 1,
            axis: Axis::X,
        }];
        assert!(validate_ordering(&j, &bad).is_err());
    }

    #[test]
    fn digital_gate_error_factor() {
        let j = CouplingMatrix::uniform(3, 1.0).unwrap();
        let psi: SpinState = "↓↑↓".parse().unwrap();
        let clean = digital_evolve(&j, &psi, &[0.4], 2, None, None).unwrap();
        let noisy = digital_evolve(&j, &psi, &[0.4], 2, None, Some(0.01)).unwrap();
        let want = clean.fidelities[0] * 0.99f64.powi(18);
        assert!((noisy.fidelities[0] - want).abs() < 1e-12);
    }

    #[test]
    fn trotter_bound_examples() {
        let j = CouplingMatrix::power_law(3, 1.0, 0.5).unwrap();
        assert_eq!(trotter_error_bound(&j, 0.0, 3).unwrap(), 0.0);
        for t in [0.1, 0.5, 2.0] {
            let b1 = trotter_error_bound(&j, t, 1).unwrap();
            let b2 = trotter_error_bound(&j, t, 2).unwrap();
            assert!(b2 < b1);
        }
        assert!(trotter_error_bound(&j, -1.0, 1).is_err());
        // x = 0.3: l(e^x - 1 - x) by the series
        let u = CouplingMatrix::uniform(2, 0.3).unwrap();
        let series: f64 = (2..30)
            .map(|k| 0.3f64.powi(k) / (1..=k).map(f64::from).product::<f64>())
            .sum();
        assert!((trotter_error_bound(&u, 1.0, 1).unwrap() - series).abs() < 1e-15);
    }

    #[test]
    fn norm_is_preserved() {
        let j = CouplingMatrix::power_law(5, 1.0, 0.6).unwrap();
        let psi: SpinState = "↓↓↑↓↓".parse().unwrap();
        let times: Vec<f64> = (0..10).map(|k| 0.25 * k as f64).collect();
        let d = daqs_evolve(&j, &psi, &times, 2, None).unwrap();
        let g = digital_evolve(&j, &psi, &times, 2, None, None).unwrap();
        for s in d.states.iter().chain(&g.states) {
            assert!((s.norm() - 1.0).abs() < 1e-10);
        }
    }
}
