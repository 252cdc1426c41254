//! Analog blocks simulated at the spin⊗phonon level.
//!
//! In the Lamb-Dicke regime the bichromatic drive reads
//!
//! ```text
//! H(t) = Σ_j Σ_m g_jm σ_j^+ e^{-iδt} [a_m f_m(t) + a_m† f̄_m(t)] + h.c.
//! f_m(t) = e^{iΔ_m t} + r e^{-i(2ν_m + Δ_m) t},  f̄_m(t) = e^{-iΔ_m t} + r e^{i(2ν_m + Δ_m) t}
//! ```
//!
//! with `g_jm = Ω_j η_jm`, `δ = 0` for the XX block and `r = 1` only when the
//! counter-rotating terms are kept. Adiabatic elimination turns this into
//! `H_XX` (δ = 0) or `½ H_XY` (0 < δ ≪ Δ).
//!
//! States on the joint space are flat vectors indexed `s · F + f`, where `s`
//! is the spin basis index and `f` the mixed-radix Fock index (first mode most
//! significant) with `F = Π (n_max + 1)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::evolution::BlockKind;
use crate::ion_chain::{lamb_dicke_params, mode_detunings, ChainConfig, CouplingMatrix, ModeData};
use crate::spin_algebra::{dimension, site_mask, Spectrum, SpinOperator, SpinState};
use crate::spin_models::{build_model, ModelKind};
use crate::{Error, Result, C64};

/// One retained motional mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhononMode {
    /// `ν_m`, rad/s.
    pub frequency: f64,
    /// `Δ_m`, rad/s.
    pub detuning: f64,
    pub n_max: usize,
}

/// Truncated Fock space of the retained modes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhononSpace {
    modes: Vec<PhononMode>,
    dimension_cap: usize,
}

impl PhononSpace {
    /// Largest joint spin⊗Fock dimension accepted by default.
    pub const DEFAULT_DIMENSION_CAP: usize = 1 << 22;

    pub fn new(modes: Vec<PhononMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::arg("phonon space needs at least one mode"));
        }
        for m in &modes {
            if m.n_max < 2 {
                return Err(Error::arg(format!(
                    "Fock cutoff must be at least 2, got {}",
                    m.n_max
                )));
            }
            if !(m.frequency > 0.0) || !m.detuning.is_finite() {
                return Err(Error::arg(
                    "mode frequencies must be positive and detunings finite",
                ));
            }
        }
        Ok(Self {
            modes,
            dimension_cap: Self::DEFAULT_DIMENSION_CAP,
        })
    }

    /// A single centre-of-mass mode at `Δ_COM = Δ`.
    pub fn effective_com(com_frequency: f64, detuning: f64, n_max: usize) -> Result<Self> {
        Self::new(vec![PhononMode {
            frequency: com_frequency,
            detuning,
            n_max,
        }])
    }

    /// All given normal modes with `Δ_m = Δ + ν_COM - ν_m`.
    pub fn from_modes(modes: &ModeData, detuning: f64, n_max: usize) -> Result<Self> {
        let detunings = mode_detunings(detuning, modes)?;
        Self::new(
            modes
                .modes
                .iter()
                .zip(detunings)
                .map(|(m, d)| PhononMode {
                    frequency: m.frequency,
                    detuning: d,
                    n_max,
                })
                .collect(),
        )
    }

    pub fn with_dimension_cap(mut self, cap: usize) -> Self {
        self.dimension_cap = cap;
        self
    }

    pub fn modes(&self) -> &[PhononMode] {
        &self.modes
    }

    pub fn fock_dim(&self) -> usize {
        self.modes.iter().map(|m| m.n_max + 1).product()
    }

    /// `2^N · Π (n_max + 1)`, checked against the cap.
    pub fn total_dim(&self, num_sites: usize) -> Result<usize> {
        let requested = (num_sites < usize::BITS as usize - 1)
            .then(|| dimension(num_sites).checked_mul(self.fock_dim()))
            .flatten()
            .unwrap_or(usize::MAX);
        if requested > self.dimension_cap {
            return Err(Error::Resource {
                requested,
                cap: self.dimension_cap,
            });
        }
        Ok(requested)
    }

    /// Every cutoff raised by `by`.
    pub fn raised(&self, by: usize) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| PhononMode {
                n_max: m.n_max + by,
                ..*m
            })
            .collect();
        Self {
            modes,
            dimension_cap: self.dimension_cap,
        }
    }

    /// `|spin⟩ ⊗ |0…0⟩`.
    pub fn vacuum_state(&self, spin: &SpinState) -> Result<DVector<C64>> {
        let fock = self.fock_dim();
        let mut out = DVector::zeros(self.total_dim(spin.num_sites())?);
        for (s, a) in spin.amplitudes().iter().enumerate() {
            out[s * fock] = *a;
        }
        Ok(out)
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.modes.len()];
        for m in (0..self.modes.len().saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * (self.modes[m + 1].n_max + 1);
        }
        strides
    }

    /// Occupation of each mode for every Fock index, row-major.
    fn occupations(&self) -> Vec<usize> {
        let strides = self.strides();
        let nm = self.modes.len();
        let mut occ = vec![0; self.fock_dim() * nm];
        for f in 0..self.fock_dim() {
            for (m, mode) in self.modes.iter().enumerate() {
                occ[f * nm + m] = (f / strides[m]) % (mode.n_max + 1);
            }
        }
        occ
    }
}

/// How the motional modes are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionModel {
    /// One COM mode with a uniform effective Lamb-Dicke parameter.
    EffectiveCom,
    /// All transverse normal modes.
    Full,
}

/// Drive parameters of one analog block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub kind: BlockKind,
    /// `Δ`, rad/s.
    pub detuning: f64,
    /// `δ`, rad/s. Zero for the XX block.
    pub slow_detuning: f64,
    /// `Ω_j`, rad/s.
    pub rabi: Vec<f64>,
    /// `η_{j,m}`, ions × modes.
    pub eta: DMatrix<f64>,
    pub model: MotionModel,
    /// Drop the counter-rotating `e^{±i(2ν+Δ)t}` terms.
    pub rotating_wave: bool,
}

/// `η_eff = Ω⁻¹ √(JΔ/2)`: the COM Lamb-Dicke parameter giving coupling `J`.
pub fn effective_com_params(j: f64, detuning: f64, rabi: f64) -> Result<f64> {
    if !(j > 0.0 && detuning > 0.0 && rabi > 0.0) {
        return Err(Error::arg(format!(
            "J, Δ and Ω must be positive, got ({j}, {detuning}, {rabi})"
        )));
    }
    Ok((j * detuning / 2.0).sqrt() / rabi)
}

impl BlockParams {
    /// Uniform drive on `num_sites` ions coupled to one COM mode with
    /// `η_eff` chosen so that the effective coupling is `j`.
    pub fn effective_com(
        kind: BlockKind,
        num_sites: usize,
        j: f64,
        detuning: f64,
        slow_detuning: f64,
        rabi: f64,
    ) -> Result<Self> {
        let eta = effective_com_params(j, detuning, rabi)?;
        let p = Self {
            kind,
            detuning,
            slow_detuning,
            rabi: vec![rabi; num_sites],
            eta: DMatrix::from_element(num_sites, 1, eta),
            model: MotionModel::EffectiveCom,
            rotating_wave: true,
        };
        p.validate()?;
        Ok(p)
    }

    /// Drive from a chain configuration acting on all of `modes`.
    pub fn full(kind: BlockKind, config: &ChainConfig, modes: &ModeData) -> Result<Self> {
        config.validate()?;
        let slow_detuning = match kind {
            BlockKind::Xx => 0.0,
            BlockKind::Xy => config.xy_asymmetry,
        };
        let p = Self {
            kind,
            detuning: config.detuning,
            slow_detuning,
            rabi: config.rabi_frequencies.clone(),
            eta: lamb_dicke_params(config, modes),
            model: MotionModel::Full,
            rotating_wave: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_rotating_wave(mut self, rotating_wave: bool) -> Self {
        self.rotating_wave = rotating_wave;
        self
    }

    pub fn num_sites(&self) -> usize {
        self.rabi.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rabi.is_empty() || self.eta.nrows() != self.rabi.len() {
            return Err(Error::arg(format!(
                "η has {} rows for {} Rabi frequencies",
                self.eta.nrows(),
                self.rabi.len()
            )));
        }
        if self.rabi.iter().any(|o| !(*o > 0.0)) || !(self.detuning > 0.0) {
            return Err(Error::arg("Rabi frequencies and Δ must be positive"));
        }
        if self.eta.iter().any(|e| !e.is_finite()) {
            return Err(Error::arg("Lamb-Dicke parameters must be finite"));
        }
        match self.kind {
            BlockKind::Xx if self.slow_detuning != 0.0 => {
                Err(Error::arg("the XX block is driven with δ = 0"))
            }
            BlockKind::Xy if !(self.slow_detuning > 0.0) => {
                Err(Error::arg("the XY block needs δ > 0"))
            }
            _ => Ok(()),
        }
    }

    fn check_space(&self, space: &PhononSpace) -> Result<usize> {
        self.validate()?;
        if self.eta.ncols() != space.modes.len() {
            return Err(Error::arg(format!(
                "η has {} columns for {} modes",
                self.eta.ncols(),
                space.modes.len()
            )));
        }
        space.total_dim(self.num_sites())
    }

    /// Conditions under which the effective spin model is expected to fail:
    /// `δ` not small against `Δ`, or `|η|·√n̄` not small.
    pub fn regime_warnings(&self, mean_phonons: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.kind == BlockKind::Xy && self.slow_detuning > 0.1 * self.detuning {
            out.push(format!(
                "δ/Δ = {:.3} is not small; the XY effective model is unreliable",
                self.slow_detuning / self.detuning
            ));
        }
        let eta_max = self.eta.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        let ld = eta_max * mean_phonons.max(0.0).sqrt();
        if ld > 0.1 {
            out.push(format!("Lamb-Dicke product |η|√n̄ = {ld:.3} is not small"));
        }
        out
    }

    /// Highest frequency present in `H(t)`.
    fn fastest_frequency(&self, space: &PhononSpace) -> f64 {
        space
            .modes
            .iter()
            .map(|m| {
                let slow = m.detuning.abs() + self.slow_detuning;
                if self.rotating_wave {
                    slow
                } else {
                    slow.max(2.0 * m.frequency + m.detuning.abs() + self.slow_detuning)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Matrix-free `H(t)` for one block.
struct Bichromatic<'a> {
    params: &'a BlockParams,
    space: &'a PhononSpace,
    num_sites: usize,
    fock: usize,
    strides: Vec<usize>,
    occupations: Vec<usize>,
    /// `g_jm`, ions × modes.
    g: DMatrix<f64>,
    sqrt: Vec<f64>,
}

impl<'a> Bichromatic<'a> {
    fn new(params: &'a BlockParams, space: &'a PhononSpace) -> Result<Self> {
        params.check_space(space)?;
        let n = params.num_sites();
        let g = DMatrix::from_fn(n, space.modes.len(), |j, m| {
            params.rabi[j] * params.eta[(j, m)]
        });
        let top = space.modes.iter().map(|m| m.n_max).max().unwrap_or(0);
        Ok(Self {
            params,
            space,
            num_sites: n,
            fock: space.fock_dim(),
            strides: space.strides(),
            occupations: space.occupations(),
            g,
            sqrt: (0..=top + 1).map(|k| (k as f64).sqrt()).collect(),
        })
    }

    /// `(α_m, β_m)`: coefficients of `σ^+ a_m` and `σ^+ a_m†`, averaged over
    /// `[t - h/2, t + h/2]` when `h > 0`.
    fn coefficients(&self, t: f64, h: f64) -> Vec<(C64, C64)> {
        let d = self.params.slow_detuning;
        let r = if self.params.rotating_wave { 0.0 } else { 1.0 };
        let phase = |w: f64| C64::from_polar(sinc(w * h / 2.0), w * t);
        self.space
            .modes
            .iter()
            .map(|m| {
                let fast = 2.0 * m.frequency + m.detuning;
                let alpha = phase(m.detuning - d) + r * phase(-fast - d);
                let beta = phase(-m.detuning - d) + r * phase(fast - d);
                (alpha, beta)
            })
            .collect()
    }

    /// `out = H ψ` for fixed coefficients.
    // `m` indexes couplings, coefficients, occupations and strides together
    #[allow(clippy::needless_range_loop)]
    fn apply(&self, coeffs: &[(C64, C64)], psi: &DVector<C64>, out: &mut DVector<C64>) {
        out.fill(C64::new(0.0, 0.0));
        let nm = self.space.modes.len();
        let n = self.num_sites;
        for s in 0..dimension(n) {
            for j in 0..n {
                let mask = site_mask(j, n);
                let target = s ^ mask;
                // a set bit is |↓⟩: σ^+ raises it, otherwise σ^- lowers
                let raising = s & mask != 0;
                for f in 0..self.fock {
                    let a = psi[s * self.fock + f];
                    if a == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for m in 0..nm {
                        let g = self.g[(j, m)];
                        if g == 0.0 {
                            continue;
                        }
                        let (alpha, beta) = coeffs[m];
                        let (c_lower, c_raise) = if raising {
                            (alpha, beta)
                        } else {
                            (beta.conj(), alpha.conj())
                        };
                        let k = self.occupations[f * nm + m];
                        let stride = self.strides[m];
                        if k > 0 {
                            out[target * self.fock + f - stride] += a * g * self.sqrt[k] * c_lower;
                        }
                        if k < self.space.modes[m].n_max {
                            out[target * self.fock + f + stride] +=
                                a * g * self.sqrt[k + 1] * c_raise;
                        }
                    }
                }
            }
        }
    }

    /// `ψ ← exp(-i h H) ψ` by Taylor series.
    fn step(
        &self,
        coeffs: &[(C64, C64)],
        h: f64,
        psi: &mut DVector<C64>,
        term: &mut DVector<C64>,
        next: &mut DVector<C64>,
    ) -> Result<()> {
        term.copy_from(psi);
        let scale = psi.norm().max(f64::MIN_POSITIVE);
        for k in 1..=TAYLOR_MAX_TERMS {
            self.apply(coeffs, term, next);
            let factor = C64::new(0.0, -h / k as f64);
            for (t, v) in term.iter_mut().zip(next.iter()) {
                *t = v * factor;
            }
            *psi += &*term;
            if term.norm() <= 1e-16 * scale {
                return Ok(());
            }
        }
        Err(Error::Numerical {
            solver: "taylor step",
            detail: format!(
                "series did not converge in {TAYLOR_MAX_TERMS} terms at step {h:.3e} s"
            ),
        })
    }
}

const TAYLOR_MAX_TERMS: usize = 40;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Dense `H(t)` on the joint space.
pub fn bichromatic_hamiltonian(
    params: &BlockParams,
    space: &PhononSpace,
    t: f64,
) -> Result<DMatrix<C64>> {
    let h = Bichromatic::new(params, space)?;
    let dim = space.total_dim(params.num_sites())?;
    let coeffs = h.coefficients(t, 0.0);
    let mut m = DMatrix::zeros(dim, dim);
    let mut e = DVector::zeros(dim);
    let mut col = DVector::zeros(dim);
    for c in 0..dim {
        e[c] = C64::new(1.0, 0.0);
        h.apply(&coeffs, &e, &mut col);
        m.set_column(c, &col);
        e[c] = C64::new(0.0, 0.0);
    }
    Ok(m)
}

/// How each piecewise-constant step samples `H(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// `H` at the step midpoint.
    Midpoint,
    /// Every oscillating coefficient averaged exactly over the step.
    Averaged,
}

/// Integrator settings for [`propagate_block`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSettings {
    /// Initial steps per period of the fastest frequency in `H(t)`.
    pub steps_per_period: usize,
    /// Accepted infidelity between results at `dt` and `dt/2`.
    pub tolerance: f64,
    pub max_halvings: usize,
    pub rule: StepRule,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            steps_per_period: 100,
            tolerance: 1e-6,
            max_halvings: 6,
            rule: StepRule::Averaged,
        }
    }
}

/// States at the requested times and the accepted step size.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub states: Vec<DVector<C64>>,
    /// Largest step actually used, s.
    pub dt: f64,
    pub halvings: usize,
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.first().is_some_and(|t| !(*t >= 0.0)) {
        return Err(Error::arg("block times must be non-negative"));
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::arg("block times must be finite and non-decreasing"));
    }
    Ok(())
}

fn run_fixed(
    h: &Bichromatic<'_>,
    psi0: &DVector<C64>,
    times: &[f64],
    dt: f64,
    rule: StepRule,
) -> Result<Vec<DVector<C64>>> {
    let mut psi = psi0.clone();
    let mut term = psi.clone();
    let mut next = psi.clone();
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = (span / dt).ceil().max(1.0) as usize;
            let step = span / n as f64;
            let avg = match rule {
                StepRule::Midpoint => 0.0,
                StepRule::Averaged => step,
            };
            for k in 0..n {
                let mid = t + (k as f64 + 0.5) * step;
                let coeffs = h.coefficients(mid, avg);
                h.step(&coeffs, step, &mut psi, &mut term, &mut next)?;
            }
        }
        t = target;
        out.push(psi.clone());
    }
    Ok(out)
}

fn worst_infidelity(a: &[DVector<C64>], b: &[DVector<C64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| 1.0 - x.dotc(y).norm_sqr() / (x.norm_squared() * y.norm_squared()))
        .fold(0.0, f64::max)
}

/// Time-ordered evolution of a joint state under `H(t)` from `t = 0` to each
/// of `times`, halving the step until two successive step sizes agree.
pub fn propagate_block(
    params: &BlockParams,
    space: &PhononSpace,
    psi0: &DVector<C64>,
    times: &[f64],
    settings: &PropagationSettings,
) -> Result<Propagation> {
    let h = Bichromatic::new(params, space)?;
    let dim = space.total_dim(params.num_sites())?;
    if psi0.len() != dim {
        return Err(Error::arg(format!(
            "state has length {}, space has {dim}",
            psi0.len()
        )));
    }
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::arg("initial joint state is not normalized"));
    }
    check_grid(times)?;
    if settings.steps_per_period == 0 {
        return Err(Error::arg("steps per period must be positive"));
    }
    let fastest = params.fastest_frequency(space);
    let mut dt = 2.0 * std::f64::consts::PI / (settings.steps_per_period as f64 * fastest);
    let (mut coarse, mut fine) = rayon::join(
        || run_fixed(&h, psi0, times, dt, settings.rule),
        || run_fixed(&h, psi0, times, dt / 2.0, settings.rule),
    );
    for halvings in 0..=settings.max_halvings {
        let (c, f) = (coarse?, fine?);
        let change = worst_infidelity(&c, &f);
        if change < settings.tolerance {
            for s in &f {
                if (s.norm() - 1.0).abs() > 1e-8 {
                    return Err(Error::Numerical {
                        solver: "block propagation",
                        detail: format!("norm drifted to {}", s.norm()),
                    });
                }
            }
            return Ok(Propagation {
                states: f,
                dt: dt / 2.0,
                halvings,
            });
        }
        dt /= 2.0;
        coarse = Ok(f);
        fine = run_fixed(&h, psi0, times, dt / 2.0, settings.rule);
    }
    Err(Error::Numerical {
        solver: "block propagation",
        detail: format!(
            "no convergence to {:.1e} after {} halvings (dt = {dt:.3e} s)",
            settings.tolerance, settings.max_halvings
        ),
    })
}

/// Spin fidelity of a simulated block against its ideal target.
#[derive(Debug, Clone)]
pub struct BlockFidelityCurve {
    pub kind: BlockKind,
    pub rotating_wave: bool,
    /// Physical times, s.
    pub times: Vec<f64>,
    pub fidelities: Vec<f64>,
    /// Population with some mode at its cutoff.
    pub top_population: Vec<f64>,
    pub mean_phonons: Vec<f64>,
    pub dt: f64,
}

impl BlockFidelityCurve {
    pub fn worst_infidelity(&self) -> f64 {
        self.fidelities.iter().map(|f| 1.0 - f).fold(0.0, f64::max)
    }
}

/// Ideal spin Hamiltonian realised by a block: `H_XX` or `½ H_XY`.
pub fn ideal_block_hamiltonian(kind: BlockKind, j: &CouplingMatrix) -> Result<SpinOperator> {
    match kind {
        BlockKind::Xx => build_model(ModelKind::Xx, j),
        BlockKind::Xy => build_model(ModelKind::Xy, &j.scaled(0.5)?),
    }
}

/// Simulates one block from `|psi0⟩ ⊗ |vac⟩` and scores the reduced spin
/// state by `⟨ψ_ideal(t)| ρ_spin(t) |ψ_ideal(t)⟩`.
pub fn analog_block_fidelity(
    params: &BlockParams,
    space: &PhononSpace,
    j: &CouplingMatrix,
    psi0: &SpinState,
    times: &[f64],
    settings: &PropagationSettings,
) -> Result<BlockFidelityCurve> {
    let n = params.num_sites();
    if j.size() != n || psi0.num_sites() != n {
        return Err(Error::arg(format!(
            "block drives {n} ions; couplings have {} and the state {}",
            j.size(),
            psi0.num_sites()
        )));
    }
    let ideal = Spectrum::new(&ideal_block_hamiltonian(params.kind, j)?)?;
    let start = space.vacuum_state(psi0)?;
    let run = propagate_block(params, space, &start, times, settings)?;
    let fock = space.fock_dim();
    let occ = space.occupations();
    let nm = space.modes.len();
    let at_top: Vec<bool> = (0..fock)
        .map(|f| {
            space
                .modes
                .iter()
                .enumerate()
                .any(|(m, mode)| occ[f * nm + m] == mode.n_max)
        })
        .collect();
    let phonons: Vec<f64> = (0..fock)
        .map(|f| occ[f * nm..(f + 1) * nm].iter().sum::<usize>() as f64)
        .collect();
    let scored = times
        .par_iter()
        .zip(&run.states)
        .map(|(&t, psi)| {
            let target = ideal.evolve(psi0, t)?;
            let mut fid = 0.0;
            let mut top = 0.0;
            let mut nbar = 0.0;
            for f in 0..fock {
                let mut proj = C64::new(0.0, 0.0);
                for (s, c) in target.amplitudes().iter().enumerate() {
                    let a = psi[s * fock + f];
                    proj += c.conj() * a;
                    let p = a.norm_sqr();
                    if at_top[f] {
                        top += p;
                    }
                    nbar += p * phonons[f];
                }
                fid += proj.norm_sqr();
            }
            Ok((fid, top, nbar))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockFidelityCurve {
        kind: params.kind,
        rotating_wave: params.rotating_wave,
        times: times.to_vec(),
        fidelities: scored.iter().map(|s| s.0).collect(),
        top_population: scored.iter().map(|s| s.1).collect(),
        mean_phonons: scored.iter().map(|s| s.2).collect(),
        dt: run.dt,
    })
}

/// Vacuum magnitudes of the two terms of the effective XY Hamiltonian
/// `Σ J_ij (σ_i^+ σ_j^- + h.c.) + (δ/Δ) Σ B_j σ_j^z`.
#[derive(Debug, Clone, PartialEq)]
pub struct XyEffectiveTerms {
    /// `max |J_ij|`, rad/s.
    pub spin_spin: f64,
    /// `(δ/Δ) B_j` per ion with `B_j = ΔΩ_j² Σ_m (η_jm/Δ_m)² (n_m + ½)` at `n_m = 0`.
    pub field: Vec<f64>,
    /// `δ/Δ`.
    pub suppression: f64,
    /// `max_j |field_j| / spin_spin`.
    pub magnitude_ratio: f64,
}

pub fn xy_effective_terms(params: &BlockParams, space: &PhononSpace) -> Result<XyEffectiveTerms> {
    if !(params.slow_detuning > 0.0) {
        return Err(Error::Domain("the XY effective model needs δ > 0".into()));
    }
    params.check_space(space)?;
    let n = params.num_sites();
    let d = params.detuning;
    let suppression = params.slow_detuning / d;
    let mut spin_spin = 0.0f64;
    for a in 0..n {
        for b in a + 1..n {
            let jab: f64 = space
                .modes
                .iter()
                .enumerate()
                .map(|(m, mode)| params.eta[(a, m)] * params.eta[(b, m)] / mode.detuning)
                .sum::<f64>()
                * 2.0
                * params.rabi[a]
                * params.rabi[b];
            spin_spin = spin_spin.max(jab.abs());
        }
    }
    let field: Vec<f64> = (0..n)
        .map(|a| {
            let b: f64 = space
                .modes
                .iter()
                .enumerate()
                .map(|(m, mode)| (params.eta[(a, m)] / mode.detuning).powi(2) * 0.5)
                .sum();
            suppression * d * params.rabi[a].powi(2) * b
        })
        .collect();
    let top = field.iter().fold(0.0f64, |acc, f| acc.max(f.abs()));
    Ok(XyEffectiveTerms {
        spin_spin,
        magnitude_ratio: if spin_spin > 0.0 {
            top / spin_spin
        } else {
            f64::INFINITY
        },
        field,
        suppression,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_algebra::max_abs;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn reference_block(kind: BlockKind, n: usize, j: f64) -> (BlockParams, PhononSpace) {
        let delta = match kind {
            BlockKind::Xx => 0.0,
            BlockKind::Xy => TAU * 3e3,
        };
        let p = BlockParams::effective_com(kind, n, j, TAU * 60e3, delta, TAU * 62e3).unwrap();
        let s = PhononSpace::effective_com(TAU * 2.65e6, TAU * 60e3, 4).unwrap();
        (p, s)
    }

    #[test]
    fn effective_eta_fixture() {
        let eta = effective_com_params(TAU * 500.0, TAU * 60e3, TAU * 62e3).unwrap();
        assert!((eta - 0.062_470).abs() < 1e-5, "{eta}");
        let eta4 = effective_com_params(4.0 * TAU * 500.0, TAU * 60e3, TAU * 62e3).unwrap();
        assert!((eta4 / eta - 2.0).abs() < 1e-12);
        // J_eff = 2Ω²η²/Δ returns J
        let (j, d, o) = (TAU * 79.0, TAU * 60e3, TAU * 62e3);
        let e = effective_com_params(j, d, o).unwrap();
        assert!((2.0 * o * o * e * e / d / j - 1.0).abs() < 1e-12);
        assert!(effective_com_params(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn kind_invariants() {
        assert!(BlockParams::effective_com(BlockKind::Xx, 3, 1.0, 10.0, 0.5, 5.0).is_err());
        assert!(BlockParams::effective_com(BlockKind::Xy, 3, 1.0, 10.0, 0.0, 5.0).is_err());
        let p = BlockParams::effective_com(BlockKind::Xy, 3, 1.0, 10.0, 5.0, 5.0).unwrap();
        assert_eq!(p.regime_warnings(0.0).len(), 1);
        assert!(PhononSpace::effective_com(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let (p, s) = reference_block(BlockKind::Xx, 5, 500.0);
        let s = s.with_dimension_cap(100);
        assert!(matches!(
            bichromatic_hamiltonian(&p, &s, 0.0),
            Err(Error::Resource {
                requested: 160,
                cap: 100
            })
        ));
    }

    #[test]
    fn single_ion_at_zero_is_sigma_x_times_position() {
        let mut p = BlockParams::effective_com(BlockKind::Xx, 1, 3.0, 10.0, 0.0, 7.0).unwrap();
        p.eta[(0, 0)] = 0.05;
        let s = PhononSpace::effective_com(100.0, 10.0, 3).unwrap();
        let h = bichromatic_hamiltonian(&p, &s, 0.0).unwrap();
        let x = DMatrix::from_fn(2, 2, |r, c| {
            if r != c {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let pos = DMatrix::from_fn(4, 4, |r, c| {
            if r + 1 == c {
                C64::new((c as f64).sqrt(), 0.0)
            } else if c + 1 == r {
                C64::new((r as f64).sqrt(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let want = x.kronecker(&pos) * C64::new(7.0 * 0.05, 0.0);
        assert!(max_abs(&(h - want)) < 1e-14);
    }

    #[test]
    fn hamiltonian_is_hermitian_and_vanishes_without_coupling() {
        let (p, s) = reference_block(BlockKind::Xy, 3, 500.0);
        let p = p.with_rotating_wave(false);
        for t in [0.0, 1.3e-5, 7.77e-4] {
            let h = bichromatic_hamiltonian(&p, &s, t).unwrap();
            let scale = max_abs(&h);
            assert!(max_abs(&(h.adjoint() - &h)) <= 1e-12 * scale);
        }
        let mut zero = p.clone();
        zero.eta.fill(0.0);
        assert_eq!(
            max_abs(&bichromatic_hamiltonian(&zero, &s, 1e-4).unwrap()),
            0.0
        );
        let psi: SpinState = "↓↑↓".parse().unwrap();
        let start = s.vacuum_state(&psi).unwrap();
        let run = propagate_block(&zero, &s, &start, &[0.0, 1e-4], &Default::default()).unwrap();
        for st in &run.states {
            assert!(
                max_abs(&DMatrix::from_column_slice(
                    st.len(),
                    1,
                    (st - &start).as_slice()
                )) < 1e-14
            );
        }
    }

    #[test]
    fn matrix_free_action_matches_dense() {
        let config = ChainConfig::reference(2);
        let pos = crate::ion_chain::equilibrium_positions(&config).unwrap();
        let modes = crate::ion_chain::transverse_modes(&config, &pos).unwrap();
        let p = BlockParams::full(BlockKind::Xy, &config, &modes)
            .unwrap()
            .with_rotating_wave(false);
        let s = PhononSpace::from_modes(&modes, config.detuning, 2).unwrap();
        let h = Bichromatic::new(&p, &s).unwrap();
        let t = 3.3e-6;
        let dense = bichromatic_hamiltonian(&p, &s, t).unwrap();
        let psi = DVector::from_fn(dense.nrows(), |k, _| {
            C64::new((k as f64).sin(), (k as f64 * 0.7).cos())
        });
        let mut out = DVector::zeros(psi.len());
        h.apply(&h.coefficients(t, 0.0), &psi, &mut out);
        assert!((dense * psi - &out).norm() < 1e-9 * out.norm());
    }

    #[test]
    fn jaynes_cummings_vacuum_rabi() {
        // δ = Δ makes σ^+ a resonant; the σ^+ a† term is 2Δ off resonance
        let delta = 1000.0;
        let g = 10.0;
        let mut p = BlockParams::effective_com(BlockKind::Xy, 1, 1.0, delta, delta, 1.0).unwrap();
        p.eta[(0, 0)] = g;
        let s = PhononSpace::effective_com(1e5, delta, 3).unwrap();
        let up: SpinState = "↑".parse().unwrap();
        let start = s.vacuum_state(&up).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.01).collect();
        let run = propagate_block(&p, &s, &start, &times, &Default::default()).unwrap();
        for (t, st) in times.iter().zip(&run.states) {
            let p_up: f64 = (0..4).map(|f| st[f].norm_sqr()).sum();
            assert!(
                (p_up - (g * t).cos().powi(2)).abs() < 2e-3,
                "t = {t}: {p_up}"
            );
        }
    }

    #[test]
    fn propagation_preserves_norm_and_starts_at_initial_state() {
        let (p, s) = reference_block(BlockKind::Xy, 3, TAU * 80.0);
        let psi: SpinState = "↓↑↓".parse().unwrap();
        let start = s.vacuum_state(&psi).unwrap();
        let run = propagate_block(&p, &s, &start, &[0.0, 1e-4, 3e-4], &Default::default()).unwrap();
        assert_eq!(run.states[0], start);
        for st in &run.states {
            assert!((st.norm() - 1.0).abs() < 1e-8);
        }
        assert!(propagate_block(&p, &s, &start, &[2e-4, 1e-4], &Default::default()).is_err());
    }

    #[test]
    fn xx_block_disentangles_each_detuning_period() {
        let j = TAU * 80.0;
        let (p, s) = reference_block(BlockKind::Xx, 3, j);
        let coupling = CouplingMatrix::uniform(3, j).unwrap();
        let psi: SpinState = "↓↑↓".parse().unwrap();
        let period = TAU / (TAU * 60e3);
        let times: Vec<f64> = (1..=8).map(|k| k as f64 * period / 2.0).collect();
        let curve =
            analog_block_fidelity(&p, &s, &coupling, &psi, &times, &Default::default()).unwrap();
        for k in 0..4 {
            let half = 1.0 - curve.fidelities[2 * k];
            let full = 1.0 - curve.fidelities[2 * k + 1];
            assert!(full < 0.1 * half, "period {k}: {full} vs {half}");
        }
    }

    #[test]
    fn xx_block_improves_with_detuning() {
        let j = TAU * 80.0;
        let coupling = CouplingMatrix::uniform(3, j).unwrap();
        let psi: SpinState = "↓↑↓".parse().unwrap();
        let mut last = f64::INFINITY;
        for scale in [1.0, 2.0, 4.0] {
            let d = TAU * 60e3 * scale;
            let p = BlockParams::effective_com(BlockKind::Xx, 3, j, d, 0.0, TAU * 62e3).unwrap();
            let s = PhononSpace::effective_com(TAU * 2.65e6, d, 4).unwrap();
            let times: Vec<f64> = (1..=12).map(|k| k as f64 * 2e-5).collect();
            let eps = analog_block_fidelity(&p, &s, &coupling, &psi, &times, &Default::default())
                .unwrap()
                .worst_infidelity();
            assert!(eps < last, "Δ scale {scale}: {eps} vs {last}");
            last = eps;
        }
    }

    #[test]
    fn fock_cutoff_converges() {
        let j = TAU * 80.0;
        let (p, s) = reference_block(BlockKind::Xy, 3, j);
        let coupling = CouplingMatrix::uniform(3, j).unwrap();
        let psi: SpinState = "↓↑↓".parse().unwrap();
        let times = [1e-4, 3e-4];
        let a =
            analog_block_fidelity(&p, &s, &coupling, &psi, &times, &Default::default()).unwrap();
        let b = analog_block_fidelity(
            &p,
            &s.raised(1),
            &coupling,
            &psi,
            &times,
            &Default::default(),
        )
        .unwrap();
        for (x, y) in a.fidelities.iter().zip(&b.fidelities) {
            assert!((x - y).abs() < 1e-6);
        }
        assert!(a.top_population.iter().all(|p| *p < 1e-6));
    }

    #[test]
    fn xy_effective_terms_scale() {
        let (p, s) = reference_block(BlockKind::Xy, 5, TAU * 80.0);
        let terms = xy_effective_terms(&p, &s).unwrap();
        assert!((terms.suppression - 0.05).abs() < 1e-12);
        assert!((terms.spin_spin - TAU * 80.0).abs() < 1e-9);
        // one COM mode in vacuum: B = Ω²η²/(2Δ) = J/4
        assert!((terms.magnitude_ratio - 0.05 / 4.0).abs() < 1e-12);
        let mut q = p.clone();
        q.slow_detuning *= 2.0;
        let doubled = xy_effective_terms(&q, &s).unwrap();
        assert!((doubled.field[0] / terms.field[0] - 2.0).abs() < 1e-12);
        let (xx, s) = reference_block(BlockKind::Xx, 5, TAU * 80.0);
        assert!(matches!(xy_effective_terms(&xx, &s), Err(Error::Domain(_))));
    }
}
