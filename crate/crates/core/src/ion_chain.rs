//! Linear ion-chain physics: axial equilibrium, transverse normal modes,
//! Lamb-Dicke parameters and the phonon-mediated spin-spin couplings.
//!
//! Positions are solved in the reduced length unit
//! `ℓ = (e² / (4πε₀ M ω_z²))^{1/3}`, where the axial potential reads
//! `V(u) = Σ u_i²/2 + Σ_{i<j} 1/|u_i - u_j|`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// CODATA 2018 reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// Neutral ⁴⁰Ca atomic mass in u.
pub const CA40_ATOMIC_MASS_U: f64 = 39.962_590_863;

/// Mass of a ⁴⁰Ca⁺ ion in kg.
pub fn ca40_ion_mass() -> f64 {
    CA40_ATOMIC_MASS_U * ATOMIC_MASS_UNIT - ELECTRON_MASS
}

const NEWTON_MAX_ITER: usize = 200;
const NEWTON_GRAD_TOL: f64 = 1e-12;

/// Radial axis of a transverse mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadialAxis {
    X,
    Y,
}

impl RadialAxis {
    pub fn label(self) -> char {
        match self {
            RadialAxis::X => 'x',
            RadialAxis::Y => 'y',
        }
    }
}

/// Which radial mode families enter the coupling sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeAxes {
    /// All `2N` radial modes.
    #[default]
    Both,
    /// Only the `N` modes of the stiffest (x) axis.
    XOnly,
}

/// Ion chain and laser drive. All frequencies are angular (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub num_ions: usize,
    /// kg
    pub ion_mass: f64,
    /// `(ω_x, ω_y, ω_z)`.
    pub trap_frequencies: [f64; 3],
    /// m
    pub laser_wavelength: f64,
    /// One Rabi frequency per ion.
    pub rabi_frequencies: Vec<f64>,
    /// Detuning `Δ` from the x-axis COM sideband.
    pub detuning: f64,
    /// Bichromatic asymmetry `δ` used for XY blocks.
    pub xy_asymmetry: f64,
    /// Laser phase, rad. Only shifts the spin-operator phase convention.
    pub laser_phase: f64,
    pub mode_axes: ModeAxes,
}

impl ChainConfig {
    /// Five ⁴⁰Ca⁺ ions, `ω = 2π(2.65, 2.63, 0.65)` MHz, `λ = 729` nm,
    /// `Δ = 2π·60` kHz, `Ω = 2π·62` kHz, `δ = 2π·3` kHz.
    pub fn five_ion_reference() -> Self {
        Self::reference(5)
    }

    /// The five-ion reference drive applied to a chain of `num_ions`.
    pub fn reference(num_ions: usize) -> Self {
        let tau = 2.0 * PI;
        Self {
            num_ions,
            ion_mass: ca40_ion_mass(),
            trap_frequencies: [tau * 2.65e6, tau * 2.63e6, tau * 0.65e6],
            laser_wavelength: 729e-9,
            rabi_frequencies: vec![tau * 62e3; num_ions],
            detuning: tau * 60e3,
            xy_asymmetry: tau * 3e3,
            laser_phase: 0.0,
            mode_axes: ModeAxes::Both,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [wx, wy, wz] = self.trap_frequencies;
        if self.num_ions == 0 {
            return Err(Error::arg("chain needs at least one ion"));
        }
        if !(wz > 0.0 && wy > wz && wx > wy) {
            return Err(Error::arg(format!(
                "trap frequencies must satisfy ω_x > ω_y > ω_z > 0, got ({wx}, {wy}, {wz})"
            )));
        }
        if !(self.ion_mass > 0.0) || !(self.laser_wavelength > 0.0) {
            return Err(Error::arg("ion mass and laser wavelength must be positive"));
        }
        if self.rabi_frequencies.len() != self.num_ions {
            return Err(Error::arg(format!(
                "{} Rabi frequencies given for {} ions",
                self.rabi_frequencies.len(),
                self.num_ions
            )));
        }
        if self.rabi_frequencies.iter().any(|&o| !(o > 0.0)) {
            return Err(Error::arg("all Rabi frequencies must be positive"));
        }
        if !(self.detuning > 0.0) {
            return Err(Error::arg("detuning Δ must be positive"));
        }
        if !(self.xy_asymmetry >= 0.0) {
            return Err(Error::arg("XY asymmetry δ must be non-negative"));
        }
        Ok(())
    }

    /// Reduced length unit `ℓ` in metres.
    pub fn length_scale(&self) -> f64 {
        let wz = self.trap_frequencies[2];
        (ELEMENTARY_CHARGE.powi(2) / (4.0 * PI * VACUUM_PERMITTIVITY * self.ion_mass * wz * wz))
            .cbrt()
    }

    /// Projected laser wavevector per radial axis, `(2π/λ)·cos 45°`.
    pub fn effective_wavevector(&self) -> f64 {
        2.0 * PI / self.laser_wavelength * FRAC_1_SQRT_2
    }
}

/// Axial equilibrium of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Positions {
    /// Dimensionless positions in units of `ℓ`, ascending.
    pub reduced: Vec<f64>,
    /// `ℓ` in metres.
    pub length_scale: f64,
}

impl Positions {
    pub fn meters(&self) -> Vec<f64> {
        self.reduced.iter().map(|u| u * self.length_scale).collect()
    }
}

/// Gradient of the reduced axial potential.
pub fn potential_gradient(u: &[f64]) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |i, _| {
        let mut g = u[i];
        for j in 0..n {
            if j != i {
                let d = u[i] - u[j];
                g -= d.signum() / (d * d);
            }
        }
        g
    })
}

fn potential(u: &[f64]) -> f64 {
    let mut v: f64 = u.iter().map(|x| 0.5 * x * x).sum();
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            v += 1.0 / (u[i] - u[j]).abs();
        }
    }
    v
}

/// Hessian of the reduced axial potential.
pub fn axial_hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = 1.0;
        for j in 0..n {
            if j != i {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                h[(i, i)] += c;
                h[(i, j)] = -c;
            }
        }
    }
    h
}

/// Axial equilibrium positions by damped Newton iteration.
pub fn equilibrium_positions(config: &ChainConfig) -> Result<Positions> {
    let n = config.num_ions;
    if n == 0 {
        return Err(Error::arg("chain needs at least one ion"));
    }
    if !(config.trap_frequencies[2] > 0.0) {
        return Err(Error::arg("axial trap frequency must be positive"));
    }
    let length_scale = config.length_scale();
    if n == 1 {
        return Ok(Positions {
            reduced: vec![0.0],
            length_scale,
        });
    }

    let width = (n as f64).powf(0.56);
    let mut u: Vec<f64> = (0..n)
        .map(|i| -0.5 * width + width * i as f64 / (n - 1) as f64)
        .collect();
    let mut grad = potential_gradient(&u);
    let mut iter = 0;
    while grad.norm() >= NEWTON_GRAD_TOL {
        if iter == NEWTON_MAX_ITER {
            return Err(Error::Numerical {
                solver: "equilibrium Newton",
                detail: format!(
                    "gradient norm {:.3e} after {NEWTON_MAX_ITER} iterations",
                    grad.norm()
                ),
            });
        }
        iter += 1;
        // the axial Hessian is strictly diagonally dominant, hence SPD
        let step = axial_hessian(&u)
            .cholesky()
            .ok_or_else(|| Error::Numerical {
                solver: "equilibrium Newton",
                detail: "axial Hessian lost positive definiteness".into(),
            })?
            .solve(&(-&grad));
        let v0 = potential(&u);
        let mut lambda = 1.0;
        let candidate = loop {
            let trial: Vec<f64> = u
                .iter()
                .zip(step.iter())
                .map(|(x, d)| x + lambda * d)
                .collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            // near the minimum V is flat to machine precision; the gradient decides
            if ordered
                && (potential(&trial) < v0 || potential_gradient(&trial).norm() < grad.norm())
            {
                break trial;
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::Numerical {
                    solver: "equilibrium Newton",
                    detail: "line search collapsed".into(),
                });
            }
        };
        u = candidate;
        grad = potential_gradient(&u);
    }
    // enforce the reflection symmetry the exact solution has
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    if potential_gradient(&sym).norm() <= grad.norm().max(NEWTON_GRAD_TOL) {
        u = sym;
    }
    Ok(Positions {
        reduced: u,
        length_scale,
    })
}

/// One transverse normal mode.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMode {
    /// Angular frequency `ν_m`, rad/s.
    pub frequency: f64,
    pub axis: RadialAxis,
    /// Orthonormal participation vector `b_{j,m}` over ions.
    pub vector: Vec<f64>,
}

/// Transverse modes of the chain, sorted by descending frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeData {
    pub modes: Vec<NormalMode>,
}

impl ModeData {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.frequency).collect()
    }

    /// Highest radial frequency: the x-axis centre-of-mass mode.
    pub fn com_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.frequency).fold(0.0, f64::max)
    }

    /// Modes restricted to the families selected by `axes`.
    pub fn select(&self, axes: ModeAxes) -> ModeData {
        let modes = self
            .modes
            .iter()
            .filter(|m| axes == ModeAxes::Both || m.axis == RadialAxis::X)
            .cloned()
            .collect();
        ModeData { modes }
    }
}

/// Dimensionless transverse Hessian for one radial axis.
pub fn transverse_hessian(ratio_sq: f64, u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = ratio_sq;
        for k in 0..n {
            if k != i {
                let c = 1.0 / (u[i] - u[k]).abs().powi(3);
                a[(i, i)] -= c;
                a[(i, k)] = c;
            }
        }
    }
    a
}

fn fix_sign(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    let flip = if sum.abs() > 1e-9 {
        sum < 0.0
    } else {
        v.iter().find(|x| x.abs() > 1e-9).is_some_and(|x| *x < 0.0)
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// All `2N` transverse modes for the given equilibrium.
pub fn transverse_modes(config: &ChainConfig, positions: &Positions) -> Result<ModeData> {
    let n = config.num_ions;
    if positions.reduced.len() != n {
        return Err(Error::arg("positions do not match the ion count"));
    }
    let wz = config.trap_frequencies[2];
    let spectra: Vec<(RadialAxis, SymmetricEigen<f64, nalgebra::Dyn>)> = [
        (RadialAxis::X, config.trap_frequencies[0]),
        (RadialAxis::Y, config.trap_frequencies[1]),
    ]
    .into_iter()
    .map(|(axis, w)| {
        let a = transverse_hessian((w / wz).powi(2), &positions.reduced);
        (axis, SymmetricEigen::new(a))
    })
    .collect();
    // report the most unstable axis when several are
    let worst = spectra
        .iter()
        .map(|(axis, eig)| (*axis, eig.eigenvalues.min()))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((axis, min)) = worst {
        if !(min > 0.0) {
            return Err(Error::Stability {
                axis: axis.label(),
                eigenvalue: min,
            });
        }
    }
    let mut modes = Vec::with_capacity(2 * n);
    for (axis, eig) in spectra {
        for (k, lam) in eig.eigenvalues.iter().enumerate() {
            let mut vector: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            fix_sign(&mut vector);
            modes.push(NormalMode {
                frequency: wz * lam.sqrt(),
                axis,
                vector,
            });
        }
    }
    modes.sort_by(|a, b| b.frequency.total_cmp(&a.frequency));
    Ok(ModeData { modes })
}

/// `η_{j,m} = (k/√2)·b_{j,m}·√(ħ/(2Mν_m))`, ions × modes.
pub fn lamb_dicke_params(config: &ChainConfig, modes: &ModeData) -> DMatrix<f64> {
    let k = config.effective_wavevector();
    let n = config.num_ions;
    DMatrix::from_fn(n, modes.len(), |j, m| {
        let mode = &modes.modes[m];
        k * mode.vector[j] * (HBAR / (2.0 * config.ion_mass * mode.frequency)).sqrt()
    })
}

/// `Δ_m = Δ + (ν_COM - ν_m)`.
pub fn mode_detunings(delta: f64, modes: &ModeData) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::arg("detuning Δ must be positive"));
    }
    let com = modes.com_frequency();
    Ok(modes
        .modes
        .iter()
        .map(|m| delta + (com - m.frequency))
        .collect())
}

/// Power-law characterisation `J_ij ≈ J/|i-j|^α` of a coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    /// Mean nearest-neighbour coupling.
    pub j: f64,
    pub alpha: f64,
    /// False for two-ion chains, where only one distance exists and `alpha`
    /// is reported as zero.
    pub alpha_defined: bool,
}

/// Symmetric, zero-diagonal spin-spin coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    values: DMatrix<f64>,
    fit: Option<PowerLawFit>,
}

impl CouplingMatrix {
    /// Validates symmetry and zero diagonal; attaches a power-law fit when
    /// all couplings are positive.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if n == 0 || values.ncols() != n {
            return Err(Error::arg("coupling matrix must be square and non-empty"));
        }
        let scale = values.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::arg(format!("nonzero diagonal entry J[{i}][{i}]")));
            }
            for j in i + 1..n {
                if (values[(i, j)] - values[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::arg(format!(
                        "coupling matrix asymmetric at ({i}, {j})"
                    )));
                }
                if !values[(i, j)].is_finite() {
                    return Err(Error::arg("coupling matrix has non-finite entries"));
                }
            }
        }
        let mut m = Self { values, fit: None };
        m.fit = fit_power_law(&m).ok();
        Ok(m)
    }

    /// `J_ij = j0` for every pair.
    pub fn uniform(n: usize, j0: f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { j0 }))
    }

    /// `J_ij = j0 / |i-j|^alpha`.
    pub fn power_law(n: usize, j0: f64, alpha: f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                j0 / (i.abs_diff(j) as f64).powf(alpha)
            }
        }))
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn fit(&self) -> Option<PowerLawFit> {
        self.fit
    }

    /// Pairs `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.size();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j, self.values[(i, j)])))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.values * factor)
    }

    /// Divides by the fitted nearest-neighbour coupling, so that `J·t` becomes
    /// the time unit.
    pub fn normalized(&self) -> Result<Self> {
        let fit = self
            .fit
            .ok_or_else(|| Error::Domain("no power-law fit to normalize by".into()))?;
        self.scaled(1.0 / fit.j)
    }
}

/// Fits `J_ij ≈ J/|i-j|^α`.
///
/// `J` is the mean nearest-neighbour coupling. `α` is the least-squares
/// slope of `log(J / J̄(d))` against `log d`, through the origin, where
/// `J̄(d)` is the mean coupling at distance `d`.
pub fn fit_power_law(coupling: &CouplingMatrix) -> Result<PowerLawFit> {
    let n = coupling.size();
    if n < 2 {
        return Err(Error::Domain(
            "a power-law fit needs at least two ions".into(),
        ));
    }
    if let Some((i, j, v)) = coupling.pairs().find(|(_, _, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!(
            "power-law fit needs positive couplings, J[{i}][{j}] = {v}"
        )));
    }
    let mean_at = |d: usize| -> f64 {
        (0..n - d).map(|i| coupling.get(i, i + d)).sum::<f64>() / (n - d) as f64
    };
    let j = mean_at(1);
    if n == 2 {
        return Ok(PowerLawFit {
            j,
            alpha: 0.0,
            alpha_defined: false,
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for d in 2..n {
        let x = (d as f64).ln();
        num += x * (j / mean_at(d)).ln();
        den += x * x;
    }
    Ok(PowerLawFit {
        j,
        alpha: num / den,
        alpha_defined: true,
    })
}

/// `J_ij = 2 Ω_i Ω_j Σ_m η_{i,m} η_{j,m} / Δ_m` from precomputed modes.
pub fn coupling_from_modes(config: &ChainConfig, modes: &ModeData) -> Result<CouplingMatrix> {
    let selected = modes.select(config.mode_axes);
    let eta = lamb_dicke_params(config, &selected);
    let detunings = mode_detunings(config.detuning, modes)?;
    let detunings: Vec<f64> = modes
        .modes
        .iter()
        .zip(detunings)
        .filter(|(m, _)| config.mode_axes == ModeAxes::Both || m.axis == RadialAxis::X)
        .map(|(_, d)| d)
        .collect();
    let n = config.num_ions;
    let om = &config.rabi_frequencies;
    let values = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let s: f64 = (0..selected.len())
            .map(|m| eta[(i, m)] * eta[(j, m)] / detunings[m])
            .sum();
        2.0 * om[i] * om[j] * s
    });
    // exact symmetrization removes the last-ulp asymmetry of the mode sum
    let values = (&values + values.transpose()) * 0.5;
    CouplingMatrix::new(values)
}

/// Full pipeline: equilibrium, modes, Lamb-Dicke parameters, couplings.
pub fn coupling_matrix(config: &ChainConfig) -> Result<CouplingMatrix> {
    config.validate()?;
    let positions = equilibrium_positions(config)?;
    let modes = transverse_modes(config, &positions)?;
    coupling_from_modes(config, &modes)
}
