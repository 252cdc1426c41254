//! Dense complex linear algebra on the `2^N`-dimensional spin register.
//!
//! Basis index `b` encodes one bit per site, site 0 in the most significant
//! position; a cleared bit is `|↑⟩` (σ^z = +1) and a set bit is `|↓⟩`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// Tolerance for Hermiticity and unitarity checks (max-norm, relative to the
/// operator scale for Hermiticity).
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Tolerance on the norm of a [`SpinState`].
pub const NORM_TOL: f64 = 1e-12;

/// Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// 2×2 Pauli matrix in the `(↑, ↓)` basis.
    pub fn matrix(self) -> DMatrix<C64> {
        let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        match self {
            Axis::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Axis::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            Axis::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }

    /// Action of the Pauli operator on a single local basis bit:
    /// returns the resulting bit and the amplitude factor.
    #[inline]
    pub fn act(self, bit: bool) -> (bool, C64) {
        match (self, bit) {
            (Axis::X, b) => (!b, C64::new(1.0, 0.0)),
            (Axis::Y, false) => (true, C64::new(0.0, 1.0)),
            (Axis::Y, true) => (false, C64::new(0.0, -1.0)),
            (Axis::Z, false) => (false, C64::new(1.0, 0.0)),
            (Axis::Z, true) => (true, C64::new(-1.0, 0.0)),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Whether an operator is a generator (Hermitian) or a propagator (unitary).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Hamiltonian,
    Unitary,
}

/// Bit mask selecting `site` in a basis index of an `num_sites` register.
#[inline]
pub fn site_mask(site: usize, num_sites: usize) -> usize {
    1 << (num_sites - 1 - site)
}

pub fn dimension(num_sites: usize) -> usize {
    1usize << num_sites
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Kronecker product of a list of factors, leftmost factor most significant.
fn kron_all(factors: &[DMatrix<C64>]) -> DMatrix<C64> {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

fn check_sites(num_sites: usize) -> Result<()> {
    if num_sites == 0 {
        return Err(Error::arg("a spin register needs at least one site"));
    }
    if num_sites > 20 {
        return Err(Error::arg(format!(
            "{num_sites} sites exceeds the dense-matrix range of this crate"
        )));
    }
    Ok(())
}

/// Hermitian or unitary operator on the spin register.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperator {
    matrix: DMatrix<C64>,
    num_sites: usize,
    kind: OperatorKind,
}

impl SpinOperator {
    /// Wraps a Hermitian matrix.
    pub fn hamiltonian(matrix: DMatrix<C64>, num_sites: usize) -> Result<Self> {
        Self::checked(matrix, num_sites, OperatorKind::Hamiltonian)
    }

    /// Wraps a unitary matrix.
    pub fn unitary(matrix: DMatrix<C64>, num_sites: usize) -> Result<Self> {
        Self::checked(matrix, num_sites, OperatorKind::Unitary)
    }

    fn checked(matrix: DMatrix<C64>, num_sites: usize, kind: OperatorKind) -> Result<Self> {
        check_sites(num_sites)?;
        let dim = dimension(num_sites);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::arg(format!(
                "matrix is {}x{}, expected {dim}x{dim} for {num_sites} sites",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let op = Self {
            matrix,
            num_sites,
            kind,
        };
        match kind {
            OperatorKind::Hamiltonian => {
                let dev = op.hermiticity_defect();
                if dev > STRUCTURE_TOL * max_abs(&op.matrix).max(1.0) {
                    return Err(Error::Contract(format!(
                        "operator is not Hermitian (max |H - H†| = {dev:.3e})"
                    )));
                }
            }
            OperatorKind::Unitary => {
                let dev = op.unitarity_defect();
                if dev > STRUCTURE_TOL {
                    return Err(Error::Contract(format!(
                        "operator is not unitary (max |U†U - I| = {dev:.3e})"
                    )));
                }
            }
        }
        Ok(op)
    }

    pub fn identity(num_sites: usize) -> Result<Self> {
        check_sites(num_sites)?;
        let dim = dimension(num_sites);
        Ok(Self {
            matrix: DMatrix::identity(dim, dim),
            num_sites,
            kind: OperatorKind::Unitary,
        })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// `max |A - A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// `max |A†A - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let dim = self.dim();
        max_abs(&(self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(dim, dim)))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            num_sites: self.num_sites,
            kind: self.kind,
        }
    }

    /// `U · self · U†`, keeping the kind of `self`.
    pub fn conjugated_by(&self, u: &SpinOperator) -> Result<Self> {
        self.same_register(u)?;
        Ok(Self {
            matrix: &u.matrix * &self.matrix * u.matrix.adjoint(),
            num_sites: self.num_sites,
            kind: self.kind,
        })
    }

    /// Product `self · other` of two unitaries (apply `other` first).
    pub fn compose(&self, other: &SpinOperator) -> Result<Self> {
        self.same_register(other)?;
        if self.kind != OperatorKind::Unitary || other.kind != OperatorKind::Unitary {
            return Err(Error::arg("compose is defined for unitaries only"));
        }
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
            num_sites: self.num_sites,
            kind: OperatorKind::Unitary,
        })
    }

    /// Integer power of a unitary by repeated squaring.
    pub fn pow(&self, exponent: usize) -> Result<Self> {
        if self.kind != OperatorKind::Unitary {
            return Err(Error::arg("pow is defined for unitaries only"));
        }
        let mut result = DMatrix::<C64>::identity(self.dim(), self.dim());
        let mut base = self.matrix.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(Self {
            matrix: result,
            num_sites: self.num_sites,
            kind: OperatorKind::Unitary,
        })
    }

    /// Applies the operator to a state. The result is only normalized when the
    /// operator is unitary.
    pub fn apply(&self, psi: &SpinState) -> Result<SpinState> {
        if psi.num_sites != self.num_sites {
            return Err(Error::arg(format!(
                "operator acts on {} sites, state has {}",
                self.num_sites, psi.num_sites
            )));
        }
        if self.kind != OperatorKind::Unitary {
            return Err(Error::arg("only unitaries map states to states"));
        }
        Ok(SpinState {
            amplitudes: &self.matrix * &psi.amplitudes,
            num_sites: self.num_sites,
        })
    }

    fn same_register(&self, other: &SpinOperator) -> Result<()> {
        if self.num_sites != other.num_sites {
            return Err(Error::arg(format!(
                "register mismatch: {} vs {} sites",
                self.num_sites, other.num_sites
            )));
        }
        Ok(())
    }
}

/// Normalized pure state of the spin register.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    amplitudes: DVector<C64>,
    num_sites: usize,
}

impl SpinState {
    /// Wraps an amplitude vector, rejecting it unless its norm is 1 within
    /// [`NORM_TOL`].
    pub fn new(amplitudes: DVector<C64>, num_sites: usize) -> Result<Self> {
        check_sites(num_sites)?;
        if amplitudes.len() != dimension(num_sites) {
            return Err(Error::arg(format!(
                "state has {} amplitudes, expected {}",
                amplitudes.len(),
                dimension(num_sites)
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::arg(format!("state norm is {norm}, expected 1")));
        }
        Ok(Self {
            amplitudes,
            num_sites,
        })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(amplitudes: DVector<C64>, num_sites: usize) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::arg("cannot normalize a zero or non-finite vector"));
        }
        Self::new(amplitudes / C64::new(norm, 0.0), num_sites)
    }

    /// Computational basis state with the given index.
    pub fn basis(num_sites: usize, index: usize) -> Result<Self> {
        check_sites(num_sites)?;
        let dim = dimension(num_sites);
        if index >= dim {
            return Err(Error::arg(format!(
                "basis index {index} out of range for {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self {
            amplitudes: v,
            num_sites,
        })
    }

    /// Product state from per-site spins, site 0 first.
    pub fn from_spins(spins: &[Spin]) -> Result<Self> {
        let n = spins.len();
        check_sites(n)?;
        let index = spins
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Spin::Down)
            .fold(0usize, |acc, (site, _)| acc | site_mask(site, n));
        Self::basis(n, index)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &SpinState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::arg(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `⟨σ^z_j⟩` for every site, computed directly from basis populations.
    pub fn magnetizations(&self) -> Vec<f64> {
        let n = self.num_sites;
        let mut out = vec![0.0; n];
        for (b, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (site, m) in out.iter_mut().enumerate() {
                if b & site_mask(site, n) == 0 {
                    *m += p;
                } else {
                    *m -= p;
                }
            }
        }
        out
    }

    /// Applies the Pauli string `Π σ^{axis}_{site}` in place of a copy.
    pub fn apply_pauli_string(&self, ops: &[(usize, Axis)]) -> Result<SpinState> {
        for &(site, _) in ops {
            if site >= self.num_sites {
                return Err(Error::arg(format!("site {site} out of range")));
            }
        }
        let mut out = DVector::zeros(self.dim());
        for (b, a) in self.amplitudes.iter().enumerate() {
            let (nb, phase) = pauli_string_action(ops, b, self.num_sites);
            out[nb] += phase * a;
        }
        Ok(SpinState {
            amplitudes: out,
            num_sites: self.num_sites,
        })
    }

    pub(crate) fn from_raw(amplitudes: DVector<C64>, num_sites: usize) -> Self {
        Self {
            amplitudes,
            num_sites,
        }
    }
}

/// Single-site spin label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up,
    Down,
}

/// Parses `"↓↓↑↓↓"` (or the ASCII form `"ddudd"`) into a product state.
impl FromStr for SpinState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spins = s
            .trim()
            .chars()
            .map(|c| match c {
                '↑' | 'u' | 'U' => Ok(Spin::Up),
                '↓' | 'd' | 'D' => Ok(Spin::Down),
                other => Err(Error::arg(format!(
                    "invalid spin label {other:?} in {s:?}; use ↑/↓ or u/d"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        SpinState::from_spins(&spins)
    }
}

/// Basis states print as arrows (`↓↓↑↓↓`); superpositions list their
/// nonzero amplitudes.
impl fmt::Display for SpinState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.num_sites;
        let label = |b: usize| -> String {
            (0..n)
                .map(|k| {
                    if b & site_mask(k, n) != 0 {
                        '↓'
                    } else {
                        '↑'
                    }
                })
                .collect()
        };
        let nonzero: Vec<(usize, C64)> = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > NORM_TOL)
            .map(|(b, a)| (b, *a))
            .collect();
        if let [(b, a)] = nonzero[..] {
            if (a - C64::new(1.0, 0.0)).norm() < NORM_TOL {
                return f.write_str(&label(b));
            }
        }
        let terms: Vec<String> = nonzero
            .iter()
            .map(|(b, a)| format!("({}{:+}i)|{}⟩", a.re, a.im, label(*b)))
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

/// Image of basis index `b` under a Pauli string and the accumulated phase.
#[inline]
pub fn pauli_string_action(ops: &[(usize, Axis)], b: usize, num_sites: usize) -> (usize, C64) {
    let mut idx = b;
    let mut phase = C64::new(1.0, 0.0);
    // rightmost operator acts first
    for &(site, axis) in ops.iter().rev() {
        let mask = site_mask(site, num_sites);
        let (nb, f) = axis.act(idx & mask != 0);
        idx = if nb { idx | mask } else { idx & !mask };
        phase *= f;
    }
    (idx, phase)
}

/// Dense matrix of a Pauli string on an `num_sites` register.
pub fn pauli_string_matrix(ops: &[(usize, Axis)], num_sites: usize) -> DMatrix<C64> {
    let dim = dimension(num_sites);
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let (nb, phase) = pauli_string_action(ops, b, num_sites);
        m[(nb, b)] += phase;
    }
    m
}

/// `I ⊗ … ⊗ σ^axis ⊗ … ⊗ I` with the Pauli matrix at `site`.
pub fn pauli_embed(axis: Axis, site: usize, num_sites: usize) -> Result<SpinOperator> {
    check_sites(num_sites)?;
    if site >= num_sites {
        return Err(Error::arg(format!(
            "site {site} out of range for {num_sites} sites"
        )));
    }
    let id = DMatrix::<C64>::identity(2, 2);
    let factors: Vec<_> = (0..num_sites)
        .map(|k| if k == site { axis.matrix() } else { id.clone() })
        .collect();
    Ok(SpinOperator {
        matrix: kron_all(&factors),
        num_sites,
        kind: OperatorKind::Hamiltonian,
    })
}

/// `exp(-iθ Σ_j σ_j^axis)` for `axis ∈ {x, y}`, built as a tensor power of the
/// single-site rotation `cos θ·I - i sin θ·σ`.
pub fn global_rotation(axis: Axis, theta: f64, num_sites: usize) -> Result<SpinOperator> {
    check_sites(num_sites)?;
    if axis == Axis::Z {
        return Err(Error::arg("global rotations are defined about x or y"));
    }
    if !theta.is_finite() {
        return Err(Error::arg("rotation angle must be finite"));
    }
    let single = DMatrix::<C64>::identity(2, 2) * C64::new(theta.cos(), 0.0)
        - axis.matrix() * C64::new(0.0, theta.sin());
    let factors = vec![single; num_sites];
    Ok(SpinOperator {
        matrix: kron_all(&factors),
        num_sites,
        kind: OperatorKind::Unitary,
    })
}

/// Eigendecomposition of a Hamiltonian, reusable for propagators at many
/// times.
#[derive(Debug, Clone)]
pub struct Spectrum {
    energies: DVector<f64>,
    vectors: DMatrix<C64>,
    num_sites: usize,
}

impl Spectrum {
    pub fn new(h: &SpinOperator) -> Result<Self> {
        if h.kind != OperatorKind::Hamiltonian {
            return Err(Error::Contract(
                "propagator needs a Hermitian generator".into(),
            ));
        }
        let dev = h.hermiticity_defect();
        if dev > STRUCTURE_TOL * max_abs(&h.matrix).max(1.0) {
            return Err(Error::Contract(format!(
                "generator is not Hermitian (max |H - H†| = {dev:.3e})"
            )));
        }
        let eig = h.matrix.clone().symmetric_eigen();
        Ok(Self {
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
            num_sites: h.num_sites,
        })
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// `exp(-iHt)`.
    pub fn propagator(&self, t: f64) -> SpinOperator {
        let phases = self.energies.map(|e| C64::from_polar(1.0, -e * t));
        let mut scaled = self.vectors.clone();
        for (mut col, ph) in scaled.column_iter_mut().zip(phases.iter()) {
            col *= *ph;
        }
        SpinOperator {
            matrix: scaled * self.vectors.adjoint(),
            num_sites: self.num_sites,
            kind: OperatorKind::Unitary,
        }
    }

    /// `exp(-iHt)|ψ⟩` without forming the full propagator.
    pub fn evolve(&self, psi: &SpinState, t: f64) -> Result<SpinState> {
        if psi.num_sites != self.num_sites {
            return Err(Error::arg("state and Hamiltonian registers differ"));
        }
        let mut coeffs = self.vectors.adjoint() * &psi.amplitudes;
        for (c, e) in coeffs.iter_mut().zip(self.energies.iter()) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        Ok(SpinState {
            amplitudes: &self.vectors * coeffs,
            num_sites: self.num_sites,
        })
    }
}

/// `exp(-iHt)` via eigendecomposition of `H`.
pub fn propagator(h: &SpinOperator, t: f64) -> Result<SpinOperator> {
    if !t.is_finite() {
        return Err(Error::arg("time must be finite"));
    }
    Ok(Spectrum::new(h)?.propagator(t))
}

/// `⟨ψ|op|ψ⟩` for a Hermitian observable.
pub fn expectation(op: &SpinOperator, psi: &SpinState) -> Result<f64> {
    if op.kind != OperatorKind::Hamiltonian {
        return Err(Error::arg("expectation values need a Hermitian observable"));
    }
    if op.dim() != psi.dim() {
        return Err(Error::arg(format!(
            "dimension mismatch: operator {} vs state {}",
            op.dim(),
            psi.dim()
        )));
    }
    let v = psi.amplitudes.dotc(&(&op.matrix * &psi.amplitudes));
    Ok(v.re)
}

/// `|⟨a|b⟩|²`.
pub fn state_fidelity(a: &SpinState, b: &SpinState) -> Result<f64> {
    Ok(a.overlap(b)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn single_site_z_is_diag() {
        let z = pauli_embed(Axis::Z, 0, 1).unwrap();
        assert_eq!(z.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(z.matrix()[(1, 1)], c(-1.0, 0.0));
        assert_eq!(z.matrix()[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn pauli_squares_and_traces() {
        for axis in Axis::ALL {
            for site in 0..3 {
                let p = pauli_embed(axis, site, 3).unwrap();
                let sq = p.matrix() * p.matrix();
                assert!(max_abs(&(sq - DMatrix::identity(8, 8))) < 1e-15);
                assert!(p.matrix().trace().norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pauli_embed_rejects_bad_site() {
        assert!(matches!(
            pauli_embed(Axis::X, 2, 2),
            Err(Error::Argument(_))
        ));
        assert!(pauli_embed(Axis::X, 0, 0).is_err());
    }

    #[test]
    fn embedding_matches_bitwise_action() {
        for axis in Axis::ALL {
            for site in 0..3 {
                let dense = pauli_embed(axis, site, 3).unwrap();
                let bitwise = pauli_string_matrix(&[(site, axis)], 3);
                assert!(max_abs(&(dense.matrix() - bitwise)) < 1e-15);
            }
        }
    }

    #[test]
    fn pauli_commutators() {
        let n = 3;
        let x0 = pauli_embed(Axis::X, 0, n).unwrap().into_matrix();
        let y0 = pauli_embed(Axis::Y, 0, n).unwrap().into_matrix();
        let z0 = pauli_embed(Axis::Z, 0, n).unwrap().into_matrix();
        let y2 = pauli_embed(Axis::Y, 2, n).unwrap().into_matrix();
        let comm = &x0 * &y0 - &y0 * &x0;
        assert!(max_abs(&(comm - z0 * c(0.0, 2.0))) < 1e-14);
        assert!(max_abs(&(&x0 * &y2 - &y2 * &x0)) < 1e-15);
    }

    #[test]
    fn zero_angle_rotation_is_identity() {
        for n in 1..4 {
            let r = global_rotation(Axis::Y, 0.0, n).unwrap();
            assert!(max_abs(&(r.matrix() - DMatrix::identity(1 << n, 1 << n))) < 1e-15);
        }
    }

    #[test]
    fn quarter_turn_about_y_maps_x_to_minus_z() {
        let r = global_rotation(Axis::Y, PI / 4.0, 1).unwrap();
        let x = pauli_embed(Axis::X, 0, 1).unwrap();
        let z = pauli_embed(Axis::Z, 0, 1).unwrap();
        let conj = x.conjugated_by(&r).unwrap();
        assert!(max_abs(&(conj.matrix() + z.matrix())) < 1e-15);
    }

    #[test]
    fn half_turn_about_x() {
        // exp(-iπσx) = cos π I - i sin π σx = -I, i.e. -iσx up to the global phase i
        let r = global_rotation(Axis::X, PI, 1).unwrap();
        assert!(max_abs(&(r.matrix() + DMatrix::<C64>::identity(2, 2))) < 1e-15);
        let r2 = global_rotation(Axis::X, PI / 2.0, 1).unwrap();
        let minus_i_x = Axis::X.matrix() * c(0.0, -1.0);
        assert!(max_abs(&(r2.matrix() - minus_i_x)) < 1e-15);
    }

    #[test]
    fn rotation_rejects_z_axis() {
        assert!(global_rotation(Axis::Z, 0.3, 2).is_err());
    }

    #[test]
    fn rotation_is_tensor_power() {
        let r1 = global_rotation(Axis::X, 0.37, 1).unwrap().into_matrix();
        let r3 = global_rotation(Axis::X, 0.37, 3).unwrap().into_matrix();
        let kron = r1.kronecker(&r1).kronecker(&r1);
        assert!(max_abs(&(r3 - kron)) < 1e-15);
    }

    #[test]
    fn propagator_of_z() {
        let z = pauli_embed(Axis::Z, 0, 1).unwrap();
        let t = 0.731;
        let u = propagator(&z, t).unwrap();
        assert!((u.matrix()[(0, 0)] - C64::from_polar(1.0, -t)).norm() < 1e-14);
        assert!((u.matrix()[(1, 1)] - C64::from_polar(1.0, t)).norm() < 1e-14);
        assert!(u.matrix()[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn propagator_at_zero_is_identity() {
        let h = pauli_embed(Axis::X, 1, 3).unwrap();
        let u = propagator(&h, 0.0).unwrap();
        assert!(max_abs(&(u.matrix() - DMatrix::identity(8, 8))) < 1e-14);
    }

    #[test]
    fn propagator_group_property() {
        let n = 3;
        let h = SpinOperator::hamiltonian(
            pauli_embed(Axis::X, 0, n).unwrap().into_matrix() * c(0.7, 0.0)
                + pauli_string_matrix(&[(0, Axis::Z), (2, Axis::Z)], n) * c(-1.3, 0.0)
                + pauli_string_matrix(&[(1, Axis::Y), (2, Axis::Y)], n) * c(0.4, 0.0),
            n,
        )
        .unwrap();
        let (t1, t2) = (0.41, 1.27);
        let u1 = propagator(&h, t1).unwrap();
        let u2 = propagator(&h, t2).unwrap();
        let u12 = propagator(&h, t1 + t2).unwrap();
        assert!(max_abs(&(u1.compose(&u2).unwrap().matrix() - u12.matrix())) < 1e-10);
    }

    #[test]
    fn propagator_rejects_non_hermitian() {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(
            SpinOperator::hamiltonian(m, 1),
            Err(Error::Contract(_))
        ));
        let u = global_rotation(Axis::X, 0.2, 1).unwrap();
        assert!(matches!(propagator(&u, 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn magnetization_of_basis_state() {
        let psi: SpinState = "↓↓↑↓↓".parse().unwrap();
        let z0 = pauli_embed(Axis::Z, 0, 5).unwrap();
        let z2 = pauli_embed(Axis::Z, 2, 5).unwrap();
        assert_eq!(expectation(&z0, &psi).unwrap(), -1.0);
        assert_eq!(expectation(&z2, &psi).unwrap(), 1.0);
        assert_eq!(psi.magnetizations(), vec![-1.0, -1.0, 1.0, -1.0, -1.0]);
        let ascii: SpinState = "ddudd".parse().unwrap();
        assert_eq!(ascii, psi);
    }

    #[test]
    fn identity_expectation_is_one() {
        let v = DVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.0, 0.7), c(0.4, 0.0)]);
        let psi = SpinState::normalized(v, 2).unwrap();
        let id = SpinOperator::hamiltonian(DMatrix::identity(4, 4), 2).unwrap();
        assert!((expectation(&id, &psi).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let psi = SpinState::basis(2, 0).unwrap();
        let z = pauli_embed(Axis::Z, 0, 3).unwrap();
        assert!(matches!(expectation(&z, &psi), Err(Error::Argument(_))));
    }

    #[test]
    fn fidelity_examples() {
        let up = SpinState::basis(1, 0).unwrap();
        let down = SpinState::basis(1, 1).unwrap();
        let plus =
            SpinState::normalized(DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]), 1).unwrap();
        assert_eq!(state_fidelity(&down, &down).unwrap(), 1.0);
        assert_eq!(state_fidelity(&down, &up).unwrap(), 0.0);
        assert!((state_fidelity(&down, &plus).unwrap() - 0.5).abs() < 1e-15);
        let two = SpinState::basis(2, 0).unwrap();
        assert!(state_fidelity(&up, &two).is_err());
    }

    #[test]
    fn state_rejects_bad_norm_and_labels() {
        let v = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(SpinState::new(v, 1).is_err());
        assert!("↑x".parse::<SpinState>().is_err());
        assert!("".parse::<SpinState>().is_err());
    }

    #[test]
    fn unitary_power_matches_repeated_product() {
        let u = global_rotation(Axis::Y, 0.3, 2).unwrap();
        let u5 = u.pow(5).unwrap();
        let direct = global_rotation(Axis::Y, 1.5, 2).unwrap();
        assert!(max_abs(&(u5.matrix() - direct.matrix())) < 1e-13);
        assert!(max_abs(&(u.pow(0).unwrap().matrix() - DMatrix::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn pauli_string_on_state_matches_dense() {
        let v = DVector::from_fn(8, |i, _| c(i as f64 * 0.1 + 0.05, 0.3 - i as f64 * 0.02));
        let psi = SpinState::normalized(v, 3).unwrap();
        let ops = [(0, Axis::Y), (2, Axis::Y)];
        let fast = psi.apply_pauli_string(&ops).unwrap();
        let dense = pauli_string_matrix(&ops, 3) * psi.amplitudes();
        assert!((fast.amplitudes() - dense).norm() < 1e-15);
    }
}
