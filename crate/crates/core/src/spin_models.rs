//! Two-body spin Hamiltonians `Σ_{i<j} J_ij Σ_a σ_i^a σ_j^a` built from a
//! coupling matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::ion_chain::CouplingMatrix;
use crate::spin_algebra::{dimension, pauli_string_action, Axis, SpinOperator};
use crate::{Error, Result, C64};

/// Which Pauli products enter the pair interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// `σ⃗_i·σ⃗_j`
    Heisenberg,
    Xx,
    Yy,
    Zz,
    /// `σ^x σ^x + σ^y σ^y`, without the factor ½.
    Xy,
}

impl ModelKind {
    pub fn axes(self) -> &'static [Axis] {
        match self {
            ModelKind::Heisenberg => &[Axis::X, Axis::Y, Axis::Z],
            ModelKind::Xx => &[Axis::X],
            ModelKind::Yy => &[Axis::Y],
            ModelKind::Zz => &[Axis::Z],
            ModelKind::Xy => &[Axis::X, Axis::Y],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Heisenberg => "heisenberg",
            ModelKind::Xx => "xx",
            ModelKind::Yy => "yy",
            ModelKind::Zz => "zz",
            ModelKind::Xy => "xy",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heisenberg" => Ok(ModelKind::Heisenberg),
            "xx" => Ok(ModelKind::Xx),
            "yy" => Ok(ModelKind::Yy),
            "zz" => Ok(ModelKind::Zz),
            "xy" => Ok(ModelKind::Xy),
            other => Err(Error::arg(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Hamiltonian of the given kind for coupling matrix `j`.
pub fn build_model(kind: ModelKind, j: &CouplingMatrix) -> Result<SpinOperator> {
    let n = j.size();
    if n < 2 {
        return Err(Error::arg(format!(
            "spin models need at least two sites, got {n}"
        )));
    }
    let dim = dimension(n);
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (a, b, jab) in j.pairs() {
        if jab == 0.0 {
            continue;
        }
        for &axis in kind.axes() {
            let ops = [(a, axis), (b, axis)];
            for col in 0..dim {
                let (row, phase) = pauli_string_action(&ops, col, n);
                m[(row, col)] += phase * jab;
            }
        }
    }
    SpinOperator::hamiltonian(m, n)
}

/// `Σ_{i<j} J_ij`, the sup-norm bound used for antiferromagnetic couplings.
pub fn sup_norm_bound(j: &CouplingMatrix) -> Result<f64> {
    if let Some((a, b, v)) = j.pairs().find(|(_, _, v)| *v < 0.0) {
        return Err(Error::Domain(format!(
            "sup-norm bound needs non-negative couplings, J[{a}][{b}] = {v}"
        )));
    }
    Ok(j.pairs().map(|(_, _, v)| v).sum())
}
