//! Pauli strings, global rotations and the XX → ZZ conjugation.

use std::f64::consts::PI;

use daqs::ion_chain::CouplingMatrix;
use daqs::spin_algebra::{expectation, global_rotation, max_abs, pauli_embed, Axis, SpinState};
use daqs::spin_models::{build_model, ModelKind};

fn main() -> daqs::Result<()> {
    let psi: SpinState = "↓↓↑↓↓".parse()?;
    println!("state {psi}, magnetizations {:?}", psi.magnetizations());

    // A π/2 rotation about y flips every spin.
    let flipped = global_rotation(Axis::Y, PI / 2.0, 5)?.apply(&psi)?;
    println!("after R_y(π/2): {flipped}");

    let x0 = pauli_embed(Axis::X, 0, 5)?;
    println!("⟨σ^x_0⟩ = {:.3}", expectation(&x0, &psi)?);

    let j = CouplingMatrix::power_law(5, 1.0, 0.7)?;
    let r = global_rotation(Axis::Y, PI / 4.0, 5)?;
    let xx = build_model(ModelKind::Xx, &j)?;
    let zz = build_model(ModelKind::Zz, &j)?;
    let defect = max_abs(&(xx.conjugated_by(&r)?.into_matrix() - zz.into_matrix()));
    println!("max |R H_XX R† - H_ZZ| = {defect:.1e}");
    Ok(())
}
