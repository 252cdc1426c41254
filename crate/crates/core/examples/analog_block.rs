//! Spin-phonon simulation of one XX and one XY analog block through the
//! centre-of-mass mode.

use std::f64::consts::PI;

use daqs::evolution::BlockKind;
use daqs::ion_chain::CouplingMatrix;
use daqs::spin_algebra::SpinState;
use daqs::spin_phonon::{
    analog_block_fidelity, xy_effective_terms, BlockParams, PhononSpace, PropagationSettings,
};

fn main() -> daqs::Result<()> {
    let tau = 2.0 * PI;
    let (nu, delta, asym, rabi, j) = (tau * 2.65e6, tau * 60e3, tau * 3e3, tau * 62e3, 499.3);
    let psi: SpinState = "↓↓↑↓↓".parse()?;
    let space = PhononSpace::effective_com(nu, delta, 4)?;
    let target = CouplingMatrix::uniform(5, j)?;
    let times: Vec<f64> = (0..=40).map(|k| 1e-3 * k as f64 / 40.0).collect();

    for (kind, d) in [(BlockKind::Xx, 0.0), (BlockKind::Xy, asym)] {
        let p = BlockParams::effective_com(kind, 5, j, delta, d, rabi)?;
        let curve = analog_block_fidelity(
            &p,
            &space,
            &target,
            &psi,
            &times,
            &PropagationSettings::default(),
        )?;
        println!(
            "{kind}: worst infidelity {:.4}, final fidelity {:.4}, dt {:.2e} s",
            curve.worst_infidelity(),
            curve.fidelities.last().unwrap(),
            curve.dt
        );
        if kind == BlockKind::Xy {
            let terms = xy_effective_terms(&p, &space)?;
            println!(
                "xy field / spin-spin magnitude ratio {:.4}",
                terms.magnitude_ratio
            );
        }
    }
    Ok(())
}
