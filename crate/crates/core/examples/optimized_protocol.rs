//! Region-wise choice of Trotter steps under a fixed per-block error.

use std::f64::consts::PI;

use daqs::evolution::FixedBlockError;
use daqs::ion_chain::{coupling_matrix, ChainConfig};
use daqs::protocol::{optimize_trotter_steps, OptimizerSettings};
use daqs::spin_algebra::SpinState;

fn main() -> daqs::Result<()> {
    let j = coupling_matrix(&ChainConfig::five_ion_reference())?.normalized()?;
    let psi: SpinState = "↓↓↑↓↓".parse()?;
    let t_final = 2.0 * PI / 3.0;
    let grid: Vec<f64> = (0..=30).map(|k| t_final * k as f64 / 30.0).collect();
    for eps in [0.0, 0.01, 0.02] {
        let opt = optimize_trotter_steps(
            &j,
            &psi,
            t_final,
            &grid,
            &FixedBlockError(eps),
            &OptimizerSettings::default(),
        )?;
        let steps: Vec<usize> = opt.regions.iter().map(|r| r.trotter_steps).collect();
        println!(
            "ε = {eps:.2}: l per region {steps:?}, final fidelity {:.4}",
            opt.fidelities.last().unwrap()
        );
    }
    Ok(())
}
