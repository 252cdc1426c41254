//! Fidelity of digital and digital-analog Trotterization of the Heisenberg
//! model on the reference chain.

use std::f64::consts::PI;

use daqs::evolution::{daqs_evolve, digital_evolve};
use daqs::ion_chain::{coupling_matrix, ChainConfig};
use daqs::spin_algebra::SpinState;

fn main() -> daqs::Result<()> {
    let j = coupling_matrix(&ChainConfig::five_ion_reference())?.normalized()?;
    let psi: SpinState = "↓↓↑↓↓".parse()?;
    let times: Vec<f64> = (0..=6).map(|k| 2.0 * PI / 3.0 * k as f64 / 6.0).collect();
    for l in 1..=3 {
        let d = digital_evolve(&j, &psi, &times, l, None, None)?;
        let a = daqs_evolve(&j, &psi, &times, l, None)?;
        println!("l = {l}");
        for (k, t) in times.iter().enumerate() {
            println!(
                "  Jt = {t:.3}  digital {:.4}  daqs {:.4}",
                d.fidelities[k], a.fidelities[k]
            );
        }
    }
    Ok(())
}
