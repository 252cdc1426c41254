//! Equilibrium, transverse modes and the effective spin-spin couplings of
//! the five-ion reference chain.

use std::f64::consts::PI;

use daqs::ion_chain::{
    coupling_from_modes, equilibrium_positions, lamb_dicke_params, transverse_modes, ChainConfig,
};

fn main() -> daqs::Result<()> {
    let config = ChainConfig::five_ion_reference();
    let positions = equilibrium_positions(&config)?;
    let um: Vec<String> = positions
        .meters()
        .iter()
        .map(|z| format!("{:.2}", z * 1e6))
        .collect();
    println!("positions (µm): {}", um.join(" "));

    let modes = transverse_modes(&config, &positions)?;
    for m in modes.modes.iter().take(3) {
        println!(
            "mode {} ν/2π = {:.4} MHz",
            m.axis.label(),
            m.frequency / (2.0 * PI) / 1e6
        );
    }
    let eta = lamb_dicke_params(&config, &modes);
    println!("η of the first mode, ion 0: {:.4}", eta[(0, 0)]);

    let j = coupling_from_modes(&config, &modes)?;
    for i in 0..j.size() {
        let row: Vec<String> = (0..j.size())
            .map(|k| format!("{:7.2}", j.get(i, k) / (2.0 * PI)))
            .collect();
        println!("{}", row.join(" "));
    }
    let fit = j.fit().expect("five ions");
    println!("J/2π = {:.2} Hz, α = {:.3}", fit.j / (2.0 * PI), fit.alpha);
    Ok(())
}
