//! Gate counts of both schemes and the error threshold where DAQS wins.

use daqs::protocol::{crossover_threshold, gate_count, InteractionRange, Scheme};

fn main() -> daqs::Result<()> {
    for n in [3, 5, 10, 20] {
        let digital = gate_count(n, InteractionRange::Full, 1, Scheme::Digital)?;
        let daqs = gate_count(n, InteractionRange::Full, 1, Scheme::Daqs)?;
        println!(
            "N = {n:>2}: {} two-qubit gates vs {} analog blocks per step, crossover ε_AB at ε_T = 1e-3: {:.4}",
            digital.two_qubit,
            daqs.analog_blocks,
            crossover_threshold(n, 1e-3)?
        );
    }
    Ok(())
}
