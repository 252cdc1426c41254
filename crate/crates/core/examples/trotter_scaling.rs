//! Operator error of the DAQS product formula against the analytic bound.

use daqs::evolution::{daqs_operator_error, trotter_error_bound};
use daqs::ion_chain::CouplingMatrix;

fn main() -> daqs::Result<()> {
    let j = CouplingMatrix::power_law(4, 1.0, 0.7)?;
    println!("{:>4} {:>12} {:>12}", "l", "error", "bound");
    for l in [1, 2, 4, 8, 16, 32] {
        let err = daqs_operator_error(&j, 1.0, l)?;
        let bound = trotter_error_bound(&j, 1.0, l)?;
        println!("{l:>4} {err:>12.4e} {bound:>12.4e}");
    }
    Ok(())
}
