//! Cross-checks the sector amplitudes against the full master equation.
//!
//! For a few small chains the density matrix is evolved in the complete
//! 2^N-dimensional space, and its M-excitation block is compared with
//! `a(t) a(t)^dag` from the kernel propagation.

use std::f64::consts::{FRAC_PI_4, PI};

use chiral_array::dynamics::{uniform_grid, InitialStateSpec};
use chiral_array::kernel::CouplingParams;
use chiral_array::oracle::{build_liouvillian, oracle_compare_with, DensityEvolver, PhaseConvention};

fn main() -> chiral_array::Result<()> {
    let times = uniform_grid(20.0, 41);
    let n = 5;
    for (xi, d) in [(PI, 0.5), (7.5 * PI / 8.0, -1.0), (PI / 2.0, 0.0)] {
        let liouvillian = build_liouvillian(&CouplingParams::new(n, 1, xi, d))?;
        let evolver = DensityEvolver::new(&liouvillian, &times)?;
        for (m, initial) in [
            (1, InitialStateSpec::Product { sites: vec![2] }),
            (2, InitialStateSpec::ThetaPhi { j: 1, phi: FRAC_PI_4, theta: FRAC_PI_4 }),
            (2, InitialStateSpec::SixFold { j: 2 }),
            (3, InitialStateSpec::Product { sites: vec![1, 2, 3] }),
        ] {
            let params = CouplingParams::new(n, m, xi, d);
            let r = oracle_compare_with(&evolver, &params, &initial, PhaseConvention::KernelConsistent)?;
            println!(
                "xi/pi = {:.4} D = {d:>4} M = {m}: block {:.2e} populations {:.2e} trace error {:.2e} -> {}",
                xi / PI,
                r.max_block_deviation,
                r.max_population_deviation,
                r.max_trace_error,
                if r.pass { "pass" } else { "FAIL" }
            );
        }
    }
    Ok(())
}
