//! Builds small interaction kernels and checks their structure by eye:
//! the four-site two-excitation kernel, its dissipative spectrum, and the
//! two-site dark pair.

use std::f64::consts::PI;

use chiral_array::basis::enumerate_basis;
use chiral_array::dynamics::{propagate, uniform_grid};
use chiral_array::kernel::{build_kernel, rates_from_directionality, CouplingParams};
use ndarray::array;
use num_complex::Complex64 as C64;

fn main() -> chiral_array::Result<()> {
    let params = CouplingParams::new(4, 2, PI, 0.5);
    let (gl, gr) = rates_from_directionality(params.directionality, params.total_rate)?;
    println!("D = {}: gamma_L = {gl}, gamma_R = {gr}", params.directionality);

    let basis = enumerate_basis(4, 2)?;
    let kernel = build_kernel(&basis, &params)?;
    print!("{:>8}", "");
    for q in basis.states() {
        print!("{:>14}", q.to_string());
    }
    println!();
    for (p, state) in basis.states().iter().enumerate() {
        print!("{:>8}", state.to_string());
        for q in 0..basis.dim() {
            let z = kernel.get(p, q);
            print!("{:>14}", format!("{:+.2}{:+.2}i", z.re, z.im));
        }
        println!();
    }
    println!(
        "largest eigenvalue of V + V^dag: {:.3e} (must be <= 0)",
        kernel.max_dissipative_eigenvalue()?
    );

    // reciprocal two-site chain at xi = pi: (1, 1)/sqrt 2 is dark
    let pair = build_kernel(&enumerate_basis(2, 1)?, &CouplingParams::new(2, 1, PI, 0.0))?;
    let a0 = array![C64::new(1.0, 0.0), C64::new(1.0, 0.0)] / C64::new(2f64.sqrt(), 0.0);
    let traj = propagate(&pair, &a0, &uniform_grid(100.0, 5))?;
    println!("dark pair norms over t in [0, 100]: {:?}", traj.norms);
    Ok(())
}
