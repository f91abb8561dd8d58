//! Robustness of the routing time to Gaussian noise on the entangling angles.
//!
//! cargo run --release --example phase_jitter -- [sigma_theta] [n_samples]

use std::f64::consts::{FRAC_PI_4, PI};

use chiral_array::config::{JitterSpec, SimulationConfig};
use chiral_array::dynamics::InitialStateSpec;
use chiral_array::kernel::CouplingParams;
use chiral_array::runner::jitter_study;

fn main() -> chiral_array::Result<()> {
    let mut args = std::env::args().skip(1);
    let sigma: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.1);
    let samples: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(32);

    let mut config = SimulationConfig::new(
        &CouplingParams::new(40, 2, PI, 0.5),
        InitialStateSpec::ThetaPhi { j: 20, phi: FRAC_PI_4, theta: FRAC_PI_4 },
    );
    config.time.t_max = 400.0;
    config.time.n_points = 1601;
    config.output.dir = "out/phase_jitter".into();
    config.jitter = Some(JitterSpec {
        sigma_theta: sigma,
        sigma_phi: 0.0,
        n_samples: samples,
        seed: 2024,
        max_relative_std: Some(0.1),
    });
    let r = jitter_study(&config)?;
    println!("unperturbed t_c = {:?}", r.baseline_t_c);
    println!(
        "sigma_theta = {sigma}: mean {:.3}, std {:.3}, range [{:.2}, {:.2}], relative std {:.3}",
        r.mean, r.std, r.min, r.max, r.relative_std
    );
    println!("within relative-std bound 0.1: {:?}", r.within_bound);
    Ok(())
}
