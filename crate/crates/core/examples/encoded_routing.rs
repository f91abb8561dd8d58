//! Routing time of the end-site population for initial states of increasing
//! participation entropy, and its dependence on the entangling angle theta.
//!
//! Output defaults to `out/encoded_routing`.

use std::f64::consts::{FRAC_PI_4, PI};
use std::path::PathBuf;

use chiral_array::basis::enumerate_basis;
use chiral_array::config::{SimulationConfig, SweepAxis, SweepRange, SweepSpec};
use chiral_array::dynamics::{make_initial_state, uniform_grid, InitialStateSpec, Propagator};
use chiral_array::figures::{LinePlot, Series};
use chiral_array::io::write_atomic;
use chiral_array::kernel::{build_kernel, CouplingParams};
use chiral_array::observables::{detect_tc, excitation_population, participation_entropy};
use chiral_array::runner::sweep;

/// First site of the four-site block; the centre of a 40-site array.
const J: usize = 20;

fn main() -> chiral_array::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/encoded_routing".into()));
    let n = 40;
    let times = uniform_grid(400.0, 1601);
    let basis = enumerate_basis(n, 2)?;
    let states = [
        ("product", InitialStateSpec::Product { sites: vec![J, J + 1] }),
        ("theta_phi(pi/4, 0)", InitialStateSpec::ThetaPhi { j: J, phi: FRAC_PI_4, theta: 0.0 }),
        ("theta_phi(pi/4, pi/4)", InitialStateSpec::ThetaPhi { j: J, phi: FRAC_PI_4, theta: FRAC_PI_4 }),
        ("six_fold", InitialStateSpec::SixFold { j: J }),
    ];
    for d in [0.5, 0.8] {
        let propagator = Propagator::new(&build_kernel(&basis, &CouplingParams::new(n, 2, PI, d))?)?;
        let mut plot = LinePlot::new(format!("End-site population, D = {d}"), "t", "P_N(t)");
        for (label, spec) in &states {
            let a0 = make_initial_state(&basis, spec)?;
            let traj = propagator.evolve(&a0, &times)?;
            let p_n = excitation_population(&traj, &basis)?.site(n);
            let r = detect_tc(&times, &p_n, false)?;
            println!(
                "D = {d}  {label:<22} S = {:.4}  t_c = {:>7.2}  P_N(t_c) = {:.4e}",
                participation_entropy(&a0)?,
                r.t_c.unwrap_or(f64::NAN),
                r.p_max
            );
            plot = plot.with(Series::line(*label, times.clone(), p_n));
        }
        write_atomic(&out.join(format!("end_population_d{d}.svg")), plot.to_svg().as_bytes())?;
    }

    // t_c(theta) at phi = pi/4 for three directionalities, through the sweep runner
    let mut config = SimulationConfig::new(
        &CouplingParams::new(n, 2, PI, 0.5),
        InitialStateSpec::ThetaPhi { j: J, phi: FRAC_PI_4, theta: 0.0 },
    );
    config.time.t_max = 400.0;
    config.time.n_points = 1601;
    config.observables.speed = false;
    config.output.dir = out.join("theta_sweep");
    config.sweep = Some(SweepSpec {
        axis: SweepAxis::Theta,
        values: None,
        range: Some(SweepRange { start: 0.0, stop: PI, n: 41 }),
        d_values: Some(vec![0.5, 0.8, 1.0]),
    });
    let result = sweep(&config)?;
    for d in [0.5, 0.8, 1.0] {
        let best = result
            .series(d)
            .into_iter()
            .max_by(|a, b| a.routing.t_c.partial_cmp(&b.routing.t_c).unwrap())
            .unwrap();
        println!("D = {d}: largest t_c = {:.2} at theta = {:.3}", best.routing.t_c.unwrap(), best.value);
    }
    println!("figures in {}", out.display());
    Ok(())
}
