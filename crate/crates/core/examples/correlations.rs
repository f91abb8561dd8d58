//! Density-density and third-order correlations of propagating excitations.
//!
//! Three panels of `<G2(r)> x 10^3` for pairs started `r0 = 1, 2, 3` sites
//! apart, and `<G3> x 10^2` of an adjacent trimer near and slightly away
//! from `xi = pi`. Output defaults to `out/correlations`.

use std::f64::consts::PI;
use std::path::PathBuf;

use chiral_array::basis::enumerate_basis;
use chiral_array::dynamics::{make_initial_state, uniform_grid, InitialStateSpec, Propagator};
use chiral_array::figures::{LinePlot, Series};
use chiral_array::io::write_atomic;
use chiral_array::kernel::{build_kernel, CouplingParams};
use chiral_array::observables::{density_density, third_order};

fn main() -> chiral_array::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/correlations".into()));
    let times = uniform_grid(50.0, 401);

    let basis = enumerate_basis(40, 2)?;
    let propagator = Propagator::new(&build_kernel(&basis, &CouplingParams::new(40, 2, PI, 0.5))?)?;
    for r0 in 1..=3 {
        let a0 = make_initial_state(&basis, &InitialStateSpec::Product { sites: vec![20, 20 + r0] })?;
        let traj = propagator.evolve(&a0, &times)?;
        let mut plot = LinePlot::new(format!("Pair started {r0} apart"), "t", "<G2(r)> x 10^3");
        let mut dominant = 0;
        let series: Vec<Vec<f64>> = (1..=5)
            .map(|r| density_density(&traj, &basis, r))
            .collect::<chiral_array::Result<_>>()?;
        for k in 0..times.len() {
            if (0..5).all(|r| series[r0 - 1][k].abs() >= series[r][k].abs()) {
                dominant += 1;
            }
        }
        for (r, g) in series.into_iter().enumerate() {
            plot = plot.with(Series::line(format!("r = {}", r + 1), times.clone(), g.iter().map(|x| x * 1e3).collect()));
        }
        write_atomic(&out.join(format!("g2_r0_{r0}.svg")), plot.to_svg().as_bytes())?;
        println!(
            "r0 = {r0}: |G2(r0)| is the largest of r = 1..5 at {:.0}% of times",
            100.0 * dominant as f64 / times.len() as f64
        );
    }

    let trimer = enumerate_basis(21, 3)?;
    let times = uniform_grid(100.0, 401);
    let dt = times[1] - times[0];
    let mut plot = LinePlot::new("Adjacent trimer, D = 0.1", "t", "<G3> x 10^2");
    for (label, xi) in [("xi = pi", PI), ("xi = 7.8 pi/8", 7.8 * PI / 8.0), ("xi = 7.5 pi/8", 7.5 * PI / 8.0)] {
        let kernel = build_kernel(&trimer, &CouplingParams::new(21, 3, xi, 0.1))?;
        let a0 = make_initial_state(&trimer, &InitialStateSpec::Product { sites: vec![10, 11, 12] })?;
        let traj = Propagator::new(&kernel)?.evolve(&a0, &times)?;
        let g3: Vec<f64> = third_order(&traj, &trimer)?.iter().map(|g| g.g3).collect();
        let integral: f64 = g3.windows(2).map(|w| 0.5 * (w[0].abs() + w[1].abs()) * dt).sum();
        println!("{label:<14} integral of |G3| over [0, 100] = {integral:.4e}");
        plot = plot.with(Series::line(label, times.clone(), g3.iter().map(|x| x * 1e2).collect()));
    }
    write_atomic(&out.join("g3_xi.svg"), plot.to_svg().as_bytes())?;
    println!("figures in {}", out.display());
    Ok(())
}
