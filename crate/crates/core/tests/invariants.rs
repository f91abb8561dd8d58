//! Structural invariants of the sector dynamics, checked on randomized small
//! chains: linearity, the semigroup law, norm decay, one-way support at
//! D = 1, reflection covariance and the population sum rule.

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use chiral_array::basis::enumerate_basis;
use chiral_array::dynamics::{make_initial_state, uniform_grid, InitialStateSpec, Propagator};
use chiral_array::kernel::{build_kernel, CouplingParams};
use chiral_array::observables::{excitation_population, moment_series, Normalization};

fn random_state(dim: usize, seed: u64) -> Array1<C64> {
    // xorshift keeps the amplitudes reproducible without an RNG dependency here
    let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let a = Array1::from_shape_fn(dim, |_| C64::new(next(), next()));
    let norm = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    a.mapv(|z| z / norm)
}

fn chain() -> impl Strategy<Value = (usize, usize, f64, f64)> {
    (3usize..=8, 1usize..=3, 0.3f64..=1.0, -1.0f64..=1.0)
        .prop_filter("M < N", |(n, m, _, _)| m < n)
        .prop_map(|(n, m, x, d)| (n, m, x * PI, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn propagation_is_linear((n, m, xi, d) in chain(), seed in any::<u64>(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let basis = enumerate_basis(n, m).unwrap();
        let prop = Propagator::new(&build_kernel(&basis, &CouplingParams::new(n, m, xi, d)).unwrap()).unwrap();
        let times = uniform_grid(6.0, 7);
        let x = random_state(basis.dim(), seed);
        let y = random_state(basis.dim(), seed ^ 0xABCD);
        let (ca, cb) = (C64::new(alpha, 0.3), C64::new(beta, -0.7));
        let combo = x.mapv(|z| z * ca) + y.mapv(|z| z * cb);
        let ux = prop.evolve_raw(&x, &times).unwrap();
        let uy = prop.evolve_raw(&y, &times).unwrap();
        let uc = prop.evolve_raw(&combo, &times).unwrap();
        for k in 0..times.len() {
            for p in 0..basis.dim() {
                let expect = ux.amplitudes[[k, p]] * ca + uy.amplitudes[[k, p]] * cb;
                prop_assert!((uc.amplitudes[[k, p]] - expect).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn propagation_composes((n, m, xi, d) in chain(), seed in any::<u64>(), s in 0.1f64..8.0, t in 0.1f64..8.0) {
        let basis = enumerate_basis(n, m).unwrap();
        let prop = Propagator::new(&build_kernel(&basis, &CouplingParams::new(n, m, xi, d)).unwrap()).unwrap();
        let a0 = random_state(basis.dim(), seed);
        let direct = prop.evolve_raw(&a0, &[s + t]).unwrap();
        let first = prop.evolve_raw(&a0, &[s]).unwrap().at(0).to_owned();
        let second = prop.evolve_raw(&first, &[t]).unwrap();
        for p in 0..basis.dim() {
            prop_assert!((direct.amplitudes[[0, p]] - second.amplitudes[[0, p]]).norm() < 1e-9);
        }
    }

    #[test]
    fn norm_never_grows((n, m, xi, d) in chain(), seed in any::<u64>()) {
        let basis = enumerate_basis(n, m).unwrap();
        let prop = Propagator::new(&build_kernel(&basis, &CouplingParams::new(n, m, xi, d)).unwrap()).unwrap();
        let traj = prop.evolve(&random_state(basis.dim(), seed), &uniform_grid(30.0, 61)).unwrap();
        prop_assert!(traj.max_norm_increase() <= 1e-10);
    }

    #[test]
    fn populations_sum_to_m_times_norm((n, m, xi, d) in chain(), seed in any::<u64>()) {
        let basis = enumerate_basis(n, m).unwrap();
        let prop = Propagator::new(&build_kernel(&basis, &CouplingParams::new(n, m, xi, d)).unwrap()).unwrap();
        let traj = prop.evolve(&random_state(basis.dim(), seed), &uniform_grid(20.0, 21)).unwrap();
        let field = excitation_population(&traj, &basis).unwrap();
        for k in 0..traj.len() {
            prop_assert!((field.total(k) - m as f64 * traj.norms[k].powi(2)).abs() < 1e-9);
        }
    }

    #[test]
    fn third_order_splits_into_cumulant_and_cross_terms((n, m, xi, d) in chain(), seed in any::<u64>()) {
        let basis = enumerate_basis(n, m).unwrap();
        let prop = Propagator::new(&build_kernel(&basis, &CouplingParams::new(n, m, xi, d)).unwrap()).unwrap();
        let traj = prop.evolve(&random_state(basis.dim(), seed), &uniform_grid(10.0, 11)).unwrap();
        for mo in moment_series(&traj, &basis, Normalization::Raw).unwrap() {
            let g = mo.g3().unwrap();
            prop_assert!((g.g3 - g.parts_sum()).abs() < 1e-12);
        }
    }

    #[test]
    fn reflection_swaps_directionality((n, m, xi, d) in chain(), seed in any::<u64>()) {
        let basis = enumerate_basis(n, m).unwrap();
        let times = uniform_grid(10.0, 11);
        let forward = Propagator::new(&build_kernel(&basis, &CouplingParams::new(n, m, xi, d)).unwrap()).unwrap();
        let mirrored = Propagator::new(&build_kernel(&basis, &CouplingParams::new(n, m, xi, -d)).unwrap()).unwrap();
        let a0 = random_state(basis.dim(), seed);
        let perm = basis.reflection_permutation();
        let mut b0 = Array1::<C64>::zeros(basis.dim());
        for (p, &z) in a0.iter().enumerate() {
            b0[perm[p]] = z;
        }
        let ua = forward.evolve(&a0, &times).unwrap();
        let ub = mirrored.evolve(&b0, &times).unwrap();
        for k in 0..times.len() {
            for p in 0..basis.dim() {
                prop_assert!((ua.amplitudes[[k, p]] - ub.amplitudes[[k, perm[p]]]).norm() < 1e-9);
            }
        }
    }
}

/// At D = 1 every hop moves an excitation rightward, so no site left of the
/// leftmost initially excited site is ever populated: those entries stay exactly 0.
#[test]
fn one_way_coupling_never_populates_sites_left_of_the_support() {
    for n in 4..=10 {
        for m in 1..=3.min(n - 1) {
            let basis = enumerate_basis(n, m).unwrap();
            let kernel = build_kernel(&basis, &CouplingParams::new(n, m, PI, 1.0)).unwrap();
            let start = (n - m) / 2 + 1;
            let sites: Vec<usize> = (start..start + m).collect();
            let a0 = make_initial_state(&basis, &InitialStateSpec::Product { sites }).unwrap();
            let traj = Propagator::new(&kernel).unwrap().evolve(&a0, &uniform_grid(20.0, 41)).unwrap();
            let field = excitation_population(&traj, &basis).unwrap();
            for k in 0..traj.len() {
                for site in 1..start {
                    assert_eq!(field.populations[[k, site - 1]], 0.0, "N={n} M={m} site {site}");
                }
            }
            assert!(field.populations[[traj.len() - 1, n - 1]] > 0.0);
        }
    }
}
