//! The sector amplitudes must reproduce the fixed-excitation block of the full
//! master-equation density matrix, including every derived correlation.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use chiral_array::basis::binomial;
use chiral_array::dynamics::{uniform_grid, InitialStateSpec};
use chiral_array::kernel::CouplingParams;
use chiral_array::oracle::{build_liouvillian, oracle_compare, ORACLE_TOLERANCE};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_superpositions_agree_with_the_master_equation(
        n in 3usize..=4,
        m in 1usize..=2,
        xi_over_pi in 0.4f64..=1.0,
        d in -1.0f64..=1.0,
        raw in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6),
    ) {
        let dim = binomial(n, m) as usize;
        let amplitudes: Vec<C64> = raw.iter().cycle().take(dim).enumerate()
            .map(|(i, &(re, im))| C64::new(re + 0.01 * (i + 1) as f64, im))
            .collect();
        let params = CouplingParams::new(n, m, xi_over_pi * PI, d);
        let report = oracle_compare(&params, &InitialStateSpec::Custom { amplitudes }, &uniform_grid(10.0, 11)).unwrap();
        prop_assert!(report.pass, "{report:?}");
        prop_assert!(report.max_g2_deviation < ORACLE_TOLERANCE);
        prop_assert!(report.max_trace_error < 1e-9);
        prop_assert!(report.min_eigenvalue > -1e-9);
    }
}

#[test]
fn liouvillian_preserves_trace() {
    for d in [-1.0, 0.0, 0.7] {
        let l = build_liouvillian(&CouplingParams::new(4, 1, 0.8 * PI, d)).unwrap();
        assert!(l.trace_defect() < 1e-12, "D = {d}");
    }
}

#[test]
fn three_excitations_match_including_third_order_correlation() {
    let params = CouplingParams::new(5, 3, 7.5 * PI / 8.0, 0.5);
    let report = oracle_compare(
        &params,
        &InitialStateSpec::Product { sites: vec![1, 2, 3] },
        &uniform_grid(20.0, 41),
    )
    .unwrap();
    assert!(report.pass, "{report:?}");
    assert!(report.max_g3_deviation < ORACLE_TOLERANCE);
}
