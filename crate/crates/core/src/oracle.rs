//! Full master-equation engine for small arrays.
//!
//! The density matrix lives on all `2^N` spin configurations (site `m` is bit
//! `m - 1`) and is evolved with the vectorized generator
//!
//! ```text
//! d rho/dt = -i [H_L + H_R, rho] + L_L[rho] + L_R[rho]
//! H_{L(R)} = -i gamma_{L(R)}/2 sum_{mu <(>) nu} (e^{i k |r_mu - r_nu|} s_mu^dag s_nu - h.c.)
//! L_{L(R)}[rho] = -gamma_{L(R)}/2 sum_{mu,nu} e^{-+ i k (r_mu - r_nu)}
//!                 (s_mu^dag s_nu rho + rho s_mu^dag s_nu - 2 s_nu rho s_mu^dag)
//! ```
//!
//! on a lattice `r_m = m`. With `k = xi` this produces the complex conjugate
//! of the hop phases used by [`crate::kernel`]; [`PhaseConvention`] selects
//! between that literal reading and `k = -xi`, which matches the kernel.
//! Quantum jumps only feed lower excitation sectors, so the `M`-excitation
//! block of `rho` must follow `dB/dt = V B + B V^dag`, which is what
//! [`oracle_compare`] checks.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_basis, ExcitationBasis};
use crate::dynamics::{make_initial_state, InitialStateSpec, Propagator};
use crate::error::{Error, Result};
use crate::io::write_json;
use crate::kernel::{build_kernel, CouplingParams};
use crate::linalg::expm;
use crate::observables::Moments;

/// Largest array the oracle accepts by default (generator is `4^N x 4^N`).
pub const DEFAULT_ORACLE_CAP: usize = 6;

/// Deviation bound used by [`oracle_compare`].
pub const ORACLE_TOLERANCE: f64 = 1e-8;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// Guided-mode wave vector `k = -xi`; the sector block then matches the kernel.
    #[default]
    KernelConsistent,
    /// `k = xi` exactly as the equations are usually written; the sector block
    /// follows the complex-conjugated kernel.
    AsPrinted,
}

impl PhaseConvention {
    fn wave_vector(self, xi: f64) -> f64 {
        match self {
            PhaseConvention::KernelConsistent => -xi,
            PhaseConvention::AsPrinted => xi,
        }
    }
}

/// Density matrix over the full `2^N` space.
#[derive(Clone, Debug)]
pub struct DensityState {
    pub n_sites: usize,
    pub rho: Array2<C64>,
}

/// Deviations of a density matrix from the physical constraints.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct StateDiagnostics {
    pub hermiticity_error: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl DensityState {
    pub fn vacuum(n_sites: usize) -> Self {
        let d = 1 << n_sites;
        let mut rho = Array2::zeros((d, d));
        rho[[0, 0]] = ONE;
        DensityState { n_sites, rho }
    }

    /// `|psi><psi|` for a state given by its `M`-excitation amplitudes.
    pub fn from_sector_amplitudes(basis: &ExcitationBasis, amplitudes: &Array1<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::arg("amplitude vector does not match the basis"));
        }
        let n = basis.n_sites();
        let mut psi = Array1::<C64>::zeros(1 << n);
        for (p, &a) in amplitudes.iter().enumerate() {
            psi[basis.bitmask(p) as usize] = a;
        }
        let rho = Array2::from_shape_fn((psi.len(), psi.len()), |(i, j)| psi[i] * psi[j].conj());
        Ok(DensityState { n_sites: n, rho })
    }

    pub fn trace(&self) -> C64 {
        self.rho.diag().sum()
    }

    /// `Tr[rho sum_m n_m]`.
    pub fn total_excitation(&self) -> f64 {
        self.rho
            .diag()
            .iter()
            .enumerate()
            .map(|(s, z)| z.re * (s as u64).count_ones() as f64)
            .sum()
    }

    pub fn diagnostics(&self) -> Result<StateDiagnostics> {
        let rho = &self.rho;
        let hermiticity_error = rho
            .indexed_iter()
            .map(|((i, j), z)| (z - rho[[j, i]].conj()).norm())
            .fold(0.0, f64::max);
        let trace_error = (self.trace() - ONE).norm();
        let herm = (rho + &rho.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        let min_eigenvalue = herm
            .eigvalsh(UPLO::Lower)?
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Ok(StateDiagnostics {
            hermiticity_error,
            trace_error,
            min_eigenvalue,
        })
    }

    /// Errors unless Hermitian and unit-trace to 1e-10 and PSD to -1e-8.
    pub fn validate(&self) -> Result<StateDiagnostics> {
        let d = self.diagnostics()?;
        if d.hermiticity_error > 1e-10 || d.trace_error > 1e-10 || d.min_eigenvalue < -1e-8 {
            return Err(Error::numeric(format!(
                "density matrix left the physical set: hermiticity {:.2e}, trace {:.2e}, min eigenvalue {:.2e}",
                d.hermiticity_error, d.trace_error, d.min_eigenvalue
            )));
        }
        Ok(d)
    }
}

/// Vectorized generator acting on column-stacked density matrices.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    n_sites: usize,
    matrix: Array2<C64>,
}

fn lowering(n_sites: usize, site: usize) -> Vec<(usize, usize, C64)> {
    let bit = 1usize << (site - 1);
    (0..1usize << n_sites)
        .filter(|s| s & bit != 0)
        .map(|s| (s ^ bit, s, ONE))
        .collect()
}

fn raising(n_sites: usize, site: usize) -> Vec<(usize, usize, C64)> {
    lowering(n_sites, site)
        .into_iter()
        .map(|(r, c, v)| (c, r, v))
        .collect()
}

/// Sparse product of two sparse operators given as `(row, col, value)` lists.
fn sparse_mul(a: &[(usize, usize, C64)], b: &[(usize, usize, C64)]) -> Vec<(usize, usize, C64)> {
    let mut acc: HashMap<(usize, usize), C64> = HashMap::new();
    for &(i, k, x) in a {
        for &(k2, j, y) in b {
            if k == k2 {
                *acc.entry((i, j)).or_insert(ZERO) += x * y;
            }
        }
    }
    let mut out: Vec<_> = acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
    out.sort_unstable_by_key(|&(i, j, _)| (i, j));
    out
}

struct SuperOp {
    dim: usize,
    matrix: Array2<C64>,
}

impl SuperOp {
    /// `rho -> c A rho B` with column stacking: `vec(A rho B) = (B^T kron A) vec(rho)`.
    fn sandwich(&mut self, a: &[(usize, usize, C64)], b: &[(usize, usize, C64)], c: C64) {
        let d = self.dim;
        for &(i, k, x) in a {
            for &(l, j, y) in b {
                self.matrix[[i + j * d, k + l * d]] += c * x * y;
            }
        }
    }

    fn left(&mut self, a: &[(usize, usize, C64)], c: C64) {
        let ident: Vec<_> = (0..self.dim).map(|s| (s, s, ONE)).collect();
        self.sandwich(a, &ident, c);
    }

    fn right(&mut self, b: &[(usize, usize, C64)], c: C64) {
        let ident: Vec<_> = (0..self.dim).map(|s| (s, s, ONE)).collect();
        self.sandwich(&ident, b, c);
    }
}

/// Builds the generator with the default phase convention and size cap.
pub fn build_liouvillian(params: &CouplingParams) -> Result<Liouvillian> {
    Liouvillian::new(params, PhaseConvention::default(), DEFAULT_ORACLE_CAP)
}

impl Liouvillian {
    /// `params.n_excitations` is ignored; the full space is used.
    pub fn new(params: &CouplingParams, convention: PhaseConvention, cap: usize) -> Result<Self> {
        let n = params.n_sites;
        if n == 0 {
            return Err(Error::arg("need at least one site"));
        }
        if n > cap {
            return Err(Error::Capacity {
                what: format!("master-equation oracle for N = {n}"),
                requested: n as u128,
                limit: cap as u128,
            });
        }
        if !params.xi.is_finite() {
            return Err(Error::arg("xi must be finite"));
        }
        let (gamma_l, gamma_r) = params.rates()?;
        let k = convention.wave_vector(params.xi);
        let d = 1usize << n;
        let mut op = SuperOp {
            dim: d,
            matrix: Array2::zeros((d * d, d * d)),
        };
        let lower: Vec<_> = (1..=n).map(|m| lowering(n, m)).collect();
        let raise: Vec<_> = (1..=n).map(|m| raising(n, m)).collect();
        let i = C64::i();

        // coherent part: H = H_L + H_R
        let mut hamiltonian: Vec<(usize, usize, C64)> = Vec::new();
        for mu in 1..=n {
            for nu in 1..=n {
                if mu == nu {
                    continue;
                }
                let gamma = if mu < nu { gamma_l } else { gamma_r };
                let phase = C64::from_polar(1.0, k * mu.abs_diff(nu) as f64);
                let hop = sparse_mul(&raise[mu - 1], &lower[nu - 1]);
                let back = sparse_mul(&raise[nu - 1], &lower[mu - 1]);
                // -i gamma/2 (e^{ik|r|} s_mu^dag s_nu - e^{-ik|r|} s_nu^dag s_mu)
                let pre = -i * gamma / 2.0;
                hamiltonian.extend(hop.into_iter().map(|(r, c, v)| (r, c, pre * phase * v)));
                hamiltonian.extend(back.into_iter().map(|(r, c, v)| (r, c, -pre * phase.conj() * v)));
            }
        }
        op.left(&hamiltonian, -i);
        op.right(&hamiltonian, i);

        // dissipators
        for (gamma, sign) in [(gamma_l, -1.0), (gamma_r, 1.0)] {
            if gamma == 0.0 {
                continue;
            }
            for mu in 1..=n {
                for nu in 1..=n {
                    let phase = C64::from_polar(1.0, sign * k * (mu as f64 - nu as f64));
                    let c = -gamma / 2.0 * phase;
                    let a = sparse_mul(&raise[mu - 1], &lower[nu - 1]);
                    op.left(&a, c);
                    op.right(&a, c);
                    op.sandwich(&lower[nu - 1], &raise[mu - 1], -2.0 * c);
                }
            }
        }
        Ok(Liouvillian {
            n_sites: n,
            matrix: op.matrix,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    /// `L(rho)` as a matrix.
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let d = 1usize << self.n_sites;
        let v = self.matrix.dot(&vectorize(rho));
        unvectorize(&v, d)
    }

    /// Largest `|Tr L(E_ij)|` over the matrix units; zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = 1usize << self.n_sites;
        (0..d * d)
            .map(|col| {
                (0..d)
                    .map(|s| self.matrix[[s + s * d, col]])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }
}

fn vectorize(rho: &Array2<C64>) -> Array1<C64> {
    rho.t().iter().copied().collect()
}

fn unvectorize(v: &Array1<C64>, d: usize) -> Array2<C64> {
    Array2::from_shape_fn((d, d), |(i, j)| v[i + j * d])
}

/// Precomputed step exponentials for one generator and time grid.
pub struct DensityEvolver<'a> {
    liouvillian: &'a Liouvillian,
    times: Vec<f64>,
    steps: Vec<Option<usize>>,
    exponentials: Vec<Array2<C64>>,
}

impl<'a> DensityEvolver<'a> {
    pub fn new(liouvillian: &'a Liouvillian, times: &[f64]) -> Result<Self> {
        if times.iter().any(|t| !t.is_finite()) || times.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::arg("times must be finite and start at t >= 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::arg("times must be strictly increasing"));
        }
        let mut steps = Vec::with_capacity(times.len());
        let mut widths: Vec<f64> = Vec::new();
        let mut exponentials = Vec::new();
        let mut last = 0.0;
        for &t in times {
            let dt = t - last;
            last = t;
            if dt == 0.0 {
                steps.push(None);
                continue;
            }
            let idx = match widths.iter().position(|&h| (h - dt).abs() <= 1e-13 * dt) {
                Some(idx) => idx,
                None => {
                    widths.push(dt);
                    exponentials.push(expm(&(liouvillian.matrix() * C64::new(dt, 0.0)))?);
                    widths.len() - 1
                }
            };
            steps.push(Some(idx));
        }
        Ok(DensityEvolver {
            liouvillian,
            times: times.to_vec(),
            steps,
            exponentials,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `rho(t) = exp(L t) rho(0)` at every grid time, validated along the way.
    pub fn evolve(&self, rho0: &DensityState) -> Result<Vec<DensityState>> {
        let n = self.liouvillian.n_sites;
        if rho0.n_sites != n {
            return Err(Error::arg("initial state and generator disagree on N"));
        }
        rho0.validate()?;
        let d = 1usize << n;
        let mut v = vectorize(&rho0.rho);
        let mut out = Vec::with_capacity(self.times.len());
        for (&t, step) in self.times.iter().zip(&self.steps) {
            if let Some(idx) = step {
                v = self.exponentials[*idx].dot(&v);
            }
            let state = DensityState {
                n_sites: n,
                rho: unvectorize(&v, d),
            };
            state
                .validate()
                .map_err(|e| Error::numeric(format!("at t = {t}: {e}")))?;
            out.push(state);
        }
        Ok(out)
    }
}

pub fn evolve_density(liouvillian: &Liouvillian, rho0: &DensityState, times: &[f64]) -> Result<Vec<DensityState>> {
    DensityEvolver::new(liouvillian, times)?.evolve(rho0)
}

/// `<phi_p| rho |phi_q>` in basis order.
pub fn sector_block(rho: &DensityState, basis: &ExcitationBasis) -> Result<Array2<C64>> {
    if basis.n_sites() != rho.n_sites {
        return Err(Error::arg(format!(
            "basis has N = {} but the density matrix has N = {}",
            basis.n_sites(),
            rho.n_sites
        )));
    }
    let masks: Vec<usize> = (0..basis.dim()).map(|p| basis.bitmask(p) as usize).collect();
    Ok(Array2::from_shape_fn((masks.len(), masks.len()), |(p, q)| {
        rho.rho[[masks[p], masks[q]]]
    }))
}

/// Agreement between the master equation and the sector amplitudes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    pub params: CouplingParams,
    pub initial: InitialStateSpec,
    pub convention: PhaseConvention,
    pub n_times: usize,
    pub t_max: f64,
    /// `max_t max_pq |B_pq(t) - a_p(t) a_q(t)^*|`.
    pub max_block_deviation: f64,
    pub max_population_deviation: f64,
    pub max_g2_deviation: f64,
    pub max_g3_deviation: f64,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Runs both engines from `initial` and reports their largest disagreement.
pub fn oracle_compare(params: &CouplingParams, initial: &InitialStateSpec, times: &[f64]) -> Result<OracleReport> {
    let liouvillian = build_liouvillian(params)?;
    let evolver = DensityEvolver::new(&liouvillian, times)?;
    oracle_compare_with(&evolver, params, initial, PhaseConvention::default())
}

/// Same as [`oracle_compare`] with a prepared evolver, so one generator can
/// serve several excitation numbers and initial states.
pub fn oracle_compare_with(
    evolver: &DensityEvolver<'_>,
    params: &CouplingParams,
    initial: &InitialStateSpec,
    convention: PhaseConvention,
) -> Result<OracleReport> {
    let basis = enumerate_basis(params.n_sites, params.n_excitations)?;
    let kernel = build_kernel(&basis, params)?;
    let a0 = make_initial_state(&basis, initial)?;
    let traj = Propagator::new(&kernel)?.evolve(&a0, evolver.times())?;
    let rho0 = DensityState::from_sector_amplitudes(&basis, &a0)?;
    let states = evolver.evolve(&rho0)?;

    let mut report = OracleReport {
        params: params.clone(),
        initial: initial.clone(),
        convention,
        n_times: states.len(),
        t_max: evolver.times().last().copied().unwrap_or(0.0),
        max_block_deviation: 0.0,
        max_population_deviation: 0.0,
        max_g2_deviation: 0.0,
        max_g3_deviation: 0.0,
        max_trace_error: 0.0,
        max_hermiticity_error: 0.0,
        min_eigenvalue: f64::INFINITY,
        tolerance: ORACLE_TOLERANCE,
        pass: false,
    };
    for (k, state) in states.iter().enumerate() {
        let diag = state.diagnostics()?;
        report.max_trace_error = report.max_trace_error.max(diag.trace_error);
        report.max_hermiticity_error = report.max_hermiticity_error.max(diag.hermiticity_error);
        report.min_eigenvalue = report.min_eigenvalue.min(diag.min_eigenvalue);

        let block = sector_block(state, &basis)?;
        let a = traj.at(k);
        for ((p, q), b) in block.indexed_iter() {
            let dev = (b - a[p] * a[q].conj()).norm();
            report.max_block_deviation = report.max_block_deviation.max(dev);
        }

        let from_block: Vec<f64> = block.diag().iter().map(|z| z.re).collect();
        let mo_block = Moments::from_weights(&basis, &from_block)?;
        let mo_amp = Moments::from_weights(&basis, &traj.weights(k))?;
        for (x, y) in mo_block.populations.iter().zip(&mo_amp.populations) {
            report.max_population_deviation = report.max_population_deviation.max((x - y).abs());
        }
        for r in 1..params.n_sites {
            let dev = (mo_block.g2(r)? - mo_amp.g2(r)?).abs();
            report.max_g2_deviation = report.max_g2_deviation.max(dev);
        }
        if params.n_sites >= 3 {
            let dev = (mo_block.g3()?.g3 - mo_amp.g3()?.g3).abs();
            report.max_g3_deviation = report.max_g3_deviation.max(dev);
        }
    }
    report.pass = [
        report.max_block_deviation,
        report.max_population_deviation,
        report.max_g2_deviation,
        report.max_g3_deviation,
    ]
    .iter()
    .all(|&d| d < ORACLE_TOLERANCE);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::uniform_grid;
    use std::f64::consts::PI;

    fn random_hermitian(d: usize, seed: u64) -> Array2<C64> {
        // small LCG keeps the test free of RNG plumbing
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = Array2::from_shape_fn((d, d), |_| C64::new(next(), next()));
        m = &m + &m.t().mapv(|z| z.conj());
        m
    }

    #[test]
    fn single_atom_decays_at_total_rate() {
        let params = CouplingParams::new(1, 1, 0.4, 0.3);
        let l = build_liouvillian(&params).unwrap();
        let mut rho = Array2::zeros((2, 2));
        rho[[1, 1]] = ONE;
        let drho = l.apply(&rho);
        assert!((drho[[1, 1]] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((drho[[0, 0]] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn generator_preserves_trace() {
        for (n, d, xi) in [(2, 0.0, PI), (3, 0.5, 1.1), (4, -1.0, 0.3)] {
            let l = build_liouvillian(&CouplingParams::new(n, 1, xi, d)).unwrap();
            assert!(l.trace_defect() < 1e-12);
            let rho = random_hermitian(1 << n, 7 + n as u64);
            let tr: C64 = l.apply(&rho).diag().sum();
            assert!(tr.norm() < 1e-12);
        }
    }

    #[test]
    fn vacuum_is_stationary() {
        let l = build_liouvillian(&CouplingParams::new(3, 1, 1.0, 0.2)).unwrap();
        let states = evolve_density(&l, &DensityState::vacuum(3), &uniform_grid(5.0, 6)).unwrap();
        for s in states {
            assert!((&s.rho - &DensityState::vacuum(3).rho).iter().all(|z| z.norm() < 1e-13));
        }
    }

    #[test]
    fn time_zero_returns_initial_state() {
        let params = CouplingParams::new(3, 2, PI, 0.5);
        let basis = enumerate_basis(3, 2).unwrap();
        let a0 = make_initial_state(&basis, &InitialStateSpec::Product { sites: vec![1, 2] }).unwrap();
        let rho0 = DensityState::from_sector_amplitudes(&basis, &a0).unwrap();
        let l = build_liouvillian(&params).unwrap();
        let out = evolve_density(&l, &rho0, &[0.0]).unwrap();
        assert_eq!(out[0].rho, rho0.rho);
        let block = sector_block(&rho0, &basis).unwrap();
        for ((p, q), b) in block.indexed_iter() {
            assert_eq!(*b, a0[p] * a0[q].conj());
        }
        let vac = sector_block(&DensityState::vacuum(3), &basis).unwrap();
        assert!(vac.iter().all(|z| *z == ZERO));
        assert!(sector_block(&rho0, &enumerate_basis(4, 2).unwrap()).is_err());
    }

    #[test]
    fn excitation_drains_to_zero() {
        let params = CouplingParams::new(2, 1, PI, 0.3);
        let basis = enumerate_basis(2, 1).unwrap();
        let a0 = make_initial_state(&basis, &InitialStateSpec::Product { sites: vec![1] }).unwrap();
        let rho0 = DensityState::from_sector_amplitudes(&basis, &a0).unwrap();
        let l = build_liouvillian(&params).unwrap();
        // slowest kernel mode decays at 2 (1/2 - sqrt(gamma_L gamma_R)) ~ 0.046
        let states = evolve_density(&l, &rho0, &uniform_grid(1000.0, 101)).unwrap();
        let totals: Vec<f64> = states.iter().map(DensityState::total_excitation).collect();
        assert!(totals.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(totals.last().unwrap().abs() < 1e-6);
    }

    #[test]
    fn two_site_reciprocal_modes() {
        // kernel spectrum {0, -1}: symmetric pair dark, antisymmetric amplitude decays
        // at Gamma, so its population decays at 2 Gamma
        let params = CouplingParams::new(2, 1, PI, 0.0);
        let basis = enumerate_basis(2, 1).unwrap();
        let l = build_liouvillian(&params).unwrap();
        let times = uniform_grid(4.0, 5);
        let h = 0.5f64.sqrt();
        for (sign, rate) in [(1.0, 0.0), (-1.0, 2.0)] {
            let a0 = Array1::from(vec![C64::new(h, 0.0), C64::new(sign * h, 0.0)]);
            let rho0 = DensityState::from_sector_amplitudes(&basis, &a0).unwrap();
            let states = evolve_density(&l, &rho0, &times).unwrap();
            for (s, &t) in states.iter().zip(&times) {
                let pop: f64 = sector_block(s, &basis).unwrap().diag().iter().map(|z| z.re).sum();
                assert!((pop - (-rate * t).exp()).abs() < 1e-10, "sign {sign} t {t}");
            }
        }
    }

    #[test]
    fn sector_block_matches_kernel() {
        let params = CouplingParams::new(3, 2, PI, 0.5);
        let times = uniform_grid(1.0, 3);
        let r = oracle_compare(&params, &InitialStateSpec::Product { sites: vec![1, 2] }, &times).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.max_block_deviation < 1e-8);
    }

    #[test]
    fn printed_phase_gives_conjugate_block() {
        let params = CouplingParams::new(3, 2, PI / 2.0, 0.5);
        let times = uniform_grid(3.0, 4);
        let spec = InitialStateSpec::Product { sites: vec![1, 2] };
        let l = Liouvillian::new(&params, PhaseConvention::AsPrinted, DEFAULT_ORACLE_CAP).unwrap();
        let ev = DensityEvolver::new(&l, &times).unwrap();
        let literal = oracle_compare_with(&ev, &params, &spec, PhaseConvention::AsPrinted).unwrap();
        assert!(!literal.pass, "phase conventions should disagree at xi = pi/2");
        // populations do not see the phase convention
        assert!(literal.max_population_deviation < 1e-8);

        let basis = enumerate_basis(3, 2).unwrap();
        let kernel = build_kernel(&basis, &params).unwrap();
        let a0 = make_initial_state(&basis, &spec).unwrap();
        let traj = Propagator::new(&kernel).unwrap().evolve(&a0, &times).unwrap();
        let rho0 = DensityState::from_sector_amplitudes(&basis, &a0).unwrap();
        for (k, s) in ev.evolve(&rho0).unwrap().iter().enumerate() {
            let block = sector_block(s, &basis).unwrap();
            let a = traj.at(k);
            for ((p, q), b) in block.indexed_iter() {
                assert!((b - (a[p] * a[q].conj()).conj()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn capacity_limit() {
        assert!(matches!(
            build_liouvillian(&CouplingParams::new(7, 1, 1.0, 0.0)),
            Err(Error::Capacity { .. })
        ));
    }
}
