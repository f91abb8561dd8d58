//! Chiral rates and the dense interaction kernel `V` of the amplitude
//! equations `da/dt = V a`.
//!
//! For a hop that raises site `s1` and lowers site `s2` the kernel entry is
//! `-gamma_L * exp(-i xi |s1 - s2|)` when the excitation moves left
//! (`s1 < s2`) and `-gamma_R * exp(-i xi |s1 - s2|)` when it moves right.
//! Every diagonal entry is `-M Gamma / 2`.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use ndarray_linalg::{Cholesky, EigValsh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{ExcitationBasis, ExcitationTuple};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_atomic};

/// Default upper bound on the dense kernel dimension.
pub const DEFAULT_KERNEL_CAP: usize = 20_000;

/// Kernels up to this dimension get the `V + V^dag <= 0` check at build time.
pub const DISSIPATION_CHECK_MAX_DIM: usize = 2_500;

/// Physical parameters of the chain. Times are in units of `1 / total_rate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub n_sites: usize,
    pub n_excitations: usize,
    /// Phase per lattice spacing, `k_s * d`.
    pub xi: f64,
    /// `(gamma_R - gamma_L) / (gamma_R + gamma_L)`.
    pub directionality: f64,
    pub total_rate: f64,
}

impl CouplingParams {
    pub fn new(n_sites: usize, n_excitations: usize, xi: f64, directionality: f64) -> Self {
        CouplingParams {
            n_sites,
            n_excitations,
            xi,
            directionality,
            total_rate: 1.0,
        }
    }

    /// `(gamma_L, gamma_R)`.
    pub fn rates(&self) -> Result<(f64, f64)> {
        rates_from_directionality(self.directionality, self.total_rate)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.xi.is_finite() {
            return Err(Error::arg(format!("xi must be finite, got {}", self.xi)));
        }
        if self.n_excitations == 0 || self.n_excitations > self.n_sites {
            return Err(Error::arg(format!(
                "need 1 <= M <= N, got N={}, M={}",
                self.n_sites, self.n_excitations
            )));
        }
        self.rates().map(|_| ())
    }
}

/// Splits the total rate into left and right decay rates.
pub fn rates_from_directionality(directionality: f64, total_rate: f64) -> Result<(f64, f64)> {
    if !(directionality.abs() <= 1.0) {
        return Err(Error::arg(format!(
            "directionality must lie in [-1, 1], got {directionality}"
        )));
    }
    if !(total_rate > 0.0) || !total_rate.is_finite() {
        return Err(Error::arg(format!(
            "total rate must be positive, got {total_rate}"
        )));
    }
    let gamma_r = 0.5 * total_rate * (1.0 + directionality);
    let gamma_l = 0.5 * total_rate * (1.0 - directionality);
    Ok((gamma_l, gamma_r))
}

/// Kernel entry for the hop `sigma_{raised}^dag sigma_{lowered}` (sites 1-based).
pub fn hop_amplitude(raised: usize, lowered: usize, xi: f64, gamma_l: f64, gamma_r: f64) -> C64 {
    let distance = raised.abs_diff(lowered) as f64;
    let gamma = if raised < lowered { gamma_l } else { gamma_r };
    -gamma * C64::from_polar(1.0, -xi * distance)
}

/// The same entry written through the symmetric/antisymmetric parts
/// `F = (gamma_R e^{i xi d} + gamma_L e^{-i xi d}) / 2`,
/// `G = -i (gamma_R e^{i xi d} - gamma_L e^{-i xi d}) / 2`:
/// `-F + iG` above the diagonal and `-F* + iG*` below it.
pub fn hop_amplitude_fg(raised: usize, lowered: usize, xi: f64, gamma_l: f64, gamma_r: f64) -> C64 {
    let (mu, nu) = (raised.min(lowered), raised.max(lowered));
    let d = (nu - mu) as f64;
    let e = C64::from_polar(1.0, xi * d);
    let f = (gamma_r * e + gamma_l * e.conj()) / 2.0;
    let g = -C64::i() * (gamma_r * e - gamma_l * e.conj()) / 2.0;
    if raised < lowered {
        -f + C64::i() * g
    } else {
        -f.conj() + C64::i() * g.conj()
    }
}

/// Dense non-Hermitian kernel; rows are destination states, columns sources.
#[derive(Clone, Debug)]
pub struct InteractionKernel {
    params: CouplingParams,
    matrix: Array2<C64>,
    /// Nonzero entries per row, `(column, value)`.
    rows: Vec<Vec<(usize, C64)>>,
}

/// Builds the kernel with the default dimension cap.
pub fn build_kernel(basis: &ExcitationBasis, params: &CouplingParams) -> Result<InteractionKernel> {
    InteractionKernel::with_cap(basis, params, DEFAULT_KERNEL_CAP)
}

impl InteractionKernel {
    pub fn with_cap(basis: &ExcitationBasis, params: &CouplingParams, cap: usize) -> Result<Self> {
        params.validate()?;
        if basis.n_sites() != params.n_sites || basis.n_excitations() != params.n_excitations {
            return Err(Error::arg(format!(
                "basis is (N={}, M={}) but parameters are (N={}, M={})",
                basis.n_sites(),
                basis.n_excitations(),
                params.n_sites,
                params.n_excitations
            )));
        }
        let dim = basis.dim();
        if dim > cap {
            return Err(Error::Capacity {
                what: format!("dense kernel for C({},{})", params.n_sites, params.n_excitations),
                requested: dim as u128,
                limit: cap as u128,
            });
        }
        let (gamma_l, gamma_r) = params.rates()?;
        let diag = C64::new(-(params.n_excitations as f64) * params.total_rate / 2.0, 0.0);

        let mut matrix = Array2::<C64>::zeros((dim, dim));
        let mut rows: Vec<Vec<(usize, C64)>> = vec![vec![(0, diag)]; dim];
        for (p, row) in rows.iter_mut().enumerate() {
            row[0].0 = p;
            matrix[[p, p]] = diag;
        }
        for (src, state) in basis.states().iter().enumerate() {
            let sites = state.sites();
            for (slot, &lowered) in sites.iter().enumerate() {
                for raised in (1..=params.n_sites).filter(|s| !state.contains(*s)) {
                    let mut dest_sites = sites.to_vec();
                    dest_sites[slot] = raised;
                    dest_sites.sort_unstable();
                    let dest = basis.index_of(&ExcitationTuple::from_sorted_unchecked(dest_sites))?;
                    let value = hop_amplitude(raised, lowered, params.xi, gamma_l, gamma_r);
                    if value != C64::new(0.0, 0.0) {
                        matrix[[dest, src]] = value;
                        rows[dest].push((src, value));
                    }
                }
            }
        }
        for row in &mut rows {
            row.sort_unstable_by_key(|&(c, _)| c);
        }
        if let Some(bad) = matrix.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::numeric(format!("non-finite kernel entry {bad}")));
        }
        let kernel = InteractionKernel {
            params: params.clone(),
            matrix,
            rows,
        };
        if dim <= DISSIPATION_CHECK_MAX_DIM && !kernel.is_dissipative(1e-9 * params.total_rate.max(1.0)) {
            let top = kernel.max_dissipative_eigenvalue()?;
            return Err(Error::numeric(format!(
                "V + V^dag has a positive eigenvalue {top:e}; norm would grow"
            )));
        }
        Ok(kernel)
    }

    pub fn params(&self) -> &CouplingParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn get(&self, dest: usize, src: usize) -> C64 {
        self.matrix[[dest, src]]
    }

    /// Sparse rows `(column, value)`, sorted by column.
    pub fn sparse_rows(&self) -> &[Vec<(usize, C64)>] {
        &self.rows
    }

    /// `out = V x` using the sparse rows.
    pub fn apply_sparse(&self, x: &[C64], out: &mut [C64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(c, v)| v * x[c]).sum();
        }
    }

    /// Whether `V + V^dag <= slack`, decided by a Cholesky factorization of
    /// `slack - (V + V^dag)`, which exists exactly when that matrix is positive definite.
    pub fn is_dissipative(&self, slack: f64) -> bool {
        let mut shifted = -(&self.matrix + &self.matrix.t().mapv(|z| z.conj()));
        shifted.diag_mut().mapv_inplace(|z| z + slack);
        shifted.cholesky(UPLO::Lower).is_ok()
    }

    /// Largest eigenvalue of the Hermitian part `V + V^dag`.
    pub fn max_dissipative_eigenvalue(&self) -> Result<f64> {
        let herm = &self.matrix + &self.matrix.t().mapv(|z| z.conj());
        let eig = herm.eigvalsh(UPLO::Lower)?;
        Ok(eig.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Writes the nonzero entries as `row,col,re,im` (0-based indices).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "row,col,re,im").expect("write to Vec");
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                writeln!(buf, "{r},{c},{},{}", fmt_f64(v.re), fmt_f64(v.im)).expect("write to Vec");
            }
        }
        write_atomic(path, &buf)
    }
}
