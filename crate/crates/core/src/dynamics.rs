//! Initial states and amplitude propagation `a(t) = exp(V t) a(0)`.
//!
//! The default propagator diagonalizes the kernel once and reuses the
//! eigendecomposition for every output time. When the eigenvector matrix is
//! ill-conditioned (degenerate or defective spectra, e.g. the unidirectional
//! limit) it falls back to stepping with `exp(V dt)` from a scaling-and-squaring
//! Pade exponential. No renormalization is applied: the conditional no-jump
//! state decays.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use ndarray_linalg::{Eig, Inverse};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{ExcitationBasis, ExcitationTuple};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_atomic, write_json};
use crate::kernel::{CouplingParams, InteractionKernel};
use crate::linalg::{dormand_prince, expm, max_abs, norm1, StepControl};

/// Eigenvector condition number above which the spectral route is abandoned.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e8;

/// Tolerance on `||a0|| = 1`.
pub const NORM_TOLERANCE: f64 = 1e-12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialStateSpec {
    /// One bare state, e.g. `sigma_j^dag sigma_k^dag |0>`.
    Product { sites: Vec<usize> },
    /// `(cos phi s_j + sin phi s_{j+1}) (cos theta s_{j+2} + sin theta s_{j+3}) |0>`, two excitations.
    ThetaPhi { j: usize, phi: f64, theta: f64 },
    /// Equal superposition of the six pairs inside sites `j..=j+3`.
    SixFold { j: usize },
    /// Arbitrary amplitudes in basis order; normalized on construction.
    Custom { amplitudes: Vec<C64> },
}

impl InitialStateSpec {
    /// Checks the spec against `(N, M)` without building the vector.
    pub fn validate(&self, n_sites: usize, n_excitations: usize) -> Result<()> {
        match self {
            InitialStateSpec::Product { sites } => {
                ExcitationTuple::new(sites.clone(), n_sites)?.validate(n_sites, n_excitations)
            }
            InitialStateSpec::ThetaPhi { j, phi, theta } => {
                if !phi.is_finite() || !theta.is_finite() {
                    return Err(Error::arg("theta and phi must be finite"));
                }
                check_four_site_block(*j, n_sites, n_excitations)
            }
            InitialStateSpec::SixFold { j } => check_four_site_block(*j, n_sites, n_excitations),
            InitialStateSpec::Custom { amplitudes } => {
                let expected = crate::basis::binomial(n_sites, n_excitations);
                if amplitudes.len() as u128 != expected {
                    return Err(Error::arg(format!(
                        "custom state has {} amplitudes, basis has {expected}",
                        amplitudes.len()
                    )));
                }
                let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if !(norm > 0.0) || !norm.is_finite() {
                    return Err(Error::arg("custom state has zero or non-finite norm"));
                }
                Ok(())
            }
        }
    }

    /// Angles wrapped into `[0, 2 pi)`; other variants are returned unchanged.
    pub fn wrapped(&self) -> Self {
        match self {
            InitialStateSpec::ThetaPhi { j, phi, theta } => InitialStateSpec::ThetaPhi {
                j: *j,
                phi: phi.rem_euclid(TAU),
                theta: theta.rem_euclid(TAU),
            },
            other => other.clone(),
        }
    }

    /// The same state under the site reflection `m -> N + 1 - m`.
    pub fn reflected(&self, basis: &ExcitationBasis) -> Result<Self> {
        let a = make_initial_state(basis, self)?;
        let perm = basis.reflection_permutation();
        let mut out = vec![ZERO; a.len()];
        for (p, &z) in a.iter().enumerate() {
            out[perm[p]] = z;
        }
        Ok(InitialStateSpec::Custom { amplitudes: out })
    }
}

fn check_four_site_block(j: usize, n_sites: usize, n_excitations: usize) -> Result<()> {
    if n_excitations != 2 {
        return Err(Error::arg(format!(
            "four-site entangled states need M = 2, got M = {n_excitations}"
        )));
    }
    if j == 0 || j + 3 > n_sites {
        return Err(Error::arg(format!(
            "four-site block starting at {j} does not fit in 1..={n_sites}"
        )));
    }
    Ok(())
}

/// Builds the normalized amplitude vector for `spec` in `basis` order.
pub fn make_initial_state(basis: &ExcitationBasis, spec: &InitialStateSpec) -> Result<Array1<C64>> {
    spec.validate(basis.n_sites(), basis.n_excitations())?;
    let mut a = Array1::<C64>::zeros(basis.dim());
    match spec.wrapped() {
        InitialStateSpec::Product { sites } => {
            a[basis.index_of_sites(&sites)?] = C64::new(1.0, 0.0);
        }
        InitialStateSpec::ThetaPhi { j, phi, theta } => {
            let (sp, cp) = phi.sin_cos();
            let (st, ct) = theta.sin_cos();
            for (sites, amp) in [
                ([j, j + 2], cp * ct),
                ([j, j + 3], cp * st),
                ([j + 1, j + 2], sp * ct),
                ([j + 1, j + 3], sp * st),
            ] {
                a[basis.index_of_sites(&sites)?] = C64::new(amp, 0.0);
            }
        }
        InitialStateSpec::SixFold { j } => {
            let amp = C64::new(1.0 / 6f64.sqrt(), 0.0);
            for x in j..=j + 3 {
                for y in x + 1..=j + 3 {
                    a[basis.index_of_sites(&[x, y])?] = amp;
                }
            }
        }
        InitialStateSpec::Custom { amplitudes } => {
            let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            a = Array1::from(amplitudes).mapv(|z| z / norm);
        }
    }
    Ok(a)
}

pub fn vector_norm(a: ArrayView1<'_, C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `n_points` uniform times on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, n_points: usize) -> Vec<f64> {
    match n_points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PropagationMethod {
    /// Eigendecomposition with its eigenvector condition number (1-norm).
    Spectral { condition: f64 },
    /// Stepping with `exp(V dt)`.
    Expm,
}

#[derive(Clone, Debug)]
enum Route {
    Spectral {
        eigvals: Array1<C64>,
        vectors: Array2<C64>,
        inverse: Array2<C64>,
    },
    Expm { generator: Array2<C64> },
}

/// Reusable propagator for one kernel.
#[derive(Clone, Debug)]
pub struct Propagator {
    dim: usize,
    route: Route,
    method: PropagationMethod,
    warnings: Vec<String>,
}

impl Propagator {
    pub fn new(kernel: &InteractionKernel) -> Result<Self> {
        Self::with_condition_limit(kernel, DEFAULT_CONDITION_LIMIT)
    }

    pub fn with_condition_limit(kernel: &InteractionKernel, limit: f64) -> Result<Self> {
        let v = kernel.matrix();
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::numeric("kernel has non-finite entries"));
        }
        let dim = kernel.dim();
        let mut warnings = Vec::new();
        match spectral_route(v, limit) {
            Ok((route, condition)) => Ok(Propagator {
                dim,
                route,
                method: PropagationMethod::Spectral { condition },
                warnings,
            }),
            Err(reason) => {
                log::warn!("falling back to stepped matrix exponential: {reason}");
                warnings.push(format!("spectral propagator rejected ({reason}); using stepped expm"));
                Ok(Propagator::expm_only(kernel, warnings))
            }
        }
    }

    /// Always steps with `exp(V dt)`.
    pub fn expm_only(kernel: &InteractionKernel, warnings: Vec<String>) -> Self {
        Propagator {
            dim: kernel.dim(),
            route: Route::Expm {
                generator: kernel.matrix().clone(),
            },
            method: PropagationMethod::Expm,
            warnings,
        }
    }

    pub fn method(&self) -> &PropagationMethod {
        &self.method
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Propagates a normalized initial vector.
    pub fn evolve(&self, a0: &Array1<C64>, times: &[f64]) -> Result<AmplitudeTrajectory> {
        let norm = vector_norm(a0.view());
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::arg(format!("initial state has norm {norm}, expected 1")));
        }
        self.evolve_raw(a0, times)
    }

    /// Amplitudes of the selected basis states only (`times x indices`). The
    /// spectral route evaluates just those rows of the eigenvector matrix, which
    /// is much cheaper than [`Propagator::evolve`] when few components are needed.
    pub fn evolve_components(&self, a0: &Array1<C64>, times: &[f64], indices: &[usize]) -> Result<Array2<C64>> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.dim) {
            return Err(Error::arg(format!("component {bad} outside dimension {}", self.dim)));
        }
        match &self.route {
            Route::Spectral {
                eigvals,
                vectors,
                inverse,
            } => {
                if a0.len() != self.dim {
                    return Err(Error::arg(format!(
                        "state has length {}, kernel dimension is {}",
                        a0.len(),
                        self.dim
                    )));
                }
                check_times(times)?;
                let coeffs = inverse.dot(a0);
                let mut phases = Array2::<C64>::zeros((self.dim, times.len()));
                for (k, &t) in times.iter().enumerate() {
                    for (i, (&lambda, &c)) in eigvals.iter().zip(coeffs.iter()).enumerate() {
                        phases[[i, k]] = (lambda * t).exp() * c;
                    }
                }
                let rows = vectors.select(Axis(0), indices);
                let mut out = rows.dot(&phases).reversed_axes();
                for (k, &t) in times.iter().enumerate() {
                    if t == 0.0 {
                        for (col, &i) in indices.iter().enumerate() {
                            out[[k, col]] = a0[i];
                        }
                    }
                }
                if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::numeric("propagation produced non-finite amplitudes"));
                }
                Ok(out)
            }
            Route::Expm { .. } => {
                let traj = self.evolve_raw(a0, times)?;
                Ok(traj.amplitudes.select(Axis(1), indices))
            }
        }
    }

    /// Propagates any vector, without the normalization precondition.
    pub fn evolve_raw(&self, a0: &Array1<C64>, times: &[f64]) -> Result<AmplitudeTrajectory> {
        if a0.len() != self.dim {
            return Err(Error::arg(format!(
                "state has length {}, kernel dimension is {}",
                a0.len(),
                self.dim
            )));
        }
        check_times(times)?;
        let mut amplitudes = Array2::<C64>::zeros((times.len(), self.dim));
        match &self.route {
            Route::Spectral {
                eigvals,
                vectors,
                inverse,
            } => {
                let coeffs = inverse.dot(a0);
                let mut phases = Array2::<C64>::zeros((self.dim, times.len()));
                for (k, &t) in times.iter().enumerate() {
                    for (i, (&lambda, &c)) in eigvals.iter().zip(coeffs.iter()).enumerate() {
                        phases[[i, k]] = (lambda * t).exp() * c;
                    }
                }
                amplitudes.assign(&vectors.dot(&phases).t());
            }
            Route::Expm { generator } => {
                let mut current = a0.clone();
                let mut last_t = 0.0;
                let mut cached: Option<(f64, Array2<C64>)> = None;
                for (k, &t) in times.iter().enumerate() {
                    let dt = t - last_t;
                    if dt > 0.0 {
                        let reuse = matches!(&cached, Some((h, _)) if (h - dt).abs() <= 1e-13 * dt);
                        if !reuse {
                            cached = Some((dt, expm(&(generator * C64::new(dt, 0.0)))?));
                        }
                        let step = &cached.as_ref().expect("step cached").1;
                        current = step.dot(&current);
                    }
                    amplitudes.row_mut(k).assign(&current);
                    last_t = t;
                }
            }
        }
        // exp(V * 0) is the identity; keep t = 0 bit-exact
        for (k, &t) in times.iter().enumerate() {
            if t == 0.0 {
                amplitudes.row_mut(k).assign(a0);
            }
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::numeric("propagation produced non-finite amplitudes"));
        }
        let norms = amplitudes
            .axis_iter(Axis(0))
            .map(vector_norm)
            .collect();
        Ok(AmplitudeTrajectory {
            times: times.to_vec(),
            amplitudes,
            norms,
            method: self.method.clone(),
            warnings: self.warnings.clone(),
        })
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::arg("times must be finite"));
    }
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::arg("times must start at t >= 0"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("times must be strictly increasing"));
    }
    Ok(())
}

fn spectral_route(v: &Array2<C64>, limit: f64) -> std::result::Result<(Route, f64), String> {
    let (eigvals, vectors) = v.eig().map_err(|e| format!("eigensolver failed: {e}"))?;
    let inverse = vectors
        .inv()
        .map_err(|e| format!("eigenvector matrix is singular: {e}"))?;
    let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
    if !(eigvals.iter().all(finite) && vectors.iter().all(finite) && inverse.iter().all(finite)) {
        return Err("eigendecomposition produced non-finite values (defective kernel)".to_owned());
    }
    let condition = norm1(&vectors) * norm1(&inverse);
    if !condition.is_finite() || condition > limit {
        return Err(format!("eigenvector condition number {condition:.3e} exceeds {limit:.1e}"));
    }
    // reconstruction check V = W diag(lambda) W^-1
    let mut scaled = vectors.clone();
    for (mut col, &lambda) in scaled.axis_iter_mut(Axis(1)).zip(eigvals.iter()) {
        col.mapv_inplace(|z| z * lambda);
    }
    let rebuilt = scaled.dot(&inverse);
    let residual = max_abs(&(&rebuilt - v));
    let scale = max_abs(v).max(1.0);
    if residual > 1e-10 * scale {
        return Err(format!("eigendecomposition residual {residual:.3e} too large"));
    }
    Ok((
        Route::Spectral {
            eigvals,
            vectors,
            inverse,
        },
        condition,
    ))
}

/// Propagates with a freshly built [`Propagator`].
pub fn propagate(kernel: &InteractionKernel, a0: &Array1<C64>, times: &[f64]) -> Result<AmplitudeTrajectory> {
    Propagator::new(kernel)?.evolve(a0, times)
}

/// Amplitudes `a_p(t)` on a time grid; row `k` of `amplitudes` is `a(times[k])`.
#[derive(Clone, Debug)]
pub struct AmplitudeTrajectory {
    pub times: Vec<f64>,
    pub amplitudes: Array2<C64>,
    pub norms: Vec<f64>,
    pub method: PropagationMethod,
    pub warnings: Vec<String>,
}

impl AmplitudeTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.ncols()
    }

    pub fn at(&self, k: usize) -> ArrayView1<'_, C64> {
        self.amplitudes.row(k)
    }

    /// Squared moduli `|a_p(t_k)|^2` for one time.
    pub fn weights(&self, k: usize) -> Vec<f64> {
        self.amplitudes.row(k).iter().map(|z| z.norm_sqr()).collect()
    }

    /// Largest increase of `||a||` between consecutive samples (0 if monotone).
    pub fn max_norm_increase(&self) -> f64 {
        self.norms
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Writes `t,p,re,im` rows for `|a_p| > 1e-14`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "t,p,re,im").expect("write to Vec");
        for (k, &t) in self.times.iter().enumerate() {
            for (p, z) in self.amplitudes.row(k).iter().enumerate() {
                if z.norm() > 1e-14 {
                    writeln!(buf, "{},{p},{},{}", fmt_f64(t), fmt_f64(z.re), fmt_f64(z.im))
                        .expect("write to Vec");
                }
            }
        }
        write_atomic(path, &buf)
    }

    pub fn metadata(&self, params: &CouplingParams, residual: Option<f64>, wall_seconds: f64) -> TrajectoryMetadata {
        TrajectoryMetadata {
            params: params.clone(),
            method: self.method.clone(),
            residual,
            wall_seconds,
            n_times: self.len(),
            dim: self.dim(),
            warnings: self.warnings.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryMetadata {
    pub params: CouplingParams,
    pub method: PropagationMethod,
    pub residual: Option<f64>,
    pub wall_seconds: f64,
    pub n_times: usize,
    pub dim: usize,
    pub warnings: Vec<String>,
}

impl TrajectoryMetadata {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Largest deviation between the stored trajectory and an independent
/// adaptive Dormand-Prince integration over the sparse kernel rows.
pub fn propagation_residual(kernel: &InteractionKernel, trajectory: &AmplitudeTrajectory) -> Result<f64> {
    if trajectory.is_empty() {
        return Ok(0.0);
    }
    if trajectory.dim() != kernel.dim() {
        return Err(Error::arg("trajectory and kernel dimensions differ"));
    }
    let start = trajectory.times[0];
    let a0: Vec<C64> = trajectory.at(0).to_vec();
    let offsets: Vec<f64> = trajectory.times.iter().map(|t| t - start).collect();
    let reference = dormand_prince(
        |y, dy| kernel.apply_sparse(y, dy),
        &a0,
        &offsets,
        StepControl {
            rtol: 1e-11,
            atol: 1e-13,
            ..StepControl::default()
        },
    )?;
    Ok(reference
        .iter()
        .enumerate()
        .map(|(k, r)| {
            r.iter()
                .zip(trajectory.at(k).iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::kernel::build_kernel;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn setup(n: usize, m: usize, xi: f64, d: f64) -> (ExcitationBasis, InteractionKernel) {
        let basis = enumerate_basis(n, m).unwrap();
        let kernel = build_kernel(&basis, &CouplingParams::new(n, m, xi, d)).unwrap();
        (basis, kernel)
    }

    #[test]
    fn selected_components_match_full_evolution() {
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        for d in [0.3, 1.0] {
            let (basis, kernel) = setup(9, 2, 0.9 * PI, d);
            let a0 = make_initial_state(&basis, &InitialStateSpec::Product { sites: vec![4, 5] }).unwrap();
            let prop = Propagator::new(&kernel).unwrap();
            let full = prop.evolve(&a0, &times).unwrap();
            let rows = [0, 7, basis.dim() - 1];
            let part = prop.evolve_components(&a0, &times, &rows).unwrap();
            for k in 0..times.len() {
                for (c, &i) in rows.iter().enumerate() {
                    assert!((part[[k, c]] - full.amplitudes[[k, i]]).norm() < 1e-12);
                }
            }
            assert!(prop.evolve_components(&a0, &times, &[basis.dim()]).is_err());
        }
    }

    #[test]
    fn product_state_is_a_unit_vector() {
        let basis = enumerate_basis(40, 2).unwrap();
        let a = make_initial_state(&basis, &InitialStateSpec::Product { sites: vec![20, 21] }).unwrap();
        let idx = basis.index_of_sites(&[20, 21]).unwrap();
        for (p, z) in a.iter().enumerate() {
            assert_eq!(*z, C64::new(if p == idx { 1.0 } else { 0.0 }, 0.0));
        }
    }

    #[test]
    fn theta_phi_components() {
        let basis = enumerate_basis(10, 2).unwrap();
        let j = 3;
        let a = make_initial_state(&basis, &InitialStateSpec::ThetaPhi { j, phi: FRAC_PI_4, theta: 0.0 }).unwrap();
        let h = 0.5f64.sqrt();
        assert!((a[basis.index_of_sites(&[3, 5]).unwrap()].re - h).abs() < 1e-15);
        assert!((a[basis.index_of_sites(&[4, 5]).unwrap()].re - h).abs() < 1e-15);
        assert_eq!(a.iter().filter(|z| z.norm() > 0.0).count(), 2);

        let (phi, theta) = (0.3, 1.1);
        let a = make_initial_state(&basis, &InitialStateSpec::ThetaPhi { j, phi, theta }).unwrap();
        let want = [
            ([3, 5], phi.cos() * theta.cos()),
            ([3, 6], phi.cos() * theta.sin()),
            ([4, 5], phi.sin() * theta.cos()),
            ([4, 6], phi.sin() * theta.sin()),
        ];
        for (sites, amp) in want {
            assert!((a[basis.index_of_sites(&sites).unwrap()].re - amp).abs() < 1e-15);
        }
        assert!((vector_norm(a.view()) - 1.0).abs() < 1e-14);
        // wrapped angles give the same vector
        let b = make_initial_state(&basis, &InitialStateSpec::ThetaPhi { j, phi: phi + TAU, theta: theta - 2.0 * TAU }).unwrap();
        assert!((&a - &b).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn six_fold_components() {
        let basis = enumerate_basis(8, 2).unwrap();
        let a = make_initial_state(&basis, &InitialStateSpec::SixFold { j: 5 }).unwrap();
        let amp = 1.0 / 6f64.sqrt();
        let nonzero: Vec<_> = a.iter().enumerate().filter(|(_, z)| z.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 6);
        for (p, z) in nonzero {
            let s = basis.state(p).sites();
            assert!(s[0] >= 5 && s[1] <= 8);
            assert!((z.re - amp).abs() < 1e-15);
        }
    }

    #[test]
    fn initial_state_errors() {
        let basis = enumerate_basis(6, 2).unwrap();
        assert!(make_initial_state(&basis, &InitialStateSpec::SixFold { j: 4 }).is_err());
        assert!(make_initial_state(&basis, &InitialStateSpec::Product { sites: vec![2, 7] }).is_err());
        assert!(make_initial_state(&basis, &InitialStateSpec::Product { sites: vec![2] }).is_err());
        let b3 = enumerate_basis(6, 3).unwrap();
        assert!(make_initial_state(&b3, &InitialStateSpec::ThetaPhi { j: 1, phi: 0.0, theta: 0.0 }).is_err());
        assert!(make_initial_state(&basis, &InitialStateSpec::Custom { amplitudes: vec![C64::new(1.0, 0.0)] }).is_err());
        let zero = vec![ZERO; basis.dim()];
        assert!(make_initial_state(&basis, &InitialStateSpec::Custom { amplitudes: zero }).is_err());
        let mut raw = vec![ZERO; basis.dim()];
        raw[2] = C64::new(3.0, 4.0);
        let a = make_initial_state(&basis, &InitialStateSpec::Custom { amplitudes: raw }).unwrap();
        assert!((vector_norm(a.view()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn time_zero_is_identity() {
        let (basis, kernel) = setup(5, 2, 1.3, 0.4);
        let a0 = make_initial_state(&basis, &InitialStateSpec::Product { sites: vec![2, 4] }).unwrap();
        let traj = propagate(&kernel, &a0, &[0.0]).unwrap();
        assert_eq!(traj.at(0).to_owned(), a0);
        let p = Propagator::expm_only(&kernel, vec![]);
        assert_eq!(p.evolve(&a0, &[0.0]).unwrap().at(0).to_owned(), a0);
    }

    #[test]
    fn unidirectional_pair_closed_form() {
        let (_, kernel) = setup(2, 1, PI, 1.0);
        let prop = Propagator::new(&kernel).unwrap();
        // defective kernel: the spectral route must be rejected
        assert_eq!(prop.method(), &PropagationMethod::Expm);
        assert!(!prop.warnings().is_empty());
        let times = uniform_grid(10.0, 101);
        let traj = prop.evolve(&Array1::from(vec![C64::new(1.0, 0.0), ZERO]), &times).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let decay = (-t / 2.0).exp();
            assert!((traj.at(k)[0] - C64::new(decay, 0.0)).norm() < 1e-12);
            assert!((traj.at(k)[1] - C64::new(t * decay, 0.0)).norm() < 1e-12);
        }
        let at_one = prop.evolve(&Array1::from(vec![C64::new(1.0, 0.0), ZERO]), &[1.0]).unwrap();
        assert!((at_one.at(0)[0].re - 0.60653).abs() < 1e-5);
        assert!((at_one.at(0)[1].re - 0.60653).abs() < 1e-5);
        assert!(propagation_residual(&kernel, &traj).unwrap() < 1e-9);
    }

    #[test]
    fn reciprocal_dark_pair_is_stationary() {
        let (_, kernel) = setup(2, 1, PI, 0.0);
        let h = 0.5f64.sqrt();
        let a0 = Array1::from(vec![C64::new(h, 0.0), C64::new(h, 0.0)]);
        let times = uniform_grid(100.0, 201);
        let traj = propagate(&kernel, &a0, &times).unwrap();
        for k in 0..traj.len() {
            assert!((&traj.at(k).to_owned() - &a0).iter().all(|z| z.norm() < 1e-12));
        }
        assert!(propagation_residual(&kernel, &traj).unwrap() < 1e-9);
    }

    #[test]
    fn spectral_and_expm_and_rk_agree() {
        let (basis, kernel) = setup(5, 2, 0.83, 0.37);
        let a0 = make_initial_state(&basis, &InitialStateSpec::SixFold { j: 2 }).unwrap();
        let times = uniform_grid(15.0, 61);
        let spectral = Propagator::new(&kernel).unwrap();
        assert!(matches!(spectral.method(), PropagationMethod::Spectral { .. }));
        let a = spectral.evolve(&a0, &times).unwrap();
        let b = Propagator::expm_only(&kernel, vec![]).evolve(&a0, &times).unwrap();
        let diff = (&a.amplitudes - &b.amplitudes).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "diff {diff}");
        assert!(propagation_residual(&kernel, &a).unwrap() < 1e-8);
        assert!(a.max_norm_increase() <= 1e-12);
    }

    #[test]
    fn defective_one_way_kernels_fall_back_to_expm() {
        // at D = -1 the eigenvector matrix is numerically singular
        let (basis, kernel) = setup(12, 3, PI, -1.0);
        let p = Propagator::new(&kernel).unwrap();
        assert_eq!(p.method(), &PropagationMethod::Expm);
        let a0 = make_initial_state(&basis, &InitialStateSpec::Product { sites: vec![5, 6, 7] }).unwrap();
        let traj = p.evolve(&a0, &uniform_grid(10.0, 11)).unwrap();
        assert!(traj.max_norm_increase() <= 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (_, kernel) = setup(3, 1, 1.0, 0.2);
        let p = Propagator::new(&kernel).unwrap();
        let a = Array1::from(vec![C64::new(1.0, 0.0), ZERO, ZERO]);
        assert!(p.evolve(&(&a * C64::new(2.0, 0.0)), &[0.0]).is_err());
        assert!(p.evolve(&a, &[1.0, 0.5]).is_err());
        assert!(p.evolve(&a, &[-1.0]).is_err());
        assert!(p.evolve(&Array1::from(vec![C64::new(1.0, 0.0)]), &[0.0]).is_err());
    }
}
