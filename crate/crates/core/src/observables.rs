//! Observables of the excitation dynamics.
//!
//! Everything here is computed from the bare-state weights `w_p = |a_p|^2`:
//! `<n_m> = sum_p w_p [m in p]`, `<n_i n_j> = sum_p w_p [i in p][j in p]`, and
//! so on. Weights are taken from the decaying (unnormalized) amplitudes unless
//! [`Normalization::Renormalized`] is requested, in which case every time slice
//! is divided by `||a(t)||^2`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::ExcitationBasis;
use crate::dynamics::{AmplitudeTrajectory, NORM_TOLERANCE};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_atomic, write_json};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Raw,
    Renormalized,
}

/// Occupation moments of one time slice.
#[derive(Clone, Debug)]
pub struct Moments {
    /// `<n_m>`, index `m - 1`.
    pub populations: Vec<f64>,
    /// `<n_i n_j>` for `i < j`, stored at `[i - 1, j - 1]`; the diagonal holds `<n_i>`.
    pub pairs: Array2<f64>,
    /// `<n_j n_{j+1} n_{j+2}>`, index `j - 1`.
    pub triples: Vec<f64>,
}

impl Moments {
    pub fn from_weights(basis: &ExcitationBasis, weights: &[f64]) -> Result<Self> {
        if weights.len() != basis.dim() {
            return Err(Error::arg(format!(
                "{} weights for a basis of dimension {}",
                weights.len(),
                basis.dim()
            )));
        }
        let n = basis.n_sites();
        let mut populations = vec![0.0; n];
        let mut pairs = Array2::<f64>::zeros((n, n));
        let mut triples = vec![0.0; n.saturating_sub(2)];
        for (state, &w) in basis.states().iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let sites = state.sites();
            for (a, &i) in sites.iter().enumerate() {
                populations[i - 1] += w;
                for &j in &sites[a + 1..] {
                    pairs[[i - 1, j - 1]] += w;
                }
                if a + 2 < sites.len() && sites[a + 1] == i + 1 && sites[a + 2] == i + 2 {
                    triples[i - 1] += w;
                }
            }
        }
        for (m, &p) in populations.iter().enumerate() {
            pairs[[m, m]] = p;
        }
        Ok(Moments {
            populations,
            pairs,
            triples,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.populations.len()
    }

    /// Site-averaged connected density-density correlation at separation `r`.
    pub fn g2(&self, r: usize) -> Result<f64> {
        let n = self.n_sites();
        if r == 0 || r >= n {
            return Err(Error::arg(format!("separation r = {r} outside 1..={}", n.saturating_sub(1))));
        }
        let p = &self.populations;
        let sum: f64 = (0..n - r)
            .map(|j| self.pairs[[j, j + r]] - p[j] * p[j + r])
            .sum();
        Ok(sum / (n - r) as f64)
    }

    /// Modified third-order correlation and its cumulant decomposition.
    pub fn g3(&self) -> Result<ThirdOrder> {
        let n = self.n_sites();
        if n < 3 {
            return Err(Error::arg(format!("third-order correlation needs N >= 3, got {n}")));
        }
        let p = &self.populations;
        let q = &self.pairs;
        let mut acc = ThirdOrder::default();
        for j in 0..n - 2 {
            let (a, b, c) = (p[j], p[j + 1], p[j + 2]);
            let (ab, ac, bc) = (q[[j, j + 1]], q[[j, j + 2]], q[[j + 1, j + 2]]);
            let abc = self.triples[j];
            acc.g3 += abc - a * b * c;
            acc.third_cumulant += abc - ab * c - ac * b - bc * a + 2.0 * a * b * c;
            acc.cross_12 += (ab - a * b) * c;
            acc.cross_13 += (ac - a * c) * b;
            acc.cross_23 += (bc - b * c) * a;
        }
        let scale = 1.0 / (n - 2) as f64;
        Ok(ThirdOrder {
            g3: acc.g3 * scale,
            third_cumulant: acc.third_cumulant * scale,
            cross_12: acc.cross_12 * scale,
            cross_13: acc.cross_13 * scale,
            cross_23: acc.cross_23 * scale,
        })
    }
}

/// `<G3>` with its genuine third cumulant and the three second-order cross terms,
/// each averaged over the `N - 2` windows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ThirdOrder {
    pub g3: f64,
    pub third_cumulant: f64,
    /// `(<n_j n_{j+1}> - <n_j><n_{j+1}>) <n_{j+2}>`
    pub cross_12: f64,
    /// `(<n_j n_{j+2}> - <n_j><n_{j+2}>) <n_{j+1}>`
    pub cross_13: f64,
    /// `(<n_{j+1} n_{j+2}> - <n_{j+1}><n_{j+2}>) <n_j>`
    pub cross_23: f64,
}

impl ThirdOrder {
    pub fn parts_sum(&self) -> f64 {
        self.third_cumulant + self.cross_12 + self.cross_13 + self.cross_23
    }
}

fn check_dims(traj: &AmplitudeTrajectory, basis: &ExcitationBasis) -> Result<()> {
    if traj.dim() != basis.dim() {
        return Err(Error::arg(format!(
            "trajectory dimension {} does not match basis dimension {}",
            traj.dim(),
            basis.dim()
        )));
    }
    Ok(())
}

fn slice_weights(traj: &AmplitudeTrajectory, k: usize, normalization: Normalization) -> Vec<f64> {
    let mut w = traj.weights(k);
    if normalization == Normalization::Renormalized {
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.iter_mut().for_each(|x| *x /= total);
        }
    }
    w
}

/// Moments at every stored time, computed in parallel.
pub fn moment_series(
    traj: &AmplitudeTrajectory,
    basis: &ExcitationBasis,
    normalization: Normalization,
) -> Result<Vec<Moments>> {
    check_dims(traj, basis)?;
    (0..traj.len())
        .into_par_iter()
        .map(|k| Moments::from_weights(basis, &slice_weights(traj, k, normalization)))
        .collect()
}

/// Site populations `P_m(t)`; row `k` is time `k`, column `m - 1` is site `m`.
#[derive(Clone, Debug)]
pub struct PopulationField {
    pub times: Vec<f64>,
    pub populations: Array2<f64>,
}

impl PopulationField {
    pub fn n_sites(&self) -> usize {
        self.populations.ncols()
    }

    /// `P_m(t)` for 1-based site `m`.
    pub fn site(&self, m: usize) -> Vec<f64> {
        self.populations.column(m - 1).to_vec()
    }

    pub fn total(&self, k: usize) -> f64 {
        self.populations.row(k).sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "t,m,P").expect("write to Vec");
        for (k, &t) in self.times.iter().enumerate() {
            let ts = fmt_f64(t);
            for (m, &p) in self.populations.row(k).iter().enumerate() {
                writeln!(buf, "{ts},{},{}", m + 1, fmt_f64(p)).expect("write to Vec");
            }
        }
        write_atomic(path, &buf)
    }
}

/// `P_m(t) = sum_p |a_p(t)|^2 [m in p]` from the raw amplitudes.
pub fn excitation_population(traj: &AmplitudeTrajectory, basis: &ExcitationBasis) -> Result<PopulationField> {
    excitation_population_with(traj, basis, Normalization::Raw)
}

pub fn excitation_population_with(
    traj: &AmplitudeTrajectory,
    basis: &ExcitationBasis,
    normalization: Normalization,
) -> Result<PopulationField> {
    let moments = moment_series(traj, basis, normalization)?;
    Ok(population_field(&traj.times, &moments))
}

pub fn population_field(times: &[f64], moments: &[Moments]) -> PopulationField {
    let n = moments.first().map_or(0, Moments::n_sites);
    let mut populations = Array2::<f64>::zeros((moments.len(), n));
    for (k, mo) in moments.iter().enumerate() {
        populations.row_mut(k).assign(&Array1::from(mo.populations.clone()));
    }
    PopulationField {
        times: times.to_vec(),
        populations,
    }
}

/// `<G2(r)>(t)` from the raw amplitudes.
pub fn density_density(traj: &AmplitudeTrajectory, basis: &ExcitationBasis, r: usize) -> Result<Vec<f64>> {
    if r == 0 || r >= basis.n_sites() {
        return Err(Error::arg(format!(
            "separation r = {r} outside 1..={}",
            basis.n_sites().saturating_sub(1)
        )));
    }
    moment_series(traj, basis, Normalization::Raw)?
        .iter()
        .map(|m| m.g2(r))
        .collect()
}

/// `<G3>(t)` with its decomposition, from the raw amplitudes.
pub fn third_order(traj: &AmplitudeTrajectory, basis: &ExcitationBasis) -> Result<Vec<ThirdOrder>> {
    if basis.n_sites() < 3 {
        return Err(Error::arg(format!(
            "third-order correlation needs N >= 3, got {}",
            basis.n_sites()
        )));
    }
    moment_series(traj, basis, Normalization::Raw)?
        .iter()
        .map(Moments::g3)
        .collect()
}

/// All correlation series of one trajectory.
#[derive(Clone, Debug)]
pub struct CorrelationSeries {
    pub times: Vec<f64>,
    /// `<G2(r)>` per separation `r = 1..N-1`.
    pub g2: BTreeMap<usize, Vec<f64>>,
    /// Empty when `N < 3`.
    pub g3: Vec<ThirdOrder>,
}

impl CorrelationSeries {
    pub fn from_moments(times: &[f64], moments: &[Moments]) -> Result<Self> {
        let n = moments.first().map_or(0, Moments::n_sites);
        let mut g2 = BTreeMap::new();
        for r in 1..n {
            g2.insert(r, moments.iter().map(|m| m.g2(r)).collect::<Result<Vec<_>>>()?);
        }
        let g3 = if n >= 3 {
            moments.iter().map(Moments::g3).collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(CorrelationSeries {
            times: times.to_vec(),
            g2,
            g3,
        })
    }

    pub fn write_g2_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "t,r,g2").expect("write to Vec");
        for (k, &t) in self.times.iter().enumerate() {
            let ts = fmt_f64(t);
            for (r, series) in &self.g2 {
                writeln!(buf, "{ts},{r},{}", fmt_f64(series[k])).expect("write to Vec");
            }
        }
        write_atomic(path, &buf)
    }

    pub fn write_g3_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "t,g3,third_cumulant,cross_12,cross_13,cross_23").expect("write to Vec");
        for (&t, g) in self.times.iter().zip(&self.g3) {
            writeln!(
                buf,
                "{},{},{},{},{},{}",
                fmt_f64(t),
                fmt_f64(g.g3),
                fmt_f64(g.third_cumulant),
                fmt_f64(g.cross_12),
                fmt_f64(g.cross_13),
                fmt_f64(g.cross_23)
            )
            .expect("write to Vec");
        }
        write_atomic(path, &buf)
    }
}

/// `-sum_p |a_p|^2 ln |a_p|^2` in nats, with `0 ln 0 = 0`.
pub fn participation_entropy(a0: &Array1<C64>) -> Result<f64> {
    let weights: Vec<f64> = a0.iter().map(|z| z.norm_sqr()).collect();
    let norm = weights.iter().sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::arg(format!("entropy needs a normalized state, norm is {norm}")));
    }
    // 0 - sum keeps a single-component state at +0 rather than -0
    Ok(0.0
        - weights
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| w * w.ln())
            .sum::<f64>())
}

/// Time of maximal end-site population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutingRecord {
    /// `None` when the series is identically zero.
    pub t_c: Option<f64>,
    pub p_max: f64,
    /// Grid index of the maximum.
    pub index: Option<usize>,
    /// Participation entropy of the initial state, when known.
    pub entropy_s: Option<f64>,
    pub refined: bool,
}

impl RoutingRecord {
    pub fn with_entropy(mut self, s: f64) -> Self {
        self.entropy_s = Some(s);
        self
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Earliest grid time attaining the maximum of `series` (ties within 1e-12).
///
/// With `refine`, an interior maximum is moved to the vertex of the parabola
/// through it and its two neighbours; `p_max` stays the grid maximum.
pub fn detect_tc(times: &[f64], series: &[f64], refine: bool) -> Result<RoutingRecord> {
    if series.is_empty() || series.len() != times.len() {
        return Err(Error::arg(format!(
            "need a nonempty series matching the time grid ({} values, {} times)",
            series.len(),
            times.len()
        )));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric("series contains non-finite values"));
    }
    let p_max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if series.iter().all(|&x| x == 0.0) {
        return Ok(RoutingRecord {
            t_c: None,
            p_max,
            index: None,
            entropy_s: None,
            refined: false,
        });
    }
    let index = series
        .iter()
        .position(|&x| x >= p_max - 1e-12)
        .expect("maximum is attained");
    let mut t_c = times[index];
    let mut refined = false;
    if refine && index > 0 && index + 1 < series.len() {
        let (t0, t1, t2) = (times[index - 1], times[index], times[index + 1]);
        let (y0, y1, y2) = (series[index - 1], series[index], series[index + 1]);
        let d1 = (y1 - y0) / (t1 - t0);
        let d2 = (y2 - y1) / (t2 - t1);
        let curvature = (d2 - d1) / (t2 - t0);
        if curvature < 0.0 {
            let vertex = 0.5 * (t0 + t1) - d1 / (2.0 * curvature);
            t_c = vertex.clamp(t0, t2);
            refined = true;
        }
    }
    Ok(RoutingRecord {
        t_c: Some(t_c),
        p_max,
        index: Some(index),
        entropy_s: None,
        refined,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontStatus {
    Fitted,
    /// The front never moved; the speed is reported as zero.
    Stationary,
    /// Fewer than two usable time points; the speed is NaN.
    Degenerate,
}

/// Front-tracking estimate of the rightward spreading speed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiffusionSpeed {
    /// Sites per unit time.
    pub speed: f64,
    pub status: FrontStatus,
    /// `(t, front site)` pairs used in the fit.
    pub fronts: Vec<(f64, usize)>,
}

/// Least-squares slope of the front position against time.
///
/// The front at time `t` is the largest site `m` with
/// `P_m(t) >= threshold * max_m P_m(t)`. Points are used up to and including
/// the first time the front reaches the last site.
pub fn diffusion_speed(field: &PopulationField, threshold: f64) -> Result<DiffusionSpeed> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::arg(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let n = field.n_sites();
    let mut fronts = Vec::new();
    for (k, &t) in field.times.iter().enumerate() {
        let row = field.populations.row(k);
        let peak = row.iter().copied().fold(0.0, f64::max);
        if !(peak > 0.0) {
            continue;
        }
        let front = row
            .iter()
            .rposition(|&p| p >= threshold * peak)
            .expect("peak site qualifies")
            + 1;
        fronts.push((t, front));
        if front == n {
            break;
        }
    }
    if fronts.len() < 2 {
        return Ok(DiffusionSpeed {
            speed: f64::NAN,
            status: FrontStatus::Degenerate,
            fronts,
        });
    }
    if fronts.iter().all(|&(_, f)| f == fronts[0].1) {
        return Ok(DiffusionSpeed {
            speed: 0.0,
            status: FrontStatus::Stationary,
            fronts,
        });
    }
    let count = fronts.len() as f64;
    let t_mean = fronts.iter().map(|&(t, _)| t).sum::<f64>() / count;
    let f_mean = fronts.iter().map(|&(_, f)| f as f64).sum::<f64>() / count;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, f) in &fronts {
        sxy += (t - t_mean) * (f as f64 - f_mean);
        sxx += (t - t_mean).powi(2);
    }
    if sxx == 0.0 {
        return Ok(DiffusionSpeed {
            speed: f64::NAN,
            status: FrontStatus::Degenerate,
            fronts,
        });
    }
    Ok(DiffusionSpeed {
        speed: sxy / sxx,
        status: FrontStatus::Fitted,
        fronts,
    })
}
