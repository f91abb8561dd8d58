//! TOML run configuration.
//!
//! A configuration names the chain, the initial state, the time grid, which
//! observables to compute, and optionally a parameter sweep and a phase-jitter
//! ensemble. Everything is validated up front; [`SimulationConfig::validate`]
//! reports every offending field at once.
//!
//! ```toml
//! [params]
//! n_sites = 40
//! n_excitations = 2
//! xi_over_pi = 1.0
//! directionality = 0.5
//!
//! [initial]
//! kind = "product"
//! sites = [20, 21]
//!
//! [time]
//! t_max = 100.0
//! n_points = 400
//!
//! [output]
//! dir = "out/dimer"
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::binomial;
use crate::dynamics::{uniform_grid, InitialStateSpec};
use crate::error::{Error, Result};
use crate::kernel::{CouplingParams, DEFAULT_KERNEL_CAP};

/// Longest time grid accepted from a configuration.
pub const MAX_TIME_POINTS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub params: ParamsConfig,
    pub initial: InitialStateSpec,
    #[serde(default)]
    pub time: TimeGrid,
    #[serde(default)]
    pub observables: ObservableSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<JitterSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Chain parameters. Give exactly one of `xi` (radians) or `xi_over_pi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n_sites: usize,
    pub n_excitations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_over_pi: Option<f64>,
    pub directionality: f64,
    #[serde(default = "one")]
    pub total_rate: f64,
}

fn one() -> f64 {
    1.0
}

impl ParamsConfig {
    /// Phase per spacing in radians, if exactly one form was given.
    pub fn xi_radians(&self) -> Option<f64> {
        match (self.xi, self.xi_over_pi) {
            (Some(x), None) => Some(x),
            (None, Some(x)) => Some(x * PI),
            _ => None,
        }
    }

    pub fn coupling(&self) -> Result<CouplingParams> {
        let xi = self
            .xi_radians()
            .ok_or_else(|| Error::arg("give exactly one of params.xi and params.xi_over_pi"))?;
        Ok(CouplingParams {
            n_sites: self.n_sites,
            n_excitations: self.n_excitations,
            xi,
            directionality: self.directionality,
            total_rate: self.total_rate,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    /// In units of the inverse total decay rate.
    pub t_max: f64,
    pub n_points: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            t_max: 100.0,
            n_points: 400,
        }
    }
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        uniform_grid(self.t_max, self.n_points)
    }
}

/// Which outputs a single run produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableSet {
    pub populations: bool,
    pub correlations: bool,
    pub third_order: bool,
    pub routing: bool,
    pub speed: bool,
    pub trajectory: bool,
    /// Relative threshold of the front tracker.
    pub speed_threshold: f64,
}

impl Default for ObservableSet {
    fn default() -> Self {
        ObservableSet {
            populations: true,
            correlations: true,
            third_order: true,
            routing: true,
            speed: true,
            trajectory: false,
            speed_threshold: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// `theta` of a `theta_phi` initial state, radians.
    Theta,
    /// Directionality `D`.
    D,
    /// Phase per spacing, radians.
    Xi,
    /// Phase per spacing in units of pi.
    XiOverPi,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Theta => "theta",
            SweepAxis::D => "D",
            SweepAxis::Xi => "xi",
            SweepAxis::XiOverPi => "xi_over_pi",
        }
    }
}

/// `n` evenly spaced values from `start` to `stop` inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<SweepRange>,
    /// Repeat the sweep for each directionality (ignored for the `d` axis).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_values: Option<Vec<f64>>,
}

impl SweepSpec {
    pub fn points(&self) -> Vec<f64> {
        match (&self.values, &self.range) {
            (Some(v), None) => v.clone(),
            (None, Some(r)) => match r.n {
                0 => Vec::new(),
                1 => vec![r.start],
                n => (0..n)
                    .map(|k| r.start + (r.stop - r.start) * k as f64 / (n - 1) as f64)
                    .collect(),
            },
            _ => Vec::new(),
        }
    }
}

/// Gaussian phase noise on the `theta_phi` initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterSpec {
    pub sigma_theta: f64,
    #[serde(default)]
    pub sigma_phi: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Optional bound on `std(t_c) / mean(t_c)`; the study reports whether it holds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_relative_std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Divide weights by `||a(t)||^2` before computing observables.
    pub renormalize: bool,
    /// Parabolic refinement of `t_c`.
    pub refine_tc: bool,
    pub figures: bool,
    /// Re-integrate with the adaptive stepper and record the discrepancy.
    pub residual: bool,
    /// Write the kernel as sparse `row,col,re,im`.
    pub kernel: bool,
    /// Write the basis listing as JSON.
    pub basis: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            renormalize: false,
            refine_tc: false,
            figures: true,
            residual: true,
            kernel: false,
            basis: false,
        }
    }
}

/// Command-line overrides applied on top of a loaded configuration.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n_sites: Option<usize>,
    pub n_excitations: Option<usize>,
    pub directionality: Option<f64>,
    pub xi: Option<f64>,
    pub xi_over_pi: Option<f64>,
    pub t_max: Option<f64>,
    pub out: Option<PathBuf>,
}

impl SimulationConfig {
    /// A configuration with default grid, observables and output.
    pub fn new(params: &CouplingParams, initial: InitialStateSpec) -> Self {
        SimulationConfig {
            params: ParamsConfig {
                n_sites: params.n_sites,
                n_excitations: params.n_excitations,
                xi: Some(params.xi),
                xi_over_pi: None,
                directionality: params.directionality,
                total_rate: params.total_rate,
            },
            initial,
            time: TimeGrid::default(),
            observables: ObservableSet::default(),
            sweep: None,
            jitter: None,
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Validation(vec![e.to_string()]))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn coupling(&self) -> Result<CouplingParams> {
        self.params.coupling()
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.n_sites {
            self.params.n_sites = n;
        }
        if let Some(m) = o.n_excitations {
            self.params.n_excitations = m;
        }
        if let Some(d) = o.directionality {
            self.params.directionality = d;
        }
        if let Some(x) = o.xi {
            self.params.xi = Some(x);
            self.params.xi_over_pi = None;
        }
        if let Some(x) = o.xi_over_pi {
            self.params.xi_over_pi = Some(x);
            self.params.xi = None;
        }
        if let Some(t) = o.t_max {
            self.time.t_max = t;
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
    }

    /// Checks every field and returns all problems together.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let p = &self.params;
        if p.n_sites == 0 {
            errs.push("params.n_sites must be at least 1".to_owned());
        }
        if p.n_excitations == 0 || p.n_excitations > p.n_sites {
            errs.push(format!(
                "params.n_excitations must lie in 1..={}, got {}",
                p.n_sites, p.n_excitations
            ));
        }
        match (p.xi, p.xi_over_pi) {
            (Some(_), Some(_)) => errs.push("give only one of params.xi and params.xi_over_pi".to_owned()),
            (None, None) => errs.push("params.xi or params.xi_over_pi is required".to_owned()),
            _ => {}
        }
        if let Some(x) = p.xi_radians().filter(|x| !x.is_finite()) {
            errs.push(format!("params.xi must be finite, got {x}"));
        }
        if !(-1.0..=1.0).contains(&p.directionality) {
            errs.push(format!("params.directionality must lie in [-1, 1], got {}", p.directionality));
        }
        if !(p.total_rate > 0.0 && p.total_rate.is_finite()) {
            errs.push(format!("params.total_rate must be positive, got {}", p.total_rate));
        }
        let sizes_ok = p.n_excitations >= 1 && p.n_excitations <= p.n_sites;
        let mut oversized = None;
        if sizes_ok {
            let dim = binomial(p.n_sites, p.n_excitations);
            if dim > DEFAULT_KERNEL_CAP as u128 {
                oversized = Some(dim);
                errs.push(format!(
                    "C({}, {}) = {dim} basis states exceeds the dense-kernel limit of {DEFAULT_KERNEL_CAP}; \
                     reduce n_sites or n_excitations",
                    p.n_sites, p.n_excitations
                ));
            } else if let Err(e) = self.initial.validate(p.n_sites, p.n_excitations) {
                errs.push(format!("initial: {}", strip(&e)));
            }
        }

        let t = &self.time;
        if !(t.t_max > 0.0 && t.t_max.is_finite()) {
            errs.push(format!("time.t_max must be positive and finite, got {}", t.t_max));
        }
        if t.n_points < 2 || t.n_points > MAX_TIME_POINTS {
            errs.push(format!(
                "time.n_points must lie in 2..={MAX_TIME_POINTS}, got {}",
                t.n_points
            ));
        }
        let thr = self.observables.speed_threshold;
        if !(thr > 0.0 && thr < 1.0) {
            errs.push(format!("observables.speed_threshold must lie in (0, 1), got {thr}"));
        }

        if let Some(s) = &self.sweep {
            match (&s.values, &s.range) {
                (Some(_), Some(_)) => errs.push("sweep: give values or range, not both".to_owned()),
                (None, None) => errs.push("sweep: values or range is required".to_owned()),
                (Some(v), None) if v.is_empty() => errs.push("sweep.values is empty".to_owned()),
                (None, Some(r)) => {
                    if r.n == 0 {
                        errs.push("sweep.range.n must be at least 1".to_owned());
                    }
                    if !r.start.is_finite() || !r.stop.is_finite() {
                        errs.push("sweep.range bounds must be finite".to_owned());
                    }
                }
                _ => {}
            }
            if s.points().iter().any(|x| !x.is_finite()) {
                errs.push("sweep values must be finite".to_owned());
            }
            if s.axis == SweepAxis::D && s.points().iter().any(|d| !(-1.0..=1.0).contains(d)) {
                errs.push("sweep values on the d axis must lie in [-1, 1]".to_owned());
            }
            if s.axis == SweepAxis::Theta && !matches!(self.initial, InitialStateSpec::ThetaPhi { .. }) {
                errs.push("sweep.axis = \"theta\" needs a theta_phi initial state".to_owned());
            }
            if let Some(ds) = &s.d_values {
                if ds.is_empty() {
                    errs.push("sweep.d_values is empty".to_owned());
                }
                if ds.iter().any(|d| !(-1.0..=1.0).contains(d)) {
                    errs.push("sweep.d_values must lie in [-1, 1]".to_owned());
                }
                if s.axis == SweepAxis::D {
                    errs.push("sweep.d_values cannot be combined with axis = \"d\"".to_owned());
                }
            }
        }

        if let Some(j) = &self.jitter {
            if !(j.sigma_theta >= 0.0 && j.sigma_theta.is_finite()) {
                errs.push(format!("jitter.sigma_theta must be >= 0, got {}", j.sigma_theta));
            }
            if !(j.sigma_phi >= 0.0 && j.sigma_phi.is_finite()) {
                errs.push(format!("jitter.sigma_phi must be >= 0, got {}", j.sigma_phi));
            }
            if j.n_samples == 0 {
                errs.push("jitter.n_samples must be at least 1".to_owned());
            }
            if let Some(b) = j.max_relative_std.filter(|b| !(*b > 0.0 && b.is_finite())) {
                errs.push(format!("jitter.max_relative_std must be positive, got {b}"));
            }
            if !matches!(self.initial, InitialStateSpec::ThetaPhi { .. }) {
                errs.push("jitter needs a theta_phi initial state".to_owned());
            }
        }

        if self.output.dir.as_os_str().is_empty() {
            errs.push("output.dir must not be empty".to_owned());
        }

        match (errs.len(), oversized) {
            (0, _) => Ok(()),
            // a size problem on its own is reported in the capacity category
            (1, Some(requested)) => Err(Error::Capacity {
                what: format!("the C({}, {}) basis", p.n_sites, p.n_excitations),
                requested,
                limit: DEFAULT_KERNEL_CAP as u128,
            }),
            _ => Err(Error::Validation(errs)),
        }
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Argument(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DIMER: &str = r#"
        [params]
        n_sites = 40
        n_excitations = 2
        xi_over_pi = 1.0
        directionality = 0.1

        [initial]
        kind = "product"
        sites = [20, 21]

        [output]
        dir = "out/dimer"
    "#;

    #[test]
    fn parses_minimal_file_with_defaults() {
        let c = SimulationConfig::from_toml_str(DIMER).unwrap();
        c.validate().unwrap();
        assert_eq!(c.time, TimeGrid::default());
        assert_eq!(c.coupling().unwrap().xi, PI);
        assert_eq!(c.params.total_rate, 1.0);
        assert!(c.observables.correlations && !c.observables.trajectory);
        assert_eq!(c.time.times().len(), 400);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = DIMER.replace("directionality = 0.1", "directionality = 0.1\ndirectionalty = 0.2");
        assert!(matches!(
            SimulationConfig::from_toml_str(&text),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn validation_lists_every_problem() {
        let mut c = SimulationConfig::from_toml_str(DIMER).unwrap();
        c.params.directionality = 1.5;
        c.params.xi = Some(1.0);
        c.time.t_max = -1.0;
        c.time.n_points = 1;
        c.observables.speed_threshold = 0.0;
        c.jitter = Some(JitterSpec {
            sigma_theta: -0.1,
            sigma_phi: 0.0,
            n_samples: 0,
            seed: 1,
            max_relative_std: None,
        });
        let Err(Error::Validation(msgs)) = c.validate() else {
            panic!("expected a validation error");
        };
        for needle in [
            "directionality",
            "only one of params.xi",
            "t_max",
            "n_points",
            "speed_threshold",
            "sigma_theta",
            "n_samples",
            "theta_phi",
        ] {
            assert!(msgs.iter().any(|m| m.contains(needle)), "missing {needle}: {msgs:?}");
        }
    }

    #[test]
    fn oversized_basis_is_reported() {
        let mut c = SimulationConfig::from_toml_str(DIMER).unwrap();
        c.params.n_sites = 60;
        c.params.n_excitations = 4;
        let err = c.validate().unwrap_err();
        assert!(matches!(err, Error::Capacity { requested: 487_635, .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
        // alongside other problems it is listed with them
        c.time.t_max = -1.0;
        let Err(Error::Validation(msgs)) = c.validate() else {
            panic!("expected a validation error");
        };
        assert!(msgs[0].contains("dense-kernel limit"));
    }

    #[test]
    fn initial_state_mismatch_is_reported() {
        let mut c = SimulationConfig::from_toml_str(DIMER).unwrap();
        c.initial = InitialStateSpec::SixFold { j: 38 };
        let Err(Error::Validation(msgs)) = c.validate() else {
            panic!("expected a validation error");
        };
        assert!(msgs.iter().any(|m| m.starts_with("initial:")));
    }

    #[test]
    fn overrides_replace_fields() {
        let mut c = SimulationConfig::from_toml_str(DIMER).unwrap();
        c.apply(&Overrides {
            n_sites: Some(30),
            xi: Some(2.0),
            t_max: Some(7.0),
            ..Overrides::default()
        });
        assert_eq!(c.params.n_sites, 30);
        assert_eq!((c.params.xi, c.params.xi_over_pi), (Some(2.0), None));
        assert_eq!(c.time.t_max, 7.0);
    }

    #[test]
    fn sweep_range_is_inclusive() {
        let s = SweepSpec {
            axis: SweepAxis::Theta,
            values: None,
            range: Some(SweepRange {
                start: 0.0,
                stop: 1.0,
                n: 5,
            }),
            d_values: None,
        };
        assert_eq!(s.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    fn arb_initial() -> impl Strategy<Value = InitialStateSpec> {
        prop_oneof![
            (1usize..20).prop_map(|a| InitialStateSpec::Product { sites: vec![a, a + 1] }),
            (1usize..15, -10.0f64..10.0, -10.0f64..10.0)
                .prop_map(|(j, phi, theta)| InitialStateSpec::ThetaPhi { j, phi, theta }),
            (1usize..15).prop_map(|j| InitialStateSpec::SixFold { j }),
        ]
    }

    proptest! {
        #[test]
        fn toml_round_trip_is_lossless(
            n in 4usize..40,
            xi in -10.0f64..10.0,
            d in -1.0f64..=1.0,
            t_max in 1e-3f64..1e4,
            n_points in 2usize..5000,
            initial in arb_initial(),
            sweep in proptest::option::of((0.0f64..4.0, 1usize..50, proptest::collection::vec(-1.0f64..=1.0, 1..4))),
            jitter in proptest::option::of((0.0f64..1.0, 1usize..100, any::<u64>())),
            flags in any::<[bool; 4]>(),
        ) {
            let mut c = SimulationConfig::new(&CouplingParams::new(n, 2, xi, d), initial);
            c.time = TimeGrid { t_max, n_points };
            c.observables.trajectory = flags[0];
            c.output.renormalize = flags[1];
            c.output.refine_tc = flags[2];
            if flags[3] {
                c.params.xi = None;
                c.params.xi_over_pi = Some(xi / 3.0);
            }
            c.sweep = sweep.map(|(stop, n, ds)| SweepSpec {
                axis: SweepAxis::Theta,
                values: None,
                range: Some(SweepRange { start: 0.0, stop, n }),
                d_values: Some(ds),
            });
            c.jitter = jitter.map(|(sigma_theta, n_samples, seed)| JitterSpec {
                sigma_theta,
                sigma_phi: sigma_theta / 7.0,
                n_samples,
                seed,
                max_relative_std: Some(0.25),
            });
            let text = c.to_toml_string().unwrap();
            let back = SimulationConfig::from_toml_str(&text).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
