//! Run configuration: a TOML file with every field optional, then flag
//! overrides on top.

use std::path::{Path, PathBuf};

use kndirac::geometry::{Branch, SpacetimeParams};
use kndirac::separation::ModeParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 20240607;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Integration tolerance; each task has its own default when unset.
    pub tol: Option<f64>,
    pub out: PathBuf,
    pub params: ParamsConfig,
    pub modes: Vec<ModeConfig>,
    pub radial: RadialConfig,
    pub angular: AngularConfig,
    pub verify: VerifyConfig,
    pub asymptotics: AsymptoticsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            tol: None,
            out: PathBuf::from("out"),
            params: ParamsConfig::default(),
            modes: vec![ModeConfig::default()],
            radial: RadialConfig::default(),
            angular: AngularConfig::default(),
            verify: VerifyConfig::default(),
            asymptotics: AsymptoticsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(rename = "M")]
    pub mass: f64,
    pub a: f64,
    #[serde(rename = "Q")]
    pub charge: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig { mass: 1.0, a: 0.6, charge: 0.3 }
    }
}

/// One mode. Without `xi` the separation constant is taken from the angular
/// branch `branch_index` (`±1` are the eigenvalues nearest zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeConfig {
    pub omega: f64,
    pub k: f64,
    pub mass: f64,
    pub xi: Option<f64>,
    pub branch_index: i32,
}

impl Default for ModeConfig {
    fn default() -> Self {
        ModeConfig { omega: 0.9, k: 0.5, mass: 0.4, xi: None, branch_index: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialConfig {
    pub rstar_min: f64,
    pub rstar_max: f64,
    pub branch: Branch,
    pub samples: usize,
}

impl Default for RadialConfig {
    fn default() -> Self {
        RadialConfig { rstar_min: -10.0, rstar_max: 50.0, branch: Branch::Exterior, samples: 201 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngularConfig {
    /// Basis functions per component.
    pub n: usize,
    pub count: usize,
    pub theta_samples: usize,
    /// Optional ω sweep for branch continuation: `[start, end, samples]`.
    pub sweep: Option<(f64, f64, usize)>,
}

impl Default for AngularConfig {
    fn default() -> Self {
        AngularConfig { n: 64, count: 6, theta_samples: 65, sweep: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub points: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { points: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsConfig {
    pub infinity: bool,
    pub horizon: bool,
    pub u_start: f64,
    pub u_end: f64,
    pub samples: usize,
    pub end_over_alpha: f64,
    /// Interior sample spacing in units of `1/α`.
    pub spacing_over_alpha: f64,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        AsymptoticsConfig {
            infinity: true,
            horizon: true,
            u_start: 1e6,
            u_end: 1e3,
            samples: 301,
            end_over_alpha: 40.0,
            spacing_over_alpha: 0.02,
        }
    }
}

/// Command-line values that replace config fields when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub omega: Option<f64>,
    pub k: Option<f64>,
    pub mass: Option<f64>,
    pub xi: Option<f64>,
    pub big_m: Option<f64>,
    pub a: Option<f64>,
    pub q: Option<f64>,
    pub rstar_min: Option<f64>,
    pub rstar_max: Option<f64>,
    pub branch: Option<Branch>,
}

fn config_error(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Config { path: path.into(), msg: msg.into() }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let span = e.span().map(|s| format!(" (bytes {}..{})", s.start, s.end)).unwrap_or_default();
            config_error("<config>", format!("{}{span}", e.message()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Flags win. Mode flags apply to every configured mode.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if o.tol.is_some() {
            self.tol = o.tol;
        }
        if let Some(v) = o.big_m {
            self.params.mass = v;
        }
        if let Some(v) = o.a {
            self.params.a = v;
        }
        if let Some(v) = o.q {
            self.params.charge = v;
        }
        for m in &mut self.modes {
            if let Some(v) = o.omega {
                m.omega = v;
            }
            if let Some(v) = o.k {
                m.k = v;
            }
            if let Some(v) = o.mass {
                m.mass = v;
            }
            if o.xi.is_some() {
                m.xi = o.xi;
            }
        }
        if let Some(v) = o.rstar_min {
            self.radial.rstar_min = v;
        }
        if let Some(v) = o.rstar_max {
            self.radial.rstar_max = v;
        }
        if let Some(v) = o.branch {
            self.radial.branch = v;
        }
    }

    pub fn spacetime(&self) -> Result<SpacetimeParams, CliError> {
        SpacetimeParams::new(self.params.mass, self.params.a, self.params.charge)
            .map_err(|e| config_error("params", e.to_string()))
    }

    /// Field-level checks that do not need any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.spacetime()?;
        if let Some(t) = self.tol {
            use kndirac::radial_solver::{MAX_TOL, MIN_TOL};
            if !(MIN_TOL..=MAX_TOL).contains(&t) {
                return Err(config_error("tol", format!("{t} outside [{MIN_TOL:e}, {MAX_TOL:e}]")));
            }
        }
        if self.modes.is_empty() {
            return Err(config_error("modes", "at least one mode is required"));
        }
        for (i, m) in self.modes.iter().enumerate() {
            ModeParams::new(m.omega, m.k, m.mass, m.xi.unwrap_or(0.0))
                .map_err(|e| config_error(&format!("modes[{i}]"), e.to_string()))?;
            if m.branch_index == 0 {
                return Err(config_error(&format!("modes[{i}].branch_index"), "branch indices are nonzero"));
            }
        }
        let r = &self.radial;
        if !(r.rstar_min.is_finite() && r.rstar_max.is_finite() && r.rstar_min < r.rstar_max) {
            return Err(config_error("radial", "need finite rstar_min < rstar_max"));
        }
        if r.samples < 2 {
            return Err(config_error("radial.samples", "need at least 2 samples"));
        }
        let g = &self.angular;
        if g.count == 0 || g.count > g.n {
            return Err(config_error("angular.count", format!("need 1 ≤ count ≤ n = {}", g.n)));
        }
        if g.theta_samples < 2 {
            return Err(config_error("angular.theta_samples", "need at least 2 samples"));
        }
        if let Some((a, b, n)) = g.sweep {
            if !(a.is_finite() && b.is_finite()) || n < 2 {
                return Err(config_error("angular.sweep", "need finite endpoints and at least 2 samples"));
            }
        }
        if self.verify.points == 0 {
            return Err(config_error("verify.points", "need at least one point"));
        }
        let s = &self.asymptotics;
        if !(s.u_end > 0.0 && s.u_start > s.u_end) {
            return Err(config_error("asymptotics", "need u_start > u_end > 0"));
        }
        if s.samples < 8 {
            return Err(config_error("asymptotics.samples", "need at least 8 samples"));
        }
        if !(s.spacing_over_alpha > 0.0 && s.end_over_alpha > 0.0) {
            return Err(config_error("asymptotics", "spacing_over_alpha and end_over_alpha must be positive"));
        }
        Ok(())
    }
}
