//! TOML configuration: quadrature budgets, tolerances and bump parameters.

use g2hitchin::quadrature::{Method, QuadratureSpec};
use g2hitchin::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable naming the configuration file.
pub const CONFIG_ENV: &str = "G2HITCHIN_CONFIG";
/// Configuration file looked up in the working directory when neither a flag nor the variable is set.
pub const DEFAULT_CONFIG_FILE: &str = "g2hitchin.toml";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub quadrature: QuadratureConfig,
    pub bump: BumpConfig,
    pub tolerances: Tolerances,
    pub amplitude: AmplitudeConfig,
    pub unbounded: UnboundedConfig,
    pub saddle: SaddleConfig,
    pub coflow: CoflowConfig,
    pub glue: GlueConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// moment-reduction, radial-1d, monte-carlo or trapezoid.
    pub method: String,
    pub nodes: usize,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { method: "moment-reduction".into(), nodes: 48, samples: 200_000, seed: 1, tolerance: 1e-10 }
    }
}

impl QuadratureConfig {
    pub fn spec(&self) -> Result<QuadratureSpec> {
        let method = match self.method.as_str() {
            "moment-reduction" => Method::MomentReduction,
            "radial-1d" | "radial1d" => Method::Radial1d { nodes: self.nodes },
            "monte-carlo" => Method::MonteCarlo { samples: self.samples, seed: self.seed },
            "trapezoid" => Method::Trapezoid { nodes: self.nodes },
            other => {
                return Err(Error::Invalid(format!(
                    "unknown quadrature method '{other}' (moment-reduction, radial-1d, monte-carlo, trapezoid)"
                )))
            }
        };
        let spec = QuadratureSpec { method, tolerance: self.tolerance };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BumpConfig {
    /// Plateau fractions: f = 1 on [0, aη] and f = 0 on [bη, η].
    pub a: f64,
    pub b: f64,
    pub eta: f64,
}

impl Default for BumpConfig {
    fn default() -> Self {
        BumpConfig { a: 0.3, b: 0.8, eta: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative agreement of analytic and finite-difference second variations.
    pub finite_difference: f64,
    /// Step of the finite-difference second variation.
    pub fd_step: f64,
    /// Off-diagonal Gram entries of disjoint bumps.
    pub off_diagonal: f64,
    /// Lower bound −tol on pointwise volume rates along the coflow.
    pub volume_rate: f64,
    /// dΠ = ψ(t) − ψ(0) along the coflow.
    pub exactness: f64,
    /// Flat-ball saturation of the volume bound.
    pub saturation: f64,
    /// Glued form against ψ0 on the inner ball.
    pub agreement: f64,
    /// Rational-mode decompositions are exact; this applies to floating-point literals.
    pub decomposition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            finite_difference: 1e-4,
            fd_step: 1e-3,
            off_diagonal: 1e-12,
            volume_rate: 1e-9,
            exactness: 1e-10,
            saturation: 1e-12,
            agreement: 1e-12,
            decomposition: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplitudeConfig {
    /// Log grid of amplitudes for the finite-perturbation search.
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for AmplitudeConfig {
    fn default() -> Self {
        AmplitudeConfig { t_min: 1e-3, t_max: 1.0, points: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnboundedConfig {
    pub packing: String,
    pub rounds: usize,
    pub nu: f64,
    /// Amplitude grid relative to the bump radius.
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for UnboundedConfig {
    fn default() -> Self {
        UnboundedConfig { packing: "cubic-2".into(), rounds: 3, nu: 0.1, t_min: 1e-2, t_max: 1.0, points: 9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaddleConfig {
    pub k: usize,
    pub eta: f64,
}

impl Default for SaddleConfig {
    fn default() -> Self {
        SaddleConfig { k: 5, eta: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoflowConfig {
    pub grid: usize,
    pub s: f64,
    pub steps: usize,
    /// Time step; defaults to half the stability bound.
    pub dt: Option<f64>,
    pub cfl_factor: f64,
    pub period: f64,
    /// Highest retained Fourier mode; 0 keeps all.
    pub mode_cutoff: usize,
}

impl Default for CoflowConfig {
    fn default() -> Self {
        CoflowConfig { grid: 256, s: 1e-2, steps: 10, dt: None, cfl_factor: 0.1, period: 1.0, mode_cutoff: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlueConfig {
    pub delta: f64,
    /// Amplitude s of the closed perturbation ψ0 + s·2x¹dx¹²³⁴.
    pub s: f64,
    pub eta_floor: f64,
}

impl Default for GlueConfig {
    fn default() -> Self {
        GlueConfig { delta: 1e-2, s: 0.1, eta_floor: 1e-4 }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Config::from_toml(&text)
    }

    /// Path from the flag, else the environment variable, else `g2hitchin.toml` if present.
    pub fn resolve_path(flag: Option<&Path>, env: Option<&str>) -> Option<PathBuf> {
        if let Some(p) = flag {
            return Some(p.to_path_buf());
        }
        if let Some(e) = env.filter(|e| !e.is_empty()) {
            return Some(PathBuf::from(e));
        }
        let local = PathBuf::from(DEFAULT_CONFIG_FILE);
        local.exists().then_some(local)
    }
}
