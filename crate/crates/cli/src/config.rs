//! Run configuration: a JSON document mirrored by command-line flags, the
//! flags taking precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qcavity_core::series::{required_terms, SeriesOptions};
use qcavity_core::{CavityParams, Method, Platform};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Solver selection, including deterministic automatic resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    Auto,
    Dde,
    FullChain,
    Series,
    Spectral,
    SpectralMain,
    Approx,
    Detuned,
}

impl MethodChoice {
    pub fn method(self) -> Option<Method> {
        Some(match self {
            MethodChoice::Auto => return None,
            MethodChoice::Dde => Method::Dde,
            MethodChoice::FullChain => Method::FullChain,
            MethodChoice::Series => Method::Series,
            MethodChoice::Spectral => Method::Spectral,
            MethodChoice::SpectralMain => Method::SpectralMain,
            MethodChoice::Approx => Method::Approx,
            MethodChoice::Detuned => Method::Detuned,
        })
    }
}

impl FromStr for MethodChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(MethodChoice::Auto);
        }
        let m: Method = s.parse()?;
        Ok(match m {
            Method::Dde => MethodChoice::Dde,
            Method::FullChain => MethodChoice::FullChain,
            Method::Series => MethodChoice::Series,
            Method::Spectral => MethodChoice::Spectral,
            Method::SpectralMain => MethodChoice::SpectralMain,
            Method::Approx => MethodChoice::Approx,
            Method::Detuned => MethodChoice::Detuned,
        })
    }
}

impl fmt::Display for MethodChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.method() {
            Some(m) => f.write_str(m.label()),
            None => f.write_str("auto"),
        }
    }
}

/// A concrete method together with why it was chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub method: Method,
    pub reason: String,
}

/// `auto` picks the series when its term count stays within the limit and
/// the delay integrator otherwise.
pub fn resolve_method(choice: MethodChoice, params: &CavityParams, t_max: f64) -> Resolution {
    match choice.method() {
        Some(method) => Resolution {
            method,
            reason: "requested".into(),
        },
        None => {
            let k = required_terms(params.delay_tau, t_max);
            let limit = SeriesOptions::default().k_limit;
            if k <= limit {
                Resolution {
                    method: Method::Series,
                    reason: format!("auto: {k} series terms <= limit {limit}"),
                }
            } else {
                Resolution {
                    method: Method::Dde,
                    reason: format!("auto: {k} series terms > limit {limit}"),
                }
            }
        }
    }
}

/// Cavity length given in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalLength {
    /// Waveguide decay rate γ in 1/s.
    pub gamma_rate: f64,
    /// Mirror separation d in metres.
    pub distance: f64,
    /// Group velocity v_g in m/s.
    pub group_velocity: f64,
}

impl PhysicalLength {
    pub fn tau(&self) -> Result<f64> {
        let tau = self.gamma_rate * self.distance / self.group_velocity;
        if !(tau.is_finite() && tau > 0.0) {
            return Err(CliError::config(
                "gamma_rate * distance / group_velocity must be positive and finite",
            ));
        }
        Ok(tau)
    }
}

/// Cavity parameters as given by the user; resolved against a preset if any.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamSpec {
    pub preset: Option<String>,
    pub n_atoms: Option<u32>,
    pub delay_tau: Option<f64>,
    pub physical: Option<PhysicalLength>,
    pub phase_offset: Option<f64>,
    pub env_rate: Option<f64>,
}

impl ParamSpec {
    /// Fields set in `other` replace those here.
    pub fn merge(&mut self, other: &ParamSpec) {
        macro_rules! take {
            ($($f:ident),*) => { $(if other.$f.is_some() { self.$f = other.$f.clone(); })* };
        }
        take!(preset, n_atoms, delay_tau, physical, phase_offset, env_rate);
    }

    pub fn platform(&self) -> Result<Option<Platform>> {
        self.preset
            .as_deref()
            .map(|s| s.parse::<Platform>().map_err(CliError::from))
            .transpose()
    }

    /// The delay alone, for quantities that do not depend on N.
    pub fn tau(&self) -> Result<f64> {
        if self.delay_tau.is_some() && self.physical.is_some() {
            return Err(CliError::config(
                "give either delay_tau or physical lengths, not both",
            ));
        }
        match (self.delay_tau, &self.physical, self.platform()?) {
            (Some(t), _, _) => Ok(t),
            (None, Some(p), _) => p.tau(),
            (None, None, Some(p)) => Ok(p.preset().tau),
            (None, None, None) => Err(CliError::config(
                "delay_tau (or a preset / physical lengths) is required",
            )),
        }
    }

    /// A preset supplies τ, γ₀ and (at its critical size) N; explicit values win.
    pub fn resolve(&self) -> Result<CavityParams> {
        let preset = self.platform()?.map(|p| p.preset());
        let tau = self.tau()?;
        let n_atoms = match (self.n_atoms, &preset) {
            (Some(n), _) => n,
            (None, Some(p)) => {
                let n = p.critical_n().round();
                if !(n >= 1.0 && n <= u32::MAX as f64) {
                    return Err(CliError::config("preset critical size is out of range"));
                }
                n as u32
            }
            (None, None) => return Err(CliError::config("n_atoms (or a preset) is required")),
        };
        let env_rate = self
            .env_rate
            .or(preset.map(|p| p.env_rate()))
            .unwrap_or(0.0);
        let mut p = CavityParams::new(n_atoms, tau)?;
        p = p.with_phase(self.phase_offset.unwrap_or(0.0))?;
        p = p.with_env_rate(env_rate)?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub t_max: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            t_max: 3.0,
            n_points: 601,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(CliError::config("t_max must be positive and finite"));
        }
        if self.n_points < 2 {
            return Err(CliError::config("n_points must be at least 2"));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        qcavity_core::trajectory::uniform_grid(self.t_max, self.n_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub svg: Option<PathBuf>,
}

/// The whole run description.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamSpec,
    pub method: Option<MethodChoice>,
    pub grid: Option<GridSpec>,
    pub outputs: OutputSpec,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_fills_missing_fields() {
        let spec = ParamSpec {
            preset: Some("cesium".into()),
            ..Default::default()
        };
        let p = spec.resolve().unwrap();
        assert_eq!(p.n_atoms, 1887);
        assert_eq!(p.delay_tau, 5.3e-4);
        assert!((p.env_rate - 2.0 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn explicit_values_override_preset() {
        let spec = ParamSpec {
            preset: Some("qd".into()),
            n_atoms: Some(10),
            env_rate: Some(0.0),
            ..Default::default()
        };
        let p = spec.resolve().unwrap();
        assert_eq!((p.n_atoms, p.env_rate), (10, 0.0));
    }

    #[test]
    fn physical_lengths() {
        let spec = ParamSpec {
            n_atoms: Some(100),
            physical: Some(PhysicalLength {
                gamma_rate: 1e7,
                distance: 1e-3,
                group_velocity: 1e8,
            }),
            ..Default::default()
        };
        assert!((spec.resolve().unwrap().delay_tau - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn auto_resolution() {
        let p = CavityParams::new(100, 0.5).unwrap();
        assert_eq!(
            resolve_method(MethodChoice::Auto, &p, 3.0).method,
            Method::Series
        );
        let p = CavityParams::new(100, 0.01).unwrap();
        assert_eq!(
            resolve_method(MethodChoice::Auto, &p, 3.0).method,
            Method::Dde
        );
    }

    #[test]
    fn config_round_trip_and_unknown_fields() {
        let text = r#"{"params": {"n_atoms": 100, "delay_tau": 0.01}, "method": "spectral-main",
                       "grid": {"t_max": 2.0, "n_points": 11}, "seed": 7}"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.method, Some(MethodChoice::SpectralMain));
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
