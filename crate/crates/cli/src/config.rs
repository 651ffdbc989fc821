//! Run configuration: a JSON file layered under command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use bipoisson::trajectory::{Construction, SimulationConfig};
use bipoisson::verify::{Suite, SuiteConfig};
use bipoisson::{reduce_params, ProcessParams, Reduction, Tolerances};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every knob of every command. Fields a command does not use are ignored
/// by it; unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Command the file is meant for. When set it must match the one invoked.
    pub command: Option<String>,
    /// `θ`. Alone it is the canonical parameter; with `eta` the pair is
    /// reduced to `θ* = √(ηθ)`.
    pub theta: Option<f64>,
    pub eta: Option<f64>,
    pub seed: u64,
    pub horizon: f64,
    pub window: f64,
    pub k_max: u64,
    pub construction: Construction,
    pub grid_points: usize,
    pub events: Option<PathBuf>,
    pub grid: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub suite: Option<Suite>,
    pub samples: Option<u64>,
    pub moment_samples: Option<u64>,
    pub repetitions: Option<u64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub u: Option<f64>,
    pub z: Option<f64>,
    pub z_u: Option<f64>,
    pub mass_max: Option<u64>,
    pub times: Vec<f64>,
    pub args: Vec<f64>,
    pub tolerances: Option<Tolerances>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimulationConfig::default();
        Self {
            command: None,
            theta: None,
            eta: None,
            seed: 42,
            horizon: sim.horizon,
            window: sim.window,
            k_max: sim.k_max,
            construction: Construction::Forward,
            grid_points: 301,
            events: None,
            grid: None,
            report: None,
            suite: None,
            samples: None,
            moment_samples: None,
            repetitions: None,
            s: None,
            t: None,
            u: None,
            z: None,
            z_u: None,
            mass_max: None,
            times: Vec::new(),
            args: Vec::new(),
            tolerances: None,
        }
    }
}

/// Parameters after the optional `(η, θ)` reduction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolvedParams {
    pub params: ProcessParams,
    /// Present iff `eta` was given.
    pub reduction: Option<Reduction>,
}

impl RunConfig {
    /// Defaults, overlaid by the file at `path` if any.
    pub fn load(path: Option<&Path>, command: &str) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        if let Some(c) = &config.command {
            if c != command {
                return Err(CliError::Usage(format!(
                    "config {} is for command {c:?}, not {command:?}",
                    path.display()
                )));
            }
        }
        Ok(config)
    }

    pub fn resolve_params(&self) -> Result<ResolvedParams, CliError> {
        let usage = |e: bipoisson::KernelError| CliError::Usage(e.to_string());
        let (params, reduction) = match (self.eta, self.theta) {
            (None, theta) => (
                ProcessParams::new(theta.unwrap_or(1.0)).map_err(usage)?,
                None,
            ),
            (Some(eta), Some(theta)) => {
                let r = reduce_params(eta, theta).map_err(usage)?;
                (r.params, Some(r))
            }
            (Some(_), None) => return Err(CliError::Usage("--eta needs --theta".into())),
        };
        let params = match self.tolerances {
            Some(t) => params.with_tolerances(t),
            None => params,
        };
        Ok(ResolvedParams { params, reduction })
    }

    pub fn simulation(&self) -> Result<SimulationConfig, CliError> {
        let sim = SimulationConfig {
            horizon: self.horizon,
            window: self.window,
            k_max: self.k_max,
        };
        sim.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(sim)
    }

    /// Suite settings; sizes not given keep the suite defaults.
    pub fn suite_config(&self, theta: f64) -> SuiteConfig {
        let d = SuiteConfig::default();
        SuiteConfig {
            theta,
            seed: self.seed,
            samples: self.samples.unwrap_or(d.samples),
            moment_samples: self.moment_samples.unwrap_or(d.moment_samples),
            repetitions: self.repetitions.unwrap_or(d.repetitions),
            tolerances: self.tolerances.unwrap_or(d.tolerances),
            ..d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"theta": 0.5, "seed": 3}"#).unwrap();
        assert_eq!(c.theta, Some(0.5));
        assert_eq!(c.seed, 3);
        assert_eq!(c.horizon, 3.0);
        assert_eq!(c.window, 1e-6);
        assert_eq!(c.k_max, 1_000_000);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"thta": 1}"#).is_err());
    }

    #[test]
    fn eta_theta_pair_is_reduced() {
        let c = RunConfig {
            eta: Some(2.0),
            theta: Some(0.5),
            ..RunConfig::default()
        };
        let r = c.resolve_params().unwrap();
        assert_eq!(r.params.theta(), 1.0);
        let red = r.reduction.unwrap();
        assert_eq!(red.time_scale, 0.25);
        assert_eq!(red.space_scale, 2.0);
        assert!(!red.negate);
    }

    #[test]
    fn eta_alone_is_a_usage_error() {
        let c = RunConfig {
            eta: Some(2.0),
            ..RunConfig::default()
        };
        assert!(matches!(c.resolve_params(), Err(CliError::Usage(_))));
    }

    #[test]
    fn config_for_another_command_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"command": "verify"}"#).unwrap();
        assert!(RunConfig::load(Some(&path), "verify").is_ok());
        assert!(matches!(
            RunConfig::load(Some(&path), "simulate"),
            Err(CliError::Usage(_))
        ));
    }
}
