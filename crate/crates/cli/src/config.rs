//! JSON run configuration.

use std::io::Read;
use std::path::{Path, PathBuf};

use beatlaser::{FockConfig, Params, Phase};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsConfig,
    #[serde(default)]
    pub fock: Option<FockSection>,
    #[serde(default)]
    pub integration: Integration,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub mc: Option<McSection>,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub units: Units,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub g: f64,
    pub r_a: f64,
    pub gamma: f64,
    #[serde(rename = "Gamma")]
    pub big_gamma: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub kappa: f64,
    pub eta: f64,
    #[serde(default)]
    pub phase: PhaseConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum PhaseConfig {
    Averaged { theta: f64 },
    Fixed { phi: f64 },
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig::Averaged { theta: 0.0 }
    }
}

impl ParamsConfig {
    pub fn to_params(&self) -> Params {
        Params {
            g: self.g,
            r_a: self.r_a,
            gamma: self.gamma,
            big_gamma: self.big_gamma,
            omega: self.omega,
            kappa: self.kappa,
            eta: self.eta,
            phase: match self.phase {
                PhaseConfig::Averaged { theta } => Phase::GaussianAveraged { theta },
                PhaseConfig::Fixed { phi } => Phase::Fixed { phi },
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockSection {
    #[serde(default = "default_n_max")]
    pub n_max_a: usize,
    #[serde(default = "default_n_max")]
    pub n_max_b: usize,
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: f64,
    /// Step size; the library heuristic when absent.
    #[serde(default)]
    pub dt: Option<f64>,
}

fn default_n_max() -> usize {
    8
}

fn default_boundary_tol() -> f64 {
    1e-2
}

impl Default for FockSection {
    fn default() -> Self {
        Self { n_max_a: 8, n_max_b: 8, boundary_tol: 1e-2, dt: None }
    }
}

impl FockSection {
    pub fn to_config(&self) -> FockConfig {
        FockConfig { n_max_a: self.n_max_a, n_max_b: self.n_max_b, boundary_tol: self.boundary_tol }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integration {
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Output spacing; defaults to `dt`.
    #[serde(default)]
    pub sample: Option<f64>,
}

fn default_t_final() -> f64 {
    20.0
}

fn default_dt() -> f64 {
    0.01
}

impl Default for Integration {
    fn default() -> Self {
        Self { t_final: default_t_final(), dt: default_dt(), sample: None }
    }
}

impl Integration {
    /// Number of integration steps between output rows.
    pub fn sample_stride(&self) -> usize {
        let s = self.sample.unwrap_or(self.dt);
        ((s / self.dt).round() as usize).max(1)
    }

    /// Output times `0, s, 2s, …` ending exactly at `t_final`.
    pub fn sample_times(&self) -> Vec<f64> {
        let step = self.dt * self.sample_stride() as f64;
        let n = (self.t_final / step + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
        if self.t_final - times[n] > 1e-9 * step {
            times.push(self.t_final);
        } else {
            times[n] = self.t_final;
        }
        times
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "Omega")]
    Omega,
    #[serde(rename = "kappa")]
    Kappa,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub variable: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(
                |i| {
                    if i + 1 == n {
                        self.stop
                    } else {
                        self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64
                    }
                },
            )
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(flatten)]
    pub first: Axis,
    #[serde(default)]
    pub second: Option<Axis>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    /// Step size; `integration.dt` when absent.
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

/// Optional rescaling of the inputs.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    /// Divide every rate by γ and multiply every time by γ before running.
    #[serde(default)]
    pub normalize_by_gamma: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.normalize();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => {
                std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?
            }
            None => {
                let mut s = String::new();
                std::io::stdin()
                    .read_to_string(&mut s)
                    .map_err(|e| CliError::Config(format!("cannot read stdin: {e}")))?;
                s
            }
        };
        Self::from_json(&text)
    }

    fn normalize(&mut self) {
        if !self.units.normalize_by_gamma {
            return;
        }
        let gamma = self.params.gamma;
        if !(gamma > 0.0 && gamma.is_finite()) {
            // Left for validation to report.
            return;
        }
        let p = &mut self.params;
        for rate in [&mut p.g, &mut p.r_a, &mut p.gamma, &mut p.big_gamma, &mut p.omega, &mut p.kappa] {
            *rate /= gamma;
        }
        let it = &mut self.integration;
        it.t_final *= gamma;
        it.dt *= gamma;
        if let Some(s) = it.sample.as_mut() {
            *s *= gamma;
        }
        if let Some(f) = self.fock.as_mut() {
            if let Some(dt) = f.dt.as_mut() {
                *dt *= gamma;
            }
        }
        if let Some(mc) = self.mc.as_mut() {
            if let Some(dt) = mc.dt.as_mut() {
                *dt *= gamma;
            }
        }
        if let Some(sw) = self.sweep.as_mut() {
            for axis in std::iter::once(&mut sw.first).chain(sw.second.as_mut()) {
                if matches!(axis.variable, SweepVar::Omega | SweepVar::Kappa) {
                    axis.start /= gamma;
                    axis.stop /= gamma;
                }
            }
        }
        self.units.normalize_by_gamma = false;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.to_params().validate()?;
        let it = &self.integration;
        if !(it.t_final.is_finite() && it.t_final >= 0.0) {
            return Err(CliError::Config(format!("integration.t_final must be >= 0, got {}", it.t_final)));
        }
        if !(it.dt.is_finite() && it.dt > 0.0) {
            return Err(CliError::Config(format!("integration.dt must be > 0, got {}", it.dt)));
        }
        if let Some(s) = it.sample {
            if !(s.is_finite() && s > 0.0) {
                return Err(CliError::Config(format!("integration.sample must be > 0, got {s}")));
            }
        }
        if let Some(f) = &self.fock {
            f.to_config().validate()?;
            if let Some(dt) = f.dt {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(CliError::Config(format!("fock.dt must be > 0, got {dt}")));
                }
            }
        }
        if let Some(sw) = &self.sweep {
            let axes: Vec<&Axis> = std::iter::once(&sw.first).chain(sw.second.as_ref()).collect();
            for a in &axes {
                if a.steps < 2 {
                    return Err(CliError::Config(format!("sweep steps must be >= 2, got {}", a.steps)));
                }
                if !(a.start.is_finite() && a.stop.is_finite()) {
                    return Err(CliError::Config("sweep bounds must be finite".into()));
                }
                if a.variable == SweepVar::Theta && matches!(self.params.phase, PhaseConfig::Fixed { .. }) {
                    return Err(CliError::Config("a theta sweep needs the averaged phase mode".into()));
                }
            }
            if axes.len() == 2 && axes[0].variable == axes[1].variable {
                return Err(CliError::Config("the two sweep axes must differ".into()));
            }
        }
        if let Some(mc) = &self.mc {
            if mc.n_traj < beatlaser::langevin::MIN_TRAJECTORIES {
                return Err(CliError::Config(format!(
                    "mc.n_traj must be at least {}, got {}",
                    beatlaser::langevin::MIN_TRAJECTORIES,
                    mc.n_traj
                )));
            }
            if let Some(dt) = mc.dt {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(CliError::Config(format!("mc.dt must be > 0, got {dt}")));
                }
            }
        }
        Ok(())
    }
}

/// Parameters with one sweep variable overridden.
pub fn with_value(base: &ParamsConfig, var: SweepVar, value: f64) -> ParamsConfig {
    let mut p = *base;
    match var {
        SweepVar::Eta => p.eta = value,
        SweepVar::Omega => p.omega = value,
        SweepVar::Kappa => p.kappa = value,
        SweepVar::Theta => p.phase = PhaseConfig::Averaged { theta: value },
    }
    p
}
