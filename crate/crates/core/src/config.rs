//! Run configuration: a flat TOML table with optional `key=value` overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::driver::{EllipticityCheck, MarchOptions, SigmaPolicy};
use crate::error::{Error, Result};
use crate::linalg::{SolverMethod, SolverOptions};
use crate::problems::{builtin, ProblemDefinition, ProblemParams};
use crate::scalar::Real;

/// `sigma = "theorem1" | "zero" | <number>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSetting {
    Value(f64),
    Name(String),
}

/// All keys accepted in a run configuration file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub nu: Option<f64>,
    pub t_final: Option<f64>,
    /// Checked against the problem's dimension when given.
    pub dim: Option<usize>,
    #[serde(default = "default_level")]
    pub level: u32,
    pub h0: Option<f64>,
    /// Number of slabs; exclusive with `dt`.
    pub slabs: Option<usize>,
    pub dt: Option<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: SigmaSetting,
    #[serde(default = "default_solver")]
    pub solver: SolverMethod,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_maxit")]
    pub maxit: usize,
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    #[serde(default = "default_band_factor")]
    pub band_factor: f64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "yes")]
    pub vtk: bool,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub json: bool,
    pub matrix_dump: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Random vectors of the per-slab ellipticity witness (0: off).
    #[serde(default)]
    pub ellipticity_vectors: usize,
    pub level_min: Option<u32>,
    pub level_max: Option<u32>,
}

fn default_level() -> u32 {
    2
}
fn default_sigma() -> SigmaSetting {
    SigmaSetting::Name("theorem1".into())
}
fn default_solver() -> SolverMethod {
    SolverMethod::Gmres
}
fn default_tol() -> f64 {
    1e-10
}
fn default_maxit() -> usize {
    5000
}
fn default_restart() -> usize {
    50
}
fn default_quad_order() -> usize {
    2
}
fn default_band_factor() -> f64 {
    1.0
}
fn default_threads() -> usize {
    1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn yes() -> bool {
    true
}

const DEFAULT_SLABS: usize = 8;

impl RunConfig {
    /// Parses TOML text, applies `key=value` overrides and validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        for o in overrides {
            let (key, value) = parse_override(o)?;
            table.insert(key, value);
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file.
    pub fn from_file(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(Error::Config(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        if !crate::problems::BUILTIN_NAMES.contains(&self.problem.as_str()) {
            return Err(Error::Config(format!(
                "unknown problem '{}' (known: {})",
                self.problem,
                crate::problems::BUILTIN_NAMES.join(", ")
            )));
        }
        if let Some(nu) = self.nu {
            if !(nu.is_finite() && nu >= 0.0) {
                return Err(Error::Config(format!("nu must be >= 0, got {nu}")));
            }
        }
        positive("t_final", self.t_final)?;
        positive("h0", self.h0)?;
        positive("dt", self.dt)?;
        positive("tol", Some(self.tol))?;
        positive("band_factor", Some(self.band_factor))?;
        if let Some(d) = self.dim {
            if d != 2 && d != 3 {
                return Err(Error::Config(format!("dim must be 2 or 3, got {d}")));
            }
        }
        if self.level < 1 {
            return Err(Error::Config("level must be >= 1".into()));
        }
        if self.slabs == Some(0) {
            return Err(Error::Config("slabs must be positive".into()));
        }
        if self.slabs.is_some() && self.dt.is_some() {
            return Err(Error::Config("give either slabs or dt, not both".into()));
        }
        if self.maxit == 0 || self.restart == 0 {
            return Err(Error::Config("maxit and restart must be positive".into()));
        }
        if !(1..=6).contains(&self.quad_order) {
            return Err(Error::Config(format!("quad_order must be in 1..=6, got {}", self.quad_order)));
        }
        self.sigma_policy()?;
        if let (Some(a), Some(b)) = (self.level_min, self.level_max) {
            if b < a {
                return Err(Error::Config(format!("empty level range {a}..={b}")));
            }
        }
        Ok(())
    }

    pub fn sigma_policy(&self) -> Result<SigmaPolicy> {
        match &self.sigma {
            SigmaSetting::Value(v) if v.is_finite() && *v >= 0.0 => Ok(SigmaPolicy::Explicit(*v)),
            SigmaSetting::Value(v) => Err(Error::Config(format!("sigma must be >= 0, got {v}"))),
            SigmaSetting::Name(s) => match s.to_ascii_lowercase().as_str() {
                "theorem1" => Ok(SigmaPolicy::Theorem1),
                "zero" => Ok(SigmaPolicy::Zero),
                other => other
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .map(SigmaPolicy::Explicit)
                    .ok_or_else(|| Error::Config(format!("sigma must be 'theorem1', 'zero' or a number >= 0, got '{s}'"))),
            },
        }
    }

    pub fn problem_params<T: Real>(&self) -> ProblemParams<T> {
        ProblemParams { nu: self.nu.map(T::lit), t_final: self.t_final.map(T::lit) }
    }

    /// Slab count from `slabs` or `dt` (rounded up to cover `t_final`).
    pub fn slab_count(&self, t_final: f64) -> usize {
        match (self.slabs, self.dt) {
            (Some(n), _) => n,
            (None, Some(dt)) => ((t_final / dt) - 1e-9).ceil().max(1.0) as usize,
            (None, None) => DEFAULT_SLABS,
        }
    }

    pub fn march_options(&self, t_final: f64) -> Result<MarchOptions> {
        Ok(MarchOptions {
            level: self.level,
            h0: self.h0,
            slabs: self.slab_count(t_final),
            sigma: self.sigma_policy()?,
            solver: SolverOptions { method: self.solver, tol: self.tol, maxit: self.maxit, restart: self.restart },
            quad_order: self.quad_order,
            band_factor: self.band_factor,
            threads: self.threads,
            keep_geometry: true,
            ellipticity: (self.ellipticity_vectors > 0).then_some(EllipticityCheck {
                random_vectors: self.ellipticity_vectors,
                seed: self.seed,
                max_dofs: 1500,
            }),
            matrix_dump: self.matrix_dump.clone(),
        })
    }

    /// Level range of a convergence study: `level_min..=level_max`,
    /// defaulting to `level` at either end.
    pub fn level_range(&self) -> std::ops::RangeInclusive<u32> {
        self.level_min.unwrap_or(self.level)..=self.level_max.unwrap_or(self.level)
    }

    /// Catalog problem with the configured overrides; `dim` must match when given.
    pub fn build_problem<T: Real>(&self) -> Result<Box<dyn ProblemDefinition<T>>> {
        let p = builtin(&self.problem, &self.problem_params()).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(d) = self.dim {
            if d != p.info().dim {
                return Err(Error::Config(format!(
                    "dim = {d} does not match problem '{}' (dim {})",
                    self.problem,
                    p.info().dim
                )));
            }
        }
        Ok(p)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// `key=value`, where the value is read as a TOML value and otherwise as a string.
pub fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{s}' is not of the form key=value")))?;
    let key = key.trim().to_string();
    if key.is_empty() {
        return Err(Error::Config(format!("override '{s}' has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key, value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_toml_str("problem = \"stationary_circle\"", &[]).unwrap();
        assert_eq!(c.level, 2);
        assert_eq!(c.sigma_policy().unwrap(), SigmaPolicy::Theorem1);
        assert_eq!(c.slab_count(1.0), DEFAULT_SLABS);
    }

    #[test]
    fn missing_problem_is_reported_by_name() {
        let e = RunConfig::from_toml_str("level = 3", &[]).unwrap_err();
        assert!(matches!(&e, Error::Config(m) if m.contains("problem")), "{e}");
    }

    #[test]
    fn unknown_key_rejected() {
        let e = RunConfig::from_toml_str("problem = \"stationary_circle\"\nfoo = 1", &[]).unwrap_err();
        assert!(matches!(&e, Error::Config(m) if m.contains("foo")), "{e}");
    }

    #[test]
    fn overrides_win_over_file() {
        let c = RunConfig::from_toml_str(
            "problem = \"stationary_circle\"\nlevel = 2",
            &["level=4".into(), "sigma=0.5".into(), "solver=direct".into()],
        )
        .unwrap();
        assert_eq!(c.level, 4);
        assert_eq!(c.sigma_policy().unwrap(), SigmaPolicy::Explicit(0.5));
        assert_eq!(c.solver, SolverMethod::Direct);
    }

    #[test]
    fn invalid_values_rejected() {
        for bad in ["dt = -1.0", "slabs = 0", "sigma = \"huge\"", "sigma = -1.0", "level_min = 3\nlevel_max = 2"] {
            let text = format!("problem = \"stationary_circle\"\n{bad}");
            assert!(matches!(RunConfig::from_toml_str(&text, &[]), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn dt_gives_slab_count() {
        let c = RunConfig::from_toml_str("problem = \"stationary_circle\"\ndt = 0.125", &[]).unwrap();
        assert_eq!(c.slab_count(1.0), 8);
    }
}
