//! Flat `key = value` run settings.
//!
//! ```text
//! # diffuser at a coarser resolution
//! case = diffuser
//! nx = 32
//! ny = 32
//! outer = 40
//! coupling = nodal
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Keys:
//! `case`, `nx`, `ny`, `outer`, `inner`, `eps`, `eta`, `dt`, `stab`,
//! `alpha0`, `beta`, `beta0`, `lambda0`, `seed`, `out_dir`, `vtk_every`,
//! `allow_unstable`, `coupling`, `lambda_frozen_per_outer`, `stop_tol`
//! (`none` disables the plateau stop), `stop_window`, `slack`, `policy`
//! (`abort` or `record`), `stokes_tol`, `cg_tol`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::coupling::Coupling;
use crate::error::{Error, Result};
use crate::optimizer::{DecayPolicy, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub case: String,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    /// Overrides the case's volume fraction.
    pub beta: Option<f64>,
    /// Overrides the seed of a random initial field.
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    /// Write fields every this many outer iterations; 0 writes only the last.
    pub vtk_every: usize,
    pub run: RunConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            case: "diffuser".into(),
            nx: None,
            ny: None,
            beta: None,
            seed: None,
            out_dir: PathBuf::from("out"),
            vtk_every: 0,
            run: RunConfig::default(),
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid boolean '{value}' for '{key}'"
        ))),
    }
}

impl Settings {
    /// Sets one key. Keys accept `-` in place of `_`.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let value = value.trim();
        let r = &mut self.run;
        match key.as_str() {
            "case" => self.case = value.to_string(),
            "nx" => self.nx = Some(num(&key, value)?),
            "ny" => self.ny = Some(num(&key, value)?),
            "beta" => self.beta = Some(num(&key, value)?),
            "seed" => self.seed = Some(num(&key, value)?),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "vtk_every" => self.vtk_every = num(&key, value)?,
            "outer" => r.outer = num(&key, value)?,
            "inner" => r.inner = num(&key, value)?,
            "eps" => r.eps = num(&key, value)?,
            "eta" => r.eta = num(&key, value)?,
            "dt" => r.dt = num(&key, value)?,
            "stab" => r.stab = Some(num(&key, value)?),
            "alpha0" => r.alpha0 = num(&key, value)?,
            "beta0" => r.beta0 = num(&key, value)?,
            "lambda0" => r.lambda0 = num(&key, value)?,
            "allow_unstable" => r.allow_unstable = flag(&key, value)?,
            "lambda_frozen_per_outer" => r.lambda_frozen_per_outer = flag(&key, value)?,
            "coupling" => {
                r.coupling = Coupling::parse(value).ok_or_else(|| {
                    Error::Config(format!("unknown coupling '{value}' (nodal or quadrature)"))
                })?
            }
            "stop_tol" => {
                r.stop_tol = match value.to_ascii_lowercase().as_str() {
                    "none" | "off" => None,
                    _ => Some(num(&key, value)?),
                }
            }
            "stop_window" => r.stop_window = num(&key, value)?,
            "slack" => r.slack = num(&key, value)?,
            "policy" => {
                r.policy = match value.to_ascii_lowercase().as_str() {
                    "abort" => DecayPolicy::Abort,
                    "record" => DecayPolicy::Record,
                    _ => {
                        return Err(Error::Config(format!(
                            "unknown policy '{value}' (abort or record)"
                        )))
                    }
                }
            }
            "stokes_tol" => r.stokes_tol = num(&key, value)?,
            "cg_tol" => r.cg_tol = num(&key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.apply(key, value).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", i + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_str(&text)
    }
}
