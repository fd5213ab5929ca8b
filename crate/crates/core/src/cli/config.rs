//! Flat `key = value` run configuration and its merge with command-line
//! flags (flags win).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::CliError;

/// Keys accepted in a config file.
pub const KNOWN_KEYS: &[&str] = &[
    "trap.dc_voltage_V",
    "trap.ac_amplitude_V",
    "trap.omega_rad_per_s",
    "trap.r0_m",
    "trap.charge_C",
    "trap.mass_kg",
    "mathieu.a",
    "mathieu.q",
    "mathieu.omega_rad_per_s",
    "csl.lambda_per_s",
    "csl.rc_m",
    "csl.radius_m",
    "csl.shape_factor",
    "policy.method",
    "policy.t_start_s",
    "policy.ic_scale_x_m",
    "policy.bound_periods",
    "policy.growth_limit",
    "integrator.rel_tol",
    "integrator.abs_tol_x_m",
    "integrator.abs_tol_v_m_per_s",
    "grid.nx",
    "grid.ny",
    "grid.a_min",
    "grid.a_max",
    "grid.q_min",
    "grid.q_max",
    "grid.log10_rc_min",
    "grid.log10_rc_max",
    "grid.log10_lambda_min",
    "grid.log10_lambda_max",
    "run.threads",
    "output.out",
    "output.svg",
];

/// Parsed config file. Blank lines and `#` comments are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            let value = value.trim().trim_matches('"');
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn has_prefix(&self, prefix: &str) -> bool {
        self.entries.keys().any(|k| k.starts_with(prefix))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }
}

/// `flag`, else config `key`, else `None`.
pub fn pick<T: FromStr + Copy>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>, CliError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}
