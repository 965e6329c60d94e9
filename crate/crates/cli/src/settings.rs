//! Flag values layered from the command line over a config file.
//!
//! The config file is the one given with `--config`, or else the one named by
//! `CLIMB_TP_CONFIG`. It uses the same `key = value` syntax as the other
//! configuration files, with keys spelled like the long flags but with
//! underscores (`initial_alt = 2000`). Relative paths in it are resolved
//! against the file's directory. Flags given on the command line win.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use climb_core::dataio::config::KeyValues;

use crate::error::{CliError, CliResult};

pub const CONFIG_ENV: &str = "CLIMB_TP_CONFIG";

/// Keys understood in the config file, across all subcommands.
const KNOWN_KEYS: [&str; 26] = [
    "aircraft",
    "bounds",
    "online_config",
    "seed",
    "jobs",
    "params",
    "initial_alt",
    "initial_cas",
    "cruise_fl",
    "dt",
    "horizon",
    "out",
    "obs",
    "budget",
    "population",
    "no_filter",
    "present",
    "report",
    "table",
    "dataset",
    "slices",
    "offsets",
    "n",
    "spec",
    "masses",
    "sigma0",
];

#[derive(Debug, Default)]
pub struct Settings {
    file: Option<(PathBuf, KeyValues)>,
}

impl Settings {
    /// Reads the explicit config file, or the one from the environment.
    pub fn load(explicit: Option<&Path>) -> CliResult<Self> {
        let path = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from),
        };
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let kv = KeyValues::load(&path).map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
        kv.unknown_keys(&KNOWN_KEYS);
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        log::debug!("using config file {}", path.display());
        Ok(Self { file: Some((dir, kv)) })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.file.as_ref().and_then(|(_, kv)| kv.get(key))
    }

    /// Command-line value, else the parsed config entry.
    pub fn value<T>(&self, cli: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        self.raw(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key {key}: cannot parse {s:?}: {e}")))
            })
            .transpose()
    }

    pub fn or<T>(&self, cli: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.value(cli, key)?.unwrap_or(default))
    }

    pub fn required<T>(&self, cli: Option<T>, key: &str) -> CliResult<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.value(cli, key)?
            .ok_or_else(|| CliError::Usage(format!("missing required --{}", key.replace('_', "-"))))
    }

    pub fn path(&self, cli: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        cli.or_else(|| {
            let (dir, kv) = self.file.as_ref()?;
            kv.get(key).map(|p| dir.join(p))
        })
    }

    pub fn required_path(&self, cli: Option<PathBuf>, key: &str) -> CliResult<PathBuf> {
        self.path(cli, key)
            .ok_or_else(|| CliError::Usage(format!("missing required --{}", key.replace('_', "-"))))
    }

    /// A switch is on if given on the command line or set true in the file.
    pub fn switch(&self, cli: bool, key: &str) -> CliResult<bool> {
        if cli {
            return Ok(true);
        }
        match self.raw(key) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(CliError::Usage(format!(
                "config key {key}: expected true or false, got {other:?}"
            ))),
        }
    }

    /// Comma-separated numbers.
    pub fn list(&self, cli: Option<Vec<f64>>, key: &str) -> CliResult<Option<Vec<f64>>> {
        if cli.is_some() {
            return Ok(cli);
        }
        self.raw(key)
            .map(|s| climb_core::dataio::config::parse_f64_list(key, s).map_err(CliError::Config))
            .transpose()
    }

    /// Repeated `k=v` assignments; the file holds them comma-separated.
    pub fn assignments(&self, cli: Vec<String>, key: &str) -> Vec<String> {
        if !cli.is_empty() {
            return cli;
        }
        self.raw(key)
            .map(|s| {
                s.split(',')
                    .map(|a| a.trim().to_string())
                    .filter(|a| !a.is_empty())
                    .collect()
            })
            .unwrap_or_default()
    }
}
