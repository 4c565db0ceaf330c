//! Resolution of `--data` arguments.

use std::env;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use supermetric::data::generate_uniform;
use supermetric::Dataset;

use crate::CliError;

/// Environment variable naming the directory searched for relative dataset paths.
pub const DATA_DIR_VAR: &str = "SUPERMETRIC_DATA_DIR";

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// `synth:n,dim`: uniform points in the unit hypercube.
    Synthetic { n: usize, dim: usize },
    File(PathBuf),
}

impl FromStr for DataSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let Some(spec) = s.strip_prefix("synth:") else {
            return Ok(DataSource::File(PathBuf::from(s)));
        };
        let (n, dim) = spec.split_once(',').ok_or_else(|| format!("expected synth:n,dim, got `{s}`"))?;
        let n: usize = n.trim().parse().map_err(|_| format!("bad point count in `{s}`"))?;
        let dim: usize = dim.trim().parse().map_err(|_| format!("bad dimension in `{s}`"))?;
        if n == 0 || dim == 0 {
            return Err(format!("`{s}` must have positive size and dimension"));
        }
        Ok(DataSource::Synthetic { n, dim })
    }
}

impl DataSource {
    pub fn load(&self, seed: u64) -> Result<Dataset, CliError> {
        match self {
            DataSource::Synthetic { n, dim } => Ok(generate_uniform(*n, *dim, seed)),
            DataSource::File(p) => {
                let path = resolve(p).ok_or_else(|| {
                    CliError::Io(format!("dataset `{}` not found (searched the working directory and ${DATA_DIR_VAR})", p.display()))
                })?;
                Ok(Dataset::load_ascii(path)?)
            }
        }
    }
}

/// Finds `p` as given, then under `$SUPERMETRIC_DATA_DIR`, trying an
/// `.ascii` extension in both places.
pub fn resolve(p: &Path) -> Option<PathBuf> {
    let mut candidates = vec![p.to_path_buf(), p.with_extension("ascii")];
    if p.is_relative() {
        if let Some(dir) = env::var_os(DATA_DIR_VAR) {
            let dir = PathBuf::from(dir);
            candidates.push(dir.join(p));
            candidates.push(dir.join(p).with_extension("ascii"));
        }
    }
    candidates.into_iter().find(|c| c.is_file())
}

/// Loads a named dataset (such as `colors` or `nasa`) from
/// `$SUPERMETRIC_DATA_DIR`, or explains why it is unavailable.
pub fn load_named(name: &str) -> Result<Dataset, String> {
    let dir = env::var_os(DATA_DIR_VAR).ok_or_else(|| format!("dataset `{name}` not available: ${DATA_DIR_VAR} is unset"))?;
    let base = PathBuf::from(dir).join(name);
    let path = [base.with_extension("ascii"), base.clone()]
        .into_iter()
        .find(|c| c.is_file())
        .ok_or_else(|| format!("dataset `{name}` not available under {}", base.display()))?;
    Dataset::load_ascii(&path).map(|d| d.with_name(name)).map_err(|e| e.to_string())
}
