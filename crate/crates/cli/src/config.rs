use std::path::PathBuf;

use serde::Deserialize;

use crate::args::{Common, Format, GridSpec, ModeArg};
use crate::CliError;

pub const DEFAULT_M: usize = 12;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const SEED_ENV: &str = "CVTF_SEED";

/// Contents of a `--config` JSON file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<ModeArg>,
    pub xi: Option<f64>,
    pub xi_prime: Option<f64>,
    #[serde(rename = "E")]
    pub e: Option<f64>,
    #[serde(rename = "E_grid")]
    pub e_grid: Option<GridSpec>,
    pub xi_grid: Option<GridSpec>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub tol: Option<f64>,
    pub output_format: Option<Format>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &PathBuf) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Flags merged with the config file and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub mode: Option<ModeArg>,
    pub xi: Option<f64>,
    pub xi_prime: Option<f64>,
    pub e: Option<f64>,
    pub m: usize,
    /// `None` means each check keeps its own tolerance.
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: u64,
    pub file: FileConfig,
}

impl Settings {
    pub fn require_mode(&self) -> Result<ModeArg, CliError> {
        self.mode.ok_or_else(|| CliError::Usage("--mode is required".into()))
    }

    pub fn require_xi(&self) -> Result<f64, CliError> {
        self.xi.ok_or_else(|| CliError::Usage("--xi is required".into()))
    }

    pub fn tol_or_default(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }
}

/// Seed precedence: flag, then `CVTF_SEED`, then the config file, then the
/// library default.
pub fn resolve(common: &Common, env_seed: Option<&str>) -> Result<Settings, CliError> {
    let file = match &common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let env_seed = match env_seed {
        Some(s) => Some(
            s.trim()
                .parse::<u64>()
                .map_err(|e| CliError::Usage(format!("{SEED_ENV}={s:?}: {e}")))?,
        ),
        None => None,
    };
    let seed = common
        .seed
        .or(env_seed)
        .or(file.seed)
        .unwrap_or(cvtf_core::optimize::DEFAULT_SEED);
    let m = common.m.or(file.m).unwrap_or(DEFAULT_M);
    if m == 0 || m > cvtf_core::fock::MAX_TRUNCATION {
        return Err(CliError::Usage(format!(
            "--M must be in 1..={}",
            cvtf_core::fock::MAX_TRUNCATION
        )));
    }
    let tol = common.tol.or(file.tol);
    if let Some(t) = tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::Usage(format!("--tol {t} must be a finite non-negative number")));
        }
    }
    Ok(Settings {
        mode: common.mode.or(file.mode),
        xi: common.xi.or(file.xi),
        xi_prime: common.xi_prime.or(file.xi_prime),
        e: common.e.or(file.e),
        m,
        tol,
        out: common.out.clone(),
        format: common.format.or(file.output_format),
        seed,
        file,
    })
}
