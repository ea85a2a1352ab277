use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "cvtf", version, about = "Energy-constrained fidelity of noisy CV teleportation channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed form, baselines and bounds at a single point.
    Point(PointArgs),
    /// Tabulate fidelities over a grid of energies (and optionally noise).
    Sweep(SweepArgs),
    /// Run the certification suite and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Uni,
    BiEqual,
    BiAsym,
    Gap,
}

impl ModeArg {
    pub fn name(self) -> &'static str {
        match self {
            ModeArg::Uni => "uni",
            ModeArg::BiEqual => "bi-equal",
            ModeArg::BiAsym => "bi-asym",
            ModeArg::Gap => "gap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn validate(&self, name: &str) -> Result<(), String> {
        if self.count == 0 {
            return Err(format!("{name} grid is empty"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start > self.stop {
            return Err(format!("{name} grid needs finite start <= stop"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| if k + 1 == self.count { self.stop } else { self.start + step * k as f64 })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:count, got {s:?}"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
        let count = parts[2].trim().parse::<usize>().map_err(|e| format!("{:?}: {e}", parts[2]))?;
        Ok(GridSpec { start: num(parts[0])?, stop: num(parts[1])?, count })
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long = "xi-prime")]
    pub xi_prime: Option<f64>,
    /// Mean photon number per mode.
    #[arg(long = "E")]
    pub e: Option<f64>,
    /// Truncation index for sandwich bounds and the optimizer [default: 12].
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Comparison tolerance [default: 1e-8].
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Optimizer seed; overrides CVTF_SEED and the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with default values; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub common: Common,
    /// Report numerical values instead of failing outside the closed-form regime.
    #[arg(long)]
    pub allow_out_of_regime: bool,
    /// Also run the optimizer and the Kraus oracle.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "E-grid")]
    pub e_grid: Option<GridSpec>,
    #[arg(long = "xi-grid")]
    pub xi_grid: Option<GridSpec>,
    /// Read E-grid values as fractions of the regime bound at each xi.
    #[arg(long = "E-relative")]
    pub e_relative: bool,
    /// Fill out-of-regime rows with optimizer values instead of empty cells.
    #[arg(long)]
    pub numeric_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Group {
    Oracle,
    LowerBound,
    Uni,
    Bi,
    Asym,
    Sandwich,
    Gap,
    Baselines,
    /// The literal three-case split for the asymmetric state. Not part of
    /// the default run.
    ThreeCase,
}

impl Group {
    pub const DEFAULT: [Group; 8] = [
        Group::Oracle,
        Group::LowerBound,
        Group::Uni,
        Group::Bi,
        Group::Asym,
        Group::Sandwich,
        Group::Gap,
        Group::Baselines,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Group::Oracle => "oracle",
            Group::LowerBound => "lower-bound",
            Group::Uni => "uni",
            Group::Bi => "bi",
            Group::Asym => "asym",
            Group::Sandwich => "sandwich",
            Group::Gap => "gap",
            Group::Baselines => "baselines",
            Group::ThreeCase => "three-case",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Run only these check groups.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub only: Vec<Group>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: GridSpec = "0:1:5".parse().unwrap();
        assert_eq!(g.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!("0:1".parse::<GridSpec>().is_err());
        assert!("a:1:2".parse::<GridSpec>().is_err());
        let g: GridSpec = "0.3:0.3:1".parse().unwrap();
        assert_eq!(g.points(), vec![0.3]);
        assert!("0:1:0".parse::<GridSpec>().unwrap().validate("E").is_err());
        assert!("1:0:3".parse::<GridSpec>().unwrap().validate("E").is_err());
    }

    #[test]
    fn cli_parses() {
        Cli::try_parse_from(["cvtf", "point", "--mode", "uni", "--xi", "0.1", "--E", "0.5"]).unwrap();
        Cli::try_parse_from(["cvtf", "sweep", "--mode", "gap", "--xi", "0.1", "--E-grid", "0:0.2:5"]).unwrap();
        Cli::try_parse_from(["cvtf", "verify", "--only", "gap,uni"]).unwrap();
        assert!(Cli::try_parse_from(["cvtf", "point", "--mode", "nope"]).is_err());
    }
}
