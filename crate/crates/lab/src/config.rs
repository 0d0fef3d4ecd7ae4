//! Command-line flags, the TOML config file and their merge (flags win).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "nqlab", version, about = "Verification suites and search experiments under single-qubit oracle noise")]
pub struct Cli {
    /// TOML file with `[common]` and per-command sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Algebraic and norm checks; exit 0 iff every check passes.
    Verify(Flags),
    /// Progress-measure trace of Grover's algorithm as CSV.
    Progress(Flags),
    /// Monte-Carlo search strategies over a grid, one CSV row per cell.
    Experiment(Flags),
    /// Coin tosses until odd heads and even tails.
    CoinToss(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Progress(_) => "progress",
            Command::Experiment(_) => "experiment",
            Command::CoinToss(_) => "coin-toss",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Verify(f) | Command::Progress(f) | Command::Experiment(f) | Command::CoinToss(f) => f,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// Search-space sizes (powers of two), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Noise rates (or `p` for the negligent oracle), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
    /// Noisy query qubits (0 = target), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub j: Option<Vec<usize>>,
    /// Progress scenario: target, index or negligent.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tolerance for the equality checks.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Strategies for `experiment`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Option<Vec<String>>,
    /// `single-shot` or `until-success`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of queries for `progress`.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Deliberate defect for mutation testing (`k1x-sign`).
    #[arg(long)]
    pub inject_fault: Option<String>,
}

#[derive(Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub n: Option<Vec<usize>>,
    pub r: Option<Vec<f64>>,
    pub j: Option<Vec<usize>>,
    pub scenario: Option<String>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub strategy: Option<Vec<String>>,
    pub mode: Option<String>,
    pub steps: Option<usize>,
    pub inject_fault: Option<String>,
}

#[derive(Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub common: Section,
    #[serde(default)]
    pub verify: Section,
    #[serde(default)]
    pub progress: Section,
    #[serde(default)]
    pub experiment: Section,
    #[serde(default, rename = "coin-toss")]
    pub coin_toss: Section,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }

    fn section(&self, command: &str) -> &Section {
        match command {
            "verify" => &self.verify,
            "progress" => &self.progress,
            "experiment" => &self.experiment,
            _ => &self.coin_toss,
        }
    }
}

/// Flags, else the command's section, else `[common]`.
pub fn merge(flags: &Flags, file: &FileConfig, command: &str) -> Flags {
    let s = file.section(command);
    let c = &file.common;
    macro_rules! pick {
        ($f:ident) => {
            flags.$f.clone().or_else(|| s.$f.clone()).or_else(|| c.$f.clone())
        };
    }
    Flags {
        n: pick!(n),
        r: pick!(r),
        j: pick!(j),
        scenario: pick!(scenario),
        trials: pick!(trials),
        seed: pick!(seed),
        out: pick!(out),
        tol: pick!(tol),
        strategy: pick!(strategy),
        mode: pick!(mode),
        steps: pick!(steps),
        inject_fault: pick!(inject_fault),
    }
}
