//! `witness` subcommand: non-vanishing searches described in a small TOML file.
//!
//! ```toml
//! kind = "logsum"        # or "polynomial"
//! lo = [0.1, 0.1, 0.1]
//! hi = [1.0, 1.0, 1.0]
//! budget = 1000
//! [[terms]]
//! p = "1 1/2 0 0"        # one `c a1 a2 a3` term per line
//! q = "1 1 0 0\n1 0 0 0"
//! ```

use std::fs;
use std::path::Path;

use qafem::poly::{logsum_witness, nonvanishing_witness, SearchBox};
use qafem::FracPoly64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    Polynomial,
    Logsum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogTerm {
    pub p: String,
    pub q: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    pub kind: WitnessKind,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<LogTerm>,
}

fn default_budget() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq)]
pub enum WitnessOutcome {
    Found([f64; 3]),
    /// Nothing found within the budget; says nothing about the function.
    Inconclusive,
}

impl WitnessOutcome {
    pub fn to_text(&self) -> String {
        match self {
            WitnessOutcome::Found(x) => format!("witness {:.16e} {:.16e} {:.16e}", x[0], x[1], x[2]),
            WitnessOutcome::Inconclusive => "no witness within budget (inconclusive)".into(),
        }
    }
}

fn frac(text: &str, what: &str) -> Result<FracPoly64, CliError> {
    FracPoly64::from_text(text).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

pub fn parse_witness_config(text: &str, origin: &str) -> Result<WitnessConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

pub fn run_witness_config(cfg: &WitnessConfig) -> Result<WitnessOutcome, CliError> {
    let region = SearchBox::new(cfg.lo, cfg.hi).map_err(|e| CliError::Config(e.to_string()))?;
    let found = match cfg.kind {
        WitnessKind::Polynomial => {
            if !cfg.terms.is_empty() {
                return Err(CliError::Config("`terms` only applies to kind = \"logsum\"".into()));
            }
            let p = cfg
                .p
                .as_deref()
                .ok_or_else(|| CliError::Config("`p` is required for kind = \"polynomial\"".into()))?;
            nonvanishing_witness(&frac(p, "p")?, &region, cfg.budget)
        }
        WitnessKind::Logsum => {
            if cfg.p.is_some() {
                return Err(CliError::Config("`p` only applies to kind = \"polynomial\"; use [[terms]]".into()));
            }
            let terms = cfg
                .terms
                .iter()
                .enumerate()
                .map(|(j, t)| Ok((frac(&t.p, &format!("terms[{j}].p"))?, frac(&t.q, &format!("terms[{j}].q"))?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            logsum_witness(&terms, &region, cfg.budget).map_err(|e| CliError::Solver(e.to_string()))?
        }
    };
    Ok(found.map_or(WitnessOutcome::Inconclusive, WitnessOutcome::Found))
}

pub fn run_witness(path: &Path) -> Result<WitnessOutcome, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    run_witness_config(&parse_witness_config(&text, &path.display().to_string())?)
}
