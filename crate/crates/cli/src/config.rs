use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rauzy_core::induction::Backend;
use rauzy_core::{Error, Permutation, Result};
use serde::Deserialize;

/// Largest number of symbols accepted unless `--max-dim` raises it.
pub const DEFAULT_MAX_DIM: usize = 12;

pub const DEFAULT_BURN_IN: usize = 1000;

pub const DEFAULT_FLOOR_MULT: f64 = 3.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Exact,
    Float,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Float => Backend::Float,
        }
    }
}

/// Every setting a run can take. Values come from `--config` and are
/// overridden by command-line flags.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub pi: Option<String>,
    pub q: Option<String>,
    pub steps: Option<usize>,
    pub burn_in: Option<usize>,
    pub seed: Option<u64>,
    pub backend: Option<BackendArg>,
    pub n_max: Option<usize>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub cap: Option<u64>,
    pub floor_mult: Option<f64>,
    pub streams: Option<usize>,
    pub workers: Option<usize>,
    pub lambda: Option<String>,
    pub phi: Option<String>,
    pub psi: Option<String>,
    pub samples: Option<usize>,
    pub max_len: Option<usize>,
    pub max_count: Option<u64>,
    pub max_dim: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub survival_out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))
    }

    pub fn perm(&self) -> Result<Permutation> {
        let text = self
            .pi
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("a permutation is required (--pi)".into()))?;
        let perm: Permutation = text.parse()?;
        let max_dim = self.max_dim.unwrap_or(DEFAULT_MAX_DIM);
        if perm.len() > max_dim {
            return Err(Error::InvalidArgument(format!(
                "{} symbols exceed the limit of {max_dim} (raise it with --max-dim)",
                perm.len()
            )));
        }
        if !perm.is_irreducible() {
            return Err(Error::Reducible(perm.to_string()));
        }
        Ok(perm)
    }

    pub fn backend(&self) -> Backend {
        self.backend.map_or(Backend::Float, Backend::from)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(DEFAULT_BURN_IN)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        })
    }

    /// Checks the invariants shared by every subcommand.
    pub fn check(&self) -> Result<()> {
        if self.cap == Some(0) {
            return Err(Error::InvalidArgument("cap must be at least 1".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0) {
                return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {e}")));
            }
        }
        if self.streams == Some(0) {
            return Err(Error::InvalidArgument("streams must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// `steps` and `burn_in` for an experiment, with `steps > burn_in`.
    pub fn run_length(&self, default_steps: usize) -> Result<(usize, usize)> {
        let steps = self.steps.unwrap_or(default_steps);
        let burn_in = self.burn_in();
        if steps <= burn_in {
            return Err(Error::InvalidArgument(format!(
                "steps ({steps}) must exceed burn-in ({burn_in})"
            )));
        }
        Ok((steps, burn_in))
    }
}

/// Copies every `Some` field of the flag struct onto the config.
macro_rules! overlay {
    ($cfg:expr, $args:expr, [$($field:ident),* $(,)?]) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = Some(v); })*
    };
}
pub(crate) use overlay;
