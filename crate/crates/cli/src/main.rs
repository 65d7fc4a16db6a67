//! `rauzy`: structural queries and experiments on Rauzy-Veech-Zorich induction.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rauzy_core::{Error, Result};

use config::{overlay, BackendArg, Format, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "rauzy", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Nodes and a/b edges of the Rauzy class of a permutation.
    Class(ClassArgs),
    /// Shortest admissible word over the class with a positive matrix.
    PositiveWord(PositiveWordArgs),
    /// Successive Zorich steps from a given or sampled start.
    Orbit(OrbitArgs),
    /// Correlations of two observables on plus-type points under G^2.
    Correlations(CorrelationArgs),
    /// Gap words between visits to the cylinder of a word.
    ReturnTimes(ReturnTimeArgs),
    /// Running maxima of |w|/ln||A(w)|| and eta - tau, with cylinder ratio bounds.
    Compare(CompareArgs),
    /// Property checks on random zippered rectangles.
    ZrSelftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON file of settings; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Largest accepted number of symbols [default: 12].
    #[arg(long)]
    max_dim: Option<usize>,
}

impl Common {
    fn base(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        overlay!(cfg, self, [out, format, max_dim]);
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct ClassArgs {
    #[command(flatten)]
    common: Common,
    /// Permutation as space-separated images, e.g. "3 2 1".
    #[arg(long)]
    pi: Option<String>,
}

#[derive(Args, Debug)]
struct PositiveWordArgs {
    #[command(flatten)]
    common: Common,
    /// Permutation as space-separated images, e.g. "3 2 1".
    #[arg(long)]
    pi: Option<String>,
    /// Longest word searched, in letters [default: 8].
    #[arg(long)]
    max_len: Option<usize>,
    /// Largest letter count searched [default: 3].
    #[arg(long)]
    max_count: Option<u64>,
}

#[derive(Args, Debug)]
struct OrbitArgs {
    #[command(flatten)]
    common: Common,
    /// Permutation as space-separated images, e.g. "3 2 1".
    #[arg(long)]
    pi: Option<String>,
    /// Number of Zorich steps [default: 100].
    #[arg(long)]
    steps: Option<usize>,
    /// Seed for the random start [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Start lengths, comma-separated decimals or p/q; sampled when absent.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Largest Zorich count of one step [default: 2^20].
    #[arg(long)]
    cap: Option<u64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Permutation as space-separated images, e.g. "3 2 1".
    #[arg(long)]
    pi: Option<String>,
    /// Zorich steps per stream, burn-in included [default: 1000000].
    #[arg(long)]
    steps: Option<usize>,
    /// Steps discarded at the start of each stream [default: 1000].
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Independent orbits, each with its own random start [default: 1].
    #[arg(long)]
    streams: Option<usize>,
    /// Worker threads; results do not depend on it [default: all cores].
    #[arg(long)]
    workers: Option<usize>,
    /// Fixed start lengths for a single stream.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Largest Zorich count of one step [default: unbounded].
    #[arg(long)]
    cap: Option<u64>,
}

impl RunArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        overlay!(cfg, self, [pi, steps, burn_in, seed, streams, workers, lambda, cap]);
    }
}

#[derive(Args, Debug)]
struct CorrelationArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    run: RunArgs,
    /// Largest lag, in G^2 steps [default: 10].
    #[arg(long)]
    n_max: Option<usize>,
    /// First observable: lambda<i>, log_min_gap, cylinder:<word> or table:<pi>=<v>,... [default: lambda1].
    #[arg(long)]
    phi: Option<String>,
    /// Second observable [default: phi].
    #[arg(long)]
    psi: Option<String>,
    /// Noise floor multiplier of the exponential fit [default: 3].
    #[arg(long)]
    floor_mult: Option<f64>,
    /// Exponent for an empirical Hölder norm of phi; skipped when absent.
    #[arg(long)]
    alpha: Option<f64>,
    /// Only float orbits are supported.
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
}

#[derive(Args, Debug)]
struct WordRunArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Target word, e.g. "a:1@2 1;b:1@2 1" [default: the shortest positive word].
    #[arg(long)]
    q: Option<String>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Exponent of the exponential moments; skipped when absent.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Longest positive word searched when --q is absent [default: 8].
    #[arg(long)]
    max_len: Option<usize>,
    /// Largest letter count searched when --q is absent [default: 3].
    #[arg(long)]
    max_count: Option<u64>,
}

impl WordRunArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        self.run.apply(cfg);
        overlay!(cfg, self, [q, backend, epsilon, max_len, max_count]);
    }
}

#[derive(Args, Debug)]
struct ReturnTimeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    word: WordRunArgs,
    /// Largest N used by the tail fit [default: all].
    #[arg(long)]
    n_max: Option<usize>,
    /// Also write the survival function N,survivors,total to this file.
    #[arg(long)]
    survival_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    word: WordRunArgs,
    /// Cylinder points sampled for the ratio bounds [default: 10000].
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    #[command(flatten)]
    common: Common,
    /// Permutation as space-separated images, e.g. "3 2 1".
    #[arg(long)]
    pi: Option<String>,
    /// Random rectangles checked [default: 1000].
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance of the checks [default: 1e-12].
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    cap: Option<u64>,
}

fn resolve(command: &Command) -> Result<RunConfig> {
    let cfg = match command {
        Command::Class(a) => {
            let mut cfg = a.common.base()?;
            overlay!(cfg, a, [pi]);
            cfg
        }
        Command::PositiveWord(a) => {
            let mut cfg = a.common.base()?;
            overlay!(cfg, a, [pi, max_len, max_count]);
            cfg
        }
        Command::Orbit(a) => {
            let mut cfg = a.common.base()?;
            overlay!(cfg, a, [pi, steps, seed, backend, lambda, cap]);
            cfg
        }
        Command::Correlations(a) => {
            let mut cfg = a.common.base()?;
            a.run.apply(&mut cfg);
            overlay!(cfg, a, [n_max, phi, psi, floor_mult, alpha, backend]);
            cfg
        }
        Command::ReturnTimes(a) => {
            let mut cfg = a.common.base()?;
            a.word.apply(&mut cfg);
            overlay!(cfg, a, [n_max, survival_out]);
            cfg
        }
        Command::Compare(a) => {
            let mut cfg = a.common.base()?;
            a.word.apply(&mut cfg);
            overlay!(cfg, a, [samples]);
            cfg
        }
        Command::ZrSelftest(a) => {
            let mut cfg = a.common.base()?;
            overlay!(cfg, a, [pi, samples, seed, tol, cap]);
            cfg
        }
    };
    cfg.check()?;
    Ok(cfg)
}

fn run(command: &Command) -> Result<bool> {
    let cfg = resolve(command)?;
    match command {
        Command::Class(_) => commands::class(&cfg),
        Command::PositiveWord(_) => commands::positive_word(&cfg),
        Command::Orbit(_) => commands::orbit(&cfg),
        Command::Correlations(_) => commands::correlations(&cfg),
        Command::ReturnTimes(_) => commands::return_times(&cfg),
        Command::Compare(_) => commands::compare(&cfg),
        Command::ZrSelftest(_) => commands::zr_selftest(&cfg),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotFound(_) => 3,
        e if e.is_numeric() => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            output::error_event(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}
