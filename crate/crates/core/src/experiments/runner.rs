//! Seeded multi-stream runs and the experiment pipelines built on them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlations::{CorrelationAccumulator, CorrelationSeries};
use super::returns::{ReturnRecord, ReturnScanner};
use super::{sample_simplex, ObservableSpec};
use crate::combinatorics::Permutation;
use crate::error::{Error, Result};
use crate::induction::{FloatPoint, IetPoint, Length, Orbit, PrecisionLog, Side};
use crate::symbolic::Word;

/// How a run is split into independent streams and executed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamPlan {
    pub seed: u64,
    pub streams: usize,
    /// Worker threads; has no influence on the results.
    pub workers: usize,
}

/// The random stream `index` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs `f` once per stream on a pool of `plan.workers` threads and returns
/// the results in stream order. The first failing stream (in stream order)
/// decides the error.
pub fn run_streams<T, F>(plan: &StreamPlan, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<Result<T>> = pool.install(|| {
        (0..plan.streams)
            .into_par_iter()
            .map(|i| f(i, &mut stream_rng(plan.seed, i)))
            .collect()
    });
    results.into_iter().collect()
}

/// The orbit every stream follows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSettings {
    pub perm: Permutation,
    /// Fixed starting lengths; sampled uniformly per stream when absent.
    pub start: Option<Vec<f64>>,
    /// Zorich steps per stream, burn-in included.
    pub steps: usize,
    pub burn_in: usize,
    pub cap: u64,
}

impl OrbitSettings {
    pub fn check(&self) -> Result<()> {
        if self.steps <= self.burn_in {
            return Err(Error::InvalidArgument(format!(
                "steps ({}) must exceed burn-in ({})",
                self.steps, self.burn_in
            )));
        }
        if self.cap == 0 {
            return Err(Error::InvalidArgument("cap must be at least 1".into()));
        }
        if !self.perm.is_irreducible() {
            return Err(Error::Reducible(self.perm.to_string()));
        }
        Ok(())
    }

    /// The orbit of one stream, advanced past the burn-in.
    pub fn start_orbit<S: Length>(&self, rng: &mut ChaCha8Rng) -> Result<Orbit<S>> {
        let x0: FloatPoint = match &self.start {
            Some(l) => IetPoint::new(l.clone(), self.perm.clone())?,
            None => sample_simplex(&self.perm, rng),
        };
        let lengths = x0
            .lengths()
            .iter()
            .map(|&v| S::from_f64(v).expect("finite lengths convert exactly"))
            .collect();
        let x0 = IetPoint::new(lengths, self.perm.clone())?;
        let mut orbit = Orbit::new(x0).with_cap(self.cap);
        for _ in 0..self.burn_in {
            orbit.advance()?;
        }
        Ok(orbit)
    }
}

/// Aggregated correlation estimates over all streams.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRun {
    pub series: Vec<CorrelationSeries>,
    pub plus_points: usize,
    pub precision: Vec<PrecisionLog>,
}

pub fn run_correlations(
    settings: &OrbitSettings,
    plan: &StreamPlan,
    phi: &ObservableSpec,
    psi: &ObservableSpec,
    n_max: usize,
) -> Result<CorrelationRun> {
    settings.check()?;
    phi.check_dim(settings.perm.len())?;
    psi.check_dim(settings.perm.len())?;
    let per_stream = (settings.steps - settings.burn_in) / 2;
    if per_stream <= 10 * n_max {
        return Err(Error::InsufficientData(format!(
            "{} steps after burn-in are too few for {n_max} lags",
            settings.steps - settings.burn_in
        )));
    }
    let batch_len = CorrelationAccumulator::batch_len_for(per_stream * plan.streams);
    let parts = run_streams(plan, |_, rng| {
        let mut orbit: Orbit<f64> = settings.start_orbit(rng)?;
        let mut acc = CorrelationAccumulator::new(n_max, batch_len);
        for _ in settings.burn_in..settings.steps {
            if orbit.side() == Side::Plus {
                let (l, p) = (orbit.lengths(), orbit.perm());
                acc.push(phi.eval_parts(l, p), psi.eval_parts(l, p));
            }
            orbit.advance()?;
        }
        Ok((acc, orbit.precision().clone()))
    })?;
    let mut parts = parts.into_iter();
    let (mut acc, first) = parts.next().ok_or_else(|| Error::InvalidArgument("no streams".into()))?;
    let mut precision = vec![first];
    for (a, p) in parts {
        acc.merge(&a);
        precision.push(p);
    }
    Ok(CorrelationRun {
        series: acc.series()?,
        plus_points: acc.len(),
        precision,
    })
}

/// Return records of all streams, in stream order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnRun {
    pub records: Vec<ReturnRecord>,
    pub precision: Vec<PrecisionLog>,
}

pub fn run_returns<S: Length>(settings: &OrbitSettings, plan: &StreamPlan, q: &Word) -> Result<ReturnRun> {
    settings.check()?;
    if q.letters().first().map(|l| l.start.len()) != Some(settings.perm.len()) {
        return Err(Error::IncompatibleWord(format!(
            "target word {q} is not over {} symbols",
            settings.perm.len()
        )));
    }
    let parts = run_streams(plan, |_, rng| {
        let mut orbit: Orbit<S> = settings.start_orbit(rng)?;
        let mut scanner = ReturnScanner::new(q)?;
        let mut before = Vec::with_capacity(settings.perm.len());
        for _ in settings.burn_in..settings.steps {
            before.clear();
            before.extend(orbit.lengths().iter().map(Length::to_f64));
            let r = orbit.advance()?;
            scanner.push(&before, &r);
        }
        Ok((scanner.into_records(), orbit.precision().clone()))
    })?;
    let mut records = Vec::new();
    let mut precision = Vec::new();
    for (r, p) in parts {
        records.extend(r);
        precision.push(p);
    }
    Ok(ReturnRun { records, precision })
}
