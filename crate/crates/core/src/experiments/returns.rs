//! Returns of an orbit to the cylinder of a fixed word: gap words, their
//! matrix norms and suspension times, survival tails and growth comparisons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::induction::StepRecord;
use crate::symbolic::{Letter, Word};

/// Relative increase over the last sample doubling below which a running
/// maximum counts as a plateau.
pub const PLATEAU_TOLERANCE: f64 = 0.05;

/// Minimum number of survivors for a point of the survival curve to be fitted.
pub const MIN_SURVIVORS: usize = 30;

/// The stretch of itinerary between an occurrence of `q` (or the start of the
/// orbit) and the next occurrence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnRecord {
    /// Orbit position of the first letter.
    pub start: usize,
    pub word: Word,
    /// Number of letters, the return time in Zorich steps.
    pub n_q: usize,
    /// `ln ||A(w)||`.
    pub eta: f64,
    /// Accumulated suspension time over the gap.
    pub tau: f64,
    /// Number of Rauzy-Veech steps, the sum of the letter counts.
    pub len_w: u64,
    /// `ln |A(w) lambda_end|` from the matrix, with `lambda_end` the arrival point.
    pub lognorm: f64,
    pub start_in_q: bool,
}

/// Streaming scanner for occurrences of `q` in a letter stream.
///
/// Feed it the point before each step together with the step's record.
#[derive(Clone, Debug)]
pub struct ReturnScanner {
    q: Vec<Letter>,
    dim: usize,
    letters: Vec<Letter>,
    flows: Vec<f64>,
    // lengths before each buffered letter, flattened
    lengths: Vec<f64>,
    record_start: usize,
    start_in_q: bool,
    position: usize,
    records: Vec<ReturnRecord>,
}

impl ReturnScanner {
    pub fn new(q: &Word) -> Result<Self> {
        let first = q
            .letters()
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty target word".into()))?;
        Ok(ReturnScanner {
            q: q.letters().to_vec(),
            dim: first.start.len(),
            letters: Vec::new(),
            flows: Vec::new(),
            lengths: Vec::new(),
            record_start: 0,
            start_in_q: false,
            position: 0,
            records: Vec::new(),
        })
    }

    pub fn push(&mut self, before: &[f64], record: &StepRecord) {
        debug_assert_eq!(before.len(), self.dim);
        self.letters.push(record.letter());
        self.flows.push(record.flow_time);
        self.lengths.extend_from_slice(before);
        self.position += 1;
        let k = self.q.len();
        if self.letters.len() < k || self.letters[self.letters.len() - k..] != self.q[..] {
            return;
        }
        let cut = self.letters.len() - k;
        if cut == 0 {
            self.start_in_q = true;
            return;
        }
        let word = Word::new(self.letters[..cut].to_vec()).expect("orbit letters chain");
        let tau = self.flows[..cut].iter().sum();
        let end = &self.lengths[cut * self.dim..(cut + 1) * self.dim];
        let a = word.matrix(self.dim);
        self.records.push(ReturnRecord {
            start: self.record_start,
            n_q: cut,
            eta: a.ln_norm(),
            tau,
            len_w: word.rauzy_steps(),
            lognorm: a.ln_image_length(end),
            start_in_q: self.start_in_q,
            word,
        });
        self.letters.drain(..cut);
        self.flows.drain(..cut);
        self.lengths.drain(..cut * self.dim);
        self.record_start += cut;
        self.start_in_q = true;
    }

    /// Completed records; the trailing partial gap is dropped.
    pub fn records(&self) -> &[ReturnRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ReturnRecord> {
        self.records
    }

    /// Letters read so far.
    pub fn position(&self) -> usize {
        self.position
    }
}

/// Gap records of a finite orbit, given as `(lengths before, record)` pairs.
pub fn return_time_survey<'a, I>(steps: I, q: &Word) -> Result<Vec<ReturnRecord>>
where
    I: IntoIterator<Item = (&'a [f64], &'a StepRecord)>,
{
    let mut scanner = ReturnScanner::new(q)?;
    for (before, record) in steps {
        scanner.push(before, record);
    }
    Ok(scanner.into_records())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Fitted ratio: `S(N) ~ C theta^N`.
    pub theta: f64,
    pub r2: f64,
    pub window: (u64, u64),
    /// `(N, survivors, total)` for every `N` up to the largest return time.
    pub survival: Vec<(u64, usize, usize)>,
}

/// Log-linear fit of the survival function `S(N) = #{n_q > N} / total` over
/// `N <= n_max`, starting where `S` first drops below 1 (one step earlier)
/// and keeping points with at least [`MIN_SURVIVORS`] survivors.
pub fn tail_fit(return_times: &[u64], n_max: u64) -> Result<TailFit> {
    if return_times.is_empty() {
        return Err(Error::InsufficientData("no return times".into()));
    }
    let total = return_times.len();
    let max = *return_times.iter().max().unwrap();
    let min = *return_times.iter().min().unwrap();
    let mut hist = vec![0usize; max as usize + 1];
    for &n in return_times {
        hist[n as usize] += 1;
    }
    let mut survival = Vec::with_capacity(max as usize + 1);
    let mut survivors = total;
    for (n, &h) in hist.iter().enumerate() {
        survivors -= h;
        survival.push((n as u64, survivors, total));
    }
    let start = min.saturating_sub(1);
    let window: Vec<&(u64, usize, usize)> = survival
        .iter()
        .filter(|(n, s, _)| *n >= start && *n <= n_max && *s >= MIN_SURVIVORS)
        .collect();
    if window.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} survival points with {MIN_SURVIVORS}+ survivors",
            window.len()
        )));
    }
    let x: Vec<f64> = window.iter().map(|(n, _, _)| *n as f64).collect();
    let y: Vec<f64> = window.iter().map(|(_, s, t)| (*s as f64 / *t as f64).ln()).collect();
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(TailFit {
        theta: slope.exp(),
        r2: if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) },
        window: (window[0].0, window[window.len() - 1].0),
        survival,
    })
}

/// `|w| / ln ||A(w)||` with `|w|` the number of letters.
pub fn growth_ratio(word: &Word, dim: usize) -> f64 {
    word.len() as f64 / word.matrix(dim).ln_norm()
}

/// A running maximum sampled at doublings of the sample count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningMax {
    pub max: f64,
    /// `(samples, running max)` at 1, 2, 4, ... and at the final count.
    pub checkpoints: Vec<(usize, f64)>,
    /// The last doubling raised the maximum by less than [`PLATEAU_TOLERANCE`].
    pub plateau: bool,
}

impl RunningMax {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<RunningMax> {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return None;
        }
        let mut max = f64::NEG_INFINITY;
        let mut half_max = f64::NEG_INFINITY;
        let mut checkpoints = Vec::new();
        let mut next = 1;
        let half = values.len().div_ceil(2);
        for (i, &v) in values.iter().enumerate() {
            max = max.max(v);
            if i + 1 == half {
                half_max = max;
            }
            if i + 1 == next {
                checkpoints.push((next, max));
                next *= 2;
            }
        }
        if checkpoints.last().map(|c| c.0) != Some(values.len()) {
            checkpoints.push((values.len(), max));
        }
        let plateau = if half_max > 0.0 {
            (max - half_max) / half_max < PLATEAU_TOLERANCE
        } else {
            max <= half_max
        };
        Some(RunningMax { max, checkpoints, plateau })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub records: usize,
    /// `|w| / ln ||A(w)||` over all gap words.
    pub growth: RunningMax,
    /// `eta - tau` over gaps starting in the cylinder of `q`.
    pub excess: Option<RunningMax>,
    /// Records violating `eta > tau`.
    pub violations: usize,
}

pub fn comparison_survey(records: &[ReturnRecord]) -> Result<ComparisonSummary> {
    let growth = RunningMax::of(records.iter().map(|r| r.n_q as f64 / r.eta))
        .ok_or_else(|| Error::InsufficientData("no return records".into()))?;
    let excess = RunningMax::of(records.iter().filter(|r| r.start_in_q).map(|r| r.eta - r.tau));
    Ok(ComparisonSummary {
        records: records.len(),
        growth,
        excess,
        violations: records.iter().filter(|r| !(r.eta > r.tau)).count(),
    })
}

/// Empirical `E exp(eps X)` with diagnostics of how trustworthy it is.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    /// The same estimate on the first half of the samples.
    pub half_estimate: f64,
    pub relative_change: f64,
    /// Hill estimate of the tail index of `exp(eps X)`; a finite mean needs
    /// an index above 1, a stable average one above 2.
    pub hill_index: f64,
    /// Share of the sum contributed by the largest sample.
    pub max_share: f64,
    pub stable: bool,
}

impl MomentEstimate {
    fn of(values: &[f64], eps: f64) -> Option<MomentEstimate> {
        if values.is_empty() {
            return None;
        }
        let mean_exp = |v: &[f64]| {
            // factor out the maximum to avoid overflow
            let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) * eps;
            let s: f64 = v.iter().map(|x| (eps * x - top).exp()).sum();
            (s, top, v.len() as f64)
        };
        let (s, top, n) = mean_exp(values);
        let estimate = s / n * top.exp();
        let half = &values[..values.len().div_ceil(2)];
        let (hs, htop, hn) = mean_exp(half);
        let half_estimate = hs / hn * htop.exp();
        let relative_change = (estimate - half_estimate).abs() / half_estimate;
        let max_share = 1.0 / s;

        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let k = ((values.len() as f64).sqrt() as usize).clamp(1, values.len() - 1);
        let hill_index = if eps == 0.0 || values.len() < 2 {
            f64::INFINITY
        } else {
            let spread: f64 = sorted[..k].iter().map(|x| eps * (x - sorted[k])).sum();
            if spread > 0.0 { k as f64 / spread } else { f64::INFINITY }
        };
        let stable = relative_change < 0.1 && max_share < 0.1 && hill_index > 2.0;
        Some(MomentEstimate {
            estimate,
            half_estimate,
            relative_change,
            hill_index,
            max_share,
            stable,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpMoment {
    pub epsilon: f64,
    pub tau: MomentEstimate,
    pub n_q: MomentEstimate,
}

/// `E exp(eps tau_q)` and `E exp(eps n_q)` over the records.
pub fn exp_moment(records: &[ReturnRecord], eps: f64) -> Result<ExpMoment> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {eps}")));
    }
    let taus: Vec<f64> = records.iter().map(|r| r.tau).collect();
    let ns: Vec<f64> = records.iter().map(|r| r.n_q as f64).collect();
    let none = || Error::InsufficientData("no return records".into());
    Ok(ExpMoment {
        epsilon: eps,
        tau: MomentEstimate::of(&taus, eps).ok_or_else(none)?,
        n_q: MomentEstimate::of(&ns, eps).ok_or_else(none)?,
    })
}
