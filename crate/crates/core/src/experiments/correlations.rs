//! Correlations of observables under the second Zorich iterate on plus-type
//! points, and log-linear fits of their decay.
//!
//! Types alternate along a Zorich orbit, so the plus-type points are every
//! other point and consecutive ones are one `G^2` step apart.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ObservableSpec;
use crate::error::{Error, Result};
use crate::induction::{FloatPoint, Side};

/// Fits with `R^2` below this are flagged as not log-linear.
pub const LOW_R2: f64 = 0.99;

/// Bootstrap resamples used for the confidence interval of a fit.
pub const BOOTSTRAP_RESAMPLES: usize = 2000;

const BOOTSTRAP_SEED: u64 = 0x5eed_c0de;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    /// Lag in `G^2` steps.
    pub n: usize,
    pub corr: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct BatchSums {
    n: usize,
    su: f64,
    sv: f64,
    suv: f64,
}

/// Streaming estimator of `cov(u_j, v_{j+n})` for `n = 0..=n_max`, with
/// batch-means errors. Sums are kept per batch so that independent streams
/// can be merged in a fixed order.
#[derive(Clone, Debug)]
pub struct CorrelationAccumulator {
    n_max: usize,
    batch_len: usize,
    history: Vec<f64>,
    pushed: usize,
    // lags[n][batch]
    lags: Vec<Vec<BatchSums>>,
}

impl CorrelationAccumulator {
    pub fn new(n_max: usize, batch_len: usize) -> Self {
        assert!(batch_len > 0);
        CorrelationAccumulator {
            n_max,
            batch_len,
            history: vec![0.0; n_max + 1],
            pushed: 0,
            lags: vec![Vec::new(); n_max + 1],
        }
    }

    /// Batch length giving about `sqrt(total)` batches of `sqrt(total)` pairs.
    pub fn batch_len_for(total: usize) -> usize {
        ((total as f64).sqrt().ceil() as usize).max(1)
    }

    /// Adds the values `u = phi(y_t)`, `v = psi(y_t)` of the next plus-type point.
    pub fn push(&mut self, u: f64, v: f64) {
        let t = self.pushed;
        let ring = self.n_max + 1;
        self.history[t % ring] = u;
        for n in 0..=self.n_max.min(t) {
            let j = t - n;
            let uj = self.history[j % ring];
            let b = j / self.batch_len;
            let batches = &mut self.lags[n];
            if batches.len() <= b {
                batches.resize(b + 1, BatchSums::default());
            }
            let s = &mut batches[b];
            s.n += 1;
            s.su += uj;
            s.sv += v;
            s.suv += uj * v;
        }
        self.pushed += 1;
    }

    pub fn len(&self) -> usize {
        self.pushed
    }

    pub fn is_empty(&self) -> bool {
        self.pushed == 0
    }

    /// Appends the batches of an independent stream. Pairs never straddle
    /// streams; the merged estimator centers with the pooled means. Pushing
    /// into a merged accumulator is not meaningful.
    pub fn merge(&mut self, other: &CorrelationAccumulator) {
        assert_eq!(self.n_max, other.n_max);
        assert_eq!(self.batch_len, other.batch_len);
        for (mine, theirs) in self.lags.iter_mut().zip(&other.lags) {
            mine.extend_from_slice(theirs);
        }
        self.pushed += other.pushed;
    }

    pub fn series(&self) -> Result<Vec<CorrelationSeries>> {
        let mut out = Vec::with_capacity(self.n_max + 1);
        for (n, batches) in self.lags.iter().enumerate() {
            let total = batches.iter().fold(BatchSums::default(), |a, b| BatchSums {
                n: a.n + b.n,
                su: a.su + b.su,
                sv: a.sv + b.sv,
                suv: a.suv + b.suv,
            });
            if total.n == 0 {
                return Err(Error::InsufficientData(format!("no pairs at lag {n}")));
            }
            let count = total.n as f64;
            let (mu, mv) = (total.su / count, total.sv / count);
            let corr = total.suv / count - mu * mv;
            let means: Vec<f64> = batches
                .iter()
                .filter(|b| b.n == self.batch_len)
                .map(|b| {
                    let k = b.n as f64;
                    b.suv / k - mu * b.sv / k - mv * b.su / k + mu * mv
                })
                .collect();
            if means.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "fewer than two complete batches at lag {n}"
                )));
            }
            let b = means.len() as f64;
            let mean = means.iter().sum::<f64>() / b;
            let var = means.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (b - 1.0);
            out.push(CorrelationSeries {
                n,
                corr,
                stderr: (var / b).sqrt(),
                samples: total.n,
            });
        }
        Ok(out)
    }
}

/// Correlations of `phi(y_j)` and `psi(y_{j+n})` over the plus-type points
/// `y_j` of `points[burn_in..]`.
pub fn correlation_series(
    points: &[FloatPoint],
    phi: &ObservableSpec,
    psi: &ObservableSpec,
    n_max: usize,
    burn_in: usize,
) -> Result<Vec<CorrelationSeries>> {
    let usable = points.len().saturating_sub(burn_in);
    if usable / 2 <= 10 * n_max {
        return Err(Error::InsufficientData(format!(
            "{usable} points after burn-in are too few for {n_max} lags"
        )));
    }
    let plus: Vec<&FloatPoint> = points[burn_in..]
        .iter()
        .filter(|x| x.classify() == Side::Plus)
        .collect();
    let mut acc = CorrelationAccumulator::new(n_max, CorrelationAccumulator::batch_len_for(plus.len()));
    for x in plus {
        acc.push(phi.eval(x), psi.eval(x));
    }
    acc.series()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    /// Decay rate: `|c_n| ~ C exp(-delta n)`.
    pub delta: f64,
    /// Percentile bootstrap interval for `delta` at 95%.
    pub ci: (f64, f64),
    pub r2: f64,
    /// First and last lag used.
    pub window: (usize, usize),
    /// Quadratic coefficient of a second-order fit of `ln |c_n|`; positive
    /// values mean slower than exponential decay.
    pub curvature: f64,
    pub low_r2: bool,
}

impl ExponentialFit {
    pub fn ci_excludes_zero(&self) -> bool {
        self.ci.0 > 0.0 || self.ci.1 < 0.0
    }
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

fn quadratic_coefficient(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 3 {
        return 0.0;
    }
    // normal equations for y = c0 + c1 x + c2 x^2
    let mut m = [[0.0f64; 4]; 3];
    for (&a, &b) in x.iter().zip(y) {
        let p = [1.0, a, a * a];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += p[i] * p[j];
            }
            m[i][3] += p[i] * b;
        }
    }
    for c in 0..3 {
        let piv = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, piv);
        for r in 0..3 {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..4 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    m[2][3] / m[2][2]
}

/// Least squares on `ln |c_n|` over the leading lags with
/// `|c_n| > floor_mult * stderr`, with a parametric bootstrap interval.
pub fn fit_exponential(series: &[CorrelationSeries], floor_mult: f64) -> Result<ExponentialFit> {
    let window: Vec<&CorrelationSeries> = series
        .iter()
        .take_while(|s| s.corr.abs() > floor_mult * s.stderr && s.corr != 0.0)
        .collect();
    if window.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "only {} lags above the noise floor, need 4",
            window.len()
        )));
    }
    let x: Vec<f64> = window.iter().map(|s| s.n as f64).collect();
    let y: Vec<f64> = window.iter().map(|s| s.corr.abs().ln()).collect();
    let (slope, _, r2) = linear_fit(&x, &y);
    let delta = -slope;

    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut deltas: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let y: Vec<f64> = window
                .iter()
                .map(|s| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (s.corr + s.stderr * z).abs().ln()
                })
                .collect();
            -linear_fit(&x, &y).0
        })
        .collect();
    deltas.sort_by(f64::total_cmp);
    let pick = |q: f64| deltas[((q * (deltas.len() - 1) as f64).round()) as usize];

    Ok(ExponentialFit {
        delta,
        ci: (pick(0.025), pick(0.975)),
        r2,
        window: (window[0].n, window[window.len() - 1].n),
        curvature: quadratic_coefficient(&x, &y),
        low_r2: r2 < LOW_R2,
    })
}
