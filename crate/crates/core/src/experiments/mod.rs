//! Monte-Carlo estimators over long Zorich orbits.
//!
//! Stationary quantities are time averages along orbits started from
//! Lebesgue-random points after a burn-in. Long runs are split into
//! independent streams, seeded from `(seed, stream index)`, so results do not
//! depend on how many worker threads execute them.

pub mod checks;
pub mod correlations;
pub mod returns;
pub mod runner;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::Permutation;
use crate::error::{Error, Result};
use crate::induction::{uniform_simplex, FloatPoint, IetPoint, Side};
use crate::symbolic::{cylinder_contains, Word};

pub use checks::{
    cylinder_contraction, holder_norm_estimate, ratio_bound_check, sample_pairs, ContractionTrace,
    HolderEstimate, RatioBounds,
};
pub use correlations::{
    correlation_series, fit_exponential, CorrelationAccumulator, CorrelationSeries, ExponentialFit,
};
pub use returns::{
    comparison_survey, exp_moment, return_time_survey, tail_fit, ComparisonSummary, ExpMoment,
    ReturnRecord, ReturnScanner, TailFit,
};
pub use runner::{
    run_correlations, run_returns, run_streams, stream_rng, CorrelationRun, OrbitSettings, ReturnRun,
    StreamPlan,
};

/// Uniform point of `pi`'s simplex.
pub fn sample_simplex<R: Rng + ?Sized>(perm: &Permutation, rng: &mut R) -> FloatPoint {
    IetPoint::new(uniform_simplex(perm.len(), rng), perm.clone()).expect("positive coordinates")
}

/// A real function on the space of interval exchanges.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservableSpec {
    /// `lambda_i`, 1-based.
    Coordinate(usize),
    /// `ln min_i lambda_i`.
    LogMinGap,
    /// Indicator of the cylinder of a word.
    CylinderIndicator(Word),
    /// A value per permutation, zero for permutations not listed.
    UserTable(BTreeMap<Permutation, f64>),
}

impl ObservableSpec {
    pub fn eval(&self, x: &FloatPoint) -> f64 {
        self.eval_parts(x.lengths(), x.perm())
    }

    /// Evaluates at the normalized point `(lengths, perm)`.
    pub fn eval_parts(&self, lengths: &[f64], perm: &Permutation) -> f64 {
        match self {
            ObservableSpec::Coordinate(i) => lengths[i - 1],
            ObservableSpec::LogMinGap => lengths.iter().copied().fold(f64::INFINITY, f64::min).ln(),
            ObservableSpec::CylinderIndicator(w) => {
                let x = IetPoint::new(lengths.to_vec(), perm.clone()).expect("positive lengths");
                if cylinder_contains(w, &x) {
                    1.0
                } else {
                    0.0
                }
            }
            ObservableSpec::UserTable(t) => t.get(perm).copied().unwrap_or(0.0),
        }
    }

    /// Checks the observable makes sense in dimension `m`.
    pub fn check_dim(&self, m: usize) -> Result<()> {
        match self {
            ObservableSpec::Coordinate(i) if *i == 0 || *i > m => Err(Error::InvalidArgument(
                format!("coordinate {i} out of range 1..={m}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableSpec::Coordinate(i) => write!(f, "lambda{i}"),
            ObservableSpec::LogMinGap => write!(f, "log_min_gap"),
            ObservableSpec::CylinderIndicator(w) => write!(f, "cylinder:{w}"),
            ObservableSpec::UserTable(t) => {
                let parts: Vec<String> = t.iter().map(|(p, v)| format!("{p}={v}")).collect();
                write!(f, "table:{}", parts.join(","))
            }
        }
    }
}

/// Parses `lambda<i>`, `log_min_gap`, `cylinder:<word>` or
/// `table:<pi>=<value>,<pi>=<value>,...`.
impl FromStr for ObservableSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "log_min_gap" {
            return Ok(ObservableSpec::LogMinGap);
        }
        if let Some(i) = s.strip_prefix("lambda") {
            let i: usize = i
                .parse()
                .map_err(|_| Error::Parse(format!("bad coordinate observable {s:?}")))?;
            if i == 0 {
                return Err(Error::Parse("coordinates are 1-based".into()));
            }
            return Ok(ObservableSpec::Coordinate(i));
        }
        if let Some(w) = s.strip_prefix("cylinder:") {
            return Ok(ObservableSpec::CylinderIndicator(w.parse()?));
        }
        if let Some(body) = s.strip_prefix("table:") {
            let mut t = BTreeMap::new();
            for entry in body.split(',').filter(|e| !e.trim().is_empty()) {
                let (p, v) = entry
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("bad table entry {entry:?}")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad table value {v:?}")))?;
                t.insert(p.parse()?, v);
            }
            return Ok(ObservableSpec::UserTable(t));
        }
        Err(Error::Parse(format!("unknown observable {s:?}")))
    }
}

impl Serialize for ObservableSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ObservableSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Time average of `phi` over the plus-type points of `points[burn_in..]`.
pub fn birkhoff_mean(points: &[FloatPoint], phi: &ObservableSpec, burn_in: usize) -> Result<f64> {
    if burn_in >= points.len() {
        return Err(Error::InsufficientData(format!(
            "burn-in {burn_in} leaves nothing of an orbit of {} points",
            points.len()
        )));
    }
    let (sum, n) = points[burn_in..]
        .iter()
        .filter(|x| x.classify() == Side::Plus)
        .fold((0.0, 0usize), |(s, n), x| (s + phi.eval(x), n + 1));
    if n == 0 {
        return Err(Error::InsufficientData("no plus-type points after burn-in".into()));
    }
    Ok(sum / n as f64)
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::induction::orbit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn simplex_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = sample_simplex(&p("2 1"), &mut rng);
            assert!(x.lengths().iter().all(|&l| l > 0.0));
            assert!((x.lengths().iter().sum::<f64>() - 1.0).abs() < 1e-14);
            sum += x.lengths()[0];
        }
        // lambda_1 is uniform on (0, 1): sd 1/sqrt(12)
        let sigma = (1.0f64 / 12.0).sqrt() / (n as f64).sqrt();
        assert!((sum / n as f64 - 0.5).abs() < 3.0 * sigma);

        let a: Vec<f64> = (0..5).map(|_| sample_simplex(&p("3 2 1"), &mut ChaCha8Rng::seed_from_u64(4)).lengths()[0]).collect();
        assert!(a.windows(2).all(|w| w[0].to_bits() == w[1].to_bits()));
    }

    #[test]
    fn observable_round_trip() {
        for s in ["lambda2", "log_min_gap", "cylinder:a:1@2 1;b:1@2 1", "table:2 1=0.5"] {
            let o: ObservableSpec = s.parse().unwrap();
            assert_eq!(o.to_string(), s);
        }
        assert!("lambda0".parse::<ObservableSpec>().is_err());
        assert!("nope".parse::<ObservableSpec>().is_err());
        assert!(ObservableSpec::Coordinate(3).check_dim(2).is_err());
    }

    #[test]
    fn observable_values() {
        let x = FloatPoint::new(vec![0.25, 0.75], p("2 1")).unwrap();
        assert_eq!(ObservableSpec::Coordinate(2).eval(&x), 0.75);
        assert_eq!(ObservableSpec::LogMinGap.eval(&x), 0.25f64.ln());
        let table: ObservableSpec = "table:2 1=3".parse().unwrap();
        assert_eq!(table.eval(&x), 3.0);
        let cyl: ObservableSpec = "cylinder:b:2@2 1".parse().unwrap();
        let y = FloatPoint::new(vec![0.3, 0.7], p("2 1")).unwrap();
        assert_eq!(cyl.eval(&y), 1.0);
        assert_eq!(cyl.eval(&x), 0.0);
    }

    #[test]
    fn birkhoff_mean_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x0 = sample_simplex(&p("2 1"), &mut rng);
        let trace = orbit(&x0, 2000, u64::MAX).unwrap();
        let points: Vec<FloatPoint> = trace.steps.into_iter().map(|(x, _)| x).collect();
        let one = ObservableSpec::UserTable([(p("2 1"), 1.0)].into_iter().collect());
        assert_eq!(birkhoff_mean(&points, &one, 100).unwrap(), 1.0);
        assert!(birkhoff_mean(&points, &one, 2000).is_err());
    }

    #[test]
    fn birkhoff_means_of_independent_orbits_agree() {
        let phi = ObservableSpec::Coordinate(1);
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0 = sample_simplex(&p("2 1"), &mut rng);
            let trace = orbit(&x0, 200_000, u64::MAX).unwrap();
            let values: Vec<f64> = trace
                .steps
                .iter()
                .skip(1000)
                .filter(|(x, _)| x.classify() == Side::Plus)
                .map(|(x, _)| phi.eval(x))
                .collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (mean, var / n)
        };
        let (m1, v1) = run(10);
        let (m2, v2) = run(11);
        // plus-type points are only weakly correlated under the second iterate
        assert!((m1 - m2).abs() < 3.0 * (2.0 * (v1 + v2)).sqrt(), "{m1} {m2}");
    }
}
