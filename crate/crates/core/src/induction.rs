//! The space of interval exchanges, the Rauzy-Veech step and its Zorich
//! acceleration, in exact-rational or floating-point arithmetic.
//!
//! Branch convention: at a point with `lambda_{pi^-1 m} > lambda_m` ("plus")
//! only `A(a, pi)^-1 lambda` is positive, so plus points take operation `a`
//! and minus points (`lambda_m > lambda_{pi^-1 m}`) take operation `b`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::cocycle::{big_ln, letter_matrix};
use crate::combinatorics::{Op, Permutation};
use crate::error::{Error, Result};
use crate::symbolic::{Letter, Word};

/// Default bound on the Zorich count of a single accelerated step.
pub const DEFAULT_CAP: u64 = 1 << 20;

/// Default bound on denominator size in the exact backend.
pub const DEFAULT_DENOMINATOR_BITS: u64 = 1 << 16;

/// Float lengths below this are reported as a precision event.
pub const TINY_LENGTH: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            other => Err(Error::Parse(format!("unknown backend {other:?}"))),
        }
    }
}

/// Scalar type carrying interval lengths.
pub trait Length:
    Clone
    + PartialOrd
    + fmt::Debug
    + Send
    + Sync
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + 'static
{
    const BACKEND: Backend;

    fn from_u64(n: u64) -> Self;

    fn from_biguint(n: &BigUint) -> Self;

    /// Exact conversion where the backend allows it.
    fn from_f64(x: f64) -> Option<Self>;

    /// Nearest representable value.
    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    /// Natural logarithm of a positive value.
    fn ln(&self) -> f64;

    /// `floor(self / other)` for positive operands, saturating at `u64::MAX`.
    fn floor_ratio(&self, other: &Self) -> u64;

    /// Size of the representation in bits (denominator size for rationals).
    fn size_bits(&self) -> u64;
}

impl Length for f64 {
    const BACKEND: Backend = Backend::Float;

    fn from_u64(n: u64) -> Self {
        n as f64
    }

    fn from_biguint(n: &BigUint) -> Self {
        n.to_f64().unwrap_or(f64::INFINITY)
    }

    fn from_f64(x: f64) -> Option<Self> {
        Some(x)
    }

    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn ln(&self) -> f64 {
        f64::ln(*self)
    }

    fn floor_ratio(&self, other: &Self) -> u64 {
        let q = (self / other).floor();
        if q >= u64::MAX as f64 {
            u64::MAX
        } else {
            q as u64
        }
    }

    fn size_bits(&self) -> u64 {
        0
    }
}

impl Length for BigRational {
    const BACKEND: Backend = Backend::Exact;

    fn from_u64(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_biguint(n: &BigUint) -> Self {
        BigRational::from_integer(BigInt::from(n.clone()))
    }

    fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn ln(&self) -> f64 {
        big_ln(self.numer().magnitude()) - big_ln(self.denom().magnitude())
    }

    fn floor_ratio(&self, other: &Self) -> u64 {
        (self / other)
            .floor()
            .to_integer()
            .to_u64()
            .unwrap_or(u64::MAX)
    }

    fn size_bits(&self) -> u64 {
        self.denom().bits()
    }
}

/// Which of `lambda_m`, `lambda_{pi^-1 m}` is larger.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `lambda_{pi^-1 m} > lambda_m`; the next step is `a`.
    Plus,
    /// `lambda_m > lambda_{pi^-1 m}`; the next step is `b`.
    Minus,
    Boundary,
}

impl Side {
    /// Rauzy operation applied on this side.
    pub fn op(self) -> Option<Op> {
        match self {
            Side::Plus => Some(Op::A),
            Side::Minus => Some(Op::B),
            Side::Boundary => None,
        }
    }

    pub fn of_op(op: Op) -> Side {
        match op {
            Op::A => Side::Plus,
            Op::B => Side::Minus,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
            Side::Boundary => "boundary",
        })
    }
}

/// A normalized interval exchange `(lambda, pi)`.
#[derive(Clone, PartialEq)]
pub struct IetPoint<S> {
    lengths: Vec<S>,
    perm: Permutation,
}

pub type FloatPoint = IetPoint<f64>;
pub type ExactPoint = IetPoint<BigRational>;

impl<S: Length> IetPoint<S> {
    /// Validates positivity and normalizes to `|lambda| = 1`.
    pub fn new(lengths: Vec<S>, perm: Permutation) -> Result<Self> {
        if lengths.len() != perm.len() {
            return Err(Error::InvalidLengths(format!(
                "{} lengths for a permutation of {} symbols",
                lengths.len(),
                perm.len()
            )));
        }
        if lengths.iter().any(|l| !(l > &S::zero())) {
            return Err(Error::InvalidLengths("lengths must be positive".into()));
        }
        let mut lengths = lengths;
        normalize(&mut lengths);
        Ok(IetPoint { lengths, perm })
    }

    pub fn lengths(&self) -> &[S] {
        &self.lengths
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn to_f64(&self) -> FloatPoint {
        IetPoint {
            lengths: self.lengths.iter().map(Length::to_f64).collect(),
            perm: self.perm.clone(),
        }
    }

    pub fn classify(&self) -> Side {
        classify_raw(&self.lengths, &self.perm)
    }
}

impl FloatPoint {
    /// Exact rational copy of a float point (every double is a dyadic rational).
    pub fn to_exact(&self) -> ExactPoint {
        let lengths = self
            .lengths
            .iter()
            .map(|&x| BigRational::from_float(x).expect("finite length"))
            .collect();
        IetPoint::new(lengths, self.perm.clone()).expect("positive lengths stay positive")
    }

    pub fn min_length(&self) -> f64 {
        self.lengths.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl<S: fmt::Debug> fmt::Debug for IetPoint<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.lengths, self.perm)
    }
}

fn normalize<S: Length>(lengths: &mut [S]) -> S {
    let sum = lengths.iter().cloned().fold(S::zero(), |a, b| a + b);
    for l in lengths.iter_mut() {
        *l = l.clone() / sum.clone();
    }
    sum
}

fn classify_raw<S: Length>(lengths: &[S], perm: &Permutation) -> Side {
    let m = perm.len();
    let k = perm.preimage(m);
    let (lk, lm) = (&lengths[k - 1], &lengths[m - 1]);
    if lk > lm {
        Side::Plus
    } else if lm > lk {
        Side::Minus
    } else {
        Side::Boundary
    }
}

pub fn classify<S: Length>(x: &IetPoint<S>) -> Side {
    x.classify()
}

/// One accelerated step: the letter it reads and the suspension time it takes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub op: Op,
    pub count: u64,
    pub start: Permutation,
    /// `-ln` of the total length remaining after the step, i.e. the
    /// Teichmüller flow time between the two transversal crossings.
    pub flow_time: f64,
}

impl StepRecord {
    pub fn letter(&self) -> Letter {
        Letter {
            op: self.op,
            count: self.count,
            start: self.start.clone(),
        }
    }
}

/// Per-coordinate forward error bounds for the float backend, used to tell
/// whether a branch decision is certified by the computed values.
#[derive(Clone, Debug)]
struct ErrorTrack {
    rel: Vec<f64>,
    uncertified: bool,
}

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

impl ErrorTrack {
    fn new(m: usize) -> Self {
        ErrorTrack {
            rel: vec![UNIT_ROUNDOFF; m],
            uncertified: false,
        }
    }

    fn check_decision(&mut self, lengths: &[f64], k0: usize, last: usize) {
        let margin = (lengths[k0] - lengths[last]).abs();
        let err = self.rel[k0] * lengths[k0] + self.rel[last] * lengths[last];
        if margin <= 2.0 * err {
            self.uncertified = true;
        }
    }
}

/// Single Rauzy-Veech step on unnormalized lengths, in place.
fn raw_rauzy_step<S: Length>(
    lengths: &mut [S],
    perm: &mut Permutation,
    op: Op,
    track: Option<&mut ErrorTrack>,
) {
    let m = perm.len();
    let k0 = perm.preimage(m) - 1;
    let last = m - 1;
    match op {
        Op::A => {
            let loser = lengths[last].clone();
            let winner = lengths[k0].clone();
            let new = winner.clone() - loser.clone();
            if let Some(t) = track {
                let (w, l, n) = (winner.to_f64(), loser.to_f64(), new.to_f64());
                t.rel[k0] = (t.rel[k0] * w + t.rel[last] * l) / n + UNIT_ROUNDOFF;
                t.rel[k0 + 1..].rotate_right(1);
            }
            lengths[k0] = new;
            lengths[k0 + 1..].rotate_right(1);
        }
        Op::B => {
            let loser = lengths[k0].clone();
            let winner = lengths[last].clone();
            let new = winner.clone() - loser.clone();
            if let Some(t) = track {
                let (w, l, n) = (winner.to_f64(), loser.to_f64(), new.to_f64());
                t.rel[last] = (t.rel[last] * w + t.rel[k0] * l) / n + UNIT_ROUNDOFF;
            }
            lengths[last] = new;
        }
    }
    *perm = perm.apply(op);
}

/// Applies as many complete `op`-cycles as can be taken without the branch
/// type changing, leaving at least one cycle for single steps. Returns the
/// number of single Rauzy-Veech steps this stands for.
fn bulk_cycles<S: Length>(
    lengths: &mut [S],
    perm: &Permutation,
    op: Op,
    track: Option<&mut ErrorTrack>,
) -> u64 {
    let m = perm.len();
    let (winner, losers): (usize, Vec<usize>) = match op {
        Op::A => {
            let k0 = perm.preimage(m) - 1;
            (k0, (k0 + 1..m).collect())
        }
        Op::B => {
            let last = perm.image(m);
            (m - 1, (0..m).filter(|&j| perm.image(j + 1) > last).collect())
        }
    };
    let tail = losers
        .iter()
        .fold(S::zero(), |acc, &j| acc + lengths[j].clone());
    let ratio = lengths[winner].floor_ratio(&tail);
    if ratio < 2 {
        return 0;
    }
    let mut cycles = ratio - 1;
    let mut new;
    loop {
        new = lengths[winner].clone() - S::from_u64(cycles) * tail.clone();
        if new > S::zero() || cycles == 0 {
            break;
        }
        cycles /= 2;
    }
    if cycles == 0 {
        return 0;
    }
    if let Some(t) = track {
        let w = lengths[winner].to_f64();
        let tail_err: f64 = losers
            .iter()
            .map(|&j| t.rel[j] * lengths[j].to_f64())
            .sum::<f64>()
            + m as f64 * UNIT_ROUNDOFF * tail.to_f64();
        let c = cycles as f64;
        let n = new.to_f64();
        t.rel[winner] = (t.rel[winner] * w + c * tail_err + 2.0 * UNIT_ROUNDOFF * c * tail.to_f64())
            / n
            + UNIT_ROUNDOFF;
    }
    lengths[winner] = new;
    cycles.saturating_mul(losers.len() as u64)
}

/// One Zorich step in place on normalized lengths; leaves them normalized.
fn zorich_kernel<S: Length>(
    lengths: &mut [S],
    perm: &mut Permutation,
    cap: u64,
    mut track: Option<&mut ErrorTrack>,
) -> Result<StepRecord> {
    let m = perm.len();
    let side = classify_raw(lengths, perm);
    let Some(op) = side.op() else {
        return Err(Error::NonGeneric { step: 0 });
    };
    let start = perm.clone();
    let mut count: u64 = 0;
    loop {
        let bulk = bulk_cycles(lengths, perm, op, track.as_deref_mut());
        count = count.saturating_add(bulk);
        if bulk > 0 && classify_raw(lengths, perm) == Side::Boundary {
            return Err(Error::NonGeneric { step: 0 });
        }
        count = count.saturating_add(1);
        if count > cap {
            return Err(Error::CapExceeded { cap, step: 0 });
        }
        raw_rauzy_step(lengths, perm, op, track.as_deref_mut());
        if let Some(t) = track.as_deref_mut() {
            let floats: Vec<f64> = lengths.iter().map(Length::to_f64).collect();
            t.check_decision(&floats, perm.preimage(m) - 1, m - 1);
        }
        match classify_raw(lengths, perm) {
            Side::Boundary => return Err(Error::NonGeneric { step: 0 }),
            s if s == side => continue,
            _ => break,
        }
    }
    let remaining = normalize(lengths);
    if let Some(t) = track {
        for r in t.rel.iter_mut() {
            *r += 2.0 * UNIT_ROUNDOFF;
        }
    }
    Ok(StepRecord {
        op,
        count,
        start,
        flow_time: -remaining.ln(),
    })
}

/// One normalized Rauzy-Veech step, choosing the branch with positive image.
pub fn rauzy_step<S: Length>(x: &IetPoint<S>) -> Result<(IetPoint<S>, Op)> {
    let Some(op) = x.classify().op() else {
        return Err(Error::NonGeneric { step: 0 });
    };
    let mut lengths = x.lengths.clone();
    let mut perm = x.perm.clone();
    raw_rauzy_step(&mut lengths, &mut perm, op, None);
    normalize(&mut lengths);
    Ok((IetPoint { lengths, perm }, op))
}

/// `G(x)`: Rauzy-Veech steps of one type until the type flips.
pub fn zorich_step<S: Length>(x: &IetPoint<S>, cap: u64) -> Result<(IetPoint<S>, StepRecord)> {
    let mut lengths = x.lengths.clone();
    let mut perm = x.perm.clone();
    let record = zorich_kernel(&mut lengths, &mut perm, cap, None)?;
    Ok((IetPoint { lengths, perm }, record))
}

/// `(A(w) lambda / |A(w) lambda|, w^-1 pi)`: the point of the cylinder of `w`
/// that `w` carries onto `x`.
pub fn inverse_branch<S: Length>(w: &Word, x: &IetPoint<S>) -> Result<IetPoint<S>> {
    if let Some(last) = w.letters().last() {
        if last.end() != x.perm {
            return Err(Error::IncompatibleWord(format!(
                "word ends at {:?}, point has {:?}",
                last.end(),
                x.perm
            )));
        }
    }
    let mut lengths = x.lengths.clone();
    for letter in w.letters().iter().rev() {
        let a = letter_matrix(letter);
        let n = a.dim();
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let v = a
                .row(i)
                .iter()
                .zip(&lengths)
                .filter(|(e, _)| !e.is_zero())
                .fold(S::zero(), |acc, (e, l)| acc + S::from_biguint(e) * l.clone());
            next.push(v);
        }
        normalize(&mut next);
        lengths = next;
    }
    let perm = w
        .letters()
        .first()
        .map(|l| l.start.clone())
        .unwrap_or_else(|| x.perm.clone());
    Ok(IetPoint { lengths, perm })
}

/// Hilbert projective distance; `+inf` across different permutations.
pub fn hilbert_metric<S: Length>(x: &IetPoint<S>, y: &IetPoint<S>) -> f64 {
    if x.perm != y.perm {
        return f64::INFINITY;
    }
    hilbert_distance(&x.lengths, &y.lengths)
}

/// Hilbert distance between two positive vectors of equal dimension.
pub fn hilbert_distance<S: Length>(x: &[S], y: &[S]) -> f64 {
    let ratios: Vec<S> = x.iter().zip(y).map(|(a, b)| a.clone() / b.clone()).collect();
    let max = ratios.iter().cloned().reduce(|a, b| if b > a { b } else { a });
    let min = ratios.into_iter().reduce(|a, b| if b < a { b } else { a });
    match (max, min) {
        (Some(max), Some(min)) if min > S::zero() => {
            let d = (max / min).ln();
            if d < 0.0 {
                0.0
            } else {
                d
            }
        }
        _ => f64::INFINITY,
    }
}

/// Precision diagnostics of a float orbit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionLog {
    /// First step after which some length fell below [`TINY_LENGTH`].
    pub first_tiny: Option<usize>,
    /// First step whose branch decisions were not certified by the tracked
    /// rounding-error bounds; exact orbits agree with the float orbit before it.
    pub first_uncertified: Option<usize>,
    pub tiny_count: u64,
    pub uncertified_count: u64,
}

impl PrecisionLog {
    /// Index of the first precision event of either kind.
    pub fn first_event(&self) -> Option<usize> {
        match (self.first_tiny, self.first_uncertified) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// A streaming Zorich orbit. Each call to [`Orbit::advance`] reads one letter.
#[derive(Clone, Debug)]
pub struct Orbit<S> {
    lengths: Vec<S>,
    perm: Permutation,
    cap: u64,
    denominator_bits: u64,
    step: usize,
    track: Option<ErrorTrack>,
    precision: PrecisionLog,
}

impl<S: Length> Orbit<S> {
    pub fn new(x0: IetPoint<S>) -> Self {
        let track = (S::BACKEND == Backend::Float).then(|| ErrorTrack::new(x0.dim()));
        Orbit {
            lengths: x0.lengths,
            perm: x0.perm,
            cap: DEFAULT_CAP,
            denominator_bits: DEFAULT_DENOMINATOR_BITS,
            step: 0,
            track,
            precision: PrecisionLog::default(),
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_denominator_bound(mut self, bits: u64) -> Self {
        self.denominator_bits = bits;
        self
    }

    pub fn lengths(&self) -> &[S] {
        &self.lengths
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn point(&self) -> IetPoint<S> {
        IetPoint {
            lengths: self.lengths.clone(),
            perm: self.perm.clone(),
        }
    }

    pub fn side(&self) -> Side {
        classify_raw(&self.lengths, &self.perm)
    }

    /// Number of steps taken so far.
    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn precision(&self) -> &PrecisionLog {
        &self.precision
    }

    /// Advances by one Zorich step and returns the letter read.
    pub fn advance(&mut self) -> Result<StepRecord> {
        let step = self.step;
        let record = zorich_kernel(&mut self.lengths, &mut self.perm, self.cap, self.track.as_mut())
            .map_err(|e| e.at_step(step))?;
        self.step += 1;
        match S::BACKEND {
            Backend::Float => {
                let min = self
                    .lengths
                    .iter()
                    .map(Length::to_f64)
                    .fold(f64::INFINITY, f64::min);
                if min < TINY_LENGTH {
                    self.precision.tiny_count += 1;
                    self.precision.first_tiny.get_or_insert(step);
                }
                if let Some(t) = self.track.as_mut() {
                    if std::mem::take(&mut t.uncertified) {
                        self.precision.uncertified_count += 1;
                        self.precision.first_uncertified.get_or_insert(step);
                    }
                }
            }
            Backend::Exact => {
                let bits = self.lengths.iter().map(Length::size_bits).max().unwrap_or(0);
                if bits > self.denominator_bits {
                    return Err(Error::DenominatorOverflow {
                        bits,
                        bound: self.denominator_bits,
                        step,
                    });
                }
            }
        }
        Ok(record)
    }
}

/// A finite orbit: each entry is the image point and the letter read to reach it.
#[derive(Clone, Debug)]
pub struct OrbitTrace<S> {
    pub steps: Vec<(IetPoint<S>, StepRecord)>,
    pub precision: PrecisionLog,
}

/// `steps` successive Zorich steps from `x0`.
pub fn orbit<S: Length>(x0: &IetPoint<S>, steps: usize, cap: u64) -> Result<OrbitTrace<S>> {
    let mut orbit = Orbit::new(x0.clone()).with_cap(cap);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let record = orbit.advance()?;
        out.push((orbit.point(), record));
    }
    Ok(OrbitTrace {
        steps: out,
        precision: orbit.precision.clone(),
    })
}

/// Uniform point of the open unit simplex, as normalized exponentials.
pub fn uniform_simplex<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
        let sum: f64 = v.iter().sum();
        if sum > 0.0 && v.iter().all(|&x| x > 0.0) {
            v.iter_mut().for_each(|x| *x /= sum);
            return v;
        }
    }
}

/// Parses one length: `p/q` or a decimal, read exactly by the exact backend;
/// the float backend also accepts anything `f64` parses.
pub fn parse_length<S: Length>(token: &str) -> Result<S> {
    let t = token.trim();
    let bad = || Error::Parse(format!("bad length {t:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(S::from_rational(&BigRational::new(p, q)));
    }
    let (int, frac) = t.split_once('.').unwrap_or((t, ""));
    let plain = |d: &str| d.chars().all(|c| c.is_ascii_digit());
    if S::BACKEND == Backend::Exact && plain(int) && plain(frac) && !(int.is_empty() && frac.is_empty()) {
        let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        return Ok(S::from_rational(&BigRational::new(digits, scale)));
    }
    let x: f64 = t.parse().map_err(|_| bad())?;
    S::from_f64(x).ok_or_else(bad)
}

/// Parses a comma-separated list of lengths with [`parse_length`].
pub fn parse_lengths<S: Length>(s: &str) -> Result<Vec<S>> {
    s.split(',').map(parse_length).collect()
}

/// Exact point from rationals given as `(numerator, denominator)` pairs.
pub fn exact_point(fracs: &[(i64, i64)], perm: Permutation) -> Result<ExactPoint> {
    let lengths = fracs
        .iter()
        .map(|&(p, q)| {
            if q == 0 {
                Err(Error::InvalidLengths("zero denominator".into()))
            } else {
                Ok(BigRational::new(BigInt::from(p), BigInt::from(q)))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    IetPoint::new(lengths, perm)
}

#[doc(hidden)]
pub fn rational(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

impl<S: Length> IetPoint<S> {
    /// Minimum of `lambda_m` and `lambda_{pi^-1 m}`: the length lost by one step.
    pub fn step_loss(&self) -> S {
        let m = self.dim();
        let a = self.lengths[self.perm.preimage(m) - 1].clone();
        let b = self.lengths[m - 1].clone();
        if a < b {
            a
        } else {
            b
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    fn fp(l: &[f64], s: &str) -> FloatPoint {
        IetPoint::new(l.to_vec(), p(s)).unwrap()
    }

    fn is_unit_sum(lengths: &[f64]) -> bool {
        (lengths.iter().sum::<f64>() - 1.0).abs() < 1e-14
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14)
    }

    #[test]
    fn classify_examples() {
        assert_eq!(fp(&[0.7, 0.3], "2 1").classify(), Side::Plus);
        assert_eq!(fp(&[0.3, 0.7], "2 1").classify(), Side::Minus);
        assert_eq!(fp(&[0.5, 0.5], "2 1").classify(), Side::Boundary);
    }

    #[test]
    fn rauzy_step_examples() {
        let (y, op) = rauzy_step(&fp(&[0.3, 0.7], "2 1")).unwrap();
        assert_eq!(op, Op::B);
        assert!(close(y.lengths(), &[3.0 / 7.0, 4.0 / 7.0]));

        let (y, op) = rauzy_step(&fp(&[0.7, 0.3], "2 1")).unwrap();
        assert_eq!(op, Op::A);
        assert!(close(y.lengths(), &[4.0 / 7.0, 3.0 / 7.0]));

        let x = exact_point(&[(1, 3), (2, 3)], p("2 1")).unwrap();
        let (y, op) = rauzy_step(&x).unwrap();
        assert_eq!(op, Op::B);
        assert_eq!(y.lengths(), &[rational(1, 2), rational(1, 2)]);

        assert!(matches!(
            rauzy_step(&fp(&[0.5, 0.5], "2 1")),
            Err(Error::NonGeneric { .. })
        ));
    }

    #[test]
    fn zorich_step_examples() {
        let (y, r) = zorich_step(&fp(&[0.3, 0.7], "2 1"), DEFAULT_CAP).unwrap();
        assert!(close(y.lengths(), &[0.75, 0.25]));
        assert_eq!((r.op, r.count, r.start.clone()), (Op::B, 2, p("2 1")));
        assert!((r.flow_time - (-(0.4f64).ln())).abs() < 1e-14);

        let (y, r) = zorich_step(&fp(&[0.7, 0.3], "2 1"), DEFAULT_CAP).unwrap();
        assert!(close(y.lengths(), &[0.25, 0.75]));
        assert_eq!((r.op, r.count), (Op::A, 2));

        let x = exact_point(&[(2, 5), (3, 5)], p("2 1")).unwrap();
        let (y, r) = zorich_step(&x, DEFAULT_CAP).unwrap();
        assert_eq!(y.lengths(), &[rational(2, 3), rational(1, 3)]);
        assert_eq!((r.op, r.count), (Op::B, 1));
    }

    #[test]
    fn zorich_cap_is_enforced() {
        let x = exact_point(&[(2, 1001), (999, 1001)], p("2 1")).unwrap();
        let (_, r) = zorich_step(&x, DEFAULT_CAP).unwrap();
        assert_eq!(r.count, 499);
        assert!(matches!(
            zorich_step(&x, 100),
            Err(Error::CapExceeded { cap: 100, .. })
        ));
    }

    /// Plain iteration of single steps, the reference for the cycle acceleration.
    fn naive_zorich(x: &ExactPoint) -> Result<(ExactPoint, Op, u64)> {
        let side = x.classify();
        let mut cur = x.clone();
        let mut n = 0;
        let op = side.op().ok_or(Error::NonGeneric { step: 0 })?;
        loop {
            let (y, _) = rauzy_step(&cur)?;
            n += 1;
            cur = y;
            match cur.classify() {
                Side::Boundary => return Err(Error::NonGeneric { step: 0 }),
                s if s == side => continue,
                _ => return Ok((cur, op, n)),
            }
        }
    }

    #[test]
    fn accelerated_step_matches_plain_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 2..=5 {
            let class = crate::combinatorics::rauzy_class(&Permutation::reversal(m).unwrap()).unwrap();
            for _ in 0..200 {
                let pi = class.nodes()[rng.random_range(0..class.len())].clone();
                let fracs: Vec<(i64, i64)> = (0..m)
                    .map(|_| (rng.random_range(1..400), rng.random_range(1..50)))
                    .collect();
                let x = exact_point(&fracs, pi).unwrap();
                let fast = zorich_step(&x, u64::MAX);
                let slow = naive_zorich(&x);
                match (fast, slow) {
                    (Ok((y, r)), Ok((z, op, n))) => {
                        assert_eq!(y, z);
                        assert_eq!((r.op, r.count), (op, n));
                    }
                    (Err(a), Err(b)) => assert_eq!(a, b),
                    (a, b) => panic!("mismatch {a:?} vs {b:?}"),
                }
            }
        }
    }

    #[test]
    fn inverse_branch_examples() {
        let w: Word = "b:2@2 1".parse().unwrap();
        let x = exact_point(&[(3, 4), (1, 4)], p("2 1")).unwrap();
        let y = inverse_branch(&w, &x).unwrap();
        assert_eq!(y.lengths(), &[rational(3, 10), rational(7, 10)]);

        assert_eq!(inverse_branch(&Word::empty(), &x).unwrap(), x);

        let w: Word = "a:1@2 1".parse().unwrap();
        let x = exact_point(&[(1, 2), (1, 2)], p("2 1")).unwrap();
        let y = inverse_branch(&w, &x).unwrap();
        assert_eq!(y.lengths(), &[rational(2, 3), rational(1, 3)]);

        let w: Word = "a:1@3 2 1".parse().unwrap();
        let x = exact_point(&[(1, 2), (1, 4), (1, 4)], p("3 2 1")).unwrap();
        assert!(inverse_branch(&w, &x).is_err());
    }

    #[test]
    fn hilbert_metric_examples() {
        let x = exact_point(&[(1, 2), (1, 2)], p("2 1")).unwrap();
        let y = exact_point(&[(1, 3), (2, 3)], p("2 1")).unwrap();
        assert_eq!(hilbert_metric(&x, &x), 0.0);
        assert!((hilbert_metric(&x, &y) - 2f64.ln()).abs() < 1e-15);
        let z = exact_point(&[(1, 2), (1, 4), (1, 4)], p("3 2 1")).unwrap();
        let w = exact_point(&[(1, 2), (1, 4), (1, 4)], p("2 3 1")).unwrap();
        assert!(hilbert_metric(&z, &w).is_infinite());
    }

    #[test]
    fn orbit_examples() {
        let trace = orbit(&fp(&[0.3, 0.7], "2 1"), 2, DEFAULT_CAP).unwrap();
        assert_eq!(trace.steps.len(), 2);
        assert_eq!((trace.steps[0].1.op, trace.steps[0].1.count), (Op::B, 2));
        assert_eq!(trace.steps[1].1.op, Op::A);
        assert!(close(trace.steps[0].0.lengths(), &[0.75, 0.25]));

        assert!(orbit(&fp(&[0.3, 0.7], "2 1"), 0, DEFAULT_CAP).unwrap().steps.is_empty());

        let x = exact_point(&[(1, 3), (2, 3)], p("2 1")).unwrap();
        assert!(matches!(
            orbit(&x, 5, DEFAULT_CAP),
            Err(Error::NonGeneric { step: 0 })
        ));
    }

    #[test]
    fn exact_orbit_reports_denominator_overflow() {
        let x = exact_point(&[(1, 1), (1, 1), (1, 1), (1, 1)], p("4 3 2 1")).unwrap();
        let x = IetPoint::new(
            x.lengths()
                .iter()
                .enumerate()
                .map(|(i, l)| l.clone() * rational(1_000_003 + 17 * i as i64, 1_000_000))
                .collect(),
            x.perm().clone(),
        )
        .unwrap();
        let mut o = Orbit::new(x).with_denominator_bound(16);
        let err = (0..1000).find_map(|_| o.advance().err()).unwrap();
        assert!(matches!(err, Error::DenominatorOverflow { bound: 16, .. }), "{err:?}");
    }

    #[test]
    fn float_normalization_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = fp(&[rng.random(), rng.random(), rng.random(), rng.random()], "4 3 2 1");
        let mut o = Orbit::new(x);
        for _ in 0..1000 {
            o.advance().unwrap();
            assert!(is_unit_sum(o.lengths()));
        }
    }

    #[test]
    fn length_parsing() {
        let x: Vec<BigRational> = parse_lengths("0.3, 7/10,2").unwrap();
        assert_eq!(x, vec![rational(3, 10), rational(7, 10), rational(2, 1)]);
        let y: Vec<f64> = parse_lengths("0.3,7/10,1e-3").unwrap();
        assert_eq!(y, vec![0.3, 0.7, 1e-3]);
        let z: Vec<BigRational> = parse_lengths("1e-3").unwrap();
        assert_eq!(z[0], BigRational::from_float(1e-3).unwrap());
        assert!(parse_lengths::<f64>("1/0").is_err());
        assert!(parse_lengths::<BigRational>("x").is_err());
        assert!(parse_lengths::<f64>("").is_err());
    }
}
