//! Veech's zippered rectangles `(lambda, h, a, pi)`, the Teichmüller flow
//! `P^t`, the renormalization map `U` and the first return to the transversal.
//!
//! Only the floating-point representation is provided. `U` follows the branch
//! convention of [`crate::induction`]: plus points take `a`, minus points `b`.

use std::fmt;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cocycle::elementary_matrix;
use crate::combinatorics::{Op, Permutation};
use crate::error::{Error, Result};
use crate::induction::{uniform_simplex, zorich_step, FloatPoint, IetPoint, Side, StepRecord};

/// Tolerance used when a rectangle is checked after floating-point updates.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ZipperedRectangle {
    pub lengths: Vec<f64>,
    pub heights: Vec<f64>,
    pub zipper: Vec<f64>,
    pub perm: Permutation,
}

/// A failed constraint and by how much it fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub residual: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (residual {:e})", self.constraint, self.residual)
    }
}

/// JSON shape of a rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectangleDump {
    pub lambda: Vec<f64>,
    pub h: Vec<f64>,
    pub a: Vec<f64>,
    pub pi: Vec<usize>,
    pub area: f64,
    pub violations: Vec<Violation>,
}

/// `(i, j)` pairs of the linear equations `h_i - a_i = h_j - a_{j-1}`, `i = 0..=m`,
/// with `j = pi^-1(pi(i) + 1)` and the boundary conventions `pi(0) = 0`,
/// `pi^-1(m + 1) = m + 1`.
fn equation_pairs(perm: &Permutation) -> Vec<(usize, usize)> {
    let m = perm.len();
    (0..=m)
        .map(|i| {
            let v = if i == 0 { 1 } else { perm.image(i) + 1 };
            let j = if v == m + 1 { m + 1 } else { perm.preimage(v) };
            (i, j)
        })
        .collect()
}

impl ZipperedRectangle {
    pub fn new(lengths: Vec<f64>, heights: Vec<f64>, zipper: Vec<f64>, perm: Permutation) -> Result<Self> {
        let m = perm.len();
        if lengths.len() != m || heights.len() != m || zipper.len() != m {
            return Err(Error::InvalidLengths(format!(
                "rectangle vectors must all have {m} entries"
            )));
        }
        if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidLengths("lengths must be positive".into()));
        }
        Ok(ZipperedRectangle { lengths, heights, zipper, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    // 1-based accessors with the zero boundary values
    fn h(&self, i: usize) -> f64 {
        if i == 0 || i > self.dim() { 0.0 } else { self.heights[i - 1] }
    }

    fn a(&self, i: usize) -> f64 {
        if i == 0 || i > self.dim() { 0.0 } else { self.zipper[i - 1] }
    }

    pub fn area(&self) -> f64 {
        self.lengths.iter().zip(&self.heights).map(|(l, h)| l * h).sum()
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Comparison type of the base `(lambda, pi)`.
    pub fn side(&self) -> Side {
        let m = self.dim();
        let k = self.perm.preimage(m);
        let (lk, lm) = (self.lengths[k - 1], self.lengths[m - 1]);
        if lk > lm {
            Side::Plus
        } else if lm > lk {
            Side::Minus
        } else {
            Side::Boundary
        }
    }

    /// The normalized base point.
    pub fn base(&self) -> FloatPoint {
        IetPoint::new(self.lengths.clone(), self.perm.clone()).expect("lengths are positive")
    }

    /// Constraint violations beyond `tol`; empty iff the rectangle is valid.
    pub fn validate(&self, tol: f64) -> Vec<Violation> {
        let m = self.dim();
        let k = self.perm.preimage(m);
        let mut out = Vec::new();
        let mut check = |name: String, excess: f64| {
            if excess > tol {
                out.push(Violation { constraint: name, residual: excess });
            }
        };
        for (i, j) in equation_pairs(&self.perm) {
            let lhs = self.h(i) - self.a(i);
            let rhs = self.h(j) - self.a(j - 1);
            check(format!("h{i}-a{i}=h{j}-a{}", j - 1), (lhs - rhs).abs());
        }
        for i in 1..=m {
            check(format!("h{i}>=0"), -self.h(i));
        }
        for i in 1..m {
            check(format!("a{i}>=0"), -self.a(i));
        }
        for i in 1..m {
            if i != k {
                let bound = self.h(i).min(self.h(i + 1));
                check(format!("a{i}<=min(h{i},h{})", i + 1), self.a(i) - bound);
            }
        }
        check(format!("a{m}<=h{m}"), self.a(m) - self.h(m));
        check(format!("a{m}>=-h{k}"), -self.h(k) - self.a(m));
        check(format!("a{k}<=h{}", k + 1), self.a(k) - self.h(k + 1));
        out
    }

    /// [`validate`](Self::validate) plus the unit-area condition.
    pub fn validate_unit_area(&self, tol: f64) -> Vec<Violation> {
        let mut out = self.validate(tol);
        let excess = (self.area() - 1.0).abs();
        if excess > tol {
            out.push(Violation { constraint: "area=1".into(), residual: excess });
        }
        out
    }

    /// `P^t`: `(e^t lambda, e^-t h, e^-t a, pi)`.
    pub fn flow(&self, t: f64) -> Self {
        let (up, down) = (t.exp(), (-t).exp());
        ZipperedRectangle {
            lengths: self.lengths.iter().map(|l| l * up).collect(),
            heights: self.heights.iter().map(|h| h * down).collect(),
            zipper: self.zipper.iter().map(|a| a * down).collect(),
            perm: self.perm.clone(),
        }
    }

    /// The map `U`: `(A^-1 lambda, A^T h, a', c pi)` with the branch `c` of the base.
    pub fn zip_step(&self) -> Result<Self> {
        let m = self.dim();
        let k = self.perm.preimage(m);
        let op = self.side().op().ok_or(Error::NonGeneric { step: 0 })?;
        let mut lengths = self.lengths.clone();
        let mut zipper = self.zipper.clone();
        match op {
            Op::A => {
                lengths[k - 1] -= lengths[m - 1];
                lengths[k..].rotate_right(1);
                zipper[k - 1] = self.h(k) + self.a(m - 1);
                zipper[k..].copy_from_slice(&self.zipper[k - 1..m - 1]);
            }
            Op::B => {
                lengths[m - 1] -= lengths[k - 1];
                zipper[m - 1] = -self.h(k) + self.a(k - 1);
            }
        }
        let heights = elementary_matrix(op, &self.perm).transpose().apply_f64(&self.heights);
        Ok(ZipperedRectangle {
            lengths,
            heights,
            zipper,
            perm: self.perm.apply(op),
        })
    }

    /// Flow time from this rectangle, taken on the transversal `|lambda| = 1`,
    /// to the next crossing: `-ln(1 - min(lambda_m, lambda_{pi^-1 m}))`.
    pub fn tau(&self) -> f64 {
        let m = self.dim();
        let k = self.perm.preimage(m);
        let shortest = self.lengths[m - 1].min(self.lengths[k - 1]);
        -(-shortest / self.total_length()).ln_1p()
    }

    /// `U` followed by the flow back onto `|lambda| = 1`; returns the image
    /// and the flow time spent.
    pub fn elementary_return(&self) -> Result<(Self, f64)> {
        let y = self.zip_step()?;
        let t = -y.total_length().ln() + self.total_length().ln();
        let mut y = y.flow(t);
        let total = y.total_length();
        y.lengths.iter_mut().for_each(|l| *l /= total);
        Ok((y, t))
    }

    /// Component of the transversal the rectangle lies on: plus bases with
    /// `a_m <= 0` and minus bases with `a_m >= 0`. These are exactly the
    /// rectangles a run of the opposite branch arrives at.
    pub fn transversal_component(&self) -> Option<Side> {
        let am = self.zipper[self.dim() - 1];
        match self.side() {
            Side::Plus if am <= 0.0 => Some(Side::Plus),
            Side::Minus if am >= 0.0 => Some(Side::Minus),
            _ => None,
        }
    }

    /// First return of the flow to the transversal: elementary returns until
    /// the base type flips. The base of the result is the Zorich image of the
    /// base, and the record carries the accumulated flow time.
    pub fn first_return(&self, cap: u64) -> Result<(Self, StepRecord)> {
        if self.transversal_component().is_none() {
            return Err(Error::InvalidArgument(format!(
                "rectangle with {} base and a_m = {} is not on the transversal",
                self.side(),
                self.zipper[self.dim() - 1]
            )));
        }
        let side = self.side();
        let op = side.op().expect("transversal points are generic");
        let mut cur = self.clone();
        let mut count = 0u64;
        let mut flow_time = 0.0;
        loop {
            count += 1;
            if count > cap {
                return Err(Error::CapExceeded { cap, step: 0 });
            }
            let (next, t) = cur.elementary_return()?;
            cur = next;
            flow_time += t;
            match cur.side() {
                Side::Boundary => return Err(Error::NonGeneric { step: 0 }),
                s if s == side => continue,
                _ => break,
            }
        }
        let record = StepRecord {
            op,
            count,
            start: self.perm.clone(),
            flow_time,
        };
        Ok((cur, record))
    }

    pub fn dump(&self, tol: f64) -> RectangleDump {
        RectangleDump {
            lambda: self.lengths.clone(),
            h: self.heights.clone(),
            a: self.zipper.clone(),
            pi: self.perm.to_vec(),
            area: self.area(),
            violations: self.validate_unit_area(tol),
        }
    }
}

/// Solution space of the linear equations, unknowns ordered `a_1..a_m, h_1..h_m`:
/// each pivot unknown as a combination of the free ones.
#[derive(Clone, Debug)]
pub struct ZipperSolution {
    pub free: Vec<usize>,
    /// `(pivot unknown, coefficients over free)`.
    pub pivots: Vec<(usize, Vec<f64>)>,
}

impl ZipperSolution {
    pub fn new(perm: &Permutation) -> Self {
        let m = perm.len();
        let n = 2 * m;
        let col_a = |i: usize| (i >= 1 && i <= m).then(|| i - 1);
        let col_h = |i: usize| (i >= 1 && i <= m).then(|| m + i - 1);
        let mut rows: Vec<Vec<Rational64>> = Vec::new();
        for (i, j) in equation_pairs(perm) {
            let mut row = vec![Rational64::zero(); n];
            let mut add = |c: Option<usize>, v: i64| {
                if let Some(c) = c {
                    row[c] += Rational64::from_integer(v);
                }
            };
            // h_i - a_i - h_j + a_{j-1} = 0
            add(col_h(i), 1);
            add(col_a(i), -1);
            add(col_h(j), -1);
            add(col_a(j - 1), 1);
            rows.push(row);
        }
        let mut pivot_cols = Vec::new();
        let mut r = 0;
        for c in 0..n {
            let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
                continue;
            };
            rows.swap(r, p);
            let inv = rows[r][c].recip();
            rows[r].iter_mut().for_each(|v| *v *= inv);
            for i in 0..rows.len() {
                if i != r && !rows[i][c].is_zero() {
                    let f = rows[i][c];
                    for cc in 0..n {
                        let d = rows[r][cc] * f;
                        rows[i][cc] -= d;
                    }
                }
            }
            pivot_cols.push(c);
            r += 1;
        }
        let free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
        let pivots = pivot_cols
            .iter()
            .enumerate()
            .map(|(row, &c)| {
                let coeffs = free
                    .iter()
                    .map(|&f| (-rows[row][f]).to_f64().expect("small rational"))
                    .collect();
                (c, coeffs)
            })
            .collect();
        ZipperSolution { free, pivots }
    }

    /// Fills the `(a, h)` unknowns from values of the free ones.
    pub fn complete(&self, free_values: &[f64]) -> Vec<f64> {
        let n = self.free.len() + self.pivots.len();
        let mut x = vec![0.0; n];
        for (&c, &v) in self.free.iter().zip(free_values) {
            x[c] = v;
        }
        for (c, coeffs) in &self.pivots {
            x[*c] = coeffs.iter().zip(free_values).map(|(k, v)| k * v).sum();
        }
        x
    }
}

/// Samples a valid unit-area rectangle over a uniform base of `pi`'s simplex.
///
/// Free heights are drawn from `[0, 1]` and free zipper values from `[-1, 1]`,
/// rejecting draws that break an inequality.
pub fn random_rectangle<R: Rng + ?Sized>(
    perm: &Permutation,
    rng: &mut R,
    budget: usize,
) -> Result<ZipperedRectangle> {
    let m = perm.len();
    let solution = ZipperSolution::new(perm);
    for _ in 0..budget {
        let free: Vec<f64> = solution
            .free
            .iter()
            .map(|&c| if c < m { rng.random_range(-1.0..=1.0) } else { rng.random::<f64>() })
            .collect();
        let x = solution.complete(&free);
        let lengths = uniform_simplex(m, rng);
        let rect = ZipperedRectangle {
            lengths,
            heights: x[m..].to_vec(),
            zipper: x[..m].to_vec(),
            perm: perm.clone(),
        };
        if !rect.validate(0.0).is_empty() {
            continue;
        }
        let area = rect.area();
        if !(area > 0.0) {
            continue;
        }
        let scale = area.recip();
        return Ok(ZipperedRectangle {
            heights: rect.heights.iter().map(|h| h * scale).collect(),
            zipper: rect.zipper.iter().map(|a| a * scale).collect(),
            ..rect
        });
    }
    Err(Error::NotFound(format!(
        "no valid rectangle for {perm} within {budget} draws"
    )))
}

/// Largest coordinate difference between two rectangles over the same `pi`.
pub fn max_residual(x: &ZipperedRectangle, y: &ZipperedRectangle) -> f64 {
    let diff = |u: &[f64], v: &[f64]| {
        u.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    diff(&x.lengths, &y.lengths)
        .max(diff(&x.heights, &y.heights))
        .max(diff(&x.zipper, &y.zipper))
}

/// Outcome of [`self_test`] over random rectangles of one permutation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub samples: usize,
    /// Sampled rectangles passing every constraint, area included.
    pub valid: usize,
    /// Rectangles whose `U`-image passes every constraint.
    pub zip_valid: usize,
    /// Largest `|area(U x) - 1|`.
    pub area_residual: f64,
    /// Largest coordinate difference between `U P^t x` and `P^t U x`.
    pub commutation_residual: f64,
    /// Samples on the transversal, where the first return was compared with
    /// the Zorich step of the base.
    pub lifts: usize,
    /// Lifts reading the same letter and reaching the same permutation.
    pub lift_matches: usize,
    /// Largest difference in lengths or flow time over the lifts.
    pub lift_residual: f64,
}

impl SelfTestReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.valid == self.samples
            && self.zip_valid == self.samples
            && self.area_residual < tol
            && self.commutation_residual < tol
            && self.lift_matches == self.lifts
    }
}

/// Samples `samples` rectangles of `perm` and checks validity, that `U`
/// keeps validity and area, that `U` commutes with the flow, and that the
/// first return lifts the Zorich step of the base.
pub fn self_test<R: Rng + ?Sized>(
    perm: &Permutation,
    samples: usize,
    rng: &mut R,
    tol: f64,
    cap: u64,
) -> Result<SelfTestReport> {
    let mut report = SelfTestReport {
        samples,
        valid: 0,
        zip_valid: 0,
        area_residual: 0.0,
        commutation_residual: 0.0,
        lifts: 0,
        lift_matches: 0,
        lift_residual: 0.0,
    };
    for _ in 0..samples {
        let x = random_rectangle(perm, rng, 1_000_000)?;
        if x.validate_unit_area(tol).is_empty() {
            report.valid += 1;
        }
        let y = x.zip_step()?;
        if y.validate(tol).is_empty() {
            report.zip_valid += 1;
        }
        report.area_residual = report.area_residual.max((y.area() - 1.0).abs());
        let t = rng.random_range(-1.0..=1.0);
        let r = max_residual(&x.flow(t).zip_step()?, &y.flow(t));
        report.commutation_residual = report.commutation_residual.max(r);

        if x.transversal_component().is_some() {
            report.lifts += 1;
            let (lifted, rec) = x.first_return(cap)?;
            let (g, s) = zorich_step(&x.base(), cap)?;
            if (rec.op, rec.count, &rec.start) == (s.op, s.count, &s.start) && &lifted.perm == g.perm() {
                report.lift_matches += 1;
                let d = lifted
                    .lengths
                    .iter()
                    .zip(g.lengths())
                    .map(|(a, b)| (a - b).abs())
                    .fold((rec.flow_time - s.flow_time).abs(), f64::max);
                report.lift_residual = report.lift_residual.max(d);
            }
        }
    }
    Ok(report)
}
