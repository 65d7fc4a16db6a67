//! Renormalization matrices over arbitrary-precision nonnegative integers.
//!
//! One Rauzy-Veech step with operation `c` at permutation `pi` satisfies the
//! reconstruction identity `lambda = A(c, pi) lambda'`, where `lambda'` are the
//! lengths after the step (before renormalization). Letters and words multiply
//! these left to right, so `A(w)` maps the arrival simplex onto the cylinder.

use std::fmt;
use std::ops::Mul;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::{smallvec, SmallVec};

use crate::combinatorics::{Op, Permutation};
use crate::symbolic::{Letter, Word};

/// A square matrix of nonnegative big integers, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RenormMatrix {
    dim: usize,
    entries: Vec<BigUint>,
}

impl RenormMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![BigUint::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = BigUint::one();
        }
        RenormMatrix { dim, entries }
    }

    /// Builds a matrix from row-major entries. Panics if the count is not a square.
    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        RenormMatrix {
            dim,
            entries: rows.iter().flatten().map(|&v| BigUint::from(v)).collect(),
        }
    }

    /// `E_ij` with 1-based indices.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = RenormMatrix {
            dim,
            entries: vec![BigUint::zero(); dim * dim],
        };
        m.entries[(i - 1) * dim + (j - 1)] = BigUint::one();
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry at 0-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> &BigUint {
        &self.entries[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[BigUint] {
        &self.entries[row * self.dim..(row + 1) * self.dim]
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.get(j, i).clone());
            }
        }
        RenormMatrix { dim: n, entries }
    }

    /// Entry sum; the norm used for all growth statistics.
    pub fn norm(&self) -> BigUint {
        self.entries.iter().sum()
    }

    pub fn column_sums(&self) -> Vec<BigUint> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().all(|e| !e.is_zero())
    }

    pub fn determinant(&self) -> BigInt {
        // Bareiss fraction-free elimination
        let n = self.dim;
        let mut a: Vec<BigInt> = self.entries.iter().map(|e| BigInt::from(e.clone())).collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a[k * n + k].is_zero() {
                let Some(r) = (k + 1..n).find(|&r| !a[r * n + k].is_zero()) else {
                    return BigInt::zero();
                };
                for c in 0..n {
                    a.swap(k * n + c, r * n + c);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j]) / &prev;
                    a[i * n + j] = v;
                }
            }
            prev = a[k * n + k].clone();
        }
        sign * prev
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = RenormMatrix::identity(self.dim);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `A x` in floating point. Entries beyond `f64` range saturate to infinity.
    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .map(|(a, v)| a.to_f64().unwrap_or(f64::INFINITY) * v)
                    .sum()
            })
            .collect()
    }

    /// `ln ||A||` for the entry-sum norm.
    pub fn ln_norm(&self) -> f64 {
        big_ln(&self.norm())
    }

    /// `ln |A x|` for a nonnegative vector, stable for astronomically large entries.
    pub fn ln_image_length(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .column_sums()
            .iter()
            .zip(x)
            .filter(|(c, &v)| !c.is_zero() && v > 0.0)
            .map(|(c, &v)| big_ln(c) + v.ln())
            .collect();
        log_sum_exp(&terms)
    }

    /// Projective (Birkhoff) diameter of the image of the positive cone:
    /// the largest Hilbert distance between two columns, `+inf` when two
    /// columns have different zero patterns.
    ///
    /// A positive matrix contracts the Hilbert metric by `tanh(diameter / 4)`.
    pub fn birkhoff_diameter(&self) -> f64 {
        let n = self.dim;
        let zero_pattern =
            |k: usize| -> Vec<bool> { (0..n).map(|i| self.get(i, k).is_zero()).collect() };
        let patterns: Vec<Vec<bool>> = (0..n).map(zero_pattern).collect();
        if patterns.iter().any(|p| p.iter().all(|&z| z)) {
            return f64::INFINITY;
        }
        let mut best = 0.0f64;
        for k in 0..n {
            for l in k + 1..n {
                if patterns[k] != patterns[l] {
                    return f64::INFINITY;
                }
                let rows: Vec<usize> = (0..n).filter(|&i| !patterns[k][i]).collect();
                // i maximizing A_ik / A_il, j maximizing A_jl / A_jk
                let pick = |num: usize, den: usize| {
                    let mut arg = rows[0];
                    for &r in &rows[1..] {
                        if self.get(r, num) * self.get(arg, den) > self.get(arg, num) * self.get(r, den) {
                            arg = r;
                        }
                    }
                    arg
                };
                let i = pick(k, l);
                let j = pick(l, k);
                let num = self.get(i, k) * self.get(j, l);
                let den = self.get(j, k) * self.get(i, l);
                best = best.max(ln_ratio(&num, &den));
            }
        }
        best
    }

    /// Contraction coefficient `tanh(diameter / 4)` of the Hilbert metric.
    pub fn contraction_coefficient(&self) -> f64 {
        let d = self.birkhoff_diameter();
        if d.is_infinite() {
            1.0
        } else {
            (d / 4.0).tanh()
        }
    }

    /// Columns normalized to the unit simplex.
    pub fn normalized_columns(&self) -> Vec<Vec<f64>> {
        let sums = self.column_sums();
        (0..self.dim)
            .map(|j| {
                (0..self.dim)
                    .map(|i| big_div_f64(self.get(i, j), &sums[j]))
                    .collect()
            })
            .collect()
    }

    /// Row-major CSV of decimal integers, one row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            let row: Vec<String> = self.row(i).iter().map(|e| e.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl Mul for &RenormMatrix {
    type Output = RenormMatrix;

    fn mul(self, rhs: &RenormMatrix) -> RenormMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut entries = vec![BigUint::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = rhs.get(k, j);
                    if !b.is_zero() {
                        entries[i * n + j] += a * b;
                    }
                }
            }
        }
        RenormMatrix { dim: n, entries }
    }
}

impl fmt::Debug for RenormMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.dim)
            .map(|i| self.row(i).iter().map(|e| e.to_string()).collect())
            .collect();
        write!(f, "{rows:?}")
    }
}

/// `A(c, pi)`.
///
/// For `b` this is `E + E_{m, pi^-1 m}`. For `a`, with `k = pi^-1 m`, row `i < k`
/// has a 1 at column `i`, row `k` has 1s at columns `k` and `k+1`, rows
/// `k < i < m` have a 1 at column `i+1`, and row `m` has a 1 at column `k+1`.
pub fn elementary_matrix(op: Op, pi: &Permutation) -> RenormMatrix {
    let m = pi.len();
    let mut a = RenormMatrix {
        dim: m,
        entries: vec![BigUint::zero(); m * m],
    };
    for_each_unit(op, pi, |i, j| a.entries[(i - 1) * m + (j - 1)] = BigUint::one());
    a
}

/// Calls `set(i, j)` for the 1-based positions of the ones of `A(c, pi)`.
fn for_each_unit(op: Op, pi: &Permutation, mut set: impl FnMut(usize, usize)) {
    let m = pi.len();
    let k = pi.preimage(m);
    match op {
        Op::B => {
            for i in 1..=m {
                set(i, i);
            }
            set(m, k);
        }
        Op::A => {
            for i in 1..k {
                set(i, i);
            }
            set(k, k);
            set(k, k + 1);
            for i in k + 1..m {
                set(i, i + 1);
            }
            set(m, k + 1);
        }
    }
}

/// Machine-word matrix for multiplying runs of small factors before any big
/// integer arithmetic is needed.
#[derive(Clone, Debug, PartialEq, Eq)]
struct SmallMatrix {
    dim: usize,
    entries: SmallVec<[u64; 16]>,
}

impl SmallMatrix {
    fn identity(dim: usize) -> Self {
        let mut entries = smallvec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        SmallMatrix { dim, entries }
    }

    fn elementary(op: Op, pi: &Permutation) -> Self {
        let m = pi.len();
        let mut entries = smallvec![0; m * m];
        for_each_unit(op, pi, |i, j| entries[(i - 1) * m + (j - 1)] = 1);
        SmallMatrix { dim: m, entries }
    }

    fn checked_mul(&self, rhs: &SmallMatrix) -> Option<SmallMatrix> {
        let n = self.dim;
        let mut entries: SmallVec<[u64; 16]> = smallvec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc: u128 = 0;
                for k in 0..n {
                    acc += self.entries[i * n + k] as u128 * rhs.entries[k * n + j] as u128;
                }
                entries[i * n + j] = u64::try_from(acc).ok()?;
            }
        }
        Some(SmallMatrix { dim: n, entries })
    }

    fn checked_pow(&self, mut e: u64) -> Option<SmallMatrix> {
        let mut base = self.clone();
        let mut acc = SmallMatrix::identity(self.dim);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.checked_mul(&base)?;
            }
        }
        Some(acc)
    }

    fn to_big(&self) -> RenormMatrix {
        RenormMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|&v| BigUint::from(v)).collect(),
        }
    }
}

/// `(cycle, partial)` products of a letter over its `c`-period.
fn letter_parts<M>(letter: &Letter, elem: impl Fn(Op, &Permutation) -> M, mul: impl Fn(&M, &M) -> Option<M>, id: M) -> Option<(M, M, u64)>
where
    M: Clone,
{
    let period = letter.start.period(letter.op) as u64;
    let rest = letter.count % period;
    let mut cycle = id.clone();
    let mut partial = id;
    let mut pi = letter.start.clone();
    for i in 0..period {
        let e = elem(letter.op, &pi);
        if i < rest {
            partial = mul(&partial, &e)?;
        }
        cycle = mul(&cycle, &e)?;
        pi = pi.apply(letter.op);
    }
    Some((cycle, partial, letter.count / period))
}

fn small_letter_matrix(letter: &Letter) -> Option<SmallMatrix> {
    let m = letter.start.len();
    let (cycle, partial, full) =
        letter_parts(letter, SmallMatrix::elementary, SmallMatrix::checked_mul, SmallMatrix::identity(m))?;
    cycle.checked_pow(full)?.checked_mul(&partial)
}

/// `A(w_1) = A(c, pi) A(c, c pi) ... A(c, c^{n-1} pi)`, using the periodicity
/// of the `c`-orbit of `pi` so that large counts cost `O(log n)` products.
pub fn letter_matrix(letter: &Letter) -> RenormMatrix {
    if let Some(small) = small_letter_matrix(letter) {
        return small.to_big();
    }
    let m = letter.start.len();
    let (cycle, partial, full) = letter_parts(
        letter,
        elementary_matrix,
        |x: &RenormMatrix, y: &RenormMatrix| Some(x * y),
        RenormMatrix::identity(m),
    )
    .expect("big products do not overflow");
    &cycle.pow(full) * &partial
}

/// `A(w) = A(w_1) ... A(w_n)`; the identity for the empty word.
///
/// The dimension of the empty word is unknown, so it must be supplied.
pub fn word_matrix(word: &Word, dim: usize) -> RenormMatrix {
    let mut acc: Option<RenormMatrix> = None;
    let mut run = SmallMatrix::identity(dim);
    let flush = |acc: Option<RenormMatrix>, f: &RenormMatrix| match acc {
        Some(a) => &a * f,
        None => f.clone(),
    };
    for l in word.letters() {
        match small_letter_matrix(l) {
            Some(s) => match run.checked_mul(&s) {
                Some(r) => run = r,
                None => {
                    acc = Some(flush(acc, &run.to_big()));
                    run = s;
                }
            },
            None => {
                acc = Some(flush(acc, &run.to_big()));
                acc = Some(flush(acc, &letter_matrix(l)));
                run = SmallMatrix::identity(dim);
            }
        }
    }
    flush(acc, &run.to_big())
}

pub fn matrix_norm(a: &RenormMatrix) -> BigUint {
    a.norm()
}

pub fn is_positive(a: &RenormMatrix) -> bool {
    a.is_positive()
}

pub fn birkhoff_diameter(a: &RenormMatrix) -> f64 {
    a.birkhoff_diameter()
}

/// Natural logarithm of a big integer; `-inf` for zero.
pub fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().expect("fits in f64").ln() + shift as f64 * std::f64::consts::LN_2
}

/// `a / b` as a float without overflowing on huge operands.
pub fn big_div_f64(a: &BigUint, b: &BigUint) -> f64 {
    let shift = a.bits().max(b.bits()).saturating_sub(900);
    let (a, b) = ((a >> shift).to_f64().unwrap(), (b >> shift).to_f64().unwrap());
    a / b
}

/// `ln(num / den)` computed through `ln_1p` of the exact difference, so ratios
/// extremely close to 1 keep full relative precision.
pub fn ln_ratio(num: &BigUint, den: &BigUint) -> f64 {
    if den.is_zero() {
        return f64::INFINITY;
    }
    if num.is_zero() {
        return f64::NEG_INFINITY;
    }
    let diff = BigInt::from(num.clone()) - BigInt::from(den.clone());
    let small = diff.abs().to_biguint().unwrap();
    if small.bits() + 2 < den.bits() {
        let r = big_div_f64(&small, den);
        if diff.is_negative() {
            (-r).ln_1p()
        } else {
            r.ln_1p()
        }
    } else {
        big_ln(num) - big_ln(den)
    }
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}
