//! Symbolic coding of the Zorich map: letters `(c, n, pi)`, admissible words,
//! finite prefixes of the coding map, cylinders and positivity words.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cocycle::{letter_matrix, word_matrix, RenormMatrix};
use crate::combinatorics::{Op, Permutation, RauzyClass};
use crate::error::{Error, Result};
use crate::induction::{IetPoint, Length, Orbit};

/// `n` consecutive Rauzy-Veech steps of type `op` starting at `start`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub op: Op,
    pub count: u64,
    pub start: Permutation,
}

impl Letter {
    pub fn new(op: Op, count: u64, start: Permutation) -> Result<Self> {
        if count == 0 {
            return Err(Error::IncompatibleWord("letter count must be >= 1".into()));
        }
        if !start.is_irreducible() {
            return Err(Error::Reducible(start.to_string()));
        }
        Ok(Letter { op, count, start })
    }

    /// `c^n pi`, the permutation this letter ends at.
    pub fn end(&self) -> Permutation {
        self.start.apply_n(self.op, self.count)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}@{}", self.op, self.count, self.start)
    }
}

impl FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad letter {s:?}, expected c:n@pi"));
        let (head, pi) = s.split_once('@').ok_or_else(bad)?;
        let (op, count) = head.split_once(':').ok_or_else(bad)?;
        let op: Op = op.parse()?;
        let count: u64 = count.trim().parse().map_err(|_| bad())?;
        Letter::new(op, count, pi.parse()?)
    }
}

/// The transition rule: `c1^{n1} pi1 = pi2` and `c1 != c2`.
pub fn letter_compat(first: &Letter, second: &Letter) -> bool {
    first.op != second.op && first.end() == second.start
}

/// A finite admissible word; consecutive letters always satisfy [`letter_compat`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Letter>", into = "Vec<Letter>")]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Word::default()
    }

    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        for (i, pair) in letters.windows(2).enumerate() {
            if !letter_compat(&pair[0], &pair[1]) {
                return Err(Error::IncompatibleWord(format!(
                    "letters {} ({}) and {} ({}) do not chain",
                    i + 1,
                    pair[0],
                    i + 2,
                    pair[1]
                )));
            }
        }
        Ok(Word { letters })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn push(&mut self, letter: Letter) -> Result<()> {
        if let Some(last) = self.letters.last() {
            if !letter_compat(last, &letter) {
                return Err(Error::IncompatibleWord(format!(
                    "{letter} cannot follow {last}"
                )));
            }
        }
        self.letters.push(letter);
        Ok(())
    }

    pub fn concat(&self, other: &Word) -> Result<Word> {
        if let (Some(a), Some(b)) = (self.letters.last(), other.letters.first()) {
            if !letter_compat(a, b) {
                return Err(Error::IncompatibleWord(format!("{b} cannot follow {a}")));
            }
        }
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(Word { letters })
    }

    /// Total number of Rauzy-Veech steps the word stands for.
    pub fn rauzy_steps(&self) -> u64 {
        self.letters.iter().map(|l| l.count).sum()
    }

    pub fn matrix(&self, dim: usize) -> RenormMatrix {
        word_matrix(self, dim)
    }
}

impl TryFrom<Vec<Letter>> for Word {
    type Error = Error;

    fn try_from(letters: Vec<Letter>) -> Result<Self> {
        Word::new(letters)
    }
}

impl From<Word> for Vec<Letter> {
    fn from(w: Word) -> Self {
        w.letters
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .split(';')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Letter>>>()?;
        Word::new(letters)
    }
}

/// True iff `x` can follow `w`: the last letter ends at `x`'s permutation and
/// the next letter read at `x` is of the other type. Equivalently, the inverse
/// branch of `w` carries `x` into the cylinder of `w`.
pub fn is_compatible_point<S: Length>(w: &Word, x: &IetPoint<S>) -> bool {
    let Some(last) = w.letters().last() else {
        return true;
    };
    last.end() == *x.perm() && x.classify().op() == Some(last.op.other())
}

/// The first `n` letters of the coding of `x`.
pub fn encode_prefix<S: Length>(x: &IetPoint<S>, n: usize, cap: u64) -> Result<Word> {
    let mut orbit = Orbit::new(x.clone()).with_cap(cap);
    let mut letters = Vec::with_capacity(n);
    for _ in 0..n {
        letters.push(orbit.advance()?.letter());
    }
    // alternation of types makes the letters chain automatically
    Ok(Word { letters })
}

/// Whether the coding of `x` starts with `w`.
pub fn cylinder_contains<S: Length>(w: &Word, x: &IetPoint<S>) -> bool {
    let mut orbit = Orbit::new(x.clone());
    for letter in w.letters() {
        // a longer run than the letter's count cannot match, so it bounds the work
        orbit = orbit.with_cap(letter.count);
        match orbit.advance() {
            Ok(r) if r.letter() == *letter => {}
            _ => return false,
        }
    }
    true
}

/// Vertices of the projective simplex `A(w) Delta` and its Hilbert diameter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CylinderGeometry {
    pub vertices: Vec<Vec<f64>>,
    pub diameter: f64,
}

/// The image simplex containing the cylinder of `w`: its vertices are the
/// normalized columns of `A(w)`, its diameter the Birkhoff diameter of `A(w)`.
pub fn cylinder_geometry(w: &Word, dim: usize) -> Result<CylinderGeometry> {
    if let Some(l) = w.letters().first() {
        if l.start.len() != dim {
            return Err(Error::IncompatibleWord(format!(
                "word over {} symbols, expected {dim}",
                l.start.len()
            )));
        }
    }
    let a = word_matrix(w, dim);
    Ok(CylinderGeometry {
        vertices: a.normalized_columns(),
        diameter: a.birkhoff_diameter(),
    })
}

/// Default bound on letter counts explored by [`find_positive_word`].
pub const DEFAULT_SEARCH_COUNT: u64 = 3;

/// The shortlex-first admissible word over `class` whose matrix is positive,
/// exploring letters with counts `1..=max_count` up to `max_len` letters.
pub fn find_positive_word(
    class: &RauzyClass,
    max_len: usize,
    max_count: u64,
) -> Result<(Word, RenormMatrix)> {
    let letters_from = |pi: &Permutation, op_filter: Option<Op>| -> Vec<Letter> {
        let mut out = Vec::new();
        for op in Op::ALL {
            if op_filter.is_some_and(|o| o != op) {
                continue;
            }
            for count in 1..=max_count {
                out.push(Letter {
                    op,
                    count,
                    start: pi.clone(),
                });
            }
        }
        out
    };

    let mut layer: Vec<(Vec<Letter>, RenormMatrix)> = Vec::new();
    for len in 1..=max_len {
        let mut next: Vec<(Vec<Letter>, RenormMatrix)> = Vec::new();
        if len == 1 {
            for pi in class.nodes() {
                for l in letters_from(pi, None) {
                    let a = letter_matrix(&l);
                    next.push((vec![l], a));
                }
            }
        } else {
            for (word, a) in &layer {
                let last = word.last().expect("nonempty");
                for l in letters_from(&last.end(), Some(last.op.other())) {
                    let b = a * &letter_matrix(&l);
                    let mut w = word.clone();
                    w.push(l);
                    next.push((w, b));
                }
            }
        }
        next.sort_by(|x, y| x.0.cmp(&y.0));
        if let Some((w, a)) = next.iter().find(|(_, a)| a.is_positive()) {
            return Ok((Word::new(w.clone())?, a.clone()));
        }
        layer = next;
    }
    Err(Error::NotFound(format!(
        "no positive word of length <= {max_len} with counts <= {max_count}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::rauzy_class;
    use crate::induction::{exact_point, inverse_branch, FloatPoint, DEFAULT_CAP};

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    fn l(s: &str) -> Letter {
        s.parse().unwrap()
    }

    fn fp(v: &[f64], s: &str) -> FloatPoint {
        IetPoint::new(v.to_vec(), p(s)).unwrap()
    }

    #[test]
    fn letter_compat_examples() {
        assert!(letter_compat(&l("a:3@2 1"), &l("b:5@2 1")));
        assert!(!letter_compat(&l("a:1@3 2 1"), &l("a:2@3 1 2")));
        assert!(!letter_compat(&l("b:1@3 2 1"), &l("a:1@3 2 1")));
        assert!(letter_compat(&l("b:1@3 2 1"), &l("a:1@2 3 1")));
    }

    #[test]
    fn concat_examples() {
        let w: Word = "a:1@2 1".parse().unwrap();
        assert_eq!(Word::empty().concat(&w).unwrap(), w);
        let v: Word = "b:1@2 1".parse().unwrap();
        assert_eq!(w.concat(&v).unwrap().len(), 2);
        assert!(w.concat(&w).is_err());
    }

    #[test]
    fn word_parsing() {
        let w: Word = "a:1@2 1;b:1@2 1".parse().unwrap();
        assert_eq!(w.to_string(), "a:1@2 1;b:1@2 1");
        assert!("a:1@2 1;a:1@2 1".parse::<Word>().is_err());
        assert!("a:0@2 1".parse::<Word>().is_err());
        assert!("c:1@2 1".parse::<Word>().is_err());
        assert!("a1@2 1".parse::<Word>().is_err());
        assert!("a:1@1 2".parse::<Word>().is_err());
        assert_eq!("".parse::<Word>().unwrap(), Word::empty());
    }

    #[test]
    fn compatible_points() {
        // after an a-letter the next letter is b, read at a minus point
        let w: Word = "a:2@3 2 1".parse().unwrap();
        assert!(is_compatible_point(&w, &fp(&[0.2, 0.3, 0.5], "3 2 1")));
        assert!(!is_compatible_point(&w, &fp(&[0.5, 0.3, 0.2], "3 2 1")));
        assert!(!is_compatible_point(&w, &fp(&[0.4, 0.2, 0.4], "3 2 1")));
        assert!(!is_compatible_point(&w, &fp(&[0.2, 0.3, 0.5], "2 3 1")));
        assert!(is_compatible_point(&Word::empty(), &fp(&[0.4, 0.2, 0.4], "3 2 1")));
    }

    #[test]
    fn compatible_points_pull_back_into_cylinder() {
        let w: Word = "a:2@3 2 1;b:1@3 2 1".parse().unwrap();
        let x = fp(&[0.5, 0.3, 0.2], "2 3 1");
        assert!(is_compatible_point(&w, &x));
        let y = inverse_branch(&w, &x).unwrap();
        assert!(cylinder_contains(&w, &y));
        assert_eq!(encode_prefix(&y, 2, DEFAULT_CAP).unwrap(), w);
    }

    #[test]
    fn encode_prefix_examples() {
        let x = fp(&[0.3, 0.7], "2 1");
        assert_eq!(encode_prefix(&x, 1, DEFAULT_CAP).unwrap().to_string(), "b:2@2 1");
        let x = fp(&[0.7, 0.3], "2 1");
        assert_eq!(encode_prefix(&x, 1, DEFAULT_CAP).unwrap().to_string(), "a:2@2 1");
        assert!(encode_prefix(&x, 0, DEFAULT_CAP).unwrap().is_empty());
    }

    #[test]
    fn cylinder_contains_examples() {
        let w: Word = "b:2@2 1".parse().unwrap();
        assert!(cylinder_contains(&w, &fp(&[0.3, 0.7], "2 1")));
        assert!(!cylinder_contains(&w, &fp(&[0.7, 0.3], "2 1")));
        assert!(cylinder_contains(&Word::empty(), &fp(&[0.7, 0.3], "2 1")));
        let x = exact_point(&[(1, 3), (2, 3)], p("2 1")).unwrap();
        assert!(!cylinder_contains(&w, &x));
    }

    #[test]
    fn cylinder_geometry_examples() {
        let w: Word = "a:1@2 1;b:1@2 1".parse().unwrap();
        let g = cylinder_geometry(&w, 2).unwrap();
        let expect = [[2.0 / 3.0, 1.0 / 3.0], [0.5, 0.5]];
        for (v, e) in g.vertices.iter().zip(expect) {
            assert!((v[0] - e[0]).abs() < 1e-15 && (v[1] - e[1]).abs() < 1e-15);
        }
        assert!(g.diameter.is_finite());

        let g = cylinder_geometry(&Word::empty(), 3).unwrap();
        assert!(g.diameter.is_infinite());

        let w: Word = "b:2@2 1".parse().unwrap();
        let g = cylinder_geometry(&w, 2).unwrap();
        assert_eq!(g.vertices, vec![vec![1.0 / 3.0, 2.0 / 3.0], vec![0.0, 1.0]]);
        assert!(g.diameter.is_infinite());
    }

    #[test]
    fn positive_word_examples() {
        let class = rauzy_class(&p("2 1")).unwrap();
        let (q, a) = find_positive_word(&class, 4, DEFAULT_SEARCH_COUNT).unwrap();
        assert_eq!(q.to_string(), "a:1@2 1;b:1@2 1");
        assert_eq!(a.to_csv(), "2,1\n1,1\n");
        assert!(!"b:2@2 1".parse::<Word>().unwrap().matrix(2).is_positive());
        assert!(matches!(
            find_positive_word(&class, 0, DEFAULT_SEARCH_COUNT),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn positive_words_exist_for_small_classes() {
        for m in 3..=5 {
            let class = rauzy_class(&Permutation::reversal(m).unwrap()).unwrap();
            let (q, a) = find_positive_word(&class, 12, DEFAULT_SEARCH_COUNT).unwrap();
            assert!(a.is_positive());
            assert_eq!(q.matrix(m), a);
        }
    }
}
