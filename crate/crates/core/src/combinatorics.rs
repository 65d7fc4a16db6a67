//! Permutations, the Rauzy operations `a` and `b`, and Rauzy class graphs.
//!
//! Permutations are kept in one-line notation with 1-based images, so
//! `"3 2 1"` is the permutation sending 1 to 3, 2 to 2 and 3 to 1.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::symbolic::Word;

/// One of the two Rauzy operations; also the branch label of a Rauzy-Veech step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    A,
    B,
}

impl Op {
    pub const ALL: [Op; 2] = [Op::A, Op::B];

    pub fn other(self) -> Op {
        match self {
            Op::A => Op::B,
            Op::B => Op::A,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::A => "a",
            Op::B => "b",
        })
    }
}

impl FromStr for Op {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "a" | "A" => Ok(Op::A),
            "b" | "B" => Ok(Op::B),
            other => Err(Error::Parse(format!("unknown Rauzy operation {other:?}"))),
        }
    }
}

type Images = SmallVec<[u16; 16]>;

/// A bijection of `{1..m}`, `m >= 2`, stored by its images.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Images,
}

impl Permutation {
    /// Validates that `images` is a bijection of `{1..m}` with `m >= 2`.
    /// Irreducibility is not required here; see [`Permutation::irreducible`].
    pub fn new(images: &[usize]) -> Result<Self> {
        let m = images.len();
        if m < 2 {
            return Err(Error::InvalidPermutation(format!(
                "need at least 2 symbols, got {m}"
            )));
        }
        if m > u16::MAX as usize {
            return Err(Error::InvalidPermutation(format!("{m} symbols is too many")));
        }
        let mut seen = vec![false; m];
        for &v in images {
            if v == 0 || v > m {
                return Err(Error::InvalidPermutation(format!(
                    "image {v} outside 1..={m}"
                )));
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(Error::InvalidPermutation(format!("image {v} repeated")));
            }
        }
        Ok(Permutation {
            images: images.iter().map(|&v| v as u16).collect(),
        })
    }

    /// Like [`Permutation::new`] but also rejects reducible permutations.
    pub fn irreducible(images: &[usize]) -> Result<Self> {
        let p = Self::new(images)?;
        if !p.is_irreducible() {
            return Err(Error::Reducible(p.to_string()));
        }
        Ok(p)
    }

    /// The permutation `(m m-1 ... 1)`, irreducible for every `m >= 2`.
    pub fn reversal(m: usize) -> Result<Self> {
        Self::new(&(1..=m).rev().collect::<Vec<_>>())
    }

    /// Number of symbols `m`.
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `pi(j)` for `1 <= j <= m`.
    #[inline]
    pub fn image(&self, j: usize) -> usize {
        self.images[j - 1] as usize
    }

    /// `pi^-1(v)` for `1 <= v <= m`.
    #[inline]
    pub fn preimage(&self, v: usize) -> usize {
        self.images
            .iter()
            .position(|&x| x as usize == v)
            .expect("permutation invariant: every value has a preimage")
            + 1
    }

    pub fn images(&self) -> impl Iterator<Item = usize> + '_ {
        self.images.iter().map(|&v| v as usize)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.images().collect()
    }

    /// True iff no proper prefix `{1..k}`, `k < m`, is mapped onto itself.
    pub fn is_irreducible(&self) -> bool {
        let mut max = 0;
        for (k, v) in self.images().enumerate() {
            max = max.max(v);
            if max == k + 1 && k + 1 < self.len() {
                return false;
            }
        }
        true
    }

    pub fn apply_a(&self) -> Permutation {
        let m = self.len();
        let k = self.preimage(m);
        let mut out = Images::with_capacity(m);
        for j in 1..=m {
            let v = if j <= k {
                self.image(j)
            } else if j == k + 1 {
                self.image(m)
            } else {
                self.image(j - 1)
            };
            out.push(v as u16);
        }
        Permutation { images: out }
    }

    pub fn apply_b(&self) -> Permutation {
        let m = self.len();
        let last = self.image(m);
        let images = self
            .images()
            .map(|v| {
                let w = if v <= last {
                    v
                } else if v < m {
                    v + 1
                } else {
                    last + 1
                };
                w as u16
            })
            .collect();
        Permutation { images }
    }

    pub fn apply(&self, op: Op) -> Permutation {
        match op {
            Op::A => self.apply_a(),
            Op::B => self.apply_b(),
        }
    }

    /// Length of the cycle of `self` under repeated application of `op`.
    ///
    /// `a` rotates the images after position `pi^-1(m)`, `b` rotates the values
    /// above `pi(m)`, so the period is `m - pi^-1(m)` resp. `m - pi(m)`.
    pub fn period(&self, op: Op) -> usize {
        let m = self.len();
        match op {
            Op::A => m - self.preimage(m),
            Op::B => m - self.image(m),
        }
    }

    /// `op^n(self)`, reduced modulo the cycle length so huge `n` are cheap.
    pub fn apply_n(&self, op: Op, n: u64) -> Permutation {
        let period = self.period(op).max(1) as u64;
        let mut p = self.clone();
        for _ in 0..(n % period) {
            p = p.apply(op);
        }
        p
    }
}

impl PartialOrd for Permutation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortlex: shorter permutations first, then lexicographic on images.
impl Ord for Permutation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.images.cmp(&other.images))
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.images().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let images = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad permutation entry {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::new(&images)
    }
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.images())
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let images = Vec::<usize>::deserialize(d)?;
        Permutation::new(&images).map_err(serde::de::Error::custom)
    }
}

pub fn is_irreducible(pi: &Permutation) -> bool {
    pi.is_irreducible()
}

pub fn apply_a(pi: &Permutation) -> Permutation {
    pi.apply_a()
}

pub fn apply_b(pi: &Permutation) -> Permutation {
    pi.apply_b()
}

/// The Rauzy class of a permutation with its `a`/`b` edges.
///
/// Nodes are numbered in breadth-first order from the seed, each BFS layer
/// sorted shortlex, so numbering is independent of hash ordering.
#[derive(Clone, Debug)]
pub struct RauzyClass {
    nodes: Vec<Permutation>,
    index: HashMap<Permutation, usize>,
    edges: Vec<[usize; 2]>,
}

impl RauzyClass {
    pub fn nodes(&self) -> &[Permutation] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn seed(&self) -> &Permutation {
        &self.nodes[0]
    }

    pub fn index_of(&self, pi: &Permutation) -> Option<usize> {
        self.index.get(pi).copied()
    }

    pub fn contains(&self, pi: &Permutation) -> bool {
        self.index.contains_key(pi)
    }

    /// Target node index of the `op`-edge leaving node `node`.
    pub fn edge(&self, node: usize, op: Op) -> usize {
        self.edges[node][op as usize]
    }

    /// All edges as `(src, op, dst)` node indices, in node order, `a` before `b`.
    pub fn edge_list(&self) -> impl Iterator<Item = (usize, Op, usize)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(i, e)| Op::ALL.into_iter().map(move |op| (i, op, e[op as usize])))
    }

    /// Edge list as `src,op,dst` CSV lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("src,op,dst\n");
        for (s, op, d) in self.edge_list() {
            out.push_str(&format!("{},{},{}\n", self.nodes[s], op, self.nodes[d]));
        }
        out
    }
}

/// Breadth-first closure of `seed` under both Rauzy operations.
pub fn rauzy_class(seed: &Permutation) -> Result<RauzyClass> {
    if !seed.is_irreducible() {
        return Err(Error::Reducible(seed.to_string()));
    }
    let mut nodes = vec![seed.clone()];
    let mut index = HashMap::from([(seed.clone(), 0usize)]);
    let mut layer = VecDeque::from([seed.clone()]);
    while !layer.is_empty() {
        let mut next: Vec<Permutation> = Vec::new();
        for p in layer.drain(..) {
            for op in Op::ALL {
                let q = p.apply(op);
                if !index.contains_key(&q) && !next.contains(&q) {
                    next.push(q);
                }
            }
        }
        next.sort();
        for q in next {
            index.insert(q.clone(), nodes.len());
            nodes.push(q.clone());
            layer.push_back(q);
        }
    }
    let edges = nodes
        .iter()
        .map(|p| [index[&p.apply_a()], index[&p.apply_b()]])
        .collect();
    Ok(RauzyClass {
        nodes,
        index,
        edges,
    })
}

/// `w pi = w_n(...(w_1 pi)...)`, or `None` when some letter does not start at
/// the permutation reached so far.
pub fn word_action(w: &Word, pi: &Permutation) -> Option<Permutation> {
    let mut cur = pi.clone();
    for letter in w.letters() {
        if letter.start != cur {
            return None;
        }
        cur = letter.end();
    }
    Some(cur)
}

/// All irreducible permutations of `{1..m}`, in lexicographic order.
pub fn irreducible_permutations(m: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (1..=m).collect();
    loop {
        if let Ok(p) = Permutation::irreducible(&current) {
            out.push(p);
        }
        // next lexicographic permutation
        let Some(i) = (0..m.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::Letter;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn irreducibility_examples() {
        assert!(p("2 1").is_irreducible());
        assert!(!p("1 2").is_irreducible());
        assert!(!p("2 1 3").is_irreducible());
        assert!(p("3 2 1").is_irreducible());
        assert!(p("2 3 1").is_irreducible());
    }

    #[test]
    fn malformed_images_rejected() {
        assert!(Permutation::new(&[1, 1]).is_err());
        assert!(Permutation::new(&[0, 1]).is_err());
        assert!(Permutation::new(&[3, 1]).is_err());
        assert!(Permutation::new(&[1]).is_err());
        assert!("2 x".parse::<Permutation>().is_err());
        assert!(matches!(
            Permutation::irreducible(&[1, 2]),
            Err(Error::Reducible(_))
        ));
    }

    #[test]
    fn rauzy_operation_examples() {
        assert_eq!(p("2 1").apply_a(), p("2 1"));
        assert_eq!(p("3 2 1").apply_a(), p("3 1 2"));
        assert_eq!(p("2 3 1").apply_a(), p("2 3 1"));
        assert_eq!(p("2 1").apply_b(), p("2 1"));
        assert_eq!(p("3 2 1").apply_b(), p("2 3 1"));
        assert_eq!(p("3 1 2").apply_b(), p("3 1 2"));
    }

    #[test]
    fn operations_preserve_irreducibility_up_to_six() {
        for m in 2..=6 {
            for pi in irreducible_permutations(m) {
                assert!(pi.apply_a().is_irreducible(), "a{pi:?}");
                assert!(pi.apply_b().is_irreducible(), "b{pi:?}");
            }
        }
    }

    #[test]
    fn period_returns_to_start() {
        for m in 2..=6 {
            for pi in irreducible_permutations(m) {
                for op in Op::ALL {
                    let per = pi.period(op);
                    assert!(per >= 1);
                    let mut q = pi.clone();
                    for i in 1..=per {
                        q = q.apply(op);
                        assert_eq!(q == pi, i == per, "{op}^{i}{pi:?}");
                    }
                    assert_eq!(pi.apply_n(op, 7 * per as u64 + 1), pi.apply(op));
                }
            }
        }
    }

    #[test]
    fn irreducible_counts() {
        // 1, 3, 13, 71: irreducible (indecomposable) permutations of size 2..=5
        let counts: Vec<_> = (2..=5).map(|m| irreducible_permutations(m).len()).collect();
        assert_eq!(counts, vec![1, 3, 13, 71]);
    }

    #[test]
    fn rauzy_class_examples() {
        let c = rauzy_class(&p("2 1")).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.edge(0, Op::A), 0);
        assert_eq!(c.edge(0, Op::B), 0);

        let c = rauzy_class(&p("3 2 1")).unwrap();
        assert_eq!(c.nodes(), &[p("3 2 1"), p("2 3 1"), p("3 1 2")]);
        assert_eq!(c.edge_list().count(), 6);
        let csv = c.to_csv();
        assert!(csv.starts_with("src,op,dst\n3 2 1,a,3 1 2\n3 2 1,b,2 3 1\n"));

        assert!(matches!(rauzy_class(&p("1 2")), Err(Error::Reducible(_))));
    }

    #[test]
    fn classes_are_strongly_connected_and_edges_bijective() {
        for m in 2..=5 {
            let mut covered = std::collections::HashSet::new();
            for pi in irreducible_permutations(m) {
                if covered.contains(&pi) {
                    continue;
                }
                let class = rauzy_class(&pi).unwrap();
                covered.extend(class.nodes().iter().cloned());
                let n = class.len();
                for op in Op::ALL {
                    let mut hit = vec![false; n];
                    for i in 0..n {
                        let t = class.edge(i, op);
                        assert!(!std::mem::replace(&mut hit[t], true), "{op} not injective");
                    }
                }
                // reverse reachability from the seed
                let mut seen = vec![false; n];
                seen[0] = true;
                let mut changed = true;
                while changed {
                    changed = false;
                    for (s, _, d) in class.edge_list() {
                        if seen[d] && !seen[s] {
                            seen[s] = true;
                            changed = true;
                        }
                    }
                }
                assert!(seen.iter().all(|&x| x), "class of {pi:?} not strongly connected");
            }
        }
    }

    #[test]
    fn word_action_examples() {
        let w = Word::new(vec![Letter::new(Op::A, 1, p("2 1")).unwrap()]).unwrap();
        assert_eq!(word_action(&w, &p("2 1")), Some(p("2 1")));

        let w = Word::new(vec![Letter::new(Op::A, 2, p("3 2 1")).unwrap()]).unwrap();
        assert_eq!(word_action(&w, &p("3 2 1")), Some(p("3 2 1")));

        let w = Word::new(vec![Letter::new(Op::A, 1, p("3 2 1")).unwrap()]).unwrap();
        assert_eq!(word_action(&w, &p("2 3 1")), None);

        assert_eq!(word_action(&Word::empty(), &p("2 3 1")), Some(p("2 3 1")));
    }

    #[test]
    fn text_form_round_trips() {
        let pi = p("4 3 2 1");
        assert_eq!(pi.to_string(), "4 3 2 1");
        assert_eq!(pi.to_string().parse::<Permutation>().unwrap(), pi);
        assert_eq!(format!("{:?}", p("2 1")), "(2 1)");
    }
}
