//! Geometric diagnostics: ratio bounds on cylinders, empirical Hölder norms
//! and the contraction of cylinders along recurrences of a positive word.

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::returns::PLATEAU_TOLERANCE;
use super::{sample_simplex, ObservableSpec};
use crate::cocycle::{letter_matrix, RenormMatrix};
use crate::combinatorics::Permutation;
use crate::error::{Error, Result};
use crate::induction::{hilbert_metric, FloatPoint, IetPoint};
use crate::symbolic::{Letter, Word};

fn plateau(half: f64, full: f64) -> bool {
    if half == full {
        return true;
    }
    half.is_finite() && half != 0.0 && ((full - half) / half).abs() < PLATEAU_TOLERANCE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioBounds {
    /// `max lambda_i / lambda_j` over the points.
    pub max_ratio: f64,
    pub max_ratio_plateau: bool,
    /// `min |A lambda| / ||A||` over points and test matrices.
    pub min_image_ratio: f64,
    pub min_image_plateau: bool,
}

/// Ratio bounds over sample points of a cylinder and a set of nonnegative
/// test matrices. Plateau flags compare the first half of the points with all.
pub fn ratio_bound_check(points: &[FloatPoint], matrices: &[RenormMatrix]) -> Result<RatioBounds> {
    if points.is_empty() {
        return Err(Error::InsufficientData("no sample points".into()));
    }
    // |A lambda| / ||A|| is the average of lambda under the column-sum weights
    let weights: Vec<Vec<f64>> = matrices
        .iter()
        .map(|a| {
            let norm = a.norm();
            a.column_sums()
                .iter()
                .map(|c| crate::cocycle::big_div_f64(c, &norm))
                .collect()
        })
        .collect();
    let mut max_ratio = 0.0f64;
    let mut min_image = f64::INFINITY;
    let half = points.len().div_ceil(2);
    let (mut half_ratio, mut half_image) = (0.0, f64::INFINITY);
    for (i, x) in points.iter().enumerate() {
        let l = x.lengths();
        let hi = l.iter().copied().fold(0.0, f64::max);
        let lo = l.iter().copied().fold(f64::INFINITY, f64::min);
        max_ratio = max_ratio.max(hi / lo);
        for w in &weights {
            let v: f64 = w.iter().zip(l).map(|(a, b)| a * b).sum();
            min_image = min_image.min(v);
        }
        if i + 1 == half {
            half_ratio = max_ratio;
            half_image = min_image;
        }
    }
    Ok(RatioBounds {
        max_ratio,
        max_ratio_plateau: plateau(half_ratio, max_ratio),
        min_image_ratio: min_image,
        min_image_plateau: matrices.is_empty() || plateau(half_image, min_image),
    })
}

/// Random nonnegative integer matrices with random zero patterns, no zero column.
pub fn random_test_matrices<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Vec<RenormMatrix> {
    (0..count)
        .map(|_| loop {
            let rows: Vec<Vec<u64>> = (0..dim)
                .map(|_| {
                    (0..dim)
                        .map(|_| if rng.random_bool(0.4) { 0 } else { rng.random_range(1..1000) })
                        .collect()
                })
                .collect();
            let a = RenormMatrix::from_rows(&rows);
            if a.column_sums().iter().all(|c| c > &BigUint::ZERO) {
                break a;
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub sup: f64,
    /// Largest observed `|phi(x) - phi(y)| / d(x, y)^alpha`.
    pub constant: f64,
    /// `sup + constant`, a lower bound for the norm.
    pub lower_bound: f64,
    /// The constant stopped growing between half and all of the pairs; when
    /// false the observable looks non-Hölder at this exponent.
    pub plateau: bool,
    pub pairs: usize,
}

/// Empirical Hölder norm over same-permutation pairs, distances in the
/// Hilbert metric.
pub fn holder_norm_estimate(
    phi: &ObservableSpec,
    alpha: f64,
    pairs: &[(FloatPoint, FloatPoint)],
) -> Result<HolderEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be in (0, 1], got {alpha}")));
    }
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no sample pairs".into()));
    }
    let mut sup = 0.0f64;
    let mut constant = 0.0f64;
    let half = pairs.len().div_ceil(2);
    let mut half_constant = 0.0;
    for (i, (x, y)) in pairs.iter().enumerate() {
        let (fx, fy) = (phi.eval(x), phi.eval(y));
        sup = sup.max(fx.abs()).max(fy.abs());
        let d = hilbert_metric(x, y);
        if d > 0.0 && d.is_finite() {
            constant = constant.max((fx - fy).abs() / d.powf(alpha));
        }
        if i + 1 == half {
            half_constant = constant;
        }
    }
    Ok(HolderEstimate {
        sup,
        constant,
        lower_bound: sup + constant,
        plateau: plateau(half_constant, constant),
        pairs: pairs.len(),
    })
}

/// Pairs `(x, y)` with `x` uniform and `y` a multiplicative perturbation of
/// `x` at a log-uniform scale between `1e-8` and `1e-1`.
pub fn sample_pairs<R: Rng + ?Sized>(perm: &Permutation, count: usize, rng: &mut R) -> Vec<(FloatPoint, FloatPoint)> {
    (0..count)
        .map(|_| {
            let x = sample_simplex(perm, rng);
            let scale = 10f64.powf(-rng.random_range(1.0..8.0));
            let y: Vec<f64> = x
                .lengths()
                .iter()
                .map(|l| l * (scale * rng.random_range(-1.0..1.0)).exp())
                .collect();
            let y = IetPoint::new(y, perm.clone()).expect("positive lengths");
            (x, y)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionTrace {
    /// Hilbert diameter of the cylinder of the itinerary read up to the end of
    /// each successive (non-overlapping) occurrence of `q`.
    pub diameters: Vec<f64>,
    /// Ratios of successive diameters.
    pub factors: Vec<f64>,
    /// `tanh(birkhoff_diameter(A(q)) / 4)`.
    pub bound: f64,
    /// Occurrences needed to bring the diameter below the target.
    pub occurrences_to_target: Option<usize>,
}

/// Follows the itinerary `letters`, recording the cylinder diameter after
/// each of the first `max_occurrences` occurrences of `q`, and notes when it
/// first drops below `target`.
pub fn cylinder_contraction(
    letters: &[Letter],
    q: &Word,
    target: f64,
    max_occurrences: usize,
) -> Result<ContractionTrace> {
    let first = q
        .letters()
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty target word".into()))?;
    let dim = first.start.len();
    let bound = (q.matrix(dim).birkhoff_diameter() / 4.0).tanh();
    let k = q.len();
    let mut prefix = RenormMatrix::identity(dim);
    let mut diameters = Vec::new();
    let mut last_end = 0;
    let mut reached = None;
    for (i, letter) in letters.iter().enumerate() {
        prefix = &prefix * &letter_matrix(letter);
        let end = i + 1;
        if end >= k && end - k >= last_end && letters[end - k..end] == q.letters()[..] {
            last_end = end;
            let d = prefix.birkhoff_diameter();
            diameters.push(d);
            if d < target && reached.is_none() {
                reached = Some(diameters.len());
            }
            // past an underflow to zero the factors carry no information
            if diameters.len() >= max_occurrences || d == 0.0 {
                break;
            }
        }
    }
    let factors = diameters.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(ContractionTrace {
        diameters,
        factors,
        bound,
        occurrences_to_target: reached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{cylinder_geometry, encode_prefix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn cylinder_points_have_bounded_ratios() {
        let q: Word = "a:1@2 1;b:1@2 1".parse().unwrap();
        let geom = cylinder_geometry(&q, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // convex combinations of the image simplex vertices
        let points: Vec<FloatPoint> = (0..1000)
            .map(|_| {
                let t: f64 = rng.random();
                let l: Vec<f64> = (0..2)
                    .map(|i| t * geom.vertices[0][i] + (1.0 - t) * geom.vertices[1][i])
                    .collect();
                FloatPoint::new(l, p("2 1")).unwrap()
            })
            .collect();
        let r = ratio_bound_check(&points, &[]).unwrap();
        assert!(r.max_ratio <= 2.0 + 1e-12);
        assert!(r.max_ratio_plateau);

        let single = ratio_bound_check(&points[..1], &[]).unwrap();
        let l = points[0].lengths();
        assert_eq!(single.max_ratio, (l[0] / l[1]).max(l[1] / l[0]));
    }

    #[test]
    fn image_ratio_dominates_smallest_coordinate() {
        let rank_one = RenormMatrix::from_rows(&[vec![1, 2, 3], vec![2, 4, 6], vec![3, 6, 9]]);
        let x = FloatPoint::new(vec![0.2, 0.3, 0.5], p("3 2 1")).unwrap();
        let r = ratio_bound_check(&[x.clone()], &[rank_one]).unwrap();
        assert!(r.min_image_ratio >= 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ms = random_test_matrices(3, 50, &mut rng);
        let r = ratio_bound_check(&[x], &ms).unwrap();
        assert!(r.min_image_ratio >= 0.2 - 1e-15);
    }

    #[test]
    fn holder_estimates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs = sample_pairs(&p("2 1"), 20_000, &mut rng);
        let table: ObservableSpec = "table:2 1=2.5".parse().unwrap();
        let c = holder_norm_estimate(&table, 1.0, &pairs).unwrap();
        assert_eq!((c.sup, c.constant, c.lower_bound), (2.5, 0.0, 2.5));

        let lip = holder_norm_estimate(&ObservableSpec::Coordinate(1), 1.0, &pairs).unwrap();
        assert!(lip.constant > 0.0 && lip.constant <= 0.5 + 1e-9, "{lip:?}");
        assert!(lip.plateau);

        let q: ObservableSpec = "cylinder:a:1@2 1;b:1@2 1".parse().unwrap();
        let jump = holder_norm_estimate(&q, 0.5, &pairs).unwrap();
        assert!(jump.constant > 10.0, "{jump:?}");
        assert!(holder_norm_estimate(&q, 0.0, &pairs).is_err());
    }

    #[test]
    fn cylinders_contract_along_recurrences() {
        let q: Word = "a:1@2 1;b:1@2 1".parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = sample_simplex(&p("2 1"), &mut rng);
        let letters = encode_prefix(&x, 2000, u64::MAX).unwrap();
        let trace = cylinder_contraction(letters.letters(), &q, 1e-8, 1000).unwrap();
        assert!(trace.occurrences_to_target.is_some());
        for f in &trace.factors {
            assert!(*f <= trace.bound + 1e-12, "{f} > {}", trace.bound);
        }
    }
}
