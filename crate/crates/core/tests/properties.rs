use num_traits::Signed;
use proptest::prelude::*;
use rauzy_core::cocycle::{elementary_matrix, letter_matrix};
use rauzy_core::combinatorics::irreducible_permutations;
use rauzy_core::experiments::{return_time_survey, tail_fit};
use rauzy_core::induction::{
    hilbert_metric, inverse_branch, orbit, rauzy_step, zorich_step, DEFAULT_CAP,
};
use rauzy_core::symbolic::encode_prefix;
use rauzy_core::induction::PrecisionLog;
use rauzy_core::{ExactPoint, FloatPoint, IetPoint, Length, Letter, Op, Orbit, Permutation, Side, StepRecord, Word};

fn any_perm(max_m: usize) -> impl Strategy<Value = Permutation> {
    (2..=max_m).prop_flat_map(|m| {
        let perms = irreducible_permutations(m);
        (0..perms.len()).prop_map(move |i| perms[i].clone())
    })
}

fn any_point(max_m: usize) -> impl Strategy<Value = FloatPoint> {
    any_perm(max_m).prop_flat_map(|p| {
        prop::collection::vec(0.01f64..1.0, p.len())
            .prop_map(move |l| IetPoint::new(l, p.clone()).unwrap())
    })
}

/// A point with dyadic lengths, so that float and exact backends start equal.
fn any_dyadic_point(max_m: usize) -> impl Strategy<Value = (FloatPoint, ExactPoint)> {
    any_perm(max_m).prop_flat_map(|p| {
        prop::collection::vec(1u32..(1 << 20), p.len()).prop_map(move |v| {
            let f: Vec<f64> = v.iter().map(|&x| x as f64 / (1u64 << 20) as f64).collect();
            let e = f.iter().map(|&x| <num_rational::BigRational as Length>::from_f64(x).unwrap()).collect();
            (IetPoint::new(f, p.clone()).unwrap(), IetPoint::new(e, p.clone()).unwrap())
        })
    })
}

/// Up to `steps` letters with the lengths before each, stopping at a failure.
fn run<S: Length>(x: &IetPoint<S>, steps: usize) -> (Vec<StepRecord>, Vec<Vec<f64>>, PrecisionLog) {
    let mut orbit = Orbit::new(x.clone());
    let (mut records, mut before) = (Vec::new(), Vec::new());
    while records.len() < steps {
        let l: Vec<f64> = orbit.lengths().iter().map(Length::to_f64).collect();
        match orbit.advance() {
            Ok(r) => {
                records.push(r);
                before.push(l);
            }
            Err(e) => {
                assert!(e.is_numeric(), "{e}");
                break;
            }
        }
    }
    (records, before, orbit.precision().clone())
}

fn project(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rauzy_step_reconstructs(x in any_point(7)) {
        let (y, op) = rauzy_step(&x).unwrap();
        prop_assert!(y.lengths().iter().all(|&l| l > 0.0));
        prop_assert!((y.lengths().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        prop_assert_eq!(y.perm(), &x.perm().apply(op));
        let back = project(elementary_matrix(op, x.perm()).apply_f64(y.lengths()));
        prop_assert!(max_diff(&back, x.lengths()) < 1e-12);
    }

    #[test]
    fn zorich_step_reads_one_letter(x in any_point(7)) {
        let (y, r) = zorich_step(&x, DEFAULT_CAP).unwrap();
        prop_assert!(r.count >= 1 && r.flow_time > 0.0);
        prop_assert_eq!(Side::of_op(r.op), x.classify());
        prop_assert_ne!(y.classify(), x.classify());
        let letter = r.letter();
        prop_assert_eq!(y.perm(), &letter.end());
        let back = project(letter_matrix(&letter).apply_f64(y.lengths()));
        prop_assert!(max_diff(&back, x.lengths()) < 1e-9);
    }

    #[test]
    fn letter_matrices_are_unimodular(p in any_perm(6), a in any::<bool>(), count in 1u64..40) {
        let op = if a { Op::A } else { Op::B };
        let l = Letter::new(op, count, p).unwrap();
        let det = letter_matrix(&l).determinant();
        prop_assert!(det.abs() == 1.into());
    }

    #[test]
    fn coding_prefix_round_trips(x in any_point(5), n in 1usize..12) {
        let w = encode_prefix(&x, n, DEFAULT_CAP).unwrap();
        prop_assert_eq!(w.len(), n);
        let text = w.to_string();
        prop_assert_eq!(&text.parse::<Word>().unwrap(), &w);
        let trace = orbit(&x, n, DEFAULT_CAP).unwrap();
        let image = &trace.steps.last().unwrap().0;
        let back = inverse_branch(&w, image).unwrap();
        prop_assert_eq!(back.perm(), x.perm());
        prop_assert!(hilbert_metric(&back, &x) < 1e-6);
    }

    #[test]
    fn hilbert_metric_is_a_metric(x in any_point(4), t in 0.0f64..1.0, u in 0.0f64..1.0) {
        let shift = |s: f64| {
            let l: Vec<f64> = x.lengths().iter().enumerate().map(|(i, v)| v * (1.0 + s * i as f64)).collect();
            IetPoint::new(l, x.perm().clone()).unwrap()
        };
        let (y, z) = (shift(t), shift(u));
        prop_assert!(hilbert_metric(&x, &x).abs() < 1e-12);
        prop_assert!((hilbert_metric(&x, &y) - hilbert_metric(&y, &x)).abs() < 1e-12);
        prop_assert!(hilbert_metric(&x, &z) <= hilbert_metric(&x, &y) + hilbert_metric(&y, &z) + 1e-12);
    }

    #[test]
    fn backends_agree_until_precision_event((xf, xe) in any_dyadic_point(4)) {
        // rational orbits end at a tie after finitely many steps; stop either
        // backend at its first failure
        let (float, float_before, log) = run(&xf, 60);
        let certified = log.first_uncertified.unwrap_or(float.len());
        let (exact_steps, exact_before, _) = run(&xe, certified);
        prop_assume!(!float.is_empty());
        for (a, b) in float.iter().zip(&exact_steps) {
            prop_assert_eq!((a.op, a.count, &a.start), (b.op, b.count, &b.start));
        }

        let q = Word::new(vec![float[0].letter()]).unwrap();
        let n = exact_steps.len();
        let fr = return_time_survey(
            (0..n).map(|i| (float_before[i].as_slice(), &float[i])),
            &q,
        )
        .unwrap();
        let er = return_time_survey(
            (0..n).map(|i| (exact_before[i].as_slice(), &exact_steps[i])),
            &q,
        )
        .unwrap();
        prop_assert_eq!(fr.len(), er.len());
        for (a, b) in fr.iter().zip(&er) {
            prop_assert_eq!((a.start, a.n_q, &a.word), (b.start, b.n_q, &b.word));
            prop_assert!((a.eta - b.eta).abs() < 1e-12);
            prop_assert!((a.tau - b.tau).abs() < 1e-6 * a.tau.max(1.0));
        }
    }

    #[test]
    fn return_records_are_consistent(x in any_point(4)) {
        let trace = orbit(&x, 3000, u64::MAX).unwrap();
        let mut before = vec![x.lengths().to_vec()];
        before.extend(trace.steps.iter().map(|(p, _)| p.lengths().to_vec()));
        let q = Word::new(vec![trace.steps[1].1.letter(), trace.steps[2].1.letter()]).unwrap();
        let records = return_time_survey(
            trace.steps.iter().enumerate().map(|(i, (_, r))| (before[i].as_slice(), r)),
            &q,
        )
        .unwrap();
        prop_assert!(!records.is_empty());
        for r in &records {
            prop_assert_eq!(r.n_q, r.word.len());
            prop_assert_eq!(r.len_w, r.word.rauzy_steps());
            prop_assert!(r.eta >= r.tau - 1e-9, "eta {} tau {}", r.eta, r.tau);
            prop_assert!((r.tau - r.lognorm).abs() < 1e-6 * r.tau.max(1.0));
        }
        let times: Vec<u64> = records.iter().map(|r| r.n_q as u64).collect();
        if let Ok(fit) = tail_fit(&times, u64::MAX) {
            prop_assert_eq!(fit.survival[0], (0, records.len(), records.len()));
        }
    }
}
