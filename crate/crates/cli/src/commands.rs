use std::fmt::Write as _;

use num_rational::BigRational;
use rauzy_core::experiments::{
    comparison_survey, exp_moment, fit_exponential, fmt_f64, holder_norm_estimate, run_correlations,
    run_returns, sample_pairs, sample_simplex, stream_rng, tail_fit, ExpMoment, OrbitSettings,
    ReturnRun, StreamPlan,
};
use rauzy_core::experiments::checks::{random_test_matrices, ratio_bound_check, RatioBounds};
use rauzy_core::induction::{inverse_branch, parse_lengths, Backend, PrecisionLog, DEFAULT_CAP};
use rauzy_core::symbolic::{find_positive_word, DEFAULT_SEARCH_COUNT};
use rauzy_core::zippered::{self_test, DEFAULT_TOLERANCE};
use rauzy_core::{
    rauzy_class, Error, FloatPoint, IetPoint, Length, ObservableSpec, Orbit, Permutation, Result, Word,
};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig, DEFAULT_FLOOR_MULT};
use crate::output::{emit, emit_json, event, float, Cell};

const DEFAULT_MAX_LEN: usize = 8;
const DEFAULT_ORBIT_STEPS: usize = 100;
const DEFAULT_RUN_STEPS: usize = 1_000_000;
const DEFAULT_N_MAX: usize = 10;
const DEFAULT_SAMPLES: usize = 1000;
const DEFAULT_RATIO_SAMPLES: usize = 10_000;
const HOLDER_PAIRS: usize = 10_000;
const TEST_MATRICES: usize = 100;

fn out(cfg: &RunConfig, csv: &str, json: &Value) -> Result<()> {
    match cfg.format() {
        Format::Csv => emit(cfg.out.as_deref(), csv),
        Format::Json => emit_json(cfg.out.as_deref(), json),
    }
}

pub fn class(cfg: &RunConfig) -> Result<bool> {
    let class = rauzy_class(&cfg.perm()?)?;
    let edges: Vec<Value> = class
        .edge_list()
        .map(|(s, op, d)| {
            json!({"src": class.nodes()[s].to_string(), "op": op.to_string(), "dst": class.nodes()[d].to_string()})
        })
        .collect();
    let nodes: Vec<String> = class.nodes().iter().map(ToString::to_string).collect();
    event("class", 0, &[("nodes", nodes.len().to_string()), ("edges", edges.len().to_string())]);
    out(cfg, &class.to_csv(), &json!({"nodes": nodes, "edges": edges}))?;
    Ok(true)
}

fn search_positive_word(cfg: &RunConfig, perm: &Permutation) -> Result<(Word, rauzy_core::RenormMatrix)> {
    let class = rauzy_class(perm)?;
    find_positive_word(
        &class,
        cfg.max_len.unwrap_or(DEFAULT_MAX_LEN),
        cfg.max_count.unwrap_or(DEFAULT_SEARCH_COUNT),
    )
}

pub fn positive_word(cfg: &RunConfig) -> Result<bool> {
    let (word, a) = search_positive_word(cfg, &cfg.perm()?)?;
    let rows: Vec<Value> = (0..a.dim())
        .map(|i| a.row(i).iter().map(|e| Value::String(e.to_string())).collect())
        .collect();
    let csv = format!("{word}\n{}", a.to_csv());
    out(cfg, &csv, &json!({"word": word.to_string(), "matrix": rows}))?;
    Ok(true)
}

fn precision_events(log: &PrecisionLog, stream: Option<usize>) {
    let extra: Vec<(&str, String)> = stream.map(|s| ("stream", s.to_string())).into_iter().collect();
    if let Some(k) = log.first_tiny {
        event("precision_tiny", k, &extra);
    }
    if let Some(k) = log.first_uncertified {
        event("precision_uncertified", k, &extra);
    }
}

fn orbit_with<S: Length + Cell>(cfg: &RunConfig, x0: IetPoint<S>) -> Result<bool> {
    let steps = cfg.steps.unwrap_or(DEFAULT_ORBIT_STEPS);
    let m = x0.dim();
    let mut orbit = Orbit::new(x0).with_cap(cfg.cap.unwrap_or(DEFAULT_CAP));
    let mut csv = String::from("op,count,start,pi,flow_time");
    for i in 1..=m {
        let _ = write!(csv, ",lambda{i}");
    }
    csv.push('\n');
    let mut records = Vec::with_capacity(steps);
    let mut failure = None;
    for _ in 0..steps {
        match orbit.advance() {
            Ok(r) => {
                let _ = write!(csv, "{},{},{},{},{}", r.op, r.count, r.start, orbit.perm(), fmt_f64(r.flow_time));
                for l in orbit.lengths() {
                    let _ = write!(csv, ",{}", l.cell());
                }
                csv.push('\n');
                records.push(json!({
                    "op": r.op.to_string(),
                    "count": r.count,
                    "start": r.start.to_string(),
                    "pi": orbit.perm().to_string(),
                    "flow_time": float(r.flow_time),
                    "lambda": orbit.lengths().iter().map(Cell::json).collect::<Vec<_>>(),
                }));
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    precision_events(orbit.precision(), None);
    out(cfg, &csv, &Value::Array(records))?;
    match failure {
        Some(e) => Err(e),
        None => {
            event("done", orbit.steps(), &[]);
            Ok(true)
        }
    }
}

pub fn orbit(cfg: &RunConfig) -> Result<bool> {
    let perm = cfg.perm()?;
    let m = perm.len();
    match cfg.backend() {
        Backend::Float => {
            let lengths: Vec<f64> = match &cfg.lambda {
                Some(text) => parse_lengths(text)?,
                None => sample_simplex(&perm, &mut stream_rng(cfg.seed(), 0)).lengths().to_vec(),
            };
            check_len(&lengths, m)?;
            orbit_with(cfg, IetPoint::new(lengths, perm)?)
        }
        Backend::Exact => {
            let lengths: Vec<BigRational> = match &cfg.lambda {
                Some(text) => parse_lengths(text)?,
                None => sample_simplex(&perm, &mut stream_rng(cfg.seed(), 0))
                    .lengths()
                    .iter()
                    .map(|&v| BigRational::from_float(v).expect("finite"))
                    .collect(),
            };
            check_len(&lengths, m)?;
            orbit_with(cfg, IetPoint::new(lengths, perm)?)
        }
    }
}

fn check_len<T>(lengths: &[T], m: usize) -> Result<()> {
    if lengths.len() != m {
        return Err(Error::InvalidLengths(format!("{} lengths for {m} symbols", lengths.len())));
    }
    Ok(())
}

fn orbit_settings(cfg: &RunConfig, perm: &Permutation) -> Result<(OrbitSettings, StreamPlan)> {
    let (steps, burn_in) = cfg.run_length(DEFAULT_RUN_STEPS)?;
    let start = cfg.lambda.as_deref().map(parse_lengths::<f64>).transpose()?;
    if let Some(l) = &start {
        check_len(l, perm.len())?;
    }
    let streams = if start.is_some() {
        if cfg.streams.is_some_and(|s| s > 1) {
            return Err(Error::InvalidArgument("a fixed start allows a single stream".into()));
        }
        1
    } else {
        cfg.streams.unwrap_or(1)
    };
    let settings = OrbitSettings {
        perm: perm.clone(),
        start,
        steps,
        burn_in,
        cap: cfg.cap.unwrap_or(u64::MAX),
    };
    let plan = StreamPlan {
        seed: cfg.seed(),
        streams,
        workers: cfg.workers(),
    };
    Ok((settings, plan))
}

pub fn correlations(cfg: &RunConfig) -> Result<bool> {
    let perm = cfg.perm()?;
    if cfg.backend() != Backend::Float {
        return Err(Error::InvalidArgument("correlations run on the float backend only".into()));
    }
    let (settings, plan) = orbit_settings(cfg, &perm)?;
    let phi: ObservableSpec = cfg.phi.as_deref().unwrap_or("lambda1").parse()?;
    let psi: ObservableSpec = match &cfg.psi {
        Some(s) => s.parse()?,
        None => phi.clone(),
    };
    let n_max = cfg.n_max.unwrap_or(DEFAULT_N_MAX);
    event("start", 0, &[("streams", plan.streams.to_string())]);
    let run = run_correlations(&settings, &plan, &phi, &psi, n_max)?;
    for (i, p) in run.precision.iter().enumerate() {
        precision_events(p, Some(i));
    }

    let mut csv = String::from("n,corr,stderr,samples\n");
    for c in &run.series {
        let _ = writeln!(csv, "{},{},{},{}", c.n, fmt_f64(c.corr), fmt_f64(c.stderr), c.samples);
    }
    let series: Vec<Value> = run
        .series
        .iter()
        .map(|c| json!({"n": c.n, "corr": float(c.corr), "stderr": float(c.stderr), "samples": c.samples}))
        .collect();

    let fit = fit_exponential(&run.series, cfg.floor_mult.unwrap_or(DEFAULT_FLOOR_MULT));
    let fit_json = match &fit {
        Ok(f) => {
            event(
                "fit",
                settings.steps,
                &[
                    ("delta", fmt_f64(f.delta)),
                    ("ci_low", fmt_f64(f.ci.0)),
                    ("ci_high", fmt_f64(f.ci.1)),
                    ("r2", fmt_f64(f.r2)),
                    ("window", format!("{}-{}", f.window.0, f.window.1)),
                    ("curvature", fmt_f64(f.curvature)),
                    ("low_r2", f.low_r2.to_string()),
                ],
            );
            json!({
                "delta": float(f.delta),
                "ci": [float(f.ci.0), float(f.ci.1)],
                "r2": float(f.r2),
                "window": [f.window.0, f.window.1],
                "curvature": float(f.curvature),
                "low_r2": f.low_r2,
            })
        }
        Err(e) => {
            event("fit_failed", settings.steps, &[("reason", format!("{:?}", e.to_string()))]);
            Value::Null
        }
    };

    let holder = match cfg.alpha {
        Some(alpha) => {
            let pairs = sample_pairs(&perm, HOLDER_PAIRS, &mut stream_rng(plan.seed, plan.streams));
            let h = holder_norm_estimate(&phi, alpha, &pairs)?;
            event(
                "holder",
                settings.steps,
                &[("lower_bound", fmt_f64(h.lower_bound)), ("plateau", h.plateau.to_string())],
            );
            json!({
                "alpha": float(alpha),
                "sup": float(h.sup),
                "constant": float(h.constant),
                "lower_bound": float(h.lower_bound),
                "plateau": h.plateau,
                "pairs": h.pairs,
            })
        }
        None => Value::Null,
    };
    event("done", settings.steps, &[("plus_points", run.plus_points.to_string())]);
    let json = json!({
        "series": series,
        "fit": fit_json,
        "holder": holder,
        "plus_points": run.plus_points,
    });
    out(cfg, &csv, &json)?;
    Ok(true)
}

fn target_word(cfg: &RunConfig, perm: &Permutation) -> Result<Word> {
    match &cfg.q {
        Some(text) => text.parse(),
        None => {
            let (q, _) = search_positive_word(cfg, perm)?;
            event("positive_word", 0, &[("q", format!("{:?}", q.to_string()))]);
            Ok(q)
        }
    }
}

fn returns(cfg: &RunConfig) -> Result<(Permutation, Word, OrbitSettings, ReturnRun)> {
    let perm = cfg.perm()?;
    let q = target_word(cfg, &perm)?;
    let (settings, plan) = orbit_settings(cfg, &perm)?;
    event("start", 0, &[("streams", plan.streams.to_string())]);
    let run = match cfg.backend() {
        Backend::Float => run_returns::<f64>(&settings, &plan, &q)?,
        Backend::Exact => run_returns::<BigRational>(&settings, &plan, &q)?,
    };
    for (i, p) in run.precision.iter().enumerate() {
        precision_events(p, Some(i));
    }
    if run.records.is_empty() {
        event("no_returns", settings.steps, &[]);
    }
    Ok((perm, q, settings, run))
}

fn moment_json(m: &ExpMoment) -> Value {
    let one = |e: &rauzy_core::experiments::returns::MomentEstimate| {
        json!({
            "estimate": float(e.estimate),
            "half_estimate": float(e.half_estimate),
            "relative_change": float(e.relative_change),
            "hill_index": float(e.hill_index),
            "max_share": float(e.max_share),
            "stable": e.stable,
        })
    };
    json!({"epsilon": float(m.epsilon), "tau": one(&m.tau), "n_q": one(&m.n_q)})
}

pub fn return_times(cfg: &RunConfig) -> Result<bool> {
    let (_, q, settings, run) = returns(cfg)?;
    let mut csv = String::from("idx,n_q,eta,tau,len_w,lognorm\n");
    let mut records = Vec::with_capacity(run.records.len());
    for (i, r) in run.records.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{}",
            r.n_q,
            fmt_f64(r.eta),
            fmt_f64(r.tau),
            r.len_w,
            fmt_f64(r.lognorm)
        );
        records.push(json!({
            "idx": i,
            "n_q": r.n_q,
            "eta": float(r.eta),
            "tau": float(r.tau),
            "len_w": r.len_w,
            "lognorm": float(r.lognorm),
            "start": r.start,
            "start_in_q": r.start_in_q,
        }));
    }

    let times: Vec<u64> = run.records.iter().map(|r| r.n_q as u64).collect();
    let n_max = cfg.n_max.map_or(u64::MAX, |n| n as u64);
    let fit_json = match tail_fit(&times, n_max) {
        Ok(fit) => {
            event(
                "tail_fit",
                settings.steps,
                &[
                    ("theta", fmt_f64(fit.theta)),
                    ("r2", fmt_f64(fit.r2)),
                    ("window", format!("{}-{}", fit.window.0, fit.window.1)),
                ],
            );
            if let Some(path) = &cfg.survival_out {
                let mut s = String::from("N,survivors,total\n");
                for (n, surv, total) in &fit.survival {
                    let _ = writeln!(s, "{n},{surv},{total}");
                }
                emit(Some(path), &s)?;
            }
            json!({
                "theta": float(fit.theta),
                "r2": float(fit.r2),
                "window": [fit.window.0, fit.window.1],
            })
        }
        Err(e) => {
            event("tail_fit_failed", settings.steps, &[("reason", format!("{:?}", e.to_string()))]);
            Value::Null
        }
    };
    let moment = match cfg.epsilon {
        Some(eps) if !run.records.is_empty() => {
            let m = exp_moment(&run.records, eps)?;
            event(
                "exp_moment",
                settings.steps,
                &[
                    ("tau", fmt_f64(m.tau.estimate)),
                    ("tau_stable", m.tau.stable.to_string()),
                    ("n_q", fmt_f64(m.n_q.estimate)),
                    ("n_q_stable", m.n_q.stable.to_string()),
                ],
            );
            moment_json(&m)
        }
        _ => Value::Null,
    };
    event("done", settings.steps, &[("returns", run.records.len().to_string())]);
    let json = json!({
        "q": q.to_string(),
        "records": records,
        "tail_fit": fit_json,
        "exp_moment": moment,
    });
    out(cfg, &csv, &json)?;
    Ok(true)
}

fn cylinder_ratio_bounds(cfg: &RunConfig, q: &Word, seed_stream: usize) -> Result<RatioBounds> {
    let last = q
        .letters()
        .last()
        .ok_or_else(|| Error::InvalidArgument("empty target word".into()))?;
    let end = last.end();
    let mut rng = stream_rng(cfg.seed(), seed_stream);
    let count = cfg.samples.unwrap_or(DEFAULT_RATIO_SAMPLES);
    let points = (0..count)
        .map(|_| inverse_branch(q, &sample_simplex(&end, &mut rng)))
        .collect::<Result<Vec<FloatPoint>>>()?;
    let matrices = random_test_matrices(end.len(), TEST_MATRICES, &mut rng);
    ratio_bound_check(&points, &matrices)
}

pub fn compare(cfg: &RunConfig) -> Result<bool> {
    let (_, q, settings, run) = returns(cfg)?;
    let summary = comparison_survey(&run.records)?;
    let streams = run.precision.len();
    let bounds = cylinder_ratio_bounds(cfg, &q, streams)?;

    let mut csv = String::from("quantity,samples,value\n");
    for (n, v) in &summary.growth.checkpoints {
        let _ = writeln!(csv, "growth,{n},{}", fmt_f64(*v));
    }
    if let Some(excess) = &summary.excess {
        for (n, v) in &excess.checkpoints {
            let _ = writeln!(csv, "excess,{n},{}", fmt_f64(*v));
        }
    }
    let count = cfg.samples.unwrap_or(DEFAULT_RATIO_SAMPLES);
    let _ = writeln!(csv, "max_ratio,{count},{}", fmt_f64(bounds.max_ratio));
    let _ = writeln!(csv, "min_image_ratio,{count},{}", fmt_f64(bounds.min_image_ratio));

    let mut fields = vec![
        ("growth_max", fmt_f64(summary.growth.max)),
        ("growth_plateau", summary.growth.plateau.to_string()),
        ("violations", summary.violations.to_string()),
    ];
    if let Some(excess) = &summary.excess {
        fields.push(("excess_max", fmt_f64(excess.max)));
        fields.push(("excess_plateau", excess.plateau.to_string()));
    }
    event("compare", settings.steps, &fields);
    event(
        "ratio_bounds",
        settings.steps,
        &[
            ("max_ratio_plateau", bounds.max_ratio_plateau.to_string()),
            ("min_image_plateau", bounds.min_image_plateau.to_string()),
        ],
    );

    let running = |r: &rauzy_core::experiments::returns::RunningMax| {
        json!({
            "max": float(r.max),
            "plateau": r.plateau,
            "checkpoints": r.checkpoints.iter().map(|(n, v)| json!([n, float(*v)])).collect::<Vec<_>>(),
        })
    };
    let json = json!({
        "q": q.to_string(),
        "records": summary.records,
        "violations": summary.violations,
        "growth": running(&summary.growth),
        "excess": summary.excess.as_ref().map(running),
        "ratio_bounds": {
            "samples": count,
            "max_ratio": float(bounds.max_ratio),
            "max_ratio_plateau": bounds.max_ratio_plateau,
            "min_image_ratio": float(bounds.min_image_ratio),
            "min_image_plateau": bounds.min_image_plateau,
        },
    });
    out(cfg, &csv, &json)?;
    Ok(true)
}

pub fn zr_selftest(cfg: &RunConfig) -> Result<bool> {
    let perm = cfg.perm()?;
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let tol = cfg.tol.unwrap_or(DEFAULT_TOLERANCE);
    let mut rng = stream_rng(cfg.seed(), 0);
    let r = self_test(&perm, samples, &mut rng, tol, cfg.cap.unwrap_or(DEFAULT_CAP))?;
    let max_residual = r.area_residual.max(r.commutation_residual);
    let passed = r.passed(tol);
    event(
        "selftest",
        samples,
        &[
            ("valid", format!("{}/{}", r.valid, r.samples)),
            ("max_residual", fmt_f64(max_residual)),
            ("lifts", format!("{}/{}", r.lift_matches, r.lifts)),
            ("passed", passed.to_string()),
        ],
    );
    let rows: [(&str, String); 8] = [
        ("samples", r.samples.to_string()),
        ("valid", r.valid.to_string()),
        ("zip_valid", r.zip_valid.to_string()),
        ("area_residual", fmt_f64(r.area_residual)),
        ("commutation_residual", fmt_f64(r.commutation_residual)),
        ("lifts", r.lifts.to_string()),
        ("lift_matches", r.lift_matches.to_string()),
        ("lift_residual", fmt_f64(r.lift_residual)),
    ];
    let mut csv = String::from("field,value\n");
    for (k, v) in &rows {
        let _ = writeln!(csv, "{k},{v}");
    }
    let json = json!({
        "samples": r.samples,
        "valid": r.valid,
        "zip_valid": r.zip_valid,
        "area_residual": float(r.area_residual),
        "commutation_residual": float(r.commutation_residual),
        "lifts": r.lifts,
        "lift_matches": r.lift_matches,
        "lift_residual": float(r.lift_residual),
        "passed": passed,
    });
    out(cfg, &csv, &json)?;
    Ok(passed)
}
