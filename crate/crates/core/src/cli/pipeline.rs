//! Stage orchestration. All numbers are computed first (per-point work on
//! the rayon pool, in sample order), then a single writer stage puts the
//! files and the manifest in place.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::cache::{bits_key, cached, Cache, VERSION};
use super::config::{Command, Epsilon, RunConfig, SplitIndex};
use crate::cocycle::{adjoint_cocycle, CocycleSystem, Point};
use crate::error::{Error, Result};
use crate::holder::{
    brin_consistency, brin_consistency_projected, cocycle_holder_check, fit_holder, lambda_set_for_delta, pair_distances,
    qualifying_pairs, BrinReport, BrinSetup, LambdaSet, BRIN_SLACK,
};
use crate::met::{
    cluster_rates, duality_residual, equivariance_residual, finite_time_rates, OrbitSplitting, SpectrumReport, DEFAULT_CLUSTER_TOL,
    DEFAULT_NEG_INF_FLOOR,
};
use crate::regularity::{auto_epsilon, dichotomy_check, hyperbolic_split, profile_on, DichotomyParams, RegularityProfile};
use crate::subspace::Subspace;

pub const MANIFEST: &str = "manifest.json";
/// Pairs per split for the Brin check.
pub const BRIN_PAIRS: usize = 100;
const HOLDER_STEPS: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub outputs: Vec<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub config: RunConfig,
    pub epsilon: f64,
    pub spectrum: SpectrumReport,
    /// File name and contents, in write order.
    pub files: Vec<(String, Vec<u8>)>,
    pub stages: Vec<StageRecord>,
}

impl ReportBundle {
    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|f| f.0 == name).map(|f| f.1.as_slice())
    }
}

/// JSON number, with non-finite values as the strings `"-inf"`, `"inf"`, `"nan"`.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

/// Round-trip text form of a float for CSV cells.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        num(v).as_str().unwrap_or("nan").to_string()
    }
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(";")
}

/// Orthonormal basis as an array of rows.
pub fn subspace_json(s: &Subspace) -> Value {
    let b = s.basis();
    json!({
        "dim": s.dim(),
        "basis": (0..b.nrows()).map(|r| nums(&b.row(r).iter().copied().collect::<Vec<_>>())).collect::<Vec<_>>(),
    })
}

fn to_pretty(v: &Value) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    sys: CocycleSystem,
    points: Vec<Point>,
    cache: Option<&'a Cache>,
}

impl Ctx<'_> {
    fn key(&self, stage: &str, x: &[f64], extra: Value) -> Value {
        json!({
            "stage": stage,
            "system": self.cfg.system,
            "x": bits_key(x),
            "horizon": self.cfg.horizon,
            "extra": extra,
        })
    }
}

fn spectrum_key(s: &SpectrumReport) -> Value {
    json!({ "exponents": bits_key(&s.exponents), "multiplicities": s.multiplicities })
}

fn flatten(ms: &[&DMatrix<f64>]) -> Vec<f64> {
    ms.iter().flat_map(|m| m.iter().copied()).collect()
}

fn corrupt() -> Error {
    Error::InvalidArgument("cached array has the wrong length".into())
}

fn rates_at(ctx: &Ctx, sys: &CocycleSystem, stage: &str) -> Result<SpectrumReport> {
    let x0 = &ctx.points[0];
    let h = ctx.cfg.horizon;
    let rates = cached(ctx.cache, ctx.key(stage, x0, Value::Null), || Ok::<_, Error>(finite_time_rates(sys, x0, h)))?;
    cluster_rates(&rates, h, DEFAULT_CLUSTER_TOL, DEFAULT_NEG_INF_FLOOR)
}

/// Splitting frames at `x` and `f x`.
fn frames(ctx: &Ctx, s: &SpectrumReport, x: &Point) -> Result<OrbitSplitting> {
    let (sys, h) = (&ctx.sys, ctx.cfg.horizon);
    let (n, d) = (x.len(), sys.dim());
    let v = cached(ctx.cache, ctx.key("frames", x, Value::Null), || {
        let o = OrbitSplitting::compute(sys, x, s, 0, 1, h)?;
        let mut v = o.points[0].clone();
        v.extend_from_slice(&o.points[1]);
        v.extend(flatten(&[&o.slow[0], &o.slow[1], &o.fast[0], &o.fast[1]]));
        Ok::<_, Error>(v)
    })?;
    if v.len() != 2 * n + 4 * d * d {
        return Err(corrupt());
    }
    let mat = |j: usize| DMatrix::from_column_slice(d, d, &v[2 * n + j * d * d..2 * n + (j + 1) * d * d]);
    Ok(OrbitSplitting {
        spectrum: s.clone(),
        m_lo: 0,
        points: vec![v[..n].to_vec(), v[n..2 * n].to_vec()],
        slow: vec![mat(0), mat(1)],
        fast: vec![mat(2), mat(3)],
    })
}

fn spectrum_json(cfg: &RunConfig, point: &[f64], s: &SpectrumReport) -> Value {
    json!({
        "system": cfg.system,
        "point": nums(point),
        "horizon": s.horizon,
        "cluster_tol": DEFAULT_CLUSTER_TOL,
        "exponents": nums(&s.exponents),
        "multiplicities": s.multiplicities,
        "cluster_gap": num(s.cluster_gap),
        "per_step_rates": nums(&s.per_step_rates),
    })
}

/// Split indices whose profiles each command needs, and the spaces the
/// Hölder stage analyses.
fn splits_for(cfg: &RunConfig, k: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let all: Vec<usize> = (1..k).collect();
    match (cfg.command, cfg.split_index) {
        (Command::Holder, SplitIndex::All) => Ok((all, (1..=k).collect())),
        (Command::Holder, SplitIndex::Index(j)) => {
            if j > k {
                return Err(Error::Config(format!("split_index {j} exceeds the number of exponents {k}")));
            }
            let needed = [j.checked_sub(1), Some(j)].into_iter().flatten().filter(|&i| i >= 1 && i < k).collect();
            Ok((needed, vec![j]))
        }
        (_, SplitIndex::All) => Ok((all, vec![])),
        (_, SplitIndex::Index(i)) => {
            if i >= k {
                return Err(Error::Config(format!("split_index {i} must be below the number of exponents {k}")));
            }
            Ok((vec![i], vec![]))
        }
    }
}

const PROFILE_FIELDS: usize = 6;

fn profiles_at(ctx: &Ctx, s: &SpectrumReport, eps: f64, splits: &[usize], x: &Point) -> Result<Vec<RegularityProfile>> {
    let h = ctx.cfg.horizon;
    let extra = json!({ "spectrum": spectrum_key(s), "epsilon": bits_key(&[eps]), "splits": splits });
    let v = cached(ctx.cache, ctx.key("profiles", x, extra), || {
        let o = OrbitSplitting::compute(&ctx.sys, x, s, 0, h as i64, h)?;
        let mut v = Vec::with_capacity(PROFILE_FIELDS * splits.len());
        for &i in splits {
            let p = profile_on(&ctx.sys, &o, 0, i, eps, h)?;
            v.extend([p.c_upper, p.c_lower, p.c_tilde, p.k_direct, p.k_lemma, p.n_x as f64]);
        }
        Ok::<_, Error>(v)
    })?;
    if v.len() != PROFILE_FIELDS * splits.len() {
        return Err(corrupt());
    }
    Ok(splits
        .iter()
        .zip(v.chunks(PROFILE_FIELDS))
        .map(|(&i, c)| RegularityProfile {
            point: x.clone(),
            split_index: i,
            epsilon: eps,
            c_upper: c[0],
            c_lower: c[1],
            c_tilde: c[2],
            k_direct: c[3],
            k_lemma: c[4],
            n_x: c[5] as usize,
            horizon: h,
        })
        .collect())
}

struct Stages {
    records: Vec<StageRecord>,
    files: Vec<(String, Vec<u8>)>,
    clock: Instant,
}

impl Stages {
    fn finish(&mut self, name: &str, files: Vec<(String, Vec<u8>)>) {
        self.records.push(StageRecord {
            name: name.into(),
            outputs: files.iter().map(|f| f.0.clone()).collect(),
            seconds: self.clock.elapsed().as_secs_f64(),
        });
        self.files.extend(files);
        self.clock = Instant::now();
    }
}

/// Runs every stage the command implies, without touching the output directory.
pub fn execute(cfg: &RunConfig, cache: Option<&Cache>) -> Result<ReportBundle> {
    let sys = cfg.system.build().map_err(|e| Error::Config(format!("system: {e}")))?;
    let points = sys.sample_points(cfg.samples, 0);
    let ctx = Ctx { cfg, sys, points, cache };
    let mut st = Stages { records: vec![], files: vec![], clock: Instant::now() };

    let s = rates_at(&ctx, &ctx.sys, "rates")?;
    st.finish("spectrum", vec![("spectrum.json".into(), to_pretty(&spectrum_json(cfg, &ctx.points[0], &s))?)]);
    let eps = match cfg.epsilon {
        Epsilon::Auto => auto_epsilon(&s),
        Epsilon::Value(e) => e,
    };
    let k = s.k();
    let (splits, spaces) = splits_for(cfg, k)?;
    let bundle = |st: Stages| ReportBundle { config: cfg.clone(), epsilon: eps, spectrum: s.clone(), files: st.files, stages: st.records };
    if cfg.command == Command::Spectrum {
        return Ok(bundle(st));
    }

    let mut orbits: Vec<OrbitSplitting> = vec![];
    if matches!(cfg.command, Command::Splitting | Command::Verify | Command::Holder) {
        orbits = ctx.points.par_iter().map(|x| frames(&ctx, &s, x)).collect::<Result<_>>()?;
        let per_point: Vec<Value> = orbits
            .par_iter()
            .map(|o| {
                let s0 = o.sample(0)?;
                let s1 = o.sample(1)?;
                let eq = (1..=k).map(|i| equivariance_residual(&ctx.sys, &s0, &s1, &s, i)).collect::<Result<Vec<_>>>()?;
                Ok(json!({
                    "point": nums(&s0.point),
                    "spaces": s0.spaces.iter().map(subspace_json).collect::<Vec<_>>(),
                    "equivariance": nums(&eq),
                    "reconstruction": num(s0.residuals.reconstruction),
                }))
            })
            .collect::<Result<_>>()?;
        let doc = json!({ "horizon": cfg.horizon, "exponents": nums(&s.exponents), "multiplicities": s.multiplicities, "points": per_point });
        st.finish("splitting", vec![("splitting.json".into(), to_pretty(&doc)?)]);
    }

    if cfg.command == Command::Verify {
        let doc = verify_doc(&ctx, &s, &orbits)?;
        st.finish("verify", vec![("verify.json".into(), to_pretty(&doc)?)]);
        return Ok(bundle(st));
    }
    if cfg.command == Command::Splitting {
        return Ok(bundle(st));
    }

    if cfg.command == Command::Dichotomy {
        let doc = dichotomy_doc(&ctx, &s, eps)?;
        st.finish("dichotomy", vec![("dichotomy.json".into(), to_pretty(&doc)?)]);
        return Ok(bundle(st));
    }

    // regularity, and holder on top of it
    let per_point: Vec<Vec<RegularityProfile>> = if splits.is_empty() {
        vec![vec![]; ctx.points.len()]
    } else {
        ctx.points.par_iter().map(|x| profiles_at(&ctx, &s, eps, &splits, x)).collect::<Result<_>>()?
    };
    let header = ["x_coords", "i", "epsilon", "C_upper", "C_lower", "C_tilde", "K_direct", "K_lemma", "n_x", "horizon"];
    let rows: Vec<Vec<String>> = per_point
        .iter()
        .flatten()
        .map(|p| {
            vec![
                fmt_point(&p.point),
                p.split_index.to_string(),
                fmt_f64(p.epsilon),
                fmt_f64(p.c_upper),
                fmt_f64(p.c_lower),
                fmt_f64(p.c_tilde),
                fmt_f64(p.k_direct),
                fmt_f64(p.k_lemma),
                p.n_x.to_string(),
                p.horizon.to_string(),
            ]
        })
        .collect();
    st.finish("regularity", vec![("regularity.csv".into(), csv_bytes(&header, &rows)?)]);
    if cfg.command == Command::Regularity {
        return Ok(bundle(st));
    }

    let by_split: BTreeMap<usize, Vec<RegularityProfile>> =
        splits.iter().enumerate().map(|(j, &i)| (i, per_point.iter().map(|v| v[j].clone()).collect())).collect();
    let files = holder_files(&ctx, &s, eps, &by_split, &spaces, &orbits)?;
    st.finish("holder", files);
    Ok(bundle(st))
}

fn verify_doc(ctx: &Ctx, s: &SpectrumReport, orbits: &[OrbitSplitting]) -> Result<Value> {
    let k = s.k();
    let h = ctx.cfg.horizon;
    let adj = adjoint_cocycle(&ctx.sys);
    let adj_s = rates_at(ctx, &adj, "adjoint_rates")?;
    let agree = adj_s.multiplicities == s.multiplicities
        && adj_s.exponents.iter().zip(&s.exponents).all(|(a, b)| a == b || (a - b).abs() <= 2.0 * DEFAULT_CLUSTER_TOL);

    let per_point: Vec<(Vec<f64>, Vec<f64>, f64)> = orbits
        .par_iter()
        .zip(ctx.points.par_iter())
        .map(|(o, x)| {
            let s0 = o.sample(0)?;
            let s1 = o.sample(1)?;
            let eq = (1..=k).map(|i| equivariance_residual(&ctx.sys, &s0, &s1, s, i)).collect::<Result<Vec<_>>>()?;
            let dual = cached(ctx.cache, ctx.key("duality", x, spectrum_key(s)), || {
                let a = OrbitSplitting::compute(&adj, x, s, 0, 0, h)?.sample(0)?;
                (1..=k).map(|i| duality_residual(&s0, &a, i)).collect::<Result<Vec<_>>>()
            })?;
            if dual.len() != k {
                return Err(corrupt());
            }
            Ok((eq, dual, s0.residuals.reconstruction))
        })
        .collect::<Result<_>>()?;
    let max_of = |f: &dyn Fn(&(Vec<f64>, Vec<f64>, f64)) -> f64| per_point.iter().map(f).fold(0.0, f64::max);
    Ok(json!({
        "horizon": h,
        "points": ctx.points.len(),
        "exponents": nums(&s.exponents),
        "adjoint_exponents": nums(&adj_s.exponents),
        "adjoint_multiplicities": adj_s.multiplicities,
        "spectra_agree": agree,
        "max_equivariance_residual": num(max_of(&|p| p.0.iter().copied().fold(0.0, f64::max))),
        "max_duality_residual": num(max_of(&|p| p.1.iter().copied().fold(0.0, f64::max))),
        "max_reconstruction_residual": num(max_of(&|p| p.2)),
        "per_point": ctx.points.iter().zip(&per_point).map(|(x, p)| json!({
            "point": nums(x),
            "equivariance": nums(&p.0),
            "duality": nums(&p.1),
            "reconstruction": num(p.2),
        })).collect::<Vec<_>>(),
    }))
}

fn dichotomy_doc(ctx: &Ctx, s: &SpectrumReport, eps: f64) -> Result<Value> {
    let i = hyperbolic_split(s, DEFAULT_CLUSTER_TOL)?;
    if let SplitIndex::Index(j) = ctx.cfg.split_index {
        if j != i {
            return Err(Error::Config(format!("split_index {j} does not separate negative from positive exponents (use {i})")));
        }
    }
    let (h, w) = (ctx.cfg.horizon, ctx.cfg.window);
    let extra = json!({ "spectrum": spectrum_key(s), "epsilon": bits_key(&[eps]), "window": w, "split": i });
    let rows: Vec<Vec<f64>> = ctx
        .points
        .par_iter()
        .map(|x| {
            let v = cached(ctx.cache, ctx.key("dichotomy", x, extra.clone()), || {
                let o = OrbitSplitting::compute(&ctx.sys, x, s, -(w as i64), (w + h) as i64, h)?;
                let p = profile_on(&ctx.sys, &o, 0, i, eps, h)?;
                let params = DichotomyParams::from_profile(&p, s, w)?;
                let r = dichotomy_check(&ctx.sys, &o, &params, i)?;
                Ok::<_, Error>(vec![
                    if r.holds { 1.0 } else { 0.0 },
                    r.worst_margin,
                    r.commutation,
                    r.projector_cond,
                    params.d_const,
                    params.lambda_rate,
                    params.epsilon,
                ])
            })?;
            if v.len() != 7 {
                return Err(corrupt());
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let passed = rows.iter().filter(|r| r[0] == 1.0).count();
    Ok(json!({
        "split_index": i,
        "window": w,
        "epsilon": num(eps),
        "pass_rate": num(passed as f64 / rows.len() as f64),
        "points": ctx.points.iter().zip(&rows).map(|(x, r)| json!({
            "point": nums(x),
            "holds": r[0] == 1.0,
            "worst_margin": num(r[1]),
            "commutation": num(r[2]),
            "projector_cond": num(r[3]),
            "D": num(r[4]),
            "lambda": num(r[5]),
            "epsilon": num(r[6]),
        })).collect::<Vec<_>>(),
    }))
}

/// Up to `count` entries at evenly spaced ranks.
fn spread<T: Copy>(v: &[T], count: usize) -> Vec<T> {
    if v.len() <= count {
        return v.to_vec();
    }
    (0..count).map(|r| v[r * v.len() / count]).collect()
}

fn lambda_json(set: &LambdaSet) -> Value {
    json!({
        "split_index": set.split_index,
        "level": num(set.level),
        "members": set.indices.len(),
        "empirical_measure": num(set.empirical_measure),
    })
}

fn holder_files(
    ctx: &Ctx,
    s: &SpectrumReport,
    eps: f64,
    by_split: &BTreeMap<usize, Vec<RegularityProfile>>,
    spaces: &[usize],
    orbits: &[OrbitSplitting],
) -> Result<Vec<(String, Vec<u8>)>> {
    let cfg = ctx.cfg;
    let k = s.k();
    let sets: BTreeMap<usize, LambdaSet> =
        by_split.iter().map(|(&i, ps)| Ok((i, lambda_set_for_delta(ps, cfg.delta)?))).collect::<Result<_>>()?;
    let metric = |a: &[f64], b: &[f64]| ctx.sys.metric(a, b);

    let mut holder_rows = vec![];
    let mut pair_rows = vec![];
    let mut space_docs = vec![];
    for &j in spaces {
        // V_{<=j} needs the set for split j, the fast sum after j - 1 the set for split j - 1
        let mut set: Option<LambdaSet> = None;
        for i in [j.checked_sub(1).filter(|&i| i >= 1), (j < k).then_some(j)].into_iter().flatten() {
            let next = &sets[&i];
            set = Some(match set {
                None => next.clone(),
                Some(prev) => prev.intersect(next)?,
            });
        }
        let Some(set) = set else { continue };
        let fields: Vec<Subspace> = set.indices.par_iter().map(|&m| orbits[m].space(0, j)).collect::<Result<_>>()?;
        let pts = set.points();
        let pairs = pair_distances(&fields, &qualifying_pairs(&pts, metric, cfg.eps0))?;
        for p in &pairs {
            pair_rows.push(vec![fmt_point(&pts[p.a]), fmt_point(&pts[p.b]), fmt_f64(p.rho), fmt_f64(p.d_subspace), j.to_string()]);
        }
        let mut doc = json!({ "i": j, "lambda_set": lambda_json(&set), "pair_count": pairs.len() });
        match fit_holder(&pairs, cfg.eps0) {
            Ok(est) => {
                holder_rows.push(vec![
                    j.to_string(),
                    fmt_f64(set.level),
                    fmt_f64(cfg.delta),
                    fmt_f64(est.beta),
                    fmt_f64(est.l_const),
                    fmt_f64(est.r2),
                    est.pair_count.to_string(),
                    fmt_f64(cfg.eps0),
                ]);
                doc["estimate"] = json!({
                    "beta": num(est.beta),
                    "L": num(est.l_const),
                    "r2": num(est.r2),
                    "pair_count": est.pair_count,
                    "zero_distances": est.zero_distances,
                });
            }
            Err(e @ Error::TooFewPairs { .. }) => doc["error"] = json!(e.to_string()),
            Err(e) => return Err(e),
        }
        space_docs.push(doc);
    }

    let mut brin_docs = vec![];
    let (mut ok_total, mut checked_total) = (0usize, 0usize);
    for (&i, set) in &sets {
        let pts = set.points();
        let chosen = spread(&qualifying_pairs(&pts, metric, cfg.eps0), BRIN_PAIRS);
        let near: Vec<(Point, Point)> = chosen.iter().filter(|p| p.2 <= 0.1).map(|p| (pts[p.0].clone(), pts[p.1].clone())).collect();
        let growth = if near.is_empty() { 1.0 } else { cocycle_holder_check(&ctx.sys, &near, HOLDER_STEPS.min(cfg.horizon))?.c_hat };
        let setup = BrinSetup { level: set.level, epsilon: eps, horizon: cfg.horizon, growth };
        let tally = |f: &(dyn Fn(&[f64], &[f64]) -> Result<BrinReport> + Sync)| -> Result<Value> {
            let reps: Vec<Result<BrinReport>> = chosen.par_iter().map(|p| f(&pts[p.0], &pts[p.1])).collect();
            let mut ok = 0;
            let mut too_far = 0;
            let mut worst: f64 = 0.0;
            for r in reps {
                match r {
                    Ok(r) => {
                        ok += r.ok as usize;
                        worst = worst.max(r.observed / r.bound);
                    }
                    Err(Error::PairTooFar) => too_far += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok(json!({
                "pairs": chosen.len(),
                "ok": ok,
                "pair_too_far": too_far,
                "pass_rate": if chosen.is_empty() { Value::Null } else { num(ok as f64 / chosen.len() as f64) },
                "worst_observed_over_bound": num(worst),
            }))
        };
        let slow = tally(&|x, y| brin_consistency(&ctx.sys, x, y, i, s, &setup))?;
        ok_total += slow["ok"].as_u64().unwrap_or(0) as usize;
        checked_total += chosen.len();
        let mut doc = json!({ "split_index": i, "lambda_set": lambda_json(set), "growth": num(growth), "slow_sums": slow });
        if i >= 2 {
            doc["projected"] = tally(&|x, y| brin_consistency_projected(&ctx.sys, x, y, i, s, &setup))?;
        }
        brin_docs.push(doc);
    }

    let summary = json!({
        "delta": num(cfg.delta),
        "epsilon": num(eps),
        "eps0": num(cfg.eps0),
        "lambda_sets": sets.values().map(lambda_json).collect::<Vec<_>>(),
        "spaces": space_docs,
        "brin": brin_docs,
        "brin_slack": num(BRIN_SLACK),
        "brin_pass_rate": if checked_total == 0 { Value::Null } else { num(ok_total as f64 / checked_total as f64) },
    });
    Ok(vec![
        ("holder.csv".into(), csv_bytes(&["i", "l", "delta", "beta", "L", "r2", "pair_count", "eps0"], &holder_rows)?),
        ("pairs.csv".into(), csv_bytes(&["x", "y", "rho", "d_subspace", "i"], &pair_rows)?),
        ("holder_summary.json".into(), to_pretty(&summary)?),
    ])
}

fn manifest(bundle: &ReportBundle, write_seconds: f64) -> Value {
    let mut stages = serde_json::to_value(&bundle.stages).unwrap_or(Value::Null);
    if let Value::Array(a) = &mut stages {
        a.push(json!({ "name": "write", "outputs": [MANIFEST], "seconds": write_seconds }));
    }
    json!({
        "tool": "oseledets",
        "version": VERSION,
        "config": bundle.config,
        "resolved": {
            "epsilon": num(bundle.epsilon),
            "epsilon_rule": match bundle.config.epsilon {
                Epsilon::Auto => "auto: one sixth of the smallest gap between distinct exponents",
                Epsilon::Value(_) => "given",
            },
            "exponents": nums(&bundle.spectrum.exponents),
            "points": bundle.config.samples,
        },
        "stages": stages,
        "files": bundle.files.iter().map(|f| f.0.clone()).collect::<Vec<_>>(),
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes the bundle, first removing files a previous manifest in `dir` declared.
pub fn write_bundle(bundle: &ReportBundle, dir: &Path) -> Result<()> {
    let clock = Instant::now();
    fs::create_dir_all(dir)?;
    if let Ok(old) = fs::read(dir.join(MANIFEST)) {
        if let Ok(v) = serde_json::from_slice::<Value>(&old) {
            for f in v["files"].as_array().into_iter().flatten().filter_map(Value::as_str) {
                // only plain names we could have written ourselves
                if !f.contains(['/', '\\']) && f != ".." {
                    let _ = fs::remove_file(dir.join(f));
                }
            }
        }
    }
    for (name, bytes) in &bundle.files {
        write_atomic(&dir.join(name), bytes)?;
    }
    let m = manifest(bundle, clock.elapsed().as_secs_f64());
    write_atomic(&dir.join(MANIFEST), &to_pretty(&m)?)
}

/// Full run: compute on a pool of `cfg.threads` workers, then write.
pub fn run(cfg: &RunConfig) -> Result<ReportBundle> {
    let cache = if cfg.cache { Some(Cache::open(super::cache::default_dir())?) } else { None };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let bundle = pool.install(|| execute(cfg, cache.as_ref()))?;
    write_bundle(&bundle, &cfg.output_dir)?;
    Ok(bundle)
}
