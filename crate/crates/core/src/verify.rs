//! Randomised check suites and the two worked-example fixtures.
//!
//! Every suite is deterministic in `(seed, k, Λ)`: trial `t` draws from a
//! ChaCha8 stream `t` under the seed, so results do not depend on the rayon
//! schedule. Reports serialise to JSON.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use num::{BigInt, BigRational, Rational64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::ampl::{consecutive_sets, vandermonde_exact, vandermonde_lambda, AmplError, LambdaMatrix, TwistorTable};
use crate::bcfw::{
    boundaries, boundary_triplets, cell_matrix, enumerate_bcfw, random_angles, vertex_separator, ArcSequence,
    BcfwError, BoundaryKind, Limit,
};
use crate::dd::Dd;
use crate::exactmat::{
    is_positive_matrix, min_relative_maximal_minor, plucker, row_span_distance, MatError, Matrix, Scalar, Tolerances,
};
use crate::involution::{cyclic_interval, Involution};
use crate::moves::{
    cyc_index_set, cyc_lambda, cyc_matrix, inc_inv_lambda, inc_matrix, rot_lambda, rot_matrix, Angle, MoveError,
};
use crate::tlpos::{
    c_coeff, c_table, default_strong_lambda, enumerate_pairings, immanants, intervals, lambda0_table,
    strong_lambda_exact, strongly_positive_lambda, MinorTable, TlError,
};
use crate::twistor_expr::{
    alpha_pair, delta_plus, expr_move, invert, mandelstam_expr, promote_scalar, pull_table_inc, pull_table_rot,
    solution_matrix, span_distance, AnglePair, Evaluator, Expr, ExprError, ExprMove,
};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("bad Λ descriptor {0:?} (expected vandermonde, strong or file:PATH)")]
    BadLambda(String),
    #[error("Λ from {path} has k = {got}, expected {want}")]
    LambdaSize { path: String, got: usize, want: usize },
    #[error("{suite} needs k in {range}, got {k}")]
    Range { suite: &'static str, k: usize, range: &'static str },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ampl(#[from] AmplError),
    #[error(transparent)]
    Bcfw(#[from] BcfwError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Move(#[from] MoveError),
    #[error(transparent)]
    Tl(#[from] TlError),
}

/// Which kinematic matrix a suite runs against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSpec {
    /// nodes `1..=2k`
    Vandermonde,
    /// the default strongly positive `Λ̃`
    Strong,
    /// a CSV file, one row per line
    File(PathBuf),
}

impl LambdaSpec {
    pub fn build(&self, k: usize) -> Result<LambdaMatrix, VerifyError> {
        Ok(match self {
            LambdaSpec::Vandermonde => vandermonde_lambda(k, None)?,
            LambdaSpec::Strong => default_strong_lambda(k)?,
            LambdaSpec::File(p) => {
                let l = LambdaMatrix::from_csv(std::fs::File::open(p)?, 0.0)?;
                if l.k != k {
                    return Err(VerifyError::LambdaSize { path: p.display().to_string(), got: l.k, want: k });
                }
                l
            }
        })
    }
}

impl fmt::Display for LambdaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSpec::Vandermonde => write!(f, "vandermonde"),
            LambdaSpec::Strong => write!(f, "strong"),
            LambdaSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for LambdaSpec {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, VerifyError> {
        match s {
            "vandermonde" => Ok(LambdaSpec::Vandermonde),
            "strong" => Ok(LambdaSpec::Strong),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(LambdaSpec::File(p.into())),
                _ => Err(VerifyError::BadLambda(s.into())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub trial: usize,
    pub what: String,
    pub witness: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub k: usize,
    pub lambda: String,
    pub trials: usize,
    pub seed: u64,
    pub pass: bool,
    pub failure_count: usize,
    /// the first [`MAX_FAILURES`] failures by trial
    pub failures: Vec<Failure>,
    pub stats: BTreeMap<String, f64>,
    pub elapsed_s: f64,
}

impl SuiteReport {
    /// Same verdict, failures and statistics; timing is ignored.
    pub fn same_outcome(&self, other: &SuiteReport) -> bool {
        let strip = |r: &SuiteReport| (r.pass, r.failure_count, r.failures.clone(), r.stats.clone());
        strip(self) == strip(other)
    }
}

pub const MAX_FAILURES: usize = 20;

#[derive(Debug, Clone, Copy)]
enum Stat {
    Max(f64),
    Min(f64),
    Count(f64),
}

impl Stat {
    fn merge(self, o: Stat) -> Stat {
        match (self, o) {
            (Stat::Max(a), Stat::Max(b)) => Stat::Max(nan_max(a, b)),
            (Stat::Min(a), Stat::Min(b)) => Stat::Min(nan_min(a, b)),
            (Stat::Count(a), Stat::Count(b)) => Stat::Count(a + b),
            (a, _) => a,
        }
    }

    fn value(self) -> f64 {
        match self {
            Stat::Max(v) | Stat::Min(v) | Stat::Count(v) => v,
        }
    }
}

/// NaN-propagating max, so a NaN measurement is never hidden.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

/// Per-trial findings, merged across threads.
#[derive(Debug, Default)]
struct Tally {
    failures: Vec<Failure>,
    stats: BTreeMap<&'static str, Stat>,
}

impl Tally {
    fn stat(&mut self, key: &'static str, s: Stat) {
        self.stats.entry(key).and_modify(|e| *e = e.merge(s)).or_insert(s);
    }

    fn max(&mut self, key: &'static str, v: f64) {
        self.stat(key, Stat::Max(v));
    }

    fn min(&mut self, key: &'static str, v: f64) {
        self.stat(key, Stat::Min(v));
    }

    fn count(&mut self, key: &'static str) {
        self.stat(key, Stat::Count(1.0));
    }

    fn fail(&mut self, trial: usize, what: impl Into<String>, witness: Value) {
        self.failures.push(Failure { trial, what: what.into(), witness });
    }

    /// Records a failure unless `ok`.
    fn check(&mut self, ok: bool, trial: usize, what: impl Into<String>, witness: impl FnOnce() -> Value) {
        if !ok {
            self.fail(trial, what, witness());
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.failures.extend(other.failures);
        for (k, v) in other.stats {
            self.stat(k, v);
        }
        self
    }

    fn report(mut self, suite: &str, k: usize, lambda: &str, trials: usize, seed: u64, t0: Instant) -> SuiteReport {
        self.failures.sort_by(|a, b| a.trial.cmp(&b.trial).then_with(|| a.what.cmp(&b.what)));
        let failure_count = self.failures.len();
        self.failures.truncate(MAX_FAILURES);
        SuiteReport {
            suite: suite.into(),
            k,
            lambda: lambda.into(),
            trials,
            seed,
            pass: failure_count == 0,
            failure_count,
            failures: self.failures,
            stats: self.stats.into_iter().map(|(k, v)| (k.to_string(), v.value())).collect(),
            elapsed_s: t0.elapsed().as_secs_f64(),
        }
    }
}

/// The RNG of trial `t`: stream `t` of the seed.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial as u64);
    r
}

fn run<F>(n: usize, f: F) -> Tally
where
    F: Fn(usize) -> Tally + Sync + Send,
{
    (0..n).into_par_iter().map(f).reduce(Tally::default, Tally::merge)
}

fn angles_json(a: &[Angle<f64>]) -> Value {
    json!(a.iter().map(|x| x.sinh).collect::<Vec<_>>())
}

fn to_dd(m: &Matrix<f64>) -> Matrix<Dd> {
    m.map(|x| Dd::from(*x))
}

/// `Σ_{i<j∈I} ⟨i j⟩²`, the scale Mandelstam tolerances are relative to.
fn set_scale<T: Scalar>(t: &TwistorTable<T>, set: &[usize]) -> f64 {
    let mut acc = 0.0;
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            acc += t.get(i, j).to_f64().powi(2);
        }
    }
    acc
}

/// `Δ₊` at `k = 3`: the closed form reproduces the top-cell point from `(Λ, CΛ)`.
pub fn delta_plus_suite(lambda: &LambdaSpec, trials: usize, seed: u64, tol: &Tolerances) -> Result<SuiteReport, VerifyError> {
    let t0 = Instant::now();
    let lam = lambda.build(3)?.entries;
    let seq = enumerate_bcfw(3).remove(0);
    let sol = delta_plus();
    let tally = run(trials, |t| {
        let mut out = Tally::default();
        let mut rng = trial_rng(seed, t);
        let a = random_angles(&mut rng, seq.angle_count());
        let res = (|| -> Result<f64, VerifyError> {
            let c = cell_matrix::<f64>(&seq, &a)?;
            let table = TwistorTable::new(&c.mul(&lam)?, &lam)?;
            let m = sol.eval(&mut Evaluator::new(&table))?;
            Ok(row_span_distance(&m, &c, 1e-14)?)
        })();
        match res {
            Ok(d) => {
                out.max("max_span_distance", d);
                out.check(d <= tol.span, t, "Δ₊ does not reproduce C", || json!({"angles": angles_json(&a), "distance": d}));
            }
            Err(e) => out.fail(t, format!("evaluation failed: {e}"), json!({"angles": angles_json(&a)})),
        }
        out
    });
    Ok(tally.report("delta_plus", 3, &lambda.to_string(), trials, seed, t0))
}

/// BCFW cells and their distinct codimension-1 boundary cells.
pub fn cells_and_boundaries(k: usize) -> Result<Vec<(ArcSequence, &'static str)>, VerifyError> {
    let mut out: Vec<(ArcSequence, &'static str)> = Vec::new();
    let mut seen: Vec<Involution> = Vec::new();
    let cells = enumerate_bcfw(k);
    for s in &cells {
        seen.push(s.involution()?);
        out.push((s.clone(), "bcfw"));
    }
    for s in &cells {
        for b in boundaries(s)? {
            if !seen.contains(&b.involution) {
                seen.push(b.involution.clone());
                out.push((b.seq.clone(), "boundary"));
            }
        }
    }
    Ok(out)
}

/// Round-trip: each cell's twistor-solution recovers its points from `(Λ, CΛ)`.
/// Runs in double-double; `trials` points per cell.
pub fn injectivity_suite(
    k: usize,
    lambda: &LambdaSpec,
    trials: usize,
    seed: u64,
    span_tol: f64,
    tol: &Tolerances,
) -> Result<SuiteReport, VerifyError> {
    let t0 = Instant::now();
    if !(2..=6).contains(&k) {
        return Err(VerifyError::Range { suite: "injectivity", k, range: "2..=6" });
    }
    let lam = to_dd(&lambda.build(k)?.entries);
    let targets = cells_and_boundaries(k)?;
    let sols = targets.iter().map(|(s, _)| solution_matrix(&s.pairs())).collect::<Result<Vec<_>, _>>()?;
    let tally = run(targets.len() * trials, |t| {
        let mut out = Tally::default();
        let (seq, kind) = &targets[t / trials];
        let mut rng = trial_rng(seed, t);
        let a = random_angles(&mut rng, seq.angle_count());
        let wit = || json!({"cell": seq.to_string(), "kind": kind, "angles": angles_json(&a)});
        let c = match cell_matrix::<Dd>(seq, &a) {
            Ok(c) => c,
            Err(e) => {
                out.fail(t, format!("sampling failed: {e}"), wit());
                return out;
            }
        };
        let y = c.mul(&lam).expect("shapes agree");
        let inv = invert(&sols[t / trials], &lam, &y, tol.zero);
        out.count(if *kind == "bcfw" { "bcfw_points" } else { "boundary_points" });
        out.min("min_radicand", inv.diagnostics.min_radicand);
        out.check(inv.diagnostics.min_radicand >= -tol.zero, t, "negative radicand", wit);
        match inv.point {
            Some(p) => {
                let d = row_span_distance(&p, &c.to_f64(), 1e-14).unwrap_or(f64::INFINITY);
                out.max("max_span_distance", d);
                out.check(d <= span_tol, t, "solution is a different point", || {
                    let mut w = wit();
                    w["distance"] = json!(d);
                    w
                });
            }
            None => out.fail(t, format!("inversion rejected: {:?}", inv.reason), {
                let mut w = wit();
                w["diagnostics"] = json!(inv.diagnostics);
                w
            }),
        }
        out
    });
    let mut rep = tally.report("injectivity", k, &lambda.to_string(), trials, seed, t0);
    rep.stats.insert("cells".into(), targets.len() as f64);
    Ok(rep)
}

/// Sign of a separator with a relative dead zone; `None` if indeterminate.
fn sign_of(v: Dd, mag: f64) -> Option<i8> {
    let x = v.to_f64();
    if x.abs() <= 1e-20 * mag || !x.is_finite() {
        None
    } else {
        Some(if x > 0.0 { 1 } else { -1 })
    }
}

/// How close to an internal wall the separator signs are sampled: the wall
/// vertex gets `sinh = δ` (or `1/δ` when its limit is at infinity). Far from
/// the wall the other cell's separator need not be real.
pub const WALL_DISTANCE: f64 = 1e-3;

/// Tiling: a point of one BCFW cell is never inverted by another cell's
/// solution, and near every internal wall the two vertex-separators take
/// opposite signs on the two sides (`S₊ > 0 > S₋` on `Γ₊`, reversed on `Γ₋`).
pub fn tiling_suite(k: usize, lambda: &LambdaSpec, trials: usize, seed: u64, tol: &Tolerances) -> Result<SuiteReport, VerifyError> {
    let t0 = Instant::now();
    if !(3..=6).contains(&k) {
        return Err(VerifyError::Range { suite: "tiling", k, range: "3..=6" });
    }
    let lam = to_dd(&lambda.build(k)?.entries);
    let cells = enumerate_bcfw(k);
    let sols = cells.iter().map(|s| solution_matrix(&s.pairs())).collect::<Result<Vec<_>, _>>()?;
    let limit_of = |s: &ArcSequence, v: usize| -> Result<Limit, VerifyError> {
        let b = boundaries(s)?.into_iter().find(|b| b.vertex == v).ok_or(BcfwError::NoBoundary(v))?;
        Ok(b.limit)
    };
    let mut walls = Vec::new();
    for tr in boundary_triplets(k)? {
        let sp = vertex_separator(&tr.plus, tr.vertex_plus)?;
        let sm = vertex_separator(&tr.minus, tr.vertex_minus)?;
        let lp = limit_of(&tr.plus, tr.vertex_plus)?;
        let lm = limit_of(&tr.minus, tr.vertex_minus)?;
        walls.push((tr, sp, sm, lp, lm));
    }
    let tally = run(trials, |t| {
        let mut out = Tally::default();
        let mut rng = trial_rng(seed, t);
        let home = t % cells.len();
        let seq = &cells[home];
        let a = random_angles(&mut rng, seq.angle_count());
        let wit = || json!({"cell": seq.to_string(), "angles": angles_json(&a)});
        let Ok(c) = cell_matrix::<Dd>(seq, &a) else {
            out.fail(t, "sampling failed", wit());
            return out;
        };
        let y = c.mul(&lam).expect("shapes agree");
        for (j, sol) in sols.iter().enumerate() {
            let inv = invert(sol, &lam, &y, tol.zero);
            if j == home {
                out.check(inv.point.is_some(), t, "own solution rejected the point", || {
                    let mut w = wit();
                    w["reason"] = json!(inv.reason);
                    w
                });
            } else {
                out.count("cross_rejections");
                out.check(inv.point.is_none(), t, format!("point also inverted by {}", cells[j]), wit);
            }
        }
        for (tr, sp, sm, lp, lm) in &walls {
            let sides = [("plus", &tr.plus, tr.vertex_plus, *lp, (1, -1)), ("minus", &tr.minus, tr.vertex_minus, *lm, (-1, 1))];
            for (side, s, v, limit, expect) in sides {
                let mut a = random_angles(&mut rng, s.angle_count());
                a[v - 1] = Angle::from_sinh(match limit {
                    Limit::Zero => WALL_DISTANCE,
                    Limit::Infinity => 1.0 / WALL_DISTANCE,
                });
                let signs = (|| -> Result<(Option<i8>, Option<i8>, f64, f64), VerifyError> {
                    let c = cell_matrix::<Dd>(s, &a)?;
                    let table = TwistorTable::new(&c.mul(&lam)?, &lam)?;
                    let mut ev = Evaluator::new(&table);
                    let (vp, mp) = ev.eval_mag(sp)?;
                    let (vm, mm) = ev.eval_mag(sm)?;
                    Ok((sign_of(vp, mp), sign_of(vm, mm), vp.to_f64(), vm.to_f64()))
                })();
                match signs {
                    Ok((p, m, vp, vm)) => {
                        out.count("separator_points");
                        out.check(p == Some(expect.0) && m == Some(expect.1), t, format!("separator signs on {side} side"), || {
                            json!({"wall": tr.involution.to_string(), "cell": s.to_string(), "angles": angles_json(&a),
                                   "s_plus": vp, "s_minus": vm})
                        });
                    }
                    Err(e) => out.fail(t, format!("separator evaluation failed: {e}"), json!({"cell": s.to_string()})),
                }
            }
        }
        out
    });
    let mut rep = tally.report("tiling", k, &lambda.to_string(), trials, seed, t0);
    rep.stats.insert("walls".into(), walls.len() as f64);
    Ok(rep)
}

/// Consecutive Mandelstams are non-negative on BCFW points and on deeper
/// points obtained by further positive Rots.
pub fn mandelstam_suite(k: usize, lambda: &LambdaSpec, trials: usize, seed: u64, tol: &Tolerances) -> Result<SuiteReport, VerifyError> {
    let t0 = Instant::now();
    let lam = to_dd(&lambda.build(k)?.entries);
    let cells = enumerate_bcfw(k);
    let sets = consecutive_sets(k);
    let tally = run(trials, |t| {
        let mut out = Tally::default();
        let mut rng = trial_rng(seed, t);
        let seq = &cells[t % cells.len()];
        let a = random_angles(&mut rng, seq.angle_count());
        let extra: Vec<(usize, Angle<f64>)> =
            (0..t % 4).map(|_| (rng.gen_range(1..=2 * k), Angle::from_sinh(rng.gen_range(0.2..5.0)))).collect();
        let wit = || {
            json!({"cell": seq.to_string(), "angles": angles_json(&a),
                   "extra_rots": extra.iter().map(|(i, x)| json!([i, x.sinh])).collect::<Vec<_>>()})
        };
        let table = (|| -> Result<TwistorTable<Dd>, VerifyError> {
            let mut c = cell_matrix::<Dd>(seq, &a)?;
            for (i, x) in &extra {
                c = rot_matrix(&c, *i, &x.lift())?;
            }
            Ok(TwistorTable::new(&c.mul(&lam)?, &lam)?)
        })();
        let Ok(table) = table else {
            out.fail(t, "sampling failed", wit());
            return out;
        };
        for s in &sets {
            let v = table.mandelstam(s).to_f64();
            let rel = v / set_scale(&table, s).max(f64::MIN_POSITIVE);
            out.min("min_relative_s", rel);
            out.check(rel >= -tol.zero, t, format!("S_{s:?} < 0"), || {
                let mut w = wit();
                w["value"] = json!(v);
                w["relative"] = json!(rel);
                w
            });
        }
        out
    });
    Ok(tally.report("mandelstam", k, &lambda.to_string(), trials, seed, t0))
}

/// Every coefficient at `Λ_0` is non-negative (exact arithmetic).
pub fn lambda0_suite(k: usize) -> Result<SuiteReport, VerifyError> {
    let t0 = Instant::now();
    if !(3..=4).contains(&k) {
        return Err(VerifyError::Range { suite: "lambda0", k, range: "3..=4" });
    }
    let table = lambda0_table(k)?;
    let mut out = Tally::default();
    for e in &table {
        out.count(if e.trivial { "trivial" } else { "non_trivial" });
        out.min("min_c", e.c);
        out.check(e.c >= 0.0, 0, "negative coefficient", || json!(e));
    }
    Ok(out.report("lambda0", k, "lambda0", 1, 0, t0))
}

/// Exact certificate for the rational strongly positive `Λ̃`: all non-trivial
/// coefficients are strictly positive.
pub fn strong_certificate_suite(k: usize) -> Result<SuiteReport, VerifyError> {
    let t0 = Instant::now();
    if !(2..=4).contains(&k) {
        return Err(VerifyError::Range { suite: "strong_certificate", k, range: "2..=4" });
    }
    let table = c_table(&strong_lambda_exact(k, 1, 5)?)?;
    let mut out = Tally::default();
    for e in table.iter().filter(|e| !e.trivial) {
        out.count("non_trivial");
        out.min("min_relative_c", if e.scale > 0.0 { e.c / e.scale } else { 0.0 });
        out.check(e.c > 0.0, 0, "non-positive coefficient", || json!(e));
    }
    Ok(out.report("strong_certificate", k, "strong_exact(1/5)", 1, 0, t0))
}

/// `S_{I(i,j)} = Σ c·Δ_{τ,T}(C)` at `k = 3`, with non-negative immanants.
pub fn immanant_suite(lambda: &LambdaSpec, trials: usize, seed: u64, tol: &Tolerances) -> Result<SuiteReport, VerifyError> {
    let t0 = Instant::now();
    let k = 3;
    let n = 2 * k;
    let lam = lambda.build(k)?.entries;
    let lt = MinorTable::new(&lam.transpose())?;
    let pairings = enumerate_pairings(k, n);
    let ivs = intervals(n);
    let mut coeffs = Vec::new();
    for &(i, j) in &ivs {
        coeffs.push(pairings.iter().map(|p| Ok(c_coeff(i, j, p, &lt)?.value)).collect::<Result<Vec<f64>, TlError>>()?);
    }
    let seq = enumerate_bcfw(k).remove(0);
    let tally = run(trials, |t| {
        let mut out = Tally::default();
        let mut rng = trial_rng(seed, t);
        let a = random_angles(&mut rng, seq.angle_count());
        let wit = || json!({"angles": angles_json(&a)});
        let res = (|| -> Result<(Vec<f64>, f64, TwistorTable<f64>), VerifyError> {
            let c = cell_matrix::<f64>(&seq, &a)?;
            let (imm, resid) = immanants(&c, &pairings)?;
            Ok((imm, resid, TwistorTable::new(&c.mul(&lam)?, &lam)?))
        })();
        let Ok((imm, resid, table)) = res else {
            out.fail(t, "evaluation failed", wit());
            return out;
        };
        out.max("max_fit_residual", resid);
        let big = imm.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let low = imm.iter().fold(f64::INFINITY, |m, &x| m.min(x / big));
        out.min("min_relative_immanant", low);
        out.check(low >= -tol.zero, t, "negative immanant", wit);
        for (&(i, j), cs) in ivs.iter().zip(&coeffs) {
            let set = cyclic_interval(i % n + 1, j, n);
            let s = table.mandelstam(&set);
            let rhs: f64 = cs.iter().zip(&imm).map(|(c, d)| c * d).sum();
            let r = (s - rhs).abs() / s.abs().max(rhs.abs()).max(set_scale(&table, &set) * 1e-12);
            out.max("max_decomposition_residual", r);
            out.check(r <= 1e-7, t, format!("decomposition residual at ({i},{j})"), || json!({"angles": angles_json(&a), "s": s, "sum": rhs}));
        }
        out
    });
    Ok(tally.report("immanant", k, &lambda.to_string(), trials, seed, t0))
}

/// Largest entry gap between two tables, relative to the larger scale.
fn table_gap<T: Scalar>(a: &TwistorTable<T>, b: &TwistorTable<T>) -> f64 {
    let scale = a.values.max_abs().max(b.values.max_abs()).max(f64::MIN_POSITIVE);
    let n = a.n();
    let mut g = 0.0f64;
    for i in 1..=n {
        for j in 1..=n {
            g = nan_max(g, (a.get(i, j).to_f64() - b.get(i, j).to_f64()).abs());
        }
    }
    g / scale
}

/// Largest gap between `e(⟨n m⟩)` evaluated on `moved` and `⟨n m⟩` of `base`.
fn law_gap(m: &ExprMove, moved: &TwistorTable<Dd>, base: &TwistorTable<Dd>) -> Result<f64, ExprError> {
    let n = base.n();
    let scale = moved.values.max_abs().max(base.values.max_abs()).max(f64::MIN_POSITIVE);
    let mut ev = Evaluator::new(moved);
    let mut g = 0.0f64;
    for i in 1..=n {
        for j in i + 1..=n {
            let v = ev.eval(&expr_move(m, &Expr::tw(i, j)))?;
            g = nan_max(g, (v - base.get(i, j)).to_f64().abs());
        }
    }
    Ok(g / scale)
}

/// Subsets of `[2k]` meeting `{p, q}` in 0 or 2 labels: consecutive sets plus a few random ones.
fn admissible_sets<R: Rng>(rng: &mut R, k: usize, p: usize, q: usize) -> Vec<Vec<usize>> {
    let n = 2 * k;
    let mut sets = consecutive_sets(k);
    for _ in 0..6 {
        let mut s: Vec<usize> = (1..=n).filter(|_| rng.gen_bool(0.5)).collect();
        if s.len() >= 2 {
            s.sort_unstable();
            sets.push(s);
        }
    }
    sets.retain(|s| s.contains(&p) == s.contains(&q));
    sets
}

fn s_gap(a: Dd, b: Dd, scale: f64) -> f64 {
    (a - b).to_f64().abs() / scale.max(f64::MIN_POSITIVE)
}

/// Random rational hyperbolic angle `((1+u²)/(1-u²), 2u/(1-u²))`, `u = p/q < 1`.
fn rational_pair<R: Rng>(rng: &mut R) -> (AnglePair, Angle<Dd>) {
    let q: i64 = rng.gen_range(5..40);
    let p: i64 = rng.gen_range(1..q);
    let (c, s) = (Rational64::new(q * q + p * p, q * q - p * p), Rational64::new(2 * p * q, q * q - p * p));
    let f = |r: Rational64| Dd::from_ratio(*r.numer(), *r.denom());
    (AnglePair { cosh: Expr::constant(c), sinh: Expr::constant(s) }, Angle::new(f(c), f(s)))
}

/// Random positive `Λ` at size `k` for the covariance checks.
fn random_positive_lambda<R: Rng>(rng: &mut R, k: usize) -> Result<Matrix<f64>, VerifyError> {
    let n = 2 * k;
    let t: Vec<f64> = (0..crate::tlpos::fz_word(n).len()).map(|_| rng.gen_range(0.05..0.25)).collect();
    Ok(strongly_positive_lambda(k, &t)?.entries)
}

/// Move covariance: the twistor-table laws of Rot, Cyc and Inc (each by
/// the matrix pullback and by the symbolic leaf rewrite), the Mandelstam
/// invariances, and positivity of `Inc⁻¹Λ`.
pub fn covariance_suite(k: usize, lambda: &LambdaSpec, trials: usize, seed: u64, tol: &Tolerances) -> Result<SuiteReport, VerifyError> {
    let t0 = Instant::now();
    if !(2..=4).contains(&k) {
        return Err(VerifyError::Range { suite: "covariance", k, range: "2..=4" });
    }
    let lam = to_dd(&lambda.build(k)?.entries);
    let cells = enumerate_bcfw(k);
    let small_cells = enumerate_bcfw(k - 1);
    let n = 2 * k;
    let lim = tol.zero;
    let tally = run(trials, |t| {
        let mut out = Tally::default();
        let mut rng = trial_rng(seed, t);
        let res = (|| -> Result<(), VerifyError> {
            // Rot and Cyc on [C, Λ, Y] at size k; Y = CΛ is fixed by both.
            let seq = &cells[t % cells.len()];
            let c = cell_matrix::<Dd>(seq, &random_angles(&mut rng, seq.angle_count()))?;
            let y = c.mul(&lam)?;
            let base = TwistorTable::new(&y, &lam)?;
            let i = rng.gen_range(1..=n);
            let (pair, ang) = rational_pair(&mut rng);
            let c2 = rot_matrix(&c, i, &ang)?;
            let lam2 = rot_lambda(&lam, i, &ang)?;
            let y_gap = span_distance(&c2.mul(&lam2)?, &y).unwrap_or(f64::INFINITY);
            let moved = TwistorTable::new(&y, &lam2)?;
            let g1 = table_gap(&pull_table_rot(&moved, i, &ang), &base);
            let g2 = law_gap(&ExprMove::Rot { i, k, angle: pair }, &moved, &base)?;
            out.max("rot_table_gap", g1.max(g2));
            out.check(y_gap <= lim && g1 <= lim && g2 <= lim, t, format!("Rot_{i} twistor law"), || json!([y_gap, g1, g2]));
            let (p, q) = if i < n { (i, i + 1) } else { (1, n) };
            for s in admissible_sets(&mut rng, k, p, q) {
                let g = s_gap(moved.mandelstam(&s), base.mandelstam(&s), set_scale(&base, &s));
                out.max("rot_mandelstam_gap", g);
                out.check(g <= lim, t, format!("Rot_{i} changes S_{s:?}"), || json!(g));
            }

            let c3 = cyc_matrix(&c)?;
            let lam3 = cyc_lambda(&lam)?;
            let y_gap = span_distance(&c3.mul(&lam3)?, &y).unwrap_or(f64::INFINITY);
            let cyc = TwistorTable::new(&y, &lam3)?;
            let sg = crate::moves::wrap_sign(k);
            let back = |x: usize| if x == 1 { (n, sg) } else { (x - 1, 1) };
            let expect = TwistorTable::from_matrix(Matrix::from_fn(n, n, |a, b| {
                let ((x, sx), (z, sz)) = (back(a + 1), back(b + 1));
                Dd::from_i64(sx * sz) * base.get(x, z)
            }));
            let g1 = table_gap(&cyc, &expect);
            let g2 = law_gap(&ExprMove::Cyc { k }, &cyc, &base)?;
            out.max("cyc_table_gap", g1.max(g2));
            out.check(y_gap <= lim && g1 <= lim && g2 <= lim, t, "Cyc twistor law", || json!([y_gap, g1, g2]));
            for s in admissible_sets(&mut rng, k, 1, 1) {
                let g = s_gap(cyc.mandelstam(&cyc_index_set(&s, k)), base.mandelstam(&s), set_scale(&base, &s));
                out.max("cyc_mandelstam_gap", g);
                out.check(g <= lim, t, format!("Cyc on S_{s:?}"), || json!(g));
            }

            // Inc from size k-1 to k: Λ_small = Inc⁻¹ Λ.
            let sseq = &small_cells[t % small_cells.len()];
            let cs = cell_matrix::<Dd>(sseq, &random_angles(&mut rng, sseq.angle_count()))?;
            let i = rng.gen_range(1..n);
            let big_lam = to_dd(&random_positive_lambda(&mut rng, k)?);
            let lam_s = inc_inv_lambda(&big_lam, i)?;
            let min_minor = min_relative_maximal_minor(&lam_s.to_f64());
            out.min("inc_inv_min_relative_minor", min_minor);
            out.check(min_minor > 0.0, t, format!("Inc_{i}⁻¹Λ not positive"), || json!(min_minor));
            let small = TwistorTable::new(&cs.mul(&lam_s)?, &lam_s)?;
            let big = TwistorTable::new(&inc_matrix(&cs, i)?.mul(&big_lam)?, &big_lam)?;
            let g1 = table_gap(&pull_table_inc(&big, i), &small);
            let g2 = law_gap(&ExprMove::Inc { i }, &big, &small)?;
            let scale = big.values.max_abs();
            let mut g3 = big.get(i, i + 1).to_f64().abs() / scale;
            for j in (1..=n).filter(|&j| j != i && j != i + 1) {
                g3 = nan_max(g3, (big.get(j, i) + big.get(j, i + 1)).to_f64().abs() / scale);
            }
            out.max("inc_table_gap", g1.max(g2).max(g3));
            out.check(g1 <= lim && g2 <= lim && g3 <= lim, t, format!("Inc_{i} twistor law"), || json!([g1, g2, g3]));
            for s in admissible_sets(&mut rng, k, i, i + 1) {
                let inner: Vec<usize> = s.iter().copied().filter(|&x| x != i && x != i + 1).collect();
                if inner.len() < 2 {
                    continue;
                }
                let down: Vec<usize> = inner.iter().map(|&x| if x < i { x } else { x - 2 }).collect();
                let sc = set_scale(&big, &s);
                let g = s_gap(big.mandelstam(&s), small.mandelstam(&down), sc).max(s_gap(big.mandelstam(&s), big.mandelstam(&inner), sc));
                out.max("inc_mandelstam_gap", g);
                out.check(g <= lim, t, format!("Inc_{i} on S_{s:?}"), || json!(g));
            }

            // Exact positivity on random rational Vandermonde nodes.
            let mut nodes: Vec<i64> = (0..n).map(|_| rng.gen_range(1..60)).collect();
            nodes.sort_unstable();
            nodes.dedup();
            if nodes.len() == n {
                let v = Matrix::from_fn(n, k + 2, |r, col| BigRational::from_integer(BigInt::from(nodes[r]).pow(col as u32)));
                let ok = is_positive_matrix(&inc_inv_lambda(&v, i)?, 0.0);
                out.count("exact_positivity_checks");
                out.check(ok, t, format!("exact Inc_{i}⁻¹Λ not positive"), || json!(nodes));
            }
            Ok(())
        })();
        if let Err(e) = res {
            out.fail(t, format!("evaluation failed: {e}"), Value::Null);
        }
        out
    });
    Ok(tally.report("covariance", k, &lambda.to_string(), trials, seed, t0))
}

/// Cell census for `k = 3..=6` and the `k = 4` boundary structure.
pub fn census_suite() -> Result<SuiteReport, VerifyError> {
    let t0 = Instant::now();
    let mut out = Tally::default();
    for (k, want) in [(3, 1), (4, 2), (5, 5), (6, 14)] {
        let got = enumerate_bcfw(k).len();
        out.check(got == want, 0, format!("k={k}: {got} cells, expected {want}"), || json!(got));
    }
    let mut internal = Vec::new();
    for s in enumerate_bcfw(4) {
        let b = boundaries(&s)?;
        out.check(b.len() == 5, 0, format!("{s}: {} boundaries", b.len()), || json!(b.len()));
        let inner: Vec<_> = b.iter().filter(|x| x.kind == BoundaryKind::Internal).map(|x| x.involution.clone()).collect();
        out.check(inner.len() == 1, 0, format!("{s}: {} internal boundaries", inner.len()), || json!(inner.len()));
        internal.extend(inner);
    }
    internal.dedup();
    out.check(internal.len() == 1, 0, "internal boundaries are not one shared wall", || {
        json!(internal.iter().map(|t| t.to_string()).collect::<Vec<_>>())
    });
    let walls = boundary_triplets(4)?;
    out.check(walls.len() == 1, 0, "k=4 should have exactly one internal wall", || json!(walls.len()));
    Ok(out.report("census", 4, "-", 1, 0, t0))
}

/// `C(α, β, γ)` as displayed in the worked `k = 3` example, with the two
/// wrap-slot signs taken positive (see the README's fixtures section).
pub fn k3_example_printed(a: &Angle<f64>, b: &Angle<f64>, g: &Angle<f64>, wrap: f64) -> Matrix<f64> {
    Matrix::from_rows(vec![
        vec![g.cosh, a.cosh, a.sinh, 0.0, 0.0, wrap * g.sinh],
        vec![0.0, a.sinh, a.cosh, b.cosh, b.sinh, 0.0],
        vec![wrap * g.sinh, 0.0, 0.0, b.sinh, b.cosh, g.cosh],
    ])
    .expect("rectangular")
}

/// `Rot_6(γ) Rot_4(β) Rot_2(α) Inc_5 Inc_3 Inc_1 (∅)`.
pub fn k3_example_composition<T: Scalar>(a: &Angle<T>, b: &Angle<T>, g: &Angle<T>) -> Result<Matrix<T>, MoveError> {
    let mut c = Matrix::<T>::zeros(0, 0);
    for i in [1, 3, 5] {
        c = inc_matrix(&c, i)?;
    }
    c = rot_matrix(&c, 2, a)?;
    c = rot_matrix(&c, 4, b)?;
    rot_matrix(&c, 6, g)
}

/// `(cosh t, sinh t)` in double-double by Taylor series; `|t| <= 0.1`.
fn dd_cosh_sinh(t: f64) -> (Dd, Dd) {
    let x = Dd::from(t);
    let (mut c, mut s) = (Dd::ONE, x);
    let mut term = Dd::ONE;
    for m in 1..30 {
        term = term * x / Dd::from((m) as f64);
        if m % 2 == 0 {
            c = c + term;
        } else if m > 1 {
            s = s + term;
        }
    }
    (c, s)
}

/// The displayed `k = 4` curve `C(t)`.
pub fn k4_example_printed(t: f64) -> Matrix<Dd> {
    let (ch, sh) = dd_cosh_sinh(t);
    let q = |n: i64| Dd::from_ratio(n, 3);
    let z = Dd::ZERO;
    Matrix::from_rows(vec![
        vec![q(5), q(5) * ch, q(4) * ch, -q(4) * sh, -q(5) * sh, z, z, -q(4)],
        vec![z, q(5) * sh, q(4) * sh, -q(4) * ch, -q(5) * ch, -q(5), -q(4), z],
        vec![z, q(4), q(5), q(5), q(4), z, z, z],
        vec![-q(4), z, z, z, z, q(4), q(5), q(5)],
    ])
    .expect("rectangular")
}

/// `Rot_8 Rot_6 Rot_4 Rot_2 (α) Inc_7 Inc_3 Rot_2(t) Inc_3 Inc_1 (∅)` with `sinh α = 4/3`.
pub fn k4_example_composition(t: f64) -> Result<Matrix<Dd>, MoveError> {
    let (ch, sh) = dd_cosh_sinh(t);
    let alpha = Angle::new(Dd::from_ratio(5, 3), Dd::from_ratio(4, 3));
    let mut c = Matrix::<Dd>::zeros(0, 0);
    c = inc_matrix(&c, 1)?;
    c = inc_matrix(&c, 3)?;
    c = rot_matrix(&c, 2, &Angle::new(ch, sh))?;
    c = inc_matrix(&c, 3)?;
    c = inc_matrix(&c, 7)?;
    for i in [2, 4, 6, 8] {
        c = rot_matrix(&c, i, &alpha)?;
    }
    Ok(c)
}

/// Central differences at `h1 > h2`, Richardson-extrapolated for the `h²` term.
pub fn richardson_slope(f: impl Fn(f64) -> Result<f64, VerifyError>, h1: f64, h2: f64) -> Result<f64, VerifyError> {
    let d = |h: f64| -> Result<f64, VerifyError> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
    let (d1, d2) = (d(h1)?, d(h2)?);
    Ok(d2 + (d2 - d1) / ((h1 / h2).powi(2) - 1.0))
}

pub const K4_EXAMPLE_COSH_SLOPE: (i64, i64) = (164, 213);
pub const K4_EXAMPLE_S_PLUS_SLOPE: f64 = -10_617_209_487_360_000.0;

/// The worked `k = 3` example: the composition against its displayed matrix,
/// and `Δ_{123} = Δ_{456} = sinh γ`, at random angles.
pub fn k3_example_fixture_suite(trials: usize, seed: u64) -> Result<SuiteReport, VerifyError> {
    let t0 = Instant::now();
    let out = run(trials, |t| {
        let mut out = Tally::default();
        let mut rng = trial_rng(seed, t);
        let u: Vec<f64> = (0..3).map(|_| rng.gen_range(0.2..5.0)).collect();
        let [a, b, g] = [0, 1, 2].map(|x| Angle::from_sinh(u[x]));
        let Ok(c) = k3_example_composition(&a, &b, &g) else {
            out.fail(t, "composition failed", json!(u));
            return out;
        };
        let scale = c.max_abs();
        let printed = k3_example_printed(&a, &b, &g, 1.0);
        let literal = k3_example_printed(&a, &b, &g, -1.0);
        let mut gap = 0.0f64;
        let mut literal_mismatches = 0;
        for r in 0..3 {
            for col in 0..6 {
                gap = nan_max(gap, (c[(r, col)] - printed[(r, col)]).abs() / scale);
                if (c[(r, col)] - literal[(r, col)]).abs() > 1e-12 * scale {
                    literal_mismatches += 1;
                }
            }
        }
        out.max("entry_gap", gap);
        out.max("literal_sign_mismatches", literal_mismatches as f64);
        out.check(gap <= 1e-12, t, "composition differs from the displayed matrix", || json!({"sinh": u, "gap": gap}));
        let d123 = plucker(&c, &[1, 2, 3]).unwrap_or(f64::NAN);
        let d456 = plucker(&c, &[4, 5, 6]).unwrap_or(f64::NAN);
        let e = (d123 - g.sinh).abs().max((d456 - g.sinh).abs()) / g.sinh.max(1.0);
        out.max("delta123_gap", e);
        out.check(e <= 1e-12, t, "Δ123 ≠ sinh γ", || json!({"sinh": u, "d123": d123, "d456": d456}));
        out
    });
    Ok(out.report("example_k3", 3, "-", trials, seed, t0))
}

/// The worked `k = 4` example: the composition gives the displayed `C(t)`,
/// and along it `cosh α_{4,4,4,2}` and `S₊` have the stated slopes at `t = 0`.
pub fn k4_example_fixture_suite() -> Result<SuiteReport, VerifyError> {
    let t0 = Instant::now();
    let mut out = Tally::default();
    let lam = vandermonde_exact::<Dd>(4);
    let mut gap = 0.0f64;
    for t in [0.0, 1e-3, -1e-3, 0.05] {
        let c = k4_example_composition(t)?;
        let p = k4_example_printed(t);
        for r in 0..4 {
            for col in 0..8 {
                gap = gap.max((c[(r, col)] - p[(r, col)]).to_f64().abs());
            }
        }
    }
    out.max("composition_gap", gap);
    out.check(gap <= 1e-25, 0, "composition differs from the displayed C(t)", || json!(gap));

    let cosh_expr = alpha_pair(4, 4, 4, 2)?.cosh;
    let s_plus = promote_scalar(&mandelstam_expr(&[2, 3, 4]), 4, 4, 3)?;
    let eval = |e: &Expr, t: f64| -> Result<f64, VerifyError> {
        let c = k4_example_printed(t);
        let table = TwistorTable::new(&c.mul(&lam)?, &lam)?;
        Ok(Evaluator::new(&table).eval(e)?.to_f64())
    };
    let c0 = eval(&cosh_expr, 0.0)?;
    out.max("cosh_at_0", c0);
    out.check((c0 - 5.0 / 3.0).abs() <= 1e-12, 0, "cosh α(0) ≠ 5/3", || json!(c0));
    let want = K4_EXAMPLE_COSH_SLOPE.0 as f64 / K4_EXAMPLE_COSH_SLOPE.1 as f64;
    let slope = richardson_slope(|t| eval(&cosh_expr, t), 1e-3, 1e-4)?;
    let rel = (slope - want).abs() / want;
    out.max("cosh_slope", slope);
    out.max("cosh_slope_rel_err", rel);
    out.check(rel <= 1e-4, 0, "cosh α slope", || json!({"slope": slope, "want": want}));
    let s0 = eval(&s_plus, 0.0)?;
    let slope = richardson_slope(|t| eval(&s_plus, t), 1e-3, 1e-4)?;
    let rel = (slope - K4_EXAMPLE_S_PLUS_SLOPE).abs() / K4_EXAMPLE_S_PLUS_SLOPE.abs();
    out.max("s_plus_at_0", s0);
    out.max("s_plus_slope", slope);
    out.max("s_plus_slope_rel_err", rel);
    out.check(rel <= 1e-6, 0, "S₊ slope", || json!({"slope": slope, "want": K4_EXAMPLE_S_PLUS_SLOPE}));
    Ok(out.report("example_k4", 4, "vandermonde_exact", 1, 0, t0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn assert_pass(r: &SuiteReport) {
        assert!(r.pass, "{}", serde_json::to_string_pretty(r).unwrap());
    }

    #[test]
    fn lambda_spec_round_trip() {
        for s in ["vandermonde", "strong", "file:/tmp/l.csv"] {
            assert_eq!(s.parse::<LambdaSpec>().unwrap().to_string(), s);
        }
        assert!("file:".parse::<LambdaSpec>().is_err());
        assert!("bogus".parse::<LambdaSpec>().is_err());
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        let a: u64 = trial_rng(5, 3).gen();
        let _: u64 = trial_rng(5, 2).gen();
        assert_eq!(a, trial_rng(5, 3).gen::<u64>());
        assert_ne!(a, trial_rng(5, 4).gen::<u64>());
    }

    #[test]
    fn delta_plus_small() {
        let r = delta_plus_suite(&LambdaSpec::Vandermonde, 50, 1, &tol()).unwrap();
        assert_pass(&r);
        let again = delta_plus_suite(&LambdaSpec::Vandermonde, 50, 1, &tol()).unwrap();
        assert!(r.same_outcome(&again));
        let back: SuiteReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert!(back.same_outcome(&r));
    }

    #[test]
    fn injectivity_k4_small() {
        let r = injectivity_suite(4, &LambdaSpec::Vandermonde, 5, 2, 1e-6, &tol()).unwrap();
        assert_pass(&r);
        assert!(r.stats["boundary_points"] > 0.0);
    }

    #[test]
    fn tiling_k4_small() {
        let r = tiling_suite(4, &LambdaSpec::Vandermonde, 20, 3, &tol()).unwrap();
        assert_pass(&r);
        assert_eq!(r.stats["walls"], 1.0);
    }

    #[test]
    fn mandelstam_strong_k3() {
        assert_pass(&mandelstam_suite(3, &LambdaSpec::Strong, 50, 4, &tol()).unwrap());
    }

    #[test]
    fn lambda0_k3_and_certificate() {
        assert_pass(&lambda0_suite(3).unwrap());
        let r = strong_certificate_suite(3).unwrap();
        assert_pass(&r);
        assert_eq!(r.stats["non_trivial"], 294.0);
    }

    #[test]
    fn immanants_small() {
        assert_pass(&immanant_suite(&LambdaSpec::Strong, 10, 5, &tol()).unwrap());
    }

    #[test]
    fn covariance_small() {
        assert_pass(&covariance_suite(3, &LambdaSpec::Vandermonde, 20, 6, &tol()).unwrap());
    }

    #[test]
    fn census() {
        assert_pass(&census_suite().unwrap());
    }

    #[test]
    fn fixtures() {
        let r = k3_example_fixture_suite(5, 7).unwrap();
        assert_pass(&r);
        // the displayed matrix carries -sinh γ in both wrap slots
        assert_eq!(r.stats["literal_sign_mismatches"], 2.0);
        let r = k4_example_fixture_suite().unwrap();
        assert_pass(&r);
        assert!((r.stats["cosh_slope"] - 164.0 / 213.0).abs() < 1e-6);
    }

    #[test]
    fn detects_a_wrong_solution() {
        // Δ₊ evaluated against a different Λ than the one producing Y must fail
        let seq = enumerate_bcfw(3).remove(0);
        let a = random_angles(&mut trial_rng(1, 0), 3);
        let c = cell_matrix::<f64>(&seq, &a).unwrap();
        let lam = vandermonde_lambda(3, None).unwrap().entries;
        let other = vandermonde_lambda(3, Some(&[1.0, 2.0, 3.0, 4.0, 5.0, 7.0])).unwrap().entries;
        let table = TwistorTable::new(&c.mul(&lam).unwrap(), &other).unwrap();
        let m = delta_plus().eval(&mut Evaluator::new(&table)).unwrap();
        assert!(row_span_distance(&m, &c, 1e-14).unwrap() > 1e-3);
    }
}
