//! `orthotile`: cell catalogues, inversion of amplituhedron points and the
//! randomised check suites.
//!
//! Exit status: 0 when every asserted check passes, 1 when a check fails,
//! 2 on bad input or an internal error.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use orthotile::ampl::{read_matrix_csv, vandermonde_lambda, LambdaMatrix};
use orthotile::bcfw::{catalog_json, ArcSequence};
use orthotile::dd::Dd;
use orthotile::exactmat::{Matrix, Tolerances};
use orthotile::tlpos::{c_table, default_strong_lambda, lambda0_table, min_relative_c, CEntry};
use orthotile::twistor_expr::{invert, solution_matrix};
use orthotile::verify::{
    k3_example_fixture_suite, k4_example_fixture_suite, injectivity_suite, mandelstam_suite, tiling_suite, LambdaSpec, SuiteReport,
};

#[derive(Parser)]
#[command(name = "orthotile", version, about = "BCFW cells of the non-negative orthogonal Grassmannian and their amplituhedron images")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum LambdaKind {
    Vandermonde,
    Strong,
    File,
}

#[derive(clap::Args)]
struct LambdaArgs {
    /// kinematic matrix: nodes 1..2k, the default strongly positive one, or a CSV file
    #[arg(long, value_enum)]
    lambda: Option<LambdaKind>,
    /// CSV file for `--lambda file`
    #[arg(long)]
    lambda_file: Option<PathBuf>,
}

impl LambdaArgs {
    fn spec(&self, default: LambdaKind) -> Result<LambdaSpec> {
        Ok(match (self.lambda.unwrap_or(default), &self.lambda_file) {
            (LambdaKind::Vandermonde, None) => LambdaSpec::Vandermonde,
            (LambdaKind::Strong, None) => LambdaSpec::Strong,
            (LambdaKind::File, Some(p)) => LambdaSpec::File(p.clone()),
            (LambdaKind::File, None) => bail!("--lambda file needs --lambda-file PATH"),
            (_, Some(_)) => bail!("--lambda-file is only used with --lambda file"),
        })
    }
}

#[derive(clap::Args)]
struct SuiteArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the BCFW cells of OG≥0(k, 2k) with their codimension-1 boundaries.
    Enumerate {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the point of a cell mapping to Y, or report why there is none.
    Invert {
        /// arc-sequence such as `A2,1 A3,2 A4,2`
        #[arg(long)]
        seq: ArcSequence,
        /// Λ as a 2k x (k+2) CSV
        #[arg(long)]
        lambda: PathBuf,
        /// Y as a k x (k+2) CSV
        #[arg(long)]
        y: PathBuf,
        /// include the twistor-solution as text
        #[arg(long)]
        show_solution: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Disjointness of cell images and separator signs at internal walls.
    Tiling {
        #[command(flatten)]
        run: SuiteArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
    },
    /// Non-negativity of consecutive Mandelstams on sampled cell images.
    Mandelstam {
        #[command(flatten)]
        run: SuiteArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
    },
    /// Round-trip every cell and boundary cell through its twistor-solution.
    Injectivity {
        #[command(flatten)]
        run: SuiteArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        /// largest accepted Plücker distance between sampled and recovered points
        #[arg(long, default_value_t = 1e-6)]
        span: f64,
    },
    /// Immanant coefficients c as CSV rows `i,j,pairing,c,trivial`.
    /// Without `--lambda` the exact Λ_0 is used.
    Immanant {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a kinematic matrix as CSV.
    GenLambda {
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "strong")]
        kind: GenKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce the two worked examples.
    Fixtures {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Vandermonde,
    Strong,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(v: &Value, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    Ok(())
}

fn emit_report(r: &SuiteReport, out: Option<&Path>) -> Result<bool> {
    emit(&serde_json::to_value(r)?, out)?;
    Ok(r.pass)
}

fn read_csv(p: &Path) -> Result<Matrix<f64>> {
    let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
    read_matrix_csv(f).with_context(|| format!("reading {}", p.display()))
}

fn run_invert(seq: &ArcSequence, lambda: &Path, y: &Path, show: bool, tol: &Tolerances) -> Result<(Value, bool)> {
    let k = seq.k();
    let lam = read_csv(lambda)?;
    let y = read_csv(y)?;
    if lam.shape() != (2 * k, k + 2) {
        bail!("Λ is {}x{}, expected {}x{} for k = {k}", lam.nrows(), lam.ncols(), 2 * k, k + 2);
    }
    if y.shape() != (k, k + 2) {
        bail!("Y is {}x{}, expected {k}x{}", y.nrows(), y.ncols(), k + 2);
    }
    let sol = solution_matrix(&seq.pairs())?;
    let to_dd = |m: &Matrix<f64>| m.map(|x| Dd::from(*x));
    let inv = invert(&sol, &to_dd(&lam), &to_dd(&y), tol.zero);
    let found = inv.point.is_some();
    let mut v = json!({
        "sequence": seq.to_string(),
        "k": k,
        "point": inv.point,
        "reason": inv.reason,
        "diagnostics": inv.diagnostics,
    });
    if show {
        v["solution"] = json!(sol.rows.iter().map(|r| r.iter().map(|e| e.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>());
    }
    Ok((v, found))
}

fn write_c_rows(rows: &[CEntry], out: Option<&Path>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(sink(out)?);
    wr.write_record(["i", "j", "pairing", "c", "trivial"])?;
    for e in rows {
        wr.write_record([e.i.to_string(), e.j.to_string(), e.pairing.clone(), format!("{:e}", e.c), e.trivial.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

fn run(cli: Cli, tol: &Tolerances) -> Result<bool> {
    match cli.cmd {
        Cmd::Enumerate { k, out } => {
            let cells = catalog_json(k)?;
            let n = cells.as_array().map_or(0, Vec::len);
            emit(&json!({ "k": k, "count": n, "cells": cells }), out.as_deref())?;
            Ok(true)
        }
        Cmd::Invert { seq, lambda, y, show_solution, out } => {
            let (v, found) = run_invert(&seq, &lambda, &y, show_solution, tol)?;
            emit(&v, out.as_deref())?;
            Ok(found)
        }
        Cmd::Tiling { run, lambda } => {
            let r = tiling_suite(run.k, &lambda.spec(LambdaKind::Vandermonde)?, run.trials, run.seed, tol)?;
            emit_report(&r, run.out.as_deref())
        }
        Cmd::Mandelstam { run, lambda } => {
            let r = mandelstam_suite(run.k, &lambda.spec(LambdaKind::Strong)?, run.trials, run.seed, tol)?;
            emit_report(&r, run.out.as_deref())
        }
        Cmd::Injectivity { run, lambda, span } => {
            let r = injectivity_suite(run.k, &lambda.spec(LambdaKind::Vandermonde)?, run.trials, run.seed, span, tol)?;
            emit_report(&r, run.out.as_deref())
        }
        Cmd::Immanant { k, lambda, out } => {
            let rows = match lambda.lambda {
                None if lambda.lambda_file.is_none() => lambda0_table(k)?,
                _ => c_table(&lambda.spec(LambdaKind::Vandermonde)?.build(k)?.entries)?,
            };
            write_c_rows(&rows, out.as_deref())?;
            let min = min_relative_c(&rows);
            if let Some(m) = min {
                eprintln!("min relative c: {m:e}");
            }
            Ok(min.is_none_or(|m| m >= -tol.zero))
        }
        Cmd::GenLambda { k, kind, out } => {
            let l: LambdaMatrix = match kind {
                GenKind::Vandermonde => vandermonde_lambda(k, None)?,
                GenKind::Strong => default_strong_lambda(k)?,
            };
            let mut w = sink(out.as_deref())?;
            l.to_csv(&mut w)?;
            let m = l.min_relative_minor();
            eprintln!("min relative maximal minor: {m:e}");
            Ok(m > 0.0)
        }
        Cmd::Fixtures { out } => {
            let reports = vec![k3_example_fixture_suite(20, 0)?, k4_example_fixture_suite()?];
            let pass = reports.iter().all(|r| r.pass);
            emit(&json!({ "pass": pass, "reports": reports }), out.as_deref())?;
            Ok(pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = Tolerances::from_env().context("reading ORTHOTILE_TOL").and_then(|tol| run(cli, &tol));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.chain().any(|c| c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
