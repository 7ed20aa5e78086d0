//! Command-line front end: reproducible solves, exponent sweeps, the
//! antisymmetry-breaking search, oracle dumps, instanton quadrature, and
//! deterministic re-checks of saved fields.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 numerical non-convergence.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use extremal_shape::diagnostics::full_report;
use extremal_shape::fields::{read_field_csv, write_field_csv};
use extremal_shape::oracles::{
    f_monotonicity, instanton_quotient, neumann_mode_annulus, neumann_mode_ball,
    sobolev_constant, InstantonSpec, RadialMode,
};
use extremal_shape::solver::{
    find_antisymmetry_break, minimize, sweep_p, Domain, GridSpec, InitMode, ProblemSpec,
    Subspace,
};
use extremal_shape::{Error, Result};

#[derive(Parser)]
#[command(
    name = "extremal-shape",
    about = "Zero-average Poincaré-Sobolev extremals: solver, diagnostics, and oracles",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the quotient at a single exponent and dump result, field, report.
    Solve(SolveArgs),
    /// Solve a range of exponents with warm starts; JSON-lines output.
    Sweep(SweepArgs),
    /// Bisect for the antisymmetry-breaking exponent p*.
    FindBreak(FindBreakArgs),
    /// Shooting-method p=2 eigenmode: print Λ₂ and dump the radial profile.
    Oracle(OracleArgs),
    /// Instanton quotient quadrature for the critical exponent.
    Instanton(InstantonArgs),
    /// Reload a saved field CSV and regenerate its diagnostics report.
    Check(CheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DomainArg {
    Disc,
    Ball,
    Annulus,
    Interval,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SubspaceArg {
    Full,
    Antisym,
    DirichletHalf,
    Radial,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Domain chart.
    #[arg(long, value_enum, default_value = "disc")]
    domain: DomainArg,
    /// Ambient dimension N (disc fixes N=2, interval N=1).
    #[arg(long = "N", default_value_t = 3)]
    dim: usize,
    /// Inner radius of the annulus.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Radial resolution.
    #[arg(long, default_value_t = 96)]
    mr: usize,
    /// Angular resolution.
    #[arg(long, default_value_t = 128)]
    mtheta: usize,
    /// Minimization subspace.
    #[arg(long, value_enum, default_value = "full")]
    subspace: SubspaceArg,
    /// Relative quotient stagnation tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol_quotient: f64,
    /// Scaled Euler-Lagrange residual tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol_residual: f64,
    /// Descent iteration budget.
    #[arg(long, default_value_t = 20000)]
    max_iters: usize,
    /// RNG seed for initial noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (overridden by EXTREMAL_SHAPE_OUT).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl CommonArgs {
    fn out_dir(&self) -> PathBuf {
        match std::env::var_os("EXTREMAL_SHAPE_OUT") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.out.clone(),
        }
    }

    fn grid_spec(&self) -> GridSpec {
        let (domain, dim) = match self.domain {
            DomainArg::Disc => (Domain::Ball, 2),
            DomainArg::Ball => (Domain::Ball, self.dim),
            DomainArg::Annulus => (Domain::Annulus { rho: self.rho }, self.dim),
            DomainArg::Interval => (Domain::Interval, 1),
        };
        GridSpec {
            domain,
            dim,
            m_r: self.mr,
            m_theta: self.mtheta,
        }
    }

    fn problem_spec(&self, p: f64) -> ProblemSpec {
        ProblemSpec {
            grid: self.grid_spec(),
            p,
            subspace: match self.subspace {
                SubspaceArg::Full => Subspace::Full,
                SubspaceArg::Antisym => Subspace::Antisymmetric,
                SubspaceArg::DirichletHalf => Subspace::DirichletHalf,
                SubspaceArg::Radial => Subspace::Radial,
            },
            init: InitMode::Oracle,
            tol_quotient: self.tol_quotient,
            tol_residual: self.tol_residual,
            max_iters: self.max_iters,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Exponent p (p ≥ 2, below 2* = 2N/(N−2) for N ≥ 3).
    #[arg(long, default_value_t = 3.0)]
    p: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Exponent list as start:step:end (inclusive) or a single value.
    #[arg(long)]
    p: String,
    /// Concurrent workers; 1 keeps warm-started sequential sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct FindBreakArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Lower bracket exponent (gap must be below gap-tol there).
    #[arg(long, default_value_t = 2.5)]
    p_lo: f64,
    /// Upper bracket exponent (gap must exceed gap-tol there).
    #[arg(long, default_value_t = 64.0)]
    p_hi: f64,
    /// Gap threshold Λ′_p − Λ_p defining "broken".
    #[arg(long, default_value_t = 0.02)]
    gap_tol: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Shooting tolerance for the eigenvalue bisection.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct InstantonArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Concentration scale ε.
    #[arg(long, default_value_t = 0.02)]
    eps: f64,
}

#[derive(Args)]
struct CheckArgs {
    /// Field CSV previously written by solve (r,theta,value rows).
    field: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    /// Exponent the field was solved at.
    #[arg(long, default_value_t = 3.0)]
    p: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successful exits; everything else is usage
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::FindBreak(a) => cmd_find_break(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Instanton(a) => cmd_instanton(&a),
        Command::Check(a) => cmd_check(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) | Error::Bracket { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    // pretty-printed with a trailing newline; key order is deterministic
    // (serde_json maps are sorted), so identical runs are byte-identical
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn prepare_out(common: &CommonArgs) -> Result<PathBuf> {
    let dir = common.out_dir();
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn report_json(
    spec: &ProblemSpec,
    u: &extremal_shape::fields::Field,
) -> Result<serde_json::Value> {
    // the 2D symmetry diagnostics don't apply on the interval; report the
    // antisymmetry defect and multipliers only
    if spec.grid.domain == Domain::Interval {
        let defect = extremal_shape::diagnostics::antisymmetry_defect(u)?;
        let el = extremal_shape::variational::el_residual(u, spec.p)?;
        return Ok(serde_json::json!({
            "config": spec.config_json(),
            "report": {
                "antisymmetry_defect": defect,
                "mu_p_abs": el.mu_p.abs(),
                "residual_l2": el.residual_l2,
            },
        }));
    }
    let rep = full_report(u, spec.p)?;
    Ok(serde_json::json!({
        "config": spec.config_json(),
        "report": rep,
    }))
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode> {
    let dir = prepare_out(&args.common)?;
    let spec = args.common.problem_spec(args.p);
    let result = minimize(&spec)?;
    write_json(&dir.join("result.json"), &result.summary_json(&spec))?;
    write_field_csv(&result.u, BufWriter::new(File::create(dir.join("field.csv"))?))?;
    write_json(&dir.join("report.json"), &report_json(&spec, &result.u)?)?;
    println!(
        "p = {} lambda = {:.12} residual = {:.3e} converged = {}",
        args.p, result.lambda, result.residual_l2, result.converged
    );
    Ok(if result.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

/// Parse "--p" as either a single value or an inclusive start:step:end range.
fn parse_p_list(text: &str) -> Result<Vec<f64>> {
    let bad = |m: &str| Error::Parameter(format!("invalid --p '{text}': {m}"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [one] => Ok(vec![one
            .parse::<f64>()
            .map_err(|_| bad("not a number"))?]),
        [start, step, end] => {
            let s: f64 = start.parse().map_err(|_| bad("bad start"))?;
            let d: f64 = step.parse().map_err(|_| bad("bad step"))?;
            let e: f64 = end.parse().map_err(|_| bad("bad end"))?;
            if d <= 0.0 || e < s {
                return Err(bad("need step > 0 and end >= start"));
            }
            let count = ((e - s) / d + 0.5).floor() as usize + 1;
            let mut out: Vec<f64> = (0..count).map(|k| s + k as f64 * d).collect();
            if let Some(last) = out.last_mut() {
                if (*last - e).abs() < 1e-9 {
                    *last = e;
                }
            }
            out.retain(|&p| p <= e + 1e-12);
            Ok(out)
        }
        _ => Err(bad("expected VALUE or START:STEP:END")),
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode> {
    let dir = prepare_out(&args.common)?;
    let p_values = parse_p_list(&args.p)?;
    let spec = args.common.problem_spec(p_values[0]);
    let results = if args.jobs <= 1 {
        sweep_p(&spec, &p_values)?
    } else {
        // independent cold-started entries, chunked over worker threads
        let mut slots: Vec<Option<Result<_>>> = (0..p_values.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (chunk_idx, chunk) in p_values.chunks(p_values.len().div_ceil(args.jobs)).enumerate()
            {
                let spec = spec.clone();
                let chunk = chunk.to_vec();
                handles.push((
                    chunk_idx,
                    chunk.len(),
                    scope.spawn(move || {
                        chunk
                            .iter()
                            .map(|&p| {
                                let mut s = spec.clone();
                                s.p = p;
                                minimize(&s)
                            })
                            .collect::<Vec<_>>()
                    }),
                ));
            }
            let chunk_size = p_values.len().div_ceil(args.jobs);
            for (chunk_idx, _, h) in handles {
                for (k, r) in h.join().expect("sweep worker panicked").into_iter().enumerate() {
                    slots[chunk_idx * chunk_size + k] = Some(r);
                }
            }
        });
        let mut out = Vec::with_capacity(p_values.len());
        for slot in slots {
            out.push(slot.expect("missing sweep entry")?);
        }
        out
    };
    let mut w = BufWriter::new(File::create(dir.join("sweep.jsonl"))?);
    let mut all_converged = true;
    for (p, r) in p_values.iter().zip(&results) {
        let mut s = spec.clone();
        s.p = *p;
        serde_json::to_writer(&mut w, &r.summary_json(&s))?;
        writeln!(w)?;
        all_converged &= r.converged;
        println!(
            "p = {:<6} lambda = {:.12} converged = {}",
            p, r.lambda, r.converged
        );
    }
    Ok(if all_converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_find_break(args: &FindBreakArgs) -> Result<ExitCode> {
    let dir = prepare_out(&args.common)?;
    let spec = args.common.problem_spec(args.p_lo);
    let result = find_antisymmetry_break(&spec, args.p_lo, args.p_hi, args.gap_tol)?;
    let record = serde_json::json!({
        "config": spec.config_json(),
        "p_lo": args.p_lo,
        "p_hi": args.p_hi,
        "gap_tol": args.gap_tol,
        "p_star": result.p_star,
        "gap_table": result.gap_table,
    });
    write_json(&dir.join("break.json"), &record)?;
    println!("p* = {:.6}", result.p_star);
    for (p, gap) in &result.gap_table {
        println!("  p = {:<10.5} gap = {:.6e}", p, gap);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(args: &OracleArgs) -> Result<ExitCode> {
    let dir = prepare_out(&args.common)?;
    let mode: RadialMode = match args.common.domain {
        DomainArg::Disc => neumann_mode_ball(2, args.tol)?,
        DomainArg::Ball => neumann_mode_ball(args.common.dim, args.tol)?,
        DomainArg::Annulus => {
            neumann_mode_annulus(args.common.dim, args.common.rho, args.tol)?
        }
        DomainArg::Interval => {
            return Err(Error::Parameter(
                "the shooting oracle runs on disc/ball/annulus charts".into(),
            ))
        }
    };
    let fmono = f_monotonicity(&mode).ok();
    mode.write_profile_csv(BufWriter::new(File::create(dir.join("profile.csv"))?))?;
    let record = serde_json::json!({
        "config": {
            "domain": match args.common.domain {
                DomainArg::Disc => "disc",
                DomainArg::Ball => "ball",
                DomainArg::Annulus => "annulus",
                DomainArg::Interval => unreachable!(),
            },
            "dim": if args.common.domain == DomainArg::Disc { 2 } else { args.common.dim },
            "rho": if args.common.domain == DomainArg::Annulus {
                Some(args.common.rho)
            } else {
                None
            },
            "tol": args.tol,
        },
        "lambda2": mode.lambda2,
        "f_monotonicity_max": fmono,
    });
    write_json(&dir.join("oracle.json"), &record)?;
    println!("lambda2 = {:.10}", mode.lambda2);
    Ok(ExitCode::SUCCESS)
}

fn cmd_instanton(args: &InstantonArgs) -> Result<ExitCode> {
    let dir = prepare_out(&args.common)?;
    let n = args.common.dim;
    let spec = InstantonSpec::new(n, args.eps)?;
    let quotient = instanton_quotient(&spec)?;
    let s = sobolev_constant(n)?;
    let bound = s / 2.0_f64.powf(2.0 / n as f64);
    let record = serde_json::json!({
        "config": { "dim": n, "eps": args.eps, "resolution": spec.resolution },
        "quotient": quotient,
        "sobolev_constant": s,
        "half_domain_bound": bound,
        "deficit": bound - quotient,
    });
    write_json(&dir.join("instanton.json"), &record)?;
    println!(
        "N = {n} eps = {} quotient = {:.8} bound S/2^(2/N) = {:.8}",
        args.eps, quotient, bound
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: &CheckArgs) -> Result<ExitCode> {
    let dir = prepare_out(&args.common)?;
    let spec = args.common.problem_spec(args.p);
    let grid = spec.grid.build()?;
    let file = BufReader::new(File::open(&args.field)?);
    let u = read_field_csv(Arc::clone(&grid), file)?;
    let record = report_json(&spec, &u)?;
    write_json(&dir.join("report.json"), &record)?;
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(ExitCode::SUCCESS)
}
