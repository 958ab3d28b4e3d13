//! Command-line front end for the `fairalloc` binary.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::edges::{validate_params, Params};
use crate::error::Error;
use crate::instance::{
    allocation_min_value, generate_random, parse_allocation, parse_instance, verify_allocation,
    write_allocation, write_instance, Instance,
};
use crate::localsearch::{ExtendError, ExtendOptions};
use crate::oracle::brute_force_opt;
use crate::solver::{solve, solve_for_tau, SolveOptions, TraceEvent};
use crate::Rational;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEFECT: i32 = 3;

/// Environment variable that overrides `gen --seed`.
pub const SEED_ENV: &str = "FAIRALLOC_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "fairalloc",
    version,
    about = "Restricted max-min fair allocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Compute an allocation by binary search over the target value.
    Solve(SolveArgs),
    /// Check an allocation against a threshold.
    Verify(VerifyArgs),
    /// Optimal value by exhaustive search (small instances only).
    Opt(OptArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    players: usize,
    #[arg(long)]
    resources: usize,
    #[arg(long)]
    value_max: u64,
    #[arg(long)]
    interest_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    file: PathBuf,
    /// Approximation factor; the other constants keep their defaults.
    #[arg(long, conflicts_with = "epsilon", value_parser = parse_rational)]
    beta: Option<Rational>,
    /// Derive all constants from epsilon in (0, 1].
    #[arg(long, value_parser = parse_rational)]
    epsilon: Option<Rational>,
    /// Run a single probe at this target instead of the binary search.
    #[arg(long)]
    tau: Option<u64>,
    /// Write one trace event per line to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Check all invariants at every iterative-step boundary; failures exit with 3.
    #[arg(long)]
    check_invariants: bool,
    /// Concurrent probes per binary-search round.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    file: PathBuf,
    allocation: PathBuf,
    /// Minimum bundle value, as an integer or NUM/DEN.
    #[arg(long, value_parser = parse_rational)]
    threshold: Rational,
}

#[derive(Debug, Args)]
struct OptArgs {
    file: PathBuf,
}

/// Parses `7`, `3/8` or `0.25`.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let bad = || format!("not a rational number: {s:?}");
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| bad())?;
        let d: i128 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err("zero denominator".into());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let int: i128 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10i128.pow(frac.len() as u32);
        let f: i128 = frac.parse().map_err(|_| bad())?;
        let mag = int.abs() * den + f;
        return Ok(Rational::new(if neg { -mag } else { mag }, den));
    }
    s.parse::<i128>()
        .map(Rational::from_integer)
        .map_err(|_| bad())
}

struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn new(code: i32, msg: impl Into<String>) -> Self {
        Failure {
            code,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Defect(_) | Error::StaleState(_) => EXIT_DEFECT,
            _ => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    parse_instance(&read(path)?)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn write_trace(path: Option<&Path>, events: &[TraceEvent]) -> Result<(), Failure> {
    let Some(path) = path else { return Ok(()) };
    let text: String = events.iter().map(|e| format!("{e}\n")).collect();
    write(path, &text)
}

fn run_gen(args: GenArgs) -> Result<i32, Failure> {
    let seed = match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::new(EXIT_USAGE, format!("{SEED_ENV} must be an integer")))?,
        Err(_) => args.seed,
    };
    let inst = generate_random(
        args.players,
        args.resources,
        args.value_max,
        args.interest_prob,
        seed,
    )?;
    write(&args.output, &write_instance(&inst))?;
    Ok(EXIT_OK)
}

fn params_for(args: &SolveArgs) -> Result<Params, Failure> {
    let params = match (args.beta, args.epsilon) {
        (_, Some(eps)) => Params::from_epsilon(eps)?,
        (Some(beta), None) => Params {
            beta,
            ..Params::default()
        },
        (None, None) => Params::default(),
    };
    let report = validate_params(&params);
    if !report.is_valid() {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("invalid parameters: {}", report.violations.join("; ")),
        ));
    }
    Ok(params)
}

fn run_solve(args: SolveArgs) -> Result<i32, Failure> {
    let inst = load_instance(&args.file)?;
    let params = params_for(&args)?;
    let mut events = Vec::new();
    let traced = args.trace.is_some();

    if let Some(tau) = args.tau {
        let opts = ExtendOptions {
            check_invariants: args.check_invariants,
        };
        let sink: Option<&mut dyn crate::solver::TraceSink> =
            if traced { Some(&mut events) } else { None };
        let res = solve_for_tau(&inst, tau, &params, opts, sink);
        write_trace(args.trace.as_deref(), &events)?;
        return match res {
            Ok(s) => {
                write(&args.output, &write_allocation(&s.allocation))?;
                let min = allocation_min_value(&inst, &s.allocation)?;
                println!(
                    "tau={tau} status=success min_value={min} guaranteed={} iterations={} collapses={}",
                    Rational::from_integer(tau as i128) / params.beta,
                    s.iterations,
                    s.collapses
                );
                report_invariants(&s.invariant_failures, s.boundaries_checked)
            }
            Err(e @ ExtendError::Abort { .. }) => {
                println!("tau={tau} status=abort");
                eprintln!("{e}");
                Ok(EXIT_FAILED)
            }
            Err(ExtendError::Invalid(e)) => Err(e.into()),
            Err(ExtendError::Defect(msg)) => Err(Failure::new(EXIT_DEFECT, msg)),
        };
    }

    let opts = SolveOptions {
        params: params.clone(),
        tau_hint: None,
        jobs: args.jobs as usize,
        check_invariants: args.check_invariants,
    };
    let sink: Option<&mut dyn crate::solver::TraceSink> =
        if traced { Some(&mut events) } else { None };
    let res = solve(&inst, &opts, sink);
    write_trace(args.trace.as_deref(), &events)?;
    let report = res?;
    write(&args.output, &write_allocation(&report.allocation))?;
    let min = allocation_min_value(&inst, &report.allocation)?;
    println!(
        "tau_star={} guaranteed={} min_value={min} probes={}",
        report.tau_star,
        report.guaranteed,
        report.probes.len()
    );
    report_invariants(&report.invariant_failures, report.boundaries_checked)
}

fn report_invariants(failures: &[String], checked: usize) -> Result<i32, Failure> {
    if failures.is_empty() {
        if checked > 0 {
            eprintln!("invariants: {checked} boundaries checked, no failures");
        }
        return Ok(EXIT_OK);
    }
    for f in failures {
        eprintln!("invariant failure: {f}");
    }
    Ok(EXIT_DEFECT)
}

fn run_verify(args: VerifyArgs) -> Result<i32, Failure> {
    let inst = load_instance(&args.file)?;
    let alloc = parse_allocation(&read(&args.allocation)?, inst.num_players())
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", args.allocation.display())))?;
    match verify_allocation(&inst, &alloc, args.threshold) {
        Ok(true) => {
            println!("ok");
            Ok(EXIT_OK)
        }
        Ok(false) => {
            let min = allocation_min_value(&inst, &alloc)?;
            println!(
                "fail: minimum bundle value {min} is below {}",
                args.threshold
            );
            Ok(EXIT_FAILED)
        }
        Err(e) => {
            println!("fail: {e}");
            Ok(EXIT_FAILED)
        }
    }
}

fn run_opt(args: OptArgs) -> Result<i32, Failure> {
    let inst = load_instance(&args.file)?;
    println!("{}", brute_force_opt(&inst)?);
    Ok(EXIT_OK)
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let res = match cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Solve(a) => run_solve(a),
        Command::Verify(a) => run_verify(a),
        Command::Opt(a) => run_opt(a),
    };
    match res {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}
