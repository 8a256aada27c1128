//! Command-line front end: loads a problem file, runs one subcommand and
//! emits a versioned JSON report.
//!
//! Exit codes: 0 success, 1 invalid input, 2 solver nonconvergence,
//! 3 internal error (including a failed `verify`).

mod args;

use std::io::Write;
use std::path::Path;

use clap::Parser;
use serde::Serialize;
use wbvp_core::assembly::assemble_m;
use wbvp_core::io::{
    emit_report, load_problem_file, matrix_to_csv, sweep_to_csv, IoError, ProblemFile,
};
use wbvp_core::regimes::{
    check_hypothesis, regime_report, thresholds, Hypothesis, HypothesisOutcome, RegimeReport,
};
use wbvp_core::solvers::{
    solve, sweep_lambda, sweep_lambda_parallel, MethodConfig, MountainPassOptions, SolveOptions,
    SublevelOptions, SweepEntry,
};
use wbvp_core::spectral::eigen_extremes;
use wbvp_core::verify::verify_instance;
use wbvp_core::{Error, HypothesisParams};

pub use args::{Cli, Command, Common, HypothesisArgs, MethodArg, SolverArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NONCONVERGED: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// A failed run: exit code plus the message for standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::QuadratureNonconvergent { .. }
            | Error::JacobiNonconvergent { .. }
            | Error::SingularJacobian { .. }
            | Error::EndpointSearchFailed { .. } => EXIT_NONCONVERGED,
            _ => EXIT_INVALID,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Dense system matrix with its layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixReport {
    pub m: usize,
    pub n: usize,
    pub order: usize,
    pub half_bandwidth: usize,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub method: MethodConfig,
    pub entries: Vec<SweepEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesesReport {
    pub checks: Vec<HypothesisOutcome>,
    /// Present when a lambda is known.
    pub regimes: Option<RegimeReport>,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    match run(&cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Runs a parsed command. `Ok` carries 0 or the nonconvergence code, which
/// still produces a report.
pub fn run(command: &Command) -> Result<i32, Failure> {
    match command {
        Command::Assemble { common, csv } => {
            let file = load(common)?;
            let g = file.instance.grid();
            let mat = assemble_m(g);
            if let Some(path) = csv {
                write_file(path, &matrix_to_csv(&mat))?;
            }
            let report = MatrixReport {
                m: g.m(),
                n: g.n(),
                order: mat.order(),
                half_bandwidth: mat.half_bandwidth(),
                matrix: mat.to_dense(),
            };
            emit(common, &emit_report("matrix", &report))?;
            Ok(EXIT_OK)
        }
        Command::Spectrum { common } => {
            let file = load(common)?;
            let s = eigen_extremes(&assemble_m(file.instance.grid()))?;
            emit(common, &emit_report("spectrum", &s))?;
            Ok(EXIT_OK)
        }
        Command::Solve { common, solver } => {
            let file = load(common)?;
            let lambda = require_lambda(common, &file)?;
            let opts = solve_options(common, solver)?;
            let method = method_config(solver, &file)?;
            let report = solve(&file.instance, lambda, &method, &opts, None)?;
            emit(common, &emit_report("solve", &report))?;
            if report.converged {
                Ok(EXIT_OK)
            } else {
                eprintln!(
                    "error: solver did not converge (residual {:e} after {} iterations)",
                    report.residual_inf, report.iterations
                );
                Ok(EXIT_NONCONVERGED)
            }
        }
        Command::Sweep {
            common,
            solver,
            lambdas,
            range,
            threads,
            csv,
        } => {
            let file = load(common)?;
            let lambdas = match (lambdas, range) {
                (Some(l), _) => l.clone(),
                (None, Some(r)) => parse_range(r)?,
                (None, None) => return Err(Failure::invalid("sweep needs --lambdas or --range")),
            };
            if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(Failure::invalid("lambda must be positive"));
            }
            let opts = solve_options(common, solver)?;
            let method = method_config(solver, &file)?;
            let entries = match threads {
                Some(0) => return Err(Failure::invalid("--threads must be at least 1")),
                Some(t) => sweep_lambda_parallel(&file.instance, &lambdas, &method, &opts, *t)?,
                None => sweep_lambda(&file.instance, &lambdas, &method, &opts)?,
            };
            if let Some(path) = csv {
                write_file(path, &sweep_to_csv(&entries))?;
            }
            let failed = entries
                .iter()
                .filter(|e| e.report.as_ref().is_none_or(|r| !r.converged))
                .count();
            emit(
                common,
                &emit_report("sweep", &SweepReport { method, entries }),
            )?;
            if failed == 0 {
                Ok(EXIT_OK)
            } else {
                eprintln!("error: {failed} sweep point(s) failed or did not converge");
                Ok(EXIT_NONCONVERGED)
            }
        }
        Command::Thresholds { common, hyp } => {
            let file = load(common)?;
            let params = hypothesis_params(hyp, &file)?;
            let s = eigen_extremes(&assemble_m(file.instance.grid()))?;
            let t = thresholds(&file.instance, &s, &params)?;
            emit(common, &emit_report("thresholds", &t))?;
            Ok(EXIT_OK)
        }
        Command::CheckHypotheses {
            common,
            hyp,
            hypotheses,
            range,
            samples,
        } => {
            let file = load(common)?;
            let params = hypothesis_params(hyp, &file)?;
            let which = if hypotheses.is_empty() {
                Hypothesis::ALL.to_vec()
            } else {
                hypotheses
                    .iter()
                    .map(|h| {
                        Hypothesis::parse(h)
                            .ok_or_else(|| Failure::invalid(format!("unknown hypothesis `{h}`")))
                    })
                    .collect::<Result<_, _>>()?
            };
            let range = range.as_deref().map(parse_pair).transpose()?;
            let mut checks = Vec::new();
            for h in which {
                let r = range.unwrap_or_else(|| h.default_range(&params));
                let outcome = match check_hypothesis(&file.instance, h, &params, r, *samples) {
                    Ok(report) => HypothesisOutcome {
                        hypothesis: h,
                        report: Some(report),
                        skipped: None,
                    },
                    Err(Error::MissingParameter(p)) => HypothesisOutcome {
                        hypothesis: h,
                        report: None,
                        skipped: Some(format!("missing parameter `{p}`")),
                    },
                    Err(e) => return Err(e.into()),
                };
                checks.push(outcome);
            }
            let regimes = match lambda(common, &file)? {
                Some(l) => {
                    let s = eigen_extremes(&assemble_m(file.instance.grid()))?;
                    Some(regime_report(&file.instance, &s, l, &params)?)
                }
                None => None,
            };
            emit(
                common,
                &emit_report("hypothesis_checks", &HypothesesReport { checks, regimes }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Verify { common } => {
            let file = load(common)?;
            let lambda = lambda(common, &file)?.unwrap_or(1.0);
            let report = verify_instance(&file.instance, lambda, common.seed)?;
            print!("{}", report.table());
            if let Some(path) = &common.out {
                write_file(path, &emit_report("verify", &report))?;
            }
            if report.passed {
                Ok(EXIT_OK)
            } else {
                Err(Failure::internal("invariant checks failed"))
            }
        }
    }
}

fn load(common: &Common) -> Result<ProblemFile, Failure> {
    let file = load_problem_file(&common.problem)?;
    if let Some(h) = &file.hypotheses {
        h.validate(file.instance.m(), file.instance.n())?;
    }
    Ok(file)
}

/// `--lambda` if given, else the file's `lambda`; must be positive.
fn lambda(common: &Common, file: &ProblemFile) -> Result<Option<f64>, Failure> {
    match common.lambda.or(file.lambda) {
        Some(l) if !(l > 0.0 && l.is_finite()) => Err(Failure::invalid("lambda must be positive")),
        other => Ok(other),
    }
}

fn require_lambda(common: &Common, file: &ProblemFile) -> Result<f64, Failure> {
    lambda(common, file)?.ok_or_else(|| {
        Failure::invalid("no lambda: pass --lambda or set `lambda` in the problem file")
    })
}

fn solve_options(common: &Common, a: &SolverArgs) -> Result<SolveOptions, Failure> {
    let d = SolveOptions::default();
    let opts = SolveOptions {
        grad_tol: a.grad_tol.unwrap_or(d.grad_tol),
        max_iters: a.max_iters.unwrap_or(d.max_iters),
        armijo_c: a.armijo_c.unwrap_or(d.armijo_c),
        backtrack_ratio: a.backtrack_ratio.unwrap_or(d.backtrack_ratio),
        initial_step: a.initial_step.unwrap_or(d.initial_step),
        nontrivial_tol: a.nontrivial_tol.unwrap_or(d.nontrivial_tol),
        seed: common.seed,
        restarts: a.restarts.unwrap_or(d.restarts),
        record_trace: a.trace,
    };
    opts.validate()?;
    Ok(opts)
}

fn method_config(a: &SolverArgs, file: &ProblemFile) -> Result<MethodConfig, Failure> {
    Ok(match a.method {
        MethodArg::Global => MethodConfig::GlobalMin,
        MethodArg::Sublevel => {
            let alpha = a
                .alpha
                .or(file.hypotheses.as_ref().and_then(|h| h.alpha))
                .ok_or_else(|| Failure::invalid("the sublevel method needs --alpha"))?;
            MethodConfig::SublevelMin {
                alpha,
                shrink_eps: a.shrink_eps.unwrap_or(SublevelOptions::DEFAULT_SHRINK),
            }
        }
        MethodArg::MountainPass => MethodConfig::MountainPass {
            endpoint: None,
            path_points: a
                .path_points
                .unwrap_or(MountainPassOptions::DEFAULT_PATH_POINTS),
            deform_steps: a
                .deform_steps
                .unwrap_or(MountainPassOptions::DEFAULT_DEFORM_STEPS),
        },
        MethodArg::Newton => MethodConfig::Newton { initial: None },
    })
}

fn hypothesis_params(a: &HypothesisArgs, file: &ProblemFile) -> Result<HypothesisParams, Failure> {
    let mut p = file.hypotheses.clone().unwrap_or_default();
    p.alpha = a.alpha.or(p.alpha);
    p.c = a.c.or(p.c);
    p.cap_a = a.cap_a.or(p.cap_a);
    p.eta = a.eta.or(p.eta);
    p.validate(file.instance.m(), file.instance.n())?;
    Ok(p)
}

fn parse_number(s: &str) -> Result<f64, Failure> {
    s.trim()
        .parse()
        .map_err(|_| Failure::invalid(format!("`{s}` is not a number")))
}

fn parse_pair(s: &str) -> Result<(f64, f64), Failure> {
    match s.split(':').collect::<Vec<_>>()[..] {
        [lo, hi] => Ok((parse_number(lo)?, parse_number(hi)?)),
        _ => Err(Failure::invalid(format!("expected `lo:hi`, got `{s}`"))),
    }
}

fn parse_range(s: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, count] = parts[..] else {
        return Err(Failure::invalid(format!(
            "expected `start:stop:count`, got `{s}`"
        )));
    };
    let (start, stop) = (parse_number(start)?, parse_number(stop)?);
    let count: usize = count
        .trim()
        .parse()
        .map_err(|_| Failure::invalid(format!("`{count}` is not a count")))?;
    match count {
        0 => Err(Failure::invalid("range count must be at least 1")),
        1 => Ok(vec![start]),
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            Ok((0..count)
                .map(|k| {
                    if k + 1 == count {
                        stop
                    } else {
                        start + step * k as f64
                    }
                })
                .collect())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display())))
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => write_file(path, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::internal(format!("cannot write to standard output: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive() {
        assert_eq!(parse_range("1:2:3").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_range("4:9:1").unwrap(), vec![4.0]);
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("1:2:0").is_err());
        assert_eq!(parse_pair("0:0.5").unwrap(), (0.0, 0.5));
    }

    #[test]
    fn help_is_not_an_error() {
        assert_eq!(run_cli(["wbvp", "--help"]), EXIT_OK);
        assert_eq!(run_cli(["wbvp", "bogus"]), EXIT_INVALID);
    }

    #[test]
    fn error_classes() {
        assert_eq!(Failure::from(Error::InvalidLambda(-1.0)).code, EXIT_INVALID);
        assert_eq!(
            Failure::from(Error::JacobiNonconvergent { sweeps: 1 }).code,
            EXIT_NONCONVERGED
        );
    }
}
