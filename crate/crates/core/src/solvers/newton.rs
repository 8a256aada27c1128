use super::{armijo_step, Method, Objective, SolveOptions, SolveReport, StepOutcome, TracePoint};
use crate::error::{Error, Result};
use crate::grid::{norm_inf, GridFunction};
use crate::linalg::band_lu_solve;
use crate::problem::ProblemInstance;

pub const NEWTON_MAX_ITERS: usize = 100;
pub const NEWTON_MAX_FALLBACKS: usize = 10;
const MAX_HALVINGS: usize = 40;
/// Pivots below this fraction of the Jacobian's term magnitude count as zero.
const SINGULAR_REL_TOL: f64 = 1e-12;

fn residual_inf_or_inf(obj: &Objective<'_>, u: &[f64]) -> f64 {
    match obj.gradient(u) {
        Ok(r) => {
            let v = norm_inf(&r);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Newton direction `J^{-1} R` with `J = M - lambda diag(f'(u))`.
fn newton_direction(obj: &Objective<'_>, u: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let nl = obj.instance.nonlinearity();
    let n = u.len();
    let mut diag_shift = Vec::with_capacity(n);
    for (k, &t) in u.iter().enumerate() {
        diag_shift.push(obj.lambda * nl.derivative_at(k, t)?);
    }
    let m = &obj.matrix;
    let scale = (0..n)
        .map(|k| m.get(k, k).abs() + diag_shift[k].abs())
        .fold(0.0, f64::max)
        .max(m.norm_inf());
    band_lu_solve(
        n,
        m.half_bandwidth(),
        |a, b| {
            if a == b {
                m.get(a, a) - diag_shift[a]
            } else {
                m.get(a, b)
            }
        },
        r,
        SINGULAR_REL_TOL * scale,
    )
}

/// Damped Newton iteration on `R(U) = M U - lambda H(U)`.
///
/// Each step is halved until `|R|_inf` decreases. A singular Jacobian (or a
/// step that cannot be damped into a decrease) is replaced by one Armijo
/// gradient step on the energy, at most `NEWTON_MAX_FALLBACKS` times. Stops
/// at `|R|_inf <= opts.grad_tol` or after `NEWTON_MAX_ITERS` iterations.
pub fn newton_refine(
    instance: &ProblemInstance,
    lambda: f64,
    u0: &GridFunction,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    let obj = Objective::new(instance, lambda)?;
    u0.expect_shape(instance.m(), instance.n())?;
    let mut u = u0.as_slice().to_vec();
    let mut fallbacks = 0;
    let mut trace = opts.record_trace.then(Vec::new);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < NEWTON_MAX_ITERS {
        let r = obj.gradient(&u)?;
        let r_inf = norm_inf(&r);
        if let Some(t) = trace.as_mut() {
            t.push(TracePoint {
                energy: obj.energy_or_inf(&u),
                grad_norm: r_inf,
            });
        }
        if r_inf <= opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let step = match newton_direction(&obj, &u, &r) {
            Ok(delta) => damped_update(&obj, &u, &delta, r_inf),
            Err(Error::SingularJacobian { .. }) => None,
            Err(e) => return Err(e),
        };
        match step {
            Some(next) => u = next,
            None => {
                if fallbacks == NEWTON_MAX_FALLBACKS {
                    break;
                }
                fallbacks += 1;
                let e = obj.energy(&u)?;
                match armijo_step(&obj, &u, e, &r, opts, None) {
                    StepOutcome::Accepted { u: next, .. } => u = next,
                    StepOutcome::Stalled => break,
                }
            }
        }
    }

    obj.report(
        Method::Newton,
        u,
        iterations,
        converged,
        opts,
        None,
        fallbacks,
        trace,
    )
}

fn damped_update(obj: &Objective<'_>, u: &[f64], delta: &[f64], r_inf: f64) -> Option<Vec<f64>> {
    let mut alpha = 1.0;
    for _ in 0..=MAX_HALVINGS {
        let trial: Vec<f64> = u.iter().zip(delta).map(|(x, d)| x - alpha * d).collect();
        if residual_inf_or_inf(obj, &trial) < r_inf {
            return Some(trial);
        }
        alpha *= 0.5;
    }
    None
}
