use super::{
    armijo_step, newton_refine, rng, uniform_vec, Method, Objective, Projection, SolveOptions,
    SolveReport, StepOutcome, SublevelOptions, TracePoint,
};
use crate::error::Result;
use crate::grid::{norm_inf, GridFunction};
use crate::problem::ProblemInstance;

/// Range of the random restart points of [`minimize_global`].
const RESTART_BOX: f64 = 2.0;

/// Steps without a new energy record (beyond rounding noise) after which a
/// descent stops and leaves the rest to the Newton polish.
pub const STALL_STEPS: usize = 50;

struct Descent {
    u: Vec<f64>,
    energy: f64,
    iterations: usize,
    converged: bool,
    trace: Option<Vec<TracePoint>>,
}

fn descend(
    obj: &Objective<'_>,
    mut u: Vec<f64>,
    opts: &SolveOptions,
    project: Projection<'_>,
) -> Result<Descent> {
    if let Some(p) = project {
        p(&mut u);
    }
    let mut energy = obj.energy(&u)?;
    let mut trace = opts.record_trace.then(Vec::new);
    let mut iterations = 0;
    // lowest energy that beat the previous record by more than rounding noise
    let mut record = energy;
    let mut flat_steps = 0;
    loop {
        let g = obj.gradient(&u)?;
        let grad_inf = norm_inf(&g);
        if let Some(t) = trace.as_mut() {
            t.push(TracePoint {
                energy,
                grad_norm: grad_inf,
            });
        }
        let converged = grad_inf <= opts.grad_tol;
        if converged || iterations >= opts.max_iters || flat_steps >= STALL_STEPS {
            return Ok(Descent {
                u,
                energy,
                iterations,
                converged,
                trace,
            });
        }
        match armijo_step(obj, &u, energy, &g, opts, project) {
            StepOutcome::Accepted { u: next, energy: e } => {
                if e < record - 64.0 * f64::EPSILON * record.abs() {
                    record = e;
                    flat_steps = 0;
                } else {
                    flat_steps += 1;
                }
                u = next;
                energy = e;
                iterations += 1;
            }
            StepOutcome::Stalled => {
                return Ok(Descent {
                    u,
                    energy,
                    iterations,
                    converged: false,
                    trace,
                });
            }
        }
    }
}

/// Best (lowest-energy) descent among the given starts; ties keep the earliest.
fn best_of(runs: Vec<Descent>, admissible: impl Fn(&Descent) -> bool) -> Option<Descent> {
    let mut best: Option<Descent> = None;
    for run in runs.into_iter().filter(|r| admissible(r)) {
        if best.as_ref().is_none_or(|b| run.energy < b.energy) {
            best = Some(run);
        }
    }
    best
}

/// Global minimization by Armijo gradient descent from `0` and
/// `opts.restarts` random points in `[-2, 2]^mn`, then Newton refinement.
pub fn minimize_global(
    instance: &ProblemInstance,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    minimize_global_from(instance, lambda, opts, &[])
}

/// [`minimize_global`] with additional caller-supplied starting points.
pub fn minimize_global_from(
    instance: &ProblemInstance,
    lambda: f64,
    opts: &SolveOptions,
    extra_starts: &[GridFunction],
) -> Result<SolveReport> {
    opts.validate()?;
    let obj = Objective::new(instance, lambda)?;
    let n = obj.len();
    let mut rng = rng(opts.seed);
    let mut starts = vec![vec![0.0; n]];
    for _ in 0..opts.restarts {
        starts.push(uniform_vec(&mut rng, n, -RESTART_BOX, RESTART_BOX));
    }
    for s in extra_starts {
        s.expect_shape(instance.m(), instance.n())?;
        starts.push(s.as_slice().to_vec());
    }

    let mut runs = Vec::with_capacity(starts.len());
    for s in starts {
        // an unevaluable start (e.g. outside a tabulated range) is skipped
        if obj.energy(&s).is_err() {
            continue;
        }
        runs.push(descend(&obj, s, opts, None)?);
    }
    let total_iters: usize = runs.iter().map(|r| r.iterations).sum();
    let best = best_of(runs, |_| true).expect("the zero start is always evaluable");
    polish(&obj, Method::GlobalMin, best, total_iters, opts, None)
}

/// Newton polish of a descent result; kept only when it converges without
/// raising the energy (and, with a sublevel bound, stays inside it).
fn polish(
    obj: &Objective<'_>,
    method: Method,
    best: Descent,
    iterations: usize,
    opts: &SolveOptions,
    sublevel: Option<&SublevelOptions>,
) -> Result<SolveReport> {
    let start = obj.grid_function(best.u.clone());
    let refined = newton_refine(obj.instance, obj.lambda, &start, opts)?;
    let energy_tol = 1e-8 * (1.0 + best.energy.abs());
    let inside_r = |u: &[f64]| sublevel.is_none_or(|s| obj.phi(u) < s.r());
    let accept = refined.converged
        && refined.energy.total <= best.energy + energy_tol
        && inside_r(refined.u.as_slice());

    let inside_flag = |u: &[f64]| sublevel.map(|s| obj.phi(u) < s.r() * (1.0 - s.shrink_eps()));
    if accept {
        let u = refined.u.into_vec();
        let inside = inside_flag(&u);
        obj.report(
            method,
            u,
            iterations + refined.iterations,
            true,
            opts,
            inside,
            refined.singular_fallbacks,
            best.trace,
        )
    } else {
        let inside = inside_flag(&best.u);
        obj.report(
            method,
            best.u,
            iterations,
            best.converged,
            opts,
            inside,
            0,
            best.trace,
        )
    }
}

/// Minimization restricted to `{phi < r}` with `r = lambda_1 alpha^2 / 2`.
///
/// Projected Armijo descent: whenever a step leaves `{phi < r (1 - eps)}`
/// the iterate is scaled back radially onto it. Starts are `0` and
/// `opts.restarts` random points inside the ellipsoid.
pub fn minimize_sublevel(
    instance: &ProblemInstance,
    lambda: f64,
    sub: &SublevelOptions,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    minimize_sublevel_from(instance, lambda, sub, opts, &[])
}

pub fn minimize_sublevel_from(
    instance: &ProblemInstance,
    lambda: f64,
    sub: &SublevelOptions,
    opts: &SolveOptions,
    extra_starts: &[GridFunction],
) -> Result<SolveReport> {
    opts.validate()?;
    let obj = Objective::new(instance, lambda)?;
    let n = obj.len();
    let cap = sub.r() * (1.0 - sub.shrink_eps());
    let project = |u: &mut [f64]| {
        let phi = obj.phi(u);
        if phi >= cap {
            let s = (cap / phi).sqrt();
            u.iter_mut().for_each(|x| *x *= s);
        }
    };

    let mut rng = rng(opts.seed);
    let mut starts = vec![vec![0.0; n]];
    for _ in 0..opts.restarts {
        let mut d = uniform_vec(&mut rng, n, -1.0, 1.0);
        let level: f64 = rand::Rng::random_range(&mut rng, 0.0..1.0);
        let phi = obj.phi(&d);
        if phi > 0.0 {
            let s = (cap * level / phi).sqrt();
            d.iter_mut().for_each(|x| *x *= s);
        }
        starts.push(d);
    }
    for s in extra_starts {
        s.expect_shape(instance.m(), instance.n())?;
        starts.push(s.as_slice().to_vec());
    }

    let mut runs = Vec::with_capacity(starts.len());
    for s in starts {
        if obj.energy(&s).is_err() {
            continue;
        }
        runs.push(descend(&obj, s, opts, Some(&project))?);
    }
    let total_iters: usize = runs.iter().map(|r| r.iterations).sum();
    let any_interior = runs.iter().any(|r| r.converged);
    let best = best_of(runs, |r| r.converged || !any_interior).expect("nonempty run list");
    polish(
        &obj,
        Method::SublevelMin,
        best,
        total_iters,
        opts,
        Some(sub),
    )
}
