//! Mountain-pass search in the style of Choi and McKenna: a discrete path
//! from `0` to an endpoint of negative energy is deformed by pushing its
//! highest point downhill until that point is (nearly) critical.

use super::{
    armijo_step, newton_refine, rng, uniform_vec, Method, MountainPassOptions, Objective,
    SolveOptions, SolveReport, StepOutcome, TracePoint,
};
use crate::error::{Error, Result};
use crate::grid::{norm2, norm_inf, GridFunction};
use crate::problem::ProblemInstance;

/// Cap on the doublings of [`find_endpoint`].
pub const MAX_ENDPOINT_DOUBLINGS: usize = 60;

/// Searches `t U*` with `t = 1, 2, 4, ...` until the energy is negative.
///
/// `U*` is `direction` normalized to unit Euclidean norm, or a seeded random
/// direction with entries uniform in `[-1, 1]`.
pub fn find_endpoint(
    instance: &ProblemInstance,
    lambda: f64,
    direction: Option<&GridFunction>,
    seed: u64,
) -> Result<GridFunction> {
    let obj = Objective::new(instance, lambda)?;
    let mut dir = match direction {
        Some(d) => {
            d.expect_shape(instance.m(), instance.n())?;
            d.as_slice().to_vec()
        }
        None => uniform_vec(&mut rng(seed), obj.len(), -1.0, 1.0),
    };
    let norm = norm2(&dir);
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter {
            name: "direction".into(),
            reason: "must be nonzero".into(),
        });
    }
    dir.iter_mut().for_each(|x| *x /= norm);

    let mut t = 1.0;
    for _ in 0..=MAX_ENDPOINT_DOUBLINGS {
        let cand: Vec<f64> = dir.iter().map(|x| t * x).collect();
        if let Ok(e) = obj.energy(&cand) {
            if e < 0.0 {
                return Ok(obj.grid_function(cand));
            }
        }
        t *= 2.0;
    }
    Err(Error::EndpointSearchFailed {
        doublings: MAX_ENDPOINT_DOUBLINGS,
    })
}

/// Redistributes the interior points at equal arc length along the polyline.
fn reparametrize(path: &mut [Vec<f64>]) {
    let p = path.len();
    let mut cum = vec![0.0; p];
    for k in 1..p {
        let d: f64 = path[k]
            .iter()
            .zip(&path[k - 1])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        cum[k] = cum[k - 1] + d;
    }
    let total = cum[p - 1];
    if !(total > 0.0) {
        return;
    }
    let old = path.to_vec();
    let mut seg = 0;
    for (k, point) in path.iter_mut().enumerate().take(p - 1).skip(1) {
        let s = total * k as f64 / (p - 1) as f64;
        while seg + 1 < p - 1 && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let w = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
        for (x, (a, b)) in point.iter_mut().zip(old[seg].iter().zip(&old[seg + 1])) {
            *x = a + w * (b - a);
        }
    }
}

fn path_max(energies: &[f64]) -> usize {
    let mut best = 1;
    for k in 2..energies.len() - 1 {
        if energies[k] > energies[best] {
            best = k;
        }
    }
    best
}

/// Saddle-type critical point between `0` and `mp.endpoint`.
///
/// The segment `0 -> endpoint` is discretized into `mp.path_points` states.
/// Each deformation step locates the path maximum, moves that state by one
/// Armijo descent step and redistributes the path by arc length. The loop
/// ends when the gradient at the maximum is below `opts.grad_tol` or after
/// `mp.deform_steps` steps; the maximum is then refined by Newton's method.
pub fn mountain_pass(
    instance: &ProblemInstance,
    lambda: f64,
    mp: &MountainPassOptions,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    if mp.path_points < 3 {
        return Err(Error::InvalidParameter {
            name: "path_points".into(),
            reason: "need at least 3 path points".into(),
        });
    }
    let obj = Objective::new(instance, lambda)?;
    mp.endpoint.expect_shape(instance.m(), instance.n())?;
    let end = mp.endpoint.as_slice();
    let end_energy = obj.energy(end)?;
    if !(end_energy < 0.0) {
        return Err(Error::EndpointNotBelowZero { energy: end_energy });
    }

    let p = mp.path_points;
    let mut path: Vec<Vec<f64>> = (0..p)
        .map(|k| {
            let s = k as f64 / (p - 1) as f64;
            end.iter().map(|x| s * x).collect()
        })
        .collect();
    let mut energies: Vec<f64> = path.iter().map(|u| obj.energy_or_inf(u)).collect();
    let mut trace = opts.record_trace.then(Vec::new);

    let mut steps = 0;
    let mut top = path_max(&energies);
    while steps < mp.deform_steps {
        let g = obj.gradient(&path[top])?;
        let grad_inf = norm_inf(&g);
        if let Some(t) = trace.as_mut() {
            t.push(TracePoint {
                energy: energies[top],
                grad_norm: grad_inf,
            });
        }
        if grad_inf <= opts.grad_tol {
            break;
        }
        match armijo_step(&obj, &path[top], energies[top], &g, opts, None) {
            StepOutcome::Accepted { u, .. } => path[top] = u,
            StepOutcome::Stalled => break,
        }
        reparametrize(&mut path);
        for k in 1..p - 1 {
            energies[k] = obj.energy_or_inf(&path[k]);
        }
        top = path_max(&energies);
        steps += 1;
    }

    let start = obj.grid_function(path[top].clone());
    let refined = newton_refine(instance, lambda, &start, opts)?;
    obj.report(
        Method::MountainPass,
        refined.u.into_vec(),
        steps + refined.iterations,
        refined.converged,
        opts,
        None,
        refined.singular_fallbacks,
        trace,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WeightGrid;
    use crate::nonlinearity::NonlinearitySpec;

    fn one_node_quartic() -> ProblemInstance {
        ProblemInstance::new(
            WeightGrid::uniform(1, 1, 1.0).unwrap(),
            NonlinearitySpec::rational_quartic(),
        )
        .unwrap()
    }

    #[test]
    fn one_node_saddle() {
        let inst = one_node_quartic();
        let mp = MountainPassOptions::new(GridFunction::constant(1, 1, 10.0));
        let r = mountain_pass(&inst, 2.0, &mp, &SolveOptions::default()).unwrap();
        assert!(r.converged && r.nontrivial);
        let u_star = (2f64.sqrt() - 1.0).sqrt();
        assert!((r.u.as_slice()[0] - u_star).abs() < 1e-9, "{:?}", r.u);
        assert!((r.energy.total - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn endpoint_must_have_negative_energy() {
        let inst = one_node_quartic();
        let mp = MountainPassOptions::new(GridFunction::constant(1, 1, 0.1));
        let err = mountain_pass(&inst, 2.0, &mp, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EndpointNotBelowZero { energy } if energy > 0.0));
    }

    #[test]
    fn endpoint_search_doubles() {
        let inst = one_node_quartic();
        let e = find_endpoint(&inst, 2.0, Some(&GridFunction::constant(1, 1, 1.0)), 0).unwrap();
        // I(1) = 1 - 2 * 0.5 = 0 is not negative, I(2) = 4 - 2 * 16 / 5 < 0
        assert_eq!(e.as_slice(), &[2.0]);
    }

    #[test]
    fn endpoint_search_gives_up() {
        let inst = ProblemInstance::new(
            WeightGrid::uniform(1, 1, 1.0).unwrap(),
            NonlinearitySpec::damped_quadratic(),
        )
        .unwrap();
        assert!(matches!(
            find_endpoint(&inst, 1.0, None, 3),
            Err(Error::EndpointSearchFailed { .. })
        ));
    }

    #[test]
    fn reparametrize_equalizes_spacing() {
        let mut path = vec![vec![0.0], vec![0.1], vec![0.2], vec![3.0]];
        reparametrize(&mut path);
        assert!((path[1][0] - 1.0).abs() < 1e-15 && (path[2][0] - 2.0).abs() < 1e-15);
    }
}
