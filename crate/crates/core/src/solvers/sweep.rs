use serde::{Deserialize, Serialize};

use super::{
    find_endpoint, minimize_global_from, minimize_sublevel_from, mountain_pass, newton_refine, rng,
    uniform_vec, MountainPassOptions, SolveOptions, SolveReport, SublevelOptions,
};
use crate::assembly::assemble_m;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::problem::ProblemInstance;
use crate::spectral::eigen_extremes;

/// Which strategy to run, with its strategy-specific settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodConfig {
    GlobalMin,
    SublevelMin {
        alpha: f64,
        shrink_eps: f64,
    },
    MountainPass {
        /// Generated by [`find_endpoint`] when absent.
        endpoint: Option<GridFunction>,
        path_points: usize,
        deform_steps: usize,
    },
    Newton {
        /// Seeded uniform `[-2, 2]` start when absent.
        initial: Option<GridFunction>,
    },
}

impl MethodConfig {
    pub fn sublevel(alpha: f64) -> Self {
        MethodConfig::SublevelMin {
            alpha,
            shrink_eps: SublevelOptions::DEFAULT_SHRINK,
        }
    }

    pub fn mountain_pass() -> Self {
        MethodConfig::MountainPass {
            endpoint: None,
            path_points: MountainPassOptions::DEFAULT_PATH_POINTS,
            deform_steps: MountainPassOptions::DEFAULT_DEFORM_STEPS,
        }
    }
}

/// Runs one strategy at one `lambda`. `warm` is an extra starting point
/// (descent methods), the endpoint direction (mountain pass) or the initial
/// guess (Newton).
pub fn solve(
    instance: &ProblemInstance,
    lambda: f64,
    method: &MethodConfig,
    opts: &SolveOptions,
    warm: Option<&GridFunction>,
) -> Result<SolveReport> {
    let extra: Vec<GridFunction> = warm.cloned().into_iter().collect();
    match method {
        MethodConfig::GlobalMin => minimize_global_from(instance, lambda, opts, &extra),
        MethodConfig::SublevelMin { alpha, shrink_eps } => {
            let spectrum = eigen_extremes(&assemble_m(instance.grid()))?;
            let sub = SublevelOptions::new(*alpha, spectrum.lambda_min, *shrink_eps)?;
            minimize_sublevel_from(instance, lambda, &sub, opts, &extra)
        }
        MethodConfig::MountainPass {
            endpoint,
            path_points,
            deform_steps,
        } => {
            let endpoint = match (endpoint, warm) {
                (Some(e), _) => e.clone(),
                (None, w) => find_endpoint(instance, lambda, w, opts.seed)?,
            };
            let mp = MountainPassOptions {
                endpoint,
                path_points: *path_points,
                deform_steps: *deform_steps,
            };
            mountain_pass(instance, lambda, &mp, opts)
        }
        MethodConfig::Newton { initial } => {
            let start = match (warm, initial) {
                (Some(w), _) => w.clone(),
                (None, Some(i)) => i.clone(),
                (None, None) => GridFunction::from_flat(
                    instance.m(),
                    instance.n(),
                    uniform_vec(&mut rng(opts.seed), instance.order(), -2.0, 2.0),
                )?,
            };
            newton_refine(instance, lambda, &start, opts)
        }
    }
}

/// One entry of a `lambda` sweep: the report or the error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub lambda: f64,
    pub report: Option<SolveReport>,
    pub error: Option<String>,
}

impl SweepEntry {
    fn from_result(lambda: f64, result: Result<SolveReport>) -> Self {
        match result {
            Ok(r) => Self {
                lambda,
                report: Some(r),
                error: None,
            },
            Err(e) => Self {
                lambda,
                report: None,
                error: Some(e.to_string()),
            },
        }
    }
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::EmptySweep);
    }
    for (k, w) in lambdas.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::UnsortedSweep { index: k + 1 });
        }
    }
    Ok(())
}

/// Solves at each `lambda` in ascending order, warm-starting from the last
/// nontrivial solution. Failures are recorded per entry and the sweep goes on.
pub fn sweep_lambda(
    instance: &ProblemInstance,
    lambdas: &[f64],
    method: &MethodConfig,
    opts: &SolveOptions,
) -> Result<Vec<SweepEntry>> {
    check_lambdas(lambdas)?;
    let mut warm: Option<GridFunction> = None;
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let result = solve(instance, lambda, method, opts, warm.as_ref());
        if let Ok(r) = &result {
            if r.nontrivial {
                warm = Some(r.u.clone());
            }
        }
        out.push(SweepEntry::from_result(lambda, result));
    }
    Ok(out)
}

/// Cold solves fanned out over up to `threads` worker threads; entries come
/// back in `lambda` order.
pub fn sweep_lambda_parallel(
    instance: &ProblemInstance,
    lambdas: &[f64],
    method: &MethodConfig,
    opts: &SolveOptions,
    threads: usize,
) -> Result<Vec<SweepEntry>> {
    check_lambdas(lambdas)?;
    let threads = threads.clamp(1, lambdas.len());
    let chunk = lambdas.len().div_ceil(threads);
    let mut out: Vec<SweepEntry> = Vec::with_capacity(lambdas.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = lambdas
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&l| {
                            SweepEntry::from_result(l, solve(instance, l, method, opts, None))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            out.extend(h.join().expect("sweep worker panicked"));
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WeightGrid;
    use crate::nonlinearity::NonlinearitySpec;

    fn one_node_cubic() -> ProblemInstance {
        ProblemInstance::new(
            WeightGrid::uniform(1, 1, 1.0).unwrap(),
            NonlinearitySpec::cubic_softening(),
        )
        .unwrap()
    }

    #[test]
    fn cubic_sweep_follows_closed_form() {
        let inst = one_node_cubic();
        let lambdas = [1.5, 2.0, 3.0];
        let out = sweep_lambda(
            &inst,
            &lambdas,
            &MethodConfig::GlobalMin,
            &SolveOptions::default(),
        )
        .unwrap();
        for e in &out {
            let r = e.report.as_ref().unwrap();
            let expected = (2.0 * (e.lambda - 1.0) / e.lambda).sqrt();
            assert!((r.u.as_slice()[0].abs() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_rejects_bad_lists() {
        let inst = one_node_cubic();
        let opts = SolveOptions::default();
        assert_eq!(
            sweep_lambda(&inst, &[], &MethodConfig::GlobalMin, &opts),
            Err(Error::EmptySweep)
        );
        assert!(matches!(
            sweep_lambda(&inst, &[2.0, 1.0], &MethodConfig::GlobalMin, &opts),
            Err(Error::UnsortedSweep { index: 1 })
        ));
    }

    #[test]
    fn parallel_sweep_keeps_order() {
        let inst = one_node_cubic();
        let lambdas = [0.5, 1.5, 2.0, 3.0, 4.0];
        let out = sweep_lambda_parallel(
            &inst,
            &lambdas,
            &MethodConfig::GlobalMin,
            &SolveOptions::default(),
            3,
        )
        .unwrap();
        let got: Vec<f64> = out.iter().map(|e| e.lambda).collect();
        assert_eq!(got, lambdas);
    }
}
