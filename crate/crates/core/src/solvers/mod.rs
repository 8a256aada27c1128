//! Critical points of the energy.
//!
//! Three strategies, each matching one existence mechanism:
//!
//! * [`minimize_global`]: Armijo gradient descent from several starts, for
//!   coercive energies whose global minimum is nontrivial;
//! * [`minimize_sublevel`]: projected descent inside the ellipsoid
//!   `{phi < r}`, `r = lambda_1 alpha^2 / 2`, for local minima near zero;
//! * [`mountain_pass`]: path deformation between `0` and an endpoint of
//!   negative energy, for saddle-type critical points.
//!
//! Every strategy finishes with [`newton_refine`] on `M U = lambda H(U)`.

mod descent;
mod mountain_pass;
mod newton;
mod sweep;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_m, SystemMatrix};
use crate::energy::EnergyBreakdown;
use crate::error::{check_lambda, Error, Result};
use crate::grid::{dot, norm_inf, GridFunction};
use crate::problem::ProblemInstance;

pub use descent::{
    minimize_global, minimize_global_from, minimize_sublevel, minimize_sublevel_from, STALL_STEPS,
};
pub use mountain_pass::{find_endpoint, mountain_pass, MAX_ENDPOINT_DOUBLINGS};
pub use newton::{newton_refine, NEWTON_MAX_FALLBACKS, NEWTON_MAX_ITERS};
pub use sweep::{solve, sweep_lambda, sweep_lambda_parallel, MethodConfig, SweepEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop when `|gradient|_inf <= grad_tol`.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack_ratio: f64,
    pub initial_step: f64,
    /// `|U|_inf` above which a solution counts as nontrivial.
    pub nontrivial_tol: f64,
    pub seed: u64,
    pub restarts: usize,
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_iters: 100_000,
            armijo_c: 1e-4,
            backtrack_ratio: 0.5,
            initial_step: 1.0,
            nontrivial_tol: 1e-6,
            seed: 0,
            restarts: 5,
            record_trace: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| {
            Err(Error::InvalidParameter {
                name: name.into(),
                reason: reason.into(),
            })
        };
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return bad("grad_tol", "must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c", "must lie in (0, 1)");
        }
        if !(self.backtrack_ratio > 0.0 && self.backtrack_ratio < 1.0) {
            return bad("backtrack_ratio", "must lie in (0, 1)");
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad("initial_step", "must be positive");
        }
        if !(self.nontrivial_tol > 0.0 && self.nontrivial_tol.is_finite()) {
            return bad("nontrivial_tol", "must be positive");
        }
        Ok(())
    }
}

/// Ball parameter of the sublevel strategy. `r` is always derived from
/// `lambda_1` and `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SublevelOptions {
    alpha: f64,
    r: f64,
    shrink_eps: f64,
}

impl SublevelOptions {
    pub const DEFAULT_SHRINK: f64 = 1e-3;

    pub fn new(alpha: f64, lambda_min: f64, shrink_eps: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha".into(),
                reason: "must be positive".into(),
            });
        }
        if !(shrink_eps > 0.0 && shrink_eps < 1.0) {
            return Err(Error::InvalidParameter {
                name: "shrink_eps".into(),
                reason: "must lie in (0, 1)".into(),
            });
        }
        if !(lambda_min > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda_min".into(),
                reason: "must be positive".into(),
            });
        }
        Ok(Self {
            alpha,
            r: 0.5 * lambda_min * alpha * alpha,
            shrink_eps,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn shrink_eps(&self) -> f64 {
        self.shrink_eps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MountainPassOptions {
    /// Path end with negative energy.
    pub endpoint: GridFunction,
    pub path_points: usize,
    pub deform_steps: usize,
}

impl MountainPassOptions {
    pub const DEFAULT_PATH_POINTS: usize = 64;
    pub const DEFAULT_DEFORM_STEPS: usize = 10_000;

    pub fn new(endpoint: GridFunction) -> Self {
        Self {
            endpoint,
            path_points: Self::DEFAULT_PATH_POINTS,
            deform_steps: Self::DEFAULT_DEFORM_STEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GlobalMin,
    SublevelMin,
    MountainPass,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub energy: f64,
    pub grad_norm: f64,
}

/// A computed critical point candidate and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub lambda: f64,
    pub u: GridFunction,
    /// `|M U - lambda H(U)|_inf`, recomputed at the returned point.
    pub residual_inf: f64,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub converged: bool,
    pub nontrivial: bool,
    /// Sublevel strategy only: the final point lies strictly inside the
    /// shrunken ellipsoid, so the projection was inactive.
    pub inside_sublevel: Option<bool>,
    /// Newton steps replaced by a gradient step after a singular Jacobian.
    pub singular_fallbacks: usize,
    pub trace: Option<Vec<TracePoint>>,
}

/// Energy, gradient and residual of one `(instance, lambda)` pair with the
/// matrix assembled once.
pub(crate) struct Objective<'a> {
    pub instance: &'a ProblemInstance,
    pub matrix: SystemMatrix,
    pub lambda: f64,
}

impl<'a> Objective<'a> {
    pub fn new(instance: &'a ProblemInstance, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            instance,
            matrix: assemble_m(instance.grid()),
            lambda,
        })
    }

    pub fn len(&self) -> usize {
        self.matrix.order()
    }

    pub fn phi(&self, u: &[f64]) -> f64 {
        0.5 * self.matrix.quadratic_form(u)
    }

    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        let nl = self.instance.nonlinearity();
        let mut psi = 0.0;
        for (k, &t) in u.iter().enumerate() {
            psi += nl.primitive_at(k, t)?;
        }
        Ok(self.phi(u) - self.lambda * psi)
    }

    /// Energy with evaluation failures mapped to `+inf`, for trial points.
    pub fn energy_or_inf(&self, u: &[f64]) -> f64 {
        match self.energy(u) {
            Ok(e) if e.is_finite() => e,
            _ => f64::INFINITY,
        }
    }

    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let nl = self.instance.nonlinearity();
        let mut g = self.matrix.mul_vec(u);
        for (k, gk) in g.iter_mut().enumerate() {
            *gk -= self.lambda * nl.f_at(k, u[k])?;
        }
        Ok(g)
    }

    pub fn grid_function(&self, values: Vec<f64>) -> GridFunction {
        GridFunction::from_flat(self.instance.m(), self.instance.n(), values)
            .expect("length matches the grid")
    }

    pub fn breakdown(&self, u: &GridFunction) -> Result<EnergyBreakdown> {
        crate::energy::energy(self.instance, &self.matrix, u, self.lambda)
    }

    /// Assembles the final report; `converged` is re-validated against the
    /// freshly computed residual.
    #[allow(clippy::too_many_arguments)]
    pub fn report(
        &self,
        method: Method,
        u: Vec<f64>,
        iterations: usize,
        converged: bool,
        opts: &SolveOptions,
        inside_sublevel: Option<bool>,
        singular_fallbacks: usize,
        trace: Option<Vec<TracePoint>>,
    ) -> Result<SolveReport> {
        let residual_inf = norm_inf(&self.gradient(&u)?);
        let u = self.grid_function(u);
        let energy = self.breakdown(&u)?;
        Ok(SolveReport {
            method,
            lambda: self.lambda,
            nontrivial: u.norm_inf() > opts.nontrivial_tol,
            residual_inf,
            energy,
            iterations,
            converged: converged && residual_inf <= opts.grad_tol,
            inside_sublevel,
            singular_fallbacks,
            trace,
            u,
        })
    }
}

/// Result of one Armijo step.
pub(crate) enum StepOutcome {
    Accepted { u: Vec<f64>, energy: f64 },
    Stalled,
}

/// Optional map applied to every trial point.
pub(crate) type Projection<'a> = Option<&'a dyn Fn(&mut [f64])>;

/// One backtracking step along `-g` from `u`.
///
/// With a projector the sufficient-decrease test uses the projected
/// displacement, `I(P(u - t g)) <= I(u) + c g.(P(u - t g) - u)`. A few ulps
/// of slack absorb round-off once decreases fall below the energy's
/// resolution.
pub(crate) fn armijo_step(
    obj: &Objective<'_>,
    u: &[f64],
    energy: f64,
    g: &[f64],
    opts: &SolveOptions,
    project: Projection<'_>,
) -> StepOutcome {
    let slack = 4.0 * f64::EPSILON * energy.abs();
    let scale = 1.0 + norm_inf(u);
    let mut t = opts.initial_step;
    let mut trial = vec![0.0; u.len()];
    let mut disp = vec![0.0; u.len()];
    loop {
        for k in 0..u.len() {
            trial[k] = u[k] - t * g[k];
        }
        if let Some(p) = project {
            p(&mut trial);
        }
        for k in 0..u.len() {
            disp[k] = trial[k] - u[k];
        }
        if norm_inf(&disp) <= 1e-16 * scale {
            return StepOutcome::Stalled;
        }
        let e = obj.energy_or_inf(&trial);
        if e <= energy + opts.armijo_c * dot(g, &disp) + slack {
            return StepOutcome::Accepted {
                u: trial,
                energy: e,
            };
        }
        t *= opts.backtrack_ratio;
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}
