//! Self-check of a loaded problem: every structural invariant of the
//! library evaluated on seeded random probes.

use serde::{Deserialize, Serialize};

use crate::assembly::{apply_stencil, assemble_m};
use crate::energy::{check_bounds, energy, gradient};
use crate::error::Result;
use crate::grid::{flatten_index, unflatten_index, GridFunction};
use crate::nonlinearity::Kind;
use crate::problem::ProblemInstance;
use crate::solvers::{rng, uniform_vec};
use crate::spectral::{
    certify_positive_definite, eigen_extremes, quadratic_form_lower_bound_check,
};

pub const VERIFY_PROBES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            let line = format!("{mark}  {:width$}  {}", c.name, c.detail);
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

/// Range of `t` where `F` can be evaluated, clipped to `[-2, 2]`.
fn probe_range(instance: &ProblemInstance) -> (f64, f64) {
    match instance.nonlinearity().kind() {
        Kind::Tabulated(t) => {
            let k = t.knots();
            (k[0].max(-2.0), k[k.len() - 1].min(2.0))
        }
        _ => (-2.0, 2.0),
    }
}

/// Runs all checks with probes drawn from `seed`; `lambda` feeds the
/// gradient check.
pub fn verify_instance(instance: &ProblemInstance, lambda: f64, seed: u64) -> Result<VerifyReport> {
    let (m, n) = (instance.m(), instance.n());
    let grid = instance.grid();
    let matrix = assemble_m(grid);
    let spectrum = eigen_extremes(&matrix)?;
    let mut rng = rng(seed);
    let (lo, hi) = probe_range(instance);
    let probes: Vec<GridFunction> = (0..VERIFY_PROBES)
        .map(|_| GridFunction::from_flat(m, n, uniform_vec(&mut rng, m * n, lo, hi)))
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(CheckResult {
            name: name.into(),
            passed,
            detail,
        })
    };

    let flatten_ok = (1..=m * n).all(|k| {
        unflatten_index(k, m, n)
            .and_then(|(i, j)| flatten_index(i, j, m, n))
            .is_ok_and(|k2| k2 == k)
    });
    push("flatten_round_trip", flatten_ok, format!("{} nodes", m * n));

    let dense = matrix.to_dense();
    let symmetric = (0..m * n).all(|r| (0..m * n).all(|c| dense[r][c] == dense[c][r]));
    push("matrix_symmetric", symmetric, format!("order {}", m * n));

    let mut worst = 0.0f64;
    for u in &probes {
        let s = apply_stencil(grid, u)?;
        let mu = matrix.mul_vec(u.as_slice());
        let scale = mu.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        for (a, b) in s.as_slice().iter().zip(&mu) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    push(
        "stencil_matches_matrix",
        worst <= 1e-12,
        format!("max rel diff {worst:.3e}"),
    );

    let defect = spectrum.trace_defect().unwrap_or(0.0);
    let trace_ok = defect <= 1e-9 * matrix.trace().abs().max(1.0);
    push(
        "trace_equals_eigenvalue_sum",
        trace_ok,
        format!("defect {defect:.3e}"),
    );

    let cert = certify_positive_definite(&matrix);
    push(
        "positive_definite",
        cert.positive_definite && spectrum.lambda_min > 0.0,
        format!(
            "cholesky {} lambda_1 = {:.6e} lambda_mn = {:.6e}",
            if cert.positive_definite {
                "ok"
            } else {
                "failed"
            },
            spectrum.lambda_min,
            spectrum.lambda_max
        ),
    );

    let mut lb_ok = true;
    for u in &probes {
        lb_ok &= quadratic_form_lower_bound_check(grid, u)?.holds;
    }
    push(
        "quadratic_form_lower_bound",
        lb_ok,
        format!("{VERIFY_PROBES} probes"),
    );

    let mut bounds_ok = true;
    for u in &probes {
        bounds_ok &= check_bounds(&matrix, &spectrum, u)?.passed;
    }
    push(
        "energy_norm_bounds",
        bounds_ok,
        format!("{VERIFY_PROBES} probes"),
    );

    // central differences of I against its analytic gradient
    let mut worst_grad = 0.0f64;
    for u in probes.iter().take(5) {
        let g = gradient(instance, &matrix, u, lambda)?;
        let gscale = g.as_slice().iter().fold(1.0f64, |a, x| a.max(x.abs()));
        for k in 0..m * n {
            let h = 1e-6 * (1.0 + u.as_slice()[k].abs());
            let (mut up, mut dn) = (u.clone(), u.clone());
            up.as_mut_slice()[k] += h;
            dn.as_mut_slice()[k] -= h;
            if up.as_slice()[k] > hi || dn.as_slice()[k] < lo {
                continue;
            }
            let fd = (energy(instance, &matrix, &up, lambda)?.total
                - energy(instance, &matrix, &dn, lambda)?.total)
                / (2.0 * h);
            worst_grad = worst_grad.max((fd - g.as_slice()[k]).abs() / gscale);
        }
    }
    push(
        "gradient_finite_difference",
        worst_grad <= 1e-6,
        format!("max rel err {worst_grad:.3e}"),
    );

    let nl = instance.nonlinearity();
    let mut zero_ok = true;
    let mut worst_prim = 0.0f64;
    for k in 0..m * n {
        zero_ok &= nl.primitive_at(k, 0.0)? == 0.0;
        for s in 1..20 {
            let t = lo + (hi - lo) * s as f64 / 20.0;
            let h = 1e-5;
            let fd = (nl.primitive_at(k, t + h)? - nl.primitive_at(k, t - h)?) / (2.0 * h);
            let f = nl.f_at(k, t)?;
            worst_prim = worst_prim.max((fd - f).abs() / (1.0 + f.abs()));
        }
    }
    push("primitive_vanishes_at_zero", zero_ok, String::new());
    // loose tolerance: tabulated f has kinks at lattice points
    push(
        "primitive_derivative_is_f",
        worst_prim <= 1e-4,
        format!("max err {worst_prim:.3e}"),
    );

    let e0 = energy(instance, &matrix, &GridFunction::zeros(m, n), lambda)?;
    push(
        "energy_at_zero",
        e0.total == 0.0,
        format!("I(0) = {:.3e}", e0.total),
    );

    push(
        "spectral_radius_bound",
        spectrum.lambda_max <= matrix.norm_inf() * (1.0 + 1e-12),
        format!("lambda_mn <= |M|_inf = {:.6e}", matrix.norm_inf()),
    );

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { checks, passed })
}
