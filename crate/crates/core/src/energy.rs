//! The energy `I(U) = phi(U) - lambda psi(U)` with `phi(U) = U^T M U / 2`
//! and `psi(U) = sum F((i,j), u(i,j))`, its gradient `M U - lambda H(U)`,
//! and the norm bounds implied by the extreme eigenvalues of `M`.

use serde::{Deserialize, Serialize};

use crate::assembly::{residual_with, SystemMatrix};
use crate::error::{check_lambda, shape_err, Result};
use crate::grid::GridFunction;
use crate::problem::ProblemInstance;
use crate::spectral::SpectrumSummary;

pub use crate::grid::{norm2 as euclidean_norm, norm_inf as max_norm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub phi: f64,
    pub psi: f64,
    pub total: f64,
    pub lambda: f64,
}

fn check_matrix(matrix: &SystemMatrix, u: &GridFunction) -> Result<()> {
    if matrix.order() != u.len() {
        return Err(shape_err(
            format!("matrix of order {}", u.len()),
            matrix.order(),
        ));
    }
    Ok(())
}

pub fn phi(matrix: &SystemMatrix, u: &GridFunction) -> Result<f64> {
    check_matrix(matrix, u)?;
    Ok(0.5 * matrix.quadratic_form(u.as_slice()))
}

pub fn psi(instance: &ProblemInstance, u: &GridFunction) -> Result<f64> {
    u.expect_shape(instance.m(), instance.n())?;
    let nl = instance.nonlinearity();
    let mut sum = 0.0;
    for (k, &t) in u.as_slice().iter().enumerate() {
        sum += nl.primitive_at(k, t)?;
    }
    Ok(sum)
}

pub fn energy(
    instance: &ProblemInstance,
    matrix: &SystemMatrix,
    u: &GridFunction,
    lambda: f64,
) -> Result<EnergyBreakdown> {
    check_lambda(lambda)?;
    let phi = phi(matrix, u)?;
    let psi = psi(instance, u)?;
    Ok(EnergyBreakdown {
        phi,
        psi,
        total: phi - lambda * psi,
        lambda,
    })
}

/// Gradient of the energy; the same vector as the residual of the algebraic system.
pub fn gradient(
    instance: &ProblemInstance,
    matrix: &SystemMatrix,
    u: &GridFunction,
    lambda: f64,
) -> Result<GridFunction> {
    residual_with(instance, matrix, u, lambda)
}

/// Relative slack of [`check_bounds`].
pub const BOUNDS_SLACK: f64 = 1e-10;

/// Both sides of `lambda_1 |U|^2 / 2 <= phi(U) <= lambda_mn |U|^2 / 2` and
/// `|U|_inf^2 <= 2 phi(U) / lambda_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub norm: f64,
    pub norm_inf: f64,
    pub phi: f64,
    pub phi_lower: f64,
    pub phi_upper: f64,
    pub sup_norm_sq: f64,
    pub sup_norm_sq_bound: f64,
    pub rayleigh_ok: bool,
    pub sup_norm_ok: bool,
    /// `|U|_inf <= |U|`, the step linking the two chains.
    pub norm_chain_ok: bool,
    pub passed: bool,
}

pub fn check_bounds(
    matrix: &SystemMatrix,
    spectrum: &SpectrumSummary,
    u: &GridFunction,
) -> Result<BoundsReport> {
    let phi = phi(matrix, u)?;
    let norm = u.norm();
    let norm_inf = u.norm_inf();
    let phi_lower = 0.5 * spectrum.lambda_min * norm * norm;
    let phi_upper = 0.5 * spectrum.lambda_max * norm * norm;
    let sup_norm_sq = norm_inf * norm_inf;
    let sup_norm_sq_bound = 2.0 / spectrum.lambda_min * phi;

    let le = |a: f64, b: f64| a <= b + BOUNDS_SLACK * a.abs().max(b.abs());
    let rayleigh_ok = le(phi_lower, phi) && le(phi, phi_upper);
    let sup_norm_ok = le(sup_norm_sq, sup_norm_sq_bound);
    let norm_chain_ok = le(norm_inf, norm);
    Ok(BoundsReport {
        norm,
        norm_inf,
        phi,
        phi_lower,
        phi_upper,
        sup_norm_sq,
        sup_norm_sq_bound,
        rayleigh_ok,
        sup_norm_ok,
        norm_chain_ok,
        passed: rayleigh_ok && sup_norm_ok && norm_chain_ok,
    })
}
