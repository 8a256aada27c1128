//! Spectrum of the system matrix, its positive-definiteness certificate and
//! the quadratic-form lower bounds behind it.

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_l, SystemMatrix};
use crate::error::Result;
use crate::grid::{GridFunction, WeightGrid};
use crate::linalg::{band_cholesky, jacobi_eigenvalues, CholeskyOutcome};

/// Triangular-factorization certificate of positive definiteness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdCertificate {
    pub positive_definite: bool,
    /// Diagonal of the Cholesky factor (complete on success, the accepted
    /// prefix on failure).
    pub pivots: Vec<f64>,
    /// 1-based position of the first nonpositive pivot.
    pub failed_at: Option<usize>,
}

/// Extreme eigenvalues `lambda_1 <= lambda_mn` of `M` and related data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub trace: f64,
    /// All eigenvalues, ascending.
    pub full_spectrum: Option<Vec<f64>>,
    pub pd_certificate: PdCertificate,
}

impl SpectrumSummary {
    /// Relative gap between the eigenvalue sum and the trace.
    pub fn trace_defect(&self) -> Option<f64> {
        self.full_spectrum.as_ref().map(|s| {
            let sum: f64 = s.iter().sum();
            (sum - self.trace).abs() / self.trace.abs().max(f64::MIN_POSITIVE)
        })
    }
}

/// Full symmetric eigensolve by cyclic Jacobi rotations.
pub fn eigen_extremes(matrix: &SystemMatrix) -> Result<SpectrumSummary> {
    let n = matrix.order();
    let spectrum = jacobi_eigenvalues(matrix.to_dense_flat(), n)?;
    Ok(SpectrumSummary {
        lambda_min: spectrum[0],
        lambda_max: spectrum[n - 1],
        trace: matrix.trace(),
        full_spectrum: Some(spectrum),
        pd_certificate: certify_positive_definite(matrix),
    })
}

/// Attempts `M = L L^T`; succeeds exactly when every pivot is positive.
pub fn certify_positive_definite(matrix: &SystemMatrix) -> PdCertificate {
    match band_cholesky(matrix.band(), matrix.order(), matrix.half_bandwidth()) {
        CholeskyOutcome::Success(pivots) => PdCertificate {
            positive_definite: true,
            pivots,
            failed_at: None,
        },
        CholeskyOutcome::Failed { index, pivots } => PdCertificate {
            positive_definite: false,
            pivots,
            failed_at: Some(index),
        },
    }
}

/// Both sides of the lower bound
/// `X^T M X >= sum_{j<n} sum_i p(i,j) (x_{i,j} - x_{i,j+1})^2 + sum_i p(i,n) x_{i,n}^2`
/// and the per-block bound `X_j^T L_j X_j >= sum_i (p(i,j) + p(i,j-1)) x_{i,j}^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// First row block `j` whose per-block bound fails.
    pub block_violation: Option<usize>,
}

/// Relative slack allowed by the lower-bound checks.
pub const LOWER_BOUND_SLACK: f64 = 1e-10;

pub fn quadratic_form_lower_bound_check(
    grid: &WeightGrid,
    x: &GridFunction,
) -> Result<QuadraticFormCheck> {
    let (m, n) = (grid.m(), grid.n());
    x.expect_shape(m, n)?;
    let matrix = crate::assembly::assemble_m(grid);
    let lhs = matrix.quadratic_form(x.as_slice());

    let mut rhs = 0.0;
    for j in 1..n {
        for i in 1..=m {
            let d = x.get(i, j) - x.get(i, j + 1);
            rhs += grid.p(i, j) * d * d;
        }
    }
    for i in 1..=m {
        rhs += grid.p(i, n) * x.get(i, n).powi(2);
    }
    let holds = lhs >= rhs - LOWER_BOUND_SLACK * lhs.abs();

    let mut block_violation = None;
    for j in 1..=n {
        let l = assemble_l(grid, j)?;
        let xj: Vec<f64> = (1..=m).map(|i| x.get(i, j)).collect();
        let mut block_lhs = 0.0;
        for (r, row) in l.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                block_lhs += xj[r] * v * xj[c];
            }
        }
        let block_rhs: f64 = (1..=m)
            .map(|i| (grid.p(i, j) + grid.p(i, j - 1)) * xj[i - 1].powi(2))
            .sum();
        if block_lhs < block_rhs - LOWER_BOUND_SLACK * block_lhs.abs() {
            block_violation = Some(j);
            break;
        }
    }

    Ok(QuadraticFormCheck {
        lhs,
        rhs,
        holds,
        block_violation,
    })
}
