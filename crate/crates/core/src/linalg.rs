//! Small dense and banded kernels: cyclic Jacobi eigenvalues, banded
//! Cholesky, banded LU with partial pivoting.

use crate::error::{Error, Result};

/// Off-diagonal threshold of the Jacobi iteration, relative to `||A||_F`.
pub const JACOBI_REL_TOL: f64 = 1e-12;
/// Sweep cap of the Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// All eigenvalues of the symmetric `n x n` row-major matrix `a`, ascending.
///
/// Cyclic-by-row Jacobi rotations until the off-diagonal Frobenius norm
/// drops below `JACOBI_REL_TOL * ||A||_F`. Only values are computed.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let fro = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_REL_TOL * fro;
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::JacobiNonconvergent { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- J^T A J acting on rows/columns p and q
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }

    let mut diag: Vec<(f64, usize)> = (0..n).map(|k| (a[k * n + k], k)).collect();
    diag.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    Ok(diag.into_iter().map(|(v, _)| v).collect())
}

/// Outcome of a banded Cholesky factorization.
#[derive(Debug, Clone, PartialEq)]
pub enum CholeskyOutcome {
    /// Diagonal of the factor `L`, all positive.
    Success(Vec<f64>),
    /// 1-based position of the first nonpositive pivot, with the pivots accepted before it.
    Failed { index: usize, pivots: Vec<f64> },
}

/// Cholesky `A = L L^T` of a symmetric band matrix.
///
/// `band[k * (bw + 1) + d]` holds `A(k, k - d)` for `d <= bw`.
pub fn band_cholesky(band: &[f64], order: usize, bw: usize) -> CholeskyOutcome {
    let w = bw + 1;
    let mut l = band.to_vec();
    let mut pivots = Vec::with_capacity(order);
    for k in 0..order {
        // L(k, c) for c in [k - bw, k]
        let lo = k.saturating_sub(bw);
        for c in lo..=k {
            let mut s = l[k * w + (k - c)];
            let clo = lo.max(c.saturating_sub(bw));
            for r in clo..c {
                s -= l[k * w + (k - r)] * l[c * w + (c - r)];
            }
            if c == k {
                if !(s > 0.0) || !s.is_finite() {
                    return CholeskyOutcome::Failed {
                        index: k + 1,
                        pivots,
                    };
                }
                let d = s.sqrt();
                l[k * w] = d;
                pivots.push(d);
            } else {
                l[k * w + (k - c)] = s / l[c * w];
            }
        }
    }
    CholeskyOutcome::Success(pivots)
}

/// Solves `A x = b` for a general band matrix with lower and upper
/// bandwidth `bw`, by Gaussian elimination with partial pivoting.
///
/// `entry(r, c)` returns `A(r, c)` for `|r - c| <= bw`. A pivot whose
/// magnitude is at most `singular_tol` is reported as
/// [`Error::SingularJacobian`] with its 1-based position.
pub fn band_lu_solve(
    order: usize,
    bw: usize,
    entry: impl Fn(usize, usize) -> f64,
    rhs: &[f64],
    singular_tol: f64,
) -> Result<Vec<f64>> {
    // each row keeps columns [r - bw, r + 2 bw]; pivoting fills up to 2 bw above
    let width = 3 * bw + 1;
    let col_at = |r: usize, c: usize| c + bw - r;
    let mut ab = vec![0.0; order * width];
    for r in 0..order {
        let lo = r.saturating_sub(bw);
        let hi = (r + bw).min(order - 1);
        for c in lo..=hi {
            ab[r * width + col_at(r, c)] = entry(r, c);
        }
    }
    let mut b = rhs.to_vec();

    for k in 0..order {
        let last_row = (k + bw).min(order - 1);
        let last_col = (k + 2 * bw).min(order - 1);
        let mut piv = k;
        let mut best = ab[k * width + col_at(k, k)].abs();
        for r in (k + 1)..=last_row {
            let v = ab[r * width + col_at(r, k)].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if !(best > singular_tol) {
            return Err(Error::SingularJacobian { index: k + 1 });
        }
        if piv != k {
            for c in k..=last_col {
                let a = ab[k * width + col_at(k, c)];
                let cp = col_at(piv, c);
                // columns beyond the pivot row's window are structurally zero
                let bv = if cp < width {
                    ab[piv * width + cp]
                } else {
                    0.0
                };
                ab[k * width + col_at(k, c)] = bv;
                if cp < width {
                    ab[piv * width + cp] = a;
                }
            }
            b.swap(k, piv);
        }
        let d = ab[k * width + col_at(k, k)];
        for r in (k + 1)..=last_row {
            let factor = ab[r * width + col_at(r, k)] / d;
            if factor == 0.0 {
                continue;
            }
            ab[r * width + col_at(r, k)] = 0.0;
            for c in (k + 1)..=last_col {
                let cr = col_at(r, c);
                if cr < width {
                    ab[r * width + cr] -= factor * ab[k * width + col_at(k, c)];
                }
            }
            b[r] -= factor * b[k];
        }
    }

    let mut x = vec![0.0; order];
    for k in (0..order).rev() {
        let last_col = (k + 2 * bw).min(order - 1);
        let mut s = b[k];
        for c in (k + 1)..=last_col {
            s -= ab[k * width + col_at(k, c)] * x[c];
        }
        x[k] = s / ab[k * width + col_at(k, k)];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_two_by_two() {
        let ev = jacobi_eigenvalues(vec![2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_diagonal_is_sorted() {
        let ev = jacobi_eigenvalues(vec![5.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0], 3).unwrap();
        assert_eq!(ev, vec![-1.0, 2.0, 5.0]);
    }

    #[test]
    fn cholesky_of_tridiagonal() {
        // [[4, 2], [2, 5]] -> L = [[2, 0], [1, 2]]
        let band = vec![4.0, 0.0, 5.0, 2.0];
        assert_eq!(
            band_cholesky(&band, 2, 1),
            CholeskyOutcome::Success(vec![2.0, 2.0])
        );
        let band = vec![1.0, 0.0, 1.0, 2.0];
        assert!(matches!(
            band_cholesky(&band, 2, 1),
            CholeskyOutcome::Failed { index: 2, .. }
        ));
    }

    #[test]
    fn band_lu_needs_pivoting() {
        // [[0, 1, 0], [1, 0, 1], [0, 1, 3]] is nonsingular but has a zero leading pivot
        let a = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 3.0]];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = a
            .iter()
            .map(|row| row.iter().zip(&x_true).map(|(p, q)| p * q).sum())
            .collect();
        let x = band_lu_solve(3, 1, |r, c| a[r][c], &b, 1e-14).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn band_lu_reports_singular() {
        let err = band_lu_solve(1, 0, |_, _| 0.0, &[1.0], 1e-14).unwrap_err();
        assert_eq!(err, Error::SingularJacobian { index: 1 });
    }
}
