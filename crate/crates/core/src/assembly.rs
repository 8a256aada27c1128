//! The block-tridiagonal system matrix, the equivalent five-point stencil and
//! the residual `M U - lambda H(U)`.

use crate::error::{check_lambda, shape_err, Error, Result};
use crate::grid::{GridFunction, WeightGrid};
use crate::problem::ProblemInstance;

/// Symmetric band matrix of order `m * n` and half-bandwidth `m`.
///
/// Diagonal blocks `L_j` are tridiagonal, the coupling blocks `-P_j` between
/// consecutive rows `j` and `j + 1` are diagonal. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    order: usize,
    bw: usize,
    // band[k * (bw + 1) + d] = M(k, k - d)
    band: Vec<f64>,
}

impl SystemMatrix {
    fn zeros(order: usize, bw: usize) -> Self {
        Self {
            order,
            bw,
            band: vec![0.0; order * (bw + 1)],
        }
    }

    /// Wraps an arbitrary symmetric matrix given densely. The half-bandwidth
    /// is the smallest one covering every nonzero.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let order = rows.len();
        if order == 0 {
            return Err(shape_err("nonempty matrix", "0x0"));
        }
        let mut bw = 0;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != order {
                return Err(shape_err(format!("{order} columns"), row.len()));
            }
            for (c, &v) in row.iter().enumerate() {
                if v != rows[c][r] {
                    return Err(Error::InvalidParameter {
                        name: "matrix".into(),
                        reason: format!("not symmetric at ({r},{c})"),
                    });
                }
                if v != 0.0 {
                    bw = bw.max(r.abs_diff(c));
                }
            }
        }
        let mut out = Self::zeros(order, bw);
        for r in 0..order {
            for d in 0..=bw.min(r) {
                out.band[r * (bw + 1) + d] = rows[r][r - d];
            }
        }
        Ok(out)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn half_bandwidth(&self) -> usize {
        self.bw
    }

    pub(crate) fn band(&self) -> &[f64] {
        &self.band
    }

    /// `M(r, c)`, 0-based.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (hi, lo) = if r >= c { (r, c) } else { (c, r) };
        let d = hi - lo;
        if d > self.bw {
            0.0
        } else {
            self.band[hi * (self.bw + 1) + d]
        }
    }

    fn set(&mut self, r: usize, c: usize, v: f64) {
        let (hi, lo) = if r >= c { (r, c) } else { (c, r) };
        self.band[hi * (self.bw + 1) + (hi - lo)] = v;
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.order)
            .map(|r| (0..self.order).map(|c| self.get(r, c)).collect())
            .collect()
    }

    /// Row-major dense copy.
    pub fn to_dense_flat(&self) -> Vec<f64> {
        let n = self.order;
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            for d in 0..=self.bw.min(r) {
                let v = self.band[r * (self.bw + 1) + d];
                out[r * n + (r - d)] = v;
                out[(r - d) * n + r] = v;
            }
        }
        out
    }

    /// `y = M x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.order);
        let w = self.bw + 1;
        let mut y = vec![0.0; self.order];
        for r in 0..self.order {
            y[r] += self.band[r * w] * x[r];
            for d in 1..=self.bw.min(r) {
                let v = self.band[r * w + d];
                if v != 0.0 {
                    y[r] += v * x[r - d];
                    y[r - d] += v * x[r];
                }
            }
        }
        y
    }

    /// `x^T M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.mul_vec(x);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|k| self.band[k * (self.bw + 1)]).sum()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.order)
            .map(|r| {
                let lo = r.saturating_sub(self.bw);
                let hi = (r + self.bw).min(self.order - 1);
                (lo..=hi).map(|c| self.get(r, c).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        let w = self.bw + 1;
        let mut s = 0.0;
        for r in 0..self.order {
            s += self.band[r * w].powi(2);
            for d in 1..=self.bw.min(r) {
                s += 2.0 * self.band[r * w + d].powi(2);
            }
        }
        s.sqrt()
    }
}

/// Diagonal block `L_j` (`1 <= j <= n`) as a dense `m x m` matrix.
pub fn assemble_l(grid: &WeightGrid, j: usize) -> Result<Vec<Vec<f64>>> {
    let (m, n) = (grid.m(), grid.n());
    if j == 0 || j > n {
        return Err(Error::BlockOutOfRange { j, max: n });
    }
    let mut l = vec![vec![0.0; m]; m];
    for k in 1..=m {
        l[k - 1][k - 1] = grid.p(k - 1, j) + 2.0 * grid.p(k, j) + grid.p(k, j - 1);
        if k < m {
            // couples u(k, j) and u(k + 1, j) through p(k, j)
            l[k - 1][k] = -grid.p(k, j);
            l[k][k - 1] = -grid.p(k, j);
        }
    }
    Ok(l)
}

/// Coupling block `P_j = diag(p(1, j), ..., p(m, j))` for `1 <= j <= n - 1`,
/// returned as its diagonal.
pub fn assemble_p(grid: &WeightGrid, j: usize) -> Result<Vec<f64>> {
    let n = grid.n();
    if j == 0 || j + 1 > n {
        return Err(Error::BlockOutOfRange {
            j,
            max: n.saturating_sub(1),
        });
    }
    Ok((1..=grid.m()).map(|i| grid.p(i, j)).collect())
}

/// The full system matrix `M`.
pub fn assemble_m(grid: &WeightGrid) -> SystemMatrix {
    let (m, n) = (grid.m(), grid.n());
    let mut sm = SystemMatrix::zeros(m * n, m);
    for j in 1..=n {
        let base = (j - 1) * m;
        let l = assemble_l(grid, j).expect("block index in range");
        for r in 0..m {
            sm.set(base + r, base + r, l[r][r]);
            if r + 1 < m {
                sm.set(base + r + 1, base + r, l[r + 1][r]);
            }
        }
    }
    // empty when n == 1
    for j in 1..n {
        let p = assemble_p(grid, j).expect("block index in range");
        let base = (j - 1) * m;
        for (r, pv) in p.iter().enumerate() {
            sm.set(base + m + r, base + r, -pv);
        }
    }
    sm
}

/// Left-hand side of the weighted five-point scheme at every interior node,
/// with zero boundary values, evaluated directly from the weights.
pub fn apply_stencil(grid: &WeightGrid, u: &GridFunction) -> Result<GridFunction> {
    let (m, n) = (grid.m(), grid.n());
    u.expect_shape(m, n)?;
    Ok(GridFunction::from_fn(m, n, |i, j| {
        let p = |a, b| grid.p(a, b);
        (p(i - 1, j) + 2.0 * p(i, j) + p(i, j - 1)) * u.get(i, j)
            - p(i - 1, j) * u.get(i - 1, j)
            - p(i, j) * u.get(i + 1, j)
            - p(i, j - 1) * u.get(i, j - 1)
            - p(i, j) * u.get(i, j + 1)
    }))
}

/// `H(U)`, componentwise `f((i, j), u(i, j))`.
pub fn nonlinear_map(instance: &ProblemInstance, u: &GridFunction) -> Result<GridFunction> {
    u.expect_shape(instance.m(), instance.n())?;
    let nl = instance.nonlinearity();
    let values = u
        .as_slice()
        .iter()
        .enumerate()
        .map(|(k, &t)| nl.f_at(k, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(u.with_values(values))
}

/// `M U - lambda H(U)`; zero exactly at solutions of the boundary value problem.
pub fn residual(instance: &ProblemInstance, u: &GridFunction, lambda: f64) -> Result<GridFunction> {
    let m = assemble_m(instance.grid());
    residual_with(instance, &m, u, lambda)
}

/// [`residual`] with a pre-assembled matrix.
pub fn residual_with(
    instance: &ProblemInstance,
    matrix: &SystemMatrix,
    u: &GridFunction,
    lambda: f64,
) -> Result<GridFunction> {
    check_lambda(lambda)?;
    u.expect_shape(instance.m(), instance.n())?;
    if matrix.order() != u.len() {
        return Err(shape_err(
            format!("matrix of order {}", u.len()),
            matrix.order(),
        ));
    }
    let mu = matrix.mul_vec(u.as_slice());
    let nl = instance.nonlinearity();
    let values = mu
        .into_iter()
        .zip(u.as_slice())
        .enumerate()
        .map(|(k, (a, &t))| Ok(a - lambda * nl.f_at(k, t)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(u.with_values(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::NonlinearitySpec;

    fn unit() -> WeightGrid {
        WeightGrid::uniform(2, 2, 1.0).unwrap()
    }

    #[test]
    fn l_blocks_of_unit_grid() {
        assert_eq!(
            assemble_l(&unit(), 1).unwrap(),
            vec![vec![2.0, -1.0], vec![-1.0, 3.0]]
        );
        assert_eq!(
            assemble_l(&unit(), 2).unwrap(),
            vec![vec![3.0, -1.0], vec![-1.0, 4.0]]
        );
        let one = WeightGrid::uniform(1, 1, 1.0).unwrap();
        assert_eq!(assemble_l(&one, 1).unwrap(), vec![vec![2.0]]);
        assert!(assemble_l(&unit(), 3).is_err());
    }

    #[test]
    fn p_blocks() {
        assert_eq!(assemble_p(&unit(), 1).unwrap(), vec![1.0, 1.0]);
        let g = WeightGrid::from_fn(2, 2, |i, j| match (i, j) {
            (1, 1) => 2.0,
            (2, 1) => 3.0,
            (0, _) | (_, 0) => 0.0,
            _ => 1.0,
        })
        .unwrap();
        assert_eq!(assemble_p(&g, 1).unwrap(), vec![2.0, 3.0]);
        let strip = WeightGrid::uniform(3, 1, 1.0).unwrap();
        assert!(matches!(
            assemble_p(&strip, 1),
            Err(Error::BlockOutOfRange { .. })
        ));
        assert!(assemble_p(&unit(), 2).is_err());
    }

    #[test]
    fn unit_matrix_exact() {
        let m = assemble_m(&unit());
        let expected = vec![
            vec![2.0, -1.0, -1.0, 0.0],
            vec![-1.0, 3.0, 0.0, -1.0],
            vec![-1.0, 0.0, 3.0, -1.0],
            vec![0.0, -1.0, -1.0, 4.0],
        ];
        assert_eq!(m.to_dense(), expected);
        assert_eq!(m.trace(), 12.0);
        assert_eq!(
            SystemMatrix::from_dense(&expected).unwrap().to_dense(),
            expected
        );
        let one = assemble_m(&WeightGrid::uniform(1, 1, 1.0).unwrap());
        assert_eq!(one.to_dense(), vec![vec![2.0]]);
    }

    #[test]
    fn stencil_examples() {
        let s = apply_stencil(&unit(), &GridFunction::constant(2, 2, 1.0)).unwrap();
        assert_eq!(s.as_slice(), &[0.0, 1.0, 1.0, 2.0]);
        let s = apply_stencil(&unit(), &GridFunction::zeros(2, 2)).unwrap();
        assert_eq!(s.as_slice(), &[0.0; 4]);
        let one = WeightGrid::uniform(1, 1, 1.0).unwrap();
        let s = apply_stencil(&one, &GridFunction::constant(1, 1, 3.0)).unwrap();
        assert_eq!(s.as_slice(), &[6.0]);
        assert!(apply_stencil(&unit(), &GridFunction::zeros(1, 2)).is_err());
    }

    #[test]
    fn nonlinear_map_examples() {
        let cube = NonlinearitySpec::power(1.0, 4.0).unwrap();
        let inst = ProblemInstance::new(unit(), cube).unwrap();
        let u = GridFunction::from_flat(2, 2, vec![2.0, -1.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            nonlinear_map(&inst, &u).unwrap().as_slice(),
            &[8.0, -1.0, 0.0, 1.0]
        );

        let inst = ProblemInstance::new(unit(), NonlinearitySpec::linear(2.0)).unwrap();
        let h = nonlinear_map(&inst, &GridFunction::constant(2, 2, 1.0)).unwrap();
        assert_eq!(h.as_slice(), &[2.0; 4]);
    }

    #[test]
    fn residual_examples() {
        let one = WeightGrid::uniform(1, 1, 1.0).unwrap();
        let lin = ProblemInstance::new(one.clone(), NonlinearitySpec::linear(1.0)).unwrap();
        let r = residual(&lin, &GridFunction::constant(1, 1, 1.0), 3.0).unwrap();
        assert_eq!(r.as_slice(), &[-1.0]);

        let cubic = ProblemInstance::new(one, NonlinearitySpec::cubic_softening()).unwrap();
        let r = residual(&cubic, &GridFunction::constant(1, 1, 1.0), 2.0).unwrap();
        assert_eq!(r.as_slice(), &[0.0]);
        let r = residual(&cubic, &GridFunction::zeros(1, 1), 7.5).unwrap();
        assert_eq!(r.as_slice(), &[0.0]);
        assert!(residual(&cubic, &GridFunction::zeros(1, 1), -1.0).is_err());
    }
}
