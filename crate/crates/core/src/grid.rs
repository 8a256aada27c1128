//! Grid geometry: the weight table `p` and grid functions `u` on the interior
//! nodes, with the block-by-row flattening used everywhere else.
//!
//! Interior nodes are `(i, j)` with `1 <= i <= m`, `1 <= j <= n`. The
//! flattened position of a node is `k = (j - 1) * m + i` (1-based), so the
//! vector is the row blocks `U_1, ..., U_n` stacked, each block holding
//! `u(1, j), ..., u(m, j)`.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

/// 1-based flattened index of interior node `(i, j)`.
pub fn flatten_index(i: usize, j: usize, m: usize, n: usize) -> Result<usize> {
    if i == 0 || i > m || j == 0 || j > n {
        return Err(Error::IndexOutOfRange { i, j, m, n });
    }
    Ok((j - 1) * m + i)
}

/// Inverse of [`flatten_index`].
pub fn unflatten_index(k: usize, m: usize, n: usize) -> Result<(usize, usize)> {
    if m == 0 || k == 0 || k > m * n {
        return Err(Error::IndexOutOfRange { i: k, j: 0, m, n });
    }
    let k0 = k - 1;
    Ok((k0 % m + 1, k0 / m + 1))
}

/// Weight table `p(i, j)` over `[0, m] x [0, n]`.
///
/// `p(0, j)` (for `j >= 1`) and `p(i, 0)` (for `i >= 1`) are zero and every
/// entry of `[1, m] x [1, n]` is strictly positive. `p(0, 0)` is kept but no
/// stencil ever reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    m: usize,
    n: usize,
    // row-major over i, then j: p(i, j) = p[i * (n + 1) + j]
    p: Vec<f64>,
}

impl WeightGrid {
    /// Validating constructor. `entries[i][j]` holds `p(i, j)`.
    pub fn new(m: usize, n: usize, entries: &[Vec<f64>]) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::EmptyGrid { m, n });
        }
        if entries.len() != m + 1 {
            return Err(Error::TableShape {
                expected: format!("{} rows", m + 1),
                found: format!("{} rows", entries.len()),
            });
        }
        let mut p = Vec::with_capacity((m + 1) * (n + 1));
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n + 1 {
                return Err(Error::TableShape {
                    expected: format!("{} entries in row {}", n + 1, i),
                    found: format!("{}", row.len()),
                });
            }
            p.extend_from_slice(row);
        }
        let grid = Self { m, n, p };
        grid.validate()?;
        Ok(grid)
    }

    /// Builds the table from a closure over `(i, j)` in `[0, m] x [0, n]`.
    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::EmptyGrid { m, n });
        }
        let mut p = Vec::with_capacity((m + 1) * (n + 1));
        for i in 0..=m {
            for j in 0..=n {
                p.push(f(i, j));
            }
        }
        let grid = Self { m, n, p };
        grid.validate()?;
        Ok(grid)
    }

    /// Constant interior weight `value`, zeros on the forced boundary lines.
    pub fn uniform(m: usize, n: usize, value: f64) -> Result<Self> {
        Self::from_fn(m, n, |i, j| if i == 0 || j == 0 { 0.0 } else { value })
    }

    fn validate(&self) -> Result<()> {
        for j in 1..=self.n {
            let v = self.p(0, j);
            if v != 0.0 {
                return Err(Error::BoundaryWeightNonzero { i: 0, j, value: v });
            }
        }
        for i in 1..=self.m {
            let v = self.p(i, 0);
            if v != 0.0 {
                return Err(Error::BoundaryWeightNonzero { i, j: 0, value: v });
            }
        }
        for i in 1..=self.m {
            for j in 1..=self.n {
                let v = self.p(i, j);
                // NaN fails this comparison too
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::NonpositiveInteriorWeight { i, j, value: v });
                }
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of interior nodes, `m * n`.
    pub fn order(&self) -> usize {
        self.m * self.n
    }

    /// `p(i, j)` for `(i, j)` in `[0, m] x [0, n]`. Panics outside that range.
    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        assert!(
            i <= self.m && j <= self.n,
            "weight index ({i},{j}) out of range"
        );
        self.p[i * (self.n + 1) + j]
    }

    /// Copy with every interior weight multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::from_fn(self.m, self.n, |i, j| self.p(i, j) * s)
    }

    /// The table as `entries[i][j] = p(i, j)`.
    pub fn to_table(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.n + 1).map(|r| r.to_vec()).collect()
    }
}

/// A function on the interior nodes, stored in flattened order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridFunction")]
pub struct GridFunction {
    m: usize,
    n: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGridFunction {
    m: usize,
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<RawGridFunction> for GridFunction {
    type Error = Error;

    fn try_from(raw: RawGridFunction) -> Result<Self> {
        Self::from_flat(raw.m, raw.n, raw.values)
    }
}

impl GridFunction {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self::constant(m, n, 0.0)
    }

    pub fn constant(m: usize, n: usize, value: f64) -> Self {
        Self {
            m,
            n,
            values: vec![value; m * n],
        }
    }

    /// Wraps a flattened vector of length `m * n`.
    pub fn from_flat(m: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::EmptyGrid { m, n });
        }
        if values.len() != m * n {
            return Err(shape_err(format!("{} values", m * n), values.len()));
        }
        Ok(Self { m, n, values })
    }

    /// Builds from a closure over 1-based `(i, j)`.
    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(m * n);
        for j in 1..=n {
            for i in 1..=m {
                values.push(f(i, j));
            }
        }
        Self { m, n, values }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `u(i, j)` for interior `(i, j)`; zero on the boundary frame.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == 0 || j == 0 || i > self.m || j > self.n {
            0.0
        } else {
            self.values[(j - 1) * self.m + (i - 1)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let k = flatten_index(i, j, self.m, self.n)?;
        self.values[k - 1] = value;
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            m: self.m,
            n: self.n,
            values,
        }
    }

    pub fn same_shape(&self, m: usize, n: usize) -> bool {
        self.m == m && self.n == n
    }

    pub(crate) fn expect_shape(&self, m: usize, n: usize) -> Result<()> {
        if self.same_shape(m, n) {
            Ok(())
        } else {
            Err(shape_err(
                format!("{m}x{n} grid function"),
                format!("{}x{}", self.m, self.n),
            ))
        }
    }

    /// Euclidean norm over all interior nodes.
    pub fn norm(&self) -> f64 {
        norm2(&self.values)
    }

    /// Max-abs norm over all interior nodes.
    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.values)
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_table() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ]
    }

    #[test]
    fn smallest_grid_is_admissible() {
        let g = WeightGrid::new(1, 1, &[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(g.p(1, 1), 1.0);
        assert_eq!(g.order(), 1);
    }

    #[test]
    fn unit_two_by_two() {
        let g = WeightGrid::new(2, 2, &unit_table()).unwrap();
        assert_eq!(g, WeightGrid::uniform(2, 2, 1.0).unwrap());
        assert_eq!(g.to_table(), unit_table());
    }

    #[test]
    fn boundary_weight_must_vanish() {
        let mut t = unit_table();
        t[0][1] = 0.5;
        assert_eq!(
            WeightGrid::new(2, 2, &t),
            Err(Error::BoundaryWeightNonzero {
                i: 0,
                j: 1,
                value: 0.5
            })
        );
        let mut t = unit_table();
        t[2][0] = -1.0;
        assert!(matches!(
            WeightGrid::new(2, 2, &t),
            Err(Error::BoundaryWeightNonzero { i: 2, j: 0, .. })
        ));
    }

    #[test]
    fn interior_weight_must_be_positive() {
        let mut t = unit_table();
        t[2][2] = 0.0;
        assert!(matches!(
            WeightGrid::new(2, 2, &t),
            Err(Error::NonpositiveInteriorWeight { i: 2, j: 2, .. })
        ));
        t[2][2] = f64::NAN;
        assert!(WeightGrid::new(2, 2, &t).is_err());
    }

    #[test]
    fn corner_weight_is_ignored() {
        let mut t = unit_table();
        t[0][0] = 42.0;
        assert!(WeightGrid::new(2, 2, &t).is_ok());
    }

    #[test]
    fn shape_is_checked() {
        assert!(matches!(
            WeightGrid::new(2, 2, &unit_table()[..2]),
            Err(Error::TableShape { .. })
        ));
        assert!(matches!(
            WeightGrid::new(0, 2, &[]),
            Err(Error::EmptyGrid { .. })
        ));
    }

    #[test]
    fn flatten_examples() {
        assert_eq!(flatten_index(1, 1, 2, 2).unwrap(), 1);
        assert_eq!(flatten_index(2, 1, 2, 2).unwrap(), 2);
        assert_eq!(flatten_index(1, 2, 2, 2).unwrap(), 3);
        assert!(flatten_index(3, 1, 2, 2).is_err());
        assert!(flatten_index(1, 0, 2, 2).is_err());
        assert_eq!(unflatten_index(3, 2, 2).unwrap(), (1, 2));
        assert!(unflatten_index(5, 2, 2).is_err());
    }

    #[test]
    fn grid_function_layout() {
        let u = GridFunction::from_fn(3, 2, |i, j| (10 * i + j) as f64);
        assert_eq!(u.as_slice(), &[11.0, 21.0, 31.0, 12.0, 22.0, 32.0]);
        assert_eq!(u.get(2, 2), 22.0);
        assert_eq!(u.get(0, 1), 0.0);
        assert_eq!(u.get(3, 3), 0.0);
        assert_eq!(u.norm_inf(), 32.0);
    }

    #[test]
    fn grid_function_json_checks_length() {
        let bad = r#"{"m":2,"n":2,"values":[1.0,2.0]}"#;
        assert!(serde_json::from_str::<GridFunction>(bad).is_err());
        let good = r#"{"m":1,"n":2,"values":[1.0,2.0]}"#;
        let u: GridFunction = serde_json::from_str(good).unwrap();
        assert_eq!(u.get(1, 2), 2.0);
    }
}
