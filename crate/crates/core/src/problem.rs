use crate::error::{shape_err, Result};
use crate::grid::{flatten_index, WeightGrid};
use crate::nonlinearity::NonlinearitySpec;

/// A complete boundary value problem: weights plus right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    grid: WeightGrid,
    nonlinearity: NonlinearitySpec,
}

impl ProblemInstance {
    pub fn new(grid: WeightGrid, nonlinearity: NonlinearitySpec) -> Result<Self> {
        if let Some((m, n)) = nonlinearity.dims() {
            if (m, n) != (grid.m(), grid.n()) {
                return Err(shape_err(
                    format!("nonlinearity tables of shape {}x{}", grid.m(), grid.n()),
                    format!("{m}x{n}"),
                ));
            }
        }
        Ok(Self { grid, nonlinearity })
    }

    pub fn grid(&self) -> &WeightGrid {
        &self.grid
    }

    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.nonlinearity
    }

    pub fn m(&self) -> usize {
        self.grid.m()
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn order(&self) -> usize {
        self.grid.order()
    }

    pub fn eval_f(&self, i: usize, j: usize, t: f64) -> Result<f64> {
        let k = flatten_index(i, j, self.m(), self.n())?;
        self.nonlinearity.f_at(k - 1, t)
    }

    #[allow(non_snake_case)]
    pub fn eval_F(&self, i: usize, j: usize, t: f64) -> Result<f64> {
        let k = flatten_index(i, j, self.m(), self.n())?;
        self.nonlinearity.primitive_at(k - 1, t)
    }

    /// Same nonlinearity on another weight grid.
    pub fn with_grid(&self, grid: WeightGrid) -> Result<Self> {
        Self::new(grid, self.nonlinearity.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_dims_must_match_grid() {
        let grid = WeightGrid::uniform(2, 2, 1.0).unwrap();
        let nl = NonlinearitySpec::linear(1.0)
            .with_coefficient(1, 4, vec![1.0; 4])
            .unwrap();
        assert!(ProblemInstance::new(grid.clone(), nl).is_err());
        let nl = NonlinearitySpec::linear(1.0)
            .with_coefficient(2, 2, vec![1.0, 2.0, 3.0, 4.0])
            .unwrap();
        let inst = ProblemInstance::new(grid, nl).unwrap();
        assert_eq!(inst.eval_f(1, 2, 1.0).unwrap(), 3.0);
        assert!(inst.eval_f(3, 1, 1.0).is_err());
    }
}
