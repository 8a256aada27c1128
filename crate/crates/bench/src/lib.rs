//! Fixtures shared by the criterion benchmarks in `benches/`.

use wbvp_core::grid::WeightGrid;
use wbvp_core::nonlinearity::NonlinearitySpec;
use wbvp_core::problem::ProblemInstance;

/// Deterministic `m x n` grid with smoothly varying weights in `[0.5, 1.5]`.
pub fn wavy_grid(m: usize, n: usize) -> WeightGrid {
    WeightGrid::from_fn(m, n, |i, j| {
        if i == 0 || j == 0 {
            0.0
        } else {
            1.0 + 0.5 * ((i as f64 * 0.7).sin() * (j as f64 * 0.4).cos())
        }
    })
    .expect("admissible weights")
}

pub fn instance(m: usize, n: usize, nonlinearity: NonlinearitySpec) -> ProblemInstance {
    ProblemInstance::new(wavy_grid(m, n), nonlinearity).expect("valid instance")
}
