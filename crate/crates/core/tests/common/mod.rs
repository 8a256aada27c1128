#![allow(dead_code)]

use proptest::prelude::*;
use wbvp_core::grid::{GridFunction, WeightGrid};
use wbvp_core::nonlinearity::{Kind, NonlinearitySpec, PrimitiveMode, Tabulated};
use wbvp_core::problem::ProblemInstance;

/// `(m+1) x (n+1)` weight table with zero left/bottom lines.
pub fn weight_table(max: usize) -> impl Strategy<Value = (usize, usize, Vec<Vec<f64>>)> {
    (1..=max, 1..=max).prop_flat_map(|(m, n)| {
        proptest::collection::vec(proptest::collection::vec(0.1f64..10.0, n + 1), m + 1).prop_map(
            move |mut t| {
                for (i, row) in t.iter_mut().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        if i == 0 || j == 0 {
                            *v = 0.0;
                        }
                    }
                }
                (m, n, t)
            },
        )
    })
}

pub fn grid(max: usize) -> impl Strategy<Value = WeightGrid> {
    weight_table(max).prop_map(|(m, n, t)| WeightGrid::new(m, n, &t).unwrap())
}

pub fn grid_with_vec(max: usize, amp: f64) -> impl Strategy<Value = (WeightGrid, Vec<f64>)> {
    grid(max).prop_flat_map(move |g| {
        let len = g.order();
        (Just(g), proptest::collection::vec(-amp..amp, len))
    })
}

/// `-D1(p(i-1,j) D1 u(i-1,j)) - D2(p(i,j-1) D2 u(i,j-1))` evaluated from
/// the forward differences with `u` padded by zeros.
pub fn operator_oracle(g: &WeightGrid, u: &[f64]) -> Vec<f64> {
    let (m, n) = (g.m(), g.n());
    let at = |i: usize, j: usize| -> f64 {
        if i == 0 || j == 0 || i > m || j > n {
            0.0
        } else {
            u[(j - 1) * m + (i - 1)]
        }
    };
    let d1 = |i: usize, j: usize| at(i + 1, j) - at(i, j);
    let d2 = |i: usize, j: usize| at(i, j + 1) - at(i, j);
    let mut out = vec![0.0; m * n];
    for j in 1..=n {
        for i in 1..=m {
            let x = g.p(i, j) * d1(i, j) - g.p(i - 1, j) * d1(i - 1, j);
            let y = g.p(i, j) * d2(i, j) - g.p(i, j - 1) * d2(i, j - 1);
            out[(j - 1) * m + (i - 1)] = -x - y;
        }
    }
    out
}

/// Dense matrix whose columns are the operator applied to unit vectors.
pub fn dense_oracle(g: &WeightGrid) -> Vec<Vec<f64>> {
    let len = g.order();
    let mut cols = Vec::with_capacity(len);
    for k in 0..len {
        let mut e = vec![0.0; len];
        e[k] = 1.0;
        cols.push(operator_oracle(g, &e));
    }
    (0..len)
        .map(|r| (0..len).map(|c| cols[c][r]).collect())
        .collect()
}

pub fn quad_form(a: &[Vec<f64>], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for (r, row) in a.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            s += x[r] * v * x[c];
        }
    }
    s
}

/// Built-in kinds with random parameters; every member is evaluable on
/// `[-3, 3]`.
pub fn kind() -> impl Strategy<Value = Kind> {
    prop_oneof![
        (-3.0f64..3.0).prop_map(|slope| Kind::Linear { slope }),
        Just(Kind::CubicSoftening),
        (0.1f64..3.0, 1.1f64..4.0).prop_map(|(s, gamma)| Kind::Power { s, gamma }),
        Just(Kind::RationalQuartic),
        Just(Kind::DampedQuadratic),
        proptest::collection::vec(-2.0f64..2.0, 7).prop_map(|v| {
            let knots = vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
            Kind::Tabulated(Tabulated::shared(knots, v).unwrap())
        }),
    ]
}

pub fn mode() -> impl Strategy<Value = PrimitiveMode> {
    prop_oneof![
        Just(PrimitiveMode::ClosedForm),
        Just(PrimitiveMode::Quadrature)
    ]
}

/// Instance on a random grid with a random catalog member and optional
/// per-node coefficient.
pub fn instance(max: usize) -> impl Strategy<Value = ProblemInstance> {
    (grid(max), kind(), mode(), any::<bool>()).prop_flat_map(|(g, k, md, coef)| {
        let len = g.order();
        let (m, n) = (g.m(), g.n());
        proptest::collection::vec(0.2f64..3.0, len).prop_map(move |c| {
            let mut nl = NonlinearitySpec::new(k.clone()).unwrap().with_mode(md);
            if coef {
                nl = nl.with_coefficient(m, n, c).unwrap();
            }
            ProblemInstance::new(g.clone(), nl).unwrap()
        })
    })
}

pub fn one_node(nl: NonlinearitySpec) -> ProblemInstance {
    ProblemInstance::new(WeightGrid::uniform(1, 1, 1.0).unwrap(), nl).unwrap()
}

pub fn unit_square(nl: NonlinearitySpec) -> ProblemInstance {
    ProblemInstance::new(WeightGrid::uniform(2, 2, 1.0).unwrap(), nl).unwrap()
}

pub fn gf(g: &WeightGrid, v: Vec<f64>) -> GridFunction {
    GridFunction::from_flat(g.m(), g.n(), v).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
