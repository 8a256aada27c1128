//! The right-hand side `f((i, j), t)` and its primitive `F((i, j), t)`.
//!
//! Built-in kinds are position-separable, `coefficient(i, j) * f(t)`. The
//! tabulated kind covers fully node-dependent nonlinearities on a fixed
//! `t` lattice with linear interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::grid::flatten_index;

/// Absolute tolerance of the adaptive Simpson primitive.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Recursion depth cap of the adaptive Simpson primitive.
pub const QUADRATURE_MAX_DEPTH: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveMode {
    #[default]
    ClosedForm,
    Quadrature,
}

/// Built-in nonlinearity catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    /// `f = slope * t`
    Linear {
        slope: f64,
    },
    /// `f = 2t - t^3`, `F = t^2 - t^4 / 4`
    CubicSoftening,
    /// `f = s * sign(t) |t|^(gamma - 1)`, `F = (s / gamma) |t|^gamma`, `gamma > 1`
    Power {
        s: f64,
        gamma: f64,
    },
    /// `F = t^4 / (1 + t^2)`
    RationalQuartic,
    /// `F = -t^2 exp(-|t|)`
    DampedQuadratic,
    Tabulated(Tabulated),
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Linear { .. } => "linear",
            Kind::CubicSoftening => "cubic_softening",
            Kind::Power { .. } => "power",
            Kind::RationalQuartic => "rational_quartic",
            Kind::DampedQuadratic => "damped_quadratic",
            Kind::Tabulated(_) => "tabulated",
        }
    }

    fn f(&self, node: usize, t: f64) -> Result<f64> {
        Ok(match self {
            Kind::Linear { slope } => slope * t,
            Kind::CubicSoftening => 2.0 * t - t * t * t,
            Kind::Power { s, gamma } => {
                if t == 0.0 {
                    0.0
                } else {
                    s * t.signum() * t.abs().powf(gamma - 1.0)
                }
            }
            Kind::RationalQuartic => {
                let t2 = t * t;
                let d = 1.0 + t2;
                2.0 * t * t2 * (2.0 + t2) / (d * d)
            }
            Kind::DampedQuadratic => (t * t.abs() - 2.0 * t) * (-t.abs()).exp(),
            Kind::Tabulated(tab) => tab.f(node, t)?,
        })
    }

    fn primitive(&self, node: usize, t: f64) -> Result<f64> {
        Ok(match self {
            Kind::Linear { slope } => 0.5 * slope * t * t,
            Kind::CubicSoftening => {
                let t2 = t * t;
                t2 - 0.25 * t2 * t2
            }
            Kind::Power { s, gamma } => s / gamma * t.abs().powf(*gamma),
            Kind::RationalQuartic => {
                let t2 = t * t;
                t2 * t2 / (1.0 + t2)
            }
            Kind::DampedQuadratic => -t * t * (-t.abs()).exp(),
            Kind::Tabulated(tab) => tab.primitive(node, t)?,
        })
    }

    /// `f'(t)` where a closed form exists and is finite.
    fn derivative(&self, t: f64) -> Option<f64> {
        match self {
            Kind::Linear { slope } => Some(*slope),
            Kind::CubicSoftening => Some(2.0 - 3.0 * t * t),
            Kind::Power { s, gamma } => {
                if t == 0.0 {
                    if *gamma > 2.0 {
                        Some(0.0)
                    } else if *gamma == 2.0 {
                        Some(*s)
                    } else {
                        None
                    }
                } else {
                    Some(s * (gamma - 1.0) * t.abs().powf(gamma - 2.0))
                }
            }
            Kind::RationalQuartic => {
                let t2 = t * t;
                let d = 1.0 + t2;
                Some(2.0 * t2 * (6.0 + 3.0 * t2 + t2 * t2) / (d * d * d))
            }
            Kind::DampedQuadratic => {
                let a = t.abs();
                Some((-2.0 + 4.0 * a - a * a) * (-a).exp())
            }
            Kind::Tabulated(_) => None,
        }
    }
}

/// Piecewise-linear `f` on an ascending lattice `t_0 < ... < t_K` that
/// brackets zero. Values are shared by all nodes or given per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    knots: Vec<f64>,
    // one row per node (or a single shared row), each of len knots.len()
    rows: Vec<Vec<f64>>,
    // integral of the interpolant from 0 to each knot, per row
    integrals: Vec<Vec<f64>>,
    dims: Option<(usize, usize)>,
}

impl Tabulated {
    /// A single value row shared by all nodes.
    pub fn shared(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::build(knots, vec![values], None)
    }

    /// Per-node rows in flattened node order (`(j - 1) * m + i`).
    pub fn per_node(m: usize, n: usize, knots: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != m * n {
            return Err(shape_err(format!("{} node rows", m * n), rows.len()));
        }
        Self::build(knots, rows, Some((m, n)))
    }

    fn build(knots: Vec<f64>, rows: Vec<Vec<f64>>, dims: Option<(usize, usize)>) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidParameter {
            name: "t".into(),
            reason: reason.into(),
        };
        if knots.len() < 2 {
            return Err(bad("need at least two lattice points"));
        }
        if knots.iter().any(|t| !t.is_finite()) {
            return Err(bad("lattice points must be finite"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("lattice must be strictly ascending"));
        }
        if knots[0] > 0.0 || *knots.last().unwrap() < 0.0 {
            return Err(bad("lattice must contain t = 0"));
        }
        for row in &rows {
            if row.len() != knots.len() {
                return Err(shape_err(
                    format!("{} values per row", knots.len()),
                    row.len(),
                ));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "values".into(),
                    reason: "tabulated values must be finite".into(),
                });
            }
        }
        let integrals = rows
            .iter()
            .map(|row| {
                // cumulative trapezoid from t_0, then shift so the integral at 0 vanishes
                let mut cum = Vec::with_capacity(knots.len());
                cum.push(0.0);
                for k in 1..knots.len() {
                    let h = knots[k] - knots[k - 1];
                    cum.push(cum[k - 1] + 0.5 * h * (row[k] + row[k - 1]));
                }
                let at_zero = interp_integral(&knots, row, &cum, 0.0);
                cum.iter().map(|c| c - at_zero).collect()
            })
            .collect();
        Ok(Self {
            knots,
            rows,
            integrals,
            dims,
        })
    }

    /// Value rows: one shared row, or one per node in flattened order.
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    fn row(&self, node: usize) -> usize {
        if self.rows.len() == 1 {
            0
        } else {
            node
        }
    }

    fn check_range(&self, t: f64) -> Result<()> {
        let lo = self.knots[0];
        let hi = *self.knots.last().unwrap();
        if t >= lo && t <= hi {
            Ok(())
        } else {
            Err(Error::TabulatedOutOfRange { t, lo, hi })
        }
    }

    fn f(&self, node: usize, t: f64) -> Result<f64> {
        self.check_range(t)?;
        let row = &self.rows[self.row(node)];
        let k = segment(&self.knots, t);
        let (t0, t1) = (self.knots[k], self.knots[k + 1]);
        let w = (t - t0) / (t1 - t0);
        Ok(row[k] + w * (row[k + 1] - row[k]))
    }

    fn primitive(&self, node: usize, t: f64) -> Result<f64> {
        self.check_range(t)?;
        let r = self.row(node);
        Ok(interp_integral(
            &self.knots,
            &self.rows[r],
            &self.integrals[r],
            t,
        ))
    }
}

fn segment(knots: &[f64], t: f64) -> usize {
    // index k with knots[k] <= t <= knots[k + 1]
    let pos = knots.partition_point(|&x| x <= t);
    pos.saturating_sub(1).min(knots.len() - 2)
}

fn interp_integral(knots: &[f64], row: &[f64], cum: &[f64], t: f64) -> f64 {
    let k = segment(knots, t);
    let (t0, t1) = (knots[k], knots[k + 1]);
    let h = t - t0;
    let slope = (row[k + 1] - row[k]) / (t1 - t0);
    cum[k] + h * row[k] + 0.5 * slope * h * h
}

/// A nonlinearity: catalog kind, optional per-node coefficient and the way
/// its primitive is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    kind: Kind,
    // flattened node order
    coefficient: Option<Vec<f64>>,
    dims: Option<(usize, usize)>,
    mode: PrimitiveMode,
}

impl NonlinearitySpec {
    pub fn new(kind: Kind) -> Result<Self> {
        match &kind {
            Kind::Linear { slope } if !slope.is_finite() => {
                return Err(invalid("slope", "must be finite"));
            }
            Kind::Power { s, gamma } => {
                if !s.is_finite() {
                    return Err(invalid("s", "must be finite"));
                }
                if !(gamma.is_finite() && *gamma > 1.0) {
                    return Err(invalid("gamma", "must be finite and greater than 1"));
                }
            }
            _ => {}
        }
        let dims = match &kind {
            Kind::Tabulated(t) => t.dims(),
            _ => None,
        };
        Ok(Self {
            kind,
            coefficient: None,
            dims,
            mode: PrimitiveMode::ClosedForm,
        })
    }

    pub fn linear(slope: f64) -> Self {
        Self::new(Kind::Linear { slope }).expect("finite slope")
    }

    pub fn cubic_softening() -> Self {
        Self::new(Kind::CubicSoftening).unwrap()
    }

    pub fn power(s: f64, gamma: f64) -> Result<Self> {
        Self::new(Kind::Power { s, gamma })
    }

    pub fn rational_quartic() -> Self {
        Self::new(Kind::RationalQuartic).unwrap()
    }

    pub fn damped_quadratic() -> Self {
        Self::new(Kind::DampedQuadratic).unwrap()
    }

    /// Attaches a per-node coefficient table, flattened in node order.
    pub fn with_coefficient(mut self, m: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != m * n {
            return Err(shape_err(format!("{} coefficients", m * n), values.len()));
        }
        if values.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coefficient", "entries must be finite"));
        }
        if let Some(d) = self.dims {
            if d != (m, n) {
                return Err(shape_err(format!("{}x{}", d.0, d.1), format!("{m}x{n}")));
            }
        }
        self.coefficient = Some(values);
        self.dims = Some((m, n));
        Ok(self)
    }

    pub fn with_mode(mut self, mode: PrimitiveMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn mode(&self) -> PrimitiveMode {
        self.mode
    }

    /// Grid dimensions this spec is tied to, if any.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    pub fn coefficient(&self) -> Option<&[f64]> {
        self.coefficient.as_deref()
    }

    #[inline]
    fn coeff(&self, node: usize) -> f64 {
        self.coefficient.as_ref().map_or(1.0, |c| c[node])
    }

    fn node_index(&self, i: usize, j: usize) -> Result<usize> {
        match self.dims {
            Some((m, n)) => Ok(flatten_index(i, j, m, n)? - 1),
            None if i >= 1 && j >= 1 => Ok(0),
            None => Err(Error::IndexOutOfRange { i, j, m: 0, n: 0 }),
        }
    }

    /// `f((i, j), t)` with 1-based node indices.
    pub fn eval_f(&self, node: (usize, usize), t: f64) -> Result<f64> {
        let k = self.node_index(node.0, node.1)?;
        self.f_at(k, t)
    }

    /// `F((i, j), t)`, the primitive of `f` vanishing at zero.
    #[allow(non_snake_case)]
    pub fn eval_F(&self, node: (usize, usize), t: f64) -> Result<f64> {
        let k = self.node_index(node.0, node.1)?;
        self.primitive_at(k, t)
    }

    /// `f` at the 0-based flattened node `k`.
    #[inline]
    pub fn f_at(&self, k: usize, t: f64) -> Result<f64> {
        Ok(self.coeff(k) * self.kind.f(k, t)?)
    }

    /// `F` at the 0-based flattened node `k`, honouring the primitive mode.
    pub fn primitive_at(&self, k: usize, t: f64) -> Result<f64> {
        match self.mode {
            PrimitiveMode::ClosedForm => Ok(self.coeff(k) * self.kind.primitive(k, t)?),
            PrimitiveMode::Quadrature => self.quadrature_primitive(k, t),
        }
    }

    /// `f'` at node `k`: closed form when the catalog has one, otherwise a
    /// central difference with step `1e-7 * (1 + |t|)`.
    pub fn derivative_at(&self, k: usize, t: f64) -> Result<f64> {
        match self.kind.derivative(t) {
            Some(d) => Ok(self.coeff(k) * d),
            None => {
                let h = 1e-7 * (1.0 + t.abs());
                let fp = self.f_at(k, t + h);
                let fm = self.f_at(k, t - h);
                match (fp, fm) {
                    (Ok(a), Ok(b)) => Ok((a - b) / (2.0 * h)),
                    // one-sided at a table edge
                    (Ok(a), Err(_)) => Ok((a - self.f_at(k, t)?) / h),
                    (Err(_), Ok(b)) => Ok((self.f_at(k, t)? - b) / h),
                    (Err(e), Err(_)) => Err(e),
                }
            }
        }
    }

    fn quadrature_primitive(&self, k: usize, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        // x = t y^3 tames the |x|^(gamma - 2) derivative singularity at 0
        let g = |y: f64| Ok(self.f_at(k, t * y * y * y)? * 3.0 * t * y * y);
        adaptive_simpson(&g, 0.0, 1.0, QUADRATURE_TOL, QUADRATURE_MAX_DEPTH).map_err(|e| match e {
            Error::QuadratureNonconvergent { .. } => Error::QuadratureNonconvergent { t },
            other => other,
        })
    }
}

fn invalid(name: &str, reason: &str) -> Error {
    Error::InvalidParameter {
        name: name.into(),
        reason: reason.into(),
    }
}

/// Adaptive composite Simpson rule for `int_a^b g`, absolute tolerance `tol`.
pub fn adaptive_simpson(
    g: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    let fa = g(a)?;
    let fb = g(b)?;
    let c = 0.5 * (a + b);
    let fc = g(c)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(g, a, b, fa, fc, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    g: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fc: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = g(d)?;
    let fe = g(e)?;
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || !delta.is_finite() {
        return Err(Error::QuadratureNonconvergent { t: b });
    }
    let l = simpson_step(g, a, c, fa, fd, fc, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(g, c, b, fc, fe, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_values() {
        let cubic = NonlinearitySpec::cubic_softening();
        assert_eq!(cubic.eval_f((1, 1), 1.0).unwrap(), 1.0);
        assert_eq!(cubic.eval_F((1, 1), 1.0).unwrap(), 0.75);

        let pow = NonlinearitySpec::power(1.5, 1.5).unwrap();
        assert_eq!(pow.eval_f((1, 1), 0.0).unwrap(), 0.0);
        assert_eq!(pow.eval_F((1, 1), 1.0).unwrap(), 1.0);
        assert_eq!(pow.eval_F((1, 1), -4.0).unwrap(), 8.0);

        let lin = NonlinearitySpec::linear(2.0)
            .with_coefficient(1, 1, vec![5.0])
            .unwrap();
        assert_eq!(lin.eval_f((1, 1), 2.0).unwrap(), 20.0);
        assert!(lin.eval_f((2, 1), 2.0).is_err());
    }

    #[test]
    fn primitive_vanishes_at_zero() {
        let tab = Tabulated::shared(vec![-1.0, 0.5, 2.0], vec![3.0, -1.0, 4.0]).unwrap();
        let specs = [
            NonlinearitySpec::linear(2.0),
            NonlinearitySpec::cubic_softening(),
            NonlinearitySpec::power(1.5, 1.5).unwrap(),
            NonlinearitySpec::rational_quartic(),
            NonlinearitySpec::damped_quadratic(),
            NonlinearitySpec::new(Kind::Tabulated(tab)).unwrap(),
        ];
        for spec in &specs {
            assert_eq!(
                spec.eval_F((1, 1), 0.0).unwrap(),
                0.0,
                "{}",
                spec.kind().name()
            );
            let q = spec.clone().with_mode(PrimitiveMode::Quadrature);
            assert_eq!(q.eval_F((1, 1), 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let lin = NonlinearitySpec::linear(2.0).with_mode(PrimitiveMode::Quadrature);
        assert!((lin.eval_F((1, 1), 3.0).unwrap() - 9.0).abs() <= 1e-10);

        let pow = NonlinearitySpec::power(1.5, 1.5).unwrap();
        let q = pow.clone().with_mode(PrimitiveMode::Quadrature);
        for t in [-2.0, -0.3, 0.7, 1.9] {
            let exact = pow.eval_F((1, 1), t).unwrap();
            assert!((q.eval_F((1, 1), t).unwrap() - exact).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn tabulated_interpolates_and_integrates() {
        // f(t) = t on [-1, 2], F = t^2 / 2
        let tab = Tabulated::shared(vec![-1.0, 0.0, 1.0, 2.0], vec![-1.0, 0.0, 1.0, 2.0]).unwrap();
        let spec = NonlinearitySpec::new(Kind::Tabulated(tab)).unwrap();
        assert!((spec.eval_f((1, 1), 0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!((spec.eval_F((1, 1), 1.5).unwrap() - 1.125).abs() < 1e-15);
        assert!((spec.eval_F((1, 1), -0.5).unwrap() - 0.125).abs() < 1e-15);
        assert!(matches!(
            spec.eval_f((1, 1), 2.5),
            Err(Error::TabulatedOutOfRange { .. })
        ));
    }

    #[test]
    fn tabulated_lattice_must_bracket_zero() {
        assert!(Tabulated::shared(vec![0.5, 1.0], vec![1.0, 1.0]).is_err());
        assert!(Tabulated::shared(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn per_node_tabulation() {
        let rows = vec![vec![0.0, 1.0], vec![0.0, 3.0]];
        let tab = Tabulated::per_node(2, 1, vec![0.0, 1.0], rows).unwrap();
        let spec = NonlinearitySpec::new(Kind::Tabulated(tab)).unwrap();
        assert_eq!(spec.dims(), Some((2, 1)));
        assert_eq!(spec.eval_f((2, 1), 1.0).unwrap(), 3.0);
        assert_eq!(spec.eval_F((1, 1), 1.0).unwrap(), 0.5);
    }

    #[test]
    fn power_exponent_validated() {
        assert!(NonlinearitySpec::power(1.0, 1.0).is_err());
        assert!(NonlinearitySpec::power(f64::NAN, 3.0).is_err());
    }

    #[test]
    fn closed_form_derivatives_match_differences() {
        let specs = [
            NonlinearitySpec::cubic_softening(),
            NonlinearitySpec::power(1.5, 1.5).unwrap(),
            NonlinearitySpec::power(2.0, 3.5).unwrap(),
            NonlinearitySpec::rational_quartic(),
            NonlinearitySpec::damped_quadratic(),
        ];
        for spec in &specs {
            for t in [-2.3, -0.7, 0.2, 1.1, 3.4] {
                let h = 1e-6;
                let fd = (spec.f_at(0, t + h).unwrap() - spec.f_at(0, t - h).unwrap()) / (2.0 * h);
                let d = spec.derivative_at(0, t).unwrap();
                assert!(
                    (fd - d).abs() <= 1e-6 * (1.0 + d.abs()),
                    "{} t={t}",
                    spec.kind().name()
                );
            }
        }
    }
}
