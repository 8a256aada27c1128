//! Parameter thresholds of the existence regimes and sampled audits of the
//! hypotheses on `F` behind them.
//!
//! Limit hypotheses (behaviour of `F/t^2` as `t -> 0` or `|t| -> inf`) can
//! only be probed at finitely many points; their reports carry
//! `evidence_only = true`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::solvers::Method;
use crate::spectral::SpectrumSummary;

/// Uniform samples per node when bracketing `max_{|t|<=alpha} F`.
pub const MAX_SEARCH_SAMPLES: usize = 10_000;
pub const GOLDEN_TOL: f64 = 1e-12;
pub const MIN_HYPOTHESIS_SAMPLES: usize = 100;
/// `F/t^2` at the smallest probe must exceed this for the blow-up test.
pub const BLOWUP_RATIO: f64 = 1e3;
/// `|F/t^2|` at the smallest probe must stay below this for the vanishing test.
pub const VANISHING_RATIO: f64 = 1e-3;
pub const DEFAULT_HYPOTHESIS_SAMPLES: usize = 1000;

/// A per-node quantity given either as one value for every node or as an
/// `m x n` table indexed `[i-1][j-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeTable {
    Scalar(f64),
    Table(Vec<Vec<f64>>),
}

impl NodeTable {
    /// Value at the 1-based node `(i, j)`; the shape must have been validated.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        match self {
            NodeTable::Scalar(v) => *v,
            NodeTable::Table(rows) => rows[i - 1][j - 1],
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            NodeTable::Scalar(v) => *v,
            NodeTable::Table(rows) => rows.iter().flatten().copied().fold(f64::INFINITY, f64::min),
        }
    }

    fn validate(&self, name: &str, m: usize, n: usize, positive: bool) -> Result<()> {
        let values: Vec<f64> = match self {
            NodeTable::Scalar(v) => vec![*v],
            NodeTable::Table(rows) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidParameter {
                        name: name.into(),
                        reason: format!("table must be {m} x {n}"),
                    });
                }
                rows.iter().flatten().copied().collect()
            }
        };
        for v in values {
            if !v.is_finite() || (positive && v <= 0.0) {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: if positive {
                        "entries must be positive and finite".into()
                    } else {
                        "entries must be finite".into()
                    },
                });
            }
        }
        Ok(())
    }
}

/// Constants of the hypotheses. Every field is optional; a threshold or a
/// check is only computed when its inputs are present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisParams {
    /// Radius of the sup-norm ball for `lambda_star`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_cut: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_growth: Option<f64>,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub cap_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_table: Option<NodeTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_table: Option<NodeTable>,
    #[serde(default, rename = "M_cut", skip_serializing_if = "Option::is_none")]
    pub m_cut: Option<f64>,
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::InvalidParameter {
            name: name.into(),
            reason: "must be positive and finite".into(),
        }),
        _ => Ok(()),
    }
}

fn need(name: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::MissingParameter(name.into()))
}

impl HypothesisParams {
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        positive("alpha", self.alpha)?;
        positive("c", self.c)?;
        positive("eta", self.eta)?;
        positive("a", self.a)?;
        positive("T", self.t_cut)?;
        positive("A", self.cap_a)?;
        positive("M_cut", self.m_cut)?;
        if let Some(b) = self.b {
            if !b.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "b".into(),
                    reason: "must be finite".into(),
                });
            }
        }
        if let Some(g) = self.alpha_growth {
            if !(g > 1.0 && g < 2.0) {
                return Err(Error::InvalidParameter {
                    name: "alpha_growth".into(),
                    reason: "must lie in (1, 2)".into(),
                });
            }
        }
        if let Some(t) = &self.alpha_table {
            t.validate("alpha_table", m, n, true)?;
        }
        if let Some(t) = &self.beta_table {
            t.validate("beta_table", m, n, false)?;
        }
        Ok(())
    }

    pub fn alpha_minus(&self) -> Option<f64> {
        self.alpha_table.as_ref().map(NodeTable::min)
    }

    pub fn beta_minus(&self) -> Option<f64> {
        self.beta_table.as_ref().map(NodeTable::min)
    }
}

/// Spectrum-dependent parameter thresholds together with their inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub lambda_1: f64,
    pub lambda_mn: f64,
    /// `lambda_1 alpha^2 / (2 sum max_{|t|<=alpha} F)`; local minimizer below it.
    pub lambda_star: Option<f64>,
    /// `lambda_mn / (2 c)`; coercive minimizer above it.
    pub lambda_42_lower: Option<f64>,
    /// `lambda_1 / (2 A)`; coercive minimizer below it.
    pub lambda_43_upper: Option<f64>,
    /// `lambda_mn / (2 alpha_minus)`; mountain pass above it.
    pub lambda_44_lower: Option<f64>,
    pub alpha: Option<f64>,
    pub c: Option<f64>,
    #[serde(rename = "A")]
    pub cap_a: Option<f64>,
    pub alpha_minus: Option<f64>,
}

/// Golden-section maximization of `g` on `[lo, hi]`.
fn golden_max(
    g: &dyn Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = g(x1)?;
    let mut f2 = g(x2)?;
    // the cap ends the loop when tol is below the resolution of t
    for _ in 0..300 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = g(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = g(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// `max_{|t| <= alpha} F(k, t)` at the 0-based node `k`: dense uniform
/// sampling, then golden-section refinement between the neighbours of the
/// best sample.
pub fn max_primitive_on_ball(instance: &ProblemInstance, k: usize, alpha: f64) -> Result<f64> {
    let nl = instance.nonlinearity();
    let g = |t: f64| nl.primitive_at(k, t);
    let n = MAX_SEARCH_SAMPLES;
    let h = 2.0 * alpha / (n - 1) as f64;
    let at = |s: usize| {
        if s == n - 1 {
            alpha
        } else {
            -alpha + s as f64 * h
        }
    };
    let mut best = (0, f64::NEG_INFINITY);
    for s in 0..n {
        let v = g(at(s))?;
        if v > best.1 {
            best = (s, v);
        }
    }
    let lo = at(best.0.saturating_sub(1));
    let hi = at((best.0 + 1).min(n - 1));
    let (_, refined) = golden_max(&g, lo, hi, GOLDEN_TOL)?;
    // t = 0 is not on the even-sized grid but always admissible
    Ok(best.1.max(refined).max(g(0.0)?))
}

/// `lambda_star = lambda_1 alpha^2 / (2 sum_nodes max_{|t|<=alpha} F)`.
pub fn threshold_lambda_star(
    instance: &ProblemInstance,
    spectrum: &SpectrumSummary,
    alpha: f64,
) -> Result<f64> {
    positive("alpha", Some(alpha))?;
    let sum = if instance.nonlinearity().dims().is_none() {
        // identical nodes
        instance.order() as f64 * max_primitive_on_ball(instance, 0, alpha)?
    } else {
        let mut s = 0.0;
        for k in 0..instance.order() {
            s += max_primitive_on_ball(instance, k, alpha)?;
        }
        s
    };
    if !(sum > 0.0) {
        return Err(Error::NonpositiveDenominator { sum });
    }
    Ok(spectrum.lambda_min * alpha * alpha / (2.0 * sum))
}

pub fn thresholds(
    instance: &ProblemInstance,
    spectrum: &SpectrumSummary,
    params: &HypothesisParams,
) -> Result<ThresholdReport> {
    params.validate(instance.m(), instance.n())?;
    let lambda_star = match params.alpha {
        Some(a) => Some(threshold_lambda_star(instance, spectrum, a)?),
        None => None,
    };
    let alpha_minus = params.alpha_minus();
    Ok(ThresholdReport {
        lambda_1: spectrum.lambda_min,
        lambda_mn: spectrum.lambda_max,
        lambda_star,
        lambda_42_lower: params.c.map(|c| spectrum.lambda_max / (2.0 * c)),
        lambda_43_upper: params.cap_a.map(|a| spectrum.lambda_min / (2.0 * a)),
        lambda_44_lower: alpha_minus.map(|a| spectrum.lambda_max / (2.0 * a)),
        alpha: params.alpha,
        c: params.c,
        cap_a: params.cap_a,
        alpha_minus,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    /// `F/t^2 -> +inf` as `t -> 0`.
    H1,
    /// `F < -c t^2` for `0 < |t| < eta`.
    H2,
    /// `F > c t^2` for `0 < |t| < eta`; the sign-flipped reading of `H2`.
    H2prime,
    /// `F < a |t|^alpha_growth + b` for `|t| >= T`.
    H3,
    /// `limsup F/t^2 < A` as `|t| -> inf`.
    H4,
    /// `F >= alpha(i,j) t^2 + beta(i,j)` for `|t| > M_cut`.
    H5,
    /// `F/t^2 -> 0` as `t -> 0`.
    H6,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 7] = [
        Hypothesis::H1,
        Hypothesis::H2,
        Hypothesis::H2prime,
        Hypothesis::H3,
        Hypothesis::H4,
        Hypothesis::H5,
        Hypothesis::H6,
    ];

    pub fn is_limit(self) -> bool {
        matches!(self, Hypothesis::H1 | Hypothesis::H4 | Hypothesis::H6)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h1" => Some(Hypothesis::H1),
            "h2" => Some(Hypothesis::H2),
            "h2prime" | "h2'" | "h2p" => Some(Hypothesis::H2prime),
            "h3" => Some(Hypothesis::H3),
            "h4" => Some(Hypothesis::H4),
            "h5" => Some(Hypothesis::H5),
            "h6" => Some(Hypothesis::H6),
            _ => None,
        }
    }

    /// Probe range of `|t|` used when none is given.
    pub fn default_range(self, params: &HypothesisParams) -> (f64, f64) {
        let tail = |start: f64| (start, 1e3 * start.max(1.0));
        match self {
            Hypothesis::H1 | Hypothesis::H6 => (1e-8, 1e-1),
            Hypothesis::H2 | Hypothesis::H2prime => (0.0, params.eta.unwrap_or(1.0)),
            Hypothesis::H3 => tail(params.t_cut.unwrap_or(1.0)),
            Hypothesis::H4 => (1e2, 1e8),
            Hypothesis::H5 => tail(params.m_cut.unwrap_or(1.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleGrid {
    Uniform,
    Geometric,
}

/// First sample contradicting a hypothesis. `value = F((i, j), t)`; `bound`
/// is the threshold `F` had to respect at that point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheckReport {
    pub hypothesis: Hypothesis,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// Range of `|t|`; both signs are probed.
    pub sampled_range: (f64, f64),
    pub sample_count: usize,
    pub grid: SampleGrid,
    /// True for limit hypotheses: a finite sample is evidence, not proof.
    pub evidence_only: bool,
}

fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|s| {
            if s == n - 1 {
                hi
            } else {
                lo + (hi - lo) * s as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Geometric grid from `hi` down to `lo`.
fn geometric_grid_desc(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let ratio = (lo / hi).ln();
    (0..n)
        .map(|s| match s {
            0 => hi,
            _ if s == n - 1 => lo,
            _ => hi * (ratio * s as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Samples `F` at `+-t` for the given magnitudes at every node, in node
/// order, calling `visit(i, j, t, F)` until it returns a witness.
fn scan(
    instance: &ProblemInstance,
    ts: &[f64],
    mut visit: impl FnMut(usize, usize, f64, f64) -> Option<Witness>,
) -> Result<Option<Witness>> {
    for j in 1..=instance.n() {
        for i in 1..=instance.m() {
            for &t in ts {
                for s in [t, -t] {
                    let v = instance.eval_F(i, j, s)?;
                    if let Some(w) = visit(i, j, s, v) {
                        return Ok(Some(w));
                    }
                    if t == 0.0 {
                        break;
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Audits one hypothesis by sampling `samples` magnitudes `|t|` in
/// `t_range` (uniform for inequalities, geometric for limits) at every node
/// and both signs.
///
/// Limit hypotheses use these finite-sample criteria:
/// `H1`: `F/t^2 >= 1e3` at the smallest `|t|`;
/// `H6`: `|F/t^2| <= 1e-3` at the smallest `|t|` and non-increasing as `|t|`
/// shrinks; `H4`: `F/t^2 < A` at every sample.
pub fn check_hypothesis(
    instance: &ProblemInstance,
    which: Hypothesis,
    params: &HypothesisParams,
    t_range: (f64, f64),
    samples: usize,
) -> Result<HypothesisCheckReport> {
    params.validate(instance.m(), instance.n())?;
    let (lo, hi) = t_range;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(Error::RangeInvalid(format!(
            "need 0 <= t_lo < t_hi, got ({lo}, {hi})"
        )));
    }
    if samples < MIN_HYPOTHESIS_SAMPLES {
        return Err(Error::RangeInvalid(format!(
            "need at least {MIN_HYPOTHESIS_SAMPLES} samples, got {samples}"
        )));
    }
    let geometric = which.is_limit();
    if geometric && lo == 0.0 {
        return Err(Error::RangeInvalid(
            "a geometric grid needs t_lo > 0".into(),
        ));
    }
    let ts = if geometric {
        geometric_grid_desc(lo, hi, samples)
    } else {
        uniform_grid(lo, hi, samples)
    };

    let witness = match which {
        Hypothesis::H2 | Hypothesis::H2prime => {
            let c = need("c", params.c)?;
            let eta = need("eta", params.eta)?;
            let inside: Vec<f64> = ts.iter().copied().filter(|&t| t > 0.0 && t < eta).collect();
            if inside.is_empty() {
                return Err(Error::RangeInvalid(format!(
                    "no samples with 0 < |t| < eta = {eta}"
                )));
            }
            let upper = which == Hypothesis::H2;
            scan(instance, &inside, |i, j, t, v| {
                let bound = if upper { -c * t * t } else { c * t * t };
                let ok = if upper { v < bound } else { v > bound };
                (!ok).then_some(Witness {
                    i,
                    j,
                    t,
                    value: v,
                    bound,
                })
            })?
        }
        Hypothesis::H3 => {
            let a = need("a", params.a)?;
            let b = need("b", params.b)?;
            let t_cut = need("T", params.t_cut)?;
            let g = need("alpha_growth", params.alpha_growth)?;
            let tail: Vec<f64> = ts.iter().copied().filter(|&t| t >= t_cut).collect();
            if tail.is_empty() {
                return Err(Error::RangeInvalid(format!(
                    "no samples with |t| >= T = {t_cut}"
                )));
            }
            scan(instance, &tail, |i, j, t, v| {
                let bound = a * t.abs().powf(g) + b;
                (v >= bound).then_some(Witness {
                    i,
                    j,
                    t,
                    value: v,
                    bound,
                })
            })?
        }
        Hypothesis::H5 => {
            let alpha = params
                .alpha_table
                .as_ref()
                .ok_or_else(|| Error::MissingParameter("alpha_table".into()))?;
            let beta = params
                .beta_table
                .as_ref()
                .ok_or_else(|| Error::MissingParameter("beta_table".into()))?;
            let m_cut = need("M_cut", params.m_cut)?;
            let tail: Vec<f64> = ts.iter().copied().filter(|&t| t > m_cut).collect();
            if tail.is_empty() {
                return Err(Error::RangeInvalid(format!(
                    "no samples with |t| > M_cut = {m_cut}"
                )));
            }
            scan(instance, &tail, |i, j, t, v| {
                let bound = alpha.at(i, j) * t * t + beta.at(i, j);
                (v < bound).then_some(Witness {
                    i,
                    j,
                    t,
                    value: v,
                    bound,
                })
            })?
        }
        Hypothesis::H4 => {
            let cap = need("A", params.cap_a)?;
            scan(instance, &ts, |i, j, t, v| {
                let bound = cap * t * t;
                (v / (t * t) >= cap).then_some(Witness {
                    i,
                    j,
                    t,
                    value: v,
                    bound,
                })
            })?
        }
        Hypothesis::H1 => {
            let smallest = [lo];
            scan(instance, &smallest, |i, j, t, v| {
                let bound = BLOWUP_RATIO * t * t;
                (v / (t * t) < BLOWUP_RATIO).then_some(Witness {
                    i,
                    j,
                    t,
                    value: v,
                    bound,
                })
            })?
        }
        Hypothesis::H6 => vanishing_witness(instance, &ts)?,
    };

    Ok(HypothesisCheckReport {
        hypothesis: which,
        verdict: if witness.is_some() {
            Verdict::Violated
        } else {
            Verdict::Consistent
        },
        witness,
        sampled_range: (lo, hi),
        sample_count: samples,
        grid: if geometric {
            SampleGrid::Geometric
        } else {
            SampleGrid::Uniform
        },
        evidence_only: which.is_limit(),
    })
}

/// `|F/t^2|` must not grow as `|t|` shrinks along the descending grid and
/// must end below `VANISHING_RATIO`.
fn vanishing_witness(instance: &ProblemInstance, ts: &[f64]) -> Result<Option<Witness>> {
    for j in 1..=instance.n() {
        for i in 1..=instance.m() {
            for sign in [1.0, -1.0] {
                let mut prev: Option<f64> = None;
                for &mag in ts {
                    let t = sign * mag;
                    let v = instance.eval_F(i, j, t)?;
                    let r = (v / (t * t)).abs();
                    if let Some(p) = prev {
                        let allowed = p * (1.0 + 1e-9);
                        if r > allowed {
                            return Ok(Some(Witness {
                                i,
                                j,
                                t,
                                value: v,
                                bound: allowed * t * t,
                            }));
                        }
                    }
                    prev = Some(r);
                }
                let t = sign * ts[ts.len() - 1];
                let v = instance.eval_F(i, j, t)?;
                if (v / (t * t)).abs() > VANISHING_RATIO {
                    return Ok(Some(Witness {
                        i,
                        j,
                        t,
                        value: v,
                        bound: VANISHING_RATIO * t * t,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// The four existence mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Local minimizer in a sublevel set, `lambda in (0, lambda_star)`; needs `H1`.
    SublevelMinimum,
    /// Coercive energy, `lambda > lambda_mn / (2 c)`; needs `H2`, `H3`.
    CoerciveLarge,
    /// Coercive energy, `lambda < lambda_1 / (2 A)`; needs `H2`, `H4`.
    CoerciveSmall,
    /// Mountain pass, `lambda > lambda_mn / (2 alpha_minus)`; needs `H5`, `H6`.
    MountainPass,
}

impl Regime {
    pub fn hypotheses(self) -> &'static [Hypothesis] {
        match self {
            Regime::SublevelMinimum => &[Hypothesis::H1],
            Regime::CoerciveLarge => &[Hypothesis::H2, Hypothesis::H2prime, Hypothesis::H3],
            Regime::CoerciveSmall => &[Hypothesis::H2, Hypothesis::H2prime, Hypothesis::H4],
            Regime::MountainPass => &[Hypothesis::H5, Hypothesis::H6],
        }
    }

    pub fn recommended_method(self) -> Method {
        match self {
            Regime::SublevelMinimum => Method::SublevelMin,
            Regime::CoerciveLarge | Regime::CoerciveSmall => Method::GlobalMin,
            Regime::MountainPass => Method::MountainPass,
        }
    }
}

/// Outcome of one default-range check inside a regime summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOutcome {
    pub hypothesis: Hypothesis,
    pub report: Option<HypothesisCheckReport>,
    /// Why no report was produced (missing constants, range outside a table).
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeStatus {
    pub regime: Regime,
    /// Open interval of guaranteed existence; `None` bounds are `0` / `+inf`.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// `None` when the threshold could not be computed.
    pub inside: Option<bool>,
    pub checks: Vec<HypothesisOutcome>,
    pub recommended_method: Method,
}

impl RegimeStatus {
    /// Inside the interval with no violated check. The `H2` pair counts as
    /// passed if either reading holds.
    pub fn applicable(&self) -> bool {
        let violated = |h: Hypothesis| {
            self.checks.iter().any(|c| {
                c.hypothesis == h
                    && c.report
                        .as_ref()
                        .is_some_and(|r| r.verdict == Verdict::Violated)
            })
        };
        let h2_pair_failed = violated(Hypothesis::H2) && violated(Hypothesis::H2prime);
        let others_failed = self
            .checks
            .iter()
            .filter(|c| !matches!(c.hypothesis, Hypothesis::H2 | Hypothesis::H2prime))
            .any(|c| violated(c.hypothesis));
        self.inside == Some(true) && !h2_pair_failed && !others_failed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub lambda: f64,
    pub thresholds: ThresholdReport,
    pub regimes: Vec<RegimeStatus>,
    /// Method of the first applicable regime.
    pub recommended_method: Option<Method>,
}

/// Places `lambda` relative to every regime interval and runs each regime's
/// hypothesis checks on their default ranges.
pub fn regime_report(
    instance: &ProblemInstance,
    spectrum: &SpectrumSummary,
    lambda: f64,
    params: &HypothesisParams,
) -> Result<RegimeReport> {
    crate::error::check_lambda(lambda)?;
    let th = thresholds_lenient(instance, spectrum, params)?;
    let interval = |r: Regime| match r {
        Regime::SublevelMinimum => (None, th.lambda_star, params.alpha.is_some()),
        Regime::CoerciveLarge => (th.lambda_42_lower, None, th.lambda_42_lower.is_some()),
        Regime::CoerciveSmall => (None, th.lambda_43_upper, th.lambda_43_upper.is_some()),
        Regime::MountainPass => (th.lambda_44_lower, None, th.lambda_44_lower.is_some()),
    };
    let mut regimes = Vec::new();
    for regime in [
        Regime::SublevelMinimum,
        Regime::CoerciveLarge,
        Regime::CoerciveSmall,
        Regime::MountainPass,
    ] {
        let (lower, upper, known) = interval(regime);
        let inside = if regime == Regime::SublevelMinimum && known && th.lambda_star.is_none() {
            // lambda_star undefined: no interval
            Some(false)
        } else if known {
            Some(lambda > lower.unwrap_or(0.0) && upper.is_none_or(|u| lambda < u))
        } else {
            None
        };
        let checks = regime
            .hypotheses()
            .iter()
            .map(|&h| {
                match check_hypothesis(
                    instance,
                    h,
                    params,
                    h.default_range(params),
                    DEFAULT_HYPOTHESIS_SAMPLES,
                ) {
                    Ok(r) => HypothesisOutcome {
                        hypothesis: h,
                        report: Some(r),
                        skipped: None,
                    },
                    Err(e) => HypothesisOutcome {
                        hypothesis: h,
                        report: None,
                        skipped: Some(e.to_string()),
                    },
                }
            })
            .collect();
        regimes.push(RegimeStatus {
            regime,
            lower,
            upper,
            inside,
            checks,
            recommended_method: regime.recommended_method(),
        });
    }
    let recommended_method = regimes
        .iter()
        .find(|r| r.applicable())
        .map(|r| r.recommended_method);
    Ok(RegimeReport {
        lambda,
        thresholds: th,
        regimes,
        recommended_method,
    })
}

/// [`thresholds`] with an undefined `lambda_star` reported as `None`.
fn thresholds_lenient(
    instance: &ProblemInstance,
    spectrum: &SpectrumSummary,
    params: &HypothesisParams,
) -> Result<ThresholdReport> {
    match thresholds(instance, spectrum, params) {
        Err(Error::NonpositiveDenominator { .. }) => {
            let mut p = params.clone();
            p.alpha = None;
            let mut th = thresholds(instance, spectrum, &p)?;
            th.alpha = params.alpha;
            Ok(th)
        }
        other => other,
    }
}
