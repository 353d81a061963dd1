//! Univariate and multivariate risk functionals on finite weighted samples.
//!
//! A scalar uncertain outcome is represented by its scenario sample `h[k]`,
//! aligned with the weights of a [`ScenarioDist`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::pareto::{pareto_front, Relation};
use crate::scalarise::{length, DirectionGrid, Scalariser};
use crate::table::{Outcomes, ScenarioDist, UncertaintySubset};

/// Slack on cumulative probability comparisons against a level `alpha`.
pub const LEVEL_TOL: f64 = 1e-12;

/// Whether a cumulative weight reaches the level `alpha`.
#[inline]
pub fn reaches(cum: f64, alpha: f64) -> bool {
    cum >= alpha - LEVEL_TOL
}

/// Univariate risk functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UniRisk {
    /// Minimum over a subset of scenarios, or over all of them.
    WorstCase {
        #[serde(default)]
        subset: Option<UncertaintySubset>,
    },
    BestCase {
        #[serde(default)]
        subset: Option<UncertaintySubset>,
    },
    Expectation,
    /// Largest `y` with `P(h >= y) >= alpha`.
    VaR { alpha: f64 },
    /// Average of `VaR_tau` over `tau` in `(alpha, 1)`.
    CVaR { alpha: f64 },
    /// Minimum expectation over a family of distributions.
    Dr { family: Vec<ScenarioDist> },
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha outside (0,1): {alpha}")));
    }
    Ok(())
}

fn subset_indices(subset: &Option<UncertaintySubset>, k: usize) -> Vec<usize> {
    match subset {
        Some(s) => s.indices().to_vec(),
        None => (0..k).collect(),
    }
}

impl UniRisk {
    pub fn worst() -> Self {
        Self::WorstCase { subset: None }
    }

    pub fn best() -> Self {
        Self::BestCase { subset: None }
    }

    /// Checks parameters against a scenario count `k`.
    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            Self::WorstCase { subset } | Self::BestCase { subset } => match subset {
                Some(s) => s.validate(k),
                None => Ok(()),
            },
            Self::Expectation => Ok(()),
            Self::VaR { alpha } | Self::CVaR { alpha } => check_alpha(*alpha),
            Self::Dr { family } => {
                if family.is_empty() {
                    return Err(Error::Empty("distribution family"));
                }
                for d in family {
                    check_dim(k, d.len())?;
                }
                Ok(())
            }
        }
    }

    /// Smallest scenario count the functional can be applied to, if constrained.
    pub fn required_scenarios(&self) -> Option<(usize, bool)> {
        match self {
            Self::WorstCase { subset: Some(s) } | Self::BestCase { subset: Some(s) } => {
                Some((s.max_index() + 1, false))
            }
            Self::Dr { family } => family.first().map(|d| (d.len(), true)),
            _ => None,
        }
    }

    /// Evaluates without validation. `h` and `weights` must have equal length.
    pub fn eval(&self, h: &[f64], weights: &[f64]) -> f64 {
        match self {
            Self::WorstCase { subset } => subset_indices(subset, h.len())
                .into_iter()
                .map(|k| h[k])
                .fold(f64::INFINITY, f64::min),
            Self::BestCase { subset } => subset_indices(subset, h.len())
                .into_iter()
                .map(|k| h[k])
                .fold(f64::NEG_INFINITY, f64::max),
            Self::Expectation => expectation(h, weights),
            Self::VaR { alpha } => value_at_risk(h, weights, *alpha),
            Self::CVaR { alpha } => conditional_value_at_risk(h, weights, *alpha),
            Self::Dr { family } => family
                .iter()
                .map(|d| expectation(h, d.weights()))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Short textual label.
    pub fn label(&self) -> String {
        match self {
            Self::WorstCase { .. } => "worst".into(),
            Self::BestCase { .. } => "best".into(),
            Self::Expectation => "exp".into(),
            Self::VaR { alpha } => format!("var:{alpha}"),
            Self::CVaR { alpha } => format!("cvar:{alpha}"),
            Self::Dr { family } => format!("dr[{}]", family.len()),
        }
    }
}

fn expectation(h: &[f64], weights: &[f64]) -> f64 {
    h.iter().zip(weights).map(|(v, w)| v * w).sum()
}

fn order_by(h: &[f64], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..h.len()).collect();
    if descending {
        idx.sort_by(|&a, &b| h[b].total_cmp(&h[a]));
    } else {
        idx.sort_by(|&a, &b| h[a].total_cmp(&h[b]));
    }
    idx
}

fn value_at_risk(h: &[f64], weights: &[f64], alpha: f64) -> f64 {
    let mut cum = 0.0;
    let mut last = f64::NAN;
    for k in order_by(h, true) {
        if weights[k] <= 0.0 {
            continue;
        }
        cum += weights[k];
        last = h[k];
        if reaches(cum, alpha) {
            return h[k];
        }
    }
    last
}

fn conditional_value_at_risk(h: &[f64], weights: &[f64], alpha: f64) -> f64 {
    let tail = 1.0 - alpha;
    let mut cum = 0.0;
    let mut out = 0.0;
    for k in order_by(h, false) {
        if cum >= tail {
            break;
        }
        let take = (cum + weights[k]).min(tail) - cum.min(tail);
        out += (take / tail) * h[k];
        cum += weights[k];
    }
    out
}

/// Evaluates `rho` on the sample `h` under `dist`.
pub fn uni_risk(rho: &UniRisk, h: &[f64], dist: &ScenarioDist) -> Result<f64> {
    check_dim(dist.len(), h.len())?;
    rho.validate(h.len())?;
    if let Some(v) = h.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("sample value {v} is not finite")));
    }
    Ok(rho.eval(h, dist.weights()))
}

/// One of the four partial coherency properties, or the boundedness sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherencyProperty {
    Normalised,
    Monotone,
    PositivelyHomogeneous,
    TranslationEquivariant,
    Bounded,
}

impl CoherencyProperty {
    pub const ALL: [CoherencyProperty; 5] = [
        Self::Normalised,
        Self::Monotone,
        Self::PositivelyHomogeneous,
        Self::TranslationEquivariant,
        Self::Bounded,
    ];
}

/// A failed coherency trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub property: CoherencyProperty,
    pub trial: usize,
    pub h: Vec<f64>,
    pub weights: Vec<f64>,
    pub expected: f64,
    pub found: f64,
}

/// Outcome of [`coherency_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherencyReport {
    pub risk: String,
    pub trials: usize,
    pub failures: Vec<Counterexample>,
}

impl CoherencyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failures_of(&self, property: CoherencyProperty) -> usize {
        self.failures.iter().filter(|f| f.property == property).count()
    }
}

const COHERENCY_TOL: f64 = 1e-9;

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= COHERENCY_TOL * (1.0 + a.abs().max(b.abs()))
}

fn random_sample(rng: &mut ChaCha8Rng, k: usize) -> (Vec<f64>, Vec<f64>) {
    // Rounded values make ties common, which is where discrete quantiles break.
    let h = (0..k)
        .map(|_| {
            let v: f64 = rng.random_range(-10.0..10.0);
            if rng.random_bool(0.5) {
                v.round()
            } else {
                v
            }
        })
        .collect();
    let weights = if rng.random_bool(0.3) {
        vec![1.0 / k as f64; k]
    } else {
        let raw: Vec<f64> = (0..k)
            .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.01..1.0) })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            raw.iter().map(|w| w / total).collect()
        } else {
            vec![1.0 / k as f64; k]
        }
    };
    (h, weights)
}

/// Randomised test of normalisation, monotonicity, positive homogeneity,
/// translation equivariance and boundedness of `rho`.
pub fn coherency_check(rho: &UniRisk, trials: usize, seed: u64) -> CoherencyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for trial in 0..trials {
        let k = match rho.required_scenarios() {
            Some((k, true)) => k,
            Some((k, false)) => k + rng.random_range(0..4),
            None => rng.random_range(1..=12),
        };
        let (h, weights) = random_sample(&mut rng, k);
        let mut fail = |property, expected: f64, found: f64, h: &[f64]| {
            failures.push(Counterexample {
                property,
                trial,
                h: h.to_vec(),
                weights: weights.clone(),
                expected,
                found,
            });
        };
        let base = rho.eval(&h, &weights);

        let zero = rho.eval(&vec![0.0; k], &weights);
        if zero != 0.0 {
            fail(CoherencyProperty::Normalised, 0.0, zero, &vec![0.0; k]);
        }

        let lower: Vec<f64> = h.iter().map(|v| v - rng.random_range(0.0..3.0)).collect();
        let lower_value = rho.eval(&lower, &weights);
        if lower_value > base + COHERENCY_TOL * (1.0 + base.abs()) {
            fail(CoherencyProperty::Monotone, base, lower_value, &lower);
        }

        let c: f64 = rng.random_range(0.1..10.0);
        let scaled: Vec<f64> = h.iter().map(|v| c * v).collect();
        let scaled_value = rho.eval(&scaled, &weights);
        if !near(scaled_value, c * base) {
            fail(CoherencyProperty::PositivelyHomogeneous, c * base, scaled_value, &scaled);
        }

        let shift: f64 = rng.random_range(-10.0..10.0);
        let shifted: Vec<f64> = h.iter().map(|v| v + shift).collect();
        let shifted_value = rho.eval(&shifted, &weights);
        if !near(shifted_value, base + shift) {
            fail(CoherencyProperty::TranslationEquivariant, base + shift, shifted_value, &shifted);
        }

        let lo = h.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slack = COHERENCY_TOL * (1.0 + lo.abs().max(hi.abs()));
        if base < lo - slack || base > hi + slack {
            fail(CoherencyProperty::Bounded, lo, base, &h);
        }
    }
    CoherencyReport { risk: rho.label(), trials, failures }
}

/// Multivariate risk functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiRisk {
    /// The raw output set.
    Identity,
    /// One univariate functional per objective.
    ComponentWise { risks: Vec<UniRisk> },
    MvExpectation,
    MvWorstCase {
        #[serde(default)]
        subset: Option<UncertaintySubset>,
    },
    MvBestCase {
        #[serde(default)]
        subset: Option<UncertaintySubset>,
    },
    /// Weak Pareto supremum of the vectors covered with probability `alpha`.
    MvaR { alpha: f64 },
    /// Lower-left weakly minimal frontier of the convex hull. Two objectives only.
    MvdrFull,
    /// Points `eta + rho[s(h)] * lambda` over a direction grid.
    ParetoStatistic { rho: UniRisk, eta: Vec<f64>, grid: DirectionGrid },
}

impl MultiRisk {
    pub fn validate(&self, m: usize, k: usize) -> Result<()> {
        match self {
            Self::Identity | Self::MvExpectation => Ok(()),
            Self::ComponentWise { risks } => {
                check_dim(m, risks.len())?;
                risks.iter().try_for_each(|r| r.validate(k))
            }
            Self::MvWorstCase { subset } | Self::MvBestCase { subset } => match subset {
                Some(s) => s.validate(k),
                None => Ok(()),
            },
            Self::MvaR { alpha } => check_alpha(*alpha),
            Self::MvdrFull => {
                if m != 2 {
                    return Err(Error::Unsupported(format!(
                        "convex-hull distributionally robust set for M = {m}"
                    )));
                }
                Ok(())
            }
            Self::ParetoStatistic { rho, eta, grid } => {
                rho.validate(k)?;
                check_dim(m, eta.len())?;
                check_dim(m, grid.dim())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Identity => "id".into(),
            Self::ComponentWise { risks } => {
                let parts: Vec<String> = risks.iter().map(UniRisk::label).collect();
                format!("cw:{}", parts.join(","))
            }
            Self::MvExpectation => "mvexp".into(),
            Self::MvWorstCase { .. } => "mvworst".into(),
            Self::MvBestCase { .. } => "mvbest".into(),
            Self::MvaR { alpha } => format!("mvar:{alpha}"),
            Self::MvdrFull => "mvdr".into(),
            Self::ParetoStatistic { rho, .. } => format!("pfstat:{}", rho.label()),
        }
    }
}

/// Shape of a risk-adjusted set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskSetKind {
    Singleton,
    /// Raw finite point set, possibly with dominated members.
    Finite,
    /// Finite antichain under strict domination.
    FiniteFront,
    /// Points sampled along a direction grid.
    PolarSampled,
    /// Connected piecewise-linear curve through the listed vertices.
    Polyline,
}

/// Risk-adjusted summary set of an uncertain vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSet {
    pub kind: RiskSetKind,
    pub points: Vec<Vec<f64>>,
}

impl RiskSet {
    pub fn singleton(point: Vec<f64>) -> Self {
        Self { kind: RiskSetKind::Singleton, points: vec![point] }
    }

    /// Largest value of `s` over the set.
    pub fn max_scalarised(&self, s: &Scalariser) -> f64 {
        match self.kind {
            RiskSetKind::Polyline if self.points.len() > 1 => self
                .points
                .windows(2)
                .map(|seg| segment_max(s, &seg[0], &seg[1]))
                .fold(f64::NEG_INFINITY, f64::max),
            _ => self
                .points
                .iter()
                .map(|p| s.value(p))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Largest projected length over the set, without building a scalariser.
    pub fn max_length(&self, eta: &[f64], lambda: &[f64]) -> f64 {
        match self.kind {
            RiskSetKind::Polyline if self.points.len() > 1 => self
                .points
                .windows(2)
                .map(|seg| segment_max_length(eta, lambda, &seg[0], &seg[1]))
                .fold(f64::NEG_INFINITY, f64::max),
            _ => self
                .points
                .iter()
                .map(|p| length(eta, lambda, p))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Finite points, or an error for curves.
    pub fn finite_points(&self) -> Result<&[Vec<f64>]> {
        if self.kind == RiskSetKind::Polyline && self.points.len() > 1 {
            return Err(Error::Unsupported(
                "a polyline risk set has infinitely many points".into(),
            ));
        }
        Ok(&self.points)
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

// The length is max(min of affine functions, 0) along a segment, so its peak
// sits at an endpoint or where two of the affine pieces cross.
fn segment_max_length(eta: &[f64], lambda: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let m = a.len();
    let coef: Vec<(f64, f64)> = (0..m)
        .map(|i| ((a[i] - eta[i]) / lambda[i], (b[i] - a[i]) / lambda[i]))
        .collect();
    let mut best = length(eta, lambda, a).max(length(eta, lambda, b));
    for i in 0..m {
        for j in i + 1..m {
            let slope = coef[i].1 - coef[j].1;
            if slope != 0.0 {
                let t = (coef[j].0 - coef[i].0) / slope;
                if (0.0..=1.0).contains(&t) {
                    best = best.max(length(eta, lambda, &lerp(a, b, t)));
                }
            }
        }
    }
    best
}

// Every non-length scalariser is concave along a segment.
fn segment_max(s: &Scalariser, a: &[f64], b: &[f64]) -> f64 {
    if let Scalariser::Length { eta, lambda } = s {
        return segment_max_length(eta, lambda, a, b);
    }
    let f = |t: f64| s.value(&lerp(a, b, t));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    f(0.0).max(f(1.0)).max(f1).max(f2)
}

/// Applies `mrho` to the output set of one input.
pub fn multi_risk(mrho: &MultiRisk, outcomes: Outcomes<'_>, dist: &ScenarioDist) -> Result<RiskSet> {
    if outcomes.is_empty() {
        return Err(Error::Empty("outcomes"));
    }
    check_dim(dist.len(), outcomes.len())?;
    mrho.validate(outcomes.dim(), outcomes.len())?;
    Ok(multi_risk_unchecked(mrho, outcomes, dist.weights()))
}

pub(crate) fn multi_risk_unchecked(mrho: &MultiRisk, outcomes: Outcomes<'_>, weights: &[f64]) -> RiskSet {
    let m = outcomes.dim();
    match mrho {
        MultiRisk::Identity => RiskSet {
            kind: RiskSetKind::Finite,
            points: outcomes.iter().map(<[f64]>::to_vec).collect(),
        },
        MultiRisk::ComponentWise { risks } => RiskSet::singleton(
            risks
                .iter()
                .enumerate()
                .map(|(i, r)| r.eval(&outcomes.column(i), weights))
                .collect(),
        ),
        MultiRisk::MvExpectation => RiskSet::singleton(
            (0..m).map(|i| expectation(&outcomes.column(i), weights)).collect(),
        ),
        MultiRisk::MvWorstCase { subset } => {
            let r = UniRisk::WorstCase { subset: subset.clone() };
            RiskSet::singleton((0..m).map(|i| r.eval(&outcomes.column(i), weights)).collect())
        }
        MultiRisk::MvBestCase { subset } => {
            let r = UniRisk::BestCase { subset: subset.clone() };
            RiskSet::singleton((0..m).map(|i| r.eval(&outcomes.column(i), weights)).collect())
        }
        MultiRisk::MvaR { alpha } => RiskSet {
            kind: RiskSetKind::FiniteFront,
            points: mvar(outcomes, weights, *alpha),
        },
        MultiRisk::MvdrFull => RiskSet { kind: RiskSetKind::Polyline, points: lower_left_hull(outcomes) },
        MultiRisk::ParetoStatistic { rho, eta, grid } => RiskSet {
            kind: RiskSetKind::PolarSampled,
            points: grid
                .iter()
                .map(|lambda| {
                    let lengths: Vec<f64> = outcomes.iter().map(|y| length(eta, lambda, y)).collect();
                    let r = rho.eval(&lengths, weights);
                    eta.iter().zip(lambda.iter()).map(|(e, l)| e + r * l).collect()
                })
                .collect(),
        },
    }
}

/// Probability that the uncertain vector weakly dominates `y`.
pub fn coverage(outcomes: Outcomes<'_>, weights: &[f64], y: &[f64]) -> f64 {
    outcomes
        .iter()
        .zip(weights)
        .filter(|(h, _)| h.iter().zip(y).all(|(a, b)| a >= b))
        .map(|(_, w)| w)
        .sum()
}

fn axis_values(outcomes: Outcomes<'_>, i: usize) -> Vec<f64> {
    let mut v = outcomes.column(i);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

// For each prefix of the first M-1 coordinates on the observed lattice, the
// largest feasible last coordinate is a quantile of the scenarios covering
// the prefix.
fn mvar(outcomes: Outcomes<'_>, weights: &[f64], alpha: f64) -> Vec<Vec<f64>> {
    let m = outcomes.dim();
    let axes: Vec<Vec<f64>> = (0..m.saturating_sub(1)).map(|i| axis_values(outcomes, i)).collect();
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let mut prefix = vec![0usize; axes.len()];
    loop {
        let y: Vec<f64> = prefix.iter().enumerate().map(|(i, &j)| axes[i][j]).collect();
        let mut covering: Vec<(f64, f64)> = outcomes
            .iter()
            .zip(weights)
            .filter(|(h, w)| **w > 0.0 && h.iter().zip(&y).all(|(a, b)| a >= b))
            .map(|(h, w)| (h[m - 1], *w))
            .collect();
        covering.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut cum = 0.0;
        for (v, w) in covering {
            cum += w;
            if reaches(cum, alpha) {
                let mut point = y.clone();
                point.push(v);
                candidates.push(point);
                break;
            }
        }
        let mut d = 0;
        loop {
            if d == prefix.len() {
                let front = pareto_front(&candidates, Relation::Strict).unwrap_or_default();
                return front.into_iter().map(|i| candidates[i].clone()).collect();
            }
            prefix[d] += 1;
            if prefix[d] < axes[d].len() {
                break;
            }
            prefix[d] = 0;
            d += 1;
        }
    }
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

// Path from the top of the left edge, down the left edge, along the lower-left
// hull chain and out along the bottom edge.
fn lower_left_hull(outcomes: Outcomes<'_>) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = outcomes.iter().map(<[f64]>::to_vec).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    let x_min = pts[0][0];
    let y_min = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let top_left = pts
        .iter()
        .filter(|p| p[0] == x_min)
        .map(|p| p[1])
        .fold(f64::NEG_INFINITY, f64::max);
    let right_bottom = pts
        .iter()
        .filter(|p| p[1] == y_min)
        .map(|p| p[0])
        .fold(f64::NEG_INFINITY, f64::max);

    let mut lower: Vec<Vec<f64>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p.clone());
    }

    let mut path = Vec::new();
    if top_left != lower[0][1] {
        path.push(vec![x_min, top_left]);
    }
    for p in lower {
        let at_bottom = p[1] == y_min;
        path.push(p);
        if at_bottom {
            break;
        }
    }
    let last = path.last().expect("path is non-empty");
    if last[0] != right_bottom {
        path.push(vec![right_bottom, y_min]);
    }
    path
}

/// Whether every point of the risk set is finite and inside the outcome box,
/// widened to include the reference vector of a Pareto statistic.
pub fn risk_bounded_check(mrho: &MultiRisk, outcomes: Outcomes<'_>, dist: &ScenarioDist) -> bool {
    let Ok(set) = multi_risk(mrho, outcomes, dist) else {
        return false;
    };
    let m = outcomes.dim();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for y in outcomes.iter() {
        for i in 0..m {
            lo[i] = lo[i].min(y[i]);
            hi[i] = hi[i].max(y[i]);
        }
    }
    if let MultiRisk::ParetoStatistic { eta, .. } = mrho {
        for i in 0..m {
            lo[i] = lo[i].min(eta[i]);
            hi[i] = hi[i].max(eta[i]);
        }
    }
    set.points.iter().all(|p| {
        p.iter().enumerate().all(|(i, &v)| {
            let slack = 1e-9 * (1.0 + lo[i].abs().max(hi[i].abs()));
            v.is_finite() && v >= lo[i] - slack && v <= hi[i] + slack
        })
    })
}
