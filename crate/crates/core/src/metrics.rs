//! R2 utilities, IGD indicators and hypervolume, plain and robust.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{check_dim, Error, Result};
use crate::risk::{MultiRisk, UniRisk};
use crate::scalarise::{direction_grid, length, DirectionGrid, GridMode, Scalariser, SIMPLEX_TOL};
use crate::surface::{input_lengths, risk_sets, rts_front, str_front};
use crate::table::ObjectiveTable;

/// A weighted family of scalarisers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Config {
    pub scalarisers: Vec<Scalariser>,
    pub weights: Vec<f64>,
}

impl R2Config {
    pub fn new(scalarisers: Vec<Scalariser>, weights: Vec<f64>) -> Result<Self> {
        let cfg = Self { scalarisers, weights };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Equal weights over `scalarisers`.
    pub fn uniform(scalarisers: Vec<Scalariser>) -> Result<Self> {
        let n = scalarisers.len();
        if n == 0 {
            return Err(Error::Empty("scalariser family"));
        }
        Self::new(scalarisers, vec![1.0 / n as f64; n])
    }

    /// One IGD scalariser per target, equally weighted.
    pub fn igd<P: AsRef<[f64]>>(targets: &[P], p: f64, q: f64) -> Result<Self> {
        Self::uniform(
            targets
                .iter()
                .map(|t| Scalariser::Igd { target: t.as_ref().to_vec(), p, q })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.scalarisers.is_empty() {
            return Err(Error::Empty("scalariser family"));
        }
        check_dim(self.scalarisers.len(), self.weights.len())?;
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("R2 weights must be non-negative".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParameter(format!("weights sum {sum}")));
        }
        let m = self.scalarisers[0].dim();
        for s in &self.scalarisers {
            s.validate()?;
            check_dim(m, s.dim())?;
        }
        Ok(())
    }

    fn dim(&self) -> usize {
        self.scalarisers[0].dim()
    }

    fn weighted<F: Fn(&Scalariser) -> f64 + Sync + Send>(&self, f: F) -> f64 {
        let values: Vec<f64> = self.scalarisers.par_iter().map(f).collect();
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

fn point_dim<P: AsRef<[f64]>>(points: &[P]) -> Result<usize> {
    let m = points.first().ok_or(Error::Empty("point set"))?.as_ref().len();
    for p in points {
        check_dim(m, p.as_ref().len())?;
    }
    Ok(m)
}

/// Weighted average over scalarisers of the best scalarised value.
pub fn r2_utility<P: AsRef<[f64]> + Sync>(points: &[P], cfg: &R2Config) -> Result<f64> {
    let m = point_dim(points)?;
    cfg.validate()?;
    check_dim(cfg.dim(), m)?;
    Ok(cfg.weighted(|s| {
        points.iter().map(|p| s.value(p.as_ref())).fold(f64::NEG_INFINITY, f64::max)
    }))
}

/// R2 utility with the inner maximum taken over each input's risk set.
pub fn rts_r2(table: &ObjectiveTable, subset: &[usize], mrho: &MultiRisk, cfg: &R2Config) -> Result<f64> {
    cfg.validate()?;
    check_dim(table.dim(), cfg.dim())?;
    let sets = risk_sets(table, subset, mrho)?;
    Ok(cfg.weighted(|s| {
        sets.iter().map(|r| r.max_scalarised(s)).fold(f64::NEG_INFINITY, f64::max)
    }))
}

/// R2 utility with the inner value replaced by the risk of the scalarised sample.
pub fn str_r2(table: &ObjectiveTable, subset: &[usize], rho: &UniRisk, cfg: &R2Config) -> Result<f64> {
    cfg.validate()?;
    check_dim(table.dim(), cfg.dim())?;
    table.check_subset(subset)?;
    rho.validate(table.n_scenarios())?;
    let w = table.dist().weights();
    Ok(cfg.weighted(|s| {
        subset
            .iter()
            .map(|&i| {
                let h: Vec<f64> = table.outcomes(i).iter().map(|y| s.value(y)).collect();
                rho.eval(&h, w)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }))
}

fn p_dist(a: &[f64], b: &[f64], p: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn check_norms(p: f64, q: f64) -> Result<()> {
    if !(p >= 1.0 && q >= 1.0) || !p.is_finite() || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("norms p = {p}, q = {q} must be finite and >= 1")));
    }
    Ok(())
}

/// Average distance from each target to its nearest point.
pub fn igd_indicator<P: AsRef<[f64]>, T: AsRef<[f64]>>(points: &[P], targets: &[T], p: f64, q: f64) -> Result<f64> {
    let m = point_dim(points)?;
    check_dim(m, point_dim(targets)?)?;
    check_norms(p, q)?;
    let mean = targets
        .iter()
        .map(|t| {
            points
                .iter()
                .map(|y| p_dist(t.as_ref(), y.as_ref(), p))
                .fold(f64::INFINITY, f64::min)
                .powf(q)
        })
        .sum::<f64>()
        / targets.len() as f64;
    Ok(mean.powf(1.0 / q))
}

/// The IGD utility `-indicator^q`, written as an R2 utility.
pub fn igd_utility<P: AsRef<[f64]> + Sync, T: AsRef<[f64]>>(points: &[P], targets: &[T], p: f64, q: f64) -> Result<f64> {
    point_dim(targets)?;
    r2_utility(points, &R2Config::igd(targets, p, q)?)
}

/// Evaluation order of a robust metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Plain,
    Rts,
    Str,
}

/// Either kind of risk functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnyRisk {
    Uni(UniRisk),
    Multi(MultiRisk),
}

/// Robust IGD utility. `Rts` requires a multivariate risk, `Str` a univariate one.
pub fn robust_igd<T: AsRef<[f64]>>(
    table: &ObjectiveTable,
    subset: &[usize],
    risk: &AnyRisk,
    targets: &[T],
    p: f64,
    q: f64,
    mode: Mode,
) -> Result<f64> {
    let cfg = R2Config::igd(targets, p, q)?;
    match (mode, risk) {
        (Mode::Rts, AnyRisk::Multi(mrho)) => rts_r2(table, subset, mrho, &cfg),
        (Mode::Str, AnyRisk::Uni(rho)) => str_r2(table, subset, rho, &cfg),
        (mode, _) => Err(Error::InvalidParameter(format!(
            "robust IGD in {mode:?} mode needs a {} risk functional",
            if mode == Mode::Str { "univariate" } else { "multivariate" }
        ))),
    }
}

/// Exact dominated area above `eta` in two dimensions.
pub fn hv_exact_2d<P: AsRef<[f64]>>(points: &[P], eta: &[f64]) -> Result<f64> {
    let m = point_dim(points)?;
    check_dim(m, eta.len())?;
    if m != 2 {
        return Err(Error::Unsupported(format!("exact hypervolume for M = {m}")));
    }
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .map(|p| [p.as_ref()[0], p.as_ref()[1]])
        .filter(|p| p[0] > eta[0] && p[1] > eta[1])
        .collect();
    pts.sort_by(|a, b| b[0].total_cmp(&a[0]));
    let mut area = 0.0;
    let mut top = eta[1];
    for p in pts {
        if p[1] > top {
            area += (p[0] - eta[0]) * (p[1] - top);
            top = p[1];
        }
    }
    Ok(area)
}

/// Volume constant `c_M` of the positive orthant of the unit ball.
pub fn hv_constant(m: usize) -> f64 {
    let half = m as f64 / 2.0;
    PI.powf(half) / (2f64.powi(m as i32) * gamma(half + 1.0))
}

/// Hypervolume transformation `c_M x^M`.
pub fn tau_hv(m: usize, x: f64) -> f64 {
    hv_constant(m) * x.powi(m as i32)
}

/// Sampling settings for hypervolume estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvConfig {
    pub eta: Vec<f64>,
    pub j: usize,
    pub seed: u64,
}

impl HvConfig {
    pub fn grid(&self) -> Result<DirectionGrid> {
        direction_grid(self.eta.len(), self.j, GridMode::UniformSample { seed: self.seed })
    }
}

/// A direction-averaged estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Sample standard deviation over directions divided by `sqrt(J)`.
    pub se: f64,
    /// Uniform bound on the estimator variance.
    pub variance_bound: f64,
    pub j: usize,
}

fn estimate(samples: &[f64], m: usize, radius: f64) -> Estimate {
    let j = samples.len();
    let value = samples.iter().sum::<f64>() / j as f64;
    let se = if j > 1 {
        let var = samples.iter().map(|x| (x - value).powi(2)).sum::<f64>() / (j - 1) as f64;
        (var / j as f64).sqrt()
    } else {
        0.0
    };
    let c = hv_constant(m);
    Estimate { value, se, variance_bound: c * c / j as f64 * radius.powi(2 * m as i32), j }
}

fn radius<'a>(points: impl Iterator<Item = &'a [f64]>, eta: &[f64]) -> f64 {
    points
        .filter(|y| y.iter().zip(eta).all(|(a, b)| a > b))
        .map(|y| y.iter().zip(eta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Hypervolume as an average over the directions of `grid`.
pub fn hv_on_grid<P: AsRef<[f64]> + Sync>(points: &[P], eta: &[f64], grid: &DirectionGrid) -> Result<Estimate> {
    let m = point_dim(points)?;
    check_dim(m, eta.len())?;
    check_dim(m, grid.dim())?;
    let samples: Vec<f64> = grid
        .directions()
        .par_iter()
        .map(|lambda| {
            let l = points.iter().map(|p| length(eta, lambda, p.as_ref())).fold(0.0, f64::max);
            tau_hv(m, l)
        })
        .collect();
    Ok(estimate(&samples, m, radius(points.iter().map(AsRef::as_ref), eta)))
}

/// Monte-Carlo hypervolume with directions sampled from `cfg.seed`.
pub fn hv_mc<P: AsRef<[f64]> + Sync>(points: &[P], cfg: &HvConfig) -> Result<Estimate> {
    hv_on_grid(points, &cfg.eta, &cfg.grid()?)
}

/// Hypervolume of the union of risk sets, averaged over `grid`.
pub fn rts_hv_on_grid(
    table: &ObjectiveTable,
    subset: &[usize],
    mrho: &MultiRisk,
    eta: &[f64],
    grid: &DirectionGrid,
) -> Result<Estimate> {
    let m = table.dim();
    let front = rts_front(table, subset, mrho, eta, grid)?;
    let samples: Vec<f64> = front.lengths.iter().map(|&l| tau_hv(m, l)).collect();
    let sets = risk_sets(table, subset, mrho)?;
    let r = radius(sets.iter().flat_map(|s| s.points.iter().map(Vec::as_slice)), eta);
    Ok(estimate(&samples, m, r))
}

/// Hypervolume of the best risk-adjusted lengths, averaged over `grid`.
pub fn str_hv_on_grid(
    table: &ObjectiveTable,
    subset: &[usize],
    rho: &UniRisk,
    eta: &[f64],
    grid: &DirectionGrid,
) -> Result<Estimate> {
    let m = table.dim();
    let front = str_front(table, subset, rho, eta, grid)?;
    let samples: Vec<f64> = front.lengths.iter().map(|&l| tau_hv(m, l)).collect();
    let r = radius(subset.iter().flat_map(|&i| table.outcomes(i).iter()), eta);
    Ok(estimate(&samples, m, r))
}

pub fn rts_hv(table: &ObjectiveTable, subset: &[usize], mrho: &MultiRisk, cfg: &HvConfig) -> Result<Estimate> {
    rts_hv_on_grid(table, subset, mrho, &cfg.eta, &cfg.grid()?)
}

pub fn str_hv(table: &ObjectiveTable, subset: &[usize], rho: &UniRisk, cfg: &HvConfig) -> Result<Estimate> {
    str_hv_on_grid(table, subset, rho, &cfg.eta, &cfg.grid()?)
}

/// Per-direction transformed risk of one input: `tau(rho[length(f(x, .))])`.
pub fn str_hv_contributions(
    table: &ObjectiveTable,
    i: usize,
    rho: &UniRisk,
    eta: &[f64],
    grid: &DirectionGrid,
) -> Vec<f64> {
    let w = table.dist().weights();
    let m = table.dim();
    grid.iter()
        .map(|lambda| tau_hv(m, rho.eval(&input_lengths(table, i, eta, lambda), w)))
        .collect()
}

/// JSON record for a computed metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub mode: Mode,
    pub value: f64,
    pub se: Option<f64>,
    pub seed: Option<u64>,
    #[serde(rename = "J")]
    pub j: Option<usize>,
    pub params: serde_json::Value,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{ObjVec, ScenarioDist};
    use proptest::prelude::*;

    #[test]
    fn r2_examples() {
        let lin = R2Config::new(vec![Scalariser::Linear { w: vec![1.0, 0.0] }], vec![1.0]).unwrap();
        assert_eq!(r2_utility(&[[2.0, 5.0], [3.0, 1.0]], &lin).unwrap(), 3.0);
        let two = R2Config::uniform(vec![
            Scalariser::Linear { w: vec![1.0, 0.0] },
            Scalariser::Linear { w: vec![0.0, 1.0] },
        ])
        .unwrap();
        assert_eq!(r2_utility(&[[1.0, 3.0]], &two).unwrap(), 2.0);
        assert!(r2_utility::<[f64; 2]>(&[], &two).is_err());
        assert!(R2Config::new(vec![Scalariser::Linear { w: vec![1.0, 0.0] }], vec![0.5]).is_err());
    }

    #[test]
    fn igd_examples() {
        let pts = [[0.0, 0.0], [1.0, 1.0]];
        assert_eq!(igd_indicator(&pts, &pts, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(igd_indicator(&[[3.0, 4.0]], &[[0.0, 0.0]], 2.0, 1.0).unwrap(), 5.0);
        let targets = [[0.0, 0.0], [10.0, 0.0]];
        let points = [[9.0, 0.0], [0.0, 2.0]];
        assert!((igd_indicator(&points, &targets, 2.0, 1.0).unwrap() - 1.5).abs() < 1e-12);
        let ind = igd_indicator(&points, &targets, 2.0, 2.0).unwrap();
        let util = igd_utility(&points, &targets, 2.0, 2.0).unwrap();
        assert!((util + ind.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn hv_examples() {
        let eta = [0.0, 0.0];
        assert_eq!(hv_exact_2d(&[[1.0, 3.0], [3.0, 1.0], [2.0, 2.0]], &eta).unwrap(), 6.0);
        assert_eq!(hv_exact_2d(&[[2.0, 2.0]], &eta).unwrap(), 4.0);
        assert_eq!(hv_exact_2d(&[[-1.0, 2.0], [0.0, 0.0]], &eta).unwrap(), 0.0);
        assert!(hv_exact_2d(&[[1.0, 1.0, 1.0]], &[0.0; 3]).is_err());
        assert!((hv_constant(2) - PI / 4.0).abs() < 1e-15);
        assert!((hv_constant(3) - PI / 6.0).abs() < 1e-14);
        let cfg = HvConfig { eta: eta.to_vec(), j: 1000, seed: 1 };
        let degenerate = hv_mc(&[[-1.0, -1.0]], &cfg).unwrap();
        assert_eq!(degenerate.value, 0.0);
        assert_eq!(degenerate.se, 0.0);
    }

    #[test]
    fn hv_grid_quadrature_of_a_square() {
        let grid = direction_grid(2, 4000, GridMode::Deterministic).unwrap();
        let est = hv_on_grid(&[[2.0, 2.0]], &[0.0, 0.0], &grid).unwrap();
        assert!((est.value - 4.0).abs() < 1e-5, "{}", est.value);
    }

    #[test]
    fn robust_igd_mode_mismatch() {
        let t = ObjectiveTable::deterministic(&[ObjVec(vec![1.0, 1.0])]).unwrap();
        let r = AnyRisk::Uni(UniRisk::Expectation);
        assert!(robust_igd(&t, &[0], &r, &[[0.0, 0.0]], 2.0, 2.0, Mode::Rts).is_err());
        assert!(robust_igd(&t, &[0], &r, &[[0.0, 0.0]], 2.0, 2.0, Mode::Str).is_ok());
    }

    #[test]
    fn one_scenario_robust_metrics_collapse() {
        let pts = vec![ObjVec(vec![1.0, 3.0]), ObjVec(vec![3.0, 1.0])];
        let t = ObjectiveTable::deterministic(&pts).unwrap();
        let cfg = HvConfig { eta: vec![0.0, 0.0], j: 500, seed: 9 };
        let plain = hv_mc(&pts, &cfg).unwrap().value;
        let rts = rts_hv(&t, &[0, 1], &MultiRisk::Identity, &cfg).unwrap().value;
        let st = str_hv(&t, &[0, 1], &UniRisk::CVaR { alpha: 0.3 }, &cfg).unwrap().value;
        assert_eq!(plain, rts);
        assert_eq!(plain, st);
        let targets = [[0.0, 4.0], [4.0, 0.0]];
        let u = igd_utility(&pts, &targets, 2.0, 2.0).unwrap();
        let a = robust_igd(&t, &[0, 1], &AnyRisk::Multi(MultiRisk::MvExpectation), &targets, 2.0, 2.0, Mode::Rts).unwrap();
        let b = robust_igd(&t, &[0, 1], &AnyRisk::Uni(UniRisk::Expectation), &targets, 2.0, 2.0, Mode::Str).unwrap();
        assert!((u - a).abs() < 1e-12 && (u - b).abs() < 1e-12);
    }

    fn table_strategy() -> impl Strategy<Value = ObjectiveTable> {
        (1usize..5, 1usize..5).prop_flat_map(|(n, k)| {
            prop::collection::vec(0.0f64..5.0, n * k * 2).prop_map(move |v| {
                ObjectiveTable::new(n, k, 2, v, ScenarioDist::uniform(k).unwrap()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn rts_r2_is_r2_of_union(t in table_strategy(), seed in any::<u64>()) {
            let grid = direction_grid(2, 8, GridMode::UniformSample { seed }).unwrap();
            let cfg = R2Config::uniform(grid.iter().map(|d| Scalariser::length(vec![-1.0, -1.0], d.clone())).collect()).unwrap();
            for mrho in [MultiRisk::Identity, MultiRisk::MvExpectation, MultiRisk::MvaR { alpha: 0.6 }] {
                let all = t.all_inputs();
                let union: Vec<Vec<f64>> = risk_sets(&t, &all, &mrho).unwrap().into_iter().flat_map(|s| s.points).collect();
                prop_assert_eq!(rts_r2(&t, &all, &mrho, &cfg).unwrap(), r2_utility(&union, &cfg).unwrap());
            }
        }

        #[test]
        fn adding_points_never_decreases(pts in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 2), 1..8), extra in prop::collection::vec(0.0f64..5.0, 2)) {
            let cfg = HvConfig { eta: vec![0.0, 0.0], j: 64, seed: 5 };
            let before = hv_mc(&pts, &cfg).unwrap().value;
            let mut more = pts.clone();
            more.push(extra);
            prop_assert!(hv_mc(&more, &cfg).unwrap().value >= before);
            prop_assert!(hv_exact_2d(&more, &cfg.eta).unwrap() >= hv_exact_2d(&pts, &cfg.eta).unwrap());
            let r2 = R2Config::igd(&[[5.0, 5.0]], 2.0, 2.0).unwrap();
            prop_assert!(r2_utility(&more, &r2).unwrap() >= r2_utility(&pts, &r2).unwrap());
        }

        #[test]
        fn igd_utility_orders_like_indicator(
            a in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 2), 1..6),
            b in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 2), 1..6),
            targets in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 2), 1..6),
        ) {
            let (ia, ib) = (igd_indicator(&a, &targets, 2.0, 2.0).unwrap(), igd_indicator(&b, &targets, 2.0, 2.0).unwrap());
            let (ua, ub) = (igd_utility(&a, &targets, 2.0, 2.0).unwrap(), igd_utility(&b, &targets, 2.0, 2.0).unwrap());
            if (ia - ib).abs() > 1e-9 {
                prop_assert_eq!(ia < ib, ua > ub);
            }
        }

        #[test]
        fn standard_error_within_uniform_bound(pts in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 3), 1..6), seed in any::<u64>()) {
            let est = hv_mc(&pts, &HvConfig { eta: vec![0.0; 3], j: 200, seed }).unwrap();
            prop_assert!(est.se * est.se <= est.variance_bound * (1.0 + 1e-12));
        }

        #[test]
        fn str_expectation_below_rts_expectation_for_igd(t in table_strategy(), targets in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 2), 1..4)) {
            let all = t.all_inputs();
            let s = robust_igd(&t, &all, &AnyRisk::Uni(UniRisk::Expectation), &targets, 2.0, 2.0, Mode::Str).unwrap();
            let r = robust_igd(&t, &all, &AnyRisk::Multi(MultiRisk::MvExpectation), &targets, 2.0, 2.0, Mode::Rts).unwrap();
            prop_assert!(s <= r + 1e-9);
        }
    }
}
