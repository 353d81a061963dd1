//! Parametric scalarisation functions and grids of positive unit directions.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Tolerance on the Euclidean norm of a [`Direction`].
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Tolerance on the total of user-supplied simplex weights.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A positive unit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Direction(Vec<f64>);

impl Direction {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::Empty("direction"));
        }
        if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "direction components must be positive: {lambda:?}"
            )));
        }
        let norm = l2(&lambda);
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidParameter(format!("direction norm {norm} is not 1")));
        }
        Ok(Self(lambda))
    }

    /// Rescales a positive vector to unit length.
    pub fn normalised(v: Vec<f64>) -> Result<Self> {
        let norm = l2(&v);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter(format!("cannot normalise {v:?}")));
        }
        Self::new(v.into_iter().map(|x| x / norm).collect())
    }

    /// Direction at angle `theta` from the first axis in the plane.
    pub fn from_angle(theta: f64) -> Result<Self> {
        Self::new(vec![theta.cos(), theta.sin()])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for Direction {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Direction {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Direction> for Vec<f64> {
    fn from(d: Direction) -> Self {
        d.0
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Projected length of `y` along the ray `eta + t * lambda`.
///
/// This is the unchecked kernel behind [`Scalariser::Length`].
#[inline]
pub fn length(eta: &[f64], lambda: &[f64], y: &[f64]) -> f64 {
    let mut out = f64::INFINITY;
    for ((&ym, &em), &lm) in y.iter().zip(eta).zip(lambda) {
        out = out.min((ym - em).max(0.0) / lm);
    }
    out
}

/// Parametric scalarisation function under the maximisation convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scalariser {
    Length { eta: Vec<f64>, lambda: Direction },
    Linear { w: Vec<f64> },
    Lp { target: Vec<f64>, w: Vec<f64>, p: f64 },
    Igd { target: Vec<f64>, p: f64, q: f64 },
    IgdPlus { target: Vec<f64>, p: f64, q: f64 },
    WeightedIgd { target: Vec<f64>, w: Vec<f64> },
}

fn check_simplex(w: &[f64]) -> Result<()> {
    if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("weights must be non-negative: {w:?}")));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidParameter(format!("weights sum {sum}")));
    }
    Ok(())
}

fn check_norm(name: &str, p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} = {p} must be a finite norm >= 1")));
    }
    Ok(())
}

fn finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be finite: {v:?}")));
    }
    Ok(())
}

fn p_norm_pow(diff: impl Iterator<Item = f64>, p: f64, q: f64) -> f64 {
    let sum: f64 = diff.map(|d| d.abs().powf(p)).sum();
    sum.powf(q / p)
}

impl Scalariser {
    pub fn length(eta: Vec<f64>, lambda: Direction) -> Self {
        Self::Length { eta, lambda }
    }

    /// Objective dimension the scalariser expects.
    pub fn dim(&self) -> usize {
        match self {
            Self::Length { eta, .. } => eta.len(),
            Self::Linear { w } => w.len(),
            Self::Lp { target, .. }
            | Self::Igd { target, .. }
            | Self::IgdPlus { target, .. }
            | Self::WeightedIgd { target, .. } => target.len(),
        }
    }

    /// Checks parameter invariants and internal dimensions.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Length { eta, lambda } => {
                finite("eta", eta)?;
                check_dim(eta.len(), lambda.dim())
            }
            Self::Linear { w } => check_simplex(w),
            Self::Lp { target, w, p } => {
                finite("target", target)?;
                check_dim(target.len(), w.len())?;
                check_simplex(w)?;
                check_norm("p", *p)
            }
            Self::Igd { target, p, q } | Self::IgdPlus { target, p, q } => {
                finite("target", target)?;
                check_norm("p", *p)?;
                check_norm("q", *q)
            }
            Self::WeightedIgd { target, w } => {
                finite("target", target)?;
                check_dim(target.len(), w.len())?;
                check_simplex(w)
            }
        }
    }

    /// Evaluates without dimension checks. Callers validate once up front.
    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            Self::Length { eta, lambda } => length(eta, lambda, y),
            Self::Linear { w } => w.iter().zip(y).map(|(w, y)| w * y).sum(),
            Self::Lp { target, w, p } => {
                -p_norm_pow(target.iter().zip(y).zip(w).map(|((t, y), w)| w * (t - y)), *p, 1.0)
            }
            Self::Igd { target, p, q } => {
                -p_norm_pow(target.iter().zip(y).map(|(t, y)| t - y), *p, *q)
            }
            Self::IgdPlus { target, p, q } => {
                -p_norm_pow(target.iter().zip(y).map(|(t, y)| (t - y).max(0.0)), *p, *q)
            }
            Self::WeightedIgd { target, w } => -target
                .iter()
                .zip(y)
                .zip(w)
                .map(|((t, y), w)| (w * (t - y)).powi(2))
                .sum::<f64>(),
        }
    }

    /// True for the projected-length family.
    pub fn is_length(&self) -> bool {
        matches!(self, Self::Length { .. })
    }
}

/// Evaluates `s` at `y`.
pub fn scalarise(s: &Scalariser, y: &[f64]) -> Result<f64> {
    check_dim(s.dim(), y.len())?;
    Ok(s.value(y))
}

/// The direction whose length problem `y` solves with value `||y - eta||`.
pub fn chebyshev_direction_for(y: &[f64], eta: &[f64]) -> Result<Direction> {
    check_dim(eta.len(), y.len())?;
    if !y.iter().zip(eta).all(|(a, b)| a > b) {
        return Err(Error::Precondition(format!(
            "{y:?} does not strongly dominate the reference {eta:?}"
        )));
    }
    Direction::normalised(y.iter().zip(eta).map(|(a, b)| a - b).collect())
}

/// How a [`DirectionGrid`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GridMode {
    Deterministic,
    UniformSample { seed: u64 },
    Explicit,
}

/// A finite set of positive unit directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionGrid {
    mode: GridMode,
    directions: Vec<Direction>,
}

impl DirectionGrid {
    /// Wraps caller-supplied directions.
    pub fn explicit(directions: Vec<Direction>) -> Result<Self> {
        let m = directions.first().ok_or(Error::Empty("direction grid"))?.dim();
        for d in &directions {
            check_dim(m, d.dim())?;
        }
        Ok(Self { mode: GridMode::Explicit, directions })
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.directions[0].dim()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Direction> {
        self.directions.iter()
    }
}

/// Builds `j` directions in dimension `m`.
///
/// The deterministic grid uses midpoint angles in 2-D and a golden-angle
/// lattice on the positive octant in 3-D. Sampling draws normalised absolute
/// Gaussian vectors from a ChaCha8 stream seeded with `seed`.
pub fn direction_grid(m: usize, j: usize, mode: GridMode) -> Result<DirectionGrid> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("direction grids need M >= 2, got {m}")));
    }
    if j == 0 {
        return Err(Error::InvalidParameter("direction grids need J >= 1".into()));
    }
    let directions = match mode {
        GridMode::Deterministic => match m {
            2 => (0..j)
                .map(|i| Direction::from_angle((i as f64 + 0.5) * PI / (2.0 * j as f64)))
                .collect::<Result<Vec<_>>>()?,
            3 => octant_lattice(j)?,
            _ => {
                return Err(Error::Unsupported(format!(
                    "deterministic direction grid for M = {m}; use uniform sampling"
                )))
            }
        },
        GridMode::UniformSample { seed } => sample_directions(m, j, seed),
        GridMode::Explicit => {
            return Err(Error::InvalidParameter(
                "explicit grids are built with DirectionGrid::explicit".into(),
            ))
        }
    };
    Ok(DirectionGrid { mode, directions })
}

fn octant_lattice(j: usize) -> Result<Vec<Direction>> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    (0..j)
        .map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / j as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = FRAC_PI_2 * (i as f64 * golden + 0.5).fract();
            Direction::normalised(vec![r * phi.cos(), r * phi.sin(), z])
        })
        .collect()
}

fn sample_directions(m: usize, j: usize, seed: u64) -> Vec<Direction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(j);
    while out.len() < j {
        let v: Vec<f64> = (0..m)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z.abs()
            })
            .collect();
        if let Ok(d) = Direction::normalised(v) {
            out.push(d);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn scalariser_examples() {
        let diag = Direction::new(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let len = Scalariser::length(vec![0.0, 0.0], diag.clone());
        let y: Vec<f64> = diag.iter().map(|l| 3.0 * l).collect();
        assert!(close(scalarise(&len, &y).unwrap(), 3.0));
        assert_eq!(scalarise(&len, &[0.0, 0.0]).unwrap(), 0.0);

        let lin = Scalariser::Linear { w: vec![0.5, 0.5] };
        assert_eq!(scalarise(&lin, &[2.0, 4.0]).unwrap(), 3.0);

        let igd = Scalariser::Igd { target: vec![1.0, 1.0], p: 2.0, q: 2.0 };
        assert_eq!(scalarise(&igd, &[1.0, 1.0]).unwrap(), 0.0);

        let len = Scalariser::length(vec![0.0, 0.0], Direction::new(vec![0.6, 0.8]).unwrap());
        assert!(close(scalarise(&len, &[3.0, 2.0]).unwrap(), 2.5));
        assert!(scalarise(&len, &[3.0]).is_err());
    }

    #[test]
    fn igd_variants() {
        let t = vec![0.0, 0.0];
        let igd = Scalariser::Igd { target: t.clone(), p: 2.0, q: 1.0 };
        assert!(close(igd.value(&[3.0, -4.0]), -5.0));
        let plus = Scalariser::IgdPlus { target: t.clone(), p: 2.0, q: 1.0 };
        assert!(close(plus.value(&[3.0, -4.0]), -4.0));
        let wigd = Scalariser::WeightedIgd { target: t, w: vec![0.5, 0.5] };
        assert!(close(wigd.value(&[2.0, 4.0]), -5.0));
    }

    #[test]
    fn chebyshev_examples() {
        let d = chebyshev_direction_for(&[3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert!(close(d[0], 0.6) && close(d[1], 0.8));
        assert!(chebyshev_direction_for(&[1.0, 0.0], &[0.0, 0.0]).is_err());
        let d = chebyshev_direction_for(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!(close(d[0], FRAC_1_SQRT_2));
        let len = Scalariser::length(vec![0.0, 0.0], d);
        assert!(close(len.value(&[1.0, 1.0]), 2f64.sqrt()));
    }

    #[test]
    fn grid_examples() {
        let g = direction_grid(2, 1, GridMode::Deterministic).unwrap();
        assert!(close(g.directions()[0][0], (PI / 4.0).cos()));
        let g = direction_grid(2, 2, GridMode::Deterministic).unwrap();
        assert!(close(g.directions()[0][1], (PI / 8.0).sin()));
        assert!(close(g.directions()[1][1], (3.0 * PI / 8.0).sin()));
        let a = direction_grid(4, 50, GridMode::UniformSample { seed: 3 }).unwrap();
        let b = direction_grid(4, 50, GridMode::UniformSample { seed: 3 }).unwrap();
        assert_eq!(a, b);
        assert!(direction_grid(1, 5, GridMode::Deterministic).is_err());
        assert!(direction_grid(4, 5, GridMode::Deterministic).is_err());
        let g = direction_grid(3, 500, GridMode::Deterministic).unwrap();
        assert_eq!(g.len(), 500);
    }

    #[test]
    fn lp_is_not_monotone_past_a_feasible_target() {
        let s = Scalariser::Lp { target: vec![1.0, 1.0], w: vec![0.5, 0.5], p: 2.0 };
        let better = [2.0, 2.0];
        assert!(better.iter().zip([1.0, 1.0]).all(|(a, b)| *a > b));
        assert!(s.value(&better) < s.value(&[1.0, 1.0]));
    }

    fn point(m: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, m)
    }

    proptest! {
        #[test]
        fn sampled_directions_are_positive_units(m in 2usize..6, j in 1usize..64, seed in any::<u64>()) {
            let g = direction_grid(m, j, GridMode::UniformSample { seed }).unwrap();
            prop_assert_eq!(g.len(), j);
            for d in g.iter() {
                prop_assert!(d.iter().all(|&x| x > 0.0));
                prop_assert!((l2(d) - 1.0).abs() <= UNIT_NORM_TOL);
            }
        }

        #[test]
        fn length_is_monotone(eta in point(3), a in point(3), step in prop::collection::vec(0.0f64..2.0, 3), seed in any::<u64>()) {
            let lambda = direction_grid(3, 1, GridMode::UniformSample { seed }).unwrap().directions()[0].clone();
            let b: Vec<f64> = a.iter().zip(&step).map(|(x, s)| x + s).collect();
            let s = Scalariser::length(eta.clone(), lambda);
            prop_assert!(s.value(&b) >= s.value(&a));
            let strictly_above = a.iter().zip(&eta).all(|(x, e)| x > e);
            if strictly_above && step.iter().all(|&s| s > 1e-9) {
                prop_assert!(s.value(&b) > s.value(&a));
            }
        }

        #[test]
        fn chebyshev_direction_solves_its_own_problem(
            pts in prop::collection::vec(point(3), 1..10),
        ) {
            let eta = vec![-6.0; 3];
            let front = crate::pareto::pareto_front(&pts, crate::pareto::Relation::Weak).unwrap();
            for &i in &front {
                let d = chebyshev_direction_for(&pts[i], &eta).unwrap();
                let s = Scalariser::length(eta.clone(), d);
                let own = s.value(&pts[i]);
                let norm = l2(&pts[i].iter().zip(&eta).map(|(a, b)| a - b).collect::<Vec<_>>());
                prop_assert!((own - norm).abs() <= 1e-9 * norm);
                let best = pts.iter().map(|p| s.value(p)).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(own >= best - 1e-9 * best.abs());
            }
        }
    }
}
