//! Polar surfaces: fronts sampled as projected lengths over a direction grid.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::risk::{multi_risk_unchecked, MultiRisk, RiskSet, UniRisk};
use crate::scalarise::{length, DirectionGrid};
use crate::table::ObjectiveTable;

/// Slack on the maximum ratio condition.
pub const RATIO_TOL: f64 = 1e-9;

/// A reference vector plus one projected length per grid direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarSurface {
    pub eta: Vec<f64>,
    pub grid: DirectionGrid,
    pub lengths: Vec<f64>,
}

/// Which construction produced a surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrontKind {
    Empirical,
    PfStatistic { rho: UniRisk },
    Rts { mrho: MultiRisk },
    Str { rho: UniRisk },
}

impl PolarSurface {
    pub fn new(eta: Vec<f64>, grid: DirectionGrid, lengths: Vec<f64>) -> Result<Self> {
        check_dim(grid.dim(), eta.len())?;
        check_dim(grid.len(), lengths.len())?;
        if let Some(l) = lengths.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter(format!("surface length {l} is not a finite non-negative value")));
        }
        Ok(Self { eta, grid, lengths })
    }

    pub fn is_degenerate(&self) -> bool {
        self.lengths.iter().all(|&l| l == 0.0)
    }

    /// Point on the surface along direction `j`.
    pub fn point(&self, j: usize) -> Vec<f64> {
        let lambda = &self.grid.directions()[j];
        self.eta.iter().zip(lambda.iter()).map(|(e, l)| e + self.lengths[j] * l).collect()
    }

    /// Rebuilds a surface from exported rows and its reference vector.
    pub fn from_rows(rows: &[SurfaceRow], eta: Vec<f64>) -> Result<Self> {
        let directions = rows
            .iter()
            .map(|r| crate::scalarise::Direction::new(r.lambda.clone()))
            .collect::<Result<Vec<_>>>()?;
        let grid = DirectionGrid::explicit(directions)?;
        Self::new(eta, grid, rows.iter().map(|r| r.length).collect())
    }
}

fn check_reference(eta: &[f64], grid: &DirectionGrid, m: usize) -> Result<()> {
    check_dim(m, eta.len())?;
    check_dim(m, grid.dim())?;
    if let Some(e) = eta.iter().find(|e| !e.is_finite()) {
        return Err(Error::InvalidParameter(format!("reference component {e} is not finite")));
    }
    Ok(())
}

fn per_direction<F>(grid: &DirectionGrid, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    grid.directions().par_iter().map(|d| f(d)).collect()
}

/// Polar parameterisation of the front of a finite point set.
pub fn polar_of_points<P: AsRef<[f64]> + Sync>(points: &[P], eta: &[f64], grid: &DirectionGrid) -> Result<PolarSurface> {
    let first = points.first().ok_or(Error::Empty("point set"))?;
    let m = first.as_ref().len();
    for p in points {
        check_dim(m, p.as_ref().len())?;
    }
    check_reference(eta, grid, m)?;
    let lengths = per_direction(grid, |lambda| {
        points
            .iter()
            .map(|p| length(eta, lambda, p.as_ref()))
            .fold(0.0, f64::max)
    });
    PolarSurface::new(eta.to_vec(), grid.clone(), lengths)
}

/// Per-scenario front lengths along `lambda` for the inputs in `subset`.
pub(crate) fn scenario_front_lengths(table: &ObjectiveTable, subset: &[usize], eta: &[f64], lambda: &[f64]) -> Vec<f64> {
    (0..table.n_scenarios())
        .map(|k| {
            subset
                .iter()
                .map(|&i| length(eta, lambda, table.outcome(i, k)))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Lengths of every scenario outcome of input `i` along `lambda`.
pub(crate) fn input_lengths(table: &ObjectiveTable, i: usize, eta: &[f64], lambda: &[f64]) -> Vec<f64> {
    table.outcomes(i).iter().map(|y| length(eta, lambda, y)).collect()
}

fn prepare(table: &ObjectiveTable, subset: &[usize], eta: &[f64], grid: &DirectionGrid) -> Result<()> {
    table.check_subset(subset)?;
    check_reference(eta, grid, table.dim())
}

/// Risk statistic of the per-scenario fronts of every input.
pub fn pf_statistic(table: &ObjectiveTable, rho: &UniRisk, eta: &[f64], grid: &DirectionGrid) -> Result<PolarSurface> {
    pf_statistic_of(table, &table.all_inputs(), rho, eta, grid)
}

/// [`pf_statistic`] restricted to a subset of inputs.
pub fn pf_statistic_of(
    table: &ObjectiveTable,
    subset: &[usize],
    rho: &UniRisk,
    eta: &[f64],
    grid: &DirectionGrid,
) -> Result<PolarSurface> {
    prepare(table, subset, eta, grid)?;
    rho.validate(table.n_scenarios())?;
    let w = table.dist().weights();
    let lengths = per_direction(grid, |lambda| {
        rho.eval(&scenario_front_lengths(table, subset, eta, lambda), w)
    });
    PolarSurface::new(eta.to_vec(), grid.clone(), lengths)
}

/// Risk sets of each input in `subset`.
pub fn risk_sets(table: &ObjectiveTable, subset: &[usize], mrho: &MultiRisk) -> Result<Vec<RiskSet>> {
    table.check_subset(subset)?;
    mrho.validate(table.dim(), table.n_scenarios())?;
    let w = table.dist().weights();
    Ok(subset
        .par_iter()
        .map(|&i| multi_risk_unchecked(mrho, table.outcomes(i), w))
        .collect())
}

/// Front of the union of risk-adjusted output sets.
pub fn rts_front(
    table: &ObjectiveTable,
    subset: &[usize],
    mrho: &MultiRisk,
    eta: &[f64],
    grid: &DirectionGrid,
) -> Result<PolarSurface> {
    prepare(table, subset, eta, grid)?;
    let sets = risk_sets(table, subset, mrho)?;
    let lengths = per_direction(grid, |lambda| {
        sets.iter().map(|s| s.max_length(eta, lambda)).fold(0.0, f64::max)
    });
    PolarSurface::new(eta.to_vec(), grid.clone(), lengths)
}

/// Front of the best risk-adjusted length over inputs.
pub fn str_front(
    table: &ObjectiveTable,
    subset: &[usize],
    rho: &UniRisk,
    eta: &[f64],
    grid: &DirectionGrid,
) -> Result<PolarSurface> {
    prepare(table, subset, eta, grid)?;
    rho.validate(table.n_scenarios())?;
    let w = table.dist().weights();
    let lengths = per_direction(grid, |lambda| {
        subset
            .iter()
            .map(|&i| rho.eval(&input_lengths(table, i, eta, lambda), w))
            .fold(0.0, f64::max)
    });
    PolarSurface::new(eta.to_vec(), grid.clone(), lengths)
}

/// Positive lengths plus the maximum ratio condition on every pair of directions.
pub fn is_pareto_front_surface(ps: &PolarSurface) -> bool {
    if !ps.lengths.iter().all(|&l| l > 0.0) {
        return false;
    }
    let dirs = ps.grid.directions();
    (0..dirs.len()).into_par_iter().all(|j| {
        (0..dirs.len()).all(|k| {
            let ratio = dirs[j]
                .iter()
                .zip(dirs[k].iter())
                .map(|(a, b)| (ps.lengths[j] * a) / (ps.lengths[k] * b))
                .fold(f64::NEG_INFINITY, f64::max);
            ratio >= 1.0 - RATIO_TOL
        })
    })
}

/// Lower and upper extreme-case surfaces for the three robustification orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeBounds {
    pub l_ps: Vec<f64>,
    pub u_ps: Vec<f64>,
    pub l_rts: Vec<f64>,
    pub u_rts: Vec<f64>,
    pub l_str: Vec<f64>,
    pub u_str: Vec<f64>,
}

impl ExtremeBounds {
    /// Directions where `0 <= gap_ps <= gap_str <= gap_rts` fails.
    pub fn chain_violations(&self) -> Vec<usize> {
        (0..self.l_ps.len())
            .filter(|&j| {
                let ps = self.u_ps[j] - self.l_ps[j];
                let st = self.u_str[j] - self.l_str[j];
                let rt = self.u_rts[j] - self.l_rts[j];
                !(0.0 <= ps && ps <= st && st <= rt)
            })
            .collect()
    }
}

/// Computes the six extreme-case surfaces. Every outcome must strongly dominate `eta`.
pub fn extreme_case_bounds(table: &ObjectiveTable, eta: &[f64], grid: &DirectionGrid) -> Result<ExtremeBounds> {
    check_reference(eta, grid, table.dim())?;
    if !table.strongly_dominates_reference(eta) {
        return Err(Error::Precondition(format!(
            "reference {eta:?} is not strongly dominated by every outcome"
        )));
    }
    let all = table.all_inputs();
    let lengths = |s: Result<PolarSurface>| s.map(|s| s.lengths);
    Ok(ExtremeBounds {
        l_ps: lengths(pf_statistic(table, &UniRisk::worst(), eta, grid))?,
        u_ps: lengths(pf_statistic(table, &UniRisk::best(), eta, grid))?,
        l_rts: lengths(rts_front(table, &all, &MultiRisk::MvWorstCase { subset: None }, eta, grid))?,
        u_rts: lengths(rts_front(table, &all, &MultiRisk::MvBestCase { subset: None }, eta, grid))?,
        l_str: lengths(str_front(table, &all, &UniRisk::worst(), eta, grid))?,
        u_str: lengths(str_front(table, &all, &UniRisk::best(), eta, grid))?,
    })
}

/// One exported direction of a surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceRow {
    pub lambda: Vec<f64>,
    pub length: f64,
    pub point: Vec<f64>,
}

pub fn surface_export(ps: &PolarSurface) -> Vec<SurfaceRow> {
    (0..ps.lengths.len())
        .map(|j| SurfaceRow {
            lambda: ps.grid.directions()[j].to_vec(),
            length: ps.lengths[j],
            point: ps.point(j),
        })
        .collect()
}

/// Formats a float so that parsing it back yields the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes rows as CSV with header `lambda_1..lambda_M,length,y_1..y_M`.
pub fn write_surface_csv<W: Write>(rows: &[SurfaceRow], m: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=m).map(|i| format!("lambda_{i}")).collect();
    header.push("length".into());
    header.extend((1..=m).map(|i| format!("y_{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec: Vec<String> = r.lambda.iter().map(|v| fmt_f64(*v)).collect();
        rec.push(fmt_f64(r.length));
        rec.extend(r.point.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse { line, message: format!("{kind:?}") },
    }
}

/// Reads rows written by [`write_surface_csv`].
pub fn read_surface_csv<R: Read>(input: R) -> Result<Vec<SurfaceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    let m = headers.iter().filter(|h| h.starts_with("lambda_")).count();
    if m == 0 || headers.len() != 2 * m + 1 {
        return Err(Error::Parse { line: 1, message: format!("unexpected surface header {headers:?}") });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let vals = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse { line, message: format!("{s:?}: {e}") })
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != 2 * m + 1 {
            return Err(Error::Parse { line, message: format!("expected {} fields, found {}", 2 * m + 1, vals.len()) });
        }
        rows.push(SurfaceRow { lambda: vals[..m].to_vec(), length: vals[m], point: vals[m + 1..].to_vec() });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalarise::{direction_grid, GridMode};
    use crate::table::{ObjVec, ScenarioDist};
    use proptest::prelude::*;

    fn diag() -> DirectionGrid {
        direction_grid(2, 1, GridMode::Deterministic).unwrap()
    }

    fn table(outcomes: Vec<Vec<[f64; 2]>>) -> ObjectiveTable {
        let k = outcomes[0].len();
        ObjectiveTable::from_outcomes(
            outcomes
                .into_iter()
                .map(|row| row.into_iter().map(|y| ObjVec(y.to_vec())).collect())
                .collect(),
            ScenarioDist::uniform(k).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn polar_examples() {
        let eta = [0.0, 0.0];
        let s = polar_of_points(&[[1.0, 1.0]], &eta, &diag()).unwrap();
        assert!((s.lengths[0] - 2f64.sqrt()).abs() < 1e-12);
        let s = polar_of_points(&[[-1.0, 0.0], [0.0, -3.0]], &eta, &diag()).unwrap();
        assert!(s.is_degenerate());
        let s = polar_of_points(&[[1.0, 3.0], [3.0, 1.0]], &eta, &diag()).unwrap();
        assert!((s.lengths[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(polar_of_points::<[f64; 2]>(&[], &eta, &diag()).is_err());
    }

    #[test]
    fn statistic_examples() {
        let t = table(vec![vec![[1.0, 1.0], [2.0, 2.0]]]);
        let lambda = diag().directions()[0].clone();
        let s = pf_statistic(&t, &UniRisk::best(), &[0.0, 0.0], &diag()).unwrap();
        assert!((s.lengths[0] - 2.0 / lambda[0]).abs() < 1e-12);
        let s = pf_statistic(&t, &UniRisk::worst(), &[0.0, 0.0], &diag()).unwrap();
        assert!((s.lengths[0] - 1.0 / lambda[0]).abs() < 1e-12);
        let one = table(vec![vec![[1.0, 3.0]], vec![[3.0, 1.0]]]);
        let grid = direction_grid(2, 9, GridMode::Deterministic).unwrap();
        let ps = pf_statistic(&one, &UniRisk::Expectation, &[0.0, 0.0], &grid).unwrap();
        let direct = polar_of_points(&[[1.0, 3.0], [3.0, 1.0]], &[0.0, 0.0], &grid).unwrap();
        assert_eq!(ps.lengths, direct.lengths);
    }

    #[test]
    fn surface_condition_examples() {
        let grid = direction_grid(2, 12, GridMode::Deterministic).unwrap();
        let zero = PolarSurface::new(vec![0.0, 0.0], grid.clone(), vec![0.0; 12]).unwrap();
        assert!(!is_pareto_front_surface(&zero));
        let sphere = PolarSurface::new(vec![0.0, 0.0], grid.clone(), vec![2.5; 12]).unwrap();
        assert!(is_pareto_front_surface(&sphere));
        let s = polar_of_points(&[[1.0, 3.0], [3.0, 1.0], [2.0, 2.5]], &[0.0, 0.0], &grid).unwrap();
        assert!(is_pareto_front_surface(&s));
        let mut bent = sphere.clone();
        bent.lengths[0] = 0.1;
        assert!(!is_pareto_front_surface(&bent));
    }

    #[test]
    fn one_scenario_bounds_coincide() {
        let t = table(vec![vec![[1.0, 3.0]], vec![[3.0, 1.0]], vec![[2.0, 2.0]]]);
        let grid = direction_grid(2, 16, GridMode::Deterministic).unwrap();
        let b = extreme_case_bounds(&t, &[0.0, 0.0], &grid).unwrap();
        for arr in [&b.u_ps, &b.l_rts, &b.u_rts, &b.l_str, &b.u_str] {
            assert_eq!(arr, &b.l_ps);
        }
        assert!(extreme_case_bounds(&t, &[1.0, 0.0], &grid).is_err());
    }

    #[test]
    fn export_round_trip() {
        let grid = direction_grid(2, 1, GridMode::Deterministic).unwrap();
        let ps = polar_of_points(&[[1.0, 2.0]], &[0.0, 0.0], &grid).unwrap();
        let rows = surface_export(&ps);
        assert_eq!(rows.len(), 1);
        let mut buf = Vec::new();
        write_surface_csv(&rows, 2, &mut buf).unwrap();
        let back = read_surface_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        assert_eq!(PolarSurface::from_rows(&back, vec![0.0, 0.0]).unwrap().lengths, ps.lengths);
        let zero = PolarSurface::new(vec![3.0, 4.0], grid, vec![0.0]).unwrap();
        assert_eq!(surface_export(&zero)[0].point, vec![3.0, 4.0]);
    }

    #[test]
    fn expectation_statistic_can_exceed_str_front() {
        // Each scenario is won by a different input, so no single input attains
        // the per-scenario front in every scenario.
        let t = table(vec![vec![[4.0, 4.0], [1.0, 1.0]], vec![[1.0, 1.0], [4.0, 4.0]]]);
        let grid = diag();
        let eta = [0.0, 0.0];
        let ps = pf_statistic(&t, &UniRisk::Expectation, &eta, &grid).unwrap();
        let st = str_front(&t, &[0, 1], &UniRisk::Expectation, &eta, &grid).unwrap();
        assert!(ps.lengths[0] > st.lengths[0]);
        let single = table(vec![vec![[4.0, 4.0], [4.0, 4.0]], vec![[1.0, 1.0], [1.0, 1.0]]]);
        let ps = pf_statistic(&single, &UniRisk::Expectation, &eta, &grid).unwrap();
        let st = str_front(&single, &[0, 1], &UniRisk::Expectation, &eta, &grid).unwrap();
        assert_eq!(ps.lengths, st.lengths);
    }

    proptest! {
        #[test]
        fn enlarging_subset_never_shrinks(vals in prop::collection::vec(-5.0f64..5.0, 4 * 3 * 2), cut in 1usize..4) {
            let t = ObjectiveTable::new(4, 3, 2, vals, ScenarioDist::uniform(3).unwrap()).unwrap();
            let grid = direction_grid(2, 16, GridMode::Deterministic).unwrap();
            let eta = [-6.0, -6.0];
            let small: Vec<usize> = (0..cut).collect();
            let all = t.all_inputs();
            let rho = UniRisk::CVaR { alpha: 0.5 };
            let a = str_front(&t, &small, &rho, &eta, &grid).unwrap();
            let b = str_front(&t, &all, &rho, &eta, &grid).unwrap();
            prop_assert!(a.lengths.iter().zip(&b.lengths).all(|(x, y)| x <= y));
            let mrho = MultiRisk::MvaR { alpha: 0.5 };
            let a = rts_front(&t, &small, &mrho, &eta, &grid).unwrap();
            let b = rts_front(&t, &all, &mrho, &eta, &grid).unwrap();
            prop_assert!(a.lengths.iter().zip(&b.lengths).all(|(x, y)| x <= y));
        }
    }
}
