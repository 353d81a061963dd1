//! Randomised property suites shared by the command line and the test
//! harness.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::risk::{coherency_check, MultiRisk, UniRisk};
use crate::scalarise::{direction_grid, Direction, DirectionGrid, GridMode, Scalariser};
use crate::solve::{solve_rts, solve_str};
use crate::surface::{extreme_case_bounds, is_pareto_front_surface, pf_statistic, rts_front, str_front, PolarSurface};
use crate::table::{ObjectiveTable, ScenarioDist};

/// Absolute-plus-relative tolerance for identities that hold exactly in
/// real arithmetic.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Coherency,
    Bounds,
    Commutation,
    Front,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Coherency, Suite::Bounds, Suite::Commutation, Suite::Front];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Coherency => "coherency",
            Suite::Bounds => "bounds",
            Suite::Commutation => "commutation",
            Suite::Front => "front",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: usize,
    pub failed: usize,
    pub first_failure: Option<Value>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        Self { suite, passed: 0, failed: 0, first_failure: None }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> Value) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

/// Shape of a random table drawn by [`random_table`].
#[derive(Debug, Clone, Copy)]
pub struct TableShape {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

impl TableShape {
    /// `M` in {2, 3}, `N` in 1..=8, `K` in 1..=16.
    pub fn draw(rng: &mut impl Rng) -> Self {
        Self { m: rng.random_range(2..=3), n: rng.random_range(1..=8), k: rng.random_range(1..=16) }
    }
}

/// Random outcomes in `[-2, 2]`, on a quarter lattice half of the time so
/// ties occur, with random scenario weights (some zero).
pub fn random_table(rng: &mut impl Rng, shape: TableShape) -> ObjectiveTable {
    let lattice = rng.random_bool(0.5);
    let values = (0..shape.n * shape.k * shape.m)
        .map(|_| {
            let v: f64 = rng.random_range(-2.0..2.0);
            if lattice {
                (v * 4.0).round() / 4.0
            } else {
                v
            }
        })
        .collect();
    let dist = if rng.random_bool(0.4) {
        ScenarioDist::uniform(shape.k)
    } else {
        let mut raw: Vec<f64> =
            (0..shape.k).map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.05..1.0) }).collect();
        if raw.iter().all(|w| *w == 0.0) {
            raw[0] = 1.0;
        }
        let total: f64 = raw.iter().sum();
        ScenarioDist::new(raw.iter().map(|w| w / total).collect())
    }
    .expect("valid weights");
    ObjectiveTable::new(shape.n, shape.k, shape.m, values, dist).expect("valid table")
}

/// A reference vector strictly below every outcome.
pub fn reference_below(table: &ObjectiveTable, rng: &mut impl Rng) -> Vec<f64> {
    table.bounds().0.iter().map(|l| l - rng.random_range(0.05..1.0)).collect()
}

/// Deterministic grid with `j` directions in two or three dimensions.
pub fn check_grid(m: usize, j: usize) -> DirectionGrid {
    direction_grid(m, j, GridMode::Deterministic).expect("two or three objectives")
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= IDENTITY_TOL * (1.0 + a.abs().max(b.abs()))
}

fn table_json(table: &ObjectiveTable) -> Value {
    json!({
        "n_inputs": table.n_inputs(),
        "n_scenarios": table.n_scenarios(),
        "M": table.dim(),
        "weights": table.dist().weights(),
        "values": table.values(),
    })
}

fn all_uni_risks(k: usize, rng: &mut impl Rng) -> Vec<UniRisk> {
    let family = (0..3)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            ScenarioDist::new(raw.iter().map(|w| w / total).collect()).expect("valid weights")
        })
        .collect();
    vec![
        UniRisk::worst(),
        UniRisk::best(),
        UniRisk::Expectation,
        UniRisk::VaR { alpha: 0.3 },
        UniRisk::VaR { alpha: 0.9 },
        UniRisk::CVaR { alpha: 0.3 },
        UniRisk::CVaR { alpha: 0.9 },
        UniRisk::Dr { family },
    ]
}

/// Runs `suite` on `trials` seeded random instances.
pub fn run_suite(suite: Suite, trials: usize, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::Coherency => coherency_suite(trials, seed),
        Suite::Bounds => bounds_suite(trials, seed),
        Suite::Commutation => commutation_suite(trials, seed),
        Suite::Front => front_suite(trials, seed),
    }
}

/// Every univariate functional against the four coherency properties and
/// the min/max sandwich.
pub fn coherency_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new(Suite::Coherency);
    for (r, rho) in all_uni_risks(6, &mut rng).into_iter().enumerate() {
        let res = coherency_check(&rho, trials, seed.wrapping_add(r as u64));
        let bad: std::collections::BTreeSet<usize> = res.failures.iter().map(|f| f.trial).collect();
        report.passed += trials - bad.len();
        report.failed += bad.len();
        if report.first_failure.is_none() {
            if let Some(f) = res.failures.first() {
                report.first_failure = Some(json!({ "risk": rho.label(), "counterexample": f }));
            }
        }
    }
    Ok(report)
}

/// `0 <= gap_ps <= gap_str <= gap_rts` per direction, with all six surfaces
/// equal on single-scenario tables.
pub fn bounds_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Bounds);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let mut shape = TableShape::draw(&mut rng);
        if trial % 5 == 0 {
            shape.k = 1;
        }
        let table = random_table(&mut rng, shape);
        let eta = reference_below(&table, &mut rng);
        let grid = check_grid(shape.m, 32);
        let b = extreme_case_bounds(&table, &eta, &grid)?;
        let violations = b.chain_violations();
        report.record(violations.is_empty(), || {
            json!({ "trial": trial, "directions": violations, "table": table_json(&table), "eta": eta })
        });
        if shape.k == 1 {
            let all = [&b.u_ps, &b.l_rts, &b.u_rts, &b.l_str, &b.u_str];
            let equal = all.iter().all(|v| v.iter().zip(&b.l_ps).all(|(a, c)| a == c));
            report.record(equal, || json!({ "trial": trial, "single_scenario_mismatch": b, "table": table_json(&table) }));
        }
    }
    Ok(report)
}

fn compare_values(
    report: &mut SuiteReport,
    identity: &str,
    trial: usize,
    table: &ObjectiveTable,
    rts: &[f64],
    strv: &[f64],
    scalariser: &Scalariser,
) {
    let bad = rts.iter().zip(strv).position(|(a, b)| !close(*a, *b));
    report.record(bad.is_none(), || {
        let i = bad.unwrap_or(0);
        json!({
            "identity": identity,
            "trial": trial,
            "input": i,
            "rts": rts[i],
            "str": strv[i],
            "scalariser": scalariser,
            "table": table_json(table),
        })
    });
}

/// Order-swapping identities between the two robustification orders, plus
/// a pinned instance where expectation and length do not commute.
pub fn commutation_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Commutation);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let shape = TableShape::draw(&mut rng);
        let table = random_table(&mut rng, shape);
        let m = shape.m;
        let eta: Vec<f64> = (0..m).map(|_| rng.random_range(-2.5..0.5)).collect();
        let alpha = [0.1, 0.25, 0.5, 0.75, 0.9][rng.random_range(0..5)];
        let grid = check_grid(m, 12);
        for lambda in grid.iter() {
            let s = Scalariser::length(eta.clone(), lambda.clone());
            let pairs: [(&str, MultiRisk, UniRisk); 3] = [
                ("identity/best", MultiRisk::Identity, UniRisk::best()),
                ("worst", MultiRisk::MvWorstCase { subset: None }, UniRisk::worst()),
                ("var", MultiRisk::MvaR { alpha }, UniRisk::VaR { alpha }),
            ];
            for (name, mrho, rho) in pairs {
                let a = solve_rts(&table, &s, &mrho)?;
                let b = solve_str(&table, &s, &rho)?;
                compare_values(&mut report, name, trial, &table, &a.values, &b.values, &s);
            }
        }
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let linear = Scalariser::Linear { w: raw.iter().map(|w| w / total).collect() };
        let cw = MultiRisk::ComponentWise { risks: vec![UniRisk::Expectation; m] };
        let b = solve_str(&table, &linear, &UniRisk::Expectation)?;
        for mrho in [cw, MultiRisk::MvExpectation] {
            let a = solve_rts(&table, &linear, &mrho)?;
            compare_values(&mut report, "linear/expectation", trial, &table, &a.values, &b.values, &linear);
        }
    }
    let (table, s) = expectation_length_counterexample();
    let a = solve_rts(&table, &s, &MultiRisk::MvExpectation)?.values[0];
    let b = solve_str(&table, &s, &UniRisk::Expectation)?.values[0];
    report.record(!close(a, b), || json!({ "identity": "expectation/length counterexample", "rts": a, "str": b }));
    Ok(report)
}

/// Two equally likely outcomes `(1, 0)` and `(0, 1)` with `eta = 0` and the
/// diagonal direction: the length of the mean is `1/sqrt(2)` while the mean
/// length is 0.
pub fn expectation_length_counterexample() -> (ObjectiveTable, Scalariser) {
    let table = ObjectiveTable::new(1, 2, 2, vec![1.0, 0.0, 0.0, 1.0], ScenarioDist::uniform(2).expect("k > 0"))
        .expect("valid table");
    let lambda = Direction::normalised(vec![1.0, 1.0]).expect("non-zero");
    (table, Scalariser::length(vec![0.0, 0.0], lambda))
}

fn front_ok(ps: &PolarSurface) -> bool {
    ps.is_degenerate() || is_pareto_front_surface(ps)
}

/// Pareto-front conditions on statistic, RTS and STR fronts.
pub fn front_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Front);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let shape = TableShape::draw(&mut rng);
        let table = random_table(&mut rng, shape);
        let eta = reference_below(&table, &mut rng);
        let grid = check_grid(shape.m, 24);
        let all = table.all_inputs();
        for rho in all_uni_risks(shape.k, &mut rng) {
            let label = rho.label();
            let ps = pf_statistic(&table, &rho, &eta, &grid)?;
            report.record(front_ok(&ps), || json!({ "trial": trial, "front": "ps", "risk": label, "lengths": ps.lengths }));
            let st = str_front(&table, &all, &rho, &eta, &grid)?;
            report.record(front_ok(&st), || json!({ "trial": trial, "front": "str", "risk": label, "lengths": st.lengths }));
        }
        let mut multis = vec![
            MultiRisk::Identity,
            MultiRisk::MvExpectation,
            MultiRisk::MvWorstCase { subset: None },
            MultiRisk::MvBestCase { subset: None },
            MultiRisk::MvaR { alpha: 0.6 },
            MultiRisk::ComponentWise { risks: vec![UniRisk::CVaR { alpha: 0.5 }; shape.m] },
        ];
        if shape.m == 2 {
            multis.push(MultiRisk::MvdrFull);
        }
        for mrho in multis {
            let label = mrho.label();
            let rt = rts_front(&table, &all, &mrho, &eta, &grid)?;
            report.record(front_ok(&rt), || json!({ "trial": trial, "front": "rts", "risk": label, "lengths": rt.lengths }));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn all_suites_pass_small() {
        for s in Suite::ALL {
            let r = run_suite(s, 20, 7).unwrap();
            assert!(r.ok(), "{s}: {:?}", r.first_failure);
            assert!(r.passed > 0);
        }
    }

    #[test]
    fn counterexample_differs() {
        let (t, s) = expectation_length_counterexample();
        let a = solve_rts(&t, &s, &MultiRisk::MvExpectation).unwrap().values[0];
        let b = solve_str(&t, &s, &UniRisk::Expectation).unwrap().values[0];
        assert!((a - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(b, 0.0);
    }
}
