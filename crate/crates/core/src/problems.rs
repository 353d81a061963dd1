//! Synthetic problem generators, discretisation helpers and file formats.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalarise::{Scalariser, SIMPLEX_TOL};
use crate::solve::MeanVarTable;
use crate::surface::{csv_err, fmt_f64};
use crate::table::{ObjectiveTable, ScenarioDist};

/// Closed-form objective families for [`SyntheticKind::AnalyticToy`].
///
/// All formulas take two input and two scenario coordinates in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyFormula {
    /// Two objectives.
    Smooth2,
    /// Three objectives.
    Smooth3,
    /// Three objectives in roughly `[-1.45, 0.45]`. The best means sit in a
    /// region whose outcomes swing widely with the scenario; the best tail
    /// outcomes sit elsewhere.
    Rocket,
}

impl ToyFormula {
    pub fn dims(self) -> (usize, usize, usize) {
        match self {
            ToyFormula::Smooth2 => (2, 2, 2),
            ToyFormula::Smooth3 | ToyFormula::Rocket => (2, 2, 3),
        }
    }

    pub fn eval(self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        let (x1, x2) = (x[0], x[1]);
        let (e1, e2) = (xi[0] - 0.5, xi[1] - 0.5);
        match self {
            ToyFormula::Smooth2 => {
                let s = 0.05 + 0.8 * x1 * x1;
                vec![
                    x1 - 0.3 * (x2 - 0.5).powi(2) + s * e1,
                    1.0 - x1 * x1 + 0.2 * x2 + s * (e2 - 0.5 * e1),
                ]
            }
            ToyFormula::Smooth3 => {
                let s = 0.05 + 0.6 * x1 * x2;
                vec![
                    x1 - 0.2 * x2 * x2 + s * e1,
                    x2 - 0.2 * x1 * x1 + s * e2,
                    1.0 - 0.5 * (x1 + x2) + s * (e1 + e2),
                ]
            }
            ToyFormula::Rocket => {
                let bump = |cx: f64, cy: f64, w: f64| {
                    (-((x1 - cx).powi(2) + (x2 - cy).powi(2)) / (2.0 * w * w)).exp()
                };
                // high-mean but scenario-sensitive peak near (0.25, 0.3),
                // robust peak between grid nodes at (0.75, 0.75)
                let fragile = bump(0.25, 0.3, 0.1);
                let robust = bump(0.75, 0.75, 0.15);
                let sens = 0.03 + 0.9 * fragile;
                let gain = [0.55, 0.45, 0.5];
                let tilt = [0.1 * (x1 - x2), 0.1 * (x2 - x1), 0.0];
                let shock = [e1, e2, 0.5 * (e1 + e2)];
                (0..3)
                    .map(|m| -1.25 + gain[m] * (1.6 * fragile + 1.2 * robust) + tilt[m] + 2.0 * sens * shock[m])
                    .collect()
            }
        }
    }
}

/// Generator kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticKind {
    /// `k` outcomes per input drawn uniformly from an axis-aligned
    /// ellipsoid with the given center and semi-axes.
    EllipsoidClouds { centers: Vec<Vec<f64>>, axes: Vec<Vec<f64>>, k: usize },
    /// A closed-form `f(x, xi)` evaluated on product grids over `[0, 1]^D`
    /// and `[0, 1]^W`.
    AnalyticToy { formula: ToyFormula, input_grid: Vec<usize>, scenario_grid: Vec<usize> },
    /// Random means around a target with input-dependent spread, realised
    /// on `k` moment-matched Gaussian scenarios.
    TargetProblem { target: Vec<f64>, weights: Vec<f64>, n_inputs: usize, k: usize },
    /// Independent uniform outcomes in `[lo, hi]`.
    Uniform { n_inputs: usize, k: usize, m: usize, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(flatten)]
    pub kind: SyntheticKind,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            SyntheticKind::EllipsoidClouds { centers, axes, k } => {
                let m = centers.first().ok_or(Error::Empty("ellipsoid centers"))?.len();
                if m == 0 {
                    return Err(Error::InvalidParameter("ellipsoid dimension must be >= 1".into()));
                }
                check_dim(centers.len(), axes.len())?;
                if *k == 0 {
                    return Err(Error::Empty("scenario set"));
                }
                for (c, a) in centers.iter().zip(axes) {
                    check_dim(m, c.len())?;
                    check_dim(m, a.len())?;
                    if a.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                        return Err(Error::InvalidParameter("ellipsoid axes must be finite and >= 0".into()));
                    }
                }
            }
            SyntheticKind::AnalyticToy { formula, input_grid, scenario_grid } => {
                let (d, w, _) = formula.dims();
                check_dim(d, input_grid.len())?;
                check_dim(w, scenario_grid.len())?;
                if input_grid.iter().chain(scenario_grid).any(|r| *r < 2) {
                    return Err(Error::InvalidParameter("grid resolutions must be >= 2".into()));
                }
            }
            SyntheticKind::TargetProblem { target, weights, n_inputs, k } => {
                check_dim(target.len(), weights.len())?;
                Scalariser::WeightedIgd { target: target.clone().into(), w: weights.clone() }.validate()?;
                if *n_inputs == 0 || *k < 2 {
                    return Err(Error::InvalidParameter("target problem needs n_inputs >= 1 and k >= 2".into()));
                }
            }
            SyntheticKind::Uniform { n_inputs, k, m, lo, hi } => {
                if *n_inputs == 0 || *k == 0 || *m == 0 {
                    return Err(Error::Empty("uniform table"));
                }
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::InvalidParameter(format!("bounds [{lo}, {hi}]")));
                }
            }
        }
        Ok(())
    }
}

/// Evaluates `n` equally spaced points on `[0, 1]`, endpoints included.
fn linspace(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Cartesian product of `linspace` axes, last axis varying fastest.
pub fn product_grid(resolutions: &[usize]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for &r in resolutions {
        let axis = linspace(r);
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Builds the table described by `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<ObjectiveTable> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match &spec.kind {
        SyntheticKind::EllipsoidClouds { centers, axes, k } => {
            let m = centers[0].len();
            let mut values = Vec::with_capacity(centers.len() * k * m);
            for (c, a) in centers.iter().zip(axes) {
                for _ in 0..*k {
                    let dir: Vec<f64> = loop {
                        let z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
                        let norm = z.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
                        if norm > 0.0 {
                            break z.into_iter().map(|v| v / norm).collect();
                        }
                    };
                    let u: f64 = rng.random();
                    let r = u.powf(1.0 / m as f64);
                    values.extend((0..m).map(|j| c[j] + a[j] * r * dir[j]));
                }
            }
            ObjectiveTable::new(centers.len(), *k, m, values, ScenarioDist::uniform(*k)?)
        }
        SyntheticKind::AnalyticToy { formula, input_grid, scenario_grid } => {
            let xs = product_grid(input_grid);
            let xis = product_grid(scenario_grid);
            let m = formula.dims().2;
            let mut values = Vec::with_capacity(xs.len() * xis.len() * m);
            for x in &xs {
                for xi in &xis {
                    values.extend(formula.eval(x, xi));
                }
            }
            ObjectiveTable::new(xs.len(), xis.len(), m, values, ScenarioDist::uniform(xis.len())?)?
                .with_input_coords(xs)?
                .with_scenario_coords(xis)
        }
        SyntheticKind::TargetProblem { target, n_inputs, k, .. } => {
            let mut mean = Vec::with_capacity(*n_inputs);
            let mut sd = Vec::with_capacity(*n_inputs);
            for _ in 0..*n_inputs {
                let mu: Vec<f64> =
                    target.iter().map(|t| t + (t.abs().max(1.0)) * rng.random_range(-0.5..0.5)).collect();
                let s: Vec<f64> = target.iter().map(|t| t.abs().max(1.0) * rng.random_range(0.0..0.3)).collect();
                mean.push(mu);
                sd.push(s);
            }
            let mv = MeanVarTable::new(mean, sd)?;
            realise_mean_var(&mv, *k, spec.seed)
        }
        SyntheticKind::Uniform { n_inputs, k, m, lo, hi } => {
            let values = (0..n_inputs * k * m).map(|_| rng.random_range(*lo..*hi)).collect();
            ObjectiveTable::new(*n_inputs, *k, *m, values, ScenarioDist::uniform(*k)?)
        }
    }
}

/// Table whose equally weighted scenarios realise each input's mean and sd
/// exactly.
///
/// Scenario `k` of input `i` is `mu_i + sd_i * z_k`, where each column of the
/// Gaussian draws `z` is standardised to sample mean 0 and population
/// variance 1.
pub fn realise_mean_var(mv: &MeanVarTable, k: usize, seed: u64) -> Result<ObjectiveTable> {
    if k < 2 {
        return Err(Error::InvalidParameter("at least two scenarios are needed".into()));
    }
    let m = mv.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<Vec<f64>> = (0..k).map(|_| (0..m).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    for j in 0..m {
        let mean = z.iter().map(|r| r[j]).sum::<f64>() / k as f64;
        let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / k as f64;
        let sd = var.sqrt();
        for r in &mut z {
            r[j] = (r[j] - mean) / sd;
        }
    }
    let mut values = Vec::with_capacity(mv.n_inputs() * k * m);
    for (mu, sd) in mv.mean.iter().zip(&mv.sd) {
        for zk in &z {
            values.extend((0..m).map(|j| mu[j] + sd[j] * zk[j]));
        }
    }
    ObjectiveTable::new(mv.n_inputs(), k, m, values, ScenarioDist::uniform(k)?)
}

/// Per-input sample mean and population sd under the scenario weights.
pub fn mean_var_of(table: &ObjectiveTable) -> MeanVarTable {
    let w = table.dist().weights();
    let m = table.dim();
    let mut mean = Vec::with_capacity(table.n_inputs());
    let mut sd = Vec::with_capacity(table.n_inputs());
    for i in 0..table.n_inputs() {
        let o = table.outcomes(i);
        let mu: Vec<f64> = (0..m).map(|j| o.iter().zip(w).map(|(y, wk)| wk * y[j]).sum()).collect();
        let s = (0..m)
            .map(|j| o.iter().zip(w).map(|(y, wk)| wk * (y[j] - mu[j]).powi(2)).sum::<f64>().sqrt())
            .collect();
        mean.push(mu);
        sd.push(s);
    }
    MeanVarTable { mean, sd }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetTerms {
    pub bias2: f64,
    pub penalty: f64,
    pub str_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDecomposition {
    pub terms: Vec<TargetTerms>,
    /// Minimisers of the bias term, lowest index first.
    pub rts_argmin: Vec<usize>,
    /// Minimisers of bias plus penalty.
    pub str_argmin: Vec<usize>,
}

fn argmin_all(values: impl Iterator<Item = f64>) -> Vec<usize> {
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for (i, v) in values.enumerate() {
        if v < best {
            best = v;
            out.clear();
            out.push(i);
        } else if v == best {
            out.push(i);
        }
    }
    out
}

/// Splits the expected weighted squared distance to `target` into a bias
/// and a variance penalty for every input.
pub fn target_decomposition(mv: &MeanVarTable, target: &[f64], weights: &[f64]) -> Result<TargetDecomposition> {
    check_dim(mv.dim(), target.len())?;
    check_dim(mv.dim(), weights.len())?;
    let terms: Vec<TargetTerms> = mv
        .mean
        .iter()
        .zip(&mv.sd)
        .map(|(mu, sd)| {
            let bias2: f64 = (0..target.len()).map(|j| (weights[j] * (target[j] - mu[j])).powi(2)).sum();
            let penalty: f64 = (0..target.len()).map(|j| (weights[j] * sd[j]).powi(2)).sum();
            TargetTerms { bias2, penalty, str_value: bias2 + penalty }
        })
        .collect();
    Ok(TargetDecomposition {
        rts_argmin: argmin_all(terms.iter().map(|t| t.bias2)),
        str_argmin: argmin_all(terms.iter().map(|t| t.str_value)),
        terms,
    })
}

/// All points of the `d`-dimensional simplex with coordinates in multiples
/// of `1 / divisions`.
pub fn simplex_grid(d: usize, divisions: usize) -> Vec<Vec<f64>> {
    fn rec(d: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if d == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in 0..=left {
            prefix.push(v);
            rec(d - 1, left - v, prefix, out);
            prefix.pop();
        }
    }
    if d == 0 || divisions == 0 {
        return Vec::new();
    }
    let mut counts = Vec::new();
    rec(d, divisions, &mut Vec::new(), &mut counts);
    counts.into_iter().map(|c| c.into_iter().map(|v| v as f64 / divisions as f64).collect()).collect()
}

/// `lo <= sum of x[indices] <= hi`; either side may be open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumBound {
    pub indices: Vec<usize>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    /// Require non-negative coordinates summing to one.
    pub simplex: bool,
    pub bounds: Vec<SumBound>,
}

impl ConstraintSet {
    /// Ingredient constraints of the six-component cake problem.
    pub fn cake() -> Self {
        Self {
            simplex: true,
            bounds: vec![
                SumBound { indices: vec![0, 1], lo: Some(0.2), hi: Some(0.4) },
                SumBound { indices: vec![2], lo: Some(0.15), hi: Some(0.35) },
                SumBound { indices: vec![3, 4, 5], lo: Some(0.2), hi: None },
            ],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if self.simplex {
            let sum: f64 = x.iter().sum();
            if x.iter().any(|v| *v < 0.0) || (sum - 1.0).abs() > SIMPLEX_TOL {
                return false;
            }
        }
        self.bounds.iter().all(|b| {
            if b.indices.iter().any(|i| *i >= x.len()) {
                return false;
            }
            let s: f64 = b.indices.iter().map(|i| x[*i]).sum();
            b.lo.is_none_or(|lo| s >= lo - SIMPLEX_TOL) && b.hi.is_none_or(|hi| s <= hi + SIMPLEX_TOL)
        })
    }
}

/// Indices of the points satisfying `constraints`.
pub fn simplex_constraint_filter(points: &[Vec<f64>], constraints: &ConstraintSet) -> Vec<usize> {
    (0..points.len()).filter(|i| constraints.contains(&points[*i])).collect()
}

/// Target-problem constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetConfig {
    pub target: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TargetConfig {
    pub fn cake() -> Self {
        Self { target: vec![-360.0, 4.0, 1.0], weights: vec![0.004, 0.155, 0.841] }
    }
}

/// Acquisition-experiment constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub eta: Vec<f64>,
    pub alpha: f64,
    pub kappa: f64,
    pub beta: f64,
    pub budget: usize,
    pub initial: usize,
    /// Noise sd as a fraction of each objective's range.
    pub noise_fraction: f64,
}

impl AcquisitionConfig {
    pub fn rocket() -> Self {
        Self {
            eta: vec![-1.05, -1.30, -1.20],
            alpha: 0.9,
            kappa: 0.1,
            beta: 2.0,
            budget: 65,
            initial: 5,
            noise_fraction: 0.01,
        }
    }
}

/// The shipped rocket-style stand-in: 15x15 inputs, 4x4 uniform scenarios.
pub fn rocket_spec() -> SyntheticSpec {
    SyntheticSpec {
        kind: SyntheticKind::AnalyticToy {
            formula: ToyFormula::Rocket,
            input_grid: vec![15, 15],
            scenario_grid: vec![4, 4],
        },
        seed: 0,
    }
}

/// Regression instance with distinct bias-only and bias-plus-penalty
/// minimisers.
pub fn toy_target_instance() -> (SyntheticSpec, TargetConfig) {
    let spec = SyntheticSpec {
        kind: SyntheticKind::AnalyticToy {
            formula: ToyFormula::Smooth2,
            input_grid: vec![10, 10],
            scenario_grid: vec![8, 8],
        },
        seed: 0,
    };
    (spec, TargetConfig { target: vec![1.0, 0.2], weights: vec![0.5, 0.5] })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    use std::io::Write;
    writeln!(f)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
struct Sidecar {
    #[serde(rename = "M")]
    m: usize,
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scenario_coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_labels: Option<Vec<String>>,
}

/// Path of the JSON sidecar that accompanies a table CSV.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `path` as `x_id,xi_id,y_1..y_M` and the sidecar next to it.
pub fn save_table(table: &ObjectiveTable, path: &Path) -> Result<()> {
    let m = table.dim();
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["x_id".to_string(), "xi_id".to_string()];
    header.extend((1..=m).map(|j| format!("y_{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..table.n_inputs() {
        for k in 0..table.n_scenarios() {
            let mut rec = vec![i.to_string(), k.to_string()];
            rec.extend(table.outcome(i, k).iter().map(|v| fmt_f64(*v)));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush()?;
    let sidecar = Sidecar {
        m,
        weights: table.dist().weights().to_vec(),
        input_coords: table.input_coords().map(<[_]>::to_vec),
        scenario_coords: table.scenario_coords().map(<[_]>::to_vec),
        input_labels: table.input_labels().map(<[_]>::to_vec),
    };
    write_json(&sidecar, &sidecar_path(path))
}

fn parse_field<T: std::str::FromStr>(field: &str, line: u64, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse { line, message: format!("bad {what} {field:?}") })
}

/// Reads a table written by [`save_table`].
pub fn load_table(path: &Path) -> Result<ObjectiveTable> {
    let side_path = sidecar_path(path);
    let sidecar: Sidecar = read_json(&side_path)?;
    let dist = ScenarioDist::new(sidecar.weights)?;
    let k = dist.len();
    let m = sidecar.m;
    if m == 0 {
        return Err(Error::InvalidTable("M must be >= 1".into()));
    }
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let mut expected = vec!["x_id".to_string(), "xi_id".to_string()];
    expected.extend((1..=m).map(|j| format!("y_{j}")));
    if headers.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse { line: 1, message: format!("expected header {}", expected.join(",")) });
    }
    let mut cells: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    let mut n = 0;
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let i: usize = parse_field(&rec[0], line, "x_id")?;
        let s: usize = parse_field(&rec[1], line, "xi_id")?;
        if s >= k {
            return Err(Error::Parse { line, message: format!("xi_id {s} out of range 0..{k}") });
        }
        let y = (2..2 + m).map(|c| parse_field::<f64>(&rec[c], line, "objective value")).collect::<Result<Vec<_>>>()?;
        if cells.insert((i, s), y).is_some() {
            return Err(Error::Parse { line, message: format!("duplicate pair (x_id={i}, xi_id={s})") });
        }
        n = n.max(i + 1);
    }
    if n == 0 {
        return Err(Error::Empty("input set"));
    }
    let mut values = Vec::with_capacity(n * k * m);
    for i in 0..n {
        for s in 0..k {
            let y = cells
                .remove(&(i, s))
                .ok_or_else(|| Error::InvalidTable(format!("missing pair (x_id={i}, xi_id={s})")))?;
            values.extend(y);
        }
    }
    let mut table = ObjectiveTable::new(n, k, m, values, dist)?;
    if let Some(c) = sidecar.input_coords {
        table = table.with_input_coords(c)?;
    }
    if let Some(c) = sidecar.scenario_coords {
        table = table.with_scenario_coords(c)?;
    }
    if let Some(l) = sidecar.input_labels {
        table = table.with_input_labels(l)?;
    }
    Ok(table)
}

/// Writes `x_id,mu_1..mu_M,sd_1..sd_M`.
pub fn save_mean_var(mv: &MeanVarTable, path: &Path) -> Result<()> {
    let m = mv.dim();
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["x_id".to_string()];
    header.extend((1..=m).map(|j| format!("mu_{j}")));
    header.extend((1..=m).map(|j| format!("sd_{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for (i, (mu, sd)) in mv.mean.iter().zip(&mv.sd).enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(mu.iter().chain(sd).map(|v| fmt_f64(*v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_mean_var(path: &Path) -> Result<MeanVarTable> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let m = headers.iter().filter(|h| h.trim().starts_with("mu_")).count();
    let mut expected = vec!["x_id".to_string()];
    expected.extend((1..=m).map(|j| format!("mu_{j}")));
    expected.extend((1..=m).map(|j| format!("sd_{j}")));
    if m == 0 || headers.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse { line: 1, message: "expected header x_id,mu_1..mu_M,sd_1..sd_M".into() });
    }
    let mut rows: Vec<Option<(Vec<f64>, Vec<f64>)>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let i: usize = parse_field(&rec[0], line, "x_id")?;
        let vals = (1..=2 * m).map(|c| parse_field::<f64>(&rec[c], line, "value")).collect::<Result<Vec<_>>>()?;
        if vals[m..].iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Parse { line, message: "negative standard deviation".into() });
        }
        if rows.len() <= i {
            rows.resize(i + 1, None);
        }
        if rows[i].is_some() {
            return Err(Error::Parse { line, message: format!("duplicate x_id {i}") });
        }
        rows[i] = Some((vals[..m].to_vec(), vals[m..].to_vec()));
    }
    let mut mean = Vec::with_capacity(rows.len());
    let mut sd = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        let (mu, s) = row.ok_or_else(|| Error::InvalidTable(format!("missing x_id {i}")))?;
        mean.push(mu);
        sd.push(s);
    }
    MeanVarTable::new(mean, sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::UniRisk;
    use crate::solve::solve_str;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn degenerate_ellipsoid_is_its_center() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::EllipsoidClouds {
                centers: vec![vec![1.0, 2.0], vec![-1.0, 0.5]],
                axes: vec![vec![0.0, 0.0]; 2],
                k: 7,
            },
            seed: 3,
        };
        let t = generate(&spec).unwrap();
        for k in 0..7 {
            assert_eq!(t.outcome(0, k), &[1.0, 2.0]);
            assert_eq!(t.outcome(1, k), &[-1.0, 0.5]);
        }
    }

    #[test]
    fn ellipsoid_samples_stay_inside() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::EllipsoidClouds {
                centers: vec![vec![0.0, 0.0, 0.0]],
                axes: vec![vec![1.0, 2.0, 0.5]],
                k: 500,
            },
            seed: 1,
        };
        let t = generate(&spec).unwrap();
        for y in t.outcomes(0).iter() {
            let r = (y[0] / 1.0).powi(2) + (y[1] / 2.0).powi(2) + (y[2] / 0.5).powi(2);
            assert!(r <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn toy_counts() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::AnalyticToy {
                formula: ToyFormula::Smooth3,
                input_grid: vec![10, 10],
                scenario_grid: vec![8, 8],
            },
            seed: 0,
        };
        let t = generate(&spec).unwrap();
        assert_eq!((t.n_inputs(), t.n_scenarios(), t.dim()), (100, 64, 3));
        assert_eq!(t.input_coords().unwrap()[11], vec![1.0 / 9.0, 1.0 / 9.0]);
    }

    #[test]
    fn resolution_one_rejected() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::AnalyticToy {
                formula: ToyFormula::Smooth2,
                input_grid: vec![1, 4],
                scenario_grid: vec![2, 2],
            },
            seed: 0,
        };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec { kind: SyntheticKind::Uniform { n_inputs: 4, k: 5, m: 2, lo: -1.0, hi: 1.0 }, seed: 9 };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SyntheticSpec { seed: 10, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn spec_json_shape() {
        let spec = rocket_spec();
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"kind\":\"analytic_toy\""));
        let back: SyntheticSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let spec = SyntheticSpec {
            kind: SyntheticKind::AnalyticToy {
                formula: ToyFormula::Smooth2,
                input_grid: vec![3, 2],
                scenario_grid: vec![2, 2],
            },
            seed: 0,
        };
        let t = generate(&spec).unwrap();
        save_table(&t, &path).unwrap();
        assert_eq!(load_table(&path).unwrap(), t);

        let text = std::fs::read_to_string(&path).unwrap();
        let missing: String = text.lines().filter(|l| !l.starts_with("2,3,")).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, missing).unwrap();
        let e = load_table(&path).unwrap_err().to_string();
        assert!(e.contains("x_id=2, xi_id=3"), "{e}");

        let ragged = text.replacen("1,0,", "1,0,", 1).replace("\n1,1,", "\n1,1,5,");
        std::fs::write(&path, ragged).unwrap();
        let e = load_table(&path).unwrap_err();
        assert!(matches!(e, Error::Parse { line, .. } if line > 1), "{e}");

        std::fs::write(&path, &text).unwrap();
        std::fs::write(sidecar_path(&path), r#"{"M": 2, "weights": [0.5, 0.4]}"#).unwrap();
        let e = load_table(&path).unwrap_err().to_string();
        assert!(e.contains("weights sum 0.9"), "{e}");
    }

    #[test]
    fn bad_number_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "x_id,xi_id,y_1\n0,0,1.0\n1,0,abc\n").unwrap();
        std::fs::write(sidecar_path(&path), r#"{"M": 1, "weights": [1.0]}"#).unwrap();
        match load_table(&path).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("abc"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn mean_var_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mv.csv");
        let mv = MeanVarTable::new(vec![vec![0.1, -2.0], vec![1.0 / 3.0, 4.0]], vec![vec![0.0, 0.5], vec![1e-9, 2.0]])
            .unwrap();
        save_mean_var(&mv, &path).unwrap();
        assert_eq!(load_mean_var(&path).unwrap(), mv);
    }

    #[test]
    fn zero_sd_argmins_coincide() {
        let mv = MeanVarTable::new(vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]], vec![vec![0.0; 2]; 3]).unwrap();
        let d = target_decomposition(&mv, &[0.4, 0.6], &[0.5, 0.5]).unwrap();
        assert_eq!(d.rts_argmin, d.str_argmin);
        assert_eq!(d.rts_argmin, vec![1]);
    }

    #[test]
    fn exact_target_hit_scores_zero() {
        let mv = MeanVarTable::new(vec![vec![2.0, 1.0], vec![-1.0, 3.0]], vec![vec![0.0; 2], vec![0.1; 2]]).unwrap();
        let d = target_decomposition(&mv, &[2.0, 1.0], &[0.3, 0.7]).unwrap();
        assert_eq!(d.rts_argmin, vec![0]);
        assert_eq!(d.str_argmin, vec![0]);
        assert_eq!(d.terms[0].str_value, 0.0);
    }

    #[test]
    fn toy_instance_splits_argmins() {
        let (spec, cfg) = toy_target_instance();
        let mv = mean_var_of(&generate(&spec).unwrap());
        let d = target_decomposition(&mv, &cfg.target, &cfg.weights).unwrap();
        assert!(d.rts_argmin.iter().all(|i| !d.str_argmin.contains(i)), "{:?} {:?}", d.rts_argmin, d.str_argmin);
    }

    #[test]
    fn cake_constraints() {
        let c = ConstraintSet::cake();
        assert!(c.contains(&[0.0323, 0.2581, 0.2903, 0.0968, 0.1935, 0.1290]));
        assert!(c.contains(&[0.0323, 0.2258, 0.2258, 0.1613, 0.1935, 0.1613]));
        assert!(!c.contains(&[0.05, 0.2, 0.5, 0.1, 0.1, 0.05]));
        assert!(!c.contains(&[0.0323, 0.2581, 0.2903, 0.0968, 0.1935, 0.2290]));
        let pts = simplex_grid(6, 31);
        let ix = [1usize, 8, 9, 3, 6, 4];
        let p: Vec<f64> = ix.iter().map(|v| *v as f64 / 31.0).collect();
        assert!(pts.contains(&p));
        assert!(!simplex_constraint_filter(&pts, &c).is_empty());
    }

    #[test]
    fn simplex_grid_counts() {
        // C(n + d - 1, d - 1) points
        assert_eq!(simplex_grid(3, 4).len(), 15);
        assert_eq!(simplex_grid(6, 10).len(), 3003);
        for p in simplex_grid(4, 5) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn named_configs() {
        let cake = TargetConfig::cake();
        assert_eq!(cake.target, vec![-360.0, 4.0, 1.0]);
        assert_eq!(cake.weights, vec![0.004, 0.155, 0.841]);
        let r = AcquisitionConfig::rocket();
        assert_eq!(r.eta, vec![-1.05, -1.30, -1.20]);
        assert_eq!((r.alpha, r.kappa, r.beta, r.budget, r.initial), (0.9, 0.1, 2.0, 65, 5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn save_load_identity(seed in any::<u64>(), n in 1usize..5, k in 1usize..5, m in 1usize..4) {
            let spec = SyntheticSpec { kind: SyntheticKind::Uniform { n_inputs: n, k, m, lo: -1e3, hi: 1e3 }, seed };
            let t = generate(&spec).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.csv");
            save_table(&t, &path).unwrap();
            prop_assert_eq!(load_table(&path).unwrap(), t);
        }

        #[test]
        fn decomposition_matches_expected_weighted_igd(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mean: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let sd: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
            let mv = MeanVarTable::new(mean, sd).unwrap();
            let target = vec![0.5, -0.5, 1.0];
            let w = vec![0.2, 0.3, 0.5];
            let d = target_decomposition(&mv, &target, &w).unwrap();
            let table = realise_mean_var(&mv, 64, seed).unwrap();
            let s = Scalariser::WeightedIgd { target: target.clone().into(), w: w.clone() };
            let r = solve_str(&table, &s, &UniRisk::Expectation).unwrap();
            for (v, t) in r.values.iter().zip(&d.terms) {
                prop_assert!((v + t.str_value).abs() <= 1e-9 * (1.0 + t.str_value));
            }
        }
    }
}
