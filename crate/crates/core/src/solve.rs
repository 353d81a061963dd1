//! Scalarised robust solvers, union-robust fronts, greedy subset selection and
//! the sequential hypervolume-improvement acquisition loop.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::metrics::{str_hv_contributions, tau_hv};
use crate::pareto::{pareto_front, Relation};
use crate::risk::{MultiRisk, UniRisk};
use crate::scalarise::{direction_grid, length, DirectionGrid, GridMode, Scalariser};
use crate::surface::{risk_sets, scenario_front_lengths};
use crate::table::ObjectiveTable;

/// Values of every input plus the inputs attaining the maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub argmax: Vec<usize>,
    pub value: f64,
    pub values: Vec<f64>,
}

impl SolveResult {
    fn from_values(values: Vec<f64>) -> Self {
        let value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let argmax = (0..values.len()).filter(|&i| values[i] == value).collect();
        Self { argmax, value, values }
    }

    /// The lowest-index maximiser.
    pub fn best(&self) -> usize {
        self.argmax[0]
    }
}

fn check_scalariser(table: &ObjectiveTable, s: &Scalariser) -> Result<()> {
    s.validate()?;
    check_dim(table.dim(), s.dim())
}

/// Maximises the best scalarised value over each input's risk set.
pub fn solve_rts(table: &ObjectiveTable, s: &Scalariser, mrho: &MultiRisk) -> Result<SolveResult> {
    check_scalariser(table, s)?;
    let sets = risk_sets(table, &table.all_inputs(), mrho)?;
    Ok(SolveResult::from_values(sets.iter().map(|r| r.max_scalarised(s)).collect()))
}

/// Maximises the risk of the scalarised scenario sample.
pub fn solve_str(table: &ObjectiveTable, s: &Scalariser, rho: &UniRisk) -> Result<SolveResult> {
    check_scalariser(table, s)?;
    rho.validate(table.n_scenarios())?;
    let w = table.dist().weights();
    let values = (0..table.n_inputs())
        .into_par_iter()
        .map(|i| {
            let h: Vec<f64> = table.outcomes(i).iter().map(|y| s.value(y)).collect();
            rho.eval(&h, w)
        })
        .collect();
    Ok(SolveResult::from_values(values))
}

/// A point of the union front and the input that owns it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnedPoint {
    pub input: usize,
    pub point: Vec<f64>,
}

/// Pareto front of the union of risk sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionFront {
    /// Inputs owning at least one front point, ascending.
    pub inputs: Vec<usize>,
    pub points: Vec<OwnedPoint>,
}

/// Front of the union of every input's risk set. Curved risk sets are rejected.
pub fn union_robust_front(table: &ObjectiveTable, mrho: &MultiRisk, rel: Relation) -> Result<UnionFront> {
    let sets = risk_sets(table, &table.all_inputs(), mrho)?;
    let mut owned = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        for p in set.finite_points()? {
            owned.push(OwnedPoint { input: i, point: p.clone() });
        }
    }
    let pts: Vec<&[f64]> = owned.iter().map(|o| o.point.as_slice()).collect();
    let front = pareto_front(&pts, rel)?;
    let points: Vec<OwnedPoint> = front.into_iter().map(|j| owned[j].clone()).collect();
    let mut inputs: Vec<usize> = points.iter().map(|o| o.input).collect();
    inputs.dedup();
    Ok(UnionFront { inputs, points })
}

/// Maximum number of selected inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalityBudget(usize);

impl CardinalityBudget {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter("cardinality budget must be >= 1".into()));
        }
        Ok(Self(p))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Selection order and objective value after each addition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyResult {
    pub subset: Vec<usize>,
    pub trace: Vec<f64>,
}

impl GreedyResult {
    pub fn value(&self) -> f64 {
        self.trace.last().copied().unwrap_or(0.0)
    }
}

/// Direction-averaged risk statistic of the per-scenario fronts of `subset`.
/// The empty subset scores 0.
pub fn subset_statistic(
    table: &ObjectiveTable,
    subset: &[usize],
    rho: &UniRisk,
    eta: &[f64],
    grid: &DirectionGrid,
) -> Result<f64> {
    if subset.is_empty() {
        return Ok(0.0);
    }
    table.check_subset(subset)?;
    rho.validate(table.n_scenarios())?;
    check_dim(table.dim(), eta.len())?;
    check_dim(table.dim(), grid.dim())?;
    let w = table.dist().weights();
    let total: f64 = grid
        .directions()
        .par_iter()
        .map(|lambda| rho.eval(&scenario_front_lengths(table, subset, eta, lambda), w))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total / grid.len() as f64)
}

/// Greedy maximisation of [`subset_statistic`] under a cardinality budget.
pub fn greedy_subset(
    table: &ObjectiveTable,
    rho: &UniRisk,
    eta: &[f64],
    grid: &DirectionGrid,
    budget: CardinalityBudget,
) -> Result<GreedyResult> {
    rho.validate(table.n_scenarios())?;
    check_dim(table.dim(), eta.len())?;
    check_dim(table.dim(), grid.dim())?;
    let (n, k) = (table.n_inputs(), table.n_scenarios());
    let w = table.dist().weights();
    // lens[i][j * k + s]: length of input i in scenario s along direction j.
    let lens: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            grid.iter()
                .flat_map(|lambda| (0..k).map(move |s| (lambda, s)))
                .map(|(lambda, s)| length(eta, lambda, table.outcome(i, s)))
                .collect()
        })
        .collect();
    let mut current = vec![0.0f64; grid.len() * k];
    let mut chosen: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    while chosen.len() < budget.get().min(n) {
        let scores: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                if chosen.contains(&i) {
                    return f64::NEG_INFINITY;
                }
                let mut buf = vec![0.0; k];
                let mut total = 0.0;
                for j in 0..grid.len() {
                    for s in 0..k {
                        buf[s] = current[j * k + s].max(lens[i][j * k + s]);
                    }
                    total += rho.eval(&buf, w);
                }
                total / grid.len() as f64
            })
            .collect();
        let best = SolveResult::from_values(scores);
        let pick = best.best();
        for (c, l) in current.iter_mut().zip(&lens[pick]) {
            *c = c.max(*l);
        }
        chosen.push(pick);
        trace.push(best.value);
    }
    Ok(GreedyResult { subset: chosen, trace })
}

/// A noisy evaluation of one input under one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub input: usize,
    pub scenario: usize,
    pub y: Vec<f64>,
}

/// Predictive mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Model of the objective over input and scenario indices.
pub trait Surrogate {
    fn fit(&mut self, observations: &[Observation]) -> Result<()>;
    fn predict(&self, input: usize, scenario: usize) -> Prediction;
}

/// Inverse-distance-weighted interpolation on joint input and scenario
/// coordinates. The sd is the leave-one-out RMS residual, scaled down near data.
#[derive(Debug, Clone)]
pub struct IdwSurrogate {
    input_coords: Vec<Vec<f64>>,
    scenario_coords: Vec<Vec<f64>>,
    length_scale: f64,
    power: f64,
    prior_sd: Vec<f64>,
    points: Vec<(Vec<f64>, Vec<f64>)>,
    residual: Vec<f64>,
}

fn normalise_coords(coords: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = coords.first().map_or(0, Vec::len);
    let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    for c in coords {
        for i in 0..d {
            lo[i] = lo[i].min(c[i]);
            hi[i] = hi[i].max(c[i]);
        }
    }
    coords
        .iter()
        .map(|c| {
            (0..d)
                .map(|i| if hi[i] > lo[i] { (c[i] - lo[i]) / (hi[i] - lo[i]) } else { 0.0 })
                .collect()
        })
        .collect()
}

impl IdwSurrogate {
    /// Coordinates are rescaled to the unit box per dimension. Missing
    /// coordinates fall back to the index.
    pub fn new(
        input_coords: Option<&[Vec<f64>]>,
        scenario_coords: Option<&[Vec<f64>]>,
        n_inputs: usize,
        n_scenarios: usize,
        prior_sd: Vec<f64>,
    ) -> Self {
        let index = |n: usize| (0..n).map(|i| vec![i as f64]).collect::<Vec<_>>();
        let ic = input_coords.map(<[Vec<f64>]>::to_vec).unwrap_or_else(|| index(n_inputs));
        let sc = scenario_coords.map(<[Vec<f64>]>::to_vec).unwrap_or_else(|| index(n_scenarios));
        Self {
            input_coords: normalise_coords(&ic),
            scenario_coords: normalise_coords(&sc),
            length_scale: 0.3,
            power: 2.0,
            prior_sd,
            points: Vec::new(),
            residual: Vec::new(),
        }
    }

    /// Builds a surrogate for `table` with prior sd equal to the objective ranges.
    pub fn for_table(table: &ObjectiveTable) -> Self {
        let (lo, hi) = table.bounds();
        let prior = lo.iter().zip(&hi).map(|(l, h)| (h - l).max(f64::MIN_POSITIVE)).collect();
        Self::new(
            table.input_coords(),
            table.scenario_coords(),
            table.n_inputs(),
            table.n_scenarios(),
            prior,
        )
    }

    pub fn with_length_scale(mut self, length_scale: f64) -> Self {
        self.length_scale = length_scale;
        self
    }

    fn joint(&self, input: usize, scenario: usize) -> Vec<f64> {
        let mut z = self.input_coords[input].clone();
        z.extend_from_slice(&self.scenario_coords[scenario]);
        z
    }

    fn interpolate(&self, z: &[f64], skip: Option<usize>) -> (Vec<f64>, f64) {
        let m = self.prior_sd.len();
        let mut num = vec![0.0; m];
        let mut den = 0.0;
        let mut exact = vec![0.0; m];
        let mut n_exact = 0usize;
        let mut d_min = f64::INFINITY;
        for (n, (p, y)) in self.points.iter().enumerate() {
            if Some(n) == skip {
                continue;
            }
            let d = p.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            d_min = d_min.min(d);
            if d < 1e-12 {
                n_exact += 1;
                for i in 0..m {
                    exact[i] += y[i];
                }
                continue;
            }
            let w = d.powf(-self.power);
            den += w;
            for i in 0..m {
                num[i] += w * y[i];
            }
        }
        if n_exact > 0 {
            return (exact.iter().map(|v| v / n_exact as f64).collect(), 0.0);
        }
        (num.iter().map(|v| v / den).collect(), d_min)
    }
}

impl Surrogate for IdwSurrogate {
    fn fit(&mut self, observations: &[Observation]) -> Result<()> {
        let m = self.prior_sd.len();
        self.points = observations
            .iter()
            .map(|o| {
                check_dim(m, o.y.len())?;
                if o.input >= self.input_coords.len() || o.scenario >= self.scenario_coords.len() {
                    return Err(Error::InvalidParameter(format!(
                        "observation at ({}, {}) is outside the table",
                        o.input, o.scenario
                    )));
                }
                Ok((self.joint(o.input, o.scenario), o.y.clone()))
            })
            .collect::<Result<_>>()?;
        self.residual = if self.points.len() < 2 {
            self.prior_sd.clone()
        } else {
            let mut sq = vec![0.0; m];
            for (n, (z, y)) in self.points.iter().enumerate() {
                let (mean, _) = self.interpolate(z, Some(n));
                for i in 0..m {
                    sq[i] += (mean[i] - y[i]).powi(2);
                }
            }
            sq.iter().map(|s| (s / self.points.len() as f64).sqrt()).collect()
        };
        Ok(())
    }

    fn predict(&self, input: usize, scenario: usize) -> Prediction {
        if self.points.is_empty() {
            return Prediction { mean: vec![0.0; self.prior_sd.len()], sd: self.prior_sd.clone() };
        }
        let (mean, d_min) = self.interpolate(&self.joint(input, scenario), None);
        let shrink = (d_min / self.length_scale).min(1.0);
        Prediction { mean, sd: self.residual.iter().map(|r| r * shrink).collect() }
    }
}

/// Externally computed per-input means and standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanVarTable {
    pub mean: Vec<Vec<f64>>,
    pub sd: Vec<Vec<f64>>,
}

impl MeanVarTable {
    pub fn new(mean: Vec<Vec<f64>>, sd: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(mean.len(), sd.len())?;
        let m = mean.first().ok_or(Error::Empty("mean/variance table"))?.len();
        for (mu, s) in mean.iter().zip(&sd) {
            check_dim(m, mu.len())?;
            check_dim(m, s.len())?;
            if s.iter().any(|v| !(*v >= 0.0)) || mu.iter().chain(s).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("standard deviations must be finite and >= 0".into()));
            }
        }
        Ok(Self { mean, sd })
    }

    pub fn n_inputs(&self) -> usize {
        self.mean.len()
    }

    pub fn dim(&self) -> usize {
        self.mean[0].len()
    }
}

impl Surrogate for MeanVarTable {
    fn fit(&mut self, _observations: &[Observation]) -> Result<()> {
        Ok(())
    }

    fn predict(&self, input: usize, _scenario: usize) -> Prediction {
        Prediction { mean: self.mean[input].clone(), sd: self.sd[input].clone() }
    }
}

/// Tuning constants of the acquisition loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSettings {
    /// Total number of evaluations.
    pub budget: usize,
    /// Initial evaluations chosen uniformly at random.
    pub initial: usize,
    pub kappa: f64,
    pub beta: f64,
    pub alpha: f64,
    /// Directions used to score candidates.
    pub acquisition_directions: usize,
}

impl Default for AcquisitionSettings {
    fn default() -> Self {
        Self { budget: 65, initial: 5, kappa: 0.1, beta: 2.0, alpha: 0.9, acquisition_directions: 128 }
    }
}

/// Mutable state of one acquisition run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionState {
    pub queried: Vec<usize>,
    pub observations: Vec<Observation>,
    pub eta_hat: Vec<f64>,
    pub settings: AcquisitionSettings,
    pub seed: u64,
}

impl AcquisitionState {
    pub fn new(m: usize, settings: AcquisitionSettings, seed: u64) -> Self {
        Self { queried: Vec::new(), observations: Vec::new(), eta_hat: vec![0.0; m], settings, seed }
    }

    /// Records an observation and refreshes the reference estimate.
    pub fn record(&mut self, obs: Observation) {
        if !self.queried.contains(&obs.input) {
            self.queried.push(obs.input);
        }
        self.observations.push(obs);
        self.eta_hat = range_reference(&self.observations, self.settings.kappa);
    }
}

/// Componentwise `min - kappa * (max - min)` over observed outcomes.
pub fn range_reference(observations: &[Observation], kappa: f64) -> Vec<f64> {
    let m = observations.first().map_or(0, |o| o.y.len());
    (0..m)
        .map(|i| {
            let lo = observations.iter().map(|o| o.y[i]).fold(f64::INFINITY, f64::min);
            let hi = observations.iter().map(|o| o.y[i]).fold(f64::NEG_INFINITY, f64::max);
            lo - kappa * (hi - lo)
        })
        .collect()
}

/// Scores of one acquisition step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub chosen: usize,
    pub improvements: Vec<(usize, f64)>,
}

/// Chooses the candidate with the largest STR hypervolume improvement under the
/// upper-confidence surrogate `mean + beta * sd`, with CVaR at level `alpha`
/// over the scenario weights `weights`.
pub fn str_hvi_step<S: Surrogate + Sync>(
    state: &AcquisitionState,
    surrogate: &S,
    candidates: &[usize],
    weights: &[f64],
    grid: &DirectionGrid,
) -> Result<StepResult> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate set"));
    }
    let cfg = &state.settings;
    let rho = UniRisk::CVaR { alpha: cfg.alpha };
    rho.validate(weights.len())?;
    let eta = &state.eta_hat;
    let m = eta.len();
    check_dim(m, grid.dim())?;
    let k = weights.len();
    let ucb = |i: usize| -> Vec<Vec<f64>> {
        (0..k)
            .map(|s| {
                let p = surrogate.predict(i, s);
                p.mean.iter().zip(&p.sd).map(|(mu, sd)| mu + cfg.beta * sd).collect()
            })
            .collect()
    };
    let values = |i: usize| -> Vec<f64> {
        let outs = ucb(i);
        grid.iter()
            .map(|lambda| {
                let h: Vec<f64> = outs.iter().map(|y| length(eta, lambda, y)).collect();
                tau_hv(m, rho.eval(&h, weights))
            })
            .collect()
    };
    let mut base = vec![0.0f64; grid.len()];
    for v in state.queried.par_iter().map(|&i| values(i)).collect::<Vec<_>>() {
        for (b, x) in base.iter_mut().zip(v) {
            *b = b.max(x);
        }
    }
    let improvements: Vec<(usize, f64)> = candidates
        .par_iter()
        .map(|&i| {
            let gain = if state.queried.contains(&i) {
                0.0
            } else {
                values(i).iter().zip(&base).map(|(v, b)| v.max(*b) - b).sum::<f64>() / grid.len() as f64
            };
            (i, gain)
        })
        .collect();
    let best = improvements.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let chosen = improvements
        .iter()
        .filter(|c| c.1 == best)
        .map(|c| c.0)
        .min()
        .expect("candidates are non-empty");
    Ok(StepResult { chosen, improvements })
}

/// How the next input is picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    StrHviUcb,
    RandomSearch,
}

/// A discretised problem with a noisy oracle.
#[derive(Debug, Clone)]
pub struct AcquisitionProblem {
    pub table: ObjectiveTable,
    /// Reference vector for scoring.
    pub eta: Vec<f64>,
    /// Observation noise sd per objective.
    pub noise_sd: Vec<f64>,
    /// Directions used to score regret.
    pub eval_grid: DirectionGrid,
}

impl AcquisitionProblem {
    /// Noise defaults to 1% of each objective's range; regret directions to
    /// 1024 seeded uniform samples.
    pub fn new(table: ObjectiveTable, eta: Vec<f64>) -> Result<Self> {
        check_dim(table.dim(), eta.len())?;
        let (lo, hi) = table.bounds();
        let noise_sd = lo.iter().zip(&hi).map(|(l, h)| 0.01 * (h - l)).collect();
        let eval_grid = direction_grid(table.dim(), 1024, GridMode::UniformSample { seed: 0 })?;
        Ok(Self { table, eta, noise_sd, eval_grid })
    }
}

/// One line of a regret trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub run: usize,
    pub t: usize,
    pub chosen_input: usize,
    pub value: f64,
    pub regret: f64,
}

/// Natural log of the regret, clipped below at `1e-12`.
pub fn log_regret(regret: f64) -> f64 {
    regret.max(1e-12).ln()
}

/// True STR hypervolume of the full input set on the problem's scoring grid.
pub fn optimal_str_hv(problem: &AcquisitionProblem, alpha: f64) -> Result<f64> {
    let rho = UniRisk::CVaR { alpha };
    rho.validate(problem.table.n_scenarios())?;
    let per_input: Vec<Vec<f64>> = (0..problem.table.n_inputs())
        .into_par_iter()
        .map(|i| str_hv_contributions(&problem.table, i, &rho, &problem.eta, &problem.eval_grid))
        .collect();
    let j = problem.eval_grid.len();
    Ok((0..j)
        .map(|d| per_input.iter().map(|v| v[d]).fold(0.0, f64::max))
        .sum::<f64>()
        / j as f64)
}

/// Runs one seeded acquisition experiment per seed.
pub fn run_acquisition(
    problem: &AcquisitionProblem,
    strategy: Strategy,
    settings: &AcquisitionSettings,
    seeds: &[u64],
) -> Result<Vec<TraceRecord>> {
    let table = &problem.table;
    let n = table.n_inputs();
    if settings.budget == 0 {
        return Err(Error::InvalidParameter("budget must be >= 1".into()));
    }
    check_dim(table.dim(), problem.noise_sd.len())?;
    let rho = UniRisk::CVaR { alpha: settings.alpha };
    rho.validate(table.n_scenarios())?;
    let optimum = optimal_str_hv(problem, settings.alpha)?;
    let noise: Vec<Normal<f64>> = problem
        .noise_sd
        .iter()
        .map(|&s| Normal::new(0.0, s).map_err(|e| Error::InvalidParameter(e.to_string())))
        .collect::<Result<_>>()?;
    let weights = table.dist().weights().to_vec();
    let mut out = Vec::new();
    for (run, &seed) in seeds.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let acq_grid = direction_grid(
            table.dim(),
            settings.acquisition_directions,
            GridMode::UniformSample { seed: seed ^ 0x5eed },
        )?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut state = AcquisitionState::new(table.dim(), settings.clone(), seed);
        let mut surrogate = IdwSurrogate::for_table(table);
        let mut best = vec![0.0f64; problem.eval_grid.len()];
        for t in 1..=settings.budget {
            let unqueried: Vec<usize> = (0..n).filter(|i| !state.queried.contains(i)).collect();
            let chosen = if unqueried.is_empty() {
                order[(t - 1) % n]
            } else if strategy == Strategy::RandomSearch || t <= settings.initial {
                *order.iter().find(|i| !state.queried.contains(i)).expect("unqueried input exists")
            } else {
                surrogate.fit(&state.observations)?;
                str_hvi_step(&state, &surrogate, &unqueried, &weights, &acq_grid)?.chosen
            };
            let u: f64 = rng.random();
            let scenario = sample_index(&weights, u);
            let y = table
                .outcome(chosen, scenario)
                .iter()
                .zip(&noise)
                .map(|(v, d)| v + d.sample(&mut rng))
                .collect();
            state.record(Observation { input: chosen, scenario, y });
            let contrib = str_hv_contributions(table, chosen, &rho, &problem.eta, &problem.eval_grid);
            for (b, c) in best.iter_mut().zip(contrib) {
                *b = b.max(c);
            }
            let value = best.iter().sum::<f64>() / best.len() as f64;
            out.push(TraceRecord { run, t, chosen_input: chosen, value, regret: (optimum - value).max(0.0) });
        }
    }
    Ok(out)
}

fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (k, w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return k;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{ObjVec, ScenarioDist};

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
    fn ties_are_all_reported() {
        let t = table(vec![vec![[1.0, 1.0]], vec![[2.0, 0.0]], vec![[0.0, 2.0]]]);
        let s = Scalariser::Linear { w: vec![0.5, 0.5] };
        let r = solve_rts(&t, &s, &MultiRisk::Identity).unwrap();
        assert_eq!(r.argmax, vec![0, 1, 2]);
        assert_eq!(r.best(), 0);
        let single = table(vec![vec![[1.0, 1.0], [0.0, 0.0]]]);
        assert_eq!(solve_str(&single, &s, &UniRisk::Expectation).unwrap().argmax, vec![0]);
    }

    #[test]
    fn mean_dominated_input_can_own_a_raw_front_point() {
        let t = table(vec![vec![[2.0, 2.0], [2.0, 2.0]], vec![[3.0, -10.0], [0.0, 0.0]]]);
        let means = union_robust_front(&t, &MultiRisk::MvExpectation, Relation::Strict).unwrap();
        assert_eq!(means.inputs, vec![0]);
        let raw = union_robust_front(&t, &MultiRisk::Identity, Relation::Strict).unwrap();
        assert_eq!(raw.inputs, vec![0, 1]);
        assert!(union_robust_front(&t, &MultiRisk::MvdrFull, Relation::Weak).is_err());
    }

    #[test]
    fn greedy_examples() {
        let t = table(vec![
            vec![[3.0, 1.0], [2.0, 1.0]],
            vec![[1.0, 3.0], [1.0, 2.0]],
            vec![[2.0, 2.0], [2.0, 2.0]],
        ]);
        let grid = direction_grid(2, 16, GridMode::Deterministic).unwrap();
        let eta = [0.0, 0.0];
        let rho = UniRisk::Expectation;
        let all = greedy_subset(&t, &rho, &eta, &grid, CardinalityBudget::new(5).unwrap()).unwrap();
        let mut chosen = all.subset.clone();
        chosen.sort_unstable();
        assert_eq!(chosen, vec![0, 1, 2]);
        assert!(all.trace.windows(2).all(|w| w[0] <= w[1]));
        let one = greedy_subset(&t, &rho, &eta, &grid, CardinalityBudget::new(1).unwrap()).unwrap();
        let singles: Vec<f64> =
            (0..3).map(|i| subset_statistic(&t, &[i], &rho, &eta, &grid).unwrap()).collect();
        let best = singles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((one.value() - best).abs() < 1e-12);
        assert_eq!(singles[one.subset[0]], best);
        assert!(CardinalityBudget::new(0).is_err());
    }

    #[test]
    fn idw_surrogate_interpolates_observations() {
        let mut s = IdwSurrogate::new(None, None, 3, 2, vec![1.0]);
        s.fit(&[
            Observation { input: 0, scenario: 0, y: vec![1.0] },
            Observation { input: 2, scenario: 0, y: vec![3.0] },
        ])
        .unwrap();
        let at = s.predict(0, 0);
        assert_eq!(at.mean, vec![1.0]);
        assert_eq!(at.sd, vec![0.0]);
        let mid = s.predict(1, 0);
        assert!((mid.mean[0] - 2.0).abs() < 1e-12);
        assert!(mid.sd[0] > 0.0);
    }

    #[test]
    fn zero_variance_single_scenario_step_is_greedy_hvi() {
        let mean = vec![vec![1.0, 3.0], vec![3.0, 1.0], vec![2.5, 2.5], vec![0.5, 0.5]];
        let mv = MeanVarTable::new(mean.clone(), vec![vec![0.0, 0.0]; 4]).unwrap();
        let mut state = AcquisitionState::new(2, AcquisitionSettings::default(), 0);
        state.record(Observation { input: 0, scenario: 0, y: mean[0].clone() });
        state.record(Observation { input: 3, scenario: 0, y: mean[3].clone() });
        let grid = direction_grid(2, 400, GridMode::Deterministic).unwrap();
        let step = str_hvi_step(&state, &mv, &[0, 1, 2, 3], &[1.0], &grid).unwrap();
        // Deterministic HVI under the same reference, by the grid estimator.
        let eta = state.eta_hat.clone();
        let hv = |set: &[usize]| {
            let pts: Vec<&Vec<f64>> = set.iter().map(|&i| &mean[i]).collect();
            let pts: Vec<Vec<f64>> = pts.into_iter().cloned().collect();
            crate::metrics::hv_on_grid(&pts, &eta, &grid).unwrap().value
        };
        let base = hv(&[0, 3]);
        for &(i, gain) in &step.improvements {
            let mut set = vec![0, 3];
            set.push(i);
            assert!((gain - (hv(&set) - base)).abs() < 1e-9, "input {i}");
        }
        assert_eq!(step.improvements.iter().find(|c| c.0 == 0).unwrap().1, 0.0);
        assert!(str_hvi_step(&state, &mv, &[], &[1.0], &grid).is_err());
    }

    #[test]
    fn exhaustive_random_search_reaches_zero_regret() {
        let t = table(vec![
            vec![[1.0, 3.0], [1.5, 2.0]],
            vec![[3.0, 1.0], [2.0, 1.0]],
            vec![[2.0, 2.0], [2.5, 2.0]],
            vec![[0.5, 0.5], [0.5, 1.0]],
            vec![[2.8, 0.2], [0.2, 2.8]],
        ]);
        let mut problem = AcquisitionProblem::new(t, vec![0.0, 0.0]).unwrap();
        problem.noise_sd = vec![0.0, 0.0];
        let settings = AcquisitionSettings { budget: 5, ..Default::default() };
        let trace = run_acquisition(&problem, Strategy::RandomSearch, &settings, &[3, 4]).unwrap();
        for run in 0..2 {
            let last = trace.iter().filter(|r| r.run == run).last().unwrap();
            assert_eq!(last.t, 5);
            assert_eq!(last.regret, 0.0);
        }
        let again = run_acquisition(&problem, Strategy::RandomSearch, &settings, &[3, 4]).unwrap();
        assert_eq!(trace, again);
        let ucb = run_acquisition(&problem, Strategy::StrHviUcb, &settings, &[3]).unwrap();
        assert_eq!(ucb.last().unwrap().regret, 0.0);
    }

    #[test]
    fn log_regret_is_clipped() {
        assert_eq!(log_regret(0.0), 1e-12f64.ln());
        assert_eq!(log_regret(1.0), 0.0);
    }
}
