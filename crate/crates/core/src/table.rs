//! Objective vectors, scenario distributions and sampled objective tables.
//!
//! Everything in this crate works on finite input and scenario sets. An
//! [`ObjectiveTable`] holds `f(x_i, xi_k)` for every input `i` and scenario
//! `k`, together with the scenario weights.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Tolerance on the total mass of a scenario distribution.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// An objective vector under the maximisation convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjVec(pub Vec<f64>);

impl ObjVec {
    /// Builds a vector, rejecting empty or non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("objective vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "objective vector has non-finite components: {values:?}"
            )));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ObjVec {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ObjVec {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ObjVec {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl From<&[f64]> for ObjVec {
    fn from(values: &[f64]) -> Self {
        Self(values.to_vec())
    }
}

/// Probability weights over a finite scenario set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScenarioDist {
    weights: Vec<f64>,
}

impl ScenarioDist {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("scenario weights"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scenario weight {w} is negative or non-finite"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameter(format!("weights sum {sum}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Empty("scenario weights"));
        }
        Ok(Self { weights: vec![1.0 / k as f64; k] })
    }

    /// Unit mass on scenario `k` out of `n`.
    pub fn point_mass(k: usize, n: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidParameter(format!("scenario {k} out of range 0..{n}")));
        }
        let mut weights = vec![0.0; n];
        weights[k] = 1.0;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ScenarioDist {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<ScenarioDist> for Vec<f64> {
    fn from(dist: ScenarioDist) -> Self {
        dist.weights
    }
}

/// A non-empty subset of scenario indices, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct UncertaintySubset {
    indices: Vec<usize>,
}

impl UncertaintySubset {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("uncertainty subset"));
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self { indices })
    }

    pub fn full(k: usize) -> Result<Self> {
        Self::new((0..k).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Largest index, which bounds the scenario count the subset can apply to.
    pub fn max_index(&self) -> usize {
        *self.indices.last().expect("subset is non-empty")
    }

    pub fn validate(&self, n_scenarios: usize) -> Result<()> {
        if self.max_index() >= n_scenarios {
            return Err(Error::InvalidParameter(format!(
                "uncertainty subset index {} out of range 0..{n_scenarios}",
                self.max_index()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for UncertaintySubset {
    type Error = Error;

    fn try_from(indices: Vec<usize>) -> Result<Self> {
        Self::new(indices)
    }
}

impl From<UncertaintySubset> for Vec<usize> {
    fn from(subset: UncertaintySubset) -> Self {
        subset.indices
    }
}

/// Borrowed `K x M` view over the outcomes of a single input.
#[derive(Debug, Clone, Copy)]
pub struct Outcomes<'a> {
    data: &'a [f64],
    m: usize,
}

impl<'a> Outcomes<'a> {
    /// Wraps a row-major buffer of `len / m` vectors.
    pub fn new(data: &'a [f64], m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("objective dimension must be >= 1".into()));
        }
        if data.len() % m != 0 {
            return Err(Error::DimensionMismatch { expected: m, found: data.len() % m });
        }
        Ok(Self { data, m })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, k: usize) -> &'a [f64] {
        &self.data[k * self.m..(k + 1) * self.m]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &'a [f64]> + 'a {
        self.data.chunks_exact(self.m)
    }

    /// Scenario sample of objective `m`.
    pub fn column(&self, m: usize) -> Vec<f64> {
        self.iter().map(|y| y[m]).collect()
    }

    pub fn raw(&self) -> &'a [f64] {
        self.data
    }
}

/// Flattens a list of vectors into a row-major buffer, checking dimensions.
pub fn flatten(points: &[ObjVec]) -> Result<(Vec<f64>, usize)> {
    let first = points.first().ok_or(Error::Empty("point set"))?;
    let m = first.dim();
    let mut out = Vec::with_capacity(points.len() * m);
    for p in points {
        check_dim(m, p.dim())?;
        out.extend_from_slice(p);
    }
    Ok((out, m))
}

/// Sampled objective values over a finite input set and a weighted scenario set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTable {
    n_inputs: usize,
    n_scenarios: usize,
    m: usize,
    values: Vec<f64>,
    dist: ScenarioDist,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scenario_coords: Option<Vec<Vec<f64>>>,
}

impl ObjectiveTable {
    /// Builds a table from a row-major `N x K x M` buffer.
    pub fn new(
        n_inputs: usize,
        n_scenarios: usize,
        m: usize,
        values: Vec<f64>,
        dist: ScenarioDist,
    ) -> Result<Self> {
        if n_inputs == 0 {
            return Err(Error::Empty("input set"));
        }
        if n_scenarios == 0 {
            return Err(Error::Empty("scenario set"));
        }
        if m == 0 {
            return Err(Error::InvalidTable("objective dimension must be >= 1".into()));
        }
        if values.len() != n_inputs * n_scenarios * m {
            return Err(Error::InvalidTable(format!(
                "expected {} values for {n_inputs} inputs x {n_scenarios} scenarios x {m} objectives, got {}",
                n_inputs * n_scenarios * m,
                values.len()
            )));
        }
        if dist.len() != n_scenarios {
            return Err(Error::InvalidTable(format!(
                "distribution has {} weights for {n_scenarios} scenarios",
                dist.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let i = pos / (n_scenarios * m);
            let k = (pos / m) % n_scenarios;
            return Err(Error::InvalidTable(format!("non-finite outcome at ({i}, {k})")));
        }
        Ok(Self {
            n_inputs,
            n_scenarios,
            m,
            values,
            dist,
            input_labels: None,
            input_coords: None,
            scenario_coords: None,
        })
    }

    /// Builds a table from nested `outcomes[i][k]` vectors.
    pub fn from_outcomes(outcomes: Vec<Vec<ObjVec>>, dist: ScenarioDist) -> Result<Self> {
        let n = outcomes.len();
        let k = outcomes.first().map(Vec::len).ok_or(Error::Empty("input set"))?;
        let m = outcomes
            .first()
            .and_then(|row| row.first())
            .map(ObjVec::dim)
            .ok_or(Error::Empty("scenario set"))?;
        let mut values = Vec::with_capacity(n * k * m);
        for (i, row) in outcomes.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidTable(format!(
                    "input {i} has {} scenarios, expected {k}",
                    row.len()
                )));
            }
            for y in row {
                check_dim(m, y.dim())?;
                values.extend_from_slice(y);
            }
        }
        Self::new(n, k, m, values, dist)
    }

    /// A single-scenario table whose outcomes are the given points.
    pub fn deterministic(points: &[ObjVec]) -> Result<Self> {
        let (values, m) = flatten(points)?;
        Self::new(points.len(), 1, m, values, ScenarioDist::uniform(1)?)
    }

    pub fn with_input_labels(mut self, labels: Vec<String>) -> Result<Self> {
        check_dim(self.n_inputs, labels.len())?;
        self.input_labels = Some(labels);
        Ok(self)
    }

    pub fn with_input_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(self.n_inputs, coords.len())?;
        self.input_coords = Some(coords);
        Ok(self)
    }

    pub fn with_scenario_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(self.n_scenarios, coords.len())?;
        self.scenario_coords = Some(coords);
        Ok(self)
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_scenarios(&self) -> usize {
        self.n_scenarios
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn dist(&self) -> &ScenarioDist {
        &self.dist
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn input_labels(&self) -> Option<&[String]> {
        self.input_labels.as_deref()
    }

    pub fn input_coords(&self) -> Option<&[Vec<f64>]> {
        self.input_coords.as_deref()
    }

    pub fn scenario_coords(&self) -> Option<&[Vec<f64>]> {
        self.scenario_coords.as_deref()
    }

    pub fn outcome(&self, i: usize, k: usize) -> &[f64] {
        let start = (i * self.n_scenarios + k) * self.m;
        &self.values[start..start + self.m]
    }

    /// Output set of input `i`.
    pub fn outcomes(&self, i: usize) -> Outcomes<'_> {
        let stride = self.n_scenarios * self.m;
        Outcomes { data: &self.values[i * stride..(i + 1) * stride], m: self.m }
    }

    /// Checks that every index in `subset` names an input; rejects empty subsets.
    pub fn check_subset(&self, subset: &[usize]) -> Result<()> {
        if subset.is_empty() {
            return Err(Error::Empty("input subset"));
        }
        if let Some(&i) = subset.iter().find(|&&i| i >= self.n_inputs) {
            return Err(Error::InvalidParameter(format!(
                "input {i} out of range 0..{}",
                self.n_inputs
            )));
        }
        Ok(())
    }

    pub fn all_inputs(&self) -> Vec<usize> {
        (0..self.n_inputs).collect()
    }

    /// Restricts the table to the given inputs, in the given order.
    pub fn select_inputs(&self, subset: &[usize]) -> Result<Self> {
        self.check_subset(subset)?;
        let mut values = Vec::with_capacity(subset.len() * self.n_scenarios * self.m);
        for &i in subset {
            values.extend_from_slice(self.outcomes(i).raw());
        }
        let mut out = Self::new(subset.len(), self.n_scenarios, self.m, values, self.dist.clone())?;
        if let Some(labels) = &self.input_labels {
            out.input_labels = Some(subset.iter().map(|&i| labels[i].clone()).collect());
        }
        if let Some(coords) = &self.input_coords {
            out.input_coords = Some(subset.iter().map(|&i| coords[i].clone()).collect());
        }
        out.scenario_coords = self.scenario_coords.clone();
        Ok(out)
    }

    /// Componentwise lower and upper bounds over every outcome.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.m];
        let mut hi = vec![f64::NEG_INFINITY; self.m];
        for y in self.values.chunks_exact(self.m) {
            for m in 0..self.m {
                lo[m] = lo[m].min(y[m]);
                hi[m] = hi[m].max(y[m]);
            }
        }
        (lo, hi)
    }

    /// True when `eta` is strongly dominated by every outcome of the table.
    pub fn strongly_dominates_reference(&self, eta: &[f64]) -> bool {
        eta.len() == self.m
            && self
                .values
                .chunks_exact(self.m)
                .all(|y| y.iter().zip(eta).all(|(a, b)| a > b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_must_sum_to_one() {
        let err = ScenarioDist::new(vec![0.5, 0.4]).unwrap_err();
        assert!(err.to_string().contains("weights sum 0.9"), "{err}");
        assert!(ScenarioDist::new(vec![0.25; 4]).is_ok());
        assert!(ScenarioDist::new(vec![1.5, -0.5]).is_err());
        assert!(ScenarioDist::new(vec![]).is_err());
    }

    #[test]
    fn table_layout_is_input_major() {
        let t = ObjectiveTable::from_outcomes(
            vec![
                vec![vec![1.0, 2.0].into(), vec![3.0, 4.0].into()],
                vec![vec![5.0, 6.0].into(), vec![7.0, 8.0].into()],
            ],
            ScenarioDist::uniform(2).unwrap(),
        )
        .unwrap();
        assert_eq!(t.outcome(1, 0), &[5.0, 6.0]);
        assert_eq!(t.outcomes(0).get(1), &[3.0, 4.0]);
        assert_eq!(t.outcomes(1).column(1), vec![6.0, 8.0]);
        let (lo, hi) = t.bounds();
        assert_eq!(lo, vec![1.0, 2.0]);
        assert_eq!(hi, vec![7.0, 8.0]);
        assert!(t.strongly_dominates_reference(&[0.0, 0.0]));
        assert!(!t.strongly_dominates_reference(&[1.0, 0.0]));
    }

    #[test]
    fn rejects_ragged_and_non_finite() {
        let ragged = ObjectiveTable::from_outcomes(
            vec![vec![vec![1.0].into(), vec![2.0].into()], vec![vec![1.0].into()]],
            ScenarioDist::uniform(2).unwrap(),
        );
        assert!(ragged.is_err());
        let nan = ObjectiveTable::new(1, 1, 1, vec![f64::NAN], ScenarioDist::uniform(1).unwrap());
        assert!(nan.is_err());
    }

    #[test]
    fn subset_is_sorted_and_checked() {
        let s = UncertaintySubset::new(vec![3, 1, 3]).unwrap();
        assert_eq!(s.indices(), &[1, 3]);
        assert!(s.validate(4).is_ok());
        assert!(s.validate(3).is_err());
        assert!(UncertaintySubset::new(vec![]).is_err());
    }
}
