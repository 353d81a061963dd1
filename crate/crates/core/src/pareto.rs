//! Pareto orderings, Pareto fronts and set dominance on finite sets.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Pareto domination relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `a - b` is componentwise non-negative.
    Weak,
    /// Weak domination with `a != b`.
    Strict,
    /// `a - b` is componentwise positive.
    Strong,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Weak, Relation::Strict, Relation::Strong];
}

/// Which side of a relation a region collects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// Vectors `y` with `y ⋄ p` for some generator `p`.
    Dominating,
    /// Vectors `y` with `p ⋄ y` for some generator `p`.
    Dominated,
}

fn dominates_unchecked(a: &[f64], b: &[f64], rel: Relation) -> bool {
    match rel {
        Relation::Weak => a.iter().zip(b).all(|(x, y)| x >= y),
        Relation::Strict => {
            a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
        }
        Relation::Strong => a.iter().zip(b).all(|(x, y)| x > y),
    }
}

/// Returns whether `a` dominates `b` under `rel`.
pub fn dominates(a: &[f64], b: &[f64], rel: Relation) -> Result<bool> {
    check_dim(a.len(), b.len())?;
    Ok(dominates_unchecked(a, b, rel))
}

fn common_dim<P: AsRef<[f64]>>(points: &[P], what: &'static str) -> Result<usize> {
    let m = points.first().ok_or(Error::Empty(what))?.as_ref().len();
    for p in points {
        check_dim(m, p.as_ref().len())?;
    }
    Ok(m)
}

/// Indices of the Pareto optimal points, in input order.
///
/// `Weak` keeps every point not strongly dominated by another, `Strict` every
/// point not strictly dominated. Duplicates are all kept. `Strong` is rejected.
pub fn pareto_front<P: AsRef<[f64]>>(points: &[P], rel: Relation) -> Result<Vec<usize>> {
    common_dim(points, "point set")?;
    let beaten_by = match rel {
        Relation::Weak => Relation::Strong,
        Relation::Strict => Relation::Strict,
        Relation::Strong => {
            return Err(Error::InvalidParameter(
                "Pareto fronts are defined for weak or strict relations".into(),
            ))
        }
    };
    Ok((0..points.len())
        .filter(|&i| {
            let p = points[i].as_ref();
            !points
                .iter()
                .enumerate()
                .any(|(j, q)| j != i && dominates_unchecked(q.as_ref(), p, beaten_by))
        })
        .collect())
}

fn check_pair<P: AsRef<[f64]>>(a: &[P], b: &[P]) -> Result<()> {
    let m = common_dim(a, "dominating set")?;
    check_dim(m, common_dim(b, "dominated set")?)
}

/// Upper set dominance: the region dominating `a` under `rel` lies inside the
/// region weakly dominating `b`.
///
/// The weak region of a finite set is closed, so containment holds exactly when
/// every generator of `a` weakly dominates some generator of `b`, for every
/// choice of `rel`.
pub fn set_dominates_upper<P: AsRef<[f64]>>(a: &[P], b: &[P], _rel: Relation) -> Result<bool> {
    check_pair(a, b)?;
    Ok(a.iter().all(|x| {
        b.iter()
            .any(|y| dominates_unchecked(x.as_ref(), y.as_ref(), Relation::Weak))
    }))
}

/// Lower set dominance: the region dominated by `a` under `rel` contains the
/// region weakly dominated by `b`.
pub fn set_dominates_lower<P: AsRef<[f64]>>(a: &[P], b: &[P], rel: Relation) -> Result<bool> {
    check_pair(a, b)?;
    Ok(b.iter()
        .all(|y| a.iter().any(|x| dominates_unchecked(x.as_ref(), y.as_ref(), rel))))
}

/// Rectangular lattice in two or three dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    axes: Vec<Vec<f64>>,
}

impl Lattice {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if !(2..=3).contains(&axes.len()) {
            return Err(Error::Unsupported(format!(
                "lattices must be 2-D or 3-D, got {}-D",
                axes.len()
            )));
        }
        if axes.iter().any(Vec::is_empty) {
            return Err(Error::Empty("lattice axis"));
        }
        Ok(Self { axes })
    }

    /// Equally spaced nodes from `lo` to `hi` inclusive on every axis.
    pub fn regular(lo: &[f64], hi: &[f64], step: f64) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!("lattice step {step} must be > 0")));
        }
        let axes = lo
            .iter()
            .zip(hi)
            .map(|(&l, &h)| {
                let n = ((h - l) / step).round().max(0.0) as usize;
                (0..=n).map(|i| l + i as f64 * step).collect()
            })
            .collect();
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node coordinates in row-major order, last axis fastest.
    pub fn node(&self, mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for d in (0..self.axes.len()).rev() {
            let n = self.axes[d].len();
            out[d] = self.axes[d][index % n];
            index /= n;
        }
        out
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }
}

/// Membership mask of every lattice node in the region generated by `points`.
pub fn domination_region_oracle<P: AsRef<[f64]>>(
    points: &[P],
    rel: Relation,
    side: Side,
    lattice: &Lattice,
) -> Result<Vec<bool>> {
    let m = common_dim(points, "point set")?;
    check_dim(lattice.dim(), m)?;
    Ok(lattice
        .nodes()
        .map(|y| {
            points.iter().any(|p| match side {
                Side::Dominating => dominates_unchecked(&y, p.as_ref(), rel),
                Side::Dominated => dominates_unchecked(p.as_ref(), &y, rel),
            })
        })
        .collect())
}

/// Whether every node set in `inner` is also set in `outer`.
pub fn mask_subset(inner: &[bool], outer: &[bool]) -> bool {
    inner.iter().zip(outer).all(|(&i, &o)| !i || o)
}
