//! Robust multi-objective optimisation over finite input and scenario sets.
//!
//! Uncertain objectives are handled in one of two orders: robustify the
//! output distribution and then scalarise the risk-adjusted set, or scalarise
//! every realised outcome and then apply a univariate risk functional. Fronts
//! in both cases are represented as polar surfaces over a direction grid.

pub mod checks;
pub mod error;
pub mod metrics;
pub mod pareto;
pub mod problems;
pub mod risk;
pub mod scalarise;
pub mod solve;
pub mod surface;
pub mod table;

pub use error::{Error, Result};
pub use pareto::{dominates, pareto_front, set_dominates_lower, set_dominates_upper, Relation};
pub use risk::{multi_risk, uni_risk, MultiRisk, RiskSet, RiskSetKind, UniRisk};
pub use scalarise::{direction_grid, scalarise, Direction, DirectionGrid, GridMode, Scalariser};
pub use surface::{pf_statistic, polar_of_points, rts_front, str_front, PolarSurface};
pub use table::{ObjVec, ObjectiveTable, Outcomes, ScenarioDist, UncertaintySubset};
