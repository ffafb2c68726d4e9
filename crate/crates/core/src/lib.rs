//! Sharp identified sets for choice-model parameters under zero-set
//! restrictions on a finite latent space, plus sensitivity analysis and
//! cluster-bootstrap inference.

pub mod bounds_solver;
pub mod empirical;
pub mod error;
pub mod inference;
pub mod latent_space;
pub mod oracle;
pub mod parameters;
pub mod qp;
pub mod restrictions;
pub mod sensitivity;

pub use error::{Error, Result};
pub use bounds_solver::{
    solve_bounds, CellMap, IdentificationProblem, Interval, LinearProgram, LpBackend, MicroLp, SolveReport,
};
pub use empirical::{CellSample, ClusteredSample, DiscretizationMap, EmpiricalDistribution, Observation};
pub use inference::{TauRule, TestConfig, TestResult};
pub use latent_space::{AlternativeSet, ChoiceSet, LatentIndex, LatentPoint, OutcomeGrid, PreferenceType};
pub use parameters::{Denominator, ParameterSpec};
pub use qp::{Clarabel, QpBackend};
pub use restrictions::{prune, PrunedSupport, RestrictionSet, ZeroSetRestriction};
pub use sensitivity::MixtureProblem;
