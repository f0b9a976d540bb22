//! Most-probable (MaxProb) and expected (ExpOc) occurrence vectors of a
//! constrained multinomial working set, and the relative-entropy maximizer
//! they approach as the sample size grows.
//!
//! The numeric core is generic over [`Real`] (implemented for `f32` and
//! `f64`); exact constraint arithmetic uses [`num_rational::BigRational`].
//! The aliases below fix the scalar to `f64`, which is what the CLI and the
//! reference sweeps use.

pub mod enumerate;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod rational;
pub mod scalar;
pub mod solve;

pub use error::{Error, Result};
pub use scalar::Real;

pub use enumerate::{
    count_working_set, enumerate_working_set, scale_constraints, Budget, ScaledConstraint,
    ScaledSystem, WorkingSetIter, WorkingSetStats,
};
pub use model::{MomentConstraint, OccurrenceVector, WorkingSetSpec};
pub use rational::Rational;

/// Prior generator over `f64`.
pub type Prior = model::PriorGenerator<f64>;
/// Probability vector over `f64`.
pub type Pmf = model::ProbabilityVector<f64>;
/// MaxProb outcome over `f64`.
pub type MaxProb = solve::MaxProbResult<f64>;
/// ExpOc outcome over `f64`.
pub type ExpOc = solve::ExpOcResult<f64>;
/// REM outcome over `f64`.
pub type Rem = solve::RemResult<f64>;
/// Wallis–Jaynes record over `f64`.
pub type Wallis = solve::WallisRecord<f64>;
/// Convergence table row over `f64`.
pub type Row = harness::ConvergenceRow<f64>;
/// Experiment definition over `f64`.
pub type Experiment = harness::ExperimentSpec<f64>;
