//! Repeatable and reliable importance-sampling risk estimation.
//!
//! The crate estimates the failure probability `r* = E_p[φ(x)]` of a black-box
//! subject `φ` under a nominal law `p`, sampling from an importance law `q`.
//! A run draws a budget `n` that is fixed before testing from `(p, q)` and the
//! accuracy/repeatability targets, then rounds the estimate onto a randomized
//! grid so that independent runs report identical values with high
//! probability.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the harness and CLI use.

pub mod distributions;
mod error;
pub mod estimators;
pub mod harness;
pub mod oracle;
pub mod planner;
pub mod rng;
pub mod rounding;
mod scalar;
pub mod subjects;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Distribution = distributions::Distribution<f64>;
pub type SamplePoint = distributions::SamplePoint<f64>;
pub type TruncatedNormal = distributions::TruncatedNormal1D<f64>;
pub type Uniform = distributions::Uniform1D<f64>;
pub type Categorical = distributions::Categorical<f64>;
pub type Mixture = distributions::Mixture<f64>;
pub type PendulumParams = subjects::PendulumParams<f64>;
pub type PendulumState = subjects::PendulumState<f64>;
pub type PendulumSubject = subjects::PendulumSubject<f64>;
pub type Controller = subjects::Controller<f64>;
pub type ControllerSpec = subjects::ControllerSpec<f64>;
pub type Trajectory = subjects::Trajectory<f64>;
pub type RiskEstimate = estimators::RiskEstimate<f64>;
pub type TerminationRule = estimators::TerminationRule<f64>;
pub type RhwRule = estimators::RhwRule<f64>;
pub type PlannerParams = planner::PlannerParams<f64>;
pub type BudgetPlan = planner::BudgetPlan<f64>;
pub type RoundingGrid = rounding::RoundingGrid<f64>;
pub type RoundedEstimate = rounding::RoundedEstimate<f64>;
pub type GroundTruth = oracle::GroundTruth<f64>;
