//! Black-box testing subjects: a sample point goes in, a pass/fail verdict
//! comes out.

mod categorical;
mod controller;
mod pendulum;

pub use categorical::CategoricalSubject;
pub use controller::{Controller, ControllerKind, ControllerMemory, ControllerSpec};
pub use pendulum::{
    actuate, failure, pendulum_step, simulate, simulate_failure, PendulumParams, PendulumState,
    StopReason, Trajectory,
};

use crate::distributions::SamplePoint;
use crate::{Result, Scalar};

/// The failure check `x -> {0, 1}` of a system under test.
///
/// Implementations must be deterministic: the verdict is a pure function of
/// the sample point.
pub trait TestingSubject<S: Scalar>: Sync {
    fn failure(&self, x: &SamplePoint<S>) -> Result<bool> {
        self.failure_at(x.value()?)
    }

    /// Verdict for a 1-D sample coordinate.
    fn failure_at(&self, x: S) -> Result<bool>;
}

impl<S: Scalar> TestingSubject<S> for CategoricalSubject {
    fn failure_at(&self, x: S) -> Result<bool> {
        CategoricalSubject::failure_at(self, x)
    }
}

/// Pendulum push-over bench under one controller.
#[derive(Debug, Clone)]
pub struct PendulumSubject<S> {
    pub params: PendulumParams<S>,
    pub controller: Controller<S>,
}

impl<S: Scalar> PendulumSubject<S> {
    pub fn new(params: PendulumParams<S>, spec: &ControllerSpec<S>) -> Result<Self> {
        let controller = spec.build(&params)?;
        Ok(Self { params, controller })
    }

    /// Default bench with the default tuning for `kind`.
    pub fn with_defaults(kind: ControllerKind) -> Self {
        Self::new(PendulumParams::default(), &ControllerSpec::default_for(kind))
            .expect("default pendulum configuration is valid")
    }

    pub fn simulate(&self, v_d: S) -> Result<Trajectory<S>> {
        simulate(&self.params, &self.controller, v_d)
    }
}

impl<S: Scalar> TestingSubject<S> for PendulumSubject<S> {
    fn failure_at(&self, x: S) -> Result<bool> {
        simulate_failure(&self.params, &self.controller, x)
    }
}

/// Adapter turning any deterministic predicate into a subject.
pub struct FnSubject<F>(pub F);

impl<S: Scalar, F: Fn(S) -> bool + Sync> TestingSubject<S> for FnSubject<F> {
    fn failure_at(&self, x: S) -> Result<bool> {
        Ok((self.0)(x))
    }
}
