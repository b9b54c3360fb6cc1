//! Probability laws over the test sample space.
//!
//! Every law here is one-dimensional: either an interval of the real line
//! (truncated normal, uniform, mixtures of those) or a finite set of outcome
//! indices embedded as reals (categorical). All objects are immutable after
//! construction and cheap to share between workers.

mod categorical;
mod divergence;
mod mixture;
pub mod quadrature;
mod truncated_normal;
mod uniform;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use categorical::Categorical;
pub use divergence::{kl_divergence, kl_divergence_with, tail_prob_log_ratio, LogRatioProfile};
pub(crate) use categorical::index_of as categorical_index;
pub use mixture::Mixture;
pub use truncated_normal::TruncatedNormal1D;
pub use uniform::Uniform1D;

use crate::{Error, Result, Scalar};

/// A point of the test sample space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint<S> {
    pub coordinates: Vec<S>,
}

impl<S: Scalar> SamplePoint<S> {
    pub fn scalar(x: S) -> Self {
        Self { coordinates: vec![x] }
    }

    pub fn index(i: usize) -> Self {
        Self { coordinates: vec![S::from_count(i)] }
    }

    pub fn dimension(&self) -> usize {
        self.coordinates.len()
    }

    /// The single coordinate of a 1-D point.
    pub fn value(&self) -> Result<S> {
        match self.coordinates.as_slice() {
            [x] => Ok(*x),
            other => Err(Error::input(format!(
                "expected a 1-dimensional sample point, got dimension {}",
                other.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Distribution<S> {
    TruncatedNormal(TruncatedNormal1D<S>),
    Uniform(Uniform1D<S>),
    Categorical(Categorical<S>),
    Mixture(Mixture<S>),
}

impl<S: Scalar> Distribution<S> {
    pub fn truncated_normal(mean: S, std: S, lower: S, upper: S) -> Result<Self> {
        TruncatedNormal1D::new(mean, std, lower, upper).map(Self::TruncatedNormal)
    }

    pub fn uniform(lower: S, upper: S) -> Result<Self> {
        Uniform1D::new(lower, upper).map(Self::Uniform)
    }

    pub fn categorical(probabilities: Vec<S>) -> Result<Self> {
        Categorical::new(probabilities).map(Self::Categorical)
    }

    pub fn mixture(weights: Vec<S>, components: Vec<Distribution<S>>) -> Result<Self> {
        Mixture::new(weights, components).map(Self::Mixture)
    }

    /// Dimension of the sample space the law lives on.
    pub fn dimension(&self) -> usize {
        1
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::Categorical(_))
    }

    /// Bounded support interval of a continuous law; `None` for categorical.
    pub fn interval(&self) -> Option<(S, S)> {
        match self {
            Self::TruncatedNormal(d) => Some((d.lower(), d.upper())),
            Self::Uniform(d) => Some((d.lower(), d.upper())),
            Self::Mixture(m) => Some(m.hull()),
            Self::Categorical(_) => None,
        }
    }

    /// Density (or probability mass, for categorical laws) at `x`.
    pub fn density(&self, x: &SamplePoint<S>) -> Result<S> {
        if x.dimension() != self.dimension() {
            return Err(Error::input(format!(
                "sample point has dimension {}, distribution has dimension {}",
                x.dimension(),
                self.dimension()
            )));
        }
        Ok(self.density_at(x.coordinates[0]))
    }

    /// Density at a 1-D coordinate.
    #[inline]
    pub fn density_at(&self, x: S) -> S {
        match self {
            Self::TruncatedNormal(d) => d.density(x),
            Self::Uniform(d) => d.density(x),
            Self::Categorical(d) => d.density(x),
            Self::Mixture(d) => d.density(x),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplePoint<S> {
        SamplePoint::scalar(self.draw_value(rng))
    }

    /// Draws the single coordinate directly.
    #[inline]
    pub fn draw_value<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        match self {
            Self::TruncatedNormal(d) => d.draw(rng),
            Self::Uniform(d) => d.draw(rng),
            Self::Categorical(d) => S::from_count(d.draw_index(rng)),
            Self::Mixture(d) => d.draw(rng),
        }
    }

    /// Whether `x` lies in the closed support.
    pub fn contains(&self, x: S) -> bool {
        match self {
            Self::Categorical(c) => categorical::index_of(x).is_some_and(|i| i < c.len()),
            _ => self.density_at(x) > S::zero(),
        }
    }
}

/// Nominal disturbance law of the pendulum bench: N(0, 0.5²) on [-0.9, 0.9].
pub fn pendulum_nominal<S: Scalar>() -> Distribution<S> {
    Distribution::truncated_normal(S::zero(), S::lit(0.5), S::lit(-0.9), S::lit(0.9))
        .expect("valid preset")
}

/// Importance preset 1: flat over the disturbance range.
pub fn pendulum_importance_uniform<S: Scalar>() -> Distribution<S> {
    Distribution::uniform(S::lit(-0.9), S::lit(0.9)).expect("valid preset")
}

/// Importance preset 2: symmetric bimodal law with modes at ±0.7.
pub fn pendulum_importance_bimodal<S: Scalar>() -> Distribution<S> {
    let lobe = |m: f64| {
        Distribution::truncated_normal(S::lit(m), S::lit(0.15), S::lit(-0.9), S::lit(0.9))
            .expect("valid preset")
    };
    Distribution::mixture(vec![S::lit(0.5), S::lit(0.5)], vec![lobe(-0.7), lobe(0.7)])
        .expect("valid preset")
}
