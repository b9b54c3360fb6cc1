use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Distribution;
use crate::{Error, Result, Scalar};

/// Finite mixture of 1-D continuous laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture<S> {
    weights: Vec<S>,
    components: Vec<Distribution<S>>,
}

impl<S: Scalar> Mixture<S> {
    pub fn new(weights: Vec<S>, components: Vec<Distribution<S>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::param("mixture needs one weight per component"));
        }
        if components.iter().any(|c| c.is_discrete()) {
            return Err(Error::param("mixture components must be continuous"));
        }
        if weights.iter().any(|w| !(*w >= S::zero()) || !w.is_finite()) {
            return Err(Error::param("mixture weights must be finite and non-negative"));
        }
        let total = weights.iter().fold(S::zero(), |a, &w| a + w);
        if !(total > S::zero()) {
            return Err(Error::param("mixture weights sum to zero"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { weights, components })
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn components(&self) -> &[Distribution<S>] {
        &self.components
    }

    pub(crate) fn hull(&self) -> (S, S) {
        self.components.iter().filter_map(|c| c.interval()).fold(
            (S::infinity(), S::neg_infinity()),
            |(lo, hi), (a, b)| (lo.min(a), hi.max(b)),
        )
    }

    #[inline]
    pub fn density(&self, x: S) -> S {
        self.weights
            .iter()
            .zip(&self.components)
            .fold(S::zero(), |acc, (&w, c)| acc + w * c.density_at(x))
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        let u = S::lit(rng.gen::<f64>());
        let mut acc = S::zero();
        let mut pick = self.components.len() - 1;
        for (i, &w) in self.weights.iter().enumerate() {
            acc = acc + w;
            if u < acc {
                pick = i;
                break;
            }
        }
        self.components[pick].draw_value(rng)
    }
}
