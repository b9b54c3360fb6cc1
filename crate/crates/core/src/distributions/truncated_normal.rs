use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::quadrature::{simpson, DEFAULT_PANELS};
use crate::{Error, Result, Scalar};

/// Normal law restricted to `[lower, upper]` and renormalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormal1D<S> {
    mean: S,
    std: S,
    lower: S,
    upper: S,
    /// Mass of the untruncated normal inside `[lower, upper]`.
    normalizer: S,
}

/// Below this retained mass, draws switch from normal-rejection to a flat
/// envelope over the support.
const NORMAL_REJECTION_MIN_MASS: f64 = 0.25;

impl<S: Scalar> TruncatedNormal1D<S> {
    pub fn new(mean: S, std: S, lower: S, upper: S) -> Result<Self> {
        if !(std > S::zero()) || !std.is_finite() {
            return Err(Error::param(format!("std must be positive, got {std}")));
        }
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() || !mean.is_finite() {
            return Err(Error::param(format!(
                "truncation bounds must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        let normalizer = simpson(|x| gaussian(x, mean, std), lower, upper, DEFAULT_PANELS);
        if !(normalizer > S::zero()) {
            return Err(Error::param(
                "truncation interval carries no numerically representable mass",
            ));
        }
        Ok(Self { mean, std, lower, upper, normalizer })
    }

    pub fn mean(&self) -> S {
        self.mean
    }

    pub fn std(&self) -> S {
        self.std
    }

    pub fn lower(&self) -> S {
        self.lower
    }

    pub fn upper(&self) -> S {
        self.upper
    }

    pub fn normalizer(&self) -> S {
        self.normalizer
    }

    #[inline]
    pub fn density(&self, x: S) -> S {
        if x < self.lower || x > self.upper {
            return S::zero();
        }
        gaussian(x, self.mean, self.std) / self.normalizer
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        let (lo, hi) = (self.lower.to_f64_lossy(), self.upper.to_f64_lossy());
        let (mu, sd) = (self.mean.to_f64_lossy(), self.std.to_f64_lossy());
        if self.normalizer.to_f64_lossy() >= NORMAL_REJECTION_MIN_MASS {
            loop {
                let z: f64 = rng.sample(StandardNormal);
                let x = S::lit(mu + sd * z);
                if x >= self.lower && x <= self.upper {
                    return x;
                }
            }
        }
        // Flat envelope: the density peaks at the mean clamped into the support.
        let peak = gaussian(S::lit(mu.clamp(lo, hi)), self.mean, self.std);
        loop {
            let x = S::lit(rng.gen_range(lo..=hi));
            let u = S::lit(rng.gen::<f64>());
            if u * peak <= gaussian(x, self.mean, self.std) {
                return x;
            }
        }
    }
}

/// Untruncated normal density.
#[inline]
pub(crate) fn gaussian<S: Scalar>(x: S, mean: S, std: S) -> S {
    let z = (x - mean) / std;
    (-(z * z) / S::lit(2.0)).exp() / (std * (S::TAU()).sqrt())
}
