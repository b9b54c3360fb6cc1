use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uniform1D<S> {
    lower: S,
    upper: S,
}

impl<S: Scalar> Uniform1D<S> {
    pub fn new(lower: S, upper: S) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::param(format!(
                "uniform bounds must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> S {
        self.lower
    }

    pub fn upper(&self) -> S {
        self.upper
    }

    #[inline]
    pub fn density(&self, x: S) -> S {
        if x < self.lower || x > self.upper {
            S::zero()
        } else {
            S::one() / (self.upper - self.lower)
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        let u = S::lit(rng.gen::<f64>());
        let x = self.lower + (self.upper - self.lower) * u;
        // guard the top end against rounding past `upper`
        x.min(self.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_density_on_support() {
        let u = Uniform1D::<f64>::new(-0.9, 0.9).unwrap();
        assert!((u.density(0.0) - 1.0 / 1.8).abs() < 1e-15);
        assert_eq!(u.density(0.0), u.density(0.85));
        assert_eq!(u.density(0.95), 0.0);
    }

    #[test]
    fn rejects_degenerate_interval() {
        assert!(Uniform1D::<f64>::new(1.0, 1.0).is_err());
        assert!(Uniform1D::new(0.0, f64::INFINITY).is_err());
    }
}
