use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Finite law over the indices `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Categorical<S> {
    probabilities: Vec<S>,
    cumulative: Vec<S>,
}

const SUM_TOLERANCE: f64 = 1e-12;

impl<S: Scalar> Categorical<S> {
    pub fn new(probabilities: Vec<S>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::param("categorical law needs at least one outcome"));
        }
        if let Some(bad) = probabilities.iter().find(|p| !(**p >= S::zero() && **p <= S::one())) {
            return Err(Error::param(format!("probability {bad} outside [0, 1]")));
        }
        let total = probabilities.iter().fold(S::zero(), |a, &p| a + p);
        let tol = S::lit(SUM_TOLERANCE).max(S::epsilon() * S::from_count(4 * probabilities.len()));
        if (total - S::one()).abs() > tol {
            return Err(Error::param(format!("probabilities sum to {total}, not 1")));
        }
        let mut acc = S::zero();
        let cumulative = probabilities
            .iter()
            .map(|&p| {
                acc = acc + p;
                acc
            })
            .collect();
        Ok(Self { probabilities, cumulative })
    }

    pub fn probabilities(&self) -> &[S] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Probability of the outcome encoded by `x`; zero for non-integral or
    /// out-of-range codes.
    #[inline]
    pub fn density(&self, x: S) -> S {
        match index_of(x) {
            Some(i) if i < self.len() => self.probabilities[i],
            _ => S::zero(),
        }
    }

    pub fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = S::lit(rng.gen::<f64>());
        let last = self.len() - 1;
        // first index with cumulative > u, skipping zero-mass outcomes
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .map(|i| i.min(last))
            .unwrap_or_else(|| {
                // u landed in the rounding gap above the final cumulative sum
                self.probabilities.iter().rposition(|&p| p > S::zero()).unwrap_or(last)
            })
    }
}

/// Decodes an outcome index embedded as a real.
#[inline]
pub(crate) fn index_of<S: Scalar>(x: S) -> Option<usize> {
    if x >= S::zero() && x.fract() == S::zero() {
        x.to_usize()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_law_always_draws_zero() {
        let c = Categorical::new(vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert!((0..1000).all(|_| c.draw_index(&mut rng) == 0));
    }

    #[test]
    fn zero_mass_outcomes_never_drawn() {
        let c = Categorical::new(vec![0.0, 0.5, 0.0, 0.5, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let i = c.draw_index(&mut rng);
            assert!(i == 1 || i == 3);
        }
    }

    #[test]
    fn validation() {
        assert!(Categorical::<f64>::new(vec![]).is_err());
        assert!(Categorical::new(vec![0.5, 0.6]).is_err());
        assert!(Categorical::new(vec![-0.1, 1.1]).is_err());
        assert!(Categorical::new(vec![0.1; 10]).is_ok());
    }

    #[test]
    fn density_decodes_indices() {
        let c = Categorical::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(c.density(1.0), 0.75);
        assert_eq!(c.density(0.5), 0.0);
        assert_eq!(c.density(2.0), 0.0);
        assert_eq!(c.density(-1.0), 0.0);
    }
}
