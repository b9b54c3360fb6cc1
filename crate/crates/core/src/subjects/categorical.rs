use serde::{Deserialize, Serialize};

use crate::distributions::SamplePoint;
use crate::{Error, Result, Scalar};

/// Subject over a finite outcome space whose failure check is a lookup table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalSubject {
    failure_labels: Vec<u8>,
}

impl CategoricalSubject {
    pub fn new(failure_labels: Vec<u8>) -> Result<Self> {
        if failure_labels.is_empty() {
            return Err(Error::param("categorical subject needs at least one outcome"));
        }
        if let Some(bad) = failure_labels.iter().find(|&&l| l > 1) {
            return Err(Error::param(format!("failure labels must be 0 or 1, got {bad}")));
        }
        Ok(Self { failure_labels })
    }

    pub fn labels(&self) -> &[u8] {
        &self.failure_labels
    }

    pub fn len(&self) -> usize {
        self.failure_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.failure_labels.is_empty()
    }

    pub fn categorical_failure<S: Scalar>(&self, x: &SamplePoint<S>) -> Result<bool> {
        self.failure_at(x.value()?)
    }

    pub fn failure_at<S: Scalar>(&self, x: S) -> Result<bool> {
        let idx = crate::distributions::categorical_index(x)
            .filter(|&i| i < self.failure_labels.len())
            .ok_or_else(|| {
                Error::input(format!("outcome {x} is not an index below {}", self.failure_labels.len()))
            })?;
        Ok(self.failure_labels[idx] == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_lookup() {
        let s = CategoricalSubject::new(vec![0, 0, 1]).unwrap();
        assert!(s.categorical_failure(&SamplePoint::<f64>::index(2)).unwrap());
        assert!(!s.categorical_failure(&SamplePoint::<f64>::index(0)).unwrap());
        let all_zero = CategoricalSubject::new(vec![0; 4]).unwrap();
        assert!((0..4).all(|i| !all_zero.categorical_failure(&SamplePoint::<f64>::index(i)).unwrap()));
        let s = CategoricalSubject::new(vec![1, 0]).unwrap();
        assert!(s.categorical_failure(&SamplePoint::<f64>::index(0)).unwrap());
    }

    #[test]
    fn out_of_range_index_is_an_input_error() {
        let s = CategoricalSubject::new(vec![0, 1]).unwrap();
        assert!(matches!(s.failure_at(2.0f64), Err(Error::Input(_))));
        assert!(matches!(s.failure_at(0.5f64), Err(Error::Input(_))));
        assert!(matches!(s.failure_at(-1.0f64), Err(Error::Input(_))));
    }

    #[test]
    fn label_validation() {
        assert!(CategoricalSubject::new(vec![]).is_err());
        assert!(CategoricalSubject::new(vec![0, 2]).is_err());
    }
}
