//! Ground-truth risk by exhaustive enumeration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Categorical, Distribution};
use crate::subjects::{CategoricalSubject, TestingSubject};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth<S> {
    pub r_star: S,
    pub resolution: S,
    pub lower: S,
    pub upper: S,
    pub points_evaluated: usize,
    /// Failure verdict at each cell center, in grid order.
    pub failure_set: Vec<bool>,
}

impl<S: Scalar> GroundTruth<S> {
    /// Cell centers at which the failure set was evaluated.
    pub fn centers(&self) -> impl Iterator<Item = S> + '_ {
        let width = self.cell_width();
        let lower = self.lower;
        (0..self.points_evaluated).map(move |k| lower + (S::from_count(k) + S::lit(0.5)) * width)
    }

    pub fn cell_width(&self) -> S {
        (self.upper - self.lower) / S::from_count(self.points_evaluated.max(1))
    }
}

/// Risk under `p` by evaluating `subject` at every cell center of a uniform
/// grid over the support of `p`, weighting by the cell's (renormalized)
/// p-mass.
///
/// The cell count is `round(support / resolution)`; cells are then resized
/// to tile the support exactly. Subject evaluations run in parallel, and the
/// reduction is done in grid order so the result does not depend on the
/// number of workers.
pub fn enumerate_risk<S, T>(subject: &T, p: &Distribution<S>, resolution: S) -> Result<GroundTruth<S>>
where
    S: Scalar,
    T: TestingSubject<S> + ?Sized,
{
    let (lower, upper) = p
        .interval()
        .ok_or_else(|| Error::input("enumeration needs a continuous law on a bounded interval"))?;
    let span = upper - lower;
    if !(resolution > S::zero()) || resolution > span {
        return Err(Error::input(format!(
            "resolution {resolution} must lie in (0, {span}] for support [{lower}, {upper}]"
        )));
    }
    let cells = (span / resolution)
        .round()
        .to_usize()
        .filter(|&c| c >= 1)
        .ok_or_else(|| Error::input("resolution yields no cells"))?;
    let width = span / S::from_count(cells);
    let centers: Vec<S> =
        (0..cells).map(|k| lower + (S::from_count(k) + S::lit(0.5)) * width).collect();
    let failure_set = centers
        .par_iter()
        .map(|&x| subject.failure_at(x))
        .collect::<Result<Vec<bool>>>()?;
    let mut total = S::zero();
    let mut failing = S::zero();
    for (&x, &failed) in centers.iter().zip(&failure_set) {
        let mass = p.density_at(x) * width;
        total = total + mass;
        if failed {
            failing = failing + mass;
        }
    }
    if !(total > S::zero()) {
        return Err(Error::input("nominal law has no mass on the enumeration grid"));
    }
    Ok(GroundTruth {
        r_star: failing / total,
        resolution,
        lower,
        upper,
        points_evaluated: cells,
        failure_set,
    })
}

/// Exact risk `sum_i labels[i] * p[i]` over a finite outcome space.
pub fn exact_risk_categorical<S: Scalar>(subject: &CategoricalSubject, p: &Categorical<S>) -> Result<S> {
    if subject.len() != p.len() {
        return Err(Error::input(format!(
            "subject has {} outcomes, law has {}",
            subject.len(),
            p.len()
        )));
    }
    Ok(subject
        .labels()
        .iter()
        .zip(p.probabilities())
        .filter(|(&l, _)| l == 1)
        .fold(S::zero(), |acc, (_, &pi)| acc + pi))
}
