//! Randomized-grid output rounding.
//!
//! The output range is cut into a head interval `[0, alpha0]` followed by
//! intervals of width `alpha`; an estimate is replaced by the representative
//! of its interval. Two runs whose raw estimates land in the same interval
//! therefore report bit-identical values.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundingGrid<S> {
    pub alpha: S,
    pub alpha0: S,
}

impl<S: Scalar> RoundingGrid<S> {
    pub fn new(alpha: S, alpha0: S) -> Result<Self> {
        if !(alpha > S::zero() && alpha <= S::one()) {
            return Err(Error::param(format!("grid width alpha must lie in (0, 1], got {alpha}")));
        }
        if !(alpha0 >= S::zero() && alpha0 <= alpha) {
            return Err(Error::param(format!("grid offset alpha0 must lie in [0, alpha], got {alpha0}")));
        }
        Ok(Self { alpha, alpha0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundedEstimate<S> {
    pub value: S,
    /// `-1` for the head interval `[0, alpha0]`.
    pub interval_index: i64,
    /// The estimate before rounding.
    pub raw: S,
}

/// Maps `raw` to its grid representative: `alpha0/2` on the head interval,
/// otherwise `alpha/2 + alpha * round((raw - alpha0)/alpha)` with ties
/// rounded away from zero. Estimates above 1 are rounded the same way.
pub fn round_estimate<S: Scalar>(raw: S, grid: &RoundingGrid<S>) -> Result<RoundedEstimate<S>> {
    if !raw.is_finite() || raw < S::zero() {
        return Err(Error::input(format!("cannot round estimate {raw}")));
    }
    let half = S::lit(0.5);
    if raw <= grid.alpha0 {
        return Ok(RoundedEstimate { value: grid.alpha0 * half, interval_index: -1, raw });
    }
    let k = ((raw - grid.alpha0) / grid.alpha).round();
    let interval_index = k.to_i64().ok_or_else(|| Error::input("estimate too large to round"))?;
    Ok(RoundedEstimate { value: grid.alpha * half + grid.alpha * k, interval_index, raw })
}

/// Nominal offset `alpha/2` introduced by rounding.
pub fn rounding_offset_bound<S: Scalar>(grid: &RoundingGrid<S>) -> S {
    grid.alpha / S::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RoundingGrid<f64> {
        RoundingGrid::new(0.1, 0.05).unwrap()
    }

    #[test]
    fn head_interval() {
        let r = round_estimate(0.03, &grid()).unwrap();
        assert_eq!(r.interval_index, -1);
        assert!((r.value - 0.025).abs() < 1e-15);
        assert_eq!(r.raw, 0.03);
        assert_eq!(round_estimate(0.05, &grid()).unwrap().interval_index, -1);
        assert_eq!(round_estimate(0.0, &grid()).unwrap().interval_index, -1);
    }

    #[test]
    fn body_intervals() {
        let r = round_estimate(0.26, &grid()).unwrap();
        assert_eq!(r.interval_index, 2);
        assert!((r.value - 0.25).abs() < 1e-12);
        let r = round_estimate(0.31, &grid()).unwrap();
        assert_eq!(r.interval_index, 3);
        assert!((r.value - 0.35).abs() < 1e-12);
    }

    #[test]
    fn ties_round_away_from_zero() {
        let g = RoundingGrid::new(0.5, 0.25).unwrap();
        // (0.5 - 0.25)/0.5 = 0.5 exactly
        assert_eq!(round_estimate(0.5, &g).unwrap().interval_index, 1);
    }

    #[test]
    fn estimates_above_one_are_not_clamped() {
        let r = round_estimate(1.37, &grid()).unwrap();
        assert_eq!(r.interval_index, 13);
        assert!(r.value > 1.0);
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(round_estimate(-0.01, &grid()).is_err());
        assert!(round_estimate(f64::NAN, &grid()).is_err());
        assert!(round_estimate(f64::INFINITY, &grid()).is_err());
        assert!(RoundingGrid::new(0.1, 0.2).is_err());
        assert!(RoundingGrid::new(0.0, 0.0).is_err());
        assert!(RoundingGrid::new(1.5, 0.0).is_err());
    }

    #[test]
    fn offset_bound() {
        assert!((rounding_offset_bound(&RoundingGrid::<f64>::new(1.0 / 7.0, 0.0).unwrap()) - 1.0 / 14.0).abs() < 1e-15);
        assert!((rounding_offset_bound(&grid()) - 0.05).abs() < 1e-15);
    }
}
