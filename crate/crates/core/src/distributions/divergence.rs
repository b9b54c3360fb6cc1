//! KL divergence and the log-likelihood-ratio tail that drive budget planning.
//!
//! Both are deterministic: categorical pairs are summed exactly, continuous
//! pairs are integrated on a fixed uniform grid over the support of `p`.

use super::quadrature::{simpson, simpson_cell, DEFAULT_PANELS};
use super::Distribution;
use crate::{Error, Result, Scalar};

/// `D(p || q)` with the default panel count.
pub fn kl_divergence<S: Scalar>(p: &Distribution<S>, q: &Distribution<S>) -> Result<S> {
    kl_divergence_with(p, q, DEFAULT_PANELS)
}

/// `D(p || q)` on a grid of `panels` Simpson panels (ignored for categorical pairs).
pub fn kl_divergence_with<S: Scalar>(
    p: &Distribution<S>,
    q: &Distribution<S>,
    panels: usize,
) -> Result<S> {
    match (p, q) {
        (Distribution::Categorical(pc), Distribution::Categorical(qc)) => {
            same_outcome_count(pc.len(), qc.len())?;
            let mut acc = S::zero();
            for (i, (&pi, &qi)) in pc.probabilities().iter().zip(qc.probabilities()).enumerate() {
                if pi > S::zero() {
                    if !(qi > S::zero()) {
                        return Err(Error::AbsoluteContinuity { at: i as f64 });
                    }
                    acc = acc + pi * (pi / qi).ln();
                }
            }
            Ok(acc.max(S::zero()))
        }
        (a, b) if !a.is_discrete() && !b.is_discrete() => {
            let (lo, hi) = a.interval().expect("continuous law has an interval");
            check_continuity(a, b, lo, hi, panels)?;
            let integrand = |x: S| {
                let px = a.density_at(x);
                if px > S::zero() {
                    px * (px / b.density_at(x)).ln()
                } else {
                    S::zero()
                }
            };
            Ok(simpson(integrand, lo, hi, panels).max(S::zero()))
        }
        _ => Err(Error::input("cannot compare a categorical law with a continuous one")),
    }
}

/// `P_{X~p}(log p(X)/q(X) > threshold)`.
pub fn tail_prob_log_ratio<S: Scalar>(
    p: &Distribution<S>,
    q: &Distribution<S>,
    threshold: S,
) -> Result<S> {
    Ok(LogRatioProfile::new(p, q)?.tail(threshold))
}

/// The distribution of `log p(X)/q(X)` under `X ~ p`, tabulated once so that
/// tail queries are a binary search.
///
/// Categorical pairs hold one atom per outcome. Continuous pairs hold one atom
/// per grid cell: the cell's p-mass (single-cell Simpson) located at the
/// log-ratio of its midpoint. Cells where `p` vanishes are dropped.
#[derive(Debug, Clone)]
pub struct LogRatioProfile<S> {
    /// Log-ratios sorted in decreasing order.
    log_ratios: Vec<S>,
    /// `upper_mass[k]` = total mass of the first `k` atoms.
    upper_mass: Vec<S>,
}

impl<S: Scalar> LogRatioProfile<S> {
    pub fn new(p: &Distribution<S>, q: &Distribution<S>) -> Result<Self> {
        Self::with_panels(p, q, DEFAULT_PANELS)
    }

    pub fn with_panels(p: &Distribution<S>, q: &Distribution<S>, panels: usize) -> Result<Self> {
        let mut atoms: Vec<(S, S)> = match (p, q) {
            (Distribution::Categorical(pc), Distribution::Categorical(qc)) => {
                same_outcome_count(pc.len(), qc.len())?;
                let mut atoms = Vec::with_capacity(pc.len());
                for (i, (&pi, &qi)) in pc.probabilities().iter().zip(qc.probabilities()).enumerate() {
                    if pi > S::zero() {
                        if !(qi > S::zero()) {
                            return Err(Error::AbsoluteContinuity { at: i as f64 });
                        }
                        atoms.push((pi.ln() - qi.ln(), pi));
                    }
                }
                atoms
            }
            (a, b) if !a.is_discrete() && !b.is_discrete() => {
                let (lo, hi) = a.interval().expect("continuous law has an interval");
                let panels = panels.max(1);
                let h = (hi - lo) / S::from_count(panels);
                let dens = |x: S| a.density_at(x);
                let mut atoms = Vec::with_capacity(panels);
                let mut total = S::zero();
                for i in 0..panels {
                    let left = lo + h * S::from_count(i);
                    let right = if i + 1 == panels { hi } else { lo + h * S::from_count(i + 1) };
                    let mid = (left + right) / S::lit(2.0);
                    let pm = a.density_at(mid);
                    if !(pm > S::zero()) {
                        continue;
                    }
                    let qm = b.density_at(mid);
                    if !(qm > S::zero()) {
                        return Err(Error::AbsoluteContinuity { at: mid.to_f64_lossy() });
                    }
                    let mass = simpson_cell(&dens, left, right);
                    total = total + mass;
                    atoms.push((pm.ln() - qm.ln(), mass));
                }
                if total > S::zero() {
                    for atom in &mut atoms {
                        atom.1 = atom.1 / total;
                    }
                }
                atoms
            }
            _ => return Err(Error::input("cannot compare a categorical law with a continuous one")),
        };
        // stable sort keeps grid order among equal ratios, so sums are reproducible
        atoms.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("finite log-ratio"));
        let mut upper_mass = Vec::with_capacity(atoms.len() + 1);
        let mut acc = S::zero();
        upper_mass.push(acc);
        for &(_, m) in &atoms {
            acc = acc + m;
            upper_mass.push(acc);
        }
        let log_ratios = atoms.into_iter().map(|(r, _)| r).collect();
        Ok(Self { log_ratios, upper_mass })
    }

    /// p-mass of atoms whose log-ratio strictly exceeds `threshold`.
    pub fn tail(&self, threshold: S) -> S {
        let k = self.log_ratios.partition_point(|&r| r > threshold);
        self.upper_mass[k].min(S::one())
    }

    /// Largest log-ratio over the support of `p`.
    pub fn max_log_ratio(&self) -> Option<S> {
        self.log_ratios.first().copied()
    }
}

fn same_outcome_count(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::input(format!("categorical laws have {a} and {b} outcomes")))
    }
}

fn check_continuity<S: Scalar>(
    p: &Distribution<S>,
    q: &Distribution<S>,
    lo: S,
    hi: S,
    panels: usize,
) -> Result<()> {
    let h = (hi - lo) / S::from_count(panels.max(1));
    for i in 0..=panels.max(1) {
        let x = lo + h * S::from_count(i);
        if p.density_at(x) > S::zero() && !(q.density_at(x) > S::zero()) {
            return Err(Error::AbsoluteContinuity { at: x.to_f64_lossy() });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{pendulum_importance_uniform, pendulum_nominal};

    fn cat(p: &[f64]) -> Distribution<f64> {
        Distribution::categorical(p.to_vec()).unwrap()
    }

    #[test]
    fn identical_laws_have_zero_divergence() {
        assert_eq!(kl_divergence(&cat(&[0.2, 0.8]), &cat(&[0.2, 0.8])).unwrap(), 0.0);
        let p = pendulum_nominal::<f64>();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn two_point_divergence() {
        let d = kl_divergence(&cat(&[0.5, 0.5]), &cat(&[0.25, 0.75])).unwrap();
        let exact = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((d - exact).abs() < 1e-15);
        assert!((d - 0.14384).abs() < 1e-5);
    }

    #[test]
    fn support_violations() {
        assert!(matches!(
            kl_divergence(&cat(&[0.5, 0.5]), &cat(&[1.0, 0.0])),
            Err(Error::AbsoluteContinuity { .. })
        ));
        let wide = Distribution::uniform(-1.0, 1.0).unwrap();
        let narrow = Distribution::uniform(-0.5, 0.5).unwrap();
        assert!(kl_divergence(&wide, &narrow).is_err());
        assert!(kl_divergence(&narrow, &wide).is_ok());
        assert!(LogRatioProfile::new(&wide, &narrow).is_err());
        assert!(kl_divergence(&cat(&[1.0]), &wide).is_err());
    }

    #[test]
    fn two_point_tail() {
        let p = cat(&[0.5, 0.5]);
        let q = cat(&[0.25, 0.75]);
        assert_eq!(tail_prob_log_ratio(&p, &q, 0.2).unwrap(), 0.5);
        assert_eq!(tail_prob_log_ratio(&p, &q, f64::NEG_INFINITY).unwrap(), 1.0);
        assert_eq!(tail_prob_log_ratio(&p, &q, 0.7).unwrap(), 0.0);
        assert_eq!(tail_prob_log_ratio(&p, &q, -0.5).unwrap(), 1.0);
    }

    #[test]
    fn tail_of_identical_laws_vanishes_for_positive_thresholds() {
        let p = pendulum_nominal::<f64>();
        assert_eq!(tail_prob_log_ratio(&p, &p, 1e-9).unwrap(), 0.0);
        let full = tail_prob_log_ratio(&p, &p, f64::NEG_INFINITY).unwrap();
        assert!((full - 1.0).abs() < 1e-12);
    }

    #[test]
    fn continuous_tail_covers_full_measure() {
        let p = pendulum_nominal::<f64>();
        let q = pendulum_importance_uniform::<f64>();
        let prof = LogRatioProfile::new(&p, &q).unwrap();
        assert!((prof.tail(f64::NEG_INFINITY) - 1.0).abs() < 1e-12);
        // log p/q is maximal at the mode
        let top = (p.density_at(0.0) / q.density_at(0.0)).ln();
        assert!((prof.max_log_ratio().unwrap() - top).abs() < 1e-6);
        assert_eq!(prof.tail(top + 1e-3), 0.0);
    }
}
