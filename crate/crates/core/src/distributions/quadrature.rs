//! Fixed-grid composite quadrature used for every 1-D continuous integral.
//!
//! The grid depends only on the interval and the panel count, so integrals
//! (and everything derived from them, such as sample budgets) are bit-stable
//! across runs and machines.

use crate::Scalar;

/// Default panel count for 1-D integrals.
pub const DEFAULT_PANELS: usize = 1 << 17;

/// Composite Simpson rule over `[a, b]` with `panels` sub-intervals.
///
/// `panels` is rounded up to the next even number.
pub fn simpson<S: Scalar, F: Fn(S) -> S>(f: F, a: S, b: S, panels: usize) -> S {
    let panels = (panels.max(2) + 1) & !1;
    let h = (b - a) / S::from_count(panels);
    let two = S::lit(2.0);
    let four = S::lit(4.0);
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let x = a + h * S::from_count(i);
        acc = acc + if i % 2 == 1 { four * f(x) } else { two * f(x) };
    }
    acc * h / S::lit(3.0)
}

/// Simpson estimate over a single cell `[a, b]` (one parabola).
#[inline]
pub fn simpson_cell<S: Scalar, F: Fn(S) -> S>(f: &F, a: S, b: S) -> S {
    let m = (a + b) / S::lit(2.0);
    (f(a) + S::lit(4.0) * f(m) + f(b)) * (b - a) / S::lit(6.0)
}
