//! Root finding: all complex zeros of a polynomial (Aberth–Ehrlich) and
//! safeguarded scalar solvers for monotone real functions.

use alloc::vec::Vec;

use crate::math::cabs;
use crate::poly::Poly;
use crate::{Error, Result, C64};

/// All zeros of `p`, simultaneously refined by the Aberth–Ehrlich iteration.
pub fn polynomial_roots(p: &Poly<C64>) -> Result<Vec<C64>> {
    let n = match p.degree() {
        None => {
            return Err(Error::Degenerate(
                "zero polynomial has no isolated roots".into(),
            ))
        }
        Some(0) => return Ok(Vec::new()),
        Some(n) => n,
    };
    let lead = p.leading().unwrap();
    let monic = p.scale(lead.inv());
    let dp = monic.derivative();

    // Initial guesses on a circle of radius given by the Cauchy bound, rotated off the axes.
    let radius = 1.0
        + monic.coeffs[..n]
            .iter()
            .map(|&c| cabs(c))
            .fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..n)
        .map(|k| {
            let ang = 2.0 * core::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
            crate::math::cis(ang) * (0.5 * radius)
        })
        .collect();

    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let zi = z[i];
            let pv = monic.eval(zi);
            if cabs(pv) == 0.0 {
                continue;
            }
            let ratio = pv / dp.eval(zi);
            let repulsion: C64 = (0..n).filter(|&j| j != i).map(|j| (zi - z[j]).inv()).sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] = zi - step;
                max_step = max_step.max(cabs(step) / cabs(zi).max(1.0));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    if z.iter().any(|r| !r.is_finite()) {
        return Err(Error::NumericalRange(
            "polynomial root iteration diverged".into(),
        ));
    }
    Ok(z)
}

/// Zero of a continuous function with `f(lo) < 0 < f(hi)` by bisection until
/// the bracket is narrower than `xtol`, then Newton steps kept inside the bracket.
pub fn bisect_newton(
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    rtol: f64,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> Option<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo < 0.0 && fhi > 0.0) {
        return None;
    }
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / df(x);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - x).abs() <= rtol * x.abs().max(f64::MIN_POSITIVE);
        x = next;
        if done {
            break;
        }
    }
    Some(x)
}
