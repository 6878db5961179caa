//! Shared test oracles, independent of the library's own quadrature and
//! sampling paths.

#![allow(dead_code)]

use nalgebra::DVector;
use smallsphere::{RngStream, UnitVec};

/// Adaptive Simpson on an interval (hand-rolled oracle).
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 44)
}

/// Integral of f over S^2 in (s, phi) coordinates (area element ds dphi),
/// by nested adaptive Simpson.
pub fn integrate_sphere<F: Fn(f64, f64) -> f64>(f: &F, tol: f64) -> f64 {
    simpson(
        &|s: f64| simpson(&|phi: f64| f(s, phi), 0.0, 2.0 * std::f64::consts::PI, tol / 4.0),
        -1.0,
        1.0,
        tol,
    )
}

/// Point on S^2 from (s, phi) relative to frame columns (axis, u, v).
pub fn sphere_point(
    axis: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    s: f64,
    phi: f64,
) -> UnitVec {
    let r = (1.0 - s * s).max(0.0).sqrt();
    UnitVec::new(axis * s + u * (r * phi.cos()) + v * (r * phi.sin())).unwrap()
}

pub fn random_unit(rng: &mut RngStream, p: usize) -> UnitVec {
    loop {
        let v = DVector::from_fn(p, |_, _| rng.normal());
        if v.norm() > 1e-6 {
            return UnitVec::new(v).unwrap();
        }
    }
}

/// Chi-square goodness-of-fit of observed counts against expected masses;
/// cells with expected count below 5 are dropped. Returns (statistic, df).
pub fn chi_square_gof(observed: &[f64], expected: &[f64]) -> (f64, u32) {
    let mut stat = 0.0;
    let mut kept = 0u32;
    for (o, e) in observed.iter().zip(expected) {
        if *e >= 5.0 {
            stat += (o - e) * (o - e) / e;
            kept += 1;
        }
    }
    (stat, kept.saturating_sub(1).max(1))
}

/// Gelman-Rubin potential scale reduction over split chains.
pub fn potential_scale_reduction(chains: &[Vec<f64>]) -> f64 {
    let mut halves: Vec<&[f64]> = Vec::new();
    for c in chains {
        let mid = c.len() / 2;
        halves.push(&c[..mid]);
        halves.push(&c[mid..]);
    }
    let m = halves.len() as f64;
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand) * (x - grand)).sum::<f64>();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}
