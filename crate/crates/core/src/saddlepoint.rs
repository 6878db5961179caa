//! Saddle-point approximation of the S1 normalizing constant.
//!
//! The constant a(kappa0, kappa1, nu) equals, for any h > 0,
//!
//! ```text
//! a = 2 pi^{p/2} |Psi|^{-1/2} g(1) exp(xi' Psi xi + h - kappa0 nu^2)
//! ```
//!
//! where g is the density of R = Z'Z with Z ~ N_p(xi, Psi^{-1}/2),
//! Psi = diag(kappa0 + h, h, ..., h) and xi has the two nonzero components
//! xi_1 = nu (2 kappa0 + kappa1) / (2 (kappa0 + h)) and
//! xi_2 = kappa1 sqrt(1 - nu^2) / (2 h). g(1) is approximated by the
//! second-order saddle-point density of the noncentral quadratic form, with
//! the saddle found from K'(t) = 1 on (-inf, h).

use crate::error::{Error, Result};

/// Inputs of the S1 constant approximation. `h` shifts the quadratic form;
/// the exact constant is h-free, the approximation nearly so.
#[derive(Debug, Clone, Copy)]
pub struct SaddleProblem {
    pub kappa0: f64,
    pub kappa1: f64,
    pub nu: f64,
    pub h: f64,
    pub p: usize,
}

/// Default shift; keeps both Psi blocks well-conditioned over the
/// concentration ranges exercised here.
pub const DEFAULT_H: f64 = 1.0;

impl SaddleProblem {
    pub fn new(kappa0: f64, kappa1: f64, nu: f64, h: f64, p: usize) -> Result<Self> {
        if !(kappa0 > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa0 must be > 0, got {kappa0}")));
        }
        if !(kappa1 >= 0.0) {
            return Err(Error::InvalidParameter(format!("kappa1 must be >= 0, got {kappa1}")));
        }
        if !(nu > -1.0 && nu < 1.0) {
            return Err(Error::InvalidParameter(format!("nu must lie in (-1,1), got {nu}")));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("h must be > 0, got {h}")));
        }
        if p < 3 {
            return Err(Error::InvalidParameter(format!("p must be >= 3, got {p}")));
        }
        Ok(Self { kappa0, kappa1, nu, h, p })
    }

    pub fn with_default_h(kappa0: f64, kappa1: f64, nu: f64, p: usize) -> Result<Self> {
        Self::new(kappa0, kappa1, nu, DEFAULT_H, p)
    }

    fn psi1(&self) -> f64 {
        self.kappa0 + self.h
    }

    // xi_1^2 psi_1^2 and xi_2^2 psi_2^2, the numerators of the noncentrality
    // terms in the derivatives
    fn q1(&self) -> f64 {
        let g = self.nu * (2.0 * self.kappa0 + self.kappa1);
        g * g / 4.0
    }

    fn q2(&self) -> f64 {
        self.kappa1 * self.kappa1 * (1.0 - self.nu * self.nu) / 4.0
    }

    /// K_g(t) for j = 0, or its j-th derivative for j = 1..4.
    ///
    /// K_g(t) = -1/2 [log(1 - t/psi1) + (p-1) log(1 - t/h)]
    ///          + xi1^2 psi1 t/(psi1 - t) + xi2^2 h t/(h - t)
    pub fn kg_derivative(&self, j: usize, t: f64) -> Result<f64> {
        if j > 4 {
            return Err(Error::InvalidParameter(format!("derivative order must be <= 4, got {j}")));
        }
        if t >= self.h {
            return Err(Error::Numerical(format!(
                "cumulant generating function has a pole at t = h = {}; got t = {t}",
                self.h
            )));
        }
        let (psi1, psi2) = (self.psi1(), self.h);
        let (d1, d2) = (psi1 - t, psi2 - t);
        let pm1 = (self.p - 1) as f64;
        if j == 0 {
            let xi1sq_psi1 = self.q1() / psi1; // xi1^2 psi1
            let xi2sq_psi2 = self.q2() / psi2;
            return Ok(-0.5 * ((1.0 - t / psi1).ln() + pm1 * (1.0 - t / psi2).ln())
                + xi1sq_psi1 * t / d1
                + xi2sq_psi2 * t / d2);
        }
        let fact_jm1: f64 = (1..j).map(|k| k as f64).product();
        let fact_j = fact_jm1 * j as f64;
        Ok(fact_jm1 / 2.0 * (d1.powi(-(j as i32)) + pm1 * d2.powi(-(j as i32)))
            + fact_j
                * (self.q1() * d1.powi(-(j as i32 + 1)) + self.q2() * d2.powi(-(j as i32 + 1))))
    }

    /// Solve K'(t) = 1 on (-inf, h): bracket by doubling leftward from just
    /// below the pole, bisect, then polish with Newton.
    pub fn solve_saddle(&self) -> Result<f64> {
        let mut hi = self.h - 1e-9 * self.h.max(1.0);
        // K' diverges at the pole, so K'(hi) > 1 holds already for any p >= 3
        while self.kg_derivative(1, hi)? < 1.0 {
            hi = 0.5 * (hi + self.h);
        }
        let mut step = self.h.max(1.0);
        let mut lo = hi - step;
        let mut doublings = 0;
        while self.kg_derivative(1, lo)? >= 1.0 {
            step *= 2.0;
            lo = hi - step;
            doublings += 1;
            if doublings > 200 {
                return Err(Error::BracketFailure(
                    "saddle bracket expansion exceeded 200 doublings".into(),
                ));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.kg_derivative(1, mid)? < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 * (1.0 + mid.abs()) {
                break;
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..8 {
            let r = self.kg_derivative(1, t)? - 1.0;
            let d2 = self.kg_derivative(2, t)?;
            let next = t - r / d2;
            if next < self.h {
                t = next;
            }
            if r.abs() < 1e-13 {
                break;
            }
        }
        Ok(t)
    }

    /// log a-hat: the full Proposition-2 constant with the second-order
    /// saddle-point approximation of g(1).
    pub fn log_norm_const(&self) -> Result<f64> {
        let t = self.solve_saddle()?;
        let k2 = self.kg_derivative(2, t)?;
        let k3 = self.kg_derivative(3, t)?;
        let k4 = self.kg_derivative(4, t)?;
        let correction = k4 / (8.0 * k2 * k2) - 5.0 * k3 * k3 / (24.0 * k2 * k2 * k2);
        let log_g1 = -0.5 * (2.0 * std::f64::consts::PI * k2).ln()
            + self.kg_derivative(0, t)?
            - t
            + correction;
        let (psi1, psi2) = (self.psi1(), self.h);
        let log_det = psi1.ln() + (self.p - 1) as f64 * psi2.ln();
        let xi_psi_xi = self.q1() / psi1 + self.q2() / psi2;
        Ok(std::f64::consts::LN_2
            + self.p as f64 / 2.0 * std::f64::consts::PI.ln()
            - 0.5 * log_det
            + log_g1
            + xi_psi_xi
            + self.h
            - self.kappa0 * self.nu * self.nu)
    }
}

/// log a-hat(kappa0, kappa1, nu) on S^{p-1} with the default shift.
pub fn s1_log_norm_const(kappa0: f64, kappa1: f64, nu: f64, p: usize) -> Result<f64> {
    SaddleProblem::with_default_h(kappa0, kappa1, nu, p)?.log_norm_const()
}
