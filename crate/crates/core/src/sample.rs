//! Pseudo-random generation for all model families.
//!
//! S2/iMS2/MS2 use the exact three-step construction: truncated-normal
//! latitude cosines, von Mises (or multivariate von Mises) horizontal
//! angles, then frame recomposition. S1/iMS1 use a two-block Gibbs sampler
//! in (s, y) coordinates whose conditionals are vMF (y | s) and a
//! one-dimensional log-concave density sampled by grid inverse-CDF (s | y).

use nalgebra::{DMatrix, DVector};

use crate::data::DirectionalSample;
use crate::density::{Ms2Params, MultiParams, ModelParams};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::{std_normal_cdf, std_normal_quantile, TruncNormalSpec};
use crate::sphere::{Frame, UnitVec};

/// Burn-in and thinning for the Markov-chain samplers.
#[derive(Debug, Clone, Copy)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { burn_in: 500, thin: 5 }
    }
}

impl GibbsConfig {
    pub fn new(burn_in: usize, thin: usize) -> Result<Self> {
        if thin < 1 {
            return Err(Error::InvalidParameter("thinning must be >= 1".into()));
        }
        Ok(Self { burn_in, thin })
    }
}

/// Inverse-CDF draws from a truncated normal, computed in the Phi-difference
/// domain with the better-conditioned tail chosen by symmetry.
pub fn sample_trunc_normal(rng: &mut RngStream, spec: &TruncNormalSpec, n: usize) -> Vec<f64> {
    (0..n).map(|_| trunc_normal_draw(rng, spec)).collect()
}

fn trunc_normal_draw(rng: &mut RngStream, spec: &TruncNormalSpec) -> f64 {
    let za = (spec.lower - spec.mean) / spec.sd;
    let zb = (spec.upper - spec.mean) / spec.sd;
    let u = rng.uniform();
    let z = if za + zb > 0.0 {
        // reflect so the quantile evaluation happens in the left tail
        let (fa, fb) = (std_normal_cdf(-zb), std_normal_cdf(-za));
        -std_normal_quantile((fa + u * (fb - fa)).clamp(1e-300, 1.0 - 1e-16))
    } else {
        let (fa, fb) = (std_normal_cdf(za), std_normal_cdf(zb));
        std_normal_quantile((fa + u * (fb - fa)).clamp(1e-300, 1.0 - 1e-16))
    };
    (spec.mean + spec.sd * z).clamp(spec.lower, spec.upper)
}

/// Best-Fisher rejection sampler for the von Mises distribution on the
/// circle; angles in (-pi, pi] shifted to the mean.
pub fn sample_von_mises(rng: &mut RngStream, mean_angle: f64, kappa: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| von_mises_draw(rng, mean_angle, kappa)).collect()
}

fn von_mises_draw(rng: &mut RngStream, mean: f64, kappa: f64) -> f64 {
    if kappa < 1e-8 {
        return wrap_angle(rng.uniform_range(-std::f64::consts::PI, std::f64::consts::PI) + mean);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1 = rng.uniform();
        let z = (std::f64::consts::PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2 = rng.uniform();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let angle = f.clamp(-1.0, 1.0).acos();
            let signed = if rng.uniform() < 0.5 { -angle } else { angle };
            return wrap_angle(mean + signed);
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a.rem_euclid(2.0 * std::f64::consts::PI);
    if a > std::f64::consts::PI {
        a -= 2.0 * std::f64::consts::PI;
    }
    a
}

/// Uniform direction in R^d (d >= 2).
pub fn sample_uniform_sphere(rng: &mut RngStream, d: usize) -> UnitVec {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.normal());
        if v.norm() > 1e-8 {
            return UnitVec::new(v).expect("nonzero gaussian vector normalizes");
        }
    }
}

/// Continuous inverse-CDF sampler on [-1, 1] from an unnormalized
/// log-density tabulated on a uniform grid (piecewise-linear density).
struct GridSampler {
    values: Vec<f64>,
    cdf: Vec<f64>,
    step: f64,
}

pub(crate) const GRID_CELLS: usize = 512;

impl GridSampler {
    fn new<F: Fn(f64) -> f64>(log_f: F) -> Self {
        let step = 2.0 / GRID_CELLS as f64;
        let mut logs = Vec::with_capacity(GRID_CELLS + 1);
        let mut max = f64::NEG_INFINITY;
        for i in 0..=GRID_CELLS {
            let x = -1.0 + i as f64 * step;
            let v = log_f(x);
            max = max.max(v);
            logs.push(v);
        }
        let values: Vec<f64> = logs.iter().map(|&v| (v - max).exp()).collect();
        let mut cdf = Vec::with_capacity(GRID_CELLS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..GRID_CELLS {
            acc += 0.5 * (values[i] + values[i + 1]) * step;
            cdf.push(acc);
        }
        Self { values, cdf, step }
    }

    fn draw(&self, rng: &mut RngStream) -> f64 {
        let total = *self.cdf.last().unwrap();
        let target = rng.uniform() * total;
        let mut lo = 0;
        let mut hi = GRID_CELLS;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let rem = target - self.cdf[lo];
        let (f0, f1) = (self.values[lo], self.values[lo + 1]);
        // invert the trapezoid mass: rem = step * (f0 t + (f1-f0) t^2 / 2)
        let df = f1 - f0;
        let t = if df.abs() < 1e-14 * (f0 + f1 + 1e-300) {
            if f0 > 0.0 { rem / (self.step * f0) } else { 0.5 }
        } else {
            let disc = (f0 * f0 + 2.0 * df * rem / self.step).max(0.0);
            ((disc.sqrt() - f0) / df).clamp(0.0, 1.0)
        };
        -1.0 + (lo as f64 + t) * self.step
    }
}

/// vMF draws on S^{d-1} with mean direction `mean` and concentration
/// `kappa`. The cosine of the angle to the mean is drawn by inverse
/// transform (closed form for d = 3, grid otherwise), the tangent direction
/// uniformly.
pub fn sample_vmf(rng: &mut RngStream, mean: &UnitVec, kappa: f64, n: usize) -> Result<Vec<UnitVec>> {
    if kappa < 0.0 {
        return Err(Error::InvalidParameter("vMF kappa must be >= 0".into()));
    }
    let d = mean.dim();
    if d == 2 {
        let zeta = mean.as_slice()[1].atan2(mean.as_slice()[0]);
        return Ok(sample_von_mises(rng, zeta, kappa, n)
            .into_iter()
            .map(|a| UnitVec::from_slice(&[a.cos(), a.sin()]).unwrap())
            .collect());
    }
    if kappa < 1e-12 {
        return Ok((0..n).map(|_| sample_uniform_sphere(rng, d)).collect());
    }
    let frame = Frame::from_axis(mean);
    let grid = if d != 3 {
        let pw = (d as f64 - 3.0) / 2.0;
        Some(GridSampler::new(|w: f64| kappa * w + pw * (1.0 - w * w).max(1e-300).ln()))
    } else {
        None
    };
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let w = match &grid {
            // d = 3: W has density prop. to e^{kappa w}; invert directly
            None => {
                let u = rng.uniform();
                let e = (-2.0 * kappa).exp();
                1.0 + (u + (1.0 - u) * e).ln() / kappa
            }
            Some(g) => g.draw(rng),
        };
        let tangent = sample_uniform_sphere(rng, d - 1);
        out.push(frame.recompose(w.clamp(-1.0, 1.0), &tangent)?);
    }
    Ok(out)
}

/// Gibbs sampler for the multivariate von Mises sine model on K angles,
/// mean angles `zeta`, concentrations `kappa1`, coupling `lambda`. The full
/// conditional of each angle is a univariate von Mises whose resultant
/// vector combines kappa1 with the sine couplings of the other angles.
pub fn sample_mvm(
    rng: &mut RngStream,
    zeta: &[f64],
    kappa1: &[f64],
    lambda: &DMatrix<f64>,
    config: &GibbsConfig,
    n: usize,
) -> Result<Vec<Vec<f64>>> {
    let k = zeta.len();
    if kappa1.len() != k || lambda.nrows() != k || lambda.ncols() != k {
        return Err(Error::DimensionMismatch { expected: k, got: kappa1.len() });
    }
    let mut dev: Vec<f64> = vec![0.0; k]; // deviations phi_j - zeta_j
    let mut out = Vec::with_capacity(n);
    let total = config.burn_in + n * config.thin;
    for step in 0..total {
        for j in 0..k {
            let mut b = 0.0;
            for l in 0..k {
                if l != j {
                    b += lambda[(j, l)] * dev[l].sin();
                }
            }
            let a = kappa1[j];
            let conc = (a * a + b * b).sqrt();
            let shift = b.atan2(a);
            dev[j] = von_mises_draw(rng, shift, conc);
        }
        if step >= config.burn_in && (step - config.burn_in) % config.thin == 0 {
            out.push(dev.iter().zip(zeta).map(|(d, z)| wrap_angle(d + z)).collect());
        }
    }
    Ok(out)
}

/// Latitude cosine draw: truncated normal around nu, with the
/// (1-s^2)^{(p-3)/2} surface Jacobian applied by rejection for p > 3.
/// kappa0 = 0 falls back to the pure Jacobian density.
fn latitude_draw(rng: &mut RngStream, kappa0: f64, nu: f64, p: usize) -> f64 {
    let pw = (p as f64 - 3.0) / 2.0;
    if kappa0 == 0.0 {
        if p == 3 {
            return rng.uniform_range(-1.0, 1.0);
        }
        loop {
            let s = rng.uniform_range(-1.0, 1.0);
            if rng.uniform() < (1.0 - s * s).powf(pw) {
                return s;
            }
        }
    }
    let spec = TruncNormalSpec::new(nu, (2.0 * kappa0).sqrt().recip(), -1.0, 1.0)
        .expect("validated parameters");
    loop {
        let s = trunc_normal_draw(rng, &spec);
        if p == 3 || rng.uniform() < (1.0 - s * s).powf(pw) {
            return s;
        }
    }
}

fn s1_marginal_gibbs(
    rng: &mut RngStream,
    mu0: &UnitVec,
    mu1: &UnitVec,
    kappa0: f64,
    kappa1: f64,
    n: usize,
    config: &GibbsConfig,
) -> Result<Vec<UnitVec>> {
    let p = mu0.dim();
    let frame = Frame::new(mu0, mu1)?;
    let nu = mu0.dot(mu1)?;
    let root = (1.0 - nu * nu).sqrt();
    let pw = (p as f64 - 3.0) / 2.0;
    // state in frame coordinates; mu1~ = e1 of the y-space
    let mut s = nu;
    let mut out = Vec::with_capacity(n);
    let total = config.burn_in + n * config.thin;
    for step in 0..total {
        // y | s: vMF on S^{p-2} toward e1
        let conc = kappa1 * root * (1.0 - s * s).max(0.0).sqrt();
        let y = sample_vmf(rng, &UnitVec::basis(p - 1, 0), conc, 1)?.pop().unwrap();
        // s | y: 1D grid inverse-CDF with the surface Jacobian
        let y1 = y.as_slice()[0];
        let grid = GridSampler::new(|t: f64| {
            let d = t - nu;
            let horiz = kappa1 * (nu * t + root * (1.0 - t * t).max(0.0).sqrt() * y1);
            let jac = if p > 3 { pw * (1.0 - t * t).max(1e-300).ln() } else { 0.0 };
            -kappa0 * d * d + horiz + jac
        });
        s = grid.draw(rng);
        if step >= config.burn_in && (step - config.burn_in) % config.thin == 0 {
            out.push(frame.recompose(s, &y)?);
        }
    }
    Ok(out)
}

fn second_kind_marginal_frames(m: &MultiParams) -> Result<Vec<(Frame, f64)>> {
    m.marginals
        .iter()
        .map(|marg| {
            let frame = Frame::new(&m.mu0, &marg.mu1)?;
            let nu = m.mu0.dot(&marg.mu1)?;
            Ok((frame, nu))
        })
        .collect()
}

fn sample_ims2(
    rng: &mut RngStream,
    m: &MultiParams,
    n: usize,
) -> Result<Vec<Vec<UnitVec>>> {
    let p = m.p();
    let frames = second_kind_marginal_frames(m)?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::with_capacity(m.k());
        for (marg, (frame, nu)) in m.marginals.iter().zip(&frames) {
            let s = latitude_draw(rng, marg.kappa0, *nu, p);
            let y = sample_vmf(rng, &UnitVec::basis(p - 1, 0), marg.kappa1, 1)?.pop().unwrap();
            row.push(frame.recompose(s, &y)?);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn sample_ms2(
    rng: &mut RngStream,
    ms2: &Ms2Params,
    n: usize,
    config: &GibbsConfig,
) -> Result<Vec<Vec<UnitVec>>> {
    let m = &ms2.base;
    let frames = second_kind_marginal_frames(m)?;
    let kappa1: Vec<f64> = m.marginals.iter().map(|x| x.kappa1).collect();
    let zeta = vec![0.0; m.k()]; // modes sit at angle 0 in their own frames
    let angles = sample_mvm(rng, &zeta, &kappa1, &ms2.lambda, config, n)?;
    let mut rows = Vec::with_capacity(n);
    for phis in angles {
        let mut row = Vec::with_capacity(m.k());
        for ((marg, (frame, nu)), phi) in m.marginals.iter().zip(&frames).zip(phis) {
            let s = latitude_draw(rng, marg.kappa0, *nu, 3);
            let y = UnitVec::from_slice(&[phi.cos(), phi.sin()])?;
            row.push(frame.recompose(s, &y)?);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Draw `n` observations from any model. Exact for vMF/BM/S2/iMS2/MS2;
/// Gibbs (with the given burn-in and thinning) for S1/iMS1 and the MS2
/// horizontal block.
pub fn sample_model(
    rng: &mut RngStream,
    params: &ModelParams,
    n: usize,
    config: &GibbsConfig,
) -> Result<DirectionalSample> {
    let rows: Vec<Vec<UnitVec>> = match params {
        ModelParams::Vmf(v) => sample_vmf(rng, &v.mu, v.kappa, n)?
            .into_iter()
            .map(|x| vec![x])
            .collect(),
        ModelParams::Bm(b) => {
            let p = b.mu.dim();
            let frame = Frame::from_axis(&b.mu);
            (0..n)
                .map(|_| {
                    let s = latitude_draw(rng, b.kappa, b.nu, p);
                    let y = sample_uniform_sphere(rng, p - 1);
                    frame.recompose(s, &y).map(|x| vec![x])
                })
                .collect::<Result<_>>()?
        }
        ModelParams::S1(c) => {
            s1_marginal_gibbs(rng, &c.mu0, &c.mu1, c.kappa0, c.kappa1, n, config)?
                .into_iter()
                .map(|x| vec![x])
                .collect()
        }
        ModelParams::Ims1(m) => {
            let mut cols = Vec::with_capacity(m.k());
            for marg in &m.marginals {
                cols.push(s1_marginal_gibbs(
                    rng, &m.mu0, &marg.mu1, marg.kappa0, marg.kappa1, n, config,
                )?);
            }
            (0..n)
                .map(|i| cols.iter().map(|c| c[i].clone()).collect())
                .collect()
        }
        ModelParams::S2(c) => {
            let m = MultiParams::new(
                c.mu0.clone(),
                vec![crate::density::MarginalParams {
                    mu1: c.mu1.clone(),
                    kappa0: c.kappa0,
                    kappa1: c.kappa1,
                }],
            )?;
            sample_ims2(rng, &m, n)?
        }
        ModelParams::Ims2(m) => sample_ims2(rng, m, n)?,
        ModelParams::Ms2(m) => sample_ms2(rng, m, n, config)?,
    };
    DirectionalSample::new(rows)
}
