//! Log-density evaluation and normalizing constants for the vMF, BM, S1, S2,
//! iMS1, iMS2 and MS2 families, the Fisher-Bingham reparametrization of S1,
//! and the large-concentration precision-matrix map of MS2.
//!
//! All densities are taken with respect to surface (Hausdorff) measure on
//! (S^{p-1})^K, so constants from different families are directly comparable
//! in likelihood ratios. In the (s, y) coordinates the corresponding density
//! carries the Jacobian (1-s^2)^{(p-3)/2}; working in ambient coordinates the
//! Jacobian lives inside the normalizing integrals instead.
//!
//! Kernels:
//! ```text
//! vMF:  exp{ kappa mu'x }
//! BM:   exp{ -kappa (mu'x - nu)^2 }
//! S1:   exp{ -kappa0 (mu0'x - nu)^2 + kappa1 mu1'x }
//! S2:   exp{ -kappa0 (mu0'x - nu)^2 + kappa1 cos(phi - zeta) }
//! MS2:  product of S2 verticals, horizontal angles coupled through
//!       kappa1'c(phi,zeta) + (1/2) s(phi,zeta)' Lambda s(phi,zeta)
//! ```
//! with cos(phi - zeta) the angle of x within the subsphere measured from
//! the projected mode (the paper's 0/0 = 0 convention applies at the poles).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, vm_gl_rule};
use crate::saddlepoint;
use crate::special::{ln_gamma, log_bessel_i, sphere_area, std_normal_cdf_diff};
use crate::sphere::{project_complement, UnitVec};

const NU_TOL: f64 = 1e-12;

/// von Mises-Fisher parameters.
#[derive(Debug, Clone)]
pub struct VmfParams {
    pub mu: UnitVec,
    pub kappa: f64,
}

impl VmfParams {
    pub fn new(mu: UnitVec, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) {
            return Err(Error::InvalidParameter(format!("vMF kappa must be >= 0, got {kappa}")));
        }
        if mu.dim() < 3 {
            return Err(Error::InvalidParameter("vMF observations need p >= 3".into()));
        }
        Ok(Self { mu, kappa })
    }
}

/// Bingham-Mardia parameters: isotropic concentration toward C(mu, nu).
#[derive(Debug, Clone)]
pub struct BmParams {
    pub mu: UnitVec,
    pub kappa: f64,
    pub nu: f64,
}

impl BmParams {
    pub fn new(mu: UnitVec, kappa: f64, nu: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("BM kappa must be > 0, got {kappa}")));
        }
        if !(nu > -1.0 && nu < 1.0) {
            return Err(Error::InvalidParameter(format!("BM nu must lie in (-1,1), got {nu}")));
        }
        if mu.dim() < 3 {
            return Err(Error::InvalidParameter("BM observations need p >= 3".into()));
        }
        Ok(Self { mu, kappa, nu })
    }
}

/// Parameters shared by the S1 and S2 families: axis mu0, mode mu1 on
/// C(mu0, nu) with nu = mu0'mu1, vertical concentration kappa0 and mode
/// concentration kappa1. kappa0 = 0 is allowed for the S2 family only (the
/// von Mises-Fisher-on-the-circle null of the testing module).
#[derive(Debug, Clone)]
pub struct SmallCircleParams {
    pub mu0: UnitVec,
    pub mu1: UnitVec,
    pub kappa0: f64,
    pub kappa1: f64,
}

impl SmallCircleParams {
    pub fn new(mu0: UnitVec, mu1: UnitVec, kappa0: f64, kappa1: f64) -> Result<Self> {
        if mu0.dim() != mu1.dim() {
            return Err(Error::DimensionMismatch { expected: mu0.dim(), got: mu1.dim() });
        }
        if mu0.dim() < 3 {
            return Err(Error::InvalidParameter("small-circle models need p >= 3".into()));
        }
        if !(kappa0 >= 0.0) {
            return Err(Error::InvalidParameter(format!("kappa0 must be >= 0, got {kappa0}")));
        }
        if !(kappa1 >= 0.0) {
            return Err(Error::InvalidParameter(format!("kappa1 must be >= 0, got {kappa1}")));
        }
        let nu = mu0.dot(&mu1)?;
        if nu.abs() >= 1.0 - NU_TOL {
            return Err(Error::InvalidParameter(
                "mu1 must not coincide with the axis (nu must lie in (-1,1))".into(),
            ));
        }
        Ok(Self { mu0, mu1, kappa0, kappa1 })
    }

    pub fn nu(&self) -> f64 {
        self.mu0.coords().dot(self.mu1.coords())
    }

    pub fn p(&self) -> usize {
        self.mu0.dim()
    }
}

/// One marginal of a multivariate small-sphere model.
#[derive(Debug, Clone)]
pub struct MarginalParams {
    pub mu1: UnitVec,
    pub kappa0: f64,
    pub kappa1: f64,
}

/// Shared-axis multivariate parameters (iMS1 / iMS2).
#[derive(Debug, Clone)]
pub struct MultiParams {
    pub mu0: UnitVec,
    pub marginals: Vec<MarginalParams>,
}

impl MultiParams {
    pub fn new(mu0: UnitVec, marginals: Vec<MarginalParams>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidParameter("need at least one marginal".into()));
        }
        if mu0.dim() < 3 {
            return Err(Error::InvalidParameter("small-circle models need p >= 3".into()));
        }
        for m in &marginals {
            if m.mu1.dim() != mu0.dim() {
                return Err(Error::DimensionMismatch { expected: mu0.dim(), got: m.mu1.dim() });
            }
            if !(m.kappa0 >= 0.0 && m.kappa1 >= 0.0) {
                return Err(Error::InvalidParameter("marginal concentrations must be >= 0".into()));
            }
            let nu = mu0.dot(&m.mu1)?;
            if nu.abs() >= 1.0 - NU_TOL {
                return Err(Error::InvalidParameter(
                    "marginal mode must not coincide with the axis".into(),
                ));
            }
        }
        Ok(Self { mu0, marginals })
    }

    pub fn k(&self) -> usize {
        self.marginals.len()
    }

    pub fn p(&self) -> usize {
        self.mu0.dim()
    }

    pub fn nus(&self) -> Vec<f64> {
        self.marginals.iter().map(|m| self.mu0.coords().dot(m.mu1.coords())).collect()
    }
}

/// MS2: shared-axis S2 marginals on (S^2)^K with sine-coupled horizontal
/// dependence Lambda (symmetric, zero diagonal).
#[derive(Debug, Clone)]
pub struct Ms2Params {
    pub base: MultiParams,
    pub lambda: DMatrix<f64>,
}

impl Ms2Params {
    pub fn new(base: MultiParams, lambda: DMatrix<f64>) -> Result<Self> {
        if base.p() != 3 {
            return Err(Error::Unsupported("MS2 requires p = 3".into()));
        }
        let k = base.k();
        if lambda.nrows() != k || lambda.ncols() != k {
            return Err(Error::DimensionMismatch { expected: k, got: lambda.nrows() });
        }
        for i in 0..k {
            if lambda[(i, i)].abs() > 1e-14 {
                return Err(Error::InvalidParameter("Lambda must have zero diagonal".into()));
            }
            for j in 0..k {
                if (lambda[(i, j)] - lambda[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter("Lambda must be symmetric".into()));
                }
            }
        }
        Ok(Self { base, lambda })
    }
}

/// Tagged union over the implemented families.
#[derive(Debug, Clone)]
pub enum ModelParams {
    Vmf(VmfParams),
    Bm(BmParams),
    S1(SmallCircleParams),
    S2(SmallCircleParams),
    Ims1(MultiParams),
    Ims2(MultiParams),
    Ms2(Ms2Params),
}

impl ModelParams {
    pub fn p(&self) -> usize {
        match self {
            ModelParams::Vmf(v) => v.mu.dim(),
            ModelParams::Bm(b) => b.mu.dim(),
            ModelParams::S1(c) | ModelParams::S2(c) => c.p(),
            ModelParams::Ims1(m) | ModelParams::Ims2(m) => m.p(),
            ModelParams::Ms2(m) => m.base.p(),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            ModelParams::Ims1(m) | ModelParams::Ims2(m) => m.k(),
            ModelParams::Ms2(m) => m.base.k(),
            _ => 1,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelParams::Vmf(_) => "vmf",
            ModelParams::Bm(_) => "bm",
            ModelParams::S1(_) => "s1",
            ModelParams::S2(_) => "s2",
            ModelParams::Ims1(_) => "ims1",
            ModelParams::Ims2(_) => "ims2",
            ModelParams::Ms2(_) => "ms2",
        }
    }

    /// Shared axis, for families that have one.
    pub fn axis(&self) -> Option<&UnitVec> {
        match self {
            ModelParams::Vmf(_) => None,
            ModelParams::Bm(b) => Some(&b.mu),
            ModelParams::S1(c) | ModelParams::S2(c) => Some(&c.mu0),
            ModelParams::Ims1(m) | ModelParams::Ims2(m) => Some(&m.mu0),
            ModelParams::Ms2(m) => Some(&m.base.mu0),
        }
    }

    /// Latitude cosines per marginal, for families concentrated on small
    /// spheres.
    pub fn nus(&self) -> Option<Vec<f64>> {
        match self {
            ModelParams::Vmf(_) => None,
            ModelParams::Bm(b) => Some(vec![b.nu]),
            ModelParams::S1(c) | ModelParams::S2(c) => Some(vec![c.nu()]),
            ModelParams::Ims1(m) | ModelParams::Ims2(m) => Some(m.nus()),
            ModelParams::Ms2(m) => Some(m.base.nus()),
        }
    }

    pub fn log_norm_const(&self) -> Result<f64> {
        log_norm_const(self)
    }

    pub fn evaluator(&self) -> Result<DensityEvaluator> {
        DensityEvaluator::new(self)
    }

    /// Log density of one observation row (K unit vectors) with respect to
    /// surface measure on (S^{p-1})^K.
    pub fn log_density(&self, row: &[UnitVec]) -> Result<f64> {
        self.evaluator()?.log_density(row)
    }
}

// ---------------------------------------------------------------------------
// Normalizing constants
// ---------------------------------------------------------------------------

/// log of I_v(x)/x^v, finite in the x -> 0 limit.
fn log_bessel_over_pow(v: f64, x: f64) -> Result<f64> {
    if x < 1e-12 {
        return Ok(-v * std::f64::consts::LN_2 - ln_gamma(v + 1.0));
    }
    Ok(log_bessel_i(v, x)? - v * x.ln())
}

/// log of the surface-measure vMF constant on S^{p-1}:
/// (2 pi)^{p/2} I_{p/2-1}(kappa) / kappa^{p/2-1}. Valid for p >= 2
/// (p = 2 gives the circle constant 2 pi I_0).
pub fn vmf_log_norm_const(p: usize, kappa: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::InvalidParameter("vMF constant needs p >= 2".into()));
    }
    let v = p as f64 / 2.0 - 1.0;
    Ok(p as f64 / 2.0 * (2.0 * std::f64::consts::PI).ln() + log_bessel_over_pow(v, kappa)?)
}

/// log of the latitude factor int_{-1}^{1} (1-s^2)^{(p-3)/2}
/// exp(-kappa0 (s-nu)^2) ds; closed form through Phi for p = 3, adaptive
/// quadrature otherwise.
fn log_s_factor(kappa0: f64, nu: f64, p: usize) -> Result<f64> {
    if kappa0 == 0.0 {
        // int (1-s^2)^{(p-3)/2} ds = sqrt(pi) Gamma((p-1)/2) / Gamma(p/2)
        return Ok(0.5 * std::f64::consts::PI.ln() + ln_gamma((p as f64 - 1.0) / 2.0)
            - ln_gamma(p as f64 / 2.0));
    }
    if p == 3 {
        let r = (2.0 * kappa0).sqrt();
        let mass = std_normal_cdf_diff(-(1.0 + nu) * r, (1.0 - nu) * r);
        return Ok(0.5 * (std::f64::consts::PI / kappa0).ln() + mass.ln());
    }
    let pw = (p as f64 - 3.0) / 2.0;
    let f = |s: f64| (1.0 - s * s).max(0.0).powf(pw) * (-kappa0 * (s - nu) * (s - nu)).exp();
    let val = adaptive_simpson(&f, -1.0, 1.0, 1e-12)?;
    if val <= 0.0 {
        return Err(Error::Numerical("latitude factor quadrature collapsed to zero".into()));
    }
    Ok(val.ln())
}

fn bm_log_norm_const(b: &BmParams) -> Result<f64> {
    let p = b.mu.dim();
    // uniform direction on S^{p-2} times the latitude factor
    Ok(log_s_factor(b.kappa, b.nu, p)? + sphere_area(p - 1).ln())
}

fn s2_marginal_log_norm_const(kappa0: f64, kappa1: f64, nu: f64, p: usize) -> Result<f64> {
    Ok(log_s_factor(kappa0, nu, p)? + vmf_log_norm_const(p - 1, kappa1)?)
}

/// log T3(kappa1, Lambda): normalizing constant of the multivariate
/// von Mises block over [0, 2pi)^K, by tensor-product Gauss-Legendre.
/// Supported for K <= 3; K = 1 reduces to 2 pi I_0.
pub fn log_t3(kappa1: &[f64], lambda: Option<&DMatrix<f64>>) -> Result<f64> {
    let k = kappa1.len();
    if k == 1 {
        return vmf_log_norm_const(2, kappa1[0]);
    }
    let zero;
    let lam = match lambda {
        Some(l) => l,
        None => {
            zero = DMatrix::zeros(k, k);
            &zero
        }
    };
    if k > 3 {
        return Err(Error::Unsupported(
            "MS2 normalized evaluation is limited to K <= 3; use the unnormalized kernel".into(),
        ));
    }
    let (nodes, weights) = vm_gl_rule();
    let m = nodes.len();
    let mut cosv = vec![0.0; m];
    let mut sinv = vec![0.0; m];
    let mut wv = vec![0.0; m];
    for i in 0..m {
        let phi = (nodes[i] + 1.0) * std::f64::consts::PI;
        cosv[i] = phi.cos();
        sinv[i] = phi.sin();
        wv[i] = weights[i] * std::f64::consts::PI;
    }
    // scale by the exponent's upper bound to avoid overflow
    let mut bound: f64 = kappa1.iter().sum();
    for a in 0..k {
        for b in (a + 1)..k {
            bound += lam[(a, b)].abs();
        }
    }
    let mut total = 0.0;
    match k {
        2 => {
            for i in 0..m {
                let e1 = kappa1[0] * cosv[i];
                let s1 = sinv[i];
                let mut row = 0.0;
                for j in 0..m {
                    let e = e1 + kappa1[1] * cosv[j] + lam[(0, 1)] * s1 * sinv[j] - bound;
                    row += wv[j] * e.exp();
                }
                total += wv[i] * row;
            }
        }
        3 => {
            for i in 0..m {
                let e1 = kappa1[0] * cosv[i];
                let s1 = sinv[i];
                let mut plane = 0.0;
                for j in 0..m {
                    let e2 = e1 + kappa1[1] * cosv[j] + lam[(0, 1)] * s1 * sinv[j];
                    let s2 = sinv[j];
                    let mut row = 0.0;
                    for l in 0..m {
                        let e = e2
                            + kappa1[2] * cosv[l]
                            + (lam[(0, 2)] * s1 + lam[(1, 2)] * s2) * sinv[l]
                            - bound;
                        row += wv[l] * e.exp();
                    }
                    plane += wv[j] * row;
                }
                total += wv[i] * plane;
            }
        }
        _ => unreachable!(),
    }
    Ok(total.ln() + bound)
}

/// Bivariate T3 through the Bessel series
/// T3 = 4 pi^2 sum_m C(2m, m) (lambda^2 / (4 k1 k2))^m I_m(k1) I_m(k2),
/// equal to the quadrature value to ~1e-12 but two orders of magnitude
/// faster; used inside the MS2 likelihood refinement loop.
pub(crate) fn log_t3_pair_series(kappa1: f64, kappa2: f64, lambda: f64) -> f64 {
    use crate::special::bessel_i_scaled_table;
    let m_max = (40.0 + 1.5 * lambda.abs()).ceil() as usize;
    let t1 = bessel_i_scaled_table(kappa1, m_max);
    let t2 = bessel_i_scaled_table(kappa2, m_max);
    let q = if lambda == 0.0 {
        0.0
    } else {
        lambda * lambda / (4.0 * kappa1.max(1e-300) * kappa2.max(1e-300))
    };
    // run the term recurrence on the scaled-table ratios so neither the
    // binomial growth nor the table decay overflows on its own
    let mut term = t1[0] * t2[0];
    let mut sum = term;
    for m in 1..=m_max {
        let r1 = if t1[m - 1] > 0.0 { t1[m] / t1[m - 1] } else { 0.0 };
        let r2 = if t2[m - 1] > 0.0 { t2[m] / t2[m - 1] } else { 0.0 };
        term *= q * 2.0 * (2.0 * m as f64 - 1.0) / m as f64 * r1 * r2;
        if !(term > 0.0) {
            break;
        }
        sum += term;
        if term < 1e-16 * sum && m > 4 {
            break;
        }
    }
    (4.0 * std::f64::consts::PI * std::f64::consts::PI).ln() + kappa1 + kappa2 + sum.ln()
}

/// Normalizing constant (log) with respect to surface measure.
pub fn log_norm_const(params: &ModelParams) -> Result<f64> {
    match params {
        ModelParams::Vmf(v) => vmf_log_norm_const(v.mu.dim(), v.kappa),
        ModelParams::Bm(b) => bm_log_norm_const(b),
        ModelParams::S1(c) => {
            saddlepoint::s1_log_norm_const(c.kappa0, c.kappa1, c.nu(), c.p())
        }
        ModelParams::S2(c) => s2_marginal_log_norm_const(c.kappa0, c.kappa1, c.nu(), c.p()),
        ModelParams::Ims1(m) => {
            let mut total = 0.0;
            for (marg, nu) in m.marginals.iter().zip(m.nus()) {
                total += saddlepoint::s1_log_norm_const(marg.kappa0, marg.kappa1, nu, m.p())?;
            }
            Ok(total)
        }
        ModelParams::Ims2(m) => {
            let mut total = 0.0;
            for (marg, nu) in m.marginals.iter().zip(m.nus()) {
                total += s2_marginal_log_norm_const(marg.kappa0, marg.kappa1, nu, m.p())?;
            }
            Ok(total)
        }
        ModelParams::Ms2(m) => {
            let mut total = 0.0;
            for (marg, nu) in m.base.marginals.iter().zip(m.base.nus()) {
                total += log_s_factor(marg.kappa0, nu, 3)?;
            }
            let kappa1: Vec<f64> = m.base.marginals.iter().map(|x| x.kappa1).collect();
            Ok(total + log_t3(&kappa1, Some(&m.lambda))?)
        }
    }
}

// ---------------------------------------------------------------------------
// Density evaluation
// ---------------------------------------------------------------------------

struct HorizontalGeometry {
    /// unit projection of mu1 onto the complement of the axis
    u: DVector<f64>,
    kappa0: f64,
    kappa1: f64,
    nu: f64,
}

impl HorizontalGeometry {
    fn new(mu0: &UnitVec, mu1: &UnitVec, kappa0: f64, kappa1: f64) -> Result<Self> {
        let nu = mu0.dot(mu1)?;
        let t = project_complement(mu0, mu1.coords());
        let tn = t.norm();
        if tn < 1e-10 {
            return Err(Error::InvalidParameter("mode coincides with the axis".into()));
        }
        Ok(Self { u: t / tn, kappa0, kappa1, nu })
    }

    /// (s, cos(phi-zeta), sin(phi-zeta)) of x relative to the axis and mode
    /// meridian; the 0/0 = 0 convention applies at the poles. The sine uses
    /// the right-handed orientation (p = 3 only).
    fn coords(&self, mu0: &UnitVec, x: &UnitVec, with_sin: bool) -> (f64, f64, f64) {
        let s = mu0.coords().dot(x.coords()).clamp(-1.0, 1.0);
        let w = project_complement(mu0, x.coords());
        let wn = w.norm();
        if wn < 1e-14 {
            return (s, 0.0, 0.0);
        }
        let w = w / wn;
        let c = self.u.dot(&w).clamp(-1.0, 1.0);
        let sin = if with_sin {
            // det [mu0 | u | w], the oriented sine in the horizontal plane
            let m = mu0.coords();
            let u = &self.u;
            m[0] * (u[1] * w[2] - u[2] * w[1]) - m[1] * (u[0] * w[2] - u[2] * w[0])
                + m[2] * (u[0] * w[1] - u[1] * w[0])
        } else {
            0.0
        };
        (s, c, sin)
    }
}

enum EvalKind {
    Vmf { mu: UnitVec, kappa: f64 },
    Bm { mu: UnitVec, kappa: f64, nu: f64 },
    /// S1 / iMS1 marginals sharing the axis
    FirstKind { mu0: UnitVec, marginals: Vec<(UnitVec, f64, f64, f64)> },
    /// S2 / iMS2 / MS2; `lambda` present only for MS2
    SecondKind { mu0: UnitVec, marginals: Vec<HorizontalGeometry>, lambda: Option<DMatrix<f64>> },
}

/// Prepared evaluator: normalizing constants and frame geometry are computed
/// once, evaluation per row is cheap.
pub struct DensityEvaluator {
    p: usize,
    k: usize,
    log_c: f64,
    kind: EvalKind,
}

impl DensityEvaluator {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let log_c = log_norm_const(params)?;
        let (p, k) = (params.p(), params.k());
        let kind = match params {
            ModelParams::Vmf(v) => EvalKind::Vmf { mu: v.mu.clone(), kappa: v.kappa },
            ModelParams::Bm(b) => EvalKind::Bm { mu: b.mu.clone(), kappa: b.kappa, nu: b.nu },
            ModelParams::S1(c) => EvalKind::FirstKind {
                mu0: c.mu0.clone(),
                marginals: vec![(c.mu1.clone(), c.kappa0, c.kappa1, c.nu())],
            },
            ModelParams::Ims1(m) => EvalKind::FirstKind {
                mu0: m.mu0.clone(),
                marginals: m
                    .marginals
                    .iter()
                    .zip(m.nus())
                    .map(|(x, nu)| (x.mu1.clone(), x.kappa0, x.kappa1, nu))
                    .collect(),
            },
            ModelParams::S2(c) => EvalKind::SecondKind {
                mu0: c.mu0.clone(),
                marginals: vec![HorizontalGeometry::new(&c.mu0, &c.mu1, c.kappa0, c.kappa1)?],
                lambda: None,
            },
            ModelParams::Ims2(m) => EvalKind::SecondKind {
                mu0: m.mu0.clone(),
                marginals: m
                    .marginals
                    .iter()
                    .map(|x| HorizontalGeometry::new(&m.mu0, &x.mu1, x.kappa0, x.kappa1))
                    .collect::<Result<_>>()?,
                lambda: None,
            },
            ModelParams::Ms2(m) => EvalKind::SecondKind {
                mu0: m.base.mu0.clone(),
                marginals: m
                    .base
                    .marginals
                    .iter()
                    .map(|x| HorizontalGeometry::new(&m.base.mu0, &x.mu1, x.kappa0, x.kappa1))
                    .collect::<Result<_>>()?,
                lambda: Some(m.lambda.clone()),
            },
        };
        Ok(Self { p, k, log_c, kind })
    }

    pub fn log_norm_const(&self) -> f64 {
        self.log_c
    }

    fn check_row(&self, row: &[UnitVec]) -> Result<()> {
        if row.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: row.len() });
        }
        for x in row {
            if x.dim() != self.p {
                return Err(Error::DimensionMismatch { expected: self.p, got: x.dim() });
            }
        }
        Ok(())
    }

    /// Unnormalized log kernel of one observation row.
    pub fn log_kernel(&self, row: &[UnitVec]) -> Result<f64> {
        self.check_row(row)?;
        Ok(match &self.kind {
            EvalKind::Vmf { mu, kappa } => kappa * mu.coords().dot(row[0].coords()),
            EvalKind::Bm { mu, kappa, nu } => {
                let d = mu.coords().dot(row[0].coords()) - nu;
                -kappa * d * d
            }
            EvalKind::FirstKind { mu0, marginals } => {
                let mut total = 0.0;
                for ((mu1, kappa0, kappa1, nu), x) in marginals.iter().zip(row) {
                    let s = mu0.coords().dot(x.coords());
                    let d = s - nu;
                    total += -kappa0 * d * d + kappa1 * mu1.coords().dot(x.coords());
                }
                total
            }
            EvalKind::SecondKind { mu0, marginals, lambda } => {
                let with_sin = lambda.is_some();
                let mut total = 0.0;
                let mut sines = Vec::with_capacity(if with_sin { marginals.len() } else { 0 });
                for (g, x) in marginals.iter().zip(row) {
                    let (s, c, sin) = g.coords(mu0, x, with_sin);
                    let d = s - g.nu;
                    total += -g.kappa0 * d * d + g.kappa1 * c;
                    if with_sin {
                        sines.push(sin);
                    }
                }
                if let Some(lam) = lambda {
                    for a in 0..sines.len() {
                        for b in (a + 1)..sines.len() {
                            total += lam[(a, b)] * sines[a] * sines[b];
                        }
                    }
                }
                total
            }
        })
    }

    pub fn log_density(&self, row: &[UnitVec]) -> Result<f64> {
        Ok(self.log_kernel(row)? - self.log_c)
    }

    /// Negative log-likelihood of a whole sample.
    pub fn neg_log_lik(&self, rows: &[Vec<UnitVec>]) -> Result<f64> {
        let mut total = 0.0;
        for row in rows {
            total -= self.log_density(row)?;
        }
        Ok(total)
    }
}

// ---------------------------------------------------------------------------
// Reparametrizations
// ---------------------------------------------------------------------------

/// Fisher-Bingham form of the S1 density: gamma = 2 kappa0 nu mu0 +
/// kappa1 mu1 and A = kappa0 mu0 mu0', with
/// alpha(gamma, A) = a(kappa0, kappa1, nu) exp(kappa0 nu^2).
pub fn to_fisher_bingham(params: &SmallCircleParams) -> (DVector<f64>, DMatrix<f64>) {
    let nu = params.nu();
    let gamma = params.mu0.coords() * (2.0 * params.kappa0 * nu)
        + params.mu1.coords() * params.kappa1;
    let a = params.mu0.coords() * params.mu0.coords().transpose() * params.kappa0;
    (gamma, a)
}

/// Gaussian large-concentration approximation of the MS2 horizontal block.
#[derive(Debug, Clone)]
pub struct Ms2PrecisionApprox {
    /// Sigma^{-1}: diagonal kappa1, off-diagonal -lambda
    pub precision: DMatrix<f64>,
    pub positive_definite: bool,
    /// correlation matrix of Sigma; absent when the precision is not
    /// positive definite (approximation invalid at these parameters)
    pub correlation: Option<DMatrix<f64>>,
}

pub fn ms2_precision_approx(params: &Ms2Params) -> Ms2PrecisionApprox {
    let k = params.base.k();
    let mut precision = -params.lambda.clone();
    for (i, m) in params.base.marginals.iter().enumerate() {
        precision[(i, i)] = m.kappa1;
    }
    let chol = precision.clone().cholesky();
    let positive_definite = chol.is_some();
    let correlation = chol.map(|c| {
        let sigma = c.inverse();
        let mut corr = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                corr[(i, j)] = sigma[(i, j)] / (sigma[(i, i)] * sigma[(j, j)]).sqrt();
            }
        }
        corr
    });
    Ms2PrecisionApprox { precision, positive_definite, correlation }
}

// ---------------------------------------------------------------------------
// GMS2 kernel (density evaluation only)
// ---------------------------------------------------------------------------

/// General second-kind multivariate kernel in (s, y) coordinates with a full
/// horizontal coupling block matrix B (symmetric, vanishing diagonal
/// blocks). Unnormalized: no constants, estimation or sampling are offered
/// for this family.
#[derive(Debug, Clone)]
pub struct Gms2Kernel {
    pub kappa0: Vec<f64>,
    pub nu: Vec<f64>,
    /// kappa1_k mu1~_k per marginal, each in R^{p-1}
    pub m: Vec<DVector<f64>>,
    /// K(p-1) x K(p-1) coupling matrix
    pub b: DMatrix<f64>,
}

impl Gms2Kernel {
    pub fn new(kappa0: Vec<f64>, nu: Vec<f64>, m: Vec<DVector<f64>>, b: DMatrix<f64>) -> Result<Self> {
        let k = kappa0.len();
        if nu.len() != k || m.len() != k || k == 0 {
            return Err(Error::InvalidParameter("inconsistent GMS2 block sizes".into()));
        }
        let d = m[0].len();
        if m.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidParameter("marginal blocks must share p".into()));
        }
        if b.nrows() != k * d || b.ncols() != k * d {
            return Err(Error::DimensionMismatch { expected: k * d, got: b.nrows() });
        }
        for i in 0..k * d {
            for j in 0..k * d {
                if (b[(i, j)] - b[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter("B must be symmetric".into()));
                }
                if i / d == j / d && b[(i, j)].abs() > 1e-14 {
                    return Err(Error::InvalidParameter("B must have zero diagonal blocks".into()));
                }
            }
        }
        Ok(Self { kappa0, nu, m, b })
    }

    pub fn log_kernel(&self, s: &[f64], y: &[UnitVec]) -> Result<f64> {
        let k = self.kappa0.len();
        if s.len() != k || y.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: s.len() });
        }
        let d = self.m[0].len();
        let mut total = 0.0;
        let mut vec_y = DVector::zeros(k * d);
        for j in 0..k {
            if y[j].dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: y[j].dim() });
            }
            let ds = s[j] - self.nu[j];
            total += -self.kappa0[j] * ds * ds + self.m[j].dot(y[j].coords());
            vec_y.rows_mut(j * d, d).copy_from(y[j].coords());
        }
        total += (&vec_y.transpose() * &self.b * &vec_y)[(0, 0)];
        Ok(total)
    }
}
