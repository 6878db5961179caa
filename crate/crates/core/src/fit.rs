//! Approximate maximum-likelihood estimation.
//!
//! S1/iMS1 use the alternating algorithm: Step 1 updates the shared axis
//! mu0 by a constrained least-squares solve (Lagrangian bisection, or the
//! smallest eigenvector when nu = 0), Step 2 updates (mu1, kappa0, kappa1)
//! per marginal by simplex descent over (phi, log kappa0, log kappa1) with
//! the saddle-point constant in the objective.
//!
//! S2/iMS2/MS2 use a profile likelihood: an outer simplex descent over mu0
//! in re-anchored tangent coordinates, with the inner parameters solved per
//! marginal as truncated-normal and von Mises (or multivariate von Mises
//! moment) subproblems. The profile objective is the exact joint negative
//! log-likelihood with respect to surface measure.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::data::DirectionalSample;
use crate::density::{
    log_t3, vmf_log_norm_const, MarginalParams, ModelParams, Ms2Params, MultiParams,
    SmallCircleParams, VmfParams,
};
use crate::error::{Error, Result};
use crate::saddlepoint;
use crate::simplex::{self, SimplexSettings};
use crate::special::{bessel_i_ratio, ln_gamma, std_normal_cdf_diff};
use crate::sphere::{project_complement, Frame, UnitVec};

/// Hard cap on fitted concentrations; hitting it sets the saturation flag.
pub const KAPPA_CAP: f64 = 1e6;

/// Options shared by all fitting routines.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Initial nu for the alternating S1 algorithm. `None` uses magnitude
    /// 0.5 with the sign of the data-driven pre-pass (the nu = 0
    /// eigenvector axis, then the sign of mean mu0'x_i). The sign choice is
    /// immaterial up to the (mu0, nu) <-> (-mu0, -nu) symmetry; the
    /// magnitude keeps the axis solve away from the degenerate tiny-circle
    /// basin on mode-concentrated data.
    pub nu_init: Option<f64>,
    pub max_outer_iters: usize,
    /// Relative negative-log-likelihood change declaring convergence.
    pub tol: f64,
    pub simplex: SimplexSettings,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            nu_init: None,
            max_outer_iters: 100,
            tol: 1e-6,
            simplex: SimplexSettings::default(),
        }
    }
}

/// Estimation output: fitted parameters plus the optimization trace.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ModelParams,
    pub neg_log_lik: f64,
    pub n_iters: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
    pub saturated: bool,
}

/// JSON-facing view of a fit (fixed field names).
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub model: String,
    pub mu0: Option<Vec<f64>>,
    pub mu1: serde_json::Value,
    pub kappa0: serde_json::Value,
    pub kappa1: serde_json::Value,
    pub lambda: Option<Vec<Vec<f64>>>,
    pub nu: serde_json::Value,
    #[serde(rename = "negLogLik")]
    pub neg_log_lik: f64,
    pub iters: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn to_report(&self) -> FitReport {
        use serde_json::{json, Value};
        let vecs = |u: &UnitVec| u.as_slice().to_vec();
        let (mu0, mu1, kappa0, kappa1, lambda, nu): (
            Option<Vec<f64>>,
            Value,
            Value,
            Value,
            Option<Vec<Vec<f64>>>,
            Value,
        ) = match &self.params {
            ModelParams::Vmf(v) => {
                (None, json!(vecs(&v.mu)), json!(0.0), json!(v.kappa), None, Value::Null)
            }
            ModelParams::Bm(b) => {
                (Some(vecs(&b.mu)), Value::Null, json!(b.kappa), json!(0.0), None, json!(b.nu))
            }
            ModelParams::S1(c) | ModelParams::S2(c) => (
                Some(vecs(&c.mu0)),
                json!(vecs(&c.mu1)),
                json!(c.kappa0),
                json!(c.kappa1),
                None,
                json!(c.nu()),
            ),
            ModelParams::Ims1(m) | ModelParams::Ims2(m) => (
                Some(vecs(&m.mu0)),
                json!(m.marginals.iter().map(|x| vecs(&x.mu1)).collect::<Vec<_>>()),
                json!(m.marginals.iter().map(|x| x.kappa0).collect::<Vec<_>>()),
                json!(m.marginals.iter().map(|x| x.kappa1).collect::<Vec<_>>()),
                None,
                json!(m.nus()),
            ),
            ModelParams::Ms2(m) => (
                Some(vecs(&m.base.mu0)),
                json!(m.base.marginals.iter().map(|x| vecs(&x.mu1)).collect::<Vec<_>>()),
                json!(m.base.marginals.iter().map(|x| x.kappa0).collect::<Vec<_>>()),
                json!(m.base.marginals.iter().map(|x| x.kappa1).collect::<Vec<_>>()),
                Some(
                    (0..m.base.k())
                        .map(|i| (0..m.base.k()).map(|j| m.lambda[(i, j)]).collect())
                        .collect(),
                ),
                json!(m.base.nus()),
            ),
        };
        FitReport {
            model: self.params.kind_name().to_string(),
            mu0,
            mu1,
            kappa0,
            kappa1,
            lambda,
            nu,
            neg_log_lik: self.neg_log_lik,
            iters: self.n_iters,
            converged: self.converged,
        }
    }
}

/// Constraint applied by the testing module's restricted fits.
#[derive(Debug, Clone)]
pub enum Restriction {
    None,
    /// mu0 fixed; only the inner problem is solved.
    FixedAxis(UnitVec),
    /// nu pinned to 0 for every marginal (mu0 still estimated).
    GreatSphere,
    /// kappa0 pinned to 0 (second-kind families): the von Mises-Fisher on
    /// the circle, uniform in the vertical coordinate.
    VmfNull,
    /// kappa1 pinned to 0 (second-kind families): the Bingham-Mardia null
    /// with no unique mode, evaluated with the family's exact constants.
    BmNull,
}

// ---------------------------------------------------------------------------
// Sub-solvers
// ---------------------------------------------------------------------------

/// Sufficient statistics of the latitude cosines of one marginal.
#[derive(Debug, Clone, Copy)]
struct SStats {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl SStats {
    fn from(vals: &[f64]) -> Self {
        Self {
            n: vals.len() as f64,
            sum: vals.iter().sum(),
            sum_sq: vals.iter().map(|s| s * s).sum(),
        }
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    fn var(&self) -> f64 {
        (self.sum_sq / self.n - self.mean() * self.mean()).max(0.0)
    }

    /// Exact truncated-normal negative log-likelihood on (-1, 1) with
    /// sigma^2 = 1/(2 kappa0).
    fn nll(&self, nu: f64, kappa0: f64) -> f64 {
        let quad = self.sum_sq - 2.0 * nu * self.sum + self.n * nu * nu;
        let r = (2.0 * kappa0).sqrt();
        let mass = std_normal_cdf_diff(-(1.0 + nu) * r, (1.0 - nu) * r);
        kappa0 * quad + self.n * (0.5 * (std::f64::consts::PI / kappa0).ln() + mass.ln())
    }
}

/// Truncated-normal MLE over (nu, kappa0) on (-1, 1), simplex descent in
/// (nu, log kappa0) from the untruncated moment estimates.
pub fn fit_trunc_normal_mle(svals: &[f64], settings: &SimplexSettings) -> Result<(f64, f64)> {
    if svals.len() < 3 {
        return Err(Error::Data("truncated-normal MLE needs n >= 3".into()));
    }
    let stats = SStats::from(svals);
    if stats.var() < 1e-14 {
        return Err(Error::Data("zero-variance input for the truncated-normal MLE".into()));
    }
    let start = [stats.mean().clamp(-0.999, 0.999), (0.5 / stats.var()).min(KAPPA_CAP).ln()];
    let res = simplex::minimize(
        |x| {
            let nu = x[0];
            if nu.abs() >= 1.0 {
                return f64::INFINITY;
            }
            let kappa0 = x[1].exp().min(KAPPA_CAP);
            stats.nll(nu, kappa0)
        },
        &start,
        settings,
    );
    // optimizer contract: never worse than the moment start
    debug_assert!(res.fmin <= stats.nll(start[0], start[1].exp()) + 1e-9);
    Ok((res.x[0].clamp(-0.9999999, 0.9999999), res.x[1].exp().min(KAPPA_CAP)))
}

/// Same subproblem with nu pinned (great-sphere restriction).
fn fit_trunc_normal_kappa(svals: &[f64], nu: f64, settings: &SimplexSettings) -> Result<f64> {
    let stats = SStats::from(svals);
    if stats.sum_sq / stats.n - 2.0 * nu * stats.mean() + nu * nu < 1e-14 {
        return Err(Error::Data("zero-variance input for the truncated-normal MLE".into()));
    }
    let quad = (stats.sum_sq - 2.0 * nu * stats.sum + stats.n * nu * nu) / stats.n;
    let start = [(0.5 / quad).min(KAPPA_CAP).ln()];
    let res = simplex::minimize(
        |x| stats.nll(nu, x[0].exp().min(KAPPA_CAP)),
        &start,
        settings,
    );
    Ok(res.x[0].exp().min(KAPPA_CAP))
}

/// von Mises MLE on the circle.
#[derive(Debug, Clone, Copy)]
pub struct VonMisesFit {
    pub zeta: f64,
    pub kappa: f64,
    /// kappa hit the cap (all angles nearly equal)
    pub saturated: bool,
    /// false when the resultant length is zero and zeta is undefined
    pub mean_defined: bool,
}

/// Circular mean and Banerjee-initialized Newton solve of A(kappa) = rbar.
pub fn fit_von_mises_mle(angles: &[f64]) -> Result<VonMisesFit> {
    if angles.len() < 2 {
        return Err(Error::Data("von Mises MLE needs n >= 2".into()));
    }
    let n = angles.len() as f64;
    let (c, s) = angles.iter().fold((0.0, 0.0), |(c, s), &a| (c + a.cos(), s + a.sin()));
    let (c, s) = (c / n, s / n);
    let rbar = (c * c + s * s).sqrt();
    if rbar < 1e-12 {
        return Ok(VonMisesFit { zeta: 0.0, kappa: 0.0, saturated: false, mean_defined: false });
    }
    let zeta = s.atan2(c);
    if rbar >= 1.0 - 1e-12 {
        return Ok(VonMisesFit { zeta, kappa: KAPPA_CAP, saturated: true, mean_defined: true });
    }
    let mut kappa = (rbar * (2.0 - rbar * rbar) / (1.0 - rbar * rbar)).min(KAPPA_CAP);
    for _ in 0..25 {
        let a = bessel_i_ratio(1.0, kappa)?;
        let da = 1.0 - a * a - a / kappa;
        if da.abs() < 1e-300 {
            break;
        }
        let next = kappa - (a - rbar) / da;
        kappa = next.clamp(kappa * 0.1, (kappa * 10.0).min(KAPPA_CAP));
        if (a - rbar).abs() < 1e-12 {
            break;
        }
    }
    let saturated = kappa >= KAPPA_CAP;
    Ok(VonMisesFit { zeta, kappa, saturated, mean_defined: true })
}

/// vMF MLE on S^{d-1} from points in R^d: mean direction xbar/|xbar| and
/// the Banerjee concentration rbar(d - rbar^2)/(1 - rbar^2) refined by
/// Newton on A_{d/2}(kappa) = rbar.
pub fn fit_vmf_mle(points: &[&UnitVec]) -> Result<(UnitVec, f64, bool)> {
    if points.len() < 2 {
        return Err(Error::Data("vMF MLE needs n >= 2".into()));
    }
    let d = points[0].dim();
    let mut xbar = DVector::zeros(d);
    for x in points {
        xbar += x.coords();
    }
    xbar /= points.len() as f64;
    let rbar = xbar.norm();
    if rbar < 1e-12 {
        return Err(Error::Data("zero resultant: vMF mean direction undefined".into()));
    }
    let mu = UnitVec::new(xbar)?;
    if rbar >= 1.0 - 1e-12 {
        return Ok((mu, KAPPA_CAP, true));
    }
    let d_f = d as f64;
    let mut kappa = (rbar * (d_f - rbar * rbar) / (1.0 - rbar * rbar)).min(KAPPA_CAP);
    for _ in 0..25 {
        let a = bessel_i_ratio(d_f / 2.0, kappa)?;
        let da = 1.0 - a * a - (d_f - 1.0) / kappa * a;
        if da.abs() < 1e-300 {
            break;
        }
        kappa = (kappa - (a - rbar) / da).clamp(kappa * 0.1, (kappa * 10.0).min(KAPPA_CAP));
        if (a - rbar).abs() < 1e-12 {
            break;
        }
    }
    Ok((mu, kappa, kappa >= KAPPA_CAP))
}

/// Moment estimates of the multivariate von Mises sine model: circular
/// means, then kappa1 and Lambda from the inverse of the sine product
/// matrix (Lambda with the sign of the precision map Sigma^{-1}_{kl} =
/// -lambda_{kl}).
#[derive(Debug, Clone)]
pub struct MvmMomentFit {
    pub zeta: Vec<f64>,
    pub kappa1: Vec<f64>,
    pub lambda: DMatrix<f64>,
}

pub fn fit_mvm_moment(angles: &[Vec<f64>]) -> Result<MvmMomentFit> {
    let n = angles.len();
    let k = angles.first().map(|r| r.len()).unwrap_or(0);
    if n <= k || k == 0 {
        return Err(Error::Data("multivariate von Mises moments need n > K >= 1".into()));
    }
    let mut zeta = Vec::with_capacity(k);
    for j in 0..k {
        let (c, s) = angles.iter().fold((0.0, 0.0), |(c, s), row| {
            (c + row[j].cos(), s + row[j].sin())
        });
        zeta.push((s / n as f64).atan2(c / n as f64));
    }
    let mut sbar: DMatrix<f64> = DMatrix::zeros(k, k);
    for row in angles {
        for j in 0..k {
            let sj = (row[j] - zeta[j]).sin();
            for l in j..k {
                let sl = (row[l] - zeta[l]).sin();
                sbar[(j, l)] += sj * sl;
            }
        }
    }
    for j in 0..k {
        for l in j..k {
            sbar[(j, l)] /= n as f64;
            sbar[(l, j)] = sbar[(j, l)];
        }
    }
    let inv = sbar.clone().try_inverse().ok_or_else(|| {
        // name the most collinear pair for the error message
        let mut worst = (0, 1, 0.0);
        for a in 0..k {
            for b in (a + 1)..k {
                let r = sbar[(a, b)].abs() / (sbar[(a, a)] * sbar[(b, b)]).sqrt().max(1e-300);
                if r > worst.2 {
                    worst = (a, b, r);
                }
            }
        }
        Error::Numerical(format!(
            "singular sine product matrix; marginals {} and {} are nearly collinear (|r| = {:.4})",
            worst.0 + 1,
            worst.1 + 1,
            worst.2
        ))
    })?;
    let kappa1: Vec<f64> = (0..k).map(|j| inv[(j, j)].min(KAPPA_CAP)).collect();
    let mut lambda = DMatrix::zeros(k, k);
    for j in 0..k {
        for l in 0..k {
            if j != l {
                lambda[(j, l)] = -inv[(j, l)];
            }
        }
    }
    Ok(MvmMomentFit { zeta, kappa1, lambda })
}

// ---------------------------------------------------------------------------
// Step 1: shared-axis update
// ---------------------------------------------------------------------------

/// Axis update given per-marginal latitudes and weights: minimizes
/// sum_j w_j |X_j' mu0 - nu_j 1|^2 / n over the sphere. Solved through the
/// Lagrangian root nu^2 xbar'(S - lambda I)^{-2} xbar = 1 by bisection; the
/// nu = 0 case returns the eigenvector of the smallest eigenvalue with
/// canonical sign.
pub fn update_mu0_step1(
    data: &DirectionalSample,
    nus: &[f64],
    weights: &[f64],
) -> Result<UnitVec> {
    let (p, k, n) = (data.p(), data.k(), data.n() as f64);
    if nus.len() != k || weights.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: nus.len() });
    }
    if data.n() < p {
        return Err(Error::Data(format!("axis update needs n >= p = {p}")));
    }
    let mut s_w = DMatrix::zeros(p, p);
    let mut xbar_w = DVector::zeros(p);
    for j in 0..k {
        let mut sj = DMatrix::zeros(p, p);
        let mut xj = DVector::zeros(p);
        for x in data.marginal(j) {
            sj.ger(1.0 / n, x.coords(), x.coords(), 1.0);
            xj += x.coords();
        }
        xj /= n;
        s_w += sj * weights[j];
        xbar_w += xj * (weights[j] * nus[j]);
    }
    // symmetrize against rounding in the rank updates
    let s_w = (&s_w + s_w.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s_w);
    let (d, q) = (eig.eigenvalues, eig.eigenvectors);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let d_min = d[order[0]];

    let xnorm = xbar_w.norm();
    let all_zero_nu = nus.iter().all(|v| v.abs() < 1e-12);
    if all_zero_nu || xnorm < 1e-12 || d_min < 1e-10 {
        // eigenvector branch (also the rank-deficient fallback)
        return canonical_sign(UnitVec::new(q.column(order[0]).into_owned())?);
    }

    let c = q.tr_mul(&xbar_w);
    let f = |lambda: f64| -> f64 {
        (0..p).map(|i| (c[i] / (d[i] - lambda)).powi(2)).sum::<f64>() - 1.0
    };
    let hi0 = d_min - 1e-13 * d_min.max(1.0);
    let mut lo = -(xnorm * xnorm).max(xnorm) - 1e-12;
    let mut hi = hi0;
    // push hi toward the pole until the sign is positive there
    let mut guard = 0;
    while f(hi) <= 0.0 {
        hi = 0.5 * (hi + d_min);
        guard += 1;
        if guard > 120 {
            return Err(Error::BracketFailure(
                "no sign change for the axis Lagrangian root".into(),
            ));
        }
    }
    if f(lo) >= 0.0 {
        return Err(Error::BracketFailure(
            "axis Lagrangian root not bracketed from below".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * (1.0 + mid.abs()) {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut mu = DVector::zeros(p);
    for i in 0..p {
        mu += q.column(i) * (c[i] / (d[i] - lambda));
    }
    UnitVec::new(mu)
}

fn canonical_sign(u: UnitVec) -> Result<UnitVec> {
    for &c in u.as_slice() {
        if c.abs() > 1e-12 {
            return Ok(if c < 0.0 { u.negate() } else { u });
        }
    }
    Ok(u)
}

/// Initial circle for the iterative fits: the axis minimizing the pooled
/// angular-distance variance sum_j sum_i (theta_ij - theta_j-bar)^2, the
/// classical small-circle least-squares criterion. Refined by simplex
/// descent in tangent coordinates from several geometric starting points
/// (the covariance and second-moment eigenvectors and the two +/-0.5-cone
/// axis solves), which keeps mode-concentrated arcs out of the degenerate
/// radial basin.
pub fn initial_circle_axis(data: &DirectionalSample, settings: &SimplexSettings) -> Result<UnitVec> {
    let (p, k, n) = (data.p(), data.k(), data.n() as f64);
    let objective = |mu0: &UnitVec| -> f64 {
        let mut total = 0.0;
        for j in 0..k {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for x in data.marginal(j) {
                let theta = mu0.coords().dot(x.coords()).clamp(-1.0, 1.0).acos();
                sum += theta;
                sum_sq += theta * theta;
            }
            total += sum_sq - sum * sum / n;
        }
        total
    };

    let mut candidates: Vec<UnitVec> = Vec::new();
    // covariance and second-moment smallest eigenvectors (pooled)
    let mut cov = DMatrix::zeros(p, p);
    let mut second = DMatrix::zeros(p, p);
    for j in 0..k {
        let mut xbar = DVector::zeros(p);
        for x in data.marginal(j) {
            xbar += x.coords();
            second.ger(1.0 / n, x.coords(), x.coords(), 1.0);
        }
        xbar /= n;
        for x in data.marginal(j) {
            let d = x.coords() - &xbar;
            cov.ger(1.0 / n, &d, &d, 1.0);
        }
    }
    for m in [cov, second] {
        let m = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(m);
        let mut idx = 0;
        for i in 1..p {
            if eig.eigenvalues[i] < eig.eigenvalues[idx] {
                idx = i;
            }
        }
        candidates.push(UnitVec::new(eig.eigenvectors.column(idx).into_owned())?);
    }
    // the +/- 0.5-latitude cone solves
    for nu in [0.5, -0.5] {
        if let Ok(ax) = update_mu0_step1(data, &vec![nu; k], &vec![1.0; k]) {
            candidates.push(ax);
        }
    }

    let mut best: Option<(UnitVec, f64)> = None;
    for cand in candidates {
        // refine in re-anchored tangent coordinates
        let mut anchor = cand;
        for _ in 0..8 {
            let frame = Frame::from_axis(&anchor);
            let tangent: Vec<DVector<f64>> =
                (1..p).map(|i| frame.matrix().column(i).into_owned()).collect();
            let local = anchor.clone();
            let embed = |v: &[f64]| -> UnitVec {
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-14 {
                    return local.clone();
                }
                let mut dir = DVector::zeros(p);
                for (i, t) in tangent.iter().enumerate() {
                    dir += t * (v[i] / norm);
                }
                UnitVec::new(local.coords() * norm.cos() + dir * norm.sin()).unwrap()
            };
            let res = simplex::minimize(|v| objective(&embed(v)), &vec![0.0; p - 1], settings);
            let step: f64 = res.x.iter().map(|x| x * x).sum::<f64>().sqrt();
            anchor = embed(&res.x);
            if step < 1e-8 {
                break;
            }
        }
        let val = objective(&anchor);
        if best.as_ref().map(|b| val < b.1).unwrap_or(true) {
            best = Some((anchor, val));
        }
    }
    Ok(best.expect("at least one candidate").0)
}

// ---------------------------------------------------------------------------
// Step 2: S1 marginal update
// ---------------------------------------------------------------------------

struct S1MarginalStats {
    n: f64,
    /// sum of mu0'x_i and its squares
    t1: f64,
    q: f64,
    /// sum of gamma*'x_i
    t2: f64,
    gamma_star: DVector<f64>,
}

impl S1MarginalStats {
    fn build(points: &[&UnitVec], mu0: &UnitVec) -> Result<Self> {
        let p = mu0.dim();
        let mut xbar = DVector::zeros(p);
        for x in points {
            xbar += x.coords();
        }
        xbar /= points.len() as f64;
        if xbar.norm() < 1e-12 {
            return Err(Error::Data("zero mean direction: gamma_0 undefined".into()));
        }
        let gs = project_complement(mu0, &xbar);
        let gn = gs.norm();
        if gn < 1e-12 {
            return Err(Error::Numerical(
                "mean direction parallel to the axis: gamma* undefined".into(),
            ));
        }
        let gamma_star = gs / gn;
        let (mut t1, mut t2, mut q) = (0.0, 0.0, 0.0);
        for x in points {
            let s = mu0.coords().dot(x.coords());
            t1 += s;
            q += s * s;
            t2 += gamma_star.dot(x.coords());
        }
        Ok(Self { n: points.len() as f64, t1, q, t2, gamma_star })
    }

    /// Approximate negative log-likelihood of the marginal:
    /// n log a-hat + kappa0 sum (mu0'x - cos phi)^2 - kappa1 sum x'mu1(phi).
    fn nll(&self, phi: f64, kappa0: f64, kappa1: f64, p: usize) -> f64 {
        let nu = phi.cos();
        if nu.abs() >= 1.0 - 1e-10 {
            return f64::INFINITY;
        }
        let log_a = match saddlepoint::s1_log_norm_const(kappa0, kappa1, nu, p) {
            Ok(v) => v,
            Err(_) => return f64::INFINITY,
        };
        let quad = self.q - 2.0 * nu * self.t1 + self.n * nu * nu;
        let mode = nu * self.t1 + phi.sin() * self.t2;
        self.n * log_a + kappa0 * quad - kappa1 * mode
    }
}

#[derive(Clone)]
struct Step2Out {
    mu1: UnitVec,
    kappa0: f64,
    kappa1: f64,
    nu: f64,
    nll: f64,
    saturated: bool,
}

/// Step 2 for one marginal: minimize the approximate marginal NLL over
/// (phi, log kappa0, log kappa1), warm-started from the previous iterate.
fn update_rest_step2(
    points: &[&UnitVec],
    mu0: &UnitVec,
    warm: Option<(f64, f64, f64)>,
    nu_init: f64,
    opts: &FitOptions,
    fix_kappa1_zero: bool,
    pin_great_circle: bool,
) -> Result<Step2Out> {
    let p = mu0.dim();
    let stats = S1MarginalStats::build(points, mu0)?;
    let (phi0, k0_0, k1_0) = warm.unwrap_or_else(|| {
        let s_mean = stats.t1 / stats.n;
        let s_var = (stats.q / stats.n - s_mean * s_mean).max(1e-6);
        (nu_init.clamp(-0.999, 0.999).acos(), 0.5 / s_var, 1.0)
    });
    let phi0 = if pin_great_circle { std::f64::consts::FRAC_PI_2 } else { phi0 };

    let obj = |phi: f64, ln_k0: f64, ln_k1: f64| -> f64 {
        let k0 = ln_k0.exp().min(KAPPA_CAP);
        let k1 = if fix_kappa1_zero { 0.0 } else { ln_k1.exp().min(KAPPA_CAP) };
        stats.nll(phi, k0.max(1e-8), k1, p)
    };
    let res = match (fix_kappa1_zero, pin_great_circle) {
        (false, false) => simplex::minimize(
            |x| obj(x[0], x[1], x[2]),
            &[phi0, k0_0.max(1e-6).ln(), k1_0.max(1e-6).ln()],
            &opts.simplex,
        ),
        (true, false) => {
            let r = simplex::minimize(
                |x| obj(x[0], x[1], 0.0),
                &[phi0, k0_0.max(1e-6).ln()],
                &opts.simplex,
            );
            simplex::SimplexResult { x: vec![r.x[0], r.x[1], f64::NEG_INFINITY], ..r }
        }
        (false, true) => {
            let r = simplex::minimize(
                |x| obj(phi0, x[0], x[1]),
                &[k0_0.max(1e-6).ln(), k1_0.max(1e-6).ln()],
                &opts.simplex,
            );
            simplex::SimplexResult { x: vec![phi0, r.x[0], r.x[1]], ..r }
        }
        (true, true) => {
            let r = simplex::minimize(|x| obj(phi0, x[0], 0.0), &[k0_0.max(1e-6).ln()], &opts.simplex);
            simplex::SimplexResult { x: vec![phi0, r.x[0], f64::NEG_INFINITY], ..r }
        }
    };
    let phi = res.x[0];
    let kappa0 = res.x[1].exp().min(KAPPA_CAP).max(1e-8);
    let kappa1 = if fix_kappa1_zero { 0.0 } else { res.x[2].exp().min(KAPPA_CAP) };
    let nu = phi.cos().clamp(-0.9999999, 0.9999999);
    let mu1 = UnitVec::new(mu0.coords() * phi.cos() + &stats.gamma_star * phi.sin())?;
    Ok(Step2Out {
        mu1,
        kappa0,
        kappa1,
        nu,
        nll: res.fmin,
        saturated: kappa0 >= KAPPA_CAP || kappa1 >= KAPPA_CAP,
    })
}

// ---------------------------------------------------------------------------
// S1 / iMS1 alternating fit
// ---------------------------------------------------------------------------

fn fit_first_kind(
    data: &DirectionalSample,
    opts: &FitOptions,
    fix_kappa1_zero: bool,
    restriction: &Restriction,
) -> Result<FitResult> {
    let (p, k) = (data.p(), data.k());
    if data.n() < p + 2 {
        return Err(Error::Data(format!("need n >= p + 2 = {}", p + 2)));
    }
    let points: Vec<Vec<&UnitVec>> =
        (0..k).map(|j| data.marginal(j).collect::<Vec<_>>()).collect();

    let pin_great_circle = matches!(restriction, Restriction::GreatSphere);
    if matches!(restriction, Restriction::VmfNull) {
        return fit_first_kind_vmf_null(data, &points);
    }

    // initial circle: the angular least-squares axis, with per-marginal
    // latitudes from the mean projections (or the user-supplied nu)
    let mut mu0 = match restriction {
        Restriction::FixedAxis(ax) => ax.clone(),
        _ => initial_circle_axis(data, &opts.simplex)?,
    };
    let mut warm: Vec<Option<(f64, f64, f64)>> = vec![None; k];
    let nu_init: Vec<f64> = (0..k)
        .map(|j| {
            opts.nu_init.unwrap_or_else(|| {
                let mean = points[j]
                    .iter()
                    .map(|x| mu0.coords().dot(x.coords()))
                    .sum::<f64>()
                    / data.n() as f64;
                mean.clamp(-0.99, 0.99)
            })
        })
        .collect();

    let axis_fixed = matches!(restriction, Restriction::FixedAxis(_));
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut saturated = false;
    let mut marginals: Vec<Step2Out> = Vec::new();
    let mut best: Option<(UnitVec, Vec<Step2Out>, f64)> = None;
    let mut iters = 0;
    while iters < opts.max_outer_iters {
        iters += 1;
        if !axis_fixed {
            // Step 1 with the current latitudes and concentration weights
            let (nus, weights): (Vec<f64>, Vec<f64>) = if marginals.is_empty() {
                (nu_init.clone(), vec![1.0; k])
            } else {
                (
                    marginals.iter().map(|m| m.nu).collect(),
                    marginals.iter().map(|m| m.kappa0).collect(),
                )
            };
            let nus = if pin_great_circle { vec![0.0; k] } else { nus };
            mu0 = update_mu0_step1(data, &nus, &weights)?;
        }
        let mut nll = 0.0;
        let mut next = Vec::with_capacity(k);
        for j in 0..k {
            let out = update_rest_step2(
                &points[j],
                &mu0,
                warm[j],
                nu_init[j],
                opts,
                fix_kappa1_zero,
                pin_great_circle,
            )?;
            warm[j] = Some((out.nu.acos(), out.kappa0, out.kappa1.max(1e-6)));
            nll += out.nll;
            saturated |= out.saturated;
            next.push(out);
        }
        // Step 1 optimizes the circle residuals only, so the joint
        // objective can tick up once the axis settles; stop at the first
        // real increase and keep the best iterate seen
        let prev = trace.last().copied();
        let increased =
            prev.map(|p| nll > p + opts.tol * (1.0 + p.abs())).unwrap_or(false);
        if !increased {
            marginals = next;
            trace.push(nll);
            if best.as_ref().map(|b| nll < b.2).unwrap_or(true) {
                best = Some((mu0.clone(), marginals.clone(), nll));
            }
        }
        let done = increased
            || prev
                .map(|p| (p - nll).abs() <= opts.tol * (1.0 + p.abs()))
                .unwrap_or(false);
        if done {
            converged = true;
            break;
        }
    }

    let (mu0, marginals, nll) =
        best.ok_or_else(|| Error::NonConvergence("no completed alternating iteration".into()))?;
    let params = build_first_kind_params(&mu0, &marginals, k)?;
    Ok(FitResult { params, neg_log_lik: nll, n_iters: iters, converged, trace, saturated })
}

fn build_first_kind_params(mu0: &UnitVec, marginals: &[Step2Out], k: usize) -> Result<ModelParams> {
    let margs: Vec<MarginalParams> = marginals
        .iter()
        .map(|m| MarginalParams { mu1: m.mu1.clone(), kappa0: m.kappa0, kappa1: m.kappa1 })
        .collect();
    let multi = MultiParams::new(mu0.clone(), margs)?;
    if k == 1 {
        let m = &multi.marginals[0];
        Ok(ModelParams::S1(SmallCircleParams::new(
            multi.mu0.clone(),
            m.mu1.clone(),
            m.kappa0,
            m.kappa1,
        )?))
    } else {
        Ok(ModelParams::Ims1(multi))
    }
}

/// Restricted fit for the vMF null under a first-kind alternative: exact
/// per-marginal vMF MLE (kappa0 = 0 in the S1 parametrization).
fn fit_first_kind_vmf_null(
    data: &DirectionalSample,
    points: &[Vec<&UnitVec>],
) -> Result<FitResult> {
    let p = data.p();
    let mut margs = Vec::with_capacity(points.len());
    let mut nll = 0.0;
    let mut saturated = false;
    for pts in points {
        let (mu, kappa, sat) = fit_vmf_mle(pts)?;
        saturated |= sat;
        let sum_cos: f64 = pts.iter().map(|x| mu.coords().dot(x.coords())).sum();
        nll += -kappa * sum_cos + data.n() as f64 * vmf_log_norm_const(p, kappa)?;
        margs.push((mu, kappa));
    }
    // represent as iMS1 with kappa0 = 0; the axis is arbitrary, pick the
    // first mode's orthogonal completion to keep nu well-defined
    let frame = Frame::from_axis(&margs[0].0);
    let axis = UnitVec::new(frame.matrix().column(1).into_owned())?;
    let params = if margs.len() == 1 {
        ModelParams::Vmf(VmfParams::new(margs[0].0.clone(), margs[0].1)?)
    } else {
        ModelParams::Ims1(MultiParams::new(
            axis,
            margs
                .into_iter()
                .map(|(mu1, kappa1)| MarginalParams { mu1, kappa0: 0.0, kappa1 })
                .collect(),
        )?)
    };
    Ok(FitResult {
        params,
        neg_log_lik: nll,
        n_iters: 1,
        converged: true,
        trace: vec![nll],
        saturated,
    })
}

pub fn fit_s1(data: &DirectionalSample, opts: &FitOptions) -> Result<FitResult> {
    if data.k() != 1 {
        return Err(Error::Data("fit_s1 expects univariate data".into()));
    }
    fit_first_kind(data, opts, false, &Restriction::None)
}

pub fn fit_ims1(data: &DirectionalSample, opts: &FitOptions) -> Result<FitResult> {
    fit_first_kind(data, opts, false, &Restriction::None)
}

/// Bingham-Mardia estimates: the iMS1 fit restricted to kappa1 = 0.
pub fn fit_bm(data: &DirectionalSample, opts: &FitOptions) -> Result<FitResult> {
    let mut res = fit_first_kind(data, opts, true, &Restriction::None)?;
    if data.k() == 1 {
        // report as the BM family
        if let ModelParams::S1(c) = &res.params {
            res.params =
                ModelParams::Bm(crate::density::BmParams::new(c.mu0.clone(), c.kappa0, c.nu())?);
        }
    }
    res.params = match res.params {
        ModelParams::Bm(b) => ModelParams::Bm(b),
        other => other,
    };
    Ok(res)
}

pub fn fit_first_kind_restricted(
    data: &DirectionalSample,
    opts: &FitOptions,
    fix_kappa1_zero: bool,
    restriction: &Restriction,
) -> Result<FitResult> {
    fit_first_kind(data, opts, fix_kappa1_zero, restriction)
}

// ---------------------------------------------------------------------------
// S2 / iMS2 / MS2 profile fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecondKind {
    Ims2,
    Ms2,
}

struct InnerFit {
    nll: f64,
    /// per marginal: (nu, kappa0, mode direction in the y-space, kappa1)
    marginals: Vec<(f64, f64, UnitVec, f64)>,
    lambda: Option<DMatrix<f64>>,
    saturated: bool,
}

/// Inner profile step at a fixed axis: decompose into (s, y), solve the
/// per-marginal truncated-normal and von Mises (or joint moment) problems,
/// and return the exact joint negative log-likelihood.
fn inner_step(
    data: &DirectionalSample,
    mu0: &UnitVec,
    kind: SecondKind,
    restriction: &Restriction,
    settings: &SimplexSettings,
) -> Result<InnerFit> {
    let (p, k, n) = (data.p(), data.k(), data.n());
    let frame = Frame::from_axis(mu0);
    let vmf_null = matches!(restriction, Restriction::VmfNull);
    let great = matches!(restriction, Restriction::GreatSphere);

    // decompose every observation once
    let mut svals: Vec<Vec<f64>> = vec![Vec::with_capacity(n); k];
    let mut angles: Vec<Vec<f64>> = vec![vec![0.0; k]; n]; // p = 3 path
    let mut yvecs: Vec<Vec<UnitVec>> = vec![Vec::new(); k]; // p > 3 path
    for (i, row) in data.rows().iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let s = mu0.coords().dot(x.coords()).clamp(-1.0, 1.0);
            svals[j].push(s);
            match frame.decompose(x) {
                Ok(c) => {
                    if p == 3 {
                        let y = c.y.as_slice();
                        angles[i][j] = y[1].atan2(y[0]);
                    } else {
                        yvecs[j].push(c.y);
                    }
                }
                Err(Error::PoleDegeneracy) => {
                    // measure-zero; assign the reference direction
                    if p == 3 {
                        angles[i][j] = 0.0;
                    } else {
                        yvecs[j].push(UnitVec::basis(p - 1, 0));
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }

    let mut marginals = Vec::with_capacity(k);
    let mut nll = 0.0;
    let mut saturated = false;

    // vertical subproblems
    for j in 0..k {
        let (nu, kappa0) = if vmf_null {
            (0.0, 0.0)
        } else if great {
            (0.0, fit_trunc_normal_kappa(&svals[j], 0.0, settings)?)
        } else {
            fit_trunc_normal_mle(&svals[j], settings)?
        };
        if kappa0 == 0.0 {
            // uniform latitude factor: int (1-s^2)^{(p-3)/2} ds
            let z = 0.5 * std::f64::consts::PI.ln() + ln_gamma((p as f64 - 1.0) / 2.0)
                - ln_gamma(p as f64 / 2.0);
            if p > 3 {
                let pw = (p as f64 - 3.0) / 2.0;
                let jac: f64 =
                    svals[j].iter().map(|s| (1.0 - s * s).max(1e-300).ln()).sum::<f64>() * pw;
                nll += n as f64 * z - jac;
            } else {
                nll += n as f64 * z;
            }
        } else {
            let stats = SStats::from(&svals[j]);
            nll += stats.nll(nu, kappa0);
            saturated |= kappa0 >= KAPPA_CAP;
        }
        marginals.push((nu, kappa0));
    }

    // horizontal subproblems
    let mut out = Vec::with_capacity(k);
    let mut lambda = None;
    if matches!(restriction, Restriction::BmNull) {
        // no mode: the horizontal direction is uniform on S^{p-2}
        for j in 0..k {
            nll += n as f64 * vmf_log_norm_const(p - 1, 0.0)?;
            let (nu, kappa0) = marginals[j];
            out.push((nu, kappa0, UnitVec::basis(p - 1, 0), 0.0));
        }
        if kind == SecondKind::Ms2 {
            lambda = Some(DMatrix::zeros(k, k));
        }
        return Ok(InnerFit { nll, marginals: out, lambda, saturated });
    }
    if p == 3 {
        match kind {
            SecondKind::Ims2 => {
                for j in 0..k {
                    let col: Vec<f64> = angles.iter().map(|row| row[j]).collect();
                    let vm = fit_von_mises_mle(&col)?;
                    saturated |= vm.saturated;
                    let rcos: f64 = col.iter().map(|a| (a - vm.zeta).cos()).sum();
                    nll += -vm.kappa * rcos + n as f64 * vmf_log_norm_const(2, vm.kappa)?;
                    let (nu, kappa0) = marginals[j];
                    out.push((
                        nu,
                        kappa0,
                        UnitVec::from_slice(&[vm.zeta.cos(), vm.zeta.sin()])?,
                        vm.kappa,
                    ));
                }
            }
            SecondKind::Ms2 => {
                let fitm = fit_mvm_moment(&angles)?;
                let zeta = fitm.zeta.clone();
                // sufficient statistics at the fixed circular means
                let mut cos_sums = vec![0.0; k];
                let mut sin_prod: DMatrix<f64> = DMatrix::zeros(k, k);
                for row in &angles {
                    for j in 0..k {
                        cos_sums[j] += (row[j] - zeta[j]).cos();
                        let sj = (row[j] - zeta[j]).sin();
                        for l in (j + 1)..k {
                            sin_prod[(j, l)] += sj * (row[l] - zeta[l]).sin();
                        }
                    }
                }
                let nf = n as f64;
                let y_nll = |kap: &[f64], lam: &DMatrix<f64>, quadrature: bool| -> Result<f64> {
                    let mut kernel = 0.0;
                    for j in 0..k {
                        kernel += kap[j] * cos_sums[j];
                        for l in (j + 1)..k {
                            kernel += lam[(j, l)] * sin_prod[(j, l)];
                        }
                    }
                    let logt3 = if k == 2 && !quadrature {
                        crate::density::log_t3_pair_series(kap[0], kap[1], lam[(0, 1)])
                    } else {
                        log_t3(kap, Some(lam))?
                    };
                    Ok(-kernel + nf * logt3)
                };
                // two starting candidates: the moment estimates and the
                // independent vM point (the latter makes the MS2 profile
                // dominate the iMS2 profile pointwise, preserving nesting)
                let mut indep_kap = Vec::with_capacity(k);
                for j in 0..k {
                    let col: Vec<f64> = angles.iter().map(|row| row[j]).collect();
                    indep_kap.push(fit_von_mises_mle(&col)?.kappa);
                }
                let zeros: DMatrix<f64> = DMatrix::zeros(k, k);
                let moment_nll = y_nll(&fitm.kappa1, &fitm.lambda, false)?;
                let indep_nll = y_nll(&indep_kap, &zeros, false)?;
                let (mut best_kap, mut best_lam, mut best_nll) = if moment_nll <= indep_nll {
                    (fitm.kappa1.clone(), fitm.lambda.clone(), moment_nll)
                } else {
                    (indep_kap, zeros, indep_nll)
                };
                if k == 2 {
                    // refine (kappa1, lambda) on the exact likelihood; the
                    // series constant keeps this loop cheap
                    let obj = |x: &[f64]| -> f64 {
                        let k1v = x[0].exp().min(KAPPA_CAP);
                        let k2v = x[1].exp().min(KAPPA_CAP);
                        let l12 = x[2];
                        if l12.abs() > 2.0 * (k1v * k2v).sqrt() + 10.0 {
                            return f64::INFINITY;
                        }
                        let kernel =
                            k1v * cos_sums[0] + k2v * cos_sums[1] + l12 * sin_prod[(0, 1)];
                        -kernel
                            + nf * crate::density::log_t3_pair_series(k1v, k2v, l12)
                    };
                    let start = vec![
                        best_kap[0].max(1e-6).ln(),
                        best_kap[1].max(1e-6).ln(),
                        best_lam[(0, 1)],
                    ];
                    let res = simplex::minimize(obj, &start, settings);
                    if res.fmin < best_nll {
                        let mut lam: DMatrix<f64> = DMatrix::zeros(2, 2);
                        lam[(0, 1)] = res.x[2];
                        lam[(1, 0)] = res.x[2];
                        best_kap =
                            vec![res.x[0].exp().min(KAPPA_CAP), res.x[1].exp().min(KAPPA_CAP)];
                        best_lam = lam;
                        best_nll = res.fmin;
                    }
                }
                let _ = best_nll;
                // report with the quadrature constant so likelihoods are
                // exactly comparable across fits
                nll += y_nll(&best_kap, &best_lam, true)?;
                for j in 0..k {
                    let (nu, kappa0) = marginals[j];
                    out.push((
                        nu,
                        kappa0,
                        UnitVec::from_slice(&[zeta[j].cos(), zeta[j].sin()])?,
                        best_kap[j],
                    ));
                    saturated |= best_kap[j] >= KAPPA_CAP;
                }
                lambda = Some(best_lam);
            }
        }
    } else {
        if kind == SecondKind::Ms2 {
            return Err(Error::Unsupported("MS2 requires p = 3".into()));
        }
        for j in 0..k {
            let pts: Vec<&UnitVec> = yvecs[j].iter().collect();
            let (dir, kappa1, sat) = fit_vmf_mle(&pts)?;
            saturated |= sat;
            let sum_cos: f64 = pts.iter().map(|y| dir.coords().dot(y.coords())).sum();
            nll += -kappa1 * sum_cos + n as f64 * vmf_log_norm_const(p - 1, kappa1)?;
            let (nu, kappa0) = marginals[j];
            out.push((nu, kappa0, dir, kappa1));
        }
    }

    Ok(InnerFit { nll, marginals: out, lambda, saturated })
}

fn second_kind_params(
    mu0: &UnitVec,
    inner: &InnerFit,
    kind: SecondKind,
) -> Result<ModelParams> {
    let frame = Frame::from_axis(mu0);
    let margs: Vec<MarginalParams> = inner
        .marginals
        .iter()
        .map(|(nu, kappa0, ydir, kappa1)| {
            let nu = nu.clamp(-0.999_999_9, 0.999_999_9);
            let mu1 = frame.recompose(nu, ydir)?;
            Ok(MarginalParams { mu1, kappa0: *kappa0, kappa1: *kappa1 })
        })
        .collect::<Result<_>>()?;
    let k = margs.len();
    let multi = MultiParams::new(mu0.clone(), margs)?;
    Ok(match kind {
        SecondKind::Ims2 if k == 1 => {
            let m = &multi.marginals[0];
            ModelParams::S2(SmallCircleParams::new(
                multi.mu0.clone(),
                m.mu1.clone(),
                m.kappa0,
                m.kappa1,
            )?)
        }
        SecondKind::Ims2 => ModelParams::Ims2(multi),
        SecondKind::Ms2 => ModelParams::Ms2(Ms2Params::new(
            multi,
            inner.lambda.clone().expect("MS2 inner fit provides Lambda"),
        )?),
    })
}

pub fn fit_second_kind(
    data: &DirectionalSample,
    opts: &FitOptions,
    kind: SecondKind,
    restriction: &Restriction,
) -> Result<FitResult> {
    let p = data.p();
    if data.n() < p + 2 {
        return Err(Error::Data(format!("need n >= p + 2 = {}", p + 2)));
    }
    if kind == SecondKind::Ms2 {
        if p != 3 {
            return Err(Error::Unsupported("MS2 requires p = 3".into()));
        }
        if data.k() > 3 && !matches!(restriction, Restriction::VmfNull) {
            return Err(Error::Unsupported(
                "MS2 likelihood mode is limited to K <= 3".into(),
            ));
        }
    }

    let mut anchor = match restriction {
        Restriction::FixedAxis(ax) => ax.clone(),
        _ => update_mu0_step1(data, &vec![0.0; data.k()], &vec![1.0; data.k()])?,
    };
    let axis_fixed = matches!(restriction, Restriction::FixedAxis(_));

    let mut trace = Vec::new();
    let mut converged = axis_fixed;
    let mut rounds = 0;
    if !axis_fixed {
        // outer profile descent in tangent coordinates, re-anchored per round
        for round in 0..opts.max_outer_iters {
            rounds = round + 1;
            let frame = Frame::from_axis(&anchor);
            let tangent: Vec<DVector<f64>> =
                (1..p).map(|i| frame.matrix().column(i).into_owned()).collect();
            let anchor_local = anchor.clone();
            let embed = |v: &[f64]| -> UnitVec {
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-14 {
                    return anchor_local.clone();
                }
                let mut dir = DVector::zeros(p);
                for (i, t) in tangent.iter().enumerate() {
                    dir += t * (v[i] / norm);
                }
                UnitVec::new(anchor_local.coords() * norm.cos() + dir * norm.sin())
                    .expect("exponential map stays on the sphere")
            };
            let res = simplex::minimize(
                |v| match inner_step(data, &embed(v), kind, restriction, &opts.simplex) {
                    Ok(f) => f.nll,
                    Err(_) => f64::INFINITY,
                },
                &vec![0.0; p - 1],
                &opts.simplex,
            );
            let step: f64 = res.x.iter().map(|x| x * x).sum::<f64>().sqrt();
            anchor = embed(&res.x);
            let done = trace
                .last()
                .map(|&prev: &f64| (prev - res.fmin).abs() <= opts.tol * (1.0 + prev.abs()))
                .unwrap_or(false);
            trace.push(res.fmin);
            if step < 1e-9 || done {
                converged = true;
                break;
            }
        }
    }

    let inner = inner_step(data, &anchor, kind, restriction, &opts.simplex)?;
    if trace.is_empty() {
        trace.push(inner.nll);
        rounds = 1;
    }
    let params = second_kind_params(&anchor, &inner, kind)?;
    Ok(FitResult {
        params,
        neg_log_lik: inner.nll,
        n_iters: rounds,
        converged,
        trace,
        saturated: inner.saturated,
    })
}

pub fn fit_s2(data: &DirectionalSample, opts: &FitOptions) -> Result<FitResult> {
    if data.k() != 1 {
        return Err(Error::Data("fit_s2 expects univariate data".into()));
    }
    fit_second_kind(data, opts, SecondKind::Ims2, &Restriction::None)
}

pub fn fit_ims2(data: &DirectionalSample, opts: &FitOptions) -> Result<FitResult> {
    fit_second_kind(data, opts, SecondKind::Ims2, &Restriction::None)
}

pub fn fit_ms2(data: &DirectionalSample, opts: &FitOptions) -> Result<FitResult> {
    fit_second_kind(data, opts, SecondKind::Ms2, &Restriction::None)
}

/// Exact vMF maximum likelihood on the full sphere (univariate).
pub fn fit_vmf(data: &DirectionalSample, _opts: &FitOptions) -> Result<FitResult> {
    if data.k() != 1 {
        return Err(Error::Data("fit_vmf expects univariate data".into()));
    }
    let pts: Vec<&UnitVec> = data.marginal(0).collect();
    let (mu, kappa, saturated) = fit_vmf_mle(&pts)?;
    let sum_cos: f64 = pts.iter().map(|x| mu.coords().dot(x.coords())).sum();
    let nll = -kappa * sum_cos + data.n() as f64 * vmf_log_norm_const(data.p(), kappa)?;
    Ok(FitResult {
        params: ModelParams::Vmf(VmfParams::new(mu, kappa)?),
        neg_log_lik: nll,
        n_iters: 1,
        converged: true,
        trace: vec![nll],
        saturated,
    })
}
