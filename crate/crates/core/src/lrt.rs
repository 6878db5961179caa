//! Large-sample likelihood-ratio tests.
//!
//! Each test pits a restricted parameter space against one of the full model
//! families. The statistic W_n = -2(L0 - L1), clamped at zero, is referred
//! to a chi-square distribution whose degrees of freedom equal the
//! difference of the dimensions of the two parameter spaces.

use serde::Serialize;

use crate::data::DirectionalSample;
use crate::error::{Error, Result};
use crate::fit::{
    fit_first_kind_restricted, fit_ims1, fit_ims2, fit_ms2, fit_s1, fit_s2, fit_second_kind,
    FitOptions, FitResult, Restriction, SecondKind,
};
use crate::special::chi_square_sf;
use crate::sphere::UnitVec;

/// Alternative model family of a test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    S1,
    S2,
    Ims1,
    Ims2,
    Ms2,
}

impl ModelKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "s1" => ModelKind::S1,
            "s2" => ModelKind::S2,
            "ims1" => ModelKind::Ims1,
            "ims2" => ModelKind::Ims2,
            "ms2" => ModelKind::Ms2,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown alternative model '{other}'"
                )))
            }
        })
    }

    fn first_kind(self) -> bool {
        matches!(self, ModelKind::S1 | ModelKind::Ims1)
    }
}

/// Null hypotheses of the testing framework.
#[derive(Debug, Clone)]
pub enum Hypothesis {
    /// Lambda = 0: no horizontal dependence (MS2 alternative only).
    Association,
    /// mu0 fixed at a predetermined axis.
    Axis(UnitVec),
    /// nu = 0 for every marginal: great subspheres.
    GreatSphere,
    /// kappa0 = 0: no small-circle feature (von Mises-Fisher null; on the
    /// circle for second-kind alternatives).
    VonMisesFisher,
    /// kappa1 = 0: no unique mode (Bingham-Mardia null).
    BinghamMardia,
}

impl Hypothesis {
    pub fn name(&self) -> &'static str {
        match self {
            Hypothesis::Association => "association",
            Hypothesis::Axis(_) => "axis",
            Hypothesis::GreatSphere => "great-sphere",
            Hypothesis::VonMisesFisher => "vmf",
            Hypothesis::BinghamMardia => "bingham-mardia",
        }
    }
}

/// Dimension of the alternative family's parameter space
/// (q1 = (p-1)(K+1) + 2K + K(K-1)/2 for the MS2 alternative).
pub fn model_dimension(alt: ModelKind, p: usize, k: usize) -> usize {
    match alt {
        ModelKind::S1 | ModelKind::S2 => 2 * p,
        ModelKind::Ims1 | ModelKind::Ims2 => (p - 1) * (k + 1) + 2 * k,
        ModelKind::Ms2 => (p - 1) * (k + 1) + 2 * k + k * (k - 1) / 2,
    }
}

fn check_combination(hyp: &Hypothesis, alt: ModelKind, p: usize, k: usize) -> Result<()> {
    if matches!(alt, ModelKind::S1 | ModelKind::S2) && k != 1 {
        return Err(Error::InvalidParameter("univariate alternative needs K = 1".into()));
    }
    if alt == ModelKind::Ms2 {
        if p != 3 {
            return Err(Error::Unsupported("MS2 requires p = 3".into()));
        }
        if k < 2 {
            return Err(Error::InvalidParameter("MS2 alternative needs K >= 2".into()));
        }
    }
    if matches!(hyp, Hypothesis::Association) && alt != ModelKind::Ms2 {
        return Err(Error::Unsupported(
            "the test of association is only available under the MS2 model".into(),
        ));
    }
    Ok(())
}

/// Degrees of freedom q1 - q2 of the chi-square reference distribution.
pub fn degrees_of_freedom(hyp: &Hypothesis, alt: ModelKind, p: usize, k: usize) -> Result<u32> {
    check_combination(hyp, alt, p, k)?;
    let df = match hyp {
        Hypothesis::Association => k * (k - 1) / 2,
        Hypothesis::Axis(_) => p - 1,
        Hypothesis::GreatSphere => k,
        Hypothesis::VonMisesFisher => match alt {
            // q2 = p (one vMF on S^{p-1})
            ModelKind::S1 => p,
            // q2 = Kp (independent vMFs)
            ModelKind::Ims1 => p + k - 1,
            // vMF on the circle: q2 = (p-1) + (p-2) + 1
            ModelKind::S2 => 2,
            // per marginal: kappa0 and nu drop
            ModelKind::Ims2 | ModelKind::Ms2 => 2 * k,
        },
        Hypothesis::BinghamMardia => match alt {
            // BM keeps (mu0, nu, kappa0): each marginal loses mu1's extra
            // p-2 dimensions and kappa1
            ModelKind::S1 | ModelKind::S2 => p - 1,
            ModelKind::Ims1 | ModelKind::Ims2 => k * (p - 1),
            ModelKind::Ms2 => k * (p - 1) + k * (k - 1) / 2,
        },
    };
    Ok(df as u32)
}

/// Maximum-likelihood fit of the alternative family.
pub fn unrestricted_fit(
    alt: ModelKind,
    data: &DirectionalSample,
    opts: &FitOptions,
) -> Result<FitResult> {
    match alt {
        ModelKind::S1 => fit_s1(data, opts),
        ModelKind::S2 => fit_s2(data, opts),
        ModelKind::Ims1 => fit_ims1(data, opts),
        ModelKind::Ims2 => fit_ims2(data, opts),
        ModelKind::Ms2 => fit_ms2(data, opts),
    }
}

/// Maximum-likelihood fit over the null parameter space, by the modified
/// iterative algorithms (axis pinned: the inner problem is solved once).
pub fn restricted_fit(
    hyp: &Hypothesis,
    alt: ModelKind,
    data: &DirectionalSample,
    opts: &FitOptions,
) -> Result<FitResult> {
    check_combination(hyp, alt, data.p(), data.k())?;
    match hyp {
        Hypothesis::Association => fit_ims2(data, opts),
        Hypothesis::Axis(mu0_star) => {
            let restriction = Restriction::FixedAxis(mu0_star.clone());
            if alt.first_kind() {
                fit_first_kind_restricted(data, opts, false, &restriction)
            } else {
                let kind = if alt == ModelKind::Ms2 { SecondKind::Ms2 } else { SecondKind::Ims2 };
                fit_second_kind(data, opts, kind, &restriction)
            }
        }
        Hypothesis::GreatSphere => {
            if alt.first_kind() {
                fit_first_kind_restricted(data, opts, false, &Restriction::GreatSphere)
            } else {
                let kind = if alt == ModelKind::Ms2 { SecondKind::Ms2 } else { SecondKind::Ims2 };
                fit_second_kind(data, opts, kind, &Restriction::GreatSphere)
            }
        }
        Hypothesis::VonMisesFisher => {
            if alt.first_kind() {
                // exact vMF maximum likelihood on the full sphere
                fit_first_kind_restricted(data, opts, false, &Restriction::VmfNull)
            } else {
                let kind = if alt == ModelKind::Ms2 { SecondKind::Ms2 } else { SecondKind::Ims2 };
                fit_second_kind(data, opts, kind, &Restriction::VmfNull)
            }
        }
        Hypothesis::BinghamMardia => {
            if alt.first_kind() {
                fit_first_kind_restricted(data, opts, true, &Restriction::None)
            } else {
                let kind = if alt == ModelKind::Ms2 { SecondKind::Ms2 } else { SecondKind::Ims2 };
                fit_second_kind(data, opts, kind, &Restriction::BmNull)
            }
        }
    }
}

/// Likelihood-ratio test outcome.
#[derive(Debug, Clone)]
pub struct TestResult {
    pub hypothesis: String,
    pub alternative: ModelKind,
    pub w_n: f64,
    pub df: u32,
    pub p_value: f64,
    /// maximized log-likelihood under the null
    pub l0: f64,
    /// maximized log-likelihood under the alternative
    pub l1: f64,
    /// both fits converged; the result is flagged unreliable otherwise
    pub converged: bool,
    pub null_fit: FitResult,
    pub alt_fit: FitResult,
}

/// JSON-facing view of a test (fixed field names).
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub hypothesis: String,
    #[serde(rename = "Wn")]
    pub w_n: f64,
    pub df: u32,
    #[serde(rename = "pValue")]
    pub p_value: f64,
    #[serde(rename = "L0")]
    pub l0: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
    pub converged: bool,
}

impl TestResult {
    pub fn to_report(&self) -> TestReport {
        TestReport {
            hypothesis: self.hypothesis.clone(),
            w_n: self.w_n,
            df: self.df,
            p_value: self.p_value,
            l0: self.l0,
            l1: self.l1,
            converged: self.converged,
        }
    }
}

/// Run a likelihood-ratio test of `hyp` against the `alt` family.
pub fn lr_test(
    hyp: &Hypothesis,
    alt: ModelKind,
    data: &DirectionalSample,
    opts: &FitOptions,
) -> Result<TestResult> {
    let df = degrees_of_freedom(hyp, alt, data.p(), data.k())?;
    let null_fit = restricted_fit(hyp, alt, data, opts)?;
    let mut alt_fit = unrestricted_fit(alt, data, opts)?;
    if alt_fit.neg_log_lik > null_fit.neg_log_lik {
        // the unrestricted search landed above a feasible point; the null
        // fit's axis is feasible for the alternative, so evaluating the
        // alternative's inner problem there repairs the nesting
        if let Some(axis) = null_fit.params.axis().cloned() {
            let restriction = Restriction::FixedAxis(axis);
            let repair = if alt.first_kind() {
                fit_first_kind_restricted(data, opts, false, &restriction)
            } else {
                let kind = if alt == ModelKind::Ms2 { SecondKind::Ms2 } else { SecondKind::Ims2 };
                fit_second_kind(data, opts, kind, &restriction)
            };
            if let Ok(repair) = repair {
                if repair.neg_log_lik < alt_fit.neg_log_lik {
                    alt_fit = repair;
                }
            }
        }
    }
    let l0 = -null_fit.neg_log_lik;
    let l1 = -alt_fit.neg_log_lik;
    // finite-sample optimizer noise can push L0 marginally above L1
    let w_n = (-2.0 * (l0 - l1)).max(0.0);
    let p_value = chi_square_sf(w_n, df)?;
    Ok(TestResult {
        hypothesis: hyp.name().to_string(),
        alternative: alt,
        w_n,
        df,
        p_value,
        l0,
        l1,
        converged: null_fit.converged && alt_fit.converged,
        null_fit,
        alt_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{MarginalParams, ModelParams, MultiParams, SmallCircleParams};
    use crate::rng::RngStream;
    use crate::sample::{sample_model, GibbsConfig};

    fn unit(v: &[f64]) -> UnitVec {
        UnitVec::from_slice(v).unwrap()
    }

    #[test]
    fn df_examples() {
        // association, p = 3, K = 2
        assert_eq!(
            degrees_of_freedom(&Hypothesis::Association, ModelKind::Ms2, 3, 2).unwrap(),
            1
        );
        // q1 - q2 with q2 = dim(iMS2) for the association null
        for k in 2..=4usize {
            assert_eq!(
                degrees_of_freedom(&Hypothesis::Association, ModelKind::Ms2, 3, k).unwrap()
                    as usize,
                model_dimension(ModelKind::Ms2, 3, k) - model_dimension(ModelKind::Ims2, 3, k)
            );
        }
        // axis test: df = 2 at p = 3 (the chi^2_2 comparison)
        let axis = Hypothesis::Axis(unit(&[0.0, 1.0, 0.0]));
        assert_eq!(degrees_of_freedom(&axis, ModelKind::Ims2, 3, 2).unwrap(), 2);
        assert_eq!(degrees_of_freedom(&axis, ModelKind::S1, 3, 1).unwrap(), 2);
        // great sphere: one nu per marginal
        assert_eq!(
            degrees_of_freedom(&Hypothesis::GreatSphere, ModelKind::Ims2, 3, 3).unwrap(),
            3
        );
        // vMF null under the univariate S1 alternative: df = p
        assert_eq!(
            degrees_of_freedom(&Hypothesis::VonMisesFisher, ModelKind::S1, 3, 1).unwrap(),
            3
        );
        assert_eq!(
            degrees_of_freedom(&Hypothesis::VonMisesFisher, ModelKind::S2, 3, 1).unwrap(),
            2
        );
        // BM null under the univariate alternatives: df = p - 1
        assert_eq!(
            degrees_of_freedom(&Hypothesis::BinghamMardia, ModelKind::S1, 3, 1).unwrap(),
            2
        );
        // invalid combination
        assert!(degrees_of_freedom(&Hypothesis::Association, ModelKind::Ims2, 3, 2).is_err());
        assert!(degrees_of_freedom(&axis, ModelKind::S1, 3, 2).is_err());
    }

    fn bivariate_ims2(kappa0: f64, kappa1: f64) -> ModelParams {
        let mu0 = unit(&[0.0, 0.0, 1.0]);
        let m1 = unit(&[(0.75f64).sqrt(), 0.0, 0.5]);
        let m2 = unit(&[0.0, (1.0f64 - 0.09).sqrt(), -0.3]);
        ModelParams::Ims2(
            MultiParams::new(
                mu0,
                vec![
                    MarginalParams { mu1: m1, kappa0, kappa1 },
                    MarginalParams { mu1: m2, kappa0, kappa1 },
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn nesting_restricted_never_beats_unrestricted() {
        let truth = bivariate_ims2(100.0, 10.0);
        let mut rng = RngStream::new(41);
        let data = sample_model(&mut rng, &truth, 100, &GibbsConfig::default()).unwrap();
        let opts = FitOptions::default();
        for hyp in [
            Hypothesis::Association,
            Hypothesis::Axis(unit(&[0.0, 0.0, 1.0])),
            Hypothesis::GreatSphere,
            Hypothesis::VonMisesFisher,
            Hypothesis::BinghamMardia,
        ] {
            let t = lr_test(&hyp, ModelKind::Ms2, &data, &opts).unwrap();
            assert!(
                t.l0 <= t.l1 + 1e-6,
                "{}: L0 {} > L1 {}",
                t.hypothesis,
                t.l0,
                t.l1
            );
            assert!(t.w_n >= 0.0);
            assert!((0.0..=1.0).contains(&t.p_value));
        }
    }

    #[test]
    fn axis_test_accepts_true_axis() {
        let truth = bivariate_ims2(100.0, 10.0);
        let mut rng = RngStream::new(42);
        let data = sample_model(&mut rng, &truth, 200, &GibbsConfig::default()).unwrap();
        let hyp = Hypothesis::Axis(unit(&[0.0, 0.0, 1.0]));
        let t = lr_test(&hyp, ModelKind::Ims2, &data, &FitOptions::default()).unwrap();
        assert_eq!(t.df, 2);
        assert!(t.p_value > 0.01, "p = {} too small under the true axis", t.p_value);
        // a far-off axis is soundly rejected
        let bad = Hypothesis::Axis(unit(&[1.0, 0.0, 0.0]));
        let t = lr_test(&bad, ModelKind::Ims2, &data, &FitOptions::default()).unwrap();
        assert!(t.p_value < 1e-6, "p = {} for a wrong axis", t.p_value);
    }

    #[test]
    fn bm_restricted_close_to_s1_when_kappa1_zero() {
        // data with no mode: the BM-restricted likelihood should nearly
        // match the unrestricted S1 likelihood
        let mu0 = unit(&[0.0, 0.0, 1.0]);
        let mu1 = unit(&[(0.75f64).sqrt(), 0.0, 0.5]);
        let truth =
            ModelParams::S2(SmallCircleParams::new(mu0, mu1, 100.0, 0.0).unwrap());
        let mut rng = RngStream::new(43);
        let data = sample_model(&mut rng, &truth, 200, &GibbsConfig::default()).unwrap();
        let t = lr_test(&Hypothesis::BinghamMardia, ModelKind::S1, &data, &FitOptions::default())
            .unwrap();
        // W ~ chi^2_2 under the null; far tail would indicate a bug
        assert!(t.w_n < 15.0, "W = {}", t.w_n);
    }

    #[test]
    fn great_sphere_fit_pins_nu() {
        let mu0 = unit(&[0.0, 0.0, 1.0]);
        let mu1 = unit(&[1.0, 0.0, 0.0]); // nu = 0: great circle
        let truth = ModelParams::S2(SmallCircleParams::new(mu0.clone(), mu1, 100.0, 5.0).unwrap());
        let mut rng = RngStream::new(44);
        let data = sample_model(&mut rng, &truth, 200, &GibbsConfig::default()).unwrap();
        let fit = restricted_fit(
            &Hypothesis::GreatSphere,
            ModelKind::S2,
            &data,
            &FitOptions::default(),
        )
        .unwrap();
        let nus = fit.params.nus().unwrap();
        assert!(nus.iter().all(|v| v.abs() < 1e-12), "nu not pinned: {nus:?}");
        let axis = fit.params.axis().unwrap();
        let align = axis.dot(&mu0).unwrap().abs();
        assert!(align > 0.999, "axis alignment {align}");
    }
}
