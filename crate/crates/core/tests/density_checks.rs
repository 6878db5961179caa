//! Density-layer checks against an independent quadrature oracle: total
//! mass, the invariance properties of the families, and the span of the S1
//! ambient mean.

mod common;

use common::{integrate_sphere, random_unit, sphere_point};
use nalgebra::DVector;
use smallsphere::density::{MarginalParams, MultiParams, SmallCircleParams, VmfParams};
use smallsphere::sample::{sample_model, GibbsConfig};
use smallsphere::sphere::Frame;
use smallsphere::{BmParams, ModelParams, RngStream, UnitVec};

fn unit(v: &[f64]) -> UnitVec {
    UnitVec::from_slice(v).unwrap()
}

fn frame_columns(mu0: &UnitVec, mu1: &UnitVec) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let f = Frame::new(mu0, mu1).unwrap();
    let m = f.matrix();
    (m.column(0).into_owned(), m.column(1).into_owned(), m.column(2).into_owned())
}

fn total_mass(params: &ModelParams, mu0: &UnitVec, mu1: &UnitVec) -> f64 {
    let (axis, u, v) = frame_columns(mu0, mu1);
    let eval = params.evaluator().unwrap();
    integrate_sphere(
        &|s, phi| {
            let x = sphere_point(&axis, &u, &v, s, phi);
            eval.log_density(std::slice::from_ref(&x)).unwrap().exp()
        },
        1e-9,
    )
}

#[test]
fn densities_integrate_to_one() {
    let mu0 = unit(&[0.1, -0.3, 0.95]);
    let t = {
        let proj = mu1_on_circle(&mu0, 0.5);
        proj
    };
    for &(k0, k1) in &[(10.0, 1.0), (100.0, 1.0), (100.0, 10.0)] {
        // exact constants: vMF, BM, S2 mass within 1e-5
        let vmf = ModelParams::Vmf(VmfParams::new(t.clone(), k1).unwrap());
        assert!((total_mass(&vmf, &mu0, &t) - 1.0).abs() < 1e-5);

        let bm = ModelParams::Bm(BmParams::new(mu0.clone(), k0, 0.5).unwrap());
        assert!((total_mass(&bm, &mu0, &t) - 1.0).abs() < 1e-5);

        let s2 = ModelParams::S2(SmallCircleParams::new(mu0.clone(), t.clone(), k0, k1).unwrap());
        assert!((total_mass(&s2, &mu0, &t) - 1.0).abs() < 1e-5);

        // S1 carries the saddle-point constant; mass within its 1.5% band
        let s1 = ModelParams::S1(SmallCircleParams::new(mu0.clone(), t.clone(), k0, k1).unwrap());
        let mass = total_mass(&s1, &mu0, &t);
        assert!((mass - 1.0).abs() < 0.02, "S1({k0},{k1}) mass {mass}");
    }
}

fn mu1_on_circle(mu0: &UnitVec, nu: f64) -> UnitVec {
    let f = Frame::from_axis(mu0);
    let y = UnitVec::from_slice(&[1.0, 0.0]).unwrap();
    f.recompose(nu, &y).unwrap()
}

#[test]
fn reflection_invariance_prop_1i() {
    // B = I - 2 U U' fixing span{mu0, mu1} leaves both densities unchanged
    let mu0 = unit(&[0.2, 0.5, 0.84]);
    let mu1 = mu1_on_circle(&mu0, 0.4);
    let frame = Frame::new(&mu0, &mu1).unwrap();
    let u = frame.matrix().column(2).into_owned();
    let reflect = |x: &UnitVec| -> UnitVec {
        let proj = u.dot(x.coords());
        UnitVec::new(x.coords() - &u * (2.0 * proj)).unwrap()
    };
    let s1 = ModelParams::S1(SmallCircleParams::new(mu0.clone(), mu1.clone(), 10.0, 1.0).unwrap());
    let s2 = ModelParams::S2(SmallCircleParams::new(mu0, mu1, 10.0, 1.0).unwrap());
    let mut rng = RngStream::new(51);
    let e1 = s1.evaluator().unwrap();
    let e2 = s2.evaluator().unwrap();
    for _ in 0..100 {
        let x = random_unit(&mut rng, 3);
        let bx = reflect(&x);
        for eval in [&e1, &e2] {
            let a = eval.log_density(std::slice::from_ref(&x)).unwrap();
            let b = eval.log_density(std::slice::from_ref(&bx)).unwrap();
            assert!((a - b).abs() < 1e-10, "reflection broke invariance: {a} vs {b}");
        }
    }
}

#[test]
fn axis_negation_invariance_prop_1iii() {
    // S1(-mu0, mu1, k0, k1) and S1(mu0, mu1, k0, k1) agree pointwise
    let mu0 = unit(&[0.3, -0.1, 0.95]);
    let mu1 = mu1_on_circle(&mu0, 0.5);
    let mut rng = RngStream::new(52);
    for make in [
        |a: UnitVec, b: UnitVec| ModelParams::S1(SmallCircleParams::new(a, b, 10.0, 1.0).unwrap()),
        |a: UnitVec, b: UnitVec| ModelParams::S2(SmallCircleParams::new(a, b, 10.0, 1.0).unwrap()),
    ] {
        let plus = make(mu0.clone(), mu1.clone()).evaluator().unwrap();
        let minus = make(mu0.negate(), mu1.clone()).evaluator().unwrap();
        for _ in 0..100 {
            let x = random_unit(&mut rng, 3);
            let a = plus.log_density(std::slice::from_ref(&x)).unwrap();
            let b = minus.log_density(std::slice::from_ref(&x)).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn s2_log_kernel_has_no_mixed_derivative() {
    // the second-kind log-kernel separates additively in (s, phi): the
    // mixed finite difference vanishes
    let mu0 = unit(&[0.0, 0.0, 1.0]);
    let mu1 = mu1_on_circle(&mu0, 0.5);
    let (axis, u, v) = frame_columns(&mu0, &mu1);
    let params = ModelParams::S2(SmallCircleParams::new(mu0, mu1, 10.0, 4.0).unwrap());
    let eval = params.evaluator().unwrap();
    let logk = |s: f64, phi: f64| -> f64 {
        let x = sphere_point(&axis, &u, &v, s, phi);
        eval.log_density(std::slice::from_ref(&x)).unwrap()
    };
    let h = 1e-4;
    for &(s, phi) in &[(0.3, 0.7), (-0.2, 2.0), (0.6, 4.5), (0.0, 0.1)] {
        let mixed = (logk(s + h, phi + h) - logk(s + h, phi - h) - logk(s - h, phi + h)
            + logk(s - h, phi - h))
            / (4.0 * h * h);
        assert!(mixed.abs() < 1e-6, "mixed derivative {mixed} at ({s},{phi})");
    }
}

#[test]
fn s1_ambient_mean_lies_in_mode_plane() {
    // Monte Carlo check of the span containment: the component of E[X]
    // orthogonal to span{mu0, mu1} is zero within 4 standard errors
    let mu0 = unit(&[0.0, 0.0, 1.0]);
    let mu1 = mu1_on_circle(&mu0, 0.5);
    let normal = {
        let f = Frame::new(&mu0, &mu1).unwrap();
        f.matrix().column(2).into_owned()
    };
    let params = ModelParams::S1(SmallCircleParams::new(mu0, mu1, 10.0, 1.0).unwrap());
    let mut rng = RngStream::new(53);
    let n = 100_000;
    let sample = sample_model(&mut rng, &params, n, &GibbsConfig::default()).unwrap();
    let vals: Vec<f64> = sample.marginal(0).map(|x| normal.dot(x.coords())).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    assert!(mean.abs() < 4.0 * se, "orthogonal mean {mean} exceeds 4 SE = {}", 4.0 * se);
}

#[test]
fn p4_densities_integrate_to_one() {
    // p = 4 constants come from the 1D Jacobian quadrature; validate the
    // mass by Monte Carlo importance check instead of 3D quadrature:
    // E_uniform[f] * area = 1
    let mu0 = UnitVec::from_slice(&[0.0, 0.0, 0.0, 1.0]).unwrap();
    let f = Frame::from_axis(&mu0);
    let y = UnitVec::from_slice(&[1.0, 0.0, 0.0]).unwrap();
    let mu1 = f.recompose(0.5, &y).unwrap();
    let mut rng = RngStream::new(54);
    for params in [
        ModelParams::S2(SmallCircleParams::new(mu0.clone(), mu1.clone(), 10.0, 1.0).unwrap()),
        ModelParams::Bm(BmParams::new(mu0.clone(), 10.0, 0.5).unwrap()),
    ] {
        let eval = params.evaluator().unwrap();
        let n = 400_000;
        let area = 2.0 * std::f64::consts::PI * std::f64::consts::PI; // S^3
        let mut acc = 0.0;
        for _ in 0..n {
            let x = random_unit(&mut rng, 4);
            acc += eval.log_density(std::slice::from_ref(&x)).unwrap().exp();
        }
        let mass = acc / n as f64 * area;
        assert!((mass - 1.0).abs() < 0.02, "{}: p=4 mass {mass}", params.kind_name());
    }
}

#[test]
fn ims2_mass_factorizes_over_marginals() {
    // joint normalizing constant equals the product of marginal constants
    let mu0 = unit(&[0.0, 0.0, 1.0]);
    let m1 = mu1_on_circle(&mu0, 0.5);
    let f = Frame::from_axis(&mu0);
    let m2 = f.recompose(-0.3, &UnitVec::from_slice(&[0.0, 1.0]).unwrap()).unwrap();
    let multi = MultiParams::new(
        mu0.clone(),
        vec![
            MarginalParams { mu1: m1.clone(), kappa0: 100.0, kappa1: 10.0 },
            MarginalParams { mu1: m2.clone(), kappa0: 10.0, kappa1: 2.0 },
        ],
    )
    .unwrap();
    let joint = ModelParams::Ims2(multi).log_norm_const().unwrap();
    let a = ModelParams::S2(SmallCircleParams::new(mu0.clone(), m1, 100.0, 10.0).unwrap())
        .log_norm_const()
        .unwrap();
    let b = ModelParams::S2(SmallCircleParams::new(mu0, m2, 10.0, 2.0).unwrap())
        .log_norm_const()
        .unwrap();
    assert!((joint - a - b).abs() < 1e-10);
}
