use nalgebra::{DMatrix, DVector};
use smallsphere::fit::{fit_bm, fit_s1, FitOptions};
use smallsphere::sample::{sample_model, GibbsConfig};
use smallsphere::sim::{fit_error_degrees, ModelSpec};
use smallsphere::{RngStream, UnitVec};
use rayon::prelude::*;

fn ls_circle(data: &smallsphere::DirectionalSample) -> (UnitVec, f64) {
    let n = data.n() as f64;
    let mut xbar = DVector::zeros(3);
    for x in data.marginal(0) { xbar += x.coords(); }
    xbar /= n;
    let mut c = DMatrix::zeros(3, 3);
    for x in data.marginal(0) {
        let d = x.coords() - &xbar;
        c.ger(1.0 / n, &d, &d, 1.0);
    }
    let c = (&c + c.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(c);
    let mut idx = 0;
    for i in 1..3 { if eig.eigenvalues[i] < eig.eigenvalues[idx] { idx = i; } }
    let mu0 = UnitVec::new(eig.eigenvectors.column(idx).into_owned()).unwrap();
    let nu: f64 = data.marginal(0).map(|x| mu0.dot(x).unwrap()).sum::<f64>() / n;
    (mu0, nu)
}

fn main() {
    for (k0t, k1t, label) in [(10.0, 1.0, "(a)"), (100.0, 10.0, "(c)"), (100.0, 0.0, "(d)")] {
        let spec = ModelSpec {
            model: "s2".into(), p: 3, kappa: None,
            kappa0: Some(vec![k0t]), kappa1: Some(vec![k1t]),
            nu: Some(vec![0.5]), lambda: None, mu0: None, mu1: None,
        };
        let truth = spec.build().unwrap();
        let res: Vec<(f64, f64, f64)> = (0..100).into_par_iter().map(|rep| {
            let mut rng = RngStream::split(6000 + k1t as u64, rep);
            let data = sample_model(&mut rng, &truth, 50, &GibbsConfig::default()).unwrap();
            let (_, nu_ls) = ls_circle(&data);
            // LS-initialized S1 and BM fits
            let opts = FitOptions { nu_init: Some(nu_ls.clamp(-0.99, 0.99)), ..Default::default() };
            let s1 = fit_error_degrees(&truth, &fit_s1(&data, &opts).unwrap()).unwrap();
            let bm = fit_error_degrees(&truth, &fit_bm(&data, &opts).unwrap()).unwrap();
            // current default for reference
            let s1d = fit_error_degrees(&truth, &fit_s1(&data, &FitOptions::default()).unwrap()).unwrap();
            (s1, bm, s1d)
        }).collect();
        let m = |i: usize| {
            let v: Vec<f64> = res.iter().map(|r| [r.0, r.1, r.2][i]).collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt();
            (mean, sd)
        };
        println!("{label}: S1 ls-init {:.2} ({:.2}) | BM ls-init {:.2} ({:.2}) | S1 cur-default {:.2} ({:.2})",
            m(0).0, m(0).1, m(1).0, m(1).1, m(2).0, m(2).1);
    }
}
