//! Nelder-Mead simplex descent for the low-dimensional inner problems of the
//! estimation algorithms.

/// Optimizer settings; defaults match the estimation configuration
/// (initial step 0.1, shrink 0.5, at most 2000 evaluations).
#[derive(Debug, Clone, Copy)]
pub struct SimplexSettings {
    pub init_step: f64,
    pub shrink: f64,
    pub max_evals: usize,
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        Self { init_step: 0.1, shrink: 0.5, max_evals: 2000, f_tol: 1e-10, x_tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fmin: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0`. Coefficients: reflection 1, expansion 2,
/// contraction 1/2, shrink from the settings.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    settings: &SimplexSettings,
) -> SimplexResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fx0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += settings.init_step;
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    let mut converged = false;
    while evals < settings.max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = (worst - best).abs();
        let xspread = (0..n)
            .map(|i| {
                simplex
                    .iter()
                    .map(|(x, _)| x[i])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            })
            .map(|(lo, hi)| hi - lo)
            .fold(0.0f64, f64::max);
        if spread <= settings.f_tol * (1.0 + best.abs()) && xspread <= settings.x_tol {
            converged = true;
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for (x, _) in simplex.iter().take(n) {
            for i in 0..n {
                centroid[i] += x[i] / n as f64;
            }
        }
        let xw = simplex[n].0.clone();
        let reflect: Vec<f64> = (0..n).map(|i| 2.0 * centroid[i] - xw[i]).collect();
        let fr = eval(&reflect, &mut evals);

        if fr < simplex[0].1 {
            let expand: Vec<f64> = (0..n).map(|i| 3.0 * centroid[i] - 2.0 * xw[i]).collect();
            let fe = eval(&expand, &mut evals);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract: Vec<f64> = if fr < simplex[n].1 {
                (0..n).map(|i| centroid[i] + 0.5 * (reflect[i] - centroid[i])).collect()
            } else {
                (0..n).map(|i| centroid[i] + 0.5 * (xw[i] - centroid[i])).collect()
            };
            let fc = eval(&contract, &mut evals);
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contract, fc);
            } else {
                // shrink toward the best vertex
                let x0 = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for i in 0..n {
                        v.0[i] = x0[i] + settings.shrink * (v.0[i] - x0[i]);
                    }
                    v.1 = eval(&v.0, &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    SimplexResult { x: simplex[0].0.clone(), fmin: simplex[0].1, evals, converged }
}
