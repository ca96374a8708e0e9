//! Derivative-free Nelder-Mead simplex maximizer.

/// Options for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when the simplex function spread falls below this.
    pub f_tol: f64,
    /// Initial simplex edge length per coordinate.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_iter: 400, f_tol: 1e-8, initial_step: 0.5 }
    }
}

/// Maximizes `f` from `x0`, returning `(argmax, max)`. Deterministic.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: NelderMeadOptions) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let neg = |x: &[f64]| -f(x);
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|v| neg(v)).collect();

    for _ in 0..opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
        let reorder: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revals: Vec<f64> = order.iter().map(|&i| fvals[i]).collect();
        simplex = reorder;
        fvals = revals;

        if (fvals[n] - fvals[0]).abs() < opts.f_tol {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|v| v[d]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<f64> =
            (0..n).map(|d| centroid[d] + alpha * (centroid[d] - worst[d])).collect();
        let fr = neg(&reflect);

        if fr < fvals[0] {
            let expand: Vec<f64> =
                (0..n).map(|d| centroid[d] + gamma * (reflect[d] - centroid[d])).collect();
            let fe = neg(&expand);
            if fe < fr {
                simplex[n] = expand;
                fvals[n] = fe;
            } else {
                simplex[n] = reflect;
                fvals[n] = fr;
            }
        } else if fr < fvals[n - 1] {
            simplex[n] = reflect;
            fvals[n] = fr;
        } else {
            let contract: Vec<f64> =
                (0..n).map(|d| centroid[d] + rho * (worst[d] - centroid[d])).collect();
            let fc = neg(&contract);
            if fc < fvals[n] {
                simplex[n] = contract;
                fvals[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    for (d, s) in simplex[i].iter_mut().enumerate() {
                        *s = best[d] + sigma * (*s - best[d]);
                    }
                    fvals[i] = neg(&simplex[i]);
                }
            }
        }
    }

    let best = fvals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    (simplex[best].clone(), -fvals[best])
}
