//! Derivative-free Nelder-Mead simplex minimization.
//!
//! Uses the dimension-adaptive coefficients of Gao & Han (2012), which hold
//! up much better than the textbook ones once the parameter count passes ten
//! or so. Non-finite objective values are treated as `+inf`.

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    /// Edge length of the initial axis-aligned simplex.
    pub initial_step: f64,
    /// Hard cap on objective evaluations.
    pub max_evals: usize,
    /// Stop once `f(worst) − f(best)` falls below this.
    pub f_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.25,
            max_evals: 1000,
            f_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    if n == 0 || opts.max_evals == 0 {
        let value = if opts.max_evals == 0 { f64::INFINITY } else { eval(x0, &mut evals) };
        return Minimum {
            x: x0.to_vec(),
            value,
            evaluations: evals,
        };
    }

    let nf = n as f64;
    let alpha = 1.0;
    let gamma = 1.0 + 2.0 / nf;
    let rho = 0.75 - 1.0 / (2.0 * nf);
    let shrink = 1.0 - 1.0 / nf;

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    for v in &simplex {
        if evals >= opts.max_evals {
            break;
        }
        values.push(eval(v, &mut evals));
    }
    if values.len() < simplex.len() {
        simplex.truncate(values.len());
        return best_of(simplex, values, evals);
    }

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if (values[n] - values[0]).abs() <= opts.f_tol {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / nf)
            .collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = toward(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            if evals >= opts.max_evals {
                simplex[n] = xr;
                values[n] = fr;
                break;
            }
            let xe = toward(alpha * gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        if evals >= opts.max_evals {
            break;
        }
        // contraction, outside if the reflection improved on the worst point
        let (xc, fc) = if fr < values[n] {
            let xc = toward(alpha * rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = toward(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            if evals >= opts.max_evals {
                break;
            }
            let v: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + shrink * (x - b))
                .collect();
            values[i] = eval(&v, &mut evals);
            simplex[i] = v;
        }
    }
    best_of(simplex, values, evals)
}

fn best_of(simplex: Vec<Vec<f64>>, values: Vec<f64>, evaluations: usize) -> Minimum {
    let (i, &value) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty simplex");
    Minimum {
        x: simplex[i].clone(),
        value,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let target = [1.0, -2.0, 0.5];
        let f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let m = nelder_mead(f, &[0.0; 3], &NelderMeadOptions { max_evals: 2000, ..Default::default() });
        for (a, b) in m.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            initial_step: 0.5,
            max_evals: 5000,
            f_tol: 1e-16,
        };
        let m = nelder_mead(f, &[-1.2, 1.0], &opts);
        assert!(m.value < 1e-8, "{}", m.value);
    }

    #[test]
    fn respects_budget() {
        let mut calls = 0;
        let m = nelder_mead(
            |x: &[f64]| {
                calls += 1;
                x.iter().map(|v| v.abs()).sum()
            },
            &[3.0; 16],
            &NelderMeadOptions { max_evals: 50, ..Default::default() },
        );
        assert!(m.evaluations <= 50);
        assert_eq!(calls, m.evaluations);
    }

    #[test]
    fn nan_is_treated_as_infinite() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 1.0).powi(2) };
        let m = nelder_mead(f, &[0.1], &NelderMeadOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-4);
    }
}
