//! Deterministic Nelder-Mead maximizer with restarts.

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// True when the evaluation budget ran out before the last restart converged.
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone)]
pub struct NmOptions {
    pub budget: usize,
    pub restarts: usize,
    pub initial_step: f64,
    pub x_tol: f64,
    pub f_tol: f64,
    /// Box constraint `|x_i| <= bound` (points are clamped).
    pub bound: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            budget: 2000,
            restarts: 4,
            initial_step: 0.5,
            x_tol: 1e-7,
            f_tol: 1e-10,
            bound: 10.0,
        }
    }
}

/// Maximizes `f` starting at `x0`. Non-finite values are treated as `-inf`.
/// Each restart begins from the incumbent with a step halved from the previous one.
pub fn maximize(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: &NmOptions) -> NmResult {
    let d = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for v in x.iter_mut() {
            *v = v.clamp(-opts.bound, opts.bound);
        }
    };
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut best_x = x0.to_vec();
    clamp(&mut best_x);
    if opts.budget == 0 {
        return NmResult {
            value: f64::NAN,
            x: best_x,
            evals: 0,
            budget_exhausted: true,
        };
    }
    let mut best_v = eval(&best_x, &mut evals);
    if d == 0 {
        return NmResult {
            x: best_x,
            value: best_v,
            evals,
            budget_exhausted: false,
        };
    }
    let mut step = opts.initial_step;
    let mut exhausted = false;
    for _ in 0..opts.restarts.max(1) {
        if evals >= opts.budget {
            exhausted = true;
            break;
        }
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_x.clone(), best_v)];
        for i in 0..d {
            if evals >= opts.budget {
                break;
            }
            let mut x = best_x.clone();
            x[i] += step;
            clamp(&mut x);
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }
        if simplex.len() < d + 1 {
            exhausted = true;
            break;
        }
        loop {
            simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
            let spread = simplex[0].1 - simplex[d].1;
            let size = simplex
                .iter()
                .skip(1)
                .map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if (spread.is_finite() && spread.abs() <= opts.f_tol && size <= opts.x_tol.sqrt())
                || size <= opts.x_tol
            {
                break;
            }
            if evals >= opts.budget {
                exhausted = true;
                break;
            }
            let centroid: Vec<f64> = (0..d)
                .map(|k| simplex[..d].iter().map(|(x, _)| x[k]).sum::<f64>() / d as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                let mut x: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[d].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect();
                clamp(&mut x);
                x
            };
            let xr = along(1.0);
            let vr = eval(&xr, &mut evals);
            if vr > simplex[0].1 {
                let xe = along(2.0);
                let ve = eval(&xe, &mut evals);
                simplex[d] = if ve > vr { (xe, ve) } else { (xr, vr) };
            } else if vr > simplex[d - 1].1 {
                simplex[d] = (xr, vr);
            } else {
                let (xc, vc) = if vr > simplex[d].1 {
                    let x = along(0.5);
                    let v = eval(&x, &mut evals);
                    (x, v)
                } else {
                    let x = along(-0.5);
                    let v = eval(&x, &mut evals);
                    (x, v)
                };
                if vc > simplex[d].1.max(vr) {
                    simplex[d] = (xc, vc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for s in simplex.iter_mut().skip(1) {
                        if evals >= opts.budget {
                            break;
                        }
                        let x: Vec<f64> = x0
                            .iter()
                            .zip(&s.0)
                            .map(|(a, b)| a + 0.5 * (b - a))
                            .collect();
                        let v = eval(&x, &mut evals);
                        *s = (x, v);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        if simplex[0].1 > best_v {
            best_v = simplex[0].1;
            best_x = simplex[0].0.clone();
        }
        if exhausted {
            break;
        }
        step *= 0.5;
    }
    NmResult {
        x: best_x,
        value: best_v,
        evals,
        budget_exhausted: exhausted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_peak() {
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - 4.0 * (x[1] + 0.5).powi(2);
        let r = maximize(f, &[0.0, 0.0], &NmOptions::default());
        assert!(
            (r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] + 0.5).abs() < 1e-3,
            "{:?}",
            r.x
        );
        assert!(r.evals <= 2000);
    }

    #[test]
    fn handles_kinked_minimum_objective() {
        let f = |x: &[f64]| (1.0 - (x[0] - 0.3).abs()).min(2.0 - (x[1] - x[0]).abs());
        let r = maximize(f, &[0.0, 0.0], &NmOptions::default());
        assert!(r.value > 0.999, "{r:?}");
    }

    #[test]
    fn zero_budget_returns_start() {
        let r = maximize(
            |x: &[f64]| x[0],
            &[0.25],
            &NmOptions {
                budget: 0,
                ..Default::default()
            },
        );
        assert_eq!(r.x, vec![0.25]);
        assert_eq!(r.evals, 0);
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| -(x[0].sin() - 0.5).powi(2) - x[1].powi(2);
        let a = maximize(f, &[0.1, 0.2], &NmOptions::default());
        let b = maximize(f, &[0.1, 0.2], &NmOptions::default());
        assert_eq!(a.x, b.x);
    }
}
