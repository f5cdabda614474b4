//! Nelder-Mead downhill simplex and its subspace-cycling (subplex) variant.
//! Both are deterministic given the starting point and options.

/// Termination and budget settings.
#[derive(Debug, Clone)]
pub struct NmOptions {
    /// Stop when the cost spread over the simplex falls below this.
    pub ftol: f64,
    /// Stop when the simplex diameter (inf-norm around the best vertex)
    /// falls below this.
    pub xtol: f64,
    /// Total cost-evaluation budget.
    pub max_evals: usize,
    /// Per-dimension initial simplex steps. A single entry is broadcast.
    pub init_step: Vec<f64>,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions { ftol: 1e-6, xtol: 1e-6, max_evals: 20_000, init_step: vec![0.1] }
    }
}

impl NmOptions {
    pub fn with_steps(mut self, steps: Vec<f64>) -> Self {
        self.init_step = steps;
        self
    }

    fn step_for(&self, dim: usize) -> f64 {
        if self.init_step.len() == 1 {
            self.init_step[0]
        } else {
            self.init_step[dim]
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    /// False when the evaluation budget ran out first.
    pub converged: bool,
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

/// Classic Nelder-Mead (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2) from `x0`, with the initial simplex spanned by the
/// per-dimension steps.
pub fn nelder_mead<F>(mut cost: F, x0: &[f64], opts: &NmOptions) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n >= 1, "need at least one dimension");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        cost(x)
    };

    let mut simplex: Vec<Vertex> = Vec::with_capacity(n + 1);
    simplex.push(Vertex { x: x0.to_vec(), f: eval(x0, &mut evals) });
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.step_for(i);
        let f = eval(&x, &mut evals);
        simplex.push(Vertex { x, f });
    }

    loop {
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
        let spread = simplex[n].f - simplex[0].f;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.x.iter().zip(&simplex[0].x).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if spread <= opts.ftol && diameter <= opts.xtol {
            return NmResult { x: simplex[0].x.clone(), fx: simplex[0].f, evals, converged: true };
        }
        if evals >= opts.max_evals {
            return NmResult { x: simplex[0].x.clone(), fx: simplex[0].f, evals, converged: false };
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(&v.x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].f;
        let second_worst = simplex[n - 1].f;
        let best = simplex[0].f;

        let point_at = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].x)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = point_at(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < best {
            let xe = point_at(2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = Vertex { x: xe, f: fe };
            } else {
                simplex[n] = Vertex { x: xr, f: fr };
            }
        } else if fr < second_worst {
            simplex[n] = Vertex { x: xr, f: fr };
        } else {
            let (xc, fc) = if fr < worst {
                let xc = point_at(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = point_at(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < worst.min(fr) {
                simplex[n] = Vertex { x: xc, f: fc };
            } else {
                // shrink toward the best vertex
                let x_best = simplex[0].x.clone();
                for v in simplex.iter_mut().skip(1) {
                    for (xi, bi) in v.x.iter_mut().zip(&x_best) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    v.f = eval(&v.x.clone(), &mut evals);
                }
            }
        }
    }
}

/// Subplex: Nelder-Mead applied cyclically to subspaces of dimension at most
/// `subspace_dim`, restarting each sweep from the current best point with
/// step sizes adapted to the progress of the previous sweep.
pub fn subplex<F>(mut cost: F, x0: &[f64], opts: &NmOptions, subspace_dim: usize) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(subspace_dim >= 1);
    if n <= subspace_dim {
        return nelder_mead(cost, x0, opts);
    }

    let mut x = x0.to_vec();
    let mut fx = cost(&x);
    let mut evals = 1usize;
    let mut steps: Vec<f64> = (0..n).map(|i| opts.step_for(i)).collect();

    let chunks: Vec<(usize, usize)> = {
        let mut v = Vec::new();
        let mut start = 0;
        while start < n {
            let end = (start + subspace_dim).min(n);
            v.push((start, end));
            start = end;
        }
        v
    };

    loop {
        let x_prev = x.clone();
        let f_prev = fx;
        for &(lo, hi) in &chunks {
            if evals >= opts.max_evals {
                return NmResult { x, fx, evals, converged: false };
            }
            let sub_dim = hi - lo;
            // enough budget for a few dozen moves per coordinate, within the
            // remaining global budget
            let sub_budget = (60 * sub_dim).min(opts.max_evals - evals);
            if sub_budget < sub_dim + 2 {
                return NmResult { x, fx, evals, converged: false };
            }
            let sub_opts = NmOptions {
                ftol: opts.ftol,
                xtol: opts.xtol,
                max_evals: sub_budget,
                init_step: steps[lo..hi].to_vec(),
            };
            let x_outer = x.clone();
            let sub_cost = |sub: &[f64]| {
                let mut full = x_outer.clone();
                full[lo..hi].copy_from_slice(sub);
                cost(&full)
            };
            let r = nelder_mead(sub_cost, &x[lo..hi], &sub_opts);
            evals += r.evals;
            if r.fx < fx {
                fx = r.fx;
                x[lo..hi].copy_from_slice(&r.x);
            }
        }

        let max_move = x.iter().zip(&x_prev).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        if f_prev - fx <= opts.ftol && max_move <= opts.xtol {
            return NmResult { x, fx, evals, converged: true };
        }
        if evals >= opts.max_evals {
            return NmResult { x, fx, evals, converged: false };
        }
        // adapt step sizes to the observed progress, never letting them
        // collapse faster than a quarter per sweep or grow more than double
        for (s, (a, b)) in steps.iter_mut().zip(x.iter().zip(&x_prev)) {
            let moved = (a - b).abs();
            *s = moved.max(*s * 0.25).min(*s * 2.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn quadratic_1d() {
        let r = nelder_mead(|x| (x[0] - 3.0) * (x[0] - 3.0), &[0.0], &NmOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 3.0).abs() < 1e-3);
        assert!(r.fx < 1e-6);
    }

    #[test]
    fn rosenbrock_2d() {
        let opts = NmOptions { ftol: 1e-12, xtol: 1e-8, ..Default::default() };
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts);
        assert!(r.converged, "did not converge in {} evals", r.evals);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn subplex_rosenbrock_full_space() {
        // n <= subspace dim falls back to plain NM
        let opts = NmOptions { ftol: 1e-12, xtol: 1e-8, ..Default::default() };
        let r = subplex(rosenbrock, &[-1.2, 1.0], &opts, 5);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn subplex_beats_nm_on_separable_10d() {
        let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let x0 = vec![2.0; 10];
        let opts = NmOptions { ftol: 1e-14, xtol: 1e-9, max_evals: 40_000, init_step: vec![0.5] };
        let mut evals_to_target = |use_subplex: bool| -> usize {
            let mut count = 0usize;
            let mut hit = usize::MAX;
            {
                let counted = |x: &[f64]| {
                    count += 1;
                    let f = sphere(x);
                    if f < 1e-8 && hit == usize::MAX {
                        hit = count;
                    }
                    f
                };
                if use_subplex {
                    subplex(counted, &x0, &opts, 3);
                } else {
                    nelder_mead(counted, &x0, &opts);
                }
            }
            hit
        };
        let sub = evals_to_target(true);
        let plain = evals_to_target(false);
        assert!(
            sub < plain,
            "subplex should reach 1e-8 in fewer evaluations: {sub} vs {plain}"
        );
    }

    #[test]
    fn budget_exhaustion_flags_unconverged() {
        let opts = NmOptions { max_evals: 30, ..Default::default() };
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts);
        assert!(!r.converged);
        assert!(r.evals <= 35);
        assert!(r.fx <= rosenbrock(&[-1.2, 1.0]));
    }

    #[test]
    fn deterministic() {
        let run = || {
            let r = subplex(
                |x| x.iter().enumerate().map(|(i, v)| (v - i as f64).powi(2)).sum::<f64>(),
                &[0.0; 7],
                &NmOptions::default(),
                3,
            );
            (r.x, r.fx, r.evals)
        };
        assert_eq!(run(), run());
    }
}
