// SPDX-License-Identifier: Apache-2.0

//! Derivative-free bounded maximization.
//!
//! A coarse grid over the box seeds a bounded Nelder-Mead refinement from the
//! best `n_starts` grid points. Points are projected onto the box, so the
//! returned argmax is always feasible.

mod montecarlo;

pub use montecarlo::{mc_verify, mc_verify_with, McReport, MARGIN_BUCKETS, VIOLATION_SLACK};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QngError, Result};

pub const DEFAULT_GRID_DENSITY: usize = 12;
pub const DEFAULT_STARTS: usize = 16;
pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub bounds: Vec<(f64, f64)>,
    pub grid_density: usize,
    pub n_starts: usize,
    pub tol: f64,
}

impl SearchSpec {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Self {
            bounds,
            grid_density: DEFAULT_GRID_DENSITY,
            n_starts: DEFAULT_STARTS,
            tol: DEFAULT_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() {
            return Err(QngError::InvalidSearch("no search axes".into()));
        }
        if let Some((lo, hi)) = self
            .bounds
            .iter()
            .find(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(QngError::InvalidSearch(format!(
                "axis bounds [{lo}, {hi}] are not an interval"
            )));
        }
        if self.n_starts < 8 {
            return Err(QngError::InvalidSearch(format!(
                "n_starts = {} < 8",
                self.n_starts
            )));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-6) {
            return Err(QngError::InvalidSearch(format!(
                "tol = {} must lie in (0, 1e-6]",
                self.tol
            )));
        }
        if self.grid_density < 2 {
            return Err(QngError::InvalidSearch(
                "grid density must be at least 2".into(),
            ));
        }
        Ok(())
    }

    fn project(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(&self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }

    /// Whether any coordinate of `x` sits within `eps·width` of its upper bound.
    pub fn upper_bound_hits(&self, x: &[f64], eps: f64) -> Vec<bool> {
        x.iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| hi - v <= eps * (hi - lo))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub seed: Vec<f64>,
    pub seed_value: f64,
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl StartOutcome {
    fn failed(&self) -> bool {
        !self.value.is_finite() || (!self.converged && self.value <= self.seed_value)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub grid_points: usize,
    pub evaluations: usize,
    pub starts: Vec<StartOutcome>,
    /// Best two starts agree within `tol`.
    pub converged: bool,
}

impl Trace {
    pub fn best_per_start(&self) -> Vec<f64> {
        self.starts.iter().map(|s| s.value).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub argmax: Vec<f64>,
    pub value: f64,
    pub trace: Trace,
}

fn grid_points(spec: &SearchSpec) -> Vec<Vec<f64>> {
    let g = spec.grid_density;
    let dim = spec.bounds.len();
    let total = g.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            spec.bounds
                .iter()
                .map(|&(lo, hi)| {
                    let i = idx % g;
                    idx /= g;
                    lo + (hi - lo) * i as f64 / (g - 1) as f64
                })
                .collect()
        })
        .collect()
}

/// Maximize `objective` over the box in `spec`.
pub fn maximize<F>(objective: F, spec: &SearchSpec) -> Result<Maximum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    maximize_with_seeds(objective, spec, &[])
}

/// As [`maximize`], with extra caller-provided seeds competing with the grid.
pub fn maximize_with_seeds<F>(
    objective: F,
    spec: &SearchSpec,
    extra_seeds: &[Vec<f64>],
) -> Result<Maximum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let mut candidates = grid_points(spec);
    let grid_len = candidates.len();
    for s in extra_seeds {
        if s.len() != spec.bounds.len() {
            return Err(QngError::InvalidSearch("seed dimension mismatch".into()));
        }
        let mut s = s.clone();
        spec.project(&mut s);
        candidates.push(s);
    }
    let values: Vec<f64> = candidates.par_iter().map(|x| objective(x)).collect();
    let mut order: Vec<usize> = (0..candidates.len())
        .filter(|&i| values[i].is_finite())
        .collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    // grid seeds compete with extra seeds, but every extra seed is refined too
    let mut chosen: Vec<usize> = order.iter().copied().take(spec.n_starts).collect();
    for (i, v) in values.iter().enumerate().skip(grid_len) {
        if v.is_finite() && !chosen.contains(&i) {
            chosen.push(i);
        }
    }

    let outcomes: Vec<(StartOutcome, usize)> = chosen
        .par_iter()
        .map(|&i| refine(&objective, spec, &candidates[i], values[i]))
        .collect();

    let mut trace = Trace {
        grid_points: grid_len,
        evaluations: candidates.len() + outcomes.iter().map(|(_, e)| e).sum::<usize>(),
        starts: outcomes.into_iter().map(|(o, _)| o).collect(),
        converged: false,
    };

    if trace.starts.is_empty() || trace.starts.iter().all(StartOutcome::failed) {
        return Err(QngError::NonConvergence {
            message: "no start improved on its grid seed".into(),
            trace: Box::new(trace),
        });
    }

    let mut ranked: Vec<usize> = (0..trace.starts.len())
        .filter(|&i| trace.starts[i].value.is_finite())
        .collect();
    ranked.sort_by(|&a, &b| {
        trace.starts[b]
            .value
            .total_cmp(&trace.starts[a].value)
            .then(a.cmp(&b))
    });
    let best = ranked[0];
    trace.converged =
        ranked.len() > 1 && trace.starts[best].value - trace.starts[ranked[1]].value <= spec.tol;

    if !trace.converged {
        // confirm an isolated optimum by restarting from it
        let s = &trace.starts[best];
        let (restart, evals) = refine(&objective, spec, &s.point, s.value);
        trace.evaluations += evals;
        trace.converged = (restart.value - s.value).abs() <= spec.tol;
        trace.starts.push(restart);
    }

    let best = (0..trace.starts.len())
        .filter(|&i| trace.starts[i].value.is_finite())
        .max_by(|&a, &b| {
            trace.starts[a]
                .value
                .total_cmp(&trace.starts[b].value)
                .then(b.cmp(&a))
        })
        .expect("at least one finite start");
    let argmax = trace.starts[best].point.clone();
    let value = objective(&argmax);
    Ok(Maximum {
        argmax,
        value,
        trace,
    })
}

fn refine<F>(
    objective: &F,
    spec: &SearchSpec,
    seed: &[f64],
    seed_value: f64,
) -> (StartOutcome, usize)
where
    F: Fn(&[f64]) -> f64,
{
    let mut evals = 0;
    let (mut point, mut value, mut iterations, mut converged) =
        nelder_mead(objective, spec, seed, &mut evals);
    // one restart guards against a collapsed simplex
    if value.is_finite() {
        let (p2, v2, it2, c2) = nelder_mead(objective, spec, &point, &mut evals);
        iterations += it2;
        if v2 >= value {
            point = p2;
            value = v2;
        }
        converged = converged && c2;
    }
    let outcome = StartOutcome {
        seed: seed.to_vec(),
        seed_value,
        point,
        value,
        iterations,
        converged,
    };
    (outcome, evals)
}

/// Bounded Nelder-Mead maximization with projection onto the box.
fn nelder_mead<F>(
    objective: &F,
    spec: &SearchSpec,
    x0: &[f64],
    evals: &mut usize,
) -> (Vec<f64>, f64, usize, bool)
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let max_iter = 2000 * dim;
    // minimize the negated objective
    let mut eval = |x: &[f64]| {
        *evals += 1;
        let v = objective(x);
        if v.is_finite() {
            -v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut start = x0.to_vec();
    spec.project(&mut start);
    simplex.push(start.clone());
    for (k, &(lo, hi)) in spec.bounds.iter().enumerate() {
        let step = 0.5 * (hi - lo) / (spec.grid_density - 1) as f64;
        let mut v = start.clone();
        v[k] = if v[k] + step <= hi {
            v[k] + step
        } else {
            v[k] - step
        };
        spec.project(&mut v);
        simplex.push(v);
    }
    let mut f: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();

    let mut iter = 0;
    let mut converged = false;
    while iter < max_iter {
        iter += 1;
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        f = idx.iter().map(|&i| f[i]).collect();

        let spread = (f[dim] - f[0]).abs();
        let size = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .zip(&spec.bounds)
                    .map(|((a, b), (lo, hi))| ((a - b) / (hi - lo)).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= 1e-15 * (1.0 + f[0].abs()) && size <= 1e-10 {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|v| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + t * (w - c))
                .collect();
            spec.project(&mut p);
            p
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < f[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[dim] = xe;
                f[dim] = fe;
            } else {
                simplex[dim] = xr;
                f[dim] = fr;
            }
            continue;
        }
        if fr < f[dim - 1] {
            simplex[dim] = xr;
            f[dim] = fr;
            continue;
        }
        let (xc, fc) = if fr < f[dim] {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < f[dim].min(fr) {
            simplex[dim] = xc;
            f[dim] = fc;
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].clone();
        for i in 1..=dim {
            let mut p: Vec<f64> = simplex[i]
                .iter()
                .zip(&best)
                .map(|(v, b)| b + 0.5 * (v - b))
                .collect();
            spec.project(&mut p);
            f[i] = eval(&p);
            simplex[i] = p;
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| f[a].total_cmp(&f[b]))
        .unwrap_or(0);
    (simplex[best].clone(), -f[best], iter, converged)
}
