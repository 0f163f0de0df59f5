// SPDX-License-Identifier: Apache-2.0

//! Phonon-number distribution from blue-sideband Rabi oscillations,
//! `P_g(t) = ½(1 + Σ_n P(n) cos(Ω_c η √(n+1) t) e^{−γ(n) t})` with
//! `γ(n) = (n+1)^x γ₀`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QngError, Result};

/// Condition numbers above this reject the fit.
pub const MAX_CONDITION: f64 = 1e10;
const DEGENERATE_WEIGHT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiModel {
    /// `Ω_c`, rad/s.
    pub carrier_rabi: f64,
    pub eta: f64,
    /// `γ₀`, 1/s.
    pub gamma0: f64,
    pub x_exp: f64,
}

impl RabiModel {
    pub fn rate(&self, n: usize) -> f64 {
        self.carrier_rabi * self.eta * ((n + 1) as f64).sqrt()
    }

    pub fn decay(&self, n: usize) -> f64 {
        ((n + 1) as f64).powf(self.x_exp) * self.gamma0
    }

    /// `2P_g − 1` of Fock state `n` at time `t`.
    pub fn basis(&self, n: usize, t: f64) -> f64 {
        (self.rate(n) * t).cos() * (-self.decay(n) * t).exp()
    }

    pub fn ground_probability(&self, populations: &[f64], t: f64) -> f64 {
        0.5 * (1.0
            + populations
                .iter()
                .enumerate()
                .map(|(n, p)| p * self.basis(n, t))
                .sum::<f64>())
    }

    /// Noise-free `(t, P_g)` samples.
    pub fn synthesize(&self, populations: &[f64], times: &[f64]) -> Vec<(f64, f64)> {
        times
            .iter()
            .map(|&t| (t, self.ground_probability(populations, t)))
            .collect()
    }

    /// Period of the `n = 0` oscillation, seconds.
    pub fn period(&self) -> f64 {
        TAU / self.rate(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationFit {
    /// Renormalized `P(0..=n_max)`.
    pub populations: Vec<f64>,
    /// Sum of the raw non-negative weights before renormalization.
    pub raw_total: f64,
    pub condition_number: f64,
    pub residual_norm: f64,
    /// No oscillation information; populations are uniform.
    pub degenerate: bool,
}

/// Lawson–Hanson active-set solution of `min ‖Ax − b‖` subject to `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);
    for _ in 0..(3 * n + 30) {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else {
            return Ok(x);
        };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let sub = a.select_columns(&idx);
            let z_sub = sub
                .clone()
                .svd(true, true)
                .solve(b, 1e-14)
                .map_err(|e| QngError::Fit(e.to_string()))?;
            if z_sub.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &i) in idx.iter().enumerate() {
                    x[i] = z_sub[k];
                }
                break;
            }
            // step back to the feasible boundary
            let mut alpha = f64::INFINITY;
            for (k, &i) in idx.iter().enumerate() {
                if z_sub[k] <= 0.0 {
                    alpha = alpha.min(x[i] / (x[i] - z_sub[k]));
                }
            }
            for (k, &i) in idx.iter().enumerate() {
                x[i] += alpha * (z_sub[k] - x[i]);
                if x[i] <= 1e-15 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    Err(QngError::Fit(
        "non-negative least squares did not terminate".into(),
    ))
}

fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Non-negative least-squares fit of `P(0..=n_max)` to `(t, P_g)` samples.
pub fn fit_populations(
    signal: &[(f64, f64)],
    model: &RabiModel,
    n_max: usize,
) -> Result<PopulationFit> {
    let needed = 4 * n_max.max(1);
    if signal.len() < needed {
        return Err(QngError::Fit(format!(
            "{} samples, need at least {needed}",
            signal.len()
        )));
    }
    let (t_min, t_max) = signal
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(t, _)| {
            (lo.min(t), hi.max(t))
        });
    if t_max - t_min < 2.0 * model.period() {
        return Err(QngError::Fit(format!(
            "signal spans {:.3e} s, need two Rabi periods ({:.3e} s)",
            t_max - t_min,
            2.0 * model.period()
        )));
    }
    let a = DMatrix::from_fn(signal.len(), n_max + 1, |i, n| model.basis(n, signal[i].0));
    let b = DVector::from_iterator(signal.len(), signal.iter().map(|&(_, p)| 2.0 * p - 1.0));
    let condition = condition_number(&a);
    if !(condition <= MAX_CONDITION) {
        return Err(QngError::IllConditioned { condition });
    }
    let x = nnls(&a, &b)?;
    let residual_norm = (&a * &x - &b).norm();
    let raw_total = x.sum();
    let degenerate = raw_total < DEGENERATE_WEIGHT;
    let populations = if degenerate {
        vec![1.0 / (n_max + 1) as f64; n_max + 1]
    } else {
        x.iter().map(|v| v / raw_total).collect()
    };
    Ok(PopulationFit {
        populations,
        raw_total,
        condition_number: condition,
        residual_norm,
        degenerate,
    })
}
