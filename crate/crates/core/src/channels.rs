// SPDX-License-Identifier: Apache-2.0

//! Phase-diffusion and trap-heating channels, and the dephasing depth
//! `D = (2/(m−n)²) ln(C/C^thr)`.
//!
//! Matrices on a spin⊗oscillator space use the layout `level·dim + k`; the
//! channels act on the motional index only.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QngError, Result};
use crate::fock::{coherence_quantifier, DensityMatrix, FockPair, PureState};
use crate::thresholds::{ThresholdKind, ThresholdStore};

/// Largest time step of the heating integrator, seconds.
pub const MAX_HEATING_STEP: f64 = 10e-6;
const STEP_AGREEMENT: f64 = 1e-8;
const TAIL_LIMIT: f64 = 1e-6;
/// Coherences computed from states may overshoot 1 by rounding.
pub(crate) const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingParams {
    /// Accumulated phase variance `Γ`.
    pub gamma: f64,
}

impl DephasingParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(QngError::OutOfRange(format!(
                "dephasing Γ = {gamma} must be ≥ 0"
            )));
        }
        Ok(Self { gamma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingParams {
    /// Phonons per second.
    pub rate: f64,
    /// Seconds.
    pub duration: f64,
}

impl HeatingParams {
    pub fn new(rate: f64, duration: f64) -> Result<Self> {
        if !(rate >= 0.0) || !(duration >= 0.0) || !rate.is_finite() || !duration.is_finite() {
            return Err(QngError::OutOfRange(format!(
                "heating rate {rate} and duration {duration} must be finite and ≥ 0"
            )));
        }
        Ok(Self { rate, duration })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthResult {
    pub pair: FockPair,
    pub depth: f64,
    pub threshold_kind: ThresholdKind,
    pub measured: f64,
    pub threshold: f64,
    /// `depth ≥ 0`.
    pub certified: bool,
}

/// Multiplies `⟨j|ρ|k⟩` by `exp(−Γ(j−k)²/2)`.
pub fn dephase(rho: &DensityMatrix, p: DephasingParams) -> DensityMatrix {
    let dim = rho.dim();
    DensityMatrix::from_matrix_unchecked(dephase_matrix(rho.matrix(), 1, dim, p))
}

/// [`dephase`] on a matrix over `levels` electronic levels times `dim` Fock levels.
pub fn dephase_matrix(
    m: &DMatrix<Complex64>,
    levels: usize,
    dim: usize,
    p: DephasingParams,
) -> DMatrix<Complex64> {
    assert_eq!(m.nrows(), levels * dim);
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        let q = (r % dim) as f64 - (c % dim) as f64;
        m[(r, c)] * (-p.gamma * q * q / 2.0).exp()
    })
}

/// Transfer matrices of the heating generator along each diagonal of the
/// density matrix.
///
/// The reservoir has jump operators `√κ a` and `√κ a†`, giving
/// `d⟨n⟩/dt = κ`. With truncated `a`, the anticommutator term
/// `κ(a†a + aa†)` is diagonal, so the generator maps the diagonal
/// `ρ_{j,j+q}` onto itself through a tridiagonal matrix.
struct HeatingPropagator {
    dim: usize,
    by_offset: Vec<DMatrix<f64>>,
}

impl HeatingPropagator {
    fn generator(dim: usize, q: usize, kappa: f64) -> DMatrix<f64> {
        let len = dim - q;
        let k = |n: usize| kappa * (n as f64 + if n + 1 < dim { n as f64 + 1.0 } else { 0.0 });
        let mut l = DMatrix::zeros(len, len);
        for i in 0..len {
            let (j, kk) = (i, i + q);
            l[(i, i)] = -0.5 * (k(j) + k(kk));
            if i + 1 < len {
                l[(i, i + 1)] = kappa * (((j + 1) * (kk + 1)) as f64).sqrt();
            }
            if i > 0 {
                l[(i, i - 1)] = kappa * ((j * kk) as f64).sqrt();
            }
        }
        l
    }

    /// `steps` compositions of the exact step map for `duration / steps`.
    fn new(dim: usize, kappa: f64, duration: f64, steps: usize) -> Self {
        let dt = duration / steps as f64;
        let by_offset = (0..dim)
            .into_par_iter()
            .map(|q| {
                let step = (Self::generator(dim, q, kappa) * dt).exp();
                matrix_power(step, steps)
            })
            .collect();
        Self { dim, by_offset }
    }

    fn apply(&self, m: &DMatrix<Complex64>, levels: usize) -> DMatrix<Complex64> {
        let dim = self.dim;
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for la in 0..levels {
            for lb in 0..levels {
                for q in 0..dim {
                    let p = &self.by_offset[q];
                    let len = dim - q;
                    // upper diagonal ρ_{i,i+q} and, for q > 0, lower ρ_{i+q,i}
                    for upper in [true, false] {
                        if !upper && q == 0 {
                            continue;
                        }
                        let idx = |i: usize| {
                            if upper {
                                (la * dim + i, lb * dim + i + q)
                            } else {
                                (la * dim + i + q, lb * dim + i)
                            }
                        };
                        for i in 0..len {
                            let mut acc = Complex64::new(0.0, 0.0);
                            for j in 0..len {
                                let w = p[(i, j)];
                                if w != 0.0 {
                                    acc += m[idx(j)] * w;
                                }
                            }
                            out[idx(i)] = acc;
                        }
                    }
                }
            }
        }
        out
    }
}

fn matrix_power(mut base: DMatrix<f64>, mut e: usize) -> DMatrix<f64> {
    let mut acc = DMatrix::identity(base.nrows(), base.ncols());
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Population in the top Fock levels of a `levels × dim` matrix.
fn tail_population(m: &DMatrix<Complex64>, levels: usize, dim: usize) -> f64 {
    let guard = (dim / 4).clamp(1, 8);
    (0..levels)
        .flat_map(|l| (dim - guard..dim).map(move |k| l * dim + k))
        .map(|i| m[(i, i)].re)
        .sum()
}

/// [`thermalize`] on a matrix over `levels` electronic levels times `dim` Fock levels.
pub fn thermalize_matrix(
    m: &DMatrix<Complex64>,
    levels: usize,
    dim: usize,
    h: HeatingParams,
) -> Result<DMatrix<Complex64>> {
    assert_eq!(m.nrows(), levels * dim);
    if h.rate == 0.0 || h.duration == 0.0 {
        return Ok(m.clone());
    }
    if h.rate * h.duration > dim as f64 / 4.0 {
        return Err(QngError::TruncationRisk(format!(
            "{:.3} added phonons is not small against dimension {dim}",
            h.rate * h.duration
        )));
    }
    let mut steps = (h.duration / MAX_HEATING_STEP).ceil().max(1.0) as usize;
    let mut current = HeatingPropagator::new(dim, h.rate, h.duration, steps).apply(m, levels);
    loop {
        steps *= 2;
        let refined = HeatingPropagator::new(dim, h.rate, h.duration, steps).apply(m, levels);
        let change = max_abs_diff(&current, &refined);
        current = refined;
        if change < STEP_AGREEMENT {
            break;
        }
        if steps > 1 << 24 {
            return Err(QngError::TruncationRisk(format!(
                "heating step refinement stalled at change {change:.3e}"
            )));
        }
    }
    let tail = tail_population(&current, levels, dim);
    if tail > TAIL_LIMIT {
        return Err(QngError::TruncationRisk(format!(
            "population {tail:.3e} reached the top Fock levels of dimension {dim}"
        )));
    }
    // restore exact Hermiticity
    let herm = (&current + current.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(herm)
}

/// Infinite-temperature amplitude reservoir with `d⟨n⟩/dt = rate`.
pub fn thermalize(rho: &DensityMatrix, h: HeatingParams) -> Result<DensityMatrix> {
    let dim = rho.dim();
    Ok(DensityMatrix::from_matrix_unchecked(thermalize_matrix(
        rho.matrix(),
        1,
        dim,
        h,
    )?))
}

/// `(2/(m−n)²) ln(measured/threshold)`.
pub fn depth_from_threshold(measured: f64, pair: FockPair, threshold: f64) -> f64 {
    let d = pair.delta() as f64;
    2.0 / (d * d) * (measured / threshold).ln()
}

/// Dephasing depth against the threshold of `kind`, from the process-wide store.
pub fn depth(measured: f64, pair: FockPair, kind: ThresholdKind) -> Result<DepthResult> {
    depth_with(ThresholdStore::global(), measured, pair, kind)
}

pub fn depth_with(
    store: &ThresholdStore,
    measured: f64,
    pair: FockPair,
    kind: ThresholdKind,
) -> Result<DepthResult> {
    if !(measured > 0.0 && measured <= 1.0 + ROUNDOFF) {
        return Err(QngError::OutOfRange(format!(
            "measured coherence {measured} outside (0, 1]"
        )));
    }
    let measured = measured.min(1.0);
    let threshold = store.value(kind, pair)?;
    let depth = depth_from_threshold(measured, pair, threshold);
    Ok(DepthResult {
        pair,
        depth,
        threshold_kind: kind,
        measured,
        threshold,
        certified: depth >= 0.0,
    })
}

/// Fock dimension used for the ideal `(|m⟩+|n⟩)/√2` state in heating curves.
pub fn curve_dimension(pair: FockPair) -> usize {
    pair.n() + 24
}

/// Coherence of the heated ideal state at each time.
pub fn thermal_coherence_curve(
    pair: FockPair,
    h_rate: f64,
    times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(QngError::OutOfRange(
            "times must be sorted ascending".into(),
        ));
    }
    let rho = PureState::balanced(pair, 0.0, curve_dimension(pair))?.to_density();
    times
        .par_iter()
        .map(|&t| {
            let heated = thermalize(&rho, HeatingParams::new(h_rate, t)?)?;
            Ok((t, coherence_quantifier(&heated, pair)))
        })
        .collect()
}

/// Upper limit on the depth reachable without dephasing: heat the ideal
/// state for each `t` and take the depth of its coherence.
pub fn thermal_depth_limit(
    pair: FockPair,
    h_rate: f64,
    times: &[f64],
    kind: ThresholdKind,
) -> Result<Vec<(f64, f64)>> {
    thermal_depth_limit_with(ThresholdStore::global(), pair, h_rate, times, kind)
}

pub fn thermal_depth_limit_with(
    store: &ThresholdStore,
    pair: FockPair,
    h_rate: f64,
    times: &[f64],
    kind: ThresholdKind,
) -> Result<Vec<(f64, f64)>> {
    let threshold = store.value(kind, pair)?;
    let curve = thermal_coherence_curve(pair, h_rate, times)?;
    Ok(curve
        .into_iter()
        .map(|(t, c)| (t, depth_from_threshold(c, pair, threshold)))
        .collect())
}
