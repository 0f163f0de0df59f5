// SPDX-License-Identifier: Apache-2.0

//! Motional Ramsey interferometer: prepare, wait under noise, close with the
//! inverse sequence and read out the fringe contrast.

mod populations;
mod pulse;

pub use populations::{fit_populations, nnls, PopulationFit, RabiModel, MAX_CONDITION};
pub use pulse::{
    apply_pulse, build_sequence, build_sequence_0n, build_sequence_mn, mapping_j, mapping_l,
    PulseKind, PulseSpec, RamseySequence, SpinOscState, CARRIER_RABI, E, G, LAMB_DICKE, SHELF,
};

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    dephase_matrix, depth_from_threshold, thermalize_matrix, DephasingParams, HeatingParams,
};
use crate::error::{QngError, Result};
use crate::fock::{thermal_populations, FockPair};
use crate::thresholds::{ThresholdKind, ThresholdStore};

const EDGE_POPULATION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub initial_thermal_nbar: f64,
    /// Phonons per second.
    pub heating_rate: f64,
    /// Phase variance `Γ` accumulated per second of delay.
    pub dephasing_rate: f64,
    /// Standard deviation of the fractional area error of each pulse.
    pub pulse_error: f64,
    /// Seconds; 0 disables the electronic-coherence penalty.
    pub electronic_coherence_time: f64,
    /// Contrast factor per Shelve/Unshelve pair.
    pub shelving_contrast: f64,
    /// Constant motional frequency offset during the delay, rad/s.
    pub motional_detuning: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            initial_thermal_nbar: 0.0,
            heating_rate: 0.0,
            dephasing_rate: 0.0,
            pulse_error: 0.0,
            electronic_coherence_time: 0.0,
            shelving_contrast: 1.0,
            motional_detuning: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("initial_thermal_nbar", self.initial_thermal_nbar),
            ("heating_rate", self.heating_rate),
            ("dephasing_rate", self.dephasing_rate),
            ("pulse_error", self.pulse_error),
            ("electronic_coherence_time", self.electronic_coherence_time),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(QngError::OutOfRange(format!(
                    "{name} = {v} must be finite and ≥ 0"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.shelving_contrast) {
            return Err(QngError::OutOfRange(format!(
                "shelving_contrast = {} outside [0, 1]",
                self.shelving_contrast
            )));
        }
        if !self.motional_detuning.is_finite() {
            return Err(QngError::OutOfRange(
                "motional_detuning must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub phase: f64,
    pub p_e: f64,
    /// `None` for exact probabilities.
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyFringe {
    pub points: Vec<FringePoint>,
    pub contrast: f64,
    pub contrast_err: f64,
    pub fit_phase_offset: f64,
    /// Fitted mean excitation.
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub contrast: f64,
    pub contrast_err: f64,
    pub phase_offset: f64,
    pub offset: f64,
}

/// Least-squares fit of `P_e(φ) = a + (C/2) cos(φ − φ₀)`, linear in
/// `(a, (C/2)cos φ₀, (C/2)sin φ₀)`. `C` is clipped to `[0, 1]`; its standard
/// error comes from the residual scatter.
pub fn fit_fringe(points: &[(f64, f64)]) -> Result<FringeFit> {
    fit_fringe_with_shots(points, None)
}

/// As [`fit_fringe`]; with a known shot count the standard error uses the
/// binomial variance `p̂(1−p̂)/shots` of each fitted point instead.
pub fn fit_fringe_with_shots(points: &[(f64, f64)], shots: Option<u64>) -> Result<FringeFit> {
    if points.len() < 3 {
        return Err(QngError::Fit(format!(
            "{} fringe points, need at least 3",
            points.len()
        )));
    }
    if shots == Some(0) {
        return Err(QngError::OutOfRange("shots must be ≥ 1".into()));
    }
    let design = |phi: f64| Vector3::new(1.0, phi.cos(), phi.sin());
    let mut xtx = Matrix3::<f64>::zeros();
    let mut xty = Vector3::<f64>::zeros();
    for &(phi, p) in points {
        let row = design(phi);
        xtx += row * row.transpose();
        xty += row * p;
    }
    let eig = xtx.symmetric_eigen().eigenvalues;
    if !(eig.min() > 1e-10 * eig.max()) {
        return Err(QngError::Fit(
            "scan phases do not resolve the fringe".into(),
        ));
    }
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| QngError::Fit("scan phases do not resolve the fringe".into()))?;
    let beta = inv * xty;
    let (a, b, c) = (beta[0], beta[1], beta[2]);
    let amp = b.hypot(c);
    let cov = match shots {
        Some(shots) => {
            // sandwich (XᵀX)⁻¹ Xᵀ Σ X (XᵀX)⁻¹ with Σ = diag(p̂(1−p̂)/shots)
            let mut meat = Matrix3::<f64>::zeros();
            for &(phi, _) in points {
                let row = design(phi);
                let p = row.dot(&beta).clamp(0.0, 1.0);
                meat += row * row.transpose() * (p * (1.0 - p) / shots as f64);
            }
            Some(inv * meat * inv)
        }
        None => {
            let dof = points.len().saturating_sub(3);
            (dof > 0).then(|| {
                let rss: f64 = points
                    .iter()
                    .map(|&(phi, p)| (p - design(phi).dot(&beta)).powi(2))
                    .sum();
                inv * (rss / dof as f64)
            })
        }
    };
    let contrast_err = match cov {
        Some(cov) if amp > 0.0 => {
            let var = (b * b * cov[(1, 1)] + c * c * cov[(2, 2)] + 2.0 * b * c * cov[(1, 2)])
                / (amp * amp);
            2.0 * var.max(0.0).sqrt()
        }
        _ => 0.0,
    };
    Ok(FringeFit {
        contrast: (2.0 * amp).min(1.0),
        contrast_err,
        phase_offset: c.atan2(b),
        offset: a,
    })
}

/// `phases` evenly spaced scan points over `[0, 2π)`.
pub fn scan_phases(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| std::f64::consts::TAU * i as f64 / count as f64)
        .collect()
}

/// Density matrix on `levels × dim` with the layout of [`SpinOscState`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOscDensity {
    pub levels: usize,
    pub dim: usize,
    pub matrix: DMatrix<Complex64>,
}

impl SpinOscDensity {
    /// `|g⟩⟨g| ⊗ ρ_thermal(n̄)`.
    pub fn thermal_ground(nbar: f64, levels: usize, dim: usize) -> Result<Self> {
        let pops = thermal_populations(nbar, dim)?;
        let mut matrix = DMatrix::zeros(levels * dim, levels * dim);
        for (k, p) in pops.iter().enumerate() {
            matrix[(G * dim + k, G * dim + k)] = Complex64::new(*p, 0.0);
        }
        Ok(Self {
            levels,
            dim,
            matrix,
        })
    }

    pub fn apply(&mut self, pulse: &PulseSpec) -> Result<()> {
        let u = pulse.unitary(self.levels, self.dim)?;
        for i in pulse.edge_indices(self.dim) {
            if self.matrix[(i, i)].re > EDGE_POPULATION {
                return Err(QngError::TruncationRisk(format!(
                    "{:?} pulse drives population at the top Fock level {}",
                    pulse.kind,
                    self.dim - 1
                )));
            }
        }
        self.matrix = &u * &self.matrix * u.adjoint();
        Ok(())
    }

    /// Population of Fock level `k`, summed over electronic levels.
    pub fn motional_population(&self, k: usize) -> f64 {
        (0..self.levels)
            .map(|l| self.matrix[(l * self.dim + k, l * self.dim + k)].re)
            .sum()
    }

    pub fn level_population(&self, level: usize) -> f64 {
        (0..self.dim)
            .map(|k| self.matrix[(level * self.dim + k, level * self.dim + k)].re)
            .sum()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

/// Options of a single interferometer run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Fock dimension; defaults to `max(m,n) + 16`.
    pub dim: Option<usize>,
    /// Binomial shots per phase; `None` reads `P_e` exactly.
    pub shots: Option<u64>,
    pub seed: u64,
}

impl RunOptions {
    fn dimension(&self, seq: &RamseySequence) -> usize {
        self.dim.unwrap_or(seq.max_fock() + 15)
    }
}

/// Pulses with their area scaled by `1 + ε`, `ε ~ N(0, pulse_error)`.
///
/// The draw depends on the seed only, so a scan over delays sees one fixed
/// set of miscalibrated pulses.
fn jittered(
    seq: &RamseySequence,
    noise: &NoiseConfig,
    seed: u64,
) -> (Vec<PulseSpec>, Vec<PulseSpec>) {
    let mut prep: Vec<PulseSpec> = seq
        .fock_preparation
        .iter()
        .chain(&seq.preparation)
        .copied()
        .collect();
    let mut analysis = seq.analysis.clone();
    if noise.pulse_error > 0.0 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let normal = Normal::new(0.0, noise.pulse_error).expect("finite pulse error");
        for p in prep.iter_mut().chain(analysis.iter_mut()) {
            p.area = (p.area * (1.0 + normal.sample(&mut rng))).max(0.0);
        }
    }
    (prep, analysis)
}

/// State after the (jittered) preparation pulses.
pub fn prepare(
    seq: &RamseySequence,
    noise: &NoiseConfig,
    opts: &RunOptions,
) -> Result<SpinOscDensity> {
    noise.validate()?;
    let levels = if seq.uses_shelf() { 3 } else { 2 };
    let mut rho =
        SpinOscDensity::thermal_ground(noise.initial_thermal_nbar, levels, opts.dimension(seq))?;
    let (prep, _) = jittered(seq, noise, opts.seed);
    for p in &prep {
        rho.apply(p)?;
    }
    Ok(rho)
}

/// Dephasing, heating and a constant frequency offset for `delay` seconds.
pub fn evolve_delay(
    rho: &SpinOscDensity,
    noise: &NoiseConfig,
    delay: f64,
) -> Result<SpinOscDensity> {
    let (levels, dim) = (rho.levels, rho.dim);
    let mut m = dephase_matrix(
        &rho.matrix,
        levels,
        dim,
        DephasingParams::new(noise.dephasing_rate * delay)?,
    );
    m = thermalize_matrix(
        &m,
        levels,
        dim,
        HeatingParams::new(noise.heating_rate, delay)?,
    )?;
    if noise.motional_detuning != 0.0 {
        let w = noise.motional_detuning * delay;
        m = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
            let q = (r % dim) as f64 - (c % dim) as f64;
            m[(r, c)] * Complex64::from_polar(1.0, -q * w)
        });
    }
    Ok(SpinOscDensity {
        levels,
        dim,
        matrix: m,
    })
}

/// Multiplicative fringe-contrast loss from electronic decoherence during
/// the pulses and from shelving.
pub fn contrast_penalty(seq: &RamseySequence, noise: &NoiseConfig) -> f64 {
    let t2 = if noise.electronic_coherence_time > 0.0 {
        (-seq.pulse_time() / noise.electronic_coherence_time).exp()
    } else {
        1.0
    };
    t2 * noise.shelving_contrast.powi(seq.shelving_pairs() as i32)
}

pub fn run_ramsey(
    seq: &RamseySequence,
    delay: f64,
    noise: &NoiseConfig,
    phases: &[f64],
    opts: &RunOptions,
) -> Result<RamseyFringe> {
    run_ramsey_indexed(seq, delay, noise, phases, opts, 0)
}

/// As [`run_ramsey`]; `delay_index` selects the shot-noise streams.
pub fn run_ramsey_indexed(
    seq: &RamseySequence,
    delay: f64,
    noise: &NoiseConfig,
    phases: &[f64],
    opts: &RunOptions,
    delay_index: usize,
) -> Result<RamseyFringe> {
    if phases.is_empty() {
        return Err(QngError::OutOfRange("no scan phases".into()));
    }
    if opts.shots == Some(0) {
        return Err(QngError::OutOfRange("shots must be ≥ 1".into()));
    }
    if !(delay >= 0.0) {
        return Err(QngError::OutOfRange(format!("delay {delay} must be ≥ 0")));
    }
    let prepared = prepare(seq, noise, opts)?;
    let waited = evolve_delay(&prepared, noise, delay)?;
    let (_, analysis) = jittered(seq, noise, opts.seed);
    let penalty = contrast_penalty(seq, noise);
    let points = phases
        .par_iter()
        .enumerate()
        .map(|(i, &phase)| {
            let mut rho = waited.clone();
            let n_pulses = analysis.len();
            for (k, p) in analysis.iter().enumerate() {
                let mut p = *p;
                if k + 1 == n_pulses {
                    p.phase = (p.phase + phase).rem_euclid(std::f64::consts::TAU);
                }
                rho.apply(&p)?;
            }
            let exact = rho.level_population(E).clamp(0.0, 1.0);
            let p_e = (0.5 + (exact - 0.5) * penalty).clamp(0.0, 1.0);
            let p_e = match opts.shots {
                None => p_e,
                Some(shots) => {
                    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
                    rng.set_stream(((delay_index as u64 + 1) << 24) | i as u64);
                    let k = Binomial::new(shots, p_e)
                        .expect("probability in [0,1]")
                        .sample(&mut rng);
                    k as f64 / shots as f64
                }
            };
            Ok(FringePoint {
                phase,
                p_e,
                shots: opts.shots,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_fringe_with_shots(
        &points.iter().map(|p| (p.phase, p.p_e)).collect::<Vec<_>>(),
        opts.shots,
    )?;
    Ok(RamseyFringe {
        points,
        contrast: fit.contrast,
        contrast_err: fit.contrast_err,
        fit_phase_offset: fit.phase_offset,
        offset: fit.offset,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub delay: f64,
    pub contrast: f64,
    pub contrast_err: f64,
    /// `None` when the contrast vanishes.
    pub depth: Option<f64>,
    pub fringe: RamseyFringe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub phases: usize,
    pub run: RunOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            phases: 16,
            run: RunOptions::default(),
        }
    }
}

pub fn decay_scan(
    pair: FockPair,
    delays: &[f64],
    noise: &NoiseConfig,
    kind: ThresholdKind,
    opts: &ScanOptions,
) -> Result<Vec<DecayPoint>> {
    decay_scan_with(ThresholdStore::global(), pair, delays, noise, kind, opts)
}

/// Fringe contrast and dephasing depth at each delay.
pub fn decay_scan_with(
    store: &ThresholdStore,
    pair: FockPair,
    delays: &[f64],
    noise: &NoiseConfig,
    kind: ThresholdKind,
    opts: &ScanOptions,
) -> Result<Vec<DecayPoint>> {
    if delays.windows(2).any(|w| w[1] < w[0]) {
        return Err(QngError::OutOfRange(
            "delays must be sorted ascending".into(),
        ));
    }
    let seq = build_sequence(pair, 0.0)?;
    let threshold = store.value(kind, pair)?;
    let phases = scan_phases(opts.phases);
    delays
        .par_iter()
        .enumerate()
        .map(|(i, &delay)| {
            let fringe =
                run_ramsey_indexed(&seq, delay, noise, &phases, &opts.run, i).map_err(|e| {
                    QngError::Simulation {
                        delay,
                        source: Box::new(e),
                    }
                })?;
            Ok(DecayPoint {
                delay,
                contrast: fringe.contrast,
                contrast_err: fringe.contrast_err,
                depth: (fringe.contrast > 0.0)
                    .then(|| depth_from_threshold(fringe.contrast, pair, threshold)),
                fringe,
            })
        })
        .collect()
}
