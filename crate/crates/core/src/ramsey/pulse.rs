// SPDX-License-Identifier: Apache-2.0

//! Laser pulses on the spin⊗oscillator space and the Ramsey sequences built
//! from them.
//!
//! Electronic rows are `g`, `e` and the optional shelf level `a`; the flat
//! index of `|level, k⟩` is `level·dim + k`. A pulse of area `A` and phase
//! `φ` rotates each coupled pair by `exp(−i θ/2 (e^{iφ}σ₊ + e^{−iφ}σ₋))`,
//! with `θ = A` on the carrier, `A√(k+1)` on the blue sideband from
//! `|g,k⟩` and `A√k` on the red sideband from `|g,k⟩`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QngError, Result};
use crate::fock::FockPair;

/// Carrier Rabi frequency `Ω_c`, rad/s.
pub const CARRIER_RABI: f64 = TAU * 34.8e3;
/// Lamb–Dicke parameter `η`.
pub const LAMB_DICKE: f64 = 0.063;

pub const G: usize = 0;
pub const E: usize = 1;
pub const SHELF: usize = 2;

const EDGE_POPULATION: f64 = 1e-12;
const MAPPING_TOLERANCE: f64 = 0.02;
const MAX_MAPPING_J: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseKind {
    Carrier,
    Bsb,
    Rsb,
    Shelve,
    Unshelve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub kind: PulseKind,
    /// `Ωt` of the unit-strength transition, radians.
    pub area: f64,
    pub phase: f64,
    /// rad/s
    #[serde(default)]
    pub detuning: f64,
}

impl PulseSpec {
    pub fn new(kind: PulseKind, area: f64, phase: f64) -> Result<Self> {
        if !(area >= 0.0) || !area.is_finite() {
            return Err(QngError::Sequence(format!(
                "pulse area {area} must be finite and ≥ 0"
            )));
        }
        Ok(Self {
            kind,
            area,
            phase: phase.rem_euclid(TAU),
            detuning: 0.0,
        })
    }

    fn raw(kind: PulseKind, area: f64, phase: f64) -> Self {
        Self::new(kind, area, phase).expect("constructed pulse is valid")
    }

    /// The pulse undoing `self` on resonance.
    pub fn inverse(&self) -> Self {
        match self.kind {
            PulseKind::Shelve => Self {
                kind: PulseKind::Unshelve,
                ..*self
            },
            PulseKind::Unshelve => Self {
                kind: PulseKind::Shelve,
                ..*self
            },
            _ => Self {
                phase: (self.phase + PI).rem_euclid(TAU),
                ..*self
            },
        }
    }

    /// Wall-clock length, seconds.
    pub fn duration(&self) -> f64 {
        match self.kind {
            PulseKind::Bsb | PulseKind::Rsb => self.area / (CARRIER_RABI * LAMB_DICKE),
            _ => self.area / CARRIER_RABI,
        }
    }

    fn base_rabi(&self) -> f64 {
        match self.kind {
            PulseKind::Bsb | PulseKind::Rsb => CARRIER_RABI * LAMB_DICKE,
            _ => CARRIER_RABI,
        }
    }

    /// Electronic rows touched by the pulse.
    fn rows(&self) -> (usize, usize) {
        match self.kind {
            PulseKind::Shelve | PulseKind::Unshelve => (G, SHELF),
            _ => (G, E),
        }
    }

    /// Coupled index pairs `(lower, upper)` with their relative strength.
    fn couplings(&self, dim: usize) -> Vec<(usize, usize, f64)> {
        let (lo, hi) = self.rows();
        match self.kind {
            PulseKind::Carrier | PulseKind::Shelve | PulseKind::Unshelve => (0..dim)
                .map(|k| (lo * dim + k, hi * dim + k, 1.0))
                .collect(),
            PulseKind::Bsb => (0..dim - 1)
                .map(|k| (G * dim + k, E * dim + k + 1, ((k + 1) as f64).sqrt()))
                .collect(),
            PulseKind::Rsb => (1..dim)
                .map(|k| (G * dim + k, E * dim + k - 1, (k as f64).sqrt()))
                .collect(),
        }
    }

    /// Indices coupled to levels beyond the truncation.
    pub(crate) fn edge_indices(&self, dim: usize) -> Vec<usize> {
        match self.kind {
            PulseKind::Bsb => vec![G * dim + dim - 1],
            PulseKind::Rsb => vec![E * dim + dim - 1],
            _ => Vec::new(),
        }
    }

    /// Unitary on `levels × dim`.
    pub fn unitary(&self, levels: usize, dim: usize) -> Result<DMatrix<Complex64>> {
        let (_, hi) = self.rows();
        if hi >= levels {
            return Err(QngError::Sequence(format!(
                "{:?} needs the shelf level",
                self.kind
            )));
        }
        let mut u = DMatrix::<Complex64>::identity(levels * dim, levels * dim);
        let omega0 = self.base_rabi();
        let t = self.duration();
        for (a, b, strength) in self.couplings(dim) {
            let theta = self.area * strength;
            // generalized Rabi rotation in the {lower, upper} pair
            let (c, s, dz) = if self.detuning == 0.0 {
                ((theta / 2.0).cos(), (theta / 2.0).sin(), 0.0)
            } else {
                let omega = omega0 * strength;
                let gen = (omega * omega + self.detuning * self.detuning).sqrt();
                let half = gen * t / 2.0;
                (
                    half.cos(),
                    half.sin() * omega / gen,
                    half.sin() * self.detuning / gen,
                )
            };
            // Unshelve is the inverse of Shelve at the same phase
            let phase = if self.kind == PulseKind::Unshelve {
                self.phase + PI
            } else {
                self.phase
            };
            let ph = Complex64::from_polar(1.0, phase);
            let i = Complex64::i();
            u[(a, a)] = Complex64::new(c, dz);
            u[(b, b)] = Complex64::new(c, -dz);
            u[(b, a)] = -i * ph * s;
            u[(a, b)] = -i * ph.conj() * s;
        }
        Ok(u)
    }
}

/// Pure state on `{g, e}` or `{g, e, a}` ⊗ Fock.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOscState {
    levels: usize,
    dim: usize,
    amps: DVector<Complex64>,
}

impl SpinOscState {
    /// `|level, k⟩`.
    pub fn basis(level: usize, k: usize, dim: usize, with_shelf: bool) -> Result<Self> {
        let levels = if with_shelf { 3 } else { 2 };
        if level >= levels || k >= dim {
            return Err(QngError::OutOfRange(format!(
                "|{level},{k}⟩ outside {levels}×{dim}"
            )));
        }
        let mut amps = DVector::zeros(levels * dim);
        amps[level * dim + k] = Complex64::new(1.0, 0.0);
        Ok(Self { levels, dim, amps })
    }

    pub fn from_amplitudes(amps: DMatrix<Complex64>) -> Result<Self> {
        let (levels, dim) = amps.shape();
        if !(2..=3).contains(&levels) {
            return Err(QngError::InvalidState(format!("{levels} electronic rows")));
        }
        let flat = DVector::from_iterator(
            levels * dim,
            (0..levels)
                .flat_map(|l| (0..dim).map(move |k| (l, k)))
                .map(|i| amps[i]),
        );
        let norm = flat.norm_squared();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(QngError::InvalidState(format!(
                "squared norm {norm} is not 1"
            )));
        }
        Ok(Self {
            levels,
            dim,
            amps: flat,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitude(&self, level: usize, k: usize) -> Complex64 {
        self.amps[level * self.dim + k]
    }

    /// Amplitudes as a `levels × dim` matrix.
    pub fn amplitudes(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.levels, self.dim, |l, k| self.amplitude(l, k))
    }

    pub fn vector(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn level_population(&self, level: usize) -> f64 {
        (0..self.dim)
            .map(|k| self.amplitude(level, k).norm_sqr())
            .sum()
    }
}

pub fn apply_pulse(state: &SpinOscState, pulse: &PulseSpec) -> Result<SpinOscState> {
    for i in pulse.edge_indices(state.dim) {
        if state.amps[i].norm_sqr() > EDGE_POPULATION {
            return Err(QngError::TruncationRisk(format!(
                "{:?} pulse drives population at the top Fock level {}",
                pulse.kind,
                state.dim - 1
            )));
        }
    }
    let u = pulse.unitary(state.levels, state.dim)?;
    Ok(SpinOscState {
        amps: u * &state.amps,
        ..state.clone()
    })
}

/// Preparation and analysis halves of a motional Ramsey interferometer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseySequence {
    pub pair: FockPair,
    /// Fock-state preparation before the interferometer (the `(m,n)` family).
    pub fock_preparation: Vec<PulseSpec>,
    pub preparation: Vec<PulseSpec>,
    /// Inverse of `preparation` in reverse order; the last pulse carries the
    /// phase offset and receives the scanned phase.
    pub analysis: Vec<PulseSpec>,
    /// Mapping-condition index `j` of the red-sideband pulse, `(m,n)` family only.
    pub mapping_j: Option<usize>,
    /// `l` of the mapping condition at `mapping_j`.
    pub mapping_l: Option<f64>,
}

impl RamseySequence {
    fn closing(preparation: &[PulseSpec], phase_offset: f64) -> Vec<PulseSpec> {
        let mut analysis: Vec<PulseSpec> =
            preparation.iter().rev().map(PulseSpec::inverse).collect();
        if let Some(last) = analysis.last_mut() {
            last.phase = (last.phase + phase_offset).rem_euclid(TAU);
        }
        analysis
    }

    pub fn uses_shelf(&self) -> bool {
        self.all_pulses()
            .any(|p| matches!(p.kind, PulseKind::Shelve | PulseKind::Unshelve))
    }

    /// Number of Shelve/Unshelve pairs in the full sequence.
    pub fn shelving_pairs(&self) -> usize {
        self.all_pulses()
            .filter(|p| p.kind == PulseKind::Shelve)
            .count()
    }

    pub fn all_pulses(&self) -> impl Iterator<Item = &PulseSpec> {
        self.fock_preparation
            .iter()
            .chain(&self.preparation)
            .chain(&self.analysis)
    }

    /// Analysis pulses with `phase` added to the last one.
    pub fn analysis_at(&self, phase: f64) -> Vec<PulseSpec> {
        let mut a = self.analysis.clone();
        if let Some(last) = a.last_mut() {
            last.phase = (last.phase + phase).rem_euclid(TAU);
        }
        a
    }

    /// Highest Fock level any pulse populates in the ideal sequence.
    pub fn max_fock(&self) -> usize {
        self.pair.n() + 1
    }

    /// Total pulse time of preparation and analysis, seconds.
    pub fn pulse_time(&self) -> f64 {
        self.all_pulses().map(PulseSpec::duration).sum()
    }
}

/// `π` pulse on the sideband climbing from `k` to `k+1`, alternating BSB
/// (from `g`) and RSB (from `e`).
fn ladder_step(k: usize, from_g: bool) -> PulseSpec {
    let strength = ((k + 1) as f64).sqrt();
    let kind = if from_g {
        PulseKind::Bsb
    } else {
        PulseKind::Rsb
    };
    PulseSpec::raw(kind, PI / strength, 0.0)
}

/// Ramsey sequence for `(|0⟩ + e^{iφ}|n⟩)/√2`.
///
/// A BSB `π/2` pulse entangles `|g,0⟩` with `|e,1⟩`; `π` pulses then carry the
/// `|e,1⟩` branch up the ladder. For `n > 2` the `|g,0⟩` branch is shelved
/// while the ladder passes through `g`.
pub fn build_sequence_0n(n: usize, phase_offset: f64) -> Result<RamseySequence> {
    if !(1..=8).contains(&n) {
        return Err(QngError::Sequence(format!("n = {n} outside 1..=8")));
    }
    let mut prep = vec![PulseSpec::raw(PulseKind::Bsb, FRAC_PI_2, 0.0)];
    if n == 2 {
        prep.push(ladder_step(1, false));
    } else if n > 2 {
        prep.push(PulseSpec::raw(PulseKind::Shelve, PI, 0.0));
        // climb while shelved until the moving branch sits in e
        let top = if n.is_multiple_of(2) { n - 1 } else { n };
        for k in 1..top {
            prep.push(ladder_step(k, k % 2 == 0));
        }
        prep.push(PulseSpec::raw(PulseKind::Unshelve, PI, 0.0));
        if n.is_multiple_of(2) {
            prep.push(ladder_step(n - 1, false));
        }
    }
    Ok(RamseySequence {
        pair: FockPair::new(0, n)?,
        fock_preparation: Vec::new(),
        analysis: RamseySequence::closing(&prep, phase_offset),
        preparation: prep,
        mapping_j: None,
        mapping_l: None,
    })
}

/// `l = (2j+1)√(m/n)/2` of the red-sideband mapping pulse.
///
/// The pulse must be a `π(2j+1)` rotation on `|e,n−1⟩ ↔ |g,n⟩` and a
/// `2πl` rotation on `|g,m⟩ ↔ |e,m−1⟩`.
pub fn mapping_l(m: usize, n: usize, j: usize) -> f64 {
    (2 * j + 1) as f64 * (m as f64 / n as f64).sqrt() / 2.0
}

/// Smallest `j < 200` with `l` within 0.02 of an integer.
pub fn mapping_j(m: usize, n: usize) -> Result<usize> {
    (0..MAX_MAPPING_J)
        .find(|&j| {
            let l = mapping_l(m, n, j);
            (l - l.round()).abs() < MAPPING_TOLERANCE
        })
        .ok_or_else(|| {
            QngError::Sequence(format!(
                "no admissible mapping index below j = {MAX_MAPPING_J} for ({m},{n})"
            ))
        })
}

/// Ramsey sequence for `(|m⟩ + e^{iφ}|n⟩)/√2`, `|m−n| ∈ {1, 2}`.
///
/// `|g,m⟩` is prepared by ladder `π` pulses (a carrier `π` returns odd `m`
/// to `g`), split by a carrier (`Δ = 1`) or BSB (`Δ = 2`) `π/2` pulse, and
/// the excited branch mapped to `|g,n⟩` by one red-sideband pulse.
pub fn build_sequence_mn(m: usize, n: usize, phase_offset: f64) -> Result<RamseySequence> {
    let pair = FockPair::new(m, n)?;
    let (m, n) = (pair.m(), pair.n());
    let delta = pair.delta();
    if !(1..=2).contains(&delta) {
        return Err(QngError::Sequence(format!("|m−n| = {delta} is not 1 or 2")));
    }
    let mut fock = Vec::new();
    for k in 0..m {
        fock.push(ladder_step(k, k % 2 == 0));
    }
    if m % 2 == 1 {
        fock.push(PulseSpec::raw(PulseKind::Carrier, PI, 0.0));
    }
    let split = if delta == 1 {
        PulseSpec::raw(PulseKind::Carrier, FRAC_PI_2, 0.0)
    } else {
        PulseSpec::raw(PulseKind::Bsb, FRAC_PI_2 / ((m + 1) as f64).sqrt(), 0.0)
    };
    let j = mapping_j(m, n)?;
    let map = PulseSpec::raw(
        PulseKind::Rsb,
        PI * (2 * j + 1) as f64 / (n as f64).sqrt(),
        0.0,
    );
    let prep = vec![split, map];
    Ok(RamseySequence {
        pair,
        fock_preparation: fock,
        analysis: RamseySequence::closing(&prep, phase_offset),
        preparation: prep,
        mapping_j: Some(j),
        mapping_l: Some(mapping_l(m, n, j)),
    })
}

/// `(0,n)` pairs use [`build_sequence_0n`], all others [`build_sequence_mn`].
pub fn build_sequence(pair: FockPair, phase_offset: f64) -> Result<RamseySequence> {
    if pair.m() == 0 {
        build_sequence_0n(pair.n(), phase_offset)
    } else {
        build_sequence_mn(pair.m(), pair.n(), phase_offset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn run(state: SpinOscState, pulses: &[PulseSpec]) -> SpinOscState {
        pulses
            .iter()
            .fold(state, |s, p| apply_pulse(&s, p).unwrap())
    }

    #[test]
    fn bsb_flops() {
        let g0 = SpinOscState::basis(G, 0, 6, false).unwrap();
        let full = apply_pulse(&g0, &PulseSpec::new(PulseKind::Bsb, PI, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(full.amplitude(E, 1).norm(), 1.0, epsilon = 1e-12);
        let half = apply_pulse(
            &g0,
            &PulseSpec::new(PulseKind::Bsb, FRAC_PI_2, 0.0).unwrap(),
        )
        .unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(half.amplitude(G, 0).re, r, epsilon = 1e-12);
        assert_abs_diff_eq!(half.amplitude(E, 1).im, -r, epsilon = 1e-12);
    }

    #[test]
    fn rsb_leaves_ground_untouched() {
        let g0 = SpinOscState::basis(G, 0, 6, false).unwrap();
        for area in [0.3, PI, 5.0] {
            let out =
                apply_pulse(&g0, &PulseSpec::new(PulseKind::Rsb, area, 1.0).unwrap()).unwrap();
            assert_eq!(out, g0);
        }
    }

    #[test]
    fn bsb_at_edge_is_an_error() {
        let top = SpinOscState::basis(G, 5, 6, false).unwrap();
        assert!(apply_pulse(&top, &PulseSpec::new(PulseKind::Bsb, 1.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn shelving_needs_third_row() {
        let g0 = SpinOscState::basis(G, 0, 6, false).unwrap();
        assert!(apply_pulse(&g0, &PulseSpec::new(PulseKind::Shelve, PI, 0.0).unwrap()).is_err());
        let g0 = SpinOscState::basis(G, 0, 6, true).unwrap();
        let s = apply_pulse(&g0, &PulseSpec::new(PulseKind::Shelve, PI, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(s.level_population(SHELF), 1.0, epsilon = 1e-12);
        let back = apply_pulse(&s, &PulseSpec::new(PulseKind::Unshelve, PI, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(back.amplitude(G, 0).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_undoes_pulse() {
        let psi = SpinOscState::basis(G, 2, 8, true).unwrap();
        for kind in [
            PulseKind::Carrier,
            PulseKind::Bsb,
            PulseKind::Rsb,
            PulseKind::Shelve,
            PulseKind::Unshelve,
        ] {
            let p = PulseSpec::new(kind, 1.234, 0.7).unwrap();
            let out = run(psi.clone(), &[p, p.inverse()]);
            assert!((out.vector() - psi.vector()).norm() < 1e-12);
        }
    }

    #[test]
    fn sequences_reach_target_superposition() {
        for n in 1..=8 {
            let seq = build_sequence_0n(n, 0.0).unwrap();
            let out = run(
                SpinOscState::basis(G, 0, 12, true).unwrap(),
                &seq.preparation,
            );
            let lvl0 = (0..3).map(|l| out.amplitude(l, 0).norm_sqr()).sum::<f64>();
            let lvln = (0..3).map(|l| out.amplitude(l, n).norm_sqr()).sum::<f64>();
            assert_abs_diff_eq!(lvl0, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(lvln, 0.5, epsilon = 1e-12);
            assert!(out.level_population(SHELF) < 1e-20, "n = {n}");
            let closed = run(out, &seq.analysis);
            assert_abs_diff_eq!(closed.amplitude(G, 0).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sequence_shapes() {
        let s1 = build_sequence_0n(1, 0.0).unwrap();
        assert_eq!(s1.preparation.len(), 1);
        assert_eq!(s1.analysis.len(), 1);
        assert_eq!(s1.analysis[0].kind, PulseKind::Bsb);
        assert_eq!(build_sequence_0n(2, 0.0).unwrap().preparation.len(), 2);
        let s4 = build_sequence_0n(4, 0.0).unwrap();
        assert_eq!(s4.preparation[1].kind, PulseKind::Shelve);
        assert!(s4.preparation.iter().any(|p| p.kind == PulseKind::Unshelve));
        assert!(!build_sequence_0n(2, 0.0).unwrap().uses_shelf());
        assert!(build_sequence_0n(0, 0.0).is_err());
        assert!(build_sequence_0n(9, 0.0).is_err());
    }

    // brute-force scan of |l − round(l)| with l from the two rotation conditions
    fn scan_j(m: usize, n: usize) -> usize {
        (0..200)
            .find(|&j| {
                let area = PI * (2 * j + 1) as f64 / (n as f64).sqrt();
                let l = area * (m as f64).sqrt() / TAU;
                (l - l.round()).abs() < 0.02
            })
            .unwrap()
    }

    #[test]
    fn mn_sequences() {
        let s12 = build_sequence_mn(1, 2, 0.0).unwrap();
        assert_eq!(s12.preparation[0].kind, PulseKind::Carrier);
        let s13 = build_sequence_mn(1, 3, 0.0).unwrap();
        assert_eq!(s13.preparation[0].kind, PulseKind::Bsb);
        let s23 = build_sequence_mn(2, 3, 0.0).unwrap();
        assert_eq!(s23.mapping_j, Some(scan_j(2, 3)));
        assert_eq!(s12.mapping_j, Some(scan_j(1, 2)));
        assert_eq!(s13.mapping_j, Some(scan_j(1, 3)));
        assert!(build_sequence_mn(1, 4, 0.0).is_err());
        for (m, n) in [(1, 2), (1, 3), (2, 3), (2, 4), (0, 1)] {
            let seq = build_sequence_mn(m, n, 0.0).unwrap();
            let dim = n + 4;
            let out = run(
                SpinOscState::basis(G, 0, dim, false).unwrap(),
                &[seq.fock_preparation.clone(), seq.preparation.clone()].concat(),
            );
            let pm = out.amplitude(G, m).norm_sqr();
            let pn = out.amplitude(G, n).norm_sqr();
            // residual of the near-integer mapping condition
            assert!(pm > 0.49 && pn > 0.49, "({m},{n}): {pm} {pn}");
        }
    }
}
