// SPDX-License-Identifier: Apache-2.0

//! Monte-Carlo soundness check of a threshold: no admissible state of the
//! kind may exceed it.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QngError, Result};
use crate::fock::{FockPair, GaussianAmplitudes, GaussianParams};
use crate::thresholds::{coherent_coherence, fock_input_coherence, ThresholdKind, ThresholdStore};

/// Observed coherences above `threshold + VIOLATION_SLACK` count as violations.
pub const VIOLATION_SLACK: f64 = 1e-3;

/// Lower edges of the `threshold − observed` histogram buckets. The first
/// bucket collects everything below zero.
pub const MARGIN_BUCKETS: [f64; 8] = [f64::NEG_INFINITY, 0.0, 0.01, 0.05, 0.1, 0.2, 0.4, 0.7];

const PARTITION: usize = 4096;
const XI_BOUND: f64 = 1.5;
const ALPHA_BOUND: f64 = 4.0;
const MAX_FOCK: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginBucket {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub kind: ThresholdKind,
    pub pair: FockPair,
    pub seed: u64,
    pub samples: usize,
    pub max_observed: f64,
    pub threshold: f64,
    pub violations: u64,
    pub margin_histogram: Vec<MarginBucket>,
    /// `threshold − max_observed`: how close the sampled states come.
    pub closest_approach: f64,
}

#[derive(Clone)]
struct Partial {
    max: f64,
    violations: u64,
    counts: [u64; MARGIN_BUCKETS.len()],
}

fn random_gaussian(rng: &mut ChaCha20Rng) -> GaussianParams {
    GaussianParams {
        xi_mag: rng.random::<f64>() * XI_BOUND,
        xi_phase: rng.random::<f64>() * TAU,
        alpha_mag: rng.random::<f64>() * ALPHA_BOUND,
        alpha_phase: rng.random::<f64>() * TAU,
    }
}

/// Haar-random unit vector in `C^d`.
fn random_core(rng: &mut ChaCha20Rng, d: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / norm).collect()
}

fn sample(kind: ThresholdKind, pair: FockPair, rng: &mut ChaCha20Rng, exp: &Exp<f64>) -> f64 {
    match kind {
        ThresholdKind::Classical => {
            let a2: f64 = exp.sample(rng);
            coherent_coherence(pair, a2.sqrt())
        }
        ThresholdKind::GaussianMin => fock_input_coherence(pair, 0, &random_gaussian(rng)),
        ThresholdKind::GaussianIntrinsic => {
            let g = random_gaussian(rng);
            let k = rng.random_range(0..=MAX_FOCK);
            fock_input_coherence(pair, k, &g)
        }
        ThresholdKind::GenuineN => {
            let g = random_gaussian(rng);
            let d = pair.n();
            let c = random_core(rng, d);
            let rows = GaussianAmplitudes::new(&g).rows(&[pair.m(), pair.n()], d);
            let am: Complex64 = rows[0].iter().zip(&c).map(|(a, c)| a * c).sum();
            let an: Complex64 = rows[1].iter().zip(&c).map(|(a, c)| a * c).sum();
            2.0 * am.norm() * an.norm()
        }
    }
}

fn bucket(margin: f64) -> usize {
    MARGIN_BUCKETS
        .iter()
        .rposition(|&lo| margin >= lo)
        .unwrap_or(0)
}

/// Sample admissible states of `kind` and compare their `C_{m,n}` against
/// the threshold from the process-wide store.
pub fn mc_verify(
    kind: ThresholdKind,
    pair: FockPair,
    samples: usize,
    seed: u64,
) -> Result<McReport> {
    let threshold = ThresholdStore::global().value(kind, pair)?;
    mc_verify_with(kind, pair, samples, seed, threshold)
}

/// As [`mc_verify`] against an explicit threshold value.
///
/// Sample index range is split into fixed partitions, each drawing from its
/// own ChaCha20 stream, so the report does not depend on the thread count.
pub fn mc_verify_with(
    kind: ThresholdKind,
    pair: FockPair,
    samples: usize,
    seed: u64,
    threshold: f64,
) -> Result<McReport> {
    if samples < 1000 {
        return Err(QngError::OutOfRange(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    // mean |α|² spread around the classical optimum (m+n)/2
    let exp = Exp::new(1.0 / ((pair.m() + pair.n()) as f64 / 2.0).max(0.5)).expect("positive rate");
    let parts = samples.div_ceil(PARTITION);
    let partials: Vec<Partial> = (0..parts)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let count = PARTITION.min(samples - p * PARTITION);
            let mut acc = Partial {
                max: 0.0,
                violations: 0,
                counts: [0; MARGIN_BUCKETS.len()],
            };
            for _ in 0..count {
                let c = sample(kind, pair, &mut rng, &exp);
                acc.max = acc.max.max(c);
                if c > threshold + VIOLATION_SLACK {
                    acc.violations += 1;
                }
                acc.counts[bucket(threshold - c)] += 1;
            }
            acc
        })
        .collect();
    let mut counts = [0u64; MARGIN_BUCKETS.len()];
    let mut max_observed = 0.0f64;
    let mut violations = 0;
    for p in &partials {
        max_observed = max_observed.max(p.max);
        violations += p.violations;
        for (c, x) in counts.iter_mut().zip(p.counts) {
            *c += x;
        }
    }
    let margin_histogram = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| MarginBucket {
            lo: MARGIN_BUCKETS[i],
            hi: MARGIN_BUCKETS.get(i + 1).copied().unwrap_or(f64::INFINITY),
            count,
        })
        .collect();
    Ok(McReport {
        kind,
        pair,
        seed,
        samples,
        max_observed,
        threshold,
        violations,
        margin_histogram,
        closest_approach: threshold - max_observed,
    })
}
