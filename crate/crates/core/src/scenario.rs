// SPDX-License-Identifier: Apache-2.0

//! Ramsey decay-scan scenario, deserialized from a structured text config.

use serde::{Deserialize, Serialize};

use crate::error::{QngError, Result};
use crate::fock::FockPair;
use crate::ramsey::{NoiseConfig, RunOptions, ScanOptions};
use crate::thresholds::ThresholdKind;

fn default_phases() -> usize {
    16
}

fn default_kind() -> ThresholdKind {
    ThresholdKind::GenuineN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// One or more pairs, each `[m, n]`.
    #[serde(alias = "pair")]
    pub pairs: PairList,
    /// Ramsey delays, seconds.
    pub delays: Vec<f64>,
    #[serde(default)]
    pub noise: NoiseConfig,
    /// Shots per phase point; absent for exact probabilities.
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default = "default_phases")]
    pub phases: usize,
    #[serde(default)]
    pub seed: u64,
    /// Fock dimension of the simulation.
    #[serde(default)]
    pub trunc_dim: Option<usize>,
    /// Threshold used for depths.
    #[serde(default = "default_kind")]
    pub kind: ThresholdKind,
}

/// A single pair or a list of pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairList {
    One(FockPair),
    Many(Vec<FockPair>),
}

impl PairList {
    pub fn to_vec(&self) -> Vec<FockPair> {
        match self {
            PairList::One(p) => vec![*p],
            PairList::Many(v) => v.clone(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.pairs.to_vec().is_empty() {
            return Err(QngError::OutOfRange("scenario lists no pairs".into()));
        }
        if self.delays.is_empty() {
            return Err(QngError::OutOfRange("scenario lists no delays".into()));
        }
        if self.delays.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(QngError::OutOfRange("delays must be finite and ≥ 0".into()));
        }
        if self.delays.windows(2).any(|w| w[1] < w[0]) {
            return Err(QngError::OutOfRange(
                "delays must be sorted ascending".into(),
            ));
        }
        if self.phases < 3 {
            return Err(QngError::OutOfRange(format!(
                "{} scan phases, need at least 3",
                self.phases
            )));
        }
        if self.shots == Some(0) {
            return Err(QngError::OutOfRange("shots must be ≥ 1".into()));
        }
        self.noise.validate()
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            phases: self.phases,
            run: RunOptions {
                dim: self.trunc_dim,
                shots: self.shots,
                seed: self.seed,
            },
        }
    }
}
