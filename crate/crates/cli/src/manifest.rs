// SPDX-License-Identifier: Apache-2.0

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Provenance block embedded in every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Parameters exactly as resolved for the run.
    pub parameters: Value,
    pub version: String,
    pub seeds: Vec<u64>,
    pub wall_time_s: f64,
    /// Fock truncation of the threshold solver.
    pub trunc_dim: usize,
}

pub struct ManifestBuilder {
    command: &'static str,
    parameters: Value,
    seeds: Vec<u64>,
    trunc_dim: usize,
    start: Instant,
}

impl ManifestBuilder {
    pub fn start(
        command: &'static str,
        parameters: Value,
        seeds: Vec<u64>,
        trunc_dim: usize,
    ) -> Self {
        Self {
            command,
            parameters,
            seeds,
            trunc_dim,
            start: Instant::now(),
        }
    }

    pub fn finish(self) -> RunManifest {
        RunManifest {
            command: self.command.to_string(),
            parameters: self.parameters,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seeds: self.seeds,
            wall_time_s: self.start.elapsed().as_secs_f64(),
            trunc_dim: self.trunc_dim,
        }
    }
}
