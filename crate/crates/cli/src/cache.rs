// SPDX-License-Identifier: Apache-2.0

//! Threshold memo persisted between runs under `QNG_CACHE_DIR`.

use std::fs;
use std::path::PathBuf;

use qng_core::thresholds::{SolverConfig, ThresholdResult, ThresholdSolver, ThresholdStore};

pub const CACHE_ENV: &str = "QNG_CACHE_DIR";

fn cache_file(truncation: usize) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    Some(PathBuf::from(dir).join(format!("thresholds-trunc{truncation}.json")))
}

/// Store with the given truncation, seeded from the cache when present.
pub fn open_store(truncation: usize) -> ThresholdStore {
    let store = ThresholdStore::new(ThresholdSolver::new(SolverConfig {
        truncation,
        ..SolverConfig::default()
    }));
    if let Some(path) = cache_file(truncation) {
        match fs::read_to_string(&path) {
            Ok(text) => match serde_json::from_str::<Vec<ThresholdResult>>(&text) {
                Ok(entries) => entries.into_iter().for_each(|r| store.insert(r)),
                Err(e) => eprintln!(
                    "warning: ignoring unreadable threshold cache {}: {e}",
                    path.display()
                ),
            },
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => eprintln!(
                "warning: cannot read threshold cache {}: {e}",
                path.display()
            ),
        }
    }
    store
}

/// Writes the store snapshot back; failures only warn.
pub fn save_store(store: &ThresholdStore) {
    let Some(path) = cache_file(store.solver().config.truncation) else {
        return;
    };
    let write = || -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(&store.snapshot())?)?;
        fs::rename(&tmp, &path)
    };
    if let Err(e) = write() {
        eprintln!(
            "warning: cannot write threshold cache {}: {e}",
            path.display()
        );
    }
}
