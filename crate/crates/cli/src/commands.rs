// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use qng_core::channels::thermal_depth_limit_with;
use qng_core::fock::{FockPair, GaussianParams};
use qng_core::optimizer::{mc_verify_with, McReport};
use qng_core::ramsey::{decay_scan_with, DecayPoint};
use qng_core::scenario::Scenario;
use qng_core::thresholds::{certify_with, CertificationReport, ThresholdKind};
use qng_core::{CoreState, QngError};

use crate::cache::{open_store, save_store};
use crate::manifest::{ManifestBuilder, RunManifest};
use crate::CliError;

pub const THRESHOLDS_SCHEMA: &str = "qng/thresholds/v1";
pub const CERTIFY_SCHEMA: &str = "qng/certify/v1";
pub const SIMULATE_SCHEMA: &str = "qng/simulate/v1";
pub const MC_SCHEMA: &str = "qng/mc-verify/v1";

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)
                    .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            }
            fs::write(path, text + "\n")
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn pair_key(p: FockPair) -> String {
    format!("{},{}", p.m(), p.n())
}

#[derive(Debug, Serialize)]
struct ThresholdEntry {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    argmax: Option<GaussianParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fock_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    core_state: Option<CoreState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct ThresholdsOutput {
    schema: &'static str,
    manifest: RunManifest,
    /// `"m,n"` → kind → entry.
    table: BTreeMap<String, BTreeMap<String, ThresholdEntry>>,
}

pub fn thresholds(
    pairs: &[FockPair],
    kinds: &[ThresholdKind],
    trunc_dim: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if pairs.is_empty() {
        return Err(CliError::Usage("at least one --pair is required".into()));
    }
    let kinds = if kinds.is_empty() {
        ThresholdKind::ALL.to_vec()
    } else {
        kinds.to_vec()
    };
    let manifest = ManifestBuilder::start(
        "thresholds",
        json!({
            "pairs": pairs,
            "kinds": kinds,
            "trunc_dim": trunc_dim,
        }),
        vec![],
        trunc_dim,
    );
    let store = open_store(trunc_dim);
    let mut table: BTreeMap<String, BTreeMap<String, ThresholdEntry>> = BTreeMap::new();
    let mut failure: Option<CliError> = None;
    for &pair in pairs {
        for &kind in &kinds {
            let entry = match store.get(kind, pair) {
                Ok(r) => ThresholdEntry {
                    status: "ok",
                    value: Some(r.value),
                    argmax: Some(r.argmax),
                    fock_index: r.fock_index,
                    core_state: r.core_state,
                    evaluations: Some(r.diagnostics.evaluations),
                    error: None,
                },
                Err(e) => {
                    let entry = ThresholdEntry {
                        status: "error",
                        value: None,
                        argmax: None,
                        fock_index: None,
                        core_state: None,
                        evaluations: None,
                        error: Some(e.to_string()),
                    };
                    let err = CliError::from(e);
                    if failure
                        .as_ref()
                        .is_none_or(|f| err.exit_code() > f.exit_code())
                    {
                        failure = Some(err);
                    }
                    entry
                }
            };
            table
                .entry(pair_key(pair))
                .or_default()
                .insert(kind.as_str().to_string(), entry);
        }
    }
    save_store(&store);
    write_json(
        &ThresholdsOutput {
            schema: THRESHOLDS_SCHEMA,
            manifest: manifest.finish(),
            table,
        },
        out,
    )?;
    failure.map_or(Ok(()), Err)
}

#[derive(Debug, Serialize)]
struct DepthSummary {
    kind: ThresholdKind,
    /// Absent for zero measured coherence.
    value: Option<f64>,
    certified: bool,
}

#[derive(Debug, Serialize)]
struct CertifyOutput {
    schema: &'static str,
    manifest: RunManifest,
    report: CertificationReport,
    depth: DepthSummary,
}

pub fn certify(
    pair: FockPair,
    measured: f64,
    uncertainty: f64,
    kind: ThresholdKind,
    trunc_dim: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start(
        "certify",
        json!({
            "pair": pair,
            "measured": measured,
            "uncertainty": uncertainty,
            "kind": kind,
            "trunc_dim": trunc_dim,
        }),
        vec![],
        trunc_dim,
    );
    let store = open_store(trunc_dim);
    let report = certify_with(&store, pair, measured, uncertainty);
    save_store(&store);
    let report = report?;
    let chosen = report.assessment(kind).expect("every kind is assessed");
    let depth = DepthSummary {
        kind,
        value: chosen.depth,
        certified: chosen.verdict,
    };
    let any = report.any_verdict();
    write_json(
        &CertifyOutput {
            schema: CERTIFY_SCHEMA,
            manifest: manifest.finish(),
            report,
            depth,
        },
        out,
    )?;
    if any {
        Ok(())
    } else {
        Err(CliError::NotCertified)
    }
}

#[derive(Debug, Serialize)]
struct ScanSummaryPoint {
    delay: f64,
    contrast: f64,
    contrast_err: f64,
    depth: Option<f64>,
    fit_phase_offset: f64,
    /// Depth of the heated ideal state, present when heating is configured.
    #[serde(skip_serializing_if = "Option::is_none")]
    thermal_limit_depth: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PairScan {
    pair: FockPair,
    kind: ThresholdKind,
    threshold: f64,
    fringe_csv: String,
    depth_csv: String,
    points: Vec<ScanSummaryPoint>,
}

#[derive(Debug, Serialize)]
struct SimulateOutput {
    schema: &'static str,
    manifest: RunManifest,
    scenario: Scenario,
    scans: Vec<PairScan>,
}

#[derive(Serialize)]
struct FringeRow {
    delay: f64,
    phase: f64,
    p_e: f64,
}

#[derive(Serialize)]
struct DepthRow {
    delay: f64,
    contrast: f64,
    contrast_err: f64,
    depth: Option<f64>,
    thermal_limit_depth: Option<f64>,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    let scenario: Scenario =
        parsed.map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn simulate(
    config: &Path,
    out_dir: &Path,
    trunc_dim: usize,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut scenario = load_scenario(config)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let manifest = ManifestBuilder::start(
        "simulate",
        json!({
            "config": config,
            "out": out_dir,
            "scenario": scenario,
            "trunc_dim": trunc_dim,
        }),
        vec![scenario.seed],
        trunc_dim,
    );
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let store = open_store(trunc_dim);
    let opts = scenario.scan_options();
    let mut scans = Vec::new();
    let mut result = Ok(());
    for pair in scenario.pairs.to_vec() {
        let scan = decay_scan_with(
            &store,
            pair,
            &scenario.delays,
            &scenario.noise,
            scenario.kind,
            &opts,
        )
        .and_then(|points| {
            let threshold = store.value(scenario.kind, pair)?;
            let limit = if scenario.noise.heating_rate > 0.0 {
                Some(thermal_depth_limit_with(
                    &store,
                    pair,
                    scenario.noise.heating_rate,
                    &scenario.delays,
                    scenario.kind,
                )?)
            } else {
                None
            };
            Ok((points, threshold, limit))
        });
        let (points, threshold, limit) = match scan {
            Ok(v) => v,
            Err(e) => {
                result = Err(CliError::from(e));
                break;
            }
        };
        let tag = format!("{}_{}", pair.m(), pair.n());
        let fringe_csv = format!("fringes_{tag}.csv");
        let depth_csv = format!("depth_{tag}.csv");
        write_csv(
            &out_dir.join(&fringe_csv),
            points.iter().flat_map(|p| {
                p.fringe.points.iter().map(move |f| FringeRow {
                    delay: p.delay,
                    phase: f.phase,
                    p_e: f.p_e,
                })
            }),
        )?;
        let limit_at = |i: usize| limit.as_ref().map(|l| l[i].1);
        write_csv(
            &out_dir.join(&depth_csv),
            points.iter().enumerate().map(|(i, p)| DepthRow {
                delay: p.delay,
                contrast: p.contrast,
                contrast_err: p.contrast_err,
                depth: p.depth,
                thermal_limit_depth: limit_at(i),
            }),
        )?;
        scans.push(PairScan {
            pair,
            kind: scenario.kind,
            threshold,
            fringe_csv,
            depth_csv,
            points: points
                .iter()
                .enumerate()
                .map(|(i, p): (usize, &DecayPoint)| ScanSummaryPoint {
                    delay: p.delay,
                    contrast: p.contrast,
                    contrast_err: p.contrast_err,
                    depth: p.depth,
                    fit_phase_offset: p.fringe.fit_phase_offset,
                    thermal_limit_depth: limit_at(i),
                })
                .collect(),
        });
    }
    save_store(&store);
    write_json(
        &SimulateOutput {
            schema: SIMULATE_SCHEMA,
            manifest: manifest.finish(),
            scenario,
            scans,
        },
        Some(&out_dir.join("summary.json")),
    )?;
    result
}

#[derive(Debug, Serialize)]
struct McOutput {
    schema: &'static str,
    manifest: RunManifest,
    report: McReport,
}

pub fn mc_verify(
    kind: ThresholdKind,
    pair: FockPair,
    samples: usize,
    seed: u64,
    trunc_dim: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start(
        "mc-verify",
        json!({
            "kind": kind,
            "pair": pair,
            "samples": samples,
            "seed": seed,
            "trunc_dim": trunc_dim,
        }),
        vec![seed],
        trunc_dim,
    );
    let store = open_store(trunc_dim);
    let threshold = store.value(kind, pair);
    save_store(&store);
    let report = mc_verify_with(kind, pair, samples, seed, threshold?)?;
    let violations = report.violations;
    write_json(
        &McOutput {
            schema: MC_SCHEMA,
            manifest: manifest.finish(),
            report,
        },
        out,
    )?;
    if violations == 0 {
        Ok(())
    } else {
        Err(CliError::Violations(violations))
    }
}

impl From<QngError> for CliError {
    fn from(e: QngError) -> Self {
        match e {
            QngError::NonConvergence { .. }
            | QngError::TruncationRisk(_)
            | QngError::Simulation { .. }
            | QngError::Fit(_)
            | QngError::IllConditioned { .. }
            | QngError::Sequence(_) => CliError::Failed(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}
