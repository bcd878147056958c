//! On-disk documents.
//!
//! Every document is JSON with a `format` tag and a `provenance` block (seed
//! plus a hash of the configuration that produced it). Wall-clock
//! measurements only ever appear under keys starting with `timing`, so two
//! runs can be compared byte-for-byte after dropping those keys.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::generator::{GenParams, Scenario};
use crate::metrics::RunComparison;
use crate::model::{AppId, Assignment, EcuId, Instance, ModeRef, ResourceVector};
use crate::simulator::MetricsLog;
use crate::solver::{Solution, UpgradeStep};

pub const INSTANCE_FORMAT: &str = "sdv-orchestra/instance/v1";
pub const SCENARIO_FORMAT: &str = "sdv-orchestra/scenario/v1";
pub const SOLUTION_FORMAT: &str = "sdv-orchestra/solution/v1";
pub const MANIFEST_FORMAT: &str = "sdv-orchestra/manifest/v1";
pub const RUN_FORMAT: &str = "sdv-orchestra/run/v1";
pub const REPORT_FORMAT: &str = "sdv-orchestra/report/v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: expected format '{expected}', found '{found}'")]
    Format {
        path: String,
        expected: &'static str,
        found: String,
    },
}

/// First 16 hex digits of the SHA-256 of the value's JSON encoding.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable value");
    let digest = Sha256::digest(&bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub format: String,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<GenParams>,
    pub instance: Instance,
}

impl InstanceDoc {
    pub fn new(instance: Instance, params: Option<GenParams>, seed: u64) -> Self {
        let config_hash = match &params {
            Some(p) => content_hash(p),
            None => content_hash(&instance),
        };
        InstanceDoc {
            format: INSTANCE_FORMAT.to_string(),
            provenance: Provenance { seed, config_hash },
            params,
            instance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub format: String,
    pub provenance: Provenance,
    pub instance_hash: String,
    pub scenario: Scenario,
}

impl ScenarioDoc {
    pub fn new(scenario: Scenario, instance: &Instance, config_hash: String) -> Self {
        ScenarioDoc {
            format: SCENARIO_FORMAT.to_string(),
            provenance: Provenance {
                seed: scenario.seed,
                config_hash,
            },
            instance_hash: content_hash(instance),
            scenario,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTiming {
    pub solve_time_us: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub format: String,
    pub provenance: Provenance,
    pub instance_hash: String,
    pub selector: String,
    pub requested: Vec<AppId>,
    pub assignment: Assignment,
    pub total_axil: f64,
    pub usage: ResourceVector,
    pub capacity: ResourceVector,
    pub iterations: usize,
    pub trace: Vec<UpgradeStep>,
    pub timing: SolveTiming,
}

impl SolutionDoc {
    pub fn new(
        solution: &Solution,
        instance: &Instance,
        capacity: &ResourceVector,
        seed: u64,
    ) -> Self {
        let instance_hash = content_hash(instance);
        let config_hash = content_hash(&(
            &instance_hash,
            &solution.selector,
            &solution.requested,
            capacity,
        ));
        SolutionDoc {
            format: SOLUTION_FORMAT.to_string(),
            provenance: Provenance { seed, config_hash },
            instance_hash,
            selector: solution.selector.clone(),
            requested: solution.requested.clone(),
            assignment: solution.assignment.clone(),
            total_axil: solution.total_axil,
            usage: solution.usage.clone(),
            capacity: capacity.clone(),
            iterations: solution.iterations,
            trace: solution.trace.clone(),
            timing: SolveTiming {
                solve_time_us: solution.solve_time.as_micros() as u64,
            },
        }
    }
}

/// One simulated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDoc {
    pub format: String,
    pub provenance: Provenance,
    pub log: MetricsLog,
}

impl RunDoc {
    pub fn new(log: MetricsLog) -> Self {
        RunDoc {
            format: RUN_FORMAT.to_string(),
            provenance: Provenance {
                seed: log.meta.scenario_seed,
                config_hash: log.meta.config_hash.clone(),
            },
            log,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub format: String,
    pub provenance: Provenance,
    pub baseline_config_hash: String,
    pub optimized_config_hash: String,
    pub comparison: RunComparison,
}

impl ReportDoc {
    pub fn new(comparison: RunComparison, baseline: &MetricsLog, optimized: &MetricsLog) -> Self {
        let (b, o) = (&baseline.meta.config_hash, &optimized.meta.config_hash);
        ReportDoc {
            format: REPORT_FORMAT.to_string(),
            provenance: Provenance {
                seed: comparison.scenario_seed,
                config_hash: content_hash(&(b, o)),
            },
            baseline_config_hash: b.clone(),
            optimized_config_hash: o.clone(),
            comparison,
        }
    }
}

/// Per-application view of an instance, as handed to the ECU that runs it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppManifest {
    pub format: String,
    pub provenance: Provenance,
    pub app: AppId,
    pub host_ecu: EcuId,
    pub modes: Vec<ModeManifest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeManifest {
    pub level: u32,
    pub axil: f64,
    pub cpu_pct: f64,
    pub mem_mb: f64,
    pub deps: Vec<ModeRef>,
    /// Every flow emitted while running at this level.
    pub flows: Vec<FlowManifest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowManifest {
    pub flow_id: u32,
    pub dst_app: AppId,
    pub dst_ecu: EcuId,
    pub target_mbps: f64,
}

pub fn app_manifests(instance: &Instance, provenance: &Provenance) -> Vec<AppManifest> {
    instance
        .apps
        .iter()
        .map(|app| AppManifest {
            format: MANIFEST_FORMAT.to_string(),
            provenance: provenance.clone(),
            app: app.id,
            host_ecu: app.host_ecu,
            modes: app
                .modes
                .iter()
                .map(|m| ModeManifest {
                    level: m.level,
                    axil: m.axil,
                    cpu_pct: m.cpu_pct,
                    mem_mb: m.mem_mb,
                    deps: m.deps.clone(),
                    flows: app
                        .flows_at(m.level)
                        .map(|f| FlowManifest {
                            flow_id: f.id.0,
                            dst_app: f.dst.app,
                            dst_ecu: instance.apps[f.dst.app.index()].host_ecu,
                            target_mbps: f.target_mbps,
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    write_text(path, &to_json(value))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| IoError::Fs {
            path: parent.display().to_string(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| IoError::Fs {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Fs {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| IoError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn check_format(path: &Path, found: &str, expected: &'static str) -> Result<(), IoError> {
    if found == expected {
        Ok(())
    } else {
        Err(IoError::Format {
            path: path.display().to_string(),
            expected,
            found: found.to_string(),
        })
    }
}

pub fn read_instance(path: &Path) -> Result<InstanceDoc, IoError> {
    let doc: InstanceDoc = read_json(path)?;
    check_format(path, &doc.format, INSTANCE_FORMAT)?;
    Ok(doc)
}

pub fn read_scenario(path: &Path) -> Result<ScenarioDoc, IoError> {
    let doc: ScenarioDoc = read_json(path)?;
    check_format(path, &doc.format, SCENARIO_FORMAT)?;
    Ok(doc)
}

pub fn read_solution(path: &Path) -> Result<SolutionDoc, IoError> {
    let doc: SolutionDoc = read_json(path)?;
    check_format(path, &doc.format, SOLUTION_FORMAT)?;
    Ok(doc)
}

pub fn read_run(path: &Path) -> Result<RunDoc, IoError> {
    let doc: RunDoc = read_json(path)?;
    check_format(path, &doc.format, RUN_FORMAT)?;
    Ok(doc)
}

/// Removes every object key starting with `timing`, recursively.
pub fn strip_timing(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.retain(|k, _| !k.starts_with("timing"));
            map.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}
