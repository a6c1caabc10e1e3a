//! Evaluation-record ingestion and fixed-point normalization.
//!
//! Records arrive as JSON Lines. Every real-valued metric is scaled by 10^6
//! and rounded to an integer so the circuit can compare it against integer
//! thresholds. Missing fields are padded with fail-closed defaults.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::smiles;
use crate::SCALE;

/// Exclusive upper bound on every scaled metric (the circuit's range-check width).
pub const METRIC_BOUND: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskType {
    Binary,
    Regression,
}

impl TaskType {
    pub fn encoding(self) -> u64 {
        match self {
            TaskType::Binary => 0,
            TaskType::Regression => 1,
        }
    }

    pub fn from_encoding(v: u64) -> Option<Self> {
        match v {
            0 => Some(TaskType::Binary),
            1 => Some(TaskType::Regression),
            _ => None,
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskType::Binary => "binary",
            TaskType::Regression => "regression",
        })
    }
}

impl std::str::FromStr for TaskType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(TaskType::Binary),
            "regression" => Ok(TaskType::Regression),
            other => Err(format!("unknown task type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SafetyLabel {
    Toxic,
    NonToxic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SafetyRaw {
    Label(SafetyLabel),
    Score(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    pub molecule_id: String,
    pub smiles: Option<String>,
    pub task_id: String,
    pub task_type: TaskType,
    pub validity_flag: Option<bool>,
    pub safety: SafetyRaw,
    pub qed: f64,
    pub sas: f64,
    pub lipinski_violations: u64,
    pub similarity: f64,
}

impl EvaluationRecord {
    /// One JSON Lines row in the ingestion schema.
    pub fn to_json_line(&self) -> String {
        let mut obj = serde_json::json!({
            "molecule_id": self.molecule_id,
            "task_id": self.task_id,
            "task_type": self.task_type,
            "safety": self.safety,
            "qed": self.qed,
            "sas": self.sas,
            "lipinski_violations": self.lipinski_violations,
            "similarity": self.similarity,
        });
        if let Some(s) = &self.smiles {
            obj["smiles"] = Value::from(s.as_str());
        }
        if let Some(v) = self.validity_flag {
            obj["valid"] = Value::from(v);
        }
        obj.to_string()
    }
}

/// The six scaled metrics that form the circuit's private input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricVector {
    pub valid: u64,
    pub safe: u64,
    pub qed: u64,
    pub sas: u64,
    pub lip: u64,
    pub sim: u64,
}

impl MetricVector {
    pub const FIELD_NAMES: [&'static str; 6] = ["valid", "safe", "qed", "sas", "lip", "sim"];

    /// Metrics in commitment order.
    pub fn to_array(&self) -> [u64; 6] {
        [
            self.valid, self.safe, self.qed, self.sas, self.lip, self.sim,
        ]
    }

    pub fn from_array(a: [u64; 6]) -> Self {
        Self {
            valid: a[0],
            safe: a[1],
            qed: a[2],
            sas: a[3],
            lip: a[4],
            sim: a[5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Geq,
    Leq,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Safe,
    Qed,
    Sas,
    Lip,
    Sim,
}

/// Public thresholds, all in scaled units. Public-input order is
/// `[safe, qed, sas, lip, sim]` after the task type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub safe: u64,
    pub qed: u64,
    pub sas: u64,
    pub lip: u64,
    pub sim: u64,
}

impl ThresholdSet {
    pub fn defaults(task: TaskType) -> Self {
        Self {
            safe: match task {
                TaskType::Binary => SCALE,
                TaskType::Regression => SCALE / 2,
            },
            qed: SCALE / 2,
            sas: 6 * SCALE,
            lip: SCALE,
            sim: 4 * SCALE / 10,
        }
    }

    pub fn to_array(&self) -> [u64; 5] {
        [self.safe, self.qed, self.sas, self.lip, self.sim]
    }

    pub fn from_array(a: [u64; 5]) -> Self {
        Self {
            safe: a[0],
            qed: a[1],
            sas: a[2],
            lip: a[3],
            sim: a[4],
        }
    }

    /// Comparison applied to `metric`. Binary safety ignores `safe` and
    /// requires exactly 10^6.
    pub fn direction(metric: Metric, task: TaskType) -> Direction {
        match (metric, task) {
            (Metric::Safe, TaskType::Binary) => Direction::Eq,
            (Metric::Safe, TaskType::Regression) | (Metric::Qed, _) | (Metric::Sim, _) => {
                Direction::Geq
            }
            (Metric::Sas, _) | (Metric::Lip, _) => Direction::Leq,
        }
    }

    /// Encodes a strict `>` regression-safety threshold as `>=` one unit higher.
    pub fn with_strict_safety(mut self) -> Self {
        self.safe += 1;
        self
    }

    /// The first threshold that does not fit the comparator width, if any.
    pub fn out_of_range(&self) -> Option<(Metric, u64)> {
        [
            (Metric::Safe, self.safe),
            (Metric::Qed, self.qed),
            (Metric::Sas, self.sas),
            (Metric::Lip, self.lip),
            (Metric::Sim, self.sim),
        ]
        .into_iter()
        .find(|(_, v)| *v >= METRIC_BOUND)
    }
}

/// Partial threshold override, as accepted by `--thresholds`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdOverrides {
    pub safe: Option<u64>,
    pub qed: Option<u64>,
    pub sas: Option<u64>,
    pub lip: Option<u64>,
    pub sim: Option<u64>,
}

impl ThresholdOverrides {
    pub fn apply(&self, base: ThresholdSet) -> ThresholdSet {
        ThresholdSet {
            safe: self.safe.unwrap_or(base.safe),
            qed: self.qed.unwrap_or(base.qed),
            sas: self.sas.unwrap_or(base.sas),
            lip: self.lip.unwrap_or(base.lip),
            sim: self.sim.unwrap_or(base.sim),
        }
    }
}

/// Threshold sets for both task types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdProfile {
    pub binary: ThresholdSet,
    pub regression: ThresholdSet,
}

impl Default for ThresholdProfile {
    fn default() -> Self {
        Self {
            binary: ThresholdSet::defaults(TaskType::Binary),
            regression: ThresholdSet::defaults(TaskType::Regression),
        }
    }
}

impl ThresholdProfile {
    pub fn with_overrides(o: &ThresholdOverrides) -> Self {
        let d = Self::default();
        Self {
            binary: o.apply(d.binary),
            regression: o.apply(d.regression),
        }
    }

    pub fn for_task(&self, task: TaskType) -> &ThresholdSet {
        match task {
            TaskType::Binary => &self.binary,
            TaskType::Regression => &self.regression,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineNote {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    #[serde(skip)]
    pub records: Vec<EvaluationRecord>,
    pub rejects: Vec<LineNote>,
    pub warnings: Vec<LineNote>,
    /// Non-blank input lines seen.
    pub lines: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("failed to read records: {0}")]
    Io(#[from] std::io::Error),
    #[error("no usable records ({} rejected)", rejects.len())]
    Empty { rejects: Vec<LineNote> },
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    molecule_id: Option<String>,
    task_id: Option<String>,
    task_type: Option<String>,
    smiles: Option<String>,
    valid: Option<bool>,
    safety: Option<Value>,
    qed: Option<f64>,
    sas: Option<f64>,
    lipinski_violations: Option<Value>,
    similarity: Option<f64>,
}

const DEFAULT_QED: f64 = 0.0;
const DEFAULT_SAS: f64 = 10.0;
const DEFAULT_LIPINSKI: u64 = 99;
const DEFAULT_SIMILARITY: f64 = 0.0;

fn in_unit(name: &str, v: f64, lo: f64, hi: f64) -> Result<f64, String> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{name} = {v} outside [{lo}, {hi}]"))
    }
}

fn parse_line(text: &str, warnings: &mut Vec<String>) -> Result<EvaluationRecord, String> {
    let raw: RawRecord = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let molecule_id = raw.molecule_id.ok_or("missing molecule_id")?;
    let task_id = raw.task_id.ok_or("missing task_id")?;
    let task_type: TaskType = raw.task_type.ok_or("missing task_type")?.parse()?;
    // Metrics of a molecule already known to be invalid are never evaluated,
    // so their absence is expected rather than suspicious.
    let quiet = raw.valid == Some(false);
    let mut defaulted = |field: &str, value: &dyn fmt::Display| {
        if !quiet {
            warnings.push(format!("{field} missing, defaulted to {value}"));
        }
    };

    let safety = match raw.safety {
        None => {
            defaulted("safety", &"toxic");
            SafetyRaw::Label(SafetyLabel::Toxic)
        }
        Some(Value::String(s)) => match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "toxic" => SafetyRaw::Label(SafetyLabel::Toxic),
            "non-toxic" | "nontoxic" => SafetyRaw::Label(SafetyLabel::NonToxic),
            _ => return Err(format!("unknown safety label {s:?}")),
        },
        Some(Value::Number(n)) => {
            let v = n.as_f64().ok_or("safety is not a finite number")?;
            SafetyRaw::Score(in_unit("safety", v, 0.0, 1.0)?)
        }
        Some(other) => return Err(format!("safety must be a label or number, got {other}")),
    };
    let qed = match raw.qed {
        Some(v) => in_unit("qed", v, 0.0, 1.0)?,
        None => {
            defaulted("qed", &DEFAULT_QED);
            DEFAULT_QED
        }
    };
    let sas = match raw.sas {
        Some(v) => in_unit("sas", v, 1.0, 10.0)?,
        None => {
            defaulted("sas", &DEFAULT_SAS);
            DEFAULT_SAS
        }
    };
    let similarity = match raw.similarity {
        Some(v) => in_unit("similarity", v, 0.0, 1.0)?,
        None => {
            defaulted("similarity", &DEFAULT_SIMILARITY);
            DEFAULT_SIMILARITY
        }
    };
    let lipinski_violations = match raw.lipinski_violations {
        None => {
            defaulted("lipinski_violations", &DEFAULT_LIPINSKI);
            DEFAULT_LIPINSKI
        }
        Some(v) => v.as_u64().ok_or_else(|| {
            format!("lipinski_violations must be a non-negative integer, got {v}")
        })?,
    };

    Ok(EvaluationRecord {
        molecule_id,
        smiles: raw.smiles,
        task_id,
        task_type,
        validity_flag: raw.valid,
        safety,
        qed,
        sas,
        lipinski_violations,
        similarity,
    })
}

/// Reads JSON Lines records. Malformed or out-of-range lines are collected
/// as rejects; only an unreadable source or an empty result is an error.
pub fn load_records<R: BufRead>(source: R) -> Result<LoadReport, LoadError> {
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        report.lines += 1;
        let lineno = idx + 1;
        let mut notes = Vec::new();
        match parse_line(text, &mut notes) {
            Ok(rec) => {
                if !seen.insert((rec.molecule_id.clone(), rec.task_id.clone())) {
                    report.rejects.push(LineNote {
                        line: lineno,
                        message: format!(
                            "duplicate record for molecule {:?} in task {:?}",
                            rec.molecule_id, rec.task_id
                        ),
                    });
                    continue;
                }
                for m in notes {
                    log::warn!("line {lineno}: {m}");
                    report.warnings.push(LineNote {
                        line: lineno,
                        message: m,
                    });
                }
                report.records.push(rec);
            }
            Err(message) => report.rejects.push(LineNote {
                line: lineno,
                message,
            }),
        }
    }
    if report.records.is_empty() {
        return Err(LoadError::Empty {
            rejects: report.rejects,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NormalizeError {
    #[error("{field} scales to {scaled}, outside [0, 2^32)")]
    Overflow { field: &'static str, scaled: f64 },
}

fn scale(field: &'static str, raw: f64) -> Result<u64, NormalizeError> {
    let scaled = (raw * SCALE as f64).round();
    if scaled.is_finite() && scaled >= 0.0 && scaled < METRIC_BOUND as f64 {
        Ok(scaled as u64)
    } else {
        Err(NormalizeError::Overflow { field, scaled })
    }
}

/// Converts a record into the circuit's fixed-point metric vector.
pub fn normalize(record: &EvaluationRecord) -> Result<MetricVector, NormalizeError> {
    let valid = match (record.validity_flag, &record.smiles) {
        (Some(flag), _) => flag as u64,
        (None, Some(s)) => smiles::validate(s).valid as u64,
        (None, None) => 0,
    };
    let safe = match record.safety {
        SafetyRaw::Label(SafetyLabel::Toxic) => 0,
        SafetyRaw::Label(SafetyLabel::NonToxic) => SCALE,
        SafetyRaw::Score(x) => scale("safety", x)?,
    };
    let lip = record
        .lipinski_violations
        .checked_mul(SCALE)
        .filter(|v| *v < METRIC_BOUND)
        .ok_or(NormalizeError::Overflow {
            field: "lipinski_violations",
            scaled: record.lipinski_violations as f64 * SCALE as f64,
        })?;
    Ok(MetricVector {
        valid,
        safe,
        qed: scale("qed", record.qed)?,
        sas: scale("sas", record.sas)?,
        lip,
        sim: scale("similarity", record.similarity)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrecheckReport {
    pub checks: Vec<Check>,
}

impl PrecheckReport {
    /// No check failed. Warnings do not count.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Warn)
    }
}

/// Range and consistency checks on a normalized vector. Never fails; all
/// findings are in the report.
pub fn precheck(v: &MetricVector, task: TaskType) -> PrecheckReport {
    let range = |name: &'static str, value: u64, lo: u64, hi: u64| {
        let ok = (lo..=hi).contains(&value);
        Check {
            name,
            status: if ok {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: format!("{value} in [{lo}, {hi}]"),
        }
    };
    let mut checks = vec![
        range("valid_range", v.valid, 0, 1),
        range("safe_range", v.safe, 0, SCALE),
        range("qed_range", v.qed, 0, SCALE),
        range("sas_range", v.sas, SCALE, 10 * SCALE),
        Check {
            name: "lip_range",
            status: if v.lip.is_multiple_of(SCALE) && v.lip < METRIC_BOUND {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: format!("{} is a whole count of 10^6 below 2^32", v.lip),
        },
        range("sim_range", v.sim, 0, SCALE),
    ];

    // Zero or the fail-closed default means "not evaluated".
    let downstream = [v.safe, v.qed, v.sim].iter().any(|x| *x != 0)
        || (v.sas != 0 && v.sas != 10 * SCALE)
        || (v.lip != 0 && v.lip != DEFAULT_LIPINSKI * SCALE);
    checks.push(Check {
        name: "invalid_with_metrics",
        status: if v.valid == 0 && downstream {
            CheckStatus::Warn
        } else {
            CheckStatus::Pass
        },
        detail: "metrics of an invalid molecule should not have been evaluated".into(),
    });
    checks.push(Check {
        name: "binary_safety_label",
        status: if task == TaskType::Binary && v.safe != 0 && v.safe != SCALE {
            CheckStatus::Warn
        } else {
            CheckStatus::Pass
        },
        detail: "binary tasks carry a class label (0 or 10^6)".into(),
    });
    PrecheckReport { checks }
}
