//! Classification of an app under analysis against a learned model set.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ApiCatalog, AppBundle, RejectReason};
use crate::flowmodel::{topic_group_key, FlowModelSet, FlowStatus, GroupingStrategy, ALL_GROUP};
use crate::taintir::{propagate_taint, FlowPair, TaintError, WitnessStep};
use crate::textproc::Preprocessor;
use crate::topics::dominant_topic;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("app `{app_id}` has no category but the model groups by category")]
    MissingCategory { app_id: String },
    #[error("app `{app_id}`: no trained model for group `{group}`")]
    UnknownCategory { app_id: String, group: String },
    #[error("app `{app_id}`: description rejected ({reason})")]
    FilteredDescription {
        app_id: String,
        reason: RejectReason,
    },
    #[error("app `{app_id}`: {source}")]
    Analysis {
        app_id: String,
        #[source]
        source: TaintError,
    },
    #[error("model set has no topic model")]
    MissingTopicModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Normal,
    Anomalous,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Normal => "normal",
            Verdict::Anomalous => "anomalous",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowVerdict {
    pub flow: FlowPair,
    pub status: FlowStatus,
    pub model_count: u32,
    pub tau: Option<f64>,
    pub witness: Vec<WitnessStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub app_id: String,
    pub group_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_label: Option<String>,
    pub strategy: GroupingStrategy,
    /// Uncommon flows first, each part sorted by flow.
    pub verdicts: Vec<FlowVerdict>,
    pub overall: Verdict,
    /// Labelled sends that stayed inside the app and were not reported as
    /// IPC flows.
    pub ipc_internal_suppressed: usize,
    /// Wall-clock milliseconds for the whole per-app pipeline.
    pub timing_ms: Option<u64>,
}

impl AnomalyReport {
    pub fn is_anomalous(&self) -> bool {
        self.overall == Verdict::Anomalous
    }

    pub fn uncommon(&self) -> impl Iterator<Item = &FlowVerdict> {
        self.verdicts.iter().filter(|v| !v.status.is_common())
    }

    /// Human-readable table; anomalous rows are marked with `*`.
    pub fn render(&self) -> String {
        let group = match &self.group_label {
            Some(l) => format!("{} ({l})", self.group_key),
            None => self.group_key.clone(),
        };
        let mut out = format!(
            "App: {}  group: {}  strategy: {}  verdict: {}\n",
            self.app_id, group, self.strategy, self.overall
        );
        for (i, v) in self.verdicts.iter().enumerate() {
            let mark = if v.status.is_common() { ' ' } else { '*' };
            let tau = v.tau.map_or_else(|| "-".to_string(), |t| format!("{t}"));
            out.push_str(&format!(
                "{mark}{:>3}: {:<28} {:<16} count={} tau={}\n",
                i + 1,
                v.flow.to_string(),
                v.status.to_string(),
                v.model_count,
                tau
            ));
        }
        if self.ipc_internal_suppressed > 0 {
            out.push_str(&format!(
                "  ipc_internal_suppressed: {}\n",
                self.ipc_internal_suppressed
            ));
        }
        out
    }
}

/// Classify one app: pick its group, extract its flows, and label each flow
/// against the group's matrix.
pub fn classify(
    model_set: &FlowModelSet,
    bundle: &AppBundle,
    catalog: &ApiCatalog,
    text: &Preprocessor,
) -> Result<AnomalyReport, ClassifyError> {
    let start = Instant::now();
    let app_id = bundle.app_id.clone();
    if let Some(reason) = model_set.filter_policy.check(&bundle.description, text) {
        return Err(ClassifyError::FilteredDescription { app_id, reason });
    }
    let group_key = match model_set.strategy {
        GroupingStrategy::Single => ALL_GROUP.to_string(),
        GroupingStrategy::ByCategory => {
            bundle
                .category
                .clone()
                .ok_or_else(|| ClassifyError::MissingCategory {
                    app_id: app_id.clone(),
                })?
        }
        GroupingStrategy::ByTopic => {
            let tm = model_set
                .topic_model
                .as_ref()
                .ok_or(ClassifyError::MissingTopicModel)?;
            let dist = tm.infer_distribution(&text.preprocess(&bundle.description));
            topic_group_key(dominant_topic(&dist))
        }
    };

    let analysis =
        propagate_taint(&bundle.program, catalog).map_err(|source| ClassifyError::Analysis {
            app_id: app_id.clone(),
            source,
        })?;

    let matrix = model_set.matrix(&group_key);
    if matrix.is_none() && model_set.strategy == GroupingStrategy::ByCategory {
        return Err(ClassifyError::UnknownCategory {
            app_id,
            group: group_key,
        });
    }
    let mut verdicts: Vec<FlowVerdict> = analysis
        .facts
        .iter()
        .map(|fact| {
            let flow = fact.pair();
            let (status, model_count, tau) = match matrix {
                Some(m) => (m.is_common(&flow), m.count(&flow), m.tau),
                // a topic no trusted app landed in has an empty model
                None => (FlowStatus::UncommonAbsent, 0, None),
            };
            FlowVerdict {
                flow,
                status,
                model_count,
                tau,
                witness: fact.witness.clone(),
            }
        })
        .collect();
    verdicts.sort_by(|a, b| {
        a.status
            .is_common()
            .cmp(&b.status.is_common())
            .then_with(|| a.flow.cmp(&b.flow))
    });
    let overall = if verdicts.iter().all(|v| v.status.is_common()) {
        Verdict::Normal
    } else {
        Verdict::Anomalous
    };
    Ok(AnomalyReport {
        app_id,
        group_label: matrix.and_then(|m| m.label.clone()),
        group_key,
        strategy: model_set.strategy,
        verdicts,
        overall,
        ipc_internal_suppressed: analysis.ipc_internal_suppressed.len(),
        timing_ms: Some(start.elapsed().as_millis() as u64),
    })
}

/// Mean, median and population standard deviation, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingStats {
    pub count: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub stddev_ms: f64,
}

impl TimingStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return TimingStats::default();
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[mid]
        };
        TimingStats {
            count: samples.len(),
            mean_ms: mean,
            median_ms: median,
            stddev_ms: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BatchSummary {
    pub normal: usize,
    pub anomalous: usize,
    /// (app id, error message) for apps that could not be classified.
    pub errors: Vec<(String, String)>,
    /// Per-app wall-clock time of successfully classified apps.
    pub timings_ms: Vec<f64>,
    pub timing: TimingStats,
}

/// Per-input outcome of a batch, in input order.
pub type BatchResult = Result<AnomalyReport, ClassifyError>;

/// Classify many apps. Errors are recorded per app and do not stop the
/// batch. `jobs` > 1 classifies in parallel; output order always matches
/// input order.
pub fn classify_batch(
    model_set: &FlowModelSet,
    bundles: &[AppBundle],
    catalog: &ApiCatalog,
    text: &Preprocessor,
    jobs: usize,
) -> (Vec<BatchResult>, BatchSummary) {
    let run = |b: &AppBundle| -> (BatchResult, f64) {
        let start = Instant::now();
        let r = classify(model_set, b, catalog, text);
        (r, start.elapsed().as_secs_f64() * 1000.0)
    };
    let timed: Vec<(BatchResult, f64)> = if jobs > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| bundles.par_iter().map(run).collect()),
            Err(_) => bundles.iter().map(run).collect(),
        }
    } else {
        bundles.iter().map(run).collect()
    };

    let mut summary = BatchSummary::default();
    let mut results = Vec::with_capacity(timed.len());
    for ((r, ms), b) in timed.into_iter().zip(bundles) {
        match &r {
            Ok(rep) => {
                if rep.is_anomalous() {
                    summary.anomalous += 1;
                } else {
                    summary.normal += 1;
                }
                summary.timings_ms.push(ms);
            }
            Err(e) => summary.errors.push((b.app_id.clone(), e.to_string())),
        }
        results.push(r);
    }
    summary.timing = TimingStats::from_samples(&summary.timings_ms);
    (results, summary)
}
