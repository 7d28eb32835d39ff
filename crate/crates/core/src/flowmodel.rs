//! Sensitive information flow models.
//!
//! For every group of trusted apps (a dominant topic, a market category, or
//! everything at once) a matrix counts how many apps exhibit each
//! (source → sink) pair. A flow is common in the group when its count
//! reaches the group threshold tau, the lower boxplot whisker of the
//! non-zero counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusFilterPolicy;
use crate::taintir::FlowPair;
use crate::topics::TopicModel;

/// Slack applied when comparing a count against tau.
pub const TAU_EPSILON: f64 = 1e-9;

/// Current model-set file version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Group key used by the single-matrix strategy.
pub const ALL_GROUP: &str = "ALL";

#[derive(Debug, Error)]
pub enum FlowModelError {
    #[error("no training apps")]
    EmptyTrainingSet,
    #[error("cannot compute a threshold over an empty set of cells")]
    EmptyCellSet,
    #[error("group key `{key}` does not fit strategy {strategy}")]
    InconsistentGroupKey {
        key: String,
        strategy: GroupingStrategy,
    },
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingStrategy {
    ByTopic,
    Single,
    ByCategory,
}

impl fmt::Display for GroupingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupingStrategy::ByTopic => "topic",
            GroupingStrategy::Single => "single",
            GroupingStrategy::ByCategory => "category",
        })
    }
}

impl FromStr for GroupingStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "topic" | "by_topic" => Ok(GroupingStrategy::ByTopic),
            "single" => Ok(GroupingStrategy::Single),
            "category" | "by_category" => Ok(GroupingStrategy::ByCategory),
            other => Err(format!(
                "unknown strategy `{other}` (topic|single|category)"
            )),
        }
    }
}

/// How the quartiles behind tau are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileMethod {
    /// Linear interpolation at index p·(n−1) of the sorted values.
    #[default]
    Interpolated,
    /// Tukey hinges: medians of the lower and upper halves, each half
    /// including the overall median when n is odd.
    TukeyHinges,
}

impl FromStr for QuantileMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "interpolated" => Ok(QuantileMethod::Interpolated),
            "tukey" | "tukey_hinges" => Ok(QuantileMethod::TukeyHinges),
            other => Err(format!(
                "unknown quantile method `{other}` (interpolated|tukey)"
            )),
        }
    }
}

fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn median(sorted: &[f64]) -> f64 {
    interpolated_quantile(sorted, 0.5)
}

/// Lower and upper quartile of the counts.
pub fn quartiles(counts: &[u32], method: QuantileMethod) -> Result<(f64, f64), FlowModelError> {
    if counts.is_empty() {
        return Err(FlowModelError::EmptyCellSet);
    }
    let mut sorted: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    sorted.sort_by(f64::total_cmp);
    Ok(match method {
        QuantileMethod::Interpolated => (
            interpolated_quantile(&sorted, 0.25),
            interpolated_quantile(&sorted, 0.75),
        ),
        QuantileMethod::TukeyHinges => {
            let n = sorted.len();
            let half = n.div_ceil(2);
            (median(&sorted[..half]), median(&sorted[n - half..]))
        }
    })
}

/// tau = Q1 − 1.5·(Q3 − Q1) over the non-zero cell counts.
pub fn compute_threshold(counts: &[u32], method: QuantileMethod) -> Result<f64, FlowModelError> {
    let (q1, q3) = quartiles(counts, method)?;
    Ok(q1 - 1.5 * (q3 - q1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Common,
    UncommonRare,
    UncommonAbsent,
}

impl FlowStatus {
    pub fn is_common(self) -> bool {
        self == FlowStatus::Common
    }

    /// The status a cell count gets against `tau`.
    pub fn of_count(count: u32, tau: f64) -> Self {
        if count == 0 {
            FlowStatus::UncommonAbsent
        } else if count as f64 >= tau - TAU_EPSILON {
            FlowStatus::Common
        } else {
            FlowStatus::UncommonRare
        }
    }
}

impl fmt::Display for FlowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowStatus::Common => "common",
            FlowStatus::UncommonRare => "uncommon_rare",
            FlowStatus::UncommonAbsent => "uncommon_absent",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub source: String,
    pub sink: String,
    pub count: u32,
}

/// App counts per (source, sink) pair for one group, with its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMatrix {
    pub group_key: String,
    /// Display label, for topic groups that have one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Number of training apps in the group.
    pub apps: usize,
    #[serde(with = "cells")]
    pub counts: BTreeMap<FlowPair, u32>,
    /// None when no app of the group has a flow.
    pub tau: Option<f64>,
}

mod cells {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<FlowPair, u32>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<MatrixCell> = m
            .iter()
            .map(|(p, &count)| MatrixCell {
                source: p.source.clone(),
                sink: p.sink.clone(),
                count,
            })
            .collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<FlowPair, u32>, D::Error> {
        let v = Vec::<MatrixCell>::deserialize(d)?;
        Ok(v.into_iter()
            .map(|c| (FlowPair::new(c.source, c.sink), c.count))
            .collect())
    }
}

impl FlowMatrix {
    pub fn count(&self, flow: &FlowPair) -> u32 {
        self.counts.get(flow).copied().unwrap_or(0)
    }

    pub fn is_common(&self, flow: &FlowPair) -> FlowStatus {
        match self.counts.get(flow) {
            None => FlowStatus::UncommonAbsent,
            Some(&c) => FlowStatus::of_count(c, self.tau.unwrap_or(f64::INFINITY)),
        }
    }

    /// Distinct source and sink groups, for tabular rendering.
    pub fn axes(&self) -> (Vec<&str>, Vec<&str>) {
        let sources: BTreeSet<&str> = self.counts.keys().map(|p| p.source.as_str()).collect();
        let sinks: BTreeSet<&str> = self.counts.keys().map(|p| p.sink.as_str()).collect();
        (sources.into_iter().collect(), sinks.into_iter().collect())
    }

    /// Source-by-sink table, zeros for absent cells.
    pub fn render_table(&self) -> String {
        let (sources, sinks) = self.axes();
        let width = sources
            .iter()
            .chain(sinks.iter())
            .map(|s| s.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let mut out = format!("{:width$}", "");
        for s in &sinks {
            out.push_str(&format!(" {s:>width$}"));
        }
        out.push('\n');
        for src in &sources {
            out.push_str(&format!("{src:width$}"));
            for snk in &sinks {
                let c = self.count(&FlowPair::new(*src, *snk));
                out.push_str(&format!(" {c:>width$}"));
            }
            out.push('\n');
        }
        out
    }
}

/// One training app: its id, group key and deduplicated flow pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppFeatures {
    pub app_id: String,
    pub group_key: String,
    pub flows: BTreeSet<FlowPair>,
}

/// Group key for a topic index.
pub fn topic_group_key(topic: usize) -> String {
    format!("topic:{topic}")
}

fn key_fits(strategy: GroupingStrategy, key: &str) -> bool {
    match strategy {
        GroupingStrategy::Single => key == ALL_GROUP,
        GroupingStrategy::ByTopic => key
            .strip_prefix("topic:")
            .is_some_and(|n| n.parse::<usize>().is_ok()),
        GroupingStrategy::ByCategory => !key.is_empty(),
    }
}

/// Count, per group, how many apps exhibit each flow, then compute each
/// group's tau.
pub fn build_matrices(
    features: &[AppFeatures],
    strategy: GroupingStrategy,
    method: QuantileMethod,
) -> Result<BTreeMap<String, FlowMatrix>, FlowModelError> {
    if features.is_empty() {
        return Err(FlowModelError::EmptyTrainingSet);
    }
    let mut matrices: BTreeMap<String, FlowMatrix> = BTreeMap::new();
    for app in features {
        if !key_fits(strategy, &app.group_key) {
            return Err(FlowModelError::InconsistentGroupKey {
                key: app.group_key.clone(),
                strategy,
            });
        }
        let m = matrices
            .entry(app.group_key.clone())
            .or_insert_with(|| FlowMatrix {
                group_key: app.group_key.clone(),
                label: None,
                apps: 0,
                counts: BTreeMap::new(),
                tau: None,
            });
        m.apps += 1;
        // the flow set is a set, so each app adds at most one per cell
        for flow in &app.flows {
            *m.counts.entry(flow.clone()).or_insert(0) += 1;
        }
    }
    for m in matrices.values_mut() {
        let values: Vec<u32> = m.counts.values().copied().collect();
        m.tau = if values.is_empty() {
            None
        } else {
            Some(compute_threshold(&values, method)?)
        };
    }
    Ok(matrices)
}

/// A learned set of flow matrices plus everything needed to route an app
/// to one of them at classification time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowModelSet {
    pub format_version: u32,
    pub strategy: GroupingStrategy,
    pub quantile_method: QuantileMethod,
    pub filter_policy: CorpusFilterPolicy,
    pub matrices: BTreeMap<String, FlowMatrix>,
    /// SHA-256 of the topic model, when present.
    pub topic_model_digest: Option<String>,
    pub topic_model: Option<TopicModel>,
}

/// Build a model set. `topic_model` must be given iff the strategy is
/// by-topic; its labels are copied onto the matching matrices.
pub fn build_model_set(
    features: &[AppFeatures],
    strategy: GroupingStrategy,
    method: QuantileMethod,
    filter_policy: CorpusFilterPolicy,
    topic_model: Option<TopicModel>,
) -> Result<FlowModelSet, FlowModelError> {
    if (strategy == GroupingStrategy::ByTopic) != topic_model.is_some() {
        return Err(FlowModelError::Format(
            "a topic model is required exactly for the topic strategy".into(),
        ));
    }
    let mut matrices = build_matrices(features, strategy, method)?;
    if let Some(tm) = &topic_model {
        for (topic, label) in &tm.topic_labels {
            if let Some(m) = matrices.get_mut(&topic_group_key(*topic)) {
                m.label = Some(label.clone());
            }
        }
    }
    Ok(FlowModelSet {
        format_version: MODEL_FORMAT_VERSION,
        strategy,
        quantile_method: method,
        filter_policy,
        matrices,
        topic_model_digest: topic_model.as_ref().map(TopicModel::digest),
        topic_model,
    })
}

impl FlowModelSet {
    /// Byte-stable JSON encoding.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model set serializes");
        s.push('\n');
        s
    }

    /// Parse and check version and topic-model digest.
    pub fn from_json(text: &str) -> Result<Self, FlowModelError> {
        let mut set: FlowModelSet =
            serde_json::from_str(text).map_err(|e| FlowModelError::Format(e.to_string()))?;
        if set.format_version != MODEL_FORMAT_VERSION {
            return Err(FlowModelError::Format(format!(
                "unsupported format version {}",
                set.format_version
            )));
        }
        if let Some(tm) = set.topic_model.as_mut() {
            tm.reindex();
        }
        let digest = set.topic_model.as_ref().map(TopicModel::digest);
        if digest != set.topic_model_digest {
            return Err(FlowModelError::Format("topic model digest mismatch".into()));
        }
        if (set.strategy == GroupingStrategy::ByTopic) != set.topic_model.is_some() {
            return Err(FlowModelError::Format(
                "topic model present/absent inconsistently with strategy".into(),
            ));
        }
        Ok(set)
    }

    pub fn matrix(&self, key: &str) -> Option<&FlowMatrix> {
        self.matrices.get(key)
    }

    /// The matrix carrying display label `label`.
    pub fn matrix_by_label(&self, label: &str) -> Option<&FlowMatrix> {
        self.matrices
            .values()
            .find(|m| m.label.as_deref() == Some(label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: &str, b: &str) -> FlowPair {
        FlowPair::new(a, b)
    }

    fn app(id: &str, key: &str, flows: &[(&str, &str)]) -> AppFeatures {
        AppFeatures {
            app_id: id.into(),
            group_key: key.into(),
            flows: flows.iter().map(|(a, b)| pair(a, b)).collect(),
        }
    }

    /// Twelve travel apps whose flow counts are 10/8/3 for GPS and 0/7/8 for
    /// Contacts over Internet/SMS/Bluetooth.
    pub(crate) fn travel_features() -> Vec<AppFeatures> {
        let mut apps = Vec::new();
        for i in 0..12 {
            let mut flows = Vec::new();
            if i < 10 {
                flows.push(("GPS", "Internet"));
            }
            if i < 8 {
                flows.push(("GPS", "SMS"));
            }
            if i < 3 {
                flows.push(("GPS", "Bluetooth"));
            }
            if i >= 5 {
                flows.push(("Contacts", "SMS"));
            }
            if i >= 4 {
                flows.push(("Contacts", "Bluetooth"));
            }
            apps.push(app(&format!("t{i}"), "topic:0", &flows));
        }
        apps
    }

    #[test]
    fn travel_matrix() {
        let m = build_matrices(
            &travel_features(),
            GroupingStrategy::ByTopic,
            QuantileMethod::Interpolated,
        )
        .unwrap()
        .remove("topic:0")
        .unwrap();
        let expect: BTreeMap<FlowPair, u32> = [
            (pair("GPS", "Internet"), 10),
            (pair("GPS", "SMS"), 8),
            (pair("GPS", "Bluetooth"), 3),
            (pair("Contacts", "SMS"), 7),
            (pair("Contacts", "Bluetooth"), 8),
        ]
        .into();
        assert_eq!(m.counts, expect);
        assert_eq!(m.apps, 12);
        assert!((m.tau.unwrap() - 5.5).abs() < 1e-9);
        assert_eq!(m.is_common(&pair("GPS", "SMS")), FlowStatus::Common);
        assert_eq!(
            m.is_common(&pair("GPS", "Bluetooth")),
            FlowStatus::UncommonRare
        );
        assert_eq!(
            m.is_common(&pair("Contacts", "Internet")),
            FlowStatus::UncommonAbsent
        );
    }

    #[test]
    fn threshold_examples() {
        let t = |v: &[u32]| compute_threshold(v, QuantileMethod::Interpolated).unwrap();
        assert!((t(&[3, 7, 8, 8, 10]) - 5.5).abs() < 1e-9);
        assert!((t(&[10, 8, 3, 7, 8]) - 5.5).abs() < 1e-9);
        assert_eq!(t(&[4, 4, 4, 4]), 4.0);
        assert_eq!(t(&[1]), 1.0);
        let h = compute_threshold(&[3, 7, 8, 8, 10], QuantileMethod::TukeyHinges).unwrap();
        assert!((h - 5.5).abs() < 1e-9);
        assert!(matches!(
            compute_threshold(&[], QuantileMethod::Interpolated),
            Err(FlowModelError::EmptyCellSet)
        ));
    }

    #[test]
    fn tukey_hinges_even_and_odd() {
        // n = 4: halves [1,2] and [3,4]
        assert_eq!(
            quartiles(&[1, 2, 3, 4], QuantileMethod::TukeyHinges).unwrap(),
            (1.5, 3.5)
        );
        // n = 5: halves [1,2,3] and [3,4,5]
        assert_eq!(
            quartiles(&[1, 2, 3, 4, 5], QuantileMethod::TukeyHinges).unwrap(),
            (2.0, 4.0)
        );
    }

    #[test]
    fn single_app_single_flow() {
        let ms = build_matrices(
            &[app("a", ALL_GROUP, &[("GPS", "Internet")])],
            GroupingStrategy::Single,
            QuantileMethod::Interpolated,
        )
        .unwrap();
        let m = &ms[ALL_GROUP];
        assert_eq!(m.counts.len(), 1);
        assert_eq!(m.tau, Some(1.0));
        assert!(m.is_common(&pair("GPS", "Internet")).is_common());
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(
            build_matrices(&[], GroupingStrategy::Single, QuantileMethod::Interpolated),
            Err(FlowModelError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn flowless_apps_still_define_groups() {
        let ms = build_matrices(
            &[app("a", "Games", &[]), app("b", "Tools", &[("GPS", "SMS")])],
            GroupingStrategy::ByCategory,
            QuantileMethod::Interpolated,
        )
        .unwrap();
        assert_eq!(ms["Games"].apps, 1);
        assert!(ms["Games"].counts.is_empty());
        assert_eq!(ms["Games"].tau, None);
        assert_eq!(
            ms["Games"].is_common(&pair("GPS", "SMS")),
            FlowStatus::UncommonAbsent
        );
    }

    #[test]
    fn inconsistent_keys_rejected() {
        assert!(matches!(
            build_matrices(
                &[app("a", "Travel", &[])],
                GroupingStrategy::ByTopic,
                QuantileMethod::Interpolated
            ),
            Err(FlowModelError::InconsistentGroupKey { .. })
        ));
        assert!(build_matrices(
            &[app("a", "topic:x", &[])],
            GroupingStrategy::ByTopic,
            QuantileMethod::Interpolated
        )
        .is_err());
        assert!(build_matrices(
            &[app("a", "topic:0", &[])],
            GroupingStrategy::Single,
            QuantileMethod::Interpolated
        )
        .is_err());
    }

    #[test]
    fn json_round_trip() {
        let set = build_model_set(
            &travel_features()
                .into_iter()
                .map(|mut a| {
                    a.group_key = ALL_GROUP.into();
                    a
                })
                .collect::<Vec<_>>(),
            GroupingStrategy::Single,
            QuantileMethod::Interpolated,
            CorpusFilterPolicy::default(),
            None,
        )
        .unwrap();
        let json = set.to_json();
        let back = FlowModelSet::from_json(&json).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.to_json(), json);
        assert!(FlowModelSet::from_json(
            &json.replace("\"format_version\": 1", "\"format_version\": 9")
        )
        .is_err());
    }

    #[test]
    fn rendered_table() {
        let m = &build_matrices(
            &travel_features(),
            GroupingStrategy::ByTopic,
            QuantileMethod::Interpolated,
        )
        .unwrap()["topic:0"];
        let t = m.render_table();
        assert!(t.contains("GPS"));
        let gps_row = t.lines().find(|l| l.starts_with("GPS")).unwrap();
        let nums: Vec<&str> = gps_row.split_whitespace().skip(1).collect();
        // sinks sort as Bluetooth, Internet, SMS
        assert_eq!(nums, ["3", "10", "8"]);
    }
}
