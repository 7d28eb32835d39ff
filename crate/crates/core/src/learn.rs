//! Learning phase: trusted bundles in, flow model set out.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{filter_corpus, ApiCatalog, AppBundle, CorpusFilterPolicy, RejectReason};
use crate::flowmodel::{
    build_model_set, topic_group_key, AppFeatures, FlowModelError, FlowModelSet, GroupingStrategy,
    QuantileMethod, ALL_GROUP,
};
use crate::taintir::{propagate_taint, TaintError};
use crate::textproc::{Preprocessor, TokenList};
use crate::topics::{dominant_topic, fit_lda, TopicError, TopicModelParams};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("no trusted app survived filtering")]
    EmptyFilteredCorpus,
    #[error("trusted app `{app_id}`: {source}")]
    Analysis {
        app_id: String,
        #[source]
        source: TaintError,
    },
    #[error(transparent)]
    Topics(#[from] TopicError),
    #[error(transparent)]
    FlowModel(#[from] FlowModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    pub strategy: GroupingStrategy,
    pub topic_params: TopicModelParams,
    pub filter_policy: CorpusFilterPolicy,
    pub quantile_method: QuantileMethod,
    /// (display label, anchor words) used to name topics.
    pub topic_labels: Vec<(String, Vec<String>)>,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            strategy: GroupingStrategy::ByTopic,
            topic_params: TopicModelParams::default(),
            filter_policy: CorpusFilterPolicy::default(),
            quantile_method: QuantileMethod::Interpolated,
            topic_labels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group_key: String,
    pub label: Option<String>,
    pub apps: usize,
    pub distinct_flows: usize,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LearnSummary {
    pub loaded: usize,
    pub rejected: Vec<(String, RejectReason)>,
    /// Apps left out of category grouping because they have no category.
    pub uncategorized: Vec<String>,
    /// app id → group key.
    pub assignments: BTreeMap<String, String>,
    pub groups: Vec<GroupSummary>,
}

/// Parse a topic label file: `<Label> <anchor> [<anchor>...]` per line.
/// Anchors are run through the same pre-processing as descriptions.
pub fn parse_topic_labels(text: &str, pre: &Preprocessor) -> Vec<(String, Vec<String>)> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .filter_map(|l| {
            let mut parts = l.split_whitespace();
            let label = parts.next()?.to_string();
            let anchors: Vec<String> = parts.flat_map(|w| pre.preprocess(w).0).collect();
            Some((label, anchors))
        })
        .collect()
}

/// Filter the corpus, extract flows, group apps and build the model set.
pub fn learn(
    bundles: Vec<AppBundle>,
    catalog: &ApiCatalog,
    text: &Preprocessor,
    config: &LearnConfig,
) -> Result<(FlowModelSet, LearnSummary), LearnError> {
    let mut summary = LearnSummary {
        loaded: bundles.len(),
        ..Default::default()
    };
    let filtered = filter_corpus(bundles, &config.filter_policy, text);
    summary.rejected = filtered.rejected;
    let mut kept = filtered.kept;
    if config.strategy == GroupingStrategy::ByCategory {
        let (with, without): (Vec<_>, Vec<_>) =
            kept.into_iter().partition(|b| b.category.is_some());
        summary.uncategorized = without.into_iter().map(|b| b.app_id).collect();
        kept = with;
    }
    if kept.is_empty() {
        return Err(LearnError::EmptyFilteredCorpus);
    }

    let mut flows = Vec::with_capacity(kept.len());
    for b in &kept {
        let analysis =
            propagate_taint(&b.program, catalog).map_err(|source| LearnError::Analysis {
                app_id: b.app_id.clone(),
                source,
            })?;
        flows.push(analysis.pairs());
    }

    let (keys, topic_model) = match config.strategy {
        GroupingStrategy::Single => (vec![ALL_GROUP.to_string(); kept.len()], None),
        GroupingStrategy::ByCategory => (
            kept.iter()
                .map(|b| b.category.clone().expect("partitioned above"))
                .collect(),
            None,
        ),
        GroupingStrategy::ByTopic => {
            let docs: Vec<TokenList> = kept
                .iter()
                .map(|b| text.preprocess(&b.description))
                .collect();
            let mut model = fit_lda(&docs, config.topic_params)?;
            model.assign_labels(&config.topic_labels);
            let keys = docs
                .iter()
                .map(|d| topic_group_key(dominant_topic(&model.infer_distribution(d))))
                .collect();
            (keys, Some(model))
        }
    };

    let features: Vec<AppFeatures> = kept
        .iter()
        .zip(keys)
        .zip(flows)
        .map(|((b, group_key), flows)| AppFeatures {
            app_id: b.app_id.clone(),
            group_key,
            flows,
        })
        .collect();
    summary.assignments = features
        .iter()
        .map(|f| (f.app_id.clone(), f.group_key.clone()))
        .collect();
    let set = build_model_set(
        &features,
        config.strategy,
        config.quantile_method,
        config.filter_policy,
        topic_model,
    )?;
    summary.groups = set
        .matrices
        .values()
        .map(|m| GroupSummary {
            group_key: m.group_key.clone(),
            label: m.label.clone(),
            apps: m.apps,
            distinct_flows: m.counts.len(),
            tau: m.tau,
        })
        .collect();
    Ok((set, summary))
}
