//! Sensitive information flow models conditioned on app descriptions.
//!
//! The learning phase fits a topic model over trusted app descriptions,
//! extracts (source → sink) permission-group flows from each trusted app's
//! program, and counts, per dominant topic, how many apps exhibit each flow.
//! The classification phase flags an app whose flows are absent from, or
//! rare in, the model of its dominant topic.

pub mod classifier;
pub mod corpus;
pub mod flowmodel;
pub mod learn;
pub mod taintir;
pub mod textproc;
pub mod topics;

pub use classifier::{
    classify, classify_batch, AnomalyReport, BatchSummary, ClassifyError, FlowVerdict, Verdict,
};
pub use corpus::{ApiCatalog, AppBundle, CorpusFilterPolicy, Provenance};
pub use flowmodel::{
    build_model_set, compute_threshold, FlowMatrix, FlowModelSet, FlowStatus, GroupingStrategy,
    QuantileMethod,
};
pub use learn::{learn, LearnConfig, LearnSummary};
pub use taintir::{parse_program, propagate_taint, FlowFact, FlowPair, ProgramIR};
pub use textproc::{LemmaDictionary, Preprocessor, StopwordSet, TokenList};
pub use topics::{dominant_topic, fit_lda, TopicDistribution, TopicModel, TopicModelParams};
