//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling.
//!
//! All randomness comes from a ChaCha8 generator seeded with
//! [`TopicModelParams::seed`], so a fit is a pure function of the document
//! order and the parameters.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::textproc::TokenList;

/// Mixed into the seed for held-out inference so it does not replay the
/// training stream.
const INFER_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopicError {
    #[error("no non-empty documents to fit")]
    EmptyCorpus,
    #[error("invalid topic model parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopicModelParams {
    /// Number of topics.
    pub k: usize,
    /// Symmetric document–topic prior.
    pub alpha: f64,
    /// Symmetric topic–word prior.
    pub beta: f64,
    pub train_iters: usize,
    pub infer_iters: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl TopicModelParams {
    /// Defaults for `k` topics: alpha = 50/k, beta = 0.01.
    pub fn with_topics(k: usize) -> Self {
        TopicModelParams {
            k,
            alpha: 50.0 / k.max(1) as f64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TopicError> {
        let bad = |m: &str| Err(TopicError::InvalidParams(m.to_string()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if self.train_iters <= self.burn_in {
            return bad("train_iters must exceed burn_in");
        }
        if self.infer_iters <= self.burn_in {
            return bad("infer_iters must exceed burn_in");
        }
        Ok(())
    }
}

impl Default for TopicModelParams {
    fn default() -> Self {
        TopicModelParams {
            k: 30,
            alpha: 50.0 / 30.0,
            beta: 0.01,
            train_iters: 1000,
            infer_iters: 100,
            burn_in: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicModel {
    /// Vocabulary in index order.
    pub vocabulary: Vec<String>,
    /// K×V word counts per topic.
    pub topic_word_counts: Vec<Vec<u32>>,
    pub topic_totals: Vec<u64>,
    pub params: TopicModelParams,
    /// Optional display names, used only in reports.
    #[serde(default)]
    pub topic_labels: BTreeMap<usize, String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl PartialEq for TopicModel {
    fn eq(&self, other: &Self) -> bool {
        self.vocabulary == other.vocabulary
            && self.topic_word_counts == other.topic_word_counts
            && self.topic_totals == other.topic_totals
            && self.params == other.params
            && self.topic_labels == other.topic_labels
    }
}

/// Probability vector over the K topics of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution {
    pub probs: Vec<f64>,
}

impl TopicDistribution {
    pub fn uniform(k: usize) -> Self {
        TopicDistribution {
            probs: vec![1.0 / k as f64; k],
        }
    }
}

/// Argmax with ties going to the smallest index.
pub fn dominant_topic(dist: &TopicDistribution) -> usize {
    let mut best = 0;
    for (k, &p) in dist.probs.iter().enumerate() {
        if p > dist.probs[best] {
            best = k;
        }
    }
    best
}

fn sample_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Fit LDA on `docs` with collapsed Gibbs sampling.
pub fn fit_lda(docs: &[TokenList], params: TopicModelParams) -> Result<TopicModel, TopicError> {
    params.validate()?;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut vocabulary = Vec::new();
    let encoded: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| {
            d.tokens()
                .iter()
                .map(|w| {
                    *index.entry(w.clone()).or_insert_with(|| {
                        vocabulary.push(w.clone());
                        vocabulary.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    if vocabulary.is_empty() {
        return Err(TopicError::EmptyCorpus);
    }

    let k = params.k;
    let v = vocabulary.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut topic_word = vec![vec![0u32; v]; k];
    let mut topic_totals = vec![0u64; k];
    let mut doc_topic: Vec<Vec<u32>> = vec![vec![0; k]; encoded.len()];
    let mut assignments: Vec<Vec<usize>> = Vec::with_capacity(encoded.len());
    for (d, words) in encoded.iter().enumerate() {
        let mut z = Vec::with_capacity(words.len());
        for &w in words {
            let t = rng.gen_range(0..k);
            z.push(t);
            topic_word[t][w] += 1;
            topic_totals[t] += 1;
            doc_topic[d][t] += 1;
        }
        assignments.push(z);
    }

    let vbeta = v as f64 * params.beta;
    let mut weights = vec![0.0; k];
    for _ in 0..params.train_iters {
        for (d, words) in encoded.iter().enumerate() {
            for (i, &w) in words.iter().enumerate() {
                let old = assignments[d][i];
                topic_word[old][w] -= 1;
                topic_totals[old] -= 1;
                doc_topic[d][old] -= 1;
                for (t, weight) in weights.iter_mut().enumerate() {
                    *weight = (doc_topic[d][t] as f64 + params.alpha)
                        * (topic_word[t][w] as f64 + params.beta)
                        / (topic_totals[t] as f64 + vbeta);
                }
                let new = sample_index(&mut rng, &weights);
                assignments[d][i] = new;
                topic_word[new][w] += 1;
                topic_totals[new] += 1;
                doc_topic[d][new] += 1;
            }
        }
    }

    Ok(TopicModel {
        vocabulary,
        topic_word_counts: topic_word,
        topic_totals,
        params,
        topic_labels: BTreeMap::new(),
        index,
    })
}

impl TopicModel {
    pub fn k(&self) -> usize {
        self.params.k
    }

    /// Rebuild the word index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
    }

    pub fn word_index(&self, word: &str) -> Option<usize> {
        if self.index.is_empty() && !self.vocabulary.is_empty() {
            return self.vocabulary.iter().position(|w| w == word);
        }
        self.index.get(word).copied()
    }

    /// Smoothed p(word | topic).
    pub fn word_probability(&self, topic: usize, word: usize) -> f64 {
        let v = self.vocabulary.len() as f64;
        (self.topic_word_counts[topic][word] as f64 + self.params.beta)
            / (self.topic_totals[topic] as f64 + v * self.params.beta)
    }

    /// The `n` highest-count words of `topic`, ties broken by vocabulary order.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<(&str, u32)> {
        let counts = &self.topic_word_counts[topic];
        let mut idx: Vec<usize> = (0..counts.len()).collect();
        idx.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
        idx.into_iter()
            .take(n)
            .map(|i| (self.vocabulary[i].as_str(), counts[i]))
            .collect()
    }

    pub fn label(&self, topic: usize) -> Option<&str> {
        self.topic_labels.get(&topic).map(String::as_str)
    }

    /// Assign display labels from anchor words: each label goes to the
    /// unlabelled topic that gives its anchors the highest total probability.
    /// Anchors must already be in pre-processed form.
    pub fn assign_labels(&mut self, labels: &[(String, Vec<String>)]) {
        self.topic_labels.clear();
        for (label, anchors) in labels {
            let ids: Vec<usize> = anchors.iter().filter_map(|a| self.word_index(a)).collect();
            if ids.is_empty() {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for topic in 0..self.k() {
                if self.topic_labels.contains_key(&topic) {
                    continue;
                }
                let score: f64 = ids.iter().map(|&w| self.word_probability(topic, w)).sum();
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((topic, score));
                }
            }
            if let Some((topic, _)) = best {
                self.topic_labels.insert(topic, label.clone());
            }
        }
    }

    /// Infer the topic mixture of an unseen document with the topic–word
    /// counts held fixed. Out-of-vocabulary tokens are skipped; a document
    /// with no known tokens gets the uniform distribution.
    pub fn infer_distribution(&self, doc: &TokenList) -> TopicDistribution {
        let k = self.k();
        let words: Vec<usize> = doc
            .tokens()
            .iter()
            .filter_map(|w| self.word_index(w))
            .collect();
        if words.is_empty() {
            return TopicDistribution::uniform(k);
        }
        let p = &self.params;
        let vbeta = self.vocabulary.len() as f64 * p.beta;
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ INFER_SEED_SALT);
        let mut counts = vec![0u32; k];
        let mut z: Vec<usize> = words
            .iter()
            .map(|_| {
                let t = rng.gen_range(0..k);
                counts[t] += 1;
                t
            })
            .collect();
        let mut accum = vec![0.0f64; k];
        let mut samples = 0usize;
        let mut weights = vec![0.0; k];
        for sweep in 0..p.infer_iters {
            for (i, &w) in words.iter().enumerate() {
                counts[z[i]] -= 1;
                for (t, weight) in weights.iter_mut().enumerate() {
                    *weight = (counts[t] as f64 + p.alpha)
                        * (self.topic_word_counts[t][w] as f64 + p.beta)
                        / (self.topic_totals[t] as f64 + vbeta);
                }
                z[i] = sample_index(&mut rng, &weights);
                counts[z[i]] += 1;
            }
            if sweep >= p.burn_in {
                for (a, &c) in accum.iter_mut().zip(&counts) {
                    *a += c as f64;
                }
                samples += 1;
            }
        }
        let mut probs: Vec<f64> = accum
            .iter()
            .map(|&a| a / samples as f64 + p.alpha)
            .collect();
        let total: f64 = probs.iter().sum();
        for x in &mut probs {
            *x /= total;
        }
        TopicDistribution { probs }
    }

    /// SHA-256 over the canonical JSON encoding of the model.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("topic model serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
