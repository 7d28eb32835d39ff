//! Run configuration: an optional TOML file supplies defaults, command-line
//! flags override it, and `ANFLO_SEED` is the last-resort seed.

use std::path::{Path, PathBuf};

use anflo_core::textproc::{LemmaDictionary, StopwordSet, DEFAULT_ENGLISH_THRESHOLD};
use anflo_core::topics::TopicModelParams;
use anflo_core::{ApiCatalog, CorpusFilterPolicy, GroupingStrategy, Preprocessor, QuantileMethod};
use anyhow::{anyhow, Context};
use serde::Deserialize;

use crate::Failure;

pub const SEED_ENV: &str = "ANFLO_SEED";

/// Keys accepted in a config file. Relative paths are resolved against the
/// file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub topic_labels: Option<PathBuf>,
    pub strategy: Option<String>,
    pub quantile: Option<String>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub train_iters: Option<usize>,
    pub infer_iters: Option<usize>,
    pub burn_in: Option<usize>,
    pub min_words: Option<usize>,
    pub require_english: Option<bool>,
    pub english_threshold: Option<f64>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(Failure::other)?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))
            .map_err(Failure::usage)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.corpus,
            &mut cfg.catalog,
            &mut cfg.stopwords,
            &mut cfg.lemmas,
            &mut cfg.model,
            &mut cfg.out,
            &mut cfg.topic_labels,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self, Failure> {
        path.map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
    }
}

/// Flag value if given, else the config file's.
pub fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = pick(flag, file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(anyhow!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

pub fn parse_strategy(s: Option<String>) -> Result<GroupingStrategy, Failure> {
    s.map_or(Ok(GroupingStrategy::ByTopic), |s| {
        s.parse().map_err(|e: String| Failure::usage(anyhow!(e)))
    })
}

pub fn parse_quantile(s: Option<String>) -> Result<QuantileMethod, Failure> {
    s.map_or(Ok(QuantileMethod::Interpolated), |s| {
        s.parse().map_err(|e: String| Failure::usage(anyhow!(e)))
    })
}

/// Catalog errors map to their own exit code.
pub fn load_catalog(path: Option<&Path>) -> Result<ApiCatalog, Failure> {
    match path {
        Some(p) => ApiCatalog::load(p)
            .with_context(|| format!("loading catalog {}", p.display()))
            .map_err(Failure::catalog),
        None => Ok(ApiCatalog::builtin()),
    }
}

pub fn load_preprocessor(
    stopwords: Option<&Path>,
    lemmas: Option<&Path>,
    english_threshold: Option<f64>,
) -> Result<Preprocessor, Failure> {
    let stopwords = match stopwords {
        Some(p) => StopwordSet::load(p)
            .with_context(|| format!("loading stopwords {}", p.display()))
            .map_err(Failure::other)?,
        None => StopwordSet::english_default(),
    };
    let lemmas = match lemmas {
        Some(p) => LemmaDictionary::load(p)
            .with_context(|| format!("loading lemmas {}", p.display()))
            .map_err(Failure::other)?,
        None => LemmaDictionary::english_default(),
    };
    Ok(Preprocessor {
        stopwords,
        lemmas,
        english_threshold: english_threshold.unwrap_or(DEFAULT_ENGLISH_THRESHOLD),
    })
}

pub struct TopicOverrides {
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub train_iters: Option<usize>,
    pub infer_iters: Option<usize>,
    pub burn_in: Option<usize>,
}

impl TopicOverrides {
    pub fn apply(self, seed: u64) -> Result<TopicModelParams, Failure> {
        let base = TopicModelParams::default();
        let mut p = match self.k {
            Some(k) => TopicModelParams::with_topics(k),
            None => base,
        };
        p.seed = seed;
        if let Some(a) = self.alpha {
            p.alpha = a;
        }
        if let Some(b) = self.beta {
            p.beta = b;
        }
        if let Some(n) = self.train_iters {
            p.train_iters = n;
        }
        if let Some(n) = self.infer_iters {
            p.infer_iters = n;
        }
        if let Some(n) = self.burn_in {
            p.burn_in = n;
        }
        p.validate().map_err(|e| Failure::usage(e.into()))?;
        Ok(p)
    }
}

pub fn filter_policy(
    min_words: Option<usize>,
    require_english: Option<bool>,
) -> CorpusFilterPolicy {
    let d = CorpusFilterPolicy::default();
    CorpusFilterPolicy {
        min_description_words: min_words.unwrap_or(d.min_description_words),
        require_english: require_english.unwrap_or(d.require_english),
    }
}
