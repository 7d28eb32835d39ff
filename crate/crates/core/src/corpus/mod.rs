//! App bundles, the API catalog, and corpus filtering.
//!
//! A bundle file holds one app:
//!
//! ```text
//! @id com.example.besttravel
//! @category Travel
//! @description
//! The ultimate and most convenient way of traveling. ...
//! @program
//! component Main public {
//!     loc = source getLastKnownLocation
//!     sink openConnection(loc)
//! }
//! ```

mod catalog;

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taintir::{parse_program, ProgramIR, TaintError};
use crate::textproc::Preprocessor;

pub use catalog::{ApiCatalog, ApiEntry, ApiRole, IPC_GROUP};

/// File extension of bundle files inside a corpus directory.
pub const BUNDLE_EXTENSION: &str = "app";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed bundle {path}: {message}")]
    MalformedBundle { path: String, message: String },
    #[error("malformed bundle {path}: {source}")]
    MalformedProgram {
        path: String,
        #[source]
        source: TaintError,
    },
    #[error("duplicate app id `{app_id}` ({path})")]
    DuplicateAppId { app_id: String, path: String },
    #[error("catalog line {line}: {message}")]
    MalformedCatalog { line: usize, message: String },
    #[error("catalog line {line}: api `{api}` defined twice")]
    DuplicateApi { api: String, line: usize },
    #[error("catalog has no `IPC` entry with role `both`")]
    MissingIpcPseudoGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Trusted,
    UnderAnalysis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppBundle {
    pub app_id: String,
    pub description: String,
    pub category: Option<String>,
    pub program: ProgramIR,
    pub provenance: Provenance,
}

impl AppBundle {
    /// Render in the bundle file format.
    pub fn to_bundle_text(&self) -> String {
        let mut out = format!("@id {}\n", self.app_id);
        if let Some(cat) = &self.category {
            out.push_str(&format!("@category {cat}\n"));
        }
        out.push_str("@description\n");
        if !self.description.is_empty() {
            out.push_str(&self.description);
            out.push('\n');
        }
        out.push_str("@program\n");
        out.push_str(&self.program.to_string());
        out
    }
}

/// Parse bundle text. `origin` is only used in error messages.
pub fn parse_bundle(
    text: &str,
    origin: &str,
    provenance: Provenance,
) -> Result<AppBundle, CorpusError> {
    let malformed = |message: String| CorpusError::MalformedBundle {
        path: origin.to_string(),
        message,
    };
    let mut id = None;
    let mut category = None;
    let mut description: Option<String> = None;
    let mut program_text: Option<String> = None;
    let mut current: Option<(String, Vec<&str>)> = None;
    let mut sections: Vec<(String, Vec<&str>)> = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('@') {
            if let Some(done) = current.take() {
                sections.push(done);
            }
            let (name, inline) = match rest.split_once(char::is_whitespace) {
                Some((n, r)) => (n, r),
                None => (rest, ""),
            };
            let mut body = Vec::new();
            if !inline.trim().is_empty() {
                body.push(inline);
            }
            current = Some((name.to_string(), body));
        } else if let Some((_, body)) = current.as_mut() {
            body.push(line);
        } else if !line.trim().is_empty() {
            return Err(malformed("content before the first section".into()));
        }
    }
    if let Some(done) = current.take() {
        sections.push(done);
    }

    let mut seen = HashSet::new();
    for (name, body) in sections {
        if !seen.insert(name.clone()) {
            return Err(malformed(format!("duplicate section @{name}")));
        }
        let joined = body.join("\n");
        match name.as_str() {
            "id" | "category" => {
                let value = joined.trim();
                if value.is_empty() || value.contains(char::is_whitespace) {
                    return Err(malformed(format!(
                        "@{name} must be a single non-empty word"
                    )));
                }
                if name == "id" {
                    id = Some(value.to_string());
                } else {
                    category = Some(value.to_string());
                }
            }
            "description" => description = Some(joined.trim().to_string()),
            "program" => program_text = Some(joined),
            other => return Err(malformed(format!("unknown section @{other}"))),
        }
    }
    let app_id = id.ok_or_else(|| malformed("missing @id".into()))?;
    let description = description.ok_or_else(|| malformed("missing @description".into()))?;
    let program = match program_text {
        Some(t) => parse_program(&t).map_err(|source| CorpusError::MalformedProgram {
            path: origin.to_string(),
            source,
        })?,
        None => ProgramIR::default(),
    };
    Ok(AppBundle {
        app_id,
        description,
        category,
        program,
        provenance,
    })
}

pub fn load_bundle(path: &Path, provenance: Provenance) -> Result<AppBundle, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_bundle(&text, &path.display().to_string(), provenance)
}

/// Every `*.app` file under `dir`, sorted by path.
pub fn bundle_paths(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut paths = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: dir.display().to_string(),
            source: e.into(),
        })?;
        let path = entry.path();
        if entry.file_type().is_file()
            && path.extension().and_then(|e| e.to_str()) == Some(BUNDLE_EXTENSION)
        {
            paths.push(path.to_path_buf());
        }
    }
    Ok(paths)
}

/// Load every bundle under `dir`. App ids must be unique.
pub fn load_corpus(dir: &Path, provenance: Provenance) -> Result<Vec<AppBundle>, CorpusError> {
    let mut seen = HashSet::new();
    let mut bundles = Vec::new();
    for path in bundle_paths(dir)? {
        let bundle = load_bundle(&path, provenance)?;
        if !seen.insert(bundle.app_id.clone()) {
            return Err(CorpusError::DuplicateAppId {
                app_id: bundle.app_id,
                path: path.display().to_string(),
            });
        }
        bundles.push(bundle);
    }
    Ok(bundles)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusFilterPolicy {
    pub min_description_words: usize,
    pub require_english: bool,
}

impl Default for CorpusFilterPolicy {
    fn default() -> Self {
        CorpusFilterPolicy {
            min_description_words: 10,
            require_english: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    TooShort,
    NonEnglish,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::TooShort => "too_short",
            RejectReason::NonEnglish => "non_english",
        })
    }
}

impl CorpusFilterPolicy {
    /// Why a description would be rejected, if at all. Word count is taken
    /// over raw whitespace-separated tokens.
    pub fn check(&self, description: &str, text: &Preprocessor) -> Option<RejectReason> {
        if description.split_whitespace().count() < self.min_description_words {
            return Some(RejectReason::TooShort);
        }
        if self.require_english && !text.is_english(description) {
            return Some(RejectReason::NonEnglish);
        }
        None
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<AppBundle>,
    pub rejected: Vec<(String, RejectReason)>,
}

/// Split bundles into kept and rejected, preserving input order.
pub fn filter_corpus(
    bundles: Vec<AppBundle>,
    policy: &CorpusFilterPolicy,
    text: &Preprocessor,
) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for b in bundles {
        match policy.check(&b.description, text) {
            None => out.kept.push(b),
            Some(reason) => out.rejected.push((b.app_id, reason)),
        }
    }
    out
}
