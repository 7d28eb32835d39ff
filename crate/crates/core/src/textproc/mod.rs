//! Description pre-processing: tokenization, English detection, stopword
//! removal, lemmatization and stemming.

mod porter;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use porter::stem;

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const DEFAULT_LEMMAS: &str = include_str!("../../data/lemmas.txt");

/// Minimum stopword-hit ratio for a text to count as English.
pub const DEFAULT_ENGLISH_THRESHOLD: f64 = 0.05;

/// Bound on re-applying lemmatize+stem until a token stops changing.
const MAX_NORMALIZE_ROUNDS: usize = 16;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lemma dictionary line {line}: expected `<word> <base>`")]
    MalformedLemma { line: usize },
    #[error("lemma dictionary: `{word}` maps to both `{first}` and `{second}`")]
    ConflictingLemma {
        word: String,
        first: String,
        second: String,
    },
    #[error("lemma dictionary: base form `{base}` is not a fixed point (it maps to `{maps_to}`)")]
    BaseNotFixedPoint { base: String, maps_to: String },
}

/// A cleaned, ordered token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenList(pub Vec<String>);

impl TokenList {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Space-joined rendering.
    pub fn render(&self) -> String {
        self.0.join(" ")
    }
}

impl From<Vec<String>> for TokenList {
    fn from(v: Vec<String>) -> Self {
        TokenList(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordSet {
    words: BTreeSet<String>,
}

impl StopwordSet {
    /// Parse a stopword file: one word per line, `#` comments, blank lines ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        StopwordSet { words }
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        Ok(Self::parse(&read(path)?))
    }

    pub fn english_default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Many-to-one word → base form mapping. Base forms are fixed points.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LemmaDictionary {
    mapping: BTreeMap<String, String>,
}

impl LemmaDictionary {
    pub fn parse(text: &str) -> Result<Self, TextError> {
        let mut mapping: BTreeMap<String, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [word, base] = parts[..] else {
                return Err(TextError::MalformedLemma { line: i + 1 });
            };
            let (word, base) = (word.to_lowercase(), base.to_lowercase());
            if let Some(prev) = mapping.get(&word) {
                if *prev != base {
                    return Err(TextError::ConflictingLemma {
                        word,
                        first: prev.clone(),
                        second: base,
                    });
                }
            }
            mapping.insert(word, base);
        }
        Self::from_map(mapping)
    }

    pub fn from_map(mapping: BTreeMap<String, String>) -> Result<Self, TextError> {
        for base in mapping.values() {
            if let Some(target) = mapping.get(base) {
                if target != base {
                    return Err(TextError::BaseNotFixedPoint {
                        base: base.clone(),
                        maps_to: target.clone(),
                    });
                }
            }
        }
        Ok(LemmaDictionary { mapping })
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        Self::parse(&read(path)?)
    }

    pub fn english_default() -> Self {
        Self::parse(DEFAULT_LEMMAS).expect("shipped lemma dictionary is valid")
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.mapping.get(word).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }
}

fn read(path: &Path) -> Result<String, TextError> {
    fs::read_to_string(path).map_err(|source| TextError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn fold_char(c: char, out: &mut String) {
    let folded = match c {
        'à' | 'á' | 'â' | 'ã' | 'ä' | 'å' | 'ā' | 'ă' | 'ą' => "a",
        'æ' => "ae",
        'ç' | 'ć' | 'č' => "c",
        'ď' | 'đ' => "d",
        'è' | 'é' | 'ê' | 'ë' | 'ē' | 'ė' | 'ę' | 'ě' => "e",
        'ì' | 'í' | 'î' | 'ï' | 'ī' | 'į' => "i",
        'ł' | 'ľ' | 'ĺ' => "l",
        'ñ' | 'ń' | 'ň' => "n",
        'ò' | 'ó' | 'ô' | 'õ' | 'ö' | 'ø' | 'ō' | 'ő' => "o",
        'œ' => "oe",
        'ř' | 'ŕ' => "r",
        'ś' | 'š' | 'ş' => "s",
        'ß' => "ss",
        'ť' | 'ţ' => "t",
        'ù' | 'ú' | 'û' | 'ü' | 'ū' | 'ů' | 'ű' | 'ų' => "u",
        'ý' | 'ÿ' => "y",
        'ź' | 'ż' | 'ž' => "z",
        _ => {
            out.push(c);
            return;
        }
    };
    out.push_str(folded);
}

/// Split on non-alphanumeric characters, lowercase, fold Latin diacritics.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| {
            let mut out = String::with_capacity(t.len());
            for c in t.chars().flat_map(char::to_lowercase) {
                fold_char(c, &mut out);
            }
            out
        })
        .collect()
}

/// Stopword-ratio heuristic: true iff the text has at least one token and at
/// least `threshold` of its tokens are stopwords.
pub fn detect_english(text: &str, stopwords: &StopwordSet, threshold: f64) -> bool {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return false;
    }
    let hits = tokens.iter().filter(|t| stopwords.contains(t)).count();
    hits as f64 / tokens.len() as f64 >= threshold
}

pub fn remove_stopwords<S: AsRef<str>>(tokens: &[S], stopwords: &StopwordSet) -> TokenList {
    TokenList(
        tokens
            .iter()
            .map(AsRef::as_ref)
            .filter(|t| !t.is_empty() && !stopwords.contains(t))
            .map(str::to_string)
            .collect(),
    )
}

pub fn lemmatize(token: &str, dict: &LemmaDictionary) -> String {
    dict.get(token).unwrap_or(token).to_string()
}

/// Lemmatize then stem, repeated until the token is a fixed point of both.
/// Plain Porter is not idempotent ("agreed" → "agre" → "agr"), and a stem can
/// land on a dictionary key, so a single pass does not give a closed output.
fn normalize(token: &str, dict: &LemmaDictionary) -> String {
    let mut current = token.to_string();
    for _ in 0..MAX_NORMALIZE_ROUNDS {
        let next = stem(&lemmatize(&current, dict));
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Bundles the resources the pre-processing pipeline needs.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub stopwords: StopwordSet,
    pub lemmas: LemmaDictionary,
    pub english_threshold: f64,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor {
            stopwords: StopwordSet::english_default(),
            lemmas: LemmaDictionary::english_default(),
            english_threshold: DEFAULT_ENGLISH_THRESHOLD,
        }
    }
}

impl Preprocessor {
    pub fn is_english(&self, text: &str) -> bool {
        detect_english(text, &self.stopwords, self.english_threshold)
    }

    /// tokenize → remove stopwords → lemmatize → stem. Tokens that normalize
    /// to a stopword or to the empty string are dropped.
    pub fn preprocess(&self, description: &str) -> TokenList {
        let tokens = remove_stopwords(&tokenize(description), &self.stopwords);
        TokenList(
            tokens
                .0
                .iter()
                .map(|t| normalize(t, &self.lemmas))
                .filter(|t| !t.is_empty() && !self.stopwords.contains(t))
                .collect(),
        )
    }
}
