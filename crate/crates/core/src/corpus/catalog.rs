use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Permission group carried by inter-component / inter-app communication.
pub const IPC_GROUP: &str = "IPC";

const DEFAULT_CATALOG: &str = include_str!("../../data/catalog.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiRole {
    Source,
    Sink,
    Both,
}

impl ApiRole {
    pub fn is_source(self) -> bool {
        matches!(self, ApiRole::Source | ApiRole::Both)
    }

    pub fn is_sink(self) -> bool {
        matches!(self, ApiRole::Sink | ApiRole::Both)
    }
}

impl fmt::Display for ApiRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApiRole::Source => "source",
            ApiRole::Sink => "sink",
            ApiRole::Both => "both",
        })
    }
}

impl FromStr for ApiRole {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "source" => Ok(ApiRole::Source),
            "sink" => Ok(ApiRole::Sink),
            "both" => Ok(ApiRole::Both),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiEntry {
    pub role: ApiRole,
    pub permission_group: String,
}

/// Maps privileged API names to their role and the permission group they
/// require. Flows are counted at the permission-group level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiCatalog {
    entries: BTreeMap<String, ApiEntry>,
}

impl ApiCatalog {
    /// Parse `<api_name> -> <source|sink|both> <PermissionGroup>` lines.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let malformed = |message: &str| CorpusError::MalformedCatalog {
                line: line_no,
                message: message.to_string(),
            };
            let (name, rest) = line
                .split_once("->")
                .ok_or_else(|| malformed("expected `<api> -> <role> <group>`"))?;
            let name = name.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(malformed("api name must be a single non-empty word"));
            }
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let [role, group] = parts[..] else {
                return Err(malformed("expected `<role> <group>` after `->`"));
            };
            let role: ApiRole = role
                .parse()
                .map_err(|_| malformed("role must be source, sink or both"))?;
            if entries.contains_key(name) {
                return Err(CorpusError::DuplicateApi {
                    api: name.to_string(),
                    line: line_no,
                });
            }
            entries.insert(
                name.to_string(),
                ApiEntry {
                    role,
                    permission_group: group.to_string(),
                },
            );
        }
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: BTreeMap<String, ApiEntry>) -> Result<Self, CorpusError> {
        let has_ipc = entries
            .values()
            .any(|e| e.permission_group == IPC_GROUP && e.role == ApiRole::Both);
        if !has_ipc {
            return Err(CorpusError::MissingIpcPseudoGroup);
        }
        Ok(ApiCatalog { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// The catalog shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_CATALOG).expect("shipped catalog is valid")
    }

    pub fn get(&self, api: &str) -> Option<&ApiEntry> {
        self.entries.get(api)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ApiEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn internet_sinks_share_a_group() {
        let cat = ApiCatalog::builtin();
        for api in ["openConnection", "connect", "getContent"] {
            let e = cat.get(api).unwrap();
            assert_eq!(e.permission_group, "Internet");
            assert_eq!(e.role, ApiRole::Sink);
        }
    }

    #[test]
    fn single_line_entry() {
        let cat = ApiCatalog::parse("openConnection -> sink Internet\nIPC -> both IPC\n").unwrap();
        assert_eq!(
            cat.get("openConnection").unwrap().permission_group,
            "Internet"
        );
    }

    #[test]
    fn duplicate_api_rejected() {
        let err = ApiCatalog::parse(
            "connect -> sink Internet\n# again\nconnect -> sink Internet\nIPC -> both IPC\n",
        )
        .unwrap_err();
        assert!(
            matches!(err, CorpusError::DuplicateApi { line: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn ipc_pseudo_group_required() {
        let err = ApiCatalog::parse("connect -> sink Internet\n").unwrap_err();
        assert!(matches!(err, CorpusError::MissingIpcPseudoGroup));
        // present but with the wrong role
        let err = ApiCatalog::parse("IPC -> sink IPC\n").unwrap_err();
        assert!(matches!(err, CorpusError::MissingIpcPseudoGroup));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            ApiCatalog::parse("connect sink Internet\n"),
            Err(CorpusError::MalformedCatalog { line: 1, .. })
        ));
        assert!(matches!(
            ApiCatalog::parse("IPC -> both IPC\nconnect -> writes Internet\n"),
            Err(CorpusError::MalformedCatalog { line: 2, .. })
        ));
    }
}
