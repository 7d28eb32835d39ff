//! Mini app IR and static taint analysis over it.
//!
//! A program is a list of components, each a straight-line block of
//! statements. Data is tagged with a permission-group label at source API
//! calls, labels flow along def-use edges and inter-component sends, and a
//! flow fact is emitted whenever a labelled value reaches a sink.

mod analysis;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analysis::{group_by_permission, propagate_taint, resolve_icc, FlowAnalysis, IccLink};
pub use parse::parse_program;

/// Reserved send target naming "outside this app".
pub const EXTERNAL: &str = "EXTERNAL";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaintError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(
        "line {line}: variable `{variable}` used before definition in component `{component}`"
    )]
    UndefinedVariable {
        component: String,
        variable: String,
        line: usize,
    },
    #[error("line {line}: variable `{variable}` defined twice in component `{component}`")]
    RedefinedVariable {
        component: String,
        variable: String,
        line: usize,
    },
    #[error("line {line}: duplicate component `{name}`")]
    DuplicateComponent { name: String, line: usize },
    #[error("component `{component}` statement {index}: send target `{target}` is not declared")]
    UnresolvedTarget {
        component: String,
        index: usize,
        target: String,
    },
    #[error("api `{api}` is not in the catalog")]
    UnknownApi { api: String },
    #[error("api `{api}` is used as a {used_as} but the catalog says it is a {role}")]
    RoleMismatch {
        api: String,
        used_as: &'static str,
        role: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Public,
    Private,
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Visibility::Public => "public",
            Visibility::Private => "private",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SendTarget {
    Component(String),
    External,
}

impl fmt::Display for SendTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SendTarget::Component(name) => f.write_str(name),
            SendTarget::External => f.write_str(EXTERNAL),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statement {
    /// `dest = source Api`
    SourceCall { dest: String, api: String },
    /// `sink Api(args)`
    SinkCall { api: String, args: Vec<String> },
    /// `dest = assign(srcs)`
    Assign { dest: String, srcs: Vec<String> },
    /// `send Target(args)`
    IccSend {
        target: SendTarget,
        args: Vec<String>,
    },
    /// `dest = recv`
    IccRecv { dest: String },
}

impl Statement {
    /// Variable defined by this statement, if any.
    pub fn defines(&self) -> Option<&str> {
        match self {
            Statement::SourceCall { dest, .. }
            | Statement::Assign { dest, .. }
            | Statement::IccRecv { dest } => Some(dest),
            Statement::SinkCall { .. } | Statement::IccSend { .. } => None,
        }
    }

    /// Variables read by this statement.
    pub fn uses(&self) -> &[String] {
        match self {
            Statement::SinkCall { args, .. } | Statement::IccSend { args, .. } => args,
            Statement::Assign { srcs, .. } => srcs,
            Statement::SourceCall { .. } | Statement::IccRecv { .. } => &[],
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::SourceCall { dest, api } => write!(f, "{dest} = source {api}"),
            Statement::SinkCall { api, args } => write!(f, "sink {api}({})", args.join(", ")),
            Statement::Assign { dest, srcs } => write!(f, "{dest} = assign({})", srcs.join(", ")),
            Statement::IccSend { target, args } => write!(f, "send {target}({})", args.join(", ")),
            Statement::IccRecv { dest } => write!(f, "{dest} = recv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub visibility: Visibility,
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ProgramIR {
    pub components: Vec<Component>,
}

impl ProgramIR {
    pub fn statement_count(&self) -> usize {
        self.components.iter().map(|c| c.statements.len()).sum()
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }
}

impl fmt::Display for ProgramIR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "component {} {} {{", c.name, c.visibility)?;
            for s in &c.statements {
                writeln!(f, "    {s}")?;
            }
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}

/// Position of a statement: component declaration index, statement index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StmtRef {
    pub component: usize,
    pub index: usize,
}

/// A (source group → sink group) pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowPair {
    pub source: String,
    pub sink: String,
}

impl FlowPair {
    pub fn new(source: impl Into<String>, sink: impl Into<String>) -> Self {
        FlowPair {
            source: source.into(),
            sink: sink.into(),
        }
    }
}

impl fmt::Display for FlowPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source, self.sink)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WitnessStep {
    pub component: String,
    pub index: usize,
}

impl fmt::Display for WitnessStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.component, self.index)
    }
}

/// One flow with a def-use witness path from the statement introducing the
/// source label to the statement realizing the sink.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowFact {
    pub source_group: String,
    pub sink_group: String,
    pub witness: Vec<WitnessStep>,
}

impl FlowFact {
    pub fn pair(&self) -> FlowPair {
        FlowPair::new(&self.source_group, &self.sink_group)
    }

    /// `<Source> -> <Sink>`, optionally followed by the witness path.
    pub fn render(&self, verbose: bool) -> String {
        let mut out = format!("{} -> {}", self.source_group, self.sink_group);
        if verbose {
            let path: Vec<String> = self.witness.iter().map(ToString::to_string).collect();
            out.push_str("    via ");
            out.push_str(&path.join(" => "));
        }
        out
    }
}
