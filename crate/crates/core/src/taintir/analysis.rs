use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{
    FlowFact, FlowPair, ProgramIR, SendTarget, Statement, StmtRef, TaintError, Visibility,
    WitnessStep,
};
use crate::corpus::{ApiCatalog, IPC_GROUP};

/// A resolved inter-component send: sender statement → receiving component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IccLink {
    pub sender: StmtRef,
    pub receiver: usize,
}

/// Link every `send <Component>(..)` to its target component. `EXTERNAL`
/// sends produce no link.
pub fn resolve_icc(program: &ProgramIR) -> Result<Vec<IccLink>, TaintError> {
    let mut links = Vec::new();
    for (ci, comp) in program.components.iter().enumerate() {
        for (si, stmt) in comp.statements.iter().enumerate() {
            let Statement::IccSend {
                target: SendTarget::Component(name),
                ..
            } = stmt
            else {
                continue;
            };
            let receiver =
                program
                    .component_index(name)
                    .ok_or_else(|| TaintError::UnresolvedTarget {
                        component: comp.name.clone(),
                        index: si,
                        target: name.clone(),
                    })?;
            links.push(IccLink {
                sender: StmtRef {
                    component: ci,
                    index: si,
                },
                receiver,
            });
        }
    }
    Ok(links)
}

/// Result of running the taint analysis on one program.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FlowAnalysis {
    /// One fact per distinct (source, sink) pair, sorted by pair.
    pub facts: Vec<FlowFact>,
    /// Labelled sends whose target is a component of the same app. These are
    /// not reported as flows to the IPC sink.
    pub ipc_internal_suppressed: Vec<SuppressedSend>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SuppressedSend {
    pub from: WitnessStep,
    pub to_component: String,
    pub labels: Vec<String>,
}

impl FlowAnalysis {
    pub fn pairs(&self) -> BTreeSet<FlowPair> {
        group_by_permission(&self.facts)
    }
}

/// Project facts to their (source group, sink group) pairs.
pub fn group_by_permission<'a>(
    facts: impl IntoIterator<Item = &'a FlowFact>,
) -> BTreeSet<FlowPair> {
    facts.into_iter().map(FlowFact::pair).collect()
}

type Labels = BTreeSet<String>;

/// Def-use graph over statements, plus the per-statement label seeds.
struct Graph<'p> {
    program: &'p ProgramIR,
    /// Successors of each statement, sorted.
    succ: BTreeMap<StmtRef, Vec<StmtRef>>,
    /// Source label introduced by a statement.
    seeds: BTreeMap<StmtRef, String>,
    /// Sink group realized by a statement.
    sinks: BTreeMap<StmtRef, String>,
}

impl<'p> Graph<'p> {
    fn build(
        program: &'p ProgramIR,
        catalog: &ApiCatalog,
        links: &[IccLink],
    ) -> Result<Self, TaintError> {
        let mut succ: BTreeMap<StmtRef, Vec<StmtRef>> = BTreeMap::new();
        let mut seeds = BTreeMap::new();
        let mut sinks = BTreeMap::new();
        for (ci, comp) in program.components.iter().enumerate() {
            let mut def_site: HashMap<&str, StmtRef> = HashMap::new();
            for (si, stmt) in comp.statements.iter().enumerate() {
                let here = StmtRef {
                    component: ci,
                    index: si,
                };
                for used in stmt.uses() {
                    // the parser guarantees definition before use
                    if let Some(&def) = def_site.get(used.as_str()) {
                        succ.entry(def).or_default().push(here);
                    }
                }
                match stmt {
                    Statement::SourceCall { api, .. } => {
                        let entry = lookup(catalog, api)?;
                        if !entry.role.is_source() {
                            return Err(role_mismatch(api, "source", entry.role));
                        }
                        seeds.insert(here, entry.permission_group.clone());
                    }
                    Statement::SinkCall { api, .. } => {
                        let entry = lookup(catalog, api)?;
                        if !entry.role.is_sink() {
                            return Err(role_mismatch(api, "sink", entry.role));
                        }
                        sinks.insert(here, entry.permission_group.clone());
                    }
                    Statement::IccSend {
                        target: SendTarget::External,
                        ..
                    } => {
                        sinks.insert(here, IPC_GROUP.to_string());
                    }
                    Statement::IccRecv { .. } if comp.visibility == Visibility::Public => {
                        seeds.insert(here, IPC_GROUP.to_string());
                    }
                    _ => {}
                }
                if let Some(dest) = stmt.defines() {
                    def_site.insert(dest, here);
                }
            }
        }
        for link in links {
            let receiver = &program.components[link.receiver];
            for (si, stmt) in receiver.statements.iter().enumerate() {
                if matches!(stmt, Statement::IccRecv { .. }) {
                    succ.entry(link.sender).or_default().push(StmtRef {
                        component: link.receiver,
                        index: si,
                    });
                }
            }
        }
        for targets in succ.values_mut() {
            targets.sort();
            targets.dedup();
        }
        Ok(Graph {
            program,
            succ,
            seeds,
            sinks,
        })
    }

    fn step(&self, at: StmtRef) -> WitnessStep {
        WitnessStep {
            component: self.program.components[at.component].name.clone(),
            index: at.index,
        }
    }

    /// Shortest witness from any statement seeding `source` to any statement
    /// realizing `sink`; ties go to the lexicographically smallest path.
    fn witness(&self, source: &str, sink: &str) -> Option<Vec<StmtRef>> {
        let starts: Vec<StmtRef> = self
            .seeds
            .iter()
            .filter(|(_, g)| g.as_str() == source)
            .map(|(&at, _)| at)
            .collect();
        let mut parent: BTreeMap<StmtRef, Option<StmtRef>> = BTreeMap::new();
        let mut queue = VecDeque::new();
        for &s in &starts {
            parent.insert(s, None);
            queue.push_back(s);
        }
        // BFS over a sorted frontier discovers every node first through its
        // lexicographically smallest shortest path.
        let mut best: Option<Vec<StmtRef>> = None;
        while let Some(node) = queue.pop_front() {
            if self.sinks.get(&node).is_some_and(|g| g == sink) {
                let mut path = vec![node];
                let mut cur = node;
                while let Some(Some(p)) = parent.get(&cur) {
                    path.push(*p);
                    cur = *p;
                }
                path.reverse();
                let better = match &best {
                    None => true,
                    Some(b) => (path.len(), &path) < (b.len(), b),
                };
                if better {
                    best = Some(path);
                }
                continue;
            }
            for &next in self.succ.get(&node).map(Vec::as_slice).unwrap_or(&[]) {
                if let Entry::Vacant(e) = parent.entry(next) {
                    e.insert(Some(node));
                    queue.push_back(next);
                }
            }
        }
        best
    }
}

fn lookup<'c>(
    catalog: &'c ApiCatalog,
    api: &str,
) -> Result<&'c crate::corpus::ApiEntry, TaintError> {
    catalog.get(api).ok_or_else(|| TaintError::UnknownApi {
        api: api.to_string(),
    })
}

fn role_mismatch(api: &str, used_as: &'static str, role: crate::corpus::ApiRole) -> TaintError {
    TaintError::RoleMismatch {
        api: api.to_string(),
        used_as,
        role: role.to_string(),
    }
}

/// Per-component variable → label sets, grown to a fixpoint.
fn label_fixpoint(program: &ProgramIR, catalog: &ApiCatalog) -> Vec<HashMap<String, Labels>> {
    let mut state: Vec<HashMap<String, Labels>> = vec![HashMap::new(); program.components.len()];
    for (ci, comp) in program.components.iter().enumerate() {
        for stmt in &comp.statements {
            match stmt {
                Statement::SourceCall { dest, api } => {
                    let group = catalog.get(api).map(|e| e.permission_group.clone());
                    state[ci].entry(dest.clone()).or_default().extend(group);
                }
                Statement::IccRecv { dest } if comp.visibility == Visibility::Public => {
                    state[ci]
                        .entry(dest.clone())
                        .or_default()
                        .insert(IPC_GROUP.to_string());
                }
                _ => {}
            }
        }
    }
    // Each round either adds a label somewhere or stops; label sets are
    // bounded by the number of groups, so this terminates.
    loop {
        let mut changed = false;
        for (ci, comp) in program.components.iter().enumerate() {
            for stmt in &comp.statements {
                match stmt {
                    Statement::Assign { dest, srcs } => {
                        let incoming = union_of(&state[ci], srcs);
                        let slot = state[ci].entry(dest.clone()).or_default();
                        for l in incoming {
                            changed |= slot.insert(l);
                        }
                    }
                    Statement::IccSend {
                        target: SendTarget::Component(name),
                        args,
                    } => {
                        let incoming = union_of(&state[ci], args);
                        if incoming.is_empty() {
                            continue;
                        }
                        let Some(ri) = program.component_index(name) else {
                            continue;
                        };
                        for recv in &program.components[ri].statements {
                            if let Statement::IccRecv { dest } = recv {
                                let slot = state[ri].entry(dest.clone()).or_default();
                                for l in &incoming {
                                    changed |= slot.insert(l.clone());
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        if !changed {
            return state;
        }
    }
}

fn union_of(vars: &HashMap<String, Labels>, names: &[String]) -> Labels {
    names
        .iter()
        .filter_map(|n| vars.get(n))
        .flat_map(|s| s.iter().cloned())
        .collect()
}

/// Run the taint analysis: resolve sends, propagate labels to a fixpoint, and
/// report every (source group → sink group) flow once with a shortest
/// witness path.
pub fn propagate_taint(
    program: &ProgramIR,
    catalog: &ApiCatalog,
) -> Result<FlowAnalysis, TaintError> {
    let links = resolve_icc(program)?;
    let graph = Graph::build(program, catalog, &links)?;
    let state = label_fixpoint(program, catalog);

    let mut pairs: BTreeSet<FlowPair> = BTreeSet::new();
    let mut suppressed = Vec::new();
    for (ci, comp) in program.components.iter().enumerate() {
        for (si, stmt) in comp.statements.iter().enumerate() {
            match stmt {
                Statement::SinkCall { api, args } => {
                    let group = &catalog
                        .get(api)
                        .expect("checked in Graph::build")
                        .permission_group;
                    for label in union_of(&state[ci], args) {
                        pairs.insert(FlowPair::new(label, group.clone()));
                    }
                }
                Statement::IccSend { target, args } => {
                    let labels = union_of(&state[ci], args);
                    match target {
                        SendTarget::External => {
                            for label in labels {
                                pairs.insert(FlowPair::new(label, IPC_GROUP));
                            }
                        }
                        SendTarget::Component(name) if !labels.is_empty() => {
                            suppressed.push(SuppressedSend {
                                from: graph.step(StmtRef {
                                    component: ci,
                                    index: si,
                                }),
                                to_component: name.clone(),
                                labels: labels.into_iter().collect(),
                            });
                        }
                        SendTarget::Component(_) => {}
                    }
                }
                _ => {}
            }
        }
    }

    let facts = pairs
        .into_iter()
        .map(|pair| {
            let path = graph
                .witness(&pair.source, &pair.sink)
                .expect("every labelled sink is reachable from a seed");
            FlowFact {
                witness: path.into_iter().map(|at| graph.step(at)).collect(),
                source_group: pair.source,
                sink_group: pair.sink,
            }
        })
        .collect();
    Ok(FlowAnalysis {
        facts,
        ipc_internal_suppressed: suppressed,
    })
}
