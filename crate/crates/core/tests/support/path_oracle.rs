//! Exhaustive def-use path enumeration. Builds its own edge list straight
//! from the program and walks every simple path from every labelled
//! statement; shares nothing with the fixpoint engine.

use std::collections::BTreeSet;

use anflo_core::taintir::{SendTarget, Statement, Visibility};
use anflo_core::{ApiCatalog, FlowPair, ProgramIR};

type Node = (usize, usize);

struct Edges {
    nodes: Vec<Node>,
    succ: Vec<Vec<usize>>,
}

fn node_id(nodes: &[Node], n: Node) -> usize {
    nodes.iter().position(|&m| m == n).unwrap()
}

fn edges(p: &ProgramIR) -> Edges {
    let mut nodes = Vec::new();
    for (ci, c) in p.components.iter().enumerate() {
        for si in 0..c.statements.len() {
            nodes.push((ci, si));
        }
    }
    let mut succ = vec![Vec::new(); nodes.len()];
    for (ci, c) in p.components.iter().enumerate() {
        for (j, stmt) in c.statements.iter().enumerate() {
            let uses: &[String] = match stmt {
                Statement::Assign { srcs, .. } => srcs,
                Statement::SinkCall { args, .. } | Statement::IccSend { args, .. } => args,
                _ => &[],
            };
            for u in uses {
                // the defining statement is the unique earlier one naming it
                for i in 0..j {
                    let def = match &c.statements[i] {
                        Statement::SourceCall { dest, .. }
                        | Statement::Assign { dest, .. }
                        | Statement::IccRecv { dest } => Some(dest),
                        _ => None,
                    };
                    if def == Some(u) {
                        succ[node_id(&nodes, (ci, i))].push(node_id(&nodes, (ci, j)));
                    }
                }
            }
            if let Statement::IccSend {
                target: SendTarget::Component(name),
                ..
            } = stmt
            {
                let ri = p.components.iter().position(|c| &c.name == name).unwrap();
                for (k, r) in p.components[ri].statements.iter().enumerate() {
                    if matches!(r, Statement::IccRecv { .. }) {
                        succ[node_id(&nodes, (ci, j))].push(node_id(&nodes, (ri, k)));
                    }
                }
            }
        }
    }
    Edges { nodes, succ }
}

fn seed_group(p: &ProgramIR, cat: &ApiCatalog, (ci, si): Node) -> Option<String> {
    let c = &p.components[ci];
    match &c.statements[si] {
        Statement::SourceCall { api, .. } => Some(cat.get(api)?.permission_group.clone()),
        Statement::IccRecv { .. } if c.visibility == Visibility::Public => Some("IPC".into()),
        _ => None,
    }
}

fn sink_group(p: &ProgramIR, cat: &ApiCatalog, (ci, si): Node) -> Option<String> {
    match &p.components[ci].statements[si] {
        Statement::SinkCall { api, .. } => Some(cat.get(api)?.permission_group.clone()),
        Statement::IccSend {
            target: SendTarget::External,
            ..
        } => Some("IPC".into()),
        _ => None,
    }
}

fn walk(g: &Edges, at: usize, on_path: &mut Vec<bool>, visit: &mut dyn FnMut(usize)) {
    visit(at);
    on_path[at] = true;
    for &next in &g.succ[at] {
        if !on_path[next] {
            walk(g, next, on_path, visit);
        }
    }
    on_path[at] = false;
}

/// Every (source group, sink group) pair realized by some def-use path.
pub fn flow_pairs(p: &ProgramIR, cat: &ApiCatalog) -> BTreeSet<FlowPair> {
    let g = edges(p);
    let mut out = BTreeSet::new();
    for (start, &node) in g.nodes.iter().enumerate() {
        let Some(src) = seed_group(p, cat, node) else {
            continue;
        };
        let mut on_path = vec![false; g.nodes.len()];
        walk(&g, start, &mut on_path, &mut |n| {
            if let Some(snk) = sink_group(p, cat, g.nodes[n]) {
                out.insert(FlowPair::new(src.clone(), snk));
            }
        });
    }
    out
}

/// True when consecutive witness steps are def-use or send→recv edges.
pub fn replays(p: &ProgramIR, witness: &[(usize, usize)]) -> bool {
    let g = edges(p);
    witness.windows(2).all(|w| {
        let a = node_id(&g.nodes, w[0]);
        let b = node_id(&g.nodes, w[1]);
        g.succ[a].contains(&b)
    })
}
