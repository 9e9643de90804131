//! REFERS_TO resolution and def-use edges.

use std::collections::HashMap;

use crate::cpg::{CpgGraph, EdgeKind, NodeId, NodeKind};
use crate::ir::TypeRef;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DfgReport {
    pub refers_to: usize,
    pub dfg: usize,
    pub unresolved: Vec<String>,
}

/// Replaces all REFERS_TO and DFG edges of the graph.
pub fn build_dfg(g: &mut CpgGraph) -> DfgReport {
    g.clear_edges(&[EdgeKind::RefersTo, EdgeKind::Dfg]);
    let mut globals: HashMap<String, NodeId> = HashMap::new();
    for &tu in g.roots() {
        for &c in g.children(tu) {
            let n = g.node(c).expect("live");
            if matches!(n.kind, NodeKind::VariableDeclaration | NodeKind::FunctionDeclaration) {
                if let Some(name) = &n.name {
                    globals.entry(name.clone()).or_insert(c);
                }
            }
        }
    }
    let mut refs: Vec<(NodeId, NodeId)> = Vec::new();
    let mut dfg: Vec<(NodeId, NodeId)> = Vec::new();
    let mut report = DfgReport::default();
    let functions: Vec<NodeId> = g.nodes_of_kind(NodeKind::FunctionDeclaration).map(|n| n.id).collect();
    let mut resolved: HashMap<NodeId, NodeId> = HashMap::new();
    for f in functions {
        let nodes = g.subtree(f);
        let mut locals: HashMap<&str, NodeId> = HashMap::new();
        for &n in &nodes {
            let node = g.node(n).expect("live");
            if matches!(node.kind, NodeKind::ParameterDeclaration | NodeKind::VariableDeclaration) {
                if let Some(name) = &node.name {
                    locals.entry(name.as_str()).or_insert(n);
                }
            }
        }
        for &n in &nodes {
            let node = g.node(n).expect("live");
            if node.kind != NodeKind::DeclaredReferenceExpression || node.ty == TypeRef::Label {
                continue;
            }
            let name = node.name.as_deref().unwrap_or_default();
            let global = node.prop_str("scope") == Some("global");
            let target = if global {
                globals.get(name).copied()
            } else {
                locals.get(name).copied().or_else(|| globals.get(name).copied())
            };
            match target {
                Some(d) => {
                    refs.push((n, d));
                    resolved.insert(n, d);
                }
                None => {
                    log::debug!("unresolved reference {name}");
                    report.unresolved.push(name.to_string());
                }
            }
        }
    }
    // Global initializers live outside functions.
    let all: Vec<NodeId> = g.nodes().map(|n| n.id).collect();
    for n in all {
        let node = g.node(n).expect("live");
        let children = g.children(n);
        match node.kind {
            NodeKind::VariableDeclaration => {
                if let Some(&init) = children.first() {
                    dfg.push((init, n));
                }
            }
            NodeKind::DeclaredReferenceExpression => {
                if let Some(&d) = resolved.get(&n) {
                    if !is_plain_write(g, n) {
                        dfg.push((d, n));
                    }
                }
            }
            NodeKind::BinaryOperator if node.operator() == Some("=") && children.len() == 2 => {
                let (lhs, rhs) = (children[0], children[1]);
                dfg.push((rhs, lhs));
                if let Some(d) = written_base(g, lhs).and_then(|b| resolved.get(&b)) {
                    dfg.push((lhs, *d));
                }
            }
            NodeKind::BinaryOperator
            | NodeKind::UnaryOperator
            | NodeKind::CastExpression
            | NodeKind::MemberExpression
            | NodeKind::ArraySubscriptionExpression
            | NodeKind::ConditionalExpression
            | NodeKind::CallExpression
            | NodeKind::ProblemNode
            | NodeKind::ReturnStatement
            | NodeKind::ThrowStatement => {
                for &c in children {
                    if g.kind(c).is_some_and(|k| !k.is_statement()) {
                        dfg.push((c, n));
                    }
                }
            }
            _ => {}
        }
    }
    report.refers_to = refs.len();
    report.dfg = dfg.len();
    for (a, b) in refs {
        g.add_edge(a, b, EdgeKind::RefersTo);
    }
    for (a, b) in dfg {
        g.add_edge(a, b, EdgeKind::Dfg);
    }
    report
}

/// True for the reference on the left of `x = ...`; it is written, not read.
fn is_plain_write(g: &CpgGraph, r: NodeId) -> bool {
    let Some(p) = g.parent(r) else { return false };
    let pn = g.node(p).expect("live");
    pn.kind == NodeKind::BinaryOperator && pn.operator() == Some("=") && g.child(p, 0) == Some(r)
}

/// The variable an assignment target writes into: `x`, `x.f`, `x[i]`, but
/// nothing behind a pointer dereference.
fn written_base(g: &CpgGraph, lhs: NodeId) -> Option<NodeId> {
    let mut cur = lhs;
    loop {
        match g.kind(cur)? {
            NodeKind::DeclaredReferenceExpression => return Some(cur),
            NodeKind::MemberExpression | NodeKind::ArraySubscriptionExpression => cur = g.child(cur, 0)?,
            _ => return None,
        }
    }
}
