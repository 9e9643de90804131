//! Removes the scaffolding left by catchswitch/catchpad translation and lets
//! the caught exception flow into the rethrow.

use std::collections::HashSet;

use crate::cpg::{CpgGraph, NewNode, NodeId, NodeKind};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CatchReport {
    pub rethrows: usize,
    pub pads_removed: usize,
}

impl CatchReport {
    pub fn changed(&self) -> bool {
        self.rethrows + self.pads_removed > 0
    }
}

pub fn cleanup_catch_blocks(g: &mut CpgGraph) -> CatchReport {
    let mut report = CatchReport::default();
    let clauses: Vec<NodeId> = g
        .nodes_of_kind(NodeKind::CatchClause)
        .filter(|c| c.prop("catchswitch").is_some())
        .map(|c| c.id)
        .collect();
    let mut doomed = Vec::new();
    for clause in clauses {
        let Some(param) = g.child(clause, 0).filter(|&p| g.kind(p) == Some(NodeKind::VariableDeclaration)) else {
            continue;
        };
        let (name, ty) = {
            let p = g.node(param).expect("live");
            (p.name.clone().unwrap_or_default(), p.ty.clone())
        };
        let throws: Vec<NodeId> = g
            .subtree(clause)
            .into_iter()
            .filter(|&t| g.node(t).is_some_and(|n| n.kind == NodeKind::ThrowStatement && n.prop("rethrow").is_some()))
            .filter(|&t| g.ancestor_of_kind(t, NodeKind::CatchClause) == Some(clause))
            .collect();
        for t in throws {
            let Some(call) = g.child(t, 0) else { continue };
            if !g.node(call).is_some_and(|c| c.kind == NodeKind::CallExpression && c.name_is("llvm.catchswitch.exception")) {
                continue;
            }
            let code = g.node(call).map(|c| c.code.clone()).unwrap_or_default();
            let loc = g.node(call).and_then(|c| c.location);
            let r = g.add(
                NewNode::new(NodeKind::DeclaredReferenceExpression)
                    .name(name.clone())
                    .code(code)
                    .ty(ty.clone())
                    .at(loc),
            );
            g.replace_child(call, r);
            doomed.push(call);
            report.rethrows += 1;
        }
    }
    // catchpad results nobody reads.
    let functions: Vec<NodeId> = g.nodes_of_kind(NodeKind::FunctionDeclaration).map(|n| n.id).collect();
    for f in functions {
        let nodes = g.subtree(f);
        let pads: Vec<NodeId> = nodes
            .iter()
            .copied()
            .filter(|&d| g.kind(d) == Some(NodeKind::VariableDeclaration))
            .filter(|&d| {
                g.child(d, 0)
                    .and_then(|c| g.node(c))
                    .is_some_and(|c| c.kind == NodeKind::CallExpression && c.name_is("llvm.catchpad"))
            })
            .collect();
        if pads.is_empty() {
            continue;
        }
        let read: HashSet<String> = nodes
            .iter()
            .filter_map(|&n| g.node(n))
            .filter(|n| n.kind == NodeKind::DeclaredReferenceExpression && !doomed.contains(&n.id))
            .filter_map(|n| n.name.clone())
            .collect();
        for d in pads {
            let name = g.node(d).and_then(|n| n.name.clone()).unwrap_or_default();
            if !read.contains(&name) {
                doomed.push(d);
                report.pads_removed += 1;
            }
        }
    }
    g.remove_subtrees(&doomed);
    report
}
