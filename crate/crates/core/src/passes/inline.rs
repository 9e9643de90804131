//! Replaces a goto by the block it jumps to when that goto is the block's
//! only way in.

use std::collections::HashSet;

use super::{eog::build_eog_lenient, has_edges};
use crate::cpg::{CpgGraph, EdgeKind, NodeId, NodeKind};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InlineReport {
    pub inlined: usize,
    pub rounds: usize,
}

pub fn inline_single_pred_blocks(g: &mut CpgGraph) -> InlineReport {
    if !has_edges(g, EdgeKind::Eog) {
        build_eog_lenient(g);
    }
    let mut report = InlineReport::default();
    let cap = g.node_count().max(1);
    while report.rounds < cap {
        let candidates = candidates(g);
        if candidates.is_empty() {
            break;
        }
        report.rounds += 1;
        let mut doomed = Vec::new();
        let mut changed = false;
        for (goto, label) in candidates {
            // Earlier rewrites in this round may have moved the goto into its target.
            if g.subtree(label).contains(&goto) {
                continue;
            }
            let Some(compound) = g.child(label, 0) else { continue };
            let Some(parent) = g.parent(goto) else { continue };
            let name = g.node(label).and_then(|n| n.name.clone()).unwrap_or_default();
            if g.kind(parent) == Some(NodeKind::CompoundStatement) {
                let at = g.children(parent).iter().position(|c| *c == goto).expect("child of parent");
                let stmts = g.children(compound).to_vec();
                g.detach(goto);
                for (k, s) in stmts.into_iter().enumerate() {
                    g.detach(s);
                    g.insert_child(parent, at + k, s);
                }
            } else {
                g.detach(compound);
                g.replace_child(goto, compound);
            }
            g.detach(label);
            doomed.push(goto);
            doomed.push(label);
            for info in g.functions.values_mut() {
                info.blocks.retain(|(l, id, _)| !(l == &name && *id == label));
            }
            report.inlined += 1;
            changed = true;
        }
        g.remove_subtrees(&doomed);
        build_eog_lenient(g);
        if !changed {
            break;
        }
    }
    report
}

/// (goto, label) pairs where the goto is the label's only EOG predecessor.
fn candidates(g: &CpgGraph) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    let mut used = HashSet::new();
    for l in g.nodes_of_kind(NodeKind::LabelStatement) {
        let preds = g.in_edges(l.id, EdgeKind::Eog);
        let [p] = preds.as_slice() else { continue };
        if g.kind(*p) != Some(NodeKind::GotoStatement) || in_try_body(g, *p) {
            continue;
        }
        if g.subtree(l.id).contains(p) || !used.insert(*p) {
            continue;
        }
        out.push((*p, l.id));
    }
    out
}

/// Code moved into a try body would become protected by its catch clauses.
fn in_try_body(g: &CpgGraph, n: NodeId) -> bool {
    let mut cur = n;
    while let Some(p) = g.parent(cur) {
        match g.kind(p) {
            Some(NodeKind::TryStatement) if g.child(p, 0) == Some(cur) => return true,
            Some(NodeKind::FunctionDeclaration) => return false,
            _ => cur = p,
        }
    }
    false
}
