//! Out-of-SSA lowering of φ-instructions.
//!
//! Each φ target gets an uninitialized declaration at the top of its function
//! and one assignment per incoming edge, placed in the predecessor right before
//! its terminator.

use std::collections::{BTreeMap, BTreeSet};

use super::PassError;
use crate::cpg::{CpgGraph, NodeId, NodeKind, PhiRecord};
use crate::ir::OperandKind;
use crate::mapper::Emitter;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhiReport {
    pub declarations: usize,
    pub assignments: usize,
    /// Parallel-copy hazards: an assignment reads a variable that an earlier
    /// φ-assignment in the same predecessor already overwrote, or the
    /// terminator reads a variable overwritten by the φ-assignments.
    pub hazards: Vec<String>,
    /// Incoming edges whose predecessor label does not exist (lenient mode only).
    pub unknown_predecessors: Vec<String>,
}

/// Strict variant: fails before touching the graph if any predecessor label is unknown.
pub fn eliminate_phis(g: &mut CpgGraph) -> Result<PhiReport, PassError> {
    for r in &g.phi_records {
        let info = g.functions.get(&r.owning_function);
        for (_, pred) in &r.incoming {
            if info.and_then(|f| f.block(pred)).is_none() {
                return Err(PassError::UnknownPredecessor {
                    label: pred.clone(),
                    phi: r.target_name.clone(),
                });
            }
        }
    }
    Ok(eliminate_phis_lenient(g))
}

/// Lowers every recorded φ; incoming edges from unknown blocks are skipped with a diagnostic.
pub fn eliminate_phis_lenient(g: &mut CpgGraph) -> PhiReport {
    let records = std::mem::take(&mut g.phi_records);
    let mut report = PhiReport::default();
    let mut next_top: BTreeMap<NodeId, usize> = BTreeMap::new();
    // (function, predecessor) -> targets already assigned there
    let mut written: BTreeMap<(NodeId, String), BTreeSet<String>> = BTreeMap::new();
    for r in &records {
        let Some(info) = g.functions.get(&r.owning_function).cloned() else {
            report.unknown_predecessors.push(format!("{}: owning function is gone", r.target_name));
            continue;
        };
        let Some(body) = info.body else { continue };
        let mut e = Emitter::for_function(g, r.owning_function);
        e.loc = Some(r.location);
        let decl = e.declaration(&r.target_name, r.target_type.clone(), None, &r.code);
        if let Some(n) = e.g.node_mut(decl) {
            n.properties.insert("phi".into(), true.into());
        }
        let slot = next_top.entry(r.owning_function).or_insert(0);
        e.g.insert_child(body, *slot, decl);
        *slot += 1;
        report.declarations += 1;
        for (value, pred) in &r.incoming {
            let Some((_, compound)) = info.block(pred) else {
                log::warn!("φ {}: predecessor {pred} not found", r.target_name);
                report.unknown_predecessors.push(format!("{}: {pred}", r.target_name));
                continue;
            };
            let key = (r.owning_function, pred.clone());
            let already = written.entry(key).or_default();
            if let OperandKind::Local(src) = &value.kind {
                if already.contains(src) {
                    report.hazards.push(format!(
                        "in {pred}: %{} reads %{src} after its φ-assignment",
                        r.target_name
                    ));
                }
            }
            already.insert(r.target_name.clone());
            let lhs = e.reference(&r.target_name, r.target_type.clone(), &r.code, false);
            let rhs = e.operand(value);
            let assign = e.assign(lhs, rhs, &r.code);
            if let Some(n) = e.g.node_mut(assign) {
                n.properties.insert("phi".into(), true.into());
            }
            let (parent, index) = insertion_point(e.g, compound, &r.block_label);
            e.g.insert_child(parent, index, assign);
            report.assignments += 1;
        }
    }
    // Terminators that read a φ target assigned just before them.
    for ((func, pred), targets) in &written {
        let Some((_, compound)) = g.functions.get(func).and_then(|f| f.block(pred)) else {
            continue;
        };
        let Some(&term) = g.children(compound).last() else { continue };
        let reads = read_names(g, term);
        for t in targets {
            if reads.contains(t) {
                report.hazards.push(format!("in {pred}: terminator reads %{t} after its φ-assignment"));
            }
        }
    }
    for h in &report.hazards {
        log::warn!("parallel-copy hazard {h}");
    }
    report
}

/// Parent and index right before the predecessor's terminator. For an
/// `invoke`, that is inside the try or catch body, before the goto that
/// reaches the φ's block.
fn insertion_point(g: &CpgGraph, compound: NodeId, target_label: &str) -> (NodeId, usize) {
    let children = g.children(compound);
    let Some(&last) = children.last() else {
        return (compound, 0);
    };
    if g.kind(last) == Some(NodeKind::TryStatement) {
        for n in g.subtree(last) {
            let node = g.node(n).expect("live");
            if node.kind == NodeKind::GotoStatement && node.name_is(target_label) {
                if let Some(p) = g.parent(n) {
                    if g.kind(p) == Some(NodeKind::CompoundStatement) {
                        let ix = g.children(p).iter().position(|c| *c == n).unwrap_or(0);
                        return (p, ix);
                    }
                }
            }
        }
    }
    (compound, children.len() - 1)
}

fn read_names(g: &CpgGraph, stmt: NodeId) -> BTreeSet<String> {
    // Only the condition/selector of branching statements is evaluated before the jump.
    let roots: Vec<NodeId> = match g.kind(stmt) {
        Some(NodeKind::IfStatement) | Some(NodeKind::SwitchStatement) => g.child(stmt, 0).into_iter().collect(),
        Some(NodeKind::ReturnStatement) | Some(NodeKind::ThrowStatement) => g.children(stmt).to_vec(),
        _ => Vec::new(),
    };
    roots
        .into_iter()
        .flat_map(|r| g.subtree(r))
        .filter_map(|n| g.node(n))
        .filter(|n| n.kind == NodeKind::DeclaredReferenceExpression)
        .filter_map(|n| n.name.clone())
        .collect()
}

/// Records grouped by owning block, preserving order; used by the interpreter.
pub fn phis_by_block(records: &[PhiRecord]) -> BTreeMap<(NodeId, String), Vec<&PhiRecord>> {
    let mut out: BTreeMap<(NodeId, String), Vec<&PhiRecord>> = BTreeMap::new();
    for r in records {
        out.entry((r.owning_function, r.block_label.clone())).or_default().push(r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_module;
    use crate::mapper::map_module;

    #[test]
    fn records_group_by_block_in_order() {
        let src = "define i32 @f(i1 %c) {\nentry:\n  br i1 %c, label %a, label %b\na:\n  br label %j\nb:\n  br label %j\n\
                   j:\n  %x = phi i32 [ 1, %a ], [ 2, %b ]\n  %y = phi i32 [ 3, %a ], [ 4, %b ]\n  %s = add i32 %x, %y\n  ret i32 %s\n}\n";
        let g = map_module(&parse_module(src, "t.ll").unwrap().0);
        let records: Vec<PhiRecord> = g.phi_records.clone();
        let groups = phis_by_block(&records);
        assert_eq!(groups.len(), 1);
        let (key, group) = groups.iter().next().unwrap();
        assert_eq!(key.1, "j");
        let names: Vec<&str> = group.iter().map(|r| r.target_name.as_str()).collect();
        assert_eq!(names, ["x", "y"]);
    }

    #[test]
    fn strict_elimination_empties_the_records() {
        let src = "define i32 @f(i1 %c) {\nentry:\n  br i1 %c, label %a, label %j\na:\n  br label %j\n\
                   j:\n  %x = phi i32 [ 1, %a ], [ 2, %entry ]\n  ret i32 %x\n}\n";
        let mut g = map_module(&parse_module(src, "t.ll").unwrap().0);
        let r = eliminate_phis(&mut g).unwrap();
        assert!(r.hazards.is_empty());
        assert!(g.phi_records.is_empty());
    }
}
