//! Removal of functions whose only job is to call an external function.

use std::collections::HashSet;

use crate::cpg::{CpgGraph, NewNode, NodeId, NodeKind};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StubReport {
    /// Removed functions, in removal order.
    pub removed: Vec<String>,
    pub rewired_calls: usize,
}

/// How a stub builds the callee's arguments.
#[derive(Debug, Clone)]
enum StubArg {
    Param(usize),
    Literal(NodeId),
}

struct Stub {
    function: NodeId,
    name: String,
    callee: String,
    args: Vec<StubArg>,
}

pub fn remove_stubs(g: &mut CpgGraph) -> StubReport {
    let mut report = StubReport::default();
    let cap = g.node_count();
    while report.removed.len() < cap {
        let Some(stub) = find_stub(g) else { break };
        let callers: Vec<NodeId> = g
            .nodes_of_kind(NodeKind::CallExpression)
            .filter(|c| c.name_is(&stub.name) && c.prop("indirect").is_none())
            .filter(|c| g.function_of(c.id) != Some(stub.function))
            .map(|c| c.id)
            .collect();
        for call in callers {
            let old = g.children(call).to_vec();
            let mut new_args = Vec::new();
            for a in &stub.args {
                let src = match a {
                    StubArg::Param(k) => old.get(*k).copied(),
                    StubArg::Literal(l) => Some(*l),
                };
                new_args.push(match src {
                    Some(s) => clone_subtree(g, s),
                    None => g.add(NewNode::new(NodeKind::ProblemNode).prop("problem", "stub argument missing at call site")),
                });
            }
            g.remove_subtrees(&old);
            for a in new_args {
                g.add_child(call, a);
            }
            if let Some(n) = g.node_mut(call) {
                n.name = Some(stub.callee.clone());
                n.properties.insert("stub".into(), stub.name.clone().into());
            }
            report.rewired_calls += 1;
        }
        g.remove_subtree(stub.function);
        log::info!("removed stub {} (calls {})", stub.name, stub.callee);
        report.removed.push(stub.name);
    }
    report
}

fn find_stub(g: &CpgGraph) -> Option<Stub> {
    let external: HashSet<&str> = g
        .nodes_of_kind(NodeKind::FunctionDeclaration)
        .filter(|f| f.prop("declaration").and_then(|d| d.as_bool()) == Some(true))
        .filter_map(|f| f.name.as_deref())
        .collect();
    // Functions whose address is taken stay, their callers are unknown.
    let referenced: HashSet<&str> = g
        .nodes_of_kind(NodeKind::DeclaredReferenceExpression)
        .filter(|r| r.prop("scope").is_some())
        .filter_map(|r| r.name.as_deref())
        .collect();
    for f in g.nodes_of_kind(NodeKind::FunctionDeclaration) {
        let name = f.name.clone().unwrap_or_default();
        if referenced.contains(name.as_str()) || external.contains(name.as_str()) {
            continue;
        }
        let children = g.children(f.id);
        let params: Vec<String> = children
            .iter()
            .filter_map(|&c| g.node(c))
            .filter(|c| c.kind == NodeKind::ParameterDeclaration)
            .map(|c| c.name.clone().unwrap_or_default())
            .collect();
        let Some(&body) = children.iter().find(|&&c| g.kind(c) == Some(NodeKind::CompoundStatement)) else {
            continue;
        };
        let stmts = flatten(g, body);
        let (call, result) = match stmts.as_slice() {
            [s] => (call_of(g, *s), None),
            [s, r] if g.kind(*r) == Some(NodeKind::ReturnStatement) => (call_of(g, *s), Some(*r)),
            _ => continue,
        };
        let Some(call) = call else { continue };
        let callee = g.node(call).and_then(|c| c.name.clone()).unwrap_or_default();
        if callee == name || !external.contains(callee.as_str()) || g.node(call).is_some_and(|c| c.prop("indirect").is_some()) {
            continue;
        }
        if let Some(r) = result {
            let ok = match g.children(r) {
                [] => true,
                [v] => {
                    let decl = stmts[0];
                    g.kind(decl) == Some(NodeKind::VariableDeclaration)
                        && g.node(*v).is_some_and(|v| {
                            v.kind == NodeKind::DeclaredReferenceExpression && v.name == g.node(decl).and_then(|d| d.name.clone())
                        })
                }
                _ => false,
            };
            if !ok {
                continue;
            }
        }
        let mut args = Vec::new();
        let mut simple = true;
        for &a in g.children(call) {
            let n = g.node(a).expect("live");
            match n.kind {
                NodeKind::DeclaredReferenceExpression if n.prop("scope").is_none() => {
                    match params.iter().position(|p| n.name.as_deref() == Some(p.as_str())) {
                        Some(k) => args.push(StubArg::Param(k)),
                        None => simple = false,
                    }
                }
                NodeKind::Literal => args.push(StubArg::Literal(a)),
                _ => simple = false,
            }
        }
        if !simple {
            continue;
        }
        return Some(Stub {
            function: f.id,
            name,
            callee,
            args,
        });
    }
    None
}

/// Statements of a body with label and compound wrappers removed.
fn flatten(g: &CpgGraph, n: NodeId) -> Vec<NodeId> {
    let mut out = Vec::new();
    for &c in g.children(n) {
        match g.kind(c) {
            Some(NodeKind::CompoundStatement) | Some(NodeKind::LabelStatement) => out.extend(flatten(g, c)),
            _ => out.push(c),
        }
    }
    out
}

/// The call a statement consists of: `f(..)` or `T x = f(..)`.
fn call_of(g: &CpgGraph, s: NodeId) -> Option<NodeId> {
    match g.kind(s)? {
        NodeKind::CallExpression => Some(s),
        NodeKind::VariableDeclaration => g.child(s, 0).filter(|&c| g.kind(c) == Some(NodeKind::CallExpression)),
        _ => None,
    }
}

/// Copies a subtree's nodes (not its non-AST edges) and returns the new root.
pub fn clone_subtree(g: &mut CpgGraph, root: NodeId) -> NodeId {
    let n = g.node(root).expect("live").clone();
    let copy = g.add(NewNode {
        kind: n.kind,
        name: n.name,
        code: n.code,
        ty: n.ty,
        properties: n.properties,
        location: n.location,
    });
    for c in g.children(root).to_vec() {
        let cc = clone_subtree(g, c);
        g.add_child(copy, cc);
    }
    copy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::export::render_subtree;
    use crate::ir::TypeRef;

    #[test]
    fn clone_copies_shape_with_fresh_ids() {
        let mut g = CpgGraph::new();
        let call = g.add(NewNode::new(NodeKind::CallExpression).name("f").ty(TypeRef::Void));
        let arg = g.add(NewNode::new(NodeKind::Literal).ty(TypeRef::Int(32)).prop("value", 7i64));
        g.add_child(call, arg);
        let copy = clone_subtree(&mut g, call);
        assert_ne!(copy, call);
        assert_eq!(render_subtree(&g, copy), render_subtree(&g, call));
        assert_eq!(render_subtree(&g, copy), "CallExpression f\n  Literal =7\n");
        assert!(g.subtree(copy).iter().all(|n| !g.subtree(call).contains(n)));
    }
}
