//! Evaluation-order edges, built per function by a structural walk.
//!
//! Expressions are evaluated children first, statements are entered before
//! their children. Gotos are resolved against the function's labels once the
//! walk is done.

use std::collections::{HashMap, HashSet};

use super::PassError;
use crate::cpg::{CpgGraph, EdgeKind, NodeId, NodeKind};

/// Calls that end their block without an explicit jump.
const TERMINAL_CALLS: &[&str] = &["llvm.unreachable", "llvm.cleanupret", "llvm.indirectbr"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EogReport {
    pub edges: usize,
    /// Gotos whose label does not exist in their function.
    pub unresolved_gotos: Vec<String>,
}

/// Strict variant of [`build_eog_lenient`]: the edges are still built, but
/// any goto without a label is reported as an error.
pub fn build_eog(g: &mut CpgGraph) -> Result<EogReport, PassError> {
    let report = build_eog_lenient(g);
    match report.unresolved_gotos.first() {
        Some(l) => Err(PassError::GotoWithoutLabel(l.clone())),
        None => Ok(report),
    }
}

/// Replaces all EOG edges of the graph.
pub fn build_eog_lenient(g: &mut CpgGraph) -> EogReport {
    g.clear_edges(&[EdgeKind::Eog]);
    let functions: Vec<NodeId> = g.nodes_of_kind(NodeKind::FunctionDeclaration).map(|n| n.id).collect();
    let mut report = EogReport::default();
    let mut all = Vec::new();
    for f in functions {
        let mut b = Builder {
            g,
            edges: Vec::new(),
            seen: HashSet::new(),
            gotos: Vec::new(),
            labels: HashMap::new(),
            indirect: Vec::new(),
        };
        let mut frontier = vec![f];
        for &c in g.children(f) {
            frontier = b.visit(c, frontier);
        }
        let Builder {
            mut edges,
            gotos,
            labels,
            indirect,
            mut seen,
            ..
        } = b;
        let jumps = gotos
            .iter()
            .map(|&n| (n, g.node(n).and_then(|x| x.name.clone()).unwrap_or_default()))
            .chain(indirect);
        for (from, label) in jumps {
            match labels.get(&label) {
                Some(&l) => {
                    if seen.insert((from, l)) {
                        edges.push((from, l));
                    }
                }
                None => {
                    log::warn!("goto {label} has no label in its function");
                    report.unresolved_gotos.push(label);
                }
            }
        }
        all.extend(edges);
    }
    report.edges = all.len();
    for (a, b) in all {
        g.add_edge(a, b, EdgeKind::Eog);
    }
    report
}

struct Builder<'a> {
    g: &'a CpgGraph,
    edges: Vec<(NodeId, NodeId)>,
    seen: HashSet<(NodeId, NodeId)>,
    gotos: Vec<NodeId>,
    labels: HashMap<String, NodeId>,
    indirect: Vec<(NodeId, String)>,
}

impl Builder<'_> {
    fn link(&mut self, preds: &[NodeId], to: NodeId) {
        for &p in preds {
            if self.seen.insert((p, to)) {
                self.edges.push((p, to));
            }
        }
    }

    fn sequence(&mut self, nodes: &[NodeId], mut frontier: Vec<NodeId>) -> Vec<NodeId> {
        for &c in nodes {
            frontier = self.visit(c, frontier);
        }
        frontier
    }

    /// Wires `n` after `preds` and returns the nodes control leaves `n` from.
    fn visit(&mut self, n: NodeId, preds: Vec<NodeId>) -> Vec<NodeId> {
        let g = self.g;
        let node = g.node(n).expect("live node");
        let children = g.children(n);
        match node.kind {
            NodeKind::CompoundStatement | NodeKind::CaseStatement | NodeKind::CatchClause => {
                self.link(&preds, n);
                self.sequence(children, vec![n])
            }
            NodeKind::LabelStatement => {
                if let Some(name) = &node.name {
                    self.labels.entry(name.clone()).or_insert(n);
                }
                self.link(&preds, n);
                self.sequence(children, vec![n])
            }
            NodeKind::GotoStatement => {
                self.link(&preds, n);
                self.gotos.push(n);
                Vec::new()
            }
            NodeKind::ReturnStatement | NodeKind::ThrowStatement => {
                let f = self.sequence(children, preds);
                self.link(&f, n);
                Vec::new()
            }
            NodeKind::IfStatement => {
                let f = match children.first() {
                    Some(&c) => self.visit(c, preds),
                    None => preds,
                };
                self.link(&f, n);
                let mut exits = match children.get(1) {
                    Some(&t) => self.visit(t, vec![n]),
                    None => vec![n],
                };
                match children.get(2) {
                    Some(&e) => exits.extend(self.visit(e, vec![n])),
                    None => exits.push(n),
                }
                exits
            }
            NodeKind::SwitchStatement => {
                let f = match children.first() {
                    Some(&c) => self.visit(c, preds),
                    None => preds,
                };
                self.link(&f, n);
                let mut exits = Vec::new();
                let mut has_default = false;
                for &c in children.iter().skip(1) {
                    has_default |= g.node(c).is_some_and(|x| x.prop("default").is_some());
                    exits.extend(self.visit(c, vec![n]));
                }
                if !has_default {
                    exits.push(n);
                }
                exits
            }
            NodeKind::TryStatement => {
                self.link(&preds, n);
                let mut exits = Vec::new();
                let Some((&body, clauses)) = children.split_first() else {
                    return vec![n];
                };
                exits.extend(self.visit(body, vec![n]));
                let mut throwing: Vec<NodeId> = g
                    .subtree(body)
                    .into_iter()
                    .filter(|&c| g.kind(c) == Some(NodeKind::CallExpression))
                    .collect();
                if throwing.is_empty() {
                    throwing.push(n);
                }
                for &c in clauses {
                    exits.extend(self.visit(c, throwing.clone()));
                }
                exits
            }
            NodeKind::BinaryOperator if matches!(node.operator(), Some("&&") | Some("||")) && children.len() == 2 => {
                let l = self.visit(children[0], preds);
                let r = self.visit(children[1], l.clone());
                self.link(&l, n);
                self.link(&r, n);
                vec![n]
            }
            NodeKind::ConditionalExpression if children.len() == 3 => {
                let c = self.visit(children[0], preds);
                let t = self.visit(children[1], c.clone());
                let e = self.visit(children[2], c);
                self.link(&t, n);
                self.link(&e, n);
                vec![n]
            }
            NodeKind::CallExpression if node.name.as_deref().is_some_and(|c| TERMINAL_CALLS.contains(&c)) => {
                let f = self.sequence(children, preds);
                self.link(&f, n);
                if let Some(targets) = node.prop_str("targets") {
                    for t in targets.split(',').filter(|t| !t.is_empty()) {
                        self.indirect.push((n, t.to_string()));
                    }
                }
                // Only a terminator when it is a statement of its own.
                if g.parent(n).and_then(|p| g.kind(p)) == Some(NodeKind::CompoundStatement) {
                    Vec::new()
                } else {
                    vec![n]
                }
            }
            _ => {
                // Declarations and expressions: operands first, then the node.
                let f = self.sequence(children, preds);
                self.link(&f, n);
                vec![n]
            }
        }
    }
}
