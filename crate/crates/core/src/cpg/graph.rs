use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use super::node::*;
use crate::ir::types::literal_struct_name;
use crate::ir::{IrOperand, Location, TypeRef};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("{kind} node is missing required property `{property}`")]
    MissingRequiredProperty { kind: NodeKind, property: &'static str },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("graph is finalized and can no longer be modified")]
    Finalized,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TranslationStats {
    pub node_count: usize,
    pub function_count: usize,
    pub problem_node_count: usize,
    /// Wall time per phase in milliseconds, in execution order.
    pub phase_times: Vec<(String, f64)>,
}

impl TranslationStats {
    pub fn record_phase(&mut self, phase: &str, millis: f64) {
        match self.phase_times.iter_mut().find(|(p, _)| p == phase) {
            Some((_, t)) => *t += millis,
            None => self.phase_times.push((phase.to_string(), millis)),
        }
    }

    pub fn total_millis(&self) -> f64 {
        self.phase_times.iter().map(|(_, t)| t).sum()
    }
}

/// A φ-instruction whose lowering is deferred until the whole function is mapped.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiRecord {
    pub target_name: String,
    pub target_type: TypeRef,
    pub incoming: Vec<(IrOperand, String)>,
    pub owning_function: NodeId,
    /// Label of the block the φ sits in.
    pub block_label: String,
    pub code: String,
    pub location: Location,
}

/// Per-function bookkeeping the mapper leaves for later passes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FunctionInfo {
    pub name: String,
    pub body: Option<NodeId>,
    /// (label, LabelStatement, CompoundStatement) in source order.
    pub blocks: Vec<(String, NodeId, NodeId)>,
    /// Locals whose address is taken through `alloca`; references become `&name`.
    pub allocas: BTreeSet<String>,
    pub is_definition: bool,
}

impl FunctionInfo {
    pub fn block(&self, label: &str) -> Option<(NodeId, NodeId)> {
        self.blocks.iter().find(|(l, _, _)| l == label).map(|(_, ls, c)| (*ls, *c))
    }
}

#[derive(Debug, Clone, Default)]
pub struct CpgGraph {
    nodes: Vec<Option<CpgNode>>,
    children: Vec<Vec<NodeId>>,
    parent: Vec<Option<NodeId>>,
    edges: Vec<CpgEdge>,
    out_adj: Vec<Vec<u32>>,
    in_adj: Vec<Vec<u32>>,
    roots: Vec<NodeId>,
    stats: TranslationStats,
    literal_structs: HashMap<Vec<TypeRef>, NodeId>,
    records: BTreeMap<String, NodeId>,
    pub phi_records: Vec<PhiRecord>,
    pub functions: BTreeMap<NodeId, FunctionInfo>,
    /// Named type definitions of the source module, for address computations.
    pub type_defs: Vec<(String, TypeRef)>,
    finalized: bool,
}

impl CpgGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    pub fn stats(&self) -> &TranslationStats {
        &self.stats
    }

    /// Phase timings may be recorded even after finalize; they do not change the graph.
    pub fn record_phase(&mut self, phase: &str, millis: f64) {
        self.stats.record_phase(phase, millis);
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn node_count(&self) -> usize {
        self.stats.node_count
    }

    /// Registers a node. Fails when a property required for the kind is missing.
    pub fn new_node(&mut self, spec: NewNode) -> Result<NodeId, GraphError> {
        if self.finalized {
            return Err(GraphError::Finalized);
        }
        for &property in spec.kind.required_properties() {
            if !spec.properties.contains_key(property) {
                return Err(GraphError::MissingRequiredProperty { kind: spec.kind, property });
            }
        }
        let id = NodeId(self.nodes.len() as u32);
        match spec.kind {
            NodeKind::ProblemNode => self.stats.problem_node_count += 1,
            NodeKind::FunctionDeclaration => self.stats.function_count += 1,
            NodeKind::TranslationUnit => self.roots.push(id),
            _ => {}
        }
        self.stats.node_count += 1;
        self.nodes.push(Some(CpgNode {
            id,
            kind: spec.kind,
            name: spec.name,
            code: spec.code,
            ty: spec.ty,
            properties: spec.properties,
            location: spec.location,
        }));
        self.children.push(Vec::new());
        self.parent.push(None);
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());
        Ok(id)
    }

    /// Creates a node whose kind has no required properties, or whose properties are known present.
    pub fn add(&mut self, spec: NewNode) -> NodeId {
        let kind = spec.kind;
        self.new_node(spec)
            .unwrap_or_else(|e| panic!("internal node construction for {kind} failed: {e}"))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.get(id.index()).is_some_and(Option::is_some)
    }

    pub fn node(&self, id: NodeId) -> Option<&CpgNode> {
        self.nodes.get(id.index()).and_then(Option::as_ref)
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut CpgNode> {
        if self.finalized {
            return None;
        }
        self.nodes.get_mut(id.index()).and_then(Option::as_mut)
    }

    pub fn kind(&self, id: NodeId) -> Option<NodeKind> {
        self.node(id).map(|n| n.kind)
    }

    /// Live nodes in id order.
    pub fn nodes(&self) -> impl Iterator<Item = &CpgNode> {
        self.nodes.iter().filter_map(Option::as_ref)
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &CpgNode> {
        self.nodes().filter(move |n| n.kind == kind)
    }

    // ---- AST ------------------------------------------------------------

    pub fn ast_children(&self, id: NodeId) -> Result<&[NodeId], GraphError> {
        if !self.contains(id) {
            return Err(GraphError::UnknownNode(id));
        }
        Ok(&self.children[id.index()])
    }

    /// AST children; empty for unknown ids.
    pub fn children(&self, id: NodeId) -> &[NodeId] {
        self.children.get(id.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn child(&self, id: NodeId, index: usize) -> Option<NodeId> {
        self.children(id).get(index).copied()
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent.get(id.index()).copied().flatten()
    }

    pub fn add_child(&mut self, parent: NodeId, child: NodeId) {
        let len = self.children[parent.index()].len();
        self.insert_child(parent, len, child);
    }

    pub fn insert_child(&mut self, parent: NodeId, index: usize, child: NodeId) {
        assert!(!self.finalized, "graph is finalized");
        self.detach(child);
        let list = &mut self.children[parent.index()];
        let index = index.min(list.len());
        list.insert(index, child);
        self.parent[child.index()] = Some(parent);
    }

    /// Removes `child` from its parent's child list, keeping the subtree alive.
    pub fn detach(&mut self, child: NodeId) {
        if let Some(p) = self.parent[child.index()].take() {
            self.children[p.index()].retain(|c| *c != child);
        }
    }

    /// Replaces `old` in its parent's child list with `new` (same position).
    pub fn replace_child(&mut self, old: NodeId, new: NodeId) {
        let Some(p) = self.parent(old) else {
            return;
        };
        self.detach(new);
        if let Some(pos) = self.children[p.index()].iter().position(|c| *c == old) {
            self.children[p.index()][pos] = new;
            self.parent[new.index()] = Some(p);
            self.parent[old.index()] = None;
        }
    }

    /// Pre-order traversal of the subtree rooted at `id`.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children(n).iter().rev().copied());
        }
        out
    }

    /// Nearest ancestor (or self) of the given kind.
    pub fn ancestor_of_kind(&self, id: NodeId, kind: NodeKind) -> Option<NodeId> {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if self.kind(c) == Some(kind) {
                return Some(c);
            }
            cur = self.parent(c);
        }
        None
    }

    pub fn function_of(&self, id: NodeId) -> Option<NodeId> {
        self.ancestor_of_kind(id, NodeKind::FunctionDeclaration)
    }

    /// Deletes a subtree and every edge touching it.
    pub fn remove_subtree(&mut self, id: NodeId) {
        self.remove_subtrees(&[id]);
    }

    pub fn remove_subtrees(&mut self, ids: &[NodeId]) {
        assert!(!self.finalized, "graph is finalized");
        let mut doomed = BTreeSet::new();
        for &id in ids {
            if !self.contains(id) {
                continue;
            }
            self.detach(id);
            doomed.extend(self.subtree(id));
        }
        if doomed.is_empty() {
            return;
        }
        for &n in &doomed {
            if let Some(node) = self.nodes[n.index()].take() {
                self.stats.node_count -= 1;
                match node.kind {
                    NodeKind::ProblemNode => self.stats.problem_node_count -= 1,
                    NodeKind::FunctionDeclaration => self.stats.function_count -= 1,
                    NodeKind::TranslationUnit => self.roots.retain(|r| *r != n),
                    _ => {}
                }
            }
            self.children[n.index()].clear();
            self.parent[n.index()] = None;
        }
        self.literal_structs.retain(|_, v| !doomed.contains(v));
        self.records.retain(|_, v| !doomed.contains(v));
        self.functions.retain(|k, _| !doomed.contains(k));
        self.retain_edges(|e| !doomed.contains(&e.from) && !doomed.contains(&e.to));
    }

    // ---- other edges ----------------------------------------------------

    pub fn add_edge(&mut self, from: NodeId, to: NodeId, kind: EdgeKind) {
        self.add_edge_with(from, to, kind, Properties::new());
    }

    pub fn add_edge_with(&mut self, from: NodeId, to: NodeId, kind: EdgeKind, properties: Properties) {
        assert!(!self.finalized, "graph is finalized");
        assert!(kind != EdgeKind::Ast, "AST edges are managed through add_child");
        debug_assert!(self.contains(from) && self.contains(to), "dangling edge {from}->{to}");
        let ix = self.edges.len() as u32;
        self.edges.push(CpgEdge {
            from,
            to,
            kind,
            properties,
        });
        self.out_adj[from.index()].push(ix);
        self.in_adj[to.index()].push(ix);
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId, kind: EdgeKind) -> bool {
        self.out_adj
            .get(from.index())
            .is_some_and(|l| l.iter().any(|&e| self.edges[e as usize].to == to && self.edges[e as usize].kind == kind))
    }

    pub fn retain_edges(&mut self, mut keep: impl FnMut(&CpgEdge) -> bool) {
        self.edges.retain(|e| keep(e));
        self.rebuild_adjacency();
    }

    pub fn clear_edges(&mut self, kinds: &[EdgeKind]) {
        self.retain_edges(|e| !kinds.contains(&e.kind));
    }

    fn rebuild_adjacency(&mut self) {
        for l in self.out_adj.iter_mut().chain(self.in_adj.iter_mut()) {
            l.clear();
        }
        for (i, e) in self.edges.iter().enumerate() {
            self.out_adj[e.from.index()].push(i as u32);
            self.in_adj[e.to.index()].push(i as u32);
        }
    }

    /// Non-AST edges in insertion order.
    pub fn edges(&self) -> &[CpgEdge] {
        &self.edges
    }

    /// Every edge including AST edges (which carry an `index` property), sorted
    /// by (from, kind, position).
    pub fn all_edges(&self) -> Vec<CpgEdge> {
        let mut out = Vec::with_capacity(self.edges.len() + self.stats.node_count);
        for n in self.nodes() {
            for (i, c) in self.children(n.id).iter().enumerate() {
                let mut p = Properties::new();
                p.insert("index".to_string(), PropValue::Int(i as i64));
                out.push(CpgEdge {
                    from: n.id,
                    to: *c,
                    kind: EdgeKind::Ast,
                    properties: p,
                });
            }
        }
        let mut rest: Vec<(usize, &CpgEdge)> = self.edges.iter().enumerate().collect();
        rest.sort_by_key(|(i, e)| (e.from, e.kind, *i));
        out.extend(rest.into_iter().map(|(_, e)| e.clone()));
        out.sort_by_key(|e| (e.from, e.kind));
        out
    }

    pub fn out_edges(&self, id: NodeId, kind: EdgeKind) -> Vec<NodeId> {
        self.out_adj
            .get(id.index())
            .map(|l| l.iter().map(|&e| &self.edges[e as usize]).filter(|e| e.kind == kind).map(|e| e.to).collect())
            .unwrap_or_default()
    }

    pub fn in_edges(&self, id: NodeId, kind: EdgeKind) -> Vec<NodeId> {
        self.in_adj
            .get(id.index())
            .map(|l| l.iter().map(|&e| &self.edges[e as usize]).filter(|e| e.kind == kind).map(|e| e.from).collect())
            .unwrap_or_default()
    }

    pub fn eog_successors(&self, id: NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.checked(id).map(|_| self.out_edges(id, EdgeKind::Eog))
    }

    pub fn eog_predecessors(&self, id: NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.checked(id).map(|_| self.in_edges(id, EdgeKind::Eog))
    }

    pub fn dfg_predecessors(&self, id: NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.checked(id).map(|_| self.in_edges(id, EdgeKind::Dfg))
    }

    pub fn dfg_successors(&self, id: NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.checked(id).map(|_| self.out_edges(id, EdgeKind::Dfg))
    }

    /// Declaration a reference resolves to, if any.
    pub fn refers_to(&self, id: NodeId) -> Option<NodeId> {
        self.out_edges(id, EdgeKind::RefersTo).first().copied()
    }

    fn checked(&self, id: NodeId) -> Result<(), GraphError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(id))
        }
    }

    // ---- types ----------------------------------------------------------

    fn type_root(&mut self) -> NodeId {
        match self.roots.first() {
            Some(r) => *r,
            None => self.add(NewNode::new(NodeKind::TranslationUnit).name("")),
        }
    }

    /// The record declaration for a literal struct with these fields. Equal
    /// field lists always yield the same node.
    pub fn intern_literal_struct(&mut self, fields: &[TypeRef]) -> NodeId {
        if let Some(id) = self.literal_structs.get(fields) {
            return *id;
        }
        let name = literal_struct_name(fields);
        let ty = TypeRef::Struct {
            fields: fields.to_vec(),
            packed: false,
        };
        let id = self.declare_record(&name, ty, fields);
        self.literal_structs.insert(fields.to_vec(), id);
        id
    }

    /// Declares a named record with `field_k` members under the translation unit.
    pub fn declare_record(&mut self, name: &str, ty: TypeRef, fields: &[TypeRef]) -> NodeId {
        let root = self.type_root();
        let rec = self.add(NewNode::new(NodeKind::RecordDeclaration).name(name).code(name).ty(ty));
        self.add_child(root, rec);
        for (i, f) in fields.iter().enumerate() {
            let fname = format!("field_{i}");
            let fd = self.add(NewNode::new(NodeKind::FieldDeclaration).name(fname.clone()).code(fname).ty(f.clone()));
            self.add_child(rec, fd);
        }
        self.records.insert(name.to_string(), rec);
        rec
    }

    pub fn record(&self, name: &str) -> Option<NodeId> {
        self.records.get(name).copied()
    }

    /// Record declaration describing a struct type, when one exists.
    pub fn record_for_type(&self, ty: &TypeRef) -> Option<NodeId> {
        match ty {
            TypeRef::Named(n) => self.record(n),
            TypeRef::Struct { fields, .. } => self.literal_structs.get(fields).copied(),
            _ => None,
        }
    }

    pub fn field(&self, record: NodeId, index: usize) -> Option<NodeId> {
        self.child(record, index)
            .filter(|f| self.kind(*f) == Some(NodeKind::FieldDeclaration))
    }

    pub fn literal_struct_count(&self) -> usize {
        self.literal_structs.len()
    }

    // ---- lifecycle ------------------------------------------------------

    /// Compacts node ids to `0..n` (preserving relative order) and freezes the graph.
    pub fn finalize(&mut self) {
        if self.finalized {
            return;
        }
        let mut map: Vec<Option<NodeId>> = vec![None; self.nodes.len()];
        let mut next = 0u32;
        for (i, n) in self.nodes.iter().enumerate() {
            if n.is_some() {
                map[i] = Some(NodeId(next));
                next += 1;
            }
        }
        let m = |id: NodeId| map[id.index()].expect("live node");
        let old_nodes = std::mem::take(&mut self.nodes);
        let old_children = std::mem::take(&mut self.children);
        let old_parent = std::mem::take(&mut self.parent);
        for (i, n) in old_nodes.into_iter().enumerate() {
            if let Some(mut node) = n {
                node.id = m(node.id);
                self.nodes.push(Some(node));
                self.children.push(old_children[i].iter().map(|c| m(*c)).collect());
                self.parent.push(old_parent[i].map(m));
            }
        }
        for e in &mut self.edges {
            e.from = m(e.from);
            e.to = m(e.to);
        }
        self.roots = self.roots.iter().map(|r| m(*r)).collect();
        for v in self.literal_structs.values_mut() {
            *v = m(*v);
        }
        for v in self.records.values_mut() {
            *v = m(*v);
        }
        let functions = std::mem::take(&mut self.functions);
        for (k, mut info) in functions {
            info.body = info.body.map(m);
            info.blocks = info
                .blocks
                .into_iter()
                .filter(|(_, l, c)| map[l.index()].is_some() && map[c.index()].is_some())
                .map(|(n, l, c)| (n, m(l), m(c)))
                .collect();
            self.functions.insert(m(k), info);
        }
        for r in &mut self.phi_records {
            if let Some(f) = map.get(r.owning_function.index()).copied().flatten() {
                r.owning_function = f;
            }
        }
        self.out_adj = vec![Vec::new(); self.nodes.len()];
        self.in_adj = vec![Vec::new(); self.nodes.len()];
        self.rebuild_adjacency();
        self.finalized = true;
    }

    /// Checks the structural invariants; returns a description of each violation.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut counts = (0usize, 0usize, 0usize);
        for n in self.nodes() {
            counts.0 += 1;
            match n.kind {
                NodeKind::ProblemNode => counts.1 += 1,
                NodeKind::FunctionDeclaration => counts.2 += 1,
                _ => {}
            }
            let parent = self.parent(n.id);
            match (n.kind, parent) {
                (NodeKind::TranslationUnit, Some(_)) => problems.push(format!("translation unit {} has a parent", n.id)),
                (NodeKind::TranslationUnit, None) => {}
                (_, None) => problems.push(format!("{} {} has no AST parent", n.kind, n.id)),
                (_, Some(p)) => {
                    if !self.children(p).contains(&n.id) {
                        problems.push(format!("parent link of {} is inconsistent", n.id));
                    }
                }
            }
            for c in self.children(n.id) {
                if self.parent(*c) != Some(n.id) {
                    problems.push(format!("child {c} of {} has another parent", n.id));
                }
            }
            for p in n.kind.required_properties() {
                if !n.properties.contains_key(*p) {
                    problems.push(format!("{} {} lacks `{p}`", n.kind, n.id));
                }
            }
        }
        if counts.0 != self.stats.node_count {
            problems.push(format!("node_count {} but {} live nodes", self.stats.node_count, counts.0));
        }
        if counts.1 != self.stats.problem_node_count {
            problems.push(format!("problem_node_count {} but {} ProblemNodes", self.stats.problem_node_count, counts.1));
        }
        if counts.2 != self.stats.function_count {
            problems.push(format!("function_count {} but {} functions", self.stats.function_count, counts.2));
        }
        for e in &self.edges {
            if !self.contains(e.from) || !self.contains(e.to) {
                problems.push(format!("dangling {} edge {}->{}", e.kind, e.from, e.to));
                continue;
            }
            match e.kind {
                EdgeKind::RefersTo => {
                    let ok_from = self.kind(e.from) == Some(NodeKind::DeclaredReferenceExpression);
                    let ok_to = self.kind(e.to).is_some_and(NodeKind::is_declaration);
                    if !ok_from || !ok_to {
                        problems.push(format!("REFERS_TO {}->{} between wrong kinds", e.from, e.to));
                    }
                }
                EdgeKind::Eog
                    if self.function_of(e.from) != self.function_of(e.to) => {
                        problems.push(format!("EOG {}->{} crosses a function boundary", e.from, e.to));
                    }
                _ => {}
            }
        }
        problems
    }
}
