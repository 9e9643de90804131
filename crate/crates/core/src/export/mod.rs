//! Serialization of a graph: JSON (with re-import), GraphML and Neo4j bulk CSV.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpg::{CpgGraph, EdgeKind, NewNode, NodeId, NodeKind, Properties, PropValue};
use crate::ir::{parse_type, Location, TypeRef};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed graph document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("graph document: {0}")]
    Invalid(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonGraph {
    nodes: Vec<JsonNode>,
    edges: Vec<JsonEdge>,
    stats: JsonStats,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonNode {
    id: u32,
    kind: String,
    name: Option<String>,
    code: String,
    #[serde(rename = "type")]
    ty: String,
    properties: Properties,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    location: Option<[u32; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonEdge {
    from: u32,
    to: u32,
    kind: EdgeKind,
    properties: Properties,
}

/// Phase timings are left out so that output is byte-stable.
#[derive(Debug, Serialize, Deserialize)]
struct JsonStats {
    node_count: usize,
    function_count: usize,
    problem_node_count: usize,
}

/// JSON document with nodes sorted by id and edges by (from, kind, position).
pub fn export_json(g: &CpgGraph) -> Vec<u8> {
    let doc = JsonGraph {
        nodes: g
            .nodes()
            .map(|n| JsonNode {
                id: n.id.0,
                kind: n.kind.as_str().to_string(),
                name: n.name.clone(),
                code: n.code.clone(),
                ty: n.ty.to_string(),
                properties: n.properties.clone(),
                location: n.location.map(|l| [l.line, l.column]),
            })
            .collect(),
        edges: g
            .all_edges()
            .into_iter()
            .map(|e| JsonEdge {
                from: e.from.0,
                to: e.to.0,
                kind: e.kind,
                properties: e.properties,
            })
            .collect(),
        stats: JsonStats {
            node_count: g.stats().node_count,
            function_count: g.stats().function_count,
            problem_node_count: g.stats().problem_node_count,
        },
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("graph serializes");
    out.push(b'\n');
    out
}

/// Rebuilds a graph from [`export_json`] output. Node ids must be dense from 0,
/// which holds for every finalized graph.
pub fn import_json(bytes: &[u8]) -> Result<CpgGraph, ExportError> {
    let mut doc: JsonGraph = serde_json::from_slice(bytes)?;
    doc.nodes.sort_by_key(|n| n.id);
    let mut g = CpgGraph::new();
    for (i, n) in doc.nodes.into_iter().enumerate() {
        if n.id as usize != i {
            return Err(ExportError::Invalid(format!("node ids are not dense at {}", n.id)));
        }
        let kind = NodeKind::parse(&n.kind).ok_or_else(|| ExportError::Invalid(format!("unknown node kind {}", n.kind)))?;
        let ty = parse_type(&n.ty).unwrap_or(TypeRef::Opaque);
        let mut properties = n.properties;
        // Non-finite floats were written as strings.
        if ty.is_float() {
            if let Some(PropValue::Str(s)) = properties.get("value") {
                if let Ok(f) = s.parse::<f64>() {
                    properties.insert("value".into(), PropValue::Float(f));
                }
            }
        }
        let id = g
            .new_node(NewNode {
                kind,
                name: n.name,
                code: n.code,
                ty,
                properties,
                location: n.location.map(|[line, column]| Location { line, column }),
            })
            .map_err(|e| ExportError::Invalid(e.to_string()))?;
        debug_assert_eq!(id.0 as usize, i);
    }
    let count = g.node_count() as u32;
    let mut ast: Vec<(u32, i64, u32)> = Vec::new();
    for e in &doc.edges {
        if e.from >= count || e.to >= count {
            return Err(ExportError::Invalid(format!("edge {}->{} leaves the graph", e.from, e.to)));
        }
        if e.kind == EdgeKind::Ast {
            let ix = e.properties.get("index").and_then(PropValue::as_int).unwrap_or(0);
            ast.push((e.from, ix, e.to));
        }
    }
    ast.sort();
    for (from, _, to) in ast {
        g.add_child(NodeId(from), NodeId(to));
    }
    for e in doc.edges.into_iter().filter(|e| e.kind != EdgeKind::Ast) {
        g.add_edge_with(NodeId(e.from), NodeId(e.to), e.kind, e.properties);
    }
    g.finalize();
    Ok(g)
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\n' | '\t' | '\r') => {
                let _ = write!(out, "&#x{:x};", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

/// GraphML with the node kind as `labels` attribute and properties flattened
/// into `p_<name>` data keys.
pub fn export_graphml(g: &CpgGraph) -> String {
    let prop_keys: BTreeSet<&str> = g.nodes().flat_map(|n| n.properties.keys().map(String::as_str)).collect();
    let edges = g.all_edges();
    let edge_keys: BTreeSet<String> = edges.iter().flat_map(|e| e.properties.keys().cloned()).collect();
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    for k in ["kind", "name", "code", "type"] {
        let _ = writeln!(out, "  <key id=\"{k}\" for=\"node\" attr.name=\"{k}\" attr.type=\"string\"/>");
    }
    for k in &prop_keys {
        let k = xml_escape(k);
        let _ = writeln!(out, "  <key id=\"p_{k}\" for=\"node\" attr.name=\"{k}\" attr.type=\"string\"/>");
    }
    out.push_str("  <key id=\"e_kind\" for=\"edge\" attr.name=\"kind\" attr.type=\"string\"/>\n");
    for k in &edge_keys {
        let k = xml_escape(k);
        let _ = writeln!(out, "  <key id=\"e_{k}\" for=\"edge\" attr.name=\"{k}\" attr.type=\"string\"/>");
    }
    out.push_str("  <graph id=\"cpg\" edgedefault=\"directed\">\n");
    for n in g.nodes() {
        let _ = writeln!(out, "    <node id=\"n{}\" labels=\":{}\">", n.id, n.kind);
        let _ = writeln!(out, "      <data key=\"kind\">{}</data>", n.kind);
        if let Some(name) = &n.name {
            let _ = writeln!(out, "      <data key=\"name\">{}</data>", xml_escape(name));
        }
        let _ = writeln!(out, "      <data key=\"code\">{}</data>", xml_escape(&n.code));
        let _ = writeln!(out, "      <data key=\"type\">{}</data>", xml_escape(&n.ty.to_string()));
        for (k, v) in &n.properties {
            let _ = writeln!(out, "      <data key=\"p_{}\">{}</data>", xml_escape(k), xml_escape(&v.to_string()));
        }
        out.push_str("    </node>\n");
    }
    for (i, e) in edges.iter().enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"e{i}\" source=\"n{}\" target=\"n{}\" label=\"{}\">",
            e.from, e.to, e.kind
        );
        let _ = writeln!(out, "      <data key=\"e_kind\">{}</data>", e.kind);
        for (k, v) in &e.properties {
            let _ = writeln!(out, "      <data key=\"e_{}\">{}</data>", xml_escape(k), xml_escape(&v.to_string()));
        }
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

pub const NODES_HEADER: [&str; 5] = ["id:ID", "kind:LABEL", "name", "code", "type"];
pub const EDGES_HEADER: [&str; 3] = [":START_ID", ":END_ID", "kind:TYPE"];

/// Writes `nodes.csv` and `edges.csv` for `neo4j-admin database import`.
pub fn export_neo4j_csv(g: &CpgGraph, dir: &Path) -> Result<(), ExportError> {
    fs::create_dir_all(dir)?;
    let mut nodes = csv::Writer::from_path(dir.join("nodes.csv"))?;
    nodes.write_record(NODES_HEADER)?;
    for n in g.nodes() {
        nodes.write_record([
            n.id.to_string(),
            n.kind.to_string(),
            n.name.clone().unwrap_or_default(),
            n.code.clone(),
            n.ty.to_string(),
        ])?;
    }
    nodes.flush()?;
    let mut edges = csv::Writer::from_path(dir.join("edges.csv"))?;
    edges.write_record(EDGES_HEADER)?;
    for e in g.all_edges() {
        edges.write_record([e.from.to_string(), e.to.to_string(), e.kind.to_string()])?;
    }
    edges.flush()?;
    Ok(())
}

/// Indented AST dump, one node per line; handy in tests and for debugging.
pub fn render_tree(g: &CpgGraph) -> String {
    g.roots().iter().map(|&r| render_subtree(g, r)).collect()
}

/// [`render_tree`] restricted to the subtree under `root`.
pub fn render_subtree(g: &CpgGraph, root: NodeId) -> String {
    let mut out = String::new();
    let mut stack = vec![(root, 0usize)];
    while let Some((n, depth)) = stack.pop() {
        let node = g.node(n).expect("live");
        let _ = write!(out, "{}{}", "  ".repeat(depth), node.kind);
        if let Some(name) = &node.name {
            let _ = write!(out, " {name}");
        }
        if let Some(op) = node.operator() {
            let _ = write!(out, " [{op}]");
        }
        if let Some(v) = node.prop("value") {
            let _ = write!(out, " ={v}");
        }
        out.push('\n');
        for &c in g.children(n).iter().rev() {
            stack.push((c, depth + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::TypeRef;

    #[test]
    fn xml_escaping() {
        assert_eq!(xml_escape(r#"a<b & "c" 'd'>"#), "a&lt;b &amp; &quot;c&quot; &apos;d&apos;&gt;");
        assert_eq!(xml_escape("x\u{1}y\nz"), "x&#x1;y\nz");
    }

    #[test]
    fn subtree_rendering_is_preorder() {
        let mut g = CpgGraph::new();
        let op = g.add(NewNode::new(NodeKind::BinaryOperator).ty(TypeRef::Int(32)).prop("operatorCode", "+"));
        let a = g.add(NewNode::new(NodeKind::DeclaredReferenceExpression).name("a").ty(TypeRef::Int(32)));
        let one = g.add(NewNode::new(NodeKind::Literal).ty(TypeRef::Int(32)).prop("value", 1i64));
        g.add_child(op, a);
        g.add_child(op, one);
        assert_eq!(render_subtree(&g, op), "BinaryOperator [+]\n  DeclaredReferenceExpression a\n  Literal =1\n");
    }
}
