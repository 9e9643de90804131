mod common;

use cpgir::cpg::{CpgGraph, EdgeKind, NewNode, NodeKind};
use cpgir::export::*;
use cpgir::ir::TypeRef;
use cpgir::passes::PassPipeline;
use cpgir::translate;

fn translated(name: &str) -> CpgGraph {
    translate(&common::fixture(name), name, &PassPipeline::default()).unwrap().graph
}

#[test]
fn empty_module_exports_only_the_translation_unit() {
    let g = translate("", "empty.ll", &PassPipeline::default()).unwrap().graph;
    let doc: serde_json::Value = serde_json::from_slice(&export_json(&g)).unwrap();
    assert_eq!(doc["nodes"].as_array().unwrap().len(), 1);
    assert_eq!(doc["nodes"][0]["kind"], "TranslationUnit");
    assert_eq!(doc["edges"].as_array().unwrap().len(), 0);
    assert_eq!(doc["stats"]["node_count"], 1);
}

#[test]
fn json_shows_literal_struct_and_field_access() {
    let doc: serde_json::Value = serde_json::from_slice(&export_json(&translated("insertvalue.ll"))).unwrap();
    let nodes = doc["nodes"].as_array().unwrap();
    assert!(nodes.iter().any(|n| n["kind"] == "RecordDeclaration" && n["name"] == "literal_i32_i8"));
    assert!(nodes.iter().any(|n| n["kind"] == "MemberExpression" && n["name"] == "field_1"));
    for key in ["id", "kind", "name", "code", "type", "properties"] {
        assert!(nodes[0].get(key).is_some(), "missing {key}");
    }
    let e = &doc["edges"][0];
    for key in ["from", "to", "kind", "properties"] {
        assert!(e.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn json_node_count_matches_stats() {
    for (name, src) in common::all_fixtures() {
        let g = translate(&src, &name, &PassPipeline::default()).unwrap().graph;
        let doc: serde_json::Value = serde_json::from_slice(&export_json(&g)).unwrap();
        assert_eq!(doc["nodes"].as_array().unwrap().len(), g.stats().node_count, "{name}");
    }
}

#[test]
fn json_roundtrip_reproduces_the_document() {
    for (name, src) in common::all_fixtures() {
        let g = translate(&src, &name, &PassPipeline::all()).unwrap().graph;
        let bytes = export_json(&g);
        let back = import_json(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(back.node_count(), g.node_count(), "{name}");
        assert_eq!(render_tree(&back), render_tree(&g), "{name}");
        assert_eq!(export_json(&back), bytes, "{name}");
    }
}

#[test]
fn non_finite_float_literals_survive_roundtrip() {
    let src = "define double @f() {\nentry:\n  %x = fadd double 0x7FF8000000000000, 0x7FF0000000000000\n  ret double %x\n}\n";
    let g = translate(src, "nan.ll", &PassPipeline::default()).unwrap().graph;
    let back = import_json(&export_json(&g)).unwrap();
    let lits: Vec<String> = back
        .nodes_of_kind(NodeKind::Literal)
        .filter_map(|n| n.prop("value").map(|v| v.to_string()))
        .collect();
    assert!(lits.iter().any(|v| v == "NaN"), "{lits:?}");
    assert!(lits.iter().any(|v| v == "inf"), "{lits:?}");
    assert_eq!(export_json(&back), export_json(&g));
}

#[test]
fn import_rejects_sparse_ids_and_dangling_edges() {
    let sparse = br#"{"nodes":[{"id":1,"kind":"TranslationUnit","name":null,"code":"","type":"void","properties":{}}],"edges":[],"stats":{"node_count":1,"function_count":0,"problem_node_count":0}}"#;
    assert!(matches!(import_json(sparse), Err(ExportError::Invalid(_))));
    let dangling = br#"{"nodes":[{"id":0,"kind":"TranslationUnit","name":null,"code":"","type":"void","properties":{}}],"edges":[{"from":0,"to":5,"kind":"EOG","properties":{}}],"stats":{"node_count":1,"function_count":0,"problem_node_count":0}}"#;
    assert!(matches!(import_json(dangling), Err(ExportError::Invalid(_))));
    assert!(matches!(import_json(b"{"), Err(ExportError::Json(_))));
}

#[test]
fn csv_single_node_graph() {
    let mut g = CpgGraph::new();
    g.add(NewNode::new(NodeKind::TranslationUnit).code("one.ll").ty(TypeRef::Void).name("one.ll"));
    g.finalize();
    let dir = tempfile::tempdir().unwrap();
    export_neo4j_csv(&g, dir.path()).unwrap();
    let nodes = std::fs::read_to_string(dir.path().join("nodes.csv")).unwrap();
    let edges = std::fs::read_to_string(dir.path().join("edges.csv")).unwrap();
    assert_eq!(nodes, "id:ID,kind:LABEL,name,code,type\n0,TranslationUnit,one.ll,one.ll,void\n");
    assert_eq!(edges, ":START_ID,:END_ID,kind:TYPE\n");
}

#[test]
fn csv_quotes_commas_and_doubles_quotes() {
    let mut g = CpgGraph::new();
    let tu = g.add(NewNode::new(NodeKind::TranslationUnit).code("t").ty(TypeRef::Void));
    let lit = g.add(NewNode::new(NodeKind::Literal).code(r#"c"a,"b""#).ty(TypeRef::Void).prop("value", "x"));
    g.add_child(tu, lit);
    g.finalize();
    let dir = tempfile::tempdir().unwrap();
    export_neo4j_csv(&g, dir.path()).unwrap();
    let nodes = std::fs::read_to_string(dir.path().join("nodes.csv")).unwrap();
    assert!(nodes.contains(r#","c""a,""b""","#), "{nodes}");
    let edges = std::fs::read_to_string(dir.path().join("edges.csv")).unwrap();
    assert_eq!(edges.lines().nth(1), Some("0,1,AST"));
    // the csv reader agrees on the field boundaries
    let mut rdr = csv::Reader::from_path(dir.path().join("nodes.csv")).unwrap();
    let row = rdr.records().nth(1).unwrap().unwrap();
    assert_eq!(&row[3], r#"c"a,"b""#);
}

#[test]
fn graphml_labels_nodes_by_kind_and_escapes_text() {
    let g = translated("cipher_md5.ll");
    let xml = export_graphml(&g);
    assert!(xml.starts_with("<?xml"));
    assert!(xml.contains(r#"labels=":FunctionDeclaration""#));
    assert!(xml.contains(r#"label="AST""#));
    assert!(xml.contains(r#"<key id="p_declaration""#));
    let nodes = xml.matches("<node ").count();
    let edges = xml.matches("<edge ").count();
    assert_eq!(nodes, g.node_count());
    assert_eq!(edges, g.all_edges().len());
    // every opening tag is closed
    assert_eq!(xml.matches("<node ").count(), xml.matches("</node>").count());
}

#[test]
fn all_edge_kinds_are_exported() {
    let g = translated("catchswitch.ll");
    let kinds: std::collections::BTreeSet<EdgeKind> = g.all_edges().into_iter().map(|e| e.kind).collect();
    for k in [EdgeKind::Ast, EdgeKind::Eog, EdgeKind::Dfg, EdgeKind::RefersTo] {
        assert!(kinds.contains(&k), "{k:?} missing");
    }
}
