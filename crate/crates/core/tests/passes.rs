mod common;

use cpgir::analysis::interpret_function;
use cpgir::cpg::{CpgGraph, EdgeKind, NodeId, NodeKind};
use cpgir::export::render_tree;
use cpgir::ir::parse_module;
use cpgir::mapper::map_module;
use cpgir::passes::*;
use cpgir::translate;

fn mapped(src: &str) -> CpgGraph {
    map_module(&parse_module(src, "t.ll").unwrap().0)
}

fn labels(g: &CpgGraph) -> Vec<String> {
    g.nodes_of_kind(NodeKind::LabelStatement).filter_map(|n| n.name.clone()).collect()
}

fn named(g: &CpgGraph, kind: NodeKind, name: &str) -> Vec<NodeId> {
    g.nodes_of_kind(kind).filter(|n| n.name.as_deref() == Some(name)).map(|n| n.id).collect()
}

#[test]
fn phi_declarations_are_hoisted_in_source_order() {
    let mut g = mapped(&common::fixture("phi/fib.ll"));
    let report = eliminate_phis(&mut g).unwrap();
    assert_eq!(report.declarations, 3);
    // one assignment per incoming edge
    assert_eq!(report.assignments, 6);
    assert!(report.hazards.is_empty(), "{:?}", report.hazards);
    let body = g.functions.values().next().unwrap().body.unwrap();
    let first: Vec<_> = g.children(body)[..3].iter().map(|&c| g.node(c).unwrap().name.clone().unwrap()).collect();
    assert_eq!(first, ["i", "a", "b"]);
    for &c in &g.children(body)[..3] {
        assert_eq!(g.node(c).unwrap().prop("phi").and_then(|p| p.as_bool()), Some(true));
    }
}

#[test]
fn strict_phi_elimination_rejects_unknown_predecessor() {
    let src = "define i32 @f(i32 %x) {\nentry:\n  br label %j\nj:\n  %p = phi i32 [ %x, %entry ], [ 0, %nowhere ]\n  ret i32 %p\n}\n";
    let mut g = mapped(src);
    let err = eliminate_phis(&mut g).unwrap_err();
    assert_eq!(err, PassError::UnknownPredecessor { label: "nowhere".into(), phi: "p".into() });
    let mut g = mapped(src);
    let report = eliminate_phis_lenient(&mut g);
    assert_eq!(report.unknown_predecessors.len(), 1);
    assert_eq!(report.assignments, 1);
}

#[test]
fn swapped_phis_are_reported_as_hazard() {
    let src = "define i32 @swap(i32 %n) {
entry:
  br label %loop
loop:
  %a = phi i32 [ 1, %entry ], [ %b, %loop ]
  %b = phi i32 [ 2, %entry ], [ %a, %loop ]
  %i = phi i32 [ 0, %entry ], [ %i1, %loop ]
  %i1 = add i32 %i, 1
  %c = icmp slt i32 %i1, %n
  br i1 %c, label %loop, label %out
out:
  ret i32 %a
}
";
    let mut g = mapped(src);
    let report = eliminate_phis(&mut g).unwrap();
    assert_eq!(report.hazards.len(), 1, "{:?}", report.hazards);
    assert!(report.hazards[0].contains("%b reads %a"));
}

#[test]
fn phi_assignment_goes_inside_invoke_try() {
    let src = "declare i32 @g()
declare i32 @__gxx_personality_v0(...)
define i32 @f(i32 %x) personality i32 (...)* @__gxx_personality_v0 {
entry:
  %r = invoke i32 @g() to label %ok unwind label %lp
ok:
  %v = phi i32 [ %r, %entry ]
  ret i32 %v
lp:
  %l = landingpad { i8*, i32 } cleanup
  ret i32 0
}
";
    let mut g = mapped(src);
    eliminate_phis(&mut g).unwrap();
    let assign = g.nodes_of_kind(NodeKind::BinaryOperator).find(|n| n.operator() == Some("=")).unwrap().id;
    let compound = g.parent(assign).unwrap();
    assert_eq!(g.kind(g.parent(compound).unwrap()), Some(NodeKind::TryStatement));
    // the assignment sits right before the goto to %ok
    let kids = g.children(compound);
    let at = kids.iter().position(|&k| k == assign).unwrap();
    assert_eq!(g.node(kids[at + 1]).unwrap().name.as_deref(), Some("ok"));
}

#[test]
fn eog_links_goto_to_label_and_return_has_no_successor() {
    let mut g = mapped(&common::fixture("diamond.ll"));
    eliminate_phis(&mut g).unwrap();
    let report = build_eog(&mut g).unwrap();
    assert!(report.unresolved_gotos.is_empty());
    let merge = named(&g, NodeKind::LabelStatement, "merge")[0];
    let gotos: Vec<NodeId> = named(&g, NodeKind::GotoStatement, "merge");
    assert_eq!(gotos.len(), 2);
    for goto in gotos {
        assert_eq!(g.out_edges(goto, EdgeKind::Eog), vec![merge]);
    }
    for r in g.nodes_of_kind(NodeKind::ReturnStatement) {
        assert!(g.out_edges(r.id, EdgeKind::Eog).is_empty());
    }
}

#[test]
fn eog_reports_goto_without_label() {
    let mut g = mapped(&common::fixture("diamond.ll"));
    let merge = named(&g, NodeKind::LabelStatement, "merge")[0];
    g.remove_subtree(merge);
    assert_eq!(build_eog(&mut g).unwrap_err(), PassError::GotoWithoutLabel("merge".into()));
}

#[test]
fn calls_in_try_body_reach_the_catch_clause() {
    let mut g = mapped(&common::fixture("invoke.ll"));
    build_eog(&mut g).unwrap();
    let call = named(&g, NodeKind::CallExpression, "may_throw")[0];
    let clause = g.nodes_of_kind(NodeKind::CatchClause).next().unwrap().id;
    assert!(g.out_edges(call, EdgeKind::Eog).contains(&clause));
}

#[test]
fn dfg_connects_definitions_to_uses() {
    let mut g = mapped(&common::fixture("phi_select.ll"));
    eliminate_phis(&mut g).unwrap();
    let report = build_dfg(&mut g);
    assert!(report.unresolved.is_empty(), "{:?}", report.unresolved);
    let b = named(&g, NodeKind::VariableDeclaration, "b")[0];
    let refs = named(&g, NodeKind::DeclaredReferenceExpression, "b");
    // two assignment targets plus the returned read
    assert_eq!(refs.len(), 3);
    for r in &refs {
        assert_eq!(g.out_edges(*r, EdgeKind::RefersTo), vec![b]);
    }
    let reads: Vec<_> = g.out_edges(b, EdgeKind::Dfg);
    assert_eq!(reads.len(), 1);
    assert_eq!(g.kind(g.parent(reads[0]).unwrap()), Some(NodeKind::ReturnStatement));
    let argc = g.nodes_of_kind(NodeKind::ParameterDeclaration).next().unwrap().id;
    assert_eq!(g.out_edges(argc, EdgeKind::Dfg).len(), 4);
}

#[test]
fn if_else_inlining_removes_two_labels_and_two_gotos() {
    let mut g = mapped(&common::fixture("ifelse.ll"));
    build_eog(&mut g).unwrap();
    let before = g.node_count();
    let report = inline_single_pred_blocks(&mut g);
    assert_eq!(report.inlined, 2);
    assert_eq!(before - g.node_count(), 4);
    assert_eq!(labels(&g), ["entry"]);
    assert_eq!(g.functions.values().next().unwrap().blocks.len(), 1);
}

#[test]
fn diamond_join_is_not_inlined() {
    let mut g = mapped(&common::fixture("diamond.ll"));
    eliminate_phis(&mut g).unwrap();
    let report = inline_single_pred_blocks(&mut g);
    assert_eq!(report.inlined, 2);
    assert_eq!(labels(&g), ["entry", "merge"]);
}

#[test]
fn loop_header_is_not_inlined_into_its_own_body() {
    let mut g = mapped(&common::fixture("phi/popcount.ll"));
    eliminate_phis(&mut g).unwrap();
    inline_single_pred_blocks(&mut g);
    // body has one predecessor and is inlined; the header keeps two
    assert_eq!(labels(&g), ["entry", "loop"]);
}

#[test]
fn catch_cleanup_rewrites_rethrow_and_drops_unused_pad() {
    let mut g = mapped(&common::fixture("catchswitch.ll"));
    eliminate_phis(&mut g).unwrap();
    build_eog(&mut g).unwrap();
    build_dfg(&mut g);
    let first = cleanup_catch_blocks(&mut g);
    assert_eq!(first.rethrows, 1);
    assert_eq!(first.pads_removed, 1);
    assert!(named(&g, NodeKind::CallExpression, "llvm.catchswitch.exception").is_empty());
    let throw = g.nodes_of_kind(NodeKind::ThrowStatement).next().unwrap().id;
    let arg = g.child(throw, 0).unwrap();
    assert_eq!(g.kind(arg), Some(NodeKind::DeclaredReferenceExpression));
    assert_eq!(g.node(arg).unwrap().name.as_deref(), Some("cs"));
    let snapshot = render_tree(&g);
    assert!(!cleanup_catch_blocks(&mut g).changed());
    assert_eq!(render_tree(&g), snapshot);
}

#[test]
fn catchswitch_unwinding_to_label_ends_in_goto() {
    let src = common::fixture("catchswitch.ll").replace(
        "%cs = catchswitch within none [label %catch] unwind to caller",
        "%cs = catchswitch within none [label %catch] unwind label %done",
    );
    let g = mapped(&src);
    let clause = g.nodes_of_kind(NodeKind::CatchClause).find(|n| n.name.as_deref() == Some("cs")).unwrap().id;
    assert!(g.subtree(clause).iter().all(|&n| g.kind(n) != Some(NodeKind::ThrowStatement)));
    assert!(g.subtree(clause).iter().any(|&n| g.node(n).unwrap().name.as_deref() == Some("done") && g.kind(n) == Some(NodeKind::GotoStatement)));
}

#[test]
fn stub_chain_collapses_onto_the_external_callee() {
    let t = translate(&common::fixture("stub_chain.ll"), "stub_chain.ll", &PassPipeline::all()).unwrap();
    let g = &t.graph;
    let names: Vec<_> = g.functions.values().map(|f| f.name.clone()).collect();
    assert_eq!(names, ["h", "user"]);
    let call = named(g, NodeKind::CallExpression, "h")[0];
    assert_eq!(g.node(call).unwrap().prop("stub").map(|p| p.to_string()).as_deref(), Some("f"));
    // arguments: the caller's own value and the constant g passed along
    let args: Vec<String> = g.children(call).iter().map(|&a| g.node(a).unwrap().code.clone()).collect();
    assert_eq!(args.len(), 2);
    assert_eq!(g.kind(g.children(call)[0]), Some(NodeKind::DeclaredReferenceExpression));
    assert_eq!(g.node(g.children(call)[0]).unwrap().name.as_deref(), Some("x"));
    assert_eq!(g.node(g.children(call)[1]).unwrap().prop("value").map(|v| v.to_string()).as_deref(), Some("7"));
    assert!(g.validate().is_empty());
}

#[test]
fn address_taken_stub_is_kept() {
    let mut g = mapped(&common::fixture("stub_taken.ll"));
    let report = remove_stubs(&mut g);
    assert!(report.removed.is_empty(), "{:?}", report.removed);
}

#[test]
fn stub_removal_reports_removed_functions() {
    let mut g = mapped(&common::fixture("stubs.ll"));
    let mut report = remove_stubs(&mut g);
    report.removed.sort();
    assert_eq!(report.removed, ["malloc_stub", "puts_stub"]);
    assert_eq!(report.rewired_calls, 2);
}

#[test]
fn pipeline_parsing_and_order() {
    assert_eq!(PassPipeline::parse("all").unwrap(), PassPipeline::all());
    assert_eq!(PassPipeline::parse("none").unwrap(), PassPipeline::none());
    assert_eq!(PassPipeline::parse("default").unwrap(), PassPipeline::default());
    let p = PassPipeline::parse("dfg,phi-elimination").unwrap();
    assert_eq!(p.passes(), [Pass::PhiElimination, Pass::Dfg]);
    assert_eq!(PassPipeline::parse("phi,bogus").unwrap_err(), PassError::UnknownPass("phi".into()));
    assert!(!PassPipeline::default().is_enabled(Pass::RemoveStubs));
}

#[test]
fn pipeline_records_each_pass_phase() {
    let t = translate(&common::fixture("diamond.ll"), "d.ll", &PassPipeline::all()).unwrap();
    let phases: Vec<&str> = t.graph.stats().phase_times.iter().map(|(p, _)| p.as_str()).collect();
    assert_eq!(
        phases,
        ["parse", "map", "phi-elimination", "eog", "dfg", "inline-blocks", "catch-cleanup", "remove-stubs", "finalize"]
    );
}

#[test]
fn reg2mem_demotes_phis_to_stack_slots() {
    let (m, _) = parse_module(&common::fixture("phi_select.ll"), "l3").unwrap();
    let demoted = reg2mem(&m);
    let f = &demoted.functions[0];
    let text: Vec<&str> = f.blocks.iter().flat_map(|b| b.instructions.iter().map(|i| i.raw_text.as_str())).collect();
    assert!(text.iter().all(|t| !t.contains("phi")), "{text:#?}");
    assert!(text.contains(&"%b.reg2mem = alloca i32"), "{text:#?}");
    let entry = &f.blocks[0];
    assert!(entry.instructions.iter().any(|i| i.result_name.as_deref() == Some("b.reg2mem")));
    // the demoted module still computes the same function
    let ours = translate(&common::fixture("phi_select.ll"), "l3", &PassPipeline::default()).unwrap();
    let base = cpgir::translate_module(&demoted, &PassPipeline::default());
    let (fo, fb) = (*ours.graph.functions.keys().next().unwrap(), *base.graph.functions.keys().next().unwrap());
    for a in [-3, 5, 9, 10, 20] {
        assert_eq!(interpret_function(&ours.graph, fo, &[a]), interpret_function(&base.graph, fb, &[a]));
    }
}

#[test]
fn every_fixture_validates_under_every_pipeline() {
    for (name, src) in common::all_fixtures() {
        for p in [PassPipeline::none(), PassPipeline::default(), PassPipeline::all()] {
            let t = translate(&src, &name, &p).unwrap();
            assert_eq!(t.graph.validate(), Vec::<String>::new(), "{name}");
        }
    }
}
