mod common;

use std::fmt::Write as _;

use proptest::prelude::*;

use cpgir::analysis::interpret_function;
use cpgir::cpg::CpgGraph;
use cpgir::export::{export_json, import_json, render_tree};
use cpgir::ir::parse_module;
use cpgir::mapper::map_module;
use cpgir::passes::{inline_single_pred_blocks, reg2mem, Pass, PassPipeline};
use cpgir::{translate, translate_module};

const OPS: &[&str] = &["add", "sub", "mul", "xor", "and", "or", "shl", "lshr", "ashr", "sdiv", "srem"];
const PREDS: &[&str] = &["eq", "ne", "slt", "sle", "sgt", "sge", "ult", "ugt"];

#[derive(Debug, Clone)]
enum Seg {
    Arith(usize, i32),
    Diamond { pred: usize, k: i32, then: (usize, i32), other: (usize, i32) },
    Loop { trips: u8, body: (usize, i32) },
    Switch { cases: Vec<(i32, usize, i32)> },
}

fn op_const(op: usize, k: i32) -> i32 {
    match OPS[op] {
        "shl" | "lshr" | "ashr" => k.rem_euclid(8),
        // keep division defined
        "sdiv" | "srem" => k.rem_euclid(9) + 1,
        _ => k,
    }
}

fn seg() -> impl Strategy<Value = Seg> {
    let op = (0..OPS.len(), -50i32..50);
    prop_oneof![
        op.clone().prop_map(|(o, k)| Seg::Arith(o, k)),
        (0..PREDS.len(), -20i32..20, op.clone(), op.clone())
            .prop_map(|(pred, k, then, other)| Seg::Diamond { pred, k, then, other }),
        (0u8..6, op.clone()).prop_map(|(trips, body)| Seg::Loop { trips, body }),
        prop::collection::vec((-3i32..4, 0..OPS.len(), -9i32..9), 1..4).prop_map(|cases| Seg::Switch { cases }),
    ]
}

/// Renders the segments as one function; the running value is threaded
/// through φ nodes at every join.
fn program(segs: &[Seg]) -> String {
    let mut s = String::from("define i32 @p(i32 %x, i32 %y) {\nentry:\n");
    let mut acc = "%x".to_string();
    let mut block = "entry".to_string();
    for (i, seg) in segs.iter().enumerate() {
        match seg {
            Seg::Arith(o, k) => {
                let _ = writeln!(s, "  %a{i} = {} i32 {acc}, {}", OPS[*o], op_const(*o, *k));
                acc = format!("%a{i}");
            }
            Seg::Diamond { pred, k, then, other } => {
                let _ = write!(
                    s,
                    "  %c{i} = icmp {} i32 {acc}, {k}\n  br i1 %c{i}, label %t{i}, label %f{i}\n\
                     t{i}:\n  %tv{i} = {} i32 {acc}, {}\n  br label %j{i}\n\
                     f{i}:\n  %fv{i} = {} i32 %y, {}\n  br label %j{i}\n\
                     j{i}:\n  %p{i} = phi i32 [ %tv{i}, %t{i} ], [ %fv{i}, %f{i} ]\n",
                    PREDS[*pred],
                    OPS[then.0],
                    op_const(then.0, then.1),
                    OPS[other.0],
                    op_const(other.0, other.1),
                );
                acc = format!("%p{i}");
                block = format!("j{i}");
            }
            Seg::Loop { trips, body } => {
                let _ = write!(
                    s,
                    "  br label %h{i}\n\
                     h{i}:\n  %n{i} = phi i32 [ 0, %{block} ], [ %n{i}.next, %b{i} ]\n  %v{i} = phi i32 [ {acc}, %{block} ], [ %v{i}.next, %b{i} ]\n\
                     \x20 %go{i} = icmp slt i32 %n{i}, {trips}\n  br i1 %go{i}, label %b{i}, label %x{i}\n\
                     b{i}:\n  %v{i}.next = {} i32 %v{i}, {}\n  %n{i}.next = add i32 %n{i}, 1\n  br label %h{i}\n\
                     x{i}:\n",
                    OPS[body.0],
                    op_const(body.0, body.1),
                );
                acc = format!("%v{i}");
                block = format!("x{i}");
            }
            Seg::Switch { cases } => {
                let mut seen = std::collections::BTreeSet::new();
                let cases: Vec<_> = cases.iter().filter(|c| seen.insert(c.0)).collect();
                let _ = write!(s, "  %s{i} = srem i32 {acc}, 4\n  switch i32 %s{i}, label %d{i} [\n");
                for (n, (v, _, _)) in cases.iter().enumerate() {
                    let _ = writeln!(s, "    i32 {v}, label %k{i}_{n}");
                }
                let _ = write!(s, "  ]\nd{i}:\n  br label %m{i}\n");
                for (n, (_, o, k)) in cases.iter().enumerate() {
                    let _ = write!(s, "k{i}_{n}:\n  %kv{i}_{n} = {} i32 {acc}, {}\n  br label %m{i}\n", OPS[*o], op_const(*o, *k));
                }
                let _ = write!(s, "m{i}:\n  %w{i} = phi i32 [ {acc}, %d{i} ]");
                for n in 0..cases.len() {
                    let _ = write!(s, ", [ %kv{i}_{n}, %k{i}_{n} ]");
                }
                s.push('\n');
                acc = format!("%w{i}");
                block = format!("m{i}");
            }
        }
    }
    let _ = write!(s, "  ret i32 {acc}\n}}\n");
    s
}

fn run(g: &CpgGraph, args: &[i128]) -> Result<i128, String> {
    let f = *g.functions.keys().next().unwrap();
    interpret_function(g, f, args).map_err(|e| e.to_string())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn passes_preserve_semantics(segs in prop::collection::vec(seg(), 1..7), x in -300i128..300, y in -300i128..300) {
        let src = program(&segs);
        let fresh = translate(&src, "p.ll", &PassPipeline::none()).unwrap();
        let expected = run(&fresh.graph, &[x, y]);
        prop_assert!(expected.is_ok(), "{src}\n{expected:?}");
        for p in [PassPipeline::default(), PassPipeline::all()] {
            let t = translate(&src, "p.ll", &p).unwrap();
            prop_assert!(t.diagnostics.is_empty(), "{:?}", t.diagnostics);
            prop_assert_eq!(&run(&t.graph, &[x, y]), &expected, "{}", src);
        }
        let (m, _) = parse_module(&src, "p.ll").unwrap();
        let base = translate_module(&reg2mem(&m), &PassPipeline::default());
        prop_assert_eq!(run(&base.graph, &[x, y]), expected, "{}", src);
    }

    #[test]
    fn graphs_validate_and_roundtrip(segs in prop::collection::vec(seg(), 1..6)) {
        let src = program(&segs);
        for p in [PassPipeline::none(), PassPipeline::default(), PassPipeline::all()] {
            let t = translate(&src, "p.ll", &p).unwrap();
            prop_assert_eq!(t.graph.validate(), Vec::<String>::new());
            let bytes = export_json(&t.graph);
            prop_assert_eq!(&export_json(&translate(&src, "p.ll", &p).unwrap().graph), &bytes);
            prop_assert_eq!(export_json(&import_json(&bytes).unwrap()), bytes);
        }
    }

    #[test]
    fn inlining_shrinks_and_is_idempotent(segs in prop::collection::vec(seg(), 1..6)) {
        let (m, _) = parse_module(&program(&segs), "p.ll").unwrap();
        let mut g = map_module(&m);
        PassPipeline::none().with(Pass::PhiElimination, true).run(&mut g);
        let before = g.node_count();
        inline_single_pred_blocks(&mut g);
        prop_assert!(g.node_count() <= before);
        let snapshot = render_tree(&g);
        prop_assert_eq!(inline_single_pred_blocks(&mut g).inlined, 0);
        prop_assert_eq!(render_tree(&g), snapshot);
    }

    #[test]
    fn ours_never_larger_than_reg2mem(segs in prop::collection::vec(seg(), 1..6)) {
        let src = program(&segs);
        let ours = translate(&src, "p.ll", &PassPipeline::default()).unwrap();
        let (m, _) = parse_module(&src, "p.ll").unwrap();
        let base = translate_module(&reg2mem(&m), &PassPipeline::default());
        prop_assert!(ours.graph.node_count() <= base.graph.node_count());
    }

    #[test]
    fn arbitrary_text_never_panics(src in "\\PC{0,200}") {
        if let Ok(t) = translate(&src, "any.ll", &PassPipeline::all()) {
            prop_assert_eq!(t.graph.validate(), Vec::<String>::new());
        }
    }

    #[test]
    fn mutated_fixtures_never_panic(seed in any::<u64>()) {
        for src in common::fuzz_corpus(8, seed) {
            if let Ok(t) = translate(&src, "m.ll", &PassPipeline::all()) {
                prop_assert_eq!(t.graph.validate(), Vec::<String>::new());
                let problems = t.graph.nodes_of_kind(cpgir::cpg::NodeKind::ProblemNode).count();
                prop_assert_eq!(t.graph.stats().problem_node_count, problems);
            }
        }
    }
}

#[test]
fn generator_produces_phi_programs() {
    let src = program(&[
        Seg::Diamond { pred: 2, k: 0, then: (0, 1), other: (1, 2) },
        Seg::Loop { trips: 3, body: (2, 3) },
        Seg::Switch { cases: vec![(0, 0, 1), (1, 4, 7)] },
    ]);
    let (m, report) = parse_module(&src, "p.ll").unwrap();
    assert!(report.diagnostics.is_empty(), "{:?}\n{src}", report.diagnostics);
    assert_eq!(src.matches("= phi").count(), 4);
    let t = translate_module(&m, &PassPipeline::none());
    // x = 5, y = 0: 5 < 0 fails so the join gets y - 2 = -2, the loop triples
    // it three times (-54) and -54 srem 4 = -2 takes the default edge
    assert_eq!(run(&t.graph, &[5, 0]), Ok(-54));
    // x = -1: -1 + 1 = 0, still 0 after the loop, 0 srem 4 hits case 0 (0 + 1)
    assert_eq!(run(&t.graph, &[-1, 0]), Ok(1));
}
