//! Translation of textual LLVM-IR into a code property graph.
//!
//! ```
//! use cpgir::{translate, passes::PassPipeline};
//!
//! let src = "define i32 @id(i32 %x) {\n  ret i32 %x\n}\n";
//! let t = translate(src, "id.ll", &PassPipeline::default()).unwrap();
//! assert_eq!(t.graph.stats().function_count, 1);
//! ```

pub mod analysis;
pub mod cpg;
pub mod export;
pub mod ir;
pub mod mapper;
pub mod passes;

use std::time::Instant;

use cpg::CpgGraph;
use ir::{IrModule, ParseError, ParseReport};
use passes::PassPipeline;

/// A translated module: the finalized graph plus everything worth reporting.
#[derive(Debug)]
pub struct Translation {
    pub graph: CpgGraph,
    pub parse: ParseReport,
    /// Pass diagnostics (unknown predecessors, parallel-copy hazards, ...).
    pub diagnostics: Vec<String>,
}

/// Parse, map, run the pipeline and finalize. Fails only when the braces of
/// the input do not balance.
pub fn translate(source: &str, name: &str, pipeline: &PassPipeline) -> Result<Translation, ParseError> {
    let start = Instant::now();
    let (module, parse) = ir::parse_module(source, name)?;
    let parse_ms = start.elapsed().as_secs_f64() * 1000.0;
    let mut t = translate_module_timed(&module, pipeline, &[("parse", parse_ms)]);
    t.parse = parse;
    Ok(t)
}

/// Map and run the pipeline on an already parsed module.
pub fn translate_module(module: &IrModule, pipeline: &PassPipeline) -> Translation {
    translate_module_timed(module, pipeline, &[])
}

/// Like [`translate_module`], with timings of phases that ran before mapping
/// (parse, a reg2mem rewrite) listed first in the stats.
pub fn translate_module_timed(module: &IrModule, pipeline: &PassPipeline, earlier: &[(&str, f64)]) -> Translation {
    let start = Instant::now();
    let mut graph = mapper::map_module(module);
    let map_ms = start.elapsed().as_secs_f64() * 1000.0;
    for (phase, ms) in earlier {
        graph.record_phase(phase, *ms);
    }
    graph.record_phase("map", map_ms);
    let diagnostics = pipeline.run(&mut graph);
    let start = Instant::now();
    graph.finalize();
    graph.record_phase("finalize", start.elapsed().as_secs_f64() * 1000.0);
    Translation {
        graph,
        parse: ParseReport::default(),
        diagnostics,
    }
}
