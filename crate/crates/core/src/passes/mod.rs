//! Graph passes run after mapping, and the pipeline that orders them.

mod catch;
mod dfg;
mod eog;
mod inline;
mod phi;
mod reg2mem;
mod stubs;

use std::fmt;
use std::time::Instant;

use thiserror::Error;

pub use catch::{cleanup_catch_blocks, CatchReport};
pub use dfg::{build_dfg, DfgReport};
pub use eog::{build_eog, build_eog_lenient, EogReport};
pub use inline::{inline_single_pred_blocks, InlineReport};
pub use phi::{eliminate_phis, eliminate_phis_lenient, phis_by_block, PhiReport};
pub use reg2mem::reg2mem;
pub use stubs::{clone_subtree, remove_stubs, StubReport};

use crate::cpg::{CpgGraph, EdgeKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PassError {
    #[error("φ %{phi} names unknown predecessor block %{label}")]
    UnknownPredecessor { label: String, phi: String },
    #[error("goto %{0} has no matching label")]
    GotoWithoutLabel(String),
    #[error("unknown pass `{0}`")]
    UnknownPass(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pass {
    PhiElimination,
    Eog,
    Dfg,
    InlineBlocks,
    CatchCleanup,
    RemoveStubs,
}

impl Pass {
    /// Canonical execution order.
    pub const ALL: &'static [Pass] = &[
        Pass::PhiElimination,
        Pass::Eog,
        Pass::Dfg,
        Pass::InlineBlocks,
        Pass::CatchCleanup,
        Pass::RemoveStubs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pass::PhiElimination => "phi-elimination",
            Pass::Eog => "eog",
            Pass::Dfg => "dfg",
            Pass::InlineBlocks => "inline-blocks",
            Pass::CatchCleanup => "catch-cleanup",
            Pass::RemoveStubs => "remove-stubs",
        }
    }

    pub fn parse(s: &str) -> Option<Pass> {
        Pass::ALL.iter().copied().find(|p| p.name() == s)
    }
}

impl fmt::Display for Pass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The enabled passes. They always run in [`Pass::ALL`] order, whatever order
/// they were listed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassPipeline {
    enabled: [bool; 6],
}

impl Default for PassPipeline {
    fn default() -> Self {
        PassPipeline::none()
            .with(Pass::PhiElimination, true)
            .with(Pass::Eog, true)
            .with(Pass::Dfg, true)
            .with(Pass::InlineBlocks, true)
            .with(Pass::CatchCleanup, true)
    }
}

impl PassPipeline {
    pub fn none() -> Self {
        PassPipeline { enabled: [false; 6] }
    }

    pub fn all() -> Self {
        PassPipeline { enabled: [true; 6] }
    }

    /// `all`, `none`, `default` or a comma-separated list of pass names.
    pub fn parse(spec: &str) -> Result<Self, PassError> {
        match spec.trim() {
            "all" => return Ok(PassPipeline::all()),
            "none" | "" => return Ok(PassPipeline::none()),
            "default" => return Ok(PassPipeline::default()),
            _ => {}
        }
        let mut p = PassPipeline::none();
        for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let pass = Pass::parse(name).ok_or_else(|| PassError::UnknownPass(name.to_string()))?;
            p = p.with(pass, true);
        }
        Ok(p)
    }

    pub fn with(mut self, pass: Pass, on: bool) -> Self {
        self.enabled[slot(pass)] = on;
        self
    }

    pub fn is_enabled(&self, pass: Pass) -> bool {
        self.enabled[slot(pass)]
    }

    pub fn passes(&self) -> Vec<Pass> {
        Pass::ALL.iter().copied().filter(|p| self.is_enabled(*p)).collect()
    }

    /// Runs the enabled passes, recording each one's wall time in the graph
    /// stats. Problems are returned as diagnostics; nothing here is fatal.
    pub fn run(&self, g: &mut CpgGraph) -> Vec<String> {
        let mut diagnostics = Vec::new();
        for pass in self.passes() {
            let start = Instant::now();
            match pass {
                Pass::PhiElimination => {
                    let r = eliminate_phis_lenient(g);
                    diagnostics.extend(r.hazards.iter().map(|h| format!("parallel-copy hazard {h}")));
                    diagnostics.extend(r.unknown_predecessors.iter().map(|u| format!("unknown φ predecessor {u}")));
                }
                Pass::Eog => {
                    let r = build_eog_lenient(g);
                    diagnostics.extend(r.unresolved_gotos.iter().map(|l| format!("goto without label {l}")));
                }
                Pass::Dfg => {
                    let r = build_dfg(g);
                    diagnostics.extend(r.unresolved.iter().map(|n| format!("unresolved reference {n}")));
                }
                Pass::InlineBlocks => {
                    inline_single_pred_blocks(g);
                }
                Pass::CatchCleanup => {
                    if cleanup_catch_blocks(g).changed() {
                        refresh_derived(g);
                    }
                }
                Pass::RemoveStubs => {
                    if !remove_stubs(g).removed.is_empty() {
                        refresh_derived(g);
                    }
                }
            }
            g.record_phase(pass.name(), start.elapsed().as_secs_f64() * 1000.0);
        }
        diagnostics
    }
}

fn slot(pass: Pass) -> usize {
    Pass::ALL.iter().position(|p| *p == pass).expect("listed")
}

pub(crate) fn has_edges(g: &CpgGraph, kind: EdgeKind) -> bool {
    g.edges().iter().any(|e| e.kind == kind)
}

/// Rebuilds whichever derived edge sets exist after a structural rewrite.
pub fn refresh_derived(g: &mut CpgGraph) {
    if has_edges(g, EdgeKind::Eog) {
        build_eog_lenient(g);
    }
    if has_edges(g, EdgeKind::Dfg) || has_edges(g, EdgeKind::RefersTo) {
        build_dfg(g);
    }
}
