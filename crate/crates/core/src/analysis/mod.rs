//! Queries over a translated graph.

mod eval;
mod interp;

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

pub use eval::{evaluate, EvalResult, MAX_SET};
pub use interp::{interpret_function, interpret_values, InterpError, Value, DEFAULT_FUEL};

use crate::cpg::{CpgGraph, EdgeKind, NodeId, NodeKind};

pub const CIPHER_CALL: &str = "SSL_CTX_set_cipher_list";
pub const RULE_CIPHER_MD5: &str = "cipher-md5";
pub const RULE_UNRESOLVED: &str = "unresolved-argument";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FindingSeverity {
    Warn,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub rule_id: String,
    pub severity: FindingSeverity,
    pub node: NodeId,
    pub message: String,
    /// The value chain from the flagged argument back to its origin.
    pub evidence: Vec<NodeId>,
}

/// Call sites of `callee`; a leading `@` on either side is ignored.
pub fn find_calls(g: &CpgGraph, callee: &str) -> Vec<NodeId> {
    let want = callee.strip_prefix('@').unwrap_or(callee);
    g.nodes_of_kind(NodeKind::CallExpression)
        .filter(|c| c.name.as_deref().map(|n| n.strip_prefix('@').unwrap_or(n)) == Some(want))
        .map(|c| c.id)
        .collect()
}

/// Flags cipher lists passed to `SSL_CTX_set_cipher_list` that mention MD5.
///
/// Matching is a case-insensitive substring test, so an exclusion such as
/// `!MD5` is flagged as well.
pub fn detect_cipher_misuse(g: &CpgGraph) -> Vec<Finding> {
    let mut out = Vec::new();
    for call in find_calls(g, CIPHER_CALL) {
        let Some(arg) = g.child(call, 1) else {
            out.push(Finding {
                rule_id: RULE_UNRESOLVED.into(),
                severity: FindingSeverity::Warn,
                node: call,
                message: format!("{CIPHER_CALL} call has no cipher argument"),
                evidence: vec![call],
            });
            continue;
        };
        let value = evaluate(g, arg);
        let strings = value.strings();
        if strings.is_empty() {
            out.push(Finding {
                rule_id: RULE_UNRESOLVED.into(),
                severity: FindingSeverity::Warn,
                node: call,
                message: format!("cipher list of {CIPHER_CALL} could not be resolved ({value})"),
                evidence: vec![arg],
            });
            continue;
        }
        let bad: Vec<&String> = strings.iter().filter(|s| s.to_ascii_lowercase().contains("md5")).collect();
        if bad.is_empty() {
            continue;
        }
        let mut message = format!("cipher list {:?} allows MD5", bad[0]);
        if bad.iter().any(|s| s.to_ascii_lowercase().contains("!md5")) {
            message.push_str(" (substring match; the list may exclude it with `!MD5`)");
        }
        out.push(Finding {
            rule_id: RULE_CIPHER_MD5.into(),
            severity: FindingSeverity::Error,
            node: call,
            message,
            evidence: value_chain(g, arg),
        });
    }
    out
}

/// Backwards DFG walk from `start`, stopping at literals.
fn value_chain(g: &CpgGraph, start: NodeId) -> Vec<NodeId> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        if !seen.insert(n) {
            continue;
        }
        out.push(n);
        if g.kind(n) == Some(NodeKind::Literal) {
            continue;
        }
        queue.extend(g.in_edges(n, EdgeKind::Dfg));
    }
    out
}

/// Rule ids understood by [`run_rule`].
pub const RULES: &[&str] = &[RULE_CIPHER_MD5];

pub fn run_rule(g: &CpgGraph, rule: &str) -> Option<Vec<Finding>> {
    match rule {
        RULE_CIPHER_MD5 | "crypto-misuse" => Some(detect_cipher_misuse(g)),
        _ => None,
    }
}
