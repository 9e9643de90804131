//! Path-insensitive constant propagation backwards along DFG edges.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::cpg::{CpgGraph, EdgeKind, NodeId, NodeKind, PropValue};

/// Sets larger than this collapse to `Unknown`.
pub const MAX_SET: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "values", rename_all = "kebab-case")]
pub enum EvalResult {
    KnownInt(i128),
    KnownFloat(f64),
    KnownString(String),
    /// At least two distinct scalar values.
    SetOfValues(Vec<EvalResult>),
    Unknown,
}

impl EvalResult {
    /// The scalar values this result stands for; empty for `Unknown`.
    pub fn values(&self) -> Vec<EvalResult> {
        match self {
            EvalResult::SetOfValues(v) => v.clone(),
            EvalResult::Unknown => Vec::new(),
            other => vec![other.clone()],
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, EvalResult::Unknown)
    }

    pub fn strings(&self) -> Vec<String> {
        self.values()
            .into_iter()
            .filter_map(|v| match v {
                EvalResult::KnownString(s) => Some(s),
                _ => None,
            })
            .collect()
    }

    /// Builds a result from scalar values: one distinct value stays scalar,
    /// more become a set, too many (or any unknown) give `Unknown`.
    pub fn from_values(values: Vec<EvalResult>) -> EvalResult {
        let mut out: Vec<EvalResult> = Vec::new();
        for v in values {
            match v {
                EvalResult::Unknown => return EvalResult::Unknown,
                EvalResult::SetOfValues(inner) => {
                    for i in inner {
                        if !out.iter().any(|o| same(o, &i)) {
                            out.push(i);
                        }
                    }
                }
                v => {
                    if !out.iter().any(|o| same(o, &v)) {
                        out.push(v);
                    }
                }
            }
        }
        match out.len() {
            0 => EvalResult::Unknown,
            1 => out.pop().expect("one value"),
            n if n > MAX_SET => EvalResult::Unknown,
            _ => EvalResult::SetOfValues(out),
        }
    }
}

fn same(a: &EvalResult, b: &EvalResult) -> bool {
    match (a, b) {
        (EvalResult::KnownFloat(x), EvalResult::KnownFloat(y)) => x.to_bits() == y.to_bits(),
        _ => a == b,
    }
}

impl fmt::Display for EvalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalResult::KnownInt(i) => write!(f, "{i}"),
            EvalResult::KnownFloat(x) => write!(f, "{x:?}"),
            EvalResult::KnownString(s) => write!(f, "{s:?}"),
            EvalResult::SetOfValues(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
            EvalResult::Unknown => f.write_str("unknown"),
        }
    }
}

/// Value a node may hold, following DFG edges backwards.
pub fn evaluate(g: &CpgGraph, node: NodeId) -> EvalResult {
    Evaluator { g, memo: HashMap::new() }.eval(node)
}

struct Evaluator<'g> {
    g: &'g CpgGraph,
    /// `None` while a node is being evaluated, so cycles resolve to unknown.
    memo: HashMap<NodeId, Option<EvalResult>>,
}

impl Evaluator<'_> {
    fn eval(&mut self, n: NodeId) -> EvalResult {
        match self.memo.get(&n) {
            Some(Some(r)) => return r.clone(),
            Some(None) => return EvalResult::Unknown,
            None => {}
        }
        self.memo.insert(n, None);
        let r = self.compute(n);
        self.memo.insert(n, Some(r.clone()));
        r
    }

    fn sources(&self, n: NodeId) -> Vec<NodeId> {
        self.g.in_edges(n, EdgeKind::Dfg)
    }

    fn compute(&mut self, n: NodeId) -> EvalResult {
        let g = self.g;
        let Some(node) = g.node(n) else { return EvalResult::Unknown };
        let children = g.children(n).to_vec();
        match node.kind {
            NodeKind::Literal => {
                if node.prop("special").is_some_and(|s| !matches!(s.as_str(), Some("null") | Some("zeroinitializer"))) {
                    return EvalResult::Unknown;
                }
                match node.prop("value") {
                    Some(PropValue::Int(i)) => EvalResult::KnownInt(wrap(*i as i128, node.ty.int_width())),
                    Some(PropValue::Float(f)) => EvalResult::KnownFloat(*f),
                    Some(PropValue::Str(s)) if node.ty.is_int() => s.parse().map(EvalResult::KnownInt).unwrap_or(EvalResult::Unknown),
                    Some(PropValue::Str(s)) => EvalResult::KnownString(s.clone()),
                    Some(PropValue::Bool(b)) => EvalResult::KnownInt(*b as i128),
                    None => EvalResult::Unknown,
                }
            }
            NodeKind::DeclaredReferenceExpression => {
                let src = self.sources(n);
                let vals = src.iter().map(|&s| self.eval(s)).collect();
                EvalResult::from_values(vals)
            }
            NodeKind::VariableDeclaration | NodeKind::ParameterDeclaration => {
                let src = self.sources(n);
                // Partial writes (x.f = ..., x[i] = ...) make the whole value unknown.
                if src.is_empty()
                    || src.iter().any(|&s| {
                        matches!(g.kind(s), Some(NodeKind::MemberExpression) | Some(NodeKind::ArraySubscriptionExpression))
                    })
                {
                    return EvalResult::Unknown;
                }
                let vals = src.iter().map(|&s| self.eval(s)).collect();
                EvalResult::from_values(vals)
            }
            NodeKind::CastExpression => {
                let [c] = children.as_slice() else { return EvalResult::Unknown };
                let v = self.eval(*c);
                let kind = node.prop_str("castKind").unwrap_or_default();
                let to = node.ty.int_width();
                let from = g.node(*c).and_then(|x| x.ty.int_width());
                map_values(v, |x| cast(x, kind, node.prop_str("signedness"), from, to))
            }
            NodeKind::UnaryOperator => {
                let [c] = children.as_slice() else { return EvalResult::Unknown };
                match node.operator() {
                    // The address of a string constant stands for the string.
                    Some("&") => self.address(*c),
                    Some("-") => map_values(self.eval(*c), |x| match x {
                        EvalResult::KnownInt(i) => EvalResult::KnownInt(wrap(-i, node.ty.int_width())),
                        EvalResult::KnownFloat(f) => EvalResult::KnownFloat(-f),
                        _ => EvalResult::Unknown,
                    }),
                    Some("~") => map_values(self.eval(*c), |x| match x {
                        EvalResult::KnownInt(i) => EvalResult::KnownInt(wrap(!i, node.ty.int_width())),
                        _ => EvalResult::Unknown,
                    }),
                    Some("!") => map_values(self.eval(*c), |x| match x {
                        EvalResult::KnownInt(i) => EvalResult::KnownInt((i == 0) as i128),
                        _ => EvalResult::Unknown,
                    }),
                    _ => EvalResult::Unknown,
                }
            }
            NodeKind::BinaryOperator => {
                let [a, b] = children.as_slice() else { return EvalResult::Unknown };
                let op = node.operator().unwrap_or_default().to_string();
                if op == "=" {
                    return self.eval(*b);
                }
                let signed = [*a, *b].iter().any(|&c| g.node(c).and_then(|x| x.prop_str("signedness")) == Some("signed"));
                let width = g.node(*a).and_then(|x| x.ty.int_width());
                let va = self.eval(*a).values();
                let vb = self.eval(*b).values();
                if va.is_empty() || vb.is_empty() || va.len() * vb.len() > MAX_SET {
                    return EvalResult::Unknown;
                }
                let mut out = Vec::new();
                for x in &va {
                    for y in &vb {
                        out.push(fold(&op, x, y, signed, width, node.ty.int_width()));
                    }
                }
                EvalResult::from_values(out)
            }
            NodeKind::ConditionalExpression => {
                let [c, t, e] = children.as_slice() else { return EvalResult::Unknown };
                match self.eval(*c) {
                    EvalResult::KnownInt(0) => self.eval(*e),
                    EvalResult::KnownInt(_) => self.eval(*t),
                    _ => {
                        let vals = vec![self.eval(*t), self.eval(*e)];
                        EvalResult::from_values(vals)
                    }
                }
            }
            NodeKind::MemberExpression | NodeKind::ArraySubscriptionExpression => {
                // An assignment target takes the assigned value.
                let src: Vec<NodeId> = self.sources(n).into_iter().filter(|s| !children.contains(s)).collect();
                if !src.is_empty() {
                    let vals = src.iter().map(|&s| self.eval(s)).collect();
                    return EvalResult::from_values(vals);
                }
                if node.kind == NodeKind::ArraySubscriptionExpression {
                    if let [base, ix] = children.as_slice() {
                        if let (EvalResult::KnownString(s), EvalResult::KnownInt(i)) = (self.eval(*base), self.eval(*ix)) {
                            return s.as_bytes().get(i as usize).map(|b| EvalResult::KnownInt(*b as i128)).unwrap_or(EvalResult::Unknown);
                        }
                    }
                }
                EvalResult::Unknown
            }
            _ => EvalResult::Unknown,
        }
    }

    /// `&x`, `&s[k]`: a string constant (from offset k) or unknown.
    fn address(&mut self, target: NodeId) -> EvalResult {
        let g = self.g;
        match g.kind(target) {
            Some(NodeKind::DeclaredReferenceExpression) => match self.eval(target) {
                s @ EvalResult::KnownString(_) => s,
                _ => EvalResult::Unknown,
            },
            Some(NodeKind::ArraySubscriptionExpression) => {
                let [base, ix] = g.children(target) else { return EvalResult::Unknown };
                let (base, ix) = (*base, *ix);
                let b = match g.kind(base) {
                    Some(NodeKind::ArraySubscriptionExpression) => self.address(base),
                    _ => self.eval(base),
                };
                match (b, self.eval(ix)) {
                    (EvalResult::KnownString(s), EvalResult::KnownInt(i)) if i >= 0 && (i as usize) <= s.len() => {
                        EvalResult::KnownString(s.get(i as usize..).unwrap_or_default().to_string())
                    }
                    _ => EvalResult::Unknown,
                }
            }
            _ => EvalResult::Unknown,
        }
    }
}

fn map_values(v: EvalResult, f: impl Fn(EvalResult) -> EvalResult) -> EvalResult {
    match v {
        EvalResult::Unknown => EvalResult::Unknown,
        EvalResult::SetOfValues(vs) => EvalResult::from_values(vs.into_iter().map(f).collect()),
        x => f(x),
    }
}

/// Truncates to `width` bits, keeping the two's complement value signed.
/// `i1` stays 0 or 1.
pub(crate) fn wrap(v: i128, width: Option<u32>) -> i128 {
    match width {
        Some(1) => v & 1,
        Some(w) if w > 0 && w < 128 => {
            let m = (1i128 << w) - 1;
            let x = v & m;
            if x >> (w - 1) & 1 == 1 {
                x - (1i128 << w)
            } else {
                x
            }
        }
        _ => v,
    }
}

fn unsigned(v: i128, width: Option<u32>) -> i128 {
    match width {
        Some(w) if w > 0 && w < 128 => v & ((1i128 << w) - 1),
        _ => v,
    }
}

fn cast(v: EvalResult, kind: &str, sign: Option<&str>, from: Option<u32>, to: Option<u32>) -> EvalResult {
    match (v, kind) {
        (EvalResult::KnownInt(i), "zext") => EvalResult::KnownInt(wrap(unsigned(i, from), to)),
        (EvalResult::KnownInt(i), "sext" | "trunc") => EvalResult::KnownInt(wrap(i, to)),
        (EvalResult::KnownInt(i), "sitofp") => EvalResult::KnownFloat(i as f64),
        (EvalResult::KnownInt(i), "uitofp") => EvalResult::KnownFloat(unsigned(i, from) as f64),
        (EvalResult::KnownFloat(f), "fptosi" | "fptoui") if f.is_finite() => EvalResult::KnownInt(wrap(f as i128, to)),
        (EvalResult::KnownFloat(f), "fpext" | "fptrunc") => EvalResult::KnownFloat(f),
        (EvalResult::KnownInt(i), "reinterpret") if sign == Some("unsigned") => EvalResult::KnownInt(unsigned(i, from)),
        (x, "reinterpret" | "bitcast" | "addrspacecast") => x,
        _ => EvalResult::Unknown,
    }
}

fn fold(op: &str, a: &EvalResult, b: &EvalResult, signed: bool, operand_width: Option<u32>, width: Option<u32>) -> EvalResult {
    use EvalResult::*;
    match (a, b) {
        (KnownInt(x), KnownInt(y)) => {
            let (x, y) = if signed {
                (wrap(*x, operand_width), wrap(*y, operand_width))
            } else if matches!(op, "/" | "%" | "<" | ">" | "<=" | ">=" | ">>") {
                (unsigned(*x, operand_width), unsigned(*y, operand_width))
            } else {
                (*x, *y)
            };
            let r = match op {
                "+" => x.wrapping_add(y),
                "-" => x.wrapping_sub(y),
                "*" => x.wrapping_mul(y),
                "/" if y != 0 => x / y,
                "%" if y != 0 => x % y,
                "&" => x & y,
                "|" => x | y,
                "^" => x ^ y,
                "<<" if (0..128).contains(&y) => x << y,
                ">>" if (0..128).contains(&y) => x >> y,
                "==" => (x == y) as i128,
                "!=" => (x != y) as i128,
                "<" => (x < y) as i128,
                ">" => (x > y) as i128,
                "<=" => (x <= y) as i128,
                ">=" => (x >= y) as i128,
                "&&" => (x != 0 && y != 0) as i128,
                "||" => (x != 0 || y != 0) as i128,
                _ => return Unknown,
            };
            KnownInt(wrap(r, width))
        }
        (KnownFloat(x), KnownFloat(y)) => match op {
            "+" => KnownFloat(x + y),
            "-" => KnownFloat(x - y),
            "*" => KnownFloat(x * y),
            "/" => KnownFloat(x / y),
            "%" => KnownFloat(x % y),
            "==" => KnownInt((x == y) as i128),
            "!=" => KnownInt((x != y) as i128),
            "<" => KnownInt((x < y) as i128),
            ">" => KnownInt((x > y) as i128),
            "<=" => KnownInt((x <= y) as i128),
            ">=" => KnownInt((x >= y) as i128),
            _ => Unknown,
        },
        _ => Unknown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passes::PassPipeline;

    fn returned(src: &str) -> EvalResult {
        let t = crate::translate(src, "t.ll", &PassPipeline::default()).unwrap();
        let g = &t.graph;
        let ret = g.nodes_of_kind(NodeKind::ReturnStatement).last().unwrap().id;
        evaluate(g, g.child(ret, 0).unwrap())
    }

    #[test]
    fn folds_arithmetic_chains() {
        let r = returned("define i32 @f() {\nentry:\n  %a = add i32 2, 3\n  %b = mul i32 %a, 7\n  %c = sub i32 %b, 40\n  ret i32 %c\n}\n");
        assert_eq!(r, EvalResult::KnownInt(-5));
    }

    #[test]
    fn wraps_to_the_result_width() {
        let r = returned("define i8 @f() {\nentry:\n  %a = add i8 127, 1\n  ret i8 %a\n}\n");
        assert_eq!(r, EvalResult::KnownInt(-128));
        assert_eq!(wrap(1, Some(1)), 1);
        assert_eq!(wrap(3, Some(1)), 1);
        assert_eq!(wrap(255, Some(8)), -1);
        assert_eq!(wrap(1 << 40, Some(32)), 0);
        assert_eq!(wrap(-7, None), -7);
    }

    #[test]
    fn merges_phi_writers_into_a_set() {
        let r = returned(
            "define i32 @f(i1 %c) {\nentry:\n  br i1 %c, label %a, label %b\na:\n  br label %j\nb:\n  br label %j\nj:\n  %v = phi i32 [ 1, %a ], [ 2, %b ]\n  ret i32 %v\n}\n",
        );
        assert_eq!(r.values().len(), 2);
        assert!(matches!(r, EvalResult::SetOfValues(_)));
        assert!(r.values().contains(&EvalResult::KnownInt(1)) && r.values().contains(&EvalResult::KnownInt(2)));
    }

    #[test]
    fn loop_carried_value_is_unknown() {
        let r = returned(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/phi/popcount.ll")).unwrap());
        assert_eq!(r, EvalResult::Unknown);
    }

    #[test]
    fn parameters_are_unknown() {
        assert_eq!(returned("define i32 @f(i32 %x) {\nentry:\n  ret i32 %x\n}\n"), EvalResult::Unknown);
    }

    #[test]
    fn string_address_with_offset_gives_suffix() {
        let src = "@s = constant [5 x i8] c\"HIGH\\00\"\ndefine i8* @f() {\nentry:\n  %p = getelementptr [5 x i8], [5 x i8]* @s, i64 0, i64 2\n  ret i8* %p\n}\n";
        assert_eq!(returned(src), EvalResult::KnownString("GH".into()));
    }

    #[test]
    fn partial_write_makes_aggregate_unknown() {
        let r = returned("define { i32, i8 } @f({ i32, i8 } %a) {\nentry:\n  %b = insertvalue { i32, i8 } %a, i8 7, 1\n  ret { i32, i8 } %b\n}\n");
        assert_eq!(r, EvalResult::Unknown);
    }

    #[test]
    fn from_values_dedups_and_caps() {
        let two = EvalResult::from_values(vec![EvalResult::KnownInt(1), EvalResult::KnownInt(1)]);
        assert_eq!(two, EvalResult::KnownInt(1));
        let nan = EvalResult::from_values(vec![EvalResult::KnownFloat(f64::NAN), EvalResult::KnownFloat(f64::NAN)]);
        assert!(matches!(nan, EvalResult::KnownFloat(f) if f.is_nan()));
        let many = EvalResult::from_values((0..=MAX_SET as i128).map(EvalResult::KnownInt).collect());
        assert_eq!(many, EvalResult::Unknown);
        let edge = EvalResult::from_values((0..MAX_SET as i128).map(EvalResult::KnownInt).collect());
        assert_eq!(edge.values().len(), MAX_SET);
        assert_eq!(EvalResult::from_values(vec![EvalResult::KnownInt(1), EvalResult::Unknown]), EvalResult::Unknown);
    }

    #[test]
    fn serializes_with_kind_tag() {
        let j = serde_json::to_string(&EvalResult::KnownString("x".into())).unwrap();
        assert_eq!(j, r#"{"kind":"known-string","values":"x"}"#);
        assert_eq!(serde_json::to_string(&EvalResult::Unknown).unwrap(), r#"{"kind":"unknown"}"#);
    }
}
