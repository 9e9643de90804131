//! Reference interpreter over the AST of one function. Used as an oracle for
//! checking that passes preserve behaviour, so it is deliberately plain.
//!
//! Works on graphs before and after φ-elimination: pending φ records are
//! applied in parallel whenever control moves from a block to one with φs.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::eval::wrap;
use crate::cpg::{CpgGraph, NodeId, NodeKind, PhiRecord, PropValue};
use crate::ir::{IrOperand, OperandKind, SpecialConst, TypeRef};
use crate::passes::phis_by_block;

/// Steps before the interpreter gives up on a (probably infinite) loop.
pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    /// Two's complement value normalized to its width (`i1` is 0 or 1).
    Int { value: i128, width: u32 },
    Float(f64),
    /// Address of a named variable.
    Ptr(String),
    Aggregate(Vec<Value>),
    Undef,
}

impl Value {
    pub fn int(value: i128, width: u32) -> Value {
        Value::Int {
            value: wrap(value, Some(width)),
            width,
        }
    }

    pub fn as_int(&self) -> Option<i128> {
        match self {
            Value::Int { value, .. } => Some(*value),
            _ => None,
        }
    }

    fn truthy(&self) -> Result<bool, InterpError> {
        match self {
            Value::Int { value, .. } => Ok(*value != 0),
            Value::Float(f) => Ok(*f != 0.0),
            other => Err(InterpError::Trap(format!("branch on {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("unsupported node {kind} ({id})")]
    UnsupportedNodeKind { id: NodeId, kind: NodeKind },
    #[error("trap: {0}")]
    Trap(String),
    #[error("no label {0} at the top level of the function")]
    UnknownLabel(String),
    #[error("read of undefined variable {0}")]
    UnknownVariable(String),
    #[error("out of fuel")]
    OutOfFuel,
    #[error("node {0} is not a function definition")]
    NotAFunction(NodeId),
}

enum Flow {
    Normal,
    Goto(String),
    Return(Value),
}

/// Runs `function` on integer arguments (masked to the parameter widths).
/// A void return yields 0.
pub fn interpret_function(g: &CpgGraph, function: NodeId, args: &[i128]) -> Result<i128, InterpError> {
    let params = param_types(g, function);
    let values = args
        .iter()
        .zip(params.iter().chain(std::iter::repeat(&TypeRef::Int(64))))
        .map(|(a, t)| Value::int(*a, t.int_width().unwrap_or(64)))
        .collect();
    match interpret_values(g, function, values, DEFAULT_FUEL)? {
        Value::Int { value, .. } => Ok(value),
        Value::Undef => Ok(0),
        other => Err(InterpError::Trap(format!("non-integer result {other:?}"))),
    }
}

pub fn interpret_values(g: &CpgGraph, function: NodeId, args: Vec<Value>, fuel: u64) -> Result<Value, InterpError> {
    if g.kind(function) != Some(NodeKind::FunctionDeclaration) {
        return Err(InterpError::NotAFunction(function));
    }
    let body = g
        .children(function)
        .iter()
        .copied()
        .find(|&c| g.kind(c) == Some(NodeKind::CompoundStatement))
        .ok_or(InterpError::NotAFunction(function))?;
    let mut env = HashMap::new();
    let params = g.children(function).iter().filter(|&&c| g.kind(c) == Some(NodeKind::ParameterDeclaration));
    for (p, v) in params.zip(args) {
        if let Some(name) = g.node(*p).and_then(|n| n.name.clone()) {
            env.insert(name, v);
        }
    }
    let phis = phis_by_block(&g.phi_records);
    let phis: BTreeMap<String, Vec<&PhiRecord>> = phis
        .into_iter()
        .filter(|((f, _), _)| *f == function)
        .map(|((_, l), v)| (l, v))
        .collect();
    let mut m = Machine { g, env, fuel, phis };
    m.run_body(body)
}

fn param_types(g: &CpgGraph, f: NodeId) -> Vec<TypeRef> {
    g.children(f)
        .iter()
        .filter_map(|&c| g.node(c))
        .filter(|n| n.kind == NodeKind::ParameterDeclaration)
        .map(|n| n.ty.clone())
        .collect()
}

struct Machine<'g> {
    g: &'g CpgGraph,
    env: HashMap<String, Value>,
    fuel: u64,
    phis: BTreeMap<String, Vec<&'g PhiRecord>>,
}

impl Machine<'_> {
    fn tick(&mut self) -> Result<(), InterpError> {
        if self.fuel == 0 {
            return Err(InterpError::OutOfFuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn unsupported(&self, id: NodeId) -> InterpError {
        InterpError::UnsupportedNodeKind {
            id,
            kind: self.g.kind(id).unwrap_or(NodeKind::ProblemNode),
        }
    }

    /// Top-level statements run in order; a goto resumes at its label.
    fn run_body(&mut self, body: NodeId) -> Result<Value, InterpError> {
        let g = self.g;
        let top = g.children(body).to_vec();
        let labels: HashMap<String, usize> = top
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| {
                let n = g.node(s)?;
                (n.kind == NodeKind::LabelStatement).then(|| (n.name.clone().unwrap_or_default(), i))
            })
            .collect();
        let mut pc = 0;
        let mut block: Option<String> = None;
        while pc < top.len() {
            let s = top[pc];
            if let Some(n) = g.node(s).filter(|n| n.kind == NodeKind::LabelStatement) {
                block = n.name.clone();
            }
            match self.exec(s)? {
                Flow::Normal => pc += 1,
                Flow::Return(v) => return Ok(v),
                Flow::Goto(l) => {
                    pc = *labels.get(&l).ok_or_else(|| InterpError::UnknownLabel(l.clone()))?;
                    self.apply_phis(block.as_deref(), &l)?;
                }
            }
        }
        Ok(Value::Undef)
    }

    fn apply_phis(&mut self, from: Option<&str>, to: &str) -> Result<(), InterpError> {
        let Some(records) = self.phis.get(to).cloned() else { return Ok(()) };
        let from = from.unwrap_or_default();
        let mut updates = Vec::new();
        for r in records {
            let (value, _) = r
                .incoming
                .iter()
                .find(|(_, p)| p == from)
                .ok_or_else(|| InterpError::Trap(format!("φ %{} has no value for edge {from} -> {to}", r.target_name)))?;
            updates.push((r.target_name.clone(), self.ir_operand(value)?));
        }
        self.env.extend(updates);
        Ok(())
    }

    fn ir_operand(&self, op: &IrOperand) -> Result<Value, InterpError> {
        Ok(match &op.kind {
            OperandKind::Local(n) => self.env.get(n).cloned().ok_or_else(|| InterpError::UnknownVariable(n.clone()))?,
            OperandKind::Global(n) => Value::Ptr(n.clone()),
            OperandKind::Int(v) => Value::int(*v, op.ty.int_width().unwrap_or(64)),
            OperandKind::Float(f) => Value::Float(*f),
            OperandKind::Special(SpecialConst::Null | SpecialConst::ZeroInitializer) => {
                Value::int(0, op.ty.int_width().unwrap_or(64))
            }
            _ => Value::Undef,
        })
    }

    fn exec(&mut self, s: NodeId) -> Result<Flow, InterpError> {
        self.tick()?;
        let g = self.g;
        let node = g.node(s).ok_or_else(|| self.unsupported(s))?;
        let children = g.children(s);
        match node.kind {
            NodeKind::CompoundStatement | NodeKind::LabelStatement => {
                for &c in children {
                    match self.exec(c)? {
                        Flow::Normal => {}
                        other => return Ok(other),
                    }
                }
                Ok(Flow::Normal)
            }
            NodeKind::GotoStatement => Ok(Flow::Goto(node.name.clone().unwrap_or_default())),
            NodeKind::ReturnStatement => {
                let v = match children.first() {
                    Some(&c) => self.eval(c)?,
                    None => Value::Undef,
                };
                Ok(Flow::Return(v))
            }
            NodeKind::IfStatement => {
                let cond = self.eval(children[0])?.truthy()?;
                match (cond, children.get(1), children.get(2)) {
                    (true, Some(&t), _) => self.exec(t),
                    (false, _, Some(&e)) => self.exec(e),
                    _ => Ok(Flow::Normal),
                }
            }
            NodeKind::SwitchStatement => {
                let sel = self.eval(children[0])?;
                let mut default = None;
                for &c in &children[1..] {
                    let case = g.node(c).ok_or_else(|| self.unsupported(c))?;
                    if case.prop("default").is_some() {
                        default = Some(c);
                        continue;
                    }
                    let v = self.eval(g.children(c)[0])?;
                    if v.as_int() == sel.as_int() {
                        return self.exec_case(c, 1);
                    }
                }
                match default {
                    Some(c) => self.exec_case(c, 0),
                    None => Ok(Flow::Normal),
                }
            }
            NodeKind::VariableDeclaration => {
                let v = match children.first() {
                    Some(&c) => self.eval(c)?,
                    None => Value::Undef,
                };
                self.env.insert(node.name.clone().unwrap_or_default(), v);
                Ok(Flow::Normal)
            }
            NodeKind::CallExpression if node.name_is("llvm.unreachable") => Err(InterpError::Trap("unreachable".into())),
            NodeKind::ThrowStatement | NodeKind::TryStatement | NodeKind::CatchClause => Err(self.unsupported(s)),
            _ => {
                self.eval(s)?;
                Ok(Flow::Normal)
            }
        }
    }

    fn exec_case(&mut self, case: NodeId, skip: usize) -> Result<Flow, InterpError> {
        for &c in &self.g.children(case)[skip..] {
            match self.exec(c)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn eval(&mut self, n: NodeId) -> Result<Value, InterpError> {
        self.tick()?;
        let g = self.g;
        let node = g.node(n).ok_or_else(|| self.unsupported(n))?;
        let children = g.children(n);
        let width = node.ty.int_width();
        match node.kind {
            NodeKind::Literal => Ok(match node.prop("value") {
                _ if matches!(node.prop_str("special"), Some("undef") | Some("poison")) => Value::Undef,
                Some(PropValue::Int(i)) if node.ty.is_float() => Value::Float(*i as f64),
                Some(PropValue::Int(i)) => Value::int(*i as i128, width.unwrap_or(64)),
                Some(PropValue::Float(f)) => Value::Float(*f),
                Some(PropValue::Bool(b)) => Value::int(*b as i128, 1),
                Some(PropValue::Str(s)) => match s.parse::<i128>() {
                    Ok(v) => Value::int(v, width.unwrap_or(128)),
                    Err(_) => return Err(self.unsupported(n)),
                },
                None => Value::Undef,
            }),
            NodeKind::DeclaredReferenceExpression => {
                let name = node.name.clone().unwrap_or_default();
                match self.env.get(&name) {
                    Some(v) => Ok(v.clone()),
                    None if node.prop("scope").is_some() => Ok(Value::Ptr(name)),
                    None => Err(InterpError::UnknownVariable(name)),
                }
            }
            NodeKind::CastExpression => {
                let v = self.eval(children[0])?;
                let from = g.node(children[0]).and_then(|c| c.ty.int_width());
                cast(v, node.prop_str("castKind").unwrap_or_default(), node.prop_str("signedness"), from, width)
                    .ok_or_else(|| self.unsupported(n))
            }
            NodeKind::UnaryOperator => {
                let op = node.operator().unwrap_or_default();
                if op == "&" {
                    return match g.node(children[0]) {
                        Some(c) if c.kind == NodeKind::DeclaredReferenceExpression => Ok(Value::Ptr(c.name.clone().unwrap_or_default())),
                        _ => Err(self.unsupported(n)),
                    };
                }
                let v = self.eval(children[0])?;
                match (op, v) {
                    ("*", Value::Ptr(p)) => self.env.get(&p).cloned().ok_or(InterpError::UnknownVariable(p)),
                    ("-", Value::Float(f)) => Ok(Value::Float(-f)),
                    ("-", Value::Int { value, width }) => Ok(Value::int(-value, width)),
                    ("~", Value::Int { value, width }) => Ok(Value::int(!value, width)),
                    ("!", v) => Ok(Value::int(!v.truthy()? as i128, 1)),
                    _ => Err(self.unsupported(n)),
                }
            }
            NodeKind::BinaryOperator => {
                let op = node.operator().unwrap_or_default();
                match op {
                    "=" => {
                        let v = self.eval(children[1])?;
                        self.store(children[0], v.clone())?;
                        return Ok(v);
                    }
                    "&&" => {
                        if !self.eval(children[0])?.truthy()? {
                            return Ok(Value::int(0, 1));
                        }
                        return Ok(Value::int(self.eval(children[1])?.truthy()? as i128, 1));
                    }
                    "||" => {
                        if self.eval(children[0])?.truthy()? {
                            return Ok(Value::int(1, 1));
                        }
                        return Ok(Value::int(self.eval(children[1])?.truthy()? as i128, 1));
                    }
                    _ => {}
                }
                let sign = |c: NodeId| g.node(c).and_then(|x| x.prop_str("signedness")).map(str::to_string);
                let signed = sign(children[0]).or_else(|| sign(children[1]));
                let a = self.eval(children[0])?;
                let b = self.eval(children[1])?;
                if matches!(op, "/" | "%") && matches!(b, Value::Int { value: 0, .. }) {
                    return Err(InterpError::Trap("division by zero".into()));
                }
                binary(op, a, b, signed.as_deref(), width).ok_or_else(|| self.unsupported(n))
            }
            NodeKind::ConditionalExpression => {
                if self.eval(children[0])?.truthy()? {
                    self.eval(children[1])
                } else {
                    self.eval(children[2])
                }
            }
            NodeKind::CallExpression => {
                let name = node.name.clone().unwrap_or_default();
                let args = children.iter().map(|&c| self.eval(c)).collect::<Result<Vec<_>, _>>()?;
                match name.as_str() {
                    "isunordered" => match args.as_slice() {
                        [Value::Float(a), Value::Float(b)] => Ok(Value::int((a.is_nan() || b.is_nan()) as i128, 1)),
                        _ => Err(self.unsupported(n)),
                    },
                    "llvm.unreachable" => Err(InterpError::Trap("unreachable".into())),
                    _ if node.prop("aggregate").is_some() => Ok(Value::Aggregate(args)),
                    _ => Err(self.unsupported(n)),
                }
            }
            NodeKind::MemberExpression | NodeKind::ArraySubscriptionExpression => {
                let base = self.eval(children[0])?;
                let ix = self.index(n)?;
                match base {
                    Value::Aggregate(items) => items.get(ix).cloned().ok_or_else(|| InterpError::Trap(format!("index {ix} out of range"))),
                    _ => Err(self.unsupported(n)),
                }
            }
            _ => Err(self.unsupported(n)),
        }
    }

    fn index(&mut self, n: NodeId) -> Result<usize, InterpError> {
        let g = self.g;
        let node = g.node(n).ok_or_else(|| self.unsupported(n))?;
        if node.kind == NodeKind::MemberExpression {
            return node
                .name
                .as_deref()
                .and_then(|f| f.strip_prefix("field_"))
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| self.unsupported(n));
        }
        let i = self.eval(g.children(n)[1])?.as_int().ok_or_else(|| self.unsupported(n))?;
        usize::try_from(i).map_err(|_| InterpError::Trap(format!("negative index {i}")))
    }

    /// Writes through an lvalue: `x`, `*p`, `x.f`, `x[i]` (nested).
    fn store(&mut self, target: NodeId, v: Value) -> Result<(), InterpError> {
        let g = self.g;
        let mut path = Vec::new();
        let mut cur = target;
        let root = loop {
            let node = g.node(cur).ok_or_else(|| self.unsupported(cur))?;
            match node.kind {
                NodeKind::DeclaredReferenceExpression => break node.name.clone().unwrap_or_default(),
                NodeKind::UnaryOperator if node.operator() == Some("*") => match self.eval(g.children(cur)[0])? {
                    Value::Ptr(p) => break p,
                    _ => return Err(self.unsupported(cur)),
                },
                NodeKind::MemberExpression | NodeKind::ArraySubscriptionExpression => {
                    let base = g.children(cur)[0];
                    path.push((self.index(cur)?, base));
                    cur = base;
                }
                _ => return Err(self.unsupported(cur)),
            }
        };
        path.reverse();
        if path.is_empty() {
            self.env.insert(root, v);
            return Ok(());
        }
        let slot = self.env.get_mut(&root).ok_or_else(|| InterpError::UnknownVariable(root.clone()))?;
        let mut place = slot;
        for (ix, container) in path {
            if matches!(place, Value::Undef) {
                // first write into an undef aggregate materializes its slots
                let len = g.node(container).and_then(|n| arity(g, &n.ty)).unwrap_or(ix + 1);
                *place = Value::Aggregate(vec![Value::Undef; len.max(ix + 1)]);
            }
            match place {
                Value::Aggregate(items) if ix < items.len() => place = &mut items[ix],
                _ => return Err(InterpError::Trap(format!("store into non-aggregate {root}"))),
            }
        }
        *place = v;
        Ok(())
    }
}

/// Number of slots of an aggregate type, for materializing `undef`.
fn arity(g: &CpgGraph, ty: &TypeRef) -> Option<usize> {
    match crate::mapper::resolve(g, ty) {
        TypeRef::Struct { fields, .. } => Some(fields.len()),
        TypeRef::Array(n, _) => usize::try_from(*n).ok().filter(|&n| n <= 1 << 16),
        _ => None,
    }
}

fn unsigned(v: i128, width: u32) -> i128 {
    if width >= 128 {
        v
    } else {
        v & ((1i128 << width) - 1)
    }
}

fn signed(v: i128, width: u32) -> i128 {
    if width == 1 {
        // A set i1 is -1 when read as signed.
        -(v & 1)
    } else {
        wrap(v, Some(width))
    }
}

fn cast(v: Value, kind: &str, sign: Option<&str>, from: Option<u32>, to: Option<u32>) -> Option<Value> {
    let to_w = to.unwrap_or(64);
    Some(match (v, kind) {
        (Value::Int { value, width }, "zext") => Value::int(unsigned(value, width), to_w),
        (Value::Int { value, width }, "sext") => Value::int(signed(value, width), to_w),
        (Value::Int { value, .. }, "trunc") => Value::int(value, to_w),
        (Value::Int { value, width }, "sitofp") => Value::Float(signed(value, width) as f64),
        (Value::Int { value, width }, "uitofp") => Value::Float(unsigned(value, width) as f64),
        (Value::Float(f), "fptosi" | "fptoui") => Value::int(f as i128, to_w),
        (Value::Float(f), "fpext" | "fptrunc") => Value::Float(f),
        (v, "reinterpret" | "bitcast" | "addrspacecast" | "ptrtoint" | "inttoptr") => {
            let _ = (sign, from);
            v
        }
        _ => return None,
    })
}

fn binary(op: &str, a: Value, b: Value, sign: Option<&str>, width: Option<u32>) -> Option<Value> {
    match (a, b) {
        (Value::Int { value: x, width: w }, Value::Int { value: y, .. }) => {
            let (x, y) = if sign == Some("signed") {
                (signed(x, w), signed(y, w))
            } else {
                (unsigned(x, w), unsigned(y, w))
            };
            let out_w = width.unwrap_or(w);
            let r = match op {
                "+" => x.wrapping_add(y),
                "-" => x.wrapping_sub(y),
                "*" => x.wrapping_mul(y),
                "/" => x.checked_div(y)?,
                "%" => x.checked_rem(y)?,
                "&" => x & y,
                "|" => x | y,
                "^" => x ^ y,
                "<<" if y >= 0 && (y as u32) < w => x << y,
                ">>" if y >= 0 && (y as u32) < w => x >> y,
                "<<" | ">>" => return Some(Value::Undef),
                "==" => (x == y) as i128,
                "!=" => (x != y) as i128,
                "<" => (x < y) as i128,
                ">" => (x > y) as i128,
                "<=" => (x <= y) as i128,
                ">=" => (x >= y) as i128,
                _ => return None,
            };
            Some(Value::int(r, out_w))
        }
        (Value::Float(x), Value::Float(y)) => Some(match op {
            "+" => Value::Float(x + y),
            "-" => Value::Float(x - y),
            "*" => Value::Float(x * y),
            "/" => Value::Float(x / y),
            "%" => Value::Float(x % y),
            "==" => Value::int((x == y) as i128, 1),
            "!=" => Value::int((x != y) as i128, 1),
            "<" => Value::int((x < y) as i128, 1),
            ">" => Value::int((x > y) as i128, 1),
            "<=" => Value::int((x <= y) as i128, 1),
            ">=" => Value::int((x >= y) as i128, 1),
            _ => return None,
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passes::PassPipeline;

    fn run_with(src: &str, args: &[i128], pipeline: &PassPipeline) -> Result<i128, InterpError> {
        let t = crate::translate(src, "t.ll", pipeline).unwrap();
        let f = *t.graph.functions.iter().rev().find(|(_, i)| i.is_definition).unwrap().0;
        interpret_function(&t.graph, f, args)
    }

    fn run(src: &str, args: &[i128]) -> Result<i128, InterpError> {
        let fresh = run_with(src, args, &PassPipeline::none());
        assert_eq!(fresh, run_with(src, args, &PassPipeline::default()), "pipelines disagree");
        fresh
    }

    #[test]
    fn integer_semantics_follow_llvm() {
        let f = |op: &str, a: i128, b: i128| {
            run(&format!("define i8 @f(i8 %a, i8 %b) {{\nentry:\n  %r = {op} i8 %a, %b\n  ret i8 %r\n}}\n"), &[a, b]).unwrap()
        };
        assert_eq!(f("add", 100, 100), -56);
        assert_eq!(f("udiv", -1, 16), 15);
        assert_eq!(f("sdiv", -7, 2), -3);
        assert_eq!(f("srem", -7, 2), -1);
        assert_eq!(f("urem", -1, 10), 5);
        assert_eq!(f("lshr", -128, 7), 1);
        assert_eq!(f("ashr", -128, 7), -1);
        assert_eq!(f("shl", 1, 7), -128);
    }

    #[test]
    fn unsigned_compare_reinterprets_operands() {
        let src = "define i1 @f(i32 %a, i32 %b) {\nentry:\n  %r = icmp ult i32 %a, %b\n  ret i1 %r\n}\n";
        assert_eq!(run(src, &[-1, 1]), Ok(0));
        assert_eq!(run(src, &[1, -1]), Ok(1));
    }

    #[test]
    fn casts_extend_and_truncate() {
        let src = "define i32 @f(i32 %x) {\nentry:\n  %t = trunc i32 %x to i8\n  %z = zext i8 %t to i32\n  %s = sext i8 %t to i32\n  %r = sub i32 %z, %s\n  ret i32 %r\n}\n";
        assert_eq!(run(src, &[0x1ff]), Ok(256));
        assert_eq!(run(src, &[5]), Ok(0));
    }

    #[test]
    fn select_and_switch() {
        let src = "define i32 @f(i32 %x) {
entry:
  switch i32 %x, label %d [ i32 1, label %one  i32 2, label %two ]
one:
  ret i32 10
two:
  %c = icmp sgt i32 %x, 0
  %s = select i1 %c, i32 20, i32 21
  ret i32 %s
d:
  ret i32 -1
}
";
        assert_eq!(run(src, &[1]), Ok(10));
        assert_eq!(run(src, &[2]), Ok(20));
        assert_eq!(run(src, &[9]), Ok(-1));
    }

    #[test]
    fn memory_through_allocas() {
        let src = "define i32 @f(i32 %x) {\nentry:\n  %p = alloca i32\n  store i32 %x, i32* %p\n  %v = load i32, i32* %p\n  %w = add i32 %v, 1\n  store i32 %w, i32* %p\n  %r = load i32, i32* %p\n  ret i32 %r\n}\n";
        assert_eq!(run(src, &[41]), Ok(42));
    }

    #[test]
    fn aggregates_roundtrip_through_insert_and_extract() {
        let src = "define i32 @f(i32 %x) {\nentry:\n  %a = insertvalue { i32, i32 } undef, i32 %x, 0\n  %b = insertvalue { i32, i32 } %a, i32 3, 1\n  %c = extractvalue { i32, i32 } %b, 0\n  %d = extractvalue { i32, i32 } %b, 1\n  %r = mul i32 %c, %d\n  ret i32 %r\n}\n";
        assert_eq!(run(src, &[7]), Ok(21));
    }

    #[test]
    fn phis_are_applied_in_parallel() {
        // without parallel semantics the swap below would duplicate one value
        let src = "define i32 @f(i32 %n) {
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
  %r = mul i32 %a, 10
  %s = add i32 %r, %b
  ret i32 %s
}
";
        let fresh = run_with(src, &[2], &PassPipeline::none());
        assert_eq!(fresh, Ok(21));
        assert_eq!(run_with(src, &[3], &PassPipeline::none()), Ok(12));
    }

    #[test]
    fn traps() {
        let div = "define i32 @f(i32 %x) {\nentry:\n  %r = sdiv i32 10, %x\n  ret i32 %r\n}\n";
        assert_eq!(run(div, &[0]), Err(InterpError::Trap("division by zero".into())));
        let unreachable = "define i32 @f() {\nentry:\n  unreachable\n}\n";
        assert_eq!(run(unreachable, &[]), Err(InterpError::Trap("unreachable".into())));
    }

    #[test]
    fn infinite_loop_runs_out_of_fuel() {
        let src = "define i32 @f() {\nentry:\n  br label %l\nl:\n  br label %l\n}\n";
        let t = crate::translate(src, "t.ll", &PassPipeline::none()).unwrap();
        let f = *t.graph.functions.keys().next().unwrap();
        assert_eq!(interpret_values(&t.graph, f, vec![], 10_000), Err(InterpError::OutOfFuel));
    }

    #[test]
    fn external_calls_are_unsupported() {
        let src = "declare i32 @g()\ndefine i32 @f() {\nentry:\n  %r = call i32 @g()\n  ret i32 %r\n}\n";
        assert!(matches!(run(src, &[]), Err(InterpError::UnsupportedNodeKind { kind: NodeKind::CallExpression, .. })));
    }

    #[test]
    fn void_function_returns_zero() {
        assert_eq!(run("define void @f() {\nentry:\n  ret void\n}\n", &[]), Ok(0));
    }
}
