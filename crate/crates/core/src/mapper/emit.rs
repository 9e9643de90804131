//! Node construction helpers and operand translation shared by the mapper and
//! the φ-elimination pass.

use std::collections::{BTreeSet, HashSet};

use crate::cpg::{CpgGraph, EdgeKind, NewNode, NodeId, NodeKind, PropValue};
use crate::ir::parser::{member_type, resolve_named};
use crate::ir::{IrInstruction, IrOperand, Location, Opcode, OperandKind, SpecialConst, TypeRef};

pub struct Emitter<'g> {
    pub g: &'g mut CpgGraph,
    pub allocas: BTreeSet<String>,
    pub functions: HashSet<String>,
    pub loc: Option<Location>,
}

impl<'g> Emitter<'g> {
    /// Emitter for code inside `function`, using the bookkeeping the mapper recorded.
    pub fn for_function(g: &'g mut CpgGraph, function: NodeId) -> Self {
        let allocas = g.functions.get(&function).map(|f| f.allocas.clone()).unwrap_or_default();
        let functions = g.functions.values().map(|f| f.name.clone()).collect();
        Emitter {
            g,
            allocas,
            functions,
            loc: None,
        }
    }

    fn spec(&self, kind: NodeKind, code: &str, ty: TypeRef) -> NewNode {
        NewNode::new(kind).code(code).ty(ty).at(self.loc)
    }

    pub fn compound(&mut self, children: &[NodeId], code: &str) -> NodeId {
        let c = self.g.add(self.spec(NodeKind::CompoundStatement, code, TypeRef::Void));
        for &ch in children {
            self.g.add_child(c, ch);
        }
        c
    }

    pub fn with_children(&mut self, spec: NewNode, children: &[NodeId]) -> NodeId {
        let n = self.g.add(spec);
        for &ch in children {
            self.g.add_child(n, ch);
        }
        n
    }

    pub fn literal(&mut self, value: PropValue, ty: TypeRef, code: &str) -> NodeId {
        let spec = self.spec(NodeKind::Literal, code, ty).prop("value", value);
        self.g.add(spec)
    }

    pub fn int_literal(&mut self, v: i128, ty: TypeRef) -> NodeId {
        let value = match i64::try_from(v) {
            Ok(i) => PropValue::Int(i),
            Err(_) => PropValue::Str(v.to_string()),
        };
        self.literal(value, ty, &v.to_string())
    }

    pub fn problem(&mut self, message: &str, code: &str) -> NodeId {
        log::warn!("problem node: {message} in `{code}`");
        let spec = self.spec(NodeKind::ProblemNode, code, TypeRef::Opaque).prop("problem", message);
        self.g.add(spec)
    }

    pub fn reference(&mut self, name: &str, ty: TypeRef, code: &str, global: bool) -> NodeId {
        let mut spec = self.spec(NodeKind::DeclaredReferenceExpression, code, ty).name(name);
        if global {
            spec = spec.prop("scope", "global");
        }
        self.g.add(spec)
    }

    pub fn unary(&mut self, op: &str, operand: NodeId, ty: TypeRef, code: &str) -> NodeId {
        let spec = self.spec(NodeKind::UnaryOperator, code, ty).prop("operatorCode", op);
        self.with_children(spec, &[operand])
    }

    pub fn binary(&mut self, op: &str, lhs: NodeId, rhs: NodeId, ty: TypeRef, code: &str) -> NodeId {
        let spec = self.spec(NodeKind::BinaryOperator, code, ty).prop("operatorCode", op);
        self.with_children(spec, &[lhs, rhs])
    }

    pub fn assign(&mut self, lhs: NodeId, rhs: NodeId, code: &str) -> NodeId {
        let ty = self.g.node(rhs).map(|n| n.ty.clone()).unwrap_or(TypeRef::Void);
        self.binary("=", lhs, rhs, ty, code)
    }

    pub fn cast(&mut self, operand: NodeId, ty: TypeRef, kind: &str, signedness: Option<&str>, code: &str) -> NodeId {
        let mut spec = self
            .spec(NodeKind::CastExpression, code, ty.clone())
            .name(ty.to_string())
            .prop("castKind", kind);
        if let Some(s) = signedness {
            spec = spec.prop("signedness", s);
        }
        self.with_children(spec, &[operand])
    }

    pub fn call(&mut self, name: &str, args: &[NodeId], ty: TypeRef, code: &str) -> NodeId {
        let spec = self.spec(NodeKind::CallExpression, code, ty).name(name);
        self.with_children(spec, args)
    }

    pub fn goto(&mut self, label: &str, code: &str) -> NodeId {
        let spec = self.spec(NodeKind::GotoStatement, code, TypeRef::Void).name(label);
        self.g.add(spec)
    }

    pub fn subscript(&mut self, base: NodeId, index: NodeId, ty: TypeRef, code: &str) -> NodeId {
        let spec = self.spec(NodeKind::ArraySubscriptionExpression, code, ty);
        self.with_children(spec, &[base, index])
    }

    /// `base.field_k`, linked to the field declaration of the struct's record.
    pub fn member(&mut self, base: NodeId, struct_ty: &TypeRef, index: u64, code: &str) -> Option<NodeId> {
        let defs = self.g.type_defs.clone();
        let field_ty = member_type(struct_ty, index, &defs)?;
        let record = self.record_for(struct_ty);
        let name = format!("field_{index}");
        let spec = self.spec(NodeKind::MemberExpression, code, field_ty).name(name);
        let m = self.with_children(spec, &[base]);
        if let Some(field) = record.and_then(|r| self.g.field(r, index as usize)) {
            self.g.add_edge(m, field, EdgeKind::Field);
        }
        Some(m)
    }

    /// Record declaration for a struct type, interning literal structs on demand.
    pub fn record_for(&mut self, ty: &TypeRef) -> Option<NodeId> {
        match ty {
            TypeRef::Struct { fields, .. } => Some(self.g.intern_literal_struct(fields)),
            TypeRef::Named(_) => self.g.record_for_type(ty),
            _ => None,
        }
    }

    /// Adds a TYPE edge when the declared type (through pointers and arrays) is a struct.
    pub fn link_type(&mut self, node: NodeId, ty: &TypeRef) {
        let mut cur = ty;
        loop {
            match cur {
                TypeRef::Pointer { pointee: Some(p), .. } => cur = p,
                TypeRef::Array(_, e) => cur = e,
                TypeRef::Vector { elem, .. } => cur = elem,
                _ => break,
            }
        }
        let cur = cur.clone();
        if let Some(rec) = self.record_for(&cur) {
            self.g.add_edge(node, rec, EdgeKind::Type);
        }
    }

    pub fn declaration(&mut self, name: &str, ty: TypeRef, init: Option<NodeId>, code: &str) -> NodeId {
        let spec = self.spec(NodeKind::VariableDeclaration, code, ty.clone()).name(name);
        let d = self.g.add(spec);
        if let Some(i) = init {
            self.g.add_child(d, i);
        }
        self.link_type(d, &ty);
        d
    }

    fn is_function(&self, name: &str) -> bool {
        self.functions.contains(name)
    }

    /// Expression for an operand value.
    pub fn operand(&mut self, op: &IrOperand) -> NodeId {
        self.operand_depth(op, 0)
    }

    fn operand_depth(&mut self, op: &IrOperand, depth: usize) -> NodeId {
        let code = if op.text.is_empty() { op.ty.to_string() } else { op.text.clone() };
        match &op.kind {
            OperandKind::Local(n) => {
                if self.allocas.contains(n) {
                    let pointee = op.ty.pointee().cloned().unwrap_or(TypeRef::Opaque);
                    let r = self.reference(n, pointee, &code, false);
                    self.unary("&", r, op.ty.clone(), &code)
                } else {
                    self.reference(n, op.ty.clone(), &code, false)
                }
            }
            OperandKind::Global(n) => {
                if self.is_function(n) {
                    self.reference(n, op.ty.clone(), &code, true)
                } else {
                    let pointee = op.ty.pointee().cloned().unwrap_or(TypeRef::Opaque);
                    let r = self.reference(n, pointee, &code, true);
                    self.unary("&", r, op.ty.clone(), &code)
                }
            }
            OperandKind::Int(v) => {
                let id = self.int_literal(*v, op.ty.clone());
                if let Some(n) = self.g.node_mut(id) {
                    n.code = code;
                }
                id
            }
            OperandKind::Float(f) => self.literal(PropValue::Float(*f), op.ty.clone(), &code),
            OperandKind::Str(bytes) => {
                let trimmed = bytes.strip_suffix(&[0]).unwrap_or(bytes);
                let s = String::from_utf8_lossy(trimmed).into_owned();
                self.literal(PropValue::Str(s), op.ty.clone(), &code)
            }
            OperandKind::Special(s) => {
                let (value, tag) = match s {
                    SpecialConst::Null => (PropValue::Int(0), "null"),
                    SpecialConst::ZeroInitializer => (PropValue::Int(0), "zeroinitializer"),
                    SpecialConst::Undef => (PropValue::Str("undef".into()), "undef"),
                    SpecialConst::Poison => (PropValue::Str("poison".into()), "poison"),
                    SpecialConst::None => (PropValue::Str("none".into()), "none"),
                };
                let id = self.literal(value, op.ty.clone(), &code);
                if let Some(n) = self.g.node_mut(id) {
                    n.properties.insert("special".into(), tag.into());
                }
                id
            }
            OperandKind::Label(l) => self.reference(l, TypeRef::Label, &code, false),
            OperandKind::Aggregate(items) => {
                let args: Vec<NodeId> = items.iter().map(|i| self.operand_depth(i, depth + 1)).collect();
                let name = match resolve_named(&op.ty, &self.g.type_defs) {
                    TypeRef::Struct { fields, .. } if !matches!(op.ty, TypeRef::Named(_)) => {
                        crate::ir::types::literal_struct_name(fields)
                    }
                    TypeRef::Struct { .. } => match &op.ty {
                        TypeRef::Named(n) => n.clone(),
                        _ => unreachable!(),
                    },
                    _ => "llvm.aggregate".to_string(),
                };
                let ty = op.ty.clone();
                if matches!(resolve_named(&ty, &self.g.type_defs), TypeRef::Struct { .. }) {
                    self.record_for(&ty);
                }
                let c = self.call(&name, &args, ty, &code);
                if let Some(n) = self.g.node_mut(c) {
                    n.properties.insert("aggregate".into(), true.into());
                }
                c
            }
            OperandKind::ConstExpr(inst) => self.const_expr(inst, &code, depth),
            OperandKind::Opaque(text) => self.problem("operand could not be parsed", text),
        }
    }

    /// A constant expression maps like the instruction it spells, minus the declaration.
    fn const_expr(&mut self, inst: &IrInstruction, code: &str, depth: usize) -> NodeId {
        let ops: Vec<&IrOperand> = inst.operands.iter().collect();
        match inst.opcode {
            op if op.is_cast() => {
                let v = self.operand_depth(ops[0], depth + 1);
                let (kind, sign) = cast_kind(op);
                self.cast(v, inst.result_type.clone(), kind, sign, code)
            }
            Opcode::GetElementPtr => {
                let src = inst.type_args.first().cloned().unwrap_or(TypeRef::Opaque);
                self.address_of(&src, ops[0], &inst.operands[1..], &inst.result_type, code)
            }
            op if op.is_binary() => {
                let (sym, sign) = binary_operator(op);
                let ty = inst.result_type.clone();
                let a = self.operand_depth(ops[0], depth + 1);
                let b = self.operand_depth(ops[1], depth + 1);
                let (a, b) = match sign {
                    Some(s) => (
                        self.cast(a, ty.clone(), "reinterpret", Some(s), code),
                        self.cast(b, ty.clone(), "reinterpret", Some(s), code),
                    ),
                    None => (a, b),
                };
                self.binary(sym, a, b, ty, code)
            }
            Opcode::ICmp => {
                let pred = inst.predicate().unwrap_or("eq").to_string();
                let a = self.operand_depth(ops[0], depth + 1);
                let b = self.operand_depth(ops[1], depth + 1);
                self.icmp(&pred, a, b, &ops[0].ty, code)
            }
            Opcode::Select => {
                let c = self.operand_depth(ops[0], depth + 1);
                let t = self.operand_depth(ops[1], depth + 1);
                let e = self.operand_depth(ops[2], depth + 1);
                let spec = self.spec(NodeKind::ConditionalExpression, code, inst.result_type.clone());
                self.with_children(spec, &[c, t, e])
            }
            Opcode::ExtractValue => {
                let base = self.operand_depth(ops[0], depth + 1);
                self.member_path(base, &ops[0].ty, inst.indices(), code)
            }
            _ => {
                let args: Vec<NodeId> = ops.iter().map(|o| self.operand_depth(o, depth + 1)).collect();
                let name = format!("llvm.{}", inst.mnemonic);
                self.call(&name, &args, inst.result_type.clone(), code)
            }
        }
    }

    /// `*ptr` with `*&x` folded to `x` for allocas and globals.
    pub fn deref(&mut self, ptr: &IrOperand, value_ty: &TypeRef, code: &str) -> NodeId {
        match &ptr.kind {
            OperandKind::Local(n) if self.allocas.contains(n) => self.reference(n, value_ty.clone(), &ptr.text, false),
            OperandKind::Global(n) if !self.is_function(n) => self.reference(n, value_ty.clone(), &ptr.text, true),
            _ => {
                let p = self.operand(ptr);
                self.unary("*", p, value_ty.clone(), code)
            }
        }
    }

    /// Member/subscript chain for an extractvalue/insertvalue index path.
    pub fn member_path(&mut self, base: NodeId, agg_ty: &TypeRef, path: &[u64], code: &str) -> NodeId {
        let defs = self.g.type_defs.clone();
        let mut cur = base;
        let mut ty = agg_ty.clone();
        for &ix in path {
            match resolve_named(&ty, &defs).clone() {
                TypeRef::Struct { fields, .. } => {
                    if ix as usize >= fields.len() {
                        let p = self.problem(&format!("index {ix} is past the struct's {} fields", fields.len()), code);
                        self.g.add_child(p, cur);
                        return p;
                    }
                    cur = self.member(cur, &ty, ix, code).expect("index checked");
                    ty = fields[ix as usize].clone();
                }
                TypeRef::Array(_, elem) | TypeRef::Vector { elem, .. } => {
                    let i = self.int_literal(ix as i128, TypeRef::Int(32));
                    cur = self.subscript(cur, i, (*elem).clone(), code);
                    ty = *elem;
                }
                _ => {
                    let p = self.problem("index into a non-aggregate value", code);
                    self.g.add_child(p, cur);
                    return p;
                }
            }
        }
        cur
    }

    /// `&base[i0].field..[..]` for getelementptr; touches no memory.
    pub fn address_of(&mut self, src: &TypeRef, base: &IrOperand, indices: &[IrOperand], result_ty: &TypeRef, code: &str) -> NodeId {
        let vector = matches!(base.ty, TypeRef::Vector { .. }) || indices.iter().any(|i| matches!(i.ty, TypeRef::Vector { .. }));
        if vector || indices.is_empty() {
            let mut args = vec![self.operand(base)];
            args.extend(indices.iter().map(|i| self.operand(i)));
            if !vector {
                // No indices: the address is the base pointer itself.
                let b = args.pop().expect("base");
                return b;
            }
            return self.call("llvm.getelementptr", &args, result_ty.clone(), code);
        }
        let defs = self.g.type_defs.clone();
        let direct = match &base.kind {
            OperandKind::Local(n) => self.allocas.contains(n),
            OperandKind::Global(n) => !self.is_function(n),
            _ => false,
        };
        let mut cur = if direct && indices[0].as_int() == Some(0) {
            let (name, global) = match &base.kind {
                OperandKind::Local(n) => (n.clone(), false),
                OperandKind::Global(n) => (n.clone(), true),
                _ => unreachable!(),
            };
            self.reference(&name, src.clone(), &base.text, global)
        } else {
            let b = self.operand(base);
            let i = self.operand(&indices[0]);
            self.subscript(b, i, src.clone(), code)
        };
        let mut ty = src.clone();
        for ix in &indices[1..] {
            match resolve_named(&ty, &defs).clone() {
                TypeRef::Struct { fields, .. } => {
                    let k = ix.as_int().filter(|k| *k >= 0 && (*k as usize) < fields.len());
                    let Some(k) = k else {
                        let p = self.problem("struct index is not a constant within the struct's fields", code);
                        self.g.add_child(p, cur);
                        return p;
                    };
                    cur = self.member(cur, &ty, k as u64, code).expect("index checked");
                    ty = fields[k as usize].clone();
                }
                TypeRef::Array(_, elem) | TypeRef::Vector { elem, .. } => {
                    let i = self.operand(ix);
                    cur = self.subscript(cur, i, (*elem).clone(), code);
                    ty = *elem;
                }
                _ => {
                    let p = self.problem("getelementptr indexes into a non-aggregate type", code);
                    self.g.add_child(p, cur);
                    return p;
                }
            }
        }
        self.unary("&", cur, result_ty.clone(), code)
    }

    /// Integer comparison; signed and unsigned predicates cast both operands.
    pub fn icmp(&mut self, pred: &str, a: NodeId, b: NodeId, operand_ty: &TypeRef, code: &str) -> NodeId {
        let (sym, sign) = match pred {
            "eq" => ("==", None),
            "ne" => ("!=", None),
            "ugt" => (">", Some("unsigned")),
            "uge" => (">=", Some("unsigned")),
            "ult" => ("<", Some("unsigned")),
            "ule" => ("<=", Some("unsigned")),
            "sgt" => (">", Some("signed")),
            "sge" => (">=", Some("signed")),
            "slt" => ("<", Some("signed")),
            "sle" => ("<=", Some("signed")),
            _ => ("==", None),
        };
        let (a, b) = match sign {
            Some(s) => (
                self.cast(a, operand_ty.clone(), "reinterpret", Some(s), code),
                self.cast(b, operand_ty.clone(), "reinterpret", Some(s), code),
            ),
            None => (a, b),
        };
        self.binary(sym, a, b, TypeRef::i1(), code)
    }

    /// fcmp expansion: ordered predicates are `!isunordered(a, b) && a OP b`,
    /// unordered ones `isunordered(a, b) || a OP b`.
    pub fn fcmp(&mut self, pred: &str, a: &IrOperand, b: &IrOperand, code: &str) -> NodeId {
        let bool_ty = TypeRef::i1();
        let unordered = |e: &mut Self| {
            let x = e.operand(a);
            let y = e.operand(b);
            e.call("isunordered", &[x, y], TypeRef::i1(), code)
        };
        let compare = |e: &mut Self, sym: &str| {
            let x = e.operand(a);
            let y = e.operand(b);
            e.binary(sym, x, y, TypeRef::i1(), code)
        };
        let sym = match &pred[pred.len().min(1)..] {
            "eq" => "==",
            "gt" => ">",
            "ge" => ">=",
            "lt" => "<",
            "le" => "<=",
            "ne" => "!=",
            _ => "",
        };
        match pred {
            "false" => self.literal(PropValue::Int(0), bool_ty, code),
            "true" => self.literal(PropValue::Int(1), bool_ty, code),
            "ord" => {
                let u = unordered(self);
                self.unary("!", u, bool_ty, code)
            }
            "uno" => unordered(self),
            p if p.starts_with('o') && !sym.is_empty() => {
                let u = unordered(self);
                let not_u = self.unary("!", u, bool_ty.clone(), code);
                let c = compare(self, sym);
                self.binary("&&", not_u, c, bool_ty, code)
            }
            p if p.starts_with('u') && !sym.is_empty() => {
                let u = unordered(self);
                let c = compare(self, sym);
                self.binary("||", u, c, bool_ty, code)
            }
            _ => {
                let x = self.operand(a);
                let y = self.operand(b);
                let p = self.problem(&format!("unknown fcmp predicate `{pred}`"), code);
                self.g.add_child(p, x);
                self.g.add_child(p, y);
                p
            }
        }
    }
}

/// Operator symbol and the interpretation both operands are cast to, if any.
pub fn binary_operator(op: Opcode) -> (&'static str, Option<&'static str>) {
    match op {
        Opcode::Add | Opcode::FAdd => ("+", None),
        Opcode::Sub | Opcode::FSub => ("-", None),
        Opcode::Mul | Opcode::FMul => ("*", None),
        Opcode::UDiv => ("/", Some("unsigned")),
        Opcode::SDiv => ("/", Some("signed")),
        Opcode::FDiv => ("/", None),
        Opcode::URem => ("%", Some("unsigned")),
        Opcode::SRem => ("%", Some("signed")),
        Opcode::FRem => ("%", None),
        Opcode::Shl => ("<<", None),
        Opcode::LShr => (">>", Some("unsigned")),
        Opcode::AShr => (">>", Some("signed")),
        Opcode::And => ("&", None),
        Opcode::Or => ("|", None),
        Opcode::Xor => ("^", None),
        _ => ("?", None),
    }
}

/// `castKind` property value and signedness of a cast opcode.
pub fn cast_kind(op: Opcode) -> (&'static str, Option<&'static str>) {
    let sign = match op {
        Opcode::ZExt | Opcode::UIToFP | Opcode::FPToUI => Some("unsigned"),
        Opcode::SExt | Opcode::SIToFP | Opcode::FPToSI => Some("signed"),
        _ => None,
    };
    (op.mnemonic(), sign)
}
