//! Translation of the IR AST into CPG nodes.
//!
//! Each basic block becomes a `LabelStatement` holding a `CompoundStatement`;
//! the function body is the sequence of those labels. φ-instructions produce
//! no nodes here and are recorded for the elimination pass.

mod emit;

use std::collections::{BTreeSet, HashSet};

pub use emit::{binary_operator, cast_kind, Emitter};

use crate::cpg::{CpgGraph, FunctionInfo, NewNode, NodeId, NodeKind, PhiRecord, PropValue};
use crate::ir::parser::resolve_named;
use crate::ir::{Callee, Detail, IrFunction, IrInstruction, IrModule, IrOperand, Opcode, OperandKind, TypeRef};

/// Maps a parsed module into a fresh graph. φ-instructions are left in
/// `graph.phi_records`; no passes run.
pub fn map_module(module: &IrModule) -> CpgGraph {
    let mut g = CpgGraph::new();
    g.type_defs = module.type_defs.clone();
    let tu = g.add(
        NewNode::new(NodeKind::TranslationUnit)
            .name(module.source_name.clone())
            .code(module.source_name.clone()),
    );
    for (name, ty) in &module.type_defs {
        if let TypeRef::Struct { fields, .. } = ty {
            g.declare_record(name, TypeRef::Named(name.clone()), fields);
        }
    }
    // Function names must be known before any body is mapped.
    let names: HashSet<String> = module.functions.iter().map(|f| f.name.clone()).collect();
    {
        let mut e = Emitter {
            g: &mut g,
            allocas: BTreeSet::new(),
            functions: names.clone(),
            loc: None,
        };
        for global in &module.globals {
            e.loc = Some(global.location);
            let init = global.initializer.as_ref().map(|op| e.operand(op));
            let d = e.declaration(&global.name, global.ty.clone(), init, &global.raw_text);
            if let Some(n) = e.g.node_mut(d) {
                n.properties.insert("scope".into(), "global".into());
                n.properties.insert("constant".into(), global.is_constant.into());
            }
            e.g.add_child(tu, d);
        }
    }
    for f in &module.functions {
        let fid = map_function(&mut g, f, &names);
        g.add_child(tu, fid);
    }
    g
}

fn map_function(g: &mut CpgGraph, f: &IrFunction, functions: &HashSet<String>) -> NodeId {
    let fn_ty = TypeRef::Function {
        ret: Box::new(f.return_type.clone()),
        params: f.params.iter().map(|(_, t)| t.clone()).collect(),
        varargs: f.varargs,
    };
    let code = if f.header_text.is_empty() { format!("@{}", f.name) } else { f.header_text.clone() };
    let fid = g.add(
        NewNode::new(NodeKind::FunctionDeclaration)
            .name(f.name.clone())
            .code(code)
            .ty(fn_ty)
            .prop("declaration", f.is_declaration)
            .prop("varargs", f.varargs)
            .at(Some(f.location)),
    );
    let allocas: BTreeSet<String> = f
        .instructions()
        .filter(|i| i.opcode == Opcode::Alloca)
        .filter_map(|i| i.result_name.clone())
        .collect();
    let mut info = FunctionInfo {
        name: f.name.clone(),
        body: None,
        blocks: Vec::new(),
        allocas: allocas.clone(),
        is_definition: !f.is_declaration,
    };
    let mut e = Emitter {
        g,
        allocas,
        functions: functions.clone(),
        loc: Some(f.location),
    };
    for (name, ty) in &f.params {
        let p = e.g.add(
            NewNode::new(NodeKind::ParameterDeclaration)
                .name(name.clone())
                .code(format!("{ty} %{name}"))
                .ty(ty.clone())
                .at(Some(f.location)),
        );
        e.link_type(p, ty);
        e.g.add_child(fid, p);
    }
    if !f.is_declaration {
        let body = e.compound(&[], &format!("@{}", f.name));
        e.g.add_child(fid, body);
        info.body = Some(body);
        let mut m = FunctionMapper {
            e,
            func: f,
            fid,
            phis: Vec::new(),
        };
        for block in &f.blocks {
            m.e.loc = block.instructions.first().map(|i| i.location);
            let code = format!("{}:", block.label);
            let compound = m.e.compound(&[], &code);
            let label = m.e.with_children(
                NewNode::new(NodeKind::LabelStatement).name(block.label.clone()).code(code).at(m.e.loc),
                &[compound],
            );
            m.e.g.add_child(body, label);
            info.blocks.push((block.label.clone(), label, compound));
            for inst in &block.instructions {
                m.e.loc = Some(inst.location);
                for stmt in m.instruction(inst, &block.label) {
                    m.e.g.add_child(compound, stmt);
                }
            }
        }
        let phis = std::mem::take(&mut m.phis);
        m.e.g.phi_records.extend(phis);
    }
    g.functions.insert(fid, info);
    fid
}

struct FunctionMapper<'g, 'f> {
    e: Emitter<'g>,
    func: &'f IrFunction,
    fid: NodeId,
    phis: Vec<PhiRecord>,
}

impl FunctionMapper<'_, '_> {
    /// Statements for one instruction, in order. Empty only for φ.
    fn instruction(&mut self, inst: &IrInstruction, block: &str) -> Vec<NodeId> {
        let code = inst.raw_text.as_str();
        let code = if code.is_empty() { inst.mnemonic.as_str() } else { code };
        if let Some(problem) = &inst.problem {
            let p = self.e.problem(problem, code);
            return vec![self.result(inst, Some(p), code)];
        }
        let ops = &inst.operands;
        match inst.opcode {
            Opcode::Phi => {
                if let Detail::Phi(incoming) = &inst.detail {
                    self.phis.push(PhiRecord {
                        target_name: inst.result_name.clone().unwrap_or_default(),
                        target_type: inst.result_type.clone(),
                        incoming: incoming.clone(),
                        owning_function: self.fid,
                        block_label: block.to_string(),
                        code: code.to_string(),
                        location: inst.location,
                    });
                }
                vec![]
            }
            op if op.is_binary() => {
                let (sym, sign) = binary_operator(op);
                let ty = inst.result_type.clone();
                let mut a = self.e.operand(&ops[0]);
                let mut b = self.e.operand(&ops[1]);
                if let Some(s) = sign {
                    a = self.e.cast(a, ty.clone(), "reinterpret", Some(s), code);
                    b = self.e.cast(b, ty.clone(), "reinterpret", Some(s), code);
                }
                let v = self.e.binary(sym, a, b, ty, code);
                vec![self.result(inst, Some(v), code)]
            }
            Opcode::FNeg => {
                let a = self.e.operand(&ops[0]);
                let v = self.e.unary("-", a, inst.result_type.clone(), code);
                vec![self.result(inst, Some(v), code)]
            }
            Opcode::ICmp => {
                let a = self.e.operand(&ops[0]);
                let b = self.e.operand(&ops[1]);
                let v = self.e.icmp(inst.predicate().unwrap_or("eq"), a, b, &ops[0].ty, code);
                vec![self.result(inst, Some(v), code)]
            }
            Opcode::FCmp => {
                let v = self.e.fcmp(inst.predicate().unwrap_or("false"), &ops[0], &ops[1], code);
                vec![self.result(inst, Some(v), code)]
            }
            op if op.is_cast() => {
                let a = self.e.operand(&ops[0]);
                let (kind, sign) = cast_kind(op);
                let v = self.e.cast(a, inst.result_type.clone(), kind, sign, code);
                vec![self.result(inst, Some(v), code)]
            }
            Opcode::Select => {
                let c = self.e.operand(&ops[0]);
                let t = self.e.operand(&ops[1]);
                let f = self.e.operand(&ops[2]);
                let v = self.e.with_children(
                    NewNode::new(NodeKind::ConditionalExpression).code(code).ty(inst.result_type.clone()).at(self.e.loc),
                    &[c, t, f],
                );
                vec![self.result(inst, Some(v), code)]
            }
            Opcode::Alloca => {
                let ty = inst.type_args.first().cloned().unwrap_or(TypeRef::Opaque);
                let name = inst.result_name.clone().unwrap_or_default();
                let d = self.e.declaration(&name, ty, None, code);
                self.set(d, "alloca", true.into());
                vec![d]
            }
            Opcode::Load => {
                let v = self.e.deref(&ops[0], &inst.result_type, code);
                let d = self.result(inst, Some(v), code);
                self.ordering(inst, d);
                vec![d]
            }
            Opcode::Store => {
                let lhs = self.e.deref(&ops[1], &ops[0].ty, code);
                let rhs = self.e.operand(&ops[0]);
                let s = self.e.assign(lhs, rhs, code);
                self.ordering(inst, s);
                vec![s]
            }
            Opcode::Fence => {
                let c = self.e.call("llvm.fence", &[], TypeRef::Void, code);
                self.ordering(inst, c);
                vec![c]
            }
            Opcode::GetElementPtr => {
                let src = inst.type_args.first().cloned().unwrap_or(TypeRef::Opaque);
                let v = self.e.address_of(&src, &ops[0], &ops[1..], &inst.result_type, code);
                vec![self.result(inst, Some(v), code)]
            }
            Opcode::ExtractValue => {
                let base = self.e.operand(&ops[0]);
                let v = self.e.member_path(base, &ops[0].ty, inst.indices(), code);
                vec![self.result(inst, Some(v), code)]
            }
            Opcode::InsertValue => {
                let copy = self.e.operand(&ops[0]);
                let d = self.result(inst, Some(copy), code);
                let name = inst.result_name.clone().unwrap_or_default();
                let target = self.e.reference(&name, ops[0].ty.clone(), code, false);
                let lhs = self.e.member_path(target, &ops[0].ty, inst.indices(), code);
                let rhs = self.e.operand(&ops[1]);
                let a = self.e.assign(lhs, rhs, code);
                vec![d, a]
            }
            Opcode::ExtractElement if !is_scalable(&ops[0].ty) => {
                let v = self.e.operand(&ops[0]);
                let i = self.e.operand(&ops[1]);
                let s = self.e.subscript(v, i, inst.result_type.clone(), code);
                vec![self.result(inst, Some(s), code)]
            }
            Opcode::InsertElement if !is_scalable(&ops[0].ty) => {
                let copy = self.e.operand(&ops[0]);
                let d = self.result(inst, Some(copy), code);
                let name = inst.result_name.clone().unwrap_or_default();
                let target = self.e.reference(&name, ops[0].ty.clone(), code, false);
                let i = self.e.operand(&ops[2]);
                let elem = ops[0].ty.element().cloned().unwrap_or(TypeRef::Opaque);
                let lhs = self.e.subscript(target, i, elem, code);
                let rhs = self.e.operand(&ops[1]);
                let a = self.e.assign(lhs, rhs, code);
                vec![d, a]
            }
            Opcode::CmpXchg => vec![self.cmpxchg(inst, code)],
            Opcode::AtomicRmw => vec![self.atomicrmw(inst, code)],
            Opcode::Br => {
                if ops.len() == 1 {
                    vec![self.goto_operand(&ops[0], code)]
                } else {
                    let c = self.e.operand(&ops[0]);
                    let t = self.goto_operand(&ops[1], code);
                    let f = self.goto_operand(&ops[2], code);
                    let s = self.e.with_children(NewNode::new(NodeKind::IfStatement).code(code).at(self.e.loc), &[c, t, f]);
                    vec![s]
                }
            }
            Opcode::Switch => vec![self.switch(inst, code)],
            Opcode::Ret => {
                let children: Vec<NodeId> = ops.first().map(|o| self.e.operand(o)).into_iter().collect();
                vec![self.e.with_children(NewNode::new(NodeKind::ReturnStatement).code(code).at(self.e.loc), &children)]
            }
            Opcode::Call => vec![self.call_statement(inst, code)],
            Opcode::Invoke => {
                let call = self.call_statement(inst, code);
                let (normal, unwind) = match &inst.detail {
                    Detail::Call { normal, unwind, .. } => (normal.clone().unwrap_or_default(), unwind.clone().unwrap_or_default()),
                    _ => (String::new(), String::new()),
                };
                let go_normal = self.e.goto(&normal, code);
                let try_body = self.e.compound(&[call, go_normal], code);
                let go_unwind = self.e.goto(&unwind, code);
                let catch_body = self.e.compound(&[go_unwind], code);
                let clause = self.e.with_children(
                    NewNode::new(NodeKind::CatchClause).code(code).prop("catchAll", true).at(self.e.loc),
                    &[catch_body],
                );
                vec![self.e.with_children(NewNode::new(NodeKind::TryStatement).code(code).at(self.e.loc), &[try_body, clause])]
            }
            Opcode::CallBr => {
                let call = self.call_statement(inst, code);
                let mut out = vec![call];
                if let Detail::Call { normal: Some(n), .. } = &inst.detail {
                    out.push(self.e.goto(n, code));
                }
                out
            }
            Opcode::Resume => {
                let v = self.e.operand(&ops[0]);
                vec![self.e.with_children(NewNode::new(NodeKind::ThrowStatement).code(code).at(self.e.loc), &[v])]
            }
            Opcode::CatchSwitch => vec![self.catchswitch(inst, code)],
            Opcode::CatchRet => {
                let label = inst.successors().into_iter().next().unwrap_or_default();
                vec![self.e.goto(&label, code)]
            }
            Opcode::CleanupRet => {
                let pad = self.e.operand(&ops[0]);
                let c = self.e.call("llvm.cleanupret", &[pad], TypeRef::Void, code);
                let mut out = vec![c];
                if let Some(l) = ops.get(1).and_then(label_of) {
                    out.push(self.e.goto(&l, code));
                }
                out
            }
            Opcode::IndirectBr => {
                let args: Vec<NodeId> = ops.iter().take(1).map(|o| self.e.operand(o)).collect();
                let c = self.e.call("llvm.indirectbr", &args, TypeRef::Void, code);
                let targets: Vec<String> = ops.iter().skip(1).filter_map(label_of).collect();
                self.set(c, "targets", targets.join(",").into());
                vec![c]
            }
            Opcode::Opaque => {
                let p = self.e.problem(&format!("unknown instruction `{}`", inst.mnemonic), code);
                vec![self.result(inst, Some(p), code)]
            }
            _ => {
                // unreachable, landingpad, pads, shufflevector, freeze, va_arg,
                // scalable-vector element access and unknown opcodes.
                let mut args: Vec<NodeId> = ops
                    .iter()
                    .filter(|o| !matches!(o.kind, OperandKind::Label(_)))
                    .map(|o| self.e.operand(o))
                    .collect();
                if let Detail::LandingPad { clauses, .. } = &inst.detail {
                    args.extend(clauses.iter().map(|(_, v)| self.e.operand(v)).collect::<Vec<_>>());
                }
                let c = self.e.call(&format!("llvm.{}", inst.mnemonic), &args, inst.result_type.clone(), code);
                if let Detail::LandingPad { cleanup: true, .. } = &inst.detail {
                    self.set(c, "cleanup", true.into());
                }
                vec![self.result(inst, Some(c), code)]
            }
        }
    }

    fn set(&mut self, id: NodeId, key: &str, value: PropValue) {
        if let Some(n) = self.e.g.node_mut(id) {
            n.properties.insert(key.to_string(), value);
        }
    }

    fn ordering(&mut self, inst: &IrInstruction, id: NodeId) {
        for f in &inst.flags {
            if let Some((k, v)) = f.split_once('=') {
                self.set(id, k, v.into());
            } else if f == "atomic" || f == "volatile" {
                self.set(id, f, true.into());
            }
        }
    }

    /// `T name = value;` when the instruction has a result, else the bare expression.
    fn result(&mut self, inst: &IrInstruction, value: Option<NodeId>, code: &str) -> NodeId {
        match (&inst.result_name, value) {
            (Some(name), v) => {
                let ty = if inst.result_type == TypeRef::Opaque {
                    v.and_then(|v| self.e.g.node(v)).map(|n| n.ty.clone()).unwrap_or(TypeRef::Opaque)
                } else {
                    inst.result_type.clone()
                };
                self.e.declaration(name, ty, v, code)
            }
            (None, Some(v)) => v,
            (None, None) => self.e.problem("instruction produced no node", code),
        }
    }

    fn goto_operand(&mut self, op: &IrOperand, code: &str) -> NodeId {
        match label_of(op) {
            Some(l) => self.e.goto(&l, code),
            None => self.e.problem("branch target is not a label", code),
        }
    }

    fn switch(&mut self, inst: &IrInstruction, code: &str) -> NodeId {
        let sel = self.e.operand(&inst.operands[0]);
        let mut children = vec![sel];
        if let Detail::Switch { default, cases } = &inst.detail {
            for (v, l) in cases {
                let lit = self.e.operand(v);
                let g = self.e.goto(l, code);
                children.push(self.e.with_children(NewNode::new(NodeKind::CaseStatement).code(code).at(self.e.loc), &[lit, g]));
            }
            let g = self.e.goto(default, code);
            children.push(self.e.with_children(
                NewNode::new(NodeKind::CaseStatement).code(code).prop("default", true).at(self.e.loc),
                &[g],
            ));
        }
        self.e.with_children(NewNode::new(NodeKind::SwitchStatement).code(code).at(self.e.loc), &children)
    }

    fn call_statement(&mut self, inst: &IrInstruction, code: &str) -> NodeId {
        let (name, indirect, asm) = match &inst.detail {
            Detail::Call { callee, .. } => match callee {
                Callee::Global(n) => (n.clone(), false, None),
                Callee::Local(n) => (n.clone(), true, None),
                Callee::InlineAsm(text) => ("asm".to_string(), false, Some(text.clone())),
                Callee::Operand(op) => (op.text.clone(), true, None),
            },
            _ => ("unknown".to_string(), true, None),
        };
        let mut args = Vec::new();
        for op in &inst.operands {
            let a = if op.ty == TypeRef::Metadata {
                let l = self.e.literal(PropValue::Str(op.text.clone()), TypeRef::Metadata, &op.text);
                self.set(l, "metadata", true.into());
                l
            } else {
                self.e.operand(op)
            };
            args.push(a);
        }
        let c = self.e.call(&name, &args, inst.result_type.clone(), code);
        if indirect {
            self.set(c, "indirect", true.into());
        }
        if let Some(a) = asm {
            self.set(c, "asm", a.into());
        }
        if inst.result_type == TypeRef::Void || inst.result_name.is_none() {
            c
        } else {
            self.result(inst, Some(c), code)
        }
    }

    /// `{ old = *ptr; if (old == cmp) { *ptr = new; } T r = {old, old == cmp}; }`
    fn cmpxchg(&mut self, inst: &IrInstruction, code: &str) -> NodeId {
        let ops = &inst.operands;
        let (ptr, cmp, new) = (&ops[0], &ops[1], &ops[2]);
        let name = inst.result_name.clone().unwrap_or_else(|| format!("cmpxchg.{}", inst.location.line));
        let old = format!("{name}.old");
        let vt = cmp.ty.clone();
        let load = self.e.deref(ptr, &vt, code);
        let old_decl = self.e.declaration(&old, vt.clone(), Some(load), code);
        let r1 = self.e.reference(&old, vt.clone(), code, false);
        let c1 = self.e.operand(cmp);
        let cond = self.e.binary("==", r1, c1, TypeRef::i1(), code);
        let lhs = self.e.deref(ptr, &vt, code);
        let rhs = self.e.operand(new);
        let store = self.e.assign(lhs, rhs, code);
        let then = self.e.compound(&[store], code);
        let iff = self.e.with_children(NewNode::new(NodeKind::IfStatement).code(code).at(self.e.loc), &[cond, then]);
        let fields = vec![vt.clone(), TypeRef::i1()];
        let rec = self.e.g.intern_literal_struct(&fields);
        let rec_name = self.e.g.node(rec).and_then(|n| n.name.clone()).unwrap_or_default();
        let r2 = self.e.reference(&old, vt.clone(), code, false);
        let r3 = self.e.reference(&old, vt.clone(), code, false);
        let c2 = self.e.operand(cmp);
        let ok = self.e.binary("==", r3, c2, TypeRef::i1(), code);
        let ctor = self.e.call(&rec_name, &[r2, ok], inst.result_type.clone(), code);
        self.set(ctor, "aggregate", true.into());
        let result = self.e.declaration(&name, inst.result_type.clone(), Some(ctor), code);
        let block = self.e.compound(&[old_decl, iff, result], code);
        self.set(block, "atomic", true.into());
        self.ordering(inst, block);
        block
    }

    /// `{ T r = *ptr; <update>; }`
    fn atomicrmw(&mut self, inst: &IrInstruction, code: &str) -> NodeId {
        let ops = &inst.operands;
        let (ptr, val) = (&ops[0], &ops[1]);
        let op = match &inst.detail {
            Detail::AtomicRmw(o) => o.clone(),
            _ => String::new(),
        };
        let name = inst.result_name.clone().unwrap_or_else(|| format!("atomicrmw.{}", inst.location.line));
        let vt = val.ty.clone();
        let load = self.e.deref(ptr, &vt, code);
        let decl = self.e.declaration(&name, vt.clone(), Some(load), code);
        let arith = match op.as_str() {
            "add" | "fadd" => Some("+"),
            "sub" | "fsub" => Some("-"),
            "and" => Some("&"),
            "or" => Some("|"),
            "xor" => Some("^"),
            _ => None,
        };
        let update = if op == "xchg" {
            let lhs = self.e.deref(ptr, &vt, code);
            let rhs = self.e.operand(val);
            self.e.assign(lhs, rhs, code)
        } else if let Some(sym) = arith {
            let lhs = self.e.deref(ptr, &vt, code);
            let r = self.e.reference(&name, vt.clone(), code, false);
            let v = self.e.operand(val);
            let rhs = self.e.binary(sym, r, v, vt.clone(), code);
            self.e.assign(lhs, rhs, code)
        } else if op == "nand" {
            let lhs = self.e.deref(ptr, &vt, code);
            let r = self.e.reference(&name, vt.clone(), code, false);
            let v = self.e.operand(val);
            let and = self.e.binary("&", r, v, vt.clone(), code);
            let rhs = self.e.unary("~", and, vt.clone(), code);
            self.e.assign(lhs, rhs, code)
        } else if let Some((sym, sign)) = match op.as_str() {
            "max" => Some((">", Some("signed"))),
            "min" => Some(("<", Some("signed"))),
            "umax" => Some((">", Some("unsigned"))),
            "umin" => Some(("<", Some("unsigned"))),
            "fmax" => Some((">", None)),
            "fmin" => Some(("<", None)),
            _ => None,
        } {
            let mut v = self.e.operand(val);
            let mut r = self.e.reference(&name, vt.clone(), code, false);
            if let Some(s) = sign {
                v = self.e.cast(v, vt.clone(), "reinterpret", Some(s), code);
                r = self.e.cast(r, vt.clone(), "reinterpret", Some(s), code);
            }
            let cond = self.e.binary(sym, v, r, TypeRef::i1(), code);
            let lhs = self.e.deref(ptr, &vt, code);
            let rhs = self.e.operand(val);
            let store = self.e.assign(lhs, rhs, code);
            let then = self.e.compound(&[store], code);
            self.e.with_children(NewNode::new(NodeKind::IfStatement).code(code).at(self.e.loc), &[cond, then])
        } else {
            let p = self.e.operand(ptr);
            let v = self.e.operand(val);
            self.e.call(&format!("llvm.atomicrmw.{op}"), &[p, v], vt.clone(), code)
        };
        let block = self.e.compound(&[decl, update], code);
        self.set(block, "atomic", true.into());
        self.set(block, "operation", op.into());
        self.ordering(inst, block);
        block
    }

    /// One catch-all clause testing each handler's catchpad signature in turn.
    fn catchswitch(&mut self, inst: &IrInstruction, code: &str) -> NodeId {
        let name = inst.result_name.clone().unwrap_or_else(|| format!("catchswitch.{}", inst.location.line));
        let (handlers, unwind) = match &inst.detail {
            Detail::CatchSwitch { handlers, unwind } => (handlers.clone(), unwind.clone()),
            _ => (Vec::new(), None),
        };
        let param = self.e.declaration(&name, TypeRef::Token, None, code);
        self.set(param, "exception", true.into());
        // The final else: rethrow, or continue at the unwind destination.
        let mut else_branch = match &unwind {
            Some(l) => {
                let g = self.e.goto(l, code);
                self.e.compound(&[g], code)
            }
            None => {
                let r = self.e.reference(&name, TypeRef::Token, code, false);
                let ex = self.e.call("llvm.catchswitch.exception", &[r], TypeRef::Token, code);
                let t = self.e.with_children(
                    NewNode::new(NodeKind::ThrowStatement).code(code).prop("rethrow", true).at(self.e.loc),
                    &[ex],
                );
                self.e.compound(&[t], code)
            }
        };
        for h in handlers.iter().rev() {
            let pad = self
                .func
                .block(h)
                .and_then(|b| b.instructions.iter().find(|i| i.opcode == Opcode::CatchPad))
                .cloned();
            let cond = match pad {
                Some(pad) => {
                    let mut args = vec![self.e.reference(&name, TypeRef::Token, code, false)];
                    for a in &pad.operands {
                        args.push(self.e.operand(a));
                    }
                    self.e.call("llvm.catchpad.matches", &args, TypeRef::i1(), &pad.raw_text)
                }
                None => self.e.problem(&format!("catchswitch handler {h} has no catchpad"), code),
            };
            let g = self.e.goto(h, code);
            let then = self.e.compound(&[g], code);
            let iff = self.e.with_children(NewNode::new(NodeKind::IfStatement).code(code).at(self.e.loc), &[cond, then, else_branch]);
            else_branch = iff;
        }
        let body = if self.e.g.kind(else_branch) == Some(NodeKind::CompoundStatement) {
            else_branch
        } else {
            self.e.compound(&[else_branch], code)
        };
        let clause = self.e.with_children(
            NewNode::new(NodeKind::CatchClause).name(name).code(code).prop("catchAll", true).at(self.e.loc),
            &[param, body],
        );
        self.set(clause, "catchswitch", true.into());
        clause
    }
}

fn label_of(op: &IrOperand) -> Option<String> {
    match &op.kind {
        OperandKind::Label(l) => Some(l.clone()),
        _ => None,
    }
}

fn is_scalable(ty: &TypeRef) -> bool {
    matches!(ty, TypeRef::Vector { scalable: true, .. })
}

/// Resolves named struct types through the graph's type table.
pub fn resolve<'t>(g: &'t CpgGraph, ty: &'t TypeRef) -> &'t TypeRef {
    resolve_named(ty, &g.type_defs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpg::NodeKind;
    use crate::export::render_subtree;
    use crate::ir::parse_module;

    fn mapped(src: &str) -> CpgGraph {
        map_module(&parse_module(src, "t.ll").unwrap().0)
    }

    fn body(g: &CpgGraph, name: &str) -> String {
        let f = g.nodes_of_kind(NodeKind::FunctionDeclaration).find(|n| n.name.as_deref() == Some(name)).unwrap();
        render_subtree(g, f.id)
    }

    #[test]
    fn memory_through_locals_becomes_plain_variables() {
        let g = mapped(
            "@g = global i32 0\ndefine i32 @f(i32 %a) {\nentry:\n  %x = alloca i32\n  store i32 %a, ptr %x\n  \
             %l = load i32, ptr %x\n  %v = load i32, ptr @g\n  %s = add i32 %l, %v\n  ret i32 %s\n}\n",
        );
        let text = body(&g, "f");
        assert!(text.contains("VariableDeclaration x\n        BinaryOperator [=]\n          DeclaredReferenceExpression x\n          DeclaredReferenceExpression a\n"), "{text}");
        assert!(text.contains("VariableDeclaration l\n          DeclaredReferenceExpression x\n"), "{text}");
        assert!(text.contains("VariableDeclaration v\n          DeclaredReferenceExpression g\n"), "{text}");
        assert!(!text.contains("UnaryOperator"), "{text}");
    }

    #[test]
    fn unsigned_operations_cast_their_operands() {
        let g = mapped("define i1 @f(i32 %a, i32 %b) {\nentry:\n  %d = udiv i32 %a, %b\n  %c = icmp ult i32 %d, 3\n  ret i1 %c\n}\n");
        let casts: Vec<_> = g.nodes_of_kind(NodeKind::CastExpression).collect();
        assert_eq!(casts.len(), 4);
        assert!(casts.iter().all(|c| c.prop("signedness").map(|s| s.to_string()).as_deref() == Some("unsigned")));
        let ops: Vec<_> = g.nodes_of_kind(NodeKind::BinaryOperator).filter_map(|n| n.operator().map(str::to_string)).collect();
        assert_eq!(ops, ["/", "<"]);
    }

    #[test]
    fn signed_compare_casts_and_equality_does_not() {
        let g = mapped("define i1 @f(i32 %a) {\nentry:\n  %c = icmp slt i32 %a, 0\n  %e = icmp eq i32 %a, 0\n  %r = and i1 %c, %e\n  ret i1 %r\n}\n");
        let casts: Vec<_> = g.nodes_of_kind(NodeKind::CastExpression).collect();
        assert_eq!(casts.len(), 2);
        assert!(casts.iter().all(|c| c.prop("signedness").map(|s| s.to_string()).as_deref() == Some("signed")));
    }

    #[test]
    fn unknown_opcode_maps_to_problem_node() {
        let g = mapped("define i32 @f(i32 %a) {\nentry:\n  %q = frobnicate i32 %a\n  ret i32 %a\n}\n");
        assert_eq!(g.nodes_of_kind(NodeKind::ProblemNode).count(), 1);
        assert!(body(&g, "f").contains("VariableDeclaration q\n          ProblemNode\n"));
        assert_eq!(g.stats().problem_node_count, 1);
    }

    #[test]
    fn select_becomes_conditional_expression() {
        let g = mapped("define i32 @f(i1 %c, i32 %a, i32 %b) {\nentry:\n  %s = select i1 %c, i32 %a, i32 %b\n  ret i32 %s\n}\n");
        assert!(body(&g, "f").contains(
            "VariableDeclaration s\n          ConditionalExpression\n            DeclaredReferenceExpression c\n            \
             DeclaredReferenceExpression a\n            DeclaredReferenceExpression b\n"
        ));
    }

    #[test]
    fn every_block_is_a_label_around_a_compound() {
        let g = mapped("define void @f() {\nentry:\n  br label %next\nnext:\n  ret void\n}\n");
        let labels: Vec<_> = g.nodes_of_kind(NodeKind::LabelStatement).collect();
        assert_eq!(labels.len(), 2);
        for l in labels {
            let kids = g.children(l.id);
            assert_eq!(kids.len(), 1);
            assert_eq!(g.kind(kids[0]), Some(NodeKind::CompoundStatement));
        }
        assert!(body(&g, "f").contains("GotoStatement next"));
    }

    #[test]
    fn declarations_have_no_body() {
        let g = mapped("declare i32 @puts(ptr)\n");
        let f = g.nodes_of_kind(NodeKind::FunctionDeclaration).next().unwrap();
        assert_eq!(f.prop("declaration").map(|v| v.to_string()).as_deref(), Some("true"));
        assert!(g.children(f.id).iter().all(|&c| g.kind(c) == Some(NodeKind::ParameterDeclaration)));
    }
}
