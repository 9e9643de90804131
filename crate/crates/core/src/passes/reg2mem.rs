//! Baseline: demote registers to stack slots the way LLVM's reg2mem does,
//! so the translated result can be compared against φ-elimination.
//!
//! Every φ and every value used outside its defining block gets an `alloca`
//! in the entry block, a store after its definition (or, for φs, in each
//! predecessor) and a load before each use in another block.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ir::{Detail, IrBasicBlock, IrFunction, IrInstruction, IrModule, IrOperand, Location, Opcode, OperandKind, TypeRef};

pub fn reg2mem(module: &IrModule) -> IrModule {
    let mut out = module.clone();
    for f in out.functions.iter_mut().filter(|f| !f.is_declaration && !f.blocks.is_empty()) {
        demote_function(f);
    }
    out
}

fn demote_function(f: &mut IrFunction) {
    let mut def_block: HashMap<String, usize> = HashMap::new();
    let mut def_type: HashMap<String, TypeRef> = HashMap::new();
    let mut phis: BTreeSet<String> = BTreeSet::new();
    let mut skip: BTreeSet<String> = BTreeSet::new();
    for (b, block) in f.blocks.iter().enumerate() {
        for i in &block.instructions {
            let Some(r) = &i.result_name else { continue };
            def_block.insert(r.clone(), b);
            def_type.insert(r.clone(), i.result_type.clone());
            match i.opcode {
                Opcode::Phi => {
                    phis.insert(r.clone());
                }
                // Slots themselves, and values defined by terminators (invoke, callbr)
                // or tokens, are left alone as LLVM does.
                Opcode::Alloca => {
                    skip.insert(r.clone());
                }
                op if op.is_terminator() || i.result_type == TypeRef::Token => {
                    skip.insert(r.clone());
                }
                _ => {}
            }
        }
    }
    let index: HashMap<&str, usize> = f.blocks.iter().enumerate().map(|(i, b)| (b.label.as_str(), i)).collect();
    // Values used outside their block. A φ operand counts as used in its predecessor.
    let mut escaping: BTreeSet<String> = BTreeSet::new();
    for (b, block) in f.blocks.iter().enumerate() {
        for i in &block.instructions {
            let mut uses: Vec<(&str, usize)> = Vec::new();
            if let Detail::Phi(incoming) = &i.detail {
                for (v, pred) in incoming {
                    if let (Some(n), Some(&p)) = (v.as_local(), index.get(pred.as_str())) {
                        uses.push((n, p));
                    }
                }
            } else {
                for n in used_locals(i) {
                    uses.push((n, b));
                }
            }
            for (n, at) in uses {
                if def_block.get(n).is_some_and(|&d| d != at) && !skip.contains(n) && !phis.contains(n) {
                    escaping.insert(n.to_string());
                }
            }
        }
    }
    // φ results used elsewhere are escaping values too, stored right after their load.
    for (b, block) in f.blocks.iter().enumerate() {
        for i in block.instructions.iter().filter(|i| i.opcode != Opcode::Phi) {
            for n in used_locals(i) {
                if phis.contains(n) && def_block.get(n) != Some(&b) {
                    escaping.insert(n.to_string());
                }
            }
        }
        for i in &block.instructions {
            if let Detail::Phi(incoming) = &i.detail {
                for (v, pred) in incoming {
                    if let Some(n) = v.as_local() {
                        if phis.contains(n) && def_block.get(n) != index.get(pred.as_str()) {
                            escaping.insert(n.to_string());
                        }
                    }
                }
            }
        }
    }
    if phis.is_empty() && escaping.is_empty() {
        return;
    }

    let loc = f.location;
    let mut reload = 0usize;
    let mut fresh = |base: &str| {
        reload += 1;
        format!("{base}.reload{reload}")
    };
    // φ stores per predecessor: label -> [(slot, value, type)]
    let mut phi_stores: BTreeMap<usize, Vec<(String, IrOperand)>> = BTreeMap::new();
    for block in &f.blocks {
        for i in &block.instructions {
            if let (Detail::Phi(incoming), Some(r)) = (&i.detail, &i.result_name) {
                for (v, pred) in incoming {
                    if let Some(&p) = index.get(pred.as_str()) {
                        phi_stores.entry(p).or_default().push((phi_slot(r), v.clone()));
                    }
                }
            }
        }
    }
    let mut new_blocks = Vec::with_capacity(f.blocks.len());
    for (b, block) in f.blocks.iter().enumerate() {
        let mut out: Vec<IrInstruction> = Vec::new();
        if b == 0 {
            for p in &phis {
                out.push(alloca(&phi_slot(p), &def_type[p], loc));
            }
            for v in &escaping {
                out.push(alloca(&value_slot(v), &def_type[v], loc));
            }
        }
        for inst in &block.instructions {
            if inst.opcode == Opcode::Phi {
                let r = inst.result_name.clone().unwrap_or_default();
                let ty = inst.result_type.clone();
                out.push(load(&r, &ty, &phi_slot(&r), inst.location));
                if escaping.contains(&r) {
                    out.push(store(IrOperand::local(&r, ty.clone()), &value_slot(&r), inst.location));
                }
                continue;
            }
            let mut inst = inst.clone();
            if inst.opcode.is_terminator() {
                for (slot, v) in phi_stores.get(&b).cloned().unwrap_or_default() {
                    let v = reload_operand(&v, b, &def_block, &escaping, &mut out, &mut fresh, inst.location);
                    out.push(store(v, &slot, inst.location));
                }
            }
            let mut ops = std::mem::take(&mut inst.operands);
            for op in ops.iter_mut() {
                *op = reload_operand(op, b, &def_block, &escaping, &mut out, &mut fresh, inst.location);
            }
            inst.operands = ops;
            let defined = inst.result_name.clone();
            let ty = inst.result_type.clone();
            out.push(inst);
            if let Some(r) = defined.filter(|r| escaping.contains(r) && !phis.contains(r)) {
                out.push(store(IrOperand::local(&r, ty), &value_slot(&r), loc));
            }
        }
        new_blocks.push(IrBasicBlock {
            label: block.label.clone(),
            instructions: out,
        });
    }
    f.blocks = new_blocks;
}

fn phi_slot(name: &str) -> String {
    format!("{name}.reg2mem")
}

fn value_slot(name: &str) -> String {
    format!("{name}.reg2mem.value")
}

fn used_locals(i: &IrInstruction) -> Vec<&str> {
    i.operands.iter().filter_map(|o| o.as_local()).collect()
}

#[allow(clippy::too_many_arguments)]
fn reload_operand(
    op: &IrOperand,
    block: usize,
    def_block: &HashMap<String, usize>,
    escaping: &BTreeSet<String>,
    out: &mut Vec<IrInstruction>,
    fresh: &mut impl FnMut(&str) -> String,
    at: Location,
) -> IrOperand {
    match &op.kind {
        OperandKind::Local(n) if escaping.contains(n) && def_block.get(n) != Some(&block) => {
            let r = fresh(n);
            out.push(load(&r, &op.ty, &value_slot(n), at));
            IrOperand::local(&r, op.ty.clone())
        }
        _ => op.clone(),
    }
}

fn synthetic(opcode: Opcode, result: Option<String>, result_type: TypeRef, operands: Vec<IrOperand>, type_args: Vec<TypeRef>, text: String, at: Location) -> IrInstruction {
    IrInstruction {
        opcode,
        mnemonic: opcode.mnemonic().to_string(),
        result_name: result,
        result_type,
        operands,
        type_args,
        flags: BTreeSet::new(),
        detail: Detail::None,
        raw_text: text,
        location: at,
        problem: None,
    }
}

fn alloca(slot: &str, ty: &TypeRef, at: Location) -> IrInstruction {
    synthetic(
        Opcode::Alloca,
        Some(slot.to_string()),
        TypeRef::ptr_to(ty.clone()),
        Vec::new(),
        vec![ty.clone()],
        format!("%{slot} = alloca {ty}"),
        at,
    )
}

fn load(result: &str, ty: &TypeRef, slot: &str, at: Location) -> IrInstruction {
    let ptr = IrOperand::local(slot, TypeRef::ptr_to(ty.clone()));
    synthetic(
        Opcode::Load,
        Some(result.to_string()),
        ty.clone(),
        vec![ptr],
        vec![ty.clone()],
        format!("%{result} = load {ty}, {ty}* %{slot}"),
        at,
    )
}

fn store(value: IrOperand, slot: &str, at: Location) -> IrInstruction {
    let ty = value.ty.clone();
    let ptr = IrOperand::local(slot, TypeRef::ptr_to(ty.clone()));
    let text = format!("store {ty} {}, {ty}* %{slot}", value.text);
    synthetic(Opcode::Store, None, TypeRef::Void, vec![value, ptr], Vec::new(), text, at)
}
