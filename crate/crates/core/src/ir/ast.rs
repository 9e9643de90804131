//! Source-faithful AST of a textual LLVM-IR module.

use std::collections::BTreeSet;
use std::fmt;

use super::types::TypeRef;

/// 1-based line and column of the first token of a construct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Location {
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IrModule {
    pub source_name: String,
    pub target_triple: Option<String>,
    pub type_defs: Vec<(String, TypeRef)>,
    pub globals: Vec<IrGlobal>,
    pub functions: Vec<IrFunction>,
}

impl IrModule {
    pub fn type_def(&self, name: &str) -> Option<&TypeRef> {
        self.type_defs.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn function(&self, name: &str) -> Option<&IrFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn instruction_count(&self) -> usize {
        self.functions.iter().map(IrFunction::instruction_count).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrGlobal {
    pub name: String,
    pub ty: TypeRef,
    pub is_constant: bool,
    pub initializer: Option<IrOperand>,
    pub raw_text: String,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrFunction {
    pub name: String,
    pub return_type: TypeRef,
    pub params: Vec<(String, TypeRef)>,
    pub varargs: bool,
    pub blocks: Vec<IrBasicBlock>,
    pub is_declaration: bool,
    pub header_text: String,
    pub location: Location,
}

impl IrFunction {
    pub fn block(&self, label: &str) -> Option<&IrBasicBlock> {
        self.blocks.iter().find(|b| b.label == label)
    }

    pub fn instructions(&self) -> impl Iterator<Item = &IrInstruction> {
        self.blocks.iter().flat_map(|b| b.instructions.iter())
    }

    pub fn instruction_count(&self) -> usize {
        self.blocks.iter().map(|b| b.instructions.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrBasicBlock {
    pub label: String,
    pub instructions: Vec<IrInstruction>,
}

impl IrBasicBlock {
    pub fn terminator(&self) -> Option<&IrInstruction> {
        self.instructions.last().filter(|i| i.opcode.is_terminator())
    }
}

macro_rules! opcodes {
    ($($variant:ident => $text:literal),* $(,)?) => {
        /// Instruction opcodes understood by the parser. `Opaque` stands in
        /// for anything else; its mnemonic is kept on the instruction.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Opcode {
            $($variant,)*
            Opaque,
        }

        impl Opcode {
            pub fn from_mnemonic(word: &str) -> Option<Opcode> {
                match word {
                    $($text => Some(Opcode::$variant),)*
                    _ => None,
                }
            }

            pub fn mnemonic(self) -> &'static str {
                match self {
                    $(Opcode::$variant => $text,)*
                    Opcode::Opaque => "opaque",
                }
            }
        }
    };
}

opcodes! {
    Ret => "ret", Br => "br", Switch => "switch", IndirectBr => "indirectbr",
    Invoke => "invoke", CallBr => "callbr", Resume => "resume",
    CatchSwitch => "catchswitch", CatchRet => "catchret", CleanupRet => "cleanupret",
    Unreachable => "unreachable",
    FNeg => "fneg",
    Add => "add", FAdd => "fadd", Sub => "sub", FSub => "fsub", Mul => "mul", FMul => "fmul",
    UDiv => "udiv", SDiv => "sdiv", FDiv => "fdiv", URem => "urem", SRem => "srem", FRem => "frem",
    Shl => "shl", LShr => "lshr", AShr => "ashr", And => "and", Or => "or", Xor => "xor",
    ExtractElement => "extractelement", InsertElement => "insertelement",
    ShuffleVector => "shufflevector",
    ExtractValue => "extractvalue", InsertValue => "insertvalue",
    Alloca => "alloca", Load => "load", Store => "store", Fence => "fence",
    CmpXchg => "cmpxchg", AtomicRmw => "atomicrmw", GetElementPtr => "getelementptr",
    Trunc => "trunc", ZExt => "zext", SExt => "sext", FPTrunc => "fptrunc", FPExt => "fpext",
    FPToUI => "fptoui", FPToSI => "fptosi", UIToFP => "uitofp", SIToFP => "sitofp",
    PtrToInt => "ptrtoint", IntToPtr => "inttoptr", BitCast => "bitcast",
    AddrSpaceCast => "addrspacecast",
    ICmp => "icmp", FCmp => "fcmp", Phi => "phi", Select => "select", Freeze => "freeze",
    Call => "call", VaArg => "va_arg", LandingPad => "landingpad",
    CatchPad => "catchpad", CleanupPad => "cleanuppad",
}

impl Opcode {
    pub fn is_terminator(self) -> bool {
        matches!(
            self,
            Opcode::Ret
                | Opcode::Br
                | Opcode::Switch
                | Opcode::IndirectBr
                | Opcode::Invoke
                | Opcode::CallBr
                | Opcode::Resume
                | Opcode::CatchSwitch
                | Opcode::CatchRet
                | Opcode::CleanupRet
                | Opcode::Unreachable
        )
    }

    pub fn is_binary(self) -> bool {
        matches!(
            self,
            Opcode::Add
                | Opcode::FAdd
                | Opcode::Sub
                | Opcode::FSub
                | Opcode::Mul
                | Opcode::FMul
                | Opcode::UDiv
                | Opcode::SDiv
                | Opcode::FDiv
                | Opcode::URem
                | Opcode::SRem
                | Opcode::FRem
                | Opcode::Shl
                | Opcode::LShr
                | Opcode::AShr
                | Opcode::And
                | Opcode::Or
                | Opcode::Xor
        )
    }

    pub fn is_cast(self) -> bool {
        matches!(
            self,
            Opcode::Trunc
                | Opcode::ZExt
                | Opcode::SExt
                | Opcode::FPTrunc
                | Opcode::FPExt
                | Opcode::FPToUI
                | Opcode::FPToSI
                | Opcode::UIToFP
                | Opcode::SIToFP
                | Opcode::PtrToInt
                | Opcode::IntToPtr
                | Opcode::BitCast
                | Opcode::AddrSpaceCast
        )
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Opcode-specific payload that does not fit the flat operand list.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Detail {
    #[default]
    None,
    /// icmp/fcmp predicate.
    Predicate(String),
    /// Constant index path of extractvalue/insertvalue.
    Indices(Vec<u64>),
    Phi(Vec<(IrOperand, String)>),
    Switch {
        default: String,
        cases: Vec<(IrOperand, String)>,
    },
    Call {
        callee: Callee,
        /// invoke: normal destination.
        normal: Option<String>,
        /// invoke: unwind destination.
        unwind: Option<String>,
        /// callbr: indirect destinations.
        indirect: Vec<String>,
    },
    AtomicRmw(String),
    CatchSwitch {
        handlers: Vec<String>,
        unwind: Option<String>,
    },
    LandingPad {
        cleanup: bool,
        clauses: Vec<(String, IrOperand)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Callee {
    Global(String),
    Local(String),
    InlineAsm(String),
    /// A constant expression or other unusual callee.
    Operand(Box<IrOperand>),
}

impl Callee {
    pub fn display_name(&self) -> String {
        match self {
            Callee::Global(n) | Callee::Local(n) => n.clone(),
            Callee::InlineAsm(_) => "asm".to_string(),
            Callee::Operand(op) => op.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrInstruction {
    pub opcode: Opcode,
    /// Opcode word as written; differs from `opcode.mnemonic()` only for opaque instructions.
    pub mnemonic: String,
    pub result_name: Option<String>,
    /// Type of the produced value (`Void` when nothing is produced).
    pub result_type: TypeRef,
    pub operands: Vec<IrOperand>,
    pub type_args: Vec<TypeRef>,
    pub flags: BTreeSet<String>,
    pub detail: Detail,
    pub raw_text: String,
    pub location: Location,
    /// Set when a known opcode could not be parsed; the instruction is then opaque.
    pub problem: Option<String>,
}

impl IrInstruction {
    pub fn opaque(mnemonic: &str, result_name: Option<String>, raw_text: &str, location: Location) -> Self {
        IrInstruction {
            opcode: Opcode::Opaque,
            mnemonic: mnemonic.to_string(),
            result_name,
            result_type: TypeRef::Opaque,
            operands: Vec::new(),
            type_args: Vec::new(),
            flags: BTreeSet::new(),
            detail: Detail::None,
            raw_text: raw_text.to_string(),
            location,
            problem: None,
        }
    }

    pub fn predicate(&self) -> Option<&str> {
        match &self.detail {
            Detail::Predicate(p) => Some(p),
            _ => None,
        }
    }

    pub fn indices(&self) -> &[u64] {
        match &self.detail {
            Detail::Indices(ix) => ix,
            _ => &[],
        }
    }

    /// Labels this terminator may transfer control to, in operand order.
    pub fn successors(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.detail {
            Detail::Switch { default, cases } => {
                out.push(default.clone());
                out.extend(cases.iter().map(|(_, l)| l.clone()));
            }
            Detail::Call {
                normal,
                unwind,
                indirect,
                ..
            } => {
                out.extend(normal.iter().cloned());
                out.extend(indirect.iter().cloned());
                out.extend(unwind.iter().cloned());
            }
            Detail::CatchSwitch { handlers, unwind } => {
                out.extend(handlers.iter().cloned());
                out.extend(unwind.iter().cloned());
            }
            _ => {}
        }
        for op in &self.operands {
            if let OperandKind::Label(l) = &op.kind {
                out.push(l.clone());
            }
        }
        let mut seen = BTreeSet::new();
        out.retain(|l| seen.insert(l.clone()));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpecialConst {
    Null,
    Undef,
    Poison,
    ZeroInitializer,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperandKind {
    Local(String),
    Global(String),
    Int(i128),
    Float(f64),
    /// Decoded bytes of a `c"..."` constant; the trailing NUL is kept here.
    Str(Vec<u8>),
    Special(SpecialConst),
    Label(String),
    ConstExpr(Box<IrInstruction>),
    Aggregate(Vec<IrOperand>),
    /// An operand the parser could not understand (too deeply nested, unknown form).
    Opaque(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrOperand {
    pub kind: OperandKind,
    pub ty: TypeRef,
    /// Source text of the value, without its type prefix.
    pub text: String,
}

impl IrOperand {
    pub fn new(kind: OperandKind, ty: TypeRef, text: impl Into<String>) -> Self {
        IrOperand {
            kind,
            ty,
            text: text.into(),
        }
    }

    pub fn local(name: &str, ty: TypeRef) -> Self {
        IrOperand::new(OperandKind::Local(name.to_string()), ty, format!("%{name}"))
    }

    pub fn int(value: i128, ty: TypeRef) -> Self {
        IrOperand::new(OperandKind::Int(value), ty, value.to_string())
    }

    pub fn as_local(&self) -> Option<&str> {
        match &self.kind {
            OperandKind::Local(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i128> {
        match &self.kind {
            OperandKind::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Nesting depth of constant expressions inside this operand.
    pub fn const_depth(&self) -> usize {
        match &self.kind {
            OperandKind::ConstExpr(inner) => 1 + inner.operands.iter().map(IrOperand::const_depth).max().unwrap_or(0),
            OperandKind::Aggregate(items) => items.iter().map(IrOperand::const_depth).max().unwrap_or(0),
            _ => 0,
        }
    }
}
