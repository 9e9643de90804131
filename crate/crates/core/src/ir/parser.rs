//! Recursive-descent parser for the textual LLVM-IR subset.
//!
//! The parser is deliberately forgiving. Only unbalanced braces are fatal;
//! everything else produces a diagnostic and an opaque instruction or operand
//! so that the rest of the module still translates.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::types::{FloatKind, TypeRef};

/// Constant expressions nested deeper than this become opaque operands.
pub const MAX_CONST_DEPTH: usize = 8;
/// Guard for types and aggregate constants; keeps recursion bounded on hostile input.
const MAX_NESTING: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub location: Location,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}:{}: {sev}: {}", self.location.line, self.location.column, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseReport {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: unmatched closing brace")]
    UnmatchedClose { line: u32 },
    #[error("line {line}: brace opened here is never closed")]
    Unclosed { line: u32 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstrError {
    #[error("unsupported opcode `{0}`")]
    UnsupportedOpcode(String),
    #[error("malformed operand at offset {offset}: {message}")]
    MalformedOperand { offset: usize, message: String },
}

/// Parses a whole module. Diagnostics are returned alongside the module.
pub fn parse_module(source: &str, source_name: &str) -> Result<(IrModule, ParseReport), ParseError> {
    let tokens = tokenize(source);
    check_braces(&tokens)?;
    let mut p = Parser::new(source, tokens);
    let mut module = IrModule {
        source_name: source_name.to_string(),
        ..IrModule::default()
    };
    p.module(&mut module);
    Ok((module, ParseReport { diagnostics: p.diags }))
}

/// Parses a single instruction, e.g. `%c = add i32 %a, %b`.
pub fn parse_instruction(line: &str) -> Result<IrInstruction, InstrError> {
    let tokens = tokenize(line);
    let mut p = Parser::new(line, tokens);
    let inst = p.instruction().map_err(|e| e.into_instr_error(line))?;
    if let Some(t) = p.peek() {
        if !matches!(t.tok, Tok::Punct(',')) {
            return Err(InstrError::MalformedOperand {
                offset: t.start,
                message: "unexpected trailing tokens".to_string(),
            });
        }
    }
    Ok(inst)
}

/// Parses a type written in IR syntax, e.g. `[4 x i32]*`. `opaque` is accepted
/// for the placeholder type.
pub fn parse_type(text: &str) -> Option<TypeRef> {
    if text.trim() == "opaque" {
        return Some(TypeRef::Opaque);
    }
    let tokens = tokenize(text);
    let mut p = Parser::new(text, tokens);
    let ty = p.ty().ok()?;
    p.peek().is_none().then_some(ty)
}

fn check_braces(tokens: &[Token]) -> Result<(), ParseError> {
    let mut open = Vec::new();
    for t in tokens {
        match t.tok {
            Tok::Punct('{') => open.push(t.line),
            Tok::Punct('}')
                if open.pop().is_none() => {
                    return Err(ParseError::UnmatchedClose { line: t.line });
                }
            _ => {}
        }
    }
    match open.last() {
        Some(&line) => Err(ParseError::Unclosed { line }),
        None => Ok(()),
    }
}

#[derive(Debug)]
struct PErr {
    offset: usize,
    message: String,
    unsupported: Option<String>,
}

impl PErr {
    fn into_instr_error(self, _src: &str) -> InstrError {
        match self.unsupported {
            Some(op) => InstrError::UnsupportedOpcode(op),
            None => InstrError::MalformedOperand {
                offset: self.offset,
                message: self.message,
            },
        }
    }
}

type PResult<T> = Result<T, PErr>;

const VALUE_WORDS: &[&str] = &[
    "true",
    "false",
    "null",
    "undef",
    "poison",
    "zeroinitializer",
    "none",
    "blockaddress",
    "dso_local_equivalent",
    "no_cfi",
    "splat",
    "asm",
];

const ORDERINGS: &[&str] = &["unordered", "monotonic", "acquire", "release", "acq_rel", "seq_cst"];

const FAST_MATH: &[&str] = &["nnan", "ninf", "nsz", "arcp", "contract", "afn", "reassoc", "fast"];

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    type_defs: Vec<(String, TypeRef)>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, toks: Vec<Token>) -> Self {
        Parser {
            src,
            toks,
            pos: 0,
            diags: Vec::new(),
            type_defs: Vec::new(),
        }
    }

    // ---- token helpers -------------------------------------------------

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&Token> {
        self.toks.get(self.pos + off)
    }

    fn tok(&self) -> Option<&Tok> {
        self.peek().map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.peek().map(|t| t.start).unwrap_or(self.src.len())
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(PErr {
            offset: self.offset(),
            message: message.into(),
            unsupported: None,
        })
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_punct(&self, c: char) -> bool {
        self.peek().is_some_and(|t| t.is_punct(c))
    }

    fn at_word(&self, w: &str) -> bool {
        self.peek().is_some_and(|t| t.is_word(w))
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.at_punct(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.at_word(w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> PResult<()> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            self.err(format!("expected `{w}`"))
        }
    }

    fn word(&self) -> Option<&str> {
        match self.tok() {
            Some(Tok::Word(w)) => Some(w),
            _ => None,
        }
    }

    fn eat_any_word(&mut self, set: &[&str]) -> Option<String> {
        let w = self.word()?.to_string();
        if set.contains(&w.as_str()) {
            self.pos += 1;
            Some(w)
        } else {
            None
        }
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end
        }
    }

    fn prev_line(&self) -> u32 {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].line
        }
    }

    fn slice(&self, start: usize, end: usize) -> String {
        self.src.get(start..end).unwrap_or("").to_string()
    }

    fn location(&self) -> Location {
        self.peek()
            .map(|t| Location {
                line: t.line,
                column: t.column,
            })
            .unwrap_or_default()
    }

    fn diag(&mut self, location: Location, severity: Severity, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            location,
            severity,
            message: message.into(),
        });
    }

    /// Skips a balanced `( ... )` group starting at the current `(`.
    fn skip_group(&mut self) {
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            match t.tok {
                Tok::Punct('(') | Tok::Punct('[') | Tok::Punct('{') => depth += 1,
                Tok::Punct(')') | Tok::Punct(']') | Tok::Punct('}') => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                    if depth == 0 {
                        self.pos += 1;
                        return;
                    }
                }
                _ => {}
            }
            self.pos += 1;
        }
    }

    /// Skips the rest of the line the token at `start` sits on, plus any
    /// continuation lines needed to balance brackets opened on it. Never
    /// consumes a `}` that closes an enclosing function body.
    fn skip_statement(&mut self, start: usize) {
        let Some(first_line) = self.toks.get(start).map(|t| t.line) else {
            return;
        };
        let mut depth: i64 = 0;
        let mut line = first_line;
        self.pos = self.pos.max(start);
        // Recompute depth over what was already consumed.
        for t in &self.toks[start..self.pos] {
            match t.tok {
                Tok::Punct('(') | Tok::Punct('[') | Tok::Punct('{') => depth += 1,
                Tok::Punct(')') | Tok::Punct(']') | Tok::Punct('}') => depth -= 1,
                _ => {}
            }
            line = t.line;
        }
        while let Some(t) = self.peek() {
            let new_line = t.line != line;
            if new_line && depth <= 0 {
                return;
            }
            match t.tok {
                Tok::Punct('(') | Tok::Punct('[') | Tok::Punct('{') => depth += 1,
                Tok::Punct(')') | Tok::Punct(']') => depth -= 1,
                Tok::Punct('}') => {
                    if depth <= 0 {
                        return;
                    }
                    depth -= 1;
                }
                Tok::LabelDef(_) if new_line => return,
                _ => {}
            }
            line = t.line;
            self.pos += 1;
        }
    }

    // ---- module level ---------------------------------------------------

    fn module(&mut self, module: &mut IrModule) {
        let mut function_names = HashSet::new();
        while let Some(t) = self.peek().cloned() {
            let start = self.pos;
            let loc = Location {
                line: t.line,
                column: t.column,
            };
            match &t.tok {
                Tok::Word(w) if w == "source_filename" => self.skip_statement(start),
                Tok::Word(w) if w == "target" => {
                    self.pos += 1;
                    if self.eat_word("triple") && self.eat_punct('=') {
                        if let Some(Tok::Str(s)) = self.tok().cloned() {
                            module.target_triple = Some(String::from_utf8_lossy(&s).into_owned());
                        }
                    }
                    self.skip_statement(start);
                }
                Tok::Local(name) if self.peek_at(1).is_some_and(|t| t.is_punct('=')) && self.peek_at(2).is_some_and(|t| t.is_word("type")) => {
                    let name = name.clone();
                    self.pos += 3;
                    let ty = if self.eat_word("opaque") {
                        TypeRef::Opaque
                    } else {
                        match self.ty() {
                            Ok(ty) => ty,
                            Err(e) => {
                                self.diag(loc, Severity::Error, format!("type definition %{name}: {}", e.message));
                                TypeRef::Opaque
                            }
                        }
                    };
                    if module.type_defs.iter().any(|(n, _)| *n == name) {
                        self.diag(loc, Severity::Warning, format!("duplicate type definition %{name} ignored"));
                    } else {
                        module.type_defs.push((name.clone(), ty.clone()));
                        self.type_defs.push((name, ty));
                    }
                    self.skip_statement(start);
                }
                Tok::Global(name) if self.peek_at(1).is_some_and(|t| t.is_punct('=')) => {
                    let name = name.clone();
                    match self.global(&name, start, loc) {
                        Ok(Some(g)) => module.globals.push(g),
                        Ok(None) => {}
                        Err(e) => self.diag(loc, Severity::Error, format!("global @{name}: {}", e.message)),
                    }
                    self.skip_statement(start);
                }
                Tok::Word(w) if w == "define" || w == "declare" => {
                    let is_decl = w == "declare";
                    match self.function(is_decl, loc) {
                        Ok(mut f) => {
                            if !function_names.insert(f.name.clone()) {
                                self.diag(loc, Severity::Error, format!("function @{} defined twice; later copy renamed", f.name));
                                f.name = format!("{}.dup{}", f.name, module.functions.len());
                                function_names.insert(f.name.clone());
                            }
                            module.functions.push(f);
                        }
                        Err(e) => {
                            self.diag(loc, Severity::Error, format!("function: {}", e.message));
                            self.pos = start;
                            self.skip_function(start);
                        }
                    }
                }
                Tok::Word(w) if w == "attributes" || w == "module" || w == "uselistorder" || w == "uselistorder_bb" => {
                    self.skip_statement(start)
                }
                Tok::Meta(_) | Tok::Comdat(_) | Tok::Punct('!') => self.skip_statement(start),
                _ => {
                    self.diag(loc, Severity::Warning, "unrecognized top-level construct skipped");
                    self.skip_statement(start);
                }
            }
            if self.pos == start {
                self.pos += 1;
            }
        }
        // Type definitions may follow their uses; nothing else needs patching
        // because named types stay symbolic.
    }

    /// After a broken function header: skip to the end of its body, if any.
    fn skip_function(&mut self, start: usize) {
        let line = self.toks[start].line;
        while let Some(t) = self.peek() {
            if t.is_punct('{') {
                self.skip_group();
                return;
            }
            if t.line != line && !matches!(t.tok, Tok::Punct(_) | Tok::Word(_) | Tok::AttrGroup(_)) {
                return;
            }
            if t.line != line && t.is_word("define") || t.line != line && t.is_word("declare") {
                return;
            }
            self.pos += 1;
        }
    }

    fn global(&mut self, name: &str, start: usize, loc: Location) -> PResult<Option<IrGlobal>> {
        self.pos += 2;
        let mut is_constant = false;
        let mut external = false;
        loop {
            match self.tok().cloned() {
                Some(Tok::Word(w)) if w == "global" => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Word(w)) if w == "constant" => {
                    is_constant = true;
                    self.pos += 1;
                    break;
                }
                Some(Tok::Word(w)) if w == "alias" || w == "ifunc" => {
                    self.diag(loc, Severity::Info, format!("{w} @{name} is not modeled"));
                    return Ok(None);
                }
                Some(Tok::Word(w)) => {
                    if w == "external" || w == "extern_weak" {
                        external = true;
                    }
                    self.pos += 1;
                    if self.at_punct('(') {
                        self.skip_group();
                    }
                }
                _ => return self.err("expected `global` or `constant`"),
            }
        }
        let ty = self.ty()?;
        let line = self.prev_line();
        let has_init = !external && self.peek().is_some_and(|t| t.line == line && !t.is_punct(','));
        let initializer = if has_init { Some(self.value(&ty, 0)?) } else { None };
        let end = self.prev_end();
        Ok(Some(IrGlobal {
            name: name.to_string(),
            ty,
            is_constant,
            initializer,
            raw_text: self.slice(self.toks[start].start, end),
            location: loc,
        }))
    }

    fn function(&mut self, is_decl: bool, loc: Location) -> PResult<IrFunction> {
        let kw_start = self.toks[self.pos].start;
        let kw_pos = self.pos;
        self.pos += 1;
        // Locate the function name; the return type is the longest type that ends right before it.
        // The header sits on one line; literal struct return types mean a `{`
        // can precede the name, so the line is the bound rather than the brace.
        let header_line = self.toks[kw_pos].line;
        let mut name_pos = None;
        let mut i = self.pos;
        while let Some(t) = self.toks.get(i).filter(|t| t.line == header_line) {
            if let Tok::Global(_) = t.tok {
                name_pos = Some(i);
                break;
            }
            i += 1;
        }
        let Some(name_pos) = name_pos else {
            return self.err("function name not found");
        };
        let mut return_type = None;
        for candidate in self.pos..name_pos {
            self.pos = candidate;
            if let Ok(t) = self.ty() {
                if self.pos == name_pos {
                    return_type = Some(t);
                    break;
                }
            }
        }
        let return_type = match return_type {
            Some(t) => t,
            None => {
                self.diag(loc, Severity::Warning, "could not determine return type");
                TypeRef::Opaque
            }
        };
        self.pos = name_pos;
        let Some(Tok::Global(name)) = self.bump().map(|t| t.tok) else {
            return self.err("expected function name");
        };
        self.expect_punct('(')?;
        let mut params = Vec::new();
        let mut varargs = false;
        let mut unnamed = 0usize;
        while !self.at_punct(')') {
            if self.peek().is_none() {
                return self.err("unterminated parameter list");
            }
            if self.eat_tok_ellipsis() {
                varargs = true;
                continue;
            }
            let ty = self.ty()?;
            let mut pname = None;
            while let Some(t) = self.peek() {
                match &t.tok {
                    Tok::Punct(',') | Tok::Punct(')') => break,
                    Tok::Punct('(') => self.skip_group(),
                    Tok::Local(n) => {
                        pname = Some(n.clone());
                        self.pos += 1;
                    }
                    _ => self.pos += 1,
                }
            }
            let pname = pname.unwrap_or_else(|| {
                let n = unnamed.to_string();
                unnamed += 1;
                n
            });
            params.push((pname, ty));
            if !self.eat_punct(',') {
                break;
            }
        }
        self.expect_punct(')')?;
        let header_line = self.prev_line();
        let mut blocks = Vec::new();
        let header_end;
        if is_decl {
            while self.peek().is_some_and(|t| t.line == header_line) {
                if self.at_punct('(') {
                    self.skip_group();
                } else {
                    self.pos += 1;
                }
            }
            header_end = self.prev_end();
        } else {
            // Skip attributes, personality, metadata up to the body's `{`.
            loop {
                let Some(t) = self.peek() else {
                    return self.err("missing function body");
                };
                if t.is_punct('{') {
                    let next_line = self.peek_at(1).map(|n| n.line);
                    if next_line.is_none_or(|l| l != t.line) || self.peek_at(1).is_some_and(|n| n.is_punct('}')) {
                        break;
                    }
                }
                if t.is_punct('(') {
                    self.skip_group();
                } else {
                    self.pos += 1;
                }
            }
            header_end = self.prev_end();
            self.pos += 1;
            blocks = self.body(&params, loc);
        }
        let _ = kw_pos;
        let header_text = self.slice(kw_start, header_end.max(kw_start));
        let mut f = IrFunction {
            name,
            return_type,
            params,
            varargs,
            blocks,
            is_declaration: is_decl,
            header_text,
            location: loc,
        };
        if !is_decl && f.blocks.is_empty() {
            self.diag(loc, Severity::Error, format!("function @{} has an empty body", f.name));
            f.blocks.push(IrBasicBlock {
                label: "0".to_string(),
                instructions: vec![synthetic_unreachable(loc)],
            });
        }
        Ok(f)
    }

    fn eat_tok_ellipsis(&mut self) -> bool {
        if matches!(self.tok(), Some(Tok::Ellipsis)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn body(&mut self, params: &[(String, TypeRef)], fn_loc: Location) -> Vec<IrBasicBlock> {
        let mut defined: HashSet<String> = params.iter().map(|(n, _)| n.clone()).collect();
        let mut next_number: u64 = params.iter().filter_map(|(n, _)| n.parse::<u64>().ok()).map(|n| n + 1).max().unwrap_or(0);
        let mut blocks: Vec<IrBasicBlock> = Vec::new();
        let mut current: Option<IrBasicBlock> = None;
        let mut labels = HashSet::new();
        loop {
            let Some(t) = self.peek().cloned() else {
                self.diag(fn_loc, Severity::Error, "function body not closed");
                break;
            };
            if t.is_punct('}') {
                self.pos += 1;
                break;
            }
            let loc = Location {
                line: t.line,
                column: t.column,
            };
            if let Tok::LabelDef(label) = &t.tok {
                self.pos += 1;
                if let Some(b) = current.take() {
                    blocks.push(close_block(b, &mut self.diags, loc));
                }
                let mut label = label.clone();
                if !labels.insert(label.clone()) {
                    self.diag(loc, Severity::Error, format!("label {label} defined twice; renamed"));
                    label = format!("{label}.dup{}", blocks.len());
                    labels.insert(label.clone());
                }
                if let Ok(n) = label.parse::<u64>() {
                    next_number = next_number.max(n + 1);
                }
                current = Some(IrBasicBlock {
                    label,
                    instructions: Vec::new(),
                });
                continue;
            }
            let needs_block = match &current {
                None => true,
                Some(b) => b.instructions.last().is_some_and(|i| i.opcode.is_terminator()),
            };
            if needs_block {
                if let Some(b) = current.take() {
                    blocks.push(b);
                }
                let label = next_number.to_string();
                next_number += 1;
                labels.insert(label.clone());
                current = Some(IrBasicBlock {
                    label,
                    instructions: Vec::new(),
                });
            }
            let start = self.pos;
            let mut inst = match self.instruction() {
                Ok(inst) => {
                    let last_line = self.prev_line();
                    if self.peek().is_some_and(|n| n.line == last_line && !n.is_punct('}')) {
                        let l = self.location();
                        self.diag(l, Severity::Warning, "unexpected trailing tokens ignored");
                        self.skip_statement(start);
                    }
                    inst
                }
                Err(e) => {
                    let line_col = self
                        .toks
                        .iter()
                        .find(|t| t.start >= e.offset)
                        .map(|t| Location {
                            line: t.line,
                            column: t.column,
                        })
                        .unwrap_or(loc);
                    self.pos = start;
                    let result_name = match (&t.tok, self.peek_at(1)) {
                        (Tok::Local(n), Some(eq)) if eq.is_punct('=') => Some(n.clone()),
                        _ => None,
                    };
                    let mnemonic_pos = if result_name.is_some() { start + 2 } else { start };
                    let mnemonic = match self.toks.get(mnemonic_pos).map(|t| &t.tok) {
                        Some(Tok::Word(w)) => w.clone(),
                        _ => "unknown".to_string(),
                    };
                    self.skip_statement(start);
                    if self.pos == start {
                        self.pos += 1;
                    }
                    let raw = self.slice(t.start, self.prev_end().max(t.start));
                    let mut inst = IrInstruction::opaque(&mnemonic, result_name, &raw, loc);
                    if e.unsupported.is_some() {
                        self.diag(line_col, Severity::Warning, format!("unsupported instruction `{mnemonic}` kept as opaque"));
                    } else {
                        self.diag(line_col, Severity::Error, format!("malformed `{mnemonic}`: {}", e.message));
                        inst.problem = Some(e.message);
                    }
                    inst
                }
            };
            if let Some(name) = inst.result_name.clone() {
                if let Ok(n) = name.parse::<u64>() {
                    next_number = next_number.max(n + 1);
                }
                if !defined.insert(name.clone()) {
                    let renamed = format!("{name}.dup{}", defined.len());
                    self.diag(loc, Severity::Error, format!("%{name} defined twice; second definition renamed %{renamed}"));
                    defined.insert(renamed.clone());
                    inst.result_name = Some(renamed);
                }
            }
            if let Some(b) = current.as_mut() {
                b.instructions.push(inst);
            }
        }
        if let Some(b) = current.take() {
            blocks.push(close_block(b, &mut self.diags, fn_loc));
        }
        blocks
    }

    // ---- types ----------------------------------------------------------

    fn ty(&mut self) -> PResult<TypeRef> {
        self.ty_depth(0)
    }

    fn ty_depth(&mut self, depth: usize) -> PResult<TypeRef> {
        if depth > MAX_NESTING {
            return self.err("type nested too deeply");
        }
        let Some(tok) = self.tok().cloned() else {
            return self.err("expected type");
        };
        let mut ty = match tok {
            Tok::Word(w) => {
                self.pos += 1;
                match w.as_str() {
                    "void" => TypeRef::Void,
                    "label" => TypeRef::Label,
                    "token" => TypeRef::Token,
                    "metadata" => TypeRef::Metadata,
                    "opaque" | "x86_mmx" | "x86_amx" => TypeRef::Opaque,
                    "ptr" => {
                        let addrspace = self.addrspace()?;
                        TypeRef::Pointer {
                            pointee: None,
                            addrspace,
                        }
                    }
                    _ => {
                        if let Some(k) = FloatKind::from_keyword(&w) {
                            TypeRef::Float(k)
                        } else if let Some(width) = w.strip_prefix('i').and_then(|d| d.parse::<u32>().ok()) {
                            if width == 0 || width > (1 << 23) {
                                self.pos -= 1;
                                return self.err("integer width out of range");
                            }
                            TypeRef::Int(width)
                        } else {
                            self.pos -= 1;
                            return self.err(format!("unknown type `{w}`"));
                        }
                    }
                }
            }
            Tok::Local(name) => {
                self.pos += 1;
                TypeRef::Named(name)
            }
            Tok::Punct('[') => {
                self.pos += 1;
                let n = self.int_literal()? as u64;
                self.expect_word("x")?;
                let elem = self.ty_depth(depth + 1)?;
                self.expect_punct(']')?;
                TypeRef::Array(n, Box::new(elem))
            }
            Tok::Punct('<') => {
                self.pos += 1;
                if self.at_punct('{') {
                    let fields = self.struct_body(depth)?;
                    self.expect_punct('>')?;
                    TypeRef::Struct { fields, packed: true }
                } else {
                    let scalable = self.eat_word("vscale");
                    if scalable {
                        self.expect_word("x")?;
                    }
                    let len = self.int_literal()? as u64;
                    self.expect_word("x")?;
                    let elem = self.ty_depth(depth + 1)?;
                    self.expect_punct('>')?;
                    TypeRef::Vector {
                        len,
                        scalable,
                        elem: Box::new(elem),
                    }
                }
            }
            Tok::Punct('{') => {
                let fields = self.struct_body(depth)?;
                TypeRef::Struct { fields, packed: false }
            }
            _ => return self.err("expected type"),
        };
        // Suffixes: pointers and function types.
        loop {
            if self.at_word("addrspace") && self.peek_at(1).is_some_and(|t| t.is_punct('(')) {
                let save = self.pos;
                let space = self.addrspace()?;
                if self.eat_punct('*') {
                    ty = TypeRef::Pointer {
                        pointee: Some(Box::new(ty)),
                        addrspace: space,
                    };
                    continue;
                }
                self.pos = save;
                break;
            }
            if self.eat_punct('*') {
                ty = TypeRef::ptr_to(ty);
                continue;
            }
            if self.at_punct('(') && self.looks_like_fn_params() {
                self.pos += 1;
                let mut params = Vec::new();
                let mut varargs = false;
                while !self.at_punct(')') {
                    if self.eat_tok_ellipsis() {
                        varargs = true;
                    } else {
                        params.push(self.ty_depth(depth + 1)?);
                        // Parameter attributes are allowed in function types.
                        while let Some(w) = self.word() {
                            if w == "x" {
                                break;
                            }
                            self.pos += 1;
                            if self.at_punct('(') {
                                self.skip_group();
                            }
                        }
                    }
                    if !self.eat_punct(',') {
                        break;
                    }
                }
                self.expect_punct(')')?;
                ty = TypeRef::Function {
                    ret: Box::new(ty),
                    params,
                    varargs,
                };
                continue;
            }
            break;
        }
        Ok(ty)
    }

    /// `(` followed by `)`, `...` or something that parses as a type.
    fn looks_like_fn_params(&mut self) -> bool {
        let save = self.pos;
        self.pos += 1;
        let ok = match self.tok() {
            Some(Tok::Punct(')')) | Some(Tok::Ellipsis) => true,
            _ => self.ty_depth(MAX_NESTING).is_ok() || {
                self.pos = save + 1;
                self.ty().is_ok()
            },
        };
        self.pos = save;
        ok
    }

    fn addrspace(&mut self) -> PResult<u32> {
        if self.at_word("addrspace") && self.peek_at(1).is_some_and(|t| t.is_punct('(')) {
            self.pos += 2;
            let n = self.int_literal()? as u32;
            self.expect_punct(')')?;
            Ok(n)
        } else {
            Ok(0)
        }
    }

    fn struct_body(&mut self, depth: usize) -> PResult<Vec<TypeRef>> {
        self.expect_punct('{')?;
        let mut fields = Vec::new();
        while !self.at_punct('}') {
            fields.push(self.ty_depth(depth + 1)?);
            if !self.eat_punct(',') {
                break;
            }
        }
        self.expect_punct('}')?;
        Ok(fields)
    }

    fn int_literal(&mut self) -> PResult<i128> {
        match self.tok().cloned() {
            Some(Tok::Int(s)) => match s.parse::<i128>() {
                Ok(v) => {
                    self.pos += 1;
                    Ok(v)
                }
                Err(_) => self.err("integer literal out of range"),
            },
            _ => self.err("expected integer"),
        }
    }

    // ---- values ---------------------------------------------------------

    fn typed_value(&mut self, depth: usize) -> PResult<IrOperand> {
        let ty = self.ty()?;
        self.value(&ty, depth)
    }

    fn value(&mut self, ty: &TypeRef, depth: usize) -> PResult<IrOperand> {
        if depth > MAX_NESTING {
            return self.err("constant nested too deeply");
        }
        let Some(t) = self.peek().cloned() else {
            return self.err("expected value");
        };
        let text_of = |p: &Self| p.slice(t.start, p.prev_end());
        let kind = match &t.tok {
            Tok::Local(n) => {
                self.pos += 1;
                OperandKind::Local(n.clone())
            }
            Tok::Global(n) => {
                self.pos += 1;
                OperandKind::Global(n.clone())
            }
            Tok::Int(s) => {
                self.pos += 1;
                if ty.is_float() {
                    match s.parse::<f64>() {
                        Ok(v) => OperandKind::Float(v),
                        Err(_) => OperandKind::Opaque(s.clone()),
                    }
                } else {
                    match s.parse::<i128>() {
                        Ok(v) => OperandKind::Int(v),
                        Err(_) => {
                            let l = Location {
                                line: t.line,
                                column: t.column,
                            };
                            self.diag(l, Severity::Warning, format!("integer literal {s} does not fit 128 bits"));
                            OperandKind::Opaque(s.clone())
                        }
                    }
                }
            }
            Tok::Float(s) => {
                self.pos += 1;
                match parse_float_literal(s, ty) {
                    Some(v) if ty.is_int() => OperandKind::Int(v as i128),
                    Some(v) => OperandKind::Float(v),
                    None => match parse_hex_int(s) {
                        Some(v) if ty.is_int() => OperandKind::Int(v),
                        _ => OperandKind::Opaque(s.clone()),
                    },
                }
            }
            Tok::CStr(bytes) => {
                self.pos += 1;
                OperandKind::Str(bytes.clone())
            }
            Tok::Punct('[') | Tok::Punct('{') | Tok::Punct('<') => {
                let (open, close) = match t.tok {
                    Tok::Punct('[') => ('[', ']'),
                    Tok::Punct('{') => ('{', '}'),
                    _ => ('<', '>'),
                };
                self.pos += 1;
                let packed = open == '<' && self.at_punct('{');
                if packed {
                    self.pos += 1;
                }
                let mut items = Vec::new();
                let closer = if packed { '}' } else { close };
                while !self.at_punct(closer) {
                    items.push(self.typed_value(depth + 1)?);
                    if !self.eat_punct(',') {
                        break;
                    }
                }
                self.expect_punct(closer)?;
                if packed {
                    self.expect_punct('>')?;
                }
                OperandKind::Aggregate(items)
            }
            Tok::Word(w) => match w.as_str() {
                "true" => {
                    self.pos += 1;
                    OperandKind::Int(1)
                }
                "false" => {
                    self.pos += 1;
                    OperandKind::Int(0)
                }
                "null" => self.special(SpecialConst::Null),
                "undef" => self.special(SpecialConst::Undef),
                "poison" => self.special(SpecialConst::Poison),
                "zeroinitializer" => self.special(SpecialConst::ZeroInitializer),
                "none" => self.special(SpecialConst::None),
                _ if Opcode::from_mnemonic(w).is_some() => {
                    let level = depth + 1;
                    if level > MAX_CONST_DEPTH {
                        self.pos += 1;
                        while !self.at_punct('(') && self.peek().is_some_and(|t| matches!(t.tok, Tok::Word(_))) {
                            self.pos += 1;
                        }
                        self.skip_group();
                        let l = Location {
                            line: t.line,
                            column: t.column,
                        };
                        self.diag(l, Severity::Error, format!("constant expression nested deeper than {MAX_CONST_DEPTH} levels"));
                        OperandKind::Opaque(text_of(self))
                    } else {
                        let inst = self.const_expr(level, t.start)?;
                        OperandKind::ConstExpr(Box::new(inst))
                    }
                }
                _ => {
                    // blockaddress(...), dso_local_equivalent @f, splat (...), etc.
                    self.pos += 1;
                    if self.at_punct('(') {
                        self.skip_group();
                    } else if matches!(self.tok(), Some(Tok::Global(_))) {
                        self.pos += 1;
                    }
                    OperandKind::Opaque(text_of(self))
                }
            },
            _ => return self.err("expected value"),
        };
        Ok(IrOperand::new(kind, ty.clone(), text_of(self)))
    }

    fn special(&mut self, s: SpecialConst) -> OperandKind {
        self.pos += 1;
        OperandKind::Special(s)
    }

    /// `opcode (operands)` in constant position.
    fn const_expr(&mut self, depth: usize, start: usize) -> PResult<IrInstruction> {
        let loc = self.location();
        let Some(Tok::Word(word)) = self.bump().map(|t| t.tok) else {
            return self.err("expected constant expression");
        };
        let opcode = Opcode::from_mnemonic(&word).unwrap_or(Opcode::Opaque);
        let mut inst = IrInstruction::opaque(&word, None, "", loc);
        inst.opcode = opcode;
        // Flags such as inbounds, nuw, nsw.
        while let Some(w) = self.word() {
            if w == "inrange" {
                self.pos += 1;
                if self.at_punct('(') {
                    self.skip_group();
                }
                continue;
            }
            if matches!(opcode, Opcode::ICmp | Opcode::FCmp) {
                inst.detail = Detail::Predicate(w.to_string());
                self.pos += 1;
                continue;
            }
            inst.flags.insert(w.to_string());
            self.pos += 1;
        }
        self.expect_punct('(')?;
        match opcode {
            op if op.is_cast() => {
                let v = self.typed_value(depth)?;
                self.expect_word("to")?;
                let to = self.ty()?;
                inst.type_args = vec![v.ty.clone(), to.clone()];
                inst.result_type = to;
                inst.operands.push(v);
            }
            Opcode::GetElementPtr => {
                let src = self.ty()?;
                self.expect_punct(',')?;
                let base = self.typed_value(depth)?;
                let mut indices = Vec::new();
                while self.eat_punct(',') {
                    if self.eat_word("inrange") && self.at_punct('(') {
                        self.skip_group();
                    }
                    indices.push(self.typed_value(depth)?);
                }
                inst.result_type = gep_result_type(&base.ty, &src, &indices, &self.type_defs);
                inst.type_args = vec![src];
                inst.operands.push(base);
                inst.operands.extend(indices);
            }
            Opcode::ExtractValue => {
                let agg = self.typed_value(depth)?;
                let mut ix = Vec::new();
                while self.eat_punct(',') {
                    ix.push(self.int_literal()? as u64);
                }
                inst.result_type = member_path_type(&agg.ty, &ix, &self.type_defs).unwrap_or(TypeRef::Opaque);
                inst.operands.push(agg);
                inst.detail = Detail::Indices(ix);
            }
            _ => {
                let mut ops = vec![self.typed_value(depth)?];
                while self.eat_punct(',') {
                    ops.push(self.typed_value(depth)?);
                }
                inst.result_type = match opcode {
                    Opcode::ICmp | Opcode::FCmp => TypeRef::i1(),
                    Opcode::Select => ops.get(1).map(|o| o.ty.clone()).unwrap_or(TypeRef::Opaque),
                    Opcode::ExtractElement => ops[0].ty.element().cloned().unwrap_or(TypeRef::Opaque),
                    _ => ops[0].ty.clone(),
                };
                if !(opcode.is_binary() || matches!(opcode, Opcode::ICmp | Opcode::FCmp | Opcode::Select | Opcode::ExtractElement | Opcode::InsertElement | Opcode::ShuffleVector)) {
                    inst.opcode = Opcode::Opaque;
                }
                inst.operands = ops;
            }
        }
        self.expect_punct(')')?;
        inst.raw_text = self.slice(start, self.prev_end());
        Ok(inst)
    }

    // ---- instructions ---------------------------------------------------

    fn instruction(&mut self) -> PResult<IrInstruction> {
        let Some(first) = self.peek().cloned() else {
            return self.err("expected instruction");
        };
        let loc = Location {
            line: first.line,
            column: first.column,
        };
        let mut result_name = None;
        if let Tok::Local(n) = &first.tok {
            if self.peek_at(1).is_some_and(|t| t.is_punct('=')) {
                result_name = Some(n.clone());
                self.pos += 2;
            }
        }
        let mut flags = BTreeSet::new();
        while let Some(w) = self.eat_any_word(&["tail", "musttail", "notail"]) {
            flags.insert(w);
        }
        let Some(word) = self.word().map(str::to_string) else {
            return self.err("expected opcode");
        };
        let Some(opcode) = Opcode::from_mnemonic(&word) else {
            return Err(PErr {
                offset: self.offset(),
                message: format!("unsupported opcode `{word}`"),
                unsupported: Some(word),
            });
        };
        self.pos += 1;
        let mut inst = IrInstruction::opaque(&word, result_name, "", loc);
        inst.opcode = opcode;
        inst.flags = flags;
        inst.result_type = TypeRef::Void;
        self.instruction_body(&mut inst)?;
        self.trailing_attachments();
        inst.raw_text = self.slice(first.start, self.prev_end());
        Ok(inst)
    }

    /// `, align 4`, `, !dbg !12`, `, addrspace(1)` and friends.
    fn trailing_attachments(&mut self) {
        while self.at_punct(',') {
            match self.peek_at(1).map(|t| t.tok.clone()) {
                Some(Tok::Meta(_)) => {
                    self.pos += 2;
                    match self.tok() {
                        Some(Tok::Meta(_)) => self.pos += 1,
                        Some(Tok::Punct('!')) => {
                            self.pos += 1;
                            if self.at_punct('{') || self.at_punct('(') {
                                self.skip_group();
                            }
                        }
                        _ => {}
                    }
                }
                Some(Tok::Word(w)) if w == "align" => {
                    self.pos += 2;
                    let _ = self.int_literal();
                }
                Some(Tok::Word(w)) if w == "addrspace" => {
                    self.pos += 2;
                    if self.at_punct('(') {
                        self.skip_group();
                    }
                }
                _ => return,
            }
        }
    }

    fn orderings(&mut self, inst: &mut IrInstruction) {
        if self.at_word("syncscope") {
            self.pos += 1;
            if self.at_punct('(') {
                self.skip_group();
            }
        }
        let mut n = 0;
        while let Some(o) = self.eat_any_word(ORDERINGS) {
            let key = if n == 0 { "ordering" } else { "failure_ordering" };
            inst.flags.insert(format!("{key}={o}"));
            n += 1;
        }
    }

    fn label_ref(&mut self) -> PResult<String> {
        self.expect_word("label")?;
        match self.bump().map(|t| t.tok) {
            Some(Tok::Local(l)) => Ok(l),
            _ => {
                self.pos -= 1;
                self.err("expected label")
            }
        }
    }

    fn label_operand(&mut self) -> PResult<IrOperand> {
        let start = self.offset();
        let l = self.label_ref()?;
        let text = self.slice(start, self.prev_end());
        Ok(IrOperand::new(OperandKind::Label(l), TypeRef::Label, text))
    }

    fn fast_math(&mut self, inst: &mut IrInstruction) {
        while let Some(w) = self.eat_any_word(FAST_MATH) {
            inst.flags.insert(w);
        }
    }

    fn instruction_body(&mut self, inst: &mut IrInstruction) -> PResult<()> {
        let op = inst.opcode;
        match op {
            Opcode::Ret => {
                if !self.eat_word("void") {
                    let v = self.typed_value(0)?;
                    inst.type_args.push(v.ty.clone());
                    inst.operands.push(v);
                }
            }
            Opcode::Br => {
                if self.at_word("label") {
                    inst.operands.push(self.label_operand()?);
                } else {
                    inst.operands.push(self.typed_value(0)?);
                    self.expect_punct(',')?;
                    inst.operands.push(self.label_operand()?);
                    self.expect_punct(',')?;
                    inst.operands.push(self.label_operand()?);
                }
            }
            Opcode::Switch => {
                let cond = self.typed_value(0)?;
                self.expect_punct(',')?;
                let default = self.label_ref()?;
                self.expect_punct('[')?;
                let mut cases = Vec::new();
                while !self.at_punct(']') {
                    if self.peek().is_none() {
                        return self.err("unterminated switch");
                    }
                    let v = self.typed_value(0)?;
                    self.expect_punct(',')?;
                    let l = self.label_ref()?;
                    cases.push((v, l));
                }
                self.expect_punct(']')?;
                inst.type_args.push(cond.ty.clone());
                inst.operands.push(cond);
                inst.detail = Detail::Switch { default, cases };
            }
            Opcode::IndirectBr => {
                inst.operands.push(self.typed_value(0)?);
                self.expect_punct(',')?;
                self.expect_punct('[')?;
                while !self.at_punct(']') {
                    inst.operands.push(self.label_operand()?);
                    if !self.eat_punct(',') {
                        break;
                    }
                }
                self.expect_punct(']')?;
            }
            Opcode::Unreachable => {}
            Opcode::Resume => inst.operands.push(self.typed_value(0)?),
            Opcode::FNeg => {
                self.fast_math(inst);
                let v = self.typed_value(0)?;
                inst.result_type = v.ty.clone();
                inst.type_args.push(v.ty.clone());
                inst.operands.push(v);
            }
            op if op.is_binary() => {
                while let Some(w) = self.eat_any_word(&["nuw", "nsw", "exact", "disjoint"]) {
                    inst.flags.insert(w);
                }
                self.fast_math(inst);
                let ty = self.ty()?;
                let a = self.value(&ty, 0)?;
                self.expect_punct(',')?;
                let b = self.value(&ty, 0)?;
                inst.result_type = ty.clone();
                inst.type_args.push(ty);
                inst.operands = vec![a, b];
            }
            Opcode::ICmp | Opcode::FCmp => {
                self.fast_math(inst);
                let _ = self.eat_word("samesign");
                let Some(pred) = self.word().map(str::to_string) else {
                    return self.err("expected predicate");
                };
                self.pos += 1;
                let ty = self.ty()?;
                let a = self.value(&ty, 0)?;
                self.expect_punct(',')?;
                let b = self.value(&ty, 0)?;
                inst.result_type = match &ty {
                    TypeRef::Vector { len, scalable, .. } => TypeRef::Vector {
                        len: *len,
                        scalable: *scalable,
                        elem: Box::new(TypeRef::i1()),
                    },
                    _ => TypeRef::i1(),
                };
                inst.type_args.push(ty);
                inst.operands = vec![a, b];
                inst.detail = Detail::Predicate(pred);
            }
            op if op.is_cast() => {
                while let Some(w) = self.eat_any_word(&["nneg", "nuw", "nsw"]) {
                    inst.flags.insert(w);
                }
                let v = self.typed_value(0)?;
                self.expect_word("to")?;
                let to = self.ty()?;
                inst.type_args = vec![v.ty.clone(), to.clone()];
                inst.result_type = to;
                inst.operands.push(v);
            }
            Opcode::Alloca => {
                if self.eat_word("inalloca") {
                    inst.flags.insert("inalloca".into());
                }
                let ty = self.ty()?;
                // Optional element count: `, i32 4`
                if self.at_punct(',') && !matches!(self.peek_at(1).map(|t| &t.tok), Some(Tok::Word(w)) if w == "align" || w == "addrspace") && !matches!(self.peek_at(1).map(|t| &t.tok), Some(Tok::Meta(_))) {
                    self.pos += 1;
                    inst.operands.push(self.typed_value(0)?);
                }
                inst.result_type = TypeRef::ptr_to(ty.clone());
                inst.type_args.push(ty);
            }
            Opcode::Load => {
                while let Some(w) = self.eat_any_word(&["atomic", "volatile"]) {
                    inst.flags.insert(w);
                }
                let ty = self.ty()?;
                self.expect_punct(',')?;
                let ptr = self.typed_value(0)?;
                self.orderings(inst);
                inst.result_type = ty.clone();
                inst.type_args.push(ty);
                inst.operands.push(ptr);
            }
            Opcode::Store => {
                while let Some(w) = self.eat_any_word(&["atomic", "volatile"]) {
                    inst.flags.insert(w);
                }
                let v = self.typed_value(0)?;
                self.expect_punct(',')?;
                let ptr = self.typed_value(0)?;
                self.orderings(inst);
                inst.type_args.push(v.ty.clone());
                inst.operands = vec![v, ptr];
            }
            Opcode::Fence => self.orderings(inst),
            Opcode::CmpXchg => {
                while let Some(w) = self.eat_any_word(&["weak", "volatile"]) {
                    inst.flags.insert(w);
                }
                let ptr = self.typed_value(0)?;
                self.expect_punct(',')?;
                let cmp = self.typed_value(0)?;
                self.expect_punct(',')?;
                let new = self.typed_value(0)?;
                self.orderings(inst);
                inst.result_type = TypeRef::Struct {
                    fields: vec![cmp.ty.clone(), TypeRef::i1()],
                    packed: false,
                };
                inst.type_args.push(cmp.ty.clone());
                inst.operands = vec![ptr, cmp, new];
            }
            Opcode::AtomicRmw => {
                if self.eat_word("volatile") {
                    inst.flags.insert("volatile".into());
                }
                let Some(rmw) = self.word().map(str::to_string) else {
                    return self.err("expected atomicrmw operation");
                };
                self.pos += 1;
                let ptr = self.typed_value(0)?;
                self.expect_punct(',')?;
                let v = self.typed_value(0)?;
                self.orderings(inst);
                inst.result_type = v.ty.clone();
                inst.type_args.push(v.ty.clone());
                inst.operands = vec![ptr, v];
                inst.detail = Detail::AtomicRmw(rmw);
            }
            Opcode::GetElementPtr => {
                while let Some(w) = self.word().map(str::to_string) {
                    if w == "inrange" {
                        self.pos += 1;
                        if self.at_punct('(') {
                            self.skip_group();
                        }
                        continue;
                    }
                    if !matches!(w.as_str(), "inbounds" | "nuw" | "nusw") {
                        break;
                    }
                    self.pos += 1;
                    inst.flags.insert(w);
                }
                let src = self.ty()?;
                self.expect_punct(',')?;
                let base = self.typed_value(0)?;
                let mut indices = Vec::new();
                while self.at_punct(',') && !matches!(self.peek_at(1).map(|t| &t.tok), Some(Tok::Meta(_))) && !self.peek_at(1).is_some_and(|t| t.is_word("align")) {
                    self.pos += 1;
                    if self.eat_word("inrange") && self.at_punct('(') {
                        self.skip_group();
                    }
                    indices.push(self.typed_value(0)?);
                }
                inst.result_type = gep_result_type(&base.ty, &src, &indices, &self.type_defs);
                inst.type_args.push(src);
                inst.operands.push(base);
                inst.operands.extend(indices);
            }
            Opcode::ExtractValue | Opcode::InsertValue => {
                let agg = self.typed_value(0)?;
                inst.operands.push(agg.clone());
                if op == Opcode::InsertValue {
                    self.expect_punct(',')?;
                    inst.operands.push(self.typed_value(0)?);
                }
                let mut ix = Vec::new();
                while self.at_punct(',') && matches!(self.peek_at(1).map(|t| &t.tok), Some(Tok::Int(_))) {
                    self.pos += 1;
                    let v = self.int_literal()?;
                    if v < 0 {
                        return self.err("negative aggregate index");
                    }
                    ix.push(v as u64);
                }
                if ix.is_empty() {
                    return self.err("expected aggregate index");
                }
                inst.result_type = if op == Opcode::InsertValue {
                    agg.ty.clone()
                } else {
                    member_path_type(&agg.ty, &ix, &self.type_defs).unwrap_or(TypeRef::Opaque)
                };
                inst.type_args.push(agg.ty);
                inst.detail = Detail::Indices(ix);
            }
            Opcode::ExtractElement | Opcode::InsertElement | Opcode::ShuffleVector => {
                let v = self.typed_value(0)?;
                let arity = if op == Opcode::ExtractElement { 2 } else { 3 };
                inst.operands.push(v.clone());
                for _ in 1..arity {
                    self.expect_punct(',')?;
                    inst.operands.push(self.typed_value(0)?);
                }
                inst.result_type = match op {
                    Opcode::ExtractElement => v.ty.element().cloned().unwrap_or(TypeRef::Opaque),
                    Opcode::InsertElement => v.ty.clone(),
                    _ => match (&v.ty, &inst.operands[2].ty) {
                        (TypeRef::Vector { elem, scalable, .. }, TypeRef::Vector { len, .. }) => TypeRef::Vector {
                            len: *len,
                            scalable: *scalable,
                            elem: elem.clone(),
                        },
                        _ => TypeRef::Opaque,
                    },
                };
                inst.type_args.push(v.ty);
            }
            Opcode::Select => {
                self.fast_math(inst);
                let c = self.typed_value(0)?;
                self.expect_punct(',')?;
                let a = self.typed_value(0)?;
                self.expect_punct(',')?;
                let b = self.typed_value(0)?;
                inst.result_type = a.ty.clone();
                inst.type_args.push(a.ty.clone());
                inst.operands = vec![c, a, b];
            }
            Opcode::Phi => {
                self.fast_math(inst);
                let ty = self.ty()?;
                let mut incoming = Vec::new();
                loop {
                    self.expect_punct('[')?;
                    let v = self.value(&ty, 0)?;
                    self.expect_punct(',')?;
                    let label = match self.bump().map(|t| t.tok) {
                        Some(Tok::Local(l)) => l,
                        _ => {
                            self.pos -= 1;
                            return self.err("expected predecessor label");
                        }
                    };
                    self.expect_punct(']')?;
                    incoming.push((v, label));
                    if !(self.at_punct(',') && self.peek_at(1).is_some_and(|t| t.is_punct('['))) {
                        break;
                    }
                    self.pos += 1;
                }
                inst.result_type = ty.clone();
                inst.type_args.push(ty);
                inst.operands = incoming.iter().map(|(v, _)| v.clone()).collect();
                inst.detail = Detail::Phi(incoming);
            }
            Opcode::Freeze => {
                let v = self.typed_value(0)?;
                inst.result_type = v.ty.clone();
                inst.operands.push(v);
            }
            Opcode::VaArg => {
                inst.operands.push(self.typed_value(0)?);
                self.expect_punct(',')?;
                let ty = self.ty()?;
                inst.result_type = ty.clone();
                inst.type_args.push(ty);
            }
            Opcode::Call | Opcode::Invoke | Opcode::CallBr => self.call_like(inst)?,
            Opcode::LandingPad => {
                let ty = self.ty()?;
                let cleanup = self.eat_word("cleanup");
                let mut clauses = Vec::new();
                while let Some(kind) = self.eat_any_word(&["catch", "filter"]) {
                    let v = self.typed_value(0)?;
                    clauses.push((kind, v));
                }
                inst.result_type = ty.clone();
                inst.type_args.push(ty);
                inst.detail = Detail::LandingPad { cleanup, clauses };
            }
            Opcode::CatchSwitch => {
                self.expect_word("within")?;
                self.parent_pad(inst)?;
                self.expect_punct('[')?;
                let mut handlers = Vec::new();
                while !self.at_punct(']') {
                    handlers.push(self.label_ref()?);
                    if !self.eat_punct(',') {
                        break;
                    }
                }
                self.expect_punct(']')?;
                self.expect_word("unwind")?;
                let unwind = if self.eat_word("to") {
                    self.expect_word("caller")?;
                    None
                } else {
                    Some(self.label_ref()?)
                };
                inst.result_type = TypeRef::Token;
                inst.detail = Detail::CatchSwitch { handlers, unwind };
            }
            Opcode::CatchPad | Opcode::CleanupPad => {
                self.expect_word("within")?;
                self.parent_pad(inst)?;
                self.expect_punct('[')?;
                while !self.at_punct(']') {
                    inst.operands.push(self.call_arg()?);
                    if !self.eat_punct(',') {
                        break;
                    }
                }
                self.expect_punct(']')?;
                inst.result_type = TypeRef::Token;
            }
            Opcode::CatchRet => {
                self.expect_word("from")?;
                let pad = self.typed_or_bare_local()?;
                inst.operands.push(pad);
                self.expect_word("to")?;
                inst.operands.push(self.label_operand()?);
            }
            Opcode::CleanupRet => {
                self.expect_word("from")?;
                let pad = self.typed_or_bare_local()?;
                inst.operands.push(pad);
                self.expect_word("unwind")?;
                if self.eat_word("to") {
                    self.expect_word("caller")?;
                } else {
                    inst.operands.push(self.label_operand()?);
                }
            }
            Opcode::Opaque => return self.err("opaque opcode"),
            _ => return self.err("unhandled opcode"),
        }
        Ok(())
    }

    fn typed_or_bare_local(&mut self) -> PResult<IrOperand> {
        if let Some(Tok::Local(n)) = self.tok().cloned() {
            self.pos += 1;
            return Ok(IrOperand::local(&n, TypeRef::Token));
        }
        self.typed_value(0)
    }

    fn parent_pad(&mut self, inst: &mut IrInstruction) -> PResult<()> {
        match self.bump().map(|t| t.tok) {
            Some(Tok::Word(w)) if w == "none" => Ok(()),
            Some(Tok::Local(p)) => {
                inst.flags.insert(format!("parent={p}"));
                Ok(())
            }
            _ => {
                self.pos -= 1;
                self.err("expected parent pad")
            }
        }
    }

    /// One call argument: type, parameter attributes, value.
    fn call_arg(&mut self) -> PResult<IrOperand> {
        let start = self.offset();
        let ty = self.ty()?;
        if ty == TypeRef::Metadata {
            // Metadata arguments are skipped structurally and kept as opaque text.
            while let Some(t) = self.peek() {
                match t.tok {
                    Tok::Punct(',') | Tok::Punct(')') | Tok::Punct(']') => break,
                    Tok::Punct('(') | Tok::Punct('{') | Tok::Punct('[') => self.skip_group(),
                    _ => self.pos += 1,
                }
            }
            let text = self.slice(start, self.prev_end());
            return Ok(IrOperand::new(OperandKind::Opaque(text.clone()), TypeRef::Metadata, text));
        }
        while let Some(w) = self.word() {
            if VALUE_WORDS.contains(&w) || Opcode::from_mnemonic(w).is_some() {
                break;
            }
            let is_sized = matches!(w, "align" | "dereferenceable" | "dereferenceable_or_null");
            self.pos += 1;
            if self.at_punct('(') {
                self.skip_group();
            } else if is_sized && matches!(self.tok(), Some(Tok::Int(_))) {
                self.pos += 1;
            }
        }
        self.value(&ty, 0)
    }

    fn call_like(&mut self, inst: &mut IrInstruction) -> PResult<()> {
        self.fast_math(inst);
        // Skip calling convention, return attributes and addrspace until `type callee`.
        let mut ret_ty = None;
        for _ in 0..64 {
            let save = self.pos;
            if let Ok(t) = self.ty() {
                let callee_next = matches!(self.tok(), Some(Tok::Global(_)) | Some(Tok::Local(_)))
                    || self.at_word("asm")
                    || self.word().is_some_and(|w| Opcode::from_mnemonic(w).is_some());
                if callee_next {
                    ret_ty = Some(t);
                    break;
                }
            }
            self.pos = save;
            if self.peek().is_none() {
                break;
            }
            self.pos += 1;
            if self.at_punct('(') {
                self.skip_group();
            }
        }
        let Some(fn_ty) = ret_ty else {
            return self.err("could not find call target");
        };
        let ret = match &fn_ty {
            TypeRef::Function { ret, .. } => (**ret).clone(),
            other => other.clone(),
        };
        let callee = match self.tok().cloned() {
            Some(Tok::Global(n)) => {
                self.pos += 1;
                Callee::Global(n)
            }
            Some(Tok::Local(n)) => {
                self.pos += 1;
                Callee::Local(n)
            }
            Some(Tok::Word(w)) if w == "asm" => {
                let start = self.offset();
                self.pos += 1;
                while matches!(self.tok(), Some(Tok::Word(_))) {
                    self.pos += 1;
                }
                while matches!(self.tok(), Some(Tok::Str(_)) | Some(Tok::Punct(','))) {
                    self.pos += 1;
                }
                Callee::InlineAsm(self.slice(start, self.prev_end()))
            }
            _ => {
                let v = self.value(&TypeRef::opaque_ptr(), 0)?;
                match &v.kind {
                    OperandKind::ConstExpr(ce) if ce.opcode.is_cast() => match ce.operands.first().map(|o| &o.kind) {
                        Some(OperandKind::Global(g)) => Callee::Global(g.clone()),
                        _ => Callee::Operand(Box::new(v)),
                    },
                    _ => Callee::Operand(Box::new(v)),
                }
            }
        };
        self.expect_punct('(')?;
        while !self.at_punct(')') {
            if self.peek().is_none() {
                return self.err("unterminated argument list");
            }
            inst.operands.push(self.call_arg()?);
            if !self.eat_punct(',') {
                break;
            }
        }
        self.expect_punct(')')?;
        // Function attributes and operand bundles.
        let line = self.prev_line();
        while let Some(t) = self.peek() {
            if t.line != line {
                break;
            }
            match &t.tok {
                Tok::AttrGroup(_) => self.pos += 1,
                Tok::Word(w) if w == "to" => break,
                Tok::Word(_) => {
                    self.pos += 1;
                    if self.at_punct('(') {
                        self.skip_group();
                    }
                }
                Tok::Punct('[') => self.skip_group(),
                _ => break,
            }
        }
        let mut normal = None;
        let mut unwind = None;
        let mut indirect = Vec::new();
        if inst.opcode == Opcode::Invoke {
            self.expect_word("to")?;
            normal = Some(self.label_ref()?);
            self.expect_word("unwind")?;
            unwind = Some(self.label_ref()?);
        } else if inst.opcode == Opcode::CallBr {
            self.expect_word("to")?;
            normal = Some(self.label_ref()?);
            self.expect_punct('[')?;
            while !self.at_punct(']') {
                indirect.push(self.label_ref()?);
                if !self.eat_punct(',') {
                    break;
                }
            }
            self.expect_punct(']')?;
        }
        inst.result_type = ret.clone();
        inst.type_args.push(fn_ty);
        inst.detail = Detail::Call {
            callee,
            normal,
            unwind,
            indirect,
        };
        Ok(())
    }
}

fn synthetic_unreachable(loc: Location) -> IrInstruction {
    let mut i = IrInstruction::opaque("unreachable", None, "unreachable", loc);
    i.opcode = Opcode::Unreachable;
    i.result_type = TypeRef::Void;
    i.problem = Some("synthesized terminator".to_string());
    i
}

fn close_block(mut b: IrBasicBlock, diags: &mut Vec<Diagnostic>, loc: Location) -> IrBasicBlock {
    let terminated = b.instructions.last().is_some_and(|i| i.opcode.is_terminator());
    if !terminated {
        diags.push(Diagnostic {
            location: loc,
            severity: Severity::Error,
            message: format!("block {} has no terminator; `unreachable` synthesized", b.label),
        });
        b.instructions.push(synthetic_unreachable(loc));
    }
    b
}

/// Follows named struct references through the module's type table.
pub fn resolve_named<'t>(ty: &'t TypeRef, defs: &'t [(String, TypeRef)]) -> &'t TypeRef {
    let mut cur = ty;
    for _ in 0..16 {
        match cur {
            TypeRef::Named(n) => match defs.iter().find(|(d, _)| d == n) {
                Some((_, t)) => cur = t,
                None => return cur,
            },
            _ => return cur,
        }
    }
    cur
}

/// Type of the member at `index` of a struct, array or vector.
pub fn member_type(ty: &TypeRef, index: u64, defs: &[(String, TypeRef)]) -> Option<TypeRef> {
    match resolve_named(ty, defs) {
        TypeRef::Struct { fields, .. } => fields.get(index as usize).cloned(),
        TypeRef::Array(_, elem) => Some((**elem).clone()),
        TypeRef::Vector { elem, .. } => Some((**elem).clone()),
        _ => None,
    }
}

pub fn member_path_type(ty: &TypeRef, path: &[u64], defs: &[(String, TypeRef)]) -> Option<TypeRef> {
    let mut cur = ty.clone();
    for &ix in path {
        cur = member_type(&cur, ix, defs)?;
    }
    Some(cur)
}

fn gep_result_type(base: &TypeRef, src: &TypeRef, indices: &[IrOperand], defs: &[(String, TypeRef)]) -> TypeRef {
    if let TypeRef::Pointer { pointee: None, .. } = base {
        return base.clone();
    }
    let mut cur = src.clone();
    for ix in indices.iter().skip(1) {
        let i = ix.as_int().unwrap_or(0).max(0) as u64;
        match member_type(&cur, i, defs) {
            Some(t) => cur = t,
            None => return TypeRef::ptr_to(TypeRef::Opaque),
        }
    }
    TypeRef::ptr_to(cur)
}

fn parse_hex_int(s: &str) -> Option<i128> {
    let hex = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X"))?;
    u128::from_str_radix(hex, 16).ok().map(|v| v as i128)
}

/// Decimal or LLVM hex float literal. Hex literals for `float` are still
/// written as the bits of a double.
pub fn parse_float_literal(s: &str, ty: &TypeRef) -> Option<f64> {
    if let Some(rest) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        let (prefix, digits) = match rest.chars().next()? {
            c @ ('K' | 'L' | 'M' | 'H' | 'R') => (Some(c), &rest[1..]),
            _ => (None, rest),
        };
        return match prefix {
            None => {
                if ty.is_int() {
                    return None;
                }
                u64::from_str_radix(digits, 16).ok().map(f64::from_bits)
            }
            Some('H') => u16::from_str_radix(digits, 16).ok().map(half_to_f64),
            Some('R') => u16::from_str_radix(digits, 16).ok().map(|b| f32::from_bits((b as u32) << 16) as f64),
            _ => None,
        };
    }
    s.parse::<f64>().ok()
}

fn half_to_f64(bits: u16) -> f64 {
    let sign = if bits & 0x8000 != 0 { -1.0 } else { 1.0 };
    let exp = ((bits >> 10) & 0x1f) as i32;
    let frac = (bits & 0x3ff) as f64;
    match exp {
        0 => sign * frac * 2f64.powi(-24),
        31 if frac == 0.0 => sign * f64::INFINITY,
        31 => f64::NAN,
        _ => sign * (1.0 + frac / 1024.0) * 2f64.powi(exp - 15),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_insertvalue_with_index_path() {
        let i = parse_instruction("%b = insertvalue {i32, i8} %a, i8 7, 1").unwrap();
        assert_eq!(i.opcode, Opcode::InsertValue);
        assert_eq!(i.result_name.as_deref(), Some("b"));
        assert_eq!(i.operands.len(), 2);
        assert_eq!(i.operands[0].as_local(), Some("a"));
        assert_eq!(
            i.operands[0].ty,
            TypeRef::Struct {
                fields: vec![TypeRef::Int(32), TypeRef::Int(8)],
                packed: false
            }
        );
        assert_eq!(i.operands[1].as_int(), Some(7));
        assert_eq!(i.operands[1].ty, TypeRef::Int(8));
        assert_eq!(i.indices(), &[1]);
    }

    #[test]
    fn parses_ret_void() {
        let i = parse_instruction("ret void").unwrap();
        assert_eq!(i.opcode, Opcode::Ret);
        assert!(i.operands.is_empty());
    }

    #[test]
    fn parses_gep_indices() {
        let i = parse_instruction("%p = getelementptr inbounds %ST, %ST* %s, i64 1, i32 2, i32 1, i64 5, i64 13").unwrap();
        assert_eq!(i.opcode, Opcode::GetElementPtr);
        assert_eq!(i.operands.len(), 6);
        let indices: Vec<_> = i.operands[1..].iter().map(|o| o.as_int().unwrap()).collect();
        assert_eq!(indices, vec![1, 2, 1, 5, 13]);
        assert_eq!(i.type_args[0], TypeRef::Named("ST".into()));
    }

    #[test]
    fn unsupported_opcode_is_reported() {
        assert_eq!(
            parse_instruction("%x = frobnicate i32 %a"),
            Err(InstrError::UnsupportedOpcode("frobnicate".into()))
        );
    }

    #[test]
    fn malformed_operand_reports_offset() {
        match parse_instruction("%c = add i32 %a,") {
            Err(InstrError::MalformedOperand { offset, .. }) => assert_eq!(offset, 16),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_phi_and_switch() {
        let i = parse_instruction("%b = phi i32 [%a, %BB1], [%argc, %BB2]").unwrap();
        match &i.detail {
            Detail::Phi(inc) => {
                assert_eq!(inc.len(), 2);
                assert_eq!(inc[0].1, "BB1");
                assert_eq!(inc[1].0.as_local(), Some("argc"));
            }
            d => panic!("{d:?}"),
        }
        let s = parse_instruction("switch i32 %x, label %d [i32 0, label %a]").unwrap();
        assert_eq!(s.successors(), vec!["d".to_string(), "a".to_string()]);
    }

    #[test]
    fn parses_calls_in_various_shapes() {
        let i = parse_instruction("%r = tail call noundef i32 (ptr, ...) @printf(ptr noundef nonnull @.str, i32 %x) #3").unwrap();
        assert!(matches!(&i.detail, Detail::Call { callee: Callee::Global(n), .. } if n == "printf"));
        assert_eq!(i.operands.len(), 2);
        assert_eq!(i.result_type, TypeRef::Int(32));
        let j = parse_instruction("call void @llvm.dbg.value(metadata i32 %x, metadata !12, metadata !DIExpression())").unwrap();
        assert_eq!(j.operands.len(), 3);
        let k = parse_instruction("%r = invoke i32 @f(i32 1) to label %ok unwind label %ex").unwrap();
        assert_eq!(k.successors(), vec!["ok".to_string(), "ex".to_string()]);
    }

    #[test]
    fn parses_nested_constant_expression() {
        let i = parse_instruction("%r = call i32 @SSL_CTX_set_cipher_list(i8* %ctx, i8* getelementptr inbounds ([16 x i8], [16 x i8]* @.str, i64 0, i64 0))").unwrap();
        let arg = &i.operands[1];
        match &arg.kind {
            OperandKind::ConstExpr(ce) => {
                assert_eq!(ce.opcode, Opcode::GetElementPtr);
                assert_eq!(ce.operands.len(), 3);
            }
            k => panic!("{k:?}"),
        }
        assert_eq!(arg.const_depth(), 1);
    }

    #[test]
    fn too_deep_constant_becomes_opaque() {
        let mut v = "i64 1".to_string();
        for _ in 0..9 {
            v = format!("i64 add (i64 0, {v})");
        }
        let src = format!("%r = add {v}, 1");
        let i = parse_instruction(&src).unwrap();
        // The outermost eight levels parse; the ninth is opaque.
        fn find_opaque(op: &IrOperand) -> bool {
            match &op.kind {
                OperandKind::Opaque(_) => true,
                OperandKind::ConstExpr(ce) => ce.operands.iter().any(find_opaque),
                _ => false,
            }
        }
        assert!(find_opaque(&i.operands[0]));
        assert_eq!(i.operands[0].const_depth(), MAX_CONST_DEPTH);
    }

    #[test]
    fn float_literals() {
        assert_eq!(parse_float_literal("0x3FF0000000000000", &TypeRef::Float(FloatKind::Double)), Some(1.0));
        assert!(parse_float_literal("0x7FF8000000000000", &TypeRef::Float(FloatKind::Float)).unwrap().is_nan());
        assert_eq!(parse_float_literal("0xH3C00", &TypeRef::Float(FloatKind::Half)), Some(1.0));
        assert_eq!(parse_float_literal("-0.0", &TypeRef::Float(FloatKind::Double)).map(f64::to_bits), Some((-0.0f64).to_bits()));
    }

    #[test]
    fn main_with_typed_pointer_params() {
        let src = "define i32 @main(i32 %argc, i8** %argv) {\n  ret i32 0\n}\n";
        let (m, report) = parse_module(src, "t.ll").unwrap();
        assert!(report.diagnostics.is_empty(), "{:?}", report.diagnostics);
        let f = &m.functions[0];
        assert_eq!(f.name, "main");
        assert_eq!(f.params, vec![("argc".to_string(), TypeRef::Int(32)), ("argv".to_string(), TypeRef::ptr_to(TypeRef::ptr_to(TypeRef::Int(8))))]);
        assert_eq!(f.blocks[0].label, "0");
    }

    #[test]
    fn unbalanced_braces_are_fatal() {
        assert!(matches!(parse_module("define void @f() {\n ret void\n", "x"), Err(ParseError::Unclosed { line: 1 })));
        assert!(matches!(parse_module("}\n", "x"), Err(ParseError::UnmatchedClose { line: 1 })));
    }

    #[test]
    fn unknown_instruction_is_opaque_with_diagnostic() {
        let src = "define void @f() {\n  %x = frobnicate i32 1, 2\n  ret void\n}\n";
        let (m, report) = parse_module(src, "x").unwrap();
        let i = &m.functions[0].blocks[0].instructions[0];
        assert_eq!(i.opcode, Opcode::Opaque);
        assert_eq!(i.mnemonic, "frobnicate");
        assert_eq!(i.raw_text, "%x = frobnicate i32 1, 2");
        assert_eq!(report.diagnostics.len(), 1);
        assert_eq!(report.diagnostics[0].location.line, 2);
    }

    #[test]
    fn duplicate_definition_is_renamed() {
        let src = "define i32 @f(i32 %a) {\n  %x = add i32 %a, 1\n  %x = add i32 %a, 2\n  ret i32 %x\n}\n";
        let (m, report) = parse_module(src, "x").unwrap();
        let names: Vec<_> = m.functions[0].instructions().filter_map(|i| i.result_name.clone()).collect();
        assert_eq!(names.len(), 2);
        assert_ne!(names[0], names[1]);
        assert_eq!(report.errors().count(), 1);
    }
}
