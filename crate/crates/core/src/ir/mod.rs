//! Textual LLVM-IR: lexer, parser and the AST they produce.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod types;

pub use ast::*;
pub use parser::{parse_instruction, parse_module, parse_type, Diagnostic, InstrError, ParseError, ParseReport, Severity};
pub use types::{FloatKind, TypeRef};
