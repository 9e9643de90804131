//! Tokenizer for textual LLVM-IR.
//!
//! The lexer never fails: bytes it does not understand become `Tok::Unknown`
//! and are left for the parser to report.

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// `%name`, `%"quoted"`, `%12`
    Local(String),
    /// `@name`
    Global(String),
    /// `!name` or `!12`
    Meta(String),
    /// `#12`
    AttrGroup(String),
    /// `$name`
    Comdat(String),
    /// Bare word: keywords, types, opcodes.
    Word(String),
    /// `name:` or `12:` or `"quoted":` at the start of a block.
    LabelDef(String),
    Int(String),
    /// Decimal float (`1.0e3`) or hex float (`0x3FF0...`, `0xH3C00`).
    Float(String),
    /// `"..."` with escapes decoded.
    Str(Vec<u8>),
    /// `c"..."`
    CStr(Vec<u8>),
    Punct(char),
    Ellipsis,
    Unknown(char),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl Token {
    pub fn is_punct(&self, c: char) -> bool {
        self.tok == Tok::Punct(c)
    }

    pub fn is_word(&self, w: &str) -> bool {
        matches!(&self.tok, Tok::Word(x) if x == w)
    }
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, b'-' | b'$' | b'.' | b'_')
}

pub fn tokenize(src: &str) -> Vec<Token> {
    Lexer {
        src: src.as_bytes(),
        text: src,
        pos: 0,
        line: 1,
        line_start: 0,
    }
    .run()
}

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    line: u32,
    line_start: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn run(mut self) -> Vec<Token> {
        let mut out = Vec::new();
        while let Some(c) = self.peek(0) {
            match c {
                b'\n' => {
                    self.pos += 1;
                    self.line += 1;
                    self.line_start = self.pos;
                }
                b' ' | b'\t' | b'\r' => self.pos += 1,
                b';' => {
                    while let Some(c) = self.peek(0) {
                        if c == b'\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                _ => {
                    let start = self.pos;
                    let line = self.line;
                    let column = (start - self.line_start) as u32 + 1;
                    let tok = self.lex_one();
                    out.push(Token {
                        tok,
                        start,
                        end: self.pos,
                        line,
                        column,
                    });
                }
            }
        }
        out
    }

    fn lex_one(&mut self) -> Tok {
        let c = self.src[self.pos];
        match c {
            b'%' | b'@' | b'!' | b'#' | b'$' => {
                self.pos += 1;
                match self.lex_name() {
                    Some(name) => match c {
                        b'%' => Tok::Local(name),
                        b'@' => Tok::Global(name),
                        b'!' => Tok::Meta(name),
                        b'#' => Tok::AttrGroup(name),
                        _ => Tok::Comdat(name),
                    },
                    None if c == b'!' => Tok::Punct('!'),
                    None => Tok::Unknown(c as char),
                }
            }
            b'"' => {
                let s = self.lex_string();
                if self.peek(0) == Some(b':') {
                    self.pos += 1;
                    Tok::LabelDef(String::from_utf8_lossy(&s).into_owned())
                } else {
                    Tok::Str(s)
                }
            }
            b'.' if self.peek(1) == Some(b'.') && self.peek(2) == Some(b'.') => {
                self.pos += 3;
                Tok::Ellipsis
            }
            b'-' | b'+' | b'0'..=b'9' => self.lex_number_or_label(),
            b'=' | b',' | b'(' | b')' | b'[' | b']' | b'{' | b'}' | b'<' | b'>' | b'*' | b':' | b'|' => {
                self.pos += 1;
                Tok::Punct(c as char)
            }
            c if c.is_ascii_alphabetic() || c == b'_' || c == b'.' || c == b'$' => {
                if c == b'c' && self.peek(1) == Some(b'"') {
                    self.pos += 1;
                    return Tok::CStr(self.lex_string());
                }
                let start = self.pos;
                while self.peek(0).is_some_and(is_ident_char) {
                    self.pos += 1;
                }
                let word = self.text[start..self.pos].to_string();
                if self.peek(0) == Some(b':') {
                    self.pos += 1;
                    Tok::LabelDef(word)
                } else {
                    Tok::Word(word)
                }
            }
            _ => {
                // Advance over a whole UTF-8 scalar so slices stay on char boundaries.
                let ch = self.text[self.pos..].chars().next().unwrap_or('?');
                self.pos += ch.len_utf8();
                Tok::Unknown(ch)
            }
        }
    }

    fn lex_name(&mut self) -> Option<String> {
        if self.peek(0) == Some(b'"') {
            let s = self.lex_string();
            return Some(String::from_utf8_lossy(&s).into_owned());
        }
        let start = self.pos;
        while self.peek(0).is_some_and(is_ident_char) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.text[start..self.pos].to_string())
    }

    /// Lexes `"..."` starting at the opening quote; `\XX` hex escapes and `\\` are decoded.
    fn lex_string(&mut self) -> Vec<u8> {
        self.pos += 1;
        let mut out = Vec::new();
        while let Some(c) = self.peek(0) {
            self.pos += 1;
            match c {
                b'"' => return out,
                b'\\' => {
                    if self.peek(0) == Some(b'\\') {
                        self.pos += 1;
                        out.push(b'\\');
                    } else {
                        let hex = (self.peek(0), self.peek(1));
                        match hex {
                            (Some(h), Some(l)) if h.is_ascii_hexdigit() && l.is_ascii_hexdigit() => {
                                let v = u8::from_str_radix(&self.text[self.pos..self.pos + 2], 16).unwrap_or(0);
                                out.push(v);
                                self.pos += 2;
                            }
                            _ => out.push(b'\\'),
                        }
                    }
                }
                b'\n' => {
                    self.line += 1;
                    self.line_start = self.pos;
                    out.push(c);
                }
                _ => out.push(c),
            }
        }
        out
    }

    fn lex_number_or_label(&mut self) -> Tok {
        let start = self.pos;
        if self.peek(0) == Some(b'0') && matches!(self.peek(1), Some(b'x') | Some(b'X')) {
            self.pos += 2;
            while self.peek(0).is_some_and(|c| c.is_ascii_alphanumeric()) {
                self.pos += 1;
            }
            return Tok::Float(self.text[start..self.pos].to_string());
        }
        if matches!(self.peek(0), Some(b'-') | Some(b'+')) {
            self.pos += 1;
            if !self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                // `-` alone, or `-inf`-style words the parser does not need.
                return Tok::Unknown(self.src[start] as char);
            }
        }
        while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let mut is_float = false;
        if self.peek(0) == Some(b'.') && self.peek(1).is_some_and(|c| c.is_ascii_digit() || c == b'e' || c == b'E') {
            is_float = true;
            self.pos += 1;
            while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        } else if self.peek(0) == Some(b'.') && !self.peek(1).is_some_and(is_ident_char) {
            is_float = true;
            self.pos += 1;
        }
        if is_float && matches!(self.peek(0), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(0), Some(b'-') | Some(b'+')) {
                self.pos += 1;
            }
            if self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = self.text[start..self.pos].to_string();
        if is_float {
            Tok::Float(text)
        } else if self.peek(0) == Some(b':') && !text.starts_with(['-', '+']) {
            self.pos += 1;
            Tok::LabelDef(text)
        } else {
            Tok::Int(text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_instruction_line() {
        assert_eq!(
            toks("%b = insertvalue {i32, i8} %a, i8 7, 1 ; comment"),
            vec![
                Tok::Local("b".into()),
                Tok::Punct('='),
                Tok::Word("insertvalue".into()),
                Tok::Punct('{'),
                Tok::Word("i32".into()),
                Tok::Punct(','),
                Tok::Word("i8".into()),
                Tok::Punct('}'),
                Tok::Local("a".into()),
                Tok::Punct(','),
                Tok::Word("i8".into()),
                Tok::Int("7".into()),
                Tok::Punct(','),
                Tok::Int("1".into()),
            ]
        );
    }

    #[test]
    fn lexes_labels_strings_and_floats() {
        assert_eq!(toks("BB1:"), vec![Tok::LabelDef("BB1".into())]);
        assert_eq!(toks("12:"), vec![Tok::LabelDef("12".into())]);
        assert_eq!(toks(r#"c"MD5\00""#), vec![Tok::CStr(b"MD5\0".to_vec())]);
        assert_eq!(toks("-0.0 1.5e+3 0x7FF8000000000000"), vec![
            Tok::Float("-0.0".into()),
            Tok::Float("1.5e+3".into()),
            Tok::Float("0x7FF8000000000000".into()),
        ]);
        assert_eq!(toks("%\"odd name\" ..."), vec![Tok::Local("odd name".into()), Tok::Ellipsis]);
    }

    #[test]
    fn tracks_lines_and_columns() {
        let t = tokenize("a\n  b");
        assert_eq!((t[1].line, t[1].column), (2, 3));
    }

    #[test]
    fn never_panics_on_garbage() {
        let _ = tokenize("\u{1F600} %\" @ ! -x 0x \\ \"unterminated");
    }
}
