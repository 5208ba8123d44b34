use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum TokKind {
    Name(String),
    /// A quoted atom; never treated as an operator.
    Quoted(String),
    Var(String),
    /// Decimal digits of a non-negative integer literal.
    Int(String),
    Punct(char),
    End,
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Tok {
    pub kind: TokKind,
    pub line: usize,
    pub col: usize,
    /// Whitespace or a comment precedes the token.
    pub layout_before: bool,
}

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:.?@#&$";

pub(crate) fn is_symbol_char(c: char) -> bool {
    SYMBOL_CHARS.contains(c)
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Tok>> {
    Lexer { chars: src.chars().collect(), pos: 0, line: 1, col: 1 }.run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax { line: self.line, col: self.col, message: message.into() }
    }

    /// Skips whitespace and comments; reports whether anything was skipped.
    fn skip_layout(&mut self) -> Result<bool> {
        let mut skipped = false;
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                    skipped = true;
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                    skipped = true;
                }
                Some('/') if self.peek_at(1) == Some('*') => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            Some('*') if self.peek() == Some('/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                            None => {
                                return Err(Error::Syntax { line, col, message: "unterminated block comment".into() })
                            }
                        }
                    }
                    skipped = true;
                }
                _ => return Ok(skipped),
            }
        }
    }

    fn run(mut self) -> Result<Vec<Tok>> {
        let mut toks = Vec::new();
        loop {
            let layout_before = self.skip_layout()?;
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                toks.push(Tok { kind: TokKind::Eof, line, col, layout_before });
                return Ok(toks);
            };
            let kind = if c.is_ascii_digit() {
                let mut digits = String::new();
                while let Some(d) = self.peek().filter(|d| d.is_ascii_digit()) {
                    digits.push(d);
                    self.bump();
                }
                TokKind::Int(digits)
            } else if c.is_alphabetic() || c == '_' {
                let mut name = String::new();
                while let Some(d) = self.peek().filter(|d| d.is_alphanumeric() || *d == '_') {
                    name.push(d);
                    self.bump();
                }
                if c.is_uppercase() || c == '_' {
                    TokKind::Var(name)
                } else {
                    TokKind::Name(name)
                }
            } else if c == '\'' || c == '"' {
                self.bump();
                TokKind::Quoted(self.quoted(c)?)
            } else if "()[]{},|".contains(c) {
                self.bump();
                TokKind::Punct(c)
            } else if c == '!' || c == ';' {
                self.bump();
                TokKind::Name(c.to_string())
            } else if is_symbol_char(c) {
                if c == '.' && self.peek_at(1).is_none_or(|n| n.is_whitespace() || n == '%') {
                    self.bump();
                    TokKind::End
                } else {
                    let mut name = String::new();
                    while let Some(d) = self.peek().filter(|d| is_symbol_char(*d)) {
                        name.push(d);
                        self.bump();
                    }
                    TokKind::Name(name)
                }
            } else {
                return Err(self.error(format!("unexpected character {c:?}")));
            };
            toks.push(Tok { kind, line, col, layout_before });
        }
    }

    fn quoted(&mut self, quote: char) -> Result<String> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error("unterminated quoted atom")),
                Some(c) if c == quote => {
                    if self.peek() == Some(quote) {
                        self.bump();
                        out.push(quote);
                    } else {
                        return Ok(out);
                    }
                }
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('\\') => out.push('\\'),
                    Some('\'') => out.push('\''),
                    Some('"') => out.push('"'),
                    Some('\n') => {}
                    Some(other) => return Err(self.error(format!("unknown escape \\{other}"))),
                    None => return Err(self.error("unterminated quoted atom")),
                },
                Some(c) => out.push(c),
            }
        }
    }
}
