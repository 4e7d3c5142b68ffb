// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::sync::Arc;

use crate::diagnostic::{codes, Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Digits with an optional fractional part, kept as text.
    Number(String),
    Str(String),
    Doc(String),
    /// `'name`
    Domain(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    PathSep,
    Comma,
    Semi,
    Eq,
    Dot,
    Connect,
    Lt,
    Gt,
    Slash,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(s) => write!(f, "number `{s}`"),
            Tok::Str(s) => write!(f, "string \"{s}\""),
            Tok::Doc(_) => f.write_str("documentation"),
            Tok::Domain(s) => write!(f, "domain `'{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::PathSep => f.write_str("`::`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Connect => f.write_str("`--`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    src: &'a str,
    file: Arc<str>,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn mark(&self) -> (usize, u32, u32) {
        (self.pos, self.line, self.column)
    }

    fn span_from(&self, mark: (usize, u32, u32)) -> Span {
        Span {
            file: self.file.clone(),
            start: mark.0,
            end: self.pos,
            line: mark.1,
            column: mark.2,
        }
    }
}

/// Splits `src` into tokens. `//` comments are dropped, `#...#` documentation
/// is kept verbatim. Always ends with an `Eof` token.
pub fn lex(file: Arc<str>, src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor { src, file, pos: 0, line: 1, column: 1 };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = cur.peek() {
        let mark = cur.mark();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek2() == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let tok = match c {
            'A'..='Z' | 'a'..='z' | '_' => Tok::Ident(take_word(&mut cur)),
            '0'..='9' => {
                let mut text = take_while(&mut cur, |c| c.is_ascii_digit());
                if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                    text.push('.');
                    text.push_str(&take_while(&mut cur, |c| c.is_ascii_digit()));
                }
                Tok::Number(text)
            }
            '"' => {
                cur.bump();
                let mut text = String::new();
                let mut closed = false;
                while let Some(c) = cur.bump() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match cur.bump() {
                            Some(e) => text.push(e),
                            None => break,
                        },
                        '\n' => break,
                        c => text.push(c),
                    }
                }
                if !closed {
                    diags.push(
                        Diagnostic::error(codes::SYNTAX, "unterminated string literal")
                            .with_span(&cur.span_from(mark)),
                    );
                }
                Tok::Str(text)
            }
            '#' => {
                cur.bump();
                let start = cur.pos;
                let mut closed = false;
                while let Some(c) = cur.bump() {
                    if c == '#' {
                        closed = true;
                        break;
                    }
                }
                let end = if closed { cur.pos - 1 } else { cur.pos };
                if !closed {
                    diags.push(
                        Diagnostic::error(codes::SYNTAX, "unterminated documentation, expected closing `#`")
                            .with_span(&cur.span_from(mark)),
                    );
                }
                Tok::Doc(src[start..end].to_string())
            }
            '\'' => {
                cur.bump();
                if cur.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                    Tok::Domain(take_word(&mut cur))
                } else {
                    diags.push(
                        Diagnostic::error(codes::SYNTAX, "expected a domain name after `'`")
                            .with_span(&cur.span_from(mark)),
                    );
                    continue;
                }
            }
            '-' if cur.peek2() == Some('-') => {
                cur.bump();
                cur.bump();
                Tok::Connect
            }
            ':' if cur.peek2() == Some(':') => {
                cur.bump();
                cur.bump();
                Tok::PathSep
            }
            _ => {
                cur.bump();
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ':' => Tok::Colon,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '=' => Tok::Eq,
                    '.' => Tok::Dot,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    '/' => Tok::Slash,
                    other => {
                        diags.push(
                            Diagnostic::error(codes::SYNTAX, format!("unexpected character `{other}`"))
                                .with_span(&cur.span_from(mark)),
                        );
                        continue;
                    }
                }
            }
        };
        tokens.push(Token { tok, span: cur.span_from(mark) });
    }
    let end = cur.mark();
    tokens.push(Token { tok: Tok::Eof, span: cur.span_from(end) });
    (tokens, diags)
}

fn take_word(cur: &mut Cursor<'_>) -> String {
    take_while(cur, |c| c.is_ascii_alphanumeric() || c == '_')
}

fn take_while(cur: &mut Cursor<'_>, pred: impl Fn(char) -> bool) -> String {
    let start = cur.pos;
    while cur.peek().is_some_and(&pred) {
        cur.bump();
    }
    cur.src[start..cur.pos].to_string()
}
