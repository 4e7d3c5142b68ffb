// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for TIL and the transaction test syntax.
//!
//! Errors inside a declaration are reported and parsing resumes after the next
//! `;` (or before the next `}`) at the same nesting level, so one run reports
//! every independent mistake.

use crate::diagnostic::{codes, Diagnostic, Span};
use crate::ident::{Identifier, NamespacePath};
use crate::ir::Mode;
use crate::logical::{Direction, Synchronicity, Throughput};

use super::ast::*;
use super::lexer::{lex, Tok, Token};

type PResult<T> = Result<T, Diagnostic>;

/// Parses a `.til` source.
pub fn parse_til(file: &str, src: &str) -> (SourceFile, Vec<Diagnostic>) {
    let (tokens, diags) = lex(file.into(), src);
    let mut p = Parser { toks: tokens, pos: 0, diags };
    let file = p.source_file();
    (file, p.diags)
}

/// Parses a `.til-test` source.
pub fn parse_tests(file: &str, src: &str) -> (TestFile, Vec<Diagnostic>) {
    let (tokens, diags) = lex(file.into(), src);
    let mut p = Parser { toks: tokens, pos: 0, diags };
    let file = p.test_file();
    (file, p.diags)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span.clone()
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> Diagnostic {
        let found = self.peek().to_string();
        let message = match expected {
            [one] => format!("expected {one}, found {found}"),
            many => format!("expected one of {}, found {found}", many.join(", ")),
        };
        Diagnostic::error(codes::SYNTAX, message).with_span(&self.span())
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if self.at(&tok) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&tok.to_string()]))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<Span> {
        if self.at_keyword(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&format!("`{kw}`")]))
        }
    }

    fn ident(&mut self) -> PResult<(Identifier, Span)> {
        match self.peek().clone() {
            Tok::Ident(text) => {
                let span = self.span();
                match Identifier::new(text) {
                    Ok(id) => {
                        self.bump();
                        Ok((id, span))
                    }
                    Err(e) => Err(Diagnostic::error(codes::SYNTAX, e.to_string()).with_span(&span)),
                }
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn domain_name(&mut self) -> PResult<(Identifier, Span)> {
        match self.peek().clone() {
            Tok::Domain(text) => {
                let span = self.span();
                let id = Identifier::new(text)
                    .map_err(|e| Diagnostic::error(codes::SYNTAX, e.to_string()).with_span(&span))?;
                self.bump();
                Ok((id, span))
            }
            _ => Err(self.unexpected(&["domain (`'name`)"])),
        }
    }

    fn integer(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Number(text) if !text.contains('.') => {
                let span = self.span();
                let v = text.parse::<u64>().map_err(|_| {
                    Diagnostic::error(codes::SYNTAX, format!("integer `{text}` is too large")).with_span(&span)
                })?;
                self.bump();
                Ok(v)
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    fn string(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Str(s) => Ok((s, self.bump().span)),
            _ => Err(self.unexpected(&["string"])),
        }
    }

    /// Optional documentation. Two blocks in a row are an error.
    fn doc(&mut self) -> PResult<Option<String>> {
        match self.peek().clone() {
            Tok::Doc(text) => {
                self.bump();
                if matches!(self.peek(), Tok::Doc(_)) {
                    return Err(Diagnostic::error(
                        codes::SYNTAX,
                        "documentation must directly precede its subject, found a second documentation block",
                    )
                    .with_span(&self.span()));
                }
                Ok(Some(text))
            }
            _ => Ok(None),
        }
    }

    /// Skips to just after the next `;`, or to the next unmatched `}`. The
    /// error may sit inside parentheses, so unmatched `)`/`]` are passed over.
    fn recover(&mut self) {
        let mut braces = 0u32;
        let mut parens = 0i32;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::LBrace => braces += 1,
                Tok::LParen | Tok::LBracket => parens += 1,
                Tok::RParen | Tok::RBracket => parens -= 1,
                Tok::RBrace => {
                    if braces == 0 {
                        return;
                    }
                    braces -= 1;
                }
                Tok::Semi if braces == 0 && parens <= 0 => {
                    self.bump();
                    return;
                }
                _ => {}
            }
            self.bump();
        }
    }

    /// Comma-separated items up to `close`, trailing comma allowed.
    fn list<T>(&mut self, close: &Tok, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut out = Vec::new();
        while !self.at(close) {
            out.push(item(self)?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        if !self.at(close) {
            return Err(self.unexpected(&["`,`", &close.to_string()]));
        }
        self.bump();
        Ok(out)
    }

    // -----------------------------------------------------------------------
    // declarations

    fn source_file(&mut self) -> SourceFile {
        let mut namespaces = Vec::new();
        while !self.at(&Tok::Eof) {
            if self.at_keyword("namespace") {
                match self.namespace() {
                    Ok(ns) => namespaces.push(ns),
                    Err(d) => {
                        self.diags.push(d);
                        self.skip_to_namespace();
                    }
                }
            } else {
                let d = self.unexpected(&["`namespace`"]);
                self.diags.push(d);
                self.bump();
                self.skip_to_namespace();
            }
        }
        SourceFile { namespaces }
    }

    fn skip_to_namespace(&mut self) {
        while !self.at(&Tok::Eof) && !self.at_keyword("namespace") {
            self.bump();
        }
    }

    fn namespace_path(&mut self) -> PResult<(NamespacePath, Span)> {
        let (first, start) = self.ident()?;
        let mut segs = vec![first];
        while self.eat(&Tok::PathSep) {
            segs.push(self.ident()?.0);
        }
        let span = start.to(&self.prev_span());
        Ok((NamespacePath::new(segs).expect("at least one segment"), span))
    }

    fn namespace(&mut self) -> PResult<NamespaceDecl> {
        let start = self.expect_keyword("namespace")?;
        let (path, _) = self.namespace_path()?;
        self.expect(Tok::LBrace)?;
        let mut decls = Vec::new();
        while !self.at(&Tok::RBrace) && !self.at(&Tok::Eof) {
            match self.decl() {
                Ok(d) => decls.push(d),
                Err(d) => {
                    self.diags.push(d);
                    self.recover();
                }
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(NamespaceDecl { path, decls, span: start.to(&self.prev_span()) })
    }

    fn decl(&mut self) -> PResult<Decl> {
        let doc_span = self.span();
        let doc = self.doc()?;
        let start = if doc.is_some() { doc_span } else { self.span() };
        if self.at_keyword("type") {
            if doc.is_some() {
                return Err(Diagnostic::error(codes::SYNTAX, "type declarations cannot carry documentation")
                    .with_span(&start));
            }
            self.bump();
            let (name, _) = self.ident()?;
            self.expect(Tok::Eq)?;
            let ty = self.type_expr()?;
            self.expect(Tok::Semi)?;
            Ok(Decl::Type(TypeDecl { name, ty, span: start.to(&self.prev_span()) }))
        } else if self.at_keyword("interface") {
            self.bump();
            let (name, _) = self.ident()?;
            self.expect(Tok::Eq)?;
            let iface = self.interface_expr()?;
            self.expect(Tok::Semi)?;
            Ok(Decl::Interface(InterfaceDecl { doc, name, iface, span: start.to(&self.prev_span()) }))
        } else if self.at_keyword("impl") {
            self.bump();
            let (name, _) = self.ident()?;
            self.expect(Tok::Eq)?;
            let iface = self.interface_expr()?;
            let body = self.impl_body()?;
            self.expect(Tok::Semi)?;
            Ok(Decl::Implementation(ImplDecl { doc, name, iface, body, span: start.to(&self.prev_span()) }))
        } else if self.at_keyword("streamlet") {
            self.bump();
            let (name, _) = self.ident()?;
            self.expect(Tok::Eq)?;
            let iface = self.interface_expr()?;
            let body = if self.at(&Tok::LBrace) { Some(self.impl_body()?) } else { None };
            self.expect(Tok::Semi)?;
            Ok(Decl::Streamlet(StreamletDecl { doc, name, iface, body, span: start.to(&self.prev_span()) }))
        } else {
            Err(self.unexpected(&["`type`", "`interface`", "`impl`", "`streamlet`"]))
        }
    }

    fn path_ref(&mut self) -> PResult<PathRef> {
        let (first, start) = self.ident()?;
        let mut segs = vec![first];
        while self.eat(&Tok::PathSep) {
            segs.push(self.ident()?.0);
        }
        let name = segs.pop().expect("nonempty");
        let namespace = if segs.is_empty() { None } else { NamespacePath::new(segs).ok() };
        Ok(PathRef { namespace, name, span: start.to(&self.prev_span()) })
    }

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        let start = self.span();
        let kind = match self.peek() {
            Tok::Ident(s) if s == "Null" => {
                self.bump();
                TypeKind::Null
            }
            Tok::Ident(s) if s == "Bits" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let width = self.integer()?;
                self.expect(Tok::RParen)?;
                TypeKind::Bits(width)
            }
            Tok::Ident(s) if s == "Group" || s == "Union" => {
                let is_group = s == "Group";
                self.bump();
                self.expect(Tok::LParen)?;
                let fields = self.list(&Tok::RParen, |p| {
                    let (name, fstart) = p.ident()?;
                    p.expect(Tok::Colon)?;
                    let ty = p.type_expr()?;
                    Ok(FieldExpr { name, ty, span: fstart.to(&p.prev_span()) })
                })?;
                if is_group {
                    TypeKind::Group(fields)
                } else {
                    TypeKind::Union(fields)
                }
            }
            Tok::Ident(s) if s == "Stream" => {
                self.bump();
                self.expect(Tok::LParen)?;
                TypeKind::Stream(Box::new(self.stream_props(&start)?))
            }
            Tok::Ident(_) => TypeKind::Ref(self.path_ref()?),
            _ => {
                return Err(self.unexpected(&["`Null`", "`Bits`", "`Group`", "`Union`", "`Stream`", "type name"]))
            }
        };
        Ok(TypeExpr { kind, span: start.to(&self.prev_span()) })
    }

    fn stream_props(&mut self, start: &Span) -> PResult<StreamExpr> {
        let mut data = None;
        let mut s = StreamExpr {
            data: TypeExpr { kind: TypeKind::Null, span: start.clone() },
            throughput: None,
            dimensionality: None,
            synchronicity: None,
            complexity: None,
            direction: None,
            user: None,
            keep: None,
        };
        let mut seen: Vec<String> = Vec::new();
        self.list(&Tok::RParen, |p| {
            let key_span = p.span();
            let key = match p.peek().clone() {
                Tok::Ident(k) => k,
                _ => return Err(p.unexpected(&["stream property"])),
            };
            if seen.contains(&key) {
                return Err(Diagnostic::error(codes::SYNTAX, format!("stream property `{key}` given twice"))
                    .with_span(&key_span));
            }
            p.bump();
            p.expect(Tok::Colon)?;
            match key.as_str() {
                "data" => data = Some(p.type_expr()?),
                "throughput" => s.throughput = Some(p.throughput()?),
                "dimensionality" => s.dimensionality = Some(p.integer()?),
                "synchronicity" => {
                    let v = match p.peek() {
                        Tok::Ident(v) if v == "Sync" => Synchronicity::Sync,
                        Tok::Ident(v) if v == "Flatten" => Synchronicity::Flatten,
                        Tok::Ident(v) if v == "Desync" => Synchronicity::Desync,
                        Tok::Ident(v) if v == "FlatDesync" => Synchronicity::FlatDesync,
                        _ => return Err(p.unexpected(&["`Sync`", "`Flatten`", "`Desync`", "`FlatDesync`"])),
                    };
                    p.bump();
                    s.synchronicity = Some(v);
                }
                "complexity" => s.complexity = Some(p.integer()?),
                "direction" => {
                    let v = match p.peek() {
                        Tok::Ident(v) if v == "Forward" => Direction::Forward,
                        Tok::Ident(v) if v == "Reverse" => Direction::Reverse,
                        _ => return Err(p.unexpected(&["`Forward`", "`Reverse`"])),
                    };
                    p.bump();
                    s.direction = Some(v);
                }
                "user" => s.user = Some(p.type_expr()?),
                "keep" => {
                    let v = match p.peek() {
                        Tok::Ident(v) if v == "true" => true,
                        Tok::Ident(v) if v == "false" => false,
                        _ => return Err(p.unexpected(&["`true`", "`false`"])),
                    };
                    p.bump();
                    s.keep = Some(v);
                }
                other => {
                    return Err(Diagnostic::error(codes::SYNTAX, format!("unknown stream property `{other}`"))
                        .with_span(&key_span))
                }
            }
            seen.push(key);
            Ok(())
        })?;
        match data {
            Some(d) => s.data = d,
            None => {
                return Err(Diagnostic::error(codes::SYNTAX, "Stream requires a `data` property")
                    .with_span(&start.to(&self.prev_span())))
            }
        }
        Ok(s)
    }

    fn throughput(&mut self) -> PResult<Throughput> {
        let span = self.span();
        let text = match self.peek().clone() {
            Tok::Number(t) => t,
            _ => return Err(self.unexpected(&["throughput"])),
        };
        self.bump();
        let bad = || Diagnostic::error(codes::SYNTAX, "throughput must be a positive number").with_span(&span);
        if self.eat(&Tok::Slash) {
            let denom = self.integer()?;
            let numer = text.parse::<u64>().map_err(|_| bad())?;
            return Throughput::new(numer, denom).map_err(|_| bad());
        }
        Throughput::from_decimal(&text).ok_or_else(bad)
    }

    fn interface_expr(&mut self) -> PResult<InterfaceExpr> {
        if !self.at(&Tok::LParen) {
            return Ok(InterfaceExpr::Ref(self.path_ref()?));
        }
        let start = self.bump().span;
        let mut domains = Vec::new();
        let mut ports = Vec::new();
        self.list(&Tok::RParen, |p| {
            if matches!(p.peek(), Tok::Domain(_)) {
                if !ports.is_empty() {
                    return Err(Diagnostic::error(codes::SYNTAX, "domains must be listed before ports")
                        .with_span(&p.span()));
                }
                let (name, span) = p.domain_name()?;
                domains.push(DomainDecl { name, span });
                return Ok(());
            }
            let doc_span = p.span();
            let doc = p.doc()?;
            let (name, name_span) = p.ident()?;
            let pstart = if doc.is_some() { doc_span } else { name_span };
            p.expect(Tok::Colon)?;
            let mode = if p.at_keyword("in") {
                Mode::In
            } else if p.at_keyword("out") {
                Mode::Out
            } else {
                return Err(p.unexpected(&["`in`", "`out`"]));
            };
            p.bump();
            let domain = if matches!(p.peek(), Tok::Domain(_)) { Some(p.domain_name()?.0) } else { None };
            let ty = p.type_expr()?;
            ports.push(PortDecl { doc, name, mode, domain, ty, span: pstart.to(&p.prev_span()) });
            Ok(())
        })?;
        Ok(InterfaceExpr::Inline { domains, ports, span: start.to(&self.prev_span()) })
    }

    fn impl_body(&mut self) -> PResult<ImplBody> {
        self.expect(Tok::LBrace)?;
        if let Tok::Str(_) = self.peek() {
            let (path, span) = self.string()?;
            self.expect(Tok::RBrace)?;
            return Ok(ImplBody::Link { path, span });
        }
        if self.at_keyword("impl") {
            self.bump();
            let r = self.path_ref()?;
            self.expect(Tok::RBrace)?;
            return Ok(ImplBody::Ref(r));
        }
        let mut stmts = Vec::new();
        while !self.at(&Tok::RBrace) && !self.at(&Tok::Eof) {
            match self.statement() {
                Ok(s) => stmts.push(s),
                Err(d) => {
                    self.diags.push(d);
                    self.recover();
                }
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(ImplBody::Structural(stmts))
    }

    fn statement(&mut self) -> PResult<Statement> {
        let start = self.span();
        if matches!(self.peek(), Tok::Doc(_)) {
            return Err(Diagnostic::error(codes::SYNTAX, "documentation is not allowed on structural statements")
                .with_span(&start));
        }
        if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Eq {
            let (name, _) = self.ident()?;
            self.bump();
            let streamlet = self.path_ref()?;
            let mut domains = Vec::new();
            if self.eat(&Tok::Lt) {
                domains = self.list(&Tok::Gt, |p| {
                    let (first, dstart) = p.domain_name()?;
                    if p.eat(&Tok::Eq) {
                        let (outer, _) = p.domain_name()?;
                        Ok(DomainAssign { inner: Some(first), outer, span: dstart.to(&p.prev_span()) })
                    } else {
                        Ok(DomainAssign { inner: None, outer: first, span: dstart })
                    }
                })?;
            }
            self.expect(Tok::Semi)?;
            return Ok(Statement::Instance(InstanceDecl { name, streamlet, domains, span: start.to(&self.prev_span()) }));
        }
        let a = self.endpoint()?;
        self.expect(Tok::Connect)?;
        let b = self.endpoint()?;
        self.expect(Tok::Semi)?;
        Ok(Statement::Connection(ConnectionDecl { a, b, span: start.to(&self.prev_span()) }))
    }

    fn endpoint(&mut self) -> PResult<Endpoint> {
        let (first, start) = self.ident()?;
        if self.eat(&Tok::Dot) {
            let (port, _) = self.ident()?;
            let instance = if first.as_str() == "self" { None } else { Some(first) };
            Ok(Endpoint { instance, port, span: start.to(&self.prev_span()) })
        } else {
            Ok(Endpoint { instance: None, port: first, span: start })
        }
    }

    // -----------------------------------------------------------------------
    // transaction tests

    fn test_file(&mut self) -> TestFile {
        let mut items = Vec::new();
        while !self.at(&Tok::Eof) {
            let item = if self.at_keyword("sequence") && matches!(self.peek_at(1), Tok::Str(_)) {
                self.sequence().map(TestItem::Sequence)
            } else {
                self.assertion().map(TestItem::Assertion)
            };
            match item {
                Ok(i) => items.push(i),
                Err(d) => {
                    self.diags.push(d);
                    self.recover();
                    if self.at(&Tok::RBrace) {
                        self.bump();
                    }
                }
            }
        }
        TestFile { items }
    }

    fn assertion(&mut self) -> PResult<Assertion> {
        let (first, start) = self.ident()?;
        let mut target = vec![first];
        while self.eat(&Tok::Dot) {
            target.push(self.ident()?.0);
        }
        if target.len() < 2 {
            return Err(self.unexpected(&["`.`"]));
        }
        self.expect(Tok::Eq)?;
        let value = self.data_expr()?;
        self.expect(Tok::Semi)?;
        Ok(Assertion { target, value, span: start.to(&self.prev_span()) })
    }

    fn sequence(&mut self) -> PResult<SequenceDecl> {
        let start = self.expect_keyword("sequence")?;
        let (name, _) = self.string()?;
        self.expect(Tok::LBrace)?;
        let stages = self.list(&Tok::RBrace, |p| {
            let (sname, sstart) = p.string()?;
            p.expect(Tok::Colon)?;
            p.expect(Tok::LBrace)?;
            let mut assertions = Vec::new();
            while !p.at(&Tok::RBrace) && !p.at(&Tok::Eof) {
                assertions.push(p.assertion()?);
            }
            p.expect(Tok::RBrace)?;
            Ok(Stage { name: sname, assertions, span: sstart.to(&p.prev_span()) })
        })?;
        self.expect(Tok::Semi)?;
        let span = start.to(&self.prev_span());
        for (i, stage) in stages.iter().enumerate() {
            if stages[..i].iter().any(|s| s.name == stage.name) {
                return Err(Diagnostic::error(
                    codes::SYNTAX,
                    format!("stage \"{}\" appears more than once in sequence \"{name}\"", stage.name),
                )
                .with_span(&stage.span));
            }
        }
        Ok(SequenceDecl { name, stages, span })
    }

    fn data_expr(&mut self) -> PResult<DataExpr> {
        match self.peek().clone() {
            Tok::Str(text) => {
                let span = self.bump().span;
                BitString::new(text.clone()).map(DataExpr::Bits).ok_or_else(|| {
                    Diagnostic::error(codes::SYNTAX, format!("\"{text}\" is not a bit string, only `0` and `1` are allowed"))
                        .with_span(&span)
                })
            }
            Tok::LParen => {
                self.bump();
                Ok(DataExpr::ElementSeq(self.list(&Tok::RParen, Self::data_expr)?))
            }
            Tok::LBracket => {
                self.bump();
                Ok(DataExpr::DimSeq(self.list(&Tok::RBracket, Self::data_expr)?))
            }
            Tok::LBrace => {
                self.bump();
                let fields = self.list(&Tok::RBrace, |p| {
                    let (name, _) = p.ident()?;
                    p.expect(Tok::Colon)?;
                    Ok((name, p.data_expr()?))
                })?;
                Ok(DataExpr::FieldMap(fields))
            }
            _ => Err(self.unexpected(&["bit string", "`(`", "`[`", "`{`"])),
        }
    }
}
