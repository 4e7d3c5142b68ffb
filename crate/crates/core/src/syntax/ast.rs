// SPDX-License-Identifier: Apache-2.0

//! Syntax trees for `.til` and `.til-test` sources.

use std::fmt;

use crate::diagnostic::Span;
use crate::ident::{Identifier, NamespacePath};
use crate::ir::Mode;
use crate::logical::{Direction, Synchronicity, Throughput};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SourceFile {
    pub namespaces: Vec<NamespaceDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NamespaceDecl {
    pub path: NamespacePath,
    pub decls: Vec<Decl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Decl {
    Type(TypeDecl),
    Interface(InterfaceDecl),
    Implementation(ImplDecl),
    Streamlet(StreamletDecl),
}

impl Decl {
    pub fn name(&self) -> &Identifier {
        match self {
            Decl::Type(d) => &d.name,
            Decl::Interface(d) => &d.name,
            Decl::Implementation(d) => &d.name,
            Decl::Streamlet(d) => &d.name,
        }
    }

    pub fn span(&self) -> &Span {
        match self {
            Decl::Type(d) => &d.span,
            Decl::Interface(d) => &d.span,
            Decl::Implementation(d) => &d.span,
            Decl::Streamlet(d) => &d.span,
        }
    }
}

/// A reference to a named declaration, optionally qualified by namespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathRef {
    pub namespace: Option<NamespacePath>,
    pub name: Identifier,
    pub span: Span,
}

impl fmt::Display for PathRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(ns) = &self.namespace {
            write!(f, "{ns}::")?;
        }
        write!(f, "{}", self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeDecl {
    pub name: Identifier,
    pub ty: TypeExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeExpr {
    pub kind: TypeKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeKind {
    Ref(PathRef),
    Null,
    /// Width as written; zero is rejected during resolution.
    Bits(u64),
    Group(Vec<FieldExpr>),
    Union(Vec<FieldExpr>),
    Stream(Box<StreamExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldExpr {
    pub name: Identifier,
    pub ty: TypeExpr,
    pub span: Span,
}

/// Stream properties as written; absent ones take their defaults.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamExpr {
    pub data: TypeExpr,
    pub throughput: Option<Throughput>,
    pub dimensionality: Option<u64>,
    pub synchronicity: Option<Synchronicity>,
    pub complexity: Option<u64>,
    pub direction: Option<Direction>,
    pub user: Option<TypeExpr>,
    pub keep: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InterfaceDecl {
    pub doc: Option<String>,
    pub name: Identifier,
    pub iface: InterfaceExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum InterfaceExpr {
    /// Another interface, or a streamlet subsetted to its interface.
    Ref(PathRef),
    Inline {
        domains: Vec<DomainDecl>,
        ports: Vec<PortDecl>,
        span: Span,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DomainDecl {
    pub name: Identifier,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PortDecl {
    pub doc: Option<String>,
    pub name: Identifier,
    pub mode: Mode,
    pub domain: Option<Identifier>,
    pub ty: TypeExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImplDecl {
    pub doc: Option<String>,
    pub name: Identifier,
    pub iface: InterfaceExpr,
    pub body: ImplBody,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamletDecl {
    pub doc: Option<String>,
    pub name: Identifier,
    pub iface: InterfaceExpr,
    pub body: Option<ImplBody>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ImplBody {
    Link { path: String, span: Span },
    Ref(PathRef),
    Structural(Vec<Statement>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Statement {
    Instance(InstanceDecl),
    Connection(ConnectionDecl),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InstanceDecl {
    pub name: Identifier,
    pub streamlet: PathRef,
    pub domains: Vec<DomainAssign>,
    pub span: Span,
}

/// `'inner = 'outer`, or just `'outer` for an instance's default domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DomainAssign {
    pub inner: Option<Identifier>,
    pub outer: Identifier,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConnectionDecl {
    pub a: Endpoint,
    pub b: Endpoint,
    pub span: Span,
}

/// `port`, `self.port` or `instance.port`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub instance: Option<Identifier>,
    pub port: Identifier,
    pub span: Span,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.instance {
            Some(i) => write!(f, "{i}.{}", self.port),
            None => write!(f, "{}", self.port),
        }
    }
}

// ---------------------------------------------------------------------------
// transaction tests

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestFile {
    pub items: Vec<TestItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestItem {
    Assertion(Assertion),
    Sequence(SequenceDecl),
}

/// `streamlet.port[.field...] = <data>;`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub target: Vec<Identifier>,
    pub value: DataExpr,
    pub span: Span,
}

impl Assertion {
    pub fn target_string(&self) -> String {
        self.target.iter().map(Identifier::as_str).collect::<Vec<_>>().join(".")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceDecl {
    pub name: String,
    pub stages: Vec<Stage>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub name: String,
    pub assertions: Vec<Assertion>,
    pub span: Span,
}

/// A string of `0`/`1` characters, most significant bit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(String);

impl BitString {
    pub fn new(text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        text.bytes().all(|b| b == b'0' || b == b'1').then_some(BitString(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\"", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataExpr {
    /// A single element.
    Bits(BitString),
    /// `( ... )`: successive values sent in order.
    ElementSeq(Vec<DataExpr>),
    /// `[ ... ]`: one level of sequence nesting.
    DimSeq(Vec<DataExpr>),
    /// `{ name: ..., }`: values for the child streams of one port.
    FieldMap(Vec<(Identifier, DataExpr)>),
}

impl fmt::Display for DataExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, open: &str, close: &str, items: &[DataExpr]) -> fmt::Result {
            f.write_str(open)?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{item}")?;
            }
            f.write_str(close)
        }
        match self {
            DataExpr::Bits(b) => write!(f, "{b}"),
            DataExpr::ElementSeq(items) => list(f, "(", ")", items),
            DataExpr::DimSeq(items) => list(f, "[", "]", items),
            DataExpr::FieldMap(fields) => {
                f.write_str("{ ")?;
                for (i, (name, value)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{name}: {value}")?;
                }
                f.write_str(" }")
            }
        }
    }
}
