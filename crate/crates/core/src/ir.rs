// SPDX-License-Identifier: Apache-2.0

//! Resolved declarations: interfaces, ports, streamlets and implementations.
//! Type references are already substituted by their definitions here.

use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;

use crate::diagnostic::Span;
use crate::ident::{Identifier, NamespacePath};
use crate::logical::LogicalType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    In,
    Out,
}

impl Mode {
    pub fn flip(self) -> Mode {
        match self {
            Mode::In => Mode::Out,
            Mode::Out => Mode::In,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Mode::In => "in",
            Mode::Out => "out",
        }
    }
}

/// A clock/reset domain. Interfaces without declared domains put every port
/// in the implicit default domain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Domain {
    Default,
    Named(Identifier),
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Default => f.write_str("default"),
            Domain::Named(n) => write!(f, "'{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Port {
    pub name: Identifier,
    pub mode: Mode,
    pub stream_type: LogicalType,
    pub domain: Domain,
    pub documentation: Option<String>,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Interface {
    pub domains: Vec<Identifier>,
    pub ports: Vec<Port>,
    pub documentation: Option<String>,
}

impl Interface {
    pub fn port(&self, name: &Identifier) -> Option<&Port> {
        self.ports.iter().find(|p| &p.name == name)
    }

    /// The domains clock/reset pairs are generated for, in declaration order.
    pub fn clock_domains(&self) -> Vec<Domain> {
        if self.domains.is_empty() {
            vec![Domain::Default]
        } else {
            self.domains.iter().cloned().map(Domain::Named).collect()
        }
    }

    /// Interface equality ignoring documentation.
    pub fn same_shape(&self, other: &Interface) -> bool {
        self.domains == other.domains
            && self.ports.len() == other.ports.len()
            && self.ports.iter().zip(&other.ports).all(|(a, b)| {
                a.name == b.name
                    && a.mode == b.mode
                    && a.stream_type == b.stream_type
                    && a.domain == b.domain
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Streamlet {
    pub namespace: NamespacePath,
    pub name: Identifier,
    pub interface: Interface,
    pub implementation: Option<Implementation>,
    pub documentation: Option<String>,
    #[serde(skip)]
    pub span: Span,
}

impl Streamlet {
    /// The streamlet subsetted to its interface.
    pub fn interface_of(&self) -> Interface {
        self.interface.clone()
    }

    /// Documentation shown on generated components: the streamlet's own, or
    /// its interface's when it has none.
    pub fn effective_documentation(&self) -> Option<&str> {
        self.documentation
            .as_deref()
            .or(self.interface.documentation.as_deref())
    }

    pub fn qualified_name(&self) -> String {
        format!("{}::{}", self.namespace, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Implementation {
    pub kind: ImplementationKind,
    pub documentation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum ImplementationKind {
    Structural(Structure),
    /// A directory holding the behavior in the target language.
    Linked(LinkedPath),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LinkedPath {
    pub path: String,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Structure {
    pub instances: IndexMap<Identifier, Instance>,
    pub connections: Vec<Connection>,
}

impl std::hash::Hash for Structure {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        for (k, v) in &self.instances {
            k.hash(state);
            v.hash(state);
        }
        self.connections.hash(state);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Instance {
    pub name: Identifier,
    pub namespace: NamespacePath,
    pub streamlet: Identifier,
    /// Instance domain to enclosing domain.
    pub domains: Vec<(Domain, Domain)>,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Connection {
    pub a: PortRef,
    pub b: PortRef,
    #[serde(skip)]
    pub span: Span,
}

/// One end of a connection: a port of the enclosing streamlet or of an instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PortRef {
    Own(Identifier),
    Instance(Identifier, Identifier),
}

impl PortRef {
    pub fn port(&self) -> &Identifier {
        match self {
            PortRef::Own(p) | PortRef::Instance(_, p) => p,
        }
    }

    pub fn instance(&self) -> Option<&Identifier> {
        match self {
            PortRef::Own(_) => None,
            PortRef::Instance(i, _) => Some(i),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortRef::Own(p) => write!(f, "{p}"),
            PortRef::Instance(i, p) => write!(f, "{i}.{p}"),
        }
    }
}
