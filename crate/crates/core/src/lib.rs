// SPDX-License-Identifier: Apache-2.0

//! A compiler for TIL, an intermediate representation of typed streaming
//! dataflow components.
//!
//! The pipeline is: [`syntax`] parses sources into declarations, [`db`] stores
//! them and answers memoized queries, [`lower`] splits logical streams into
//! physical ones, [`check`] validates interfaces and structure,
//! [`transactions`] turns test assertions into transfer plans, and [`vhdl`]
//! emits components and architectures.

pub mod check;
pub mod db;
pub mod diagnostic;
pub mod ident;
pub mod ir;
pub mod logical;
pub mod lower;
pub mod syntax;
pub mod transactions;
pub mod vhdl;

pub use diagnostic::{Diagnostic, Severity, Span};
pub use ident::{Identifier, NamespacePath};
pub use logical::{type_eq, Complexity, Direction, LogicalType, StreamProps, Synchronicity, Throughput};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
