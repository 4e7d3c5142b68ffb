// SPDX-License-Identifier: Apache-2.0

//! TIL front end: lexer, parser and canonical printer.

pub mod ast;
mod lexer;
mod parser;
mod printer;

pub use parser::{parse_tests, parse_til};
pub use printer::pretty_print;
