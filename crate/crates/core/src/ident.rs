// SPDX-License-Identifier: Apache-2.0

//! Identifiers and namespace paths.
//!
//! Identifiers never start or end with an underscore and never contain two
//! consecutive underscores, so joining path segments with `__` can always be
//! undone.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdentifierError {
    #[error("identifier is empty")]
    Empty,
    #[error("identifier `{0}` must start with an ASCII letter")]
    BadStart(String),
    #[error("identifier `{0}` contains `{1}`, only ASCII letters, digits and `_` are allowed")]
    BadChar(String, char),
    #[error("identifier `{0}` must not end with `_`")]
    TrailingUnderscore(String),
    #[error("identifier `{0}` must not contain `__`")]
    DoubleUnderscore(String),
    #[error("namespace path must have at least one segment")]
    EmptyPath,
}

/// A validated name: `[A-Za-z][A-Za-z0-9_]*` without trailing or doubled `_`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Identifier(String);

impl Identifier {
    pub fn new(text: impl Into<String>) -> Result<Self, IdentifierError> {
        let text = text.into();
        let mut chars = text.chars();
        match chars.next() {
            None => return Err(IdentifierError::Empty),
            Some(c) if !c.is_ascii_alphabetic() => return Err(IdentifierError::BadStart(text)),
            Some(_) => {}
        }
        if let Some(c) = text.chars().find(|c| !(c.is_ascii_alphanumeric() || *c == '_')) {
            return Err(IdentifierError::BadChar(text, c));
        }
        if text.ends_with('_') {
            return Err(IdentifierError::TrailingUnderscore(text));
        }
        if text.contains("__") {
            return Err(IdentifierError::DoubleUnderscore(text));
        }
        Ok(Identifier(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for Identifier {
    type Err = IdentifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Identifier::new(s)
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Identifier {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for Identifier {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

/// A namespace name such as `my::example::space`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NamespacePath(Vec<Identifier>);

impl NamespacePath {
    pub fn new(segments: Vec<Identifier>) -> Result<Self, IdentifierError> {
        if segments.is_empty() {
            return Err(IdentifierError::EmptyPath);
        }
        Ok(NamespacePath(segments))
    }

    pub fn segments(&self) -> &[Identifier] {
        &self.0
    }

    /// Segments joined with `__`, as used for generated HDL names.
    pub fn mangled(&self) -> String {
        self.0.iter().map(Identifier::as_str).collect::<Vec<_>>().join("__")
    }
}

impl FromStr for NamespacePath {
    type Err = IdentifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let segments = s
            .split("::")
            .map(Identifier::new)
            .collect::<Result<Vec<_>, _>>()?;
        NamespacePath::new(segments)
    }
}

impl fmt::Display for NamespacePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("::")?;
            }
            f.write_str(seg.as_str())?;
        }
        Ok(())
    }
}

impl Serialize for NamespacePath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Shorthand for building identifiers in tests and fixtures; panics on invalid input.
pub fn id(text: &str) -> Identifier {
    Identifier::new(text).unwrap_or_else(|e| panic!("{e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_plain_names() {
        for ok in ["a", "comp1", "TID", "snake_case_name", "x1_2"] {
            assert!(Identifier::new(ok).is_ok(), "{ok}");
        }
    }

    #[test]
    fn rejects_bad_names() {
        assert_eq!(Identifier::new(""), Err(IdentifierError::Empty));
        assert!(matches!(Identifier::new("_a"), Err(IdentifierError::BadStart(_))));
        assert!(matches!(Identifier::new("1a"), Err(IdentifierError::BadStart(_))));
        assert!(matches!(Identifier::new("a_"), Err(IdentifierError::TrailingUnderscore(_))));
        assert!(matches!(Identifier::new("a__b"), Err(IdentifierError::DoubleUnderscore(_))));
        assert!(matches!(Identifier::new("a-b"), Err(IdentifierError::BadChar(_, '-'))));
    }

    #[test]
    fn path_display_and_mangle() {
        let p: NamespacePath = "my::example::space".parse().unwrap();
        assert_eq!(p.to_string(), "my::example::space");
        assert_eq!(p.mangled(), "my__example__space");
        assert!("".parse::<NamespacePath>().is_err());
    }
}
