// SPDX-License-Identifier: Apache-2.0

//! The five logical types and the properties of `Stream`.

use std::collections::HashSet;
use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::ident::Identifier;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("Bits width must be at least 1")]
    ZeroWidth,
    #[error("field `{0}` is declared more than once")]
    DuplicateField(Identifier),
    #[error("Union must have at least one field")]
    EmptyUnion,
    #[error("user type must not contain a Stream")]
    UserHasStream,
    #[error("type contains a Stream and has no element width")]
    NotElement,
    #[error("complexity must be between 1 and 8, got {0}")]
    Complexity(u64),
    #[error("throughput must be a positive rational")]
    Throughput,
}

/// A logical type tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum LogicalType {
    Null,
    Bits(u32),
    Group(Vec<(Identifier, LogicalType)>),
    Union(Vec<(Identifier, LogicalType)>),
    Stream(Box<StreamProps>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Synchronicity {
    Sync,
    Flatten,
    Desync,
    FlatDesync,
}

impl Synchronicity {
    /// Whether a child stream with this synchronicity keeps the parent's `last` dimensions.
    pub fn inherits_dimensions(self) -> bool {
        matches!(self, Synchronicity::Sync | Synchronicity::Desync)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Synchronicity::Sync => "Sync",
            Synchronicity::Flatten => "Flatten",
            Synchronicity::Desync => "Desync",
            Synchronicity::FlatDesync => "FlatDesync",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn is_reverse(self) -> bool {
        self == Direction::Reverse
    }

    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Reverse,
            Direction::Reverse => Direction::Forward,
        }
    }

    /// Composes a child direction onto an accumulated one.
    pub fn then(self, child: Direction) -> Self {
        if child.is_reverse() {
            self.flip()
        } else {
            self
        }
    }
}

/// Complexity level, 1 through 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Complexity(u8);

impl Complexity {
    pub const MIN: Complexity = Complexity(1);
    pub const MAX: Complexity = Complexity(8);

    pub fn new(level: u64) -> Result<Self, TypeError> {
        if (1..=8).contains(&level) {
            Ok(Complexity(level as u8))
        } else {
            Err(TypeError::Complexity(level))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Complexity> {
        (1..=8).map(Complexity)
    }
}

impl Default for Complexity {
    fn default() -> Self {
        Complexity::MIN
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Elements per handshake relative to the parent stream, kept as an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Throughput(Ratio<u64>);

impl Throughput {
    pub const ONE: Throughput = Throughput(Ratio::new_raw(1, 1));

    pub fn new(numer: u64, denom: u64) -> Result<Self, TypeError> {
        if numer == 0 || denom == 0 {
            return Err(TypeError::Throughput);
        }
        Ok(Throughput(Ratio::new(numer, denom)))
    }

    pub fn integer(n: u64) -> Result<Self, TypeError> {
        Throughput::new(n, 1)
    }

    /// Parses `128`, `128.0` or `0.25` exactly. Returns `None` for malformed or
    /// non-positive input.
    pub fn from_decimal(text: &str) -> Option<Self> {
        let (int, frac) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) || (text.contains('.') && frac.is_empty()) {
            return None;
        }
        let denom = 10u64.checked_pow(u32::try_from(frac.len()).ok()?)?;
        let numer = format!("{int}{frac}").parse::<u64>().ok()?;
        Throughput::new(numer, denom).ok()
    }

    pub fn numer(self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(self) -> u64 {
        *self.0.denom()
    }

    /// Number of element lanes: the throughput rounded up.
    pub fn lanes(self) -> u64 {
        self.0.ceil().to_integer()
    }

    /// Product of two throughputs, `None` on overflow.
    pub fn checked_mul(self, other: Throughput) -> Option<Throughput> {
        // cross-reduce before multiplying to keep intermediates small
        let g1 = gcd(self.numer(), other.denom());
        let g2 = gcd(other.numer(), self.denom());
        let n = (self.numer() / g1).checked_mul(other.numer() / g2)?;
        let d = (self.denom() / g2).checked_mul(other.denom() / g1)?;
        Some(Throughput(Ratio::new(n, d)))
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Default for Throughput {
    fn default() -> Self {
        Throughput::ONE
    }
}

impl fmt::Display for Throughput {
    /// Integers print as `N.0`, terminating fractions as decimals, anything
    /// else as `n/d`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (self.numer(), self.denom());
        if d == 1 {
            return write!(f, "{n}.0");
        }
        let mut rest = d;
        let (mut twos, mut fives) = (0u32, 0u32);
        while rest % 2 == 0 {
            rest /= 2;
            twos += 1;
        }
        while rest % 5 == 0 {
            rest /= 5;
            fives += 1;
        }
        if rest != 1 {
            return write!(f, "{n}/{d}");
        }
        let digits = twos.max(fives);
        let scale = 10u128.pow(digits);
        let scaled = n as u128 * (scale / d as u128);
        let int = scaled / scale;
        let frac = scaled % scale;
        write!(f, "{int}.{frac:0width$}", width = digits as usize)
    }
}

impl Serialize for Throughput {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct StreamProps {
    pub data: LogicalType,
    pub throughput: Throughput,
    pub dimensionality: u32,
    pub synchronicity: Synchronicity,
    pub complexity: Complexity,
    pub direction: Direction,
    pub user: Option<LogicalType>,
    pub keep: bool,
}

impl StreamProps {
    /// A stream of `data` with every other property at its default.
    pub fn new(data: LogicalType) -> Self {
        StreamProps {
            data,
            throughput: Throughput::ONE,
            dimensionality: 0,
            synchronicity: Synchronicity::Sync,
            complexity: Complexity::MIN,
            direction: Direction::Forward,
            user: None,
            keep: false,
        }
    }
}

impl From<StreamProps> for LogicalType {
    fn from(props: StreamProps) -> Self {
        LogicalType::Stream(Box::new(props))
    }
}

pub(crate) fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}

impl LogicalType {
    pub fn stream(props: StreamProps) -> Self {
        LogicalType::Stream(Box::new(props))
    }

    pub fn as_stream(&self) -> Option<&StreamProps> {
        match self {
            LogicalType::Stream(s) => Some(s),
            _ => None,
        }
    }

    pub fn contains_stream(&self) -> bool {
        match self {
            LogicalType::Null | LogicalType::Bits(_) => false,
            LogicalType::Group(fields) | LogicalType::Union(fields) => {
                fields.iter().any(|(_, t)| t.contains_stream())
            }
            LogicalType::Stream(_) => true,
        }
    }

    /// Bit width of an element-only type. Union fields share storage behind a
    /// `ceil(log2(n))`-bit tag.
    pub fn element_width(&self) -> Result<u64, TypeError> {
        Ok(match self {
            LogicalType::Null => 0,
            LogicalType::Bits(n) => u64::from(*n),
            LogicalType::Group(fields) => {
                let mut sum = 0;
                for (_, t) in fields {
                    sum += t.element_width()?;
                }
                sum
            }
            LogicalType::Union(fields) => {
                let mut widest = 0;
                for (_, t) in fields {
                    widest = widest.max(t.element_width()?);
                }
                ceil_log2(fields.len() as u64) + widest
            }
            LogicalType::Stream(_) => return Err(TypeError::NotElement),
        })
    }

    /// The element content a physical stream carries for this type: every
    /// nested `Stream` replaced by `Null`.
    pub fn without_streams(&self) -> LogicalType {
        match self {
            LogicalType::Null | LogicalType::Stream(_) => LogicalType::Null,
            LogicalType::Bits(n) => LogicalType::Bits(*n),
            LogicalType::Group(fields) => LogicalType::Group(
                fields.iter().map(|(n, t)| (n.clone(), t.without_streams())).collect(),
            ),
            LogicalType::Union(fields) => LogicalType::Union(
                fields.iter().map(|(n, t)| (n.clone(), t.without_streams())).collect(),
            ),
        }
    }

    /// Checks the structural invariants of the whole tree.
    pub fn validate(&self) -> Result<(), TypeError> {
        match self {
            LogicalType::Null => Ok(()),
            LogicalType::Bits(0) => Err(TypeError::ZeroWidth),
            LogicalType::Bits(_) => Ok(()),
            LogicalType::Group(fields) => validate_fields(fields),
            LogicalType::Union(fields) => {
                if fields.is_empty() {
                    return Err(TypeError::EmptyUnion);
                }
                validate_fields(fields)
            }
            LogicalType::Stream(s) => {
                s.data.validate()?;
                if let Some(user) = &s.user {
                    if user.contains_stream() {
                        return Err(TypeError::UserHasStream);
                    }
                    user.validate()?;
                }
                Ok(())
            }
        }
    }
}

fn validate_fields(fields: &[(Identifier, LogicalType)]) -> Result<(), TypeError> {
    let mut seen = HashSet::new();
    for (name, t) in fields {
        if !seen.insert(name) {
            return Err(TypeError::DuplicateField(name.clone()));
        }
        t.validate()?;
    }
    Ok(())
}

/// Structural type equality. Field names, field order and every stream
/// property take part; declaration names never do.
pub fn type_eq(a: &LogicalType, b: &LogicalType) -> bool {
    a == b
}
