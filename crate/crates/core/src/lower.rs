// SPDX-License-Identifier: Apache-2.0

//! Lowering of logical streams into physical streams and their signals.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::ident::Identifier;
use crate::ir::{Mode, Port};
use crate::logical::{ceil_log2, Complexity, Direction, LogicalType, StreamProps, Throughput};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LowerError {
    #[error("port type must be a Stream")]
    NotStream,
    #[error("cannot create uniquely named physical streams: `{}` is required twice (a directly nested Stream whose parent has a user signal or keep)", join(.0))]
    NameConflict(Vec<Identifier>),
    #[error("user type of stream `{}` contains a Stream", join(.0))]
    UserHasStream(Vec<Identifier>),
    #[error("throughput of stream `{}` overflows", join(.0))]
    Overflow(Vec<Identifier>),
}

fn join(path: &[Identifier]) -> String {
    path.iter().map(Identifier::as_str).collect::<Vec<_>>().join("__")
}

/// One handshaked signal bundle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PhysicalStream {
    /// Port name first, then the field names leading to the stream.
    pub path: Vec<Identifier>,
    /// Direction relative to the port's mode.
    pub direction: Direction,
    pub element_bits: u64,
    pub lanes: u64,
    pub throughput: Throughput,
    pub dimensionality: u32,
    pub complexity: Complexity,
    pub user_bits: u64,
}

impl PhysicalStream {
    /// The path without the port name.
    pub fn tail(&self) -> &[Identifier] {
        &self.path[1..]
    }

    /// `port__field__field`
    pub fn base_name(&self) -> String {
        join(&self.path)
    }
}

/// Splits a port's stream type into physical streams, depth-first with every
/// parent before its children.
pub fn split(port: &Port) -> Result<Vec<PhysicalStream>, LowerError> {
    split_type(&port.name, &port.stream_type)
}

pub fn split_type(name: &Identifier, ty: &LogicalType) -> Result<Vec<PhysicalStream>, LowerError> {
    let root = ty.as_stream().ok_or(LowerError::NotStream)?;
    let mut out = Vec::new();
    visit(root, vec![name.clone()], Throughput::ONE, 0, Direction::Forward, &mut out)?;
    let mut seen = HashSet::new();
    for ps in &out {
        if !seen.insert(&ps.path) {
            return Err(LowerError::NameConflict(ps.path.clone()));
        }
    }
    Ok(out)
}

fn visit(
    s: &StreamProps,
    path: Vec<Identifier>,
    parent_throughput: Throughput,
    inherited_dims: u32,
    parent_direction: Direction,
    out: &mut Vec<PhysicalStream>,
) -> Result<(), LowerError> {
    let throughput = parent_throughput
        .checked_mul(s.throughput)
        .ok_or_else(|| LowerError::Overflow(path.clone()))?;
    let dimensionality = inherited_dims + s.dimensionality;
    let direction = parent_direction.then(s.direction);

    let user_bits = match &s.user {
        Some(u) if u.contains_stream() => return Err(LowerError::UserHasStream(path)),
        Some(u) => u.element_width().expect("user type holds no streams"),
        None => 0,
    };
    let element_bits = s.data.without_streams().element_width().expect("residue holds no streams");
    let has_children = s.data.contains_stream();

    // A stream that carries nothing of its own is folded into its children;
    // its throughput, dimensionality and direction pass down.
    let elided = has_children && element_bits == 0 && s.user.is_none() && !s.keep;
    if !elided {
        out.push(PhysicalStream {
            path: path.clone(),
            direction,
            element_bits,
            lanes: throughput.lanes(),
            throughput,
            dimensionality,
            complexity: s.complexity,
            user_bits,
        });
    }

    let mut children = Vec::new();
    collect_children(&s.data, &path, &mut children);
    for (child, child_path) in children {
        let inherited = if child.synchronicity.inherits_dimensions() { dimensionality } else { 0 };
        visit(child, child_path, throughput, inherited, direction, out)?;
    }
    Ok(())
}

fn collect_children<'t>(
    ty: &'t LogicalType,
    path: &[Identifier],
    out: &mut Vec<(&'t StreamProps, Vec<Identifier>)>,
) {
    match ty {
        LogicalType::Stream(s) => out.push((s, path.to_vec())),
        LogicalType::Group(fields) | LogicalType::Union(fields) => {
            for (name, t) in fields {
                let mut p = path.to_vec();
                p.push(name.clone());
                collect_children(t, &p, out);
            }
        }
        LogicalType::Null | LogicalType::Bits(_) => {}
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Valid,
    Ready,
    Data,
    Last,
    Stai,
    Endi,
    Strb,
    User,
}

impl SignalKind {
    pub fn name(self) -> &'static str {
        match self {
            SignalKind::Valid => "valid",
            SignalKind::Ready => "ready",
            SignalKind::Data => "data",
            SignalKind::Last => "last",
            SignalKind::Stai => "stai",
            SignalKind::Endi => "endi",
            SignalKind::Strb => "strb",
            SignalKind::User => "user",
        }
    }

    /// Only `ready` flows from sink to source.
    pub fn is_upstream(self) -> bool {
        self == SignalKind::Ready
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Signal {
    pub kind: SignalKind,
    pub width: u64,
}

/// The signals a physical stream needs, in emission order.
pub fn signal_set(ps: &PhysicalStream) -> Vec<Signal> {
    let c = ps.complexity.level();
    let lanes = ps.lanes;
    let dims = u64::from(ps.dimensionality);
    let index_bits = ceil_log2(lanes);
    let mut out = vec![
        Signal { kind: SignalKind::Valid, width: 1 },
        Signal { kind: SignalKind::Ready, width: 1 },
    ];
    let mut push = |kind, width, present: bool| {
        if present {
            out.push(Signal { kind, width });
        }
    };
    push(SignalKind::Data, ps.element_bits * lanes, ps.element_bits > 0);
    push(SignalKind::Last, if c < 8 { dims } else { dims * lanes }, dims > 0);
    push(SignalKind::Stai, index_bits, c >= 6 && lanes > 1);
    // end index depends on lane count only
    push(SignalKind::Endi, index_bits, lanes > 1);
    push(SignalKind::Strb, lanes, c >= 7 || dims >= 1);
    push(SignalKind::User, ps.user_bits, ps.user_bits > 0);
    out
}

/// Which end of a connection drives a physical stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum End {
    A,
    B,
}

impl End {
    pub fn other(self) -> End {
        match self {
            End::A => End::B,
            End::B => End::A,
        }
    }
}

/// Whether a port end with the given outward-facing mode sources a stream
/// flowing in `direction` relative to the port.
pub fn is_source(mode: Mode, direction: Direction) -> bool {
    (mode == Mode::Out) != direction.is_reverse()
}

/// Source end for each physical stream of a connection between ends whose
/// outward-facing modes are `a` and `b`. `None` where both or neither end
/// would drive the stream.
pub fn resolve_source_sink(a: Mode, b: Mode, streams: &[PhysicalStream]) -> Vec<Option<End>> {
    streams
        .iter()
        .map(|ps| match (is_source(a, ps.direction), is_source(b, ps.direction)) {
            (true, false) => Some(End::A),
            (false, true) => Some(End::B),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::id;

    fn stream(data: LogicalType) -> StreamProps {
        StreamProps::new(data)
    }

    fn axi() -> LogicalType {
        let mut s = stream(LogicalType::Union(vec![
            (id("data"), LogicalType::Bits(8)),
            (id("null"), LogicalType::Null),
        ]));
        s.throughput = Throughput::integer(128).unwrap();
        s.dimensionality = 1;
        s.complexity = Complexity::new(7).unwrap();
        s.user = Some(LogicalType::Group(vec![
            (id("TID"), LogicalType::Bits(8)),
            (id("TDEST"), LogicalType::Bits(4)),
            (id("TUSER"), LogicalType::Bits(1)),
        ]));
        s.into()
    }

    fn ps(element_bits: u64, lanes: u64, dims: u32, c: u64, user_bits: u64) -> PhysicalStream {
        PhysicalStream {
            path: vec![id("p")],
            direction: Direction::Forward,
            element_bits,
            lanes,
            throughput: Throughput::integer(lanes).unwrap(),
            dimensionality: dims,
            complexity: Complexity::new(c).unwrap(),
            user_bits,
        }
    }

    fn widths(ps: &PhysicalStream) -> Vec<(&'static str, u64)> {
        signal_set(ps).iter().map(|s| (s.kind.name(), s.width)).collect()
    }

    #[test]
    fn axi4_stream_port() {
        let streams = split_type(&id("axi4stream"), &axi()).unwrap();
        assert_eq!(streams.len(), 1);
        let s = &streams[0];
        assert_eq!(s.path, vec![id("axi4stream")]);
        assert_eq!((s.element_bits, s.lanes, s.dimensionality, s.complexity.level(), s.user_bits), (9, 128, 1, 7, 13));
        assert_eq!(
            widths(s),
            [("valid", 1), ("ready", 1), ("data", 1152), ("last", 1), ("stai", 7), ("endi", 7), ("strb", 128), ("user", 13)]
        );
    }

    #[test]
    fn null_stream() {
        let streams = split_type(&id("p"), &stream(LogicalType::Null).into()).unwrap();
        assert_eq!(streams.len(), 1);
        assert_eq!((streams[0].element_bits, streams[0].lanes, streams[0].dimensionality), (0, 1, 0));
        assert_eq!(widths(&streams[0]), [("valid", 1), ("ready", 1)]);
    }

    #[test]
    fn forward_and_reverse_children() {
        let mut rev = stream(LogicalType::Bits(8));
        rev.direction = Direction::Reverse;
        let outer = stream(LogicalType::Group(vec![
            (id("fwd"), stream(LogicalType::Bits(8)).into()),
            (id("rev"), rev.into()),
        ]));
        let streams = split_type(&id("mem"), &outer.into()).unwrap();
        assert_eq!(streams.len(), 2);
        assert_eq!(streams[0].path, vec![id("mem"), id("fwd")]);
        assert_eq!(streams[0].direction, Direction::Forward);
        assert_eq!(streams[1].path, vec![id("mem"), id("rev")]);
        assert_eq!(streams[1].direction, Direction::Reverse);
    }

    #[test]
    fn directly_nested_streams_with_user_conflict() {
        let mut inner = stream(LogicalType::Bits(1));
        inner.user = Some(LogicalType::Bits(1));
        let mut outer = stream(inner.into());
        outer.user = Some(LogicalType::Bits(1));
        assert_eq!(
            split_type(&id("p"), &outer.into()),
            Err(LowerError::NameConflict(vec![id("p")]))
        );
    }

    #[test]
    fn direct_nesting_collapses_and_accumulates() {
        let mut inner = stream(LogicalType::Bits(4));
        inner.throughput = Throughput::new(3, 2).unwrap();
        inner.dimensionality = 1;
        let mut outer = stream(inner.into());
        outer.throughput = Throughput::integer(2).unwrap();
        outer.dimensionality = 1;
        let streams = split_type(&id("p"), &outer.into()).unwrap();
        assert_eq!(streams.len(), 1);
        assert_eq!(streams[0].lanes, 3);
        assert_eq!(streams[0].dimensionality, 2);
    }

    #[test]
    fn flat_child_drops_inherited_dimensions() {
        let mut child = stream(LogicalType::Bits(2));
        child.synchronicity = crate::logical::Synchronicity::Flatten;
        child.dimensionality = 1;
        let mut outer = stream(LogicalType::Group(vec![
            (id("a"), LogicalType::Bits(3)),
            (id("c"), child.into()),
        ]));
        outer.dimensionality = 2;
        let streams = split_type(&id("p"), &outer.into()).unwrap();
        assert_eq!(streams.len(), 2);
        assert_eq!((streams[0].element_bits, streams[0].dimensionality), (3, 2));
        assert_eq!((streams[1].element_bits, streams[1].dimensionality), (2, 1));
    }

    #[test]
    fn user_with_stream_is_rejected() {
        let mut s = stream(LogicalType::Null);
        s.user = Some(stream(LogicalType::Null).into());
        assert!(matches!(split_type(&id("p"), &s.into()), Err(LowerError::UserHasStream(_))));
        assert_eq!(split_type(&id("p"), &LogicalType::Bits(1)), Err(LowerError::NotStream));
    }

    #[test]
    fn signal_rules() {
        assert_eq!(widths(&ps(54, 1, 0, 1, 0)), [("valid", 1), ("ready", 1), ("data", 54)]);
        assert_eq!(widths(&ps(0, 1, 0, 1, 0)), [("valid", 1), ("ready", 1)]);
        let c8 = widths(&ps(4, 2, 1, 8, 0));
        assert!(c8.contains(&("last", 2)));
        // end index without dimensionality at low complexity
        assert!(widths(&ps(4, 2, 0, 1, 0)).contains(&("endi", 1)));
        assert!(!widths(&ps(4, 2, 0, 5, 0)).iter().any(|(n, _)| *n == "stai"));
        assert!(widths(&ps(4, 2, 0, 6, 0)).iter().any(|(n, _)| *n == "stai"));
    }

    #[test]
    fn source_and_sink() {
        let fwd = ps(1, 1, 0, 1, 0);
        let mut rev = fwd.clone();
        rev.direction = Direction::Reverse;
        assert_eq!(resolve_source_sink(Mode::Out, Mode::In, &[fwd.clone()]), [Some(End::A)]);
        assert_eq!(resolve_source_sink(Mode::Out, Mode::In, &[rev]), [Some(End::B)]);
        assert_eq!(resolve_source_sink(Mode::Out, Mode::Out, &[fwd]), [None]);
    }
}
