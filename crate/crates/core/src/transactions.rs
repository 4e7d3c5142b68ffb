// SPDX-License-Identifier: Apache-2.0

//! Transfer-level view of stream data.
//!
//! Test assertions describe abstract element sequences. [`organize`] lays
//! them out over the lanes of a physical stream, [`validate`] checks a
//! transfer list against the rules its complexity imposes, and [`decode`]
//! recovers the element sequence from transfers.

use std::collections::HashSet;
use std::fmt::{self, Write};

use serde::Serialize;

use crate::db::{Diagnostics, LoweredPort};
use crate::diagnostic::{codes, Diagnostic};
use crate::ident::Identifier;
use crate::ir::Streamlet;
use crate::lower::{is_source, PhysicalStream};
use crate::syntax::ast::{Assertion, BitString, DataExpr, TestFile, TestItem};

/// An abstract stream value: one element, or a sequence one dimension deep.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Element(BitString),
    Seq(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Element(b) => write!(f, "{b}"),
            Value::Seq(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("element {found} has {} bits, the stream carries {expected}", found.width())]
    Width { expected: u64, found: BitString },
    #[error("data has depth {found}, the stream has dimensionality {expected}")]
    Depth { expected: u32, found: usize },
}

fn depth_of(expr: &DataExpr) -> usize {
    match expr {
        DataExpr::Bits(_) | DataExpr::FieldMap(_) => 0,
        DataExpr::ElementSeq(items) => items.iter().map(depth_of).max().unwrap_or(0),
        DataExpr::DimSeq(items) => 1 + items.iter().map(depth_of).max().unwrap_or(0),
    }
}

/// The successive top-level values an expression denotes on a stream; each
/// is an element when `dims` is 0, otherwise a sequence `dims` deep.
pub fn values(expr: &DataExpr, dims: u32, element_bits: u64) -> Result<Vec<Value>, ShapeError> {
    match expr {
        DataExpr::ElementSeq(items) => items.iter().map(|e| value(e, e, dims, dims, element_bits)).collect(),
        _ => Ok(vec![value(expr, expr, dims, dims, element_bits)?]),
    }
}

fn value(top: &DataExpr, expr: &DataExpr, depth: u32, dims: u32, bits: u64) -> Result<Value, ShapeError> {
    let mismatch = || ShapeError::Depth { expected: dims, found: depth_of(top) };
    match (expr, depth) {
        (DataExpr::Bits(b), 0) => {
            if b.width() as u64 != bits {
                return Err(ShapeError::Width { expected: bits, found: b.clone() });
            }
            Ok(Value::Element(b.clone()))
        }
        (DataExpr::DimSeq(items), d) if d > 0 => Ok(Value::Seq(
            items.iter().map(|e| value(top, e, d - 1, dims, bits)).collect::<Result<_, _>>()?,
        )),
        _ => Err(mismatch()),
    }
}

/// Per-dimension `last` flags; index 0 is the innermost dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Last {
    /// Applied after every lane of the transfer.
    PerTransfer(Vec<bool>),
    /// Applied after the corresponding lane.
    PerLane(Vec<Vec<bool>>),
}

impl Last {
    pub fn any(&self) -> bool {
        match self {
            Last::PerTransfer(bits) => bits.iter().any(|b| *b),
            Last::PerLane(lanes) => lanes.iter().flatten().any(|b| *b),
        }
    }
}

/// One handshake on a physical stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Transfer {
    /// Element per lane; `None` where the lane carries nothing.
    pub lanes: Vec<Option<BitString>>,
    pub stai: usize,
    pub endi: usize,
    pub strb: Vec<bool>,
    pub last: Last,
    /// Cycles with `valid` low before this transfer.
    pub holds_before: u64,
}

impl Transfer {
    /// Lanes holding elements. The indices only count when every strobe bit
    /// is high; otherwise the strobe alone decides.
    pub fn active_lanes(&self) -> Vec<usize> {
        if self.strb.iter().all(|b| *b) {
            (self.stai..=self.endi).filter(|i| *i < self.strb.len()).collect()
        } else {
            (0..self.strb.len()).filter(|i| self.strb[*i]).collect()
        }
    }
}

enum Event {
    Element(BitString),
    Close(usize),
}

fn flatten(v: &Value, depth: usize, out: &mut Vec<Event>) {
    match v {
        Value::Element(b) => out.push(Event::Element(b.clone())),
        Value::Seq(items) => {
            for item in items {
                flatten(item, depth - 1, out);
            }
            out.push(Event::Close(depth - 1));
        }
    }
}

/// Canonical organization: lanes fill from 0, transfers follow back to
/// back, and each transfer ends at the close of an innermost sequence.
pub fn organize(values: &[Value], ps: &PhysicalStream) -> Vec<Transfer> {
    let lanes = ps.lanes as usize;
    let dims = ps.dimensionality as usize;
    let mut evs = Vec::new();
    for v in values {
        flatten(v, dims, &mut evs);
    }

    struct Open {
        data: Vec<BitString>,
        last: Vec<bool>,
    }
    let finish = |o: Open| {
        let n = o.data.len();
        let mut data: Vec<Option<BitString>> = o.data.into_iter().map(Some).collect();
        data.resize(lanes, None);
        Transfer {
            lanes: data,
            stai: 0,
            endi: n.saturating_sub(1),
            strb: vec![n > 0; lanes],
            last: Last::PerTransfer(o.last),
            holds_before: 0,
        }
    };
    let mut out = Vec::new();
    let mut cur: Option<Open> = None;
    for ev in evs {
        let fresh = || Open { data: Vec::new(), last: vec![false; dims] };
        match ev {
            Event::Element(b) => {
                if cur.as_ref().is_some_and(|o| o.data.len() == lanes || o.last.iter().any(|x| *x)) {
                    out.push(finish(cur.take().unwrap()));
                }
                cur.get_or_insert_with(fresh).data.push(b);
            }
            Event::Close(k) => {
                if cur.as_ref().is_some_and(|o| o.last[k..].iter().any(|x| *x)) {
                    out.push(finish(cur.take().unwrap()));
                }
                cur.get_or_insert_with(fresh).last[k] = true;
            }
        }
    }
    if let Some(o) = cur {
        out.push(finish(o));
    }
    out
}

/// Transfer-list rules. The ladder rules apply below a complexity threshold;
/// the others hold at every complexity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rule {
    /// Lane, strobe, index or `last` vectors do not match the stream.
    Shape,
    /// An active lane holds no element.
    MissingData,
    /// An active lane's element has the wrong width.
    Width,
    /// Lanes are disabled on a stream without a strobe signal.
    StrobeAbsent,
    /// Significant start index beyond the end index.
    IndexOrder,
    /// Neither elements nor `last` flags.
    NoContent,
    /// An outer dimension closes while an inner one still holds data.
    LastOrder,
    /// The transfers end inside an open sequence.
    Unterminated,
    /// Idle cycles inside an innermost sequence.
    Consecutive,
    /// Fewer than all lanes used without a `last` flag.
    PartialWithoutLast,
    /// Start index other than 0.
    StartIndex,
    /// Strobe bits differ across lanes.
    NonUniformStrobe,
    /// `last` flags given per lane.
    PerLaneLast,
}

/// Ladder rules and the complexity from which each no longer applies.
pub const LADDER: [(Rule, u8); 5] = [
    (Rule::Consecutive, 3),
    (Rule::PartialWithoutLast, 5),
    (Rule::StartIndex, 6),
    (Rule::NonUniformStrobe, 7),
    (Rule::PerLaneLast, 8),
];

impl Rule {
    pub fn code(self) -> &'static str {
        match self {
            Rule::Shape => "T_SHAPE",
            Rule::MissingData => "T_MISSING_DATA",
            Rule::Width => "T_WIDTH",
            Rule::StrobeAbsent => "T_NO_STROBE",
            Rule::IndexOrder => "T_INDEX_ORDER",
            Rule::NoContent => "T_NO_CONTENT",
            Rule::LastOrder => "T_LAST_ORDER",
            Rule::Unterminated => "T_UNTERMINATED",
            Rule::Consecutive => "C3_CONSECUTIVE",
            Rule::PartialWithoutLast => "C5_PARTIAL_WITHOUT_LAST",
            Rule::StartIndex => "C6_START_INDEX",
            Rule::NonUniformStrobe => "C7_STROBE_UNIFORM",
            Rule::PerLaneLast => "C8_PER_LANE_LAST",
        }
    }

    /// Complexity from which the rule is lifted, for ladder rules.
    pub fn lifted_at(self) -> Option<u8> {
        LADDER.iter().find(|(r, _)| *r == self).map(|(_, c)| *c)
    }

    fn applies(self, complexity: u8) -> bool {
        self.lifted_at().is_none_or(|c| complexity < c)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub transfer: usize,
    pub rule: Rule,
}

struct Decoder {
    dims: usize,
    open: Vec<Vec<Value>>,
    out: Vec<Value>,
}

impl Decoder {
    fn new(dims: usize) -> Self {
        Decoder { dims, open: vec![Vec::new(); dims], out: Vec::new() }
    }

    fn push(&mut self, b: BitString) {
        match self.open.first_mut() {
            Some(inner) => inner.push(Value::Element(b)),
            None => self.out.push(Value::Element(b)),
        }
    }

    /// Closes the flagged dimensions, innermost first. Fails if a flagged
    /// dimension would swallow an inner one that has data but no flag.
    fn close(&mut self, bits: &[bool]) -> Result<(), ()> {
        for k in 0..self.dims {
            if !bits[k] {
                continue;
            }
            if (0..k).any(|j| !bits[j] && !self.open[j].is_empty()) {
                return Err(());
            }
            let done = Value::Seq(std::mem::take(&mut self.open[k]));
            match self.open.get_mut(k + 1) {
                Some(outer) => outer.push(done),
                None => self.out.push(done),
            }
        }
        Ok(())
    }

    fn inside_innermost(&self) -> bool {
        self.open.first().is_some_and(|v| !v.is_empty())
    }

    fn is_open(&self) -> bool {
        self.open.iter().any(|v| !v.is_empty())
    }
}

fn shape_ok(t: &Transfer, lanes: usize, dims: usize) -> bool {
    let last_ok = match &t.last {
        Last::PerTransfer(bits) => bits.len() == dims,
        Last::PerLane(per) => per.len() == lanes && per.iter().all(|b| b.len() == dims),
    };
    t.lanes.len() == lanes && t.strb.len() == lanes && t.stai < lanes && t.endi < lanes && last_ok
}

/// Checks transfers against the stream at its own complexity.
pub fn validate(transfers: &[Transfer], ps: &PhysicalStream) -> Vec<Violation> {
    validate_at(transfers, ps, ps.complexity.level())
}

/// Checks transfers as if the stream had the given complexity.
pub fn validate_at(transfers: &[Transfer], ps: &PhysicalStream, complexity: u8) -> Vec<Violation> {
    run(transfers, ps, complexity).1
}

/// Recovers the element sequence, or the structural violations that
/// prevent it. Ladder rules are not applied.
pub fn decode(transfers: &[Transfer], ps: &PhysicalStream) -> Result<Vec<Value>, Vec<Violation>> {
    let (values, violations) = run(transfers, ps, 8);
    if violations.is_empty() {
        Ok(values)
    } else {
        Err(violations)
    }
}

fn run(transfers: &[Transfer], ps: &PhysicalStream, c: u8) -> (Vec<Value>, Vec<Violation>) {
    let lanes = ps.lanes as usize;
    let dims = ps.dimensionality as usize;
    let has_strobe = c >= 7 || dims >= 1;
    let mut violations = Vec::new();
    let mut dec = Decoder::new(dims);
    for (i, t) in transfers.iter().enumerate() {
        let mut flag = |rule: Rule| {
            if rule.applies(c) {
                violations.push(Violation { transfer: i, rule });
            }
        };
        if !shape_ok(t, lanes, dims) {
            flag(Rule::Shape);
            continue;
        }
        let all = t.strb.iter().all(|b| *b);
        let none = !t.strb.iter().any(|b| *b);
        let active = t.active_lanes();
        if dims >= 1 && t.holds_before > 0 && dec.inside_innermost() {
            flag(Rule::Consecutive);
        }
        if !has_strobe && !all {
            flag(Rule::StrobeAbsent);
        }
        if all && t.stai > t.endi {
            flag(Rule::IndexOrder);
        }
        if dims >= 1 && !active.is_empty() && active.len() < lanes && !t.last.any() {
            flag(Rule::PartialWithoutLast);
        }
        if all && t.stai != 0 {
            flag(Rule::StartIndex);
        }
        if !(all || none) {
            flag(Rule::NonUniformStrobe);
        }
        if matches!(t.last, Last::PerLane(_)) {
            flag(Rule::PerLaneLast);
        }
        if active.is_empty() && !t.last.any() {
            flag(Rule::NoContent);
        }
        for &l in &active {
            match &t.lanes[l] {
                None => flag(Rule::MissingData),
                Some(b) if b.width() as u64 != ps.element_bits => flag(Rule::Width),
                Some(_) => {}
            }
        }

        let mut ordered = true;
        let active: HashSet<usize> = active.into_iter().collect();
        for l in 0..lanes {
            if active.contains(&l) {
                if let Some(b) = &t.lanes[l] {
                    dec.push(b.clone());
                }
            }
            if let Last::PerLane(per) = &t.last {
                ordered &= dec.close(&per[l]).is_ok();
            }
        }
        if let Last::PerTransfer(bits) = &t.last {
            ordered &= dec.close(bits).is_ok();
        }
        if !ordered {
            flag(Rule::LastOrder);
        }
    }
    if dec.is_open() {
        violations.push(Violation { transfer: transfers.len().saturating_sub(1), rule: Rule::Unterminated });
    }
    (dec.out, violations)
}

/// A lane grid for one transfer.
pub fn render_transfer(index: usize, t: &Transfer) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "transfer {index}: holds_before={} stai={} endi={}", t.holds_before, t.stai, t.endi);
    let width = t.lanes.iter().flatten().map(BitString::width).max().unwrap_or(1).max(4);
    let _ = writeln!(out, "  lane | strb | {:<width$} | last", "data");
    for (l, data) in t.lanes.iter().enumerate() {
        let strb = t.strb.get(l).map_or("?", |b| if *b { "1" } else { "0" });
        let data = data.as_ref().map_or("-", BitString::as_str);
        let last = match &t.last {
            Last::PerTransfer(bits) if l + 1 == t.lanes.len() => flags(bits),
            Last::PerTransfer(_) => String::new(),
            Last::PerLane(per) => per.get(l).map(|b| flags(b)).unwrap_or_default(),
        };
        let row = format!("  {l:>4} | {strb:>4} | {data:<width$} | {last}");
        let _ = writeln!(out, "{}", row.trim_end());
    }
    out
}

/// Flags printed outermost first, like a `last` vector.
fn flags(bits: &[bool]) -> String {
    bits.iter().rev().map(|b| if *b { '1' } else { '0' }).collect()
}

// -- test plans ------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// The test drives the stream into the streamlet.
    Drive,
    /// The streamlet sources the stream; the test observes and compares.
    Compare,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StreamPlan {
    /// The assertion this stream's data came from.
    pub assertion: String,
    /// `port__field...`
    pub stream: String,
    pub role: Role,
    pub physical: PhysicalStream,
    pub values: usize,
    pub transfers: Vec<Transfer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StagePlan {
    pub name: String,
    pub streams: Vec<StreamPlan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SequencePlan {
    /// `None` for the assertions outside any sequence.
    pub name: Option<String>,
    pub stages: Vec<StagePlan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestPlan {
    pub streamlet: String,
    pub sequences: Vec<SequencePlan>,
}

impl TestPlan {
    pub fn stages(&self) -> impl Iterator<Item = &StagePlan> {
        self.sequences.iter().flat_map(|s| &s.stages)
    }

    pub fn streams(&self) -> impl Iterator<Item = &StreamPlan> {
        self.stages().flat_map(|s| &s.streams)
    }
}

/// Names of the streamlets a test file addresses, in first-use order.
pub fn tested_streamlets(file: &TestFile) -> Vec<Identifier> {
    let mut out: Vec<Identifier> = Vec::new();
    let mut add = |a: &Assertion| {
        if let Some(first) = a.target.first() {
            if !out.contains(first) {
                out.push(first.clone());
            }
        }
    };
    for item in &file.items {
        match item {
            TestItem::Assertion(a) => add(a),
            TestItem::Sequence(s) => s.stages.iter().flat_map(|st| &st.assertions).for_each(&mut add),
        }
    }
    out
}

/// Builds the plan for the assertions of `file` that name `streamlet`.
/// Assertions outside sequences form one parallel stage.
pub fn resolve_test(file: &TestFile, streamlet: &Streamlet, ports: &[LoweredPort]) -> Result<TestPlan, Diagnostics> {
    let mut errors = Vec::new();
    let mine = |a: &&Assertion| a.target.first() == Some(&streamlet.name);
    let mut sequences = Vec::new();

    let loose: Vec<&Assertion> = file
        .items
        .iter()
        .filter_map(|i| match i {
            TestItem::Assertion(a) => Some(a),
            TestItem::Sequence(_) => None,
        })
        .filter(mine)
        .collect();
    if !loose.is_empty() {
        let stage = stage_plan("parallel", &loose, ports, &mut errors);
        sequences.push(SequencePlan { name: None, stages: vec![stage] });
    }
    for item in &file.items {
        if let TestItem::Sequence(seq) = item {
            if !seq.stages.iter().flat_map(|s| &s.assertions).any(|a| mine(&a)) {
                continue;
            }
            let stages = seq
                .stages
                .iter()
                .map(|st| {
                    let list: Vec<&Assertion> = st.assertions.iter().filter(mine).collect();
                    stage_plan(&st.name, &list, ports, &mut errors)
                })
                .collect();
            sequences.push(SequencePlan { name: Some(seq.name.clone()), stages });
        }
    }
    if errors.is_empty() {
        Ok(TestPlan { streamlet: streamlet.qualified_name(), sequences })
    } else {
        Err(errors)
    }
}

fn stage_plan(name: &str, assertions: &[&Assertion], ports: &[LoweredPort], errors: &mut Diagnostics) -> StagePlan {
    let mut streams: Vec<StreamPlan> = Vec::new();
    for a in assertions {
        for plan in assertion_plans(a, ports, errors) {
            if streams.iter().any(|s| s.stream == plan.stream) {
                errors.push(
                    Diagnostic::error(
                        codes::DUPLICATE,
                        format!("stream `{}` is asserted more than once in stage \"{name}\"", plan.stream),
                    )
                    .with_span(&a.span),
                );
            } else {
                streams.push(plan);
            }
        }
    }
    StagePlan { name: name.to_string(), streams }
}

fn assertion_plans(a: &Assertion, ports: &[LoweredPort], errors: &mut Diagnostics) -> Vec<StreamPlan> {
    let unknown = |what: String| Diagnostic::error(codes::UNKNOWN_PORT, what).with_span(&a.span);
    let Some(port_name) = a.target.get(1) else {
        errors.push(unknown(format!("`{}` does not name a port", a.target_string())));
        return Vec::new();
    };
    let Some(port) = ports.iter().find(|p| &p.name == port_name) else {
        errors.push(unknown(format!("`{}` has no port `{port_name}`", a.target[0])));
        return Vec::new();
    };
    let mut leaves = Vec::new();
    collect_leaves(a.target[1..].to_vec(), &a.value, &mut leaves);

    let mut out = Vec::new();
    for (path, expr) in leaves {
        let Some(ps) = port.streams.iter().find(|s| s.path == path) else {
            let name = path.iter().map(Identifier::as_str).collect::<Vec<_>>().join(".");
            errors.push(unknown(format!("port `{port_name}` has no stream `{name}`")));
            continue;
        };
        let vals = match values(expr, ps.dimensionality, ps.element_bits) {
            Ok(v) => v,
            Err(e) => {
                let code = match e {
                    ShapeError::Width { .. } => codes::WIDTH_MISMATCH,
                    ShapeError::Depth { .. } => codes::DEPTH_MISMATCH,
                };
                errors.push(Diagnostic::error(code, format!("`{}`: {e}", a.target_string())).with_span(&a.span));
                continue;
            }
        };
        let role = if is_source(port.mode, ps.direction) { Role::Compare } else { Role::Drive };
        out.push(StreamPlan {
            assertion: a.target_string(),
            stream: ps.base_name(),
            role,
            physical: ps.clone(),
            values: vals.len(),
            transfers: organize(&vals, ps),
        });
    }
    if let Some(first) = out.first() {
        if out.iter().any(|p| p.physical.throughput != first.physical.throughput) {
            errors.push(
                Diagnostic::error(
                    codes::WIDTH_MISMATCH,
                    format!("`{}` binds streams of different throughput", a.target_string()),
                )
                .with_span(&a.span),
            );
        }
    }
    out
}

fn collect_leaves<'e>(path: Vec<Identifier>, expr: &'e DataExpr, out: &mut Vec<(Vec<Identifier>, &'e DataExpr)>) {
    match expr {
        DataExpr::FieldMap(fields) => {
            for (name, value) in fields {
                let mut p = path.clone();
                p.push(name.clone());
                collect_leaves(p, value, out);
            }
        }
        _ => out.push((path, expr)),
    }
}

/// Structural and ladder checks for every stream of a plan.
pub fn plan_violations(plan: &TestPlan) -> Vec<(String, Vec<Violation>)> {
    plan.streams()
        .map(|s| (s.stream.clone(), validate(&s.transfers, &s.physical)))
        .filter(|(_, v)| !v.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::id;
    use crate::logical::{Complexity, Direction, Throughput};

    fn ps(lanes: u64, dims: u32, c: u64, bits: u64) -> PhysicalStream {
        PhysicalStream {
            path: vec![id("p")],
            direction: Direction::Forward,
            element_bits: bits,
            lanes,
            throughput: Throughput::integer(lanes).unwrap(),
            dimensionality: dims,
            complexity: Complexity::new(c).unwrap(),
            user_bits: 0,
        }
    }

    fn ch(c: char) -> BitString {
        BitString::new(format!("{:08b}", c as u8)).unwrap()
    }

    fn word(s: &str) -> Value {
        Value::Seq(s.chars().map(|c| Value::Element(ch(c))).collect())
    }

    fn lane_chars(t: &Transfer) -> String {
        t.lanes
            .iter()
            .map(|l| l.as_ref().map_or('.', |b| u8::from_str_radix(b.as_str(), 2).unwrap() as char))
            .collect()
    }

    #[test]
    fn hello_world_at_c1() {
        let x = vec![Value::Seq(vec![word("Hello"), word("World")])];
        let s = ps(3, 2, 1, 8);
        let t = organize(&x, &s);
        let shown: Vec<_> = t.iter().map(|t| (lane_chars(t), t.endi, t.last.clone())).collect();
        let last = |a: bool, b: bool| Last::PerTransfer(vec![a, b]);
        assert_eq!(
            shown,
            [
                ("Hel".to_string(), 2, last(false, false)),
                ("lo.".to_string(), 1, last(true, false)),
                ("Wor".to_string(), 2, last(false, false)),
                ("ld.".to_string(), 1, last(true, true)),
            ]
        );
        assert!(validate(&t, &s).is_empty());
        assert_eq!(decode(&t, &s).unwrap(), x);
    }

    #[test]
    fn adder_data() {
        let expr = DataExpr::ElementSeq(
            ["10", "01", "11"].iter().map(|b| DataExpr::Bits(BitString::new(*b).unwrap())).collect(),
        );
        let s = ps(1, 0, 1, 2);
        let t = organize(&values(&expr, 0, 2).unwrap(), &s);
        assert_eq!(t.len(), 3);
        assert!(t.iter().all(|t| t.lanes.len() == 1 && t.lanes[0].is_some()));
        assert!(organize(&values(&DataExpr::ElementSeq(vec![]), 0, 2).unwrap(), &s).is_empty());
    }

    #[test]
    fn shape_errors() {
        let b = |s: &str| DataExpr::Bits(BitString::new(s).unwrap());
        assert!(matches!(values(&b("101"), 0, 2), Err(ShapeError::Width { expected: 2, .. })));
        assert_eq!(values(&DataExpr::DimSeq(vec![b("1")]), 0, 1), Err(ShapeError::Depth { expected: 0, found: 1 }));
        assert_eq!(values(&b("1"), 1, 1), Err(ShapeError::Depth { expected: 1, found: 0 }));
    }

    fn t(lanes: &[Option<char>], strb: &[u8], stai: usize, endi: usize, last: Last, holds: u64) -> Transfer {
        Transfer {
            lanes: lanes.iter().map(|c| c.map(ch)).collect(),
            stai,
            endi,
            strb: strb.iter().map(|b| *b == 1).collect(),
            last,
            holds_before: holds,
        }
    }

    /// The complexity-8 arrangement: misaligned start, a postponed
    /// transfer, per-lane `last`, and an inactive lane closing the sequence.
    fn figure_c8() -> Vec<Transfer> {
        let none = || vec![vec![false, false]; 3];
        let mut l1 = none();
        l1[2] = vec![true, false];
        let mut l4 = none();
        l4[1] = vec![true, true];
        vec![
            t(&[None, Some('H'), Some('e')], &[0, 1, 1], 0, 2, Last::PerLane(none()), 0),
            t(&[Some('l'), Some('l'), Some('o')], &[1, 1, 1], 0, 2, Last::PerLane(l1), 1),
            t(&[Some('W'), Some('o'), None], &[1, 1, 0], 0, 2, Last::PerLane(none()), 0),
            t(&[None, Some('r'), Some('l')], &[1, 1, 1], 1, 2, Last::PerLane(none()), 0),
            t(&[Some('d'), None, None], &[1, 0, 0], 0, 0, Last::PerLane(l4), 0),
        ]
    }

    #[test]
    fn figure_arrangement() {
        let s = ps(3, 2, 8, 8);
        let tr = figure_c8();
        assert_eq!(validate(&tr, &s), []);
        assert_eq!(decode(&tr, &s).unwrap(), vec![Value::Seq(vec![word("Hello"), word("World")])]);
        let at1 = validate_at(&tr, &s, 1);
        assert!(at1.contains(&Violation { transfer: 0, rule: Rule::NonUniformStrobe }));
        assert!(at1.contains(&Violation { transfer: 1, rule: Rule::Consecutive }));
        assert!(at1.contains(&Violation { transfer: 3, rule: Rule::StartIndex }));
        assert!(at1.contains(&Violation { transfer: 4, rule: Rule::PerLaneLast }));
    }

    #[test]
    fn indices_ignored_unless_all_strobes_high() {
        let s = ps(3, 0, 8, 8);
        let tr = t(&[Some('a'), None, Some('c')], &[1, 0, 1], 2, 1, Last::PerTransfer(vec![]), 0);
        assert_eq!(tr.active_lanes(), [0, 2]);
        assert_eq!(validate(&[tr.clone()], &s), []);
        let all = t(&[None, Some('b'), None], &[1, 1, 1], 1, 1, Last::PerTransfer(vec![]), 0);
        assert_eq!(all.active_lanes(), [1]);
        assert_eq!(validate_at(&[all], &s, 5), [Violation { transfer: 0, rule: Rule::StartIndex }]);
    }

    #[test]
    fn structural_rules() {
        let s = ps(2, 1, 8, 8);
        let open = t(&[Some('a'), None], &[1, 1], 0, 0, Last::PerTransfer(vec![false]), 0);
        assert_eq!(validate(&[open.clone()], &s), [Violation { transfer: 0, rule: Rule::Unterminated }]);
        let nothing = t(&[None, None], &[0, 0], 0, 0, Last::PerTransfer(vec![false]), 0);
        assert!(validate(&[nothing], &s).iter().any(|v| v.rule == Rule::NoContent));
        let bad = Transfer { lanes: vec![None], ..open.clone() };
        assert_eq!(validate(&[bad], &s)[0].rule, Rule::Shape);
        let missing = t(&[None, None], &[1, 1], 0, 0, Last::PerTransfer(vec![true]), 0);
        assert_eq!(validate(&[missing], &s), [Violation { transfer: 0, rule: Rule::MissingData }]);
        let s0 = ps(2, 0, 6, 8);
        let partial = t(&[Some('a'), None], &[1, 0], 0, 0, Last::PerTransfer(vec![]), 0);
        let v = validate(&[partial], &s0);
        assert!(v.iter().any(|v| v.rule == Rule::StrobeAbsent), "{v:?}");
    }

    #[test]
    fn partial_by_strobe_needs_last() {
        let s = ps(3, 1, 4, 8);
        let partial = t(&[Some('a'), Some('b'), None], &[1, 1, 0], 0, 2, Last::PerTransfer(vec![false]), 0);
        let closing = t(&[Some('c'), None, None], &[1, 0, 0], 0, 2, Last::PerTransfer(vec![true]), 0);
        let v = validate_at(&[partial.clone(), closing.clone()], &s, 4);
        assert!(v.contains(&Violation { transfer: 0, rule: Rule::PartialWithoutLast }), "{v:?}");
        assert!(!v.iter().any(|v| v.transfer == 1 && v.rule == Rule::PartialWithoutLast));
        assert!(!validate_at(&[partial, closing], &s, 5).iter().any(|v| v.rule == Rule::PartialWithoutLast));
    }

    #[test]
    fn last_order() {
        let s = ps(1, 2, 8, 8);
        // outer closes while the inner sequence still holds `a`
        let tr = t(&[Some('a')], &[1], 0, 0, Last::PerTransfer(vec![false, true]), 0);
        assert!(validate(&[tr], &s).iter().any(|v| v.rule == Rule::LastOrder));
    }

    #[test]
    fn empty_sequences() {
        let s = ps(2, 2, 1, 8);
        let x = vec![Value::Seq(vec![word("a"), Value::Seq(vec![])]), Value::Seq(vec![])];
        let tr = organize(&x, &s);
        assert_eq!(validate(&tr, &s), []);
        assert_eq!(decode(&tr, &s).unwrap(), x);
    }

    #[test]
    fn rendering() {
        let text = render_transfer(4, &figure_c8()[4]);
        assert!(text.starts_with("transfer 4:"));
        assert!(text.contains("01100100"));
        assert!(text.lines().nth(3).unwrap().ends_with("11"));
    }
}
