// SPDX-License-Identifier: Apache-2.0

//! Property suites shared by the `properties` and `acceptance` targets.
//! Each returns `Err` with proptest's minimal failing case.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use til_core::db::{Database, Project};
use til_core::ident::id;
use til_core::lower::{signal_set, PhysicalStream, SignalKind};
use til_core::syntax::ast::BitString;
use til_core::syntax::{parse_til, pretty_print};
use til_core::transactions::{decode, organize, validate_at, Last, Transfer, Value};
use til_core::vhdl::{emit_package, EmitOptions};
use til_core::{type_eq, Complexity, Direction, LogicalType, StreamProps, Throughput};

pub const CASES: u32 = 1000;

fn run<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

pub fn stream(lanes: u64, dims: u32, complexity: u8, bits: u64) -> PhysicalStream {
    PhysicalStream {
        path: vec![id("p")],
        direction: Direction::Forward,
        element_bits: bits,
        lanes,
        throughput: Throughput::integer(lanes).unwrap(),
        dimensionality: dims,
        complexity: Complexity::new(u64::from(complexity)).unwrap(),
        user_bits: 0,
    }
}

fn bits(width: usize) -> impl Strategy<Value = BitString> {
    proptest::collection::vec(any::<bool>(), width)
        .prop_map(|v| BitString::new(v.iter().map(|b| if *b { '1' } else { '0' }).collect::<String>()).unwrap())
}

fn value(depth: u32, width: usize) -> BoxedStrategy<Value> {
    if depth == 0 {
        bits(width).prop_map(Value::Element).boxed()
    } else {
        proptest::collection::vec(value(depth - 1, width), 0..5).prop_map(Value::Seq).boxed()
    }
}

/// (stream, values) with values shaped for the stream.
pub fn shaped_values() -> impl Strategy<Value = (PhysicalStream, Vec<Value>)> {
    (1u64..=5, 0u32..=3, 1u8..=8, 1u64..=6).prop_flat_map(|(lanes, dims, c, w)| {
        let items = proptest::collection::vec(value(dims, w as usize), 0..6);
        (Just(stream(lanes, dims, c, w)), items)
    })
}

fn transfer(lanes: usize, dims: usize, width: usize) -> impl Strategy<Value = Transfer> {
    let last = prop_oneof![
        proptest::collection::vec(any::<bool>(), dims).prop_map(Last::PerTransfer),
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), dims), lanes).prop_map(Last::PerLane),
    ];
    (
        proptest::collection::vec(proptest::option::of(bits(width)), lanes),
        0..lanes,
        0..lanes,
        proptest::collection::vec(any::<bool>(), lanes),
        last,
        0u64..3,
    )
        .prop_map(|(lanes, stai, endi, strb, last, holds_before)| Transfer { lanes, stai, endi, strb, last, holds_before })
}

/// Arbitrary, mostly invalid, transfer lists.
pub fn arbitrary_transfers() -> impl Strategy<Value = (PhysicalStream, Vec<Transfer>)> {
    (1u64..=4, 0u32..=2, 1u64..=3).prop_flat_map(|(lanes, dims, w)| {
        let list = proptest::collection::vec(transfer(lanes as usize, dims as usize, w as usize), 0..6);
        (Just(stream(lanes, dims, 8, w)), list)
    })
}

pub fn transfer_round_trip() -> Result<(), String> {
    run(shaped_values(), |(ps, values)| {
        let transfers = organize(&values, &ps);
        prop_assert_eq!(decode(&transfers, &ps).map_err(|v| format!("{v:?}")), Ok(values));
        for c in 1..=8 {
            prop_assert!(validate_at(&transfers, &ps, c).is_empty(), "canonical transfers rejected at C={}", c);
        }
        Ok(())
    })
}

pub fn complexity_monotonicity() -> Result<(), String> {
    run((arbitrary_transfers(), 0u8..=2), |((ps, mut transfers), stall)| {
        if let Some(t) = transfers.first_mut() {
            t.holds_before = u64::from(stall);
        }
        let mut previous = BTreeSet::from_iter(validate_at(&transfers, &ps, 1));
        for c in 2..=8 {
            let now = BTreeSet::from_iter(validate_at(&transfers, &ps, c));
            prop_assert!(now.is_subset(&previous), "C={} accepts less than C={}", c, c - 1);
            for v in &now {
                prop_assert!(v.rule.lifted_at().is_none_or(|at| c < at), "{:?} still reported at C={}", v.rule, c);
            }
            previous = now;
        }
        Ok(())
    })
}

pub fn signal_monotonicity() -> Result<(), String> {
    let params = (1u64..=200, 0u32..=3, 0u64..=64, 1u64..=64);
    run(params, |(lanes, dims, user, w)| {
        let mut ps = stream(lanes, dims, 1, w);
        ps.user_bits = user;
        // widths may grow (per-lane `last`), kinds never disappear
        let mut previous: Option<BTreeSet<SignalKind>> = None;
        for c in 1..=8 {
            ps.complexity = Complexity::new(c).unwrap();
            let now: BTreeSet<_> = signal_set(&ps).iter().map(|s| s.kind).collect();
            prop_assert_eq!(now.contains(&SignalKind::Endi), lanes > 1);
            if let Some(p) = &previous {
                prop_assert!(p.is_subset(&now), "signals lost going to C={}", c);
            }
            previous = Some(now);
        }
        Ok(())
    })
}

// -- types -----------------------------------------------------------------

const NAMES: &[&str] = &["a", "b1", "c_d", "data", "x", "yy"];

fn field_name() -> impl Strategy<Value = til_core::Identifier> {
    proptest::sample::select(NAMES).prop_map(id)
}

fn fields(inner: BoxedStrategy<LogicalType>) -> impl Strategy<Value = Vec<(til_core::Identifier, LogicalType)>> {
    proptest::collection::vec((field_name(), inner), 1..4)
}

pub fn logical_type() -> BoxedStrategy<LogicalType> {
    let leaf = prop_oneof![Just(LogicalType::Null), (1u32..20).prop_map(LogicalType::Bits)];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            fields(inner.clone()).prop_map(LogicalType::Group),
            fields(inner.clone()).prop_map(LogicalType::Union),
            (inner, 1u64..4, 0u32..3, 1u64..=8, any::<bool>()).prop_map(|(data, t, d, c, rev)| {
                let mut p = StreamProps::new(data);
                p.throughput = Throughput::integer(t).unwrap();
                p.dimensionality = d;
                p.complexity = Complexity::new(c).unwrap();
                if rev {
                    p.direction = Direction::Reverse;
                }
                LogicalType::stream(p)
            }),
        ]
    })
    .boxed()
}

/// Either a clone of `t` or a small perturbation of it.
fn near(t: LogicalType) -> impl Strategy<Value = LogicalType> {
    let same = t.clone();
    prop_oneof![
        3 => Just(same),
        1 => Just(match &t {
            LogicalType::Bits(n) => LogicalType::Bits(n + 1),
            LogicalType::Group(f) => LogicalType::Union(f.clone()),
            LogicalType::Union(f) => LogicalType::Group(f.clone()),
            LogicalType::Stream(p) => {
                let mut p = (**p).clone();
                p.keep = !p.keep;
                LogicalType::stream(p)
            }
            LogicalType::Null => LogicalType::Bits(1),
        }),
    ]
}

fn hash_of(t: &LogicalType) -> u64 {
    let mut h = DefaultHasher::new();
    t.hash(&mut h);
    h.finish()
}

pub fn type_eq_laws() -> Result<(), String> {
    let triple = logical_type()
        .prop_flat_map(|a| (Just(a.clone()), near(a)))
        .prop_flat_map(|(a, b)| (Just(a), Just(b.clone()), near(b)));
    run(triple, |(a, b, c)| {
        prop_assert!(type_eq(&a, &a));
        prop_assert_eq!(type_eq(&a, &b), type_eq(&b, &a));
        if type_eq(&a, &b) && type_eq(&b, &c) {
            prop_assert!(type_eq(&a, &c));
        }
        if type_eq(&a, &b) {
            prop_assert_eq!(hash_of(&a), hash_of(&b));
            prop_assert_eq!(a.element_width().ok(), b.element_width().ok());
        }
        Ok(())
    })
}

// -- source text -------------------------------------------------------------

fn type_text() -> BoxedStrategy<String> {
    let leaf = prop_oneof![
        Just("Null".to_string()),
        (1u32..100).prop_map(|n| format!("Bits({n})")),
        proptest::sample::select(&["t0", "t1", "other::t2"][..]).prop_map(str::to_string),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        let list = proptest::collection::vec((proptest::sample::select(NAMES), inner.clone()), 1..4)
            .prop_map(|f| f.iter().map(|(n, t)| format!("{n}: {t}")).collect::<Vec<_>>().join(", "));
        let optional = |s: &'static [&'static str]| proptest::option::of(proptest::sample::select(s));
        prop_oneof![
            list.clone().prop_map(|f| format!("Group({f})")),
            list.prop_map(|f| format!("Union({f},)")),
            (
                inner.clone(),
                optional(&["1", "2.5", "128.0", "3"]),
                optional(&["0", "1", "2"]),
                optional(&["Sync", "Flatten", "Desync", "FlatDesync"]),
                optional(&["1", "4", "8"]),
                optional(&["Forward", "Reverse"]),
                proptest::option::of(inner),
                optional(&["true", "false"]),
            )
                .prop_map(|(data, t, d, s, c, dir, user, keep)| {
                    let mut p = vec![format!("data: {data}")];
                    let mut opt = |k: &str, v: Option<String>| {
                        if let Some(v) = v {
                            p.push(format!("{k}: {v}"));
                        }
                    };
                    opt("throughput", t.map(str::to_string));
                    opt("dimensionality", d.map(str::to_string));
                    opt("synchronicity", s.map(str::to_string));
                    opt("complexity", c.map(str::to_string));
                    opt("direction", dir.map(str::to_string));
                    opt("user", user);
                    opt("keep", keep.map(str::to_string));
                    format!("Stream(\n  {}\n)", p.join(",\n  "))
                }),
        ]
    })
    .boxed()
}

fn doc() -> impl Strategy<Value = String> {
    proptest::option::of(proptest::sample::select(&["one line", "two\nlines", " spaced  "][..]))
        .prop_map(|d| d.map(|d| format!("#{d}#\n")).unwrap_or_default())
}

fn streamlet_text(names: &'static [&'static str]) -> impl Strategy<Value = String> {
    let port = (doc(), proptest::sample::select(names), any::<bool>(), type_text())
        .prop_map(|(d, n, out, t)| format!("{d}{n}: {} {t}", if out { "out" } else { "in" }));
    let body = prop_oneof![
        Just(String::new()),
        Just(" { \"some/dir\" }".to_string()),
        Just(" { x = other::s; y = s; x.p -- y.q; p -- x.q; }".to_string()),
        Just(" { impl other::m }".to_string()),
    ];
    (doc(), proptest::collection::vec(port, 0..3), body)
        .prop_map(|(d, ports, body)| format!("{d}streamlet s = ({}){body};", ports.join(", ")))
}

pub fn source_text() -> impl Strategy<Value = String> {
    (
        proptest::collection::vec(type_text(), 0..3),
        streamlet_text(&["p", "q", "r_s"]),
        proptest::sample::select(&["a", "a::b", "x1::y_z::w"][..]),
        any::<bool>(),
    )
        .prop_map(|(types, s, ns, comment)| {
            let mut src = format!("namespace {ns} {{\n");
            for (i, t) in types.iter().enumerate() {
                src.push_str(&format!("    type t{i} = {t};{}\n", if comment { " // note" } else { "" }));
            }
            src.push_str(&format!("    interface i = ();\n    impl m = i {{ \"m\" }};\n    {s}\n"));
            src.push_str("    streamlet s2 = other::i { impl m };\n}\n");
            src
        })
}

pub fn parse_print_round_trip() -> Result<(), String> {
    run(source_text(), |src| {
        let (first, diags) = parse_til("gen.til", &src);
        prop_assert!(diags.is_empty(), "generated source does not parse: {:?}\n{}", diags, src);
        let printed = pretty_print(&first);
        let (second, diags) = parse_til("printed.til", &printed);
        prop_assert!(diags.is_empty(), "printed source does not parse: {:?}\n{}", diags, printed);
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(pretty_print(&second), printed);
        Ok(())
    })
}

// -- memoization -------------------------------------------------------------

/// A valid project: `widths` become stream types, `uses` pick one per streamlet.
pub fn project_text() -> impl Strategy<Value = String> {
    (proptest::collection::vec(1u32..64, 1..5), proptest::collection::vec((any::<prop::sample::Index>(), 0u32..3), 0..6))
        .prop_map(|(widths, uses)| {
            let mut src = String::from("namespace gen {\n");
            for (i, w) in widths.iter().enumerate() {
                src.push_str(&format!("  type t{i} = Stream(data: Bits({w}), dimensionality: {});\n", i % 3));
            }
            for (k, (pick, ports)) in uses.iter().enumerate() {
                let t = pick.index(widths.len());
                let ports: Vec<_> = (0..*ports).map(|p| format!("p{p}: in t{t}")).collect();
                src.push_str(&format!("  streamlet s{k} = ({});\n", ports.join(", ")));
            }
            src.push_str("}\n");
            src
        })
}

fn exercise(db: &Database) -> (Vec<usize>, String) {
    let all = db.all_streamlets();
    let lowered = all
        .iter()
        .map(|(ns, s)| db.lowered(ns, &s.name).map(|p| p.len()).unwrap_or(usize::MAX))
        .collect();
    (lowered, emit_package(db, &EmitOptions::default()).unwrap())
}

pub fn memo_zero_recompute() -> Result<(), String> {
    run(project_text(), |src| {
        let (file, diags) = parse_til("gen.til", &src);
        prop_assert!(diags.is_empty());
        let mut project = Project::new(id("gen"));
        prop_assert!(project.add_source(&file).is_empty());
        let mut db = Database::new(project);
        let first = exercise(&db);
        prop_assert!(db.computed() > 0);
        db.reset_stats();
        prop_assert_eq!(exercise(&db), first.clone());
        prop_assert_eq!(db.computed(), 0);
        // a revision that changes nothing keeps every entry
        db.revise(|_| ());
        db.reset_stats();
        prop_assert_eq!(exercise(&db), first);
        prop_assert_eq!(db.computed(), 0);
        Ok(())
    })
}

/// Used by the transfer fixtures.
pub fn byte(c: char) -> BitString {
    BitString::new(format!("{:08b}", c as u32)).unwrap()
}

pub fn word(s: &str) -> Value {
    Value::Seq(s.chars().map(|c| Value::Element(byte(c))).collect())
}
