// SPDX-License-Identifier: Apache-2.0

//! Exhaustive checks on small streams: organization against a direct
//! recursive model, and validation against brute-force reconstruction.

mod common;

use til_core::lower::PhysicalStream;
use til_core::syntax::ast::BitString;
use til_core::transactions::{decode, organize, validate_at, Last, Transfer, Value};

/// Lane contents and `last` flags of one expected transfer.
type Expected = (Vec<String>, Vec<bool>);

/// Each innermost sequence becomes `ceil(n / lanes)` transfers (one empty
/// transfer when `n == 0`); every sequence flags its final transfer.
fn model(v: &Value, depth: usize, dims: usize, lanes: usize) -> Vec<Expected> {
    let Value::Seq(items) = v else { unreachable!("elements are handled by their sequence") };
    let mut out: Vec<Expected> = if depth == 1 {
        let elems: Vec<String> = items
            .iter()
            .map(|e| match e {
                Value::Element(b) => b.as_str().to_string(),
                Value::Seq(_) => unreachable!(),
            })
            .collect();
        if elems.is_empty() {
            vec![(vec![], vec![false; dims])]
        } else {
            elems.chunks(lanes).map(|c| (c.to_vec(), vec![false; dims])).collect()
        }
    } else {
        let inner: Vec<_> = items.iter().flat_map(|i| model(i, depth - 1, dims, lanes)).collect();
        if inner.is_empty() {
            vec![(vec![], vec![false; dims])]
        } else {
            inner
        }
    };
    out.last_mut().unwrap().1[depth - 1] = true;
    out
}

fn expected(values: &[Value], dims: usize, lanes: usize) -> Vec<Expected> {
    if dims == 0 {
        let elems: Vec<String> = values
            .iter()
            .map(|v| match v {
                Value::Element(b) => b.as_str().to_string(),
                Value::Seq(_) => unreachable!(),
            })
            .collect();
        return elems.chunks(lanes).map(|c| (c.to_vec(), vec![])).collect();
    }
    values.iter().flat_map(|v| model(v, dims, dims, lanes)).collect()
}

fn observed(t: &Transfer) -> Expected {
    let data = t.active_lanes().iter().map(|i| t.lanes[*i].as_ref().unwrap().as_str().to_string()).collect();
    let Last::PerTransfer(last) = &t.last else { panic!("canonical transfers carry one last vector") };
    (data, last.clone())
}

/// Every list of up to `max_len` items drawn from `items`.
fn lists<T: Clone>(items: &[T], max_len: usize) -> Vec<Vec<T>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in &frontier {
            for i in items {
                let mut l: Vec<T> = prefix.clone();
                l.push(i.clone());
                next.push(l);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// All values of the given depth, with bounded fan-out.
fn shapes(depth: usize, fan: &[usize]) -> Vec<Value> {
    // elements are numbered so every position is distinguishable
    let mut counter = 0u8;
    let mut elem = || {
        counter = counter.wrapping_add(1);
        Value::Element(BitString::new(format!("{:04b}", counter % 16)).unwrap())
    };
    if depth == 0 {
        return (0..2).map(|_| elem()).collect();
    }
    let inner = shapes(depth - 1, &fan[1..]);
    lists(&inner, fan[0]).into_iter().map(Value::Seq).collect()
}

#[test]
fn organization_matches_model_on_small_shapes() {
    let mut checked = 0usize;
    for dims in 0..=3usize {
        let fan: &[usize] = match dims {
            0 => &[],
            1 => &[4],
            2 => &[2, 2],
            _ => &[1, 2, 2],
        };
        let items = shapes(dims, fan);
        let top = match dims {
            0 => lists(&items, 5),
            1 | 2 => lists(&items, 2),
            _ => lists(&items, 1),
        };
        for values in &top {
            for lanes in 1..=4usize {
                let ps = common::stream(lanes as u64, dims as u32, 1, 4);
                let t = organize(values, &ps);
                let got: Vec<Expected> = t.iter().map(observed).collect();
                assert_eq!(got, expected(values, dims, lanes), "dims={dims} lanes={lanes} values={values:?}");
                assert!(t.iter().all(|t| t.stai == 0 && t.holds_before == 0));
                for c in 1..=8 {
                    assert_eq!(validate_at(&t, &ps, c), [], "C={c} dims={dims} lanes={lanes} values={values:?}");
                }
                assert_eq!(&decode(&t, &ps).unwrap(), values);
                checked += 1;
            }
        }
    }
    assert!(checked > 1000, "only {checked} instances");
}

// -- every transfer list on tiny streams ------------------------------------

/// Lanes an oracle treats as carrying data: the index range when every
/// strobe is high, otherwise the strobe alone.
fn significant(t: &Transfer) -> Option<Vec<usize>> {
    if t.strb.iter().all(|b| *b) {
        if t.stai > t.endi {
            return None;
        }
        Some((t.stai..=t.endi).collect())
    } else {
        Some((0..t.strb.len()).filter(|l| t.strb[*l]).collect())
    }
}

/// Rebuilds the values a list of transfers denotes with every complexity
/// freedom allowed, or `None` if it denotes nothing.
fn reconstruct(ts: &[Transfer], dims: usize) -> Option<Vec<Value>> {
    let mut out = Vec::new();
    let mut open: Vec<Value> = Vec::new();
    for t in ts {
        let active = significant(t)?;
        let flags: Vec<bool> = match &t.last {
            Last::PerTransfer(b) => b.clone(),
            Last::PerLane(per) => (0..dims).map(|d| per.iter().any(|l| l[d])).collect(),
        };
        if active.is_empty() && !flags.iter().any(|b| *b) {
            return None;
        }
        for lane in 0..t.lanes.len() {
            if active.contains(&lane) {
                let e = Value::Element(t.lanes[lane].clone()?);
                if dims == 0 {
                    out.push(e);
                } else {
                    open.push(e);
                }
            }
            if let Last::PerLane(per) = &t.last {
                if dims == 1 && per[lane][0] {
                    out.push(Value::Seq(std::mem::take(&mut open)));
                }
            }
        }
        if let Last::PerTransfer(b) = &t.last {
            if dims == 1 && b[0] {
                out.push(Value::Seq(std::mem::take(&mut open)));
            }
        }
    }
    open.is_empty().then_some(out)
}

/// Restrictions a complexity level adds on top of reconstructibility.
fn ladder_allows(ts: &[Transfer], lanes: usize, dims: usize, c: u8) -> bool {
    ts.iter().all(|t| {
        let all = t.strb.iter().all(|b| *b);
        let none = t.strb.iter().all(|b| !*b);
        let count = significant(t).map_or(0, |a| a.len());
        let any_last = match &t.last {
            Last::PerTransfer(b) => b.iter().any(|x| *x),
            Last::PerLane(per) => per.iter().flatten().any(|x| *x),
        };
        (c >= 8 || matches!(t.last, Last::PerTransfer(_)))
            && (c >= 7 || all || none)
            && (c >= 6 || !all || t.stai == 0)
            && (c >= 5 || dims == 0 || count == 0 || count == lanes || any_last)
    })
}

/// Every single transfer on `lanes` lanes, with irrelevant fields fixed:
/// indices only vary when every strobe is high, and inactive lanes hold
/// nothing.
fn all_transfers(lanes: usize, dims: usize, alphabet: &[&str]) -> Vec<(usize, Transfer)> {
    let mut lasts = vec![];
    for bits in 0..(1u32 << dims) {
        lasts.push(Last::PerTransfer((0..dims).map(|d| bits >> d & 1 == 1).collect()));
    }
    if dims > 0 {
        for bits in 0..(1u32 << (dims * lanes)) {
            let per = (0..lanes).map(|l| (0..dims).map(|d| bits >> (l * dims + d) & 1 == 1).collect()).collect();
            lasts.push(Last::PerLane(per));
        }
    }
    let mut out = Vec::new();
    for strb_bits in 0..(1u32 << lanes) {
        let strb: Vec<bool> = (0..lanes).map(|l| strb_bits >> l & 1 == 1).collect();
        let indices: Vec<(usize, usize)> = if strb.iter().all(|b| *b) {
            (0..lanes).flat_map(|s| (0..lanes).map(move |e| (s, e))).collect()
        } else {
            vec![(0, 0)]
        };
        for (stai, endi) in indices {
            let probe = Transfer { lanes: vec![None; lanes], stai, endi, strb: strb.clone(), last: Last::PerTransfer(vec![]), holds_before: 0 };
            let active = significant(&probe).unwrap_or_default();
            // every assignment of alphabet letters to the active lanes
            let mut fills: Vec<Vec<Option<BitString>>> = vec![vec![None; lanes]];
            for &l in &active {
                fills = fills
                    .into_iter()
                    .flat_map(|f| {
                        alphabet.iter().map(move |a| {
                            let mut f = f.clone();
                            f[l] = Some(BitString::new(*a).unwrap());
                            f
                        })
                    })
                    .collect();
            }
            for data in fills {
                for last in &lasts {
                    let t = Transfer { lanes: data.clone(), stai, endi, strb: strb.clone(), last: last.clone(), holds_before: 0 };
                    out.push((active.len(), t));
                }
            }
        }
    }
    out
}

struct Walk<'a> {
    single: &'a [(usize, Transfer)],
    ps: PhysicalStream,
    lanes: usize,
    dims: usize,
    max_transfers: usize,
    max_elements: usize,
}

impl Walk<'_> {
    fn visit(&self, list: &mut Vec<Transfer>, elements: usize) -> usize {
        let oracle = reconstruct(list, self.dims);
        for c in 1..=8u8 {
            let expect = oracle.is_some() && ladder_allows(list, self.lanes, self.dims, c);
            let got = validate_at(list, &self.ps, c);
            assert_eq!(got.is_empty(), expect, "C={c} lanes={} dims={} {list:?}: {got:?}", self.lanes, self.dims);
        }
        if let Some(values) = oracle {
            assert_eq!(decode(list, &self.ps).unwrap(), values, "{list:?}");
        }
        let mut checked = 1;
        if list.len() < self.max_transfers {
            for (n, t) in self.single {
                if elements + n <= self.max_elements {
                    list.push(t.clone());
                    checked += self.visit(list, elements + n);
                    list.pop();
                }
            }
        }
        checked
    }
}

fn enumerate(lanes: usize, dims: usize, alphabet: &[&str], max_transfers: usize, max_elements: usize) -> usize {
    let single = all_transfers(lanes, dims, alphabet);
    let ps = common::stream(lanes as u64, dims as u32, 8, 1);
    Walk { single: &single, ps, lanes, dims, max_transfers, max_elements }.visit(&mut vec![], 0)
}

#[test]
fn validation_matches_reconstruction_on_every_small_list() {
    let mut checked = 0;
    for lanes in 1..=2 {
        for dims in 0..=1 {
            checked += enumerate(lanes, dims, &["1"], 4, 3);
            checked += enumerate(lanes, dims, &["0", "1"], 3, 3);
        }
    }
    assert!(checked > 100_000, "only {checked} lists");
}
