// SPDX-License-Identifier: Apache-2.0

//! Browser bindings for the TIL compiler. Every entry point takes plain
//! strings and numbers and answers with a JSON string.

use serde_json::{json, Value as Json};
use til_core::check::check_project;
use til_core::db::{Database, Project};
use til_core::diagnostic::has_errors;
use til_core::ident::id;
use til_core::lower::{signal_set, PhysicalStream};
use til_core::syntax::ast::TestItem;
use til_core::syntax::{parse_tests, parse_til};
use til_core::transactions::{organize, render_transfer, validate, values};
use til_core::vhdl::{emit_package, EmitOptions};
use til_core::{Complexity, Direction, Identifier, Throughput};
use wasm_bindgen::prelude::wasm_bindgen;

fn error(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

/// Parses and checks `source`, then emits the VHDL package if it is clean.
/// `{ diagnostics: [string], vhdl: string | null }`
#[wasm_bindgen]
pub fn compile(source: &str, project: &str, extended_identifiers: bool) -> String {
    let name = match Identifier::new(project) {
        Ok(n) => n,
        Err(e) => return error(e),
    };
    let (file, mut diags) = parse_til("input.til", source);
    let mut p = Project::new(name);
    diags.extend(p.add_source(&file));
    let db = Database::new(p);
    if !has_errors(&diags) {
        diags.extend(check_project(&db));
    }
    let vhdl = if has_errors(&diags) {
        None
    } else {
        match emit_package(&db, &EmitOptions { extended_identifiers }) {
            Ok(text) => Some(text),
            Err(d) => {
                diags.extend(d);
                None
            }
        }
    };
    let rendered: Vec<String> = diags.iter().map(ToString::to_string).collect();
    json!({ "diagnostics": rendered, "vhdl": vhdl }).to_string()
}

fn stream(element_bits: u32, throughput: &str, dimensionality: u32, complexity: u32, user_bits: u32) -> Result<PhysicalStream, String> {
    let throughput = Throughput::from_decimal(throughput).ok_or_else(|| format!("bad throughput `{throughput}`"))?;
    let complexity = Complexity::new(u64::from(complexity)).map_err(|e| e.to_string())?;
    Ok(PhysicalStream {
        path: vec![id("p")],
        direction: Direction::Forward,
        element_bits: u64::from(element_bits),
        lanes: throughput.lanes(),
        throughput,
        dimensionality,
        complexity,
        user_bits: u64::from(user_bits),
    })
}

/// The signals of one physical stream. `[{ name, width, upstream }]`
#[wasm_bindgen]
pub fn signals(element_bits: u32, throughput: &str, dimensionality: u32, complexity: u32, user_bits: u32) -> String {
    match stream(element_bits, throughput, dimensionality, complexity, user_bits) {
        Ok(ps) => {
            let rows: Vec<Json> = signal_set(&ps)
                .iter()
                .map(|s| json!({ "name": s.kind.name(), "width": s.width, "upstream": s.kind.is_upstream() }))
                .collect();
            Json::Array(rows).to_string()
        }
        Err(e) => error(e),
    }
}

/// Canonical transfers for a data literal such as `(["01", "10"], [])`.
/// `{ transfers: number, grid: string, violations: [string] }`
#[wasm_bindgen]
pub fn transfers(data: &str, element_bits: u32, throughput: &str, dimensionality: u32, complexity: u32) -> String {
    let ps = match stream(element_bits, throughput, dimensionality, complexity, 0) {
        Ok(ps) => ps,
        Err(e) => return error(e),
    };
    let (file, diags) = parse_tests("data", &format!("s.p = {data};"));
    if let Some(d) = diags.first() {
        return error(d);
    }
    let Some(TestItem::Assertion(a)) = file.items.first() else {
        return error("expected one data literal");
    };
    let vals = match values(&a.value, dimensionality, ps.element_bits) {
        Ok(v) => v,
        Err(e) => return error(e),
    };
    let list = organize(&vals, &ps);
    let grid: String = list.iter().enumerate().map(|(i, t)| render_transfer(i, t)).collect();
    let violations: Vec<String> = validate(&list, &ps).iter().map(|v| format!("{} at transfer {}", v.rule, v.transfer)).collect();
    json!({ "transfers": list.len(), "grid": grid, "violations": violations }).to_string()
}
