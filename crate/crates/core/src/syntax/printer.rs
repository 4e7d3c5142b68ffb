// SPDX-License-Identifier: Apache-2.0

//! Canonical TIL text. Parsing the output yields a tree equal to the input.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn pretty_print(file: &SourceFile) -> String {
    let mut out = String::new();
    for (i, ns) in file.namespaces.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_namespace(&mut out, ns);
    }
    out
}

fn print_namespace(out: &mut String, ns: &NamespaceDecl) {
    if ns.decls.is_empty() {
        let _ = writeln!(out, "namespace {} {{}}", ns.path);
        return;
    }
    let _ = writeln!(out, "namespace {} {{", ns.path);
    for (i, decl) in ns.decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_decl(out, decl, 1);
    }
    out.push_str("}\n");
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str(INDENT);
    }
}

fn print_doc(out: &mut String, doc: &Option<String>, level: usize) {
    if let Some(doc) = doc {
        indent(out, level);
        let _ = writeln!(out, "#{doc}#");
    }
}

fn print_decl(out: &mut String, decl: &Decl, level: usize) {
    match decl {
        Decl::Type(t) => {
            indent(out, level);
            let _ = write!(out, "type {} = ", t.name);
            print_type(out, &t.ty, level);
            out.push_str(";\n");
        }
        Decl::Interface(i) => {
            print_doc(out, &i.doc, level);
            indent(out, level);
            let _ = write!(out, "interface {} = ", i.name);
            print_interface(out, &i.iface, level);
            out.push_str(";\n");
        }
        Decl::Implementation(i) => {
            print_doc(out, &i.doc, level);
            indent(out, level);
            let _ = write!(out, "impl {} = ", i.name);
            print_interface(out, &i.iface, level);
            out.push(' ');
            print_body(out, &i.body, level);
            out.push_str(";\n");
        }
        Decl::Streamlet(s) => {
            print_doc(out, &s.doc, level);
            indent(out, level);
            let _ = write!(out, "streamlet {} = ", s.name);
            print_interface(out, &s.iface, level);
            if let Some(body) = &s.body {
                out.push(' ');
                print_body(out, body, level);
            }
            out.push_str(";\n");
        }
    }
}

/// Prints a type expression starting at the current column; nested lines are
/// indented one level past `level`.
pub(crate) fn print_type(out: &mut String, ty: &TypeExpr, level: usize) {
    match &ty.kind {
        TypeKind::Ref(r) => {
            let _ = write!(out, "{r}");
        }
        TypeKind::Null => out.push_str("Null"),
        TypeKind::Bits(n) => {
            let _ = write!(out, "Bits({n})");
        }
        TypeKind::Group(fields) | TypeKind::Union(fields) => {
            let kw = if matches!(ty.kind, TypeKind::Group(_)) { "Group" } else { "Union" };
            if fields.is_empty() {
                let _ = write!(out, "{kw} ()");
                return;
            }
            let _ = writeln!(out, "{kw} (");
            for f in fields {
                indent(out, level + 1);
                let _ = write!(out, "{}: ", f.name);
                print_type(out, &f.ty, level + 1);
                out.push_str(",\n");
            }
            indent(out, level);
            out.push(')');
        }
        TypeKind::Stream(s) => {
            out.push_str("Stream (\n");
            let prop = |out: &mut String, name: &str| {
                indent(out, level + 1);
                let _ = write!(out, "{name}: ");
            };
            prop(out, "data");
            print_type(out, &s.data, level + 1);
            out.push_str(",\n");
            if let Some(t) = s.throughput {
                prop(out, "throughput");
                let _ = writeln!(out, "{t},");
            }
            if let Some(d) = s.dimensionality {
                prop(out, "dimensionality");
                let _ = writeln!(out, "{d},");
            }
            if let Some(sync) = s.synchronicity {
                prop(out, "synchronicity");
                let _ = writeln!(out, "{},", sync.keyword());
            }
            if let Some(c) = s.complexity {
                prop(out, "complexity");
                let _ = writeln!(out, "{c},");
            }
            if let Some(d) = s.direction {
                prop(out, "direction");
                let _ = writeln!(out, "{d:?},");
            }
            if let Some(u) = &s.user {
                prop(out, "user");
                print_type(out, u, level + 1);
                out.push_str(",\n");
            }
            if let Some(k) = s.keep {
                prop(out, "keep");
                let _ = writeln!(out, "{k},");
            }
            indent(out, level);
            out.push(')');
        }
    }
}

fn print_interface(out: &mut String, iface: &InterfaceExpr, level: usize) {
    match iface {
        InterfaceExpr::Ref(r) => {
            let _ = write!(out, "{r}");
        }
        InterfaceExpr::Inline { domains, ports, .. } => {
            if domains.is_empty() && ports.is_empty() {
                out.push_str("()");
                return;
            }
            out.push_str("(\n");
            for d in domains {
                indent(out, level + 1);
                let _ = writeln!(out, "'{},", d.name);
            }
            for p in ports {
                print_doc(out, &p.doc, level + 1);
                indent(out, level + 1);
                let _ = write!(out, "{}: {} ", p.name, p.mode.keyword());
                if let Some(d) = &p.domain {
                    let _ = write!(out, "'{d} ");
                }
                print_type(out, &p.ty, level + 1);
                out.push_str(",\n");
            }
            indent(out, level);
            out.push(')');
        }
    }
}

fn print_body(out: &mut String, body: &ImplBody, level: usize) {
    match body {
        ImplBody::Link { path, .. } => {
            let _ = write!(out, "{{ \"{}\" }}", escape(path));
        }
        ImplBody::Ref(r) => {
            let _ = write!(out, "{{ impl {r} }}");
        }
        ImplBody::Structural(stmts) => {
            if stmts.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for stmt in stmts {
                indent(out, level + 1);
                match stmt {
                    Statement::Instance(i) => {
                        let _ = write!(out, "{} = {}", i.name, i.streamlet);
                        if !i.domains.is_empty() {
                            out.push('<');
                            for (k, d) in i.domains.iter().enumerate() {
                                if k > 0 {
                                    out.push_str(", ");
                                }
                                if let Some(inner) = &d.inner {
                                    let _ = write!(out, "'{inner} = ");
                                }
                                let _ = write!(out, "'{}", d.outer);
                            }
                            out.push('>');
                        }
                        out.push_str(";\n");
                    }
                    Statement::Connection(c) => {
                        let _ = writeln!(out, "{} -- {};", c.a, c.b);
                    }
                }
            }
            indent(out, level);
            out.push('}');
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
