// SPDX-License-Identifier: Apache-2.0

//! VHDL emission: one package of components plus one entity/architecture
//! file per streamlet.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::check::domain_map;
use crate::db::{Database, Diagnostics, LoweredPort, QueryKey, Tracker};
use crate::diagnostic::{codes, Diagnostic};
use crate::ident::{Identifier, NamespacePath};
use crate::ir::{Domain, Implementation, ImplementationKind, Mode, PortRef, Streamlet, Structure};
use crate::lower::{is_source, signal_set, SignalKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmitOptions {
    /// Write names containing `__` (and reserved words) as extended
    /// identifiers, `\name\`, which standard VHDL tools accept.
    pub extended_identifiers: bool,
}

/// `<namespace segments>__<name>_com`
pub fn component_name(ns: &NamespacePath, name: &Identifier) -> String {
    format!("{}__{}_com", ns.mangled(), name)
}

const RESERVED: &[&str] = &[
    "abs", "access", "after", "alias", "all", "and", "architecture", "array", "assert", "attribute", "begin",
    "block", "body", "buffer", "bus", "case", "component", "configuration", "constant", "disconnect", "downto",
    "else", "elsif", "end", "entity", "exit", "file", "for", "function", "generate", "generic", "group",
    "guarded", "if", "impure", "in", "inertial", "inout", "is", "label", "library", "linkage", "literal", "loop",
    "map", "mod", "nand", "new", "next", "nor", "not", "null", "of", "on", "open", "or", "others", "out",
    "package", "port", "postponed", "procedure", "process", "pure", "range", "record", "register", "reject",
    "rem", "report", "return", "rol", "ror", "select", "severity", "shared", "signal", "sla", "sll", "sra",
    "srl", "subtype", "then", "to", "transport", "type", "unaffected", "units", "until", "use", "variable",
    "wait", "when", "while", "with", "xnor", "xor",
];

impl EmitOptions {
    fn id(&self, raw: &str) -> String {
        let needs = raw.contains("__") || RESERVED.contains(&raw.to_ascii_lowercase().as_str());
        if self.extended_identifiers && needs {
            format!("\\{raw}\\")
        } else {
            raw.to_string()
        }
    }
}

/// One port of a generated component or entity, before identifier escaping.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Signal {
    name: String,
    /// As seen from the streamlet.
    mode: Mode,
    width: u64,
    kind: Option<SignalKind>,
}

fn vhdl_type(width: u64) -> String {
    if width == 1 {
        "std_logic".to_string()
    } else {
        format!("std_logic_vector({} downto 0)", width - 1)
    }
}

fn domain_prefix(d: &Domain) -> String {
    match d {
        Domain::Default => String::new(),
        Domain::Named(n) => format!("{n}__"),
    }
}

fn clock_signals(domains: &[Domain]) -> Vec<Signal> {
    domains
        .iter()
        .flat_map(|d| {
            let p = domain_prefix(d);
            [
                Signal { name: format!("{p}clk"), mode: Mode::In, width: 1, kind: None },
                Signal { name: format!("{p}rst"), mode: Mode::In, width: 1, kind: None },
            ]
        })
        .collect()
}

fn port_signals(port: &LoweredPort) -> Vec<Signal> {
    let mut out = Vec::new();
    for ps in &port.streams {
        let source = is_source(port.mode, ps.direction);
        for sig in signal_set(ps) {
            let drives = source != sig.kind.is_upstream();
            out.push(Signal {
                name: format!("{}_{}", ps.base_name(), sig.kind.name()),
                mode: if drives { Mode::Out } else { Mode::In },
                width: sig.width,
                kind: Some(sig.kind),
            });
        }
    }
    out
}

fn doc_lines(out: &mut String, doc: Option<&str>, indent: &str) {
    if let Some(doc) = doc {
        for line in doc.lines() {
            let line = line.trim_end();
            if line.is_empty() {
                let _ = writeln!(out, "{indent}--");
            } else {
                let _ = writeln!(out, "{indent}-- {line}");
            }
        }
    }
}

/// The `port ( ... );` block shared by components and entities.
fn port_block(out: &mut String, s: &Streamlet, ports: &[LoweredPort], opts: &EmitOptions) {
    let mut rows: Vec<(Option<&str>, Signal)> = clock_signals(&s.interface.clock_domains())
        .into_iter()
        .map(|sig| (None, sig))
        .collect();
    for p in ports {
        for (i, sig) in port_signals(p).into_iter().enumerate() {
            rows.push((if i == 0 { p.documentation.as_deref() } else { None }, sig));
        }
    }
    out.push_str("  port (\n");
    let n = rows.len();
    for (i, (doc, sig)) in rows.into_iter().enumerate() {
        doc_lines(out, doc, "    ");
        let sep = if i + 1 == n { "" } else { ";" };
        let _ = writeln!(out, "    {} : {} {}{sep}", opts.id(&sig.name), sig.mode.keyword(), vhdl_type(sig.width));
    }
    out.push_str("  );\n");
}

/// The component declaration for a streamlet.
pub fn emit_component(db: &Database, s: &Streamlet, opts: &EmitOptions) -> Result<Arc<String>, Diagnostics> {
    let t = Tracker::root();
    let key = QueryKey::Component(s.namespace.clone(), s.name.clone(), opts.extended_identifiers);
    db.memo(
        &t,
        key,
        |t| {
            let ports = db.lowered_in(t, &s.namespace, &s.name)?;
            let mut out = String::new();
            doc_lines(&mut out, s.effective_documentation(), "");
            let _ = writeln!(out, "component {}", opts.id(&component_name(&s.namespace, &s.name)));
            port_block(&mut out, s, &ports, opts);
            out.push_str("end component;\n");
            Ok(Arc::new(out))
        },
        || Err(Vec::new()),
    )
}

const HEADER: &str = "library ieee;\nuse ieee.std_logic_1164.all;\n";

pub fn package_name(db: &Database) -> String {
    format!("{}_pkg", db.project().name())
}

/// One package holding the components of every streamlet.
pub fn emit_package(db: &Database, opts: &EmitOptions) -> Result<String, Diagnostics> {
    let pkg = package_name(db);
    let mut out = String::new();
    out.push_str(HEADER);
    let _ = writeln!(out, "\npackage {pkg} is");
    let mut errors = Vec::new();
    for (_, s) in db.all_streamlets().iter() {
        match emit_component(db, s, opts) {
            Ok(c) => {
                out.push('\n');
                out.push_str(&c);
            }
            Err(e) => errors.extend(e),
        }
    }
    let _ = writeln!(out, "\nend {pkg};");
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

fn entity_text(db: &Database, s: &Streamlet, ports: &[LoweredPort], opts: &EmitOptions) -> String {
    let name = opts.id(&component_name(&s.namespace, &s.name));
    let mut out = String::new();
    out.push_str(HEADER);
    let _ = writeln!(out, "\nlibrary work;\nuse work.{}.all;\n", package_name(db));
    doc_lines(&mut out, s.effective_documentation(), "");
    let _ = writeln!(out, "entity {name} is");
    port_block(&mut out, s, ports, opts);
    let _ = writeln!(out, "end {name};");
    out
}

fn empty_architecture(name: &str, doc: Option<&str>) -> String {
    let mut out = String::new();
    doc_lines(&mut out, doc, "");
    let _ = writeln!(out, "architecture TydiIR of {name} is\nbegin\nend TydiIR;");
    out
}

/// What to do for one streamlet's architecture file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArchitectureAction {
    /// Write generated text to the output tree.
    Generated(String),
    /// Copy an existing file from a linked directory.
    Imported { from: PathBuf, contents: String },
    /// No file exists in the linked directory: create a template there and
    /// place a copy in the output tree.
    Template { at: PathBuf, contents: String },
}

impl ArchitectureAction {
    pub fn contents(&self) -> &str {
        match self {
            ArchitectureAction::Generated(c) => c,
            ArchitectureAction::Imported { contents, .. } | ArchitectureAction::Template { contents, .. } => contents,
        }
    }
}

pub fn emit_architecture(
    db: &Database,
    s: &Streamlet,
    project_root: &Path,
    opts: &EmitOptions,
) -> Result<ArchitectureAction, Diagnostics> {
    let ports = db.lowered(&s.namespace, &s.name)?;
    let raw_name = component_name(&s.namespace, &s.name);
    let name = opts.id(&raw_name);
    let mut text = entity_text(db, s, &ports, opts);
    text.push('\n');
    match &s.implementation {
        None => {
            text.push_str(&empty_architecture(&name, None));
            Ok(ArchitectureAction::Generated(text))
        }
        Some(Implementation { kind: ImplementationKind::Linked(link), documentation }) => {
            let at = project_root.join(&link.path).join(format!("{raw_name}.vhd"));
            if at.is_file() {
                let contents = std::fs::read_to_string(&at).map_err(|e| vec![io_error(&at, &e)])?;
                Ok(ArchitectureAction::Imported { from: at, contents })
            } else {
                text.push_str(&empty_architecture(&name, documentation.as_deref()));
                Ok(ArchitectureAction::Template { at, contents: text })
            }
        }
        Some(Implementation { kind: ImplementationKind::Structural(st), documentation }) => {
            text.push_str(&structural(db, s, st, &ports, documentation.as_deref(), opts)?);
            Ok(ArchitectureAction::Generated(text))
        }
    }
}

fn io_error(path: &Path, e: &std::io::Error) -> Diagnostic {
    Diagnostic::error(codes::IO, e.to_string()).with_path(path.display().to_string())
}

fn structural(
    db: &Database,
    s: &Streamlet,
    st: &Structure,
    own: &[LoweredPort],
    doc: Option<&str>,
    opts: &EmitOptions,
) -> Result<String, Diagnostics> {
    struct Inst {
        component: String,
        formals: Vec<Signal>,
        ports: Vec<LoweredPort>,
        actuals: HashMap<String, String>,
    }
    let mut insts: Vec<(Identifier, Inst)> = Vec::new();
    for inst in st.instances.values() {
        let target = db.streamlet(&inst.namespace, &inst.streamlet)?;
        let ports = db.lowered(&inst.namespace, &inst.streamlet)?;
        let map = domain_map(inst, &target.interface, &s.interface);
        let mut actuals = HashMap::new();
        for d in target.interface.clock_domains() {
            let outer = map.get(&d).cloned().unwrap_or(Domain::Default);
            for sig in ["clk", "rst"] {
                actuals.insert(format!("{}{sig}", domain_prefix(&d)), format!("{}{sig}", domain_prefix(&outer)));
            }
        }
        let mut formals = clock_signals(&target.interface.clock_domains());
        formals.extend(ports.iter().flat_map(port_signals));
        insts.push((
            inst.name.clone(),
            Inst {
                component: component_name(&inst.namespace, &inst.streamlet),
                formals,
                ports: ports.to_vec(),
                actuals,
            },
        ));
    }
    let index: HashMap<Identifier, usize> = insts.iter().enumerate().map(|(k, (n, _))| (n.clone(), k)).collect();
    let find = |name: &Identifier| *index.get(name).expect("checked instance");

    let mut signals: Vec<Signal> = Vec::new();
    let mut assigns: Vec<(String, String)> = Vec::new();
    for c in &st.connections {
        let sigs = |r: &PortRef| -> Vec<Signal> {
            match r {
                PortRef::Own(p) => own.iter().find(|x| &x.name == p).map(port_signals).unwrap_or_default(),
                PortRef::Instance(i, p) => insts[find(i)]
                    .1
                    .ports
                    .iter()
                    .find(|x| &x.name == p)
                    .map(port_signals)
                    .unwrap_or_default(),
            }
        };
        let (sa, sb) = (sigs(&c.a), sigs(&c.b));
        match (&c.a, &c.b) {
            (PortRef::Instance(ia, _), PortRef::Instance(ib, _)) => {
                for (a, b) in sa.iter().zip(&sb) {
                    let wire = format!("{ia}__{}", a.name);
                    signals.push(Signal { name: wire.clone(), ..a.clone() });
                    insts[find(ia)].1.actuals.insert(a.name.clone(), wire.clone());
                    insts[find(ib)].1.actuals.insert(b.name.clone(), wire);
                }
            }
            (PortRef::Own(_), PortRef::Instance(i, _)) | (PortRef::Instance(i, _), PortRef::Own(_)) => {
                let (mine, theirs) = if matches!(c.a, PortRef::Own(_)) { (&sa, &sb) } else { (&sb, &sa) };
                let at = find(i);
                for (o, t) in mine.iter().zip(theirs) {
                    insts[at].1.actuals.insert(t.name.clone(), o.name.clone());
                }
            }
            (PortRef::Own(_), PortRef::Own(_)) => {
                for (a, b) in sa.iter().zip(&sb) {
                    // an entity input drives the other side
                    if a.mode == Mode::In {
                        assigns.push((b.name.clone(), a.name.clone()));
                    } else {
                        assigns.push((a.name.clone(), b.name.clone()));
                    }
                }
            }
        }
    }

    let name = opts.id(&component_name(&s.namespace, &s.name));
    let mut out = String::new();
    doc_lines(&mut out, doc, "");
    let _ = writeln!(out, "architecture TydiIR of {name} is");
    for sig in &signals {
        let _ = writeln!(out, "  signal {} : {};", opts.id(&sig.name), vhdl_type(sig.width));
    }
    out.push_str("begin\n");
    for (target, source) in &assigns {
        let _ = writeln!(out, "  {} <= {};", opts.id(target), opts.id(source));
    }
    for (label, inst) in &insts {
        let _ = writeln!(out, "  {} : {} port map (", opts.id(label.as_str()), opts.id(&inst.component));
        let n = inst.formals.len();
        for (k, f) in inst.formals.iter().enumerate() {
            let actual = inst.actuals.get(&f.name).map_or_else(|| "open".to_string(), |a| opts.id(a));
            let sep = if k + 1 == n { "" } else { "," };
            let _ = writeln!(out, "    {} => {actual}{sep}", opts.id(&f.name));
        }
        out.push_str("  );\n");
    }
    out.push_str("end TydiIR;\n");
    Ok(out)
}

/// A file the backend will write.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub path: PathBuf,
    pub contents: String,
    pub note: &'static str,
}

/// Every file of a project, computed before anything is written.
pub fn plan_output(db: &Database, project_root: &Path, out_dir: &Path, opts: &EmitOptions) -> Result<Vec<OutputFile>, Diagnostics> {
    let mut files = vec![OutputFile {
        path: out_dir.join(format!("{}.vhd", package_name(db))),
        contents: emit_package(db, opts)?,
        note: "package",
    }];
    let mut errors = Vec::new();
    for (ns, s) in db.all_streamlets().iter() {
        let path = out_dir.join(format!("{}.vhd", component_name(ns, &s.name)));
        match emit_architecture(db, s, project_root, opts) {
            Ok(ArchitectureAction::Generated(contents)) => files.push(OutputFile { path, contents, note: "generated" }),
            Ok(ArchitectureAction::Imported { contents, .. }) => files.push(OutputFile { path, contents, note: "imported" }),
            Ok(ArchitectureAction::Template { at, contents }) => {
                files.push(OutputFile { path: at, contents: contents.clone(), note: "template" });
                files.push(OutputFile { path, contents, note: "generated" });
            }
            Err(e) => errors.extend(e),
        }
    }
    if errors.is_empty() {
        Ok(files)
    } else {
        Err(errors)
    }
}

pub fn write_output(files: &[OutputFile]) -> Result<(), Diagnostic> {
    for f in files {
        if let Some(dir) = f.path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io_error(dir, &e))?;
        }
        std::fs::write(&f.path, &f.contents).map_err(|e| io_error(&f.path, &e))?;
    }
    Ok(())
}
