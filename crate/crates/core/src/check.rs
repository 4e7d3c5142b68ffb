// SPDX-License-Identifier: Apache-2.0

//! Connection, structure, domain and substitutability checks.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::db::{lower_interface, Category, Database, Diagnostics};
use crate::diagnostic::{codes, Diagnostic, Span};
use crate::ident::{Identifier, NamespacePath};
use crate::ir::{Domain, ImplementationKind, Interface, Mode, Port, PortRef, Streamlet, Structure};
use crate::logical::{type_eq, LogicalType};
use crate::lower::{self, resolve_source_sink};

/// One end of a connection inside a structural implementation.
#[derive(Debug, Clone)]
pub struct ResolvedEnd<'a> {
    /// How the end is named in messages, e.g. `i.a` or `self.b`.
    pub label: String,
    pub port: &'a Port,
    /// The mode as seen from inside the implementation: ports of the
    /// enclosing streamlet are flipped, so its `in` ports act as sources.
    pub mode: Mode,
    /// Domain in terms of the enclosing streamlet, if it could be mapped.
    pub domain: Option<Domain>,
}

impl<'a> ResolvedEnd<'a> {
    pub fn own(port: &'a Port) -> Self {
        ResolvedEnd {
            label: format!("self.{}", port.name),
            port,
            mode: port.mode.flip(),
            domain: Some(port.domain.clone()),
        }
    }

    pub fn instance(instance: &Identifier, port: &'a Port, domain: Option<Domain>) -> Self {
        ResolvedEnd { label: format!("{instance}.{}", port.name), port, mode: port.mode, domain }
    }
}

pub fn check_connection(a: &ResolvedEnd<'_>, b: &ResolvedEnd<'_>, span: &Span) -> Diagnostics {
    let mut out = Vec::new();
    let (ta, tb) = (&a.port.stream_type, &b.port.stream_type);
    if !type_eq(ta, tb) {
        let detail = if type_eq(&without_complexity(ta), &without_complexity(tb)) {
            let (ca, cb) = (complexities(ta), complexities(tb));
            format!("; the types differ only in complexity ({} vs {})", join(&ca), join(&cb))
        } else {
            String::new()
        };
        out.push(
            Diagnostic::error(
                codes::TYPE_MISMATCH,
                format!("cannot connect `{}` to `{}`: port types differ{detail}", a.label, b.label),
            )
            .with_span(span),
        );
    }
    if let (Some(da), Some(db)) = (&a.domain, &b.domain) {
        if da != db {
            out.push(
                Diagnostic::error(
                    codes::DOMAIN_MISMATCH,
                    format!("cannot connect `{}` ({da}) to `{}` ({db}): different domains", a.label, b.label),
                )
                .with_span(span),
            );
        }
    }
    if out.is_empty() {
        if let Ok(streams) = lower::split(a.port) {
            let ends = resolve_source_sink(a.mode, b.mode, &streams);
            if let Some(i) = ends.iter().position(Option::is_none) {
                let both = lower::is_source(a.mode, streams[i].direction);
                out.push(
                    Diagnostic::error(
                        codes::DIRECTION,
                        format!(
                            "cannot connect `{}` to `{}`: {} end drives stream `{}`",
                            a.label,
                            b.label,
                            if both { "more than one" } else { "no" },
                            streams[i].base_name()
                        ),
                    )
                    .with_span(span),
                );
            }
        }
    }
    out
}

fn join(items: &[u8]) -> String {
    items.iter().map(u8::to_string).collect::<Vec<_>>().join(",")
}

fn without_complexity(t: &LogicalType) -> LogicalType {
    match t {
        LogicalType::Null | LogicalType::Bits(_) => t.clone(),
        LogicalType::Group(f) => LogicalType::Group(f.iter().map(|(n, t)| (n.clone(), without_complexity(t))).collect()),
        LogicalType::Union(f) => LogicalType::Union(f.iter().map(|(n, t)| (n.clone(), without_complexity(t))).collect()),
        LogicalType::Stream(s) => {
            let mut s = (**s).clone();
            s.complexity = Default::default();
            s.data = without_complexity(&s.data);
            LogicalType::stream(s)
        }
    }
}

fn complexities(t: &LogicalType) -> Vec<u8> {
    let mut out = Vec::new();
    fn walk(t: &LogicalType, out: &mut Vec<u8>) {
        match t {
            LogicalType::Null | LogicalType::Bits(_) => {}
            LogicalType::Group(f) | LogicalType::Union(f) => f.iter().for_each(|(_, t)| walk(t, out)),
            LogicalType::Stream(s) => {
                out.push(s.complexity.level());
                walk(&s.data, out);
            }
        }
    }
    walk(t, &mut out);
    out
}

/// The enclosing side of a structural check.
#[derive(Debug, Clone, Copy)]
pub struct Enclosing<'a> {
    pub namespace: &'a NamespacePath,
    /// Set when checking a streamlet, to detect instances of itself.
    pub streamlet: Option<&'a Identifier>,
    pub label: &'a str,
    pub interface: &'a Interface,
}

pub fn check_streamlet_structure(db: &Database, s: &Streamlet, structure: &Structure) -> Diagnostics {
    let label = s.qualified_name();
    check_structural(
        db,
        Enclosing { namespace: &s.namespace, streamlet: Some(&s.name), label: &label, interface: &s.interface },
        structure,
    )
}

pub fn check_structural(db: &Database, enclosing: Enclosing<'_>, structure: &Structure) -> Diagnostics {
    let mut out = Vec::new();
    let outer_domains = enclosing.interface.clock_domains();

    // instance name -> (streamlet, inner domain -> enclosing domain)
    let mut resolved: BTreeMap<&Identifier, (std::sync::Arc<Streamlet>, HashMap<Domain, Domain>)> = BTreeMap::new();
    for inst in structure.instances.values() {
        let target = match db.streamlet(&inst.namespace, &inst.streamlet) {
            Ok(s) => s,
            Err(_) => {
                let exists = db
                    .project()
                    .namespace(&inst.namespace)
                    .and_then(|n| n.get(Category::Streamlet, &inst.streamlet))
                    .is_some();
                if !exists {
                    out.push(
                        Diagnostic::error(
                            codes::UNRESOLVED,
                            format!("instance `{}`: no streamlet `{}::{}`", inst.name, inst.namespace, inst.streamlet),
                        )
                        .with_span(&inst.span),
                    );
                }
                continue;
            }
        };
        if let Some(me) = enclosing.streamlet {
            if contains_instance_of(db, &target, enclosing.namespace, me) {
                out.push(
                    Diagnostic::error(
                        codes::RECURSIVE_INSTANCE,
                        format!("instance `{}` of `{}` contains `{}` itself", inst.name, target.qualified_name(), enclosing.label),
                    )
                    .with_span(&inst.span),
                );
                continue;
            }
        }
        let mapping = map_domains(inst, &target.interface, enclosing.interface, &outer_domains, &mut out);
        resolved.insert(&inst.name, (target, mapping));
    }

    let mut uses: HashMap<PortRef, usize> = HashMap::new();
    for c in &structure.connections {
        if c.a == c.b {
            out.push(
                Diagnostic::error(codes::SELF_LOOP, format!("`{}` is connected to itself", c.a)).with_span(&c.span),
            );
            continue;
        }
        let end = |r: &PortRef, out: &mut Diagnostics| -> Option<ResolvedEnd<'_>> {
            let found = match r {
                PortRef::Own(p) => enclosing.interface.port(p).map(ResolvedEnd::own),
                PortRef::Instance(i, p) => match resolved.get(i) {
                    Some((s, map)) => s
                        .interface
                        .port(p)
                        .map(|port| ResolvedEnd::instance(i, port, map.get(&port.domain).cloned())),
                    None if structure.instances.contains_key(i) => return None,
                    None => {
                        out.push(
                            Diagnostic::error(codes::UNKNOWN_PORT, format!("`{r}`: no instance `{i}`")).with_span(&c.span),
                        );
                        return None;
                    }
                },
            };
            if found.is_none() {
                let owner = match r.instance() {
                    Some(i) => format!("instance `{i}`"),
                    None => format!("`{}`", enclosing.label),
                };
                out.push(
                    Diagnostic::error(codes::UNKNOWN_PORT, format!("{owner} has no port `{}`", r.port())).with_span(&c.span),
                );
            }
            found
        };
        let a = end(&c.a, &mut out);
        let b = end(&c.b, &mut out);
        if let (Some(a), Some(b)) = (a, b) {
            *uses.entry(c.a.clone()).or_default() += 1;
            *uses.entry(c.b.clone()).or_default() += 1;
            out.extend(check_connection(&a, &b, &c.span));
        }
    }

    let mut report = |r: PortRef, span: &Span| match uses.get(&r).copied().unwrap_or(0) {
        0 => out.push(
            Diagnostic::error(codes::UNCONNECTED, format!("port `{}` of `{}` is not connected", label(&r), enclosing.label))
                .with_span(span),
        ),
        1 => {}
        n => out.push(
            Diagnostic::error(
                codes::MULTIPLE_CONNECTION,
                format!("port `{}` of `{}` is connected {n} times", label(&r), enclosing.label),
            )
            .with_span(span),
        ),
    };
    for p in &enclosing.interface.ports {
        report(PortRef::Own(p.name.clone()), &p.span);
    }
    for inst in structure.instances.values() {
        if let Some((s, _)) = resolved.get(&inst.name) {
            for p in &s.interface.ports {
                report(PortRef::Instance(inst.name.clone(), p.name.clone()), &inst.span);
            }
        }
    }
    out
}

fn label(r: &PortRef) -> String {
    match r {
        PortRef::Own(p) => format!("self.{p}"),
        PortRef::Instance(i, p) => format!("{i}.{p}"),
    }
}

/// Whether `s` instantiates `ns::name`, possibly through nested structure.
fn contains_instance_of(db: &Database, s: &Streamlet, ns: &NamespacePath, name: &Identifier) -> bool {
    let mut seen = HashSet::new();
    let mut stack = vec![(s.namespace.clone(), s.name.clone())];
    while let Some(key) = stack.pop() {
        if &key.0 == ns && &key.1 == name {
            return true;
        }
        if !seen.insert(key.clone()) {
            continue;
        }
        let Ok(cur) = db.streamlet(&key.0, &key.1) else { continue };
        if let Some(ImplementationKind::Structural(st)) = cur.implementation.as_ref().map(|i| &i.kind) {
            stack.extend(st.instances.values().map(|i| (i.namespace.clone(), i.streamlet.clone())));
        }
    }
    false
}

/// Instance domain to enclosing domain, with unresolvable entries dropped.
pub(crate) fn domain_map(inst: &crate::ir::Instance, inner: &Interface, outer: &Interface) -> HashMap<Domain, Domain> {
    map_domains(inst, inner, outer, &outer.clock_domains(), &mut Vec::new())
}

fn map_domains(
    inst: &crate::ir::Instance,
    inner: &Interface,
    outer: &Interface,
    outer_domains: &[Domain],
    out: &mut Diagnostics,
) -> HashMap<Domain, Domain> {
    let inner_domains = inner.clock_domains();
    let mut map = HashMap::new();
    for (from, to) in &inst.domains {
        // a bare `'outer` names the instance's only domain
        let from = match from {
            Domain::Default if inner_domains.len() == 1 => inner_domains[0].clone(),
            Domain::Default => {
                out.push(
                    Diagnostic::error(
                        codes::UNKNOWN_DOMAIN,
                        format!("instance `{}` has several domains; name the one mapped to {to}", inst.name),
                    )
                    .with_span(&inst.span),
                );
                continue;
            }
            d if inner_domains.contains(d) => d.clone(),
            d => {
                out.push(
                    Diagnostic::error(codes::UNKNOWN_DOMAIN, format!("instance `{}` has no domain {d}", inst.name))
                        .with_span(&inst.span),
                );
                continue;
            }
        };
        let to = match to {
            Domain::Named(n) if outer.domains.contains(n) => to.clone(),
            _ => {
                out.push(
                    Diagnostic::error(codes::UNKNOWN_DOMAIN, format!("instance `{}`: enclosing streamlet has no domain {to}", inst.name))
                        .with_span(&inst.span),
                );
                continue;
            }
        };
        if map.insert(from.clone(), to).is_some() {
            out.push(
                Diagnostic::error(codes::DUPLICATE, format!("instance `{}`: domain {from} is mapped twice", inst.name))
                    .with_span(&inst.span),
            );
        }
    }
    for d in inner_domains {
        if map.contains_key(&d) {
            continue;
        }
        if outer_domains.len() == 1 {
            map.insert(d, outer_domains[0].clone());
        } else {
            out.push(
                Diagnostic::error(
                    codes::DOMAIN_UNMAPPED,
                    format!("instance `{}`: domain {d} must be mapped to one of the enclosing domains", inst.name),
                )
                .with_span(&inst.span),
            );
        }
    }
    map
}

/// Whether `candidate` can stand in for `target`: the same ports by name,
/// with equal types and modes, and domains equal up to renaming.
pub fn substitutable(candidate: &Streamlet, target: &Streamlet) -> bool {
    let (c, t) = (&candidate.interface, &target.interface);
    if c.ports.len() != t.ports.len() || c.clock_domains().len() != t.clock_domains().len() {
        return false;
    }
    let mut forward: HashMap<&Domain, &Domain> = HashMap::new();
    let mut backward: HashMap<&Domain, &Domain> = HashMap::new();
    for p in &c.ports {
        let Some(q) = t.port(&p.name) else { return false };
        if p.mode != q.mode || !type_eq(&p.stream_type, &q.stream_type) {
            return false;
        }
        if *forward.entry(&p.domain).or_insert(&q.domain) != &q.domain
            || *backward.entry(&q.domain).or_insert(&p.domain) != &p.domain
        {
            return false;
        }
    }
    true
}

/// Every diagnostic for the project, deduplicated, in declaration order.
pub fn check_project(db: &Database) -> Diagnostics {
    let mut out = Vec::new();
    for (path, ns) in db.project().namespaces() {
        for decl in ns.decls() {
            let category = Category::of(decl);
            let name = decl.name();
            match category {
                Category::Type => {
                    if let Err(e) = db.logical_type(path, name) {
                        out.extend(e);
                    }
                }
                Category::Interface => match db.interface(path, name) {
                    Ok(iface) => {
                        if let Err(e) = lower_interface(&iface) {
                            out.extend(e);
                        }
                    }
                    Err(e) => out.extend(e),
                },
                Category::Implementation => match db.implementation(path, name) {
                    Ok(r) => {
                        if let Err(e) = lower_interface(&r.interface) {
                            out.extend(e);
                        }
                        if let ImplementationKind::Structural(st) = &r.implementation.kind {
                            let label = format!("{path}::{name}");
                            let enclosing =
                                Enclosing { namespace: path, streamlet: None, label: &label, interface: &r.interface };
                            out.extend(check_structural(db, enclosing, st));
                        }
                    }
                    Err(e) => out.extend(e),
                },
                Category::Streamlet => match db.streamlet(path, name) {
                    Ok(s) => {
                        if let Err(e) = db.lowered(path, name) {
                            out.extend(e);
                        }
                        match s.implementation.as_ref().map(|i| &i.kind) {
                            None => out.push(
                                Diagnostic::warning(
                                    codes::NO_IMPLEMENTATION,
                                    format!("streamlet `{}` has no implementation; an empty architecture is generated", s.qualified_name()),
                                )
                                .with_span(&s.span),
                            ),
                            Some(ImplementationKind::Structural(st)) => out.extend(check_streamlet_structure(db, &s, st)),
                            Some(ImplementationKind::Linked(_)) => {}
                        }
                    }
                    Err(e) => out.extend(e),
                },
            }
        }
    }
    dedup(out)
}

fn dedup(diags: Diagnostics) -> Diagnostics {
    let mut seen = HashSet::new();
    diags
        .into_iter()
        .filter(|d| {
            let at = d.span.as_ref().map(|s| (s.file.clone(), s.line, s.column));
            seen.insert((d.code, d.message.clone(), at))
        })
        .collect()
}
