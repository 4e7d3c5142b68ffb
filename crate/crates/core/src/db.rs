// SPDX-License-Identifier: Apache-2.0

//! Declaration store and memoized queries.
//!
//! A [`Project`] holds declarations as parsed. A [`Database`] seals a project
//! and answers queries over it; every query result is cached together with
//! the declarations it read and their content hashes. [`Database::revise`]
//! is the only way to mutate a sealed project: it diffs content hashes and
//! drops exactly the cached results that read a changed declaration.

use std::any::Any;
use std::cell::RefCell;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, RwLock};

use indexmap::IndexMap;
use serde::Serialize;

use crate::diagnostic::{codes, Diagnostic, Span};
use crate::ident::{Identifier, NamespacePath};
use crate::ir::{
    Connection, Domain, Implementation, ImplementationKind, Instance, Interface, LinkedPath, Mode,
    Port, PortRef, Streamlet, Structure,
};
use crate::logical::{Complexity, LogicalType, StreamProps, Throughput};
use crate::lower::{self, LowerError, PhysicalStream};
use crate::syntax::ast::{self, Decl, SourceFile};

pub type Diagnostics = Vec<Diagnostic>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Type,
    Interface,
    Implementation,
    Streamlet,
}

impl Category {
    pub fn of(decl: &Decl) -> Category {
        match decl {
            Decl::Type(_) => Category::Type,
            Decl::Interface(_) => Category::Interface,
            Decl::Implementation(_) => Category::Implementation,
            Decl::Streamlet(_) => Category::Streamlet,
        }
    }

    pub fn noun(self) -> &'static str {
        match self {
            Category::Type => "type",
            Category::Interface => "interface",
            Category::Implementation => "implementation",
            Category::Streamlet => "streamlet",
        }
    }
}

/// Identifies one declaration in a project.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeclKey {
    pub namespace: NamespacePath,
    pub category: Category,
    pub name: Identifier,
}

impl DeclKey {
    pub fn new(namespace: &NamespacePath, category: Category, name: &Identifier) -> Self {
        DeclKey { namespace: namespace.clone(), category, name: name.clone() }
    }
}

impl fmt::Display for DeclKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}::{}", self.category.noun(), self.namespace, self.name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Namespace {
    decls: IndexMap<(Category, Identifier), Decl>,
}

impl Namespace {
    pub fn get(&self, category: Category, name: &Identifier) -> Option<&Decl> {
        self.decls.get(&(category, name.clone()))
    }

    /// Declarations in insertion order.
    pub fn decls(&self) -> impl Iterator<Item = &Decl> {
        self.decls.values()
    }

    pub fn names(&self, category: Category) -> impl Iterator<Item = &Identifier> {
        self.decls.keys().filter(move |(c, _)| *c == category).map(|(_, n)| n)
    }

    fn type_decl(&self, name: &Identifier) -> Option<&ast::TypeDecl> {
        match self.get(Category::Type, name)? {
            Decl::Type(d) => Some(d),
            _ => None,
        }
    }

    fn interface_decl(&self, name: &Identifier) -> Option<&ast::InterfaceDecl> {
        match self.get(Category::Interface, name)? {
            Decl::Interface(d) => Some(d),
            _ => None,
        }
    }

    fn impl_decl(&self, name: &Identifier) -> Option<&ast::ImplDecl> {
        match self.get(Category::Implementation, name)? {
            Decl::Implementation(d) => Some(d),
            _ => None,
        }
    }

    fn streamlet_decl(&self, name: &Identifier) -> Option<&ast::StreamletDecl> {
        match self.get(Category::Streamlet, name)? {
            Decl::Streamlet(d) => Some(d),
            _ => None,
        }
    }
}

/// All declarations of a compilation, grouped by namespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Project {
    name: Identifier,
    namespaces: BTreeMap<NamespacePath, Namespace>,
}

impl Project {
    pub fn new(name: Identifier) -> Self {
        Project { name, namespaces: BTreeMap::new() }
    }

    pub fn name(&self) -> &Identifier {
        &self.name
    }

    pub fn namespaces(&self) -> &BTreeMap<NamespacePath, Namespace> {
        &self.namespaces
    }

    pub fn namespace(&self, path: &NamespacePath) -> Option<&Namespace> {
        self.namespaces.get(path)
    }

    /// Adds every declaration of a parsed file. Namespaces with the same path
    /// merge; a name declared twice in one category keeps the first.
    pub fn add_source(&mut self, file: &SourceFile) -> Diagnostics {
        let mut diags = Vec::new();
        for ns in &file.namespaces {
            let target = self.namespaces.entry(ns.path.clone()).or_default();
            for decl in &ns.decls {
                let key = (Category::of(decl), decl.name().clone());
                if target.decls.contains_key(&key) {
                    diags.push(
                        Diagnostic::error(
                            codes::DUPLICATE,
                            format!("{} `{}` is declared more than once in `{}`", key.0.noun(), key.1, ns.path),
                        )
                        .with_span(decl.span()),
                    );
                } else {
                    target.decls.insert(key, decl.clone());
                }
            }
        }
        diags
    }

    /// Inserts or replaces a declaration, returning the previous one.
    pub fn insert(&mut self, namespace: &NamespacePath, decl: Decl) -> Option<Decl> {
        let key = (Category::of(&decl), decl.name().clone());
        self.namespaces.entry(namespace.clone()).or_default().decls.insert(key, decl)
    }

    pub fn remove(&mut self, key: &DeclKey) -> Option<Decl> {
        self.namespaces
            .get_mut(&key.namespace)?
            .decls
            .shift_remove(&(key.category, key.name.clone()))
    }

    /// Moves a namespace to a new path. Fails if the source is missing or the
    /// destination already exists.
    pub fn rename_namespace(&mut self, from: &NamespacePath, to: &NamespacePath) -> bool {
        if self.namespaces.contains_key(to) {
            return false;
        }
        match self.namespaces.remove(from) {
            Some(ns) => {
                self.namespaces.insert(to.clone(), ns);
                true
            }
            None => false,
        }
    }

    /// The project as one source tree, for canonical printing.
    pub fn to_source(&self) -> SourceFile {
        SourceFile {
            namespaces: self
                .namespaces
                .iter()
                .map(|(path, ns)| ast::NamespaceDecl {
                    path: path.clone(),
                    decls: ns.decls.values().cloned().collect(),
                    span: Span::default(),
                })
                .collect(),
        }
    }

    fn content_hashes(&self) -> HashMap<Dep, u64> {
        let mut out = HashMap::new();
        let mut listing = DefaultHasher::new();
        for (path, ns) in &self.namespaces {
            path.hash(&mut listing);
            for ((category, name), decl) in &ns.decls {
                let mut h = DefaultHasher::new();
                decl.hash(&mut h);
                out.insert(Dep::Decl(DeclKey::new(path, *category, name)), h.finish());
                if *category == Category::Streamlet {
                    name.hash(&mut listing);
                }
            }
        }
        out.insert(Dep::Listing, listing.finish());
        out
    }
}

/// Something a query read.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Dep {
    Decl(DeclKey),
    /// The set of namespaces and the streamlet names in each.
    Listing,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum QueryKey {
    Type(NamespacePath, Identifier),
    Interface(NamespacePath, Identifier),
    Implementation(NamespacePath, Identifier),
    Streamlet(NamespacePath, Identifier),
    Lowering(NamespacePath, Identifier),
    /// Component text; the flag selects extended identifiers.
    Component(NamespacePath, Identifier, bool),
    AllStreamlets,
}

impl QueryKey {
    fn kind(&self) -> &'static str {
        match self {
            QueryKey::Type(..) => "type",
            QueryKey::Interface(..) => "interface",
            QueryKey::Implementation(..) => "implementation",
            QueryKey::Streamlet(..) => "streamlet",
            QueryKey::Lowering(..) => "lowering",
            QueryKey::Component(..) => "component",
            QueryKey::AllStreamlets => "all_streamlets",
        }
    }
}

struct Entry {
    value: Arc<dyn Any + Send + Sync>,
    deps: Vec<Dep>,
}

/// Per-query-kind counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QueryStats {
    pub computed: u64,
    pub hits: u64,
}

/// Records what a running query reads, and which queries are in progress
/// above it (for cycle detection).
pub(crate) struct Tracker<'a> {
    key: Option<QueryKey>,
    parent: Option<&'a Tracker<'a>>,
    deps: RefCell<Vec<Dep>>,
}

impl<'a> Tracker<'a> {
    pub(crate) fn root() -> Tracker<'static> {
        Tracker { key: None, parent: None, deps: RefCell::new(Vec::new()) }
    }

    fn record(&self, dep: Dep) {
        self.deps.borrow_mut().push(dep);
    }

    fn active(&self, key: &QueryKey) -> bool {
        let mut cur = Some(self);
        while let Some(t) = cur {
            if t.key.as_ref() == Some(key) {
                return true;
            }
            cur = t.parent;
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LoweredPort {
    pub name: Identifier,
    pub mode: Mode,
    pub domain: Domain,
    pub documentation: Option<String>,
    pub streams: Vec<PhysicalStream>,
}

/// An implementation declaration with the interface it implements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResolvedImpl {
    pub interface: Interface,
    pub implementation: Implementation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Declaration {
    Type(LogicalType),
    Interface(Interface),
    Implementation(Arc<ResolvedImpl>),
    Streamlet(Arc<Streamlet>),
}

pub type StreamletList = Arc<Vec<(NamespacePath, Arc<Streamlet>)>>;

/// A sealed project plus its query cache.
pub struct Database {
    project: Project,
    hashes: HashMap<Dep, u64>,
    revision: u64,
    memo: RwLock<HashMap<QueryKey, Entry>>,
    stats: Mutex<BTreeMap<&'static str, QueryStats>>,
}

impl fmt::Debug for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Database")
            .field("project", &self.project.name)
            .field("revision", &self.revision)
            .finish_non_exhaustive()
    }
}

impl Database {
    pub fn new(project: Project) -> Self {
        Database {
            hashes: project.content_hashes(),
            project,
            revision: 0,
            memo: RwLock::new(HashMap::new()),
            stats: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn project(&self) -> &Project {
        &self.project
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Applies a mutation and discards every cached result that read a
    /// declaration whose content changed. Re-inserting identical content
    /// keeps the cache.
    pub fn revise<R>(&mut self, edit: impl FnOnce(&mut Project) -> R) -> R {
        let result = edit(&mut self.project);
        let hashes = self.project.content_hashes();
        let changed: HashSet<Dep> = self
            .hashes
            .keys()
            .chain(hashes.keys())
            .filter(|k| self.hashes.get(*k) != hashes.get(*k))
            .cloned()
            .collect();
        self.hashes = hashes;
        self.revision += 1;
        self.drop_dependents(&changed);
        result
    }

    /// Discards cached results that depend on `key`, directly or through
    /// other queries.
    pub fn invalidate(&mut self, key: &DeclKey) {
        let changed = HashSet::from([Dep::Decl(key.clone())]);
        self.drop_dependents(&changed);
    }

    fn drop_dependents(&mut self, changed: &HashSet<Dep>) {
        if changed.is_empty() {
            return;
        }
        // dependencies are propagated to parents, so one pass is transitive
        let memo = self.memo.get_mut().expect("memo lock poisoned");
        memo.retain(|_, e| !e.deps.iter().any(|d| changed.contains(d)));
    }

    pub fn stats(&self) -> BTreeMap<&'static str, QueryStats> {
        self.stats.lock().expect("stats lock poisoned").clone()
    }

    pub fn reset_stats(&self) {
        self.stats.lock().expect("stats lock poisoned").clear();
    }

    /// Total recomputations since the last reset.
    pub fn computed(&self) -> u64 {
        self.stats().values().map(|s| s.computed).sum()
    }

    fn count(&self, key: &QueryKey, hit: bool) {
        let mut stats = self.stats.lock().expect("stats lock poisoned");
        let s = stats.entry(key.kind()).or_default();
        if hit {
            s.hits += 1;
        } else {
            s.computed += 1;
        }
    }

    /// Runs `compute` unless a cached value exists. A query that is already
    /// running further up the stack yields `on_cycle()` instead.
    pub(crate) fn memo<T: Clone + Send + Sync + 'static>(
        &self,
        parent: &Tracker<'_>,
        key: QueryKey,
        compute: impl FnOnce(&Tracker<'_>) -> T,
        on_cycle: impl FnOnce() -> T,
    ) -> T {
        if parent.active(&key) {
            return on_cycle();
        }
        if let Some(e) = self.memo.read().expect("memo lock poisoned").get(&key) {
            if let Some(v) = e.value.downcast_ref::<T>() {
                parent.deps.borrow_mut().extend(e.deps.iter().cloned());
                self.count(&key, true);
                return v.clone();
            }
        }
        let child = Tracker { key: Some(key.clone()), parent: Some(parent), deps: RefCell::new(Vec::new()) };
        let value = compute(&child);
        let mut deps = child.deps.into_inner();
        let mut seen = HashSet::new();
        deps.retain(|d| seen.insert(d.clone()));
        parent.deps.borrow_mut().extend(deps.iter().cloned());
        self.count(&key, false);
        self.memo
            .write()
            .expect("memo lock poisoned")
            .insert(key, Entry { value: Arc::new(value.clone()), deps });
        value
    }

    fn lookup(&self, t: &Tracker<'_>, ns: &NamespacePath, category: Category, name: &Identifier) -> Option<&Namespace> {
        t.record(Dep::Decl(DeclKey::new(ns, category, name)));
        self.project.namespaces.get(ns)
    }

    // -- public queries ----------------------------------------------------

    pub fn logical_type(&self, ns: &NamespacePath, name: &Identifier) -> Result<LogicalType, Diagnostics> {
        self.resolve(ns, name, Category::Type).map(|d| match d {
            Declaration::Type(t) => t,
            _ => unreachable!(),
        })
    }

    pub fn interface(&self, ns: &NamespacePath, name: &Identifier) -> Result<Interface, Diagnostics> {
        self.resolve(ns, name, Category::Interface).map(|d| match d {
            Declaration::Interface(i) => i,
            _ => unreachable!(),
        })
    }

    pub fn implementation(&self, ns: &NamespacePath, name: &Identifier) -> Result<Arc<ResolvedImpl>, Diagnostics> {
        self.resolve(ns, name, Category::Implementation).map(|d| match d {
            Declaration::Implementation(i) => i,
            _ => unreachable!(),
        })
    }

    pub fn streamlet(&self, ns: &NamespacePath, name: &Identifier) -> Result<Arc<Streamlet>, Diagnostics> {
        self.resolve(ns, name, Category::Streamlet).map(|d| match d {
            Declaration::Streamlet(s) => s,
            _ => unreachable!(),
        })
    }

    /// Looks up and resolves one declaration.
    pub fn resolve(&self, ns: &NamespacePath, name: &Identifier, category: Category) -> Result<Declaration, Diagnostics> {
        let t = Tracker::root();
        let exists = self.lookup(&t, ns, category, name).and_then(|n| n.get(category, name)).is_some();
        if !exists {
            return Err(vec![Diagnostic::error(
                codes::UNRESOLVED,
                format!("no {} `{name}` in namespace `{ns}`", category.noun()),
            )]);
        }
        let cycle = || vec![];
        Ok(match category {
            Category::Type => Declaration::Type(self.type_query(&t, ns, name, &Span::default())?),
            Category::Interface => Declaration::Interface(self.interface_query(&t, ns, name, cycle)?),
            Category::Implementation => Declaration::Implementation(self.impl_query(&t, ns, name, cycle)?),
            Category::Streamlet => Declaration::Streamlet(self.streamlet_query(&t, ns, name, cycle)?),
        })
    }

    /// Every streamlet that resolves, ordered by namespace path and then by
    /// declaration order.
    pub fn all_streamlets(&self) -> StreamletList {
        self.all_streamlets_in(&Tracker::root())
    }

    pub(crate) fn all_streamlets_in(&self, t: &Tracker<'_>) -> StreamletList {
        self.memo(
            t,
            QueryKey::AllStreamlets,
            |t| {
                t.record(Dep::Listing);
                let mut out = Vec::new();
                for (path, ns) in &self.project.namespaces {
                    for name in ns.names(Category::Streamlet) {
                        self.lookup(t, path, Category::Streamlet, name);
                        if let Ok(s) = self.streamlet_query(t, path, name, Vec::new) {
                            out.push((path.clone(), s));
                        }
                    }
                }
                Arc::new(out)
            },
            || Arc::new(Vec::new()),
        )
    }

    /// The physical streams of every port of a streamlet.
    pub fn lowered(&self, ns: &NamespacePath, name: &Identifier) -> Result<Arc<Vec<LoweredPort>>, Diagnostics> {
        self.lowered_in(&Tracker::root(), ns, name)
    }

    pub(crate) fn lowered_in(
        &self,
        t: &Tracker<'_>,
        ns: &NamespacePath,
        name: &Identifier,
    ) -> Result<Arc<Vec<LoweredPort>>, Diagnostics> {
        self.memo(
            t,
            QueryKey::Lowering(ns.clone(), name.clone()),
            |t| {
                let s = self.streamlet_query(t, ns, name, Vec::new)?;
                lower_interface(&s.interface).map(Arc::new)
            },
            || Err(Vec::new()),
        )
    }

    // -- resolution --------------------------------------------------------

    fn type_query(&self, t: &Tracker<'_>, ns: &NamespacePath, name: &Identifier, at: &Span) -> Result<LogicalType, Diagnostics> {
        self.memo(
            t,
            QueryKey::Type(ns.clone(), name.clone()),
            |t| {
                let decl = self
                    .lookup(t, ns, Category::Type, name)
                    .and_then(|n| n.type_decl(name))
                    .ok_or_else(|| vec![unresolved(Category::Type, ns, name, at)])?;
                self.resolve_type(t, ns, &decl.ty)
            },
            || {
                Err(vec![Diagnostic::error(codes::CYCLE, format!("type `{ns}::{name}` is defined in terms of itself"))
                    .with_span(at)])
            },
        )
    }

    fn interface_query(
        &self,
        t: &Tracker<'_>,
        ns: &NamespacePath,
        name: &Identifier,
        on_cycle: impl FnOnce() -> Diagnostics,
    ) -> Result<Interface, Diagnostics> {
        self.memo(
            t,
            QueryKey::Interface(ns.clone(), name.clone()),
            |t| {
                let decl = self
                    .lookup(t, ns, Category::Interface, name)
                    .and_then(|n| n.interface_decl(name))
                    .ok_or_else(|| vec![unresolved(Category::Interface, ns, name, &Span::default())])?;
                let mut iface = self.resolve_interface(t, ns, &decl.iface)?;
                if decl.doc.is_some() {
                    iface.documentation = decl.doc.clone();
                }
                Ok(iface)
            },
            || Err(on_cycle()),
        )
    }

    fn impl_query(
        &self,
        t: &Tracker<'_>,
        ns: &NamespacePath,
        name: &Identifier,
        on_cycle: impl FnOnce() -> Diagnostics,
    ) -> Result<Arc<ResolvedImpl>, Diagnostics> {
        self.memo(
            t,
            QueryKey::Implementation(ns.clone(), name.clone()),
            |t| {
                let decl = self
                    .lookup(t, ns, Category::Implementation, name)
                    .and_then(|n| n.impl_decl(name))
                    .ok_or_else(|| vec![unresolved(Category::Implementation, ns, name, &Span::default())])?;
                let iface = self.resolve_interface(t, ns, &decl.iface);
                let iface = iface?;
                let mut implementation = self.resolve_body(t, ns, &decl.body, &iface)?;
                if decl.doc.is_some() {
                    implementation.documentation = decl.doc.clone();
                }
                Ok(Arc::new(ResolvedImpl { interface: iface, implementation }))
            },
            || Err(on_cycle()),
        )
    }

    fn streamlet_query(
        &self,
        t: &Tracker<'_>,
        ns: &NamespacePath,
        name: &Identifier,
        on_cycle: impl FnOnce() -> Diagnostics,
    ) -> Result<Arc<Streamlet>, Diagnostics> {
        self.memo(
            t,
            QueryKey::Streamlet(ns.clone(), name.clone()),
            |t| {
                let decl = self
                    .lookup(t, ns, Category::Streamlet, name)
                    .and_then(|n| n.streamlet_decl(name))
                    .ok_or_else(|| vec![unresolved(Category::Streamlet, ns, name, &Span::default())])?;
                let interface = self.resolve_interface(t, ns, &decl.iface)?;
                let implementation = match &decl.body {
                    Some(body) => Some(self.resolve_body(t, ns, body, &interface)?),
                    None => None,
                };
                Ok(Arc::new(Streamlet {
                    namespace: ns.clone(),
                    name: name.clone(),
                    interface,
                    implementation,
                    documentation: decl.doc.clone(),
                    span: decl.span.clone(),
                }))
            },
            || Err(on_cycle()),
        )
    }

    fn resolve_type(&self, t: &Tracker<'_>, ns: &NamespacePath, expr: &ast::TypeExpr) -> Result<LogicalType, Diagnostics> {
        use ast::TypeKind;
        let invalid = |msg: String| vec![Diagnostic::error(codes::INVALID_TYPE, msg).with_span(&expr.span)];
        match &expr.kind {
            TypeKind::Ref(r) => {
                let target = r.namespace.as_ref().unwrap_or(ns);
                let exists = self.lookup(t, target, Category::Type, &r.name).and_then(|n| n.type_decl(&r.name));
                if exists.is_none() {
                    return Err(vec![unresolved(Category::Type, target, &r.name, &r.span)]);
                }
                self.type_query(t, target, &r.name, &r.span)
            }
            TypeKind::Null => Ok(LogicalType::Null),
            TypeKind::Bits(0) => Err(invalid("Bits width must be at least 1".into())),
            TypeKind::Bits(n) => u32::try_from(*n)
                .map(LogicalType::Bits)
                .map_err(|_| invalid(format!("Bits width {n} is too large"))),
            TypeKind::Group(fields) | TypeKind::Union(fields) => {
                let is_union = matches!(expr.kind, TypeKind::Union(_));
                let mut errors = Vec::new();
                if is_union && fields.is_empty() {
                    errors.extend(invalid("Union must have at least one field".into()));
                }
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                for f in fields {
                    if !seen.insert(&f.name) {
                        errors.push(
                            Diagnostic::error(codes::DUPLICATE, format!("field `{}` is declared more than once", f.name))
                                .with_span(&f.span),
                        );
                    }
                    match self.resolve_type(t, ns, &f.ty) {
                        Ok(ty) => out.push((f.name.clone(), ty)),
                        Err(e) => errors.extend(e),
                    }
                }
                if !errors.is_empty() {
                    return Err(errors);
                }
                Ok(if is_union { LogicalType::Union(out) } else { LogicalType::Group(out) })
            }
            TypeKind::Stream(s) => {
                let mut errors = Vec::new();
                let data = self.resolve_type(t, ns, &s.data).map_err(|e| errors.extend(e)).ok();
                let user = match &s.user {
                    Some(u) => match self.resolve_type(t, ns, u) {
                        Ok(ty) if ty.contains_stream() => {
                            errors.push(
                                Diagnostic::error(codes::USER_HAS_STREAM, "user type must not contain a Stream")
                                    .with_span(&u.span),
                            );
                            None
                        }
                        Ok(ty) => Some(ty),
                        Err(e) => {
                            errors.extend(e);
                            None
                        }
                    },
                    None => None,
                };
                let complexity = match s.complexity {
                    Some(c) => Complexity::new(c).map_err(|e| errors.extend(invalid(e.to_string()))).ok(),
                    None => Some(Complexity::MIN),
                };
                let dimensionality = match s.dimensionality {
                    Some(d) => u32::try_from(d)
                        .map_err(|_| errors.extend(invalid(format!("dimensionality {d} is too large"))))
                        .ok(),
                    None => Some(0),
                };
                match (data, complexity, dimensionality) {
                    (Some(data), Some(complexity), Some(dimensionality)) if errors.is_empty() => {
                        Ok(LogicalType::stream(StreamProps {
                            data,
                            throughput: s.throughput.unwrap_or(Throughput::ONE),
                            dimensionality,
                            synchronicity: s.synchronicity.unwrap_or(crate::logical::Synchronicity::Sync),
                            complexity,
                            direction: s.direction.unwrap_or(crate::logical::Direction::Forward),
                            user,
                            keep: s.keep.unwrap_or(false),
                        }))
                    }
                    _ => Err(errors),
                }
            }
        }
    }

    fn resolve_interface(&self, t: &Tracker<'_>, ns: &NamespacePath, expr: &ast::InterfaceExpr) -> Result<Interface, Diagnostics> {
        match expr {
            ast::InterfaceExpr::Ref(r) => {
                let target = r.namespace.as_ref().unwrap_or(ns);
                let cycle = || {
                    vec![Diagnostic::error(codes::CYCLE, format!("interface `{r}` is defined in terms of itself"))
                        .with_span(&r.span)]
                };
                let found = self.lookup(t, target, Category::Interface, &r.name);
                if found.and_then(|n| n.interface_decl(&r.name)).is_some() {
                    return self.interface_query(t, target, &r.name, cycle);
                }
                let found = self.lookup(t, target, Category::Streamlet, &r.name);
                if found.and_then(|n| n.streamlet_decl(&r.name)).is_some() {
                    return self.streamlet_query(t, target, &r.name, cycle).map(|s| s.interface_of());
                }
                Err(vec![Diagnostic::error(
                    codes::UNRESOLVED,
                    format!("no interface or streamlet `{}` in namespace `{target}`", r.name),
                )
                .with_span(&r.span)])
            }
            ast::InterfaceExpr::Inline { domains, ports, .. } => {
                let mut errors = Vec::new();
                let mut names = Vec::new();
                for d in domains {
                    if names.contains(&d.name) {
                        errors.push(
                            Diagnostic::error(codes::DUPLICATE, format!("domain '{} is declared more than once", d.name))
                                .with_span(&d.span),
                        );
                    } else {
                        names.push(d.name.clone());
                    }
                }
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                for p in ports {
                    if !seen.insert(&p.name) {
                        errors.push(
                            Diagnostic::error(codes::DUPLICATE, format!("port `{}` is declared more than once", p.name))
                                .with_span(&p.span),
                        );
                    }
                    let domain = match &p.domain {
                        Some(d) if names.contains(d) => Some(Domain::Named(d.clone())),
                        Some(d) => {
                            errors.push(
                                Diagnostic::error(codes::UNKNOWN_DOMAIN, format!("port `{}` uses undeclared domain '{d}", p.name))
                                    .with_span(&p.span),
                            );
                            None
                        }
                        None if names.is_empty() => Some(Domain::Default),
                        None if names.len() == 1 => Some(Domain::Named(names[0].clone())),
                        None => {
                            errors.push(
                                Diagnostic::error(
                                    codes::UNKNOWN_DOMAIN,
                                    format!("port `{}` must name one of the interface's domains", p.name),
                                )
                                .with_span(&p.span),
                            );
                            None
                        }
                    };
                    let ty = match self.resolve_type(t, ns, &p.ty) {
                        Ok(ty) if ty.as_stream().is_none() => {
                            errors.push(
                                Diagnostic::error(codes::NOT_STREAM, format!("port `{}` must carry a Stream", p.name))
                                    .with_span(&p.ty.span),
                            );
                            None
                        }
                        Ok(ty) => Some(ty),
                        Err(e) => {
                            errors.extend(e);
                            None
                        }
                    };
                    if let (Some(domain), Some(stream_type)) = (domain, ty) {
                        out.push(Port {
                            name: p.name.clone(),
                            mode: p.mode,
                            stream_type,
                            domain,
                            documentation: p.doc.clone(),
                            span: p.span.clone(),
                        });
                    }
                }
                if errors.is_empty() {
                    Ok(Interface { domains: names, ports: out, documentation: None })
                } else {
                    Err(errors)
                }
            }
        }
    }

    fn resolve_body(
        &self,
        t: &Tracker<'_>,
        ns: &NamespacePath,
        body: &ast::ImplBody,
        iface: &Interface,
    ) -> Result<Implementation, Diagnostics> {
        match body {
            ast::ImplBody::Link { path, span } => Ok(Implementation {
                kind: ImplementationKind::Linked(LinkedPath { path: path.clone(), span: span.clone() }),
                documentation: None,
            }),
            ast::ImplBody::Ref(r) => {
                let target = r.namespace.as_ref().unwrap_or(ns);
                let found = self.lookup(t, target, Category::Implementation, &r.name);
                if found.and_then(|n| n.impl_decl(&r.name)).is_none() {
                    return Err(vec![unresolved(Category::Implementation, target, &r.name, &r.span)]);
                }
                let cycle = || {
                    vec![Diagnostic::error(codes::CYCLE, format!("implementation `{r}` refers to itself"))
                        .with_span(&r.span)]
                };
                let resolved = self.impl_query(t, target, &r.name, cycle)?;
                if !resolved.interface.same_shape(iface) {
                    return Err(vec![Diagnostic::error(
                        codes::IMPL_INTERFACE,
                        format!("implementation `{r}` is declared for a different interface"),
                    )
                    .with_span(&r.span)]);
                }
                Ok(resolved.implementation.clone())
            }
            ast::ImplBody::Structural(stmts) => {
                let mut errors = Vec::new();
                let mut structure = Structure::default();
                for stmt in stmts {
                    match stmt {
                        ast::Statement::Instance(i) => {
                            if i.name.as_str() == "self" {
                                errors.push(
                                    Diagnostic::error(codes::SYNTAX, "`self` cannot name an instance").with_span(&i.span),
                                );
                                continue;
                            }
                            if structure.instances.contains_key(&i.name) {
                                errors.push(
                                    Diagnostic::error(codes::DUPLICATE, format!("instance `{}` is declared more than once", i.name))
                                        .with_span(&i.span),
                                );
                                continue;
                            }
                            let domains = i
                                .domains
                                .iter()
                                .map(|d| {
                                    let inner = d.inner.clone().map_or(Domain::Default, Domain::Named);
                                    (inner, Domain::Named(d.outer.clone()))
                                })
                                .collect();
                            structure.instances.insert(
                                i.name.clone(),
                                Instance {
                                    name: i.name.clone(),
                                    namespace: i.streamlet.namespace.clone().unwrap_or_else(|| ns.clone()),
                                    streamlet: i.streamlet.name.clone(),
                                    domains,
                                    span: i.span.clone(),
                                },
                            );
                        }
                        ast::Statement::Connection(c) => {
                            let end = |e: &ast::Endpoint| match &e.instance {
                                Some(inst) => PortRef::Instance(inst.clone(), e.port.clone()),
                                None => PortRef::Own(e.port.clone()),
                            };
                            structure.connections.push(Connection { a: end(&c.a), b: end(&c.b), span: c.span.clone() });
                        }
                    }
                }
                if errors.is_empty() {
                    Ok(Implementation { kind: ImplementationKind::Structural(structure), documentation: None })
                } else {
                    Err(errors)
                }
            }
        }
    }
}

fn unresolved(category: Category, ns: &NamespacePath, name: &Identifier, at: &Span) -> Diagnostic {
    Diagnostic::error(codes::UNRESOLVED, format!("no {} `{name}` in namespace `{ns}`", category.noun())).with_span(at)
}

/// Splits every port of an interface.
pub fn lower_interface(iface: &Interface) -> Result<Vec<LoweredPort>, Diagnostics> {
    let mut errors = Vec::new();
    let mut out = Vec::new();
    for p in &iface.ports {
        match lower::split(p) {
            Ok(streams) => out.push(LoweredPort {
                name: p.name.clone(),
                mode: p.mode,
                domain: p.domain.clone(),
                documentation: p.documentation.clone(),
                streams,
            }),
            Err(e) => errors.push(lower_diagnostic(&e, p)),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

pub(crate) fn lower_diagnostic(e: &LowerError, port: &Port) -> Diagnostic {
    let code = match e {
        LowerError::NotStream => codes::NOT_STREAM,
        LowerError::NameConflict(_) => codes::NAME_CONFLICT,
        LowerError::UserHasStream(_) => codes::USER_HAS_STREAM,
        LowerError::Overflow(_) => codes::INVALID_TYPE,
    };
    Diagnostic::error(code, format!("port `{}`: {e}", port.name)).with_span(&port.span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::id;
    use crate::syntax::parse_til;

    fn db(src: &str) -> Database {
        let (file, diags) = parse_til("t.til", src);
        assert!(diags.is_empty(), "{diags:?}");
        let mut p = Project::new(id("t"));
        assert!(p.add_source(&file).is_empty());
        Database::new(p)
    }

    fn ns(s: &str) -> NamespacePath {
        s.parse().unwrap()
    }

    const TWO: &str = "
namespace a {
    type ta = Stream(data: Bits(4));
    type tb = Stream(data: Bits(2));
    streamlet sa = (x: in ta);
    streamlet sb = (y: out tb);
}
namespace b {
    streamlet other = a::sa;
}
";

    #[test]
    fn resolves_across_namespaces() {
        let db = db(TWO);
        let other = db.streamlet(&ns("b"), &id("other")).unwrap();
        let sa = db.streamlet(&ns("a"), &id("sa")).unwrap();
        assert_eq!(other.interface, sa.interface);
        assert!(matches!(db.resolve(&ns("a"), &id("ta"), Category::Type), Ok(Declaration::Type(_))));
        let err = db.resolve(&ns("a"), &id("nope"), Category::Type).unwrap_err();
        assert_eq!(err[0].code, codes::UNRESOLVED);
    }

    #[test]
    fn listing_order() {
        let db = db(TWO);
        let names: Vec<_> = db.all_streamlets().iter().map(|(p, s)| format!("{p}::{}", s.name)).collect();
        assert_eq!(names, ["a::sa", "a::sb", "b::other"]);
        assert!(Database::new(Project::new(id("e"))).all_streamlets().is_empty());
    }

    #[test]
    fn unchanged_revision_hits() {
        let db = db(TWO);
        for (p, s) in db.all_streamlets().iter() {
            db.lowered(p, &s.name).unwrap();
        }
        db.reset_stats();
        for (p, s) in db.all_streamlets().iter() {
            db.lowered(p, &s.name).unwrap();
        }
        assert_eq!(db.computed(), 0);
    }

    #[test]
    fn change_invalidates_only_dependents() {
        let mut db = db(TWO);
        db.lowered(&ns("a"), &id("sa")).unwrap();
        db.lowered(&ns("a"), &id("sb")).unwrap();
        let (file, _) = parse_til("u", "namespace a { type ta = Stream(data: Bits(5)); }");
        let decl = file.namespaces[0].decls[0].clone();
        db.revise(|p| p.insert(&ns("a"), decl));
        db.reset_stats();
        assert_eq!(db.lowered(&ns("a"), &id("sa")).unwrap()[0].streams[0].element_bits, 5);
        assert_eq!(db.stats()["lowering"].computed, 1);
        db.reset_stats();
        db.lowered(&ns("a"), &id("sb")).unwrap();
        assert_eq!(db.stats()["lowering"], QueryStats { computed: 0, hits: 1 });
    }

    #[test]
    fn identical_reinsertion_keeps_cache() {
        let mut db = db(TWO);
        db.lowered(&ns("a"), &id("sa")).unwrap();
        let decl = db.project().namespace(&ns("a")).unwrap().get(Category::Type, &id("ta")).unwrap().clone();
        db.revise(|p| p.insert(&ns("a"), decl));
        db.reset_stats();
        db.lowered(&ns("a"), &id("sa")).unwrap();
        assert_eq!(db.computed(), 0);
    }

    #[test]
    fn namespace_rename_recomputes_dependents() {
        let mut db = db(TWO);
        db.streamlet(&ns("b"), &id("other")).unwrap();
        assert!(db.revise(|p| p.rename_namespace(&ns("a"), &ns("c"))));
        let err = db.streamlet(&ns("b"), &id("other")).unwrap_err();
        assert_eq!(err[0].code, codes::UNRESOLVED);
        db.reset_stats();
        assert!(db.streamlet(&ns("c"), &id("sa")).is_ok());
        assert!(db.stats()["streamlet"].computed >= 1);
    }

    #[test]
    fn type_cycles() {
        let db = db("namespace n { type a = Stream(data: b); type b = Group(x: a); }");
        let err = db.logical_type(&ns("n"), &id("a")).unwrap_err();
        assert!(err.iter().any(|d| d.code == codes::CYCLE), "{err:?}");
        let err = db.logical_type(&ns("n"), &id("b")).unwrap_err();
        assert!(err.iter().any(|d| d.code == codes::CYCLE));
    }

    #[test]
    fn interface_rules() {
        let db = db("namespace n {
            type s = Stream(data: Bits(1));
            streamlet two = ('a, 'b, p: in s);
            streamlet bad = ('a, p: in 'c s);
            streamlet one = ('a, p: in s);
            streamlet notstream = (p: in Bits(1));
            streamlet dup = (p: in s, p: out s);
        }");
        let code = |n: &str| db.streamlet(&ns("n"), &id(n)).unwrap_err()[0].code;
        assert_eq!(code("two"), codes::UNKNOWN_DOMAIN);
        assert_eq!(code("bad"), codes::UNKNOWN_DOMAIN);
        assert_eq!(code("notstream"), codes::NOT_STREAM);
        assert_eq!(code("dup"), codes::DUPLICATE);
        let one = db.streamlet(&ns("n"), &id("one")).unwrap();
        assert_eq!(one.interface.ports[0].domain, Domain::Named(id("a")));
    }

    #[test]
    fn dump_preserves_order() {
        let db = db(TWO);
        let text = crate::syntax::pretty_print(&db.project().to_source());
        let (again, d) = parse_til("d", &text);
        assert!(d.is_empty());
        assert_eq!(again, db.project().to_source());
        assert!(text.find("type ta").unwrap() < text.find("streamlet sa").unwrap());
    }

    #[test]
    fn duplicates_are_reported() {
        let (file, _) = parse_til("t", "namespace n { type a = Null; type a = Bits(1); streamlet a = (); }");
        let mut p = Project::new(id("t"));
        let diags = p.add_source(&file);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::DUPLICATE);
    }
}
