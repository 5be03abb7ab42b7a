//! Resolution of EXTENDS / SEES / REFINES links and the flattened
//! (superposition) views of contexts and machines.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use indexmap::IndexMap;
use thiserror::Error;

use crate::ast::{
    Component, ContextDef, EventDef, EventKind, Expr, ExprKind, LabeledPredicate, MachineDef,
    PredicateKind, INITIALISATION,
};
use crate::parser::{self, ParseError};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ResolveError {
    #[error("unresolved reference `{0}`")]
    UnresolvedReference(String),
    #[error("cyclic extension: {}", .0.join(" -> "))]
    CyclicExtension(Vec<String>),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),
    #[error("{machine}: {message}")]
    Malformed { machine: String, message: String },
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    Parse(Vec<ParseError>),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A context merged with everything it (transitively) extends.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatContext {
    pub name: String,
    /// Contexts merged into this view, ancestors before descendants.
    pub members: Vec<String>,
    pub sets: Vec<String>,
    pub constants: Vec<String>,
    pub axioms: Vec<LabeledPredicate>,
    pub theorems: Vec<LabeledPredicate>,
    /// Partition axioms replaced by a descendant that enumerates more elements.
    pub superseded: Vec<LabeledPredicate>,
}

impl FlatContext {
    pub fn declares(&self, name: &str) -> bool {
        self.sets.iter().any(|s| s == name) || self.constants.iter().any(|c| c == name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct AxiomClasses {
    pub typing: Vec<String>,
    pub technical: Vec<String>,
    pub property: Vec<String>,
}

/// Partitions the axioms of `ctx` by label-prefix kind.
pub fn classify_axioms(ctx: &FlatContext) -> AxiomClasses {
    let mut out = AxiomClasses::default();
    for ax in &ctx.axioms {
        let bucket = match ax.kind() {
            PredicateKind::Typing => &mut out.typing,
            PredicateKind::Technical => &mut out.technical,
            PredicateKind::Property => &mut out.property,
        };
        bucket.push(ax.label.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatEvent {
    pub def: EventDef,
    /// Machine whose text declares this version of the event.
    pub origin: String,
    /// Events of the immediate abstract machine this event refines
    /// (an inherited event refines its own name).
    pub refines: Vec<String>,
}

impl FlatEvent {
    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn is_environment(&self) -> bool {
        self.def.kind == EventKind::Environment
    }
}

/// A machine with all of its refinement ancestors merged in.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatMachine {
    pub name: String,
    pub abstract_machine: Option<String>,
    /// Refinement chain from the most abstract machine down to this one.
    pub ancestry: Vec<String>,
    pub context: FlatContext,
    pub variables: Vec<String>,
    pub invariants: Vec<LabeledPredicate>,
    /// Machine that introduced each invariant (parallel to `invariants`).
    pub invariant_origin: Vec<String>,
    pub variant: Option<Expr>,
    pub events: Vec<FlatEvent>,
}

impl FlatMachine {
    pub fn event(&self, name: &str) -> Option<&FlatEvent> {
        self.events.iter().find(|e| e.def.name == name)
    }

    pub fn initialisation(&self) -> &EventDef {
        &self
            .event(INITIALISATION)
            .expect("flattened machines always have an initialisation")
            .def
    }

    /// Events that are not the initialisation.
    pub fn transitions(&self) -> impl Iterator<Item = &FlatEvent> {
        self.events.iter().filter(|e| !e.def.is_initialisation())
    }

    /// Converts the merged view back into a standalone machine definition.
    pub fn to_machine_def(&self) -> MachineDef {
        let mut m = MachineDef::new(&self.name);
        m.sees = self.context.members.clone();
        m.variables = self.variables.clone();
        m.invariants = self.invariants.clone();
        m.variant = self.variant.clone();
        m.events = self
            .events
            .iter()
            .map(|e| {
                let mut d = e.def.clone();
                d.refines.clear();
                d
            })
            .collect();
        m
    }
}

/// Resolved, immutable collection of contexts and machines.
#[derive(Debug, Clone)]
pub struct Project {
    contexts: IndexMap<String, ContextDef>,
    machines: IndexMap<String, MachineDef>,
    flat_contexts: IndexMap<String, FlatContext>,
    flat_machines: IndexMap<String, FlatMachine>,
}

impl Project {
    pub fn contexts(&self) -> impl Iterator<Item = &ContextDef> {
        self.contexts.values()
    }

    pub fn machines(&self) -> impl Iterator<Item = &MachineDef> {
        self.machines.values()
    }

    pub fn machine_names(&self) -> Vec<String> {
        self.machines.keys().cloned().collect()
    }

    pub fn context(&self, name: &str) -> Option<&ContextDef> {
        self.contexts.get(name)
    }

    pub fn machine(&self, name: &str) -> Option<&MachineDef> {
        self.machines.get(name)
    }

    pub fn flat_context(&self, name: &str) -> Option<&FlatContext> {
        self.flat_contexts.get(name)
    }

    /// (concrete, abstract) pairs.
    pub fn refinement_edges(&self) -> Vec<(String, String)> {
        self.machines
            .values()
            .filter_map(|m| m.refines.clone().map(|a| (m.name.clone(), a)))
            .collect()
    }

    /// Every raw definition in declaration order (contexts first).
    pub fn components(&self) -> Vec<Component> {
        self.contexts
            .values()
            .cloned()
            .map(Component::Context)
            .chain(self.machines.values().cloned().map(Component::Machine))
            .collect()
    }

    /// The superposition view of `name`.
    pub fn flatten_machine(&self, name: &str) -> Result<&FlatMachine, ResolveError> {
        self.flat_machines
            .get(name)
            .ok_or_else(|| ResolveError::UnknownMachine(name.to_string()))
    }

    /// Parses and resolves a set of named sources.
    pub fn from_sources<'a>(
        sources: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Project, LoadError> {
        let mut defs = Vec::new();
        let mut errors = Vec::new();
        for (name, text) in sources {
            match parser::parse_named(name, text) {
                Ok(mut units) => defs.append(&mut units),
                Err(mut e) => errors.append(&mut e),
            }
        }
        if !errors.is_empty() {
            return Err(LoadError::Parse(errors));
        }
        Ok(resolve(defs)?)
    }

    /// Loads every `.ebs` file named in `paths`; directories are searched
    /// (non-recursively) in file-name order.
    pub fn load_paths<P: AsRef<Path>>(paths: &[P]) -> Result<Project, LoadError> {
        let mut files = Vec::new();
        for p in paths {
            let p = p.as_ref();
            if p.is_dir() {
                let mut entries: Vec<_> = std::fs::read_dir(p)
                    .map_err(|source| LoadError::Io {
                        path: p.display().to_string(),
                        source,
                    })?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "ebs"))
                    .collect();
                entries.sort();
                files.extend(entries);
            } else {
                files.push(p.to_path_buf());
            }
        }
        let mut texts = Vec::new();
        for f in &files {
            let text = std::fs::read_to_string(f).map_err(|source| LoadError::Io {
                path: f.display().to_string(),
                source,
            })?;
            texts.push((f.display().to_string(), text));
        }
        Project::from_sources(texts.iter().map(|(n, t)| (n.as_str(), t.as_str())))
    }
}

/// Builds a [`Project`]: checks name uniqueness and link targets, rejects
/// cycles, flattens every context and machine.
pub fn resolve(defs: Vec<Component>) -> Result<Project, ResolveError> {
    let mut contexts = IndexMap::new();
    let mut machines = IndexMap::new();
    let mut seen = HashSet::new();
    for d in defs {
        if !seen.insert(d.name().to_string()) {
            return Err(ResolveError::DuplicateName(d.name().to_string()));
        }
        match d {
            Component::Context(c) => {
                contexts.insert(c.name.clone(), c);
            }
            Component::Machine(m) => {
                machines.insert(m.name.clone(), m);
            }
        }
    }

    for c in contexts.values() {
        for e in &c.extends {
            if !contexts.contains_key(e) {
                return Err(ResolveError::UnresolvedReference(e.clone()));
            }
        }
    }
    detect_cycles(contexts.values().map(|c| {
        (
            c.name.as_str(),
            c.extends.iter().map(String::as_str).collect(),
        )
    }))?;

    for m in machines.values() {
        if let Some(a) = &m.refines {
            if !machines.contains_key(a) {
                return Err(ResolveError::UnresolvedReference(a.clone()));
            }
        }
        for s in &m.sees {
            if !contexts.contains_key(s) {
                return Err(ResolveError::UnresolvedReference(s.clone()));
            }
        }
    }
    detect_cycles(machines.values().map(|m| {
        (
            m.name.as_str(),
            m.refines.iter().map(String::as_str).collect(),
        )
    }))?;

    let mut flat_contexts = IndexMap::new();
    for name in contexts.keys() {
        flat_contexts.insert(
            name.clone(),
            flatten_contexts(&contexts, [name.as_str()], name)?,
        );
    }

    let mut flat_machines: IndexMap<String, FlatMachine> = IndexMap::new();
    // abstract machines first
    let order = topo_machines(&machines);
    for name in order {
        let fm = flatten_one(&contexts, &machines[&name], &flat_machines)?;
        flat_machines.insert(name, fm);
    }
    // restore declaration order
    let flat_machines = machines
        .keys()
        .map(|k| (k.clone(), flat_machines[k].clone()))
        .collect();

    Ok(Project {
        contexts,
        machines,
        flat_contexts,
        flat_machines,
    })
}

fn detect_cycles<'a>(
    graph: impl Iterator<Item = (&'a str, Vec<&'a str>)>,
) -> Result<(), ResolveError> {
    let graph: HashMap<&str, Vec<&str>> = graph.collect();
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        n: &'a str,
        graph: &HashMap<&'a str, Vec<&'a str>>,
        marks: &mut HashMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Result<(), ResolveError> {
        match marks.get(n) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let start = path.iter().position(|p| *p == n).unwrap_or(0);
                let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(n.to_string());
                return Err(ResolveError::CyclicExtension(cycle));
            }
            None => {}
        }
        marks.insert(n, Mark::Active);
        path.push(n);
        for next in graph.get(n).into_iter().flatten() {
            visit(next, graph, marks, path)?;
        }
        path.pop();
        marks.insert(n, Mark::Done);
        Ok(())
    }
    let mut keys: Vec<&str> = graph.keys().copied().collect();
    keys.sort();
    let mut marks = HashMap::new();
    for k in keys {
        visit(k, &graph, &mut marks, &mut Vec::new())?;
    }
    Ok(())
}

fn topo_machines(machines: &IndexMap<String, MachineDef>) -> Vec<String> {
    let mut out = Vec::new();
    let mut done = HashSet::new();
    fn go(
        n: &str,
        machines: &IndexMap<String, MachineDef>,
        done: &mut HashSet<String>,
        out: &mut Vec<String>,
    ) {
        if done.contains(n) {
            return;
        }
        if let Some(a) = &machines[n].refines {
            go(a, machines, done, out);
        }
        done.insert(n.to_string());
        out.push(n.to_string());
    }
    for k in machines.keys() {
        go(k, machines, &mut done, &mut out);
    }
    out
}

/// Ancestors-first closure of `roots` over EXTENDS.
fn context_closure<'a>(
    contexts: &'a IndexMap<String, ContextDef>,
    roots: &[&'a str],
) -> Vec<&'a str> {
    fn go<'a>(
        n: &'a str,
        contexts: &'a IndexMap<String, ContextDef>,
        done: &mut HashSet<&'a str>,
        out: &mut Vec<&'a str>,
    ) {
        if !done.insert(n) {
            return;
        }
        for e in &contexts[n].extends {
            go(e, contexts, done, out);
        }
        out.push(n);
    }
    let mut out = Vec::new();
    let mut done = HashSet::new();
    for r in roots {
        let r = contexts
            .get_key_value(*r)
            .map(|(k, _)| k.as_str())
            .unwrap_or(r);
        go(r, contexts, &mut done, &mut out);
    }
    out
}

fn partition_target(p: &LabeledPredicate) -> Option<(&str, BTreeSet<String>)> {
    match &p.body.kind {
        ExprKind::Partition(set, parts) => {
            let ExprKind::Ident(s) = &set.kind else {
                return None;
            };
            let mut elems = BTreeSet::new();
            for part in parts {
                if let ExprKind::SetLit(items) = &part.kind {
                    for i in items {
                        if let ExprKind::Ident(n) = &i.kind {
                            elems.insert(n.clone());
                        }
                    }
                }
            }
            Some((s.as_str(), elems))
        }
        _ => None,
    }
}

fn flatten_contexts<'a>(
    contexts: &IndexMap<String, ContextDef>,
    roots: impl IntoIterator<Item = &'a str>,
    name: &str,
) -> Result<FlatContext, ResolveError> {
    let roots: Vec<&str> = roots.into_iter().collect();
    let members = context_closure(contexts, &roots);
    let mut flat = FlatContext {
        name: name.to_string(),
        members: members.iter().map(|s| s.to_string()).collect(),
        sets: Vec::new(),
        constants: Vec::new(),
        axioms: Vec::new(),
        theorems: Vec::new(),
        superseded: Vec::new(),
    };
    let mut names = HashSet::new();
    let mut labels = HashSet::new();
    for m in &members {
        let c = &contexts[*m];
        for s in &c.sets {
            if !names.insert(s.clone()) {
                return Err(ResolveError::DuplicateName(s.clone()));
            }
            flat.sets.push(s.clone());
        }
        for k in &c.constants {
            if !names.insert(k.clone()) {
                return Err(ResolveError::DuplicateName(k.clone()));
            }
            flat.constants.push(k.clone());
        }
        for ax in c.axioms.iter().chain(&c.theorems) {
            if !labels.insert(ax.label.clone()) {
                return Err(ResolveError::DuplicateName(ax.label.clone()));
            }
        }
        for ax in &c.axioms {
            if let Some((set, elems)) = partition_target(ax) {
                if let Some(pos) = flat
                    .axioms
                    .iter()
                    .position(|old| partition_target(old).is_some_and(|(s, _)| s == set))
                {
                    let (_, old_elems) = partition_target(&flat.axioms[pos]).unwrap();
                    if !old_elems.is_subset(&elems) {
                        return Err(ResolveError::Malformed {
                            machine: c.name.clone(),
                            message: format!(
                                "partition `{}` of `{set}` drops elements enumerated by an ancestor",
                                ax.label
                            ),
                        });
                    }
                    let old = flat.axioms.remove(pos);
                    flat.superseded.push(old);
                }
            }
            flat.axioms.push(ax.clone());
        }
        flat.theorems.extend(c.theorems.iter().cloned());
    }
    for ax in flat
        .axioms
        .iter()
        .chain(&flat.theorems)
        .chain(&flat.superseded)
    {
        for id in ax.body.identifiers() {
            if !names.contains(&id) {
                return Err(ResolveError::UnresolvedReference(id));
            }
        }
    }
    Ok(flat)
}

fn malformed(machine: &str, message: String) -> ResolveError {
    ResolveError::Malformed {
        machine: machine.to_string(),
        message,
    }
}

fn flatten_one(
    contexts: &IndexMap<String, ContextDef>,
    m: &MachineDef,
    done: &IndexMap<String, FlatMachine>,
) -> Result<FlatMachine, ResolveError> {
    let abs = m.refines.as_ref().map(|a| &done[a]);

    let mut ctx_roots: Vec<&str> = Vec::new();
    if let Some(a) = abs {
        ctx_roots.extend(a.context.members.iter().map(String::as_str));
    }
    ctx_roots.extend(m.sees.iter().map(String::as_str));
    let context = flatten_contexts(contexts, ctx_roots, &m.name)?;

    let mut variables = abs.map(|a| a.variables.clone()).unwrap_or_default();
    for v in &m.variables {
        if context.declares(v) {
            return Err(ResolveError::DuplicateName(v.clone()));
        }
        if !variables.contains(v) {
            variables.push(v.clone());
        } else if abs.is_none() {
            return Err(ResolveError::DuplicateName(v.clone()));
        }
    }

    let mut invariants = abs.map(|a| a.invariants.clone()).unwrap_or_default();
    let mut invariant_origin = abs.map(|a| a.invariant_origin.clone()).unwrap_or_default();
    for inv in &m.invariants {
        if invariants.iter().any(|i| i.label == inv.label) {
            return Err(ResolveError::DuplicateName(inv.label.clone()));
        }
        invariants.push(inv.clone());
        invariant_origin.push(m.name.clone());
    }

    let mut events: Vec<FlatEvent> = abs
        .map(|a| {
            a.events
                .iter()
                .map(|e| FlatEvent {
                    def: e.def.clone(),
                    origin: e.origin.clone(),
                    refines: vec![e.def.name.clone()],
                })
                .collect()
        })
        .unwrap_or_default();
    for ev in &m.events {
        let targets: Vec<String> = if !ev.refines.is_empty() {
            ev.refines.clone()
        } else if abs.is_some_and(|a| a.event(&ev.name).is_some()) {
            vec![ev.name.clone()]
        } else {
            Vec::new()
        };
        let flat_ev = FlatEvent {
            def: ev.clone(),
            origin: m.name.clone(),
            refines: targets.clone(),
        };
        if targets.is_empty() {
            if events.iter().any(|e| e.def.name == ev.name) {
                return Err(ResolveError::DuplicateName(ev.name.clone()));
            }
            events.push(flat_ev);
            continue;
        }
        let Some(a) = abs else {
            return Err(ResolveError::UnresolvedReference(targets[0].clone()));
        };
        for t in &targets {
            if a.event(t).is_none() {
                return Err(ResolveError::UnresolvedReference(t.clone()));
            }
        }
        let first = events
            .iter()
            .position(|e| targets.contains(&e.def.name) && e.origin != m.name)
            .ok_or_else(|| {
                malformed(
                    &m.name,
                    format!("event `{}` refines an event already refined", ev.name),
                )
            })?;
        events[first] = flat_ev;
        let mut i = 0;
        events.retain(|e| {
            let keep = i == first || !(targets.contains(&e.def.name) && e.origin != m.name);
            i += 1;
            keep
        });
        let dupes = events.iter().filter(|e| e.def.name == ev.name).count();
        if dupes > 1 {
            return Err(ResolveError::DuplicateName(ev.name.clone()));
        }
    }

    let fm = FlatMachine {
        name: m.name.clone(),
        abstract_machine: m.refines.clone(),
        ancestry: abs
            .map(|a| a.ancestry.clone())
            .unwrap_or_default()
            .into_iter()
            .chain(std::iter::once(m.name.clone()))
            .collect(),
        context,
        variables,
        invariants,
        invariant_origin,
        variant: m
            .variant
            .clone()
            .or_else(|| abs.and_then(|a| a.variant.clone())),
        events,
    };
    validate_machine(m, &fm)?;
    Ok(fm)
}

fn validate_machine(raw: &MachineDef, fm: &FlatMachine) -> Result<(), ResolveError> {
    let inits = raw.events.iter().filter(|e| e.is_initialisation()).count();
    if inits > 1 || (inits == 0 && raw.refines.is_none()) {
        return Err(malformed(
            &fm.name,
            "exactly one INITIALISATION event required".into(),
        ));
    }
    let vars: HashSet<&str> = fm.variables.iter().map(String::as_str).collect();
    let known = |id: &str| vars.contains(id) || fm.context.declares(id);

    for ev in &fm.events {
        let mut assigned = HashSet::new();
        for a in &ev.def.actions {
            if !vars.contains(a.variable.as_str()) {
                return Err(malformed(
                    &fm.name,
                    format!(
                        "event `{}` assigns undeclared variable `{}`",
                        ev.def.name, a.variable
                    ),
                ));
            }
            if !assigned.insert(a.variable.as_str()) {
                return Err(malformed(
                    &fm.name,
                    format!("event `{}` assigns `{}` twice", ev.def.name, a.variable),
                ));
            }
        }
        let exprs = ev
            .def
            .guards
            .iter()
            .map(|g| &g.body)
            .chain(ev.def.actions.iter().map(|a| &a.value));
        for e in exprs {
            for id in e.identifiers() {
                if !known(&id) {
                    return Err(ResolveError::UnresolvedReference(id));
                }
            }
        }
        if ev.def.is_initialisation() {
            if !ev.def.guards.is_empty() {
                return Err(malformed(
                    &fm.name,
                    "INITIALISATION must not have guards".into(),
                ));
            }
            for v in &fm.variables {
                if !assigned.contains(v.as_str()) {
                    return Err(malformed(
                        &fm.name,
                        format!("INITIALISATION does not assign `{v}`"),
                    ));
                }
            }
            for a in &ev.def.actions {
                if let Some(id) = a
                    .value
                    .identifiers()
                    .into_iter()
                    .find(|id| vars.contains(id.as_str()))
                {
                    return Err(malformed(
                        &fm.name,
                        format!("INITIALISATION reads variable `{id}`"),
                    ));
                }
            }
        }
    }
    for inv in &fm.invariants {
        for id in inv.body.identifiers() {
            if !known(&id) {
                return Err(ResolveError::UnresolvedReference(id));
            }
        }
    }
    if let Some(v) = &fm.variant {
        for id in v.identifiers() {
            if !known(&id) {
                return Err(ResolveError::UnresolvedReference(id));
            }
        }
    }
    Ok(())
}
