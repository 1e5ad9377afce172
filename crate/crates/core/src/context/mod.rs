//! Access facts per variable (who reads/writes it, on which side, inside
//! which loops) and the transfer decisions derived from them.

mod placement;
mod plan;

pub use placement::{first_cpu_read_site, last_cpu_write_site, release_site, sync_site, InsertionPoint, Position};
pub use plan::{build_transfer_plan, GroupPlan, Load, PlanInput, Release, Store, Sync, TransferPlan};

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::cfront::ast::*;
use crate::cfront::effects::{AccessKind, Effects};
use crate::cfront::pragma::Io;
use crate::cfront::symbols::{SymKey, SymbolTable};
use crate::transform::{CodeletDef, ParamKind};

/// Where an access executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Host {
    Cpu,
    /// Inside the codelet with this index.
    Gpu(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessEvent {
    pub symbol: String,
    pub key: SymKey,
    pub kind: AccessKind,
    pub site: StmtId,
    /// Pre-order index of `site` in the function body.
    pub order: usize,
    pub host: Host,
    /// Enclosing loops, outermost first.
    pub loop_path: Vec<StmtId>,
}

#[derive(Debug, Clone)]
struct Node {
    parent: Option<StmtId>,
    children: Vec<StmtId>,
    enter: usize,
    exit: usize,
    is_block: bool,
    is_loop: bool,
    is_return: bool,
}

/// Statement nesting of one function body.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: HashMap<StmtId, Node>,
    pub root: StmtId,
}

impl Tree {
    pub fn build(body: &Stmt) -> Tree {
        let mut t = Tree { nodes: HashMap::new(), root: body.id };
        let mut n = 0;
        t.add(body, None, &mut n);
        t
    }

    fn add(&mut self, s: &Stmt, parent: Option<StmtId>, n: &mut usize) {
        let enter = *n;
        *n += 1;
        for c in s.children() {
            self.add(c, Some(s.id), n);
        }
        self.nodes.insert(
            s.id,
            Node {
                parent,
                children: s.children().iter().map(|c| c.id).collect(),
                enter,
                exit: *n - 1,
                is_block: matches!(s.kind, StmtKind::Block(_)),
                is_loop: s.is_loop(),
                is_return: matches!(s.kind, StmtKind::Return(_)),
            },
        );
    }

    pub fn contains_stmt(&self, id: StmtId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn parent(&self, id: StmtId) -> Option<StmtId> {
        self.nodes[&id].parent
    }

    pub fn children(&self, id: StmtId) -> &[StmtId] {
        &self.nodes[&id].children
    }

    pub fn is_block(&self, id: StmtId) -> bool {
        self.nodes[&id].is_block
    }

    pub fn is_loop(&self, id: StmtId) -> bool {
        self.nodes[&id].is_loop
    }

    pub fn enter(&self, id: StmtId) -> usize {
        self.nodes[&id].enter
    }

    pub fn exit(&self, id: StmtId) -> usize {
        self.nodes[&id].exit
    }

    /// Whether `inner` lies in the subtree of `outer` (inclusive).
    pub fn within(&self, inner: StmtId, outer: StmtId) -> bool {
        let (i, o) = (&self.nodes[&inner], &self.nodes[&outer]);
        o.enter <= i.enter && i.enter <= o.exit
    }

    /// Enclosing loops of `id` (excluding itself), outermost first.
    pub fn loops_of(&self, id: StmtId) -> Vec<StmtId> {
        let mut v = Vec::new();
        let mut cur = self.parent(id);
        while let Some(p) = cur {
            if self.is_loop(p) {
                v.push(p);
            }
            cur = self.parent(p);
        }
        v.reverse();
        v
    }

    pub fn is_return(&self, id: StmtId) -> bool {
        self.nodes[&id].is_return
    }

    /// Last `return` directly in the root block, if any.
    pub fn final_return(&self) -> Option<StmtId> {
        self.children(self.root).iter().rev().copied().find(|c| self.nodes[c].is_return)
    }
}

/// A kernel invocation inside the analysed function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSite {
    pub codelet: usize,
    pub callsite: StmtId,
    pub label: String,
}

/// All access events of one function, in program order.
#[derive(Debug, Clone)]
pub struct ContextTable {
    pub function: String,
    pub tree: Tree,
    pub events: Vec<AccessEvent>,
    pub kernels: Vec<KernelSite>,
}

impl ContextTable {
    /// Builds the table for `function` of an outlined unit. Callsites of
    /// `codelets` contribute GPU events from the kernel's parameter facts.
    pub fn build(
        unit: &SourceUnit,
        table: &SymbolTable,
        effects: &Effects,
        codelets: &[CodeletDef],
        function: &str,
    ) -> Option<ContextTable> {
        let body = unit.function(function)?.body.as_ref()?;
        let tree = Tree::build(body);
        let by_site: HashMap<StmtId, usize> =
            codelets.iter().enumerate().filter(|(_, c)| c.host_function == function).map(|(k, c)| (c.callsite, k)).collect();
        let mut events = Vec::new();
        let mut kernels = Vec::new();
        let mut loops = Vec::new();
        collect(body, &tree, table, effects, codelets, &by_site, &mut loops, &mut events, &mut kernels);
        Some(ContextTable { function: function.to_string(), tree, events, kernels })
    }

    pub fn kernel(&self, codelet: usize) -> Option<&KernelSite> {
        self.kernels.iter().find(|k| k.codelet == codelet)
    }

    pub fn events_for<'a>(&'a self, key: &'a SymKey) -> impl Iterator<Item = &'a AccessEvent> + 'a {
        self.events.iter().filter(move |e| &e.key == key)
    }

    /// Key of host variable `name` as seen at a kernel's callsite.
    pub fn key_at(&self, codelet: usize, name: &str) -> Option<SymKey> {
        let site = self.kernel(codelet)?.callsite;
        self.events.iter().find(|e| e.site == site && e.symbol == name).map(|e| e.key.clone())
    }

    /// Events of `key` inside the subtree of `stmt`.
    pub fn any_in(&self, stmt: StmtId, key: &SymKey, pred: &dyn Fn(&AccessEvent) -> bool) -> bool {
        let (lo, hi) = (self.tree.enter(stmt), self.tree.exit(stmt));
        self.events.iter().any(|e| &e.key == key && e.order >= lo && e.order <= hi && pred(e))
    }

    /// Any event (any symbol) inside the subtree of `stmt`.
    pub fn any_event_in(&self, stmt: StmtId, pred: &dyn Fn(&AccessEvent) -> bool) -> bool {
        let (lo, hi) = (self.tree.enter(stmt), self.tree.exit(stmt));
        self.events.iter().any(|e| e.order >= lo && e.order <= hi && pred(e))
    }

    /// One line per event, for golden tests and debugging.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            let host = match e.host {
                Host::Cpu => "cpu".to_string(),
                Host::Gpu(k) => format!("gpu{k}"),
            };
            let kind = match e.kind {
                AccessKind::Read => "R",
                AccessKind::Write => "W",
            };
            let loops: Vec<String> = e.loop_path.iter().map(|l| l.to_string()).collect();
            let _ = writeln!(s, "{} {kind} {host} at {} loops[{}]", e.symbol, e.site, loops.join(","));
        }
        s
    }
}

#[allow(clippy::too_many_arguments)]
fn collect(
    s: &Stmt,
    tree: &Tree,
    table: &SymbolTable,
    effects: &Effects,
    codelets: &[CodeletDef],
    by_site: &HashMap<StmtId, usize>,
    loops: &mut Vec<StmtId>,
    out: &mut Vec<AccessEvent>,
    kernels: &mut Vec<KernelSite>,
) {
    let order = tree.enter(s.id);
    let push = |name: &str, kind: AccessKind, host: Host, out: &mut Vec<AccessEvent>| {
        if let Some(sym) = table.resolve(s.id, name) {
            out.push(AccessEvent {
                symbol: name.to_string(),
                key: sym.key.clone(),
                kind,
                site: s.id,
                order,
                host,
                loop_path: loops.clone(),
            });
        }
    };
    if let Some(&k) = by_site.get(&s.id) {
        let c = &codelets[k];
        kernels.push(KernelSite { codelet: k, callsite: s.id, label: c.label.clone() });
        for p in &c.params {
            let host = p.host_name();
            match p.kind {
                ParamKind::Scalar => push(host, AccessKind::Read, Host::Cpu, out),
                _ => {
                    if p.reads {
                        push(host, AccessKind::Read, Host::Gpu(k), out);
                    }
                    if p.writes {
                        push(host, AccessKind::Write, Host::Gpu(k), out);
                    }
                }
            }
        }
    } else {
        for a in effects.stmt_accesses(table, s) {
            push(&a.name, a.kind, Host::Cpu, out);
        }
    }
    let is_loop = s.is_loop();
    if is_loop {
        loops.push(s.id);
    }
    for c in s.children() {
        collect(c, tree, table, effects, codelets, by_site, loops, out, kernels);
    }
    if is_loop {
        loops.pop();
    }
}

/// Free-function form of [`ContextTable::build`].
pub fn build_context_table(
    unit: &SourceUnit,
    table: &SymbolTable,
    effects: &Effects,
    codelets: &[CodeletDef],
    function: &str,
) -> Option<ContextTable> {
    ContextTable::build(unit, table, effects, codelets, function)
}

/// Direction of `param` for kernel `codelet`: read-only → in, never read →
/// out, otherwise inout.
pub fn infer_io_direction(codelet: &CodeletDef, param: &str) -> Option<Io> {
    codelet.param(param).and_then(|p| p.io())
}

#[cfg(test)]
mod tests;
