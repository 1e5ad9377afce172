use std::collections::{BTreeMap, BTreeSet};

use super::placement::{first_cpu_read_site, last_cpu_write_site, release_site, sync_site, InsertionPoint};
use super::ContextTable;
use crate::cfront::pragma::Io;
use crate::transform::{CodeletDef, ParamKind};
use crate::variants::FlagSet;

/// A codelet group: kernels of one host function sharing device memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPlan {
    pub label: String,
    pub function: String,
    pub kernels: Vec<usize>,
    /// Host variables kept resident for the whole group.
    pub mapbyname: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Load {
    pub at: InsertionPoint,
    pub group: Option<String>,
    pub label: String,
    /// Codelet parameter names with their host address expressions.
    pub args: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Store {
    pub at: InsertionPoint,
    pub group: Option<String>,
    pub label: String,
    pub arg: String,
    pub addr: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sync {
    pub at: InsertionPoint,
    pub group: Option<String>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Release {
    pub at: InsertionPoint,
    pub group: Option<String>,
    pub label: Option<String>,
}

/// Every transfer-related directive of a variant, with its position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransferPlan {
    pub groups: Vec<GroupPlan>,
    pub loads: Vec<Load>,
    pub stores: Vec<Store>,
    pub syncs: Vec<Sync>,
    pub releases: Vec<Release>,
    /// (codelet, param) pairs marked `noupdate` at the callsite.
    pub noupdate: BTreeSet<(usize, String)>,
    pub asynchronous: BTreeSet<usize>,
    /// Rendered direction per (codelet, param) for array and reduced params.
    pub io: BTreeMap<(usize, String), Io>,
}

impl TransferPlan {
    pub fn group_of(&self, codelet: usize) -> Option<&GroupPlan> {
        self.groups.iter().find(|g| g.kernels.contains(&codelet))
    }

    /// Whether host variable `var` is resident group-wide for `codelet`.
    pub fn mapped(&self, codelet: usize, var: &str) -> bool {
        self.group_of(codelet).is_some_and(|g| g.mapbyname.iter().any(|m| m == var))
    }

    pub fn has_store(&self, label: &str, arg: &str) -> bool {
        self.stores.iter().any(|s| s.label == label && s.arg == arg)
    }

    /// Count of standalone directives (loads, stores, syncs, releases).
    pub fn directive_count(&self) -> usize {
        self.loads.len() + self.stores.len() + self.syncs.len() + self.releases.len()
    }
}

/// Inputs for one plan build. `codelets[k]` runs with `flags[k]`.
pub struct PlanInput<'a> {
    pub codelets: &'a [CodeletDef],
    pub flags: &'a [FlagSet],
    /// Context table per host function.
    pub contexts: &'a BTreeMap<String, ContextTable>,
    /// (group label, host var) pairs refused residency.
    pub unmapped: &'a BTreeSet<(String, String)>,
    /// (codelet, host var) pairs forced to plain callsite transfers.
    pub demoted: &'a BTreeSet<(usize, String)>,
}

/// Plans groups, residency, early loads, late stores, synchronisation and
/// releases for one variant.
pub fn build_transfer_plan(input: &PlanInput<'_>) -> TransferPlan {
    let mut plan = TransferPlan::default();
    let cs = input.codelets;

    // Groups, one per host function, in kernel order.
    let mut functions: Vec<&str> = Vec::new();
    for c in cs {
        if !functions.contains(&c.host_function.as_str()) {
            functions.push(&c.host_function);
        }
    }
    for f in &functions {
        let members: Vec<usize> = (0..cs.len()).filter(|&k| cs[k].host_function == *f && input.flags[k].group).collect();
        let Some(&first) = members.first() else { continue };
        let label = format!("group{}_{}", plan.groups.len(), cs[first].pos.line);
        let ctx = &input.contexts[*f];
        let mut mapped = Vec::new();
        for &k in &members {
            for p in cs[k].params.iter().filter(|p| p.is_array()) {
                let var = p.name.clone();
                if mapped.contains(&var) || input.unmapped.contains(&(label.clone(), var.clone())) {
                    continue;
                }
                if !cpu_writes_between(ctx, &members, cs, &var) {
                    mapped.push(var);
                }
            }
        }
        plan.groups.push(GroupPlan { label, function: f.to_string(), kernels: members, mapbyname: mapped });
    }

    let group_label = |plan: &TransferPlan, k: usize| plan.group_of(k).map(|g| g.label.clone());

    // Early loads and noupdate.
    for (k, c) in cs.iter().enumerate() {
        let f = input.flags[k];
        let ctx = &input.contexts[&c.host_function];
        for p in &c.params {
            let var = p.host_name().to_string();
            if let Some(io) = p.io() {
                plan.io.insert((k, p.name.clone()), io);
            }
            if !p.is_array() || plan.mapped(k, &var) || input.demoted.contains(&(k, var.clone())) {
                continue;
            }
            if f.advancedload && p.reads {
                let Some(key) = ctx.key_at(k, &var) else { continue };
                let same = |o: usize| o == k;
                let at = last_cpu_write_site(ctx, &key, k, &same);
                plan.loads.push(Load { at, group: group_label(&plan, k), label: c.label.clone(), args: vec![(p.name.clone(), var.clone())] });
                if f.noupdate {
                    plan.noupdate.insert((k, p.name.clone()));
                }
            }
        }
    }
    for gi in 0..plan.groups.len() {
        let g = plan.groups[gi].clone();
        let ctx = &input.contexts[&g.function];
        let loaders: Vec<usize> = g.kernels.iter().copied().filter(|&k| input.flags[k].advancedload).collect();
        let Some(&owner) = loaders.first() else { continue };
        let mut by_point: Vec<(InsertionPoint, Vec<(String, String)>)> = Vec::new();
        for var in &g.mapbyname {
            let same = |o: usize| g.kernels.contains(&o);
            for &r in &loaders {
                let reads = cs[r].param(var).is_some_and(|p| p.reads);
                let Some(key) = ctx.key_at(r, var).filter(|_| reads) else { continue };
                let at = last_cpu_write_site(ctx, &key, r, &same);
                match by_point.iter_mut().find(|(p, _)| *p == at) {
                    Some((_, args)) => {
                        if !args.iter().any(|(a, _)| a == var) {
                            args.push((var.clone(), var.clone()));
                        }
                    }
                    None => by_point.push((at, vec![(var.clone(), var.clone())])),
                }
            }
        }
        for (at, args) in by_point {
            plan.loads.push(Load { at, group: Some(g.label.clone()), label: cs[owner].label.clone(), args });
        }
        for &k in &g.kernels {
            if input.flags[k].noupdate {
                for p in cs[k].params.iter().filter(|p| g.mapbyname.contains(&p.name)) {
                    plan.noupdate.insert((k, p.name.clone()));
                    plan.io.insert((k, p.name.clone()), Io::In);
                }
            }
        }
    }

    // Synchronisation for asynchronous callsites.
    let mut sync_at: BTreeMap<usize, InsertionPoint> = BTreeMap::new();
    for (k, c) in cs.iter().enumerate() {
        if !input.flags[k].asynchronous {
            continue;
        }
        let ctx = &input.contexts[&c.host_function];
        let keys: Vec<_> = c.params.iter().filter(|p| p.kind != ParamKind::Scalar).filter_map(|p| ctx.key_at(k, p.host_name())).collect();
        let at = sync_site(ctx, k, &keys);
        plan.asynchronous.insert(k);
        sync_at.insert(k, at);
        plan.syncs.push(Sync { at, group: group_label(&plan, k), label: c.label.clone() });
    }

    // Late stores.
    let uploads = |plan: &TransferPlan, var: &str, o: usize| {
        cs[o].param_for_host(var).is_some_and(|p| {
            p.is_array() && plan.io.get(&(o, p.name.clone())).is_some_and(|io| io.reads()) && !plan.noupdate.contains(&(o, p.name.clone()))
        })
    };
    for (k, c) in cs.iter().enumerate() {
        let f = input.flags[k];
        if !f.delegatedstore {
            continue;
        }
        let ctx = &input.contexts[&c.host_function];
        for p in &c.params {
            let var = p.host_name().to_string();
            if !p.writes || plan.mapped(k, &var) || input.demoted.contains(&(k, var.clone())) {
                continue;
            }
            match &p.kind {
                ParamKind::Reduced { var } => {
                    if let Some(&at) = sync_at.get(&k) {
                        plan.stores.push(Store { at, group: group_label(&plan, k), label: c.label.clone(), arg: p.name.clone(), addr: format!("&{var}") });
                    }
                }
                ParamKind::Array { .. } | ParamKind::Matrix { .. } => {
                    let Some(key) = ctx.key_at(k, &var) else { continue };
                    let same = |o: usize| o == k;
                    let up = |o: usize| uploads(&plan, &var, o);
                    if let Some(at) = first_cpu_read_site(ctx, &key, k, &same, &up) {
                        plan.stores.push(Store { at, group: group_label(&plan, k), label: c.label.clone(), arg: p.name.clone(), addr: var.clone() });
                    }
                }
                ParamKind::Scalar => {}
            }
        }
    }
    for gi in 0..plan.groups.len() {
        let g = plan.groups[gi].clone();
        let ctx = &input.contexts[&g.function];
        let same = |o: usize| g.kernels.contains(&o);
        for var in &g.mapbyname {
            let writers: Vec<usize> = g
                .kernels
                .iter()
                .copied()
                .filter(|&w| input.flags[w].delegatedstore && cs[w].param(var).is_some_and(|p| p.writes))
                .collect();
            let mut points: Vec<InsertionPoint> = Vec::new();
            for &w in &writers {
                let Some(key) = ctx.key_at(w, var) else { continue };
                let up = |o: usize| uploads(&plan, var, o);
                if let Some(at) = first_cpu_read_site(ctx, &key, w, &same, &up) {
                    if !points.contains(&at) {
                        points.push(at);
                    }
                }
            }
            let Some(&last) = writers.iter().max_by_key(|&&w| ctx.kernel(w).map(|s| ctx.tree.enter(s.callsite))) else { continue };
            for at in points {
                plan.stores.push(Store { at, group: Some(g.label.clone()), label: cs[last].label.clone(), arg: var.clone(), addr: var.clone() });
            }
        }
    }

    // Releases.
    for g in &plan.groups {
        if !g.kernels.iter().any(|&k| input.flags[k].release) {
            continue;
        }
        let ctx = &input.contexts[&g.function];
        let sites: Vec<_> = g.kernels.iter().filter_map(|&k| ctx.kernel(k).map(|s| s.callsite)).collect();
        let mut after: Vec<InsertionPoint> = plan.stores.iter().filter(|s| s.group.as_ref() == Some(&g.label)).map(|s| s.at).collect();
        after.extend(g.kernels.iter().filter_map(|k| sync_at.get(k)));
        if let Some(at) = release_site(ctx, &sites, &after) {
            plan.releases.push(Release { at, group: Some(g.label.clone()), label: None });
        }
    }
    for (k, c) in cs.iter().enumerate() {
        if !input.flags[k].release || plan.group_of(k).is_some() {
            continue;
        }
        let ctx = &input.contexts[&c.host_function];
        let Some(site) = ctx.kernel(k).map(|s| s.callsite) else { continue };
        let mut after: Vec<InsertionPoint> = plan.stores.iter().filter(|s| s.label == c.label).map(|s| s.at).collect();
        after.extend(sync_at.get(&k));
        if let Some(at) = release_site(ctx, &[site], &after) {
            plan.releases.push(Release { at, group: None, label: Some(c.label.clone()) });
        }
    }
    plan
}

/// Whether the host writes `var` while group kernels may still need the
/// device copy: between the first and last group callsite, or inside a loop
/// that runs a group kernel.
fn cpu_writes_between(ctx: &ContextTable, members: &[usize], cs: &[CodeletDef], var: &str) -> bool {
    let t = &ctx.tree;
    let sites: Vec<_> = members.iter().filter_map(|&k| ctx.kernel(k).map(|s| s.callsite)).collect();
    let Some(key) = members.iter().find_map(|&k| cs[k].param(var).and_then(|_| ctx.key_at(k, var))) else { return true };
    let lo = sites.iter().map(|&s| t.enter(s)).min().unwrap_or(0);
    let hi = sites.iter().map(|&s| t.exit(s)).max().unwrap_or(0);
    let loops: BTreeSet<_> = sites.iter().flat_map(|&s| t.loops_of(s)).collect();
    let hit = ctx.events_for(&key).any(|e| {
        e.host == super::Host::Cpu
            && e.kind == crate::cfront::effects::AccessKind::Write
            && ((e.order > lo && e.order < hi) || loops.iter().any(|&l| t.within(e.site, l)))
    });
    hit
}
