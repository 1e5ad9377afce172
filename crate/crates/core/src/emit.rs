//! Rendering of variants: outlined codelets, callsites and the transfer
//! directives of a plan, printed back to C.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cfront::ast::*;
use crate::cfront::effects::Effects;
use crate::cfront::pragma::{render_pragma_lines, ArgClause, ArgProp, ArgSel, HmppDirective, HmppKind, Io, Pragma};
use crate::cfront::symbols::SymbolTable;
use crate::cfront::{parse_translation_unit, print_unit};
use crate::context::{build_context_table, build_transfer_plan, ContextTable, InsertionPoint, PlanInput, Position, TransferPlan};
use crate::error::{Diagnostic, Error, Result};
use crate::sim::{simulate, CostModelParams, Violation};
use crate::transform::{divide_region, find_omp_blocks, inline_calls, normalize_bodies, outline_block, BlockRole, CodeletDef, Exploration, InlineScope, OmpBlock};
use crate::variants::{decode_signature, plans_for_unit, variant_name, FlagSet, Signature, UnitVariant, VariantPlan};

/// Rounds of plan repair before a variant is emitted with its remaining
/// violations reported.
const MAX_REPAIRS: usize = 64;

/// Canonical `#pragma hmpp` text, continued with `&` past the width limit.
pub fn render_directive(d: &HmppDirective) -> String {
    render_pragma_lines(&Pragma::Hmpp(d.clone())).join("\n")
}

/// Directive counts and repair notes of one emitted variant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    /// Keyword → number of directives of that kind in the text.
    pub directives: BTreeMap<String, usize>,
    /// Residency refused during repair, `label:var` or `group:var`.
    pub demoted: Vec<String>,
    /// Stale accesses the simulator still reports.
    pub unresolved: Vec<String>,
}

impl Manifest {
    pub fn count(&self, kind: HmppKind) -> usize {
        self.directives.get(kind.keyword()).copied().unwrap_or(0)
    }

    /// Counts directive kinds in emitted text.
    pub fn scan(text: &str) -> BTreeMap<String, usize> {
        let mut out: BTreeMap<String, usize> = HmppKind::ALL.iter().map(|k| (k.keyword().to_string(), 0)).collect();
        for line in text.lines() {
            let Some(rest) = line.trim_start().strip_prefix("#pragma hmpp ") else { continue };
            if rest.starts_with('&') {
                continue;
            }
            let head = rest.split(',').next().unwrap_or("");
            if let Some(k) = head.split_whitespace().last().and_then(HmppKind::from_keyword) {
                *out.get_mut(k.keyword()).expect("all kinds present") += 1;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedVariant {
    pub name: String,
    pub signature: Signature,
    pub text: String,
    pub manifest: Manifest,
}

impl RenderedVariant {
    pub fn file_name(&self, stem: &str) -> String {
        format!("{stem}{}.c", self.name)
    }
}

/// A parsed input ready for variant generation.
#[derive(Debug, Clone)]
pub struct Session {
    /// Input with exploration clauses (`check`, `fixed`) removed.
    pub unit: SourceUnit,
    pub blocks: Vec<OmpBlock>,
    /// Whether block `i` shares an array with another explored kernel of
    /// its function, which makes grouping worth exploring.
    pub group_eligible: Vec<bool>,
    pub diagnostics: Vec<Diagnostic>,
    pub params: CostModelParams,
}

impl Session {
    pub fn new(unit: &SourceUnit) -> Result<Session> {
        Session::with_selection(unit, None)
    }

    /// Like [`Session::new`], exploring only blocks whose pragma line (or
    /// enclosing region's pragma line) is in `lines`. Others stay OpenMP.
    pub fn with_selection(unit: &SourceUnit, lines: Option<&[u32]>) -> Result<Session> {
        let mut blocks = find_omp_blocks(unit);
        if let Some(lines) = lines {
            let region_line: Vec<u32> = blocks
                .iter()
                .map(|b| match b.role {
                    BlockRole::Sub { region } => blocks[region].line,
                    _ => b.line,
                })
                .collect();
            for (b, r) in blocks.iter_mut().zip(region_line) {
                if !lines.contains(&b.line) && !lines.contains(&r) {
                    b.exploration = Exploration::None;
                }
            }
        }
        let mut unit = unit.clone();
        strip_exploration(&mut unit);
        let mut s = Session { unit, blocks, group_eligible: Vec::new(), diagnostics: Vec::new(), params: CostModelParams::default() };
        s.group_eligible = vec![false; s.blocks.len()];
        let explored: BTreeMap<usize, FlagSet> = s.blocks.iter().filter(|b| b.explored()).map(|b| (b.index, FlagSet::plain())).collect();
        if explored.is_empty() {
            return Ok(s);
        }
        let built = s.outline(&explored)?;
        s.diagnostics = built.diagnostics.clone();
        for (i, ci) in built.codelets.iter().enumerate() {
            let arrays = |c: &CodeletDef| -> BTreeSet<String> { c.params.iter().filter(|p| p.is_array()).map(|p| p.name.clone()).collect() };
            let mine = arrays(ci);
            let shares = built
                .codelets
                .iter()
                .enumerate()
                .any(|(j, cj)| j != i && cj.host_function == ci.host_function && !mine.is_disjoint(&arrays(cj)));
            s.group_eligible[ci.block] = shares;
        }
        Ok(s)
    }

    /// Every variant of the unit's exploration space.
    pub fn variants(&self, cap: usize) -> Result<Vec<UnitVariant>> {
        plans_for_unit(&self.blocks, &|i| self.group_eligible[i], cap)
    }

    /// Renders one variant, repairing transfer placement until the
    /// residency simulator accepts it.
    pub fn emit(&self, variant: &UnitVariant) -> Result<RenderedVariant> {
        let flags: BTreeMap<usize, FlagSet> =
            self.blocks.iter().filter(|b| b.is_kernel_candidate()).map(|b| (b.index, variant.flags(b.index))).filter(|(_, f)| !f.baseline).collect();
        let signature = variant.signature();
        if flags.is_empty() {
            let text = print_unit(&self.unit);
            let manifest = Manifest { directives: Manifest::scan(&text), ..Default::default() };
            return Ok(RenderedVariant { name: variant.name.clone(), signature, text, manifest });
        }
        let built = self.outline(&flags)?;
        let kernel_flags: Vec<FlagSet> = built.codelets.iter().map(|c| flags[&c.block]).collect();
        let mut unmapped: BTreeSet<(String, String)> = BTreeSet::new();
        let mut demoted: BTreeSet<(usize, String)> = BTreeSet::new();
        let mut rounds = 0;
        loop {
            let plan = build_transfer_plan(&PlanInput {
                codelets: &built.codelets,
                flags: &kernel_flags,
                contexts: &built.contexts,
                unmapped: &unmapped,
                demoted: &demoted,
            });
            let text = render(&built, &kernel_flags, &plan)?;
            let reparsed = parse_translation_unit(&text)
                .map_err(|e| Error::Plan(format!("variant {} does not parse back: {e}", variant.name)))?;
            let violations = match reparsed.function("main") {
                Some(_) => simulate(&reparsed, &self.params)?.violations,
                None => Vec::new(),
            };
            let mut changed = false;
            if rounds < MAX_REPAIRS {
                for v in &violations {
                    changed |= demote(v, &built.codelets, &plan, &mut unmapped, &mut demoted);
                }
            }
            rounds += 1;
            if changed {
                continue;
            }
            let mut manifest = Manifest { directives: Manifest::scan(&text), ..Default::default() };
            manifest.demoted = unmapped.iter().map(|(g, v)| format!("{g}:{v}")).chain(demoted.iter().map(|(k, v)| format!("{}:{v}", built.codelets[*k].label))).collect();
            manifest.unresolved = violations.iter().map(|v| format!("{}:{}: {}", v.label.as_deref().unwrap_or("-"), v.var, v.message)).collect();
            return Ok(RenderedVariant { name: variant.name.clone(), signature, text, manifest });
        }
    }

    /// Renders every variant, in order, using all cores.
    pub fn emit_all(&self, variants: &[UnitVariant]) -> Result<Vec<RenderedVariant>> {
        variants.par_iter().map(|v| self.emit(v)).collect()
    }

    /// The single configuration of a transform run: pinned blocks keep
    /// their signature, `check` blocks become plain codelets.
    pub fn default_variant(&self) -> Result<UnitVariant> {
        let plans = self
            .blocks
            .iter()
            .filter(|b| b.explored())
            .map(|b| {
                let plan = match b.exploration {
                    Exploration::Fixed(x, y, z) => {
                        VariantPlan { block: b.index, flags: decode_signature(Signature(x, y, z))?, signature: Signature(x, y, z) }
                    }
                    _ => VariantPlan::new(b.index, FlagSet::plain())?,
                };
                Ok((b.index, plan))
            })
            .collect::<Result<BTreeMap<usize, VariantPlan>>>()?;
        Ok(UnitVariant { name: variant_name(&plans), plans })
    }

    /// Inlines, outlines and analyses the blocks in `flags`.
    fn outline(&self, flags: &BTreeMap<usize, FlagSet>) -> Result<Built> {
        let targets: Vec<&OmpBlock> = flags.keys().map(|&i| &self.blocks[i]).collect();
        let scope = InlineScope::Within { stmts: targets.iter().map(|b| b.stmt).collect(), functions: BTreeSet::new() };
        let (mut unit, _) = inline_calls(&self.unit, &scope)?;
        let blocks = find_omp_blocks(&unit);
        let by_line: HashMap<(&str, u32), &OmpBlock> = blocks.iter().map(|b| ((b.function.as_str(), b.line), b)).collect();
        let mut diagnostics = Vec::new();
        let mut codelets = Vec::new();
        let mut outlined = HashSet::new();
        for b in &targets {
            let cur = by_line.get(&(b.function.as_str(), b.line)).ok_or_else(|| Error::Plan(format!("block at line {} lost during inlining", b.line)))?;
            let table = SymbolTable::build(&unit)?;
            let fx = Effects::build(&unit, &table);
            let (mut c, d) = outline_block(&mut unit, &table, &fx, cur)?;
            c.block = b.index;
            diagnostics.extend(d);
            outlined.insert(cur.index);
            codelets.push(c);
        }
        for b in blocks.iter().filter(|b| matches!(b.role, BlockRole::Region { .. })) {
            if let BlockRole::Region { subs } = &b.role {
                if subs.iter().any(|s| outlined.contains(s)) {
                    divide_region(&mut unit, b, &blocks, &outlined);
                }
            }
        }
        let hosts: BTreeSet<String> = codelets.iter().map(|c| c.host_function.clone()).collect();
        let mut next = unit.next_id;
        let mut ids = || {
            let id = StmtId(next);
            next += 1;
            id
        };
        for h in &hosts {
            if let Some(body) = unit.function_mut(h).and_then(|f| f.body.as_mut()) {
                normalize_bodies(body, &mut ids);
            }
        }
        unit.next_id = next;
        let table = SymbolTable::build(&unit)?;
        let fx = Effects::build(&unit, &table);
        let mut contexts = BTreeMap::new();
        for h in &hosts {
            let ctx = build_context_table(&unit, &table, &fx, &codelets, h).ok_or_else(|| Error::Plan(format!("host function `{h}` has no body")))?;
            contexts.insert(h.clone(), ctx);
        }
        Ok(Built { unit, codelets, contexts, diagnostics })
    }
}

/// Renders `variant` of `unit` with default settings.
pub fn emit_variant(unit: &SourceUnit, variant: &UnitVariant) -> Result<RenderedVariant> {
    Session::new(unit)?.emit(variant)
}

struct Built {
    unit: SourceUnit,
    codelets: Vec<CodeletDef>,
    contexts: BTreeMap<String, ContextTable>,
    diagnostics: Vec<Diagnostic>,
}

fn strip_exploration(unit: &mut SourceUnit) {
    for item in &mut unit.items {
        let ItemKind::Function(f) = &mut item.kind else { continue };
        let Some(body) = &mut f.body else { continue };
        body.walk_mut(&mut |s| {
            for p in &mut s.pragmas {
                if let Pragma::Omp(o) = p {
                    *o = o.without_exploration();
                }
            }
        });
    }
}

/// Records the residency to give up for `v`. Returns whether anything new
/// was demoted.
fn demote(
    v: &Violation,
    codelets: &[CodeletDef],
    plan: &TransferPlan,
    unmapped: &mut BTreeSet<(String, String)>,
    demoted: &mut BTreeSet<(usize, String)>,
) -> bool {
    let Some(label) = &v.label else { return false };
    let Some(k) = codelets.iter().position(|c| &c.label == label) else { return false };
    if let Some(g) = plan.group_of(k) {
        if g.mapbyname.contains(&v.var) {
            return unmapped.insert((g.label.clone(), v.var.clone()));
        }
    }
    if codelets[k].param_for_host(&v.var).is_some() && demoted.insert((k, v.var.clone())) {
        return true;
    }
    // The stale copy may come from another kernel's deferred store.
    let mut changed = false;
    for (o, c) in codelets.iter().enumerate() {
        if o != k && c.param_for_host(&v.var).is_some_and(|p| p.writes) && plan.stores.iter().any(|s| s.label == c.label) {
            changed |= demoted.insert((o, v.var.clone()));
        }
    }
    changed
}

fn directive(kind: HmppKind, group: Option<&str>, label: Option<&str>) -> HmppDirective {
    HmppDirective::labeled(kind, group, label)
}

/// Adds `args[names].<prop>` clauses, coalescing names with equal values.
fn coalesced(d: &mut HmppDirective, entries: Vec<(String, ArgProp)>) {
    let mut groups: Vec<(ArgProp, Vec<String>)> = Vec::new();
    for (name, prop) in entries {
        match groups.iter_mut().find(|(p, _)| *p == prop) {
            Some((_, names)) => names.push(name),
            None => groups.push((prop, vec![name])),
        }
    }
    for (prop, names) in groups {
        d.args.push(ArgClause::names(names, prop));
    }
}

fn codelet_directive(k: usize, c: &CodeletDef, flags: FlagSet, plan: &TransferPlan) -> HmppDirective {
    let group = plan.group_of(k).map(|g| g.label.as_str());
    let mut d = directive(HmppKind::Codelet, group, Some(&c.label));
    if group.is_none() {
        d.target = Some("CUDA".into());
    }
    let plain = flags.is_plain();
    let mut io = Vec::new();
    for want in [Io::InOut, Io::In, Io::Out] {
        for p in c.params.iter().filter(|p| p.is_array()) {
            let got = plan.io.get(&(k, p.name.clone())).copied().or(p.io());
            // `in` is the default direction; plain codelets leave it implicit.
            if got == Some(want) && !(plain && want == Io::In) {
                io.push((p.name.clone(), ArgProp::Io(want)));
            }
        }
    }
    coalesced(&mut d, io);
    let sizes = c.params.iter().filter_map(|p| p.size_text().map(|s| (p.name.clone(), ArgProp::Size(s)))).collect();
    coalesced(&mut d, sizes);
    if plain {
        d.args.push(ArgClause { sel: ArgSel::Star, prop: ArgProp::Transfer("auto".into()) });
    }
    d
}

fn callsite_directive(k: usize, c: &CodeletDef, plan: &TransferPlan) -> HmppDirective {
    let group = plan.group_of(k).map(|g| g.label.as_str());
    let mut d = directive(HmppKind::Callsite, group, Some(&c.label));
    let noupdate: Vec<String> = c.params.iter().filter(|p| plan.noupdate.contains(&(k, p.name.clone()))).map(|p| p.name.clone()).collect();
    if !noupdate.is_empty() {
        d.args.push(ArgClause::names(noupdate, ArgProp::NoUpdate(true)));
    }
    d.asynchronous = plan.asynchronous.contains(&k);
    d
}

fn transfer(kind: HmppKind, group: Option<&str>, label: &str, args: &[(String, String)]) -> HmppDirective {
    let mut d = directive(kind, group, Some(label));
    d.args.push(ArgClause::names(args.iter().map(|a| a.0.clone()).collect(), ArgProp::Bare));
    for (name, addr) in args {
        d.args.push(ArgClause::names(vec![name.clone()], ArgProp::Addr(addr.clone())));
    }
    d
}

/// Standalone directives of a plan, keyed by insertion point, in emission
/// order (synchronize, delegatedstore, release, advancedload).
fn standalone(plan: &TransferPlan) -> BTreeMap<InsertionPoint, Vec<HmppDirective>> {
    let mut at: BTreeMap<InsertionPoint, Vec<(u8, HmppDirective)>> = BTreeMap::new();
    for s in &plan.syncs {
        at.entry(s.at).or_default().push((0, directive(HmppKind::Synchronize, s.group.as_deref(), Some(&s.label))));
    }
    for s in &plan.stores {
        at.entry(s.at).or_default().push((1, transfer(HmppKind::DelegatedStore, s.group.as_deref(), &s.label, &[(s.arg.clone(), s.addr.clone())])));
    }
    for r in &plan.releases {
        at.entry(r.at).or_default().push((2, directive(HmppKind::Release, r.group.as_deref(), r.label.as_deref())));
    }
    for l in &plan.loads {
        at.entry(l.at).or_default().push((3, transfer(HmppKind::AdvancedLoad, l.group.as_deref(), &l.label, &l.args)));
    }
    at.into_iter()
        .map(|(p, mut v)| {
            v.sort_by_key(|(rank, _)| *rank);
            (p, v.into_iter().map(|(_, d)| d).collect())
        })
        .collect()
}

fn render(built: &Built, flags: &[FlagSet], plan: &TransferPlan) -> Result<String> {
    let mut unit = built.unit.clone();
    let mut next = unit.next_id;
    let mut fresh = |d: HmppDirective| {
        let s = Stmt::new(StmtId(next), StmtKind::Directive(d));
        next += 1;
        s
    };
    let points = standalone(plan);
    let hosts: BTreeSet<&str> = built.codelets.iter().map(|c| c.host_function.as_str()).collect();

    for host in &hosts {
        let body = unit.function_mut(host).and_then(|f| f.body.as_mut()).expect("host body");
        for (k, c) in built.codelets.iter().enumerate().filter(|(_, c)| c.host_function == *host) {
            let site = body.find_mut(c.callsite).ok_or_else(|| Error::Plan(format!("callsite of `{}` missing", c.label)))?;
            site.pragmas.push(Pragma::Hmpp(callsite_directive(k, c, plan)));
        }
        let tree_ids: HashSet<StmtId> = {
            let mut v = HashSet::new();
            body.walk(&mut |s| {
                v.insert(s.id);
            });
            v
        };
        for (p, ds) in &points {
            if !tree_ids.contains(&p.anchor) {
                continue;
            }
            let stmts: Vec<Stmt> = ds.iter().cloned().map(&mut fresh).collect();
            insert_at(body, *p, stmts)?;
        }
        let mut head = Vec::new();
        for g in plan.groups.iter().filter(|g| g.function == *host) {
            let mut d = directive(HmppKind::Group, Some(&g.label), None);
            d.target = Some("CUDA".into());
            head.push(fresh(d));
            if !g.mapbyname.is_empty() {
                let mut m = directive(HmppKind::MapByName, Some(&g.label), None);
                m.mapped = g.mapbyname.clone();
                head.push(fresh(m));
            }
        }
        if let StmtKind::Block(v) = &mut body.kind {
            v.splice(0..0, head);
        }
    }
    unit.next_id = next;

    // Codelet functions go right before their host.
    let mut items = Vec::with_capacity(unit.items.len() + built.codelets.len());
    for item in std::mem::take(&mut unit.items) {
        if let ItemKind::Function(f) = &item.kind {
            for (k, c) in built.codelets.iter().enumerate().filter(|(_, c)| c.host_function == f.name) {
                items.push(Item {
                    pragmas: vec![Pragma::Hmpp(codelet_directive(k, c, flags[k], plan))],
                    kind: ItemKind::Function(c.to_function()),
                    pos: c.pos,
                });
            }
        }
        items.push(item);
    }
    unit.items = items;
    Ok(print_unit(&unit))
}

fn insert_at(body: &mut Stmt, p: InsertionPoint, stmts: Vec<Stmt>) -> Result<()> {
    let mut done = false;
    body.walk_mut(&mut |s| {
        if done {
            return;
        }
        if let StmtKind::Block(v) = &mut s.kind {
            if let Some(i) = v.iter().position(|c| c.id == p.anchor) {
                let at = match p.position {
                    Position::Before => i,
                    Position::After => i + 1,
                };
                v.splice(at..at, stmts.clone());
                done = true;
            }
        }
    });
    if done {
        Ok(())
    } else {
        Err(Error::Plan(format!("insertion point {p} is not inside a block")))
    }
}

/// Writes every variant as `<stem><name>.c` plus a `manifest.txt` index.
pub fn write_variants(dir: &Path, stem: &str, variants: &[RenderedVariant]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let mut index = String::new();
    for v in variants {
        let file = v.file_name(stem);
        let path = dir.join(&file);
        fs::write(&path, &v.text)?;
        let _ = writeln!(index, "[{}]", v.name);
        let _ = writeln!(index, "signature = {}", v.signature);
        let _ = writeln!(index, "file = {file}");
        for (k, n) in &v.manifest.directives {
            let _ = writeln!(index, "{k} = {n}");
        }
        if !v.manifest.demoted.is_empty() {
            let _ = writeln!(index, "demoted = {}", v.manifest.demoted.join(" "));
        }
        index.push('\n');
        paths.push(path);
    }
    fs::write(dir.join("manifest.txt"), index)?;
    Ok(paths)
}
