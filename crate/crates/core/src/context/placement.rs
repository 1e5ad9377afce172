use std::fmt;

use super::{AccessEvent, ContextTable, Host};
use crate::cfront::ast::StmtId;
use crate::cfront::effects::AccessKind;
use crate::cfront::symbols::SymKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Position {
    Before,
    After,
}

/// A place between two statements, named by a neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InsertionPoint {
    pub anchor: StmtId,
    pub position: Position,
}

impl InsertionPoint {
    pub fn before(anchor: StmtId) -> Self {
        InsertionPoint { anchor, position: Position::Before }
    }

    pub fn after(anchor: StmtId) -> Self {
        InsertionPoint { anchor, position: Position::After }
    }
}

impl fmt::Display for InsertionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.position {
            Position::Before => write!(f, "before {}", self.anchor),
            Position::After => write!(f, "after {}", self.anchor),
        }
    }
}

/// Block-level ancestry of `start`: yields (block, index of the child on
/// the path, owner of the block) from the innermost block outwards.
fn levels(ctx: &ContextTable, start: StmtId) -> Vec<(StmtId, usize, Option<StmtId>)> {
    let t = &ctx.tree;
    let mut out = Vec::new();
    let mut cur = start;
    while let Some(p) = t.parent(cur) {
        if t.is_block(p) {
            let idx = t.children(p).iter().position(|&c| c == cur).expect("child of parent");
            out.push((p, idx, t.parent(p)));
        }
        cur = p;
    }
    out
}

/// Where the device copy of `x` for `kernel` can be loaded early: right
/// after the last statement that defines the host value, hoisted out of
/// loops that never redefine it. `same_space(k)` tells whether kernel `k`
/// shares the device copy with `kernel`.
pub fn last_cpu_write_site(ctx: &ContextTable, x: &SymKey, kernel: usize, same_space: &dyn Fn(usize) -> bool) -> InsertionPoint {
    let t = &ctx.tree;
    let site = ctx.kernel(kernel).expect("kernel in table").callsite;
    let other_gpu_write = |e: &AccessEvent| matches!(e.host, Host::Gpu(k) if !same_space(k)) && e.kind == AccessKind::Write;
    let defining = |e: &AccessEvent| (e.host == Host::Cpu && e.kind == AccessKind::Write) || other_gpu_write(e);
    for (block, idx, owner) in levels(ctx, site) {
        let kids = t.children(block);
        for j in (0..idx).rev() {
            if ctx.any_in(kids[j], x, &defining) {
                return if ctx.any_in(kids[j], x, &other_gpu_write) {
                    InsertionPoint::before(kids[idx])
                } else {
                    InsertionPoint::after(kids[j])
                };
            }
        }
        if let Some(o) = owner.filter(|&o| t.is_loop(o)) {
            if ctx.any_in(o, x, &defining) {
                return InsertionPoint::before(kids[0]);
            }
        }
    }
    InsertionPoint::before(t.children(t.root)[0])
}

/// Where the host copy of `x` written by `kernel` must be valid again: before
/// the first later consumer, or at the end of the enclosing loop body for a
/// loop-carried consumer. `None` when nothing consumes it.
///
/// Consumers are CPU accesses, reads by kernels in another space and
/// callsite uploads (`uploads(k)`).
pub fn first_cpu_read_site(
    ctx: &ContextTable,
    x: &SymKey,
    kernel: usize,
    same_space: &dyn Fn(usize) -> bool,
    uploads: &dyn Fn(usize) -> bool,
) -> Option<InsertionPoint> {
    let site = ctx.kernel(kernel).expect("kernel in table").callsite;
    let consumer = |e: &AccessEvent| match e.host {
        Host::Cpu => true,
        Host::Gpu(k) => e.kind == AccessKind::Read && (!same_space(k) || uploads(k)),
    };
    walk_forward(ctx, site, &|s| ctx.any_in(s, x, &consumer), false)
}

/// Where an asynchronous `kernel` must be waited for: before anything that
/// touches its arguments or launches another kernel; at the end of the
/// function (before its final `return`) otherwise.
pub fn sync_site(ctx: &ContextTable, kernel: usize, args: &[SymKey]) -> InsertionPoint {
    let site = ctx.kernel(kernel).expect("kernel in table").callsite;
    let touches = |e: &AccessEvent| match e.host {
        Host::Gpu(k) => k != kernel,
        Host::Cpu => args.contains(&e.key),
    };
    let t = &ctx.tree;
    let fallback = match t.final_return() {
        Some(r) => InsertionPoint::before(r),
        None => InsertionPoint::after(*t.children(t.root).last().expect("non-empty body")),
    };
    walk_forward(ctx, site, &|s| ctx.any_event_in(s, &touches), true).unwrap_or(fallback)
}

/// Shared forward search. A loop around the start re-executes it, so a
/// loop containing a consumer (or `repeats`, when given) ends at the end
/// of its body.
fn walk_forward(ctx: &ContextTable, start: StmtId, hit: &dyn Fn(StmtId) -> bool, repeats: bool) -> Option<InsertionPoint> {
    let t = &ctx.tree;
    for (block, idx, owner) in levels(ctx, start) {
        let kids = t.children(block);
        if let Some(&k) = kids[idx + 1..].iter().find(|&&k| hit(k)) {
            return Some(InsertionPoint::before(k));
        }
        if let Some(o) = owner.filter(|&o| t.is_loop(o)) {
            if repeats || hit(o) {
                return Some(InsertionPoint::after(*kids.last().expect("non-empty block")));
            }
        }
    }
    None
}

/// Where a release for the kernels at `callsites` goes: after the last one,
/// hoisted out of every loop that contains one of them, and moved past any
/// later sibling holding a point in `after` (stores, synchronisation).
pub fn release_site(ctx: &ContextTable, callsites: &[StmtId], after: &[InsertionPoint]) -> Option<InsertionPoint> {
    let t = &ctx.tree;
    let &last = callsites.iter().max_by_key(|&&c| t.enter(c))?;
    let mut anchor = last;
    let mut cur = last;
    while let Some(p) = t.parent(cur) {
        if t.is_loop(p) && callsites.iter().any(|&c| t.within(c, p)) {
            anchor = p;
        }
        cur = p;
    }
    let Some(block) = t.parent(anchor).filter(|&b| t.is_block(b)) else {
        return Some(InsertionPoint::after(anchor));
    };
    let kids = t.children(block);
    let idx = kids.iter().position(|&k| k == anchor).expect("child");
    let mut end = anchor;
    for &k in &kids[idx + 1..] {
        if after.iter().any(|p| t.within(p.anchor, k)) {
            end = k;
        }
    }
    if t.is_return(end) {
        return Some(InsertionPoint::before(end));
    }
    Some(InsertionPoint::after(end))
}
