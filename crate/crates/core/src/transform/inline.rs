//! Call inlining. Each inlined call becomes a block of fresh parameter
//! declarations (`_p_<x>_<f>_<y>`), a `_return_<y>` result variable, and a
//! renamed copy of the callee body.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::cfront::ast::*;
use crate::error::{Error, Pos, Result};

/// Which calls get inlined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InlineScope {
    /// Every call to a defined function anywhere in the unit.
    All,
    /// Calls inside the given statements (kernel blocks), plus calls to the
    /// listed functions anywhere.
    Within { stmts: Vec<StmtId>, functions: BTreeSet<String> },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InlineReport {
    /// (function, index y) per inlined call, in the order they were inlined.
    pub calls: Vec<(String, u32)>,
    /// Functions fully inlined and removed; one marker each.
    pub removed: Vec<String>,
}

impl InlineReport {
    pub fn inlined_functions(&self) -> BTreeSet<&str> {
        self.calls.iter().map(|(f, _)| f.as_str()).collect()
    }

    pub fn marker_name(function: &str) -> String {
        format!("deletedFunctionBodyNamed_{function}")
    }
}

pub fn inline_calls(unit: &SourceUnit, scope: &InlineScope) -> Result<(SourceUnit, InlineReport)> {
    let mut u = unit.clone();
    let defs: HashMap<String, FunctionDef> =
        u.functions().filter(|f| f.body.is_some()).map(|f| (f.name.clone(), f.clone())).collect();
    let mut cx = Inliner { defs: &defs, next_id: u.next_id, y: 0, report: InlineReport::default(), caller_names: HashSet::new() };
    for item in &mut u.items {
        let ItemKind::Function(f) = &mut item.kind else { continue };
        cx.caller_names = local_names(f);
        let Some(body) = &mut f.body else { continue };
        let mut stack = vec![f.name.clone()];
        match scope {
            InlineScope::All => cx.stmt(body, &mut stack, None)?,
            InlineScope::Within { stmts, functions } => {
                let filter = Filter { stmts, functions };
                cx.stmt(body, &mut stack, Some(&filter))?;
            }
        }
    }
    let (next_id, mut report) = (cx.next_id, cx.report);
    u.next_id = next_id;

    // Remove functions that were inlined and are no longer called.
    let inlined: BTreeSet<String> = report.calls.iter().map(|(f, _)| f.clone()).collect();
    let mut removed: BTreeSet<String> = BTreeSet::new();
    loop {
        let mut called: HashSet<String> = HashSet::new();
        for f in u.functions() {
            if removed.contains(&f.name) {
                continue;
            }
            if let Some(b) = &f.body {
                b.walk(&mut |s| {
                    for e in s.own_exprs() {
                        called.extend(e.calls().into_iter().map(str::to_string));
                    }
                });
            }
        }
        let before = removed.len();
        for name in &inlined {
            if name != "main" && !called.contains(name) {
                removed.insert(name.clone());
            }
        }
        if removed.len() == before {
            break;
        }
    }
    // Markers in definition order.
    let order: Vec<String> = u
        .functions()
        .filter(|f| f.body.is_some() && removed.contains(&f.name))
        .map(|f| f.name.clone())
        .collect();
    u.items.retain(|i| !matches!(&i.kind, ItemKind::Function(f) if removed.contains(&f.name)));
    let at = u.items.iter().rposition(|i| matches!(i.kind, ItemKind::Include(_))).map_or(0, |k| k + 1);
    for (k, name) in order.iter().enumerate() {
        let d = Decl {
            ty: TypeSpec::new(BaseType::Int),
            declarators: vec![Declarator::scalar(InlineReport::marker_name(name)).with_init(Expr::int(1))],
        };
        u.items.insert(at + k, Item { pragmas: Vec::new(), kind: ItemKind::Global(d), pos: Pos::default() });
    }
    report.removed = order;
    u.origin = None;
    Ok((u, report))
}

struct Filter<'a> {
    stmts: &'a [StmtId],
    functions: &'a BTreeSet<String>,
}

struct Inliner<'a> {
    defs: &'a HashMap<String, FunctionDef>,
    next_id: u32,
    y: u32,
    report: InlineReport,
    caller_names: HashSet<String>,
}

fn local_names(f: &FunctionDef) -> HashSet<String> {
    let mut v: HashSet<String> = f.params.iter().map(|p| p.decl.name.clone()).collect();
    if let Some(b) = &f.body {
        b.walk(&mut |s| match &s.kind {
            StmtKind::Decl(d) | StmtKind::For { init: Some(ForInit::Decl(d)), .. } => {
                v.extend(d.declarators.iter().map(|x| x.name.clone()));
            }
            _ => {}
        });
    }
    v
}

fn has_short_circuit_call(e: &Expr, inlinable: &dyn Fn(&str) -> bool) -> bool {
    let mut bad = false;
    e.walk(&mut |x| {
        let guarded: Vec<&Expr> = match x {
            Expr::Binary { op: BinOp::And | BinOp::Or, rhs, .. } => vec![rhs],
            Expr::Cond { then, els, .. } => vec![then, els],
            _ => Vec::new(),
        };
        for g in guarded {
            if g.calls().into_iter().any(inlinable) {
                bad = true;
            }
        }
    });
    bad
}

impl Inliner<'_> {
    fn fresh(&mut self) -> StmtId {
        let id = StmtId(self.next_id);
        self.next_id += 1;
        id
    }

    fn mk(&mut self, kind: StmtKind) -> Stmt {
        Stmt::new(self.fresh(), kind)
    }

    fn inlinable(&self, name: &str, filter: Option<&Filter>, in_scope: bool) -> bool {
        self.defs.contains_key(name) && (filter.is_none() || in_scope || filter.is_some_and(|f| f.functions.contains(name)))
    }

    /// Processes `s` and everything below it. `filter` restricts which calls
    /// are inlined; statements inside a filtered subtree are in scope.
    fn stmt(&mut self, s: &mut Stmt, stack: &mut Vec<String>, filter: Option<&Filter>) -> Result<()> {
        self.stmt_in(s, stack, filter, filter.is_none())
    }

    fn stmt_in(&mut self, s: &mut Stmt, stack: &mut Vec<String>, filter: Option<&Filter>, in_scope: bool) -> Result<()> {
        let in_scope = in_scope || filter.is_some_and(|f| f.stmts.contains(&s.id));
        // Non-block bodies that need preludes get wrapped in a block.
        let is_block = matches!(s.kind, StmtKind::Block(_));
        for c in s.children_mut().into_iter().filter(|_| !is_block) {
            if !matches!(c.kind, StmtKind::Block(_)) && self.needs_inline(c, filter, in_scope) {
                let inner = std::mem::replace(c, Stmt::new(StmtId(u32::MAX), StmtKind::Empty));
                let pos = inner.pos;
                let mut b = self.mk(StmtKind::Block(vec![inner]));
                b.pos = pos;
                *c = b;
            }
        }
        if let StmtKind::Block(list) = &mut s.kind {
            let old = std::mem::take(list);
            let mut new = Vec::with_capacity(old.len());
            for mut c in old {
                let child_scope = in_scope || filter.is_some_and(|f| f.stmts.contains(&c.id));
                let (prelude, keep) = self.hoist(&mut c, stack, filter, child_scope)?;
                new.extend(prelude);
                if keep {
                    new.push(c);
                }
            }
            *list = new;
            return Ok(());
        }
        for c in s.children_mut() {
            self.stmt_in(c, stack, filter, in_scope)?;
        }
        Ok(())
    }

    fn needs_inline(&self, s: &Stmt, filter: Option<&Filter>, in_scope: bool) -> bool {
        let in_scope = in_scope || filter.is_some_and(|f| f.stmts.contains(&s.id));
        s.own_exprs().iter().any(|e| e.calls().into_iter().any(|c| self.inlinable(c, filter, in_scope)))
    }

    /// Rewrites one statement of a block. Returns the statements to insert
    /// before it and whether the statement itself survives.
    fn hoist(
        &mut self,
        slot: &mut Stmt,
        stack: &mut Vec<String>,
        filter: Option<&Filter>,
        in_scope: bool,
    ) -> Result<(Vec<Stmt>, bool)> {
        // Children first (bodies of compound statements).
        if !matches!(slot.kind, StmtKind::Block(_)) {
            for c in slot.children_mut() {
                self.stmt_in(c, stack, filter, in_scope)?;
            }
        } else {
            self.stmt_in(slot, stack, filter, in_scope)?;
            return Ok((Vec::new(), true));
        }
        if !self.needs_inline(slot, filter, in_scope) {
            return Ok((Vec::new(), true));
        }
        let inl = |n: &str| self.inlinable(n, filter, in_scope);
        for e in slot.own_exprs() {
            if has_short_circuit_call(e, &inl) {
                return Err(Error::Unsupported { pos: slot.pos, construct: "inlinable call under `&&`, `||` or `?:`".into() });
            }
        }
        let mut prelude = Vec::new();
        let pos = slot.pos;
        match &mut slot.kind {
            StmtKind::For { .. } | StmtKind::While { .. } | StmtKind::DoWhile { .. } => {
                return Err(Error::Unsupported { pos, construct: "inlinable call in a loop header".into() });
            }
            StmtKind::Decl(d) if d.declarators.len() > 1 => {
                // Split so each initializer sees the previous declarations.
                let ty = d.ty.clone();
                let ds = std::mem::take(&mut d.declarators);
                let mut out = Vec::new();
                for dc in ds {
                    let mut one = self.mk(StmtKind::Decl(Decl { ty: ty.clone(), declarators: vec![dc] }));
                    one.pos = pos;
                    let (pre, _) = self.hoist(&mut one, stack, filter, in_scope)?;
                    out.extend(pre);
                    out.push(one);
                }
                *slot = out.pop().expect("at least two declarators");
                return Ok((out, true));
            }
            StmtKind::Expr(Expr::Call { callee, args }) if self.inlinable(callee, filter, in_scope) => {
                // Statement-level call: the result, if any, is discarded.
                let (callee, mut args) = (callee.clone(), std::mem::take(args));
                for a in &mut args {
                    self.rewrite_expr(a, &mut prelude, stack, filter, in_scope, pos)?;
                }
                self.expand(&callee, args, &mut prelude, stack, filter, pos)?;
                return Ok((prelude, false));
            }
            _ => {}
        }
        let mut exprs: Vec<*mut Expr> = slot.own_exprs_mut().into_iter().map(|e| e as *mut Expr).collect();
        for e in exprs.drain(..) {
            // SAFETY: the pointers come from distinct fields of `slot`, which is
            // not otherwise touched while they are live.
            let e = unsafe { &mut *e };
            self.rewrite_expr(e, &mut prelude, stack, filter, in_scope, pos)?;
        }
        Ok((prelude, true))
    }

    /// Post-order, left-to-right: replaces each inlinable call with its
    /// `_return_<y>` variable, appending the expansion to `prelude`.
    fn rewrite_expr(
        &mut self,
        e: &mut Expr,
        prelude: &mut Vec<Stmt>,
        stack: &mut Vec<String>,
        filter: Option<&Filter>,
        in_scope: bool,
        pos: Pos,
    ) -> Result<()> {
        for c in e.children_mut() {
            self.rewrite_expr(c, prelude, stack, filter, in_scope, pos)?;
        }
        if let Expr::Call { callee, args } = e {
            if self.inlinable(callee, filter, in_scope) {
                let callee = callee.clone();
                let args = std::mem::take(args);
                match self.expand(&callee, args, prelude, stack, filter, pos)? {
                    Some(ret) => *e = Expr::Ident(ret),
                    None => {
                        return Err(Error::Transform { pos, msg: format!("value of void function `{callee}` is used") });
                    }
                }
            }
        }
        Ok(())
    }

    /// Emits the expansion of one call. Returns the result variable name for
    /// non-void callees.
    fn expand(
        &mut self,
        callee: &str,
        args: Vec<Expr>,
        out: &mut Vec<Stmt>,
        stack: &mut Vec<String>,
        filter: Option<&Filter>,
        pos: Pos,
    ) -> Result<Option<String>> {
        if stack.iter().any(|f| f == callee) {
            return Err(Error::Recursion(callee.to_string()));
        }
        let f = self.defs[callee].clone();
        if f.params.len() != args.len() {
            return Err(Error::Transform {
                pos,
                msg: format!("call to `{callee}` passes {} arguments, expected {}", args.len(), f.params.len()),
            });
        }
        let y = self.y;
        self.y += 1;
        self.report.calls.push((callee.to_string(), y));

        let mut rename: HashMap<String, Expr> = HashMap::new();
        for (x, (p, arg)) in f.params.iter().zip(args).enumerate() {
            let name = format!("_p_{x}_{callee}_{y}");
            let d = &p.decl;
            if d.dims.len() > 1 {
                return Err(Error::Unsupported { pos: d.pos, construct: format!("inlining `{callee}` with a 2-D array parameter") });
            }
            let (pointers, init, use_expr) = if d.reference {
                (1, Expr::unary(UnOp::Addr, arg), Expr::unary(UnOp::Deref, Expr::ident(&name)))
            } else if !d.dims.is_empty() {
                (1, arg, Expr::ident(&name))
            } else {
                (d.pointers, arg, Expr::ident(&name))
            };
            let mut ty = p.ty.clone();
            ty.is_const = false;
            let decl = Declarator { name: name.clone(), pointers, reference: false, dims: Vec::new(), init: Some(init), pos: d.pos };
            let s = self.mk(StmtKind::Decl(Decl { ty, declarators: vec![decl] }));
            out.push(s);
            rename.insert(d.name.clone(), use_expr);
        }
        let ret_var = (f.ret.base != BaseType::Void || f.ret_pointers > 0).then(|| format!("_return_{y}"));
        if let Some(r) = &ret_var {
            let decl = Declarator { name: r.clone(), pointers: f.ret_pointers, reference: false, dims: Vec::new(), init: None, pos };
            let s = self.mk(StmtKind::Decl(Decl { ty: TypeSpec::new(f.ret.base), declarators: vec![decl] }));
            out.push(s);
        }

        let body = f.body.clone().expect("defined function");
        let StmtKind::Block(mut stmts) = body.kind else { unreachable!() };
        self.check_body(&f, &stmts, &rename)?;
        // Trailing return becomes the ret_<f><y> capture.
        let trailing = match stmts.last() {
            Some(Stmt { kind: StmtKind::Return(_), .. }) => stmts.pop(),
            _ => None,
        };
        let mut has_inner_return = false;
        for s in &stmts {
            s.walk(&mut |x| has_inner_return |= matches!(x.kind, StmtKind::Return(_)));
        }
        if has_inner_return {
            return Err(Error::Unsupported { pos: f.pos, construct: format!("inlining `{callee}` with an early return") });
        }
        let mut stmts: Vec<Stmt> = stmts.into_iter().map(|s| self.copy(s, &rename)).collect();
        match (trailing, &ret_var) {
            (Some(Stmt { kind: StmtKind::Return(Some(e)), .. }), Some(rv)) => {
                let rf = format!("ret_{callee}{y}");
                let decl = Declarator { name: rf.clone(), pointers: f.ret_pointers, reference: false, dims: Vec::new(), init: None, pos };
                let d = self.mk(StmtKind::Decl(Decl { ty: TypeSpec::new(f.ret.base), declarators: vec![decl] }));
                let mut e = e;
                substitute(&mut e, &rename);
                let a1 = self.mk(StmtKind::Expr(Expr::assign(Expr::ident(&rf), e)));
                let a2 = self.mk(StmtKind::Expr(Expr::assign(Expr::ident(rv), Expr::ident(&rf))));
                stmts.extend([d, a1, a2]);
            }
            (Some(Stmt { kind: StmtKind::Return(None), .. }) | None, None) => {}
            (_, Some(_)) => {
                return Err(Error::Unsupported { pos: f.pos, construct: format!("non-void `{callee}` without a trailing return") });
            }
            (Some(_), None) => {
                return Err(Error::Transform { pos: f.pos, msg: format!("void function `{callee}` returns a value") });
            }
        }
        let mut block = self.mk(StmtKind::Block(stmts));
        block.pos = pos;
        // Calls inside the copied body are in scope for this expansion.
        stack.push(callee.to_string());
        let res = self.stmt_in(&mut block, stack, filter, true);
        stack.pop();
        res?;
        out.push(block);
        Ok(ret_var)
    }

    fn check_body(&self, f: &FunctionDef, stmts: &[Stmt], rename: &HashMap<String, Expr>) -> Result<()> {
        let params: HashSet<&str> = f.params.iter().map(|p| p.decl.name.as_str()).collect();
        let mut locals: HashSet<String> = HashSet::new();
        let mut err = None;
        for s in stmts {
            s.walk(&mut |x| {
                if let StmtKind::Decl(d) | StmtKind::For { init: Some(ForInit::Decl(d)), .. } = &x.kind {
                    for dc in &d.declarators {
                        if params.contains(dc.name.as_str()) && err.is_none() {
                            err = Some(Error::Unsupported {
                                pos: dc.pos,
                                construct: format!("local `{}` shadows a parameter of `{}`", dc.name, f.name),
                            });
                        }
                        locals.insert(dc.name.clone());
                    }
                }
            });
        }
        if let Some(e) = err {
            return Err(e);
        }
        for s in stmts {
            let mut bad = None;
            s.walk(&mut |x| {
                for e in x.own_exprs() {
                    e.walk(&mut |n| {
                        if let Expr::Ident(n) = n {
                            let free = !rename.contains_key(n) && !locals.contains(n);
                            if free && self.caller_names.contains(n) && bad.is_none() {
                                bad = Some(n.clone());
                            }
                        }
                    });
                }
            });
            if let Some(n) = bad {
                return Err(Error::Unsupported {
                    pos: s.pos,
                    construct: format!("global `{n}` used by `{}` is shadowed at the call site", f.name),
                });
            }
        }
        Ok(())
    }

    /// Deep copy with fresh ids and parameter renaming.
    fn copy(&mut self, mut s: Stmt, rename: &HashMap<String, Expr>) -> Stmt {
        s.id = self.fresh();
        for e in s.own_exprs_mut() {
            substitute(e, rename);
        }
        let kids: Vec<*mut Stmt> = s.children_mut().into_iter().map(|c| c as *mut Stmt).collect();
        for c in kids {
            // SAFETY: distinct children of `s`, not aliased.
            let c = unsafe { &mut *c };
            let taken = std::mem::replace(c, Stmt::new(StmtId(u32::MAX), StmtKind::Empty));
            *c = self.copy(taken, rename);
        }
        s
    }
}

fn substitute(e: &mut Expr, rename: &HashMap<String, Expr>) {
    if let Expr::Ident(n) = e {
        if let Some(r) = rename.get(n) {
            *e = r.clone();
        }
        return;
    }
    for c in e.children_mut() {
        substitute(c, rename);
    }
}

/// Splits a statement so that each call to a function defined in `unit`
/// is captured on its own line (`T _return_<y> = f(...);`, evaluation
/// order, starting at `y0`), followed by the statement using the captures.
pub fn split_multi_call_expr(unit: &SourceUnit, stmt: &Stmt, y0: u32, ids: &mut dyn FnMut() -> StmtId) -> Vec<Stmt> {
    fn go(e: &mut Expr, unit: &SourceUnit, y: &mut u32, out: &mut Vec<Stmt>, ids: &mut dyn FnMut() -> StmtId) {
        for c in e.children_mut() {
            go(c, unit, y, out, ids);
        }
        let Expr::Call { callee, .. } = e else { return };
        let Some(f) = unit.function(callee).filter(|f| f.body.is_some()) else { return };
        if f.ret.base == BaseType::Void && f.ret_pointers == 0 {
            return;
        }
        let name = format!("_return_{y}");
        *y += 1;
        let call = std::mem::replace(e, Expr::ident(&name));
        let d = Declarator { pointers: f.ret_pointers, ..Declarator::scalar(name) }.with_init(call);
        out.push(Stmt::new(ids(), StmtKind::Decl(Decl { ty: TypeSpec::new(f.ret.base), declarators: vec![d] })));
    }
    let mut s = stmt.clone();
    let mut out = Vec::new();
    let mut y = y0;
    for e in s.own_exprs_mut() {
        go(e, unit, &mut y, &mut out, ids);
    }
    out.push(s);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::{parse_translation_unit, print_unit};

    const TABLE9: &str = "\
int g(int &a, int b)
{
    int r = 2;
    int c = 1;
    a = a + r * 2;
    int ret = a + b + c + r * 2;
    return ret;
}
int f(int a)
{
    return a + 1;
}
int main()
{
    int l;
    int x = 2;
    l = f(1) + f(2) + g(x, 6);
    l = l * g(x, 2);
    return l;
}
";

    #[test]
    fn whole_program_inline_shape() {
        let u = parse_translation_unit(TABLE9).unwrap();
        let (v, rep) = inline_calls(&u, &InlineScope::All).unwrap();
        assert_eq!(rep.removed, vec!["g", "f"]);
        assert_eq!(rep.calls.iter().map(|(_, y)| *y).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let text = print_unit(&v);
        assert!(text.starts_with("int deletedFunctionBodyNamed_g = 1;\nint deletedFunctionBodyNamed_f = 1;\n"), "{text}");
        assert!(text.contains("int *_p_0_g_2 = &x;"), "{text}");
        assert!(text.contains("*_p_0_g_2 = *_p_0_g_2 + r * 2;"), "{text}");
        assert!(text.contains("l = _return_0 + _return_1 + _return_2;"), "{text}");
        assert!(text.contains("ret_g3 = ret;"), "{text}");
        assert!(!text.contains("int f("));
    }

    #[test]
    fn split_captures_calls_in_order() {
        let u = parse_translation_unit(TABLE9).unwrap();
        let body = u.function("main").unwrap().body.as_ref().unwrap();
        let StmtKind::Block(v) = &body.kind else { panic!() };
        let mut n = 1000;
        let mut ids = || {
            n += 1;
            StmtId(n)
        };
        let parts = split_multi_call_expr(&u, &v[2], 0, &mut ids);
        let text: Vec<String> = parts.iter().map(|s| crate::cfront::print_stmt(s, 0)).collect();
        assert_eq!(
            text,
            vec![
                "int _return_0 = f(1);\n",
                "int _return_1 = f(2);\n",
                "int _return_2 = g(x, 6);\n",
                "l = _return_0 + _return_1 + _return_2;\n"
            ]
        );
        let one = split_multi_call_expr(&u, &v[3], 3, &mut ids);
        assert_eq!(crate::cfront::print_stmt(&one[1], 0), "l = l * _return_3;\n");
    }

    #[test]
    fn unit_without_calls_is_unchanged() {
        let u = parse_translation_unit("int main() { int a = 1; return a; }").unwrap();
        let (v, rep) = inline_calls(&u, &InlineScope::All).unwrap();
        assert_eq!(rep, InlineReport::default());
        assert_eq!(print_unit(&v), print_unit(&u));
    }

    #[test]
    fn recursion_is_rejected() {
        let u = parse_translation_unit("int f(int n) { return f(n); } int main() { return f(1); }").unwrap();
        assert!(matches!(inline_calls(&u, &InlineScope::All), Err(Error::Recursion(n)) if n == "f"));
    }

    #[test]
    fn evaluation_order_is_left_to_right() {
        let src = "int g(int a, int b) { return a * b; } int f(int a) { return a + 1; } \
                   int main() { int l; int x = 3; l = g(x, 2) * f(1); return l; }";
        let u = parse_translation_unit(src).unwrap();
        let (_, rep) = inline_calls(&u, &InlineScope::All).unwrap();
        assert_eq!(rep.calls, vec![("g".to_string(), 0), ("f".to_string(), 1)]);
    }

    #[test]
    fn nested_calls_in_arguments_expand_first() {
        let src = "int f(int a) { return a + 1; } int main() { int l = f(f(1)); return l; }";
        let u = parse_translation_unit(src).unwrap();
        let (v, _) = inline_calls(&u, &InlineScope::All).unwrap();
        let text = print_unit(&v);
        assert!(text.contains("int _p_0_f_1 = _return_0;"), "{text}");
        assert!(text.contains("int l = _return_1;"), "{text}");
        parse_translation_unit(&text).unwrap();
    }

    #[test]
    fn scoped_inline_keeps_other_callers() {
        let src = "int f(int a) { return a + 1; }\nint main() { int i; int s = f(0);\nfor (i = 0; i < 3; i++) { s = s + f(i); }\nreturn s; }";
        let u = parse_translation_unit(src).unwrap();
        let body = u.function("main").unwrap().body.as_ref().unwrap();
        let StmtKind::Block(v) = &body.kind else { panic!() };
        let loop_id = v[2].id;
        let (w, rep) = inline_calls(&u, &InlineScope::Within { stmts: vec![loop_id], functions: BTreeSet::new() }).unwrap();
        assert_eq!(rep.calls.len(), 1);
        assert!(rep.removed.is_empty());
        assert!(w.function("f").is_some());
    }
}
