//! Read/write effects of statements and expressions, including effects
//! propagated through calls to defined functions.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::symbols::{SymKey, SymbolTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

/// One access to a named variable, in evaluation order within a statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    pub name: String,
    pub kind: AccessKind,
}

/// External functions known not to modify their arguments.
pub const PURE_EXTERNALS: &[&str] = &[
    "printf", "puts", "putchar", "abs", "labs", "sin", "cos", "tan", "asin", "acos", "atan", "atan2", "sinh", "cosh",
    "tanh", "exp", "log", "log10", "log2", "pow", "sqrt", "cbrt", "fabs", "floor", "ceil", "fmod", "fmin", "fmax",
    "sinf", "cosf", "tanf", "expf", "logf", "powf", "sqrtf", "fabsf", "floorf", "ceilf", "fminf", "fmaxf", "rand",
    "srand", "clock", "time", "exit",
];

/// Functions available inside device code.
pub const DEVICE_MATH: &[&str] = &[
    "abs", "sin", "cos", "tan", "asin", "acos", "atan", "atan2", "sinh", "cosh", "tanh", "exp", "log", "log10", "log2",
    "pow", "sqrt", "cbrt", "fabs", "floor", "ceil", "fmod", "fmin", "fmax", "sinf", "cosf", "tanf", "expf", "logf",
    "powf", "sqrtf", "fabsf", "floorf", "ceilf", "fminf", "fmaxf",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FnSummary {
    pub param_reads: Vec<bool>,
    pub param_writes: Vec<bool>,
    /// Parameter is passed by reference or as an array/pointer.
    pub param_by_ref: Vec<bool>,
    pub global_reads: BTreeSet<String>,
    pub global_writes: BTreeSet<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Effects {
    summaries: HashMap<String, FnSummary>,
}

impl Effects {
    /// Summaries for every defined function, iterated to a fixpoint so
    /// mutually recursive functions converge.
    pub fn build(unit: &SourceUnit, table: &SymbolTable) -> Effects {
        let mut fx = Effects::default();
        for f in unit.functions().filter(|f| f.body.is_some()) {
            let n = f.params.len();
            let by_ref = f.params.iter().map(|p| p.decl.reference || p.decl.pointers > 0 || !p.decl.dims.is_empty()).collect();
            fx.summaries.insert(
                f.name.clone(),
                FnSummary { param_reads: vec![false; n], param_writes: vec![false; n], param_by_ref: by_ref, ..Default::default() },
            );
        }
        loop {
            let mut changed = false;
            for f in unit.functions() {
                let Some(body) = &f.body else { continue };
                let mut s = fx.summaries[&f.name].clone();
                body.walk(&mut |st| {
                    for a in fx.stmt_accesses(table, st) {
                        match table.resolve(st.id, &a.name).map(|x| &x.key) {
                            Some(SymKey::Param(pf, i)) if pf == &f.name => match a.kind {
                                AccessKind::Read => s.param_reads[*i] = true,
                                AccessKind::Write => s.param_writes[*i] = true,
                            },
                            Some(SymKey::Global(g)) => {
                                match a.kind {
                                    AccessKind::Read => s.global_reads.insert(g.clone()),
                                    AccessKind::Write => s.global_writes.insert(g.clone()),
                                };
                            }
                            _ => {}
                        }
                    }
                });
                if s != fx.summaries[&f.name] {
                    fx.summaries.insert(f.name.clone(), s);
                    changed = true;
                }
            }
            if !changed {
                return fx;
            }
        }
    }

    pub fn summary(&self, function: &str) -> Option<&FnSummary> {
        self.summaries.get(function)
    }

    /// Accesses made by a statement's own expressions. Declarations write
    /// each declared variable after evaluating its initializer.
    pub fn stmt_accesses(&self, table: &SymbolTable, s: &Stmt) -> Vec<Access> {
        let mut out = Vec::new();
        let decl = match &s.kind {
            StmtKind::Decl(d) => Some(d),
            StmtKind::For { init: Some(ForInit::Decl(d)), .. } => Some(d),
            _ => None,
        };
        if let Some(d) = decl {
            for dc in &d.declarators {
                for e in dc.dims.iter().flatten().chain(dc.init.iter()) {
                    self.expr(table, s.id, e, &mut out);
                }
                out.push(Access { name: dc.name.clone(), kind: AccessKind::Write });
            }
        }
        let skip_init = decl.is_some() && matches!(s.kind, StmtKind::For { .. });
        let exprs = s.own_exprs();
        let exprs: Vec<&Expr> = match (&s.kind, skip_init) {
            (StmtKind::Decl(_), _) => Vec::new(),
            (StmtKind::For { init: Some(ForInit::Decl(d)), .. }, true) => {
                let n: usize = d.declarators.iter().map(|x| x.dims.iter().flatten().count() + x.init.iter().count()).sum();
                exprs.into_iter().skip(n).collect()
            }
            _ => exprs,
        };
        for e in exprs {
            self.expr(table, s.id, e, &mut out);
        }
        out
    }

    pub fn expr_accesses(&self, table: &SymbolTable, at: StmtId, e: &Expr) -> Vec<Access> {
        let mut out = Vec::new();
        self.expr(table, at, e, &mut out);
        out
    }

    fn expr(&self, t: &SymbolTable, at: StmtId, e: &Expr, out: &mut Vec<Access>) {
        match e {
            Expr::Ident(n) => out.push(read(n)),
            Expr::Assign { op, lhs, rhs } => {
                let base = self.lvalue_parts(t, at, lhs, out);
                self.expr(t, at, rhs, out);
                if let Some(b) = base {
                    if *op != AssignOp::Assign {
                        out.push(read(&b));
                    }
                    out.push(write(&b));
                }
            }
            Expr::PostInc(x) | Expr::PostDec(x) | Expr::Unary { op: UnOp::PreInc | UnOp::PreDec, expr: x } => {
                self.read_modify_write(t, at, x, out)
            }
            Expr::Unary { op: UnOp::Addr, expr } => self.read_modify_write(t, at, expr, out),
            Expr::Call { callee, args } => self.call(t, at, callee, args, out),
            _ => {
                for c in e.children() {
                    self.expr(t, at, c, out);
                }
            }
        }
    }

    fn read_modify_write(&self, t: &SymbolTable, at: StmtId, x: &Expr, out: &mut Vec<Access>) {
        if let Some(b) = self.lvalue_parts(t, at, x, out) {
            out.push(read(&b));
            out.push(write(&b));
        }
    }

    /// Emits the reads inside an lvalue (indices, pointer arithmetic) and
    /// returns the variable it designates.
    fn lvalue_parts(&self, t: &SymbolTable, at: StmtId, e: &Expr, out: &mut Vec<Access>) -> Option<String> {
        match e {
            Expr::Ident(n) => Some(n.clone()),
            Expr::Paren(x) => self.lvalue_parts(t, at, x, out),
            Expr::Index { base, index } => {
                self.expr(t, at, index, out);
                self.lvalue_parts(t, at, base, out)
            }
            Expr::Unary { op: UnOp::Deref, expr } => {
                let b = expr.base_ident().map(str::to_string);
                match expr.as_ref() {
                    Expr::Ident(_) => {}
                    other => {
                        for c in other.children() {
                            if c.base_ident() != b.as_deref() || !matches!(c, Expr::Ident(_)) {
                                self.expr(t, at, c, out);
                            }
                        }
                    }
                }
                b
            }
            other => {
                self.expr(t, at, other, out);
                other.base_ident().map(str::to_string)
            }
        }
    }

    fn call(&self, t: &SymbolTable, at: StmtId, callee: &str, args: &[Expr], out: &mut Vec<Access>) {
        let summary = self.summaries.get(callee);
        let pure = summary.is_none() && PURE_EXTERNALS.contains(&callee);
        for (i, a) in args.iter().enumerate() {
            let by_ref = summary.and_then(|s| s.param_by_ref.get(i).copied()).unwrap_or(false);
            let target = passed_object(t, at, a, by_ref);
            match (target, summary) {
                (Some(x), Some(s)) => {
                    self.index_reads(t, at, a, out);
                    if s.param_reads.get(i).copied().unwrap_or(true) {
                        out.push(read(&x));
                    }
                    if s.param_writes.get(i).copied().unwrap_or(true) {
                        out.push(write(&x));
                    }
                }
                (Some(x), None) if !pure => {
                    self.index_reads(t, at, a, out);
                    out.push(read(&x));
                    out.push(write(&x));
                }
                _ => self.expr(t, at, strip_addr(a), out),
            }
        }
        if let Some(s) = summary {
            out.extend(s.global_reads.iter().map(|g| read(g)));
            out.extend(s.global_writes.iter().map(|g| write(g)));
        }
    }

    fn index_reads(&self, t: &SymbolTable, at: StmtId, a: &Expr, out: &mut Vec<Access>) {
        let mut inner = strip_addr(a);
        while let Expr::Index { base, index } = inner {
            self.expr(t, at, index, out);
            inner = base;
        }
    }
}

fn read(n: &str) -> Access {
    Access { name: n.to_string(), kind: AccessKind::Read }
}

fn write(n: &str) -> Access {
    Access { name: n.to_string(), kind: AccessKind::Write }
}

fn strip_addr(a: &Expr) -> &Expr {
    match a {
        Expr::Paren(x) => strip_addr(x),
        Expr::Unary { op: UnOp::Addr, expr } => expr,
        other => other,
    }
}

/// The variable whose storage a call argument exposes to the callee: an
/// aggregate passed by name, `&x`, or an lvalue bound to a reference.
fn passed_object(t: &SymbolTable, at: StmtId, a: &Expr, by_ref: bool) -> Option<String> {
    match a {
        Expr::Paren(x) => passed_object(t, at, x, by_ref),
        Expr::Unary { op: UnOp::Addr, expr } => expr.base_ident().map(str::to_string),
        Expr::Ident(n) => {
            let agg = t.resolve(at, n).is_some_and(|s| s.is_aggregate());
            (agg || by_ref).then(|| n.clone())
        }
        Expr::Index { .. } if by_ref => a.base_ident().map(str::to_string),
        _ => None,
    }
}
