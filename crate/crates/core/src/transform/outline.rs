//! Outlining: an OpenMP loop block becomes a codelet function plus a call
//! at the original location.

use std::collections::HashSet;

use crate::cfront::ast::*;
use crate::cfront::effects::{AccessKind, Effects, DEVICE_MATH};
use crate::cfront::pragma::{GridDim, HmppcgDirective, Io, OmpClause, OmpKind, OmpPragma, Pragma, ReductionOp};
use crate::cfront::symbols::{Shape, SymKey, Symbol, SymbolTable};
use crate::error::{Diagnostic, Error, Pos, Result};

use super::blocks::{BlockRole, OmpBlock};

#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    /// Passed by value.
    Scalar,
    /// 1-D array passed as `T *name`; `size` is its element count.
    Array { size: Expr },
    /// 2-D array passed with its declared extents.
    Matrix { rows: Expr, cols: Expr },
    /// Pointer standing in for the reduction variable `var`.
    Reduced { var: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeletParam {
    pub name: String,
    pub ty: TypeSpec,
    pub kind: ParamKind,
    /// Kernel reads / writes the host object.
    pub reads: bool,
    pub writes: bool,
}

impl CodeletParam {
    /// Host variable bound to the parameter.
    pub fn host_name(&self) -> &str {
        match &self.kind {
            ParamKind::Reduced { var } => var,
            _ => &self.name,
        }
    }

    pub fn is_array(&self) -> bool {
        matches!(self.kind, ParamKind::Array { .. } | ParamKind::Matrix { .. })
    }

    /// Transfer direction implied by the kernel's accesses; `None` for
    /// by-value scalars.
    pub fn io(&self) -> Option<Io> {
        match self.kind {
            ParamKind::Scalar => None,
            ParamKind::Reduced { .. } => Some(Io::InOut),
            _ => Some(match (self.reads, self.writes) {
                (_, false) => Io::In,
                (false, true) => Io::Out,
                (true, true) => Io::InOut,
            }),
        }
    }

    /// Argument expression at the callsite.
    pub fn callsite_arg(&self) -> Expr {
        match &self.kind {
            ParamKind::Reduced { var } => Expr::unary(UnOp::Addr, Expr::ident(var)),
            _ => Expr::ident(&self.name),
        }
    }

    /// `.size=` value for pointer-shaped params.
    pub fn size_text(&self) -> Option<String> {
        match &self.kind {
            ParamKind::Array { size } => Some(crate::cfront::print_expr(size)),
            ParamKind::Reduced { .. } => Some("1".into()),
            _ => None,
        }
    }

    /// Bytes moved by one whole-object transfer, given evaluated extents.
    pub fn elem_size(&self) -> u64 {
        self.ty.base.size()
    }

    pub fn to_param(&self) -> Param {
        let mut d = Declarator::scalar(&self.name);
        match &self.kind {
            ParamKind::Scalar => {}
            ParamKind::Array { .. } | ParamKind::Reduced { .. } => d.pointers = 1,
            ParamKind::Matrix { rows, cols } => d.dims = vec![Some(rows.clone()), Some(cols.clone())],
        }
        Param { ty: self.ty.clone(), decl: d }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeletDef {
    pub label: String,
    /// Index of the block in `find_omp_blocks` order.
    pub block: usize,
    pub host_function: String,
    pub params: Vec<CodeletParam>,
    pub body: Stmt,
    pub gridify: Vec<GridDim>,
    pub reduce: Option<(ReductionOp, String)>,
    /// The call statement that replaced the block.
    pub callsite: StmtId,
    pub pos: Pos,
}

impl CodeletDef {
    pub fn param(&self, name: &str) -> Option<&CodeletParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Param bound to host variable `var`.
    pub fn param_for_host(&self, var: &str) -> Option<&CodeletParam> {
        self.params.iter().find(|p| p.host_name() == var)
    }

    pub fn callsite_args(&self) -> Vec<Expr> {
        self.params.iter().map(CodeletParam::callsite_arg).collect()
    }

    pub fn to_function(&self) -> FunctionDef {
        FunctionDef {
            ret: TypeSpec::new(BaseType::Void),
            ret_pointers: 0,
            name: self.label.clone(),
            params: self.params.iter().map(CodeletParam::to_param).collect(),
            void_params: false,
            body: Some(self.body.clone()),
            pos: self.pos,
        }
    }
}

/// Loop induction variable of a `for` statement.
fn induction_var(s: &Stmt) -> Option<String> {
    let StmtKind::For { init, .. } = &s.kind else { return None };
    match init {
        Some(ForInit::Expr(Expr::Assign { op: AssignOp::Assign, lhs, .. })) => match lhs.as_ref() {
            Expr::Ident(n) => Some(n.clone()),
            _ => None,
        },
        Some(ForInit::Decl(d)) if d.declarators.len() == 1 => Some(d.declarators[0].name.clone()),
        _ => None,
    }
}

/// Grid mapping for a loop nest: the two outer loops of a perfect nest, or
/// the single loop. A reduction keeps the outer dimension serial.
pub fn gridify_spec(nest: &Stmt, reduction: bool) -> Vec<GridDim> {
    let Some(outer) = induction_var(nest) else { return Vec::new() };
    let StmtKind::For { body, .. } = &nest.kind else { unreachable!() };
    let inner = match &body.kind {
        StmtKind::For { .. } => Some(body.as_ref()),
        StmtKind::Block(v) => {
            let real: Vec<&Stmt> = v.iter().filter(|s| !matches!(s.kind, StmtKind::Empty)).collect();
            match real.as_slice() {
                [s] if matches!(s.kind, StmtKind::For { .. }) => Some(*s),
                _ => None,
            }
        }
        _ => None,
    };
    match inner.and_then(induction_var) {
        Some(j) if reduction => vec![GridDim::One, GridDim::Var(j)],
        Some(j) => vec![GridDim::Var(outer), GridDim::Var(j)],
        None => vec![GridDim::Var(outer)],
    }
}

fn subtree_ids(s: &Stmt) -> HashSet<StmtId> {
    let mut v = HashSet::new();
    s.walk(&mut |x| {
        v.insert(x.id);
    });
    v
}

/// Free variables of `block` in order of first use, resolved to symbols.
fn free_variables(block: &Stmt, table: &SymbolTable) -> Vec<Symbol> {
    let inside = subtree_ids(block);
    let mut seen: HashSet<SymKey> = HashSet::new();
    let mut out = Vec::new();
    block.walk(&mut |s| {
        for e in s.own_exprs() {
            e.walk(&mut |x| {
                let Expr::Ident(n) = x else { return };
                let Some(sym) = table.resolve(s.id, n) else { return };
                let local = matches!(&sym.key, SymKey::Local(d, _) if inside.contains(d));
                if !local && seen.insert(sym.key.clone()) {
                    out.push(sym.clone());
                }
            });
        }
    });
    out
}

/// Symbol named by an identifier in one of `sym`'s dimension expressions.
fn resolve_dim(sym: &Symbol, name: &str, table: &SymbolTable, unit: &SourceUnit) -> Option<Symbol> {
    match &sym.key {
        SymKey::Local(decl, _) => table.resolve(*decl, name).cloned(),
        SymKey::Param(f, _) => {
            let def = unit.function(f)?;
            def.params
                .iter()
                .position(|p| p.decl.name == name)
                .and_then(|k| table.get(&SymKey::Param(f.clone(), k)).cloned())
                .or_else(|| table.get(&SymKey::Global(name.to_string())).cloned())
        }
        SymKey::Global(_) => table.get(&SymKey::Global(name.to_string())).cloned(),
    }
}

fn ident_names(e: &Expr) -> Vec<String> {
    let mut v = Vec::new();
    e.walk(&mut |x| {
        if let Expr::Ident(n) = x {
            if !v.contains(n) {
                v.push(n.clone());
            }
        }
    });
    v
}

fn parenthesize(e: &Expr) -> Expr {
    match e {
        Expr::Ident(_) | Expr::Int(_) | Expr::Paren(_) => e.clone(),
        other => Expr::Paren(Box::new(other.clone())),
    }
}

/// Codelet parameters for `block`: free variables in first-use order, with
/// each array's extent symbols placed before it. The reduction variable, if
/// any, becomes a `<var>_reduced` pointer.
pub fn infer_codelet_params(
    unit: &SourceUnit,
    table: &SymbolTable,
    effects: &Effects,
    block: &Stmt,
    reduction: Option<&str>,
) -> Result<Vec<CodeletParam>> {
    let free = free_variables(block, table);
    let mut reads: HashSet<SymKey> = HashSet::new();
    let mut writes: HashSet<SymKey> = HashSet::new();
    block.walk(&mut |s| {
        for a in effects.stmt_accesses(table, s) {
            if let Some(sym) = table.resolve(s.id, &a.name) {
                match a.kind {
                    AccessKind::Read => reads.insert(sym.key.clone()),
                    AccessKind::Write => writes.insert(sym.key.clone()),
                };
            }
        }
    });

    let mut params: Vec<CodeletParam> = Vec::new();
    let mut placed: HashSet<SymKey> = HashSet::new();
    let scalar = |sym: &Symbol| CodeletParam {
        name: sym.name.clone(),
        ty: sym.ty.clone(),
        kind: ParamKind::Scalar,
        reads: reads.contains(&sym.key),
        writes: writes.contains(&sym.key),
    };
    for sym in &free {
        if placed.contains(&sym.key) {
            continue;
        }
        if reduction == Some(sym.name.as_str()) {
            if !sym.is_scalar() {
                return Err(Error::Transform { pos: sym.pos, msg: format!("reduction variable `{}` is not a scalar", sym.name) });
            }
            placed.insert(sym.key.clone());
            params.push(CodeletParam {
                name: format!("{}_reduced", sym.name),
                ty: sym.ty.clone(),
                kind: ParamKind::Reduced { var: sym.name.clone() },
                reads: true,
                writes: true,
            });
            continue;
        }
        let kind = match sym.shape() {
            Shape::Scalar => {
                placed.insert(sym.key.clone());
                params.push(scalar(sym));
                continue;
            }
            Shape::Array(Some(d)) => ParamKind::Array { size: parenthesize(&d) },
            Shape::Matrix(Some(r), Some(c)) => ParamKind::Matrix { rows: r, cols: c },
            Shape::Pointer | Shape::Array(None) | Shape::Matrix(..) => {
                return Err(Error::Transform {
                    pos: sym.pos,
                    msg: format!("`{}` is used in a kernel but its extent is unknown; declare it with explicit dimensions", sym.name),
                });
            }
        };
        for d in sym.dims.iter().flatten() {
            for n in ident_names(d) {
                let Some(ds) = resolve_dim(sym, &n, table, unit) else { continue };
                if placed.insert(ds.key.clone()) {
                    params.push(scalar(&ds));
                }
            }
        }
        placed.insert(sym.key.clone());
        params.push(CodeletParam {
            name: sym.name.clone(),
            ty: sym.ty.clone(),
            kind,
            reads: reads.contains(&sym.key),
            writes: writes.contains(&sym.key),
        });
    }
    if let Some(r) = reduction {
        if !params.iter().any(|p| matches!(&p.kind, ParamKind::Reduced { var } if var == r)) {
            // Unused in the body: still round-trips through the pointer.
            let sym = table
                .resolve(block.id, r)
                .ok_or_else(|| Error::Transform { pos: block.pos, msg: format!("reduction variable `{r}` is not declared") })?;
            params.push(CodeletParam {
                name: format!("{r}_reduced"),
                ty: sym.ty.clone(),
                kind: ParamKind::Reduced { var: r.to_string() },
                reads: true,
                writes: true,
            });
        }
    }
    Ok(params)
}

/// Prologue and epilogue that make a reduction variable local to the
/// codelet body.
pub fn transform_reduction(param: &CodeletParam, ids: &mut dyn FnMut() -> StmtId) -> (Stmt, Stmt) {
    let ParamKind::Reduced { var } = &param.kind else { panic!("not a reduction parameter") };
    let deref = Expr::unary(UnOp::Deref, Expr::ident(&param.name));
    let pro = Stmt::new(
        ids(),
        StmtKind::Decl(Decl { ty: param.ty.clone(), declarators: vec![Declarator::scalar(var).with_init(deref.clone())] }),
    );
    let epi = Stmt::new(ids(), StmtKind::Expr(Expr::assign(deref, Expr::ident(var))));
    (pro, epi)
}

/// Checks that a codelet body references only its parameters and its own
/// declarations, and calls only device-available functions.
pub fn check_global_scope(codelet: &CodeletDef) -> Vec<Diagnostic> {
    let mut scopes: Vec<HashSet<String>> = vec![codelet.params.iter().map(|p| p.name.clone()).collect()];
    let mut out = Vec::new();
    scope_walk(&codelet.body, &mut scopes, &mut out);
    out
}

fn scope_walk(s: &Stmt, scopes: &mut Vec<HashSet<String>>, out: &mut Vec<Diagnostic>) {
    let check = |e: &Expr, scopes: &Vec<HashSet<String>>, out: &mut Vec<Diagnostic>| {
        e.walk(&mut |x| match x {
            Expr::Ident(n) if !scopes.iter().any(|sc| sc.contains(n)) => {
                let msg = format!("`{n}` is neither a codelet parameter nor declared in the codelet");
                if !out.iter().any(|d: &Diagnostic| d.message == msg) {
                    out.push(Diagnostic::error(s.pos, msg));
                }
            }
            Expr::Call { callee, .. } if !DEVICE_MATH.contains(&callee.as_str()) => {
                let msg = format!("call to `{callee}` cannot run on the device and could not be inlined");
                if !out.iter().any(|d: &Diagnostic| d.message == msg) {
                    out.push(Diagnostic::error(s.pos, msg));
                }
            }
            _ => {}
        });
    };
    let declare = |d: &Decl, scopes: &mut Vec<HashSet<String>>, out: &mut Vec<Diagnostic>| {
        for dc in &d.declarators {
            for e in dc.dims.iter().flatten().chain(dc.init.iter()) {
                check(e, scopes, out);
            }
            scopes.last_mut().unwrap().insert(dc.name.clone());
        }
    };
    match &s.kind {
        StmtKind::Decl(d) => declare(d, scopes, out),
        StmtKind::Block(v) => {
            scopes.push(HashSet::new());
            for c in v {
                scope_walk(c, scopes, out);
            }
            scopes.pop();
        }
        StmtKind::For { init, cond, step, body } => {
            scopes.push(HashSet::new());
            match init {
                Some(ForInit::Decl(d)) => declare(d, scopes, out),
                Some(ForInit::Expr(e)) => check(e, scopes, out),
                None => {}
            }
            for e in cond.iter().chain(step.iter()) {
                check(e, scopes, out);
            }
            scope_walk(body, scopes, out);
            scopes.pop();
        }
        _ => {
            for e in s.own_exprs() {
                check(e, scopes, out);
            }
            for c in s.children() {
                scope_walk(c, scopes, out);
            }
        }
    }
}

/// Whether `name` (resolved in the host function) is read after the block
/// before being overwritten, counting the next iteration of enclosing loops.
fn live_after(host: &Stmt, block: StmtId, key: &SymKey, table: &SymbolTable, effects: &Effects) -> bool {
    // Linear event list of (stmt, in-block, enclosing loops, kind).
    struct Ev {
        kind: AccessKind,
        loops: Vec<StmtId>,
        in_block: bool,
    }
    fn walk(
        s: &Stmt,
        block: StmtId,
        in_block: bool,
        loops: &mut Vec<StmtId>,
        key: &SymKey,
        t: &SymbolTable,
        fx: &Effects,
        out: &mut Vec<Ev>,
    ) {
        let in_block = in_block || s.id == block;
        for a in fx.stmt_accesses(t, s) {
            if t.resolve(s.id, &a.name).is_some_and(|x| &x.key == key) {
                out.push(Ev { kind: a.kind, loops: loops.clone(), in_block });
            }
        }
        let is_loop = s.is_loop() && !in_block;
        if is_loop {
            loops.push(s.id);
        }
        for c in s.children() {
            walk(c, block, in_block, loops, key, t, fx, out);
        }
        if is_loop {
            loops.pop();
        }
    }
    let mut evs = Vec::new();
    walk(host, block, false, &mut Vec::new(), key, table, effects, &mut evs);
    let Some(last_in) = evs.iter().rposition(|e| e.in_block) else { return false };
    if let Some(next) = evs[last_in + 1..].iter().find(|e| !e.in_block) {
        if next.kind == AccessKind::Read {
            return true;
        }
        if next.loops.is_empty() {
            return false;
        }
    }
    // Wrap around the enclosing loops of the block.
    let block_loops = evs[last_in].loops.clone();
    for l in block_loops.iter().rev() {
        if let Some(first) = evs.iter().find(|e| !e.in_block && e.loops.contains(l)) {
            return first.kind == AccessKind::Read;
        }
    }
    false
}

/// Outlines one kernel block of `unit`. The block statement is replaced by
/// a call statement; the codelet function itself is returned, not inserted.
pub fn outline_block(
    unit: &mut SourceUnit,
    table: &SymbolTable,
    effects: &Effects,
    block: &OmpBlock,
) -> Result<(CodeletDef, Vec<Diagnostic>)> {
    let label = block.label();
    let mut diags = Vec::new();
    let host = unit.function(&block.function).and_then(|f| f.body.clone()).expect("block host exists");
    let stmt = host.find(block.stmt).expect("block statement exists").clone();
    if !matches!(stmt.kind, StmtKind::For { .. }) {
        return Err(Error::Transform { pos: block.pragma.pos, msg: "OpenMP block to outline is not a `for` loop".into() });
    }
    let reduction = block.pragma.reduction();
    let params = infer_codelet_params(unit, table, effects, &stmt, reduction.map(|r| r.1))?;
    for p in &params {
        if p.kind == ParamKind::Scalar && p.writes {
            let sym = table.resolve(stmt.id, &p.name).or_else(|| {
                let mut found = None;
                stmt.walk(&mut |s| {
                    if found.is_none() {
                        found = table.resolve(s.id, &p.name);
                    }
                });
                found
            });
            if let Some(sym) = sym {
                if live_after(&host, stmt.id, &sym.key, table, effects) {
                    diags.push(Diagnostic::warning(
                        block.pragma.pos,
                        format!("`{}` is written in kernel `{label}` and read afterwards, but is passed by value", p.name),
                    ));
                }
            }
        }
    }

    let mut next = unit.next_id;
    let mut ids = || {
        let id = StmtId(next);
        next += 1;
        id
    };
    let mut nest = stmt.clone();
    nest.pragmas.retain(|p| !matches!(p, Pragma::Omp(o) if o.kind != OmpKind::None));
    let gridify = gridify_spec(&nest, reduction.is_some());
    if gridify.is_empty() {
        diags.push(Diagnostic::warning(block.pragma.pos, format!("no grid mapping inferred for `{label}`")));
    }
    let reduce = reduction.map(|(op, v)| (op, v.to_string()));
    nest.pragmas.insert(0, Pragma::Hmppcg(HmppcgDirective { gridify: gridify.clone(), reduce: reduce.clone() }));
    let mut body = Vec::new();
    let mut epilogue = None;
    if let Some(p) = params.iter().find(|p| matches!(p.kind, ParamKind::Reduced { .. })) {
        let (pro, epi) = transform_reduction(p, &mut ids);
        body.push(pro);
        epilogue = Some(epi);
    }
    body.push(nest);
    body.extend(epilogue);
    let body = Stmt::new(ids(), StmtKind::Block(body));

    let callsite = ids();
    unit.next_id = next;
    let mut call = Stmt::new(callsite, StmtKind::Expr(Expr::call(&label, params.iter().map(CodeletParam::callsite_arg).collect())));
    call.pos = stmt.pos;
    let f = unit.function_mut(&block.function).expect("host function");
    let slot = f.body.as_mut().and_then(|b| b.find_mut(block.stmt)).expect("block statement");
    *slot = call;

    let def = CodeletDef {
        label,
        block: block.index,
        host_function: block.function.clone(),
        params,
        body,
        gridify,
        reduce,
        callsite,
        pos: block.pragma.pos,
    };
    diags.extend(check_global_scope(&def));
    Ok((def, diags))
}

/// Removes a region's `omp parallel` pragma. Sub-blocks that stay on the
/// CPU become `omp parallel for` carrying the region's data clauses.
pub fn divide_region(unit: &mut SourceUnit, region: &OmpBlock, blocks: &[OmpBlock], outlined: &HashSet<usize>) {
    let BlockRole::Region { subs } = &region.role else { return };
    let inherited: Vec<OmpClause> = region
        .pragma
        .clauses
        .iter()
        .filter(|c| matches!(c, OmpClause::Shared(_) | OmpClause::Private(_) | OmpClause::FirstPrivate(_)))
        .cloned()
        .collect();
    let Some(f) = unit.function_mut(&region.function) else { return };
    let Some(body) = f.body.as_mut() else { return };
    if let Some(s) = body.find_mut(region.stmt) {
        s.pragmas.retain(|p| !matches!(p, Pragma::Omp(o) if o.kind == OmpKind::Parallel));
    }
    for &k in subs {
        if outlined.contains(&k) {
            continue;
        }
        let Some(s) = body.find_mut(blocks[k].stmt) else { continue };
        for p in &mut s.pragmas {
            if let Pragma::Omp(o) = p {
                if o.kind == OmpKind::For {
                    let mut n = OmpPragma { kind: OmpKind::ParallelFor, ..o.without_exploration() };
                    for c in &inherited {
                        if !n.clauses.contains(c) {
                            n.clauses.push(c.clone());
                        }
                    }
                    *o = n;
                }
            }
        }
    }
}

/// Turns single-statement loop and branch bodies into blocks so directives
/// can be inserted next to any statement.
pub fn normalize_bodies(s: &mut Stmt, ids: &mut dyn FnMut() -> StmtId) {
    let wrap = |b: &mut Box<Stmt>, ids: &mut dyn FnMut() -> StmtId| {
        if !matches!(b.kind, StmtKind::Block(_)) {
            let inner = std::mem::replace(b.as_mut(), Stmt::new(StmtId(u32::MAX), StmtKind::Empty));
            let pos = inner.pos;
            let mut blk = Stmt::new(ids(), StmtKind::Block(vec![inner]));
            blk.pos = pos;
            **b = blk;
        }
    };
    match &mut s.kind {
        StmtKind::If { then, els, .. } => {
            wrap(then, ids);
            if let Some(e) = els {
                if !matches!(e.kind, StmtKind::If { .. }) {
                    wrap(e, ids);
                }
            }
        }
        StmtKind::For { body, .. } | StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => wrap(body, ids),
        _ => {}
    }
    for c in s.children_mut() {
        normalize_bodies(c, ids);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::{parse_translation_unit, print_stmt, print_unit};
    use crate::transform::find_omp_blocks;

    fn outline_first(src: &str) -> (SourceUnit, CodeletDef, Vec<Diagnostic>) {
        let mut u = parse_translation_unit(src).unwrap();
        let t = SymbolTable::build(&u).unwrap();
        let fx = Effects::build(&u, &t);
        let b = find_omp_blocks(&u);
        let (c, d) = outline_block(&mut u, &t, &fx, &b[0]).unwrap();
        (u, c, d)
    }

    #[test]
    fn matrix_product_params_in_first_use_order() {
        let src = "\
int main() {
    int row = 4, col = 4, i, j, k, a = 2; int result[row][col]; int array[row * col]; int mat1[row][col], mat2[row][col];
#pragma omp parallel for check
    for (i = 0; i < row; i++) {
        for (j = 0; j < col; j++) {
            result[i][j] = 0;
            array[i * col + j] = 0;
            for (k = 0; k < col; k++) {
                result[i][j] += mat1[i][k] * a * mat2[k][j];
                array[i * col + j] += result[i][j];
            }
        }
    }
    return result[1][1] + array[3];
}
";
        let (u, c, diags) = outline_first(src);
        let names: Vec<&str> = c.params.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, vec!["i", "row", "j", "col", "result", "array", "k", "mat1", "a", "mat2"]);
        assert_eq!(c.param("result").unwrap().io(), Some(Io::InOut));
        assert_eq!(c.param("array").unwrap().io(), Some(Io::InOut));
        assert_eq!(c.param("mat1").unwrap().io(), Some(Io::In));
        assert_eq!(c.param("array").unwrap().size_text().as_deref(), Some("(row * col)"));
        assert_eq!(c.label, "_instr_for_ol_3_main");
        assert_eq!(c.gridify, vec![GridDim::Var("i".into()), GridDim::Var("j".into())]);
        assert!(diags.is_empty(), "{diags:?}");
        let text = print_unit(&u);
        assert!(text.contains("_instr_for_ol_3_main(i, row, j, col, result, array, k, mat1, a, mat2);"), "{text}");
    }

    #[test]
    fn reduction_becomes_pointer_with_prologue() {
        let src = "\
double t[8][8], o[8][8];
int main() {
    int i, j; double s = 0;
#pragma omp parallel for reduction(+:s) check
    for (i = 1; i < 7; i++) { for (j = 1; j < 7; j++) { double d = o[i][j] - t[i][j]; s += d * d; t[i][j] = o[i][j]; } }
    return 0;
}
";
        let (_, c, _) = outline_first(src);
        let names: Vec<&str> = c.params.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, vec!["i", "j", "o", "t", "s_reduced"]);
        assert_eq!(c.gridify, vec![GridDim::One, GridDim::Var("j".into())]);
        let body = print_stmt(&c.body, 0);
        assert!(body.starts_with("{\n    double s = *s_reduced;\n    #pragma hmppcg gridify(1, j), reduce(+:s)\n"), "{body}");
        assert!(body.ends_with("    *s_reduced = s;\n}\n"), "{body}");
        assert_eq!(c.callsite_args()[4], Expr::unary(UnOp::Addr, Expr::ident("s")));
    }

    #[test]
    fn unused_reduction_variable_still_round_trips() {
        let src = "int main() { int i; double s = 1; double a[4];\n#pragma omp parallel for reduction(+:s)\nfor (i = 0; i < 4; i++) a[i] = i; return 0; }";
        let (_, c, _) = outline_first(src);
        assert!(c.params.iter().any(|p| p.name == "s_reduced"));
    }

    #[test]
    fn single_scalar_read_only() {
        let src = "int main() { int i; int x = 3; double a[4];\n#pragma omp parallel for\nfor (i = 0; i < 4; i++) a[i] = x; return 0; }";
        let (_, c, _) = outline_first(src);
        let x = c.param("x").unwrap();
        assert_eq!(x.kind, ParamKind::Scalar);
        assert_eq!(c.param("a").unwrap().io(), Some(Io::Out));
        assert_eq!(c.gridify, vec![GridDim::Var("i".into())]);
    }

    #[test]
    fn live_scalar_written_in_kernel_warns() {
        let src = "int main() { int i; int last = 0; double a[4];\n#pragma omp parallel for\nfor (i = 0; i < 4; i++) { a[i] = i; last = i; } return last; }";
        let (_, _, d) = outline_first(src);
        assert!(d.iter().any(|d| d.message.contains("`last`")), "{d:?}");
        assert!(!d.iter().any(|d| d.message.contains("`i`")), "{d:?}");
    }

    #[test]
    fn pointer_without_extent_is_an_error() {
        let src = "void k(double *p, int n) { int i;\n#pragma omp parallel for\nfor (i = 0; i < n; i++) p[i] = 0; }";
        let mut u = parse_translation_unit(src).unwrap();
        let t = SymbolTable::build(&u).unwrap();
        let fx = Effects::build(&u, &t);
        let b = find_omp_blocks(&u);
        assert!(matches!(outline_block(&mut u, &t, &fx, &b[0]), Err(Error::Transform { .. })));
    }

    #[test]
    fn scope_check_reports_outside_names_and_host_calls() {
        let src = "int main() { int i; double a[4];\n#pragma omp parallel for\nfor (i = 0; i < 4; i++) a[i] = sqrt(i); return 0; }";
        let (_, mut c, d) = outline_first(src);
        assert!(d.is_empty());
        let StmtKind::Block(v) = &mut c.body.kind else { panic!() };
        v.push(Stmt::new(StmtId(900), StmtKind::Expr(Expr::call("displayRegion", vec![Expr::ident("gTable")]))));
        let d = check_global_scope(&c);
        assert_eq!(d.len(), 2, "{d:?}");
        assert!(d[0].message.contains("gTable") || d[1].message.contains("gTable"));
    }
}
