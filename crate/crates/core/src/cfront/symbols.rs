//! Name resolution. Every identifier occurrence is resolved against C block
//! scoping and recorded per statement, so later passes can ask "which
//! declaration does `x` in statement s17 mean".

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::*;
use super::pragma::{OmpClause, Pragma};
use crate::error::{Error, Pos, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Storage {
    Global,
    Parameter,
    Local,
}

/// Identity of a declaration: where it was declared.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymKey {
    Global(String),
    Param(String, usize),
    /// Declaring statement and declarator index.
    Local(StmtId, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Scalar,
    /// Pointer-shaped array (`int *a`), extent unknown statically.
    Pointer,
    /// 1-D array.
    Array(Option<Expr>),
    /// 2-D array.
    Matrix(Option<Expr>, Option<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    pub key: SymKey,
    pub name: String,
    pub ty: TypeSpec,
    pub pointers: u8,
    pub reference: bool,
    pub dims: Vec<Option<Expr>>,
    pub storage: Storage,
    pub pos: Pos,
}

impl Symbol {
    fn from_declarator(key: SymKey, ty: &TypeSpec, d: &Declarator, storage: Storage) -> Self {
        Symbol {
            key,
            name: d.name.clone(),
            ty: ty.clone(),
            pointers: d.pointers,
            reference: d.reference,
            dims: d.dims.clone(),
            storage,
            pos: d.pos,
        }
    }

    pub fn shape(&self) -> Shape {
        match (self.dims.len(), self.pointers) {
            (0, 0) => Shape::Scalar,
            (0, _) => Shape::Pointer,
            (1, _) => Shape::Array(self.dims[0].clone()),
            _ => Shape::Matrix(self.dims[0].clone(), self.dims[1].clone()),
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.dims.is_empty() && self.pointers == 0
    }

    /// Arrays, matrices and pointers: anything transferred as a whole object.
    pub fn is_aggregate(&self) -> bool {
        !self.is_scalar()
    }

    pub fn elem_size(&self) -> u64 {
        self.ty.base.size()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    symbols: BTreeMap<SymKey, Symbol>,
    uses: HashMap<(StmtId, String), SymKey>,
    functions: BTreeSet<String>,
    /// Function owning each statement.
    owner: HashMap<StmtId, String>,
}

impl SymbolTable {
    /// Resolves every identifier in the unit. Fails on the first use of an
    /// undeclared variable; calls to undeclared functions are allowed and
    /// treated as external.
    pub fn build(unit: &SourceUnit) -> Result<SymbolTable> {
        let mut t = SymbolTable::default();
        for f in unit.functions() {
            t.functions.insert(f.name.clone());
        }
        let mut scopes: Vec<HashMap<String, SymKey>> = vec![HashMap::new()];
        for item in &unit.items {
            match &item.kind {
                ItemKind::Include(_) => {}
                ItemKind::Global(d) => {
                    for dc in &d.declarators {
                        let key = SymKey::Global(dc.name.clone());
                        for e in dc.dims.iter().flatten().chain(dc.init.iter()) {
                            t.check_expr_global(e, &scopes[0])?;
                        }
                        t.symbols.insert(key.clone(), Symbol::from_declarator(key.clone(), &d.ty, dc, Storage::Global));
                        scopes[0].insert(dc.name.clone(), key);
                    }
                }
                ItemKind::Function(f) => {
                    let Some(body) = &f.body else { continue };
                    let mut fs = HashMap::new();
                    // Parameter dims may name earlier parameters (`int a[n][n]`).
                    for (k, p) in f.params.iter().enumerate() {
                        let key = SymKey::Param(f.name.clone(), k);
                        for e in p.decl.dims.iter().flatten() {
                            let mut sc = scopes.clone();
                            sc.push(fs.clone());
                            t.check_expr_scoped(e, &sc)?;
                        }
                        t.symbols.insert(key.clone(), Symbol::from_declarator(key.clone(), &p.ty, &p.decl, Storage::Parameter));
                        fs.insert(p.decl.name.clone(), key);
                    }
                    scopes.push(fs);
                    t.stmt(body, &f.name, &mut scopes)?;
                    scopes.pop();
                }
            }
        }
        Ok(t)
    }

    fn check_expr_global(&self, e: &Expr, scope: &HashMap<String, SymKey>) -> Result<()> {
        self.check_expr_scoped(e, std::slice::from_ref(scope))
    }

    fn check_expr_scoped(&self, e: &Expr, scopes: &[HashMap<String, SymKey>]) -> Result<()> {
        let mut err = None;
        e.walk(&mut |x| {
            if let Expr::Ident(n) = x {
                if lookup(scopes, n).is_none() && err.is_none() {
                    err = Some(Error::Undeclared { pos: Pos::default(), name: n.clone() });
                }
            }
        });
        err.map_or(Ok(()), Err)
    }

    fn record_expr(&mut self, e: &Expr, id: StmtId, pos: Pos, scopes: &[HashMap<String, SymKey>]) -> Result<()> {
        let mut names = Vec::new();
        e.walk(&mut |x| match x {
            Expr::Ident(n) => names.push((n.clone(), false)),
            Expr::Call { callee, .. } => names.push((callee.clone(), true)),
            _ => {}
        });
        for (n, is_call) in names {
            match lookup(scopes, &n) {
                Some(k) if is_call => {
                    let _ = k;
                    return Err(Error::Unsupported { pos, construct: format!("call through variable `{n}`") });
                }
                Some(k) => {
                    self.uses.insert((id, n), k.clone());
                }
                None if is_call => {}
                None => return Err(Error::Undeclared { pos, name: n }),
            }
        }
        Ok(())
    }

    fn declare(&mut self, d: &Decl, id: StmtId, pos: Pos, scopes: &mut [HashMap<String, SymKey>]) -> Result<()> {
        for (k, dc) in d.declarators.iter().enumerate() {
            for e in dc.dims.iter().flatten().chain(dc.init.iter()) {
                self.record_expr(e, id, pos, scopes)?;
            }
            let key = SymKey::Local(id, k);
            self.symbols.insert(key.clone(), Symbol::from_declarator(key.clone(), &d.ty, dc, Storage::Local));
            scopes.last_mut().unwrap().insert(dc.name.clone(), key.clone());
            self.uses.insert((id, dc.name.clone()), key);
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt, func: &str, scopes: &mut Vec<HashMap<String, SymKey>>) -> Result<()> {
        self.owner.insert(s.id, func.to_string());
        for p in &s.pragmas {
            if let Pragma::Omp(o) = p {
                for c in &o.clauses {
                    let names: Vec<&String> = match c {
                        OmpClause::Shared(v) | OmpClause::Private(v) | OmpClause::FirstPrivate(v) | OmpClause::LastPrivate(v) => {
                            v.iter().collect()
                        }
                        OmpClause::Reduction(_, v) => vec![v],
                        _ => Vec::new(),
                    };
                    for n in names {
                        match lookup(scopes, n) {
                            Some(k) => {
                                self.uses.insert((s.id, n.clone()), k.clone());
                            }
                            None => return Err(Error::Undeclared { pos: o.pos, name: n.clone() }),
                        }
                    }
                }
            }
        }
        match &s.kind {
            StmtKind::Decl(d) => self.declare(d, s.id, s.pos, scopes)?,
            StmtKind::Block(v) => {
                scopes.push(HashMap::new());
                for c in v {
                    self.stmt(c, func, scopes)?;
                }
                scopes.pop();
            }
            StmtKind::For { init, cond, step, body } => {
                scopes.push(HashMap::new());
                match init {
                    Some(ForInit::Decl(d)) => self.declare(d, s.id, s.pos, scopes)?,
                    Some(ForInit::Expr(e)) => self.record_expr(e, s.id, s.pos, scopes)?,
                    None => {}
                }
                for e in cond.iter().chain(step.iter()) {
                    self.record_expr(e, s.id, s.pos, scopes)?;
                }
                self.stmt(body, func, scopes)?;
                scopes.pop();
            }
            _ => {
                for e in s.own_exprs() {
                    self.record_expr(e, s.id, s.pos, scopes)?;
                }
                for c in s.children() {
                    self.stmt(c, func, scopes)?;
                }
            }
        }
        Ok(())
    }

    /// The declaration `name` refers to inside statement `at`.
    pub fn resolve(&self, at: StmtId, name: &str) -> Option<&Symbol> {
        self.uses.get(&(at, name.to_string())).and_then(|k| self.symbols.get(k))
    }

    pub fn get(&self, key: &SymKey) -> Option<&Symbol> {
        self.symbols.get(key)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.values()
    }

    pub fn is_defined_function(&self, name: &str) -> bool {
        self.functions.contains(name)
    }

    pub fn owner(&self, at: StmtId) -> Option<&str> {
        self.owner.get(&at).map(String::as_str)
    }

    /// Every (name, symbol) used directly in statement `at` (own expressions
    /// and pragma clauses), sorted by name.
    pub fn uses_in(&self, at: StmtId) -> Vec<(&str, &Symbol)> {
        let mut v: Vec<(&str, &Symbol)> = self
            .uses
            .iter()
            .filter(|((id, _), _)| *id == at)
            .filter_map(|((_, n), k)| self.symbols.get(k).map(|s| (n.as_str(), s)))
            .collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }
}

fn lookup<'a>(scopes: &'a [HashMap<String, SymKey>], name: &str) -> Option<&'a SymKey> {
    scopes.iter().rev().find_map(|s| s.get(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::parser::parse_tokens;

    #[test]
    fn shadowing_resolves_to_innermost() {
        let src = "int x; int main(){ int y = x; { double x = 1; y = x; } return x; }";
        let u = parse_tokens(src).unwrap();
        let t = SymbolTable::build(&u).unwrap();
        let body = u.function("main").unwrap().body.as_ref().unwrap();
        let StmtKind::Block(v) = &body.kind else { panic!() };
        assert_eq!(t.resolve(v[0].id, "x").unwrap().storage, Storage::Global);
        let StmtKind::Block(inner) = &v[1].kind else { panic!() };
        let sym = t.resolve(inner[1].id, "x").unwrap();
        assert_eq!(sym.storage, Storage::Local);
        assert_eq!(sym.ty.base, BaseType::Double);
        assert_eq!(t.resolve(v[2].id, "x").unwrap().storage, Storage::Global);
    }

    #[test]
    fn undeclared_variable_is_an_error() {
        let u = parse_tokens("int main(){ return q; }").unwrap();
        assert!(matches!(SymbolTable::build(&u), Err(Error::Undeclared { name, .. }) if name == "q"));
    }

    #[test]
    fn external_calls_are_allowed_and_shapes_classified() {
        let u = parse_tokens("void k(int n, double m[n][n], int *p, int s) { printf(\"%d\", n); }").unwrap();
        let t = SymbolTable::build(&u).unwrap();
        let shapes: Vec<Shape> = (0..4).map(|k| t.get(&SymKey::Param("k".into(), k)).unwrap().shape()).collect();
        assert_eq!(shapes[0], Shape::Scalar);
        assert!(matches!(shapes[1], Shape::Matrix(Some(_), Some(_))));
        assert_eq!(shapes[2], Shape::Pointer);
        assert!(!t.is_defined_function("printf"));
    }

    #[test]
    fn for_init_declaration_scopes_to_loop() {
        let u = parse_tokens("int main(){ for (int l = 0; l < 3; l++) { } return l; }").unwrap();
        assert!(matches!(SymbolTable::build(&u), Err(Error::Undeclared { .. })));
    }
}
