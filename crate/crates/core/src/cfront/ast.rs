//! Abstract syntax for the supported C subset.
//!
//! Every statement carries a [`StmtId`] that stays stable across rewrites, so
//! analyses can anchor facts (insertion points, kernel identities) on it.

use std::fmt;

use super::pragma::Pragma;
use crate::error::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StmtId(pub u32);

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseType {
    Void,
    Char,
    Int,
    Float,
    Double,
}

impl BaseType {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseType::Void => "void",
            BaseType::Char => "char",
            BaseType::Int => "int",
            BaseType::Float => "float",
            BaseType::Double => "double",
        }
    }

    /// Size in bytes of one element.
    pub fn size(self) -> u64 {
        match self {
            BaseType::Void | BaseType::Char => 1,
            BaseType::Int | BaseType::Float => 4,
            BaseType::Double => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeSpec {
    pub is_const: bool,
    pub base: BaseType,
}

impl TypeSpec {
    pub fn new(base: BaseType) -> Self {
        TypeSpec { is_const: false, base }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declarator {
    pub name: String,
    pub pointers: u8,
    /// C++-style reference parameter (`int &a`).
    pub reference: bool,
    /// Array dimensions; `None` for an unsized `[]`.
    pub dims: Vec<Option<Expr>>,
    pub init: Option<Expr>,
    pub pos: Pos,
}

impl Declarator {
    pub fn scalar(name: impl Into<String>) -> Self {
        Declarator { name: name.into(), pointers: 0, reference: false, dims: Vec::new(), init: None, pos: Pos::default() }
    }

    pub fn with_init(mut self, init: Expr) -> Self {
        self.init = Some(init);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decl {
    pub ty: TypeSpec,
    pub declarators: Vec<Declarator>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: TypeSpec,
    pub decl: Declarator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub ret: TypeSpec,
    pub ret_pointers: u8,
    pub name: String,
    pub params: Vec<Param>,
    /// Written as `f(void)`.
    pub void_params: bool,
    /// `None` for a prototype.
    pub body: Option<Stmt>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItemKind {
    Include(String),
    Global(Decl),
    Function(FunctionDef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub pragmas: Vec<Pragma>,
    pub kind: ItemKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceUnit {
    pub items: Vec<Item>,
    /// Next free statement id.
    pub next_id: u32,
    /// Original text, when parsed from source.
    pub origin: Option<String>,
}

impl SourceUnit {
    pub fn fresh_id(&mut self) -> StmtId {
        let id = StmtId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionDef> {
        self.items.iter().filter_map(|i| match &i.kind {
            ItemKind::Function(f) => Some(f),
            _ => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions().find(|f| f.name == name && f.body.is_some())
            .or_else(|| self.functions().find(|f| f.name == name))
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut FunctionDef> {
        self.items.iter_mut().find_map(|i| match &mut i.kind {
            ItemKind::Function(f) if f.name == name && f.body.is_some() => Some(f),
            _ => None,
        })
    }

    pub fn globals(&self) -> impl Iterator<Item = &Decl> {
        self.items.iter().filter_map(|i| match &i.kind {
            ItemKind::Global(d) => Some(d),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: StmtId,
    pub pos: Pos,
    pub pragmas: Vec<Pragma>,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForInit {
    Decl(Decl),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl(Decl),
    Expr(Expr),
    Block(Vec<Stmt>),
    If { cond: Expr, then: Box<Stmt>, els: Option<Box<Stmt>> },
    For { init: Option<ForInit>, cond: Option<Expr>, step: Option<Expr>, body: Box<Stmt> },
    While { cond: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr },
    Return(Option<Expr>),
    Break,
    Continue,
    Empty,
    /// A standalone HMPP directive (group, mapbyname, advancedload, ...).
    Directive(super::pragma::HmppDirective),
}

impl Stmt {
    pub fn new(id: StmtId, kind: StmtKind) -> Self {
        Stmt { id, pos: Pos::default(), pragmas: Vec::new(), kind }
    }

    pub fn is_loop(&self) -> bool {
        matches!(self.kind, StmtKind::For { .. } | StmtKind::While { .. } | StmtKind::DoWhile { .. })
    }

    /// Direct child statements, in order.
    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::Block(v) => v.iter().collect(),
            StmtKind::If { then, els, .. } => {
                let mut v = vec![then.as_ref()];
                if let Some(e) = els {
                    v.push(e.as_ref());
                }
                v
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => {
                vec![body.as_ref()]
            }
            _ => Vec::new(),
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Stmt> {
        match &mut self.kind {
            StmtKind::Block(v) => v.iter_mut().collect(),
            StmtKind::If { then, els, .. } => {
                let mut v = vec![then.as_mut()];
                if let Some(e) = els {
                    v.push(e.as_mut());
                }
                v
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => {
                vec![body.as_mut()]
            }
            _ => Vec::new(),
        }
    }

    /// Pre-order search for a statement by id.
    pub fn find(&self, id: StmtId) -> Option<&Stmt> {
        if self.id == id {
            return Some(self);
        }
        self.children().into_iter().find_map(|c| c.find(id))
    }

    pub fn find_mut(&mut self, id: StmtId) -> Option<&mut Stmt> {
        if self.id == id {
            return Some(self);
        }
        self.children_mut().into_iter().find_map(|c| c.find_mut(id))
    }

    /// Visits this statement and all nested statements in pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Stmt)) {
        f(self);
        for c in self.children_mut() {
            c.walk_mut(f);
        }
    }

    /// Expressions owned directly by this statement (not by children).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        let mut v = Vec::new();
        match &self.kind {
            StmtKind::Decl(d) => decl_exprs(d, &mut v),
            StmtKind::Expr(e) => v.push(e),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => v.push(cond),
            StmtKind::For { init, cond, step, .. } => {
                match init {
                    Some(ForInit::Decl(d)) => decl_exprs(d, &mut v),
                    Some(ForInit::Expr(e)) => v.push(e),
                    None => {}
                }
                v.extend(cond.iter());
                v.extend(step.iter());
            }
            StmtKind::Return(Some(e)) => v.push(e),
            _ => {}
        }
        v
    }

    pub fn own_exprs_mut(&mut self) -> Vec<&mut Expr> {
        let mut v = Vec::new();
        match &mut self.kind {
            StmtKind::Decl(d) => decl_exprs_mut(d, &mut v),
            StmtKind::Expr(e) => v.push(e),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => v.push(cond),
            StmtKind::For { init, cond, step, .. } => {
                match init {
                    Some(ForInit::Decl(d)) => decl_exprs_mut(d, &mut v),
                    Some(ForInit::Expr(e)) => v.push(e),
                    None => {}
                }
                v.extend(cond.iter_mut());
                v.extend(step.iter_mut());
            }
            StmtKind::Return(Some(e)) => v.push(e),
            _ => {}
        }
        v
    }
}

fn decl_exprs<'a>(d: &'a Decl, v: &mut Vec<&'a Expr>) {
    for dc in &d.declarators {
        v.extend(dc.dims.iter().flatten());
        v.extend(dc.init.iter());
    }
}

fn decl_exprs_mut<'a>(d: &'a mut Decl, v: &mut Vec<&'a mut Expr>) {
    for dc in &mut d.declarators {
        v.extend(dc.dims.iter_mut().flatten());
        v.extend(dc.init.iter_mut());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Mul,
    Div,
    Rem,
    Add,
    Sub,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitXor,
    BitOr,
    And,
    Or,
}

impl BinOp {
    pub fn as_str(self) -> &'static str {
        use BinOp::*;
        match self {
            Mul => "*",
            Div => "/",
            Rem => "%",
            Add => "+",
            Sub => "-",
            Shl => "<<",
            Shr => ">>",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            BitAnd => "&",
            BitXor => "^",
            BitOr => "|",
            And => "&&",
            Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        use BinOp::*;
        match self {
            Mul | Div | Rem => 10,
            Add | Sub => 9,
            Shl | Shr => 8,
            Lt | Gt | Le | Ge => 7,
            Eq | Ne => 6,
            BitAnd => 5,
            BitXor => 4,
            BitOr => 3,
            And => 2,
            Or => 1,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Mul | BinOp::Div | BinOp::Rem | BinOp::Add | BinOp::Sub)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Plus,
    Not,
    BitNot,
    Deref,
    Addr,
    PreInc,
    PreDec,
}

impl UnOp {
    pub fn as_str(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Plus => "+",
            UnOp::Not => "!",
            UnOp::BitNot => "~",
            UnOp::Deref => "*",
            UnOp::Addr => "&",
            UnOp::PreInc => "++",
            UnOp::PreDec => "--",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl AssignOp {
    pub fn as_str(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Rem => "%=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Ident(String),
    Int(String),
    Float(String),
    Str(String),
    Char(String),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnOp, expr: Box<Expr> },
    PostInc(Box<Expr>),
    PostDec(Box<Expr>),
    Assign { op: AssignOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Index { base: Box<Expr>, index: Box<Expr> },
    Call { callee: String, args: Vec<Expr> },
    Paren(Box<Expr>),
    Cast { ty: TypeSpec, pointers: u8, expr: Box<Expr> },
    Cond { cond: Box<Expr>, then: Box<Expr>, els: Box<Expr> },
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Expr {
        Expr::Ident(name.into())
    }

    pub fn int(v: i64) -> Expr {
        Expr::Int(v.to_string())
    }

    pub fn assign(lhs: Expr, rhs: Expr) -> Expr {
        Expr::Assign { op: AssignOp::Assign, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn unary(op: UnOp, e: Expr) -> Expr {
        Expr::Unary { op, expr: Box::new(e) }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn call(callee: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Call { callee: callee.into(), args }
    }

    /// Direct sub-expressions in left-to-right source order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Binary { lhs, rhs, .. } | Expr::Assign { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Index { base, index } => vec![base, index],
            Expr::Unary { expr, .. } | Expr::PostInc(expr) | Expr::PostDec(expr) | Expr::Paren(expr) | Expr::Cast { expr, .. } => {
                vec![expr]
            }
            Expr::Call { args, .. } => args.iter().collect(),
            Expr::Cond { cond, then, els } => vec![cond, then, els],
            _ => Vec::new(),
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Binary { lhs, rhs, .. } | Expr::Assign { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Index { base, index } => vec![base, index],
            Expr::Unary { expr, .. } | Expr::PostInc(expr) | Expr::PostDec(expr) | Expr::Paren(expr) | Expr::Cast { expr, .. } => {
                vec![expr]
            }
            Expr::Call { args, .. } => args.iter_mut().collect(),
            Expr::Cond { cond, then, els } => vec![cond, then, els],
            _ => Vec::new(),
        }
    }

    /// Base identifier of an lvalue-ish expression (`a[i][j]` → `a`, `*p` → `p`).
    pub fn base_ident(&self) -> Option<&str> {
        match self {
            Expr::Ident(n) => Some(n),
            Expr::Index { base, .. } => base.base_ident(),
            Expr::Paren(e) => e.base_ident(),
            Expr::Unary { op: UnOp::Deref, expr } => expr.base_ident(),
            _ => None,
        }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Names of every function called within, in evaluation order.
    pub fn calls(&self) -> Vec<&str> {
        let mut v = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Call { callee, .. } = e {
                v.push(callee.as_str());
            }
        });
        v
    }
}
