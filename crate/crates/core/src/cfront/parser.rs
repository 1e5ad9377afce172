use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::pragma::Pragma;
use crate::error::{Error, Pos, Result};

const TYPE_WORDS: &[&str] = &["void", "char", "int", "float", "double", "const"];

const UNSUPPORTED_WORDS: &[(&str, &str)] = &[
    ("goto", "goto statement"),
    ("switch", "switch statement"),
    ("case", "case label"),
    ("default", "default label"),
    ("struct", "struct type"),
    ("union", "union type"),
    ("enum", "enum type"),
    ("typedef", "typedef"),
    ("sizeof", "sizeof operator"),
    ("static", "static storage class"),
    ("extern", "extern storage class"),
    ("register", "register storage class"),
    ("volatile", "volatile qualifier"),
    ("inline", "inline specifier"),
    ("unsigned", "unsigned type"),
    ("signed", "signed type"),
    ("long", "long type"),
    ("short", "short type"),
];

/// Syntax-only parse; name resolution happens in [`super::symbols`].
pub fn parse_tokens(src: &str) -> Result<SourceUnit> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, i: 0, next_id: 0 };
    let items = p.unit()?;
    Ok(SourceUnit { items, next_id: p.next_id, origin: Some(src.to_string()) })
}

/// Parses a standalone expression such as a size clause.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, i: 0, next_id: 0 };
    let e = p.expr()?;
    if p.i < p.toks.len() {
        return Err(p.syntax(format!("trailing input after expression: {}", p.describe())));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    next_id: u32,
}

fn unsupported_word(w: &str) -> Option<&'static str> {
    UNSUPPORTED_WORDS.iter().find(|(k, _)| *k == w).map(|(_, c)| *c)
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.i + k).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        match self.toks.get(self.i) {
            Some(t) => t.pos,
            None => self.toks.last().map(|t| t.pos).unwrap_or(Pos::new(1, 1)),
        }
    }

    fn id(&mut self) -> StmtId {
        let id = StmtId(self.next_id);
        self.next_id += 1;
        id
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected `{p}`, found {}", self.describe())))
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Ident(s)) | Some(Tok::Int(s)) | Some(Tok::Float(s)) | Some(Tok::Str(s)) | Some(Tok::Char(s)) => {
                format!("`{s}`")
            }
            Some(Tok::Punct(p)) => format!("`{p}`"),
            Some(Tok::Pragma(_)) => "`#pragma`".into(),
            Some(Tok::Include(_)) => "`#include`".into(),
        }
    }

    fn syntax(&self, msg: String) -> Error {
        Error::Syntax { pos: self.pos(), msg }
    }

    fn check_unsupported(&self) -> Result<()> {
        if let Some(Tok::Ident(w)) = self.peek() {
            if let Some(c) = unsupported_word(w) {
                return Err(Error::Unsupported { pos: self.pos(), construct: c.to_string() });
            }
        }
        Ok(())
    }

    fn ident(&mut self) -> Result<String> {
        self.check_unsupported()?;
        match self.peek() {
            Some(Tok::Ident(s)) if !TYPE_WORDS.contains(&s.as_str()) && !is_keyword(s) => {
                let s = s.clone();
                self.i += 1;
                Ok(s)
            }
            _ => Err(self.syntax(format!("expected identifier, found {}", self.describe()))),
        }
    }

    fn at_type(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if TYPE_WORDS.contains(&s.as_str()))
    }

    fn type_spec(&mut self) -> Result<TypeSpec> {
        let mut is_const = false;
        let mut base = None;
        loop {
            self.check_unsupported()?;
            let Some(Tok::Ident(w)) = self.peek() else { break };
            let b = match w.as_str() {
                "const" => {
                    is_const = true;
                    self.i += 1;
                    continue;
                }
                "void" => BaseType::Void,
                "char" => BaseType::Char,
                "int" => BaseType::Int,
                "float" => BaseType::Float,
                "double" => BaseType::Double,
                _ => break,
            };
            if base.is_some() {
                return Err(self.syntax("multiple base types in declaration".into()));
            }
            base = Some(b);
            self.i += 1;
        }
        match base {
            Some(base) => Ok(TypeSpec { is_const, base }),
            None => Err(self.syntax(format!("expected type, found {}", self.describe()))),
        }
    }

    /// Leading pragmas before a statement or item, with their positions.
    fn pragmas(&mut self) -> Result<Vec<(Pragma, Pos)>> {
        let mut v = Vec::new();
        while let Some(Tok::Pragma(t)) = self.peek() {
            let pos = self.pos();
            let t = t.clone();
            let p = Pragma::parse(&t, pos)?;
            if let Pragma::Hmpp(d) = &p {
                if d.kind.is_standalone() {
                    break;
                }
            }
            self.i += 1;
            v.push((p, pos));
        }
        Ok(v)
    }

    fn unit(&mut self) -> Result<Vec<Item>> {
        let mut items = Vec::new();
        loop {
            let pending = self.pragmas()?;
            let pos = self.pos();
            match self.peek() {
                None => {
                    if let Some((_, p)) = pending.first() {
                        return Err(Error::DanglingPragma { pos: *p });
                    }
                    break;
                }
                Some(Tok::Include(s)) => {
                    if let Some((_, p)) = pending.first() {
                        return Err(Error::DanglingPragma { pos: *p });
                    }
                    let s = s.clone();
                    self.i += 1;
                    items.push(Item { pragmas: Vec::new(), kind: ItemKind::Include(s), pos });
                }
                Some(Tok::Pragma(_)) => {
                    return Err(Error::Unsupported { pos, construct: "standalone HMPP directive at file scope".into() });
                }
                _ => {
                    let kind = self.external_decl()?;
                    items.push(Item { pragmas: pending.into_iter().map(|(p, _)| p).collect(), kind, pos });
                }
            }
        }
        Ok(items)
    }

    fn external_decl(&mut self) -> Result<ItemKind> {
        let ty = self.type_spec()?;
        let save = self.i;
        let mut ptrs = 0u8;
        while self.eat_punct("*") {
            ptrs += 1;
        }
        let name_pos = self.pos();
        let name = self.ident()?;
        if self.is_punct("(") {
            self.i += 1;
            let (params, void_params) = self.params()?;
            let body = if self.eat_punct(";") {
                None
            } else if self.is_punct("{") {
                Some(self.block()?)
            } else {
                return Err(self.syntax(format!("expected function body, found {}", self.describe())));
            };
            return Ok(ItemKind::Function(FunctionDef { ret: ty, ret_pointers: ptrs, name, params, void_params, body, pos: name_pos }));
        }
        self.i = save;
        Ok(ItemKind::Global(self.decl_rest(ty)?))
    }

    fn params(&mut self) -> Result<(Vec<Param>, bool)> {
        if self.eat_punct(")") {
            return Ok((Vec::new(), false));
        }
        if self.is_word("void") && matches!(self.peek_at(1), Some(Tok::Punct(")"))) {
            self.i += 2;
            return Ok((Vec::new(), true));
        }
        let mut v = Vec::new();
        loop {
            let ty = self.type_spec()?;
            let mut decl = self.declarator(true)?;
            if decl.init.is_some() {
                return Err(Error::Unsupported { pos: decl.pos, construct: "default parameter value".into() });
            }
            if decl.reference && (!decl.dims.is_empty() || decl.pointers > 0) {
                return Err(Error::Unsupported { pos: decl.pos, construct: "reference to pointer or array".into() });
            }
            decl.init = None;
            v.push(Param { ty, decl });
            if self.eat_punct(")") {
                break;
            }
            self.expect_punct(",")?;
        }
        Ok((v, false))
    }

    fn declarator(&mut self, param: bool) -> Result<Declarator> {
        let mut pointers = 0u8;
        while self.eat_punct("*") {
            pointers += 1;
        }
        let mut reference = false;
        if param && self.eat_punct("&") {
            reference = true;
        }
        let pos = self.pos();
        let name = self.ident()?;
        let mut dims = Vec::new();
        while self.eat_punct("[") {
            if self.eat_punct("]") {
                dims.push(None);
            } else {
                dims.push(Some(self.expr()?));
                self.expect_punct("]")?;
            }
        }
        if dims.len() > 2 {
            return Err(Error::Unsupported { pos, construct: "array with more than two dimensions".into() });
        }
        if pointers > 0 && !dims.is_empty() {
            return Err(Error::Unsupported { pos, construct: "array of pointers".into() });
        }
        let mut init = None;
        if self.eat_punct("=") {
            if self.is_punct("{") {
                return Err(Error::Unsupported { pos: self.pos(), construct: "brace initializer".into() });
            }
            init = Some(self.assign()?);
        }
        Ok(Declarator { name, pointers, reference, dims, init, pos })
    }

    /// Declarators after the type specifier, through the closing `;`.
    fn decl_rest(&mut self, ty: TypeSpec) -> Result<Decl> {
        let mut declarators = vec![self.declarator(false)?];
        while self.eat_punct(",") {
            declarators.push(self.declarator(false)?);
        }
        self.expect_punct(";")?;
        Ok(Decl { ty, declarators })
    }

    fn block(&mut self) -> Result<Stmt> {
        let pos = self.pos();
        self.expect_punct("{")?;
        let id = self.id();
        let mut v = Vec::new();
        loop {
            if self.eat_punct("}") {
                break;
            }
            if self.peek().is_none() {
                return Err(Error::Syntax { pos, msg: "unterminated block".into() });
            }
            v.push(self.stmt()?);
        }
        Ok(Stmt { id, pos, pragmas: Vec::new(), kind: StmtKind::Block(v) })
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let pending = self.pragmas()?;
        if let Some(Tok::Pragma(t)) = self.peek() {
            // Standalone HMPP directive.
            let pos = self.pos();
            if let Some((_, p)) = pending.first() {
                return Err(Error::DanglingPragma { pos: *p });
            }
            let Pragma::Hmpp(d) = Pragma::parse(&t.clone(), pos)? else { unreachable!() };
            self.i += 1;
            let id = self.id();
            return Ok(Stmt { id, pos, pragmas: Vec::new(), kind: StmtKind::Directive(d) });
        }
        if !pending.is_empty() && (self.is_punct("}") || self.peek().is_none()) {
            return Err(Error::DanglingPragma { pos: pending[0].1 });
        }
        let mut s = self.bare_stmt()?;
        s.pragmas = pending.into_iter().map(|(p, _)| p).collect();
        Ok(s)
    }

    fn bare_stmt(&mut self) -> Result<Stmt> {
        self.check_unsupported()?;
        let pos = self.pos();
        if self.is_punct("{") {
            return self.block();
        }
        if matches!(self.peek(), Some(Tok::Include(_))) {
            return Err(Error::Unsupported { pos, construct: "#include inside a function".into() });
        }
        let kind = if self.at_type() {
            let ty = self.type_spec()?;
            StmtKind::Decl(self.decl_rest(ty)?)
        } else if self.eat_word("if") {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then = Box::new(self.stmt()?);
            let els = if self.eat_word("else") { Some(Box::new(self.stmt()?)) } else { None };
            StmtKind::If { cond, then, els }
        } else if self.eat_word("for") {
            self.expect_punct("(")?;
            let init = if self.eat_punct(";") {
                None
            } else if self.at_type() {
                let ty = self.type_spec()?;
                Some(ForInit::Decl(self.decl_rest(ty)?))
            } else {
                let e = self.expr()?;
                self.expect_punct(";")?;
                Some(ForInit::Expr(e))
            };
            let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            let step = if self.is_punct(")") { None } else { Some(self.expr()?) };
            self.expect_punct(")")?;
            let body = Box::new(self.stmt()?);
            StmtKind::For { init, cond, step, body }
        } else if self.eat_word("while") {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            StmtKind::While { cond, body: Box::new(self.stmt()?) }
        } else if self.eat_word("do") {
            let body = Box::new(self.stmt()?);
            if !self.eat_word("while") {
                return Err(self.syntax("expected `while` after do-body".into()));
            }
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            StmtKind::DoWhile { body, cond }
        } else if self.eat_word("return") {
            let e = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            StmtKind::Return(e)
        } else if self.eat_word("break") {
            self.expect_punct(";")?;
            StmtKind::Break
        } else if self.eat_word("continue") {
            self.expect_punct(";")?;
            StmtKind::Continue
        } else if self.eat_punct(";") {
            StmtKind::Empty
        } else {
            if matches!(self.peek(), Some(Tok::Ident(_))) && matches!(self.peek_at(1), Some(Tok::Punct(":"))) {
                return Err(Error::Unsupported { pos, construct: "labeled statement".into() });
            }
            let e = self.expr()?;
            self.expect_punct(";")?;
            StmtKind::Expr(e)
        };
        let id = self.id();
        Ok(Stmt { id, pos, pragmas: Vec::new(), kind })
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let e = self.assign()?;
        // Argument and declarator lists call `assign` directly, so a comma
        // here can only be the comma operator.
        if self.is_punct(",") {
            return Err(Error::Unsupported { pos: self.pos(), construct: "comma operator".into() });
        }
        Ok(e)
    }

    fn assign(&mut self) -> Result<Expr> {
        let lhs = self.cond()?;
        let op = match self.peek() {
            Some(Tok::Punct("=")) => AssignOp::Assign,
            Some(Tok::Punct("+=")) => AssignOp::Add,
            Some(Tok::Punct("-=")) => AssignOp::Sub,
            Some(Tok::Punct("*=")) => AssignOp::Mul,
            Some(Tok::Punct("/=")) => AssignOp::Div,
            Some(Tok::Punct("%=")) => AssignOp::Rem,
            Some(Tok::Punct(p)) if matches!(*p, "<<=" | ">>=" | "&=" | "|=" | "^=") => {
                return Err(Error::Unsupported { pos: self.pos(), construct: format!("`{p}` assignment") });
            }
            _ => return Ok(lhs),
        };
        self.i += 1;
        let rhs = self.assign()?;
        Ok(Expr::Assign { op, lhs: Box::new(lhs), rhs: Box::new(rhs) })
    }

    fn cond(&mut self) -> Result<Expr> {
        let c = self.binary(1)?;
        if self.eat_punct("?") {
            let then = self.assign()?;
            self.expect_punct(":")?;
            let els = self.cond()?;
            return Ok(Expr::Cond { cond: Box::new(c), then: Box::new(then), els: Box::new(els) });
        }
        Ok(c)
    }

    fn binop(&self) -> Option<BinOp> {
        let Some(Tok::Punct(p)) = self.peek() else { return None };
        Some(match *p {
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "<<" => BinOp::Shl,
            ">>" => BinOp::Shr,
            "<" => BinOp::Lt,
            ">" => BinOp::Gt,
            "<=" => BinOp::Le,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "&" => BinOp::BitAnd,
            "^" => BinOp::BitXor,
            "|" => BinOp::BitOr,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min {
                break;
            }
            self.i += 1;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        self.check_unsupported()?;
        let op = match self.peek() {
            Some(Tok::Punct("-")) => Some(UnOp::Neg),
            Some(Tok::Punct("+")) => Some(UnOp::Plus),
            Some(Tok::Punct("!")) => Some(UnOp::Not),
            Some(Tok::Punct("~")) => Some(UnOp::BitNot),
            Some(Tok::Punct("*")) => Some(UnOp::Deref),
            Some(Tok::Punct("&")) => Some(UnOp::Addr),
            Some(Tok::Punct("++")) => Some(UnOp::PreInc),
            Some(Tok::Punct("--")) => Some(UnOp::PreDec),
            _ => None,
        };
        if let Some(op) = op {
            self.i += 1;
            let e = self.unary()?;
            return Ok(Expr::unary(op, e));
        }
        if self.is_punct("(") && matches!(self.peek_at(1), Some(Tok::Ident(w)) if TYPE_WORDS.contains(&w.as_str())) {
            self.i += 1;
            let ty = self.type_spec()?;
            let mut pointers = 0u8;
            while self.eat_punct("*") {
                pointers += 1;
            }
            self.expect_punct(")")?;
            let e = self.unary()?;
            return Ok(Expr::Cast { ty, pointers, expr: Box::new(e) });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.eat_punct("[") {
                let index = self.expr()?;
                self.expect_punct("]")?;
                e = Expr::Index { base: Box::new(e), index: Box::new(index) };
            } else if self.eat_punct("++") {
                e = Expr::PostInc(Box::new(e));
            } else if self.eat_punct("--") {
                e = Expr::PostDec(Box::new(e));
            } else if self.is_punct(".") || self.is_punct("->") {
                return Err(Error::Unsupported { pos: self.pos(), construct: "member access".into() });
            } else if self.is_punct("(") {
                return Err(Error::Unsupported { pos: self.pos(), construct: "call through expression".into() });
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        self.check_unsupported()?;
        let pos = self.pos();
        let Some(t) = self.peek().cloned() else {
            return Err(self.syntax("unexpected end of input in expression".into()));
        };
        self.i += 1;
        match t {
            Tok::Ident(name) if !is_keyword(&name) && !TYPE_WORDS.contains(&name.as_str()) => {
                if self.eat_punct("(") {
                    let mut args = Vec::new();
                    if !self.eat_punct(")") {
                        loop {
                            args.push(self.assign()?);
                            if self.eat_punct(")") {
                                break;
                            }
                            self.expect_punct(",")?;
                        }
                    }
                    Ok(Expr::Call { callee: name, args })
                } else {
                    Ok(Expr::Ident(name))
                }
            }
            Tok::Int(s) => Ok(Expr::Int(s)),
            Tok::Float(s) => Ok(Expr::Float(s)),
            Tok::Str(mut s) => {
                // Adjacent string literals concatenate.
                while let Some(Tok::Str(next)) = self.peek() {
                    s.pop();
                    s.push_str(&next[1..]);
                    self.i += 1;
                }
                Ok(Expr::Str(s))
            }
            Tok::Char(s) => Ok(Expr::Char(s)),
            Tok::Punct("(") => {
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(Expr::Paren(Box::new(e)))
            }
            _ => {
                self.i -= 1;
                Err(Error::Syntax { pos, msg: format!("unexpected {} in expression", self.describe()) })
            }
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "if" | "else" | "for" | "while" | "do" | "return" | "break" | "continue") || unsupported_word(s).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let u = parse_tokens("int main(){return 0;}").unwrap();
        assert_eq!(u.items.len(), 1);
        let f = u.function("main").unwrap();
        assert!(f.body.is_some());
    }

    #[test]
    fn goto_is_unsupported() {
        let e = parse_tokens("int main(){ goto l; l: return 0; }").unwrap_err();
        match e {
            Error::Unsupported { construct, .. } => assert!(construct.contains("goto")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pragma_at_block_end_is_dangling() {
        let e = parse_tokens("int main(){ int i;\n#pragma omp parallel for\n}").unwrap_err();
        assert_eq!(e, Error::DanglingPragma { pos: Pos::new(2, 1) });
    }

    #[test]
    fn pragma_attaches_to_next_statement() {
        let u = parse_tokens("int main(){ int i;\n#pragma omp parallel for check\nfor(i=0;i<4;i++){} return 0; }").unwrap();
        let body = u.function("main").unwrap().body.as_ref().unwrap();
        let StmtKind::Block(v) = &body.kind else { panic!() };
        assert_eq!(v[1].pragmas.len(), 1);
        assert!(v[1].is_loop());
    }

    #[test]
    fn standalone_hmpp_directive_is_a_statement() {
        let src = "int main(){ int a;\n#pragma hmpp <g> release\n}";
        let u = parse_tokens(src).unwrap();
        let StmtKind::Block(v) = &u.function("main").unwrap().body.as_ref().unwrap().kind else { panic!() };
        assert!(matches!(v[1].kind, StmtKind::Directive(_)));
    }

    #[test]
    fn precedence_and_assoc() {
        let mut p = Parser { toks: tokenize("a = b - c - d * e").unwrap(), i: 0, next_id: 0 };
        let e = p.expr().unwrap();
        let Expr::Assign { rhs, .. } = e else { panic!() };
        let Expr::Binary { op: BinOp::Sub, lhs, rhs: r } = *rhs else { panic!() };
        assert!(matches!(*lhs, Expr::Binary { op: BinOp::Sub, .. }));
        assert!(matches!(*r, Expr::Binary { op: BinOp::Mul, .. }));
    }

    #[test]
    fn reference_params_and_matrix_params() {
        let u = parse_tokens("void g(int &a, int b); void k(int n, double m[n][n]) { }").unwrap();
        let g = u.functions().next().unwrap();
        assert!(g.params[0].decl.reference);
        let k = u.function("k").unwrap();
        assert_eq!(k.params[1].decl.dims.len(), 2);
    }

    #[test]
    fn comma_operator_rejected() {
        assert!(matches!(parse_tokens("int main(){int a,b; a=1,b=2; return 0;}"), Err(Error::Unsupported { .. })));
    }
}
