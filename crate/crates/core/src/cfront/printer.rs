use super::ast::*;
use super::pragma::{render_pragma_lines, Pragma};

const INDENT: &str = "    ";

pub fn print_unit(unit: &SourceUnit) -> String {
    let mut out = String::new();
    let mut prev_fn = false;
    for (k, item) in unit.items.iter().enumerate() {
        let is_fn = matches!(&item.kind, ItemKind::Function(f) if f.body.is_some());
        if k > 0 && (is_fn || prev_fn) {
            out.push('\n');
        }
        prev_fn = is_fn;
        for p in &item.pragmas {
            push_pragma(&mut out, p, 0);
        }
        match &item.kind {
            ItemKind::Include(s) => {
                out.push_str("#include ");
                out.push_str(s);
                out.push('\n');
            }
            ItemKind::Global(d) => {
                out.push_str(&print_decl(d));
                out.push('\n');
            }
            ItemKind::Function(f) => print_function(&mut out, f),
        }
    }
    out
}

pub fn print_function(out: &mut String, f: &FunctionDef) {
    out.push_str(&function_header(f));
    match &f.body {
        None => out.push_str(";\n"),
        Some(body) => {
            out.push('\n');
            print_stmt_into(out, body, 0);
        }
    }
}

pub fn function_header(f: &FunctionDef) -> String {
    let params = if f.void_params {
        "void".to_string()
    } else {
        f.params.iter().map(print_param).collect::<Vec<_>>().join(", ")
    };
    format!("{} {}{}({params})", type_str(&f.ret), "*".repeat(f.ret_pointers as usize), f.name)
}

pub fn print_param(p: &Param) -> String {
    format!("{} {}", type_str(&p.ty), declarator_str(&p.decl))
}

fn type_str(t: &TypeSpec) -> String {
    if t.is_const {
        format!("const {}", t.base.as_str())
    } else {
        t.base.as_str().to_string()
    }
}

fn declarator_str(d: &Declarator) -> String {
    let mut s = "*".repeat(d.pointers as usize);
    if d.reference {
        s.push('&');
    }
    s.push_str(&d.name);
    for dim in &d.dims {
        match dim {
            Some(e) => s.push_str(&format!("[{}]", print_expr(e))),
            None => s.push_str("[]"),
        }
    }
    if let Some(init) = &d.init {
        s.push_str(" = ");
        s.push_str(&print_expr(init));
    }
    s
}

/// `int a = 1, b[4];`
pub fn print_decl(d: &Decl) -> String {
    format!("{};", decl_body(d))
}

fn decl_body(d: &Decl) -> String {
    let ds: Vec<String> = d.declarators.iter().map(declarator_str).collect();
    format!("{} {}", type_str(&d.ty), ds.join(", "))
}

pub fn print_stmt(s: &Stmt, indent: usize) -> String {
    let mut out = String::new();
    print_stmt_into(&mut out, s, indent);
    out
}

fn push_pragma(out: &mut String, p: &Pragma, indent: usize) {
    for line in render_pragma_lines(p) {
        out.push_str(&INDENT.repeat(indent));
        out.push_str(&line);
        out.push('\n');
    }
}

fn print_stmt_into(out: &mut String, s: &Stmt, indent: usize) {
    for p in &s.pragmas {
        push_pragma(out, p, indent);
    }
    let pad = INDENT.repeat(indent);
    match &s.kind {
        StmtKind::Block(v) => {
            out.push_str(&pad);
            out.push_str("{\n");
            for c in v {
                print_stmt_into(out, c, indent + 1);
            }
            out.push_str(&pad);
            out.push_str("}\n");
        }
        StmtKind::Directive(d) => push_pragma(out, &Pragma::Hmpp(d.clone()), indent),
        _ => {
            out.push_str(&pad);
            print_head(out, s, indent);
        }
    }
}

/// Prints a non-block statement whose first line is already indented.
fn print_head(out: &mut String, s: &Stmt, indent: usize) {
    match &s.kind {
        StmtKind::Decl(d) => {
            out.push_str(&print_decl(d));
            out.push('\n');
        }
        StmtKind::Expr(e) => {
            out.push_str(&print_expr(e));
            out.push_str(";\n");
        }
        StmtKind::Return(e) => {
            match e {
                Some(e) => out.push_str(&format!("return {};\n", print_expr(e))),
                None => out.push_str("return;\n"),
            }
        }
        StmtKind::Break => out.push_str("break;\n"),
        StmtKind::Continue => out.push_str("continue;\n"),
        StmtKind::Empty => out.push_str(";\n"),
        StmtKind::If { cond, then, els } => {
            out.push_str(&format!("if ({})", print_expr(cond)));
            let closed = print_body(out, then, indent);
            if let Some(e) = els {
                if closed {
                    out.truncate(out.len() - 1);
                    out.push_str(" else");
                } else {
                    out.push_str(&INDENT.repeat(indent));
                    out.push_str("else");
                }
                if matches!(e.kind, StmtKind::If { .. }) && e.pragmas.is_empty() {
                    out.push(' ');
                    print_head(out, e, indent);
                } else {
                    print_body(out, e, indent);
                }
            }
        }
        StmtKind::For { init, cond, step, body } => {
            let init = match init {
                Some(ForInit::Decl(d)) => decl_body(d),
                Some(ForInit::Expr(e)) => print_expr(e),
                None => String::new(),
            };
            let cond = cond.as_ref().map(|c| format!(" {}", print_expr(c))).unwrap_or_default();
            let step = step.as_ref().map(|c| format!(" {}", print_expr(c))).unwrap_or_default();
            out.push_str(&format!("for ({init};{cond};{step})"));
            print_body(out, body, indent);
        }
        StmtKind::While { cond, body } => {
            out.push_str(&format!("while ({})", print_expr(cond)));
            print_body(out, body, indent);
        }
        StmtKind::DoWhile { body, cond } => {
            out.push_str("do");
            let closed = print_body(out, body, indent);
            if closed {
                out.truncate(out.len() - 1);
                out.push(' ');
            } else {
                out.push_str(&INDENT.repeat(indent));
            }
            out.push_str(&format!("while ({});\n", print_expr(cond)));
        }
        StmtKind::Block(_) | StmtKind::Directive(_) => print_stmt_into(out, s, indent),
    }
}

/// Prints a loop/if body. Returns true when it ended with a closing brace
/// on its own line (so `else`/`while` can follow it).
fn print_body(out: &mut String, body: &Stmt, indent: usize) -> bool {
    if let (StmtKind::Block(v), true) = (&body.kind, body.pragmas.is_empty()) {
        out.push_str(" {\n");
        for c in v {
            print_stmt_into(out, c, indent + 1);
        }
        out.push_str(&INDENT.repeat(indent));
        out.push_str("}\n");
        true
    } else {
        out.push('\n');
        print_stmt_into(out, body, indent + 1);
        false
    }
}

const PREC_ASSIGN: u8 = 1;
const PREC_COND: u8 = 2;
const PREC_UNARY: u8 = 15;
const PREC_POSTFIX: u8 = 16;
const PREC_PRIMARY: u8 = 17;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Assign { .. } => PREC_ASSIGN,
        Expr::Cond { .. } => PREC_COND,
        Expr::Binary { op, .. } => 3 + op.precedence(),
        Expr::Unary { .. } | Expr::Cast { .. } => PREC_UNARY,
        Expr::PostInc(_) | Expr::PostDec(_) | Expr::Index { .. } | Expr::Call { .. } => PREC_POSTFIX,
        _ => PREC_PRIMARY,
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_child(out: &mut String, e: &Expr, min: u8) {
    if prec(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Ident(s) | Expr::Int(s) | Expr::Float(s) | Expr::Str(s) | Expr::Char(s) => out.push_str(s),
        Expr::Binary { op, lhs, rhs } => {
            let p = 3 + op.precedence();
            write_child(out, lhs, p);
            out.push(' ');
            out.push_str(op.as_str());
            out.push(' ');
            write_child(out, rhs, p + 1);
        }
        Expr::Unary { op, expr } => {
            out.push_str(op.as_str());
            let mut inner = String::new();
            write_child(&mut inner, expr, PREC_UNARY);
            // Keep `- -x` and `& &x` from fusing into other tokens.
            let last = op.as_str().chars().last();
            if inner.starts_with(|c| Some(c) == last) {
                out.push(' ');
            }
            out.push_str(&inner);
        }
        Expr::PostInc(x) => {
            write_child(out, x, PREC_POSTFIX);
            out.push_str("++");
        }
        Expr::PostDec(x) => {
            write_child(out, x, PREC_POSTFIX);
            out.push_str("--");
        }
        Expr::Assign { op, lhs, rhs } => {
            write_child(out, lhs, PREC_UNARY);
            out.push(' ');
            out.push_str(op.as_str());
            out.push(' ');
            write_child(out, rhs, PREC_ASSIGN);
        }
        Expr::Index { base, index } => {
            write_child(out, base, PREC_POSTFIX);
            out.push('[');
            write_expr(out, index);
            out.push(']');
        }
        Expr::Call { callee, args } => {
            out.push_str(callee);
            out.push('(');
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_child(out, a, PREC_ASSIGN);
            }
            out.push(')');
        }
        Expr::Paren(x) => {
            out.push('(');
            write_expr(out, x);
            out.push(')');
        }
        Expr::Cast { ty, pointers, expr } => {
            out.push('(');
            out.push_str(&type_str(ty));
            if *pointers > 0 {
                out.push(' ');
                out.push_str(&"*".repeat(*pointers as usize));
            }
            out.push(')');
            write_child(out, expr, PREC_UNARY);
        }
        Expr::Cond { cond, then, els } => {
            write_child(out, cond, PREC_COND + 1);
            out.push_str(" ? ");
            write_child(out, then, PREC_ASSIGN);
            out.push_str(" : ");
            write_child(out, els, PREC_COND);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthesized_exprs_get_needed_parens() {
        let e = Expr::binary(BinOp::Mul, Expr::binary(BinOp::Add, Expr::ident("a"), Expr::ident("b")), Expr::ident("c"));
        assert_eq!(print_expr(&e), "(a + b) * c");
        let e = Expr::binary(BinOp::Sub, Expr::ident("a"), Expr::binary(BinOp::Sub, Expr::ident("b"), Expr::ident("c")));
        assert_eq!(print_expr(&e), "a - (b - c)");
        let d = Expr::Index {
            base: Box::new(Expr::unary(UnOp::Deref, Expr::ident("p"))),
            index: Box::new(Expr::int(0)),
        };
        assert_eq!(print_expr(&d), "(*p)[0]");
        assert_eq!(print_expr(&Expr::unary(UnOp::Neg, Expr::unary(UnOp::Neg, Expr::ident("x")))), "- -x");
    }
}
