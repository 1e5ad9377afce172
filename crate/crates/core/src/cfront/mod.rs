//! Front end for the supported C subset: lexing, parsing, name resolution,
//! pragma models and printing.

pub mod ast;
pub mod effects;
pub mod lexer;
pub mod parser;
pub mod pragma;
pub mod printer;
pub mod symbols;

pub use ast::*;
pub use effects::{Access, AccessKind, Effects, FnSummary};
pub use pragma::{parse_omp_pragma, HmppDirective, HmppKind, OmpKind, OmpPragma, Pragma};
pub use parser::parse_expr;
pub use printer::{print_expr, print_stmt, print_unit};
pub use symbols::{Shape, Storage, SymKey, Symbol, SymbolTable};

use crate::error::Result;

/// Parses and name-checks a translation unit.
pub fn parse_translation_unit(text: &str) -> Result<SourceUnit> {
    let unit = parser::parse_tokens(text)?;
    SymbolTable::build(&unit)?;
    Ok(unit)
}

/// Removes every pragma attachment and standalone directive statement.
pub fn strip_pragmas(unit: &SourceUnit) -> SourceUnit {
    let mut u = unit.clone();
    for item in &mut u.items {
        item.pragmas.clear();
        if let ItemKind::Function(f) = &mut item.kind {
            if let Some(body) = &mut f.body {
                body.walk_mut(&mut |s| {
                    s.pragmas.clear();
                    if let StmtKind::Block(v) = &mut s.kind {
                        v.retain(|c| !matches!(c.kind, StmtKind::Directive(_)));
                    }
                });
            }
        }
    }
    u.origin = None;
    u
}

/// Number of pragma attachments plus standalone directives in the unit.
pub fn pragma_count(unit: &SourceUnit) -> usize {
    let mut n = 0;
    for item in &unit.items {
        n += item.pragmas.len();
        if let ItemKind::Function(f) = &item.kind {
            if let Some(body) = &f.body {
                body.walk(&mut |s| {
                    n += s.pragmas.len() + usize::from(matches!(s.kind, StmtKind::Directive(_)));
                });
            }
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_is_idempotent_and_total() {
        let src = "int main(){ int i; int a[4];\n#pragma omp parallel for check\nfor(i=0;i<4;i++){ a[i]=i; }\n#pragma hmpp <g> release\nreturn 0; }";
        let u = parse_translation_unit(src).unwrap();
        assert_eq!(pragma_count(&u), 2);
        let s = strip_pragmas(&u);
        assert_eq!(pragma_count(&s), 0);
        assert_eq!(strip_pragmas(&s), s);
    }
}
