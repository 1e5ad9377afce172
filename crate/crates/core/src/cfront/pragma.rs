//! The two directive vocabularies: the OpenMP input side (with the `check`
//! and `fixed(a,b,c)` extensions) and the HMPP output side.

use std::fmt;

use crate::error::{Error, Pos, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReductionOp {
    Add,
    Mul,
    Sub,
    Min,
    Max,
}

impl ReductionOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ReductionOp::Add => "+",
            ReductionOp::Mul => "*",
            ReductionOp::Sub => "-",
            ReductionOp::Min => "min",
            ReductionOp::Max => "max",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim() {
            "+" => ReductionOp::Add,
            "*" => ReductionOp::Mul,
            "-" => ReductionOp::Sub,
            "min" => ReductionOp::Min,
            "max" => ReductionOp::Max,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OmpKind {
    Parallel,
    ParallelFor,
    For,
    /// Any other `omp` construct; carried verbatim and never transformed.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OmpClause {
    Shared(Vec<String>),
    Private(Vec<String>),
    FirstPrivate(Vec<String>),
    LastPrivate(Vec<String>),
    Reduction(ReductionOp, String),
    Schedule(String),
    NumThreads(String),
    Collapse(String),
    Default(String),
    Nowait,
    Check,
    Fixed(u32, u32, u32),
}

impl fmt::Display for OmpClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmpClause::Shared(v) => write!(f, "shared({})", v.join(", ")),
            OmpClause::Private(v) => write!(f, "private({})", v.join(", ")),
            OmpClause::FirstPrivate(v) => write!(f, "firstprivate({})", v.join(", ")),
            OmpClause::LastPrivate(v) => write!(f, "lastprivate({})", v.join(", ")),
            OmpClause::Reduction(op, v) => write!(f, "reduction({}:{v})", op.as_str()),
            OmpClause::Schedule(s) => write!(f, "schedule({s})"),
            OmpClause::NumThreads(s) => write!(f, "num_threads({s})"),
            OmpClause::Collapse(s) => write!(f, "collapse({s})"),
            OmpClause::Default(s) => write!(f, "default({s})"),
            OmpClause::Nowait => f.write_str("nowait"),
            OmpClause::Check => f.write_str("check"),
            OmpClause::Fixed(a, b, c) => write!(f, "fixed({a},{b},{c})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmpPragma {
    pub kind: OmpKind,
    pub clauses: Vec<OmpClause>,
    /// Text after `omp` for [`OmpKind::None`].
    pub raw: Option<String>,
    pub pos: Pos,
}

impl OmpPragma {
    pub fn shared(&self) -> Vec<&str> {
        self.list(|c| match c {
            OmpClause::Shared(v) => Some(v),
            _ => None,
        })
    }

    pub fn private(&self) -> Vec<&str> {
        self.list(|c| match c {
            OmpClause::Private(v) => Some(v),
            _ => None,
        })
    }

    fn list<'a>(&'a self, pick: impl Fn(&'a OmpClause) -> Option<&'a Vec<String>>) -> Vec<&'a str> {
        self.clauses.iter().filter_map(pick).flatten().map(String::as_str).collect()
    }

    pub fn reduction(&self) -> Option<(ReductionOp, &str)> {
        self.clauses.iter().find_map(|c| match c {
            OmpClause::Reduction(op, v) => Some((*op, v.as_str())),
            _ => None,
        })
    }

    pub fn check(&self) -> bool {
        self.clauses.contains(&OmpClause::Check)
    }

    pub fn fixed(&self) -> Option<(u32, u32, u32)> {
        self.clauses.iter().find_map(|c| match c {
            OmpClause::Fixed(a, b, c) => Some((*a, *b, *c)),
            _ => None,
        })
    }

    /// Same pragma without the exploration clauses.
    pub fn without_exploration(&self) -> OmpPragma {
        let mut p = self.clone();
        p.clauses.retain(|c| !matches!(c, OmpClause::Check | OmpClause::Fixed(..)));
        p
    }
}

impl fmt::Display for OmpPragma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = match self.kind {
            OmpKind::Parallel => "omp parallel",
            OmpKind::ParallelFor => "omp parallel for",
            OmpKind::For => "omp for",
            OmpKind::None => return write!(f, "omp {}", self.raw.as_deref().unwrap_or("")),
        };
        f.write_str(head)?;
        for c in &self.clauses {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

/// Parses a full `#pragma omp ...` line.
pub fn parse_omp_pragma(line: &str) -> Result<OmpPragma> {
    let t = line.trim();
    let t = t.strip_prefix('#').map(str::trim_start).unwrap_or(t);
    let t = t.strip_prefix("pragma").map(str::trim_start).unwrap_or(t);
    let rest = t
        .strip_prefix("omp")
        .filter(|r| r.is_empty() || r.starts_with(char::is_whitespace))
        .ok_or_else(|| Error::Pragma { pos: Pos::default(), msg: "expected `#pragma omp`".into() })?;
    parse_omp_body(rest, Pos::default())
}

pub(crate) fn parse_omp_body(rest: &str, pos: Pos) -> Result<OmpPragma> {
    let err = |msg: String| Error::Pragma { pos, msg };
    let items = split_clauses(rest).map_err(err)?;
    let i;
    let word = |k: usize| items.get(k).filter(|(_, a)| a.is_none()).map(|(w, _)| w.as_str());
    let kind = match (word(0), word(1)) {
        (Some("parallel"), Some("for")) => {
            i = 2;
            OmpKind::ParallelFor
        }
        (Some("parallel"), _) => {
            i = 1;
            OmpKind::Parallel
        }
        (Some("for"), _) => {
            i = 1;
            OmpKind::For
        }
        _ => {
            return Ok(OmpPragma { kind: OmpKind::None, clauses: Vec::new(), raw: Some(rest.trim().to_string()), pos });
        }
    };
    let mut clauses = Vec::new();
    for (name, arg) in &items[i..] {
        let need = |a: &Option<String>| a.clone().ok_or_else(|| err(format!("clause `{name}` needs an argument")));
        let list = |a: &Option<String>| -> Result<Vec<String>> {
            let s = need(a)?;
            let v: Vec<String> = s.split(',').map(|x| x.trim().to_string()).collect();
            if v.iter().any(|x| !is_ident(x)) {
                return Err(err(format!("malformed variable list in `{name}({s})`")));
            }
            Ok(v)
        };
        let clause = match name.as_str() {
            "shared" => OmpClause::Shared(list(arg)?),
            "private" => OmpClause::Private(list(arg)?),
            "firstprivate" => OmpClause::FirstPrivate(list(arg)?),
            "lastprivate" => OmpClause::LastPrivate(list(arg)?),
            "reduction" => {
                let s = need(arg)?;
                let (op, var) = s.split_once(':').ok_or_else(|| err(format!("malformed reduction `{s}`")))?;
                let op = ReductionOp::parse(op).ok_or_else(|| err(format!("unknown reduction operator `{}`", op.trim())))?;
                let var = var.trim();
                if !is_ident(var) {
                    return Err(err(format!("reduction expects a single variable, got `{var}`")));
                }
                OmpClause::Reduction(op, var.to_string())
            }
            "schedule" => OmpClause::Schedule(need(arg)?.trim().to_string()),
            "num_threads" => OmpClause::NumThreads(need(arg)?.trim().to_string()),
            "collapse" => OmpClause::Collapse(need(arg)?.trim().to_string()),
            "default" => OmpClause::Default(need(arg)?.trim().to_string()),
            "nowait" if arg.is_none() => OmpClause::Nowait,
            "check" if arg.is_none() => OmpClause::Check,
            "fixed" => {
                let s = need(arg)?;
                let parts: Vec<&str> = s.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(err(format!("fixed() takes exactly 3 integers, got {}", parts.len())));
                }
                let mut n = [0u32; 3];
                for (k, p) in parts.iter().enumerate() {
                    n[k] = p.parse().map_err(|_| err(format!("fixed() argument `{p}` is not a non-negative integer")))?;
                }
                OmpClause::Fixed(n[0], n[1], n[2])
            }
            other => return Err(err(format!("unknown clause `{other}`"))),
        };
        clauses.push(clause);
    }
    let p = OmpPragma { kind, clauses, raw: None, pos };
    let checks = p.clauses.iter().filter(|c| matches!(c, OmpClause::Check)).count();
    let fixeds = p.clauses.iter().filter(|c| matches!(c, OmpClause::Fixed(..))).count();
    if checks > 0 && fixeds > 0 {
        return Err(err("`check` and `fixed` are mutually exclusive".into()));
    }
    if checks > 1 || fixeds > 1 {
        return Err(err("duplicate `check`/`fixed` clause".into()));
    }
    if p.clauses.iter().filter(|c| matches!(c, OmpClause::Reduction(..))).count() > 1 {
        return Err(err("only one reduction clause is supported".into()));
    }
    Ok(p)
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut ch = s.chars();
    matches!(ch.next(), Some(c) if c.is_ascii_alphabetic() || c == '_') && ch.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits `name(args) name name(args)` into (name, optional argument text).
fn split_clauses(s: &str) -> std::result::Result<Vec<(String, Option<String>)>, String> {
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() || c == ',' {
            i += 1;
            continue;
        }
        if !(c.is_ascii_alphabetic() || c == '_') {
            return Err(format!("unexpected `{c}` in pragma"));
        }
        let mut name = String::new();
        while i < cs.len() && (cs[i].is_ascii_alphanumeric() || cs[i] == '_') {
            name.push(cs[i]);
            i += 1;
        }
        while i < cs.len() && cs[i].is_whitespace() {
            i += 1;
        }
        let mut arg = None;
        if i < cs.len() && cs[i] == '(' {
            let mut depth = 0;
            let mut a = String::new();
            loop {
                if i >= cs.len() {
                    return Err(format!("unbalanced parentheses after `{name}`"));
                }
                let c = cs[i];
                i += 1;
                if c == '(' {
                    depth += 1;
                    if depth == 1 {
                        continue;
                    }
                } else if c == ')' {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                a.push(c);
            }
            arg = Some(a);
        }
        out.push((name, arg));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HmppKind {
    Codelet,
    Callsite,
    Group,
    MapByName,
    AdvancedLoad,
    DelegatedStore,
    Synchronize,
    Release,
}

impl HmppKind {
    pub const ALL: [HmppKind; 8] = [
        HmppKind::Codelet,
        HmppKind::Callsite,
        HmppKind::Group,
        HmppKind::MapByName,
        HmppKind::AdvancedLoad,
        HmppKind::DelegatedStore,
        HmppKind::Synchronize,
        HmppKind::Release,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            HmppKind::Codelet => "codelet",
            HmppKind::Callsite => "callsite",
            HmppKind::Group => "group",
            HmppKind::MapByName => "mapbyname",
            HmppKind::AdvancedLoad => "advancedload",
            HmppKind::DelegatedStore => "delegatedstore",
            HmppKind::Synchronize => "synchronize",
            HmppKind::Release => "release",
        }
    }

    /// Accepts the canonical keyword and the known misspelling `delegatstore`.
    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "codelet" => HmppKind::Codelet,
            "callsite" => HmppKind::Callsite,
            "group" => HmppKind::Group,
            "mapbyname" => HmppKind::MapByName,
            "advancedload" => HmppKind::AdvancedLoad,
            "delegatedstore" | "delegatstore" => HmppKind::DelegatedStore,
            "synchronize" => HmppKind::Synchronize,
            "release" => HmppKind::Release,
            _ => return None,
        })
    }

    /// Directives that stand alone as statements rather than decorating one.
    pub fn is_standalone(self) -> bool {
        !matches!(self, HmppKind::Codelet | HmppKind::Callsite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Io {
    In,
    Out,
    InOut,
}

impl Io {
    pub fn as_str(self) -> &'static str {
        match self {
            Io::In => "in",
            Io::Out => "out",
            Io::InOut => "inout",
        }
    }

    pub fn reads(self) -> bool {
        matches!(self, Io::In | Io::InOut)
    }

    pub fn writes(self) -> bool {
        matches!(self, Io::Out | Io::InOut)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgSel {
    Star,
    Names(Vec<String>),
}

impl fmt::Display for ArgSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgSel::Star => f.write_str("args[*]"),
            ArgSel::Names(v) => write!(f, "args[{}]", v.join(", ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgProp {
    /// `args[a, b]` with no property.
    Bare,
    Io(Io),
    Size(String),
    Addr(String),
    NoUpdate(bool),
    Transfer(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgClause {
    pub sel: ArgSel,
    pub prop: ArgProp,
}

impl ArgClause {
    pub fn names(names: Vec<String>, prop: ArgProp) -> Self {
        ArgClause { sel: ArgSel::Names(names), prop }
    }
}

impl fmt::Display for ArgClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sel)?;
        match &self.prop {
            ArgProp::Bare => Ok(()),
            ArgProp::Io(io) => write!(f, ".io={}", io.as_str()),
            ArgProp::Size(s) => write!(f, ".size={s}"),
            ArgProp::Addr(a) => write!(f, ".addr=\"{a}\""),
            ArgProp::NoUpdate(b) => write!(f, ".noupdate={b}"),
            ArgProp::Transfer(t) => write!(f, ".transfer={t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HmppDirective {
    pub group: Option<String>,
    pub label: Option<String>,
    pub kind: HmppKind,
    /// Always `CUDA` when present.
    pub target: Option<String>,
    pub args: Vec<ArgClause>,
    /// Variables listed by `mapbyname`.
    pub mapped: Vec<String>,
    pub asynchronous: bool,
}

impl HmppDirective {
    pub fn new(kind: HmppKind) -> Self {
        HmppDirective { group: None, label: None, kind, target: None, args: Vec::new(), mapped: Vec::new(), asynchronous: false }
    }

    pub fn labeled(kind: HmppKind, group: Option<&str>, label: Option<&str>) -> Self {
        let mut d = HmppDirective::new(kind);
        d.group = group.map(str::to_string);
        d.label = label.map(str::to_string);
        d
    }

    /// Canonical single-line text after `#pragma `.
    pub fn text(&self) -> String {
        let mut s = String::from("hmpp");
        if let Some(g) = &self.group {
            s.push_str(&format!(" <{g}>"));
        }
        if let Some(l) = &self.label {
            s.push(' ');
            s.push_str(l);
        }
        s.push(' ');
        s.push_str(self.kind.keyword());
        for item in self.items() {
            s.push_str(", ");
            s.push_str(&item);
        }
        s
    }

    fn items(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let Some(t) = &self.target {
            v.push(format!("target={t}"));
        }
        if self.kind == HmppKind::MapByName {
            v.extend(self.mapped.iter().cloned());
        }
        v.extend(self.args.iter().map(|a| a.to_string()));
        if self.asynchronous {
            v.push("asynchronous".into());
        }
        v
    }

    /// Names referenced by the directive's arg clauses (excluding `*`).
    pub fn arg_names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = Vec::new();
        for a in &self.args {
            if let ArgSel::Names(ns) = &a.sel {
                for n in ns {
                    if !v.contains(&n.as_str()) {
                        v.push(n);
                    }
                }
            }
        }
        v
    }

    pub fn addr_of(&self, arg: &str) -> Option<&str> {
        self.args.iter().find_map(|a| match (&a.sel, &a.prop) {
            (ArgSel::Names(ns), ArgProp::Addr(s)) if ns.iter().any(|n| n == arg) => Some(s.as_str()),
            _ => None,
        })
    }

    pub fn noupdate_args(&self) -> Vec<&str> {
        let mut v = Vec::new();
        for a in &self.args {
            if let (ArgSel::Names(ns), ArgProp::NoUpdate(true)) = (&a.sel, &a.prop) {
                v.extend(ns.iter().map(String::as_str));
            }
        }
        v
    }
}

pub(crate) fn parse_hmpp_body(rest: &str, pos: Pos) -> Result<HmppDirective> {
    let err = |msg: String| Error::Pragma { pos, msg };
    let items = split_top_commas(rest);
    let head = items.first().cloned().unwrap_or_default();
    let mut words = head.split_whitespace().peekable();
    let mut d = HmppDirective::new(HmppKind::Codelet);
    if let Some(w) = words.peek() {
        if let Some(g) = w.strip_prefix('<').and_then(|g| g.strip_suffix('>')) {
            d.group = Some(g.to_string());
            words.next();
        }
    }
    let first = words.next().ok_or_else(|| err("empty hmpp directive".into()))?;
    let kind_word = match HmppKind::from_keyword(first) {
        Some(_) => first,
        None => {
            d.label = Some(first.to_string());
            words.next().ok_or_else(|| err(format!("missing directive kind after `{first}`")))?
        }
    };
    d.kind = HmppKind::from_keyword(kind_word).ok_or_else(|| err(format!("unknown hmpp directive `{kind_word}`")))?;
    if let Some(extra) = words.next() {
        return Err(err(format!("unexpected `{extra}` in hmpp directive")));
    }
    for item in &items[1..] {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        if let Some(v) = item.strip_prefix("target") {
            let v = v.trim_start().strip_prefix('=').ok_or_else(|| err(format!("malformed `{item}`")))?;
            d.target = Some(v.trim().to_string());
        } else if item == "asynchronous" {
            d.asynchronous = true;
        } else if let Some(r) = item.strip_prefix("args") {
            d.args.push(parse_arg_clause(r.trim_start()).map_err(err)?);
        } else if d.kind == HmppKind::MapByName && is_ident(item) {
            d.mapped.push(item.to_string());
        } else {
            return Err(err(format!("unknown hmpp property `{item}`")));
        }
    }
    Ok(d)
}

fn parse_arg_clause(r: &str) -> std::result::Result<ArgClause, String> {
    let r = r.strip_prefix('[').ok_or("expected `[` after `args`")?;
    let close = r.find(']').ok_or("unterminated `args[`")?;
    let inner = r[..close].trim();
    let sel = if inner == "*" {
        ArgSel::Star
    } else {
        let v: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).collect();
        if v.iter().any(|n| !is_ident(n)) {
            return Err(format!("malformed argument list `{inner}`"));
        }
        ArgSel::Names(v)
    };
    let rest = r[close + 1..].trim();
    if rest.is_empty() {
        return Ok(ArgClause { sel, prop: ArgProp::Bare });
    }
    let rest = rest.strip_prefix('.').ok_or_else(|| format!("unexpected `{rest}`"))?;
    let (name, value) = rest.split_once('=').ok_or_else(|| format!("property `{rest}` needs a value"))?;
    let value = value.trim();
    let prop = match name.trim() {
        "io" => ArgProp::Io(match value {
            "in" => Io::In,
            "out" => Io::Out,
            "inout" => Io::InOut,
            v => return Err(format!("unknown io `{v}`")),
        }),
        "size" => ArgProp::Size(value.to_string()),
        "addr" => ArgProp::Addr(value.trim_matches('"').to_string()),
        "noupdate" => ArgProp::NoUpdate(value == "true"),
        "transfer" => ArgProp::Transfer(value.to_string()),
        other => return Err(format!("unknown argument property `{other}`")),
    };
    Ok(ArgClause { sel, prop })
}

fn split_top_commas(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    let mut in_str = false;
    for c in s.chars() {
        match c {
            '"' => in_str = !in_str,
            '[' | '(' if !in_str => depth += 1,
            ']' | ')' if !in_str => depth -= 1,
            ',' if depth == 0 && !in_str => {
                out.push(std::mem::take(&mut cur).trim().to_string());
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur.trim().to_string());
    out
}

/// `gridify` argument: an induction variable or the literal 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridDim {
    One,
    Var(String),
}

impl fmt::Display for GridDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridDim::One => f.write_str("1"),
            GridDim::Var(v) => f.write_str(v),
        }
    }
}

/// `#pragma hmppcg gridify(...), reduce(op:var)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HmppcgDirective {
    pub gridify: Vec<GridDim>,
    pub reduce: Option<(ReductionOp, String)>,
}

impl HmppcgDirective {
    pub fn text(&self) -> String {
        let mut parts = Vec::new();
        if !self.gridify.is_empty() {
            let dims: Vec<String> = self.gridify.iter().map(|g| g.to_string()).collect();
            parts.push(format!("gridify({})", dims.join(", ")));
        }
        if let Some((op, v)) = &self.reduce {
            parts.push(format!("reduce({}:{v})", op.as_str()));
        }
        format!("hmppcg {}", parts.join(", "))
    }
}

fn parse_hmppcg_body(rest: &str, pos: Pos) -> Result<HmppcgDirective> {
    let err = |msg: String| Error::Pragma { pos, msg };
    let mut d = HmppcgDirective { gridify: Vec::new(), reduce: None };
    for (name, arg) in split_clauses(rest).map_err(err)? {
        let arg = arg.ok_or_else(|| err(format!("`{name}` needs an argument")))?;
        match name.as_str() {
            "gridify" => {
                for a in arg.split(',').map(str::trim) {
                    d.gridify.push(if a == "1" {
                        GridDim::One
                    } else if is_ident(a) {
                        GridDim::Var(a.to_string())
                    } else {
                        return Err(err(format!("bad gridify dimension `{a}`")));
                    });
                }
            }
            "reduce" => {
                let (op, v) = arg.split_once(':').ok_or_else(|| err(format!("malformed reduce `{arg}`")))?;
                let op = ReductionOp::parse(op).ok_or_else(|| err(format!("unknown reduce operator `{op}`")))?;
                d.reduce = Some((op, v.trim().to_string()));
            }
            other => return Err(err(format!("unknown hmppcg clause `{other}`"))),
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pragma {
    Omp(OmpPragma),
    Hmpp(HmppDirective),
    Hmppcg(HmppcgDirective),
    Other(String),
}

impl Pragma {
    /// Parses the text after `#pragma`, canonicalising HMPP spellings
    /// (`hmpc` → `hmpp`, `hmpcpg` → `hmppcg`).
    pub fn parse(text: &str, pos: Pos) -> Result<Pragma> {
        let t = text.trim();
        let (word, rest) = match t.find(char::is_whitespace) {
            Some(k) => (&t[..k], &t[k..]),
            None => (t, ""),
        };
        match word {
            "omp" => Ok(Pragma::Omp(parse_omp_body(rest, pos)?)),
            "hmpp" | "hmpc" => Ok(Pragma::Hmpp(parse_hmpp_body(rest, pos)?)),
            "hmppcg" | "hmpcpg" | "hmpccg" => Ok(Pragma::Hmppcg(parse_hmppcg_body(rest, pos)?)),
            _ => Ok(Pragma::Other(t.to_string())),
        }
    }

    /// Canonical text after `#pragma `.
    pub fn text(&self) -> String {
        match self {
            Pragma::Omp(p) => p.to_string(),
            Pragma::Hmpp(d) => d.text(),
            Pragma::Hmppcg(d) => d.text(),
            Pragma::Other(s) => s.clone(),
        }
    }

    pub fn as_omp(&self) -> Option<&OmpPragma> {
        match self {
            Pragma::Omp(p) => Some(p),
            _ => None,
        }
    }
}

/// Column budget for one `#pragma` line before `&` continuation.
pub const PRAGMA_WIDTH: usize = 100;

/// Renders `#pragma <text>` lines. Codelet directives that exceed the width
/// are split at item boundaries with a trailing `&` and a `#pragma hmpp &`
/// prefix; every other directive stays on one line.
pub fn render_pragma_lines(p: &Pragma) -> Vec<String> {
    let text = p.text();
    let line = format!("#pragma {text}");
    let Pragma::Hmpp(HmppDirective { kind: HmppKind::Codelet, .. }) = p else {
        return vec![line];
    };
    if line.len() <= PRAGMA_WIDTH {
        return vec![line];
    }
    let parts = split_top_commas(&text);
    let mut lines = Vec::new();
    let mut cur = format!("#pragma {}", parts[0]);
    for part in &parts[1..] {
        let candidate_len = cur.len() + 2 + part.len() + 3;
        if candidate_len > PRAGMA_WIDTH && !cur.ends_with("& ") && cur != "#pragma hmpp &" {
            lines.push(format!("{cur}, &"));
            cur = format!("#pragma hmpp & {part}");
        } else {
            cur.push_str(", ");
            cur.push_str(part);
        }
    }
    lines.push(cur);
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_shared_check() {
        let p = parse_omp_pragma("#pragma omp parallel for reduction(+:diffsum) shared(myTable) check").unwrap();
        assert_eq!(p.kind, OmpKind::ParallelFor);
        assert_eq!(p.reduction(), Some((ReductionOp::Add, "diffsum")));
        assert_eq!(p.shared(), vec!["myTable"]);
        assert!(p.check());
        assert_eq!(p.fixed(), None);
    }

    #[test]
    fn fixed_triple() {
        let p = parse_omp_pragma("#pragma omp parallel for fixed(10,1,0)").unwrap();
        assert_eq!(p.kind, OmpKind::ParallelFor);
        assert_eq!(p.fixed(), Some((10, 1, 0)));
        assert!(!p.check());
    }

    #[test]
    fn check_and_fixed_are_exclusive() {
        let e = parse_omp_pragma("#pragma omp parallel for check fixed(1,0,0)").unwrap_err();
        assert!(e.to_string().contains("mutually exclusive"), "{e}");
    }

    #[test]
    fn fixed_arity_and_unknown_clause() {
        assert!(parse_omp_pragma("#pragma omp parallel for fixed(1,0)").is_err());
        assert!(parse_omp_pragma("#pragma omp parallel for fixed(1,-1,0)").is_err());
        assert!(parse_omp_pragma("#pragma omp parallel for frobnicate(x)").is_err());
        assert!(parse_omp_pragma("#pragma omp parallel for shared(a b)").is_err());
    }

    #[test]
    fn other_omp_constructs_pass_through() {
        let p = parse_omp_pragma("#pragma omp barrier").unwrap();
        assert_eq!(p.kind, OmpKind::None);
        assert_eq!(p.to_string(), "omp barrier");
    }

    #[test]
    fn hmpp_spelling_is_canonicalised() {
        let p = Pragma::parse(
            "hmpc <group0_12> _instr_for12_ol_17_main delegatstore, args[myTable], args[myTable].addr=\"myTable\"",
            Pos::default(),
        )
        .unwrap();
        assert_eq!(
            p.text(),
            "hmpp <group0_12> _instr_for12_ol_17_main delegatedstore, args[myTable], args[myTable].addr=\"myTable\""
        );
        let g = Pragma::parse("hmpcpg gridify(i, j)", Pos::default()).unwrap();
        assert_eq!(g.text(), "hmppcg gridify(i, j)");
    }

    #[test]
    fn hmpp_callsite_properties() {
        let p = Pragma::parse("hmpp <g> k callsite, args[a, b].noupdate=true, asynchronous", Pos::default()).unwrap();
        let Pragma::Hmpp(d) = p else { panic!() };
        assert_eq!(d.kind, HmppKind::Callsite);
        assert_eq!(d.group.as_deref(), Some("g"));
        assert_eq!(d.label.as_deref(), Some("k"));
        assert!(d.asynchronous);
        assert_eq!(d.noupdate_args(), vec!["a", "b"]);
    }

    #[test]
    fn group_release_and_mapbyname() {
        let Pragma::Hmpp(r) = Pragma::parse("hmpp <group1> release", Pos::default()).unwrap() else { panic!() };
        assert_eq!(r.kind, HmppKind::Release);
        assert_eq!(r.label, None);
        let Pragma::Hmpp(m) = Pragma::parse("hmpp <g> mapbyname, myTable,myTableOut", Pos::default()).unwrap() else {
            panic!()
        };
        assert_eq!(m.mapped, vec!["myTable", "myTableOut"]);
        assert_eq!(m.text(), "hmpp <g> mapbyname, myTable, myTableOut");
    }

    #[test]
    fn long_directive_wraps_with_ampersand() {
        let mut d = HmppDirective::labeled(HmppKind::Codelet, None, Some("_instr_for_ol_3_main"));
        d.target = Some("CUDA".into());
        d.args.push(ArgClause::names(vec!["result".into(), "array".into()], ArgProp::Io(Io::InOut)));
        d.args.push(ArgClause::names(vec!["mat".into(), "mat1".into(), "mat2".into()], ArgProp::Io(Io::In)));
        d.args.push(ArgClause::names(vec!["array".into()], ArgProp::Size("(row*col)".into())));
        d.args.push(ArgClause { sel: ArgSel::Star, prop: ArgProp::Transfer("auto".into()) });
        let lines = render_pragma_lines(&Pragma::Hmpp(d.clone()));
        assert!(lines.len() >= 2);
        assert!(lines[0].ends_with(", &"));
        assert!(lines[1].starts_with("#pragma hmpp & "));
        assert!(lines.iter().all(|l| l.len() <= PRAGMA_WIDTH));
        // Re-joined text parses back to the same directive.
        let joined = crate::cfront::lexer::tokenize(&(lines.join("\n") + "\n")).unwrap();
        let crate::cfront::lexer::Tok::Pragma(t) = &joined[0].tok else { panic!() };
        assert_eq!(Pragma::parse(t, Pos::default()).unwrap(), Pragma::Hmpp(d));
    }
}
