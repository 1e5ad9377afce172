//! Abstract execution of an emitted variant.
//!
//! The simulator walks the host code once, tracking for every variable that
//! crosses a callsite where its current value lives (host copy, device copy
//! per codelet or group). Stale reads on either side are reported as
//! violations. Transfers, launches and arithmetic operations are counted and
//! priced with [`CostModelParams`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::cfront::ast::*;
use crate::cfront::effects::{AccessKind, Effects, DEVICE_MATH};
use crate::cfront::pragma::{ArgProp, ArgSel, HmppDirective, HmppKind, Io, Pragma};
use crate::cfront::symbols::SymbolTable;
use crate::error::{Error, Result};

/// Rates and power rails of the modelled machine. Bandwidths in bytes/s,
/// throughputs in operations/s, overhead in seconds, powers in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModelParams {
    pub h2d_bandwidth: f64,
    pub d2h_bandwidth: f64,
    pub kernel_launch_overhead: f64,
    pub gpu_throughput: f64,
    pub cpu_throughput: f64,
    pub power_cpu_active: f64,
    pub power_cpu_idle: f64,
    pub power_gpu_active: f64,
    pub power_memory: f64,
}

impl Default for CostModelParams {
    /// Representative figures for a PCIe-attached GPU; not calibrated.
    fn default() -> Self {
        CostModelParams {
            h2d_bandwidth: 6.0e9,
            d2h_bandwidth: 6.0e9,
            kernel_launch_overhead: 1.0e-5,
            gpu_throughput: 5.0e10,
            cpu_throughput: 2.0e9,
            power_cpu_active: 95.0,
            power_cpu_idle: 30.0,
            power_gpu_active: 150.0,
            power_memory: 10.0,
        }
    }
}

impl CostModelParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("h2d_bandwidth", self.h2d_bandwidth),
            ("d2h_bandwidth", self.d2h_bandwidth),
            ("gpu_throughput", self.gpu_throughput),
            ("cpu_throughput", self.cpu_throughput),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::CostModel(format!("`{name}` must be positive, got {v}")));
            }
        }
        let rest = [
            ("kernel_launch_overhead", self.kernel_launch_overhead),
            ("power_cpu_active", self.power_cpu_active),
            ("power_cpu_idle", self.power_cpu_idle),
            ("power_gpu_active", self.power_gpu_active),
            ("power_memory", self.power_memory),
        ];
        for (name, v) in rest {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::CostModel(format!("`{name}` must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Sets one parameter by name.
    pub fn set(&mut self, key: &str, value: f64) -> Option<()> {
        let slot = match key {
            "h2d_bandwidth" => &mut self.h2d_bandwidth,
            "d2h_bandwidth" => &mut self.d2h_bandwidth,
            "kernel_launch_overhead" => &mut self.kernel_launch_overhead,
            "gpu_throughput" => &mut self.gpu_throughput,
            "cpu_throughput" => &mut self.cpu_throughput,
            "power_cpu_active" => &mut self.power_cpu_active,
            "power_cpu_idle" => &mut self.power_cpu_idle,
            "power_gpu_active" => &mut self.power_gpu_active,
            "power_memory" => &mut self.power_memory,
            _ => return None,
        };
        *slot = value;
        Some(())
    }
}

/// Event counts of one simulated run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Counters {
    /// Whole-array host-to-device transfers.
    pub h2d: u64,
    /// Whole-array device-to-host transfers.
    pub d2h: u64,
    pub scalar_h2d: u64,
    pub scalar_d2h: u64,
    pub h2d_bytes: f64,
    pub d2h_bytes: f64,
    pub launches: u64,
    pub gpu_ops: f64,
    pub cpu_ops: f64,
    /// Kernel time hidden behind host work by asynchronous callsites.
    pub overlap_s: f64,
}

impl Counters {
    fn add_scaled(&mut self, d: &Counters, times: u64) {
        let f = times as f64;
        self.h2d += d.h2d * times;
        self.d2h += d.d2h * times;
        self.scalar_h2d += d.scalar_h2d * times;
        self.scalar_d2h += d.scalar_d2h * times;
        self.h2d_bytes += d.h2d_bytes * f;
        self.d2h_bytes += d.d2h_bytes * f;
        self.launches += d.launches * times;
        self.gpu_ops += d.gpu_ops * f;
        self.cpu_ops += d.cpu_ops * f;
        self.overlap_s += d.overlap_s * f;
    }

    fn minus(&self, o: &Counters) -> Counters {
        Counters {
            h2d: self.h2d - o.h2d,
            d2h: self.d2h - o.d2h,
            scalar_h2d: self.scalar_h2d - o.scalar_h2d,
            scalar_d2h: self.scalar_d2h - o.scalar_d2h,
            h2d_bytes: self.h2d_bytes - o.h2d_bytes,
            d2h_bytes: self.d2h_bytes - o.d2h_bytes,
            launches: self.launches - o.launches,
            gpu_ops: self.gpu_ops - o.gpu_ops,
            cpu_ops: self.cpu_ops - o.cpu_ops,
            overlap_s: self.overlap_s - o.overlap_s,
        }
    }

    fn max(&self, o: &Counters) -> Counters {
        Counters {
            h2d: self.h2d.max(o.h2d),
            d2h: self.d2h.max(o.d2h),
            scalar_h2d: self.scalar_h2d.max(o.scalar_h2d),
            scalar_d2h: self.scalar_d2h.max(o.scalar_d2h),
            h2d_bytes: self.h2d_bytes.max(o.h2d_bytes),
            d2h_bytes: self.d2h_bytes.max(o.d2h_bytes),
            launches: self.launches.max(o.launches),
            gpu_ops: self.gpu_ops.max(o.gpu_ops),
            cpu_ops: self.cpu_ops.max(o.cpu_ops),
            overlap_s: self.overlap_s.min(o.overlap_s),
        }
    }
}

/// A stale read found while replaying a variant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub var: String,
    /// Kernel whose transfers are at fault, when known.
    pub label: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub counters: Counters,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
    pub cpu_s: f64,
    pub gpu_s: f64,
    pub transfer_s: f64,
    pub time_s: f64,
    pub energy_j: f64,
}

impl SimReport {
    pub fn is_sound(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Replays `unit` starting at `main`.
pub fn simulate(unit: &SourceUnit, params: &CostModelParams) -> Result<SimReport> {
    params.validate()?;
    let table = SymbolTable::build(unit)?;
    let fx = Effects::build(unit, &table);
    let main = unit.function("main").and_then(|f| f.body.as_ref()).ok_or_else(|| Error::Invalid("no `main` function to simulate".into()))?;
    let mut sim = Sim::new(unit, &table, &fx, params);
    sim.globals();
    sim.exec(main);
    for (label, _, _) in std::mem::take(&mut sim.timing) {
        sim.violation("", Some(&label), "asynchronous callsite never synchronized");
    }
    Ok(sim.finish())
}

const LOOP_CAP: u64 = 64;
const CALL_DEPTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Val {
    I(i64),
    F(f64),
}

impl Val {
    fn f(self) -> f64 {
        match self {
            Val::I(i) => i as f64,
            Val::F(f) => f,
        }
    }

    fn truthy(self) -> bool {
        self.f() != 0.0
    }
}

fn arith(op: BinOp, a: Val, b: Val) -> Option<Val> {
    use BinOp::*;
    let bool_v = |b: bool| Some(Val::I(b as i64));
    match (a, b) {
        (Val::I(x), Val::I(y)) => match op {
            Add => x.checked_add(y).map(Val::I),
            Sub => x.checked_sub(y).map(Val::I),
            Mul => x.checked_mul(y).map(Val::I),
            Div => x.checked_div(y).map(Val::I),
            Rem => x.checked_rem(y).map(Val::I),
            Shl => x.checked_shl(y as u32).map(Val::I),
            Shr => x.checked_shr(y as u32).map(Val::I),
            Lt => bool_v(x < y),
            Gt => bool_v(x > y),
            Le => bool_v(x <= y),
            Ge => bool_v(x >= y),
            Eq => bool_v(x == y),
            Ne => bool_v(x != y),
            BitAnd => Some(Val::I(x & y)),
            BitXor => Some(Val::I(x ^ y)),
            BitOr => Some(Val::I(x | y)),
            And => bool_v(x != 0 && y != 0),
            Or => bool_v(x != 0 || y != 0),
        },
        _ => {
            let (x, y) = (a.f(), b.f());
            match op {
                Add => Some(Val::F(x + y)),
                Sub => Some(Val::F(x - y)),
                Mul => Some(Val::F(x * y)),
                Div => Some(Val::F(x / y)),
                Lt => bool_v(x < y),
                Gt => bool_v(x > y),
                Le => bool_v(x <= y),
                Ge => bool_v(x >= y),
                Eq => bool_v(x == y),
                Ne => bool_v(x != y),
                And => bool_v(x != 0.0 && y != 0.0),
                Or => bool_v(x != 0.0 || y != 0.0),
                _ => None,
            }
        }
    }
}

fn parse_int(s: &str) -> Option<i64> {
    let t = s.trim_end_matches(['u', 'U', 'l', 'L']);
    if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        i64::from_str_radix(h, 16).ok()
    } else {
        t.parse().ok()
    }
}

fn unparen(e: &Expr) -> &Expr {
    match e {
        Expr::Paren(x) => unparen(x),
        _ => e,
    }
}

/// Arithmetic operations performed by one evaluation of `e`, excluding calls
/// to defined functions.
fn expr_ops(e: &Expr) -> f64 {
    let mut n = 0.0;
    e.walk(&mut |x| match x {
        Expr::Binary { op, .. } if op.is_arithmetic() => n += 1.0,
        Expr::Assign { op, .. } if *op != AssignOp::Assign => n += 1.0,
        Expr::Unary { op: UnOp::Neg, .. } => n += 1.0,
        Expr::Call { callee, .. } if DEVICE_MATH.contains(&callee.as_str()) => n += 1.0,
        _ => {}
    });
    n
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Residency {
    host: bool,
    /// Device spaces holding the current value.
    dev: BTreeSet<String>,
    last_writer: Option<String>,
}

impl Residency {
    fn fresh() -> Self {
        Residency { host: true, dev: BTreeSet::new(), last_writer: None }
    }
}

/// Transfer-relevant state; equality of two states means a loop has reached
/// a steady cycle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct State {
    res: BTreeMap<String, Residency>,
    /// Downloads deferred to the synchronize of each asynchronous label:
    /// (host var, scalar).
    deferred: BTreeMap<String, Vec<(String, bool)>>,
}

impl State {
    fn merge(&mut self, o: &State) {
        let keys: BTreeSet<String> = self.res.keys().chain(o.res.keys()).cloned().collect();
        for k in keys {
            let a = self.res.get(&k).cloned().unwrap_or_else(Residency::fresh);
            let b = o.res.get(&k).cloned().unwrap_or_else(Residency::fresh);
            let m = Residency {
                host: a.host && b.host,
                dev: a.dev.intersection(&b.dev).cloned().collect(),
                last_writer: a.last_writer.or(b.last_writer),
            };
            self.res.insert(k, m);
        }
        for (k, v) in &o.deferred {
            let e = self.deferred.entry(k.clone()).or_default();
            for x in v {
                if !e.contains(x) {
                    e.push(x.clone());
                }
            }
        }
    }
}

struct CParam {
    name: String,
    pointer: bool,
    io: Io,
    size: Option<String>,
}

struct Codelet<'a> {
    group: Option<String>,
    params: Vec<CParam>,
    reads: Vec<bool>,
    writes: Vec<bool>,
    def: &'a FunctionDef,
}

enum Flow {
    Normal,
    Return,
}

struct Sim<'a> {
    unit: &'a SourceUnit,
    table: &'a SymbolTable,
    fx: &'a Effects,
    params: &'a CostModelParams,
    codelets: HashMap<String, Codelet<'a>>,
    stores: HashSet<(String, String)>,
    mapped: HashMap<String, Vec<String>>,
    tracked: HashSet<String>,
    relevant: HashSet<StmtId>,
    active_fns: HashSet<String>,
    genv: HashMap<String, Val>,
    env: HashMap<String, Val>,
    sizes: HashMap<String, f64>,
    state: State,
    /// (label, kernel seconds, overlapping host seconds) per async launch.
    timing: Vec<(String, f64, f64)>,
    counters: Counters,
    violations: BTreeSet<Violation>,
    warnings: BTreeSet<String>,
    depth: usize,
}

impl<'a> Sim<'a> {
    fn new(unit: &'a SourceUnit, table: &'a SymbolTable, fx: &'a Effects, params: &'a CostModelParams) -> Self {
        let mut codelets = HashMap::new();
        for item in &unit.items {
            let ItemKind::Function(f) = &item.kind else { continue };
            let Some(d) = item.pragmas.iter().find_map(|p| match p {
                Pragma::Hmpp(d) if d.kind == HmppKind::Codelet => Some(d),
                _ => None,
            }) else {
                continue;
            };
            let summary = fx.summary(&f.name).cloned().unwrap_or_default();
            let io_of = |name: &str| {
                d.args.iter().find_map(|a| match (&a.sel, &a.prop) {
                    (ArgSel::Names(ns), ArgProp::Io(io)) if ns.iter().any(|n| n == name) => Some(*io),
                    _ => None,
                })
            };
            let size_of = |name: &str| {
                d.args.iter().find_map(|a| match (&a.sel, &a.prop) {
                    (ArgSel::Names(ns), ArgProp::Size(s)) if ns.iter().any(|n| n == name) => Some(s.clone()),
                    _ => None,
                })
            };
            let params = f
                .params
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let (r, w) = (summary.param_reads.get(i).copied().unwrap_or(true), summary.param_writes.get(i).copied().unwrap_or(true));
                    let derived = match (r, w) {
                        (_, false) => Io::In,
                        (false, true) => Io::Out,
                        _ => Io::InOut,
                    };
                    CParam {
                        name: p.decl.name.clone(),
                        pointer: p.decl.pointers > 0 || !p.decl.dims.is_empty(),
                        io: io_of(&p.decl.name).unwrap_or(derived),
                        size: size_of(&p.decl.name),
                    }
                })
                .collect();
            codelets.insert(
                f.name.clone(),
                Codelet { group: d.group.clone(), params, reads: summary.param_reads.clone(), writes: summary.param_writes.clone(), def: f },
            );
        }
        let mut sim = Sim {
            unit,
            table,
            fx,
            params,
            codelets,
            stores: HashSet::new(),
            mapped: HashMap::new(),
            tracked: HashSet::new(),
            relevant: HashSet::new(),
            active_fns: HashSet::new(),
            genv: HashMap::new(),
            env: HashMap::new(),
            sizes: HashMap::new(),
            state: State::default(),
            timing: Vec::new(),
            counters: Counters::default(),
            violations: BTreeSet::new(),
            warnings: BTreeSet::new(),
            depth: 0,
        };
        sim.scan();
        sim
    }

    /// Collects directives, callsite arguments and the statements that
    /// matter for residency.
    fn scan(&mut self) {
        let unit = self.unit;
        for f in unit.functions() {
            let Some(body) = &f.body else { continue };
            if self.codelets.contains_key(&f.name) {
                continue;
            }
            body.walk(&mut |s| {
                if let StmtKind::Directive(d) = &s.kind {
                    match d.kind {
                        HmppKind::DelegatedStore => {
                            for n in d.arg_names() {
                                self.stores.insert((d.label.clone().unwrap_or_default(), n.to_string()));
                            }
                        }
                        HmppKind::MapByName => {
                            self.mapped.entry(d.group.clone().unwrap_or_default()).or_default().extend(d.mapped.iter().cloned());
                        }
                        _ => {}
                    }
                }
                if let StmtKind::Expr(Expr::Call { callee, args }) = &s.kind {
                    if self.codelets.contains_key(callee) {
                        for a in args {
                            if let Some(v) = host_var(a) {
                                if self.table.resolve(s.id, v).is_some_and(|sym| sym.is_aggregate()) || matches!(a, Expr::Unary { op: UnOp::Addr, .. }) {
                                    self.tracked.insert(v.to_string());
                                }
                            }
                        }
                    }
                }
            });
        }
        // Functions containing host-side HMPP activity are executed, not summarised.
        loop {
            let mut changed = false;
            for f in unit.functions() {
                if self.active_fns.contains(&f.name) || self.codelets.contains_key(&f.name) {
                    continue;
                }
                let Some(body) = &f.body else { continue };
                let mut active = false;
                body.walk(&mut |s| {
                    active |= matches!(s.kind, StmtKind::Directive(_));
                    for e in s.own_exprs() {
                        for c in e.calls() {
                            active |= self.codelets.contains_key(c) || self.active_fns.contains(c);
                        }
                    }
                });
                if active {
                    self.active_fns.insert(f.name.clone());
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for f in unit.functions() {
            if let Some(b) = &f.body {
                if !self.codelets.contains_key(&f.name) {
                    self.mark_relevant(b);
                }
            }
        }
    }

    fn mark_relevant(&mut self, s: &Stmt) -> bool {
        let mut r = matches!(s.kind, StmtKind::Directive(_) | StmtKind::Return(_));
        for a in self.fx.stmt_accesses(self.table, s) {
            r |= self.tracked.contains(&a.name);
        }
        for e in s.own_exprs() {
            for c in e.calls() {
                r |= self.codelets.contains_key(c) || self.active_fns.contains(c);
            }
        }
        for c in s.children() {
            r |= self.mark_relevant(c);
        }
        if r {
            self.relevant.insert(s.id);
        }
        r
    }

    fn globals(&mut self) {
        let unit = self.unit;
        for d in unit.globals() {
            for dc in &d.declarators {
                self.declare(d, dc, true);
            }
        }
    }

    fn declare(&mut self, d: &Decl, dc: &Declarator, global: bool) {
        if self.tracked.contains(&dc.name) {
            let mut n = d.ty.base.size() as f64;
            let mut known = true;
            for dim in &dc.dims {
                match dim.as_ref().and_then(|e| self.eval(e)) {
                    Some(v) => n *= v.f(),
                    None => known = false,
                }
            }
            if known && (dc.pointers == 0 || !dc.dims.is_empty()) {
                self.sizes.insert(dc.name.clone(), n);
            }
        }
        let v = dc.init.as_ref().and_then(|e| self.eval_mut(e));
        let v = v.map(|v| match (d.ty.base, v) {
            (BaseType::Int | BaseType::Char, Val::F(f)) => Val::I(f as i64),
            (BaseType::Float | BaseType::Double, Val::I(i)) => Val::F(i as f64),
            (_, v) => v,
        });
        let env = if global { &mut self.genv } else { &mut self.env };
        match v {
            Some(v) if dc.dims.is_empty() && dc.pointers == 0 => {
                env.insert(dc.name.clone(), v);
            }
            _ => {
                env.remove(&dc.name);
            }
        }
    }

    fn get(&self, n: &str) -> Option<Val> {
        self.env.get(n).or_else(|| self.genv.get(n)).copied()
    }

    fn set(&mut self, n: &str, v: Option<Val>) {
        let local = self.env.contains_key(n) || !self.genv.contains_key(n);
        let env = if local { &mut self.env } else { &mut self.genv };
        match v {
            Some(v) => {
                env.insert(n.to_string(), v);
            }
            None => {
                env.remove(n);
            }
        }
    }

    fn eval(&self, e: &Expr) -> Option<Val> {
        match e {
            Expr::Int(s) => parse_int(s).map(Val::I),
            Expr::Float(s) => s.trim_end_matches(['f', 'F', 'l', 'L']).parse().ok().map(Val::F),
            Expr::Char(s) => s.trim_matches('\'').chars().next().map(|c| Val::I(c as i64)),
            Expr::Ident(n) => self.get(n),
            Expr::Paren(x) => self.eval(x),
            Expr::Binary { op, lhs, rhs } => arith(*op, self.eval(lhs)?, self.eval(rhs)?),
            Expr::Unary { op: UnOp::Neg, expr } => match self.eval(expr)? {
                Val::I(i) => Some(Val::I(-i)),
                Val::F(f) => Some(Val::F(-f)),
            },
            Expr::Unary { op: UnOp::Plus, expr } => self.eval(expr),
            Expr::Unary { op: UnOp::Not, expr } => Some(Val::I(!self.eval(expr)?.truthy() as i64)),
            Expr::Cast { ty, pointers: 0, expr } => {
                let v = self.eval(expr)?;
                Some(match ty.base {
                    BaseType::Int | BaseType::Char => Val::I(v.f() as i64),
                    _ => Val::F(v.f()),
                })
            }
            Expr::Cond { cond, then, els } => {
                if self.eval(cond)?.truthy() {
                    self.eval(then)
                } else {
                    self.eval(els)
                }
            }
            _ => None,
        }
    }

    /// Evaluates `e` and applies its effects on scalar variables.
    fn eval_mut(&mut self, e: &Expr) -> Option<Val> {
        match e {
            Expr::Assign { op, lhs, rhs } => {
                let r = self.eval_mut(rhs);
                match unparen(lhs) {
                    Expr::Ident(n) => {
                        let v = match op {
                            AssignOp::Assign => r,
                            AssignOp::Add => arith(BinOp::Add, self.get(n)?, r?),
                            AssignOp::Sub => arith(BinOp::Sub, self.get(n)?, r?),
                            AssignOp::Mul => arith(BinOp::Mul, self.get(n)?, r?),
                            AssignOp::Div => arith(BinOp::Div, self.get(n)?, r?),
                            AssignOp::Rem => arith(BinOp::Rem, self.get(n)?, r?),
                        };
                        let n = n.clone();
                        let v = match (self.get(&n), v) {
                            (Some(Val::I(_)), Some(Val::F(f))) => Some(Val::I(f as i64)),
                            (_, v) => v,
                        };
                        self.set(&n, v);
                        v
                    }
                    other => {
                        for c in other.children() {
                            self.eval_mut(c);
                        }
                        r
                    }
                }
            }
            Expr::PostInc(x) | Expr::PostDec(x) | Expr::Unary { op: UnOp::PreInc | UnOp::PreDec, expr: x } => {
                let Expr::Ident(n) = unparen(x) else { return None };
                let old = self.get(n);
                let delta = if matches!(e, Expr::PostInc(_) | Expr::Unary { op: UnOp::PreInc, .. }) { 1 } else { -1 };
                let new = old.and_then(|v| arith(BinOp::Add, v, Val::I(delta)));
                let n = n.clone();
                self.set(&n, new);
                if matches!(e, Expr::PostInc(_) | Expr::PostDec(_)) {
                    old
                } else {
                    new
                }
            }
            Expr::Call { callee, args } => {
                for a in args {
                    self.eval_mut(a);
                    if let Expr::Unary { op: UnOp::Addr, expr } = a {
                        if let Some(n) = expr.base_ident() {
                            let n = n.to_string();
                            self.set(&n, None);
                        }
                    }
                }
                if let Some(s) = self.fx.summary(callee).cloned() {
                    for (i, a) in args.iter().enumerate() {
                        if s.param_writes.get(i).copied().unwrap_or(false) && s.param_by_ref.get(i).copied().unwrap_or(false) {
                            if let Expr::Ident(n) = unparen(a) {
                                let n = n.clone();
                                self.set(&n, None);
                            }
                        }
                    }
                    for g in &s.global_writes {
                        self.genv.remove(g);
                    }
                }
                None
            }
            Expr::Binary { op, lhs, rhs } => {
                let a = self.eval_mut(lhs);
                let b = self.eval_mut(rhs);
                arith(*op, a?, b?)
            }
            Expr::Cond { cond, then, els } => {
                let c = self.eval_mut(cond);
                match c.map(Val::truthy) {
                    Some(true) => self.eval_mut(then),
                    Some(false) => self.eval_mut(els),
                    None => {
                        self.eval_mut(then);
                        self.eval_mut(els);
                        None
                    }
                }
            }
            _ => {
                if e.children().is_empty() {
                    return self.eval(e);
                }
                let v = self.eval(e);
                for c in e.children() {
                    self.eval_mut(c);
                }
                v
            }
        }
    }

    fn warn(&mut self, msg: String) {
        self.warnings.insert(msg);
    }

    fn violation(&mut self, var: &str, label: Option<&str>, msg: &str) {
        self.violations.insert(Violation { var: var.to_string(), label: label.map(str::to_string), message: msg.to_string() });
    }

    // ---- static operation counting ----

    /// Operations of `e` including bodies of called defined functions.
    fn expr_cost(&mut self, e: &Expr) -> f64 {
        let mut n = expr_ops(e);
        let mut calls = Vec::new();
        e.walk(&mut |x| {
            if let Expr::Call { callee, args } = x {
                calls.push((callee.clone(), args.clone()));
            }
        });
        for (callee, args) in calls {
            if self.codelets.contains_key(&callee) {
                continue;
            }
            n += self.call_cost(&callee, &args);
        }
        n
    }

    fn call_cost(&mut self, callee: &str, args: &[Expr]) -> f64 {
        let unit = self.unit;
        let Some(f) = unit.function(callee) else { return 0.0 };
        let Some(body) = &f.body else { return 0.0 };
        if self.depth >= CALL_DEPTH {
            self.warn(format!("call depth limit reached in `{callee}`"));
            return 0.0;
        }
        let bound: HashMap<String, Val> = f
            .params
            .iter()
            .zip(args)
            .filter(|(p, _)| p.decl.pointers == 0 && p.decl.dims.is_empty() && !p.decl.reference)
            .filter_map(|(p, a)| self.eval(a).map(|v| (p.decl.name.clone(), v)))
            .collect();
        let saved = std::mem::replace(&mut self.env, bound);
        self.depth += 1;
        let n = self.count(body);
        self.depth -= 1;
        self.env = saved;
        n
    }

    /// Operations executed by `s`, updating scalar values along the way.
    fn count(&mut self, s: &Stmt) -> f64 {
        match &s.kind {
            StmtKind::Decl(d) => {
                let mut n = 0.0;
                for dc in &d.declarators {
                    if let Some(i) = &dc.init {
                        n += self.expr_cost(i);
                    }
                    self.declare(d, dc, false);
                }
                n
            }
            StmtKind::Expr(e) => {
                let n = self.expr_cost(e);
                self.eval_mut(e);
                n
            }
            StmtKind::Return(Some(e)) => self.expr_cost(e),
            StmtKind::Block(v) => v.iter().map(|c| self.count(c)).sum(),
            StmtKind::If { cond, then, els } => {
                let mut n = self.expr_cost(cond);
                match self.eval_mut(cond).map(Val::truthy) {
                    Some(true) => n += self.count(then),
                    Some(false) => n += els.as_ref().map_or(0.0, |e| self.count(e)),
                    None => {
                        let snap = self.env.clone();
                        let a = self.count(then);
                        self.env = snap.clone();
                        let b = els.as_ref().map_or(0.0, |e| self.count(e));
                        self.env = snap;
                        self.forget_assigned(s);
                        n += a.max(b);
                    }
                }
                n
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => {
                let Some(lp) = self.loop_setup(s) else {
                    return self.count(body);
                };
                let per_iter = lp.header_ops;
                if let Some(var) = &lp.var {
                    let mid = lp.start + lp.step * (lp.trips / 2) as i64;
                    self.set(var, Some(Val::I(mid)));
                }
                let b = self.count(body);
                self.forget_assigned(body);
                if let Some(var) = &lp.var {
                    self.set(var, Some(Val::I(lp.start + lp.step * lp.trips as i64)));
                }
                (b + per_iter) * lp.trips as f64
            }
            StmtKind::DoWhile { body, .. } => {
                let Some(lp) = self.loop_setup(s) else { return self.count(body) };
                let b = self.count(body);
                self.forget_assigned(body);
                (b + lp.header_ops) * lp.trips as f64
            }
            _ => 0.0,
        }
    }

    fn forget_assigned(&mut self, s: &Stmt) {
        let mut names = Vec::new();
        s.walk(&mut |x| {
            for e in x.own_exprs() {
                e.walk(&mut |y| match y {
                    Expr::Assign { lhs, .. } | Expr::PostInc(lhs) | Expr::PostDec(lhs) => {
                        if let Expr::Ident(n) = unparen(lhs) {
                            names.push(n.clone());
                        }
                    }
                    Expr::Unary { op: UnOp::PreInc | UnOp::PreDec, expr } => {
                        if let Expr::Ident(n) = unparen(expr) {
                            names.push(n.clone());
                        }
                    }
                    _ => {}
                });
            }
        });
        for n in names {
            self.set(&n, None);
        }
    }

    /// Runs the loop initialiser and derives the trip count. Unknown trip
    /// counts default to one with a warning.
    fn loop_setup(&mut self, s: &Stmt) -> Option<LoopInfo> {
        let mut header_ops = 0.0;
        let (var, cond, step_delta) = match &s.kind {
            StmtKind::For { init, cond, step, .. } => {
                match init {
                    Some(ForInit::Expr(e)) => {
                        header_ops += self.expr_cost(e);
                        self.eval_mut(e);
                    }
                    Some(ForInit::Decl(d)) => {
                        for dc in &d.declarators {
                            self.declare(d, dc, false);
                        }
                    }
                    None => {}
                }
                if let Some(c) = cond {
                    header_ops += expr_ops(c);
                }
                if let Some(st) = step {
                    header_ops += expr_ops(st);
                }
                let delta = step.as_ref().and_then(|st| step_of(st));
                (delta.as_ref().map(|d| d.0.clone()), cond.clone(), delta.map(|d| d.1))
            }
            StmtKind::While { cond, body } | StmtKind::DoWhile { cond, body } => {
                header_ops += expr_ops(cond);
                let delta = top_level_step(body, cond);
                (delta.as_ref().map(|d| d.0.clone()), Some(cond.clone()), delta.map(|d| d.1))
            }
            _ => return None,
        };
        let trips = (|| {
            let var = var.clone()?;
            let step = step_delta?;
            let start = match self.get(&var)? {
                Val::I(i) => i,
                Val::F(_) => return None,
            };
            let (op, bound) = cond_bound(cond.as_ref()?, &var)?;
            let bound = match self.eval(bound)? {
                Val::I(i) => i,
                Val::F(f) => f.ceil() as i64,
            };
            let trips = trip_count(start, step, op, bound)?;
            Some(LoopInfo { var: Some(var), start, step, trips, header_ops })
        })();
        match trips {
            Some(t) => Some(t),
            None => {
                self.warn(format!("trip count of loop at line {} unknown, assuming 1", s.pos.line));
                Some(LoopInfo { var: None, start: 0, step: 0, trips: 1, header_ops })
            }
        }
    }

    // ---- residency-aware execution ----

    fn cpu(&mut self, ops: f64) {
        self.counters.cpu_ops += ops;
        let dt = ops / self.params.cpu_throughput;
        for t in &mut self.timing {
            t.2 += dt;
        }
    }

    fn res(&mut self, var: &str) -> &mut Residency {
        self.state.res.entry(var.to_string()).or_insert_with(Residency::fresh)
    }

    fn bytes(&mut self, var: &str, size_expr: Option<&str>) -> f64 {
        if let Some(&b) = self.sizes.get(var) {
            return b;
        }
        if let Some(e) = size_expr.and_then(|t| crate::cfront::parser::parse_expr(t).ok()) {
            if let Some(v) = self.eval(&e) {
                let elem = self.table.symbols().find(|s| s.name == var).map_or(8, |s| s.elem_size()) as f64;
                return v.f() * elem;
            }
        }
        self.warn(format!("size of `{var}` unknown, transfers counted as empty"));
        0.0
    }

    fn upload(&mut self, var: &str, space: &str, scalar: bool, label: Option<&str>, size: Option<&str>) {
        let r = self.res(var).clone();
        if !r.host {
            self.violation(var, r.last_writer.as_deref().or(label), "upload of a stale host copy");
        }
        if scalar {
            self.counters.scalar_h2d += 1;
        } else {
            let b = self.bytes(var, size);
            self.counters.h2d += 1;
            self.counters.h2d_bytes += b;
        }
        self.res(var).dev.insert(space.to_string());
    }

    fn download(&mut self, var: &str, space: &str, scalar: bool, label: Option<&str>) {
        let r = self.res(var).clone();
        if !r.dev.contains(space) {
            self.violation(var, label, "download of a stale device copy");
        }
        if scalar {
            self.counters.scalar_d2h += 1;
        } else {
            let b = self.bytes(var, None);
            self.counters.d2h += 1;
            self.counters.d2h_bytes += b;
        }
        let r = self.res(var);
        r.host = true;
        r.last_writer = None;
    }

    fn cpu_access(&mut self, at: StmtId, accesses: &[(String, AccessKind)]) {
        for (name, kind) in accesses {
            if !self.tracked.contains(name) {
                continue;
            }
            let scalar = self.table.resolve(at, name).is_some_and(|s| s.is_scalar());
            let r = self.res(name).clone();
            let full_write = *kind == AccessKind::Write && scalar;
            if !r.host && !full_write {
                self.violation(name, r.last_writer.as_deref(), "host accesses a stale copy");
            }
            if *kind == AccessKind::Write {
                let r = self.res(name);
                r.host = true;
                r.dev.clear();
                r.last_writer = None;
            }
        }
    }

    fn stmt_cpu_accesses(&mut self, s: &Stmt) -> Vec<(String, AccessKind)> {
        self.fx.stmt_accesses(self.table, s).into_iter().map(|a| (a.name, a.kind)).collect()
    }

    fn space(&self, group: Option<&str>, label: &str, arg: &str) -> String {
        match group {
            Some(g) if self.mapped.get(g).is_some_and(|m| m.iter().any(|x| x == arg)) => format!("g:{g}"),
            _ => format!("c:{label}"),
        }
    }

    fn directive(&mut self, d: &HmppDirective) {
        let label = d.label.clone().unwrap_or_default();
        let group = d.group.clone();
        match d.kind {
            HmppKind::AdvancedLoad => {
                for a in d.arg_names() {
                    let (var, scalar) = addr_var(d.addr_of(a).unwrap_or(a));
                    let space = self.space(group.as_deref(), &label, a);
                    let size = self.codelets.get(&label).and_then(|c| c.params.iter().find(|p| p.name == a)).and_then(|p| p.size.clone());
                    self.upload(&var, &space, scalar, Some(&label), size.as_deref());
                }
            }
            HmppKind::DelegatedStore => {
                if self.timing.iter().any(|t| t.0 == label) {
                    self.violation("", Some(&label), "delegatedstore before synchronize");
                }
                for a in d.arg_names() {
                    let (var, scalar) = addr_var(d.addr_of(a).unwrap_or(a));
                    let space = self.space(group.as_deref(), &label, a);
                    self.download(&var, &space, scalar, Some(&label));
                }
            }
            HmppKind::Synchronize => {
                if let Some(k) = self.timing.iter().position(|t| t.0 == label) {
                    let (_, kt, acc) = self.timing.remove(k);
                    self.counters.overlap_s += kt.min(acc);
                }
                let group_of = self.codelets.get(&label).and_then(|c| c.group.clone());
                for (var, scalar) in self.state.deferred.remove(&label).unwrap_or_default() {
                    let space = self.space(group_of.as_deref(), &label, &var);
                    self.download(&var, &space, scalar, Some(&label));
                }
            }
            HmppKind::Release => {
                let mut spaces = Vec::new();
                match (&group, &d.label) {
                    (Some(g), None) => {
                        spaces.push(format!("g:{g}"));
                        for (l, c) in &self.codelets {
                            if c.group.as_deref() == Some(g) {
                                spaces.push(format!("c:{l}"));
                            }
                        }
                    }
                    _ => spaces.push(format!("c:{label}")),
                }
                for r in self.state.res.values_mut() {
                    for sp in &spaces {
                        r.dev.remove(sp);
                    }
                }
            }
            _ => {}
        }
    }

    fn callsite(&mut self, s: &Stmt, callee: &str, args: &[Expr]) {
        let site = s.pragmas.iter().find_map(|p| match p {
            Pragma::Hmpp(d) if d.kind == HmppKind::Callsite => Some(d.clone()),
            _ => None,
        });
        let noupdate: Vec<String> = site.as_ref().map(|d| d.noupdate_args().into_iter().map(str::to_string).collect()).unwrap_or_default();
        let asynchronous = site.as_ref().is_some_and(|d| d.asynchronous);
        let c = &self.codelets[callee];
        let group = c.group.clone();
        let def = c.def;
        let plan: Vec<(String, bool, Io, Option<String>, bool, bool)> = c
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (p.name.clone(), p.pointer, p.io, p.size.clone(), c.reads.get(i).copied().unwrap_or(true), c.writes.get(i).copied().unwrap_or(true))
            })
            .collect();

        // Scalar arguments are read on the host.
        let mut reads = Vec::new();
        for ((_, pointer, ..), a) in plan.iter().zip(args) {
            if !pointer {
                for acc in self.fx.expr_accesses(self.table, s.id, a) {
                    reads.push((acc.name, acc.kind));
                }
            }
        }
        self.cpu_access(s.id, &reads);

        let mut outs = Vec::new();
        for ((name, pointer, io, size, body_reads, body_writes), a) in plan.iter().zip(args) {
            if !pointer {
                continue;
            }
            let Some(var) = host_var(a) else { continue };
            let scalar = matches!(a, Expr::Unary { op: UnOp::Addr, .. });
            let space = self.space(group.as_deref(), callee, name);
            if io.reads() && !noupdate.contains(name) {
                self.upload(var, &space, scalar, Some(callee), size.as_deref());
            }
            if *body_reads && !self.res(var).dev.contains(&space) {
                self.violation(var, Some(callee), "kernel reads a stale device copy");
            }
            if *body_writes {
                outs.push((var.to_string(), name.clone(), space, scalar, *io));
            }
        }

        // Kernel execution.
        let bound: HashMap<String, Val> = def
            .params
            .iter()
            .zip(args)
            .filter(|(p, _)| p.decl.pointers == 0 && p.decl.dims.is_empty())
            .filter_map(|(p, a)| self.eval(a).map(|v| (p.decl.name.clone(), v)))
            .collect();
        let saved = std::mem::replace(&mut self.env, bound);
        let ops = def.body.as_ref().map_or(0.0, |b| self.count(b));
        self.env = saved;
        self.counters.launches += 1;
        self.counters.gpu_ops += ops;
        let kt = ops / self.params.gpu_throughput + self.params.kernel_launch_overhead;
        if asynchronous {
            self.timing.push((callee.to_string(), kt, 0.0));
        }

        for (var, name, space, scalar, io) in outs {
            let r = self.res(&var);
            r.host = false;
            r.dev.clear();
            r.dev.insert(space.clone());
            r.last_writer = Some(callee.to_string());
            let mapped = space.starts_with("g:");
            if io.writes() && !mapped && !self.stores.contains(&(callee.to_string(), name.clone())) {
                if asynchronous {
                    self.state.deferred.entry(callee.to_string()).or_default().push((var, scalar));
                } else {
                    self.download(&var, &space, scalar, Some(callee));
                }
            }
        }
    }

    fn exec_function(&mut self, f: &FunctionDef, args: &[Expr]) {
        let Some(body) = &f.body else { return };
        if self.depth >= CALL_DEPTH {
            return;
        }
        let bound: HashMap<String, Val> = f
            .params
            .iter()
            .zip(args)
            .filter(|(p, _)| p.decl.pointers == 0 && p.decl.dims.is_empty() && !p.decl.reference)
            .filter_map(|(p, a)| self.eval(a).map(|v| (p.decl.name.clone(), v)))
            .collect();
        let saved = std::mem::replace(&mut self.env, bound);
        self.depth += 1;
        self.exec(body);
        self.depth -= 1;
        self.env = saved;
    }

    fn exec(&mut self, s: &Stmt) -> Flow {
        if !self.relevant.contains(&s.id) {
            let ops = self.count(s);
            self.cpu(ops);
            return Flow::Normal;
        }
        match &s.kind {
            StmtKind::Directive(d) => {
                self.directive(d);
                Flow::Normal
            }
            StmtKind::Expr(Expr::Call { callee, args }) if self.codelets.contains_key(callee) => {
                self.callsite(s, callee, args);
                Flow::Normal
            }
            StmtKind::Decl(d) => {
                let declared: Vec<&str> = d.declarators.iter().map(|dc| dc.name.as_str()).collect();
                let acc: Vec<_> = self.stmt_cpu_accesses(s).into_iter().filter(|(n, _)| !declared.contains(&n.as_str())).collect();
                self.cpu_access(s.id, &acc);
                for n in declared {
                    self.state.res.remove(n);
                }
                let mut n = 0.0;
                for dc in &d.declarators {
                    if let Some(i) = &dc.init {
                        n += self.expr_cost(i);
                    }
                    self.declare(d, dc, false);
                }
                self.cpu(n);
                Flow::Normal
            }
            StmtKind::Expr(e) => {
                let acc = self.stmt_cpu_accesses(s);
                self.cpu_access(s.id, &acc);
                let unit = self.unit;
                let mut active = Vec::new();
                e.walk(&mut |x| {
                    if let Expr::Call { callee, args } = x {
                        if self.active_fns.contains(callee) {
                            active.push((callee.clone(), args.clone()));
                        }
                    }
                });
                let n = self.expr_cost(e);
                self.cpu(n);
                for (callee, args) in active {
                    if let Some(f) = unit.function(&callee) {
                        self.exec_function(f, &args);
                    }
                }
                self.eval_mut(e);
                Flow::Normal
            }
            StmtKind::Return(e) => {
                let acc = self.stmt_cpu_accesses(s);
                self.cpu_access(s.id, &acc);
                if let Some(e) = e {
                    let n = self.expr_cost(e);
                    self.cpu(n);
                }
                Flow::Return
            }
            StmtKind::Block(v) => {
                for c in v {
                    if let Flow::Return = self.exec(c) {
                        return Flow::Return;
                    }
                }
                Flow::Normal
            }
            StmtKind::If { cond, then, els } => {
                let acc = self.stmt_cpu_accesses(s);
                self.cpu_access(s.id, &acc);
                let n = self.expr_cost(cond);
                self.cpu(n);
                match self.eval_mut(cond).map(Val::truthy) {
                    Some(true) => self.exec(then),
                    Some(false) => match els {
                        Some(e) => self.exec(e),
                        None => Flow::Normal,
                    },
                    None => {
                        let (st0, c0, env0) = (self.state.clone(), self.counters.clone(), self.env.clone());
                        let f1 = self.exec(then);
                        let (st1, c1) = (self.state.clone(), self.counters.clone());
                        self.state = st0;
                        self.counters = c0;
                        self.env = env0;
                        let f2 = match els {
                            Some(e) => self.exec(e),
                            None => Flow::Normal,
                        };
                        self.state.merge(&st1);
                        self.counters = self.counters.max(&c1);
                        self.forget_assigned(s);
                        match (f1, f2) {
                            (Flow::Return, Flow::Return) => Flow::Return,
                            _ => Flow::Normal,
                        }
                    }
                }
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => {
                let acc = self.stmt_cpu_accesses(s);
                self.cpu_access(s.id, &acc);
                let lp = self.loop_setup(s).expect("loop");
                self.run_loop(&lp, body)
            }
            _ => Flow::Normal,
        }
    }

    /// Executes iterations until the transfer state repeats, then
    /// extrapolates the per-cycle counter delta over the remaining trips.
    fn run_loop(&mut self, lp: &LoopInfo, body: &Stmt) -> Flow {
        let mut states = vec![self.state.clone()];
        let mut deltas: Vec<Counters> = Vec::new();
        let mut it = 0u64;
        while it < lp.trips {
            if let Some(var) = &lp.var {
                self.set(var, Some(Val::I(lp.start + lp.step * it as i64)));
            }
            let c0 = self.counters.clone();
            let flow = self.exec(body);
            self.cpu(lp.header_ops);
            deltas.push(self.counters.minus(&c0));
            it += 1;
            if let Flow::Return = flow {
                return Flow::Return;
            }
            if let Some(j) = states.iter().position(|x| *x == self.state) {
                let period = it as usize - j;
                let remaining = lp.trips - it;
                let cycles = remaining / period as u64;
                let rest = (remaining % period as u64) as usize;
                for d in &deltas[j..j + period] {
                    self.counters.add_scaled(d, cycles);
                }
                for d in &deltas[j..j + rest] {
                    self.counters.add_scaled(d, 1);
                }
                self.state = states[j + rest].clone();
                break;
            }
            states.push(self.state.clone());
            if it >= LOOP_CAP {
                let last = deltas.last().cloned().unwrap_or_default();
                self.counters.add_scaled(&last, lp.trips - it);
                self.warn("loop transfer state did not settle; extrapolated from the last iteration".into());
                break;
            }
        }
        self.forget_assigned(body);
        if let Some(var) = &lp.var {
            self.set(var, Some(Val::I(lp.start + lp.step * lp.trips as i64)));
        }
        Flow::Normal
    }

    fn finish(self) -> SimReport {
        let p = self.params;
        let c = self.counters;
        let cpu_s = c.cpu_ops / p.cpu_throughput;
        let gpu_s = c.gpu_ops / p.gpu_throughput + c.launches as f64 * p.kernel_launch_overhead;
        let transfer_s = (c.h2d_bytes + c.scalar_h2d as f64 * 8.0) / p.h2d_bandwidth + (c.d2h_bytes + c.scalar_d2h as f64 * 8.0) / p.d2h_bandwidth;
        let time_s = (cpu_s + gpu_s + transfer_s - c.overlap_s).max(cpu_s);
        let energy_j = p.power_cpu_active * cpu_s + p.power_cpu_idle * (time_s - cpu_s) + p.power_gpu_active * gpu_s + p.power_memory * time_s;
        SimReport {
            counters: c,
            violations: self.violations.into_iter().collect(),
            warnings: self.warnings.into_iter().collect(),
            cpu_s,
            gpu_s,
            transfer_s,
            time_s,
            energy_j,
        }
    }
}

struct LoopInfo {
    var: Option<String>,
    start: i64,
    step: i64,
    trips: u64,
    header_ops: f64,
}

/// Host variable named by a callsite argument (`x`, `&x`).
fn host_var(a: &Expr) -> Option<&str> {
    match unparen(a) {
        Expr::Ident(n) => Some(n),
        Expr::Unary { op: UnOp::Addr, expr } => expr.base_ident(),
        _ => None,
    }
}

/// Host variable of an `addr` value; `&x` designates a scalar.
fn addr_var(addr: &str) -> (String, bool) {
    match addr.trim().strip_prefix('&') {
        Some(v) => (v.trim().to_string(), true),
        None => (addr.trim().to_string(), false),
    }
}

/// `i++`, `i += c`, `i = i + c` and their decrements.
fn step_of(e: &Expr) -> Option<(String, i64)> {
    match unparen(e) {
        Expr::PostInc(x) | Expr::Unary { op: UnOp::PreInc, expr: x } => Some((unparen(x).base_ident()?.to_string(), 1)).filter(|_| matches!(unparen(x), Expr::Ident(_))),
        Expr::PostDec(x) | Expr::Unary { op: UnOp::PreDec, expr: x } => Some((unparen(x).base_ident()?.to_string(), -1)).filter(|_| matches!(unparen(x), Expr::Ident(_))),
        Expr::Assign { op, lhs, rhs } => {
            let Expr::Ident(v) = unparen(lhs) else { return None };
            let lit = |e: &Expr| match unparen(e) {
                Expr::Int(s) => parse_int(s),
                _ => None,
            };
            match op {
                AssignOp::Add => Some((v.clone(), lit(rhs)?)),
                AssignOp::Sub => Some((v.clone(), -lit(rhs)?)),
                AssignOp::Assign => match unparen(rhs) {
                    Expr::Binary { op: BinOp::Add, lhs: a, rhs: b } if matches!(unparen(a), Expr::Ident(n) if n == v) => Some((v.clone(), lit(b)?)),
                    Expr::Binary { op: BinOp::Sub, lhs: a, rhs: b } if matches!(unparen(a), Expr::Ident(n) if n == v) => Some((v.clone(), -lit(b)?)),
                    _ => None,
                },
                _ => None,
            }
        }
        _ => None,
    }
}

/// Counter step of a `while` body: a top-level `v++`-style statement.
fn top_level_step(body: &Stmt, cond: &Expr) -> Option<(String, i64)> {
    let stmts: Vec<&Stmt> = match &body.kind {
        StmtKind::Block(v) => v.iter().collect(),
        _ => vec![body],
    };
    let steps: Vec<(String, i64)> = stmts
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::Expr(e) => step_of(e),
            _ => None,
        })
        .filter(|(v, _)| cond_bound(cond, v).is_some())
        .collect();
    if steps.len() == 1 {
        steps.into_iter().next()
    } else {
        None
    }
}

/// Normalises a loop condition to `var <op> bound`.
fn cond_bound<'e>(cond: &'e Expr, var: &str) -> Option<(BinOp, &'e Expr)> {
    let Expr::Binary { op, lhs, rhs } = unparen(cond) else { return None };
    let is_var = |e: &Expr| matches!(unparen(e), Expr::Ident(n) if n == var);
    if is_var(lhs) {
        Some((*op, rhs))
    } else if is_var(rhs) {
        let flipped = match op {
            BinOp::Lt => BinOp::Gt,
            BinOp::Gt => BinOp::Lt,
            BinOp::Le => BinOp::Ge,
            BinOp::Ge => BinOp::Le,
            o => *o,
        };
        Some((flipped, lhs))
    } else {
        None
    }
}

fn trip_count(start: i64, step: i64, op: BinOp, bound: i64) -> Option<u64> {
    if step == 0 {
        return None;
    }
    let span = |lo: i64, hi: i64, s: i64| -> u64 {
        if hi <= lo {
            0
        } else {
            ((hi - lo + s - 1) / s) as u64
        }
    };
    match (op, step > 0) {
        (BinOp::Lt, true) => Some(span(start, bound, step)),
        (BinOp::Le, true) => Some(span(start, bound + 1, step)),
        (BinOp::Ne, true) if bound >= start && (bound - start) % step == 0 => Some(((bound - start) / step) as u64),
        (BinOp::Gt, false) => Some(span(bound, start, -step)),
        (BinOp::Ge, false) => Some(span(bound - 1, start, -step)),
        (BinOp::Ne, false) if start >= bound && (start - bound) % -step == 0 => Some(((start - bound) / -step) as u64),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::parse_translation_unit;

    #[test]
    fn trip_counts() {
        assert_eq!(trip_count(0, 1, BinOp::Lt, 10), Some(10));
        assert_eq!(trip_count(1, 1, BinOp::Lt, 5001), Some(5000));
        assert_eq!(trip_count(0, 2, BinOp::Lt, 5), Some(3));
        assert_eq!(trip_count(0, 1, BinOp::Le, 10), Some(11));
        assert_eq!(trip_count(10, -1, BinOp::Gt, 0), Some(10));
        assert_eq!(trip_count(10, -1, BinOp::Ge, 0), Some(11));
        assert_eq!(trip_count(5, 1, BinOp::Lt, 0), Some(0));
        assert_eq!(trip_count(0, 1, BinOp::Gt, 10), None);
    }

    #[test]
    fn cpu_only_program_counts_ops() {
        let u = parse_translation_unit("int main() { int i; double s = 0; for (i = 0; i < 100; i++) { s = s + i * 2; } return 0; }").unwrap();
        let r = simulate(&u, &CostModelParams::default()).unwrap();
        assert_eq!(r.counters.cpu_ops, 200.0);
        assert_eq!(r.counters.launches, 0);
        assert!(r.is_sound());
    }

    #[test]
    fn while_loop_with_counter() {
        let u = parse_translation_unit("int main() { int a = 0; double s = 0; while (a < 10) { s += 1; a++; } return 0; }").unwrap();
        let r = simulate(&u, &CostModelParams::default()).unwrap();
        assert_eq!(r.counters.cpu_ops, 10.0);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn unknown_trip_count_warns() {
        let u = parse_translation_unit("int n; int main() { int i; double s = 0; for (i = 0; i < n; i++) { s += 1; } return 0; }").unwrap();
        let r = simulate(&u, &CostModelParams::default()).unwrap();
        assert_eq!(r.counters.cpu_ops, 1.0);
        assert_eq!(r.warnings.len(), 1);
    }

    const PLAIN: &str = "double a[100];
#pragma hmpp k codelet, target=CUDA, args[a].io=inout
void k(int i, double a[100]) {
    for (i = 0; i < 100; i++) { a[i] = a[i] * 2; }
}
int main() {
    int i, t;
    for (i = 0; i < 100; i++) { a[i] = i; }
    for (t = 0; t < 10; t++) {
#pragma hmpp k callsite
        k(i, a);
    }
    printf(\"%f\", a[3]);
    return 0;
}";

    #[test]
    fn plain_callsite_moves_data_every_call() {
        let u = parse_translation_unit(PLAIN).unwrap();
        let r = simulate(&u, &CostModelParams::default()).unwrap();
        assert!(r.is_sound(), "{:?}", r.violations);
        assert_eq!(r.counters.launches, 10);
        assert_eq!(r.counters.h2d, 10);
        assert_eq!(r.counters.d2h, 10);
        assert_eq!(r.counters.h2d_bytes, 8000.0);
        assert_eq!(r.counters.gpu_ops, 1000.0);
    }

    #[test]
    fn resident_data_moves_once() {
        let src = PLAIN
            .replace("#pragma hmpp k callsite", "#pragma hmpp k callsite, args[a].noupdate=true")
            .replace("    for (t = 0;", "#pragma hmpp k advancedload, args[a], args[a].addr=\"a\"\n    for (t = 0;")
            .replace("    printf", "#pragma hmpp k delegatedstore, args[a], args[a].addr=\"a\"\n    printf");
        let u = parse_translation_unit(&src).unwrap();
        let r = simulate(&u, &CostModelParams::default()).unwrap();
        assert!(r.is_sound(), "{:?}", r.violations);
        assert_eq!((r.counters.h2d, r.counters.d2h), (1, 1));
        let plain = simulate(&parse_translation_unit(PLAIN).unwrap(), &CostModelParams::default()).unwrap();
        assert!(r.time_s < plain.time_s && r.energy_j < plain.energy_j);
    }

    #[test]
    fn missing_store_is_a_violation() {
        let src = PLAIN
            .replace("#pragma hmpp k callsite", "#pragma hmpp k callsite, args[a].noupdate=true")
            .replace("    for (t = 0;", "#pragma hmpp k advancedload, args[a], args[a].addr=\"a\"\n    for (t = 0;")
            .replace("    printf", "#pragma hmpp k delegatedstore, args[a], args[a].addr=\"a\"\n    a[0] = 1;\n    printf")
            .replace("args[a].io=inout", "args[a].io=in");
        let u = parse_translation_unit(&src).unwrap();
        let r = simulate(&u, &CostModelParams::default()).unwrap();
        assert!(r.is_sound(), "{:?}", r.violations);
        let bad = src.replace("#pragma hmpp k delegatedstore, args[a], args[a].addr=\"a\"\n", "");
        let r = simulate(&parse_translation_unit(&bad).unwrap(), &CostModelParams::default()).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].var, "a");
        assert_eq!(r.violations[0].label.as_deref(), Some("k"));
    }

    #[test]
    fn invalid_params_rejected() {
        let p = CostModelParams { gpu_throughput: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = CostModelParams { power_memory: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
