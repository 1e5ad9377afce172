use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::cfront::{parse_translation_unit, print_stmt};
use crate::transform::{find_omp_blocks, outline_block};
use crate::variants::{decode_signature, FlagSet, Signature};

const JACOBI: &str = include_str!("../../tests/fixtures/jacobi_group.c");

struct Outlined {
    unit: SourceUnit,
    codelets: Vec<CodeletDef>,
    contexts: BTreeMap<String, ContextTable>,
}

fn outline_all(src: &str) -> Outlined {
    let mut unit = parse_translation_unit(src).unwrap();
    let blocks = find_omp_blocks(&unit);
    let mut codelets = Vec::new();
    for b in &blocks {
        let table = SymbolTable::build(&unit).unwrap();
        let fx = Effects::build(&unit, &table);
        let (c, _) = outline_block(&mut unit, &table, &fx, b).unwrap();
        codelets.push(c);
    }
    let table = SymbolTable::build(&unit).unwrap();
    let fx = Effects::build(&unit, &table);
    let mut contexts = BTreeMap::new();
    for c in &codelets {
        if !contexts.contains_key(&c.host_function) {
            let ctx = build_context_table(&unit, &table, &fx, &codelets, &c.host_function).unwrap();
            contexts.insert(c.host_function.clone(), ctx);
        }
    }
    Outlined { unit, codelets, contexts }
}

fn plan(o: &Outlined, flags: &[FlagSet]) -> TransferPlan {
    let none = BTreeSet::new();
    let demoted = BTreeSet::new();
    build_transfer_plan(&PlanInput { codelets: &o.codelets, flags, contexts: &o.contexts, unmapped: &none, demoted: &demoted })
}

/// Text of the statement an insertion point is anchored on.
fn anchor_text(o: &Outlined, at: InsertionPoint) -> String {
    let body = o.unit.function("main").unwrap().body.as_ref().unwrap();
    print_stmt(body.find(at.anchor).unwrap(), 0).lines().next().unwrap().trim().to_string()
}

fn flags(a: u32, b: u32) -> FlagSet {
    decode_signature(Signature(a, b, 0)).unwrap()
}

#[test]
fn kernel_events_come_from_param_facts() {
    let o = outline_all(JACOBI);
    let ctx = &o.contexts["main"];
    assert_eq!(ctx.kernels.len(), 2);
    let k1 = ctx.kernel(0).unwrap().callsite;
    let on_k1: Vec<(String, Host, AccessKind)> =
        ctx.events.iter().filter(|e| e.site == k1 && e.host != Host::Cpu).map(|e| (e.symbol.clone(), e.host, e.kind)).collect();
    assert_eq!(
        on_k1,
        vec![("myTable".to_string(), Host::Gpu(0), AccessKind::Read), ("myTableOut".to_string(), Host::Gpu(0), AccessKind::Write)]
    );
    let loops = &ctx.events.iter().find(|e| e.site == k1).unwrap().loop_path;
    assert_eq!(loops.len(), 1);
    assert!(ctx.dump().contains("myTableOut W gpu0"));
}

#[test]
fn io_direction_follows_kernel_accesses() {
    let o = outline_all(JACOBI);
    assert_eq!(infer_io_direction(&o.codelets[0], "myTable"), Some(Io::In));
    assert_eq!(infer_io_direction(&o.codelets[0], "myTableOut"), Some(Io::Out));
    assert_eq!(infer_io_direction(&o.codelets[1], "myTable"), Some(Io::InOut));
    assert_eq!(infer_io_direction(&o.codelets[1], "myTableOut"), Some(Io::In));
    assert_eq!(infer_io_direction(&o.codelets[1], "i"), None);
}

#[test]
fn load_follows_last_host_write_outside_the_loop() {
    let o = outline_all(JACOBI);
    let ctx = &o.contexts["main"];
    let key = ctx.key_at(0, "myTable").unwrap();
    let at = last_cpu_write_site(ctx, &key, 0, &|k| k < 2);
    assert_eq!(at.position, Position::After);
    assert_eq!(anchor_text(&o, at), "init(myTable, myTableOut);");
    // In a separate space kernel 1 sees kernel 2's write at the end of the
    // previous iteration, so the load cannot leave the loop.
    let at = last_cpu_write_site(ctx, &key, 0, &|k| k == 0);
    assert_eq!(at, InsertionPoint::before(ctx.kernel(0).unwrap().callsite));
}

#[test]
fn grouped_plan_matches_resident_layout() {
    let o = outline_all(JACOBI);
    let p = plan(&o, &[flags(11, 3), flags(11, 3)]);
    assert_eq!(p.groups.len(), 1);
    let g = &p.groups[0];
    assert_eq!(g.label, "group0_12");
    assert_eq!(g.mapbyname, vec!["myTable".to_string(), "myTableOut".to_string()]);

    assert_eq!(p.loads.len(), 1);
    let load = &p.loads[0];
    assert_eq!(load.label, "_instr_for12_ol_12_main");
    assert_eq!(load.args.iter().map(|a| a.0.as_str()).collect::<Vec<_>>(), vec!["myTable", "myTableOut"]);
    assert_eq!(anchor_text(&o, load.at), "init(myTable, myTableOut);");
    assert_eq!(load.at.position, Position::After);

    assert_eq!(p.stores.len(), 1);
    let st = &p.stores[0];
    assert_eq!((st.label.as_str(), st.arg.as_str()), ("_instr_for12_ol_17_main", "myTable"));
    assert_eq!(anchor_text(&o, st.at), "displayRegion(myTable);");
    assert_eq!(st.at.position, Position::Before);

    assert_eq!(p.releases.len(), 1);
    assert_eq!(anchor_text(&o, p.releases[0].at), "displayRegion(myTable);");
    assert_eq!(p.releases[0].at.position, Position::After);

    for k in 0..2 {
        assert!(p.noupdate.contains(&(k, "myTable".to_string())));
        assert!(p.noupdate.contains(&(k, "myTableOut".to_string())));
    }
}

#[test]
fn ungrouped_store_waits_for_next_consumer() {
    let o = outline_all(JACOBI);
    // Kernel 1 alone with delegatedstore: kernel 2 uploads myTableOut right
    // after, so the store lands before the second callsite.
    let p = plan(&o, &[flags(0, 1), FlagSet::plain()]);
    assert_eq!(p.stores.len(), 1);
    assert_eq!(p.stores[0].arg, "myTableOut");
    assert_eq!(p.stores[0].at, InsertionPoint::before(o.contexts["main"].kernel(1).unwrap().callsite));
}

#[test]
fn async_kernel_is_synchronised_before_next_use() {
    let o = outline_all(JACOBI);
    let p = plan(&o, &[FlagSet::plain(), flags(4, 1)]);
    assert_eq!(p.syncs.len(), 1);
    assert_eq!(anchor_text(&o, p.syncs[0].at), "theDiffNorm = diffsum;");
    let reduced: Vec<_> = p.stores.iter().filter(|s| s.addr == "&diffsum").collect();
    assert_eq!(reduced.len(), 1);
    assert_eq!(reduced[0].at, p.syncs[0].at);
}

#[test]
fn plain_plan_is_empty() {
    let o = outline_all(JACOBI);
    let p = plan(&o, &[FlagSet::plain(), FlagSet::plain()]);
    assert_eq!(p.directive_count(), 0);
    assert!(p.groups.is_empty() && p.noupdate.is_empty());
}
