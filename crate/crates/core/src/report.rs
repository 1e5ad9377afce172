//! CSV output of measurements and the analyses run over them: speedup,
//! energy efficiency and the time/energy Pareto frontier.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::explore::Measurement;
use crate::variants::Signature;

pub const CSV_HEADER: [&str; 4] = ["Version/Measure", "Signature", "Time Expended(ms.)", "Energy Consumption(J.)"];

/// Up to two fractional digits, trailing zeros trimmed.
pub fn format_number(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Baseline first, then successful rows by ascending time, then failures.
fn csv_order(ms: &[Measurement]) -> Vec<&Measurement> {
    let mut v: Vec<&Measurement> = ms.iter().collect();
    v.sort_by(|a, b| {
        let rank = |m: &Measurement| match (m.is_ok(), m.signature == Signature::BASELINE) {
            (true, true) => 0,
            (true, false) => 1,
            (false, _) => 2,
        };
        rank(a)
            .cmp(&rank(b))
            .then(a.time_ms.total_cmp(&b.time_ms))
            .then_with(|| a.name.cmp(&b.name))
            .then(a.signature.cmp(&b.signature))
            .then(a.energy_j.total_cmp(&b.energy_j))
    });
    v
}

pub fn write_csv(ms: &[Measurement]) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for m in csv_order(ms) {
        let sig = m.signature.to_string();
        let row: Vec<String> = match &m.failure {
            None => vec![m.name.clone(), sig, format_number(m.time_ms), format_number(m.energy_j)],
            Some(reason) => vec![m.name.clone(), sig, String::new(), String::new(), reason.clone()],
        };
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Reads a report back. Each successful row yields one sample equal to its
/// printed values.
pub fn parse_csv(text: &str) -> Result<Vec<Measurement>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = r.records();
    let header = records.next().ok_or_else(|| Error::Csv("empty file".into()))??;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Csv(format!("expected header `{}`", CSV_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |msg: String| Error::Csv(format!("line {line}: {msg}"));
        let name = rec.get(0).unwrap_or("");
        let sig = Signature::parse(rec.get(1).unwrap_or("")).map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            let s = rec.get(i).unwrap_or("");
            s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(format!("`{s}` is not a number")))
        };
        match rec.len() {
            4 => out.push(Measurement::from_samples(name, sig, vec![(num(2)?, num(3)?)])?),
            5 if rec[2].is_empty() && rec[3].is_empty() => out.push(Measurement::failed(name, sig, &rec[4])),
            n => return Err(bad(format!("expected 4 columns (5 for a failed row), got {n}"))),
        }
    }
    Ok(out)
}

/// `baseline / variant` time; slowdowns give values below one.
pub fn speedup(baseline: &Measurement, variant: &Measurement) -> Result<f64> {
    if !(variant.time_ms > 0.0) {
        return Err(Error::Invalid(format!("{} has non-positive time {}", variant.name, variant.time_ms)));
    }
    Ok(baseline.time_ms / variant.time_ms)
}

/// Giga-operations per second per watt, which reduces to operations per
/// joule over 1e9.
pub fn gops_per_watt(op_count: f64, m: &Measurement) -> Result<f64> {
    if !(op_count > 0.0 && m.time_ms > 0.0 && m.energy_j > 0.0) {
        return Err(Error::Invalid(format!("GOPS/W needs positive operations, time and energy (got {op_count}, {}, {})", m.time_ms, m.energy_j)));
    }
    let secs = m.time_ms / 1000.0;
    Ok((op_count / secs) / 1e9 / (m.energy_j / secs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub name: String,
    pub signature: Signature,
    pub time_ms: f64,
    pub energy_j: f64,
    pub dominated: bool,
}

impl TradeoffPoint {
    pub fn dominates(&self, other: &TradeoffPoint) -> bool {
        self.time_ms <= other.time_ms && self.energy_j <= other.energy_j && (self.time_ms < other.time_ms || self.energy_j < other.energy_j)
    }
}

/// Indices of non-dominated points, ascending.
fn frontier_indices(points: &[TradeoffPoint]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].time_ms.total_cmp(&points[b].time_ms).then(points[a].energy_j.total_cmp(&points[b].energy_j)));
    let mut keep = Vec::new();
    let mut best_before = f64::INFINITY;
    let mut i = 0;
    while i < idx.len() {
        let t = points[idx[i]].time_ms;
        let mut j = i;
        while j < idx.len() && points[idx[j]].time_ms == t {
            j += 1;
        }
        // Within one time the lowest energy is sorted first; only ties with
        // it survive, and only if nothing faster is at least as frugal.
        let e = points[idx[i]].energy_j;
        if e < best_before {
            keep.extend(idx[i..j].iter().copied().filter(|&k| points[k].energy_j == e));
        }
        best_before = best_before.min(e);
        i = j;
    }
    keep.sort_unstable();
    keep
}

/// Points no other point dominates, in input order.
pub fn pareto_frontier(points: &[TradeoffPoint]) -> Vec<TradeoffPoint> {
    frontier_indices(points).into_iter().map(|i| TradeoffPoint { dominated: false, ..points[i].clone() }).collect()
}

/// Trade-off points of the successful measurements with `dominated` set.
pub fn tradeoff_points(ms: &[Measurement]) -> Vec<TradeoffPoint> {
    let mut pts: Vec<TradeoffPoint> = ms
        .iter()
        .filter(|m| m.is_ok())
        .map(|m| TradeoffPoint { name: m.name.clone(), signature: m.signature, time_ms: m.time_ms, energy_j: m.energy_j, dominated: true })
        .collect();
    for i in frontier_indices(&pts) {
        pts[i].dominated = false;
    }
    pts
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyRow {
    pub name: String,
    pub signature: Signature,
    pub speedup: f64,
    pub gops_per_watt: Option<f64>,
}

/// The designated baseline among successful measurements.
pub fn find_baseline(ms: &[Measurement], baseline: Signature) -> Result<&Measurement> {
    ms.iter()
        .filter(|m| m.is_ok() && m.signature == baseline)
        .min_by(|a, b| a.name.cmp(&b.name))
        .ok_or_else(|| Error::Invalid(format!("no successful measurement with baseline signature {baseline}")))
}

/// Speedup against `baseline` and, given an operation count, GOPS/W for
/// every successful measurement, in CSV order.
pub fn efficiency_rows(ms: &[Measurement], baseline: Signature, op_count: Option<f64>) -> Result<Vec<EfficiencyRow>> {
    let base = find_baseline(ms, baseline)?;
    let mut rows = Vec::new();
    for m in csv_order(ms).into_iter().filter(|m| m.is_ok()) {
        let speedup = if std::ptr::eq(m, base) { 1.0 } else { speedup(base, m)? };
        let gops_per_watt = op_count.map(|ops| gops_per_watt(ops, m)).transpose()?;
        rows.push(EfficiencyRow { name: m.name.clone(), signature: m.signature, speedup, gops_per_watt });
    }
    Ok(rows)
}

/// Writes `speedup.dat`, `tradeoff.dat` and `gops.dat` into `dir`:
/// whitespace-separated columns under a `#` header line. `gops.dat` has
/// rows only when GOPS/W was computed.
pub fn emit_plot_data(dir: &Path, ms: &[Measurement], points: &[TradeoffPoint], rows: &[EfficiencyRow]) -> Result<Vec<PathBuf>> {
    if ms.is_empty() {
        return Err(Error::Invalid("no measurements to plot".into()));
    }
    fs::create_dir_all(dir)?;
    let mut speed = String::from("# variant signature speedup\n");
    let mut gops = String::from("# variant signature gops_per_watt\n");
    for r in rows {
        let _ = writeln!(speed, "{} {} {}", r.name, r.signature.file_tag(), fmt_ratio(r.speedup));
        if let Some(g) = r.gops_per_watt {
            let _ = writeln!(gops, "{} {} {}", r.name, r.signature.file_tag(), fmt_ratio(g));
        }
    }
    let mut trade = String::from("# variant signature time_ms energy_j frontier\n");
    for p in points {
        let _ = writeln!(trade, "{} {} {} {} {}", p.name, p.signature.file_tag(), format_number(p.time_ms), format_number(p.energy_j), u8::from(!p.dominated));
    }
    let mut paths = Vec::new();
    for (file, body) in [("speedup.dat", speed), ("tradeoff.dat", trade), ("gops.dat", gops)] {
        let p = dir.join(file);
        fs::write(&p, body)?;
        paths.push(p);
    }
    Ok(paths)
}

fn fmt_ratio(x: f64) -> String {
    format!("{x:.6}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(name: &str, sig: (u32, u32, u32), t: f64, e: f64) -> Measurement {
        Measurement::from_samples(name, Signature(sig.0, sig.1, sig.2), vec![(t, e)]).unwrap()
    }

    fn pt(t: f64, e: f64) -> TradeoffPoint {
        TradeoffPoint { name: "v".into(), signature: Signature(0, 0, 1), time_ms: t, energy_j: e, dominated: false }
    }

    fn brute(points: &[TradeoffPoint]) -> Vec<usize> {
        (0..points.len()).filter(|&i| !points.iter().any(|q| q.dominates(&points[i]))).collect()
    }

    #[test]
    fn numbers_trim_to_two_decimals() {
        assert_eq!(format_number(59500.0), "59500");
        assert_eq!(format_number(3401.55), "3401.55");
        assert_eq!(format_number(10530.2), "10530.2");
        assert_eq!(format_number(1.005), "1");
        assert_eq!(format_number(-0.0), "0");
    }

    #[test]
    fn single_baseline_is_two_lines() {
        let text = write_csv(&[m("Original(OpenMP)", (0, 0, 0), 59500.0, 17428.0)]);
        assert_eq!(text, "Version/Measure,Signature,Time Expended(ms.),Energy Consumption(J.)\nOriginal(OpenMP),\"0, 0, 0\",59500,17428\n");
    }

    #[test]
    fn failures_keep_a_reason_column() {
        let ms = vec![Measurement::failed("Codelet", Signature(0, 0, 1), "build failed"), m("Original(OpenMP)", (0, 0, 0), 5.0, 1.0)];
        let text = write_csv(&ms);
        assert_eq!(text.lines().nth(2).unwrap(), "Codelet,\"0, 0, 1\",,,build failed");
        let back = parse_csv(&text).unwrap();
        assert_eq!(back[1], ms[0]);
    }

    #[test]
    fn malformed_csv_rejected() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("Original(OpenMP),\"0, 0, 0\",59500,17428\n").is_err());
        let h = CSV_HEADER.join(",");
        assert!(parse_csv(&format!("{h}\nX,\"1, 2\",1,2\n")).is_err());
        assert!(parse_csv(&format!("{h}\nX,\"0, 0, 1\",abc,2\n")).is_err());
        assert!(parse_csv(&format!("{h}\nX,\"0, 0, 1\",1\n")).is_err());
    }

    #[test]
    fn speedup_and_efficiency_examples() {
        let base = m("Original(OpenMP)", (0, 0, 0), 59500.0, 17428.0);
        let best = m("AdvLoadNoUpdateDelStore", (9, 1, 0), 9611.0, 3401.55);
        assert!((speedup(&base, &best).unwrap() - 59500.0 / 9611.0).abs() < 1e-12);
        assert_eq!(speedup(&base, &base).unwrap(), 1.0);
        assert_eq!(speedup(&m("a", (0, 0, 0), 100.0, 1.0), &m("b", (0, 0, 1), 200.0, 1.0)).unwrap(), 0.5);
        assert!(speedup(&base, &m("z", (0, 0, 1), 0.0, 1.0)).is_err());
        assert!((gops_per_watt(1e9, &m("a", (0, 0, 1), 10.0, 1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((gops_per_watt(2e9, &m("a", (0, 0, 1), 10.0, 4.0)).unwrap() - 0.5).abs() < 1e-12);
        assert!(gops_per_watt(0.0, &best).is_err());
        let ratio = gops_per_watt(1e12, &best).unwrap() / gops_per_watt(1e12, &base).unwrap();
        assert!((ratio - 17428.0 / 3401.55).abs() < 1e-9);
    }

    #[test]
    fn frontier_examples() {
        assert!(pareto_frontier(&[]).is_empty());
        assert_eq!(pareto_frontier(&[pt(1.0, 2.0), pt(2.0, 1.0)]).len(), 2);
        assert_eq!(pareto_frontier(&[pt(1.0, 1.0), pt(1.0, 1.0), pt(1.0, 2.0)]).len(), 2);
    }

    #[test]
    fn baseline_only_plots() {
        let dir = tempfile::tempdir().unwrap();
        let ms = vec![m("Original(OpenMP)", (0, 0, 0), 100.0, 10.0)];
        let rows = efficiency_rows(&ms, Signature::BASELINE, None).unwrap();
        emit_plot_data(dir.path(), &ms, &tradeoff_points(&ms), &rows).unwrap();
        let s = fs::read_to_string(dir.path().join("speedup.dat")).unwrap();
        assert_eq!(s.lines().skip(1).collect::<Vec<_>>(), vec!["Original(OpenMP) 0_0_0 1.000000"]);
        assert!(emit_plot_data(dir.path(), &[], &[], &[]).is_err());
    }

    fn coord() -> impl Strategy<Value = f64> {
        // Coarse grid so ties and duplicates are common.
        (0u32..20).prop_map(|x| x as f64)
    }

    proptest! {
        #[test]
        fn frontier_matches_brute_force(raw in proptest::collection::vec((coord(), coord()), 0..60)) {
            let pts: Vec<TradeoffPoint> = raw.iter().map(|&(t, e)| pt(t, e)).collect();
            prop_assert_eq!(frontier_indices(&pts), brute(&pts));
        }

        #[test]
        fn frontier_survives_axis_rescaling(raw in proptest::collection::vec((1u32..50, 1u32..50), 1..40), a in 1u32..9, b in 1u32..9) {
            let pts: Vec<TradeoffPoint> = raw.iter().map(|&(t, e)| pt(t as f64, e as f64)).collect();
            let scaled: Vec<TradeoffPoint> = raw.iter().map(|&(t, e)| pt(t as f64 * a as f64 / 7.0, e as f64 * b as f64 * 3.0)).collect();
            prop_assert_eq!(frontier_indices(&pts), frontier_indices(&scaled));
        }

        #[test]
        fn csv_round_trip(rows in proptest::collection::vec(("[A-Za-z()+ ,\"]{1,12}", 0u32..16, 0u32..4, 0u32..2, 0u64..10_000_000, 0u64..10_000_000, proptest::option::of("[a-z ,]{1,10}")), 1..20)) {
            let ms: Vec<Measurement> = rows
                .into_iter()
                .map(|(n, a, b, c, t, e, fail)| match fail {
                    None => Measurement::from_samples(&n, Signature(a, b, c), vec![(t as f64 / 100.0, e as f64 / 100.0)]).unwrap(),
                    Some(r) => Measurement::failed(&n, Signature(a, b, c), r),
                })
                .collect();
            let back = parse_csv(&write_csv(&ms)).unwrap();
            let expect: Vec<Measurement> = csv_order(&ms).into_iter().cloned().collect();
            prop_assert_eq!(back, expect);
        }
    }
}
