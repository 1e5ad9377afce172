use std::fs;
use std::path::{Path, PathBuf};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["hmppify"];
    argv.extend_from_slice(args);
    let code = hmppify_cli::run(argv, &mut hmppify_cli::Io { out: &mut out, err: &mut err });
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SINGLE: &str = "\
double a[256], b[256];
int main() {
    int i, k;
    for (i = 0; i < 256; i++) { a[i] = i; }
    for (k = 0; k < 4; k++) {
#pragma omp parallel for check
        for (i = 0; i < 256; i++) { b[i] = a[i] * 2; }
        a[k] = b[k];
    }
    printf(\"%g\\n\", b[7]);
    return 0;
}
";

#[test]
fn pragma_free_file_is_copied_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let src = "int main() {\n  int x = 1;   /* spacing kept */\n  return x;\n}\n";
    let input = write(dir.path(), "plain.c", src);
    let out = dir.path().join("out");
    let (code, stdout, stderr) = run(&["transform", &s(&input), "--out", &s(&out)]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stderr.contains("warning"));
    assert_eq!(fs::read_to_string(out.join("plain.c")).unwrap(), src);
    assert!(stdout.starts_with("file\t"));
}

#[test]
fn recursion_on_kernel_path_fails() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "rec.c",
        "int f(int n) { int r = 0; if (n > 0) { r = f(n - 1) + 1; } return r; }\nint main() { int i; int a[8];\n#pragma omp parallel for check\nfor (i = 0; i < 8; i++) { a[i] = f(i); }\nreturn a[3]; }\n",
    );
    let (code, stdout, stderr) = run(&["transform", &s(&input), "--out", &s(&dir.path().join("o"))]);
    assert_ne!(code, 0);
    assert!(stderr.contains("recursive"), "{stderr}");
    assert!(stdout.is_empty());
}

#[test]
fn syntax_error_is_positioned_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.c", "int main() { int x = ; }\n");
    let (code, stdout, stderr) = run(&["transform", &s(&input), "--out", &s(&dir.path().join("o"))]);
    assert_ne!(code, 0);
    assert!(stdout.is_empty());
    assert!(stderr.contains("bad.c:1:"), "{stderr}");
}

#[test]
fn transform_renders_pinned_block_and_leaves_others() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "two.c",
        "double a[64], b[64];\nint main() {\n    int i;\n#pragma omp parallel for fixed(10,1,0)\n    for (i = 0; i < 64; i++) { a[i] = i; }\n#pragma omp parallel for\n    for (i = 0; i < 64; i++) { b[i] = a[i] + 1; }\n    return 0;\n}\n",
    );
    let out = dir.path().join("o");
    let (code, stdout, stderr) = run(&["transform", &s(&input), "--out", &s(&out)]);
    assert_eq!(code, 0, "{stderr}");
    let text = fs::read_to_string(out.join("two__10_1_0.c")).unwrap();
    assert!(text.contains("_instr_for_ol_4_main codelet"));
    assert!(text.contains("delegatedstore") && text.contains("release"));
    assert!(text.contains("#pragma omp parallel for\n"));
    assert!(!text.contains("fixed("));
    assert!(fs::read_to_string(out.join("manifest.txt")).unwrap().contains("signature = 10, 1, 0"));
    assert!(stdout.contains("two__10_1_0.c"));
}

#[test]
fn explore_single_block_measures_22_variants() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "one.c", SINGLE);
    let out = dir.path().join("o");
    let (code, stdout, stderr) = run(&["explore", &s(&input), "--out", &s(&out), "--reps", "2"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.starts_with("measured\t22\tfailed\t0\n"), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("pareto\t")));
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 23);
    assert!(csv.lines().nth(1).unwrap().starts_with("Original(OpenMP),\"0, 0, 0\","));
    assert_eq!(fs::read_dir(out.join("logs")).unwrap().count(), 22);
    for f in ["speedup.dat", "tradeoff.dat", "gops.dat"] {
        assert!(fs::read_to_string(out.join(f)).unwrap().starts_with('#'));
    }
}

#[test]
fn explore_respects_cap_and_block_selection() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "one.c", SINGLE);
    let (code, _, stderr) = run(&["explore", &s(&input), "--out", &s(&dir.path().join("o")), "--cap", "10"]);
    assert_ne!(code, 0);
    assert!(stderr.contains("exceed the cap"), "{stderr}");
    let (code, _, stderr) = run(&["explore", &s(&input), "--out", &s(&dir.path().join("o2")), "--blocks", "99"]);
    assert_ne!(code, 0);
    assert!(stderr.contains("no block"), "{stderr}");
}

#[test]
fn shell_executor_failures_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "one.c", SINGLE);
    let conf = write(dir.path(), "shell.conf", "mode = shell\nbuild = false {file}\nrun = {file}.bin\ntimeout = 5\nenergy_file = /nonexistent\n");
    let out = dir.path().join("o");
    let (code, stdout, stderr) = run(&["explore", &s(&input), "--out", &s(&out), "--executor", &s(&conf), "--reps", "1"]);
    assert_ne!(code, 0);
    assert!(stdout.starts_with("measured\t0\tfailed\t22\n"), "{stdout}");
    assert!(stderr.contains("build failed"));
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",,,build failed with exit status 1"), "{csv}");
}

#[test]
fn bad_executor_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "one.c", SINGLE);
    let conf = write(dir.path(), "x.conf", "mode = simulated\nh2d_bandwidth = -1\n");
    let (code, _, stderr) = run(&["explore", &s(&input), "--out", &s(&dir.path().join("o")), "--executor", &s(&conf)]);
    assert_ne!(code, 0);
    assert!(stderr.contains("h2d_bandwidth"), "{stderr}");
}

#[test]
fn zero_repetitions_rejected() {
    let (code, _, _) = run(&["explore", "x.c", "--out", "o", "--reps", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn shipped_config_parses() {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../config/simulated.conf");
    assert!(hmppify::explore::ExecutorSpec::load(&p).is_ok());
}

#[test]
fn report_on_recorded_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let csv = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/recorded_jacobi.csv");
    let (code, stdout, stderr) = run(&["report", &s(&csv), "--out", &s(dir.path()), "--ops", "1e12"]);
    assert_eq!(code, 0, "{stderr}");
    let pareto: Vec<&str> = stdout.lines().filter(|l| l.starts_with("pareto")).collect();
    assert_eq!(pareto, vec!["pareto\tAdv_loaddelStoreNoUpdate...\t9, 1, 0\t9611\t3401.55"]);
    assert!(stdout.contains("speedup\tAdv_loaddelStoreNoUpdate...\t9, 1, 0\t6.190823"));
    assert_eq!(stdout.lines().filter(|l| l.starts_with("gops_per_watt")).count(), 5);
}

#[test]
fn report_baseline_only() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "r.csv", "Version/Measure,Signature,Time Expended(ms.),Energy Consumption(J.)\nOriginal(OpenMP),\"0, 0, 0\",100,10\n");
    let (code, stdout, _) = run(&["report", &s(&csv)]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "pareto\tOriginal(OpenMP)\t0, 0, 0\t100\t10\nspeedup\tOriginal(OpenMP)\t0, 0, 0\t1.000000\n");
    assert!(dir.path().join("speedup.dat").exists());
}

#[test]
fn report_without_header_fails() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "r.csv", "Original(OpenMP),\"0, 0, 0\",100,10\n");
    let (code, stdout, stderr) = run(&["report", &s(&csv)]);
    assert_ne!(code, 0);
    assert!(stdout.is_empty());
    assert!(stderr.contains("header"));
}

#[test]
fn custom_baseline_designation() {
    let dir = tempfile::tempdir().unwrap();
    let csv = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/recorded_jacobi.csv");
    let (code, stdout, _) = run(&["report", &s(&csv), "--out", &s(dir.path()), "--baseline", "9,1,0"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("speedup\tAdv_loaddelStoreNoUpdate...\t9, 1, 0\t1.000000"));
}
