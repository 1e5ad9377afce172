//! Command-line front end: `transform`, `explore` and `report`.
//!
//! Diagnostics go to the error stream; the output stream carries only
//! tab-separated summary records so runs can be scripted.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hmppify::cfront::{parse_translation_unit, pragma_count};
use hmppify::emit::{write_variants, Session};
use hmppify::explore::{run_exploration, ExecutorSpec, Measurement, ReplayExecutor, VariantJob};
use hmppify::report::{efficiency_rows, emit_plot_data, parse_csv, tradeoff_points, write_csv, EfficiencyRow};
use hmppify::variants::{Signature, DEFAULT_CAP};
use hmppify::{Error, Severity};

#[derive(Debug, Parser)]
#[command(name = "hmppify", version, about = "Translate OpenMP loops to HMPP codelets and explore directive variants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render the pinned configuration: `fixed(a,b,c)` blocks as given,
    /// `check` blocks as plain codelets.
    Transform(TransformArgs),
    /// Render every variant of the `check` space, measure and report.
    Explore(ExploreArgs),
    /// Analyse an existing measurement CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Only transform blocks whose pragma is on one of these lines.
    #[arg(long, value_delimiter = ',')]
    pub blocks: Option<Vec<u32>>,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Operation count of one run, enabling GOPS/W.
    #[arg(long)]
    pub ops: Option<f64>,
    /// Signature of the speedup reference, e.g. `0,0,0`.
    #[arg(long, default_value = "0,0,0", value_parser = parse_signature)]
    pub baseline: Signature,
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    /// Annotated C source; not needed with `--replay`.
    #[arg(required_unless_present = "replay")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Executor config; the simulator with default parameters otherwise.
    #[arg(long)]
    pub executor: Option<PathBuf>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub reps: u32,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
    /// Measurements recorded in a report CSV, one sample per row, played
    /// back instead of executing anything.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub blocks: Option<Vec<u32>>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub csv: PathBuf,
    /// Where plot data goes; the CSV's directory by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

fn parse_signature(s: &str) -> Result<Signature, String> {
    Signature::parse(s).map_err(|e| e.to_string())
}

/// Output and error streams of one invocation.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

/// Failure of a command: already reported diagnostics, or an error still
/// to print.
enum Fail {
    Reported,
    Err(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Err(e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail::Err(e.to_string())
    }
}

type Outcome = Result<(), Fail>;

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, io: &mut Io) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(io.out, "{text}");
            } else {
                let _ = write!(io.err, "{text}");
            }
            return code;
        }
    };
    let res = match &cli.command {
        Command::Transform(a) => transform(a, io),
        Command::Explore(a) => explore(a, io),
        Command::Report(a) => report(a, io),
    };
    match res {
        Ok(()) => 0,
        Err(Fail::Reported) => 1,
        Err(Fail::Err(msg)) => {
            let _ = writeln!(io.err, "error: {msg}");
            1
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Reads and parses a source file, printing positioned errors.
fn load_unit(path: &Path, io: &mut Io) -> Result<(String, hmppify::cfront::ast::SourceUnit), Fail> {
    let text = fs::read_to_string(path).map_err(|e| Fail::Err(format!("{}: {e}", display(path))))?;
    match parse_translation_unit(&text) {
        Ok(u) => Ok((text, u)),
        Err(e) => {
            let _ = writeln!(io.err, "{}", e.render(&display(path)));
            Err(Fail::Reported)
        }
    }
}

fn stem_of(path: &Path) -> String {
    path.file_stem().map_or_else(|| "out".to_string(), |s| s.to_string_lossy().into_owned())
}

/// Builds a session, reporting its diagnostics. Errors among them fail the
/// command after the caller has written its output.
fn session(path: &Path, unit: &hmppify::cfront::ast::SourceUnit, blocks: Option<&[u32]>, io: &mut Io) -> Result<(Session, bool), Fail> {
    let name = display(path);
    let s = Session::with_selection(unit, blocks).map_err(|e| {
        let _ = writeln!(io.err, "{}", e.render(&name));
        Fail::Reported
    })?;
    let mut errors = false;
    for d in &s.diagnostics {
        errors |= d.severity == Severity::Error;
        let _ = writeln!(io.err, "{}", d.render(&name));
    }
    Ok((s, errors))
}

fn transform(a: &TransformArgs, io: &mut Io) -> Outcome {
    let (text, unit) = load_unit(&a.input, io)?;
    fs::create_dir_all(&a.out)?;
    let stem = stem_of(&a.input);
    if pragma_count(&unit) == 0 {
        let file = a.out.join(a.input.file_name().unwrap_or_default());
        fs::write(&file, &text)?;
        let _ = writeln!(io.err, "warning: {} has no pragmas; copied unchanged", display(&a.input));
        let _ = writeln!(io.out, "file\t{}", display(&file));
        return Ok(());
    }
    let (s, errors) = session(&a.input, &unit, a.blocks.as_deref(), io)?;
    let v = s.default_variant()?;
    let rendered = s.emit(&v).map_err(|e| Fail::Err(e.render(&display(&a.input))))?;
    for u in &rendered.manifest.unresolved {
        let _ = writeln!(io.err, "warning: unresolved transfer: {u}");
    }
    let paths = write_variants(&a.out, &stem, std::slice::from_ref(&rendered))?;
    for p in paths {
        let _ = writeln!(io.out, "file\t{}", display(&p));
    }
    if errors {
        return Err(Fail::Reported);
    }
    Ok(())
}

fn explore(a: &ExploreArgs, io: &mut Io) -> Outcome {
    fs::create_dir_all(&a.out)?;
    let reps = a.reps as usize;
    let logs = a.out.join("logs");
    let mut errors = false;
    let measurements = if let Some(csv) = &a.replay {
        let recorded = read_csv(csv)?;
        let ex = ReplayExecutor::from_measurements(&recorded);
        run_exploration(&ex.jobs(), &ex, reps, Some(&logs))?
    } else {
        let input = a.input.as_ref().expect("clap requires input without --replay");
        let spec = match &a.executor {
            Some(p) => ExecutorSpec::load(p).map_err(|e| Fail::Err(format!("{}: {e}", display(p))))?,
            None => ExecutorSpec::Simulated(Default::default()),
        };
        let (_, unit) = load_unit(input, io)?;
        let (s, diag_errors) = session(input, &unit, a.blocks.as_deref(), io)?;
        errors |= diag_errors;
        if !s.blocks.iter().any(|b| b.explored()) {
            return Err(Fail::Err(format!("{}: no block carries `check` or `fixed(a,b,c)`", display(input))));
        }
        let variants = s.variants(a.cap)?;
        let rendered = s.emit_all(&variants).map_err(|e| Fail::Err(e.render(&display(input))))?;
        for r in &rendered {
            for u in &r.manifest.unresolved {
                let _ = writeln!(io.err, "warning: {}: unresolved transfer: {u}", r.name);
            }
        }
        let paths = write_variants(&a.out.join("variants"), &stem_of(input), &rendered)?;
        let jobs: Vec<VariantJob> = variants
            .iter()
            .zip(paths)
            .map(|(v, path)| VariantJob { name: v.label(), signature: v.signature(), path })
            .collect();
        run_exploration(&jobs, spec.executor().as_ref(), reps, Some(&logs))?
    };
    let failed: Vec<&Measurement> = measurements.iter().filter(|m| !m.is_ok()).collect();
    for m in &failed {
        let _ = writeln!(io.err, "error: {} ({}) failed: {}", m.name, m.signature, m.failure.as_deref().unwrap_or(""));
    }
    let csv = a.out.join("report.csv");
    fs::write(&csv, write_csv(&measurements))?;
    let _ = writeln!(io.out, "measured\t{}\tfailed\t{}", measurements.len() - failed.len(), failed.len());
    let _ = writeln!(io.out, "csv\t{}", display(&csv));
    analyse(&measurements, &a.out, &a.analysis, io)?;
    if errors || !failed.is_empty() {
        let _ = writeln!(io.err, "error: {} of {} variants failed", failed.len(), measurements.len());
        return Err(Fail::Reported);
    }
    Ok(())
}

fn read_csv(path: &Path) -> Result<Vec<Measurement>, Fail> {
    let text = fs::read_to_string(path).map_err(|e| Fail::Err(format!("{}: {e}", display(path))))?;
    parse_csv(&text).map_err(|e| Fail::Err(format!("{}: {e}", display(path))))
}

fn report(a: &ReportArgs, io: &mut Io) -> Outcome {
    let ms = read_csv(&a.csv)?;
    let out = a.out.clone().unwrap_or_else(|| a.csv.parent().map(Path::to_path_buf).unwrap_or_default());
    analyse(&ms, &out, &a.analysis, io)
}

/// Frontier, speedups and optional GOPS/W; writes plot data and prints the
/// summary records.
fn analyse(ms: &[Measurement], out: &Path, a: &AnalysisArgs, io: &mut Io) -> Outcome {
    if let Some(ops) = a.ops {
        if !(ops > 0.0) {
            return Err(Fail::Err(format!("--ops must be positive, got {ops}")));
        }
    }
    let points = tradeoff_points(ms);
    let rows: Vec<EfficiencyRow> = match efficiency_rows(ms, a.baseline, a.ops) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(io.err, "warning: {e}; speedups skipped");
            Vec::new()
        }
    };
    emit_plot_data(out, ms, &points, &rows)?;
    for p in points.iter().filter(|p| !p.dominated) {
        let _ = writeln!(io.out, "pareto\t{}\t{}\t{}\t{}", p.name, p.signature, fmt(p.time_ms), fmt(p.energy_j));
    }
    for r in &rows {
        let _ = writeln!(io.out, "speedup\t{}\t{}\t{:.6}", r.name, r.signature, r.speedup);
        if let Some(g) = r.gops_per_watt {
            let _ = writeln!(io.out, "gops_per_watt\t{}\t{}\t{:.6}", r.name, r.signature, g);
        }
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    hmppify::report::format_number(x)
}
