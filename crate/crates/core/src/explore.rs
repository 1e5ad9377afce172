//! Running variants and aggregating their measurements.
//!
//! An [`Executor`] turns one variant file into a `(time, energy)` sample.
//! [`run_exploration`] repeats it, keeps the raw samples and reports the
//! median of each axis. Failures are kept per variant instead of aborting
//! the sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use wait_timeout::ChildExt;

use crate::cfront::parse_translation_unit;
use crate::error::{Error, Result};
use crate::sim::{simulate, CostModelParams};
use crate::variants::Signature;

/// One variant to measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantJob {
    pub name: String,
    pub signature: Signature,
    /// Source file; unused by replay.
    pub path: PathBuf,
}

impl VariantJob {
    fn log_name(&self) -> String {
        match self.path.file_stem() {
            Some(s) if !s.is_empty() => format!("{}.log", s.to_string_lossy()),
            _ => format!("{}_{}.log", self.name.replace(['(', ')', '+', '/'], "_"), self.signature.file_tag()),
        }
    }
}

/// Aggregated result for one variant. `time_ms` and `energy_j` are the
/// medians of `samples`; both are zero when `failure` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub name: String,
    pub signature: Signature,
    pub time_ms: f64,
    pub energy_j: f64,
    /// Raw `(time_ms, energy_j)` pairs.
    pub samples: Vec<(f64, f64)>,
    pub failure: Option<String>,
}

impl Measurement {
    pub fn from_samples(name: &str, signature: Signature, samples: Vec<(f64, f64)>) -> Result<Measurement> {
        let times: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let energies: Vec<f64> = samples.iter().map(|s| s.1).collect();
        Ok(Measurement { name: name.to_string(), signature, time_ms: median(&times)?, energy_j: median(&energies)?, samples, failure: None })
    }

    pub fn failed(name: &str, signature: Signature, reason: impl Into<String>) -> Measurement {
        Measurement { name: name.to_string(), signature, time_ms: 0.0, energy_j: 0.0, samples: Vec::new(), failure: Some(reason.into()) }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Middle element for odd lengths, mean of the two middle elements for
/// even lengths.
pub fn median(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Invalid("median of an empty sample".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub fn wh_to_joules(wh: f64) -> Result<f64> {
    if !(wh >= 0.0) || !wh.is_finite() {
        return Err(Error::Invalid(format!("energy reading must be a non-negative number of Wh, got {wh}")));
    }
    Ok(wh * 3600.0)
}

/// Measures a single run of a variant. Implementations append free-form
/// notes to `log`; a returned error string becomes the failure reason.
pub trait Executor: Sync {
    /// Called once per variant before its repetitions.
    fn prepare(&self, _job: &VariantJob, _log: &mut String) -> std::result::Result<(), String> {
        Ok(())
    }

    fn measure(&self, job: &VariantJob, rep: usize, log: &mut String) -> std::result::Result<(f64, f64), String>;

    /// Whether variants may run concurrently.
    fn parallel(&self) -> bool {
        false
    }
}

/// Where shell mode reads cumulative watt-hours.
#[derive(Debug, Clone, PartialEq)]
pub enum EnergySource {
    Command(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellSpec {
    /// Build command; `{file}` is replaced by the variant path.
    pub build: String,
    pub run: String,
    pub timeout: Duration,
    pub energy: EnergySource,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExecutorSpec {
    Shell(ShellSpec),
    Simulated(CostModelParams),
}

impl ExecutorSpec {
    /// Parses a `key = value` config. `#` starts a comment.
    ///
    /// Keys: `mode` (`shell` or `simulated`); shell mode: `build`, `run`,
    /// `timeout` (seconds), `energy_command` or `energy_file`; simulated
    /// mode: any [`CostModelParams`] field.
    pub fn parse(text: &str) -> Result<ExecutorSpec> {
        let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config { line: i + 1, msg: format!("expected `key = value`, got `{line}`") });
            };
            let k = k.trim().to_string();
            if kv.insert(k.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(Error::Config { line: i + 1, msg: format!("duplicate key `{k}`") });
            }
        }
        let mode = kv.remove("mode").map(|(_, v)| v).unwrap_or_else(|| "simulated".into());
        match mode.as_str() {
            "simulated" => {
                let mut p = CostModelParams::default();
                for (k, (line, v)) in kv {
                    let x: f64 = v.parse().map_err(|_| Error::Config { line, msg: format!("`{k}` needs a number, got `{v}`") })?;
                    p.set(&k, x).ok_or_else(|| Error::Config { line, msg: format!("unknown key `{k}` in simulated mode") })?;
                }
                p.validate()?;
                Ok(ExecutorSpec::Simulated(p))
            }
            "shell" => {
                let mut take = |k: &str| kv.remove(k);
                let template = |k: &str, v: Option<(usize, String)>| -> Result<String> {
                    let (line, v) = v.ok_or_else(|| Error::Config { line: 0, msg: format!("shell mode needs `{k}`") })?;
                    if !v.contains("{file}") {
                        return Err(Error::Config { line, msg: format!("`{k}` must contain the {{file}} placeholder") });
                    }
                    Ok(v)
                };
                let build = template("build", take("build"))?;
                let run = template("run", take("run"))?;
                let timeout = match take("timeout") {
                    Some((line, v)) => match v.parse::<f64>() {
                        Ok(t) if t > 0.0 && t.is_finite() => Duration::from_secs_f64(t),
                        _ => return Err(Error::Config { line, msg: format!("`timeout` must be a positive number of seconds, got `{v}`") }),
                    },
                    None => return Err(Error::Config { line: 0, msg: "shell mode needs `timeout`".into() }),
                };
                let energy = match (take("energy_command"), take("energy_file")) {
                    (Some((_, c)), None) => EnergySource::Command(c),
                    (None, Some((_, f))) => EnergySource::File(PathBuf::from(f)),
                    (Some((line, _)), Some(_)) => {
                        return Err(Error::Config { line, msg: "give either `energy_command` or `energy_file`, not both".into() })
                    }
                    (None, None) => return Err(Error::Config { line: 0, msg: "shell mode needs `energy_command` or `energy_file`".into() }),
                };
                if let Some((k, (line, _))) = kv.into_iter().next() {
                    return Err(Error::Config { line, msg: format!("unknown key `{k}` in shell mode") });
                }
                Ok(ExecutorSpec::Shell(ShellSpec { build, run, timeout, energy }))
            }
            other => Err(Error::Config { line: 0, msg: format!("unknown mode `{other}`") }),
        }
    }

    pub fn load(path: &Path) -> Result<ExecutorSpec> {
        ExecutorSpec::parse(&fs::read_to_string(path)?)
    }

    pub fn executor(&self) -> Box<dyn Executor> {
        match self {
            ExecutorSpec::Shell(s) => Box::new(ShellExecutor(s.clone())),
            ExecutorSpec::Simulated(p) => Box::new(SimulatedExecutor(p.clone())),
        }
    }
}

/// Builds and runs variants with external commands, one at a time.
#[derive(Debug, Clone)]
pub struct ShellExecutor(pub ShellSpec);

struct Outcome {
    status: Option<i32>,
    stdout: String,
    stderr: String,
}

fn shell(cmd: &str, timeout: Duration) -> std::result::Result<Outcome, String> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| format!("cannot start `{cmd}`: {e}"))?;
    // Drain pipes on threads so a chatty child cannot block on a full pipe.
    let mut out = child.stdout.take().expect("piped");
    let mut err = child.stderr.take().expect("piped");
    let t_out = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = out.read_to_string(&mut s);
        s
    });
    let t_err = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = err.read_to_string(&mut s);
        s
    });
    let status = match child.wait_timeout(timeout).map_err(|e| e.to_string())? {
        Some(s) => s,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(format!("`{cmd}` timed out after {:.3} s", timeout.as_secs_f64()));
        }
    };
    Ok(Outcome { status: status.code(), stdout: t_out.join().unwrap_or_default(), stderr: t_err.join().unwrap_or_default() })
}

fn exit_text(status: Option<i32>) -> String {
    status.map_or_else(|| "a signal".to_string(), |c| format!("exit status {c}"))
}

fn substitute(template: &str, file: &Path) -> String {
    template.replace("{file}", &file.to_string_lossy())
}

impl ShellExecutor {
    fn energy_wh(&self) -> std::result::Result<f64, String> {
        let text = match &self.0.energy {
            EnergySource::Command(c) => {
                let o = shell(c, self.0.timeout).map_err(|e| format!("energy source unavailable: {e}"))?;
                if o.status != Some(0) {
                    return Err(format!("energy source unavailable: `{c}` failed with {}", exit_text(o.status)));
                }
                o.stdout
            }
            EnergySource::File(f) => fs::read_to_string(f).map_err(|e| format!("energy source unavailable: {}: {e}", f.display()))?,
        };
        text.trim().parse::<f64>().map_err(|_| format!("energy source printed `{}`, expected watt-hours", text.trim()))
    }

    fn logged(log: &mut String, what: &str, o: &Outcome) {
        let _ = writeln!(log, "== {what} ({})", exit_text(o.status));
        log.push_str(&o.stdout);
        log.push_str(&o.stderr);
    }
}

impl Executor for ShellExecutor {
    fn prepare(&self, job: &VariantJob, log: &mut String) -> std::result::Result<(), String> {
        let cmd = substitute(&self.0.build, &job.path);
        let o = shell(&cmd, self.0.timeout).map_err(|e| format!("build failed: {e}"))?;
        Self::logged(log, &format!("build: {cmd}"), &o);
        match o.status {
            Some(0) => Ok(()),
            s => Err(format!("build failed with {}", exit_text(s))),
        }
    }

    fn measure(&self, job: &VariantJob, rep: usize, log: &mut String) -> std::result::Result<(f64, f64), String> {
        let cmd = substitute(&self.0.run, &job.path);
        let before = self.energy_wh()?;
        let start = Instant::now();
        let o = shell(&cmd, self.0.timeout)?;
        let elapsed = start.elapsed();
        let after = self.energy_wh()?;
        Self::logged(log, &format!("run {rep}: {cmd}"), &o);
        if o.status != Some(0) {
            return Err(format!("run failed with {}", exit_text(o.status)));
        }
        let joules = wh_to_joules(after - before).map_err(|e| e.to_string())?;
        Ok((elapsed.as_secs_f64() * 1000.0, joules))
    }
}

/// Prices each variant with the cost-model simulator. Deterministic, so
/// every repetition yields the same sample.
#[derive(Debug, Clone)]
pub struct SimulatedExecutor(pub CostModelParams);

impl Executor for SimulatedExecutor {
    fn measure(&self, job: &VariantJob, rep: usize, log: &mut String) -> std::result::Result<(f64, f64), String> {
        let text = fs::read_to_string(&job.path).map_err(|e| format!("{}: {e}", job.path.display()))?;
        let unit = parse_translation_unit(&text).map_err(|e| format!("parse: {e}"))?;
        let r = simulate(&unit, &self.0).map_err(|e| e.to_string())?;
        if rep == 0 {
            let c = &r.counters;
            let _ = writeln!(
                log,
                "h2d {} d2h {} scalar_h2d {} scalar_d2h {} launches {} cpu_ops {} gpu_ops {}",
                c.h2d, c.d2h, c.scalar_h2d, c.scalar_d2h, c.launches, c.cpu_ops, c.gpu_ops
            );
            let _ = writeln!(log, "cpu {:.6} s gpu {:.6} s transfer {:.6} s", r.cpu_s, r.gpu_s, r.transfer_s);
            for w in &r.warnings {
                let _ = writeln!(log, "warning: {w}");
            }
        }
        if let Some(v) = r.violations.first() {
            return Err(format!("residency violation on `{}`: {}", v.var, v.message));
        }
        Ok((r.time_s * 1000.0, r.energy_j))
    }

    fn parallel(&self) -> bool {
        true
    }
}

/// Plays back recorded samples, keyed by name and signature. Repetition
/// `r` takes sample `r` modulo the number recorded.
#[derive(Debug, Clone, Default)]
pub struct ReplayExecutor {
    pub samples: BTreeMap<(String, Signature), Vec<(f64, f64)>>,
}

impl ReplayExecutor {
    /// Every successful row becomes one sample.
    pub fn from_measurements(ms: &[Measurement]) -> ReplayExecutor {
        let mut samples: BTreeMap<(String, Signature), Vec<(f64, f64)>> = BTreeMap::new();
        for m in ms.iter().filter(|m| m.is_ok()) {
            let s = if m.samples.is_empty() { vec![(m.time_ms, m.energy_j)] } else { m.samples.clone() };
            samples.entry((m.name.clone(), m.signature)).or_default().extend(s);
        }
        ReplayExecutor { samples }
    }

    /// One job per recorded variant, in key order.
    pub fn jobs(&self) -> Vec<VariantJob> {
        self.samples.keys().map(|(n, s)| VariantJob { name: n.clone(), signature: *s, path: PathBuf::new() }).collect()
    }
}

impl Executor for ReplayExecutor {
    fn measure(&self, job: &VariantJob, rep: usize, _log: &mut String) -> std::result::Result<(f64, f64), String> {
        match self.samples.get(&(job.name.clone(), job.signature)) {
            Some(v) if !v.is_empty() => Ok(v[rep % v.len()]),
            _ => Err(format!("no recorded samples for {} ({})", job.name, job.signature)),
        }
    }

    fn parallel(&self) -> bool {
        true
    }
}

fn run_one(job: &VariantJob, executor: &dyn Executor, reps: usize) -> (Measurement, String) {
    let mut log = String::new();
    let _ = writeln!(log, "variant {} ({})", job.name, job.signature);
    let fail = |log: &mut String, reason: String| {
        let _ = writeln!(log, "failed: {reason}");
        Measurement::failed(&job.name, job.signature, reason)
    };
    if let Err(e) = executor.prepare(job, &mut log) {
        return (fail(&mut log, e), log);
    }
    let mut samples = Vec::with_capacity(reps);
    for rep in 0..reps {
        match executor.measure(job, rep, &mut log) {
            Ok((t, e)) if t.is_finite() && e.is_finite() && t >= 0.0 && e >= 0.0 => {
                let _ = writeln!(log, "sample {rep}: {t} ms {e} J");
                samples.push((t, e));
            }
            Ok((t, e)) => return (fail(&mut log, format!("invalid sample {t} ms / {e} J")), log),
            Err(e) => return (fail(&mut log, e), log),
        }
    }
    let m = Measurement::from_samples(&job.name, job.signature, samples).expect("reps >= 1");
    (m, log)
}

/// Measures every job `reps` times. Results are in job order whatever the
/// executor's concurrency. With `log_dir`, each job gets a log file.
pub fn run_exploration(jobs: &[VariantJob], executor: &dyn Executor, reps: usize, log_dir: Option<&Path>) -> Result<Vec<Measurement>> {
    if reps == 0 {
        return Err(Error::Invalid("repetitions must be at least 1".into()));
    }
    let results: Vec<(Measurement, String)> = if executor.parallel() {
        jobs.par_iter().map(|j| run_one(j, executor, reps)).collect()
    } else {
        jobs.iter().map(|j| run_one(j, executor, reps)).collect()
    };
    if let Some(dir) = log_dir {
        fs::create_dir_all(dir)?;
        for (job, (_, log)) in jobs.iter().zip(&results) {
            fs::write(dir.join(job.log_name()), log)?;
        }
    }
    Ok(results.into_iter().map(|(m, _)| m).collect())
}
