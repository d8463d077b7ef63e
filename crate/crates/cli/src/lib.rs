//! The `mpstkit` command line: `check`, `project`, `fsm`, `run` and `bench`.
//!
//! Exit codes: 0 success, 1 a check or run failed, 2 usage, syntax or I/O
//! error. Every `--json` output is one object whose `schema` field names
//! its format (`mpstkit.check/1`, `mpstkit.project/1`, ...).

use std::ffi::OsString;
use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};
use serde_json::{json, Value as Json};

use mpstkit::ast::{well_formed, GlobalType, Role};
use mpstkit::consistency::{consistent, ConsistencyReport};
use mpstkit::fsm::interpret;
use mpstkit::projection::project;
use mpstkit::runtime::{run_file, RunOptions, SetupError};
use mpstkit::surface::{instantiate, parse_protocol_file, roots, ProtocolFile, SurfaceError};
use mpstkit::typecheck::{check_file, Diagnostic};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mpstkit", version, about = "Multiparty session type toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check protocols and processes of a file.
    Check {
        file: PathBuf,
        /// Also check that every protocol is consistent.
        #[arg(long)]
        consistency: bool,
        /// Restrict the consistency check to one protocol.
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Print the local type of a role.
    Project {
        file: PathBuf,
        #[arg(long)]
        role: String,
        /// Defaults to the only protocol the role takes part in.
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long, conflicts_with = "text")]
        json: bool,
        /// Plain text output (the default).
        #[arg(long)]
        text: bool,
    },
    /// Export the state machine of a role as GraphViz.
    Fsm {
        file: PathBuf,
        #[arg(long)]
        role: String,
        #[arg(long)]
        protocol: Option<String>,
        /// Write the graph here instead of standard output.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long, conflicts_with = "dot")]
        json: bool,
    },
    /// Run every process of a file and print the message trace.
    Run {
        file: PathBuf,
        /// Write the trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// JSON trace instead of text.
        #[arg(long)]
        json: bool,
        /// Run even if the file does not typecheck.
        #[arg(long)]
        unchecked: bool,
        /// Abort the run after this many milliseconds.
        #[arg(long, default_value_t = 30_000)]
        timeout_ms: u64,
    },
    /// Time `check --consistency` on every .mpst file of a directory.
    Bench {
        dir: PathBuf,
        #[arg(long, default_value_t = 31, value_parser = clap::value_parser!(u32).range(1..))]
        repeat: u32,
        #[arg(long)]
        json: bool,
    },
}

/// ANSI styling, on unless `MPSTKIT_COLOR=0` or the output is not a terminal.
#[derive(Clone, Copy, Debug)]
pub struct Style {
    pub color: bool,
}

impl Style {
    pub fn from_env(tty: bool) -> Self {
        let color = match std::env::var("MPSTKIT_COLOR").as_deref() {
            Ok("0") => false,
            Ok("1") => true,
            _ => tty,
        };
        Style { color }
    }

    fn paint(self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    fn bad(self, s: &str) -> String {
        self.paint("31", s)
    }

    fn good(self, s: &str) -> String {
        self.paint("32", s)
    }

    fn warn(self, s: &str) -> String {
        self.paint("33", s)
    }
}

/// Failure of a command, mapped to its exit code.
#[derive(Debug)]
enum Failure {
    /// Report already written; exit 1.
    Failed,
    /// A property of the input does not hold; the message goes to stderr, exit 1.
    Rejected(String),
    /// Usage, syntax or I/O problem; the message goes to stderr, exit 2.
    Usage(String),
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Entry point shared by the binary and the tests.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let style = Style::from_env(std::io::stdout().is_terminal());
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Check { file, consistency, protocol, json } => {
            cmd_check(&file, consistency, protocol.as_deref(), json, style, out, err)
        }
        Command::Project { file, role, protocol, json, .. } => {
            cmd_project(&file, &role, protocol.as_deref(), json, out)
        }
        Command::Fsm { file, role, protocol, dot, json } => {
            cmd_fsm(&file, &role, protocol.as_deref(), dot.as_deref(), json, out)
        }
        Command::Run { file, trace, json, unchecked, timeout_ms } => {
            cmd_run(&file, trace.as_deref(), json, unchecked, Duration::from_millis(timeout_ms), style, out, err)
        }
        Command::Bench { dir, repeat, json } => cmd_bench(&dir, repeat, json, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Failed) => EXIT_FAILED,
        Err(Failure::Rejected(msg)) => {
            let _ = writeln!(err, "mpstkit: {msg}");
            EXIT_FAILED
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "mpstkit: {msg}");
            EXIT_USAGE
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse(path: &Path, src: &str) -> Result<ProtocolFile, Failure> {
    parse_protocol_file(src).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| format!("{}:{e}", path.display())).collect();
        usage(lines.join("\n"))
    })
}

fn load(path: &Path) -> Result<ProtocolFile, Failure> {
    parse(path, &read(path)?)
}

fn write_out(out: &mut dyn Write, text: &str) -> CmdResult {
    out.write_all(text.as_bytes()).map_err(|e| usage(format!("cannot write output: {e}")))
}

fn emit_json(out: &mut dyn Write, v: &Json) -> CmdResult {
    write_out(out, &format!("{v}\n"))
}

/// Consistency verdict of one closed protocol of a file.
#[derive(Debug)]
pub struct ProtocolVerdict {
    pub protocol: String,
    pub report: Result<ConsistencyReport, String>,
}

impl ProtocolVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(&self.report, Ok(r) if r.consistent)
    }
}

/// Result of `check` on one parsed file.
#[derive(Debug)]
pub struct CheckOutcome {
    pub diagnostics: Vec<Diagnostic>,
    pub consistency: Option<Vec<ProtocolVerdict>>,
}

impl CheckOutcome {
    pub fn ok(&self) -> bool {
        !self.diagnostics.iter().any(Diagnostic::is_error)
            && self.consistency.iter().flatten().all(ProtocolVerdict::is_consistent)
    }
}

fn closed_protocol(file: &ProtocolFile, name: &str) -> Result<GlobalType, SurfaceError> {
    instantiate(file, name, &[])
}

/// Typechecks a file and, if asked, decides consistency of its protocols
/// (the given one, or every protocol no other definition refers to).
pub fn check_parsed(file: &ProtocolFile, consistency: bool, only: Option<&str>) -> Result<CheckOutcome, String> {
    let diagnostics = check_file(file);
    let consistency = if consistency {
        let names: Vec<&str> = match only {
            Some(p) => {
                let def = file.global(p).ok_or_else(|| format!("no protocol named `{p}`"))?;
                if !def.params.is_empty() {
                    return Err(format!("protocol `{p}` has parameters; name a closed protocol"));
                }
                vec![p]
            }
            None => roots(file),
        };
        let verdicts = names
            .into_iter()
            .map(|name| {
                let report =
                    closed_protocol(file, name).map_err(|e| e.to_string()).and_then(|g| match well_formed(&g) {
                        Ok(()) => Ok(consistent(&g)),
                        Err(errs) => Err(errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")),
                    });
                ProtocolVerdict { protocol: name.to_string(), report }
            })
            .collect();
        Some(verdicts)
    } else {
        None
    };
    Ok(CheckOutcome { diagnostics, consistency })
}

fn cmd_check(
    path: &Path,
    consistency: bool,
    only: Option<&str>,
    json: bool,
    style: Style,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let file = load(path)?;
    let outcome = check_parsed(&file, consistency, only).map_err(usage)?;
    let name = path.display().to_string();
    if json {
        let verdicts = outcome.consistency.as_ref().map(|vs| {
            vs.iter()
                .map(|v| match &v.report {
                    Ok(r) => json!({"protocol": v.protocol, "consistent": r.consistent, "pairs": r.pairs}),
                    Err(e) => json!({"protocol": v.protocol, "consistent": false, "error": e}),
                })
                .collect::<Vec<_>>()
        });
        emit_json(
            out,
            &json!({
                "schema": "mpstkit.check/1",
                "file": name,
                "ok": outcome.ok(),
                "diagnostics": outcome.diagnostics,
                "consistency": verdicts,
            }),
        )?;
    } else {
        for d in &outcome.diagnostics {
            let line = d.render(&name);
            let line = if d.is_error() { style.bad(&line) } else { style.warn(&line) };
            let _ = writeln!(err, "{line}");
        }
        for v in outcome.consistency.iter().flatten() {
            match &v.report {
                Ok(r) if r.consistent => write_out(out, &format!("{}: {}\n", v.protocol, style.good("consistent")))?,
                Ok(r) => {
                    for p in r.failures() {
                        write_out(out, &format!("{}: {}: {p}\n", v.protocol, style.bad("inconsistent")))?;
                    }
                }
                Err(e) => write_out(out, &format!("{}: {}: {e}\n", v.protocol, style.bad("not checked")))?,
            }
        }
        if outcome.ok() {
            write_out(out, &format!("{name}: {}\n", style.good("ok")))?;
        }
    }
    if outcome.ok() {
        Ok(())
    } else {
        Err(Failure::Failed)
    }
}

/// Picks the protocol for a role: the named one, or else the only closed
/// top-level protocol the role occurs in.
fn select_protocol(file: &ProtocolFile, protocol: Option<&str>, role: &Role) -> Result<(String, GlobalType), Failure> {
    if let Some(p) = protocol {
        let g = closed_protocol(file, p).map_err(|e| usage(e.to_string()))?;
        return Ok((p.to_string(), g));
    }
    let mut closed = Vec::new();
    for name in roots(file) {
        if let Ok(g) = closed_protocol(file, name) {
            closed.push((name.to_string(), g));
        }
    }
    let mut found: Vec<_> = closed.iter().filter(|(_, g)| g.roles().contains(role)).cloned().collect();
    match found.len() {
        1 => Ok(found.remove(0)),
        // a role outside the only protocol projects to `end`
        0 if closed.len() == 1 => Ok(closed.remove(0)),
        0 => Err(usage(format!("role {role} occurs in no protocol of the file"))),
        _ => {
            let names: Vec<String> = found.into_iter().map(|(n, _)| n).collect();
            Err(usage(format!("role {role} occurs in several protocols ({}); pass --protocol", names.join(", "))))
        }
    }
}

fn local_of(
    file: &ProtocolFile,
    protocol: Option<&str>,
    role: &str,
) -> Result<(String, mpstkit::ast::LocalType), Failure> {
    if !Role::is_valid_name(role) {
        return Err(usage(format!("invalid role name `{role}`")));
    }
    let role = Role::new(role);
    let (name, g) = select_protocol(file, protocol, &role)?;
    if let Err(errs) = well_formed(&g) {
        let msg: Vec<String> = errs.iter().map(ToString::to_string).collect();
        return Err(Failure::Rejected(format!("{name} is ill-formed: {}", msg.join("; "))));
    }
    project(&g, &role).map(|l| (name, l)).map_err(|e| Failure::Rejected(e.to_string()))
}

fn cmd_project(path: &Path, role: &str, protocol: Option<&str>, json: bool, out: &mut dyn Write) -> CmdResult {
    let file = load(path)?;
    let (name, local) = local_of(&file, protocol, role)?;
    if json {
        emit_json(
            out,
            &json!({"schema": "mpstkit.project/1", "protocol": name, "role": role, "local": local.to_json()}),
        )
    } else {
        write_out(out, &format!("{local}\n"))
    }
}

fn cmd_fsm(
    path: &Path,
    role: &str,
    protocol: Option<&str>,
    dot: Option<&Path>,
    json: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let file = load(path)?;
    let (name, local) = local_of(&file, protocol, role)?;
    let fsm = interpret(&local);
    if json {
        return emit_json(
            out,
            &json!({"schema": "mpstkit.fsm/1", "protocol": name, "role": role, "fsm": fsm.to_json()}),
        );
    }
    match dot {
        Some(p) => {
            fs::write(p, fsm.to_dot()).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            write_out(
                out,
                &format!("{}: {} states, {} transitions\n", p.display(), fsm.states.len(), fsm.transitions.len()),
            )
        }
        None => write_out(out, &fsm.to_dot()),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    path: &Path,
    trace_path: Option<&Path>,
    json: bool,
    unchecked: bool,
    timeout: Duration,
    style: Style,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let file = load(path)?;
    let name = path.display().to_string();
    if !unchecked {
        let errors: Vec<Diagnostic> = check_file(&file).into_iter().filter(Diagnostic::is_error).collect();
        if !errors.is_empty() {
            for d in &errors {
                let _ = writeln!(err, "{}", style.bad(&d.render(&name)));
            }
            let _ = writeln!(err, "{name}: does not typecheck; refusing to run (pass --unchecked to run anyway)");
            return Err(Failure::Failed);
        }
    }
    let report = match run_file(&file, &RunOptions { deadline: Some(timeout) }) {
        Ok(r) => r,
        Err(SetupError::Session(d)) => {
            let _ = writeln!(err, "{}", style.bad(&d.render(&name)));
            return Err(Failure::Failed);
        }
        Err(e) => {
            let _ = writeln!(err, "{name}: {}", style.bad(&e.to_string()));
            return Err(Failure::Failed);
        }
    };
    let text = if json {
        let faults: Vec<Json> =
            report.root_faults().map(|(p, f)| json!({"proc": p, "kind": f.kind(), "message": f.to_string()})).collect();
        let doc = json!({
            "schema": "mpstkit.run/1",
            "file": name,
            "ok": report.ok(),
            "timed_out": report.timed_out,
            "faults": faults,
            "trace": report.trace.to_json(),
        });
        format!("{doc}\n")
    } else {
        report.trace.render_text()
    };
    match trace_path {
        Some(p) => fs::write(p, &text).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => write_out(out, &text)?,
    }
    if report.timed_out {
        let _ =
            writeln!(err, "{name}: {}", style.bad(&format!("run did not finish within {} ms", timeout.as_millis())));
    }
    for (proc, fault) in report.root_faults() {
        let _ = writeln!(err, "{name}: {proc}: {}: {fault}", style.bad(fault.kind()));
    }
    if report.ok() {
        Ok(())
    } else {
        Err(Failure::Failed)
    }
}

/// Timing of `check --consistency` on one file, in milliseconds.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub file: String,
    pub repeat: u32,
    pub mean_ms: f64,
    /// Sample standard deviation; 0 for a single run.
    pub stddev_ms: f64,
    pub max_ms: f64,
    /// Whether the check itself passed.
    pub ok: bool,
}

pub fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Times parsing plus a full `check --consistency` of `path`, `repeat` times.
pub fn bench_file(path: &Path, repeat: u32) -> Result<BenchRow, String> {
    let src = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut samples = Vec::with_capacity(repeat as usize);
    let mut ok = true;
    for _ in 0..repeat {
        let start = Instant::now();
        let file = parse_protocol_file(&src)
            .map_err(|errs| errs.iter().map(|e| format!("{}:{e}", path.display())).collect::<Vec<_>>().join("\n"))?;
        ok = check_parsed(&file, true, None)?.ok();
        samples.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let (mean_ms, stddev_ms) = mean_stddev(&samples);
    let max_ms = samples.iter().copied().fold(0.0, f64::max);
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(BenchRow { file, repeat, mean_ms, stddev_ms, max_ms, ok })
}

/// The `.mpst` files directly inside `dir`, sorted by name.
pub fn corpus_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "mpst"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn render_bench(rows: &[BenchRow]) -> String {
    let w = rows.iter().map(|r| r.file.len()).max().unwrap_or(0).max(4);
    let mut s = format!(
        "{:<w$}  {:>6}  {:>10}  {:>10}  {:>10}  {}\n",
        "file", "runs", "mean ms", "stddev ms", "max ms", "check"
    );
    for r in rows {
        let verdict = if r.ok { "ok" } else { "failed" };
        s.push_str(&format!(
            "{:<w$}  {:>6}  {:>10.3}  {:>10.3}  {:>10.3}  {verdict}\n",
            r.file, r.repeat, r.mean_ms, r.stddev_ms, r.max_ms
        ));
    }
    s
}

fn cmd_bench(dir: &Path, repeat: u32, json: bool, out: &mut dyn Write) -> CmdResult {
    let files = corpus_files(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    let rows = files.iter().map(|f| bench_file(f, repeat)).collect::<Result<Vec<_>, _>>().map_err(usage)?;
    if json {
        let rows: Vec<Json> = rows
            .iter()
            .map(|r| json!({"file": r.file, "runs": r.repeat, "mean_ms": r.mean_ms, "stddev_ms": r.stddev_ms, "max_ms": r.max_ms, "ok": r.ok}))
            .collect();
        emit_json(out, &json!({"schema": "mpstkit.bench/1", "dir": dir.display().to_string(), "rows": rows}))
    } else {
        write_out(out, &render_bench(&rows))
    }
}
