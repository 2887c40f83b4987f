//! Command-line front end: `run`, `emit-plotdata` and `verify`.
//!
//! Exit codes: 0 success, 1 failed claim or runtime error, 2 invalid
//! configuration or usage, 3 runtime alarm (artifacts kept), 4 corrupt
//! run directory. Errors are reported on stderr as one JSON object.

mod checks;
mod manifest;
mod plotdata;
mod run;
mod scenario;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

pub use manifest::{sha256_hex, Claim, FileEntry, Manifest, RunStatus, Table, LOCK, MANIFEST};
pub use scenario::{
    DilationUniqueness, FlatSideLens, HolderFunction, HolderNormsParams, LinearizationAudit, Params, Scenario,
    ShrinkEllipsoid, ShrinkSphere, ViscosityConvergence,
};

/// Environment variable read for the worker-thread count.
pub const THREADS_ENV: &str = "QKFLOW_THREADS";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("output directory is locked: {0}")]
    Locked(String),
    #[error("no manifest in {0}")]
    MissingManifest(String),
    #[error("runtime alarm: {0}")]
    Alarm(String),
    #[error("corrupt run directory: {0}")]
    Corrupt(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) | CliError::Io(_) | CliError::ChecksFailed(_) => 1,
            CliError::Usage(_) | CliError::Config(_) | CliError::Locked(_) | CliError::MissingManifest(_) => 2,
            CliError::Alarm(_) => 3,
            CliError::Corrupt(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "invalid_config",
            CliError::Locked(_) => "locked",
            CliError::MissingManifest(_) => "missing_manifest",
            CliError::Alarm(_) => "alarm",
            CliError::Corrupt(_) => "corrupt",
            CliError::Runtime(_) => "runtime",
            CliError::Io(_) => "io",
            CliError::ChecksFailed(_) => "checks_failed",
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() }).to_string()
    }
}

#[derive(Debug, Parser)]
#[command(name = "qkflow", version, about = "Q_k curvature flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file and write its artifacts and manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` in the file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write two-column plot files for a finished run.
    EmitPlotdata {
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check hashes and every claim of a finished run.
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    let res = match cli.command {
        Command::Run { config, out, seed } => run_command(&config, out, seed),
        Command::EmitPlotdata { out } => emit_plotdata(&out),
        Command::Verify { out } => verify(&out),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(LOCK);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Locked(dir.display().to_string()))
            }
            Err(e) => Err(CliError::Io(format!("{}: {e}", path.display()))),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

fn print_table(rows: &[Claim]) {
    println!("{:<30} {:<6} {:>14} {:>14}  detail", "check", "result", "value", "bound");
    for c in rows {
        let num = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
        println!(
            "{:<30} {:<6} {:>14} {:>14}  {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            num(c.value),
            num(c.bound),
            c.detail
        );
    }
}

/// Validates the scenario, then writes artifacts, claims and the manifest
/// into the output directory.
pub fn run_command(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let mut scn = Scenario::load(config)?;
    if let Some(s) = seed {
        scn.seed = s;
    }
    let dir = out
        .or_else(|| scn.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))?;
    if dir.join(LOCK).exists() {
        return Err(CliError::Locked(dir.display().to_string()));
    }
    if dir.exists() {
        let busy = fs::read_dir(&dir)
            .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?
            .next()
            .is_some();
        if busy {
            return Err(CliError::Config(format!("output directory {} is not empty", dir.display())));
        }
    }
    let created = !dir.exists();
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let lock = DirLock::acquire(&dir)?;
    let started = now();
    let outcome = match run::execute(&scn) {
        Ok(o) => o,
        Err(e) => {
            drop(lock);
            if created {
                let _ = fs::remove_dir(&dir);
            }
            return Err(e);
        }
    };
    let mut files = Vec::new();
    for (name, bytes) in &outcome.files {
        files.push(manifest::write_file(&dir, name, bytes)?);
    }
    let status = if outcome.alarm.is_some() { RunStatus::Alarm } else { RunStatus::Complete };
    let claims = checks::claims(&dir, &scn, status, &outcome.stop_reason)?;
    let m = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: scn,
        started,
        finished: now(),
        status,
        stop_reason: outcome.stop_reason.clone(),
        threads: std::env::var(THREADS_ENV).ok(),
        files,
        claims,
    };
    m.write(&dir)?;
    drop(lock);
    print_table(&m.claims);
    match outcome.alarm {
        Some(msg) => Err(CliError::Alarm(msg)),
        None => Ok(()),
    }
}

pub fn emit_plotdata(dir: &Path) -> Result<(), CliError> {
    let mut m = Manifest::read(dir)?;
    let _lock = DirLock::acquire(dir)?;
    let series = plotdata::series(dir, &m)?;
    let mut written = Vec::new();
    for s in &series {
        written.push(manifest::write_file(dir, &format!("plot/{}", s.file), s.render().as_bytes())?);
    }
    written.push(manifest::write_file(dir, "plot/README.txt", plotdata::readme(&series).as_bytes())?);
    m.files.retain(|f| !written.iter().any(|w| w.path == f.path));
    for w in &written {
        println!("{}", dir.join(&w.path).display());
    }
    m.files.extend(written);
    m.write(dir)
}

fn unlisted(dir: &Path, m: &Manifest) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![PathBuf::new()];
    while let Some(rel) = stack.pop() {
        let Ok(rd) = fs::read_dir(dir.join(&rel)) else { continue };
        for e in rd.flatten() {
            let r = rel.join(e.file_name());
            if e.path().is_dir() {
                stack.push(r);
                continue;
            }
            let name = r.to_string_lossy().replace('\\', "/");
            if name != MANIFEST && !m.files.iter().any(|f| f.path == name) {
                out.push(name);
            }
        }
    }
    out.sort();
    out
}

pub fn verify(dir: &Path) -> Result<(), CliError> {
    let m = Manifest::read(dir)?;
    let mut rows = Vec::new();
    let mut corrupt = Vec::new();
    for f in &m.files {
        let name = format!("hash:{}", f.path);
        match manifest::check_entry(dir, f) {
            Ok(()) => rows.push(Claim::at_most(&name, 0.0, 0.0, "sha256 matches")),
            Err(e) => {
                corrupt.push(f.path.clone());
                rows.push(Claim::failed(&name, e));
            }
        }
    }
    let extra = unlisted(dir, &m);
    rows.push(Claim::at_most(
        "no_unlisted_files",
        extra.len() as f64,
        0.0,
        if extra.is_empty() { String::new() } else { extra.join(" ") },
    ));
    if !corrupt.is_empty() {
        print_table(&rows);
        return Err(CliError::Corrupt(format!("hash mismatch: {}", corrupt.join(", "))));
    }
    let claims = match checks::claims(dir, &m.scenario, m.status, &m.stop_reason) {
        Ok(c) => c,
        Err(e) => {
            print_table(&rows);
            return Err(e);
        }
    };
    for c in &claims {
        let recorded = m.claims.iter().find(|r| r.name == c.name);
        let mut c = c.clone();
        if recorded.map(|r| r.passed) != Some(c.passed) {
            c.detail.push_str(" [differs from manifest]");
        }
        rows.push(c);
    }
    print_table(&rows);
    let failed = rows.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failed))
    }
}
