//! Runs configs and writes their artifacts.
//!
//! Exit codes: 0 all flags pass, 1 a flag failed (named in `summary.json`),
//! 2 config error (nothing written), 3 precondition violation.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use dirac_clock::Error;

use crate::config::{suggest, Config, ConfigError};
use crate::experiments::{find, Fail, CATALOG};

/// Environment variable that overrides the output root.
pub const OUT_ENV: &str = "DIRAC_CLOCK_OUT";
pub const DEFAULT_OUT: &str = "out";

pub fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from)
}

#[derive(Debug)]
pub struct RunResult {
    pub config: PathBuf,
    pub exit_code: i32,
    /// `None` when nothing was written.
    pub out_dir: Option<PathBuf>,
    pub summary: Option<Value>,
    pub message: String,
}

fn config_error(path: &Path, e: ConfigError) -> RunResult {
    RunResult {
        config: path.to_path_buf(),
        exit_code: 2,
        out_dir: None,
        summary: None,
        message: format!("config error: {e}"),
    }
}

/// Short name of a precondition-class error for `summary.json`.
fn violation(e: &Error) -> String {
    match e {
        Error::Precondition { name, .. } => name.to_string(),
        Error::Aliasing { .. } => "aliasing".into(),
        Error::BoostEdge { .. } => "boost_edge".into(),
        Error::BalancedPacket(_) => "balanced_packet".into(),
        Error::DivergentMtTime(_) => "divergent_mt_time".into(),
        Error::NotNormalized(_) => "normalized".into(),
        Error::Io(_) => "io".into(),
        _ => "internal".into(),
    }
}

pub fn run_config(path: &Path, root: &Path) -> RunResult {
    let cfg = match Config::load(path) {
        Ok(c) => c,
        Err(e) => return config_error(path, e),
    };
    let Some(name) = cfg.raw("experiment") else {
        return config_error(path, ConfigError(format!("{}: missing `experiment` key", cfg.origin)));
    };
    let Some(exp) = find(name) else {
        let hint = suggest(name, CATALOG.iter().map(|e| e.name))
            .map(|s| format!("; did you mean `{s}`?"))
            .unwrap_or_default();
        return config_error(path, ConfigError(format!("{}: unknown experiment `{name}`{hint}", cfg.origin)));
    };
    let stem = path.file_stem().map_or_else(|| exp.name.to_string(), |s| s.to_string_lossy().into_owned());
    let dir = root.join(cfg.raw("out").unwrap_or(&stem));

    let result = exp.run(&cfg);
    let (exit_code, summary, files, message) = match result {
        Err(Fail::Config(e)) => return config_error(path, e),
        Err(Fail::Core(e)) => {
            let v = violation(&e);
            let summary = json!({
                "experiment": exp.name,
                "anchor": exp.anchor,
                "status": "precondition",
                "exit_code": 3,
                "failed": [v],
                "flags": {},
                "informational": {},
                "values": {},
                "error": {"name": v, "message": e.to_string()},
            });
            (3, summary, Vec::new(), format!("precondition `{v}`: {e}"))
        }
        Ok(o) => {
            let failed: Vec<String> = o.failed().into_iter().map(String::from).collect();
            let code = if failed.is_empty() { 0 } else { 1 };
            let summary = json!({
                "experiment": exp.name,
                "anchor": exp.anchor,
                "status": if code == 0 { "pass" } else { "fail" },
                "exit_code": code,
                "failed": failed,
                "flags": o.flags,
                "informational": o.informational,
                "values": o.values,
                "error": Value::Null,
            });
            let msg = if code == 0 {
                "all flags pass".to_string()
            } else {
                format!("failed: {}", failed.join(", "))
            };
            (code, summary, o.files, msg)
        }
    };

    if let Err(e) = write_outputs(&dir, &summary, &files) {
        return RunResult {
            config: path.to_path_buf(),
            exit_code: 3,
            out_dir: None,
            summary: Some(summary),
            message: format!("cannot write {}: {e}", dir.display()),
        };
    }
    RunResult {
        config: path.to_path_buf(),
        exit_code,
        out_dir: Some(dir),
        summary: Some(summary),
        message,
    }
}

fn write_outputs(dir: &Path, summary: &Value, files: &[(String, Vec<u8>)]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    let mut s = serde_json::to_vec_pretty(summary).expect("summary serializes");
    s.push(b'\n');
    fs::write(dir.join("summary.json"), s)
}

/// `*.cfg` directly inside `dir`, sorted by name.
pub fn configs_in(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    v.sort();
    Ok(v)
}

/// Runs every config in `dir` on a thread pool; results come back in config order.
pub fn run_all(dir: &Path, root: &Path, jobs: usize) -> std::io::Result<Vec<RunResult>> {
    let cfgs = configs_in(dir)?;
    let jobs = jobs.max(1).min(cfgs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<(usize, RunResult)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|_| {
                s.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        let Some(p) = cfgs.get(i) else { break };
                        mine.push((i, run_config(p, root)));
                    }
                    mine
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("runner thread panicked")).collect()
    });
    results.sort_by_key(|(i, _)| *i);
    Ok(results.into_iter().map(|(_, r)| r).collect())
}

pub fn exit_code_of(results: &[RunResult]) -> i32 {
    results.iter().map(|r| r.exit_code).max().unwrap_or(0)
}
