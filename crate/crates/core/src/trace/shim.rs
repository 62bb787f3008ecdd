//! Search-path shims: every traced tool name is a symlink to this binary,
//! placed ahead of the real tools on `PATH` for the duration of a build.

use std::ffi::OsString;
use std::fs::OpenOptions;
use std::io::{IsTerminal, Read, Write};
use std::path::{Path, PathBuf};
use std::process::Command;

use super::{
    run_tool, tool_of, StdinCapture, SystemRunner, ToolContext, ToolKind, TraceOptions,
    SHIM_ACTIVE_ENV,
};
use crate::error::{Error, IoContext, Result};

pub const RAW_LOG_ENV: &str = "OMNIBOR_RAW_LOG";
pub const SHIM_DIR_ENV: &str = "OMNIBOR_SHIM_DIR";
pub const FULL_DEPS_ENV: &str = "OMNIBOR_FULL_DEPS";
pub const LIB_PATH_ENV: &str = "OMNIBOR_LIB_PATH";
pub const PATCH_DIR_ENV: &str = "OMNIBOR_PATCH_DIR";

/// Tool names always shimmed, besides any prefixed or versioned variants
/// found on `PATH`.
pub const SHIM_NAMES: &[&str] = &[
    "cc", "c++", "gcc", "g++", "clang", "clang++", "ld", "ld.lld", "ld.bfd", "ld.gold", "lld",
    "ar", "strip", "objcopy", "ranlib", "patch",
];

/// Whether a process started as `argv0` should act as a shim.
pub fn invoked_as_shim(argv0: &str) -> bool {
    let base = Path::new(argv0)
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("");
    !base.starts_with("omnibor") && tool_of(base).is_some()
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn is_executable(p: &Path) -> bool {
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        p.metadata()
            .is_ok_and(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
    }
    #[cfg(not(unix))]
    p.is_file()
}

/// First `name` on `path_var` that is not a shim.
pub fn find_real_tool(
    name: &str,
    path_var: Option<&OsString>,
    shim_dir: Option<&Path>,
) -> Option<PathBuf> {
    let me = std::env::current_exe().ok();
    std::env::split_paths(path_var?)
        .filter(|d| !shim_dir.is_some_and(|s| same_file(d, s)))
        .map(|d| d.join(name))
        .filter(|c| is_executable(c))
        .find(|c| !me.as_ref().is_some_and(|m| same_file(c, m)))
}

#[cfg(unix)]
fn exec_passthrough(real: &Path, argv: &[String]) -> i32 {
    use std::os::unix::process::CommandExt;
    let err = Command::new(real).args(&argv[1..]).exec();
    eprintln!("{}: {err}", argv[0]);
    126
}

#[cfg(not(unix))]
fn exec_passthrough(real: &Path, argv: &[String]) -> i32 {
    match Command::new(real).args(&argv[1..]).status() {
        Ok(s) => super::exit_code(s),
        Err(e) => {
            eprintln!("{}: {e}", argv[0]);
            126
        }
    }
}

/// Append records to the shared log with one `write` each.
pub fn append_records(log: &Path, records: &[super::RawBuildRecord]) -> Result<()> {
    if records.is_empty() {
        return Ok(());
    }
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(log)
        .with_path(log)?;
    for r in records {
        let bytes = r.to_bytes()?;
        f.write_all(&bytes).with_path(log)?;
    }
    Ok(())
}

fn capture_stdin() -> Option<StdinCapture> {
    let stdin = std::io::stdin();
    if stdin.is_terminal() {
        return None;
    }
    let path = std::fs::read_link("/proc/self/fd/0")
        .ok()
        .filter(|p| p.is_absolute() && p.is_file());
    let mut bytes = Vec::new();
    stdin.lock().read_to_end(&mut bytes).ok()?;
    Some(StdinCapture { bytes, path })
}

/// Body of a shim process. Returns the exit status to use.
pub fn run_shim(argv: Vec<String>) -> i32 {
    let name = Path::new(&argv[0])
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let shim_dir = std::env::var_os(SHIM_DIR_ENV).map(PathBuf::from);
    let Some(real) = find_real_tool(
        &name,
        std::env::var_os("PATH").as_ref(),
        shim_dir.as_deref(),
    ) else {
        eprintln!("{name}: command not found");
        return 127;
    };
    let log = std::env::var_os(RAW_LOG_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    let nested = std::env::var_os(SHIM_ACTIVE_ENV).is_some_and(|v| !v.is_empty());
    let Some(log) = log.filter(|_| !nested) else {
        return exec_passthrough(&real, &argv);
    };

    let options = TraceOptions {
        full_deps: std::env::var_os(FULL_DEPS_ENV).is_some_and(|v| v == "1"),
        default_lib_dirs: std::env::var_os(LIB_PATH_ENV)
            .map(|v| std::env::split_paths(&v).collect())
            .unwrap_or_default(),
        patch_dir: std::env::var_os(PATCH_DIR_ENV).map(PathBuf::from),
        ..TraceOptions::default()
    };
    let cwd = match std::env::current_dir() {
        Ok(c) => c,
        Err(_) => return exec_passthrough(&real, &argv),
    };
    let stdin = if super::classify(&argv) == ToolKind::Patch {
        let cmd = super::patch::parse_patch_args(&argv[1..]);
        if cmd.input.as_deref().is_none_or(|i| i == "-") {
            capture_stdin()
        } else {
            None
        }
    } else {
        None
    };
    let runner = SystemRunner::default();
    let ctx = ToolContext {
        real: real.clone(),
        cwd,
        runner: &runner,
        options: &options,
        pid: std::process::id(),
        stdin,
    };
    let outcome = match run_tool(&argv, &ctx) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{name}: {e}");
            return 127;
        }
    };
    for w in &outcome.warnings {
        eprintln!("omnibor: {name}: {w}");
    }
    match &outcome.records {
        Ok(records) => {
            if let Err(e) = append_records(&log, records) {
                eprintln!("omnibor: {name}: cannot write raw log: {e}");
            }
        }
        Err(e) => eprintln!("omnibor: {name}: {e}"),
    }
    outcome.exit_code
}

#[derive(Debug, Clone)]
pub struct WrapOptions {
    /// The binary the shims point at (this crate's `omnibor` executable).
    pub shim_exe: PathBuf,
    pub omnibor_dir: PathBuf,
    /// Defaults to `<omnibor_dir>/raw_build.log`.
    pub log: Option<PathBuf>,
    /// Keep an existing log instead of starting a fresh one.
    pub append: bool,
    pub full_deps: bool,
    pub lib_dirs: Vec<PathBuf>,
}

impl WrapOptions {
    pub fn new(shim_exe: impl Into<PathBuf>, omnibor_dir: impl Into<PathBuf>) -> Self {
        WrapOptions {
            shim_exe: shim_exe.into(),
            omnibor_dir: omnibor_dir.into(),
            log: None,
            append: false,
            full_deps: false,
            lib_dirs: Vec::new(),
        }
    }

    pub fn log_path(&self) -> PathBuf {
        self.log
            .clone()
            .unwrap_or_else(|| self.omnibor_dir.join("raw_build.log"))
    }
}

fn shim_names(path_var: Option<&OsString>) -> Vec<String> {
    let mut names: Vec<String> = SHIM_NAMES.iter().map(|s| s.to_string()).collect();
    if let Some(p) = path_var {
        for dir in std::env::split_paths(p) {
            let Ok(entries) = std::fs::read_dir(&dir) else {
                continue;
            };
            for e in entries.flatten() {
                let n = e.file_name().to_string_lossy().into_owned();
                if tool_of(&n).is_some() && !n.starts_with("omnibor") && !names.contains(&n) {
                    names.push(n);
                }
            }
        }
    }
    names
}

/// Run `argv` with shims installed; returns the build's exit status.
pub fn wrap_build(argv: &[String], opts: &WrapOptions) -> Result<i32> {
    let Some((program, args)) = argv.split_first() else {
        return Err(Error::Analysis("empty build command".into()));
    };
    std::fs::create_dir_all(&opts.omnibor_dir).with_path(&opts.omnibor_dir)?;
    let omnibor_dir = opts
        .omnibor_dir
        .canonicalize()
        .with_path(&opts.omnibor_dir)?;
    let log = crate::fsutil::absolutize(&opts.log_path(), &std::env::current_dir().with_path(".")?);
    if !opts.append || !log.exists() {
        std::fs::write(&log, b"").with_path(&log)?;
    }
    let shim_dir = tempfile::Builder::new()
        .prefix("omnibor-shims-")
        .tempdir()
        .map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let path_var = std::env::var_os("PATH");
    let exe = opts.shim_exe.canonicalize().with_path(&opts.shim_exe)?;
    for name in shim_names(path_var.as_ref()) {
        let link = shim_dir.path().join(&name);
        #[cfg(unix)]
        std::os::unix::fs::symlink(&exe, &link).with_path(&link)?;
        #[cfg(not(unix))]
        std::fs::copy(&exe, &link).with_path(&link)?;
    }
    let mut new_path = vec![shim_dir.path().to_path_buf()];
    if let Some(p) = &path_var {
        new_path.extend(std::env::split_paths(p));
    }
    let new_path = std::env::join_paths(new_path).map_err(|e| Error::Analysis(e.to_string()))?;

    // resolve the program through the shimmed PATH, as a shell would
    let resolved = if program.contains('/') {
        None
    } else {
        std::env::split_paths(&new_path)
            .map(|d| d.join(program))
            .find(|c| is_executable(c))
    };
    let mut cmd = Command::new(resolved.as_deref().unwrap_or(Path::new(program)));
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.arg0(program);
    }
    cmd.args(args)
        .env("PATH", &new_path)
        .env(RAW_LOG_ENV, &log)
        .env(SHIM_DIR_ENV, shim_dir.path())
        .env(PATCH_DIR_ENV, omnibor_dir.join("patches"))
        .env_remove(SHIM_ACTIVE_ENV);
    if opts.full_deps {
        cmd.env(FULL_DEPS_ENV, "1");
    }
    if !opts.lib_dirs.is_empty() {
        let joined =
            std::env::join_paths(&opts.lib_dirs).map_err(|e| Error::Analysis(e.to_string()))?;
        cmd.env(LIB_PATH_ENV, joined);
    }
    let status = cmd.status().map_err(|e| Error::io(program, e))?;
    Ok(super::exit_code(status))
}
