//! Build interception: classify tool invocations, work out what each one
//! read and wrote, and record that in the raw build log.

pub mod archive;
pub mod asm;
pub mod compile;
pub mod depfile;
pub mod driver;
pub mod inplace;
pub mod link;
pub mod patch;
pub mod postprocess;
pub mod rawlog;
pub mod shim;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use crate::error::{Error, Result};
use crate::identifier::HashAlgorithm;

pub use asm::scan_incbin;
pub use depfile::parse_depfile;
pub use postprocess::{post_process, EmbedMode, PostProcessSummary};
pub use rawlog::{parse_raw_log, write_raw_log, FileEntry, RawBuildRecord};
pub use shim::{run_shim, wrap_build, WrapOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ToolKind {
    Compile,
    Link,
    Archive,
    InPlace,
    Patch,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Tool {
    Driver,
    Linker,
    Ar,
    Strip,
    Objcopy,
    Ranlib,
    Patch,
}

/// Tool family from an executable name, tolerating target prefixes
/// (`x86_64-linux-gnu-gcc`) and version suffixes (`clang-14`, `gcc-11`).
pub(crate) fn tool_of(argv0: &str) -> Option<Tool> {
    let base = Path::new(argv0).file_name()?.to_str()?;
    let mut name = base;
    // drop a trailing -<version>
    if let Some((head, tail)) = name.rsplit_once('-') {
        if !tail.is_empty() && tail.chars().all(|c| c.is_ascii_digit() || c == '.') {
            name = head;
        }
    }
    let last = name.rsplit('-').next().unwrap_or(name);
    Some(match last {
        "gcc" | "g++" | "cc" | "c++" | "clang" | "clang++" => Tool::Driver,
        "ld" | "lld" | "ld.lld" | "ld.bfd" | "ld.gold" | "mold" => Tool::Linker,
        "ar" => Tool::Ar,
        "strip" => Tool::Strip,
        "objcopy" => Tool::Objcopy,
        "ranlib" => Tool::Ranlib,
        "patch" => Tool::Patch,
        _ => return None,
    })
}

pub fn classify(argv: &[String]) -> ToolKind {
    let Some(argv0) = argv.first() else {
        return ToolKind::Other;
    };
    match tool_of(argv0) {
        Some(Tool::Driver) => {
            let d = driver::DriverArgs::parse(&argv[1..]);
            if d.deps.deps_only || !d.has_inputs() {
                ToolKind::Other
            } else if d.mode == driver::DriverMode::Link {
                ToolKind::Link
            } else {
                ToolKind::Compile
            }
        }
        Some(Tool::Linker) => ToolKind::Link,
        Some(Tool::Ar) => ToolKind::Archive,
        Some(Tool::Strip | Tool::Objcopy | Tool::Ranlib) => ToolKind::InPlace,
        Some(Tool::Patch) => ToolKind::Patch,
        None => ToolKind::Other,
    }
}

/// Knobs shared by every analyzer.
#[derive(Debug, Clone)]
pub struct TraceOptions {
    pub algos: Vec<HashAlgorithm>,
    /// Run an extra dependency-only preprocessing pass when the user's own
    /// depfile flags leave system headers out.
    pub full_deps: bool,
    /// Library search path used for `-l` when `ld` is invoked directly.
    pub default_lib_dirs: Vec<PathBuf>,
    /// Where patches read from a pipe are saved so the log can name them.
    pub patch_dir: Option<PathBuf>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            algos: HashAlgorithm::ALL.to_vec(),
            full_deps: false,
            default_lib_dirs: Vec::new(),
            patch_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Captured {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Executes the real tools.
pub trait Runner {
    /// Run with inherited stdout/stderr; `stdin` bytes are piped in when given.
    fn run(
        &self,
        program: &Path,
        argv0: &str,
        args: &[String],
        cwd: &Path,
        stdin: Option<&[u8]>,
    ) -> Result<i32>;
    fn capture(&self, program: &Path, argv0: &str, args: &[String], cwd: &Path)
        -> Result<Captured>;
}

pub(crate) const SHIM_ACTIVE_ENV: &str = "OMNIBOR_SHIM_ACTIVE";

/// Runs processes for real, marking children so nested shims step aside.
#[derive(Debug, Default, Clone)]
pub struct SystemRunner {
    pub extra_env: Vec<(OsString, OsString)>,
}

impl SystemRunner {
    fn command(&self, program: &Path, argv0: &str, args: &[String], cwd: &Path) -> Command {
        // argv[0] stays the real path: gcc locates its own install tree from
        // it, and a bare name would lead it back to the shim directory
        let _ = argv0;
        let mut cmd = Command::new(program);
        cmd.args(args).current_dir(cwd).env(SHIM_ACTIVE_ENV, "1");
        for (k, v) in &self.extra_env {
            cmd.env(k, v);
        }
        cmd
    }
}

pub(crate) fn exit_code(status: std::process::ExitStatus) -> i32 {
    if let Some(c) = status.code() {
        return c;
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        if let Some(sig) = status.signal() {
            return 128 + sig;
        }
    }
    1
}

impl Runner for SystemRunner {
    fn run(
        &self,
        program: &Path,
        argv0: &str,
        args: &[String],
        cwd: &Path,
        stdin: Option<&[u8]>,
    ) -> Result<i32> {
        let mut cmd = self.command(program, argv0, args, cwd);
        if stdin.is_some() {
            cmd.stdin(Stdio::piped());
        }
        let mut child = cmd.spawn().map_err(|e| Error::io(program, e))?;
        if let Some(bytes) = stdin {
            let mut pipe = child.stdin.take().expect("piped stdin");
            // the child may exit without reading everything
            let _ = pipe.write_all(bytes);
        }
        let status = child.wait().map_err(|e| Error::io(program, e))?;
        Ok(exit_code(status))
    }

    fn capture(
        &self,
        program: &Path,
        argv0: &str,
        args: &[String],
        cwd: &Path,
    ) -> Result<Captured> {
        let out = self
            .command(program, argv0, args, cwd)
            .stdin(Stdio::null())
            .output()
            .map_err(|e| Error::io(program, e))?;
        Ok(Captured {
            code: exit_code(out.status),
            stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        })
    }
}

/// Everything an analyzer needs to run one intercepted command.
pub struct ToolContext<'a> {
    /// Resolved path of the real tool.
    pub real: PathBuf,
    pub cwd: PathBuf,
    pub runner: &'a dyn Runner,
    pub options: &'a TraceOptions,
    pub pid: u32,
    /// Bytes the shim read from its own stdin, for tools fed by a pipe.
    pub stdin: Option<StdinCapture>,
}

#[derive(Debug, Clone)]
pub struct StdinCapture {
    pub bytes: Vec<u8>,
    /// Path of the file stdin was redirected from, when it was one.
    pub path: Option<PathBuf>,
}

impl ToolContext<'_> {
    pub(crate) fn run(&self, argv0: &str, args: &[String]) -> Result<i32> {
        let stdin = self.stdin.as_ref().map(|s| s.bytes.as_slice());
        self.runner.run(&self.real, argv0, args, &self.cwd, stdin)
    }

    pub(crate) fn abs(&self, p: impl AsRef<Path>) -> PathBuf {
        crate::fsutil::absolutize(p.as_ref(), &self.cwd)
    }

    pub(crate) fn entry(&self, p: impl AsRef<Path>) -> Result<FileEntry> {
        FileEntry::hash(self.abs(p), &self.options.algos)
    }

    pub(crate) fn record(
        &self,
        argv: &[String],
        outfile: FileEntry,
        infiles: Vec<FileEntry>,
        dynlibs: Vec<FileEntry>,
    ) -> RawBuildRecord {
        RawBuildRecord {
            pid: self.pid,
            build_cmd: rawlog::render_command(argv),
            outfile,
            infiles: dedup_by_path(infiles),
            dynlibs: dedup_by_path(dynlibs),
        }
    }
}

fn dedup_by_path(entries: Vec<FileEntry>) -> Vec<FileEntry> {
    let mut seen = std::collections::HashSet::new();
    entries
        .into_iter()
        .filter(|e| seen.insert(e.path.clone()))
        .collect()
}

/// Result of running one intercepted command.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    /// Records to log; an error means the tool ran but could not be analyzed.
    pub records: Result<Vec<RawBuildRecord>>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub(crate) fn untraced(exit_code: i32) -> Self {
        Outcome {
            exit_code,
            records: Ok(Vec::new()),
            warnings: Vec::new(),
        }
    }
}

/// Run `argv` through the analyzer for its tool kind.
pub fn run_tool(argv: &[String], ctx: &ToolContext<'_>) -> Result<Outcome> {
    let argv0 = argv.first().map(String::as_str).unwrap_or_default();
    match (classify(argv), tool_of(argv0)) {
        (ToolKind::Compile, _) => compile::analyze_compile(argv, ctx),
        (ToolKind::Link, _) => link::analyze_link(argv, ctx),
        (ToolKind::Archive, _) => archive::analyze_archive(argv, ctx),
        (ToolKind::InPlace, _) => inplace::analyze_in_place(argv, ctx),
        (ToolKind::Patch, _) => patch::analyze_patch(argv, ctx),
        (ToolKind::Other, _) => Ok(Outcome::untraced(ctx.run(argv0, &argv[1..])?)),
    }
}
