//! Link steps: the effective linker command line decides inputs.

use std::path::{Path, PathBuf};

use super::driver::{expand_response_files, DriverArgs};
use super::{compile, FileEntry, Outcome, RawBuildRecord, Tool, ToolContext};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkInput {
    File(String),
    /// `-lname`; `static_only` when `-Bstatic` (or `-static`) is in force.
    Lib {
        name: String,
        static_only: bool,
    },
    Script(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkLine {
    pub output: String,
    pub inputs: Vec<LinkInput>,
    pub search_dirs: Vec<String>,
}

const LD_TAKES_ARG: &[&str] = &[
    "-o",
    "-L",
    "-l",
    "-T",
    "-m",
    "-z",
    "-e",
    "-h",
    "-u",
    "-y",
    "-Y",
    "-F",
    "-f",
    "-A",
    "-a",
    "-G",
    "-R",
    "-P",
    "-soname",
    "-rpath",
    "-rpath-link",
    "-dynamic-linker",
    "-plugin",
    "-plugin-opt",
    "-Map",
    "-init",
    "-fini",
    "--defsym",
    "-Ttext",
    "-Tdata",
    "-Tbss",
    "-Ttext-segment",
    "--version-script",
    "--dynamic-list",
    "--exclude-libs",
    "--hash-style",
    "--sysroot",
    "--script",
    "--entry",
    "--output",
    "--library",
    "--library-path",
    "--soname",
    "--undefined",
    "--wrap",
    "--retain-symbols-file",
    "--trace-symbol",
    "--section-start",
    "-b",
    "--format",
    "--oformat",
    "--dependency-file",
    "--auxiliary",
    "--filter",
    "--just-symbols",
    "--out-implib",
    "--plugin",
    "--plugin-opt",
    "--sort-section",
    "--audit",
    "--depaudit",
    "--image-base",
    "--build-id-dir",
    "-dT",
    "--default-script",
    "-mllvm",
    "--lto-O",
    "--thinlto-cache-dir",
];

pub fn parse_ld_args(args: &[String]) -> LinkLine {
    let mut output = "a.out".to_string();
    let mut inputs = Vec::new();
    let mut search_dirs = Vec::new();
    let mut static_only = false;
    let mut state_stack = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let a = args[i].as_str();
        let next = args.get(i + 1).cloned();
        i += 1;
        if !a.starts_with('-') || a == "-" {
            inputs.push(LinkInput::File(a.to_string()));
            continue;
        }
        match a {
            "-Bstatic" | "-dn" | "-non_shared" | "-static" => static_only = true,
            "-Bdynamic" | "-dy" | "-call_shared" => static_only = false,
            "--push-state" => state_stack.push(static_only),
            "--pop-state" => static_only = state_stack.pop().unwrap_or(false),
            _ => {}
        }
        if LD_TAKES_ARG.contains(&a) {
            let Some(v) = next else { break };
            i += 1;
            match a {
                "-o" | "--output" => output = v,
                "-L" | "--library-path" => search_dirs.push(v),
                "-l" | "--library" => inputs.push(LinkInput::Lib {
                    name: v,
                    static_only,
                }),
                "-T" | "--script" | "-dT" | "--default-script" => inputs.push(LinkInput::Script(v)),
                _ => {}
            }
            continue;
        }
        let joined = |p: &str| {
            a.strip_prefix(p)
                .filter(|v| !v.is_empty())
                .map(str::to_string)
        };
        if let Some(v) = joined("--output=") {
            output = v;
        } else if let Some(v) = joined("--library-path=") {
            search_dirs.push(v);
        } else if let Some(v) = joined("--library=") {
            inputs.push(LinkInput::Lib {
                name: v,
                static_only,
            });
        } else if let Some(v) = joined("--script=") {
            inputs.push(LinkInput::Script(v));
        } else if let Some(v) = joined("-o") {
            output = v;
        } else if let Some(v) = joined("-L") {
            search_dirs.push(v);
        } else if let Some(v) = joined("-l") {
            inputs.push(LinkInput::Lib {
                name: v,
                static_only,
            });
        } else if a.starts_with("-T")
            && !a.starts_with("-Tt")
            && !a.starts_with("-Td")
            && !a.starts_with("-Tb")
        {
            if let Some(v) = joined("-T") {
                inputs.push(LinkInput::Script(v));
            }
        }
    }
    LinkLine {
        output,
        inputs,
        search_dirs,
    }
}

/// Shared objects by name: `libx.so`, `libx.so.1.2`.
pub fn is_shared_object(path: &str) -> bool {
    let name = Path::new(path)
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or(path);
    name.ends_with(".so") || name.contains(".so.")
}

/// The linker line from a driver's `-###` dry run.
pub fn effective_line(dry_run_stderr: &str) -> Option<Vec<String>> {
    dry_run_stderr
        .lines()
        .filter(|l| l.starts_with(' '))
        .filter_map(shlex::split)
        .rfind(|argv| {
            argv.first().is_some_and(|p| {
                let base = Path::new(p)
                    .file_name()
                    .and_then(|n| n.to_str())
                    .unwrap_or("");
                base == "collect2" || matches!(super::tool_of(base), Some(Tool::Linker))
            })
        })
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ResolvedInputs {
    pub infiles: Vec<PathBuf>,
    pub dynlibs: Vec<PathBuf>,
    /// Named inputs that did not exist (driver temporaries, typically).
    pub missing: Vec<PathBuf>,
}

/// Route every link input to infiles or dynlibs, resolving `-l` against
/// the line's `-L` directories followed by `default_dirs`.
pub fn resolve_inputs(
    line: &LinkLine,
    cwd: &Path,
    default_dirs: &[PathBuf],
) -> Result<ResolvedInputs> {
    let abs = |p: &Path| crate::fsutil::absolutize(p, cwd);
    let dirs: Vec<PathBuf> = line
        .search_dirs
        .iter()
        .map(|d| abs(Path::new(d)))
        .chain(default_dirs.iter().map(|d| abs(d)))
        .collect();
    let mut out = ResolvedInputs::default();
    for input in &line.inputs {
        match input {
            LinkInput::File(f) | LinkInput::Script(f) => {
                let p = abs(Path::new(f));
                if !p.is_file() {
                    out.missing.push(p);
                } else if matches!(input, LinkInput::File(_)) && is_shared_object(f) {
                    out.dynlibs.push(p);
                } else {
                    out.infiles.push(p);
                }
            }
            LinkInput::Lib { name, static_only } => {
                let candidates: Vec<String> = if let Some(exact) = name.strip_prefix(':') {
                    vec![exact.to_string()]
                } else if *static_only {
                    vec![format!("lib{name}.a")]
                } else {
                    vec![format!("lib{name}.so"), format!("lib{name}.a")]
                };
                let hit = dirs
                    .iter()
                    .find_map(|d| candidates.iter().map(|c| d.join(c)).find(|p| p.is_file()));
                let Some(p) = hit else {
                    return Err(Error::Analysis(format!("cannot resolve library -l{name}")));
                };
                if is_shared_object(&p.to_string_lossy()) {
                    out.dynlibs.push(p);
                } else {
                    out.infiles.push(p);
                }
            }
        }
    }
    Ok(out)
}

pub fn analyze_link(argv: &[String], ctx: &ToolContext<'_>) -> Result<Outcome> {
    let argv0 = argv[0].as_str();
    let user_args = &argv[1..];
    let expanded = expand_response_files(user_args, &ctx.cwd);
    let is_driver = matches!(super::tool_of(argv0), Some(Tool::Driver));

    let (line, default_dirs, sources) = if is_driver {
        let mut dry = user_args.to_vec();
        dry.push("-###".into());
        let probe = ctx.runner.capture(&ctx.real, argv0, &dry, &ctx.cwd)?;
        let line = (probe.code == 0)
            .then(|| effective_line(&probe.stderr))
            .flatten();
        let Some(line) = line else {
            // let the real driver report whatever is wrong
            return Ok(Outcome::untraced(ctx.run(argv0, user_args)?));
        };
        let d = DriverArgs::parse(&expanded);
        (
            parse_ld_args(&expand_response_files(&line[1..], &ctx.cwd)),
            Vec::new(),
            d.sources,
        )
    } else {
        (
            parse_ld_args(&expanded),
            ctx.options.default_lib_dirs.clone(),
            Vec::new(),
        )
    };

    let code = ctx.run(argv0, user_args)?;
    if code != 0 {
        return Ok(Outcome::untraced(code));
    }
    let mut warnings = Vec::new();
    let records = (|| -> Result<Vec<RawBuildRecord>> {
        let resolved = resolve_inputs(&line, &ctx.cwd, &default_dirs)?;
        let mut infiles: Vec<FileEntry> = resolved
            .infiles
            .iter()
            .map(|p| ctx.entry(p))
            .collect::<Result<_>>()?;
        let dynlibs: Vec<FileEntry> = resolved
            .dynlibs
            .iter()
            .map(|p| ctx.entry(p))
            .collect::<Result<_>>()?;
        if !sources.is_empty() {
            let d = DriverArgs::parse(&expanded);
            for s in &sources {
                let deps = compile::dependency_pass(argv, s, ctx)?;
                infiles.extend(compile::dependency_entries(
                    s,
                    &deps,
                    &d,
                    ctx,
                    &mut warnings,
                )?);
            }
        } else {
            for m in &resolved.missing {
                warnings.push(format!("link input {} not found", m.display()));
            }
        }
        let outfile = ctx.entry(&line.output)?;
        Ok(vec![ctx.record(argv, outfile, infiles, dynlibs)])
    })();
    Ok(Outcome {
        exit_code: code,
        records,
        warnings,
    })
}
