//! Compiler invocations (`-c`, `-S`, `-E`).

use std::path::{Path, PathBuf};

use super::driver::{
    dependency_pass_args, expand_response_files, is_assembly, DriverArgs, DriverMode,
};
use super::{depfile, FileEntry, Outcome, RawBuildRecord, ToolContext};
use crate::error::{Error, Result};

fn temp_depfile() -> Result<tempfile::TempPath> {
    tempfile::Builder::new()
        .prefix("omnibor-dep-")
        .suffix(".d")
        .tempfile()
        .map(|f| f.into_temp_path())
        .map_err(|e| Error::io(std::env::temp_dir(), e))
}

fn read_depfile(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Analysis(format!("cannot read depfile {}: {e}", path.display())))?;
    depfile::parse_depfile(&text)
}

/// Dependencies of `source` from a dependency-only preprocessing run.
pub(crate) fn dependency_pass(
    argv: &[String],
    source: &str,
    ctx: &ToolContext<'_>,
) -> Result<Vec<String>> {
    let tmp = temp_depfile()?;
    let args = dependency_pass_args(&argv[1..], source, &tmp);
    let out = ctx.runner.capture(&ctx.real, &argv[0], &args, &ctx.cwd)?;
    if out.code != 0 {
        return Err(Error::Analysis(format!(
            "dependency pass for {source} failed: {}",
            out.stderr.trim()
        )));
    }
    read_depfile(&tmp)
}

/// Turn dependency names into hashed entries; `source` goes first.
pub(crate) fn dependency_entries(
    source: &str,
    deps: &[String],
    args: &DriverArgs,
    ctx: &ToolContext<'_>,
    warnings: &mut Vec<String>,
) -> Result<Vec<FileEntry>> {
    let mut names: Vec<PathBuf> = Vec::new();
    if source != "-" {
        names.push(PathBuf::from(source));
    }
    names.extend(deps.iter().map(PathBuf::from));
    if is_assembly(source) {
        let bytes = std::fs::read(ctx.abs(source)).map_err(|e| Error::io(ctx.abs(source), e))?;
        let dirs: Vec<PathBuf> = args.include_dirs.iter().map(PathBuf::from).collect();
        names.extend(super::asm::scan_incbin(&bytes, &ctx.cwd, &dirs)?);
    }
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for n in names {
        let abs = ctx.abs(&n);
        if !seen.insert(abs.clone()) {
            continue;
        }
        match ctx.entry(&abs) {
            Ok(e) => out.push(e),
            Err(e) => warnings.push(format!("skipping dependency {}: {e}", abs.display())),
        }
    }
    Ok(out)
}

pub fn analyze_compile(argv: &[String], ctx: &ToolContext<'_>) -> Result<Outcome> {
    let argv0 = argv[0].as_str();
    let user_args = &argv[1..];
    let args = DriverArgs::parse(&expand_response_files(user_args, &ctx.cwd));

    let no_output_file = args.mode == DriverMode::Preprocess && args.output.is_none();
    if args.sources.is_empty() || args.deps.deps_only || no_output_file {
        return Ok(Outcome::untraced(ctx.run(argv0, user_args)?));
    }

    let single = args.sources.len() == 1;
    let mut injected = None;
    let code = if single && !args.deps.writes_depfile {
        let tmp = temp_depfile()?;
        let mut run_args = user_args.to_vec();
        run_args.extend([
            "-MD".into(),
            "-MF".into(),
            tmp.to_string_lossy().into_owned(),
        ]);
        let code = ctx.run(argv0, &run_args)?;
        injected = Some(tmp);
        code
    } else {
        ctx.run(argv0, user_args)?
    };
    if code != 0 {
        return Ok(Outcome::untraced(code));
    }

    let mut warnings = Vec::new();
    let records = (|| -> Result<Vec<RawBuildRecord>> {
        let mut records = Vec::new();
        for source in &args.sources {
            let mut deps = if let Some(tmp) = &injected {
                read_depfile(tmp)?
            } else if single {
                let path = args
                    .deps
                    .depfile
                    .as_ref()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| args.default_depfile(source));
                read_depfile(&ctx.abs(path))?
            } else {
                dependency_pass(argv, source, ctx)?
            };
            if ctx.options.full_deps && args.deps.user_only && single {
                for d in dependency_pass(argv, source, ctx)? {
                    if !deps.contains(&d) {
                        deps.push(d);
                    }
                }
            }
            let Some(output) = args.output_for(source) else {
                continue;
            };
            let infiles = dependency_entries(source, &deps, &args, ctx, &mut warnings)?;
            let outfile = ctx.entry(&output)?;
            records.push(ctx.record(argv, outfile, infiles, Vec::new()));
        }
        Ok(records)
    })();
    Ok(Outcome {
        exit_code: code,
        records,
        warnings,
    })
}
