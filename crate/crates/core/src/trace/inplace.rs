//! Tools that rewrite a file (`strip`, `objcopy`, `ranlib`), either in
//! place or into a separate output.

use std::path::PathBuf;

use super::{Outcome, Tool, ToolContext};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    InPlace(String),
    Copy { input: String, output: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InPlaceCommand {
    pub targets: Vec<Target>,
    /// Files folded into the result (`--add-section name=file`).
    pub extra_inputs: Vec<String>,
}

const STRIP_ARGS: &[&str] = &[
    "-F",
    "-I",
    "-O",
    "-R",
    "-K",
    "-N",
    "-o",
    "--input-target",
    "--output-target",
    "--target",
    "--remove-section",
    "--keep-symbol",
    "--strip-symbol",
    "--remove-relocations",
    "--keep-section",
];

const OBJCOPY_ARGS: &[&str] = &[
    "-I",
    "-O",
    "-B",
    "-F",
    "-j",
    "-R",
    "-K",
    "-N",
    "-G",
    "-L",
    "-W",
    "-b",
    "-i",
    "--add-section",
    "--update-section",
    "--dump-section",
    "--set-section-flags",
    "--set-section-alignment",
    "--rename-section",
    "--redefine-sym",
    "--redefine-syms",
    "--add-symbol",
    "--change-section-address",
    "--change-section-lma",
    "--change-section-vma",
    "--adjust-section-vma",
    "--set-start",
    "--change-start",
    "--adjust-start",
    "--change-addresses",
    "--adjust-vma",
    "--gap-fill",
    "--pad-to",
    "--interleave",
    "--interleave-width",
    "--remove-section",
    "--only-section",
    "--keep-symbol",
    "--strip-symbol",
    "--keep-global-symbol",
    "--localize-symbol",
    "--globalize-symbol",
    "--weaken-symbol",
    "--keep-symbols",
    "--strip-symbols",
    "--strip-unneeded-symbol",
    "--strip-unneeded-symbols",
    "--keep-global-symbols",
    "--localize-symbols",
    "--globalize-symbols",
    "--weaken-symbols",
    "--input-target",
    "--output-target",
    "--target",
    "--binary-architecture",
    "--heap",
    "--stack",
    "--subsystem",
    "--file-alignment",
    "--image-base",
    "--section-alignment",
    "--prefix-symbols",
    "--prefix-sections",
    "--prefix-alloc-sections",
    "--remove-relocations",
    "--add-gnu-debuglink",
];

const RANLIB_ARGS: &[&str] = &["--plugin"];

fn section_file(v: &str) -> Option<String> {
    v.split_once('=')
        .map(|(_, f)| f.to_string())
        .filter(|f| !f.is_empty())
}

pub fn parse_in_place(tool: &str, args: &[String]) -> InPlaceCommand {
    let kind = super::tool_of(tool);
    let takes = match kind {
        Some(Tool::Strip) => STRIP_ARGS,
        Some(Tool::Objcopy) => OBJCOPY_ARGS,
        _ => RANLIB_ARGS,
    };
    let mut positionals = Vec::new();
    let mut output = None;
    let mut extra = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let a = args[i].as_str();
        i += 1;
        if !a.starts_with('-') {
            positionals.push(a.to_string());
            continue;
        }
        let (name, joined) = match a.split_once('=') {
            Some((n, v)) if a.starts_with("--") => (n, Some(v.to_string())),
            _ => (a, None),
        };
        let value = if joined.is_some() {
            joined
        } else if takes.contains(&name) {
            i += 1;
            args.get(i - 1).cloned()
        } else if kind == Some(Tool::Strip) && a.starts_with("-o") && a.len() > 2 {
            Some(a[2..].to_string())
        } else {
            None
        };
        let Some(value) = value else { continue };
        match name {
            "-o" if kind == Some(Tool::Strip) => output = Some(value),
            "--add-section" | "--update-section" => extra.extend(section_file(&value)),
            "--add-gnu-debuglink" => extra.push(value),
            _ => {}
        }
    }
    let targets = match kind {
        Some(Tool::Objcopy) => match positionals.as_slice() {
            [input] => vec![Target::InPlace(input.clone())],
            [input, out, ..] if input != out => vec![Target::Copy {
                input: input.clone(),
                output: out.clone(),
            }],
            [input, ..] => vec![Target::InPlace(input.clone())],
            [] => vec![],
        },
        Some(Tool::Strip) => match (output, positionals.as_slice()) {
            (Some(out), [input]) => vec![Target::Copy {
                input: input.clone(),
                output: out,
            }],
            _ => positionals.into_iter().map(Target::InPlace).collect(),
        },
        _ => positionals.into_iter().map(Target::InPlace).collect(),
    };
    InPlaceCommand {
        targets,
        extra_inputs: extra,
    }
}

pub fn analyze_in_place(argv: &[String], ctx: &ToolContext<'_>) -> Result<Outcome> {
    let args = super::driver::expand_response_files(&argv[1..], &ctx.cwd);
    let cmd = parse_in_place(&argv[0], &args);
    let mut in_place = Vec::new();
    let mut copies = Vec::new();
    for t in cmd.targets {
        match t {
            Target::InPlace(p) => in_place.push(PathBuf::from(p)),
            Target::Copy { input, output } => {
                copies.push((PathBuf::from(input), PathBuf::from(output)))
            }
        }
    }
    if copies.is_empty() {
        return run_in_place(argv, ctx, in_place, cmd.extra_inputs);
    }
    let code = ctx.run(&argv[0], &argv[1..])?;
    if code != 0 {
        return Ok(Outcome::untraced(code));
    }
    let records = copies
        .iter()
        .map(|(input, output)| {
            let mut infiles = vec![ctx.entry(input)?];
            for e in &cmd.extra_inputs {
                infiles.push(ctx.entry(e)?);
            }
            Ok(ctx.record(argv, ctx.entry(output)?, infiles, Vec::new()))
        })
        .collect();
    Ok(Outcome {
        exit_code: code,
        records,
        warnings: Vec::new(),
    })
}

/// Hash `targets` before and after running the tool; a record per target
/// whose bytes changed, with the pre-image as its input.
pub(crate) fn run_in_place(
    argv: &[String],
    ctx: &ToolContext<'_>,
    targets: Vec<PathBuf>,
    extra: Vec<String>,
) -> Result<Outcome> {
    let mut pre = Vec::new();
    let mut pre_error = None;
    for t in &targets {
        match ctx.entry(t) {
            Ok(e) => pre.push(e),
            Err(e) => {
                pre_error = Some(Error::Analysis(format!(
                    "cannot hash {} before running: {e}",
                    ctx.abs(t).display()
                )));
                break;
            }
        }
    }
    let code = ctx.run(&argv[0], &argv[1..])?;
    if code != 0 {
        return Ok(Outcome::untraced(code));
    }
    if let Some(e) = pre_error {
        return Ok(Outcome {
            exit_code: code,
            records: Err(e),
            warnings: Vec::new(),
        });
    }
    let records = (|| {
        let mut records = Vec::new();
        for before in pre {
            let after = ctx.entry(&before.path)?;
            if after.ids == before.ids {
                continue;
            }
            let mut infiles = vec![before];
            for e in &extra {
                infiles.push(ctx.entry(e)?);
            }
            records.push(ctx.record(argv, after, infiles, Vec::new()));
        }
        Ok(records)
    })();
    Ok(Outcome {
        exit_code: code,
        records,
        warnings: Vec::new(),
    })
}
