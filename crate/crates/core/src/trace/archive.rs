//! `ar` invocations.

use std::path::PathBuf;

use super::inplace;
use super::{Outcome, ToolContext};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArchiveCommand {
    /// `r` or `q`: members go into the archive.
    Build {
        archive: String,
        members: Vec<String>,
    },
    /// `d`, `m`, or a bare `s`: the archive is rewritten from itself.
    Modify { archive: String },
    /// `t`, `x`, `p`: nothing is built.
    ReadOnly,
}

pub fn parse_ar(args: &[String]) -> ArchiveCommand {
    let mut i = 0;
    let mut keys = String::new();
    // leading long options, then one or more key clusters
    while i < args.len() {
        let a = &args[i];
        if a == "--plugin" || a == "--target" || a == "--output" {
            i += 2;
        } else if a.starts_with("--") || a.starts_with("-X") {
            i += 1;
        } else if keys.is_empty() {
            keys.push_str(a.trim_start_matches('-'));
            i += 1;
        } else if a.starts_with('-') && a.len() > 1 {
            keys.push_str(&a[1..]);
            i += 1;
        } else {
            break;
        }
    }
    let op = keys
        .chars()
        .find(|c| "dmpqrtx".contains(*c))
        .or_else(|| keys.contains('s').then_some('s'));
    let mut rest = args[i.min(args.len())..].iter();
    if keys.contains(['a', 'b', 'i']) && matches!(op, Some('r' | 'm' | 'q')) {
        rest.next();
    }
    if keys.contains('N') {
        rest.next();
    }
    let Some(archive) = rest.next().cloned() else {
        return ArchiveCommand::ReadOnly;
    };
    match op {
        Some('r' | 'q') => ArchiveCommand::Build {
            archive,
            members: rest.cloned().collect(),
        },
        Some('d' | 'm' | 's') => ArchiveCommand::Modify { archive },
        _ => ArchiveCommand::ReadOnly,
    }
}

pub fn analyze_archive(argv: &[String], ctx: &ToolContext<'_>) -> Result<Outcome> {
    let argv0 = argv[0].as_str();
    let args = super::driver::expand_response_files(&argv[1..], &ctx.cwd);
    match parse_ar(&args) {
        ArchiveCommand::ReadOnly => Ok(Outcome::untraced(ctx.run(argv0, &argv[1..])?)),
        ArchiveCommand::Modify { archive } => {
            inplace::run_in_place(argv, ctx, vec![PathBuf::from(archive)], Vec::new())
        }
        ArchiveCommand::Build { archive, members } => {
            let archive_path = ctx.abs(&archive);
            let pre = if archive_path.is_file() {
                Some(ctx.entry(&archive_path)?)
            } else {
                None
            };
            let code = ctx.run(argv0, &argv[1..])?;
            if code != 0 {
                return Ok(Outcome::untraced(code));
            }
            let records = (|| {
                let mut infiles = Vec::new();
                if let Some(p) = pre {
                    infiles.push(p);
                }
                for m in &members {
                    infiles.push(ctx.entry(m)?);
                }
                let outfile = ctx.entry(&archive_path)?;
                Ok(vec![ctx.record(argv, outfile, infiles, Vec::new())])
            })();
            Ok(Outcome {
                exit_code: code,
                records,
                warnings: Vec::new(),
            })
        }
    }
}
