//! GNU `patch`: one record per patched file.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::{FileEntry, Outcome, ToolContext};
use crate::error::{Error, Result};
use crate::identifier::gitoid_of_bytes;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatchCommand {
    pub strip: Option<usize>,
    pub directory: Option<String>,
    pub input: Option<String>,
    pub output: Option<String>,
    pub reject_file: Option<String>,
    /// First positional: the file every hunk applies to.
    pub original: Option<String>,
    pub dry_run: bool,
}

const SHORT_ARGS: &[char] = &['B', 'D', 'F', 'V', 'Y', 'd', 'g', 'i', 'o', 'p', 'r', 'z'];
const LONG_ARGS: &[&str] = &[
    "--prefix",
    "--ifdef",
    "--fuzz",
    "--version-control",
    "--basename-prefix",
    "--directory",
    "--get",
    "--input",
    "--output",
    "--strip",
    "--reject-file",
    "--suffix",
    "--quoting-style",
    "--reject-format",
    "--read-only",
];

pub fn parse_patch_args(args: &[String]) -> PatchCommand {
    let mut cmd = PatchCommand::default();
    let mut positionals = Vec::new();
    let mut i = 0;
    let set = |cmd: &mut PatchCommand, key: &str, v: String| match key {
        "p" | "--strip" => cmd.strip = v.parse().ok(),
        "d" | "--directory" => cmd.directory = Some(v),
        "i" | "--input" => cmd.input = Some(v),
        "o" | "--output" => cmd.output = Some(v),
        "r" | "--reject-file" => cmd.reject_file = Some(v),
        _ => {}
    };
    while i < args.len() {
        let a = args[i].as_str();
        i += 1;
        if a == "--" {
            positionals.extend(args[i..].iter().cloned());
            break;
        }
        if a == "--dry-run" {
            cmd.dry_run = true;
            continue;
        }
        if a.starts_with("--") {
            if let Some((k, v)) = a.split_once('=') {
                set(&mut cmd, k, v.to_string());
            } else if LONG_ARGS.contains(&a) {
                if let Some(v) = args.get(i) {
                    set(&mut cmd, a, v.clone());
                }
                i += 1;
            }
            continue;
        }
        if let Some(cluster) = a.strip_prefix('-').filter(|c| !c.is_empty()) {
            for (pos, c) in cluster.char_indices() {
                if SHORT_ARGS.contains(&c) {
                    let rest = &cluster[pos + c.len_utf8()..];
                    let v = if rest.is_empty() {
                        i += 1;
                        args.get(i - 1).cloned().unwrap_or_default()
                    } else {
                        rest.to_string()
                    };
                    set(&mut cmd, &c.to_string(), v);
                    break;
                }
            }
            continue;
        }
        positionals.push(a.to_string());
    }
    let mut pos = positionals.into_iter();
    cmd.original = pos.next();
    if cmd.input.is_none() {
        cmd.input = pos.next();
    }
    cmd
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchTarget {
    pub path: String,
    pub creates: bool,
    pub deletes: bool,
}

fn header_name(rest: &str) -> String {
    let rest = rest.trim_start();
    if let Some(q) = rest.strip_prefix('"') {
        let mut out = String::new();
        let mut chars = q.chars();
        while let Some(c) = chars.next() {
            match c {
                '"' => break,
                '\\' => match chars.next() {
                    Some('t') => out.push('\t'),
                    Some('n') => out.push('\n'),
                    Some(o) => out.push(o),
                    None => {}
                },
                _ => out.push(c),
            }
        }
        return out;
    }
    let end = rest.find('\t').unwrap_or(rest.len());
    let name = &rest[..end];
    name.split_whitespace().next().unwrap_or("").to_string()
}

fn strip_components(name: &str, strip: Option<usize>) -> Option<String> {
    if name == "/dev/null" {
        return Some(name.to_string());
    }
    match strip {
        None => Path::new(name)
            .file_name()
            .map(|n| n.to_string_lossy().into_owned()),
        Some(n) => {
            let parts: Vec<&str> = name.split('/').filter(|p| !p.is_empty()).collect();
            let lead = usize::from(name.starts_with('/'));
            let drop = n.saturating_sub(lead);
            if n == 0 {
                Some(name.to_string())
            } else if drop >= parts.len() {
                None
            } else {
                Some(parts[drop..].join("/"))
            }
        }
    }
}

/// Files a unified or context diff touches, in order of appearance.
pub fn patch_targets(patch: &str, strip: Option<usize>, dir: &Path) -> Vec<PatchTarget> {
    let lines: Vec<&str> = patch.lines().collect();
    let mut out: Vec<PatchTarget> = Vec::new();
    let mut i = 0;
    while i + 1 < lines.len() {
        let (old, new) = if let (Some(o), Some(n)) = (
            lines[i].strip_prefix("--- "),
            lines[i + 1].strip_prefix("+++ "),
        ) {
            (o, n)
        } else if let (Some(o), Some(n)) = (
            lines[i].strip_prefix("*** "),
            lines[i + 1].strip_prefix("--- "),
        ) {
            if lines[i].starts_with("***************") || o.trim_end().ends_with("****") {
                i += 1;
                continue;
            }
            (o, n)
        } else {
            i += 1;
            continue;
        };
        i += 2;
        let old = strip_components(&header_name(old), strip);
        let new = strip_components(&header_name(new), strip);
        let target = match (old.as_deref(), new.as_deref()) {
            (Some("/dev/null"), Some(n)) => PatchTarget {
                path: n.into(),
                creates: true,
                deletes: false,
            },
            (Some(o), Some("/dev/null")) => PatchTarget {
                path: o.into(),
                creates: false,
                deletes: true,
            },
            (Some(o), Some(n)) => {
                let path = if dir.join(o).exists() || !dir.join(n).exists() && o == n {
                    o
                } else {
                    n
                };
                PatchTarget {
                    path: path.into(),
                    creates: !dir.join(path).exists(),
                    deletes: false,
                }
            }
            (Some(o), None) => PatchTarget {
                path: o.into(),
                creates: false,
                deletes: false,
            },
            (None, Some(n)) => PatchTarget {
                path: n.into(),
                creates: !dir.join(n).exists(),
                deletes: false,
            },
            (None, None) => continue,
        };
        if !out.iter().any(|t| t.path == target.path) {
            out.push(target);
        }
    }
    out
}

fn file_state(path: &Path) -> Option<(std::time::SystemTime, u64)> {
    let m = std::fs::metadata(path).ok()?;
    Some((m.modified().ok()?, m.len()))
}

pub fn analyze_patch(argv: &[String], ctx: &ToolContext<'_>) -> Result<Outcome> {
    let argv0 = argv[0].as_str();
    let cmd = parse_patch_args(&super::driver::expand_response_files(&argv[1..], &ctx.cwd));
    let work_dir = match &cmd.directory {
        Some(d) => ctx.abs(d),
        None => ctx.cwd.clone(),
    };

    // where the patch text comes from, and the path that names it in the log
    let source: Option<(Vec<u8>, PathBuf)> = match (&cmd.input, &ctx.stdin) {
        (Some(p), _) if p != "-" => {
            let path = ctx.abs(p);
            std::fs::read(&path).ok().map(|b| (b, path))
        }
        (_, Some(s)) => match &s.path {
            Some(p) => Some((s.bytes.clone(), p.clone())),
            None => match &ctx.options.patch_dir {
                Some(dir) => {
                    let id = gitoid_of_bytes(&s.bytes, crate::HashAlgorithm::Sha1);
                    let path = dir.join(format!("{}.patch", id.hex()));
                    crate::fsutil::write_atomic(&path, &s.bytes)?;
                    Some((s.bytes.clone(), path))
                }
                None => None,
            },
        },
        _ => None,
    };
    let Some((patch_bytes, patch_path)) = source.filter(|_| !cmd.dry_run) else {
        return Ok(Outcome::untraced(ctx.run(argv0, &argv[1..])?));
    };

    let targets: Vec<PatchTarget> = match &cmd.original {
        Some(o) => vec![PatchTarget {
            path: o.clone(),
            creates: !work_dir.join(o).exists(),
            deletes: false,
        }],
        None => patch_targets(&String::from_utf8_lossy(&patch_bytes), cmd.strip, &work_dir),
    };
    let resolve = |p: &str| crate::fsutil::absolutize(Path::new(p), &work_dir);
    let reject_global = cmd.reject_file.as_ref().map(|r| ctx.abs(r));

    let mut pre: HashMap<PathBuf, FileEntry> = HashMap::new();
    let mut rej_before = HashMap::new();
    for t in &targets {
        let p = resolve(&t.path);
        if p.is_file() {
            pre.insert(p.clone(), ctx.entry(&p)?);
        }
        let rej = PathBuf::from(format!("{}.rej", p.display()));
        rej_before.insert(p, file_state(&rej));
    }
    let global_rej_before = reject_global.as_deref().and_then(file_state);

    let code = ctx.run(argv0, &argv[1..])?;
    if code >= 2 {
        return Ok(Outcome::untraced(code));
    }

    let mut warnings = Vec::new();
    let records = (|| {
        let patch_entry = ctx.entry(&patch_path)?;
        let global_rejected = reject_global.is_some()
            && reject_global.as_deref().and_then(file_state) != global_rej_before;
        if let Some(out) = &cmd.output {
            if code != 0 || global_rejected {
                warnings.push("patch reported failed hunks; no record".to_string());
                return Ok(Vec::new());
            }
            let mut infiles: Vec<FileEntry> = targets
                .iter()
                .filter_map(|t| pre.get(&resolve(&t.path)).cloned())
                .collect();
            infiles.push(patch_entry);
            return Ok(vec![ctx.record(argv, ctx.entry(out)?, infiles, Vec::new())]);
        }
        let mut records = Vec::new();
        for t in &targets {
            let p = resolve(&t.path);
            let rej = PathBuf::from(format!("{}.rej", p.display()));
            if global_rejected || file_state(&rej) != rej_before[&p] {
                warnings.push(format!("hunks failed for {}; no record", p.display()));
                continue;
            }
            if !p.is_file() {
                continue;
            }
            let after = ctx.entry(&p)?;
            let before = pre.get(&p);
            if before.is_some_and(|b| b.ids == after.ids) {
                continue;
            }
            let mut infiles: Vec<FileEntry> = before.cloned().into_iter().collect();
            infiles.push(patch_entry.clone());
            records.push(ctx.record(argv, after, infiles, Vec::new()));
        }
        if records.is_empty() && targets.is_empty() {
            return Err(Error::Analysis("no target files found in patch".into()));
        }
        Ok(records)
    })();
    Ok(Outcome {
        exit_code: code,
        records,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn option_parsing() {
        let c = parse_patch_args(&v("-p1 -d src -i fix.patch"));
        assert_eq!(c.strip, Some(1));
        assert_eq!(c.directory.as_deref(), Some("src"));
        assert_eq!(c.input.as_deref(), Some("fix.patch"));
        let c = parse_patch_args(&v("--strip=2 -N abc.txt abc.patch"));
        assert_eq!(c.strip, Some(2));
        assert_eq!(c.original.as_deref(), Some("abc.txt"));
        assert_eq!(c.input.as_deref(), Some("abc.patch"));
        let c = parse_patch_args(&v("-Np0 --dry-run"));
        assert_eq!(c.strip, Some(0));
        assert!(c.dry_run);
    }

    const ABC: &str = "--- a/abc.txt 2023-05-06 16:15:46.263661090 +0000\n+++ b/abc.txt 2023-05-06 16:16:08.543700135 +0000\n@@ -1 +1,2 @@\n abc\n+def\n";

    #[test]
    fn targets_from_headers() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("abc.txt"), "abc\n").unwrap();
        assert_eq!(
            patch_targets(ABC, Some(1), dir.path()),
            vec![PatchTarget {
                path: "abc.txt".into(),
                creates: false,
                deletes: false
            }]
        );
        // default: basename
        assert_eq!(patch_targets(ABC, None, dir.path())[0].path, "abc.txt");
        let multi = "--- /dev/null\n+++ b/new/file.c\n@@ -0,0 +1 @@\n+x\n--- a/gone.c\t2020\n+++ /dev/null\n@@ -1 +0,0 @@\n-x\n";
        let t = patch_targets(multi, Some(1), dir.path());
        assert_eq!(t.len(), 2);
        assert!(t[0].creates && t[0].path == "new/file.c");
        assert!(t[1].deletes && t[1].path == "gone.c");
        let context = "*** old/x.c\n--- new/x.c\n***************\n*** 1 ****\n--- 1 ----\n";
        assert_eq!(patch_targets(context, Some(1), dir.path())[0].path, "x.c");
    }
}
