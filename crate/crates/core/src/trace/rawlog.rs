//! Raw build log: one block per intercepted command.
//!
//! ```text
//! outfile: <hex> path: <abs path>
//! infile: <hex> path: <abs path>
//! dynlib: <hex> path: <abs path>
//! build_cmd: <command line>
//! ==== End of raw info for PID <pid> process
//!
//! ```
//!
//! A file line may carry several ids (one per algorithm, space separated)
//! before `path:`; a SHA-1-only log is exactly the classic format.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::identifier::{gitoids_of_file, ArtifactId, HashAlgorithm};

const END_PREFIX: &str = "==== End of raw info for PID ";
const END_SUFFIX: &str = " process";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileEntry {
    pub ids: Vec<ArtifactId>,
    pub path: PathBuf,
}

impl FileEntry {
    pub fn new(path: impl Into<PathBuf>, ids: Vec<ArtifactId>) -> Self {
        FileEntry {
            ids,
            path: path.into(),
        }
    }

    /// Hash `path` under every algorithm in `algos`.
    pub fn hash(path: impl Into<PathBuf>, algos: &[HashAlgorithm]) -> Result<Self> {
        let path = path.into();
        let ids = gitoids_of_file(&path, algos)?;
        Ok(FileEntry { ids, path })
    }

    pub fn id(&self, algo: HashAlgorithm) -> Option<ArtifactId> {
        self.ids.iter().copied().find(|i| i.algo() == algo)
    }

    pub(crate) fn render(&self, tag: &str) -> Result<String> {
        let path = self.path.to_str().ok_or_else(|| {
            Error::Analysis(format!("path {} is not valid UTF-8", self.path.display()))
        })?;
        if path.contains('\n') {
            return Err(Error::Analysis(format!("path {path:?} contains a newline")));
        }
        if !self.path.is_absolute() {
            return Err(Error::Analysis(format!("path {path} is not absolute")));
        }
        let ids: Vec<String> = self.ids.iter().map(|i| i.hex()).collect();
        Ok(format!("{tag}: {} path: {path}", ids.join(" ")))
    }

    /// Parse the part after `<tag>: `.
    pub(crate) fn parse_body(body: &str) -> std::result::Result<Self, String> {
        let (ids, path) = body
            .split_once(" path: ")
            .ok_or_else(|| "missing ` path: ` separator".to_string())?;
        let ids = ids
            .split(' ')
            .map(|h| ArtifactId::from_hex_any(h).map_err(|e| e.to_string()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if ids.is_empty() {
            return Err("no ids".into());
        }
        let path = PathBuf::from(path);
        if !path.is_absolute() {
            return Err(format!("relative path `{}`", path.display()));
        }
        Ok(FileEntry { ids, path })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawBuildRecord {
    pub pid: u32,
    pub build_cmd: String,
    pub outfile: FileEntry,
    pub infiles: Vec<FileEntry>,
    pub dynlibs: Vec<FileEntry>,
}

impl RawBuildRecord {
    /// Name of the tool that ran, used as the metadata context.
    pub fn context(&self) -> String {
        context_of(&self.build_cmd)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = String::new();
        out.push_str(&self.outfile.render("outfile")?);
        out.push('\n');
        for f in &self.infiles {
            out.push_str(&f.render("infile")?);
            out.push('\n');
        }
        for f in &self.dynlibs {
            out.push_str(&f.render("dynlib")?);
            out.push('\n');
        }
        if self.build_cmd.contains('\n') {
            return Err(Error::Analysis("build command contains a newline".into()));
        }
        out.push_str("build_cmd: ");
        out.push_str(&self.build_cmd);
        out.push('\n');
        out.push_str(&format!("{END_PREFIX}{}{END_SUFFIX}\n\n", self.pid));
        Ok(out.into_bytes())
    }
}

/// Basename of the first word of a command line.
pub fn context_of(build_cmd: &str) -> String {
    let first = shlex::split(build_cmd)
        .and_then(|v| v.into_iter().next())
        .or_else(|| build_cmd.split_whitespace().next().map(str::to_string))
        .unwrap_or_default();
    Path::new(&first)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .filter(|n| !n.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Render an argv as a single shell-readable line.
pub fn render_command(argv: &[String]) -> String {
    argv.iter()
        .map(|a| {
            let a = a.replace('\n', "\\n");
            if !a.is_empty()
                && a.chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_./=:,+@%^".contains(c))
            {
                a
            } else {
                shlex::try_quote(&a).map(|q| q.into_owned()).unwrap_or(a)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_raw_log(records: &[RawBuildRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        out.extend_from_slice(&r.to_bytes()?);
    }
    Ok(out)
}

pub fn parse_raw_log(bytes: &[u8]) -> Result<Vec<RawBuildRecord>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::RawLogParse {
        offset: e.valid_up_to(),
        reason: "not valid UTF-8".into(),
    })?;
    let mut records = Vec::new();
    let mut outfile: Option<FileEntry> = None;
    let mut infiles = Vec::new();
    let mut dynlibs = Vec::new();
    let mut build_cmd: Option<String> = None;
    let mut offset = 0usize;

    for raw_line in text.split_inclusive('\n') {
        let line_offset = offset;
        offset += raw_line.len();
        let line = raw_line.strip_suffix('\n').unwrap_or(raw_line);
        let err = |reason: String| Error::RawLogParse {
            offset: line_offset,
            reason,
        };
        if line.is_empty() {
            continue;
        }
        let in_record = outfile.is_some();
        if let Some(body) = line.strip_prefix("outfile: ") {
            if in_record {
                return Err(err("outfile inside an unterminated record".into()));
            }
            outfile = Some(FileEntry::parse_body(body).map_err(err)?);
        } else if let Some(body) = line.strip_prefix("infile: ") {
            if !in_record || build_cmd.is_some() || !dynlibs.is_empty() {
                return Err(err("infile out of place".into()));
            }
            infiles.push(FileEntry::parse_body(body).map_err(err)?);
        } else if let Some(body) = line.strip_prefix("dynlib: ") {
            if !in_record || build_cmd.is_some() {
                return Err(err("dynlib out of place".into()));
            }
            dynlibs.push(FileEntry::parse_body(body).map_err(err)?);
        } else if let Some(cmd) = line.strip_prefix("build_cmd: ") {
            if !in_record || build_cmd.is_some() {
                return Err(err("build_cmd out of place".into()));
            }
            build_cmd = Some(cmd.to_string());
        } else if let Some(rest) = line.strip_prefix(END_PREFIX) {
            let pid = rest
                .strip_suffix(END_SUFFIX)
                .and_then(|p| p.parse::<u32>().ok())
                .ok_or_else(|| err(format!("malformed end marker `{line}`")))?;
            let (Some(out), Some(cmd)) = (outfile.take(), build_cmd.take()) else {
                return Err(err("end marker before outfile and build_cmd".into()));
            };
            records.push(RawBuildRecord {
                pid,
                build_cmd: cmd,
                outfile: out,
                infiles: std::mem::take(&mut infiles),
                dynlibs: std::mem::take(&mut dynlibs),
            });
        } else {
            return Err(err(format!("unrecognized line `{line}`")));
        }
    }
    if outfile.is_some() {
        return Err(Error::RawLogParse {
            offset,
            reason: "log ends inside a record".into(),
        });
    }
    Ok(records)
}
