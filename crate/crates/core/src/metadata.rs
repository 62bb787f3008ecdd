//! Per-artifact build metadata, kept beside the manifest store.
//!
//! Files live at `<dir>/metadata/<context>/<output hex>`, one per algorithm,
//! and use the raw log's line syntax plus a `bom:` line naming the manifest
//! OID and an optional `embedded_outfile:` line for the id the output has
//! after an identifier was embedded in it.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, IoContext, Result};
use crate::fsutil::write_atomic;
use crate::identifier::{ArtifactId, HashAlgorithm};
use crate::trace::rawlog::FileEntry;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetadataFile {
    pub context: String,
    pub algo: HashAlgorithm,
    pub outfile: FileEntry,
    pub infiles: Vec<FileEntry>,
    pub dynlibs: Vec<FileEntry>,
    pub build_cmd: String,
    pub bom: ArtifactId,
    pub embedded_outfile: Option<ArtifactId>,
}

impl MetadataFile {
    pub fn output_id(&self) -> ArtifactId {
        self.outfile.ids[0]
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
        out.push_str(&format!(
            "build_cmd: {}\n",
            self.build_cmd.replace('\n', " ")
        ));
        out.push_str(&format!("bom: {}\n", self.bom.hex()));
        if let Some(e) = self.embedded_outfile {
            out.push_str(&format!("embedded_outfile: {}\n", e.hex()));
        }
        Ok(out.into_bytes())
    }

    pub fn parse(context: &str, bytes: &[u8]) -> Result<Self> {
        let bad = |reason: String| Error::Document(format!("metadata: {reason}"));
        let text = std::str::from_utf8(bytes).map_err(|_| bad("not UTF-8".into()))?;
        let mut outfile = None;
        let mut infiles = Vec::new();
        let mut dynlibs = Vec::new();
        let mut build_cmd = String::new();
        let mut bom = None;
        let mut embedded = None;
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (tag, body) = line
                .split_once(": ")
                .ok_or_else(|| bad(format!("bad line `{line}`")))?;
            match tag {
                "outfile" => outfile = Some(FileEntry::parse_body(body).map_err(bad)?),
                "infile" => infiles.push(FileEntry::parse_body(body).map_err(bad)?),
                "dynlib" => dynlibs.push(FileEntry::parse_body(body).map_err(bad)?),
                "build_cmd" => build_cmd = body.to_string(),
                "bom" => bom = Some(ArtifactId::from_hex_any(body)?),
                "embedded_outfile" => embedded = Some(ArtifactId::from_hex_any(body)?),
                _ => return Err(bad(format!("unknown tag `{tag}`"))),
            }
        }
        let outfile: FileEntry = outfile.ok_or_else(|| bad("missing outfile".into()))?;
        let bom = bom.ok_or_else(|| bad("missing bom".into()))?;
        Ok(MetadataFile {
            context: context.to_string(),
            algo: bom.algo(),
            outfile,
            infiles,
            dynlibs,
            build_cmd,
            bom,
            embedded_outfile: embedded,
        })
    }
}

#[derive(Debug, Clone)]
pub struct MetadataStore {
    root: PathBuf,
}

impl MetadataStore {
    /// `omnibor_dir` is the same directory a [`crate::ManifestStore`] uses.
    pub fn new(omnibor_dir: impl Into<PathBuf>) -> Self {
        MetadataStore {
            root: omnibor_dir.into().join("metadata"),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, context: &str, output: &ArtifactId) -> PathBuf {
        self.root.join(sanitize(context)).join(output.hex())
    }

    pub fn write(&self, file: &MetadataFile) -> Result<PathBuf> {
        let path = self.path_for(&file.context, &file.output_id());
        write_atomic(&path, &file.to_bytes()?)?;
        Ok(path)
    }

    pub fn read(&self, context: &str, output: &ArtifactId) -> Result<Option<MetadataFile>> {
        let path = self.path_for(context, output);
        match fs::read(&path) {
            Ok(bytes) => MetadataFile::parse(context, &bytes).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    fn contexts(&self) -> Result<Vec<String>> {
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&self.root, e)),
        };
        let mut out = Vec::new();
        for entry in entries {
            let entry = entry.with_path(&self.root)?;
            if entry.file_type().with_path(entry.path())?.is_dir() {
                out.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        out.sort();
        Ok(out)
    }

    /// Metadata for an artifact, matched on either its recorded output id or
    /// the id it has after embedding.
    pub fn find_by_output(&self, id: &ArtifactId) -> Result<Option<MetadataFile>> {
        for ctx in self.contexts()? {
            if let Some(m) = self.read(&ctx, id)? {
                return Ok(Some(m));
            }
        }
        Ok(self
            .all()?
            .into_iter()
            .find(|m| m.embedded_outfile == Some(*id)))
    }

    /// Metadata whose `bom` line names `oid`.
    pub fn find_by_oid(&self, oid: &ArtifactId) -> Result<Option<MetadataFile>> {
        Ok(self.all()?.into_iter().find(|m| m.bom == *oid))
    }

    pub fn all(&self) -> Result<Vec<MetadataFile>> {
        let mut out = Vec::new();
        for ctx in self.contexts()? {
            let dir = self.root.join(&ctx);
            let mut names: Vec<_> = fs::read_dir(&dir)
                .with_path(&dir)?
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| !n.starts_with('.'))
                .collect();
            names.sort();
            for name in names {
                let path = dir.join(&name);
                let bytes = fs::read(&path).with_path(&path)?;
                out.push(MetadataFile::parse(&ctx, &bytes)?);
            }
        }
        Ok(out)
    }
}

fn sanitize(context: &str) -> String {
    let s: String = context
        .chars()
        .map(|c| if c == '/' || c == '\0' { '_' } else { c })
        .collect();
    match s.as_str() {
        "" | "." | ".." => "unknown".to_string(),
        _ => s,
    }
}
