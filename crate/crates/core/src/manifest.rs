//! Input Manifests and the content-addressed manifest store.
//!
//! Wire format (one LF after every line, single spaces between tokens):
//!
//! ```text
//! gitoid:blob:sha1
//! blob <child-hex>
//! blob <child-hex> bom <manifest-hex>
//! ```
//!
//! Records are sorted by child hex and unique. The gitoid of these exact bytes
//! is the manifest's OmniBOR ID.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, IoContext, Result};
use crate::fsutil::write_atomic;
use crate::identifier::{gitoid_of_bytes, ArtifactId, HashAlgorithm, URI_PREFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ManifestRecord {
    pub child_id: ArtifactId,
    /// OID of the child's own manifest, when the child was built with
    /// manifest generation enabled.
    pub bom_id: Option<ArtifactId>,
}

impl ManifestRecord {
    pub fn leaf(child_id: ArtifactId) -> Self {
        ManifestRecord {
            child_id,
            bom_id: None,
        }
    }

    pub fn derived(child_id: ArtifactId, bom_id: ArtifactId) -> Self {
        ManifestRecord {
            child_id,
            bom_id: Some(bom_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputManifest {
    pub algo: HashAlgorithm,
    pub records: Vec<ManifestRecord>,
}

impl InputManifest {
    pub fn empty(algo: HashAlgorithm) -> Self {
        InputManifest {
            algo,
            records: Vec::new(),
        }
    }

    /// Build a manifest from inputs in any order. Records are sorted and
    /// deduplicated by child id; if one duplicate carries a `bom` link it wins.
    pub fn from_records(
        algo: HashAlgorithm,
        records: impl IntoIterator<Item = ManifestRecord>,
    ) -> Result<Self> {
        let mut records: Vec<ManifestRecord> = records.into_iter().collect();
        records.sort_by(|a, b| {
            a.child_id
                .cmp(&b.child_id)
                .then_with(|| b.bom_id.is_some().cmp(&a.bom_id.is_some()))
        });
        records.dedup_by(|later, first| later.child_id == first.child_id);
        let m = InputManifest { algo, records };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.child_id.algo() != self.algo {
                return Err(Error::ManifestInvariant(format!(
                    "record {i} child {} is not {}",
                    r.child_id.hex(),
                    self.algo
                )));
            }
            if let Some(bom) = r.bom_id {
                if bom.algo() != self.algo {
                    return Err(Error::ManifestInvariant(format!(
                        "record {i} bom {} is not {}",
                        bom.hex(),
                        self.algo
                    )));
                }
            }
        }
        for (i, pair) in self.records.windows(2).enumerate() {
            if pair[0].child_id == pair[1].child_id {
                return Err(Error::ManifestInvariant(format!(
                    "duplicate child {} at records {i} and {}",
                    pair[0].child_id.hex(),
                    i + 1
                )));
            }
            if pair[0].child_id > pair[1].child_id {
                return Err(Error::ManifestInvariant(format!(
                    "records {i} and {} are not sorted by child id",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn serialize(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut out =
            String::with_capacity(17 + self.records.len() * (6 + 2 * self.algo.hex_len() + 5));
        out.push_str(URI_PREFIX);
        out.push_str(self.algo.name());
        out.push('\n');
        for r in &self.records {
            out.push_str("blob ");
            out.push_str(&r.child_id.hex());
            if let Some(bom) = r.bom_id {
                out.push_str(" bom ");
                out.push_str(&bom.hex());
            }
            out.push('\n');
        }
        Ok(out.into_bytes())
    }

    /// The manifest's OmniBOR ID: the gitoid of its serialized bytes.
    pub fn oid(&self) -> Result<ArtifactId> {
        Ok(gitoid_of_bytes(&self.serialize()?, self.algo))
    }

    pub fn children(&self) -> impl Iterator<Item = ArtifactId> + '_ {
        self.records.iter().map(|r| r.child_id)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        Ok(ParsedManifest::parse(bytes)?.manifest)
    }
}

pub fn serialize(m: &InputManifest) -> Result<Vec<u8>> {
    m.serialize()
}

pub fn parse(bytes: &[u8]) -> Result<InputManifest> {
    InputManifest::parse(bytes)
}

pub fn oid_of(m: &InputManifest) -> Result<ArtifactId> {
    m.oid()
}

/// A parsed manifest plus whether the header line was missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedManifest {
    pub manifest: InputManifest,
    pub headerless: bool,
}

impl ParsedManifest {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::ManifestParse {
            line: 1 + bytes[..e.valid_up_to()]
                .iter()
                .filter(|&&b| b == b'\n')
                .count(),
            reason: "not valid UTF-8".into(),
        })?;
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return Err(Error::ManifestParse {
                line: 1,
                reason: "empty manifest".into(),
            });
        }
        let mut lines = body
            .split('\n')
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .peekable();

        let mut algo = None;
        let mut headerless = true;
        if let Some(&(_, first)) = lines.peek() {
            if let Some(name) = first.strip_prefix(URI_PREFIX) {
                algo = Some(
                    name.parse::<HashAlgorithm>()
                        .map_err(|e| Error::ManifestParse {
                            line: 1,
                            reason: e.to_string(),
                        })?,
                );
                headerless = false;
                lines.next();
            }
        }

        let mut records = Vec::new();
        for (line_no, line) in lines {
            let err = |reason: String| Error::ManifestParse {
                line: line_no,
                reason,
            };
            let mut tokens = line.split(' ');
            if tokens.next() != Some("blob") {
                return Err(err(format!("expected `blob ` prefix in `{line}`")));
            }
            let child_hex = tokens
                .next()
                .ok_or_else(|| err("missing child id".into()))?;
            let line_algo = match algo {
                Some(a) => a,
                None => {
                    let a = HashAlgorithm::from_hex_len(child_hex.len())
                        .ok_or_else(|| err(format!("cannot infer algorithm from `{child_hex}`")))?;
                    algo = Some(a);
                    a
                }
            };
            let child_id =
                ArtifactId::from_hex(line_algo, child_hex).map_err(|e| err(e.to_string()))?;
            let bom_id = match tokens.next() {
                None => None,
                Some("bom") => {
                    let bom_hex = tokens.next().ok_or_else(|| err("missing bom id".into()))?;
                    Some(ArtifactId::from_hex(line_algo, bom_hex).map_err(|e| err(e.to_string()))?)
                }
                Some(other) => return Err(err(format!("unexpected token `{other}`"))),
            };
            if let Some(extra) = tokens.next() {
                return Err(err(format!("trailing token `{extra}`")));
            }
            if let Some(prev) = records.last() {
                let prev: &ManifestRecord = prev;
                if prev.child_id >= child_id {
                    return Err(err("records not strictly sorted by child id".into()));
                }
            }
            records.push(ManifestRecord { child_id, bom_id });
        }

        let algo = algo.ok_or_else(|| Error::ManifestParse {
            line: 1,
            reason: "header-less manifest without records".into(),
        })?;
        Ok(ParsedManifest {
            manifest: InputManifest { algo, records },
            headerless,
        })
    }
}

/// Manifests on disk under `<root>/objects/gitoid_blob_<algo>/<xx>/<rest>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestStore {
    root_dir: PathBuf,
}

impl ManifestStore {
    pub fn new(root_dir: impl Into<PathBuf>) -> Self {
        ManifestStore {
            root_dir: root_dir.into(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root_dir
    }

    pub fn objects_dir(&self) -> PathBuf {
        self.root_dir.join("objects")
    }

    pub fn path_for(&self, oid: &ArtifactId) -> PathBuf {
        let hex = oid.hex();
        self.objects_dir()
            .join(format!("gitoid_blob_{}", oid.algo()))
            .join(&hex[..2])
            .join(&hex[2..])
    }

    /// Store a manifest; returns the path it lives at. Storing the same
    /// manifest again is a no-op.
    pub fn put(&self, m: &InputManifest) -> Result<PathBuf> {
        let bytes = m.serialize()?;
        let oid = gitoid_of_bytes(&bytes, m.algo);
        let path = self.path_for(&oid);
        match fs::read(&path) {
            Ok(existing) if existing == bytes => return Ok(path),
            Ok(_) => return Err(Error::StoreCorruption { path }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(Error::io(path, e)),
        }
        write_atomic(&path, &bytes)?;
        Ok(path)
    }

    pub fn get(&self, oid: &ArtifactId) -> Result<Option<InputManifest>> {
        let Some(bytes) = self.get_raw(oid)? else {
            return Ok(None);
        };
        Ok(Some(InputManifest::parse(&bytes)?))
    }

    /// Stored bytes, checked against `oid`.
    pub fn get_raw(&self, oid: &ArtifactId) -> Result<Option<Vec<u8>>> {
        let path = self.path_for(oid);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(path, e)),
        };
        if gitoid_of_bytes(&bytes, oid.algo()) != *oid {
            return Err(Error::Integrity {
                path,
                expected: *oid,
            });
        }
        Ok(Some(bytes))
    }

    pub fn contains(&self, oid: &ArtifactId) -> bool {
        self.path_for(oid).is_file()
    }

    /// Every manifest id stored for `algo`, sorted.
    pub fn list(&self, algo: HashAlgorithm) -> Result<Vec<ArtifactId>> {
        let dir = self.objects_dir().join(format!("gitoid_blob_{algo}"));
        let mut out = Vec::new();
        let prefixes = match fs::read_dir(&dir) {
            Ok(rd) => rd,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(Error::io(dir, e)),
        };
        for prefix in prefixes {
            let prefix = prefix.with_path(&dir)?;
            let prefix_name = prefix.file_name().to_string_lossy().into_owned();
            if prefix_name.len() != 2 {
                continue;
            }
            for entry in fs::read_dir(prefix.path()).with_path(prefix.path())? {
                let entry = entry.with_path(prefix.path())?;
                let name = entry.file_name().to_string_lossy().into_owned();
                if let Ok(id) = ArtifactId::from_hex(algo, &format!("{prefix_name}{name}")) {
                    out.push(id);
                }
            }
        }
        out.sort();
        Ok(out)
    }
}
