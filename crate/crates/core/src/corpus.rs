//! Containment index over packaged artifacts, and composition analysis
//! against it.
//!
//! The index is JSON Lines, one record per id:
//!
//! * `purl` records contain the package archives published under that purl.
//! * `package` records contain the gitoids of their entries and are
//!   contained by their purl.
//! * entry records (typed by file extension) are contained by every package
//!   that ships them.
//!
//! All gitoids are SHA-256 URIs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, IoContext, Result};
use crate::fsutil::write_atomic;
use crate::identifier::{gitoid_of_bytes, HashAlgorithm};

pub const RECORD_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLD: u32 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub filename: Vec<String>,
    pub purl: Vec<String>,
    pub vulnerabilities: Vec<Value>,
    pub filetype: Vec<String>,
    pub other: Vec<Value>,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub identifier: String,
    pub contains: Vec<String>,
    #[serde(rename = "containedBy")]
    pub contained_by: Vec<String>,
    pub metadata: RecordMetadata,
    pub timestamp: i64,
    pub version: u32,
    #[serde(rename = "type")]
    pub kind: String,
}

impl CorpusRecord {
    fn new(identifier: String, kind: &str, timestamp: i64) -> Self {
        CorpusRecord {
            identifier,
            contains: Vec::new(),
            contained_by: Vec::new(),
            metadata: RecordMetadata {
                filename: Vec::new(),
                purl: Vec::new(),
                vulnerabilities: Vec::new(),
                filetype: vec![kind.to_string()],
                other: Vec::new(),
                version: RECORD_VERSION,
            },
            timestamp,
            version: RECORD_VERSION,
            kind: kind.to_string(),
        }
    }

    pub fn is_package(&self) -> bool {
        self.kind == "package"
    }
}

fn add_sorted(list: &mut Vec<String>, item: &str) {
    if let Err(pos) = list.binary_search_by(|x| x.as_str().cmp(item)) {
        list.insert(pos, item.to_string());
    }
}

fn add_unique<T: PartialEq + Clone>(list: &mut Vec<T>, item: &T) {
    if !list.contains(item) {
        list.push(item.clone());
    }
}

/// A package to index: archive bytes or an unpacked directory.
pub enum PackageSource<'a> {
    Zip(&'a [u8]),
    Dir(&'a Path),
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<CorpusRecord>,
    by_id: HashMap<String, usize>,
    by_purl: HashMap<String, Vec<usize>>,
}

pub fn is_zip(bytes: &[u8]) -> bool {
    bytes.starts_with(b"PK\x03\x04") || bytes.starts_with(b"PK\x05\x06")
}

/// `(entry name, bytes)` for every file in a zip, in archive order.
pub fn zip_entries(bytes: &[u8]) -> Result<Vec<(String, Vec<u8>)>> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes))
        .map_err(|e| Error::Archive(format!("reading zip: {e}")))?;
    let mut out = Vec::new();
    for i in 0..archive.len() {
        let mut file = archive
            .by_index(i)
            .map_err(|e| Error::Archive(format!("zip entry {i}: {e}")))?;
        if file.is_dir() {
            continue;
        }
        let name = file.name().to_string();
        let mut data = Vec::with_capacity(file.size() as usize);
        file.read_to_end(&mut data)
            .map_err(|e| Error::Archive(format!("zip entry {name}: {e}")))?;
        out.push((name, data));
    }
    Ok(out)
}

fn dir_entries(root: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) -> Result<()> {
        let mut items: Vec<PathBuf> = fs::read_dir(dir)
            .with_path(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()
            .with_path(dir)?;
        items.sort();
        for p in items {
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                let rel = p
                    .strip_prefix(root)
                    .unwrap_or(&p)
                    .to_string_lossy()
                    .into_owned();
                out.push((rel, fs::read(&p).with_path(&p)?));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    Ok(out)
}

fn uri(bytes: &[u8]) -> String {
    gitoid_of_bytes(bytes, HashAlgorithm::Sha256).uri()
}

fn entry_kind(name: &str) -> String {
    Path::new(name)
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_else(|| "file".into())
}

impl Corpus {
    pub fn new() -> Self {
        Corpus::default()
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut c = Corpus::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: CorpusRecord = serde_json::from_str(line)
                .map_err(|e| Error::Document(format!("corpus line {}: {e}", n + 1)))?;
            if c.by_id.contains_key(&r.identifier) {
                return Err(Error::Document(format!(
                    "corpus line {}: duplicate id {}",
                    n + 1,
                    r.identifier
                )));
            }
            c.by_id.insert(r.identifier.clone(), c.records.len());
            c.records.push(r);
        }
        c.reindex_purls();
        Ok(c)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    /// A missing file is an empty corpus.
    pub fn load(path: &Path) -> Result<Self> {
        match fs::read_to_string(path) {
            Ok(text) => Corpus::from_jsonl(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Corpus::new()),
            Err(e) => Err(e).with_path(path),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl().as_bytes())
    }

    fn reindex_purls(&mut self) {
        self.by_purl.clear();
        for (i, r) in self.records.iter().enumerate() {
            if r.is_package() {
                for p in &r.metadata.purl {
                    self.by_purl.entry(p.clone()).or_default().push(i);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[CorpusRecord] {
        &self.records
    }

    pub fn lookup(&self, id: &str) -> Option<&CorpusRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn packages_for_purl(&self, purl: &str) -> Vec<&CorpusRecord> {
        self.by_purl
            .get(purl)
            .into_iter()
            .flatten()
            .map(|&i| &self.records[i])
            .collect()
    }

    fn upsert(&mut self, id: &str, kind: &str, timestamp: i64) -> &mut CorpusRecord {
        let i = match self.by_id.get(id) {
            Some(&i) => i,
            None => {
                self.records
                    .push(CorpusRecord::new(id.to_string(), kind, timestamp));
                self.by_id.insert(id.to_string(), self.records.len() - 1);
                self.records.len() - 1
            }
        };
        &mut self.records[i]
    }

    /// Index one package. Returns the package record's identifier.
    pub fn index_package(
        &mut self,
        source: PackageSource<'_>,
        filename: &str,
        purl: &str,
        vulnerabilities: &[Value],
        timestamp: i64,
    ) -> Result<String> {
        let (pkg_id, entries) = match source {
            PackageSource::Zip(bytes) => (uri(bytes), zip_entries(bytes)?),
            PackageSource::Dir(dir) => {
                let entries = dir_entries(dir)?;
                let listing: String = entries
                    .iter()
                    .map(|(n, b)| format!("{} {n}\n", uri(b)))
                    .collect();
                (uri(listing.as_bytes()), entries)
            }
        };
        for (name, bytes) in &entries {
            let id = uri(bytes);
            let kind = entry_kind(name);
            let rec = self.upsert(&id, &kind, timestamp);
            add_sorted(&mut rec.contained_by, &pkg_id);
            let base = name.rsplit('/').next().unwrap_or(name).to_string();
            add_unique(&mut rec.metadata.filename, &base);
        }
        let pkg = self.upsert(&pkg_id, "package", timestamp);
        for (_, bytes) in &entries {
            add_sorted(&mut pkg.contains, &uri(bytes));
        }
        add_sorted(&mut pkg.contained_by, purl);
        add_unique(&mut pkg.metadata.filename, &filename.to_string());
        add_unique(&mut pkg.metadata.purl, &purl.to_string());
        for v in vulnerabilities {
            add_unique(&mut pkg.metadata.vulnerabilities, v);
        }
        let p = self.upsert(purl, "purl", timestamp);
        add_sorted(&mut p.contains, &pkg_id);
        add_unique(&mut p.metadata.filename, &purl.to_string());
        add_unique(&mut p.metadata.purl, &purl.to_string());
        self.reindex_purls();
        Ok(pkg_id)
    }

    /// Every `contains` edge has its `containedBy` mirror and vice versa.
    pub fn check_symmetry(&self) -> Result<()> {
        for r in &self.records {
            for c in &r.contains {
                let ok = self
                    .lookup(c)
                    .is_some_and(|x| x.contained_by.contains(&r.identifier));
                if !ok {
                    return Err(Error::Document(format!(
                        "{} contains {c} without the reverse edge",
                        r.identifier
                    )));
                }
            }
            for p in &r.contained_by {
                let ok = self
                    .lookup(p)
                    .is_some_and(|x| x.contains.contains(&r.identifier));
                if !ok {
                    return Err(Error::Document(format!(
                        "{} containedBy {p} without the reverse edge",
                        r.identifier
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionMatch {
    pub package_id: String,
    pub filename: String,
    pub purl: Vec<String>,
    pub overlap_percent: u32,
    pub vulnerabilities: Vec<Value>,
}

impl CompositionMatch {
    pub fn render(&self) -> String {
        let vulns = match self.vulnerabilities.as_slice() {
            [] => "No CVEs".to_string(),
            [one] => serde_json::to_string_pretty(one).expect("JSON values serialize"),
            many => serde_json::to_string_pretty(many).expect("JSON values serialize"),
        };
        format!("{}, {} %, {}", self.filename, self.overlap_percent, vulns)
    }
}

/// `round(100 * part / whole)` with halves rounded up.
pub fn overlap_percent(part: usize, whole: usize) -> u32 {
    assert!(whole > 0 && part <= whole);
    ((200 * part + whole) / (2 * whole)) as u32
}

/// Ids the artifact is made of: its entries, plus the entries of archives
/// nested one level down. A non-archive is a single-entry set.
pub fn artifact_ids(bytes: &[u8]) -> Result<BTreeSet<String>> {
    if !is_zip(bytes) {
        return Ok(BTreeSet::from([uri(bytes)]));
    }
    let mut ids = BTreeSet::new();
    for (_, data) in zip_entries(bytes)? {
        ids.insert(uri(&data));
        if is_zip(&data) {
            for (_, inner) in zip_entries(&data)? {
                ids.insert(uri(&inner));
            }
        }
    }
    Ok(ids)
}

pub fn composition_analysis(
    corpus: &Corpus,
    artifact: &[u8],
    threshold: u32,
) -> Result<Vec<CompositionMatch>> {
    let ids = artifact_ids(artifact)?;
    let mut candidates: BTreeMap<&str, &CorpusRecord> = BTreeMap::new();
    for id in &ids {
        let Some(r) = corpus.lookup(id) else { continue };
        for parent in &r.contained_by {
            if let Some(p) = corpus.lookup(parent).filter(|p| p.is_package()) {
                candidates.insert(&p.identifier, p);
            }
        }
    }
    let mut out: Vec<CompositionMatch> = candidates
        .into_values()
        .filter(|p| !p.contains.is_empty())
        .filter_map(|p| {
            let shared = p.contains.iter().filter(|c| ids.contains(*c)).count();
            let pct = overlap_percent(shared, p.contains.len());
            (pct >= threshold).then(|| CompositionMatch {
                package_id: p.identifier.clone(),
                filename: p.metadata.filename.first().cloned().unwrap_or_default(),
                purl: p.metadata.purl.clone(),
                overlap_percent: pct,
                vulnerabilities: p.metadata.vulnerabilities.clone(),
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.overlap_percent
            .cmp(&a.overlap_percent)
            .then_with(|| a.filename.cmp(&b.filename))
    });
    Ok(out)
}
