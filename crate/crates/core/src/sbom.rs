//! SPDX 2.3 JSON documents that carry OmniBOR ids as persistent references.
//!
//! Build-time and run-time dependencies are derived from a raw build log by
//! mapping file paths to packages with a prefix table:
//!
//! ```text
//! # prefix               name        version    [purl]
//! /usr/lib/gcc           gcc         11.3.0     pkg:rpm/gcc@11.3.0
//! /usr/include           glibc-devel 2.35
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Component, Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::identifier::ArtifactId;
use crate::trace::rawlog::RawBuildRecord;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PackageDescriptor {
    pub name: String,
    pub version: String,
    pub purl: Option<String>,
    /// Manifest OIDs describing how this package was built.
    pub im_oids: Vec<ArtifactId>,
}

impl PackageDescriptor {
    pub fn new(name: impl Into<String>, version: impl Into<String>) -> Self {
        PackageDescriptor {
            name: name.into(),
            version: version.into(),
            purl: None,
            im_oids: Vec::new(),
        }
    }

    pub fn purl(mut self, purl: impl Into<String>) -> Self {
        self.purl = Some(purl.into());
        self
    }

    pub fn im_oid(mut self, oid: ArtifactId) -> Self {
        self.im_oids.push(oid);
        self
    }

    /// `SPDXRef-Package-<name>-<16 hex of sha256("name@version")>`.
    pub fn spdx_id(&self) -> String {
        let digest = Sha256::digest(format!("{}@{}", self.name, self.version).as_bytes());
        let name: String = self
            .name
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                    c
                } else {
                    '-'
                }
            })
            .collect();
        format!("SPDXRef-Package-{name}-{}", &hex::encode(digest)[..16])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExternalRef {
    #[serde(rename = "referenceCategory")]
    pub category: String,
    #[serde(rename = "referenceLocator")]
    pub locator: String,
    #[serde(rename = "referenceType")]
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpdxPackage {
    #[serde(rename = "SPDXID")]
    pub spdx_id: String,
    pub name: String,
    #[serde(rename = "versionInfo")]
    pub version: String,
    #[serde(rename = "downloadLocation")]
    pub download_location: String,
    #[serde(rename = "externalRefs", skip_serializing_if = "Vec::is_empty")]
    pub external_refs: Vec<ExternalRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Relationship {
    #[serde(rename = "relatedSpdxElement")]
    pub related: String,
    #[serde(rename = "relationshipType")]
    pub kind: String,
    #[serde(rename = "spdxElementId")]
    pub element: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CreationInfo {
    pub created: String,
    pub creators: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SbomDocument {
    #[serde(rename = "spdxVersion")]
    pub spdx_version: String,
    #[serde(rename = "dataLicense")]
    pub data_license: String,
    #[serde(rename = "SPDXID")]
    pub spdx_id: String,
    pub name: String,
    #[serde(rename = "documentNamespace")]
    pub namespace: String,
    #[serde(rename = "creationInfo")]
    pub creation_info: CreationInfo,
    #[serde(rename = "documentDescribes")]
    pub describes: Vec<String>,
    pub packages: Vec<SpdxPackage>,
    pub relationships: Vec<Relationship>,
}

impl SbomDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("SBOM serializes");
        s.push('\n');
        s
    }

    pub fn package(&self, spdx_id: &str) -> Option<&SpdxPackage> {
        self.packages.iter().find(|p| p.spdx_id == spdx_id)
    }
}

pub const DEPENDS_ON: &str = "DEPENDS_ON";
pub const BUILD_DEPENDENCY_OF: &str = "BUILD_DEPENDENCY_OF";

fn spdx_package(p: &PackageDescriptor) -> SpdxPackage {
    let mut refs: Vec<ExternalRef> = p
        .im_oids
        .iter()
        .map(|oid| ExternalRef {
            category: "PERSISTENT_ID".into(),
            locator: oid.uri(),
            kind: "gitoid".into(),
        })
        .collect();
    if let Some(purl) = &p.purl {
        refs.push(ExternalRef {
            category: "PACKAGE_MANAGER".into(),
            locator: purl.clone(),
            kind: "purl".into(),
        });
    }
    SpdxPackage {
        spdx_id: p.spdx_id(),
        name: p.name.clone(),
        version: p.version.clone(),
        download_location: "NOASSERTION".into(),
        external_refs: refs,
    }
}

/// `timestamp` is an RFC 3339 string supplied by the caller so output is
/// reproducible.
pub fn generate_sbom(
    subject: &PackageDescriptor,
    runtime: &[PackageDescriptor],
    buildtime: &[PackageDescriptor],
    timestamp: &str,
) -> Result<SbomDocument> {
    let mut packages: Vec<SpdxPackage> = Vec::new();
    let mut seen: BTreeMap<String, &PackageDescriptor> = BTreeMap::new();
    for p in std::iter::once(subject).chain(runtime).chain(buildtime) {
        let id = p.spdx_id();
        match seen.get(&id) {
            Some(prev) if *prev == p => continue,
            Some(prev) => {
                return Err(Error::Sbom(format!(
                    "duplicate SPDX id {id} for {}@{} and {}@{}",
                    prev.name, prev.version, p.name, p.version
                )))
            }
            None => {}
        }
        seen.insert(id, p);
        packages.push(spdx_package(p));
    }
    let subject_id = subject.spdx_id();
    let mut relationships = Vec::new();
    let mut rel_seen = BTreeSet::new();
    for (deps, kind) in [(runtime, DEPENDS_ON), (buildtime, BUILD_DEPENDENCY_OF)] {
        for d in deps {
            let related = d.spdx_id();
            if related == subject_id {
                return Err(Error::Sbom(format!("{related} cannot depend on itself")));
            }
            if rel_seen.insert((kind, related.clone())) {
                relationships.push(Relationship {
                    related,
                    kind: kind.into(),
                    element: subject_id.clone(),
                });
            }
        }
    }
    Ok(SbomDocument {
        spdx_version: "SPDX-2.3".into(),
        data_license: "CC0-1.0".into(),
        spdx_id: "SPDXRef-DOCUMENT".into(),
        name: format!("{}-{}", subject.name, subject.version),
        namespace: format!(
            "https://spdx.org/spdxdocs/{}-{}",
            subject.name,
            subject_id.rsplit('-').next().unwrap_or("")
        ),
        creation_info: CreationInfo {
            created: timestamp.into(),
            creators: vec![format!("Tool: omnibor-{}", env!("CARGO_PKG_VERSION"))],
        },
        describes: vec![subject_id],
        packages,
        relationships,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingEntry {
    pub prefix: PathBuf,
    pub package: PackageDescriptor,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PackageMapping {
    pub entries: Vec<MappingEntry>,
}

impl PackageMapping {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let (prefix, name, version, purl) = match words.as_slice() {
                [p, n, v] => (p, n, v, None),
                [p, n, v, u] => (p, n, v, Some(u.to_string())),
                _ => {
                    return Err(Error::Document(format!(
                        "package mapping line {}: expected `prefix name version [purl]`",
                        n + 1
                    )))
                }
            };
            if !prefix.starts_with('/') {
                return Err(Error::Document(format!(
                    "package mapping line {}: prefix must be absolute",
                    n + 1
                )));
            }
            entries.push(MappingEntry {
                prefix: PathBuf::from(prefix),
                package: PackageDescriptor {
                    name: name.to_string(),
                    version: version.to_string(),
                    purl,
                    im_oids: Vec::new(),
                },
            });
        }
        Ok(PackageMapping { entries })
    }

    /// Longest prefix that matches at a path component boundary, after
    /// resolving `.` and `..` lexically.
    pub fn lookup(&self, path: &Path) -> Option<&PackageDescriptor> {
        let path = normalize(path);
        self.entries
            .iter()
            .filter(|e| path.starts_with(&e.prefix))
            .max_by_key(|e| e.prefix.components().count())
            .map(|e| &e.package)
    }
}

fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DerivedDeps {
    pub packages: Vec<PackageDescriptor>,
    /// Paths from outside the build that no mapping entry covers.
    pub unmapped: Vec<PathBuf>,
}

fn derive<'a>(
    records: &'a [RawBuildRecord],
    mapping: &PackageMapping,
    files: impl Fn(&'a RawBuildRecord) -> &'a [crate::trace::rawlog::FileEntry],
) -> DerivedDeps {
    let produced: BTreeSet<&Path> = records.iter().map(|r| r.outfile.path.as_path()).collect();
    let mut packages = BTreeSet::new();
    let mut unmapped = BTreeSet::new();
    for r in records {
        for f in files(r) {
            if produced.contains(f.path.as_path()) {
                continue;
            }
            match mapping.lookup(&f.path) {
                Some(p) => {
                    packages.insert(p.clone());
                }
                None => {
                    unmapped.insert(f.path.clone());
                }
            }
        }
    }
    DerivedDeps {
        packages: packages.into_iter().collect(),
        unmapped: unmapped.into_iter().collect(),
    }
}

/// Packages providing files read during the build.
pub fn derive_buildtime_deps(records: &[RawBuildRecord], mapping: &PackageMapping) -> DerivedDeps {
    derive(records, mapping, |r| &r.infiles)
}

/// Packages providing shared libraries the outputs load at run time.
pub fn derive_runtime_deps(records: &[RawBuildRecord], mapping: &PackageMapping) -> DerivedDeps {
    derive(records, mapping, |r| &r.dynlibs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identifier::{gitoid_of_bytes, HashAlgorithm};
    use crate::trace::rawlog::parse_raw_log;

    const SAMPLE_LOG: &str = include_str!("../tests/fixtures/sample_build.log");

    fn subject() -> PackageDescriptor {
        PackageDescriptor::new("sysstat", "12.5.4")
            .purl("pkg:rpm/sysstat@12.5.4")
            .im_oid(gitoid_of_bytes(b"m1", HashAlgorithm::Sha1))
            .im_oid(gitoid_of_bytes(b"m1", HashAlgorithm::Sha256))
    }

    #[test]
    fn spdx_id_oracle() {
        // sha256("sysstat@12.5.4"), first 16 hex
        let digest = hex::encode(Sha256::digest(b"sysstat@12.5.4"));
        assert_eq!(
            subject().spdx_id(),
            format!("SPDXRef-Package-sysstat-{}", &digest[..16])
        );
        assert_eq!(
            subject().spdx_id().len(),
            "SPDXRef-Package-sysstat-".len() + 16
        );
        assert!(PackageDescriptor::new("a b", "1")
            .spdx_id()
            .starts_with("SPDXRef-Package-a-b-"));
    }

    #[test]
    fn document_shape() {
        let gcc = PackageDescriptor::new("gcc", "11.3.0");
        let libc = PackageDescriptor::new("glibc", "2.35");
        let doc = generate_sbom(
            &subject(),
            std::slice::from_ref(&libc),
            &[gcc.clone(), libc.clone()],
            "2024-01-01T00:00:00Z",
        )
        .unwrap();
        assert_eq!(doc.packages.len(), 3);
        let subj = doc.package(&subject().spdx_id()).unwrap();
        let persistent: Vec<_> = subj
            .external_refs
            .iter()
            .filter(|r| r.category == "PERSISTENT_ID")
            .collect();
        assert_eq!(persistent.len(), 2);
        assert!(persistent
            .iter()
            .all(|r| r.kind == "gitoid" && r.locator.starts_with("gitoid:blob:")));
        assert!(subj
            .external_refs
            .iter()
            .any(|r| r.kind == "purl" && r.category == "PACKAGE_MANAGER"));
        let depends = doc
            .relationships
            .iter()
            .filter(|r| r.kind == DEPENDS_ON)
            .count();
        let builds = doc
            .relationships
            .iter()
            .filter(|r| r.kind == BUILD_DEPENDENCY_OF)
            .count();
        assert_eq!((depends, builds), (1, 2));
        assert!(doc
            .relationships
            .iter()
            .all(|r| r.element == subject().spdx_id()));

        let v: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(v["spdxVersion"], "SPDX-2.3");
        assert_eq!(v["relationships"][0]["relatedSpdxElement"], libc.spdx_id());
        assert_eq!(
            v["packages"][0]["externalRefs"][0]["referenceType"],
            "gitoid"
        );
    }

    #[test]
    fn duplicate_ids_rejected() {
        let a = PackageDescriptor::new("gcc", "11").purl("pkg:a");
        let b = PackageDescriptor::new("gcc", "11").purl("pkg:b");
        assert!(matches!(
            generate_sbom(&subject(), &[a], &[b], "t"),
            Err(Error::Sbom(_))
        ));
        assert!(generate_sbom(&subject(), &[subject()], &[], "t").is_err());
    }

    #[test]
    fn mapping_longest_prefix() {
        let m = PackageMapping::parse(
            "# comment\n/usr/lib gcc-libs 1\n/usr/lib/gcc gcc 11.3.0 pkg:rpm/gcc@11.3.0\n\n/usr/include glibc-devel 2.35 # trailing\n",
        )
        .unwrap();
        assert_eq!(m.entries.len(), 3);
        assert_eq!(
            m.lookup(Path::new("/usr/lib/gcc/x/crtbeginS.o"))
                .unwrap()
                .name,
            "gcc"
        );
        assert_eq!(
            m.lookup(Path::new("/usr/lib/gcc-x/foo")).unwrap().name,
            "gcc-libs"
        );
        assert_eq!(
            m.lookup(Path::new("/usr/include/stdio.h")).unwrap().name,
            "glibc-devel"
        );
        assert!(m.lookup(Path::new("/usr/includes/x")).is_none());
        assert_eq!(
            m.lookup(Path::new("/usr/lib/gcc/x/../../libc.so"))
                .unwrap()
                .name,
            "gcc-libs"
        );
        assert!(PackageMapping::parse("/a b\n").is_err());
        assert!(PackageMapping::parse("rel a 1\n").is_err());
    }

    #[test]
    fn derive_from_log() {
        let records = parse_raw_log(SAMPLE_LOG.as_bytes()).unwrap();
        let m = PackageMapping::parse("/opt/rh/gcc-toolset-12 gcc 12\n/lib/lib64 glibc 2.35\n")
            .unwrap();
        let names = |d: &DerivedDeps| {
            d.packages
                .iter()
                .map(|p| p.name.clone())
                .collect::<Vec<_>>()
        };
        let build = derive_buildtime_deps(&records, &m);
        assert_eq!(names(&build), ["gcc", "glibc"]);
        // add.o and sub.o are produced by the build, so never unmapped
        let unmapped: Vec<_> = build
            .unmapped
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap())
            .collect();
        assert_eq!(unmapped, ["add.c", "hdr.h", "sub.c"]);
        let run = derive_runtime_deps(&records, &m);
        assert_eq!(names(&run), ["gcc", "glibc"]);
        assert!(run.unmapped.is_empty());
    }
}
