//! CVE lookup over an ADG against a gitoid-keyed vulnerability database.
//!
//! Database layout (JSON object):
//!
//! ```json
//! {
//!   "ea659e471014095e4317cc658a73e40359d00562": {
//!     "CVElist": ["CVE-2019-16167"],
//!     "file_path": "sa_common.c"
//!   }
//! }
//! ```
//!
//! Keys may also be `blob <hex> bom <hex>`; those are kept but never matched.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::adg::Adg;
use crate::error::{Error, Result};
use crate::identifier::ArtifactId;
use crate::metadata::MetadataStore;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CveKey {
    Plain(ArtifactId),
    Compound {
        blob: ArtifactId,
        bom: ArtifactId,
    },
    /// Anything else; kept verbatim.
    Opaque(String),
}

impl CveKey {
    pub fn parse(key: &str) -> CveKey {
        let words: Vec<&str> = key.split_whitespace().collect();
        let parsed = match words.as_slice() {
            [hex] | ["blob", hex] => ArtifactId::from_hex_any(hex).ok().map(CveKey::Plain),
            ["blob", b, "bom", m] => {
                match (ArtifactId::from_hex_any(b), ArtifactId::from_hex_any(m)) {
                    (Ok(blob), Ok(bom)) => Some(CveKey::Compound { blob, bom }),
                    _ => None,
                }
            }
            _ => None,
        };
        parsed.unwrap_or_else(|| CveKey::Opaque(key.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveDbEntry {
    #[serde(rename = "CVElist", default, skip_serializing_if = "Option::is_none")]
    pub cve_list: Option<Vec<String>>,
    #[serde(
        rename = "FixedCVElist",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub fixed_cve_list: Option<Vec<String>>,
    #[serde(default)]
    pub file_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prov_pkg: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl CveDbEntry {
    fn cves(&self) -> impl Iterator<Item = String> + '_ {
        self.cve_list.iter().flatten().cloned()
    }

    fn fixed(&self) -> impl Iterator<Item = String> + '_ {
        self.fixed_cve_list.iter().flatten().cloned()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CveDb {
    /// Original key text, parsed key and entry, in document order.
    pub entries: Vec<(String, CveKey, CveDbEntry)>,
}

impl CveDb {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &ArtifactId) -> Option<&CveDbEntry> {
        self.entries
            .iter()
            .find(|(_, k, _)| *k == CveKey::Plain(*id))
            .map(|(_, _, e)| e)
    }

    fn plain(&self) -> BTreeMap<ArtifactId, &CveDbEntry> {
        let mut out = BTreeMap::new();
        for (_, k, e) in &self.entries {
            if let CveKey::Plain(id) = k {
                out.entry(*id).or_insert(e);
            }
        }
        out
    }
}

pub fn load_cvedb(bytes: &[u8]) -> Result<CveDb> {
    let doc: Map<String, Value> =
        serde_json::from_slice(bytes).map_err(|e| Error::Document(format!("CVE database: {e}")))?;
    let mut entries = Vec::new();
    for (key, value) in doc {
        let entry: CveDbEntry = serde_json::from_value(value)
            .map_err(|e| Error::Document(format!("CVE database entry `{key}`: {e}")))?;
        if entry.cve_list.is_none() && entry.fixed_cve_list.is_none() {
            return Err(Error::Document(format!(
                "CVE database entry `{key}` has neither CVElist nor FixedCVElist"
            )));
        }
        let parsed = CveKey::parse(&key);
        entries.push((key, parsed, entry));
    }
    Ok(CveDb { entries })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessParent {
    pub id: ArtifactId,
    pub manifest_oid: Option<ArtifactId>,
    pub build_cmd: Option<String>,
    pub file_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub id: ArtifactId,
    pub entry: CveDbEntry,
    /// Root-to-node path.
    pub path: Vec<ArtifactId>,
    pub parents: Vec<WitnessParent>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanReport {
    /// Label of the scanned artifact (file name or root OID).
    pub artifact: String,
    pub cve_list: BTreeSet<String>,
    pub fixed_cve_list: BTreeSet<String>,
    pub open_cves: BTreeSet<String>,
    pub witnesses: Vec<Witness>,
}

pub fn scan(g: &Adg, db: &CveDb, metadata: Option<&MetadataStore>) -> ScanReport {
    scan_labeled(g, db, metadata, &g.root_oid.uri())
}

pub fn scan_labeled(
    g: &Adg,
    db: &CveDb,
    metadata: Option<&MetadataStore>,
    label: &str,
) -> ScanReport {
    let mut report = ScanReport {
        artifact: label.to_string(),
        ..ScanReport::default()
    };
    for (id, entry) in db.plain() {
        if !g.has(&id) {
            continue;
        }
        report.cve_list.extend(entry.cves());
        report.fixed_cve_list.extend(entry.fixed());
        let parents = g
            .parents_of(&id)
            .into_iter()
            .map(|p| parent_info(g, p, metadata))
            .collect();
        report.witnesses.push(Witness {
            id,
            entry: entry.clone(),
            path: g.contains(&id).unwrap_or_default(),
            parents,
        });
    }
    report.open_cves = report
        .cve_list
        .difference(&report.fixed_cve_list)
        .cloned()
        .collect();
    report
}

fn parent_info(g: &Adg, id: ArtifactId, metadata: Option<&MetadataStore>) -> WitnessParent {
    let manifest_oid = g.node(&id).and_then(|n| n.manifest_oid);
    let meta = metadata.and_then(|m| {
        let by_output = m.find_by_output(&id).ok().flatten();
        by_output.or_else(|| manifest_oid.and_then(|oid| m.find_by_oid(&oid).ok().flatten()))
    });
    WitnessParent {
        id,
        manifest_oid,
        build_cmd: meta.as_ref().map(|m| m.build_cmd.clone()),
        file_path: meta.map(|m| m.outfile.path.to_string_lossy().into_owned()),
    }
}

fn list(items: impl IntoIterator<Item = String>) -> Value {
    Value::Array(items.into_iter().map(Value::String).collect())
}

fn hit_lists(obj: &mut Map<String, Value>, cves: BTreeSet<String>, fixed: BTreeSet<String>) {
    if !cves.is_empty() {
        obj.insert("CVEList".into(), list(cves));
    }
    if !fixed.is_empty() {
        obj.insert("FixedCVEList".into(), list(fixed));
    }
}

/// One summary block per report, with per-parent detail blocks naming the
/// hit children.
pub fn report_render(reports: &[ScanReport]) -> String {
    let mut doc = Map::new();
    for r in reports {
        let mut block = Map::new();
        block.insert("CVEList".into(), list(r.cve_list.iter().cloned()));
        block.insert(
            "FixedCVEList".into(),
            list(r.fixed_cve_list.iter().cloned()),
        );
        block.insert("OpenCVEList".into(), list(r.open_cves.iter().cloned()));

        let mut by_parent: BTreeMap<ArtifactId, (&WitnessParent, Vec<&Witness>)> = BTreeMap::new();
        for w in &r.witnesses {
            for p in &w.parents {
                by_parent.entry(p.id).or_insert((p, Vec::new())).1.push(w);
            }
        }
        let mut details = Map::new();
        for (pid, (p, hits)) in by_parent {
            let key = match p.manifest_oid {
                Some(oid) if oid != pid => format!("blob {} bom {}", pid.hex(), oid.hex()),
                _ => format!("blob {}", pid.hex()),
            };
            let mut obj = Map::new();
            hit_lists(
                &mut obj,
                hits.iter().flat_map(|w| w.entry.cves()).collect(),
                hits.iter().flat_map(|w| w.entry.fixed()).collect(),
            );
            for w in hits {
                let mut child = Map::new();
                hit_lists(
                    &mut child,
                    w.entry.cves().collect(),
                    w.entry.fixed().collect(),
                );
                child.insert("file_path".into(), Value::String(w.entry.file_path.clone()));
                if let Some(pkg) = &w.entry.prov_pkg {
                    child.insert("prov_pkg".into(), Value::String(pkg.clone()));
                }
                obj.insert(format!("blob {}", w.id.hex()), Value::Object(child));
            }
            if let Some(cmd) = &p.build_cmd {
                obj.insert("build_cmd".into(), Value::String(cmd.clone()));
            }
            if let Some(path) = &p.file_path {
                obj.insert("file_path".into(), Value::String(path.clone()));
            }
            details.insert(key, Value::Object(obj));
        }
        if !details.is_empty() {
            block.insert("details".into(), Value::Object(details));
        }
        doc.insert(r.artifact.clone(), Value::Object(block));
    }
    let mut out = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adg::build_adg;
    use crate::identifier::{gitoid_of_bytes, HashAlgorithm};
    use crate::manifest::{InputManifest, ManifestRecord};
    use proptest::prelude::*;
    use std::collections::HashMap;

    const SAMPLE_DB: &str = r#"{
  "ea659e471014095e4317cc658a73e40359d00562": {
    "CVElist": ["CVE-2019-16167"],
    "file_path": "sa_common.c"
  },
  "ad739fd04cd1a8bcacf6564c109e2d6ec46d0a754": {
    "FixedCVElist": ["CVE-2019-16167"],
    "file_path": "CVE-2019-16167_memory-corruption-due-to-an-integer-overflow.patch"
  }
}"#;

    #[test]
    fn sample_db_loads() {
        let db = load_cvedb(SAMPLE_DB.as_bytes()).unwrap();
        assert_eq!(db.len(), 2);
        assert!(matches!(db.entries[0].1, CveKey::Plain(_)));
        // 41 hex digits: not an id, kept verbatim
        assert!(matches!(db.entries[1].1, CveKey::Opaque(_)));
        assert!(load_cvedb(b"{}").unwrap().is_empty());
        assert!(load_cvedb(b"[").is_err());
        assert!(load_cvedb(br#"{"ab": {"file_path": "x"}}"#).is_err());
    }

    #[test]
    fn both_lists_and_extras_kept() {
        let db = load_cvedb(
            br#"{"blob ea659e471014095e4317cc658a73e40359d00562 bom ea659e471014095e4317cc658a73e40359d00562":
                 {"CVElist": ["A"], "FixedCVElist": ["B"], "file_path": "f", "note": {"x": 1}}}"#,
        )
        .unwrap();
        let e = &db.entries[0].2;
        assert_eq!(e.cve_list.as_deref(), Some(&["A".to_string()][..]));
        assert_eq!(e.fixed_cve_list.as_deref(), Some(&["B".to_string()][..]));
        assert_eq!(e.extra["note"]["x"], 1);
        assert!(matches!(db.entries[0].1, CveKey::Compound { .. }));
    }

    fn id(s: &str) -> ArtifactId {
        gitoid_of_bytes(s.as_bytes(), HashAlgorithm::Sha1)
    }

    fn entry(cves: &[&str], fixed: &[&str], path: &str) -> Value {
        let mut m = Map::new();
        if !cves.is_empty() {
            m.insert(
                "CVElist".into(),
                cves.iter().map(|s| Value::String(s.to_string())).collect(),
            );
        }
        if !fixed.is_empty() {
            m.insert(
                "FixedCVElist".into(),
                fixed.iter().map(|s| Value::String(s.to_string())).collect(),
            );
        }
        m.insert("file_path".into(), Value::String(path.into()));
        Value::Object(m)
    }

    #[test]
    fn open_is_difference() {
        // lib <- obj <- {patched.c <- {orig.c, fix.patch}, other.c}
        let a = HashAlgorithm::Sha1;
        let mut src = HashMap::new();
        let patch_m = InputManifest::from_records(
            a,
            [
                ManifestRecord::leaf(id("orig.c")),
                ManifestRecord::leaf(id("fix.patch")),
            ],
        )
        .unwrap();
        let obj_m = InputManifest::from_records(
            a,
            [
                ManifestRecord::derived(id("patched.c"), patch_m.oid().unwrap()),
                ManifestRecord::leaf(id("other.c")),
            ],
        )
        .unwrap();
        let lib_m = InputManifest::from_records(
            a,
            [ManifestRecord::derived(id("obj"), obj_m.oid().unwrap())],
        )
        .unwrap();
        for m in [&patch_m, &obj_m, &lib_m] {
            src.insert(m.oid().unwrap(), m.clone());
        }
        let g = build_adg(lib_m.oid().unwrap(), &src).unwrap();
        let mut doc = Map::new();
        doc.insert(id("orig.c").hex(), entry(&["Y"], &[], "sa_common.c"));
        doc.insert(id("fix.patch").hex(), entry(&[], &["Y"], "fix.patch"));
        doc.insert(id("other.c").hex(), entry(&["X"], &[], "other.c"));
        doc.insert(id("absent").hex(), entry(&["Z"], &[], "absent.c"));
        let db = load_cvedb(serde_json::to_string(&doc).unwrap().as_bytes()).unwrap();
        let r = scan(&g, &db, None);
        assert_eq!(
            r.cve_list,
            BTreeSet::from(["X".to_string(), "Y".to_string()])
        );
        assert_eq!(r.fixed_cve_list, BTreeSet::from(["Y".to_string()]));
        assert_eq!(r.open_cves, BTreeSet::from(["X".to_string()]));
        assert_eq!(r.witnesses.len(), 3);
        let w = r
            .witnesses
            .iter()
            .find(|w| w.id == id("fix.patch"))
            .unwrap();
        assert_eq!(w.path.last(), Some(&id("fix.patch")));
        assert_eq!(w.parents[0].id, id("patched.c"));

        let text = report_render(&[r]);
        let v: Value = serde_json::from_str(&text).unwrap();
        let block = &v[g.root_oid.uri()];
        assert_eq!(block["OpenCVEList"], serde_json::json!(["X"]));
        let key = format!(
            "blob {} bom {}",
            id("patched.c").hex(),
            patch_m.oid().unwrap().hex()
        );
        assert_eq!(
            block["details"][&key]["FixedCVEList"],
            serde_json::json!(["Y"])
        );

        let empty = scan(&g, &CveDb::default(), None);
        assert!(empty.cve_list.is_empty() && empty.witnesses.is_empty());
        assert_eq!(report_render(&[]), "{}\n");
    }

    proptest! {
        #[test]
        fn scan_matches_brute_force(
            edges in proptest::collection::vec((0u8..12, 0u8..12), 0..20),
            db_keys in proptest::collection::vec((0u8..16, any::<bool>()), 0..10),
        ) {
            // edges only go from lower to higher index, so the graph is acyclic
            let mut children: BTreeMap<u8, BTreeSet<u8>> = BTreeMap::new();
            for (a, b) in edges {
                if a < b {
                    children.entry(a).or_default().insert(b);
                }
            }
            let mut src = HashMap::new();
            let mut oids: BTreeMap<u8, ArtifactId> = BTreeMap::new();
            for n in (0u8..12).rev() {
                let Some(kids) = children.get(&n) else { continue };
                let records = kids.iter().map(|k| match oids.get(k) {
                    Some(o) => ManifestRecord::derived(id(&format!("n{k}")), *o),
                    None => ManifestRecord::leaf(id(&format!("n{k}"))),
                });
                let m = InputManifest::from_records(HashAlgorithm::Sha1, records).unwrap();
                oids.insert(n, m.oid().unwrap());
                src.insert(m.oid().unwrap(), m);
            }
            let Some(root) = oids.get(&0).copied() else { return Ok(()) };
            let g = build_adg(root, &src).unwrap();
            let mut doc = Map::new();
            for (k, vulnerable) in &db_keys {
                let cve = format!("CVE-{k}");
                let e = if *vulnerable { entry(&[&cve], &[], "f") } else { entry(&[], &[&cve], "f") };
                doc.insert(id(&format!("n{k}")).hex(), e);
            }
            let db = load_cvedb(serde_json::to_string(&doc).unwrap().as_bytes()).unwrap();
            let r = scan(&g, &db, None);
            let mut cves = BTreeSet::new();
            let mut fixed = BTreeSet::new();
            for node in g.nodes.keys() {
                for (_, key, e) in &db.entries {
                    if *key == CveKey::Plain(*node) {
                        cves.extend(e.cves());
                        fixed.extend(e.fixed());
                    }
                }
            }
            prop_assert_eq!(&r.cve_list, &cves);
            prop_assert_eq!(&r.fixed_cve_list, &fixed);
            prop_assert!(r.open_cves.is_subset(&r.cve_list));
            prop_assert!(r.open_cves.is_disjoint(&r.fixed_cve_list));
        }
    }
}
