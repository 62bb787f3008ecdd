//! Scan a graph against a CVE database keyed by gitoid.

use std::collections::HashMap;

use omnibor::vulnscan::{load_cvedb, report_render, scan};
use omnibor::{
    build_adg, gitoid_of_bytes, ArtifactId, HashAlgorithm, InputManifest, ManifestRecord,
};

fn main() -> omnibor::Result<()> {
    let algo = HashAlgorithm::Sha1;
    let vulnerable = gitoid_of_bytes(b"strcpy(buf, name);\n", algo);
    let patch = gitoid_of_bytes(b"--- a.c\n+++ a.c\n-strcpy\n+strncpy\n", algo);
    let header = gitoid_of_bytes(b"#define LEN 16\n", algo);

    let mut src: HashMap<ArtifactId, InputManifest> = HashMap::new();
    let object = InputManifest::from_records(
        algo,
        [
            ManifestRecord::leaf(vulnerable),
            ManifestRecord::leaf(header),
        ],
    )?;
    let lib = InputManifest::from_records(
        algo,
        [
            ManifestRecord::derived(gitoid_of_bytes(b"a.o", algo), object.oid()?),
            ManifestRecord::leaf(patch),
        ],
    )?;
    let root = lib.oid()?;
    src.insert(object.oid()?, object);
    src.insert(root, lib);

    let db = load_cvedb(
        serde_json::json!({
            vulnerable.hex(): {"CVElist": ["CVE-2024-0001", "CVE-2024-0002"], "file_path": "a.c"},
            patch.hex(): {"FixedCVElist": ["CVE-2024-0002"], "file_path": "fix.patch"},
        })
        .to_string()
        .as_bytes(),
    )?;
    let g = build_adg(root, &src)?;
    let report = scan(&g, &db, None);
    println!("open: {:?}", report.open_cves);
    print!("{}", report_render(&[report]));
    Ok(())
}
