//! Walk an artifact dependency graph: leaves, a containment path and edges.

use omnibor::{
    build_adg, gitoid_of_bytes, HashAlgorithm, InputManifest, ManifestRecord, ManifestStore,
};

fn main() -> omnibor::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let store = ManifestStore::new(dir.path());
    let algo = HashAlgorithm::Sha1;
    let id = |s: &str| gitoid_of_bytes(s.as_bytes(), algo);

    let mut objects = Vec::new();
    for (obj, src) in [("add.o", "add.c"), ("sub.o", "sub.c")] {
        let im = InputManifest::from_records(
            algo,
            [
                ManifestRecord::leaf(id(src)),
                ManifestRecord::leaf(id("hdr.h")),
            ],
        )?;
        store.put(&im)?;
        objects.push(ManifestRecord::derived(id(obj), im.oid()?));
    }
    let lib = InputManifest::from_records(algo, objects)?;
    store.put(&lib)?;

    let g = build_adg(lib.oid()?, &store)?;
    println!("{} nodes, {} leaves", g.len(), g.leaves().len());
    match g.contains(&id("sub.c")) {
        Some(path) => {
            println!("sub.c is reached through:");
            for step in path {
                println!("  {}", step.uri());
            }
        }
        None => println!("sub.c is not in the graph"),
    }
    print!("{}", g.export());
    Ok(())
}
