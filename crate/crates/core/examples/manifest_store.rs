//! Build a two-level manifest by hand, store it, read it back and verify it.

use omnibor::{gitoid_of_bytes, HashAlgorithm, InputManifest, ManifestRecord, ManifestStore};

fn main() -> omnibor::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let store = ManifestStore::new(dir.path());
    let algo = HashAlgorithm::Sha1;

    let source = gitoid_of_bytes(b"int add(int a, int b) { return a + b; }\n", algo);
    let header = gitoid_of_bytes(b"int add(int, int);\n", algo);
    let object_im = InputManifest::from_records(
        algo,
        [ManifestRecord::leaf(source), ManifestRecord::leaf(header)],
    )?;
    let object_oid = object_im.oid()?;
    store.put(&object_im)?;

    let object = gitoid_of_bytes(b"\x7fELF add.o", algo);
    let library_im =
        InputManifest::from_records(algo, [ManifestRecord::derived(object, object_oid)])?;
    let path = store.put(&library_im)?;

    println!("stored {}", path.display());
    print!("{}", String::from_utf8_lossy(&library_im.serialize()?));
    let back = store.get(&library_im.oid()?)?.expect("just stored");
    assert_eq!(back, library_im);
    back.validate()?;
    println!(
        "round trip ok, {} manifests in the store",
        store.list(algo)?.len()
    );
    Ok(())
}
