//! Generate manifests for one output whose inputs are known, and record the
//! result in a sidecar file.

use omnibor::embed::sidecar_lookup;
use omnibor::{generate, gitoid_of_file, EmbedTarget, GenerationRequest, HashAlgorithm};

fn main() -> omnibor::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let input = dir.path().join("schema.json");
    let output = dir.path().join("schema.bin");
    std::fs::write(&input, "{\"fields\": [\"id\", \"name\"]}\n").expect("write input");
    std::fs::write(&output, b"\x01\x02id\x04name").expect("write output");
    let store = dir.path().join("omnibor");

    let result = generate(
        &GenerationRequest::new(&output, [&input], "schema-compiler")
            .omnibor_dir(&store)
            .embed(EmbedTarget::Sidecar),
    )?;
    for (algo, oid) in &result.oids {
        println!("{algo}: {}", oid.uri());
    }
    let id = gitoid_of_file(&output, HashAlgorithm::Sha256)?;
    let found = sidecar_lookup(&store.join("sidecar"), &id)?;
    println!(
        "sidecar for the output: {}",
        found.map(|o| o.uri()).unwrap_or_default()
    );
    Ok(())
}
