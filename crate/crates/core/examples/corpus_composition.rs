//! Index a package archive, then find it inside a larger archive.

use std::io::{Cursor, Write};

use omnibor::corpus::{composition_analysis, Corpus, PackageSource, DEFAULT_THRESHOLD};

fn zip_of(entries: &[(&str, &[u8])]) -> Vec<u8> {
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    for (name, data) in entries {
        w.start_file(*name, zip::write::SimpleFileOptions::default())
            .expect("zip entry");
        w.write_all(data).expect("zip write");
    }
    w.finish().expect("zip finish").into_inner()
}

fn main() -> omnibor::Result<()> {
    let classes: [(&str, &[u8]); 4] = [
        ("org/lib/A.class", b"class A"),
        ("org/lib/B.class", b"class B"),
        ("org/lib/C.class", b"class C"),
        ("org/lib/D.class", b"class D"),
    ];
    let mut corpus = Corpus::new();
    let vuln = serde_json::json!({"id": "CVE-2024-1234", "summary": "example"});
    corpus.index_package(
        PackageSource::Zip(&zip_of(&classes)),
        "lib-1.0.jar",
        "pkg:maven/org/lib@1.0",
        &[vuln],
        0,
    )?;

    let mut app = classes[..3].to_vec();
    app.push(("com/app/Main.class", b"class Main"));
    for m in composition_analysis(&corpus, &zip_of(&app), DEFAULT_THRESHOLD)? {
        println!("{}", m.render());
    }
    print!("{}", corpus.to_jsonl());
    Ok(())
}
