//! Embed a `.note.omnibor` section into an ELF file and read it back.
//!
//! cargo run --example elf_note -- path/to/binary
//! Without an argument a small program is compiled with `cc`.

use std::path::PathBuf;
use std::process::Command;

use omnibor::embed::{self, elf, OmniborNote};
use omnibor::{gitoid_of_bytes, HashAlgorithm};

fn main() -> omnibor::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let target = dir.path().join("target.elf");
    match std::env::args().nth(1) {
        Some(p) => {
            std::fs::copy(&p, &target).expect("copy input");
        }
        None => {
            let src = dir.path().join("hello.c");
            std::fs::write(&src, "int main(void) { return 0; }\n").expect("write source");
            let ok = Command::new("cc")
                .arg("-o")
                .arg(&target)
                .arg(&src)
                .status()
                .is_ok_and(|s| s.success());
            if !ok {
                eprintln!("cc is unavailable; pass an ELF file instead");
                std::process::exit(2);
            }
        }
    }

    let before = std::fs::read(&target).expect("read");
    let note = OmniborNote::from_ids(HashAlgorithm::ALL.map(|a| gitoid_of_bytes(b"manifest", a)));
    embed::embed_elf_file(&target, &note, false)?;
    let after = std::fs::read(&target).expect("read");

    println!("kind: {:?}", embed::elf_kind(&before)?);
    println!("payload: {} bytes", note.payload_len());
    println!(
        "growth: {} bytes (alignment unit {})",
        after.len() - before.len(),
        elf::alignment_unit(&before)?
    );
    let back = embed::extract_elf_file(&PathBuf::from(&target))?.expect("note present");
    print!("{}", back.render());
    assert_eq!(back, note);
    Ok(())
}
