//! Print the gitoid URIs of each file named on the command line.
//!
//! cargo run --example gitoid -- Cargo.toml

use omnibor::{gitoid_of_file, HashAlgorithm};

fn main() -> omnibor::Result<()> {
    let files: Vec<String> = std::env::args().skip(1).collect();
    if files.is_empty() {
        eprintln!("usage: gitoid <file>...");
        std::process::exit(2);
    }
    for f in files {
        for algo in HashAlgorithm::ALL {
            println!("{f}\t{}", gitoid_of_file(&f, algo)?.uri());
        }
    }
    Ok(())
}
