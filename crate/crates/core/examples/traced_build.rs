//! Trace a build with the `omnibor` shims, then turn the raw log into
//! manifests.
//!
//! cargo build && cargo run --example traced_build -- <project dir> [build command...]
//! The build command defaults to `make`. The project is copied first.

use std::path::{Path, PathBuf};

use omnibor::trace::{parse_raw_log, post_process, wrap_build, EmbedMode, WrapOptions};

fn copy_dir(src: &Path, dst: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dst)?;
    for e in std::fs::read_dir(src)? {
        let e = e?;
        if e.file_type()?.is_dir() {
            copy_dir(&e.path(), &dst.join(e.file_name()))?;
        } else {
            std::fs::copy(e.path(), dst.join(e.file_name()))?;
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let Some(project) = args.next() else {
        eprintln!("usage: traced_build <project dir> [build command...]");
        std::process::exit(2);
    };
    let mut command: Vec<String> = args.collect();
    if command.is_empty() {
        command.push("make".into());
    }
    // examples live in target/<profile>/examples, next to the binary
    let exe = std::env::current_exe()?;
    let shim_exe: PathBuf = exe
        .parent()
        .and_then(Path::parent)
        .map(|d| d.join("omnibor"))
        .ok_or("no target dir")?;
    if !shim_exe.is_file() {
        eprintln!("{} not found; run `cargo build` first", shim_exe.display());
        std::process::exit(2);
    }

    let tmp = tempfile::tempdir()?;
    let work = tmp.path().join("project");
    copy_dir(Path::new(&project), &work)?;
    let store = tmp.path().join("omnibor");
    let opts = WrapOptions::new(&shim_exe, &store);

    std::env::set_current_dir(&work)?;
    let status = wrap_build(&command, &opts)?;
    println!("build exited with {status}");
    let records = parse_raw_log(&std::fs::read(opts.log_path())?)?;
    for r in &records {
        println!(
            "{} <- {} inputs ({})",
            r.outfile.path.display(),
            r.infiles.len(),
            r.context()
        );
    }
    print!("{}", post_process(&records, &store, EmbedMode::ExeSo)?);
    Ok(())
}
