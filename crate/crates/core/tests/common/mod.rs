#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use omnibor::identifier::HashAlgorithm;
use omnibor::trace::{parse_raw_log, RawBuildRecord};
use omnibor::{ArtifactId, MetadataStore};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_omnibor"))
}

pub fn copy_dir(src: &Path, dst: &Path) {
    fs::create_dir_all(dst).unwrap();
    for e in fs::read_dir(src).unwrap() {
        let e = e.unwrap();
        let to = dst.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_dir(&e.path(), &to);
        } else {
            fs::copy(e.path(), &to).unwrap();
        }
    }
}

/// Run the CLI with an explicit store directory and no inherited OMNIBOR_* state.
pub fn omnibor(store: &Path, cwd: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.arg("--omnibor-dir")
        .arg(store)
        .args(args)
        .current_dir(cwd);
    for (k, _) in std::env::vars_os() {
        if k.to_string_lossy().starts_with("OMNIBOR_") {
            cmd.env_remove(&k);
        }
    }
    cmd.output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// `git hash-object`, the independent gitoid oracle.
pub fn git_hash(path: &Path, algo: HashAlgorithm) -> ArtifactId {
    let out = match algo {
        HashAlgorithm::Sha1 => Command::new("git")
            .arg("hash-object")
            .arg(path)
            .output()
            .unwrap(),
        HashAlgorithm::Sha256 => {
            let repo = tempfile::tempdir().unwrap();
            let init = Command::new("git")
                .args(["init", "-q", "--object-format=sha256"])
                .arg(repo.path())
                .status()
                .unwrap();
            assert!(init.success());
            Command::new("git")
                .arg("-C")
                .arg(repo.path())
                .arg("hash-object")
                .arg(fs::canonicalize(path).unwrap())
                .output()
                .unwrap()
        }
    };
    assert!(out.status.success(), "git hash-object failed");
    ArtifactId::from_hex(algo, String::from_utf8(out.stdout).unwrap().trim()).unwrap()
}

/// A project copied out of the fixtures and built under `wrap`.
pub struct TracedBuild {
    pub _tmp: tempfile::TempDir,
    pub project: PathBuf,
    pub store: PathBuf,
    pub records: Vec<RawBuildRecord>,
    pub wrap_status: i32,
    pub post_process_stdout: String,
}

impl TracedBuild {
    pub fn run(fixture_name: &str, embed: &str) -> TracedBuild {
        let tmp = tempfile::tempdir().unwrap();
        let project = tmp.path().join("project");
        let store = tmp.path().join("store");
        copy_dir(&fixture(fixture_name), &project);
        let wrap = omnibor(&store, &project, &["wrap", "--", "make"]);
        assert!(
            wrap.status.success(),
            "wrap failed: {}",
            String::from_utf8_lossy(&wrap.stderr)
        );
        let log = store.join("raw_build.log");
        let pp = omnibor(
            &store,
            &project,
            &["post-process", log.to_str().unwrap(), "--embed", embed],
        );
        assert!(
            pp.status.success(),
            "post-process failed: {}",
            String::from_utf8_lossy(&pp.stderr)
        );
        let records = parse_raw_log(&fs::read(&log).unwrap()).unwrap();
        TracedBuild {
            _tmp: tmp,
            project,
            store,
            records,
            wrap_status: wrap.status.code().unwrap_or(-1),
            post_process_stdout: stdout(&pp),
        }
    }

    pub fn record_for(&self, file_name: &str) -> &RawBuildRecord {
        self.records
            .iter()
            .rev()
            .find(|r| r.outfile.path.file_name().is_some_and(|n| n == file_name))
            .unwrap_or_else(|| panic!("no record for {file_name}"))
    }

    /// Manifest OID per algorithm for an output named in the log.
    pub fn oids_for(&self, file_name: &str) -> BTreeMap<HashAlgorithm, ArtifactId> {
        let meta = MetadataStore::new(&self.store);
        let rec = self.record_for(file_name);
        rec.outfile
            .ids
            .iter()
            .map(|id| {
                (
                    id.algo(),
                    meta.find_by_output(id)
                        .unwrap()
                        .expect("metadata for output")
                        .bom,
                )
            })
            .collect()
    }
}

/// Every file under `dir`, keyed by relative path.
pub fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let Ok(rd) = fs::read_dir(dir) else { return };
        for e in rd {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn run_in(dir: &Path, program: &str, args: &[&str]) -> Output {
    Command::new(program)
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}
