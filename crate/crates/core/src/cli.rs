//! Command-line front end. Exit status is 0 on success, 1 on domain errors
//! and 2 on usage errors; results go to stdout, diagnostics to stderr.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::adg::build_adg;
use crate::corpus::{self, Corpus, PackageSource};
use crate::embed::{self, OmniborNote};
use crate::error::{Error, IoContext, Result};
use crate::generate::{
    self, resolve_omnibor_dir, BomResolver, EmbedTarget, GenerationRequest, StoreResolver,
};
use crate::identifier::{gitoids_of_file, ArtifactId, HashAlgorithm};
use crate::manifest::{InputManifest, ManifestRecord, ManifestStore};
use crate::metadata::MetadataStore;
use crate::sbom::{self, PackageDescriptor, PackageMapping};
use crate::trace::{self, EmbedMode, FileEntry, WrapOptions};
use crate::vulnscan;

#[derive(Parser, Debug)]
#[command(
    name = "omnibor",
    version,
    about = "Build and query OmniBOR artifact dependency graphs"
)]
pub struct Cli {
    /// Store directory; overrides OMNIBOR_DIR.
    #[arg(long, global = true, value_name = "DIR")]
    pub omnibor_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the gitoid of a file.
    Id {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = AlgoChoice::Both)]
        algo: AlgoChoice,
        /// Print `gitoid:blob:<algo>:<hex>` instead of bare hex.
        #[arg(long)]
        uri: bool,
    },
    #[command(subcommand)]
    Manifest(ManifestCmd),
    /// Generate manifests and metadata for one output with known inputs.
    Generate(GenerateArgs),
    #[command(subcommand)]
    Adg(AdgCmd),
    /// Write the output's OIDs into its `.note.omnibor` section.
    Embed {
        elf: PathBuf,
        /// OID to embed; repeat once per algorithm. Looked up in metadata when absent.
        #[arg(long = "oid")]
        oids: Vec<String>,
        /// Overwrite an existing note.
        #[arg(long)]
        replace: bool,
    },
    /// Print the OIDs carried by an ELF file.
    Extract { elf: PathBuf },
    #[command(subcommand)]
    Sidecar(SidecarCmd),
    /// Run a build with tool interception and write a raw build log.
    Wrap(WrapArgs),
    #[command(subcommand)]
    Log(LogCmd),
    /// Turn a raw build log into manifests and metadata.
    PostProcess {
        log: PathBuf,
        #[arg(long, value_enum, default_value_t = EmbedChoice::ExeSo)]
        embed: EmbedChoice,
        /// Accepted for symmetry with `wrap`; extra dependency passes only run during the build.
        #[arg(long)]
        full_deps: bool,
    },
    /// Report CVEs reachable from one or more roots.
    ScanCve {
        #[arg(long)]
        db: PathBuf,
        #[arg(long = "root", required = true)]
        roots: Vec<String>,
    },
    /// Emit an SPDX 2.3 JSON document for a package built under `wrap`.
    Sbom(SbomArgs),
    #[command(subcommand)]
    Corpus(CorpusCmd),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AlgoChoice {
    Sha1,
    Sha256,
    Both,
}

impl AlgoChoice {
    fn algos(self) -> Vec<HashAlgorithm> {
        match self {
            AlgoChoice::Sha1 => vec![HashAlgorithm::Sha1],
            AlgoChoice::Sha256 => vec![HashAlgorithm::Sha256],
            AlgoChoice::Both => HashAlgorithm::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EmbedChoice {
    ExeSo,
    All,
    None,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TargetChoice {
    Elf,
    Comment,
    Sidecar,
    None,
}

#[derive(Subcommand, Debug)]
pub enum ManifestCmd {
    /// Store a manifest listing `inputs`; prints one OID per algorithm.
    Create {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, num_args = 0.., required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Print a stored manifest.
    Show { oid: String },
    /// Check a manifest's bytes, grammar and `bom` links.
    Verify { oid: String },
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, num_args = 0.., required = true)]
    pub inputs: Vec<PathBuf>,
    /// Tool name used as the metadata context.
    #[arg(long, default_value = "generate")]
    pub context: String,
    #[arg(long, value_enum, default_value_t = TargetChoice::None)]
    pub embed: TargetChoice,
    #[arg(long)]
    pub build_cmd: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum AdgCmd {
    /// Print node count, leaf count and depth-first node list.
    Build {
        root: String,
    },
    Leaves {
        root: String,
    },
    /// Print a root-to-node path, one id per line.
    Contains {
        root: String,
        id: String,
    },
    /// `+ id` for nodes only in B, `- id` for nodes only in A.
    Diff {
        a: String,
        b: String,
    },
    /// Sorted `parent -> child` edges.
    Export {
        root: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum SidecarCmd {
    Write {
        artifact: PathBuf,
        #[arg(long)]
        oid: String,
    },
    Lookup {
        artifact: PathBuf,
        #[arg(long, value_enum, default_value_t = AlgoChoice::Both)]
        algo: AlgoChoice,
    },
}

#[derive(Args, Debug)]
pub struct WrapArgs {
    /// Raw log location; defaults to `<omnibor dir>/raw_build.log`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Keep an existing log.
    #[arg(long)]
    pub append: bool,
    /// Extra `-M` pass when the build only asks for user headers.
    #[arg(long)]
    pub full_deps: bool,
    /// Default search directory for direct `ld` invocations.
    #[arg(long = "lib-dir")]
    pub lib_dirs: Vec<PathBuf>,
    /// Post-process the log once the build succeeds.
    #[arg(long)]
    pub post_process: bool,
    #[arg(last = true, required = true)]
    pub command: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum LogCmd {
    /// Print the records of a raw log as JSON.
    Parse { log: PathBuf },
}

#[derive(Args, Debug)]
pub struct SbomArgs {
    /// `name@version`.
    #[arg(long)]
    pub subject: String,
    #[arg(long)]
    pub purl: Option<String>,
    /// Manifest OID of the package; repeatable.
    #[arg(long = "im")]
    pub ims: Vec<String>,
    /// Built file whose manifests identify the package.
    #[arg(long)]
    pub artifact: Option<PathBuf>,
    #[arg(long)]
    pub mapping: PathBuf,
    #[arg(long)]
    pub log: PathBuf,
    /// RFC 3339 creation time; defaults to SOURCE_DATE_EPOCH or now.
    #[arg(long)]
    pub timestamp: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum CorpusCmd {
    /// Add a zip archive or directory to the index.
    Index {
        package: PathBuf,
        #[arg(long)]
        purl: String,
        /// JSON file holding an array of vulnerability objects.
        #[arg(long)]
        vulns: Option<PathBuf>,
        /// Name recorded for the package; defaults to the file name.
        #[arg(long)]
        filename: Option<String>,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Seconds since the epoch; defaults to SOURCE_DATE_EPOCH or now.
        #[arg(long)]
        timestamp: Option<i64>,
    },
    /// Print the record for a gitoid URI or purl.
    Lookup {
        id: String,
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// List indexed packages that make up an artifact.
    Analyze {
        artifact: PathBuf,
        #[arg(long, default_value_t = corpus::DEFAULT_THRESHOLD)]
        threshold: u32,
        #[arg(long)]
        index: Option<PathBuf>,
    },
}

/// Parse `argv` (program name first) and run it.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "omnibor: {e}");
            1
        }
    }
}

/// Entry point for the binary: shim dispatch, then the CLI.
pub fn main_with_args(argv: Vec<OsString>) -> i32 {
    let argv0 = argv
        .first()
        .map(|a| a.to_string_lossy().into_owned())
        .unwrap_or_default();
    if trace::shim::invoked_as_shim(&argv0) {
        return trace::run_shim(
            argv.iter()
                .map(|a| a.to_string_lossy().into_owned())
                .collect(),
        );
    }
    run(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

fn store_dir(cli: &Cli) -> Result<PathBuf> {
    resolve_omnibor_dir(cli.omnibor_dir.as_deref()).ok_or_else(|| {
        Error::Analysis("no store directory: pass --omnibor-dir or set OMNIBOR_DIR".into())
    })
}

fn parse_id(text: &str) -> Result<ArtifactId> {
    ArtifactId::parse_any(text.trim())
}

fn wr(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .with_path(Path::new("<stdout>"))
}

fn default_epoch() -> i64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs() as i64)
                .unwrap_or(0)
        })
}

fn rfc3339(epoch: i64) -> String {
    let t = UNIX_EPOCH + Duration::from_secs(epoch.max(0) as u64);
    humantime::format_rfc3339_seconds(t).to_string()
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Id { file, algo, uri } => {
            for id in gitoids_of_file(file, &algo.algos())? {
                wr(
                    out,
                    &format!("{}\n", if *uri { id.uri() } else { id.hex() }),
                )?;
            }
        }
        Command::Manifest(cmd) => manifest_cmd(cli, cmd, out)?,
        Command::Generate(args) => {
            let dir = store_dir(cli)?;
            let mut req = GenerationRequest::new(&args.output, &args.inputs, &args.context)
                .omnibor_dir(dir)
                .embed(match args.embed {
                    TargetChoice::Elf => EmbedTarget::Elf,
                    TargetChoice::Comment => EmbedTarget::Comment,
                    TargetChoice::Sidecar => EmbedTarget::Sidecar,
                    TargetChoice::None => EmbedTarget::None,
                });
            req.build_cmd = args.build_cmd.clone();
            let res = generate::generate(&req)?;
            for oid in res.oids.values() {
                wr(out, &format!("{}\n", oid.uri()))?;
            }
            if let Some(e) = res.embed_error {
                let _ = writeln!(err, "omnibor: manifests written, embedding failed: {e}");
                return Ok(1);
            }
        }
        Command::Adg(cmd) => adg_cmd(cli, cmd, out)?,
        Command::Embed { elf, oids, replace } => {
            let note = if oids.is_empty() {
                let metadata = MetadataStore::new(store_dir(cli)?);
                let mut note = OmniborNote::new();
                for id in gitoids_of_file(elf, &HashAlgorithm::ALL)? {
                    if let Some(m) = metadata.find_by_output(&id)? {
                        note.insert(m.bom);
                    }
                }
                // an already embedded file no longer hashes to its metadata key
                if note.is_empty() {
                    for oid in embed::extract_elf_file(elf)?.iter().flat_map(|n| n.ids()) {
                        if let Some(m) = metadata.find_by_oid(&oid)? {
                            note.insert(m.bom);
                        }
                    }
                }
                if note.is_empty() {
                    return Err(Error::Analysis(format!(
                        "{}: no manifest recorded for this file; pass --oid",
                        elf.display()
                    )));
                }
                note
            } else {
                OmniborNote::from_ids(
                    oids.iter()
                        .map(|s| parse_id(s))
                        .collect::<Result<Vec<_>>>()?,
                )
            };
            embed::embed_elf_file(elf, &note, *replace)?;
            wr(out, &note.render_short())?;
        }
        Command::Extract { elf } => match embed::extract_elf_file(elf)? {
            Some(note) => wr(out, &note.render_short())?,
            None => {
                let _ = writeln!(err, "omnibor: {}: no .note.omnibor section", elf.display());
                return Ok(1);
            }
        },
        Command::Sidecar(cmd) => {
            let side = store_dir(cli)?.join("sidecar");
            match cmd {
                SidecarCmd::Write { artifact, oid } => {
                    let oid = parse_id(oid)?;
                    let id = gitoids_of_file(artifact, &[oid.algo()])?[0];
                    let path = embed::sidecar_write(&side, &id, &oid)?;
                    wr(out, &format!("{}\n", path.display()))?;
                }
                SidecarCmd::Lookup { artifact, algo } => {
                    let mut found = false;
                    for id in gitoids_of_file(artifact, &algo.algos())? {
                        if let Some(oid) = embed::sidecar_lookup(&side, &id)? {
                            wr(out, &format!("{}\n", oid.uri()))?;
                            found = true;
                        }
                    }
                    if !found {
                        let _ = writeln!(err, "omnibor: {}: no sidecar entry", artifact.display());
                        return Ok(1);
                    }
                }
            }
        }
        Command::Wrap(args) => return wrap_cmd(cli, args, out, err),
        Command::Log(LogCmd::Parse { log }) => {
            let records = trace::parse_raw_log(&fs::read(log).with_path(log)?)?;
            let entry = |f: &FileEntry| {
                serde_json::json!({
                    "path": f.path.to_string_lossy(),
                    "ids": f.ids.iter().map(|i| i.uri()).collect::<Vec<_>>(),
                })
            };
            let doc: Vec<_> = records
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "pid": r.pid,
                        "context": r.context(),
                        "outfile": entry(&r.outfile),
                        "infiles": r.infiles.iter().map(entry).collect::<Vec<_>>(),
                        "dynlibs": r.dynlibs.iter().map(entry).collect::<Vec<_>>(),
                        "build_cmd": r.build_cmd,
                    })
                })
                .collect();
            wr(
                out,
                &format!(
                    "{}\n",
                    serde_json::to_string_pretty(&doc).expect("JSON values serialize")
                ),
            )?;
        }
        Command::PostProcess {
            log,
            embed,
            full_deps,
        } => {
            if *full_deps {
                let _ = writeln!(err, "omnibor: --full-deps only takes effect during `wrap`");
            }
            let summary =
                trace::postprocess::post_process_log(log, &store_dir(cli)?, embed_mode(*embed))?;
            wr(out, &summary.to_string())?;
        }
        Command::ScanCve { db, roots } => {
            let dir = store_dir(cli)?;
            let store = ManifestStore::new(&dir);
            let metadata = MetadataStore::new(&dir);
            let db = vulnscan::load_cvedb(&fs::read(db).with_path(db)?)?;
            let mut reports = Vec::new();
            for r in roots {
                let g = build_adg(parse_id(r)?, &store)?;
                reports.push(vulnscan::scan(&g, &db, Some(&metadata)));
            }
            wr(out, &vulnscan::report_render(&reports))?;
        }
        Command::Sbom(args) => sbom_cmd(cli, args, out, err)?,
        Command::Corpus(cmd) => corpus_cmd(cli, cmd, out)?,
    }
    Ok(0)
}

fn embed_mode(c: EmbedChoice) -> EmbedMode {
    match c {
        EmbedChoice::ExeSo => EmbedMode::ExeSo,
        EmbedChoice::All => EmbedMode::All,
        EmbedChoice::None => EmbedMode::None,
    }
}

fn manifest_cmd(cli: &Cli, cmd: &ManifestCmd, out: &mut dyn Write) -> Result<()> {
    let dir = store_dir(cli)?;
    let store = ManifestStore::new(&dir);
    match cmd {
        ManifestCmd::Create { output, inputs } => {
            // the output must exist, as for any described artifact
            fs::metadata(output).with_path(output)?;
            let metadata = MetadataStore::new(&dir);
            let resolver = StoreResolver {
                store: &store,
                metadata: &metadata,
            };
            let cwd = std::env::current_dir().with_path(Path::new("."))?;
            let entries = inputs
                .iter()
                .map(|p| FileEntry::hash(cwd.join(p), &HashAlgorithm::ALL))
                .collect::<Result<Vec<_>>>()?;
            for algo in HashAlgorithm::ALL {
                let mut records = Vec::new();
                for e in &entries {
                    let id = e.id(algo).expect("hashed under every algorithm");
                    records.push(match resolver.bom_for(e, algo)? {
                        Some(bom) => ManifestRecord::derived(id, bom),
                        None => ManifestRecord::leaf(id),
                    });
                }
                let m = InputManifest::from_records(algo, records)?;
                store.put(&m)?;
                wr(out, &format!("{}\n", m.oid()?.uri()))?;
            }
        }
        ManifestCmd::Show { oid } => {
            let oid = parse_id(oid)?;
            let bytes = store.get_raw(&oid)?.ok_or(Error::NotFound(oid))?;
            out.write_all(&bytes).with_path(Path::new("<stdout>"))?;
        }
        ManifestCmd::Verify { oid } => {
            let oid = parse_id(oid)?;
            let m = store.get(&oid)?.ok_or(Error::NotFound(oid))?;
            m.validate()?;
            let mut dangling = 0;
            for r in &m.records {
                if let Some(bom) = r.bom_id {
                    if !store.contains(&bom) {
                        dangling += 1;
                    }
                }
            }
            wr(
                out,
                &format!(
                    "ok {} records={} dangling_bom={}\n",
                    oid.uri(),
                    m.records.len(),
                    dangling
                ),
            )?;
        }
    }
    Ok(())
}

fn adg_cmd(cli: &Cli, cmd: &AdgCmd, out: &mut dyn Write) -> Result<()> {
    let store = ManifestStore::new(store_dir(cli)?);
    let load = |root: &str| -> Result<crate::adg::Adg> { build_adg(parse_id(root)?, &store) };
    match cmd {
        AdgCmd::Build { root } => {
            let g = load(root)?;
            wr(
                out,
                &format!("nodes: {}\nleaves: {}\n", g.len(), g.leaves().len()),
            )?;
            for n in g.nodes.values() {
                let kind = if n.is_leaf() { "leaf" } else { "derived" };
                wr(out, &format!("{} {kind}\n", n.artifact_id.uri()))?;
            }
        }
        AdgCmd::Leaves { root } => {
            for id in load(root)?.leaves() {
                wr(out, &format!("{}\n", id.uri()))?;
            }
        }
        AdgCmd::Contains { root, id } => {
            let g = load(root)?;
            let id = parse_id(id)?;
            let path = g.contains(&id).ok_or(Error::NotFound(id))?;
            for p in path {
                wr(out, &format!("{}\n", p.uri()))?;
            }
        }
        AdgCmd::Diff { a, b } => {
            let (added, removed) = load(a)?.diff(&load(b)?);
            for id in added {
                wr(out, &format!("+ {}\n", id.uri()))?;
            }
            for id in removed {
                wr(out, &format!("- {}\n", id.uri()))?;
            }
        }
        AdgCmd::Export { root } => wr(out, &load(root)?.export())?,
    }
    Ok(())
}

fn wrap_cmd(cli: &Cli, args: &WrapArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let dir = store_dir(cli)?;
    let exe = std::env::current_exe().with_path(Path::new("<current exe>"))?;
    let mut opts = WrapOptions::new(exe, &dir);
    opts.log = args.log.clone();
    opts.append = args.append;
    opts.full_deps = args.full_deps;
    opts.lib_dirs = args.lib_dirs.clone();
    let code = trace::wrap_build(&args.command, &opts)?;
    if code != 0 {
        let _ = writeln!(err, "omnibor: build exited with status {code}");
        return Ok(code);
    }
    if args.post_process {
        let summary =
            trace::postprocess::post_process_log(&opts.log_path(), &dir, EmbedMode::default())?;
        wr(out, &summary.to_string())?;
    }
    Ok(0)
}

fn sbom_cmd(cli: &Cli, args: &SbomArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let (name, version) = args
        .subject
        .rsplit_once('@')
        .filter(|(n, v)| !n.is_empty() && !v.is_empty())
        .ok_or_else(|| Error::Sbom(format!("subject `{}` is not name@version", args.subject)))?;
    let mut subject = PackageDescriptor::new(name, version);
    subject.purl = args.purl.clone();
    for im in &args.ims {
        subject.im_oids.push(parse_id(im)?);
    }
    if let Some(artifact) = &args.artifact {
        let metadata = MetadataStore::new(store_dir(cli)?);
        for id in gitoids_of_file(artifact, &HashAlgorithm::ALL)? {
            if let Some(m) = metadata.find_by_output(&id)? {
                if !subject.im_oids.contains(&m.bom) {
                    subject.im_oids.push(m.bom);
                }
            }
        }
    }
    let mapping_text = fs::read_to_string(&args.mapping).with_path(&args.mapping)?;
    let mapping = PackageMapping::parse(&mapping_text)?;
    let records = trace::parse_raw_log(&fs::read(&args.log).with_path(&args.log)?)?;
    let runtime = sbom::derive_runtime_deps(&records, &mapping);
    let buildtime = sbom::derive_buildtime_deps(&records, &mapping);
    let unmapped: BTreeSet<&PathBuf> = runtime.unmapped.iter().chain(&buildtime.unmapped).collect();
    for p in unmapped {
        let _ = writeln!(err, "omnibor: no package maps {}", p.display());
    }
    let timestamp = args
        .timestamp
        .clone()
        .unwrap_or_else(|| rfc3339(default_epoch()));
    let doc = sbom::generate_sbom(&subject, &runtime.packages, &buildtime.packages, &timestamp)?;
    wr(out, &doc.to_json())
}

fn corpus_cmd(cli: &Cli, cmd: &CorpusCmd, out: &mut dyn Write) -> Result<()> {
    let index_path = |explicit: &Option<PathBuf>| -> Result<PathBuf> {
        match explicit {
            Some(p) => Ok(p.clone()),
            None => Ok(store_dir(cli)?.join("corpus.jsonl")),
        }
    };
    match cmd {
        CorpusCmd::Index {
            package,
            purl,
            vulns,
            filename,
            index,
            timestamp,
        } => {
            let path = index_path(index)?;
            let mut c = Corpus::load(&path)?;
            let vulns: Vec<serde_json::Value> = match vulns {
                Some(v) => serde_json::from_slice(&fs::read(v).with_path(v)?)
                    .map_err(|e| Error::Document(format!("{}: {e}", v.display())))?,
                None => Vec::new(),
            };
            let name = filename.clone().unwrap_or_else(|| {
                package
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            let ts = timestamp.unwrap_or_else(default_epoch);
            let id = if package.is_dir() {
                c.index_package(PackageSource::Dir(package), &name, purl, &vulns, ts)?
            } else {
                let bytes = fs::read(package).with_path(package)?;
                c.index_package(PackageSource::Zip(&bytes), &name, purl, &vulns, ts)?
            };
            c.save(&path)?;
            wr(out, &format!("{id}\n"))?;
        }
        CorpusCmd::Lookup { id, index } => {
            let c = Corpus::load(&index_path(index)?)?;
            let r = c
                .lookup(id)
                .ok_or_else(|| Error::Document(format!("{id} is not in the corpus")))?;
            wr(
                out,
                &format!(
                    "{}\n",
                    serde_json::to_string_pretty(r).expect("records serialize")
                ),
            )?;
        }
        CorpusCmd::Analyze {
            artifact,
            threshold,
            index,
        } => {
            let c = Corpus::load(&index_path(index)?)?;
            let bytes = fs::read(artifact).with_path(artifact)?;
            for m in corpus::composition_analysis(&c, &bytes, *threshold)? {
                wr(out, &format!("{}\n", m.render()))?;
            }
        }
    }
    Ok(())
}
