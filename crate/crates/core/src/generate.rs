//! Direct manifest generation: the caller names the inputs and output, and
//! one call hashes, stores manifests and metadata, and optionally embeds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::embed::{self, CommentStyle, OmniborNote};
use crate::error::{Error, IoContext, Result};
use crate::identifier::{gitoids_of_file, ArtifactId, HashAlgorithm};
use crate::manifest::{InputManifest, ManifestRecord, ManifestStore};
use crate::metadata::{MetadataFile, MetadataStore};
use crate::trace::rawlog::FileEntry;

pub const OMNIBOR_DIR_ENV: &str = "OMNIBOR_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbedTarget {
    /// `.note.omnibor` section in an ELF output.
    Elf,
    /// Trailing comment line in a text output.
    Comment,
    /// `<uri>` file in `<omnibor dir>/sidecar`, keyed by the output's id.
    Sidecar,
    #[default]
    None,
}

#[derive(Debug, Clone)]
pub struct GenerationRequest {
    pub output: PathBuf,
    pub inputs: Vec<PathBuf>,
    /// Tool name used as the metadata directory.
    pub context: String,
    pub embed: EmbedTarget,
    /// Overrides `OMNIBOR_DIR` when set.
    pub omnibor_dir: Option<PathBuf>,
    pub build_cmd: Option<String>,
    pub algos: Vec<HashAlgorithm>,
}

impl GenerationRequest {
    pub fn new(
        output: impl Into<PathBuf>,
        inputs: impl IntoIterator<Item = impl Into<PathBuf>>,
        context: impl Into<String>,
    ) -> Self {
        GenerationRequest {
            output: output.into(),
            inputs: inputs.into_iter().map(Into::into).collect(),
            context: context.into(),
            embed: EmbedTarget::None,
            omnibor_dir: None,
            build_cmd: None,
            algos: HashAlgorithm::ALL.to_vec(),
        }
    }

    pub fn omnibor_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.omnibor_dir = Some(dir.into());
        self
    }

    pub fn embed(mut self, target: EmbedTarget) -> Self {
        self.embed = target;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenerationResult {
    /// Manifest OID per algorithm.
    pub oids: BTreeMap<HashAlgorithm, ArtifactId>,
    /// Output ids before any embedding.
    pub output_ids: BTreeMap<HashAlgorithm, ArtifactId>,
    /// Output ids after embedding, when embedding changed the file.
    pub embedded_output_ids: BTreeMap<HashAlgorithm, ArtifactId>,
    pub manifest_paths: Vec<PathBuf>,
    pub metadata_paths: Vec<PathBuf>,
    /// Set when manifests and metadata were written but embedding failed.
    pub embed_error: Option<String>,
    /// Identifiers found in comment trailers of text inputs.
    pub input_comment_oids: BTreeMap<PathBuf, Vec<ArtifactId>>,
}

impl GenerationResult {
    /// True when nothing was generated (no store directory configured).
    pub fn is_noop(&self) -> bool {
        self.oids.is_empty()
    }
}

/// The store directory: an explicit one, else `OMNIBOR_DIR` when non-empty.
pub fn resolve_omnibor_dir(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit.map(Path::to_path_buf).or_else(|| {
        std::env::var_os(OMNIBOR_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    })
}

/// How a child's own manifest is found.
pub(crate) trait BomResolver {
    fn bom_for(&self, child: &FileEntry, algo: HashAlgorithm) -> Result<Option<ArtifactId>>;
}

/// Looks in the child's ELF note, then in metadata; only OIDs whose
/// manifest is in the store count.
pub(crate) struct StoreResolver<'a> {
    pub store: &'a ManifestStore,
    pub metadata: &'a MetadataStore,
}

impl BomResolver for StoreResolver<'_> {
    fn bom_for(&self, child: &FileEntry, algo: HashAlgorithm) -> Result<Option<ArtifactId>> {
        let Some(id) = child.id(algo) else {
            return Ok(None);
        };
        if let Ok(bytes) = std::fs::read(&child.path) {
            if embed::elf::is_elf(&bytes) {
                if let Ok(Some(note)) = embed::extract_elf(&bytes) {
                    if let Some(oid) = note.get(algo).filter(|o| self.store.contains(o)) {
                        return Ok(Some(oid));
                    }
                }
            }
        }
        Ok(self
            .metadata
            .find_by_output(&id)?
            .map(|m| m.bom)
            .filter(|oid| oid.algo() == algo && self.store.contains(oid)))
    }
}

/// Build, store and describe one output's manifest under `algo`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn write_one(
    store: &ManifestStore,
    metadata: &MetadataStore,
    resolver: &dyn BomResolver,
    algo: HashAlgorithm,
    context: &str,
    build_cmd: &str,
    outfile: &FileEntry,
    infiles: &[FileEntry],
    dynlibs: &[FileEntry],
) -> Result<Option<(ArtifactId, PathBuf, PathBuf)>> {
    let Some(out_id) = outfile.id(algo) else {
        return Ok(None);
    };
    let mut records = Vec::new();
    for child in infiles {
        let Some(cid) = child.id(algo) else { continue };
        records.push(match resolver.bom_for(child, algo)? {
            Some(bom) => ManifestRecord::derived(cid, bom),
            None => ManifestRecord::leaf(cid),
        });
    }
    let manifest = InputManifest::from_records(algo, records)?;
    let oid = manifest.oid()?;
    let manifest_path = store.put(&manifest)?;
    let single = |e: &FileEntry| {
        e.id(algo)
            .map(|id| FileEntry::new(e.path.clone(), vec![id]))
    };
    let meta = MetadataFile {
        context: context.to_string(),
        algo,
        outfile: FileEntry::new(outfile.path.clone(), vec![out_id]),
        infiles: infiles.iter().filter_map(single).collect(),
        dynlibs: dynlibs.iter().filter_map(single).collect(),
        build_cmd: build_cmd.to_string(),
        bom: oid,
        embedded_outfile: None,
    };
    let meta_path = metadata.write(&meta)?;
    Ok(Some((oid, manifest_path, meta_path)))
}

/// Record the post-embedding id of an output in its metadata files.
pub(crate) fn note_embedded(
    metadata: &MetadataStore,
    context: &str,
    before: &[ArtifactId],
    after: &[ArtifactId],
) -> Result<()> {
    for (b, a) in before.iter().zip(after) {
        if b == a {
            continue;
        }
        if let Some(mut m) = metadata.read(context, b)? {
            m.embedded_outfile = Some(*a);
            metadata.write(&m)?;
        }
    }
    Ok(())
}

pub fn generate(req: &GenerationRequest) -> Result<GenerationResult> {
    let Some(dir) = resolve_omnibor_dir(req.omnibor_dir.as_deref()) else {
        return Ok(GenerationResult::default());
    };
    let cwd = std::env::current_dir().with_path(".")?;
    let abs = |p: &Path| crate::fsutil::absolutize(p, &cwd);
    let store = ManifestStore::new(&dir);
    let metadata = MetadataStore::new(&dir);
    let resolver = StoreResolver {
        store: &store,
        metadata: &metadata,
    };

    let mut infiles = Vec::new();
    let mut result = GenerationResult::default();
    for input in &req.inputs {
        let path = abs(input);
        infiles.push(FileEntry::hash(&path, &req.algos)?);
        if CommentStyle::for_path(&path).is_some() {
            let text = std::fs::read(&path).with_path(&path)?;
            let found = embed::extract_comments(&text);
            if !found.is_empty() {
                result.input_comment_oids.insert(path, found);
            }
        }
    }
    let out_path = abs(&req.output);
    let outfile = FileEntry::hash(&out_path, &req.algos)?;
    let build_cmd = req.build_cmd.clone().unwrap_or_else(|| {
        let mut argv = vec![
            req.context.clone(),
            "-o".into(),
            req.output.to_string_lossy().into_owned(),
        ];
        argv.extend(req.inputs.iter().map(|p| p.to_string_lossy().into_owned()));
        crate::trace::rawlog::render_command(&argv)
    });

    for &algo in &req.algos {
        if let Some((oid, mpath, meta)) = write_one(
            &store,
            &metadata,
            &resolver,
            algo,
            &req.context,
            &build_cmd,
            &outfile,
            &infiles,
            &[],
        )? {
            result.oids.insert(algo, oid);
            result
                .output_ids
                .insert(algo, outfile.id(algo).expect("hashed"));
            result.manifest_paths.push(mpath);
            result.metadata_paths.push(meta);
        }
    }

    if let Err(e) = embed_output(req, &dir, &out_path, &result) {
        result.embed_error = Some(e.to_string());
        return Ok(result);
    }
    let after = gitoids_of_file(&out_path, &req.algos)?;
    let before: Vec<ArtifactId> = req.algos.iter().map(|a| result.output_ids[a]).collect();
    note_embedded(&metadata, &req.context, &before, &after)?;
    for (a, id) in req.algos.iter().zip(after) {
        if result.output_ids[a] != id {
            result.embedded_output_ids.insert(*a, id);
        }
    }
    Ok(result)
}

fn embed_output(
    req: &GenerationRequest,
    dir: &Path,
    out_path: &Path,
    result: &GenerationResult,
) -> Result<()> {
    match req.embed {
        EmbedTarget::None => Ok(()),
        EmbedTarget::Elf => {
            let note = OmniborNote::from_ids(result.oids.values().copied());
            embed::embed_elf_file(out_path, &note, true)
        }
        EmbedTarget::Comment => {
            let style = CommentStyle::for_path(out_path).ok_or_else(|| {
                Error::Document(format!(
                    "no comment syntax known for {}",
                    out_path.display()
                ))
            })?;
            let mut text = std::fs::read(out_path).with_path(out_path)?;
            for oid in result.oids.values() {
                text = embed::embed_comment(&text, oid, style);
            }
            crate::fsutil::write_atomic(out_path, &text)
        }
        EmbedTarget::Sidecar => {
            let side = dir.join("sidecar");
            for (algo, oid) in &result.oids {
                embed::sidecar_write(&side, &result.output_ids[algo], oid)?;
            }
            Ok(())
        }
    }
}
