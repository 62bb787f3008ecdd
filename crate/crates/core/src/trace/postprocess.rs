//! Raw log to manifests, metadata and embedded identifiers.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use super::rawlog::{FileEntry, RawBuildRecord};
use crate::embed::{self, ElfKind, OmniborNote};
use crate::error::{Error, IoContext, Result};
use crate::generate::{note_embedded, write_one, BomResolver};
use crate::identifier::{gitoids_of_file, ArtifactId, HashAlgorithm};
use crate::manifest::ManifestStore;
use crate::metadata::MetadataStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbedMode {
    /// Executables and shared objects only.
    #[default]
    ExeSo,
    /// Every ELF output, relocatable objects included.
    All,
    None,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostProcessSummary {
    pub records: usize,
    pub manifests: BTreeMap<HashAlgorithm, usize>,
    pub metadata_files: usize,
    pub embedded: Vec<PathBuf>,
    /// Outputs whose bytes no longer match the log, so were left alone.
    pub stale: Vec<PathBuf>,
}

impl std::fmt::Display for PostProcessSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "records: {}", self.records)?;
        for (algo, n) in &self.manifests {
            writeln!(f, "manifests ({algo}): {n}")?;
        }
        writeln!(f, "metadata files: {}", self.metadata_files)?;
        writeln!(f, "embedded: {}", self.embedded.len())?;
        if !self.stale.is_empty() {
            writeln!(f, "stale outputs: {}", self.stale.len())?;
        }
        Ok(())
    }
}

/// Children resolve through outputs seen earlier in the log, then through
/// metadata left by earlier runs.
struct LogResolver<'a> {
    index: HashMap<ArtifactId, ArtifactId>,
    store: &'a ManifestStore,
    metadata: &'a MetadataStore,
}

impl BomResolver for LogResolver<'_> {
    fn bom_for(&self, child: &FileEntry, algo: HashAlgorithm) -> Result<Option<ArtifactId>> {
        let Some(id) = child.id(algo) else {
            return Ok(None);
        };
        if let Some(oid) = self.index.get(&id) {
            return Ok(Some(*oid));
        }
        Ok(self
            .metadata
            .find_by_output(&id)?
            .map(|m| m.bom)
            .filter(|oid| oid.algo() == algo && self.store.contains(oid)))
    }
}

pub fn post_process(
    records: &[RawBuildRecord],
    omnibor_dir: &Path,
    mode: EmbedMode,
) -> Result<PostProcessSummary> {
    let store = ManifestStore::new(omnibor_dir);
    let metadata = MetadataStore::new(omnibor_dir);
    let mut resolver = LogResolver {
        index: HashMap::new(),
        store: &store,
        metadata: &metadata,
    };
    let mut summary = PostProcessSummary::default();
    let partial = |summary: &PostProcessSummary, e: Error| Error::Partial {
        done: format!(
            "{} records, {} manifests, {} metadata files, {} embeddings",
            summary.records,
            summary.manifests.values().sum::<usize>(),
            summary.metadata_files,
            summary.embedded.len()
        ),
        source: Box::new(e),
    };

    // oids per record, in log order
    let mut oids: Vec<Vec<ArtifactId>> = Vec::with_capacity(records.len());
    for r in records {
        let context = r.context();
        let mut these = Vec::new();
        for algo in HashAlgorithm::ALL {
            let written = write_one(
                &store,
                &metadata,
                &resolver,
                algo,
                &context,
                &r.build_cmd,
                &r.outfile,
                &r.infiles,
                &r.dynlibs,
            )
            .map_err(|e| partial(&summary, e))?;
            if let Some((oid, _, _)) = written {
                resolver
                    .index
                    .insert(r.outfile.id(algo).expect("written implies id"), oid);
                *summary.manifests.entry(algo).or_default() += 1;
                summary.metadata_files += 1;
                these.push(oid);
            }
        }
        oids.push(these);
        summary.records += 1;
    }

    if mode == EmbedMode::None {
        return Ok(summary);
    }
    // the last record naming a path describes what is on disk now
    let mut last: BTreeMap<&Path, usize> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        last.insert(r.outfile.path.as_path(), i);
    }
    let mut order: Vec<usize> = last.into_values().collect();
    order.sort_unstable();
    for i in order {
        let r = &records[i];
        embed_record(r, &oids[i], mode, &metadata, &mut summary)
            .map_err(|e| partial(&summary, e))?;
    }
    Ok(summary)
}

fn embed_record(
    r: &RawBuildRecord,
    oids: &[ArtifactId],
    mode: EmbedMode,
    metadata: &MetadataStore,
    summary: &mut PostProcessSummary,
) -> Result<()> {
    let path = &r.outfile.path;
    let Ok(bytes) = std::fs::read(path) else {
        summary.stale.push(path.clone());
        return Ok(());
    };
    if !embed::elf::is_elf(&bytes) || oids.is_empty() {
        return Ok(());
    }
    let wanted = match embed::elf_kind(&bytes) {
        Ok(ElfKind::Executable | ElfKind::SharedObject) => true,
        Ok(_) => mode == EmbedMode::All,
        Err(_) => false,
    };
    if !wanted {
        return Ok(());
    }
    let algos: Vec<HashAlgorithm> = r.outfile.ids.iter().map(|i| i.algo()).collect();
    let now = algos
        .iter()
        .map(|a| crate::identifier::gitoid_of_bytes(&bytes, *a));
    if !now.eq(r.outfile.ids.iter().copied()) {
        summary.stale.push(path.clone());
        return Ok(());
    }
    let note = OmniborNote::from_ids(oids.iter().copied());
    let out = embed::embed_elf(&bytes, &note, true)?;
    crate::fsutil::write_atomic(path, &out)?;
    let after = gitoids_of_file(path, &algos)?;
    note_embedded(metadata, &r.context(), &r.outfile.ids, &after)?;
    summary.embedded.push(path.clone());
    Ok(())
}

/// Parse a raw log file and post-process it.
pub fn post_process_log(
    log: &Path,
    omnibor_dir: &Path,
    mode: EmbedMode,
) -> Result<PostProcessSummary> {
    let bytes = std::fs::read(log).with_path(log)?;
    let records = super::rawlog::parse_raw_log(&bytes)?;
    post_process(&records, omnibor_dir, mode)
}
