use std::io;
use std::path::PathBuf;

use crate::identifier::ArtifactId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("invalid identifier: {0}")]
    Identifier(String),

    #[error("manifest parse error at line {line}: {reason}")]
    ManifestParse { line: usize, reason: String },

    #[error("manifest invariant violated: {0}")]
    ManifestInvariant(String),

    #[error("store corruption: {path} already holds different content")]
    StoreCorruption { path: PathBuf },

    #[error("integrity error: {path} does not hash to {expected}")]
    Integrity { path: PathBuf, expected: ArtifactId },

    #[error("manifest {0} not found in store")]
    NotFound(ArtifactId),

    #[error("cycle among manifests: {}", .0.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(" -> "))]
    Cycle(Vec<ArtifactId>),

    #[error("ELF format error: {0}")]
    ElfFormat(String),

    #[error("section .note.omnibor already present (use replace mode)")]
    NoteConflict,

    #[error("raw log parse error at byte {offset}: {reason}")]
    RawLogParse { offset: usize, reason: String },

    #[error("build analysis failed: {0}")]
    Analysis(String),

    #[error("document error: {0}")]
    Document(String),

    #[error("archive error: {0}")]
    Archive(String),

    #[error("SBOM generation error: {0}")]
    Sbom(String),

    #[error("stopped after {done}: {source}")]
    Partial { done: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attach a path to a bare `io::Result`.
pub(crate) trait IoContext<T> {
    fn with_path(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn with_path(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|e| Error::io(path, e))
    }
}
