//! Non-embedding mode: `<dir>/<artifact gitoid hex>` holds the artifact's OID.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::identifier::{parse_uri, ArtifactId};

pub fn sidecar_path(dir: &Path, artifact: &ArtifactId) -> PathBuf {
    dir.join(artifact.hex())
}

pub fn sidecar_write(dir: &Path, artifact: &ArtifactId, oid: &ArtifactId) -> Result<PathBuf> {
    let path = sidecar_path(dir, artifact);
    write_atomic(&path, format!("{}\n", oid.uri()).as_bytes())?;
    Ok(path)
}

pub fn sidecar_lookup(dir: &Path, artifact: &ArtifactId) -> Result<Option<ArtifactId>> {
    let path = sidecar_path(dir, artifact);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    Ok(Some(parse_uri(text.trim_end_matches('\n'))?))
}
