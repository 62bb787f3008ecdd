//! Content-based artifact identifiers (gitoids).
//!
//! A gitoid is the git blob object hash of an artifact's bytes: the digest of
//! `"blob " + decimal(len) + "\0" + content` under SHA-1 or SHA-256. It is the
//! key every other part of this crate uses to name an artifact.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha1::Sha1;
use sha2::{Digest, Sha256};

use crate::error::{Error, IoContext, Result};

pub const URI_PREFIX: &str = "gitoid:blob:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashAlgorithm {
    Sha1,
    Sha256,
}

impl HashAlgorithm {
    pub const ALL: [HashAlgorithm; 2] = [HashAlgorithm::Sha1, HashAlgorithm::Sha256];

    pub const fn digest_len(self) -> usize {
        match self {
            HashAlgorithm::Sha1 => 20,
            HashAlgorithm::Sha256 => 32,
        }
    }

    pub const fn hex_len(self) -> usize {
        self.digest_len() * 2
    }

    pub const fn name(self) -> &'static str {
        match self {
            HashAlgorithm::Sha1 => "sha1",
            HashAlgorithm::Sha256 => "sha256",
        }
    }

    /// The algorithm whose hex rendering has `len` characters, if any.
    pub fn from_hex_len(len: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.hex_len() == len)
    }
}

impl fmt::Display for HashAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HashAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sha1" => Ok(HashAlgorithm::Sha1),
            "sha256" => Ok(HashAlgorithm::Sha256),
            other => Err(Error::Identifier(format!(
                "unknown hash algorithm `{other}`"
            ))),
        }
    }
}

/// Algorithm-tagged digest of an artifact. Ordering is by algorithm, then by
/// digest bytes, which for equal algorithms is the same as hex ordering.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArtifactId {
    algo: HashAlgorithm,
    digest: [u8; 32],
}

impl ArtifactId {
    pub fn from_digest(algo: HashAlgorithm, digest: &[u8]) -> Result<Self> {
        if digest.len() != algo.digest_len() {
            return Err(Error::Identifier(format!(
                "{algo} digest must be {} bytes, got {}",
                algo.digest_len(),
                digest.len()
            )));
        }
        let mut buf = [0u8; 32];
        buf[..digest.len()].copy_from_slice(digest);
        Ok(ArtifactId { algo, digest: buf })
    }

    /// Parse bare hex for a known algorithm.
    pub fn from_hex(algo: HashAlgorithm, hex_str: &str) -> Result<Self> {
        if hex_str.len() != algo.hex_len() {
            return Err(Error::Identifier(format!(
                "hex length {} does not match {algo} (expected {})",
                hex_str.len(),
                algo.hex_len()
            )));
        }
        if let Some(bad) = hex_str.chars().find(|c| !c.is_ascii_hexdigit()) {
            return Err(Error::Identifier(format!(
                "non-hex character `{bad}` in `{hex_str}`"
            )));
        }
        let bytes = hex::decode(hex_str).map_err(|e| Error::Identifier(e.to_string()))?;
        Self::from_digest(algo, &bytes)
    }

    /// Parse bare hex, inferring the algorithm from its length.
    pub fn from_hex_any(hex_str: &str) -> Result<Self> {
        let algo = HashAlgorithm::from_hex_len(hex_str.len()).ok_or_else(|| {
            Error::Identifier(format!(
                "hex length {} matches no supported algorithm",
                hex_str.len()
            ))
        })?;
        Self::from_hex(algo, hex_str)
    }

    /// Parse either the URI form or bare hex (algorithm inferred from length).
    pub fn parse_any(text: &str) -> Result<Self> {
        if text.starts_with("gitoid:") {
            parse_uri(text)
        } else {
            Self::from_hex_any(text)
        }
    }

    pub fn algo(&self) -> HashAlgorithm {
        self.algo
    }

    pub fn digest(&self) -> &[u8] {
        &self.digest[..self.algo.digest_len()]
    }

    pub fn hex(&self) -> String {
        hex::encode(self.digest())
    }

    pub fn uri(&self) -> String {
        render_uri(self)
    }
}

impl fmt::Display for ArtifactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

impl fmt::Debug for ArtifactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.algo, self.hex())
    }
}

impl FromStr for ArtifactId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ArtifactId::parse_any(s)
    }
}

impl Serialize for ArtifactId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.uri())
    }
}

impl<'de> Deserialize<'de> for ArtifactId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ArtifactId::parse_any(&s).map_err(serde::de::Error::custom)
    }
}

enum Hasher {
    Sha1(Sha1),
    Sha256(Sha256),
}

impl Hasher {
    fn new(algo: HashAlgorithm, len: u64) -> Self {
        let header = format!("blob {len}\0");
        match algo {
            HashAlgorithm::Sha1 => {
                let mut h = Sha1::new();
                h.update(header.as_bytes());
                Hasher::Sha1(h)
            }
            HashAlgorithm::Sha256 => {
                let mut h = Sha256::new();
                h.update(header.as_bytes());
                Hasher::Sha256(h)
            }
        }
    }

    fn update(&mut self, data: &[u8]) {
        match self {
            Hasher::Sha1(h) => h.update(data),
            Hasher::Sha256(h) => h.update(data),
        }
    }

    fn finish(self) -> ArtifactId {
        let (algo, digest) = match self {
            Hasher::Sha1(h) => (HashAlgorithm::Sha1, h.finalize().to_vec()),
            Hasher::Sha256(h) => (HashAlgorithm::Sha256, h.finalize().to_vec()),
        };
        ArtifactId::from_digest(algo, &digest).expect("digest length matches algorithm")
    }
}

pub fn gitoid_of_bytes(content: &[u8], algo: HashAlgorithm) -> ArtifactId {
    let mut h = Hasher::new(algo, content.len() as u64);
    h.update(content);
    h.finish()
}

/// Stream a file through the hasher. The blob header needs the length up
/// front, so it is taken from the file metadata; a file that changes size
/// while being read is reported as an error rather than hashed wrongly.
pub fn gitoid_of_file(path: impl AsRef<Path>, algo: HashAlgorithm) -> Result<ArtifactId> {
    Ok(gitoids_of_file(path, &[algo])?.remove(0))
}

/// One streaming pass over a file producing an id for every requested algorithm.
pub fn gitoids_of_file(path: impl AsRef<Path>, algos: &[HashAlgorithm]) -> Result<Vec<ArtifactId>> {
    let path = path.as_ref();
    let file = File::open(path).with_path(path)?;
    let meta = file.metadata().with_path(path)?;
    if !meta.is_file() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "not a regular file"),
        ));
    }
    let len = meta.len();
    let mut hashers: Vec<Hasher> = algos.iter().map(|&a| Hasher::new(a, len)).collect();
    let mut reader = BufReader::with_capacity(64 * 1024, file);
    let mut buf = vec![0u8; 64 * 1024];
    let mut seen = 0u64;
    loop {
        let n = reader.read(&mut buf).with_path(path)?;
        if n == 0 {
            break;
        }
        seen += n as u64;
        for h in &mut hashers {
            h.update(&buf[..n]);
        }
    }
    if seen != len {
        return Err(Error::io(
            path,
            std::io::Error::other(format!("file changed size while hashing ({len} -> {seen})")),
        ));
    }
    Ok(hashers.into_iter().map(Hasher::finish).collect())
}

pub fn render_uri(id: &ArtifactId) -> String {
    format!("{URI_PREFIX}{}:{}", id.algo, id.hex())
}

pub fn parse_uri(text: &str) -> Result<ArtifactId> {
    let rest = text
        .strip_prefix(URI_PREFIX)
        .ok_or_else(|| Error::Identifier(format!("missing `{URI_PREFIX}` prefix in `{text}`")))?;
    let (algo, hex_str) = rest
        .split_once(':')
        .ok_or_else(|| Error::Identifier(format!("missing algorithm separator in `{text}`")))?;
    let algo: HashAlgorithm = algo.parse()?;
    ArtifactId::from_hex(algo, hex_str)
}
