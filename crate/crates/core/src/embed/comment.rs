use std::path::Path;

use crate::identifier::{parse_uri, ArtifactId};

pub const COMMENT_TAG: &str = "OmniBOR-gitoid:";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommentStyle {
    /// `# ...`
    Hash,
    /// `// ...`
    Slash,
    /// `/* ... */`
    Block,
}

impl CommentStyle {
    pub fn line(self, id: &ArtifactId) -> String {
        match self {
            CommentStyle::Hash => format!("# {COMMENT_TAG} {}", id.uri()),
            CommentStyle::Slash => format!("// {COMMENT_TAG} {}", id.uri()),
            CommentStyle::Block => format!("/* {COMMENT_TAG} {} */", id.uri()),
        }
    }

    /// Pick a style from a file extension; `None` for unknown types.
    pub fn for_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "c" | "h" | "i" => Some(CommentStyle::Block),
            "cc" | "cpp" | "cxx" | "hpp" | "hh" | "hxx" | "rs" | "go" | "java" | "js" | "ts" => {
                Some(CommentStyle::Slash)
            }
            "sh" | "py" | "pl" | "rb" | "mk" | "cmake" | "txt" | "s" => Some(CommentStyle::Hash),
            _ => None,
        }
    }
}

/// Append the id as a comment line. Embedding an id that is already present
/// returns the text unchanged.
pub fn embed_comment(text: &[u8], oid: &ArtifactId, style: CommentStyle) -> Vec<u8> {
    if extract_comments(text).contains(oid) {
        return text.to_vec();
    }
    let mut out = text.to_vec();
    if !out.is_empty() && !out.ends_with(b"\n") {
        out.push(b'\n');
    }
    out.extend_from_slice(style.line(oid).as_bytes());
    out.push(b'\n');
    out
}

/// Every id found in `OmniBOR-gitoid:` comments, in order of appearance.
pub fn extract_comments(text: &[u8]) -> Vec<ArtifactId> {
    let mut out = Vec::new();
    for line in text.split(|&b| b == b'\n') {
        let Ok(line) = std::str::from_utf8(line) else {
            continue;
        };
        let line = line.trim();
        let body = if let Some(rest) = line.strip_prefix("//") {
            rest
        } else if let Some(rest) = line.strip_prefix('#') {
            rest
        } else if let Some(rest) = line.strip_prefix("/*").and_then(|r| r.strip_suffix("*/")) {
            rest
        } else {
            continue;
        };
        let Some(uri) = body.trim().strip_prefix(COMMENT_TAG) else {
            continue;
        };
        if let Ok(id) = parse_uri(uri.trim()) {
            if !out.contains(&id) {
                out.push(id);
            }
        }
    }
    out
}
