//! Ways of attaching an OmniBOR ID to a built artifact: an ELF note section,
//! a trailing source comment, or a sidecar file keyed by the artifact gitoid.

pub mod comment;
pub mod elf;
pub mod sidecar;

pub use comment::{embed_comment, extract_comments, CommentStyle};
pub use elf::{
    elf_kind, embed_elf, embed_elf_file, extract_elf, extract_elf_file, is_elf, ElfKind,
    OmniborNote,
};
pub use sidecar::{sidecar_lookup, sidecar_write};
