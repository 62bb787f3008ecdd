//! Generate, store and query OmniBOR Artifact Dependency Graphs.
//!
//! * [`identifier`] computes gitoids, the content-addressed ids everything
//!   else is keyed by.
//! * [`manifest`] holds Input Manifests and the on-disk manifest store.
//! * [`adg`] resolves a root manifest into the dependency graph.
//! * [`embed`] writes OIDs into ELF notes, source comments or sidecar files.
//! * [`trace`] wraps a build, records every tool invocation in a raw log and
//!   turns that log into manifests.
//! * [`generate`] does the same for one output when the caller already knows
//!   its inputs.
//! * [`vulnscan`], [`sbom`] and [`corpus`] consume the graph.

pub mod adg;
pub mod cli;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod generate;
pub mod identifier;
pub mod manifest;
pub mod metadata;
pub mod sbom;
pub mod trace;
pub mod vulnscan;

mod fsutil;

pub use adg::{build_adg, Adg, AdgNode};
pub use error::{Error, Result};
pub use generate::{generate, EmbedTarget, GenerationRequest, GenerationResult};
pub use identifier::{
    gitoid_of_bytes, gitoid_of_file, parse_uri, render_uri, ArtifactId, HashAlgorithm,
};
pub use manifest::{InputManifest, ManifestRecord, ManifestStore};
pub use metadata::{MetadataFile, MetadataStore};
