//! Artifact Dependency Graph assembled from a manifest store.
//!
//! The graph is a DAG keyed by artifact gitoid. The root node is keyed by the
//! root manifest's OID, since that is the only handle a caller starts from.
//! Records whose `bom` link is missing, or whose manifest is not in the store,
//! become leaves.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::identifier::ArtifactId;
use crate::manifest::{InputManifest, ManifestStore};

/// Anything that resolves a manifest OID to its manifest.
pub trait ManifestSource {
    fn manifest(&self, oid: &ArtifactId) -> Result<Option<InputManifest>>;
}

impl ManifestSource for ManifestStore {
    fn manifest(&self, oid: &ArtifactId) -> Result<Option<InputManifest>> {
        self.get(oid)
    }
}

/// Unchecked in-memory source; keys are trusted to be the manifests' OIDs.
impl ManifestSource for HashMap<ArtifactId, InputManifest> {
    fn manifest(&self, oid: &ArtifactId) -> Result<Option<InputManifest>> {
        Ok(self.get(oid).cloned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdgNode {
    pub artifact_id: ArtifactId,
    pub manifest_oid: Option<ArtifactId>,
    /// Child artifact ids in manifest (sorted) order.
    pub children: Vec<ArtifactId>,
}

impl AdgNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adg {
    pub root_oid: ArtifactId,
    pub nodes: BTreeMap<ArtifactId, AdgNode>,
}

pub fn build_adg(root_oid: ArtifactId, store: &impl ManifestSource) -> Result<Adg> {
    Adg::build(root_oid, store)
}

impl Adg {
    pub fn build(root_oid: ArtifactId, store: &impl ManifestSource) -> Result<Adg> {
        if store.manifest(&root_oid)?.is_none() {
            return Err(Error::NotFound(root_oid));
        }
        let mut nodes = BTreeMap::new();
        let mut on_stack = Vec::new();
        visit(root_oid, Some(root_oid), store, &mut nodes, &mut on_stack)?;
        Ok(Adg { root_oid, nodes })
    }

    pub fn root(&self) -> &AdgNode {
        &self.nodes[&self.root_oid]
    }

    pub fn node(&self, id: &ArtifactId) -> Option<&AdgNode> {
        self.nodes.get(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has(&self, id: &ArtifactId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn leaves(&self) -> BTreeSet<ArtifactId> {
        self.nodes
            .values()
            .filter(|n| n.is_leaf())
            .map(|n| n.artifact_id)
            .collect()
    }

    /// Nodes that list `id` as a child, sorted.
    pub fn parents_of(&self, id: &ArtifactId) -> Vec<ArtifactId> {
        self.nodes
            .values()
            .filter(|n| n.children.contains(id))
            .map(|n| n.artifact_id)
            .collect()
    }

    /// Path from the root to `id`; the lexicographically smallest one when
    /// several exist.
    pub fn contains(&self, id: &ArtifactId) -> Option<Vec<ArtifactId>> {
        if !self.nodes.contains_key(id) {
            return None;
        }
        let mut dead_ends = HashSet::new();
        let mut path = vec![self.root_oid];
        if self.search(self.root_oid, id, &mut path, &mut dead_ends) {
            Some(path)
        } else {
            None
        }
    }

    fn search(
        &self,
        at: ArtifactId,
        target: &ArtifactId,
        path: &mut Vec<ArtifactId>,
        dead_ends: &mut HashSet<ArtifactId>,
    ) -> bool {
        if at == *target {
            return true;
        }
        let Some(node) = self.nodes.get(&at) else {
            return false;
        };
        for child in &node.children {
            if dead_ends.contains(child) {
                continue;
            }
            path.push(*child);
            if self.search(*child, target, path, dead_ends) {
                return true;
            }
            path.pop();
            dead_ends.insert(*child);
        }
        false
    }

    /// `(added, removed)` going from `self` to `other`, each sorted.
    pub fn diff(&self, other: &Adg) -> (Vec<ArtifactId>, Vec<ArtifactId>) {
        let added = other
            .nodes
            .keys()
            .filter(|k| !self.nodes.contains_key(k))
            .copied()
            .collect();
        let removed = self
            .nodes
            .keys()
            .filter(|k| !other.nodes.contains_key(k))
            .copied()
            .collect();
        (added, removed)
    }

    /// Sorted `parent-hex -> child-hex` lines, one per edge.
    pub fn export(&self) -> String {
        let mut lines: Vec<String> = self
            .nodes
            .values()
            .flat_map(|n| {
                n.children
                    .iter()
                    .map(move |c| format!("{} -> {}", n.artifact_id.hex(), c.hex()))
            })
            .collect();
        lines.sort();
        lines.dedup();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}

pub fn leaves(g: &Adg) -> BTreeSet<ArtifactId> {
    g.leaves()
}

pub fn contains(g: &Adg, id: &ArtifactId) -> Option<Vec<ArtifactId>> {
    g.contains(id)
}

pub fn diff(a: &Adg, b: &Adg) -> (Vec<ArtifactId>, Vec<ArtifactId>) {
    a.diff(b)
}

fn visit(
    artifact: ArtifactId,
    manifest_oid: Option<ArtifactId>,
    store: &impl ManifestSource,
    nodes: &mut BTreeMap<ArtifactId, AdgNode>,
    on_stack: &mut Vec<ArtifactId>,
) -> Result<()> {
    let manifest = match manifest_oid {
        Some(oid) => {
            if let Some(pos) = on_stack.iter().position(|m| *m == oid) {
                let mut cycle = on_stack[pos..].to_vec();
                cycle.push(oid);
                return Err(Error::Cycle(cycle));
            }
            store.manifest(&oid)?.map(|m| (oid, m))
        }
        None => None,
    };
    if nodes.contains_key(&artifact) {
        return Ok(());
    }
    let Some((oid, manifest)) = manifest else {
        nodes.insert(
            artifact,
            AdgNode {
                artifact_id: artifact,
                manifest_oid: None,
                children: Vec::new(),
            },
        );
        return Ok(());
    };
    on_stack.push(oid);
    for record in &manifest.records {
        visit(record.child_id, record.bom_id, store, nodes, on_stack)?;
    }
    on_stack.pop();
    nodes.insert(
        artifact,
        AdgNode {
            artifact_id: artifact,
            manifest_oid: Some(oid),
            children: manifest.children().collect(),
        },
    );
    Ok(())
}
