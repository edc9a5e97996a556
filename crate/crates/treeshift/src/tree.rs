//! Finite regions of rooted directed trees.
//!
//! A [`TreeRegion`] materializes every vertex at distance at most `depth`
//! from the root of a (possibly infinite) tree described by a
//! [`TreeTemplate`]. Queries that would need vertices beyond the region
//! fail with `DepthExceeded` instead of silently truncating.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Dense vertex index within one region; 0 is always the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;

/// Finitely branching tree shapes. Generated templates describe infinite
/// trees by a child count per depth; `ExplicitFinite` is a literal parent
/// table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum TreeTemplate {
    #[serde(rename = "explicit")]
    ExplicitFinite {
        parents: Vec<Option<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    #[serde(rename = "path")]
    RootedPath,
    #[serde(rename = "kary")]
    FreeKAry { k: usize },
    #[serde(rename = "one_branch")]
    OneBranch { stem: usize, branches: usize },
    #[serde(rename = "table")]
    TableGenerated {
        #[serde(with = "crate::jsonmap")]
        by_depth: BTreeMap<usize, usize>,
        #[serde(default)]
        default: usize,
    },
}

impl TreeTemplate {
    fn validate(&self) -> Result<()> {
        match self {
            TreeTemplate::FreeKAry { k } if *k == 0 => {
                Err(Error::InvalidInput("kary template needs k >= 1".into()))
            }
            TreeTemplate::OneBranch { branches, .. } if *branches == 0 => {
                Err(Error::InvalidInput("one_branch template needs branches >= 1".into()))
            }
            TreeTemplate::ExplicitFinite { parents, labels } => {
                validate_parent_table(parents)?;
                if let Some(labels) = labels {
                    if labels.len() != parents.len() {
                        return Err(Error::InvalidInput(format!(
                            "label map has {} entries for {} vertices",
                            labels.len(),
                            parents.len()
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Child count at a given depth for generated templates.
    fn generated_child_count(&self, depth: usize) -> Option<usize> {
        match self {
            TreeTemplate::RootedPath => Some(1),
            TreeTemplate::FreeKAry { k } => Some(*k),
            TreeTemplate::OneBranch { stem, branches } => {
                Some(if depth == *stem { *branches } else { 1 })
            }
            TreeTemplate::TableGenerated { by_depth, default } => {
                Some(*by_depth.get(&depth).unwrap_or(default))
            }
            TreeTemplate::ExplicitFinite { .. } => None,
        }
    }

    /// True when every vertex of the underlying tree provably has a child.
    fn provably_leafless(&self) -> bool {
        match self {
            TreeTemplate::RootedPath | TreeTemplate::OneBranch { .. } => true,
            TreeTemplate::FreeKAry { k } => *k >= 1,
            TreeTemplate::TableGenerated { by_depth, default } => {
                *default >= 1 && by_depth.values().all(|&c| c >= 1)
            }
            TreeTemplate::ExplicitFinite { .. } => false,
        }
    }
}

fn validate_parent_table(parents: &[Option<usize>]) -> Result<()> {
    if parents.is_empty() {
        return Err(Error::InvalidInput("explicit template has no vertices".into()));
    }
    if parents[0].is_some() {
        return Err(Error::InvalidInput("vertex 0 of an explicit template must be the root".into()));
    }
    for (v, p) in parents.iter().enumerate().skip(1) {
        match p {
            None => {
                return Err(Error::InvalidInput(format!(
                    "explicit template has a second root at index {v}"
                )))
            }
            Some(p) if *p >= parents.len() => {
                return Err(Error::InvalidInput(format!(
                    "parent index {p} of vertex {v} is out of range"
                )))
            }
            _ => {}
        }
    }
    // Walk each vertex to the root; more steps than vertices means a cycle.
    for start in 1..parents.len() {
        let mut v = start;
        for _ in 0..parents.len() {
            match parents[v] {
                None => break,
                Some(p) => v = p,
            }
        }
        if parents[v].is_some() {
            return Err(Error::InvalidInput(format!(
                "explicit template has a cycle through vertex {start}"
            )));
        }
    }
    Ok(())
}

/// Leaf evidence within a materialized region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum LeafStatus {
    /// Every vertex of the underlying tree has a child.
    Leafless,
    /// A genuine leaf exists. The witness is a region vertex when the leaf
    /// was materialized; `None` when an explicit table ends beyond the
    /// region depth.
    HasLeaf(Option<VertexId>),
    /// The template may or may not grow leaves past the region.
    Inconclusive,
}

/// Immutable depth-bounded materialization of a rooted directed tree.
#[derive(Clone, Debug)]
pub struct TreeRegion {
    template: TreeTemplate,
    depth: usize,
    parent: Vec<Option<VertexId>>,
    children: Vec<Vec<VertexId>>,
    depth_of: Vec<usize>,
    frontier: Vec<bool>,
    labels: Option<Vec<String>>,
}

impl TreeRegion {
    pub fn materialize(template: TreeTemplate, depth: usize) -> Result<TreeRegion> {
        TreeRegion::materialize_capped(template, depth, DEFAULT_VERTEX_CAP)
    }

    pub fn materialize_capped(template: TreeTemplate, depth: usize, cap: usize) -> Result<TreeRegion> {
        template.validate()?;
        match &template {
            TreeTemplate::ExplicitFinite { parents, labels } => {
                let (parents, labels) = (parents.clone(), labels.clone());
                Self::materialize_explicit(template, parents, labels, depth, cap)
            }
            _ => Self::materialize_generated(template, depth, cap),
        }
    }

    fn materialize_generated(template: TreeTemplate, depth: usize, cap: usize) -> Result<TreeRegion> {
        let mut parent: Vec<Option<VertexId>> = vec![None];
        let mut children: Vec<Vec<VertexId>> = vec![Vec::new()];
        let mut depth_of: Vec<usize> = vec![0];
        let mut level: Vec<usize> = vec![0];
        for d in 0..depth {
            let count = template.generated_child_count(d).expect("generated template");
            let next_size = level.len().saturating_mul(count);
            let needed = parent.len().saturating_add(next_size);
            if needed > cap {
                return Err(Error::OversizeRegion { needed, cap });
            }
            let mut next = Vec::with_capacity(next_size);
            for &u in &level {
                for _ in 0..count {
                    let v = parent.len();
                    parent.push(Some(VertexId(u)));
                    children.push(Vec::new());
                    depth_of.push(d + 1);
                    children[u].push(VertexId(v));
                    next.push(v);
                }
            }
            level = next;
        }
        let mut frontier = vec![false; parent.len()];
        let beyond = template.generated_child_count(depth).expect("generated template");
        if beyond > 0 {
            for &u in &level {
                frontier[u] = true;
            }
        }
        Ok(TreeRegion { template, depth, parent, children, depth_of, frontier, labels: None })
    }

    fn materialize_explicit(
        template: TreeTemplate,
        parents: Vec<Option<usize>>,
        table_labels: Option<Vec<String>>,
        depth: usize,
        cap: usize,
    ) -> Result<TreeRegion> {
        if parents.len() > cap {
            return Err(Error::OversizeRegion { needed: parents.len(), cap });
        }
        let n = parents.len();
        let mut table_children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (v, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                table_children[*p].push(v);
            }
        }
        // BFS re-index so that region ids are dense and level-ordered.
        let mut order: Vec<usize> = Vec::with_capacity(n);
        let mut table_depth = vec![0usize; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            if table_depth[u] > depth {
                continue;
            }
            order.push(u);
            for &c in &table_children[u] {
                table_depth[c] = table_depth[u] + 1;
                if table_depth[c] <= depth {
                    queue.push_back(c);
                }
            }
        }
        let mut region_of = vec![usize::MAX; n];
        for (rid, &tid) in order.iter().enumerate() {
            region_of[tid] = rid;
        }
        let mut parent: Vec<Option<VertexId>> = Vec::with_capacity(order.len());
        let mut children: Vec<Vec<VertexId>> = vec![Vec::new(); order.len()];
        let mut depth_of = Vec::with_capacity(order.len());
        let mut frontier = vec![false; order.len()];
        for (rid, &tid) in order.iter().enumerate() {
            depth_of.push(table_depth[tid]);
            parent.push(parents[tid].map(|p| VertexId(region_of[p])));
            if table_depth[tid] == depth && !table_children[tid].is_empty() {
                frontier[rid] = true;
            } else {
                for &c in &table_children[tid] {
                    children[rid].push(VertexId(region_of[c]));
                }
            }
        }
        let labels = table_labels
            .map(|all| order.iter().map(|&tid| all[tid].clone()).collect::<Vec<String>>());
        Ok(TreeRegion { template, depth, parent, children, depth_of, frontier, labels })
    }

    pub fn template(&self) -> &TreeTemplate {
        &self.template
    }

    /// User label of a vertex, when the explicit template supplied one.
    pub fn label(&self, v: VertexId) -> Option<&str> {
        self.labels.as_ref().map(|l| l[v.0].as_str())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.parent.len()).map(VertexId)
    }

    /// Vertices other than the root.
    pub fn non_root_vertices(&self) -> impl Iterator<Item = VertexId> {
        (1..self.parent.len()).map(VertexId)
    }

    pub fn root(&self) -> VertexId {
        VertexId(0)
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v.0]
    }

    pub fn children(&self, u: VertexId) -> &[VertexId] {
        &self.children[u.0]
    }

    pub fn depth_of(&self, v: VertexId) -> usize {
        self.depth_of[v.0]
    }

    pub fn is_frontier(&self, v: VertexId) -> bool {
        self.frontier[v.0]
    }

    pub fn has_frontier(&self) -> bool {
        self.frontier.iter().any(|&f| f)
    }

    pub fn frontier_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.is_frontier(v))
    }

    /// A vertex whose childlessness is a fact of the underlying tree, not
    /// an artifact of the depth bound.
    pub fn is_genuine_leaf(&self, v: VertexId) -> bool {
        !self.frontier[v.0] && self.children[v.0].is_empty()
    }

    fn ensure_reach(&self, u: VertexId, extra: usize) -> Result<()> {
        let required = self.depth_of(u) + extra;
        if required > self.depth {
            Err(Error::DepthExceeded { required, available: self.depth })
        } else {
            Ok(())
        }
    }

    /// The set `Chi<n>(u)` of vertices exactly `n` generations below `u`.
    pub fn chi_n(&self, u: VertexId, n: usize) -> Result<Vec<VertexId>> {
        self.ensure_reach(u, n)?;
        let mut current = vec![u];
        for _ in 0..n {
            let mut next = Vec::new();
            for w in current {
                next.extend_from_slice(self.children(w));
            }
            current = next;
        }
        Ok(current)
    }

    /// Descendants of `u` within `max_depth` generations, `u` included.
    pub fn descendants(&self, u: VertexId, max_depth: usize) -> Result<Vec<VertexId>> {
        self.ensure_reach(u, max_depth)?;
        let mut all = Vec::new();
        let mut current = vec![u];
        for _ in 0..max_depth {
            all.extend_from_slice(&current);
            let mut next = Vec::new();
            for w in current {
                next.extend_from_slice(self.children(w));
            }
            current = next;
        }
        all.extend_from_slice(&current);
        Ok(all)
    }

    /// Walks `n` parents up from `v`; `None` if the root is passed.
    pub fn ancestor(&self, v: VertexId, n: usize) -> Option<VertexId> {
        let mut cur = v;
        for _ in 0..n {
            cur = self.parent(cur)?;
        }
        Some(cur)
    }

    pub fn leaf_status(&self) -> LeafStatus {
        for v in self.vertices() {
            if self.is_genuine_leaf(v) {
                return LeafStatus::HasLeaf(Some(v));
            }
        }
        if !self.has_frontier() {
            // A finite region with no frontier always ends in genuine
            // leaves, so this point is unreachable after the scan above.
            return LeafStatus::HasLeaf(None);
        }
        match &self.template {
            TreeTemplate::ExplicitFinite { .. } => LeafStatus::HasLeaf(None),
            t if t.provably_leafless() => LeafStatus::Leafless,
            _ => LeafStatus::Inconclusive,
        }
    }
}
