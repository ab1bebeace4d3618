//! Constraint graphs: degree-labeled DAGs over catalog elements.
//!
//! Edges point from the less significant element to the more significant
//! one. A degree-0 edge `rep -> member` places `member` in the equivalency
//! set represented by `rep`; every equivalency set is a star with exactly
//! one representative. Degree-1 and degree-2 edges record "greater than" and
//! "much greater than" judgments and are interpreted at the representative
//! level: an edge touching a member constrains the member's whole set.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Version written into every graph file.
pub const GRAPH_FORMAT_VERSION: u32 = 1;

/// Identifier of a scoreable element, unique within its catalog.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(String);

impl ElementId {
    pub fn new(id: impl Into<String>) -> Result<Self, GraphError> {
        let id = id.into();
        if id.is_empty() {
            return Err(GraphError::EmptyElementId);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ElementId {
    /// Panics on an empty string; use [`ElementId::new`] for untrusted input.
    fn from(s: &str) -> Self {
        Self::new(s).expect("element id must be non-empty")
    }
}

/// Strength of a recorded relationship.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Degree {
    Equal,
    Greater,
    MuchGreater,
}

impl Degree {
    pub fn value(self) -> u8 {
        match self {
            Degree::Equal => 0,
            Degree::Greater => 1,
            Degree::MuchGreater => 2,
        }
    }

    pub fn from_value(value: u8) -> Option<Self> {
        match value {
            0 => Some(Degree::Equal),
            1 => Some(Degree::Greater),
            2 => Some(Degree::MuchGreater),
            _ => None,
        }
    }

    pub fn is_strict(self) -> bool {
        self != Degree::Equal
    }
}

impl Serialize for Degree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.value())
    }
}

impl<'de> Deserialize<'de> for Degree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        Degree::from_value(v)
            .ok_or_else(|| serde::de::Error::custom(format!("degree must be 0, 1 or 2, got {v}")))
    }
}

/// A directed, degree-labeled edge. For strict degrees `to` is the more
/// significant end.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: ElementId,
    pub to: ElementId,
    pub degree: Degree,
}

impl Edge {
    pub fn new(from: impl Into<ElementId>, to: impl Into<ElementId>, degree: Degree) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            degree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalencySet {
    pub representative: ElementId,
    /// Sorted; includes the representative.
    pub members: Vec<ElementId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    Less,
    Equal,
    Greater,
    Unordered,
}

impl RelationKind {
    pub fn reversed(self) -> Self {
        match self {
            RelationKind::Less => RelationKind::Greater,
            RelationKind::Greater => RelationKind::Less,
            other => other,
        }
    }
}

/// Relationship of `x` to `y` as answered by [`ConstraintGraph::relation_of`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Relation {
    pub kind: RelationKind,
    /// `MuchGreater` when some path between the two sets carries a degree-2
    /// edge, `Greater` for other strict relations, `Equal` for tied elements.
    pub degree_hint: Option<Degree>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("element id must not be empty")]
    EmptyElementId,
    #[error("element `{0}` is not part of this graph (catalog mismatch)")]
    UnknownElement(ElementId),
    #[error("edge from `{0}` to itself")]
    SelfLoop(ElementId),
    #[error("duplicate edge `{from}` -> `{to}`")]
    DuplicateEdge { from: ElementId, to: ElementId },
    #[error("element `{0}` has more than one degree-0 parent")]
    MultipleRepresentatives(ElementId),
    #[error("degree-0 edge `{from}` -> `{to}` does not start at a representative")]
    NotStar { from: ElementId, to: ElementId },
    #[error("strict edge `{from}` -> `{to}` lies inside one equivalency set")]
    EdgeWithinSet { from: ElementId, to: ElementId },
    #[error("strict edges form a cycle through `{0}`")]
    Cycle(ElementId),
    #[error("unsupported graph format version {0}")]
    FormatVersion(u32),
    #[error("malformed graph file: {0}")]
    Malformed(String),
}

/// Maximum-length path over representatives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LongestPath {
    pub path: Vec<ElementId>,
    pub totally_ordered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub(crate) fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub(crate) fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub(crate) fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }
}

/// Query structures derived from the edge list. Indices are positions in
/// the sorted node list.
#[derive(Debug, Clone)]
pub(crate) struct Index {
    pub(crate) ids: Vec<ElementId>,
    pos: HashMap<ElementId, usize>,
    pub(crate) rep_of: Vec<usize>,
    /// Representative indices in sorted id order.
    pub(crate) reps: Vec<usize>,
    /// Lifted strict edges between representatives, strongest degree kept.
    pub(crate) succ: Vec<Vec<(usize, Degree)>>,
    pub(crate) pred: Vec<Vec<(usize, Degree)>>,
    /// Deterministic topological order of representatives.
    pub(crate) topo: Vec<usize>,
    reach: Vec<BitSet>,
    reach_much: Vec<BitSet>,
}

impl Index {
    fn build(nodes: &BTreeSet<ElementId>, edges: &[Edge]) -> Result<Self, GraphError> {
        let ids: Vec<ElementId> = nodes.iter().cloned().collect();
        let pos: HashMap<ElementId, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let n = ids.len();
        let lookup = |id: &ElementId| {
            pos.get(id)
                .copied()
                .ok_or_else(|| GraphError::UnknownElement(id.clone()))
        };

        let mut parent0: Vec<Option<usize>> = vec![None; n];
        let mut seen = BTreeSet::new();
        for e in edges {
            let (f, t) = (lookup(&e.from)?, lookup(&e.to)?);
            if f == t {
                return Err(GraphError::SelfLoop(e.from.clone()));
            }
            if !seen.insert((f, t)) {
                return Err(GraphError::DuplicateEdge {
                    from: e.from.clone(),
                    to: e.to.clone(),
                });
            }
            if e.degree == Degree::Equal && parent0[t].replace(f).is_some() {
                return Err(GraphError::MultipleRepresentatives(e.to.clone()));
            }
        }
        let mut rep_of: Vec<usize> = (0..n).collect();
        for (t, p) in parent0.iter().enumerate() {
            if let Some(p) = *p {
                if parent0[p].is_some() {
                    return Err(GraphError::NotStar {
                        from: ids[p].clone(),
                        to: ids[t].clone(),
                    });
                }
                rep_of[t] = p;
            }
        }
        let reps: Vec<usize> = (0..n).filter(|&i| rep_of[i] == i).collect();

        let mut lifted: BTreeMap<(usize, usize), Degree> = BTreeMap::new();
        for e in edges.iter().filter(|e| e.degree.is_strict()) {
            let (f, t) = (rep_of[pos[&e.from]], rep_of[pos[&e.to]]);
            if f == t {
                return Err(GraphError::EdgeWithinSet {
                    from: e.from.clone(),
                    to: e.to.clone(),
                });
            }
            let slot = lifted.entry((f, t)).or_insert(e.degree);
            *slot = (*slot).max(e.degree);
        }
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for (&(f, t), &d) in &lifted {
            succ[f].push((t, d));
            pred[t].push((f, d));
        }
        for p in &mut pred {
            p.sort();
        }

        // Kahn's algorithm; the ready set is ordered by index, hence by id.
        let mut indeg: Vec<usize> = (0..n).map(|i| pred[i].len()).collect();
        let mut ready: BTreeSet<usize> = reps.iter().copied().filter(|&r| indeg[r] == 0).collect();
        let mut topo = Vec::with_capacity(reps.len());
        while let Some(u) = ready.pop_first() {
            topo.push(u);
            for &(v, _) in &succ[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.insert(v);
                }
            }
        }
        if topo.len() != reps.len() {
            let stuck = reps.iter().find(|&&r| indeg[r] > 0).copied().unwrap_or(0);
            return Err(GraphError::Cycle(ids[stuck].clone()));
        }

        let mut reach = vec![BitSet::new(n); n];
        let mut reach_much = vec![BitSet::new(n); n];
        for &u in topo.iter().rev() {
            let mut r = BitSet::new(n);
            let mut rm = BitSet::new(n);
            for &(v, d) in &succ[u] {
                r.insert(v);
                r.union_with(&reach[v]);
                if d == Degree::MuchGreater {
                    rm.insert(v);
                    rm.union_with(&reach[v]);
                } else {
                    rm.union_with(&reach_much[v]);
                }
            }
            reach[u] = r;
            reach_much[u] = rm;
        }

        Ok(Self {
            ids,
            pos,
            rep_of,
            reps,
            succ,
            pred,
            topo,
            reach,
            reach_much,
        })
    }

    pub(crate) fn position(&self, id: &ElementId) -> Result<usize, GraphError> {
        self.pos
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownElement(id.clone()))
    }

    /// Strict reachability between representatives.
    pub(crate) fn reaches(&self, from_rep: usize, to_rep: usize) -> bool {
        self.reach[from_rep].contains(to_rep)
    }

    /// Longest strict-edge path length from `source` to every representative
    /// it reaches (`None` when unreachable).
    pub(crate) fn longest_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.ids.len()];
        dist[source] = Some(0);
        for &u in &self.topo {
            if let Some(du) = dist[u] {
                for &(v, _) in &self.succ[u] {
                    if dist[v].is_none_or(|dv| dv < du + 1) {
                        dist[v] = Some(du + 1);
                    }
                }
            }
        }
        dist
    }

    /// Longest strict-edge path length from every representative to `sink`.
    pub(crate) fn longest_to(&self, sink: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.ids.len()];
        dist[sink] = Some(0);
        for &u in self.topo.iter().rev() {
            if let Some(du) = dist[u] {
                for &(v, _) in &self.pred[u] {
                    if dist[v].is_none_or(|dv| dv < du + 1) {
                        dist[v] = Some(du + 1);
                    }
                }
            }
        }
        dist
    }
}

/// A validated constraint graph. Immutable once built.
#[derive(Debug, Clone)]
pub struct ConstraintGraph {
    catalog_ref: String,
    nodes: BTreeSet<ElementId>,
    edges: Vec<Edge>,
    provenance: String,
    index: Index,
}

impl PartialEq for ConstraintGraph {
    fn eq(&self, other: &Self) -> bool {
        self.catalog_ref == other.catalog_ref
            && self.nodes == other.nodes
            && self.edges == other.edges
            && self.provenance == other.provenance
    }
}

impl Eq for ConstraintGraph {}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct GraphFile {
    format_version: u32,
    catalog_ref: String,
    nodes: Vec<ElementId>,
    edges: Vec<Edge>,
    provenance: String,
}

impl ConstraintGraph {
    /// Validates and indexes a graph. Edges are stored in canonical order
    /// (by `from`, then `to`).
    pub fn new(
        catalog_ref: impl Into<String>,
        nodes: impl IntoIterator<Item = ElementId>,
        mut edges: Vec<Edge>,
        provenance: impl Into<String>,
    ) -> Result<Self, GraphError> {
        let nodes: BTreeSet<ElementId> = nodes.into_iter().collect();
        edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
        let index = Index::build(&nodes, &edges)?;
        Ok(Self {
            catalog_ref: catalog_ref.into(),
            nodes,
            edges,
            provenance: provenance.into(),
            index,
        })
    }

    /// Returns a copy with one more edge; rejected if it breaks any
    /// invariant, including closing a strict cycle.
    pub fn with_edge(&self, edge: Edge) -> Result<Self, GraphError> {
        let mut edges = self.edges.clone();
        edges.push(edge);
        Self::new(
            self.catalog_ref.clone(),
            self.nodes.iter().cloned(),
            edges,
            self.provenance.clone(),
        )
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn catalog_ref(&self) -> &str {
        &self.catalog_ref
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &ElementId> {
        self.nodes.iter()
    }

    pub fn node_set(&self) -> &BTreeSet<ElementId> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &ElementId) -> bool {
        self.nodes.contains(id)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub(crate) fn index(&self) -> &Index {
        &self.index
    }

    pub fn representative(&self, id: &ElementId) -> Result<&ElementId, GraphError> {
        let i = self.index.position(id)?;
        Ok(&self.index.ids[self.index.rep_of[i]])
    }

    /// Representatives in id order.
    pub fn representatives(&self) -> Vec<&ElementId> {
        self.index.reps.iter().map(|&r| &self.index.ids[r]).collect()
    }

    /// Representatives in a deterministic topological order (least
    /// significant first, ties broken by id).
    pub fn topological_representatives(&self) -> Vec<&ElementId> {
        self.index.topo.iter().map(|&r| &self.index.ids[r]).collect()
    }

    pub fn equivalency_sets(&self) -> Vec<EquivalencySet> {
        let mut members: BTreeMap<usize, Vec<ElementId>> = BTreeMap::new();
        for (i, &r) in self.index.rep_of.iter().enumerate() {
            members.entry(r).or_default().push(self.index.ids[i].clone());
        }
        members
            .into_iter()
            .map(|(r, members)| EquivalencySet {
                representative: self.index.ids[r].clone(),
                members,
            })
            .collect()
    }

    /// Members of the set `rep` belongs to (sorted, including the representative).
    pub fn members_of(&self, id: &ElementId) -> Result<Vec<ElementId>, GraphError> {
        let r = self.index.rep_of[self.index.position(id)?];
        Ok(self
            .index
            .rep_of
            .iter()
            .enumerate()
            .filter(|&(_, &ri)| ri == r)
            .map(|(i, _)| self.index.ids[i].clone())
            .collect())
    }

    /// Strict edges lifted onto representatives, strongest degree kept for
    /// parallel edges, in canonical order.
    pub fn representative_edges(&self) -> Vec<Edge> {
        let ix = &self.index;
        let mut out: Vec<Edge> = ix
            .reps
            .iter()
            .flat_map(|&u| {
                ix.succ[u]
                    .iter()
                    .map(move |&(v, d)| Edge::new(ix.ids[u].clone(), ix.ids[v].clone(), d))
            })
            .collect();
        out.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
        out
    }

    /// Relationship of `x` to `y`: `Greater` means `x` is more significant.
    pub fn relation_of(&self, x: &ElementId, y: &ElementId) -> Result<Relation, GraphError> {
        let ix = &self.index;
        let rx = ix.rep_of[ix.position(x)?];
        let ry = ix.rep_of[ix.position(y)?];
        if rx == ry {
            return Ok(Relation {
                kind: RelationKind::Equal,
                degree_hint: Some(Degree::Equal),
            });
        }
        let hint = |from: usize, to: usize| {
            if ix.reach_much[from].contains(to) {
                Degree::MuchGreater
            } else {
                Degree::Greater
            }
        };
        Ok(if ix.reaches(ry, rx) {
            Relation {
                kind: RelationKind::Greater,
                degree_hint: Some(hint(ry, rx)),
            }
        } else if ix.reaches(rx, ry) {
            Relation {
                kind: RelationKind::Less,
                degree_hint: Some(hint(rx, ry)),
            }
        } else {
            Relation {
                kind: RelationKind::Unordered,
                degree_hint: None,
            }
        })
    }

    /// Whether every pair of representatives is ordered.
    pub fn is_totally_ordered(&self) -> bool {
        self.longest_representative_path().totally_ordered
    }

    /// A maximum-length path over representatives. Ties are broken by
    /// choosing the lexicographically smallest id at each step.
    pub fn longest_representative_path(&self) -> LongestPath {
        let ix = &self.index;
        if ix.reps.is_empty() {
            return LongestPath {
                path: Vec::new(),
                totally_ordered: true,
            };
        }
        // remaining[u]: longest number of edges from u to any sink.
        let mut remaining = vec![0usize; ix.ids.len()];
        for &u in ix.topo.iter().rev() {
            remaining[u] = ix.succ[u]
                .iter()
                .map(|&(v, _)| remaining[v] + 1)
                .max()
                .unwrap_or(0);
        }
        let best = ix.reps.iter().map(|&r| remaining[r]).max().unwrap_or(0);
        // reps are in id order, so `find` picks the smallest id on ties.
        let mut cur = *ix.reps.iter().find(|&&r| remaining[r] == best).unwrap();
        let mut path = vec![ix.ids[cur].clone()];
        while remaining[cur] > 0 {
            cur = ix.succ[cur]
                .iter()
                .map(|&(v, _)| v)
                .filter(|&v| remaining[v] + 1 == remaining[cur])
                .min()
                .unwrap();
            path.push(ix.ids[cur].clone());
        }
        let totally_ordered = path.len() == ix.reps.len();
        LongestPath {
            path,
            totally_ordered,
        }
    }

    /// Drops strict edges whose separation is already implied by another
    /// path, keeping every relation and every guaranteed minimum separation.
    ///
    /// Strict edges are first lifted onto representatives. A degree-1 edge
    /// `u -> v` goes if another strict path `u -> v` exists; a degree-2 edge
    /// goes only if such a path carries at least one degree-2 edge, since two
    /// degree-1 hops need not add up to one degree-2 separation.
    pub fn reduce_redundant_edges(&self) -> ConstraintGraph {
        let ix = &self.index;
        let mut kept: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| e.degree == Degree::Equal)
            .cloned()
            .collect();
        for &u in &ix.reps {
            for &(v, d) in &ix.succ[u] {
                let redundant = ix.succ[u].iter().any(|&(w, dw)| {
                    if w == v {
                        return false;
                    }
                    match d {
                        Degree::MuchGreater => {
                            ix.reaches(w, v)
                                && (dw == Degree::MuchGreater || ix.reach_much[w].contains(v))
                        }
                        _ => ix.reaches(w, v),
                    }
                });
                if !redundant {
                    kept.push(Edge::new(ix.ids[u].clone(), ix.ids[v].clone(), d));
                }
            }
        }
        ConstraintGraph::new(
            self.catalog_ref.clone(),
            self.nodes.iter().cloned(),
            kept,
            self.provenance.clone(),
        )
        .expect("reduction of a valid graph stays valid")
    }

    /// Canonical JSON text (pretty-printed, trailing newline).
    pub fn to_json(&self) -> String {
        let file = GraphFile {
            format_version: GRAPH_FORMAT_VERSION,
            catalog_ref: self.catalog_ref.clone(),
            nodes: self.nodes.iter().cloned().collect(),
            edges: self.edges.clone(),
            provenance: self.provenance.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("graph serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
        if file.format_version != GRAPH_FORMAT_VERSION {
            return Err(GraphError::FormatVersion(file.format_version));
        }
        for id in &file.nodes {
            if id.as_str().is_empty() {
                return Err(GraphError::EmptyElementId);
            }
        }
        Self::new(file.catalog_ref, file.nodes, file.edges, file.provenance)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}
