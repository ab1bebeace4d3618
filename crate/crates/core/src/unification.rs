//! Merges constraint graphs over one catalog into a single unified graph.
//!
//! Every input graph casts one vote per element pair (less, equal or
//! greater). Opposing votes cancel pairwise into equal votes, pairs are
//! applied strongest-first to an empty graph, and pairs that are tied or
//! that contradict earlier applications are reported and skipped.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BitSet, ConstraintGraph, Degree, Edge, ElementId, GraphError, RelationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Pending,
    Less,
    Equal,
    Greater,
    Disputed,
    Contradictory,
}

/// Votes for one canonical pair (`x < y` by id). `less` counts graphs in
/// which `x` is less significant than `y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VoteTally {
    pub x: ElementId,
    pub y: ElementId,
    pub less: u32,
    pub equal: u32,
    pub greater: u32,
    pub priority: u32,
    pub outcome: Outcome,
}

impl VoteTally {
    pub fn votes(&self) -> u32 {
        self.less + self.equal + self.greater
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UnificationReport {
    pub disputed: usize,
    pub contradictory: usize,
    pub applied: usize,
    pub pairs: Vec<VoteTally>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnificationError {
    #[error("no graphs to unify")]
    NoGraphs,
    #[error("graph {index} has a different node set than graph 0")]
    NodeSetMismatch { index: usize },
    #[error("graph {index} does not totally order its equivalency sets")]
    NotTotallyOrdered { index: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Number of unordered pairs over `n` elements.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// All index pairs `(i, j)` with `i < j` over `n` elements.
pub fn enumerate_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

fn check_inputs(graphs: &[ConstraintGraph]) -> Result<(), UnificationError> {
    let first = graphs.first().ok_or(UnificationError::NoGraphs)?;
    for (index, g) in graphs.iter().enumerate() {
        if g.node_set() != first.node_set() {
            return Err(UnificationError::NodeSetMismatch { index });
        }
        if !g.is_totally_ordered() {
            return Err(UnificationError::NotTotallyOrdered { index });
        }
    }
    Ok(())
}

/// One tally per canonical pair, in pair order.
pub fn tally_votes(graphs: &[ConstraintGraph]) -> Result<Vec<VoteTally>, UnificationError> {
    check_inputs(graphs)?;
    let ids: Vec<&ElementId> = graphs[0].nodes().collect();
    let mut tallies = Vec::with_capacity(pair_count(ids.len()));
    for (i, j) in enumerate_pairs(ids.len()) {
        let (x, y) = (ids[i], ids[j]);
        let mut t = VoteTally {
            x: x.clone(),
            y: y.clone(),
            less: 0,
            equal: 0,
            greater: 0,
            priority: 0,
            outcome: Outcome::Pending,
        };
        for g in graphs {
            match g.relation_of(x, y)?.kind {
                RelationKind::Less => t.less += 1,
                RelationKind::Equal => t.equal += 1,
                RelationKind::Greater => t.greater += 1,
                RelationKind::Unordered => unreachable!("inputs are totally ordered"),
            }
        }
        t.priority = t.less.max(t.equal).max(t.greater);
        tallies.push(t);
    }
    Ok(tallies)
}

/// Folds each less/greater vote pair into one equal vote.
pub fn adjust_votes(t: &VoteTally) -> VoteTally {
    let m = t.less.min(t.greater);
    let mut out = t.clone();
    out.less -= m;
    out.greater -= m;
    out.equal += m;
    out.priority = out.less.max(out.equal).max(out.greater);
    out
}

/// Relation a tally asks for, or `Disputed` when equal ties a direction.
fn decided(t: &VoteTally) -> Outcome {
    let p = t.priority;
    if t.equal == p && (t.less == p || t.greater == p) {
        Outcome::Disputed
    } else if t.equal == p {
        Outcome::Equal
    } else if t.less == p {
        Outcome::Less
    } else {
        Outcome::Greater
    }
}

/// The output graph under construction, kept at representative level.
struct Builder {
    n: usize,
    rep_of: Vec<usize>,
    edges: BTreeSet<(usize, usize)>,
    reach: Vec<BitSet>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Self {
            n,
            rep_of: (0..n).collect(),
            edges: BTreeSet::new(),
            reach: vec![BitSet::new(n); n],
        }
    }

    /// Orders `lo` strictly below `hi`.
    fn apply_order(&mut self, lo: usize, hi: usize) -> bool {
        let (rl, rh) = (self.rep_of[lo], self.rep_of[hi]);
        if rl == rh || self.reach[rh].contains(rl) {
            return false;
        }
        if self.edges.insert((rl, rh)) {
            let mut gained = self.reach[rh].clone();
            gained.insert(rh);
            for a in 0..self.n {
                if a == rl || self.reach[a].contains(rl) {
                    self.reach[a].union_with(&gained);
                }
            }
        }
        true
    }

    fn apply_equal(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.rep_of[x], self.rep_of[y]);
        if rx == ry {
            return true;
        }
        if self.reach[rx].contains(ry) || self.reach[ry].contains(rx) {
            return false;
        }
        // Indices follow id order, so the smaller index is the smaller id.
        let (keep, drop) = (rx.min(ry), rx.max(ry));
        for r in &mut self.rep_of {
            if *r == drop {
                *r = keep;
            }
        }
        self.edges = self
            .edges
            .iter()
            .map(|&(f, t)| {
                let f = if f == drop { keep } else { f };
                let t = if t == drop { keep } else { t };
                (f, t)
            })
            .collect();
        self.recompute_reach();
        true
    }

    fn recompute_reach(&mut self) {
        let mut succ = vec![Vec::new(); self.n];
        for &(f, t) in &self.edges {
            succ[f].push(t);
        }
        for s in 0..self.n {
            let mut seen = BitSet::new(self.n);
            let mut stack: Vec<usize> = succ[s].clone();
            while let Some(u) = stack.pop() {
                if !seen.contains(u) {
                    seen.insert(u);
                    stack.extend(&succ[u]);
                }
            }
            self.reach[s] = seen;
        }
    }

    fn into_graph(self, ids: &[ElementId], catalog_ref: &str, k: usize) -> ConstraintGraph {
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|&(f, t)| Edge::new(ids[f].clone(), ids[t].clone(), Degree::Greater))
            .collect();
        for (i, &r) in self.rep_of.iter().enumerate() {
            if r != i {
                edges.push(Edge::new(ids[r].clone(), ids[i].clone(), Degree::Equal));
            }
        }
        ConstraintGraph::new(
            catalog_ref,
            ids.iter().cloned(),
            edges,
            format!("unified from {k} graphs"),
        )
        .expect("builder maintains acyclicity")
    }
}

/// Unifies same-catalog, totally ordered graphs by priority voting.
///
/// Every applied directional pair contributes a degree-1 edge between the
/// current representatives, so the result carries redundant edges; see
/// [`unify_with_degrees`] for the reduced form with degrees reattached.
pub fn unify(
    graphs: &[ConstraintGraph],
) -> Result<(ConstraintGraph, UnificationReport), UnificationError> {
    let mut tallies: Vec<VoteTally> = tally_votes(graphs)?.iter().map(adjust_votes).collect();
    let ids: Vec<ElementId> = graphs[0].nodes().cloned().collect();
    let pos = |id: &ElementId| ids.binary_search(id).expect("tally ids come from the graph");

    let mut order: Vec<usize> = (0..tallies.len()).collect();
    order.sort_by(|&a, &b| {
        let (ta, tb) = (&tallies[a], &tallies[b]);
        tb.priority
            .cmp(&ta.priority)
            .then_with(|| (&ta.x, &ta.y).cmp(&(&tb.x, &tb.y)))
    });

    let mut builder = Builder::new(ids.len());
    let (mut disputed, mut contradictory, mut applied) = (0, 0, 0);
    for i in order {
        let t = &mut tallies[i];
        let (x, y) = (pos(&t.x), pos(&t.y));
        let wanted = decided(t);
        let ok = match wanted {
            Outcome::Disputed => {
                t.outcome = Outcome::Disputed;
                disputed += 1;
                continue;
            }
            Outcome::Equal => builder.apply_equal(x, y),
            Outcome::Less => builder.apply_order(x, y),
            Outcome::Greater => builder.apply_order(y, x),
            Outcome::Pending | Outcome::Contradictory => unreachable!(),
        };
        if ok {
            t.outcome = wanted;
            applied += 1;
        } else {
            t.outcome = Outcome::Contradictory;
            contradictory += 1;
        }
    }

    let graph = builder.into_graph(&ids, graphs[0].catalog_ref(), graphs.len());
    Ok((
        graph,
        UnificationReport {
            disputed,
            contradictory,
            applied,
            pairs: tallies,
        },
    ))
}

/// Reattaches degrees to the strict edges of a unified graph.
///
/// An edge `u -> v` becomes degree 2 when at least half of the input graphs
/// that rank `v` above `u` do so through a path carrying a degree-2 edge.
pub fn assign_unified_degrees(
    graphs: &[ConstraintGraph],
    unified: &ConstraintGraph,
) -> Result<ConstraintGraph, UnificationError> {
    let mut edges = Vec::with_capacity(unified.edges().len());
    for e in unified.edges() {
        if !e.degree.is_strict() {
            edges.push(e.clone());
            continue;
        }
        let (mut voters, mut witnesses) = (0usize, 0usize);
        for g in graphs {
            let r = g.relation_of(&e.to, &e.from)?;
            if r.kind == RelationKind::Greater {
                voters += 1;
                if r.degree_hint == Some(Degree::MuchGreater) {
                    witnesses += 1;
                }
            }
        }
        let degree = if voters > 0 && 2 * witnesses >= voters {
            Degree::MuchGreater
        } else {
            Degree::Greater
        };
        edges.push(Edge::new(e.from.clone(), e.to.clone(), degree));
    }
    Ok(ConstraintGraph::new(
        unified.catalog_ref(),
        unified.nodes().cloned(),
        edges,
        unified.provenance(),
    )?)
}

/// `unify`, then degree reattachment, then redundant-edge reduction.
pub fn unify_with_degrees(
    graphs: &[ConstraintGraph],
) -> Result<(ConstraintGraph, UnificationReport), UnificationError> {
    let (raw, report) = unify(graphs)?;
    let graded = assign_unified_degrees(graphs, &raw)?;
    Ok((graded.reduce_redundant_edges(), report))
}
