//! Ranked equivalency sets from a constraint graph.
//!
//! The longest representative path gives the ranking. Representatives off
//! that path (possible after unification) are folded into an on-path set by
//! matching path distances: an element below the path takes the set at the
//! same longest distance from the top of the path, one above it takes the
//! set at the same distance from the bottom.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{ConstraintGraph, ElementId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankedSet {
    pub representative: ElementId,
    /// Members of the on-path set, in id order.
    pub members: Vec<ElementId>,
    /// Elements merged in by the distance heuristic, in id order.
    pub placed_by_heuristic: Vec<ElementId>,
}

impl RankedSet {
    pub fn len(&self) -> usize {
        self.members.len() + self.placed_by_heuristic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_members(&self) -> impl Iterator<Item = &ElementId> {
        self.members.iter().chain(&self.placed_by_heuristic)
    }
}

/// Ranked sets, most significant first.
pub fn prioritize(g: &ConstraintGraph) -> Vec<RankedSet> {
    let lp = g.longest_representative_path();
    if lp.path.is_empty() {
        return Vec::new();
    }
    let ix = g.index();
    let path: Vec<usize> = lp
        .path
        .iter()
        .map(|id| ix.position(id).expect("path ids are nodes"))
        .collect();
    let last = path.len() - 1;
    let mut slot_of: Vec<Option<usize>> = vec![None; ix.ids.len()];
    for (i, &p) in path.iter().enumerate() {
        slot_of[p] = Some(i);
    }

    if !lp.totally_ordered {
        let to_last = ix.longest_to(path[last]);
        let from_first = ix.longest_from(path[0]);
        for &r in &ix.reps {
            if slot_of[r].is_some() {
                continue;
            }
            let slot = if let Some(d) = to_last[r] {
                last.saturating_sub(d)
            } else if let Some(d) = from_first[r] {
                d.min(last)
            } else {
                // Unrelated to every path set.
                last / 2
            };
            slot_of[r] = Some(slot);
        }
    }

    let mut sets: Vec<RankedSet> = path
        .iter()
        .map(|&p| RankedSet {
            representative: ix.ids[p].clone(),
            members: Vec::new(),
            placed_by_heuristic: Vec::new(),
        })
        .collect();
    let on_path: BTreeMap<usize, ()> = path.iter().map(|&p| (p, ())).collect();
    for (i, &r) in ix.rep_of.iter().enumerate() {
        let slot = slot_of[r].expect("every representative has a slot");
        let id = ix.ids[i].clone();
        if on_path.contains_key(&r) {
            sets[slot].members.push(id);
        } else {
            sets[slot].placed_by_heuristic.push(id);
        }
    }
    sets.reverse();
    sets
}

/// Set sizes with heuristic additions shown as `+x`, e.g. `[14, 15+1, 2]`.
pub fn render_sizes(sets: &[RankedSet]) -> String {
    let parts: Vec<String> = sets
        .iter()
        .map(|s| match s.placed_by_heuristic.len() {
            0 => s.members.len().to_string(),
            extra => format!("{}+{}", s.members.len(), extra),
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

/// One line per set: rank, size, members, with `+` before heuristic members.
pub fn render_ranking(sets: &[RankedSet]) -> String {
    let mut out = String::new();
    for (rank, s) in sets.iter().enumerate() {
        let mut names: Vec<String> = s.members.iter().map(|m| m.to_string()).collect();
        names.extend(s.placed_by_heuristic.iter().map(|m| format!("+{m}")));
        out.push_str(&format!("{:>3}. ({}) {}\n", rank + 1, s.len(), names.join(", ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Degree, Edge};

    fn id(s: &str) -> ElementId {
        ElementId::from(s)
    }

    #[test]
    fn totally_ordered_graph_follows_the_path() {
        let g = ConstraintGraph::new(
            "t",
            ["a", "b", "c", "m"].map(id),
            vec![
                Edge::new("a", "b", Degree::Greater),
                Edge::new("b", "c", Degree::MuchGreater),
                Edge::new("b", "m", Degree::Equal),
            ],
            "",
        )
        .unwrap();
        let sets = prioritize(&g);
        let reps: Vec<&str> = sets.iter().map(|s| s.representative.as_str()).collect();
        assert_eq!(reps, vec!["c", "b", "a"]);
        assert_eq!(sets[1].members, vec![id("b"), id("m")]);
        assert!(sets.iter().all(|s| s.placed_by_heuristic.is_empty()));
        assert_eq!(render_sizes(&sets), "[1, 2, 1]");
    }

    #[test]
    fn empty_graph_has_no_sets() {
        let g = ConstraintGraph::new("t", [], vec![], "").unwrap();
        assert!(prioritize(&g).is_empty());
    }

    #[test]
    fn off_path_nodes_take_equidistant_slots() {
        // Path p0..p4; x sits below p2 (x -> p2), y above p1 (p1 -> y).
        let path = ["p0", "p1", "p2", "p3", "p4"];
        let mut edges: Vec<Edge> = path
            .windows(2)
            .map(|w| Edge::new(w[0], w[1], Degree::Greater))
            .collect();
        edges.push(Edge::new("x", "p2", Degree::Greater));
        edges.push(Edge::new("p1", "y", Degree::Greater));
        let nodes = path.iter().chain(&["x", "y"]).map(|&s| id(s));
        let g = ConstraintGraph::new("t", nodes, edges, "").unwrap();
        let sets = prioritize(&g);
        assert_eq!(sets.len(), 5);
        // x: 3 edges to p4 -> slot 1 (p1). y: 2 edges from p0 -> slot 2 (p2).
        let by_rep: BTreeMap<&str, &RankedSet> =
            sets.iter().map(|s| (s.representative.as_str(), s)).collect();
        assert_eq!(by_rep["p1"].placed_by_heuristic, vec![id("x")]);
        assert_eq!(by_rep["p2"].placed_by_heuristic, vec![id("y")]);
        assert_eq!(render_sizes(&sets), "[1, 1, 1+1, 1+1, 1]");
        let text = render_ranking(&sets);
        assert!(text.contains("p2, +y"));
    }

    #[test]
    fn unrelated_node_goes_to_the_middle() {
        let g = ConstraintGraph::new(
            "t",
            ["a", "b", "c", "z"].map(id),
            vec![Edge::new("a", "b", Degree::Greater), Edge::new("b", "c", Degree::Greater)],
            "",
        )
        .unwrap();
        let sets = prioritize(&g);
        assert_eq!(sets[1].placed_by_heuristic, vec![id("z")]);
    }
}
