//! Consistency measures between constraint graphs over the same elements.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ConstraintGraph, ElementId, GraphError, RelationKind};
use crate::unification::{enumerate_pairs, pair_count};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("graphs cover different element sets")]
    NodeSetMismatch,
    #[error("graph does not totally order its equivalency sets")]
    NotTotallyOrdered,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inconsistency {
    pub total: usize,
    pub differing: usize,
    /// Pairs where one graph says less and the other greater.
    pub opposing: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OrderingDistance {
    /// Kendall distance: adjacent transpositions between the two orders.
    pub adjacent_swaps: usize,
    /// Spearman footrule: summed absolute rank displacement.
    pub footrule: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Baseline {
    pub mean_adjacent_swaps: f64,
    pub mean_footrule: f64,
}

fn check(g1: &ConstraintGraph, g2: &ConstraintGraph) -> Result<(), MetricsError> {
    if g1.node_set() != g2.node_set() {
        return Err(MetricsError::NodeSetMismatch);
    }
    Ok(())
}

pub fn pairwise_inconsistency(
    g1: &ConstraintGraph,
    g2: &ConstraintGraph,
) -> Result<Inconsistency, MetricsError> {
    check(g1, g2)?;
    if !g1.is_totally_ordered() || !g2.is_totally_ordered() {
        return Err(MetricsError::NotTotallyOrdered);
    }
    let ids: Vec<&ElementId> = g1.nodes().collect();
    let mut out = Inconsistency {
        total: pair_count(ids.len()),
        differing: 0,
        opposing: 0,
    };
    for (i, j) in enumerate_pairs(ids.len()) {
        let r1 = g1.relation_of(ids[i], ids[j])?.kind;
        let r2 = g2.relation_of(ids[i], ids[j])?.kind;
        if r1 != r2 {
            out.differing += 1;
            if matches!(
                (r1, r2),
                (RelationKind::Less, RelationKind::Greater) | (RelationKind::Greater, RelationKind::Less)
            ) {
                out.opposing += 1;
            }
        }
    }
    Ok(out)
}

/// Rank of every element's set along the longest path (0 = least significant).
fn set_ranks(g: &ConstraintGraph) -> Result<HashMap<ElementId, usize>, MetricsError> {
    let lp = g.longest_representative_path();
    if !lp.totally_ordered {
        return Err(MetricsError::NotTotallyOrdered);
    }
    let rep_rank: HashMap<&ElementId, usize> =
        lp.path.iter().enumerate().map(|(i, r)| (r, i)).collect();
    g.nodes()
        .map(|id| Ok((id.clone(), rep_rank[g.representative(id)?])))
        .collect()
}

/// Total element order of `g`, with each tied set arranged by the set
/// ranks of `reference` (then by id).
pub fn expand_order(
    g: &ConstraintGraph,
    reference: &ConstraintGraph,
) -> Result<Vec<ElementId>, MetricsError> {
    check(g, reference)?;
    let own = set_ranks(g)?;
    let other = set_ranks(reference)?;
    let mut order: Vec<ElementId> = g.nodes().cloned().collect();
    order.sort_by(|a, b| (own[a], other[a], a).cmp(&(own[b], other[b], b)));
    Ok(order)
}

/// Number of inversions in `seq`, by merge sort.
pub fn count_inversions(seq: &[usize]) -> usize {
    fn sort(v: &mut [usize], buf: &mut Vec<usize>) -> usize {
        if v.len() < 2 {
            return 0;
        }
        let mid = v.len() / 2;
        let mut inv = sort(&mut v[..mid], buf) + sort(&mut v[mid..], buf);
        buf.clear();
        let (mut i, mut j) = (0, mid);
        while i < mid && j < v.len() {
            if v[i] <= v[j] {
                buf.push(v[i]);
                i += 1;
            } else {
                buf.push(v[j]);
                inv += mid - i;
                j += 1;
            }
        }
        buf.extend_from_slice(&v[i..mid]);
        buf.extend_from_slice(&v[j..]);
        v.copy_from_slice(buf);
        inv
    }
    let mut v = seq.to_vec();
    sort(&mut v, &mut Vec::with_capacity(seq.len()))
}

/// Kendall and footrule distance between two orders of the same items.
/// `target_pos[x]` is the position of item `x` in the target order; `order`
/// lists items in the source order.
fn distances(order: &[usize], target_pos: &[usize]) -> OrderingDistance {
    let mapped: Vec<usize> = order.iter().map(|&x| target_pos[x]).collect();
    let footrule = mapped
        .iter()
        .enumerate()
        .map(|(i, &p)| i.abs_diff(p))
        .sum();
    OrderingDistance {
        adjacent_swaps: count_inversions(&mapped),
        footrule,
    }
}

pub fn ordering_distance(
    g1: &ConstraintGraph,
    g2: &ConstraintGraph,
) -> Result<OrderingDistance, MetricsError> {
    let o1 = expand_order(g1, g2)?;
    let o2 = expand_order(g2, g1)?;
    let index: HashMap<&ElementId, usize> = o1.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut target_pos = vec![0; o2.len()];
    for (p, e) in o2.iter().enumerate() {
        target_pos[index[e]] = p;
    }
    let source: Vec<usize> = (0..o1.len()).collect();
    Ok(distances(&source, &target_pos))
}

/// Monte-Carlo mean distances between independent uniform permutations.
/// Sample `i` draws from its own stream of the seeded generator.
pub fn random_baseline(n: usize, samples: usize, seed: u64) -> Baseline {
    let samples = samples.max(1);
    let (mut swaps, mut foot) = (0u64, 0u64);
    let mut a: Vec<usize> = (0..n).collect();
    let mut b: Vec<usize> = (0..n).collect();
    let mut pos = vec![0; n];
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
        for (p, &x) in b.iter().enumerate() {
            pos[x] = p;
        }
        let d = distances(&a, &pos);
        swaps += d.adjacent_swaps as u64;
        foot += d.footrule as u64;
    }
    Baseline {
        mean_adjacent_swaps: swaps as f64 / samples as f64,
        mean_footrule: foot as f64 / samples as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonRow {
    pub a: String,
    pub b: String,
    pub total: usize,
    pub differing: usize,
    pub opposing: usize,
    pub adjacent_swaps: usize,
    pub footrule: usize,
}

/// All pairwise metrics between named graphs, one row per unordered pair.
pub fn compare_all(graphs: &[(String, ConstraintGraph)]) -> Result<Vec<ComparisonRow>, MetricsError> {
    let mut rows = Vec::new();
    for (i, j) in enumerate_pairs(graphs.len()) {
        let (na, ga) = &graphs[i];
        let (nb, gb) = &graphs[j];
        let inc = pairwise_inconsistency(ga, gb)?;
        let dist = ordering_distance(ga, gb)?;
        rows.push(ComparisonRow {
            a: na.clone(),
            b: nb.clone(),
            total: inc.total,
            differing: inc.differing,
            opposing: inc.opposing,
            adjacent_swaps: dist.adjacent_swaps,
            footrule: dist.footrule,
        });
    }
    Ok(rows)
}

pub fn rows_to_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("a,b,total,differing,opposing,adjacent_swaps,footrule\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.a, r.b, r.total, r.differing, r.opposing, r.adjacent_swaps, r.footrule
        );
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

    fn chain(order: &[&str]) -> ConstraintGraph {
        let edges = order
            .windows(2)
            .map(|w| Edge::new(w[0], w[1], Degree::Greater))
            .collect();
        ConstraintGraph::new("t", order.iter().map(|&s| id(s)), edges, "").unwrap()
    }

    fn brute_inversions(seq: &[usize]) -> usize {
        let mut n = 0;
        for i in 0..seq.len() {
            for j in i + 1..seq.len() {
                if seq[i] > seq[j] {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn merge_sort_inversions_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 0..40 {
            let mut v: Vec<usize> = (0..n).collect();
            v.shuffle(&mut rng);
            assert_eq!(count_inversions(&v), brute_inversions(&v));
        }
    }

    #[test]
    fn identical_graphs_have_zero_distance() {
        let g = chain(&["a", "b", "c", "d"]);
        let inc = pairwise_inconsistency(&g, &g).unwrap();
        assert_eq!(inc, Inconsistency { total: 6, differing: 0, opposing: 0 });
        let d = ordering_distance(&g, &g).unwrap();
        assert_eq!((d.adjacent_swaps, d.footrule), (0, 0));
    }

    #[test]
    fn reversed_order_is_maximal() {
        let names: Vec<String> = (0..10).map(|i| format!("e{i}")).collect();
        let fwd: Vec<&str> = names.iter().map(String::as_str).collect();
        let rev: Vec<&str> = fwd.iter().rev().copied().collect();
        let (g1, g2) = (chain(&fwd), chain(&rev));
        let inc = pairwise_inconsistency(&g1, &g2).unwrap();
        assert_eq!((inc.differing, inc.opposing), (45, 45));
        let d = ordering_distance(&g1, &g2).unwrap();
        assert_eq!(d.adjacent_swaps, 45);
        assert_eq!(d.footrule, 50);
    }

    #[test]
    fn ties_follow_the_other_graph() {
        // g1 ties {a, b} above c; g2 orders c < a < b.
        let g1 = ConstraintGraph::new(
            "t",
            ["a", "b", "c"].map(id),
            vec![Edge::new("c", "a", Degree::Greater), Edge::new("a", "b", Degree::Equal)],
            "",
        )
        .unwrap();
        let g2 = chain(&["c", "a", "b"]);
        assert_eq!(expand_order(&g1, &g2).unwrap(), vec![id("c"), id("a"), id("b")]);
        let d = ordering_distance(&g1, &g2).unwrap();
        assert_eq!((d.adjacent_swaps, d.footrule), (0, 0));
        let inc = pairwise_inconsistency(&g1, &g2).unwrap();
        assert_eq!((inc.differing, inc.opposing), (1, 0));
        // g2 reversed within the tie: b before a.
        let g3 = chain(&["c", "b", "a"]);
        assert_eq!(expand_order(&g1, &g3).unwrap(), vec![id("c"), id("b"), id("a")]);
        assert_eq!(ordering_distance(&g1, &g3).unwrap().adjacent_swaps, 0);
    }

    #[test]
    fn node_set_mismatch() {
        let g1 = chain(&["a", "b"]);
        let g2 = chain(&["a", "c"]);
        assert_eq!(pairwise_inconsistency(&g1, &g2), Err(MetricsError::NodeSetMismatch));
        assert_eq!(ordering_distance(&g1, &g2), Err(MetricsError::NodeSetMismatch));
    }

    #[test]
    fn two_element_baseline() {
        let b = random_baseline(2, 20_000, 3);
        assert!((b.mean_adjacent_swaps - 0.5).abs() < 0.02, "{b:?}");
        assert!((b.mean_footrule - 1.0).abs() < 0.04, "{b:?}");
    }

    #[test]
    fn csv_rows() {
        let g = chain(&["a", "b", "c"]);
        let rows = compare_all(&[("x".into(), g.clone()), ("y".into(), g)]).unwrap();
        assert_eq!(
            rows_to_csv(&rows),
            "a,b,total,differing,opposing,adjacent_swaps,footrule\nx,y,3,0,0,0,0\n"
        );
    }
}
