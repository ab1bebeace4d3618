#![allow(dead_code)]

use elicit::encoding::{run_to_completion, Session, SessionOptions, WeakOrderOracle};
use elicit::graph::{ConstraintGraph, Degree, Edge, ElementId, RelationKind};
use elicit::unification::{adjust_votes, enumerate_pairs, Outcome, VoteTally};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn ids(n: usize) -> Vec<ElementId> {
    (0..n).map(|i| ElementId::from(format!("e{i:03}").as_str())).collect()
}

pub fn fixed_clock() -> chrono::DateTime<chrono::Utc> {
    chrono::DateTime::from_timestamp(1_700_000_000, 0).unwrap()
}

/// Random weak order over `n` ids, least significant level first.
pub fn random_weak_order<R: Rng>(rng: &mut R, n: usize, tie_p: f64) -> Vec<Vec<ElementId>> {
    let mut elems = ids(n);
    elems.shuffle(rng);
    let mut levels: Vec<Vec<ElementId>> = Vec::new();
    for e in elems {
        match levels.last_mut() {
            Some(last) if rng.gen_bool(tie_p) => last.push(e),
            _ => levels.push(vec![e]),
        }
    }
    levels
}

pub fn options(order: Vec<ElementId>, seed: u64, equal: bool, degree2: bool) -> SessionOptions {
    SessionOptions {
        allow_equal: equal,
        allow_degree2: degree2,
        insertion_order: order,
        rng_seed: seed,
    }
}

/// Encodes a hidden weak order with a scripted oracle; ids are inserted in
/// id order.
pub fn encode_levels(
    levels: &[Vec<ElementId>],
    seed: u64,
    degree2: bool,
    much_gap: Option<usize>,
) -> Session {
    let mut oracle = WeakOrderOracle::new(levels.to_vec(), much_gap);
    let mut order = oracle.elements();
    order.sort();
    let mut s = Session::start("test", &order, options(order.clone(), seed, true, degree2)).unwrap();
    run_to_completion(&mut s, &mut oracle, fixed_clock).unwrap();
    s
}

/// Weak order as a chain graph: consecutive levels joined by degree-1 or
/// degree-2 edges, ties joined to the level's first element.
pub fn weak_order_graph<R: Rng>(rng: &mut R, levels: &[Vec<ElementId>], d2_p: f64) -> ConstraintGraph {
    let mut edges = Vec::new();
    for w in levels.windows(2) {
        let d = if rng.gen_bool(d2_p) { Degree::MuchGreater } else { Degree::Greater };
        edges.push(Edge::new(w[0][0].clone(), w[1][0].clone(), d));
    }
    for level in levels {
        for m in &level[1..] {
            edges.push(Edge::new(level[0].clone(), m.clone(), Degree::Equal));
        }
    }
    let nodes = levels.iter().flatten().cloned();
    ConstraintGraph::new("test", nodes, edges, "").unwrap()
}

/// Random DAG: representatives in a random topological order with random
/// forward edges, plus equal-set members attached to random representatives.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, edge_p: f64, d2_p: f64, member_p: f64) -> ConstraintGraph {
    let mut elems = ids(n);
    elems.shuffle(rng);
    let mut reps: Vec<ElementId> = Vec::new();
    let mut edges = Vec::new();
    for e in &elems {
        if !reps.is_empty() && rng.gen_bool(member_p) {
            let r = reps[rng.gen_range(0..reps.len())].clone();
            edges.push(Edge::new(r, e.clone(), Degree::Equal));
        } else {
            reps.push(e.clone());
        }
    }
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            if rng.gen_bool(edge_p) {
                let d = if rng.gen_bool(d2_p) { Degree::MuchGreater } else { Degree::Greater };
                edges.push(Edge::new(reps[i].clone(), reps[j].clone(), d));
            }
        }
    }
    ConstraintGraph::new("test", elems, edges, "").unwrap()
}

/// Full relation matrix keyed by sorted node pairs.
pub fn relation_matrix(g: &ConstraintGraph) -> Vec<RelationKind> {
    let nodes: Vec<&ElementId> = g.nodes().collect();
    enumerate_pairs(nodes.len())
        .into_iter()
        .map(|(i, j)| g.relation_of(nodes[i], nodes[j]).unwrap().kind)
        .collect()
}

/// Independent unification: element-level closure recomputed from scratch
/// after every tentative application. Returns the relation matrix and the
/// per-pair outcomes in pair order.
pub fn brute_force_unify(graphs: &[ConstraintGraph]) -> (Vec<RelationKind>, Vec<Outcome>) {
    let nodes: Vec<ElementId> = graphs[0].nodes().cloned().collect();
    let n = nodes.len();
    let pairs = enumerate_pairs(n);
    let mut tallies: Vec<VoteTally> = pairs
        .iter()
        .map(|&(i, j)| {
            let mut t = VoteTally {
                x: nodes[i].clone(),
                y: nodes[j].clone(),
                less: 0,
                equal: 0,
                greater: 0,
                priority: 0,
                outcome: Outcome::Pending,
            };
            for g in graphs {
                match g.relation_of(&nodes[i], &nodes[j]).unwrap().kind {
                    RelationKind::Less => t.less += 1,
                    RelationKind::Equal => t.equal += 1,
                    RelationKind::Greater => t.greater += 1,
                    RelationKind::Unordered => panic!("input not total"),
                }
            }
            adjust_votes(&t)
        })
        .collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by_key(|&k| (std::cmp::Reverse(tallies[k].priority), k));

    // adj[i][j]: None, Some(false) = equal-only, Some(true) = strict (i below j)
    let mut adj: Vec<Vec<Option<bool>>> = vec![vec![None; n]; n];
    let closure = |adj: &Vec<Vec<Option<bool>>>| {
        let mut c = adj.clone();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (c[i][k], c[k][j]) {
                        let s = a || b;
                        if c[i][j].is_none_or(|old| s && !old) {
                            c[i][j] = Some(s);
                        }
                    }
                }
            }
        }
        c
    };
    for k in order {
        let (i, j) = pairs[k];
        let t = &mut tallies[k];
        let p = t.priority;
        let want = if t.equal == p && (t.less == p || t.greater == p) {
            t.outcome = Outcome::Disputed;
            continue;
        } else if t.equal == p {
            Outcome::Equal
        } else if t.less == p {
            Outcome::Less
        } else {
            Outcome::Greater
        };
        let mut trial = adj.clone();
        match want {
            Outcome::Equal => {
                trial[i][j] = Some(trial[i][j].unwrap_or(false));
                trial[j][i] = Some(trial[j][i].unwrap_or(false));
            }
            Outcome::Less => trial[i][j] = Some(true),
            _ => trial[j][i] = Some(true),
        }
        let c = closure(&trial);
        if (0..n).any(|v| c[v][v] == Some(true)) {
            t.outcome = Outcome::Contradictory;
        } else {
            t.outcome = want;
            adj = trial;
        }
    }
    let c = closure(&adj);
    let rel = pairs
        .iter()
        .map(|&(i, j)| match (c[i][j], c[j][i]) {
            (Some(false), Some(false)) => RelationKind::Equal,
            (Some(true), _) => RelationKind::Less,
            (_, Some(true)) => RelationKind::Greater,
            (None, None) => RelationKind::Unordered,
            other => panic!("inconsistent closure {other:?}"),
        })
        .collect();
    (rel, tallies.into_iter().map(|t| t.outcome).collect())
}

fn path_ids() -> Vec<String> {
    (0..=10).map(|i| format!("p{i:02}")).collect()
}

fn path_edges(path: &[String]) -> Vec<Edge> {
    path.windows(2)
        .map(|w| Edge::new(w[0].as_str(), w[1].as_str(), Degree::Greater))
        .collect()
}

/// Eleven-set path with one off-path ancestor ten edges below the top and
/// descendants nine (two of them) and ten edges above the bottom.
pub fn walkthrough_fixture() -> ConstraintGraph {
    let path = path_ids();
    let mut edges = path_edges(&path);
    edges.push(Edge::new("x-anc", "p01", Degree::Greater));
    edges.push(Edge::new("p08", "y-desc1", Degree::Greater));
    edges.push(Edge::new("p08", "y-desc2", Degree::Greater));
    edges.push(Edge::new("p09", "y-desc3", Degree::Greater));
    let mut nodes: Vec<ElementId> = path.iter().map(|s| ElementId::from(s.as_str())).collect();
    nodes.extend(["x-anc", "y-desc1", "y-desc2", "y-desc3"].map(ElementId::from));
    ConstraintGraph::new("fixture", nodes, edges, "walkthrough").unwrap()
}

/// A 100-element control-catalog shaped graph whose ranking renders as
/// `[14, 15+1, 2, 9, 5, 10, 20, 10, 8, 2+2, 1+1]`.
pub fn pf_fixture() -> ConstraintGraph {
    let path = path_ids();
    // sizes from the least significant set up
    let sizes = [1, 2, 8, 10, 20, 10, 5, 9, 2, 15, 14];
    let mut edges = path_edges(&path);
    let mut nodes = Vec::new();
    for (p, &size) in path.iter().zip(&sizes) {
        nodes.push(ElementId::from(p.as_str()));
        for m in 1..size {
            let id = format!("{p}-m{m:02}");
            edges.push(Edge::new(p.as_str(), id.as_str(), Degree::Equal));
            nodes.push(ElementId::from(id.as_str()));
        }
    }
    for (from, to) in [("p08", "q-desc"), ("x-anc1", "p02"), ("x-anc2", "p02"), ("z-anc", "p01")] {
        edges.push(Edge::new(from, to, Degree::Greater));
    }
    nodes.extend(["q-desc", "x-anc1", "x-anc2", "z-anc"].map(ElementId::from));
    ConstraintGraph::new("fixture", nodes, edges, "control catalog shape").unwrap()
}
