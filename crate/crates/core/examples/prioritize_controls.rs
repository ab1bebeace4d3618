//! Groups a partially ordered control list into ranked sets, most
//! significant first.

use elicit::prioritization::{prioritize, render_ranking, render_sizes};
use elicit::{ConstraintGraph, Degree, Edge, ElementId};

fn main() -> anyhow::Result<()> {
    let path = ["ID.AM-1", "PR.AC-1", "DE.CM-1", "RS.RP-1", "RC.RP-1"];
    let mut edges: Vec<Edge> = path
        .windows(2)
        .map(|w| Edge::new(w[0], w[1], Degree::Greater))
        .collect();
    edges.push(Edge::new("PR.AC-1", "PR.AC-3", Degree::Equal));
    edges.push(Edge::new("RS.RP-1", "RS.CO-2", Degree::Equal));
    // judged only against one neighbour each
    edges.push(Edge::new("PR.DS-1", "DE.CM-1", Degree::Greater));
    edges.push(Edge::new("DE.CM-1", "DE.AE-2", Degree::Greater));

    let mut nodes: Vec<ElementId> = path.iter().map(|s| ElementId::from(*s)).collect();
    nodes.extend(["PR.AC-3", "RS.CO-2", "PR.DS-1", "DE.AE-2"].map(ElementId::from));
    let g = ConstraintGraph::new("controls", nodes, edges, "")?;

    let sets = prioritize(&g);
    for (rank, s) in sets.iter().enumerate() {
        let members: Vec<&str> = s.members.iter().map(ElementId::as_str).collect();
        let placed: Vec<&str> = s.placed_by_heuristic.iter().map(ElementId::as_str).collect();
        println!("{rank}: {members:?} + {placed:?}");
    }
    println!("{}", render_sizes(&sets));
    println!("{}", render_ranking(&sets));
    Ok(())
}
