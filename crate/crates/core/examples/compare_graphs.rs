//! Pairwise comparison of several rankings as CSV, plus the distance two
//! random rankings would have.

use elicit::metrics::{compare_all, random_baseline, rows_to_csv};
use elicit::{ConstraintGraph, Degree, Edge, ElementId};

fn ranking(name: &str, order: &[&str]) -> anyhow::Result<(String, ConstraintGraph)> {
    let edges = order
        .windows(2)
        .map(|w| Edge::new(w[0], w[1], Degree::Greater))
        .collect();
    let g = ConstraintGraph::new("letters", order.iter().map(|s| ElementId::from(*s)), edges, "")?;
    Ok((name.to_string(), g))
}

fn main() -> anyhow::Result<()> {
    let graphs = vec![
        ranking("alice", &["a", "b", "c", "d", "e", "f"])?,
        ranking("bob", &["b", "a", "c", "d", "f", "e"])?,
        ranking("carol", &["f", "e", "d", "c", "b", "a"])?,
    ];
    print!("{}", rows_to_csv(&compare_all(&graphs)?));
    let b = random_baseline(6, 10_000, 1);
    println!("random baseline: {:.2} swaps, {:.2} footrule", b.mean_adjacent_swaps, b.mean_footrule);
    Ok(())
}
