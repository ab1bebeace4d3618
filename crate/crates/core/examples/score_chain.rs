//! Turns a ranking into numeric scores, then pegs one element and lets the
//! others re-spread around it.

use std::collections::BTreeMap;

use elicit::scoring::{generate_scores, peg_and_regenerate, ScoringConfig};
use elicit::{ConstraintGraph, Degree, Edge, ElementId};

fn main() -> anyhow::Result<()> {
    let names: Vec<String> = (0..13).map(|i| format!("c{i:02}")).collect();
    let edges = names
        .windows(2)
        .map(|w| Edge::new(w[0].as_str(), w[1].as_str(), Degree::Greater))
        .collect();
    let g = ConstraintGraph::new("chain", names.iter().map(|n| ElementId::from(n.as_str())), edges, "")?;

    let cfg = ScoringConfig::new(0.0, 10.0, 0.5, 1.5, 1);
    let a = generate_scores(&g, &cfg)?;
    for s in &a.per_set {
        println!("{}  [{:>4}, {:>4}]  {}", s.representative, s.min, s.max, s.chosen);
    }

    let pegs = BTreeMap::from([(ElementId::from("c06"), 5.0)]);
    let (_, pegged) = peg_and_regenerate(&g, &cfg, &pegs)?;
    let chosen: Vec<f64> = pegged.per_set.iter().map(|s| s.chosen).collect();
    println!("with c06 pegged at 5.0: {chosen:?}");
    Ok(())
}
