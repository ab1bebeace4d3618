//! Prints which minimum distances a graph with both edge degrees can
//! accommodate in the range 0..10.

use elicit::scoring::{feasible_distances, max_degree2_distance, path_degree_profiles};
use elicit::{ConstraintGraph, Degree, Edge, ElementId};

fn main() -> anyhow::Result<()> {
    // two routes from bottom to top: four small steps, or two large ones
    let edges = vec![
        Edge::new("bottom", "s1", Degree::Greater),
        Edge::new("s1", "s2", Degree::Greater),
        Edge::new("s2", "s3", Degree::Greater),
        Edge::new("s3", "top", Degree::Greater),
        Edge::new("bottom", "big", Degree::MuchGreater),
        Edge::new("big", "top", Degree::MuchGreater),
    ];
    let nodes = ["bottom", "s1", "s2", "s3", "big", "top"].map(ElementId::from);
    let g = ConstraintGraph::new("routes", nodes, edges, "")?;

    println!("path profiles (degree-1, degree-2): {:?}", path_degree_profiles(&g));
    println!("largest d2 at d1 = 1.0: {:?}", max_degree2_distance(&path_degree_profiles(&g), 10.0, 1.0));
    print!("{}", feasible_distances(&g, 0.0, 10.0, 0.5).to_csv());
    Ok(())
}
