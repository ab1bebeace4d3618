//! Unifies three experts who mostly agree, then prints the vote report and
//! how far each expert is from the consensus.

use elicit::metrics::{ordering_distance, pairwise_inconsistency};
use elicit::unification::unify_with_degrees;
use elicit::{ConstraintGraph, Degree, Edge, ElementId};

/// Strict chain in the given order, least significant first.
fn chain(order: &[&str]) -> anyhow::Result<ConstraintGraph> {
    let edges = order
        .windows(2)
        .map(|w| Edge::new(w[0], w[1], Degree::Greater))
        .collect();
    Ok(ConstraintGraph::new("threats", order.iter().map(|s| ElementId::from(*s)), edges, "")?)
}

fn main() -> anyhow::Result<()> {
    let experts = [
        chain(&["spam", "defacement", "phishing", "ransomware", "exfiltration"])?,
        chain(&["spam", "phishing", "defacement", "ransomware", "exfiltration"])?,
        chain(&["spam", "defacement", "phishing", "exfiltration", "ransomware"])?,
    ];
    let (unified, report) = unify_with_degrees(&experts)?;
    println!(
        "applied {} disputed {} contradictory {}",
        report.applied, report.disputed, report.contradictory
    );
    for t in &report.pairs {
        println!("{:>12} {:<12} {}/{}/{} -> {:?}", t.x, t.y, t.less, t.equal, t.greater, t.outcome);
    }
    // disputed pairs leave the consensus partial, so the metrics compare
    // the experts with each other
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let inc = pairwise_inconsistency(&experts[i], &experts[j])?;
        let dist = ordering_distance(&experts[i], &experts[j])?;
        println!(
            "experts {i} and {j}: {} of {} pairs opposed, {} adjacent swaps",
            inc.opposing, inc.total, dist.adjacent_swaps
        );
    }
    print!("{}", unified.to_json());
    Ok(())
}
