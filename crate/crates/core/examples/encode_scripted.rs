//! Encodes one expert's judgments of twelve elements. The expert is a
//! scripted oracle holding a hidden weak order.

use elicit::encoding::{question_bound, run_to_completion, Session, SessionOptions, WeakOrderOracle};
use elicit::ElementId;

fn main() -> anyhow::Result<()> {
    let levels: Vec<Vec<ElementId>> = [
        &["low-a", "low-b"][..],
        &["mid-a"],
        &["mid-b", "mid-c", "mid-d"],
        &["high-a"],
        &["high-b", "high-c"],
        &["top-a", "top-b", "top-c"],
    ]
    .iter()
    .map(|l| l.iter().map(|s| ElementId::from(*s)).collect())
    .collect();
    let mut oracle = WeakOrderOracle::new(levels, Some(2));
    let mut order = oracle.elements();
    order.sort();

    let options = SessionOptions {
        allow_equal: true,
        allow_degree2: true,
        insertion_order: order.clone(),
        rng_seed: 42,
    };
    let mut session = Session::start("demo", &order, options)?;
    run_to_completion(&mut session, &mut oracle, chrono::Utc::now)?;

    for a in session.answers() {
        println!("{:>7} vs {:<7} {:?}", a.a, a.b, a.answer);
    }
    println!(
        "{} answers (bound {})",
        session.answer_count(),
        question_bound(order.len())
    );
    print!("{}", session.graph()?.to_json());
    Ok(())
}
