//! Stops a session halfway, serializes its log and picks it up again.

use elicit::encoding::{Answer, Session, SessionLog, SessionOptions};
use elicit::ElementId;

fn main() -> anyhow::Result<()> {
    let catalog: Vec<ElementId> = ["a", "b", "c", "d", "e"].map(ElementId::from).to_vec();
    let options = SessionOptions {
        allow_equal: false,
        allow_degree2: false,
        insertion_order: catalog.clone(),
        rng_seed: 7,
    };
    // the expert believes alphabetical order is ascending significance
    let answer = |s: &Session| -> anyhow::Result<Answer> {
        let q = s.next_question()?;
        Ok(if q.new_element > q.probe { Answer::Greater } else { Answer::Less })
    };

    let mut first = Session::start("letters", &catalog, options)?;
    for _ in 0..3 {
        let a = answer(&first)?;
        first.submit_answer(a)?;
    }
    let saved = first.log().to_json();
    println!("saved after {} answers", first.answer_count());

    let mut resumed = Session::replay(&SessionLog::from_json(&saved)?, &catalog)?;
    while !resumed.is_done() {
        let a = answer(&resumed)?;
        resumed.submit_indexed(resumed.answer_count(), a)?;
    }
    // an answer for an index already used is rejected
    assert!(resumed.submit_indexed(0, Answer::Less).is_err());
    println!("finished after {} answers", resumed.answer_count());
    let order: Vec<&str> = resumed.sorted_representatives().iter().map(|e| e.as_str()).collect();
    println!("order: {}", order.join(" < "));
    Ok(())
}
