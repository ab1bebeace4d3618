//! One PASS/FAIL line per primary acceptance criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use common::*;
use elicit::catalogs::{parse_cvss_vector, CvssVector};
use elicit::encoding::{question_bound, run_to_completion, Answer, Session, WeakOrderOracle};
use elicit::graph::ConstraintGraph;
use elicit::metrics::random_baseline;
use elicit::prioritization::{prioritize, render_sizes};
use elicit::scoring::{
    assign_max_scores, assign_min_scores, generate_scores, max_degree2_distance, midpoint_scores,
    path_degree_profiles, validate_rational, ScoringConfig, ScoringError,
};
use elicit::service::{router, AppState};
use elicit::unification::{adjust_votes, enumerate_pairs, pair_count, unify, unify_with_degrees, VoteTally, Outcome};
use elicit::{Degree, Edge, ElementId};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn oracle_sort() -> Check {
    let start = Instant::now();
    let (sizes, ties) = ([10usize, 65, 100, 200], [0.0, 0.2, 0.5]);
    let mut runs = 0;
    let mut max_ratio: f64 = 0.0;
    for i in 0..204u64 {
        let n = sizes[i as usize % 4];
        let tie = ties[(i as usize / 4) % 3];
        let mut r = ChaCha8Rng::seed_from_u64(i);
        let levels = random_weak_order(&mut r, n, tie);
        let s = encode_levels(&levels, i, false, None);
        let bound = question_bound(n);
        ensure!(s.answer_count() <= bound, "n={n}: {} answers > {bound}", s.answer_count());
        max_ratio = max_ratio.max(s.answer_count() as f64 / bound as f64);
        let hidden = weak_order_graph(&mut r, &levels, 0.0);
        let got = s.graph().map_err(|e| e.to_string())?;
        ensure!(relation_matrix(&got) == relation_matrix(&hidden), "run {i} (n={n}) differs");
        runs += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1}s");
    Ok(format!("{runs} weak orders recovered, max answers/bound {max_ratio:.2}, {secs:.1}s"))
}

fn pair_counts() -> Check {
    let (a, b) = (enumerate_pairs(65).len(), enumerate_pairs(100).len());
    ensure!(a == 2080 && b == 4950, "got {a}, {b}");
    Ok(format!("n=65 -> {a}, n=100 -> {b}"))
}

fn vote_adjustment() -> Check {
    let mut checked = 0;
    for total in 0..=9u32 {
        for less in 0..=total {
            for equal in 0..=total - less {
                let greater = total - less - equal;
                let t = VoteTally {
                    x: "a".into(),
                    y: "b".into(),
                    less,
                    equal,
                    greater,
                    priority: less.max(equal).max(greater),
                    outcome: Outcome::Pending,
                };
                let a = adjust_votes(&t);
                let m = less.min(greater);
                // each opposing pair becomes a single equal vote
                ensure!(a.votes() + m == total, "{:?} -> {:?}", (less, equal, greater), a);
                ensure!(a.less.min(a.greater) == 0, "min not zeroed for {:?}", (less, equal, greater));
                let want = (less - m, equal + m, greater - m);
                ensure!((a.less, a.equal, a.greater) == want, "rule broken for {:?}", (less, equal, greater));
                ensure!(a.priority == want.0.max(want.1).max(want.2), "priority");
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} tallies with k <= 9"))
}

fn unification() -> Check {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    for case in 0..60 {
        let n = r.gen_range(2..=65);
        let k = r.gen_range(1..=9);
        let graphs: Vec<ConstraintGraph> = (0..k)
            .map(|_| {
                let levels = random_weak_order(&mut r, n, 0.2);
                weak_order_graph(&mut r, &levels, 0.3)
            })
            .collect();
        let (_, rep) = unify(&graphs).map_err(|e| e.to_string())?;
        ensure!(
            rep.applied + rep.disputed + rep.contradictory == pair_count(n),
            "case {case}: conservation broken"
        );
        let levels = random_weak_order(&mut r, n, 0.2);
        let g = weak_order_graph(&mut r, &levels, 0.3);
        let (u, rep) = unify_with_degrees(&vec![g.clone(); k]).map_err(|e| e.to_string())?;
        ensure!(rep.disputed + rep.contradictory == 0, "case {case}: unanimity disputed");
        ensure!(relation_matrix(&u) == relation_matrix(&g), "case {case}: unanimity relations");
    }
    for case in 0..500 {
        let n = r.gen_range(1..=6);
        let k = r.gen_range(1..=3);
        let graphs: Vec<ConstraintGraph> = (0..k)
            .map(|_| {
                let levels = random_weak_order(&mut r, n, 0.3);
                weak_order_graph(&mut r, &levels, 0.0)
            })
            .collect();
        let (g, _) = unify(&graphs).map_err(|e| e.to_string())?;
        ensure!(relation_matrix(&g) == brute_force_unify(&graphs).0, "oracle case {case} differs");
    }
    Ok("60 conservation + unanimity cases (n <= 65, k <= 9), 500 brute-force cases".into())
}

fn scoring_chain() -> Check {
    let names: Vec<String> = (0..13).map(|i| format!("s{i:02}")).collect();
    let edges = names
        .windows(2)
        .map(|w| Edge::new(w[0].as_str(), w[1].as_str(), Degree::Greater))
        .collect();
    let g = ConstraintGraph::new("chain", names.iter().map(|s| ElementId::from(s.as_str())), edges, "")
        .map_err(|e| e.to_string())?;
    let cfg = ScoringConfig::new(0.0, 10.0, 0.5, 1.5, 1);
    let a = generate_scores(&g, &cfg).map_err(|e| e.to_string())?;
    for (i, s) in a.per_set.iter().enumerate() {
        let i = i as f64;
        ensure!(
            s.min == 0.5 * i && s.max == 4.0 + 0.5 * i && s.chosen == 2.0 + 0.5 * i,
            "set {i}: {s:?}"
        );
    }
    let chosen: Vec<String> = a.per_set.iter().map(|s| format!("{:.1}", s.chosen)).collect();
    Ok(chosen.join(" "))
}

fn rationality() -> Check {
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let (mut feasible, mut attempts) = (0, 0);
    while feasible < 1000 {
        attempts += 1;
        let n = r.gen_range(1..=30);
        let g = random_dag(&mut r, n, 0.25, 0.3, 0.2);
        let d1 = r.gen_range(1..=10) as f64 / 10.0;
        let d2 = d1 + r.gen_range(0..=10) as f64 / 10.0;
        let cfg = ScoringConfig::new(0.0, 10.0, d1, d2, 1);
        let a = match generate_scores(&g, &cfg) {
            Ok(a) => a,
            Err(ScoringError::Infeasible { .. }) => continue,
            Err(e) => return Err(format!("attempt {attempts}: {e}")),
        };
        let v = validate_rational(&g, &cfg, &a.element_scores());
        ensure!(v.is_empty(), "attempt {attempts}: {v:?}");
        let mid = midpoint_scores(&g, &cfg).map_err(|e| e.to_string())?;
        ensure!(validate_rational(&g, &cfg, &mid).is_empty(), "attempt {attempts}: midpoints");
        feasible += 1;
    }
    Ok(format!("{feasible} feasible instances of {attempts} drawn"))
}

fn feasibility_tightness() -> Check {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 300 {
        let n = r.gen_range(2..=20);
        let g = random_dag(&mut r, n, 0.3, 0.4, 0.1);
        let has = |d| g.edges().iter().any(|e| e.degree == d);
        if !has(Degree::MuchGreater) || !has(Degree::Greater) {
            continue;
        }
        let d1 = r.gen_range(1..=10) as f64 / 20.0;
        let Some(d2max) = max_degree2_distance(&path_degree_profiles(&g), 10.0, d1) else { continue };
        let tight = ScoringConfig::new(0.0, 10.0, d1, d2max, 9);
        let lo = assign_min_scores(&g, &tight).map_err(|e| e.to_string())?;
        let hi = assign_max_scores(&g, &tight).map_err(|e| e.to_string())?;
        ensure!(lo.iter().any(|(k, v)| (hi[k] - v).abs() < 1e-6), "no tight node at d1={d1}");
        let over = ScoringConfig::new(0.0, 10.0, d1, d2max + 1e-6, 9);
        ensure!(
            matches!(generate_scores(&g, &over), Err(ScoringError::Infeasible { .. })),
            "d2max + eps accepted at d1={d1}"
        );
        checked += 1;
    }
    Ok(format!("{checked} graphs with both degrees"))
}

fn prioritization() -> Check {
    let sets = prioritize(&walkthrough_fixture());
    // slot 0 is the least significant set; output lists the top first
    let slot_of = |id: &str| {
        sets.iter()
            .position(|s| s.placed_by_heuristic.iter().any(|m| m.as_str() == id))
            .map(|p| sets.len() - 1 - p)
    };
    let placed: Vec<_> = ["x-anc", "y-desc1", "y-desc2", "y-desc3"].iter().map(|id| slot_of(id)).collect();
    ensure!(placed == [Some(0), Some(9), Some(9), Some(10)], "placements {placed:?}");
    let pf = pf_fixture();
    let rendered = render_sizes(&prioritize(&pf));
    let want = "[14, 15+1, 2, 9, 5, 10, 20, 10, 8, 2+2, 1+1]";
    ensure!(rendered == want, "rendered {rendered}");
    ensure!(pf.len() == 100, "fixture has {} elements", pf.len());
    Ok(format!("slots {placed:?}; {rendered}"))
}

fn baselines() -> Check {
    let b = random_baseline(65, 10_000, 1);
    let (k, f) = (b.mean_adjacent_swaps, b.mean_footrule);
    ensure!((k - 1040.0).abs() / 1040.0 < 0.03, "kendall {k}");
    ensure!((f - 1408.0).abs() / 1408.0 < 0.03, "footrule {f}");
    ensure!((1432.0 - f).abs() / f < 0.05, "1432 not within 5% of {f}");
    Ok(format!("adjacent swaps {k:.1}, footrule {f:.1}"))
}

fn cvss_catalog() -> Check {
    let all = CvssVector::enumerate();
    ensure!(all.len() == 2496, "{} vectors", all.len());
    for v in &all {
        let s = v.to_string();
        let back = parse_cvss_vector(&s).map_err(|e| e.to_string())?;
        ensure!(back == *v && back.to_string() == s, "round trip failed for {s}");
    }
    Ok(format!("{} legal vectors round-trip", all.len()))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn service_equivalence() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = ChaCha8Rng::seed_from_u64(65);
    let levels = random_weak_order(&mut r, 65, 0.2);
    let seed = 2024;
    let order = ids(65);

    let mut oracle = WeakOrderOracle::new(levels.clone(), Some(3));
    let mut direct = Session::start("cvss", &order, options(order.clone(), seed, true, true))
        .map_err(|e| e.to_string())?;
    run_to_completion(&mut direct, &mut oracle, fixed_clock).map_err(|e| e.to_string())?;
    let expected = direct.graph().map_err(|e| e.to_string())?.to_json();

    let app = router(AppState::new(dir.path(), None).map_err(|e| e.to_string())?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let create = json!({"catalogRef": "cvss", "insertionOrder": order, "rngSeed": seed});
        let (st, body) = call(&app, "POST", "/api/v1/sessions", Some(create)).await;
        ensure!(st == StatusCode::CREATED, "create: {st} {body}");
        let mut view: Value = serde_json::from_str(&body).unwrap();
        let id = view["sessionId"].as_str().unwrap().to_string();
        let opts = direct.options().clone();
        let mut answered = 0;
        while view["state"] == "AwaitingAnswer" {
            let q = &view["question"];
            let new = ElementId::from(q["newElement"].as_str().unwrap());
            let probe = ElementId::from(q["probe"].as_str().unwrap());
            let answer: Answer = oracle.answer(&new, &probe, &opts);
            let index = view["index"].as_u64().unwrap();
            let (st, body) = call(
                &app,
                "POST",
                &format!("/api/v1/sessions/{id}/answers"),
                Some(json!({"index": index, "answer": answer})),
            )
            .await;
            ensure!(st == StatusCode::OK, "answer: {st} {body}");
            view = serde_json::from_str(&body).unwrap();
            answered += 1;
        }
        let (st, stale) = call(
            &app,
            "POST",
            &format!("/api/v1/sessions/{id}/answers"),
            Some(json!({"index": 0, "answer": "Less"})),
        )
        .await;
        ensure!(st == StatusCode::CONFLICT, "stale answer gave {st} {stale}");
        let (_, graph) = call(&app, "GET", &format!("/api/v1/sessions/{id}/graph"), None).await;
        ensure!(graph == expected, "graph differs from the library run");
        Ok(format!("{answered} answers over HTTP, graph byte-identical"))
    })
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("oracle sort correctness", oracle_sort),
        ("pair-count anchors", pair_counts),
        ("vote-adjustment rule", vote_adjustment),
        ("unification conservation + unanimity + oracle", unification),
        ("scoring chain fixture", scoring_chain),
        ("rationality", rationality),
        ("feasibility tightness", feasibility_tightness),
        ("prioritization fixtures", prioritization),
        ("metric baselines", baselines),
        ("CVSS catalog", cvss_catalog),
        ("service equivalence", service_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
