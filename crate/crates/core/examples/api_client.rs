//! Starts the HTTP service on a local port and drives a whole session
//! through it with plain HTTP/1.1 requests.

use std::io::{Read, Write};
use std::net::TcpStream;

use elicit::service::{router, AppState};
use serde_json::{json, Value};

fn request(port: u16, method: &str, path: &str, body: &Value) -> anyhow::Result<Value> {
    let body = body.to_string();
    let mut s = TcpStream::connect(("127.0.0.1", port))?;
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\n\
         Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    let mut raw = String::new();
    s.read_to_string(&mut raw)?;
    let (head, payload) = raw.split_once("\r\n\r\n").unwrap_or((&raw, ""));
    println!("{method} {path} -> {}", head.lines().next().unwrap_or(""));
    Ok(serde_json::from_str(payload).unwrap_or(Value::Null))
}

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join(format!("elicit-example-{}", std::process::id()));
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let port = listener.local_addr()?.port();
    let app = router(AppState::new(&dir, None)?);
    rt.spawn(async move { axum::serve(listener, app).await });

    let items = ["backup", "firewall", "mfa", "patching", "training"];
    let mut view = request(
        port,
        "POST",
        "/api/v1/sessions",
        &json!({"insertionOrder": items, "rngSeed": 5}),
    )?;
    let id = view["sessionId"].as_str().unwrap_or_default().to_string();
    while view["state"] == "AwaitingAnswer" {
        // this expert ranks by name length
        let q = &view["question"];
        let (a, b) = (q["newElement"].as_str().unwrap_or(""), q["probe"].as_str().unwrap_or(""));
        let answer = match a.len().cmp(&b.len()) {
            std::cmp::Ordering::Less => "Less",
            std::cmp::Ordering::Equal => "Equal",
            std::cmp::Ordering::Greater => "Greater",
        };
        let body = json!({"index": view["index"], "answer": answer});
        view = request(port, "POST", &format!("/api/v1/sessions/{id}/answers"), &body)?;
    }
    let graph_id = view["graphId"].as_str().unwrap_or_default().to_string();
    let pr = request(port, "GET", &format!("/api/v1/graphs/{graph_id}/priorities"), &Value::Null)?;
    println!("sizes {}", pr["sizes"]);
    let cfg = json!({"min": 0.0, "max": 10.0, "dist1": 1.0, "dist2": 2.0, "decimals": 1});
    let scores = request(port, "POST", &format!("/api/v1/graphs/{graph_id}/scores"), &cfg)?;
    for s in scores["assignment"]["perSet"].as_array().into_iter().flatten() {
        println!("{} {}", s["members"], s["chosen"]);
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
