use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use anthro_layout::geometry::Room;
use anthro_layout::relations::{infer_relations, ObjectAsset, RelationKind, RemoteBackend};
use anthro_layout::Error;
use serde_json::{json, Value};

type Handler = dyn Fn(&Value, usize) -> (u16, String) + Send + Sync;

/// Reads one HTTP/1.1 request; `None` on a closed connection.
fn read_request(r: &mut BufReader<TcpStream>) -> Option<Value> {
    let mut line = String::new();
    if r.read_line(&mut line).ok()? == 0 {
        return None;
    }
    let mut len = 0usize;
    loop {
        line.clear();
        r.read_line(&mut line).ok()?;
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((k, v)) = l.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0; len];
    r.read_exact(&mut body).ok()?;
    serde_json::from_slice(&body).ok()
}

/// Serves every connection with `handler`; returns the endpoint URL and a request counter.
fn serve(handler: Arc<Handler>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/infer", listener.local_addr().unwrap());
    let count = Arc::new(AtomicUsize::new(0));
    let c = count.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let (h, c) = (handler.clone(), c.clone());
            thread::spawn(move || {
                let mut w = stream.try_clone().unwrap();
                let mut r = BufReader::new(stream);
                while let Some(req) = read_request(&mut r) {
                    let n = c.fetch_add(1, Ordering::SeqCst);
                    let (status, body) = h(&req, n);
                    let reply = format!(
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
                        body.len()
                    );
                    if w.write_all(reply.as_bytes()).is_err() {
                        break;
                    }
                }
            });
        }
    });
    (url, count)
}

fn describe(id: &str) -> String {
    let (seat, rel) = match id {
        "chair" => (true, json!([{"kind": "facing_access", "subject": "chair", "object": "desk", "tau": 0.1}])),
        _ => (false, json!([])),
    };
    json!({
        "id": id,
        "description": {"summary": id, "has_openable_part": false, "is_seat": seat,
                        "requires_frontal_access": true, "viewing_target": false},
        "interaction": {"top_actions": [{"label": "use", "confidence": 0.8}]},
        "relations": rel
    })
    .to_string()
}

fn answer(req: &Value) -> (u16, String) {
    match req["stage"].as_str() {
        Some("describe") => (200, describe(req["focus"].as_str().unwrap())),
        Some("group") => (200, json!({"groups": [{"group_id": "work", "members": ["chair", "desk"]}]}).to_string()),
        _ => (400, "{}".into()),
    }
}

fn assets() -> Vec<ObjectAsset> {
    vec![
        ObjectAsset::new("chair", "office_chair", 0.5, 0.5, 0.9),
        ObjectAsset::new("desk", "desk", 1.2, 0.6, 0.75),
    ]
}

#[test]
fn remote_round_trip_builds_groups_and_relations() {
    let (url, count) = serve(Arc::new(|req: &Value, _| {
        assert!(req["instructions"].as_str().unwrap().len() > 10);
        assert_eq!(req["assets"].as_array().unwrap().len(), 2);
        answer(req)
    }));
    let backend = RemoteBackend::new(url);
    let inf = infer_relations(&assets(), &Room::new(4.0, 4.0, 2.5), "study", &backend).unwrap();
    assert_eq!(count.load(Ordering::SeqCst), 3);
    assert_eq!(inf.groups.len(), 1);
    let rels = &inf.groups[0].intra_relations;
    assert_eq!(rels.len(), 1);
    assert_eq!(rels[0].kind, RelationKind::FacingAccess);
    assert!(inf.descriptions["chair"].is_seat);
}

#[test]
fn server_errors_are_retried() {
    let (url, count) = serve(Arc::new(|req: &Value, n| if n == 0 { (503, "{}".into()) } else { answer(req) }));
    let mut backend = RemoteBackend::new(url);
    backend.retries = 1;
    infer_relations(&assets(), &Room::new(4.0, 4.0, 2.5), "", &backend).unwrap();
    assert_eq!(count.load(Ordering::SeqCst), 4);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, count) = serve(Arc::new(|_: &Value, _| (422, "{}".into())));
    let backend = RemoteBackend::new(url);
    let err = infer_relations(&assets(), &Room::new(4.0, 4.0, 2.5), "", &backend).unwrap_err();
    assert!(matches!(err, Error::Inference { retryable: false, .. }), "{err}");
    assert_eq!(count.load(Ordering::SeqCst), 1);
}

#[test]
fn malformed_payload_is_a_schema_error() {
    let (url, _) = serve(Arc::new(|req: &Value, _| match req["stage"].as_str() {
        Some("describe") => (200, json!({"id": req["focus"], "relations": []}).to_string()),
        _ => answer(req),
    }));
    let err = infer_relations(&assets(), &Room::new(4.0, 4.0, 2.5), "", &RemoteBackend::new(url)).unwrap_err();
    match err {
        Error::Schema(errs) => assert!(errs.iter().any(|e| e.contains("asset `chair`")), "{errs:?}"),
        other => panic!("{other}"),
    }
}
