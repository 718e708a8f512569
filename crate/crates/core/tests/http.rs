//! HttpBackend against a local stub server.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use shapecraft::llm::{AgentRole, BackendConfig, ChatBackend, ChatMessage, ChatRequest, HttpBackend, LlmError};

struct Seen {
    head: String,
    body: String,
}

/// Serves one scripted `(status, body)` per connection and returns what it
/// received.
fn stub(replies: Vec<(u16, &'static str)>) -> (String, thread::JoinHandle<Vec<Seen>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut seen = Vec::new();
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut r = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            loop {
                let mut line = String::new();
                r.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                head.push_str(&line);
            }
            let len: usize = head
                .lines()
                .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse().unwrap()))
                .unwrap_or(0);
            let mut buf = vec![0; len];
            r.read_exact(&mut buf).unwrap();
            seen.push(Seen { head, body: String::from_utf8(buf).unwrap() });
            let mut s = stream;
            write!(
                s,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        seen
    });
    (url, handle)
}

fn backend(url: &str) -> HttpBackend {
    let mut cfg = BackendConfig::new(url, "stub-model");
    cfg.backoff_ms = 1;
    cfg.max_retries = 3;
    cfg.timeout_secs = 10;
    let configs: BTreeMap<_, _> = AgentRole::ALL.into_iter().map(|r| (r, cfg.clone())).collect();
    HttpBackend::with_key(configs, "sk-test", false).unwrap()
}

fn request() -> ChatRequest {
    ChatRequest::new(
        AgentRole::Evaluator,
        vec![ChatMessage::system("judge"), ChatMessage::user("look").with_images(vec![vec![1, 2, 3]])],
    )
}

const OK: &str = r#"{"choices": [{"message": {"role": "assistant", "content": "fine"}}]}"#;

#[test]
fn retries_server_errors() {
    let (url, h) = stub(vec![(500, "{}"), (503, "{}"), (200, OK)]);
    let reply = backend(&url).complete(&request()).unwrap();
    assert_eq!(reply, "fine");
    let seen = h.join().unwrap();
    assert_eq!(seen.len(), 3);
    let first = &seen[0];
    assert!(first.head.starts_with("POST /v1/chat/completions "));
    assert!(first.head.to_ascii_lowercase().contains("authorization: bearer sk-test"));
    let body: serde_json::Value = serde_json::from_str(&first.body).unwrap();
    assert_eq!(body["model"], "stub-model");
    assert_eq!(body["messages"][1]["content"][1]["image_url"]["url"], "data:image/png;base64,AQID");
}

#[test]
fn unauthorized_is_not_retried() {
    let (url, h) = stub(vec![(401, "{\"error\": \"bad key\"}")]);
    let err = backend(&url).complete(&request()).unwrap_err();
    assert!(matches!(err, LlmError::Auth(_)), "{err:?}");
    assert_eq!(h.join().unwrap().len(), 1);
}

#[test]
fn gives_up_after_retries() {
    let (url, h) = stub(vec![(500, "{}"); 4]);
    let err = backend(&url).complete(&request()).unwrap_err();
    assert!(matches!(err, LlmError::Transport(ref m) if m.contains("4 attempts")), "{err:?}");
    assert_eq!(h.join().unwrap().len(), 4);
}

#[test]
fn malformed_body() {
    let (url, h) = stub(vec![(200, "{\"choices\": []}")]);
    let err = backend(&url).complete(&request()).unwrap_err();
    assert!(matches!(err, LlmError::MalformedResponse(_)), "{err:?}");
    h.join().unwrap();
}
