//! Retry and wire-format contract of the HTTP completer against a local
//! stub server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use ragbench_core::gateway::{GatewayError, HttpCompleter, ModelEndpoint};

struct Stub {
    url: String,
    bodies: Arc<Mutex<Vec<(String, String)>>>,
    handle: JoinHandle<()>,
}

fn ok_body(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

/// Serves one scripted `(status, body)` per connection, then stops.
fn stub(script: Vec<(u16, String)>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let seen = bodies.clone();
    let handle = std::thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut auth = String::new();
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            loop {
                line.clear();
                reader.read_line(&mut line).unwrap();
                let l = line.trim_end();
                if l.is_empty() {
                    break;
                }
                let lower = l.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    auth = l["authorization:".len()..].trim().to_string();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            seen.lock().unwrap().push((String::from_utf8(buf).unwrap(), auth));
            let mut stream = stream;
            let resp = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(resp.as_bytes()).unwrap();
        }
    });
    Stub { url, bodies, handle }
}

fn endpoint(url: &str, retries: u32) -> ModelEndpoint {
    let mut ep = ModelEndpoint::new(url, "stub-model");
    ep.max_retries = retries;
    ep.backoff_base_ms = 1;
    ep.timeout_secs = 5.0;
    ep
}

#[test]
fn first_attempt_success() {
    let s = stub(vec![(200, ok_body("The answer is B."))]);
    let c = HttpCompleter::new(endpoint(&s.url, 3)).unwrap();
    let out = c.complete_prompt("Question: q\nA. x\nB. y\nAnswer:", Some(11)).unwrap();
    assert_eq!(out.text, "The answer is B.");
    assert_eq!(out.attempt, 1);
    s.handle.join().unwrap();
    let bodies = s.bodies.lock().unwrap();
    let body: serde_json::Value = serde_json::from_str(&bodies[0].0).unwrap();
    assert_eq!(body["model"], "stub-model");
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["stream"], false);
    assert_eq!(body["seed"], 11);
    assert_eq!(bodies[0].1, "");
}

#[test]
fn retries_server_errors_then_succeeds() {
    let s = stub(vec![
        (500, "{}".into()),
        (429, "{}".into()),
        (200, ok_body("C")),
    ]);
    let out = HttpCompleter::new(endpoint(&s.url, 3)).unwrap().complete_prompt("p", None).unwrap();
    assert_eq!((out.text.as_str(), out.attempt), ("C", 3));
    s.handle.join().unwrap();
}

#[test]
fn gives_up_after_max_retries() {
    let s = stub(vec![(503, "down".into()), (503, "down".into())]);
    let err = HttpCompleter::new(endpoint(&s.url, 1)).unwrap().complete_prompt("p", None).unwrap_err();
    match err {
        GatewayError::RetriesExhausted { attempts, last } => {
            assert_eq!(attempts, 2);
            assert!(last.contains("503"), "{last}");
        }
        other => panic!("{other:?}"),
    }
    s.handle.join().unwrap();
}

#[test]
fn client_errors_are_not_retried() {
    let s = stub(vec![(400, "bad request".into())]);
    let err = HttpCompleter::new(endpoint(&s.url, 3)).unwrap().complete_prompt("p", None).unwrap_err();
    assert!(matches!(err, GatewayError::Http { status: 400, .. }), "{err:?}");
    s.handle.join().unwrap();
}

#[test]
fn bearer_token_comes_from_named_env_var() {
    std::env::set_var("RAGBENCH_TEST_KEY", "sk-test");
    let s = stub(vec![(200, ok_body("A"))]);
    let mut ep = endpoint(&s.url, 0);
    ep.api_key_env = Some("RAGBENCH_TEST_KEY".into());
    HttpCompleter::new(ep).unwrap().complete_prompt("p", None).unwrap();
    s.handle.join().unwrap();
    assert_eq!(s.bodies.lock().unwrap()[0].1, "Bearer sk-test");

    let mut ep = endpoint("http://127.0.0.1:9/v1", 0);
    ep.api_key_env = Some("RAGBENCH_TEST_KEY_UNSET".into());
    assert!(matches!(HttpCompleter::new(ep), Err(GatewayError::MissingApiKey(_))));
}

#[test]
fn malformed_body_is_an_error() {
    let s = stub(vec![(200, r#"{"choices": []}"#.into())]);
    let err = HttpCompleter::new(endpoint(&s.url, 2)).unwrap().complete_prompt("p", None).unwrap_err();
    assert!(matches!(err, GatewayError::MalformedResponse(_)), "{err:?}");
    s.handle.join().unwrap();
}
