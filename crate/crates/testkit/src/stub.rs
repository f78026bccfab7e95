//! A tiny single-threaded HTTP server that mimics the OpenAlex grouped-count
//! endpoints, for exercising the client without a network.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

/// Counts served for one institution-year.
#[derive(Debug, Clone, Default)]
pub struct TallyFixture {
    /// Host-organization groups as `(key, display_name, count)`; keys are
    /// OpenAlex entity URLs or bare IDs.
    pub publisher_groups: Vec<(String, String, u64)>,
    pub total: u64,
    pub retracted: u64,
    pub open_access: u64,
    pub gold_open_access: u64,
}

/// Scripted behavior for one institution.
#[derive(Debug, Clone)]
pub enum Behavior {
    /// Serve fixtures per year; missing years serve zero counts.
    Serve(HashMap<i32, TallyFixture>),
    /// Always respond 404, as for an unknown ROR.
    NotFound,
    /// Respond with `status` for the first `times` requests, then serve.
    FailThenServe {
        status: u16,
        times: u32,
        fixture: TallyFixture,
    },
    /// Always respond with `status`.
    AlwaysFail { status: u16 },
    /// Respond 200 with a truncated JSON body.
    Malformed,
}

#[derive(Default)]
struct State {
    institutions: HashMap<String, Behavior>,
    failures_used: HashMap<String, u32>,
    requests: Vec<String>,
}

/// The in-process server; drops cleanly when the test ends.
pub struct StubOpenAlex {
    addr: SocketAddr,
    state: Arc<Mutex<State>>,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl StubOpenAlex {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let addr = listener.local_addr().expect("local addr");
        let state = Arc::new(Mutex::new(State::default()));
        let shutdown = Arc::new(AtomicBool::new(false));
        let handle = {
            let state = Arc::clone(&state);
            let shutdown = Arc::clone(&shutdown);
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if shutdown.load(Ordering::SeqCst) {
                        break;
                    }
                    if let Ok(stream) = stream {
                        handle_connection(stream, &state);
                    }
                }
            })
        };
        Self {
            addr,
            state,
            shutdown,
            handle: Some(handle),
        }
    }

    /// Base URL to point a `FetchConfig` at.
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn set_behavior(&self, ror: &str, behavior: Behavior) {
        self.state
            .lock()
            .unwrap()
            .institutions
            .insert(ror.to_string(), behavior);
    }

    /// Convenience: serve one fixture for `(ror, year)`.
    pub fn serve(&self, ror: &str, year: i32, fixture: TallyFixture) {
        let mut state = self.state.lock().unwrap();
        match state.institutions.get_mut(ror) {
            Some(Behavior::Serve(map)) => {
                map.insert(year, fixture);
            }
            _ => {
                state.institutions.insert(
                    ror.to_string(),
                    Behavior::Serve(HashMap::from([(year, fixture)])),
                );
            }
        }
    }

    /// Raw request lines received so far.
    pub fn requests(&self) -> Vec<String> {
        self.state.lock().unwrap().requests.clone()
    }

    pub fn request_count(&self) -> usize {
        self.state.lock().unwrap().requests.len()
    }
}

impl Drop for StubOpenAlex {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn handle_connection(stream: TcpStream, state: &Arc<Mutex<State>>) {
    let mut reader = BufReader::new(stream);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() || request_line.is_empty() {
        return;
    }
    // drain headers
    loop {
        let mut line = String::new();
        match reader.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) if line == "\r\n" || line == "\n" => break,
            Ok(_) => {}
            Err(_) => return,
        }
    }
    let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
    let (status, body) = respond(&path, state);
    let mut stream = reader.into_inner();
    let reason = match status {
        200 => "OK",
        404 => "Not Found",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Error",
    };
    let _ = write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len(),
    );
    let _ = stream.flush();
}

fn query_param(path: &str, name: &str) -> Option<String> {
    let query = path.split_once('?')?.1;
    query
        .split('&')
        .find_map(|pair| pair.strip_prefix(&format!("{name}=")))
        .map(str::to_string)
}

fn filter_field(filter: &str, name: &str) -> Option<String> {
    filter
        .split(',')
        .find_map(|part| part.strip_prefix(&format!("{name}:")))
        .map(str::to_string)
}

fn respond(path: &str, state: &Arc<Mutex<State>>) -> (u16, String) {
    let mut state = state.lock().unwrap();
    state.requests.push(path.to_string());

    let filter = query_param(path, "filter").unwrap_or_default();
    let group_by = query_param(path, "group_by").unwrap_or_default();
    let ror = filter_field(&filter, "institutions.ror").unwrap_or_default();
    let year: i32 = filter_field(&filter, "publication_year")
        .and_then(|y| y.parse().ok())
        .unwrap_or(0);

    let behavior = match state.institutions.get(&ror) {
        Some(b) => b.clone(),
        None => return (404, r#"{"error":"unknown ror"}"#.to_string()),
    };
    match behavior {
        Behavior::NotFound => (404, r#"{"error":"not found"}"#.to_string()),
        Behavior::AlwaysFail { status } => (status, r#"{"error":"scripted failure"}"#.to_string()),
        Behavior::Malformed => (200, r#"{"meta": {"count": 12"#.to_string()),
        Behavior::FailThenServe {
            status,
            times,
            fixture,
        } => {
            let used = state.failures_used.entry(ror.clone()).or_insert(0);
            if *used < times {
                *used += 1;
                (status, r#"{"error":"scripted failure"}"#.to_string())
            } else {
                (200, grouped_body(&fixture, &group_by))
            }
        }
        Behavior::Serve(map) => {
            let fixture = map.get(&year).cloned().unwrap_or_default();
            (200, grouped_body(&fixture, &group_by))
        }
    }
}

fn grouped_body(fixture: &TallyFixture, group_by: &str) -> String {
    let groups: Vec<serde_json::Value> = match group_by {
        "primary_location.source.host_organization" => fixture
            .publisher_groups
            .iter()
            .map(|(key, name, count)| {
                serde_json::json!({"key": key, "key_display_name": name, "count": count})
            })
            .collect(),
        "is_retracted" => vec![
            serde_json::json!({"key": "true", "key_display_name": "true", "count": fixture.retracted}),
            serde_json::json!({"key": "false", "key_display_name": "false", "count": fixture.total - fixture.retracted}),
        ],
        "open_access.is_oa" => vec![
            serde_json::json!({"key": "true", "key_display_name": "true", "count": fixture.open_access}),
            serde_json::json!({"key": "false", "key_display_name": "false", "count": fixture.total - fixture.open_access}),
        ],
        "open_access.oa_status" => vec![
            serde_json::json!({"key": "gold", "key_display_name": "gold", "count": fixture.gold_open_access}),
            serde_json::json!({"key": "green", "key_display_name": "green", "count": fixture.open_access - fixture.gold_open_access}),
            serde_json::json!({"key": "closed", "key_display_name": "closed", "count": fixture.total - fixture.open_access}),
        ],
        _ => Vec::new(),
    };
    serde_json::json!({
        "meta": {"count": fixture.total, "db_response_time_ms": 7, "page": 1, "per_page": 200},
        "group_by": groups,
    })
    .to_string()
}
