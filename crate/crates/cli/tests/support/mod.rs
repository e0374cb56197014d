//! Shared helpers for the binary-level tests: a scripted chat endpoint and
//! small file utilities.
#![allow(dead_code)]

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;

use serde_json::{json, Value};

pub fn sgkit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sgkit"))
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn sgkit");
    assert!(
        out.status.success(),
        "sgkit failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap_or_default()
        .lines()
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reply {
    Ok,
    Unavailable,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct Request {
    pub img_id: String,
    pub reply: Reply,
}

#[derive(Default)]
struct State {
    calls: u64,
    failed_once: HashSet<String>,
    successes: usize,
    stall_after: Option<usize>,
    released: bool,
    log: Vec<Request>,
}

/// Chat endpoint that answers with a small graph per image. Every third call
/// overall is answered 503 unless that image already failed once. With a
/// stall limit set, calls past that many successes hang until released.
#[derive(Clone)]
pub struct MockChat {
    pub url: String,
    state: Arc<(Mutex<State>, Condvar)>,
}

/// Image URLs look like `https://img.test/<img_id>.jpg`.
pub fn image_url(img_id: &str) -> String {
    format!("https://img.test/{img_id}.jpg")
}

pub fn reply_graph(img_id: &str) -> Value {
    json!({
        "items": [
            {"item_id": 0, "label": "dog", "attributes": ["brown"]},
            {"item_id": 1, "label": "ball", "attributes": [format!("tag{img_id}")]}
        ],
        "relations": [{"triple_id": 0, "item1": 0, "relation": "chasing", "item2": 1}]
    })
}

impl MockChat {
    pub fn start(stall_after: Option<usize>) -> MockChat {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let state = Arc::new((
            Mutex::new(State {
                stall_after,
                ..State::default()
            }),
            Condvar::new(),
        ));
        let shared = state.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let shared = shared.clone();
                thread::spawn(move || serve(stream, &shared));
            }
        });
        MockChat { url, state }
    }

    /// Lifts the stall limit and lets hung calls go (they close without a reply).
    pub fn release(&self) {
        let (m, cv) = &*self.state;
        let mut s = m.lock().unwrap();
        s.stall_after = None;
        s.released = true;
        cv.notify_all();
    }

    pub fn log(&self) -> Vec<Request> {
        self.state.0.lock().unwrap().log.clone()
    }
}

fn serve(stream: TcpStream, shared: &(Mutex<State>, Condvar)) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut len = 0usize;
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((k, v)) = l.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; len];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let req: Value = serde_json::from_slice(&body).unwrap();
    let url = req["messages"][0]["content"][1]["image_url"]["url"].as_str().unwrap_or("");
    let img_id = url
        .trim_start_matches("https://img.test/")
        .trim_end_matches(".jpg")
        .to_string();

    let (m, cv) = shared;
    let mut s = m.lock().unwrap();
    s.calls += 1;
    let reply = if s.stall_after.is_some_and(|k| s.successes >= k) {
        Reply::Stalled
    } else if s.calls % 3 == 0 && s.failed_once.insert(img_id.clone()) {
        Reply::Unavailable
    } else {
        s.successes += 1;
        Reply::Ok
    };
    s.log.push(Request {
        img_id: img_id.clone(),
        reply,
    });
    let mut out = stream;
    match reply {
        Reply::Stalled => {
            while !s.released {
                s = cv.wait(s).unwrap();
            }
        }
        Reply::Unavailable => {
            drop(s);
            respond(&mut out, 503, br#"{"error":"overloaded"}"#);
        }
        Reply::Ok => {
            drop(s);
            let content = reply_graph(&img_id).to_string();
            let body = json!({"choices": [{"message": {"role": "assistant", "content": content}}]});
            respond(&mut out, 200, body.to_string().as_bytes());
        }
    }
}

fn respond(out: &mut TcpStream, status: u16, body: &[u8]) {
    let _ = write!(
        out,
        "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
        body.len()
    );
    let _ = out.write_all(body);
    let _ = out.flush();
}

/// Annotation manifest of `n` records, ids `a000..`.
pub fn write_manifest(dir: &Path, n: usize) -> (PathBuf, Vec<String>) {
    let ids: Vec<String> = (0..n).map(|i| format!("a{i:03}")).collect();
    let mut text = String::new();
    for id in &ids {
        let line = json!({
            "img_id": id,
            "name": format!("{id}.jpg"),
            "caption_ori": format!("a dog chasing a ball, shot {id}"),
            "score": "6.71",
            "url": image_url(id),
        });
        text.push_str(&line.to_string());
        text.push('\n');
    }
    let path = dir.join("manifest.jsonl");
    std::fs::write(&path, text).unwrap();
    (path, ids)
}

pub fn write_config(dir: &Path, url: &str, parallelism: usize) -> PathBuf {
    let path = dir.join("annotate.conf");
    std::fs::write(
        &path,
        format!(
            "# mock endpoint\nendpoint = {url}\nparallelism = {parallelism}\nmax_retries = 3\nbackoff_ms = 5\ntimeout_s = 30\n"
        ),
    )
    .unwrap();
    path
}
