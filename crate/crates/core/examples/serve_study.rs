//! Starts the study HTTP service on an ephemeral port, drives one session
//! over plain HTTP/1.1 and prints the responses.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::Arc;

use harmonist::simulate::synthetic_study_config;
use harmonist::study::{router, AppState, StudyEngine, SystemClock};

fn request(
    addr: SocketAddr,
    method: &str,
    path: &str,
    body: &str,
) -> std::io::Result<(String, String)> {
    let mut stream = TcpStream::connect(addr)?;
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nhost: localhost\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    )?;
    let mut out = String::new();
    stream.read_to_string(&mut out)?;
    let (head, payload) = out.split_once("\r\n\r\n").unwrap_or((&out, ""));
    let status = head.lines().next().unwrap_or_default().to_string();
    Ok((status, payload.to_string()))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let engine = StudyEngine::in_memory(synthetic_study_config(), 5, Arc::new(SystemClock))?;
    let state = AppState {
        engine: Arc::new(engine),
        admin_token: String::new(),
        audio_dir: std::env::temp_dir(),
        ui_dir: None,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    let listener = runtime.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let addr = listener.local_addr()?;
    runtime.spawn(async move { axum::serve(listener, router(state)).await });
    println!("listening on {addr}");

    let show = |(status, body): (String, String)| println!("{status}\n  {body}");
    show(request(addr, "GET", "/api/study", "")?);
    let (status, body) = request(addr, "POST", "/api/sessions", r#"{"consent": true}"#)?;
    let id = serde_json::from_str::<serde_json::Value>(&body)?["session_id"]
        .as_str()
        .unwrap_or_default()
        .to_string();
    show((status, body));
    show(request(
        addr,
        "GET",
        &format!("/api/sessions/{id}/pages/1"),
        "",
    )?);
    show(request(addr, "GET", "/api/export", "")?);
    Ok(())
}
