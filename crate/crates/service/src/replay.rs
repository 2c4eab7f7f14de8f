//! Request logs and in-process replay.

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde::{Deserialize, Serialize};
use tower::ServiceExt;

/// One logged request, a line of the `/log` JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedRequest {
    pub method: String,
    pub path: String,
    pub body: serde_json::Value,
}

impl LoggedRequest {
    pub fn post(path: impl Into<String>, body: serde_json::Value) -> Self {
        Self {
            method: "POST".into(),
            path: path.into(),
            body,
        }
    }

    pub fn to_jsonl(log: &[LoggedRequest]) -> String {
        log.iter()
            .map(|r| serde_json::to_string(r).expect("request log serializes") + "\n")
            .collect()
    }

    pub fn parse_jsonl(text: &str) -> serde_json::Result<Vec<LoggedRequest>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect()
    }
}

/// Sends one request to the router in-process and returns status and body.
pub async fn send(app: &Router, method: Method, path: &str, body: Option<&serde_json::Value>) -> (StatusCode, String) {
    let mut builder = Request::builder().method(method).uri(path);
    let body = match body {
        Some(v) => {
            builder = builder.header(header::CONTENT_TYPE, "application/json");
            Body::from(serde_json::to_vec(v).expect("JSON value serializes"))
        }
        None => Body::empty(),
    };
    let response = app
        .clone()
        .oneshot(builder.body(body).expect("valid request"))
        .await
        .expect("router is infallible");
    let status = response.status();
    let bytes = response
        .into_body()
        .collect()
        .await
        .expect("in-memory body")
        .to_bytes();
    (status, String::from_utf8_lossy(&bytes).into_owned())
}

/// Replays a request log in order against `app`, returning each response.
pub async fn replay(app: &Router, log: &[LoggedRequest]) -> anyhow::Result<Vec<(StatusCode, String)>> {
    let mut out = Vec::with_capacity(log.len());
    for r in log {
        let method = Method::from_bytes(r.method.as_bytes())?;
        let body = (!r.body.is_null()).then_some(&r.body);
        out.push(send(app, method, &r.path, body).await);
    }
    Ok(out)
}
