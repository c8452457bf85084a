//! Embedding providers: a file-backed lookup table or a remote HTTP service.
//!
//! The remote contract is one `POST` with body `{"inputs": [...]}` answered by
//! `{"vectors": [[...], ...]}`, one vector per input in input order.

use std::collections::HashMap;
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("no vector for input '{0}'")]
    UnknownInput(String),
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("malformed embedding response: {0}")]
    MalformedResponse(String),
    #[error("embedding has {found} dimensions, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Sends one JSON request and returns the decoded JSON reply.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, authorization: Option<&str>, body: &Value) -> Result<Value, EmbedError>;
}

/// Blocking HTTP transport.
#[derive(Debug, Clone)]
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbedError::TransportError(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, authorization: Option<&str>, body: &Value) -> Result<Value, EmbedError> {
        let mut req = self.client.post(url).json(body);
        if let Some(auth) = authorization {
            req = req.header(reqwest::header::AUTHORIZATION, auth);
        }
        let resp = req.send().map_err(|e| EmbedError::TransportError(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(EmbedError::TransportError(format!("{url} answered {status}")));
        }
        resp.json::<Value>()
            .map_err(|e| EmbedError::MalformedResponse(e.to_string()))
    }
}

/// In-memory map from input id to vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OfflineProvider<T> {
    vectors: HashMap<String, Vec<T>>,
}

impl<T: Scalar> OfflineProvider<T> {
    pub fn new(vectors: HashMap<String, Vec<T>>) -> Self {
        Self { vectors }
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<T>) {
        self.vectors.insert(id.into(), vector);
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub struct RemoteProvider {
    pub endpoint: String,
    /// Full `Authorization` header value, e.g. `Bearer <token>`.
    pub authorization: Option<String>,
    pub transport: Box<dyn Transport>,
}

impl std::fmt::Debug for RemoteProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteProvider")
            .field("endpoint", &self.endpoint)
            .field("authorization", &self.authorization.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

#[derive(Debug)]
pub enum ProviderConfig<T> {
    Offline(OfflineProvider<T>),
    Remote(RemoteProvider),
}

fn check_dims<T>(vectors: &[Vec<T>], expected: Option<usize>) -> Result<(), EmbedError> {
    let Some(expected) = expected.or_else(|| vectors.first().map(Vec::len)) else {
        return Ok(());
    };
    match vectors.iter().find(|v| v.len() != expected) {
        Some(v) => Err(EmbedError::DimensionMismatch {
            expected,
            found: v.len(),
        }),
        None => Ok(()),
    }
}

fn parse_vectors<T: Scalar>(reply: &Value, count: usize) -> Result<Vec<Vec<T>>, EmbedError> {
    let malformed = |msg: &str| EmbedError::MalformedResponse(msg.to_string());
    let rows = reply
        .get("vectors")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing 'vectors' array"))?;
    if rows.len() != count {
        return Err(EmbedError::MalformedResponse(format!(
            "expected {count} vectors, got {}",
            rows.len()
        )));
    }
    rows.iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| malformed("vector is not an array"))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .filter(|f| f.is_finite())
                        .and_then(T::from_f64)
                        .ok_or_else(|| malformed("vector component is not a finite number"))
                })
                .collect()
        })
        .collect()
}

/// Embeds `inputs` with the given provider.
///
/// When `expected_dim` is set every returned vector must have that length;
/// otherwise all vectors must agree with the first. Remote calls are retried
/// once on transport failure.
pub fn embed<T: Scalar>(
    inputs: &[String],
    provider: &ProviderConfig<T>,
    expected_dim: Option<usize>,
) -> Result<Vec<Vec<T>>, EmbedError> {
    let vectors = match provider {
        ProviderConfig::Offline(map) => inputs
            .iter()
            .map(|id| {
                map.vectors
                    .get(id)
                    .cloned()
                    .ok_or_else(|| EmbedError::UnknownInput(id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?,
        ProviderConfig::Remote(remote) => {
            let body = json!({ "inputs": inputs });
            let auth = remote.authorization.as_deref();
            let reply = match remote.transport.post_json(&remote.endpoint, auth, &body) {
                Err(EmbedError::TransportError(first)) => {
                    log::warn!("embedding request failed ({first}), retrying once");
                    remote.transport.post_json(&remote.endpoint, auth, &body)?
                }
                other => other?,
            };
            parse_vectors(&reply, inputs.len())?
        }
    };
    check_dims(&vectors, expected_dim)?;
    Ok(vectors)
}
