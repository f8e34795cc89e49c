//! Anything that maps a rendered input to generated text or to a chosen
//! answer word.
//!
//! [`GoldOracle`] and [`CorruptionOracle`] are test doubles that answer from
//! the gold renderings; [`HttpBackend`] talks to a model server over JSON.

mod http;
mod oracle;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompting::MLM_SLOT;

pub use http::{EndpointConfig, HealthStatus, HttpBackend, RetryPolicy};
pub use oracle::{CorruptionOracle, GoldEntry, GoldOracle, GoldStore};

/// Default bound on concurrent in-flight requests.
pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("example {id}: not present in the gold store")]
    UnknownExample { id: String },

    #[error("example {id}: invalid request: {message}")]
    InvalidRequest { id: String, message: String },

    #[error("example {id}: request timed out")]
    Timeout { id: String },

    #[error("example {id}: server returned status {status}")]
    Status { id: String, status: u16 },

    #[error("example {id}: transport error: {message}")]
    Transport { id: String, message: String },

    #[error("example {id}: malformed response: {message}")]
    MalformedResponse { id: String, message: String },

    #[error("example {id}: giving up after {retries} retries: {last}")]
    RetriesExhausted {
        id: String,
        retries: u32,
        #[source]
        last: Box<BackendError>,
    },
}

impl BackendError {
    pub fn example_id(&self) -> &str {
        match self {
            BackendError::UnknownExample { id }
            | BackendError::InvalidRequest { id, .. }
            | BackendError::Timeout { id }
            | BackendError::Status { id, .. }
            | BackendError::Transport { id, .. }
            | BackendError::MalformedResponse { id, .. }
            | BackendError::RetriesExhausted { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RequestKind {
    /// Greedy generation of at most `max_output_units` units.
    Generate { max_output_units: u32 },
    /// Choose one of `candidates` for the single `[MASK]` slot.
    FillMask { candidates: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub id: String,
    pub input: String,
    pub kind: RequestKind,
}

impl BackendRequest {
    pub fn generate(id: impl Into<String>, input: impl Into<String>, max_output_units: u32) -> Result<Self, BackendError> {
        let id = id.into();
        if max_output_units == 0 {
            return Err(BackendError::InvalidRequest {
                id,
                message: "max_output_units must be positive".into(),
            });
        }
        Ok(Self {
            id,
            input: input.into(),
            kind: RequestKind::Generate { max_output_units },
        })
    }

    /// The input must contain exactly one `[MASK]` answer slot.
    pub fn fill_mask(id: impl Into<String>, input: impl Into<String>, candidates: Vec<String>) -> Result<Self, BackendError> {
        let id = id.into();
        let input = input.into();
        let slots = input.matches(MLM_SLOT).count();
        if slots != 1 {
            return Err(BackendError::InvalidRequest {
                id,
                message: format!("expected exactly one {MLM_SLOT} slot, found {slots}"),
            });
        }
        if candidates.is_empty() {
            return Err(BackendError::InvalidRequest {
                id,
                message: "fill-mask request without candidates".into(),
            });
        }
        Ok(Self {
            id,
            input,
            kind: RequestKind::FillMask { candidates },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseOutput {
    Generated(String),
    Filled { chosen: String, scores: BTreeMap<String, f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub output: ResponseOutput,
    pub latency_ms: f64,
}

impl BackendResponse {
    /// Generated text, or the chosen word of a fill-mask response.
    pub fn text(&self) -> &str {
        match &self.output {
            ResponseOutput::Generated(s) => s,
            ResponseOutput::Filled { chosen, .. } => chosen,
        }
    }
}

/// A model (or a stand-in) answering rendered inputs. Implementations must
/// tolerate concurrent calls.
pub trait Backend: Send + Sync {
    fn respond(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn respond(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).respond(request)
    }
}

/// Sends all requests with at most `max_in_flight` outstanding at once.
/// Results come back in request order whatever the completion order.
pub fn run_requests<B: Backend + ?Sized>(
    backend: &B,
    requests: &[BackendRequest],
    max_in_flight: usize,
) -> Vec<Result<BackendResponse, BackendError>> {
    let workers = max_in_flight.max(1).min(requests.len());
    if workers <= 1 {
        return requests.iter().map(|r| backend.respond(r)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<BackendResponse, BackendError>>>> =
        requests.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(request) = requests.get(i) else { break };
                let result = backend.respond(request);
                *slots[i].lock().expect("result slot poisoned") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("result slot poisoned").expect("every request answered"))
        .collect()
}

/// Checks a fill-mask response against the candidates of its request.
pub(crate) fn check_candidates(request: &BackendRequest, response: &BackendResponse) -> Result<(), BackendError> {
    if let (RequestKind::FillMask { candidates }, ResponseOutput::Filled { chosen, .. }) =
        (&request.kind, &response.output)
    {
        if !candidates.iter().any(|c| c == chosen) {
            return Err(BackendError::MalformedResponse {
                id: request.id.clone(),
                message: format!("chosen word {chosen:?} is not one of the candidates"),
            });
        }
    }
    Ok(())
}
