use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{check_candidates, Backend, BackendError, BackendRequest, BackendResponse, RequestKind, ResponseOutput};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    #[serde(with = "millis")]
    pub initial_backoff: Duration,
    #[serde(with = "millis")]
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_backoff: Duration::from_millis(200),
            max_backoff: Duration::from_secs(5),
        }
    }
}

impl RetryPolicy {
    /// Exponential backoff before retry number `retry` (starting at 1).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 2u32.saturating_pow(retry.saturating_sub(1));
        self.initial_backoff.saturating_mul(factor).min(self.max_backoff)
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Base URL, e.g. `http://127.0.0.1:8080`.
    pub base_url: String,
    #[serde(with = "millis")]
    pub timeout: Duration,
    #[serde(default)]
    pub retry: RetryPolicy,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(60),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Serialize)]
struct GenerateBody<'a> {
    input: &'a str,
    max_new_units: u32,
}

#[derive(Deserialize)]
struct GenerateReply {
    output: String,
}

#[derive(Serialize)]
struct FillMaskBody<'a> {
    input: &'a str,
    candidates: &'a [String],
}

#[derive(Deserialize)]
struct FillMaskReply {
    chosen: String,
    scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthStatus {
    pub status: String,
    pub model: String,
}

/// Client for the `/generate`, `/fill-mask` and `/health` wire protocol.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    agent: Agent,
    config: EndpointConfig,
}

fn is_retryable(e: &BackendError) -> bool {
    match e {
        BackendError::Timeout { .. } | BackendError::Transport { .. } => true,
        BackendError::Status { status, .. } => *status >= 500 || *status == 429,
        _ => false,
    }
}

impl HttpBackend {
    pub fn new(config: EndpointConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent, config }
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn health(&self) -> Result<HealthStatus, BackendError> {
        let id = "<health>";
        self.with_retries(id, || {
            let response = self
                .agent
                .get(format!("{}/health", self.config.base_url))
                .call()
                .map_err(|e| transport_error(id, e))?;
            read_json(id, response)
        })
    }

    fn with_retries<T>(&self, id: &str, mut attempt: impl FnMut() -> Result<T, BackendError>) -> Result<T, BackendError> {
        let mut retries = 0;
        loop {
            match attempt() {
                Ok(v) => return Ok(v),
                Err(e) if is_retryable(&e) => {
                    if retries == self.config.retry.max_retries {
                        return Err(BackendError::RetriesExhausted {
                            id: id.to_string(),
                            retries,
                            last: Box::new(e),
                        });
                    }
                    retries += 1;
                    std::thread::sleep(self.config.retry.backoff(retries));
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn post<B: Serialize, R: for<'de> Deserialize<'de>>(&self, id: &str, path: &str, body: &B) -> Result<R, BackendError> {
        self.with_retries(id, || {
            let response = self
                .agent
                .post(format!("{}{path}", self.config.base_url))
                .send_json(body)
                .map_err(|e| transport_error(id, e))?;
            read_json(id, response)
        })
    }
}

fn transport_error(id: &str, e: ureq::Error) -> BackendError {
    match e {
        ureq::Error::Timeout(_) => BackendError::Timeout { id: id.to_string() },
        ureq::Error::StatusCode(status) => BackendError::Status {
            id: id.to_string(),
            status,
        },
        other => BackendError::Transport {
            id: id.to_string(),
            message: other.to_string(),
        },
    }
}

fn read_json<R: for<'de> Deserialize<'de>>(id: &str, mut response: ureq::http::Response<ureq::Body>) -> Result<R, BackendError> {
    let status = response.status().as_u16();
    if !(200..300).contains(&status) {
        return Err(BackendError::Status {
            id: id.to_string(),
            status,
        });
    }
    let text = response.body_mut().read_to_string().map_err(|e| transport_error(id, e))?;
    serde_json::from_str(&text).map_err(|e| BackendError::MalformedResponse {
        id: id.to_string(),
        message: e.to_string(),
    })
}

impl Backend for HttpBackend {
    fn respond(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let start = Instant::now();
        let output = match &request.kind {
            RequestKind::Generate { max_output_units } => {
                let reply: GenerateReply = self.post(
                    &request.id,
                    "/generate",
                    &GenerateBody {
                        input: &request.input,
                        max_new_units: *max_output_units,
                    },
                )?;
                ResponseOutput::Generated(reply.output)
            }
            RequestKind::FillMask { candidates } => {
                let reply: FillMaskReply = self.post(
                    &request.id,
                    "/fill-mask",
                    &FillMaskBody {
                        input: &request.input,
                        candidates,
                    },
                )?;
                ResponseOutput::Filled {
                    chosen: reply.chosen,
                    scores: reply.scores,
                }
            }
        };
        let response = BackendResponse {
            output,
            latency_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        check_candidates(request, &response)?;
        Ok(response)
    }
}
