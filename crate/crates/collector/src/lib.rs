//! Administers rendered questionnaire prompts to a text-generation HTTP
//! endpoint and records every reply, failed or not, as a [`RawTranscript`].
//!
//! Requests are paced by a shared rate limiter, run with a bounded number in
//! flight, and are emitted in request order. Server errors and rate-limit
//! responses are retried with capped exponential backoff; a refused credential
//! stops the session immediately.

mod adapter;
mod limiter;

use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt, TryStreamExt};
use psychoprobe_core::questionnaire::QuestionnaireBank;
use psychoprobe_core::transcript::{prompt_sha256, RawTranscript, SamplingConfig};
use thiserror::Error;
use url::Url;
use uuid::Uuid;

pub use adapter::Adapter;
pub use limiter::RateLimiter;

/// Environment variable holding the endpoint credential.
pub const API_KEY_VAR: &str = "PSYCHOPROBE_API_KEY";

const ID_NAMESPACE: Uuid = Uuid::from_u128(0x6f1c_2a4e_93d0_4b7e_8a55_0c3e_71d2_9f10);

#[derive(Debug, Error)]
pub enum CollectorError {
    #[error("invalid session plan: {0}")]
    InvalidPlan(String),
    #[error("invalid sampling configuration: {0}")]
    InvalidSampling(String),
    #[error("endpoint {url} unreachable after {attempts} attempts: {reason}")]
    EndpointUnreachable { url: String, attempts: u32, reason: String },
    #[error("credential rejected by {url} (HTTP {status})")]
    AuthRejected { url: String, status: u16 },
    #[error("HTTP client setup failed: {0}")]
    Client(String),
}

/// One collection run for a single language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionPlan {
    language: String,
    n_requests: usize,
    seed: u64,
}

impl SessionPlan {
    pub fn new(language: impl Into<String>, n_requests: usize, seed: u64) -> Result<Self, CollectorError> {
        let language = language.into();
        if n_requests == 0 {
            return Err(CollectorError::InvalidPlan("n_requests must be at least 1".into()));
        }
        if language.is_empty() {
            return Err(CollectorError::InvalidPlan("language tag is empty".into()));
        }
        Ok(SessionPlan {
            language,
            n_requests,
            seed,
        })
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn n_requests(&self) -> usize {
        self.n_requests
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Transcript id of request `index`: a name-based UUID of (seed, language,
    /// index), so re-running a plan reproduces its ids.
    pub fn transcript_id(&self, index: usize) -> Uuid {
        Uuid::new_v5(&ID_NAMESPACE, format!("{}/{}/{}", self.seed, self.language, index).as_bytes())
    }
}

/// Target URL plus credential. The key is never printed.
#[derive(Clone)]
pub struct Endpoint {
    pub url: Url,
    api_key: Option<String>,
}

impl std::fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Endpoint")
            .field("url", &self.url.as_str())
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl Endpoint {
    /// Reads the credential from [`API_KEY_VAR`]; an unset or empty variable
    /// means no `Authorization` header is sent.
    pub fn from_env(url: Url) -> Self {
        let api_key = std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty());
        Endpoint { url, api_key }
    }

    pub fn new(url: Url, api_key: Option<String>) -> Self {
        Endpoint { url, api_key }
    }

    pub fn has_credential(&self) -> bool {
        self.api_key.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 5,
            base_delay: Duration::from_secs(2),
            max_delay: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): base * 2^(attempt-1), capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt.saturating_sub(1));
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectorOptions {
    /// Minimum spacing between request starts.
    pub min_interval: Duration,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    pub request_timeout: Duration,
    pub adapter: Adapter,
}

impl Default for CollectorOptions {
    fn default() -> Self {
        CollectorOptions {
            min_interval: Duration::from_secs(1),
            max_in_flight: 2,
            retry: RetryPolicy::default(),
            request_timeout: Duration::from_secs(120),
            adapter: Adapter::Completions,
        }
    }
}

/// A retried attempt, kept alongside the transcripts and logged at warn level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryRecord {
    pub request: usize,
    pub attempt: u32,
    pub reason: String,
    pub delay: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    /// Exactly `n_requests` transcripts, in request order.
    pub transcripts: Vec<RawTranscript>,
    pub retries: Vec<RetryRecord>,
}

enum Attempt {
    Text(String),
    /// Worth retrying (5xx, 429, transport failure).
    Transient { reason: String, transport: bool },
    /// Recorded as a failed transcript without retrying.
    Permanent(String),
    Auth(u16),
}

struct Shared<'a> {
    client: reqwest::Client,
    endpoint: &'a Endpoint,
    options: &'a CollectorOptions,
    limiter: RateLimiter,
    body: serde_json::Value,
}

impl Shared<'_> {
    async fn attempt(&self) -> Attempt {
        self.limiter.acquire().await;
        let mut req = self.client.post(self.endpoint.url.clone()).json(&self.body);
        if let Some(key) = &self.endpoint.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Transient {
                    reason: e.to_string(),
                    transport: true,
                }
            }
        };
        let status = resp.status();
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Attempt::Auth(status.as_u16());
        }
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Attempt::Transient {
                reason: format!("HTTP {}", status.as_u16()),
                transport: false,
            };
        }
        if !status.is_success() {
            return Attempt::Permanent(format!("HTTP {}", status.as_u16()));
        }
        match resp.json::<serde_json::Value>().await {
            Ok(v) => match self.options.adapter.extract_text(&v) {
                Some(text) => Attempt::Text(text),
                None => Attempt::Permanent("response has no generated text".into()),
            },
            Err(e) => Attempt::Permanent(format!("malformed response body: {e}")),
        }
    }

    async fn request(
        &self,
        plan: &SessionPlan,
        sampling: &SamplingConfig,
        prompt_hash: &str,
        index: usize,
    ) -> Result<(RawTranscript, Vec<RetryRecord>), CollectorError> {
        let mut retries = Vec::new();
        let mut attempt_no = 0u32;
        let started = Instant::now();
        let (text, error) = loop {
            attempt_no += 1;
            let reason = match self.attempt().await {
                Attempt::Text(t) => break (t, None),
                Attempt::Permanent(msg) => break (String::new(), Some(msg)),
                Attempt::Auth(status) => {
                    return Err(CollectorError::AuthRejected {
                        url: self.endpoint.url.to_string(),
                        status,
                    })
                }
                Attempt::Transient { reason, transport } => {
                    if attempt_no > self.options.retry.max_retries {
                        if transport {
                            return Err(CollectorError::EndpointUnreachable {
                                url: self.endpoint.url.to_string(),
                                attempts: attempt_no,
                                reason,
                            });
                        }
                        break (String::new(), Some(format!("{reason} after {attempt_no} attempts")));
                    }
                    reason
                }
            };
            let delay = self.options.retry.delay(attempt_no);
            log::warn!(
                "request {index} ({}) attempt {attempt_no} failed: {reason}; retrying in {} ms",
                plan.language,
                delay.as_millis()
            );
            retries.push(RetryRecord {
                request: index,
                attempt: attempt_no,
                reason,
                delay,
            });
            tokio::time::sleep(delay).await;
        };
        let transcript = RawTranscript {
            id: plan.transcript_id(index),
            language: plan.language.clone(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            prompt_sha256: prompt_hash.to_string(),
            sampling: sampling.clone(),
            text,
            endpoint_latency_ms: started.elapsed().as_millis() as u64,
            error,
        };
        Ok((transcript, retries))
    }
}

/// Sends the rendered prompt `plan.n_requests()` times, each as an independent
/// zero-shot request.
pub async fn administer(
    plan: &SessionPlan,
    bank: &QuestionnaireBank,
    sampling: &SamplingConfig,
    endpoint: &Endpoint,
    options: &CollectorOptions,
) -> Result<Collection, CollectorError> {
    sampling.validate().map_err(CollectorError::InvalidSampling)?;
    if options.max_in_flight == 0 {
        return Err(CollectorError::InvalidPlan("max_in_flight must be at least 1".into()));
    }
    let prompt = bank.render_prompt();
    let prompt_hash = prompt_sha256(&prompt);
    let client = reqwest::Client::builder()
        .timeout(options.request_timeout)
        .build()
        .map_err(|e| CollectorError::Client(e.to_string()))?;
    let shared = Shared {
        client,
        endpoint,
        options,
        limiter: RateLimiter::new(options.min_interval),
        body: options.adapter.request_body(&prompt, sampling),
    };
    let shared = &shared;
    let prompt_hash = prompt_hash.as_str();
    let results: Vec<(RawTranscript, Vec<RetryRecord>)> = stream::iter(0..plan.n_requests)
        .map(|i| shared.request(plan, sampling, prompt_hash, i))
        .buffered(options.max_in_flight)
        .try_collect()
        .await?;
    let mut transcripts = Vec::with_capacity(results.len());
    let mut retries = Vec::new();
    for (t, r) in results {
        transcripts.push(t);
        retries.extend(r);
    }
    let failed = transcripts.iter().filter(|t| t.is_failure()).count();
    log::info!(
        "{}: {} transcripts collected, {failed} failed, {} retries",
        plan.language,
        transcripts.len(),
        retries.len()
    );
    Ok(Collection { transcripts, retries })
}

/// [`administer`] on a private multi-threaded runtime.
pub fn administer_blocking(
    plan: &SessionPlan,
    bank: &QuestionnaireBank,
    sampling: &SamplingConfig,
    endpoint: &Endpoint,
    options: &CollectorOptions,
) -> Result<Collection, CollectorError> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CollectorError::Client(e.to_string()))?;
    rt.block_on(administer(plan, bank, sampling, endpoint, options))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_requests_rejected() {
        assert!(matches!(SessionPlan::new("de", 0, 1), Err(CollectorError::InvalidPlan(_))));
    }

    #[test]
    fn ids_are_stable_and_distinct() {
        let p = SessionPlan::new("de", 3, 7).unwrap();
        assert_eq!(p.transcript_id(0), SessionPlan::new("de", 9, 7).unwrap().transcript_id(0));
        assert_ne!(p.transcript_id(0), p.transcript_id(1));
        assert_ne!(p.transcript_id(0), SessionPlan::new("en", 3, 7).unwrap().transcript_id(0));
    }

    #[test]
    fn backoff_doubles_up_to_cap() {
        let r = RetryPolicy::default();
        let secs: Vec<u64> = (1..=7).map(|a| r.delay(a).as_secs()).collect();
        assert_eq!(secs, vec![2, 4, 8, 16, 32, 60, 60]);
    }

    #[test]
    fn debug_hides_key() {
        let e = Endpoint::new("http://localhost/".parse().unwrap(), Some("sk-secret".into()));
        assert!(!format!("{e:?}").contains("sk-secret"));
    }
}
