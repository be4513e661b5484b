use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::SimilarityBackend;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RemoteOptions {
    /// Pairs per request.
    pub batch_size: usize,
    /// Retries after the first failed attempt.
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff: Duration,
    pub timeout: Duration,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        Self {
            batch_size: 256,
            max_retries: 3,
            backoff: Duration::from_millis(200),
            timeout: Duration::from_secs(60),
        }
    }
}

#[derive(Serialize)]
struct SimilarityRequest<'a> {
    pairs: Vec<[&'a str; 2]>,
}

#[derive(Deserialize)]
struct SimilarityResponse {
    scores: Vec<f64>,
}

#[derive(Deserialize)]
struct HealthResponse {
    model: String,
}

/// Client for an external cross-encoder scoring service.
///
/// Wire protocol: `POST {endpoint}/similarity` with
/// `{"pairs": [[reference, candidate], ...]}` answered by
/// `{"scores": [...]}` in the same order, and `GET {endpoint}/health`
/// answered by `{"model": "..."}`.
pub struct RemoteBackend {
    endpoint: String,
    client: reqwest::blocking::Client,
    options: RemoteOptions,
}

enum Attempt {
    Retry(String),
    Fatal(Error),
}

impl RemoteBackend {
    pub fn new(endpoint: impl Into<String>, options: RemoteOptions) -> Result<Self> {
        if options.batch_size == 0 {
            return Err(Error::invalid("remote batch size must be at least 1"));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(options.timeout)
            .build()
            .map_err(|e| Error::BackendUnavailable(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into().trim_end_matches('/').to_owned(),
            client,
            options,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Name of the model served at the endpoint.
    pub fn health(&self) -> Result<String> {
        let url = format!("{}/health", self.endpoint);
        let resp = self
            .client
            .get(&url)
            .send()
            .map_err(|e| Error::BackendUnavailable(format!("{url}: {e}")))?;
        if !resp.status().is_success() {
            return Err(Error::BackendUnavailable(format!("{url}: HTTP {}", resp.status())));
        }
        let body: HealthResponse = resp
            .json()
            .map_err(|e| Error::Protocol(format!("{url}: {e}")))?;
        Ok(body.model)
    }

    fn attempt(&self, url: &str, pairs: &[(&str, &str)]) -> std::result::Result<Vec<f64>, Attempt> {
        let body = SimilarityRequest {
            pairs: pairs.iter().map(|(r, c)| [*r, *c]).collect(),
        };
        let resp = self
            .client
            .post(url)
            .json(&body)
            .send()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(Error::Protocol(format!("{url}: HTTP {status}"))));
        }
        let parsed: SimilarityResponse = resp
            .json()
            .map_err(|e| Attempt::Fatal(Error::Protocol(format!("{url}: {e}"))))?;
        if parsed.scores.len() != pairs.len() {
            return Err(Attempt::Fatal(Error::Protocol(format!(
                "{url}: {} scores for {} pairs",
                parsed.scores.len(),
                pairs.len()
            ))));
        }
        if let Some(bad) = parsed.scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Attempt::Fatal(Error::Protocol(format!(
                "{url}: score {bad} outside [0, 1]"
            ))));
        }
        Ok(parsed.scores)
    }

    fn post_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>> {
        let url = format!("{}/similarity", self.endpoint);
        let mut delay = self.options.backoff;
        let mut last = String::new();
        for attempt in 0..=self.options.max_retries {
            if attempt > 0 {
                log::warn!("retrying {url} in {delay:?} after: {last}");
                std::thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(&url, pairs) {
                Ok(scores) => return Ok(scores),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => last = msg,
            }
        }
        Err(Error::BackendUnavailable(format!(
            "{url}: giving up after {} attempts: {last}",
            self.options.max_retries + 1
        )))
    }
}

impl SimilarityBackend for RemoteBackend {
    fn identity(&self) -> String {
        format!("remote({})", self.endpoint)
    }

    fn score(&self, reference: &str, candidate: &str) -> Result<f64> {
        Ok(self.post_batch(&[(reference, candidate)])?[0])
    }

    fn batch_score(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(self.options.batch_size) {
            out.extend(self.post_batch(chunk)?);
        }
        Ok(out)
    }
}
