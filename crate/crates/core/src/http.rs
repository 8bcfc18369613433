//! Blocking JSON-over-HTTP calls with bounded retries, shared by the remote
//! scorer and the remote text-generation provider.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Base URL, e.g. `http://127.0.0.1:8700`.
    pub url: String,
    pub timeout_ms: u64,
    /// Attempts after the first failure.
    pub retries: u32,
    /// First backoff delay; doubled after every failed attempt.
    pub backoff_ms: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            url: String::new(),
            timeout_ms: 30_000,
            retries: 3,
            backoff_ms: 200,
        }
    }
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct JsonClient {
    agent: ureq::Agent,
    config: EndpointConfig,
}

impl JsonClient {
    pub fn new(config: EndpointConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(true)
            .build()
            .new_agent();
        Self { agent, config }
    }

    /// POSTs `body` to `path`, retrying transport and status failures.
    /// Returns the last error message once all attempts are spent, along
    /// with the number of attempts made.
    pub fn post<B: Serialize, R: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<R, (String, u32)> {
        let url = format!("{}{}", self.config.url.trim_end_matches('/'), path);
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let result = self
                .agent
                .post(&url)
                .send_json(body)
                .and_then(|mut resp| resp.body_mut().read_json::<R>());
            match result {
                Ok(r) => return Ok(r),
                Err(e) if attempt > self.config.retries => return Err((e.to_string(), attempt)),
                Err(e) => {
                    log::debug!("POST {url} failed (attempt {attempt}): {e}");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
    }
}
