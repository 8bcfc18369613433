use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{EndpointConfig, JsonClient};
use crate::retrieval::Analyzer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub seed: Option<u64>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_output_tokens: 1024,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct ProviderError(pub String);

/// Text generation backend. Shared across pipeline workers.
pub trait TextGenProvider: Send + Sync {
    fn generate(&self, prompt: &str, params: &GenParams) -> Result<String, ProviderError>;

    fn model_name(&self) -> String;
}

impl<P: TextGenProvider + ?Sized> TextGenProvider for std::sync::Arc<P> {
    fn generate(&self, prompt: &str, params: &GenParams) -> Result<String, ProviderError> {
        (**self).generate(prompt, params)
    }

    fn model_name(&self) -> String {
        (**self).model_name()
    }
}

impl<P: TextGenProvider + ?Sized> TextGenProvider for Box<P> {
    fn generate(&self, prompt: &str, params: &GenParams) -> Result<String, ProviderError> {
        (**self).generate(prompt, params)
    }

    fn model_name(&self) -> String {
        (**self).model_name()
    }
}

/// Pulls the text between `start` and the next blank-line-separated
/// `end` header out of a rendered default-template prompt.
fn section<'p>(prompt: &'p str, start: &str, end: Option<&str>) -> Option<&'p str> {
    let from = prompt.find(start)? + start.len();
    let rest = &prompt[from..];
    let to = match end {
        Some(e) => rest.find(e)?,
        None => rest.len(),
    };
    Some(rest[..to].trim())
}

/// Deterministic stand-in for a language model, driven by the default
/// templates' section headers.
///
/// * rephrase prompts: the stem's non-stopword tokens joined by spaces;
/// * comment prompts: names the correct letter and cites the first three
///   supplied documents.
#[derive(Debug, Clone)]
pub struct MockProvider {
    analyzer: Analyzer,
}

impl MockProvider {
    pub fn new(analyzer: Analyzer) -> Self {
        Self { analyzer }
    }
}

impl TextGenProvider for MockProvider {
    fn generate(&self, prompt: &str, _params: &GenParams) -> Result<String, ProviderError> {
        let unparseable = || ProviderError("mock provider cannot parse this prompt".into());
        if prompt.starts_with("### task: rephrase") {
            let stem = section(prompt, "QUESTION:\n", Some("\n\nANSWERS:")).ok_or_else(unparseable)?;
            return Ok(self.analyzer.analyze(stem).join(" "));
        }
        if prompt.starts_with("### task: comment") {
            let correct = section(prompt, "CORRECT ANSWER: ", Some("\n")).ok_or_else(unparseable)?;
            let docs = section(prompt, "\nDOCUMENTS:\n", None).ok_or_else(unparseable)?;
            let cited: Vec<(&str, &str)> = docs
                .lines()
                .filter_map(|l| l.strip_prefix("[doc:"))
                .filter_map(|l| l.split_once("] "))
                .map(|(id, rest)| (id, rest.rsplit_once(" (").map_or(rest, |(t, _)| t)))
                .take(3)
                .collect();
            let mut out = format!("Prawidłowa odpowiedź to {correct}.");
            for (id, title) in cited {
                out.push_str(&format!(" Potwierdza to źródło „{title}” [doc:{id}]."));
            }
            return Ok(out);
        }
        Err(unparseable())
    }

    fn model_name(&self) -> String {
        "mock".into()
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
    temperature: f64,
    max_tokens: u32,
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

/// Adapter for a model served behind `POST /generate`.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    client: JsonClient,
    model: String,
}

impl HttpProvider {
    pub fn new(endpoint: EndpointConfig, model: impl Into<String>) -> Self {
        Self {
            client: JsonClient::new(endpoint),
            model: model.into(),
        }
    }
}

impl TextGenProvider for HttpProvider {
    fn generate(&self, prompt: &str, params: &GenParams) -> Result<String, ProviderError> {
        let req = GenerateRequest {
            prompt,
            temperature: params.temperature,
            max_tokens: params.max_output_tokens,
            seed: params.seed,
        };
        self.client
            .post::<_, GenerateResponse>("/generate", &req)
            .map(|r| r.text)
            .map_err(|(msg, attempts)| {
                ProviderError(format!("generation service failed after {attempts} attempts: {msg}"))
            })
    }

    fn model_name(&self) -> String {
        self.model.clone()
    }
}
