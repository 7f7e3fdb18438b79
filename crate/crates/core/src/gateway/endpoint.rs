use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tracing::{debug, info, warn};

use super::prompt::PromptBundle;
use super::GatewayError;
use crate::letter::Letter;

/// Connection settings for an OpenAI-compatible chat-completions server
/// (hosted APIs, Ollama, vLLM, llama.cpp server, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEndpoint {
    /// Base URL up to and including the API version, e.g.
    /// `http://localhost:11434/v1`. `/chat/completions` is appended.
    pub base_url: String,
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Environment variable holding a bearer token; no auth header if unset.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// First retry delay; doubles on every further retry.
    #[serde(default = "default_backoff")]
    pub backoff_base_ms: u64,
}

fn default_timeout() -> f64 {
    120.0
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    1000
}

impl ModelEndpoint {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            temperature: 0.0,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            api_key_env: None,
            backoff_base_ms: default_backoff(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let url = reqwest::Url::parse(&self.base_url)
            .map_err(|e| GatewayError::InvalidEndpoint(format!("base_url {:?}: {e}", self.base_url)))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(GatewayError::InvalidEndpoint(format!(
                "base_url scheme must be http or https, got {:?}",
                url.scheme()
            )));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidEndpoint("temperature must be >= 0".into()));
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err(GatewayError::InvalidEndpoint("timeout_secs must be > 0".into()));
        }
        if self.model_name.is_empty() {
            return Err(GatewayError::InvalidEndpoint("model_name is empty".into()));
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub latency_ms: u64,
    /// 1-based attempt that produced the text.
    pub attempt: u32,
}

/// One question sent to a model. `gold` is only consumed by the mock
/// backend; network backends never transmit it.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    pub bundle: &'a PromptBundle,
    pub gold: Letter,
    pub seed: u64,
}

/// A source of completions. Implementations are shared across worker
/// threads and must not keep per-request mutable state.
pub trait Completer: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, GatewayError>;
}

/// Blocking HTTP client for one endpoint.
#[derive(Debug, Clone)]
pub struct HttpCompleter {
    endpoint: ModelEndpoint,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    log_raw: bool,
}

impl HttpCompleter {
    pub fn new(endpoint: ModelEndpoint) -> Result<Self, GatewayError> {
        endpoint.validate()?;
        let api_key = match &endpoint.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| GatewayError::MissingApiKey(var.clone()))?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(endpoint.timeout_secs))
            .build()
            .map_err(|e| GatewayError::InvalidEndpoint(e.to_string()))?;
        Ok(Self {
            endpoint,
            client,
            api_key,
            log_raw: false,
        })
    }

    /// Logs request and response bodies verbatim at `info` level.
    pub fn with_raw_logging(mut self, on: bool) -> Self {
        self.log_raw = on;
        self
    }

    pub fn endpoint(&self) -> &ModelEndpoint {
        &self.endpoint
    }

    fn request_body(&self, prompt: &str, seed: Option<u64>) -> serde_json::Value {
        let mut body = json!({
            "model": self.endpoint.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.endpoint.temperature,
            "stream": false,
        });
        if let Some(seed) = seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn attempt_once(&self, body: &str) -> Result<String, AttemptError> {
        let mut req = self
            .client
            .post(self.endpoint.completions_url())
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string());
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| AttemptError::Retryable(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| AttemptError::Retryable(e.to_string()))?;
        if self.log_raw {
            info!(target: "ragbench::raw", status = status.as_u16(), response = %text);
        }
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(AttemptError::Retryable(format!("HTTP {status}: {text}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(GatewayError::Http {
                status: status.as_u16(),
                body: text,
            }));
        }
        parse_completion_body(&text).map_err(AttemptError::Fatal)
    }

    fn backoff(&self, retry: u32) -> Duration {
        let base = self.endpoint.backoff_base_ms as f64 * 2f64.powi(retry as i32);
        let jitter = rand::rng().random_range(0.0..=0.25);
        Duration::from_secs_f64(base * (1.0 + jitter) / 1000.0)
    }

    /// Sends `prompt` as a single user message. Transport errors, timeouts,
    /// 429 and 5xx responses are retried with exponential backoff.
    pub fn complete_prompt(&self, prompt: &str, seed: Option<u64>) -> Result<Completion, GatewayError> {
        let body = self.request_body(prompt, seed).to_string();
        if self.log_raw {
            info!(target: "ragbench::raw", request = %body);
        }
        let start = Instant::now();
        let attempts = self.endpoint.max_retries + 1;
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.attempt_once(&body) {
                Ok(text) => {
                    return Ok(Completion {
                        text,
                        latency_ms: start.elapsed().as_millis() as u64,
                        attempt,
                    })
                }
                Err(AttemptError::Fatal(e)) => return Err(e),
                Err(AttemptError::Retryable(msg)) => {
                    warn!(attempt, error = %msg, "completion attempt failed");
                    last = msg;
                    if attempt < attempts {
                        let wait = self.backoff(attempt - 1);
                        debug!(?wait, "backing off");
                        std::thread::sleep(wait);
                    }
                }
            }
        }
        Err(GatewayError::RetriesExhausted { attempts, last })
    }
}

impl Completer for HttpCompleter {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, GatewayError> {
        self.complete_prompt(request.prompt, Some(request.seed))
    }
}

/// One-off completion against `endpoint` without a seed.
pub fn complete(endpoint: &ModelEndpoint, prompt: &str) -> Result<Completion, GatewayError> {
    HttpCompleter::new(endpoint.clone())?.complete_prompt(prompt, None)
}

enum AttemptError {
    Retryable(String),
    Fatal(GatewayError),
}

/// Pulls `choices[0].message.content` out of a chat-completions response.
pub fn parse_completion_body(body: &str) -> Result<String, GatewayError> {
    #[derive(Deserialize)]
    struct Response {
        choices: Vec<Choice>,
    }
    #[derive(Deserialize)]
    struct Choice {
        message: Message,
    }
    #[derive(Deserialize)]
    struct Message {
        content: Option<String>,
    }
    let resp: Response =
        serde_json::from_str(body).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
    resp.choices
        .into_iter()
        .next()
        .ok_or_else(|| GatewayError::MalformedResponse("no choices".into()))?
        .message
        .content
        .ok_or_else(|| GatewayError::MalformedResponse("choice has no content".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_standard_body() {
        let body = r#"{"id":"x","choices":[{"index":0,"message":{"role":"assistant","content":"The answer is B."}}]}"#;
        assert_eq!(parse_completion_body(body).unwrap(), "The answer is B.");
        assert!(matches!(
            parse_completion_body(r#"{"choices":[]}"#),
            Err(GatewayError::MalformedResponse(_))
        ));
        assert!(matches!(parse_completion_body("nope"), Err(GatewayError::MalformedResponse(_))));
    }

    #[test]
    fn endpoint_validation() {
        assert!(ModelEndpoint::new("http://localhost:11434/v1", "m").validate().is_ok());
        assert!(ModelEndpoint::new("not a url", "m").validate().is_err());
        assert!(ModelEndpoint::new("ftp://host", "m").validate().is_err());
        let mut e = ModelEndpoint::new("http://h/v1/", "m");
        assert_eq!(e.completions_url(), "http://h/v1/chat/completions");
        e.temperature = -1.0;
        assert!(e.validate().is_err());
    }

    #[test]
    fn missing_api_key_is_reported() {
        let mut e = ModelEndpoint::new("http://localhost/v1", "m");
        e.api_key_env = Some("RAGBENCH_TEST_SURELY_UNSET_KEY".into());
        assert!(matches!(HttpCompleter::new(e), Err(GatewayError::MissingApiKey(_))));
    }

    #[test]
    fn request_body_shape() {
        let c = HttpCompleter::new(ModelEndpoint::new("http://localhost/v1", "llama3")).unwrap();
        let body = c.request_body("hi", Some(9));
        assert_eq!(body["model"], "llama3");
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"][0]["content"], "hi");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["seed"], 9);
    }
}
