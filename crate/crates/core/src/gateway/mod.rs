//! Prompt assembly and completion backends (HTTP chat-completions and a
//! deterministic mock).

mod endpoint;
mod mock;
mod prompt;

use thiserror::Error;

use crate::letter::Letter;

pub use endpoint::{
    complete, parse_completion_body, Completer, Completion, CompletionRequest, HttpCompleter, ModelEndpoint,
};
pub use mock::{mock_complete, MockCompleter};
pub use prompt::{build_prompt, parse_prompt, PromptBundle};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("a prompt needs at least 2 options, got {0}")]
    TooFewOptions(usize),
    #[error("options must be lettered contiguously from A; found {0} out of place")]
    NonContiguousOptions(Letter),
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("API key environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
}
