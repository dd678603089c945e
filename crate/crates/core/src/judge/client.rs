use std::sync::{Condvar, Mutex};
use std::time::Duration;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};

use super::{Judge, JudgeError};

/// Environment variable holding the bearer token for the judge endpoint.
pub const API_KEY_ENV: &str = "FACTREWARD_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JudgeEndpoint {
    /// Server root (e.g. `http://localhost:8000/v1`) or the full
    /// `.../chat/completions` URL.
    pub base_url: String,
    pub model: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub temperature: f64,
    /// Concurrent requests allowed against this endpoint.
    pub max_in_flight: usize,
}

impl Default for JudgeEndpoint {
    fn default() -> Self {
        JudgeEndpoint {
            base_url: "http://127.0.0.1:8000/v1".to_string(),
            model: "judge".to_string(),
            timeout_secs: 60.0,
            max_retries: 3,
            retry_backoff_ms: 500,
            temperature: 0.0,
            max_in_flight: 8,
        }
    }
}

impl JudgeEndpoint {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(format!("timeout_secs must be positive, got {}", self.timeout_secs));
        }
        if self.max_in_flight == 0 {
            return Err("max_in_flight must be at least 1".to_string());
        }
        if self.base_url.trim().is_empty() {
            return Err("base_url is empty".to_string());
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

struct InFlight {
    used: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        while *used >= self.cap {
            used = self.freed.wait(used).unwrap_or_else(|e| e.into_inner());
        }
        *used += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().unwrap_or_else(|e| e.into_inner());
        *used -= 1;
        self.0.freed.notify_one();
    }
}

/// Chat-completion endpoint client. One request per [`Judge::complete`]
/// call; retrying is the caller's job.
pub struct HttpJudge {
    client: Client,
    endpoint: JudgeEndpoint,
    api_key: Option<String>,
    in_flight: InFlight,
}

impl std::fmt::Debug for HttpJudge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpJudge")
            .field("url", &self.endpoint.completions_url())
            .field("model", &self.endpoint.model)
            .field("has_api_key", &self.api_key.is_some())
            .finish()
    }
}

impl HttpJudge {
    /// Builds a client, reading the bearer token from [`API_KEY_ENV`].
    pub fn new(endpoint: JudgeEndpoint) -> Result<Self, JudgeError> {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_api_key(endpoint, api_key)
    }

    pub fn with_api_key(endpoint: JudgeEndpoint, api_key: Option<String>) -> Result<Self, JudgeError> {
        endpoint.validate().map_err(JudgeError::Transport)?;
        let client = Client::builder()
            .timeout(Duration::from_secs_f64(endpoint.timeout_secs))
            .build()
            .map_err(|e| JudgeError::Transport(format!("building HTTP client: {e}")))?;
        let cap = endpoint.max_in_flight;
        Ok(HttpJudge {
            client,
            endpoint,
            api_key,
            in_flight: InFlight {
                used: Mutex::new(0),
                freed: Condvar::new(),
                cap,
            },
        })
    }

    pub fn endpoint(&self) -> &JudgeEndpoint {
        &self.endpoint
    }
}

impl Judge for HttpJudge {
    fn complete(&self, prompt: &str) -> Result<String, JudgeError> {
        let body = ChatRequest {
            model: &self.endpoint.model,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: self.endpoint.temperature,
        };
        let _permit = self.in_flight.acquire();
        let mut request = self.client.post(self.endpoint.completions_url()).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| JudgeError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| JudgeError::Transport(e.to_string()))?;
        if !status.is_success() {
            let body: String = text.chars().take(500).collect();
            return Err(JudgeError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| JudgeError::BadResponse(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| JudgeError::BadResponse("no message content in first choice".to_string()))
    }
}
