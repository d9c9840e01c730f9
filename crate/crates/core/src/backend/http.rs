//! Remote chat-completion backend over an OpenAI-style HTTP JSON protocol.
//!
//! Transient failures (429, 5xx, timeouts, connection errors) retry with
//! exponential backoff up to a configured attempt limit; authentication
//! failures and other client errors surface immediately. Requests pass
//! through an in-flight bound and a token-bucket rate limiter.

use super::throttle::Throttle;
use super::{Backend, BackendError, CallContext};
use crate::chat::{ChatRequest, ChatResponse, Role, Usage};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde_json::{json, Value};
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct RetryConfig {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryConfig {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(8),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the API key. Credentials are
    /// never stored in configs or manifests.
    pub credential_env: Option<String>,
    pub retry: RetryConfig,
    pub requests_per_second: Option<f64>,
    pub max_in_flight: Option<usize>,
    pub timeout: Duration,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            credential_env: None,
            retry: RetryConfig::default(),
            requests_per_second: None,
            max_in_flight: None,
            timeout: Duration::from_secs(120),
        }
    }
}

/// What one transport attempt produced.
pub(crate) enum TransportReply {
    Success(Value),
    /// An HTTP error status with its body or message.
    Status { code: u16, message: String },
    /// No response at all (connect error, timeout).
    Network(String),
}

pub(crate) trait Transport: Send + Sync {
    fn send(&self, body: &Value) -> TransportReply;
}

struct ReqwestTransport {
    client: reqwest::blocking::Client,
    url: reqwest::Url,
    api_key: Option<String>,
}

impl Transport for ReqwestTransport {
    fn send(&self, body: &Value) -> TransportReply {
        let mut req = self.client.post(self.url.clone()).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        match req.send() {
            Ok(resp) => {
                let code = resp.status().as_u16();
                if resp.status().is_success() {
                    match resp.json::<Value>() {
                        Ok(v) => TransportReply::Success(v),
                        Err(e) => TransportReply::Network(format!("invalid response json: {e}")),
                    }
                } else {
                    let message = resp.text().unwrap_or_default();
                    TransportReply::Status { code, message }
                }
            }
            Err(e) => TransportReply::Network(e.to_string()),
        }
    }
}

pub struct HttpBackend {
    endpoint: String,
    retry: RetryConfig,
    throttle: Throttle,
    transport: Box<dyn Transport>,
}

impl HttpBackend {
    /// Validate the configuration and build the client. A malformed endpoint
    /// URL fails here, before any network call.
    pub fn new(config: HttpBackendConfig) -> Result<Self, BackendError> {
        let url = reqwest::Url::parse(&config.endpoint)
            .map_err(|e| BackendError::Config(format!("endpoint `{}`: {e}", config.endpoint)))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(BackendError::Config(format!(
                "endpoint `{}`: unsupported scheme `{}`",
                config.endpoint,
                url.scheme()
            )));
        }
        let api_key = match &config.credential_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                BackendError::Config(format!("credential environment variable `{var}` not set"))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self {
            endpoint: config.endpoint.clone(),
            retry: config.retry.clone(),
            throttle: Throttle::new(config.max_in_flight, config.requests_per_second),
            transport: Box::new(ReqwestTransport {
                client,
                url,
                api_key,
            }),
        })
    }

    #[cfg(test)]
    pub(crate) fn with_transport(
        endpoint: &str,
        retry: RetryConfig,
        transport: Box<dyn Transport>,
    ) -> Self {
        Self {
            endpoint: endpoint.to_string(),
            retry,
            throttle: Throttle::new(None, None),
            transport,
        }
    }

    fn wire_body(request: &ChatRequest) -> Value {
        let messages: Vec<Value> = request
            .messages
            .iter()
            .map(|m| {
                let role = match m.role {
                    Role::System => "system",
                    Role::User => "user",
                };
                match &m.image {
                    Some(img) => json!({
                        "role": role,
                        "content": [
                            { "type": "text", "text": m.text },
                            {
                                "type": "image_url",
                                "image_url": {
                                    "url": format!(
                                        "data:{};base64,{}",
                                        img.media_type,
                                        BASE64.encode(&img.bytes)
                                    )
                                }
                            }
                        ]
                    }),
                    None => json!({ "role": role, "content": m.text }),
                }
            })
            .collect();
        let mut body = json!({
            "model": request.model,
            "messages": messages,
            "temperature": request.decoding.temperature,
        });
        if let Some(max) = request.decoding.max_tokens {
            body["max_tokens"] = json!(max);
        }
        if let Some(seed) = request.decoding.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn extract_text(value: &Value) -> Result<String, BackendError> {
        let content = &value["choices"][0]["message"]["content"];
        let text = match content {
            Value::String(s) => s.clone(),
            // Some endpoints return content parts.
            Value::Array(parts) => parts
                .iter()
                .filter_map(|p| p["text"].as_str())
                .collect::<Vec<_>>()
                .join(""),
            _ => String::new(),
        };
        if text.is_empty() {
            return Err(BackendError::EmptyResponse);
        }
        Ok(text)
    }

    fn extract_usage(value: &Value) -> Option<Usage> {
        let usage = value.get("usage")?;
        Some(Usage {
            prompt_tokens: usage.get("prompt_tokens").and_then(Value::as_u64),
            completion_tokens: usage.get("completion_tokens").and_then(Value::as_u64),
        })
    }
}

impl Backend for HttpBackend {
    fn complete(
        &self,
        request: &ChatRequest,
        _ctx: Option<&CallContext>,
    ) -> Result<ChatResponse, BackendError> {
        request.validate()?;
        let body = Self::wire_body(request);
        let mut trace: Vec<String> = Vec::new();
        let mut rate_limited = false;

        for attempt in 0..self.retry.max_attempts {
            if attempt > 0 {
                let backoff = self
                    .retry
                    .initial_backoff
                    .saturating_mul(2u32.saturating_pow(attempt - 1))
                    .min(self.retry.max_backoff);
                std::thread::sleep(backoff);
            }
            let _permit = self.throttle.admit();
            let started = Instant::now();
            match self.transport.send(&body) {
                TransportReply::Success(value) => {
                    let text = Self::extract_text(&value)?;
                    return Ok(ChatResponse {
                        text,
                        usage: Self::extract_usage(&value),
                        latency_ms: (started.elapsed().as_secs_f64() * 1000.0).max(0.0001),
                        from_cache: false,
                    });
                }
                TransportReply::Status { code: 401 | 403, message } => {
                    // Never retried.
                    return Err(BackendError::Auth(message));
                }
                TransportReply::Status { code: 429, message } => {
                    rate_limited = true;
                    trace.push(format!("attempt {}: 429 {message}", attempt + 1));
                }
                TransportReply::Status { code, message } if code >= 500 || code == 408 => {
                    trace.push(format!("attempt {}: {code} {message}", attempt + 1));
                }
                TransportReply::Status { code, message } => {
                    return Err(BackendError::Http(format!("{code} {message}")));
                }
                TransportReply::Network(message) => {
                    trace.push(format!("attempt {}: {message}", attempt + 1));
                }
            }
        }

        let attempts = self.retry.max_attempts;
        let trace = trace.join("; ");
        if rate_limited {
            Err(BackendError::RateLimited { attempts, trace })
        } else {
            Err(BackendError::TransientExhausted { attempts, trace })
        }
    }

    fn name(&self) -> String {
        format!("http:{}", self.endpoint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chat::{Decoding, Image, Message};
    use std::sync::atomic::{AtomicU32, Ordering};

    fn request(text: &str) -> ChatRequest {
        ChatRequest::new("m", vec![Message::user(text)], Decoding::default()).unwrap()
    }

    fn fast_retry(attempts: u32) -> RetryConfig {
        RetryConfig {
            max_attempts: attempts,
            initial_backoff: Duration::from_millis(1),
            max_backoff: Duration::from_millis(4),
        }
    }

    struct Script {
        replies: Vec<fn() -> TransportReply>,
        cursor: AtomicU32,
    }

    impl Transport for Script {
        fn send(&self, _body: &Value) -> TransportReply {
            let i = self.cursor.fetch_add(1, Ordering::SeqCst) as usize;
            let f = self.replies[i.min(self.replies.len() - 1)];
            f()
        }
    }

    fn ok_reply() -> TransportReply {
        TransportReply::Success(json!({
            "choices": [{ "message": { "content": "fine" } }],
            "usage": { "prompt_tokens": 10, "completion_tokens": 2 }
        }))
    }

    #[test]
    fn malformed_endpoint_fails_before_any_network_call() {
        let err = HttpBackend::new(HttpBackendConfig {
            endpoint: "not a url".into(),
            ..Default::default()
        })
        .map(|_| ())
        .unwrap_err();
        assert!(matches!(err, BackendError::Config(_)));
    }

    #[test]
    fn missing_credential_env_is_a_config_error() {
        let err = HttpBackend::new(HttpBackendConfig {
            endpoint: "https://example.invalid/v1/chat/completions".into(),
            credential_env: Some("VJUDGE_TEST_UNSET_CREDENTIAL".into()),
            ..Default::default()
        })
        .map(|_| ())
        .unwrap_err();
        assert!(matches!(err, BackendError::Config(_)));
    }

    #[test]
    fn transient_errors_retry_then_succeed() {
        let script = Script {
            replies: vec![
                || TransportReply::Network("connection reset".into()),
                || TransportReply::Status { code: 503, message: "unavailable".into() },
                ok_reply,
            ],
            cursor: AtomicU32::new(0),
        };
        let backend = HttpBackend::with_transport("t", fast_retry(3), Box::new(script));
        let resp = backend.complete(&request("q"), None).unwrap();
        assert_eq!(resp.text, "fine");
        assert_eq!(resp.usage.unwrap().prompt_tokens, Some(10));
    }

    #[test]
    fn auth_errors_never_retry() {
        let script = Script {
            replies: vec![
                || TransportReply::Status { code: 401, message: "bad key".into() },
                ok_reply,
            ],
            cursor: AtomicU32::new(0),
        };
        let backend = HttpBackend::with_transport("t", fast_retry(5), Box::new(script));
        let err = backend.complete(&request("q"), None).unwrap_err();
        assert!(matches!(err, BackendError::Auth(_)));
    }

    #[test]
    fn rate_limit_exhaustion_carries_attempt_trace() {
        let script = Script {
            replies: vec![|| TransportReply::Status { code: 429, message: "slow down".into() }],
            cursor: AtomicU32::new(0),
        };
        let backend = HttpBackend::with_transport("t", fast_retry(3), Box::new(script));
        match backend.complete(&request("q"), None).unwrap_err() {
            BackendError::RateLimited { attempts, trace } => {
                assert_eq!(attempts, 3);
                assert!(trace.contains("attempt 1"));
                assert!(trace.contains("attempt 3"));
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn empty_body_is_an_error() {
        let script = Script {
            replies: vec![|| {
                TransportReply::Success(json!({ "choices": [{ "message": { "content": "" } }] }))
            }],
            cursor: AtomicU32::new(0),
        };
        let backend = HttpBackend::with_transport("t", fast_retry(1), Box::new(script));
        assert!(matches!(
            backend.complete(&request("q"), None).unwrap_err(),
            BackendError::EmptyResponse
        ));
    }

    #[test]
    fn wire_body_encodes_image_as_data_url() {
        let req = ChatRequest::new(
            "m",
            vec![Message::user_with_image(
                "look",
                Image::new(vec![1, 2, 3], "image/png"),
            )],
            Decoding::default(),
        )
        .unwrap();
        let body = HttpBackend::wire_body(&req);
        let url = body["messages"][0]["content"][1]["image_url"]["url"]
            .as_str()
            .unwrap();
        assert!(url.starts_with("data:image/png;base64,"));
        assert_eq!(body["messages"][0]["content"][0]["text"], "look");
        assert_eq!(body["temperature"], 0.0);
    }
}
