//! Chat-completion request and response types shared by all backends.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::time::Duration;

/// An image attachment: raw bytes plus a media type such as `image/png`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Image {
    pub bytes: Vec<u8>,
    pub media_type: String,
}

impl Image {
    pub fn new(bytes: Vec<u8>, media_type: impl Into<String>) -> Self {
        Self {
            bytes,
            media_type: media_type.into(),
        }
    }

    /// Guess a media type from a file extension, defaulting to `image/png`.
    pub fn media_type_for_path(path: &std::path::Path) -> &'static str {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("jpg") | Some("jpeg") => "image/jpeg",
            Some("gif") => "image/gif",
            Some("webp") => "image/webp",
            Some("bmp") => "image/bmp",
            _ => "image/png",
        }
    }

    pub fn sha256_hex(&self) -> String {
        hex::encode(Sha256::digest(&self.bytes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub image: Option<Image>,
}

impl Message {
    pub fn user(text: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            text: text.into(),
            image: None,
        }
    }

    pub fn user_with_image(text: impl Into<String>, image: Image) -> Self {
        Self {
            role: Role::User,
            text: text.into(),
            image: Some(image),
        }
    }
}

/// Decoding parameters. Temperature defaults to 0 for reproducible judgments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_tokens: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

impl Default for Decoding {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: None,
            seed: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RequestError {
    #[error("request must contain at least one user message")]
    NoUserMessage,
    #[error("request carries {0} image attachments; at most one is supported")]
    TooManyImages(usize),
    #[error("temperature must be >= 0, got {0}")]
    NegativeTemperature(f64),
}

/// One chat-completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub decoding: Decoding,
}

impl ChatRequest {
    pub fn new(
        model: impl Into<String>,
        messages: Vec<Message>,
        decoding: Decoding,
    ) -> Result<Self, RequestError> {
        let req = Self {
            model: model.into(),
            messages,
            decoding,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), RequestError> {
        if !self.messages.iter().any(|m| m.role == Role::User) {
            return Err(RequestError::NoUserMessage);
        }
        let images = self.messages.iter().filter(|m| m.image.is_some()).count();
        if images > 1 {
            return Err(RequestError::TooManyImages(images));
        }
        if self.decoding.temperature < 0.0 {
            return Err(RequestError::NegativeTemperature(self.decoding.temperature));
        }
        Ok(())
    }

    pub fn has_image(&self) -> bool {
        self.messages.iter().any(|m| m.image.is_some())
    }

    /// Delete any image attachment, leaving the text untouched.
    pub fn without_image(mut self) -> Self {
        for m in &mut self.messages {
            m.image = None;
        }
        self
    }

    /// Canonical serialization used for cache keys and fixture lookup.
    ///
    /// Image bytes are replaced by their SHA-256 so keys stay small and
    /// bit-exact. `serde_json` maps are sorted, so the rendering does not
    /// depend on insertion order.
    pub fn canonical_value(&self) -> Value {
        let messages: Vec<Value> = self
            .messages
            .iter()
            .map(|m| {
                let mut obj = json!({
                    "role": match m.role { Role::System => "system", Role::User => "user" },
                    "text": m.text,
                });
                if let Some(img) = &m.image {
                    obj["image_sha256"] = json!(img.sha256_hex());
                    obj["media_type"] = json!(img.media_type);
                }
                obj
            })
            .collect();
        json!({
            "model": self.model,
            "messages": messages,
            "decoding": {
                "temperature": self.decoding.temperature,
                "max_tokens": self.decoding.max_tokens,
                "seed": self.decoding.seed,
            },
        })
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn cache_key(&self) -> String {
        let canon = serde_json::to_string(&self.canonical_value()).expect("canonical json");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

/// One assistant completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub usage: Option<Usage>,
    /// Wall-clock latency of the producing call, in milliseconds. Cache hits
    /// carry the latency recorded when the entry was first produced.
    pub latency_ms: f64,
    #[serde(default)]
    pub from_cache: bool,
}

impl ChatResponse {
    pub fn latency(&self) -> Duration {
        Duration::from_secs_f64(self.latency_ms / 1000.0)
    }
}
