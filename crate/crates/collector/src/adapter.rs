//! Request envelopes and reply extraction for the supported wire formats.

use psychoprobe_core::transcript::SamplingConfig;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adapter {
    /// `{model, prompt, ...}` answered by `choices[0].text`.
    Completions,
    /// `{model, messages: [{role: user, content}], ...}` answered by
    /// `choices[0].message.content`.
    Chat,
}

impl Adapter {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "completions" => Some(Adapter::Completions),
            "chat" => Some(Adapter::Chat),
            _ => None,
        }
    }

    pub fn request_body(self, prompt: &str, s: &SamplingConfig) -> Value {
        let mut body = json!({
            "model": s.model_id,
            "temperature": s.temperature,
            "max_tokens": s.max_tokens,
            "top_p": s.top_p,
            "frequency_penalty": s.frequency_penalty,
            "presence_penalty": s.presence_penalty,
        });
        match self {
            Adapter::Completions => body["prompt"] = json!(prompt),
            Adapter::Chat => body["messages"] = json!([{ "role": "user", "content": prompt }]),
        }
        body
    }

    pub fn extract_text(self, response: &Value) -> Option<String> {
        let choice = response.get("choices")?.get(0)?;
        let text = match self {
            Adapter::Completions => choice.get("text")?,
            Adapter::Chat => choice.get("message")?.get("content")?,
        };
        text.as_str().map(str::to_string)
    }
}
