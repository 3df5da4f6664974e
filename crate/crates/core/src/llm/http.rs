use serde_json::{json, Value};
use std::time::Duration;

use super::provider::{CompletionProvider, ProviderConfig, ProviderError};

/// OpenAI-compatible chat-completions client. The whole prompt is sent as
/// one user message.
pub struct HttpProvider {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    model: String,
    temperature: f64,
}

impl HttpProvider {
    pub fn new(config: &ProviderConfig, api_key: Option<String>) -> Result<Self, ProviderError> {
        if config.endpoint.is_empty() {
            return Err(ProviderError::Transport("no provider endpoint configured".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs.max(0.001)))
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: config.endpoint.clone(),
            api_key,
            model: config.model.clone(),
            temperature: config.temperature,
        })
    }

    fn request_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        })
    }
}

fn extract_content(body: &Value) -> Option<String> {
    body.pointer("/choices/0/message/content")
        .or_else(|| body.pointer("/choices/0/text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

impl CompletionProvider for HttpProvider {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let mut req = self.client.post(&self.endpoint).json(&self.request_body(prompt));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ProviderError::Transport(format!("HTTP {status}")));
        }
        let body: Value = resp.json().map_err(|e| ProviderError::Transport(e.to_string()))?;
        extract_content(&body).ok_or_else(|| ProviderError::Transport("response has no completion text".into()))
    }

    fn name(&self) -> &str {
        "http"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_shapes() {
        let chat = json!({"choices": [{"message": {"content": "hi"}}]});
        let legacy = json!({"choices": [{"text": "yo"}]});
        assert_eq!(extract_content(&chat).as_deref(), Some("hi"));
        assert_eq!(extract_content(&legacy).as_deref(), Some("yo"));
        assert_eq!(extract_content(&json!({})), None);
    }

    #[test]
    fn body_carries_temperature() {
        let p = HttpProvider::new(
            &ProviderConfig {
                endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
                ..Default::default()
            },
            None,
        )
        .unwrap();
        let body = p.request_body("x");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["messages"][0]["content"], "x");
    }

    #[test]
    fn requires_endpoint() {
        assert!(HttpProvider::new(&ProviderConfig::default(), None).is_err());
    }
}
