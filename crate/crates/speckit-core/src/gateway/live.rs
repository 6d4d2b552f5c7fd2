//! Live HTTP transport (chat-completions shape).

use std::env;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use super::{GatewayError, ModelRequest, API_KEY_ENV, ENDPOINT_ENV};

pub(super) fn call_with_retries(
    req: &ModelRequest,
    max_retries: u32,
) -> Result<String, GatewayError> {
    let endpoint =
        env::var(ENDPOINT_ENV).map_err(|_| GatewayError::CredentialMissing(ENDPOINT_ENV))?;
    let api_key =
        env::var(API_KEY_ENV).map_err(|_| GatewayError::CredentialMissing(API_KEY_ENV))?;

    let mut delay = Duration::from_millis(250);
    let mut last_error = String::new();
    for attempt in 0..=max_retries {
        if attempt > 0 {
            thread::sleep(delay);
            delay *= 2;
        }
        match call_once(&endpoint, &api_key, req) {
            Ok(text) => return Ok(text),
            Err(err) => last_error = err,
        }
    }
    Err(GatewayError::Network(last_error))
}

fn call_once(endpoint: &str, api_key: &str, req: &ModelRequest) -> Result<String, String> {
    let body = json!({
        "model": req.model_name,
        "temperature": req.temperature(),
        "max_tokens": req.max_output,
        "messages": [
            { "role": "system", "content": req.system_prompt },
            { "role": "user", "content": req.user_prompt },
        ],
    });
    let response = ureq::post(endpoint)
        .header("authorization", &format!("Bearer {api_key}"))
        .header("content-type", "application/json")
        .send_json(&body)
        .map_err(|err| err.to_string())?;
    let parsed: Value = response
        .into_body()
        .read_json()
        .map_err(|err| format!("malformed completion body: {err}"))?;
    parsed["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| "completion body missing choices[0].message.content".to_string())
}
