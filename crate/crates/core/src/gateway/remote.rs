//! Blocking HTTP client for remote model endpoints.
//!
//! Speaks either an OpenAI-style chat shape (`messages` list, reply under
//! `choices[0].message.content`) or a plain shape (`prompt` string, reply
//! under `completion`, `text`, or `choices[0].text`). Transport failures and
//! 429/5xx answers are retried with exponential backoff and jitter; other
//! error statuses fail fast. An optional sliding-window rate limit spaces
//! out requests. Every HTTP attempt, including retries, is counted.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{BackendConfig, GatewayError, RateLimit, WireFormat};

const MAX_BACKOFF_MS: u64 = 10_000;

#[derive(Debug)]
pub struct RemoteLlm {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    model_tag: String,
    temperature: f64,
    wire: WireFormat,
    max_retries: u32,
    backoff_ms: u64,
    rate_limit: Option<RateLimit>,
    recent: Mutex<VecDeque<Instant>>,
    attempts: AtomicU64,
}

impl RemoteLlm {
    pub fn new(config: &BackendConfig) -> Result<Self, GatewayError> {
        let endpoint = config
            .endpoint
            .clone()
            .ok_or_else(|| GatewayError::InvalidConfig("remote backend requires an endpoint".into()))?;
        let api_key = match &config.credential_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| GatewayError::MissingCredential { var: var.clone() })?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::InvalidConfig(format!("http client: {e}")))?;
        Ok(RemoteLlm {
            client,
            endpoint,
            api_key,
            model_tag: config.model_tag.clone(),
            temperature: config.temperature,
            wire: config.wire,
            max_retries: config.max_retries,
            backoff_ms: config.backoff_ms,
            rate_limit: config.rate_limit,
            recent: Mutex::new(VecDeque::new()),
            attempts: AtomicU64::new(0),
        })
    }

    pub fn attempt_count(&self) -> u64 {
        self.attempts.load(Ordering::Relaxed)
    }

    fn request_body(&self, payload: &str) -> Value {
        match self.wire {
            WireFormat::Chat => json!({
                "model": self.model_tag,
                "messages": [{"role": "user", "content": payload}],
                "temperature": self.temperature,
            }),
            WireFormat::Plain => json!({
                "model": self.model_tag,
                "prompt": payload,
                "temperature": self.temperature,
            }),
        }
    }

    fn extract_text(&self, body: &Value) -> Option<String> {
        let chat = body
            .get("choices")
            .and_then(|c| c.get(0))
            .and_then(|c| c.get("message"))
            .and_then(|m| m.get("content"))
            .and_then(Value::as_str);
        let plain = body
            .get("completion")
            .and_then(Value::as_str)
            .or_else(|| body.get("text").and_then(Value::as_str))
            .or_else(|| {
                body.get("choices")
                    .and_then(|c| c.get(0))
                    .and_then(|c| c.get("text"))
                    .and_then(Value::as_str)
            });
        match self.wire {
            WireFormat::Chat => chat.or(plain),
            WireFormat::Plain => plain.or(chat),
        }
        .map(str::to_string)
    }

    /// Blocks until the sliding-window rate limit admits one more request.
    fn admit(&self) {
        let Some(limit) = self.rate_limit else { return };
        let window = Duration::from_secs(limit.window_secs);
        loop {
            let wait = {
                let mut recent = self.recent.lock().unwrap();
                let now = Instant::now();
                while recent.front().is_some_and(|t| now.duration_since(*t) >= window) {
                    recent.pop_front();
                }
                if (recent.len() as u32) < limit.max_requests {
                    recent.push_back(now);
                    None
                } else {
                    Some(window - now.duration_since(*recent.front().unwrap()))
                }
            };
            match wait {
                None => return,
                Some(d) => std::thread::sleep(d.min(window)),
            }
        }
    }

    fn backoff(&self, attempt: u32) {
        let base = self.backoff_ms.saturating_mul(1u64 << attempt.min(10)).min(MAX_BACKOFF_MS);
        let jitter = if base >= 2 { rand::random_range(0..base / 2) } else { 0 };
        std::thread::sleep(Duration::from_millis(base + jitter));
    }

    /// Sends one rendered payload and returns the completion text.
    pub fn complete_prompt(&self, payload: &str) -> Result<String, GatewayError> {
        let body = self.request_body(payload);
        let mut last_detail;
        let mut attempt = 0u32;
        loop {
            self.admit();
            self.attempts.fetch_add(1, Ordering::Relaxed);
            let mut request = self.client.post(&self.endpoint).json(&body);
            if let Some(key) = &self.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let parsed: Value = response.json().map_err(|e| {
                            GatewayError::MalformedResponse {
                                model: self.model_tag.clone(),
                                detail: format!("body is not JSON: {e}"),
                            }
                        })?;
                        return self.extract_text(&parsed).ok_or_else(|| {
                            GatewayError::MalformedResponse {
                                model: self.model_tag.clone(),
                                detail: "no completion text in response body".into(),
                            }
                        });
                    }
                    let code = status.as_u16();
                    let retryable = code == 429 || status.is_server_error();
                    let detail = response.text().unwrap_or_default();
                    if !retryable {
                        return Err(GatewayError::Http {
                            model: self.model_tag.clone(),
                            status: code,
                            detail,
                        });
                    }
                    last_detail = format!("status {code}: {detail}");
                }
                Err(e) => last_detail = e.to_string(),
            }
            if attempt >= self.max_retries {
                return Err(GatewayError::Transport {
                    model: self.model_tag.clone(),
                    attempts: attempt + 1,
                    detail: last_detail,
                });
            }
            self.backoff(attempt);
            attempt += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Backend, BackendKind};
    use crate::gateway::template::RoleTemplate;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::Arc;

    /// A one-thread HTTP stub: serves the scripted (status, body) responses
    /// in order and records every request body it sees.
    struct StubServer {
        url: String,
        requests: Arc<Mutex<Vec<String>>>,
        handle: Option<std::thread::JoinHandle<()>>,
    }

    impl StubServer {
        fn start(responses: Vec<(u16, String)>) -> StubServer {
            let listener = TcpListener::bind("127.0.0.1:0").unwrap();
            let url = format!("http://{}/v1/complete", listener.local_addr().unwrap());
            let requests = Arc::new(Mutex::new(Vec::new()));
            let seen = Arc::clone(&requests);
            let handle = std::thread::spawn(move || {
                for (status, body) in responses {
                    let (mut stream, _) = listener.accept().unwrap();
                    let mut buf = Vec::new();
                    let mut chunk = [0u8; 1024];
                    let header_end = loop {
                        let n = stream.read(&mut chunk).unwrap();
                        if n == 0 {
                            break None;
                        }
                        buf.extend_from_slice(&chunk[..n]);
                        if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                            break Some(pos + 4);
                        }
                    };
                    let Some(header_end) = header_end else { continue };
                    let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
                    let content_length: usize = headers
                        .lines()
                        .find_map(|l| {
                            let (name, value) = l.split_once(':')?;
                            name.eq_ignore_ascii_case("content-length")
                                .then(|| value.trim().parse().ok())?
                        })
                        .unwrap_or(0);
                    while buf.len() < header_end + content_length {
                        let n = stream.read(&mut chunk).unwrap();
                        if n == 0 {
                            break;
                        }
                        buf.extend_from_slice(&chunk[..n]);
                    }
                    let body_text =
                        String::from_utf8_lossy(&buf[header_end..header_end + content_length])
                            .to_string();
                    seen.lock().unwrap().push(body_text);
                    let reason = if status == 200 { "OK" } else { "Error" };
                    let reply = format!(
                        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                        body.len()
                    );
                    stream.write_all(reply.as_bytes()).unwrap();
                }
            });
            StubServer { url, requests, handle: Some(handle) }
        }

        fn seen_requests(mut self) -> Vec<String> {
            self.handle.take().unwrap().join().unwrap();
            std::mem::take(&mut *self.requests.lock().unwrap())
        }
    }

    impl Drop for StubServer {
        fn drop(&mut self) {
            if let Some(h) = self.handle.take() {
                let _ = h.join();
            }
        }
    }

    fn remote_config(url: &str) -> BackendConfig {
        BackendConfig {
            kind: BackendKind::Remote,
            model_tag: "stub-model".to_string(),
            endpoint: Some(url.to_string()),
            backoff_ms: 1,
            max_retries: 3,
            ..BackendConfig::default()
        }
    }

    fn chat_reply(text: &str) -> String {
        json!({"choices": [{"message": {"content": text}}]}).to_string()
    }

    #[test]
    fn chat_request_carries_model_temperature_and_payload() {
        let server = StubServer::start(vec![(200, chat_reply("hello back"))]);
        let cfg = remote_config(&server.url).with_temperature(0.25);
        let llm = RemoteLlm::new(&cfg).unwrap();
        let reply = llm.complete_prompt("say hello").unwrap();
        assert_eq!(reply, "hello back");
        assert_eq!(llm.attempt_count(), 1);
        let requests = server.seen_requests();
        let body: Value = serde_json::from_str(&requests[0]).unwrap();
        assert_eq!(body["model"], "stub-model");
        assert_eq!(body["temperature"], 0.25);
        assert_eq!(body["messages"][0]["content"], "say hello");
    }

    #[test]
    fn plain_wire_uses_prompt_field_and_completion_reply() {
        let server =
            StubServer::start(vec![(200, json!({"completion": "plain reply"}).to_string())]);
        let cfg = BackendConfig { wire: WireFormat::Plain, ..remote_config(&server.url) };
        let llm = RemoteLlm::new(&cfg).unwrap();
        assert_eq!(llm.complete_prompt("ping").unwrap(), "plain reply");
        let requests = server.seen_requests();
        let body: Value = serde_json::from_str(&requests[0]).unwrap();
        assert_eq!(body["prompt"], "ping");
        assert!(body.get("messages").is_none());
    }

    #[test]
    fn server_errors_are_retried_until_success() {
        let server = StubServer::start(vec![
            (500, "{}".to_string()),
            (429, "{}".to_string()),
            (200, chat_reply("third time lucky")),
        ]);
        let llm = RemoteLlm::new(&remote_config(&server.url)).unwrap();
        assert_eq!(llm.complete_prompt("x").unwrap(), "third time lucky");
        assert_eq!(llm.attempt_count(), 3);
        assert_eq!(server.seen_requests().len(), 3);
    }

    #[test]
    fn client_errors_fail_fast_without_retry() {
        let server = StubServer::start(vec![(400, "bad request".to_string())]);
        let llm = RemoteLlm::new(&remote_config(&server.url)).unwrap();
        let err = llm.complete_prompt("x").unwrap_err();
        assert!(matches!(err, GatewayError::Http { status: 400, .. }), "{err}");
        assert_eq!(llm.attempt_count(), 1);
    }

    #[test]
    fn retries_exhausted_reports_attempt_count() {
        let responses = vec![(500, "{}".to_string()); 3];
        let server = StubServer::start(responses);
        let cfg = BackendConfig { max_retries: 2, ..remote_config(&server.url) };
        let llm = RemoteLlm::new(&cfg).unwrap();
        let err = llm.complete_prompt("x").unwrap_err();
        assert!(matches!(err, GatewayError::Transport { attempts: 3, .. }), "{err}");
        drop(server);
    }

    #[test]
    fn missing_completion_text_is_a_malformed_response() {
        let server = StubServer::start(vec![(200, json!({"unexpected": true}).to_string())]);
        let llm = RemoteLlm::new(&remote_config(&server.url)).unwrap();
        let err = llm.complete_prompt("x").unwrap_err();
        assert!(matches!(err, GatewayError::MalformedResponse { .. }), "{err}");
    }

    #[test]
    fn missing_credential_env_fails_at_construction() {
        let cfg = BackendConfig {
            credential_env: Some("PROMPTLIFT_TEST_ABSENT_KEY_VAR".to_string()),
            ..remote_config("http://127.0.0.1:9/unused")
        };
        let err = RemoteLlm::new(&cfg).unwrap_err();
        assert!(matches!(err, GatewayError::MissingCredential { var } if var.contains("ABSENT")));
    }

    #[test]
    fn bearer_token_is_attached_when_credential_env_is_set() {
        // SAFETY: test-local env var, no other thread reads it by name.
        unsafe { std::env::set_var("PROMPTLIFT_TEST_STUB_KEY", "sk-testtoken") };
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/c", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 1024];
            loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                if buf.windows(4).any(|w| w == b"\r\n\r\n") || n == 0 {
                    break;
                }
            }
            let text = String::from_utf8_lossy(&buf).to_string();
            let body = chat_reply("ok");
            let reply = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
            text
        });
        let cfg = BackendConfig {
            credential_env: Some("PROMPTLIFT_TEST_STUB_KEY".to_string()),
            kind: BackendKind::Remote,
            endpoint: Some(url),
            backoff_ms: 1,
            ..BackendConfig::default()
        };
        let llm = RemoteLlm::new(&cfg).unwrap();
        llm.complete_prompt("x").unwrap();
        let seen = handle.join().unwrap();
        assert!(seen.to_lowercase().contains("authorization: bearer sk-testtoken"), "{seen}");
    }

    #[test]
    fn analyzer_re_asks_once_on_bad_format() {
        let good = "```\ntone | stiffer voice | 0.5\n```";
        let server = StubServer::start(vec![
            (200, chat_reply("sorry, here is prose instead of a block")),
            (200, chat_reply(good)),
        ]);
        let backend = Backend::new(&remote_config(&server.url)).unwrap();
        let tpl = RoleTemplate::default_differ();
        let report = backend.analyze_difference(&tpl, "out a", "out b").unwrap();
        assert_eq!(report.factors().len(), 1);
        assert_eq!(report.factors()[0].name, "tone");
        let requests = server.seen_requests();
        assert_eq!(requests.len(), 2);
        assert!(requests[1].contains("could not be parsed"));
    }

    #[test]
    fn analyzer_gives_up_after_second_bad_reply() {
        let server = StubServer::start(vec![
            (200, chat_reply("prose one")),
            (200, chat_reply("prose two")),
        ]);
        let backend = Backend::new(&remote_config(&server.url)).unwrap();
        let tpl = RoleTemplate::default_differ();
        let err = backend.analyze_difference(&tpl, "a", "b").unwrap_err();
        assert!(matches!(err, GatewayError::AnalyzerFormat { .. }), "{err}");
    }

    #[test]
    fn rate_limit_spaces_out_requests() {
        let server = StubServer::start(vec![
            (200, chat_reply("one")),
            (200, chat_reply("two")),
            (200, chat_reply("three")),
        ]);
        let cfg = BackendConfig {
            rate_limit: Some(RateLimit { max_requests: 2, window_secs: 1 }),
            ..remote_config(&server.url)
        };
        let llm = RemoteLlm::new(&cfg).unwrap();
        let start = Instant::now();
        for _ in 0..3 {
            llm.complete_prompt("x").unwrap();
        }
        // The third call must wait for the window to roll past the first.
        assert!(start.elapsed() >= Duration::from_millis(900), "{:?}", start.elapsed());
        drop(server);
    }
}
