//! Client for a chat-completion style extraction endpoint.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::{ExtractorConfig, RawTriple};
use crate::error::ExtractError;

/// Triples parsed from one model reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedReply {
    pub triples: Vec<RawTriple>,
    /// Array items that were not objects with three non-empty string fields.
    pub dropped: usize,
}

pub struct RemoteExtractor {
    agent: ureq::Agent,
    url: String,
    model: String,
    prompt_template: String,
    max_retries: u32,
    retry_backoff: Duration,
    in_flight: Semaphore,
}

impl std::fmt::Debug for RemoteExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteExtractor")
            .field("url", &self.url)
            .field("model", &self.model)
            .field("max_retries", &self.max_retries)
            .finish()
    }
}

impl RemoteExtractor {
    pub fn from_config(cfg: &ExtractorConfig) -> Result<Self, ExtractError> {
        let url = cfg
            .remote_url
            .clone()
            .ok_or_else(|| ExtractError::Config("remote backend requires an endpoint URL".into()))?;
        if cfg.max_in_flight == 0 {
            return Err(ExtractError::Config("max_in_flight must be at least 1".into()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteExtractor {
            agent,
            url,
            model: cfg.remote_model.clone().unwrap_or_else(|| "default".into()),
            prompt_template: cfg.prompt_template.clone(),
            max_retries: cfg.max_retries,
            retry_backoff: cfg.retry_backoff,
            in_flight: Semaphore::new(cfg.max_in_flight),
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn prompt(&self, doc: &str) -> String {
        self.prompt_template.replace("{document}", doc)
    }

    /// Sends `doc` and parses the reply, retrying on transport failures and
    /// on replies without any triple array.
    pub fn extract(&self, doc: &str) -> Result<ParsedReply, ExtractError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": self.prompt(doc)}],
            "temperature": 0,
        });
        let attempts_allowed = self.max_retries + 1;
        let mut last_err = None;
        for attempt in 1..=attempts_allowed {
            if attempt > 1 {
                std::thread::sleep(self.retry_backoff * (attempt - 1));
            }
            let outcome = {
                let _permit = self.in_flight.acquire();
                self.post(&body)
            };
            let err = match outcome {
                Ok(raw) => match parse_triple_reply(&reply_content(&raw)) {
                    Some(parsed) => return Ok(parsed),
                    None => ExtractError::MalformedResponse { attempts: attempt, raw_reply: raw },
                },
                Err((message, raw_reply)) => ExtractError::Transport { attempts: attempt, message, raw_reply },
            };
            last_err = Some(err);
        }
        Err(last_err.expect("at least one attempt"))
    }

    fn post(&self, body: &Value) -> Result<String, (String, Option<String>)> {
        let mut resp = self.agent.post(&self.url).send_json(body).map_err(|e| (e.to_string(), None))?;
        let status = resp.status();
        let text = resp.body_mut().read_to_string().map_err(|e| (e.to_string(), None))?;
        if !status.is_success() {
            return Err((format!("HTTP {status}"), Some(text)));
        }
        Ok(text)
    }
}

/// The assistant text of a reply. Understands the common chat-completion
/// envelopes and falls back to the raw body.
fn reply_content(raw: &str) -> String {
    let Ok(v) = serde_json::from_str::<Value>(raw) else { return raw.to_string() };
    let candidates = [
        v.pointer("/choices/0/message/content"),
        v.pointer("/choices/0/text"),
        v.pointer("/message/content"),
        v.get("content"),
        v.get("response"),
    ];
    for c in candidates.into_iter().flatten() {
        if let Some(s) = c.as_str() {
            return s.to_string();
        }
    }
    raw.to_string()
}

/// Parses the first JSON array in `content`. Returns `None` when there is
/// no array at all.
pub fn parse_triple_reply(content: &str) -> Option<ParsedReply> {
    for (idx, _) in content.match_indices('[') {
        let mut stream = serde_json::Deserializer::from_str(&content[idx..]).into_iter::<Value>();
        if let Some(Ok(Value::Array(items))) = stream.next() {
            let mut parsed = ParsedReply { triples: Vec::new(), dropped: 0 };
            for item in items {
                match triple_from_value(&item) {
                    Some(t) => parsed.triples.push(t),
                    None => parsed.dropped += 1,
                }
            }
            return Some(parsed);
        }
    }
    None
}

fn triple_from_value(v: &Value) -> Option<RawTriple> {
    let field = |k: &str| v.get(k)?.as_str().map(str::to_string);
    let t = RawTriple::new(field("subject")?, field("relation")?, field("object")?);
    t.is_valid().then_some(t)
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore { free: Mutex::new(n), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_valid_item() {
        let p = parse_triple_reply(r#"[{"subject":"Tenant","relation":"shall pay","object":"rent"}]"#).unwrap();
        assert_eq!(p.triples, vec![RawTriple::new("Tenant", "shall pay", "rent")]);
        assert_eq!(p.dropped, 0);
    }

    #[test]
    fn empty_array_is_not_an_error() {
        assert_eq!(parse_triple_reply("[]"), Some(ParsedReply { triples: vec![], dropped: 0 }));
    }

    #[test]
    fn field_missing_item_is_dropped() {
        let reply = r#"Here you go:
[{"subject":"Tenant","relation":"shall pay","object":"rent"},
 {"subject":"Landlord","relation":"shall maintain"},
 {"subject":"Landlord","relation":"shall maintain","object":"the premises"}]"#;
        let p = parse_triple_reply(reply).unwrap();
        assert_eq!(p.triples.len(), 2);
        assert_eq!(p.dropped, 1);
    }

    #[test]
    fn skips_brackets_that_are_not_arrays() {
        let p = parse_triple_reply(r#"see [1 ... then [{"subject":"a","relation":"b","object":"c"}]"#).unwrap();
        assert_eq!(p.triples.len(), 1);
        assert_eq!(parse_triple_reply("no array here"), None);
    }

    #[test]
    fn non_string_fields_are_dropped() {
        let p = parse_triple_reply(r#"[{"subject":1,"relation":"r","object":"o"}, "x", {"subject":"","relation":"r","object":"o"}]"#)
            .unwrap();
        assert_eq!((p.triples.len(), p.dropped), (0, 3));
    }

    #[test]
    fn envelope_content_is_unwrapped() {
        let raw = r#"{"choices":[{"message":{"role":"assistant","content":"[]"}}]}"#;
        assert_eq!(reply_content(raw), "[]");
        assert_eq!(reply_content("plain [text]"), "plain [text]");
    }

    #[test]
    fn remote_requires_url() {
        let err = RemoteExtractor::from_config(&ExtractorConfig::default()).unwrap_err();
        assert!(matches!(err, ExtractError::Config(_)));
    }
}
