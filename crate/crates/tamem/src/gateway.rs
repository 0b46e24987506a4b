//! Uniform chat-completion interface with tool calling.
//!
//! Two backends share one contract: a remote HTTP client speaking the
//! chat-completions convention, and a deterministic scripted backend that
//! replays canned assistant turns for offline tests. Token accounting lives
//! here too; the scripted backend estimates usage by whitespace token count.

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("token budget exceeded: {used} > {ceiling}")]
    BudgetExceeded { used: u64, ceiling: u64 },
    #[error("scripted fixture mismatch at call {ordinal}: expected substring {expected:?} in last message")]
    FixtureMismatch { ordinal: usize, expected: String },
    #[error("scripted fixture exhausted at call {0}")]
    FixtureExhausted(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

/// One tool invocation requested by the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub call_id: String,
    pub tool_name: String,
    pub arguments: serde_json::Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
}

impl ChatTurn {
    pub fn system(content: impl Into<String>) -> Self {
        ChatTurn { role: Role::System, content: content.into(), tool_calls: vec![], tool_call_id: None }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatTurn { role: Role::User, content: content.into(), tool_calls: vec![], tool_call_id: None }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatTurn { role: Role::Assistant, content: content.into(), tool_calls: vec![], tool_call_id: None }
    }

    pub fn tool(call_id: impl Into<String>, content: impl Into<String>) -> Self {
        ChatTurn {
            role: Role::Tool,
            content: content.into(),
            tool_calls: vec![],
            tool_call_id: Some(call_id.into()),
        }
    }
}

/// Token usage for one completion call. `estimated` marks heuristic counts
/// from the scripted backend; remote counts are exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
    #[serde(default)]
    pub estimated: bool,
}

impl Usage {
    pub fn accumulate(&mut self, other: &Usage) {
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
        self.total_tokens += other.total_tokens;
        self.estimated |= other.estimated;
    }
}

/// Whitespace-delimited token count; the estimator behind scripted Usage.
pub fn count_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// A tool schema in the chat-completion tool-definition format.
pub type ToolSchema = Value;

pub trait ChatBackend: Send + Sync {
    /// Returns exactly one assistant turn containing final text, one or more
    /// tool calls, or both.
    fn complete(
        &self,
        messages: &[ChatTurn],
        tools: &[ToolSchema],
    ) -> Result<(ChatTurn, Usage), GatewayError>;
}

/// One canned assistant turn. `match_substring`, when set, must appear in the
/// last user/tool message of the request; a mismatch is an error so fixtures
/// double as protocol assertions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FixtureTurn {
    #[serde(default, rename = "match", skip_serializing_if = "Option::is_none")]
    pub match_substring: Option<String>,
    #[serde(default)]
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
}

/// Deterministic replay backend: a pure function of (fixture, call ordinal).
pub struct ScriptedBackend {
    turns: Vec<FixtureTurn>,
    cursor: Mutex<usize>,
    /// When true, calls past the end replay the last turn forever (used by
    /// always-tool-calling budget fixtures).
    pub repeat_last: bool,
}

impl ScriptedBackend {
    pub fn new(turns: Vec<FixtureTurn>) -> Self {
        ScriptedBackend { turns, cursor: Mutex::new(0), repeat_last: false }
    }

    pub fn repeating(turns: Vec<FixtureTurn>) -> Self {
        ScriptedBackend { turns, cursor: Mutex::new(0), repeat_last: true }
    }

    pub fn from_json(json: &str) -> Result<Self, GatewayError> {
        let turns: Vec<FixtureTurn> =
            serde_json::from_str(json).map_err(|e| GatewayError::Protocol(e.to_string()))?;
        Ok(ScriptedBackend::new(turns))
    }

    pub fn reset(&self) {
        *self.cursor.lock().unwrap() = 0;
    }

    pub fn calls_made(&self) -> usize {
        *self.cursor.lock().unwrap()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(
        &self,
        messages: &[ChatTurn],
        _tools: &[ToolSchema],
    ) -> Result<(ChatTurn, Usage), GatewayError> {
        let mut cursor = self.cursor.lock().unwrap();
        let ordinal = *cursor;
        let idx = if ordinal < self.turns.len() {
            ordinal
        } else if self.repeat_last && !self.turns.is_empty() {
            self.turns.len() - 1
        } else {
            return Err(GatewayError::FixtureExhausted(ordinal));
        };
        let fixture = &self.turns[idx];
        if let Some(expected) = &fixture.match_substring {
            let last = messages
                .iter()
                .rev()
                .find(|m| matches!(m.role, Role::User | Role::Tool))
                .map(|m| m.content.as_str())
                .unwrap_or("");
            if !last.contains(expected.as_str()) {
                return Err(GatewayError::FixtureMismatch {
                    ordinal,
                    expected: expected.clone(),
                });
            }
        }
        *cursor = ordinal + 1;

        let turn = ChatTurn {
            role: Role::Assistant,
            content: fixture.content.clone(),
            tool_calls: fixture.tool_calls.clone(),
            tool_call_id: None,
        };
        let prompt: u64 = messages.iter().map(|m| count_tokens(&m.content)).sum();
        let completion = count_tokens(&turn.content)
            + turn
                .tool_calls
                .iter()
                .map(|c| count_tokens(&c.tool_name) + c.arguments.len() as u64)
                .sum::<u64>();
        let usage = Usage {
            prompt_tokens: prompt,
            completion_tokens: completion,
            total_tokens: prompt + completion,
            estimated: true,
        };
        Ok((turn, usage))
    }
}

/// Remote backend configuration. Endpoint, model, and key source are always
/// configuration, never constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteBackendConfig {
    pub endpoint_url: String,
    pub model_name: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_s")]
    pub request_timeout_s: u64,
}

fn default_api_key_env() -> String {
    "TAMEM_API_KEY".to_string()
}

fn default_max_retries() -> u32 {
    3
}

fn default_timeout_s() -> u64 {
    120
}

/// HTTP chat-completions client with exponential-backoff retry.
pub struct RemoteBackend {
    cfg: RemoteBackendConfig,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(cfg: RemoteBackendConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.request_timeout_s))
            .build()
            .map_err(|e| GatewayError::Transport { attempts: 0, message: e.to_string() })?;
        Ok(RemoteBackend { cfg, client })
    }

    fn request_once(&self, body: &Value) -> Result<Value, String> {
        let mut req = self.client.post(&self.cfg.endpoint_url).json(body);
        if let Ok(key) = std::env::var(&self.cfg.api_key_env) {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(format!("retriable status {status}"));
        }
        resp.json::<Value>().map_err(|e| e.to_string())
    }
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    tool_calls: Vec<WireToolCall>,
}

#[derive(Deserialize)]
struct WireToolCall {
    id: String,
    function: WireFunction,
}

#[derive(Deserialize)]
struct WireFunction {
    name: String,
    arguments: String,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
    #[serde(default)]
    total_tokens: u64,
}

fn wire_role(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
        Role::Tool => "tool",
    }
}

impl ChatBackend for RemoteBackend {
    fn complete(
        &self,
        messages: &[ChatTurn],
        tools: &[ToolSchema],
    ) -> Result<(ChatTurn, Usage), GatewayError> {
        let wire_messages: Vec<Value> = messages
            .iter()
            .map(|m| {
                let mut obj = json!({ "role": wire_role(m.role), "content": m.content });
                if !m.tool_calls.is_empty() {
                    obj["tool_calls"] = Value::Array(
                        m.tool_calls
                            .iter()
                            .map(|c| {
                                json!({
                                    "id": c.call_id,
                                    "type": "function",
                                    "function": {
                                        "name": c.tool_name,
                                        "arguments": Value::Object(c.arguments.clone()).to_string(),
                                    }
                                })
                            })
                            .collect(),
                    );
                }
                if let Some(id) = &m.tool_call_id {
                    obj["tool_call_id"] = json!(id);
                }
                obj
            })
            .collect();
        let mut body = json!({
            "model": self.cfg.model_name,
            "messages": wire_messages,
            "temperature": self.cfg.temperature,
        });
        if !tools.is_empty() {
            body["tools"] = Value::Array(tools.to_vec());
        }

        let mut last_err = String::new();
        let mut raw = None;
        for attempt in 0..=self.cfg.max_retries {
            match self.request_once(&body) {
                Ok(v) => {
                    raw = Some(v);
                    break;
                }
                Err(e) => {
                    last_err = e;
                    if attempt < self.cfg.max_retries {
                        std::thread::sleep(Duration::from_millis(250 * (1 << attempt)));
                    }
                }
            }
        }
        let raw = raw.ok_or(GatewayError::Transport {
            attempts: self.cfg.max_retries + 1,
            message: last_err,
        })?;

        let parsed: WireResponse = serde_json::from_value(raw.clone())
            .map_err(|e| GatewayError::Protocol(format!("{e}; body: {raw}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| GatewayError::Protocol("response has no choices".into()))?;

        let mut tool_calls = Vec::new();
        for tc in choice.message.tool_calls {
            let arguments: serde_json::Map<String, Value> =
                serde_json::from_str(&tc.function.arguments).unwrap_or_default();
            tool_calls.push(ToolCall {
                call_id: tc.id,
                tool_name: tc.function.name,
                arguments,
            });
        }
        let content = choice.message.content.unwrap_or_default();
        // Smaller models sometimes emit tool intent as a fenced JSON block in
        // plain content; recover it so the loop does not stall.
        if tool_calls.is_empty() {
            if let Some(recovered) = parse_fenced_tool_call(&content) {
                tool_calls.push(recovered);
            }
        }
        if content.trim().is_empty() && tool_calls.is_empty() {
            return Err(GatewayError::Protocol(
                "assistant turn has neither content nor tool calls".into(),
            ));
        }

        let usage = match parsed.usage {
            Some(u) => Usage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
                total_tokens: if u.total_tokens > 0 {
                    u.total_tokens
                } else {
                    u.prompt_tokens + u.completion_tokens
                },
                estimated: false,
            },
            None => {
                let prompt: u64 = messages.iter().map(|m| count_tokens(&m.content)).sum();
                let completion = count_tokens(&content);
                Usage {
                    prompt_tokens: prompt,
                    completion_tokens: completion,
                    total_tokens: prompt + completion,
                    estimated: true,
                }
            }
        };
        Ok((
            ChatTurn {
                role: Role::Assistant,
                content,
                tool_calls,
                tool_call_id: None,
            },
            usage,
        ))
    }
}

/// Recovers a tool call expressed as a fenced JSON object in assistant text,
/// accepting either `{"tool": ..., "arguments": {...}}` or
/// `{"name": ..., "arguments": {...}}`.
pub fn parse_fenced_tool_call(content: &str) -> Option<ToolCall> {
    let fence_start = content.find("```")?;
    let after = &content[fence_start + 3..];
    let body_start = after.find('\n')?;
    let fence_end = after.find("```")?;
    if fence_end <= body_start {
        return None;
    }
    let block = &after[body_start + 1..fence_end];
    let value: Value = serde_json::from_str(block.trim()).ok()?;
    let name = value
        .get("tool")
        .or_else(|| value.get("name"))?
        .as_str()?
        .to_string();
    let arguments = match value.get("arguments") {
        Some(Value::Object(map)) => map.clone(),
        _ => serde_json::Map::new(),
    };
    Some(ToolCall {
        call_id: "recovered-0".to_string(),
        tool_name: name,
        arguments,
    })
}
