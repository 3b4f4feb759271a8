use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::db::EntityDb;
use super::eval::{success_oracle, Outcome};
use super::BookingError;
use crate::corpus::{Speaker, Turn};
use crate::detection::{detect_rule, RuleContext};
use crate::goal::UserGoal;
use crate::llm::{render_template, ChatBackend, ChatMessage, TemplateId, Vars};
use crate::taxonomy::FrictionCategory;

pub const TERMINATION_TOKEN: &str = "[GOAL_COMPLETE]";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BookingCaps {
    /// Total user plus assistant turns.
    pub max_turns: usize,
    /// Queries the assistant may issue before it must answer.
    pub max_tool_calls: usize,
    pub termination: String,
}

impl Default for BookingCaps {
    fn default() -> Self {
        Self {
            max_turns: 20,
            max_tool_calls: 3,
            termination: TERMINATION_TOKEN.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    /// Index of the assistant turn the call was made for.
    pub turn: usize,
    pub tool: String,
    pub arguments: Value,
    pub result: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndReason {
    UserTerminated,
    TurnCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookingEpisode {
    pub id: String,
    pub goal: UserGoal,
    /// User and assistant turns; assistant turns use [`Speaker::System`].
    /// Every turn carries the rule detector's label.
    pub turns: Vec<Turn>,
    pub tool_calls: Vec<ToolCall>,
    pub friction_config: Vec<FrictionCategory>,
    pub end: EndReason,
    pub outcome: Outcome,
    /// Frictive assistant turns over assistant turns.
    pub friction_turn_fraction: f64,
    /// Frictive turns over all turns.
    pub friction_turn_fraction_all: f64,
}

impl BookingEpisode {
    pub fn system_turns(&self) -> usize {
        self.turns.iter().filter(|t| t.speaker == Speaker::System).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentReply {
    Query {
        domain: String,
        constraints: Result<BTreeMap<String, String>, String>,
    },
    Respond(String),
}

fn strip_prefix_ci<'a>(text: &'a str, prefix: &str) -> Option<&'a str> {
    let head = text.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &text[prefix.len()..])
}

fn constraint_map(raw: &str) -> Result<BTreeMap<String, String>, String> {
    if raw.trim().is_empty() {
        return Ok(BTreeMap::new());
    }
    let value: Value = serde_json::from_str(raw.trim()).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("constraints must be a JSON object")?;
    obj.iter()
        .map(|(k, v)| {
            let v = match v {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => if *b { "yes" } else { "no" }.to_string(),
                other => return Err(format!("unsupported value for {k}: {other}")),
            };
            Ok((k.clone(), v))
        })
        .collect()
}

/// Reads `Action: query <domain> {json}` or `Response: <text>`. Anything
/// else is treated as a response in full.
pub fn parse_agent_reply(text: &str) -> AgentReply {
    let trimmed = text.trim();
    if let Some(rest) = strip_prefix_ci(trimmed, "action:") {
        let rest = rest.trim_start();
        let body = strip_prefix_ci(rest, "query").map(str::trim_start).unwrap_or(rest);
        let (domain, args) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        return AgentReply::Query {
            domain: domain.to_string(),
            constraints: constraint_map(args),
        };
    }
    if let Some(pos) = trimmed.to_ascii_lowercase().find("response:") {
        return AgentReply::Respond(trimmed[pos + "response:".len()..].trim().to_string());
    }
    AgentReply::Respond(trimmed.to_string())
}

fn run_query(db: &EntityDb, domain: &str, constraints: &Result<BTreeMap<String, String>, String>) -> (Value, Value) {
    let args = json!({
        "domain": domain,
        "constraints": constraints.as_ref().map(|c| json!(c)).unwrap_or(Value::Null),
    });
    let result = match constraints {
        Err(e) => json!({ "error": e }),
        Ok(c) => match db.query_named(domain, c) {
            Ok(hits) => json!({ "results": hits }),
            Err(e) => json!({ "error": e.to_string() }),
        },
    };
    (args, result)
}

/// Agent system prompt, with friction guidance for the enabled categories.
pub fn agent_prompt(db: &EntityDb, friction: &[FrictionCategory]) -> Result<String, BookingError> {
    let mut vars = Vars::new();
    vars.insert("schema".into(), db.schema_text());
    vars.insert(
        "friction".into(),
        friction.iter().map(|c| c.canonical_name()).collect::<Vec<_>>().join(","),
    );
    Ok(render_template(TemplateId::FrictionAgent, &vars)?)
}

pub fn user_prompt(goal: &UserGoal, caps: &BookingCaps) -> Result<String, BookingError> {
    let mut vars = Vars::new();
    vars.insert("goal".into(), goal.describe());
    vars.insert("termination".into(), caps.termination.clone());
    Ok(render_template(TemplateId::UserSimulator, &vars)?)
}

const USER_KICKOFF: &str = "(The assistant is waiting. Start the conversation.)";

/// Labels every turn with the rule detector and returns the frictive
/// shares over assistant turns and over all turns.
pub fn label_turns(turns: &mut [Turn], goal: &UserGoal) -> (f64, f64) {
    let values = goal.mentioned_values();
    for i in 0..turns.len() {
        let (before, rest) = turns.split_at_mut(i);
        let ctx = RuleContext {
            preceding: before,
            goal_values: &values,
        };
        rest[0].friction = Some(detect_rule(&rest[0], &ctx));
    }
    let frictive = |t: &Turn| t.friction.is_some_and(|l| l.is_friction());
    let system: Vec<&Turn> = turns.iter().filter(|t| t.speaker == Speaker::System).collect();
    let share = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    (
        share(system.iter().filter(|t| frictive(t)).count(), system.len()),
        share(turns.iter().filter(|t| frictive(t)).count(), turns.len()),
    )
}

/// Lets the assistant issue up to `max_tool_calls` queries and returns its
/// utterance for turn `index` with the calls made. Queries, tool results
/// and the utterance are appended to `agent_view`.
pub fn assistant_turn(
    assistant: &dyn ChatBackend,
    agent_view: &mut Vec<ChatMessage>,
    db: &EntityDb,
    max_tool_calls: usize,
    index: usize,
) -> Result<(String, Vec<ToolCall>), BookingError> {
    let mut calls = Vec::new();
    let utterance = loop {
        let reply = assistant.complete(agent_view)?.text;
        match parse_agent_reply(&reply) {
            AgentReply::Query { domain, constraints } if calls.len() < max_tool_calls => {
                let (arguments, result) = run_query(db, &domain, &constraints);
                agent_view.push(ChatMessage::assistant(reply.trim()));
                agent_view.push(ChatMessage::user(format!("Tool result: {result}")));
                calls.push(ToolCall {
                    turn: index,
                    tool: "query".into(),
                    arguments,
                    result,
                });
            }
            AgentReply::Query { .. } => break reply.trim().to_string(),
            AgentReply::Respond(text) => break text,
        }
    };
    let utterance = if utterance.is_empty() { "...".to_string() } else { utterance };
    agent_view.push(ChatMessage::assistant(utterance.clone()));
    Ok((utterance, calls))
}

/// Alternates user simulator and assistant until the user emits the
/// termination token or the turn cap is reached.
pub fn run_episode(
    id: impl Into<String>,
    assistant: &dyn ChatBackend,
    user: &dyn ChatBackend,
    db: &EntityDb,
    goal: &UserGoal,
    friction: &[FrictionCategory],
    caps: &BookingCaps,
) -> Result<BookingEpisode, BookingError> {
    let mut friction: Vec<FrictionCategory> = friction.iter().copied().filter(|c| c.is_movement()).collect();
    friction.sort();
    friction.dedup();

    let mut agent_view = vec![ChatMessage::system(agent_prompt(db, &friction)?)];
    let user_system = ChatMessage::system(user_prompt(goal, caps)?);
    let mut turns: Vec<Turn> = Vec::new();
    let mut tool_calls = Vec::new();
    let mut end = EndReason::TurnCap;

    while turns.len() < caps.max_turns {
        let mut user_view = vec![user_system.clone()];
        if turns.is_empty() {
            user_view.push(ChatMessage::user(USER_KICKOFF));
        }
        for t in &turns {
            user_view.push(match t.speaker {
                Speaker::System => ChatMessage::user(t.text.clone()),
                Speaker::User => ChatMessage::assistant(t.text.clone()),
            });
        }
        let reply = user.complete(&user_view)?.text;
        let done = reply.contains(&caps.termination);
        let text = reply.replace(&caps.termination, "").trim().to_string();
        if !text.is_empty() {
            agent_view.push(ChatMessage::user(text.clone()));
            turns.push(Turn::new(turns.len(), Speaker::User, text));
        }
        if done {
            end = EndReason::UserTerminated;
            break;
        }
        if turns.len() >= caps.max_turns {
            break;
        }

        let index = turns.len();
        let (utterance, calls) = assistant_turn(assistant, &mut agent_view, db, caps.max_tool_calls, index)?;
        tool_calls.extend(calls);
        turns.push(Turn::new(index, Speaker::System, utterance));
    }

    let (friction_turn_fraction, friction_turn_fraction_all) = label_turns(&mut turns, goal);
    let outcome = success_oracle(&turns, &tool_calls, db, goal);
    Ok(BookingEpisode {
        id: id.into(),
        goal: goal.clone(),
        turns,
        tool_calls,
        friction_config: friction,
        end,
        outcome,
        friction_turn_fraction,
        friction_turn_fraction_all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_forms() {
        assert_eq!(
            parse_agent_reply("Action: query hotel {\"area\": \"north\", \"stars\": 4}"),
            AgentReply::Query {
                domain: "hotel".into(),
                constraints: Ok(BTreeMap::from([
                    ("area".to_string(), "north".to_string()),
                    ("stars".to_string(), "4".to_string()),
                ])),
            }
        );
        assert_eq!(
            parse_agent_reply("action: query taxi"),
            AgentReply::Query {
                domain: "taxi".into(),
                constraints: Ok(BTreeMap::new()),
            }
        );
        assert!(matches!(
            parse_agent_reply("Action: query hotel [1]"),
            AgentReply::Query { constraints: Err(_), .. }
        ));
        assert_eq!(parse_agent_reply("Response: Sure."), AgentReply::Respond("Sure.".into()));
        assert_eq!(
            parse_agent_reply("Thought: easy\nResponse: Done"),
            AgentReply::Respond("Done".into())
        );
        assert_eq!(parse_agent_reply("hello"), AgentReply::Respond("hello".into()));
    }
}
