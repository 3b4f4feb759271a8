//! `{{name}}` placeholder templates for every prompt the framework sends.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::LlmError;
use crate::corpus::Turn;
use crate::taxonomy::{in_context_example, parse_label, FrictionCategory, FrictionSubcategory, Setting};

pub type Vars = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateId {
    /// System prompt for the automatic friction annotator.
    DetectionManual,
    /// User prompt asking the annotator about one turn.
    DetectionQuery,
    /// Booking assistant; friction movements enabled through `friction`.
    FrictionAgent,
    /// Text-world agent; friction movements enabled through `friction`.
    EmbodiedAgent,
    UserSimulator,
    /// Household user who knows where things are.
    EmbodiedUser,
    SatisfactionElicitation,
    SuccessJudge,
}

impl TemplateId {
    pub const ALL: [TemplateId; 8] = [
        TemplateId::DetectionManual,
        TemplateId::DetectionQuery,
        TemplateId::FrictionAgent,
        TemplateId::EmbodiedAgent,
        TemplateId::UserSimulator,
        TemplateId::EmbodiedUser,
        TemplateId::SatisfactionElicitation,
        TemplateId::SuccessJudge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::DetectionManual => "detection-manual",
            TemplateId::DetectionQuery => "detection-query",
            TemplateId::FrictionAgent => "friction-agent",
            TemplateId::EmbodiedAgent => "embodied-agent",
            TemplateId::UserSimulator => "user-simulator",
            TemplateId::EmbodiedUser => "embodied-user",
            TemplateId::SatisfactionElicitation => "satisfaction",
            TemplateId::SuccessJudge => "success-judge",
        }
    }

    fn source(self) -> &'static str {
        match self {
            TemplateId::DetectionManual => DETECTION_MANUAL,
            TemplateId::DetectionQuery => DETECTION_QUERY,
            TemplateId::FrictionAgent => FRICTION_AGENT,
            TemplateId::EmbodiedAgent => EMBODIED_AGENT,
            TemplateId::UserSimulator => USER_SIMULATOR,
            TemplateId::EmbodiedUser => EMBODIED_USER,
            TemplateId::SatisfactionElicitation => SATISFACTION,
            TemplateId::SuccessJudge => SUCCESS_JUDGE,
        }
    }

    fn setting(self) -> Setting {
        match self {
            TemplateId::EmbodiedAgent => Setting::Embodied,
            _ => Setting::Booking,
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| LlmError::UnknownTemplate(s.to_string()))
    }
}

const DETECTION_MANUAL: &str = "\
You are an expert annotator of friction movements in goal-oriented dialogue.
A friction movement is an intentional move that slows an interaction down now so that it goes better later.
Read the dialogue and decide which single category best describes the target turn.

{{taxonomy_manual}}

Reply with exactly one category name from this list and nothing else:
assumption-reveal, reflective-pause, reinforcement, overspecification, probing, no-friction";

const DETECTION_QUERY: &str = "\
Dialogue so far:
{{dialogue}}

Target turn {{turn}} ({{speaker}}): {{utterance}}
Category:";

const FRICTION_AGENT: &str = "\
You are a task-oriented assistant at a travel information desk. You help the user find and book hotels, restaurants, attractions, trains and taxis.

Database schema:
{{schema}}

Each reply must use one of two forms:
Action: query <domain> <json object of attribute to exact value>
Response: <your message to the user>
After an Action you will receive the matching records. Only quote entity details returned by a query.{{friction_block}}";

const EMBODIED_AGENT: &str = "\
You are a household robot working in a text world. A user who knows the house and the task is available to talk to.

Task: {{task}}

Each reply must be exactly one command:
go to <location> | open <receptacle> | close <receptacle> | take <object> from <receptacle> | put <object> in <receptacle> | clean <object> with <receptacle> | heat <object> with <receptacle> | cool <object> with <receptacle> | toggle <object> | examine <object> | say: <message to the user> | think: <private note>
Every command, including say and think, uses one step of a limited budget.{{friction_block}}";

const USER_SIMULATOR: &str = "\
You are role-playing a customer talking to a booking assistant.
Your goal: {{goal}}
Share your requirements naturally over the conversation, answer the assistant's questions and ask for the details you need.
When every part of your goal has been handled, reply with {{termination}} and nothing else.";

const EMBODIED_USER: &str = "\
You are the person who asked a household robot for help. You know the house.
Facts you know:
{{facts}}

Answer the robot's question truthfully and briefly using only these facts. If the question is about anything else, say you cannot help with that.

Robot: {{question}}";

const SATISFACTION: &str = "\
Here is a conversation between a user and a booking assistant.

{{dialogue}}

How satisfied is the user with the assistant by the end of this conversation, on a scale from 1 (very dissatisfied) to 5 (very satisfied)? Reply with a single number; decimals are allowed.";

const SUCCESS_JUDGE: &str = "\
Here is a conversation between a user and a booking assistant.

{{dialogue}}

Question: {{question}}
Answer yes or no.";

/// Definitions and one in-context example for each enabled category, in
/// taxonomy order. Empty when no category is enabled.
pub fn friction_block(categories: &[FrictionCategory], setting: Setting) -> String {
    let mut enabled: Vec<FrictionCategory> = categories
        .iter()
        .copied()
        .filter(|c| c.is_movement())
        .collect();
    enabled.sort();
    enabled.dedup();
    if enabled.is_empty() {
        return String::new();
    }
    let mut out = String::from(
        "\n\nWhen it helps the user reach their goal, slow down with these friction movements:",
    );
    for cat in enabled {
        out.push_str(&format!("\n- {}: {}", cat.display_name(), cat.definition()));
        if let Some(example) = in_context_example(cat, setting) {
            out.push_str(&format!("\n  Example: \"{example}\""));
        }
    }
    out
}

fn taxonomy_manual() -> String {
    let mut out = String::from("Categories:");
    for cat in FrictionCategory::ALL {
        out.push_str(&format!("\n\n{} ({}): {}", cat.display_name(), cat.canonical_name(), cat.definition()));
        for sub in FrictionSubcategory::ALL.iter().filter(|s| s.parent() == cat) {
            out.push_str(&format!(
                "\n  - {}: {} e.g. \"{}\"",
                sub.display_name(),
                sub.definition(),
                sub.exemplars()[0]
            ));
        }
        if cat == FrictionCategory::Reinforcement {
            out.push_str(&format!(
                "\n  e.g. \"{}\"",
                crate::taxonomy::REINFORCEMENT_EXEMPLARS.join("\" ... \"")
            ));
        }
    }
    out
}

/// `[index] speaker: text` lines.
pub fn render_dialogue(turns: &[Turn]) -> String {
    turns
        .iter()
        .map(|t| format!("[{}] {}: {}", t.index, t.speaker, t.text))
        .collect::<Vec<_>>()
        .join("\n")
}

fn parse_categories(list: &str) -> Result<Vec<FrictionCategory>, LlmError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            parse_label(s)
                .map(|l| l.friction_category())
                .map_err(|e| LlmError::InvalidMessages(e.to_string()))
        })
        .collect()
}

/// Substitutes `{{name}}` placeholders.
///
/// `taxonomy_manual` is always available. `friction_block` is derived from
/// a comma-separated `friction` variable (empty meaning none) unless given
/// directly.
pub fn render_template(id: TemplateId, vars: &Vars) -> Result<String, LlmError> {
    let source = id.source();
    let mut out = String::with_capacity(source.len() * 2);
    let mut rest = source;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find("}}")
            .ok_or_else(|| LlmError::UnboundPlaceholder(after.to_string()))?;
        let name = after[..end].trim();
        let value = match (name, vars.get(name)) {
            (_, Some(v)) => v.clone(),
            ("taxonomy_manual", None) => taxonomy_manual(),
            ("friction_block", None) => match vars.get("friction") {
                Some(list) => friction_block(&parse_categories(list)?, id.setting()),
                None => return Err(LlmError::UnboundPlaceholder(name.to_string())),
            },
            (_, None) => return Err(LlmError::UnboundPlaceholder(name.to_string())),
        };
        out.push_str(&value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}
