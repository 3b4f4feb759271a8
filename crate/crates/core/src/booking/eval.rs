use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::db::EntityDb;
use super::episode::{BookingEpisode, ToolCall};
use super::BookingError;
use crate::corpus::{Speaker, Turn};
use crate::goal::{Domain, UserGoal};
use crate::llm::{render_dialogue, render_template, ChatBackend, ChatMessage, TemplateId, Vars};
use crate::report::OutcomeRow;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainVerdict {
    pub success: bool,
    /// Id of the entity that satisfied the check, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub success: bool,
    pub domains: BTreeMap<Domain, DomainVerdict>,
}

/// Deterministic success check over a transcript.
///
/// A domain passes when some entity satisfying all its constraints is named
/// in an assistant turn or a tool result, and every requested attribute of
/// that same entity appears in an assistant turn. Matching is
/// case-insensitive substring search.
pub fn success_oracle(turns: &[Turn], tool_calls: &[ToolCall], db: &EntityDb, goal: &UserGoal) -> Outcome {
    let said: Vec<String> = turns
        .iter()
        .filter(|t| t.speaker == Speaker::System)
        .map(|t| t.text.to_lowercase())
        .collect();
    let tools: Vec<String> = tool_calls.iter().map(|c| c.result.to_string().to_lowercase()).collect();
    let in_said = |v: &str| {
        let v = v.to_lowercase();
        said.iter().any(|s| s.contains(&v))
    };
    let named = |v: &str| {
        let v = v.to_lowercase();
        in_said(&v) || tools.iter().any(|s| s.contains(&v))
    };

    let mut domains = BTreeMap::new();
    for (domain, g) in &goal.domains {
        let verdict = if g.is_empty() {
            DomainVerdict {
                success: true,
                entity: None,
            }
        } else {
            let hit = db.query(*domain, &g.constraints).ok().and_then(|candidates| {
                candidates.into_iter().find(|e| {
                    named(&e.name)
                        && g.requests
                            .iter()
                            .all(|r| e.get(r).is_some_and(|v| in_said(v)))
                })
            });
            DomainVerdict {
                success: hit.is_some(),
                entity: hit.map(|e| e.id.clone()),
            }
        };
        domains.insert(*domain, verdict);
    }
    Outcome {
        success: domains.values().all(|v| v.success),
        domains,
    }
}

/// One yes/no question per goal item: the entity for each constrained
/// domain and each requested attribute.
pub fn judge_questions(goal: &UserGoal) -> Vec<String> {
    let mut out = Vec::new();
    for (domain, g) in &goal.domains {
        if !g.constraints.is_empty() {
            let c: Vec<String> = g.constraints.iter().map(|(k, v)| format!("{k} {v}")).collect();
            out.push(format!(
                "Did the assistant identify a {domain} with {}?",
                c.join(", ")
            ));
        }
        for r in &g.requests {
            out.push(format!("Did the assistant tell the user the {r} of that {domain}?"));
        }
    }
    out
}

fn yes_no(reply: &str) -> Option<bool> {
    let word: String = reply
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Asks every question; success when all answers are yes.
pub fn success_judge_llm(backend: &dyn ChatBackend, episode: &BookingEpisode) -> Result<bool, BookingError> {
    let dialogue = render_dialogue(&episode.turns);
    let mut all = true;
    for question in judge_questions(&episode.goal) {
        let mut vars = Vars::new();
        vars.insert("dialogue".into(), dialogue.clone());
        vars.insert("question".into(), question);
        let prompt = render_template(TemplateId::SuccessJudge, &vars)?;
        let reply = backend.complete(&[ChatMessage::user(prompt)])?.text;
        all &= yes_no(&reply).ok_or(BookingError::UnparseableReply(reply))?;
    }
    Ok(all)
}

/// Mean judge verdict over `runs` fresh sessions per episode.
pub fn judge_success_rates<F>(episodes: &[BookingEpisode], runs: usize, mut connect: F) -> Result<Vec<f64>, BookingError>
where
    F: FnMut() -> Result<Box<dyn ChatBackend>, BookingError>,
{
    let runs = runs.max(1);
    episodes
        .iter()
        .map(|e| {
            let mut yes = 0usize;
            for _ in 0..runs {
                if success_judge_llm(connect()?.as_ref(), e)? {
                    yes += 1;
                }
            }
            Ok(yes as f64 / runs as f64)
        })
        .collect()
}

/// Success %, friction share of assistant turns % and mean assistant turns.
///
/// `success` holds one value in [0, 1] per episode; the friction share is
/// pooled over all assistant turns of all episodes.
pub fn outcome_row(condition: impl Into<String>, episodes: &[BookingEpisode], success: &[f64]) -> OutcomeRow {
    let n = episodes.len().max(1) as f64;
    let system: usize = episodes.iter().map(BookingEpisode::system_turns).sum();
    let frictive: usize = episodes
        .iter()
        .flat_map(|e| &e.turns)
        .filter(|t| t.speaker == Speaker::System && t.friction.is_some_and(|l| l.is_friction()))
        .count();
    OutcomeRow {
        condition: condition.into(),
        success: 100.0 * success.iter().sum::<f64>() / n,
        friction_pct: if system == 0 { 0.0 } else { 100.0 * frictive as f64 / system as f64 },
        avg_turns: system as f64 / n,
    }
}
