use serde::{Deserialize, Serialize};

use super::generate::WorldFile;
use super::oracle::UserOracle;
use super::task::{goal_check, TaskSpec};
use super::world::{parse_action, Action};
use super::EmbodiedError;
use crate::llm::{render_template, ChatBackend, ChatMessage, TemplateId, Vars};
use crate::report::OutcomeRow;
use crate::taxonomy::FrictionCategory;

pub const DEFAULT_STEP_LIMIT: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    /// The command as sent by the agent.
    pub action: String,
    pub physical: bool,
    pub success: bool,
    /// Environment feedback, or the user's reply to a `say`.
    pub observation: String,
    #[serde(default)]
    pub user_reply: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbodiedEpisode {
    pub id: String,
    pub task: TaskSpec,
    pub friction_config: Vec<FrictionCategory>,
    pub initial_observation: String,
    /// a_1, o_1, a_2, o_2, ... after the initial observation.
    pub steps: Vec<StepRecord>,
    /// `say` actions plus user replies.
    pub dialogue_turns: usize,
    pub physical_actions: usize,
    /// `say`, `think` and unparseable steps.
    pub non_physical_steps: usize,
    pub success: bool,
    pub step_limit: usize,
}

pub fn agent_prompt(task: &TaskSpec, friction: &[FrictionCategory]) -> Result<String, EmbodiedError> {
    let mut vars = Vars::new();
    vars.insert("task".into(), task.describe());
    vars.insert(
        "friction".into(),
        friction.iter().map(|c| c.canonical_name()).collect::<Vec<_>>().join(","),
    );
    Ok(render_template(TemplateId::EmbodiedAgent, &vars)?)
}

/// Runs the agent until the task holds or the step budget is spent. Every
/// command, including `say`, `think` and unparseable replies, uses a step.
pub fn run_episode(
    id: impl Into<String>,
    agent: &dyn ChatBackend,
    oracle: UserOracle<'_>,
    world_file: &WorldFile,
    friction: &[FrictionCategory],
    step_limit: usize,
) -> Result<EmbodiedEpisode, EmbodiedError> {
    let mut friction: Vec<FrictionCategory> = friction.iter().copied().filter(|c| c.is_movement()).collect();
    friction.sort();
    friction.dedup();
    let task = &world_file.task;
    let mut world = world_file.world.clone();
    let initial_observation = format!("{} Your task is to: {}", world.describe_layout(), task.describe());
    let mut messages = vec![
        ChatMessage::system(agent_prompt(task, &friction)?),
        ChatMessage::user(initial_observation.clone()),
    ];
    let mut steps = Vec::new();
    let mut success = goal_check(&world, task);

    while !success && steps.len() < step_limit {
        let reply = agent.complete(&messages)?.text;
        let record = match parse_action(&reply) {
            Err(reason) => StepRecord {
                action: reply.trim().to_string(),
                physical: false,
                success: false,
                observation: format!("Nothing happens: {reason}."),
                user_reply: false,
            },
            Ok(Action::Say(question)) => {
                let answer = oracle.answer(&world, task, &question)?;
                StepRecord {
                    action: Action::Say(question).to_string(),
                    physical: false,
                    success: true,
                    observation: format!("User: {answer}"),
                    user_reply: true,
                }
            }
            Ok(action) => {
                let obs = world.apply(&action);
                StepRecord {
                    action: action.to_string(),
                    physical: action.is_physical(),
                    success: obs.success,
                    observation: obs.text,
                    user_reply: false,
                }
            }
        };
        messages.push(ChatMessage::assistant(record.action.clone()));
        messages.push(ChatMessage::user(record.observation.clone()));
        steps.push(record);
        success = goal_check(&world, task);
    }

    let says = steps.iter().filter(|s| s.user_reply).count();
    let physical_actions = steps.iter().filter(|s| s.physical).count();
    Ok(EmbodiedEpisode {
        id: id.into(),
        task: task.clone(),
        friction_config: friction,
        initial_observation,
        dialogue_turns: 2 * says,
        physical_actions,
        non_physical_steps: steps.len() - physical_actions,
        steps,
        success,
        step_limit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbodiedMetrics {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_physical_actions: f64,
    /// Over successful episodes only; 0 when none succeeded.
    pub mean_dialogue_turns: f64,
    /// Mean non-physical steps per episode.
    pub mean_friction_turns: f64,
}

pub fn aggregate_metrics(episodes: &[EmbodiedEpisode]) -> Result<EmbodiedMetrics, EmbodiedError> {
    if episodes.is_empty() {
        return Err(EmbodiedError::EmptyInput);
    }
    let n = episodes.len() as f64;
    let ok: Vec<&EmbodiedEpisode> = episodes.iter().filter(|e| e.success).collect();
    Ok(EmbodiedMetrics {
        episodes: episodes.len(),
        success_rate: ok.len() as f64 / n,
        mean_physical_actions: episodes.iter().map(|e| e.physical_actions as f64).sum::<f64>() / n,
        mean_dialogue_turns: if ok.is_empty() {
            0.0
        } else {
            ok.iter().map(|e| e.dialogue_turns as f64).sum::<f64>() / ok.len() as f64
        },
        mean_friction_turns: episodes.iter().map(|e| e.non_physical_steps as f64).sum::<f64>() / n,
    })
}

/// Success %, share of non-physical steps % and dialogue turns in
/// successful episodes.
pub fn outcome_row(condition: impl Into<String>, episodes: &[EmbodiedEpisode]) -> Result<OutcomeRow, EmbodiedError> {
    let m = aggregate_metrics(episodes)?;
    let steps: usize = episodes.iter().map(|e| e.steps.len()).sum();
    let frictive: usize = episodes.iter().map(|e| e.non_physical_steps).sum();
    Ok(OutcomeRow {
        condition: condition.into(),
        success: 100.0 * m.success_rate,
        friction_pct: if steps == 0 { 0.0 } else { 100.0 * frictive as f64 / steps as f64 },
        avg_turns: m.mean_dialogue_turns,
    })
}
