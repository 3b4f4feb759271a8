//! Live chat sessions: a human talks to a friction-configured agent.

use frictionbench_core::booking::{agent_prompt as booking_prompt, assistant_turn, BookingCaps, EntityDb, ToolCall};
use frictionbench_core::corpus::{Speaker, Turn};
use frictionbench_core::detection::{detect_rule, RuleContext};
use frictionbench_core::embodied::{
    agent_prompt as embodied_prompt, goal_check, parse_action, Action, StepRecord, TaskSpec, WorldFile,
    DEFAULT_STEP_LIMIT,
};
use frictionbench_core::llm::{ChatBackend, ChatMessage};
use frictionbench_core::taxonomy::FrictionCategory;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// Agent steps allowed per human message before control returns.
pub const STEPS_PER_MESSAGE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionMode {
    Booking,
    Embodied,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum StateSnapshot {
    Booking {
        tool_calls: Vec<ToolCall>,
    },
    Embodied {
        task: TaskSpec,
        initial_observation: String,
        agent_at: String,
        steps: Vec<StepRecord>,
        success: bool,
        steps_left: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub mode: SessionMode,
    pub friction: Vec<FrictionCategory>,
    pub transcript: Vec<Turn>,
    pub state: StateSnapshot,
}

enum State {
    Booking {
        view: Vec<ChatMessage>,
        tool_calls: Vec<ToolCall>,
    },
    Embodied {
        world: WorldFile,
        initial_observation: String,
        view: Vec<ChatMessage>,
        steps: Vec<StepRecord>,
        success: bool,
    },
}

pub struct Session {
    id: String,
    mode: SessionMode,
    friction: Vec<FrictionCategory>,
    transcript: Vec<Turn>,
    state: State,
    backend: Box<dyn ChatBackend>,
}

fn normalize(friction: &[FrictionCategory]) -> Vec<FrictionCategory> {
    let mut f: Vec<FrictionCategory> = friction.iter().copied().filter(|c| c.is_movement()).collect();
    f.sort();
    f.dedup();
    f
}

impl Session {
    pub fn booking(
        id: String,
        db: &EntityDb,
        friction: &[FrictionCategory],
        backend: Box<dyn ChatBackend>,
    ) -> Result<Self, ServiceError> {
        let friction = normalize(friction);
        let view = vec![ChatMessage::system(booking_prompt(db, &friction)?)];
        Ok(Self {
            id,
            mode: SessionMode::Booking,
            friction,
            transcript: Vec::new(),
            state: State::Booking {
                view,
                tool_calls: Vec::new(),
            },
            backend,
        })
    }

    pub fn embodied(
        id: String,
        world: WorldFile,
        friction: &[FrictionCategory],
        backend: Box<dyn ChatBackend>,
    ) -> Result<Self, ServiceError> {
        let friction = normalize(friction);
        let initial_observation = format!(
            "{} Your task is to: {}",
            world.world.describe_layout(),
            world.task.describe()
        );
        let view = vec![
            ChatMessage::system(embodied_prompt(&world.task, &friction)?),
            ChatMessage::user(initial_observation.clone()),
        ];
        let success = goal_check(&world.world, &world.task);
        Ok(Self {
            id,
            mode: SessionMode::Embodied,
            friction,
            transcript: Vec::new(),
            state: State::Embodied {
                world,
                initial_observation,
                view,
                steps: Vec::new(),
                success,
            },
            backend,
        })
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        let state = match &self.state {
            State::Booking { tool_calls, .. } => StateSnapshot::Booking {
                tool_calls: tool_calls.clone(),
            },
            State::Embodied {
                world,
                initial_observation,
                steps,
                success,
                ..
            } => StateSnapshot::Embodied {
                task: world.task.clone(),
                initial_observation: initial_observation.clone(),
                agent_at: world.world.agent_at.clone(),
                steps: steps.clone(),
                success: *success,
                steps_left: DEFAULT_STEP_LIMIT.saturating_sub(steps.len()),
            },
        };
        SessionSnapshot {
            id: self.id.clone(),
            mode: self.mode,
            friction: self.friction.clone(),
            transcript: self.transcript.clone(),
            state,
        }
    }

    /// Replaces the friction configuration; applies from the next reply.
    fn set_friction(&mut self, db: &EntityDb, friction: &[FrictionCategory]) -> Result<(), ServiceError> {
        self.friction = normalize(friction);
        match &mut self.state {
            State::Booking { view, .. } => view[0] = ChatMessage::system(booking_prompt(db, &self.friction)?),
            State::Embodied { world, view, .. } => {
                view[0] = ChatMessage::system(embodied_prompt(&world.task, &self.friction)?)
            }
        }
        Ok(())
    }

    fn push_labelled(&mut self, speaker: Speaker, text: String) -> Turn {
        let mut turn = Turn::new(self.transcript.len(), speaker, text);
        let ctx = RuleContext {
            preceding: &self.transcript,
            goal_values: &[],
        };
        turn.friction = Some(detect_rule(&turn, &ctx));
        self.transcript.push(turn.clone());
        turn
    }

    /// Appends the human's message, runs the agent and returns its labelled
    /// reply. The transcript grows by exactly two turns.
    pub fn message(
        &mut self,
        db: &EntityDb,
        text: &str,
        friction: Option<&[FrictionCategory]>,
    ) -> Result<Turn, ServiceError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(ServiceError::BadRequest("message text is empty".into()));
        }
        if let Some(f) = friction {
            self.set_friction(db, f)?;
        }
        let reply = match &mut self.state {
            State::Booking { view, tool_calls } => {
                let index = self.transcript.len() + 1;
                let mut draft = view.clone();
                draft.push(ChatMessage::user(text));
                let (utterance, calls) =
                    assistant_turn(self.backend.as_ref(), &mut draft, db, BookingCaps::default().max_tool_calls, index)?;
                *view = draft;
                tool_calls.extend(calls);
                utterance
            }
            State::Embodied {
                world,
                view,
                steps,
                success,
                ..
            } => {
                let mut draft = view.clone();
                let mut world_draft = world.world.clone();
                let mut new_steps = Vec::new();
                draft.push(ChatMessage::user(format!("User: {text}")));
                let reply = embodied_turn(
                    self.backend.as_ref(),
                    &mut draft,
                    &mut world_draft,
                    &world.task,
                    steps.len(),
                    &mut new_steps,
                )?;
                *view = draft;
                world.world = world_draft;
                steps.extend(new_steps);
                *success = goal_check(&world.world, &world.task);
                reply
            }
        };
        self.push_labelled(Speaker::User, text.to_string());
        Ok(self.push_labelled(Speaker::System, reply))
    }
}

/// Runs the agent until it says something to the human, finishes the
/// task, or uses up its steps. Errors leave the caller's state untouched
/// because the caller works on drafts.
fn embodied_turn(
    agent: &dyn ChatBackend,
    view: &mut Vec<ChatMessage>,
    world: &mut frictionbench_core::embodied::WorldState,
    task: &TaskSpec,
    used: usize,
    steps: &mut Vec<StepRecord>,
) -> Result<String, ServiceError> {
    let budget = STEPS_PER_MESSAGE.min(DEFAULT_STEP_LIMIT.saturating_sub(used));
    if goal_check(world, task) {
        return Ok("The task is already complete.".into());
    }
    if budget == 0 {
        return Ok("I have run out of steps.".into());
    }
    for _ in 0..budget {
        let reply = agent.complete(view)?.text;
        let (record, said) = match parse_action(&reply) {
            Ok(Action::Say(q)) => (
                StepRecord {
                    action: Action::Say(q.clone()).to_string(),
                    physical: false,
                    success: true,
                    observation: String::new(),
                    user_reply: true,
                },
                Some(q),
            ),
            Ok(action) => {
                let obs = world.apply(&action);
                (
                    StepRecord {
                        action: action.to_string(),
                        physical: action.is_physical(),
                        success: obs.success,
                        observation: obs.text,
                        user_reply: false,
                    },
                    None,
                )
            }
            Err(reason) => (
                StepRecord {
                    action: reply.trim().to_string(),
                    physical: false,
                    success: false,
                    observation: format!("Nothing happens: {reason}."),
                    user_reply: false,
                },
                None,
            ),
        };
        view.push(ChatMessage::assistant(record.action.clone()));
        if !record.observation.is_empty() {
            view.push(ChatMessage::user(record.observation.clone()));
        }
        steps.push(record);
        if let Some(q) = said {
            return Ok(q);
        }
        if goal_check(world, task) {
            return Ok("Done, the task is complete.".into());
        }
    }
    let last = steps.last().map(|s| s.observation.clone()).unwrap_or_default();
    Ok(format!("I took {} steps. {last}", steps.len()))
}
