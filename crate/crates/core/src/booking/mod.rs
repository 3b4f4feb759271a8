//! Multi-domain booking simulator: entity database, goal generation, the
//! user/assistant episode loop and success evaluation.

mod db;
mod episode;
mod eval;
mod goals;
mod policy;

use std::io::{BufRead, Write};

use thiserror::Error;

pub use db::{requestable_attributes, searchable_attributes, Entity, EntityDb};
pub use episode::{
    agent_prompt, assistant_turn, label_turns, parse_agent_reply, run_episode, user_prompt, AgentReply, BookingCaps,
    BookingEpisode, EndReason, ToolCall, TERMINATION_TOKEN,
};
pub use eval::{
    judge_questions, judge_success_rates, outcome_row, success_judge_llm, success_oracle, DomainVerdict,
    Outcome,
};
pub use goals::generate_goal;
pub use policy::{policy_scripts, PolicyScripts, SlipRates};

use crate::goal::{Domain, UserGoal};
use crate::llm::{ChatBackend, LlmError};
use crate::taxonomy::FrictionCategory;

#[derive(Debug, Error)]
pub enum BookingError {
    #[error("unknown domain {0:?}")]
    UnknownDomain(String),
    #[error("{domain} has no attribute {attribute:?}")]
    UnknownAttribute { domain: Domain, attribute: String },
    #[error("invalid database: {0}")]
    InvalidDb(String),
    #[error("could not read yes or no from reply {0:?}")]
    UnparseableReply(String),
    #[error("malformed episode record: {0}")]
    MalformedEpisode(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// A pair of fresh sessions for one episode.
pub struct EpisodeBackends {
    pub assistant: Box<dyn ChatBackend>,
    pub user: Box<dyn ChatBackend>,
}

/// Runs `n` episodes over generated goals `0..n`. `backends` is called once
/// per episode with its index and goal.
pub fn run_batch<F>(
    db: &EntityDb,
    n: usize,
    seed: u64,
    friction: &[FrictionCategory],
    caps: &BookingCaps,
    mut backends: F,
) -> Result<Vec<BookingEpisode>, BookingError>
where
    F: FnMut(usize, &UserGoal) -> Result<EpisodeBackends, BookingError>,
{
    (0..n)
        .map(|i| {
            let goal = generate_goal(db, seed, i)?;
            let b = backends(i, &goal)?;
            run_episode(
                format!("episode-{i:04}"),
                b.assistant.as_ref(),
                b.user.as_ref(),
                db,
                &goal,
                friction,
                caps,
            )
        })
        .collect()
}

pub fn write_episodes<W: Write>(mut w: W, episodes: &[BookingEpisode]) -> Result<(), BookingError> {
    for e in episodes {
        let line = serde_json::to_string(e).map_err(|e| BookingError::MalformedEpisode(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_episodes<R: BufRead>(r: R) -> Result<Vec<BookingEpisode>, BookingError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| BookingError::MalformedEpisode(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}
