//! Household text world with hidden objects, a truthful user to ask, and
//! step accounting for agents that mix actions with dialogue.

mod episode;
mod generate;
mod oracle;
mod policy;
mod task;
mod world;

use std::io::{BufRead, Write};

use thiserror::Error;

pub use episode::{
    agent_prompt, aggregate_metrics, outcome_row, run_episode, EmbodiedEpisode, EmbodiedMetrics, StepRecord,
    DEFAULT_STEP_LIMIT,
};
pub use generate::{generate_world, WorldFile, DEFAULT_ROOMS, START_LOCATION};
pub use oracle::{oracle_facts, rule_answer, UserOracle, REFUSAL};
pub use policy::{agent_script, optimal_plan};
pub use task::{goal_check, TaskSpec, TaskType};
pub use world::{
    parse_action, step, Action, Object, ObjectState, Observation, Place, Receptacle, ReceptacleKind, WorldState,
};

use crate::llm::{ChatBackend, LlmError};
use crate::taxonomy::FrictionCategory;

#[derive(Debug, Error)]
pub enum EmbodiedError {
    #[error("no episodes to aggregate")]
    EmptyInput,
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Runs `n` episodes on generated worlds `0..n`. `agent` is called once per
/// episode for a fresh session.
pub fn run_batch<F>(
    n: usize,
    seed: u64,
    rooms: usize,
    friction: &[FrictionCategory],
    step_limit: usize,
    mut agent: F,
) -> Result<Vec<EmbodiedEpisode>, EmbodiedError>
where
    F: FnMut(usize, &WorldFile) -> Result<Box<dyn ChatBackend>, EmbodiedError>,
{
    (0..n)
        .map(|i| {
            let wf = generate_world(seed, i, rooms);
            let backend = agent(i, &wf)?;
            run_episode(
                format!("episode-{i:04}"),
                backend.as_ref(),
                UserOracle::Rule,
                &wf,
                friction,
                step_limit,
            )
        })
        .collect()
}

pub fn write_jsonl<W: Write, T: serde::Serialize>(mut w: W, items: &[T]) -> Result<(), EmbodiedError> {
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| EmbodiedError::Malformed(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_episodes<R: BufRead>(r: R) -> Result<Vec<EmbodiedEpisode>, EmbodiedError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EmbodiedError::Malformed(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}
