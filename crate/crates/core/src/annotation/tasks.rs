use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::record::{AnnotationRecord, TaskKind};
use super::AnnotationError;
use crate::corpus::{keyed_rng, Dialogue, SourceKind, Speaker, Turn};

/// Production batches hold this many truncation points, half ending on a
/// user turn and half on a system turn.
pub const PRODUCTION_BATCH: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPayload {
    pub kind: TaskKind,
    pub annotator: String,
    pub dialogue_id: String,
    pub source: SourceKind,
    /// Detection: the turn to label. Production: the last turn shown.
    pub turn: usize,
    /// Detection: the whole dialogue. Production: turns up to `turn`.
    pub turns: Vec<Turn>,
    /// Production only: the speaker the annotator writes for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub respond_as: Option<Speaker>,
    /// 1-based position in this annotator's queue, and the queue size.
    pub position: usize,
    pub total: usize,
}

type Item = (usize, usize);

/// Hands out annotation tasks. Orders are fixed by the seed (and, for
/// production, the annotator), and no annotator receives the same
/// dialogue/turn pair twice for a task kind.
#[derive(Debug)]
pub struct TaskAssigner {
    dialogues: Vec<Dialogue>,
    state: Mutex<State>,
}

#[derive(Debug, Default)]
struct State {
    queues: HashMap<(String, TaskKind, u64), Vec<Item>>,
    served: HashMap<(String, TaskKind), BTreeSet<(String, usize)>>,
}

impl TaskAssigner {
    pub fn new(dialogues: Vec<Dialogue>) -> Self {
        Self {
            dialogues,
            state: Mutex::new(State::default()),
        }
    }

    /// Marks pairs already present in the store as served.
    pub fn with_history(self, records: &[AnnotationRecord]) -> Self {
        {
            let mut st = self.state.lock().unwrap_or_else(|p| p.into_inner());
            for r in records {
                st.served
                    .entry((r.annotator.clone(), r.task))
                    .or_default()
                    .insert((r.dialogue_id.clone(), r.turn));
            }
        }
        self
    }

    pub fn dialogues(&self) -> &[Dialogue] {
        &self.dialogues
    }

    pub fn dialogue(&self, id: &str) -> Option<&Dialogue> {
        self.dialogues.iter().find(|d| d.id == id)
    }

    /// Records a submission so its pair is not served again.
    pub fn mark_served(&self, record: &AnnotationRecord) {
        let mut st = self.state.lock().unwrap_or_else(|p| p.into_inner());
        st.served
            .entry((record.annotator.clone(), record.task))
            .or_default()
            .insert((record.dialogue_id.clone(), record.turn));
    }

    pub fn next_task(&self, annotator: &str, kind: TaskKind, seed: u64) -> Result<TaskPayload, AnnotationError> {
        if annotator.trim().is_empty() {
            return Err(AnnotationError::Invalid("annotator id is empty".into()));
        }
        let mut st = self.state.lock().unwrap_or_else(|p| p.into_inner());
        let queue = st
            .queues
            .entry((annotator.to_string(), kind, seed))
            .or_insert_with(|| match kind {
                TaskKind::Detection => detection_order(&self.dialogues, seed),
                TaskKind::Production => production_batch(&self.dialogues, annotator, seed),
            })
            .clone();
        let served = st.served.entry((annotator.to_string(), kind)).or_default();
        let (position, &(d, t)) = queue
            .iter()
            .enumerate()
            .find(|(_, (d, t))| !served.contains(&(self.dialogues[*d].id.clone(), *t)))
            .ok_or_else(|| AnnotationError::ExhaustedTasks {
                annotator: annotator.to_string(),
                kind,
            })?;
        let dialogue = &self.dialogues[d];
        served.insert((dialogue.id.clone(), t));
        let (turns, respond_as) = match kind {
            TaskKind::Detection => (dialogue.turns.clone(), None),
            TaskKind::Production => {
                let shown = dialogue.turns[..=t].to_vec();
                let next = match dialogue.turns[t].speaker {
                    Speaker::User => Speaker::System,
                    Speaker::System => Speaker::User,
                };
                (shown, Some(next))
            }
        };
        Ok(TaskPayload {
            kind,
            annotator: annotator.to_string(),
            dialogue_id: dialogue.id.clone(),
            source: dialogue.source,
            turn: t,
            turns,
            respond_as,
            position: position + 1,
            total: queue.len(),
        })
    }
}

/// Every turn of every dialogue, in an order shared by all annotators so
/// their labels overlap.
fn detection_order(dialogues: &[Dialogue], seed: u64) -> Vec<Item> {
    let mut items: Vec<Item> = dialogues
        .iter()
        .enumerate()
        .flat_map(|(d, dl)| (0..dl.turns.len()).map(move |t| (d, t)))
        .collect();
    items.shuffle(&mut keyed_rng(seed, "annotation/detection"));
    items
}

/// Up to [`PRODUCTION_BATCH`] truncation points, balanced between user and
/// system turns and alternating between them.
fn production_batch(dialogues: &[Dialogue], annotator: &str, seed: u64) -> Vec<Item> {
    let mut rng = keyed_rng(seed, &format!("annotation/production/{annotator}"));
    let mut by_speaker = |speaker: Speaker| {
        let mut v: Vec<Item> = dialogues
            .iter()
            .enumerate()
            .flat_map(|(d, dl)| {
                dl.turns
                    .iter()
                    .enumerate()
                    .filter(move |(_, t)| t.speaker == speaker)
                    .map(move |(t, _)| (d, t))
            })
            .collect();
        v.shuffle(&mut rng);
        v
    };
    let users = by_speaker(Speaker::User);
    let systems = by_speaker(Speaker::System);
    let half = (PRODUCTION_BATCH / 2).min(users.len()).min(systems.len());
    users[..half]
        .iter()
        .zip(&systems[..half])
        .flat_map(|(u, s)| [*u, *s])
        .collect()
}
