//! Normalized dialogue corpora: data model, JSON Lines ingestion and
//! deterministic turn sampling.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::goal::UserGoal;
use crate::taxonomy::FrictionLabel;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema violation in record {record}: {reason}")]
    SchemaViolation { record: String, reason: String },
    #[error("duplicate dialogue id {0}")]
    DuplicateId(String),
    #[error("act {act:?} has {available} turns, {requested} requested")]
    InsufficientTurns {
        act: String,
        available: usize,
        requested: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    System,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Speaker::User => "user",
            Speaker::System => "system",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SourceKind {
    #[serde(rename = "multiwoz-like")]
    MultiwozLike,
    #[serde(rename = "teach-like")]
    TeachLike,
    #[serde(rename = "synthetic")]
    Synthetic,
    #[serde(rename = "other")]
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Turn {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
    /// Corpus-specific dialogue act labels; empty when unlabeled.
    #[serde(default)]
    pub acts: Vec<String>,
    #[serde(default)]
    pub friction: Option<FrictionLabel>,
}

impl Turn {
    pub fn new(index: usize, speaker: Speaker, text: impl Into<String>) -> Self {
        Self {
            index,
            speaker,
            text: text.into(),
            acts: Vec::new(),
            friction: None,
        }
    }

    pub fn with_acts<I, S>(mut self, acts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.acts = acts.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dialogue {
    pub id: String,
    pub source: SourceKind,
    pub turns: Vec<Turn>,
    #[serde(default)]
    pub goal: Option<UserGoal>,
    /// Cohort mean rating on the 1-5 scale.
    #[serde(default)]
    pub satisfaction: Option<f64>,
    /// Individual ratings when available, keyed by annotator.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub satisfaction_by_annotator: BTreeMap<String, f64>,
}

impl Dialogue {
    pub fn new(id: impl Into<String>, source: SourceKind, turns: Vec<Turn>) -> Self {
        Self {
            id: id.into(),
            source,
            turns,
            goal: None,
            satisfaction: None,
            satisfaction_by_annotator: BTreeMap::new(),
        }
    }

    /// Checks every per-record invariant.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let violation = |reason: String| CorpusError::SchemaViolation {
            record: self.id.clone(),
            reason,
        };
        if self.id.trim().is_empty() {
            return Err(violation("empty dialogue id".into()));
        }
        for (pos, turn) in self.turns.iter().enumerate() {
            if turn.index != pos {
                return Err(violation(format!(
                    "turn at position {pos} has index {}",
                    turn.index
                )));
            }
            if turn.text.trim().is_empty() {
                return Err(violation(format!("turn {pos} has an empty utterance")));
            }
        }
        if self.source == SourceKind::MultiwozLike {
            if let Some(w) = self.turns.windows(2).find(|w| w[0].speaker == w[1].speaker) {
                return Err(violation(format!(
                    "turns {} and {} share a speaker",
                    w[0].index, w[1].index
                )));
            }
        }
        let rating_ok = |r: f64| r.is_finite() && (1.0..=5.0).contains(&r);
        if let Some(s) = self.satisfaction {
            if !rating_ok(s) {
                return Err(violation(format!("satisfaction {s} outside [1, 5]")));
            }
        }
        if let Some((who, r)) = self
            .satisfaction_by_annotator
            .iter()
            .find(|(_, r)| !rating_ok(**r))
        {
            return Err(violation(format!("rating {r} by {who} outside [1, 5]")));
        }
        if let Some(goal) = &self.goal {
            if goal.domains.is_empty() {
                return Err(violation("goal has no domains".into()));
            }
        }
        Ok(())
    }

    pub fn turn(&self, index: usize) -> Option<&Turn> {
        self.turns.get(index)
    }
}

/// Parses JSON Lines from a reader. Blank lines are skipped.
pub fn parse_corpus<R: BufRead>(
    reader: R,
    expected_source: Option<SourceKind>,
) -> Result<Vec<Dialogue>, CorpusError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let dialogue: Dialogue =
            serde_json::from_str(&line).map_err(|e| CorpusError::SchemaViolation {
                record: record_hint(&line).unwrap_or_else(|| format!("line {}", lineno + 1)),
                reason: e.to_string(),
            })?;
        dialogue.validate()?;
        if let Some(kind) = expected_source {
            if dialogue.source != kind {
                return Err(CorpusError::SchemaViolation {
                    record: dialogue.id,
                    reason: format!("source {:?} where {kind:?} expected", dialogue.source),
                });
            }
        }
        if !seen.insert(dialogue.id.clone()) {
            return Err(CorpusError::DuplicateId(dialogue.id));
        }
        out.push(dialogue);
    }
    Ok(out)
}

fn record_hint(line: &str) -> Option<String> {
    let v: serde_json::Value = serde_json::from_str(line).ok()?;
    v.get("id")?.as_str().map(str::to_string)
}

pub fn load_corpus(
    path: impl AsRef<Path>,
    expected_source: Option<SourceKind>,
) -> Result<Vec<Dialogue>, CorpusError> {
    let file = File::open(path)?;
    parse_corpus(BufReader::new(file), expected_source)
}

pub fn write_corpus<W: Write>(mut writer: W, dialogues: &[Dialogue]) -> Result<(), CorpusError> {
    for d in dialogues {
        let line = serde_json::to_string(d).map_err(std::io::Error::other)?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub dialogue_count: usize,
    pub turn_count: usize,
    pub mean_turns: f64,
    pub per_act: BTreeMap<String, usize>,
}

pub fn corpus_stats(dialogues: &[Dialogue]) -> CorpusStats {
    let turn_count: usize = dialogues.iter().map(|d| d.turns.len()).sum();
    let mut per_act = BTreeMap::new();
    for turn in dialogues.iter().flat_map(|d| &d.turns) {
        for act in &turn.acts {
            *per_act.entry(act.clone()).or_insert(0) += 1;
        }
    }
    CorpusStats {
        dialogue_count: dialogues.len(),
        turn_count,
        mean_turns: if dialogues.is_empty() {
            0.0
        } else {
            turn_count as f64 / dialogues.len() as f64
        },
        per_act,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleRule {
    OneRandomTurnPerDialogue,
    /// `n` turns per act without replacement. `acts: None` means every act
    /// present in the corpus.
    NPerAct { n: usize, acts: Option<Vec<String>> },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TurnRef {
    pub dialogue_id: String,
    pub turn: usize,
    /// The act the turn was drawn for, under `NPerAct`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub act: Option<String>,
}

/// Stable 64-bit FNV-1a, used to derive per-key RNG streams.
pub(crate) fn stable_hash(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for b in *part {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// RNG keyed by (seed, key), independent of iteration order.
pub fn keyed_rng(seed: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stable_hash(&[&seed.to_le_bytes(), key.as_bytes()]))
}

/// Draws turn references. Results depend only on the corpus contents and the
/// seed, not on dialogue order.
pub fn sample_turns(
    dialogues: &[Dialogue],
    rule: &SampleRule,
    seed: u64,
) -> Result<Vec<TurnRef>, CorpusError> {
    match rule {
        SampleRule::OneRandomTurnPerDialogue => Ok(dialogues
            .iter()
            .filter(|d| !d.turns.is_empty())
            .map(|d| {
                let mut rng = keyed_rng(seed, &d.id);
                TurnRef {
                    dialogue_id: d.id.clone(),
                    turn: rng.random_range(0..d.turns.len()),
                    act: None,
                }
            })
            .collect()),
        SampleRule::NPerAct { n, acts } => {
            let mut pools: BTreeMap<String, Vec<TurnRef>> = BTreeMap::new();
            if let Some(acts) = acts {
                for act in acts {
                    pools.entry(act.clone()).or_default();
                }
            }
            for d in dialogues {
                for t in &d.turns {
                    for act in &t.acts {
                        if acts.as_ref().is_some_and(|wanted| !wanted.contains(act)) {
                            continue;
                        }
                        pools.entry(act.clone()).or_default().push(TurnRef {
                            dialogue_id: d.id.clone(),
                            turn: t.index,
                            act: Some(act.clone()),
                        });
                    }
                }
            }
            let mut out = Vec::new();
            for (act, mut pool) in pools {
                if pool.len() < *n {
                    return Err(CorpusError::InsufficientTurns {
                        act,
                        available: pool.len(),
                        requested: *n,
                    });
                }
                pool.sort();
                pool.dedup();
                let mut rng = keyed_rng(seed, &act);
                let mut picks: Vec<usize> = index::sample(&mut rng, pool.len(), *n).into_vec();
                picks.sort_unstable();
                out.extend(picks.into_iter().map(|i| pool[i].clone()));
            }
            Ok(out)
        }
    }
}
