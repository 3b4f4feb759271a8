use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::AnnotationError;
use crate::taxonomy::{parse_label, FrictionLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Detection,
    Production,
}

impl FromStr for TaskKind {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "detection" => Ok(TaskKind::Detection),
            "production" => Ok(TaskKind::Production),
            other => Err(AnnotationError::Invalid(format!("unknown task kind {other:?}"))),
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Detection => "detection",
            TaskKind::Production => "production",
        })
    }
}

pub const OTHER: &str = "other";

/// A taxonomy label, or the free-form `other` choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnnotationLabel {
    Friction(FrictionLabel),
    Other,
}

impl AnnotationLabel {
    pub fn as_friction(&self) -> Option<FrictionLabel> {
        match self {
            AnnotationLabel::Friction(l) => Some(*l),
            AnnotationLabel::Other => None,
        }
    }
}

impl fmt::Display for AnnotationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnnotationLabel::Friction(l) => write!(f, "{l}"),
            AnnotationLabel::Other => f.write_str(OTHER),
        }
    }
}

impl FromStr for AnnotationLabel {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case(OTHER) {
            return Ok(AnnotationLabel::Other);
        }
        parse_label(s)
            .map(AnnotationLabel::Friction)
            .map_err(|e| AnnotationError::Invalid(e.to_string()))
    }
}

impl Serialize for AnnotationLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AnnotationLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub annotator: String,
    pub task: TaskKind,
    pub dialogue_id: String,
    pub turn: usize,
    pub labels: Vec<AnnotationLabel>,
    /// Production only: one utterance per label, in the same order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub authored_text: Vec<String>,
    /// Milliseconds since the Unix epoch; filled in by the store when zero.
    #[serde(default)]
    pub timestamp: u64,
}

impl AnnotationRecord {
    pub fn detection(annotator: &str, dialogue_id: &str, turn: usize, label: AnnotationLabel) -> Self {
        Self {
            annotator: annotator.to_string(),
            task: TaskKind::Detection,
            dialogue_id: dialogue_id.to_string(),
            turn,
            labels: vec![label],
            authored_text: Vec::new(),
            timestamp: 0,
        }
    }

    pub fn production(
        annotator: &str,
        dialogue_id: &str,
        turn: usize,
        pairs: Vec<(AnnotationLabel, String)>,
    ) -> Self {
        let (labels, authored_text) = pairs.into_iter().unzip();
        Self {
            annotator: annotator.to_string(),
            task: TaskKind::Production,
            dialogue_id: dialogue_id.to_string(),
            turn,
            labels,
            authored_text,
            timestamp: 0,
        }
    }

    pub fn validate(&self) -> Result<(), AnnotationError> {
        let bad = |m: &str| Err(AnnotationError::Invalid(m.to_string()));
        if self.annotator.trim().is_empty() {
            return bad("annotator id is empty");
        }
        if self.dialogue_id.trim().is_empty() {
            return bad("dialogue id is empty");
        }
        match self.task {
            TaskKind::Detection => {
                if self.labels.len() != 1 {
                    return bad("a detection record carries exactly one label");
                }
                if !self.authored_text.is_empty() {
                    return bad("a detection record carries no authored text");
                }
            }
            TaskKind::Production => {
                if self.labels.is_empty() {
                    return bad("a production record needs at least one label");
                }
                if self.labels.len() != self.authored_text.len() {
                    return bad("each production label needs its own utterance");
                }
                if self.authored_text.iter().any(|t| t.trim().is_empty()) {
                    return bad("authored utterances must not be empty");
                }
            }
        }
        Ok(())
    }
}
