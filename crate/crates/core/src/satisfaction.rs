//! Satisfaction inference from dialogue history and its error broken down by
//! the friction category of one sampled turn per dialogue.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{sample_turns, CorpusError, Dialogue, SampleRule};
use crate::detection::{DetectionError, Detector};
use crate::llm::{render_dialogue, render_template, ChatBackend, ChatMessage, LlmError, TemplateId, Vars};
use crate::report::{write_rows, ReportRow};
use crate::stats::{mean_ci, mse, KruskalWallis, MeanCi, StatsError};
use crate::taxonomy::FrictionCategory;

pub const RATING_MIN: f64 = 1.0;
pub const RATING_MAX: f64 = 5.0;
pub const CI_LEVEL: f64 = 0.95;

#[derive(Debug, Error)]
pub enum SatisfactionError {
    #[error("no rating in reply {0:?}")]
    UnparseableReply(String),
    #[error("dialogue {0} has no turns")]
    EmptyDialogue(String),
    #[error("dialogue {0} has no satisfaction rating")]
    MissingSatisfaction(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionInference {
    pub value: f64,
    /// The model's number fell outside the rating scale.
    pub clamped: bool,
    pub raw: String,
}

/// First number in `text`, e.g. `4.2`, `"Rating: 4/5"` -> 4.
pub fn parse_rating(text: &str) -> Option<f64> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let mut start = i;
            if start > 0 && bytes[start - 1] == b'.' {
                start -= 1;
            }
            if start > 0 && bytes[start - 1] == b'-' {
                start -= 1;
            }
            let mut end = i;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end + 1 < bytes.len() && bytes[end] == b'.' && bytes[end + 1].is_ascii_digit() {
                end += 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
            return text[start..end].parse().ok();
        }
        i += 1;
    }
    None
}

pub fn infer_satisfaction(
    backend: &dyn ChatBackend,
    dialogue: &Dialogue,
) -> Result<SatisfactionInference, SatisfactionError> {
    if dialogue.turns.is_empty() {
        return Err(SatisfactionError::EmptyDialogue(dialogue.id.clone()));
    }
    let mut vars = Vars::new();
    vars.insert("dialogue".into(), render_dialogue(&dialogue.turns));
    let prompt = render_template(TemplateId::SatisfactionElicitation, &vars)?;
    let raw = backend.complete(&[ChatMessage::user(prompt)])?.text;
    let parsed = parse_rating(&raw)
        .filter(|v| v.is_finite())
        .ok_or_else(|| SatisfactionError::UnparseableReply(raw.clone()))?;
    let value = parsed.clamp(RATING_MIN, RATING_MAX);
    Ok(SatisfactionInference {
        value,
        clamped: value != parsed,
        raw,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionPrediction {
    pub dialogue_id: String,
    pub predicted: f64,
    pub actual: f64,
    pub clamped: bool,
    pub sampled_turn: usize,
    pub friction_at_turn: FrictionCategory,
    /// In turns.
    pub dialogue_length: usize,
}

impl SatisfactionPrediction {
    pub fn squared_error(&self) -> f64 {
        (self.predicted - self.actual).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryEffect {
    pub n: usize,
    pub mse: f64,
    /// Interval on the mean squared error; absent below two samples.
    pub ci: Option<MeanCi>,
    pub mean_turn_index: f64,
    pub mean_dialogue_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrictionEffectReport {
    /// Backend name, or `pooled`.
    pub label: String,
    pub per_category: BTreeMap<FrictionCategory, CategoryEffect>,
    /// Tests across categories; absent when fewer than two categories occur.
    pub kw_error: Option<KruskalWallis>,
    pub kw_timing: Option<KruskalWallis>,
    pub kw_length: Option<KruskalWallis>,
    pub clamped: usize,
    /// Sorted by dialogue id.
    pub predictions: Vec<SatisfactionPrediction>,
}

/// Samples one turn per dialogue, labels it and predicts the dialogue's
/// satisfaction.
pub fn predict_corpus(
    dialogues: &[Dialogue],
    backend: &dyn ChatBackend,
    detector: Detector<'_>,
    seed: u64,
) -> Result<Vec<SatisfactionPrediction>, SatisfactionError> {
    if let Some(d) = dialogues.iter().find(|d| d.satisfaction.is_none()) {
        return Err(SatisfactionError::MissingSatisfaction(d.id.clone()));
    }
    if let Some(d) = dialogues.iter().find(|d| d.turns.is_empty()) {
        return Err(SatisfactionError::EmptyDialogue(d.id.clone()));
    }
    let picks = sample_turns(dialogues, &SampleRule::OneRandomTurnPerDialogue, seed)?;
    let mut out = Vec::with_capacity(dialogues.len());
    for (d, pick) in dialogues.iter().zip(picks) {
        debug_assert_eq!(d.id, pick.dialogue_id);
        let label = detector.detect(d, pick.turn)?.label;
        let inferred = infer_satisfaction(backend, d)?;
        out.push(SatisfactionPrediction {
            dialogue_id: d.id.clone(),
            predicted: inferred.value,
            actual: d.satisfaction.unwrap_or_default(),
            clamped: inferred.clamped,
            sampled_turn: pick.turn,
            friction_at_turn: label.friction_category(),
            dialogue_length: d.turns.len(),
        });
    }
    Ok(out)
}

fn test_groups(groups: &BTreeMap<FrictionCategory, Vec<f64>>) -> Result<Option<KruskalWallis>, StatsError> {
    if groups.len() < 2 {
        return Ok(None);
    }
    let values: Vec<&[f64]> = groups.values().map(Vec::as_slice).collect();
    crate::stats::kruskal_wallis(&values).map(Some)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Aggregates predictions. The result does not depend on their order.
pub fn effect_report(
    label: impl Into<String>,
    mut predictions: Vec<SatisfactionPrediction>,
) -> Result<FrictionEffectReport, SatisfactionError> {
    if predictions.is_empty() {
        return Err(StatsError::Empty.into());
    }
    predictions.sort_by(|a, b| a.dialogue_id.cmp(&b.dialogue_id));
    let mut by_cat: BTreeMap<FrictionCategory, Vec<&SatisfactionPrediction>> = BTreeMap::new();
    for p in &predictions {
        by_cat.entry(p.friction_at_turn).or_default().push(p);
    }
    let mut per_category = BTreeMap::new();
    let mut errors = BTreeMap::new();
    let mut timing = BTreeMap::new();
    let mut length = BTreeMap::new();
    for (cat, group) in &by_cat {
        let predicted: Vec<f64> = group.iter().map(|p| p.predicted).collect();
        let actual: Vec<f64> = group.iter().map(|p| p.actual).collect();
        let sq: Vec<f64> = group.iter().map(|p| p.squared_error()).collect();
        let turns: Vec<f64> = group.iter().map(|p| p.sampled_turn as f64).collect();
        let lengths: Vec<f64> = group.iter().map(|p| p.dialogue_length as f64).collect();
        per_category.insert(
            *cat,
            CategoryEffect {
                n: group.len(),
                mse: mse(&predicted, &actual)?,
                ci: mean_ci(&sq, CI_LEVEL).ok(),
                mean_turn_index: mean(&turns),
                mean_dialogue_length: mean(&lengths),
            },
        );
        errors.insert(*cat, sq);
        timing.insert(*cat, turns);
        length.insert(*cat, lengths);
    }
    Ok(FrictionEffectReport {
        label: label.into(),
        per_category,
        kw_error: test_groups(&errors)?,
        kw_timing: test_groups(&timing)?,
        kw_length: test_groups(&length)?,
        clamped: predictions.iter().filter(|p| p.clamped).count(),
        predictions,
    })
}

pub fn friction_effect_analysis(
    dialogues: &[Dialogue],
    backend: &dyn ChatBackend,
    detector: Detector<'_>,
    seed: u64,
) -> Result<FrictionEffectReport, SatisfactionError> {
    let predictions = predict_corpus(dialogues, backend, detector, seed)?;
    effect_report(backend.name(), predictions)
}

/// One report over the union of several backends' predictions.
pub fn pooled_report(reports: &[FrictionEffectReport]) -> Result<FrictionEffectReport, SatisfactionError> {
    let mut all = Vec::new();
    for r in reports {
        all.extend(r.predictions.iter().cloned().map(|mut p| {
            p.dialogue_id = format!("{}/{}", r.label, p.dialogue_id);
            p
        }));
    }
    effect_report("pooled", all)
}

impl FrictionEffectReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let group = |name: &str| format!("{}/{}", self.label, name);
        let mut rows = Vec::new();
        for (cat, e) in &self.per_category {
            let g = group(cat.canonical_name());
            rows.push(ReportRow::new("n", &g, e.n as f64));
            let mut row = ReportRow::new("mse", &g, e.mse);
            if let Some(ci) = e.ci {
                row = row.with_bounds(ci.lower, ci.upper);
            }
            rows.push(row);
            rows.push(ReportRow::new("mean_turn_index", &g, e.mean_turn_index));
            rows.push(ReportRow::new("mean_dialogue_length", &g, e.mean_dialogue_length));
        }
        for (name, kw) in [
            ("kw_error", self.kw_error),
            ("kw_timing", self.kw_timing),
            ("kw_length", self.kw_length),
        ] {
            if let Some(kw) = kw {
                rows.push(ReportRow::new(format!("{name}_h"), group("all"), kw.h));
                rows.push(ReportRow::new(format!("{name}_p"), group("all"), kw.p));
            }
        }
        rows.push(ReportRow::new("clamped", group("all"), self.clamped as f64));
        rows
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_rows(w, &self.rows())
    }
}

/// Several labeled reports in one table.
pub fn write_reports<W: Write>(w: W, reports: &[FrictionEffectReport]) -> io::Result<()> {
    let rows: Vec<ReportRow> = reports.iter().flat_map(|r| r.rows()).collect();
    write_rows(w, &rows)
}
