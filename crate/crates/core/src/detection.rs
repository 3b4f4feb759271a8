//! Turn-level friction detection and act-by-friction cross-tabulation.
//!
//! Two detectors share one result type: an LLM prompted with the annotation
//! manual, and a deterministic rule cascade used as a test oracle. The
//! cascade checks, in this order:
//!
//! 1. restatement of an earlier same-speaker turn (token Jaccard >= 0.8) -> reinforcement
//! 2. hedges such as "i think", "i assume" -> assumption reveal
//! 3. pause cues such as "hmm", "let me check", "..." -> reflective pause
//! 4. a trailing question mark -> probing
//! 5. a system turn restating >= 3 goal values, or longer than twice the
//!    median preceding turn -> overspecification
//!
//! and falls through to no-friction.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{sample_turns, CorpusError, Dialogue, SampleRule, Speaker, Turn};
use crate::llm::{render_dialogue, render_template, ChatBackend, ChatMessage, LlmError, TemplateId, Vars};
use crate::taxonomy::{find_label, FrictionCategory, FrictionLabel};

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("could not read a friction label from reply {0:?}")]
    UnparseableReply(String),
    #[error("dialogue {dialogue} has no turn {turn}")]
    NoSuchTurn { dialogue: String, turn: usize },
    #[error("unknown dialogue {0}")]
    NoSuchDialogue(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionMethod {
    Llm,
    Rule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub dialogue_id: String,
    pub turn: usize,
    pub label: FrictionLabel,
    pub method: DetectionMethod,
    /// Raw model text; present exactly for LLM detections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

/// Which detector to run.
#[derive(Clone, Copy)]
pub enum Detector<'a> {
    Rule,
    Llm(&'a dyn ChatBackend),
}

impl Detector<'_> {
    pub fn method(&self) -> DetectionMethod {
        match self {
            Detector::Rule => DetectionMethod::Rule,
            Detector::Llm(_) => DetectionMethod::Llm,
        }
    }

    pub fn detect(&self, dialogue: &Dialogue, turn: usize) -> Result<DetectionResult, DetectionError> {
        match self {
            Detector::Rule => detect_rule_in(dialogue, turn),
            Detector::Llm(backend) => detect_llm(*backend, dialogue, turn),
        }
    }
}

fn target_turn(dialogue: &Dialogue, turn: usize) -> Result<&Turn, DetectionError> {
    dialogue.turn(turn).ok_or_else(|| DetectionError::NoSuchTurn {
        dialogue: dialogue.id.clone(),
        turn,
    })
}

/// The messages sent to the LLM annotator for one turn.
pub fn detection_messages(dialogue: &Dialogue, turn: usize) -> Result<Vec<ChatMessage>, DetectionError> {
    let target = target_turn(dialogue, turn)?;
    let system = render_template(TemplateId::DetectionManual, &Vars::new())?;
    let mut vars = Vars::new();
    vars.insert("dialogue".into(), render_dialogue(&dialogue.turns[..=turn]));
    vars.insert("turn".into(), turn.to_string());
    vars.insert("speaker".into(), target.speaker.to_string());
    vars.insert("utterance".into(), target.text.clone());
    let user = render_template(TemplateId::DetectionQuery, &vars)?;
    Ok(vec![ChatMessage::system(system), ChatMessage::user(user)])
}

/// Category-level label from an LLM given the dialogue up to and including
/// the target turn.
pub fn detect_llm(
    backend: &dyn ChatBackend,
    dialogue: &Dialogue,
    turn: usize,
) -> Result<DetectionResult, DetectionError> {
    let messages = detection_messages(dialogue, turn)?;
    let reply = backend.complete(&messages)?.text;
    let label = find_label(&reply)
        .map_err(|_| DetectionError::UnparseableReply(reply.clone()))?
        .category_level();
    Ok(DetectionResult {
        dialogue_id: dialogue.id.clone(),
        turn,
        label,
        method: DetectionMethod::Llm,
        raw: Some(reply),
    })
}

/// What the rule cascade may look at besides the turn itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleContext<'a> {
    pub preceding: &'a [Turn],
    /// Goal constraint and booking values, for the restated-constraints cue.
    pub goal_values: &'a [String],
}

pub const RESTATEMENT_JACCARD: f64 = 0.8;
const HEDGES: [&str; 4] = ["i think", "i assume", "i believe", "i guess"];
const PAUSES: [&str; 7] = [
    "let me think",
    "let me check",
    "let's see",
    "one moment",
    "let's go back",
    "for a moment",
    "hold on",
];

fn clean(text: &str) -> String {
    text.to_lowercase()
        .replace(['\u{2019}', '\u{2018}'], "'")
        .replace('\u{2026}', "...")
}

/// Space-padded word form: punctuation other than apostrophes becomes space.
fn padded_words(text: &str) -> String {
    let spaced: String = text
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' { c } else { ' ' })
        .collect();
    format!(" {} ", spaced.split_whitespace().collect::<Vec<_>>().join(" "))
}

fn tokens(text: &str) -> Vec<String> {
    clean(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    a.intersection(b).count() as f64 / a.union(b).count() as f64
}

fn mentions(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn median(values: &mut [usize]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 0 {
        (values[mid - 1] + values[mid]) as f64 / 2.0
    } else {
        values[mid] as f64
    })
}

/// Deterministic rule cascade; total over all turns.
pub fn detect_rule(turn: &Turn, ctx: &RuleContext<'_>) -> FrictionLabel {
    let text = clean(&turn.text);
    let words = padded_words(&text);
    let own: HashSet<String> = tokens(&turn.text).into_iter().collect();

    let restates = ctx
        .preceding
        .iter()
        .filter(|p| p.speaker == turn.speaker)
        .any(|p| jaccard(&own, &tokens(&p.text).into_iter().collect()) >= RESTATEMENT_JACCARD);
    if restates {
        return FrictionCategory::Reinforcement.into();
    }

    if HEDGES.iter().any(|h| words.contains(&format!(" {h} "))) {
        return FrictionCategory::AssumptionReveal.into();
    }

    let hmm = words.split_whitespace().any(|w| w.starts_with("hmm"));
    if hmm || text.contains("...") || PAUSES.iter().any(|p| words.contains(&format!(" {p} "))) {
        return FrictionCategory::ReflectivePause.into();
    }

    if text
        .trim_end_matches(|c: char| c.is_whitespace() || matches!(c, '"' | '\'' | ')' | '\u{201d}'))
        .ends_with('?')
    {
        return FrictionCategory::Probing.into();
    }

    if turn.speaker == Speaker::System {
        let toks = tokens(&turn.text);
        let restated: HashSet<&String> = ctx
            .goal_values
            .iter()
            .filter(|v| mentions(&toks, &tokens(v)))
            .collect();
        let mut lengths: Vec<usize> = ctx.preceding.iter().map(|p| tokens(&p.text).len()).collect();
        let long = median(&mut lengths).is_some_and(|m| toks.len() as f64 > 2.0 * m);
        if restated.len() >= 3 || long {
            return FrictionCategory::Overspecification.into();
        }
    }

    FrictionLabel::NO_FRICTION
}

/// Rule detection for a turn of a dialogue, using its own history and goal.
pub fn detect_rule_in(dialogue: &Dialogue, turn: usize) -> Result<DetectionResult, DetectionError> {
    let target = target_turn(dialogue, turn)?;
    let goal_values = dialogue
        .goal
        .as_ref()
        .map(|g| g.mentioned_values())
        .unwrap_or_default();
    let ctx = RuleContext {
        preceding: &dialogue.turns[..turn],
        goal_values: &goal_values,
    };
    Ok(DetectionResult {
        dialogue_id: dialogue.id.clone(),
        turn,
        label: detect_rule(target, &ctx),
        method: DetectionMethod::Rule,
        raw: None,
    })
}

/// Labels every turn of every dialogue, in corpus order.
pub fn detect_corpus(
    dialogues: &[Dialogue],
    detector: Detector<'_>,
) -> Result<Vec<DetectionResult>, DetectionError> {
    let mut out = Vec::new();
    for d in dialogues {
        for t in 0..d.turns.len() {
            out.push(detector.detect(d, t)?);
        }
    }
    Ok(out)
}

pub fn write_results<W: Write>(mut w: W, results: &[DetectionResult]) -> Result<(), DetectionError> {
    for r in results {
        let line = serde_json::to_string(r).map_err(std::io::Error::other)?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// act -> category -> count over a fixed per-act sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossTab {
    pub counts: BTreeMap<String, BTreeMap<FrictionCategory, usize>>,
    pub sample_size_per_act: usize,
}

impl CrossTab {
    /// `act,category,count` rows, every category listed for every act.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "act,category,count")?;
        for (act, row) in &self.counts {
            for (cat, count) in row {
                writeln!(w, "{},{},{}", csv_field(act), cat, count)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Samples `n_per_act` turns for every act and tabulates detected
/// categories.
pub fn crosstab(
    dialogues: &[Dialogue],
    detector: Detector<'_>,
    n_per_act: usize,
    seed: u64,
) -> Result<CrossTab, DetectionError> {
    let picks = sample_turns(
        dialogues,
        &SampleRule::NPerAct {
            n: n_per_act,
            acts: None,
        },
        seed,
    )?;
    let by_id: HashMap<&str, &Dialogue> = dialogues.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut counts: BTreeMap<String, BTreeMap<FrictionCategory, usize>> = BTreeMap::new();
    for pick in picks {
        let dialogue = by_id
            .get(pick.dialogue_id.as_str())
            .ok_or_else(|| DetectionError::NoSuchDialogue(pick.dialogue_id.clone()))?;
        let result = detector.detect(dialogue, pick.turn)?;
        let row = counts
            .entry(pick.act.unwrap_or_default())
            .or_insert_with(|| FrictionCategory::ALL.iter().map(|c| (*c, 0)).collect());
        *row.entry(result.label.friction_category()).or_default() += 1;
    }
    Ok(CrossTab {
        counts,
        sample_size_per_act: n_per_act,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SourceKind;
    use crate::llm::{Script, ScriptedBackend};

    fn turn(speaker: Speaker, text: &str) -> Turn {
        Turn::new(0, speaker, text)
    }

    fn rule(text: &str) -> FrictionCategory {
        detect_rule(&turn(Speaker::System, text), &RuleContext::default()).friction_category()
    }

    #[test]
    fn cascade_examples() {
        assert_eq!(rule("Which drawer should I open?"), FrictionCategory::Probing);
        assert_eq!(rule("hmm, let me check the fridge"), FrictionCategory::ReflectivePause);
        assert_eq!(rule("Great choice!"), FrictionCategory::NoFriction);
        assert_eq!(rule("I think the mug is clean?"), FrictionCategory::AssumptionReveal);
        assert_eq!(rule("Hmmm."), FrictionCategory::ReflectivePause);
        assert_eq!(rule("I\u{2019}ll check now\u{2026}"), FrictionCategory::ReflectivePause);
        assert_eq!(rule("\"Is it cheap?\" "), FrictionCategory::Probing);
        assert_eq!(rule("think about it"), FrictionCategory::NoFriction);
    }

    #[test]
    fn restatement_wins() {
        let earlier = vec![turn(Speaker::User, "I need a cheap hotel in the north?")];
        let now = turn(Speaker::User, "I need a cheap hotel in the north?");
        let ctx = RuleContext {
            preceding: &earlier,
            goal_values: &[],
        };
        assert_eq!(detect_rule(&now, &ctx).friction_category(), FrictionCategory::Reinforcement);
        let other_speaker = turn(Speaker::System, "I need a cheap hotel in the north?");
        assert_eq!(
            detect_rule(&other_speaker, &ctx).friction_category(),
            FrictionCategory::Probing
        );
    }

    #[test]
    fn overspecification_cues() {
        let values = vec!["north".to_string(), "cheap".to_string(), "2".to_string()];
        let t = turn(Speaker::System, "Booked a cheap place in the north for 2 people.");
        let ctx = RuleContext {
            preceding: &[],
            goal_values: &values,
        };
        assert_eq!(detect_rule(&t, &ctx).friction_category(), FrictionCategory::Overspecification);
        let user = turn(Speaker::User, "Booked a cheap place in the north for 2 people.");
        assert_eq!(detect_rule(&user, &ctx).friction_category(), FrictionCategory::NoFriction);

        let short = vec![turn(Speaker::User, "ok"), turn(Speaker::System, "sure thing")];
        let long = turn(Speaker::System, "i cleaned the mug.");
        let ctx = RuleContext {
            preceding: &short,
            goal_values: &[],
        };
        assert_eq!(detect_rule(&long, &ctx).friction_category(), FrictionCategory::Overspecification);
    }

    fn dialogue() -> Dialogue {
        Dialogue::new(
            "d1",
            SourceKind::Synthetic,
            vec![
                Turn::new(0, Speaker::User, "I need a hotel."),
                Turn::new(1, Speaker::System, "What area would you like?"),
            ],
        )
    }

    #[test]
    fn llm_parse_paths() {
        let d = dialogue();
        let b = ScriptedBackend::new(Script::replies([
            "Probing",
            "definitely overspecification here",
            "contextual probing",
            "banana",
        ]));
        let r = detect_llm(&b, &d, 1).unwrap();
        assert_eq!(r.label, FrictionCategory::Probing.into());
        assert_eq!(r.method, DetectionMethod::Llm);
        assert_eq!(r.raw.as_deref(), Some("Probing"));
        assert_eq!(
            detect_llm(&b, &d, 1).unwrap().label,
            FrictionCategory::Overspecification.into()
        );
        // subcategories are reduced to their category
        assert_eq!(detect_llm(&b, &d, 1).unwrap().label, FrictionCategory::Probing.into());
        assert!(matches!(
            detect_llm(&b, &d, 1),
            Err(DetectionError::UnparseableReply(raw)) if raw == "banana"
        ));
        assert!(matches!(detect_llm(&b, &d, 9), Err(DetectionError::NoSuchTurn { .. })));
    }

    #[test]
    fn llm_prompt_holds_context_through_target() {
        let d = dialogue();
        let msgs = detection_messages(&d, 0).unwrap();
        assert!(msgs[0].content.contains(FrictionCategory::Probing.definition()));
        assert!(msgs[1].content.contains("I need a hotel."));
        assert!(!msgs[1].content.contains("What area"));
    }

    #[test]
    fn rule_results_have_no_raw() {
        let r = detect_rule_in(&dialogue(), 1).unwrap();
        assert_eq!(r.raw, None);
        assert_eq!(r.method, DetectionMethod::Rule);
    }
}
