//! Friction movement taxonomy.
//!
//! Five friction categories plus `NoFriction`, eleven subcategories nested
//! under four of them, and the label type that pairs the two. Canonical
//! names are lowercase and hyphenated (`"probing/plan-level"`,
//! `"no-friction"`) and are the representation used in every file format.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Bumped whenever a category, subcategory or canonical name changes.
pub const TAXONOMY_VERSION: u32 = 1;

/// Bumped whenever [`ALIASES`] changes.
pub const ALIAS_TABLE_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("unknown friction label: {0:?}")]
    UnknownLabel(String),
    #[error("subcategory {sub} does not belong to category {category}")]
    ParentMismatch {
        category: FrictionCategory,
        sub: FrictionSubcategory,
    },
    #[error("no exemplars exist for no-friction")]
    NoExemplars,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FrictionCategory {
    AssumptionReveal,
    ReflectivePause,
    Reinforcement,
    Overspecification,
    Probing,
    NoFriction,
}

impl FrictionCategory {
    pub const ALL: [FrictionCategory; 6] = [
        FrictionCategory::AssumptionReveal,
        FrictionCategory::ReflectivePause,
        FrictionCategory::Reinforcement,
        FrictionCategory::Overspecification,
        FrictionCategory::Probing,
        FrictionCategory::NoFriction,
    ];

    /// The five categories that count as friction movements.
    pub const MOVEMENTS: [FrictionCategory; 5] = [
        FrictionCategory::AssumptionReveal,
        FrictionCategory::ReflectivePause,
        FrictionCategory::Reinforcement,
        FrictionCategory::Overspecification,
        FrictionCategory::Probing,
    ];

    pub fn canonical_name(self) -> &'static str {
        match self {
            FrictionCategory::AssumptionReveal => "assumption-reveal",
            FrictionCategory::ReflectivePause => "reflective-pause",
            FrictionCategory::Reinforcement => "reinforcement",
            FrictionCategory::Overspecification => "overspecification",
            FrictionCategory::Probing => "probing",
            FrictionCategory::NoFriction => "no-friction",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            FrictionCategory::AssumptionReveal => "Assumption Reveal",
            FrictionCategory::ReflectivePause => "Reflective Pause",
            FrictionCategory::Reinforcement => "Reinforcement",
            FrictionCategory::Overspecification => "Overspecification",
            FrictionCategory::Probing => "Probing",
            FrictionCategory::NoFriction => "No Friction",
        }
    }

    pub fn is_movement(self) -> bool {
        self != FrictionCategory::NoFriction
    }

    pub fn subcategories(self) -> impl Iterator<Item = FrictionSubcategory> {
        FrictionSubcategory::ALL
            .into_iter()
            .filter(move |s| s.parent() == self)
    }

    /// Annotation-manual definition of the category.
    pub fn definition(self) -> &'static str {
        match self {
            FrictionCategory::AssumptionReveal => {
                "The speaker states out loud a belief they had been taking for granted: \
                 something about the surroundings, about what was said earlier, or about \
                 how either party is reasoning and what they are trying to achieve. \
                 Making the belief explicit lets the other party confirm or correct it."
            }
            FrictionCategory::ReflectivePause => {
                "The speaker deliberately holds back, in words or by halting an action, \
                 to show hesitation, to register that something changed, or to switch \
                 to a different course of action before continuing."
            }
            FrictionCategory::Reinforcement => {
                "The speaker repeats something they already said earlier in the \
                 conversation so that it is stressed again and the exchange returns to it."
            }
            FrictionCategory::Overspecification => {
                "The speaker volunteers detail nobody asked for, such as restating every \
                 constraint, narrating an action both sides already saw, or answering a \
                 yes/no question at length, because the extra detail may still help."
            }
            FrictionCategory::Probing => {
                "The speaker asks a question about the surroundings, the task, an earlier \
                 utterance or the plan ahead, handing the turn to the other party so an \
                 ambiguity gets resolved before acting."
            }
            FrictionCategory::NoFriction => {
                "None of the friction movements applies; the utterance simply moves the \
                 conversation forward."
            }
        }
    }
}

impl fmt::Display for FrictionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FrictionSubcategory {
    ContextualAssumptionReveal,
    ConversationalAssumptionReveal,
    MetacognitiveAssumptionReveal,
    ConversationalPause,
    EmbodiedPause,
    RecalibratingPause,
    ElaborativeOverspecification,
    ConfirmativeOverspecification,
    ContextualProbing,
    ConversationalProbing,
    PlanLevelProbing,
}

impl FrictionSubcategory {
    pub const ALL: [FrictionSubcategory; 11] = [
        FrictionSubcategory::ContextualAssumptionReveal,
        FrictionSubcategory::ConversationalAssumptionReveal,
        FrictionSubcategory::MetacognitiveAssumptionReveal,
        FrictionSubcategory::ConversationalPause,
        FrictionSubcategory::EmbodiedPause,
        FrictionSubcategory::RecalibratingPause,
        FrictionSubcategory::ElaborativeOverspecification,
        FrictionSubcategory::ConfirmativeOverspecification,
        FrictionSubcategory::ContextualProbing,
        FrictionSubcategory::ConversationalProbing,
        FrictionSubcategory::PlanLevelProbing,
    ];

    pub fn parent(self) -> FrictionCategory {
        use FrictionSubcategory::*;
        match self {
            ContextualAssumptionReveal
            | ConversationalAssumptionReveal
            | MetacognitiveAssumptionReveal => FrictionCategory::AssumptionReveal,
            ConversationalPause | EmbodiedPause | RecalibratingPause => {
                FrictionCategory::ReflectivePause
            }
            ElaborativeOverspecification | ConfirmativeOverspecification => {
                FrictionCategory::Overspecification
            }
            ContextualProbing | ConversationalProbing | PlanLevelProbing => {
                FrictionCategory::Probing
            }
        }
    }

    /// Qualifier that follows the category in the canonical name.
    fn qualifier(self) -> &'static str {
        use FrictionSubcategory::*;
        match self {
            ContextualAssumptionReveal => "contextual",
            ConversationalAssumptionReveal => "conversational",
            MetacognitiveAssumptionReveal => "metacognitive",
            ConversationalPause => "conversational",
            EmbodiedPause => "embodied",
            RecalibratingPause => "recalibrating",
            ElaborativeOverspecification => "elaborative",
            ConfirmativeOverspecification => "confirmative",
            ContextualProbing => "contextual",
            ConversationalProbing => "conversational",
            PlanLevelProbing => "plan-level",
        }
    }

    pub fn canonical_name(self) -> &'static str {
        use FrictionSubcategory::*;
        match self {
            ContextualAssumptionReveal => "assumption-reveal/contextual",
            ConversationalAssumptionReveal => "assumption-reveal/conversational",
            MetacognitiveAssumptionReveal => "assumption-reveal/metacognitive",
            ConversationalPause => "reflective-pause/conversational",
            EmbodiedPause => "reflective-pause/embodied",
            RecalibratingPause => "reflective-pause/recalibrating",
            ElaborativeOverspecification => "overspecification/elaborative",
            ConfirmativeOverspecification => "overspecification/confirmative",
            ContextualProbing => "probing/contextual",
            ConversationalProbing => "probing/conversational",
            PlanLevelProbing => "probing/plan-level",
        }
    }

    pub fn display_name(self) -> &'static str {
        use FrictionSubcategory::*;
        match self {
            ContextualAssumptionReveal => "Contextual Assumption Reveal",
            ConversationalAssumptionReveal => "Conversational Assumption Reveal",
            MetacognitiveAssumptionReveal => "Metacognitive Assumption Reveal",
            ConversationalPause => "Conversational Pause",
            EmbodiedPause => "Embodied Pause",
            RecalibratingPause => "Recalibrating Pause",
            ElaborativeOverspecification => "Elaborative Overspecification",
            ConfirmativeOverspecification => "Confirmative Overspecification",
            ContextualProbing => "Contextual Probing",
            ConversationalProbing => "Conversational Probing",
            PlanLevelProbing => "Plan-Level Probing",
        }
    }

    pub fn definition(self) -> &'static str {
        use FrictionSubcategory::*;
        match self {
            ContextualAssumptionReveal => "An assumption about the physical or task environment.",
            ConversationalAssumptionReveal => "An assumption about what an earlier utterance meant.",
            MetacognitiveAssumptionReveal => {
                "An assumption about one's own or the partner's reasoning, plans or goals."
            }
            ConversationalPause => "A spoken filler or cue that signals the speaker is thinking.",
            EmbodiedPause => "A deliberate halt or slowdown expressed through physical action.",
            RecalibratingPause => "A pause that marks a change of plan before moving on.",
            ElaborativeOverspecification => {
                "Extra detail about actions or surroundings that both parties could already see."
            }
            ConfirmativeOverspecification => {
                "A confirmation that restates choices or results at greater length than needed."
            }
            ContextualProbing => "A question about the environment, actions or interlocutors.",
            ConversationalProbing => "A question clarifying something said earlier.",
            PlanLevelProbing => "A question about the goal, the reasoning or the next steps.",
        }
    }

    /// Utterances illustrating the subcategory, drawn from booking and
    /// embodied task dialogues.
    pub fn exemplars(self) -> &'static [&'static str] {
        use FrictionSubcategory::*;
        match self {
            ContextualAssumptionReveal => &["that's the mug i think we have to use"],
            ConversationalAssumptionReveal => {
                &["I assume you mean the center of town. We have many hotels in Cambridge."]
            }
            MetacognitiveAssumptionReveal => &["Yes, I think there's been some confusion."],
            ConversationalPause => &["hmm", "...", "Let me think", "Let's see", "I'll check now..."],
            EmbodiedPause => &["[slowly approaches the target instead of directly grabbing]"],
            RecalibratingPause => &["Let's go back to lodgings for a moment."],
            ElaborativeOverspecification => &["i cleaned the mug."],
            ConfirmativeOverspecification => {
                &["Good news! I was able to book two rooms for 5 nights at Finches B&B for you."]
            }
            ContextualProbing => &[
                "Which drawer should I open?",
                "What area in Cambridge would you like to stay?",
            ],
            ConversationalProbing => &[
                "What did you say again?",
                "You said you wanted tomatoes in your sandwich, right?",
            ],
            PlanLevelProbing => &[
                "What's the next step I need to do?",
                "Will we need this mug again later?",
            ],
        }
    }
}

impl fmt::Display for FrictionSubcategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

/// Reinforcement has no subcategories; its exemplar is a three-turn
/// restatement sequence from a hotel booking.
pub const REINFORCEMENT_EXEMPLARS: [&str; 3] = [
    "Do you want a room for Thursday for 3 people, 2 nights?",
    "There are no guesthouses for 3 people for 2 nights starting on Thursday.",
    "Should I book it for 3 people for 2 nights starting from Thursday?",
];

/// A category with an optional subcategory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrictionLabel {
    category: FrictionCategory,
    subcategory: Option<FrictionSubcategory>,
}

impl FrictionLabel {
    pub const NO_FRICTION: FrictionLabel = FrictionLabel {
        category: FrictionCategory::NoFriction,
        subcategory: None,
    };

    pub fn new(
        category: FrictionCategory,
        subcategory: Option<FrictionSubcategory>,
    ) -> Result<Self, TaxonomyError> {
        if let Some(sub) = subcategory {
            if sub.parent() != category {
                return Err(TaxonomyError::ParentMismatch { category, sub });
            }
        }
        Ok(Self {
            category,
            subcategory,
        })
    }

    pub fn category(category: FrictionCategory) -> Self {
        Self {
            category,
            subcategory: None,
        }
    }

    pub fn subcategory(sub: FrictionSubcategory) -> Self {
        Self {
            category: sub.parent(),
            subcategory: Some(sub),
        }
    }

    pub fn friction_category(&self) -> FrictionCategory {
        self.category
    }

    pub fn friction_subcategory(&self) -> Option<FrictionSubcategory> {
        self.subcategory
    }

    pub fn is_friction(&self) -> bool {
        self.category.is_movement()
    }

    /// The same label with the subcategory dropped.
    pub fn category_level(&self) -> Self {
        Self::category(self.category)
    }

    pub fn canonical_name(&self) -> &'static str {
        match self.subcategory {
            Some(sub) => sub.canonical_name(),
            None => self.category.canonical_name(),
        }
    }
}

impl fmt::Display for FrictionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

impl From<FrictionCategory> for FrictionLabel {
    fn from(category: FrictionCategory) -> Self {
        Self::category(category)
    }
}

impl From<FrictionSubcategory> for FrictionLabel {
    fn from(sub: FrictionSubcategory) -> Self {
        Self::subcategory(sub)
    }
}

impl FromStr for FrictionLabel {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_label(s)
    }
}

impl FromStr for FrictionCategory {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(parse_label(s)?.friction_category())
    }
}

impl Serialize for FrictionLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.canonical_name())
    }
}

impl<'de> Deserialize<'de> for FrictionLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for FrictionCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.canonical_name())
    }
}

impl<'de> Deserialize<'de> for FrictionCategory {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let label = parse_label(&s).map_err(serde::de::Error::custom)?;
        if label.friction_subcategory().is_some() {
            return Err(serde::de::Error::custom(format!(
                "expected a category, got subcategory {label}"
            )));
        }
        Ok(label.friction_category())
    }
}

/// Paraphrases emitted by detectors and annotators, keyed by normalized form.
/// Subcategory and category names in both word orders are matched without
/// needing an entry here.
pub static ALIASES: &[(&str, Alias)] = &[
    ("pause", Alias::Category(FrictionCategory::ReflectivePause)),
    ("reflective", Alias::Category(FrictionCategory::ReflectivePause)),
    ("pausing", Alias::Category(FrictionCategory::ReflectivePause)),
    ("reflection", Alias::Category(FrictionCategory::ReflectivePause)),
    ("assumption", Alias::Category(FrictionCategory::AssumptionReveal)),
    ("assumption revealing", Alias::Category(FrictionCategory::AssumptionReveal)),
    ("revealing assumptions", Alias::Category(FrictionCategory::AssumptionReveal)),
    ("reveal", Alias::Category(FrictionCategory::AssumptionReveal)),
    ("probe", Alias::Category(FrictionCategory::Probing)),
    ("question", Alias::Category(FrictionCategory::Probing)),
    ("clarification question", Alias::Category(FrictionCategory::Probing)),
    ("over specification", Alias::Category(FrictionCategory::Overspecification)),
    ("overspecify", Alias::Category(FrictionCategory::Overspecification)),
    ("overspecified", Alias::Category(FrictionCategory::Overspecification)),
    ("reinforce", Alias::Category(FrictionCategory::Reinforcement)),
    ("repetition", Alias::Category(FrictionCategory::Reinforcement)),
    ("restatement", Alias::Category(FrictionCategory::Reinforcement)),
    ("none", Alias::Category(FrictionCategory::NoFriction)),
    ("no friction", Alias::Category(FrictionCategory::NoFriction)),
    ("frictionless", Alias::Category(FrictionCategory::NoFriction)),
    ("plan probing", Alias::Sub(FrictionSubcategory::PlanLevelProbing)),
    ("planning probing", Alias::Sub(FrictionSubcategory::PlanLevelProbing)),
    ("conversational pausing", Alias::Sub(FrictionSubcategory::ConversationalPause)),
    ("recalibration pause", Alias::Sub(FrictionSubcategory::RecalibratingPause)),
    ("metacognitive reveal", Alias::Sub(FrictionSubcategory::MetacognitiveAssumptionReveal)),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alias {
    Category(FrictionCategory),
    Sub(FrictionSubcategory),
}

impl Alias {
    fn label(self) -> FrictionLabel {
        match self {
            Alias::Category(c) => FrictionLabel::category(c),
            Alias::Sub(s) => FrictionLabel::subcategory(s),
        }
    }
}

/// Lowercases and splits on anything that is not alphanumeric.
fn normalize(text: &str) -> String {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Every normalized surface form and the label it denotes.
fn surface_forms() -> Vec<(String, FrictionLabel)> {
    let mut forms = Vec::new();
    for cat in FrictionCategory::ALL {
        let label = FrictionLabel::category(cat);
        forms.push((normalize(cat.canonical_name()), label));
        forms.push((normalize(cat.display_name()), label));
    }
    for sub in FrictionSubcategory::ALL {
        let label = FrictionLabel::subcategory(sub);
        forms.push((normalize(sub.canonical_name()), label));
        forms.push((normalize(sub.display_name()), label));
        // "probing contextual" style
        forms.push((
            normalize(&format!("{} {}", sub.parent().display_name(), sub.qualifier())),
            label,
        ));
    }
    for (alias, target) in ALIASES {
        forms.push((normalize(alias), target.label()));
    }
    forms
}

/// Parses a free-form label, insensitive to case, whitespace and punctuation.
/// Unmatched text is an error rather than `no-friction`.
pub fn parse_label(text: &str) -> Result<FrictionLabel, TaxonomyError> {
    let norm = normalize(text);
    if norm.is_empty() {
        return Err(TaxonomyError::UnknownLabel(text.to_string()));
    }
    surface_forms()
        .into_iter()
        .find(|(form, _)| *form == norm)
        .map(|(_, label)| label)
        .ok_or_else(|| TaxonomyError::UnknownLabel(text.to_string()))
}

/// Finds a label mentioned inside longer text, e.g. a chatty model reply.
///
/// Surface forms are matched as whole-token runs; matches contained in a
/// longer match are discarded. Succeeds only if all remaining matches agree
/// on the category.
pub fn find_label(text: &str) -> Result<FrictionLabel, TaxonomyError> {
    if let Ok(label) = parse_label(text) {
        return Ok(label);
    }
    let tokens: Vec<String> = normalize(text).split(' ').map(str::to_string).collect();
    let mut hits: Vec<(usize, usize, FrictionLabel)> = Vec::new();
    for (form, label) in surface_forms() {
        let ftoks: Vec<&str> = form.split(' ').collect();
        if ftoks.len() > tokens.len() {
            continue;
        }
        for start in 0..=tokens.len() - ftoks.len() {
            if tokens[start..start + ftoks.len()]
                .iter()
                .zip(&ftoks)
                .all(|(a, b)| a == b)
            {
                hits.push((start, start + ftoks.len(), label));
            }
        }
    }
    let maximal: Vec<FrictionLabel> = hits
        .iter()
        .filter(|(s, e, _)| {
            !hits
                .iter()
                .any(|(s2, e2, _)| s2 <= s && e <= e2 && (e2 - s2) > (e - s))
        })
        .map(|(_, _, l)| *l)
        .collect();
    let first = maximal
        .first()
        .copied()
        .ok_or_else(|| TaxonomyError::UnknownLabel(text.to_string()))?;
    if maximal
        .iter()
        .all(|l| l.friction_category() == first.friction_category())
    {
        let same_sub = maximal
            .iter()
            .all(|l| l.friction_subcategory() == first.friction_subcategory());
        Ok(if same_sub {
            first
        } else {
            first.category_level()
        })
    } else {
        Err(TaxonomyError::UnknownLabel(text.to_string()))
    }
}

/// Bundled exemplar utterances for a label. A category-level label returns
/// the exemplars of all its subcategories.
pub fn exemplars(label: FrictionLabel) -> Result<Vec<&'static str>, TaxonomyError> {
    match (label.friction_category(), label.friction_subcategory()) {
        (FrictionCategory::NoFriction, _) => Err(TaxonomyError::NoExemplars),
        (FrictionCategory::Reinforcement, _) => Ok(REINFORCEMENT_EXEMPLARS.to_vec()),
        (_, Some(sub)) => Ok(sub.exemplars().to_vec()),
        (cat, None) => Ok(cat
            .subcategories()
            .flat_map(|s| s.exemplars().iter().copied())
            .collect()),
    }
}

/// Where a friction-augmented agent operates; selects the in-context example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    Booking,
    Embodied,
}

/// The single in-context example shown to an agent for a category.
pub fn in_context_example(category: FrictionCategory, setting: Setting) -> Option<&'static str> {
    use FrictionCategory::*;
    let text = match (category, setting) {
        (AssumptionReveal, Setting::Booking) => {
            FrictionSubcategory::ConversationalAssumptionReveal.exemplars()[0]
        }
        (AssumptionReveal, Setting::Embodied) => {
            FrictionSubcategory::ContextualAssumptionReveal.exemplars()[0]
        }
        (ReflectivePause, Setting::Booking) => {
            FrictionSubcategory::RecalibratingPause.exemplars()[0]
        }
        (ReflectivePause, Setting::Embodied) => {
            FrictionSubcategory::ConversationalPause.exemplars()[2]
        }
        (Reinforcement, _) => REINFORCEMENT_EXEMPLARS[2],
        (Overspecification, Setting::Booking) => {
            FrictionSubcategory::ConfirmativeOverspecification.exemplars()[0]
        }
        (Overspecification, Setting::Embodied) => {
            FrictionSubcategory::ElaborativeOverspecification.exemplars()[0]
        }
        (Probing, Setting::Booking) => FrictionSubcategory::ContextualProbing.exemplars()[1],
        (Probing, Setting::Embodied) => FrictionSubcategory::ContextualProbing.exemplars()[0],
        (NoFriction, _) => return None,
    };
    Some(text)
}
