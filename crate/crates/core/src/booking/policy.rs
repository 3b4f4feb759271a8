//! Scripted assistant and user policies for offline booking runs.
//!
//! The generator plays out one conversation against the database ahead of
//! time and emits the two scripts that reproduce it. The simulated user
//! sometimes leaves out a constraint and the simulated assistant sometimes
//! forgets a requested attribute; the enabled friction movements change how
//! the assistant reacts to the first slip.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::db::{Entity, EntityDb};
use super::episode::TERMINATION_TOKEN;
use crate::goal::{Domain, DomainGoal, UserGoal};
use crate::llm::{Script, ScriptEntry};
use crate::taxonomy::FrictionCategory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipRates {
    /// Chance the user leaves one constraint out of their request.
    pub underspecify: f64,
    /// Chance the assistant leaves one requested attribute out of its answer.
    pub omit_request: f64,
}

impl Default for SlipRates {
    fn default() -> Self {
        Self {
            underspecify: 0.5,
            omit_request: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyScripts {
    pub assistant: Script,
    pub user: Script,
}

fn phrase(constraints: &BTreeMap<String, String>) -> String {
    constraints
        .iter()
        .map(|(k, v)| format!("{k} {v}"))
        .collect::<Vec<_>>()
        .join(" and ")
}

fn query_line(domain: Domain, constraints: &BTreeMap<String, String>) -> String {
    format!(
        "Action: query {domain} {}",
        serde_json::to_string(constraints).expect("string map serializes")
    )
}

struct Builder {
    assistant: Vec<ScriptEntry>,
    user: Vec<ScriptEntry>,
}

impl Builder {
    fn user(&mut self, text: String) {
        self.user.push(ScriptEntry::reply(text));
    }

    fn assistant(&mut self, text: String) {
        self.assistant.push(ScriptEntry::reply(text));
    }
}

fn first<'a>(db: &'a EntityDb, domain: Domain, c: &BTreeMap<String, String>) -> Option<&'a Entity> {
    db.query(domain, c).ok().and_then(|hits| hits.into_iter().next())
}

fn play_domain<R: Rng>(
    b: &mut Builder,
    db: &EntityDb,
    domain: Domain,
    goal: &DomainGoal,
    friction: &[FrictionCategory],
    slips: &SlipRates,
    rng: &mut R,
) {
    let enabled = |c: FrictionCategory| friction.contains(&c);
    let mut known = goal.constraints.clone();
    let withheld = if !known.is_empty() && rng.random_bool(slips.underspecify) {
        let keys: Vec<String> = known.keys().cloned().collect();
        keys.choose(rng).cloned()
    } else {
        None
    };
    if let Some(k) = &withheld {
        known.remove(k);
    }
    if known.is_empty() {
        b.user(format!("I'm looking for a {domain}."));
    } else {
        b.user(format!("I'm looking for a {domain} with {}.", phrase(&known)));
    }

    if let Some(attr) = &withheld {
        let wanted = goal.constraints[attr].clone();
        if enabled(FrictionCategory::Probing) {
            b.assistant(format!("Response: What {attr} would you like for the {domain}?"));
            b.user(format!("The {attr} should be {wanted}."));
            known.insert(attr.clone(), wanted);
        } else if enabled(FrictionCategory::AssumptionReveal) {
            b.assistant(query_line(domain, &known));
            let guess = first(db, domain, &known)
                .and_then(|e| e.get(attr))
                .unwrap_or("any")
                .to_string();
            b.assistant(format!(
                "Response: I assume {guess} is fine for the {attr}, so I will go with that."
            ));
            if guess == wanted {
                b.user(format!("Yes, {wanted} is right."));
            } else {
                b.user(format!("Actually I need {attr} {wanted}."));
            }
            known.insert(attr.clone(), wanted);
        }
    }

    b.assistant(query_line(domain, &known));
    let Some(chosen) = first(db, domain, &known) else {
        b.assistant(format!("Response: Sorry, I have no {domain} like that."));
        return;
    };
    let mut answer = format!("Response: {} would suit you.", chosen.name);
    if enabled(FrictionCategory::Overspecification) {
        let mut details = known.clone();
        details.extend(goal.booking.clone());
        answer.push_str(&format!(
            " To confirm, that is {} with {}.",
            chosen.name,
            phrase(&details)
        ));
    }
    b.assistant(answer);

    if goal.requests.is_empty() {
        return;
    }
    b.user(format!("Could you tell me its {}?", goal.requests.join(" and ")));
    let mut told: Vec<&String> = goal.requests.iter().collect();
    if rng.random_bool(slips.omit_request) {
        told.pop();
    }
    let facts: Vec<String> = told
        .iter()
        .filter_map(|r| chosen.get(r).map(|v| format!("The {r} is {v}.")))
        .collect();
    if facts.is_empty() {
        b.assistant("Response: Let me know if you need anything else.".into());
    } else {
        b.assistant(format!("Response: {}", facts.join(" ")));
    }
}

/// Builds the scripts for one episode. Both scripts are consumed strictly
/// in order by the episode loop.
pub fn policy_scripts<R: Rng>(
    db: &EntityDb,
    goal: &UserGoal,
    friction: &[FrictionCategory],
    slips: &SlipRates,
    rng: &mut R,
) -> PolicyScripts {
    let mut b = Builder {
        assistant: Vec::new(),
        user: Vec::new(),
    };
    for (domain, g) in &goal.domains {
        play_domain(&mut b, db, *domain, g, friction, slips, rng);
    }
    b.user(format!("Thanks, that's all. {TERMINATION_TOKEN}"));
    PolicyScripts {
        assistant: Script::new(b.assistant),
        user: Script::new(b.user),
    }
}
