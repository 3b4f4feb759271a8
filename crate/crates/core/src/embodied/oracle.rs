use super::task::{TaskSpec, TaskType};
use super::world::{Place, ReceptacleKind, WorldState};
use crate::llm::{render_template, ChatBackend, ChatMessage, LlmError, TemplateId, Vars};

pub const REFUSAL: &str = "Sorry, I can only tell you where things are and what the task needs.";

/// Who answers the agent's `say` actions.
#[derive(Clone, Copy)]
pub enum UserOracle<'a> {
    /// Keyword rules over the true world state.
    Rule,
    /// A model given the same facts as the rules.
    Backend(&'a dyn ChatBackend),
}

impl UserOracle<'_> {
    pub fn answer(&self, world: &WorldState, task: &TaskSpec, question: &str) -> Result<String, LlmError> {
        match self {
            UserOracle::Rule => Ok(rule_answer(world, task, question)),
            UserOracle::Backend(b) => {
                let mut vars = Vars::new();
                vars.insert("facts".into(), oracle_facts(world, task).join("\n"));
                vars.insert("question".into(), question.to_string());
                let prompt = render_template(TemplateId::EmbodiedUser, &vars)?;
                Ok(b.complete(&[ChatMessage::user(prompt)])?.text)
            }
        }
    }
}

fn whereabouts(world: &WorldState, object: &str) -> Option<String> {
    match &world.objects.get(object)?.place {
        Place::Inventory => Some(format!("You are holding {object}.")),
        Place::Receptacle(r) => {
            let prep = if world.receptacles[r].openable { "in" } else { "on" };
            Some(format!("{object} is {prep} {r} in the {}.", world.receptacles[r].location))
        }
    }
}

fn appliance(task: &TaskSpec) -> Option<(ReceptacleKind, &'static str)> {
    match task.kind {
        TaskType::HeatAndPlace => Some((ReceptacleKind::Heating, "heat")),
        TaskType::CoolAndPlace => Some((ReceptacleKind::Cooling, "cool")),
        TaskType::CleanAndPlace => Some((ReceptacleKind::Cleaning, "clean")),
        _ => None,
    }
}

fn object_facts(world: &WorldState, task: &TaskSpec) -> Vec<String> {
    world
        .objects
        .iter()
        .filter(|(_, o)| o.class == task.object_class)
        .filter_map(|(id, _)| whereabouts(world, id))
        .collect()
}

fn target_fact(world: &WorldState, task: &TaskSpec) -> Option<String> {
    let t = task.target.as_ref()?;
    let loc = &world.receptacles.get(t)?.location;
    Some(format!("It goes in {t} in the {loc}."))
}

fn light_facts(world: &WorldState, task: &TaskSpec) -> Vec<String> {
    let Some(light) = &task.light_class else { return Vec::new() };
    world
        .objects
        .iter()
        .filter(|(_, o)| &o.class == light)
        .filter_map(|(id, _)| whereabouts(world, id))
        .collect()
}

fn appliance_fact(world: &WorldState, task: &TaskSpec) -> Option<String> {
    let (kind, verb) = appliance(task)?;
    let (name, r) = world.receptacles.iter().find(|(_, r)| r.kind == kind)?;
    Some(format!("You can {verb} it with {name} in the {}.", r.location))
}

/// Everything the oracle may reveal.
pub fn oracle_facts(world: &WorldState, task: &TaskSpec) -> Vec<String> {
    let mut facts = vec![format!("The task is to {}", task.describe())];
    facts.extend(object_facts(world, task));
    facts.extend(light_facts(world, task));
    facts.extend(appliance_fact(world, task));
    facts.extend(target_fact(world, task));
    facts
}

fn mentions(q: &str, words: &[&str]) -> bool {
    let padded: String = q
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let padded = format!(" {padded} ");
    words.iter().any(|w| padded.contains(&format!(" {w} ")) || padded.contains(&format!(" {w}s ")))
}

/// Truthful answers to location and task questions; refuses anything else.
pub fn rule_answer(world: &WorldState, task: &TaskSpec, question: &str) -> String {
    let q = question.to_lowercase();
    let mut parts = Vec::new();
    if mentions(&q, &[task.object_class.as_str(), "where", "find", "object"]) {
        parts.extend(object_facts(world, task));
    }
    let light = task.light_class.as_deref().unwrap_or("lamp");
    if mentions(&q, &[light, "lamp", "light"]) {
        parts.extend(light_facts(world, task));
    }
    if mentions(&q, &["heat", "cool", "clean", "microwave", "fridge", "sink", "sinkbasin", "appliance"]) {
        parts.extend(appliance_fact(world, task));
    }
    if mentions(&q, &["put", "place", "goes", "go", "target", "receptacle", "destination"]) {
        parts.extend(target_fact(world, task));
    }
    parts.dedup();
    if parts.is_empty() {
        REFUSAL.to_string()
    } else {
        parts.join(" ")
    }
}
