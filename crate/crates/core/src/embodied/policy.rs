//! Scripted agents for offline runs.
//!
//! Each policy is played out on a copy of the world ahead of time and the
//! resulting commands become an ordered script, so replaying the script
//! against the same world reproduces the trajectory exactly.

use super::generate::WorldFile;
use super::task::TaskType;
use super::world::{Action, Place, ReceptacleKind, WorldState};
use crate::llm::Script;
use crate::taxonomy::FrictionCategory;

struct Planner {
    world: WorldState,
    actions: Vec<Action>,
}

impl Planner {
    fn act(&mut self, action: Action) {
        let obs = self.world.apply(&action);
        debug_assert!(obs.success, "{action} failed: {}", obs.text);
        self.actions.push(action);
    }

    fn go(&mut self, location: &str) {
        if self.world.agent_at != location {
            self.act(Action::GoTo(location.to_string()));
        }
    }

    fn go_to_receptacle(&mut self, r: &str) {
        let loc = self.world.receptacles[r].location.clone();
        self.go(&loc);
    }

    fn open(&mut self, r: &str) {
        let rec = &self.world.receptacles[r];
        if rec.openable && !rec.open {
            self.act(Action::Open(r.to_string()));
        }
    }

    /// Visits closed cabinets and drawers in name order, opening each,
    /// until every needed object has been seen.
    fn search(&mut self, needed: &[String]) {
        let candidates: Vec<String> = self
            .world
            .receptacles
            .iter()
            .filter(|(_, r)| r.openable && r.kind == ReceptacleKind::Plain)
            .map(|(n, _)| n.clone())
            .collect();
        let mut seen: Vec<&String> = Vec::new();
        for r in candidates {
            if needed.iter().all(|o| seen.contains(&o)) {
                break;
            }
            self.go_to_receptacle(&r);
            self.open(&r);
            for o in needed {
                if self.world.objects[o].place == Place::Receptacle(r.clone()) {
                    seen.push(o);
                }
            }
        }
    }

    fn fetch(&mut self, object: &str) {
        let Place::Receptacle(r) = self.world.objects[object].place.clone() else {
            return;
        };
        self.go_to_receptacle(&r);
        self.open(&r);
        self.act(Action::Take {
            object: object.to_string(),
            from: r,
        });
    }

    fn treat(&mut self, object: &str, kind: ReceptacleKind) {
        let Some(appliance) = self
            .world
            .receptacles
            .iter()
            .find(|(_, r)| r.kind == kind)
            .map(|(n, _)| n.clone())
        else {
            return;
        };
        self.go_to_receptacle(&appliance);
        let (object, with) = (object.to_string(), appliance);
        self.act(match kind {
            ReceptacleKind::Heating => Action::Heat { object, with },
            ReceptacleKind::Cooling => Action::Cool { object, with },
            _ => Action::Clean { object, with },
        });
    }

    fn deliver(&mut self, wf: &WorldFile, object: &str) {
        self.fetch(object);
        let task = &wf.task;
        match task.kind {
            TaskType::HeatAndPlace => self.treat(object, ReceptacleKind::Heating),
            TaskType::CoolAndPlace => self.treat(object, ReceptacleKind::Cooling),
            TaskType::CleanAndPlace => self.treat(object, ReceptacleKind::Cleaning),
            _ => {}
        }
        if task.kind == TaskType::ExamineUnderLight {
            let light = task.light_class.as_deref().unwrap_or("desklamp");
            let Some((lamp, on)) = self
                .world
                .objects
                .iter()
                .find(|(_, o)| o.class == light)
                .map(|(id, o)| (id.clone(), o.state.toggled))
            else {
                return;
            };
            if let Place::Receptacle(r) = self.world.objects[&lamp].place.clone() {
                self.go_to_receptacle(&r);
            }
            if !on {
                self.act(Action::Toggle(lamp));
            }
            self.act(Action::Examine(object.to_string()));
            return;
        }
        if let Some(target) = &task.target {
            self.go_to_receptacle(target);
            self.act(Action::Put {
                object: object.to_string(),
                into: target.clone(),
            });
        }
    }
}

fn verb_phrase(kind: TaskType) -> &'static str {
    match kind {
        TaskType::HeatAndPlace => "heat it",
        TaskType::CoolAndPlace => "cool it",
        TaskType::CleanAndPlace => "clean it",
        TaskType::ExamineUnderLight => "examine it under the lamp",
        _ => "carry it",
    }
}

/// Non-physical opening moves for the enabled friction categories.
fn friction_moves(wf: &WorldFile, friction: &[FrictionCategory]) -> Vec<Action> {
    let c = &wf.task.object_class;
    let target = wf.task.target.as_deref().unwrap_or("the right place");
    let mut out = Vec::new();
    for cat in FrictionCategory::MOVEMENTS {
        if !friction.contains(&cat) {
            continue;
        }
        out.push(match cat {
            FrictionCategory::ReflectivePause => Action::Think(format!("let me think about where the {c} could be")),
            FrictionCategory::AssumptionReveal => {
                Action::Say(format!("i think the {c} is the one we have to use, right?"))
            }
            FrictionCategory::Reinforcement => Action::Say(format!("so the task is to {}", wf.task.describe())),
            FrictionCategory::Overspecification => Action::Say(format!(
                "i will take the {c}, {} and then put it in {target}.",
                verb_phrase(wf.task.kind)
            )),
            FrictionCategory::Probing => {
                if wf.task.kind == TaskType::ExamineUnderLight {
                    Action::Say(format!("where are the {c} and the lamp?"))
                } else {
                    Action::Say(format!("where is the {c}?"))
                }
            }
            FrictionCategory::NoFriction => continue,
        });
    }
    out
}

/// Commands for a scripted agent. With probing enabled the agent asks where
/// the task objects are and then acts directly; otherwise it searches the
/// closed cabinets and drawers first. Other enabled movements add one
/// non-physical step each before acting.
pub fn agent_script(wf: &WorldFile, friction: &[FrictionCategory]) -> Script {
    let mut p = Planner {
        world: wf.world.clone(),
        actions: friction_moves(wf, friction),
    };
    let needed: Vec<String> = wf
        .world
        .objects
        .iter()
        .filter(|(_, o)| o.class == wf.task.object_class)
        .map(|(id, _)| id.clone())
        .take(wf.task.kind.count())
        .collect();
    if !friction.contains(&FrictionCategory::Probing) {
        p.search(&needed);
    }
    for o in &needed {
        p.deliver(wf, o);
    }
    Script::replies(p.actions.iter().map(|a| a.to_string()))
}

/// The shortest plan the policies use, without dialogue or search.
pub fn optimal_plan(wf: &WorldFile) -> Vec<Action> {
    let mut p = Planner {
        world: wf.world.clone(),
        actions: Vec::new(),
    };
    let needed: Vec<String> = wf
        .world
        .objects
        .iter()
        .filter(|(_, o)| o.class == wf.task.object_class)
        .map(|(id, _)| id.clone())
        .take(wf.task.kind.count())
        .collect();
    for o in &needed {
        p.deliver(wf, o);
    }
    p.actions
}
