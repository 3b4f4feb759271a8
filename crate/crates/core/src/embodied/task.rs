use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::world::{Place, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    PickAndPlace,
    HeatAndPlace,
    CoolAndPlace,
    CleanAndPlace,
    ExamineUnderLight,
    PickTwoAndPlace,
}

impl TaskType {
    pub const ALL: [TaskType; 6] = [
        TaskType::PickAndPlace,
        TaskType::HeatAndPlace,
        TaskType::CoolAndPlace,
        TaskType::CleanAndPlace,
        TaskType::ExamineUnderLight,
        TaskType::PickTwoAndPlace,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::PickAndPlace => "pick_and_place",
            TaskType::HeatAndPlace => "heat_and_place",
            TaskType::CoolAndPlace => "cool_and_place",
            TaskType::CleanAndPlace => "clean_and_place",
            TaskType::ExamineUnderLight => "examine_under_light",
            TaskType::PickTwoAndPlace => "pick_two_and_place",
        }
    }

    /// Objects of the target class the task needs.
    pub fn count(self) -> usize {
        if self == TaskType::PickTwoAndPlace {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task type {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    #[serde(rename = "type")]
    pub kind: TaskType,
    pub object_class: String,
    /// Destination receptacle; absent for examine tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Class of the light source for examine tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub light_class: Option<String>,
    /// Target objects start inside closed receptacles.
    #[serde(default)]
    pub hidden: bool,
}

impl TaskSpec {
    pub fn describe(&self) -> String {
        let c = &self.object_class;
        let t = self.target.as_deref().unwrap_or("its place");
        match self.kind {
            TaskType::PickAndPlace => format!("put a {c} in {t}."),
            TaskType::HeatAndPlace => format!("heat a {c} and put it in {t}."),
            TaskType::CoolAndPlace => format!("cool a {c} and put it in {t}."),
            TaskType::CleanAndPlace => format!("clean a {c} and put it in {t}."),
            TaskType::PickTwoAndPlace => format!("put two {c}s in {t}."),
            TaskType::ExamineUnderLight => format!(
                "examine a {c} under the {}.",
                self.light_class.as_deref().unwrap_or("lamp")
            ),
        }
    }
}

/// Whether the world satisfies the task.
pub fn goal_check(world: &WorldState, task: &TaskSpec) -> bool {
    let of_class = world.objects.values().filter(|o| o.class == task.object_class);
    let placed = |o: &&super::world::Object| match &task.target {
        Some(t) => o.place == Place::Receptacle(t.clone()),
        None => false,
    };
    match task.kind {
        TaskType::PickAndPlace => of_class.clone().any(|o| placed(&o)),
        TaskType::HeatAndPlace => of_class.clone().any(|o| placed(&o) && o.state.hot),
        TaskType::CoolAndPlace => of_class.clone().any(|o| placed(&o) && o.state.cold),
        TaskType::CleanAndPlace => of_class.clone().any(|o| placed(&o) && o.state.clean),
        TaskType::PickTwoAndPlace => of_class.filter(placed).count() >= 2,
        TaskType::ExamineUnderLight => of_class.clone().any(|o| o.state.examined_under_light),
    }
}
