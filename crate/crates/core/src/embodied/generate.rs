use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::task::{TaskSpec, TaskType};
use super::world::{Object, ObjectState, Place, Receptacle, ReceptacleKind, WorldState};
use crate::corpus::keyed_rng;

/// A world together with the task to solve in it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldFile {
    pub world: WorldState,
    pub task: TaskSpec,
}

pub const START_LOCATION: &str = "hallway";
pub const DEFAULT_ROOMS: usize = 6;
const ROOMS: [&str; 7] = ["kitchen", "pantry", "dining room", "living room", "bedroom", "bathroom", "study"];
const DECOYS: [&str; 10] = ["apple", "book", "bowl", "cd", "mug", "pen", "plate", "potato", "spoon", "vase"];

fn classes(kind: TaskType) -> &'static [&'static str] {
    match kind {
        TaskType::PickAndPlace => &["book", "cd", "keychain", "pen", "mug", "plate", "vase"],
        TaskType::HeatAndPlace => &["potato", "apple", "mug", "tomato", "bread"],
        TaskType::CoolAndPlace => &["apple", "tomato", "mug", "lettuce", "bread"],
        TaskType::CleanAndPlace => &["mug", "plate", "bowl", "spoon", "knife"],
        TaskType::ExamineUnderLight => &["book", "cd", "pen", "keychain", "statue"],
        TaskType::PickTwoAndPlace => &["book", "cd", "pen", "keychain", "spraybottle"],
    }
}

/// Seeded hidden-object world: the task objects start inside closed
/// cabinets or drawers. `rooms` excludes the hallway and is clamped to
/// 2..=7, so a world has at most 8 locations.
pub fn generate_world(seed: u64, index: usize, rooms: usize) -> WorldFile {
    let mut rng = keyed_rng(seed, &format!("world/{index}"));
    let rooms = rooms.clamp(2, ROOMS.len());
    let mut names: Vec<&str> = ROOMS.to_vec();
    names.shuffle(&mut rng);
    names.truncate(rooms);

    let mut specs: Vec<(String, bool, ReceptacleKind)> = vec![
        ("countertop 1".into(), false, ReceptacleKind::Plain),
        ("diningtable 1".into(), false, ReceptacleKind::Plain),
        ("shelf 1".into(), false, ReceptacleKind::Plain),
        ("desk 1".into(), false, ReceptacleKind::Plain),
        ("sinkbasin 1".into(), false, ReceptacleKind::Cleaning),
        ("microwave 1".into(), true, ReceptacleKind::Heating),
        ("fridge 1".into(), true, ReceptacleKind::Cooling),
    ];
    for i in 1..=rng.random_range(2..=3) {
        specs.push((format!("cabinet {i}"), true, ReceptacleKind::Plain));
    }
    for i in 1..=rng.random_range(2..=3) {
        specs.push((format!("drawer {i}"), true, ReceptacleKind::Plain));
    }
    specs.shuffle(&mut rng);
    let mut receptacles = BTreeMap::new();
    for (i, (name, openable, kind)) in specs.into_iter().enumerate() {
        // every room gets at least one receptacle
        let room = if i < names.len() { names[i] } else { *names.choose(&mut rng).expect("rooms") };
        receptacles.insert(
            name,
            Receptacle {
                location: room.to_string(),
                kind,
                openable,
                open: false,
            },
        );
    }

    let kind = *TaskType::ALL.choose(&mut rng).expect("six task types");
    let class = classes(kind).choose(&mut rng).expect("classes").to_string();
    let hiding: Vec<String> = receptacles
        .iter()
        .filter(|(_, r)| r.openable && r.kind == ReceptacleKind::Plain)
        .map(|(n, _)| n.clone())
        .collect();
    let target = match kind {
        TaskType::ExamineUnderLight => None,
        _ => ["countertop 1", "diningtable 1", "shelf 1", "desk 1"]
            .choose(&mut rng)
            .map(|s| s.to_string()),
    };

    let mut objects = BTreeMap::new();
    let object = |class: &str, r: &str| Object {
        class: class.to_string(),
        place: Place::Receptacle(r.to_string()),
        toggleable: false,
        state: ObjectState::default(),
    };
    for n in 1..=kind.count() {
        let r = hiding.choose(&mut rng).expect("hiding places");
        objects.insert(format!("{class} {n}"), object(&class, r));
    }
    let decoy_classes: Vec<&str> = DECOYS.iter().copied().filter(|c| *c != class).collect();
    let all: Vec<String> = receptacles.keys().cloned().collect();
    let mut used = BTreeSet::new();
    for _ in 0..rng.random_range(3..=5) {
        let c = decoy_classes.choose(&mut rng).expect("decoys");
        let n = (1..).find(|n| !used.contains(&format!("{c} {n}"))).expect("free index");
        let id = format!("{c} {n}");
        used.insert(id.clone());
        objects.insert(id, object(c, all.choose(&mut rng).expect("receptacles")));
    }
    objects.insert(
        "desklamp 1".into(),
        Object {
            toggleable: true,
            ..object("desklamp", "desk 1")
        },
    );

    let mut locations: BTreeSet<String> = names.iter().map(|s| s.to_string()).collect();
    locations.insert(START_LOCATION.to_string());
    WorldFile {
        world: WorldState {
            locations,
            receptacles,
            objects,
            agent_at: START_LOCATION.to_string(),
        },
        task: TaskSpec {
            kind,
            object_class: class,
            target,
            light_class: (kind == TaskType::ExamineUnderLight).then(|| "desklamp".to_string()),
            hidden: true,
        },
    }
}
