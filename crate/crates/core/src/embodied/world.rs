use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceptacleKind {
    Plain,
    Heating,
    Cooling,
    Cleaning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receptacle {
    pub location: String,
    pub kind: ReceptacleKind,
    /// Surfaces are not openable and always show their contents.
    pub openable: bool,
    pub open: bool,
}

impl Receptacle {
    pub fn accessible(&self) -> bool {
        !self.openable || self.open
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Place {
    Inventory,
    Receptacle(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectState {
    pub clean: bool,
    pub hot: bool,
    pub cold: bool,
    pub toggled: bool,
    /// Examined while held next to a lit lamp.
    pub examined_under_light: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Object {
    pub class: String,
    pub place: Place,
    #[serde(default)]
    pub toggleable: bool,
    #[serde(default)]
    pub state: ObjectState,
}

/// A small text world. Objects are named `<class> <n>`, e.g. `mug 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub locations: BTreeSet<String>,
    pub receptacles: BTreeMap<String, Receptacle>,
    pub objects: BTreeMap<String, Object>,
    pub agent_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "args", rename_all = "lowercase")]
pub enum Action {
    GoTo(String),
    Open(String),
    Close(String),
    Take { object: String, from: String },
    Put { object: String, into: String },
    Clean { object: String, with: String },
    Heat { object: String, with: String },
    Cool { object: String, with: String },
    Toggle(String),
    Examine(String),
    Say(String),
    Think(String),
}

impl Action {
    /// Everything except `say` and `think` acts on the world.
    pub fn is_physical(&self) -> bool {
        !matches!(self, Action::Say(_) | Action::Think(_))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::GoTo(l) => write!(f, "go to {l}"),
            Action::Open(r) => write!(f, "open {r}"),
            Action::Close(r) => write!(f, "close {r}"),
            Action::Take { object, from } => write!(f, "take {object} from {from}"),
            Action::Put { object, into } => write!(f, "put {object} in {into}"),
            Action::Clean { object, with } => write!(f, "clean {object} with {with}"),
            Action::Heat { object, with } => write!(f, "heat {object} with {with}"),
            Action::Cool { object, with } => write!(f, "cool {object} with {with}"),
            Action::Toggle(o) => write!(f, "toggle {o}"),
            Action::Examine(o) => write!(f, "examine {o}"),
            Action::Say(s) => write!(f, "say: {s}"),
            Action::Think(s) => write!(f, "think: {s}"),
        }
    }
}

/// Parses one command; the first non-empty line is used and an optional
/// `Action:` or `>` prefix is ignored.
pub fn parse_action(text: &str) -> Result<Action, String> {
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or("empty command")?;
    let mut line = line.trim_start_matches('>').trim();
    if line.len() >= 7 && line[..7].eq_ignore_ascii_case("action:") {
        line = line[7..].trim();
    }
    let lower = line.to_lowercase();
    for (prefix, make) in [("say:", Action::Say as fn(String) -> Action), ("think:", Action::Think)] {
        if lower.starts_with(prefix) {
            let body = line[prefix.len()..].trim();
            if body.is_empty() {
                return Err(format!("nothing to {}", &prefix[..prefix.len() - 1]));
            }
            return Ok(make(body.to_string()));
        }
    }
    let words: Vec<&str> = lower.split_whitespace().collect();
    let rest = |n: usize| words[n..].join(" ");
    let split = |s: String, sep: &[&str]| -> Option<(String, String)> {
        sep.iter().find_map(|sep| {
            s.split_once(&format!(" {sep} "))
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        })
    };
    let nonempty = |s: String| if s.is_empty() { Err(format!("incomplete command {line:?}")) } else { Ok(s) };
    match words.as_slice() {
        ["go", "to", ..] => Ok(Action::GoTo(nonempty(rest(2))?)),
        ["open", ..] => Ok(Action::Open(nonempty(rest(1))?)),
        ["close", ..] => Ok(Action::Close(nonempty(rest(1))?)),
        ["toggle", ..] | ["use", ..] => Ok(Action::Toggle(nonempty(rest(1))?)),
        ["examine", ..] => Ok(Action::Examine(nonempty(rest(1))?)),
        [verb @ ("take" | "put" | "clean" | "heat" | "cool"), ..] => {
            let seps: &[&str] = match *verb {
                "take" => &["from"],
                "put" => &["in", "on", "in/on"],
                _ => &["with"],
            };
            let (object, other) =
                split(rest(1), seps).ok_or_else(|| format!("incomplete command {line:?}"))?;
            let (object, other) = (nonempty(object)?, nonempty(other)?);
            Ok(match *verb {
                "take" => Action::Take { object, from: other },
                "put" => Action::Put { object, into: other },
                "clean" => Action::Clean { object, with: other },
                "heat" => Action::Heat { object, with: other },
                _ => Action::Cool { object, with: other },
            })
        }
        _ => Err(format!("unknown command {line:?}")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub text: String,
    pub success: bool,
}

impl Observation {
    fn ok(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            success: true,
        }
    }

    fn fail(reason: &str) -> Self {
        Self {
            text: format!("Nothing happens: {reason}."),
            success: false,
        }
    }
}

impl WorldState {
    pub fn objects_in(&self, receptacle: &str) -> Vec<&str> {
        self.objects
            .iter()
            .filter(|(_, o)| o.place == Place::Receptacle(receptacle.to_string()))
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn holding(&self) -> Option<&str> {
        self.objects
            .iter()
            .find(|(_, o)| o.place == Place::Inventory)
            .map(|(id, _)| id.as_str())
    }

    /// Location of an object, through its receptacle; `None` when held.
    pub fn object_location(&self, object: &str) -> Option<&str> {
        match &self.objects.get(object)?.place {
            Place::Inventory => None,
            Place::Receptacle(r) => self.receptacles.get(r).map(|r| r.location.as_str()),
        }
    }

    pub fn receptacles_at(&self, location: &str) -> Vec<&str> {
        self.receptacles
            .iter()
            .filter(|(_, r)| r.location == location)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Held, or inside an accessible receptacle at the agent's location.
    pub fn visible(&self, object: &str) -> bool {
        match self.objects.get(object).map(|o| &o.place) {
            Some(Place::Inventory) => true,
            Some(Place::Receptacle(r)) => self
                .receptacles
                .get(r)
                .is_some_and(|r| r.location == self.agent_at && r.accessible()),
            None => false,
        }
    }

    fn contents_line(&self, receptacle: &str) -> String {
        let inside = self.objects_in(receptacle);
        let prep = if self.receptacles[receptacle].openable { "In" } else { "On" };
        if inside.is_empty() {
            format!("{prep} {receptacle} you see nothing.")
        } else {
            format!("{prep} {receptacle} you see {}.", inside.join(", "))
        }
    }

    /// Receptacles at the current location and the contents of the
    /// accessible ones.
    pub fn describe_location(&self) -> String {
        let here = self.receptacles_at(&self.agent_at);
        let mut text = format!("You are at the {}.", self.agent_at);
        if here.is_empty() {
            return text;
        }
        let listed: Vec<String> = here
            .iter()
            .map(|r| {
                let rec = &self.receptacles[*r];
                match (rec.openable, rec.open) {
                    (true, false) => format!("{r} (closed)"),
                    (true, true) => format!("{r} (open)"),
                    _ => r.to_string(),
                }
            })
            .collect();
        text.push_str(&format!(" You see {}.", listed.join(", ")));
        for r in here {
            if self.receptacles[r].accessible() {
                text.push(' ');
                text.push_str(&self.contents_line(r));
            }
        }
        text
    }

    /// Locations and the receptacles in each; no contents.
    pub fn describe_layout(&self) -> String {
        let parts: Vec<String> = self
            .locations
            .iter()
            .map(|l| {
                let rs = self.receptacles_at(l);
                if rs.is_empty() {
                    l.clone()
                } else {
                    format!("{l} ({})", rs.join(", "))
                }
            })
            .collect();
        format!("You are at the {}. The house has: {}.", self.agent_at, parts.join("; "))
    }

    fn reach(&self, receptacle: &str) -> Result<&Receptacle, Observation> {
        let r = self
            .receptacles
            .get(receptacle)
            .ok_or_else(|| Observation::fail("there is no such receptacle"))?;
        if r.location != self.agent_at {
            return Err(Observation::fail(&format!("{receptacle} is not here")));
        }
        Ok(r)
    }

    fn holding_checked(&self, object: &str) -> Result<(), Observation> {
        if self.holding() == Some(object) {
            Ok(())
        } else {
            Err(Observation::fail("you are not holding that"))
        }
    }

    fn appliance(&self, receptacle: &str, kind: ReceptacleKind) -> Result<(), Observation> {
        let r = self.reach(receptacle)?;
        if r.kind != kind {
            return Err(Observation::fail(&format!("{receptacle} cannot do that")));
        }
        Ok(())
    }

    /// Applies an action in place. Failed preconditions leave the world
    /// unchanged and are reported in the observation.
    pub fn apply(&mut self, action: &Action) -> Observation {
        match self.try_apply(action) {
            Ok(o) | Err(o) => o,
        }
    }

    fn try_apply(&mut self, action: &Action) -> Result<Observation, Observation> {
        match action {
            Action::Say(_) | Action::Think(_) => Ok(Observation::ok("OK.")),
            Action::GoTo(target) => {
                let location = if self.locations.contains(target) {
                    target.clone()
                } else if let Some(r) = self.receptacles.get(target) {
                    r.location.clone()
                } else {
                    return Err(Observation::fail("there is no such place"));
                };
                self.agent_at = location;
                Ok(Observation::ok(self.describe_location()))
            }
            Action::Open(r) | Action::Close(r) => {
                let opening = matches!(action, Action::Open(_));
                let rec = self.reach(r)?;
                if !rec.openable {
                    return Err(Observation::fail(&format!("{r} cannot be opened or closed")));
                }
                if rec.open == opening {
                    return Err(Observation::fail(&format!(
                        "{r} is already {}",
                        if opening { "open" } else { "closed" }
                    )));
                }
                self.receptacles.get_mut(r).expect("reached").open = opening;
                if opening {
                    Ok(Observation::ok(format!("You open {r}. {}", self.contents_line(r))))
                } else {
                    Ok(Observation::ok(format!("You close {r}.")))
                }
            }
            Action::Take { object, from } => {
                let rec = self.reach(from)?;
                if !rec.accessible() {
                    return Err(Observation::fail(&format!("{from} is closed")));
                }
                if self.holding().is_some() {
                    return Err(Observation::fail("your hands are full"));
                }
                match self.objects.get_mut(object) {
                    Some(o) if o.place == Place::Receptacle(from.clone()) => {
                        o.place = Place::Inventory;
                        Ok(Observation::ok(format!("You pick up {object} from {from}.")))
                    }
                    _ => Err(Observation::fail(&format!("that is not in {from}"))),
                }
            }
            Action::Put { object, into } => {
                self.holding_checked(object)?;
                let rec = self.reach(into)?;
                if !rec.accessible() {
                    return Err(Observation::fail(&format!("{into} is closed")));
                }
                self.objects.get_mut(object).expect("held").place = Place::Receptacle(into.clone());
                Ok(Observation::ok(format!("You put {object} in {into}.")))
            }
            Action::Clean { object, with } | Action::Heat { object, with } | Action::Cool { object, with } => {
                self.holding_checked(object)?;
                let (kind, verb) = match action {
                    Action::Clean { .. } => (ReceptacleKind::Cleaning, "clean"),
                    Action::Heat { .. } => (ReceptacleKind::Heating, "heat"),
                    _ => (ReceptacleKind::Cooling, "cool"),
                };
                self.appliance(with, kind)?;
                let s = &mut self.objects.get_mut(object).expect("held").state;
                match kind {
                    ReceptacleKind::Cleaning => s.clean = true,
                    ReceptacleKind::Heating => {
                        s.hot = true;
                        s.cold = false;
                    }
                    _ => {
                        s.cold = true;
                        s.hot = false;
                    }
                }
                Ok(Observation::ok(format!("You {verb} {object} using {with}.")))
            }
            Action::Toggle(object) => {
                if !self.visible(object) {
                    return Err(Observation::fail("you see no such thing here"));
                }
                let o = self.objects.get_mut(object).expect("visible");
                if !o.toggleable {
                    return Err(Observation::fail(&format!("{object} cannot be switched")));
                }
                o.state.toggled = !o.state.toggled;
                let now = if o.state.toggled { "on" } else { "off" };
                Ok(Observation::ok(format!("You turn {now} {object}.")))
            }
            Action::Examine(object) => {
                if !self.visible(object) {
                    return Err(Observation::fail("you see no such thing here"));
                }
                let lit = self.objects.iter().any(|(id, o)| {
                    o.toggleable && o.state.toggled && id != object && self.visible(id)
                });
                let held = self.holding() == Some(object.as_str());
                let o = self.objects.get_mut(object).expect("visible");
                if held && lit {
                    o.state.examined_under_light = true;
                }
                let s = o.state;
                let mut traits = Vec::new();
                for (on, word) in [(s.clean, "clean"), (s.hot, "hot"), (s.cold, "cold"), (s.toggled, "switched on")] {
                    if on {
                        traits.push(word);
                    }
                }
                let mut text = if traits.is_empty() {
                    format!("You examine {object}. Nothing stands out.")
                } else {
                    format!("You examine {object}. It is {}.", traits.join(" and "))
                };
                if held && lit {
                    text.push_str(" You look at it closely under the light.");
                }
                Ok(Observation::ok(text))
            }
        }
    }
}

/// Pure form of [`WorldState::apply`].
pub fn step(world: &WorldState, action: &Action) -> (WorldState, Observation) {
    let mut next = world.clone();
    let obs = next.apply(action);
    (next, obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn kitchen() -> WorldState {
        let rec = |location: &str, kind, openable| Receptacle {
            location: location.into(),
            kind,
            openable,
            open: false,
        };
        let obj = |class: &str, r: &str| Object {
            class: class.into(),
            place: Place::Receptacle(r.into()),
            toggleable: false,
            state: ObjectState::default(),
        };
        WorldState {
            locations: ["hallway", "kitchen", "study"].iter().map(|s| s.to_string()).collect(),
            receptacles: BTreeMap::from([
                ("countertop 1".into(), rec("kitchen", ReceptacleKind::Plain, false)),
                ("cabinet 1".into(), rec("kitchen", ReceptacleKind::Plain, true)),
                ("microwave 1".into(), rec("kitchen", ReceptacleKind::Heating, true)),
                ("desk 1".into(), rec("study", ReceptacleKind::Plain, false)),
            ]),
            objects: BTreeMap::from([
                ("mug 1".into(), obj("mug", "cabinet 1")),
                ("potato 1".into(), obj("potato", "countertop 1")),
                (
                    "desklamp 1".into(),
                    Object {
                        toggleable: true,
                        ..obj("desklamp", "desk 1")
                    },
                ),
            ]),
            agent_at: "hallway".into(),
        }
    }

    fn act(w: &mut WorldState, cmd: &str) -> Observation {
        w.apply(&parse_action(cmd).unwrap())
    }

    #[test]
    fn take_requires_presence() {
        let w = kitchen();
        let (next, obs) = step(&w, &parse_action("take potato 1 from countertop 1").unwrap());
        assert!(!obs.success);
        assert_eq!(next, w);
    }

    #[test]
    fn heat_in_microwave() {
        let mut w = kitchen();
        act(&mut w, "go to kitchen");
        assert!(act(&mut w, "take potato 1 from countertop 1").success);
        assert!(act(&mut w, "heat potato 1 with microwave 1").success);
        assert!(w.objects["potato 1"].state.hot);
        assert!(!act(&mut w, "heat potato 1 with countertop 1").success);
    }

    #[test]
    fn closed_contents_hidden_until_opened() {
        let mut w = kitchen();
        let arrive = act(&mut w, "go to kitchen");
        assert!(arrive.text.contains("potato 1"));
        assert!(!arrive.text.contains("mug 1"));
        assert!(!act(&mut w, "take mug 1 from cabinet 1").text.contains("mug"));
        let opened = act(&mut w, "open cabinet 1");
        assert!(opened.text.contains("mug 1"));
    }

    #[test]
    fn examine_under_light() {
        let mut w = kitchen();
        act(&mut w, "go to kitchen");
        act(&mut w, "open cabinet 1");
        act(&mut w, "take mug 1 from cabinet 1");
        act(&mut w, "go to study");
        act(&mut w, "examine mug 1");
        assert!(!w.objects["mug 1"].state.examined_under_light);
        assert!(act(&mut w, "toggle desklamp 1").success);
        act(&mut w, "examine mug 1");
        assert!(w.objects["mug 1"].state.examined_under_light);
    }

    #[test]
    fn command_grammar() {
        let cases = [
            "go to kitchen",
            "open cabinet 1",
            "close cabinet 1",
            "take mug 1 from cabinet 1",
            "put mug 1 in countertop 1",
            "clean mug 1 with sinkbasin 1",
            "heat mug 1 with microwave 1",
            "cool mug 1 with fridge 1",
            "toggle desklamp 1",
            "examine mug 1",
            "say: where is the mug?",
            "think: it may be in a cabinet",
        ];
        for c in cases {
            let a = parse_action(c).unwrap();
            assert_eq!(a.to_string(), c);
            assert_eq!(a.is_physical(), !c.starts_with("say") && !c.starts_with("think"));
        }
        assert_eq!(
            parse_action("Action: put mug 1 on countertop 1").unwrap(),
            Action::Put {
                object: "mug 1".into(),
                into: "countertop 1".into()
            }
        );
        assert!(parse_action("dance").is_err());
        assert!(parse_action("take mug 1").is_err());
        assert!(parse_action("say:   ").is_err());
    }
}
