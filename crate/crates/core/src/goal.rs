//! Booking goals shared by the corpus format and the booking simulator.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Hotel,
    Restaurant,
    Attraction,
    Train,
    Taxi,
}

impl Domain {
    pub const ALL: [Domain; 5] = [
        Domain::Hotel,
        Domain::Restaurant,
        Domain::Attraction,
        Domain::Train,
        Domain::Taxi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Hotel => "hotel",
            Domain::Restaurant => "restaurant",
            Domain::Attraction => "attraction",
            Domain::Train => "train",
            Domain::Taxi => "taxi",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .into_iter()
            .find(|d| d.as_str() == s.trim().to_lowercase())
            .ok_or_else(|| s.to_string())
    }
}

/// What the user wants from one domain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainGoal {
    /// attribute -> required value
    #[serde(default)]
    pub constraints: BTreeMap<String, String>,
    /// attributes whose values the user wants to be told
    #[serde(default)]
    pub requests: Vec<String>,
    /// booking details such as `people`, `stay`, `day`
    #[serde(default)]
    pub booking: BTreeMap<String, String>,
}

impl DomainGoal {
    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty() && self.requests.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserGoal {
    pub domains: BTreeMap<Domain, DomainGoal>,
}

impl UserGoal {
    pub fn single(domain: Domain, goal: DomainGoal) -> Self {
        Self {
            domains: BTreeMap::from([(domain, goal)]),
        }
    }

    /// Every constraint and booking value, used by detectors to spot
    /// restated constraints.
    pub fn mentioned_values(&self) -> Vec<String> {
        self.domains
            .values()
            .flat_map(|g| g.constraints.values().chain(g.booking.values()))
            .cloned()
            .collect()
    }

    /// One-line natural description used in prompts.
    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .domains
            .iter()
            .map(|(domain, g)| {
                let mut s = format!("{domain}:");
                if !g.constraints.is_empty() {
                    let c: Vec<String> = g
                        .constraints
                        .iter()
                        .map(|(k, v)| format!("{k}={v}"))
                        .collect();
                    s.push_str(&format!(" find one with {}", c.join(", ")));
                }
                if !g.booking.is_empty() {
                    let b: Vec<String> =
                        g.booking.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    s.push_str(&format!("; book for {}", b.join(", ")));
                }
                if !g.requests.is_empty() {
                    s.push_str(&format!("; ask for {}", g.requests.join(", ")));
                }
                s
            })
            .collect();
        parts.join(" | ")
    }
}
