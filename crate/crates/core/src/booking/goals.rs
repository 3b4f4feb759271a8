use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::db::{requestable_attributes, searchable_attributes, EntityDb};
use super::BookingError;
use crate::corpus::keyed_rng;
use crate::goal::{Domain, DomainGoal, UserGoal};

/// Seeded goal whose constraints single out exactly one entity per domain.
///
/// Goals are keyed by `(seed, index)`, so goal `i` is the same whatever
/// other goals are generated alongside it.
pub fn generate_goal(db: &EntityDb, seed: u64, index: usize) -> Result<UserGoal, BookingError> {
    let mut rng = keyed_rng(seed, &format!("goal/{index}"));
    let mut domains: Vec<Domain> = db.domains().collect();
    if domains.is_empty() {
        return Err(BookingError::InvalidDb("no domains".into()));
    }
    domains.shuffle(&mut rng);
    let count = rng.random_range(1..=2).min(domains.len());
    let mut goal = UserGoal::default();
    for domain in domains.into_iter().take(count) {
        goal.domains.insert(domain, domain_goal(db, domain, &mut rng)?);
    }
    Ok(goal)
}

fn domain_goal<R: Rng>(db: &EntityDb, domain: Domain, rng: &mut R) -> Result<DomainGoal, BookingError> {
    let table = db.table(domain)?;
    let target = table
        .choose(rng)
        .ok_or_else(|| BookingError::InvalidDb(format!("{domain} table is empty")))?;
    let mut attrs: Vec<&str> = searchable_attributes(domain)
        .iter()
        .copied()
        .filter(|a| target.get(a).is_some())
        .collect();
    attrs.shuffle(rng);
    attrs.push("name");
    let mut constraints = BTreeMap::new();
    for attr in attrs {
        constraints.insert(attr.to_string(), target.get(attr).unwrap_or_default().to_string());
        if db.query(domain, &constraints)?.len() == 1 {
            break;
        }
    }

    let mut requests: Vec<String> = requestable_attributes(domain)
        .iter()
        .filter(|a| target.get(a).is_some())
        .map(|a| a.to_string())
        .collect();
    requests.shuffle(rng);
    let keep = rng.random_range(1..=2).min(requests.len());
    requests.truncate(keep);
    requests.sort();

    let mut booking = BTreeMap::new();
    let day = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]
        .choose(rng)
        .unwrap_or(&"monday")
        .to_string();
    match domain {
        Domain::Hotel => {
            booking.insert("people".into(), rng.random_range(1..=4).to_string());
            booking.insert("stay".into(), rng.random_range(1..=5).to_string());
            booking.insert("day".into(), day);
        }
        Domain::Restaurant => {
            booking.insert("people".into(), rng.random_range(1..=6).to_string());
            booking.insert("day".into(), day);
            let minutes = rng.random_range(44..=84) * 15;
            booking.insert("time".into(), format!("{:02}:{:02}", minutes / 60, minutes % 60));
        }
        Domain::Train => {
            booking.insert("people".into(), rng.random_range(1..=4).to_string());
        }
        Domain::Attraction | Domain::Taxi => {}
    }
    Ok(DomainGoal {
        constraints,
        requests,
        booking,
    })
}
