use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BookingError;
use crate::corpus::keyed_rng;
use crate::goal::Domain;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub name: String,
    pub domain: Domain,
    pub attributes: BTreeMap<String, String>,
}

impl Entity {
    /// `name` resolves to the entity name; everything else to attributes.
    pub fn get(&self, attribute: &str) -> Option<&str> {
        if attribute == "name" {
            Some(&self.name)
        } else {
            self.attributes.get(attribute).map(String::as_str)
        }
    }

    pub fn matches(&self, constraints: &BTreeMap<String, String>) -> bool {
        constraints
            .iter()
            .all(|(k, v)| self.get(k) == Some(v.as_str()))
    }
}

/// Ground-truth tables for the booking domains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Tables", into = "Tables")]
pub struct EntityDb {
    tables: BTreeMap<Domain, Vec<Entity>>,
    schemas: BTreeMap<Domain, BTreeSet<String>>,
}

#[derive(Serialize, Deserialize)]
struct Tables {
    tables: BTreeMap<Domain, Vec<Entity>>,
}

impl TryFrom<Tables> for EntityDb {
    type Error = BookingError;

    fn try_from(t: Tables) -> Result<Self, Self::Error> {
        EntityDb::new(t.tables)
    }
}

impl From<EntityDb> for Tables {
    fn from(db: EntityDb) -> Self {
        Tables { tables: db.tables }
    }
}

/// Attributes the goal generator may constrain on, per domain.
pub fn searchable_attributes(domain: Domain) -> &'static [&'static str] {
    match domain {
        Domain::Hotel => &["area", "pricerange", "stars", "type", "parking", "internet"],
        Domain::Restaurant => &["area", "pricerange", "food"],
        Domain::Attraction => &["area", "type", "entrancefee"],
        Domain::Train => &["departure", "destination", "day"],
        Domain::Taxi => &["color", "type"],
    }
}

/// Attributes a user may ask to be told, per domain.
pub fn requestable_attributes(domain: Domain) -> &'static [&'static str] {
    match domain {
        Domain::Hotel | Domain::Restaurant | Domain::Attraction => &["phone", "address", "postcode"],
        Domain::Train => &["leaveat", "arriveby", "price", "duration"],
        Domain::Taxi => &["phone"],
    }
}

impl EntityDb {
    /// Sorts each table by id and rejects duplicate ids or mislabeled
    /// entities.
    pub fn new(mut tables: BTreeMap<Domain, Vec<Entity>>) -> Result<Self, BookingError> {
        let mut schemas = BTreeMap::new();
        for (domain, table) in &mut tables {
            table.sort_by(|a, b| a.id.cmp(&b.id));
            if let Some(w) = table.windows(2).find(|w| w[0].id == w[1].id) {
                return Err(BookingError::InvalidDb(format!("duplicate id {} in {domain}", w[0].id)));
            }
            if let Some(e) = table.iter().find(|e| e.domain != *domain) {
                return Err(BookingError::InvalidDb(format!("{} listed under {domain}", e.id)));
            }
            let mut schema: BTreeSet<String> = table
                .iter()
                .flat_map(|e| e.attributes.keys().cloned())
                .collect();
            schema.insert("name".into());
            schemas.insert(*domain, schema);
        }
        Ok(Self { tables, schemas })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BookingError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| BookingError::InvalidDb(e.to_string()))
    }

    pub fn domains(&self) -> impl Iterator<Item = Domain> + '_ {
        self.tables.keys().copied()
    }

    pub fn table(&self, domain: Domain) -> Result<&[Entity], BookingError> {
        self.tables
            .get(&domain)
            .map(Vec::as_slice)
            .ok_or_else(|| BookingError::UnknownDomain(domain.to_string()))
    }

    pub fn schema(&self, domain: Domain) -> Result<&BTreeSet<String>, BookingError> {
        self.schemas
            .get(&domain)
            .ok_or_else(|| BookingError::UnknownDomain(domain.to_string()))
    }

    pub fn entity(&self, domain: Domain, id: &str) -> Option<&Entity> {
        self.tables.get(&domain)?.iter().find(|e| e.id == id)
    }

    /// Exact-match filter, in id order.
    pub fn query(
        &self,
        domain: Domain,
        constraints: &BTreeMap<String, String>,
    ) -> Result<Vec<&Entity>, BookingError> {
        let schema = self.schema(domain)?;
        if let Some(k) = constraints.keys().find(|k| !schema.contains(*k)) {
            return Err(BookingError::UnknownAttribute {
                domain,
                attribute: k.clone(),
            });
        }
        Ok(self.table(domain)?.iter().filter(|e| e.matches(constraints)).collect())
    }

    /// Same as [`EntityDb::query`] with the domain given by name.
    pub fn query_named(
        &self,
        domain: &str,
        constraints: &BTreeMap<String, String>,
    ) -> Result<Vec<&Entity>, BookingError> {
        let domain: Domain = domain
            .parse()
            .map_err(|_| BookingError::UnknownDomain(domain.to_string()))?;
        self.query(domain, constraints)
    }

    /// `domain: attr, attr, ...` lines for the agent prompt.
    pub fn schema_text(&self) -> String {
        self.schemas
            .iter()
            .map(|(d, s)| format!("{d}: {}", s.iter().cloned().collect::<Vec<_>>().join(", ")))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Seeded desk-scale database with 10 to 20 entities per domain.
    pub fn fixture(seed: u64) -> Self {
        let mut tables = BTreeMap::new();
        for domain in Domain::ALL {
            let mut rng = keyed_rng(seed, &format!("db/{domain}"));
            let count = rng.random_range(10..=20);
            let mut names = names_for(domain, &mut rng);
            names.truncate(count);
            let mut phones = BTreeSet::new();
            let table = names
                .into_iter()
                .enumerate()
                .map(|(i, name)| {
                    let attributes = attributes_for(domain, &mut rng, &mut phones);
                    Entity {
                        id: format!("{domain}-{i:02}"),
                        name,
                        domain,
                        attributes,
                    }
                })
                .collect();
            tables.insert(domain, table);
        }
        Self::new(tables).expect("generated tables are well formed")
    }
}

const AREAS: [&str; 5] = ["centre", "north", "south", "east", "west"];
const PRICES: [&str; 3] = ["cheap", "moderate", "expensive"];
const DAYS: [&str; 7] = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];
const STATIONS: [&str; 6] = ["cambridge", "london kings cross", "ely", "norwich", "stevenage", "peterborough"];
const STREETS: [&str; 8] = [
    "mill road",
    "regent street",
    "hills road",
    "chesterton road",
    "trumpington street",
    "newmarket road",
    "castle street",
    "station road",
];

const HOTEL_NAMES: [&str; 20] = [
    "acorn", "alpha-milton", "ashley", "aylesbray", "bridge", "carolina", "cityroomz", "finches",
    "gonville", "hamilton", "huntingdon", "kirkwood", "lensfield", "leverton", "lovell", "rosa's",
    "warkworth", "worth", "avalon", "archway",
];
const RESTAURANT_NAMES: [&str; 20] = [
    "golden wok", "curry garden", "pizza hut fen ditton", "the nirala", "bedouin", "la margherita",
    "meghna", "saffron brasserie", "the copper kettle", "dojo noodle bar", "the gardenia", "rice boat",
    "sala thong", "the varsity", "cote", "midsummer house", "yippee noodle bar", "prezzo",
    "charlie chan", "the oak bistro",
];
const ATTRACTION_NAMES: [&str; 20] = [
    "broughton house gallery", "cambridge artworks", "castle galleries", "cherry hinton water play",
    "christ's college", "clare hall", "corpus christi", "downing college", "fitzwilliam museum",
    "great saint mary's church", "jesus green outdoor pool", "kettle's yard", "milton country park",
    "museum of classical archaeology", "nusha", "old schools", "people's portraits exhibition",
    "scott polar museum", "the junction", "whipple museum",
];
const TAXI_NAMES: [&str; 20] = [
    "a1 cabs", "ace taxis", "amber cars", "b cars", "cab co", "camtax", "central cars", "city taxis",
    "diamond cabs", "eagle taxis", "fen cabs", "granta cars", "kings cabs", "merlin cabs",
    "panther taxis", "regal cars", "river cabs", "star taxis", "swift cars", "university taxis",
];

fn names_for<R: Rng>(domain: Domain, rng: &mut R) -> Vec<String> {
    let mut names: Vec<String> = match domain {
        Domain::Hotel => HOTEL_NAMES
            .iter()
            .map(|n| {
                let suffix = ["hotel", "guest house", "b&b"][rng.random_range(0..3)];
                format!("{n} {suffix}")
            })
            .collect(),
        Domain::Restaurant => RESTAURANT_NAMES.iter().map(|n| n.to_string()).collect(),
        Domain::Attraction => ATTRACTION_NAMES.iter().map(|n| n.to_string()).collect(),
        Domain::Taxi => TAXI_NAMES.iter().map(|n| n.to_string()).collect(),
        Domain::Train => {
            let mut ids = BTreeSet::new();
            while ids.len() < 20 {
                ids.insert(format!("tr{:04}", rng.random_range(1000..10000)));
            }
            ids.into_iter().collect()
        }
    };
    names.shuffle(rng);
    names
}

fn pick<R: Rng>(rng: &mut R, options: &[&str]) -> String {
    options[rng.random_range(0..options.len())].to_string()
}

fn place<R: Rng>(rng: &mut R, phones: &mut BTreeSet<String>, a: &mut BTreeMap<String, String>) {
    let phone = loop {
        let p = format!("01223 {:06}", rng.random_range(0..1_000_000));
        if phones.insert(p.clone()) {
            break p;
        }
    };
    a.insert("phone".into(), phone);
    a.insert(
        "address".into(),
        format!("{} {}", rng.random_range(1..200), pick(rng, &STREETS)),
    );
    let letters = b"abdefghjlnpqrstuwxyz";
    a.insert(
        "postcode".into(),
        format!(
            "cb{}{}{}{}",
            rng.random_range(1..6),
            rng.random_range(1..10),
            letters[rng.random_range(0..letters.len())] as char,
            letters[rng.random_range(0..letters.len())] as char
        ),
    );
}

fn clock(minutes: u32) -> String {
    format!("{:02}:{:02}", (minutes / 60) % 24, minutes % 60)
}

fn attributes_for<R: Rng>(
    domain: Domain,
    rng: &mut R,
    phones: &mut BTreeSet<String>,
) -> BTreeMap<String, String> {
    let mut a = BTreeMap::new();
    let mut set = |k: &str, v: String| {
        a.insert(k.to_string(), v);
    };
    match domain {
        Domain::Hotel => {
            set("area", pick(rng, &AREAS));
            set("pricerange", pick(rng, &PRICES));
            set("stars", rng.random_range(2..=5).to_string());
            set("type", pick(rng, &["hotel", "guesthouse"]));
            set("parking", pick(rng, &["yes", "no"]));
            set("internet", pick(rng, &["yes", "no"]));
            place(rng, phones, &mut a);
        }
        Domain::Restaurant => {
            set("area", pick(rng, &AREAS));
            set("pricerange", pick(rng, &PRICES));
            set(
                "food",
                pick(rng, &["british", "italian", "chinese", "indian", "european", "thai"]),
            );
            place(rng, phones, &mut a);
        }
        Domain::Attraction => {
            set("area", pick(rng, &AREAS));
            set(
                "type",
                pick(rng, &["museum", "park", "college", "theatre", "nightclub", "architecture"]),
            );
            set("entrancefee", pick(rng, &["free", "2 pounds", "5 pounds"]));
            place(rng, phones, &mut a);
        }
        Domain::Train => {
            let from = rng.random_range(0..STATIONS.len());
            let to = (from + rng.random_range(1..STATIONS.len())) % STATIONS.len();
            set("departure", STATIONS[from].to_string());
            set("destination", STATIONS[to].to_string());
            set("day", pick(rng, &DAYS));
            let leave = rng.random_range(5 * 60..22 * 60) / 5 * 5;
            let duration = rng.random_range(15..120);
            set("leaveat", clock(leave));
            set("arriveby", clock(leave + duration));
            set("duration", format!("{duration} minutes"));
            set(
                "price",
                format!("{}.{:02} pounds", rng.random_range(4..40), rng.random_range(0..100)),
            );
        }
        Domain::Taxi => {
            set("color", pick(rng, &["black", "white", "red", "blue", "grey", "yellow"]));
            set("type", pick(rng, &["toyota", "skoda", "bmw", "ford", "audi", "tesla"]));
            let phone = loop {
                let p = format!("07{:09}", rng.random_range(0..1_000_000_000));
                if phones.insert(p.clone()) {
                    break p;
                }
            };
            a.insert("phone".into(), phone);
        }
    }
    a
}
