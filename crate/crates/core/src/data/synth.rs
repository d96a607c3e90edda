//! Templated synthetic claims over a small entity/attribute/color world.
//!
//! Every entity has one color per attribute. A claim states the color of one
//! attribute of one entity. Gold sentences restate that attribute's true
//! color: SUPPORTS when the claim agrees, REFUTES when it does not. NEI claims
//! only get distractors: true facts about other entities of the same split,
//! always about a different attribute than the claim's. Entities belong to
//! exactly one split and distractors are drawn from that split, so splits
//! are entity-disjoint.

use rand::seq::SliceRandom;
use rand::Rng;

use super::claims::{Candidate, ClaimInstance, EvidenceId, Label};
use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, SeededRng};

pub const ATTRIBUTES: [&str; 8] = ["house", "car", "boat", "flag", "coat", "door", "bicycle", "kite"];
pub const COLORS: [&str; 10] = [
    "red", "blue", "green", "yellow", "black", "white", "orange", "purple", "grey", "brown",
];

/// Candidate slots per claim.
pub const SLOTS: usize = 5;

const SYLLABLES: [&str; 20] = [
    "ka", "lo", "mi", "ren", "tu", "vas", "zor", "bel", "dri", "fen", "gal", "hon", "jup", "mor", "nix", "pel",
    "quo", "sar", "tev", "wyn",
];

/// Split shares by label stratum, in percent: train, dev (test takes the rest).
const TRAIN_PCT: usize = 70;
const DEV_PCT: usize = 15;

#[derive(Debug, Clone)]
struct Entity {
    name: String,
    colors: [usize; ATTRIBUTES.len()],
    /// Order in which claims are assigned attributes of this entity.
    attributes: Vec<usize>,
}

fn claim_text(rng: &mut SeededRng, entity: &str, attr: &str, color: &str) -> String {
    match rng.gen_range(0..3) {
        0 => format!("The {attr} of {entity} is {color}."),
        1 => format!("{entity} owns a {color} {attr}."),
        _ => format!("It is said that the {attr} of {entity} is {color}."),
    }
}

fn fact_sentence(variant: usize, entity: &str, attr: &str, color: &str) -> String {
    match variant % 3 {
        0 => format!("The {attr} of {entity} is {color} ."),
        1 => format!("{entity} has a {color} {attr} ."),
        _ => format!("Records show that {entity} painted the {attr} {color} ."),
    }
}

fn entity_names(rng: &mut SeededRng, n: usize) -> Vec<String> {
    let mut all = Vec::with_capacity(SYLLABLES.len().pow(3));
    for a in SYLLABLES {
        for b in SYLLABLES {
            for c in SYLLABLES {
                let mut name = format!("{a}{b}{c}");
                name[..1].make_ascii_uppercase();
                all.push(name);
            }
        }
    }
    all.shuffle(rng);
    all.truncate(n);
    all
}

/// Claims hosted by each entity (one per attribute).
const CLAIMS_PER_ENTITY: usize = 4;

/// Generates `n` claims and splits them 70/15/15 per label.
///
/// Labels are balanced by construction (`i mod 3`). Each split owns its
/// entities; every entity hosts up to four claims, each about a different
/// attribute. With `noise_rate = 0` SUPPORTS/REFUTES claims carry only gold
/// candidates; each free slot gets a distractor with probability
/// `noise_rate`. NEI claims get `1 + Binomial(4, noise_rate)` distractors.
pub fn synth_dataset(
    seed: u64,
    n: usize,
    noise_rate: f64,
) -> Result<(Vec<ClaimInstance>, Vec<ClaimInstance>, Vec<ClaimInstance>)> {
    if n < 30 {
        return Err(Error::Config(format!("synthetic dataset needs n >= 30, got {n}")));
    }
    if !(0.0..=1.0).contains(&noise_rate) {
        return Err(Error::Config(format!("noise_rate must lie in [0, 1], got {noise_rate}")));
    }
    if n > SYLLABLES.len().pow(3) {
        return Err(Error::Config(format!("synthetic dataset supports at most 8000 claims, got {n}")));
    }
    let mut rng = seeded_rng(seed);
    let mut labels: Vec<Label> = (0..n).map(|i| Label::ALL[i % 3]).collect();
    labels.shuffle(&mut rng);

    let mut splits: [Vec<usize>; 3] = Default::default();
    for label in Label::ALL {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == label).collect();
        let train = members.len() * TRAIN_PCT / 100;
        let dev = members.len() * DEV_PCT / 100;
        splits[0].extend_from_slice(&members[..train]);
        splits[1].extend_from_slice(&members[train..train + dev]);
        splits[2].extend_from_slice(&members[train + dev..]);
    }

    let mut names = entity_names(&mut rng, n).into_iter();
    let mut out: [Vec<ClaimInstance>; 3] = Default::default();
    for (split, ids) in splits.iter_mut().enumerate() {
        ids.sort_unstable();
        let count = ids.len().div_ceil(CLAIMS_PER_ENTITY).max(2);
        let entities: Vec<Entity> = (0..count)
            .map(|_| {
                let mut colors = [0; ATTRIBUTES.len()];
                for c in &mut colors {
                    *c = rng.gen_range(0..COLORS.len());
                }
                let mut attributes: Vec<usize> = (0..ATTRIBUTES.len()).collect();
                attributes.shuffle(&mut rng);
                Entity {
                    name: names.next().expect("enough names"),
                    colors,
                    attributes,
                }
            })
            .collect();
        let mut slots: Vec<usize> = (0..ids.len()).collect();
        slots.shuffle(&mut rng);
        out[split] = ids
            .iter()
            .zip(slots)
            .map(|(&id, slot)| {
                let host = slot % count;
                let attr = entities[host].attributes[slot / count];
                make_instance(&mut rng, id, labels[id], &entities, host, attr, noise_rate)
            })
            .collect();
    }
    let [train, dev, test] = out;
    Ok((train, dev, test))
}

fn make_instance(
    rng: &mut SeededRng,
    id: usize,
    label: Label,
    entities: &[Entity],
    host: usize,
    attr: usize,
    noise_rate: f64,
) -> ClaimInstance {
    let entity = &entities[host];
    let true_color = entity.colors[attr];
    let claimed = match label {
        Label::Refutes => {
            let offset = rng.gen_range(1..COLORS.len());
            (true_color + offset) % COLORS.len()
        }
        Label::Supports => true_color,
        Label::NotEnoughInfo => rng.gen_range(0..COLORS.len()),
    };
    let claim = claim_text(rng, &entity.name, ATTRIBUTES[attr], COLORS[claimed]);

    let mut candidates = Vec::with_capacity(SLOTS);
    let mut groups = Vec::new();
    let distractors = if label.requires_evidence() {
        let n_gold = rng.gen_range(1..=2);
        let first = rng.gen_range(0..3);
        for k in 0..n_gold {
            let sid = (attr * 3 + (first + k) % 3) as u32;
            let text = fact_sentence(sid as usize, &entity.name, ATTRIBUTES[attr], COLORS[true_color]);
            candidates.push(Candidate(entity.name.clone(), sid, text));
            groups.push(vec![EvidenceId(entity.name.clone(), sid)]);
        }
        (0..SLOTS - n_gold).filter(|_| rng.gen_bool(noise_rate)).count()
    } else {
        1 + (0..SLOTS - 1).filter(|_| rng.gen_bool(noise_rate)).count()
    };

    while candidates.len() < groups.len() + distractors {
        let other = (host + rng.gen_range(1..entities.len())) % entities.len();
        let other = &entities[other];
        let other_attr = (attr + rng.gen_range(1..ATTRIBUTES.len())) % ATTRIBUTES.len();
        let sid = (other_attr * 3 + rng.gen_range(0..3)) as u32;
        if candidates.iter().any(|c: &Candidate| c.0 == other.name && c.1 == sid) {
            continue;
        }
        let text = fact_sentence(sid as usize, &other.name, ATTRIBUTES[other_attr], COLORS[other.colors[other_attr]]);
        candidates.push(Candidate(other.name.clone(), sid, text));
    }
    candidates.shuffle(rng);

    ClaimInstance {
        id: id as u64,
        claim,
        label,
        evidence_candidates: candidates,
        gold_evidence_groups: groups,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::label_histogram;

    #[test]
    fn rejects_bad_parameters() {
        assert!(synth_dataset(1, 29, 0.5).is_err());
        assert!(synth_dataset(1, 60, 1.5).is_err());
        assert!(synth_dataset(1, 60, -0.1).is_err());
    }

    #[test]
    fn balanced_and_valid() {
        let (a, b, c) = synth_dataset(11, 300, 0.5).unwrap();
        let all: Vec<_> = a.iter().chain(&b).chain(&c).cloned().collect();
        assert_eq!(label_histogram(&all), [100, 100, 100]);
        assert_eq!((a.len(), b.len(), c.len()), (210, 45, 45));
        for inst in &all {
            inst.validate().unwrap();
            assert!(inst.evidence_candidates.len() <= SLOTS);
        }
    }

    #[test]
    fn noiseless_evidence_is_all_gold() {
        let (a, _, _) = synth_dataset(4, 90, 0.0).unwrap();
        for inst in a.iter().filter(|i| i.label.requires_evidence()) {
            assert!(inst.evidence_candidates.iter().all(|c| inst.is_gold(&c.id())));
        }
    }
}
