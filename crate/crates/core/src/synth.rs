//! Seeded synthetic corpora for harnesses and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Map;

use crate::model::{DatasetRecord, Item, Relation, SceneGraph, Score};

const LABELS: &[&str] = &[
    "person", "tree", "building", "sky", "car", "dog", "bag", "table", "chair", "window",
    "mountain", "river", "flower", "lamp", "cup", "road", "cloud", "boat", "bird", "rock",
];
const ATTRIBUTES: &[&str] = &[
    "tall", "small", "green", "wooden", "bright", "old", "young", "female", "male", "red",
    "calm", "vast", "ornate", "white", "arc-shaped", "dark blue", "very large",
];
const RELATIONS: &[&str] = &[
    "surrounded by", "adjacent to", "holding", "standing on", "riding", "span over", "adorn",
    "leaning against", "next to", "reflected in",
];
const CAPTION_WORDS: &[&str] = &[
    "a", "the", "photo", "of", "beautiful", "Yosemite", "Paris", "sunset", "over", "lake",
    "with", "Canon", "garden", "in", "spring", "and", "wooden", "house", "London", "street",
];

/// Knobs for [`generate_record`].
#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub max_items: usize,
    pub max_attributes: usize,
    pub max_caption_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_items: 12,
            max_attributes: 3,
            max_caption_words: 30,
        }
    }
}

/// A random graph with exactly `relations` relations (and at least one item).
pub fn generate_graph(rng: &mut impl Rng, config: &SynthConfig, relations: usize) -> SceneGraph {
    let n_items = rng.gen_range(1..=config.max_items.max(1));
    let mut ids: Vec<u64> = (0..(n_items as u64 * 3)).collect();
    ids.shuffle(rng);
    ids.truncate(n_items);
    let items: Vec<Item> = ids
        .iter()
        .map(|&item_id| {
            let n_attr = rng.gen_range(1..=config.max_attributes.max(1));
            Item {
                item_id,
                label: LABELS.choose(rng).unwrap().to_string(),
                attributes: (0..n_attr)
                    .map(|_| ATTRIBUTES.choose(rng).unwrap().to_string())
                    .collect(),
                global_item_id: Some(rng.gen_range(0..10_000_000)),
                extra: Map::new(),
            }
        })
        .collect();
    let relations = (0..relations as u64)
        .map(|triple_id| Relation {
            triple_id,
            item1: *ids.choose(rng).unwrap(),
            relation: RELATIONS.choose(rng).unwrap().to_string(),
            item2: *ids.choose(rng).unwrap(),
            global_relation_id: Some(rng.gen_range(0..10_000_000)),
            extra: Map::new(),
        })
        .collect();
    SceneGraph { items, relations }
}

pub fn generate_record(
    rng: &mut impl Rng,
    config: &SynthConfig,
    img_id: String,
    relations: usize,
) -> DatasetRecord {
    let n_words = rng.gen_range(0..=config.max_caption_words);
    let caption = (0..n_words)
        .map(|_| *CAPTION_WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ");
    let score = 6.5 + rng.gen_range(0.0001..2.0f64);
    DatasetRecord {
        name: format!("{img_id}.jpg"),
        url: format!("https://example.org/img/{img_id}.jpg"),
        img_id,
        caption_ori: caption,
        score: Score::from_value(score),
        graph: generate_graph(rng, config, relations),
        extra: Map::new(),
    }
}

/// `n` records with ids `000000..`, each with a relation count drawn from
/// `0..=max_relations`.
pub fn generate_corpus(n: usize, max_relations: usize, seed: u64) -> Vec<DatasetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = SynthConfig::default();
    (0..n)
        .map(|i| {
            let rels = rng.gen_range(0..=max_relations);
            generate_record(&mut rng, &config, format!("{i:06}"), rels)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::{validate, Mode};

    #[test]
    fn synthetic_records_are_strictly_valid() {
        for r in generate_corpus(200, 8, 5) {
            let report = validate(&r, Mode::Strict);
            assert!(report.is_accepted(), "{:?}", report.errors);
        }
    }

    #[test]
    fn corpus_is_seed_deterministic() {
        assert_eq!(generate_corpus(20, 6, 1), generate_corpus(20, 6, 1));
        assert_ne!(generate_corpus(20, 6, 1), generate_corpus(20, 6, 2));
    }
}
