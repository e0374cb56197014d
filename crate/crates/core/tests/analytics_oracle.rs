use std::collections::HashMap;

use sgkit_core::analytics::text::{
    classify_proper_noun, ProperNounContext, Tokenizer, WordTokenizer,
};
use sgkit_core::analytics::{StatsAccumulator, StatsConfig};
use sgkit_core::synth::generate_corpus;

fn two_pass(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[test]
fn fixture_statistics_match_two_pass_reference() {
    let records = generate_corpus(300, 9, 2024);
    let mut acc = StatsAccumulator::new(StatsConfig::default());
    records.iter().for_each(|r| acc.push(r));
    let report = acc.finish(10).unwrap();

    let objects: Vec<f64> = records.iter().map(|r| r.graph.items.len() as f64).collect();
    // recount nodes and edges directly from the fields
    let lengths: Vec<f64> = records
        .iter()
        .map(|r| {
            let mut n = 0usize;
            for item in &r.graph.items {
                n += 1;
                for _ in &item.attributes {
                    n += 1;
                }
            }
            (n + r.graph.relations.len()) as f64
        })
        .collect();
    let (om, os) = two_pass(&objects);
    let (lm, ls) = two_pass(&lengths);
    assert!((report.objects_mean_std.mean - om).abs() < 1e-9);
    assert!((report.objects_mean_std.std - os).abs() < 1e-9);
    assert!((report.sg_length_mean_std.mean - lm).abs() < 1e-9);
    assert!((report.sg_length_mean_std.std - ls).abs() < 1e-9);

    for hist in [&report.object_word_hist, &report.sg_word_hist] {
        let total: f64 = hist.iter().map(|b| b.percent).sum();
        assert!((total - 100.0).abs() <= 0.01, "{total}");
    }
    assert_eq!(
        report.object_word_hist.iter().map(|b| b.count).sum::<u64>(),
        objects.iter().sum::<f64>() as u64
    );
    assert_eq!(report.sg_word_hist.iter().map(|b| b.count).sum::<u64>(), 300);

    let mut attr_counts: HashMap<&str, u64> = HashMap::new();
    for r in &records {
        for item in &r.graph.items {
            for a in &item.attributes {
                *attr_counts.entry(a.as_str()).or_default() += 1;
            }
        }
    }
    for t in &report.top_attributes {
        assert_eq!(attr_counts[t.term.as_str()], t.count);
    }
    let max = attr_counts.values().max().unwrap();
    assert_eq!(report.top_attributes[0].count, *max);
}

/// Hand-labeled tokens: (caption, [(token, is_proper)]).
const LABELED: &[(&str, &[(&str, bool)])] = &[
    ("Sunset over Yosemite valley in California", &[
        ("Sunset", false), ("over", false), ("Yosemite", true), ("valley", false), ("in", false), ("California", true),
    ]),
    ("Portrait of Marilyn Monroe by Andy Warhol", &[
        ("Portrait", false), ("of", false), ("Marilyn", true), ("Monroe", true), ("by", false), ("Andy", true), ("Warhol", true),
    ]),
    ("a red car parked near the Eiffel Tower", &[
        ("a", false), ("red", false), ("car", false), ("parked", false), ("near", false), ("the", false), ("Eiffel", true), ("Tower", true),
    ]),
    ("Vintage Poster for the Paris Exhibition", &[
        ("Vintage", false), ("Poster", false), ("for", false), ("the", false), ("Paris", true), ("Exhibition", true),
    ]),
    ("Mount Fuji at dawn with cherry blossoms", &[
        ("Mount", true), ("Fuji", true), ("at", false), ("dawn", false), ("with", false), ("cherry", false), ("blossoms", false),
    ]),
    ("Home interior with wooden Table", &[
        ("Home", false), ("interior", false), ("with", false), ("wooden", false), ("Table", false),
    ]),
    ("London street at night. Big Ben glowing", &[
        ("London", true), ("street", false), ("at", false), ("night", false), ("Big", true), ("Ben", true), ("glowing", false),
    ]),
    ("Woman walking her dog in Central Park", &[
        ("Woman", false), ("walking", false), ("her", false), ("dog", false), ("in", false), ("Central", true), ("Park", true),
    ]),
];

#[test]
fn proper_noun_heuristic_agrees_with_hand_labels() {
    let mut total = 0;
    let mut agree = 0;
    for (caption, labels) in LABELED {
        let tokens = WordTokenizer.tokenize(caption);
        assert_eq!(tokens.len(), labels.len(), "{caption}");
        for (tok, (word, truth)) in tokens.iter().zip(labels.iter()) {
            assert_eq!(tok.text, *word);
            let guess = classify_proper_noun(
                tok.text,
                ProperNounContext {
                    sentence_start: tok.sentence_start,
                },
            );
            total += 1;
            agree += usize::from(guess == *truth);
        }
    }
    let rate = agree as f64 / total as f64;
    println!("proper-noun agreement {agree}/{total} = {rate:.3}");
    assert!(total >= 50);
    assert!(rate >= 0.9);
}
