use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use sgkit_annotator::prompt::{COVERAGE_INSTRUCTION, DEFAULT_RULES};
use sgkit_annotator::{build_prompt, parse_llm_response, PromptConfig, ResponseError};
use sgkit_core::io::{parse_record, serialize_graph};
use sgkit_core::synth::{generate_graph, SynthConfig};

const R483868: &str = include_str!("fixtures/record_483868.json");

#[test]
fn default_prompt_carries_every_rule_in_order() {
    let prompt = build_prompt(&PromptConfig::default());
    let needles = [
        "Identify as many objects, attributes, and their relations within the image as possible",
        "Identify the objects in the image and assign a unique ID to each",
        "The attributes must be abstract adjectives and should not include specific objects",
        "The relations between objects should be as specific as possible",
        "label the object as \"person\" and include attributes such as gender and age",
        "Respond with a single JSON object",
    ];
    let mut at = 0;
    for n in needles {
        let pos = prompt[at..].find(n).unwrap_or_else(|| panic!("missing or out of order: {n}"));
        at += pos + n.len();
    }
    assert!(prompt.starts_with(COVERAGE_INSTRUCTION));
    assert_eq!(prompt, build_prompt(&PromptConfig::default()));
}

#[test]
fn custom_rule_follows_defaults() {
    let config = PromptConfig::default().with_extra_rule("Ignore watermarks.");
    let prompt = build_prompt(&config);
    let last_default = prompt.find(DEFAULT_RULES[3]).unwrap();
    let custom = prompt.find("5) Ignore watermarks.").unwrap();
    assert!(custom > last_default);
    assert!(prompt.find("Respond with").unwrap() > custom);
}

#[test]
fn published_body_in_a_code_fence() {
    let mut body: Value = serde_json::from_str(R483868).unwrap();
    let obj = body.as_object_mut().unwrap();
    for k in ["img_id", "name", "caption_ori", "score", "url"] {
        obj.remove(k);
    }
    let reply = format!("Sure! Here is the scene graph:\n```json\n{}\n```\n", serde_json::to_string_pretty(&body).unwrap());
    let parsed = parse_llm_response(&reply).unwrap();
    let rel = &parsed.graph.relations[0];
    assert_eq!(rel.relation, "span over");
    assert_eq!(parsed.graph, parse_record(R483868).unwrap().graph);
}

#[test]
fn refusal_and_dangling_reference() {
    assert!(matches!(parse_llm_response("I cannot help"), Err(ResponseError::Unparsable(_))));
    let body = r#"{"items":[{"item_id":1,"label":"cup","attributes":["white"]}],
        "relations":[{"triple_id":0,"item1":1,"relation":"on","item2":2}]}"#;
    let err = parse_llm_response(body).unwrap_err();
    assert_eq!(err.code(), "invalid-graph");
    let ResponseError::InvalidGraph(report) = err else { unreachable!() };
    assert!(report.has_rule("dangling-ref"));
}

#[test]
fn serialized_graphs_parse_back_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for relations in 0..40 {
        let graph = generate_graph(&mut rng, &SynthConfig::default(), relations % 9);
        let text = format!("```\n{}\n```", serialize_graph(&graph));
        assert_eq!(parse_llm_response(&text).unwrap().graph, graph);
    }
}
