use serde_json::Value;
use sgkit_core::io::{parse_record, serialize_record};
use sgkit_core::metrics::{entity_list, relation_list, sg_list, TripleKey};
use sgkit_core::{validate, Mode};

const R482063: &str = include_str!("fixtures/record_482063.json");
const R483868: &str = include_str!("fixtures/record_483868.json");

#[test]
fn listing_482063() {
    let r = parse_record(R482063).unwrap();
    assert_eq!(r.graph.items[0].label, "person");
    assert_eq!(r.graph.items[0].attributes, vec!["young", "female"]);
    assert!(r.graph.single_objects().is_empty());
    assert_eq!(relation_list(&r.graph).count(&"adorn".to_string()), 1);
    assert!(validate(&r, Mode::Lenient).is_accepted());
    assert!(validate(&r, Mode::Strict).is_accepted());
}

#[test]
fn listing_483868() {
    let r = parse_record(R483868).unwrap();
    let t = r.graph.triples().unwrap();
    assert_eq!((t[0].subject.label.as_str(), t[0].relation, t[0].object.label.as_str()), ("rainbow", "span over", "valley"));
    let e = entity_list(&r.graph);
    assert_eq!(e.count(&"rainbow".to_string()), 1);
    assert_eq!(e.count(&"valley".to_string()), 1);
    assert_eq!(
        sg_list(&r.graph).unwrap().count(&TripleKey::new("rainbow", "span over", "valley")),
        1
    );
    assert!(validate(&r, Mode::Strict).is_accepted());
}

#[test]
fn listings_serialize_to_their_compact_form() {
    for text in [R482063, R483868] {
        // independent route: re-emit the source JSON tree compactly
        let compact = serde_json::from_str::<Value>(text).unwrap().to_string();
        let ours = serialize_record(&parse_record(text).unwrap());
        assert_eq!(ours, compact);
        assert_eq!(serialize_record(&parse_record(&ours).unwrap()), ours);
    }
}
