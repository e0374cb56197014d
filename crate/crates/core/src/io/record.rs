//! JSON encoding of records.
//!
//! Field names follow the published listings exactly. Serialization is
//! canonical: compact JSON, known fields in a fixed order, unknown fields
//! re-emitted afterwards in the order they were read.

use serde_json::{Map, Number, Value};

use crate::error::ParseError;
use crate::model::{DatasetRecord, Item, Relation, SceneGraph, Score};

pub const RECORD_FIELDS: [&str; 7] = [
    "img_id",
    "name",
    "caption_ori",
    "score",
    "url",
    "items",
    "relations",
];
const ITEM_FIELDS: [&str; 4] = ["item_id", "label", "attributes", "global_item_id"];
const RELATION_FIELDS: [&str; 5] = ["triple_id", "item1", "relation", "item2", "global_relation_id"];

/// Parses one record from JSON text.
pub fn parse_record(text: &str) -> Result<DatasetRecord, ParseError> {
    let value = parse_json(text)?;
    record_from_value(value)
}

/// Parses JSON text, mapping syntax errors to a byte offset.
pub fn parse_json(text: &str) -> Result<Value, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

pub fn record_from_value(value: Value) -> Result<DatasetRecord, ParseError> {
    let Value::Object(mut obj) = value else {
        return Err(ParseError::NotAnObject);
    };
    for field in RECORD_FIELDS {
        if !obj.contains_key(field) {
            return Err(ParseError::MissingField(field.to_string()));
        }
    }
    let img_id = take_string(&mut obj, "img_id")?;
    let name = take_string(&mut obj, "name")?;
    let caption_ori = take_string(&mut obj, "caption_ori")?;
    let score = match obj.shift_remove("score") {
        Some(Value::String(s)) => Score::parse(&s, true),
        Some(Value::Number(n)) => Score::parse(&n.to_string(), false),
        _ => None,
    }
    .ok_or_else(|| ParseError::invalid("score", "expected a decimal number or numeric string"))?;
    let url = take_string(&mut obj, "url")?;
    let graph = graph_from_parts(obj.shift_remove("items"), obj.shift_remove("relations"))?;
    Ok(DatasetRecord {
        img_id,
        name,
        caption_ori,
        score,
        url,
        graph,
        extra: obj,
    })
}

/// Reads a graph out of an object holding `items` and (optionally)
/// `relations`. Used for model responses, which carry only the graph body.
pub fn graph_from_object(obj: &Map<String, Value>) -> Result<SceneGraph, ParseError> {
    if !obj.contains_key("items") {
        return Err(ParseError::MissingField("items".into()));
    }
    graph_from_parts(
        obj.get("items").cloned(),
        Some(obj.get("relations").cloned().unwrap_or(Value::Array(Vec::new()))),
    )
}

fn graph_from_parts(items: Option<Value>, relations: Option<Value>) -> Result<SceneGraph, ParseError> {
    let items = expect_array(items, "items")?
        .into_iter()
        .enumerate()
        .map(|(i, v)| item_from_value(v, i))
        .collect::<Result<Vec<_>, _>>()?;
    let relations = expect_array(relations, "relations")?
        .into_iter()
        .enumerate()
        .map(|(i, v)| relation_from_value(v, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SceneGraph { items, relations })
}

fn item_from_value(value: Value, index: usize) -> Result<Item, ParseError> {
    let ctx = format!("items[{index}]");
    let Value::Object(mut obj) = value else {
        return Err(ParseError::invalid(ctx, "expected an object"));
    };
    let item_id = take_u64(&mut obj, "item_id", &ctx)?;
    let label = take_string_in(&mut obj, "label", &ctx)?;
    let attributes = match obj.shift_remove("attributes") {
        None => return Err(ParseError::MissingField(format!("{ctx}.attributes"))),
        Some(Value::Array(values)) => values
            .into_iter()
            .map(|v| match v {
                Value::String(s) => Ok(s),
                _ => Err(ParseError::invalid(format!("{ctx}.attributes"), "expected strings")),
            })
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err(ParseError::invalid(format!("{ctx}.attributes"), "expected an array")),
    };
    let global_item_id = take_opt_u64(&mut obj, "global_item_id", &ctx)?;
    Ok(Item {
        item_id,
        label,
        attributes,
        global_item_id,
        extra: obj,
    })
}

fn relation_from_value(value: Value, index: usize) -> Result<Relation, ParseError> {
    let ctx = format!("relations[{index}]");
    let Value::Object(mut obj) = value else {
        return Err(ParseError::invalid(ctx, "expected an object"));
    };
    Ok(Relation {
        triple_id: take_u64(&mut obj, "triple_id", &ctx)?,
        item1: take_u64(&mut obj, "item1", &ctx)?,
        relation: take_string_in(&mut obj, "relation", &ctx)?,
        item2: take_u64(&mut obj, "item2", &ctx)?,
        global_relation_id: take_opt_u64(&mut obj, "global_relation_id", &ctx)?,
        extra: obj,
    })
}

fn expect_array(value: Option<Value>, field: &str) -> Result<Vec<Value>, ParseError> {
    match value {
        None => Err(ParseError::MissingField(field.to_string())),
        Some(Value::Array(values)) => Ok(values),
        Some(_) => Err(ParseError::invalid(field, "expected an array")),
    }
}

fn take_string(obj: &mut Map<String, Value>, field: &str) -> Result<String, ParseError> {
    match obj.shift_remove(field) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(ParseError::invalid(field, "expected a string")),
        None => Err(ParseError::MissingField(field.to_string())),
    }
}

fn take_string_in(obj: &mut Map<String, Value>, field: &str, ctx: &str) -> Result<String, ParseError> {
    take_string(obj, field).map_err(|e| qualify(e, ctx))
}

fn take_u64(obj: &mut Map<String, Value>, field: &str, ctx: &str) -> Result<u64, ParseError> {
    match obj.shift_remove(field) {
        Some(Value::Number(n)) => n
            .as_u64()
            .ok_or_else(|| ParseError::invalid(format!("{ctx}.{field}"), "expected a non-negative integer")),
        Some(_) => Err(ParseError::invalid(format!("{ctx}.{field}"), "expected a non-negative integer")),
        None => Err(ParseError::MissingField(format!("{ctx}.{field}"))),
    }
}

fn take_opt_u64(obj: &mut Map<String, Value>, field: &str, ctx: &str) -> Result<Option<u64>, ParseError> {
    match obj.get(field) {
        None | Some(Value::Null) => {
            obj.shift_remove(field);
            Ok(None)
        }
        Some(_) => take_u64(obj, field, ctx).map(Some),
    }
}

fn qualify(e: ParseError, ctx: &str) -> ParseError {
    match e {
        ParseError::MissingField(f) => ParseError::MissingField(format!("{ctx}.{f}")),
        ParseError::InvalidField { field, message } => ParseError::InvalidField {
            field: format!("{ctx}.{field}"),
            message,
        },
        other => other,
    }
}

pub fn record_to_value(record: &DatasetRecord) -> Value {
    let mut obj = Map::new();
    obj.insert("img_id".into(), Value::String(record.img_id.clone()));
    obj.insert("name".into(), Value::String(record.name.clone()));
    obj.insert("caption_ori".into(), Value::String(record.caption_ori.clone()));
    obj.insert("score".into(), score_value(&record.score));
    obj.insert("url".into(), Value::String(record.url.clone()));
    let graph = graph_to_value(&record.graph);
    if let Value::Object(g) = graph {
        obj.extend(g);
    }
    append_extra(&mut obj, &record.extra, &RECORD_FIELDS);
    Value::Object(obj)
}

/// `{"items": [...], "relations": [...]}`.
pub fn graph_to_value(graph: &SceneGraph) -> Value {
    let items = graph
        .items
        .iter()
        .map(|it| {
            let mut o = Map::new();
            o.insert("item_id".into(), Value::from(it.item_id));
            o.insert("label".into(), Value::String(it.label.clone()));
            o.insert(
                "attributes".into(),
                Value::Array(it.attributes.iter().cloned().map(Value::String).collect()),
            );
            if let Some(g) = it.global_item_id {
                o.insert("global_item_id".into(), Value::from(g));
            }
            append_extra(&mut o, &it.extra, &ITEM_FIELDS);
            Value::Object(o)
        })
        .collect();
    let relations = graph
        .relations
        .iter()
        .map(|r| {
            let mut o = Map::new();
            o.insert("triple_id".into(), Value::from(r.triple_id));
            o.insert("item1".into(), Value::from(r.item1));
            o.insert("relation".into(), Value::String(r.relation.clone()));
            o.insert("item2".into(), Value::from(r.item2));
            if let Some(g) = r.global_relation_id {
                o.insert("global_relation_id".into(), Value::from(g));
            }
            append_extra(&mut o, &r.extra, &RELATION_FIELDS);
            Value::Object(o)
        })
        .collect();
    let mut obj = Map::new();
    obj.insert("items".into(), Value::Array(items));
    obj.insert("relations".into(), Value::Array(relations));
    Value::Object(obj)
}

fn append_extra(obj: &mut Map<String, Value>, extra: &Map<String, Value>, known: &[&str]) {
    for (k, v) in extra {
        if !known.contains(&k.as_str()) {
            obj.insert(k.clone(), v.clone());
        }
    }
}

fn score_value(score: &Score) -> Value {
    if score.is_quoted() {
        return Value::String(score.text().to_string());
    }
    match serde_json::from_str::<Number>(score.text().trim()) {
        Ok(n) => Value::Number(n),
        Err(_) => Value::String(score.text().to_string()),
    }
}

/// Canonical single-line form.
pub fn serialize_record(record: &DatasetRecord) -> String {
    record_to_value(record).to_string()
}

/// Indented form for human review. Not canonical.
pub fn serialize_record_pretty(record: &DatasetRecord) -> String {
    serde_json::to_string_pretty(&record_to_value(record)).expect("Value serialization cannot fail")
}

pub fn serialize_graph(graph: &SceneGraph) -> String {
    graph_to_value(graph).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LISTING: &str = r#"{
    "img_id": "482063",
    "name": "minus83166520...",
    "caption_ori": "Page 90 of Girl...",
    "score": "6.720815181732178",
    "url": "https://stories...",
    "items": [
        {"item_id": 0, "label": "person", "attributes": ["young", "female"], "global_item_id": 3201686},
        {"item_id": 1, "label": "headdress", "attributes": ["ornate", "white"], "global_item_id": 3201687}
    ],
    "relations": [
        {"triple_id": 0, "item1": 1, "relation": "adorn", "item2": 0, "global_relation_id": 2118510}
    ]
}"#;

    #[test]
    fn parses_published_listing() {
        let r = parse_record(LISTING).unwrap();
        assert_eq!(r.img_id, "482063");
        assert_eq!(r.graph.items[0].label, "person");
        assert_eq!(r.graph.items[0].attributes, vec!["young", "female"]);
        assert_eq!(r.graph.items[0].global_item_id, Some(3201686));
        assert_eq!(r.score.text(), "6.720815181732178");
        assert_eq!(r.graph.relations[0].relation, "adorn");
    }

    #[test]
    fn missing_items_is_named() {
        let v: Value = serde_json::from_str(LISTING).unwrap();
        let mut obj = v.as_object().unwrap().clone();
        obj.shift_remove("items");
        let err = parse_record(&Value::Object(obj).to_string()).unwrap_err();
        assert_eq!(err.to_string(), "missing-field: items");
    }

    #[test]
    fn syntax_error_reports_byte_offset() {
        let text = "{\"img_id\": \"1\",\n \"name\" \"x\"}";
        match parse_record(text).unwrap_err() {
            ParseError::Syntax { offset, .. } => assert_eq!(&text[offset..offset + 3], "\"x\""),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn serialize_is_canonical_fixpoint() {
        let once = serialize_record(&parse_record(LISTING).unwrap());
        let twice = serialize_record(&parse_record(&once).unwrap());
        assert_eq!(once, twice);
        assert!(once.starts_with(r#"{"img_id":"482063","name":"#));
    }

    #[test]
    fn unknown_fields_survive_after_known_ones() {
        let text = r#"{"zeta":1,"img_id":"9","name":"","caption_ori":"","score":7.25000,"url":"","items":[{"item_id":0,"label":"a","attributes":["b"],"mask":[1,2]}],"relations":[],"alpha":{"k":"v"}}"#;
        let r = parse_record(text).unwrap();
        assert_eq!(r.extra.keys().collect::<Vec<_>>(), vec!["zeta", "alpha"]);
        let out = serialize_record(&r);
        assert_eq!(
            out,
            r#"{"img_id":"9","name":"","caption_ori":"","score":7.25000,"url":"","items":[{"item_id":0,"label":"a","attributes":["b"],"mask":[1,2]}],"relations":[],"zeta":1,"alpha":{"k":"v"}}"#
        );
        assert_eq!(parse_record(&out).unwrap(), r);
    }

    #[test]
    fn bad_field_types_are_reported() {
        let text = r#"{"img_id":"9","name":"","caption_ori":"","score":"high","url":"","items":[],"relations":[]}"#;
        assert!(matches!(parse_record(text), Err(ParseError::InvalidField { field, .. }) if field == "score"));
        let text = r#"{"img_id":"9","name":"","caption_ori":"","score":"7","url":"","items":[{"item_id":-1,"label":"a","attributes":[]}],"relations":[]}"#;
        assert!(matches!(parse_record(text), Err(ParseError::InvalidField { field, .. }) if field == "items[0].item_id"));
        assert_eq!(parse_record("[1]").unwrap_err(), ParseError::NotAnObject);
    }
}
