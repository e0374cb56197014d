//! Scene-graph annotated image-text records.
//!
//! - [`model`]: graphs, records and their derived views
//! - [`validate`]: rule-based checks in strict or lenient mode
//! - [`io`]: canonical JSON encoding, streaming ingestion, seeded splits
//! - [`analytics`]: corpus statistics
//! - [`metrics`]: multiset IoU family over entities, relations and triples
//! - [`bench`]: complex-scene selection
//! - [`sampling`]: reproducible without-replacement samples

pub mod analytics;
pub mod bench;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod sampling;
pub mod synth;
pub mod validate;

pub use error::{ModelError, ParseError, SplitError, StatsError};
pub use metrics::{iou, iou_report, IoUReport, Multiset, TripleKey};
pub use model::{canonical_text, DatasetRecord, Item, Relation, SceneGraph, Score, Triple};
pub use validate::{validate, validate_graph, Mode, ValidationReport};
