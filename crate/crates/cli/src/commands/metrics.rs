use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use sgkit_annotator::{run_accuracy_batch, HttpImageGenerator, Variant};
use sgkit_core::sampling::sample_without_replacement;
use sgkit_core::{iou_report, DatasetRecord, IoUReport};

use super::{cell, chat_setup, read_corpus, DOMAIN_ERRORS, OK};
use crate::run::Run;

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// `PRED REF` corpora, or a single corpus with `--protocol`.
    #[arg(required = true, num_args = 1..=2)]
    pub inputs: Vec<PathBuf>,
    /// Run the generate-then-extract accuracy protocol from captions or graphs.
    #[arg(long, value_name = "caption|sg")]
    pub protocol: Option<String>,
    /// Evaluate a seeded sample of this many records (protocol only).
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long)]
    pub parallelism: Option<usize>,
}

#[derive(Serialize)]
struct Row {
    img_id: String,
    report: Option<IoUReport>,
    error: Option<String>,
}

#[derive(Serialize)]
struct PairReport {
    pairs: usize,
    scored: usize,
    mean: Option<IoUReport>,
    rows: Vec<Row>,
    unmatched_predicted: Vec<String>,
    unmatched_reference: Vec<String>,
    duplicate_ids: Vec<String>,
    unparsable_records: u64,
}

fn fmt(r: &IoUReport) -> String {
    format!("{:.6}\t{:.6}\t{:.6}", r.sg_iou, r.entity_iou, r.relation_iou)
}

pub fn run(args: MetricsArgs, run: &mut Run, seed: u64) -> Result<u8> {
    match args.protocol.clone() {
        Some(p) => {
            let Some(variant) = Variant::parse(&p) else {
                bail!("--protocol must be caption or sg, got {p:?}");
            };
            if args.inputs.len() != 1 {
                bail!("--protocol takes exactly one corpus");
            }
            protocol(args, run, seed, variant)
        }
        None => {
            if args.inputs.len() != 2 {
                bail!("metrics takes PRED and REF corpora");
            }
            if args.sample.is_some() {
                bail!("--sample applies to --protocol only");
            }
            pairs(args, run)
        }
    }
}

fn index(records: &[DatasetRecord], dups: &mut Vec<String>) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        if m.insert(r.img_id.clone(), i).is_some() {
            dups.push(r.img_id.clone());
        }
    }
    m
}

fn pairs(args: MetricsArgs, run: &mut Run) -> Result<u8> {
    let (pred, pred_stats) = read_corpus(run, &args.inputs[0])?;
    let (refs, ref_stats) = read_corpus(run, &args.inputs[1])?;
    let mut duplicate_ids = Vec::new();
    let pred_ix = index(&pred, &mut duplicate_ids);
    let ref_ix = index(&refs, &mut duplicate_ids);

    let mut rows = Vec::new();
    let mut unmatched_reference = Vec::new();
    let mut visited = HashSet::new();
    for r in &refs {
        if !visited.insert(r.img_id.as_str()) {
            continue;
        }
        match pred_ix.get(&r.img_id) {
            Some(&p) => {
                let (report, error) = match iou_report(&pred[p].graph, &r.graph) {
                    Ok(rep) => (Some(rep), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                rows.push(Row {
                    img_id: r.img_id.clone(),
                    report,
                    error,
                });
            }
            None => unmatched_reference.push(r.img_id.clone()),
        }
    }
    let unmatched_predicted: Vec<String> = pred
        .iter()
        .filter(|p| !ref_ix.contains_key(&p.img_id))
        .map(|p| p.img_id.clone())
        .collect();
    let scored: Vec<IoUReport> = rows.iter().filter_map(|r| r.report).collect();
    let report = PairReport {
        pairs: rows.len(),
        scored: scored.len(),
        mean: IoUReport::mean(&scored),
        rows,
        unmatched_predicted,
        unmatched_reference,
        duplicate_ids,
        unparsable_records: pred_stats.records_failed + ref_stats.records_failed,
    };

    let mut tsv = String::from("img_id\tsg_iou\tentity_iou\trelation_iou\terror\n");
    for row in &report.rows {
        match (&row.report, &row.error) {
            (Some(r), _) => tsv.push_str(&format!("{}\t{}\t\n", cell(&row.img_id), fmt(r))),
            (None, e) => tsv.push_str(&format!(
                "{}\t\t\t\t{}\n",
                cell(&row.img_id),
                cell(e.as_deref().unwrap_or(""))
            )),
        }
    }
    match &report.mean {
        Some(m) => tsv.push_str(&format!("mean(n={})\t{}\t\n", report.scored, fmt(m))),
        None => tsv.push_str("mean(n=0)\t\t\t\t\n"),
    }
    run.write_string("metrics.tsv", &tsv)?;
    run.write_json("metrics.json", &report)?;
    match &report.mean {
        Some(m) => println!(
            "{} pairs: SG-IoU {:.4}  Entity-IoU {:.4}  Relation-IoU {:.4}",
            report.scored, m.sg_iou, m.entity_iou, m.relation_iou
        ),
        None => println!("no scored pairs"),
    }
    let problems = report.scored < report.pairs
        || !report.unmatched_predicted.is_empty()
        || !report.unmatched_reference.is_empty()
        || !report.duplicate_ids.is_empty()
        || report.unparsable_records > 0
        || report.pairs == 0;
    if problems {
        eprintln!(
            "{} unscored pairs, {} unmatched predicted, {} unmatched reference, {} duplicate ids, {} unparsable",
            report.pairs - report.scored,
            report.unmatched_predicted.len(),
            report.unmatched_reference.len(),
            report.duplicate_ids.len(),
            report.unparsable_records
        );
        return Ok(DOMAIN_ERRORS);
    }
    Ok(OK)
}

fn protocol(args: MetricsArgs, run: &mut Run, seed: u64, variant: Variant) -> Result<u8> {
    run.record("protocol", variant);
    let parallelism = run.setting("parallelism", args.parallelism, 4usize)?;
    let (extractor, prompt, timeout_s) = chat_setup(run, None)?;
    let Some(gen_url) = run.optional("generator_endpoint", None) else {
        bail!("the accuracy protocol needs `generator_endpoint` in the config file");
    };
    let gen_key = match run.optional("generator_api_key_env", None) {
        Some(var) => Some(std::env::var(&var).with_context(|| format!("environment variable {var} is not set"))?),
        None => None,
    };
    let generator = HttpImageGenerator::new(&gen_url, gen_key, Duration::from_secs(timeout_s))?;

    let (mut records, stats) = read_corpus(run, &args.inputs[0])?;
    run.record("sample", args.sample);
    if let Some(n) = args.sample {
        let ids: Vec<String> = records.iter().map(|r| r.img_id.clone()).collect();
        let chosen = sample_without_replacement(&ids, n, seed)?;
        let mut by_id: HashMap<String, DatasetRecord> =
            records.drain(..).map(|r| (r.img_id.clone(), r)).collect();
        records = chosen.iter().filter_map(|id| by_id.remove(id)).collect();
    }
    let batch = run_accuracy_batch(&records, &generator, &extractor, &prompt, variant, parallelism);
    let table = batch.render_table();
    run.write_string("accuracy.tsv", &table)?;
    run.write_json("accuracy.json", &batch)?;
    if let Some(m) = &batch.mean {
        println!(
            "{} of {} records: SG-IoU {:.4}  Entity-IoU {:.4}  Relation-IoU {:.4}",
            batch.successes,
            records.len(),
            m.sg_iou,
            m.entity_iou,
            m.relation_iou
        );
    }
    Ok(if batch.failures > 0 || stats.records_failed > 0 || batch.successes == 0 { DOMAIN_ERRORS } else { OK })
}
