use std::collections::HashMap;
use std::io::Read;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde_json::json;
use sgkit_annotator::audit::render_tally_sheet;
use sgkit_annotator::{read_tally, render_bundle, sample_audit};
use sgkit_core::io::write_id_list;
use sgkit_core::DatasetRecord;

use super::{read_corpus, DOMAIN_ERRORS, OK};
use crate::run::Run;

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// Annotated corpus to sample from.
    #[arg(required_unless_present = "tally", conflicts_with = "tally")]
    pub corpus: Option<PathBuf>,
    /// Number of records to review.
    #[arg(long)]
    pub size: Option<usize>,
    /// Summarize a filled tally sheet instead of drawing a sample.
    #[arg(long)]
    pub tally: Option<PathBuf>,
}

pub fn run(args: AuditArgs, run: &mut Run, seed: u64) -> Result<u8> {
    if let Some(path) = &args.tally {
        let mut text = String::new();
        run.input(path)?.read_to_string(&mut text)?;
        let summary = match read_tally(&text) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return Ok(DOMAIN_ERRORS);
            }
        };
        run.write_json(
            "audit_summary.json",
            &json!({
                "reviewed": summary.reviewed,
                "hallucinations": summary.hallucinations,
                "mislabels": summary.mislabels,
                "hallucination_rate_percent": summary.hallucination_rate(),
                "mislabel_rate_percent": summary.mislabel_rate(),
            }),
        )?;
        println!(
            "{} reviewed: hallucination {:.2}%, mislabel {:.2}%",
            summary.reviewed,
            summary.hallucination_rate(),
            summary.mislabel_rate()
        );
        return Ok(OK);
    }

    let corpus = args.corpus.as_ref().expect("clap requires corpus without --tally");
    let size = run.setting("audit_size", args.size, 100usize)?;
    let (records, stats) = read_corpus(run, corpus)?;
    let ids: Vec<String> = records.iter().map(|r| r.img_id.clone()).collect();
    let sample = match sample_audit(&ids, size, seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return Ok(DOMAIN_ERRORS);
        }
    };
    let by_id: HashMap<&str, &DatasetRecord> = records.iter().map(|r| (r.img_id.as_str(), r)).collect();
    write_id_list(run.create("audit_sample.txt")?, &sample.ids)?;
    run.write_string("audit_bundle.md", &render_bundle(&sample, &by_id))?;
    run.write_string("audit_tally.tsv", &render_tally_sheet(&sample))?;
    println!("{} of {} records sampled for review", sample.ids.len(), ids.len());
    Ok(if stats.records_failed > 0 { DOMAIN_ERRORS } else { OK })
}
