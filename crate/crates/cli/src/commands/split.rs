use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde_json::json;
use sgkit_core::io::{audit_split_lists, read_id_list, split_dataset, write_id_list, SplitSpec};
use sgkit_core::SplitError;

use super::{for_each_record, DOMAIN_ERRORS, OK};
use crate::run::Run;

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Corpus whose img_ids are split.
    #[arg(required_unless_present = "ids", conflicts_with = "ids")]
    pub corpus: Option<PathBuf>,
    /// Split the ids of this list (one per line) instead of a corpus.
    #[arg(long)]
    pub ids: Option<PathBuf>,
    #[arg(long, requires_all = ["val", "test"])]
    pub train: Option<u64>,
    #[arg(long, requires_all = ["train", "test"])]
    pub val: Option<u64>,
    #[arg(long, requires_all = ["train", "val"])]
    pub test: Option<u64>,
    /// Audit externally provided TRAIN VAL TEST lists against the corpus instead of splitting.
    #[arg(long, num_args = 3, value_names = ["TRAIN", "VAL", "TEST"], conflicts_with_all = ["train", "val", "test"])]
    pub import: Option<Vec<PathBuf>>,
}

pub fn run(args: SplitArgs, run: &mut Run, seed: u64) -> Result<u8> {
    let ids = match (&args.corpus, &args.ids) {
        (_, Some(p)) => read_id_list(run.input(p)?)?,
        (Some(p), None) => {
            let mut ids = Vec::new();
            let stats = for_each_record(run, p, |r| {
                if let Ok(r) = r {
                    ids.push(r.img_id);
                }
                Ok(())
            })?;
            if stats.records_failed > 0 {
                eprintln!("{} unparsable records; refusing to split a partial corpus", stats.records_failed);
                return Ok(DOMAIN_ERRORS);
            }
            ids
        }
        (None, None) => bail!("give a corpus or --ids"),
    };

    if let Some(lists) = &args.import {
        let mut read = Vec::new();
        for p in lists {
            read.push(read_id_list(run.input(p)?)?);
        }
        let views: Vec<&[String]> = read.iter().map(Vec::as_slice).collect();
        let audit = audit_split_lists(&ids, &views);
        let report = json!({
            "corpus_ids": ids.len(),
            "train": read[0].len(),
            "val": read[1].len(),
            "test": read[2].len(),
            "unknown_ids": audit.unknown_ids,
            "overlapping_ids": audit.overlapping_ids,
            "duplicate_ids": audit.duplicate_ids,
            "unassigned": audit.unassigned,
            "clean": audit.is_clean(),
        });
        run.write_json("split_audit.json", &report)?;
        println!(
            "train {} / val {} / test {}: {} unknown, {} overlapping, {} duplicate, {} unassigned",
            read[0].len(),
            read[1].len(),
            read[2].len(),
            audit.unknown_ids.len(),
            audit.overlapping_ids.len(),
            audit.duplicate_ids.len(),
            audit.unassigned
        );
        return Ok(if audit.is_clean() { OK } else { DOMAIN_ERRORS });
    }

    let spec = match (args.train, args.val, args.test) {
        (Some(train_count), Some(val_count), Some(test_count)) => SplitSpec {
            train_count,
            val_count,
            test_count,
            seed,
        },
        _ => SplitSpec::published(seed),
    };
    run.record("train", spec.train_count);
    run.record("val", spec.val_count);
    run.record("test", spec.test_count);
    let split = match split_dataset(&ids, &spec) {
        Ok(s) => s,
        Err(e @ (SplitError::CountsExceedCorpus { .. } | SplitError::DuplicateId(_))) => {
            eprintln!("{e}");
            return Ok(DOMAIN_ERRORS);
        }
    };
    for (name, list) in [("train.txt", &split.train), ("val.txt", &split.val), ("test.txt", &split.test)] {
        write_id_list(run.create(name)?, list)?;
    }
    println!(
        "{} ids: train {}, val {}, test {}, unassigned {}",
        ids.len(),
        split.train.len(),
        split.val.len(),
        split.test.len(),
        ids.len() - split.train.len() - split.val.len() - split.test.len()
    );
    Ok(OK)
}
