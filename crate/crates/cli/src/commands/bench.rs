use std::collections::HashSet;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use sgkit_core::bench::{BenchSelector, DEFAULT_RELATION_THRESHOLD};
use sgkit_core::io::read_id_list;

use super::{for_each_record, DOMAIN_ERRORS, OK};
use crate::run::Run;

#[derive(Args, Debug)]
pub struct BenchArgs {
    pub corpus: PathBuf,
    /// Keep records with strictly more relations than this.
    #[arg(long)]
    pub threshold: Option<usize>,
    /// Restrict the scan to the ids in this list (one per line), e.g. a test split.
    #[arg(long)]
    pub ids: Option<PathBuf>,
    /// Label written into the manifest header.
    #[arg(long)]
    pub source_split: Option<String>,
}

pub fn run(args: BenchArgs, run: &mut Run) -> Result<u8> {
    let threshold = run.setting("threshold", args.threshold, DEFAULT_RELATION_THRESHOLD)?;
    let default_split = match &args.ids {
        Some(p) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        None => "all".to_string(),
    };
    let source_split = run.setting("source_split", args.source_split, default_split)?;
    let filter: Option<HashSet<String>> = match &args.ids {
        Some(p) => {
            let ids = read_id_list(run.input(p)?)?;
            Some(ids.into_iter().collect())
        }
        None => None,
    };

    let mut selector = BenchSelector::new(threshold, source_split);
    let mut seen = HashSet::new();
    let ingest = for_each_record(run, &args.corpus, |r| {
        if let Ok(r) = r {
            if filter.as_ref().is_none_or(|f| f.contains(&r.img_id)) {
                seen.insert(r.img_id.clone());
                selector.push(&r);
            }
        }
        Ok(())
    })?;
    let manifest = selector.finish();
    let mut out = run.create("bench_manifest.tsv")?;
    manifest.write(&mut out)?;
    drop(out);
    println!("{} of {} scanned records selected", manifest.selected.len(), manifest.scanned);

    let mut code = OK;
    if let Some(f) = &filter {
        let missing = f.iter().filter(|id| !seen.contains(*id)).count();
        if missing > 0 {
            eprintln!("{missing} listed ids not found in the corpus");
            code = DOMAIN_ERRORS;
        }
    }
    if ingest.records_failed > 0 {
        eprintln!("{} unparsable records skipped", ingest.records_failed);
        code = DOMAIN_ERRORS;
    }
    Ok(code)
}
