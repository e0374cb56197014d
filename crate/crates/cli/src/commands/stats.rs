use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use sgkit_core::analytics::{BinEdges, StatsAccumulator, StatsConfig};
use sgkit_core::StatsError;

use super::{for_each_record, DOMAIN_ERRORS, OK};
use crate::run::Run;

#[derive(Args, Debug)]
pub struct StatsArgs {
    pub corpus: PathBuf,
    /// Number of most frequent relations and attributes to list.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Histogram edges, e.g. `objects=0,5,10,20` or `graph=0,10,20,30`. Repeatable.
    #[arg(long, value_name = "KIND=EDGES")]
    pub bins: Vec<String>,
}

pub fn run(args: StatsArgs, run: &mut Run) -> Result<u8> {
    let top_k = run.setting("top_k", args.top_k, 10usize)?;
    let mut config = StatsConfig::default();
    for spec in &args.bins {
        let Some((kind, edges)) = spec.split_once('=') else {
            bail!("--bins expects KIND=EDGES, got {spec:?}");
        };
        let edges = BinEdges::parse(edges).with_context(|| format!("--bins {spec}"))?;
        match kind.trim() {
            "objects" => config.object_bins = edges,
            "graph" => config.graph_bins = edges,
            other => bail!("--bins kind must be objects or graph, got {other:?}"),
        }
    }
    run.record("object_bins", config.object_bins.edges());
    run.record("graph_bins", config.graph_bins.edges());

    let mut acc = StatsAccumulator::new(config);
    let ingest = for_each_record(run, &args.corpus, |r| {
        if let Ok(r) = r {
            acc.push(&r);
        }
        Ok(())
    })?;
    let report = match acc.finish(top_k) {
        Ok(r) => r,
        Err(e @ StatsError::EmptyCorpus) => {
            eprintln!("{}: {e}", args.corpus.display());
            return Ok(DOMAIN_ERRORS);
        }
        Err(e) => bail!(e),
    };
    let table = report.render_table();
    run.write_json("stats.json", &report)?;
    run.write_string("stats.txt", &table)?;
    print!("{table}");
    if ingest.records_failed > 0 {
        eprintln!("{} unparsable records excluded", ingest.records_failed);
        return Ok(DOMAIN_ERRORS);
    }
    Ok(OK)
}
