use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use sgkit_encoder::backend::DEFAULT_DIM;
use sgkit_encoder::params::{DEFAULT_HIDDEN, DEFAULT_LAYERS};
use sgkit_encoder::{assemble_with, AssembleOptions, EmbeddingBackend, EncoderParams, HashEmbedding, HttpEmbedding, Provenance};

use super::{cell, for_each_record, DOMAIN_ERRORS, OK};
use crate::run::Run;

#[derive(Args, Debug)]
pub struct EncodeArgs {
    pub corpus: PathBuf,
    /// Parameter checkpoint; without it, parameters are freshly initialized from the seed.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Embedding width.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Hidden width of the message transform (fresh parameters only).
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Message-passing rounds (fresh parameters only).
    #[arg(long)]
    pub layers: Option<usize>,
    /// Render triple text from labels and relation only.
    #[arg(long)]
    pub no_attributes: bool,
    /// Also write the parameters used to this checkpoint file.
    #[arg(long)]
    pub save_params: Option<PathBuf>,
}

pub fn run(args: EncodeArgs, run: &mut Run, seed: u64) -> Result<u8> {
    let params = match &args.params {
        Some(p) => {
            if args.hidden.is_some() || args.layers.is_some() {
                bail!("--hidden and --layers apply to fresh parameters only");
            }
            run.input(p)?;
            let params = EncoderParams::load(p, args.dim)
                .with_context(|| format!("loading {}", p.display()))?;
            run.record("embed_dim", params.dim);
            run.record("hidden", params.hidden);
            run.record("layers", params.n_layers());
            params
        }
        None => {
            let dim = run.setting("embed_dim", args.dim, DEFAULT_DIM)?;
            let hidden = run.setting("hidden", args.hidden, DEFAULT_HIDDEN)?;
            let layers = run.setting("layers", args.layers, DEFAULT_LAYERS)?;
            EncoderParams::init(dim, hidden, layers, seed)
        }
    };
    run.record("alpha", params.alpha);
    let opts = AssembleOptions {
        include_attributes: !args.no_attributes,
    };
    run.record("include_attributes", opts.include_attributes);

    let backend: Box<dyn EmbeddingBackend> = match run.optional("embed_endpoint", None) {
        Some(url) => {
            let model = run.setting("embed_model", None, "text-embedding-3-small".to_string())?;
            let key = match run.optional("embed_api_key_env", None) {
                Some(var) => Some(std::env::var(&var).with_context(|| format!("environment variable {var} is not set"))?),
                None => None,
            };
            Box::new(HttpEmbedding::new(&url, &model, key, params.dim)?)
        }
        None => {
            run.record("embed_backend", "hash");
            Box::new(HashEmbedding::new(params.dim, seed))
        }
    };

    if let Some(p) = &args.save_params {
        params.save(p).with_context(|| format!("saving {}", p.display()))?;
    }

    let mut matrix = run.create("embeddings.tsv")?;
    let mut sidecar = run.create("embeddings.provenance.tsv")?;
    writeln!(sidecar, "row\timg_id\tkind\tid")?;
    let mut row = 0u64;
    let mut failed = 0u64;
    let ingest = for_each_record(run, &args.corpus, |r| {
        let Ok(record) = r else { return Ok(()) };
        let emb = match assemble_with(&record.graph, backend.as_ref(), &params, opts) {
            Ok(e) => e,
            Err(e) => {
                eprintln!("{}: {e}", record.img_id);
                failed += 1;
                return Ok(());
            }
        };
        for (v, prov) in emb.vectors.iter().zip(&emb.provenance) {
            let mut line = String::with_capacity(v.len() * 20);
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    line.push('\t');
                }
                line.push_str(&x.to_string());
            }
            writeln!(matrix, "{line}")?;
            let (kind, id) = match prov {
                Provenance::Triple { triple_id } => ("triple", triple_id),
                Provenance::Single { item_id } => ("single", item_id),
            };
            writeln!(sidecar, "{row}\t{}\t{kind}\t{id}", cell(&record.img_id))?;
            row += 1;
        }
        Ok(())
    })?;
    matrix.flush()?;
    sidecar.flush()?;
    println!("{} records encoded into {row} rows of width {}", ingest.records_ok - failed, params.dim);
    Ok(if failed > 0 || ingest.records_failed > 0 { DOMAIN_ERRORS } else { OK })
}
