use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::Serialize;
use sgkit_core::{validate, Mode};

use super::{cell, for_each_record, DOMAIN_ERRORS, OK};
use crate::run::Run;

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Corpus file (JSON lines or one JSON array).
    pub corpus: PathBuf,
}

#[derive(Serialize, Default)]
struct Summary {
    mode: &'static str,
    records_parsed: u64,
    parse_failures: u64,
    accepted: u64,
    rejected: u64,
    warnings: u64,
    errors_by_rule: BTreeMap<String, u64>,
    warnings_by_rule: BTreeMap<String, u64>,
}

pub fn run(args: ValidateArgs, run: &mut Run, mode: Mode) -> Result<u8> {
    let mut out = run.create("validation_report.tsv")?;
    writeln!(out, "img_id\tseverity\trule\tlocation\tmessage")?;
    let mut summary = Summary {
        mode: match mode {
            Mode::Strict => "strict",
            Mode::Lenient => "lenient",
        },
        ..Default::default()
    };
    let stats = for_each_record(run, &args.corpus, |item| {
        match item {
            Ok(record) => {
                let report = validate(&record, mode);
                if report.is_accepted() {
                    summary.accepted += 1;
                } else {
                    summary.rejected += 1;
                }
                summary.warnings += report.warnings.len() as u64;
                for f in &report.errors {
                    *summary.errors_by_rule.entry(f.rule.to_string()).or_default() += 1;
                }
                for f in &report.warnings {
                    *summary.warnings_by_rule.entry(f.rule.to_string()).or_default() += 1;
                }
                for line in report.render_lines() {
                    writeln!(out, "{}\t{line}", cell(&record.img_id))?;
                }
            }
            Err(e) => writeln!(
                out,
                "#{}\terror\tparse\tbyte {}\t{}",
                e.ordinal,
                e.byte_offset,
                cell(&e.error.to_string())
            )?,
        }
        Ok(())
    })?;
    out.flush()?;
    drop(out);
    summary.records_parsed = stats.records_ok;
    summary.parse_failures = stats.records_failed;
    run.write_json("validation_summary.json", &summary)?;
    println!(
        "{} records: {} accepted, {} rejected, {} unparsable, {} warnings",
        stats.records_seen(),
        summary.accepted,
        summary.rejected,
        summary.parse_failures,
        summary.warnings
    );
    Ok(if summary.rejected > 0 || summary.parse_failures > 0 { DOMAIN_ERRORS } else { OK })
}
