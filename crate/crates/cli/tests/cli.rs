mod support;

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sgkit_core::io::serialize_record;
use sgkit_core::synth::generate_corpus;

use support::{lines, run_ok, sgkit, write_config, write_manifest, MockChat};

const R482063: &str = include_str!("fixtures/record_482063.json");
const R483868: &str = include_str!("fixtures/record_483868.json");

fn compact(text: &str) -> String {
    serde_json::from_str::<Value>(text).unwrap().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn fixture_corpus(dir: &Path) -> PathBuf {
    write(dir, "clean.jsonl", &format!("{}\n{}\n", compact(R482063), compact(R483868)))
}

fn synthetic_corpus(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let text: String = generate_corpus(n, 8, seed)
        .iter()
        .map(|r| serialize_record(r) + "\n")
        .collect();
    write(dir, "synthetic.jsonl", &text)
}

fn code(cmd: &mut std::process::Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let clean = fixture_corpus(dir.path());
    let out = dir.path().join("ok");
    assert_eq!(code(sgkit().arg("--out").arg(&out).arg("validate").arg(&clean)), 0);
    assert_eq!(lines(&out.join("validation_report.tsv")).len(), 1);

    // a relation pointing at an item that does not exist
    let dangling = compact(R483868).replace("\"item2\":4", "\"item2\":99");
    assert_ne!(dangling, compact(R483868));
    let bad = write(dir.path(), "bad.jsonl", &format!("{}\n{dangling}\n", compact(R482063)));
    let out = dir.path().join("bad");
    assert_eq!(code(sgkit().arg("--out").arg(&out).arg("validate").arg(&bad)), 1);
    let report = lines(&out.join("validation_report.tsv"));
    assert!(report[1..].iter().any(|l| l.starts_with("483868\terror\t")), "{report:?}");
    let summary = json(out.join("validation_summary.json"));
    assert_eq!(summary["rejected"], 1);
    assert_eq!(summary["accepted"], 1);

    let torn = write(dir.path(), "torn.jsonl", &format!("{}\n{{\"img_id\": \n", compact(R482063)));
    let out = dir.path().join("torn");
    assert_eq!(code(sgkit().arg("--out").arg(&out).arg("validate").arg(&torn)), 1);
    assert!(lines(&out.join("validation_report.tsv")).iter().any(|l| l.contains("\tparse\t")));

    let out = dir.path().join("missing");
    assert_eq!(code(sgkit().arg("--out").arg(&out).arg("validate").arg(dir.path().join("nope.jsonl"))), 2);
    assert_eq!(json(out.join("run_manifest.json"))["exit_code"], 2);
    assert_eq!(code(sgkit().arg("frobnicate")), 2);
}

#[test]
fn strict_mode_applies_construction_rules() {
    let dir = tempfile::tempdir().unwrap();
    let lowscore = compact(R482063).replacen("\"score\":\"6.", "\"score\":\"5.", 1);
    assert_ne!(lowscore, compact(R482063));
    let corpus = write(dir.path(), "low.jsonl", &format!("{lowscore}\n"));
    let out = dir.path().join("o");
    assert_eq!(code(sgkit().arg("--out").arg(&out).arg("validate").arg(&corpus)), 0);
    assert_eq!(code(sgkit().arg("--out").arg(&out).arg("--strict").arg("validate").arg(&corpus)), 1);
    assert_eq!(json(out.join("run_manifest.json"))["config"]["mode"], "strict");
}

#[test]
fn ten_thousand_records_validate() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus(dir.path(), 10_000, 3);
    let out = dir.path().join("o");
    run_ok(sgkit().arg("--out").arg(&out).arg("validate").arg(&corpus));
    assert_eq!(json(out.join("validation_summary.json"))["accepted"], 10_000);
}

#[test]
fn metrics_on_identical_files_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus(dir.path(), 50, 4);
    let out = dir.path().join("m");
    run_ok(sgkit().arg("--out").arg(&out).arg("metrics").arg(&corpus).arg(&corpus));
    let report = json(out.join("metrics.json"));
    assert_eq!(report["pairs"], 50);
    for k in ["sg_iou", "entity_iou", "relation_iou"] {
        assert_eq!(report["mean"][k].as_f64(), Some(1.0));
    }
    let tsv = lines(&out.join("metrics.tsv"));
    assert_eq!(tsv.len(), 52);
    assert_eq!(tsv[51], "mean(n=50)\t1.000000\t1.000000\t1.000000\t");

    // unmatched ids are a domain error
    let one = write(dir.path(), "one.jsonl", &format!("{}\n", compact(R482063)));
    assert_eq!(code(sgkit().arg("--out").arg(&out).arg("metrics").arg(&one).arg(&corpus)), 1);
}

#[test]
fn split_is_reproducible_and_imports_are_audited() {
    let dir = tempfile::tempdir().unwrap();
    let ids: String = (0..1000).map(|i| format!("id{i:04}\n")).collect();
    let list = write(dir.path(), "ids.txt", &ids);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        run_ok(
            sgkit()
                .args(["--seed", seed])
                .arg("--out")
                .arg(&out)
                .args(["split", "--train", "800", "--val", "50", "--test", "150", "--ids"])
                .arg(&list),
        );
        out
    };
    let (a, b, c) = (run("a", "11"), run("b", "11"), run("c", "12"));
    for f in ["train.txt", "val.txt", "test.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(fs::read(a.join("test.txt")).unwrap(), fs::read(c.join("test.txt")).unwrap());
    assert_eq!(lines(&a.join("train.txt")).len(), 800);
    // the manifest has no timestamps, so a rerun into the same directory is byte-identical
    let first = fs::read(a.join("run_manifest.json")).unwrap();
    run("a", "11");
    assert_eq!(fs::read(a.join("run_manifest.json")).unwrap(), first);

    let import = |out: &str, lists: [&PathBuf; 3]| {
        code(
            sgkit()
                .arg("--out")
                .arg(dir.path().join(out))
                .args(["split", "--ids"])
                .arg(&list)
                .arg("--import")
                .args(lists),
        )
    };
    let [tr, va, te] = [a.join("train.txt"), a.join("val.txt"), a.join("test.txt")];
    assert_eq!(import("ok", [&tr, &va, &te]), 0);
    assert_eq!(json(dir.path().join("ok/split_audit.json"))["clean"], true);
    assert_eq!(import("overlap", [&tr, &tr, &te]), 1);
    assert!(json(dir.path().join("overlap/split_audit.json"))["overlapping_ids"].as_array().unwrap().len() >= 800);

    let too_many = code(
        sgkit()
            .arg("--out")
            .arg(dir.path().join("big"))
            .args(["split", "--ids"])
            .arg(&list),
    );
    assert_eq!(too_many, 1, "published sizes exceed a 1000-id corpus");
}

#[test]
fn config_precedence_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus(dir.path(), 200, 5);
    let conf = write(dir.path(), "run.conf", "# bench\nthreshold = 6\nsource_split = test\n");
    let out = dir.path().join("cfg");
    run_ok(sgkit().arg("--config").arg(&conf).arg("--out").arg(&out).arg("bench").arg(&corpus));
    let m = json(out.join("run_manifest.json"));
    assert_eq!(m["config"]["threshold"], 6);
    assert_eq!(m["config"]["source_split"], "test");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let header = lines(&out.join("bench_manifest.tsv"));
    assert!(header.iter().any(|l| l == "# threshold\t6"));

    run_ok(sgkit().arg("--config").arg(&conf).arg("--out").arg(&out).args(["bench", "--threshold", "2"]).arg(&corpus));
    assert_eq!(json(out.join("run_manifest.json"))["config"]["threshold"], 2);

    let dup = write(dir.path(), "dup.conf", "threshold = 1\nthreshold = 2\n");
    assert_eq!(code(sgkit().arg("--config").arg(&dup).arg("--out").arg(&out).arg("bench").arg(&corpus)), 2);
    let bad = write(dir.path(), "bad.conf", "threshold = many\n");
    assert_eq!(code(sgkit().arg("--config").arg(&bad).arg("--out").arg(&out).arg("bench").arg(&corpus)), 2);
}

#[test]
fn bench_respects_an_id_list() {
    let dir = tempfile::tempdir().unwrap();
    let records = generate_corpus(300, 9, 6);
    let corpus = write(
        dir.path(),
        "c.jsonl",
        &records.iter().map(|r| serialize_record(r) + "\n").collect::<String>(),
    );
    let subset: Vec<&str> = records.iter().step_by(3).map(|r| r.img_id.as_str()).collect();
    let list = write(dir.path(), "test_split.txt", &(subset.join("\n") + "\n"));
    let out = dir.path().join("o");
    run_ok(sgkit().arg("--out").arg(&out).args(["bench", "--ids"]).arg(&list).arg(&corpus));
    let expected: Vec<String> = records
        .iter()
        .step_by(3)
        .filter(|r| r.graph.relations.len() > 4)
        .map(|r| r.img_id.clone())
        .collect();
    let got: Vec<String> = lines(&out.join("bench_manifest.tsv")).into_iter().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(got, expected);
    assert!(lines(&out.join("bench_manifest.tsv")).contains(&"# source_split\ttest_split".to_string()));
}

#[test]
fn stats_outputs_and_bins() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus(dir.path(), 100, 7);
    let out = dir.path().join("o");
    run_ok(
        sgkit()
            .arg("--out")
            .arg(&out)
            .args(["stats", "--top-k", "3", "--bins", "objects=0,2,4"])
            .arg(&corpus),
    );
    let s = json(out.join("stats.json"));
    assert_eq!(s["n_records"], 100);
    assert_eq!(s["top_relations"].as_array().unwrap().len(), 3);
    assert_eq!(s["object_word_hist"].as_array().unwrap().len(), 3);
    assert!(fs::read_to_string(out.join("stats.txt")).unwrap().contains("top relations"));
    assert_eq!(code(sgkit().arg("--out").arg(&out).args(["stats", "--bins", "objects=3,4"]).arg(&corpus)), 2);
    let empty = write(dir.path(), "empty.jsonl", "");
    assert_eq!(code(sgkit().arg("--out").arg(&out).arg("stats").arg(&empty)), 1);
}

#[test]
fn encode_is_deterministic_and_uses_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture_corpus(dir.path());
    let ckpt = dir.path().join("params.json");
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        run_ok(
            sgkit()
                .args(["--seed", "3", "--out"])
                .arg(&out)
                .args(["encode", "--dim", "16"])
                .args(extra)
                .arg(&corpus),
        );
        out
    };
    let a = run("a", &["--hidden", "8", "--layers", "2", "--save-params", ckpt.to_str().unwrap()]);
    let b = run("b", &["--params", ckpt.to_str().unwrap()]);
    assert_eq!(fs::read(a.join("embeddings.tsv")).unwrap(), fs::read(b.join("embeddings.tsv")).unwrap());
    let rows = lines(&a.join("embeddings.tsv"));
    assert!(rows.iter().all(|r| r.split('\t').count() == 16));
    let prov = lines(&a.join("embeddings.provenance.tsv"));
    assert_eq!(prov[0], "row\timg_id\tkind\tid");
    assert_eq!(prov.len(), rows.len() + 1);
    assert_eq!(prov[1], "0\t482063\ttriple\t0");

    let wrong = dir.path().join("wrong");
    let c = code(
        sgkit()
            .arg("--out")
            .arg(&wrong)
            .args(["encode", "--dim", "8", "--params"])
            .arg(&ckpt)
            .arg(&corpus),
    );
    assert_eq!(c, 2, "checkpoint dimension mismatch");
}

#[test]
fn audit_sample_and_tally() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus(dir.path(), 120, 8);
    let out = dir.path().join("o");
    run_ok(sgkit().args(["--seed", "5", "--out"]).arg(&out).args(["audit", "--size", "10"]).arg(&corpus));
    let sample = lines(&out.join("audit_sample.txt"));
    assert_eq!(sample.len(), 10);
    let sheet = lines(&out.join("audit_tally.tsv"));
    assert_eq!(sheet.len(), 11);
    assert!(fs::read_to_string(out.join("audit_bundle.md")).unwrap().contains(&sample[0]));

    let mut filled = vec![sheet[0].clone()];
    for (i, id) in sample.iter().enumerate() {
        let h = if i < 2 { "x" } else { "" };
        let m = if i == 3 { "1" } else { "" };
        filled.push(format!("{id}\t{h}\t{m}\t"));
    }
    let tally = write(dir.path(), "filled.tsv", &(filled.join("\n") + "\n"));
    run_ok(sgkit().arg("--out").arg(&out).args(["audit", "--tally"]).arg(&tally));
    let s = json(out.join("audit_summary.json"));
    assert_eq!(s["reviewed"], 10);
    assert_eq!(s["hallucination_rate_percent"].as_f64(), Some(20.0));
    assert_eq!(s["mislabel_rate_percent"].as_f64(), Some(10.0));

    assert_eq!(code(sgkit().arg("--out").arg(&out).args(["audit", "--size", "500"]).arg(&corpus)), 1);
}

#[test]
fn annotate_against_a_mock_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, ids) = write_manifest(dir.path(), 6);
    let server = MockChat::start(None);
    let conf = write_config(dir.path(), &server.url, 2);
    let out = dir.path().join("o");
    run_ok(sgkit().arg("--config").arg(&conf).arg("--out").arg(&out).arg("annotate").arg(&manifest));
    let records = lines(&out.join("annotated.jsonl"));
    assert_eq!(records.len(), 6);
    let first: Value = serde_json::from_str(&records[0]).unwrap();
    assert!(ids.contains(&first["img_id"].as_str().unwrap().to_string()));
    assert_eq!(first["relations"][0]["relation"], "chasing");
    assert_eq!(json(out.join("annotate_summary.json"))["done"], 6);

    // a second run has nothing left to do
    let before = server.log().len();
    run_ok(sgkit().arg("--config").arg(&conf).arg("--out").arg(&out).arg("annotate").arg(&manifest));
    assert_eq!(server.log().len(), before);

    let bad = write(dir.path(), "bad.jsonl", "{\"img_id\": \"x\"}\n");
    assert_eq!(code(sgkit().arg("--config").arg(&conf).arg("--out").arg(&out).arg("annotate").arg(&bad)), 1);
    assert_eq!(server.log().len(), before);

    // no endpoint configured
    assert_eq!(code(sgkit().arg("--out").arg(&out).arg("annotate").arg(&manifest)), 2);
}

#[test]
fn unreachable_endpoint_fails_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = write_manifest(dir.path(), 2);
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    drop(listener);
    let conf = write_config(dir.path(), &url, 2);
    let out = dir.path().join("o");
    let c = code(sgkit().arg("--config").arg(&conf).arg("--out").arg(&out).arg("annotate").arg(&manifest));
    assert_eq!(c, 1);
    let summary = json(out.join("annotate_summary.json"));
    assert_eq!(summary["failed"], 2);
    assert_eq!(summary["requests"], 8);
}
