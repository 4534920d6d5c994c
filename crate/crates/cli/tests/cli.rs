mod common;

use std::fs;

use absa_lab::interpret::ReductionTrace;
use absa_lab::nn::{Checkpoint, EncoderConfig, EncoderModel};
use absa_lab::text::Vocab;
use common::{ok, run, s, Pipeline};

#[test]
fn explain_dumplings_with_random_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let vocab = Vocab::from_words(["i", "love", "their", "dumplings"]);
    let vocab_path = dir.path().join("vocab.txt");
    vocab.save(&vocab_path).unwrap();
    let cfg = EncoderConfig { vocab_size: vocab.len(), max_len: 16, init_std: 0.5, ..Default::default() };
    let ck_path = dir.path().join("random.ckpt");
    Checkpoint::new(EncoderModel::new(cfg, 1).unwrap()).save(&ck_path).unwrap();
    let out = dir.path().join("out");
    ok(&[
        "explain", "--model", s(&ck_path), "--vocab", s(&vocab_path), "--sentence", "I love their dumplings",
        "--target", "dumplings", "--out", s(&out), "--max-len", "16",
    ]);
    let line = fs::read_to_string(out.join("traces.jsonl")).unwrap();
    let trace: ReductionTrace = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert_eq!(trace.tokens, ["i", "love", "their", "dumplings"]);
    assert_eq!(trace.target_range(), 3..4);
    assert!(trace.steps.iter().all(|st| st.removed != 3));
    assert!(trace.reduced_set.contains(&3));
    assert!(fs::read_to_string(out.join("traces.txt")).unwrap().contains("dumplings"));
}

#[test]
fn explain_stub_flips_without_good() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&["explain", "--stub", "--sentence", "the food is good", "--target", "food", "--out", s(&out)]);
    let trace: ReductionTrace = serde_json::from_str(fs::read_to_string(out.join("traces.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(trace.reduced_tokens(), ["food", "good"]);
}

#[test]
fn stub_matrix_has_eighteen_rows_per_seed_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["eval-matrix", "--stub", "--seeds", "1", "--out", s(&a)]);
    ok(&["--sequential", "eval-matrix", "--stub", "--seeds", "1", "--out", s(&b)]);
    let runs = fs::read_to_string(a.join("runs.tsv")).unwrap();
    assert_eq!(runs.lines().count(), 19);
    assert!(runs.starts_with("d_lm\td_train\td_test\tcategory\tseed\taccuracy\tmacro_f1\n"));
    for f in ["runs.tsv", "summary.tsv", "table.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = run(&["prepare-corpus", "--input", "/nonexistent/reviews.jsonl", "--out", s(&out), "--domain", "laptops"]);
    assert_eq!(missing.status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "seeds = [1]\nstub = true\nbogus_key = 3\n").unwrap();
    let unknown = run(&["eval-matrix", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("bogus_key"));

    let no_input = run(&["explain", "--stub", "--out", s(&out)]);
    assert_eq!(no_input.status.code(), Some(2));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "stub = true\nseeds = [4, 5]\n").unwrap();
    let out = dir.path().join("out");
    ok(&["eval-matrix", "--config", s(&cfg), "--seeds", "6", "--out", s(&out)]);
    let echoed = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echoed.contains("seeds = [6]"), "{echoed}");
    assert!(fs::read_to_string(out.join("runs.tsv")).unwrap().lines().skip(1).all(|l| l.split('\t').nth(4) == Some("6")));
}

#[test]
fn completed_runs_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&["eval-matrix", "--stub", "--seeds", "1", "--out", s(&out)]);
    let again = run(&["eval-matrix", "--stub", "--seeds", "2", "--out", s(&out)]);
    assert_eq!(again.status.code(), Some(2));
    assert!(fs::read_to_string(out.join("runs.tsv")).unwrap().contains("\t1\t"));
    ok(&["eval-matrix", "--stub", "--seeds", "2", "--out", s(&out), "--force"]);
    let runs = fs::read_to_string(out.join("runs.tsv")).unwrap();
    assert!(runs.lines().skip(1).all(|l| l.split('\t').nth(4) == Some("2")));
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(dir.path());
    p.run(&[]);
    for f in p.metric_files() {
        assert!(f.exists(), "{} missing", f.display());
    }
    for d in [&p.corpus, &p.lm, &p.atsc, &p.explain, &p.matrix, &p.curve, &p.report] {
        assert!(d.join("config.toml").exists(), "{}", d.display());
    }
    assert!(p.lm.join("checkpoints/snapshot-0.ckpt").exists());
    let svg = fs::read_to_string(p.report.join("curve.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("class=\"mean\""));
    let table = fs::read_to_string(p.report.join("table.txt")).unwrap();
    assert!(table.contains("published reference"));
}

#[test]
fn pipeline_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = Pipeline::new(&dir.path().join("a"));
    let b = Pipeline::new(&dir.path().join("b"));
    a.run(&[]);
    b.run(&["--workers", "1"]);
    assert_eq!(common::differing(&a, &b), Vec::<String>::new());
}
