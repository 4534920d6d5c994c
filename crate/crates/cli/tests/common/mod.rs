#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_absa-lab"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn absa-lab")
}

pub fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "absa-lab {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Output directories of one pass through every command.
pub struct Pipeline {
    pub synth: PathBuf,
    pub corpus: PathBuf,
    pub lm: PathBuf,
    pub atsc: PathBuf,
    pub explain: PathBuf,
    pub matrix: PathBuf,
    pub curve: PathBuf,
    pub report: PathBuf,
}

impl Pipeline {
    pub fn new(root: &Path) -> Pipeline {
        let d = |n: &str| root.join(n);
        Pipeline {
            synth: d("synth"),
            corpus: d("corpus"),
            lm: d("lm"),
            atsc: d("atsc"),
            explain: d("explain"),
            matrix: d("matrix"),
            curve: d("curve"),
            report: d("report"),
        }
    }

    /// Run everything on a small synthetic data set.
    pub fn run(&self, extra: &[&str]) {
        let with = |args: &[&str]| {
            let mut v = args.to_vec();
            v.extend_from_slice(extra);
            ok(&v);
        };
        let syn = |f: &str| self.synth.join(f);
        with(&["synth", "--out", s(&self.synth), "--seed", "3", "--reviews-per-domain", "40", "--train-examples", "30", "--test-examples", "15"]);
        with(&[
            "prepare-corpus", "--input", s(&syn("laptops_reviews.jsonl")), "--out", s(&self.corpus), "--domain", "laptops",
            "--eval-xml", s(&syn("laptops_test.xml")), "--max-len", "48", "--shards", "2", "--seed", "5",
        ]);
        with(&[
            "lm-finetune", "--corpus", s(&self.corpus), "--out", s(&self.lm), "--domain", "laptops", "--epochs", "2",
            "--batch-size", "8", "--lr", "1e-3", "--snapshots", "0,40", "--hidden", "16", "--heads", "2", "--ff", "32",
            "--seed", "7",
        ]);
        let vocab = self.corpus.join("vocab.txt");
        let final_ck = self.lm.join("checkpoints/final.ckpt");
        with(&[
            "train-atsc", "--model", s(&final_ck), "--vocab", s(&vocab), "--train", s(&syn("laptops_train.xml")),
            "--test", s(&syn("laptops_test.xml")), "--out", s(&self.atsc), "--epochs", "2", "--batch-size", "8",
            "--lr", "1e-3", "--max-len", "48", "--seed", "2",
        ]);
        with(&[
            "explain", "--model", s(&self.atsc.join("checkpoints/final.ckpt")), "--vocab", s(&vocab), "--input",
            s(&syn("laptops_test.xml")), "--out", s(&self.explain), "--max-len", "48",
        ]);
        with(&["eval-matrix", "--stub", "--seeds", "1,2,3", "--out", s(&self.matrix)]);
        with(&[
            "learning-curve", "--lm-run", s(&self.lm), "--vocab", s(&vocab), "--train", s(&syn("laptops_train.xml")),
            "--test", s(&syn("laptops_test.xml")), "--domain", "laptops", "--seeds", "1,2", "--epochs", "1",
            "--batch-size", "8", "--out", s(&self.curve),
        ]);
        with(&["report", "--runs", s(&self.matrix), "--curves", s(&self.curve), "--out", s(&self.report)]);
    }

    /// Metric logs, result tables and final checkpoints.
    pub fn metric_files(&self) -> Vec<PathBuf> {
        let mut v = vec![
            self.synth.join("manifest.tsv"),
            self.corpus.join("manifest.txt"),
            self.corpus.join("vocab.txt"),
            self.lm.join("metrics.tsv"),
            self.lm.join("snapshots.tsv"),
            self.lm.join("checkpoints/final.ckpt"),
            self.atsc.join("metrics.tsv"),
            self.atsc.join("epochs.tsv"),
            self.atsc.join("test.tsv"),
            self.atsc.join("checkpoints/final.ckpt"),
            self.explain.join("traces.jsonl"),
            self.matrix.join("runs.tsv"),
            self.matrix.join("summary.tsv"),
            self.curve.join("curve.tsv"),
            self.report.join("table.txt"),
            self.report.join("summary.tsv"),
        ];
        for dir in [&self.lm, &self.atsc, &self.curve, &self.matrix] {
            v.push(dir.join("summary.txt"));
        }
        v
    }
}

/// Files in `a` whose bytes differ from their counterpart under `b`.
pub fn differing(a: &Pipeline, b: &Pipeline) -> Vec<String> {
    a.metric_files()
        .iter()
        .zip(b.metric_files())
        .filter(|(x, y)| std::fs::read(x).ok() != std::fs::read(y).ok() || !x.exists())
        .map(|(x, _)| x.display().to_string())
        .collect()
}
