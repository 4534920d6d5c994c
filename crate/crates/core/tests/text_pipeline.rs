use std::collections::HashSet;
use std::path::PathBuf;

use absa_lab::text::{
    dedup_against_eval, filter_short_reviews, normalize_sentence, parse_semeval_str, parse_semeval_xml,
    read_reviews, sample_sentences, split_sentences, ReviewDoc, Split,
};
use absa_lab::{Domain, Polarity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn splitter_matches_golden_segmentation() {
    let golden = std::fs::read_to_string(fixture("split_golden.txt")).unwrap();
    let blocks: Vec<Vec<&str>> = golden.trim().split("\n\n").map(|b| b.lines().collect()).collect();
    let reviews = read_reviews(&fixture("split_reviews.jsonl")).unwrap();
    assert_eq!(reviews.len(), 100);
    assert_eq!(blocks.len(), 100);
    for (r, want) in reviews.iter().zip(&blocks) {
        assert_eq!(split_sentences(&r.text), *want, "review {:?}", r.id);
    }
}

#[test]
fn split_output_concatenates_back_to_input() {
    for r in read_reviews(&fixture("split_reviews.jsonl")).unwrap() {
        let squash = |s: &str| s.split_whitespace().collect::<String>();
        assert_eq!(squash(&split_sentences(&r.text).concat()), squash(&r.text));
    }
}

const WORDS: &[&str] = &["the", "food", "was", "great", "slow", "screen", "battery", "is", "ok", "we", "left"];
const ABBREV: &[&str] = &["Dr.", "e.g.", "etc.", "Mr.", "vs."];

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..8);
    let mut w: Vec<String> = (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())].to_string()).collect();
    if rng.gen_bool(0.2) {
        w.insert(1, ABBREV[rng.gen_range(0..ABBREV.len())].to_string());
    }
    let end = ['.', '!', '?'][rng.gen_range(0..3)];
    format!("{}{end}", w.join(" "))
}

#[test]
fn filter_on_thousand_reviews_matches_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut known = Vec::new();
    let docs: Vec<ReviewDoc> = (0..1000)
        .map(|i| {
            let k = rng.gen_range(1..=4);
            known.push(k);
            let text: Vec<String> = (0..k).map(|_| sentence(&mut rng)).collect();
            ReviewDoc::from_text(format!("d{i}"), &text.join(" "), Domain::Laptops)
        })
        .collect();
    for (d, &k) in docs.iter().zip(&known) {
        assert_eq!(d.num_sentences(), k, "{}", d.doc_id);
    }
    let expected: Vec<String> = docs.iter().zip(&known).filter(|(_, &k)| k >= 2).map(|(d, _)| d.doc_id.clone()).collect();
    let kept: Vec<String> = filter_short_reviews(docs).into_iter().map(|d| d.doc_id).collect();
    assert_eq!(kept, expected);
}

#[test]
fn dedup_planted_overlap_keeps_exactly_450() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let eval_raw: Vec<String> = (0..50).map(|i| format!("Eval sentence number {i} is unique.")).collect();
    let eval: HashSet<String> = eval_raw.iter().map(|s| normalize_sentence(s)).collect();
    let mut contaminated = HashSet::new();
    while contaminated.len() < 50 {
        contaminated.insert(rng.gen_range(0..500));
    }
    let mut k = 0;
    let docs: Vec<ReviewDoc> = (0..500)
        .map(|i| {
            let mut parts = vec![sentence(&mut rng), sentence(&mut rng)];
            if contaminated.contains(&i) {
                let s = eval_raw[k % 50].to_uppercase().replace(' ', "   ");
                k += 1;
                parts.insert(rng.gen_range(0..=2), s);
            }
            ReviewDoc::from_text(format!("d{i}"), &parts.join(" "), Domain::Restaurants)
        })
        .collect();
    let out = dedup_against_eval(docs, &eval);
    assert_eq!(out.len(), 450);
    assert!(out.iter().all(|d| !contaminated.contains(&d.doc_id[1..].parse::<usize>().unwrap())));
}

#[test]
fn sampling_takes_whole_documents_up_to_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let docs: Vec<ReviewDoc> = (0..200)
        .map(|i| {
            let k = rng.gen_range(2..=6);
            let text: Vec<String> = (0..k).map(|_| sentence(&mut rng)).collect();
            ReviewDoc::from_text(format!("d{i}"), &text.join(" "), Domain::Laptops)
        })
        .collect();
    let max_doc = docs.iter().map(ReviewDoc::num_sentences).max().unwrap();
    for seed in 0..20 {
        let got = sample_sentences(docs.clone(), 100, seed).unwrap();
        let total: usize = got.iter().map(ReviewDoc::num_sentences).sum();
        assert!((100..100 + max_doc).contains(&total), "seed {seed}: {total}");
        for d in &got {
            assert!(docs.contains(d));
        }
    }
}

fn manifest() -> std::collections::HashMap<String, usize> {
    std::fs::read_to_string(fixture("semeval_fixture.manifest"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.trim().to_string(), v.trim().parse().unwrap())
        })
        .collect()
}

#[test]
fn semeval_fixture_counts_equal_manifest() {
    let m = manifest();
    let (ex, counts) = parse_semeval_xml(&fixture("semeval_fixture.xml"), Domain::Restaurants, Split::Train).unwrap();
    assert_eq!(counts.train.positive, m["positive"]);
    assert_eq!(counts.train.negative, m["negative"]);
    assert_eq!(counts.train.neutral, m["neutral"]);
    assert_eq!(counts.conflict_dropped, m["conflict_dropped"]);
    assert_eq!(counts.test.total(), 0);
    assert_eq!(ex.len(), counts.train.total());
    assert_eq!(ex.iter().filter(|e| e.target_len > 1).count(), m["multi_word_targets"]);
    assert!(ex.iter().all(|e| e.is_valid()));
}

#[test]
fn semeval_targets_resolve_to_token_spans() {
    let (ex, _) = parse_semeval_xml(&fixture("semeval_fixture.xml"), Domain::Restaurants, Split::Train).unwrap();
    let targets: Vec<String> = ex.iter().map(|e| e.target().join(" ")).collect();
    for want in ["fish & chips", "waiter ' s picks", "crème brûlée", "prix fixe menu", "dumplings"] {
        assert!(targets.contains(&want.to_string()), "{want} missing from {targets:?}");
    }
    let prices = ex.iter().find(|e| e.target() == ["prices"]).unwrap();
    assert_eq!(prices.tokens, ["prices", "are", "\"", "reasonable", "\"", "<", "for", ">", "the", "area", "."]);
    assert_eq!(prices.label, Polarity::Neutral);
}

#[test]
fn three_sentences_one_conflict() {
    let xml = r#"<sentences>
      <sentence id="1"><text>Great sushi.</text><aspectTerms>
        <aspectTerm term="sushi" polarity="positive" from="6" to="11"/></aspectTerms></sentence>
      <sentence id="2"><text>The decor is odd.</text><aspectTerms>
        <aspectTerm term="decor" polarity="conflict" from="4" to="9"/></aspectTerms></sentence>
      <sentence id="3"><text>Slow waiters.</text><aspectTerms>
        <aspectTerm term="waiters" polarity="negative" from="5" to="12"/></aspectTerms></sentence>
    </sentences>"#;
    let (ex, counts) = parse_semeval_str(xml, Domain::Restaurants, Split::Test).unwrap();
    assert_eq!(ex.len(), 2);
    assert_eq!(counts.conflict_dropped, 1);
    assert_eq!((counts.test.positive, counts.test.negative), (1, 1));
}

/// Published label counts, checked only when the official files are provided via
/// `SEMEVAL_DIR`.
#[test]
fn official_files_match_published_counts() {
    let Ok(dir) = std::env::var("SEMEVAL_DIR") else {
        eprintln!("SEMEVAL_DIR not set, skipping");
        return;
    };
    let dir = PathBuf::from(dir);
    let cases = [
        ("Laptops_Train.xml", Domain::Laptops, Split::Train, (987, 866, 460)),
        ("Laptops_Test_Gold.xml", Domain::Laptops, Split::Test, (341, 128, 169)),
        ("Restaurants_Train.xml", Domain::Restaurants, Split::Train, (2164, 805, 633)),
        ("Restaurants_Test_Gold.xml", Domain::Restaurants, Split::Test, (728, 196, 196)),
    ];
    for (file, domain, split, want) in cases {
        let path = dir.join(file);
        if !path.exists() {
            eprintln!("{} missing, skipping", path.display());
            continue;
        }
        let (_, counts) = parse_semeval_xml(&path, domain, split).unwrap();
        let c = if split == Split::Train { counts.train } else { counts.test };
        assert_eq!((c.positive, c.negative, c.neutral), want, "{file}");
    }
}
