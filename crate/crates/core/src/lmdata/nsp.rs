use rand::Rng;

use super::LmDataError;
use crate::seed;
use crate::text::ReviewDoc;

/// Position of a sentence inside a document list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SentenceRef {
    pub doc: usize,
    pub sentence: usize,
}

/// Anchor sentence `a`, candidate continuation `b`, and whether `b` truly
/// follows `a` in its document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NspPair {
    pub a: SentenceRef,
    pub b: SentenceRef,
    pub is_next: bool,
}

pub fn make_nsp_pairs(docs: &[ReviewDoc], seed: u64) -> Result<Vec<NspPair>, LmDataError> {
    make_nsp_pairs_with_rate(docs, seed, 0.5)
}

/// One pair per adjacent sentence position. With probability `next_rate` the
/// true successor is used; otherwise `b` is drawn uniformly from the
/// sentences of all other documents. Each document draws from its own stream
/// (`seed ^ doc_index`), so the result does not depend on how documents are
/// distributed over workers.
pub fn make_nsp_pairs_with_rate(
    docs: &[ReviewDoc],
    seed: u64,
    next_rate: f64,
) -> Result<Vec<NspPair>, LmDataError> {
    if docs.len() < 2 {
        return Err(LmDataError::InsufficientData(
            "negative next-sentence pairs need at least two documents".into(),
        ));
    }
    if let Some(d) = docs.iter().find(|d| d.num_sentences() < 2) {
        return Err(LmDataError::ShortDocument(d.doc_id.clone()));
    }
    let offsets: Vec<usize> = docs
        .iter()
        .scan(0, |acc, d| {
            let start = *acc;
            *acc += d.num_sentences();
            Some(start)
        })
        .collect();
    let total: usize = docs.iter().map(ReviewDoc::num_sentences).sum();

    let mut out = Vec::new();
    for (di, doc) in docs.iter().enumerate() {
        let mut rng = seed::rng(seed::shard(seed, di as u64));
        let len = doc.num_sentences();
        for si in 0..len - 1 {
            let a = SentenceRef { doc: di, sentence: si };
            if rng.gen_bool(next_rate) {
                out.push(NspPair { a, b: SentenceRef { doc: di, sentence: si + 1 }, is_next: true });
                continue;
            }
            // Uniform over the sentences outside this document.
            let mut r = rng.gen_range(0..total - len);
            if r >= offsets[di] {
                r += len;
            }
            let bd = offsets.partition_point(|&o| o <= r) - 1;
            out.push(NspPair { a, b: SentenceRef { doc: bd, sentence: r - offsets[bd] }, is_next: false });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::Domain;

    fn doc(id: &str, n: usize) -> ReviewDoc {
        ReviewDoc {
            doc_id: id.into(),
            sentences: (0..n).map(|i| vec![format!("{id}{i}")]).collect(),
            domain: Domain::Laptops,
        }
    }

    #[test]
    fn forced_positive_uses_successor() {
        let docs = [doc("a", 2), doc("b", 2)];
        let pairs = make_nsp_pairs_with_rate(&docs, 1, 1.0).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0], NspPair {
            a: SentenceRef { doc: 0, sentence: 0 },
            b: SentenceRef { doc: 0, sentence: 1 },
            is_next: true
        });
    }

    #[test]
    fn forced_negative_comes_from_other_doc() {
        let docs = [doc("a", 2), doc("b", 2)];
        for seed in 0..50 {
            let pairs = make_nsp_pairs_with_rate(&docs, seed, 0.0).unwrap();
            assert_eq!(pairs[0].b.doc, 1);
            assert_eq!(pairs[1].b.doc, 0);
        }
    }

    #[test]
    fn negatives_cover_every_foreign_sentence() {
        let docs = [doc("a", 3), doc("b", 2), doc("c", 4)];
        let mut seen = std::collections::HashSet::new();
        for seed in 0..200 {
            for p in make_nsp_pairs_with_rate(&docs, seed, 0.0).unwrap() {
                assert_ne!(p.a.doc, p.b.doc);
                assert!(p.b.sentence < docs[p.b.doc].num_sentences());
                seen.insert(p.b);
            }
        }
        assert_eq!(seen.len(), 9);
    }

    #[test]
    fn rejects_single_doc_and_short_docs() {
        assert!(matches!(make_nsp_pairs(&[doc("a", 5)], 0), Err(LmDataError::InsufficientData(_))));
        assert!(matches!(make_nsp_pairs(&[doc("a", 5), doc("b", 1)], 0), Err(LmDataError::ShortDocument(_))));
    }
}
