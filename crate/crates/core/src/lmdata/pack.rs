use super::{apply_mlm_mask, make_nsp_pairs, LmDataError, MaskedPairExample, MaskingPolicy, NspPair};
use crate::exec::Exec;
use crate::seed;
use crate::text::{ReviewDoc, Vocab};

/// Token budget of one segment: `(max_len - 3) / 2`.
pub fn segment_budget(max_len: usize) -> usize {
    max_len.saturating_sub(3) / 2
}

/// `[CLS] a [SEP] b [SEP]`, truncating `b` from the end (down to one token)
/// and then `a`, and padding with `[PAD]` to `max_len`. Padding carries
/// segment id 1.
pub fn encode_pair(a: &[u32], b: &[u32], max_len: usize) -> Result<(Vec<u32>, Vec<u8>), LmDataError> {
    if a.is_empty() || b.is_empty() {
        return Err(LmDataError::DegenerateSequence("empty segment".into()));
    }
    let room = max_len.saturating_sub(3);
    if room < 2 {
        return Err(LmDataError::DegenerateSequence(format!("max_len {max_len} leaves no room for two segments")));
    }
    let mut a_len = a.len();
    let mut b_len = b.len();
    if a_len + b_len > room {
        b_len = room.saturating_sub(a_len).max(1);
        a_len = a_len.min(room - b_len);
    }
    let s = Vocab::specials();
    let mut ids = Vec::with_capacity(max_len);
    ids.push(s.cls);
    ids.extend_from_slice(&a[..a_len]);
    ids.push(s.sep);
    let first = ids.len();
    ids.extend_from_slice(&b[..b_len]);
    ids.push(s.sep);
    let mut segs = vec![0u8; first];
    segs.resize(ids.len(), 1);
    ids.resize(max_len, s.pad);
    segs.resize(max_len, 1);
    Ok((ids, segs))
}

/// Greedy packing of each pair into one sequence. Segment A grows backwards
/// from the anchor (so a true successor still follows it directly), segment B
/// grows forward from its start sentence; each stays within
/// [`segment_budget`] unless a single sentence is already longer.
pub fn pack_and_encode(
    pairs: &[NspPair],
    docs: &[ReviewDoc],
    vocab: &Vocab,
    max_len: usize,
) -> Result<Vec<MaskedPairExample>, LmDataError> {
    let budget = segment_budget(max_len);
    let encoded: Vec<Vec<Vec<u32>>> =
        docs.iter().map(|d| d.sentences.iter().map(|s| vocab.encode(s)).collect()).collect();
    pairs
        .iter()
        .map(|p| {
            let da = &encoded[p.a.doc];
            let mut a_sents = vec![p.a.sentence];
            let mut a_len = da[p.a.sentence].len();
            while let Some(prev) = a_sents[0].checked_sub(1) {
                if a_len + da[prev].len() > budget {
                    break;
                }
                a_len += da[prev].len();
                a_sents.insert(0, prev);
            }
            let db = &encoded[p.b.doc];
            let mut b_end = p.b.sentence + 1;
            let mut b_len = db[p.b.sentence].len();
            while b_end < db.len() && b_len + db[b_end].len() <= budget {
                b_len += db[b_end].len();
                b_end += 1;
            }
            let a: Vec<u32> = a_sents.iter().flat_map(|&i| da[i].iter().copied()).collect();
            let b: Vec<u32> = db[p.b.sentence..b_end].iter().flatten().copied().collect();
            let (input_ids, segment_ids) = encode_pair(&a, &b, max_len)?;
            Ok(MaskedPairExample {
                input_ids,
                segment_ids,
                mlm_positions: vec![],
                mlm_labels: vec![],
                nsp_label: p.is_next,
                sentences: (a_sents.len() + b_end - p.b.sentence) as u32,
            })
        })
        .collect()
}

/// Full generation: pairs, packing, then masking each sequence with its own
/// derived stream. Masking runs through `exec`; output is identical in both
/// modes.
pub fn generate_examples(
    docs: &[ReviewDoc],
    vocab: &Vocab,
    policy: &MaskingPolicy,
    max_len: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<MaskedPairExample>, LmDataError> {
    policy.validate()?;
    let pairs = make_nsp_pairs(docs, seed::derive(seed, "nsp"))?;
    let packed = pack_and_encode(&pairs, docs, vocab, max_len)?;
    let mask_seed = seed::derive(seed, "mlm");
    let idx: Vec<usize> = (0..packed.len()).collect();
    Ok(exec.map(&idx, |&i| {
        let ex = &packed[i];
        let mut rng = seed::rng(seed::shard(mask_seed, i as u64));
        let m = apply_mlm_mask(&ex.input_ids, policy, vocab.len(), &mut rng);
        MaskedPairExample { input_ids: m.input_ids, mlm_positions: m.positions, mlm_labels: m.labels, ..ex.clone() }
    }))
}
