use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{generate_examples, LmDataError, MaskedPairExample, MaskingPolicy};
use crate::exec::Exec;
use crate::text::{ReviewDoc, Vocab};

const MAGIC: &str = "absa-lab shard v1";

/// Plain-text shard header.
#[derive(Debug, Clone, PartialEq)]
pub struct ShardHeader {
    pub vocab_hash: String,
    pub max_len: usize,
    pub policy: MaskingPolicy,
    pub seed: u64,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub header: ShardHeader,
    pub examples: Vec<MaskedPairExample>,
}

fn put_u32s(buf: &mut Vec<u8>, xs: impl ExactSizeIterator<Item = u32>) {
    buf.extend_from_slice(&(xs.len() as u32).to_le_bytes());
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

fn encode_record(ex: &MaskedPairExample) -> Vec<u8> {
    let mut b = Vec::new();
    put_u32s(&mut b, ex.input_ids.iter().copied());
    b.extend(ex.segment_ids.iter().copied());
    put_u32s(&mut b, ex.mlm_positions.iter().copied());
    b.extend(ex.mlm_labels.iter().flat_map(|x| x.to_le_bytes()));
    b.push(u8::from(ex.nsp_label));
    b.extend_from_slice(&ex.sentences.to_le_bytes());
    b
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LmDataError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| LmDataError::CorruptShard("truncated record".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, LmDataError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>, LmDataError> {
        (0..n).map(|_| self.u32()).collect()
    }
}

fn decode_record(buf: &[u8]) -> Result<MaskedPairExample, LmDataError> {
    let mut c = Cursor { buf, pos: 0 };
    let n = c.u32()? as usize;
    let input_ids = c.u32s(n)?;
    let segment_ids = c.take(n)?.to_vec();
    let m = c.u32()? as usize;
    let mlm_positions = c.u32s(m)?;
    let mlm_labels = c.u32s(m)?;
    let nsp_label = match c.take(1)?[0] {
        0 => false,
        1 => true,
        x => return Err(LmDataError::CorruptShard(format!("bad nsp byte {x}"))),
    };
    let sentences = c.u32()?;
    if c.pos != buf.len() {
        return Err(LmDataError::CorruptShard("trailing bytes in record".into()));
    }
    let ex = MaskedPairExample { input_ids, segment_ids, mlm_positions, mlm_labels, nsp_label, sentences };
    ex.check().map_err(LmDataError::CorruptShard)?;
    Ok(ex)
}

/// Write a shard: text header terminated by a blank line, then records, each
/// prefixed by its byte length (u32, little-endian).
pub fn write_shard<W: Write>(mut w: W, header: &ShardHeader, examples: &[MaskedPairExample]) -> Result<(), LmDataError> {
    write!(
        w,
        "{MAGIC}\nvocab_hash={}\nmax_len={}\npolicy={}\nseed={}\nrecords={}\n\n",
        header.vocab_hash,
        header.max_len,
        header.policy.to_header(),
        header.seed,
        examples.len()
    )?;
    for ex in examples {
        let rec = encode_record(ex);
        w.write_all(&(rec.len() as u32).to_le_bytes())?;
        w.write_all(&rec)?;
    }
    Ok(())
}

pub fn read_shard<R: Read>(mut r: R) -> Result<Shard, LmDataError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let corrupt = |m: &str| LmDataError::CorruptShard(m.to_string());
    let split = bytes.windows(2).position(|w| w == b"\n\n").ok_or_else(|| corrupt("missing header terminator"))?;
    let head = std::str::from_utf8(&bytes[..split]).map_err(|_| corrupt("header is not UTF-8"))?;
    let mut lines = head.lines();
    if lines.next() != Some(MAGIC) {
        return Err(corrupt("bad magic line"));
    }
    let mut kv = std::collections::HashMap::new();
    for line in lines {
        let (k, v) = line.split_once('=').ok_or_else(|| corrupt("bad header line"))?;
        kv.insert(k, v);
    }
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| corrupt(&format!("header lacks {k}")));
    let num = |k: &str| -> Result<u64, LmDataError> { get(k)?.parse().map_err(|_| corrupt(&format!("bad {k}"))) };
    let header = ShardHeader {
        vocab_hash: get("vocab_hash")?.to_string(),
        max_len: num("max_len")? as usize,
        policy: MaskingPolicy::from_header(get("policy")?).ok_or_else(|| corrupt("bad policy"))?,
        seed: num("seed")?,
        records: num("records")? as usize,
    };
    let mut c = Cursor { buf: &bytes, pos: split + 2 };
    let mut examples = Vec::with_capacity(header.records);
    for _ in 0..header.records {
        let len = c.u32()? as usize;
        let ex = decode_record(c.take(len)?)?;
        if ex.input_ids.len() != header.max_len {
            return Err(corrupt("record length differs from max_len"));
        }
        examples.push(ex);
    }
    if c.pos != bytes.len() {
        return Err(corrupt("trailing data after last record"));
    }
    Ok(Shard { header, examples })
}

impl Shard {
    /// Generate one masked shard from `docs`.
    pub fn build(
        docs: &[ReviewDoc],
        vocab: &Vocab,
        policy: &MaskingPolicy,
        max_len: usize,
        seed: u64,
        exec: Exec,
    ) -> Result<Shard, LmDataError> {
        let examples = generate_examples(docs, vocab, policy, max_len, seed, exec)?;
        let header = ShardHeader { vocab_hash: vocab.hash(), max_len, policy: *policy, seed, records: examples.len() };
        Ok(Shard { header, examples })
    }

    pub fn save(&self, path: &Path) -> Result<(), LmDataError> {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        write_shard(&mut f, &self.header, &self.examples)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Shard, LmDataError> {
        read_shard(fs::File::open(path)?)
    }
}

/// Pair counts and label balance, written next to each shard.
#[derive(Debug, Clone, PartialEq)]
pub struct ShardStats {
    pub pairs: usize,
    pub is_next: usize,
    pub not_next: usize,
    pub masked_positions: usize,
    pub sentences: usize,
}

impl ShardStats {
    pub fn is_next_fraction(&self) -> f64 {
        self.is_next as f64 / self.pairs.max(1) as f64
    }

    pub fn mean_sentences_per_sequence(&self) -> f64 {
        self.sentences as f64 / self.pairs.max(1) as f64
    }
}

pub fn shard_stats(examples: &[MaskedPairExample]) -> ShardStats {
    let is_next = examples.iter().filter(|e| e.nsp_label).count();
    ShardStats {
        pairs: examples.len(),
        is_next,
        not_next: examples.len() - is_next,
        masked_positions: examples.iter().map(|e| e.mlm_positions.len()).sum(),
        sentences: examples.iter().map(|e| e.sentences as usize).sum(),
    }
}

impl fmt::Display for ShardStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pairs = {}", self.pairs)?;
        writeln!(f, "is_next = {}", self.is_next)?;
        writeln!(f, "not_next = {}", self.not_next)?;
        writeln!(f, "is_next_fraction = {:.6}", self.is_next_fraction())?;
        writeln!(f, "masked_positions = {}", self.masked_positions)?;
        writeln!(f, "sentences = {}", self.sentences)?;
        writeln!(f, "mean_sentences_per_sequence = {:.4}", self.mean_sentences_per_sequence())
    }
}
